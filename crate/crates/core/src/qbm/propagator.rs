//! The propagator function G = lambda^2 F of the damped oscillator.
//!
//! G solves G'' + W0^2 G + (2/M) int_0^tau mu(tau - s) G(s) ds = 0 with
//! G(0) = 0, G'(0) = 1. Integrating twice gives the second-kind Volterra
//! equation G(tau) = tau - int_0^tau k(tau - s) G(s) ds with
//! k(u) = W0^2 u + (2/M) int_0^u (u - v) mu(v) dv. Since k(0) = 0 the
//! trapezoid rule is explicit. Three step sizes are combined by Richardson
//! extrapolation in h^2 and h^4.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::kernels::{laplace_dissipation_kernel, KernelSet};
use crate::error::{invalid, Error, Result};
use crate::model::{BathSpectrum, CouplingScale, OscillatorParams};
use crate::numerics::quad::gauss_legendre_16;
use crate::numerics::spline::{hermite_eval, CubicSpline};
use crate::spectral::renormalized_frequency_sq;

/// Largest admissible disagreement between the two Bromwich abscissae.
pub const BROMWICH_AGREEMENT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorFunction {
    pub tau: Vec<f64>,
    pub g: Vec<f64>,
    pub g_dot: Vec<f64>,
    pub g_ddot: Option<Vec<f64>>,
    pub g_dddot: Option<Vec<f64>>,
    pub lambda: CouplingScale,
    /// Estimated max-norm error of `g`.
    pub error_estimate: f64,
}

impl PropagatorFunction {
    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.g.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn grid_index(&self, tau: f64) -> Option<usize> {
        let scale = self.tau.last().copied().unwrap_or(1.0).abs().max(1.0);
        let i = match self.tau.binary_search_by(|v| v.total_cmp(&tau)) {
            Ok(i) => i,
            Err(i) => {
                let lo = i.saturating_sub(1);
                let hi = i.min(self.tau.len() - 1);
                if (self.tau[lo] - tau).abs() <= (self.tau[hi] - tau).abs() {
                    lo
                } else {
                    hi
                }
            }
        };
        ((self.tau[i] - tau).abs() <= 1e-12 * scale).then_some(i)
    }

    /// G and its first three derivatives at tau; off-grid points are
    /// interpolated, missing derivative columns come from splines.
    pub fn derivatives_at(&self, tau: f64) -> Result<[f64; 4]> {
        let n = self.tau.len();
        if n < 2 {
            return Err(invalid("tau", "propagator table has fewer than two points"));
        }
        if tau < self.tau[0] || tau > self.tau[n - 1] {
            return Err(invalid(
                "tau",
                format!("{tau} outside [{}, {}]", self.tau[0], self.tau[n - 1]),
            ));
        }
        let ddot = match &self.g_ddot {
            Some(v) => v.clone(),
            None => CubicSpline::new(&self.tau, &self.g_dot)?.knot_slopes().to_vec(),
        };
        let dddot = match &self.g_dddot {
            Some(v) => v.clone(),
            None => CubicSpline::new(&self.tau, &ddot)?.knot_slopes().to_vec(),
        };
        if let Some(i) = self.grid_index(tau) {
            return Ok([self.g[i], self.g_dot[i], ddot[i], dddot[i]]);
        }
        let g = hermite_eval(&self.tau, &self.g, &self.g_dot, tau);
        let gd = hermite_eval(&self.tau, &self.g_dot, &ddot, tau);
        let gdd = hermite_eval(&self.tau, &ddot, &dddot, tau);
        let gddd = CubicSpline::new(&self.tau, &dddot)?.eval(tau);
        Ok([g, gd, gdd, gddd])
    }
}

/// Sum_{j=0}^{n} ker[n - j] f[j], with the kernel stored reversed.
fn reversed_dot(rev: &[f64], f: &[f64], n: usize, lo: usize) -> f64 {
    let last = rev.len() - 1;
    let a = &rev[last - n + lo..=last];
    let b = &f[lo..=n];
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for k in 0..4 {
            acc[k] += a[4 * c + k] * b[4 * c + k];
        }
    }
    for i in 4 * chunks..a.len() {
        acc[0] += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

fn reversed(v: &[f64]) -> Vec<f64> {
    v.iter().rev().copied().collect()
}

/// Trapezoid values of int_0^{tau_n} ker(tau_n - s) f(s) ds for all n.
pub(crate) fn trapezoid_convolution(ker: &[f64], f: &[f64], h: f64) -> Vec<f64> {
    let rev = reversed(ker);
    (0..f.len())
        .into_par_iter()
        .map(|n| {
            if n == 0 {
                return 0.0;
            }
            h * (reversed_dot(&rev, f, n, 0) - 0.5 * (ker[n] * f[0] + ker[0] * f[n]))
        })
        .collect()
}

/// Trapezoid sweep of the Volterra equation; `k` must vanish at zero.
pub(crate) fn volterra_sweep(tau: &[f64], k: &[f64], h: f64) -> Vec<f64> {
    let rev = reversed(k);
    let mut g = vec![0.0; tau.len()];
    for n in 1..tau.len() {
        let s = if n > 1 {
            // the j = n term carries k(0) = 0 and is absent from the slice
            let last = rev.len() - 1;
            let a = &rev[last - n + 1..last];
            let b = &g[1..n];
            if a.len() > 16_384 {
                // partial sums are collected in order so the result is deterministic
                let parts: Vec<f64> = a
                    .par_chunks(4096)
                    .zip(b.par_chunks(4096))
                    .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
                    .collect();
                parts.iter().sum()
            } else {
                let mut acc = [0.0; 4];
                let chunks = a.len() / 4;
                for c in 0..chunks {
                    for q in 0..4 {
                        acc[q] += a[4 * c + q] * b[4 * c + q];
                    }
                }
                for i in 4 * chunks..a.len() {
                    acc[0] += a[i] * b[i];
                }
                (acc[0] + acc[1]) + (acc[2] + acc[3])
            }
        } else {
            0.0
        };
        g[n] = tau[n] - h * s;
    }
    g
}

/// G, G', G'', G''' on one trapezoid level.
pub(crate) fn propagator_level(kernels: &KernelSet, stride: usize, omega0: f64, mass: f64) -> [Vec<f64>; 4] {
    let tau: Vec<f64> = kernels.tau.iter().step_by(stride).copied().collect();
    let h = tau[1] - tau[0];
    let w2 = omega0 * omega0;
    let pick = |col: &[f64]| -> Vec<f64> { col.iter().step_by(stride).copied().collect() };
    let mu = pick(&kernels.mu);
    let k: Vec<f64> = tau
        .iter()
        .zip(pick(&kernels.mu_int2))
        .map(|(t, m2)| w2 * t + 2.0 / mass * m2)
        .collect();
    let kp: Vec<f64> = pick(&kernels.mu_int).iter().map(|m1| w2 + 2.0 / mass * m1).collect();
    let g = volterra_sweep(&tau, &k, h);
    let g_dot: Vec<f64> = trapezoid_convolution(&kp, &g, h).iter().map(|c| 1.0 - c).collect();
    let mg = trapezoid_convolution(&mu, &g, h);
    let g_ddot: Vec<f64> = g.iter().zip(&mg).map(|(g, c)| -w2 * g - 2.0 / mass * c).collect();
    let mgd = trapezoid_convolution(&mu, &g_dot, h);
    let g_dddot: Vec<f64> = g_dot.iter().zip(&mgd).map(|(g, c)| -w2 * g - 2.0 / mass * c).collect();
    [g, g_dot, g_ddot, g_dddot]
}

/// Combines columns computed with steps h, h/2, h/4 onto the coarse grid.
/// Returns the extrapolated columns and max |R2 - R1| per column.
pub(crate) fn richardson(levels: &[Vec<Vec<f64>>; 3], coarse_len: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let ncol = levels[0].len();
    let mut out = Vec::with_capacity(ncol);
    let mut err = Vec::with_capacity(ncol);
    for c in 0..ncol {
        let mut col = Vec::with_capacity(coarse_len);
        let mut e: f64 = 0.0;
        for i in 0..coarse_len {
            let a0 = levels[0][c][i];
            let a1 = levels[1][c][2 * i];
            let a2 = levels[2][c][4 * i];
            let r1a = (4.0 * a1 - a0) / 3.0;
            let r1b = (4.0 * a2 - a1) / 3.0;
            let r2 = (16.0 * r1b - r1a) / 15.0;
            e = e.max((r2 - r1b).abs());
            col.push(r2);
        }
        out.push(col);
        err.push(e);
    }
    (out, err)
}

/// Coarse step for the Richardson base level: resolves the memory time
/// lambda^2 / w_c and the oscillation period.
pub(crate) fn base_step(lambda: CouplingScale, bath: &BathSpectrum, osc: &OscillatorParams) -> f64 {
    let memory = lambda.squared() / bath.cutoff() / 6.0;
    memory.min(10.0 / (4096.0 * osc.omega0()))
}

pub(crate) fn fine_kernels(
    lambda: CouplingScale,
    bath: &BathSpectrum,
    osc: &OscillatorParams,
    tau_max: f64,
    h0: f64,
) -> Result<(KernelSet, usize)> {
    let n = (tau_max / h0).ceil().max(2.0) as usize;
    let fine_n = 4 * n;
    let hf = tau_max / fine_n as f64;
    let tau: Vec<f64> = (0..=fine_n)
        .map(|i| if i == fine_n { tau_max } else { i as f64 * hf })
        .collect();
    Ok((KernelSet::tabulate(&tau, lambda, bath, osc)?, n))
}

pub(crate) const MAX_REFINEMENTS: usize = 3;

/// Volterra solution on [0, tau_max] with Richardson error below `tol`.
pub fn solve_propagator(
    lambda: CouplingScale,
    bath: &BathSpectrum,
    osc: &OscillatorParams,
    tau_max: f64,
    tol: f64,
) -> Result<PropagatorFunction> {
    if !(tau_max > 0.0) || !tau_max.is_finite() {
        return Err(invalid("tau_max", "must be positive"));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let mut h0 = base_step(lambda, bath, osc);
    let mut achieved = f64::INFINITY;
    for _ in 0..MAX_REFINEMENTS {
        let (kernels, n) = fine_kernels(lambda, bath, osc, tau_max, h0)?;
        let levels: [Vec<Vec<f64>>; 3] =
            [4, 2, 1].map(|stride| propagator_level(&kernels, stride, osc.omega0(), osc.mass()).to_vec());
        let (cols, err) = richardson(&levels, n + 1);
        let scale = cols[0].iter().fold(1.0f64, |m, v| m.max(v.abs()));
        achieved = err[0].max(err[1]) / scale;
        if achieved <= tol {
            let mut cols = cols.into_iter();
            let tau: Vec<f64> = kernels.tau.iter().step_by(4).copied().collect();
            let mut g = cols.next().unwrap();
            let mut g_dot = cols.next().unwrap();
            g[0] = 0.0;
            g_dot[0] = 1.0;
            return Ok(PropagatorFunction {
                tau,
                g,
                g_dot,
                g_ddot: cols.next(),
                g_dddot: cols.next(),
                lambda,
                error_estimate: err[0],
            });
        }
        log::debug!("propagator refinement: h0 = {h0:.3e}, error {achieved:.3e}");
        h0 *= 0.5;
    }
    Err(Error::Accuracy {
        context: "Volterra propagator".into(),
        achieved,
        target: tol,
    })
}

fn resonance_panels(sigma: f64, omega0: f64, y_max: f64, far_width: f64) -> Vec<(f64, f64)> {
    let near_end = (3.0 * omega0).min(y_max);
    let mut panels = Vec::new();
    let near = ((near_end / (0.25 * sigma)).ceil() as usize).max(1);
    for i in 0..near {
        let a = near_end * i as f64 / near as f64;
        let b = near_end * (i + 1) as f64 / near as f64;
        panels.push((a, b));
    }
    let far = (((y_max - near_end) / far_width).ceil() as usize).max(1);
    for i in 0..far {
        let a = near_end + (y_max - near_end) * i as f64 / far as f64;
        let b = near_end + (y_max - near_end) * (i + 1) as f64 / far as f64;
        panels.push((a, b));
    }
    panels
}

/// Bromwich inversion at abscissa `sigma` of the residual after removing the
/// free oscillator at the renormalized frequency. Returns (G, G').
fn bromwich(
    lambda: CouplingScale,
    bath: &BathSpectrum,
    osc: &OscillatorParams,
    tau_grid: &[f64],
    sigma: f64,
    omega_r_sq: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let l2 = lambda.squared();
    let w0 = osc.omega0();
    let tau_max = tau_grid.iter().fold(0.0f64, |m, t| m.max(*t));
    let y_max = (40.0 * w0).max(20.0 * bath.cutoff() / l2);
    let far_width = (PI / (2.0 * tau_max.max(1e-12))).min(w0);
    let rule = gauss_legendre_16();
    let mut nodes = Vec::new();
    for (a, b) in resonance_panels(sigma, w0, y_max, far_width) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, w) in rule.nodes().iter().zip(rule.weights()) {
            nodes.push((mid + half * x, w * half));
        }
    }
    let mass = osc.mass();
    let residuals: Vec<(f64, f64, Complex64, Complex64)> = nodes
        .par_iter()
        .map(|&(y, w)| {
            let s = Complex64::new(sigma, y);
            let muhat = if bath.eta() == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                laplace_dissipation_kernel(s * l2, bath, osc)?
            };
            let g_hat = 1.0 / (s * s + w0 * w0 + muhat * (2.0 / mass));
            let r = g_hat - 1.0 / (s * s + omega_r_sq);
            Ok((y, w, r, r * s))
        })
        .collect::<Result<_>>()?;
    let omega_r = omega_r_sq.sqrt();
    let out: Vec<(f64, f64)> = tau_grid
        .par_iter()
        .map(|&tau| {
            let mut acc_g = 0.0;
            let mut acc_d = 0.0;
            for &(y, w, r, rs) in &residuals {
                let e = Complex64::from_polar(1.0, y * tau);
                acc_g += w * (r * e).re;
                acc_d += w * (rs * e).re;
            }
            let amp = (sigma * tau).exp() / PI;
            (
                (omega_r * tau).sin() / omega_r + amp * acc_g,
                (omega_r * tau).cos() + amp * acc_d,
            )
        })
        .collect();
    Ok(out.into_iter().unzip())
}

/// G and G' by numerical inverse Laplace transform on a vertical contour.
/// Two abscissae are evaluated; disagreement beyond `BROMWICH_AGREEMENT`
/// is reported as an inversion failure.
pub fn propagator_via_laplace(
    lambda: CouplingScale,
    bath: &BathSpectrum,
    osc: &OscillatorParams,
    tau_grid: &[f64],
) -> Result<PropagatorFunction> {
    if tau_grid.is_empty() || tau_grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(invalid("tau_grid", "needs finite non-negative times"));
    }
    if tau_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("tau_grid", "must increase strictly"));
    }
    let omega_r_sq = renormalized_frequency_sq(osc, bath)?;
    let sigma = 0.1 * osc.omega0();
    let (g, g_dot) = bromwich(lambda, bath, osc, tau_grid, sigma, omega_r_sq)?;
    let (g2, _) = bromwich(lambda, bath, osc, tau_grid, 2.0 * sigma, omega_r_sq)?;
    let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let diff = g.iter().zip(&g2).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if !(diff <= BROMWICH_AGREEMENT * scale) {
        return Err(Error::Inversion(format!(
            "abscissae {sigma} and {} disagree by {diff:.3e}",
            2.0 * sigma
        )));
    }
    let (mut g, mut g_dot) = (g, g_dot);
    if tau_grid[0] == 0.0 {
        g[0] = 0.0;
        g_dot[0] = 1.0;
    }
    Ok(PropagatorFunction {
        tau: tau_grid.to_vec(),
        g,
        g_dot,
        g_ddot: None,
        g_dddot: None,
        lambda,
        error_estimate: diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linspace;

    fn osc() -> OscillatorParams {
        OscillatorParams::with_frequency(1.0).unwrap()
    }

    #[test]
    fn free_oscillator_is_a_sine() {
        let bath = BathSpectrum::ohmic(0.0, 1.0, 1.0).unwrap();
        let lam = CouplingScale::new(0.3).unwrap();
        let p = solve_propagator(lam, &bath, &osc(), 10.0, 1e-9).unwrap();
        assert_eq!(p.g[0], 0.0);
        assert_eq!(p.g_dot[0], 1.0);
        let gdd = p.g_ddot.as_ref().unwrap();
        for i in 0..p.len() {
            let t = p.tau[i];
            assert!((p.g[i] - t.sin()).abs() < 1e-10, "{t}");
            assert!((p.g_dot[i] - t.cos()).abs() < 1e-9);
            assert!((gdd[i] + t.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn trapezoid_convolution_of_polynomials() {
        let h = 0.01;
        let tau: Vec<f64> = (0..=100).map(|i| i as f64 * h).collect();
        let ones = vec![1.0; tau.len()];
        let c = trapezoid_convolution(&ones, &tau, h);
        for (t, v) in tau.iter().zip(&c) {
            assert!((v - t * t / 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn propagator_is_close_to_renormalized_sine_at_small_lambda() {
        let bath = BathSpectrum::ohmic(0.5, 1.0, 1.0).unwrap();
        let lam = CouplingScale::new(0.05).unwrap();
        let p = solve_propagator(lam, &bath, &osc(), 6.0, 1e-7).unwrap();
        let wr = renormalized_frequency_sq(&osc(), &bath).unwrap().sqrt();
        let amp = 1.0 / wr;
        for (t, g) in p.tau.iter().zip(&p.g) {
            assert!((g - (wr * t).sin() / wr).abs() < 0.03 * amp, "{t}");
        }
    }

    #[test]
    fn laplace_route_free_oscillator() {
        let bath = BathSpectrum::ohmic(0.0, 1.0, 1.0).unwrap();
        let lam = CouplingScale::new(0.4).unwrap();
        let grid = linspace(0.0, 10.0, 41);
        let p = propagator_via_laplace(lam, &bath, &osc(), &grid).unwrap();
        for (t, g) in grid.iter().zip(&p.g) {
            assert!((g - t.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn routes_agree_at_moderate_coupling() {
        let bath = BathSpectrum::ohmic(0.5, 1.0, 1.0).unwrap();
        let lam = CouplingScale::new(0.4).unwrap();
        let v = solve_propagator(lam, &bath, &osc(), 10.0, 1e-8).unwrap();
        let grid: Vec<f64> = v.tau.iter().step_by(64).copied().collect();
        let b = propagator_via_laplace(lam, &bath, &osc(), &grid).unwrap();
        let diff = grid
            .iter()
            .zip(&b.g)
            .map(|(t, g)| (g - v.g[v.grid_index(*t).unwrap()]).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-6, "{diff}");
    }

    #[test]
    fn stored_derivatives_match_splines() {
        let bath = BathSpectrum::ohmic(0.3, 1.0, 1.0).unwrap();
        let lam = CouplingScale::new(0.4).unwrap();
        let p = solve_propagator(lam, &bath, &osc(), 4.0, 1e-8).unwrap();
        let s = CubicSpline::new(&p.tau, &p.g).unwrap();
        let gd = &p.g_dot;
        for i in (50..p.len() - 50).step_by(97) {
            assert!((s.knot_slopes()[i] - gd[i]).abs() < 1e-6);
        }
        let [g, _, _, _] = p.derivatives_at(1.2345).unwrap();
        assert!((g - s.eval(1.2345)).abs() < 1e-8);
    }

    #[test]
    fn hard_cutoff_routes_agree() {
        let bath = BathSpectrum::new(0.4, 2.0, crate::model::CutoffShape::Hard, 1.0).unwrap();
        let lam = CouplingScale::new(0.3).unwrap();
        let v = solve_propagator(lam, &bath, &osc(), 8.0, 1e-9).unwrap();
        let grid: Vec<f64> = v.tau.iter().step_by(97).copied().collect();
        let b = propagator_via_laplace(lam, &bath, &osc(), &grid).unwrap();
        for (t, g) in grid.iter().zip(&b.g) {
            let i = v.grid_index(*t).unwrap();
            assert!((g - v.g[i]).abs() < 1e-6, "tau = {t}: {g} vs {}", v.g[i]);
        }
    }
}
