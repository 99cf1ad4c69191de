//! Lambda and Theta coefficients of the exact propagating kernel and the
//! time-dependent master-equation coefficients built from them.
//!
//! Everything is written on G = lambda^2 F. With r = G'/G and
//! W = G'' G - G'^2:
//!
//! Lambda_ff = Lambda_ii = M r, Lambda_if = -M / G, Lambda_fi = M W / G.
//!
//! The Theta matrix reduces to three base integrals
//! I_xy = int int x(s1) nu(s1 - s2) y(s2) over [0, tau]^2 with x, y in {G', G}:
//!
//! Theta_ff = (I_aa - 2 r I_ab + r^2 I_bb) / 2, Theta_fi = (I_ab - r I_bb) / (2 G),
//! Theta_ii = I_bb / (2 G^2),
//!
//! and dI_xy/dtau = x(tau) (nu * y)(tau) + y(tau) (nu * x)(tau).

use num_complex::Complex64;
use rayon::prelude::*;

use super::kernels::KernelSet;
use super::propagator::{
    base_step, fine_kernels, propagator_level, richardson, trapezoid_convolution, PropagatorFunction, MAX_REFINEMENTS,
};
use crate::error::{invalid, Error, Result};
use crate::model::{BathSpectrum, CouplingScale, OscillatorParams};
use crate::spectral::renormalized_frequency_sq;

/// Fraction of max |G| below which tau counts as a node neighbourhood.
pub const NODE_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaTheta {
    pub tau: f64,
    pub l_ff: f64,
    pub l_fi: f64,
    pub l_if: f64,
    pub l_ii: f64,
    pub t_ff: f64,
    pub t_fi: f64,
    pub t_ii: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QbmCoefficients {
    pub tau: f64,
    pub omega_r_sq: f64,
    pub d_xx: f64,
    pub d_xp: f64,
    pub gamma_xp: f64,
}

fn node_check(tau: f64, g: f64, max_g: f64) -> Result<()> {
    let threshold = NODE_THRESHOLD * max_g;
    if !(g.abs() >= threshold) {
        return Err(Error::Singularity {
            tau,
            value: g.abs(),
            threshold,
        });
    }
    Ok(())
}

fn lambdas(mass: f64, g: f64, gd: f64, gdd: f64) -> (f64, f64, f64) {
    let w = gdd * g - gd * gd;
    (mass * gd / g, mass * w / g, -mass / g)
}

/// (Lambda_ff, Lambda_fi, Lambda_if) at tau.
pub fn lambda_coefficients(p: &PropagatorFunction, mass: f64, tau: f64) -> Result<(f64, f64, f64)> {
    let [g, gd, gdd, _] = p.derivatives_at(tau)?;
    node_check(tau, g, p.max_abs())?;
    Ok(lambdas(mass, g, gd, gdd))
}

fn same_grid(p: &PropagatorFunction, k: &KernelSet) -> Result<f64> {
    if p.tau.len() != k.tau.len() || p.tau.len() < 2 {
        return Err(invalid("kernels", "kernel table must share the propagator grid"));
    }
    let h = p.tau[1] - p.tau[0];
    let tol = 1e-9 * h;
    for (i, (a, b)) in p.tau.iter().zip(&k.tau).enumerate() {
        if (a - b).abs() > tol || (a - i as f64 * h).abs() > 1e-9 * h.max(*a) {
            return Err(invalid("kernels", "grids must be uniform and identical"));
        }
    }
    Ok(h)
}

fn trap_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n + 1];
    w[0] = 0.5 * h;
    w[n] = 0.5 * h;
    if n == 0 {
        w[0] = 0.0;
    }
    w
}

/// (Theta_ff, Theta_fi, Theta_ii) at a grid point by the direct double
/// trapezoid sum. Cost is quadratic in the number of grid points up to tau.
pub fn theta_coefficients(p: &PropagatorFunction, k: &KernelSet, tau: f64) -> Result<(f64, f64, f64)> {
    let h = same_grid(p, k)?;
    let n = p
        .grid_index(tau)
        .ok_or_else(|| invalid("tau", "Theta is evaluated on grid points only"))?;
    node_check(tau, p.g[n], p.max_abs())?;
    let r = p.g_dot[n] / p.g[n];
    let cf: Vec<f64> = (0..=n).map(|j| p.g_dot[j] - r * p.g[j]).collect();
    let ci: Vec<f64> = (0..=n).map(|j| p.g[j] / p.g[n]).collect();
    let w = trap_weights(n, h);
    let rows: Vec<[f64; 3]> = (0..=n)
        .into_par_iter()
        .map(|j| {
            let mut nf = 0.0;
            let mut ni = 0.0;
            for l in 0..=n {
                let kern = w[l] * k.nu[j.abs_diff(l)];
                nf += kern * cf[l];
                ni += kern * ci[l];
            }
            [w[j] * cf[j] * nf, w[j] * cf[j] * ni, w[j] * ci[j] * ni]
        })
        .collect();
    let mut acc = [0.0; 3];
    for r in rows {
        for q in 0..3 {
            acc[q] += r[q];
        }
    }
    Ok((0.5 * acc[0], 0.5 * acc[1], 0.5 * acc[2]))
}

/// Cumulative base integrals I_aa, I_ab, I_bb (a = G', b = G) and their
/// exact tau-derivatives on every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaIntegrals {
    pub tau: Vec<f64>,
    pub i_aa: Vec<f64>,
    pub i_ab: Vec<f64>,
    pub i_bb: Vec<f64>,
    pub d_aa: Vec<f64>,
    pub d_ab: Vec<f64>,
    pub d_bb: Vec<f64>,
}

/// Partial sums R_n = sum_{k<n} w_k nu_{n-k} x_k with w_0 = h/2, w_k = h.
fn left_sums(nu: &[f64], x: &[f64], h: f64) -> Vec<f64> {
    let full = trapezoid_convolution(nu, x, h);
    // trapezoid row = R_n + (h/2) nu_0 x_n
    full.iter()
        .zip(x)
        .enumerate()
        .map(|(n, (c, xn))| if n == 0 { 0.0 } else { c - 0.5 * h * nu[0] * xn })
        .collect()
}

fn cumulative(x: &[f64], y: &[f64], rx: &[f64], ry: &[f64], nu0: f64, h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let mut s = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut q = 0.25 * h * h * x[0] * nu0 * y[0];
    for i in 1..n {
        let cross = x[i] * ry[i] + y[i] * rx[i];
        let diag = x[i] * nu0 * y[i];
        q += h * cross + h * h * diag;
        s[i] = q - 0.5 * h * (cross + 2.0 * h * diag) + 0.25 * h * h * diag;
        d[i] = cross + h * diag;
    }
    d[0] = 0.0;
    (s, d)
}

fn base_integrals(g: &[f64], gd: &[f64], nu: &[f64], h: f64) -> [Vec<f64>; 6] {
    let ra = left_sums(nu, gd, h);
    let rb = left_sums(nu, g, h);
    let (i_aa, d_aa) = cumulative(gd, gd, &ra, &ra, nu[0], h);
    let (i_ab, d_ab) = cumulative(gd, g, &ra, &rb, nu[0], h);
    let (i_bb, d_bb) = cumulative(g, g, &rb, &rb, nu[0], h);
    [i_aa, i_ab, i_bb, d_aa, d_ab, d_bb]
}

pub fn theta_integrals(p: &PropagatorFunction, k: &KernelSet) -> Result<ThetaIntegrals> {
    let h = same_grid(p, k)?;
    let [i_aa, i_ab, i_bb, d_aa, d_ab, d_bb] = base_integrals(&p.g, &p.g_dot, &k.nu, h);
    Ok(ThetaIntegrals {
        tau: p.tau.clone(),
        i_aa,
        i_ab,
        i_bb,
        d_aa,
        d_ab,
        d_bb,
    })
}

/// Values at one grid point needed by the coefficient formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PointData {
    tau: f64,
    g: [f64; 4],
    i: [f64; 3],
    di: [f64; 3],
}

struct Assembled {
    lt: LambdaTheta,
    coeffs: QbmCoefficients,
}

fn assemble(pt: &PointData, mass: f64) -> Assembled {
    let [g, gd, gdd, gddd] = pt.g;
    let [iaa, iab, ibb] = pt.i;
    let [daa, dab, dbb] = pt.di;
    let (l_ff, l_fi, l_if) = lambdas(mass, g, gd, gdd);
    let r = gd / g;
    let w = gdd * g - gd * gd;
    let rd = w / (g * g);
    let t_ff = 0.5 * (iaa - 2.0 * r * iab + r * r * ibb);
    let t_fi = 0.5 * (iab - r * ibb) / g;
    let t_ii = 0.5 * ibb / (g * g);
    let td_ff = 0.5 * (daa - 2.0 * rd * iab - 2.0 * r * dab + 2.0 * r * rd * ibb + r * r * dbb);
    let td_fi = 0.5 * ((dab - rd * ibb - r * dbb) / g - (iab - r * ibb) * gd / (g * g));
    let td_ii = 0.5 * (dbb / (g * g) - 2.0 * ibb * gd / (g * g * g));

    // d/dtau ln|Lambda_fi| = W'/W - G'/G and d/dtau ln|Lambda_fi/Lambda_ff| = W'/W - G''/G'
    let wd = gddd * g - gd * gdd;
    let gamma_xp = -0.5 * (wd / w - r + l_ff / mass);
    let omega_r_sq = l_ff / mass * wd / w - gdd / g;
    let ratio = l_ff / l_if;
    let d_xx = 4.0 * gamma_xp * (t_ff - t_fi * ratio) + td_ff - 2.0 * td_fi * ratio + td_ii * ratio * ratio;
    let d_xp =
        2.0 * t_fi * gamma_xp / l_if + (t_ff - t_fi * ratio) / mass + td_fi / l_if - td_ii * l_ff / (l_if * l_if);
    Assembled {
        lt: LambdaTheta {
            tau: pt.tau,
            l_ff,
            l_fi,
            l_if,
            l_ii: l_ff,
            t_ff,
            t_fi,
            t_ii,
        },
        coeffs: QbmCoefficients {
            tau: pt.tau,
            omega_r_sq,
            d_xx,
            d_xp,
            gamma_xp,
        },
    }
}

fn point(p: &PropagatorFunction, ti: &ThetaIntegrals, tau: f64) -> Result<PointData> {
    let n = p
        .grid_index(tau)
        .ok_or_else(|| invalid("tau", "coefficients are evaluated on grid points only"))?;
    let g = p.derivatives_at(p.tau[n])?;
    node_check(tau, g[0], p.max_abs())?;
    Ok(PointData {
        tau: p.tau[n],
        g,
        i: [ti.i_aa[n], ti.i_ab[n], ti.i_bb[n]],
        di: [ti.d_aa[n], ti.d_ab[n], ti.d_bb[n]],
    })
}

/// Omega_R^2, D_xx, D_xp and Gamma_xp at a grid point of `p`.
pub fn exact_coefficients(p: &PropagatorFunction, k: &KernelSet, mass: f64, tau: f64) -> Result<QbmCoefficients> {
    let ti = theta_integrals(p, k)?;
    Ok(assemble(&point(p, &ti, tau)?, mass).coeffs)
}

pub fn exact_lambda_theta(p: &PropagatorFunction, k: &KernelSet, mass: f64, tau: f64) -> Result<LambdaTheta> {
    let ti = theta_integrals(p, k)?;
    Ok(assemble(&point(p, &ti, tau)?, mass).lt)
}

/// Exact coefficients on a uniform grid, with G and the Theta integrals
/// Richardson-extrapolated from three trapezoid levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactTable {
    pub propagator: PropagatorFunction,
    pub integrals: ThetaIntegrals,
    pub mass: f64,
    /// Estimated absolute error of the extrapolated columns, in column order
    /// G, G', G'', G''', I_aa, I_ab, I_bb, dI_aa, dI_ab, dI_bb.
    pub errors: Vec<f64>,
}

impl ExactTable {
    pub fn compute(
        lambda: CouplingScale,
        bath: &BathSpectrum,
        osc: &OscillatorParams,
        tau_max: f64,
        tol: f64,
    ) -> Result<Self> {
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
            let levels: [Vec<Vec<f64>>; 3] = [4usize, 2, 1].map(|stride| {
                let [g, gd, gdd, gddd] = propagator_level(&kernels, stride, osc.omega0(), osc.mass());
                let nu: Vec<f64> = kernels.nu.iter().step_by(stride).copied().collect();
                let h = kernels.tau[stride] - kernels.tau[0];
                let ints = base_integrals(&g, &gd, &nu, h);
                let mut cols = vec![g, gd, gdd, gddd];
                cols.extend(ints);
                cols
            });
            let (cols, err) = richardson(&levels, n + 1);
            let scale = cols[0].iter().fold(1.0f64, |m, v| m.max(v.abs()));
            achieved = err[0].max(err[1]) / scale;
            if achieved <= tol {
                let mut cols = cols.into_iter();
                let tau: Vec<f64> = kernels.tau.iter().step_by(4).copied().collect();
                let mut next = || cols.next().unwrap();
                let mut g = next();
                let mut g_dot = next();
                g[0] = 0.0;
                g_dot[0] = 1.0;
                let propagator = PropagatorFunction {
                    tau: tau.clone(),
                    g,
                    g_dot,
                    g_ddot: Some(next()),
                    g_dddot: Some(next()),
                    lambda,
                    error_estimate: err[0],
                };
                let integrals = ThetaIntegrals {
                    tau,
                    i_aa: next(),
                    i_ab: next(),
                    i_bb: next(),
                    d_aa: next(),
                    d_ab: next(),
                    d_bb: next(),
                };
                return Ok(Self {
                    propagator,
                    integrals,
                    mass: osc.mass(),
                    errors: err,
                });
            }
            h0 *= 0.5;
        }
        Err(Error::Accuracy {
            context: "exact coefficient table".into(),
            achieved,
            target: tol,
        })
    }

    pub fn tau(&self) -> &[f64] {
        &self.propagator.tau
    }

    fn data(&self, i: usize) -> Result<PointData> {
        let p = &self.propagator;
        let g = [
            p.g[i],
            p.g_dot[i],
            p.g_ddot.as_ref().map_or(f64::NAN, |v| v[i]),
            p.g_dddot.as_ref().map_or(f64::NAN, |v| v[i]),
        ];
        node_check(p.tau[i], g[0], p.max_abs())?;
        let t = &self.integrals;
        Ok(PointData {
            tau: p.tau[i],
            g,
            i: [t.i_aa[i], t.i_ab[i], t.i_bb[i]],
            di: [t.d_aa[i], t.d_ab[i], t.d_bb[i]],
        })
    }

    pub fn coefficients_at(&self, i: usize) -> Result<QbmCoefficients> {
        Ok(assemble(&self.data(i)?, self.mass).coeffs)
    }

    pub fn lambda_theta_at(&self, i: usize) -> Result<LambdaTheta> {
        Ok(assemble(&self.data(i)?, self.mass).lt)
    }

    /// Coefficients at every grid point outside node neighbourhoods.
    pub fn regular_coefficients(&self) -> Vec<QbmCoefficients> {
        (0..self.tau().len())
            .filter_map(|i| self.coefficients_at(i).ok())
            .collect()
    }
}

/// Small-coupling values: constant coefficients and the closed-form Lambda, Theta.
pub fn limit_coefficients(osc: &OscillatorParams, bath: &BathSpectrum, tau: f64) -> Result<QbmCoefficients> {
    let omega_r_sq = renormalized_frequency_sq(osc, bath)?;
    Ok(QbmCoefficients {
        tau,
        omega_r_sq,
        d_xx: 0.5 * osc.mass() * osc.omega0() * bath.eta() * bath.temperature(),
        d_xp: 0.0,
        gamma_xp: 0.0,
    })
}

pub fn limit_lambda_theta(osc: &OscillatorParams, bath: &BathSpectrum, tau: f64) -> Result<LambdaTheta> {
    let wr = renormalized_frequency_sq(osc, bath)?.sqrt();
    let m = osc.mass();
    let (s, c) = (wr * tau).sin_cos();
    let strength = m * osc.omega0() * bath.eta() * bath.temperature();
    let diag = strength * (wr * tau - s * c) / (4.0 * wr * s * s);
    Ok(LambdaTheta {
        tau,
        l_ff: m * wr * c / s,
        l_fi: -m * wr / s,
        l_if: -m * wr / s,
        l_ii: m * wr * c / s,
        t_ff: diag,
        t_fi: -strength * (wr * tau * c - s) / (4.0 * wr * s * s),
        t_ii: diag,
    })
}

/// log J for the exact propagating kernel, with Sigma = (x + x')/2, Delta = x - x'.
pub fn kernel_logdensity(l: &LambdaTheta, sigma_f: f64, delta_f: f64, sigma_i: f64, delta_i: f64) -> Complex64 {
    let phase = delta_f * (l.l_ff * sigma_f + l.l_fi * sigma_i) + delta_i * (l.l_if * sigma_f + l.l_ii * sigma_i);
    let damping = delta_f * (l.t_ff * delta_f + l.t_fi * delta_i) + delta_i * (l.t_fi * delta_f + l.t_ii * delta_i);
    Complex64::new((l.l_if.abs() / (2.0 * std::f64::consts::PI)).ln() - damping, phase)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qbm::propagator::solve_propagator;

    fn osc() -> OscillatorParams {
        OscillatorParams::with_frequency(1.0).unwrap()
    }

    #[test]
    fn free_oscillator_lambdas_and_coefficients() {
        let bath = BathSpectrum::ohmic(0.0, 1.0, 1.0).unwrap();
        let lam = CouplingScale::new(0.5).unwrap();
        let table = ExactTable::compute(lam, &bath, &osc(), 3.0, 1e-9).unwrap();
        for i in (40..table.tau().len()).step_by(111) {
            let t = table.tau()[i];
            let lt = table.lambda_theta_at(i).unwrap();
            assert!((lt.l_ff - t.cos() / t.sin()).abs() < 1e-7);
            assert!((lt.l_if + 1.0 / t.sin()).abs() < 1e-7);
            assert_eq!(lt.t_ff, 0.0);
            let c = table.coefficients_at(i).unwrap();
            assert!(c.gamma_xp.abs() < 1e-9, "{}", c.gamma_xp);
            assert!((c.omega_r_sq - 1.0).abs() < 1e-7);
            assert_eq!(c.d_xx, 0.0);
            assert_eq!(c.d_xp, 0.0);
        }
    }

    #[test]
    fn node_is_refused() {
        let bath = BathSpectrum::ohmic(0.0, 1.0, 1.0).unwrap();
        let lam = CouplingScale::new(0.5).unwrap();
        let p = solve_propagator(lam, &bath, &osc(), 4.0, 1e-9).unwrap();
        let i = p
            .tau
            .iter()
            .position(|t| (t - std::f64::consts::PI).abs() < 1e-3)
            .unwrap();
        let r = lambda_coefficients(&p, 1.0, p.tau[i]);
        assert!(matches!(r, Err(Error::Singularity { .. })));
        assert!(matches!(
            lambda_coefficients(&p, 1.0, 1e-6),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn cumulative_matches_direct_double_sum() {
        let bath = BathSpectrum::ohmic(0.5, 1.0, 3.0).unwrap();
        let lam = CouplingScale::new(0.5).unwrap();
        let p = solve_propagator(lam, &bath, &osc(), 2.0, 1e-8).unwrap();
        let k = KernelSet::tabulate(&p.tau, lam, &bath, &osc()).unwrap();
        let ti = theta_integrals(&p, &k).unwrap();
        for &n in &[7usize, 100, p.len() - 1] {
            let tau = p.tau[n];
            let (tff, tfi, tii) = theta_coefficients(&p, &k, tau).unwrap();
            let r = p.g_dot[n] / p.g[n];
            let g = p.g[n];
            let cff = 0.5 * (ti.i_aa[n] - 2.0 * r * ti.i_ab[n] + r * r * ti.i_bb[n]);
            let cfi = 0.5 * (ti.i_ab[n] - r * ti.i_bb[n]) / g;
            let cii = 0.5 * ti.i_bb[n] / (g * g);
            let scale = tff.abs().max(tii.abs()).max(1e-12);
            assert!((tff - cff).abs() < 1e-9 * scale, "{tff} {cff}");
            assert!((tfi - cfi).abs() < 1e-9 * scale);
            assert!((tii - cii).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn integral_derivatives_match_differences() {
        let bath = BathSpectrum::ohmic(0.5, 1.0, 3.0).unwrap();
        let lam = CouplingScale::new(0.5).unwrap();
        let t = ExactTable::compute(lam, &bath, &osc(), 2.0, 1e-8).unwrap();
        let ti = &t.integrals;
        let h = ti.tau[1] - ti.tau[0];
        for n in (20..ti.tau.len() - 20).step_by(53) {
            for (i, d) in [(&ti.i_aa, &ti.d_aa), (&ti.i_ab, &ti.d_ab), (&ti.i_bb, &ti.d_bb)] {
                let fd = (i[n - 2] - 8.0 * i[n - 1] + 8.0 * i[n + 1] - i[n + 2]) / (12.0 * h);
                assert!((fd - d[n]).abs() < 1e-6 * d[n].abs().max(1.0), "{fd} {}", d[n]);
            }
        }
    }

    #[test]
    fn theta_is_positive_semidefinite() {
        let bath = BathSpectrum::ohmic(0.5, 1.0, 2.0).unwrap();
        let lam = CouplingScale::new(0.4).unwrap();
        let t = ExactTable::compute(lam, &bath, &osc(), 3.0, 1e-8).unwrap();
        for i in (10..t.tau().len()).step_by(37) {
            if let Ok(lt) = t.lambda_theta_at(i) {
                assert!(lt.t_ff >= 0.0 && lt.t_ii >= 0.0);
                assert!(lt.t_ff * lt.t_ii - lt.t_fi * lt.t_fi >= -1e-9 * lt.t_ff * lt.t_ii);
            }
        }
    }

    #[test]
    fn limit_theta_fi_at_quarter_period() {
        let bath = BathSpectrum::ohmic(0.5, 1.0, 2.0).unwrap();
        let wr = renormalized_frequency_sq(&osc(), &bath).unwrap().sqrt();
        let lt = limit_lambda_theta(&osc(), &bath, std::f64::consts::FRAC_PI_2 / wr).unwrap();
        let expect = 0.5 * 2.0 / (4.0 * wr);
        assert!((lt.t_fi - expect).abs() < 1e-12);
        let c = limit_coefficients(&osc(), &bath, 0.3).unwrap();
        assert_eq!(c.d_xx, 0.5);
        assert_eq!((c.d_xp, c.gamma_xp), (0.0, 0.0));
    }

    #[test]
    fn logdensity_forms() {
        let lt = LambdaTheta {
            tau: 1.0,
            l_ff: 0.4,
            l_fi: -1.2,
            l_if: -1.2,
            l_ii: 0.4,
            t_ff: 0.7,
            t_fi: 0.2,
            t_ii: 0.5,
        };
        let norm = (1.2f64 / (2.0 * std::f64::consts::PI)).ln();
        let z = kernel_logdensity(&lt, 0.3, 0.0, -0.8, 0.0);
        assert_eq!(z.re, norm);
        assert_eq!(z.im, 0.0);
        let z = kernel_logdensity(&lt, 0.3, 0.4, -0.8, 0.4);
        assert!(z.re <= norm);
    }

    #[test]
    fn heavier_mass_keeps_the_limit_diffusion() {
        // D_xx scales with M; the exact value approaches it at small coupling
        let osc = OscillatorParams::new(2.5, 1.0).unwrap();
        let bath = BathSpectrum::ohmic(0.3, 2.0, 3.0).unwrap();
        let table = ExactTable::compute(CouplingScale::new(0.15).unwrap(), &bath, &osc, 2.5, 1e-7).unwrap();
        let limit = limit_coefficients(&osc, &bath, 0.0).unwrap();
        let i = table.tau().iter().position(|t| *t >= 1.5).unwrap();
        let k = table.coefficients_at(i).unwrap();
        assert!(
            (k.d_xx - limit.d_xx).abs() < 0.05 * limit.d_xx,
            "{} vs {}",
            k.d_xx,
            limit.d_xx
        );
        assert!((k.omega_r_sq - limit.omega_r_sq).abs() < 0.05);
    }
}
