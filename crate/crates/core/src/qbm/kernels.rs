//! Bath kernels of the exact oscillator dynamics.
//!
//! With t = tau / lambda^2 every kernel is a one-sided Fourier-type integral
//! over the unscaled frequency w:
//!
//! T_k[W](t) = int_0^inf W(w) phi_k(i w t) / w^k dw,
//!
//! phi_0 = e^z, phi_1 = e^z - 1, phi_2 = e^z - 1 - z. For the exponential
//! cutoff the integrand is analytic in the right half plane away from the
//! Matsubara poles, so the path is rotated onto the ray arg w = pi/4 where
//! e^{iwt} decays instead of oscillating. The hard cutoff stays on the real
//! axis with panels tied to the oscillation period.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::model::{BathSpectrum, CouplingScale, CutoffShape, OscillatorParams};
use crate::numerics::quad::{adaptive, AdaptiveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Weight {
    Dissipative,
    Thermal,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// w coth(w / 2T) for complex w with Re w >= 0.
fn w_coth(w: Complex64, temperature: f64) -> Complex64 {
    let x = w / (2.0 * temperature);
    if x.norm() < 1e-3 {
        let x2 = x * x;
        return (c(1.0, 0.0) + x2 / 3.0 - x2 * x2 / 45.0) * (2.0 * temperature);
    }
    let q = (-2.0 * x).exp();
    w * (c(1.0, 0.0) + q) / (c(1.0, 0.0) - q)
}

fn weight_at(w: Complex64, bath: &BathSpectrum, which: Weight) -> Complex64 {
    let cutoff = match bath.shape() {
        CutoffShape::Exponential => (-w / bath.cutoff()).exp(),
        CutoffShape::Hard => c(1.0, 0.0),
    };
    let base = match which {
        Weight::Dissipative => w,
        Weight::Thermal => w_coth(w, bath.temperature()),
    };
    base * cutoff * bath.eta()
}

/// psi_k(z) = phi_k(z) / z^k, entire in z.
fn psi(k: usize, z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let mut term = c(1.0, 0.0);
        for j in 1..=k {
            term /= j as f64;
        }
        let mut sum = term;
        for n in 1..24 {
            term = term * z / (n + k) as f64;
            sum += term;
        }
        return sum;
    }
    let e = z.exp();
    match k {
        0 => e,
        1 => (e - 1.0) / z,
        _ => (e - 1.0 - z) / (z * z),
    }
}

fn quad_opts() -> AdaptiveOptions {
    AdaptiveOptions {
        rel_tol: 1e-12,
        abs_tol: 1e-300,
        max_segments: 20_000,
    }
}

fn transform(k: usize, t: f64, bath: &BathSpectrum, which: Weight) -> Result<Complex64> {
    let it_k = c(0.0, t).powi(k as i32);
    match bath.shape() {
        CutoffShape::Exponential => {
            let theta = if t > 0.0 { FRAC_PI_4 } else { 0.0 };
            let dir = Complex64::from_polar(1.0, theta);
            let scale = 1.0 / (t * theta.sin() + theta.cos() / bath.cutoff());
            let f = |u: f64| {
                let one_minus = 1.0 - u;
                let r = scale * u / one_minus;
                let w = dir * r;
                let wt = weight_at(w, bath, which);
                if wt.norm() == 0.0 {
                    return c(0.0, 0.0);
                }
                let v = wt * psi(k, c(0.0, t) * w) * dir * (scale / (one_minus * one_minus));
                if v.re.is_finite() && v.im.is_finite() {
                    v
                } else {
                    c(0.0, 0.0)
                }
            };
            let v = adaptive(f, &[0.0, 0.25, 0.5, 0.75, 1.0], &quad_opts(), "bath kernel")?;
            Ok(v * it_k)
        }
        CutoffShape::Hard => {
            let wc = bath.cutoff();
            let pieces = ((wc * t / PI).ceil() as usize).clamp(1, 100_000);
            let pts: Vec<f64> = (0..=pieces).map(|i| wc * i as f64 / pieces as f64).collect();
            let f = |w: f64| weight_at(c(w, 0.0), bath, which) * psi(k, c(0.0, w * t));
            let v = adaptive(f, &pts, &quad_opts(), "bath kernel")?;
            Ok(v * it_k)
        }
    }
}

fn check_lambda(osc: &OscillatorParams, lambda: CouplingScale) -> (f64, f64) {
    (osc.mass() * osc.omega0(), lambda.squared())
}

/// Dissipation kernel mu(tau) = -M W0 int dw~/2pi Gamma(lambda^2 w~) sin(w~ tau).
pub fn dissipation_kernel(tau: f64, lambda: CouplingScale, bath: &BathSpectrum, osc: &OscillatorParams) -> Result<f64> {
    let (mw, l2) = check_lambda(osc, lambda);
    if tau == 0.0 || bath.eta() == 0.0 {
        return Ok(0.0);
    }
    let t0 = transform(0, (tau / l2).abs(), bath, Weight::Dissipative)?;
    Ok(-(mw / l2) / (2.0 * PI) * t0.im * tau.signum())
}

/// Noise kernel nu(tau) = M W0 int dw~/2pi Gamma(lambda^2 w~) coth(lambda^2 w~ / 2T) cos(w~ tau).
pub fn noise_kernel(tau: f64, lambda: CouplingScale, bath: &BathSpectrum, osc: &OscillatorParams) -> Result<f64> {
    let (mw, l2) = check_lambda(osc, lambda);
    if bath.eta() == 0.0 {
        return Ok(0.0);
    }
    let t0 = transform(0, (tau / l2).abs(), bath, Weight::Thermal)?;
    Ok((mw / l2) / (2.0 * PI) * t0.re)
}

/// First integral of mu from 0 to tau.
pub fn dissipation_integral(
    tau: f64,
    lambda: CouplingScale,
    bath: &BathSpectrum,
    osc: &OscillatorParams,
) -> Result<f64> {
    let (mw, l2) = check_lambda(osc, lambda);
    if tau == 0.0 || bath.eta() == 0.0 {
        return Ok(0.0);
    }
    let t1 = transform(1, tau.abs() / l2, bath, Weight::Dissipative)?;
    Ok(mw / (2.0 * PI) * t1.re)
}

/// Second integral of mu: int_0^tau (tau - v) mu(v) dv.
pub fn dissipation_double_integral(
    tau: f64,
    lambda: CouplingScale,
    bath: &BathSpectrum,
    osc: &OscillatorParams,
) -> Result<f64> {
    let (mw, l2) = check_lambda(osc, lambda);
    if tau == 0.0 || bath.eta() == 0.0 {
        return Ok(0.0);
    }
    let t2 = transform(2, tau.abs() / l2, bath, Weight::Dissipative)?;
    Ok(mw * l2 / (2.0 * PI) * t2.im * tau.signum())
}

/// Kernel columns sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSet {
    pub tau: Vec<f64>,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    /// int_0^tau mu.
    pub mu_int: Vec<f64>,
    /// int_0^tau (tau - v) mu(v) dv.
    pub mu_int2: Vec<f64>,
    pub lambda: CouplingScale,
}

impl KernelSet {
    pub fn tabulate(tau: &[f64], lambda: CouplingScale, bath: &BathSpectrum, osc: &OscillatorParams) -> Result<Self> {
        if tau.iter().any(|t| !t.is_finite()) {
            return Err(invalid("tau", "kernel grid must be finite"));
        }
        let rows: Vec<[f64; 4]> = tau
            .par_iter()
            .map(|&t| {
                Ok([
                    dissipation_kernel(t, lambda, bath, osc)?,
                    noise_kernel(t, lambda, bath, osc)?,
                    dissipation_integral(t, lambda, bath, osc)?,
                    dissipation_double_integral(t, lambda, bath, osc)?,
                ])
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            tau: tau.to_vec(),
            mu: rows.iter().map(|r| r[0]).collect(),
            nu: rows.iter().map(|r| r[1]).collect(),
            mu_int: rows.iter().map(|r| r[2]).collect(),
            mu_int2: rows.iter().map(|r| r[3]).collect(),
            lambda,
        })
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }
}

/// Laplace transform of mu at the rescaled argument: mu^(s) with s = lambda^2 s~.
/// Requires Re s > 0 or s real positive; Im s < 0 is handled by conjugation.
pub fn laplace_dissipation_kernel(s: Complex64, bath: &BathSpectrum, osc: &OscillatorParams) -> Result<Complex64> {
    if !(s.re > 0.0) {
        return Err(invalid("s", "Laplace argument needs a positive real part"));
    }
    if s.im < 0.0 {
        return Ok(laplace_dissipation_kernel(s.conj(), bath, osc)?.conj());
    }
    let pref = -osc.mass() * osc.omega0() / (2.0 * PI);
    let eta = bath.eta();
    let s2 = s * s;
    let integral = match bath.shape() {
        CutoffShape::Hard => {
            // int_0^wc w^2 / (s^2 + w^2) dw = wc - s atan(wc / s)
            let wc = bath.cutoff();
            (c(wc, 0.0) - s * (c(wc, 0.0) / s).atan()) * eta
        }
        CutoffShape::Exponential => {
            let dir = Complex64::from_polar(1.0, FRAC_PI_4);
            let scale = bath.cutoff() / FRAC_PI_4.cos();
            let f = |u: f64| {
                let one_minus = 1.0 - u;
                let r = scale * u / one_minus;
                let w = dir * r;
                let v = weight_at(w, bath, Weight::Dissipative) * w / (s2 + w * w)
                    * dir
                    * (scale / (one_minus * one_minus));
                if v.re.is_finite() && v.im.is_finite() {
                    v
                } else {
                    c(0.0, 0.0)
                }
            };
            let knee = s.norm() / (scale + s.norm());
            let mut pts = vec![0.0, 0.25, 0.5, 0.75, 1.0, knee];
            pts.sort_by(|a, b| a.total_cmp(b));
            pts.dedup();
            adaptive(f, &pts, &quad_opts(), "Laplace kernel")?
        }
    };
    Ok(integral * pref)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn setup(eta: f64, wc: f64, t: f64) -> (BathSpectrum, OscillatorParams) {
        (
            BathSpectrum::ohmic(eta, wc, t).unwrap(),
            OscillatorParams::with_frequency(1.0).unwrap(),
        )
    }

    fn closed_mu(tau: f64, lam: f64, eta: f64, wc: f64) -> f64 {
        let wt = wc / (lam * lam);
        -eta * lam * lam / (2.0 * PI) * 2.0 * wt.powi(3) * tau / (1.0 + wt * wt * tau * tau).powi(2)
    }

    #[test]
    fn mu_matches_sine_transform() {
        let (bath, osc) = setup(0.5, 1.0, 2.0);
        let lam = CouplingScale::new(0.3).unwrap();
        for &tau in &[0.001, 0.01, 0.05, 0.3, 2.0, 9.0] {
            let v = dissipation_kernel(tau, lam, &bath, &osc).unwrap();
            assert_relative_eq!(v, closed_mu(tau, 0.3, 0.5, 1.0), max_relative = 1e-10);
        }
        assert_eq!(dissipation_kernel(0.0, lam, &bath, &osc).unwrap(), 0.0);
    }

    #[test]
    fn integrals_match_closed_forms() {
        let (bath, osc) = setup(0.5, 2.0, 1.0);
        let lam = CouplingScale::new(0.2).unwrap();
        let l2 = 0.04;
        let a = 0.5;
        for &tau in &[0.002, 0.03, 0.4, 5.0] {
            let t = tau / l2;
            let m1 = -0.5 / (2.0 * PI) * (1.0 / a - (1.0 / c(a, -t)).re);
            let k = -0.5 * l2 / (2.0 * PI) * (t * 2.0 - (t * 2.0f64).atan());
            assert_relative_eq!(
                dissipation_integral(tau, lam, &bath, &osc).unwrap(),
                m1,
                max_relative = 1e-10
            );
            assert_relative_eq!(
                dissipation_double_integral(tau, lam, &bath, &osc).unwrap(),
                k,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn zero_coupling_strength_gives_zero_kernels() {
        let (bath, osc) = setup(0.0, 1.0, 1.0);
        let lam = CouplingScale::new(0.5).unwrap();
        for &tau in &[0.0, 0.7, 3.0] {
            assert_eq!(dissipation_kernel(tau, lam, &bath, &osc).unwrap(), 0.0);
            assert_eq!(noise_kernel(tau, lam, &bath, &osc).unwrap(), 0.0);
        }
    }

    #[test]
    fn noise_kernel_t_zero_limit_is_real_axis_integral() {
        // nu(0) = M W0 / (2 pi lambda^2) int Gamma coth, checked on the real axis.
        let (bath, osc) = setup(0.4, 1.5, 0.7);
        let lam = CouplingScale::new(0.5).unwrap();
        let direct = adaptive(
            |w: f64| crate::spectral::thermal_density(w, &bath),
            &[0.0, 1.5, 3.0, 10.0, 90.0],
            &AdaptiveOptions::default(),
            "test",
        )
        .unwrap();
        let v = noise_kernel(0.0, lam, &bath, &osc).unwrap();
        assert_relative_eq!(v, direct / (2.0 * PI * 0.25), max_relative = 1e-9);
    }

    #[test]
    fn noise_kernel_integrates_to_white_noise_weight() {
        // One-sided integral of nu is M W0 eta T / 2; the 1/tau^2 tail beyond 40 is ~2e-4.
        let (bath, osc) = setup(0.5, 1.0, 4.0);
        let lam = CouplingScale::new(0.1).unwrap();
        let f = |t: f64| noise_kernel(t, lam, &bath, &osc).unwrap();
        let v = adaptive(
            f,
            &[0.0, 0.01, 0.05, 0.2, 1.0, 5.0, 40.0],
            &AdaptiveOptions {
                rel_tol: 1e-8,
                ..Default::default()
            },
            "test",
        )
        .unwrap();
        let tail_free = 0.5 * 4.0 * 0.5;
        assert!((v - tail_free).abs() < 1e-3 * tail_free, "{v}");
    }

    #[test]
    fn hard_cutoff_mu_closed_form() {
        // int_0^wc w sin(w t) dw = (sin(wc t) - wc t cos(wc t)) / t^2
        let bath = BathSpectrum::new(0.3, 2.0, CutoffShape::Hard, 1.0).unwrap();
        let osc = OscillatorParams::with_frequency(1.0).unwrap();
        let lam = CouplingScale::new(0.4).unwrap();
        for &tau in &[0.01, 0.2, 1.3] {
            let t: f64 = tau / 0.16;
            let s = ((2.0 * t).sin() - 2.0 * t * (2.0 * t).cos()) / (t * t);
            let expect = -0.3 / (0.16 * 2.0 * PI) * s;
            assert_relative_eq!(
                dissipation_kernel(tau, lam, &bath, &osc).unwrap(),
                expect,
                max_relative = 1e-9,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn laplace_kernel_large_s_asymptote() {
        let (bath, osc) = setup(0.5, 1.0, 1.0);
        for &s in &[200.0, 500.0] {
            let v = laplace_dissipation_kernel(c(s, 0.0), &bath, &osc).unwrap();
            let asym = -0.5 * 2.0 / (2.0 * PI * s * s);
            assert_relative_eq!(v.re, asym, max_relative = 1e-2);
        }
    }

    #[test]
    fn laplace_kernel_matches_real_axis_quadrature() {
        let (bath, osc) = setup(0.5, 1.0, 1.0);
        for &s in &[c(0.01, 0.5), c(0.1, 2.0), c(1.0, 0.1), c(0.2, -3.0)] {
            let v = laplace_dissipation_kernel(s, &bath, &osc).unwrap();
            let s2 = s * s;
            let f = |w: f64| c(0.5 * w * w * (-w).exp(), 0.0) / (s2 + w * w);
            let knee = s.im.abs();
            let mut pts = vec![0.0, 60.0, knee];
            pts.sort_by(|a, b| a.total_cmp(b));
            let direct = adaptive(f, &pts, &AdaptiveOptions::default(), "test").unwrap() * (-1.0 / (2.0 * PI));
            assert!((v - direct).norm() < 1e-10, "{s}: {v} vs {direct}");
        }
    }

    #[test]
    fn hard_laplace_kernel_matches_quadrature() {
        let bath = BathSpectrum::new(0.3, 2.0, CutoffShape::Hard, 1.0).unwrap();
        let osc = OscillatorParams::with_frequency(1.0).unwrap();
        let s = c(0.3, 1.1);
        let v = laplace_dissipation_kernel(s, &bath, &osc).unwrap();
        let direct = adaptive(
            |w: f64| c(0.3 * w * w, 0.0) / (s * s + w * w),
            &[0.0, 1.1, 2.0],
            &AdaptiveOptions::default(),
            "test",
        )
        .unwrap()
            * (-1.0 / (2.0 * PI));
        assert!((v - direct).norm() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn noise_kernel_is_even(tau in 0.0f64..3.0, lam in 0.1f64..0.8) {
            let (bath, osc) = setup(0.5, 1.0, 2.0);
            let l = CouplingScale::new(lam).unwrap();
            let a = noise_kernel(tau, l, &bath, &osc).unwrap();
            let b = noise_kernel(-tau, l, &bath, &osc).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn mu_is_odd(tau in 0.001f64..3.0) {
            let (bath, osc) = setup(0.5, 1.0, 2.0);
            let l = CouplingScale::new(0.3).unwrap();
            let a = dissipation_kernel(tau, l, &bath, &osc).unwrap();
            let b = dissipation_kernel(-tau, l, &bath, &osc).unwrap();
            prop_assert_eq!(a, -b);
        }
    }
}
