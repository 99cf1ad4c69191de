//! Parameter types shared by the physics modules.
//!
//! Everything is expressed in natural units with hbar = k_B = 1; the oscillator
//! mass defaults to 1. Spin matrices live in the energy eigenbasis {|+>, |->}.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub type Mat2 = Matrix2<Complex64>;

pub const HBAR: f64 = 1.0;
pub const KB: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitsConvention {
    pub mass: f64,
}

impl Default for UnitsConvention {
    fn default() -> Self {
        Self { mass: 1.0 }
    }
}

impl UnitsConvention {
    pub fn hbar(&self) -> f64 {
        HBAR
    }

    pub fn kb(&self) -> f64 {
        KB
    }

    pub fn frequency_to_time(&self, frequency: f64) -> f64 {
        1.0 / frequency
    }

    pub fn time_to_frequency(&self, time: f64) -> f64 {
        1.0 / time
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinBosonParams {
    epsilon: f64,
    delta: f64,
    omega0: f64,
    eps_tilde: f64,
    delta_tilde: f64,
}

/// Builds the two-level parameters; Omega0 = sqrt(eps^2 + Delta^2).
pub fn make_spin_params(epsilon: f64, delta: f64) -> Result<SpinBosonParams> {
    if !epsilon.is_finite() || !delta.is_finite() {
        return Err(invalid("epsilon/delta", "must be finite"));
    }
    if epsilon == 0.0 && delta == 0.0 {
        return Err(Error::DegenerateSystem(
            "epsilon = delta = 0 gives a vanishing level splitting".into(),
        ));
    }
    let omega0 = epsilon.hypot(delta) / HBAR;
    Ok(SpinBosonParams {
        epsilon,
        delta,
        omega0,
        eps_tilde: epsilon / (HBAR * omega0),
        delta_tilde: delta / (HBAR * omega0),
    })
}

impl SpinBosonParams {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn eps_tilde(&self) -> f64 {
        self.eps_tilde
    }

    pub fn delta_tilde(&self) -> f64 {
        self.delta_tilde
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    mass: f64,
    omega0: f64,
}

impl OscillatorParams {
    pub fn new(mass: f64, omega0: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(invalid("mass", format!("must be positive, got {mass}")));
        }
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(invalid("omega0", format!("must be positive, got {omega0}")));
        }
        Ok(Self { mass, omega0 })
    }

    pub fn with_frequency(omega0: f64) -> Result<Self> {
        Self::new(UnitsConvention::default().mass, omega0)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CutoffShape {
    #[default]
    Exponential,
    Hard,
}

impl FromStr for CutoffShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exponential" | "exp" => Ok(Self::Exponential),
            "hard" => Ok(Self::Hard),
            other => Err(invalid("shape", format!("unknown cutoff family `{other}`"))),
        }
    }
}

impl fmt::Display for CutoffShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exponential => "exponential",
            Self::Hard => "hard",
        })
    }
}

/// Ohmic bath: Gamma(w) = eta * w * cutoff(w / wc) for w > 0, zero otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpectrum {
    eta: f64,
    cutoff: f64,
    shape: CutoffShape,
    temperature: f64,
}

impl BathSpectrum {
    pub fn new(eta: f64, cutoff: f64, shape: CutoffShape, temperature: f64) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(invalid("eta", format!("must be non-negative, got {eta}")));
        }
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(invalid("cutoff", format!("must be positive, got {cutoff}")));
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(invalid("temperature", format!("must be positive, got {temperature}")));
        }
        Ok(Self {
            eta,
            cutoff,
            shape,
            temperature,
        })
    }

    pub fn ohmic(eta: f64, cutoff: f64, temperature: f64) -> Result<Self> {
        Self::new(eta, cutoff, CutoffShape::Exponential, temperature)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn shape(&self) -> CutoffShape {
        self.shape
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(eta, self.cutoff, self.shape, self.temperature)
    }

    pub fn with_temperature(&self, temperature: f64) -> Result<Self> {
        Self::new(self.eta, self.cutoff, self.shape, temperature)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2 {
    pub entries: Mat2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityReport {
    pub hermiticity_defect: f64,
    pub trace_defect: f64,
    pub min_eigenvalue: f64,
}

impl DensityReport {
    pub fn is_valid(&self) -> bool {
        self.hermiticity_defect <= 1e-12 && self.trace_defect <= 1e-12 && self.min_eigenvalue >= -1e-10
    }
}

pub fn validate_density(rho: &Mat2) -> DensityReport {
    let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let trace_defect = (rho.trace() - Complex64::new(1.0, 0.0)).norm();
    DensityReport {
        hermiticity_defect: herm,
        trace_defect,
        min_eigenvalue: hermitian_eigenvalues_2x2(rho).0,
    }
}

/// Eigenvalues (ascending) of the Hermitian part of a 2x2 matrix.
pub fn hermitian_eigenvalues_2x2(m: &Mat2) -> (f64, f64) {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = (m[(0, 1)] + m[(1, 0)].conj()) * 0.5;
    let mean = 0.5 * (a + d);
    let radius = (0.5 * (a - d)).hypot(b.norm());
    (mean - radius, mean + radius)
}

impl DensityMatrix2 {
    pub fn new(entries: Mat2) -> Self {
        Self { entries }
    }

    pub fn try_new(entries: Mat2) -> Result<Self> {
        let report = validate_density(&entries);
        if !report.is_valid() {
            return Err(invalid(
                "rho",
                format!(
                    "not a density matrix (hermiticity {:.2e}, trace {:.2e}, min eigenvalue {:.2e})",
                    report.hermiticity_defect, report.trace_defect, report.min_eigenvalue
                ),
            ));
        }
        Ok(Self { entries })
    }

    pub fn maximally_mixed() -> Self {
        Self::new(Mat2::identity() * Complex64::new(0.5, 0.0))
    }

    /// rho = (1 + r . sigma) / 2 with sigma_z = |+><+| - |-><-|.
    pub fn from_bloch_vector(r: [f64; 3]) -> Result<Self> {
        let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if norm > 1.0 + 1e-12 {
            return Err(invalid("bloch vector", format!("|r| = {norm} exceeds 1")));
        }
        let c = |re: f64, im: f64| Complex64::new(re, im);
        Ok(Self::new(Mat2::new(
            c(0.5 * (1.0 + r[2]), 0.0),
            c(0.5 * r[0], -0.5 * r[1]),
            c(0.5 * r[0], 0.5 * r[1]),
            c(0.5 * (1.0 - r[2]), 0.0),
        )))
    }

    pub fn bloch_vector(&self) -> [f64; 3] {
        let m = &self.entries;
        [2.0 * m[(1, 0)].re, 2.0 * m[(1, 0)].im, (m[(0, 0)] - m[(1, 1)]).re]
    }

    pub fn report(&self) -> DensityReport {
        validate_density(&self.entries)
    }

    /// Half the trace norm of the difference.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        let d = self.entries - other.entries;
        let (lo, hi) = hermitian_eigenvalues_2x2(&d);
        0.5 * (lo.abs() + hi.abs())
    }

    pub fn purity(&self) -> f64 {
        (self.entries * self.entries).trace().re
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_xx: f64,
    pub var_pp: f64,
    pub cov_xp: f64,
}

impl GaussianState {
    pub fn new(mean_x: f64, mean_p: f64, var_xx: f64, var_pp: f64, cov_xp: f64) -> Result<Self> {
        if !(var_xx > 0.0) || !(var_pp > 0.0) {
            return Err(invalid(
                "variances",
                format!("var_xx = {var_xx}, var_pp = {var_pp} must be positive"),
            ));
        }
        Ok(Self {
            mean_x,
            mean_p,
            var_xx,
            var_pp,
            cov_xp,
        })
    }

    /// Coherent state of an oscillator with the given mass and frequency.
    pub fn coherent(mass: f64, omega: f64, mean_x: f64, mean_p: f64) -> Self {
        Self {
            mean_x,
            mean_p,
            var_xx: HBAR / (2.0 * mass * omega),
            var_pp: HBAR * mass * omega / 2.0,
            cov_xp: 0.0,
        }
    }

    pub fn uncertainty_product(&self) -> f64 {
        self.var_xx * self.var_pp - self.cov_xp * self.cov_xp
    }

    pub fn is_physical(&self) -> bool {
        self.var_xx > 0.0 && self.var_pp > 0.0 && self.uncertainty_product() >= HBAR * HBAR / 4.0 - 1e-9
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.mean_x, self.mean_p, self.var_xx, self.var_pp, self.cov_xp]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        Self {
            mean_x: v[0],
            mean_p: v[1],
            var_xx: v[2],
            var_pp: v[3],
            cov_xp: v[4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CouplingScale(f64);

impl CouplingScale {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(invalid("lambda", format!("must lie in (0, 1], got {lambda}")));
        }
        Ok(Self(lambda))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn squared(&self) -> f64 {
        self.0 * self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn spin_params_examples() {
        let p = make_spin_params(0.0, 1.0).unwrap();
        assert_eq!(p.omega0(), 1.0);
        assert_eq!(p.eps_tilde(), 0.0);
        assert_eq!(p.delta_tilde(), 1.0);
        let p = make_spin_params(3.0, 4.0).unwrap();
        assert_abs_diff_eq!(p.omega0(), 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.eps_tilde(), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(p.delta_tilde(), 0.8, epsilon = 1e-15);
        assert!(matches!(make_spin_params(0.0, 0.0), Err(Error::DegenerateSystem(_))));
    }

    #[test]
    fn density_diagnostics() {
        let r = validate_density(&DensityMatrix2::maximally_mixed().entries);
        assert_eq!(r.hermiticity_defect, 0.0);
        assert_eq!(r.trace_defect, 0.0);
        assert_abs_diff_eq!(r.min_eigenvalue, 0.5, epsilon = 1e-15);

        let plus = DensityMatrix2::from_bloch_vector([0.0, 0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(plus.report().min_eigenvalue, 0.0, epsilon = 1e-15);

        let mut m = Mat2::identity() * Complex64::new(0.55, 0.0);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        m[(1, 0)] = Complex64::new(0.1, 0.0);
        assert_abs_diff_eq!(validate_density(&m).trace_defect, 0.1, epsilon = 1e-12);
        assert!(DensityMatrix2::try_new(m).is_err());
    }

    #[test]
    fn bath_validation() {
        assert!(BathSpectrum::ohmic(-1.0, 1.0, 1.0).is_err());
        assert!(BathSpectrum::ohmic(1.0, 0.0, 1.0).is_err());
        assert!(BathSpectrum::ohmic(1.0, 1.0, 0.0).is_err());
        assert!(BathSpectrum::ohmic(0.0, 1.0, 1.0).is_ok());
        assert!(CouplingScale::new(0.0).is_err());
        assert!(CouplingScale::new(1.5).is_err());
        assert!(OscillatorParams::new(0.0, 1.0).is_err());
        assert_eq!("hard".parse::<CutoffShape>().unwrap(), CutoffShape::Hard);
    }

    #[test]
    fn bloch_vector_round_trip() {
        let rho = DensityMatrix2::from_bloch_vector([0.3, -0.2, 0.5]).unwrap();
        let r = rho.bloch_vector();
        assert_abs_diff_eq!(r[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(r[1], -0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(r[2], 0.5, epsilon = 1e-15);
        let d = rho.trace_distance(&DensityMatrix2::maximally_mixed());
        assert_abs_diff_eq!(d, 0.5 * (0.09f64 + 0.04 + 0.25).sqrt(), epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn tilde_components_are_normalized(e in -1e3f64..1e3, d in -1e3f64..1e3) {
            prop_assume!(e.abs() + d.abs() > 1e-9);
            let p = make_spin_params(e, d).unwrap();
            prop_assert!((p.eps_tilde().powi(2) + p.delta_tilde().powi(2) - 1.0).abs() < 1e-12);
            prop_assert!(p.omega0() > 0.0);
        }

        #[test]
        fn frequency_time_round_trip(f in 1e-6f64..1e6) {
            let u = UnitsConvention::default();
            let back = u.time_to_frequency(u.frequency_to_time(f));
            prop_assert!((back - f).abs() <= 1e-15 * f);
        }
    }
}
