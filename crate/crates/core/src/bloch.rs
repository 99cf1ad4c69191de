//! The 3x3 Bloch generator acting on the dressed spin operators
//! (D+, D0, D-), for rapid decay and for weak damping.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::model::{BathSpectrum, Mat2, SpinBosonParams};
use crate::numerics::check_time_grid;
use crate::numerics::ode::{integrate_grid, OdeOptions};
use crate::spectral::{gamma_theta, gamma_theta_weak};

pub type Mat3 = Matrix3<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Rapid,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochGenerator {
    pub matrix: Mat3,
    pub gamma_theta: f64,
    pub omega0: f64,
    pub regime: Regime,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rapid_generator(spin: &SpinBosonParams, bath: &BathSpectrum) -> BlochGenerator {
    rapid_generator_with_rate(spin, gamma_theta(bath))
}

pub fn rapid_generator_with_rate(spin: &SpinBosonParams, gamma: f64) -> BlochGenerator {
    let e = spin.eps_tilde();
    let d = spin.delta_tilde();
    let w = spin.omega0();
    let diag = -(d * d + 2.0 * e * e) * gamma / 2.0;
    let corner = d * d * gamma / 2.0;
    let side = e * d * gamma / 2.0;
    let matrix = Mat3::new(
        c(diag, w),
        c(side, 0.0),
        c(corner, 0.0),
        c(2.0 * side, 0.0),
        c(-d * d * gamma, 0.0),
        c(2.0 * side, 0.0),
        c(corner, 0.0),
        c(side, 0.0),
        c(diag, -w),
    );
    BlochGenerator {
        matrix,
        gamma_theta: gamma,
        omega0: w,
        regime: Regime::Rapid,
    }
}

pub fn weak_generator(spin: &SpinBosonParams, bath: &BathSpectrum) -> Result<BlochGenerator> {
    let gamma = gamma_theta_weak(bath, spin.omega0())?;
    Ok(weak_generator_with_rate(spin, gamma))
}

pub fn weak_generator_with_rate(spin: &SpinBosonParams, gamma: f64) -> BlochGenerator {
    let d2 = spin.delta_tilde().powi(2);
    let gamma_d = d2 * gamma / 2.0;
    let gamma_r = d2 * gamma;
    let w = spin.omega0();
    BlochGenerator {
        matrix: Mat3::from_diagonal(&Vector3::new(c(-gamma_d, w), c(-gamma_r, 0.0), c(-gamma_d, -w))),
        gamma_theta: gamma,
        omega0: w,
        regime: Regime::Weak,
    }
}

impl BlochGenerator {
    /// Decay rate of D+- (inverse decoherence time).
    pub fn decoherence_rate(&self) -> f64 {
        -self.matrix[(0, 0)].re
    }

    /// Decay rate of D0 (inverse relaxation time).
    pub fn relaxation_rate(&self) -> f64 {
        -self.matrix[(1, 1)].re
    }

    pub fn propagator(&self, tau: f64) -> Mat3 {
        (self.matrix * c(tau, 0.0)).exp()
    }
}

/// Operator-valued unknowns of the Bloch equation, ordered (D+, D0, D-).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorTriple(pub [Mat2; 3]);

impl OperatorTriple {
    /// D+ = |+><-|, D0 = sigma_z, D- = |-><+| in the energy basis.
    pub fn basic() -> Self {
        let z = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        Self([
            Mat2::new(z, one, z, z),
            Mat2::new(one, z, z, -one),
            Mat2::new(z, z, one, z),
        ])
    }

    pub fn plus(&self) -> &Mat2 {
        &self.0[0]
    }

    pub fn zero(&self) -> &Mat2 {
        &self.0[1]
    }

    pub fn minus(&self) -> &Mat2 {
        &self.0[2]
    }

    pub fn linear_combination(&self, a: Complex64, other: &Self, b: Complex64) -> Self {
        Self(std::array::from_fn(|k| self.0[k] * a + other.0[k] * b))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (0..3)
            .flat_map(|k| (self.0[k] - other.0[k]).iter().map(|z| z.norm()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }

    fn apply(&self, u: &Mat3) -> Self {
        Self(std::array::from_fn(|a| {
            (0..3).fold(Mat2::zeros(), |acc, b| acc + self.0[b] * u[(a, b)])
        }))
    }
}

/// Integrates d/dtau (D+, D0, D-) = B (D+, D0, D-) entry by entry.
pub fn propagate_bloch(
    gen: &BlochGenerator,
    initial: &OperatorTriple,
    tau_grid: &[f64],
    tol: f64,
) -> Result<Vec<OperatorTriple>> {
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    check_time_grid(tau_grid)?;
    // state layout: component a, matrix entry (i, j) at a * 4 + i * 2 + j
    let mut y0 = vec![c(0.0, 0.0); 12];
    for a in 0..3 {
        for i in 0..2 {
            for j in 0..2 {
                y0[a * 4 + i * 2 + j] = initial.0[a][(i, j)];
            }
        }
    }
    let b = gen.matrix;
    let rhs = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        for a in 0..3 {
            for e in 0..4 {
                dy[a * 4 + e] = b[(a, 0)] * y[e] + b[(a, 1)] * y[4 + e] + b[(a, 2)] * y[8 + e];
            }
        }
    };
    let sol = integrate_grid(rhs, &y0, tau_grid, &OdeOptions::with_tol(tol))?;
    Ok(sol
        .into_iter()
        .map(|y| {
            OperatorTriple(std::array::from_fn(|a| {
                Mat2::new(y[a * 4], y[a * 4 + 1], y[a * 4 + 2], y[a * 4 + 3])
            }))
        })
        .collect())
}

/// Constant-generator cross-check through the matrix exponential.
pub fn propagate_bloch_exact(
    gen: &BlochGenerator,
    initial: &OperatorTriple,
    tau_grid: &[f64],
) -> Result<Vec<OperatorTriple>> {
    check_time_grid(tau_grid)?;
    Ok(tau_grid
        .iter()
        .map(|&t| {
            if t == 0.0 {
                *initial
            } else {
                initial.apply(&gen.propagator(t))
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumClass {
    TwoComplexOneReal,
    ThreeReal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySpectrum {
    pub eigenvalues: [Complex64; 3],
    pub decay_constants: [f64; 3],
    pub classification: SpectrumClass,
}

impl DecaySpectrum {
    pub fn real_part_sum(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.re).sum()
    }
}

/// Eigenvalues of the generator, classified by the size of their imaginary parts.
///
/// Exchanging D+ and D- maps the generator to its complex conjugate, so the
/// spectrum is closed under conjugation: one eigenvalue is always real and the
/// other two are a conjugate pair or both real. The computed spectrum is
/// symmetrized accordingly.
pub fn decay_spectrum(gen: &BlochGenerator) -> DecaySpectrum {
    let raw = eigenvalues3(&gen.matrix);
    let norm = gen.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let threshold = 1e-10 * gen.gamma_theta + 64.0 * f64::EPSILON * norm;

    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| raw[a].im.abs().total_cmp(&raw[b].im.abs()));
    let real = c(raw[idx[0]].re, 0.0);
    let (p, q) = (raw[idx[1]], raw[idx[2]]);
    let (eigenvalues, classification) = if p.im.abs() <= threshold && q.im.abs() <= threshold {
        let mut v = [real, c(p.re, 0.0), c(q.re, 0.0)];
        v.sort_by(|a, b| b.re.total_cmp(&a.re));
        (v, SpectrumClass::ThreeReal)
    } else {
        let re = 0.5 * (p.re + q.re);
        let im = 0.5 * (p.im.abs() + q.im.abs());
        ([c(re, im), real, c(re, -im)], SpectrumClass::TwoComplexOneReal)
    };
    DecaySpectrum {
        eigenvalues,
        decay_constants: eigenvalues.map(|z| -z.re),
        classification,
    }
}

fn eigenvalues3(m: &Mat3) -> [Complex64; 3] {
    let off = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]
        .iter()
        .all(|&(i, j)| m[(i, j)] == c(0.0, 0.0));
    if off {
        return [m[(0, 0)], m[(1, 1)], m[(2, 2)]];
    }
    let schur = m.schur();
    let (_, t) = schur.unpack();
    [t[(0, 0)], t[(1, 1)], t[(2, 2)]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimePoint {
    pub epsilon: f64,
    pub delta: f64,
    pub gamma_theta: f64,
    pub spectrum: DecaySpectrum,
}

/// Classification over the Cartesian product, spin-major ordering.
pub fn scan_decay_regimes(spin_grid: &[SpinBosonParams], gamma_grid: &[f64]) -> Result<Vec<RegimePoint>> {
    if gamma_grid.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(invalid("gamma_grid", "rates must be finite and non-negative"));
    }
    let points: Vec<(SpinBosonParams, f64)> = spin_grid
        .iter()
        .flat_map(|s| gamma_grid.iter().map(move |g| (*s, *g)))
        .collect();
    Ok(points
        .par_iter()
        .map(|(s, g)| RegimePoint {
            epsilon: s.epsilon(),
            delta: s.delta(),
            gamma_theta: *g,
            spectrum: decay_spectrum(&rapid_generator_with_rate(s, *g)),
        })
        .collect())
}
