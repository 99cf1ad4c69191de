//! Truncated number-basis propagation of the oscillator master equation,
//! used as an oracle for the moment equations.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use num_complex::Complex64;

use super::coefficients::QbmCoefficients;
use super::moments::CoefficientSchedule;
use crate::error::{invalid, Error, Result};
use crate::model::GaussianState;
use crate::numerics::ode::{integrate_grid, OdeOptions};

pub type CMatrix = DMatrix<Complex64>;

/// Largest admissible population of the highest retained number state.
pub const BOUNDARY_LIMIT: f64 = 1e-8;
const TRACE_LIMIT: f64 = 1e-8;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Non-zero entries of a sparse operator.
#[derive(Debug, Clone, PartialEq)]
struct Sparse {
    entries: Vec<(usize, usize, Complex64)>,
}

impl Sparse {
    fn from_dense(m: &CMatrix) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)].norm() > 0.0 {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        Self { entries }
    }

    /// out += s * A rho, row-major n x n storage.
    fn left(&self, rho: &[Complex64], out: &mut [Complex64], n: usize, s: Complex64) {
        for &(i, k, a) in &self.entries {
            let f = a * s;
            let (src, dst) = (&rho[k * n..(k + 1) * n], i * n);
            for j in 0..n {
                out[dst + j] += f * src[j];
            }
        }
    }

    /// out += s * rho A.
    fn right(&self, rho: &[Complex64], out: &mut [Complex64], n: usize, s: Complex64) {
        for &(k, j, a) in &self.entries {
            let f = a * s;
            for i in 0..n {
                out[i * n + j] += f * rho[i * n + k];
            }
        }
    }
}

/// Number states |0>, ..., |n_max> of an oscillator with mass M and frequency w.
#[derive(Debug, Clone, PartialEq)]
pub struct FockBasis {
    pub n_max: usize,
    pub mass: f64,
    pub omega: f64,
    pub x: CMatrix,
    pub p: CMatrix,
}

impl FockBasis {
    pub fn new(n_max: usize, mass: f64, omega: f64) -> Result<Self> {
        if n_max < 2 {
            return Err(invalid("n_max", "needs at least three number states"));
        }
        if !(mass > 0.0) || !(omega > 0.0) {
            return Err(invalid("basis", "mass and frequency must be positive"));
        }
        let dim = n_max + 1;
        let mut x = CMatrix::zeros(dim, dim);
        let mut p = CMatrix::zeros(dim, dim);
        let sx = (1.0 / (2.0 * mass * omega)).sqrt();
        let sp = (mass * omega / 2.0).sqrt();
        for n in 0..n_max {
            let r = ((n + 1) as f64).sqrt();
            x[(n, n + 1)] = c(sx * r, 0.0);
            x[(n + 1, n)] = c(sx * r, 0.0);
            p[(n, n + 1)] = c(0.0, -sp * r);
            p[(n + 1, n)] = c(0.0, sp * r);
        }
        Ok(Self {
            n_max,
            mass,
            omega,
            x,
            p,
        })
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    /// Pure coherent state |alpha><alpha|, renormalised after truncation.
    pub fn coherent_state(&self, alpha: Complex64) -> CMatrix {
        let dim = self.dim();
        let mut amp = vec![c(0.0, 0.0); dim];
        amp[0] = c((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        for n in 1..dim {
            amp[n] = amp[n - 1] * alpha / (n as f64).sqrt();
        }
        let norm: f64 = amp.iter().map(|a| a.norm_sqr()).sum();
        let v = nalgebra::DVector::from_vec(amp) / c(norm.sqrt(), 0.0);
        &v * v.adjoint()
    }

    /// Coherent amplitude whose state has the given means in this basis.
    pub fn alpha_for(&self, mean_x: f64, mean_p: f64) -> Complex64 {
        c(
            mean_x * (self.mass * self.omega / 2.0).sqrt(),
            mean_p / (2.0 * self.mass * self.omega).sqrt(),
        )
    }

    pub fn moments(&self, rho: &CMatrix) -> GaussianState {
        let ev = |op: &CMatrix| (op * rho).trace().re;
        let x2 = &self.x * &self.x;
        let p2 = &self.p * &self.p;
        let sym = (&self.x * &self.p + &self.p * &self.x) * c(0.5, 0.0);
        let mx = ev(&self.x);
        let mp = ev(&self.p);
        GaussianState::from_array([mx, mp, ev(&x2) - mx * mx, ev(&p2) - mp * mp, ev(&sym) - mx * mp])
    }

    pub fn hamiltonian(&self, omega_r_sq: f64) -> CMatrix {
        let p2 = &self.p * &self.p;
        let x2 = &self.x * &self.x;
        p2 * c(0.5 / self.mass, 0.0) + x2 * c(0.5 * self.mass * omega_r_sq, 0.0)
    }

    /// Dense superoperator (row-major vectorisation) of the generator.
    pub fn generator(&self, k: &QbmCoefficients) -> CMatrix {
        let dim = self.dim();
        let n2 = dim * dim;
        let ops = Operators::new(self);
        let mut out = CMatrix::zeros(n2, n2);
        let mut e = vec![c(0.0, 0.0); n2];
        let mut col = vec![c(0.0, 0.0); n2];
        for j in 0..n2 {
            e.iter_mut().for_each(|v| *v = c(0.0, 0.0));
            e[j] = c(1.0, 0.0);
            ops.apply(k, &e, &mut col, dim);
            for i in 0..n2 {
                out[(i, j)] = col[i];
            }
        }
        out
    }
}

struct Operators {
    x: Sparse,
    p: Sparse,
    x2: Sparse,
    p2: Sparse,
    mass: f64,
}

impl Operators {
    fn new(b: &FockBasis) -> Self {
        Self {
            x: Sparse::from_dense(&b.x),
            p: Sparse::from_dense(&b.p),
            x2: Sparse::from_dense(&(&b.x * &b.x)),
            p2: Sparse::from_dense(&(&b.p * &b.p)),
            mass: b.mass,
        }
    }

    /// out = L(rho) = -i[H, rho] + [x, Z], Z = -D_xx [x,rho] - 2 D_xp [p,rho] - i Gamma {p,rho}.
    fn apply(&self, k: &QbmCoefficients, rho: &[Complex64], out: &mut [Complex64], n: usize) {
        out.iter_mut().for_each(|v| *v = c(0.0, 0.0));
        let hp = c(0.0, -0.5 / self.mass);
        let hx = c(0.0, -0.5 * self.mass * k.omega_r_sq);
        self.p2.left(rho, out, n, hp);
        self.p2.right(rho, out, n, -hp);
        self.x2.left(rho, out, n, hx);
        self.x2.right(rho, out, n, -hx);
        let mut z = vec![c(0.0, 0.0); rho.len()];
        let d = c(-k.d_xx, 0.0);
        self.x.left(rho, &mut z, n, d);
        self.x.right(rho, &mut z, n, -d);
        let e = c(-2.0 * k.d_xp, 0.0);
        self.p.left(rho, &mut z, n, e);
        self.p.right(rho, &mut z, n, -e);
        let g = c(0.0, -k.gamma_xp);
        self.p.left(rho, &mut z, n, g);
        self.p.right(rho, &mut z, n, g);
        self.x.left(&z, out, n, c(1.0, 0.0));
        self.x.right(&z, out, n, c(-1.0, 0.0));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockTrajectory {
    pub tau: Vec<f64>,
    pub states: Vec<CMatrix>,
    pub moments: Vec<GaussianState>,
    pub max_trace_defect: f64,
    pub max_boundary_population: f64,
}

/// Propagates rho0 under the schedule's generator on the truncated basis.
pub fn truncated_basis_propagate(
    schedule: &dyn CoefficientSchedule,
    basis: &FockBasis,
    rho0: &CMatrix,
    tau_grid: &[f64],
    tol: f64,
) -> Result<FockTrajectory> {
    let n = basis.dim();
    if rho0.nrows() != n || rho0.ncols() != n {
        return Err(invalid("rho0", format!("must be {n} x {n}")));
    }
    let boundary = |m: &CMatrix| m[(n - 1, n - 1)].re.abs();
    if boundary(rho0) > BOUNDARY_LIMIT {
        return Err(Error::Truncation {
            population: boundary(rho0),
            limit: BOUNDARY_LIMIT,
            n_max: basis.n_max,
        });
    }
    let ops = Operators::new(basis);
    let y0: Vec<Complex64> = (0..n * n).map(|k| rho0[(k / n, k % n)]).collect();
    let rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        ops.apply(&schedule.at(t), y, dy, n);
    };
    let opts = OdeOptions::with_tol(tol);
    let sol = integrate_grid(rhs, &y0, tau_grid, &opts)?;
    let mut states = Vec::with_capacity(sol.len());
    let mut moments = Vec::with_capacity(sol.len());
    let mut max_trace_defect: f64 = 0.0;
    let mut max_boundary: f64 = 0.0;
    for (t, y) in tau_grid.iter().zip(sol) {
        let rho = CMatrix::from_row_slice(n, n, &y);
        let defect = (rho.trace() - c(1.0, 0.0)).norm();
        if defect > TRACE_LIMIT {
            return Err(Error::InvariantViolation {
                context: "truncated-basis propagation".into(),
                detail: format!("trace defect {defect:.3e} at tau = {t:.6e}"),
            });
        }
        let b = boundary(&rho);
        if b > BOUNDARY_LIMIT {
            return Err(Error::Truncation {
                population: b,
                limit: BOUNDARY_LIMIT,
                n_max: basis.n_max,
            });
        }
        max_trace_defect = max_trace_defect.max(defect);
        max_boundary = max_boundary.max(b);
        moments.push(basis.moments(&rho));
        states.push(rho);
    }
    Ok(FockTrajectory {
        tau: tau_grid.to_vec(),
        states,
        moments,
        max_trace_defect,
        max_boundary_population: max_boundary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorGks {
    /// Coefficients a_jk over the operator basis (x, p).
    pub matrix: Matrix2<Complex64>,
    pub eigenvalues: [f64; 2],
    pub is_lindblad: bool,
}

/// Writes the dissipator as sum a_jk (F_j rho F_k - {F_k F_j, rho}/2) with
/// F = (x, p), plus the Hamiltonian correction Gamma_xp (xp + px)/2.
pub fn oscillator_gks(k: &QbmCoefficients) -> OscillatorGks {
    let off = c(2.0 * k.d_xp, -k.gamma_xp);
    let matrix = Matrix2::new(c(2.0 * k.d_xx, 0.0), off, off.conj(), c(0.0, 0.0));
    let eig = SymmetricEigen::new(matrix);
    let mut ev = [eig.eigenvalues[0], eig.eigenvalues[1]];
    ev.sort_by(|a, b| a.total_cmp(b));
    let scale = ev[1].abs().max(1.0);
    OscillatorGks {
        matrix,
        eigenvalues: ev,
        is_lindblad: ev[0] >= -1e-12 * scale,
    }
}

/// Generator assembled from a GKS matrix on the truncated basis; used to
/// check that `oscillator_gks` reproduces the commutator form.
pub fn generator_from_gks(basis: &FockBasis, k: &QbmCoefficients, gks: &OscillatorGks) -> CMatrix {
    let dim = basis.dim();
    let f = [&basis.x, &basis.p];
    let h = basis.hamiltonian(k.omega_r_sq) + (&basis.x * &basis.p + &basis.p * &basis.x) * c(0.5 * k.gamma_xp, 0.0);
    let mut out = CMatrix::zeros(dim * dim, dim * dim);
    let mut e = CMatrix::zeros(dim, dim);
    for col in 0..dim * dim {
        e.fill(c(0.0, 0.0));
        e[(col / dim, col % dim)] = c(1.0, 0.0);
        let mut l = (&h * &e - &e * &h) * c(0.0, -1.0);
        for j in 0..2 {
            for q in 0..2 {
                let a = gks.matrix[(j, q)];
                if a.norm() == 0.0 {
                    continue;
                }
                let kj = f[q] * f[j];
                l += (f[j] * &e * f[q] - (&kj * &e + &e * &kj) * c(0.5, 0.0)) * a;
            }
        }
        for r in 0..dim * dim {
            out[(r, col)] = l[(r / dim, r % dim)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linspace;
    use crate::qbm::moments::{propagate_moments, ConstantSchedule};

    fn k(w2: f64, dxx: f64, dxp: f64, g: f64) -> QbmCoefficients {
        QbmCoefficients {
            tau: 0.0,
            omega_r_sq: w2,
            d_xx: dxx,
            d_xp: dxp,
            gamma_xp: g,
        }
    }

    #[test]
    fn ground_state_is_stationary() {
        let b = FockBasis::new(20, 1.0, 1.0).unwrap();
        let mut rho = CMatrix::zeros(21, 21);
        rho[(0, 0)] = c(1.0, 0.0);
        let s = ConstantSchedule(k(1.0, 0.0, 0.0, 0.0));
        let tr = truncated_basis_propagate(&s, &b, &rho, &linspace(0.0, 3.0, 7), 1e-10).unwrap();
        for m in &tr.moments {
            assert!((m.var_xx - 0.5).abs() < 1e-9);
            assert!((m.var_pp - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn gks_decomposition_reproduces_generator() {
        let b = FockBasis::new(6, 1.0, 1.3).unwrap();
        let coeffs = k(0.9, 0.2, 0.07, 0.05);
        let gks = oscillator_gks(&coeffs);
        let a = b.generator(&coeffs);
        let bb = generator_from_gks(&b, &coeffs, &gks);
        // [x, p] = i fails only in the top corner of the truncated basis,
        // so compare the action on states supported below it.
        let dim = b.dim();
        let mut diff: f64 = 0.0;
        for col in 0..dim * dim {
            if col / dim + 2 >= dim || col % dim + 2 >= dim {
                continue;
            }
            for row in 0..dim * dim {
                diff = diff.max((a[(row, col)] - bb[(row, col)]).norm());
            }
        }
        assert!(diff < 1e-12, "{diff}");
        assert!(!gks.is_lindblad);
        assert!(oscillator_gks(&k(0.9, 0.2, 0.0, 0.0)).is_lindblad);
    }

    #[test]
    fn moments_follow_the_moment_equations() {
        let b = FockBasis::new(40, 1.0, 1.0).unwrap();
        let coeffs = k(0.85, 0.05, 0.01, 0.02);
        let s = ConstantSchedule(coeffs);
        let rho = b.coherent_state(b.alpha_for(1.0, 0.5));
        let init = b.moments(&rho);
        let grid = linspace(0.0, 4.0, 9);
        let f = truncated_basis_propagate(&s, &b, &rho, &grid, 1e-11).unwrap();
        let m = propagate_moments(&s, 1.0, &init, &grid, 1e-12).unwrap();
        for (a, bm) in f.moments.iter().zip(&m.states) {
            for (u, v) in a.as_array().iter().zip(bm.as_array()) {
                assert!((u - v).abs() < 1e-7, "{u} {v}");
            }
        }
        assert!(f.max_trace_defect < 1e-12);
    }

    #[test]
    fn overflow_of_the_basis_is_reported() {
        let b = FockBasis::new(8, 1.0, 1.0).unwrap();
        let rho = b.coherent_state(c(1.5, 0.0));
        let s = ConstantSchedule(k(1.0, 0.0, 0.0, 0.0));
        let r = truncated_basis_propagate(&s, &b, &rho, &[0.0, 1.0], 1e-8);
        assert!(matches!(r, Err(Error::Truncation { .. })));
    }
}
