//! Spin master equation as a 4x4 Liouvillian on row-major vectorized density
//! matrices: vec(rho)[2i + j] = rho[i][j], so vec(A X B) = (A kron B^T) vec(X).

use nalgebra::{Matrix3, Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;

use crate::bloch::{propagate_bloch, rapid_generator_with_rate, OperatorTriple};
use crate::error::{invalid, Error, Result};
use crate::model::{BathSpectrum, DensityMatrix2, Mat2, SpinBosonParams};
use crate::numerics::check_time_grid;
use crate::numerics::ode::{integrate_grid, OdeOptions};
use crate::spectral::gamma_theta;

pub type Mat4 = Matrix4<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Liouvillian2 {
    pub matrix: Mat4,
    pub hamiltonian_part: Mat4,
    pub dissipator_part: Mat4,
    pub gamma_theta: f64,
}

pub fn system_hamiltonian(spin: &SpinBosonParams) -> Mat2 {
    let w = spin.omega0();
    Mat2::new(c(w / 2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-w / 2.0, 0.0))
}

/// sigma_z of the site basis written in the energy basis.
pub fn coupling_operator(spin: &SpinBosonParams) -> Mat2 {
    let e = spin.eps_tilde();
    let d = spin.delta_tilde();
    Mat2::new(c(e, 0.0), c(d, 0.0), c(d, 0.0), c(-e, 0.0))
}

pub fn pauli() -> [Mat2; 3] {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    [
        Mat2::new(z, one, one, z),
        Mat2::new(z, -i, i, z),
        Mat2::new(one, z, z, -one),
    ]
}

pub fn vectorize(m: &Mat2) -> Vector4<Complex64> {
    Vector4::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

pub fn unvectorize(v: &Vector4<Complex64>) -> Mat2 {
    Mat2::new(v[0], v[1], v[2], v[3])
}

/// Superoperator of rho -> A rho B.
pub fn sandwich(a: &Mat2, b: &Mat2) -> Mat4 {
    a.kronecker(&b.transpose())
}

pub fn commutator_superop(a: &Mat2) -> Mat4 {
    sandwich(a, &Mat2::identity()) - sandwich(&Mat2::identity(), a)
}

pub fn anticommutator_superop(a: &Mat2) -> Mat4 {
    sandwich(a, &Mat2::identity()) + sandwich(&Mat2::identity(), a)
}

pub fn spin_liouvillian(spin: &SpinBosonParams, bath: &BathSpectrum) -> Liouvillian2 {
    spin_liouvillian_with_rate(spin, gamma_theta(bath))
}

/// d rho / d tau = -i [H_S, rho] - (gamma / 4) [S, [S, rho]].
pub fn spin_liouvillian_with_rate(spin: &SpinBosonParams, gamma: f64) -> Liouvillian2 {
    let h = system_hamiltonian(spin);
    let s = coupling_operator(spin);
    let hamiltonian_part = commutator_superop(&h) * c(0.0, -1.0);
    let cs = commutator_superop(&s);
    let dissipator_part = cs * cs * c(-gamma / 4.0, 0.0);
    Liouvillian2 {
        matrix: hamiltonian_part + dissipator_part,
        hamiltonian_part,
        dissipator_part,
        gamma_theta: gamma,
    }
}

fn trace_row() -> Vector4<Complex64> {
    Vector4::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0))
}

fn max_abs(m: &Mat4) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl Liouvillian2 {
    pub fn trace_preservation_defect(&self) -> f64 {
        (trace_row().transpose() * self.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Defect of L J = J L with J the conjugate-transpose involution.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut p = Mat4::zeros();
        for (a, b) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            p[(a, b)] = c(1.0, 0.0);
        }
        let lhs = self.matrix * p;
        let rhs = p * self.matrix.map(|z| z.conj());
        max_abs(&(lhs - rhs))
    }

    pub fn propagator(&self, tau: f64) -> Mat4 {
        (self.matrix * c(tau, 0.0)).exp()
    }
}

pub fn propagate_density(
    l: &Liouvillian2,
    rho0: &DensityMatrix2,
    tau_grid: &[f64],
    tol: f64,
) -> Result<Vec<DensityMatrix2>> {
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    check_time_grid(tau_grid)?;
    let report = rho0.report();
    if !report.is_valid() {
        return Err(invalid("rho0", "initial state is not a valid density matrix"));
    }
    let m = l.matrix;
    let y0: Vec<Complex64> = vectorize(&rho0.entries).iter().copied().collect();
    let sol = integrate_grid(
        |_t, y: &[Complex64], dy: &mut [Complex64]| {
            for i in 0..4 {
                dy[i] = m[(i, 0)] * y[0] + m[(i, 1)] * y[1] + m[(i, 2)] * y[2] + m[(i, 3)] * y[3];
            }
        },
        &y0,
        tau_grid,
        &OdeOptions::with_tol(tol),
    )?;
    let mut out = Vec::with_capacity(sol.len());
    for (t, y) in tau_grid.iter().zip(sol) {
        let rho = DensityMatrix2::new(Mat2::new(y[0], y[1], y[2], y[3]));
        let r = rho.report();
        if r.trace_defect > 1e-9 || r.min_eigenvalue < -1e-9 {
            return Err(Error::InvariantViolation {
                context: "propagate_density".into(),
                detail: format!(
                    "at tau = {t}: trace defect {:.3e}, min eigenvalue {:.3e}",
                    r.trace_defect, r.min_eigenvalue
                ),
            });
        }
        out.push(rho);
    }
    Ok(out)
}

/// Null-space basis from singular values below 1e-10 of the largest.
pub fn steady_states(l: &Liouvillian2) -> Vec<Mat2> {
    let svd = l.matrix.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors were requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut basis = Vec::new();
    for k in 0..4 {
        if smax == 0.0 || svd.singular_values[k] <= 1e-10 * smax {
            let row = vt.row(k);
            let v = Vector4::new(row[0].conj(), row[1].conj(), row[2].conj(), row[3].conj());
            basis.push(unvectorize(&v));
        }
    }
    basis
}

/// Distance from `m` to the span of `basis` (Frobenius norm of the residual).
pub fn distance_to_span(m: &Mat2, basis: &[Mat2]) -> f64 {
    let mut ortho: Vec<Vector4<Complex64>> = Vec::new();
    for b in basis {
        let mut v = vectorize(b);
        for q in &ortho {
            v -= q * q.dotc(&v);
        }
        let n = v.norm();
        if n > 1e-12 {
            ortho.push(v / c(n, 0.0));
        }
    }
    let mut r = vectorize(m);
    for q in &ortho {
        r -= q * q.dotc(&r);
    }
    r.norm()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GksReport {
    pub gks_matrix: Matrix3<Complex64>,
    pub eigenvalues: [f64; 3],
    pub min_eigenvalue: f64,
    pub is_lindblad: bool,
}

/// Coefficients a_jk of L(rho) = sum a_jk sigma_j rho sigma_k + (terms with
/// the identity), over the Pauli matrices, and the sign of their spectrum.
pub fn gks_check(l: &Mat4) -> Result<GksReport> {
    let scale = max_abs(l).max(1.0);
    let defect = (trace_row().transpose() * l)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if defect > 1e-12 * scale {
        return Err(Error::Structural(format!(
            "generator is not trace preserving (defect {defect:.3e})"
        )));
    }
    let s = pauli();
    let mut a = Matrix3::<Complex64>::zeros();
    for j in 0..3 {
        for k in 0..3 {
            // sigma_j rho sigma_k; basis elements have HS norm 4 in superoperator space
            let basis = sandwich(&s[j], &s[k]);
            a[(j, k)] = (basis.adjoint() * l).trace() / 4.0;
        }
    }
    let herm = (a + a.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut ev = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
    ev.sort_by(|x, y| x.total_cmp(y));
    Ok(GksReport {
        gks_matrix: herm,
        eigenvalues: ev,
        min_eigenvalue: ev[0],
        is_lindblad: ev[0] >= -1e-12,
    })
}

/// Reshuffles a propagator into its Choi matrix and returns the smallest eigenvalue.
pub fn choi_min_eigenvalue(propagator: &Mat4) -> f64 {
    let mut choi = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let col = 2 * i + j;
            for k in 0..2 {
                for l in 0..2 {
                    choi[(2 * i + k, 2 * j + l)] = propagator[(2 * k + l, col)];
                }
            }
        }
    }
    let herm = (choi + choi.adjoint()) * c(0.5, 0.0);
    SymmetricEigen::new(herm)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Largest violation of
/// <+|rho|-> = tr[rho0 D-(tau)], <-|rho|+> = tr[rho0 D+(tau)],
/// <+-|rho|+-> = (1 +- tr[rho0 D0(tau)]) / 2.
pub fn bloch_density_bridge(
    spin: &SpinBosonParams,
    bath: &BathSpectrum,
    rho0: &DensityMatrix2,
    tau_grid: &[f64],
    tol: f64,
) -> Result<f64> {
    bridge_with_rate(spin, gamma_theta(bath), rho0, tau_grid, tol)
}

pub fn bridge_discrepancies(
    spin: &SpinBosonParams,
    gamma: f64,
    rho0: &DensityMatrix2,
    tau_grid: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    let l = spin_liouvillian_with_rate(spin, gamma);
    let rhos = propagate_density(&l, rho0, tau_grid, tol)?;
    let gen = rapid_generator_with_rate(spin, gamma);
    let ops = propagate_bloch(&gen, &OperatorTriple::basic(), tau_grid, tol)?;
    let r0 = rho0.entries;
    Ok(rhos
        .iter()
        .zip(&ops)
        .map(|(rho, op)| {
            let m = rho.entries;
            let pm = (r0 * op.minus()).trace();
            let mp = (r0 * op.plus()).trace();
            let z = (r0 * op.zero()).trace();
            let one = c(1.0, 0.0);
            [
                (m[(0, 1)] - pm).norm(),
                (m[(1, 0)] - mp).norm(),
                (m[(0, 0)] - (one + z) * 0.5).norm(),
                (m[(1, 1)] - (one - z) * 0.5).norm(),
            ]
            .into_iter()
            .fold(0.0, f64::max)
        })
        .collect())
}

pub fn bridge_with_rate(
    spin: &SpinBosonParams,
    gamma: f64,
    rho0: &DensityMatrix2,
    tau_grid: &[f64],
    tol: f64,
) -> Result<f64> {
    let worst = bridge_discrepancies(spin, gamma, rho0, tau_grid, tol)?
        .into_iter()
        .fold(0.0, f64::max);
    if worst > 100.0 * tol {
        return Err(Error::ConventionMismatch {
            discrepancy: worst,
            limit: 100.0 * tol,
        });
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_spin_params;
    use crate::numerics::linspace;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn random_state(r: [f64; 3]) -> DensityMatrix2 {
        DensityMatrix2::from_bloch_vector(r).unwrap()
    }

    #[test]
    fn vectorization_convention() {
        let a = Mat2::new(c(1.0, 2.0), c(0.5, 0.0), c(-1.0, 0.3), c(0.0, 1.0));
        let b = Mat2::new(c(0.2, 0.0), c(1.0, -1.0), c(3.0, 0.0), c(0.1, 0.1));
        let x = Mat2::new(c(0.7, 0.0), c(0.0, 1.0), c(2.0, 0.0), c(-1.0, 0.5));
        let lhs = vectorize(&(a * x * b));
        let rhs = sandwich(&a, &b) * vectorize(&x);
        assert!((lhs - rhs).norm() < 1e-14);
        assert_eq!(unvectorize(&vectorize(&x)), x);
    }

    #[test]
    fn structural_invariants() {
        let s = make_spin_params(3.0, 4.0).unwrap();
        let l = spin_liouvillian_with_rate(&s, 1.3);
        assert!(l.trace_preservation_defect() < 1e-12);
        assert!(l.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn double_commutator_identity() {
        let s = make_spin_params(0.4, -1.7).unwrap();
        let gamma = 0.9;
        let l = spin_liouvillian_with_rate(&s, gamma);
        let sz = coupling_operator(&s);
        let alt = (sandwich(&sz, &sz) - Mat4::identity()) * c(gamma / 2.0, 0.0);
        assert!(max_abs(&(l.dissipator_part - alt)) < 1e-14);
    }

    #[test]
    fn zero_coupling_has_no_dissipator() {
        let s = make_spin_params(1.0, 2.0).unwrap();
        let b = BathSpectrum::ohmic(0.0, 1.0, 1.0).unwrap();
        let l = spin_liouvillian(&s, &b);
        assert_eq!(max_abs(&l.dissipator_part), 0.0);
    }

    #[test]
    fn pure_dephasing() {
        let s = make_spin_params(1.0, 0.0).unwrap();
        let gamma = 0.6;
        let l = spin_liouvillian_with_rate(&s, gamma);
        let grid = linspace(0.0, 10.0, 41);
        let rho0 = random_state([0.6, 0.2, 0.5]);
        let traj = propagate_density(&l, &rho0, &grid, 1e-12).unwrap();
        for (t, rho) in grid.iter().zip(&traj) {
            assert_abs_diff_eq!(rho.entries[(0, 0)].re, rho0.entries[(0, 0)].re, epsilon = 1e-11);
            let ratio = rho.entries[(0, 1)].norm() / rho0.entries[(0, 1)].norm();
            assert!((ratio / (-gamma * t).exp() - 1.0).abs() < 1e-8);
        }
        let diag = random_state([0.0, 0.0, -0.3]);
        let traj = propagate_density(&l, &diag, &grid, 1e-12).unwrap();
        for rho in &traj {
            assert!((rho.entries - diag.entries).norm() < 1e-12);
        }
    }

    #[test]
    fn maximally_mixed_is_fixed() {
        let s = make_spin_params(3.0, 4.0).unwrap();
        let l = spin_liouvillian_with_rate(&s, 1.0);
        let grid = linspace(0.0, 5.0, 11);
        let rho0 = DensityMatrix2::maximally_mixed();
        for rho in propagate_density(&l, &rho0, &grid, 1e-10).unwrap() {
            assert!((rho.entries - rho0.entries).norm() < 1e-14);
        }
    }

    #[test]
    fn steady_state_dimensions() {
        let half = DensityMatrix2::maximally_mixed().entries;
        let generic = steady_states(&spin_liouvillian_with_rate(&make_spin_params(3.0, 4.0).unwrap(), 1.0));
        assert_eq!(generic.len(), 1);
        assert!(distance_to_span(&half, &generic) < 1e-10);

        let dephasing = steady_states(&spin_liouvillian_with_rate(&make_spin_params(1.0, 0.0).unwrap(), 1.0));
        assert_eq!(dephasing.len(), 2);
        let p_plus = Mat2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        let p_minus = Mat2::new(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        assert!(distance_to_span(&p_plus, &dephasing) < 1e-10);
        assert!(distance_to_span(&p_minus, &dephasing) < 1e-10);

        let free = steady_states(&spin_liouvillian_with_rate(&make_spin_params(3.0, 4.0).unwrap(), 0.0));
        assert_eq!(free.len(), 2);
        assert!(distance_to_span(&p_plus, &free) < 1e-10);
        assert!(distance_to_span(&p_minus, &free) < 1e-10);
    }

    #[test]
    fn gks_of_spin_generator() {
        let s = make_spin_params(3.0, 4.0).unwrap();
        let gamma = 1.7;
        let l = spin_liouvillian_with_rate(&s, gamma);
        let r = gks_check(&l.matrix).unwrap();
        assert!(r.is_lindblad);
        assert_abs_diff_eq!(r.eigenvalues[2], gamma / 2.0, epsilon = 1e-12);
        assert!(r.eigenvalues[0].abs() < 1e-12 && r.eigenvalues[1].abs() < 1e-12);
        // the nonzero direction is (delta~, 0, eps~) in (x, y, z)
        let v = nalgebra::Vector3::new(c(0.8, 0.0), c(0.0, 0.0), c(0.6, 0.0));
        let av = r.gks_matrix * v;
        assert!((av - v * c(gamma / 2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn gks_detects_anticommutator_term() {
        let s = make_spin_params(3.0, 4.0).unwrap();
        let l = spin_liouvillian_with_rate(&s, 1.0);
        let [sx, sy, _] = pauli();
        let kappa = 0.2;
        let extra = commutator_superop(&sx) * anticommutator_superop(&sy) * c(0.0, -kappa);
        let r = gks_check(&(l.matrix + extra)).unwrap();
        assert!(!r.is_lindblad);
        let bare = gks_check(&(commutator_superop(&sx) * anticommutator_superop(&sy) * c(0.0, -kappa))).unwrap();
        assert_abs_diff_eq!(bare.min_eigenvalue, -kappa, epsilon = 1e-12);
        assert_abs_diff_eq!(bare.eigenvalues[2], kappa, epsilon = 1e-12);
    }

    #[test]
    fn gks_of_pure_hamiltonian() {
        let s = make_spin_params(3.0, 4.0).unwrap();
        let l = spin_liouvillian_with_rate(&s, 0.0);
        let r = gks_check(&l.matrix).unwrap();
        assert!(r.is_lindblad);
        assert!(r.gks_matrix.iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn gks_rejects_trace_breaking_generator() {
        let m = Mat4::identity() * c(-1.0, 0.0);
        assert!(matches!(gks_check(&m), Err(Error::Structural(_))));
    }

    #[test]
    fn bridge_examples() {
        let s = make_spin_params(3.0, 4.0).unwrap();
        let grid = linspace(0.0, 10.0, 101);
        let rho0 = random_state([0.3, -0.5, 0.6]);
        let d = bridge_with_rate(&s, 1.0, &rho0, &grid, 1e-10).unwrap();
        assert!(d < 1e-8, "{d}");
        let free = bridge_with_rate(&s, 0.0, &rho0, &grid, 1e-10).unwrap();
        assert!(free < 1e-10 * 10.0);
        let start = bridge_discrepancies(&s, 1.0, &rho0, &[0.0], 1e-10).unwrap();
        assert!(start[0] < 1e-15);
    }

    #[test]
    fn complete_positivity_of_propagator() {
        let s = make_spin_params(-1.0, 2.5).unwrap();
        let l = spin_liouvillian_with_rate(&s, 2.0);
        for &t in &[0.0, 0.01, 0.3, 1.0, 5.0, 40.0] {
            assert!(choi_min_eigenvalue(&l.propagator(t)) >= -1e-9);
        }
    }

    proptest! {
        #[test]
        fn purity_stays_bounded(rx in -0.57f64..0.57, ry in -0.57f64..0.57, rz in -0.57f64..0.57, e in -3.0f64..3.0, d in 0.1f64..3.0, gamma in 0.0f64..3.0) {
            let s = make_spin_params(e, d).unwrap();
            let l = spin_liouvillian_with_rate(&s, gamma);
            let grid = linspace(0.0, 6.0, 13);
            for rho in propagate_density(&l, &random_state([rx, ry, rz]), &grid, 1e-10).unwrap() {
                prop_assert!(rho.purity() <= 1.0 + 1e-9);
            }
        }
    }
}
