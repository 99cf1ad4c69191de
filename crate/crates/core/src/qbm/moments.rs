//! Gaussian moments under
//! d rho = -i[H, rho] - D_xx [x,[x,rho]] - 2 D_xp [x,[p,rho]] - i Gamma_xp [x,{p,rho}],
//! H = p^2/2M + M Omega_R^2 x^2 / 2. With C the symmetrised covariance:
//!
//! x' = p/M, p' = -M W^2 x - 2 Gamma p,
//! Vxx' = 2C/M, Vpp' = -2 M W^2 C - 4 Gamma Vpp + 2 D_xx,
//! C' = Vpp/M - M W^2 Vxx - 2 Gamma C - 2 D_xp.

use super::coefficients::{ExactTable, QbmCoefficients};
use crate::error::{invalid, Error, Result};
use crate::model::GaussianState;
use crate::numerics::ode::{integrate_grid, OdeOptions};
use crate::numerics::spline::CubicSpline;

pub trait CoefficientSchedule: Sync {
    fn at(&self, tau: f64) -> QbmCoefficients;
}

/// Time-independent coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantSchedule(pub QbmCoefficients);

impl CoefficientSchedule for ConstantSchedule {
    fn at(&self, tau: f64) -> QbmCoefficients {
        QbmCoefficients { tau, ..self.0 }
    }
}

/// Cubic splines through tabulated coefficients. Values before the first
/// sample and after the last are held constant.
#[derive(Debug, Clone)]
pub struct TabulatedSchedule {
    first: QbmCoefficients,
    last: QbmCoefficients,
    splines: Option<[CubicSpline; 4]>,
}

/// Node neighbourhoods left out when a schedule is built from an exact
/// table, as a fraction of max |G|.
pub const SCHEDULE_NODE_GAP: f64 = 0.05;

impl TabulatedSchedule {
    pub fn new(samples: &[QbmCoefficients]) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("samples", "schedule needs at least one sample"));
        }
        let first = samples[0];
        let last = samples[samples.len() - 1];
        if samples.len() == 1 {
            return Ok(Self {
                first,
                last,
                splines: None,
            });
        }
        let tau: Vec<f64> = samples.iter().map(|c| c.tau).collect();
        let col = |f: fn(&QbmCoefficients) -> f64| -> Result<CubicSpline> {
            let y: Vec<f64> = samples.iter().map(f).collect();
            CubicSpline::new(&tau, &y)
        };
        Ok(Self {
            first,
            last,
            splines: Some([
                col(|c| c.omega_r_sq)?,
                col(|c| c.d_xx)?,
                col(|c| c.d_xp)?,
                col(|c| c.gamma_xp)?,
            ]),
        })
    }

    /// Samples every grid point whose |G| exceeds `SCHEDULE_NODE_GAP`
    /// of its maximum; node neighbourhoods are bridged by the splines.
    pub fn from_table(table: &ExactTable) -> Result<Self> {
        let p = &table.propagator;
        let gap = SCHEDULE_NODE_GAP * p.max_abs();
        let samples: Vec<QbmCoefficients> = (0..p.len())
            .filter(|&i| p.g[i].abs() >= gap)
            .filter_map(|i| table.coefficients_at(i).ok())
            .collect();
        Self::new(&samples)
    }
}

impl CoefficientSchedule for TabulatedSchedule {
    fn at(&self, tau: f64) -> QbmCoefficients {
        if tau <= self.first.tau {
            return QbmCoefficients { tau, ..self.first };
        }
        if tau >= self.last.tau {
            return QbmCoefficients { tau, ..self.last };
        }
        match &self.splines {
            None => QbmCoefficients { tau, ..self.first },
            Some([w, dxx, dxp, g]) => QbmCoefficients {
                tau,
                omega_r_sq: w.eval(tau),
                d_xx: dxx.eval(tau),
                d_xp: dxp.eval(tau),
                gamma_xp: g.eval(tau),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentTrajectory {
    pub tau: Vec<f64>,
    pub states: Vec<GaussianState>,
}

const BLOWUP: f64 = 1e12;

/// Integrates the five moment equations on `tau_grid`.
pub fn propagate_moments(
    schedule: &dyn CoefficientSchedule,
    mass: f64,
    initial: &GaussianState,
    tau_grid: &[f64],
    tol: f64,
) -> Result<MomentTrajectory> {
    if !(mass > 0.0) {
        return Err(invalid("mass", "must be positive"));
    }
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let c = schedule.at(t);
        let mw2 = mass * c.omega_r_sq;
        let g = c.gamma_xp;
        dy[0] = y[1] / mass;
        dy[1] = -mw2 * y[0] - 2.0 * g * y[1];
        dy[2] = 2.0 * y[4] / mass;
        dy[3] = -2.0 * mw2 * y[4] - 4.0 * g * y[3] + 2.0 * c.d_xx;
        dy[4] = y[3] / mass - mw2 * y[2] - 2.0 * g * y[4] - 2.0 * c.d_xp;
    };
    let sol = integrate_grid(rhs, &initial.as_array(), tau_grid, &OdeOptions::with_tol(tol))?;
    let mut states = Vec::with_capacity(sol.len());
    let mut warned = false;
    for (t, y) in tau_grid.iter().zip(sol) {
        let s = GaussianState::from_array([y[0], y[1], y[2], y[3], y[4]]);
        if y.iter().any(|v| !v.is_finite() || v.abs() > BLOWUP) || s.var_xx <= 0.0 || s.var_pp <= 0.0 {
            return Err(Error::Instability(format!(
                "covariance left the physical region at tau = {t:.6e}: {s:?}"
            )));
        }
        if !s.is_physical() && !warned {
            log::warn!(
                "uncertainty product {:.6e} below 1/4 at tau = {t:.6e}",
                s.uncertainty_product()
            );
            warned = true;
        }
        states.push(s);
    }
    Ok(MomentTrajectory {
        tau: tau_grid.to_vec(),
        states,
    })
}
