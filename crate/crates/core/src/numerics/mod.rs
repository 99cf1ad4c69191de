//! Quadrature, ODE stepping and spline tools used by the physics modules.

pub mod ode;
pub mod quad;
pub mod spline;

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// Field element accepted by the integrators: real or complex doubles.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + std::fmt::Debug
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }

    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

pub fn linspace(start: f64, end: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        n => {
            let h = (end - start) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { end } else { start + h * i as f64 })
                .collect()
        }
    }
}

/// Checks that a time grid starts at zero and increases strictly.
pub fn check_time_grid(grid: &[f64]) -> crate::Result<()> {
    if grid.is_empty() {
        return Err(crate::error::invalid("tau_grid", "empty grid"));
    }
    if grid[0] != 0.0 {
        return Err(crate::error::invalid(
            "tau_grid",
            format!("must start at 0, starts at {}", grid[0]),
        ));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(crate::error::invalid("tau_grid", "must be strictly increasing"));
    }
    Ok(())
}
