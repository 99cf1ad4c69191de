//! Dormand-Prince 5(4) with dense output at prescribed grid points.

use super::Scalar;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Default::default()
        }
    }
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            max_steps: 2_000_000,
            initial_step: None,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combine<T: Scalar>(out: &mut [T], y: &[T], h: f64, terms: &[(f64, &[T])]) {
    for i in 0..y.len() {
        let mut acc = T::zero();
        for (c, k) in terms {
            if *c != 0.0 {
                acc = acc + k[i] * *c;
            }
        }
        out[i] = y[i] + acc * h;
    }
}

/// Integrates y' = f(t, y) and returns the state at every grid point.
/// The first grid point is the initial time and is returned unchanged.
pub fn integrate_grid<T, F>(mut f: F, y0: &[T], grid: &[f64], opts: &OdeOptions) -> Result<Vec<Vec<T>>>
where
    T: Scalar,
    F: FnMut(f64, &[T], &mut [T]),
{
    if !(opts.rtol > 0.0) || !(opts.atol > 0.0) {
        return Err(invalid("tol", "tolerances must be positive"));
    }
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("grid", "must be strictly increasing"));
    }
    let n = y0.len();
    let mut out = Vec::with_capacity(grid.len());
    out.push(y0.to_vec());
    if grid.len() == 1 || n == 0 {
        out.resize(grid.len(), y0.to_vec());
        return Ok(out);
    }

    let mut t = grid[0];
    let mut y = y0.to_vec();
    let mut k1 = vec![T::zero(); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut k5 = k1.clone();
    let mut k6 = k1.clone();
    let mut k7 = k1.clone();
    let mut tmp = k1.clone();
    let mut ynew = k1.clone();
    f(t, &y, &mut k1);

    let span = grid[grid.len() - 1] - t;
    let mut h = opts
        .initial_step
        .unwrap_or_else(|| initial_step(&mut f, t, &y, &k1, opts, span));
    h = h.min(span);
    let mut steps = 0usize;
    let mut next = 1usize;

    while next < grid.len() {
        let target = grid[next];
        let mut hit = false;
        let mut step = h;
        if t + step >= target - 1e-14 * target.abs().max(1.0) {
            step = target - t;
            hit = true;
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Stiffness { t, h: step });
        }

        combine(&mut tmp, &y, step, &[(A21, &k1)]);
        f(t + C2 * step, &tmp, &mut k2);
        combine(&mut tmp, &y, step, &[(A31, &k1), (A32, &k2)]);
        f(t + C3 * step, &tmp, &mut k3);
        combine(&mut tmp, &y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        f(t + C4 * step, &tmp, &mut k4);
        combine(&mut tmp, &y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        f(t + C5 * step, &tmp, &mut k5);
        combine(
            &mut tmp,
            &y,
            step,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        );
        f(t + step, &tmp, &mut k6);
        combine(
            &mut ynew,
            &y,
            step,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        f(t + step, &ynew, &mut k7);

        let mut err_sq = 0.0;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * step;
            let sc = opts.atol + opts.rtol * y[i].magnitude().max(ynew[i].magnitude());
            let r = e.magnitude() / sc;
            err_sq += r * r;
        }
        let err = (err_sq / n as f64).sqrt();
        if !err.is_finite() {
            h = step * 0.2;
            if h.abs() < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Stiffness { t, h });
            }
            continue;
        }

        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        if err <= 1.0 {
            t = if hit { target } else { t + step };
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            if hit {
                out.push(y.clone());
                next += 1;
                while next < grid.len() && grid[next] <= t {
                    out.push(y.clone());
                    next += 1;
                }
                if step >= h {
                    h = step * factor;
                }
            } else {
                h = step * factor;
            }
        } else {
            h = step * factor.min(1.0);
        }
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Stiffness { t, h });
        }
    }
    Ok(out)
}

fn initial_step<T, F>(f: &mut F, t: f64, y: &[T], f0: &[T], opts: &OdeOptions, span: f64) -> f64
where
    T: Scalar,
    F: FnMut(f64, &[T], &mut [T]),
{
    let n = y.len() as f64;
    let scale = |yi: &T| opts.atol + opts.rtol * yi.magnitude();
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..y.len() {
        let sc = scale(&y[i]);
        d0 += (y[i].magnitude() / sc).powi(2);
        d1 += (f0[i].magnitude() / sc).powi(2);
    }
    d0 = (d0 / n).sqrt();
    d1 = (d1 / n).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1: Vec<T> = y.iter().zip(f0).map(|(a, b)| *a + *b * h0).collect();
    let mut f1 = vec![T::zero(); y.len()];
    f(t + h0, &y1, &mut f1);
    let mut d2 = 0.0;
    for i in 0..y.len() {
        let sc = scale(&y[i]);
        d2 += ((f1[i] - f0[i]).magnitude() / sc).powi(2);
    }
    d2 = (d2 / n).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn exponential_decay_matches() {
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let sol = integrate_grid(
            |_, y: &[f64], dy: &mut [f64]| dy[0] = -0.7 * y[0],
            &[1.0],
            &grid,
            &OdeOptions::with_tol(1e-12),
        )
        .unwrap();
        assert_eq!(sol[0][0], 1.0);
        for (t, y) in grid.iter().zip(&sol) {
            assert!((y[0] - (-0.7 * t).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn complex_rotation() {
        let w = Complex64::new(-0.1, 3.0);
        let grid = [0.0, 1.0, 2.0, 7.5];
        let sol = integrate_grid(
            |_, y: &[Complex64], dy: &mut [Complex64]| dy[0] = w * y[0],
            &[Complex64::new(1.0, 0.0)],
            &grid,
            &OdeOptions::with_tol(1e-12),
        )
        .unwrap();
        for (t, y) in grid.iter().zip(&sol) {
            assert!((y[0] - (w * t).exp()).norm() < 1e-9);
        }
    }

    #[test]
    fn stiff_problem_hits_step_limit() {
        let opts = OdeOptions {
            max_steps: 50,
            ..OdeOptions::with_tol(1e-12)
        };
        let r = integrate_grid(
            |_, y: &[f64], dy: &mut [f64]| dy[0] = -1e6 * (y[0] - 1.0),
            &[0.0],
            &[0.0, 10.0],
            &opts,
        );
        assert!(matches!(r, Err(Error::Stiffness { .. })));
    }
}
