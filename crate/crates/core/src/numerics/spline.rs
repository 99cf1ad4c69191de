use crate::error::{invalid, Result};

/// C2 cubic spline in slope form. End slopes come from the interpolating
/// polynomial through the outermost five knots.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

fn lagrange_slope(x: &[f64], y: &[f64], at: usize) -> f64 {
    let n = x.len();
    let mut slope = 0.0;
    for j in 0..n {
        let mut d = 0.0;
        if j == at {
            for k in 0..n {
                if k != j {
                    d += 1.0 / (x[at] - x[k]);
                }
            }
        } else {
            let mut num = 1.0;
            let mut den = 1.0;
            for k in 0..n {
                if k != j {
                    den *= x[j] - x[k];
                    if k != at {
                        num *= x[at] - x[k];
                    }
                }
            }
            d = num / den;
        }
        slope += d * y[j];
    }
    slope
}

impl CubicSpline {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n != y.len() {
            return Err(invalid("spline", "x and y lengths differ"));
        }
        if n < 2 {
            return Err(invalid("spline", "needs at least two knots"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("spline", "knots must increase strictly"));
        }
        let mut m = vec![0.0; n];
        if n < 4 {
            for i in 0..n {
                let (lo, hi) = if i + 1 < n { (i, i + 1) } else { (i - 1, i) };
                m[i] = (y[hi] - y[lo]) / (x[hi] - x[lo]);
            }
            return Ok(Self {
                x: x.to_vec(),
                y: y.to_vec(),
                m,
            });
        }
        let w = n.min(5);
        m[0] = lagrange_slope(&x[..w], &y[..w], 0);
        m[n - 1] = lagrange_slope(&x[n - w..], &y[n - w..], w - 1);

        // Thomas algorithm for interior slopes.
        let k = n - 2;
        let mut sub = vec![0.0; k];
        let mut diag = vec![0.0; k];
        let mut sup = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for r in 0..k {
            let i = r + 1;
            let hl = x[i] - x[i - 1];
            let hr = x[i + 1] - x[i];
            sub[r] = 1.0 / hl;
            diag[r] = 2.0 * (1.0 / hl + 1.0 / hr);
            sup[r] = 1.0 / hr;
            rhs[r] = 3.0 * ((y[i] - y[i - 1]) / (hl * hl) + (y[i + 1] - y[i]) / (hr * hr));
        }
        rhs[0] -= sub[0] * m[0];
        rhs[k - 1] -= sup[k - 1] * m[n - 1];
        for r in 1..k {
            let w = sub[r] / diag[r - 1];
            diag[r] -= w * sup[r - 1];
            rhs[r] -= w * rhs[r - 1];
        }
        m[k] = rhs[k - 1] / diag[k - 1];
        for r in (0..k - 1).rev() {
            m[r + 1] = (rhs[r] - sup[r] * m[r + 2]) / diag[r];
        }
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        })
    }

    pub fn knot_slopes(&self) -> &[f64] {
        &self.m
    }

    fn locate(&self, t: f64) -> usize {
        match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.x.len() - 2),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.y[i] + h10 * h * self.m[i] + h01 * self.y[i + 1] + h11 * h * self.m[i + 1]
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let d00 = 6.0 * s * (s - 1.0) / h;
        let d10 = (1.0 - s) * (1.0 - 3.0 * s);
        let d01 = -d00;
        let d11 = s * (3.0 * s - 2.0);
        d00 * self.y[i] + d10 * self.m[i] + d01 * self.y[i + 1] + d11 * self.m[i + 1]
    }
}

/// Cubic Hermite interpolation from values and exact slopes at the knots.
pub fn hermite_eval(x: &[f64], y: &[f64], dy: &[f64], t: f64) -> f64 {
    let n = x.len();
    let i = match x.binary_search_by(|v| v.total_cmp(&t)) {
        Ok(i) => i.min(n - 2),
        Err(0) => 0,
        Err(i) => (i - 1).min(n - 2),
    };
    let h = x[i + 1] - x[i];
    let s = (t - x[i]) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    h00 * y[i] + h10 * h * dy[i] + h01 * y[i + 1] + h11 * h * dy[i + 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knot_slopes_of_smooth_function() {
        let x: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = x.iter().map(|t| t.sin()).collect();
        let s = CubicSpline::new(&x, &y).unwrap();
        for (i, (t, m)) in x.iter().zip(s.knot_slopes()).enumerate() {
            let tol = if (10..191).contains(&i) { 1e-7 } else { 2e-6 };
            assert!((m - t.cos()).abs() < tol, "{t}: {m}");
        }
        assert!((s.eval(1.234) - 1.234f64.sin()).abs() < 1e-7);
        assert!((s.derivative(1.234) - 1.234f64.cos()).abs() < 1e-5);
    }

    #[test]
    fn reproduces_cubics_exactly() {
        let x = [0.0, 0.3, 0.7, 1.0, 1.6, 2.0];
        let f = |t: f64| 2.0 * t * t * t - t + 0.5;
        let y: Vec<f64> = x.iter().map(|&t| f(t)).collect();
        let s = CubicSpline::new(&x, &y).unwrap();
        for &t in &[0.1, 0.5, 1.3, 1.9] {
            assert!((s.eval(t) - f(t)).abs() < 1e-12);
            assert!((s.derivative(t) - (6.0 * t * t - 1.0)).abs() < 1e-11);
        }
    }

    #[test]
    fn hermite_interpolates_with_slopes() {
        let x = [0.0, 0.5, 1.0];
        let y = [0.0, 0.125, 1.0];
        let dy = [0.0, 0.75, 3.0];
        assert!((hermite_eval(&x, &y, &dy, 0.7) - 0.343).abs() < 1e-14);
    }
}
