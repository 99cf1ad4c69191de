use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use super::Scalar;
use crate::error::{Error, Result};

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<T: Scalar, F: Fn(f64) -> T>(&self, f: F, a: f64, b: f64) -> T {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(mid + half * x) * (w * half);
        }
        acc
    }

    pub fn composite<T: Scalar, F: Fn(f64) -> T>(&self, f: F, a: f64, b: f64, panels: usize) -> T {
        let h = (b - a) / panels as f64;
        let mut acc = T::zero();
        for k in 0..panels {
            let lo = a + h * k as f64;
            let hi = if k + 1 == panels { b } else { lo + h };
            acc = acc + self.integrate(&f, lo, hi);
        }
        acc
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn gauss_legendre_16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublingOptions {
    pub initial_panels: usize,
    pub max_doublings: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for DoublingOptions {
    fn default() -> Self {
        Self {
            initial_panels: 8,
            max_doublings: 14,
            rel_tol: 1e-10,
            abs_tol: 1e-300,
        }
    }
}

/// Composite 16-point Gauss-Legendre, doubling the panel count until two
/// successive estimates agree.
pub fn integrate_doubling<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    opts: &DoublingOptions,
    context: &str,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let rule = gauss_legendre_16();
    let mut panels = opts.initial_panels.max(1);
    let mut prev = rule.composite(&f, a, b, panels);
    let mut change = f64::INFINITY;
    for _ in 0..opts.max_doublings {
        panels *= 2;
        let next = rule.composite(&f, a, b, panels);
        change = (next - prev).abs();
        if !next.is_finite() {
            break;
        }
        if change <= opts.abs_tol.max(opts.rel_tol * next.abs()) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Accuracy {
        context: format!("{context}: node doubling"),
        achieved: change / prev.abs().max(f64::MIN_POSITIVE),
        target: opts.rel_tol,
    })
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
    l1: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl<T> Eq for Segment<T> {}

impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Gauss-Kronrod 7/15 estimate: (value, |K - G|, integral of |f|).
pub fn gk15<T: Scalar, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut l1 = fc.magnitude() * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(mid - dx);
        let f2 = f(mid + dx);
        let s = f1 + f2;
        kron = kron + s * WGK[j];
        l1 += (f1.magnitude() + f2.magnitude()) * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    let aw = half.abs();
    let value = kron * half;
    let err = (kron - gauss).magnitude() * aw;
    (value, err, l1 * aw)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    /// Target relative to the integral of |f|.
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_segments: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-300,
            max_segments: 4000,
        }
    }
}

/// Adaptive Gauss-Kronrod over the consecutive intervals given by `points`.
pub fn adaptive<T: Scalar, F: Fn(f64) -> T>(f: F, points: &[f64], opts: &AdaptiveOptions, context: &str) -> Result<T> {
    let mut heap = BinaryHeap::new();
    let mut total = T::zero();
    let mut err = 0.0;
    let mut l1 = 0.0;
    for w in points.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let (v, e, m) = gk15(&f, w[0], w[1]);
        total = total + v;
        err += e;
        l1 += m;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
            l1: m,
        });
    }
    while err > opts.abs_tol.max(opts.rel_tol * l1) {
        if heap.len() >= opts.max_segments || !err.is_finite() {
            return Err(Error::Accuracy {
                context: format!("{context}: adaptive quadrature"),
                achieved: err / l1.max(f64::MIN_POSITIVE),
                target: opts.rel_tol,
            });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a.min(worst.b) && mid < worst.a.max(worst.b)) {
            return Err(Error::Accuracy {
                context: format!("{context}: interval exhausted near {mid:.6e}"),
                achieved: err / l1.max(f64::MIN_POSITIVE),
                target: opts.rel_tol,
            });
        }
        total = total - worst.value;
        err -= worst.error;
        l1 -= worst.l1;
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (v, e, m) = gk15(&f, lo, hi);
            total = total + v;
            err += e;
            l1 += m;
            heap.push(Segment {
                a: lo,
                b: hi,
                value: v,
                error: e,
                l1: m,
            });
        }
        if err < 0.0 {
            err = heap.iter().map(|s| s.error).sum();
        }
    }
    Ok(total)
}

/// Integral over [a, inf) through x = a + scale * u / (1 - u).
pub fn adaptive_semi_infinite<T: Scalar, F: Fn(f64) -> T>(
    f: F,
    a: f64,
    scale: f64,
    opts: &AdaptiveOptions,
    context: &str,
) -> Result<T> {
    let g = |u: f64| {
        let one_minus = 1.0 - u;
        let x = a + scale * u / one_minus;
        let jac = scale / (one_minus * one_minus);
        let v = f(x);
        if v.magnitude() == 0.0 {
            T::zero()
        } else {
            v * jac
        }
    };
    adaptive(g, &[0.0, 0.25, 0.5, 0.75, 1.0], opts, context)
}
