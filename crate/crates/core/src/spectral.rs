//! Ohmic spectral functions, thermal occupation, stochastic-limit rates and
//! the principal-value self-energy.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::model::{BathSpectrum, CutoffShape, OscillatorParams};
use crate::numerics::quad::{integrate_doubling, DoublingOptions};

/// Upper integration limit for the exponential cutoff, in units of w_c.
const EXP_SUPPORT_FACTOR: f64 = 60.0;

pub fn bose_occupation(omega: f64, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(invalid("temperature", "must be positive"));
    }
    if omega == 0.0 {
        return Err(Error::Divergence("N(w) diverges at w = 0".into()));
    }
    Ok(1.0 / (omega / temperature).exp_m1())
}

fn cutoff_factor(omega: f64, bath: &BathSpectrum) -> f64 {
    match bath.shape() {
        CutoffShape::Exponential => (-omega / bath.cutoff()).exp(),
        CutoffShape::Hard => {
            if omega < bath.cutoff() {
                1.0
            } else {
                0.0
            }
        }
    }
}

pub fn spectral_density(omega: f64, bath: &BathSpectrum) -> f64 {
    if omega <= 0.0 {
        return 0.0;
    }
    bath.eta() * omega * cutoff_factor(omega, bath)
}

/// Gamma(w) coth(w / 2T), finite at w = 0 where it equals 2 eta T.
pub fn thermal_density(omega: f64, bath: &BathSpectrum) -> f64 {
    let w = omega.abs();
    let t = bath.temperature();
    let x = w / (2.0 * t);
    let w_coth = if x < 1e-8 { 2.0 * t } else { w / x.tanh() };
    bath.eta() * w_coth * cutoff_factor(w, bath)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// Gamma+ = (1 + N) Gamma and Gamma- = N Gamma, with the midpoint value at w = 0.
pub fn branch_density(omega: f64, bath: &BathSpectrum, branch: Branch) -> f64 {
    if omega < 0.0 {
        return 0.0;
    }
    if omega == 0.0 {
        return 0.5 * bath.eta() * bath.temperature();
    }
    let n_gamma = bath.eta() * cutoff_factor(omega, bath) * omega / (omega / bath.temperature()).exp_m1();
    match branch {
        Branch::Plus => n_gamma + spectral_density(omega, bath),
        Branch::Minus => n_gamma,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitRates {
    pub rate_pos: f64,
    pub rate_zero: f64,
    pub rate_neg: f64,
}

/// Small-coupling limit of Gamma(+-)(lambda^2 w) / lambda^2 for w > 0, = 0, < 0.
pub fn limit_rates(bath: &BathSpectrum) -> LimitRates {
    let rate_pos = bath.eta() * bath.temperature();
    LimitRates {
        rate_pos,
        rate_zero: 0.5 * rate_pos,
        rate_neg: 0.0,
    }
}

pub fn gamma_theta(bath: &BathSpectrum) -> f64 {
    2.0 * limit_rates(bath).rate_pos
}

pub fn gamma_theta_weak(bath: &BathSpectrum, omega0: f64) -> Result<f64> {
    if !(omega0 > 0.0) {
        return Err(invalid("omega0", "must be positive"));
    }
    Ok(spectral_density(omega0, bath) / (omega0 / (2.0 * bath.temperature())).tanh())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfEnergy {
    pub real_part: f64,
    pub imag_part: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvOptions {
    pub quadrature: DoublingOptions,
}

impl Default for PvOptions {
    fn default() -> Self {
        Self {
            quadrature: DoublingOptions {
                initial_panels: 4,
                max_doublings: 12,
                rel_tol: 1e-10,
                abs_tol: 1e-300,
            },
        }
    }
}

pub fn support_end(bath: &BathSpectrum) -> f64 {
    match bath.shape() {
        CutoffShape::Exponential => EXP_SUPPORT_FACTOR * bath.cutoff(),
        CutoffShape::Hard => bath.cutoff(),
    }
}

/// Breakpoints on [lo, hi] graded geometrically towards `pole`, which lies
/// outside the open interval.
fn graded_points(lo: f64, hi: f64, pole: f64) -> Vec<f64> {
    let floor = (hi - lo) * 1e-9;
    let mut offsets = Vec::new();
    let d = if pole <= lo { lo - pole } else { pole - hi }.max(floor);
    let mut off = d;
    while off < hi - lo {
        offsets.push(off);
        off = 2.0 * off + d;
    }
    let mut pts = vec![lo];
    if pole <= lo {
        pts.extend(offsets.iter().map(|o| lo + o));
    } else {
        pts.extend(offsets.iter().rev().map(|o| hi - o));
    }
    pts.push(hi);
    pts
}

fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, pts: &[f64], opts: &DoublingOptions, context: &str) -> Result<f64> {
    let mut acc = 0.0;
    for w in pts.windows(2) {
        if w[1] > w[0] {
            acc += integrate_doubling(f, w[0], w[1], opts, context)?;
        }
    }
    Ok(acc)
}

/// PV of int_0^W f(w) / (omega - w) dw by symmetric subtraction around the pole.
pub fn pv_transform<F: Fn(f64) -> f64>(f: F, omega: f64, support: f64, opts: &PvOptions) -> Result<f64> {
    let q = &opts.quadrature;
    let ctx = "principal value";
    let kernel = |w: f64| f(w) / (omega - w);
    if omega <= 0.0 || omega >= support {
        let pts = graded_points(0.0, support, omega);
        return integrate_pieces(&kernel, &pts, q, ctx);
    }
    let d = omega.min(support - omega);
    let f0 = f(omega);
    let smooth = |w: f64| {
        let dw = omega - w;
        if dw == 0.0 {
            0.0
        } else {
            (f(w) - f0) / dw
        }
    };
    let mut total = integrate_pieces(&smooth, &[omega - d, omega, omega + d], q, ctx)?;
    if omega - d > 0.0 {
        total += integrate_pieces(&kernel, &graded_points(0.0, omega - d, omega), q, ctx)?;
    }
    if omega + d < support {
        total += integrate_pieces(&kernel, &graded_points(omega + d, support, omega), q, ctx)?;
    }
    Ok(total)
}

pub fn self_energy(omega: f64, bath: &BathSpectrum, branch: Branch) -> Result<SelfEnergy> {
    self_energy_with(omega, bath, branch, &PvOptions::default())
}

pub fn self_energy_with(omega: f64, bath: &BathSpectrum, branch: Branch, opts: &PvOptions) -> Result<SelfEnergy> {
    if !omega.is_finite() {
        return Err(invalid("omega", "must be finite"));
    }
    if omega == 0.0 && bath.eta() > 0.0 {
        // Gamma(+-)(0+) = eta T, so int Gamma(+-)(w)/(0 - w) dw is log-divergent.
        return Err(Error::Divergence(
            "self-energy real part is log-divergent at w = 0 for T > 0".into(),
        ));
    }
    let real = pv_transform(
        |w| if w > 0.0 { branch_density(w, bath, branch) } else { 0.0 },
        omega,
        support_end(bath),
        opts,
    )? / (2.0 * PI);
    Ok(SelfEnergy {
        real_part: real,
        imag_part: -0.5 * branch_density(omega, bath, branch),
    })
}

/// Omega_R^2 = Omega0^2 - 2 Omega0 int_0^inf dw/2pi Gamma(w)/w.
pub fn renormalized_frequency_sq(osc: &OscillatorParams, bath: &BathSpectrum) -> Result<f64> {
    renormalized_frequency_sq_with(osc, bath, &PvOptions::default().quadrature)
}

pub fn renormalized_frequency_sq_with(
    osc: &OscillatorParams,
    bath: &BathSpectrum,
    opts: &DoublingOptions,
) -> Result<f64> {
    let w = support_end(bath);
    let wc = bath.cutoff();
    let mut pts = vec![0.0];
    let mut p = wc;
    while p < w {
        pts.push(p);
        p *= 2.0;
    }
    pts.push(w);
    let integral = integrate_pieces(
        &|x: f64| bath.eta() * cutoff_factor(x, bath),
        &pts,
        opts,
        "renormalized frequency",
    )? / (2.0 * PI);
    let w0 = osc.omega0();
    let value = w0 * w0 - 2.0 * w0 * integral;
    if value <= 0.0 {
        return Err(Error::OverdampedRenormalization(value));
    }
    Ok(value)
}
