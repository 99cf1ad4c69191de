use std::time::Instant;

use rayon::prelude::*;

use super::config::{Scenario, ScenarioConfig};
use super::output::ResultTable;
use super::HarnessError;
use crate::acceptance::{self, stochastic_limit_deviation};
use crate::bloch::{
    decay_spectrum, propagate_bloch, rapid_generator, rapid_generator_with_rate, weak_generator, OperatorTriple,
    SpectrumClass,
};
use crate::error::Result;
use crate::lindblad_spin::{bridge_discrepancies, propagate_density, spin_liouvillian};
use crate::model::{
    make_spin_params, BathSpectrum, CouplingScale, CutoffShape, DensityMatrix2, GaussianState, OscillatorParams,
    SpinBosonParams,
};
use crate::numerics::linspace;
use crate::qbm::{limit_coefficients, propagate_moments, ConstantSchedule, ExactTable};
use crate::spectral::{gamma_theta, gamma_theta_weak};

fn spin(c: &ScenarioConfig) -> Result<SpinBosonParams> {
    make_spin_params(c.float("epsilon"), c.float("delta"))
}

fn shape(c: &ScenarioConfig) -> Result<CutoffShape> {
    c.text("shape").parse()
}

fn bath_at(c: &ScenarioConfig, temperature: f64) -> Result<BathSpectrum> {
    BathSpectrum::new(c.float("eta"), c.float("cutoff"), shape(c)?, temperature)
}

fn bath(c: &ScenarioConfig) -> Result<BathSpectrum> {
    bath_at(c, c.float("temperature"))
}

fn oscillator(c: &ScenarioConfig) -> Result<OscillatorParams> {
    OscillatorParams::new(c.float("mass"), c.float("omega0"))
}

fn grid(c: &ScenarioConfig) -> Result<Vec<f64>> {
    let n = c.count("tau_points");
    let tau_max = c.float("tau_max");
    if n < 2 {
        return Err(crate::error::invalid("tau_points", "needs at least 2 points"));
    }
    if !(tau_max > 0.0) {
        return Err(crate::error::invalid("tau_max", "must be positive"));
    }
    Ok(linspace(0.0, tau_max, n))
}

fn initial_state(c: &ScenarioConfig) -> Result<DensityMatrix2> {
    match c.list("initial") {
        [x, y, z] => DensityMatrix2::from_bloch_vector([*x, *y, *z]),
        _ => Err(crate::error::invalid("initial", "needs three Bloch-vector components")),
    }
}

/// Rows of named values, transposed into columns.
struct Columns {
    names: Vec<&'static str>,
    data: Vec<Vec<f64>>,
}

impl Columns {
    fn new(names: &[&'static str]) -> Self {
        Self {
            names: names.to_vec(),
            data: vec![Vec::new(); names.len()],
        }
    }

    fn row(&mut self, values: &[f64]) {
        for (c, v) in self.data.iter_mut().zip(values) {
            c.push(*v);
        }
    }

    fn into_table(self, table: &mut ResultTable) {
        for (n, d) in self.names.into_iter().zip(self.data) {
            table.push(n, d).expect("rows have one value per column");
        }
    }
}

fn spin_bloch(c: &ScenarioConfig, out: &mut ResultTable) -> Result<()> {
    let s = spin(c)?;
    let b = bath(c)?;
    let gen = match c.text("regime") {
        "weak" => weak_generator(&s, &b)?,
        _ => rapid_generator(&s, &b),
    };
    let tau = grid(c)?;
    let rho0 = initial_state(c)?.entries;
    let ops = propagate_bloch(&gen, &OperatorTriple::basic(), &tau, c.float("tol"))?;
    let mut cols = Columns::new(&["tau", "re_d_plus", "im_d_plus", "d_zero", "re_d_minus", "im_d_minus"]);
    for (t, op) in tau.iter().zip(&ops) {
        let p = (rho0 * op.plus()).trace();
        let z = (rho0 * op.zero()).trace();
        let m = (rho0 * op.minus()).trace();
        cols.row(&[*t, p.re, p.im, z.re, m.re, m.im]);
    }
    cols.into_table(out);
    Ok(())
}

fn spin_master(c: &ScenarioConfig, out: &mut ResultTable) -> Result<()> {
    let l = spin_liouvillian(&spin(c)?, &bath(c)?);
    let tau = grid(c)?;
    let traj = propagate_density(&l, &initial_state(c)?, &tau, c.float("tol"))?;
    let mut cols = Columns::new(&[
        "tau",
        "rho_pp",
        "rho_mm",
        "re_rho_pm",
        "im_rho_pm",
        "purity",
        "trace_defect",
        "min_eigenvalue",
    ]);
    for (t, rho) in tau.iter().zip(&traj) {
        let m = rho.entries;
        let r = rho.report();
        cols.row(&[
            *t,
            m[(0, 0)].re,
            m[(1, 1)].re,
            m[(0, 1)].re,
            m[(0, 1)].im,
            rho.purity(),
            r.trace_defect,
            r.min_eigenvalue,
        ]);
    }
    cols.into_table(out);
    Ok(())
}

fn weak_compare(c: &ScenarioConfig, out: &mut ResultTable) -> Result<()> {
    let s = spin(c)?;
    let mut cols = Columns::new(&["temperature", "gamma_theta", "gamma_d", "gamma_r", "ratio"]);
    for &temp in c.list("temperature_list") {
        let b = bath_at(c, temp)?;
        let g = weak_generator(&s, &b)?;
        let (d, r) = (g.decoherence_rate(), g.relaxation_rate());
        cols.row(&[temp, gamma_theta_weak(&b, s.omega0())?, d, r, r / d]);
    }
    cols.into_table(out);
    Ok(())
}

fn decay_scan(c: &ScenarioConfig, out: &mut ResultTable) -> Result<()> {
    let s = spin(c)?;
    let (lo, hi, n) = (c.float("gamma_min"), c.float("gamma_max"), c.count("gamma_points"));
    if !(lo >= 0.0 && hi > lo) || n < 2 {
        return Err(crate::error::invalid(
            "gamma_min",
            "need 0 <= gamma_min < gamma_max and two points",
        ));
    }
    let gammas = linspace(lo, hi, n);
    let spectra: Vec<_> = gammas
        .par_iter()
        .map(|g| decay_spectrum(&rapid_generator_with_rate(&s, *g)))
        .collect();
    let mut cols = Columns::new(&[
        "gamma_theta",
        "decay_1",
        "decay_2",
        "decay_3",
        "frequency_1",
        "frequency_2",
        "frequency_3",
        "three_real",
    ]);
    for (g, sp) in gammas.iter().zip(&spectra) {
        let e = sp.eigenvalues;
        let d = sp.decay_constants;
        let real = f64::from(u8::from(sp.classification == SpectrumClass::ThreeReal));
        cols.row(&[*g, d[0], d[1], d[2], e[0].im, e[1].im, e[2].im, real]);
    }
    cols.into_table(out);
    Ok(())
}

fn moment_columns(tau: &[f64], states: &[GaussianState], out: &mut ResultTable) {
    let mut cols = Columns::new(&["tau", "mean_x", "mean_p", "var_xx", "var_pp", "cov_xp", "uncertainty"]);
    for (t, s) in tau.iter().zip(states) {
        let [a, b, c, d, e] = s.as_array();
        cols.row(&[*t, a, b, c, d, e, s.uncertainty_product()]);
    }
    cols.into_table(out);
}

fn qbm_limit(c: &ScenarioConfig, out: &mut ResultTable) -> Result<()> {
    let osc = oscillator(c)?;
    let b = bath(c)?;
    let coeffs = limit_coefficients(&osc, &b, 0.0)?;
    let tau = grid(c)?;
    let init = GaussianState::coherent(osc.mass(), osc.omega0(), c.float("x0"), c.float("p0"));
    let traj = propagate_moments(&ConstantSchedule(coeffs), osc.mass(), &init, &tau, c.float("tol"))?;
    out.metadata
        .insert("omega_r_sq".into(), format!("{:?}", coeffs.omega_r_sq));
    out.metadata.insert("d_xx".into(), format!("{:?}", coeffs.d_xx));
    moment_columns(&tau, &traj.states, out);
    Ok(())
}

fn qbm_exact(c: &ScenarioConfig, out: &mut ResultTable) -> Result<()> {
    let osc = oscillator(c)?;
    let b = bath(c)?;
    let lambda = CouplingScale::new(c.float("lambda"))?;
    let table = ExactTable::compute(lambda, &b, &osc, c.float("tau_max"), c.float("tol"))?;
    let limit = limit_coefficients(&osc, &b, 0.0)?;
    let n = table.tau().len();
    let rows = c.count("tau_points").max(2);
    let stride = ((n - 1) / (rows - 1)).max(1);
    let mut cols = Columns::new(&[
        "tau",
        "g",
        "g_dot",
        "omega_r_sq",
        "d_xx",
        "d_xp",
        "gamma_xp",
        "limit_omega_r_sq",
        "limit_d_xx",
    ]);
    let p = &table.propagator;
    for i in (0..n).step_by(stride) {
        let k = table.coefficients_at(i).ok();
        let v = |f: fn(&crate::qbm::QbmCoefficients) -> f64| k.as_ref().map_or(f64::NAN, f);
        cols.row(&[
            p.tau[i],
            p.g[i],
            p.g_dot[i],
            v(|k| k.omega_r_sq),
            v(|k| k.d_xx),
            v(|k| k.d_xp),
            v(|k| k.gamma_xp),
            limit.omega_r_sq,
            limit.d_xx,
        ]);
    }
    out.metadata
        .insert("propagator_error".into(), format!("{:?}", p.error_estimate));
    cols.into_table(out);
    Ok(())
}

fn qbm_sweep(c: &ScenarioConfig, out: &mut ResultTable) -> Result<()> {
    let osc = oscillator(c)?;
    let b = bath(c)?;
    let (lo, hi, tol) = (c.float("tau_min"), c.float("tau_max"), c.float("tol"));
    let rows: Vec<Result<[f64; 3]>> = c
        .list("lambda_list")
        .par_iter()
        .map(|&lam| {
            let table = ExactTable::compute(CouplingScale::new(lam)?, &b, &osc, hi, tol)?;
            stochastic_limit_deviation(&table, &osc, &b, lo, hi)
        })
        .collect();
    let mut cols = Columns::new(&["lambda", "err_d_xx", "err_d_xp", "err_gamma_xp"]);
    for (lam, r) in c.list("lambda_list").iter().zip(rows) {
        let [a, d, g] = r?;
        cols.row(&[*lam, a, d, g]);
    }
    cols.into_table(out);
    Ok(())
}

fn bridge_check(c: &ScenarioConfig, out: &mut ResultTable) -> Result<()> {
    let s = spin(c)?;
    let gamma = gamma_theta(&bath(c)?);
    let tau = grid(c)?;
    let d = bridge_discrepancies(&s, gamma, &initial_state(c)?, &tau, c.float("tol"))?;
    out.metadata.insert("gamma_theta".into(), format!("{gamma:?}"));
    out.push("tau", tau).expect("first column");
    out.push("discrepancy", d).expect("one value per grid point");
    Ok(())
}

fn acceptance_suite(out: &mut ResultTable) {
    let mut cols = Columns::new(&["criterion", "passed", "seconds"]);
    for o in acceptance::run_all() {
        out.metadata.insert(format!("criterion_{:02}", o.id), o.line());
        cols.row(&[f64::from(o.id), f64::from(u8::from(o.passed)), o.seconds]);
    }
    cols.into_table(out);
}

/// Runs one scenario. The metadata holds the resolved configuration, the
/// crate version and the wall time; the columns depend only on the config.
pub fn run_scenario(config: &ScenarioConfig) -> std::result::Result<ResultTable, HarnessError> {
    let start = Instant::now();
    let mut meta = config.to_metadata();
    meta.insert("scenario".into(), config.scenario.name().into());
    meta.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    let mut out = ResultTable::new(meta);
    let result = match config.scenario {
        Scenario::SpinBloch => spin_bloch(config, &mut out),
        Scenario::SpinMaster => spin_master(config, &mut out),
        Scenario::WeakCompare => weak_compare(config, &mut out),
        Scenario::DecayScan => decay_scan(config, &mut out),
        Scenario::QbmLimit => qbm_limit(config, &mut out),
        Scenario::QbmExact => qbm_exact(config, &mut out),
        Scenario::QbmSweep => qbm_sweep(config, &mut out),
        Scenario::BridgeCheck => bridge_check(config, &mut out),
        Scenario::Acceptance => {
            acceptance_suite(&mut out);
            Ok(())
        }
    };
    result.map_err(|source| HarnessError::Physics {
        scenario: config.scenario,
        source,
    })?;
    out.metadata.insert(
        "wall_time_seconds".into(),
        format!("{:.3}", start.elapsed().as_secs_f64()),
    );
    Ok(out)
}

/// True when every criterion row of an acceptance table passed.
pub fn acceptance_passed(table: &ResultTable) -> bool {
    table.column("passed").is_some_and(|p| p.iter().all(|v| *v == 1.0))
}
