//! Command-line driver.

use std::path::PathBuf;

use clap::Parser;

use super::{acceptance_passed, run_scenario, ConfigError, Format, HarnessError, Scenario, ScenarioConfig};

/// Runs one scenario and writes its result table.
#[derive(Debug, Parser)]
#[command(name = "opendecay", version)]
struct Cli {
    /// spin_bloch, spin_master, weak_compare, decay_scan, qbm_limit,
    /// qbm_exact, qbm_sweep, bridge_check or acceptance
    scenario: String,
    /// Flat `key = value` file; command-line overrides win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    /// Parameter overrides as `--key value` pairs.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

fn override_pairs(raw: &[String]) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    let mut it = raw.iter();
    while let Some(flag) = it.next() {
        let key = flag
            .strip_prefix("--")
            .ok_or_else(|| format!("expected `--key value`, got `{flag}`"))?;
        if let Some((k, v)) = key.split_once('=') {
            out.push((k.replace('-', "_"), v.to_string()));
            continue;
        }
        let value = it.next().ok_or_else(|| format!("`--{key}` needs a value"))?;
        out.push((key.replace('-', "_"), value.clone()));
    }
    Ok(out)
}

fn run(cli: &Cli) -> Result<bool, HarnessError> {
    let scenario: Scenario = cli.scenario.parse()?;
    // named options that follow an override land in the trailing list
    let mut config_path = cli.config.clone();
    let mut overrides = Vec::new();
    for (k, v) in override_pairs(&cli.overrides).map_err(ConfigError::Usage)? {
        match k.as_str() {
            "config" => config_path = Some(PathBuf::from(v)),
            "output" => overrides.push(("output_path".to_string(), v)),
            _ => overrides.push((k, v)),
        }
    }
    if let Some(p) = &cli.output {
        overrides.push(("output_path".into(), p.display().to_string()));
    }
    if let Some(f) = &cli.format {
        overrides.push(("format".into(), f.clone()));
    }
    let config = match &config_path {
        Some(path) => ScenarioConfig::from_file(scenario, path, &overrides)?,
        None => ScenarioConfig::resolve(scenario, &[], &overrides)?,
    };
    let table = run_scenario(&config)?;
    let format: Format = config.text("format").parse()?;
    match config.text("output_path") {
        "" => print!("{}", table.render(format)),
        path => table.write(path.as_ref(), format)?,
    }
    if scenario == Scenario::Acceptance {
        for (_, line) in table.metadata.iter().filter(|(k, _)| k.starts_with("criterion_")) {
            eprintln!("{line}");
        }
        return Ok(acceptance_passed(&table));
    }
    Ok(true)
}

/// Parses `args` (program name first), runs the scenario and returns the
/// process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(true) => 0,
        Ok(false) => 3,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> Vec<String> {
        std::iter::once("opendecay")
            .chain(v.iter().copied())
            .map(String::from)
            .collect()
    }

    fn scratch(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("opendecay-unit-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn override_pairs_accept_both_spellings() {
        let raw = args(&["--eta", "2", "--tau-points=7"]);
        let p = override_pairs(&raw[1..]).unwrap();
        assert_eq!(p, vec![("eta".into(), "2".into()), ("tau_points".into(), "7".into())]);
        assert!(override_pairs(&args(&["eta"])[1..]).is_err());
        assert!(override_pairs(&args(&["--eta"])[1..]).is_err());
    }

    #[test]
    fn exit_codes_follow_the_error_class() {
        assert_eq!(run_cli(args(&["spin_master", "--etaa", "1"])), 1);
        assert_eq!(run_cli(args(&["qbm_sweep"])), 1);
        assert_eq!(run_cli(args(&["nowhere"])), 1);
        assert_eq!(run_cli(args(&["spin_master", "--epsilon", "0", "--delta", "0"])), 2);
    }

    #[test]
    fn config_file_and_flags_resolve_into_the_output() {
        let cfg = scratch("flags.cfg");
        std::fs::write(&cfg, "eta = 1\ntau_points = 6\n").unwrap();
        let out = scratch("flags.json");
        let code = run_cli(args(&[
            "spin_master",
            "--config",
            cfg.to_str().unwrap(),
            "--eta",
            "2",
            "--output",
            out.to_str().unwrap(),
            "--format",
            "json",
        ]));
        assert_eq!(code, 0);
        let t = super::super::ResultTable::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(t.metadata["eta"], "2.0");
        assert_eq!(t.rows(), 6);
    }
}
