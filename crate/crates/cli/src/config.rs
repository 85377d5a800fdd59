//! Declarative experiment configuration (TOML) and its validation.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use losstol::{ChannelModel, LossConstraints, SaConfig};
use serde::Deserialize;

/// Which solver/measurement runs at each sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Sa,
    Oracle,
    Simulate,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Sa => "sa",
            Method::Oracle => "oracle",
            Method::Simulate => "simulate",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "closed_form" => Ok(Method::ClosedForm),
            "sa" => Ok(Method::Sa),
            "oracle" => Ok(Method::Oracle),
            "simulate" => Ok(Method::Simulate),
            other => {
                bail!("unknown method '{other}' (expected closed_form, sa, oracle or simulate)")
            }
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The swept constraint parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    EpsOut,
    Gamma,
    NMax,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::EpsOut => "eps_out",
            SweepVariable::Gamma => "gamma",
            SweepVariable::NMax => "n_max",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
}

/// Fully validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: ChannelModel,
    pub constraints: LossConstraints,
    pub sweep: Option<SweepSpec>,
    pub methods: Vec<Method>,
    pub sa: SaConfig,
    pub sim_slots: u64,
    pub output_path: Option<PathBuf>,
    pub seed: u64,
    /// When false (the default) the runtime_s column is written as 0 so
    /// re-runs of the same config produce byte-identical CSV.
    pub record_runtime: bool,
    pub policy_file: Option<PathBuf>,
    pub oracle_resolution: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    methods: Vec<String>,
    model: RawModel,
    constraints: RawConstraints,
    sweep: Option<RawSweep>,
    sa: Option<RawSa>,
    sim_slots: Option<u64>,
    output: Option<PathBuf>,
    seed: Option<u64>,
    record_runtime: Option<bool>,
    policy_file: Option<PathBuf>,
    oracle_resolution: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    fading: String,
    branches: Option<u32>,
    rate: f64,
    noise: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstraints {
    gamma: f64,
    n_max: usize,
    eps_out: f64,
    /// Peak power in dBW; linear watts are used internally.
    p_peak_dbw: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    variable: String,
    grid: Vec<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSa {
    t0: Option<f64>,
    c_sa: Option<f64>,
    steps_per_temperature: Option<usize>,
    temperature_iterations: Option<usize>,
    proposal_step: Option<f64>,
    stall_limit: Option<usize>,
}

pub fn dbw_to_watts(dbw: f64) -> f64 {
    10f64.powf(dbw / 10.0)
}

pub fn watts_to_dbw(watts: f64) -> f64 {
    10.0 * watts.log10()
}

/// Load and validate an experiment config. Parse errors keep toml's
/// line/column diagnostics; semantic violations name the broken rule.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let raw: RawConfig = toml::from_str(&text)
        .with_context(|| format!("cannot parse config file {}", path.display()))?;
    validate(raw)
}

fn validate(raw: RawConfig) -> Result<ExperimentConfig> {
    let model = match raw.model.fading.as_str() {
        "rayleigh" => {
            if raw.model.branches.is_some() {
                bail!("model.branches is only meaningful for fading = \"diversity\"");
            }
            ChannelModel::rayleigh(raw.model.rate, raw.model.noise)?
        }
        "diversity" => {
            let branches = raw
                .model
                .branches
                .context("model.branches is required for fading = \"diversity\"")?;
            ChannelModel::diversity(branches, raw.model.rate, raw.model.noise)?
        }
        other => bail!("unknown fading kind '{other}' (expected rayleigh or diversity)"),
    };

    let p_peak = raw.constraints.p_peak_dbw.map(dbw_to_watts);
    let constraints = LossConstraints::new(
        raw.constraints.gamma,
        raw.constraints.n_max,
        raw.constraints.eps_out,
        p_peak,
    )?;

    if raw.methods.is_empty() {
        bail!("methods must name at least one of closed_form, sa, oracle, simulate");
    }
    let methods = raw
        .methods
        .iter()
        .map(|m| Method::parse(m))
        .collect::<Result<Vec<_>>>()?;

    let sweep = raw
        .sweep
        .map(|s| -> Result<SweepSpec> {
            if s.grid.is_empty() {
                bail!("sweep.grid must be non-empty");
            }
            let variable = match s.variable.as_str() {
                "eps_out" => SweepVariable::EpsOut,
                "gamma" => SweepVariable::Gamma,
                "n_max" => SweepVariable::NMax,
                other => {
                    bail!("unknown sweep variable '{other}' (expected eps_out, gamma or n_max)")
                }
            };
            for &v in &s.grid {
                match variable {
                    SweepVariable::EpsOut | SweepVariable::Gamma => {
                        if !(v > 0.0 && v < 1.0) {
                            bail!(
                                "sweep.grid value {v} out of range for {}: must lie in (0,1)",
                                variable.name()
                            );
                        }
                    }
                    SweepVariable::NMax => {
                        if v.fract() != 0.0 || v < 1.0 {
                            bail!(
                                "sweep.grid value {v} invalid for n_max: must be an integer >= 1"
                            );
                        }
                    }
                }
            }
            Ok(SweepSpec {
                variable,
                grid: s.grid,
            })
        })
        .transpose()?;

    // every N value the run can visit
    let n_values: Vec<usize> = match &sweep {
        Some(s) if s.variable == SweepVariable::NMax => {
            s.grid.iter().map(|&v| v as usize).collect()
        }
        _ => vec![constraints.n_max()],
    };
    if methods.contains(&Method::ClosedForm) && n_values.iter().any(|&n| n != 1) {
        bail!("closed_form is selectable only when n_max = 1");
    }
    if methods.contains(&Method::Oracle) && n_values.iter().any(|&n| n > 3) {
        bail!("oracle is selectable only when n_max <= 3");
    }
    if methods.contains(&Method::Simulate) && raw.policy_file.is_none() {
        bail!("the simulate method requires policy_file");
    }

    let raw_sa = raw.sa.unwrap_or_default();
    let defaults = SaConfig::default();
    let sa = SaConfig {
        t0: raw_sa.t0,
        c_sa: raw_sa.c_sa.unwrap_or(defaults.c_sa),
        steps_per_temperature: raw_sa
            .steps_per_temperature
            .unwrap_or(defaults.steps_per_temperature),
        temperature_iterations: raw_sa
            .temperature_iterations
            .unwrap_or(defaults.temperature_iterations),
        proposal_step: raw_sa.proposal_step.unwrap_or(defaults.proposal_step),
        seed: raw.seed.unwrap_or(0),
        stall_limit: raw_sa.stall_limit.unwrap_or(defaults.stall_limit),
    };
    sa.validate()?;

    let oracle_resolution = raw.oracle_resolution.unwrap_or(0.005);
    if !(1e-3..1.0).contains(&oracle_resolution) {
        bail!("oracle_resolution must lie in [1e-3, 1)");
    }

    Ok(ExperimentConfig {
        model,
        constraints,
        sweep,
        methods,
        sa,
        sim_slots: raw.sim_slots.unwrap_or(1_000_000),
        output_path: raw.output,
        seed: raw.seed.unwrap_or(0),
        record_runtime: raw.record_runtime.unwrap_or(false),
        policy_file: raw.policy_file,
        oracle_resolution,
    })
}

/// Read a policy file: one outage probability per line, N+1 lines.
pub fn load_policy_file(path: &Path) -> Result<losstol::OutagePolicy> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read policy file {}", path.display()))?;
    let mut eps = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: f64 = line.parse().with_context(|| {
            format!(
                "policy file {}: line {} is not a decimal number: '{line}'",
                path.display(),
                lineno + 1
            )
        })?;
        eps.push(value);
    }
    losstol::OutagePolicy::new(eps)
        .with_context(|| format!("policy file {} is not a valid policy", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    const BASE: &str = r#"
methods = ["closed_form", "sa"]

[model]
fading = "rayleigh"
rate = 1.0
noise = 1.0

[constraints]
gamma = 0.2
n_max = 1
eps_out = 0.1
p_peak_dbw = 20.0

[sweep]
variable = "eps_out"
grid = [0.1, 0.2, 0.3]
"#;

    #[test]
    fn peak_power_converts_from_dbw() {
        let f = write_config(BASE);
        let cfg = load_config(f.path()).unwrap();
        assert!((cfg.constraints.p_peak().unwrap() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn omitted_sa_section_gets_defaults() {
        let f = write_config(BASE);
        let cfg = load_config(f.path()).unwrap();
        assert_eq!(cfg.sa.steps_per_temperature, 100);
        assert_eq!(cfg.sa.temperature_iterations, 200);
        assert_eq!(cfg.sa.stall_limit, 20);
        assert!((cfg.sa.proposal_step - 0.05).abs() < 1e-15);
        assert!(cfg.sa.t0.is_none());
        assert!(!cfg.record_runtime);
        assert_eq!(cfg.sim_slots, 1_000_000);
    }

    #[test]
    fn empty_grid_rejected() {
        let body = BASE.replace("grid = [0.1, 0.2, 0.3]", "grid = []");
        let err = load_config(write_config(&body).path()).unwrap_err();
        assert!(err.to_string().contains("non-empty"), "{err}");
    }

    #[test]
    fn closed_form_needs_single_burst() {
        let body = BASE.replace("n_max = 1", "n_max = 2");
        let err = load_config(write_config(&body).path()).unwrap_err();
        assert!(err.to_string().contains("closed_form"), "{err}");
    }

    #[test]
    fn oracle_bounded_to_small_n() {
        let body = BASE
            .replace("n_max = 1", "n_max = 5")
            .replace("\"closed_form\", \"sa\"", "\"oracle\"");
        let err = load_config(write_config(&body).path()).unwrap_err();
        assert!(err.to_string().contains("n_max <= 3"), "{err}");
    }

    #[test]
    fn n_sweep_with_closed_form_rejected() {
        let body = BASE.replace(
            "variable = \"eps_out\"\ngrid = [0.1, 0.2, 0.3]",
            "variable = \"n_max\"\ngrid = [1, 2]",
        );
        let err = load_config(write_config(&body).path()).unwrap_err();
        assert!(err.to_string().contains("closed_form"), "{err}");
    }

    #[test]
    fn fractional_n_grid_rejected() {
        let body = BASE
            .replace(
                "variable = \"eps_out\"\ngrid = [0.1, 0.2, 0.3]",
                "variable = \"n_max\"\ngrid = [1.5]",
            )
            .replace("\"closed_form\", \"sa\"", "\"sa\"");
        let err = load_config(write_config(&body).path()).unwrap_err();
        assert!(err.to_string().contains("integer"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected_with_location() {
        let body = format!("{BASE}\nbogus_key = 1\n");
        let err = load_config(write_config(&body).path()).unwrap_err();
        let chain = format!("{err:#}");
        assert!(chain.contains("bogus_key"), "{chain}");
    }

    #[test]
    fn diversity_requires_branches() {
        let body = BASE.replace("fading = \"rayleigh\"", "fading = \"diversity\"");
        let err = load_config(write_config(&body).path()).unwrap_err();
        assert!(err.to_string().contains("branches"), "{err}");

        let ok = BASE.replace(
            "fading = \"rayleigh\"",
            "fading = \"diversity\"\nbranches = 2",
        );
        assert!(load_config(write_config(&ok).path()).is_ok());
    }

    #[test]
    fn simulate_requires_policy_file() {
        let body = BASE.replace("\"closed_form\", \"sa\"", "\"simulate\"");
        let err = load_config(write_config(&body).path()).unwrap_err();
        assert!(err.to_string().contains("policy_file"), "{err}");
    }

    #[test]
    fn policy_file_parsing() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "0.225\n0.1").unwrap();
        let p = load_policy_file(f.path()).unwrap();
        assert_eq!(p.eps(), &[0.225, 0.1]);

        let mut bad = tempfile::NamedTempFile::new().unwrap();
        writeln!(bad, "0.225\nnot-a-number").unwrap();
        assert!(load_policy_file(bad.path()).is_err());

        let mut non_monotone = tempfile::NamedTempFile::new().unwrap();
        writeln!(non_monotone, "0.1\n0.5").unwrap();
        assert!(load_policy_file(non_monotone.path()).is_err());
    }

    #[test]
    fn dbw_round_trip() {
        assert!((dbw_to_watts(20.0) - 100.0).abs() < 1e-9);
        assert!((watts_to_dbw(100.0) - 20.0).abs() < 1e-12);
        assert!((dbw_to_watts(watts_to_dbw(3.7)) - 3.7).abs() < 1e-12);
    }
}
