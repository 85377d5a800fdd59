//! Experiment execution and CSV emission.
//!
//! Every numeric column is normalized to a fixed significant-digit
//! rendering at row construction, so writing rows to CSV and parsing them
//! back is lossless and two runs of the same config produce identical
//! bytes. dBW values carry 12 significant digits (9 would round them
//! coarser than their 1e-9 consistency bound against the watt column);
//! everything else carries 9.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use losstol::{
    grid_search_oracle, sa_optimize, simulate_policy, sweep_n1, Error as CoreError,
    LossConstraints, N1SweepOutcome, OutagePolicy, SaConfig, EPS_N_ACTIVE_TOL,
};

use crate::config::{watts_to_dbw, ExperimentConfig, Method, SweepSpec, SweepVariable};

pub const CSV_HEADER: [&str; 10] = [
    "sweep_var",
    "value",
    "method",
    "p_avg_w",
    "p_avg_dbw",
    "gamma_r",
    "eps_n",
    "feasible",
    "eps_n_active",
    "runtime_s",
];

/// Render `x` with the given number of significant digits, plain decimal
/// where reasonable, scientific otherwise (the %g convention).
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("float in scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa),
    };
    let digits_only: String = mantissa.chars().filter(|c| *c != '.').collect();
    let point = exp + 1; // digits before the decimal point
    let body = if point <= 0 {
        format!("0.{}{}", "0".repeat(-point as usize), digits_only)
    } else if (point as usize) >= digits_only.len() {
        format!(
            "{}{}",
            digits_only,
            "0".repeat(point as usize - digits_only.len())
        )
    } else {
        format!(
            "{}.{}",
            &digits_only[..point as usize],
            &digits_only[point as usize..]
        )
    };
    format!("{sign}{}", trim_zeros(&body))
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Round to the value `format_sig` renders, so stored floats and their
/// CSV text agree exactly.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    format_sig(x, digits)
        .parse()
        .expect("formatted float parses")
}

/// One CSV row: a (sweep point, method) result.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub sweep_var: String,
    pub value: f64,
    pub method: Method,
    pub p_avg_w: f64,
    pub p_avg_dbw: f64,
    pub gamma_r: f64,
    pub eps_n: f64,
    pub feasible: bool,
    pub eps_n_active: bool,
    pub runtime_s: f64,
}

impl ResultRow {
    #[allow(clippy::too_many_arguments)]
    fn new(
        sweep_var: &str,
        value: f64,
        method: Method,
        p_avg_w: f64,
        gamma_r: f64,
        eps_n: f64,
        feasible: bool,
        eps_n_active: bool,
        runtime_s: f64,
    ) -> Self {
        let p_avg_w = round_sig(p_avg_w, 9);
        Self {
            sweep_var: sweep_var.to_string(),
            value: round_sig(value, 9),
            method,
            p_avg_w,
            p_avg_dbw: round_sig(watts_to_dbw(p_avg_w), 12),
            gamma_r: round_sig(gamma_r, 9),
            eps_n: round_sig(eps_n, 9),
            feasible,
            eps_n_active,
            runtime_s: round_sig(runtime_s, 9),
        }
    }

    pub fn to_record(&self) -> [String; 10] {
        [
            self.sweep_var.clone(),
            format_sig(self.value, 9),
            self.method.name().to_string(),
            format_sig(self.p_avg_w, 9),
            format_sig(self.p_avg_dbw, 12),
            format_sig(self.gamma_r, 9),
            format_sig(self.eps_n, 9),
            self.feasible.to_string(),
            self.eps_n_active.to_string(),
            format_sig(self.runtime_s, 9),
        ]
    }

    pub fn from_record(record: &csv::StringRecord) -> Result<Self> {
        if record.len() != CSV_HEADER.len() {
            bail!("expected {} fields, got {}", CSV_HEADER.len(), record.len());
        }
        let f = |i: usize| -> Result<f64> {
            record[i].parse::<f64>().with_context(|| {
                format!("field {} is not a float: '{}'", CSV_HEADER[i], &record[i])
            })
        };
        let b = |i: usize| -> Result<bool> {
            record[i]
                .parse::<bool>()
                .with_context(|| format!("field {} is not a bool: '{}'", CSV_HEADER[i], &record[i]))
        };
        Ok(Self {
            sweep_var: record[0].to_string(),
            value: f(1)?,
            method: Method::parse(&record[2])?,
            p_avg_w: f(3)?,
            p_avg_dbw: f(4)?,
            gamma_r: f(5)?,
            eps_n: f(6)?,
            feasible: b(7)?,
            eps_n_active: b(8)?,
            runtime_s: f(9)?,
        })
    }
}

impl PartialEq for ResultRow {
    fn eq(&self, other: &Self) -> bool {
        // bitwise float equality keeps NaN rows (infeasible points) comparable
        let feq = |a: f64, b: f64| a.to_bits() == b.to_bits();
        self.sweep_var == other.sweep_var
            && feq(self.value, other.value)
            && self.method == other.method
            && feq(self.p_avg_w, other.p_avg_w)
            && feq(self.p_avg_dbw, other.p_avg_dbw)
            && feq(self.gamma_r, other.gamma_r)
            && feq(self.eps_n, other.eps_n)
            && self.feasible == other.feasible
            && self.eps_n_active == other.eps_n_active
            && feq(self.runtime_s, other.runtime_s)
    }
}

fn constraints_at(
    base: &LossConstraints,
    sweep: &SweepSpec,
    value: f64,
) -> Result<LossConstraints> {
    let c = match sweep.variable {
        SweepVariable::EpsOut => base.with_eps_out(value)?,
        SweepVariable::Gamma => base.with_gamma(value)?,
        SweepVariable::NMax => base.with_n_max(value as usize)?,
    };
    Ok(c)
}

/// Run every selected method at every sweep point, in sweep order.
///
/// Each SA/simulate point draws its seed as base seed + point index, so
/// sweeps are reproducible while points stay independent. Infeasible
/// points are reported as rows with NaN metrics, never dropped.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let sweep = config
        .sweep
        .as_ref()
        .context("experiment config has no [sweep] section")?;
    let sweep_var = sweep.variable.name();
    let policy = config
        .policy_file
        .as_ref()
        .map(|p| crate::config::load_policy_file(p))
        .transpose()?;

    let mut rows = Vec::with_capacity(sweep.grid.len() * config.methods.len());
    for (index, &value) in sweep.grid.iter().enumerate() {
        let constraints = constraints_at(&config.constraints, sweep, value)?;
        let point_seed = config.seed.wrapping_add(index as u64);
        for &method in &config.methods {
            let start = Instant::now();
            let row = run_method(
                config,
                method,
                sweep_var,
                value,
                &constraints,
                point_seed,
                policy.as_ref(),
            )?;
            let runtime = if config.record_runtime {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            };
            rows.push(ResultRow::new(
                sweep_var,
                value,
                method,
                row.p_avg_w,
                row.gamma_r,
                row.eps_n,
                row.feasible,
                row.eps_n_active,
                runtime,
            ));
        }
    }
    Ok(rows)
}

struct MethodOutcome {
    p_avg_w: f64,
    gamma_r: f64,
    eps_n: f64,
    feasible: bool,
    eps_n_active: bool,
}

fn infeasible_outcome() -> MethodOutcome {
    MethodOutcome {
        p_avg_w: f64::NAN,
        gamma_r: f64::NAN,
        eps_n: f64::NAN,
        feasible: false,
        eps_n_active: false,
    }
}

fn run_method(
    config: &ExperimentConfig,
    method: Method,
    sweep_var: &str,
    value: f64,
    constraints: &LossConstraints,
    point_seed: u64,
    policy: Option<&OutagePolicy>,
) -> Result<MethodOutcome> {
    match method {
        Method::ClosedForm => {
            let points = sweep_n1(constraints, &[constraints.eps_out()], &config.model)?;
            match &points[0].outcome {
                N1SweepOutcome::Solved(sol) => Ok(MethodOutcome {
                    p_avg_w: sol.analysis.p_avg,
                    gamma_r: sol.analysis.gamma_r,
                    eps_n: sol.eps[1],
                    feasible: sol.feasible,
                    eps_n_active: true, // the closed form pins eps_N to eps_out
                }),
                N1SweepOutcome::Infeasible(_) => Ok(infeasible_outcome()),
            }
        }
        Method::Sa => {
            let sa_config = SaConfig {
                seed: point_seed,
                ..config.sa.clone()
            };
            match sa_optimize(constraints, &config.model, &sa_config) {
                Ok(res) => Ok(MethodOutcome {
                    p_avg_w: res.best_analysis.p_avg,
                    gamma_r: res.best_analysis.gamma_r,
                    eps_n: res.best_policy.eps()[res.best_policy.n()],
                    feasible: res.feasible,
                    eps_n_active: res.eps_n_active,
                }),
                Err(CoreError::Infeasible(_)) => Ok(infeasible_outcome()),
                Err(other) => Err(other.into()),
            }
        }
        Method::Oracle => {
            match grid_search_oracle(constraints, &config.model, config.oracle_resolution) {
                Ok(res) => Ok(MethodOutcome {
                    p_avg_w: res.best_analysis.p_avg,
                    gamma_r: res.best_analysis.gamma_r,
                    eps_n: res.best_policy.eps()[res.best_policy.n()],
                    feasible: res.feasible,
                    eps_n_active: res.eps_n_active,
                }),
                Err(CoreError::Infeasible(_)) => Ok(infeasible_outcome()),
                Err(other) => Err(other.into()),
            }
        }
        Method::Simulate => {
            let policy = policy
                .with_context(|| format!("simulate at {sweep_var}={value} needs a policy file"))?;
            let stats = simulate_policy(policy, &config.model, config.sim_slots, point_seed)?;
            let eps_n = stats.empirical_eps_cond().unwrap_or(f64::NAN);
            let gamma_r = stats.empirical_gamma_r();
            let feasible = gamma_r <= constraints.gamma()
                && (eps_n.is_nan() || eps_n <= constraints.eps_out());
            Ok(MethodOutcome {
                p_avg_w: stats.empirical_p_avg(),
                gamma_r,
                eps_n,
                feasible,
                eps_n_active: constraints.eps_out() - eps_n <= EPS_N_ACTIVE_TOL,
            })
        }
    }
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    writer.write_record(CSV_HEADER)?;
    for row in rows {
        writer.write_record(row.to_record())?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        bail!("unexpected CSV header: {header:?}");
    }
    reader
        .records()
        .map(|r| ResultRow::from_record(&r?))
        .collect()
}
