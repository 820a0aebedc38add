//! The `run`, `limits` and `simulate` pipelines.

use crate::config::{Built, Config, ConfigError, ExperimentConfig};
use bigjump_core::estimate::{
    estimate_hitting, estimate_marginal_tail, estimate_order_stats, estimate_partial_sum,
    estimate_ruin, tilted_estimator, PathEvent,
};
use bigjump_core::pointproc::sample_point_measure;
use bigjump_core::rng::domain;
use bigjump_core::{
    empirical_f_mc, hitting_constant, limit_f_mc, marginal_tail_constant, order_stat_constant,
    partial_sum_constant, ruin_constant, simulate_path, validate_conditions, ConditionReport,
    Error as CoreError, Estimate, LimitConstant, LimitOptions, McConfig, NormalizationPlan,
    Streams,
};
use serde::Serialize;
use serde_json::Value;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const BUILD_ID: &str = env!("BIGJUMP_BUILD_ID");
pub const DEFAULT_SEED: u64 = 0x5EED;
pub const SEED_ENV: &str = "BIGJUMP_SEED";

pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const INVALID: i32 = 2;
    pub const DEGENERATE: i32 = 3;
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] CoreError),
    #[error("{env} is not an unsigned integer: {value:?}")]
    SeedEnv { env: &'static str, value: String },
    #[error("degenerate estimate: {0}")]
    Degenerate(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::SeedEnv { .. } => exit::INVALID,
            RunError::Core(e) => match e {
                CoreError::InvalidParameter { .. }
                | CoreError::ConditionFailed { .. }
                | CoreError::BelowFloor { .. }
                | CoreError::Unsupported(_) => exit::INVALID,
                _ => exit::FAILURE,
            },
            RunError::Degenerate(_) => exit::DEGENERATE,
            RunError::Io { .. } | RunError::Pool(_) => exit::FAILURE,
        }
    }
}

/// `--seed`, then `run.seed`, then the environment, then the default.
pub fn resolve_seed(flag: Option<u64>, config: &Config) -> Result<u64, RunError> {
    if let Some(s) = flag.or(config.run.seed) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| RunError::SeedEnv {
            env: SEED_ENV,
            value: v,
        }),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

/// Run `f` on a pool of `workers` threads (0 = rayon's default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub build: String,
    pub seed: u64,
    pub experiment: &'static str,
    pub config: Config,
    pub config_toml: String,
    pub conditions: ConditionReport,
    pub plan: Option<NormalizationPlan>,
    /// The limit the estimate is compared against.
    pub theory: f64,
    pub theory_detail: Value,
    pub estimate: Estimate,
    pub estimate_detail: Value,
    pub z: f64,
    pub degenerate: bool,
}

/// What a run produced; files are written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    pub points_csv: Option<String>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn mc_config(config: &Config, seed: u64) -> McConfig {
    McConfig {
        reps: config.run.reps,
        ..McConfig::new(seed)
    }
}

fn need_plan(built: &Built) -> &NormalizationPlan {
    built
        .plan
        .as_ref()
        .expect("validated: experiment has a plan")
}

/// Theory for the configured experiment, without any path simulation.
pub fn theory(config: &Config, built: &Built, seed: u64) -> Result<(f64, Value), RunError> {
    let spec = &built.spec;
    let mc = mc_config(config, seed);
    let constant = |c: LimitConstant| (c.value, to_value(&c));
    Ok(match &config.experiment {
        ExperimentConfig::Tail { side, .. } => constant(marginal_tail_constant(spec, *side, &mc)?),
        ExperimentConfig::PointprocF { q, limit_reps, .. } => {
            let f = built.functional.as_ref().expect("validated functional");
            let lim = limit_f_mc(
                spec,
                *q,
                f,
                LimitOptions::default(),
                *limit_reps,
                &Streams::new(seed),
            )?;
            (lim.estimate.value, to_value(&lim))
        }
        ExperimentConfig::OrderStats { u } => constant(order_stat_constant(spec, u, &mc)?),
        ExperimentConfig::Hitting { lambda, a } => {
            constant(hitting_constant(spec, *lambda, *a, &mc)?)
        }
        ExperimentConfig::PartialSum { rho, absolute } => {
            constant(partial_sum_constant(spec, *rho, *absolute, &mc)?)
        }
        ExperimentConfig::Ruin { c, .. } => constant(ruin_constant(spec, *c, &mc)?),
    })
}

fn path_event(exp: &ExperimentConfig) -> Result<Option<PathEvent>, RunError> {
    Ok(match exp {
        ExperimentConfig::OrderStats { u } => Some(PathEvent::OrderStats { u: u.clone() }),
        ExperimentConfig::Hitting { lambda, a } => Some(PathEvent::Hitting {
            lambda: *lambda,
            a: *a,
        }),
        ExperimentConfig::PartialSum {
            rho,
            absolute: false,
        } => Some(PathEvent::PartialSum { rho: *rho }),
        _ => None,
    })
}

fn estimate(config: &Config, built: &Built, seed: u64) -> Result<(Estimate, Value), RunError> {
    let spec = &built.spec;
    let streams = Streams::new(seed);
    let reps = config.run.reps;
    if let Some(tilt) = config.run.tilt_alpha {
        let event = path_event(&config.experiment)?.ok_or_else(|| ConfigError::Invalid {
            key: "run.tilt_alpha".into(),
            message: format!(
                "tilting is not available for experiment `{}`",
                config.experiment.name()
            ),
        })?;
        let e = tilted_estimator(spec, need_plan(built), &event, tilt, reps, &streams)?;
        return Ok((e, Value::Null));
    }
    Ok(match &config.experiment {
        ExperimentConfig::Tail {
            x,
            side,
            chains,
            chain_len,
        } => (
            estimate_marginal_tail(spec, *x, *side, *chains, *chain_len, &streams)?,
            Value::Null,
        ),
        ExperimentConfig::PointprocF { q, .. } => {
            let f = built.functional.as_ref().expect("validated functional");
            (
                empirical_f_mc(spec, need_plan(built), *q, f, reps, &streams)?,
                Value::Null,
            )
        }
        ExperimentConfig::OrderStats { u } => (
            estimate_order_stats(spec, need_plan(built), u, reps, &streams)?,
            Value::Null,
        ),
        ExperimentConfig::Hitting { lambda, a } => (
            estimate_hitting(spec, need_plan(built), *lambda, *a, reps, &streams)?,
            Value::Null,
        ),
        ExperimentConfig::PartialSum { rho, absolute } => {
            let ps = estimate_partial_sum(spec, need_plan(built), *rho, *absolute, reps, &streams)?;
            (ps.estimate, to_value(&ps))
        }
        ExperimentConfig::Ruin { u, c, horizon_m } => {
            let r = estimate_ruin(spec, *u, *c, *horizon_m, reps, &streams)?;
            (r.estimate, to_value(&r))
        }
    })
}

fn points_csv(config: &Config, built: &Built, seed: u64) -> Result<Option<String>, RunError> {
    let (ExperimentConfig::PointprocF { q, .. }, Some(f)) = (&config.experiment, &built.functional)
    else {
        return Ok(None);
    };
    let mut rng = Streams::new(seed).domain(domain::AUX).stream(0);
    let xi = sample_point_measure(
        &built.spec,
        need_plan(built),
        *q,
        f.default_floor(),
        &mut rng,
    )?;
    Ok(Some(xi.to_csv()))
}

/// The whole pipeline for one validated configuration, in memory.
pub fn execute(config: &Config, seed: u64) -> Result<RunOutput, RunError> {
    let built = config.build()?;
    let beta = built.plan.map_or(1.0, |p| p.beta);
    let conditions = validate_conditions(&built.spec, beta);
    let (theory, theory_detail) = theory(config, &built, seed)?;
    let (estimate, estimate_detail) = estimate(config, &built, seed)?;
    let z = estimate.z_theory(theory);
    let degenerate = !estimate.value.is_finite()
        || (estimate.value == 0.0 && estimate.stderr == 0.0)
        || theory_detail
            .get("degenerate")
            .and_then(Value::as_bool)
            .unwrap_or(false);
    let points_csv = points_csv(config, &built, seed)?;
    Ok(RunOutput {
        report: Report {
            build: BUILD_ID.to_string(),
            seed,
            experiment: config.experiment.name(),
            config: config.clone(),
            config_toml: config.to_toml(),
            conditions,
            plan: built.plan,
            theory,
            theory_detail,
            estimate,
            estimate_detail,
            z,
            degenerate,
        },
        points_csv,
    })
}

fn write(path: PathBuf, text: &str) -> Result<(), RunError> {
    std::fs::write(&path, text).map_err(|source| RunError::Io { path, source })
}

fn ensure_dir(dir: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn output_dir(flag: Option<&Path>, config: &Config) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.run.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("bigjump-out"))
}

pub fn report_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<(), RunError> {
    ensure_dir(dir)?;
    write(dir.join("report.json"), &report_json(&out.report))?;
    if let Some(csv) = &out.points_csv {
        write(dir.join("points.csv"), csv)?;
    }
    Ok(())
}

/// `run`: execute, write the report, and map a degenerate estimate to its
/// own error after the files are on disk.
pub fn run(config: &Config, seed: u64, dir: &Path) -> Result<Report, RunError> {
    let out = with_workers(config.run.workers, || execute(config, seed))??;
    write_outputs(&out, dir)?;
    if out.report.degenerate {
        return Err(RunError::Degenerate(format!(
            "estimate {} ± {} for `{}`",
            out.report.estimate.value, out.report.estimate.stderr, out.report.experiment
        )));
    }
    Ok(out.report)
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitsReport {
    pub build: String,
    pub seed: u64,
    pub experiment: &'static str,
    pub conditions: ConditionReport,
    pub theory: f64,
    pub theory_detail: Value,
}

/// `limits`: constants only.
pub fn limits(config: &Config, seed: u64) -> Result<LimitsReport, RunError> {
    let built = config.build()?;
    let beta = built.plan.map_or(1.0, |p| p.beta);
    let (theory, theory_detail) =
        with_workers(config.run.workers, || theory(config, &built, seed))??;
    Ok(LimitsReport {
        build: BUILD_ID.to_string(),
        seed,
        experiment: config.experiment.name(),
        conditions: validate_conditions(&built.spec, beta),
        theory,
        theory_detail,
    })
}

/// `simulate`: one stationary path of length `len` as `k,x,z` CSV rows.
pub fn simulate_series(config: &Config, seed: u64, len: usize) -> Result<String, RunError> {
    let spec = config.spec()?;
    let mut rng = Streams::new(seed).domain(domain::PATHS).stream(0);
    let sim = simulate_path(&spec, len, 0, &mut rng, true)?;
    let noise = sim.noise.as_ref().expect("noise requested");
    let mut out = String::from("k,x,z\n");
    for k in 1..=len as i64 {
        let x = sim.path.get(k).expect("in window");
        let z = noise.get(k).expect("in window");
        out.push_str(&format!("{k},{x:.16e},{z:.16e}\n"));
    }
    Ok(out)
}

pub fn write_series(csv: &str, dir: &Path) -> Result<PathBuf, RunError> {
    ensure_dir(dir)?;
    let path = dir.join("series.csv");
    write(path.clone(), csv)?;
    Ok(path)
}
