//! The five subcommands. Sweep points run in parallel, each with its own
//! seed derived from the run seed and the point index; rows are collected
//! in grid order.

use std::time::Instant;

use rayon::prelude::*;
use smi_core::{
    baseline_ub_precoder, build_correlations, dof_bounds, optimize_precoder, smi_asymptotic,
    smi_lower_bound, smi_monte_carlo, smi_upper_bound, CorrelationPair64, Init, Objective,
    OptimizerConfig, OptimizerConfig64, OptimizerTrace64, Precoder64, Scenario64,
};

use crate::config::{derive_seed, ExperimentConfig, PrecoderKind};
use crate::error::CliError;
use crate::output::{Fig3Row, SweepRow};
use crate::precoder_io::read_precoder;

/// Seed index reserved for the scaled-random precoder draw.
const PRECODER_SEED_INDEX: u64 = u64::MAX;

fn correlations(
    cfg: &ExperimentConfig,
    scenario: &Scenario64,
) -> Result<CorrelationPair64, CliError> {
    let targets = cfg.target_set(scenario.n_targets, scenario.snr_db)?;
    Ok(build_correlations(&targets, scenario)?)
}

/// The configured precoder for `scenario`, at full power unless
/// `precoder_power_w` says otherwise.
pub fn precoder_for(
    cfg: &ExperimentConfig,
    corr: &CorrelationPair64,
    scenario: &Scenario64,
) -> Result<Precoder64, CliError> {
    let (n, k, p) = (scenario.n_tx, scenario.n_targets, scenario.power_budget);
    let f = match cfg.precoder {
        PrecoderKind::Eigenbeam => Precoder64::eigenbeam(corr, k, p)?,
        PrecoderKind::ScaledRandom => {
            Precoder64::scaled_random(n, k, p, derive_seed(cfg.seed, PRECODER_SEED_INDEX))
        }
        PrecoderKind::File => {
            let path = cfg.precoder_file.as_deref().expect("validated");
            let f = read_precoder(path)?;
            if f.matrix().shape() != (n, k) {
                return Err(CliError::Config(format!(
                    "run.precoder_file: {} is {}x{}, scenario needs {n}x{k}",
                    path.display(),
                    f.n_tx(),
                    f.n_streams()
                )));
            }
            f
        }
    };
    Ok(match cfg.precoder_power_w {
        Some(0.0) => Precoder64::zeros(n, k),
        Some(w) => f.scaled_to(w),
        None => f,
    })
}

/// Every estimate at one point; `timing` adds the elapsed wall time.
pub fn evaluate(
    corr: &CorrelationPair64,
    precoder: &Precoder64,
    scenario: &Scenario64,
    sweep_value: f64,
    n_trials: usize,
    mc_seed: u64,
    timing: bool,
) -> Result<SweepRow, CliError> {
    let start = Instant::now();
    let asym = smi_asymptotic(corr, precoder, scenario)?.nats;
    let upper = smi_upper_bound(corr, precoder, scenario)?.nats;
    let lower = smi_lower_bound(corr, precoder, scenario)?.nats;
    let mc = smi_monte_carlo(corr, precoder, scenario, n_trials, mc_seed)?;
    let dof = dof_bounds(scenario, precoder)?;
    let row = SweepRow {
        sweep_value,
        smi_asymptotic: asym,
        smi_upper: upper,
        smi_lower: lower,
        smi_mc_mean: mc.mean_nats,
        smi_mc_stderr: mc.stderr,
        dof_lower: dof.lower,
        dof_upper: dof.upper,
        wall_time_ms: timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    };
    row.check_ordering()?;
    Ok(row)
}

pub fn cmd_eval(cfg: &ExperimentConfig, timing: bool) -> Result<SweepRow, CliError> {
    let s = cfg.scenario;
    let corr = correlations(cfg, &s)?;
    let f = precoder_for(cfg, &corr, &s)?;
    evaluate(
        &corr,
        &f,
        &s,
        s.n_frames as f64,
        cfg.n_trials,
        derive_seed(cfg.seed, 0),
        timing,
    )
}

/// SMI against the number of frames, for one fixed precoder.
pub fn cmd_fig1(cfg: &ExperimentConfig, timing: bool) -> Result<Vec<SweepRow>, CliError> {
    let base = cfg.scenario;
    let corr = correlations(cfg, &base)?;
    let f = precoder_for(cfg, &corr, &base)?;
    cfg.grid
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let s = Scenario64 {
                n_frames: x as usize,
                ..base
            };
            evaluate(
                &corr,
                &f,
                &s,
                x,
                cfg.n_trials,
                derive_seed(cfg.seed, i as u64),
                timing,
            )
        })
        .collect()
}

/// SMI against the number of targets at fixed frames.
pub fn cmd_fig2(cfg: &ExperimentConfig, timing: bool) -> Result<Vec<SweepRow>, CliError> {
    if cfg.precoder == PrecoderKind::File {
        return Err(CliError::Config(
            "run.precoder: a precoder file cannot follow a sweep over the number of targets".into(),
        ));
    }
    cfg.grid
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let s = Scenario64 {
                n_targets: x as usize,
                ..cfg.scenario
            };
            let corr = correlations(cfg, &s)?;
            let f = precoder_for(cfg, &corr, &s)?;
            evaluate(
                &corr,
                &f,
                &s,
                x,
                cfg.n_trials,
                derive_seed(cfg.seed, i as u64),
                timing,
            )
        })
        .collect()
}

pub fn optimizer_config(
    cfg: &ExperimentConfig,
    objective: Objective,
    seed: u64,
) -> OptimizerConfig64 {
    OptimizerConfig {
        max_iters: cfg.max_iters,
        grad_norm_tol: cfg.grad_norm_tol,
        objective,
        init: match cfg.init {
            PrecoderKind::ScaledRandom => Init::ScaledRandom,
            _ => Init::Eigenbeam,
        },
        seed,
        ..OptimizerConfig::default()
    }
}

/// Both optimised arms at one SNR.
pub struct Fig3Point {
    pub proposed: OptimizerTrace64,
    pub baseline: OptimizerTrace64,
    pub corr: CorrelationPair64,
    pub scenario: Scenario64,
}

pub fn fig3_point(
    cfg: &ExperimentConfig,
    snr_db: f64,
    index: usize,
) -> Result<Fig3Point, CliError> {
    let s = Scenario64 {
        snr_db,
        ..cfg.scenario
    };
    let corr = correlations(cfg, &s)?;
    let seed = derive_seed(cfg.seed, index as u64);
    let proposed = optimize_precoder(
        &corr,
        &s,
        &optimizer_config(cfg, Objective::AsymptoticSmi, seed),
    )?;
    let baseline = baseline_ub_precoder(
        &corr,
        &s,
        &optimizer_config(cfg, Objective::UpperBoundSmi, seed),
    )?;
    Ok(Fig3Point {
        proposed,
        baseline,
        corr,
        scenario: s,
    })
}

/// SMI against SNR for the SMI-optimised and bound-optimised precoders.
pub fn cmd_fig3(cfg: &ExperimentConfig, timing: bool) -> Result<Vec<Fig3Row>, CliError> {
    let per_point: Vec<[Fig3Row; 2]> = cfg
        .grid
        .par_iter()
        .enumerate()
        .map(|(i, &snr)| {
            let start = Instant::now();
            let pt = fig3_point(cfg, snr, i)?;
            let mc_seed = derive_seed(cfg.seed, i as u64);
            let arm = |name, trace: &OptimizerTrace64| -> Result<Fig3Row, CliError> {
                let mut row = evaluate(
                    &pt.corr,
                    &trace.precoder,
                    &pt.scenario,
                    snr,
                    cfg.n_trials,
                    mc_seed,
                    false,
                )?;
                row.wall_time_ms = timing.then(|| start.elapsed().as_secs_f64() * 1e3);
                Ok(Fig3Row {
                    arm: name,
                    row,
                    iterations: trace.iterations(),
                    termination: trace.termination,
                })
            };
            Ok([
                arm("proposed", &pt.proposed)?,
                arm("baseline", &pt.baseline)?,
            ])
        })
        .collect::<Result<_, CliError>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

pub fn cmd_optimize(cfg: &ExperimentConfig) -> Result<OptimizerTrace64, CliError> {
    let s = cfg.scenario;
    let corr = correlations(cfg, &s)?;
    let oc = optimizer_config(cfg, Objective::AsymptoticSmi, derive_seed(cfg.seed, 0));
    Ok(optimize_precoder(&corr, &s, &oc)?)
}
