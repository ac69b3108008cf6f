//! The solve / analyze / sweep pipelines.

use std::f64::consts::LN_2;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use dmcap::{
    annotate_trace, classify_indexes, fit_rate, generate, iteration_bound_check, optimality_gaps,
    solve, Channel, Error, Init, IterationRecord, OracleMethod, RateFit, ReferenceOptimum, Regime,
    SolveReport, SolverConfig, StopReason,
};

use crate::channel_io::{read_channel, read_distribution};
use crate::emit::{fmt_f64, to_json, write_output, CsvBuilder};
use crate::{AnalyzeArgs, CmdError, Generator, SolveArgs, SolverArgs, SourceArgs, SweepArgs, Units};

/// Divergence tolerance for the KKT-style index classification.
const CLASS_TOLERANCE: f64 = 1e-6;

/// Floor under tail points fed to the below-epsilon rate fit; anything
/// smaller is round-off, not signal.
const TAIL_FLOOR: f64 = 1e-13;

struct LoadedChannel {
    channel: Channel,
    name: String,
}

fn require<T: Copy>(value: Option<T>, what: &str) -> Result<T, CmdError> {
    value.ok_or_else(|| CmdError::malformed(format!("generator needs {what}")))
}

fn load_channel(src: &SourceArgs) -> Result<LoadedChannel, CmdError> {
    match (&src.channel, src.generate) {
        (Some(path), None) => {
            let (channel, name) = read_channel(path, src.format)?;
            let name = name.unwrap_or_else(|| {
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "channel".to_owned())
            });
            Ok(LoadedChannel { channel, name })
        }
        (None, Some(kind)) => {
            let (channel, name) = match kind {
                Generator::Random => {
                    let m = require(src.m, "--m")?;
                    let n = require(src.n, "--n")?;
                    let seed = require(src.seed, "--seed")?;
                    (
                        generate::random_channel(m, n, seed),
                        format!("random-m{m}-n{n}-seed{seed}"),
                    )
                }
                Generator::Bsc => {
                    let delta = require(src.delta, "--delta")?;
                    if !(0.0..=1.0).contains(&delta) {
                        return Err(CmdError::malformed("--delta outside [0, 1]"));
                    }
                    (generate::bsc(delta), format!("bsc-{delta}"))
                }
                Generator::Identity => {
                    let m = require(src.m, "--m")?;
                    if m == 0 {
                        return Err(CmdError::malformed("--m must be positive"));
                    }
                    (generate::identity(m), format!("identity-{m}"))
                }
                Generator::DupRow => {
                    let m = require(src.m, "--m")?;
                    let n = require(src.n, "--n")?;
                    let seed = require(src.seed, "--seed")?;
                    if m < 2 {
                        return Err(CmdError::malformed("--generate dup-row needs --m >= 2"));
                    }
                    (
                        generate::dup_row(m, n, seed),
                        format!("dup-row-m{m}-n{n}-seed{seed}"),
                    )
                }
            };
            Ok(LoadedChannel { channel, name })
        }
        _ => Err(CmdError::malformed(
            "exactly one of --channel or --generate is required",
        )),
    }
}

fn parse_init(spec: &str, m: usize) -> Result<Init, CmdError> {
    if spec == "uniform" {
        return Ok(Init::Uniform);
    }
    let d = read_distribution(Path::new(spec))?;
    if d.len() != m {
        return Err(CmdError::dimension(format!(
            "init distribution has {} entries, channel has {m} inputs",
            d.len()
        )));
    }
    Ok(Init::Custom(d))
}

fn solver_config(
    args: &SolverArgs,
    m: usize,
    record_trace: bool,
) -> Result<SolverConfig, CmdError> {
    Ok(SolverConfig {
        epsilon: args.epsilon,
        max_iters: args.max_iters,
        init: parse_init(&args.init, m)?,
        record_trace,
        long_horizon: args.long_horizon,
    })
}

fn stop_reason_str(reason: StopReason) -> &'static str {
    match reason {
        StopReason::GapBelowEpsilon => "gap_below_epsilon",
        StopReason::MaxIters => "max_iters",
    }
}

fn method_str(method: OracleMethod) -> &'static str {
    match method {
        OracleMethod::AnalyticBsc => "analytic_bsc",
        OracleMethod::AnalyticIdentity => "analytic_identity",
        OracleMethod::AnalyticDegenerate => "analytic_degenerate",
        OracleMethod::GridSearch => "grid_search",
    }
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct OracleDto {
    method: &'static str,
    c_star: f64,
    tolerance: f64,
    /// Absolute difference between the solver estimate and c_star.
    agreement: f64,
}

#[derive(Serialize)]
struct SolveDto {
    name: String,
    m: usize,
    n: usize,
    capacity_nats: f64,
    capacity_bits: f64,
    iterations: usize,
    stop_reason: &'static str,
    epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleDto>,
}

fn trace_csv(trace: &[IterationRecord]) -> String {
    let m = trace.first().map_or(0, |r| r.p.len());
    let mut header = String::from("t,c_lower,c_upper,gap");
    for i in 0..m {
        header.push_str(&format!(",p_{i}"));
    }
    let mut csv = CsvBuilder::new(&header);
    for rec in trace {
        let mut fields = vec![
            rec.t.to_string(),
            fmt_f64(rec.c_lower),
            fmt_f64(rec.c_upper),
            fmt_f64(rec.gap),
        ];
        fields.extend(rec.p.probs().iter().map(|&v| fmt_f64(v)));
        csv.row(&fields);
    }
    csv.finish()
}

fn verify_against_oracle(
    channel: &Channel,
    estimate: f64,
) -> Result<Option<OracleDto>, CmdError> {
    let result = match dmcap::analytic_capacity(channel) {
        Some(res) => Some(res),
        None if channel.input_size() <= 4 => {
            Some(dmcap::grid_search_capacity(channel, 0.01, 3)?)
        }
        None => {
            eprintln!(
                "note: no oracle available for this channel (not analytic, m > 4); skipping --verify"
            );
            None
        }
    };
    Ok(result.map(|res| OracleDto {
        method: method_str(res.method),
        c_star: res.c_star,
        tolerance: res.tolerance,
        agreement: (estimate - res.c_star).abs(),
    }))
}

pub fn cmd_solve(args: &SolveArgs) -> Result<(), CmdError> {
    let loaded = load_channel(&args.source)?;
    let cfg = solver_config(
        &args.solver,
        loaded.channel.input_size(),
        args.trace_out.is_some(),
    )?;
    let report = solve(&loaded.channel, &cfg)?;

    let oracle = if args.verify {
        verify_against_oracle(&loaded.channel, report.capacity_estimate)?
    } else {
        None
    };

    if let Some(path) = &args.trace_out {
        let trace = report.trace.as_deref().unwrap_or(&[]);
        write_output(Some(path), &trace_csv(trace))?;
    }

    let dto = SolveDto {
        name: loaded.name.clone(),
        m: loaded.channel.input_size(),
        n: loaded.channel.output_size(),
        capacity_nats: report.capacity_estimate,
        capacity_bits: report.capacity_estimate / LN_2,
        iterations: report.iterations,
        stop_reason: stop_reason_str(report.stop_reason),
        epsilon: args.solver.epsilon,
        oracle,
    };
    write_output(args.report_out.as_deref(), &to_json(&dto))?;

    let (value, unit) = match args.units {
        Units::Nats => (dto.capacity_nats, "nats"),
        Units::Bits => (dto.capacity_bits, "bits"),
    };
    eprintln!(
        "{}: capacity {} {} in {} iterations ({})",
        dto.name, value, unit, dto.iterations, dto.stop_reason
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RateFitDto {
    regime: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    log_linear_r2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit_window: Option<(usize, usize)>,
}

impl RateFitDto {
    fn from_fit(fit: &RateFit) -> Self {
        Self {
            regime: fit.regime.as_str(),
            c_hat: Some(fit.c_hat),
            log_linear_r2: Some(fit.log_linear_r2),
            fit_window: Some(fit.fit_window),
        }
    }

    fn undetermined() -> Self {
        Self {
            regime: Regime::Undetermined.as_str(),
            c_hat: None,
            log_linear_r2: None,
            fit_window: None,
        }
    }
}

#[derive(Serialize)]
struct ReferenceDto {
    source: &'static str,
    c_star: f64,
    tolerance: f64,
}

#[derive(Serialize)]
struct BoundCheckDto {
    passed: bool,
    iterations: usize,
    loglog_bound: f64,
    linear_ceiling: f64,
}

#[derive(Serialize)]
struct AnalyzeDto {
    name: String,
    m: usize,
    n: usize,
    epsilon: f64,
    iterations: usize,
    stop_reason: &'static str,
    capacity_nats: f64,
    reference: ReferenceDto,
    rate_fit: RateFitDto,
    #[serde(skip_serializing_if = "Option::is_none")]
    tail_fit: Option<RateFitDto>,
    classification: Vec<&'static str>,
    classification_tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound_check: Option<BoundCheckDto>,
    max_identity_residual: f64,
}

fn reference_for(channel: &Channel, max_iters: usize) -> Result<ReferenceOptimum, CmdError> {
    if let Some(reference) = ReferenceOptimum::from_analytic(channel) {
        return Ok(reference);
    }
    ReferenceOptimum::from_long_run(channel, max_iters).map_err(|e| match e {
        Error::ReferenceUnobtainable(msg) => CmdError::reference(msg),
        other => other.into(),
    })
}

fn source_str(reference: &ReferenceOptimum) -> &'static str {
    match reference.source {
        dmcap::RefSource::Analytic => "analytic",
        dmcap::RefSource::GridOracle => "grid_oracle",
        dmcap::RefSource::LongRun => "long_run",
    }
}

fn fit_or_undetermined(series: &[(usize, f64)], epsilon: f64) -> (RateFitDto, Option<RateFit>) {
    match fit_rate(series, epsilon) {
        Ok(fit) => (RateFitDto::from_fit(&fit), Some(fit)),
        Err(_) => (RateFitDto::undetermined(), None),
    }
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CmdError> {
    let loaded = load_channel(&args.source)?;
    let cfg = solver_config(&args.solver, loaded.channel.input_size(), true)?;
    let report = solve(&loaded.channel, &cfg)?;
    let trace = report.trace.as_deref().unwrap_or(&[]);

    let reference = reference_for(&loaded.channel, args.solver.max_iters)?;
    let records = annotate_trace(trace, &reference).map_err(|e| match e {
        Error::AbsoluteContinuityViolation { index } => CmdError::reference(format!(
            "trace left the support of the reference optimum at index {index}"
        )),
        other => other.into(),
    })?;

    if let Some(path) = &args.trace_out {
        let mut csv = CsvBuilder::new("t,f,d_p,d_q,a,residual");
        for rec in &records {
            csv.row(&[
                rec.t.to_string(),
                fmt_f64(rec.f),
                fmt_f64(rec.d_p),
                fmt_f64(rec.d_q),
                fmt_f64(rec.a),
                fmt_f64(rec.identity_residual),
            ]);
        }
        write_output(Some(path), &csv.finish())?;
    }

    let gaps = optimality_gaps(trace, &reference);
    let (rate_dto, rate_fit) = fit_or_undetermined(&gaps, args.solver.epsilon);

    let tail_fit = args.solver.long_horizon.then(|| {
        let tail: Vec<(usize, f64)> = gaps
            .iter()
            .copied()
            .filter(|&(_, f)| f < args.solver.epsilon)
            .collect();
        fit_or_undetermined(&tail, TAIL_FLOOR).0
    });

    let classification = classify_indexes(&loaded.channel, &reference, CLASS_TOLERANCE);
    let bound_check = rate_fit
        .as_ref()
        .filter(|fit| fit.regime == Regime::Exponential)
        .map(|fit| {
            let bc = iteration_bound_check(
                loaded.channel.input_size(),
                args.solver.epsilon,
                report.iterations,
                fit.c_hat,
            );
            BoundCheckDto {
                passed: bc.passed,
                iterations: bc.iterations,
                loglog_bound: bc.loglog_bound,
                linear_ceiling: bc.linear_ceiling,
            }
        });

    let dto = AnalyzeDto {
        name: loaded.name,
        m: loaded.channel.input_size(),
        n: loaded.channel.output_size(),
        epsilon: args.solver.epsilon,
        iterations: report.iterations,
        stop_reason: stop_reason_str(report.stop_reason),
        capacity_nats: report.capacity_estimate,
        reference: ReferenceDto {
            source: source_str(&reference),
            c_star: reference.c_star,
            tolerance: reference.tolerance,
        },
        rate_fit: rate_dto,
        tail_fit,
        classification: classification
            .labels
            .iter()
            .map(|label| label.as_str())
            .collect(),
        classification_tolerance: classification.tolerance,
        bound_check,
        max_identity_residual: records
            .iter()
            .map(|r| r.identity_residual)
            .fold(0.0, f64::max),
    };
    write_output(args.report_out.as_deref(), &to_json(&dto))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

/// Inclusive integer range, "4" or "3..6".
fn parse_range(spec: &str) -> Result<(usize, usize), CmdError> {
    let parse_one = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| CmdError::malformed(format!("bad range bound {s:?}")))
    };
    let (lo, hi) = match spec.split_once("..") {
        Some((a, b)) => (parse_one(a)?, parse_one(b)?),
        None => {
            let v = parse_one(spec)?;
            (v, v)
        }
    };
    if lo == 0 || lo > hi {
        return Err(CmdError::malformed(format!("bad range {spec:?}")));
    }
    Ok((lo, hi))
}

struct SweepRow {
    m: usize,
    n: usize,
    seed: u64,
    capacity: Option<f64>,
    iterations: Option<usize>,
    c_hat: Option<f64>,
    regime: Option<&'static str>,
    bound_check: Option<bool>,
    status: String,
}

fn sweep_one(
    index: u64,
    base_seed: u64,
    m_range: (usize, usize),
    n_range: (usize, usize),
    epsilon: f64,
    max_iters: usize,
) -> SweepRow {
    let seed = base_seed.wrapping_add(index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(m_range.0..=m_range.1);
    let n = rng.gen_range(n_range.0..=n_range.1);
    let channel = generate::random_channel_with_rng(&mut rng, m, n);

    let mut row = SweepRow {
        m,
        n,
        seed,
        capacity: None,
        iterations: None,
        c_hat: None,
        regime: None,
        bound_check: None,
        status: "ok".to_owned(),
    };

    let cfg = SolverConfig {
        epsilon,
        max_iters,
        record_trace: true,
        ..Default::default()
    };
    let report: SolveReport = match solve(&channel, &cfg) {
        Ok(r) => r,
        Err(e) => {
            row.status = format!("solve_failed: {e}");
            return row;
        }
    };
    row.capacity = Some(report.capacity_estimate);
    row.iterations = Some(report.iterations);

    let reference = match ReferenceOptimum::from_long_run(&channel, max_iters) {
        Ok(r) => r,
        Err(_) => {
            row.status = "no_reference".to_owned();
            return row;
        }
    };
    let gaps = optimality_gaps(report.trace.as_deref().unwrap_or(&[]), &reference);
    match fit_rate(&gaps, epsilon) {
        Ok(fit) => {
            row.c_hat = Some(fit.c_hat);
            row.regime = Some(fit.regime.as_str());
            if fit.regime == Regime::Exponential {
                row.bound_check =
                    Some(iteration_bound_check(m, epsilon, report.iterations, fit.c_hat).passed);
            }
        }
        Err(_) => {
            row.regime = Some(Regime::Undetermined.as_str());
        }
    }
    row
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CmdError> {
    if args.count == 0 {
        return Err(CmdError::malformed("--count must be positive"));
    }
    let m_range = parse_range(&args.m)?;
    let n_range = parse_range(&args.n)?;

    let rows: Vec<SweepRow> = (0..args.count as u64)
        .into_par_iter()
        .map(|k| {
            sweep_one(
                k,
                args.seed,
                m_range,
                n_range,
                args.epsilon,
                args.max_iters,
            )
        })
        .collect();

    let mut csv = CsvBuilder::new("m,n,seed,capacity_nats,iterations,c_hat,regime,bound_check,status");
    let blank = String::new;
    for row in &rows {
        csv.row(&[
            row.m.to_string(),
            row.n.to_string(),
            row.seed.to_string(),
            row.capacity.map(fmt_f64).unwrap_or_else(blank),
            row.iterations.map(|i| i.to_string()).unwrap_or_else(blank),
            row.c_hat.map(fmt_f64).unwrap_or_else(blank),
            row.regime.map(str::to_owned).unwrap_or_else(blank),
            row.bound_check
                .map(|b| b.to_string())
                .unwrap_or_else(blank),
            row.status.clone(),
        ]);
    }
    write_output(args.report_out.as_deref(), &csv.finish())?;
    Ok(())
}
