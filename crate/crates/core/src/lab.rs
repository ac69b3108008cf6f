//! Instruments solver traces against a reference optimum.
//!
//! Given a trusted optimal input p* (analytic, brute-force, or a long
//! high-precision run), every consecutive trace pair is scored with the
//! divergences D(p*||p^t) and D(q*||q^t), the optimality gap f_t, the
//! data-processing ratio between the two divergences, and the residual of
//! the per-iteration identity
//!
//! ```text
//! D(p*||p^t) - D(p*||p^{t+1}) = f_t + D(q*||q^t)
//! ```
//!
//! which ties the drop in input divergence to the gap plus output
//! divergence. On top of that sit a decay-rate fitter and a KKT-style
//! classification of input symbols at the optimum.

use crate::error::{Error, Result};
use crate::info::{kl_divergence, mutual_information, output_distribution, row_divergence};
use crate::oracle;
use crate::prob::{Channel, Distribution};
use crate::solver::{solve, IterationRecord, SolverConfig, StopReason};

/// Below this input divergence the data-processing ratio is dominated by
/// round-off, so it is reported as zero instead of noise.
const RATIO_FLOOR: f64 = 1e-14;

/// Gap precision demanded of a long solver run that doubles as a reference.
pub const LONG_RUN_GAP: f64 = 1e-12;

/// Input symbols with optimal mass at or below this are treated as zero
/// when classifying; long runs never reach exact zero.
pub const MASS_THRESHOLD: f64 = 1e-8;

/// Iterations dropped from the head of every rate fit as transient.
const TRANSIENT_SKIP: usize = 5;

/// Minimum usable points for a rate fit.
const MIN_FIT_POINTS: usize = 5;

/// Exponential regimes must beat this decay factor.
const MIN_EXP_RATE: f64 = 1.0 + 1e-6;

const MIN_FIT_R2: f64 = 0.9;

/// Harness constant for the iteration-count check.
const BOUND_CHECK_K: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefSource {
    Analytic,
    GridOracle,
    LongRun,
}

/// A trusted optimum (p*, q*, C*) for one channel. `c_star` is the mutual
/// information of `p_star` recomputed in the working precision, so the
/// identity checks close to round-off even when `p_star` itself carries the
/// declared tolerance.
#[derive(Debug, Clone)]
pub struct ReferenceOptimum {
    pub p_star: Distribution,
    pub q_star: Distribution,
    pub c_star: f64,
    pub source: RefSource,
    /// How far `c_star` may sit from the true capacity.
    pub tolerance: f64,
}

impl ReferenceOptimum {
    pub fn new(
        w: &Channel,
        p_star: Distribution,
        source: RefSource,
        tolerance: f64,
    ) -> Result<Self> {
        let q_star = output_distribution(&p_star, w)?;
        let c_star = mutual_information(&p_star, w)?;
        Ok(Self {
            p_star,
            q_star,
            c_star,
            source,
            tolerance,
        })
    }

    /// Reference from a closed-form capacity, when the channel has one.
    pub fn from_analytic(w: &Channel) -> Option<Self> {
        let res = oracle::analytic_capacity(w)?;
        Self::new(w, res.p_star, RefSource::Analytic, res.tolerance).ok()
    }

    /// Reference from the brute-force lattice oracle.
    pub fn from_grid(w: &Channel, resolution: f64, refine_rounds: usize) -> Result<Self> {
        let res = oracle::grid_search_capacity(w, resolution, refine_rounds)?;
        Self::new(w, res.p_star, RefSource::GridOracle, res.tolerance)
    }

    /// Reference from a long high-precision solver run. Fails when the run
    /// cannot certify a gap of `LONG_RUN_GAP` within `max_iters`.
    pub fn from_long_run(w: &Channel, max_iters: usize) -> Result<Self> {
        let cfg = SolverConfig {
            epsilon: LONG_RUN_GAP,
            max_iters,
            ..Default::default()
        };
        let report = solve(w, &cfg)?;
        if report.stop_reason != StopReason::GapBelowEpsilon {
            return Err(Error::ReferenceUnobtainable(format!(
                "gap {LONG_RUN_GAP:e} not certified within {max_iters} iterations"
            )));
        }
        Self::new(w, report.p_final, RefSource::LongRun, LONG_RUN_GAP)
    }
}

/// Scores for one consecutive trace pair (t, t+1). All quantities are
/// attached to time t.
#[derive(Debug, Clone)]
pub struct ConvergenceRecord {
    pub t: usize,
    /// Optimality gap f_t = C* - c_lower(t).
    pub f: f64,
    /// D(p* || p^t).
    pub d_p: f64,
    /// D(q* || q^t).
    pub d_q: f64,
    /// Data-processing ratio d_q / d_p, in [0, 1].
    pub a: f64,
    /// |(d_p(t) - d_p(t+1)) - (f_t + d_q(t))|.
    pub identity_residual: f64,
}

/// Optimality gaps (t, C* - c_lower(t)) for every record of a trace.
pub fn optimality_gaps(
    trace: &[IterationRecord],
    reference: &ReferenceOptimum,
) -> Vec<(usize, f64)> {
    trace
        .iter()
        .map(|rec| (rec.t, reference.c_star - rec.c_lower))
        .collect()
}

/// Scores every consecutive pair of an interior trace against a reference.
/// Errors with `AbsoluteContinuityViolation` when an iterate's support no
/// longer covers the support of p*.
pub fn annotate_trace(
    trace: &[IterationRecord],
    reference: &ReferenceOptimum,
) -> Result<Vec<ConvergenceRecord>> {
    if trace.len() < 2 {
        return Ok(Vec::new());
    }
    let mut d_p_at = kl_divergence(&reference.p_star, &trace[0].p)?;
    let mut out = Vec::with_capacity(trace.len() - 1);
    for pair in trace.windows(2) {
        let (cur, next) = (&pair[0], &pair[1]);
        let d_p_next = kl_divergence(&reference.p_star, &next.p)?;
        let d_q = kl_divergence(&reference.q_star, &cur.q)?;
        let f = reference.c_star - cur.c_lower;
        let a = if d_p_at > RATIO_FLOOR {
            d_q / d_p_at
        } else {
            0.0
        };
        let identity_residual = ((d_p_at - d_p_next) - (f + d_q)).abs();
        out.push(ConvergenceRecord {
            t: cur.t,
            f,
            d_p: d_p_at,
            d_q,
            a,
            identity_residual,
        });
        d_p_at = d_p_next;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Exponential,
    Sublinear,
    Undetermined,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Exponential => "exponential",
            Regime::Sublinear => "sublinear",
            Regime::Undetermined => "undetermined",
        }
    }
}

/// Outcome of fitting a decay model to an optimality-gap series.
#[derive(Debug, Clone)]
pub struct RateFit {
    /// Per-iteration decay factor exp(-slope) of the log-linear fit.
    pub c_hat: f64,
    pub log_linear_r2: f64,
    /// First and last iteration index used.
    pub fit_window: (usize, usize),
    pub regime: Regime,
}

/// Plain least squares on (x, y); returns (slope, r^2). A flat series is a
/// perfect fit of a flat line.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return (0.0, 0.0);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let e = y - (slope * x + intercept);
        ss_res += e * e;
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    (slope, r2)
}

/// Fits decay models to (t, f_t) over the window f_t > epsilon, dropping up
/// to `TRANSIENT_SKIP` leading iterations as transient. Fast channels may
/// leave only a handful of points above epsilon; the transient cut then
/// shrinks so that `MIN_FIT_POINTS` points always survive when the window
/// has them at all.
///
/// The regime is exponential when the log-linear fit gives a decay factor
/// of at least `MIN_EXP_RATE` with r^2 >= 0.9. Otherwise an
/// inverse-polynomial model (log-log fit with negative slope, covering the
/// 1/t family) is tried at the same r^2 bar and declares sublinear.
/// Anything else is undetermined. Fewer than `MIN_FIT_POINTS` points above
/// epsilon is an `InsufficientData` error.
pub fn fit_rate(series: &[(usize, f64)], epsilon: f64) -> Result<RateFit> {
    let above: Vec<(usize, f64)> = series
        .iter()
        .copied()
        .filter(|&(_, f)| f > epsilon)
        .collect();
    if above.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            got: above.len(),
        });
    }
    let skip = TRANSIENT_SKIP.min(above.len() - MIN_FIT_POINTS);
    let t_min = series.first().map_or(0, |&(t, _)| t) + skip;
    let pts: Vec<(usize, f64)> = above.into_iter().filter(|&(t, _)| t >= t_min).collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            got: pts.len(),
        });
    }
    let ts: Vec<f64> = pts.iter().map(|&(t, _)| t as f64).collect();
    let log_f: Vec<f64> = pts.iter().map(|&(_, f)| f.ln()).collect();

    let (slope, log_linear_r2) = linear_fit(&ts, &log_f);
    let c_hat = (-slope).exp();
    let fit_window = (pts[0].0, pts[pts.len() - 1].0);

    let regime = if c_hat >= MIN_EXP_RATE && log_linear_r2 >= MIN_FIT_R2 {
        Regime::Exponential
    } else {
        let log_t: Vec<f64> = ts.iter().map(|&t| t.ln()).collect();
        let (pow_slope, pow_r2) = linear_fit(&log_t, &log_f);
        if pow_slope < 0.0 && pow_r2 >= MIN_FIT_R2 {
            Regime::Sublinear
        } else {
            Regime::Undetermined
        }
    };

    Ok(RateFit {
        c_hat,
        log_linear_r2,
        fit_window,
        regime,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexType {
    /// Positive optimal mass, row divergence equal to the capacity.
    TypeI,
    /// Zero optimal mass with the divergence still tight at the capacity.
    TypeII,
    /// Zero optimal mass and strictly slack divergence.
    TypeIII,
}

impl IndexType {
    pub fn as_str(&self) -> &'static str {
        match self {
            IndexType::TypeI => "TypeI",
            IndexType::TypeII => "TypeII",
            IndexType::TypeIII => "TypeIII",
        }
    }
}

#[derive(Debug, Clone)]
pub struct IndexClassification {
    pub labels: Vec<IndexType>,
    pub tolerance: f64,
}

/// Labels each input symbol by its optimal mass and the divergence of its
/// row from the optimal output mixture. Rows whose divergence cannot be
/// evaluated against q* (mass outside its support) are treated as tight.
pub fn classify_indexes(
    w: &Channel,
    reference: &ReferenceOptimum,
    tolerance: f64,
) -> IndexClassification {
    assert!(tolerance > 0.0, "tolerance must be positive");
    let labels = (0..w.input_size())
        .map(|i| {
            let mass = reference.p_star.get(i);
            let div = row_divergence(w, i, &reference.q_star).unwrap_or(f64::INFINITY);
            if mass > MASS_THRESHOLD {
                IndexType::TypeI
            } else if div >= reference.c_star - tolerance {
                IndexType::TypeII
            } else {
                IndexType::TypeIII
            }
        })
        .collect();
    IndexClassification { labels, tolerance }
}

/// Verdict of the iteration-count check against the two ceilings: the
/// doubly-logarithmic bound K ln(ln m / eps) / ln(c_hat) with K = 10, and
/// the classical ln(m) / eps ceiling. Expects m >= 2 and c_hat > 1.
#[derive(Debug, Clone, Copy)]
pub struct BoundCheck {
    pub passed: bool,
    pub iterations: usize,
    pub loglog_bound: f64,
    pub linear_ceiling: f64,
}

pub fn iteration_bound_check(m: usize, epsilon: f64, iterations: usize, c_hat: f64) -> BoundCheck {
    let log_m = (m as f64).ln();
    let loglog_bound = BOUND_CHECK_K * (log_m / epsilon).ln() / c_hat.ln();
    let linear_ceiling = log_m / epsilon;
    let it = iterations as f64;
    BoundCheck {
        passed: it <= loglog_bound && it <= linear_ceiling,
        iterations,
        loglog_bound,
        linear_ceiling,
    }
}
