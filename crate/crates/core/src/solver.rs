//! The Arimoto-Blahut iteration with computable stopping bounds.
//!
//! Each step reweights the input distribution by the exponentiated
//! divergence of its channel row from the current output mixture:
//!
//! ```text
//! p'_i = p_i exp(D_i) / sum_l p_l exp(D_l),   D_i = D(W^i || pW)
//! ```
//!
//! The same pass yields a non-decreasing capacity lower bound
//! `ln sum_i p_i exp(D_i)` and the upper bound `max_i D_i`, whose gap is the
//! stopping criterion: the true capacity always lies in between, so a gap of
//! at most epsilon certifies an epsilon-accurate estimate. All exponent work
//! is done in log space with a max shift, so rows arbitrarily close to point
//! masses stay in range.

use crate::error::{Error, Result};
use crate::generate;
use crate::info::{output_slice, row_divergence_or_inf};
use crate::numeric::log_sum_exp;
use crate::prob::{Channel, Distribution};

/// Iterates with entries below this are floored to zero and the distribution
/// renormalized; decaying zero-mass symbols would otherwise underflow.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

/// Starting point for the iteration. Anything other than a full-support
/// start can lock symbols out of the optimum, so custom starts are checked.
#[derive(Debug, Clone)]
pub enum Init {
    Uniform,
    Custom(Distribution),
    SeededInterior(u64),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Target additive accuracy of the capacity estimate, in nats.
    pub epsilon: f64,
    /// Cap on the number of capacity evaluations.
    pub max_iters: usize,
    pub init: Init,
    pub record_trace: bool,
    /// Ignore the gap test and run to `max_iters`.
    pub long_horizon: bool,
}

impl SolverConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            max_iters: 1_000_000,
            init: Init::Uniform,
            record_trace: false,
            long_horizon: false,
        }
    }
}

/// Snapshot of iteration `t`: the iterate, its output mixture, and the
/// capacity bracket computed from it. `c_lower` is the estimate the step
/// out of `p` produces, stored at the index of the `p` that produced it.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub t: usize,
    pub p: Distribution,
    pub q: Distribution,
    pub c_lower: f64,
    pub c_upper: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GapBelowEpsilon,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub p_final: Distribution,
    /// Capacity estimate in nats; equals `c_lower` of the final record.
    pub capacity_estimate: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub trace: Option<Vec<IterationRecord>>,
}

struct StepEval {
    q: Vec<f64>,
    c_lower: f64,
    c_upper: f64,
    gap: f64,
    next: Vec<f64>,
}

fn evaluate(p: &[f64], w: &Channel) -> StepEval {
    let m = w.input_size();
    let q = output_slice(p, w);
    // per-row divergence from q; +infinity only possible off support
    let mut div = Vec::with_capacity(m);
    for row in w.rows() {
        div.push(row_divergence_or_inf(row, &q));
    }
    let c_upper = div.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    // Log-weights of the update on the support; the normalizer is exactly
    // the capacity lower bound.
    let log_weights: Vec<f64> = (0..m)
        .filter(|&i| p[i] > 0.0)
        .map(|i| p[i].ln() + div[i])
        .collect();
    let c_lower = log_sum_exp(&log_weights);

    let mut next = vec![0.0; m];
    let mut k = 0;
    for i in 0..m {
        if p[i] > 0.0 {
            next[i] = (log_weights[k] - c_lower).exp();
            k += 1;
        }
    }

    StepEval {
        q,
        c_lower,
        c_upper,
        gap: c_upper - c_lower,
        next,
    }
}

fn check_dims(p: &Distribution, w: &Channel) -> Result<()> {
    if p.len() != w.input_size() {
        return Err(Error::DimensionMismatch {
            expected: w.input_size(),
            got: p.len(),
        });
    }
    Ok(())
}

/// One update of the recurrence. Preserves the support of `p`.
pub fn ab_step(p: &Distribution, w: &Channel) -> Result<Distribution> {
    check_dims(p, w)?;
    Distribution::new(evaluate(p.probs(), w).next)
}

/// Capacity lower bound produced by stepping out of `p`:
/// `ln sum_i p_i exp(D_i)`, equal to the alternating-optimization estimate
/// evaluated at the pair (step(p), p).
pub fn approx_capacity(p: &Distribution, w: &Channel) -> Result<f64> {
    check_dims(p, w)?;
    Ok(evaluate(p.probs(), w).c_lower)
}

/// Capacity upper bound `max_i D(W^i || pW)`. Holds for every input
/// distribution; errors only when a zero-mass row escapes the support of
/// the mixture, which cannot happen for full-support `p`.
pub fn capacity_upper_bound(p: &Distribution, w: &Channel) -> Result<f64> {
    check_dims(p, w)?;
    let q = output_slice(p.probs(), w);
    let mut best = f64::NEG_INFINITY;
    for (i, row) in w.rows().enumerate() {
        let d = row_divergence_or_inf(row, &q);
        if d == f64::INFINITY {
            return Err(Error::AbsoluteContinuityViolation { index: i });
        }
        best = best.max(d);
    }
    Ok(best)
}

fn initial_distribution(w: &Channel, cfg: &SolverConfig) -> Result<Distribution> {
    match &cfg.init {
        Init::Uniform => Ok(Distribution::uniform(w.input_size())),
        Init::Custom(d) => {
            check_dims(d, w)?;
            if !d.full_support() {
                return Err(Error::FullSupportRequired);
            }
            Ok(d.clone())
        }
        Init::SeededInterior(seed) => Ok(generate::random_interior(w.input_size(), *seed)),
    }
}

fn floor_tiny(mut probs: Vec<f64>) -> Result<Distribution> {
    for v in probs.iter_mut() {
        if *v > 0.0 && *v < UNDERFLOW_FLOOR {
            *v = 0.0;
        }
    }
    Distribution::new(probs)
}

/// Runs the iteration until the gap certificate reaches `cfg.epsilon` or the
/// iteration cap is hit. Hitting the cap is a reported outcome, not an
/// error. Deterministic given `(w, cfg)`.
pub fn solve(w: &Channel, cfg: &SolverConfig) -> Result<SolveReport> {
    if cfg.epsilon <= 0.0 || cfg.epsilon.is_nan() {
        return Err(Error::NonPositiveEpsilon(cfg.epsilon));
    }
    if cfg.max_iters == 0 {
        return Err(Error::MaxItersZero);
    }

    let mut p = initial_distribution(w, cfg)?;
    let mut trace: Option<Vec<IterationRecord>> = cfg.record_trace.then(Vec::new);
    let mut t = 0usize;

    loop {
        let ev = evaluate(p.probs(), w);
        if let Some(tr) = trace.as_mut() {
            tr.push(IterationRecord {
                t,
                p: p.clone(),
                q: Distribution::new(ev.q.clone())?,
                c_lower: ev.c_lower,
                c_upper: ev.c_upper,
                gap: ev.gap,
            });
        }

        let stop = if !cfg.long_horizon && ev.gap <= cfg.epsilon {
            Some(StopReason::GapBelowEpsilon)
        } else if t + 1 >= cfg.max_iters {
            Some(StopReason::MaxIters)
        } else {
            None
        };

        if let Some(stop_reason) = stop {
            return Ok(SolveReport {
                p_final: p,
                capacity_estimate: ev.c_lower,
                iterations: t + 1,
                stop_reason,
                trace,
            });
        }

        p = floor_tiny(ev.next)?;
        t += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;
    use crate::info::{entropy, mutual_information, output_distribution};
    use crate::numeric::KahanSum;
    use std::f64::consts::LN_2;

    fn dist(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    /// Independent route to the per-iteration capacity estimate: the direct
    /// double sum over the stepped pair, rather than the log-sum-exp closed
    /// form. Kept separate from the solver on purpose.
    fn estimate_from_pair(p_next: &Distribution, p_prev: &Distribution, w: &Channel) -> f64 {
        let q = output_distribution(p_prev, w).unwrap();
        let mut acc = KahanSum::new();
        acc.add(entropy(p_next));
        for (i, row) in w.rows().enumerate() {
            let pn = p_next.get(i);
            if pn > 0.0 {
                for (j, &wij) in row.iter().enumerate() {
                    if wij > 0.0 {
                        acc.add(pn * wij * (p_prev.get(i) * wij / q.get(j)).ln());
                    }
                }
            }
        }
        acc.value()
    }

    #[test]
    fn step_fixes_uniform_on_identity() {
        let w = generate::identity(4);
        let p = Distribution::uniform(4);
        let next = ab_step(&p, &w).unwrap();
        assert!(p.l1_distance(&next) < 1e-15);
    }

    #[test]
    fn step_is_identity_on_equal_rows() {
        let w = Channel::from_rows(&[vec![0.3, 0.7], vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        let p = dist(&[0.2, 0.5, 0.3]);
        let next = ab_step(&p, &w).unwrap();
        assert!(p.l1_distance(&next) < 1e-15);
    }

    #[test]
    fn step_matches_precomputed_bsc_value() {
        // Hand evaluation of the recurrence at p = (0.3, 0.7) on a binary
        // symmetric channel with crossover 0.1, done in 50-digit precision.
        let w = generate::bsc(0.1);
        let p = dist(&[0.3, 0.7]);
        let next = ab_step(&p, &w).unwrap();
        assert!((next.get(0) - 0.42148934011652117).abs() < 1e-12);
        assert!((next.get(1) - 0.5785106598834788).abs() < 1e-12);
        // the map moves toward the symmetric optimum
        assert!(next.get(0) > 0.3);
    }

    #[test]
    fn step_preserves_support() {
        let w = generate::bsc(0.2);
        let p = dist(&[1.0, 0.0]);
        let next = ab_step(&p, &w).unwrap();
        assert_eq!(next.get(1), 0.0);
        assert_eq!(next.get(0), 1.0);
    }

    #[test]
    fn approx_capacity_identity_at_uniform() {
        for m in 2..6 {
            let w = generate::identity(m);
            let c = approx_capacity(&Distribution::uniform(m), &w).unwrap();
            assert!((c - (m as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn approx_capacity_equal_rows_is_zero() {
        let w = Channel::from_rows(&[vec![0.25, 0.75], vec![0.25, 0.75]]).unwrap();
        let c = approx_capacity(&dist(&[0.6, 0.4]), &w).unwrap();
        assert!(c.abs() < 1e-12);
    }

    #[test]
    fn approx_capacity_bsc_fixed_point() {
        let w = generate::bsc(0.1);
        let c = approx_capacity(&Distribution::uniform(2), &w).unwrap();
        assert!((c - 0.3680642071684971).abs() < 1e-12);
    }

    #[test]
    fn approx_capacity_agrees_with_pair_form() {
        // ln sum_i p_i exp(D_i) must equal the double-sum estimate at the
        // stepped pair, within 1e-10.
        let channels = [
            generate::bsc(0.1),
            generate::random_channel(3, 4, 11),
            generate::random_channel(4, 3, 12),
        ];
        for w in &channels {
            let mut p = generate::random_interior(w.input_size(), 99);
            for _ in 0..5 {
                let closed = approx_capacity(&p, w).unwrap();
                let next = ab_step(&p, w).unwrap();
                let direct = estimate_from_pair(&next, &p, w);
                assert!(
                    (closed - direct).abs() < 1e-10,
                    "closed {closed} vs direct {direct}"
                );
                p = next;
            }
        }
    }

    #[test]
    fn upper_bound_identity_and_equal_rows() {
        let w = generate::identity(2);
        let ub = capacity_upper_bound(&Distribution::uniform(2), &w).unwrap();
        assert!((ub - LN_2).abs() < 1e-12);

        let flat = Channel::from_rows(&[vec![0.2, 0.8], vec![0.2, 0.8]]).unwrap();
        let ub = capacity_upper_bound(&dist(&[0.7, 0.3]), &flat).unwrap();
        assert!(ub.abs() < 1e-12);
    }

    #[test]
    fn upper_bound_bsc_dominates_lower_bound() {
        // Both row divergences at p = (0.4, 0.6), evaluated in 50-digit
        // precision beforehand.
        let w = generate::bsc(0.1);
        let p = dist(&[0.4, 0.6]);
        let ub = capacity_upper_bound(&p, &w).unwrap();
        assert!((ub - 0.5101402550869697).abs() < 1e-12);
        let lb = approx_capacity(&p, &w).unwrap();
        assert!((lb - 0.3633276436617396).abs() < 1e-12);
        assert!(ub > lb);
    }

    #[test]
    fn upper_bound_errors_when_row_escapes_support() {
        // p concentrated on row 0 leaves output 1 empty; row 1 then has
        // mass where the mixture has none.
        let w = generate::identity(2);
        let p = dist(&[1.0, 0.0]);
        assert_eq!(
            capacity_upper_bound(&p, &w),
            Err(Error::AbsoluteContinuityViolation { index: 1 })
        );
    }

    #[test]
    fn solve_identity_converges_immediately() {
        let w = generate::identity(4);
        let report = solve(&w, &SolverConfig::new(1e-9)).unwrap();
        assert_eq!(report.iterations, 1);
        assert_eq!(report.stop_reason, StopReason::GapBelowEpsilon);
        assert!((report.capacity_estimate - 4f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn solve_bsc_hits_analytic_capacity() {
        let w = generate::bsc(0.1);
        let report = solve(&w, &SolverConfig::new(1e-8)).unwrap();
        assert_eq!(report.stop_reason, StopReason::GapBelowEpsilon);
        assert!((report.capacity_estimate - 0.3680642071684971).abs() < 1e-8);
    }

    #[test]
    fn solve_reports_max_iters_instead_of_failing() {
        let w = generate::bsc(0.1);
        let cfg = SolverConfig {
            epsilon: 1e-14,
            max_iters: 3,
            init: Init::Custom(dist(&[0.3, 0.7])),
            ..Default::default()
        };
        let report = solve(&w, &cfg).unwrap();
        assert_eq!(report.stop_reason, StopReason::MaxIters);
        assert_eq!(report.iterations, 3);
    }

    #[test]
    fn solve_rejects_bad_config() {
        let w = generate::bsc(0.1);
        assert!(matches!(
            solve(&w, &SolverConfig::new(0.0)),
            Err(Error::NonPositiveEpsilon(_))
        ));
        let cfg = SolverConfig {
            max_iters: 0,
            ..SolverConfig::new(1e-6)
        };
        assert!(matches!(solve(&w, &cfg), Err(Error::MaxItersZero)));
        let cfg = SolverConfig {
            init: Init::Custom(dist(&[1.0, 0.0])),
            ..SolverConfig::new(1e-6)
        };
        assert!(matches!(solve(&w, &cfg), Err(Error::FullSupportRequired)));
    }

    #[test]
    fn trace_invariants_on_bsc() {
        let w = generate::bsc(0.1);
        let cfg = SolverConfig {
            epsilon: 1e-10,
            record_trace: true,
            init: Init::Custom(dist(&[0.3, 0.7])),
            ..Default::default()
        };
        let report = solve(&w, &cfg).unwrap();
        let trace = report.trace.unwrap();
        assert_eq!(trace.len(), report.iterations);
        let mut prev_lower = f64::NEG_INFINITY;
        for rec in &trace {
            // bracket ordering and monotone lower bound
            assert!(rec.c_lower <= rec.c_upper + 1e-9);
            assert!(rec.c_lower >= prev_lower - 1e-11);
            prev_lower = rec.c_lower;
            // interior path stays interior
            assert!(rec.p.min_prob() > 0.0);
            // iterates stay on the simplex without drift
            let sum: f64 = rec.p.probs().iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12);
        }
        let last = trace.last().unwrap();
        assert_eq!(last.c_lower, report.capacity_estimate);
        assert!(last.gap <= 1e-10);
    }

    #[test]
    fn seeded_interior_init_is_reproducible() {
        let w = generate::random_channel(4, 4, 5);
        let cfg = SolverConfig {
            init: Init::SeededInterior(77),
            ..SolverConfig::new(1e-8)
        };
        let a = solve(&w, &cfg).unwrap();
        let b = solve(&w, &cfg).unwrap();
        assert_eq!(a.p_final.probs(), b.p_final.probs());
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn fixed_point_step_implies_tiny_gap() {
        // once the step barely moves, the bracket must be closed
        let channels = [
            generate::bsc(0.1),
            generate::bsc(0.25),
            generate::random_channel(3, 3, 21),
            generate::random_channel(4, 5, 22),
        ];
        for w in &channels {
            let mut p = Distribution::uniform(w.input_size());
            let mut settled = false;
            for _ in 0..200_000 {
                let next = ab_step(&p, w).unwrap();
                if p.l1_distance(&next) <= 1e-14 {
                    settled = true;
                    break;
                }
                p = next;
            }
            assert!(settled, "did not settle");
            let gap = capacity_upper_bound(&p, w).unwrap() - approx_capacity(&p, w).unwrap();
            assert!(gap <= 1e-10, "gap {gap} after settling");
        }
    }

    #[test]
    fn long_horizon_ignores_epsilon_and_keeps_simplex_closure() {
        let w = generate::random_channel(3, 3, 7);
        let cfg = SolverConfig {
            epsilon: 1e-3,
            max_iters: 10_000,
            record_trace: true,
            long_horizon: true,
            ..Default::default()
        };
        let report = solve(&w, &cfg).unwrap();
        assert_eq!(report.stop_reason, StopReason::MaxIters);
        assert_eq!(report.iterations, 10_000);
        for rec in report.trace.unwrap().iter().step_by(499) {
            let sum: f64 = rec.p.probs().iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn capacity_estimate_never_exceeds_mutual_information_maximum() {
        // sandwich check against the exact value on channels where it is known
        for m in 2..6 {
            let w = generate::identity(m);
            let c_star = (m as f64).ln();
            let cfg = SolverConfig {
                epsilon: 1e-9,
                record_trace: true,
                init: Init::SeededInterior(3),
                ..Default::default()
            };
            let report = solve(&w, &cfg).unwrap();
            for rec in report.trace.unwrap() {
                assert!(rec.c_lower <= c_star + 1e-11);
                assert!(rec.c_upper >= c_star - 1e-11);
            }
        }
    }

    #[test]
    fn mutual_information_of_final_iterate_matches_estimate() {
        let w = generate::random_channel(4, 4, 42);
        let report = solve(&w, &SolverConfig::new(1e-10)).unwrap();
        let mi = mutual_information(&report.p_final, &w).unwrap();
        assert!((mi - report.capacity_estimate).abs() < 1e-9);
    }
}
