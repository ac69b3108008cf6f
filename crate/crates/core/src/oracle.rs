//! Independent ground truth for capacities: closed forms for structured
//! channels and an exhaustive simplex-lattice search for small general ones.
//!
//! The grid search exists to validate the solver, not to compete with it,
//! so it is deliberately guarded to desk-scale inputs.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::info::{mutual_information_slices, output_slice};
use crate::prob::{Channel, Distribution};

/// How close an entry must be to a template value for the analytic
/// recognizers to accept it.
const DETECT_TOL: f64 = 1e-12;

/// Error budget declared by the analytic recognizers; covers both round-off
/// and the detection tolerance above.
const ANALYTIC_TOL: f64 = 1e-9;

const GRID_MAX_INPUTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    AnalyticBsc,
    AnalyticIdentity,
    AnalyticDegenerate,
    GridSearch,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Capacity in nats, correct to within `tolerance`.
    pub c_star: f64,
    pub p_star: Distribution,
    pub method: OracleMethod,
    pub tolerance: f64,
}

fn is_permutation(w: &Channel) -> bool {
    let m = w.input_size();
    if w.output_size() != m {
        return false;
    }
    let mut hit = vec![false; m];
    for row in w.rows() {
        let mut one_at = None;
        for (j, &v) in row.iter().enumerate() {
            if (v - 1.0).abs() <= DETECT_TOL {
                if one_at.is_some() {
                    return false;
                }
                one_at = Some(j);
            } else if v.abs() > DETECT_TOL {
                return false;
            }
        }
        match one_at {
            Some(j) if !hit[j] => hit[j] = true,
            _ => return false,
        }
    }
    true
}

fn all_rows_equal(w: &Channel) -> bool {
    let first = w.row(0);
    w.rows()
        .all(|row| row.iter().zip(first).all(|(a, b)| (a - b).abs() <= DETECT_TOL))
}

fn is_binary_symmetric(w: &Channel) -> Option<f64> {
    if w.input_size() != 2 || w.output_size() != 2 {
        return None;
    }
    let (a, b) = (w.entry(0, 0), w.entry(0, 1));
    let (c, d) = (w.entry(1, 0), w.entry(1, 1));
    if (a - d).abs() <= DETECT_TOL && (b - c).abs() <= DETECT_TOL {
        Some(0.5 * (b + c))
    } else {
        None
    }
}

/// Closed-form capacity for recognized channel families: permutations of
/// the noiseless channel (ln m at uniform input), binary symmetric channels
/// (ln 2 + d ln d + (1-d) ln(1-d) at uniform), and channels whose rows are
/// all equal (zero). Returns `None` for anything else.
pub fn analytic_capacity(w: &Channel) -> Option<OracleResult> {
    let m = w.input_size();
    if is_permutation(w) {
        return Some(OracleResult {
            c_star: (m as f64).ln(),
            p_star: Distribution::uniform(m),
            method: OracleMethod::AnalyticIdentity,
            tolerance: ANALYTIC_TOL,
        });
    }
    if all_rows_equal(w) {
        return Some(OracleResult {
            c_star: 0.0,
            p_star: Distribution::uniform(m),
            method: OracleMethod::AnalyticDegenerate,
            tolerance: ANALYTIC_TOL,
        });
    }
    if let Some(delta) = is_binary_symmetric(w) {
        let h = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
        return Some(OracleResult {
            c_star: std::f64::consts::LN_2 + h(delta) + h(1.0 - delta),
            p_star: Distribution::uniform(2),
            method: OracleMethod::AnalyticBsc,
            tolerance: ANALYTIC_TOL,
        });
    }
    None
}

/// Crude but sound bound on how fast mutual information can move per unit
/// of input mass: max |ln w_ij| over supported entries, plus ln m.
fn lipschitz_bound(w: &Channel) -> f64 {
    let max_log = w
        .rows()
        .flatten()
        .filter(|&&v| v > 0.0)
        .map(|&v| v.ln().abs())
        .fold(0.0f64, f64::max);
    max_log + (w.input_size() as f64).ln()
}

/// Candidate lattice point: integer masses summing to the denominator.
#[derive(Debug, Clone, PartialEq)]
struct Incumbent {
    value: f64,
    counts: Vec<usize>,
}

impl Incumbent {
    /// Total order: larger value wins, exact ties go to the
    /// lexicographically smallest count vector. This keeps the reduction
    /// deterministic under any partitioning of the lattice.
    fn better_than(&self, other: &Self) -> bool {
        self.value > other.value || (self.value == other.value && self.counts < other.counts)
    }

    fn merge(self, other: Self) -> Self {
        if other.better_than(&self) {
            other
        } else {
            self
        }
    }
}

fn eval_counts(counts: &[usize], denom: usize, w: &Channel) -> f64 {
    let inv = 1.0 / denom as f64;
    let p: Vec<f64> = counts.iter().map(|&c| c as f64 * inv).collect();
    let q = output_slice(&p, w);
    mutual_information_slices(&p, w, &q)
}

/// Walk every composition of `total` into `counts.len() - fixed` remaining
/// slots, calling `visit` on each completed vector.
fn for_each_composition(
    counts: &mut Vec<usize>,
    slot: usize,
    remaining: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    let slots = counts.len();
    if slot == slots - 1 {
        counts[slot] = remaining;
        visit(counts);
        return;
    }
    for c in 0..=remaining {
        counts[slot] = c;
        for_each_composition(counts, slot + 1, remaining - c, visit);
    }
}

/// Exhaustive search over the simplex lattice of spacing ~`resolution`,
/// followed by `refine_rounds` local refinements that shrink the spacing
/// tenfold around the incumbent each round.
///
/// Guarded to at most four input symbols; the lattice grows combinatorially
/// and this oracle exists for desk-scale verification only. The reported
/// tolerance is m * (final spacing) * L for the Lipschitz bound L above,
/// which is conservative.
pub fn grid_search_capacity(
    w: &Channel,
    resolution: f64,
    refine_rounds: usize,
) -> Result<OracleResult> {
    let m = w.input_size();
    if m > GRID_MAX_INPUTS {
        return Err(Error::DimensionGuard {
            max: GRID_MAX_INPUTS,
            got: m,
        });
    }
    if !(resolution > 0.0 && resolution <= 0.1) {
        return Err(Error::ResolutionOutOfRange(resolution));
    }

    let mut denom = (1.0 / resolution).ceil() as usize;

    // Base lattice, parallel over the first coordinate.
    let mut best = (0..=denom)
        .into_par_iter()
        .map(|c0| {
            let mut counts = vec![0usize; m];
            counts[0] = c0;
            let mut local: Option<Incumbent> = None;
            if m == 1 {
                if c0 == denom {
                    local = Some(Incumbent {
                        value: eval_counts(&counts, denom, w),
                        counts: counts.clone(),
                    });
                }
            } else {
                for_each_composition(&mut counts, 1, denom - c0, &mut |full| {
                    let cand = Incumbent {
                        value: eval_counts(full, denom, w),
                        counts: full.to_vec(),
                    };
                    local = Some(match local.take() {
                        Some(cur) => cur.merge(cand),
                        None => cand,
                    });
                });
            }
            local
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some(x), Some(y)) => Some(x.merge(y)),
                (x, None) => x,
                (None, y) => y,
            },
        )
        .expect("lattice is never empty");

    // Local refinement: spacing / 10 per round, window of one old cell
    // around the incumbent. The incumbent itself stays in the window, so
    // the value never regresses.
    for _ in 0..refine_rounds {
        let new_denom = denom * 10;
        let center: Vec<usize> = best.counts.iter().map(|&c| c * 10).collect();
        let lo: Vec<usize> = center.iter().map(|&c| c.saturating_sub(10)).collect();
        let hi: Vec<usize> = center.iter().map(|&c| (c + 10).min(new_denom)).collect();

        let mut refined = Incumbent {
            value: eval_counts(&center, new_denom, w),
            counts: center.clone(),
        };
        let mut counts = vec![0usize; m];
        refine_window(
            &mut counts,
            0,
            new_denom,
            &lo,
            &hi,
            &mut |full: &[usize]| {
                let cand = Incumbent {
                    value: eval_counts(full, new_denom, w),
                    counts: full.to_vec(),
                };
                if cand.better_than(&refined) {
                    refined = cand;
                }
            },
        );
        best = refined;
        denom = new_denom;
    }

    let spacing = 1.0 / denom as f64;
    let tolerance = m as f64 * spacing * lipschitz_bound(w);
    let p_star = Distribution::new(
        best.counts
            .iter()
            .map(|&c| c as f64 / denom as f64)
            .collect(),
    )?;
    Ok(OracleResult {
        c_star: best.value,
        p_star,
        method: OracleMethod::GridSearch,
        tolerance,
    })
}

fn refine_window(
    counts: &mut Vec<usize>,
    slot: usize,
    remaining: usize,
    lo: &[usize],
    hi: &[usize],
    visit: &mut impl FnMut(&[usize]),
) {
    let slots = counts.len();
    if slot == slots - 1 {
        if remaining >= lo[slot] && remaining <= hi[slot] {
            counts[slot] = remaining;
            visit(counts);
        }
        return;
    }
    for c in lo[slot]..=hi[slot].min(remaining) {
        counts[slot] = c;
        refine_window(counts, slot + 1, remaining - c, lo, hi, visit);
    }
}
