//! Probability data model: points on the simplex and row-stochastic channels.
//!
//! Both types are validated and canonicalized at construction and immutable
//! afterwards, so every downstream computation can assume well-formed inputs.

use crate::error::{Error, Result};
use crate::numeric::kahan_sum;

/// Inputs this far from a valid simplex point are renormalized; anything
/// farther is rejected.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// A probability distribution over a finite alphabet.
///
/// Entries are non-negative and sum to 1 within 1e-12 after the
/// construction-time renormalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Validates and renormalizes. Entries within `SIMPLEX_TOL` below zero
    /// are clamped to zero; a total within `SIMPLEX_TOL` of 1 is rescaled.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Empty);
        }
        for (i, v) in probs.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    index: i,
                    value: *v,
                });
            }
            if *v < 0.0 {
                if *v < -SIMPLEX_TOL {
                    return Err(Error::NegativeEntry {
                        index: i,
                        value: *v,
                    });
                }
                *v = 0.0;
            }
        }
        let sum = kahan_sum(probs.iter().copied());
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::NotNormalized {
                sum,
                tol: SIMPLEX_TOL,
            });
        }
        for v in probs.iter_mut() {
            *v /= sum;
        }
        Ok(Self { probs })
    }

    /// The uniform distribution over `m` symbols.
    ///
    /// Panics if `m` is zero.
    pub fn uniform(m: usize) -> Self {
        assert!(m > 0, "alphabet size must be positive");
        Self {
            probs: vec![1.0 / m as f64; m],
        }
    }

    /// Point mass on symbol `i` of an `m`-symbol alphabet.
    pub fn point_mass(m: usize, i: usize) -> Self {
        assert!(i < m, "point mass index out of range");
        let mut probs = vec![0.0; m];
        probs[i] = 1.0;
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Indices carrying strictly positive mass.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, _)| i)
    }

    pub fn full_support(&self) -> bool {
        self.probs.iter().all(|&v| v > 0.0)
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.len(), other.len(), "dimension mismatch");
        kahan_sum(
            self.probs
                .iter()
                .zip(other.probs.iter())
                .map(|(a, b)| (a - b).abs()),
        )
    }
}

/// A discrete memoryless channel: an m-by-n row-stochastic matrix whose row
/// `i` is the output distribution given input symbol `i`.
///
/// Construction clamps round-off, renormalizes each row, and drops output
/// columns that no input can ever produce (they contribute nothing and
/// create 0/0 hazards downstream). `column_map` records which original
/// columns survived.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    w: Vec<f64>, // row-major, m x n after canonicalization
    m: usize,
    n: usize,
    column_map: Vec<usize>,
    original_n: usize,
}

impl Channel {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::Empty);
        }
        let m = rows.len();
        let n0 = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n0 {
                return Err(Error::DimensionMismatch {
                    expected: n0,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || !(-SIMPLEX_TOL..=1.0 + SIMPLEX_TOL).contains(&v) {
                    return Err(Error::EntryOutOfRange {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }

        let mut w = Vec::with_capacity(m * n0);
        for (i, row) in rows.iter().enumerate() {
            let clamped: Vec<f64> = row.iter().map(|&v| v.clamp(0.0, 1.0)).collect();
            let sum = kahan_sum(clamped.iter().copied());
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::RowNotNormalized {
                    row: i,
                    sum,
                    tol: SIMPLEX_TOL,
                });
            }
            w.extend(clamped.iter().map(|v| v / sum));
        }

        // Drop columns with no mass from any input.
        let column_map: Vec<usize> = (0..n0)
            .filter(|&j| (0..m).any(|i| w[i * n0 + j] > 0.0))
            .collect();
        let n = column_map.len();
        let w = if n == n0 {
            w
        } else {
            let mut kept = Vec::with_capacity(m * n);
            for i in 0..m {
                for &j in &column_map {
                    kept.push(w[i * n0 + j]);
                }
            }
            kept
        };

        Ok(Self {
            w,
            m,
            n,
            column_map,
            original_n: n0,
        })
    }

    pub fn input_size(&self) -> usize {
        self.m
    }

    /// Output alphabet size after zero columns were dropped.
    pub fn output_size(&self) -> usize {
        self.n
    }

    /// Output alphabet size as supplied at construction.
    pub fn original_output_size(&self) -> usize {
        self.original_n
    }

    /// For each kept column, the index it had before canonicalization.
    pub fn column_map(&self) -> &[usize] {
        &self.column_map
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.w.chunks_exact(self.n)
    }
}
