//! Information-theoretic primitives in nats.
//!
//! Everything here follows the term-wise conventions 0*ln(0) = 0 and
//! 0*ln(0/0) = 0, so zero-mass symbols never contribute. Conversion to bits
//! happens only at reporting boundaries.

use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use crate::prob::{Channel, Distribution};

/// Shannon entropy -sum p_i ln(p_i), in [0, ln m].
pub fn entropy(p: &Distribution) -> f64 {
    let mut acc = KahanSum::new();
    for &v in p.probs() {
        if v > 0.0 {
            acc.add(-v * v.ln());
        }
    }
    acc.value().max(0.0)
}

/// Kullback-Leibler divergence sum p_i ln(p_i / q_i).
///
/// Errors with `AbsoluteContinuityViolation` when some `p_i > 0` meets
/// `q_i = 0`, which signals an infinite divergence.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    kl_slices(p.probs(), q.probs())
}

pub(crate) fn kl_slices(p: &[f64], q: &[f64]) -> Result<f64> {
    let mut acc = KahanSum::new();
    for (i, (&pi, &qi)) in p.iter().zip(q.iter()).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::AbsoluteContinuityViolation { index: i });
            }
            acc.add(pi * (pi / qi).ln());
        }
    }
    // Non-negative by Gibbs' inequality; rounding may leave a tiny negative.
    Ok(acc.value().max(0.0))
}

/// Output distribution q = p W, the column-wise mix of channel rows.
pub fn output_distribution(p: &Distribution, w: &Channel) -> Result<Distribution> {
    if p.len() != w.input_size() {
        return Err(Error::DimensionMismatch {
            expected: w.input_size(),
            got: p.len(),
        });
    }
    Distribution::new(output_slice(p.probs(), w))
}

pub(crate) fn output_slice(p: &[f64], w: &Channel) -> Vec<f64> {
    let n = w.output_size();
    let mut acc = vec![KahanSum::new(); n];
    for (i, row) in w.rows().enumerate() {
        let pi = p[i];
        if pi > 0.0 {
            for (j, &wij) in row.iter().enumerate() {
                acc[j].add(pi * wij);
            }
        }
    }
    acc.into_iter().map(|a| a.value()).collect()
}

/// Divergence of channel row `i` from a reference output distribution:
/// D(W^i || q) = sum_j w_ij ln(w_ij / q_j).
pub fn row_divergence(w: &Channel, i: usize, q: &Distribution) -> Result<f64> {
    if q.len() != w.output_size() {
        return Err(Error::DimensionMismatch {
            expected: w.output_size(),
            got: q.len(),
        });
    }
    kl_slices(w.row(i), q.probs())
}

/// Like `row_divergence` but returns +infinity instead of erroring when the
/// row has mass outside the support of `q`. Used by the solver, where an
/// infinite upper bound is meaningful.
pub(crate) fn row_divergence_or_inf(row: &[f64], q: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for (&wij, &qj) in row.iter().zip(q.iter()) {
        if wij > 0.0 {
            if qj <= 0.0 {
                return f64::INFINITY;
            }
            acc.add(wij * (wij / qj).ln());
        }
    }
    acc.value().max(0.0)
}

/// Mutual information I(p, W) = sum_i p_i D(W^i || pW), in
/// [0, ln(min(m, n))].
///
/// The mixture output always dominates every row with positive input mass,
/// so no divergence here can be infinite.
pub fn mutual_information(p: &Distribution, w: &Channel) -> Result<f64> {
    if p.len() != w.input_size() {
        return Err(Error::DimensionMismatch {
            expected: w.input_size(),
            got: p.len(),
        });
    }
    let q = output_slice(p.probs(), w);
    Ok(mutual_information_slices(p.probs(), w, &q))
}

pub(crate) fn mutual_information_slices(p: &[f64], w: &Channel, q: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for (i, row) in w.rows().enumerate() {
        let pi = p[i];
        if pi > 0.0 {
            acc.add(pi * row_divergence_or_inf(row, q));
        }
    }
    acc.value().max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn dist(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    fn bsc(delta: f64) -> Channel {
        Channel::from_rows(&[vec![1.0 - delta, delta], vec![delta, 1.0 - delta]]).unwrap()
    }

    // Expected values below were computed by direct summation in 50-digit
    // precision and rounded to the nearest f64.

    #[test]
    fn entropy_uniform_two_is_ln2() {
        assert!((entropy(&Distribution::uniform(2)) - LN_2).abs() < 1e-15);
    }

    #[test]
    fn entropy_point_mass_is_zero() {
        assert_eq!(entropy(&dist(&[1.0, 0.0, 0.0])), 0.0);
    }

    #[test]
    fn entropy_skewed_pair() {
        assert!((entropy(&dist(&[0.9, 0.1])) - 0.32508297339144826).abs() < 1e-15);
    }

    #[test]
    fn kl_identical_is_zero() {
        let p = dist(&[0.3, 0.7]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn kl_point_mass_vs_uniform() {
        let p = dist(&[1.0, 0.0]);
        let q = Distribution::uniform(2);
        assert!((kl_divergence(&p, &q).unwrap() - LN_2).abs() < 1e-15);
    }

    #[test]
    fn kl_skewed_vs_uniform() {
        let p = dist(&[0.75, 0.25]);
        let q = Distribution::uniform(2);
        assert!((kl_divergence(&p, &q).unwrap() - 0.13081203594113697).abs() < 1e-15);
    }

    #[test]
    fn kl_unsupported_mass_errors() {
        let p = dist(&[0.5, 0.5]);
        let q = dist(&[1.0, 0.0]);
        assert_eq!(
            kl_divergence(&p, &q),
            Err(Error::AbsoluteContinuityViolation { index: 1 })
        );
    }

    #[test]
    fn kl_dimension_mismatch() {
        let p = Distribution::uniform(2);
        let q = Distribution::uniform(3);
        assert!(matches!(
            kl_divergence(&p, &q),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn output_identity_preserves_uniform() {
        let w =
            Channel::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]])
                .unwrap();
        let q = output_distribution(&Distribution::uniform(3), &w).unwrap();
        for &v in q.probs() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn output_of_equal_rows_is_the_row() {
        let w = Channel::from_rows(&[vec![0.2, 0.8], vec![0.2, 0.8], vec![0.2, 0.8]]).unwrap();
        let q = output_distribution(&dist(&[0.5, 0.3, 0.2]), &w).unwrap();
        assert!((q.get(0) - 0.2).abs() < 1e-15);
        assert!((q.get(1) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn output_hand_product() {
        let q = output_distribution(&dist(&[0.3, 0.7]), &bsc(0.1)).unwrap();
        assert!((q.get(0) - 0.34).abs() < 1e-15);
        assert!((q.get(1) - 0.66).abs() < 1e-15);
    }

    #[test]
    fn row_divergence_point_row_vs_uniform() {
        let w = Channel::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let d = row_divergence(&w, 0, &Distribution::uniform(2)).unwrap();
        assert!((d - LN_2).abs() < 1e-15);
    }

    #[test]
    fn row_divergence_against_itself_is_zero() {
        let w = bsc(0.1);
        let q = dist(&[0.9, 0.1]);
        assert_eq!(row_divergence(&w, 0, &q).unwrap(), 0.0);
    }

    #[test]
    fn row_divergence_bsc_vs_uniform() {
        let d = row_divergence(&bsc(0.1), 0, &Distribution::uniform(2)).unwrap();
        assert!((d - 0.3680642071684971).abs() < 1e-15);
    }

    #[test]
    fn mutual_information_noiseless_at_uniform() {
        let w = Channel::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let mi = mutual_information(&Distribution::uniform(2), &w).unwrap();
        assert!((mi - LN_2).abs() < 1e-15);
    }

    #[test]
    fn mutual_information_useless_channel_is_zero() {
        let w = Channel::from_rows(&[vec![0.4, 0.6], vec![0.4, 0.6]]).unwrap();
        let mi = mutual_information(&dist(&[0.25, 0.75]), &w).unwrap();
        assert!(mi.abs() < 1e-14);
    }

    #[test]
    fn mutual_information_bsc_at_uniform() {
        let mi = mutual_information(&Distribution::uniform(2), &bsc(0.1)).unwrap();
        assert!((mi - 0.3680642071684971).abs() < 1e-14);
    }

    mod properties {
        use super::*;
        use crate::numeric::KahanSum;
        use proptest::prelude::*;

        fn simplex(len: usize) -> impl Strategy<Value = Distribution> {
            prop::collection::vec(0.0f64..10.0, len).prop_map(|mut v| {
                if v.iter().sum::<f64>() == 0.0 {
                    v[0] = 1.0;
                }
                let s: f64 = v.iter().sum();
                Distribution::new(v.into_iter().map(|x| x / s).collect()).unwrap()
            })
        }

        fn simplex_interior(len: usize) -> impl Strategy<Value = Distribution> {
            prop::collection::vec(1e-4f64..10.0, len).prop_map(|v| {
                let s: f64 = v.iter().sum();
                Distribution::new(v.into_iter().map(|x| x / s).collect()).unwrap()
            })
        }

        fn channel(m: usize, n: usize) -> impl Strategy<Value = Channel> {
            prop::collection::vec(prop::collection::vec(1e-4f64..10.0, n), m).prop_map(|rows| {
                let rows: Vec<Vec<f64>> = rows
                    .into_iter()
                    .map(|r| {
                        let s: f64 = r.iter().sum();
                        r.into_iter().map(|x| x / s).collect()
                    })
                    .collect();
                Channel::from_rows(&rows).unwrap()
            })
        }

        /// Straight double sum over (i, j), the displayed form of mutual
        /// information, as an independent route.
        fn mi_double_sum(p: &Distribution, w: &Channel) -> f64 {
            let q = output_distribution(p, w).unwrap();
            let mut acc = KahanSum::new();
            for (i, row) in w.rows().enumerate() {
                let pi = p.get(i);
                if pi > 0.0 {
                    for (j, &wij) in row.iter().enumerate() {
                        if wij > 0.0 {
                            acc.add(pi * wij * (wij / q.get(j)).ln());
                        }
                    }
                }
            }
            acc.value()
        }

        proptest! {
            #[test]
            fn kl_is_nonnegative_and_zero_on_self(
                p in simplex_interior(6),
                q in simplex_interior(6),
            ) {
                let d = kl_divergence(&p, &q).unwrap();
                prop_assert!(d >= 0.0);
                prop_assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
                // separation: a visible gap in one coordinate forces d > 0
                let max_diff = p
                    .probs()
                    .iter()
                    .zip(q.probs())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                if max_diff > 1e-6 {
                    prop_assert!(d > 1e-13);
                }
            }

            #[test]
            fn channel_output_contracts_divergence(
                p in simplex_interior(4),
                r in simplex_interior(4),
                w in channel(4, 5),
            ) {
                let d_in = kl_divergence(&p, &r).unwrap();
                let d_out = kl_divergence(
                    &output_distribution(&p, &w).unwrap(),
                    &output_distribution(&r, &w).unwrap(),
                )
                .unwrap();
                prop_assert!(d_out <= d_in + 1e-12, "in {} out {}", d_in, d_out);
            }

            #[test]
            fn mi_decomposes_over_row_divergences(p in simplex(4), w in channel(4, 3)) {
                let q = output_distribution(&p, &w).unwrap();
                let mut acc = KahanSum::new();
                for i in p.support() {
                    acc.add(p.get(i) * row_divergence(&w, i, &q).unwrap());
                }
                let mi = mutual_information(&p, &w).unwrap();
                prop_assert!((mi - acc.value()).abs() <= 1e-12);
                prop_assert!((mi - mi_double_sum(&p, &w)).abs() <= 1e-12);
            }

            #[test]
            fn entropy_and_mi_stay_in_range(p in simplex(5), w in channel(5, 4)) {
                let h = entropy(&p);
                prop_assert!(h >= 0.0 && h <= 5f64.ln() + 1e-12);
                let mi = mutual_information(&p, &w).unwrap();
                prop_assert!(mi >= 0.0 && mi <= 4f64.ln() + 1e-12);
            }

            #[test]
            fn entropy_and_kl_are_permutation_invariant(
                p in simplex_interior(6),
                q in simplex_interior(6),
                rot in 0usize..6,
                rev in any::<bool>(),
            ) {
                let apply = |d: &Distribution| {
                    let mut v = d.probs().to_vec();
                    v.rotate_left(rot);
                    if rev {
                        v.reverse();
                    }
                    Distribution::new(v).unwrap()
                };
                let (pp, qq) = (apply(&p), apply(&q));
                prop_assert!((entropy(&p) - entropy(&pp)).abs() <= 1e-15);
                let d = kl_divergence(&p, &q).unwrap();
                let dd = kl_divergence(&pp, &qq).unwrap();
                prop_assert!((d - dd).abs() <= 1e-15);
            }
        }
    }
}
