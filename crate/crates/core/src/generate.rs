//! Deterministic channel and distribution generators.
//!
//! Randomness comes from ChaCha8 seeded with a caller-supplied 64-bit value
//! (`ChaCha8Rng::seed_from_u64`), so every generated object is reproducible
//! from its seed alone. Random rows are drawn uniformly from the simplex
//! (symmetric Dirichlet with concentration 1, via normalized exponentials).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::prob::{Channel, Distribution};

fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Strictly positive unit-rate exponential sample.
fn exp_sample<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen();
        let e = -(1.0 - u).ln();
        if e > 0.0 {
            return e;
        }
    }
}

fn dirichlet_row<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| exp_sample(rng)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// The noiseless m-by-m channel.
pub fn identity(m: usize) -> Channel {
    assert!(m > 0);
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row = vec![0.0; m];
            row[i] = 1.0;
            row
        })
        .collect();
    Channel::from_rows(&rows).expect("identity rows are stochastic")
}

/// Binary symmetric channel with crossover probability `delta`.
pub fn bsc(delta: f64) -> Channel {
    assert!((0.0..=1.0).contains(&delta), "crossover outside [0, 1]");
    Channel::from_rows(&[vec![1.0 - delta, delta], vec![delta, 1.0 - delta]])
        .expect("bsc rows are stochastic")
}

/// m-by-n channel with rows drawn uniformly from the output simplex.
pub fn random_channel(m: usize, n: usize, seed: u64) -> Channel {
    let mut rng = rng_from(seed);
    random_channel_with_rng(&mut rng, m, n)
}

/// Same as [`random_channel`] but drawing from a caller-owned stream, for
/// ensembles that derive several objects from one seed.
pub fn random_channel_with_rng<R: Rng>(rng: &mut R, m: usize, n: usize) -> Channel {
    assert!(m > 0 && n > 0);
    let rows: Vec<Vec<f64>> = (0..m).map(|_| dirichlet_row(rng, n)).collect();
    Channel::from_rows(&rows).expect("sampled rows are stochastic")
}

/// A random point in the interior of the input simplex.
pub fn random_interior(m: usize, seed: u64) -> Distribution {
    assert!(m > 0);
    let mut rng = rng_from(seed);
    Distribution::new(dirichlet_row(&mut rng, m)).expect("sampled row is a distribution")
}

/// Random (m-1)-by-n base channel with its first row appended again as row
/// m-1, so the duplicate pair shares one optimal mass that can be split
/// arbitrarily between them.
pub fn dup_row(m: usize, n: usize, seed: u64) -> Channel {
    assert!(m >= 2, "need at least one row to duplicate");
    let mut rng = rng_from(seed);
    let mut rows: Vec<Vec<f64>> = (0..m - 1).map(|_| dirichlet_row(&mut rng, n)).collect();
    rows.push(rows[0].clone());
    Channel::from_rows(&rows).expect("sampled rows are stochastic")
}

/// A three-input channel whose unique optimum puts zero mass on the third
/// symbol while that symbol's row divergence equals the capacity exactly.
///
/// Rows one and two mirror each other over a symmetric output alphabet, so
/// the optimum is (1/2, 1/2, 0) with output mixture (0.4, 0.2, 0.4). The
/// third row (s, 1-2s, s) is tuned by bisection until its divergence from
/// that mixture matches the capacity, which makes the third symbol's mass
/// decay harmonically rather than geometrically. Returns the channel with
/// its optimal input.
pub fn boundary_tight_channel() -> (Channel, Distribution) {
    let row_a: [f64; 3] = [0.7, 0.2, 0.1];
    let q_star: [f64; 3] = [0.4, 0.2, 0.4];
    let c_star: f64 = row_a
        .iter()
        .zip(q_star.iter())
        .map(|(&w, &q)| if w > 0.0 { w * (w / q).ln() } else { 0.0 })
        .sum();

    let third_row_gap = |s: f64| -> f64 {
        2.0 * s * (s / 0.4).ln() + (1.0 - 2.0 * s) * ((1.0 - 2.0 * s) / 0.2).ln() - c_star
    };

    // third_row_gap is positive at 0.2 and negative at 0.3
    let (mut lo, mut hi) = (0.2, 0.3);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if third_row_gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);

    let w = Channel::from_rows(&[
        row_a.to_vec(),
        vec![0.1, 0.2, 0.7],
        vec![s, 1.0 - 2.0 * s, s],
    ])
    .expect("constructed rows are stochastic");
    let p_star = Distribution::new(vec![0.5, 0.5, 0.0]).expect("valid optimum");
    (w, p_star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::{output_distribution, row_divergence};

    #[test]
    fn generators_are_reproducible() {
        let a = random_channel(3, 4, 9);
        let b = random_channel(3, 4, 9);
        assert_eq!(a, b);
        let c = random_channel(3, 4, 10);
        assert_ne!(a, c);

        let p = random_interior(5, 1);
        assert_eq!(p, random_interior(5, 1));
        assert!(p.full_support());
    }

    #[test]
    fn random_rows_are_interior() {
        let w = random_channel(6, 7, 123);
        for row in w.rows() {
            assert!(row.iter().all(|&v| v > 0.0));
        }
        assert_eq!(w.output_size(), 7);
    }

    #[test]
    fn dup_row_repeats_first_row() {
        let w = dup_row(4, 3, 2);
        assert_eq!(w.row(0), w.row(3));
    }

    #[test]
    fn boundary_tight_row_divergence_matches_capacity() {
        let (w, p_star) = boundary_tight_channel();
        let q_star = output_distribution(&p_star, &w).unwrap();
        let c1 = row_divergence(&w, 0, &q_star).unwrap();
        let c2 = row_divergence(&w, 1, &q_star).unwrap();
        let c3 = row_divergence(&w, 2, &q_star).unwrap();
        // bisection target computed independently in 50-digit precision
        assert!((c1 - 0.2531016154428068).abs() < 1e-12);
        assert!((c1 - c2).abs() < 1e-12);
        assert!((c3 - c1).abs() < 1e-12);
        assert!((w.entry(2, 0) - 0.23951237063479605).abs() < 1e-12);
    }
}
