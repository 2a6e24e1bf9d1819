//! Seeded randomness and categorical sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The simulator's random stream. ChaCha output is platform independent, so
/// a seed fully determines a dialogue.
pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws an index with probability proportional to `weights`. Returns `None`
/// when every weight is zero (or the slice is empty).
pub fn sample_weighted<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().filter(|w| **w > 0.0).sum();
    if total <= 0.0 || !total.is_finite() {
        return None;
    }
    let mut target = rng.gen::<f64>() * total;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        last = Some(i);
        if target < w {
            return Some(i);
        }
        target -= w;
    }
    last
}

/// Uniform draw from a slice.
pub fn choose<'a, T, R: Rng + ?Sized>(items: &'a [T], rng: &mut R) -> Option<&'a T> {
    if items.is_empty() {
        None
    } else {
        Some(&items[rng.gen_range(0..items.len())])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mass_is_none() {
        let mut rng = seeded(1);
        assert_eq!(sample_weighted(&[0.0, 0.0], &mut rng), None);
        assert_eq!(sample_weighted(&[], &mut rng), None);
    }

    #[test]
    fn degenerate_weight_always_wins() {
        let mut rng = seeded(2);
        for _ in 0..200 {
            assert_eq!(sample_weighted(&[0.0, 3.0, 0.0], &mut rng), Some(1));
        }
    }

    #[test]
    fn frequencies_follow_weights() {
        let mut rng = seeded(3);
        let mut hits = [0usize; 3];
        for _ in 0..30_000 {
            hits[sample_weighted(&[1.0, 2.0, 1.0], &mut rng).unwrap()] += 1;
        }
        let mid = hits[1] as f64 / 30_000.0;
        assert!((mid - 0.5).abs() < 0.02, "{mid}");
    }
}
