//! Zipf content popularity and the PopC / RndC / NonC placement strategies.
//!
//! Content indices are 1-based throughout the public surface, matching the
//! usual popularity-rank convention; RRH indices are 0-based.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::scalar::{real, Real};

/// Zipf popularity over `L` contents, nonincreasing in the content index.
#[derive(Debug, Clone)]
pub struct Popularity<T> {
    pub eta: T,
    /// `p[l-1]` is the request probability of content `l`.
    pub p: Vec<T>,
}

/// `p_l = l^-eta / sum_k k^-eta`.
pub fn zipf<T: Real>(l_count: usize, eta: T) -> Popularity<T> {
    assert!(l_count >= 1, "need at least one content");
    let raw: Vec<T> = (1..=l_count)
        .map(|l| real::<T>(l as f64).powf(-eta))
        .collect();
    let norm: T = raw.iter().copied().sum();
    Popularity {
        eta,
        p: raw.into_iter().map(|v| v / norm).collect(),
    }
}

impl<T: Real> Popularity<T> {
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Inverse-CDF draw from a uniform in `[0, 1)`; monotone in `u`.
    pub fn index_for(&self, u: T) -> usize {
        let mut acc = T::zero();
        for (i, &p) in self.p.iter().enumerate() {
            acc = acc + p;
            if u < acc {
                return i + 1;
            }
        }
        self.p.len()
    }
}

/// Draw a requested content index (1-based), deterministic per seed.
pub fn sample_request<T: Real>(pop: &Popularity<T>, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_request_with(pop, &mut rng)
}

pub fn sample_request_with<T: Real, R: Rng>(pop: &Popularity<T>, rng: &mut R) -> usize {
    pop.index_for(real(rng.gen::<f64>()))
}

/// Boolean content-to-RRH placement; every constructor respects the storage
/// budget `capacity = floor(F_n / Q)` per RRH.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CachePlacement {
    c: Vec<Vec<bool>>,
}

impl CachePlacement {
    /// Builds a placement from explicit per-RRH rows (row `n`, entry `l-1`
    /// marks content `l` as cached). The caller owns any storage budget.
    pub fn from_rows(c: Vec<Vec<bool>>) -> Self {
        let width = c.first().map_or(0, Vec::len);
        assert!(c.iter().all(|row| row.len() == width), "ragged placement");
        Self { c }
    }

    pub fn n_rrh(&self) -> usize {
        self.c.len()
    }

    pub fn n_contents(&self) -> usize {
        self.c.first().map_or(0, Vec::len)
    }

    /// Is content `l` (1-based) cached at RRH `n`?
    pub fn cached(&self, rrh: usize, content: usize) -> bool {
        self.c[rrh][content - 1]
    }

    pub fn cached_count(&self, rrh: usize) -> usize {
        self.c[rrh].iter().filter(|&&b| b).count()
    }

    /// JSON form: one array of cached 1-based indices per RRH.
    pub fn to_json(&self) -> serde_json::Value {
        let lists: Vec<Vec<usize>> = self
            .c
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &b)| b)
                    .map(|(i, _)| i + 1)
                    .collect()
            })
            .collect();
        serde_json::json!(lists)
    }
}

fn capacity<T: Real>(storage: T, content_size: T, l_count: usize) -> usize {
    assert!(content_size > T::zero(), "content size must be positive");
    assert!(storage >= T::zero(), "storage must be nonnegative");
    (storage / content_size)
        .floor()
        .to_usize()
        .unwrap_or(l_count)
        .min(l_count)
}

/// PopC: every RRH caches the most popular contents until storage is full.
pub fn place_popc<T: Real>(
    l_count: usize,
    storage: T,
    content_size: T,
    n_rrh: usize,
) -> CachePlacement {
    let k = capacity(storage, content_size, l_count);
    let row: Vec<bool> = (0..l_count).map(|i| i < k).collect();
    CachePlacement {
        c: vec![row; n_rrh],
    }
}

/// RndC: each RRH caches a uniformly random storage-sized subset, drawn
/// independently per RRH; deterministic given the seed.
pub fn place_rndc<T: Real>(
    l_count: usize,
    storage: T,
    content_size: T,
    n_rrh: usize,
    seed: u64,
) -> CachePlacement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    place_rndc_with(l_count, storage, content_size, n_rrh, &mut rng)
}

pub fn place_rndc_with<T: Real, R: Rng>(
    l_count: usize,
    storage: T,
    content_size: T,
    n_rrh: usize,
    rng: &mut R,
) -> CachePlacement {
    let k = capacity(storage, content_size, l_count);
    let c = (0..n_rrh)
        .map(|_| {
            let mut indices: Vec<usize> = (0..l_count).collect();
            indices.shuffle(rng);
            let mut row = vec![false; l_count];
            for &i in indices.iter().take(k) {
                row[i] = true;
            }
            row
        })
        .collect();
    CachePlacement { c }
}

/// NonC: no storage at the RRHs, nothing cached.
pub fn place_nonc(n_rrh: usize, l_count: usize) -> CachePlacement {
    CachePlacement {
        c: vec![vec![false; l_count]; n_rrh],
    }
}

/// Expected fraction of requests an RRH misses: `sum_l p_l (1 - c_{n,l})`.
pub fn miss_probability<T: Real>(pop: &Popularity<T>, placement: &CachePlacement, rrh: usize) -> T {
    pop.p
        .iter()
        .enumerate()
        .filter(|(i, _)| !placement.cached(rrh, i + 1))
        .map(|(_, &p)| p)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zipf_values() {
        let pop = zipf::<f64>(15, 1.0);
        // oracle: p_1 = 1 / H_15
        let h15: f64 = (1..=15).map(|l| 1.0 / l as f64).sum();
        assert_abs_diff_eq!(pop.p[0], 1.0 / h15, epsilon = 1e-12);
        assert_abs_diff_eq!(pop.p[0], 0.30137, epsilon = 1e-4);

        let flat = zipf::<f64>(15, 0.0);
        for &p in &flat.p {
            assert_abs_diff_eq!(p, 1.0 / 15.0, epsilon = 1e-12);
        }
        let single = zipf::<f64>(1, 2.0);
        assert_eq!(single.p, vec![1.0]);
    }

    #[test]
    fn zipf_normalized_and_monotone() {
        for eta in [0.0, 0.5, 1.0, 2.5] {
            let pop = zipf::<f64>(40, eta);
            let total: f64 = pop.p.iter().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            assert!(pop.p.windows(2).all(|w| w[0] >= w[1] - 1e-15));
            assert!(pop.p.iter().all(|&p| p > 0.0 && p < 1.0 || pop.len() == 1));
        }
    }

    #[test]
    fn popc_matches_reported_placement() {
        // Table-1 values: both RRHs cache contents 1..=5
        let c = place_popc(15, 5.0, 1.0, 2);
        for n in 0..2 {
            for l in 1..=15 {
                assert_eq!(c.cached(n, l), l <= 5);
            }
        }
        assert_eq!(place_popc(15, 0.0, 1.0, 2).cached_count(0), 0);
        assert_eq!(place_popc(15, 15.0, 1.0, 2).cached_count(1), 15);
    }

    #[test]
    fn rndc_deterministic_and_budgeted() {
        let a = place_rndc(15, 5.0, 1.0, 2, 42);
        let b = place_rndc(15, 5.0, 1.0, 2, 42);
        assert_eq!(a, b);
        assert_ne!(a, place_rndc(15, 5.0, 1.0, 2, 43));
        assert_eq!(a.cached_count(0), 5);
        assert_eq!(a.cached_count(1), 5);
        let full = place_rndc(15, 15.0, 1.0, 2, 9);
        assert_eq!(full.cached_count(0), 15);
    }

    #[test]
    fn rndc_marginal_frequency() {
        // oracle: Monte-Carlo estimate of the per-content cache frequency
        let trials = 10_000;
        let mut hits = vec![0usize; 15];
        for seed in 0..trials {
            let c = place_rndc(15, 5.0, 1.0, 1, seed);
            for l in 1..=15 {
                if c.cached(0, l) {
                    hits[l - 1] += 1;
                }
            }
        }
        for &h in &hits {
            let freq = h as f64 / trials as f64;
            assert_abs_diff_eq!(freq, 5.0 / 15.0, epsilon = 0.02);
        }
    }

    #[test]
    fn nonc_is_empty() {
        let c = place_nonc(2, 15);
        assert_eq!(c.cached_count(0) + c.cached_count(1), 0);
    }

    #[test]
    fn request_sampling() {
        let sure = Popularity {
            eta: 1.0,
            p: vec![1.0],
        };
        assert_eq!(sample_request(&sure, 5), 1);

        let pop = zipf::<f64>(15, 1.0);
        assert_eq!(sample_request(&pop, 11), sample_request(&pop, 11));

        // oracle: Monte-Carlo frequency under the uniform distribution
        let flat = zipf::<f64>(10, 0.0);
        let mut counts = vec![0usize; 10];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let draws = 100_000;
        for _ in 0..draws {
            counts[sample_request_with(&flat, &mut rng) - 1] += 1;
        }
        for &c in &counts {
            assert_abs_diff_eq!(c as f64 / draws as f64, 0.1, epsilon = 0.01);
        }
    }

    #[test]
    fn popc_minimizes_expected_miss() {
        // exhaustive enumeration at L = 6, budget 3
        let pop = zipf::<f64>(6, 1.3);
        let popc = place_popc(6, 3.0, 1.0, 1);
        let popc_miss = miss_probability(&pop, &popc, 0);
        for mask in 0u32..64 {
            if mask.count_ones() != 3 {
                continue;
            }
            let row: Vec<bool> = (0..6).map(|i| mask & (1 << i) != 0).collect();
            let cand = CachePlacement { c: vec![row] };
            assert!(miss_probability(&pop, &cand, 0) >= popc_miss - 1e-12);
        }
    }

    #[test]
    fn placement_json_lists_indices() {
        let c = place_popc(5, 2.0, 1.0, 2);
        assert_eq!(c.to_json(), serde_json::json!([[1, 2], [1, 2]]));
    }
}
