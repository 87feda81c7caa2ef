//! Seeded random sparsity patterns for fuzzing and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::CsrGraph;

/// Each off-diagonal entry present independently with probability
/// `density`; the diagonal is always present.
pub fn erdos_renyi(n: usize, density: f64, seed: u64) -> CsrGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = density.clamp(0.0, 1.0);
    let mut entries: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(p) {
                entries.push((i, j));
            }
        }
    }
    CsrGraph::from_entries(n, entries).expect("generated entries are in range")
}

/// Every row gets about `degree` off-diagonal entries at distinct random
/// columns; the diagonal is always present.
pub fn fixed_degree(n: usize, degree: usize, seed: u64) -> CsrGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = degree.min(n.saturating_sub(1));
    let mut entries: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    for i in 0..n {
        for j in rand::seq::index::sample(&mut rng, n, (d + 1).min(n)) {
            if j != i {
                entries.push((i, j));
            }
        }
    }
    CsrGraph::from_entries(n, entries).expect("generated entries are in range")
}

/// Row `i` has entry probability growing linearly from `low` at row 0 to
/// `high` at row `n - 1`, so late rows carry most of the traversal work.
pub fn skewed(n: usize, low: f64, high: f64, seed: u64) -> CsrGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    let span = n.saturating_sub(1).max(1) as f64;
    for i in 0..n {
        let p = (low + (high - low) * i as f64 / span).clamp(0.0, 1.0);
        for j in 0..n {
            if i != j && rng.gen_bool(p) {
                entries.push((i, j));
            }
        }
    }
    CsrGraph::from_entries(n, entries).expect("generated entries are in range")
}
