//! Shared fixtures for the benchmarks.

use soslift_core::instances::{sample_goe, sample_regular_graph, RegularGraph};
use soslift_core::seeds::{default_sk_k, seed_sk};
use soslift_core::Degree2Solution;

/// SK seed on a GOE instance of size n.
pub fn sk_seed(n: usize, seed: u64) -> Degree2Solution {
    let g = sample_goe(n, seed).expect("n > 0");
    seed_sk(&g, default_sk_k(n), None).expect("SK seed").0
}

pub fn regular_graph(n: usize, d: usize, seed: u64) -> RegularGraph {
    sample_regular_graph(n, d, seed).expect("n·d even and d < n")
}
