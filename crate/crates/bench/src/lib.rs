//! Benchmark inputs shared by the criterion benches.

use lpstab_core::zoo::{random_banded, random_walk_operator};
use lpstab_core::IndexedMatrix;

/// A well-conditioned banded matrix of the given size.
pub fn banded(n: usize) -> IndexedMatrix {
    random_banded(n, 2, Some(0.5), 11).expect("valid parameters")
}

pub fn walk(n: usize) -> IndexedMatrix {
    random_walk_operator(n).expect("valid parameters")
}

/// A smooth test function on a window of length `n`.
pub fn smooth(n: usize) -> Vec<f64> {
    (0..n).map(|x| (x as f64 / 9.0).sin() + 0.1).collect()
}
