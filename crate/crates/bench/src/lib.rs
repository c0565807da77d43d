//! Fixtures shared by the benchmarks.

use std::collections::BTreeMap;

use num_complex::Complex64;
use treeshift::{Profile, SparseVector, TreeKind, TreeSpec, VertexAddress, WeightSpec};

/// Unrooted tree with arity pattern `2, 1, 3` and a few exceptional vertices.
pub fn irregular_tree() -> TreeSpec {
    TreeSpec::new(
        TreeKind::Unrooted,
        Profile::periodic(vec![2, 1, 3]).expect("nonempty period"),
        BTreeMap::from([
            (VertexAddress::new(1, vec![1, 0]), 4),
            (VertexAddress::new(0, vec![1]), 1),
        ]),
        BTreeMap::from([(3, 1)]),
    )
    .expect("valid tree")
}

pub fn irregular_weights() -> WeightSpec {
    WeightSpec::per_generation(
        Profile::periodic(vec![Complex64::new(0.7, 0.1), Complex64::new(1.3, 0.0)])
            .expect("nonempty period"),
    )
    .and_then(|w| w.with_override(VertexAddress::new(1, vec![1, 0, 3]), 2.5))
    .expect("valid weights")
}

/// Every vertex `depth` levels below the anchor of `tree`, with unit entries.
pub fn level_vector(tree: &TreeSpec, depth: usize) -> SparseVector {
    let level = tree
        .descendants_at(&VertexAddress::anchor(), depth, 1 << 20)
        .expect("small level");
    SparseVector::from_entries(level.into_iter().map(|u| (u, Complex64::new(1.0, 0.0))))
}
