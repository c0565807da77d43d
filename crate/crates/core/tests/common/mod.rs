//! Random desk-scale instances shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use treeshift::{Profile, Scalar, TreeKind, TreeSpec, VertexAddress, WeightSpec};

pub fn random_profile<R: Rng>(rng: &mut R, rooted: bool) -> Profile<u32> {
    let period = (0..rng.gen_range(1..=3))
        .map(|_| rng.gen_range(1..=3))
        .collect();
    let mut explicit = BTreeMap::new();
    for _ in 0..rng.gen_range(0..=2) {
        let g = if rooted {
            rng.gen_range(0..=3)
        } else {
            rng.gen_range(-3..=3)
        };
        explicit.insert(g, rng.gen_range(1..=3));
    }
    let mut profile = Profile::new(explicit, period, vec![]).unwrap();
    if !rooted {
        match rng.gen_range(0..3) {
            0 => profile = profile.with_left_period(vec![1]),
            1 => {
                let left = (0..rng.gen_range(1..=2))
                    .map(|_| rng.gen_range(1..=2))
                    .collect();
                profile = profile.with_left_period(left);
            }
            _ => {}
        }
    }
    profile
}

/// A vertex reached by climbing at most `max_up` spine steps and descending
/// at most `max_down` random slots.
pub fn random_vertex<R: Rng>(
    rng: &mut R,
    tree: &TreeSpec,
    max_up: u64,
    max_down: usize,
) -> VertexAddress {
    let up = if tree.is_rooted() {
        0
    } else {
        rng.gen_range(0..=max_up)
    };
    let mut v = VertexAddress::spine(up);
    for _ in 0..rng.gen_range(0..=max_down) {
        let children = tree.children_of(&v);
        v = children[rng.gen_range(0..children.len())].clone();
    }
    v
}

pub fn random_tree<R: Rng>(rng: &mut R) -> TreeSpec {
    let rooted = rng.gen_bool(0.5);
    let kind = if rooted {
        TreeKind::Rooted
    } else {
        TreeKind::Unrooted
    };
    loop {
        let arity = random_profile(rng, rooted);
        let mut spine = BTreeMap::new();
        if !rooted && rng.gen_bool(0.5) {
            let k = rng.gen_range(1..=4u64);
            let a = arity.at(-(k as i64));
            spine.insert(k, rng.gen_range(0..a));
        }
        let Ok(mut tree) = TreeSpec::new(kind, arity.clone(), BTreeMap::new(), spine.clone())
        else {
            continue;
        };
        let mut overrides = BTreeMap::new();
        for _ in 0..rng.gen_range(0..=2) {
            let v = random_vertex(rng, &tree, 3, 3);
            overrides.insert(v, rng.gen_range(1..=4));
            match TreeSpec::new(kind, arity.clone(), overrides.clone(), spine.clone()) {
                Ok(t) => tree = t,
                Err(_) => {
                    overrides = tree.overrides().clone();
                }
            }
        }
        return tree;
    }
}

pub fn random_scalar<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Scalar {
    let r = rng.gen_range(lo..hi);
    if rng.gen_bool(0.5) {
        Scalar::new(if rng.gen_bool(0.5) { r } else { -r }, 0.0)
    } else {
        Scalar::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
    }
}

pub fn random_weights<R: Rng>(rng: &mut R, tree: &TreeSpec) -> WeightSpec {
    let mut w = if rng.gen_bool(0.4) {
        WeightSpec::constant(random_scalar(rng, 0.3, 2.0)).unwrap()
    } else {
        let period = (0..rng.gen_range(1..=3))
            .map(|_| random_scalar(rng, 0.3, 2.0))
            .collect();
        let mut p = Profile::new(BTreeMap::new(), period, vec![]).unwrap();
        if rng.gen_bool(0.3) {
            p = p.with_explicit(rng.gen_range(-2..=2), random_scalar(rng, 0.3, 2.0));
        }
        if !tree.is_rooted() && rng.gen_bool(0.3) {
            p = p.with_left_period(vec![random_scalar(rng, 0.3, 2.0)]);
        }
        WeightSpec::per_generation(p).unwrap()
    };
    for _ in 0..rng.gen_range(0..=2) {
        let v = random_vertex(rng, tree, 3, 3);
        w = w.with_override(v, random_scalar(rng, 0.3, 2.0)).unwrap();
    }
    w
}
