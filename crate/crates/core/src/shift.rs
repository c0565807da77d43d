//! Weights, finitely supported vectors, sequence-space norms and the
//! weighted backward shift `B_λ`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::profile::Profile;
use crate::tree::{TreeSpec, VertexAddress};

pub type Scalar = Complex64;

#[derive(Debug, Clone, PartialEq)]
pub enum WeightMode {
    /// Every weight equals one scalar: the Rolewicz operator `λB`.
    Constant(Scalar),
    /// Symmetric weights `λ_n` shared by a whole generation.
    PerGeneration(Profile<Scalar>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec {
    mode: WeightMode,
    overrides: BTreeMap<VertexAddress, Scalar>,
}

fn check_weight(w: &Scalar) -> Result<()> {
    if !(w.re.is_finite() && w.im.is_finite()) || w.norm_sqr() == 0.0 {
        return Err(Error::InvalidSpec(format!(
            "weights must be finite and nonzero, got {w}"
        )));
    }
    Ok(())
}

impl WeightSpec {
    pub fn new(mode: WeightMode, overrides: BTreeMap<VertexAddress, Scalar>) -> Result<Self> {
        match &mode {
            WeightMode::Constant(c) => check_weight(c)?,
            WeightMode::PerGeneration(p) => p.values().try_for_each(check_weight)?,
        }
        overrides.values().try_for_each(check_weight)?;
        Ok(Self { mode, overrides })
    }

    pub fn constant(lambda: impl Into<Scalar>) -> Result<Self> {
        Self::new(WeightMode::Constant(lambda.into()), BTreeMap::new())
    }

    pub fn per_generation(profile: Profile<Scalar>) -> Result<Self> {
        Self::new(WeightMode::PerGeneration(profile), BTreeMap::new())
    }

    pub fn with_override(mut self, v: VertexAddress, w: impl Into<Scalar>) -> Result<Self> {
        let w = w.into();
        check_weight(&w)?;
        self.overrides.insert(v, w);
        Ok(self)
    }

    /// Checks every override address against `tree`.
    pub fn validate(&self, tree: &TreeSpec) -> Result<()> {
        self.overrides
            .keys()
            .try_for_each(|a| tree.check_address(a))
    }

    pub fn mode(&self) -> &WeightMode {
        &self.mode
    }

    pub fn overrides(&self) -> &BTreeMap<VertexAddress, Scalar> {
        &self.overrides
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.mode, WeightMode::Constant(_)) && self.overrides.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        self.overrides.is_empty()
    }

    pub fn generation_weight(&self, n: i64) -> Scalar {
        match &self.mode {
            WeightMode::Constant(c) => *c,
            WeightMode::PerGeneration(p) => p.at(n),
        }
    }

    /// `|λ_n|` as an eventually periodic profile.
    pub fn magnitude_profile(&self) -> Profile<f64> {
        match &self.mode {
            WeightMode::Constant(c) => Profile::constant(c.norm()),
            WeightMode::PerGeneration(p) => p.map(|w| w.norm()),
        }
    }
}

/// `λ_v`: the override if present, otherwise the generation weight.
pub fn weight_at(v: &VertexAddress, w: &WeightSpec) -> Scalar {
    w.overrides
        .get(v)
        .copied()
        .unwrap_or_else(|| w.generation_weight(v.generation()))
}

/// `λ(v→u)`, the product of the weights along the path from `v` down to `u`.
pub fn path_weight(
    v: &VertexAddress,
    u: &VertexAddress,
    w: &WeightSpec,
    tree: &TreeSpec,
) -> Result<Scalar> {
    let depth = tree
        .depth_below(v, u)
        .ok_or_else(|| Error::NotADescendant {
            ancestor: v.clone(),
            descendant: u.clone(),
        })?;
    let mut product = Scalar::new(1.0, 0.0);
    let mut cur = u.clone();
    for _ in 0..depth {
        product *= weight_at(&cur, w);
        cur = tree.parent_of(&cur)?;
    }
    debug_assert_eq!(&cur, v);
    Ok(product)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpaceSpec {
    L1,
    Lp(f64),
    C0,
}

impl SpaceSpec {
    pub fn lp(p: f64) -> Result<Self> {
        if p.is_finite() && p > 1.0 {
            Ok(SpaceSpec::Lp(p))
        } else {
            Err(Error::InvalidSpec(format!(
                "ℓ^p needs 1 < p < ∞, got {p} (use l1 for p = 1)"
            )))
        }
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceSpec::L1 => write!(f, "l1"),
            SpaceSpec::Lp(p) => write!(f, "lp:{p}"),
            SpaceSpec::C0 => write!(f, "c0"),
        }
    }
}

impl FromStr for SpaceSpec {
    type Err = Error;

    /// Accepts `l1`, `c0`, `lp:P` and the shorthand `lP`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let bad = || Error::InvalidSpec(format!("unknown space {s:?}"));
        match s.as_str() {
            "l1" | "lp:1" => Ok(SpaceSpec::L1),
            "c0" => Ok(SpaceSpec::C0),
            _ => {
                let p = s
                    .strip_prefix("lp:")
                    .or_else(|| s.strip_prefix('l'))
                    .ok_or_else(bad)?;
                SpaceSpec::lp(p.parse().map_err(|_| bad())?)
            }
        }
    }
}

impl serde::Serialize for SpaceSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for SpaceSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A finitely supported sequence over the vertices. Absent entries are zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: BTreeMap<VertexAddress, Scalar>,
}

impl SparseVector {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The unit vector `e_v`.
    pub fn basis(v: VertexAddress) -> Self {
        Self::from_entries([(v, Scalar::new(1.0, 0.0))])
    }

    /// Sums repeated addresses and drops zeros.
    pub fn from_entries(entries: impl IntoIterator<Item = (VertexAddress, Scalar)>) -> Self {
        let mut out = Self::zero();
        for (v, x) in entries {
            out.add_at(v, x);
        }
        out
    }

    pub fn add_at(&mut self, v: VertexAddress, x: Scalar) {
        use std::collections::btree_map::Entry;
        match self.entries.entry(v) {
            Entry::Vacant(e) => {
                if x.re != 0.0 || x.im != 0.0 {
                    e.insert(x);
                }
            }
            Entry::Occupied(mut e) => {
                let sum = *e.get() + x;
                if sum.re == 0.0 && sum.im == 0.0 {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn get(&self, v: &VertexAddress) -> Scalar {
        self.entries.get(v).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VertexAddress, &Scalar)> {
        self.entries.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &VertexAddress> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scale(&self, c: Scalar) -> Self {
        Self::from_entries(self.entries.iter().map(|(k, v)| (k.clone(), v * c)))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.entries {
            out.add_at(k.clone(), *v);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.entries {
            out.add_at(k.clone(), -v);
        }
        out
    }

    pub fn norm(&self, space: SpaceSpec) -> f64 {
        norm(self, space)
    }
}

pub fn norm(f: &SparseVector, space: SpaceSpec) -> f64 {
    let abs = f.entries.values().map(|x| x.norm());
    match space {
        SpaceSpec::L1 => abs.sum(),
        SpaceSpec::Lp(p) => abs.map(|a| a.powf(p)).sum::<f64>().powf(1.0 / p),
        SpaceSpec::C0 => abs.fold(0.0, f64::max),
    }
}

/// `[B_λ f](v) = Σ_{u ∈ Child(v)} λ_u f(u)`.
pub fn apply_shift(f: &SparseVector, w: &WeightSpec, tree: &TreeSpec) -> SparseVector {
    let mut out = SparseVector::zero();
    for (u, x) in f.iter() {
        if let Ok(p) = tree.parent_of(u) {
            out.add_at(p, weight_at(u, w) * x);
        }
    }
    out
}

/// `[B_λ^n f](v) = Σ_{u ∈ Child^n(v)} λ(v→u) f(u)`, evaluated by sending
/// each support entry straight to its `n`-th ancestor.
pub fn apply_shift_power(
    f: &SparseVector,
    n: usize,
    w: &WeightSpec,
    tree: &TreeSpec,
) -> SparseVector {
    if n == 0 {
        return f.clone();
    }
    let mut out = SparseVector::zero();
    'entries: for (u, x) in f.iter() {
        let mut cur = u.clone();
        let mut coeff = *x;
        for _ in 0..n {
            coeff *= weight_at(&cur, w);
            cur = match tree.parent_of(&cur) {
                Ok(p) => p,
                Err(_) => continue 'entries,
            };
        }
        out.add_at(cur, coeff);
    }
    out
}

/// Whether the Rolewicz operator on `tree` is bounded on `space`: always on
/// ℓ^1, elsewhere exactly when `sup_v |Child(v)|` is finite.
///
/// The supremum is a maximum over the finitely many arities a [`TreeSpec`]
/// can list, so an unbounded tree cannot be described and the answer is
/// always `true` here.
pub fn rolewicz_bounded(tree: &TreeSpec, space: SpaceSpec) -> bool {
    match space {
        SpaceSpec::L1 => true,
        SpaceSpec::Lp(_) | SpaceSpec::C0 => tree.sup_arity().is_some(),
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::tree::TreeKind;

    fn c(re: f64) -> Scalar {
        Scalar::new(re, 0.0)
    }

    #[test]
    fn weight_lookup_order() {
        let w = WeightSpec::constant(2.0).unwrap();
        assert_eq!(weight_at(&VertexAddress::new(0, vec![1, 0]), &w), c(2.0));

        let p = Profile::new(BTreeMap::from([(3, c(7.0))]), vec![c(1.0)], vec![]).unwrap();
        let v = VertexAddress::new(0, vec![0, 0, 0]);
        let w = WeightSpec::per_generation(p).unwrap();
        assert_eq!(weight_at(&v, &w), c(7.0));
        let w = w.with_override(v.clone(), 3.0).unwrap();
        assert_eq!(weight_at(&v, &w), c(3.0));
        assert_eq!(weight_at(&VertexAddress::new(0, vec![0, 0, 1]), &w), c(7.0));
    }

    #[test]
    fn zero_weights_are_rejected() {
        assert!(WeightSpec::constant(0.0).is_err());
        assert!(WeightSpec::constant(f64::NAN).is_err());
    }

    #[test]
    fn path_weights() {
        let tree = TreeSpec::rooted_uniform(2).unwrap();
        let w = WeightSpec::constant(2.0).unwrap();
        let v = VertexAddress::new(0, vec![1]);
        assert_eq!(path_weight(&v, &v, &w, &tree).unwrap(), c(1.0));
        let u = VertexAddress::new(0, vec![1, 0, 1, 1]);
        assert_eq!(path_weight(&v, &u, &w, &tree).unwrap(), c(8.0));

        let mid = VertexAddress::new(0, vec![1, 0]);
        let w = w.with_override(mid, 3.0).unwrap();
        let u = VertexAddress::new(0, vec![1, 0, 1]);
        assert_eq!(path_weight(&v, &u, &w, &tree).unwrap(), c(6.0));

        assert!(matches!(
            path_weight(&u, &v, &w, &tree),
            Err(Error::NotADescendant { .. })
        ));
    }

    #[test]
    fn path_weight_across_spine() {
        let tree = TreeSpec::unrooted_uniform(2).unwrap();
        let p = Profile::periodic(vec![c(2.0), c(3.0)]).unwrap();
        let w = WeightSpec::per_generation(p).unwrap();
        // parent^2(anchor) at generation -2 down to (1,[1]) at generation 0 then (1,[1,0]) at 1
        let top = VertexAddress::spine(2);
        let u = VertexAddress::new(1, vec![1, 0]);
        // weights at generations -1, 0, 1 -> 3, 2, 3
        assert_eq!(path_weight(&top, &u, &w, &tree).unwrap(), c(18.0));
    }

    #[test]
    fn shift_of_basis_vectors() {
        let tree = TreeSpec::rooted_uniform(2).unwrap();
        let w = WeightSpec::constant(Scalar::new(0.0, 2.0)).unwrap();
        let v = VertexAddress::new(0, vec![1, 0]);
        let out = apply_shift(&SparseVector::basis(v.clone()), &w, &tree);
        assert_eq!(
            out,
            SparseVector::from_entries([(VertexAddress::new(0, vec![1]), Scalar::new(0.0, 2.0))])
        );
        assert!(apply_shift(&SparseVector::basis(VertexAddress::anchor()), &w, &tree).is_empty());
    }

    #[test]
    fn shift_sums_siblings() {
        let tree = TreeSpec::rooted_uniform(2).unwrap();
        let u1 = VertexAddress::new(0, vec![0]);
        let u2 = VertexAddress::new(0, vec![1]);
        let w = WeightSpec::constant(1.5)
            .unwrap()
            .with_override(u2.clone(), -0.5)
            .unwrap();
        let f = SparseVector::from_entries([(u1, c(2.0)), (u2, c(4.0))]);
        let out = apply_shift(&f, &w, &tree);
        // 1.5*2 + (-0.5)*4 = 1
        assert_eq!(out.get(&VertexAddress::anchor()), c(1.0));
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn shift_power_examples() {
        let tree = TreeSpec::unrooted_uniform(2).unwrap();
        let w = WeightSpec::constant(Scalar::new(0.5, 0.5)).unwrap();
        let v = VertexAddress::new(0, vec![1, 1]);
        let f = SparseVector::basis(v.clone());
        assert_eq!(apply_shift_power(&f, 0, &w, &tree), f);
        let up3 = tree.ancestor(&v, 3).unwrap();
        let expected = path_weight(&up3, &v, &w, &tree).unwrap();
        let got = apply_shift_power(&f, 3, &w, &tree);
        assert_eq!(got, SparseVector::from_entries([(up3, expected)]));
        let mut iter = f.clone();
        for _ in 0..3 {
            iter = apply_shift(&iter, &w, &tree);
        }
        let d = got.sub(&iter);
        assert!(d.norm(SpaceSpec::C0) < 1e-15);
    }

    #[test]
    fn powers_drop_mass_past_the_root() {
        let tree = TreeSpec::rooted_line();
        let w = WeightSpec::constant(1.0).unwrap();
        let f = SparseVector::basis(VertexAddress::new(0, vec![0, 0]));
        assert_eq!(
            apply_shift_power(&f, 2, &w, &tree),
            SparseVector::basis(VertexAddress::anchor())
        );
        assert!(apply_shift_power(&f, 3, &w, &tree).is_empty());
    }

    #[test]
    fn norms() {
        let f = SparseVector::from_entries([
            (VertexAddress::anchor(), c(3.0)),
            (VertexAddress::new(0, vec![0]), Scalar::new(0.0, -4.0)),
        ]);
        assert_abs_diff_eq!(f.norm(SpaceSpec::Lp(2.0)), 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.norm(SpaceSpec::C0), 4.0);
        assert_abs_diff_eq!(f.norm(SpaceSpec::L1), 7.0);
        let e = SparseVector::basis(VertexAddress::spine(4));
        for s in [SpaceSpec::L1, SpaceSpec::Lp(3.0), SpaceSpec::C0] {
            assert_eq!(e.norm(s), 1.0);
            assert_eq!(SparseVector::zero().norm(s), 0.0);
        }
    }

    #[test]
    fn zero_entries_are_pruned() {
        let v = VertexAddress::anchor();
        let f = SparseVector::basis(v.clone());
        assert!(f.sub(&f).is_empty());
        assert!(SparseVector::from_entries([(v, c(0.0))]).is_empty());
    }

    #[test]
    fn space_parsing() {
        assert_eq!("l1".parse::<SpaceSpec>().unwrap(), SpaceSpec::L1);
        assert_eq!("c0".parse::<SpaceSpec>().unwrap(), SpaceSpec::C0);
        assert_eq!("lp:2.5".parse::<SpaceSpec>().unwrap(), SpaceSpec::Lp(2.5));
        assert_eq!("l2".parse::<SpaceSpec>().unwrap(), SpaceSpec::Lp(2.0));
        assert!("lp:0.5".parse::<SpaceSpec>().is_err());
        assert!("linf".parse::<SpaceSpec>().is_err());
        assert_eq!(SpaceSpec::Lp(1.5).to_string(), "lp:1.5");
    }

    #[test]
    fn rolewicz_boundedness() {
        let t = TreeSpec::rooted_uniform(2).unwrap();
        assert!(rolewicz_bounded(&t, SpaceSpec::L1));
        assert!(rolewicz_bounded(&t, SpaceSpec::Lp(2.0)));
        let mut prefix = BTreeMap::new();
        for g in 0..8 {
            prefix.insert(g, g as u32 + 1);
        }
        let growing = TreeSpec::new(
            TreeKind::Rooted,
            Profile::new(prefix, vec![8], vec![]).unwrap(),
            BTreeMap::new(),
            BTreeMap::new(),
        )
        .unwrap();
        assert!(rolewicz_bounded(&growing, SpaceSpec::C0));
    }
}
