//! Rooted and unrooted leafless directed trees described by finite data.
//!
//! Vertices are addressed relative to a fixed anchor: the root for rooted
//! trees, an arbitrary vertex `v0` for unrooted ones. An address climbs
//! `up` parent-steps from the anchor and then descends through a word of
//! child slots. Climbing up and immediately back down the spine is a
//! detour, so a canonical address never starts its descent with the spine
//! slot of the vertex it climbed to.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::Profile;

/// Default per-call vertex budget for enumerations.
pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeKind {
    Rooted,
    Unrooted,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexAddress {
    pub up: u64,
    pub down: Vec<u32>,
}

impl VertexAddress {
    pub fn anchor() -> Self {
        Self {
            up: 0,
            down: Vec::new(),
        }
    }

    pub fn new(up: u64, down: Vec<u32>) -> Self {
        Self { up, down }
    }

    /// `parent^k(anchor)`.
    pub fn spine(k: u64) -> Self {
        Self {
            up: k,
            down: Vec::new(),
        }
    }

    pub fn generation(&self) -> i64 {
        self.down.len() as i64 - self.up as i64
    }

    pub fn is_on_spine(&self) -> bool {
        self.down.is_empty()
    }

    /// True when `self` lies in the subtree rooted at `ancestor` (inclusive).
    ///
    /// Both addresses must be canonical.
    pub fn is_descendant_of(&self, ancestor: &VertexAddress) -> bool {
        if ancestor.down.is_empty() {
            self.up <= ancestor.up
        } else {
            self.up == ancestor.up && self.down.starts_with(&ancestor.down)
        }
    }

    fn child(&self, slot: u32) -> Self {
        let mut down = self.down.clone();
        down.push(slot);
        Self { up: self.up, down }
    }
}

impl fmt::Display for VertexAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.up)?;
        for (i, s) in self.down.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for VertexAddress {
    type Err = Error;

    /// Parses the compact `UP:S1,S2,...` form, e.g. `0:` for the anchor.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSpec(format!("malformed vertex address {s:?}"));
        let s = s.trim();
        if s.starts_with('{') {
            let raw: RawAddress = serde_json::from_str(s).map_err(|_| bad())?;
            return Ok(Self::new(raw.up, raw.down));
        }
        let (up, down) = s.split_once(':').ok_or_else(bad)?;
        let up = up.trim().parse().map_err(|_| bad())?;
        let down = if down.trim().is_empty() {
            Vec::new()
        } else {
            down.split(',')
                .map(|t| t.trim().parse().map_err(|_| bad()))
                .collect::<Result<_>>()?
        };
        Ok(Self { up, down })
    }
}

#[derive(Deserialize)]
struct RawAddress {
    up: u64,
    #[serde(default)]
    down: Vec<u32>,
}

impl Serialize for VertexAddress {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Accepts the compact string form or an `{"up": .., "down": [..]}` object.
impl<'de> Deserialize<'de> for VertexAddress {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Object(RawAddress),
        }
        match Repr::deserialize(d)? {
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
            Repr::Object(raw) => Ok(Self::new(raw.up, raw.down)),
        }
    }
}

/// Result of counting a generation against a budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GenerationSize {
    Finite(u64),
    AtLeast(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeSpec {
    kind: TreeKind,
    arity: Profile<u32>,
    overrides: BTreeMap<VertexAddress, u32>,
    spine: BTreeMap<u64, u32>,
}

impl TreeSpec {
    pub fn new(
        kind: TreeKind,
        arity: Profile<u32>,
        overrides: BTreeMap<VertexAddress, u32>,
        spine: BTreeMap<u64, u32>,
    ) -> Result<Self> {
        if arity.values().any(|&a| a == 0) || overrides.values().any(|&a| a == 0) {
            return Err(Error::InvalidSpec(
                "every arity must be at least 1 (trees are leafless)".into(),
            ));
        }
        if kind == TreeKind::Rooted {
            if !arity.left_period().is_empty() || arity.explicit().keys().any(|&g| g < 0) {
                return Err(Error::InvalidSpec(
                    "rooted trees have no negative generations".into(),
                ));
            }
            if !spine.is_empty() {
                return Err(Error::InvalidSpec("rooted trees have no spine".into()));
            }
        }
        if spine.contains_key(&0) {
            return Err(Error::InvalidSpec("spine entries start at k = 1".into()));
        }
        let spec = Self {
            kind,
            arity,
            overrides,
            spine,
        };
        for (&k, &slot) in &spec.spine {
            let a = spec.arity_of(&VertexAddress::spine(k));
            if slot >= a {
                return Err(Error::SlotOutOfRange {
                    at: VertexAddress::spine(k),
                    slot,
                    arity: a,
                });
            }
        }
        for addr in spec.overrides.keys() {
            let canon = spec.canonical_address(addr.up, &addr.down)?;
            if &canon != addr {
                return Err(Error::InvalidSpec(format!(
                    "override address {addr} is not canonical (canonical form {canon})"
                )));
            }
        }
        Ok(spec)
    }

    /// Every vertex has `arity` children.
    pub fn rooted_uniform(arity: u32) -> Result<Self> {
        Self::new(
            TreeKind::Rooted,
            Profile::constant(arity),
            BTreeMap::new(),
            BTreeMap::new(),
        )
    }

    pub fn unrooted_uniform(arity: u32) -> Result<Self> {
        Self::new(
            TreeKind::Unrooted,
            Profile::constant(arity),
            BTreeMap::new(),
            BTreeMap::new(),
        )
    }

    pub fn rooted_line() -> Self {
        Self::rooted_uniform(1).expect("arity 1 is valid")
    }

    pub fn unrooted_line() -> Self {
        Self::unrooted_uniform(1).expect("arity 1 is valid")
    }

    pub fn kind(&self) -> TreeKind {
        self.kind
    }

    pub fn is_rooted(&self) -> bool {
        self.kind == TreeKind::Rooted
    }

    pub fn arity_profile(&self) -> &Profile<u32> {
        &self.arity
    }

    pub fn overrides(&self) -> &BTreeMap<VertexAddress, u32> {
        &self.overrides
    }

    pub fn spine_entries(&self) -> &BTreeMap<u64, u32> {
        &self.spine
    }

    /// Symmetric trees: every vertex of a generation has the same arity.
    pub fn is_symmetric(&self) -> bool {
        self.overrides.is_empty()
    }

    pub fn spine_child_index(&self, k: u64) -> u32 {
        self.spine.get(&k).copied().unwrap_or(0)
    }

    pub fn generation_arity(&self, n: i64) -> u32 {
        self.arity.at(n)
    }

    /// Number of children of a canonical address.
    pub fn arity_of(&self, v: &VertexAddress) -> u32 {
        self.overrides
            .get(v)
            .copied()
            .unwrap_or_else(|| self.arity.at(v.generation()))
    }

    pub fn max_arity(&self) -> u32 {
        self.arity
            .values()
            .chain(self.overrides.values())
            .copied()
            .max()
            .unwrap_or(1)
    }

    /// `sup_v |Child(v)|`, `None` when unbounded. Every describable tree is
    /// bounded.
    pub fn sup_arity(&self) -> Option<u32> {
        Some(self.max_arity())
    }

    /// Canonical form of the raw address `(up, down)`.
    pub fn canonical_address(&self, up: u64, down: &[u32]) -> Result<VertexAddress> {
        if self.is_rooted() && up > 0 {
            return Err(Error::AboveRoot(VertexAddress::new(up, down.to_vec())));
        }
        let mut up = up;
        let mut skip = 0;
        while up > 0 && skip < down.len() && down[skip] == self.spine_child_index(up) {
            up -= 1;
            skip += 1;
        }
        let mut cur = VertexAddress::spine(up);
        for &slot in &down[skip..] {
            let arity = self.arity_of(&cur);
            if slot >= arity {
                return Err(Error::SlotOutOfRange {
                    at: cur,
                    slot,
                    arity,
                });
            }
            cur = cur.child(slot);
        }
        Ok(cur)
    }

    /// Validates an address claimed to be canonical.
    pub fn check_address(&self, v: &VertexAddress) -> Result<()> {
        let canon = self.canonical_address(v.up, &v.down)?;
        if &canon != v {
            return Err(Error::InvalidSpec(format!(
                "address {v} is not canonical (canonical form {canon})"
            )));
        }
        Ok(())
    }

    pub fn parent_of(&self, v: &VertexAddress) -> Result<VertexAddress> {
        if let Some((_, rest)) = v.down.split_last() {
            return Ok(VertexAddress::new(v.up, rest.to_vec()));
        }
        match self.kind {
            TreeKind::Rooted => Err(Error::RootHasNoParent),
            TreeKind::Unrooted => Ok(VertexAddress::spine(v.up + 1)),
        }
    }

    /// `parent^n(v)`, or `None` when the walk leaves a rooted tree.
    pub fn ancestor(&self, v: &VertexAddress, n: u64) -> Option<VertexAddress> {
        let d = v.down.len() as u64;
        if n <= d {
            return Some(VertexAddress::new(
                v.up,
                v.down[..(d - n) as usize].to_vec(),
            ));
        }
        match self.kind {
            TreeKind::Rooted => None,
            TreeKind::Unrooted => Some(VertexAddress::spine(v.up + (n - d))),
        }
    }

    /// Depth of `u` below `v`, when `u` is a descendant of `v`.
    pub fn depth_below(&self, v: &VertexAddress, u: &VertexAddress) -> Option<u64> {
        if u.is_descendant_of(v) {
            Some((u.generation() - v.generation()) as u64)
        } else {
            None
        }
    }

    pub fn children_of(&self, v: &VertexAddress) -> Vec<VertexAddress> {
        let arity = self.arity_of(v);
        let spine_slot = (v.is_on_spine() && v.up > 0).then(|| self.spine_child_index(v.up));
        (0..arity)
            .map(|slot| {
                if spine_slot == Some(slot) {
                    VertexAddress::spine(v.up - 1)
                } else {
                    v.child(slot)
                }
            })
            .collect()
    }

    /// `Child^n(v)`, in slot order. Fails once any level exceeds `cap`.
    pub fn descendants_at(
        &self,
        v: &VertexAddress,
        n: usize,
        cap: usize,
    ) -> Result<Vec<VertexAddress>> {
        let mut level = vec![v.clone()];
        for _ in 0..n {
            let mut next = Vec::new();
            for w in &level {
                next.extend(self.children_of(w));
                if next.len() > cap {
                    return Err(Error::EnumerationCapExceeded { cap });
                }
            }
            level = next;
        }
        Ok(level)
    }

    fn subtree_has_override(&self, w: &VertexAddress) -> bool {
        self.overrides.keys().any(|o| o.is_descendant_of(w))
    }

    /// `|Child^depth(w)|`, or `None` once it exceeds `cap`.
    pub fn count_descendants(&self, w: &VertexAddress, depth: u64, cap: u64) -> Option<u64> {
        if depth == 0 {
            return Some(1);
        }
        if !self.subtree_has_override(w) {
            let g = w.generation();
            let mut count: u64 = 1;
            for i in 0..depth as i64 {
                count = count.checked_mul(self.arity.at(g + i) as u64)?;
                if count > cap {
                    return None;
                }
            }
            return Some(count);
        }
        let mut total: u64 = 0;
        for c in self.children_of(w) {
            total = total.checked_add(self.count_descendants(&c, depth - 1, cap)?)?;
            if total > cap {
                return None;
            }
        }
        Some(total)
    }

    /// Smallest `M` such that every spine vertex `parent^k(anchor)` with
    /// `k >= M` has exactly one child. Only meaningful with a free left end.
    fn line_start(&self) -> u64 {
        let left = (-self.arity.left_end()).max(0) as u64;
        let spine_override = self
            .overrides
            .keys()
            .filter(|a| a.is_on_spine())
            .map(|a| a.up + 1)
            .max()
            .unwrap_or(0);
        left.max(spine_override)
    }

    /// `|Gen_n|`, exact up to `cap`.
    pub fn generation_size(&self, n: i64, cap: u64) -> GenerationSize {
        match self.kind {
            TreeKind::Rooted => {
                if n < 0 {
                    return GenerationSize::Finite(0);
                }
                match self.count_descendants(&VertexAddress::anchor(), n as u64, cap) {
                    Some(c) => GenerationSize::Finite(c),
                    None => GenerationSize::AtLeast(cap),
                }
            }
            TreeKind::Unrooted => {
                if !self.left_tail_is_line() {
                    return GenerationSize::AtLeast(cap);
                }
                let m = self.line_start().max((-n).max(0) as u64);
                match self.count_descendants(&VertexAddress::spine(m), (n + m as i64) as u64, cap) {
                    Some(c) => GenerationSize::Finite(c),
                    None => GenerationSize::AtLeast(cap),
                }
            }
        }
    }

    /// `|Gen_n ∩ Child^*(parent^top(anchor))|`: generation sizes restricted
    /// to the finite window hanging below one spine vertex.
    pub fn windowed_generation_size(&self, n: i64, top: u64, cap: u64) -> GenerationSize {
        let start = VertexAddress::spine(if self.is_rooted() { 0 } else { top });
        let depth = n - start.generation();
        if depth < 0 {
            return GenerationSize::Finite(0);
        }
        match self.count_descendants(&start, depth as u64, cap) {
            Some(c) => GenerationSize::Finite(c),
            None => GenerationSize::AtLeast(cap),
        }
    }

    fn left_tail_is_line(&self) -> bool {
        self.arity.left_tail().iter().all(|&a| a == 1)
    }

    /// Whether the generations are singletons far enough to the left.
    pub fn has_free_left_end(&self) -> Result<bool> {
        match self.kind {
            TreeKind::Rooted => Err(Error::NotApplicable("has_free_left_end")),
            TreeKind::Unrooted => Ok(self.left_tail_is_line()),
        }
    }
}

/// `(up, down)` canonicalization as a free function.
pub fn canonical_address(up: u64, down: &[u32], spec: &TreeSpec) -> Result<VertexAddress> {
    spec.canonical_address(up, down)
}

pub fn generation_of(v: &VertexAddress) -> i64 {
    v.generation()
}
