//! JSON representations of trees, weights, vectors and chains.
//!
//! * Tree: `{"kind", "arity": {"prefix", "period", "left_period"},
//!   "overrides": [[addr, arity]], "spine": [[k, slot]]}`.
//! * Weights: `{"mode": "constant", "value": x}` or
//!   `{"mode": "per_generation", "profile": {..}}`, plus optional
//!   `"overrides": [[addr, x]]`. A scalar is a number or `[re, im]`.
//! * Vector: `[[addr, re, im], ...]`.
//! * Addresses use the compact `"UP:S1,S2"` form.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::chain::{ChainKind, ChainWitness, DeltaChain, Direction, Selection};
use crate::error::{Error, Result};
use crate::profile::Profile;
use crate::shift::{Scalar, SpaceSpec, SparseVector, WeightMode, WeightSpec};
use crate::tree::{TreeKind, TreeSpec, VertexAddress};

/// A scalar written as a bare number when real, `[re, im]` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JsonScalar(pub Scalar);

impl Serialize for JsonScalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.im == 0.0 {
            s.serialize_f64(self.0.re)
        } else {
            [self.0.re, self.0.im].serialize(s)
        }
    }
}

impl<'de> Deserialize<'de> for JsonScalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Real(f64),
            Complex([f64; 2]),
        }
        Ok(JsonScalar(match Repr::deserialize(d)? {
            Repr::Real(re) => Scalar::new(re, 0.0),
            Repr::Complex([re, im]) => Scalar::new(re, im),
        }))
    }
}

#[derive(Serialize, Deserialize)]
struct TreeFile {
    kind: TreeKind,
    arity: Profile<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    overrides: Vec<(VertexAddress, u32)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    spine: Vec<(u64, u32)>,
}

fn unique<K: Ord + std::fmt::Display, V>(pairs: Vec<(K, V)>, what: &str) -> Result<BTreeMap<K, V>> {
    let mut map = BTreeMap::new();
    for (k, v) in pairs {
        if map.contains_key(&k) {
            return Err(Error::InvalidSpec(format!("duplicate {what} entry {k}")));
        }
        map.insert(k, v);
    }
    Ok(map)
}

impl TryFrom<TreeFile> for TreeSpec {
    type Error = Error;

    fn try_from(f: TreeFile) -> Result<Self> {
        TreeSpec::new(
            f.kind,
            f.arity,
            unique(f.overrides, "override")?,
            unique(f.spine, "spine")?,
        )
    }
}

impl Serialize for TreeSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TreeFile {
            kind: self.kind(),
            arity: self.arity_profile().clone(),
            overrides: self
                .overrides()
                .iter()
                .map(|(a, n)| (a.clone(), *n))
                .collect(),
            spine: self.spine_entries().iter().map(|(k, n)| (*k, *n)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TreeSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        TreeFile::deserialize(d)?
            .try_into()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
enum WeightModeFile {
    Constant { value: JsonScalar },
    PerGeneration { profile: Profile<JsonScalar> },
}

#[derive(Serialize, Deserialize)]
struct WeightFile {
    #[serde(flatten)]
    mode: WeightModeFile,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    overrides: Vec<(VertexAddress, JsonScalar)>,
}

impl Serialize for WeightSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mode = match self.mode() {
            WeightMode::Constant(c) => WeightModeFile::Constant {
                value: JsonScalar(*c),
            },
            WeightMode::PerGeneration(p) => WeightModeFile::PerGeneration {
                profile: p.map(|x| JsonScalar(*x)),
            },
        };
        WeightFile {
            mode,
            overrides: self
                .overrides()
                .iter()
                .map(|(a, x)| (a.clone(), JsonScalar(*x)))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = WeightFile::deserialize(d)?;
        let mode = match f.mode {
            WeightModeFile::Constant { value } => WeightMode::Constant(value.0),
            WeightModeFile::PerGeneration { profile } => {
                WeightMode::PerGeneration(profile.map(|x| x.0))
            }
        };
        let overrides = f.overrides.into_iter().map(|(a, x)| (a, x.0)).collect();
        let overrides = unique(overrides, "weight override").map_err(serde::de::Error::custom)?;
        WeightSpec::new(mode, overrides).map_err(serde::de::Error::custom)
    }
}

impl Serialize for SparseVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.iter().map(|(a, x)| (a, x.re, x.im)))
    }
}

impl<'de> Deserialize<'de> for SparseVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries: Vec<(VertexAddress, f64, f64)> = Vec::deserialize(d)?;
        if entries
            .iter()
            .any(|(_, re, im)| !(re.is_finite() && im.is_finite()))
        {
            return Err(serde::de::Error::custom("vector entries must be finite"));
        }
        Ok(SparseVector::from_entries(
            entries
                .into_iter()
                .map(|(a, re, im)| (a, Scalar::new(re, im))),
        ))
    }
}

#[derive(Serialize, Deserialize)]
struct WitnessFile {
    direction: Direction,
    n: usize,
    t_or_s: Option<f64>,
    sigma_or_gamma: SparseVector,
    perturbations: Vec<SparseVector>,
    selection: Selection,
}

#[derive(Serialize, Deserialize)]
struct ChainFile {
    delta: f64,
    space: SpaceSpec,
    vertex: VertexAddress,
    kind: ChainKind,
    vectors: Vec<SparseVector>,
    #[serde(default)]
    witnesses: Vec<WitnessFile>,
}

impl From<&ChainWitness> for WitnessFile {
    fn from(w: &ChainWitness) -> Self {
        Self {
            direction: w.direction,
            n: w.levels,
            t_or_s: w.scale,
            sigma_or_gamma: w.dual.clone(),
            perturbations: w.perturbations.clone(),
            selection: w.selection,
        }
    }
}

impl From<WitnessFile> for ChainWitness {
    fn from(w: WitnessFile) -> Self {
        Self {
            direction: w.direction,
            levels: w.n,
            scale: w.t_or_s,
            dual: w.sigma_or_gamma,
            perturbations: w.perturbations,
            selection: w.selection,
        }
    }
}

impl Serialize for DeltaChain {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ChainFile {
            delta: self.delta,
            space: self.space,
            vertex: self.vertex.clone(),
            kind: self.kind,
            vectors: self.vectors.clone(),
            witnesses: self.witnesses.iter().map(WitnessFile::from).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DeltaChain {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = ChainFile::deserialize(d)?;
        if !(file.delta > 0.0) {
            return Err(serde::de::Error::custom("delta must be positive"));
        }
        Ok(DeltaChain {
            delta: file.delta,
            space: file.space,
            vertex: file.vertex,
            kind: file.kind,
            vectors: file.vectors,
            witnesses: file.witnesses.into_iter().map(ChainWitness::from).collect(),
        })
    }
}

pub fn chain_to_json(chain: &DeltaChain) -> String {
    serde_json::to_string_pretty(chain).expect("chains serialize")
}

pub fn chain_from_json(text: &str) -> Result<DeltaChain> {
    serde_json::from_str(text).map_err(|e| Error::InvalidSpec(format!("chain file: {e}")))
}

pub fn tree_from_json(text: &str) -> Result<TreeSpec> {
    serde_json::from_str(text).map_err(|e| Error::InvalidSpec(format!("tree file: {e}")))
}

pub fn weights_from_json(text: &str) -> Result<WeightSpec> {
    serde_json::from_str(text).map_err(|e| Error::InvalidSpec(format!("weight file: {e}")))
}
