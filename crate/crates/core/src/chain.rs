//! Explicit δ-chains for `B_λ` between `0` and basis vectors.
//!
//! A chain `f_0, …, f_n` is a δ-chain when every defect
//! `g_l = f_l − B_λ f_{l−1}` has norm below δ. Iterating the defects gives
//! `f_n = B_λ^n f_0 + Σ_l B_λ^{n−l} g_l`, so a chain from `0` to `e_v` is a
//! choice of small defects whose shifted sum lands exactly on `e_v`, and a
//! chain from `e_v` to `0` is one whose shifted sum cancels `B_λ^m e_v`.
//!
//! Both builders pick the defects by aligning a dual vector with the path
//! weights below a vertex: the larger the aligned sum, the smaller each
//! defect has to be.

use serde::{Deserialize, Serialize};

use crate::criteria::{dual_exponent, DualMode, TruncationPolicy};
use crate::error::{Error, Result};
use crate::levels::LevelScanner;
use crate::shift::{
    apply_shift, apply_shift_power, path_weight, weight_at, Scalar, SpaceSpec, SparseVector,
    WeightSpec,
};
use crate::tree::{TreeSpec, VertexAddress};

/// Tolerance on endpoints and on the reconstruction identity.
pub const VERIFY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainKind {
    FromZero,
    ToZero,
    Loop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    FromZero,
    ToZero,
}

/// How the dual vector was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Equality case of Hölder's inequality (ℓ^p).
    HolderEquality,
    /// Unit phases on the whole support (c₀).
    UnitPhase,
    /// One unit point mass per level at the largest coefficient (ℓ^1).
    PerLevelArgmax,
    /// No dual vector: the orbit of `e_v` reaches 0 past the root.
    ExactTrajectory,
}

impl Selection {
    fn for_mode(mode: DualMode) -> Self {
        match mode {
            DualMode::Sup => Selection::PerLevelArgmax,
            DualMode::Exponent(1.0) => Selection::UnitPhase,
            DualMode::Exponent(_) => Selection::HolderEquality,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainWitness {
    pub direction: Direction,
    /// `n` (from zero) or `m` (to zero).
    pub levels: usize,
    /// `t` or `s`; absent for exact trajectories.
    pub scale: Option<f64>,
    /// `σ` or `γ`.
    pub dual: SparseVector,
    /// `g_l` or `q_j`, in chain order.
    pub perturbations: Vec<SparseVector>,
    pub selection: Selection,
}

/// Serializes to the chain file layout of [`crate::format`].
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaChain {
    pub delta: f64,
    pub space: SpaceSpec,
    pub vertex: VertexAddress,
    pub kind: ChainKind,
    pub vectors: Vec<SparseVector>,
    pub witnesses: Vec<ChainWitness>,
}

impl DeltaChain {
    /// Number of steps.
    pub fn len(&self) -> usize {
        self.vectors.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub valid: bool,
    pub step_defects: Vec<SparseVector>,
    pub defect_norms: Vec<f64>,
    /// Indices `l` (1-based) with `‖g_l‖ ≥ δ`.
    pub failing_steps: Vec<usize>,
    pub reconstruction_error: f64,
}

/// One level of coefficients `c_u`, `u ∈ Child^j(top)`.
type Level = Vec<(VertexAddress, Scalar)>;

/// Coefficients `λ(top→u) / denominator` on levels `0..count` below `top`.
///
/// In sup mode only the lowest-addressed maximizer of each level is kept,
/// which is all the ℓ^1 witness needs and avoids enumerating the level.
fn level_coefficients(
    top: &VertexAddress,
    count: usize,
    denominator: Scalar,
    tree: &TreeSpec,
    weights: &WeightSpec,
    mode: DualMode,
    cap: usize,
) -> Result<Vec<Level>> {
    if mode == DualMode::Sup {
        let levels = LevelScanner::new(top, tree, weights, mode, cap).collect(count)?;
        return levels
            .into_iter()
            .map(|l| {
                let c = path_weight(top, &l.argmax, weights, tree)? / denominator;
                Ok(vec![(l.argmax, c)])
            })
            .collect();
    }
    let mut out: Vec<Level> = Vec::with_capacity(count);
    let mut level = vec![(top.clone(), Scalar::new(1.0, 0.0))];
    let mut total = 1usize;
    for j in 0..count {
        if j > 0 {
            let mut next = Vec::new();
            for (w, x) in &level {
                for c in tree.children_of(w) {
                    let y = x * weight_at(&c, weights);
                    next.push((c, y));
                }
            }
            total += next.len();
            if total > cap {
                return Err(Error::EnumerationCapExceeded { cap });
            }
            level = next;
        }
        out.push(
            level
                .iter()
                .map(|(u, x)| (u.clone(), x / denominator))
                .collect(),
        );
    }
    Ok(out)
}

/// Aligned dual vector for the coefficient levels and the attained value
/// `Σ_u c_u σ(u)`. Each level restriction of σ has norm at most 1.
fn align(levels: &[Level], mode: DualMode) -> (SparseVector, f64) {
    let phase = |c: Scalar| c.conj() / c.norm();
    match mode {
        DualMode::Sup => {
            let mut sigma = SparseVector::zero();
            let mut t = 0.0;
            for level in levels {
                let (u, c) = &level[0];
                sigma.add_at(u.clone(), phase(*c));
                t += c.norm();
            }
            (sigma, t)
        }
        DualMode::Exponent(1.0) => {
            let all = levels.iter().flatten();
            let sigma =
                SparseVector::from_entries(all.clone().map(|(u, c)| (u.clone(), phase(*c))));
            (sigma, all.map(|(_, c)| c.norm()).sum())
        }
        DualMode::Exponent(q) => {
            let sum_q: f64 = levels.iter().flatten().map(|(_, c)| c.norm().powf(q)).sum();
            let p = q / (q - 1.0);
            let z = sum_q.powf(1.0 / p);
            let sigma = SparseVector::from_entries(
                levels
                    .iter()
                    .flatten()
                    .map(|(u, c)| (u.clone(), phase(*c) * c.norm().powf(q - 1.0) / z)),
            );
            (sigma, sum_q.powf(1.0 / q))
        }
    }
}

/// Dual vector σ on levels `0..n` below `v`, aligned with `λ(v→u)`, and the
/// value `t = Σ_u λ(v→u) σ(u)`.
///
/// * ℓ^p: the Hölder equality case, `‖σ‖_p = 1` and `t = ‖λ(v→·)‖_{p*}`.
/// * c₀: unit phases, `t = Σ_u |λ(v→u)|`.
/// * ℓ^1: a unit point mass per level at its lowest-addressed maximizer,
///   `t = Σ_j max_{u ∈ Child^j(v)} |λ(v→u)|`.
pub fn dual_witness_sigma(
    v: &VertexAddress,
    n: usize,
    tree: &TreeSpec,
    weights: &WeightSpec,
    space: SpaceSpec,
    cap: usize,
) -> Result<(SparseVector, f64)> {
    tree.check_address(v)?;
    let mode = dual_exponent(space);
    let levels = level_coefficients(v, n, Scalar::new(1.0, 0.0), tree, weights, mode, cap)?;
    Ok(align(&levels, mode))
}

/// Running values of `t` (or `s`) for 1, 2, … levels, from level aggregates.
fn running_scale(log_aggregates: impl Iterator<Item = f64>, mode: DualMode) -> Vec<f64> {
    let mut acc = 0.0;
    log_aggregates
        .map(|a| {
            acc += a.exp();
            match mode {
                DualMode::Sup => acc,
                DualMode::Exponent(q) => acc.powf(1.0 / q),
            }
        })
        .collect()
}

fn check_delta(delta: f64, policy: &TruncationPolicy) -> Result<()> {
    policy.validate()?;
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!(
            "delta must be positive, got {delta}"
        )))
    }
}

/// Replaces the computed endpoint by the exact one after checking they agree.
fn snap_endpoint(
    vectors: &mut [SparseVector],
    exact: SparseVector,
    space: SpaceSpec,
) -> Result<()> {
    let last = vectors.last_mut().expect("chains are nonempty");
    let err = last.sub(&exact).norm(space);
    if !(err < VERIFY_TOLERANCE) {
        return Err(Error::ConstructionFailed(format!(
            "endpoint is off by {err:e}"
        )));
    }
    *last = exact;
    Ok(())
}

fn ensure_valid(chain: &DeltaChain, tree: &TreeSpec, weights: &WeightSpec) -> Result<()> {
    let report = verify_chain(&chain.vectors, chain.delta, tree, weights, chain.space)?;
    if report.valid && report.reconstruction_error < VERIFY_TOLERANCE {
        Ok(())
    } else {
        Err(Error::ConstructionFailed(format!(
            "steps {:?} reach δ, reconstruction error {:e}",
            report.failing_steps, report.reconstruction_error
        )))
    }
}

/// A δ-chain `0 = f_0, …, f_n = e_v` with `f_l = B_λ f_{l−1} + g_l` and
/// `g_l = σ|_{Child^{n−l}(v)} / t`. The length `n` is the first one with
/// `t > margin / δ`.
pub fn build_chain_from_zero(
    v: &VertexAddress,
    delta: f64,
    tree: &TreeSpec,
    weights: &WeightSpec,
    space: SpaceSpec,
    policy: &TruncationPolicy,
) -> Result<DeltaChain> {
    check_delta(delta, policy)?;
    tree.check_address(v)?;
    weights.validate(tree)?;
    let mode = dual_exponent(space);
    let needed = policy.margin / delta;

    let scan = LevelScanner::new(v, tree, weights, mode, policy.enumeration_cap)
        .collect(policy.max_level)?;
    let ts = running_scale(scan.iter().map(|l| l.log_aggregate), mode);
    let n = match ts.iter().position(|&t| t > needed) {
        Some(i) => i + 1,
        None => {
            return Err(Error::CriterionNotMetWithinTruncation {
                quantity: "t",
                reached: ts.last().copied().unwrap_or(0.0),
                needed,
                levels: policy.max_level,
            })
        }
    };

    let levels = level_coefficients(
        v,
        n,
        Scalar::new(1.0, 0.0),
        tree,
        weights,
        mode,
        policy.enumeration_cap,
    )?;
    let (sigma, t) = align(&levels, mode);
    let perturbations: Vec<SparseVector> = (1..=n)
        .map(|l| {
            SparseVector::from_entries(
                levels[n - l]
                    .iter()
                    .map(|(u, _)| (u.clone(), sigma.get(u) / t)),
            )
        })
        .collect();

    let mut vectors = vec![SparseVector::zero()];
    for g in &perturbations {
        let next = apply_shift(vectors.last().expect("nonempty"), weights, tree).add(g);
        vectors.push(next);
    }
    snap_endpoint(&mut vectors, SparseVector::basis(v.clone()), space)?;

    let chain = DeltaChain {
        delta,
        space,
        vertex: v.clone(),
        kind: ChainKind::FromZero,
        vectors,
        witnesses: vec![ChainWitness {
            direction: Direction::FromZero,
            levels: n,
            scale: Some(t),
            dual: sigma,
            perturbations,
            selection: Selection::for_mode(mode),
        }],
    };
    ensure_valid(&chain, tree, weights)?;
    Ok(chain)
}

/// A δ-chain `e_v = p_0, …, p_m = 0`.
///
/// On unrooted trees `p_j = B_λ p_{j−1} + q_j` with
/// `q_j = −γ|_{Child^{m−j}(parent^m(v))} / s`, where γ is aligned with
/// `λ(parent^m(v)→u) / λ(parent^m(v)→v)` and `m` is the first length with
/// `s > margin / δ`. On rooted trees the orbit `e_v, B_λ e_v, …` reaches 0
/// one step past the root and is returned as is.
pub fn build_chain_to_zero(
    v: &VertexAddress,
    delta: f64,
    tree: &TreeSpec,
    weights: &WeightSpec,
    space: SpaceSpec,
    policy: &TruncationPolicy,
) -> Result<DeltaChain> {
    check_delta(delta, policy)?;
    tree.check_address(v)?;
    weights.validate(tree)?;
    if tree.is_rooted() {
        return Ok(trajectory_to_zero(v, delta, tree, weights, space));
    }
    let mode = dual_exponent(space);
    let power = mode.power();
    let needed = policy.margin / delta;

    let mut below = v.clone();
    let mut denominator = Scalar::new(1.0, 0.0);
    let mut reached = 0.0;
    let mut found = None;
    for m in 1..=policy.max_level {
        denominator *= weight_at(&below, weights);
        let top = tree.parent_of(&below)?;
        let scan =
            LevelScanner::new(&top, tree, weights, mode, policy.enumeration_cap).collect(m)?;
        let shift = power * denominator.norm().ln();
        let s = *running_scale(scan.iter().map(|l| l.log_aggregate - shift), mode)
            .last()
            .expect("m >= 1");
        reached = s;
        if s > needed {
            found = Some((m, top, denominator));
            break;
        }
        below = top;
    }
    let Some((m, top, denominator)) = found else {
        return Err(Error::CriterionNotMetWithinTruncation {
            quantity: "s",
            reached,
            needed,
            levels: policy.max_level,
        });
    };

    let levels = level_coefficients(
        &top,
        m,
        denominator,
        tree,
        weights,
        mode,
        policy.enumeration_cap,
    )?;
    let (gamma, s) = align(&levels, mode);
    let perturbations: Vec<SparseVector> = (1..=m)
        .map(|j| {
            SparseVector::from_entries(
                levels[m - j]
                    .iter()
                    .map(|(u, _)| (u.clone(), -gamma.get(u) / s)),
            )
        })
        .collect();

    let mut vectors = vec![SparseVector::basis(v.clone())];
    for q in &perturbations {
        let next = apply_shift(vectors.last().expect("nonempty"), weights, tree).add(q);
        vectors.push(next);
    }
    snap_endpoint(&mut vectors, SparseVector::zero(), space)?;

    let chain = DeltaChain {
        delta,
        space,
        vertex: v.clone(),
        kind: ChainKind::ToZero,
        vectors,
        witnesses: vec![ChainWitness {
            direction: Direction::ToZero,
            levels: m,
            scale: Some(s),
            dual: gamma,
            perturbations,
            selection: Selection::for_mode(dual_exponent(space)),
        }],
    };
    ensure_valid(&chain, tree, weights)?;
    Ok(chain)
}

fn trajectory_to_zero(
    v: &VertexAddress,
    delta: f64,
    tree: &TreeSpec,
    weights: &WeightSpec,
    space: SpaceSpec,
) -> DeltaChain {
    let mut vectors = vec![SparseVector::basis(v.clone())];
    while !vectors.last().expect("nonempty").is_empty() {
        let next = apply_shift(vectors.last().expect("nonempty"), weights, tree);
        vectors.push(next);
    }
    let m = vectors.len() - 1;
    DeltaChain {
        delta,
        space,
        vertex: v.clone(),
        kind: ChainKind::ToZero,
        vectors,
        witnesses: vec![ChainWitness {
            direction: Direction::ToZero,
            levels: m,
            scale: None,
            dual: SparseVector::zero(),
            perturbations: vec![SparseVector::zero(); m],
            selection: Selection::ExactTrajectory,
        }],
    }
}

/// `e_v → 0 → e_v`, joining the two builders at the shared zero vector.
pub fn build_loop_chain(
    v: &VertexAddress,
    delta: f64,
    tree: &TreeSpec,
    weights: &WeightSpec,
    space: SpaceSpec,
    policy: &TruncationPolicy,
) -> Result<DeltaChain> {
    let to_zero = build_chain_to_zero(v, delta, tree, weights, space, policy)?;
    let from_zero = build_chain_from_zero(v, delta, tree, weights, space, policy)?;
    let mut vectors = to_zero.vectors;
    vectors.extend(from_zero.vectors.into_iter().skip(1));
    let mut witnesses = to_zero.witnesses;
    witnesses.extend(from_zero.witnesses);
    let chain = DeltaChain {
        delta,
        space,
        vertex: v.clone(),
        kind: ChainKind::Loop,
        vectors,
        witnesses,
    };
    ensure_valid(&chain, tree, weights)?;
    Ok(chain)
}

/// Checks `‖f_l − B_λ f_{l−1}‖ < δ` for every step and recomputes
/// `f_n = B_λ^n f_0 + Σ_l B_λ^{n−l} g_l` along an independent route.
///
/// An invalid chain is reported, not rejected. Errors are reserved for
/// malformed input: fewer than two vectors, a nonpositive δ or an address
/// that does not belong to the tree.
pub fn verify_chain(
    vectors: &[SparseVector],
    delta: f64,
    tree: &TreeSpec,
    weights: &WeightSpec,
    space: SpaceSpec,
) -> Result<ChainReport> {
    if vectors.len() < 2 {
        return Err(Error::InvalidSpec(
            "a chain needs at least two vectors".into(),
        ));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "delta must be positive, got {delta}"
        )));
    }
    for f in vectors {
        f.support().try_for_each(|u| tree.check_address(u))?;
    }
    weights.validate(tree)?;

    let step_defects: Vec<SparseVector> = vectors
        .windows(2)
        .map(|w| w[1].sub(&apply_shift(&w[0], weights, tree)))
        .collect();
    let defect_norms: Vec<f64> = step_defects.iter().map(|g| g.norm(space)).collect();
    let failing_steps: Vec<usize> = defect_norms
        .iter()
        .enumerate()
        .filter(|(_, &d)| !(d < delta))
        .map(|(i, _)| i + 1)
        .collect();

    let n = step_defects.len();
    let mut rebuilt = apply_shift_power(&vectors[0], n, weights, tree);
    for (l, g) in step_defects.iter().enumerate() {
        rebuilt = rebuilt.add(&apply_shift_power(g, n - (l + 1), weights, tree));
    }
    let reconstruction_error = rebuilt.sub(&vectors[n]).norm(space);

    Ok(ChainReport {
        valid: failing_steps.is_empty(),
        step_defects,
        defect_norms,
        failing_steps,
        reconstruction_error,
    })
}
