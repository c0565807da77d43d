//! Deciding chain recurrence from divergence of the weight series.
//!
//! Two conditions govern chain recurrence of `B_λ` at a vertex `v`:
//!
//! * the root condition `Σ_{n≥1} A_n(v) = ∞`, where `A_n(v)` aggregates
//!   `|λ(v→u)|` over `u ∈ Child^n(v)`;
//! * for unrooted trees, the left condition `lim_n S(n) = ∞`, where `S(n)`
//!   aggregates the ratios `|λ(parent^n(v)→u) / λ(parent^n(v)→v)|` over the
//!   first `n` levels below `parent^n(v)`.
//!
//! The aggregate is a supremum on ℓ^1, a sum of `p*`-th powers on ℓ^p and a
//! plain sum on c₀.
//!
//! The generic evaluators scan levels up to a truncation and decide exactly
//! once the scan reaches the eventually periodic regime. Outside that regime
//! they can only certify divergence heuristically (a partial sum above a
//! threshold) and never certify convergence.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::levels::LevelScanner;
use crate::profile::{lcm, Profile};
use crate::shift::{rolewicz_bounded, weight_at, SpaceSpec, WeightMode, WeightSpec};
use crate::tree::{TreeSpec, VertexAddress, DEFAULT_ENUMERATION_CAP};

/// A per-period growth factor within this (log) distance of 1 counts as 1.
pub const RATIO_TOLERANCE: f64 = 1e-12;

/// How the dual aggregate is taken over one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DualMode {
    /// `sup_u |·|` (ℓ^1).
    Sup,
    /// `Σ_u |·|^q`, with `q = p*` on ℓ^p and `q = 1` on c₀.
    Exponent(f64),
}

impl DualMode {
    /// Exponent applied to a single magnitude before aggregation.
    pub fn power(self) -> f64 {
        match self {
            DualMode::Sup => 1.0,
            DualMode::Exponent(q) => q,
        }
    }
}

pub fn dual_exponent(space: SpaceSpec) -> DualMode {
    match space {
        SpaceSpec::L1 => DualMode::Sup,
        SpaceSpec::Lp(p) => DualMode::Exponent(p / (p - 1.0)),
        SpaceSpec::C0 => DualMode::Exponent(1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationPolicy {
    pub max_level: usize,
    pub enumeration_cap: usize,
    pub divergence_threshold: f64,
    /// Chain builders stop once the dual sum exceeds `margin / δ`.
    pub margin: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            max_level: 64,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            divergence_threshold: 1e6,
            margin: 1.05,
        }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.max_level == 0
            || self.enumeration_cap == 0
            || !(self.divergence_threshold > 0.0)
            || !(self.margin > 0.0)
        {
            return Err(Error::InvalidSpec(
                "truncation parameters must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Diverges,
    Converges,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    PartialSumThreshold,
    GeometricPeriodRatio,
    ClosedFormCorollary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub divergence: f64,
    pub ratio_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesVerdict {
    pub verdict: Verdict,
    pub rule: Option<Rule>,
    /// Running sums for the root condition, `S(1..=n)` for the left one.
    pub partial_sums: Vec<f64>,
    pub n_max: usize,
    pub thresholds: Thresholds,
    /// Growth factor over one period, when the periodic rule applied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period_ratio: Option<f64>,
    /// First level at which the periodic regime was observed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime_start: Option<usize>,
}

impl SeriesVerdict {
    fn new(policy: &TruncationPolicy, partial_sums: Vec<f64>) -> Self {
        Self {
            verdict: Verdict::Inconclusive,
            rule: None,
            partial_sums,
            n_max: policy.max_level,
            thresholds: Thresholds {
                divergence: policy.divergence_threshold,
                ratio_tolerance: RATIO_TOLERANCE,
            },
            period_ratio: None,
            regime_start: None,
        }
    }

    fn periodic(mut self, log_ratio: f64, start: usize) -> Self {
        self.verdict = if log_ratio >= -RATIO_TOLERANCE {
            Verdict::Diverges
        } else {
            Verdict::Converges
        };
        self.rule = Some(Rule::GeometricPeriodRatio);
        self.period_ratio = Some(log_ratio.exp());
        self.regime_start = Some(start);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Recurrence {
    ChainRecurrent,
    NotChainRecurrent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub verdict: Recurrence,
    pub root_condition: SeriesVerdict,
    pub left_condition: Option<SeriesVerdict>,
}

fn weight_right_start(w: &WeightSpec) -> i64 {
    match w.mode() {
        WeightMode::Constant(_) => i64::MIN,
        WeightMode::PerGeneration(p) => p.right_start(),
    }
}

fn weight_left_end(w: &WeightSpec) -> i64 {
    match w.mode() {
        WeightMode::Constant(_) => i64::MAX,
        WeightMode::PerGeneration(p) => p.left_end(),
    }
}

fn weight_periods(w: &WeightSpec) -> (usize, usize) {
    match w.mode() {
        WeightMode::Constant(_) => (1, 1),
        WeightMode::PerGeneration(p) => (p.right_period_len(), p.left_period_len()),
    }
}

/// Root condition at `v`: `Σ_{n≥1} A_n(v) = ∞`.
pub fn series_root_condition(
    v: &VertexAddress,
    tree: &TreeSpec,
    weights: &WeightSpec,
    space: SpaceSpec,
    policy: &TruncationPolicy,
) -> Result<SeriesVerdict> {
    policy.validate()?;
    tree.check_address(v)?;
    let mode = dual_exponent(space);
    let n_max = policy.max_level;
    let levels =
        LevelScanner::new(v, tree, weights, mode, policy.enumeration_cap).collect(n_max + 1)?;

    let mut partial_sums = Vec::with_capacity(n_max);
    let mut running = 0.0;
    for level in &levels[1..] {
        running += level.log_aggregate.exp();
        partial_sums.push(running);
    }
    let mut out = SeriesVerdict::new(policy, partial_sums);

    // A_{n+1} / A_n depends only on the generation once every vertex of the
    // level sits in a uniform block and the profiles have turned periodic.
    let start_gen = tree
        .arity_profile()
        .right_start()
        .max(weight_right_start(weights));
    let period = lcm(
        tree.arity_profile().right_period_len(),
        weight_periods(weights).0,
    );
    let regime =
        (0..=n_max).find(|&n| levels[n].all_blocks && v.generation() + n as i64 >= start_gen);
    if let Some(n0) = regime.filter(|n0| n0 + period <= n_max) {
        let log_ratio = levels[n0 + period].log_aggregate - levels[n0].log_aggregate;
        if log_ratio.is_finite() {
            return Ok(out.periodic(log_ratio, n0));
        }
    }
    if running > policy.divergence_threshold {
        out.verdict = Verdict::Diverges;
        out.rule = Some(Rule::PartialSumThreshold);
    }
    Ok(out)
}

/// Left condition at `v` (unrooted trees): `lim_n S(n) = ∞`.
pub fn series_left_condition(
    v: &VertexAddress,
    tree: &TreeSpec,
    weights: &WeightSpec,
    space: SpaceSpec,
    policy: &TruncationPolicy,
) -> Result<SeriesVerdict> {
    if tree.is_rooted() {
        return Err(Error::NotApplicable("series_left_condition"));
    }
    policy.validate()?;
    tree.check_address(v)?;
    let mode = dual_exponent(space);
    let power = mode.power();
    let n_max = policy.max_level;

    // log D_n = ln |λ(parent^n(v)→v)|, indexed by n.
    let mut log_den = vec![0.0];
    let mut partial_sums = Vec::with_capacity(n_max);
    // log of the j = n-1 term of S(n), indexed by n - 1
    let mut last_terms = Vec::with_capacity(n_max);
    let mut below = v.clone();
    for n in 1..=n_max {
        let above = tree.parent_of(&below)?;
        let d = log_den[n - 1] + weight_at(&below, weights).norm().ln();
        log_den.push(d);
        let levels =
            LevelScanner::new(&above, tree, weights, mode, policy.enumeration_cap).collect(n)?;
        let terms: Vec<f64> = levels.iter().map(|l| l.log_aggregate - power * d).collect();
        partial_sums.push(terms.iter().map(|t| t.exp()).sum());
        last_terms.push(terms[n - 1]);
        below = above;
    }
    let mut out = SeriesVerdict::new(policy, partial_sums);

    // Beyond every override and explicit profile entry, parent^n(v) walks the
    // periodic left tail of the spine.
    let left_end = tree
        .arity_profile()
        .left_end()
        .min(weight_left_end(weights));
    let max_override_up = tree
        .overrides()
        .keys()
        .chain(weights.overrides().keys())
        .map(|a| a.up)
        .max();
    let regime = (1..=n_max).find(|&n| {
        let p = tree
            .ancestor(v, n as u64)
            .expect("unrooted trees have every ancestor");
        p.is_on_spine() && p.generation() <= left_end && max_override_up.is_none_or(|m| p.up > m)
    });
    let period = lcm(
        tree.arity_profile().left_period_len(),
        weight_periods(weights).1,
    );
    let free_left_end = tree.has_free_left_end()?;

    if let Some(n0) = regime.filter(|n0| n0 + period <= n_max) {
        match (mode, free_left_end) {
            (DualMode::Exponent(_), false) => {
                // Every branching spine vertex adds off-spine descendants in
                // generation gen(v) - 1, each carrying the same positive ratio,
                // so the j = n-1 term grows without bound.
                let log_ratio = last_terms[n0 + period - 1] - last_terms[n0 - 1];
                let mut verdict = out.periodic(log_ratio.max(0.0), n0);
                verdict.verdict = Verdict::Diverges;
                return Ok(verdict);
            }
            _ => {
                // S(n+1) - S(n) eventually equals 1 / D_{n+1}^q, a geometric
                // sequence over each period of the left tail.
                let log_ratio = -power * (log_den[n0 + period] - log_den[n0]);
                if log_ratio.is_finite() {
                    return Ok(out.periodic(log_ratio, n0));
                }
            }
        }
    }
    let top = n_max - n_max / 4;
    if out.partial_sums[top - 1..]
        .iter()
        .all(|&s| s > policy.divergence_threshold)
    {
        out.verdict = Verdict::Diverges;
        out.rule = Some(Rule::PartialSumThreshold);
    }
    Ok(out)
}

fn combine(root: Verdict, left: Option<Verdict>) -> Recurrence {
    let verdicts = std::iter::once(root).chain(left);
    let all: Vec<Verdict> = verdicts.collect();
    if all.contains(&Verdict::Converges) {
        Recurrence::NotChainRecurrent
    } else if all.iter().all(|&v| v == Verdict::Diverges) {
        Recurrence::ChainRecurrent
    } else {
        Recurrence::Inconclusive
    }
}

/// Generic truncated classification at vertex `v`.
pub fn classify(
    tree: &TreeSpec,
    weights: &WeightSpec,
    space: SpaceSpec,
    v: &VertexAddress,
    policy: &TruncationPolicy,
) -> Result<Classification> {
    weights.validate(tree)?;
    if matches!(weights.mode(), WeightMode::Constant(_)) && !rolewicz_bounded(tree, space) {
        return Err(Error::UnboundedOperator);
    }
    let root_condition = series_root_condition(v, tree, weights, space, policy)?;
    let left_condition = if tree.is_rooted() {
        None
    } else {
        Some(series_left_condition(v, tree, weights, space, policy)?)
    };
    Ok(Classification {
        verdict: combine(
            root_condition.verdict,
            left_condition.as_ref().map(|l| l.verdict),
        ),
        root_condition,
        left_condition,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedForm {
    pub verdict: Recurrence,
    pub root_diverges: bool,
    pub left_diverges: Option<bool>,
    /// `ln ρ` of the rightward per-period factor.
    pub log_root_ratio: f64,
    /// `ln ρ` of the leftward factor; absent when the left condition holds
    /// for structural reasons (branching left tail on ℓ^p / c₀).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_left_ratio: Option<f64>,
}

/// Exact verdict for symmetric trees with symmetric weights.
///
/// The root condition is the series `Σ_n Π_{i=1}^n γ_{i-1} |λ_i|^{p*}` (ℓ^p,
/// c₀ with `p* = 1`) or `Σ_n Π_{i=1}^n |λ_i|` (ℓ^1). Its terms are eventually
/// geometric per period, so it diverges iff the per-period factor is at
/// least 1. On unrooted trees the left condition is `Σ_n Π_{i=0}^n 1/|λ_{-i}|
/// = ∞` on ℓ^1 and whenever the tree has a free left end; on ℓ^p and c₀ a
/// branching left tail satisfies it outright.
pub fn classify_closed_form(
    tree: &TreeSpec,
    weights: &WeightSpec,
    space: SpaceSpec,
    v: &VertexAddress,
) -> Result<ClosedForm> {
    if !tree.is_symmetric() {
        return Err(Error::NotCovered("tree has arity overrides"));
    }
    if !weights.is_symmetric() {
        return Err(Error::NotCovered("weights have overrides"));
    }
    tree.check_address(v)?;
    let mode = dual_exponent(space);
    let magnitudes = weights.magnitude_profile();
    let arity = tree.arity_profile();

    let first = (arity.right_start() + 1).max(magnitudes.right_start());
    let period = lcm(arity.right_period_len(), magnitudes.right_period_len());
    let log_root_ratio: f64 = (first..first + period as i64)
        .map(|i| match mode {
            DualMode::Sup => magnitudes.at(i).ln(),
            DualMode::Exponent(q) => (arity.at(i - 1) as f64).ln() + q * magnitudes.at(i).ln(),
        })
        .sum();
    let root_diverges = log_root_ratio >= -RATIO_TOLERANCE;

    let (left_diverges, log_left_ratio) = if tree.is_rooted() {
        (None, None)
    } else {
        let free_left_end = tree.has_free_left_end()?;
        match (mode, free_left_end) {
            (DualMode::Exponent(_), false) => (Some(true), None),
            _ => {
                let log_ratio = -left_tail_log_product(&magnitudes);
                (Some(log_ratio >= -RATIO_TOLERANCE), Some(log_ratio))
            }
        }
    };
    let verdict = if root_diverges && left_diverges.unwrap_or(true) {
        Recurrence::ChainRecurrent
    } else {
        Recurrence::NotChainRecurrent
    };
    Ok(ClosedForm {
        verdict,
        root_diverges,
        left_diverges,
        log_root_ratio,
        log_left_ratio,
    })
}

fn left_tail_log_product(magnitudes: &Profile<f64>) -> f64 {
    magnitudes.left_tail().iter().map(|m| m.ln()).sum()
}

/// Divergence of `Σ_{n≥1} Π_{i=m}^{m+n-1} a_i` by the per-period ratio of
/// its rightward tail.
pub fn forward_series_verdict(a: &Profile<f64>, m: i64) -> Verdict {
    let start = m.max(a.right_start());
    let log_ratio: f64 = (start..start + a.right_period_len() as i64)
        .map(|i| a.at(i).ln())
        .sum();
    if log_ratio >= -RATIO_TOLERANCE {
        Verdict::Diverges
    } else {
        Verdict::Converges
    }
}

/// Divergence of `Σ_{n≥0} Π_{i=m-n+1}^{m} a_i` by the per-period ratio of
/// its leftward tail.
pub fn backward_series_verdict(a: &Profile<f64>, m: i64) -> Verdict {
    let start = m.min(a.left_end());
    let log_ratio: f64 = (0..a.left_period_len() as i64)
        .map(|k| a.at(start - k).ln())
        .sum();
    if log_ratio >= -RATIO_TOLERANCE {
        Verdict::Diverges
    } else {
        Verdict::Converges
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftInvarianceReport {
    /// `Σ_{n≥1} Π_{i=1}^n a_i`.
    pub forward_anchor: Verdict,
    /// `Σ_{n≥0} Π_{i=1}^n a_{-i}`.
    pub backward_anchor: Verdict,
    pub forward: Vec<(i64, Verdict)>,
    pub backward: Vec<(i64, Verdict)>,
    pub consistent: bool,
}

/// Decides the forward and backward product series of a positive two-tailed
/// sequence from every starting index in `m_list` and checks that the
/// verdicts do not depend on the starting index.
pub fn shift_invariance_oracle(
    profile: &Profile<f64>,
    m_list: &[i64],
) -> Result<ShiftInvarianceReport> {
    if profile.values().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidSpec(
            "terms must be positive and finite".into(),
        ));
    }
    let forward_anchor = forward_series_verdict(profile, 1);
    let backward_anchor = backward_series_verdict(profile, -1);
    let forward: Vec<_> = m_list
        .iter()
        .map(|&m| (m, forward_series_verdict(profile, m)))
        .collect();
    let backward: Vec<_> = m_list
        .iter()
        .map(|&m| (m, backward_series_verdict(profile, m)))
        .collect();
    let consistent = forward.iter().all(|(_, v)| *v == forward_anchor)
        && backward.iter().all(|(_, v)| *v == backward_anchor);
    Ok(ShiftInvarianceReport {
        forward_anchor,
        backward_anchor,
        forward,
        backward,
        consistent,
    })
}
