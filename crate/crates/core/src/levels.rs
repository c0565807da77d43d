//! Level-by-level aggregates of `|λ(root→u)|` over `Child^j(root)` without
//! enumerating every vertex.
//!
//! A subtree that contains no arity override and no weight override below
//! its top vertex is uniform: all its vertices in one generation share the
//! same arity and the same path weight from the top. Such a subtree is
//! carried as a single block with a multiplicity, so symmetric regions cost
//! O(1) per level no matter how fast the tree branches. Only vertices whose
//! subtree still contains an override are kept explicitly.

use crate::criteria::DualMode;
use crate::error::{Error, Result};
use crate::shift::{weight_at, WeightSpec};
use crate::tree::{TreeSpec, VertexAddress};

/// Relative tolerance used when comparing log-magnitudes for ties.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
enum Node {
    Vertex(VertexAddress),
    Block { top: VertexAddress, depth: u64 },
}

#[derive(Debug, Clone)]
struct Entry {
    node: Node,
    log_mult: f64,
    log_weight: f64,
}

/// Summary of one level `Child^j(root)`.
#[derive(Debug, Clone)]
pub(crate) struct Level {
    /// `ln Σ |λ|^q` (power mode) or `ln max |λ|` (sup mode).
    pub log_aggregate: f64,
    /// Lowest address attaining `log_max`.
    pub argmax: VertexAddress,
    /// Whether every vertex of the level sits in a uniform block.
    pub all_blocks: bool,
}

pub(crate) struct LevelScanner<'a> {
    tree: &'a TreeSpec,
    weights: &'a WeightSpec,
    mode: DualMode,
    cap: usize,
    frontier: Vec<Entry>,
}

impl<'a> LevelScanner<'a> {
    pub fn new(
        root: &VertexAddress,
        tree: &'a TreeSpec,
        weights: &'a WeightSpec,
        mode: DualMode,
        cap: usize,
    ) -> Self {
        let mut scanner = Self {
            tree,
            weights,
            mode,
            cap,
            frontier: Vec::new(),
        };
        let node = scanner.classify(root.clone());
        scanner.frontier.push(Entry {
            node,
            log_mult: 0.0,
            log_weight: 0.0,
        });
        scanner
    }

    fn is_uniform(&self, w: &VertexAddress) -> bool {
        !self.tree.overrides().keys().any(|o| o.is_descendant_of(w))
            && !self
                .weights
                .overrides()
                .keys()
                .any(|o| o != w && o.is_descendant_of(w))
    }

    fn classify(&self, w: VertexAddress) -> Node {
        if self.is_uniform(&w) {
            Node::Block { top: w, depth: 0 }
        } else {
            Node::Vertex(w)
        }
    }

    pub fn current(&self) -> Level {
        let log_max = self
            .frontier
            .iter()
            .map(|e| e.log_weight)
            .fold(f64::NEG_INFINITY, f64::max);
        let argmax = self
            .frontier
            .iter()
            .filter(|e| e.log_weight >= log_max - TIE_TOL * log_max.abs().max(1.0))
            .map(|e| self.representative(&e.node))
            .min()
            .expect("frontier is never empty");
        let log_aggregate = match self.mode {
            DualMode::Sup => log_max,
            DualMode::Exponent(q) => {
                log_sum_exp(self.frontier.iter().map(|e| e.log_mult + q * e.log_weight))
            }
        };
        Level {
            log_aggregate,
            argmax,
            all_blocks: self
                .frontier
                .iter()
                .all(|e| matches!(e.node, Node::Block { .. })),
        }
    }

    /// Moves the frontier one generation down.
    pub fn advance(&mut self) -> Result<()> {
        let mut next = Vec::with_capacity(self.frontier.len());
        let mut explicit = 0usize;
        for e in std::mem::take(&mut self.frontier) {
            match e.node {
                Node::Block { top, depth } => {
                    let g = top.generation() + depth as i64;
                    let arity = self.tree.generation_arity(g) as f64;
                    let w = self.weights.generation_weight(g + 1).norm();
                    next.push(Entry {
                        node: Node::Block {
                            top,
                            depth: depth + 1,
                        },
                        log_mult: e.log_mult + arity.ln(),
                        log_weight: e.log_weight + w.ln(),
                    });
                }
                Node::Vertex(w) => {
                    for c in self.tree.children_of(&w) {
                        let lw = e.log_weight + weight_at(&c, self.weights).norm().ln();
                        let node = self.classify(c);
                        if matches!(node, Node::Vertex(_)) {
                            explicit += 1;
                            if explicit > self.cap {
                                return Err(Error::EnumerationCapExceeded { cap: self.cap });
                            }
                        }
                        next.push(Entry {
                            node,
                            log_mult: e.log_mult,
                            log_weight: lw,
                        });
                    }
                }
            }
        }
        self.frontier = next;
        Ok(())
    }

    /// Lowest canonical address in the set a node stands for.
    fn representative(&self, node: &Node) -> VertexAddress {
        match node {
            Node::Vertex(w) => w.clone(),
            Node::Block { top, depth } => {
                let depth = *depth;
                if !top.down.is_empty() || top.up == 0 {
                    let mut down = top.down.clone();
                    down.extend(std::iter::repeat_n(0, depth as usize));
                    VertexAddress::new(top.up, down)
                } else if depth <= top.up {
                    VertexAddress::spine(top.up - depth)
                } else {
                    VertexAddress::new(0, vec![0; (depth - top.up) as usize])
                }
            }
        }
    }

    /// Summaries of levels `0..count`.
    pub fn collect(mut self, count: usize) -> Result<Vec<Level>> {
        let mut out = Vec::with_capacity(count);
        for j in 0..count {
            if j > 0 {
                self.advance()?;
            }
            out.push(self.current());
        }
        Ok(out)
    }
}

pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
