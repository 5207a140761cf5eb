//! Value types shared across the crate: class labels, trials, class weights
//! and the block-structured output of a PAV fit.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Class tag of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Target,
    NonTarget,
}

impl Label {
    pub fn swapped(self) -> Self {
        match self {
            Label::Target => Label::NonTarget,
            Label::NonTarget => Label::Target,
        }
    }

    pub fn is_target(self) -> bool {
        self == Label::Target
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Target => "target",
            Label::NonTarget => "nontarget",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("target") {
            Ok(Label::Target)
        } else if s.eq_ignore_ascii_case("nontarget") {
            Ok(Label::NonTarget)
        } else {
            Err(format!("unknown label {s:?} (expected target or nontarget)"))
        }
    }
}

/// A labelled classifier output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial {
    pub score: f64,
    pub label: Label,
}

impl Trial {
    pub fn new(score: f64, label: Label) -> Self {
        Trial { score, label }
    }
}

/// Per-class weights `(v1, v2)` applied to target and non-target trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightPair {
    v1: f64,
    v2: f64,
}

impl WeightPair {
    pub fn new(v1: f64, v2: f64) -> Result<Self> {
        if v1.is_finite() && v2.is_finite() && v1 > 0.0 && v2 > 0.0 {
            Ok(WeightPair { v1, v2 })
        } else {
            Err(Error::InvalidWeights { v1, v2 })
        }
    }

    /// The unweighted case `(1, 1)`.
    pub fn unit() -> Self {
        WeightPair { v1: 1.0, v2: 1.0 }
    }

    pub fn v1(&self) -> f64 {
        self.v1
    }

    pub fn v2(&self) -> f64 {
        self.v2
    }

    pub fn of(&self, label: Label) -> f64 {
        match label {
            Label::Target => self.v1,
            Label::NonTarget => self.v2,
        }
    }

    pub fn swapped(&self) -> Self {
        WeightPair {
            v1: self.v2,
            v2: self.v1,
        }
    }

    /// Weighted target proportion `m·v1 / (m·v1 + n·v2)` of a pool holding
    /// `m` targets and `n` non-targets. At least one count must be nonzero.
    pub fn pooled_value(&self, m: u64, n: u64) -> f64 {
        debug_assert!(m + n > 0);
        let a = m as f64 * self.v1;
        let b = n as f64 * self.v2;
        a / (a + b)
    }
}

impl Default for WeightPair {
    fn default() -> Self {
        Self::unit()
    }
}

/// Target and non-target counts of one PAV input item.
///
/// A plain label sequence maps to singleton items; tied scores collapse into
/// one item carrying the combined counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub targets: u64,
    pub nontargets: u64,
}

impl ClassCounts {
    pub fn of(label: Label) -> Self {
        match label {
            Label::Target => ClassCounts {
                targets: 1,
                nontargets: 0,
            },
            Label::NonTarget => ClassCounts {
                targets: 0,
                nontargets: 1,
            },
        }
    }

    pub fn add(&mut self, label: Label) {
        match label {
            Label::Target => self.targets += 1,
            Label::NonTarget => self.nontargets += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.targets + self.nontargets
    }

    pub fn count_labels(labels: &[Label]) -> Self {
        let mut c = ClassCounts::default();
        labels.iter().for_each(|&l| c.add(l));
        c
    }
}

/// Maximal run of items sharing one fitted value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    /// First item index, inclusive.
    pub start: usize,
    /// Last item index, inclusive.
    pub end: usize,
    /// Number of targets pooled in the block.
    pub m: u64,
    /// Number of non-targets pooled in the block.
    pub n: u64,
    pub value: f64,
}

impl Block {
    /// Number of items in the block; never zero.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }
}

/// Output of a PAV fit: contiguous blocks with strictly increasing values.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSolution {
    pub blocks: Vec<Block>,
    pub weights: WeightPair,
    pub total: usize,
}

impl BlockSolution {
    /// Per-item values, one per input index.
    pub fn expand(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total);
        for b in &self.blocks {
            out.extend(std::iter::repeat_n(b.value, b.len()));
        }
        out
    }

    /// Checks partition, value formula and strict monotonicity.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let mut next = 0usize;
        let mut prev: Option<f64> = None;
        for (k, b) in self.blocks.iter().enumerate() {
            if b.start != next || b.end < b.start {
                return Err(format!("block {k} spans {}..={}, expected start {next}", b.start, b.end));
            }
            if b.m + b.n == 0 {
                return Err(format!("block {k} is empty"));
            }
            let expect = self.weights.pooled_value(b.m, b.n);
            if b.value != expect {
                return Err(format!("block {k} value {} differs from pooled value {expect}", b.value));
            }
            if let Some(p) = prev {
                if b.value <= p {
                    return Err(format!("block {k} value {} does not exceed previous {p}", b.value));
                }
            }
            prev = Some(b.value);
            next = b.end + 1;
        }
        if next != self.total {
            return Err(format!("blocks cover {next} of {} items", self.total));
        }
        Ok(())
    }
}

/// Expands a solution to its per-index values.
pub fn expand(solution: &BlockSolution) -> Vec<f64> {
    solution.expand()
}
