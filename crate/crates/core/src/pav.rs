//! Weighted pool-adjacent-violators.
//!
//! The fit is a single left-to-right pass over a stack of blocks. Each new
//! item enters as its own block and is merged with the block below it while
//! the lower block's value is greater than or equal to the new one. Merging
//! adds the integer class counts and recomputes the pooled value, so any two
//! blocks with the same target/non-target ratio end up pooled regardless of
//! the class weights. The result minimizes the weighted objective of every
//! regular binary proper scoring rule at once.

use crate::error::{Error, Result};
use crate::types::{Block, BlockSolution, ClassCounts, Label, WeightPair};

/// Fits the monotone solution for a label sequence in input order.
pub fn pav_fit(labels: &[Label], weights: WeightPair) -> Result<BlockSolution> {
    fit_items(labels.iter().map(|&l| ClassCounts::of(l)), labels.len(), weights)
}

/// Fits the monotone solution over pre-pooled items, e.g. groups of tied
/// scores. Block indices refer to item positions.
pub fn pav_fit_grouped(items: &[ClassCounts], weights: WeightPair) -> Result<BlockSolution> {
    if let Some(k) = items.iter().position(|c| c.total() == 0) {
        return Err(Error::InvalidMap(format!("item {k} holds no trials")));
    }
    fit_items(items.iter().copied(), items.len(), weights)
}

/// `pav_fit` followed by expansion to one posterior per trial.
pub fn pav_posteriors(labels: &[Label], weights: WeightPair) -> Result<Vec<f64>> {
    Ok(pav_fit(labels, weights)?.expand())
}

fn fit_items<I>(items: I, len: usize, weights: WeightPair) -> Result<BlockSolution>
where
    I: Iterator<Item = ClassCounts>,
{
    if len == 0 {
        return Err(Error::Empty);
    }
    let mut stack: Vec<Block> = Vec::with_capacity(len.min(1 << 16));
    for (t, c) in items.enumerate() {
        let mut cur = Block {
            start: t,
            end: t,
            m: c.targets,
            n: c.nontargets,
            value: 0.0,
        };
        while let Some(top) = stack.last() {
            if !ratio_at_least(top, &cur) {
                break;
            }
            cur.start = top.start;
            cur.m += top.m;
            cur.n += top.n;
            stack.pop();
        }
        cur.value = weights.pooled_value(cur.m, cur.n);
        stack.push(cur);
    }
    Ok(BlockSolution {
        blocks: stack,
        weights,
        total: len,
    })
}

/// `value(a) >= value(b)`, decided on the integer counts.
///
/// `m_a·v1/(m_a·v1 + n_a·v2) >= m_b·v1/(m_b·v1 + n_b·v2)` reduces to
/// `m_a·n_b >= m_b·n_a` for positive weights.
fn ratio_at_least(a: &Block, b: &Block) -> bool {
    (a.m as u128) * (b.n as u128) >= (b.m as u128) * (a.n as u128)
}
