//! Reference solutions for checking the PAV fit.
//!
//! `maxmin_oracle` evaluates the closed-form solution
//! `pₜ = max_{i≤t} min_{j≥t} r(i, j)`, where `r(i, j)` is the weighted target
//! proportion of items `i..=j`, and cross-checks it against the equivalent
//! min-max form. Both are O(T²) with prefix counts and meant as references,
//! not for production sizes.

use crate::error::{Error, Result};
use crate::rules::ScoringRule;
use crate::types::{Label, WeightPair};

/// Agreement required between the max-min and min-max forms.
pub const MAXMIN_MINMAX_TOL: f64 = 1e-12;
/// Largest sequence `grid_minimizer` will enumerate.
pub const GRID_MAX_LEN: usize = 8;
/// Largest grid `grid_minimizer` will enumerate.
pub const GRID_MAX_SIZE: usize = 21;

struct PrefixCounts {
    targets: Vec<u64>,
    nontargets: Vec<u64>,
    v1: f64,
    v2: f64,
}

impl PrefixCounts {
    fn new(labels: &[Label], weights: WeightPair) -> Self {
        let mut targets = vec![0u64; labels.len() + 1];
        let mut nontargets = vec![0u64; labels.len() + 1];
        for (t, l) in labels.iter().enumerate() {
            let is_t = u64::from(l.is_target());
            targets[t + 1] = targets[t] + is_t;
            nontargets[t + 1] = nontargets[t] + 1 - is_t;
        }
        PrefixCounts {
            targets,
            nontargets,
            v1: weights.v1(),
            v2: weights.v2(),
        }
    }

    /// `r(i, j)` over the inclusive range `i..=j`.
    fn r(&self, i: usize, j: usize) -> f64 {
        let m = (self.targets[j + 1] - self.targets[i]) as f64 * self.v1;
        let n = (self.nontargets[j + 1] - self.nontargets[i]) as f64 * self.v2;
        m / (m + n)
    }
}

/// `pₜ = min_{j≥t} max_{i≤t} r(i, j)`.
pub fn minmax_oracle(labels: &[Label], weights: WeightPair) -> Result<Vec<f64>> {
    if labels.is_empty() {
        return Err(Error::Empty);
    }
    let pc = PrefixCounts::new(labels, weights);
    let len = labels.len();
    let mut p = vec![f64::INFINITY; len];
    for j in 0..len {
        let mut running_max = f64::NEG_INFINITY;
        for (i, pi) in p.iter_mut().enumerate().take(j + 1) {
            running_max = running_max.max(pc.r(i, j));
            *pi = pi.min(running_max);
        }
    }
    Ok(p)
}

/// `pₜ = max_{i≤t} min_{j≥t} r(i, j)`, verified against [`minmax_oracle`].
pub fn maxmin_oracle(labels: &[Label], weights: WeightPair) -> Result<Vec<f64>> {
    if labels.is_empty() {
        return Err(Error::Empty);
    }
    let pc = PrefixCounts::new(labels, weights);
    let len = labels.len();
    let mut p = vec![f64::NEG_INFINITY; len];
    for i in 0..len {
        let mut running_min = f64::INFINITY;
        for j in (i..len).rev() {
            running_min = running_min.min(pc.r(i, j));
            p[j] = p[j].max(running_min);
        }
    }
    let other = minmax_oracle(labels, weights)?;
    for (index, (&a, &b)) in p.iter().zip(&other).enumerate() {
        if (a - b).abs() > MAXMIN_MINMAX_TOL {
            return Err(Error::OracleDisagreement {
                index,
                maxmin: a,
                minmax: b,
            });
        }
    }
    Ok(p)
}

/// Best nondecreasing sequence on a uniform grid, found by enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMinimum {
    pub values: Vec<f64>,
    pub objective: f64,
    /// Objective change available from moving any single element one grid
    /// step, summed over elements. Bounds how far the true optimum can sit
    /// below the grid optimum for smooth rules.
    pub slack: f64,
}

/// Exhaustive minimum of `rule`'s objective over nondecreasing sequences with
/// values in `{0, 1/(g−1), …, 1}`.
pub fn grid_minimizer(
    rule: &ScoringRule,
    labels: &[Label],
    weights: WeightPair,
    grid_size: usize,
) -> Result<GridMinimum> {
    if labels.is_empty() {
        return Err(Error::Empty);
    }
    if labels.len() > GRID_MAX_LEN || !(2..=GRID_MAX_SIZE).contains(&grid_size) {
        return Err(Error::TooLarge {
            len: labels.len(),
            grid: grid_size,
        });
    }
    let grid: Vec<f64> = (0..grid_size)
        .map(|k| k as f64 / (grid_size - 1) as f64)
        .collect();
    let table = labels
        .iter()
        .map(|&l| {
            grid.iter()
                .map(|&q| Ok(weights.of(l) * rule.cost(l, q)?))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut search = Search {
        table: &table,
        current: vec![0; labels.len()],
        best: vec![0; labels.len()],
        best_cost: f64::INFINITY,
        found: false,
    };
    search.descend(0, 0, 0.0);
    if !search.found {
        // every sequence is infinite; the all-zero one is as good as any
        search.best_cost = (0..labels.len()).map(|t| table[t][0]).sum();
    }

    let mut slack = 0.0;
    for (t, &k) in search.best.iter().enumerate() {
        let here = table[t][k];
        if !here.is_finite() {
            continue;
        }
        let step = [k.checked_sub(1), Some(k + 1).filter(|&x| x < grid_size)]
            .into_iter()
            .flatten()
            .map(|nb| table[t][nb])
            .filter(|c| c.is_finite())
            .map(|c| (c - here).abs())
            .fold(0.0f64, f64::max);
        slack += step;
    }

    Ok(GridMinimum {
        values: search.best.iter().map(|&k| grid[k]).collect(),
        objective: search.best_cost,
        slack,
    })
}

struct Search<'a> {
    table: &'a [Vec<f64>],
    current: Vec<usize>,
    best: Vec<usize>,
    best_cost: f64,
    found: bool,
}

impl Search<'_> {
    fn descend(&mut self, t: usize, lowest: usize, partial: f64) {
        if partial >= self.best_cost {
            return;
        }
        if t == self.table.len() {
            self.best_cost = partial;
            self.best.copy_from_slice(&self.current);
            self.found = true;
            return;
        }
        for k in lowest..self.table[t].len() {
            self.current[t] = k;
            self.descend(t + 1, k, partial + self.table[t][k]);
        }
    }
}
