//! Calibration to log-likelihood-ratios.
//!
//! Bayes' rule in logit form reads `logit P(target | s) = w + π`, with `w`
//! the log-likelihood-ratio and `π` the prior log-odds. Fitting posteriors
//! with PAV under the prior-derived class weights `(σ(π)/T1, (1−σ(π))/T2)`
//! and subtracting `π` gives LLRs that do not depend on `π` at all, so the
//! unweighted fit shifted by `logit(T1/T)` serves every prior.

use crate::error::{Error, Result};
use crate::pav::pav_posteriors;
use crate::rules::check_unit;
use crate::types::{BlockSolution, ClassCounts, Label, WeightPair};

/// `log(p / (1 − p))`, with `logit(0) = −∞` and `logit(1) = +∞`.
pub fn logit(p: f64) -> Result<f64> {
    check_unit("p", p)?;
    Ok((p / (1.0 - p)).ln())
}

/// `1 / (1 + e^{−w})` on the extended real line.
pub fn sigmoid(w: f64) -> f64 {
    1.0 / (1.0 + (-w).exp())
}

/// Class weights that make the PAV objective an expectation under prior
/// log-odds `prior_logodds`.
pub fn weights_from_prior(prior_logodds: f64, t1: u64, t2: u64) -> Result<WeightPair> {
    if !prior_logodds.is_finite() {
        return Err(Error::NonFinitePrior(prior_logodds));
    }
    if t1 == 0 || t2 == 0 {
        return Err(Error::SingleClass {
            targets: t1,
            nontargets: t2,
        });
    }
    let p1 = sigmoid(prior_logodds);
    let p2 = sigmoid(-prior_logodds);
    WeightPair::new(p1 / t1 as f64, p2 / t2 as f64)
}

/// Posterior target probability `σ(w + π)`.
pub fn posterior_from_llr(llr: f64, prior_logodds: f64) -> f64 {
    sigmoid(llr + prior_logodds)
}

/// Per-trial LLRs with the prior offset they were derived under.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrCalibration {
    /// Log-likelihood-ratios in nats, nondecreasing.
    pub w: Vec<f64>,
    /// `logit(T1/T)`, the prior at which the unweighted fit is a posterior.
    pub prior_logodds: f64,
    pub t1: u64,
    pub t2: u64,
}

impl LlrCalibration {
    /// Posteriors at prior log-odds `prior_logodds`.
    pub fn posteriors(&self, prior_logodds: f64) -> Vec<f64> {
        self.w
            .iter()
            .map(|&w| posterior_from_llr(w, prior_logodds))
            .collect()
    }
}

/// `logit(T1 / T)` for the given class counts.
pub fn empirical_logodds(counts: ClassCounts) -> Result<f64> {
    if counts.targets == 0 || counts.nontargets == 0 {
        return Err(Error::SingleClass {
            targets: counts.targets,
            nontargets: counts.nontargets,
        });
    }
    logit(counts.targets as f64 / counts.total() as f64)
}

/// Fits LLRs for a label sequence in score order.
pub fn llr_calibrate(labels: &[Label]) -> Result<LlrCalibration> {
    if labels.is_empty() {
        return Err(Error::Empty);
    }
    let counts = ClassCounts::count_labels(labels);
    let offset = empirical_logodds(counts)?;
    let w = pav_posteriors(labels, WeightPair::unit())?
        .into_iter()
        .map(|p| logit(p).map(|l| l - offset))
        .collect::<Result<Vec<_>>>()?;
    Ok(LlrCalibration {
        w,
        prior_logodds: offset,
        t1: counts.targets,
        t2: counts.nontargets,
    })
}

/// One LLR per block of an unweighted fit.
pub(crate) fn block_llrs(solution: &BlockSolution) -> Result<Vec<f64>> {
    let counts = solution.blocks.iter().fold(ClassCounts::default(), |mut c, b| {
        c.targets += b.m;
        c.nontargets += b.n;
        c
    });
    let offset = empirical_logodds(counts)?;
    solution
        .blocks
        .iter()
        .map(|b| logit(b.value).map(|l| l - offset))
        .collect()
}
