//! Score-to-calibrated-value maps fitted on labelled trials.
//!
//! A map stores one knot at each end of every PAV block's score span, so a
//! block covering scores `[a, b]` contributes `(a, v)` and `(b, v)` (a single
//! knot when `a == b`). Between blocks the value either holds until the next
//! knot (step) or moves linearly to it (linear). Outside the knot range the
//! end values are held.
//!
//! The text form is
//!
//! ```text
//! pavcal-map v1 <posterior|llr> <step|linear>
//! <score>\t<value>
//! ...
//! ```
//!
//! with shortest round-trip float formatting, so parsing reproduces every
//! knot bit for bit.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::llr::block_llrs;
use crate::pav::pav_fit_grouped;
use crate::types::{BlockSolution, ClassCounts, Trial, WeightPair};

const MAGIC: &str = "pavcal-map";
const VERSION: &str = "v1";

/// What the map's values mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Target posterior probabilities in `[0, 1]`.
    Posterior,
    /// Log-likelihood-ratios in nats, possibly infinite.
    Llr,
}

/// How values are interpolated between knots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Right-continuous step.
    Step,
    /// Linear between neighbouring knots.
    Linear,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Posterior => "posterior",
            Mode::Llr => "llr",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "posterior" => Ok(Mode::Posterior),
            "llr" => Ok(Mode::Llr),
            _ => Err(format!("unknown mode {s:?} (expected posterior or llr)")),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::Step => "step",
            Policy::Linear => "linear",
        })
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "step" => Ok(Policy::Step),
            "linear" => Ok(Policy::Linear),
            _ => Err(format!("unknown policy {s:?} (expected step or linear)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Knot {
    pub score: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationMap {
    knots: Vec<Knot>,
    mode: Mode,
    policy: Policy,
}

/// Trials grouped by distinct score, in ascending score order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreGroups {
    pub scores: Vec<f64>,
    pub counts: Vec<ClassCounts>,
}

impl ScoreGroups {
    /// Sorts trials by score and pools exact ties. Rejects non-finite scores.
    pub fn from_trials(trials: &[Trial]) -> Result<Self> {
        if trials.is_empty() {
            return Err(Error::Empty);
        }
        if let Some((index, t)) = trials.iter().enumerate().find(|(_, t)| !t.score.is_finite()) {
            return Err(Error::NonFiniteScore {
                index,
                score: t.score,
            });
        }
        let mut sorted: Vec<&Trial> = trials.iter().collect();
        sorted.sort_by(|a, b| a.score.total_cmp(&b.score));
        let mut scores: Vec<f64> = Vec::new();
        let mut counts: Vec<ClassCounts> = Vec::new();
        for t in sorted {
            // -0.0 and 0.0 are one score
            match scores.last() {
                Some(&s) if s == t.score => counts.last_mut().unwrap().add(t.label),
                _ => {
                    scores.push(t.score);
                    counts.push(ClassCounts::of(t.label));
                }
            }
        }
        Ok(ScoreGroups { scores, counts })
    }

    pub fn totals(&self) -> ClassCounts {
        self.counts.iter().fold(ClassCounts::default(), |mut acc, c| {
            acc.targets += c.targets;
            acc.nontargets += c.nontargets;
            acc
        })
    }
}

/// PAV fit over score groups together with the grouping it was run on.
#[derive(Debug, Clone)]
pub struct GroupedFit {
    pub groups: ScoreGroups,
    pub solution: BlockSolution,
    /// Value per block: the posterior, or the LLR in llr mode.
    pub block_values: Vec<f64>,
}

impl GroupedFit {
    pub fn new(trials: &[Trial], weights: WeightPair, mode: Mode) -> Result<Self> {
        let groups = ScoreGroups::from_trials(trials)?;
        let (solution, block_values) = match mode {
            Mode::Posterior => {
                let s = pav_fit_grouped(&groups.counts, weights)?;
                let v = s.blocks.iter().map(|b| b.value).collect();
                (s, v)
            }
            Mode::Llr => {
                let totals = groups.totals();
                if totals.targets == 0 || totals.nontargets == 0 {
                    return Err(Error::SingleClass {
                        targets: totals.targets,
                        nontargets: totals.nontargets,
                    });
                }
                // LLRs do not depend on the class weights
                let s = pav_fit_grouped(&groups.counts, WeightPair::unit())?;
                let v = block_llrs(&s)?;
                (s, v)
            }
        };
        Ok(GroupedFit {
            groups,
            solution,
            block_values,
        })
    }
}

/// Fits a map on `trials`. In llr mode `weights` is ignored.
pub fn build_map(trials: &[Trial], weights: WeightPair, mode: Mode, policy: Policy) -> Result<CalibrationMap> {
    let fit = GroupedFit::new(trials, weights, mode)?;
    Ok(CalibrationMap::from_fit(&fit, mode, policy))
}

impl CalibrationMap {
    pub fn from_fit(fit: &GroupedFit, mode: Mode, policy: Policy) -> Self {
        let mut knots = Vec::with_capacity(2 * fit.solution.blocks.len());
        for (b, &value) in fit.solution.blocks.iter().zip(&fit.block_values) {
            let lo = fit.groups.scores[b.start];
            let hi = fit.groups.scores[b.end];
            knots.push(Knot { score: lo, value });
            if hi != lo {
                knots.push(Knot { score: hi, value });
            }
        }
        CalibrationMap { knots, mode, policy }
    }

    /// Builds a map from explicit knots, checking the map invariants.
    pub fn from_knots(knots: Vec<Knot>, mode: Mode, policy: Policy) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidMap("no knots".into()));
        }
        for (k, kn) in knots.iter().enumerate() {
            if !kn.score.is_finite() {
                return Err(Error::InvalidMap(format!("knot {k} has non-finite score {}", kn.score)));
            }
            let ok = match mode {
                Mode::Posterior => (0.0..=1.0).contains(&kn.value),
                Mode::Llr => !kn.value.is_nan(),
            };
            if !ok {
                return Err(Error::InvalidMap(format!("knot {k} has invalid {mode} value {}", kn.value)));
            }
        }
        for (k, pair) in knots.windows(2).enumerate() {
            if pair[1].score <= pair[0].score {
                return Err(Error::InvalidMap(format!("knot scores not strictly increasing at knot {}", k + 1)));
            }
            if pair[1].value < pair[0].value {
                return Err(Error::InvalidMap(format!("knot values decrease at knot {}", k + 1)));
            }
        }
        Ok(CalibrationMap { knots, mode, policy })
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn with_policy(mut self, policy: Policy) -> Self {
        self.policy = policy;
        self
    }

    /// Calibrated value for `score`.
    pub fn apply(&self, score: f64) -> f64 {
        let knots = &self.knots;
        // index of the first knot with knot.score > score
        let idx = knots.partition_point(|k| k.score <= score);
        if idx == 0 {
            return knots[0].value;
        }
        let left = knots[idx - 1];
        if idx == knots.len() || self.policy == Policy::Step {
            return left.value;
        }
        let right = knots[idx];
        if !(left.value.is_finite() && right.value.is_finite()) {
            // no linear segment to or from an infinite LLR
            return left.value;
        }
        let t = (score - left.score) / (right.score - left.score);
        (left.value + t * (right.value - left.value)).clamp(left.value, right.value)
    }

    pub fn apply_all(&self, scores: &[f64]) -> Vec<f64> {
        scores.iter().map(|&s| self.apply(s)).collect()
    }

    /// Text serialization.
    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC} {VERSION} {} {}\n", self.mode, self.policy);
        for k in &self.knots {
            out.push_str(&format!("{}\t{}\n", k.score, k.value));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::MapFormat {
            line: 1,
            message: "missing header".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let bad_header = |message: String| Error::MapFormat { line: 1, message };
        match fields.as_slice() {
            [MAGIC, VERSION, mode, policy] => {
                let mode: Mode = mode.parse().map_err(bad_header)?;
                let policy: Policy = policy.parse().map_err(bad_header)?;
                let mut knots = Vec::new();
                for (i, line) in lines {
                    let line_no = i + 1;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let err = |message: String| Error::MapFormat {
                        line: line_no,
                        message,
                    };
                    let (s, v) = line
                        .split_once('\t')
                        .ok_or_else(|| err("expected <score>\\t<value>".into()))?;
                    let score: f64 = s.trim().parse().map_err(|_| err(format!("bad score {s:?}")))?;
                    let value: f64 = v.trim().parse().map_err(|_| err(format!("bad value {v:?}")))?;
                    knots.push(Knot { score, value });
                }
                CalibrationMap::from_knots(knots, mode, policy)
            }
            _ => Err(bad_header(format!(
                "expected \"{MAGIC} {VERSION} <mode> <policy>\", got {header:?}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pav::pav_posteriors;
    use crate::types::Label::{self, NonTarget as N, Target as T};
    use proptest::prelude::*;

    fn trials(v: &[(f64, Label)]) -> Vec<Trial> {
        v.iter().map(|&(s, l)| Trial::new(s, l)).collect()
    }

    fn knots(v: &[(f64, f64)]) -> Vec<Knot> {
        v.iter().map(|&(score, value)| Knot { score, value }).collect()
    }

    #[test]
    fn separated_classes_step() {
        let m = build_map(&trials(&[(-1.0, N), (1.0, T)]), WeightPair::unit(), Mode::Posterior, Policy::Step).unwrap();
        assert_eq!(m.knots(), knots(&[(-1.0, 0.0), (1.0, 1.0)]).as_slice());
        assert_eq!(m.apply(-5.0), 0.0);
        assert_eq!(m.apply(0.0), 0.0);
        assert_eq!(m.apply(0.999), 0.0);
        assert_eq!(m.apply(1.0), 1.0);
        assert_eq!(m.apply(9.0), 1.0);
        assert_eq!(m.clone().with_policy(Policy::Linear).apply(0.0), 0.5);
    }

    #[test]
    fn pooled_block_is_constant() {
        let m = build_map(&trials(&[(0.0, T), (1.0, N)]), WeightPair::unit(), Mode::Posterior, Policy::Linear).unwrap();
        for s in [-3.0, 0.0, 0.5, 1.0, 7.0] {
            assert_eq!(m.apply(s), 0.5);
        }
    }

    #[test]
    fn ties_are_pooled() {
        let m = build_map(&trials(&[(0.0, T), (0.0, N)]), WeightPair::unit(), Mode::Posterior, Policy::Step).unwrap();
        assert_eq!(m.knots(), knots(&[(0.0, 0.5)]).as_slice());
        let g = ScoreGroups::from_trials(&trials(&[(0.0, T), (-0.0, N), (2.0, T)])).unwrap();
        assert_eq!(g.scores.len(), 2);
        assert_eq!(g.counts[0], ClassCounts { targets: 1, nontargets: 1 });
    }

    #[test]
    fn ingestion_errors() {
        let w = WeightPair::unit();
        assert_eq!(build_map(&[], w, Mode::Posterior, Policy::Step), Err(Error::Empty));
        assert!(matches!(
            build_map(&trials(&[(0.0, T), (f64::NAN, N)]), w, Mode::Posterior, Policy::Step),
            Err(Error::NonFiniteScore { index: 1, .. })
        ));
        assert!(matches!(
            build_map(&trials(&[(0.0, T), (1.0, T)]), w, Mode::Llr, Policy::Step),
            Err(Error::SingleClass { .. })
        ));
    }

    #[test]
    fn llr_map_values() {
        let t = trials(&[(0.0, T), (1.0, N), (2.0, N), (3.0, T)]);
        let m = build_map(&t, WeightPair::unit(), Mode::Llr, Policy::Step).unwrap();
        let out = m.apply_all(&[0.0, 1.0, 2.0, 3.0]);
        for v in &out[..3] {
            assert!((v + 2f64.ln()).abs() < 1e-12);
        }
        assert_eq!(out[3], f64::INFINITY);
        // infinite end value: the gap holds the finite side
        let lin = m.with_policy(Policy::Linear);
        assert_eq!(lin.apply(2.5), lin.apply(2.0));
        assert_eq!(lin.apply(3.0), f64::INFINITY);
    }

    #[test]
    fn text_format() {
        let m = CalibrationMap::from_knots(
            knots(&[(-1.5, f64::NEG_INFINITY), (0.1, 0.3), (2.0, f64::INFINITY)]),
            Mode::Llr,
            Policy::Linear,
        )
        .unwrap();
        let text = m.to_text();
        assert_eq!(text, "pavcal-map v1 llr linear\n-1.5\t-inf\n0.1\t0.3\n2\tinf\n");
        assert_eq!(CalibrationMap::parse(&text).unwrap(), m);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(CalibrationMap::parse(""), Err(Error::MapFormat { line: 1, .. })));
        assert!(matches!(
            CalibrationMap::parse("pavcal-map v2 llr step\n0\t1\n"),
            Err(Error::MapFormat { line: 1, .. })
        ));
        assert!(matches!(
            CalibrationMap::parse("pavcal-map v1 posterior step\n0\t0.5\n1 0.7\n"),
            Err(Error::MapFormat { line: 3, .. })
        ));
        assert!(matches!(
            CalibrationMap::parse("pavcal-map v1 posterior step\n0\tinf\n"),
            Err(Error::InvalidMap(_))
        ));
        assert!(matches!(
            CalibrationMap::parse("pavcal-map v1 posterior step\n1\t0.2\n0\t0.5\n"),
            Err(Error::InvalidMap(_))
        ));
        assert!(matches!(
            CalibrationMap::parse("pavcal-map v1 posterior step\n0\t0.7\n1\t0.5\n"),
            Err(Error::InvalidMap(_))
        ));
    }

    fn trial_strategy() -> impl Strategy<Value = Vec<Trial>> {
        prop::collection::vec(
            (-50i32..50, any::<bool>()).prop_map(|(s, b)| Trial::new(s as f64 * 0.37, if b { T } else { N })),
            1..120,
        )
    }

    proptest! {
        #[test]
        fn apply_is_monotone(t in trial_strategy(), probes in prop::collection::vec(-30.0f64..30.0, 2..200), linear in any::<bool>()) {
            let policy = if linear { Policy::Linear } else { Policy::Step };
            let m = build_map(&t, WeightPair::new(1.3, 0.6).unwrap(), Mode::Posterior, policy).unwrap();
            let mut p = probes.clone();
            p.sort_by(f64::total_cmp);
            let v = m.apply_all(&p);
            prop_assert!(v.windows(2).all(|x| x[0] <= x[1]));
            prop_assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
        }

        #[test]
        fn reproduces_training_values_without_ties(bits in prop::collection::vec(any::<bool>(), 1..100), linear in any::<bool>()) {
            let policy = if linear { Policy::Linear } else { Policy::Step };
            let labels: Vec<Label> = bits.iter().map(|&b| if b { T } else { N }).collect();
            let t: Vec<Trial> = labels.iter().enumerate().map(|(k, &l)| Trial::new(k as f64 * 0.5 - 3.0, l)).collect();
            let w = WeightPair::new(0.8, 1.7).unwrap();
            let m = build_map(&t, w, Mode::Posterior, policy).unwrap();
            let p = pav_posteriors(&labels, w).unwrap();
            for (trial, expect) in t.iter().zip(&p) {
                prop_assert!((m.apply(trial.score) - expect).abs() <= 1e-12);
            }
        }

        #[test]
        fn text_round_trip_is_bit_exact(t in trial_strategy(), probes in prop::collection::vec(-30.0f64..30.0, 1..100), llr in any::<bool>()) {
            let mode = if llr { Mode::Llr } else { Mode::Posterior };
            let m = match build_map(&t, WeightPair::unit(), mode, Policy::Linear) {
                Ok(m) => m,
                Err(Error::SingleClass { .. }) => return Ok(()),
                Err(e) => panic!("{e}"),
            };
            let back = CalibrationMap::parse(&m.to_text()).unwrap();
            prop_assert_eq!(&back, &m);
            for s in probes {
                prop_assert_eq!(back.apply(s).to_bits(), m.apply(s).to_bits());
            }
        }
    }
}
