//! Property suite checking a build of this crate against its references:
//! the max-min oracle, random feasible competitors, grid search, scoring rule
//! properness, prior independence of LLRs and the cost quadrature.

use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::llr::{llr_calibrate, logit, weights_from_prior};
use crate::oracle::{grid_minimizer, maxmin_oracle};
use crate::pav::{pav_fit, pav_posteriors};
use crate::rules::{quadrature_cost, ScoringRule};
use crate::types::{ClassCounts, Label, WeightPair};

pub const ORACLE_TOL: f64 = 1e-12;
pub const OPTIMALITY_TOL: f64 = 1e-9;
pub const PROPERNESS_TOL: f64 = 1e-12;
pub const PRIOR_TOL: f64 = 1e-9;
pub const QUADRATURE_CHECK_TOL: f64 = 1e-9;
pub const MAX_RUNTIME_RATIO: f64 = 15.0;
pub const MAX_LARGE_FIT: Duration = Duration::from_secs(1);
pub const PRIORS: [f64; 7] = [-5.0, -2.0, -0.5, 0.0, 0.5, 2.0, 5.0];

#[derive(Debug, Clone)]
pub struct Config {
    /// Longest label sequence enumerated for the oracle check.
    pub max_len: usize,
    pub weights: Vec<WeightPair>,
    pub instances: usize,
    pub instance_len: usize,
    pub candidates: usize,
    pub seed: u64,
    pub perf: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            max_len: 10,
            weights: default_weights(),
            instances: 200,
            instance_len: 50,
            candidates: 1000,
            seed: 0,
            perf: false,
        }
    }
}

pub fn default_weights() -> Vec<WeightPair> {
    [(1.0, 1.0), (2.5, 0.7), (0.3, 4.0)]
        .iter()
        .map(|&(a, b)| WeightPair::new(a, b).unwrap())
        .collect()
}

/// The four rules every randomized check runs against.
pub fn reference_rules() -> Vec<ScoringRule> {
    vec![
        ScoringRule::Logarithmic,
        ScoringRule::Brier,
        ScoringRule::cost_at(0.37).unwrap(),
        ScoringRule::mixture(vec![(0.5, 0.21), (0.5, 0.68)]).unwrap(),
    ]
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    /// Largest observed deviation in the direction the check bounds.
    pub max_deviation: f64,
    pub detail: String,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<24} cases={:<9} max_dev={:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.max_deviation
        )?;
        if !self.detail.is_empty() {
            write!(f, "  {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub outcomes: Vec<Outcome>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.outcomes {
            writeln!(f, "{o}")?;
        }
        let failed = self.outcomes.iter().filter(|o| !o.passed).count();
        write!(f, "{} checks, {} failed", self.outcomes.len(), failed)
    }
}

pub fn run(config: &Config) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut outcomes = vec![
        oracle_equivalence(config.max_len, &config.weights),
        simultaneous_optimality(&mut rng, config.instances, config.instance_len, config.candidates),
        grid_optimality(&mut rng, 6, 21),
        properness(21, 201),
        prior_independence(&mut rng, config.instances.min(100), 40),
        quadrature_agreement(&mut rng, 100),
    ];
    if config.perf {
        outcomes.push(linear_time(&mut rng));
    }
    Report { outcomes }
}

/// Labels of length `len` whose bit `k` selects a target.
pub fn labels_from_bits(bits: u64, len: usize) -> Vec<Label> {
    (0..len)
        .map(|k| if bits >> k & 1 == 1 { Label::Target } else { Label::NonTarget })
        .collect()
}

pub fn random_labels<R: Rng>(rng: &mut R, len: usize) -> Vec<Label> {
    let rate: f64 = rng.gen_range(0.1..0.9);
    (0..len)
        .map(|_| if rng.gen_bool(rate) { Label::Target } else { Label::NonTarget })
        .collect()
}

/// Labels with at least one of each class.
pub fn random_two_class_labels<R: Rng>(rng: &mut R, len: usize) -> Vec<Label> {
    assert!(len >= 2);
    loop {
        let labels = random_labels(rng, len);
        let c = ClassCounts::count_labels(&labels);
        if c.targets > 0 && c.nontargets > 0 {
            return labels;
        }
    }
}

pub fn random_weights<R: Rng>(rng: &mut R) -> WeightPair {
    let a: f64 = rng.gen_range(-2.5f64..2.5);
    let b: f64 = rng.gen_range(-2.5f64..2.5);
    WeightPair::new(a.exp(), b.exp()).unwrap()
}

/// Sorted uniform samples: a random feasible solution.
pub fn random_monotone<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| rng.gen::<f64>()).collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn oracle_equivalence(max_len: usize, weights: &[WeightPair]) -> Outcome {
    let mut cases = 0;
    let mut worst = 0.0f64;
    let mut detail = String::new();
    'outer: for w in weights {
        for len in 1..=max_len {
            for bits in 0..(1u64 << len) {
                let labels = labels_from_bits(bits, len);
                cases += 1;
                let p = pav_posteriors(&labels, *w).expect("nonempty input");
                let o = match maxmin_oracle(&labels, *w) {
                    Ok(o) => o,
                    Err(e) => {
                        detail = e.to_string();
                        worst = f64::INFINITY;
                        break 'outer;
                    }
                };
                let dev = p.iter().zip(&o).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                worst = worst.max(dev);
            }
        }
    }
    Outcome {
        name: "oracle-equivalence",
        passed: worst <= ORACLE_TOL,
        cases,
        max_deviation: worst,
        detail,
    }
}

pub fn simultaneous_optimality<R: Rng>(rng: &mut R, instances: usize, len: usize, candidates: usize) -> Outcome {
    let rules = reference_rules();
    let mut cases = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut detail = String::new();
    for _ in 0..instances {
        let labels = random_labels(rng, len);
        let w = random_weights(rng);
        let p = pav_posteriors(&labels, w).unwrap();
        let pav: Vec<f64> = rules.iter().map(|r| r.objective(&labels, &w, &p).unwrap()).collect();
        if !pav[0].is_finite() {
            detail = "infinite logarithmic objective".into();
            worst = f64::INFINITY;
        }
        for _ in 0..candidates {
            let c = random_monotone(rng, len);
            for (rule, &best) in rules.iter().zip(&pav) {
                cases += 1;
                let obj = rule.objective(&labels, &w, &c).unwrap();
                worst = worst.max(best - obj);
            }
        }
    }
    Outcome {
        name: "simultaneous-optimality",
        passed: worst <= OPTIMALITY_TOL,
        cases,
        max_deviation: worst,
        detail,
    }
}

pub fn grid_optimality<R: Rng>(rng: &mut R, max_len: usize, grid: usize) -> Outcome {
    let rules = reference_rules();
    let mut cases = 0;
    let mut worst = f64::NEG_INFINITY;
    for len in 1..=max_len {
        for _ in 0..4 {
            let labels = random_labels(rng, len);
            let w = random_weights(rng);
            let p = pav_posteriors(&labels, w).unwrap();
            for rule in &rules {
                cases += 1;
                let g = grid_minimizer(rule, &labels, w, grid).unwrap();
                let pav = rule.objective(&labels, &w, &p).unwrap();
                worst = worst.max(pav - g.objective - g.slack);
            }
        }
    }
    Outcome {
        name: "grid-optimality",
        passed: worst <= PROPERNESS_TOL,
        cases,
        max_deviation: worst,
        detail: String::new(),
    }
}

fn unit_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
}

pub fn properness(r_points: usize, q_points: usize) -> Outcome {
    let rules = reference_rules();
    let rs = unit_grid(r_points);
    let qs = unit_grid(q_points);
    let mut cases = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut detail = String::new();
    for rule in &rules {
        for &r in &rs {
            let e: Vec<f64> = qs.iter().map(|&q| rule.expected_cost(r, q).unwrap()).collect();
            let at_r = rule.expected_cost(r, r).unwrap();
            for (a, &q) in qs.iter().enumerate() {
                cases += 1;
                worst = worst.max(at_r - e[a]);
                if rule.is_strict() && q != r && e[a] <= at_r {
                    detail = format!("{rule}: e({q}) not above e({r})");
                    worst = worst.max(f64::INFINITY);
                }
                // monotone legs on either side of r
                for (b, &q2) in qs.iter().enumerate().skip(a) {
                    if q2 <= r {
                        worst = worst.max(e[b] - e[a]);
                    } else if q >= r {
                        worst = worst.max(e[a] - e[b]);
                    }
                }
            }
        }
    }
    Outcome {
        name: "properness",
        passed: worst <= PROPERNESS_TOL,
        cases,
        max_deviation: worst.max(0.0),
        detail,
    }
}

/// `|a − b|`, zero for equal infinities and infinite for mismatched ones.
pub fn extended_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

pub fn prior_independence<R: Rng>(rng: &mut R, instances: usize, len: usize) -> Outcome {
    let mut cases = 0;
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let labels = random_two_class_labels(rng, len);
        let c = ClassCounts::count_labels(&labels);
        let reference = llr_calibrate(&labels).unwrap();
        for &pi in &PRIORS {
            cases += 1;
            let w = weights_from_prior(pi, c.targets, c.nontargets).unwrap();
            let p = pav_posteriors(&labels, w).unwrap();
            for (&pt, &lt) in p.iter().zip(&reference.w) {
                let shifted = logit(pt).unwrap() - pi;
                worst = worst.max(extended_diff(shifted, lt));
            }
        }
    }
    Outcome {
        name: "prior-independence",
        passed: worst <= PRIOR_TOL,
        cases,
        max_deviation: worst,
        detail: String::new(),
    }
}

pub fn quadrature_agreement<R: Rng>(rng: &mut R, points: usize) -> Outcome {
    let mut worst = 0.0f64;
    for _ in 0..points {
        let label = if rng.gen_bool(0.5) { Label::Target } else { Label::NonTarget };
        let q: f64 = rng.gen();
        let quad = quadrature_cost(|eta| 6.0 * eta * (1.0 - eta), label, q).unwrap();
        worst = worst.max((quad - ScoringRule::Brier.cost(label, q).unwrap()).abs());
        let q: f64 = rng.gen_range(1e-3..1.0 - 1e-3);
        let quad = quadrature_cost(|_| 1.0, label, q).unwrap();
        worst = worst.max((quad - ScoringRule::Logarithmic.cost(label, q).unwrap()).abs());
    }
    Outcome {
        name: "quadrature",
        passed: worst <= QUADRATURE_CHECK_TOL,
        cases: 2 * points,
        max_deviation: worst,
        detail: String::new(),
    }
}

/// Best-of-`reps` wall time of one PAV fit on `labels`.
pub fn time_fit(labels: &[Label], reps: usize) -> Duration {
    (0..reps)
        .map(|_| {
            let start = Instant::now();
            let s = pav_fit(labels, WeightPair::unit()).unwrap();
            let elapsed = start.elapsed();
            std::hint::black_box(s);
            elapsed
        })
        .min()
        .unwrap()
}

pub fn linear_time<R: Rng>(rng: &mut R) -> Outcome {
    let small = random_labels(rng, 100_000);
    let large = random_labels(rng, 1_000_000);
    let t_small = time_fit(&small, 7);
    let t_large = time_fit(&large, 5);
    let ratio = t_large.as_secs_f64() / t_small.as_secs_f64().max(1e-9);
    Outcome {
        name: "linear-time",
        passed: ratio <= MAX_RUNTIME_RATIO && t_large < MAX_LARGE_FIT,
        cases: 2,
        max_deviation: ratio,
        detail: format!("T=1e5 {:?}, T=1e6 {:?}, ratio {ratio:.2}", t_small, t_large),
    }
}
