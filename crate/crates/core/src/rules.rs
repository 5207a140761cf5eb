//! Regular binary proper scoring rules.
//!
//! Every rule is described by a weight density `ρ` over thresholds
//! `η ∈ [0, 1]`, with costs
//!
//! ```text
//! C(target, q)    = ∫_q^1 ρ(η) / η       dη
//! C(nontarget, q) = ∫_0^q ρ(η) / (1 − η) dη
//! ```
//!
//! The logarithmic, Brier and threshold (Dirac) rules have closed forms.
//! Arbitrary densities go through adaptive quadrature. Equivalent
//! representations with the `1/η` or `1/(η(1−η))` factors folded into the
//! density exist; only the normalized-density form is implemented here.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use crate::types::{Label, WeightPair};

/// Extended nonnegative real; `f64::INFINITY` is a legitimate cost.
pub type Cost = f64;

/// Absolute tolerance of the cost quadrature.
pub const QUADRATURE_TOL: f64 = 1e-10;
/// Distance kept from `η = 0` and `η = 1` when integrating a density.
pub const ENDPOINT_MARGIN: f64 = 1e-12;
/// Tolerance on `∫ρ = 1` for custom densities.
pub const NORMALIZATION_TOL: f64 = 1e-6;
/// Tolerance on the sum of mixture weights.
pub const MIXTURE_SUM_TOL: f64 = 1e-12;

const DENSITY_SAMPLES: usize = 1001;

/// Decision threshold strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Threshold(f64);

impl Threshold {
    pub fn new(eta: f64) -> Result<Self> {
        if eta > 0.0 && eta < 1.0 {
            Ok(Threshold(eta))
        } else {
            Err(Error::InvalidRule(format!("threshold {eta} is not strictly inside (0, 1)")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Misclassification cost of thresholding `q` at this point. The delta
    /// mass at the threshold is counted in the non-target integral.
    pub fn cost(self, label: Label, q: f64) -> Cost {
        let eta = self.0;
        match label {
            Label::Target if q < eta => 1.0 / eta,
            Label::NonTarget if q >= eta => 1.0 / (1.0 - eta),
            _ => 0.0,
        }
    }
}

/// Convex combination of threshold rules.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    components: Vec<(f64, Threshold)>,
}

impl Mixture {
    pub fn new(components: Vec<(f64, f64)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidRule("mixture has no components".into()));
        }
        let mut out = Vec::with_capacity(components.len());
        for (alpha, eta) in components {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::InvalidRule(format!("mixture weight {alpha} is not positive")));
            }
            out.push((alpha, Threshold::new(eta)?));
        }
        let sum: f64 = out.iter().map(|(a, _)| a).sum();
        if (sum - 1.0).abs() > MIXTURE_SUM_TOL {
            return Err(Error::InvalidRule(format!("mixture weights sum to {sum}, expected 1")));
        }
        Ok(Mixture { components: out })
    }

    pub fn components(&self) -> &[(f64, Threshold)] {
        &self.components
    }

    pub fn cost(&self, label: Label, q: f64) -> Cost {
        self.components
            .iter()
            .map(|&(alpha, t)| alpha * t.cost(label, q))
            .sum()
    }
}

type DensityFn = dyn Fn(f64) -> f64 + Send + Sync;

/// User supplied density evaluated by quadrature.
///
/// The caller declares whether the endpoint costs `C(target, 0)` and
/// `C(nontarget, 1)` are finite; the density is not analysed for this.
#[derive(Clone)]
pub struct CustomDensity {
    density: Arc<DensityFn>,
    finite_at_zero: bool,
    finite_at_one: bool,
    normalization: Arc<OnceLock<std::result::Result<(), Error>>>,
}

impl CustomDensity {
    pub fn new<F>(density: F, finite_at_zero: bool, finite_at_one: bool) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        for k in 0..DENSITY_SAMPLES {
            let eta = (k as f64 / (DENSITY_SAMPLES - 1) as f64).clamp(ENDPOINT_MARGIN, 1.0 - ENDPOINT_MARGIN);
            let v = density(eta);
            if v.is_nan() || v < 0.0 || v.is_infinite() {
                return Err(Error::InvalidRule(format!("density is {v} at η = {eta}")));
            }
        }
        Ok(CustomDensity {
            density: Arc::new(density),
            finite_at_zero,
            finite_at_one,
            normalization: Arc::new(OnceLock::new()),
        })
    }

    pub fn eval(&self, eta: f64) -> f64 {
        (self.density)(eta)
    }

    fn check_normalized(&self) -> Result<()> {
        self.normalization
            .get_or_init(|| {
                let integral = adaptive_simpson(
                    |eta| self.eval(eta),
                    ENDPOINT_MARGIN,
                    1.0 - ENDPOINT_MARGIN,
                    QUADRATURE_TOL,
                );
                if (integral - 1.0).abs() <= NORMALIZATION_TOL {
                    Ok(())
                } else {
                    Err(Error::NotNormalized { integral })
                }
            })
            .clone()
    }

    pub fn cost(&self, label: Label, q: f64) -> Result<Cost> {
        self.check_normalized()?;
        let at_singular_end = match label {
            Label::Target => q < ENDPOINT_MARGIN && !self.finite_at_zero,
            Label::NonTarget => q > 1.0 - ENDPOINT_MARGIN && !self.finite_at_one,
        };
        if at_singular_end {
            return Err(Error::NotIntegrable { label, q });
        }
        quadrature_cost(|eta| self.eval(eta), label, q)
    }
}

impl fmt::Debug for CustomDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDensity")
            .field("finite_at_zero", &self.finite_at_zero)
            .field("finite_at_one", &self.finite_at_one)
            .finish_non_exhaustive()
    }
}

/// Evaluates the cost integrals for `density` numerically.
///
/// Integration stays [`ENDPOINT_MARGIN`] away from both ends of `[0, 1]`.
pub fn quadrature_cost<F: Fn(f64) -> f64>(density: F, label: Label, q: f64) -> Result<Cost> {
    check_unit("q", q)?;
    let lo = ENDPOINT_MARGIN;
    let hi = 1.0 - ENDPOINT_MARGIN;
    let v = match label {
        Label::Target => {
            let a = q.max(lo);
            if a >= hi {
                0.0
            } else {
                adaptive_simpson(|eta| density(eta) / eta, a, hi, QUADRATURE_TOL)
            }
        }
        Label::NonTarget => {
            let b = q.min(hi);
            if b <= lo {
                0.0
            } else {
                adaptive_simpson(|eta| density(eta) / (1.0 - eta), lo, b, QUADRATURE_TOL)
            }
        }
    };
    Ok(v.max(0.0))
}

/// A regular binary proper scoring rule.
#[derive(Debug, Clone)]
pub enum ScoringRule {
    /// `ρ(η) = 1`.
    Logarithmic,
    /// `ρ(η) = 6η(1 − η)`.
    Brier,
    /// `ρ(η) = δ(η − η′)`.
    CostAt(Threshold),
    /// `ρ(η) = Σ αᵢ δ(η − η′ᵢ)`.
    DiracMixture(Mixture),
    CustomDensity(CustomDensity),
}

impl ScoringRule {
    pub fn cost_at(threshold: f64) -> Result<Self> {
        Threshold::new(threshold).map(ScoringRule::CostAt)
    }

    pub fn mixture(components: Vec<(f64, f64)>) -> Result<Self> {
        Mixture::new(components).map(ScoringRule::DiracMixture)
    }

    pub fn custom<F>(density: F, finite_at_zero: bool, finite_at_one: bool) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        CustomDensity::new(density, finite_at_zero, finite_at_one).map(ScoringRule::CustomDensity)
    }

    /// Strict rules have `ρ > 0` almost everywhere.
    pub fn is_strict(&self) -> bool {
        matches!(self, ScoringRule::Logarithmic | ScoringRule::Brier)
    }

    /// Value of `ρ(η)` for rules with an ordinary density.
    pub fn density(&self, eta: f64) -> Option<f64> {
        match self {
            ScoringRule::Logarithmic => Some(1.0),
            ScoringRule::Brier => Some(6.0 * eta * (1.0 - eta)),
            ScoringRule::CostAt(_) | ScoringRule::DiracMixture(_) => None,
            ScoringRule::CustomDensity(d) => Some(d.eval(eta)),
        }
    }

    /// Cost of reporting target probability `q` for a trial of class `label`.
    pub fn cost(&self, label: Label, q: f64) -> Result<Cost> {
        check_unit("q", q)?;
        Ok(match self {
            ScoringRule::Logarithmic => match label {
                Label::Target => -q.ln(),
                Label::NonTarget => -(-q).ln_1p(),
            },
            ScoringRule::Brier => match label {
                Label::Target => 3.0 * (1.0 - q) * (1.0 - q),
                Label::NonTarget => 3.0 * q * q,
            },
            ScoringRule::CostAt(t) => t.cost(label, q),
            ScoringRule::DiracMixture(m) => m.cost(label, q),
            ScoringRule::CustomDensity(d) => return d.cost(label, q),
        })
    }

    /// Expected cost of reporting `q` when the target probability is `r`.
    pub fn expected_cost(&self, r: f64, q: f64) -> Result<Cost> {
        check_unit("r", r)?;
        check_unit("q", q)?;
        // zero-probability terms contribute nothing, even when infinite
        let mut e = 0.0;
        if r > 0.0 {
            e += r * self.cost(Label::Target, q)?;
        }
        if r < 1.0 {
            e += (1.0 - r) * self.cost(Label::NonTarget, q)?;
        }
        Ok(e)
    }

    /// Weighted total cost `Σ w(ℓₜ)·C(ℓₜ, pₜ)`. Monotonicity of `p` is not
    /// checked.
    pub fn objective(&self, labels: &[Label], weights: &WeightPair, p: &[f64]) -> Result<Cost> {
        if labels.len() != p.len() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: p.len(),
            });
        }
        let mut total = 0.0;
        for (&l, &q) in labels.iter().zip(p) {
            total += weights.of(l) * self.cost(l, q)?;
        }
        Ok(total)
    }
}

impl fmt::Display for ScoringRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoringRule::Logarithmic => f.write_str("log"),
            ScoringRule::Brier => f.write_str("brier"),
            ScoringRule::CostAt(t) => write!(f, "cost@{}", t.get()),
            ScoringRule::DiracMixture(m) => {
                f.write_str("mix(")?;
                for (k, (a, t)) in m.components().iter().enumerate() {
                    if k > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}@{}", t.get())?;
                }
                f.write_str(")")
            }
            ScoringRule::CustomDensity(_) => f.write_str("custom"),
        }
    }
}

impl FromStr for ScoringRule {
    type Err = Error;

    /// Parses `log`, `brier`, `cost@<threshold>` or
    /// `mix(<alpha>@<threshold>,...)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |why: &str| Error::InvalidRule(format!("{s:?}: {why}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad("expected a number"));
        match s.to_ascii_lowercase().as_str() {
            "log" => return Ok(ScoringRule::Logarithmic),
            "brier" => return Ok(ScoringRule::Brier),
            _ => {}
        }
        if let Some(t) = s.strip_prefix("cost@") {
            return ScoringRule::cost_at(num(t)?);
        }
        if let Some(body) = s.strip_prefix("mix(").and_then(|r| r.strip_suffix(')')) {
            let components = body
                .split(',')
                .map(|part| {
                    let (a, t) = part.split_once('@').ok_or_else(|| bad("expected <alpha>@<threshold>"))?;
                    Ok((num(a)?, num(t)?))
                })
                .collect::<Result<Vec<_>>>()?;
            return ScoringRule::mixture(components);
        }
        Err(bad("expected log, brier, cost@<t> or mix(<a>@<t>,...)"))
    }
}

/// Cost of `rule` for one trial.
pub fn rule_cost(rule: &ScoringRule, label: Label, q: f64) -> Result<Cost> {
    rule.cost(label, q)
}

pub fn expected_cost(rule: &ScoringRule, r: f64, q: f64) -> Result<Cost> {
    rule.expected_cost(r, q)
}

pub fn objective(rule: &ScoringRule, labels: &[Label], weights: &WeightPair, p: &[f64]) -> Result<Cost> {
    rule.objective(labels, weights, p)
}

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfUnitInterval { name, value })
    }
}
