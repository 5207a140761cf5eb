//! `pavcal`: fit, apply and evaluate PAV score calibration.

mod input;

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pavcal_core::llr::empirical_logodds;
use pavcal_core::map::{CalibrationMap, Mode, Policy};
use pavcal_core::selfcheck;
use pavcal_core::{build_map, posterior_from_llr, weights_from_prior, ClassCounts, Label, ScoringRule, Trial, WeightPair};

use input::{read_rows, trials, Need, Row};

#[derive(Debug)]
pub enum CliError {
    /// Bad input data; exit code 1.
    Data(String),
    /// Inconsistent flags; exit code 2.
    Usage(String),
    /// Selfcheck ran and found failures; exit code 3.
    SelfcheckFailed,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Data(m) | CliError::Usage(m) => f.write_str(m),
            CliError::SelfcheckFailed => f.write_str("selfcheck failed"),
        }
    }
}

impl From<pavcal_core::Error> for CliError {
    fn from(e: pavcal_core::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "pavcal", version, about = "Monotone PAV calibration of binary classifier scores")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a calibration map on a labelled `score,label` CSV.
    Fit(FitArgs),
    /// Apply a calibration map to a CSV of scores.
    Apply(ApplyArgs),
    /// Compare calibrated values against the PAV reference objective.
    Evaluate(EvaluateArgs),
    /// Run the built-in property suite.
    Selfcheck(SelfcheckArgs),
}

#[derive(Args)]
struct WeightingArgs {
    /// Class weights `v1,v2` for targets and non-targets.
    #[arg(long, value_parser = parse_weights)]
    weights: Option<WeightPair>,
    /// Prior log-odds; selects prior-derived class weights.
    #[arg(long, allow_hyphen_values = true)]
    prior_logodds: Option<f64>,
}

#[derive(Args)]
struct FitArgs {
    input: PathBuf,
    #[arg(long, default_value = "posterior")]
    mode: Mode,
    #[arg(long, default_value = "step")]
    policy: Policy,
    /// Scoring rule to report: log, brier, cost@<t> or mix(<a>@<t>,...).
    #[arg(long = "rule", default_value = "log")]
    rules: Vec<ScoringRule>,
    #[command(flatten)]
    weighting: WeightingArgs,
    /// Map output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ApplyArgs {
    map: PathBuf,
    input: PathBuf,
    /// Also emit `posterior` at this prior (llr maps only).
    #[arg(long, allow_hyphen_values = true)]
    prior_logodds: Option<f64>,
    /// Clip LLR output to `[-L, L]` (llr maps only).
    #[arg(long)]
    clamp_llr: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    input: PathBuf,
    #[arg(long = "rule", default_value = "log")]
    rules: Vec<ScoringRule>,
    /// Score the `calibrated` column of the input against the reference.
    #[arg(long)]
    calibrated: bool,
    /// Interpretation of the calibrated column.
    #[arg(long, default_value = "posterior")]
    mode: Mode,
    #[command(flatten)]
    weighting: WeightingArgs,
}

#[derive(Args)]
struct SelfcheckArgs {
    #[arg(long, default_value_t = 10)]
    max_len: usize,
    /// Single weight pair for the oracle check instead of the default three.
    #[arg(long, value_parser = parse_weights)]
    weights: Option<WeightPair>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    instances: usize,
    #[arg(long, default_value_t = 1000)]
    candidates: usize,
    /// Also time T=1e5 and T=1e6 fits.
    #[arg(long)]
    perf: bool,
}

const MAX_SELFCHECK_LEN: usize = 16;

fn parse_weights(s: &str) -> Result<WeightPair, String> {
    let (a, b) = s.split_once(',').ok_or("expected v1,v2")?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad weight {a:?}"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad weight {b:?}"))?;
    WeightPair::new(a, b).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => fit(a),
        Command::Apply(a) => apply(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Selfcheck(a) => run_selfcheck(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = match e {
                CliError::Data(_) => 1,
                CliError::Usage(_) => 2,
                CliError::SelfcheckFailed => 3,
            };
            if !matches!(e, CliError::SelfcheckFailed) {
                eprintln!("error: {e}");
            }
            ExitCode::from(code)
        }
    }
}

/// Weights and prior used for objectives, from `--weights`/`--prior-logodds`.
struct Weighting {
    weights: WeightPair,
    prior: Option<f64>,
}

impl Weighting {
    fn resolve(args: &WeightingArgs, mode: Mode, counts: ClassCounts) -> Result<Self, CliError> {
        match (args.weights, args.prior_logodds, mode) {
            (Some(_), Some(_), _) => Err(CliError::Usage(
                "--weights and --prior-logodds are mutually exclusive".into(),
            )),
            (Some(_), None, Mode::Llr) => Err(CliError::Usage(
                "--weights has no effect in llr mode; use --prior-logodds".into(),
            )),
            (Some(w), None, Mode::Posterior) => Ok(Weighting { weights: w, prior: None }),
            (None, Some(pi), _) => {
                if !pi.is_finite() {
                    return Err(CliError::Usage(format!("--prior-logodds must be finite, got {pi}")));
                }
                Ok(Weighting {
                    weights: weights_from_prior(pi, counts.targets, counts.nontargets)?,
                    prior: Some(pi),
                })
            }
            (None, None, _) => Ok(Weighting {
                weights: WeightPair::unit(),
                prior: None,
            }),
        }
    }

    /// Prior under which LLRs become posteriors for the objective.
    fn llr_prior(&self, counts: ClassCounts) -> Result<f64, CliError> {
        match self.prior {
            Some(pi) => Ok(pi),
            None => Ok(empirical_logodds(counts)?),
        }
    }
}

/// Trials sorted by score; the order objectives are summed in.
fn sorted(mut rows: Vec<Row>) -> Vec<Row> {
    rows.sort_by(|a, b| a.score.total_cmp(&b.score));
    rows
}

fn labels_of(rows: &[Row]) -> Vec<Label> {
    rows.iter().map(|r| r.label.expect("labelled rows")).collect()
}

/// Per-trial PAV posteriors on `rows` (sorted), with tied scores pooled.
fn reference_posteriors(rows: &[Row], weighting: &Weighting, mode: Mode) -> Result<(CalibrationMap, Vec<f64>), CliError> {
    let t: Vec<Trial> = trials(rows);
    let map = build_map(&t, weighting.weights, mode, Policy::Step)?;
    let values = map.apply_all(&rows.iter().map(|r| r.score).collect::<Vec<_>>());
    let posteriors = match mode {
        Mode::Posterior => values,
        Mode::Llr => {
            let counts = ClassCounts::count_labels(&labels_of(rows));
            let pi = weighting.llr_prior(counts)?;
            values.iter().map(|&w| posterior_from_llr(w, pi)).collect()
        }
    };
    Ok((map, posteriors))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Data(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Data(format!("stdout: {e}"))),
    }
}

fn fit(args: FitArgs) -> Result<(), CliError> {
    let rows = sorted(read_rows(&args.input, Need { label: true, calibrated: false })?);
    let labels = labels_of(&rows);
    let counts = ClassCounts::count_labels(&labels);
    let weighting = Weighting::resolve(&args.weighting, args.mode, counts)?;

    let (map, posteriors) = reference_posteriors(&rows, &weighting, args.mode)?;
    let map = map.with_policy(args.policy);
    let blocks = map
        .knots()
        .windows(2)
        .filter(|k| k[0].value != k[1].value)
        .count()
        + 1;

    let mut report = format!(
        "T={} T1={} T2={} blocks={}\n",
        labels.len(),
        counts.targets,
        counts.nontargets,
        blocks
    );
    for rule in &args.rules {
        let obj = rule.objective(&labels, &weighting.weights, &posteriors)?;
        report.push_str(&format!("objective[{rule}]={obj}\n"));
    }

    write_output(args.out.as_deref(), &map.to_text())?;
    if args.out.is_some() {
        print!("{report}");
    } else {
        eprint!("{report}");
    }
    Ok(())
}

fn apply(args: ApplyArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.map).map_err(|e| CliError::Data(format!("{}: {e}", args.map.display())))?;
    let map = CalibrationMap::parse(&text).map_err(|e| CliError::Data(format!("{}: {e}", args.map.display())))?;
    if map.mode() == Mode::Posterior {
        if args.prior_logodds.is_some() {
            return Err(CliError::Usage("--prior-logodds requires an llr map".into()));
        }
        if args.clamp_llr.is_some() {
            return Err(CliError::Usage("--clamp-llr requires an llr map".into()));
        }
    }
    if let Some(l) = args.clamp_llr {
        if !(l > 0.0 && l.is_finite()) {
            return Err(CliError::Usage(format!("--clamp-llr must be positive and finite, got {l}")));
        }
    }
    if let Some(pi) = args.prior_logodds {
        if !pi.is_finite() {
            return Err(CliError::Usage(format!("--prior-logodds must be finite, got {pi}")));
        }
    }

    let rows = read_rows(&args.input, Need { label: false, calibrated: false })?;
    let mut out = String::from(if args.prior_logodds.is_some() {
        "score,calibrated,posterior\n"
    } else {
        "score,calibrated\n"
    });
    for r in &rows {
        let v = map.apply(r.score);
        let shown = match args.clamp_llr {
            Some(l) => v.clamp(-l, l),
            None => v,
        };
        match args.prior_logodds {
            Some(pi) => out.push_str(&format!("{},{},{}\n", r.score, shown, posterior_from_llr(v, pi))),
            None => out.push_str(&format!("{},{}\n", r.score, shown)),
        }
    }
    write_output(args.out.as_deref(), &out)
}

fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let rows = sorted(read_rows(
        &args.input,
        Need {
            label: true,
            calibrated: args.calibrated,
        },
    )?);
    let labels = labels_of(&rows);
    let counts = ClassCounts::count_labels(&labels);
    let weighting = Weighting::resolve(&args.weighting, args.mode, counts)?;

    // the reference is always a posterior fit: the floor over monotone maps
    let (_, reference) = reference_posteriors(&rows, &weighting, Mode::Posterior)?;

    let calibrated = if args.calibrated {
        let values: Vec<f64> = rows.iter().map(|r| r.calibrated.expect("calibrated column")).collect();
        Some(match args.mode {
            Mode::Posterior => {
                if let Some(r) = rows.iter().find(|r| !(0.0..=1.0).contains(&r.calibrated.unwrap())) {
                    return Err(CliError::Data(format!(
                        "{} line {}: calibrated value {} outside [0, 1] in posterior mode",
                        args.input.display(),
                        r.line,
                        r.calibrated.unwrap()
                    )));
                }
                values
            }
            Mode::Llr => {
                let pi = weighting.llr_prior(counts)?;
                values.iter().map(|&w| posterior_from_llr(w, pi)).collect()
            }
        })
    } else {
        None
    };

    let mut out = format!("T={} T1={} T2={}\n", labels.len(), counts.targets, counts.nontargets);
    for rule in &args.rules {
        let floor = rule.objective(&labels, &weighting.weights, &reference)?;
        match &calibrated {
            Some(c) => {
                let obj = rule.objective(&labels, &weighting.weights, c)?;
                out.push_str(&format!(
                    "rule={rule} calibrated={obj} reference={floor} ratio={}\n",
                    ratio(obj, floor)
                ));
            }
            None => out.push_str(&format!("rule={rule} reference={floor}\n")),
        }
    }
    write_output(None, &out)
}

fn ratio(value: f64, floor: f64) -> f64 {
    if value == floor {
        1.0
    } else {
        value / floor
    }
}

fn run_selfcheck(args: SelfcheckArgs) -> Result<(), CliError> {
    if args.max_len == 0 || args.max_len > MAX_SELFCHECK_LEN {
        return Err(CliError::Usage(format!(
            "--max-len must be between 1 and {MAX_SELFCHECK_LEN}"
        )));
    }
    let config = selfcheck::Config {
        max_len: args.max_len,
        weights: args.weights.map_or_else(selfcheck::default_weights, |w| vec![w]),
        instances: args.instances,
        candidates: args.candidates,
        seed: args.seed,
        perf: args.perf,
        ..selfcheck::Config::default()
    };
    let report = selfcheck::run(&config);
    println!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::SelfcheckFailed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_flag() {
        let w = parse_weights("2.5,0.7").unwrap();
        assert_eq!((w.v1(), w.v2()), (2.5, 0.7));
        assert!(parse_weights("2.5").is_err());
        assert!(parse_weights("0,1").is_err());
        assert!(parse_weights("a,1").is_err());
    }

    #[test]
    fn ratio_of_equal_objectives_is_one() {
        assert_eq!(ratio(0.0, 0.0), 1.0);
        assert_eq!(ratio(2.0, 1.0), 2.0);
        assert_eq!(ratio(1.0, 0.0), f64::INFINITY);
    }
}
