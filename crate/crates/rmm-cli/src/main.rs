//! Command-line front end: experiments and the verification suite, with
//! machine-readable CSV/JSON output.
//!
//! Every row of every table carries `(seed, stream_id, trials)`, and the
//! same configuration with the same seed produces byte-identical output
//! regardless of `--threads` (trial `i` always uses stream `base + i`).

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use rmm::checks::{run_verify, VerifyConfig};
use rmm::engine::{rmm as merge, MassVector};
use rmm::field::{CounterRng, ThresholdField};
use rmm::oracle::enumerate_law;
use rmm::relation::Relation;
use rmm::sbm::{largest_component_size, SbmMode, SbmParams};
use rmm::stats::{estimate_mean, ks_statistic};
use rmm::Error;

#[derive(Parser)]
#[command(name = "rmm", version, about = "Simulation and verification toolkit for restricted multiplicative merging")]
struct Cli {
    /// Base seed; recorded in every output row.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker threads (default: logical cores). Never changes results.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run the property/bound verification suite; exit 0 iff all pass.
    Verify {
        /// Run only the named checks (repeatable).
        #[arg(long)]
        only: Vec<String>,
        /// Reduced trial counts for smoke runs.
        #[arg(long)]
        quick: bool,
    },
    /// Distributional convergence of the rescaled block-model largest
    /// component: KS distances between consecutive sizes in the list.
    Convergence {
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long, default_value_t = 1.0)]
        u: f64,
        /// Class count m.
        #[arg(long, default_value_t = 2)]
        classes: usize,
        /// Comma-separated per-class vertex counts.
        #[arg(long, default_value = "100,400,1600")]
        n_list: String,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
    },
    /// Largest-component tail probabilities along a connectivity schedule.
    PhaseSweep {
        /// Schedule: `critical`, `super` (above the window) or `sub`
        /// (below the window).
        #[arg(long)]
        regime: Regime,
        #[arg(long, default_value = "200,800,3200")]
        n_list: String,
        #[arg(long, default_value_t = 2)]
        classes: usize,
        /// Window coordinates used by the critical schedule (and `u` by
        /// all schedules for the inter-class probability).
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long, default_value_t = 1.0)]
        u: f64,
        /// Report P{ n^(-2/3) * largest > threshold }.
        #[arg(long, default_value_t = 1.0)]
        threshold: f64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Monte Carlo fourth-power moments of the merge with confidence
    /// intervals, against the closed-form ceiling where it applies.
    Moments {
        /// Comma-separated masses.
        #[arg(long)]
        x: String,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
    /// Exact component-mass law of a small instance by enumeration.
    Oracle {
        #[arg(long)]
        x: String,
        #[arg(long, default_value = "maximal")]
        relation: String,
        #[arg(long)]
        t: f64,
    },
    /// Raw merge samples (one row per trial).
    Sample {
        #[arg(long)]
        x: String,
        #[arg(long, default_value = "maximal")]
        relation: String,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Regime {
    /// Inside the near-critical window.
    Critical,
    /// Connectivity above the window: the rescaled largest component
    /// diverges.
    Super,
    /// Connectivity below the window: the rescaled largest component
    /// vanishes.
    Sub,
}

/// Ordered output table; CSV renders the header row, JSON an array of
/// objects in column order.
struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<serde_json::Value>>,
}

impl Table {
    fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<serde_json::Value>) {
        assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = String::new();
                out.push_str(&self.columns.join(","));
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(csv_cell).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let objects: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let mut map = serde_json::Map::new();
                        for (c, v) in self.columns.iter().zip(row) {
                            map.insert((*c).to_string(), v.clone());
                        }
                        serde_json::Value::Object(map)
                    })
                    .collect();
                let mut text = serde_json::to_string_pretty(&objects).unwrap();
                text.push('\n');
                text
            }
        }
    }
}

fn csv_cell(value: &serde_json::Value) -> String {
    let raw = match value {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    if raw.contains(',') || raw.contains('"') || raw.contains('\n') {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw
    }
}

fn num(v: f64) -> serde_json::Value {
    serde_json::Number::from_f64(v)
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}

fn parse_masses(text: &str) -> Result<MassVector, Error> {
    let masses: Result<Vec<f64>, _> = text
        .split(',')
        .map(|s| f64::from_str(s.trim()))
        .collect();
    let masses =
        masses.map_err(|e| Error::Usage(format!("bad mass list {text:?}: {e}")))?;
    if masses.is_empty() || masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
        return Err(Error::Usage(format!(
            "mass list {text:?} must be nonempty, finite and nonnegative"
        )));
    }
    Ok(MassVector::new(masses))
}

fn parse_n_list(text: &str) -> Result<Vec<usize>, Error> {
    let ns: Result<Vec<usize>, _> = text
        .split(',')
        .map(|s| usize::from_str(s.trim()))
        .collect();
    let ns = ns.map_err(|e| Error::Usage(format!("bad size list {text:?}: {e}")))?;
    if ns.is_empty() {
        return Err(Error::Usage("size list is empty".into()));
    }
    Ok(ns)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(all_passed) => {
            if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), Error> {
    match &cli.out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Usage(format!("cannot write {}: {e}", path.display()))),
    }
}

fn run(cli: &Cli) -> Result<bool, Error> {
    match &cli.command {
        Command::Verify { only, quick } => cmd_verify(cli, only, *quick),
        Command::Convergence {
            t,
            u,
            classes,
            n_list,
            trials,
        } => cmd_convergence(cli, *t, *u, *classes, n_list, *trials),
        Command::PhaseSweep {
            regime,
            n_list,
            classes,
            t,
            u,
            threshold,
            trials,
        } => cmd_phase_sweep(cli, *regime, n_list, *classes, *t, *u, *threshold, *trials),
        Command::Moments { x, t, trials } => cmd_moments(cli, x, *t, *trials),
        Command::Oracle { x, relation, t } => cmd_oracle(cli, x, relation, *t),
        Command::Sample {
            x,
            relation,
            t,
            trials,
        } => cmd_sample(cli, x, relation, *t, *trials),
    }
}

fn cmd_verify(cli: &Cli, only: &[String], quick: bool) -> Result<bool, Error> {
    let mut config = if quick {
        VerifyConfig::quick(cli.seed)
    } else {
        VerifyConfig {
            seed: cli.seed,
            ..VerifyConfig::default()
        }
    };
    if !only.is_empty() {
        config.only = Some(only.to_vec());
    }
    let report = run_verify(&config)?;
    let text = match cli.format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(&report).unwrap();
            text.push('\n');
            text
        }
        Format::Csv => {
            let mut table = Table::new(vec![
                "check", "passed", "lhs", "rhs", "detail", "trials", "seed", "stream_id",
            ]);
            for c in &report.checks {
                table.push(vec![
                    c.name.into(),
                    c.passed.into(),
                    num(c.lhs),
                    num(c.rhs),
                    c.detail.clone().into(),
                    c.trials.into(),
                    c.seed.into(),
                    c.stream_id.into(),
                ]);
            }
            table.render(Format::Csv)
        }
    };
    emit(cli, &text)?;
    Ok(report.passed)
}

/// Rescaled largest-component samples of the near-critical block model,
/// fast mode, one stream per trial.
fn largest_samples(
    seed: u64,
    base: u64,
    n: usize,
    m: usize,
    t: f64,
    u: f64,
    trials: usize,
) -> Result<Vec<f64>, Error> {
    let params = SbmParams {
        n,
        m,
        mode: SbmMode::Critical { t, u },
    };
    let (p, q) = params.edge_probabilities()?;
    let scale = (n as f64).powf(-2.0 / 3.0);
    Ok((0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = CounterRng::new(seed, base + k);
            largest_component_size(n, m, p, q, &mut rng) as f64 * scale
        })
        .collect())
}

fn cmd_convergence(
    cli: &Cli,
    t: f64,
    u: f64,
    classes: usize,
    n_list: &str,
    trials: usize,
) -> Result<bool, Error> {
    if trials == 0 {
        return Err(Error::Usage("convergence needs trials >= 1".into()));
    }
    if classes == 0 {
        return Err(Error::Usage("class count must be >= 1".into()));
    }
    let ns = parse_n_list(n_list)?;
    let mut samples = Vec::new();
    for (idx, &n) in ns.iter().enumerate() {
        let base = (idx as u64) << 32;
        samples.push((n, base, largest_samples(cli.seed, base, n, classes, t, u, trials)?));
    }
    let mut table = Table::new(vec![
        "n_small", "n_large", "ks_distance", "trials", "seed", "stream_id",
    ]);
    for pair in samples.windows(2) {
        let (n_a, base_a, ref a) = pair[0];
        let (n_b, _, ref b) = pair[1];
        table.push(vec![
            n_a.into(),
            n_b.into(),
            num(ks_statistic(a, b)),
            trials.into(),
            cli.seed.into(),
            base_a.into(),
        ]);
    }
    emit(cli, &table.render(cli.format))?;
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn cmd_phase_sweep(
    cli: &Cli,
    regime: Regime,
    n_list: &str,
    classes: usize,
    t: f64,
    u: f64,
    threshold: f64,
    trials: usize,
) -> Result<bool, Error> {
    if trials == 0 {
        return Err(Error::Usage("phase-sweep needs trials >= 1".into()));
    }
    if classes == 0 {
        return Err(Error::Usage("class count must be >= 1".into()));
    }
    let ns = parse_n_list(n_list)?;
    let regime_name = match regime {
        Regime::Critical => "critical",
        Regime::Super => "super",
        Regime::Sub => "sub",
    };
    let mut table = Table::new(vec![
        "regime",
        "n",
        "classes",
        "probability",
        "ci_low",
        "ci_high",
        "trials",
        "seed",
        "stream_id",
    ]);
    for (idx, &n) in ns.iter().enumerate() {
        let nf = n as f64;
        let p = match regime {
            Regime::Critical => 1.0 / nf + t * nf.powf(-4.0 / 3.0),
            Regime::Super => 1.0 / nf + nf.powf(-1.2),
            Regime::Sub => 1.0 / nf - nf.powf(-1.2),
        };
        let q = u * nf.powf(-4.0 / 3.0);
        if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain(format!(
                "schedule leaves [0,1] at n = {n}: p = {p}, q = {q}"
            )));
        }
        let base = (idx as u64) << 32;
        let scale = nf.powf(-2.0 / 3.0);
        let indicators: Vec<f64> = (0..trials as u64)
            .into_par_iter()
            .map(|k| {
                let mut rng = CounterRng::new(cli.seed, base + k);
                let largest = largest_component_size(n, classes, p, q, &mut rng) as f64;
                if largest * scale > threshold {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let est = estimate_mean(&indicators, 0.99)?;
        table.push(vec![
            regime_name.into(),
            n.into(),
            classes.into(),
            num(est.mean),
            num(est.lower().max(0.0)),
            num(est.upper().min(1.0)),
            trials.into(),
            cli.seed.into(),
            base.into(),
        ]);
    }
    emit(cli, &table.render(cli.format))?;
    Ok(true)
}

fn cmd_moments(cli: &Cli, x: &str, t: f64, trials: usize) -> Result<bool, Error> {
    if trials < 2 {
        return Err(Error::Usage("moments needs trials >= 2".into()));
    }
    if t < 0.0 {
        return Err(Error::Domain("merge time must be nonnegative".into()));
    }
    let x = parse_masses(x)?;
    let rows: Vec<(f64, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let field = ThresholdField::new(cli.seed, k);
            let out = merge(&x, &field, &Relation::Maximal, t);
            (out.norm_sq() * out.norm_sq(), out.power_sum(4))
        })
        .collect();
    let norm4: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let comp4: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let bound = if t > 0.0 && t * x.norm_sq() < 1.0 {
        num(rmm::bounds::fourth_norm_bound(&x, t)?)
    } else {
        serde_json::Value::Null
    };
    let mut table = Table::new(vec![
        "quantity", "mean", "ci_low", "ci_high", "bound", "trials", "seed", "stream_id",
    ]);
    for (name, samples, bound) in [
        ("norm_fourth_power", &norm4, serde_json::Value::Null),
        ("component_fourth_power_sum", &comp4, bound),
    ] {
        let est = estimate_mean(samples, 0.99)?;
        table.push(vec![
            name.into(),
            num(est.mean),
            num(est.lower()),
            num(est.upper()),
            bound,
            trials.into(),
            cli.seed.into(),
            0u64.into(),
        ]);
    }
    emit(cli, &table.render(cli.format))?;
    Ok(true)
}

fn cmd_oracle(cli: &Cli, x: &str, relation: &str, t: f64) -> Result<bool, Error> {
    if t < 0.0 {
        return Err(Error::Domain("merge time must be nonnegative".into()));
    }
    let x = parse_masses(x)?;
    let relation: Relation = relation.parse()?;
    let law = enumerate_law(&x, &relation, t)?;
    let mut table = Table::new(vec![
        "masses", "probability", "trials", "seed", "stream_id",
    ]);
    for (outcome, p) in &law.outcomes {
        let mut text = String::new();
        for (k, m) in outcome.as_slice().iter().enumerate() {
            if k > 0 {
                text.push(';');
            }
            let _ = write!(text, "{m}");
        }
        table.push(vec![
            text.into(),
            num(*p),
            0usize.into(),
            cli.seed.into(),
            0u64.into(),
        ]);
    }
    emit(cli, &table.render(cli.format))?;
    Ok(true)
}

fn cmd_sample(
    cli: &Cli,
    x: &str,
    relation: &str,
    t: f64,
    trials: usize,
) -> Result<bool, Error> {
    if trials == 0 {
        return Err(Error::Usage("sample needs trials >= 1".into()));
    }
    if t < 0.0 {
        return Err(Error::Domain("merge time must be nonnegative".into()));
    }
    let x = parse_masses(x)?;
    let relation: Relation = relation.parse()?;
    let rows: Vec<(f64, f64, usize)> = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let field = ThresholdField::new(cli.seed, k);
            let out = merge(&x, &field, &relation, t);
            (out.norm_sq(), out.largest(), out.len_nonzero())
        })
        .collect();
    let mut table = Table::new(vec![
        "trial", "norm_sq", "largest", "blocks", "trials", "seed", "stream_id",
    ]);
    for (k, (norm_sq, largest, blocks)) in rows.into_iter().enumerate() {
        table.push(vec![
            k.into(),
            num(norm_sq),
            num(largest),
            blocks.into(),
            trials.into(),
            cli.seed.into(),
            (k as u64).into(),
        ]);
    }
    emit(cli, &table.render(cli.format))?;
    Ok(true)
}
