//! `intdist`: fit, evaluate, inspect and sample integer distributions.

mod synth;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use intdist::bitwise::covering;
use intdist::checks;
use intdist::{Discrete, Family, Params, Support};
use intdist_train::{evaluate_splits, train, Checkpoint, Dataset, Loss, Metrics, SplitMetrics, TrainConfig};

#[derive(Parser)]
#[command(name = "intdist", version, about = "Distributions on the integers with continuous parameters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a CSV file and write a checkpoint
    Fit(FitArgs),
    /// Score a checkpoint on a CSV file
    Evaluate(EvalArgs),
    /// Print a probability mass table
    Pmf(PmfArgs),
    /// Draw samples, one per line
    Sample(SampleArgs),
    /// Run the property suite against the brute-force oracle
    Check,
    /// Write a synthetic dataset and its metadata sidecar
    Synth(synth::SynthArgs),
}

#[derive(clap::Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "y")]
    target: String,
    /// dalap, danorm, dnormal, dlaplace, dlogistic, dweib, bitwise or sqerr
    #[arg(long)]
    family: String,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value = "unbounded", allow_hyphen_values = true)]
    support: String,
    /// Bitwise magnitude bits (bitwise only)
    #[arg(long)]
    bits: Option<usize>,
    /// A learning rate, or "sweep" for the six-rate sweep
    #[arg(long, default_value = "sweep")]
    lr: String,
    #[arg(long, default_value_t = intdist_train::train::DEFAULT_EPOCHS)]
    epochs: usize,
    #[arg(long, default_value_t = intdist_train::train::DEFAULT_BATCH)]
    batch_size: usize,
    #[arg(long, default_value_t = intdist_train::train::DEFAULT_HIDDEN)]
    hidden: usize,
    #[arg(long, default_value_t = intdist_train::train::DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

#[derive(clap::Args)]
struct DistArgs {
    #[arg(long)]
    family: String,
    /// Comma-separated name=value pairs, e.g. mu=0,gamma=0.5
    #[arg(long, allow_hyphen_values = true)]
    params: String,
    #[arg(long, default_value = "unbounded", allow_hyphen_values = true)]
    support: String,
    /// Bitwise magnitude bits; defaults to the smallest count covering a bounded support
    #[arg(long)]
    bits: Option<usize>,
}

#[derive(clap::Args)]
struct PmfArgs {
    #[command(flatten)]
    dist: DistArgs,
    /// Inclusive range a:b
    #[arg(long, allow_hyphen_values = true)]
    range: String,
}

#[derive(clap::Args)]
struct SampleArgs {
    #[command(flatten)]
    dist: DistArgs,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn parse_pairs(s: &str) -> Result<Vec<(String, f64)>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (k, v) = t.split_once('=').with_context(|| format!("expected name=value, got {t:?}"))?;
            let v: f64 = v.trim().parse().with_context(|| format!("bad value in {t:?}"))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn parse_support(s: &str) -> Result<Support> {
    s.parse::<Support>().with_context(|| format!("bad support {s:?}"))
}

impl DistArgs {
    /// The distribution and the support it is served on.
    fn build(&self) -> Result<(Params, Support)> {
        let family: Family = self.family.parse().map_err(|e| anyhow::anyhow!("{e}"))?;
        let support = parse_support(&self.support)?;
        let layout = match (family, self.bits) {
            (Family::Bitwise, Some(k)) => Some((k, support.low().is_none_or(|l| l < 0))),
            (Family::Bitwise, None) => Some(covering(support)?),
            (_, Some(_)) => bail!("--bits applies to bitwise only"),
            (_, None) => None,
        };
        let params = Params::from_assignments(family, &parse_pairs(&self.params)?, layout)?;
        let support = params.effective_support(support)?;
        Ok((params, support))
    }
}

fn fmt_bits(m: &Metrics) -> String {
    m.bits.map_or("NA".to_string(), |b| format!("{b:.6}"))
}

fn print_metrics(loss: Loss, k: usize, m: &SplitMetrics) {
    println!("{:<6} {:>10} {:>10} {:>7} {:>8}", "split", "bits", "rmse", "n", "outside");
    for (name, r) in [("train", &m.train), ("valid", &m.valid), ("test", &m.test)] {
        println!(
            "{name:<6} {:>10} {:>10.6} {:>7} {:>8}",
            fmt_bits(r),
            r.rmse,
            r.count,
            r.out_of_support
        );
    }
    println!("RESULT family={loss} k={k} bits={} rmse={:.6}", fmt_bits(&m.test), m.test.rmse);
}

fn fit(a: &FitArgs) -> Result<()> {
    let loss: Loss = a.family.parse()?;
    let mut config = TrainConfig::new(loss);
    config.k = a.k;
    config.support = parse_support(&a.support)?;
    config.bits = a.bits;
    config.epochs = a.epochs;
    config.batch_size = a.batch_size;
    config.hidden_dim = a.hidden;
    config.seed = a.seed;
    if a.lr != "sweep" {
        let lr: f64 = a.lr.parse().with_context(|| format!("--lr takes a number or \"sweep\", got {:?}", a.lr))?;
        config.learning_rates = vec![lr];
    }
    config.validate()?;
    // fail on inconsistent flags before reading data
    config.head()?;
    let data = Dataset::from_csv(&a.data, &a.target, a.seed).with_context(|| format!("loading {}", a.data.display()))?;
    let out = train(&data, &config)?;
    for p in &out.sweep {
        match (&p.diverged, p.best_valid, p.best_epoch) {
            (Some(why), _, _) => println!("lr {:<8e} diverged: {why}", p.lr),
            (None, Some(v), Some(e)) => println!("lr {:<8e} best valid {v:.6} at epoch {e}", p.lr),
            _ => {}
        }
    }
    println!("selected lr {:e}", out.selected_lr);
    print_metrics(loss, config.k, &out.metrics);
    if let Some(path) = &a.out {
        Checkpoint::from_outcome(&out, &config, &a.target, &data.feature_names)
            .save(path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn evaluate(a: &EvalArgs) -> Result<()> {
    let ck = Checkpoint::load(&a.checkpoint).with_context(|| format!("reading {}", a.checkpoint.display()))?;
    let model = ck.model()?;
    let data = Dataset::from_csv(&a.data, &ck.target, ck.seed).with_context(|| format!("loading {}", a.data.display()))?;
    if data.feature_names != ck.feature_names {
        bail!("data columns {:?} do not match the checkpoint's {:?}", data.feature_names, ck.feature_names);
    }
    let m = evaluate_splits(&model, &data)?;
    print_metrics(model.head.loss(), ck.k, &m);
    Ok(())
}

/// Stdout writes that end quietly when the reader goes away, as with `| head`.
fn quiet_pipe(r: io::Result<()>) -> Result<()> {
    match r {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn pmf(a: &PmfArgs) -> Result<()> {
    let (d, support) = a.dist.build()?;
    let (lo, hi) = a.range.split_once(':').context("--range takes a:b")?;
    let (lo, hi): (i64, i64) = (lo.trim().parse()?, hi.trim().parse()?);
    if lo > hi {
        bail!("empty range {lo}:{hi}");
    }
    let mut rows = Vec::new();
    for n in lo..=hi {
        let lp = if support.contains(n) { d.log_prob(n, support)? } else { f64::NEG_INFINITY };
        rows.push((n, lp));
    }
    let inside: f64 = rows.iter().map(|(_, lp)| lp.exp()).sum();
    let mut out = io::stdout().lock();
    quiet_pipe((|| {
        writeln!(out, "{:>8} {:>22} {:>14}", "n", "p(n)", "-log2 p(n)")?;
        for (n, lp) in &rows {
            writeln!(out, "{n:>8} {:>22.15e} {:>14.6}", lp.exp(), -lp / std::f64::consts::LN_2)?;
        }
        writeln!(out, "mass outside range: {:.3e}", (1.0 - inside).max(0.0))
    })())
}

fn sample(a: &SampleArgs) -> Result<()> {
    let (d, support) = a.dist.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut out = String::new();
    for _ in 0..a.n {
        out.push_str(&d.sample(support, &mut rng)?.to_string());
        out.push('\n');
    }
    quiet_pipe(io::stdout().lock().write_all(out.as_bytes()))
}

fn check() -> Result<bool> {
    let rows = checks::run_all();
    for r in &rows {
        println!("{r}");
    }
    let failed = rows.iter().filter(|r| !r.passed).count();
    println!("{} of {} properties passed", rows.len() - failed, rows.len());
    Ok(failed == 0)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Fit(a) => fit(&a).map(|_| true),
        Command::Evaluate(a) => evaluate(&a).map(|_| true),
        Command::Pmf(a) => pmf(&a).map(|_| true),
        Command::Sample(a) => sample(&a).map(|_| true),
        Command::Check => check(),
        Command::Synth(a) => synth::run(&a).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
