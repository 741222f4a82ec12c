//! Synthetic datasets with known conditional entropy.
//!
//! Each run writes `<out>` as CSV and `<out>` with a `.json` extension holding
//! the generator settings and the oracle entropy of the target given the
//! features, in bits per instance.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use intdist::numcore::round_half_up;
use intdist::oracle::entropy_bits;
use intdist::{DalapParams, Discrete, Params, Support};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Kind {
    /// y = 7 with one uninformative feature
    Constant,
    /// y = round(3 x1 - 2 x2)
    Linear,
    /// Dalap draws with no features
    DalapNoise,
    /// y = round(5 x) plus the difference of two geometric draws
    GeometricNoise,
    /// Draws from any family given by --family/--params, no features
    Dist,
}

#[derive(clap::Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Location for dalap-noise
    #[arg(long, default_value_t = 3.7, allow_hyphen_values = true)]
    mu: f64,
    /// Decay for dalap-noise (default 0.3) or the geometric ratio for geometric-noise (default 0.7)
    #[arg(long)]
    gamma: Option<f64>,
    /// Family for --kind dist
    #[arg(long)]
    family: Option<String>,
    /// Parameters for --kind dist, e.g. mu=0,sigma=2
    #[arg(long, allow_hyphen_values = true)]
    params: Option<String>,
    #[arg(long, default_value = "unbounded", allow_hyphen_values = true)]
    support: String,
    #[arg(long)]
    bits: Option<usize>,
}

fn write_csv(header: &[&str], rows: impl Iterator<Item = (Vec<f64>, i64)>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for (x, y) in rows {
        for v in x {
            write!(s, "{v},").unwrap();
        }
        writeln!(s, "{y}").unwrap();
    }
    s
}

/// `P(G = k) = (1 - ratio) ratio^k` on `k >= 0`, by inversion.
fn geometric<R: Rng>(ratio: f64, rng: &mut R) -> i64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    (u.ln() / ratio.ln()).floor() as i64
}

pub fn run(a: &SynthArgs) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let n = a.n;
    if n == 0 {
        bail!("--n must be positive");
    }
    let (csv, meta) = match a.kind {
        Kind::Constant => {
            let rows: Vec<_> = (0..n).map(|_| (vec![rng.random_range(-1.0..1.0)], 7)).collect();
            (write_csv(&["x", "y"], rows.into_iter()), json!({ "entropy_bits": 0.0, "value": 7 }))
        }
        Kind::Linear => {
            let rows: Vec<_> = (0..n)
                .map(|_| {
                    let (x1, x2) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                    let y = round_half_up(3.0 * x1 - 2.0 * x2)?;
                    Ok((vec![x1, x2], y))
                })
                .collect::<Result<_>>()?;
            (write_csv(&["x1", "x2", "y"], rows.into_iter()), json!({ "entropy_bits": 0.0 }))
        }
        Kind::DalapNoise | Kind::Dist => {
            let (d, support) = match a.kind {
                Kind::Dist => {
                    let (Some(family), Some(params)) = (&a.family, &a.params) else {
                        bail!("--kind dist needs --family and --params");
                    };
                    super::DistArgs {
                        family: family.clone(),
                        params: params.clone(),
                        support: a.support.clone(),
                        bits: a.bits,
                    }
                    .build()?
                }
                _ => (Params::Dalap(DalapParams::new(a.mu, a.gamma.unwrap_or(0.3))?), Support::Unbounded),
            };
            let ys = (0..n).map(|_| d.sample(support, &mut rng)).collect::<intdist::Result<Vec<_>>>()?;
            let meta = json!({
                "family": d.family().name(),
                "params": format!("{d:?}"),
                "support": support.to_string(),
                "entropy_bits": entropy_bits(&d, support)?,
                "mean": d.mean(support)?,
            });
            (write_csv(&["y"], ys.into_iter().map(|y| (vec![], y))), meta)
        }
        Kind::GeometricNoise => {
            let ratio = a.gamma.unwrap_or(0.7);
            if !(ratio > 0.0 && ratio < 1.0) {
                bail!("geometric ratio must lie in (0, 1)");
            }
            let rows: Vec<_> = (0..n)
                .map(|_| {
                    let x: f64 = rng.random_range(0.0..4.0);
                    let noise = geometric(ratio, &mut rng) - geometric(ratio, &mut rng);
                    Ok((vec![x], round_half_up(5.0 * x)? + noise))
                })
                .collect::<Result<_>>()?;
            // the difference of two iid geometrics is Dalap at an integer location
            let noise = DalapParams::new(0.0, ratio)?;
            let meta = json!({
                "ratio": ratio,
                "entropy_bits": entropy_bits(&Params::Dalap(noise), Support::Unbounded)?,
            });
            (write_csv(&["x", "y"], rows.into_iter()), meta)
        }
    };
    std::fs::write(&a.out, csv).with_context(|| format!("writing {}", a.out.display()))?;
    let mut meta = meta;
    meta["kind"] = json!(a.kind.to_possible_value().expect("named kind").get_name());
    meta["n"] = json!(n);
    meta["seed"] = json!(a.seed);
    let side = a.out.with_extension("json");
    std::fs::write(&side, serde_json::to_string_pretty(&meta)?).with_context(|| format!("writing {}", side.display()))?;
    eprintln!("wrote {} and {}", a.out.display(), side.display());
    Ok(())
}
