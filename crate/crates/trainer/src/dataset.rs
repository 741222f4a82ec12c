//! Tabular datasets with integer targets.
//!
//! A CSV file has a header row, real-valued feature columns, one integer
//! target column and optionally a `split` column holding `train`, `valid` or
//! `test`. Without a split column rows are shuffled under the seed and cut
//! 70/10/20.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use intdist::Support;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, TrainError};

pub const SPLIT_COLUMN: &str = "split";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "train" => Ok(Split::Train),
            "valid" | "validation" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?} (expected train, valid or test)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    /// one row per instance
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<i64>,
    pub splits: Vec<Split>,
}

/// Parse an integer target. Integral decimals such as `7.0` are accepted.
fn parse_target(s: &str) -> std::result::Result<i64, String> {
    let s = s.trim();
    if let Ok(v) = s.parse::<i64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v.fract() == 0.0 && v.abs() < 9.0e15 => Ok(v as i64),
        Ok(_) => Err(format!("target {s:?} is not an integer")),
        Err(_) => Err(format!("target {s:?} is not a number")),
    }
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, features: Vec<Vec<f64>>, targets: Vec<i64>, splits: Vec<Split>) -> Result<Self> {
        if features.len() != targets.len() || splits.len() != targets.len() {
            return Err(TrainError::Dataset("features, targets and splits differ in length".into()));
        }
        if let Some(i) = features.iter().position(|r| r.len() != feature_names.len()) {
            return Err(TrainError::Row {
                row: i + 1,
                msg: format!("expected {} features", feature_names.len()),
            });
        }
        Ok(Self {
            feature_names,
            features,
            targets,
            splits,
        })
    }

    /// Assign splits by a seeded 70/10/20 shuffle.
    pub fn with_random_split(feature_names: Vec<String>, features: Vec<Vec<f64>>, targets: Vec<i64>, seed: u64) -> Result<Self> {
        let splits = random_split(targets.len(), seed);
        Self::new(feature_names, features, targets, splits)
    }

    pub fn from_csv(path: impl AsRef<Path>, target: &str, seed: u64) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| TrainError::Dataset(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_reader(file, target, seed)
    }

    /// Row numbers in errors count data rows from 1, excluding the header.
    pub fn from_reader<R: Read>(reader: R, target: &str, seed: u64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let t_col = header
            .iter()
            .position(|h| h == target)
            .ok_or_else(|| TrainError::Dataset(format!("no column named {target:?} (have {})", header.join(", "))))?;
        let s_col = header.iter().position(|h| h == SPLIT_COLUMN);
        let f_cols: Vec<usize> = (0..header.len()).filter(|&i| i != t_col && Some(i) != s_col).collect();
        let feature_names = f_cols.iter().map(|&i| header[i].clone()).collect();

        let (mut features, mut targets, mut splits) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| TrainError::Row { row, msg: e.to_string() })?;
            let err = |msg: String| TrainError::Row { row, msg };
            targets.push(parse_target(&rec[t_col]).map_err(err)?);
            let x = f_cols
                .iter()
                .map(|&c| {
                    rec[c]
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| err(format!("feature {:?} has non-numeric value {:?}", header[c], &rec[c])))
                })
                .collect::<Result<Vec<f64>>>()?;
            features.push(x);
            if let Some(c) = s_col {
                splits.push(rec[c].parse::<Split>().map_err(err)?);
            }
        }
        if targets.is_empty() {
            return Err(TrainError::Dataset("no data rows".into()));
        }
        if s_col.is_none() {
            splits = random_split(targets.len(), seed);
        }
        Self::new(feature_names, features, targets, splits)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.splits[i] == split).collect()
    }

    /// First row whose target falls outside `support`.
    pub fn check_support(&self, support: Support) -> Result<()> {
        match self.targets.iter().position(|&t| !support.contains(t)) {
            Some(i) => Err(TrainError::Row {
                row: i + 1,
                msg: format!("target {} outside support {support}", self.targets[i]),
            }),
            None => Ok(()),
        }
    }
}

/// Seeded 70/10/20 assignment of `n` rows.
pub fn random_split(n: usize, seed: u64) -> Vec<Split> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (n as f64 * 0.7).round() as usize;
    let n_valid = (n as f64 * 0.1).round() as usize;
    let mut splits = vec![Split::Test; n];
    for (rank, &i) in order.iter().enumerate() {
        if rank < n_train {
            splits[i] = Split::Train;
        } else if rank < n_train + n_valid {
            splits[i] = Split::Valid;
        }
    }
    splits
}
