//! Voting field-experiment ingestion: CSV loading with a configurable
//! column mapping, the biased study/target split, and covariate
//! standardization.
//!
//! The expected schema is documented in `docs/voting-schema.md`. Only the
//! Control and Neighbors actions are kept (design propensity
//! e = (1/9) / (1/9 + 5/9) = 1/6). Whether a unit voted in the 2004
//! primary is treated as the unobserved variable driving the split.

use std::collections::HashMap;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::synthetic::{stream_rng, STREAM_SPLIT};
use crate::types::ObservedSample;

/// Design treatment probability of the Control/Neighbors subset.
pub const VOTING_PROPENSITY: f64 = 1.0 / 6.0;

/// Election year used to derive age from a year-of-birth column.
const ELECTION_YEAR: f64 = 2006.0;

/// Logical column roles resolved against the CSV header.
#[derive(Debug, Clone)]
pub struct VotingSchema {
    /// logical name -> CSV header name.
    pub columns: HashMap<String, String>,
}

const LOGICAL_COLUMNS: [&str; 11] = [
    "household_size",
    "age",
    "sex",
    "g2000",
    "g2002",
    "g2004",
    "p2000",
    "p2002",
    "p2004",
    "treatment",
    "outcome",
];

impl Default for VotingSchema {
    /// Column names of the public release of the dataset. `age` maps to
    /// `yob` and is derived as 2006 − yob.
    fn default() -> Self {
        let pairs = [
            ("household_size", "hh_size"),
            ("age", "yob"),
            ("sex", "sex"),
            ("g2000", "g2000"),
            ("g2002", "g2002"),
            ("g2004", "g2004"),
            ("p2000", "p2000"),
            ("p2002", "p2002"),
            ("p2004", "p2004"),
            ("treatment", "treatment"),
            ("outcome", "voted"),
        ];
        VotingSchema {
            columns: pairs.iter().map(|(l, c)| (l.to_string(), c.to_string())).collect(),
        }
    }
}

impl VotingSchema {
    /// Overrides from a `logical = csv_header` mapping file; lines starting
    /// with `#` are comments.
    pub fn from_mapping_file(path: &Path) -> Result<Self> {
        let mut schema = VotingSchema::default();
        let text = std::fs::read_to_string(path)?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Data(format!("mapping line {} is not key = value", lineno + 1)))?;
            let key = key.trim();
            if !LOGICAL_COLUMNS.contains(&key) {
                return Err(Error::Data(format!("unknown logical column '{key}'")));
            }
            schema.columns.insert(key.to_string(), value.trim().to_string());
        }
        Ok(schema)
    }
}

/// One Control/Neighbors record. Binary flags are 0/1; `u` is the 2004
/// primary participation used only to construct the biased split.
#[derive(Debug, Clone, PartialEq)]
pub struct VotingRecord {
    pub household_size: f64,
    pub age: f64,
    pub sex: u8,
    pub g2000: u8,
    pub g2002: u8,
    pub g2004: u8,
    pub p2000: u8,
    pub p2002: u8,
    pub u: u8,
    pub w: u8,
    pub y: u8,
}

impl VotingRecord {
    /// Covariate order: household size, age, sex, generals 2000–2004,
    /// primaries 2000–2002.
    pub fn covariates(&self) -> Vec<f64> {
        vec![
            self.household_size,
            self.age,
            f64::from(self.sex),
            f64::from(self.g2000),
            f64::from(self.g2002),
            f64::from(self.g2004),
            f64::from(self.p2000),
            f64::from(self.p2002),
        ]
    }

    pub fn to_observed(&self) -> ObservedSample {
        ObservedSample { x: self.covariates(), y: f64::from(self.y), w: self.w }
    }
}

/// Rows that failed validation, with 1-based line numbers and reasons.
#[derive(Debug, Clone, Default)]
pub struct RejectReport {
    pub rejects: Vec<(usize, String)>,
}

fn parse_flag(raw: &str) -> Option<u8> {
    let t = raw.trim().to_ascii_lowercase();
    match t.as_str() {
        "1" | "yes" | "y" | "true" => Some(1),
        "0" | "no" | "n" | "false" => Some(0),
        _ => None,
    }
}

fn parse_sex(raw: &str) -> Option<u8> {
    let t = raw.trim().to_ascii_lowercase();
    match t.as_str() {
        "male" | "m" | "1" => Some(1),
        "female" | "f" | "0" => Some(0),
        _ => None,
    }
}

/// Loads the voting CSV, keeping Control (w=0) and Neighbors (w=1) rows.
/// Malformed rows are collected into the reject report; a missing
/// required column is fatal.
pub fn load_voting(path: &Path, schema: &VotingSchema) -> Result<(Vec<VotingRecord>, RejectReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("cannot read header: {e}")))?
        .clone();
    let mut index = HashMap::new();
    for logical in LOGICAL_COLUMNS {
        let wanted = &schema.columns[logical];
        let pos = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(wanted))
            .ok_or_else(|| Error::Data(format!("missing required column '{wanted}' (for {logical})")))?;
        index.insert(logical, pos);
    }

    let mut records = Vec::new();
    let mut report = RejectReport::default();
    for (i, row) in reader.records().enumerate() {
        let lineno = i + 2; // header is line 1
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                report.rejects.push((lineno, format!("unparseable row: {e}")));
                continue;
            }
        };
        let field = |logical: &str| row.get(index[logical]).unwrap_or("");

        let action = field("treatment").trim().to_ascii_lowercase();
        let w = match action.as_str() {
            "control" => 0,
            "neighbors" => 1,
            _ => continue, // other study arms are out of scope
        };

        let reject = |why: String, report: &mut RejectReport| {
            report.rejects.push((lineno, why));
        };
        let household_size: f64 = match field("household_size").parse() {
            Ok(v) => v,
            Err(_) => {
                reject(format!("bad household_size '{}'", field("household_size")), &mut report);
                continue;
            }
        };
        let age = {
            let raw: f64 = match field("age").parse() {
                Ok(v) => v,
                Err(_) => {
                    reject(format!("bad age '{}'", field("age")), &mut report);
                    continue;
                }
            };
            // A year of birth maps to age at the 2006 election.
            if raw > 1000.0 {
                ELECTION_YEAR - raw
            } else {
                raw
            }
        };
        if age <= 0.0 {
            report.rejects.push((lineno, format!("nonpositive age {age}")));
            continue;
        }
        let sex = match parse_sex(field("sex")) {
            Some(v) => v,
            None => {
                report.rejects.push((lineno, format!("bad sex '{}'", field("sex"))));
                continue;
            }
        };
        let mut flags = [0u8; 7];
        let mut bad_flag = None;
        for (slot, logical) in
            ["g2000", "g2002", "g2004", "p2000", "p2002", "p2004", "outcome"].iter().enumerate()
        {
            match parse_flag(field(logical)) {
                Some(v) => flags[slot] = v,
                None => {
                    bad_flag = Some(format!("bad {logical} '{}'", field(logical)));
                    break;
                }
            }
        }
        if let Some(why) = bad_flag {
            report.rejects.push((lineno, why));
            continue;
        }
        records.push(VotingRecord {
            household_size,
            age,
            sex,
            g2000: flags[0],
            g2002: flags[1],
            g2004: flags[2],
            p2000: flags[3],
            p2002: flags[4],
            u: flags[5],
            w,
            y: flags[6],
        });
    }
    Ok((records, report))
}

/// Study/target split: 75% of U=1 units and 25% of U=0 units form the
/// study pool (over-representing 2004 voters), split 60:40 into train and
/// validation; everything else is the target test set.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Vec<VotingRecord>,
    pub val: Vec<VotingRecord>,
    pub test: Vec<VotingRecord>,
}

pub fn semisynthetic_split(records: &[VotingRecord], seed: u64) -> Result<Split> {
    if records.is_empty() {
        return Err(Error::input("no records to split"));
    }
    let mut rng = stream_rng(seed, STREAM_SPLIT);
    let mut by_u: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, r) in records.iter().enumerate() {
        by_u[r.u as usize].push(i);
    }
    let mut pool = Vec::new();
    let mut test_idx = Vec::new();
    for (u, share) in [(1usize, 0.75f64), (0, 0.25)] {
        let group = &mut by_u[u];
        shuffle(group, &mut rng);
        let take = (share * group.len() as f64).round() as usize;
        pool.extend_from_slice(&group[..take]);
        test_idx.extend_from_slice(&group[take..]);
    }
    shuffle(&mut pool, &mut rng);
    let n_train = (0.6 * pool.len() as f64).round() as usize;
    let train = pool[..n_train].iter().map(|&i| records[i].clone()).collect();
    let val = pool[n_train..].iter().map(|&i| records[i].clone()).collect();
    test_idx.sort_unstable();
    let test = test_idx.iter().map(|&i| records[i].clone()).collect();
    Ok(Split { train, val, test })
}

fn shuffle(idx: &mut [usize], rng: &mut impl Rng) {
    for i in (1..idx.len()).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
}

/// Caches a split as CSV with a trailing `split` column
/// (train | val | test).
pub fn write_split_csv(path: &std::path::Path, split: &Split) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        out,
        "household_size,age,sex,g2000,g2002,g2004,p2000,p2002,u,w,y,split"
    )?;
    for (records, label) in
        [(&split.train, "train"), (&split.val, "val"), (&split.test, "test")]
    {
        for r in records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{label}",
                r.household_size,
                r.age,
                r.sex,
                r.g2000,
                r.g2002,
                r.g2004,
                r.p2000,
                r.p2002,
                r.u,
                r.w,
                r.y
            )?;
        }
    }
    Ok(())
}

/// Zero-mean unit-variance scaling fit on training covariates; constant
/// columns pass through unscaled.
#[derive(Debug, Clone)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit(xs: &[Vec<f64>]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::input("cannot fit a standardizer on no data"));
        }
        let d = xs[0].len();
        let n = xs.len() as f64;
        let mut mean = vec![0.0; d];
        for x in xs {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut sd = vec![0.0; d];
        for x in xs {
            for ((s, v), m) in sd.iter_mut().zip(x).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut sd {
            *s = (*s / n).sqrt();
            if *s < 1e-12 {
                *s = 1.0;
            }
        }
        Ok(Self { mean, sd })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.mean.iter().zip(&self.sd)).map(|(v, (m, s))| (v - m) / s).collect()
    }

    pub fn apply_observed(&self, samples: &[ObservedSample]) -> Vec<ObservedSample> {
        samples
            .iter()
            .map(|s| ObservedSample { x: self.apply(&s.x), y: s.y, w: s.w })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn fixture_csv(dir: &Path) -> std::path::PathBuf {
        let path = dir.join("voting.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "sex,yob,g2000,g2002,g2004,p2000,p2002,p2004,treatment,voted,hh_size").unwrap();
        // A Neighbors row, yes/no coded.
        writeln!(f, "male,1941,yes,yes,yes,no,yes,yes, Neighbors,Yes,2").unwrap();
        // A Control row.
        writeln!(f, "female,1970,no,yes,no,no,no,no, Control,No,1").unwrap();
        // Another arm: silently excluded.
        writeln!(f, "male,1980,no,no,yes,no,no,no, Civic Duty,Yes,3").unwrap();
        // Malformed outcome: rejected with its line number.
        writeln!(f, "female,1955,yes,no,yes,no,yes,no, Control,maybe,2").unwrap();
        // Bad year (age <= 0): rejected.
        writeln!(f, "female,2010,yes,no,yes,no,yes,no, Neighbors,Yes,2").unwrap();
        path
    }

    #[test]
    fn loads_and_filters_actions() {
        let dir = tempfile::tempdir().unwrap();
        let path = fixture_csv(dir.path());
        let (records, rejects) = load_voting(&path, &VotingSchema::default()).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].w, 1);
        assert_eq!(records[0].y, 1);
        assert_eq!(records[0].u, 1);
        assert_eq!(records[0].age, 65.0);
        assert_eq!(records[1].w, 0);
        assert_eq!(rejects.rejects.len(), 2);
        assert_eq!(rejects.rejects[0].0, 5);
        assert_eq!(rejects.rejects[1].0, 6);
        let x = records[0].covariates();
        assert_eq!(x.len(), 8);
        assert_eq!(x[0], 2.0);
    }

    #[test]
    fn missing_column_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "sex,yob\nmale,1970\n").unwrap();
        assert!(load_voting(&path, &VotingSchema::default()).is_err());
    }

    #[test]
    fn mapping_file_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let map = dir.path().join("map.txt");
        std::fs::write(&map, "# comment\noutcome = voted_aug06\n").unwrap();
        let schema = VotingSchema::from_mapping_file(&map).unwrap();
        assert_eq!(schema.columns["outcome"], "voted_aug06");
        assert_eq!(schema.columns["sex"], "sex");
        std::fs::write(&map, "nonsense = x\n").unwrap();
        assert!(VotingSchema::from_mapping_file(&map).is_err());
    }

    fn synthetic_records(n1: usize, n0: usize) -> Vec<VotingRecord> {
        let mut out = Vec::new();
        for i in 0..n1 + n0 {
            out.push(VotingRecord {
                household_size: 2.0,
                age: 40.0 + (i % 30) as f64,
                sex: (i % 2) as u8,
                g2000: 1,
                g2002: 0,
                g2004: 1,
                p2000: 0,
                p2002: 1,
                u: u8::from(i < n1),
                w: (i % 6 == 0) as u8,
                y: ((i / 2) % 2) as u8,
            });
        }
        out
    }

    #[test]
    fn split_follows_selection_rule() {
        let records = synthetic_records(600, 400);
        let split = semisynthetic_split(&records, 0).unwrap();
        let study = split.train.len() + split.val.len();
        // 0.75 * 600 + 0.25 * 400 = 550 in the study pool.
        assert_eq!(study, 550);
        assert_eq!(split.test.len(), 450);
        // 60:40 within the pool.
        assert_eq!(split.train.len(), 330);
        assert_eq!(split.val.len(), 220);
        let u1_study =
            split.train.iter().chain(&split.val).filter(|r| r.u == 1).count();
        assert_eq!(u1_study, 450);
        let u1_test = split.test.iter().filter(|r| r.u == 1).count();
        assert_eq!(u1_test, 150);
        // Partition: total counts match and the split is seed-stable.
        let again = semisynthetic_split(&records, 0).unwrap();
        assert_eq!(again.train, split.train);
        assert_eq!(again.val, split.val);
        assert_eq!(again.test, split.test);
        let other = semisynthetic_split(&records, 1).unwrap();
        assert_ne!(other.train, split.train);
    }

    #[test]
    fn split_csv_has_split_column() {
        let dir = tempfile::tempdir().unwrap();
        let records = synthetic_records(30, 20);
        let split = semisynthetic_split(&records, 0).unwrap();
        let path = dir.path().join("splits.csv");
        write_split_csv(&path, &split).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().ends_with(",split"));
        assert_eq!(lines.clone().filter(|l| l.ends_with(",train")).count(), split.train.len());
        assert_eq!(lines.clone().filter(|l| l.ends_with(",test")).count(), split.test.len());
        assert_eq!(text.lines().count(), 51);
    }

    #[test]
    fn standardizer_zero_mean_unit_sd() {
        let xs: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64, 5.0]).collect();
        let st = Standardizer::fit(&xs).unwrap();
        let scaled: Vec<Vec<f64>> = xs.iter().map(|x| st.apply(x)).collect();
        let mean0: f64 = scaled.iter().map(|x| x[0]).sum::<f64>() / 100.0;
        let var0: f64 = scaled.iter().map(|x| x[0] * x[0]).sum::<f64>() / 100.0;
        assert!(mean0.abs() < 1e-12);
        assert!((var0 - 1.0).abs() < 1e-9);
        // Constant column passes through centered but unscaled.
        assert!(scaled.iter().all(|x| x[1] == 0.0));
    }
}
