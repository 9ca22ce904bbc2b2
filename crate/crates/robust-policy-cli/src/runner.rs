//! Experiment orchestration: one independent cell per (Γ, seed), run on a
//! worker pool; each cell trains deterministically on its own streams.
//!
//! Dataset seeding: train and validation come from one draw of
//! `n_train + n_val` units at the dataset seed; the test set for target
//! index k uses seed `1_000_000 + 1_000·seed + k` so sweeps never reuse
//! training randomness. Re-running an identical config reproduces every
//! output byte-for-byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use robust_policy::eval::{
    aggregate, format_aggregate_table, ipw_policy_value, target_policy_value, write_aggregate_csv,
    write_reports_csv, EvaluationReport,
};
use robust_policy::ingest::{
    load_voting, semisynthetic_split, write_split_csv, Standardizer, VotingSchema,
    VOTING_PROPENSITY,
};
use robust_policy::oracle::{
    gain_policy, maxmin_policy, nonrobust_policy, write_policy_grid, ConditionalModel,
    HighDimConditional, ToyConditional,
};
use robust_policy::ru::{
    policy_from_model, train, write_checkpoint, Objective, RuModel, TrainConfig,
};
use robust_policy::synthetic::{generate_highdim, generate_toy, rct_observe, HighDimModel, ToyModel};
use robust_policy::types::{ObservedSample, Policy, PotentialOutcomeSample, RobustnessConfig};
use robust_policy::Error;

use crate::config::{ExperimentConfig, ExperimentKind};

pub fn test_seed(seed: u64, p_index: usize) -> u64 {
    1_000_000 + 1_000 * seed + p_index as u64
}

fn generate_pool(config: &ExperimentConfig, p: f64, n: usize, seed: u64) -> Vec<PotentialOutcomeSample> {
    match config.kind {
        ExperimentKind::Toy => generate_toy(&ToyModel::new(p).expect("validated p"), n, seed),
        ExperimentKind::HighDim => {
            generate_highdim(&HighDimModel::new(p).expect("validated p"), n, seed)
        }
        ExperimentKind::Voting => unreachable!("voting data is loaded, not generated"),
    }
}

fn conditional_model(config: &ExperimentConfig) -> Arc<dyn ConditionalModel> {
    match config.kind {
        ExperimentKind::Toy => Arc::new(ToyConditional { p: config.p_study, sigma: 0.2 }),
        ExperimentKind::HighDim => {
            Arc::new(HighDimConditional::new(&HighDimModel::new(config.p_study).expect("valid p")))
        }
        ExperimentKind::Voting => unreachable!("no analytic model for the voting data"),
    }
}

fn oracle_policy(
    config: &ExperimentConfig,
    model: Arc<dyn ConditionalModel>,
    gamma: f64,
) -> Policy {
    let rc = RobustnessConfig::new(gamma, config.e).expect("validated gamma/e");
    match config.objective {
        Objective::MaxMin => {
            if gamma == 1.0 {
                nonrobust_policy(model)
            } else {
                maxmin_policy(model, rc)
            }
        }
        Objective::Gain(b) => gain_policy(model, rc, b.to_policy()),
    }
}

fn train_config(config: &ExperimentConfig, gamma: f64, seed: u64) -> TrainConfig {
    let mut tc = TrainConfig::new(config.objective, gamma, config.e, seed).expect("validated");
    tc.epochs_max = config.epochs_max;
    tc.batch_size = config.batch_size;
    tc.learning_rate = config.learning_rate;
    tc
}

struct CellOutput {
    gamma: f64,
    seed: u64,
    reports: Vec<EvaluationReport>,
    checkpoint: PathBuf,
    model: RuModel,
}

fn run_synthetic_cell(
    config: &ExperimentConfig,
    gamma: f64,
    seed: u64,
    out_dir: &Path,
) -> Result<CellOutput, Error> {
    let pool = generate_pool(config, config.p_study, config.n_train + config.n_val, seed);
    let observed = rct_observe(&pool, config.e, seed)?;
    let (train_data, val_data) = observed.split_at(config.n_train);

    let model = train(train_data, val_data, &train_config(config, gamma, seed))?;
    let learned = policy_from_model(&model);
    let truth = oracle_policy(config, conditional_model(config), gamma);

    let obj = config.objective.name();
    let mut reports = Vec::new();
    for (k, &p) in config.p_targets.iter().enumerate() {
        let target = generate_pool(config, p, config.n_test, test_seed(seed, k));
        for (name, policy) in [(format!("ru_{obj}"), &learned), (format!("true_{obj}"), &truth)] {
            let pv = target_policy_value(policy, &target)?;
            reports.push(EvaluationReport {
                policy: name,
                gamma,
                p_target: Some(p),
                seed,
                value: pv.value,
                treated_fraction: pv.treated_fraction,
                n: pv.n,
            });
        }
    }

    let checkpoint = out_dir.join(format!("checkpoints/model_{obj}_g{gamma}_s{seed}.bin"));
    write_checkpoint(&checkpoint, &model)?;

    if config.kind == ExperimentKind::Toy {
        let xs: Vec<f64> = (0..601).map(|i| -3.0 + i as f64 / 100.0).collect();
        let rc = RobustnessConfig::new(gamma, config.e)?;
        let cond = conditional_model(config);
        write_policy_grid(
            &out_dir.join(format!("grids/true_{obj}_g{gamma}_s{seed}.csv")),
            cond.as_ref(),
            &rc,
            &truth,
            &xs,
        )?;
        write_learned_grid(
            &out_dir.join(format!("grids/learned_{obj}_g{gamma}_s{seed}.csv")),
            &model,
            &xs,
        )?;
    }
    Ok(CellOutput { gamma, seed, reports, checkpoint, model })
}

fn write_learned_grid(path: &Path, model: &RuModel, xs: &[f64]) -> Result<(), Error> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "x,h,decision")?;
    for &x in xs {
        let h = model.score(&[x]);
        writeln!(out, "{x},{h},{}", u8::from(h >= 0.5))?;
    }
    Ok(())
}

struct VotingSeedData {
    train: Vec<ObservedSample>,
    val: Vec<ObservedSample>,
    test: Vec<ObservedSample>,
}

fn voting_seed_data(
    records: &[robust_policy::ingest::VotingRecord],
    seed: u64,
    out_dir: &Path,
) -> Result<VotingSeedData, Error> {
    let split = semisynthetic_split(records, seed)?;
    write_split_csv(&out_dir.join(format!("splits_s{seed}.csv")), &split)?;
    let train_x: Vec<Vec<f64>> = split.train.iter().map(|r| r.covariates()).collect();
    let standardizer = Standardizer::fit(&train_x)?;
    let to_obs = |rs: &[robust_policy::ingest::VotingRecord]| {
        standardizer.apply_observed(&rs.iter().map(|r| r.to_observed()).collect::<Vec<_>>())
    };
    Ok(VotingSeedData { train: to_obs(&split.train), val: to_obs(&split.val), test: to_obs(&split.test) })
}

fn run_voting_cell(
    config: &ExperimentConfig,
    data: &VotingSeedData,
    gamma: f64,
    seed: u64,
    out_dir: &Path,
) -> Result<CellOutput, Error> {
    let model = train(&data.train, &data.val, &train_config(config, gamma, seed))?;
    let learned = policy_from_model(&model);
    let pv = ipw_policy_value(&learned, &data.test, VOTING_PROPENSITY)?;
    let obj = config.objective.name();
    let reports = vec![EvaluationReport {
        policy: format!("ru_{obj}"),
        gamma,
        p_target: None,
        seed,
        value: pv.value,
        treated_fraction: pv.treated_fraction,
        n: pv.n,
    }];
    let checkpoint = out_dir.join(format!("checkpoints/model_{obj}_g{gamma}_s{seed}.bin"));
    write_checkpoint(&checkpoint, &model)?;
    Ok(CellOutput { gamma, seed, reports, checkpoint, model })
}

/// Runs every (Γ, seed) cell, writes per-run and aggregated CSVs, grids,
/// checkpoints, and a manifest. Partial results are preserved on failure.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<(), Box<dyn std::error::Error>> {
    std::fs::create_dir_all(out_dir.join("checkpoints"))?;
    if config.kind == ExperimentKind::Toy {
        std::fs::create_dir_all(out_dir.join("grids"))?;
    }

    let voting_data: Option<BTreeMap<u64, VotingSeedData>> = match config.kind {
        ExperimentKind::Voting => {
            let path = config.voting_csv.as_ref().expect("validated");
            let schema = match &config.column_map {
                Some(m) => VotingSchema::from_mapping_file(m)?,
                None => VotingSchema::default(),
            };
            let (records, rejects) = load_voting(path, &schema)?;
            if !rejects.rejects.is_empty() {
                eprintln!("warning: {} rejected rows (first: line {}: {})",
                    rejects.rejects.len(), rejects.rejects[0].0, rejects.rejects[0].1);
                let mut text = String::new();
                for (line, why) in &rejects.rejects {
                    text.push_str(&format!("{line},{why}\n"));
                }
                std::fs::write(out_dir.join("rejects.csv"), text)?;
            }
            let mut by_seed = BTreeMap::new();
            for &seed in &config.seeds {
                by_seed.insert(seed, voting_seed_data(&records, seed, out_dir)?);
            }
            Some(by_seed)
        }
        _ => None,
    };

    let mut cells: Vec<(f64, u64)> = Vec::new();
    for &gamma in &config.gammas {
        for &seed in &config.seeds {
            cells.push((gamma, seed));
        }
    }

    let outcomes: Vec<Result<CellOutput, Error>> = cells
        .par_iter()
        .map(|&(gamma, seed)| match &voting_data {
            Some(by_seed) => run_voting_cell(config, &by_seed[&seed], gamma, seed, out_dir),
            None => run_synthetic_cell(config, gamma, seed, out_dir),
        })
        .collect();

    let mut reports: Vec<EvaluationReport> = Vec::new();
    let mut manifest_cells = Vec::new();
    let mut first_error: Option<Error> = None;
    let mut param_count = None;
    for (cell, outcome) in cells.iter().zip(outcomes) {
        match outcome {
            Ok(out) => {
                param_count.get_or_insert(out.model.param_count());
                reports.extend(out.reports);
                manifest_cells.push(serde_json::json!({
                    "gamma": out.gamma,
                    "seed": out.seed,
                    "checkpoint": out.checkpoint.strip_prefix(out_dir).unwrap_or(&out.checkpoint),
                    "status": "ok",
                }));
            }
            Err(e) => {
                manifest_cells.push(serde_json::json!({
                    "gamma": cell.0,
                    "seed": cell.1,
                    "status": format!("failed: {e}"),
                }));
                first_error.get_or_insert(e);
            }
        }
    }

    reports.sort_by(|a, b| {
        (&a.policy, a.gamma.to_bits(), a.p_target.map(f64::to_bits), a.seed).cmp(&(
            &b.policy,
            b.gamma.to_bits(),
            b.p_target.map(f64::to_bits),
            b.seed,
        ))
    });
    write_reports_csv(&out_dir.join("runs.csv"), &reports)?;
    let rows = aggregate(&reports);
    write_aggregate_csv(&out_dir.join("summary.csv"), &rows)?;
    std::fs::write(out_dir.join("summary.txt"), format_aggregate_table(&rows))?;

    let manifest = serde_json::json!({
        "config_sha256": hex_digest(&config.source),
        "config": config.source,
        "crate_version": env!("CARGO_PKG_VERSION"),
        "experiment": config.kind.name(),
        "objective": config.objective.name(),
        "gammas": config.gammas,
        "seeds": config.seeds,
        "p_targets": config.p_targets,
        "n_train": config.n_train,
        "n_val": config.n_val,
        "n_test": config.n_test,
        "e": config.e,
        "model_parameters": param_count,
        "cells": manifest_cells,
    });
    std::fs::write(out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;

    match first_error {
        Some(e) => Err(Box::new(e)),
        None => Ok(()),
    }
}

fn hex_digest(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}
