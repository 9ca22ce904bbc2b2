//! Experiment runner CLI: `run`, `reproduce-table`, `eval-policy`, and
//! `gen-data`. All outputs are CSV or plain text; the out directory for
//! `run` can be overridden with the `ROBUST_POLICY_OUT` environment
//! variable. Exit codes: 0 success, 1 runtime failure or missing results,
//! 2 invalid configuration.

mod config;
mod runner;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ConfigError, ExperimentConfig};
use robust_policy::eval::{ipw_policy_value, target_policy_value};
use robust_policy::ingest::{
    load_voting, semisynthetic_split, Standardizer, VotingSchema, VOTING_PROPENSITY,
};
use robust_policy::ru::{policy_from_model, read_checkpoint};
use robust_policy::synthetic::{
    generate_highdim, generate_toy, rct_observe, write_observed_csv, write_samples_csv,
    HighDimModel, ToyModel,
};

#[derive(Parser)]
#[command(name = "robust-policy", version, about = "Robust treatment-policy learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (gamma, seed) cell of a configured experiment.
    Run {
        /// Experiment config file (sectioned key = value text).
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overridden by ROBUST_POLICY_OUT).
        #[arg(long)]
        out: PathBuf,
        /// Voting CSV path, overriding the config's voting_csv.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Comma-separated seed list overriding the config.
        #[arg(long)]
        seeds: Option<String>,
        /// Comma-separated gamma list overriding the config.
        #[arg(long)]
        gamma: Option<String>,
    },
    /// Render a completed run as a reference table with diffs.
    ReproduceTable {
        /// One of: toy-maxmin, toy-gain-control, toy-gain-treat,
        /// highdim-maxmin, highdim-gain, voting.
        table: String,
        /// Directory a `run` wrote to.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a trained checkpoint on a generated target population or
    /// the voting test split.
    EvalPolicy {
        #[arg(long)]
        checkpoint: PathBuf,
        /// toy | highdim (ignored when --data is given).
        #[arg(long, default_value = "toy")]
        experiment: String,
        #[arg(long, default_value_t = 0.2)]
        p_target: f64,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Voting CSV; evaluates on the seed's test split instead.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Optional column-mapping file for --data.
        #[arg(long)]
        column_map: Option<PathBuf>,
        /// Also report the diagnostic worst-case reweighted value at this
        /// Γ, using the checkpoint's quantile head to pick the conditional
        /// reweighting.
        #[arg(long)]
        worst_case_gamma: Option<f64>,
    },
    /// Write a synthetic dataset as CSV.
    GenData {
        /// toy | highdim.
        #[arg(long, default_value = "toy")]
        experiment: String,
        /// Latent Bernoulli parameter.
        #[arg(long, default_value_t = 0.2)]
        p: f64,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also assign treatments with this probability and write observed
        /// records (x, y, w) instead of potential outcomes.
        #[arg(long)]
        observe: Option<f64>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Run { config, out, data, seeds, gamma } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(data) = data {
                cfg.voting_csv = Some(data);
            }
            if let Some(seeds) = seeds {
                cfg.seeds = parse_u64_list(&seeds, "seeds")?;
            }
            if let Some(gamma) = gamma {
                let gammas = parse_f64_list(&gamma, "gamma")?;
                for g in &gammas {
                    if !g.is_finite() || *g < 1.0 {
                        return Err(Box::new(ConfigError {
                            field: "gamma".into(),
                            message: format!("every Γ must be >= 1, got {g}"),
                        }));
                    }
                }
                cfg.gammas = gammas;
            }
            let out = std::env::var_os("ROBUST_POLICY_OUT").map(PathBuf::from).unwrap_or(out);
            runner::run(&cfg, &out)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::ReproduceTable { table, out } => {
            let rendered = tables::reproduce_table(&table, &out)
                .map_err(|m| Box::new(std::io::Error::other(m)) as Box<dyn std::error::Error>)?;
            print!("{}", rendered.text);
            if rendered.missing.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("missing {} cell(s):", rendered.missing.len());
                for m in &rendered.missing {
                    eprintln!("  {m}");
                }
                Ok(ExitCode::from(1))
            }
        }
        Command::EvalPolicy {
            checkpoint,
            experiment,
            p_target,
            n,
            seed,
            data,
            column_map,
            worst_case_gamma,
        } => {
            let model = read_checkpoint(&checkpoint)?;
            let policy = policy_from_model(&model);
            let observed: Vec<robust_policy::ObservedSample>;
            let pv = match data {
                Some(csv) => {
                    let schema = match column_map {
                        Some(m) => VotingSchema::from_mapping_file(&m)?,
                        None => VotingSchema::default(),
                    };
                    let (records, _) = load_voting(&csv, &schema)?;
                    let split = semisynthetic_split(&records, seed)?;
                    let train_x: Vec<Vec<f64>> =
                        split.train.iter().map(|r| r.covariates()).collect();
                    let st = Standardizer::fit(&train_x)?;
                    observed = st.apply_observed(
                        &split.test.iter().map(|r| r.to_observed()).collect::<Vec<_>>(),
                    );
                    ipw_policy_value(&policy, &observed, VOTING_PROPENSITY)?
                }
                None => {
                    let target = match experiment.as_str() {
                        "toy" => generate_toy(&ToyModel::new(p_target)?, n, seed),
                        "highdim" => generate_highdim(&HighDimModel::new(p_target)?, n, seed),
                        other => {
                            return Err(Box::new(ConfigError {
                                field: "experiment".into(),
                                message: format!("unknown experiment '{other}'"),
                            }))
                        }
                    };
                    let pv = target_policy_value(&policy, &target)?;
                    observed = rct_observe(&target, model.e, seed)?;
                    pv
                }
            };
            println!("value={} treated_fraction={} n={}", pv.value, pv.treated_fraction, pv.n);
            if let Some(gamma) = worst_case_gamma {
                // Diagnostic only: the study-side value under the least
                // favorable Γ-box reweighting, with conditional quantiles
                // taken from the checkpoint's own auxiliary head.
                use robust_policy::eval::{worst_case_reweighted_value, AlphaNetQuantile};
                let scores: Vec<f64> = observed.iter().map(|s| model.score(&s.x)).collect();
                let wc = worst_case_reweighted_value(
                    &observed,
                    &scores,
                    &model.objective.value_kind(),
                    gamma,
                    model.e,
                    &AlphaNetQuantile(&model),
                )?;
                println!("worst_case_value={wc} gamma={gamma} (diagnostic reweighting, quantiles from the model's auxiliary head)");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::GenData { experiment, p, n, seed, out, observe } => {
            let samples = match experiment.as_str() {
                "toy" => generate_toy(&ToyModel::new(p)?, n, seed),
                "highdim" => generate_highdim(&HighDimModel::new(p)?, n, seed),
                other => {
                    return Err(Box::new(ConfigError {
                        field: "experiment".into(),
                        message: format!("unknown experiment '{other}'"),
                    }))
                }
            };
            match observe {
                Some(e) => write_observed_csv(&out, &rct_observe(&samples, e, seed)?)?,
                None => write_samples_csv(&out, &samples)?,
            }
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn parse_u64_list(raw: &str, field: &str) -> Result<Vec<u64>, ConfigError> {
    raw.split(',')
        .map(|t| {
            t.trim().parse().map_err(|_| ConfigError {
                field: field.into(),
                message: format!("bad value '{t}'"),
            })
        })
        .collect()
}

fn parse_f64_list(raw: &str, field: &str) -> Result<Vec<f64>, ConfigError> {
    raw.split(',')
        .map(|t| {
            t.trim().parse().map_err(|_| ConfigError {
                field: field.into(),
                message: format!("bad value '{t}'"),
            })
        })
        .collect()
}
