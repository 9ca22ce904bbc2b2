//! Rendering of aggregated results in the reference table layouts, with a
//! diff column against published reference values.

use std::collections::BTreeMap;
use std::path::Path;

use robust_policy::eval::{aggregate, AggregateRow, EvaluationReport};

pub const P_COLUMNS: [f64; 5] = [0.1, 0.2, 0.5, 0.7, 0.9];

/// Reference target-policy values, rows (method, Γ) x columns p_target.
struct SyntheticReference {
    /// (policy id in runs.csv, Γ, values at P_COLUMNS)
    rows: &'static [(&'static str, f64, [f64; 5])],
}

const TOY_MAXMIN: SyntheticReference = SyntheticReference {
    rows: &[
        ("ru_maxmin", 1.0, [1.029, 0.930, 0.659, 0.491, 0.308]),
        ("true_maxmin", 1.0, [1.035, 0.937, 0.654, 0.464, 0.278]),
        ("ru_maxmin", 2.0, [0.908, 0.882, 0.819, 0.780, 0.740]),
        ("true_maxmin", 2.0, [0.899, 0.881, 0.824, 0.787, 0.749]),
        ("ru_maxmin", 3.0, [0.874, 0.861, 0.823, 0.801, 0.776]),
        ("true_maxmin", 3.0, [0.873, 0.863, 0.824, 0.802, 0.778]),
        ("ru_maxmin", 4.0, [0.856, 0.847, 0.819, 0.804, 0.785]),
        ("true_maxmin", 4.0, [0.850, 0.844, 0.820, 0.806, 0.790]),
    ],
};

const TOY_GAIN_CONTROL: SyntheticReference = SyntheticReference {
    rows: &[
        ("ru_gain_always_control", 1.0, [1.031, 0.930, 0.656, 0.484, 0.301]),
        ("true_gain_always_control", 1.0, [1.035, 0.937, 0.654, 0.464, 0.278]),
        ("ru_gain_always_control", 2.0, [0.897, 0.876, 0.821, 0.788, 0.753]),
        ("true_gain_always_control", 2.0, [0.894, 0.878, 0.825, 0.791, 0.755]),
        ("ru_gain_always_control", 3.0, [0.854, 0.846, 0.818, 0.804, 0.788]),
        ("true_gain_always_control", 3.0, [0.850, 0.844, 0.820, 0.806, 0.790]),
        ("ru_gain_always_control", 4.0, [0.834, 0.827, 0.812, 0.801, 0.792]),
        ("true_gain_always_control", 4.0, [0.829, 0.824, 0.811, 0.802, 0.793]),
    ],
};

const TOY_GAIN_TREAT: SyntheticReference = SyntheticReference {
    rows: &[
        ("ru_gain_always_treat", 1.0, [1.028, 0.929, 0.660, 0.492, 0.311]),
        ("true_gain_always_treat", 1.0, [1.035, 0.937, 0.654, 0.464, 0.278]),
        ("ru_gain_always_treat", 2.0, [1.124, 0.755, -0.355, -1.131, -1.856]),
        ("true_gain_always_treat", 2.0, [1.126, 0.760, -0.358, -1.139, -1.875]),
        ("ru_gain_always_treat", 3.0, [1.124, 0.755, -0.355, -1.131, -1.856]),
        ("true_gain_always_treat", 3.0, [1.126, 0.760, -0.358, -1.139, -1.875]),
        ("ru_gain_always_treat", 4.0, [1.121, 0.747, -0.356, -1.127, -1.841]),
        ("true_gain_always_treat", 4.0, [1.126, 0.760, -0.358, -1.139, -1.875]),
    ],
};

const HIGHDIM_MAXMIN: SyntheticReference = SyntheticReference {
    rows: &[
        ("ru_maxmin", 1.0, [1.249, 1.007, 0.275, -0.198, -0.701]),
        ("ru_maxmin", 2.0, [1.099, 1.030, 0.828, 0.690, 0.563]),
        ("ru_maxmin", 3.0, [1.061, 1.008, 0.850, 0.741, 0.643]),
        ("ru_maxmin", 4.0, [1.018, 0.977, 0.868, 0.791, 0.724]),
    ],
};

const HIGHDIM_GAIN: SyntheticReference = SyntheticReference {
    rows: &[
        ("ru_gain_x1_rule", 1.0, [1.249, 1.007, 0.275, -0.198, -0.701]),
        ("ru_gain_x1_rule", 2.0, [1.249, 1.007, 0.275, -0.198, -0.701]),
        ("ru_gain_x1_rule", 3.0, [1.164, 1.052, 0.734, 0.514, 0.313]),
        ("ru_gain_x1_rule", 4.0, [1.141, 1.047, 0.767, 0.581, 0.405]),
    ],
};

/// Voting reference: (policy id, Γ, value, treated fraction).
pub const VOTING_REFERENCE: &[(&str, f64, f64, f64)] = &[
    ("ru_maxmin", 1.0, 0.3106, 0.66),
    ("ru_maxmin", 1.1, 0.3272, 0.87),
    ("ru_maxmin", 1.2, 0.3375, 1.0),
    ("ru_maxmin", 1.3, 0.3375, 1.0),
    ("ru_maxmin", 1.5, 0.3375, 1.0),
    ("ru_gain_always_treat", 1.1, 0.3375, 1.0),
    ("ru_gain_always_treat", 1.2, 0.3375, 1.0),
    ("ru_gain_always_treat", 1.3, 0.3375, 1.0),
    ("ru_gain_always_treat", 1.5, 0.3375, 1.0),
    ("ru_gain_always_control", 1.1, 0.2934, 0.44),
    ("ru_gain_always_control", 1.2, 0.2780, 0.25),
    ("ru_gain_always_control", 1.3, 0.2705, 0.15),
    ("ru_gain_always_control", 1.5, 0.2653, 0.0),
];

pub const TABLE_IDS: [&str; 6] = [
    "toy-maxmin",
    "toy-gain-control",
    "toy-gain-treat",
    "highdim-maxmin",
    "highdim-gain",
    "voting",
];

/// Reads `runs.csv` back into reports.
pub fn read_runs_csv(path: &Path) -> Result<Vec<EvaluationReport>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut reports = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(format!("runs.csv line {}: expected 6 fields", i + 1));
        }
        let parse = |s: &str, what: &str| -> Result<f64, String> {
            s.parse().map_err(|_| format!("runs.csv line {}: bad {what} '{s}'", i + 1))
        };
        reports.push(EvaluationReport {
            policy: f[0].to_string(),
            gamma: parse(f[1], "gamma")?,
            p_target: if f[2].is_empty() { None } else { Some(parse(f[2], "p_target")?) },
            seed: f[3].parse().map_err(|_| format!("runs.csv line {}: bad seed", i + 1))?,
            value: parse(f[4], "value")?,
            treated_fraction: parse(f[5], "treated_fraction")?,
            n: 0,
        });
    }
    Ok(reports)
}

pub struct RenderedTable {
    pub text: String,
    pub missing: Vec<String>,
}

/// Renders one table id from a completed run directory.
pub fn reproduce_table(table: &str, out_dir: &Path) -> Result<RenderedTable, String> {
    let reports = read_runs_csv(&out_dir.join("runs.csv"))?;
    let rows = aggregate(&reports);
    match table {
        "toy-maxmin" => Ok(render_synthetic(table, &TOY_MAXMIN, &rows)),
        "toy-gain-control" => Ok(render_synthetic(table, &TOY_GAIN_CONTROL, &rows)),
        "toy-gain-treat" => Ok(render_synthetic(table, &TOY_GAIN_TREAT, &rows)),
        "highdim-maxmin" => Ok(render_synthetic(table, &HIGHDIM_MAXMIN, &rows)),
        "highdim-gain" => Ok(render_synthetic(table, &HIGHDIM_GAIN, &rows)),
        "voting" => Ok(render_voting(&rows)),
        other => Err(format!("unknown table '{other}' (expected one of {})", TABLE_IDS.join(", "))),
    }
}

fn cell_key(gamma: f64, p: f64) -> (u64, u64) {
    (gamma.to_bits(), p.to_bits())
}

fn render_synthetic(title: &str, reference: &SyntheticReference, rows: &[AggregateRow]) -> RenderedTable {
    let mut by_cell: BTreeMap<(String, u64, u64), &AggregateRow> = BTreeMap::new();
    for r in rows {
        if let Some(p) = r.p_target {
            let (g, p) = cell_key(r.gamma, p);
            by_cell.insert((r.policy.clone(), g, p), r);
        }
    }
    let mut text = format!("{title}: target policy value, mean ± sd across seeds (Δ vs reference)\n");
    text.push_str(&format!("{:<26} {:>5}", "method", "gamma"));
    for p in P_COLUMNS {
        text.push_str(&format!(" {:>22}", format!("p={p}")));
    }
    text.push('\n');
    let mut missing = Vec::new();
    for (policy, gamma, reference_vals) in reference.rows {
        text.push_str(&format!("{policy:<26} {gamma:>5}"));
        for (p, refv) in P_COLUMNS.iter().zip(reference_vals) {
            let (g, pk) = cell_key(*gamma, *p);
            match by_cell.get(&(policy.to_string(), g, pk)) {
                Some(row) => {
                    let diff = row.mean_value - refv;
                    text.push_str(&format!(
                        " {:>22}",
                        format!("{:.3}±{:.3} (Δ{:+.3})", row.mean_value, row.sd_value, diff)
                    ));
                }
                None => {
                    text.push_str(&format!(" {:>22}", "missing"));
                    missing.push(format!("{policy} gamma={gamma} p={p}"));
                }
            }
        }
        text.push('\n');
    }
    RenderedTable { text, missing }
}

fn render_voting(rows: &[AggregateRow]) -> RenderedTable {
    let mut by_cell: BTreeMap<(String, u64), &AggregateRow> = BTreeMap::new();
    for r in rows {
        if r.p_target.is_none() {
            by_cell.insert((r.policy.clone(), r.gamma.to_bits()), r);
        }
    }
    let mut text = String::from(
        "voting: target policy value and treated fraction (Δ vs reference)\n",
    );
    text.push_str(&format!(
        "{:<26} {:>5} {:>22} {:>18}\n",
        "method", "gamma", "value", "treated"
    ));
    let mut missing = Vec::new();
    for (policy, gamma, ref_value, ref_treated) in VOTING_REFERENCE {
        match by_cell.get(&(policy.to_string(), gamma.to_bits())) {
            Some(row) => {
                text.push_str(&format!(
                    "{policy:<26} {gamma:>5} {:>22} {:>18}\n",
                    format!("{:.4}±{:.4} (Δ{:+.4})", row.mean_value, row.sd_value, row.mean_value - ref_value),
                    format!("{:.2} (Δ{:+.2})", row.mean_treated, row.mean_treated - ref_treated)
                ));
            }
            None => {
                text.push_str(&format!("{policy:<26} {gamma:>5} {:>22} {:>18}\n", "missing", "missing"));
                missing.push(format!("{policy} gamma={gamma}"));
            }
        }
    }
    RenderedTable { text, missing }
}

#[cfg(test)]
mod tests {
    use super::*;
    use robust_policy::eval::write_reports_csv;

    #[test]
    fn missing_cells_listed() {
        let dir = tempfile::tempdir().unwrap();
        let reports = vec![EvaluationReport {
            policy: "ru_maxmin".into(),
            gamma: 1.0,
            p_target: Some(0.1),
            seed: 0,
            value: 1.0,
            treated_fraction: 0.7,
            n: 10,
        }];
        write_reports_csv(&dir.path().join("runs.csv"), &reports).unwrap();
        let rendered = reproduce_table("toy-maxmin", dir.path()).unwrap();
        assert!(rendered.text.contains("Δ"));
        // 8 rows x 5 columns minus the single present cell.
        assert_eq!(rendered.missing.len(), 39);
        assert!(reproduce_table("nonsense", dir.path()).is_err());
    }

    #[test]
    fn runs_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let reports = vec![
            EvaluationReport {
                policy: "ru_maxmin".into(),
                gamma: 1.5,
                p_target: None,
                seed: 3,
                value: 0.25,
                treated_fraction: 1.0,
                n: 0,
            },
            EvaluationReport {
                policy: "true_maxmin".into(),
                gamma: 2.0,
                p_target: Some(0.7),
                seed: 0,
                value: -1.5,
                treated_fraction: 0.0,
                n: 0,
            },
        ];
        let path = dir.path().join("runs.csv");
        write_reports_csv(&path, &reports).unwrap();
        let back = read_runs_csv(&path).unwrap();
        assert_eq!(back, reports);
    }
}
