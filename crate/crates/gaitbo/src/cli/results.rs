//! BO results file and its aggregation.
//!
//! One row per objective evaluation, blocks ordered kernel-major then by
//! seed, so reruns of the same config are byte-identical. The header
//! carries enough context (cost kind, budget, config digest) for
//! aggregation to run from the file alone.

use std::collections::BTreeMap;
use std::path::Path;

use crate::costs::CostKind;
use crate::data::fmt_f64;
use crate::error::{Error, Result};
use crate::gp::BoResult;

/// Everything the results header records about the producing run.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultsMeta {
    pub config_digest: String,
    pub family: String,
    pub cost: CostKind,
    pub dim: usize,
    pub budget: usize,
}

pub fn results_to_csv(meta: &ResultsMeta, runs: &[BoResult]) -> String {
    let mut out = String::new();
    out.push_str("# gaitbo bo results\n");
    out.push_str(&format!("# config_digest={}\n", meta.config_digest));
    out.push_str(&format!("# family={}\n", meta.family));
    out.push_str(&format!("# cost={}\n", meta.cost.label()));
    out.push_str(&format!("# budget={}\n", meta.budget));
    out.push_str("run_seed,kernel,trial");
    for j in 0..meta.dim {
        out.push_str(&format!(",param_{j}"));
    }
    out.push_str(",cost,best_so_far\n");
    for run in runs {
        for t in &run.trials {
            out.push_str(&format!("{},{},{}", run.seed, run.kernel, t.trial));
            for p in &t.params {
                out.push(',');
                out.push_str(&fmt_f64(*p));
            }
            out.push(',');
            out.push_str(&fmt_f64(t.cost));
            out.push(',');
            out.push_str(&fmt_f64(t.best_so_far));
            out.push('\n');
        }
    }
    out
}

/// One parsed results file: header fields plus rows grouped back into runs.
#[derive(Clone, Debug)]
pub struct ResultsFile {
    pub meta: ResultsMeta,
    pub runs: Vec<BoResult>,
}

pub fn results_from_csv(text: &str) -> Result<ResultsFile> {
    let bad = |msg: String| Error::Dataset(format!("results file: {msg}"));
    let mut header: BTreeMap<String, String> = BTreeMap::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((_, line)) = lines.peek() {
        let Some(rest) = line.strip_prefix('#') else { break };
        if let Some((k, v)) = rest.trim().split_once('=') {
            header.insert(k.trim().to_string(), v.trim().to_string());
        }
        lines.next();
    }
    let (_, cols_line) = lines
        .next()
        .ok_or_else(|| bad("missing column header".into()))?;
    let cols: Vec<&str> = cols_line.split(',').collect();
    if cols.len() < 5 || cols[0] != "run_seed" || cols[1] != "kernel" || cols[2] != "trial" {
        return Err(bad(format!("unexpected column header `{cols_line}`")));
    }
    let dim = cols.len() - 5;
    let get = |k: &str| {
        header
            .get(k)
            .cloned()
            .ok_or_else(|| bad(format!("missing header field {k}")))
    };
    let cost: CostKind = serde_json::from_value(serde_json::Value::String(get("cost")?))
        .map_err(|_| bad("unknown cost kind in header".into()))?;
    let meta = ResultsMeta {
        config_digest: get("config_digest")?,
        family: get("family")?,
        cost,
        dim,
        budget: get("budget")?
            .parse()
            .map_err(|_| bad("budget is not an integer".into()))?,
    };

    let mut runs: Vec<BoResult> = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(bad(format!(
                "line {}: {} fields, expected {}",
                i + 1,
                fields.len(),
                cols.len()
            )));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| bad(format!("line {}: bad float `{s}`", i + 1)))
        };
        let seed: u64 = fields[0]
            .parse()
            .map_err(|_| bad(format!("line {}: bad seed", i + 1)))?;
        let kernel = fields[1].to_string();
        let trial: usize = fields[2]
            .parse()
            .map_err(|_| bad(format!("line {}: bad trial", i + 1)))?;
        let params = fields[3..3 + dim]
            .iter()
            .map(|s| parse_f(s))
            .collect::<Result<Vec<f64>>>()?;
        let cost = parse_f(fields[3 + dim])?;
        let best = parse_f(fields[4 + dim])?;

        let fresh = match runs.last() {
            Some(r) => r.kernel != kernel || r.seed != seed,
            None => true,
        };
        if fresh {
            runs.push(BoResult {
                kernel: kernel.clone(),
                seed,
                trials: Vec::new(),
                wall: Vec::new(),
            });
        }
        let run = runs.last_mut().unwrap();
        if trial != run.trials.len() + 1 {
            return Err(bad(format!(
                "line {}: trial {} out of order for {}/{}",
                i + 1,
                trial,
                kernel,
                seed
            )));
        }
        run.trials.push(crate::gp::BoTrial {
            trial,
            params,
            cost,
            best_so_far: best,
        });
    }
    if runs.is_empty() {
        return Err(bad("no data rows".into()));
    }
    Ok(ResultsFile { meta, runs })
}

pub fn read_results(path: &Path) -> Result<ResultsFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    results_from_csv(&text)
}

/// Convergence statistics for one (kernel, trial) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub kernel: String,
    pub trial: usize,
    pub mean_best: f64,
    /// 95% normal-approximation half-width; 0 for a single run.
    pub ci_half: f64,
    /// Fraction of runs whose best-so-far is below the cost's stable
    /// walking threshold.
    pub frac_walking: f64,
    pub n_runs: usize,
}

#[derive(Clone, Debug)]
pub struct AggregateTable {
    pub threshold: f64,
    pub rows: Vec<AggregateRow>,
    /// Set when any cell had a single run, making its interval degenerate.
    pub single_run: bool,
}

/// Per-(kernel, trial) means over runs. Rejects mixed budgets: every run
/// must have the same trial count for the means to be comparable.
pub fn aggregate(results: &ResultsFile) -> Result<AggregateTable> {
    let budget = results.runs[0].trials.len();
    for r in &results.runs {
        if r.trials.len() != budget {
            return Err(Error::Dataset(format!(
                "mixed budgets: run {}/{} has {} trials, expected {}",
                r.kernel,
                r.seed,
                r.trials.len(),
                budget
            )));
        }
    }
    let threshold = results.meta.cost.stable_threshold();
    let mut kernels: Vec<String> = Vec::new();
    for r in &results.runs {
        if !kernels.contains(&r.kernel) {
            kernels.push(r.kernel.clone());
        }
    }

    let mut rows = Vec::with_capacity(kernels.len() * budget);
    let mut single_run = false;
    for kernel in &kernels {
        let runs: Vec<&BoResult> = results.runs.iter().filter(|r| &r.kernel == kernel).collect();
        let n = runs.len();
        single_run |= n == 1;
        for trial in 1..=budget {
            let bests: Vec<f64> = runs.iter().map(|r| r.trials[trial - 1].best_so_far).collect();
            let mean = bests.iter().sum::<f64>() / n as f64;
            let ci_half = if n < 2 {
                0.0
            } else {
                let var =
                    bests.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>() / (n - 1) as f64;
                1.96 * (var / n as f64).sqrt()
            };
            let frac = bests.iter().filter(|&&b| b < threshold).count() as f64 / n as f64;
            rows.push(AggregateRow {
                kernel: kernel.clone(),
                trial,
                mean_best: mean,
                ci_half,
                frac_walking: frac,
                n_runs: n,
            });
        }
    }
    Ok(AggregateTable {
        threshold,
        rows,
        single_run,
    })
}

pub fn aggregate_to_csv(table: &AggregateTable) -> String {
    let mut out = String::new();
    out.push_str(&format!("# walking_threshold={}\n", table.threshold));
    out.push_str("kernel,trial,mean_best,ci95_half,frac_walking,n_runs\n");
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.kernel,
            r.trial,
            fmt_f64(r.mean_best),
            fmt_f64(r.ci_half),
            fmt_f64(r.frac_walking),
            r.n_runs
        ));
    }
    out
}

/// Fixed-width table for terminals; one block per kernel.
pub fn aggregate_to_text(table: &AggregateTable) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "best-so-far vs trial (95% CI, walking = cost < {})\n",
        table.threshold
    ));
    if table.single_run {
        out.push_str("note: single-run cells, intervals degenerate to 0\n");
    }
    let mut kernel = "";
    for r in &table.rows {
        if r.kernel != kernel {
            kernel = &r.kernel;
            out.push_str(&format!("\n[{kernel}] n={}\n", r.n_runs));
            out.push_str("trial   mean best    +/- 95%      walking\n");
        }
        out.push_str(&format!(
            "{:>5}  {:>10.4}  {:>10.4}  {:>9.2}\n",
            r.trial, r.mean_best, r.ci_half, r.frac_walking
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::BoTrial;

    fn run(kernel: &str, seed: u64, costs: &[f64]) -> BoResult {
        let mut best = f64::INFINITY;
        let trials = costs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                best = best.min(c);
                BoTrial {
                    trial: i + 1,
                    params: vec![0.5, -0.5],
                    cost: c,
                    best_so_far: best,
                }
            })
            .collect();
        BoResult {
            kernel: kernel.into(),
            seed,
            trials,
            wall: Vec::new(),
        }
    }

    fn meta() -> ResultsMeta {
        ResultsMeta {
            config_digest: "d".repeat(64),
            family: "gains5".into(),
            cost: CostKind::Atrias,
            dim: 2,
            budget: 3,
        }
    }

    #[test]
    fn csv_round_trips_bitwise() {
        let runs = vec![
            run("se", 0, &[90.0, 45.0, 60.0]),
            run("se", 1, &[15.0, 80.0, 70.0]),
            run("asymNN", 0, &[99.0, 19.0, 30.0]),
        ];
        let text = results_to_csv(&meta(), &runs);
        let parsed = results_from_csv(&text).unwrap();
        assert_eq!(parsed.meta, meta());
        assert_eq!(parsed.runs.len(), 3);
        for (a, b) in parsed.runs.iter().zip(&runs) {
            assert_eq!(a.trials, b.trials);
            assert_eq!(a.kernel, b.kernel);
            assert_eq!(a.seed, b.seed);
        }
        assert_eq!(results_to_csv(&meta(), &parsed.runs), text);
    }

    #[test]
    fn aggregate_matches_hand_computation() {
        // three se runs; trial-2 bests are 45, 15, 60
        let runs = vec![
            run("se", 0, &[90.0, 45.0, 60.0]),
            run("se", 1, &[15.0, 80.0, 70.0]),
            run("se", 2, &[60.0, 75.0, 10.0]),
        ];
        let results = ResultsFile { meta: meta(), runs };
        let table = aggregate(&results).unwrap();
        let t2 = &table.rows[1];
        assert_eq!(t2.trial, 2);
        assert!((t2.mean_best - 40.0).abs() < 1e-12);
        // squared deviations 25 + 625 + 400, sample variance 525
        let half = 1.96 * (525.0f64 / 3.0).sqrt();
        assert!((t2.ci_half - half).abs() < 1e-12, "{} vs {half}", t2.ci_half);
        assert!((t2.frac_walking - 1.0 / 3.0).abs() < 1e-12);
        // best-so-far means never increase with trial
        for w in table.rows.windows(2) {
            if w[0].kernel == w[1].kernel {
                assert!(w[1].mean_best <= w[0].mean_best + 1e-12);
            }
        }
    }

    #[test]
    fn single_run_gets_zero_interval_and_a_flag() {
        let results = ResultsFile {
            meta: meta(),
            runs: vec![run("se", 7, &[90.0, 45.0, 60.0])],
        };
        let table = aggregate(&results).unwrap();
        assert!(table.single_run);
        assert!(table.rows.iter().all(|r| r.ci_half == 0.0));
        assert!(aggregate_to_text(&table).contains("single-run"));
    }

    #[test]
    fn mixed_budgets_are_rejected() {
        let results = ResultsFile {
            meta: meta(),
            runs: vec![run("se", 0, &[90.0, 45.0, 60.0]), run("se", 1, &[15.0, 80.0])],
        };
        let err = aggregate(&results).unwrap_err();
        assert!(err.to_string().contains("mixed budgets"), "{err}");
    }

    #[test]
    fn atrias_walking_fraction_uses_the_stable_threshold() {
        let results = ResultsFile {
            meta: meta(),
            runs: vec![run("se", 0, &[30.0, 19.0, 60.0]), run("se", 1, &[25.0, 21.0, 90.0])],
        };
        let table = aggregate(&results).unwrap();
        assert_eq!(table.threshold, 20.0);
        // trial 3: bests are 19 and 21, only one below 20
        assert!((table.rows[2].frac_walking - 0.5).abs() < 1e-12);
    }
}
