use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::harness::{prequential_run, DatasetSpec, ExperimentConfig, Method, RunResult};
use super::metrics::mean_std;

/// Methods x budgets x datasets x seeds, all other settings from `base`.
#[derive(Clone, Debug)]
pub struct BenchGrid {
    pub methods: Vec<Method>,
    pub budgets: Vec<f64>,
    pub datasets: Vec<DatasetSpec>,
    pub seeds: Vec<u64>,
    pub base: ExperimentConfig,
    /// Budget for the baselines; `None` runs them at every grid budget.
    pub baseline_budget: Option<f64>,
}

impl BenchGrid {
    pub fn cells(&self) -> Result<Vec<ExperimentConfig>> {
        if self.methods.is_empty()
            || self.budgets.is_empty()
            || self.datasets.is_empty()
            || self.seeds.is_empty()
        {
            return Err(Error::config(
                "benchmark grid needs at least one method, budget, dataset and seed",
            ));
        }
        let mut cells = Vec::new();
        for dataset in &self.datasets {
            for &method in &self.methods {
                let budgets = match (method, self.baseline_budget) {
                    (Method::Baseline(_), Some(b)) => vec![b],
                    _ => self.budgets.clone(),
                };
                for &alpha in &budgets {
                    for &seed in &self.seeds {
                        let cfg = ExperimentConfig {
                            run_id: String::new(),
                            dataset: dataset.clone(),
                            method,
                            alpha,
                            seed,
                            ..self.base.clone()
                        };
                        cfg.validate()?;
                        cells.push(cfg);
                    }
                }
            }
        }
        Ok(cells)
    }
}

#[derive(Debug)]
pub struct CellOutcome {
    pub config: ExperimentConfig,
    pub result: std::result::Result<RunResult, String>,
}

/// Runs every cell, in parallel, returning outcomes in cell order. A failing
/// cell is recorded and does not stop the others.
pub fn run_cells(cells: Vec<ExperimentConfig>) -> Vec<CellOutcome> {
    cells
        .into_par_iter()
        .map(|config| {
            let result = prequential_run(&config).map_err(|e| e.to_string());
            CellOutcome { config, result }
        })
        .collect()
}

pub fn bench_grid(grid: &BenchGrid) -> Result<(Vec<CellOutcome>, Vec<SummaryRow>)> {
    let outcomes = run_cells(grid.cells()?);
    let rows = summarize(&outcomes);
    Ok((outcomes, rows))
}

/// Seed-averaged metrics of one (method, budget, dataset) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub alpha: f64,
    pub dataset: String,
    pub runs: usize,
    pub failures: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub drifts_mean: f64,
    pub detected_mean: f64,
    /// Over detected true points; `None` when nothing was detected.
    pub delay_mean: Option<f64>,
    pub false_alarms_mean: f64,
    pub queries_mean: f64,
}

pub fn summarize(outcomes: &[CellOutcome]) -> Vec<SummaryRow> {
    type Key = (Method, u64, String);
    let mut groups: BTreeMap<Key, (Vec<&RunResult>, usize)> = BTreeMap::new();
    for o in outcomes {
        let key = (o.config.method, o.config.alpha.to_bits(), o.config.dataset.name());
        let entry = groups.entry(key).or_default();
        match &o.result {
            Ok(r) => entry.0.push(r),
            Err(_) => entry.1 += 1,
        }
    }
    let mut rows: Vec<SummaryRow> = groups
        .into_iter()
        .map(|((method, alpha, dataset), (runs, failures))| {
            let stat = |f: &dyn Fn(&RunResult) -> f64| {
                let v: Vec<f64> = runs.iter().map(|r| f(r)).collect();
                mean_std(&v)
            };
            let delays: Vec<f64> = runs.iter().filter_map(|r| r.mean_delay()).collect();
            let (accuracy_mean, accuracy_std) = stat(&|r| r.average_accuracy());
            SummaryRow {
                method,
                alpha: f64::from_bits(alpha),
                dataset,
                runs: runs.len(),
                failures,
                accuracy_mean,
                accuracy_std,
                drifts_mean: stat(&|r| r.drift_count() as f64).0,
                detected_mean: stat(&|r| r.detected() as f64).0,
                delay_mean: (!delays.is_empty()).then(|| mean_std(&delays).0),
                false_alarms_mean: stat(&|r| r.false_alarms() as f64).0,
                queries_mean: stat(&|r| r.query_count as f64).0,
            }
        })
        .collect();
    rows.sort_by(|a, b| row_order(a).cmp(&row_order(b)).then(a.dataset.cmp(&b.dataset)));
    rows
}

/// Density rows first by budget, then baselines in PH, ADW, EDDM, DDM order.
fn row_order(r: &SummaryRow) -> (u8, u64, u64) {
    let alpha = (r.alpha * 1e6).round() as u64;
    match r.method {
        Method::Density => (0, alpha, 0),
        Method::Baseline(k) => {
            let pos = crate::baselines::BaselineKind::ALL
                .iter()
                .position(|&b| b == k)
                .unwrap_or(0) as u64;
            (1, pos, alpha)
        }
    }
}

/// Row label: budget-prefixed for the density method, and for baselines
/// when they did not run at the full budget.
pub fn row_label(method: Method, alpha: f64) -> String {
    match method {
        Method::Density => format!("({alpha:.1}) {}", method.table_label()),
        Method::Baseline(_) if alpha < 1.0 => format!("({alpha:.1}) {}", method.table_label()),
        Method::Baseline(_) => method.table_label().to_string(),
    }
}

/// Plain-text table: one row per (method, budget), an accuracy and a drift
/// count column per dataset.
pub fn render_table(rows: &[SummaryRow], markdown: bool) -> String {
    let mut datasets: Vec<&str> = Vec::new();
    for r in rows {
        if !datasets.contains(&r.dataset.as_str()) {
            datasets.push(&r.dataset);
        }
    }
    let mut labels: Vec<(Method, u64)> = Vec::new();
    for r in rows {
        let key = (r.method, r.alpha.to_bits());
        if !labels.contains(&key) {
            labels.push(key);
        }
    }

    let mut header = vec!["Method".to_string()];
    for d in &datasets {
        header.push(format!("{d} Avg Acc"));
        header.push(format!("{d} Num of Drift"));
    }
    let mut body: Vec<Vec<String>> = Vec::new();
    for &(method, bits) in &labels {
        let alpha = f64::from_bits(bits);
        let mut line = vec![row_label(method, alpha)];
        for d in &datasets {
            match rows
                .iter()
                .find(|r| r.method == method && r.alpha.to_bits() == bits && r.dataset == *d)
            {
                Some(r) if r.runs > 0 => {
                    let acc = if r.runs > 1 {
                        format!("{:.3} ± {:.3}", r.accuracy_mean, r.accuracy_std)
                    } else {
                        format!("{:.3}", r.accuracy_mean)
                    };
                    line.push(acc);
                    line.push(format_count(r.drifts_mean));
                }
                Some(_) => {
                    line.push("failed".into());
                    line.push("-".into());
                }
                None => {
                    line.push("-".into());
                    line.push("-".into());
                }
            }
        }
        body.push(line);
    }

    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            body.iter()
                .map(|l| l[c].chars().count())
                .chain([header[c].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let fmt_line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:<w$}"))
            .collect();
        if markdown {
            format!("| {} |", padded.join(" | "))
        } else {
            padded.join("  ").trim_end().to_string()
        }
    };
    let mut out = String::new();
    let _ = writeln!(out, "{}", fmt_line(&header));
    if markdown {
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        let _ = writeln!(out, "| {} |", rule.join(" | "));
    } else {
        let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
        let _ = writeln!(out, "{}", "-".repeat(total));
    }
    for l in &body {
        let _ = writeln!(out, "{}", fmt_line(l));
    }
    out
}

fn format_count(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v:.1}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::BaselineKind;

    fn small_grid(methods: Vec<Method>, budgets: Vec<f64>, seeds: Vec<u64>) -> BenchGrid {
        BenchGrid {
            methods,
            budgets,
            datasets: vec![DatasetSpec::sea(3_000, vec![1_500])],
            seeds,
            base: ExperimentConfig::default(),
            baseline_budget: Some(1.0),
        }
    }

    #[test]
    fn grid_size() {
        let g = small_grid(vec![Method::Density], vec![1.0, 0.2], vec![1]);
        let (outcomes, rows) = bench_grid(&g).unwrap();
        assert_eq!(outcomes.len(), 2);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].alpha, 0.2);
    }

    #[test]
    fn empty_grid_is_rejected() {
        let g = small_grid(vec![], vec![1.0], vec![1]);
        assert!(matches!(bench_grid(&g), Err(Error::Config(_))));
    }

    #[test]
    fn budget_rows_and_baseline_rows() {
        let budgets: Vec<f64> = (2..=10).map(|k| k as f64 / 10.0).collect();
        let mut methods = vec![Method::Density];
        methods.extend(BaselineKind::ALL.map(Method::Baseline));
        let g = small_grid(methods, budgets, vec![1]);
        let cells = g.cells().unwrap();
        assert_eq!(cells.len(), 9 + 4);
    }

    #[test]
    fn seeds_are_averaged_with_std() {
        let g = small_grid(vec![Method::Density], vec![1.0], vec![1, 2, 3]);
        let (outcomes, rows) = bench_grid(&g).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].runs, 3);
        let accs: Vec<f64> = outcomes
            .iter()
            .map(|o| o.result.as_ref().unwrap().average_accuracy())
            .collect();
        let (m, s) = mean_std(&accs);
        assert!((rows[0].accuracy_mean - m).abs() < 1e-12);
        assert!((rows[0].accuracy_std - s).abs() < 1e-12);
        let table = render_table(&rows, false);
        assert!(table.contains("(1.0) DensityEst"));
        assert!(table.contains("±"));
    }

    #[test]
    fn table_layout() {
        let row = |method, alpha, dataset: &str| SummaryRow {
            method,
            alpha,
            dataset: dataset.into(),
            runs: 1,
            failures: 0,
            accuracy_mean: 0.876,
            accuracy_std: 0.0,
            drifts_mean: 4.0,
            detected_mean: 3.0,
            delay_mean: Some(500.0),
            false_alarms_mean: 1.0,
            queries_mean: 100.0,
        };
        let rows = vec![
            row(Method::Density, 0.2, "sea"),
            row(Method::Density, 0.2, "hyperplane"),
            row(Method::Baseline(BaselineKind::PageHinkley), 1.0, "sea"),
        ];
        let t = render_table(&rows, false);
        let lines: Vec<&str> = t.lines().collect();
        assert!(lines[0].starts_with("Method"));
        assert!(lines[0].contains("sea Avg Acc"));
        assert!(lines[0].contains("hyperplane Num of Drift"));
        assert!(lines[2].starts_with("(0.2) DensityEst"));
        assert!(lines[3].starts_with("PH"));
        let md = render_table(&rows, true);
        assert!(md.lines().nth(1).unwrap().starts_with("| ---"));
    }

    #[test]
    fn failing_cell_is_recorded() {
        let mut g = small_grid(vec![Method::Density], vec![1.0], vec![1]);
        g.datasets.push(DatasetSpec::Csv {
            path: "/nonexistent/data.csv".into(),
            schema: Default::default(),
        });
        let (outcomes, rows) = bench_grid(&g).unwrap();
        assert_eq!(outcomes.iter().filter(|o| o.result.is_err()).count(), 1);
        assert_eq!(rows.iter().map(|r| r.failures).sum::<usize>(), 1);
    }
}
