//! UE-side consequences of an activation plan: best-link SNR shift, coverage
//! diversity, the beams-per-cell histogram, and the cell-search reduction.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::radio::SnrTable;
use crate::scenario::NO_PATH_DB;
use crate::strategies::ActivationPlan;

#[derive(Debug, Error, PartialEq)]
pub enum ImpactError {
    #[error("plan has no active cells; search window undefined")]
    NoActiveCells,
    #[error("every active cell runs zero beams; search window undefined")]
    NoActiveBeams,
}

/// Per-traffic-point comparison of a plan against the always-on network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactReport {
    pub threshold_db: f64,
    /// Traffic points in the shared coverage target, in id order.
    pub tp_ids: Vec<usize>,
    pub snr_baseline_db: Vec<f64>,
    pub snr_plan_db: Vec<f64>,
    pub diversity_baseline: Vec<u32>,
    pub diversity_plan: Vec<u32>,
    /// (active beam count, number of active cells running that many beams).
    pub beams_per_cell_histogram: Vec<(u32, u32)>,
    /// Baseline codebook size over the largest surviving per-cell codebook.
    pub search_reduction_factor: f64,
}

fn plan_best_snr(table: &SnrTable, plan: &ActivationPlan, tp: usize) -> f64 {
    let mut best = NO_PATH_DB;
    for c in 0..table.n_cells {
        if !plan.active_cells[c] {
            continue;
        }
        for &b in &plan.beams_per_cell[c] {
            best = best.max(table.beam_snr_db(c, b as usize, tp));
        }
    }
    best
}

/// Best active-link SNR per covered traffic point.
pub fn snr_distribution(table: &SnrTable, plan: &ActivationPlan, threshold_db: f64) -> Vec<f64> {
    table
        .covered_tp_ids(threshold_db)
        .iter()
        .map(|&t| plan_best_snr(table, plan, t))
        .collect()
}

/// Number of active cells whose active beams cover each traffic point.
pub fn coverage_diversity(table: &SnrTable, plan: &ActivationPlan, threshold_db: f64) -> Vec<u32> {
    table
        .covered_tp_ids(threshold_db)
        .iter()
        .map(|&t| {
            (0..table.n_cells)
                .filter(|&c| {
                    plan.active_cells[c]
                        && plan.beams_per_cell[c]
                            .iter()
                            .any(|&b| table.beam_snr_db(c, b as usize, t) >= threshold_db)
                })
                .count() as u32
        })
        .collect()
}

/// UE search-window shrink factor: the baseline codebook size over the
/// largest active-beam count any surviving cell runs.
pub fn search_reduction(table: &SnrTable, plan: &ActivationPlan) -> Result<f64, ImpactError> {
    if plan.n_active_cells() == 0 {
        return Err(ImpactError::NoActiveCells);
    }
    let worst = plan.max_beams_per_active_cell();
    if worst == 0 {
        return Err(ImpactError::NoActiveBeams);
    }
    let baseline_size = table.baseline_indices.iter().map(Vec::len).max().unwrap_or(0);
    Ok(baseline_size as f64 / worst as f64)
}

/// Full report for one plan. The baseline columns describe the always-on
/// network (every cell, full baseline codebook).
pub fn analyze(table: &SnrTable, plan: &ActivationPlan, threshold_db: f64) -> Result<ImpactReport, ImpactError> {
    let tp_ids = table.covered_tp_ids(threshold_db);
    let snr_baseline_db: Vec<f64> = tp_ids
        .iter()
        .map(|&t| (0..table.n_cells).map(|c| table.cell_snr_db(c, t)).fold(NO_PATH_DB, f64::max))
        .collect();
    let snr_plan_db: Vec<f64> = tp_ids.iter().map(|&t| plan_best_snr(table, plan, t)).collect();
    let diversity_baseline: Vec<u32> = tp_ids
        .iter()
        .map(|&t| (0..table.n_cells).filter(|&c| table.cell_snr_db(c, t) >= threshold_db).count() as u32)
        .collect();
    let diversity_plan = coverage_diversity(table, plan, threshold_db);

    let mut histogram = std::collections::BTreeMap::new();
    for c in 0..table.n_cells {
        if plan.active_cells[c] {
            *histogram.entry(plan.beams_per_cell[c].len() as u32).or_insert(0u32) += 1;
        }
    }

    Ok(ImpactReport {
        threshold_db,
        tp_ids,
        snr_baseline_db,
        snr_plan_db,
        diversity_baseline,
        diversity_plan,
        beams_per_cell_histogram: histogram.into_iter().collect(),
        search_reduction_factor: search_reduction(table, plan)?,
    })
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Writes the report as CSV tables plus a JSON summary into `dir`.
pub fn write_csv_reports(report: &ImpactReport, dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let create = |name: &str| -> io::Result<io::BufWriter<std::fs::File>> {
        Ok(io::BufWriter::new(std::fs::File::create(dir.join(name))?))
    };

    let mut f = create("snr_per_tp.csv")?;
    writeln!(f, "tp_id,baseline_snr_db,plan_snr_db")?;
    for ((t, b), p) in report.tp_ids.iter().zip(&report.snr_baseline_db).zip(&report.snr_plan_db) {
        writeln!(f, "{t},{b},{p}")?;
    }
    f.flush()?;

    // Sorted samples with their empirical CDF position.
    let mut f = create("snr_cdf.csv")?;
    writeln!(f, "fraction,baseline_snr_db,plan_snr_db")?;
    let base = sorted(&report.snr_baseline_db);
    let plan = sorted(&report.snr_plan_db);
    let n = base.len();
    for i in 0..n {
        writeln!(f, "{},{},{}", (i + 1) as f64 / n as f64, base[i], plan[i])?;
    }
    f.flush()?;

    let mut f = create("diversity_per_tp.csv")?;
    writeln!(f, "tp_id,baseline_covering_cells,plan_covering_cells")?;
    for ((t, b), p) in report.tp_ids.iter().zip(&report.diversity_baseline).zip(&report.diversity_plan) {
        writeln!(f, "{t},{b},{p}")?;
    }
    f.flush()?;

    let mut f = create("beams_per_cell.csv")?;
    writeln!(f, "active_beams,cell_count")?;
    for (beams, cells) in &report.beams_per_cell_histogram {
        writeln!(f, "{beams},{cells}")?;
    }
    f.flush()?;

    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    let mean_u = |v: &[u32]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().map(|&x| x as f64).sum::<f64>() / v.len() as f64
        }
    };
    let summary = serde_json::json!({
        "threshold_db": report.threshold_db,
        "covered_traffic_points": report.tp_ids.len(),
        "mean_snr_baseline_db": mean(&report.snr_baseline_db),
        "mean_snr_plan_db": mean(&report.snr_plan_db),
        "mean_diversity_baseline": mean_u(&report.diversity_baseline),
        "mean_diversity_plan": mean_u(&report.diversity_plan),
        "search_reduction_factor": report.search_reduction_factor,
    });
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)
}
