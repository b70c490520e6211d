//! Capacity-driven initial deployment: per-cell multiplexing-factor selection
//! with its rate-derived SINR thresholds, and the partial-cover choice of
//! which candidate poles to build.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::radio::SnrTable;
use crate::scenario::Scenario;
use crate::solver::{solve_partial_cover, SolverStatus};
use crate::strategies::SolveLimits;

#[derive(Debug, Error, PartialEq)]
pub enum DeployError {
    #[error(
        "rate target infeasible at K={k}: requires {required:.3} bits/s/Hz, cap is {cap} bits/s/Hz"
    )]
    InfeasibleRate { k: u32, required: f64, cap: f64 },
    #[error(
        "coverage target unreachable: best achievable is {achievable} of {target} traffic points \
         ({achievable_fraction:.4} of the network)"
    )]
    CoverageShortfall { achievable: usize, target: usize, achievable_fraction: f64 },
    #[error("capacity parameters out of range: {0}")]
    BadParams(&'static str),
}

/// Throughput and coverage goals for the deployment problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CapacityParams {
    pub target_rate_mbps: f64,
    /// Fraction of traffic points hosting an active UE at peak.
    pub activity_factor: f64,
    pub spectral_efficiency_cap: f64,
    /// Fraction of traffic points that must reach the target throughput.
    pub alpha: f64,
    pub k_max: u32,
}

impl Default for CapacityParams {
    fn default() -> Self {
        Self {
            target_rate_mbps: 50.0,
            activity_factor: 0.1,
            spectral_efficiency_cap: 7.4,
            alpha: 0.8,
            k_max: 64,
        }
    }
}

impl CapacityParams {
    pub fn check(&self) -> Result<(), DeployError> {
        if self.target_rate_mbps <= 0.0 {
            return Err(DeployError::BadParams("target rate must be positive"));
        }
        if !(self.activity_factor > 0.0 && self.activity_factor <= 1.0) {
            return Err(DeployError::BadParams("activity factor must lie in (0, 1]"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(DeployError::BadParams("alpha must lie in (0, 1]"));
        }
        if self.k_max == 0 {
            return Err(DeployError::BadParams("k_max must be at least 1"));
        }
        Ok(())
    }
}

/// SINR needed for each of K equally-scheduled users to reach the target
/// rate: the required spectral efficiency is `rate·K / bandwidth`, mapped
/// through Shannon capacity.
pub fn sinr_threshold_db(k: u32, params: &CapacityParams, bandwidth_mhz: f64) -> Result<f64, DeployError> {
    let required = params.target_rate_mbps * k as f64 / bandwidth_mhz;
    if required > params.spectral_efficiency_cap {
        return Err(DeployError::InfeasibleRate {
            k,
            required,
            cap: params.spectral_efficiency_cap,
        });
    }
    Ok(10.0 * (2f64.powf(required) - 1.0).log10())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KEntry {
    pub k: u32,
    pub sinr_threshold_db: f64,
    /// Traffic points whose link SINR to the cell meets the K-threshold.
    pub p: u32,
    /// Traffic points servable at this multiplexing factor: K / activity.
    pub q: f64,
}

/// Per-cell capacity table and the selected multiplexing factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCapacityProfile {
    pub cell_id: usize,
    pub entries: Vec<KEntry>,
    pub k_star: u32,
    pub selected_threshold_db: f64,
}

/// The argmax-of-min rule over a (P, Q) table; returns the 0-based index of
/// K*. Ties break toward the smaller K.
pub fn k_star_index(p: &[u32], q: &[f64]) -> usize {
    assert_eq!(p.len(), q.len());
    assert!(!p.is_empty());
    let mut best = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        let v = (pi as f64).min(qi);
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    best
}

/// Builds a cell's capacity profile: P(K) from the link SINRs (cell SNR minus
/// the interference margin), Q(K) from the activity factor, and K* by the
/// argmax-of-min rule. The K range truncates where the rate becomes
/// infeasible; K=1 must be feasible.
pub fn select_k_star(
    cell_idx: usize,
    scenario: &Scenario,
    table: &SnrTable,
    params: &CapacityParams,
) -> Result<CellCapacityProfile, DeployError> {
    params.check()?;
    let bandwidth = scenario.rf_params.bandwidth_mhz;
    let margin = scenario.rf_params.interference_margin_db;

    let mut entries = Vec::new();
    for k in 1..=params.k_max {
        let threshold = match sinr_threshold_db(k, params, bandwidth) {
            Ok(t) => t,
            Err(e) if k == 1 => return Err(e),
            Err(_) => break,
        };
        let p = (0..table.n_tps)
            .filter(|&t| table.cell_snr_db(cell_idx, t) - margin >= threshold)
            .count() as u32;
        entries.push(KEntry { k, sinr_threshold_db: threshold, p, q: k as f64 / params.activity_factor });
    }
    let p: Vec<u32> = entries.iter().map(|e| e.p).collect();
    let q: Vec<f64> = entries.iter().map(|e| e.q).collect();
    let idx = k_star_index(&p, &q);
    Ok(CellCapacityProfile {
        cell_id: scenario.cells[cell_idx].id,
        k_star: entries[idx].k,
        selected_threshold_db: entries[idx].sinr_threshold_db,
        entries,
    })
}

/// Deployment outcome: which candidate poles to build and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentPlan {
    pub selected_sites: Vec<usize>,
    pub profiles: Vec<CellCapacityProfile>,
    pub covered_count: usize,
    pub coverage_target: usize,
    pub n_traffic_points: usize,
    pub achieved_fraction: f64,
    pub status: SolverStatus,
    pub gap: f64,
}

/// Picks the minimum set of candidate poles (all three cells of a pole
/// activate together) covering at least `alpha` of all traffic points at each
/// cell's selected capacity threshold.
pub fn solve_deployment(
    scenario: &Scenario,
    table: &SnrTable,
    params: &CapacityParams,
    limits: &SolveLimits,
) -> Result<DeploymentPlan, DeployError> {
    params.check()?;
    let profiles: Result<Vec<CellCapacityProfile>, DeployError> = (0..scenario.cells.len())
        .map(|c| select_k_star(c, scenario, table, params))
        .collect();
    let profiles = profiles?;

    let margin = scenario.rf_params.interference_margin_db;
    let site_ids = scenario.site_ids();
    let n_tps = table.n_tps;
    let words = n_tps.div_ceil(64);

    // Pole coverage: best of its 3 cells, each at its own selected threshold.
    let coverage: Vec<Vec<u64>> = site_ids
        .iter()
        .map(|&site| {
            let mut bits = vec![0u64; words];
            for (c, cell) in scenario.cells.iter().enumerate() {
                if cell.site_id != site {
                    continue;
                }
                let threshold = profiles[c].selected_threshold_db;
                for t in 0..n_tps {
                    if table.cell_snr_db(c, t) - margin >= threshold {
                        bits[t / 64] |= 1 << (t % 64);
                    }
                }
            }
            bits
        })
        .collect();

    let target = (params.alpha * n_tps as f64).ceil() as usize;
    let exact = site_ids.len() <= limits.exact_var_limit;
    let solution = solve_partial_cover(&coverage, n_tps, target, limits.node_budget, exact);
    if solution.status == SolverStatus::Infeasible {
        return Err(DeployError::CoverageShortfall {
            achievable: solution.covered,
            target,
            achievable_fraction: if n_tps == 0 { 0.0 } else { solution.covered as f64 / n_tps as f64 },
        });
    }

    Ok(DeploymentPlan {
        selected_sites: solution.selected.iter().map(|&i| site_ids[i]).collect(),
        profiles,
        covered_count: solution.covered,
        coverage_target: target,
        n_traffic_points: n_tps,
        achieved_fraction: if n_tps == 0 { 0.0 } else { solution.covered as f64 / n_tps as f64 },
        status: solution.status,
        gap: solution.gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> CapacityParams {
        CapacityParams::default()
    }

    #[test]
    fn shannon_identity_at_unit_spectral_efficiency() {
        // One bit/s/Hz needs SINR 2¹−1 = 1 → 0 dB.
        let p = CapacityParams { target_rate_mbps: 800.0, ..params() };
        assert!(sinr_threshold_db(1, &p, 800.0).unwrap().abs() < 1e-12);
        // 50 Mbps × K=16 over 800 MHz is the same unit efficiency.
        assert!(sinr_threshold_db(16, &params(), 800.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn infeasible_rate_is_an_error() {
        let p = CapacityParams { spectral_efficiency_cap: 1.0, ..params() };
        // K=17 → 17×50/800 = 1.0625 bits/s/Hz > 1.0.
        let err = sinr_threshold_db(17, &p, 800.0).unwrap_err();
        assert!(matches!(err, DeployError::InfeasibleRate { k: 17, .. }));
    }

    #[test]
    fn k_star_follows_argmax_of_min() {
        // P = [50, 30, 12], a = 0.1 → Q = [10, 20, 30] → mins [10, 20, 12].
        let p = [50, 30, 12];
        let q = [10.0, 20.0, 30.0];
        assert_eq!(k_star_index(&p, &q), 1);

        // All-zero P ties at 0; the smallest K wins.
        assert_eq!(k_star_index(&[0, 0, 0], &[10.0, 20.0, 30.0]), 0);

        // a = 1 makes Q = K; with P(1) ≥ 1 the min at K=1 is 1.
        let p1 = [5, 0, 0];
        let q1 = [1.0, 2.0, 3.0];
        assert_eq!(k_star_index(&p1, &q1), 0);
        assert_eq!((p1[0] as f64).min(q1[0]), 1.0);
    }

    #[test]
    fn capacity_params_are_validated() {
        assert!(CapacityParams { activity_factor: 0.0, ..params() }.check().is_err());
        assert!(CapacityParams { alpha: 1.5, ..params() }.check().is_err());
        assert!(params().check().is_ok());
    }
}
