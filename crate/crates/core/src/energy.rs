//! gNB idle-mode power model: per-period energy cost of a cell as a function
//! of its active SSB beam count, the linear fit of that cost, and network
//! totals for an activation plan.
//!
//! Powers are relative units; energies are relative-power × milliseconds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::strategies::ActivationPlan;

/// Beam counts above the SSB codebook limit are rejected.
pub const MAX_BEAMS: u32 = 64;

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("beam count {0} outside the supported range 0..={MAX_BEAMS}")]
    BeamCountOutOfRange(u32),
    #[error("power levels must satisfy deep ≤ light ≤ micro ≤ min(active_dl, active_ul)")]
    PowerOrdering,
    #[error("durations and transition times must be positive where required")]
    InvalidTiming,
    #[error("cell {0} has active beams but is not active")]
    BeamInInactiveCell(usize),
}

/// Relative power levels and the idle-mode broadcast schedule.
///
/// Static power is taken equal to the micro-sleep level, so `p_micro_sleep`
/// doubles as the floor the cell never drops below while armed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, try_from = "PowerConfigRaw")]
pub struct PowerConfig {
    pub p_deep_sleep: f64,
    pub p_light_sleep: f64,
    pub p_micro_sleep: f64,
    pub p_active_dl: f64,
    pub p_active_ul: f64,
    /// Entry+exit time to reach each sleep level within an idle gap.
    pub deep_sleep_transition_ms: f64,
    pub light_sleep_transition_ms: f64,
    pub micro_sleep_transition_ms: f64,
    /// Broadcast period: SSB/SIB transmission and PRACH monitoring repeat at
    /// this cadence.
    pub frame_period_ms: f64,
    /// Active-DL slots (SSB + SIB) per beam per period.
    pub dl_slots_per_beam: u32,
    /// Active-UL slots (PRACH monitoring) per beam per period.
    pub ul_slots_per_beam: u32,
    pub slot_duration_ms: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            p_deep_sleep: 1.0,
            p_light_sleep: 25.0,
            p_micro_sleep: 55.0,
            p_active_dl: 280.0,
            p_active_ul: 110.0,
            deep_sleep_transition_ms: 20.0,
            light_sleep_transition_ms: 6.0,
            micro_sleep_transition_ms: 0.0,
            frame_period_ms: 20.0,
            dl_slots_per_beam: 2,
            ul_slots_per_beam: 1,
            // 240 kHz SCS slot; the full 64-beam codebook then fits inside
            // one 20 ms period (64 × 3 × 0.0625 = 12 ms).
            slot_duration_ms: 0.0625,
        }
    }
}

// Mirror used so serde-constructed configs go through the ordering check.
#[derive(Deserialize)]
#[serde(default)]
struct PowerConfigRaw {
    p_deep_sleep: f64,
    p_light_sleep: f64,
    p_micro_sleep: f64,
    p_active_dl: f64,
    p_active_ul: f64,
    deep_sleep_transition_ms: f64,
    light_sleep_transition_ms: f64,
    micro_sleep_transition_ms: f64,
    frame_period_ms: f64,
    dl_slots_per_beam: u32,
    ul_slots_per_beam: u32,
    slot_duration_ms: f64,
}

impl Default for PowerConfigRaw {
    fn default() -> Self {
        let d = PowerConfig::default();
        Self {
            p_deep_sleep: d.p_deep_sleep,
            p_light_sleep: d.p_light_sleep,
            p_micro_sleep: d.p_micro_sleep,
            p_active_dl: d.p_active_dl,
            p_active_ul: d.p_active_ul,
            deep_sleep_transition_ms: d.deep_sleep_transition_ms,
            light_sleep_transition_ms: d.light_sleep_transition_ms,
            micro_sleep_transition_ms: d.micro_sleep_transition_ms,
            frame_period_ms: d.frame_period_ms,
            dl_slots_per_beam: d.dl_slots_per_beam,
            ul_slots_per_beam: d.ul_slots_per_beam,
            slot_duration_ms: d.slot_duration_ms,
        }
    }
}

impl TryFrom<PowerConfigRaw> for PowerConfig {
    type Error = EnergyError;

    fn try_from(r: PowerConfigRaw) -> Result<Self, EnergyError> {
        let config = PowerConfig {
            p_deep_sleep: r.p_deep_sleep,
            p_light_sleep: r.p_light_sleep,
            p_micro_sleep: r.p_micro_sleep,
            p_active_dl: r.p_active_dl,
            p_active_ul: r.p_active_ul,
            deep_sleep_transition_ms: r.deep_sleep_transition_ms,
            light_sleep_transition_ms: r.light_sleep_transition_ms,
            micro_sleep_transition_ms: r.micro_sleep_transition_ms,
            frame_period_ms: r.frame_period_ms,
            dl_slots_per_beam: r.dl_slots_per_beam,
            ul_slots_per_beam: r.ul_slots_per_beam,
            slot_duration_ms: r.slot_duration_ms,
        };
        config.check()?;
        Ok(config)
    }
}

impl PowerConfig {
    pub fn check(&self) -> Result<(), EnergyError> {
        let active_floor = self.p_active_dl.min(self.p_active_ul);
        if !(self.p_deep_sleep <= self.p_light_sleep
            && self.p_light_sleep <= self.p_micro_sleep
            && self.p_micro_sleep <= active_floor)
        {
            return Err(EnergyError::PowerOrdering);
        }
        if self.frame_period_ms <= 0.0
            || self.slot_duration_ms <= 0.0
            || self.deep_sleep_transition_ms < 0.0
            || self.light_sleep_transition_ms < 0.0
            || self.micro_sleep_transition_ms < 0.0
        {
            return Err(EnergyError::InvalidTiming);
        }
        Ok(())
    }

    /// Power of the deepest sleep level whose entry+exit fits inside `gap_ms`.
    /// Falls back to the micro-sleep (static) floor when nothing fits.
    fn sleep_power_for_gap(&self, gap_ms: f64) -> f64 {
        if self.deep_sleep_transition_ms <= gap_ms {
            self.p_deep_sleep
        } else if self.light_sleep_transition_ms <= gap_ms {
            self.p_light_sleep
        } else if self.micro_sleep_transition_ms <= gap_ms {
            self.p_micro_sleep
        } else {
            self.p_micro_sleep
        }
    }
}

/// Energy one cell spends per broadcast period with `n_beams` active beams.
///
/// Every beam costs its DL and UL slots at active power; the remaining time
/// idles at the deepest sleep level whose transition fits the gap. When the
/// slots overrun the period, the whole period runs at the blended active
/// power.
pub fn idle_cycle_energy(n_beams: u32, config: &PowerConfig) -> Result<f64, EnergyError> {
    config.check()?;
    if n_beams > MAX_BEAMS {
        return Err(EnergyError::BeamCountOutOfRange(n_beams));
    }
    let n = n_beams as f64;
    let dl_ms = n * config.dl_slots_per_beam as f64 * config.slot_duration_ms;
    let ul_ms = n * config.ul_slots_per_beam as f64 * config.slot_duration_ms;
    let active_ms = dl_ms + ul_ms;
    let period = config.frame_period_ms;
    if active_ms >= period && active_ms > 0.0 {
        let blended = (dl_ms * config.p_active_dl + ul_ms * config.p_active_ul) / active_ms;
        return Ok(period * blended);
    }
    let gap = period - active_ms;
    Ok(dl_ms * config.p_active_dl + ul_ms * config.p_active_ul + gap * config.sleep_power_for_gap(gap))
}

/// Least-squares linear approximation of the per-period cost over 1..=64 beams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedCost {
    /// Fit intercept: the cost of keeping a cell on at all.
    pub c_static: f64,
    /// Fit slope: the marginal cost of each active beam.
    pub m: f64,
    pub r_squared: f64,
}

/// Fits `cost(n) ≈ c_static + m·n` over n ∈ [1, 64].
pub fn fit_linear_cost(config: &PowerConfig) -> Result<FittedCost, EnergyError> {
    let xs: Vec<f64> = (1..=MAX_BEAMS).map(f64::from).collect();
    let mut ys = Vec::with_capacity(xs.len());
    for n in 1..=MAX_BEAMS {
        ys.push(idle_cycle_energy(n, config)?);
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    let m = sxy / sxx;
    let c_static = mean_y - m * mean_x;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let pred = c_static + m * x;
        ss_res += (y - pred) * (y - pred);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    // A constant cost curve fits its own mean perfectly.
    let r_squared = if ss_tot == 0.0 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    Ok(FittedCost { c_static, m, r_squared })
}

/// Network energy of a plan under the linear pricing: one `c_static` per
/// active cell plus `m` per active beam.
pub fn network_energy(plan: &ActivationPlan, fitted: &FittedCost) -> Result<f64, EnergyError> {
    let mut beams = 0usize;
    for (cell_idx, cell_beams) in plan.beams_per_cell.iter().enumerate() {
        if !cell_beams.is_empty() && !plan.active_cells[cell_idx] {
            return Err(EnergyError::BeamInInactiveCell(cell_idx));
        }
        beams += cell_beams.len();
    }
    let cells = plan.active_cells.iter().filter(|&&a| a).count();
    Ok(fitted.c_static * cells as f64 + fitted.m * beams as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::SolverStatus;

    #[test]
    fn all_sleep_period_uses_deepest_fitting_level() {
        let config = PowerConfig::default();
        // Deep-sleep entry+exit fits the 20 ms period exactly, so a fully
        // idle cell spends the whole period at deep-sleep power.
        let e = idle_cycle_energy(0, &config).unwrap();
        assert_eq!(e, config.frame_period_ms * config.p_deep_sleep);
    }

    #[test]
    fn overfull_period_runs_blended_active_power() {
        // Fat slots: 64 beams × 3 × 0.125 ms = 24 ms > 20 ms period.
        let config = PowerConfig { slot_duration_ms: 0.125, ..PowerConfig::default() };
        let e = idle_cycle_energy(64, &config).unwrap();
        let blended = (2.0 * 280.0 + 1.0 * 110.0) / 3.0;
        assert!((e - 20.0 * blended).abs() < 1e-9);
    }

    #[test]
    fn cost_is_strictly_increasing_in_beam_count() {
        let config = PowerConfig::default();
        let costs: Vec<f64> = (0..=64).map(|n| idle_cycle_energy(n, &config).unwrap()).collect();
        for n in 1..costs.len() {
            assert!(costs[n] > costs[n - 1], "C({}) = {} !> C({}) = {}", n, costs[n], n - 1, costs[n - 1]);
        }
    }

    #[test]
    fn beam_count_domain_is_checked() {
        let config = PowerConfig::default();
        assert_eq!(idle_cycle_energy(65, &config), Err(EnergyError::BeamCountOutOfRange(65)));
    }

    #[test]
    fn power_ordering_enforced_on_construction() {
        let bad = PowerConfig { p_deep_sleep: 100.0, ..PowerConfig::default() };
        assert_eq!(bad.check(), Err(EnergyError::PowerOrdering));
        let json = r#"{"p_deep_sleep": 100.0}"#;
        assert!(serde_json::from_str::<PowerConfig>(json).is_err());
    }

    #[test]
    fn fit_recovers_exact_slope_for_uniform_power_delta() {
        // Both active powers sit exactly delta above the only reachable
        // sleep level, making the cost exactly linear with slope
        // slots_per_beam × slot_duration × delta.
        let delta = 37.0;
        let config = PowerConfig {
            p_deep_sleep: 50.0,
            p_light_sleep: 50.0,
            p_micro_sleep: 50.0,
            p_active_dl: 50.0 + delta,
            p_active_ul: 50.0 + delta,
            deep_sleep_transition_ms: 0.0,
            light_sleep_transition_ms: 0.0,
            micro_sleep_transition_ms: 0.0,
            ..PowerConfig::default()
        };
        let fit = fit_linear_cost(&config).unwrap();
        let expected_m = 3.0 * config.slot_duration_ms * delta;
        assert!((fit.m - expected_m).abs() / expected_m < 1e-9);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn default_fit_is_nearly_linear_with_activation_step() {
        let config = PowerConfig::default();
        let fit = fit_linear_cost(&config).unwrap();
        assert!(fit.r_squared >= 0.99, "r² = {}", fit.r_squared);
        assert!(fit.m > 0.0);
        assert!(fit.c_static > 0.0);
        // Turning the first beam on costs far more than staying asleep.
        let c0 = idle_cycle_energy(0, &config).unwrap();
        assert!(fit.c_static > c0, "intercept {} vs C(0) = {}", fit.c_static, c0);
    }

    fn plan(active: Vec<bool>, beams: Vec<Vec<u32>>) -> ActivationPlan {
        ActivationPlan {
            active_cells: active,
            beams_per_cell: beams,
            objective_value: 0.0,
            solver_status: SolverStatus::ExactOptimal,
            gap: 0.0,
            solve_time_s: 0.0,
        }
    }

    #[test]
    fn network_energy_sums_cell_and_beam_costs() {
        let fitted = FittedCost { c_static: 10.0, m: 1.0, r_squared: 1.0 };
        let empty = plan(vec![], vec![]);
        assert_eq!(network_energy(&empty, &fitted).unwrap(), 0.0);

        let two = plan(vec![true, true], vec![vec![0, 1, 2], vec![0, 1, 2, 3, 4]]);
        assert_eq!(network_energy(&two, &fitted).unwrap(), 28.0);

        let baseline3 = plan(
            vec![true, true, true],
            vec![(0..32).collect(), (0..32).collect(), (0..32).collect()],
        );
        assert_eq!(network_energy(&baseline3, &fitted).unwrap(), 3.0 * 10.0 + 96.0);
    }

    #[test]
    fn network_energy_rejects_beams_in_inactive_cell() {
        let fitted = FittedCost { c_static: 10.0, m: 1.0, r_squared: 1.0 };
        let bad = plan(vec![true, false], vec![vec![], vec![3]]);
        assert_eq!(network_energy(&bad, &fitted), Err(EnergyError::BeamInInactiveCell(1)));
    }
}
