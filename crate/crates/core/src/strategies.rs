//! The three idle-mode energy-saving strategies: per-cell beam pruning,
//! network-wide cell selection, and the joint cell+beam selection, all over
//! the shared coverage target (every traffic point the always-on network
//! covers at the threshold).

use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{network_energy, EnergyError, FittedCost};
use crate::radio::SnrTable;
use crate::scenario::{BeamType, Scenario};
use crate::solver::{
    solve_exact, solve_greedy, BinaryProgram, CoverRow, LinkRow, SolveError, SolveOutcome, SolverStatus,
};

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("coverage infeasible: {} required traffic points cannot be covered", uncovered.len())]
    Infeasible { uncovered: Vec<usize> },
    #[error("no candidate beam of cell {cell} covers one of its associated traffic points")]
    PerCellInfeasible { cell: usize },
    #[error("solution activates a cell with no beams, or beams in an inactive cell")]
    LinkingInconsistent,
    #[error("solver stopped before finding any feasible plan; raise the node budget")]
    Unresolved,
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

/// Caps deciding when the exact solver yields to the greedy fallback.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveLimits {
    /// Programs with more variables than this are solved greedily.
    pub exact_var_limit: usize,
    pub node_budget: u64,
}

impl Default for SolveLimits {
    fn default() -> Self {
        Self { exact_var_limit: 5000, node_budget: 1_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    LocalBeam,
    Cell,
    Joint,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::LocalBeam, Strategy::Cell, Strategy::Joint];
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Strategy::LocalBeam => write!(f, "local-beam"),
            Strategy::Cell => write!(f, "cell"),
            Strategy::Joint => write!(f, "joint"),
        }
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "local-beam" => Ok(Strategy::LocalBeam),
            "cell" => Ok(Strategy::Cell),
            "joint" => Ok(Strategy::Joint),
            other => Err(format!("unknown strategy '{other}' (expected local-beam, cell, or joint)")),
        }
    }
}

/// Which cells stay on and which candidate-pool beams each keeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationPlan {
    pub active_cells: Vec<bool>,
    /// Candidate-pool indices of the active beams, per cell; empty for
    /// inactive cells.
    pub beams_per_cell: Vec<Vec<u32>>,
    /// Energy under the linear pricing (cell activation + per-beam cost).
    pub objective_value: f64,
    pub solver_status: SolverStatus,
    pub gap: f64,
    /// Wall-clock solve time; not persisted so plan files stay reproducible.
    #[serde(skip, default)]
    pub solve_time_s: f64,
}

impl ActivationPlan {
    pub fn n_active_cells(&self) -> usize {
        self.active_cells.iter().filter(|&&a| a).count()
    }

    pub fn total_active_beams(&self) -> usize {
        self.beams_per_cell.iter().map(Vec::len).sum()
    }

    pub fn max_beams_per_active_cell(&self) -> usize {
        self.active_cells
            .iter()
            .zip(&self.beams_per_cell)
            .filter_map(|(&a, b)| a.then_some(b.len()))
            .max()
            .unwrap_or(0)
    }
}

/// One beam entry of a persisted plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanBeam {
    pub pool_index: u32,
    pub beam_type: BeamType,
    pub azimuth_center_deg: f64,
    pub elevation_center_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanCellEntry {
    pub cell_id: usize,
    pub beams: Vec<PlanBeam>,
}

/// The on-disk plan format: active cell ids plus per-cell beam descriptors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub strategy: String,
    pub threshold_db: f64,
    pub active_cell_ids: Vec<usize>,
    pub cells: Vec<PlanCellEntry>,
    pub objective_value: f64,
    pub solver_status: SolverStatus,
    pub gap: f64,
}

impl PlanFile {
    pub fn from_plan(plan: &ActivationPlan, scenario: &Scenario, strategy: &str, threshold_db: f64) -> Self {
        let cells = scenario
            .cells
            .iter()
            .enumerate()
            .filter(|&(i, _)| plan.active_cells[i])
            .map(|(i, cell)| PlanCellEntry {
                cell_id: cell.id,
                beams: plan.beams_per_cell[i]
                    .iter()
                    .map(|&k| {
                        let b = &cell.candidate_beam_pool[k as usize];
                        PlanBeam {
                            pool_index: k,
                            beam_type: b.beam_type,
                            azimuth_center_deg: b.azimuth_center_deg,
                            elevation_center_deg: b.elevation_center_deg,
                        }
                    })
                    .collect(),
            })
            .collect();
        Self {
            strategy: strategy.to_string(),
            threshold_db,
            active_cell_ids: plan
                .active_cells
                .iter()
                .enumerate()
                .filter_map(|(i, &a)| a.then_some(scenario.cells[i].id))
                .collect(),
            cells,
            objective_value: plan.objective_value,
            solver_status: plan.solver_status,
            gap: plan.gap,
        }
    }

    pub fn into_plan(self, scenario: &Scenario) -> ActivationPlan {
        let n = scenario.cells.len();
        let mut active_cells = vec![false; n];
        let mut beams_per_cell = vec![Vec::new(); n];
        for &id in &self.active_cell_ids {
            if id < n {
                active_cells[id] = true;
            }
        }
        for entry in self.cells {
            if entry.cell_id < n {
                beams_per_cell[entry.cell_id] = entry.beams.iter().map(|b| b.pool_index).collect();
            }
        }
        ActivationPlan {
            active_cells,
            beams_per_cell,
            objective_value: self.objective_value,
            solver_status: self.solver_status,
            gap: self.gap,
            solve_time_s: 0.0,
        }
    }

    pub fn save(&self, path: &std::path::Path) -> std::io::Result<()> {
        let body = serde_json::to_string_pretty(self)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        std::fs::write(path, body)
    }

    pub fn load(path: &std::path::Path) -> std::io::Result<Self> {
        let body = std::fs::read_to_string(path)?;
        serde_json::from_str(&body).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

/// The always-on reference: every cell active with its full baseline codebook.
pub fn baseline_plan(table: &SnrTable, fitted: &FittedCost) -> Result<ActivationPlan, StrategyError> {
    let beams_per_cell: Vec<Vec<u32>> = table
        .baseline_indices
        .iter()
        .map(|idx| idx.iter().map(|&k| k as u32).collect())
        .collect();
    let mut plan = ActivationPlan {
        active_cells: vec![true; table.n_cells],
        beams_per_cell,
        objective_value: 0.0,
        solver_status: SolverStatus::ExactOptimal,
        gap: 0.0,
        solve_time_s: 0.0,
    };
    plan.objective_value = network_energy(&plan, fitted)?;
    Ok(plan)
}

/// Highest-SNR cell association: each covered traffic point maps to the cell
/// whose baseline codebook reaches it best (lowest cell index on ties).
pub fn highest_snr_associations(table: &SnrTable, threshold_db: f64) -> Vec<Option<usize>> {
    (0..table.n_tps)
        .map(|t| {
            let mut best: Option<(usize, f64)> = None;
            for c in 0..table.n_cells {
                let snr = table.cell_snr_db(c, t);
                if snr >= threshold_db && best.map_or(true, |(_, b)| snr > b) {
                    best = Some((c, snr));
                }
            }
            best.map(|(c, _)| c)
        })
        .collect()
}

fn run_solver(program: &BinaryProgram, limits: &SolveLimits) -> Result<SolveOutcome, SolveError> {
    if program.n_vars <= limits.exact_var_limit {
        solve_exact(program, limits.node_budget)
    } else {
        solve_greedy(program)
    }
}

/// Per-cell beam pruning: every cell stays active and independently keeps the
/// smallest candidate-pool subset covering its associated traffic points.
pub fn optimize_local_beams(
    table: &SnrTable,
    associations: &[Option<usize>],
    fitted: &FittedCost,
    threshold_db: f64,
    limits: &SolveLimits,
) -> Result<ActivationPlan, StrategyError> {
    let start = Instant::now();
    let per_cell: Result<Vec<(Vec<u32>, SolverStatus, f64)>, StrategyError> = (0..table.n_cells)
        .into_par_iter()
        .map(|c| {
            let tps: Vec<usize> = associations
                .iter()
                .enumerate()
                .filter_map(|(t, &a)| (a == Some(c)).then_some(t))
                .collect();
            if tps.is_empty() {
                return Ok((Vec::new(), SolverStatus::ExactOptimal, 0.0));
            }
            let pool = table.pool_sizes[c];
            let mut cover_rows = Vec::with_capacity(tps.len());
            for &t in &tps {
                let vars: Vec<u32> = (0..pool)
                    .filter(|&b| table.beam_snr_db(c, b, t) >= threshold_db)
                    .map(|b| b as u32)
                    .collect();
                if vars.is_empty() {
                    return Err(StrategyError::PerCellInfeasible { cell: c });
                }
                cover_rows.push(CoverRow::unit(vars));
            }
            let program = BinaryProgram { n_vars: pool, costs: vec![1.0; pool], cover_rows, link_rows: vec![] };
            let out = run_solver(&program, limits)?;
            match out.status {
                SolverStatus::Infeasible => Err(StrategyError::PerCellInfeasible { cell: c }),
                status => {
                    let beams: Vec<u32> = out
                        .assignment
                        .iter()
                        .enumerate()
                        .filter_map(|(b, &on)| on.then_some(b as u32))
                        .collect();
                    Ok((beams, status, out.gap))
                }
            }
        })
        .collect();
    let per_cell = per_cell?;

    let mut status = SolverStatus::ExactOptimal;
    let mut gap = 0.0;
    let beams_per_cell: Vec<Vec<u32>> = per_cell
        .into_iter()
        .map(|(beams, s, g)| {
            if s == SolverStatus::GreedyFeasible {
                status = SolverStatus::GreedyFeasible;
            }
            gap += g;
            beams
        })
        .collect();

    let mut plan = ActivationPlan {
        active_cells: vec![true; table.n_cells],
        beams_per_cell,
        objective_value: 0.0,
        solver_status: status,
        gap,
        solve_time_s: start.elapsed().as_secs_f64(),
    };
    plan.objective_value = network_energy(&plan, fitted)?;
    Ok(plan)
}

/// Network-wide cell selection: the smallest set of cells (each running its
/// full baseline codebook) that covers every required traffic point.
pub fn optimize_cells(
    table: &SnrTable,
    fitted: &FittedCost,
    threshold_db: f64,
    limits: &SolveLimits,
) -> Result<ActivationPlan, StrategyError> {
    let start = Instant::now();
    let required = table.covered_tp_ids(threshold_db);
    let cover_rows: Vec<CoverRow> = required
        .iter()
        .map(|&t| {
            CoverRow::unit(
                (0..table.n_cells)
                    .filter(|&c| table.cell_snr_db(c, t) >= threshold_db)
                    .map(|c| c as u32)
                    .collect(),
            )
        })
        .collect();
    let program = BinaryProgram {
        n_vars: table.n_cells,
        costs: vec![1.0; table.n_cells],
        cover_rows,
        link_rows: vec![],
    };
    let out = run_solver(&program, limits)?;
    if out.status == SolverStatus::Infeasible {
        return Err(StrategyError::Infeasible { uncovered: vec![] });
    }
    if !out.objective.is_finite() {
        return Err(StrategyError::Unresolved);
    }

    let active_cells = out.assignment;
    let beams_per_cell: Vec<Vec<u32>> = active_cells
        .iter()
        .zip(&table.baseline_indices)
        .map(|(&on, idx)| if on { idx.iter().map(|&k| k as u32).collect() } else { Vec::new() })
        .collect();
    let mut plan = ActivationPlan {
        active_cells,
        beams_per_cell,
        objective_value: 0.0,
        solver_status: out.status,
        gap: out.gap,
        solve_time_s: start.elapsed().as_secs_f64(),
    };
    plan.objective_value = network_energy(&plan, fitted)?;
    Ok(plan)
}

/// Joint cell and beam selection over the network-wide beam pool, linearized
/// with one auxiliary activation variable per cell tied to its beams by a
/// capacity row.
pub fn optimize_joint(
    table: &SnrTable,
    fitted: &FittedCost,
    threshold_db: f64,
    limits: &SolveLimits,
) -> Result<ActivationPlan, StrategyError> {
    let start = Instant::now();
    let n_beams = table.total_beam_rows;
    let n_vars = n_beams + table.n_cells;
    let required = table.covered_tp_ids(threshold_db);

    let mut costs = vec![fitted.m; n_beams];
    costs.extend(std::iter::repeat(fitted.c_static).take(table.n_cells));

    let cover_rows: Vec<CoverRow> = required
        .iter()
        .map(|&t| {
            CoverRow::unit(
                (0..n_beams)
                    .filter(|&row| table.beam_row_snr_db(row, t) >= threshold_db)
                    .map(|row| row as u32)
                    .collect(),
            )
        })
        .collect();
    let link_rows: Vec<LinkRow> = (0..table.n_cells)
        .map(|c| {
            let offset = table.beam_row_offsets[c];
            LinkRow {
                lhs: vec![((n_beams + c) as u32, table.pool_sizes[c] as u32)],
                rhs: (offset..offset + table.pool_sizes[c]).map(|r| (r as u32, 1)).collect(),
            }
        })
        .collect();

    let program = BinaryProgram { n_vars, costs, cover_rows, link_rows };
    let out = run_solver(&program, limits)?;
    if out.status == SolverStatus::Infeasible {
        return Err(StrategyError::Infeasible { uncovered: vec![] });
    }
    if !out.objective.is_finite() {
        return Err(StrategyError::Unresolved);
    }

    let mut beams_per_cell = vec![Vec::new(); table.n_cells];
    for row in 0..n_beams {
        if out.assignment[row] {
            let (c, b) = table.beam_row_owner(row);
            beams_per_cell[c].push(b as u32);
        }
    }
    let active_cells: Vec<bool> = (0..table.n_cells).map(|c| out.assignment[n_beams + c]).collect();
    for c in 0..table.n_cells {
        if active_cells[c] != !beams_per_cell[c].is_empty() {
            return Err(StrategyError::LinkingInconsistent);
        }
    }

    let mut plan = ActivationPlan {
        active_cells,
        beams_per_cell,
        objective_value: 0.0,
        solver_status: out.status,
        gap: out.gap,
        solve_time_s: start.elapsed().as_secs_f64(),
    };
    plan.objective_value = network_energy(&plan, fitted)?;
    debug_assert!((plan.objective_value - out.objective).abs() < 1e-6);
    Ok(plan)
}

/// Runs one strategy against a precomputed SNR table.
pub fn optimize_with_table(
    table: &SnrTable,
    strategy: Strategy,
    fitted: &FittedCost,
    threshold_db: f64,
    limits: &SolveLimits,
) -> Result<ActivationPlan, StrategyError> {
    match strategy {
        Strategy::LocalBeam => {
            let associations = highest_snr_associations(table, threshold_db);
            optimize_local_beams(table, &associations, fitted, threshold_db, limits)
        }
        Strategy::Cell => optimize_cells(table, fitted, threshold_db, limits),
        Strategy::Joint => optimize_joint(table, fitted, threshold_db, limits),
    }
}

/// Required traffic points the plan fails to cover at the threshold. Empty
/// means the plan is coverage-feasible.
pub fn uncovered_required_tps(table: &SnrTable, plan: &ActivationPlan, threshold_db: f64) -> Vec<usize> {
    table
        .covered_tp_ids(threshold_db)
        .into_iter()
        .filter(|&t| {
            !(0..table.n_cells).any(|c| {
                plan.active_cells[c]
                    && plan.beams_per_cell[c]
                        .iter()
                        .any(|&b| table.beam_snr_db(c, b as usize, t) >= threshold_db)
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::NO_PATH_DB;

    const ON: f32 = 10.0;
    const OFF: f32 = NO_PATH_DB as f32;

    // Hand-built table: `snr[cell][beam][tp]` as ON/OFF coverage.
    fn table_from(snr: Vec<Vec<Vec<f32>>>) -> SnrTable {
        let pool_sizes: Vec<usize> = snr.iter().map(|c| c.len()).collect();
        let n_tps = snr[0][0].len();
        let mut flat = Vec::new();
        for cell in &snr {
            for row in cell {
                assert_eq!(row.len(), n_tps);
                flat.extend_from_slice(row);
            }
        }
        let baseline = pool_sizes.iter().map(|&p| (0..p).collect()).collect();
        SnrTable::from_beam_matrix(pool_sizes, n_tps, flat, baseline)
    }

    fn fitted(c_static: f64, m: f64) -> FittedCost {
        FittedCost { c_static, m, r_squared: 1.0 }
    }

    #[test]
    fn local_beam_prefers_single_covering_beam() {
        // Beams {a}, {b}, {a,b}: one beam suffices.
        let table = table_from(vec![vec![
            vec![ON, OFF],
            vec![OFF, ON],
            vec![ON, ON],
        ]]);
        let associations = highest_snr_associations(&table, 0.0);
        assert_eq!(associations, vec![Some(0), Some(0)]);
        let plan =
            optimize_local_beams(&table, &associations, &fitted(10.0, 1.0), 0.0, &SolveLimits::default())
                .unwrap();
        assert_eq!(plan.beams_per_cell, vec![vec![2]]);
        assert_eq!(plan.solver_status, SolverStatus::ExactOptimal);
        // One active cell, one beam.
        assert_eq!(plan.objective_value, 11.0);
    }

    #[test]
    fn local_beam_keeps_unloaded_cells_active_with_zero_beams() {
        let table = table_from(vec![
            vec![vec![ON], vec![ON]],
            vec![vec![OFF], vec![OFF]],
        ]);
        let associations = highest_snr_associations(&table, 0.0);
        let plan =
            optimize_local_beams(&table, &associations, &fitted(10.0, 1.0), 0.0, &SolveLimits::default())
                .unwrap();
        assert_eq!(plan.active_cells, vec![true, true]);
        assert_eq!(plan.beams_per_cell, vec![vec![0], vec![]]);
        // Both cells pay static cost; only one beam runs.
        assert_eq!(plan.objective_value, 21.0);
    }

    #[test]
    fn cell_selection_finds_two_cell_cover() {
        // Cells covering {1,2}, {2,3}, {3,4}: cells 0 and 2 suffice.
        let table = table_from(vec![
            vec![vec![ON, ON, OFF, OFF]],
            vec![vec![OFF, ON, ON, OFF]],
            vec![vec![OFF, OFF, ON, ON]],
        ]);
        let plan = optimize_cells(&table, &fitted(10.0, 1.0), 0.0, &SolveLimits::default()).unwrap();
        assert_eq!(plan.active_cells, vec![true, false, true]);
        assert_eq!(plan.n_active_cells(), 2);
        assert_eq!(plan.solver_status, SolverStatus::ExactOptimal);
    }

    #[test]
    fn disjoint_coverage_keeps_every_cell() {
        let table = table_from(vec![
            vec![vec![ON, OFF]],
            vec![vec![OFF, ON]],
        ]);
        let plan = optimize_cells(&table, &fitted(10.0, 1.0), 0.0, &SolveLimits::default()).unwrap();
        assert_eq!(plan.n_active_cells(), 2);
    }

    #[test]
    fn joint_matches_hand_brute_force() {
        // u1 only via c1b1, u2 via c1b2 or c2b1, u3 only via c2b2.
        // Both cells must run; 3 beams; objective 2·10 + 3·1 = 23.
        let table = table_from(vec![
            vec![vec![ON, OFF, OFF], vec![OFF, ON, OFF]],
            vec![vec![OFF, ON, OFF], vec![OFF, OFF, ON]],
        ]);
        let plan = optimize_joint(&table, &fitted(10.0, 1.0), 0.0, &SolveLimits::default()).unwrap();
        assert_eq!(plan.solver_status, SolverStatus::ExactOptimal);
        assert_eq!(plan.objective_value, 23.0);
        assert_eq!(plan.n_active_cells(), 2);
        assert_eq!(plan.total_active_beams(), 3);
        assert!(uncovered_required_tps(&table, &plan, 0.0).is_empty());
    }

    #[test]
    fn joint_collapses_to_single_beam_when_possible() {
        let table = table_from(vec![
            vec![vec![ON, ON], vec![ON, OFF]],
            vec![vec![OFF, ON], vec![ON, ON]],
        ]);
        let plan = optimize_joint(&table, &fitted(10.0, 1.0), 0.0, &SolveLimits::default()).unwrap();
        assert_eq!(plan.objective_value, 11.0);
        assert_eq!(plan.n_active_cells(), 1);
        assert_eq!(plan.total_active_beams(), 1);
        // Ties resolve to the lowest-indexed beam.
        assert_eq!(plan.beams_per_cell[0], vec![0]);
    }

    #[test]
    fn plan_file_round_trips_through_scenario() {
        use crate::energy::PowerConfig;
        use crate::geometry::Point2;
        use crate::scenario::{build_baseline_codebook, build_candidate_pool, Cell, RfParams, TrafficPoint};

        let max_gain = 28.15;
        let mk_cell = |id: usize, site: usize, bore: f64| Cell {
            id,
            site_id: site,
            boresight_azimuth_deg: bore,
            position: Point2::new(0.0, 0.0),
            antenna_height_m: 6.0,
            baseline_codebook: build_baseline_codebook(max_gain),
            candidate_beam_pool: build_candidate_pool(max_gain),
            tx_power_dbm: 30.0,
            max_array_gain_dbi: max_gain,
        };
        let scenario = Scenario {
            cells: vec![mk_cell(0, 0, 0.0), mk_cell(1, 0, 120.0), mk_cell(2, 0, 240.0)],
            traffic_points: vec![TrafficPoint { id: 0, position: Point2::new(50.0, 0.0) }],
            blockers: vec![],
            rf_params: RfParams::default(),
            power_model: PowerConfig::default(),
            seed: 1,
        };
        let plan = ActivationPlan {
            active_cells: vec![true, false, true],
            beams_per_cell: vec![vec![3, 35], vec![], vec![64]],
            objective_value: 42.5,
            solver_status: SolverStatus::ExactOptimal,
            gap: 0.0,
            solve_time_s: 1.25,
        };
        let file = PlanFile::from_plan(&plan, &scenario, "joint", -6.0);
        assert_eq!(file.active_cell_ids, vec![0, 2]);
        let back = file.clone().into_plan(&scenario);
        assert_eq!(back.active_cells, plan.active_cells);
        assert_eq!(back.beams_per_cell, plan.beams_per_cell);
        assert_eq!(back.objective_value, plan.objective_value);
        // Wall-clock time is not part of the file format.
        assert_eq!(back.solve_time_s, 0.0);
        let json = serde_json::to_string_pretty(&file).unwrap();
        assert!(!json.contains("solve_time"));
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.to_string().parse::<Strategy>().unwrap(), s);
        }
        assert!("beamwise".parse::<Strategy>().is_err());
    }
}
