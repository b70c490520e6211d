//! Command-line front end: scenario generation, deployment, the three
//! energy-saving strategies, impact reports, and the cross-strategy
//! comparison table. Every command leaves a manifest describing the run.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::deployment::{solve_deployment, CapacityParams, DeployError};
use crate::energy::{fit_linear_cost, FittedCost, PowerConfig};
use crate::impact::{analyze, write_csv_reports};
use crate::radio::{connectivity_from_table, LinkGainMap, RowKind, SnrTable};
use crate::scenario::{total_baseline_beams, validate, Scenario};
use crate::strategies::{
    baseline_plan, optimize_with_table, uncovered_required_tps, ActivationPlan, PlanFile, SolveLimits,
    Strategy, StrategyError,
};
use crate::twin::{generate, TwinConfig, TwinError};

/// Exit codes: 0 success, 2 usage/config error, 3 infeasibility, 4 internal.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<TwinError> for CliError {
    fn from(e: TwinError) -> Self {
        match e {
            TwinError::Config { .. } => CliError::Usage(e.to_string()),
            TwinError::NoOutdoorArea | TwinError::NoPoleSlots => CliError::Infeasible(e.to_string()),
        }
    }
}

impl From<DeployError> for CliError {
    fn from(e: DeployError) -> Self {
        match e {
            DeployError::BadParams(_) => CliError::Usage(e.to_string()),
            _ => CliError::Infeasible(e.to_string()),
        }
    }
}

impl From<StrategyError> for CliError {
    fn from(e: StrategyError) -> Self {
        match &e {
            StrategyError::Infeasible { uncovered } => CliError::Infeasible(format!(
                "{e}; first uncoverable traffic points: {:?}",
                &uncovered[..uncovered.len().min(16)]
            )),
            StrategyError::PerCellInfeasible { .. } => CliError::Infeasible(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "nesopt",
    version,
    about = "Idle-mode network energy planning on a synthetic digital twin"
)]
pub struct NesoptCli {
    /// Worker threads for link computation and per-cell solves (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// SSB decode threshold in dB applied to every coverage test.
    #[arg(long = "ssb-threshold-db", default_value_t = -6.0)]
    pub ssb_threshold_db: f64,

    /// Power model JSON overriding the scenario's embedded one.
    #[arg(long = "power-model")]
    pub power_model: Option<PathBuf>,

    /// Largest variable count still solved exactly.
    #[arg(long = "exact-limit", default_value_t = 5000)]
    pub exact_limit: usize,

    /// Branch-and-bound node budget.
    #[arg(long = "node-budget", default_value_t = 1_000_000)]
    pub node_budget: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a scenario from a twin config file.
    Generate {
        /// Twin config JSON. Omitted fields take defaults.
        #[arg(long)]
        config: PathBuf,
        /// Seed override for the generator.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Select deployment poles for peak capacity.
    Deploy {
        #[arg(long)]
        scenario: PathBuf,
        /// Fraction of traffic points that must reach the rate target.
        #[arg(long, default_value_t = 0.8)]
        alpha: f64,
        #[arg(long = "activity-factor", default_value_t = 0.1)]
        activity_factor: f64,
        #[arg(long = "target-rate-mbps", default_value_t = 50.0)]
        target_rate_mbps: f64,
        #[arg(long = "exact-limit", default_value_t = 5000)]
        exact_limit: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one energy-saving strategy.
    Optimize {
        #[arg(long)]
        scenario: PathBuf,
        /// One of: local-beam, cell, joint.
        #[arg(long)]
        strategy: Strategy,
        #[command(flatten)]
        solve: SolveArgs,
        /// Also persist the beam gain map and connectivity matrices.
        #[arg(long = "emit-matrices", default_value_t = false)]
        emit_matrices: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the baseline and all three strategies; write comparison tables.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Analyze how a saved plan affects idle UEs.
    Impact {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long = "ssb-threshold-db")]
        ssb_threshold_db: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Reproducibility record written next to every command's outputs.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 digests of the input files by path.
    pub inputs: BTreeMap<String, String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub timings_s: BTreeMap<String, f64>,
}

impl RunManifest {
    fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            config: serde_json::Value::Null,
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timings_s: BTreeMap::new(),
        }
    }

    fn add_input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.insert(path.display().to_string(), hex);
        Ok(())
    }

    fn save(&self, dir: &Path) -> Result<(), CliError> {
        let body = serde_json::to_string_pretty(self).map_err(|e| CliError::Internal(e.to_string()))?;
        std::fs::write(dir.join("manifest.json"), body)?;
        Ok(())
    }
}

fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let scenario = Scenario::load(path)
        .map_err(|e| CliError::Usage(format!("cannot load scenario {}: {e}", path.display())))?;
    let violations = validate(&scenario);
    if !violations.is_empty() {
        let listed: Vec<String> = violations.iter().take(8).map(|v| v.to_string()).collect();
        return Err(CliError::Usage(format!(
            "scenario fails validation ({} violations): {}",
            violations.len(),
            listed.join("; ")
        )));
    }
    Ok(scenario)
}

fn resolve_power_model(scenario: &Scenario, override_path: &Option<PathBuf>) -> Result<PowerConfig, CliError> {
    match override_path {
        None => Ok(scenario.power_model),
        Some(path) => {
            let body = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read power model {}: {e}", path.display())))?;
            serde_json::from_str(&body)
                .map_err(|e| CliError::Usage(format!("bad power model {}: {e}", path.display())))
        }
    }
}

fn fitted_pricing(power: &PowerConfig) -> Result<FittedCost, CliError> {
    fit_linear_cost(power).map_err(|e| CliError::Usage(format!("power model rejected: {e}")))
}

struct StrategyRow {
    label: String,
    active_cells: usize,
    active_beams: usize,
    energy: f64,
    saving_pct: Option<f64>,
    solve_time_s: f64,
}

fn strategy_row(label: &str, plan: &ActivationPlan, baseline_energy: f64) -> StrategyRow {
    let saving = if label == "baseline" {
        None
    } else {
        Some(100.0 * (baseline_energy - plan.objective_value) / baseline_energy)
    };
    StrategyRow {
        label: label.to_string(),
        active_cells: plan.n_active_cells(),
        active_beams: plan.total_active_beams(),
        energy: plan.objective_value,
        saving_pct: saving,
        solve_time_s: plan.solve_time_s,
    }
}

fn write_rows_csv(path: &Path, rows: &[StrategyRow]) -> Result<(), CliError> {
    let mut f = std::fs::File::create(path)?;
    writeln!(
        f,
        "strategy,number_of_active_cells,number_of_active_beams,energy_consumption_relative_unit,energy_saving_pct,computation_time_seconds"
    )?;
    for r in rows {
        let saving = r.saving_pct.map_or("N/A".to_string(), |s| format!("{s:.1}"));
        writeln!(
            f,
            "{},{},{},{:.4},{},{:.6}",
            r.label, r.active_cells, r.active_beams, r.energy, saving, r.solve_time_s
        )?;
    }
    Ok(())
}

fn write_rows_table(path: &Path, rows: &[StrategyRow]) -> Result<(), CliError> {
    let mut f = std::fs::File::create(path)?;
    writeln!(
        f,
        "{:<24} {:>22} {:>22} {:>34} {:>18}",
        "Strategy",
        "Number of Active Cells",
        "Number of Active Beams",
        "Energy Consumption (relative unit)",
        "Energy Saving (%)"
    )?;
    for r in rows {
        let saving = r.saving_pct.map_or("N/A".to_string(), |s| format!("{s:.1}"));
        writeln!(
            f,
            "{:<24} {:>22} {:>22} {:>34.4} {:>18}",
            r.label, r.active_cells, r.active_beams, r.energy, saving
        )?;
    }
    writeln!(f)?;
    writeln!(f, "{:<24} {:>26}", "Strategy", "Computation time (seconds)")?;
    for r in rows {
        if r.label == "baseline" {
            writeln!(f, "{:<24} {:>26}", r.label, "N/A")?;
        } else {
            writeln!(f, "{:<24} {:>26.3}", r.label, r.solve_time_s)?;
        }
    }
    Ok(())
}

fn run_one_strategy(
    table: &SnrTable,
    strategy: Strategy,
    fitted: &FittedCost,
    threshold_db: f64,
    limits: &SolveLimits,
) -> Result<ActivationPlan, CliError> {
    let plan = optimize_with_table(table, strategy, fitted, threshold_db, limits)?;
    let uncovered = uncovered_required_tps(table, &plan, threshold_db);
    if !uncovered.is_empty() {
        return Err(CliError::Internal(format!(
            "{strategy} plan leaves {} required traffic points uncovered",
            uncovered.len()
        )));
    }
    Ok(plan)
}

fn cmd_generate(config_path: &Path, seed: Option<u64>, out: &Path) -> Result<(), CliError> {
    let body = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", config_path.display())))?;
    let mut config: TwinConfig = serde_json::from_str(&body)
        .map_err(|e| CliError::Usage(format!("bad twin config {}: {e}", config_path.display())))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }

    std::fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("generate");
    manifest.add_input(config_path)?;
    manifest.seed = Some(config.seed);
    manifest.config = serde_json::to_value(&config).map_err(|e| CliError::Internal(e.to_string()))?;

    let start = Instant::now();
    let scenario = generate(&config)?;
    manifest.timings_s.insert("generate".to_string(), start.elapsed().as_secs_f64());

    scenario.save(&out.join("scenario.json"))?;
    manifest.save(out)?;
    println!(
        "scenario: {} cells on {} sites, {} traffic points, {} baseline beams -> {}",
        scenario.n_cells(),
        scenario.site_ids().len(),
        scenario.n_traffic_points(),
        total_baseline_beams(&scenario),
        out.join("scenario.json").display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_deploy(
    scenario_path: &Path,
    alpha: f64,
    activity_factor: f64,
    target_rate_mbps: f64,
    exact_limit: usize,
    out: &Path,
) -> Result<(), CliError> {
    let scenario = load_scenario(scenario_path)?;
    let params = CapacityParams { alpha, activity_factor, target_rate_mbps, ..CapacityParams::default() };
    let limits = SolveLimits { exact_var_limit: exact_limit, ..SolveLimits::default() };

    std::fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("deploy");
    manifest.add_input(scenario_path)?;
    manifest.seed = Some(scenario.seed);
    manifest.config = serde_json::to_value(&params).map_err(|e| CliError::Internal(e.to_string()))?;

    let start = Instant::now();
    let table = SnrTable::compute(&scenario).map_err(|e| CliError::Infeasible(e.to_string()))?;
    manifest.timings_s.insert("link_table".to_string(), start.elapsed().as_secs_f64());

    let start = Instant::now();
    let plan = solve_deployment(&scenario, &table, &params, &limits)?;
    manifest.timings_s.insert("deploy_solve".to_string(), start.elapsed().as_secs_f64());

    let body = serde_json::to_string_pretty(&plan).map_err(|e| CliError::Internal(e.to_string()))?;
    std::fs::write(out.join("deployment.json"), body)?;
    manifest.save(out)?;
    println!(
        "deployment: {} of {} poles cover {}/{} traffic points ({:.1}%, target {:.1}%)",
        plan.selected_sites.len(),
        scenario.site_ids().len(),
        plan.covered_count,
        plan.n_traffic_points,
        100.0 * plan.achieved_fraction,
        100.0 * alpha
    );
    Ok(())
}

fn cmd_optimize(
    scenario_path: &Path,
    strategy: Strategy,
    solve: &SolveArgs,
    emit_matrices: bool,
    out: &Path,
) -> Result<(), CliError> {
    let scenario = load_scenario(scenario_path)?;
    let power = resolve_power_model(&scenario, &solve.power_model)?;
    let fitted = fitted_pricing(&power)?;
    let limits = SolveLimits { exact_var_limit: solve.exact_limit, node_budget: solve.node_budget };

    std::fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("optimize");
    manifest.add_input(scenario_path)?;
    if let Some(p) = &solve.power_model {
        manifest.add_input(p)?;
    }
    manifest.seed = Some(scenario.seed);
    manifest.config = serde_json::json!({
        "strategy": strategy.to_string(),
        "ssb_threshold_db": solve.ssb_threshold_db,
        "exact_limit": solve.exact_limit,
        "node_budget": solve.node_budget,
        "fitted": fitted,
    });

    let start = Instant::now();
    let table = SnrTable::compute(&scenario).map_err(|e| CliError::Infeasible(e.to_string()))?;
    manifest.timings_s.insert("link_table".to_string(), start.elapsed().as_secs_f64());

    let baseline = baseline_plan(&table, &fitted).map_err(CliError::from)?;
    let plan = run_one_strategy(&table, strategy, &fitted, solve.ssb_threshold_db, &limits)?;
    manifest
        .timings_s
        .insert(format!("solve_{strategy}"), plan.solve_time_s);

    let file = PlanFile::from_plan(&plan, &scenario, &strategy.to_string(), solve.ssb_threshold_db);
    file.save(&out.join(format!("plan_{}.json", strategy_slug(strategy))))?;

    let rows = vec![
        strategy_row("baseline", &baseline, baseline.objective_value),
        strategy_row(&strategy.to_string(), &plan, baseline.objective_value),
    ];
    write_rows_csv(&out.join("summary.csv"), &rows)?;
    write_rows_table(&out.join("summary.txt"), &rows)?;

    if emit_matrices {
        let start = Instant::now();
        LinkGainMap::from_table(&table, &scenario).save(&out.join("beam_gain_map.bin"))?;
        let cell_sites: Vec<usize> = scenario.cells.iter().map(|c| c.site_id).collect();
        for kind in [RowKind::Cell, RowKind::Beam] {
            let m = connectivity_from_table(&table, &scenario.site_ids(), &cell_sites, solve.ssb_threshold_db, kind);
            m.save(
                &out.join(format!("connectivity_{kind}.bin")),
                &out.join(format!("connectivity_{kind}.json")),
            )?;
        }
        manifest.timings_s.insert("emit_matrices".to_string(), start.elapsed().as_secs_f64());
    }

    manifest.save(out)?;
    println!(
        "{strategy}: {} cells, {} beams, energy {:.1} ({} baseline), saving {:.1}%",
        plan.n_active_cells(),
        plan.total_active_beams(),
        plan.objective_value,
        baseline.objective_value,
        100.0 * (baseline.objective_value - plan.objective_value) / baseline.objective_value
    );
    Ok(())
}

fn strategy_slug(strategy: Strategy) -> &'static str {
    match strategy {
        Strategy::LocalBeam => "local_beam",
        Strategy::Cell => "cell",
        Strategy::Joint => "joint",
    }
}

fn cmd_compare(scenario_path: &Path, solve: &SolveArgs, out: &Path) -> Result<(), CliError> {
    let scenario = load_scenario(scenario_path)?;
    let power = resolve_power_model(&scenario, &solve.power_model)?;
    let fitted = fitted_pricing(&power)?;
    let limits = SolveLimits { exact_var_limit: solve.exact_limit, node_budget: solve.node_budget };

    std::fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("compare");
    manifest.add_input(scenario_path)?;
    if let Some(p) = &solve.power_model {
        manifest.add_input(p)?;
    }
    manifest.seed = Some(scenario.seed);
    manifest.config = serde_json::json!({
        "ssb_threshold_db": solve.ssb_threshold_db,
        "exact_limit": solve.exact_limit,
        "node_budget": solve.node_budget,
        "fitted": fitted,
    });

    let start = Instant::now();
    let table = SnrTable::compute(&scenario).map_err(|e| CliError::Infeasible(e.to_string()))?;
    manifest.timings_s.insert("link_table".to_string(), start.elapsed().as_secs_f64());

    let baseline = baseline_plan(&table, &fitted).map_err(CliError::from)?;
    PlanFile::from_plan(&baseline, &scenario, "baseline", solve.ssb_threshold_db)
        .save(&out.join("plan_baseline.json"))?;

    let mut rows = vec![strategy_row("baseline", &baseline, baseline.objective_value)];
    for strategy in Strategy::ALL {
        let plan = run_one_strategy(&table, strategy, &fitted, solve.ssb_threshold_db, &limits)?;
        manifest.timings_s.insert(format!("solve_{strategy}"), plan.solve_time_s);
        PlanFile::from_plan(&plan, &scenario, &strategy.to_string(), solve.ssb_threshold_db)
            .save(&out.join(format!("plan_{}.json", strategy_slug(strategy))))?;
        let report = analyze(&table, &plan, solve.ssb_threshold_db)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        write_csv_reports(&report, &out.join(format!("impact_{}", strategy_slug(strategy))))?;
        rows.push(strategy_row(&strategy.to_string(), &plan, baseline.objective_value));
    }

    write_rows_csv(&out.join("comparison.csv"), &rows)?;
    write_rows_table(&out.join("comparison.txt"), &rows)?;
    manifest.save(out)?;

    for r in &rows {
        let saving = r.saving_pct.map_or("N/A".to_string(), |s| format!("{s:.1}%"));
        println!(
            "{:<12} cells {:>5} beams {:>6} energy {:>12.1} saving {}",
            r.label, r.active_cells, r.active_beams, r.energy, saving
        );
    }
    Ok(())
}

fn cmd_impact(
    scenario_path: &Path,
    plan_path: &Path,
    threshold_override: Option<f64>,
    out: &Path,
) -> Result<(), CliError> {
    let scenario = load_scenario(scenario_path)?;
    let file = PlanFile::load(plan_path)
        .map_err(|e| CliError::Usage(format!("cannot load plan {}: {e}", plan_path.display())))?;
    let threshold = threshold_override.unwrap_or(file.threshold_db);

    std::fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("impact");
    manifest.add_input(scenario_path)?;
    manifest.add_input(plan_path)?;
    manifest.seed = Some(scenario.seed);
    manifest.config = serde_json::json!({ "ssb_threshold_db": threshold });

    let start = Instant::now();
    let table = SnrTable::compute(&scenario).map_err(|e| CliError::Infeasible(e.to_string()))?;
    manifest.timings_s.insert("link_table".to_string(), start.elapsed().as_secs_f64());

    let plan = file.into_plan(&scenario);
    let report = analyze(&table, &plan, threshold).map_err(|e| CliError::Infeasible(e.to_string()))?;
    write_csv_reports(&report, out)?;
    manifest.save(out)?;
    println!(
        "impact: {} covered traffic points, search reduction {:.2}x",
        report.tp_ids.len(),
        report.search_reduction_factor
    );
    Ok(())
}

/// Executes a parsed command line.
pub fn run(cli: NesoptCli) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate { config, seed, out } => cmd_generate(config, *seed, out),
        Command::Deploy { scenario, alpha, activity_factor, target_rate_mbps, exact_limit, out } => {
            cmd_deploy(scenario, *alpha, *activity_factor, *target_rate_mbps, *exact_limit, out)
        }
        Command::Optimize { scenario, strategy, solve, emit_matrices, out } => {
            cmd_optimize(scenario, *strategy, solve, *emit_matrices, out)
        }
        Command::Compare { scenario, solve, out } => cmd_compare(scenario, solve, out),
        Command::Impact { scenario, plan, ssb_threshold_db, out } => {
            cmd_impact(scenario, plan, *ssb_threshold_db, out)
        }
    }
}
