//! Acceptance suite. Each test checks one release criterion end to end and
//! prints a `acceptance: <criterion> PASS` line on success (visible with
//! `cargo test --test acceptance -- --nocapture`).

use std::sync::OnceLock;
use std::time::Instant;

use nesopt_core::cli;
use nesopt_core::deployment::k_star_index;
use nesopt_core::energy::{fit_linear_cost, idle_cycle_energy, FittedCost, PowerConfig};
use nesopt_core::impact::{analyze, search_reduction};
use nesopt_core::radio::SnrTable;
use nesopt_core::scenario::{validate, NO_PATH_DB};
use nesopt_core::solver::{
    brute_force_oracle, solve_exact, solve_greedy, BinaryProgram, CoverRow, LinkRow, SolverStatus,
};
use nesopt_core::strategies::{
    baseline_plan, highest_snr_associations, optimize_cells, optimize_joint, optimize_local_beams,
    uncovered_required_tps, ActivationPlan, SolveLimits,
};
use nesopt_core::twin::{generate, TwinConfig};

const THRESHOLD_DB: f64 = -6.0;

// ---------------------------------------------------------------------------
// Deterministic pseudo-random helpers (self-contained xorshift).
// ---------------------------------------------------------------------------

struct XorShift(u64);

impl XorShift {
    fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(0xD1B54A32D192ED03))
    }

    fn next(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }

    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

fn random_program(seed: u64, with_links: bool) -> BinaryProgram {
    let mut rng = XorShift::new(seed);
    let n_vars = 4 + rng.below(21) as usize; // 4..=24
    let costs: Vec<f64> = (0..n_vars).map(|_| (1 + rng.below(9)) as f64).collect();
    let n_rows = 2 + rng.below(7) as usize;
    let mut cover_rows = Vec::new();
    for _ in 0..n_rows {
        let len = 1 + rng.below(4.min(n_vars as u64)) as usize;
        let mut vars: Vec<u32> = (0..len).map(|_| rng.below(n_vars as u64) as u32).collect();
        vars.sort_unstable();
        vars.dedup();
        let rhs = if rng.below(5) == 0 && vars.len() >= 2 { 2 } else { 1 };
        cover_rows.push(CoverRow { vars, rhs });
    }
    let mut link_rows = Vec::new();
    if with_links && n_vars >= 3 {
        for _ in 0..1 + rng.below(2) {
            let owner = rng.below(n_vars as u64) as u32;
            let cap = 1 + rng.below(3) as u32;
            let mut rhs: Vec<(u32, u32)> = Vec::new();
            for _ in 0..1 + rng.below(3) {
                let v = rng.below(n_vars as u64) as u32;
                if v != owner && !rhs.iter().any(|&(w, _)| w == v) {
                    rhs.push((v, 1));
                }
            }
            if !rhs.is_empty() {
                link_rows.push(LinkRow { lhs: vec![(owner, cap)], rhs });
            }
        }
    }
    BinaryProgram { n_vars, costs, cover_rows, link_rows }
}

// ---------------------------------------------------------------------------
// Shared desk-scale scenario sweep used by several criteria.
// ---------------------------------------------------------------------------

struct ScenarioOutcome {
    seed: u64,
    n_sites: usize,
    n_tps: usize,
    validate_violations: usize,
    statuses: [SolverStatus; 3],
    baseline_energy: f64,
    local_energy: f64,
    cell_energy: f64,
    joint_energy: f64,
    uncovered_counts: [usize; 4],
    impact_violations: usize,
    plan_snr_below_threshold: usize,
    linearization_mismatch: bool,
}

fn desk_config(i: u64) -> TwinConfig {
    let area_width_m = 130.0 + (i % 4) as f64 * 12.0;
    let area_height_m = 100.0 + (i % 3) as f64 * 12.0;
    let target_poles = 4.0 + (i % 3) as f64;
    let area_km2 = area_width_m * area_height_m / 1e6;
    TwinConfig {
        area_width_m,
        area_height_m,
        block_pitch_m: 40.0 + (i % 3) as f64 * 6.0,
        street_width_m: 10.0,
        building_count: 5 + (i % 5) as u32,
        foliage_count: (i % 3) as u32,
        pole_density_per_km2: target_poles / area_km2,
        tp_resolution_m: 3.0,
        seed: 1000 + i,
        ..TwinConfig::default()
    }
}

fn impact_dominance_violations(
    table: &SnrTable,
    plan: &ActivationPlan,
    threshold_db: f64,
) -> (usize, usize) {
    let report = analyze(table, plan, threshold_db).expect("plan has active beams");
    let mut dominance = 0usize;
    let mut below_threshold = 0usize;
    for i in 0..report.tp_ids.len() {
        if report.snr_plan_db[i] > report.snr_baseline_db[i] + 1e-9 {
            dominance += 1;
        }
        if report.diversity_plan[i] > report.diversity_baseline[i] {
            dominance += 1;
        }
        if report.snr_plan_db[i] < threshold_db {
            below_threshold += 1;
        }
    }
    (dominance, below_threshold)
}

fn scenario_sweep() -> &'static Vec<ScenarioOutcome> {
    static SWEEP: OnceLock<Vec<ScenarioOutcome>> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let limits = SolveLimits::default();
        (0..50u64)
            .map(|i| {
                let config = desk_config(i);
                let scenario = generate(&config).expect("desk config generates");
                let violations = validate(&scenario).len();
                let table = SnrTable::compute(&scenario).expect("links computable");
                let fitted = fit_linear_cost(&scenario.power_model).expect("default power fits");

                let baseline = baseline_plan(&table, &fitted).unwrap();
                let associations = highest_snr_associations(&table, THRESHOLD_DB);
                let local =
                    optimize_local_beams(&table, &associations, &fitted, THRESHOLD_DB, &limits).unwrap();
                let cell = optimize_cells(&table, &fitted, THRESHOLD_DB, &limits).unwrap();
                let joint = optimize_joint(&table, &fitted, THRESHOLD_DB, &limits).unwrap();

                let uncovered_counts = [
                    uncovered_required_tps(&table, &baseline, THRESHOLD_DB).len(),
                    uncovered_required_tps(&table, &local, THRESHOLD_DB).len(),
                    uncovered_required_tps(&table, &cell, THRESHOLD_DB).len(),
                    uncovered_required_tps(&table, &joint, THRESHOLD_DB).len(),
                ];

                let mut impact_violations = 0;
                let mut plan_snr_below_threshold = 0;
                for plan in [&local, &cell, &joint] {
                    let (dom, below) = impact_dominance_violations(&table, plan, THRESHOLD_DB);
                    impact_violations += dom;
                    plan_snr_below_threshold += below;
                }

                // The auxiliary activation vector must agree with the
                // indicator form, and the linear objective must equal the
                // indicator-form objective at the same beam assignment.
                let indicator_cells =
                    joint.beams_per_cell.iter().filter(|b| !b.is_empty()).count();
                let eq_indicator = fitted.c_static * indicator_cells as f64
                    + fitted.m * joint.total_active_beams() as f64;
                let linearization_mismatch = indicator_cells != joint.n_active_cells()
                    || (eq_indicator - joint.objective_value).abs() > 1e-9;

                ScenarioOutcome {
                    seed: config.seed,
                    n_sites: scenario.site_ids().len(),
                    n_tps: scenario.n_traffic_points(),
                    validate_violations: violations,
                    statuses: [local.solver_status, cell.solver_status, joint.solver_status],
                    baseline_energy: baseline.objective_value,
                    local_energy: local.objective_value,
                    cell_energy: cell.objective_value,
                    joint_energy: joint.objective_value,
                    uncovered_counts,
                    impact_violations,
                    plan_snr_below_threshold,
                    linearization_mismatch,
                }
            })
            .collect()
    })
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

#[test]
fn acceptance_oracle_exactness() {
    let start = Instant::now();
    let mut feasible = 0;
    let mut infeasible = 0;
    for seed in 0..220u64 {
        let program = random_program(seed, seed % 2 == 0);
        let oracle = brute_force_oracle(&program).expect("≤24 variables");
        let exact = solve_exact(&program, 1 << 24).expect("valid program");
        if oracle.status == SolverStatus::Infeasible {
            assert_eq!(
                exact.status,
                SolverStatus::Infeasible,
                "seed {seed}: exact must prove infeasibility"
            );
            infeasible += 1;
        } else {
            assert_eq!(
                exact.status,
                SolverStatus::ExactOptimal,
                "seed {seed}: exact must close within budget"
            );
            assert_eq!(
                exact.objective, oracle.objective,
                "seed {seed}: objective mismatch"
            );
            assert!(program.is_feasible(&exact.assignment), "seed {seed}");
            feasible += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(feasible + infeasible >= 200);
    assert!(elapsed <= 60.0, "oracle sweep took {elapsed:.1}s, budget is 60s");
    println!(
        "acceptance: oracle-exactness PASS ({feasible} feasible + {infeasible} infeasible instances in {elapsed:.1}s)"
    );
}

#[test]
fn acceptance_greedy_quality() {
    let harmonic = |n: usize| (1..=n).map(|i| 1.0 / i as f64).sum::<f64>();
    let mut checked = 0;
    for seed in 0..150u64 {
        let program = random_program(seed.wrapping_add(10_000), false);
        let oracle = brute_force_oracle(&program).expect("≤24 variables");
        if oracle.status == SolverStatus::Infeasible {
            continue;
        }
        let greedy = solve_greedy(&program).expect("valid program");
        assert_eq!(greedy.status, SolverStatus::GreedyFeasible, "seed {seed}");
        assert!(program.is_feasible(&greedy.assignment), "seed {seed}");
        let bound = harmonic(program.cover_rows.len()) * oracle.objective;
        assert!(
            greedy.objective <= bound + 1e-9,
            "seed {seed}: greedy {} exceeds H(n)·opt {}",
            greedy.objective,
            bound
        );
        checked += 1;
    }
    assert!(checked >= 100);
    println!("acceptance: greedy-quality PASS ({checked} cover instances within H(n)·optimum)");
}

#[test]
fn acceptance_coverage_feasibility() {
    for outcome in scenario_sweep() {
        assert_eq!(outcome.validate_violations, 0, "seed {}", outcome.seed);
        for (i, &count) in outcome.uncovered_counts.iter().enumerate() {
            assert_eq!(
                count, 0,
                "seed {}: plan {i} leaves {count} required traffic points uncovered",
                outcome.seed
            );
        }
    }
    println!(
        "acceptance: coverage-feasibility PASS (4 plans × {} scenarios, zero violations)",
        scenario_sweep().len()
    );
}

#[test]
fn acceptance_dominance_ordering() {
    let sweep = scenario_sweep();
    let mut strictly_positive = 0;
    for outcome in sweep {
        assert!(outcome.n_sites <= 12, "seed {}: desk scale exceeded", outcome.seed);
        assert!(outcome.n_tps <= 2500, "seed {}: desk scale exceeded", outcome.seed);
        for status in outcome.statuses {
            assert_eq!(status, SolverStatus::ExactOptimal, "seed {}", outcome.seed);
        }
        assert!(
            outcome.joint_energy <= outcome.cell_energy + 1e-9,
            "seed {}: joint {} > cell {}",
            outcome.seed,
            outcome.joint_energy,
            outcome.cell_energy
        );
        assert!(
            outcome.joint_energy <= outcome.local_energy + 1e-9,
            "seed {}: joint {} > local {}",
            outcome.seed,
            outcome.joint_energy,
            outcome.local_energy
        );
        assert!(
            outcome.local_energy <= outcome.baseline_energy + 1e-9,
            "seed {}: local {} > baseline {}",
            outcome.seed,
            outcome.local_energy,
            outcome.baseline_energy
        );
        if outcome.joint_energy < outcome.baseline_energy - 1e-9 {
            strictly_positive += 1;
        }
    }
    let fraction = strictly_positive as f64 / sweep.len() as f64;
    assert!(
        fraction >= 0.8,
        "only {strictly_positive}/{} dense-overlap scenarios saved energy",
        sweep.len()
    );
    println!(
        "acceptance: dominance-ordering PASS ({} scenarios exact, {strictly_positive} with strict joint savings)",
        sweep.len()
    );
}

#[test]
fn acceptance_linearization_correctness() {
    // Consistency on the desk-scale sweep: the auxiliary cell vector equals
    // the indicator, and the linear objective equals the indicator-form
    // objective.
    for outcome in scenario_sweep() {
        assert!(!outcome.linearization_mismatch, "seed {}", outcome.seed);
    }

    // Optimality preservation on small instances: the linearized solve must
    // match exhaustive minimization of the indicator-form objective over all
    // beam subsets.
    let limits = SolveLimits::default();
    let mut checked = 0;
    for seed in 0..40u64 {
        let mut rng = XorShift::new(seed.wrapping_add(77_000));
        let n_cells = 2 + rng.below(3) as usize; // 2..=4
        let pool = 3 + rng.below(3) as usize; // 3..=5 beams per cell
        let n_tps = 3 + rng.below(5) as usize;
        let n_beams = n_cells * pool;
        let mut snr = vec![NO_PATH_DB as f32; n_beams * n_tps];
        for (i, v) in snr.iter_mut().enumerate() {
            if rng.below(100) < 40 {
                *v = 10.0 + (i % 7) as f32;
            }
        }
        let covered: Vec<usize> =
            (0..n_tps).filter(|&t| (0..n_beams).any(|b| snr[b * n_tps + t] >= 0.0)).collect();
        if covered.is_empty() {
            continue;
        }
        let table = SnrTable::from_beam_matrix(
            vec![pool; n_cells],
            n_tps,
            snr.clone(),
            (0..n_cells).map(|_| (0..pool).collect()).collect(),
        );
        let c_static = [10.0, 500.0, 3.5][(seed % 3) as usize];
        let m = [1.0, 37.1875, 0.25][(seed % 3) as usize];
        let fitted = FittedCost { c_static, m, r_squared: 1.0 };

        let plan = optimize_joint(&table, &fitted, 0.0, &limits).expect("coverable instance");
        assert_eq!(plan.solver_status, SolverStatus::ExactOptimal);

        // Exhaustive indicator-form minimum over beam subsets.
        let mut best = f64::INFINITY;
        'mask: for mask in 0u32..(1 << n_beams) {
            for &t in &covered {
                let hits = (0..n_beams).any(|b| mask >> b & 1 == 1 && snr[b * n_tps + t] >= 0.0);
                if !hits {
                    continue 'mask;
                }
            }
            let beams = mask.count_ones() as f64;
            let cells = (0..n_cells)
                .filter(|&c| (0..pool).any(|b| mask >> (c * pool + b) & 1 == 1))
                .count() as f64;
            let objective = c_static * cells + m * beams;
            if objective < best {
                best = objective;
            }
        }
        assert_eq!(
            plan.objective_value, best,
            "seed {seed}: linearized optimum differs from indicator-form optimum"
        );
        checked += 1;
    }
    assert!(checked >= 30);
    println!(
        "acceptance: linearization-correctness PASS ({} scenarios consistent, {checked} small instances exact)",
        scenario_sweep().len()
    );
}

#[test]
fn acceptance_energy_model_shape() {
    let config = PowerConfig::default();
    let costs: Vec<f64> = (0..=64).map(|n| idle_cycle_energy(n, &config).unwrap()).collect();
    for n in 1..costs.len() {
        assert!(
            costs[n] >= costs[n - 1],
            "C({n}) = {} < C({}) = {}",
            costs[n],
            n - 1,
            costs[n - 1]
        );
    }
    let fit = fit_linear_cost(&config).unwrap();
    assert!(fit.r_squared >= 0.99, "r² = {}", fit.r_squared);
    println!(
        "acceptance: energy-model-shape PASS (monotone over [0,64], linear fit r² = {:.6})",
        fit.r_squared
    );
}

#[test]
fn acceptance_k_star_rule() {
    // Hand-enumerated argmax min(P(K), Q(K)) fixtures; expected K* is the
    // frozen 1-based factor. Q(K) = K / a.
    let fixtures: [(&[u32], f64, u32); 20] = [
        (&[50, 30, 12], 0.1, 2),
        (&[0, 0, 0], 0.1, 1),
        (&[5, 0, 0], 1.0, 1),
        (&[100], 0.5, 1),
        (&[10, 10, 10, 10], 0.25, 3),
        (&[100, 90, 80, 70], 0.05, 4),
        (&[100, 90, 80, 70], 1.0, 4),
        (&[3, 3, 3], 0.5, 2),
        (&[1000, 1, 1], 0.01, 1),
        (&[7, 7, 7, 7, 7], 0.1, 1),
        (&[6, 4, 2], 0.5, 2),
        (&[6, 5, 4], 0.9, 3),
        (&[4, 4, 0], 0.9, 2),
        (&[50, 25], 0.04, 1),
        (&[50, 26], 0.04, 2),
        (&[5, 5, 5], 1.0, 3),
        (&[12, 11, 10, 9, 8], 0.2, 2),
        (&[1], 0.001, 1),
        (&[30, 30, 30, 1], 0.15, 3),
        (&[8, 7, 6, 5], 0.5, 3),
    ];
    for (i, (p, a, expected)) in fixtures.iter().enumerate() {
        let q: Vec<f64> = (1..=p.len()).map(|k| k as f64 / a).collect();
        // Independent enumeration of the rule.
        let mut oracle = 0usize;
        let mut oracle_val = f64::NEG_INFINITY;
        for (k, (&pk, &qk)) in p.iter().zip(&q).enumerate() {
            let v = (pk as f64).min(qk);
            if v > oracle_val {
                oracle_val = v;
                oracle = k;
            }
        }
        assert_eq!(oracle as u32 + 1, *expected, "fixture {i}: frozen value is wrong");
        assert_eq!(
            k_star_index(p, &q) as u32 + 1,
            *expected,
            "fixture {i}: rule disagrees with enumeration"
        );
    }
    println!("acceptance: k-star-rule PASS (20 fixtures exact)");
}

#[test]
fn acceptance_impact_dominance() {
    for outcome in scenario_sweep() {
        assert_eq!(
            outcome.impact_violations, 0,
            "seed {}: plan beat baseline on SNR or diversity",
            outcome.seed
        );
        assert_eq!(
            outcome.plan_snr_below_threshold, 0,
            "seed {}: covered traffic point below threshold",
            outcome.seed
        );
    }

    // Search-window arithmetic: 32-beam baseline cut to 9 beams.
    let pool: Vec<Vec<f32>> = (0..32).map(|_| vec![10.0]).collect();
    let table = SnrTable::from_beam_matrix(vec![32], 1, pool.concat(), vec![(0..32).collect()]);
    let plan = ActivationPlan {
        active_cells: vec![true],
        beams_per_cell: vec![(0..9).collect()],
        objective_value: 0.0,
        solver_status: SolverStatus::ExactOptimal,
        gap: 0.0,
        solve_time_s: 0.0,
    };
    let factor = search_reduction(&table, &plan).unwrap();
    assert!((factor - 32.0 / 9.0).abs() <= 1e-9);
    assert!(factor >= 3.0, "consistent with an 'up to 3x' style reduction");
    println!(
        "acceptance: impact-dominance PASS ({} scenarios, search reduction 32/9 = {factor:.6})",
        scenario_sweep().len()
    );
}

#[test]
fn acceptance_compare_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config = desk_config(3);
    let scenario = generate(&config).unwrap();
    let scenario_path = dir.path().join("scenario.json");
    scenario.save(&scenario_path).unwrap();

    let run_compare = |out: std::path::PathBuf| {
        cli::run(cli::NesoptCli {
            threads: 0,
            command: cli::Command::Compare {
                scenario: scenario_path.clone(),
                solve: cli::SolveArgs {
                    ssb_threshold_db: THRESHOLD_DB,
                    power_model: None,
                    exact_limit: 5000,
                    node_budget: 1_000_000,
                },
                out,
            },
        })
        .expect("compare succeeds");
    };
    run_compare(dir.path().join("a"));
    run_compare(dir.path().join("b"));

    for name in ["plan_baseline.json", "plan_local_beam.json", "plan_cell.json", "plan_joint.json"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        assert!(!a.is_empty());
    }
    assert!(dir.path().join("a").join("manifest.json").exists());
    println!("acceptance: compare-determinism PASS (4 plan files byte-identical across runs)");
}
