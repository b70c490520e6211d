//! Idle-mode cellular network energy planning on a synthetic digital twin.
//!
//! The crate models a small mmWave deployment (sites, sector cells, SSB beam
//! pools, an outdoor traffic-point grid), prices idle-mode energy as a linear
//! function of active cells and beams, and minimizes that cost with exact
//! binary set-cover solving at three granularities: per-cell beam pruning,
//! network-wide cell selection, and joint cell+beam selection. A deployment
//! planner picks candidate pole sites for peak capacity, and an impact module
//! reports what the savings cost idle UEs.

pub mod cli;
pub mod deployment;
pub mod energy;
pub mod geometry;
pub mod impact;
pub mod matrixio;
pub mod radio;
pub mod scenario;
pub mod solver;
pub mod strategies;
pub mod twin;

pub use deployment::{solve_deployment, CapacityParams, DeploymentPlan};
pub use energy::{fit_linear_cost, idle_cycle_energy, network_energy, FittedCost, PowerConfig};
pub use radio::{build_connectivity, build_incidence, link_snr_db, ConnectivityMatrix, RowKind, SnrTable};
pub use scenario::{total_baseline_beams, validate, Scenario};
pub use solver::{brute_force_oracle, solve_exact, solve_greedy, BinaryProgram, SolverStatus};
pub use strategies::{optimize_with_table, ActivationPlan, SolveLimits, Strategy};
pub use twin::{generate, TwinConfig};
