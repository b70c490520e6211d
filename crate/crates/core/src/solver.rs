//! Binary linear-program solving: exact branch-and-bound with constraint
//! propagation, a deterministic ratio greedy, a partial-cover search, and an
//! exhaustive oracle for small instances.
//!
//! Programs are minimization problems over binary variables with non-negative
//! costs, covering constraints `Σ x_v ≥ rhs`, and linking constraints
//! `Σ c·x_lhs ≥ Σ d·x_rhs` with small non-negative integer coefficients.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exhaustive enumeration refuses instances larger than this.
pub const ORACLE_VAR_LIMIT: usize = 24;

// Bound-pruning guard: objectives closer than this are treated as equal.
const OBJ_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("variable index {0} out of range for {1} variables")]
    VariableOutOfRange(u32, usize),
    #[error("objective coefficients must be finite and non-negative")]
    BadCost,
    #[error("exhaustive oracle supports at most {ORACLE_VAR_LIMIT} variables, got {0}")]
    TooManyVariables(usize),
}

/// Covering constraint: at least `rhs` of the listed variables must be 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverRow {
    pub vars: Vec<u32>,
    pub rhs: u32,
}

impl CoverRow {
    pub fn unit(vars: Vec<u32>) -> Self {
        Self { vars, rhs: 1 }
    }
}

/// Linking constraint: Σ coeff·x over `lhs` ≥ Σ coeff·x over `rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRow {
    pub lhs: Vec<(u32, u32)>,
    pub rhs: Vec<(u32, u32)>,
}

/// A binary minimization program with cover and linking rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryProgram {
    pub n_vars: usize,
    pub costs: Vec<f64>,
    pub cover_rows: Vec<CoverRow>,
    pub link_rows: Vec<LinkRow>,
}

impl BinaryProgram {
    pub fn validate(&self) -> Result<(), SolveError> {
        if self.costs.len() != self.n_vars {
            return Err(SolveError::BadCost);
        }
        for c in &self.costs {
            if !c.is_finite() || *c < 0.0 {
                return Err(SolveError::BadCost);
            }
        }
        let check = |v: u32| {
            if (v as usize) < self.n_vars {
                Ok(())
            } else {
                Err(SolveError::VariableOutOfRange(v, self.n_vars))
            }
        };
        for row in &self.cover_rows {
            for &v in &row.vars {
                check(v)?;
            }
        }
        for row in &self.link_rows {
            for &(v, _) in row.lhs.iter().chain(&row.rhs) {
                check(v)?;
            }
        }
        Ok(())
    }

    pub fn objective(&self, assignment: &[bool]) -> f64 {
        assignment
            .iter()
            .zip(&self.costs)
            .filter_map(|(&on, &c)| on.then_some(c))
            .sum()
    }

    pub fn is_feasible(&self, assignment: &[bool]) -> bool {
        for row in &self.cover_rows {
            let ones = row.vars.iter().filter(|&&v| assignment[v as usize]).count();
            if (ones as u32) < row.rhs {
                return false;
            }
        }
        for row in &self.link_rows {
            let lhs: i64 = row.lhs.iter().filter(|&&(v, _)| assignment[v as usize]).map(|&(_, c)| c as i64).sum();
            let rhs: i64 = row.rhs.iter().filter(|&&(v, _)| assignment[v as usize]).map(|&(_, c)| c as i64).sum();
            if lhs < rhs {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverStatus {
    ExactOptimal,
    GreedyFeasible,
    Infeasible,
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolverStatus::ExactOptimal => write!(f, "exact_optimal"),
            SolverStatus::GreedyFeasible => write!(f, "greedy_feasible"),
            SolverStatus::Infeasible => write!(f, "infeasible"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub assignment: Vec<bool>,
    pub objective: f64,
    pub status: SolverStatus,
    /// Upper bound minus the best proven lower bound; 0 for exact solves.
    pub gap: f64,
    pub nodes: u64,
}

impl SolveOutcome {
    fn infeasible(n_vars: usize, nodes: u64) -> Self {
        Self {
            assignment: vec![false; n_vars],
            objective: f64::INFINITY,
            status: SolverStatus::Infeasible,
            gap: 0.0,
            nodes,
        }
    }
}

// ---------------------------------------------------------------------------
// Presolve
// ---------------------------------------------------------------------------

// Cover rows normalized (sorted, deduplicated vars), merged by identical
// support, and reduced by dropping rows implied by a subset row with at least
// the same rhs. Returns None when some row is unsatisfiable outright.
fn presolve_cover(program: &BinaryProgram) -> Option<Vec<CoverRow>> {
    let mut merged: HashMap<Vec<u32>, u32> = HashMap::new();
    for row in &program.cover_rows {
        if row.rhs == 0 {
            continue;
        }
        let mut vars = row.vars.clone();
        vars.sort_unstable();
        vars.dedup();
        if (vars.len() as u32) < row.rhs {
            return None;
        }
        let entry = merged.entry(vars).or_insert(0);
        *entry = (*entry).max(row.rhs);
    }
    let mut rows: Vec<CoverRow> = merged.into_iter().map(|(vars, rhs)| CoverRow { vars, rhs }).collect();
    rows.sort_unstable_by(|a, b| (a.vars.len(), &a.vars, a.rhs).cmp(&(b.vars.len(), &b.vars, b.rhs)));

    if rows.len() <= 4096 {
        let words = program.n_vars.div_ceil(64);
        let masks: Vec<Vec<u64>> = rows
            .iter()
            .map(|r| {
                let mut m = vec![0u64; words];
                for &v in &r.vars {
                    m[v as usize / 64] |= 1 << (v % 64);
                }
                m
            })
            .collect();
        let mut dropped = vec![false; rows.len()];
        for i in 0..rows.len() {
            if dropped[i] {
                continue;
            }
            for j in 0..rows.len() {
                if i == j || dropped[j] || rows[i].vars.len() > rows[j].vars.len() || rows[i].rhs < rows[j].rhs {
                    continue;
                }
                let subset = masks[i].iter().zip(&masks[j]).all(|(a, b)| a & !b == 0);
                if subset {
                    dropped[j] = true;
                }
            }
        }
        rows = rows
            .into_iter()
            .zip(dropped)
            .filter_map(|(r, d)| (!d).then_some(r))
            .collect();
    }
    Some(rows)
}

// ---------------------------------------------------------------------------
// Branch and bound
// ---------------------------------------------------------------------------

const FREE: i8 = -1;

#[derive(Clone, Copy)]
enum LinkSide {
    Lhs,
    Rhs,
}

#[derive(Clone, Copy)]
struct RowState {
    rhs: u32,
    n_ones: u32,
    n_free: u32,
}

impl RowState {
    fn deficit(&self) -> u32 {
        self.rhs.saturating_sub(self.n_ones)
    }
}

#[derive(Clone, Copy)]
struct LinkState {
    /// Max achievable lhs: fixed-1 plus free contributions.
    lhs_ub: i64,
    /// lhs contribution already locked in by fixed-1 variables.
    lhs_fix1: i64,
    /// rhs contribution locked in by fixed-1 variables.
    rhs_lb: i64,
}

struct Search<'a> {
    program: &'a BinaryProgram,
    rows: Vec<CoverRow>,
    var_rows: Vec<Vec<u32>>,
    var_links: Vec<Vec<(u32, LinkSide, u32)>>,
    state: Vec<i8>,
    row_state: Vec<RowState>,
    link_state: Vec<LinkState>,
    /// Per-variable count of currently unsatisfied cover rows containing it.
    ucov: Vec<u32>,
    total_deficit: u64,
    cost_so_far: f64,
    trail: Vec<u32>,
    // Owner structure from single-lhs linking rows: activating a member
    // forces its owner, so owners carry a provable share of any completion's
    // cost. `owners_pure` means no owner doubles as a coverer, keeping the
    // owner bound additive with the coverage bound.
    owner_list: Vec<u32>,
    owner_members: Vec<Vec<u32>>,
    owner_static_cov: Vec<u32>,
    owners_of_var: Vec<Vec<u32>>,
    owners_pure: bool,
    incumbent: Option<(f64, Vec<bool>)>,
    nodes_used: u64,
    node_budget: u64,
    aborted: bool,
    min_open_lb: f64,
}

impl<'a> Search<'a> {
    fn new(program: &'a BinaryProgram, rows: Vec<CoverRow>, node_budget: u64) -> Self {
        let n = program.n_vars;
        let mut var_rows = vec![Vec::new(); n];
        let mut ucov = vec![0u32; n];
        let mut total_deficit = 0u64;
        let mut row_state = Vec::with_capacity(rows.len());
        for (r, row) in rows.iter().enumerate() {
            for &v in &row.vars {
                var_rows[v as usize].push(r as u32);
                ucov[v as usize] += 1;
            }
            total_deficit += row.rhs as u64;
            row_state.push(RowState { rhs: row.rhs, n_ones: 0, n_free: row.vars.len() as u32 });
        }
        let mut var_links = vec![Vec::new(); n];
        let mut link_state = Vec::with_capacity(program.link_rows.len());
        for (l, row) in program.link_rows.iter().enumerate() {
            let mut lhs_ub = 0i64;
            for &(v, c) in &row.lhs {
                var_links[v as usize].push((l as u32, LinkSide::Lhs, c));
                lhs_ub += c as i64;
            }
            for &(v, c) in &row.rhs {
                var_links[v as usize].push((l as u32, LinkSide::Rhs, c));
            }
            link_state.push(LinkState { lhs_ub, lhs_fix1: 0, rhs_lb: 0 });
        }

        let mut owners_of_var = vec![Vec::new(); n];
        let mut owner_list: Vec<u32> = Vec::new();
        for row in &program.link_rows {
            if row.lhs.len() != 1 {
                continue;
            }
            let owner = row.lhs[0].0;
            if !owner_list.contains(&owner) {
                owner_list.push(owner);
            }
            for &(v, _) in &row.rhs {
                if !owners_of_var[v as usize].contains(&owner) {
                    owners_of_var[v as usize].push(owner);
                }
            }
        }
        owner_list.sort_unstable();
        let owner_members: Vec<Vec<u32>> = owner_list
            .iter()
            .map(|&o| {
                (0..n as u32).filter(|&v| owners_of_var[v as usize].contains(&o)).collect::<Vec<u32>>()
            })
            .collect();
        let owner_static_cov: Vec<u32> = owner_members
            .iter()
            .map(|members| {
                let mut row_ids: Vec<u32> = members
                    .iter()
                    .flat_map(|&m| var_rows[m as usize].iter().copied())
                    .collect();
                row_ids.sort_unstable();
                row_ids.dedup();
                row_ids.len() as u32
            })
            .collect();
        let owners_pure = owner_list.iter().all(|&o| var_rows[o as usize].is_empty());

        Self {
            program,
            rows,
            var_rows,
            var_links,
            state: vec![FREE; n],
            row_state,
            link_state,
            ucov,
            total_deficit,
            cost_so_far: 0.0,
            trail: Vec::with_capacity(n),
            owner_list,
            owner_members,
            owner_static_cov,
            owners_of_var,
            owners_pure,
            incumbent: None,
            nodes_used: 0,
            node_budget,
            aborted: false,
            min_open_lb: f64::INFINITY,
        }
    }

    /// Applies a fixing and propagates its consequences. Returns false on
    /// conflict; the caller must rewind the trail either way.
    fn fix_and_propagate(&mut self, var: u32, val: i8) -> bool {
        let mut queue = vec![(var, val)];
        while let Some((v, val)) = queue.pop() {
            let vi = v as usize;
            match self.state[vi] {
                s if s == val => continue,
                FREE => {}
                _ => return false,
            }
            self.state[vi] = val;
            self.trail.push(v);
            if val == 1 {
                self.cost_so_far += self.program.costs[vi];
            }
            for ri in 0..self.var_rows[vi].len() {
                let r = self.var_rows[vi][ri] as usize;
                let old_deficit = self.row_state[r].deficit();
                if val == 1 {
                    self.row_state[r].n_ones += 1;
                    if old_deficit >= 1 {
                        self.total_deficit -= 1;
                        if old_deficit == 1 {
                            for &u in &self.rows[r].vars {
                                self.ucov[u as usize] -= 1;
                            }
                        }
                    }
                }
                self.row_state[r].n_free -= 1;
                let rs = self.row_state[r];
                let deficit = rs.deficit();
                if deficit > rs.n_free {
                    return false;
                }
                if deficit > 0 && deficit == rs.n_free {
                    for &u in &self.rows[r].vars {
                        if self.state[u as usize] == FREE {
                            queue.push((u, 1));
                        }
                    }
                }
            }
            for li in 0..self.var_links[vi].len() {
                let (l, side, coeff) = self.var_links[vi][li];
                let l = l as usize;
                match side {
                    LinkSide::Lhs => {
                        if val == 0 {
                            self.link_state[l].lhs_ub -= coeff as i64;
                        } else {
                            self.link_state[l].lhs_fix1 += coeff as i64;
                        }
                    }
                    LinkSide::Rhs => {
                        if val == 1 {
                            self.link_state[l].rhs_lb += coeff as i64;
                        }
                    }
                }
                let ls = self.link_state[l];
                if ls.lhs_ub < ls.rhs_lb {
                    return false;
                }
                for &(u, c) in &self.program.link_rows[l].lhs {
                    if self.state[u as usize] == FREE && ls.lhs_ub - (c as i64) < ls.rhs_lb {
                        queue.push((u, 1));
                    }
                }
                for &(w, d) in &self.program.link_rows[l].rhs {
                    if self.state[w as usize] == FREE && ls.rhs_lb + (d as i64) > ls.lhs_ub {
                        queue.push((w, 0));
                    }
                }
            }
        }
        true
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().unwrap();
            let vi = v as usize;
            let val = self.state[vi];
            self.state[vi] = FREE;
            if val == 1 {
                self.cost_so_far -= self.program.costs[vi];
            }
            for ri in 0..self.var_rows[vi].len() {
                let r = self.var_rows[vi][ri] as usize;
                if val == 1 {
                    let rs = self.row_state[r];
                    // Mirror of the forward update: this fix reduced the
                    // deficit iff n_ones (still counting it) ≤ rhs.
                    if rs.n_ones <= rs.rhs {
                        self.total_deficit += 1;
                        if rs.n_ones == rs.rhs {
                            for &u in &self.rows[r].vars {
                                self.ucov[u as usize] += 1;
                            }
                        }
                    }
                    self.row_state[r].n_ones -= 1;
                }
                self.row_state[r].n_free += 1;
            }
            for li in 0..self.var_links[vi].len() {
                let (l, side, coeff) = self.var_links[vi][li];
                let l = l as usize;
                match side {
                    LinkSide::Lhs => {
                        if val == 0 {
                            self.link_state[l].lhs_ub += coeff as i64;
                        } else {
                            self.link_state[l].lhs_fix1 -= coeff as i64;
                        }
                    }
                    LinkSide::Rhs => {
                        if val == 1 {
                            self.link_state[l].rhs_lb -= coeff as i64;
                        }
                    }
                }
            }
        }
    }

    /// Scan of the free variables: branch candidate (max unsatisfied-row
    /// coverage, lowest index), plus the ingredients of the cheap bound.
    fn scan(&self) -> (Option<u32>, u32, f64) {
        let mut best_var = None;
        let mut best_score = 0u32;
        let mut max_ucov = 0u32;
        let mut min_cost = f64::INFINITY;
        for v in 0..self.program.n_vars {
            if self.state[v] != FREE {
                continue;
            }
            let s = self.ucov[v];
            if s > 0 {
                max_ucov = max_ucov.max(s);
                min_cost = min_cost.min(self.program.costs[v]);
                if s > best_score {
                    best_score = s;
                    best_var = Some(v as u32);
                }
            }
        }
        (best_var, max_ucov, min_cost)
    }

    /// Undecided owner whose free members still matter most for coverage.
    /// Branching owners first factors the search: value 0 silences the whole
    /// member pool, value 1 pays the activation cost up front.
    fn owner_branch(&self) -> Option<u32> {
        let mut best: Option<(u64, u32)> = None;
        for (i, &o) in self.owner_list.iter().enumerate() {
            if self.state[o as usize] != FREE {
                continue;
            }
            let score: u64 = self.owner_members[i]
                .iter()
                .filter(|&&m| self.state[m as usize] == FREE)
                .map(|&m| self.ucov[m as usize] as u64)
                .sum();
            if score > 0 && best.map_or(true, |(bs, _)| score > bs) {
                best = Some((score, o));
            }
        }
        best.map(|(_, o)| o)
    }

    // Two additive certificates over disjoint variable sets: a charging bound
    // on the coverers (every unsatisfied row pays deficit-many picks at the
    // best cost-per-covered-row ratio available in it) plus an activation
    // bound on the owners (rows reachable only through inactive owners force
    // new activations). The owner part applies only while owners never
    // themselves cover rows, which keeps the two sums disjoint.
    fn strong_bound(&self) -> f64 {
        let mut frac_sum = 0.0;
        let mut rows_needing_new_owner = 0u64;
        for (r, row) in self.rows.iter().enumerate() {
            let deficit = self.row_state[r].deficit();
            if deficit == 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut reachable_without_new_owner = false;
            for &v in &row.vars {
                let vi = v as usize;
                if self.state[vi] != FREE {
                    continue;
                }
                if self.ucov[vi] > 0 {
                    let ratio = self.program.costs[vi] / self.ucov[vi] as f64;
                    if ratio < best {
                        best = ratio;
                    }
                }
                if !reachable_without_new_owner {
                    let owners = &self.owners_of_var[vi];
                    if owners.is_empty() || owners.iter().all(|&o| self.state[o as usize] == 1) {
                        reachable_without_new_owner = true;
                    }
                }
            }
            if best.is_finite() {
                frac_sum += deficit as f64 * best;
            }
            if !reachable_without_new_owner {
                rows_needing_new_owner += 1;
            }
        }

        if self.owners_pure && rows_needing_new_owner > 0 {
            let mut max_cov = 0u32;
            let mut min_cost = f64::INFINITY;
            for (i, &o) in self.owner_list.iter().enumerate() {
                if self.state[o as usize] == FREE {
                    max_cov = max_cov.max(self.owner_static_cov[i]);
                    min_cost = min_cost.min(self.program.costs[o as usize]);
                }
            }
            if max_cov == 0 {
                return f64::INFINITY;
            }
            frac_sum += rows_needing_new_owner.div_ceil(max_cov as u64) as f64 * min_cost;
        }
        frac_sum
    }

    fn beats_incumbent(&self, lb: f64) -> bool {
        match &self.incumbent {
            Some((inc, _)) => lb < inc - OBJ_EPS,
            None => true,
        }
    }

    fn note_open(&mut self, lb: f64) {
        if lb < self.min_open_lb {
            self.min_open_lb = lb;
        }
    }

    fn dfs(&mut self) {
        let (cover_var, max_ucov, min_cost) = self.scan();
        if self.total_deficit > 0 && max_ucov == 0 {
            return; // uncovered rows with no free variable left
        }
        let cheap = if self.total_deficit > 0 {
            self.total_deficit.div_ceil(max_ucov as u64) as f64 * min_cost
        } else {
            0.0
        };
        let mut node_lb = self.cost_so_far + cheap;
        if !self.beats_incumbent(node_lb) {
            return;
        }
        if self.total_deficit > 0 {
            let strong = self.cost_so_far + self.strong_bound();
            node_lb = node_lb.max(strong);
            if !self.beats_incumbent(node_lb) {
                return;
            }
        }

        let branch_var = if self.total_deficit > 0 { self.owner_branch().or(cover_var) } else { cover_var };
        let branch_var = match branch_var {
            Some(v) => v,
            None => {
                // All cover rows satisfied. The all-zero completion is the
                // cheapest one; take it if the links allow it, otherwise
                // branch on a link-lhs variable that could repair them.
                let violated = (0..self.link_state.len())
                    .find(|&l| self.link_state[l].lhs_fix1 < self.link_state[l].rhs_lb);
                match violated {
                    None => {
                        let obj = self.cost_so_far;
                        let better = match &self.incumbent {
                            Some((inc, _)) => obj < *inc,
                            None => true,
                        };
                        if better {
                            let assignment: Vec<bool> = self.state.iter().map(|&s| s == 1).collect();
                            self.incumbent = Some((obj, assignment));
                        }
                        return;
                    }
                    Some(l) => {
                        let free_lhs = self.program.link_rows[l]
                            .lhs
                            .iter()
                            .map(|&(v, _)| v)
                            .filter(|&v| self.state[v as usize] == FREE)
                            .min();
                        match free_lhs {
                            Some(v) => v,
                            None => return, // propagation will have flagged this
                        }
                    }
                }
            }
        };

        for val in [1i8, 0i8] {
            if self.aborted || self.nodes_used >= self.node_budget {
                self.aborted = true;
                self.note_open(node_lb);
                return;
            }
            self.nodes_used += 1;
            let mark = self.trail.len();
            if self.fix_and_propagate(branch_var, val) {
                self.dfs();
            }
            self.undo_to(mark);
        }
    }
}

/// Exact branch-and-bound minimization. Deterministic: branches on the
/// variable covering the most unsatisfied rows (lowest index on ties),
/// value 1 first. Exhausting the node budget returns the best incumbent with
/// a lower-bound-derived gap.
pub fn solve_exact(program: &BinaryProgram, node_budget: u64) -> Result<SolveOutcome, SolveError> {
    program.validate()?;
    let Some(rows) = presolve_cover(program) else {
        return Ok(SolveOutcome::infeasible(program.n_vars, 0));
    };
    let mut search = Search::new(program, rows, node_budget);

    if let Ok(greedy) = solve_greedy(program) {
        if greedy.status == SolverStatus::GreedyFeasible && greedy.objective.is_finite() {
            search.incumbent = Some((greedy.objective, greedy.assignment));
        }
    }

    search.dfs();

    let nodes = search.nodes_used;
    match (search.incumbent, search.aborted) {
        (Some((objective, assignment)), false) => Ok(SolveOutcome {
            assignment,
            objective,
            status: SolverStatus::ExactOptimal,
            gap: 0.0,
            nodes,
        }),
        (Some((objective, assignment)), true) => {
            let lb = search.min_open_lb.min(objective);
            Ok(SolveOutcome {
                assignment,
                objective,
                status: SolverStatus::GreedyFeasible,
                gap: (objective - lb).max(0.0),
                nodes,
            })
        }
        (None, false) => Ok(SolveOutcome::infeasible(program.n_vars, nodes)),
        (None, true) => Ok(SolveOutcome {
            assignment: vec![false; program.n_vars],
            objective: f64::INFINITY,
            status: SolverStatus::GreedyFeasible,
            gap: f64::INFINITY,
            nodes,
        }),
    }
}

// ---------------------------------------------------------------------------
// Greedy
// ---------------------------------------------------------------------------

// Additional lhs picks needed so every link row tolerates candidate `v`
// joining the rhs side (v == u32::MAX checks the current state only).
// Returns (extra cost, forced vars) or None when no completion exists.
fn link_completion(
    program: &BinaryProgram,
    chosen: &[bool],
    candidate: u32,
) -> Option<(f64, Vec<u32>)> {
    let mut extra_cost = 0.0;
    let mut forced: Vec<u32> = Vec::new();
    let is_on = |v: u32, forced: &[u32]| chosen[v as usize] || forced.contains(&v) || v == candidate;
    for row in &program.link_rows {
        let rhs: i64 = row.rhs.iter().filter(|&&(v, _)| is_on(v, &forced)).map(|&(_, c)| c as i64).sum();
        let mut lhs: i64 = row.lhs.iter().filter(|&&(v, _)| is_on(v, &forced)).map(|&(_, c)| c as i64).sum();
        if lhs >= rhs {
            continue;
        }
        // Cheapest-per-coefficient completion, lowest index on ties.
        let mut candidates: Vec<(u32, u32)> = row
            .lhs
            .iter()
            .filter(|&&(v, _)| !is_on(v, &forced))
            .copied()
            .collect();
        candidates.sort_by(|a, b| {
            let ra = program.costs[a.0 as usize] / a.1 as f64;
            let rb = program.costs[b.0 as usize] / b.1 as f64;
            ra.partial_cmp(&rb).unwrap().then(a.0.cmp(&b.0))
        });
        for (v, c) in candidates {
            if lhs >= rhs {
                break;
            }
            lhs += c as i64;
            extra_cost += program.costs[v as usize];
            forced.push(v);
        }
        if lhs < rhs {
            return None;
        }
    }
    Some((extra_cost, forced))
}

/// Ratio greedy: repeatedly picks the variable with the best
/// newly-covered-rows per unit marginal cost, activating whatever link-lhs
/// variables the pick forces. Deterministic; ties break toward lower index.
pub fn solve_greedy(program: &BinaryProgram) -> Result<SolveOutcome, SolveError> {
    program.validate()?;
    let Some(rows) = presolve_cover(program) else {
        return Ok(SolveOutcome::infeasible(program.n_vars, 0));
    };

    let mut var_rows = vec![Vec::new(); program.n_vars];
    for (r, row) in rows.iter().enumerate() {
        for &v in &row.vars {
            var_rows[v as usize].push(r);
        }
    }

    let mut chosen = vec![false; program.n_vars];
    let mut deficits: Vec<u32> = rows.iter().map(|r| r.rhs).collect();
    let mut remaining: u64 = deficits.iter().map(|&d| d as u64).sum();

    while remaining > 0 {
        // (gain, cost, var, forced lhs vars) of the best candidate so far.
        let mut best: Option<(u64, f64, u32, Vec<u32>)> = None;
        for v in 0..program.n_vars as u32 {
            if chosen[v as usize] {
                continue;
            }
            let gain = var_rows[v as usize].iter().filter(|&&r| deficits[r] > 0).count() as u64;
            if gain == 0 {
                continue;
            }
            let Some((extra, forced)) = link_completion(program, &chosen, v) else {
                continue;
            };
            let cost = program.costs[v as usize] + extra;
            let better = match &best {
                None => true,
                Some((bg, bc, _, _)) => {
                    // gain/cost > bg/bc, with zero-cost candidates ranked by
                    // gain alone.
                    if cost == 0.0 && *bc == 0.0 {
                        gain > *bg
                    } else if cost == 0.0 {
                        true
                    } else if *bc == 0.0 {
                        false
                    } else {
                        gain as f64 * bc > *bg as f64 * cost
                    }
                }
            };
            if better {
                best = Some((gain, cost, v, forced));
            }
        }
        let Some((_, _, v, forced)) = best else {
            return Ok(SolveOutcome::infeasible(program.n_vars, 0));
        };
        chosen[v as usize] = true;
        for f in forced {
            chosen[f as usize] = true;
        }
        for &r in &var_rows[v as usize] {
            if deficits[r] > 0 {
                deficits[r] -= 1;
                remaining -= 1;
            }
        }
    }

    // Cover rows done; repair any remaining link shortfalls.
    loop {
        let shortfall = program.link_rows.iter().any(|row| {
            let lhs: i64 = row.lhs.iter().filter(|&&(v, _)| chosen[v as usize]).map(|&(_, c)| c as i64).sum();
            let rhs: i64 = row.rhs.iter().filter(|&&(v, _)| chosen[v as usize]).map(|&(_, c)| c as i64).sum();
            lhs < rhs
        });
        if !shortfall {
            break;
        }
        match link_completion(program, &chosen, u32::MAX) {
            Some((_, forced)) if !forced.is_empty() => {
                for f in forced {
                    chosen[f as usize] = true;
                }
            }
            _ => return Ok(SolveOutcome::infeasible(program.n_vars, 0)),
        }
    }

    let objective = program.objective(&chosen);
    debug_assert!(program.is_feasible(&chosen));

    // Report the optimality gap against the root charging bound.
    let search = Search::new(program, rows, 0);
    let root_lb = search.strong_bound();
    Ok(SolveOutcome {
        assignment: chosen,
        objective,
        status: SolverStatus::GreedyFeasible,
        gap: (objective - root_lb).max(0.0),
        nodes: 0,
    })
}

// ---------------------------------------------------------------------------
// Exhaustive oracle
// ---------------------------------------------------------------------------

/// Certified optimum by full enumeration. Refuses more than
/// [`ORACLE_VAR_LIMIT`] variables.
pub fn brute_force_oracle(program: &BinaryProgram) -> Result<SolveOutcome, SolveError> {
    program.validate()?;
    let n = program.n_vars;
    if n > ORACLE_VAR_LIMIT {
        return Err(SolveError::TooManyVariables(n));
    }

    let cover: Vec<(u32, u32)> = program
        .cover_rows
        .iter()
        .map(|row| {
            let mut mask = 0u32;
            for &v in &row.vars {
                mask |= 1 << v;
            }
            (mask, row.rhs)
        })
        .collect();

    // Split-table objective lookup: cost of low and high halves of a mask.
    let lo_bits = n.min(12);
    let lo_size = 1usize << lo_bits;
    let hi_size = 1usize << (n - lo_bits);
    let half_costs = |offset: usize, size: usize| -> Vec<f64> {
        let mut t = vec![0.0; size];
        for m in 1..size {
            let b = m.trailing_zeros() as usize;
            t[m] = t[m & (m - 1)] + program.costs[offset + b];
        }
        t
    };
    let lo_costs = half_costs(0, lo_size);
    let hi_costs = half_costs(lo_bits, hi_size);

    let mut best: Option<(f64, u32)> = None;
    'outer: for mask in 0u32..(1u32 << n) {
        for &(row_mask, rhs) in &cover {
            if (mask & row_mask).count_ones() < rhs {
                continue 'outer;
            }
        }
        for row in &program.link_rows {
            let lhs: i64 = row.lhs.iter().filter(|&&(v, _)| mask >> v & 1 == 1).map(|&(_, c)| c as i64).sum();
            let rhs: i64 = row.rhs.iter().filter(|&&(v, _)| mask >> v & 1 == 1).map(|&(_, c)| c as i64).sum();
            if lhs < rhs {
                continue 'outer;
            }
        }
        let obj = lo_costs[(mask as usize) & (lo_size - 1)] + hi_costs[(mask as usize) >> lo_bits];
        let better = match best {
            None => true,
            Some((b, _)) => obj < b,
        };
        if better {
            best = Some((obj, mask));
        }
    }

    Ok(match best {
        Some((objective, mask)) => SolveOutcome {
            assignment: (0..n).map(|v| mask >> v & 1 == 1).collect(),
            objective,
            status: SolverStatus::ExactOptimal,
            gap: 0.0,
            nodes: 1 << n,
        },
        None => SolveOutcome::infeasible(n, 1 << n),
    })
}

// ---------------------------------------------------------------------------
// Partial cover (deployment)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct PartialCoverSolution {
    pub selected: Vec<usize>,
    pub covered: usize,
    pub status: SolverStatus,
    pub gap: f64,
    pub nodes: u64,
}

fn popcount(words: &[u64]) -> usize {
    words.iter().map(|w| w.count_ones() as usize).sum()
}

fn union_count(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x | y).count_ones() as usize).sum()
}

struct PartialCover<'a> {
    sets: &'a [Vec<u64>],
    suffix_union: Vec<Vec<u64>>,
    suffix_max_count: Vec<usize>,
    target: usize,
    best_len: usize,
    best_sel: Option<Vec<usize>>,
    nodes: u64,
    budget: u64,
    aborted: bool,
}

impl<'a> PartialCover<'a> {
    fn dfs(&mut self, idx: usize, selection: &mut Vec<usize>, covered: &mut Vec<u64>, covered_count: usize) {
        if self.aborted {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.aborted = true;
            return;
        }
        if covered_count >= self.target {
            if selection.len() < self.best_len {
                self.best_len = selection.len();
                self.best_sel = Some(selection.clone());
            }
            return;
        }
        if idx == self.sets.len() {
            return;
        }
        // Even the most optimistic completion cannot beat the incumbent.
        let deficit = self.target - covered_count;
        let max_gain = self.suffix_max_count[idx];
        if max_gain == 0 {
            return;
        }
        let needed = deficit.div_ceil(max_gain);
        if selection.len() + needed >= self.best_len {
            return;
        }
        if union_count(covered, &self.suffix_union[idx]) < self.target {
            return;
        }

        // Include idx first.
        let saved = covered.clone();
        let mut new_count = 0usize;
        for (w, s) in covered.iter_mut().zip(&self.sets[idx]) {
            *w |= s;
            new_count += w.count_ones() as usize;
        }
        selection.push(idx);
        self.dfs(idx + 1, selection, covered, new_count);
        selection.pop();
        *covered = saved;

        self.dfs(idx + 1, selection, covered, covered_count);
    }
}

/// Minimum number of sets covering at least `target` of `n_elements`
/// elements. Exact branch-and-bound when `exact`, otherwise greedy; the
/// greedy result also seeds the exact search.
pub fn solve_partial_cover(
    sets: &[Vec<u64>],
    n_elements: usize,
    target: usize,
    node_budget: u64,
    exact: bool,
) -> PartialCoverSolution {
    let words = n_elements.div_ceil(64);
    assert!(sets.iter().all(|s| s.len() == words));

    let mut all = vec![0u64; words];
    for s in sets {
        for (w, x) in all.iter_mut().zip(s) {
            *w |= x;
        }
    }
    if popcount(&all) < target {
        return PartialCoverSolution {
            selected: vec![],
            covered: popcount(&all),
            status: SolverStatus::Infeasible,
            gap: 0.0,
            nodes: 0,
        };
    }

    // Greedy incumbent: maximum marginal coverage, lowest index on ties.
    let mut g_covered = vec![0u64; words];
    let mut g_count = 0usize;
    let mut g_sel: Vec<usize> = Vec::new();
    while g_count < target {
        let mut best: Option<(usize, usize)> = None;
        for (i, s) in sets.iter().enumerate() {
            if g_sel.contains(&i) {
                continue;
            }
            let gain = union_count(&g_covered, s) - g_count;
            if gain > 0 && best.map_or(true, |(bg, _)| gain > bg) {
                best = Some((gain, i));
            }
        }
        let (_, i) = best.expect("feasible instance must admit greedy progress");
        for (w, x) in g_covered.iter_mut().zip(&sets[i]) {
            *w |= x;
        }
        g_count = popcount(&g_covered);
        g_sel.push(i);
    }
    g_sel.sort_unstable();

    let counts: Vec<usize> = sets.iter().map(|s| popcount(s)).collect();
    let max_count = counts.iter().copied().max().unwrap_or(0);
    let root_lb = if max_count == 0 { 0 } else { target.div_ceil(max_count) };

    if !exact {
        return PartialCoverSolution {
            covered: g_count,
            gap: (g_sel.len() - root_lb.min(g_sel.len())) as f64,
            selected: g_sel,
            status: SolverStatus::GreedyFeasible,
            nodes: 0,
        };
    }

    let mut suffix_union = vec![vec![0u64; words]; sets.len() + 1];
    let mut suffix_max_count = vec![0usize; sets.len() + 1];
    for i in (0..sets.len()).rev() {
        suffix_union[i] = suffix_union[i + 1].clone();
        for (w, x) in suffix_union[i].iter_mut().zip(&sets[i]) {
            *w |= x;
        }
        suffix_max_count[i] = suffix_max_count[i + 1].max(counts[i]);
    }

    let mut search = PartialCover {
        sets,
        suffix_union,
        suffix_max_count,
        target,
        best_len: g_sel.len(),
        best_sel: Some(g_sel),
        nodes: 0,
        budget: node_budget,
        aborted: false,
    };
    let mut covered = vec![0u64; words];
    let mut selection = Vec::new();
    search.dfs(0, &mut selection, &mut covered, 0);

    let mut selected = search.best_sel.expect("incumbent always present");
    selected.sort_unstable();
    let mut covered = vec![0u64; words];
    for &i in &selected {
        for (w, x) in covered.iter_mut().zip(&sets[i]) {
            *w |= x;
        }
    }
    let covered_count = popcount(&covered);
    if search.aborted {
        PartialCoverSolution {
            gap: (selected.len() - root_lb.min(selected.len())) as f64,
            covered: covered_count,
            selected,
            status: SolverStatus::GreedyFeasible,
            nodes: search.nodes,
        }
    } else {
        PartialCoverSolution {
            selected,
            covered: covered_count,
            status: SolverStatus::ExactOptimal,
            gap: 0.0,
            nodes: search.nodes,
        }
    }
}
