//! Link budgets, beam gains, per-link SNR, and the connectivity matrices the
//! optimizers consume.
//!
//! Propagation is deliberately simple: free-space loss at the carrier
//! frequency, a geometric blockage test against building boxes, at most one
//! wall reflection, and foliage loss proportional to the traversed depth.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{wrap_deg, Point2, Rect};
use crate::matrixio;
use crate::scenario::{BeamSpec, Blocker, Cell, RfParams, Scenario, TrafficPoint, NO_PATH_DB};

/// Gain outside a beam footprint sits this far below the peak.
pub const SIDELOBE_FLOOR_DB: f64 = 20.0;

// Ignore sub-micrometer grazing overlaps from the segment clipper.
const BLOCK_EPS_M: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("traffic point {tp} coincides with the position of cell {cell}; distance undefined")]
    CoincidentPosition { cell: usize, tp: usize },
}

/// Link-budget constants, extracted from the scenario RF parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudgetParams {
    pub carrier_ghz: f64,
    pub bandwidth_mhz: f64,
    pub ue_gain_dbi: f64,
    pub body_loss_db: f64,
    pub implementation_margin_db: f64,
    pub noise_figure_ue_db: f64,
    pub cell_edge_reliability_margin_db: f64,
    pub foliage_loss_db_per_m: f64,
    pub reflection_loss_db: f64,
    pub thermal_noise_density_dbm_hz: f64,
    pub ue_height_m: f64,
}

impl From<&RfParams> for LinkBudgetParams {
    fn from(rf: &RfParams) -> Self {
        Self {
            carrier_ghz: rf.carrier_ghz,
            bandwidth_mhz: rf.bandwidth_mhz,
            ue_gain_dbi: rf.ue_gain_dbi,
            body_loss_db: rf.body_loss_db,
            implementation_margin_db: rf.implementation_margin_db,
            noise_figure_ue_db: rf.noise_figure_ue_db,
            cell_edge_reliability_margin_db: rf.cell_edge_reliability_margin_db,
            foliage_loss_db_per_m: rf.foliage_loss_db_per_m,
            reflection_loss_db: rf.reflection_loss_db,
            thermal_noise_density_dbm_hz: rf.thermal_noise_density_dbm_hz,
            ue_height_m: rf.ue_height_m,
        }
    }
}

impl LinkBudgetParams {
    /// Receiver noise power over the full bandwidth, in dBm.
    pub fn noise_power_dbm(&self) -> f64 {
        self.thermal_noise_density_dbm_hz
            + 10.0 * (self.bandwidth_mhz * 1e6).log10()
            + self.noise_figure_ue_db
    }

    /// Losses and margins applied to every link regardless of geometry.
    pub fn fixed_losses_db(&self) -> f64 {
        self.body_loss_db + self.implementation_margin_db + self.cell_edge_reliability_margin_db
    }
}

/// Free-space path loss in dB for a distance in meters at a carrier in GHz.
pub fn fspl_db(distance_m: f64, carrier_ghz: f64) -> f64 {
    32.44 + 20.0 * carrier_ghz.log10() + 20.0 * distance_m.log10()
}

/// Flat-top beam gain: peak inside the footprint (boundary inclusive),
/// a fixed sidelobe floor below peak outside. Angles are cell-local degrees.
pub fn beam_gain_dbi(beam: &BeamSpec, azimuth_deg: f64, elevation_deg: f64) -> f64 {
    if beam.covers(azimuth_deg, elevation_deg) {
        beam.peak_gain_dbi
    } else {
        beam.peak_gain_dbi - SIDELOBE_FLOOR_DB
    }
}

/// One resolved propagation path from a cell antenna to a traffic point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPath {
    /// Departure azimuth at the antenna, global frame, degrees.
    pub azimuth_deg: f64,
    /// Departure elevation along the (unfolded) path, degrees.
    pub elevation_deg: f64,
    /// Path loss: free-space + foliage + reflection loss where applicable.
    pub loss_db: f64,
    pub reflected: bool,
}

fn segment_blocked(buildings: &[(Rect, f64)], a: &Point2, ha: f64, b: &Point2, hb: f64) -> bool {
    let len = a.distance(b);
    for (rect, height) in buildings {
        if let Some((t0, t1)) = rect.clip_segment(a, b) {
            if (t1 - t0) * len <= BLOCK_EPS_M {
                continue;
            }
            let h0 = ha + t0 * (hb - ha);
            let h1 = ha + t1 * (hb - ha);
            if h0.min(h1) < *height {
                return true;
            }
        }
    }
    false
}

fn foliage_loss_db(foliage: &[Rect], per_m: f64, a: &Point2, b: &Point2) -> f64 {
    foliage.iter().map(|r| r.segment_overlap_length(a, b) * per_m).sum::<f64>()
}

struct Wall {
    /// true: wall lies on x = coord; false: wall lies on y = coord.
    vertical: bool,
    coord: f64,
    lo: f64,
    hi: f64,
    /// +1 or -1: which side of the wall is outside the building.
    outward: f64,
}

fn walls_of(rect: &Rect) -> [Wall; 4] {
    [
        Wall { vertical: true, coord: rect.min.x, lo: rect.min.y, hi: rect.max.y, outward: -1.0 },
        Wall { vertical: true, coord: rect.max.x, lo: rect.min.y, hi: rect.max.y, outward: 1.0 },
        Wall { vertical: false, coord: rect.min.y, lo: rect.min.x, hi: rect.max.x, outward: -1.0 },
        Wall { vertical: false, coord: rect.max.y, lo: rect.min.x, hi: rect.max.x, outward: 1.0 },
    ]
}

fn mirror(p: &Point2, wall: &Wall) -> Point2 {
    if wall.vertical {
        Point2::new(2.0 * wall.coord - p.x, p.y)
    } else {
        Point2::new(p.x, 2.0 * wall.coord - p.y)
    }
}

/// Resolves the propagation path from an antenna to a UE position:
/// line-of-sight if unobstructed, otherwise the lowest-loss single wall
/// reflection, otherwise no path.
#[allow(clippy::too_many_arguments)]
fn resolve_path_inner(
    origin: &Point2,
    h_origin: f64,
    target: &Point2,
    h_target: f64,
    buildings: &[(Rect, f64)],
    foliage: &[Rect],
    params: &LinkBudgetParams,
) -> Option<LinkPath> {
    let run_2d = origin.distance(target);
    if !segment_blocked(buildings, origin, h_origin, target, h_target) {
        let d3 = run_2d.hypot(h_target - h_origin);
        let loss = fspl_db(d3, params.carrier_ghz)
            + foliage_loss_db(foliage, params.foliage_loss_db_per_m, origin, target);
        return Some(LinkPath {
            azimuth_deg: (target.y - origin.y).atan2(target.x - origin.x).to_degrees(),
            elevation_deg: (h_target - h_origin).atan2(run_2d).to_degrees(),
            loss_db: loss,
            reflected: false,
        });
    }

    // Single-bounce search over every building wall both endpoints face.
    let mut best: Option<LinkPath> = None;
    for (rect, height) in buildings {
        for wall in walls_of(rect) {
            let side = |p: &Point2| {
                let c = if wall.vertical { p.x } else { p.y };
                wall.outward * (c - wall.coord)
            };
            if side(origin) <= 0.0 || side(target) <= 0.0 {
                continue;
            }
            let image = mirror(origin, &wall);
            let (ia, ta) = if wall.vertical { (image.x, target.x) } else { (image.y, target.y) };
            let denom = ta - ia;
            if denom.abs() < 1e-12 {
                continue;
            }
            let s = (wall.coord - ia) / denom;
            if !(0.0..=1.0).contains(&s) {
                continue;
            }
            let cross = if wall.vertical {
                image.y + s * (target.y - image.y)
            } else {
                image.x + s * (target.x - image.x)
            };
            if cross < wall.lo || cross > wall.hi {
                continue;
            }
            let point = if wall.vertical {
                Point2::new(wall.coord, cross)
            } else {
                Point2::new(cross, wall.coord)
            };
            // The ray must actually hit the wall below its roof line.
            let h_at_wall = h_origin + s * (h_target - h_origin);
            if h_at_wall > *height {
                continue;
            }
            if segment_blocked(buildings, origin, h_origin, &point, h_at_wall)
                || segment_blocked(buildings, &point, h_at_wall, target, h_target)
            {
                continue;
            }
            let total_2d = image.distance(target);
            let d3 = total_2d.hypot(h_target - h_origin);
            let loss = fspl_db(d3, params.carrier_ghz)
                + params.reflection_loss_db
                + foliage_loss_db(foliage, params.foliage_loss_db_per_m, origin, &point)
                + foliage_loss_db(foliage, params.foliage_loss_db_per_m, &point, target);
            let candidate = LinkPath {
                azimuth_deg: (point.y - origin.y).atan2(point.x - origin.x).to_degrees(),
                elevation_deg: (h_target - h_origin).atan2(total_2d).to_degrees(),
                loss_db: loss,
                reflected: true,
            };
            if best.as_ref().map_or(true, |b| candidate.loss_db < b.loss_db) {
                best = Some(candidate);
            }
        }
    }
    best
}

fn split_blockers(blockers: &[Blocker]) -> (Vec<(Rect, f64)>, Vec<Rect>) {
    let mut buildings = Vec::new();
    let mut foliage = Vec::new();
    for b in blockers {
        match b {
            Blocker::Building { footprint, height_m } => buildings.push((*footprint, *height_m)),
            Blocker::Foliage { region } => foliage.push(*region),
        }
    }
    (buildings, foliage)
}

/// Resolves the propagation path between a cell and a traffic point.
pub fn resolve_path(
    cell: &Cell,
    tp: &TrafficPoint,
    blockers: &[Blocker],
    params: &LinkBudgetParams,
) -> Result<Option<LinkPath>, LinkError> {
    if cell.position == tp.position {
        return Err(LinkError::CoincidentPosition { cell: cell.id, tp: tp.id });
    }
    let (buildings, foliage) = split_blockers(blockers);
    Ok(resolve_path_inner(
        &cell.position,
        cell.antenna_height_m,
        &tp.position,
        params.ue_height_m,
        &buildings,
        &foliage,
        params,
    ))
}

fn snr_on_path(cell: &Cell, beam: &BeamSpec, path: &LinkPath, params: &LinkBudgetParams) -> f64 {
    let az_local = wrap_deg(path.azimuth_deg - cell.boresight_azimuth_deg);
    let gain = beam_gain_dbi(beam, az_local, path.elevation_deg);
    cell.tx_power_dbm + gain + params.ue_gain_dbi
        - path.loss_db
        - params.fixed_losses_db()
        - params.noise_power_dbm()
}

/// Full link SNR in dB for one (cell, beam, traffic point) triple, or the
/// no-path sentinel when the link is fully blocked.
pub fn link_snr_db(
    cell: &Cell,
    beam: &BeamSpec,
    tp: &TrafficPoint,
    params: &LinkBudgetParams,
    blockers: &[Blocker],
) -> Result<f64, LinkError> {
    match resolve_path(cell, tp, blockers, params)? {
        Some(path) => Ok(snr_on_path(cell, beam, &path, params)),
        None => Ok(NO_PATH_DB),
    }
}

// ---------------------------------------------------------------------------
// Precomputed SNR table
// ---------------------------------------------------------------------------

/// Dense per-link SNR cache: one row per candidate beam (cell-major) plus one
/// row per cell holding the best baseline-codebook beam SNR.
#[derive(Debug, Clone)]
pub struct SnrTable {
    pub n_cells: usize,
    pub n_tps: usize,
    /// Candidate pool size per cell.
    pub pool_sizes: Vec<usize>,
    /// First global beam-row index of each cell.
    pub beam_row_offsets: Vec<usize>,
    pub total_beam_rows: usize,
    /// Pool indices of the baseline beams, per cell.
    pub baseline_indices: Vec<Vec<usize>>,
    beam_snr: Vec<f32>,
    cell_snr: Vec<f32>,
}

impl SnrTable {
    /// Computes all beam and cell SNRs for the scenario. Parallel over cells.
    pub fn compute(scenario: &Scenario) -> Result<Self, LinkError> {
        let params = LinkBudgetParams::from(&scenario.rf_params);
        let (buildings, foliage) = split_blockers(&scenario.blockers);
        let n_tps = scenario.traffic_points.len();

        let per_cell: Result<Vec<(Vec<f32>, Vec<f32>)>, LinkError> = scenario
            .cells
            .par_iter()
            .map(|cell| {
                let pool = &cell.candidate_beam_pool;
                let baseline = cell.baseline_pool_indices();
                let mut beams = vec![NO_PATH_DB as f32; pool.len() * n_tps];
                let mut best_baseline = vec![NO_PATH_DB as f32; n_tps];
                for tp in &scenario.traffic_points {
                    if cell.position == tp.position {
                        return Err(LinkError::CoincidentPosition { cell: cell.id, tp: tp.id });
                    }
                    let path = resolve_path_inner(
                        &cell.position,
                        cell.antenna_height_m,
                        &tp.position,
                        params.ue_height_m,
                        &buildings,
                        &foliage,
                        &params,
                    );
                    let Some(path) = path else { continue };
                    for (b, beam) in pool.iter().enumerate() {
                        beams[b * n_tps + tp.id] = snr_on_path(cell, beam, &path, &params) as f32;
                    }
                    best_baseline[tp.id] = baseline
                        .iter()
                        .map(|&b| beams[b * n_tps + tp.id])
                        .fold(NO_PATH_DB as f32, f32::max);
                }
                Ok((beams, best_baseline))
            })
            .collect();
        let per_cell = per_cell?;

        let pool_sizes: Vec<usize> = scenario.cells.iter().map(|c| c.candidate_beam_pool.len()).collect();
        let baseline_indices: Vec<Vec<usize>> =
            scenario.cells.iter().map(|c| c.baseline_pool_indices()).collect();
        Ok(Self::assemble(pool_sizes, n_tps, per_cell, baseline_indices))
    }

    fn assemble(
        pool_sizes: Vec<usize>,
        n_tps: usize,
        per_cell: Vec<(Vec<f32>, Vec<f32>)>,
        baseline_indices: Vec<Vec<usize>>,
    ) -> Self {
        let n_cells = pool_sizes.len();
        let mut beam_row_offsets = Vec::with_capacity(n_cells);
        let mut total = 0usize;
        for &p in &pool_sizes {
            beam_row_offsets.push(total);
            total += p;
        }
        let mut beam_snr = Vec::with_capacity(total * n_tps);
        let mut cell_snr = Vec::with_capacity(n_cells * n_tps);
        for (beams, cells) in per_cell {
            beam_snr.extend_from_slice(&beams);
            cell_snr.extend_from_slice(&cells);
        }
        Self {
            n_cells,
            n_tps,
            pool_sizes,
            beam_row_offsets,
            total_beam_rows: total,
            baseline_indices,
            beam_snr,
            cell_snr,
        }
    }

    /// Builds a table directly from a beam SNR matrix; rows must be cell-major.
    pub fn from_beam_matrix(
        pool_sizes: Vec<usize>,
        n_tps: usize,
        beam_snr: Vec<f32>,
        baseline_indices: Vec<Vec<usize>>,
    ) -> Self {
        let mut per_cell = Vec::with_capacity(pool_sizes.len());
        let mut offset = 0usize;
        for (c, &p) in pool_sizes.iter().enumerate() {
            let rows = beam_snr[offset * n_tps..(offset + p) * n_tps].to_vec();
            let mut best = vec![NO_PATH_DB as f32; n_tps];
            for t in 0..n_tps {
                for &b in &baseline_indices[c] {
                    best[t] = best[t].max(rows[b * n_tps + t]);
                }
            }
            per_cell.push((rows, best));
            offset += p;
        }
        Self::assemble(pool_sizes, n_tps, per_cell, baseline_indices)
    }

    pub fn beam_snr_db(&self, cell: usize, pool_idx: usize, tp: usize) -> f64 {
        self.beam_snr[(self.beam_row_offsets[cell] + pool_idx) * self.n_tps + tp] as f64
    }

    pub fn beam_row_snr_db(&self, row: usize, tp: usize) -> f64 {
        self.beam_snr[row * self.n_tps + tp] as f64
    }

    /// Best baseline-codebook SNR of a cell toward a traffic point.
    pub fn cell_snr_db(&self, cell: usize, tp: usize) -> f64 {
        self.cell_snr[cell * self.n_tps + tp] as f64
    }

    /// (cell, pool index) of a global beam row.
    pub fn beam_row_owner(&self, row: usize) -> (usize, usize) {
        let cell = match self.beam_row_offsets.binary_search(&row) {
            Ok(c) => c,
            Err(next) => next - 1,
        };
        (cell, row - self.beam_row_offsets[cell])
    }

    /// Traffic points covered by at least one cell at the threshold; this is
    /// the coverage target set for every optimization strategy.
    pub fn covered_tp_ids(&self, threshold_db: f64) -> Vec<usize> {
        (0..self.n_tps)
            .filter(|&t| (0..self.n_cells).any(|c| self.cell_snr_db(c, t) >= threshold_db))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Connectivity and incidence matrices
// ---------------------------------------------------------------------------

/// Which entity the rows of a connectivity matrix represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Cell,
    Beam,
    Pole,
}

impl std::fmt::Display for RowKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RowKind::Cell => write!(f, "cell"),
            RowKind::Beam => write!(f, "beam"),
            RowKind::Pole => write!(f, "pole"),
        }
    }
}

/// Binary incidence between coverers (rows) and traffic points (columns):
/// entry 1 when the link SNR meets the threshold (inclusive).
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityMatrix {
    pub row_kind: RowKind,
    pub threshold_db: f64,
    /// Column j corresponds to this traffic point id.
    pub covered_tp_ids: Vec<usize>,
    rows: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl ConnectivityMatrix {
    fn new(row_kind: RowKind, threshold_db: f64, covered_tp_ids: Vec<usize>, rows: usize) -> Self {
        let cols = covered_tp_ids.len();
        let words_per_row = cols.div_ceil(64);
        Self {
            row_kind,
            threshold_db,
            covered_tp_ids,
            rows,
            words_per_row,
            bits: vec![0u64; rows * words_per_row],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.covered_tp_ids.len()
    }

    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words_per_row + j / 64] |= 1u64 << (j % 64);
    }

    pub fn entry(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words_per_row + j / 64] >> (j % 64) & 1 == 1
    }

    /// Column indices of the ones in row i.
    pub fn row_ones(&self, i: usize) -> Vec<usize> {
        (0..self.cols()).filter(|&j| self.entry(i, j)).collect()
    }

    /// Number of rows covering column j.
    pub fn column_cover_count(&self, j: usize) -> usize {
        (0..self.rows).filter(|&i| self.entry(i, j)).count()
    }

    pub fn to_dense_f32(&self) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.rows * self.cols());
        for i in 0..self.rows {
            for j in 0..self.cols() {
                out.push(if self.entry(i, j) { 1.0 } else { 0.0 });
            }
        }
        out
    }

    /// Persists the matrix in the shared binary format plus a JSON sidecar.
    pub fn save(&self, matrix_path: &std::path::Path, sidecar_path: &std::path::Path) -> std::io::Result<()> {
        matrixio::write_matrix_f32(matrix_path, self.rows as u32, self.cols() as u32, &self.to_dense_f32())?;
        matrixio::write_sidecar(
            sidecar_path,
            &matrixio::MatrixSidecar {
                row_kind: self.row_kind.to_string(),
                threshold_db: self.threshold_db,
                rows: self.rows as u32,
                cols: self.cols() as u32,
            },
        )
    }
}

/// Builds a connectivity matrix from a precomputed SNR table. Columns span
/// all traffic points in id order.
pub fn connectivity_from_table(
    table: &SnrTable,
    site_ids: &[usize],
    cell_sites: &[usize],
    threshold_db: f64,
    row_kind: RowKind,
) -> ConnectivityMatrix {
    let cols: Vec<usize> = (0..table.n_tps).collect();
    match row_kind {
        RowKind::Beam => {
            let mut m = ConnectivityMatrix::new(row_kind, threshold_db, cols, table.total_beam_rows);
            for row in 0..table.total_beam_rows {
                for t in 0..table.n_tps {
                    if table.beam_row_snr_db(row, t) >= threshold_db {
                        m.set(row, t);
                    }
                }
            }
            m
        }
        RowKind::Cell => {
            let mut m = ConnectivityMatrix::new(row_kind, threshold_db, cols, table.n_cells);
            for c in 0..table.n_cells {
                for t in 0..table.n_tps {
                    if table.cell_snr_db(c, t) >= threshold_db {
                        m.set(c, t);
                    }
                }
            }
            m
        }
        RowKind::Pole => {
            let mut m = ConnectivityMatrix::new(row_kind, threshold_db, cols, site_ids.len());
            for (row, site) in site_ids.iter().enumerate() {
                for t in 0..table.n_tps {
                    let covered = cell_sites
                        .iter()
                        .enumerate()
                        .any(|(c, s)| s == site && table.cell_snr_db(c, t) >= threshold_db);
                    if covered {
                        m.set(row, t);
                    }
                }
            }
            m
        }
    }
}

/// Builds the connectivity matrix for a scenario at the given granularity.
pub fn build_connectivity(
    scenario: &Scenario,
    threshold_db: f64,
    row_kind: RowKind,
) -> Result<ConnectivityMatrix, LinkError> {
    let table = SnrTable::compute(scenario)?;
    let cell_sites: Vec<usize> = scenario.cells.iter().map(|c| c.site_id).collect();
    Ok(connectivity_from_table(&table, &scenario.site_ids(), &cell_sites, threshold_db, row_kind))
}

/// Binary beam→cell membership matrix: one row per candidate beam in
/// cell-major order, one column per cell, exactly one 1 per row.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamCellIncidence {
    pub n_cells: usize,
    /// Owning cell of each beam row.
    pub cell_of_row: Vec<usize>,
}

impl BeamCellIncidence {
    pub fn rows(&self) -> usize {
        self.cell_of_row.len()
    }

    pub fn cols(&self) -> usize {
        self.n_cells
    }

    pub fn entry(&self, row: usize, col: usize) -> bool {
        self.cell_of_row[row] == col
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| u8::from(self.entry(i, j))).collect())
            .collect()
    }
}

/// Beam→cell incidence for a scenario; row ordering is cell-major (all beams
/// of cell 0, then cell 1, ...).
pub fn build_incidence(scenario: &Scenario) -> BeamCellIncidence {
    let mut cell_of_row = Vec::new();
    for (c, cell) in scenario.cells.iter().enumerate() {
        cell_of_row.extend(std::iter::repeat(c).take(cell.candidate_beam_pool.len()));
    }
    BeamCellIncidence { n_cells: scenario.cells.len(), cell_of_row }
}

/// Dense per-link path gain map: SNR stripped of transmit power and noise,
/// i.e. beam gain + UE gain − path loss − fixed losses. Blocked links keep
/// the no-path sentinel.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGainMap {
    pub rows: usize,
    pub cols: usize,
    pub gain_db: Vec<f32>,
}

impl LinkGainMap {
    /// Beam-granularity gain map from a computed SNR table.
    pub fn from_table(table: &SnrTable, scenario: &Scenario) -> Self {
        let params = LinkBudgetParams::from(&scenario.rf_params);
        let noise = params.noise_power_dbm();
        let mut gain_db = Vec::with_capacity(table.total_beam_rows * table.n_tps);
        for row in 0..table.total_beam_rows {
            let (cell, _) = table.beam_row_owner(row);
            let tx = scenario.cells[cell].tx_power_dbm;
            for t in 0..table.n_tps {
                let snr = table.beam_row_snr_db(row, t);
                if snr <= NO_PATH_DB {
                    gain_db.push(NO_PATH_DB as f32);
                } else {
                    gain_db.push((snr - tx + noise) as f32);
                }
            }
        }
        Self { rows: table.total_beam_rows, cols: table.n_tps, gain_db }
    }

    pub fn save(&self, path: &std::path::Path) -> std::io::Result<()> {
        matrixio::write_matrix_f32(path, self.rows as u32, self.cols as u32, &self.gain_db)
    }

    pub fn load(path: &std::path::Path) -> std::io::Result<Self> {
        let (rows, cols, gain_db) = matrixio::read_matrix_f32(path)?;
        Ok(Self { rows: rows as usize, cols: cols as usize, gain_db })
    }
}
