//! Immutable world description shared by every other module: cells with their
//! SSB codebooks, the outdoor traffic-point grid, blockers, and RF parameters.
//!
//! All types are plain data, serialize to JSON, and are never mutated after
//! construction, so they can be shared freely across threads.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::PowerConfig;
use crate::geometry::{Point2, Rect};

/// Sector span of a cell, in the cell-local frame: 120° of azimuth.
pub const AZIMUTH_SPAN_DEG: (f64, f64) = (-60.0, 60.0);
/// Elevation span of a cell: 30° below the horizon.
pub const ELEVATION_SPAN_DEG: (f64, f64) = (-30.0, 0.0);
/// Number of beams in the baseline codebook (8 azimuth × 4 elevation grid).
pub const BASELINE_CODEBOOK_SIZE: usize = 32;
/// Path-gain sentinel for a fully blocked link with no usable path.
pub const NO_PATH_DB: f64 = -999.0;

// Ideal elliptical-aperture directivity: G ≈ 41253 / (bw_az · bw_el) with
// beamwidths in degrees.
const ELLIPTICAL_APERTURE_NUMERATOR: f64 = 41_253.0;

/// The four supported beam shapes, by (azimuth, elevation) beamwidth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BeamType {
    Type1,
    Type2,
    Type3,
    Type4,
}

impl BeamType {
    pub const ALL: [BeamType; 4] = [BeamType::Type1, BeamType::Type2, BeamType::Type3, BeamType::Type4];

    /// (azimuth width, elevation width) in degrees.
    pub fn widths_deg(self) -> (f64, f64) {
        match self {
            BeamType::Type1 => (15.0, 7.5),
            BeamType::Type2 => (15.0, 15.0),
            BeamType::Type3 => (30.0, 7.5),
            BeamType::Type4 => (30.0, 15.0),
        }
    }
}

impl fmt::Display for BeamType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BeamType::Type1 => write!(f, "type1"),
            BeamType::Type2 => write!(f, "type2"),
            BeamType::Type3 => write!(f, "type3"),
            BeamType::Type4 => write!(f, "type4"),
        }
    }
}

/// One SSB beam: a flat-top footprint centered in the cell-local frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSpec {
    pub beam_type: BeamType,
    pub azimuth_center_deg: f64,
    pub elevation_center_deg: f64,
    pub azimuth_width_deg: f64,
    pub elevation_width_deg: f64,
    pub peak_gain_dbi: f64,
}

impl BeamSpec {
    /// Whether a cell-local direction falls inside the beam footprint
    /// (half-width boundary inclusive).
    pub fn covers(&self, azimuth_deg: f64, elevation_deg: f64) -> bool {
        (azimuth_deg - self.azimuth_center_deg).abs() <= self.azimuth_width_deg / 2.0
            && (elevation_deg - self.elevation_center_deg).abs() <= self.elevation_width_deg / 2.0
    }
}

/// One 120° sector radio unit mounted on a site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: usize,
    pub site_id: usize,
    pub boresight_azimuth_deg: f64,
    pub position: Point2,
    pub antenna_height_m: f64,
    /// The always-valid 32-beam Type1 grid.
    pub baseline_codebook: Vec<BeamSpec>,
    /// All beams the optimizer may activate; contains the baseline codebook.
    pub candidate_beam_pool: Vec<BeamSpec>,
    pub tx_power_dbm: f64,
    pub max_array_gain_dbi: f64,
}

impl Cell {
    /// Pool indices of the baseline-codebook beams.
    pub fn baseline_pool_indices(&self) -> Vec<usize> {
        self.baseline_codebook
            .iter()
            .filter_map(|b| self.candidate_beam_pool.iter().position(|p| p == b))
            .collect()
    }
}

/// A candidate idle-UE location on the outdoor grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficPoint {
    pub id: usize,
    pub position: Point2,
}

/// Obstacles in the propagation environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Blocker {
    /// Opaque box: blocks any ray passing below its roof; its walls reflect.
    Building { footprint: Rect, height_m: f64 },
    /// Lossy region: attenuates by the traversed depth, does not block.
    Foliage { region: Rect },
}

/// Link-budget and environment constants for the whole scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfParams {
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
    /// Margin subtracted from SNR when capacity planning treats it as SINR.
    pub interference_margin_db: f64,
    pub ue_height_m: f64,
}

impl Default for RfParams {
    fn default() -> Self {
        Self {
            carrier_ghz: 28.0,
            bandwidth_mhz: 800.0,
            ue_gain_dbi: 10.0,
            body_loss_db: 8.0,
            implementation_margin_db: 1.9,
            noise_figure_ue_db: 6.7,
            cell_edge_reliability_margin_db: 13.2,
            foliage_loss_db_per_m: 4.0,
            reflection_loss_db: 6.4,
            thermal_noise_density_dbm_hz: -174.0,
            interference_margin_db: 3.0,
            ue_height_m: 1.5,
        }
    }
}

/// The immutable world model. Serializes losslessly to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub cells: Vec<Cell>,
    pub traffic_points: Vec<TrafficPoint>,
    pub blockers: Vec<Blocker>,
    pub rf_params: RfParams,
    #[serde(default)]
    pub power_model: PowerConfig,
    pub seed: u64,
}

impl Scenario {
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_traffic_points(&self) -> usize {
        self.traffic_points.len()
    }

    pub fn buildings(&self) -> impl Iterator<Item = (&Rect, f64)> {
        self.blockers.iter().filter_map(|b| match b {
            Blocker::Building { footprint, height_m } => Some((footprint, *height_m)),
            _ => None,
        })
    }

    pub fn foliage(&self) -> impl Iterator<Item = &Rect> {
        self.blockers.iter().filter_map(|b| match b {
            Blocker::Foliage { region } => Some(region),
            _ => None,
        })
    }

    /// Sorted distinct site ids.
    pub fn site_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.cells.iter().map(|c| c.site_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn to_json_string(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json_str(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let body = self
            .to_json_string()
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        std::fs::write(path, body)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let body = std::fs::read_to_string(path)?;
        Self::from_json_str(&body).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

/// Total beam count of the always-on network: Σ per-cell baseline codebook sizes.
pub fn total_baseline_beams(scenario: &Scenario) -> usize {
    scenario.cells.iter().map(|c| c.baseline_codebook.len()).sum()
}

/// A named broken invariant. Violations are data, not failures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub entity: String,
    pub invariant: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.invariant)
    }
}

fn beam_in_span(beam: &BeamSpec) -> bool {
    let az_lo = beam.azimuth_center_deg - beam.azimuth_width_deg / 2.0;
    let az_hi = beam.azimuth_center_deg + beam.azimuth_width_deg / 2.0;
    let el_lo = beam.elevation_center_deg - beam.elevation_width_deg / 2.0;
    let el_hi = beam.elevation_center_deg + beam.elevation_width_deg / 2.0;
    let tol = 1e-9;
    az_lo >= AZIMUTH_SPAN_DEG.0 - tol
        && az_hi <= AZIMUTH_SPAN_DEG.1 + tol
        && el_lo >= ELEVATION_SPAN_DEG.0 - tol
        && el_hi <= ELEVATION_SPAN_DEG.1 + tol
}

fn check_beam(violations: &mut Vec<Violation>, entity: String, beam: &BeamSpec, max_gain: f64) {
    let (w_az, w_el) = beam.beam_type.widths_deg();
    if (beam.azimuth_width_deg - w_az).abs() > 1e-9 || (beam.elevation_width_deg - w_el).abs() > 1e-9 {
        violations.push(Violation {
            entity: entity.clone(),
            invariant: format!(
                "beam widths ({}, {}) do not match {}",
                beam.azimuth_width_deg, beam.elevation_width_deg, beam.beam_type
            ),
        });
    }
    if !beam_in_span(beam) {
        violations.push(Violation {
            entity: entity.clone(),
            invariant: "beam footprint outside the 120°×30° sector span".to_string(),
        });
    }
    if beam.peak_gain_dbi > max_gain + 1e-9 {
        violations.push(Violation {
            entity,
            invariant: format!(
                "peak gain {} dBi exceeds max array gain {} dBi",
                beam.peak_gain_dbi, max_gain
            ),
        });
    }
}

/// Checks every structural invariant of the scenario. Empty result means valid.
pub fn validate(scenario: &Scenario) -> Vec<Violation> {
    let mut v = Vec::new();

    for (i, tp) in scenario.traffic_points.iter().enumerate() {
        if tp.id != i {
            v.push(Violation {
                entity: format!("traffic point at index {i}"),
                invariant: format!("ids must be dense 0..N-1, found {}", tp.id),
            });
        }
    }
    let mut seen = HashSet::new();
    for tp in &scenario.traffic_points {
        let key = (tp.position.x.to_bits(), tp.position.y.to_bits());
        if !seen.insert(key) {
            v.push(Violation {
                entity: format!("traffic point {}", tp.id),
                invariant: "duplicate position".to_string(),
            });
        }
    }

    for (i, cell) in scenario.cells.iter().enumerate() {
        let entity = format!("cell {}", cell.id);
        if cell.id != i {
            v.push(Violation {
                entity: entity.clone(),
                invariant: format!("cell ids must be dense 0..N-1, found {} at index {i}", cell.id),
            });
        }
        if cell.baseline_codebook.len() != BASELINE_CODEBOOK_SIZE {
            v.push(Violation {
                entity: entity.clone(),
                invariant: format!(
                    "baseline codebook has {} beams, expected {}",
                    cell.baseline_codebook.len(),
                    BASELINE_CODEBOOK_SIZE
                ),
            });
        } else {
            // The baseline must tile the sector as the canonical 8×4 Type1 grid.
            let expected = build_baseline_codebook(cell.max_array_gain_dbi);
            let mut got: Vec<(u64, u64)> = cell
                .baseline_codebook
                .iter()
                .map(|b| (b.azimuth_center_deg.to_bits(), b.elevation_center_deg.to_bits()))
                .collect();
            let mut want: Vec<(u64, u64)> = expected
                .iter()
                .map(|b| (b.azimuth_center_deg.to_bits(), b.elevation_center_deg.to_bits()))
                .collect();
            got.sort_unstable();
            want.sort_unstable();
            if got != want || cell.baseline_codebook.iter().any(|b| b.beam_type != BeamType::Type1) {
                v.push(Violation {
                    entity: entity.clone(),
                    invariant: "baseline codebook is not the 8×4 Type1 tiling of the sector".to_string(),
                });
            }
        }
        for (k, beam) in cell.baseline_codebook.iter().enumerate() {
            check_beam(&mut v, format!("{entity} baseline beam {k}"), beam, cell.max_array_gain_dbi);
        }
        for (k, beam) in cell.candidate_beam_pool.iter().enumerate() {
            check_beam(&mut v, format!("{entity} pool beam {k}"), beam, cell.max_array_gain_dbi);
        }
        for beam in &cell.baseline_codebook {
            if !cell.candidate_beam_pool.iter().any(|p| p == beam) {
                v.push(Violation {
                    entity: entity.clone(),
                    invariant: "candidate beam pool does not contain the baseline codebook".to_string(),
                });
                break;
            }
        }
    }

    for site in scenario.site_ids() {
        let mut boresights: Vec<f64> = scenario
            .cells
            .iter()
            .filter(|c| c.site_id == site)
            .map(|c| c.boresight_azimuth_deg.rem_euclid(360.0))
            .collect();
        if boresights.len() != 3 {
            v.push(Violation {
                entity: format!("site {site}"),
                invariant: format!("must host exactly 3 cells, found {}", boresights.len()),
            });
            continue;
        }
        boresights.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let d0 = boresights[1] - boresights[0];
        let d1 = boresights[2] - boresights[1];
        let d2 = 360.0 - boresights[2] + boresights[0];
        if (d0 - 120.0).abs() > 1e-6 || (d1 - 120.0).abs() > 1e-6 || (d2 - 120.0).abs() > 1e-6 {
            v.push(Violation {
                entity: format!("site {site}"),
                invariant: "cell boresights must be 120° apart".to_string(),
            });
        }
    }

    let rf = &scenario.rf_params;
    if rf.bandwidth_mhz <= 0.0 {
        v.push(Violation {
            entity: "rf_params".to_string(),
            invariant: "bandwidth must be positive".to_string(),
        });
    }
    for (name, value) in [
        ("body_loss_db", rf.body_loss_db),
        ("implementation_margin_db", rf.implementation_margin_db),
        ("noise_figure_ue_db", rf.noise_figure_ue_db),
        ("cell_edge_reliability_margin_db", rf.cell_edge_reliability_margin_db),
        ("foliage_loss_db_per_m", rf.foliage_loss_db_per_m),
        ("reflection_loss_db", rf.reflection_loss_db),
        ("interference_margin_db", rf.interference_margin_db),
    ] {
        if value < 0.0 {
            v.push(Violation {
                entity: "rf_params".to_string(),
                invariant: format!("{name} must be non-negative"),
            });
        }
    }

    if let Err(e) = scenario.power_model.check() {
        v.push(Violation {
            entity: "power_model".to_string(),
            invariant: e.to_string(),
        });
    }

    v
}

/// Peak gain for a beam shape under the elliptical-aperture rule, capped at
/// the array maximum.
pub fn beam_peak_gain_dbi(beam_type: BeamType, max_array_gain_dbi: f64) -> f64 {
    let (w_az, w_el) = beam_type.widths_deg();
    let g = 10.0 * (ELLIPTICAL_APERTURE_NUMERATOR / (w_az * w_el)).log10();
    g.min(max_array_gain_dbi)
}

fn grid_beams(beam_type: BeamType, max_array_gain_dbi: f64) -> Vec<BeamSpec> {
    let (w_az, w_el) = beam_type.widths_deg();
    let peak = beam_peak_gain_dbi(beam_type, max_array_gain_dbi);
    let n_az = ((AZIMUTH_SPAN_DEG.1 - AZIMUTH_SPAN_DEG.0) / w_az).round() as usize;
    let n_el = ((ELEVATION_SPAN_DEG.1 - ELEVATION_SPAN_DEG.0) / w_el).round() as usize;
    let mut beams = Vec::with_capacity(n_az * n_el);
    // Enumeration order: elevation rows bottom-to-top, azimuth low-to-high
    // within each row. Tests and file formats rely on this being stable.
    for j in 0..n_el {
        for i in 0..n_az {
            beams.push(BeamSpec {
                beam_type,
                azimuth_center_deg: AZIMUTH_SPAN_DEG.0 + w_az * (i as f64 + 0.5),
                elevation_center_deg: ELEVATION_SPAN_DEG.0 + w_el * (j as f64 + 0.5),
                azimuth_width_deg: w_az,
                elevation_width_deg: w_el,
                peak_gain_dbi: peak,
            });
        }
    }
    beams
}

/// The canonical 32-beam Type1 codebook tiling the sector.
pub fn build_baseline_codebook(max_array_gain_dbi: f64) -> Vec<BeamSpec> {
    grid_beams(BeamType::Type1, max_array_gain_dbi)
}

/// The full 72-beam candidate pool: every in-span grid placement of the four
/// beam types. The baseline codebook forms the first 32 entries.
pub fn build_candidate_pool(max_array_gain_dbi: f64) -> Vec<BeamSpec> {
    let mut pool = Vec::with_capacity(72);
    for beam_type in BeamType::ALL {
        pool.extend(grid_beams(beam_type, max_array_gain_dbi));
    }
    pool
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twin::{generate, TwinConfig};

    fn test_cell(id: usize, site_id: usize, boresight: f64) -> Cell {
        let max_gain = 28.15;
        Cell {
            id,
            site_id,
            boresight_azimuth_deg: boresight,
            position: Point2::new(10.0 * site_id as f64, 0.0),
            antenna_height_m: 6.0,
            baseline_codebook: build_baseline_codebook(max_gain),
            candidate_beam_pool: build_candidate_pool(max_gain),
            tx_power_dbm: 30.0,
            max_array_gain_dbi: max_gain,
        }
    }

    fn test_scenario(n_sites: usize) -> Scenario {
        let mut cells = Vec::new();
        for s in 0..n_sites {
            for k in 0..3 {
                cells.push(test_cell(s * 3 + k, s, k as f64 * 120.0));
            }
        }
        Scenario {
            cells,
            traffic_points: vec![
                TrafficPoint { id: 0, position: Point2::new(0.5, 0.5) },
                TrafficPoint { id: 1, position: Point2::new(1.5, 0.5) },
            ],
            blockers: vec![],
            rf_params: RfParams::default(),
            power_model: PowerConfig::default(),
            seed: 7,
        }
    }

    #[test]
    fn baseline_beam_count_scales_with_cells() {
        // 212 cells × 32 beams, the always-on network size.
        let mut s = test_scenario(71);
        s.cells.truncate(212);
        assert_eq!(s.cells.len(), 212);
        assert_eq!(total_baseline_beams(&s), 6784);

        let mut empty = test_scenario(0);
        empty.cells.clear();
        assert_eq!(total_baseline_beams(&empty), 0);

        assert_eq!(total_baseline_beams(&test_scenario(1)), 96);
    }

    #[test]
    fn candidate_pool_has_72_grid_aligned_beams() {
        let pool = build_candidate_pool(28.15);
        assert_eq!(pool.len(), 72);
        let count = |t: BeamType| pool.iter().filter(|b| b.beam_type == t).count();
        assert_eq!(count(BeamType::Type1), 32);
        assert_eq!(count(BeamType::Type2), 16);
        assert_eq!(count(BeamType::Type3), 16);
        assert_eq!(count(BeamType::Type4), 8);
        for b in &pool {
            assert!(beam_in_span(b), "beam out of span: {b:?}");
        }
        // Baseline prefix convention.
        assert_eq!(&pool[..32], &build_baseline_codebook(28.15)[..]);
    }

    #[test]
    fn baseline_codebook_tiles_sector_exactly() {
        let beams = build_baseline_codebook(28.15);
        assert_eq!(beams.len(), BASELINE_CODEBOOK_SIZE);
        // Every direction in-span is covered by at least one beam, and
        // footprint interiors never overlap.
        let mut az = -59.9;
        while az < 60.0 {
            let mut el = -29.9;
            while el < 0.0 {
                let covering = beams.iter().filter(|b| b.covers(az, el)).count();
                assert!(covering >= 1, "hole at ({az}, {el})");
                let strictly_inside = beams
                    .iter()
                    .filter(|b| {
                        (az - b.azimuth_center_deg).abs() < b.azimuth_width_deg / 2.0 - 1e-9
                            && (el - b.elevation_center_deg).abs() < b.elevation_width_deg / 2.0 - 1e-9
                    })
                    .count();
                assert!(strictly_inside <= 1, "interior overlap at ({az}, {el})");
                el += 1.7;
            }
            az += 1.3;
        }
    }

    #[test]
    fn peak_gain_follows_aperture_rule() {
        // Independent recomputation of the aperture formula.
        let expected = 10.0 * (41253.0_f64 / (15.0 * 7.5)).log10();
        assert!((beam_peak_gain_dbi(BeamType::Type1, 28.15) - expected).abs() < 1e-12);
        assert!((expected - 25.64).abs() < 5e-3);
        // Cap applies when the array cannot realize the aperture gain.
        assert_eq!(beam_peak_gain_dbi(BeamType::Type1, 20.0), 20.0);
    }

    #[test]
    fn validate_accepts_well_formed_scenario() {
        assert_eq!(validate(&test_scenario(2)), vec![]);
    }

    #[test]
    fn validate_flags_site_with_two_cells() {
        let mut s = test_scenario(2);
        s.cells.pop();
        s.cells.last_mut().unwrap();
        let violations = validate(&s);
        assert!(violations.iter().any(|v| v.entity == "site 1" && v.invariant.contains("3 cells")));
    }

    #[test]
    fn validate_flags_out_of_span_beam() {
        let mut s = test_scenario(1);
        s.cells[0].candidate_beam_pool[0].azimuth_center_deg = 70.0;
        let violations = validate(&s);
        assert!(violations
            .iter()
            .any(|v| v.entity.contains("cell 0 pool beam 0") && v.invariant.contains("outside")));
    }

    #[test]
    fn validate_accepts_generated_scenarios() {
        for seed in 0..4 {
            let config = TwinConfig { seed, ..TwinConfig::small_default() };
            let s = generate(&config).unwrap();
            assert_eq!(validate(&s), vec![], "seed {seed}");
        }
    }

    #[test]
    fn scenario_json_round_trip_is_lossless() {
        let s = test_scenario(2);
        let json = s.to_json_string().unwrap();
        let back = Scenario::from_json_str(&json).unwrap();
        assert_eq!(s, back);
    }
}
