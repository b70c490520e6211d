//! Deterministic desk-scale scenario generator: a Manhattan-style street grid
//! with box buildings, rectangular foliage, candidate poles on street edges
//! (three sector cells each), and a uniform outdoor traffic-point grid.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::PowerConfig;
use crate::geometry::{Point2, Rect};
use crate::scenario::{
    build_baseline_codebook, build_candidate_pool, Blocker, Cell, RfParams, Scenario, TrafficPoint,
};

#[derive(Debug, Error, PartialEq)]
pub enum TwinError {
    #[error("invalid twin config: {field}: {message}")]
    Config { field: &'static str, message: String },
    #[error("no outdoor area left for traffic points")]
    NoOutdoorArea,
    #[error("pole density asks for poles but the street grid offers no slots")]
    NoPoleSlots,
}

fn config_err(field: &'static str, message: impl Into<String>) -> TwinError {
    TwinError::Config { field, message: message.into() }
}

/// Generator knobs. Distances in meters, density in poles per km².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TwinConfig {
    pub area_width_m: f64,
    pub area_height_m: f64,
    /// Distance between street centerlines.
    pub block_pitch_m: f64,
    pub street_width_m: f64,
    pub building_count: u32,
    pub building_height_min_m: f64,
    pub building_height_max_m: f64,
    /// Building footprint as a fraction of its block, sampled per axis.
    pub building_fill_min: f64,
    pub building_fill_max: f64,
    pub foliage_count: u32,
    pub foliage_size_m: f64,
    pub pole_density_per_km2: f64,
    pub pole_height_m: f64,
    pub tx_power_dbm: f64,
    pub max_array_gain_dbi: f64,
    pub tp_resolution_m: f64,
    pub rf_params: RfParams,
    pub power_model: PowerConfig,
    pub seed: u64,
}

impl Default for TwinConfig {
    fn default() -> Self {
        Self {
            area_width_m: 200.0,
            area_height_m: 160.0,
            block_pitch_m: 50.0,
            street_width_m: 12.0,
            building_count: 8,
            building_height_min_m: 8.0,
            building_height_max_m: 25.0,
            building_fill_min: 0.6,
            building_fill_max: 0.95,
            foliage_count: 2,
            foliage_size_m: 8.0,
            pole_density_per_km2: 160.0,
            pole_height_m: 6.0,
            tx_power_dbm: 30.0,
            max_array_gain_dbi: 28.15,
            tp_resolution_m: 1.0,
            rf_params: RfParams::default(),
            power_model: PowerConfig::default(),
            seed: 0,
        }
    }
}

impl TwinConfig {
    /// A compact configuration that keeps unit tests fast.
    pub fn small_default() -> Self {
        Self {
            area_width_m: 120.0,
            area_height_m: 100.0,
            block_pitch_m: 40.0,
            street_width_m: 10.0,
            building_count: 4,
            foliage_count: 1,
            pole_density_per_km2: 300.0,
            tp_resolution_m: 2.0,
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<(), TwinError> {
        if self.area_width_m <= 0.0 || self.area_height_m <= 0.0 {
            return Err(config_err("area", "width and height must be positive"));
        }
        if self.tp_resolution_m <= 0.0 {
            return Err(config_err("tp_resolution_m", "resolution must be positive"));
        }
        if self.block_pitch_m <= self.street_width_m {
            return Err(config_err("block_pitch_m", "block pitch must exceed the street width"));
        }
        if self.street_width_m <= 0.0 {
            return Err(config_err("street_width_m", "street width must be positive"));
        }
        if !(self.building_fill_min > 0.0
            && self.building_fill_min <= self.building_fill_max
            && self.building_fill_max <= 1.0)
        {
            return Err(config_err("building_fill", "fill fractions must satisfy 0 < min ≤ max ≤ 1"));
        }
        if self.building_height_min_m <= 0.0 || self.building_height_min_m > self.building_height_max_m {
            return Err(config_err("building_height", "heights must satisfy 0 < min ≤ max"));
        }
        if self.pole_density_per_km2 < 0.0 {
            return Err(config_err("pole_density_per_km2", "density must be non-negative"));
        }
        if self.foliage_size_m < 0.0 {
            return Err(config_err("foliage_size_m", "foliage size must be non-negative"));
        }
        if self.pole_height_m <= 0.0 {
            return Err(config_err("pole_height_m", "pole height must be positive"));
        }
        Ok(())
    }
}

// Street centerlines perpendicular to one axis, at k·pitch for k = 0..
fn street_coords(extent: f64, pitch: f64) -> Vec<f64> {
    let mut coords = Vec::new();
    let mut k = 0.0;
    while k * pitch <= extent + 1e-9 {
        coords.push(k * pitch);
        k += 1.0;
    }
    coords
}

// Blocks between street corridors, clipped to the area.
fn blocks(config: &TwinConfig) -> Vec<Rect> {
    let half = config.street_width_m / 2.0;
    let xs = street_coords(config.area_width_m, config.block_pitch_m);
    let ys = street_coords(config.area_height_m, config.block_pitch_m);
    let mut out = Vec::new();
    for w in xs.windows(2) {
        for h in ys.windows(2) {
            let rect = Rect::new(
                Point2::new((w[0] + half).max(0.0), (h[0] + half).max(0.0)),
                Point2::new((w[1] - half).min(config.area_width_m), (h[1] - half).min(config.area_height_m)),
            );
            if rect.width() > 2.0 && rect.height() > 2.0 {
                out.push(rect);
            }
        }
    }
    out
}

// Deterministic choice of `count` indices out of 0..n via partial
// Fisher-Yates, returned sorted.
fn choose_indices(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<usize> {
    let count = count.min(n);
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = rng.random_range(i..n);
        indices.swap(i, j);
    }
    let mut chosen = indices[..count].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Whether a point coincides with a traffic-point grid node.
fn on_tp_grid(p: Point2, config: &TwinConfig) -> bool {
    let res = config.tp_resolution_m;
    let near = |v: f64| {
        let u = v / res - 0.5;
        u >= 0.0 && (u - u.round()).abs() < 1e-9
    };
    p.x < config.area_width_m && p.y < config.area_height_m && near(p.x) && near(p.y)
}

/// Generates a scenario from the config. Pure function of the config: the
/// random stream is consumed in a fixed order (buildings: block choice then
/// per-block fill_x, fill_y, height; foliage: center_x, center_y; poles:
/// slot choice then per-pole orientation), so equal configs produce
/// byte-identical scenarios.
pub fn generate(config: &TwinConfig) -> Result<Scenario, TwinError> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Buildings.
    let blocks = blocks(config);
    let chosen_blocks = choose_indices(&mut rng, blocks.len(), config.building_count as usize);
    let mut blockers = Vec::new();
    for &bi in &chosen_blocks {
        let block = &blocks[bi];
        let fill_x = rng.random_range(config.building_fill_min..=config.building_fill_max);
        let fill_y = rng.random_range(config.building_fill_min..=config.building_fill_max);
        let height = rng.random_range(config.building_height_min_m..=config.building_height_max_m);
        // Snap the footprint to whole meters so it occludes an exact number
        // of grid cells.
        let w = (block.width() * fill_x).round().clamp(1.0, block.width().floor());
        let h = (block.height() * fill_y).round().clamp(1.0, block.height().floor());
        let cx = (block.min.x + block.max.x) / 2.0;
        let cy = (block.min.y + block.max.y) / 2.0;
        let x0 = (cx - w / 2.0).round().max(block.min.x.ceil());
        let y0 = (cy - h / 2.0).round().max(block.min.y.ceil());
        blockers.push(Blocker::Building {
            footprint: Rect::new(Point2::new(x0, y0), Point2::new(x0 + w, y0 + h)),
            height_m: height,
        });
    }

    // Foliage.
    for _ in 0..config.foliage_count {
        let cx = rng.random_range(0.0..config.area_width_m);
        let cy = rng.random_range(0.0..config.area_height_m);
        let half = config.foliage_size_m / 2.0;
        blockers.push(Blocker::Foliage {
            region: Rect::new(
                Point2::new((cx - half).max(0.0), (cy - half).max(0.0)),
                Point2::new((cx + half).min(config.area_width_m), (cy + half).min(config.area_height_m)),
            ),
        });
    }

    // Candidate pole slots on street-corridor edges, spaced half a block.
    let half = config.street_width_m / 2.0;
    let step = config.block_pitch_m / 2.0;
    let mut slots: Vec<Point2> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut push_slot = |slots: &mut Vec<Point2>, p: Point2| {
        if p.x < 0.0 || p.x > config.area_width_m || p.y < 0.0 || p.y > config.area_height_m {
            return;
        }
        let key = ((p.x * 1000.0).round() as i64, (p.y * 1000.0).round() as i64);
        if seen.insert(key) {
            slots.push(p);
        }
    };
    for &sx in &street_coords(config.area_width_m, config.block_pitch_m) {
        for edge in [-half, half] {
            let x = sx + edge;
            let mut y = step;
            while y < config.area_height_m {
                push_slot(&mut slots, Point2::new(x, y));
                y += step;
            }
        }
    }
    for &sy in &street_coords(config.area_height_m, config.block_pitch_m) {
        for edge in [-half, half] {
            let y = sy + edge;
            let mut x = step;
            while x < config.area_width_m {
                push_slot(&mut slots, Point2::new(x, y));
                x += step;
            }
        }
    }

    let area_km2 = config.area_width_m * config.area_height_m / 1e6;
    let n_poles = (config.pole_density_per_km2 * area_km2).round() as usize;
    if n_poles > 0 && slots.is_empty() {
        return Err(TwinError::NoPoleSlots);
    }
    let chosen_slots = choose_indices(&mut rng, slots.len(), n_poles);

    let mut cells = Vec::new();
    for (site_id, &slot) in chosen_slots.iter().enumerate() {
        let mut position = slots[slot];
        // Keep antennas off traffic-point grid nodes so each link has a
        // well-defined direction.
        if on_tp_grid(position, config) {
            position.x += 0.25 * config.tp_resolution_m;
        }
        let orientation = rng.random_range(0.0..360.0);
        for sector in 0..3 {
            cells.push(Cell {
                id: cells.len(),
                site_id,
                boresight_azimuth_deg: (orientation + 120.0 * sector as f64).rem_euclid(360.0),
                position,
                antenna_height_m: config.pole_height_m,
                baseline_codebook: build_baseline_codebook(config.max_array_gain_dbi),
                candidate_beam_pool: build_candidate_pool(config.max_array_gain_dbi),
                tx_power_dbm: config.tx_power_dbm,
                max_array_gain_dbi: config.max_array_gain_dbi,
            });
        }
    }

    // Outdoor traffic points on the uniform grid, skipping building
    // footprints.
    let res = config.tp_resolution_m;
    let nx = (config.area_width_m / res).floor() as usize;
    let ny = (config.area_height_m / res).floor() as usize;
    let buildings: Vec<&Rect> = blockers
        .iter()
        .filter_map(|b| match b {
            Blocker::Building { footprint, .. } => Some(footprint),
            _ => None,
        })
        .collect();
    let mut traffic_points = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let p = Point2::new((i as f64 + 0.5) * res, (j as f64 + 0.5) * res);
            if buildings.iter().any(|r| r.contains(&p)) {
                continue;
            }
            traffic_points.push(TrafficPoint { id: traffic_points.len(), position: p });
        }
    }
    if traffic_points.is_empty() {
        return Err(TwinError::NoOutdoorArea);
    }

    Ok(Scenario {
        cells,
        traffic_points,
        blockers,
        rf_params: config.rf_params,
        power_model: config.power_model,
        seed: config.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn open_field_yields_full_grid() {
        let config = TwinConfig {
            area_width_m: 100.0,
            area_height_m: 100.0,
            building_count: 0,
            foliage_count: 0,
            pole_density_per_km2: 0.0,
            tp_resolution_m: 1.0,
            ..TwinConfig::default()
        };
        let s = generate(&config).unwrap();
        assert_eq!(s.traffic_points.len(), 10_000);
        assert!(s.cells.is_empty());
    }

    #[test]
    fn building_footprint_removes_exactly_its_grid_cells() {
        // One block sized 20×20 filled completely: 400 grid cells vanish.
        let config = TwinConfig {
            area_width_m: 100.0,
            area_height_m: 100.0,
            block_pitch_m: 32.0,
            street_width_m: 12.0,
            building_count: 1,
            building_fill_min: 1.0,
            building_fill_max: 1.0,
            foliage_count: 0,
            pole_density_per_km2: 0.0,
            tp_resolution_m: 1.0,
            ..TwinConfig::default()
        };
        let s = generate(&config).unwrap();
        let (rect, _) = s.buildings().next().unwrap();
        assert_eq!((rect.width(), rect.height()), (20.0, 20.0));
        assert_eq!(s.traffic_points.len(), 10_000 - 400);
    }

    #[test]
    fn generation_is_deterministic_byte_for_byte() {
        let config = TwinConfig::small_default();
        let a = generate(&config).unwrap().to_json_string().unwrap();
        let b = generate(&config).unwrap().to_json_string().unwrap();
        assert_eq!(a, b);
        let other = generate(&TwinConfig { seed: 1, ..TwinConfig::small_default() })
            .unwrap()
            .to_json_string()
            .unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn no_traffic_point_sits_inside_a_building() {
        for seed in 0..5 {
            let s = generate(&TwinConfig { seed, ..TwinConfig::small_default() }).unwrap();
            for tp in &s.traffic_points {
                for (rect, _) in s.buildings() {
                    assert!(!rect.contains(&tp.position), "tp {} inside building", tp.id);
                }
            }
        }
    }

    #[test]
    fn every_pole_carries_three_sectors() {
        let s = generate(&TwinConfig::small_default()).unwrap();
        assert!(!s.cells.is_empty());
        for site in s.site_ids() {
            let sectors: Vec<&Cell> = s.cells.iter().filter(|c| c.site_id == site).collect();
            assert_eq!(sectors.len(), 3);
            let d = (sectors[1].boresight_azimuth_deg - sectors[0].boresight_azimuth_deg).rem_euclid(360.0);
            assert!((d - 120.0).abs() < 1e-9);
            assert!(sectors.windows(2).all(|w| w[0].position == w[1].position));
        }
    }

    #[test]
    fn infeasible_configs_are_rejected() {
        let bad = TwinConfig { tp_resolution_m: 0.0, ..TwinConfig::default() };
        assert!(matches!(generate(&bad), Err(TwinError::Config { field: "tp_resolution_m", .. })));
        let narrow = TwinConfig { block_pitch_m: 5.0, street_width_m: 12.0, ..TwinConfig::default() };
        assert!(matches!(generate(&narrow), Err(TwinError::Config { field: "block_pitch_m", .. })));
    }
}
