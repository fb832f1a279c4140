//! Scenario geometry, user drops, and line-of-sight channel synthesis.
//!
//! The surface lies in the `z = 0` plane, centered horizontally on the room
//! wall and vertically within the room height. Users are dropped uniformly
//! in the room box in front of it. Panels are enumerated row-major (rows
//! along `y`, ascending; columns along `x`, ascending), and that order is
//! also the daisy-chain order.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{LisError, Result};
use crate::numerics::{CMatrix, CVector};

/// Relative slack when checking that panel sides tile the surface.
const TILING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Scenario parameters as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub lis_width_m: f64,
    pub lis_height_m: f64,
    pub room_width_m: f64,
    pub room_height_m: f64,
    pub room_depth_m: f64,
    pub panel_side_m: f64,
    pub users_k: usize,
    pub wavelength_m: f64,
    /// Linear SNR.
    pub snr_rho: f64,
    pub min_user_depth_m: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            lis_width_m: 10.0,
            lis_height_m: 1.0,
            room_width_m: 30.0,
            room_height_m: 3.0,
            room_depth_m: 30.0,
            panel_side_m: 0.2,
            users_k: 20,
            wavelength_m: 0.05,
            snr_rho: 1.0,
            min_user_depth_m: 0.5,
            seed: 42,
        }
    }
}

fn tiles(length: f64, side: f64) -> Option<usize> {
    let ratio = length / side;
    let n = ratio.round();
    if n >= 1.0 && (ratio - n).abs() <= TILING_TOL * n.max(1.0) {
        Some(n as usize)
    } else {
        None
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lis_width_m", self.lis_width_m),
            ("lis_height_m", self.lis_height_m),
            ("room_width_m", self.room_width_m),
            ("room_height_m", self.room_height_m),
            ("room_depth_m", self.room_depth_m),
            ("panel_side_m", self.panel_side_m),
            ("wavelength_m", self.wavelength_m),
            ("snr_rho", self.snr_rho),
            ("min_user_depth_m", self.min_user_depth_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LisError::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.users_k == 0 {
            return Err(LisError::Config("users_k must be at least 1".into()));
        }
        if tiles(self.lis_width_m, self.panel_side_m).is_none()
            || tiles(self.lis_height_m, self.panel_side_m).is_none()
        {
            return Err(LisError::Config(format!(
                "panel side {} m does not tile a {} x {} m surface",
                self.panel_side_m, self.lis_height_m, self.lis_width_m
            )));
        }
        if self.lis_width_m > self.room_width_m || self.lis_height_m > self.room_height_m {
            return Err(LisError::Config("surface does not fit on the room wall".into()));
        }
        if self.min_user_depth_m >= self.room_depth_m {
            return Err(LisError::Config(format!(
                "min_user_depth_m ({}) must be below room_depth_m ({})",
                self.min_user_depth_m, self.room_depth_m
            )));
        }
        Ok(())
    }

    /// Antennas per panel implied by a grid pitch of one wavelength.
    pub fn default_antennas_per_panel(&self) -> usize {
        let per_side = (self.panel_side_m / self.wavelength_m).round().max(1.0) as usize;
        per_side * per_side
    }
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub index: usize,
    pub center: Position,
    /// Row-major over the panel's square grid.
    pub antennas: Vec<Position>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub panels: Vec<Panel>,
    pub antennas_per_panel: usize,
    pub antenna_spacing_m: f64,
}

impl Scenario {
    pub fn num_panels(&self) -> usize {
        self.panels.len()
    }

    pub fn total_antennas(&self) -> usize {
        self.panels.len() * self.antennas_per_panel
    }
}

fn perfect_square_root(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n && n > 0).then_some(r)
}

/// Lay out the panel grid and the `mp` antennas of every panel.
pub fn build_scenario(cfg: &ScenarioConfig, mp: usize) -> Result<Scenario> {
    cfg.validate()?;
    let grid = perfect_square_root(mp)
        .ok_or_else(|| LisError::Config(format!("antennas per panel must be a perfect square, got {mp}")))?;
    let side = cfg.panel_side_m;
    // validate() already checked these.
    let cols = tiles(cfg.lis_width_m, side).unwrap_or(0);
    let rows = tiles(cfg.lis_height_m, side).unwrap_or(0);
    let spacing = side / grid as f64;

    let x0 = -cfg.lis_width_m / 2.0;
    let y0 = (cfg.room_height_m - cfg.lis_height_m) / 2.0;

    let mut panels = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let corner_x = x0 + c as f64 * side;
            let corner_y = y0 + r as f64 * side;
            let mut antennas = Vec::with_capacity(mp);
            for a in 0..grid {
                for b in 0..grid {
                    antennas.push(Position::new(
                        corner_x + (b as f64 + 0.5) * spacing,
                        corner_y + (a as f64 + 0.5) * spacing,
                        0.0,
                    ));
                }
            }
            panels.push(Panel {
                index: panels.len(),
                center: Position::new(corner_x + side / 2.0, corner_y + side / 2.0, 0.0),
                antennas,
            });
        }
    }
    Ok(Scenario { panels, antennas_per_panel: mp, antenna_spacing_m: spacing })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserSet {
    pub positions: Vec<Position>,
}

impl UserSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Independent generator stream for one Monte Carlo trial.
pub fn trial_rng(seed: u64, trial_index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}

/// Drop `users_k` users uniformly in the room box, no closer than
/// `min_user_depth_m` to the surface.
pub fn sample_users<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> UserSet {
    let half_w = cfg.room_width_m / 2.0;
    let positions = (0..cfg.users_k)
        .map(|_| {
            let x = rng.random_range(-half_w..=half_w);
            let y = rng.random_range(0.0..=cfg.room_height_m);
            let z = rng.random_range(cfg.min_user_depth_m..=cfg.room_depth_m);
            Position::new(x, y, z)
        })
        .collect();
    UserSet { positions }
}

/// Free-space LOS gain between a user and an antenna on the `z = 0` plane.
pub fn los_gain(user: &Position, antenna: &Position, wavelength_m: f64) -> Result<Complex64> {
    if !(user.z > 0.0) {
        return Err(LisError::Domain(format!("user depth must be positive, got z = {}", user.z)));
    }
    let d = user.distance(antenna);
    let magnitude = user.z.sqrt() / (2.0 * PI.sqrt() * d.powf(1.5));
    // Reduce to a fractional number of cycles first; d / lambda can be ~1e3.
    let cycles = d / wavelength_m;
    let phase = -2.0 * PI * (cycles - cycles.floor());
    Ok(Complex64::from_polar(magnitude, phase))
}

/// Unnormalized `Mp x K` channel of one panel.
pub fn panel_channel(panel: &Panel, users: &UserSet, wavelength_m: f64) -> Result<CMatrix> {
    let mut h = CMatrix::zeros(panel.antennas.len(), users.len());
    for (k, user) in users.positions.iter().enumerate() {
        for (m, antenna) in panel.antennas.iter().enumerate() {
            h[(m, k)] = los_gain(user, antenna, wavelength_m)?;
        }
    }
    Ok(h)
}

/// Per-panel channel blocks scaled so the stacked channel has `‖H‖_F² = M K`.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub blocks: Vec<CMatrix>,
    pub norm_scale: f64,
}

impl ChannelRealization {
    /// Normalize raw blocks with a single global constant.
    pub fn from_raw_blocks(mut blocks: Vec<CMatrix>) -> Result<Self> {
        let k = blocks.first().map(|b| b.ncols()).unwrap_or(0);
        if blocks.iter().any(|b| b.ncols() != k) {
            return Err(LisError::Dimension("channel blocks disagree on the number of users".into()));
        }
        let m: usize = blocks.iter().map(|b| b.nrows()).sum();
        let energy: f64 = blocks.iter().map(|b| b.norm_squared()).sum();
        if !(energy > 0.0) || !energy.is_finite() {
            return Err(LisError::Domain("degenerate channel: stacked channel is zero or non-finite".into()));
        }
        let norm_scale = ((m * k) as f64).sqrt() / energy.sqrt();
        for b in &mut blocks {
            b.scale_mut(norm_scale);
        }
        Ok(Self { blocks, norm_scale })
    }

    pub fn num_panels(&self) -> usize {
        self.blocks.len()
    }

    pub fn num_users(&self) -> usize {
        self.blocks.first().map(|b| b.ncols()).unwrap_or(0)
    }

    pub fn total_antennas(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    /// The `M x K` channel with blocks stacked in panel order.
    pub fn stacked(&self) -> CMatrix {
        stack_blocks(&self.blocks)
    }
}

pub fn stack_blocks(blocks: &[CMatrix]) -> CMatrix {
    let k = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    let m: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut h = CMatrix::zeros(m, k);
    let mut row = 0;
    for b in blocks {
        h.view_mut((row, 0), b.shape()).copy_from(b);
        row += b.nrows();
    }
    h
}

pub fn realize_channel(scenario: &Scenario, users: &UserSet, wavelength_m: f64) -> Result<ChannelRealization> {
    let blocks = scenario
        .panels
        .iter()
        .map(|p| panel_channel(p, users, wavelength_m))
        .collect::<Result<Vec<_>>>()?;
    ChannelRealization::from_raw_blocks(blocks)
}

/// Received signal `y = sqrt(rho) H x + n`. Pass `None` for a noise-free
/// observation; otherwise `n` is unit-variance circular complex Gaussian.
pub fn simulate_uplink<R: Rng + ?Sized>(
    chan: &ChannelRealization,
    x: &CVector,
    rho: f64,
    noise: Option<&mut R>,
) -> Result<CVector> {
    if !(rho > 0.0) {
        return Err(LisError::Domain(format!("rho must be positive, got {rho}")));
    }
    if x.len() != chan.num_users() {
        return Err(LisError::Dimension(format!(
            "user vector has {} entries, channel serves {} users",
            x.len(),
            chan.num_users()
        )));
    }
    let mut y = chan.stacked() * x * Complex64::new(rho.sqrt(), 0.0);
    if let Some(rng) = noise {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for v in y.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *v += Complex64::new(re * s, im * s);
        }
    }
    Ok(y)
}
