//! Daisy-chain and centralized execution of the equalizer algorithms.
//!
//! In decentralized mode panel `i` receives the `K x K` accumulator from
//! panel `i - 1`, runs its local step, and forwards the updated accumulator.
//! Centralized mode runs the very same fold on the CPU after collecting all
//! channel blocks, so both modes yield bit-identical filters; only the
//! interconnect accounting differs.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::capacity::{self, CapacityReport};
use crate::equalizers::{self, EqualizerSet};
use crate::error::{LisError, Result};
use crate::numerics::{self, CMatrix};

/// Bytes per complex scalar on the wire (two `f64`).
pub const COMPLEX_SCALAR_BYTES: usize = 16;

/// Slack on the `Z >= I` invariant of chain messages.
pub const MESSAGE_EIG_TOL: f64 = 1e-9;

/// The accumulator `Z = I + rho * sum_j H_j^H S_j H_j` passed between panels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainMessage {
    pub z: CMatrix,
    pub hop_index: usize,
}

impl ChainMessage {
    pub fn initial(users: usize) -> Self {
        Self { z: numerics::identity(users), hop_index: 0 }
    }

    /// Check that `z` is Hermitian with every eigenvalue at least one.
    pub fn check_invariant(&self) -> Result<()> {
        let eig = numerics::hermitian_eig(&self.z)?;
        match eig.values.last() {
            Some(&min) if min < 1.0 - MESSAGE_EIG_TOL => Err(LisError::Domain(format!(
                "chain message at hop {} has eigenvalue {min} below one",
                self.hop_index
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Iic,
    Rmf,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Iic => "iic",
            Algorithm::Rmf => "rmf",
        })
    }
}

impl FromStr for Algorithm {
    type Err = LisError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "iic" => Ok(Algorithm::Iic),
            "rmf" => Ok(Algorithm::Rmf),
            other => Err(LisError::Config(format!("unknown algorithm '{other}' (expected iic or rmf)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecutionMode {
    Decentralized,
    Centralized,
}

/// Interconnect traffic, counted in complex scalars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct TrafficReport {
    /// Panel-to-panel total, uncompressed `K x K` per hop.
    pub chain_complex_scalars: usize,
    /// Same traffic if only the upper triangle of each Hermitian message is sent.
    pub chain_hermitian_scalars: usize,
    /// Panel outputs `N` delivered to the backplane per channel use.
    pub backplane_scalars_per_use: usize,
    /// Values `K` delivered to the CPU per channel use.
    pub cpu_scalars_per_use: usize,
    /// CSI shipped to the CPU (`M K`) when the algorithm runs there.
    pub centralized_csi_scalars: usize,
}

impl TrafficReport {
    pub fn chain_bytes(&self) -> usize {
        self.chain_complex_scalars * COMPLEX_SCALAR_BYTES
    }

    pub fn centralized_csi_bytes(&self) -> usize {
        self.centralized_csi_scalars * COMPLEX_SCALAR_BYTES
    }
}

#[derive(Debug, Clone)]
pub struct ChainResult {
    pub equalizers: EqualizerSet,
    pub report: CapacityReport,
    pub traffic: TrafficReport,
    pub passes_executed: usize,
    /// Per-panel capacity increments reported by the local steps of the
    /// first pass (IIC only).
    pub local_increments: Vec<f64>,
}

struct Shape {
    users: usize,
    antennas: usize,
}

fn check_shapes(blocks: &[CMatrix], np_outputs: usize) -> Result<Shape> {
    let first = blocks
        .first()
        .ok_or_else(|| LisError::Dimension("at least one panel is required".into()))?;
    let users = first.ncols();
    if users == 0 {
        return Err(LisError::Dimension("channel serves no users".into()));
    }
    if np_outputs < 1 {
        return Err(LisError::Config("np_outputs must be at least 1".into()));
    }
    for (i, b) in blocks.iter().enumerate() {
        if b.ncols() != users {
            return Err(LisError::Dimension(format!("panel {i} serves {} users, expected {users}", b.ncols())));
        }
        if np_outputs > b.nrows() {
            return Err(LisError::Config(format!(
                "np_outputs {np_outputs} exceeds the {} antennas of panel {i}",
                b.nrows()
            )));
        }
    }
    Ok(Shape { users, antennas: blocks.iter().map(|b| b.nrows()).sum() })
}

/// IIC fold shared by both execution modes. Returns the filters and the
/// first-pass increments.
fn fold_iic(blocks: &[CMatrix], rho: f64, np_outputs: usize, passes: usize) -> Result<(EqualizerSet, Vec<f64>)> {
    let users = blocks[0].ncols();
    let mut msg = ChainMessage::initial(users);
    let mut per_panel = Vec::with_capacity(blocks.len());
    let mut increments = Vec::with_capacity(blocks.len());
    for h in blocks {
        let step = equalizers::iic_local_step(h, &msg, rho, np_outputs)?;
        per_panel.push(step.equalizer);
        increments.push(step.delta_c);
        msg = step.next;
    }

    if passes > 1 {
        let scale = Complex64::new(rho, 0.0);
        let mut contrib: Vec<CMatrix> = blocks
            .iter()
            .zip(&per_panel)
            .map(|(h, e)| numerics::gram(&(e.w().adjoint() * h)) * scale)
            .collect();
        for _ in 1..passes {
            for (i, h) in blocks.iter().enumerate() {
                let mut z = numerics::identity(users);
                for (j, c) in contrib.iter().enumerate() {
                    if j != i {
                        z += c;
                    }
                }
                numerics::hermitize_mut(&mut z);
                let step = equalizers::iic_local_step(h, &ChainMessage { z, hop_index: i }, rho, np_outputs)?;
                contrib[i] = numerics::gram(&(step.equalizer.w().adjoint() * h)) * scale;
                per_panel[i] = step.equalizer;
            }
        }
    }
    Ok((EqualizerSet::new(per_panel), increments))
}

fn iic_result(blocks: &[CMatrix], rho: f64, np_outputs: usize, passes: usize, mode: ExecutionMode) -> Result<ChainResult> {
    if passes < 1 {
        return Err(LisError::Config("passes must be at least 1".into()));
    }
    let shape = check_shapes(blocks, np_outputs)?;
    let (equalizers, local_increments) = fold_iic(blocks, rho, np_outputs, passes)?;
    let trace = capacity::chain_capacity_trace(blocks, &equalizers, rho)?;
    let report = CapacityReport {
        sum_rate_bits: trace.last().copied().unwrap_or(0.0),
        per_panel_cumulative: trace,
        channel_capacity_bits: capacity::channel_capacity_blocks(blocks, rho)?,
    };
    let hops = passes * (blocks.len() - 1);
    let k = shape.users;
    let traffic = match mode {
        ExecutionMode::Decentralized => TrafficReport {
            chain_complex_scalars: hops * k * k,
            chain_hermitian_scalars: hops * k * (k + 1) / 2,
            backplane_scalars_per_use: equalizers.total_outputs(),
            cpu_scalars_per_use: k,
            centralized_csi_scalars: 0,
        },
        ExecutionMode::Centralized => TrafficReport {
            backplane_scalars_per_use: equalizers.total_outputs(),
            cpu_scalars_per_use: k,
            centralized_csi_scalars: shape.antennas * k,
            ..Default::default()
        },
    };
    Ok(ChainResult { equalizers, report, traffic, passes_executed: passes, local_increments })
}

fn rmf_result(blocks: &[CMatrix], rho: f64, np_outputs: usize, mode: ExecutionMode) -> Result<ChainResult> {
    let shape = check_shapes(blocks, np_outputs)?;
    let equalizers = EqualizerSet::new(
        blocks
            .iter()
            .map(|h| equalizers::rmf_filter(h, np_outputs))
            .collect::<Result<Vec<_>>>()?,
    );
    let report = CapacityReport {
        sum_rate_bits: capacity::sum_rate_panelized(blocks, &equalizers, rho)?,
        per_panel_cumulative: Vec::new(),
        channel_capacity_bits: capacity::channel_capacity_blocks(blocks, rho)?,
    };
    let traffic = TrafficReport {
        backplane_scalars_per_use: equalizers.total_outputs(),
        cpu_scalars_per_use: shape.users,
        centralized_csi_scalars: match mode {
            ExecutionMode::Decentralized => 0,
            ExecutionMode::Centralized => shape.antennas * shape.users,
        },
        ..Default::default()
    };
    Ok(ChainResult { equalizers, report, traffic, passes_executed: 1, local_increments: Vec::new() })
}

/// Decentralized IIC along the panel chain.
pub fn run_iic_chain(blocks: &[CMatrix], rho: f64, np_outputs: usize, passes: usize) -> Result<ChainResult> {
    iic_result(blocks, rho, np_outputs, passes, ExecutionMode::Decentralized)
}

/// Reduced matched filter on every panel independently; no chain traffic.
pub fn run_rmf(blocks: &[CMatrix], rho: f64, np_outputs: usize) -> Result<ChainResult> {
    rmf_result(blocks, rho, np_outputs, ExecutionMode::Decentralized)
}

/// Same algorithms executed on the CPU with full CSI.
pub fn run_centralized(
    blocks: &[CMatrix],
    rho: f64,
    np_outputs: usize,
    algorithm: Algorithm,
    passes: usize,
) -> Result<ChainResult> {
    run(blocks, rho, np_outputs, algorithm, ExecutionMode::Centralized, passes)
}

pub fn run(
    blocks: &[CMatrix],
    rho: f64,
    np_outputs: usize,
    algorithm: Algorithm,
    mode: ExecutionMode,
    passes: usize,
) -> Result<ChainResult> {
    match algorithm {
        Algorithm::Iic => iic_result(blocks, rho, np_outputs, passes, mode),
        Algorithm::Rmf => rmf_result(blocks, rho, np_outputs, mode),
    }
}
