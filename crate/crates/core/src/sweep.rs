//! Monte Carlo trials, parameter sweeps, config files, and CSV output.
//!
//! A trial draws one user placement from the `(seed, trial_index)` stream,
//! realizes the channel, and evaluates every requested algorithm and output
//! count on that same realization. Trials run in parallel but are reduced
//! in index order, so results do not depend on the thread count.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::CapacityReport;
use crate::chain::{self, Algorithm, ExecutionMode, TrafficReport};
use crate::channel::{self, ChannelRealization, Scenario, ScenarioConfig};
use crate::error::{LisError, Result};

pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_RHO: f64 = 1.0;
pub const DEFAULT_PASSES: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PanelProfile {
    /// 0.2 m panels with 16 antennas.
    Small,
    /// 1.0 m panels with 400 antennas.
    Large,
}

impl PanelProfile {
    pub fn side_m(self) -> f64 {
        match self {
            PanelProfile::Small => 0.2,
            PanelProfile::Large => 1.0,
        }
    }

    pub fn antennas_per_panel(self) -> usize {
        match self {
            PanelProfile::Small => 16,
            PanelProfile::Large => 400,
        }
    }

    pub fn default_np_values(self) -> Vec<usize> {
        match self {
            PanelProfile::Small => vec![1, 2, 4, 8, 12, 16],
            PanelProfile::Large => vec![1, 2, 4, 8, 12, 16, 20],
        }
    }
}

impl fmt::Display for PanelProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PanelProfile::Small => "small",
            PanelProfile::Large => "large",
        })
    }
}

impl FromStr for PanelProfile {
    type Err = LisError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "small" => Ok(PanelProfile::Small),
            "large" => Ok(PanelProfile::Large),
            other => Err(LisError::Config(format!("unknown panel profile '{other}' (expected small or large)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Values are outputs per panel.
    #[serde(rename = "np", alias = "np_per_panel", alias = "NP_PER_PANEL")]
    NpPerPanel,
    /// Values are total outputs `N = Np * P`.
    #[serde(rename = "n", alias = "total_n", alias = "TOTAL_N")]
    TotalN,
}

impl FromStr for SweepAxis {
    type Err = LisError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "np" | "np_per_panel" => Ok(SweepAxis::NpPerPanel),
            "n" | "total_n" => Ok(SweepAxis::TotalN),
            other => Err(LisError::Config(format!("unknown sweep axis '{other}' (expected np or n)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    /// Empty means the per-profile defaults (converted to `N` on the
    /// total-outputs axis).
    pub values: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub panel_profiles: Vec<PanelProfile>,
    pub trials: usize,
    pub seed: u64,
    pub rho: f64,
    pub passes: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            axis: SweepAxis::NpPerPanel,
            values: Vec::new(),
            algorithms: vec![Algorithm::Iic, Algorithm::Rmf],
            panel_profiles: vec![PanelProfile::Small, PanelProfile::Large],
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            rho: DEFAULT_RHO,
            passes: DEFAULT_PASSES,
        }
    }
}

impl SweepSpec {
    /// Outputs per panel to evaluate for `profile` on a surface of `panels` panels.
    pub fn np_values(&self, profile: PanelProfile, panels: usize) -> Result<Vec<usize>> {
        let mp = profile.antennas_per_panel();
        let nps: Vec<usize> = match (self.axis, self.values.is_empty()) {
            (_, true) => profile.default_np_values(),
            (SweepAxis::NpPerPanel, false) => self.values.clone(),
            (SweepAxis::TotalN, false) => self
                .values
                .iter()
                .map(|&n| {
                    if n == 0 || n % panels != 0 {
                        Err(LisError::Config(format!(
                            "total outputs {n} is not a positive multiple of the {panels} panels of the {profile} profile"
                        )))
                    } else {
                        Ok(n / panels)
                    }
                })
                .collect::<Result<_>>()?,
        };
        for &np in &nps {
            if np == 0 || np > mp {
                return Err(LisError::Config(format!(
                    "outputs per panel {np} outside 1..={mp} for the {profile} profile"
                )));
            }
        }
        let mut nps = nps;
        nps.sort_unstable();
        nps.dedup();
        Ok(nps)
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(LisError::Config("trials must be at least 1".into()));
        }
        if self.passes == 0 {
            return Err(LisError::Config("passes must be at least 1".into()));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(LisError::Config(format!("rho must be positive, got {}", self.rho)));
        }
        if self.algorithms.is_empty() || self.panel_profiles.is_empty() {
            return Err(LisError::Config("at least one algorithm and one panel profile are required".into()));
        }
        Ok(())
    }
}

/// Flat config file: every `ScenarioConfig` key plus the sweep keys.
/// Absent keys keep their defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub lis_width_m: Option<f64>,
    pub lis_height_m: Option<f64>,
    pub room_width_m: Option<f64>,
    pub room_height_m: Option<f64>,
    pub room_depth_m: Option<f64>,
    pub panel_side_m: Option<f64>,
    pub users_k: Option<usize>,
    pub wavelength_m: Option<f64>,
    pub snr_rho: Option<f64>,
    pub min_user_depth_m: Option<f64>,
    pub seed: Option<u64>,
    pub axis: Option<SweepAxis>,
    pub values: Option<Vec<usize>>,
    pub algorithms: Option<Vec<Algorithm>>,
    pub panel_profiles: Option<Vec<PanelProfile>>,
    pub trials: Option<usize>,
    pub rho: Option<f64>,
    pub passes: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn scenario(&self) -> ScenarioConfig {
        let d = ScenarioConfig::default();
        let snr_rho = self.snr_rho.or(self.rho).unwrap_or(d.snr_rho);
        ScenarioConfig {
            lis_width_m: self.lis_width_m.unwrap_or(d.lis_width_m),
            lis_height_m: self.lis_height_m.unwrap_or(d.lis_height_m),
            room_width_m: self.room_width_m.unwrap_or(d.room_width_m),
            room_height_m: self.room_height_m.unwrap_or(d.room_height_m),
            room_depth_m: self.room_depth_m.unwrap_or(d.room_depth_m),
            panel_side_m: self.panel_side_m.unwrap_or(d.panel_side_m),
            users_k: self.users_k.unwrap_or(d.users_k),
            wavelength_m: self.wavelength_m.unwrap_or(d.wavelength_m),
            snr_rho,
            min_user_depth_m: self.min_user_depth_m.unwrap_or(d.min_user_depth_m),
            seed: self.seed.unwrap_or(d.seed),
        }
    }

    pub fn sweep(&self) -> SweepSpec {
        let d = SweepSpec::default();
        SweepSpec {
            axis: self.axis.unwrap_or(d.axis),
            values: self.values.clone().unwrap_or(d.values),
            algorithms: self.algorithms.clone().unwrap_or(d.algorithms),
            panel_profiles: self.panel_profiles.clone().unwrap_or(d.panel_profiles),
            trials: self.trials.unwrap_or(d.trials),
            seed: self.seed.unwrap_or(d.seed),
            rho: self.rho.or(self.snr_rho).unwrap_or(d.rho),
            passes: self.passes.unwrap_or(d.passes),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialReport {
    pub capacity: CapacityReport,
    pub traffic: TrafficReport,
}

/// Channel for one trial: users from the `(cfg.seed, trial_index)` stream.
pub fn trial_channel(scenario: &Scenario, cfg: &ScenarioConfig, trial_index: u64) -> Result<ChannelRealization> {
    let mut rng = channel::trial_rng(cfg.seed, trial_index);
    let users = channel::sample_users(cfg, &mut rng);
    channel::realize_channel(scenario, &users, cfg.wavelength_m)
}

/// One Monte Carlo trial of one algorithm, decentralized, at `cfg.snr_rho`.
pub fn run_trial(
    scenario: &Scenario,
    cfg: &ScenarioConfig,
    algorithm: Algorithm,
    np_outputs: usize,
    trial_index: u64,
    passes: usize,
) -> Result<TrialReport> {
    let chan = trial_channel(scenario, cfg, trial_index)?;
    let res = chain::run(&chan.blocks, cfg.snr_rho, np_outputs, algorithm, ExecutionMode::Decentralized, passes)?;
    Ok(TrialReport { capacity: res.report, traffic: res.traffic })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub profile: PanelProfile,
    pub algorithm: Algorithm,
    pub np: usize,
    pub n_total: usize,
    pub rho: f64,
    pub trials: usize,
    pub mean_sum_rate_bits: f64,
    pub std_sum_rate_bits: f64,
    pub mean_channel_capacity_bits: f64,
    pub chain_scalars: usize,
    pub seed: u64,
}

pub const CSV_HEADER: [&str; 11] = [
    "profile",
    "algorithm",
    "np",
    "n_total",
    "rho",
    "trials",
    "mean_sum_rate_bits",
    "std_sum_rate_bits",
    "mean_channel_capacity_bits",
    "chain_scalars",
    "seed",
];

/// Fixed-point decimal with at least 10 fractional digits and at least 9
/// significant digits.
fn format_decimal(v: f64) -> String {
    let decimals = if v == 0.0 || !v.is_finite() {
        10
    } else {
        let magnitude = v.abs().log10().floor() as i32;
        (8 - magnitude).clamp(10, 40) as usize
    };
    format!("{v:.decimals$}")
}

impl SweepRow {
    fn record(&self) -> [String; 11] {
        let f = format_decimal;
        [
            self.profile.to_string(),
            self.algorithm.to_string(),
            self.np.to_string(),
            self.n_total.to_string(),
            f(self.rho),
            self.trials.to_string(),
            f(self.mean_sum_rate_bits),
            f(self.std_sum_rate_bits),
            f(self.mean_channel_capacity_bits),
            self.chain_scalars.to_string(),
            self.seed.to_string(),
        ]
    }
}

/// Per-trial outcome: channel capacity plus `(sum rate, chain scalars)`
/// for each (algorithm, np) cell in row order.
struct TrialCells {
    channel_capacity: f64,
    cells: Vec<(f64, usize)>,
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Run every (profile, algorithm, value) cell of the sweep, averaging over
/// trials. Rows are ordered by profile, algorithm, then value.
pub fn run_sweep(spec: &SweepSpec, base: &ScenarioConfig) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut profiles = spec.panel_profiles.clone();
    profiles.sort_unstable();
    profiles.dedup();
    let mut algorithms = spec.algorithms.clone();
    algorithms.sort_by_key(|a| *a as u8);
    algorithms.dedup();

    let mut rows = Vec::new();
    for profile in profiles {
        let cfg = ScenarioConfig {
            panel_side_m: profile.side_m(),
            snr_rho: spec.rho,
            seed: spec.seed,
            ..base.clone()
        };
        let scenario = channel::build_scenario(&cfg, profile.antennas_per_panel())?;
        let panels = scenario.num_panels();
        let nps = spec.np_values(profile, panels)?;
        let combos: Vec<(Algorithm, usize)> =
            algorithms.iter().flat_map(|&a| nps.iter().map(move |&np| (a, np))).collect();

        let per_trial = (0..spec.trials as u64)
            .into_par_iter()
            .map(|t| -> Result<TrialCells> {
                let chan = trial_channel(&scenario, &cfg, t)?;
                let mut channel_capacity = None;
                let mut cells = Vec::with_capacity(combos.len());
                for &(alg, np) in &combos {
                    let r = chain::run(&chan.blocks, cfg.snr_rho, np, alg, ExecutionMode::Decentralized, spec.passes)?;
                    channel_capacity.get_or_insert(r.report.channel_capacity_bits);
                    cells.push((r.report.sum_rate_bits, r.traffic.chain_complex_scalars));
                }
                Ok(TrialCells { channel_capacity: channel_capacity.unwrap_or(0.0), cells })
            })
            .collect::<Result<Vec<_>>>()?;

        let (mean_cap, _) = mean_std(per_trial.iter().map(|t| t.channel_capacity));
        for (c, &(algorithm, np)) in combos.iter().enumerate() {
            let (mean, std) = mean_std(per_trial.iter().map(|t| t.cells[c].0));
            rows.push(SweepRow {
                profile,
                algorithm,
                np,
                n_total: np * panels,
                rho: spec.rho,
                trials: spec.trials,
                mean_sum_rate_bits: mean,
                std_sum_rate_bits: std,
                mean_channel_capacity_bits: mean_cap,
                chain_scalars: per_trial[0].cells[c].1,
                seed: spec.seed,
            });
        }
    }
    Ok(rows)
}

pub fn write_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    write_csv(rows, std::io::BufWriter::new(file))
}
