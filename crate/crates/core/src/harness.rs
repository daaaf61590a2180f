//! Scenario configuration, Monte Carlo trials, parameter sweeps, and result
//! emission.
//!
//! Everything here runs in `f64`; the numeric layers below are generic.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anm::{assemble_problem, recover_effective_channel, AnmMode};
use crate::beamtrain::{
    beam_training_efficiency, capture_la, capture_nla, make_codebook, ris_pattern, ArrayDims, CaptureMode,
    FrameCapture, PilotConfig,
};
use crate::channel::{
    build_channels, effective_channel, los_angles, sample_br_paths, sample_ru_paths, ChannelModelParams, ChannelPair,
    Geometry, PathSet,
};
use crate::error::{dim_err, Error, Result};
use crate::scalar::Real;
use crate::sdpsolver::{solve_anm_denoise, AdmmSettings, AdmmStats};
use crate::tensorops::CMatrix;

/// Average link SNR the channel gains are calibrated to, dB.
pub const TARGET_MEAN_SNR_DB: f64 = -5.63;

/// Bootstrap resamples behind every confidence interval.
pub const BOOTSTRAP_RESAMPLES: usize = 2000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PilotSettings {
    pub d_samples: usize,
    pub p_tx_mw: f64,
    /// Noise amplitude, `sqrt(mW)`.
    pub sigma: f64,
}

impl Default for PilotSettings {
    fn default() -> Self {
        Self { d_samples: 100, p_tx_mw: 1000.0, sigma: 1e-5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub bs: [f64; 2],
    pub ris: [f64; 2],
    pub ue_center: [f64; 2],
    pub ue_radius: f64,
    /// When set, the UE sits at exactly this RIS distance along the
    /// RIS-to-disc-center bearing instead of being drawn from the disc.
    pub ue_distance: Option<f64>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { bs: [0.0, 0.0], ris: [50.0, 40.0], ue_center: [80.0, 0.0], ue_radius: 10.0, ue_distance: None }
    }
}

/// Training symbols per mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymbolBudget {
    #[serde(rename = "1d")]
    pub one_d: usize,
    #[serde(rename = "2d")]
    pub two_d: usize,
    #[serde(rename = "3d")]
    pub three_d: usize,
}

impl Default for SymbolBudget {
    fn default() -> Self {
        Self { one_d: 32, two_d: 32, three_d: 16 }
    }
}

impl SymbolBudget {
    pub fn get(&self, mode: AnmMode) -> usize {
        match mode {
            AnmMode::OneDMmv => self.one_d,
            AnmMode::TwoDMmv => self.two_d,
            AnmMode::ThreeDSmv => self.three_d,
        }
    }

    pub fn set(&mut self, mode: AnmMode, symbols: usize) {
        match mode {
            AnmMode::OneDMmv => self.one_d = symbols,
            AnmMode::TwoDMmv => self.two_d = symbols,
            AnmMode::ThreeDSmv => self.three_d = symbols,
        }
    }
}

/// Full scenario description, loadable from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dims: ArrayDims,
    pub pilot: PilotSettings,
    pub geometry: GeometryConfig,
    pub channel: ChannelModelParams,
    pub trials: usize,
    pub seed: u64,
    pub modes: Vec<AnmMode>,
    pub symbols: SymbolBudget,
    /// Pointing error added to the BS-to-RIS AoD in location-aware training.
    pub aod_error_deg: f64,
    pub solver: AdmmSettings,
    pub sweep: Option<SweepSpec>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dims: ArrayDims::default(),
            pilot: PilotSettings::default(),
            geometry: GeometryConfig::default(),
            channel: ChannelModelParams::default(),
            trials: 300,
            seed: 1,
            modes: AnmMode::ALL.to_vec(),
            symbols: SymbolBudget::default(),
            aod_error_deg: 0.0,
            solver: AdmmSettings::default(),
            sweep: None,
        }
    }
}

impl SimConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: SimConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        self.pilot_config().validate()?;
        self.channel.validate()?;
        self.solver.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidConfig("no ANM modes selected".into()));
        }
        let g = &self.geometry;
        let finite = |p: [f64; 2]| p.iter().all(|x| x.is_finite());
        if !(finite(g.bs) && finite(g.ris) && finite(g.ue_center)) {
            return Err(Error::InvalidConfig("positions must be finite".into()));
        }
        if !(g.ue_radius >= 0.0) || !g.ue_radius.is_finite() {
            return Err(Error::InvalidConfig("UE disc radius must be finite and non-negative".into()));
        }
        if let Some(d) = g.ue_distance {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::InvalidDistance(d));
            }
        }
        if !self.aod_error_deg.is_finite() {
            return Err(Error::InvalidConfig("AoD error must be finite".into()));
        }
        for &m in &self.modes {
            self.frames(m)?;
        }
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        Ok(())
    }

    pub fn pilot_config(&self) -> PilotConfig<f64> {
        PilotConfig { d_samples: self.pilot.d_samples, p_tx: self.pilot.p_tx_mw, sigma: self.pilot.sigma }
    }

    /// Training frames `B` of a mode under the configured symbol budget.
    pub fn frames(&self, mode: AnmMode) -> Result<usize> {
        mode.frames_for_symbols(self.symbols.get(mode), &self.dims)
    }
}

/// One realization of positions and channels.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub geometry: Geometry<f64>,
    pub br: PathSet<f64>,
    pub ru: PathSet<f64>,
    pub channels: ChannelPair<f64>,
    pub h_eff: CMatrix<f64>,
}

/// UE position: uniform on the disc, or at a fixed range when requested.
pub fn sample_ue_position<R: Rng + ?Sized>(g: &GeometryConfig, rng: &mut R) -> Result<[f64; 2]> {
    if let Some(d) = g.ue_distance {
        let dx = g.ue_center[0] - g.ris[0];
        let dy = g.ue_center[1] - g.ris[1];
        let len = dx.hypot(dy);
        if len == 0.0 {
            return Err(Error::DegenerateGeometry("UE disc is centered on the RIS".into()));
        }
        return Ok([g.ris[0] + d * dx / len, g.ris[1] + d * dy / len]);
    }
    let r = g.ue_radius * rng.random::<f64>().sqrt();
    let phi = rng.random::<f64>() * std::f64::consts::TAU;
    Ok([g.ue_center[0] + r * phi.cos(), g.ue_center[1] + r * phi.sin()])
}

pub fn sample_scenario<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<Scenario> {
    let ue = sample_ue_position(&cfg.geometry, rng)?;
    let geometry = Geometry::new(cfg.geometry.bs, cfg.geometry.ris, ue)?;
    let br = sample_br_paths(&geometry, &cfg.channel, rng)?;
    let ru = sample_ru_paths(&geometry, &cfg.channel, rng)?;
    let d = &cfg.dims;
    let channels = build_channels(&br, &ru, d.m_b, d.m_r, d.m_u)?;
    let h_eff = effective_channel(&channels)?;
    Ok(Scenario { geometry, br, ru, channels, h_eff })
}

/// Runs the beam-training protocol of `mode` on a scenario.
pub fn capture_for_mode<R: Rng + ?Sized>(
    cfg: &SimConfig,
    scen: &Scenario,
    mode: AnmMode,
    rng: &mut R,
) -> Result<FrameCapture<f64>> {
    let b = cfg.frames(mode)?;
    let cb = make_codebook::<f64>(cfg.dims.m_r, b, mode.adapted_codebook())?;
    let pilot = cfg.pilot_config();
    match mode.capture_mode() {
        CaptureMode::Nla => capture_nla(&scen.channels, &cb, &pilot, &cfg.dims, rng),
        CaptureMode::La => {
            let theta = los_angles(&scen.geometry)?.theta_br + cfg.aod_error_deg;
            capture_la(&scen.channels, &cb, &pilot, theta, &cfg.dims, rng)
        }
    }
}

/// Per-trial metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub mode: AnmMode,
    /// Absent when the trial stopped after beam training.
    pub nmse: Option<f64>,
    #[serde(with = "lenient_f64")]
    pub ebt_db: f64,
    #[serde(with = "lenient_f64")]
    pub snr_db: f64,
    pub ue_pos: [f64; 2],
    pub l_ru: usize,
    pub los: bool,
    pub stats: Option<AdmmStats>,
}

/// Full pipeline for one seed: sample, train, estimate, score.
pub fn run_trial(cfg: &SimConfig, mode: AnmMode, seed: u64) -> Result<TrialResult> {
    run_trial_opts(cfg, mode, seed, true)
}

/// [`run_trial`], optionally stopping after beam training.
pub fn run_trial_opts(cfg: &SimConfig, mode: AnmMode, seed: u64, estimate: bool) -> Result<TrialResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scen = sample_scenario(cfg, &mut rng)?;
    let fc = capture_for_mode(cfg, &scen, mode, &mut rng)?;
    let ebt_db = beam_training_efficiency(&fc, &scen.channels)?;
    let snr = snr_db(&scen.br, &scen.ru, cfg);
    let (nmse_val, stats) = if estimate {
        let problem = assemble_problem(&fc, mode)?;
        let sol = solve_anm_denoise(&problem, &cfg.solver)?;
        let h_hat = recover_effective_channel(&sol, mode, &fc.pilot, &cfg.dims)?;
        (Some(nmse(&h_hat, &scen.h_eff)?), Some(sol.stats))
    } else {
        (None, None)
    };
    Ok(TrialResult {
        seed,
        mode,
        nmse: nmse_val,
        ebt_db,
        snr_db: snr,
        ue_pos: scen.geometry.ue_pos,
        l_ru: scen.ru.len(),
        los: scen.ru.los,
        stats,
    })
}

/// `||h_hat - h||_F^2 / ||h||_F^2`.
pub fn nmse<T: Real>(h_hat: &CMatrix<T>, h: &CMatrix<T>) -> Result<T> {
    if h_hat.shape() != h.shape() {
        return Err(dim_err(format!("estimate is {:?} but the channel is {:?}", h_hat.shape(), h.shape())));
    }
    let den = h.norm_squared();
    if den == T::zero() {
        return Err(Error::DegenerateInput("true channel is zero".into()));
    }
    Ok((h_hat - h).norm_squared() / den)
}

/// Link SNR of a scenario under the configured pilot power and noise.
pub fn snr_db(br: &PathSet<f64>, ru: &PathSet<f64>, cfg: &SimConfig) -> f64 {
    crate::channel::snr_db(br, ru, cfg.pilot.p_tx_mw, cfg.pilot.sigma)
}

/// Calibration offset that brings the trial-average SNR of `cfg` to
/// [`TARGET_MEAN_SNR_DB`].
///
/// The offset enters both hops, so it moves the SNR by twice its value.
pub fn calibrate_gain_db(cfg: &SimConfig, trials: usize, seed0: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidConfig("calibration needs at least one trial".into()));
    }
    let mut base = cfg.clone();
    base.channel.gain_cal_db = 0.0;
    let snrs = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed0.wrapping_add(t as u64));
            let scen = sample_scenario(&base, &mut rng)?;
            Ok(snr_db(&scen.br, &scen.ru, &base))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = snrs.iter().sum::<f64>() / trials as f64;
    Ok((mean - TARGET_MEAN_SNR_DB) / 2.0)
}

/// Swept quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    TxPowerDbm,
    NumSymbols,
    MR,
    RisUeDistanceM,
    AodErrorDeg,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::TxPowerDbm => "tx_power_dbm",
            SweepVariable::NumSymbols => "num_symbols",
            SweepVariable::MR => "m_r",
            SweepVariable::RisUeDistanceM => "ris_ue_distance_m",
            SweepVariable::AodErrorDeg => "aod_error_deg",
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Nmse,
    EbtDb,
    SnrDb,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Nmse => "nmse",
            Metric::EbtDb => "ebt_db",
            Metric::SnrDb => "snr_db",
        }
    }

    fn of(self, r: &TrialResult) -> f64 {
        match self {
            Metric::Nmse => r.nmse.unwrap_or(f64::NAN),
            Metric::EbtDb => r.ebt_db,
            Metric::SnrDb => r.snr_db,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nmse" => Ok(Metric::Nmse),
            "ebt_db" => Ok(Metric::EbtDb),
            "snr_db" => Ok(Metric::SnrDb),
            other => Err(Error::InvalidConfig(format!("unknown metric '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
    /// Trials per point; the config's `trials` when absent.
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
}

fn default_metrics() -> Vec<Metric> {
    vec![Metric::Nmse, Metric::EbtDb]
}

impl SweepSpec {
    pub fn new(variable: SweepVariable, grid: Vec<f64>) -> Self {
        Self { variable, grid, trials: None, metrics: default_metrics() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidConfig("sweep grid is empty".into()));
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("sweep grid has non-finite values".into()));
        }
        let up = self.grid.windows(2).all(|w| w[1] > w[0]);
        let down = self.grid.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::InvalidConfig("sweep grid must be strictly monotone".into()));
        }
        if self.trials == Some(0) {
            return Err(Error::InvalidConfig("trials per point must be at least 1".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::InvalidConfig("no sweep metrics selected".into()));
        }
        if matches!(self.variable, SweepVariable::NumSymbols | SweepVariable::MR)
            && self.grid.iter().any(|v| *v < 1.0 || v.fract() != 0.0)
        {
            return Err(Error::InvalidConfig(format!("{} grid must hold positive integers", self.variable)));
        }
        Ok(())
    }
}

/// Configuration at one sweep point.
///
/// Sweeping `m_r` moves the 2D budget with it, since the full codebook
/// needs exactly `M_R` frames.
pub fn apply_sweep_point(cfg: &SimConfig, var: SweepVariable, value: f64) -> Result<SimConfig> {
    let mut c = cfg.clone();
    match var {
        SweepVariable::TxPowerDbm => c.pilot.p_tx_mw = 10f64.powf(value / 10.0),
        SweepVariable::NumSymbols => {
            for m in AnmMode::ALL {
                c.symbols.set(m, value as usize);
            }
        }
        SweepVariable::MR => {
            c.dims.m_r = value as usize;
            c.symbols.two_d = c.dims.m_r * c.dims.p_u();
        }
        SweepVariable::RisUeDistanceM => c.geometry.ue_distance = Some(value),
        SweepVariable::AodErrorDeg => c.aod_error_deg = value,
    }
    c.dims.validate()?;
    c.pilot_config().validate()?;
    Ok(c)
}

/// Mean with a percentile-bootstrap 95% interval and the median.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub median: f64,
}

pub fn summarize(values: &[f64], bootstrap_seed: u64) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary { mean: f64::NAN, ci_lo: f64::NAN, ci_hi: f64::NAN, median: f64::NAN };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let median = median(values);
    if !mean.is_finite() {
        return Summary { mean, ci_lo: mean, ci_hi: mean, median };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(bootstrap_seed);
    let mut means: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(|a, b| a.total_cmp(b));
    let at = |q: f64| means[((q * (BOOTSTRAP_RESAMPLES - 1) as f64).round() as usize).min(BOOTSTRAP_RESAMPLES - 1)];
    Summary { mean, ci_lo: at(0.025), ci_hi: at(0.975), median }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// One emitted row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub variable: String,
    pub value: f64,
    pub mode: AnmMode,
    pub metric: Metric,
    #[serde(with = "lenient_f64")]
    pub mean: f64,
    #[serde(with = "lenient_f64")]
    pub ci_lo: f64,
    #[serde(with = "lenient_f64")]
    pub ci_hi: f64,
    pub trials: usize,
    pub seed0: u64,
}

/// A point a mode cannot run, such as a symbol budget it cannot split.
#[derive(Clone, Debug, PartialEq)]
pub struct SkippedPoint {
    pub value: f64,
    pub mode: AnmMode,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepTable {
    pub records: Vec<SweepRecord>,
    pub skipped: Vec<SkippedPoint>,
}

impl SweepTable {
    pub fn find(&self, value: f64, mode: AnmMode, metric: Metric) -> Option<&SweepRecord> {
        self.records.iter().find(|r| r.value == value && r.mode == mode && r.metric == metric)
    }

    /// Records of one mode and metric in grid order.
    pub fn series(&self, mode: AnmMode, metric: Metric) -> Vec<&SweepRecord> {
        self.records.iter().filter(|r| r.mode == mode && r.metric == metric).collect()
    }
}

/// Runs `trials` seeds `seed0 + t` of one configuration in parallel,
/// returned in seed order.
pub fn run_point(
    cfg: &SimConfig,
    mode: AnmMode,
    trials: usize,
    seed0: u64,
    estimate: bool,
) -> Result<Vec<TrialResult>> {
    (0..trials).into_par_iter().map(|t| run_trial_opts(cfg, mode, seed0.wrapping_add(t as u64), estimate)).collect()
}

/// Monte Carlo over every grid point and mode.
pub fn run_sweep(cfg: &SimConfig, spec: &SweepSpec, modes: &[AnmMode]) -> Result<SweepTable> {
    spec.validate()?;
    let trials = spec.trials.unwrap_or(cfg.trials);
    let estimate = spec.metrics.contains(&Metric::Nmse);
    let mut table = SweepTable::default();
    for (pi, &value) in spec.grid.iter().enumerate() {
        let point = apply_sweep_point(cfg, spec.variable, value)?;
        for (mi, &mode) in modes.iter().enumerate() {
            if let Err(e) = point.frames(mode) {
                table.skipped.push(SkippedPoint { value, mode, reason: e.to_string() });
                continue;
            }
            let results = run_point(&point, mode, trials, cfg.seed, estimate)?;
            for (ki, &metric) in spec.metrics.iter().enumerate() {
                let vals: Vec<f64> = results.iter().map(|r| metric.of(r)).collect();
                let boot_seed = cfg.seed ^ (((pi as u64) << 32) | ((mi as u64) << 16) | ki as u64);
                let s = summarize(&vals, boot_seed);
                table.records.push(SweepRecord {
                    variable: spec.variable.as_str().to_string(),
                    value,
                    mode,
                    metric,
                    mean: s.mean,
                    ci_lo: s.ci_lo,
                    ci_hi: s.ci_hi,
                    trials,
                    seed0: cfg.seed,
                });
            }
        }
    }
    Ok(table)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidConfig(format!("unknown output format '{other}'"))),
        }
    }
}

pub const CSV_HEADER: [&str; 9] = ["variable", "value", "mode", "metric", "mean", "ci_lo", "ci_hi", "trials", "seed0"];

pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.variable.clone(),
            fmt_f64(r.value),
            r.mode.to_string(),
            r.metric.to_string(),
            fmt_f64(r.mean),
            fmt_f64(r.ci_lo),
            fmt_f64(r.ci_hi),
            r.trials.to_string(),
            r.seed0.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(records: &[SweepRecord], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, records)?;
    writeln!(out)?;
    Ok(())
}

pub fn read_json_records(s: &str) -> Result<Vec<SweepRecord>> {
    Ok(serde_json::from_str(s)?)
}

/// Writes the table to `path`.
pub fn emit_results(table: &SweepTable, path: &Path, format: OutputFormat) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        OutputFormat::Csv => write_csv(&table.records, file),
        OutputFormat::Json => write_json(&table.records, file),
    }
}

/// Shortest round-trip decimal; non-finite values as `inf`, `-inf`, `NaN`.
fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        x.to_string()
    }
}

/// JSON numbers for finite values, strings for the rest.
mod lenient_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&x.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// One sample of the reflect pattern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternSample {
    pub beam: usize,
    pub phi_bar_deg: f64,
    pub gain: f64,
}

/// Reflect pattern of every codebook beam toward `phi_bar` on a uniform
/// grid over `(0, 180)`, with the incidence fixed at `theta_deg`.
pub fn reflect_pattern_grid(
    m_r: usize,
    b: usize,
    adapted: bool,
    theta_deg: f64,
    step_deg: f64,
) -> Result<Vec<PatternSample>> {
    if !(step_deg > 0.0 && step_deg < 180.0) {
        return Err(Error::InvalidConfig(format!("pattern step {step_deg} is outside (0, 180)")));
    }
    let cb = make_codebook::<f64>(m_r, b, adapted)?;
    let mut out = Vec::new();
    let mut k = 1usize;
    while (k as f64) * step_deg < 180.0 {
        let phi = k as f64 * step_deg;
        for beam in 0..cb.frames() {
            let w = cb.w.column(beam).into_owned();
            out.push(PatternSample { beam, phi_bar_deg: phi, gain: ris_pattern(theta_deg, phi, &w) });
        }
        k += 1;
    }
    Ok(out)
}

pub fn write_pattern_csv<W: Write>(samples: &[PatternSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["beam", "phi_bar_deg", "gain"])?;
    for s in samples {
        w.write_record([s.beam.to_string(), fmt_f64(s.phi_bar_deg), fmt_f64(s.gain)])?;
    }
    w.flush()?;
    Ok(())
}

/// Sizes the global worker pool. Only the first call takes effect.
pub fn configure_threads(threads: Option<usize>) -> Result<()> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(Error::InvalidConfig("thread count must be at least 1".into()));
    }
    // A pool that is already running keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Outcome of one self-test check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfTestCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Quick invariant suite over the numeric layers.
pub fn selftest() -> Vec<SelfTestCheck> {
    crate::selfcheck::run_all()
}
