//! Seeded Monte Carlo sweeps, JSON configuration and CSV output.
//!
//! Every trial owns a seed derived from the run seed and the trial index.
//! The scene of a trial is drawn from that seed alone (plus the swept value
//! when it changes the scene), so any row can be replayed from its stored
//! panel state and trial seed.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::access::{
    rsma_power_split, AccessError, CommonAccounting, LinkBudget, NomaConfig, PowerSplit, PrivateAllocation,
    RsmaConfig,
};
use crate::channel::{ChannelModel, LedParams, PanelState, PdParams, PsiMode};
use crate::geometry::{build_panel, GeometryError, Layout, Scene, WallSpec};
use crate::optimizer::{
    grid_oracle, sca_optimize, Metric, OptimizerError, PanelObjective, ProblemSpec, ScaOutcome, ScaParams, Scheme,
    SearchSpace, ETA_C_FLOOR,
};
use crate::photonics::LcCell;
use crate::power::PowerModel;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Access(#[from] AccessError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error("row does not belong to this scenario: {0}")]
    Replay(String),
}

type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioId {
    #[default]
    PowerSweep,
    Wavelength,
    UserCount,
    AllocStrategies,
    ElementSweep,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 5] = [
        ScenarioId::PowerSweep,
        ScenarioId::Wavelength,
        ScenarioId::UserCount,
        ScenarioId::AllocStrategies,
        ScenarioId::ElementSweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::PowerSweep => "power_sweep",
            ScenarioId::Wavelength => "wavelength",
            ScenarioId::UserCount => "user_count",
            ScenarioId::AllocStrategies => "alloc_strategies",
            ScenarioId::ElementSweep => "element_sweep",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| ExperimentError::UnknownScenario(s.to_string()))
    }
}

/// Run settings and every model parameter, with the defaults of the
/// reference setup. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioId,
    pub trials: usize,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,

    // LED and photodiode
    pub phi_half_deg: f64,
    pub a_pd_cm2: f64,
    pub t_filter: f64,
    pub f_concentrator: f64,
    pub fov_deg: f64,
    pub rho_ris: f64,
    /// Listed for completeness; no wall-reflection path is modelled.
    pub rho_wall: f64,

    // LC cell
    pub eta_e: f64,
    pub eta_a: f64,
    pub eta_o: f64,
    pub v_th: f64,
    pub v_0: f64,
    pub d_mm: f64,
    pub r_eff_pm_per_v: f64,
    pub wavelength_nm: f64,

    // link budget
    pub q: f64,
    pub b_mhz: f64,
    pub n_o: f64,
    pub r_pd: f64,
    pub p_w: f64,

    // optimizer
    pub v: usize,
    pub g: usize,
    pub t: usize,
    pub a_tilde: f64,

    // access
    pub u: usize,
    pub mu_noma: f64,
    pub mu_rsma: f64,
    pub p_tol_dbm: f64,
    pub private_allocation: PrivateAllocation,
    pub common_accounting: CommonAccounting,

    // power draws
    pub p_adc_mw: f64,
    pub p_dac_mw: f64,
    pub p_driver_mw: f64,
    pub p_filter_mw: f64,
    pub p_m_mw: f64,
    pub p_tia_mw: f64,
    pub p_r_circuit_mw: f64,
    pub p_t_circuit_mw: f64,
    pub p_lc_mw: f64,
    pub p_pa_mw: f64,

    // layout
    pub panel_rows: usize,
    pub panel_cols: usize,
    pub element_side_m: f64,
    pub laplace_scale_deg: f64,
    pub los_enabled: bool,
    pub blockers_per_room: usize,
    pub psi_mode: PsiMode,

    // sweeps
    pub power_sweep_w: Vec<f64>,
    pub wavelength_sweep_nm: Vec<f64>,
    pub user_sweep: Vec<usize>,
    pub strategy_sweep: Vec<PrivateAllocation>,
    pub element_sweep: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioId::PowerSweep,
            trials: 100,
            seed: 0,
            out_dir: None,
            phi_half_deg: 70.0,
            a_pd_cm2: 1.0,
            t_filter: 1.0,
            f_concentrator: 1.5,
            fov_deg: 85.0,
            rho_ris: 0.95,
            rho_wall: 0.8,
            eta_e: 1.7,
            eta_a: 1.0,
            eta_o: 1.5,
            v_th: 1.34,
            v_0: 1.0,
            d_mm: 0.75,
            r_eff_pm_per_v: 12.0,
            wavelength_nm: 510.0,
            q: 3.0,
            b_mhz: 200.0,
            n_o: 1e-21,
            r_pd: 0.53,
            p_w: 3.0,
            v: 3,
            g: 5,
            t: 4000,
            a_tilde: 2.0,
            u: 4,
            mu_noma: 0.6,
            mu_rsma: 0.6,
            p_tol_dbm: 10.0,
            private_allocation: PrivateAllocation::Equal,
            common_accounting: CommonAccounting::default(),
            p_adc_mw: 95.0,
            p_dac_mw: 175.0,
            p_driver_mw: 2758.0,
            p_filter_mw: 2.5,
            p_m_mw: 100.0,
            p_tia_mw: 2500.0,
            p_r_circuit_mw: 1.9,
            p_t_circuit_mw: 3250.0,
            p_lc_mw: 320.0,
            p_pa_mw: 280.0,
            panel_rows: 5,
            panel_cols: 10,
            element_side_m: 0.1,
            laplace_scale_deg: 15.0,
            los_enabled: false,
            blockers_per_room: 0,
            psi_mode: PsiMode::ElementWise,
            power_sweep_w: vec![1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0],
            wavelength_sweep_nm: vec![510.0, 670.0],
            user_sweep: vec![2, 4, 6, 8],
            strategy_sweep: vec![
                PrivateAllocation::Equal,
                PrivateAllocation::NomaAlike,
                PrivateAllocation::Random,
            ],
            element_sweep: vec![10, 20, 30, 40, 50, 60, 70, 80],
        }
    }
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ExperimentError {
    ExperimentError::Invalid {
        key,
        reason: reason.into(),
    }
}

fn positive(key: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must be positive, got {v}")))
    }
}

fn non_negative(key: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must be non-negative, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials", "at least one trial is required"));
        }
        for (key, v) in [
            ("a_pd_cm2", self.a_pd_cm2),
            ("t_filter", self.t_filter),
            ("f_concentrator", self.f_concentrator),
            ("eta_e", self.eta_e),
            ("eta_a", self.eta_a),
            ("eta_o", self.eta_o),
            ("v_0", self.v_0),
            ("d_mm", self.d_mm),
            ("r_eff_pm_per_v", self.r_eff_pm_per_v),
            ("wavelength_nm", self.wavelength_nm),
            ("q", self.q),
            ("b_mhz", self.b_mhz),
            ("n_o", self.n_o),
            ("r_pd", self.r_pd),
            ("p_w", self.p_w),
            ("a_tilde", self.a_tilde),
            ("element_side_m", self.element_side_m),
            ("laplace_scale_deg", self.laplace_scale_deg),
        ] {
            positive(key, v)?;
        }
        for (key, v) in [
            ("rho_ris", self.rho_ris),
            ("rho_wall", self.rho_wall),
            ("v_th", self.v_th),
            ("p_adc_mw", self.p_adc_mw),
            ("p_dac_mw", self.p_dac_mw),
            ("p_driver_mw", self.p_driver_mw),
            ("p_filter_mw", self.p_filter_mw),
            ("p_m_mw", self.p_m_mw),
            ("p_tia_mw", self.p_tia_mw),
            ("p_r_circuit_mw", self.p_r_circuit_mw),
            ("p_t_circuit_mw", self.p_t_circuit_mw),
            ("p_lc_mw", self.p_lc_mw),
            ("p_pa_mw", self.p_pa_mw),
        ] {
            non_negative(key, v)?;
        }
        if self.rho_ris > 1.0 {
            return Err(invalid("rho_ris", "reflectivity cannot exceed 1"));
        }
        if !(self.phi_half_deg > 0.0 && self.phi_half_deg < 90.0) {
            return Err(invalid("phi_half_deg", "must lie in (0, 90)"));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 90.0) {
            return Err(invalid("fov_deg", "must lie in (0, 90)"));
        }
        if self.eta_e <= self.eta_o + ETA_C_FLOOR - 1.5 {
            return Err(invalid("eta_e", "must exceed eta_o"));
        }
        if self.v != 3 {
            return Err(invalid("v", "the panel has exactly three decision variables"));
        }
        if self.g == 0 {
            return Err(invalid("g", "at least one search agent is required"));
        }
        if self.u == 0 {
            return Err(invalid("u", "at least one user is required"));
        }
        if !(self.mu_noma > 0.5 && self.mu_noma <= 1.0) {
            return Err(invalid("mu_noma", format!("must lie in (0.5, 1], got {}", self.mu_noma)));
        }
        if !(self.mu_rsma > 0.0 && self.mu_rsma < 1.0) {
            return Err(invalid("mu_rsma", format!("must lie in (0, 1), got {}", self.mu_rsma)));
        }
        if !self.p_tol_dbm.is_finite() {
            return Err(invalid("p_tol_dbm", "must be finite"));
        }
        if self.panel_rows == 0 || self.panel_cols == 0 {
            return Err(invalid("panel_rows", "panel needs at least one row and column"));
        }
        build_panel(self.panel_rows, self.panel_cols, self.element_side_m, &WallSpec::default())
            .map_err(|e| invalid("panel_cols", e.to_string()))?;
        if self.power_sweep_w.is_empty() || self.power_sweep_w.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(invalid("power_sweep_w", "needs positive powers"));
        }
        if self.wavelength_sweep_nm.is_empty() || self.wavelength_sweep_nm.iter().any(|w| !(*w > 0.0)) {
            return Err(invalid("wavelength_sweep_nm", "needs positive wavelengths"));
        }
        if self.user_sweep.is_empty() || self.user_sweep.contains(&0) {
            return Err(invalid("user_sweep", "needs positive user counts"));
        }
        if self.strategy_sweep.is_empty() {
            return Err(invalid("strategy_sweep", "needs at least one strategy"));
        }
        if self.element_sweep.is_empty() {
            return Err(invalid("element_sweep", "needs at least one element count"));
        }
        for &n in &self.element_sweep {
            element_panel(n, self.panel_rows, self.element_side_m).map_err(|e| invalid("element_sweep", e))?;
        }
        Ok(())
    }

    pub fn layout(&self) -> Result<Layout> {
        let mut layout = Layout {
            panel: build_panel(self.panel_rows, self.panel_cols, self.element_side_m, &WallSpec::default())?,
            los_enabled: self.los_enabled,
            blockers_per_room: self.blockers_per_room,
            ..Layout::default()
        };
        if let crate::geometry::AngleLaw::Laplace { scale, .. } = &mut layout.orientation.azimuth {
            *scale = self.laplace_scale_deg.to_radians();
        }
        Ok(layout)
    }

    pub fn channel_model(&self) -> ChannelModel {
        ChannelModel {
            led: LedParams {
                phi_half: self.phi_half_deg.to_radians(),
            },
            pd: PdParams {
                area: self.a_pd_cm2 * 1e-4,
                concentrator_index: self.f_concentrator,
                fov: self.fov_deg.to_radians(),
                filter_gain: self.t_filter,
            },
            cell: LcCell {
                eta_o: self.eta_o,
                eta_e: self.eta_e,
                eta_a: self.eta_a,
                v_th: self.v_th,
                v_0: self.v_0,
                depth: self.d_mm * 1e-3,
                r_eff: self.r_eff_pm_per_v * 1e-12,
            },
            rho_ris: self.rho_ris,
            wavelength: self.wavelength_nm * 1e-9,
            psi_mode: self.psi_mode,
            amp_angle: 0.0,
        }
    }

    pub fn budget(&self) -> LinkBudget {
        LinkBudget {
            bandwidth: self.b_mhz * 1e6,
            noise_psd: self.n_o,
            responsivity: self.r_pd,
            optical_power: self.p_w,
            conversion_ratio: self.q,
            dc_bias: 0.0,
        }
    }

    pub fn noma(&self) -> NomaConfig {
        NomaConfig { mu: self.mu_noma }
    }

    pub fn rsma(&self) -> RsmaConfig {
        RsmaConfig {
            mu: self.mu_rsma,
            p_tol: 10f64.powf(self.p_tol_dbm / 10.0) * 1e-3,
            strategy: self.private_allocation,
            noma_alike_mu: self.mu_noma,
            accounting: self.common_accounting,
        }
    }

    pub fn power_model(&self) -> PowerModel {
        PowerModel {
            tx_circuit: self.p_t_circuit_mw / 1000.0,
            driver: self.p_driver_mw / 1000.0,
            power_amp: self.p_pa_mw / 1000.0,
            filter: self.p_filter_mw / 1000.0,
            dac: self.p_dac_mw / 1000.0,
            mirror: self.p_m_mw / 1000.0,
            lc: self.p_lc_mw / 1000.0,
            rx_circuit: self.p_r_circuit_mw / 1000.0,
            tia: self.p_tia_mw / 1000.0,
            adc: self.p_adc_mw / 1000.0,
            receivers: 1,
        }
    }

    pub fn search_space(&self) -> SearchSpace {
        let mut s = SearchSpace::panel();
        s.lower[2] = self.eta_o + (ETA_C_FLOOR - 1.5);
        s.upper[2] = self.eta_e;
        s
    }

    pub fn sca_params(&self, seed: u64) -> ScaParams {
        ScaParams {
            agents: self.g,
            iterations: self.t,
            a_tilde: self.a_tilde,
            seed,
        }
    }

    /// Swept values of the configured scenario, as written to the CSV.
    pub fn sweep(&self) -> Vec<f64> {
        match self.scenario {
            ScenarioId::PowerSweep | ScenarioId::AllocStrategies => self.power_sweep_w.clone(),
            ScenarioId::Wavelength => self.wavelength_sweep_nm.clone(),
            ScenarioId::UserCount => self.user_sweep.iter().map(|&u| u as f64).collect(),
            ScenarioId::ElementSweep => self.element_sweep.iter().map(|&n| n as f64).collect(),
        }
    }

    /// Series compared at every swept value.
    pub fn series(&self) -> Vec<Series> {
        match self.scenario {
            ScenarioId::AllocStrategies => self.strategy_sweep.iter().map(|&s| Series::Rsma(s)).collect(),
            _ => vec![Series::Rsma(self.private_allocation), Series::Noma],
        }
    }
}

/// Panel of `total` elements with `rows` rows, or why none exists.
pub fn element_panel(total: usize, rows: usize, side: f64) -> std::result::Result<crate::geometry::PanelLayout, String> {
    if total == 0 || !total.is_multiple_of(rows) {
        return Err(format!("{total} elements cannot fill {rows} rows"));
    }
    build_panel(rows, total / rows, side, &WallSpec::default()).map_err(|e| e.to_string())
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|source| ExperimentError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    ExperimentConfig::from_json(&text)
}

/// One compared curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Series {
    Noma,
    Rsma(PrivateAllocation),
}

impl Series {
    pub fn scheme(self) -> Scheme {
        match self {
            Series::Noma => Scheme::Noma,
            Series::Rsma(_) => Scheme::Rsma,
        }
    }

    pub fn label(self) -> String {
        match self {
            Series::Noma => "noma".to_string(),
            Series::Rsma(PrivateAllocation::Equal) => "rsma".to_string(),
            Series::Rsma(s) => format!("rsma_{}", s.label()),
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        match label {
            "noma" => Some(Series::Noma),
            "rsma" => Some(Series::Rsma(PrivateAllocation::Equal)),
            _ => {
                let s = label.strip_prefix("rsma_")?;
                [PrivateAllocation::Equal, PrivateAllocation::NomaAlike, PrivateAllocation::Random]
                    .into_iter()
                    .find(|a| a.label() == s)
                    .map(Series::Rsma)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub scheme: String,
    pub swept_value: f64,
    pub trial: usize,
    pub trial_seed: u64,
    pub omega: f64,
    pub gamma: f64,
    pub eta_c: f64,
    pub sum_rate: f64,
    pub total_power: f64,
    pub see: f64,
}

pub const RESULT_HEADER: [&str; 11] = [
    "scenario",
    "scheme",
    "swept_value",
    "trial",
    "trial_seed",
    "omega",
    "gamma",
    "eta_c",
    "sum_rate",
    "total_power",
    "see",
];

fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` in a run seeded with `seed`.
pub fn trial_seed(seed: u64, index: usize) -> u64 {
    mix(seed ^ mix(index as u64))
}

fn optimizer_seed(trial_seed: u64, series: usize, point: usize) -> u64 {
    mix(trial_seed ^ mix(((series as u64) << 32) | point as u64))
}

/// Everything one optimization needs, rebuilt identically for replay.
pub struct Problem {
    pub scene: Scene,
    pub objective: PanelObjective,
}

impl ExperimentConfig {
    /// Config with the swept parameter of this scenario set to `value`.
    fn at_point(&self, value: f64) -> ExperimentConfig {
        let mut c = self.clone();
        match self.scenario {
            ScenarioId::PowerSweep | ScenarioId::AllocStrategies => c.p_w = value,
            ScenarioId::Wavelength => c.wavelength_nm = value,
            ScenarioId::UserCount => c.u = value as usize,
            ScenarioId::ElementSweep => {}
        }
        c
    }

    fn layout_at(&self, value: f64) -> Result<Layout> {
        let mut layout = self.layout()?;
        if self.scenario == ScenarioId::ElementSweep {
            layout.panel = element_panel(value as usize, self.panel_rows, self.element_side_m)
                .map_err(|e| invalid("element_sweep", e))?;
        }
        Ok(layout)
    }

    /// Reconstructs the frozen problem of one (trial seed, series, swept
    /// value) cell.
    pub fn problem(&self, trial_seed: u64, series: Series, value: f64) -> Result<Problem> {
        let cfg = self.at_point(value);
        let layout = self.layout_at(value)?;
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let scene = layout.draw_scene(cfg.u, &mut rng)?;
        let budget = cfg.budget();
        let mut rsma = cfg.rsma();
        let split: Option<PowerSplit> = match series {
            Series::Noma => None,
            Series::Rsma(strategy) => {
                rsma.strategy = strategy;
                // separate stream so the draw does not depend on the scene
                let mut split_rng = ChaCha8Rng::seed_from_u64(trial_seed);
                split_rng.set_stream(1);
                Some(rsma_power_split(&budget, &rsma, cfg.u, &mut split_rng)?)
            }
        };
        let spec = ProblemSpec {
            scheme: series.scheme(),
            metric: Metric::SumRate,
            budget,
            noma: cfg.noma(),
            rsma,
            power: cfg.power_model(),
        };
        let objective = PanelObjective::new(&scene, &cfg.channel_model(), spec, split);
        Ok(Problem { scene, objective })
    }
}

fn make_row(cfg: &ExperimentConfig, series: Series, value: f64, trial: usize, seed: u64, x: &[f64], rate: f64, total: f64) -> ResultRow {
    ResultRow {
        scenario: cfg.scenario.to_string(),
        scheme: series.label(),
        swept_value: value,
        trial,
        trial_seed: seed,
        omega: x[0],
        gamma: x[1],
        eta_c: x[2],
        sum_rate: rate,
        total_power: total,
        see: rate / total,
    }
}

/// Runs the optimizer for one (trial, series, swept value) cell. Indices
/// refer to [`ExperimentConfig::series`] and [`ExperimentConfig::sweep`].
pub fn optimize_cell(cfg: &ExperimentConfig, trial: usize, series: usize, point: usize) -> Result<(Problem, ScaOutcome)> {
    let seed = trial_seed(cfg.seed, trial);
    let s = *cfg
        .series()
        .get(series)
        .ok_or_else(|| invalid("series", format!("index {series} out of range")))?;
    let value = *cfg
        .sweep()
        .get(point)
        .ok_or_else(|| invalid("sweep", format!("index {point} out of range")))?;
    let problem = cfg.problem(seed, s, value)?;
    let obj = &problem.objective;
    let out = sca_optimize(
        |x| obj.evaluate(x),
        &cfg.search_space(),
        &cfg.sca_params(optimizer_seed(seed, series, point)),
    )?;
    Ok((problem, out))
}

/// All rows of one trial, in (series, swept value) order.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<Vec<ResultRow>> {
    let seed = trial_seed(cfg.seed, trial);
    let mut rows = Vec::new();
    for (si, series) in cfg.series().into_iter().enumerate() {
        for (pi, value) in cfg.sweep().into_iter().enumerate() {
            let (problem, out) = optimize_cell(cfg, trial, si, pi)?;
            let obj = &problem.objective;
            let x = &out.best_solution;
            let rate = obj.sum_rate(&PanelState::from_slice(x)).unwrap_or(0.0);
            rows.push(make_row(cfg, series, value, trial, seed, x, rate, obj.total_power()));
        }
    }
    Ok(rows)
}

/// Runs every trial and returns rows ordered by (scheme, swept value, trial).
pub fn run_scenario(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let per_trial: Vec<Result<Vec<ResultRow>>> = {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..cfg.trials).map(|t| run_trial(cfg, t)).collect()
        }
    };
    let mut rows = Vec::with_capacity(cfg.trials * cfg.series().len() * cfg.sweep().len());
    for r in per_trial {
        rows.extend(r?);
    }
    let series: Vec<String> = cfg.series().iter().map(|s| s.label()).collect();
    let sweep = cfg.sweep();
    let key = |r: &ResultRow| {
        (
            series.iter().position(|s| *s == r.scheme).unwrap_or(usize::MAX),
            sweep.iter().position(|v| *v == r.swept_value).unwrap_or(usize::MAX),
            r.trial,
        )
    };
    rows.sort_by_key(key);
    Ok(rows)
}

/// Recomputes the sum rate of a stored row from its panel state and seed.
pub fn replay_row(cfg: &ExperimentConfig, row: &ResultRow) -> Result<f64> {
    if row.scenario != cfg.scenario.as_str() {
        return Err(ExperimentError::Replay(row.scenario.clone()));
    }
    let series = Series::parse(&row.scheme).ok_or_else(|| ExperimentError::Replay(row.scheme.clone()))?;
    let problem = cfg.problem(row.trial_seed, series, row.swept_value)?;
    let state = PanelState {
        roll: row.omega,
        yaw: row.gamma,
        eta_c: row.eta_c,
    };
    Ok(problem.objective.sum_rate(&state).unwrap_or(0.0))
}

pub fn write_rows<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(RESULT_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?;
    Ok(rows)
}

/// Mean and standard error of one column over trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn of(values: &[f64]) -> Estimate {
        let n = values.len() as f64;
        if values.is_empty() {
            return Estimate {
                mean: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Estimate { mean, stderr }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub scheme: String,
    pub swept_value: f64,
    pub trials: usize,
    pub sum_rate_mean: f64,
    pub sum_rate_stderr: f64,
    pub total_power_mean: f64,
    pub total_power_stderr: f64,
    pub see_mean: f64,
    pub see_stderr: f64,
}

/// Per (scheme, swept value) trial averages, in first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, f64)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|(s, v)| *s == r.scheme && *v == r.swept_value) {
            keys.push((r.scheme.clone(), r.swept_value));
        }
    }
    keys.into_iter()
        .map(|(scheme, value)| {
            let cell: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| r.scheme == scheme && r.swept_value == value)
                .collect();
            let col = |f: fn(&ResultRow) -> f64| Estimate::of(&cell.iter().map(|r| f(r)).collect::<Vec<_>>());
            let (rate, power, see) = (col(|r| r.sum_rate), col(|r| r.total_power), col(|r| r.see));
            SummaryRow {
                scenario: cell[0].scenario.clone(),
                scheme,
                swept_value: value,
                trials: cell.len(),
                sum_rate_mean: rate.mean,
                sum_rate_stderr: rate.stderr,
                total_power_mean: power.mean,
                total_power_stderr: power.stderr,
                see_mean: see.mean,
                see_stderr: see.stderr,
            }
        })
        .collect()
}

/// Looks up the summary of one series at one swept value.
pub fn cell<'a>(summary: &'a [SummaryRow], scheme: &str, value: f64) -> Option<&'a SummaryRow> {
    summary.iter().find(|s| s.scheme == scheme && s.swept_value == value)
}

#[derive(Debug, Clone, Serialize)]
struct RunMeta<'a> {
    package_version: &'static str,
    scenario: &'a str,
    rows: usize,
    /// Reported protocol: scene frozen per trial, SCA per (series, swept
    /// value), means and standard errors over trials.
    protocol: &'static str,
    config: &'a ExperimentConfig,
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub rows: PathBuf,
    pub summary: PathBuf,
    pub meta: PathBuf,
}

/// Writes `<scenario>.csv`, `<scenario>_summary.csv` and `<scenario>_meta.json`.
pub fn write_outputs(cfg: &ExperimentConfig, rows: &[ResultRow], dir: &Path) -> Result<OutputFiles> {
    fs::create_dir_all(dir)?;
    let name = cfg.scenario.as_str();
    let files = OutputFiles {
        rows: dir.join(format!("{name}.csv")),
        summary: dir.join(format!("{name}_summary.csv")),
        meta: dir.join(format!("{name}_meta.json")),
    };
    write_rows(rows, fs::File::create(&files.rows)?)?;

    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&files.summary)?;
    for s in summarize(rows) {
        w.serialize(s)?;
    }
    w.flush()?;

    let meta = RunMeta {
        package_version: env!("CARGO_PKG_VERSION"),
        scenario: name,
        rows: rows.len(),
        protocol: "scene frozen per trial; one optimization per (scheme, swept value); trial means with standard errors",
        config: cfg,
    };
    let mut f = fs::File::create(&files.meta)?;
    serde_json::to_writer_pretty(&mut f, &meta)?;
    f.write_all(b"\n")?;
    Ok(files)
}

/// One scene compared between the metaheuristic and the lattice search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub scenario: String,
    pub scheme: String,
    pub swept_value: f64,
    pub trial: usize,
    pub trial_seed: u64,
    pub sca_best: f64,
    pub grid_best: f64,
    pub ratio: f64,
}

/// For each of `scenes` trials, compares the optimizer against a lattice
/// search with `points` points per axis at the first swept value.
pub fn run_oracle(cfg: &ExperimentConfig, scenes: usize, points: usize) -> Result<Vec<OracleRow>> {
    cfg.validate()?;
    let space = cfg.search_space();
    let value = cfg.sweep()[0];
    let mut rows = Vec::new();
    for (si, series) in cfg.series().into_iter().enumerate() {
        for trial in 0..scenes {
            let seed = trial_seed(cfg.seed, trial);
            let problem = cfg.problem(seed, series, value)?;
            let f = |x: &[f64]| problem.objective.evaluate(x);
            let sca = sca_optimize(f, &space, &cfg.sca_params(optimizer_seed(seed, si, 0)))?;
            let grid = grid_oracle(f, &space, points)?;
            rows.push(OracleRow {
                scenario: cfg.scenario.to_string(),
                scheme: series.label(),
                swept_value: value,
                trial,
                trial_seed: seed,
                sca_best: sca.best_fitness,
                grid_best: grid.best_fitness,
                ratio: if grid.best_fitness > 0.0 {
                    sca.best_fitness / grid.best_fitness
                } else {
                    1.0
                },
            });
        }
    }
    Ok(rows)
}

pub fn write_oracle_rows<W: Write>(rows: &[OracleRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
