//! wasm-bindgen bindings for the static demo page in `www/`.
//!
//! The plain functions (`*_impl`) carry the logic and are tested natively;
//! the exported wrappers only convert errors into `JsError`.

use wasm_bindgen::prelude::*;

use ostar_vlc::experiments::{trial_seed, ExperimentConfig, Problem, Series};
use ostar_vlc::optimizer::{sca_optimize, SearchSpace};
use ostar_vlc::PanelState;

fn parse_config(json: &str) -> Result<ExperimentConfig, String> {
    let text = if json.trim().is_empty() { "{}" } else { json };
    ExperimentConfig::from_json(text).map_err(|e| e.to_string())
}

/// Rows of `[eta_c, voltage, gamma, exp(gamma * depth)]`, flattened, for
/// `points` indices spread over the admissible range.
pub fn lc_curves_impl(config_json: &str, points: usize) -> Result<Vec<f64>, String> {
    let cfg = parse_config(config_json)?;
    let model = cfg.channel_model();
    let space = cfg.search_space();
    let (lo, hi) = (space.lower[2], space.upper[2]);
    let n = points.max(2);
    let mut out = Vec::with_capacity(4 * n);
    for i in 0..n {
        let eta = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let v = model.cell.voltage_from_index(eta).map_err(|e| e.to_string())?;
        let g = model
            .cell
            .amplification_gamma(eta, model.amp_angle, model.wavelength)
            .map_err(|e| e.to_string())?;
        let f = model.amp_factor(eta).map_err(|e| e.to_string())?;
        out.extend([eta, v, g, f]);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn lc_curves(config_json: &str, points: usize) -> Result<Vec<f64>, JsError> {
    lc_curves_impl(config_json, points).map_err(|e| JsError::new(&e))
}

/// One random user drop with a fixed access scheme.
#[wasm_bindgen]
pub struct Drop {
    cfg: ExperimentConfig,
    problem: Problem,
    space: SearchSpace,
    seed: u64,
}

impl Drop {
    pub fn create(config_json: &str, seed: u64, scheme: &str) -> Result<Drop, String> {
        let cfg = parse_config(config_json)?;
        let series = Series::parse(scheme).ok_or_else(|| format!("unknown scheme '{scheme}'"))?;
        let seed = trial_seed(seed, 0);
        let value = cfg.sweep().first().copied().unwrap_or(cfg.p_w);
        let problem = cfg.problem(seed, series, value).map_err(|e| e.to_string())?;
        let space = cfg.search_space();
        Ok(Drop {
            cfg,
            problem,
            space,
            seed,
        })
    }

    /// `[x, y, z, room]` per receiver, room being 1 or 2.
    pub fn receivers(&self) -> Vec<f64> {
        self.problem
            .scene
            .users
            .iter()
            .flat_map(|u| {
                let p = u.receiver();
                let room = if u.room == ostar_vlc::geometry::Room::One { 1.0 } else { 2.0 };
                [p.x, p.y, p.z, room]
            })
            .collect()
    }

    /// Sum rate over an `n` x `n` roll/yaw grid at a fixed index, row-major
    /// with roll along rows. Infeasible states come out as NaN.
    pub fn landscape(&self, eta_c: f64, n: usize) -> Vec<f64> {
        let n = n.max(2);
        let (lo, hi) = (&self.space.lower, &self.space.upper);
        let eta_c = eta_c.clamp(lo[2], hi[2]);
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            let roll = lo[0] + (hi[0] - lo[0]) * i as f64 / (n - 1) as f64;
            for j in 0..n {
                let yaw = lo[1] + (hi[1] - lo[1]) * j as f64 / (n - 1) as f64;
                let state = PanelState { roll, yaw, eta_c };
                out.push(self.problem.objective.sum_rate(&state).unwrap_or(f64::NAN));
            }
        }
        out
    }

    /// Runs the optimizer and returns `[roll, yaw, eta_c, sum_rate, see]`
    /// followed by the per-iteration best fitness.
    pub fn optimize_with(&self, iterations: usize) -> Result<Vec<f64>, String> {
        let mut params = self.cfg.sca_params(self.seed);
        params.iterations = iterations;
        let obj = &self.problem.objective;
        let outcome = sca_optimize(|x| obj.evaluate(x), &self.space, &params).map_err(|e| e.to_string())?;
        let rate = outcome.best_fitness;
        let mut out = outcome.best_solution.clone();
        out.extend([rate, rate / obj.total_power()]);
        out.extend(outcome.trace);
        Ok(out)
    }
}

#[wasm_bindgen]
impl Drop {
    #[wasm_bindgen(constructor)]
    pub fn new(config_json: &str, seed: u64, scheme: &str) -> Result<Drop, JsError> {
        Drop::create(config_json, seed, scheme).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = receivers)]
    pub fn receivers_js(&self) -> Vec<f64> {
        self.receivers()
    }

    #[wasm_bindgen(js_name = landscape)]
    pub fn landscape_js(&self, eta_c: f64, n: usize) -> Vec<f64> {
        self.landscape(eta_c, n)
    }

    pub fn optimize(&self, iterations: usize) -> Result<Vec<f64>, JsError> {
        self.optimize_with(iterations).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(getter)]
    pub fn bounds(&self) -> Vec<f64> {
        self.space.lower.iter().chain(&self.space.upper).copied().collect()
    }

    #[wasm_bindgen(getter, js_name = totalPower)]
    pub fn total_power(&self) -> f64 {
        self.problem.objective.total_power()
    }
}
