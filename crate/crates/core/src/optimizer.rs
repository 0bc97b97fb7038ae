//! Sine-cosine search over a box, a lattice oracle, and the panel
//! objectives (sum rate and sum energy efficiency) for a frozen drop.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::access::{
    noma_sum_rate, order_users, rsma_sum_rate, LinkBudget, NomaConfig, PowerSplit, RsmaConfig,
};
use crate::channel::{ChannelModel, LinkTable, PanelState};
use crate::geometry::{ElementKind, Room, Scene};
use crate::power::PowerModel;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum OptimizerError {
    #[error("bounds must satisfy lower < upper for every variable (variable {0})")]
    BadBounds(usize),
    #[error("need at least one agent")]
    NoAgents,
    #[error("a_tilde must be positive")]
    BadStep,
    #[error("a lattice needs at least two points per axis")]
    Lattice,
}

/// Smallest feasible LC index; the drive voltage diverges at the ordinary
/// index itself.
pub const ETA_C_FLOOR: f64 = 1.5 + 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SearchSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, OptimizerError> {
        assert_eq!(lower.len(), upper.len());
        if let Some(i) = lower.iter().zip(&upper).position(|(l, u)| !(l < u)) {
            return Err(OptimizerError::BadBounds(i));
        }
        Ok(Self { lower, upper })
    }

    /// Roll, yaw in [−π/2, π/2] and η_c in (1.5, 1.7].
    pub fn panel() -> Self {
        Self {
            lower: vec![-FRAC_PI_2, -FRAC_PI_2, ETA_C_FLOOR],
            upper: vec![FRAC_PI_2, FRAC_PI_2, 1.7],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| (*l..=*u).contains(v))
    }

    fn clamp(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaParams {
    pub agents: usize,
    pub iterations: usize,
    pub a_tilde: f64,
    pub seed: u64,
}

impl Default for ScaParams {
    fn default() -> Self {
        Self {
            agents: 5,
            iterations: 4000,
            a_tilde: 2.0,
            seed: 0,
        }
    }
}

/// Linearly decaying step amplitude r1 = ã − t ã / T.
pub fn step_amplitude(t: usize, iterations: usize, a_tilde: f64) -> f64 {
    if iterations == 0 {
        return a_tilde;
    }
    a_tilde - t as f64 * (a_tilde / iterations as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaOutcome {
    pub best_solution: Vec<f64>,
    pub best_fitness: f64,
    /// Destination fitness after initialization and after each iteration.
    pub trace: Vec<f64>,
    /// Destination point after initialization and after each iteration.
    pub trace_solutions: Vec<Vec<f64>>,
    pub evaluations: usize,
}

impl ScaOutcome {
    /// Writes `iteration,best_fitness,omega,gamma,eta_c` rows.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["iteration", "best_fitness", "omega", "gamma", "eta_c"])?;
        for (i, (f, s)) in self.trace.iter().zip(&self.trace_solutions).enumerate() {
            let mut rec = vec![i.to_string(), f.to_string()];
            rec.extend(s.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn fitness_of(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::NEG_INFINITY
    }
}

/// Maximizes `objective` over `space` with the sine-cosine algorithm.
///
/// Agents start uniformly in the box. In every iteration each coordinate of
/// each agent moves by `r1 · sin(r2) · |r3 D − x|` (or the cosine form when
/// `r4 ≥ 0.5`), with fresh `r2, r3, r4` per coordinate, and is clamped back
/// into the box. The destination `D` only changes on strict improvement,
/// scanning agents in index order.
pub fn sca_optimize<F>(objective: F, space: &SearchSpace, params: &ScaParams) -> Result<ScaOutcome, OptimizerError>
where
    F: Fn(&[f64]) -> f64,
{
    if params.agents == 0 {
        return Err(OptimizerError::NoAgents);
    }
    if !(params.a_tilde > 0.0) {
        return Err(OptimizerError::BadStep);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let dim = space.dim();

    let mut agents: Vec<Vec<f64>> = (0..params.agents)
        .map(|_| {
            (0..dim)
                .map(|v| space.lower[v] + (space.upper[v] - space.lower[v]) * rng.gen::<f64>())
                .collect()
        })
        .collect();
    let mut evaluations = 0;
    let mut best_solution = agents[0].clone();
    let mut best_fitness = f64::NEG_INFINITY;
    for (i, a) in agents.iter().enumerate() {
        let f = fitness_of(objective(a));
        evaluations += 1;
        if i == 0 || f > best_fitness {
            best_fitness = f;
            best_solution.clone_from(a);
        }
    }
    let mut trace = Vec::with_capacity(params.iterations + 1);
    let mut trace_solutions = Vec::with_capacity(params.iterations + 1);
    trace.push(best_fitness);
    trace_solutions.push(best_solution.clone());

    for t in 0..params.iterations {
        let r1 = step_amplitude(t, params.iterations, params.a_tilde);
        for agent in agents.iter_mut() {
            for (v, x) in agent.iter_mut().enumerate() {
                let r2 = 2.0 * PI * rng.gen::<f64>();
                let r3 = 2.0 * rng.gen::<f64>();
                let r4 = rng.gen::<f64>();
                let reach = (r3 * best_solution[v] - *x).abs();
                let wave = if r4 < 0.5 { r2.sin() } else { r2.cos() };
                *x += r1 * wave * reach;
            }
            space.clamp(agent);
        }
        for a in &agents {
            let f = fitness_of(objective(a));
            evaluations += 1;
            if f > best_fitness {
                best_fitness = f;
                best_solution.clone_from(a);
            }
        }
        trace.push(best_fitness);
        trace_solutions.push(best_solution.clone());
    }

    Ok(ScaOutcome {
        best_solution,
        best_fitness,
        trace,
        trace_solutions,
        evaluations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome {
    pub best_solution: Vec<f64>,
    pub best_fitness: f64,
    pub evaluations: usize,
}

/// Exhaustive search on a uniform lattice that includes both bounds. Ties
/// keep the first lattice point in row-major order (last axis fastest).
pub fn grid_oracle<F>(objective: F, space: &SearchSpace, points_per_axis: usize) -> Result<GridOutcome, OptimizerError>
where
    F: Fn(&[f64]) -> f64,
{
    if points_per_axis < 2 {
        return Err(OptimizerError::Lattice);
    }
    let dim = space.dim();
    let axis = |v: usize, i: usize| {
        if i + 1 == points_per_axis {
            space.upper[v]
        } else {
            space.lower[v] + (space.upper[v] - space.lower[v]) * i as f64 / (points_per_axis - 1) as f64
        }
    };
    let mut idx = vec![0usize; dim];
    let mut x: Vec<f64> = (0..dim).map(|v| axis(v, 0)).collect();
    let mut best_solution = x.clone();
    let mut best_fitness = f64::NEG_INFINITY;
    let mut evaluations = 0;
    let mut first = true;
    loop {
        let f = fitness_of(objective(&x));
        evaluations += 1;
        if first || f > best_fitness {
            best_fitness = f;
            best_solution.clone_from(&x);
            first = false;
        }
        // odometer increment, last axis fastest
        let mut v = dim;
        loop {
            if v == 0 {
                return Ok(GridOutcome {
                    best_solution,
                    best_fitness,
                    evaluations,
                });
            }
            v -= 1;
            idx[v] += 1;
            if idx[v] < points_per_axis {
                x[v] = axis(v, idx[v]);
                break;
            }
            idx[v] = 0;
            x[v] = axis(v, 0);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Noma,
    Rsma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    SumRate,
    /// Sum rate divided by the total consumed power.
    Energy,
}

/// Fixed inputs of one panel optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub scheme: Scheme,
    pub metric: Metric,
    pub budget: LinkBudget,
    pub noma: NomaConfig,
    pub rsma: RsmaConfig,
    pub power: PowerModel,
}

/// Sum rate (or SEE) as a function of (roll, yaw, η_c) for a frozen drop.
#[derive(Debug, Clone)]
pub struct PanelObjective {
    table: LinkTable,
    rooms: Vec<Room>,
    spec: ProblemSpec,
    split: Option<PowerSplit>,
    total_power: f64,
}

impl PanelObjective {
    /// `split` is the RSMA power split; it must be given for RSMA and is
    /// ignored for NOMA.
    pub fn new(scene: &Scene, model: &ChannelModel, spec: ProblemSpec, split: Option<PowerSplit>) -> Self {
        assert!(
            spec.scheme == Scheme::Noma || split.is_some(),
            "RSMA objective needs a power split"
        );
        let total_power = spec.power.total_power(
            spec.budget.electrical_power(),
            scene.panel.count(ElementKind::Mirror),
            scene.panel.count(ElementKind::Lc),
        );
        Self {
            table: LinkTable::new(scene, model),
            rooms: scene.users.iter().map(|u| u.room).collect(),
            spec,
            split,
            total_power,
        }
    }

    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    /// Scheme sum rate in bit/s; `None` when the state is infeasible.
    pub fn sum_rate(&self, state: &PanelState) -> Option<f64> {
        let gains = self.table.gains(state).ok()?;
        let ordered = order_users(&gains, &self.rooms);
        let rate = match self.spec.scheme {
            Scheme::Noma => noma_sum_rate(&ordered, &self.spec.budget, &self.spec.noma).ok()?.sum,
            Scheme::Rsma => {
                rsma_sum_rate(&ordered, &self.spec.budget, &self.spec.rsma, self.split.as_ref()?)
                    .ok()?
                    .sum
            }
        };
        Some(rate)
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let state = PanelState::from_slice(x);
        match self.sum_rate(&state) {
            None => f64::NEG_INFINITY,
            Some(r) => match self.spec.metric {
                Metric::SumRate => r,
                Metric::Energy => r / self.total_power,
            },
        }
    }
}

/// Sum-rate objective for a frozen drop.
pub fn make_p0_objective(
    scene: &Scene,
    model: &ChannelModel,
    spec: ProblemSpec,
    split: Option<PowerSplit>,
) -> impl Fn(&[f64]) -> f64 {
    let spec = ProblemSpec {
        metric: Metric::SumRate,
        ..spec
    };
    let obj = PanelObjective::new(scene, model, spec, split);
    move |x: &[f64]| obj.evaluate(x)
}

/// Energy-efficiency objective for a frozen drop.
pub fn make_see_objective(
    scene: &Scene,
    model: &ChannelModel,
    spec: ProblemSpec,
    split: Option<PowerSplit>,
) -> impl Fn(&[f64]) -> f64 {
    let spec = ProblemSpec {
        metric: Metric::Energy,
        ..spec
    };
    let obj = PanelObjective::new(scene, model, spec, split);
    move |x: &[f64]| obj.evaluate(x)
}
