//! Behavioral energy terms evaluated for one candidate velocity of one agent.
//!
//! Every term has the shape `w · exp(ρ · x)` for some non-negative deviation `x`
//! (plus an absolute-magnitude penalty in the acceleration term). The optimizer
//! picks the dataset sample minimizing the sum.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{StimulusKind, StimulusView};
use crate::real::Real;
use crate::refdata::{DataSample, DEFAULT_DT, DEFAULT_GROUP_COUNT, DEFAULT_SAMPLE_BUDGET, DEFAULT_WINDOW};
use crate::vec3::Vec3;

pub const DEFAULT_RHO: f64 = 2.5;
pub const DEFAULT_D_REP: f64 = 0.05;
pub const DEFAULT_D_ATT1: f64 = 0.15;
pub const DEFAULT_D_ATT2: f64 = 0.6;
pub const DEFAULT_D_DANGER: f64 = 0.3;

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("energy term `{term}` is not finite")]
    NonFinite { term: &'static str },
}

#[derive(Debug, Error, PartialEq)]
#[error("invalid simulation parameters: {0}")]
pub struct ParamError(pub String);

/// Term weights. All must be non-negative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights<R> {
    pub rep: R,
    pub oa: R,
    pub cos: R,
    pub dir: R,
    pub acc: R,
    pub env: R,
    pub noise: R,
    pub user: R,
}

impl<R: Real> Weights<R> {
    pub fn zero() -> Self {
        Self::from_array([R::zero(); 8])
    }

    /// In the order `rep, oa, cos, dir, acc, env, noise, user`.
    pub fn from_array(w: [R; 8]) -> Self {
        Self {
            rep: w[0],
            oa: w[1],
            cos: w[2],
            dir: w[3],
            acc: w[4],
            env: w[5],
            noise: w[6],
            user: w[7],
        }
    }

    pub fn to_array(self) -> [R; 8] {
        [
            self.rep, self.oa, self.cos, self.dir, self.acc, self.env, self.noise, self.user,
        ]
    }

    pub fn aggregation() -> Self {
        Self::from_array([1.0, 1.0, 0.05, 1.0, 1.0, 0.0, 0.2, 0.0].map(R::lit))
    }
}

/// Every tunable of the model in one place.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimParams<R> {
    pub rho: R,
    pub dt: R,
    pub weights: Weights<R>,
    pub d_rep: R,
    pub d_att1: R,
    pub d_att2: R,
    pub d_danger: R,
    pub group_count: usize,
    pub window: usize,
    pub sample_budget: usize,
    /// Use `a′ = v − v_t` instead of `(v − v_t)/Δt` for the predicted acceleration.
    pub literal_accel_prediction: bool,
}

impl<R: Real> Default for SimParams<R> {
    fn default() -> Self {
        Self {
            rho: R::lit(DEFAULT_RHO),
            dt: R::lit(DEFAULT_DT),
            weights: Weights::aggregation(),
            d_rep: R::lit(DEFAULT_D_REP),
            d_att1: R::lit(DEFAULT_D_ATT1),
            d_att2: R::lit(DEFAULT_D_ATT2),
            d_danger: R::lit(DEFAULT_D_DANGER),
            group_count: DEFAULT_GROUP_COUNT,
            window: DEFAULT_WINDOW,
            sample_budget: DEFAULT_SAMPLE_BUDGET,
            literal_accel_prediction: false,
        }
    }
}

impl<R: Real> SimParams<R> {
    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = |name: &str, v: R| {
            if v > R::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(ParamError(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        positive("rho", self.rho)?;
        positive("dt", self.dt)?;
        positive("d_rep", self.d_rep)?;
        positive("d_att1", self.d_att1)?;
        positive("d_att2", self.d_att2)?;
        positive("d_danger", self.d_danger)?;
        if self.d_att1 > self.d_att2 {
            return Err(ParamError(format!(
                "d_att1 ({}) must not exceed d_att2 ({})",
                self.d_att1, self.d_att2
            )));
        }
        const NAMES: [&str; 8] = ["w_rep", "w_oa", "w_cos", "w_dir", "w_acc", "w_env", "w_n", "w_user"];
        for (name, w) in NAMES.iter().zip(self.weights.to_array()) {
            if !(w >= R::zero()) || !w.is_finite() {
                return Err(ParamError(format!("{name} must be finite and ≥ 0, got {w}")));
            }
        }
        if self.group_count == 0 {
            return Err(ParamError("group_count must be ≥ 1".into()));
        }
        if self.sample_budget == 0 {
            return Err(ParamError("sample_budget must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Radius covering every neighbor interaction.
    pub fn interaction_radius(&self) -> R {
        self.d_rep.max(self.d_att2)
    }

    /// Grid cell edge length serving all neighbor and danger queries.
    pub fn grid_cell_size(&self) -> R {
        self.d_rep.max(self.d_att2).max(self.d_danger)
    }
}

/// Motion state of one agent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentState<R> {
    pub position: Vec3<R>,
    pub velocity: Vec3<R>,
    pub noise_dir: Vec3<R>,
    pub control_dir: Option<Vec3<R>>,
}

impl<R: Real> AgentState<R> {
    pub fn is_finite(&self) -> bool {
        self.position.is_finite()
            && self.velocity.is_finite()
            && self.noise_dir.is_finite()
            && self.control_dir.is_none_or(|c| c.is_finite())
    }
}

/// What an agent sees of the others and of the environment at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborContext<R> {
    /// `(position, velocity)` of agents inside the repulsion zone.
    pub repulsion_neighbors: Vec<(Vec3<R>, Vec3<R>)>,
    /// Positions of agents inside the attraction shell.
    pub attraction_neighbors: Vec<Vec3<R>>,
    pub swarm_center: Vec3<R>,
    pub stimuli: Vec<StimulusView<R>>,
}

impl<R: Real> NeighborContext<R> {
    pub fn empty(swarm_center: Vec3<R>) -> Self {
        Self {
            repulsion_neighbors: Vec::new(),
            attraction_neighbors: Vec::new(),
            swarm_center,
            stimuli: Vec::new(),
        }
    }
}

/// Per-term energies of one candidate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EnergyTerms<R> {
    pub repulsion: R,
    pub attract_neighbors: R,
    pub attract_center: R,
    pub internal: R,
    pub environment: R,
    pub noise: R,
    pub user: R,
}

impl<R: Real> EnergyTerms<R> {
    pub fn total(&self) -> R {
        self.repulsion
            + self.attract_neighbors
            + self.attract_center
            + self.internal
            + self.environment
            + self.noise
            + self.user
    }

    fn named(&self) -> [(&'static str, R); 7] {
        [
            ("repulsion", self.repulsion),
            ("attract_neighbors", self.attract_neighbors),
            ("attract_center", self.attract_center),
            ("internal", self.internal),
            ("environment", self.environment),
            ("noise", self.noise),
            ("user", self.user),
        ]
    }

    pub fn accumulate(&mut self, other: &Self) {
        self.repulsion += other.repulsion;
        self.attract_neighbors += other.attract_neighbors;
        self.attract_center += other.attract_center;
        self.internal += other.internal;
        self.environment += other.environment;
        self.noise += other.noise;
        self.user += other.user;
    }
}

/// Candidate-independent quantities for one agent, computed once and reused for
/// every candidate sample.
pub struct AgentEvaluator<'a, R> {
    agent: &'a AgentState<R>,
    ctx: &'a NeighborContext<R>,
    params: &'a SimParams<R>,
    current_dir: Vec3<R>,
    center_dir: Vec3<R>,
    /// Predicted neighbor positions `p_j + v_j Δt`.
    repulsion_predicted: Vec<Vec3<R>>,
    /// Directions from the agent to each attractor; zero for startle entries.
    stimulus_dirs: Vec<Vec3<R>>,
}

#[inline]
fn weighted_exp<R: Real>(w: R, rho: R, x: R) -> R {
    if w == R::zero() {
        R::zero()
    } else {
        w * (rho * x).exp()
    }
}

impl<'a, R: Real> AgentEvaluator<'a, R> {
    pub fn new(agent: &'a AgentState<R>, ctx: &'a NeighborContext<R>, params: &'a SimParams<R>) -> Self {
        let dt = params.dt;
        Self {
            agent,
            ctx,
            params,
            current_dir: agent.velocity.unit_or_zero(),
            center_dir: (ctx.swarm_center - agent.position).unit_or_zero(),
            repulsion_predicted: ctx.repulsion_neighbors.iter().map(|&(p, v)| p + v * dt).collect(),
            stimulus_dirs: ctx
                .stimuli
                .iter()
                .map(|s| match s.kind {
                    StimulusKind::Attractor => (s.position - agent.position).unit_or_zero(),
                    StimulusKind::Startle => Vec3::zero(),
                })
                .collect(),
        }
    }

    #[inline]
    fn predicted_position(&self, candidate_v: Vec3<R>) -> Vec3<R> {
        self.agent.position + candidate_v * self.params.dt
    }

    pub fn repulsion(&self, candidate_v: Vec3<R>) -> R {
        let w = self.params.weights.rep;
        if w == R::zero() || self.repulsion_predicted.is_empty() {
            return R::zero();
        }
        let p = self.predicted_position(candidate_v);
        let (rho, d) = (self.params.rho, self.params.d_rep);
        let sum: R = self
            .repulsion_predicted
            .iter()
            .map(|&q| (rho * (R::one() - p.distance(q) / d)).exp())
            .sum();
        w * sum / R::lit(self.repulsion_predicted.len() as f64)
    }

    pub fn attract_neighbors(&self, candidate_v: Vec3<R>) -> R {
        let w = self.params.weights.oa;
        let an = &self.ctx.attraction_neighbors;
        if w == R::zero() || an.is_empty() {
            return R::zero();
        }
        let p = self.predicted_position(candidate_v);
        let (rho, d) = (self.params.rho, self.params.d_att1);
        let sum: R = an.iter().map(|&q| (rho * (p.distance(q) / d - R::one())).exp()).sum();
        w * sum / R::lit(an.len() as f64)
    }

    pub fn attract_center(&self, candidate_v: Vec3<R>) -> R {
        let dir = candidate_v.unit_or_zero();
        weighted_exp(self.params.weights.cos, self.params.rho, (dir - self.center_dir).norm())
    }

    /// Directional continuity plus acceleration continuity against the sample's recorded acceleration.
    pub fn internal(&self, candidate_v: Vec3<R>, candidate_a: Vec3<R>) -> R {
        let w = &self.params.weights;
        let rho = self.params.rho;
        let dir = candidate_v.unit_or_zero();
        let e_dir = weighted_exp(w.dir, rho, (dir - self.current_dir).norm());
        let e_acc = if w.acc == R::zero() {
            R::zero()
        } else {
            let delta = candidate_v - self.agent.velocity;
            let predicted = if self.params.literal_accel_prediction {
                delta
            } else {
                delta / self.params.dt
            };
            let e_adir = (rho * (predicted.unit_or_zero() - candidate_a.unit_or_zero()).norm()).exp();
            let e_amag = (predicted.norm() - candidate_a.norm()).abs();
            w.acc * (e_adir + e_amag)
        };
        e_dir + e_acc
    }

    pub fn environment(&self, candidate_v: Vec3<R>) -> R {
        let w = self.params.weights.env;
        if w == R::zero() {
            return R::zero();
        }
        let rho = self.params.rho;
        let dir = candidate_v.unit_or_zero();
        let predicted = self.predicted_position(candidate_v);
        self.ctx
            .stimuli
            .iter()
            .zip(&self.stimulus_dirs)
            .map(|(s, &to_stimulus)| match s.kind {
                StimulusKind::Attractor => w * (rho * (dir - to_stimulus).norm()).exp(),
                StimulusKind::Startle if s.in_danger => {
                    let psi = R::one() - predicted.distance(s.position) / self.params.d_danger;
                    w * (rho * psi).exp()
                }
                StimulusKind::Startle => R::zero(),
            })
            .sum()
    }

    pub fn noise(&self, candidate_v: Vec3<R>) -> R {
        let dir = candidate_v.unit_or_zero();
        weighted_exp(
            self.params.weights.noise,
            self.params.rho,
            (dir - self.agent.noise_dir).norm(),
        )
    }

    pub fn user(&self, candidate_v: Vec3<R>) -> R {
        match self.agent.control_dir {
            None => R::zero(),
            Some(cd) => {
                let dir = candidate_v.unit_or_zero();
                weighted_exp(self.params.weights.user, self.params.rho, (dir - cd).norm())
            }
        }
    }

    pub fn terms(&self, candidate: &DataSample<R>) -> Result<EnergyTerms<R>, EnergyError> {
        let v = candidate.velocity;
        let terms = EnergyTerms {
            repulsion: self.repulsion(v),
            attract_neighbors: self.attract_neighbors(v),
            attract_center: self.attract_center(v),
            internal: self.internal(v, candidate.acceleration),
            environment: self.environment(v),
            noise: self.noise(v),
            user: self.user(v),
        };
        if let Some((term, _)) = terms.named().into_iter().find(|(_, e)| !e.is_finite()) {
            return Err(EnergyError::NonFinite { term });
        }
        if !terms.total().is_finite() {
            return Err(EnergyError::NonFinite { term: "total" });
        }
        Ok(terms)
    }
}

pub fn e_repulsion<R: Real>(v: Vec3<R>, agent: &AgentState<R>, ctx: &NeighborContext<R>, params: &SimParams<R>) -> R {
    AgentEvaluator::new(agent, ctx, params).repulsion(v)
}

pub fn e_attract_neighbors<R: Real>(
    v: Vec3<R>,
    agent: &AgentState<R>,
    ctx: &NeighborContext<R>,
    params: &SimParams<R>,
) -> R {
    AgentEvaluator::new(agent, ctx, params).attract_neighbors(v)
}

pub fn e_attract_center<R: Real>(
    v: Vec3<R>,
    agent: &AgentState<R>,
    ctx: &NeighborContext<R>,
    params: &SimParams<R>,
) -> R {
    AgentEvaluator::new(agent, ctx, params).attract_center(v)
}

pub fn e_internal<R: Real>(v: Vec3<R>, a: Vec3<R>, agent: &AgentState<R>, params: &SimParams<R>) -> R {
    let ctx = NeighborContext::empty(agent.position);
    AgentEvaluator::new(agent, &ctx, params).internal(v, a)
}

pub fn e_environment<R: Real>(v: Vec3<R>, agent: &AgentState<R>, ctx: &NeighborContext<R>, params: &SimParams<R>) -> R {
    AgentEvaluator::new(agent, ctx, params).environment(v)
}

pub fn e_noise<R: Real>(v: Vec3<R>, agent: &AgentState<R>, params: &SimParams<R>) -> R {
    let ctx = NeighborContext::empty(agent.position);
    AgentEvaluator::new(agent, &ctx, params).noise(v)
}

pub fn e_user<R: Real>(v: Vec3<R>, agent: &AgentState<R>, params: &SimParams<R>) -> R {
    let ctx = NeighborContext::empty(agent.position);
    AgentEvaluator::new(agent, &ctx, params).user(v)
}

pub fn total_energy<R: Real>(
    candidate: &DataSample<R>,
    agent: &AgentState<R>,
    ctx: &NeighborContext<R>,
    params: &SimParams<R>,
) -> Result<R, EnergyError> {
    AgentEvaluator::new(agent, ctx, params)
        .terms(candidate)
        .map(|t| t.total())
}
