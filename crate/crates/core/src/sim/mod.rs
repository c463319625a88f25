//! The frame loop: neighbor search, per-agent argmin over the candidate pool,
//! and semi-implicit integration.
//!
//! All agents select against the frozen time-`t` state, then all integrate.
//! Per-agent work reads shared immutable data and writes a private result, so
//! the outcome is bit-identical for any worker count.

pub mod grid;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::control::{control_direction, AgentControlState, Environment, StimulusKind};
use crate::energy::{
    AgentEvaluator, AgentState, EnergyError, EnergyTerms, NeighborContext, ParamError, SimParams, Weights,
};
use crate::noise::NoiseField;
use crate::real::Real;
use crate::refdata::{DataSample, ReferenceDataset};
use crate::trajectory::{Trajectory, TrajectoryFrame, TrajectoryRow};
use crate::vec3::Vec3;

pub use grid::{build_grid, naive_neighbors, SpatialGrid};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("agent {agent} has a non-finite position")]
    NonFinitePosition { agent: usize },
    #[error("agent {agent}: {source}")]
    Energy {
        agent: usize,
        #[source]
        source: EnergyError,
    },
    #[error("swarm state lists have mismatched lengths")]
    MismatchedState,
    #[error("swarm is empty")]
    EmptySwarm,
    #[error("failed to build worker pool: {0}")]
    Pool(String),
}

impl SimError {
    pub fn is_numeric(&self) -> bool {
        matches!(self, SimError::Energy { .. } | SimError::NonFinitePosition { .. })
    }
}

/// Which weight row an agent used for its last selection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightProfile {
    #[default]
    Base,
    InDanger,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwarmState<R> {
    pub frame: u64,
    pub agents: Vec<AgentState<R>>,
    pub control: Vec<AgentControlState>,
    pub weight_profiles: Vec<WeightProfile>,
}

impl<R: Real> SwarmState<R> {
    pub fn new(frame: u64, agents: Vec<AgentState<R>>, control: Vec<AgentControlState>) -> Result<Self, SimError> {
        if agents.len() != control.len() {
            return Err(SimError::MismatchedState);
        }
        let n = agents.len();
        Ok(Self {
            frame,
            agents,
            control,
            weight_profiles: vec![WeightProfile::Base; n],
        })
    }

    /// Agents without assigned paths.
    pub fn free(frame: u64, agents: Vec<AgentState<R>>) -> Self {
        let control = vec![AgentControlState::unassigned(); agents.len()];
        Self::new(frame, agents, control).expect("matching lengths")
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    fn check(&self) -> Result<(), SimError> {
        if self.agents.len() != self.control.len() || self.agents.len() != self.weight_profiles.len() {
            return Err(SimError::MismatchedState);
        }
        if let Some(agent) = self.agents.iter().position(|a| !a.is_finite()) {
            return Err(SimError::NonFinitePosition { agent });
        }
        Ok(())
    }

    pub fn to_frame(&self) -> TrajectoryFrame<R> {
        TrajectoryFrame {
            frame: self.frame,
            rows: self
                .agents
                .iter()
                .enumerate()
                .map(|(agent_id, a)| TrajectoryRow {
                    agent_id,
                    position: a.position,
                    velocity: a.velocity,
                })
                .collect(),
        }
    }
}

/// Instrumentation for one frame.
#[derive(Clone, Debug, Serialize)]
pub struct StepReport {
    pub frame: u64,
    pub energy: EnergyTerms<f64>,
    pub total_energy: f64,
    pub evaluations: u64,
    pub agents: usize,
    pub in_danger: usize,
    pub wall_time_s: f64,
}

/// Mean of agent positions, summed in index order.
pub fn swarm_center<R: Real>(agents: &[AgentState<R>]) -> Vec3<R> {
    let mut sum = Vec3::zero();
    for a in agents {
        sum += a.position;
    }
    sum / R::lit(agents.len().max(1) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Selection<R> {
    /// Index into the speed-sorted dataset.
    pub index: usize,
    pub sample: DataSample<R>,
    pub terms: EnergyTerms<R>,
    pub energy: R,
    pub evaluations: usize,
}

/// Lowest-energy sample among the speed-window candidates; ties go to the lowest index.
pub fn select_velocity<R: Real>(
    agent: &AgentState<R>,
    ctx: &NeighborContext<R>,
    dataset: &ReferenceDataset<R>,
    params: &SimParams<R>,
) -> Result<Selection<R>, EnergyError> {
    let range = dataset.candidate_range(agent.velocity.norm(), params.window);
    let evaluator = AgentEvaluator::new(agent, ctx, params);
    let mut best: Option<Selection<R>> = None;
    let evaluations = range.len();
    for index in range {
        let sample = dataset.samples()[index];
        let terms = evaluator.terms(&sample)?;
        let energy = terms.total();
        if best.as_ref().is_none_or(|b| energy < b.energy) {
            best = Some(Selection {
                index,
                sample,
                terms,
                energy,
                evaluations,
            });
        }
    }
    Ok(best.expect("candidate range is never empty"))
}

/// Recorded trajectories replayed as non-simulated agents.
///
/// Ghosts join the neighbor sets of simulated agents but are never optimized.
/// `(track id, position, velocity)` of one replayed agent at one frame.
pub type GhostRow<R> = (i64, Vec3<R>, Vec3<R>);

#[derive(Clone, Debug, Default)]
pub struct GhostReplay<R> {
    frames: BTreeMap<u64, Vec<GhostRow<R>>>,
}

impl<R: Real> GhostReplay<R> {
    pub fn empty() -> Self {
        Self {
            frames: BTreeMap::new(),
        }
    }

    /// Builds the replay from per-track `(frame, position)` lists sorted by frame.
    /// Velocities are forward differences, backward at a segment's last frame.
    pub fn from_tracks(tracks: &BTreeMap<i64, Vec<(u64, Vec3<R>)>>, dt: R) -> Self {
        let mut frames: BTreeMap<u64, Vec<GhostRow<R>>> = BTreeMap::new();
        for (&id, points) in tracks {
            for (k, &(f, p)) in points.iter().enumerate() {
                let next = points.get(k + 1).filter(|(g, _)| *g == f + 1);
                let prev = k.checked_sub(1).map(|j| points[j]).filter(|(g, _)| *g + 1 == f);
                let v = match (next, prev) {
                    (Some(&(_, q)), _) => (q - p) / dt,
                    (None, Some((_, q))) => (p - q) / dt,
                    _ => Vec3::zero(),
                };
                frames.entry(f).or_default().push((id, p, v));
            }
        }
        Self { frames }
    }

    pub fn at(&self, frame: u64) -> &[GhostRow<R>] {
        self.frames.get(&frame).map_or(&[], Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame_range(&self) -> Option<(u64, u64)> {
        Some((*self.frames.keys().next()?, *self.frames.keys().next_back()?))
    }
}

struct AgentUpdate<R> {
    agent: AgentState<R>,
    control: AgentControlState,
    profile: WeightProfile,
    terms: EnergyTerms<R>,
    evaluations: usize,
}

pub struct RunRecord<R> {
    pub trajectory: Trajectory<R>,
    pub reports: Vec<StepReport>,
    pub final_state: SwarmState<R>,
}

/// Immutable simulation setup; [`step`](Simulation::step) maps `S_t` to `S_{t+1}`.
pub struct Simulation<R> {
    dataset: ReferenceDataset<R>,
    params: SimParams<R>,
    danger_weights: Option<Weights<R>>,
    env: Environment<R>,
    noise: NoiseField<R>,
    ghosts: GhostReplay<R>,
    pool: Option<rayon::ThreadPool>,
}

impl<R: Real> Simulation<R> {
    pub fn new(
        dataset: ReferenceDataset<R>,
        params: SimParams<R>,
        env: Environment<R>,
        noise: NoiseField<R>,
    ) -> Result<Self, SimError> {
        params.validate()?;
        Ok(Self {
            dataset,
            params,
            danger_weights: None,
            env,
            noise,
            ghosts: GhostReplay::empty(),
            pool: None,
        })
    }

    /// Weights used by agents with a startle stimulus inside `d_danger`.
    pub fn with_danger_weights(mut self, weights: Option<Weights<R>>) -> Result<Self, SimError> {
        if let Some(w) = weights {
            SimParams {
                weights: w,
                ..self.params
            }
            .validate()?;
        }
        self.danger_weights = weights;
        Ok(self)
    }

    pub fn with_ghosts(mut self, ghosts: GhostReplay<R>) -> Self {
        self.ghosts = ghosts;
        self
    }

    /// Dedicated worker pool of `threads` workers; `None` uses the global pool.
    pub fn with_threads(mut self, threads: Option<usize>) -> Result<Self, SimError> {
        self.pool = match threads {
            None => None,
            Some(n) => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|e| SimError::Pool(e.to_string()))?,
            ),
        };
        Ok(self)
    }

    pub fn dataset(&self) -> &ReferenceDataset<R> {
        &self.dataset
    }

    pub fn params(&self) -> &SimParams<R> {
        &self.params
    }

    pub fn environment(&self) -> &Environment<R> {
        &self.env
    }

    pub fn noise(&self) -> &NoiseField<R> {
        &self.noise
    }

    pub fn ghosts(&self) -> &GhostReplay<R> {
        &self.ghosts
    }

    /// Initial noise and control directions for freshly placed agents.
    pub fn prime(&self, state: &mut SwarmState<R>) {
        let t = R::lit(state.frame as f64) * self.params.dt;
        for (agent, acs) in state.agents.iter_mut().zip(state.control.iter_mut()) {
            agent.noise_dir = self.noise.noise_direction(agent.position, t);
            let (dir, next) = control_direction(agent.position, acs, &self.env.paths);
            agent.control_dir = dir;
            *acs = next;
        }
    }

    pub fn step(&self, state: &SwarmState<R>) -> Result<(SwarmState<R>, StepReport), SimError> {
        let started = Instant::now();
        state.check()?;
        if state.is_empty() {
            return Err(SimError::EmptySwarm);
        }
        let n = state.len();
        let frame = state.frame;
        let ghosts = self.ghosts.at(frame);

        let mut positions: Vec<Vec3<R>> = state.agents.iter().map(|a| a.position).collect();
        let mut velocities: Vec<Vec3<R>> = state.agents.iter().map(|a| a.velocity).collect();
        positions.extend(ghosts.iter().map(|g| g.1));
        velocities.extend(ghosts.iter().map(|g| g.2));

        let grid = build_grid(&positions, self.params.grid_cell_size())?;
        let center = swarm_center(&state.agents);
        let active = self.env.active_at(frame);

        let work = |i: usize| self.update_agent(i, state, &positions, &velocities, &grid, center, &active);
        let updates: Vec<Result<AgentUpdate<R>, SimError>> = match &self.pool {
            Some(pool) => pool.install(|| (0..n).into_par_iter().map(work).collect()),
            None => (0..n).into_par_iter().map(work).collect(),
        };

        let mut next = SwarmState {
            frame: frame + 1,
            agents: Vec::with_capacity(n),
            control: Vec::with_capacity(n),
            weight_profiles: Vec::with_capacity(n),
        };
        let mut energy = EnergyTerms::<f64>::default();
        let mut evaluations = 0u64;
        let mut in_danger = 0;
        for update in updates {
            let u = update?;
            energy.accumulate(&EnergyTerms {
                repulsion: u.terms.repulsion.as_f64(),
                attract_neighbors: u.terms.attract_neighbors.as_f64(),
                attract_center: u.terms.attract_center.as_f64(),
                internal: u.terms.internal.as_f64(),
                environment: u.terms.environment.as_f64(),
                noise: u.terms.noise.as_f64(),
                user: u.terms.user.as_f64(),
            });
            evaluations += u.evaluations as u64;
            in_danger += usize::from(u.profile == WeightProfile::InDanger);
            next.agents.push(u.agent);
            next.control.push(u.control);
            next.weight_profiles.push(u.profile);
        }
        let report = StepReport {
            frame,
            total_energy: energy.total(),
            energy,
            evaluations,
            agents: n,
            in_danger,
            wall_time_s: started.elapsed().as_secs_f64(),
        };
        Ok((next, report))
    }

    #[allow(clippy::too_many_arguments)]
    fn update_agent(
        &self,
        i: usize,
        state: &SwarmState<R>,
        positions: &[Vec3<R>],
        velocities: &[Vec3<R>],
        grid: &SpatialGrid<R>,
        center: Vec3<R>,
        active: &[(StimulusKind, Vec3<R>)],
    ) -> Result<AgentUpdate<R>, SimError> {
        let agent = &state.agents[i];
        let p = &self.params;

        let stimuli = self.env.views(active, agent.position, p.d_danger);
        let danger = stimuli.iter().any(|s| s.in_danger);
        let (profile, weights) = match (danger, self.danger_weights) {
            (true, Some(w)) => (WeightProfile::InDanger, w),
            (true, None) => (WeightProfile::InDanger, p.weights),
            (false, _) => (WeightProfile::Base, p.weights),
        };
        let params = SimParams { weights, ..*p };

        let mut repulsion_neighbors = Vec::new();
        let mut attraction_neighbors = Vec::new();
        for j in grid.query_neighbors(positions, i, p.interaction_radius()) {
            let d = positions[j].distance(agent.position);
            if d <= p.d_rep {
                repulsion_neighbors.push((positions[j], velocities[j]));
            }
            if d >= p.d_att1 && d <= p.d_att2 {
                attraction_neighbors.push(positions[j]);
            }
        }
        let ctx = NeighborContext {
            repulsion_neighbors,
            attraction_neighbors,
            swarm_center: center,
            stimuli,
        };

        let chosen = select_velocity(agent, &ctx, &self.dataset, &params)
            .map_err(|source| SimError::Energy { agent: i, source })?;
        let velocity = chosen.sample.velocity;
        let position = agent.position + velocity * p.dt;
        let t_next = R::lit((state.frame + 1) as f64) * p.dt;
        let noise_dir = self.noise.noise_direction(position, t_next);
        let (control_dir, control) = control_direction(position, &state.control[i], &self.env.paths);

        Ok(AgentUpdate {
            agent: AgentState {
                position,
                velocity,
                noise_dir,
                control_dir,
            },
            control,
            profile,
            terms: chosen.terms,
            evaluations: chosen.evaluations,
        })
    }

    /// Advances `frames` steps, recording the initial state and every step.
    pub fn run(&self, initial: SwarmState<R>, frames: u64) -> Result<RunRecord<R>, SimError> {
        let mut trajectory = Trajectory::new();
        trajectory.frames.push(initial.to_frame());
        let mut reports = Vec::with_capacity(frames as usize);
        let mut state = initial;
        for _ in 0..frames {
            let (next, report) = self.step(&state)?;
            trajectory.frames.push(next.to_frame());
            reports.push(report);
            state = next;
        }
        Ok(RunRecord {
            trajectory,
            reports,
            final_state: state,
        })
    }
}

/// Energy-free baseline: every agent picks a uniformly random dataset velocity each frame.
pub fn random_selection_run<R: Real>(
    initial: &SwarmState<R>,
    dataset: &ReferenceDataset<R>,
    frames: u64,
    dt: R,
    seed: u64,
) -> Trajectory<R> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = initial.clone();
    let mut trajectory = Trajectory::new();
    trajectory.frames.push(state.to_frame());
    for _ in 0..frames {
        for agent in &mut state.agents {
            let pick = dataset.samples()[rng.gen_range(0..dataset.len())];
            agent.velocity = pick.velocity;
            agent.position += pick.velocity * dt;
        }
        state.frame += 1;
        trajectory.frames.push(state.to_frame());
    }
    trajectory
}
