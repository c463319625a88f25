//! Scaling harness: seconds per frame against swarm size at constant density.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::control::Environment;
use crate::energy::{AgentState, SimParams};
use crate::noise::NoiseField;
use crate::real::Real;
use crate::refdata::ReferenceDataset;
use crate::sim::{SimError, Simulation, SwarmState};
use crate::vec3::Vec3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchConfig {
    pub agent_counts: Vec<usize>,
    pub frames: u64,
    pub repetitions: usize,
    pub seed: u64,
    /// Swarm size whose start cube has side `reference_side`; other sizes keep its density.
    pub reference_agents: usize,
    pub reference_side: f64,
    pub threads: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            agent_counts: vec![100, 200, 400, 800],
            frames: 200,
            repetitions: 1,
            seed: 0,
            reference_agents: 100,
            reference_side: 1.0,
            threads: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub agents: usize,
    /// Seconds per frame of each repetition.
    pub timings: Vec<f64>,
    pub mean_seconds_per_frame: f64,
    pub evaluations_per_frame: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchResult {
    pub rows: Vec<BenchRow>,
    pub fit: LinearFit,
}

impl BenchResult {
    /// Mean seconds per frame of the largest size over the smallest.
    pub fn growth_ratio(&self) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => b.mean_seconds_per_frame / a.mean_seconds_per_frame,
            _ => f64::NAN,
        }
    }
}

/// Least-squares line through `(x, y)`; R² is 1 when `y` has no variance.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 && sxx > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    LinearFit {
        slope,
        intercept,
        r_squared,
    }
}

fn initial_swarm<R: Real>(n: usize, side: f64, ds: &ReferenceDataset<R>, seed: u64) -> SwarmState<R> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = side / 2.0;
    let agents = (0..n)
        .map(|_| {
            let p: Vec3<f64> = Vec3::new(
                rng.gen_range(-half..=half),
                rng.gen_range(-half..=half),
                rng.gen_range(-half..=half),
            );
            AgentState {
                position: p.cast(),
                velocity: ds.samples()[rng.gen_range(0..ds.len())].velocity,
                noise_dir: Vec3::zero(),
                control_dir: None,
            }
        })
        .collect();
    SwarmState::free(0, agents)
}

/// Times free-flight runs for each swarm size. Setup and priming are excluded from the timing.
pub fn run_bench<R: Real>(
    dataset: &ReferenceDataset<R>,
    params: SimParams<R>,
    cfg: &BenchConfig,
) -> Result<BenchResult, SimError> {
    if cfg.agent_counts.windows(2).any(|w| w[1] < w[0]) {
        return Err(SimError::InvalidParameter("agent counts must be ascending".into()));
    }
    if cfg.agent_counts.is_empty() || cfg.frames == 0 || cfg.repetitions == 0 {
        return Err(SimError::InvalidParameter(
            "need ≥ 1 agent count, frame and repetition".into(),
        ));
    }
    let mut rows = Vec::with_capacity(cfg.agent_counts.len());
    for &n in &cfg.agent_counts {
        let side = cfg.reference_side * (n as f64 / cfg.reference_agents as f64).cbrt();
        let sim = Simulation::new(
            dataset.clone(),
            params,
            Environment::default(),
            NoiseField::with_seed(cfg.seed),
        )?
        .with_threads(cfg.threads)?;
        let mut timings = Vec::with_capacity(cfg.repetitions);
        let mut evaluations = 0u64;
        for rep in 0..cfg.repetitions {
            let mut state = initial_swarm(n, side, dataset, cfg.seed.wrapping_add(rep as u64));
            sim.prime(&mut state);
            let started = Instant::now();
            for _ in 0..cfg.frames {
                let (next, report) = sim.step(&state)?;
                evaluations += report.evaluations;
                state = next;
            }
            timings.push(started.elapsed().as_secs_f64() / cfg.frames as f64);
        }
        rows.push(BenchRow {
            agents: n,
            mean_seconds_per_frame: timings.iter().sum::<f64>() / timings.len() as f64,
            timings,
            evaluations_per_frame: evaluations as f64 / (cfg.frames as f64 * cfg.repetitions as f64),
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.agents as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.mean_seconds_per_frame).collect();
    Ok(BenchResult {
        fit: linear_fit(&x, &y),
        rows,
    })
}
