//! Declarative scenario files (TOML) and their expansion into a ready-to-run
//! [`Simulation`] plus initial [`SwarmState`].
//!
//! Paths inside a scenario are resolved relative to the scenario file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{
    AgentControlState, BoundingBox, ControlError, ControlPath, Environment, Motion, Stimulus, StimulusKind,
    DEFAULT_ARRIVAL_RADIUS,
};
use crate::energy::{
    AgentState, SimParams, Weights, DEFAULT_D_ATT1, DEFAULT_D_ATT2, DEFAULT_D_DANGER, DEFAULT_D_REP, DEFAULT_RHO,
};
use crate::io::{self, IoError};
use crate::noise::{NoiseError, NoiseField, DEFAULT_SPATIAL_SCALE, DEFAULT_TIME_SCALE};
use crate::real::Real;
use crate::refdata::{group_tracks, ReferenceDataset, TrackletPoint, DEFAULT_SAMPLE_BUDGET, DEFAULT_WINDOW};
use crate::sim::{SimError, Simulation, SwarmState};
use crate::synth::{generate_tracklets, SynthConfig};
use crate::vec3::Vec3;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("scenario is invalid: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub agents: usize,
    pub frames: u64,
    pub seed: u64,
    /// Dataset CSV; its metadata sidecar supplies `dt` and the group count.
    pub dataset: PathBuf,
    #[serde(default)]
    pub params: ParamsSpec,
    pub weights: Weights<f64>,
    /// Weights for agents with a startle stimulus inside `d_danger`.
    #[serde(default)]
    pub danger_weights: Option<Weights<f64>>,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub init: InitSpec,
    #[serde(default)]
    pub stimuli: Vec<StimulusSpec>,
    #[serde(default)]
    pub paths: Vec<PathSpec>,
    #[serde(default)]
    pub bounds: Option<BoxSpec>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSpec {
    pub rho: f64,
    /// Defaults to the dataset's `dt`.
    pub dt: Option<f64>,
    pub d_rep: f64,
    pub d_att1: f64,
    pub d_att2: f64,
    pub d_danger: f64,
    /// Defaults to the dataset's group count.
    pub group_count: Option<usize>,
    pub window: usize,
    pub sample_budget: usize,
    pub literal_accel_prediction: bool,
}

impl Default for ParamsSpec {
    fn default() -> Self {
        Self {
            rho: DEFAULT_RHO,
            dt: None,
            d_rep: DEFAULT_D_REP,
            d_att1: DEFAULT_D_ATT1,
            d_att2: DEFAULT_D_ATT2,
            d_danger: DEFAULT_D_DANGER,
            group_count: None,
            window: DEFAULT_WINDOW,
            sample_budget: DEFAULT_SAMPLE_BUDGET,
            literal_accel_prediction: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Defaults to the scenario seed.
    pub seed: Option<u64>,
    pub spatial_scale: f64,
    pub time_scale: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            seed: None,
            spatial_scale: DEFAULT_SPATIAL_SCALE,
            time_scale: DEFAULT_TIME_SCALE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    /// Uniform positions in a box, velocities drawn from the dataset.
    RandomBox { min: [f64; 3], max: [f64; 3] },
    /// Agents spread round-robin over the keypoints of their assigned path.
    NearKeypoints {
        #[serde(default)]
        spread: Option<f64>,
    },
    /// Endpoints of recorded tracklets; `agents` caps how many are used.
    Tracklets { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StimulusSpec {
    pub kind: StimulusKind,
    #[serde(default)]
    pub position: [f64; 3],
    /// Inclusive `[first, last]` active frames.
    pub active: [u64; 2],
    /// `[frame, x, y, z]` keys, linearly interpolated.
    #[serde(default)]
    pub keyframes: Option<Vec<[f64; 4]>>,
    /// Smooth random flight starting at `position`.
    #[serde(default)]
    pub wander: Option<WanderSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WanderSpec {
    pub seed: u64,
    pub speed: f64,
    pub center_pull: f64,
}

impl Default for WanderSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            speed: 0.2,
            center_pull: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub keypoints: Vec<[f64; 3]>,
    #[serde(default)]
    pub bidirectional: bool,
    #[serde(default = "default_arrival_radius")]
    pub arrival_radius: f64,
}

fn default_arrival_radius() -> f64 {
    DEFAULT_ARRIVAL_RADIUS
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

fn v3<R: Real>(a: [f64; 3]) -> Vec3<R> {
    Vec3::new(R::lit(a[0]), R::lit(a[1]), R::lit(a[2]))
}

/// A scenario expanded into runnable parts.
pub struct Prepared<R> {
    pub simulation: Simulation<R>,
    pub initial: SwarmState<R>,
    pub frames: u64,
}

/// Last-frame state of each usable tracklet prefix.
#[derive(Clone, Debug, PartialEq)]
pub struct PrefixEnd<R> {
    pub track_id: i64,
    pub frame: u64,
    pub agent: AgentState<R>,
}

/// Agent states at the end of each tracklet. A track qualifies when its last
/// two points are consecutive frames with finite positions; the velocity is
/// their forward difference. Returns the qualifying ends and the dropped track ids.
pub fn prefix_ends<R: Real>(points: &[TrackletPoint<R>], dt: R) -> (Vec<PrefixEnd<R>>, Vec<i64>) {
    let (tracks, _) = group_tracks(points);
    let mut ends = Vec::new();
    let mut dropped = Vec::new();
    for t in tracks {
        let n = t.len();
        let usable = n >= 2
            && t[n - 1].frame == t[n - 2].frame + 1
            && t[n - 1].position.is_finite()
            && t[n - 2].position.is_finite();
        if !usable {
            dropped.push(t[0].track_id);
            continue;
        }
        let (a, b) = (t[n - 2], t[n - 1]);
        ends.push(PrefixEnd {
            track_id: b.track_id,
            frame: b.frame,
            agent: AgentState {
                position: b.position,
                velocity: (b.position - a.position) / dt,
                noise_dir: Vec3::zero(),
                control_dir: None,
            },
        });
    }
    (ends, dropped)
}

impl Scenario {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, toml::de::Error> {
        let mut s: Scenario = toml::from_str(text)?;
        s.base_dir = base_dir.to_path_buf();
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|source| ScenarioError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.resolve(&self.dataset)
    }

    /// Simulation parameters given the dataset's `dt` and group count.
    pub fn sim_params<R: Real>(&self, dataset_dt: f64, dataset_groups: usize) -> SimParams<R> {
        let p = &self.params;
        SimParams {
            rho: R::lit(p.rho),
            dt: R::lit(p.dt.unwrap_or(dataset_dt)),
            weights: Weights::from_array(self.weights.to_array().map(R::lit)),
            d_rep: R::lit(p.d_rep),
            d_att1: R::lit(p.d_att1),
            d_att2: R::lit(p.d_att2),
            d_danger: R::lit(p.d_danger),
            group_count: p.group_count.unwrap_or(dataset_groups),
            window: p.window,
            sample_budget: p.sample_budget,
            literal_accel_prediction: p.literal_accel_prediction,
        }
    }

    pub fn environment<R: Real>(&self, dt: f64) -> Result<Environment<R>, ScenarioError> {
        let mut stimuli = Vec::with_capacity(self.stimuli.len());
        for s in &self.stimuli {
            let motion = match (&s.keyframes, &s.wander) {
                (Some(_), Some(_)) => {
                    return Err(ScenarioError::Invalid(
                        "a stimulus cannot have both keyframes and wander".into(),
                    ))
                }
                (Some(keys), None) => Some(Motion::Keyframes(
                    keys.iter()
                        .map(|k| {
                            if k[0] < 0.0 || k[0].fract() != 0.0 {
                                Err(ScenarioError::Invalid(format!(
                                    "keyframe frame {} is not a whole number",
                                    k[0]
                                )))
                            } else {
                                Ok((k[0] as u64, v3([k[1], k[2], k[3]])))
                            }
                        })
                        .collect::<Result<_, _>>()?,
                )),
                (None, Some(w)) => Some(wander_motion(s, w, dt)),
                (None, None) => None,
            };
            stimuli.push(Stimulus::new(
                s.kind,
                v3(s.position),
                motion,
                (s.active[0], s.active[1]),
            )?);
        }
        let paths = self
            .paths
            .iter()
            .map(|p| {
                ControlPath::new(
                    p.keypoints.iter().map(|&k| v3(k)).collect(),
                    p.bidirectional,
                    R::lit(p.arrival_radius),
                )
            })
            .collect::<Result<_, _>>()?;
        let bounds = self.bounds.map(|b| BoundingBox {
            min: v3(b.min),
            max: v3(b.max),
        });
        Ok(Environment { stimuli, paths, bounds })
    }

    /// Loads the referenced dataset and prepares the run.
    pub fn prepare<R: Real>(&self, threads: Option<usize>) -> Result<Prepared<R>, ScenarioError> {
        let (dataset, _) = io::read_dataset::<R>(&self.dataset_path(), self.params.group_count)?;
        self.prepare_with_dataset(dataset, threads)
    }

    /// Prepares the run against an already built dataset.
    pub fn prepare_with_dataset<R: Real>(
        &self,
        dataset: ReferenceDataset<R>,
        threads: Option<usize>,
    ) -> Result<Prepared<R>, ScenarioError> {
        if self.agents == 0 {
            return Err(ScenarioError::Invalid("agents must be ≥ 1".into()));
        }
        let params = self.sim_params::<R>(dataset.dt().as_f64(), dataset.group_count());
        let env = self.environment::<R>(params.dt.as_f64())?;
        let noise = NoiseField::new(
            self.noise.seed.unwrap_or(self.seed),
            R::lit(self.noise.spatial_scale),
            R::lit(self.noise.time_scale),
            R::lit(self.noise.spatial_scale / 1000.0),
        )?;
        let initial = self.initial_state(&dataset, &env, params.dt)?;
        let danger = self
            .danger_weights
            .map(|w| Weights::from_array(w.to_array().map(R::lit)));
        let simulation = Simulation::new(dataset, params, env, noise)?
            .with_danger_weights(danger)?
            .with_threads(threads)?;
        let mut initial = initial;
        simulation.prime(&mut initial);
        Ok(Prepared {
            simulation,
            initial,
            frames: self.frames,
        })
    }

    fn initial_state<R: Real>(
        &self,
        dataset: &ReferenceDataset<R>,
        env: &Environment<R>,
        dt: R,
    ) -> Result<SwarmState<R>, ScenarioError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let draw_velocity = |rng: &mut ChaCha8Rng| dataset.samples()[rng.gen_range(0..dataset.len())].velocity;
        let n = self.agents;
        let npaths = env.paths.len();
        let mut agents = Vec::with_capacity(n);
        let mut control = Vec::with_capacity(n);
        let mut frame = 0;
        match &self.init {
            InitSpec::RandomBox { min, max } => {
                for k in 0..3 {
                    if !(min[k] <= max[k]) {
                        return Err(ScenarioError::Invalid("init box min exceeds max".into()));
                    }
                }
                for i in 0..n {
                    let p: [f64; 3] = std::array::from_fn(|k| rng.gen_range(min[k]..=max[k]));
                    let position = v3(p);
                    agents.push(AgentState {
                        position,
                        velocity: draw_velocity(&mut rng),
                        noise_dir: Vec3::zero(),
                        control_dir: None,
                    });
                    control.push(if npaths == 0 {
                        AgentControlState::unassigned()
                    } else {
                        let path = i % npaths;
                        AgentControlState::on_path(path, nearest_keypoint(&env.paths[path], position))
                    });
                }
            }
            InitSpec::NearKeypoints { spread } => {
                if npaths == 0 {
                    return Err(ScenarioError::Invalid(
                        "near_keypoints init needs at least one path".into(),
                    ));
                }
                for i in 0..n {
                    let path_index = i % npaths;
                    let path = &env.paths[path_index];
                    let goal = (i / npaths) % path.len();
                    let radius = spread.map_or(path.arrival_radius * R::lit(2.0), R::lit);
                    let dir: Vec3<f64> = Vec3::new(
                        rng.gen_range(-1.0..=1.0),
                        rng.gen_range(-1.0..=1.0),
                        rng.gen_range(-1.0..=1.0),
                    )
                    .unit_or_zero();
                    let offset = dir.cast::<R>() * (radius * R::lit(rng.gen_range(0.0..=1.0)));
                    agents.push(AgentState {
                        position: path.keypoints()[goal] + offset,
                        velocity: draw_velocity(&mut rng),
                        noise_dir: Vec3::zero(),
                        control_dir: None,
                    });
                    control.push(AgentControlState::on_path(path_index, goal));
                }
            }
            InitSpec::Tracklets { path } => {
                let file = io::read_tracklets::<R>(&self.resolve(path))?;
                let (ends, _) = prefix_ends(&file.points, dt);
                if ends.is_empty() {
                    return Err(ScenarioError::Invalid(
                        "no tracklet has two consecutive final frames".into(),
                    ));
                }
                frame = ends.iter().map(|e| e.frame).max().unwrap_or(0);
                for (i, e) in ends.into_iter().take(n).enumerate() {
                    control.push(if npaths == 0 {
                        AgentControlState::unassigned()
                    } else {
                        let path = i % npaths;
                        AgentControlState::on_path(path, nearest_keypoint(&env.paths[path], e.agent.position))
                    });
                    agents.push(e.agent);
                }
            }
        }
        Ok(SwarmState::new(frame, agents, control)?)
    }
}

fn nearest_keypoint<R: Real>(path: &ControlPath<R>, p: Vec3<R>) -> usize {
    let mut best = (R::infinity(), 0);
    for (i, k) in path.keypoints().iter().enumerate() {
        let d = k.distance(p);
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

fn wander_motion<R: Real>(s: &StimulusSpec, w: &WanderSpec, dt: f64) -> Motion<R> {
    let len = (s.active[1] - s.active[0] + 1) as usize;
    let cfg = SynthConfig {
        tracks: 1,
        min_len: len,
        max_len: len,
        dt,
        mean_speed: w.speed,
        speed_spread: 0.0,
        center_pull: w.center_pull,
        start_half_side: 0.0,
        gap_probability: 0.0,
        seed: w.seed,
        ..SynthConfig::default()
    };
    let origin = v3::<R>(s.position);
    let positions = generate_tracklets::<R>(&cfg)
        .into_iter()
        .map(|p| p.position + origin)
        .collect();
    Motion::Track {
        start: s.active[0],
        positions,
    }
}

/// Groups every point by track id, keeping frame order.
pub fn tracks_by_id<R: Real>(points: &[TrackletPoint<R>]) -> BTreeMap<i64, Vec<(u64, Vec3<R>)>> {
    let (tracks, _) = group_tracks(points);
    tracks
        .into_iter()
        .map(|t| (t[0].track_id, t.iter().map(|p| (p.frame, p.position)).collect()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refdata::DataSample;

    const MINIMAL: &str = r#"
name = "t"
agents = 5
frames = 3
seed = 4
dataset = "d.csv"

[weights]
rep = 1.0
oa = 1.0
cos = 0.05
dir = 1.0
acc = 1.0
env = 0.0
noise = 0.2
user = 0.0

[init]
kind = "random_box"
min = [0.0, 0.0, 0.0]
max = [0.2, 0.2, 0.2]
"#;

    fn tiny_dataset() -> ReferenceDataset<f64> {
        let samples = (0..30)
            .map(|i| {
                DataSample::new(
                    Vec3::new(0.01 * i as f64, 0.1, 0.0),
                    Vec3::new(0.0, 0.0, 0.1 * i as f64),
                )
            })
            .collect();
        ReferenceDataset::build(samples, 5, 1.0 / 60.0).unwrap()
    }

    #[test]
    fn parses_and_prepares() {
        let s = Scenario::from_toml(MINIMAL, Path::new("/base")).unwrap();
        assert_eq!(s.dataset_path(), PathBuf::from("/base/d.csv"));
        assert_eq!(s.weights, Weights::aggregation());
        let ds = tiny_dataset();
        let prep = s.prepare_with_dataset(ds.clone(), None).unwrap();
        assert_eq!(prep.initial.len(), 5);
        for a in &prep.initial.agents {
            assert!(ds.contains_velocity(a.velocity));
            assert!((a.noise_dir.norm() - 1.0).abs() < 1e-9);
            for k in 0..3 {
                assert!((0.0..=0.2).contains(&a.position[k]));
            }
        }
        assert_eq!(prep.simulation.params().group_count, 5);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = MINIMAL.replace("seed = 4", "seed = 4\nbogus = 1");
        assert!(Scenario::from_toml(&text, Path::new(".")).is_err());
    }

    #[test]
    fn missing_dataset_is_an_io_error() {
        let s = Scenario::from_toml(MINIMAL, Path::new("/nonexistent")).unwrap();
        assert!(matches!(s.prepare::<f64>(None), Err(ScenarioError::Io(_))));
    }

    #[test]
    fn near_keypoint_agents_start_by_their_keypoint() {
        let text = MINIMAL.replace(
            "[init]\nkind = \"random_box\"\nmin = [0.0, 0.0, 0.0]\nmax = [0.2, 0.2, 0.2]",
            "[init]\nkind = \"near_keypoints\"\n\n[[paths]]\nkeypoints = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0]]\n",
        );
        let s = Scenario::from_toml(&text, Path::new(".")).unwrap();
        let prep = s.prepare_with_dataset(tiny_dataset(), None).unwrap();
        let path = &prep.simulation.environment().paths[0];
        for (i, a) in prep.initial.agents.iter().enumerate() {
            assert!(a.position.distance(path.keypoints()[i % 3]) <= 0.1 + 1e-12);
            assert!(a.control_dir.is_some());
        }
    }

    #[test]
    fn wander_stimulus_moves_smoothly() {
        let text = format!(
            "{MINIMAL}\n[[stimuli]]\nkind = \"attractor\"\nposition = [0.1, 0.1, 0.1]\nactive = [10, 200]\nwander = {{ seed = 3, speed = 0.2 }}\n"
        );
        let s = Scenario::from_toml(&text, Path::new(".")).unwrap();
        let env = s.environment::<f64>(1.0 / 60.0).unwrap();
        let st = &env.stimuli[0];
        assert_eq!(st.position_at(10), Vec3::new(0.1, 0.1, 0.1));
        for f in 10..200 {
            assert!(st.position_at(f).distance(st.position_at(f + 1)) < 0.05);
        }
        assert!(st.position_at(10).distance(st.position_at(200)) > 0.0);
    }

    #[test]
    fn prefix_ends_use_final_difference() {
        let pts = vec![
            TrackletPoint {
                track_id: 1,
                frame: 0,
                position: Vec3::new(0.0, 0.0, 0.0),
            },
            TrackletPoint {
                track_id: 1,
                frame: 1,
                position: Vec3::new(0.1, 0.0, 0.0),
            },
            TrackletPoint {
                track_id: 1,
                frame: 2,
                position: Vec3::new(0.3, 0.0, 0.0),
            },
            TrackletPoint {
                track_id: 2,
                frame: 0,
                position: Vec3::new(0.0, 0.0, 0.0),
            },
            TrackletPoint {
                track_id: 3,
                frame: 0,
                position: Vec3::new(0.0, 0.0, 0.0),
            },
            TrackletPoint {
                track_id: 3,
                frame: 5,
                position: Vec3::new(0.0, 0.0, 0.0),
            },
        ];
        let (ends, dropped) = prefix_ends(&pts, 0.5);
        assert_eq!(dropped, vec![2, 3]);
        assert_eq!(ends.len(), 1);
        assert_eq!(ends[0].frame, 2);
        assert!((ends[0].agent.velocity - Vec3::new(0.4, 0.0, 0.0)).norm() < 1e-12);
    }
}
