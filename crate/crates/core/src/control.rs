//! Environment state: stimuli (attractors and startle dangers) and user-defined
//! keypoint paths that produce per-agent control directions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::Real;
use crate::vec3::Vec3;

/// Distance at which an agent counts as having reached its goal keypoint, in meters.
pub const DEFAULT_ARRIVAL_RADIUS: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("stimulus active window is inverted ({start} > {end})")]
    InvertedWindow { start: u64, end: u64 },
    #[error("control path needs at least 2 keypoints, got {0}")]
    TooFewKeypoints(usize),
    #[error("arrival radius must be > 0")]
    BadArrivalRadius,
    #[error("keypoints {0} and {1} are closer than the arrival radius")]
    KeypointsTooClose(usize, usize),
    #[error("scripted stimulus motion is empty")]
    EmptyMotion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StimulusKind {
    Attractor,
    Startle,
}

/// Scripted stimulus position as a function of the absolute frame number.
#[derive(Clone, Debug, PartialEq)]
pub enum Motion<R> {
    /// Piecewise-linear interpolation between `(frame, position)` keys, clamped at both ends.
    Keyframes(Vec<(u64, Vec3<R>)>),
    /// One position per frame starting at `start`, holding the last entry afterwards.
    Track { start: u64, positions: Vec<Vec3<R>> },
}

impl<R: Real> Motion<R> {
    pub fn position_at(&self, frame: u64) -> Vec3<R> {
        match self {
            Motion::Keyframes(keys) => {
                let i = keys.partition_point(|(f, _)| *f <= frame);
                if i == 0 {
                    return keys[0].1;
                }
                if i == keys.len() {
                    return keys[i - 1].1;
                }
                let (f0, p0) = keys[i - 1];
                let (f1, p1) = keys[i];
                let s = R::lit((frame - f0) as f64 / (f1 - f0) as f64);
                p0 + (p1 - p0) * s
            }
            Motion::Track { start, positions } => {
                let k = frame.saturating_sub(*start) as usize;
                positions[k.min(positions.len() - 1)]
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stimulus<R> {
    pub kind: StimulusKind,
    pub position: Vec3<R>,
    pub motion: Option<Motion<R>>,
    /// Inclusive frame interval during which the stimulus exists.
    pub active_window: (u64, u64),
}

impl<R: Real> Stimulus<R> {
    pub fn new(
        kind: StimulusKind,
        position: Vec3<R>,
        motion: Option<Motion<R>>,
        active_window: (u64, u64),
    ) -> Result<Self, ControlError> {
        let (start, end) = active_window;
        if start > end {
            return Err(ControlError::InvertedWindow { start, end });
        }
        match &motion {
            Some(Motion::Keyframes(k)) if k.is_empty() => return Err(ControlError::EmptyMotion),
            Some(Motion::Track { positions, .. }) if positions.is_empty() => return Err(ControlError::EmptyMotion),
            _ => {}
        }
        let mut motion = motion;
        if let Some(Motion::Keyframes(keys)) = &mut motion {
            keys.sort_by_key(|(f, _)| *f);
        }
        Ok(Self {
            kind,
            position,
            motion,
            active_window,
        })
    }

    pub fn is_active(&self, frame: u64) -> bool {
        (self.active_window.0..=self.active_window.1).contains(&frame)
    }

    pub fn position_at(&self, frame: u64) -> Vec3<R> {
        self.motion.as_ref().map_or(self.position, |m| m.position_at(frame))
    }
}

/// What one agent perceives of one stimulus at the current frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StimulusView<R> {
    pub kind: StimulusKind,
    pub position: Vec3<R>,
    /// True for startle stimuli within `d_danger` of the agent's current position.
    pub in_danger: bool,
}

/// Axis-aligned capture box whose faces act as startle stimuli.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingBox<R> {
    pub min: Vec3<R>,
    pub max: Vec3<R>,
}

impl<R: Real> BoundingBox<R> {
    /// Startle points for the faces near `p`: the projection onto the face when
    /// inside, the face reflected through `p` when outside, so either way the
    /// danger lies on the far side of the agent from the box interior.
    fn near_faces(&self, p: Vec3<R>, d_danger: R, out: &mut Vec<StimulusView<R>>) {
        for axis in 0..3 {
            for (bound, outward) in [(self.min[axis], -R::one()), (self.max[axis], R::one())] {
                let beyond = (p[axis] - bound) * outward;
                if beyond < -d_danger {
                    continue;
                }
                let mut q = p.to_array();
                q[axis] = if beyond > R::zero() {
                    p[axis] + (p[axis] - bound)
                } else {
                    bound
                };
                out.push(StimulusView {
                    kind: StimulusKind::Startle,
                    position: Vec3::from_array(q),
                    in_danger: true,
                });
            }
        }
    }
}

/// Active stimuli at `frame` with their scripted positions evaluated.
pub fn active_stimuli<R: Real>(env: &[Stimulus<R>], frame: u64) -> Vec<(StimulusKind, Vec3<R>)> {
    env.iter()
        .filter(|s| s.is_active(frame))
        .map(|s| (s.kind, s.position_at(frame)))
        .collect()
}

/// Per-agent view of pre-evaluated active stimuli.
pub fn views_for_agent<R: Real>(
    active: &[(StimulusKind, Vec3<R>)],
    agent_position: Vec3<R>,
    d_danger: R,
) -> Vec<StimulusView<R>> {
    active
        .iter()
        .map(|&(kind, position)| StimulusView {
            kind,
            position,
            in_danger: kind == StimulusKind::Startle && agent_position.distance(position) <= d_danger,
        })
        .collect()
}

pub fn stimulus_context<R: Real>(
    env: &[Stimulus<R>],
    frame: u64,
    agent_position: Vec3<R>,
    d_danger: R,
) -> Vec<StimulusView<R>> {
    views_for_agent(&active_stimuli(env, frame), agent_position, d_danger)
}

/// Everything outside the agents that shapes their choices.
#[derive(Clone, Debug, PartialEq)]
pub struct Environment<R> {
    pub stimuli: Vec<Stimulus<R>>,
    pub paths: Vec<ControlPath<R>>,
    pub bounds: Option<BoundingBox<R>>,
}

impl<R> Default for Environment<R> {
    fn default() -> Self {
        Self {
            stimuli: Vec::new(),
            paths: Vec::new(),
            bounds: None,
        }
    }
}

impl<R: Real> Environment<R> {
    pub fn active_at(&self, frame: u64) -> Vec<(StimulusKind, Vec3<R>)> {
        active_stimuli(&self.stimuli, frame)
    }

    /// Stimulus views for one agent, including bounding-box faces when enabled.
    pub fn views(
        &self,
        active: &[(StimulusKind, Vec3<R>)],
        agent_position: Vec3<R>,
        d_danger: R,
    ) -> Vec<StimulusView<R>> {
        let mut views = views_for_agent(active, agent_position, d_danger);
        if let Some(b) = &self.bounds {
            b.near_faces(agent_position, d_danger, &mut views);
        }
        views
    }
}

/// An ordered keypoint curve that agents traverse.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlPath<R> {
    keypoints: Vec<Vec3<R>>,
    pub bidirectional: bool,
    pub arrival_radius: R,
}

impl<R: Real> ControlPath<R> {
    pub fn new(keypoints: Vec<Vec3<R>>, bidirectional: bool, arrival_radius: R) -> Result<Self, ControlError> {
        if keypoints.len() < 2 {
            return Err(ControlError::TooFewKeypoints(keypoints.len()));
        }
        if !(arrival_radius > R::zero()) {
            return Err(ControlError::BadArrivalRadius);
        }
        for i in 0..keypoints.len() {
            // Closed loops also step from the last keypoint back to the first.
            let j = i + 1;
            let j = if j == keypoints.len() {
                if bidirectional {
                    break;
                }
                0
            } else {
                j
            };
            if keypoints[i].distance(keypoints[j]) <= arrival_radius {
                return Err(ControlError::KeypointsTooClose(i, j));
            }
        }
        Ok(Self {
            keypoints,
            bidirectional,
            arrival_radius,
        })
    }

    pub fn keypoints(&self) -> &[Vec3<R>] {
        &self.keypoints
    }

    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }
}

/// Per-agent traversal state for an assigned [`ControlPath`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AgentControlState {
    pub path: Option<usize>,
    pub goal_index: usize,
    /// Traversal sense, `1` or `-1`.
    pub direction: i8,
    /// Keypoint indices in the order the agent reached them.
    pub visited: Vec<usize>,
}

impl AgentControlState {
    pub fn unassigned() -> Self {
        Self {
            path: None,
            goal_index: 0,
            direction: 1,
            visited: Vec::new(),
        }
    }

    pub fn on_path(path: usize, goal_index: usize) -> Self {
        Self {
            path: Some(path),
            goal_index,
            direction: 1,
            visited: Vec::new(),
        }
    }

    /// Number of distinct keypoints reached so far.
    pub fn distinct_visits(&self) -> usize {
        let mut v = self.visited.clone();
        v.sort_unstable();
        v.dedup();
        v.len()
    }
}

/// Moves the goal one keypoint along the path.
///
/// Bidirectional paths reflect at either end; unidirectional paths wrap around.
pub fn advance_goal<R: Real>(acs: &AgentControlState, path: &ControlPath<R>) -> AgentControlState {
    let len = path.len() as isize;
    let mut next = acs.clone();
    let step = acs.direction as isize;
    let target = acs.goal_index as isize + step;
    if path.bidirectional {
        if (0..len).contains(&target) {
            next.goal_index = target as usize;
        } else {
            next.direction = -acs.direction;
            next.goal_index = (acs.goal_index as isize - step).clamp(0, len - 1) as usize;
        }
    } else {
        next.goal_index = target.rem_euclid(len) as usize;
    }
    next
}

/// Unit direction from `position` to the current goal, advancing the goal first
/// when it is within the arrival radius. `None` when no path is assigned.
pub fn control_direction<R: Real>(
    position: Vec3<R>,
    acs: &AgentControlState,
    paths: &[ControlPath<R>],
) -> (Option<Vec3<R>>, AgentControlState) {
    let Some(path) = acs.path.and_then(|i| paths.get(i)) else {
        return (None, acs.clone());
    };
    let mut state = acs.clone();
    let to_goal = path.keypoints[state.goal_index] - position;
    if to_goal.norm() <= path.arrival_radius {
        state.visited.push(state.goal_index);
        state = advance_goal(&state, path);
    }
    let dir = (path.keypoints[state.goal_index] - position).unit_or_zero();
    (Some(dir), state)
}
