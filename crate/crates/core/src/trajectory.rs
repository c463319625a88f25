use crate::real::Real;
use crate::vec3::Vec3;

/// One agent's recorded state in one frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRow<R> {
    pub agent_id: usize,
    pub position: Vec3<R>,
    pub velocity: Vec3<R>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryFrame<R> {
    pub frame: u64,
    pub rows: Vec<TrajectoryRow<R>>,
}

/// Per-frame positions and velocities, frames ascending.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory<R> {
    pub frames: Vec<TrajectoryFrame<R>>,
}

impl<R: Real> Trajectory<R> {
    pub fn new() -> Self {
        Self { frames: Vec::new() }
    }

    pub fn row_count(&self) -> usize {
        self.frames.iter().map(|f| f.rows.len()).sum()
    }

    pub fn rows(&self) -> impl Iterator<Item = (u64, &TrajectoryRow<R>)> {
        self.frames
            .iter()
            .flat_map(|f| f.rows.iter().map(move |r| (f.frame, r)))
    }

    /// Builds a trajectory from unordered `(frame, row)` records.
    pub fn from_rows(rows: impl IntoIterator<Item = (u64, TrajectoryRow<R>)>) -> Self {
        let mut by_frame: std::collections::BTreeMap<u64, Vec<TrajectoryRow<R>>> = Default::default();
        for (f, r) in rows {
            by_frame.entry(f).or_default().push(r);
        }
        let frames = by_frame
            .into_iter()
            .map(|(frame, mut rows)| {
                rows.sort_by_key(|r| r.agent_id);
                TrajectoryFrame { frame, rows }
            })
            .collect();
        Self { frames }
    }
}
