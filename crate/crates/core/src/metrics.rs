//! Distribution statistics over trajectories and a 1D Wasserstein distance
//! between fixed-edge histograms.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::real::Real;
use crate::trajectory::Trajectory;
use crate::vec3::Vec3;

pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("frame {frame} has {agents} agent(s); minimum distance needs at least 2")]
    TooFewAgents { frame: u64, agents: usize },
    #[error("need at least {needed} frames, got {got}")]
    TooFewFrames { needed: usize, got: usize },
    #[error("histograms have different bin edges")]
    MismatchedEdges,
    #[error("bin count must be at least 1")]
    NoBins,
    #[error("bin edges must be finite and strictly ascending")]
    BadEdges,
    #[error("value {0} lies outside the histogram range")]
    OutOfRange(f64),
    #[error("no values to histogram")]
    Empty,
    #[error("dt must be positive and finite")]
    BadDt,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram1D {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub densities: Vec<f64>,
}

impl Histogram1D {
    /// `bins` equal-width bins spanning `[lo, hi]`.
    pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Result<Vec<f64>, MetricsError> {
        if bins == 0 {
            return Err(MetricsError::NoBins);
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(MetricsError::BadEdges);
        }
        let w = (hi - lo) / bins as f64;
        let mut edges: Vec<f64> = (0..bins).map(|i| lo + w * i as f64).collect();
        edges.push(hi);
        Ok(edges)
    }

    /// Counts `values` into `edges`. Values equal to the last edge land in the last bin.
    pub fn from_values(values: &[f64], edges: Vec<f64>) -> Result<Self, MetricsError> {
        if edges.len() < 2 {
            return Err(MetricsError::NoBins);
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MetricsError::BadEdges);
        }
        let bins = edges.len() - 1;
        let (lo, hi) = (edges[0], edges[bins]);
        let mut counts = vec![0u64; bins];
        for &x in values {
            if !(x >= lo && x <= hi) {
                return Err(MetricsError::OutOfRange(x));
            }
            let k = edges[1..bins].partition_point(|&e| e <= x);
            counts[k] += 1;
        }
        let total: u64 = counts.iter().sum();
        let densities = if total == 0 {
            vec![0.0; bins]
        } else {
            counts.iter().map(|&c| c as f64 / total as f64).collect()
        };
        Ok(Self {
            bin_edges: edges,
            counts,
            densities,
        })
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// First Wasserstein distance between two histograms, with mass at bin centers.
pub fn distribution_distance(a: &Histogram1D, b: &Histogram1D) -> Result<f64, MetricsError> {
    if a.bin_edges != b.bin_edges {
        return Err(MetricsError::MismatchedEdges);
    }
    let centers = a.centers();
    let mut cdf = 0.0;
    let mut dist = 0.0;
    for k in 0..centers.len().saturating_sub(1) {
        cdf += a.densities[k] - b.densities[k];
        dist += cdf.abs() * (centers[k + 1] - centers[k]);
    }
    Ok(dist)
}

/// Nearest-other-agent distance for every agent in every frame.
pub fn min_distance_series<R: Real>(trajectory: &Trajectory<R>) -> Result<Vec<f64>, MetricsError> {
    let mut out = Vec::with_capacity(trajectory.row_count());
    for f in &trajectory.frames {
        if f.rows.len() < 2 {
            return Err(MetricsError::TooFewAgents {
                frame: f.frame,
                agents: f.rows.len(),
            });
        }
        let pos: Vec<Vec3<f64>> = f.rows.iter().map(|r| r.position.cast()).collect();
        for (i, p) in pos.iter().enumerate() {
            let d = pos
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| p.distance(*q))
                .fold(f64::INFINITY, f64::min);
            out.push(d);
        }
    }
    Ok(out)
}

fn velocity_tracks<R: Real>(trajectory: &Trajectory<R>) -> BTreeMap<usize, Vec<(u64, Vec3<f64>)>> {
    let mut tracks: BTreeMap<usize, Vec<(u64, Vec3<f64>)>> = BTreeMap::new();
    for (frame, r) in trajectory.rows() {
        tracks.entry(r.agent_id).or_default().push((frame, r.velocity.cast()));
    }
    tracks
}

/// Forward differences of each agent's recorded velocity over consecutive frames, divided by `dt`.
pub fn accel_series<R: Real>(trajectory: &Trajectory<R>, dt: f64) -> Result<Vec<Vec3<f64>>, MetricsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(MetricsError::BadDt);
    }
    if trajectory.frames.len() < 3 {
        return Err(MetricsError::TooFewFrames {
            needed: 3,
            got: trajectory.frames.len(),
        });
    }
    let mut out = Vec::new();
    for track in velocity_tracks(trajectory).values() {
        for w in track.windows(2) {
            if w[1].0 == w[0].0 + 1 {
                out.push((w[1].1 - w[0].1) / dt);
            }
        }
    }
    Ok(out)
}

/// Speeds of every recorded row.
pub fn speed_series<R: Real>(trajectory: &Trajectory<R>) -> Vec<f64> {
    trajectory.rows().map(|(_, r)| r.velocity.norm().as_f64()).collect()
}

/// The five statistics compared between trajectories.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesSet {
    pub speed: Vec<f64>,
    pub min_distance: Vec<f64>,
    pub accel: [Vec<f64>; 3],
}

impl SeriesSet {
    pub fn from_trajectory<R: Real>(trajectory: &Trajectory<R>, dt: f64) -> Result<Self, MetricsError> {
        let acc = accel_series(trajectory, dt)?;
        Ok(Self {
            speed: speed_series(trajectory),
            min_distance: min_distance_series(trajectory)?,
            accel: [0, 1, 2].map(|k| acc.iter().map(|a| a[k]).collect()),
        })
    }

    fn series(&self) -> [&[f64]; 5] {
        [
            &self.speed,
            &self.min_distance,
            &self.accel[0],
            &self.accel[1],
            &self.accel[2],
        ]
    }
}

pub const STATISTIC_NAMES: [&str; 5] = ["speed", "min_distance", "accel_x", "accel_y", "accel_z"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Distances {
    pub speed: f64,
    pub min_distance: f64,
    pub accel_x: f64,
    pub accel_y: f64,
    pub accel_z: f64,
}

impl Distances {
    pub fn to_array(&self) -> [f64; 5] {
        [self.speed, self.min_distance, self.accel_x, self.accel_y, self.accel_z]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramPair {
    pub name: &'static str,
    pub candidate: Histogram1D,
    pub reference: Histogram1D,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistributionReport {
    pub bins: usize,
    pub histograms: Vec<HistogramPair>,
    pub distances: Distances,
}

/// Edges spanning the pooled range of two series; a degenerate range is widened by 0.5 on each side.
pub fn pooled_edges(a: &[f64], b: &[f64], bins: usize) -> Result<Vec<f64>, MetricsError> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in a.iter().chain(b) {
        if !x.is_finite() {
            return Err(MetricsError::OutOfRange(x));
        }
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if lo > hi {
        return Err(MetricsError::Empty);
    }
    if hi == lo {
        lo -= 0.5;
        hi += 0.5;
    }
    Histogram1D::uniform_edges(lo, hi, bins)
}

/// Histograms and distances for two series sets over shared edges.
pub fn compare(candidate: &SeriesSet, reference: &SeriesSet, bins: usize) -> Result<DistributionReport, MetricsError> {
    let mut histograms = Vec::with_capacity(5);
    let mut d = [0.0; 5];
    for (k, (a, b)) in candidate.series().into_iter().zip(reference.series()).enumerate() {
        let edges = pooled_edges(a, b, bins)?;
        let ha = Histogram1D::from_values(a, edges.clone())?;
        let hb = Histogram1D::from_values(b, edges)?;
        d[k] = distribution_distance(&ha, &hb)?;
        histograms.push(HistogramPair {
            name: STATISTIC_NAMES[k],
            candidate: ha,
            reference: hb,
        });
    }
    Ok(DistributionReport {
        bins,
        histograms,
        distances: Distances {
            speed: d[0],
            min_distance: d[1],
            accel_x: d[2],
            accel_y: d[3],
            accel_z: d[4],
        },
    })
}

pub fn report<R: Real>(
    trajectory: &Trajectory<R>,
    reference: &Trajectory<R>,
    bins: usize,
    dt: f64,
) -> Result<DistributionReport, MetricsError> {
    compare(
        &SeriesSet::from_trajectory(trajectory, dt)?,
        &SeriesSet::from_trajectory(reference, dt)?,
        bins,
    )
}
