//! Reference motion data: tracklet ingestion, forward-difference estimation of
//! (velocity, acceleration) samples, and the speed-bucketed dataset used as the
//! candidate pool during simulation.

use std::collections::BTreeMap;
use std::ops::Range;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::real::Real;
use crate::vec3::Vec3;

pub const DEFAULT_GROUP_COUNT: usize = 10;
pub const DEFAULT_WINDOW: usize = 1;
pub const DEFAULT_SAMPLE_BUDGET: usize = 300;
/// Capture interval assumed for synthetic data, in seconds.
pub const DEFAULT_DT: f64 = 1.0 / 60.0;

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("reference dataset is empty")]
    EmptyDataset,
    #[error("track {track_id}: frame {frame} does not follow frame {previous}")]
    UnorderedFrames { track_id: i64, previous: u64, frame: u64 },
    #[error("sample {index} has non-finite components")]
    NonFiniteSample { index: usize },
}

/// One observed point of a tracklet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackletPoint<R> {
    pub track_id: i64,
    pub frame: u64,
    pub position: Vec3<R>,
}

/// One (velocity, acceleration) pair with its cached speed key.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DataSample<R> {
    pub velocity: Vec3<R>,
    pub acceleration: Vec3<R>,
    pub speed: R,
}

impl<R: Real> DataSample<R> {
    pub fn new(velocity: Vec3<R>, acceleration: Vec3<R>) -> Self {
        Self {
            velocity,
            acceleration,
            speed: velocity.norm(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.velocity.is_finite() && self.acceleration.is_finite() && self.speed.is_finite()
    }
}

/// Bookkeeping produced by [`estimate_samples`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IngestSummary {
    pub tracks: usize,
    pub segments: usize,
    /// Segments with fewer than three points; they yield no samples.
    pub short_segments: usize,
    pub rejected_non_finite: usize,
    pub samples: usize,
}

#[derive(Clone, Debug)]
pub struct Estimate<R> {
    pub samples: Vec<DataSample<R>>,
    pub summary: IngestSummary,
}

/// Groups a flat point list by `track_id` (ascending) and orders each track by frame.
///
/// Returns the tracks and the number of dropped duplicate-frame points.
pub fn group_tracks<R: Real>(points: &[TrackletPoint<R>]) -> (Vec<Vec<TrackletPoint<R>>>, usize) {
    let mut by_id: BTreeMap<i64, Vec<TrackletPoint<R>>> = BTreeMap::new();
    for p in points {
        by_id.entry(p.track_id).or_default().push(*p);
    }
    let mut duplicates = 0;
    let tracks = by_id
        .into_values()
        .map(|mut track| {
            track.sort_by_key(|p| p.frame);
            let before = track.len();
            track.dedup_by_key(|p| p.frame);
            duplicates += before - track.len();
            track
        })
        .collect();
    (tracks, duplicates)
}

/// Forward-difference estimation over every track.
///
/// Each track is split at frame gaps and at non-finite points; every segment of
/// `m ≥ 3` consecutive frames yields `m − 2` samples with
/// `v_t = (p_{t+1} − p_t)/dt` and `a_t = (v_{t+1} − v_t)/dt`.
pub fn estimate_samples<R: Real>(tracks: &[Vec<TrackletPoint<R>>], dt: R) -> Result<Estimate<R>, DataError> {
    if !(dt > R::zero()) || !dt.is_finite() {
        return Err(DataError::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    let mut summary = IngestSummary {
        tracks: tracks.len(),
        ..IngestSummary::default()
    };
    let mut samples = Vec::new();
    let mut segment: Vec<Vec3<R>> = Vec::new();

    for track in tracks {
        for pair in track.windows(2) {
            if pair[1].frame <= pair[0].frame {
                return Err(DataError::UnorderedFrames {
                    track_id: pair[1].track_id,
                    previous: pair[0].frame,
                    frame: pair[1].frame,
                });
            }
        }
        segment.clear();
        let mut last_frame: Option<u64> = None;
        for point in track {
            if !point.position.is_finite() {
                summary.rejected_non_finite += 1;
                flush_segment(&mut segment, dt, &mut samples, &mut summary);
                last_frame = None;
                continue;
            }
            if let Some(prev) = last_frame {
                if point.frame != prev + 1 {
                    flush_segment(&mut segment, dt, &mut samples, &mut summary);
                }
            }
            segment.push(point.position);
            last_frame = Some(point.frame);
        }
        flush_segment(&mut segment, dt, &mut samples, &mut summary);
    }
    summary.samples = samples.len();
    Ok(Estimate { samples, summary })
}

fn flush_segment<R: Real>(
    segment: &mut Vec<Vec3<R>>,
    dt: R,
    out: &mut Vec<DataSample<R>>,
    summary: &mut IngestSummary,
) {
    if segment.is_empty() {
        return;
    }
    summary.segments += 1;
    if segment.len() < 3 {
        summary.short_segments += 1;
    } else {
        let velocities: Vec<Vec3<R>> = segment.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
        for w in velocities.windows(2) {
            let sample = DataSample::new(w[0], (w[1] - w[0]) / dt);
            if sample.is_finite() {
                out.push(sample);
            }
        }
    }
    segment.clear();
}

/// Uniform random subsample without replacement, preserving input order.
///
/// Inputs no larger than `budget` are returned unchanged.
pub fn subsample<R: Real>(samples: &[DataSample<R>], budget: usize, seed: u64) -> Vec<DataSample<R>> {
    if samples.len() <= budget {
        return samples.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, samples.len(), budget).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| samples[i]).collect()
}

/// Speed-sorted candidate pool partitioned into equal-count contiguous groups.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceDataset<R> {
    samples: Vec<DataSample<R>>,
    /// `G + 1` offsets into `samples`; bucket `g` is `bucket_starts[g]..bucket_starts[g + 1]`.
    bucket_starts: Vec<usize>,
    boundaries: Vec<R>,
    dt: R,
}

impl<R: Real> ReferenceDataset<R> {
    /// Sorts by speed and splits into `group_count` buckets of `⌊n/G⌋` samples,
    /// the last one absorbing the remainder. `group_count` is clamped to the
    /// sample count so that no bucket is empty.
    pub fn build(mut samples: Vec<DataSample<R>>, group_count: usize, dt: R) -> Result<Self, DataError> {
        if samples.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        if group_count == 0 {
            return Err(DataError::InvalidParameter("group_count must be ≥ 1".into()));
        }
        if !(dt > R::zero()) || !dt.is_finite() {
            return Err(DataError::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(DataError::NonFiniteSample { index });
        }
        samples.sort_by(|a, b| a.speed.partial_cmp(&b.speed).expect("finite speeds"));

        let n = samples.len();
        let groups = group_count.min(n);
        let size = n / groups;
        let mut bucket_starts: Vec<usize> = (0..groups).map(|g| g * size).collect();
        bucket_starts.push(n);

        let mut boundaries: Vec<R> = bucket_starts[..groups].iter().map(|&s| samples[s].speed).collect();
        boundaries.push(samples[n - 1].speed);

        Ok(Self {
            samples,
            bucket_starts,
            boundaries,
            dt,
        })
    }

    pub fn samples(&self) -> &[DataSample<R>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn group_count(&self) -> usize {
        self.bucket_starts.len() - 1
    }

    pub fn boundaries(&self) -> &[R] {
        &self.boundaries
    }

    pub fn dt(&self) -> R {
        self.dt
    }

    pub fn bucket(&self, g: usize) -> &[DataSample<R>] {
        &self.samples[self.bucket_starts[g]..self.bucket_starts[g + 1]]
    }

    pub fn bucket_sizes(&self) -> Vec<usize> {
        self.bucket_starts.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// The bucket whose speed range contains `speed`; out-of-range speeds map to the nearest end.
    pub fn bucket_of(&self, speed: R) -> usize {
        let g = self.group_count();
        self.boundaries[1..g].partition_point(|&b| b <= speed)
    }

    /// Index range (into [`samples`](Self::samples)) of the bucket holding
    /// `current_speed` plus `window` neighbors on each side, clamped at the ends.
    pub fn candidate_range(&self, current_speed: R, window: usize) -> Range<usize> {
        let g = self.bucket_of(current_speed);
        let lo = g.saturating_sub(window);
        let hi = (g + window).min(self.group_count() - 1);
        self.bucket_starts[lo]..self.bucket_starts[hi + 1]
    }

    pub fn candidate_set(&self, current_speed: R, window: usize) -> &[DataSample<R>] {
        &self.samples[self.candidate_range(current_speed, window)]
    }

    /// Whether `velocity` equals some sample's velocity exactly.
    pub fn contains_velocity(&self, velocity: Vec3<R>) -> bool {
        let speed = velocity.norm();
        let start = self.samples.partition_point(|s| s.speed < speed);
        self.samples[start..]
            .iter()
            .take_while(|s| s.speed == speed)
            .any(|s| s.velocity == velocity)
    }
}
