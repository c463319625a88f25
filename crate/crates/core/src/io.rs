//! CSV and JSON file formats: tracklets, datasets with a metadata sidecar,
//! trajectories and line-delimited step reports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::Real;
use crate::refdata::{DataError, DataSample, IngestSummary, ReferenceDataset, TrackletPoint};
use crate::sim::StepReport;
use crate::trajectory::{Trajectory, TrajectoryRow};
use crate::vec3::Vec3;

pub const TRACKLET_HEADER: [&str; 5] = ["track_id", "frame", "x", "y", "z"];
pub const DATASET_HEADER: [&str; 6] = ["vx", "vy", "vz", "ax", "ay", "az"];
pub const TRAJECTORY_HEADER: [&str; 8] = ["frame", "agent_id", "x", "y", "z", "vx", "vy", "vz"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Data {
        path: PathBuf,
        #[source]
        source: DataError,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn schema(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Schema {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>, IoError> {
    let file = File::open(path).map_err(io_err(path))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn check_header(path: &Path, rdr: &mut csv::Reader<File>, expected: &[&str]) -> Result<Vec<String>, IoError> {
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_err(path))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.len() < expected.len() || header.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(schema(
            path,
            format!(
                "expected header starting with `{}`, found `{}`",
                expected.join(","),
                header.join(",")
            ),
        ));
    }
    Ok(header)
}

fn fmt<R: Real>(x: R) -> String {
    x.as_f64().to_string()
}

fn parse_real<R: Real>(s: &str) -> Option<R> {
    s.parse::<f64>().ok().map(R::lit)
}

fn parse_vec<R: Real>(fields: &[&str]) -> Option<Vec3<R>> {
    Some(Vec3::new(
        parse_real(fields[0])?,
        parse_real(fields[1])?,
        parse_real(fields[2])?,
    ))
}

/// Parsed tracklet file plus the number of lines that could not be parsed.
#[derive(Clone, Debug)]
pub struct TrackletFile<R> {
    pub points: Vec<TrackletPoint<R>>,
    pub malformed_lines: usize,
}

/// Reads `track_id,frame,x,y,z`. Lines with the wrong arity or unparsable
/// values are counted and skipped; non-finite coordinates are kept so the
/// estimator can split segments at them.
pub fn read_tracklets<R: Real>(path: &Path) -> Result<TrackletFile<R>, IoError> {
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &TRACKLET_HEADER)?;
    let mut points = Vec::new();
    let mut malformed_lines = 0;
    for record in rdr.records() {
        let Ok(record) = record else {
            malformed_lines += 1;
            continue;
        };
        let f: Vec<&str> = record.iter().collect();
        let parsed = (f.len() == 5)
            .then(|| {
                Some((
                    f[0].parse::<i64>().ok()?,
                    f[1].parse::<u64>().ok()?,
                    parse_vec::<R>(&f[2..5])?,
                ))
            })
            .flatten();
        match parsed {
            Some((track_id, frame, position)) => points.push(TrackletPoint {
                track_id,
                frame,
                position,
            }),
            None => malformed_lines += 1,
        }
    }
    Ok(TrackletFile {
        points,
        malformed_lines,
    })
}

pub fn write_tracklets<R: Real>(path: &Path, points: &[TrackletPoint<R>]) -> Result<(), IoError> {
    let mut w = writer(path)?;
    w.write_record(TRACKLET_HEADER).map_err(csv_err(path))?;
    for p in points {
        w.write_record([
            p.track_id.to_string(),
            p.frame.to_string(),
            fmt(p.position.x),
            fmt(p.position.y),
            fmt(p.position.z),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Sidecar written next to a dataset CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub dt: f64,
    pub group_count: usize,
    pub samples: usize,
    pub speed_min: f64,
    pub speed_max: f64,
    pub boundaries: Vec<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub ingest: Option<IngestSummaryRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummaryRecord {
    pub tracks: usize,
    pub segments: usize,
    pub short_segments: usize,
    pub rejected_non_finite: usize,
    pub samples_before_subsample: usize,
    pub malformed_lines: usize,
    pub duplicate_frames: usize,
}

impl IngestSummaryRecord {
    pub fn new(summary: &IngestSummary, malformed_lines: usize, duplicate_frames: usize) -> Self {
        Self {
            tracks: summary.tracks,
            segments: summary.segments,
            short_segments: summary.short_segments,
            rejected_non_finite: summary.rejected_non_finite,
            samples_before_subsample: summary.samples,
            malformed_lines,
            duplicate_frames,
        }
    }
}

/// `dataset.csv` → `dataset.meta.json`.
pub fn meta_path(dataset_csv: &Path) -> PathBuf {
    dataset_csv.with_extension("meta.json")
}

impl DatasetMeta {
    pub fn describe<R: Real>(ds: &ReferenceDataset<R>) -> Self {
        let s = ds.samples();
        Self {
            dt: ds.dt().as_f64(),
            group_count: ds.group_count(),
            samples: ds.len(),
            speed_min: s[0].speed.as_f64(),
            speed_max: s[s.len() - 1].speed.as_f64(),
            boundaries: ds.boundaries().iter().map(|b| b.as_f64()).collect(),
            seed: None,
            ingest: None,
        }
    }
}

/// Writes the speed-sorted samples and the metadata sidecar.
pub fn write_dataset<R: Real>(path: &Path, ds: &ReferenceDataset<R>, meta: &DatasetMeta) -> Result<(), IoError> {
    let mut w = writer(path)?;
    w.write_record(DATASET_HEADER).map_err(csv_err(path))?;
    for s in ds.samples() {
        let (v, a) = (s.velocity, s.acceleration);
        w.write_record([fmt(v.x), fmt(v.y), fmt(v.z), fmt(a.x), fmt(a.y), fmt(a.z)])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    let mp = meta_path(path);
    let json = serde_json::to_string_pretty(meta).map_err(|source| IoError::Json {
        path: mp.clone(),
        source,
    })?;
    std::fs::write(&mp, json + "\n").map_err(io_err(&mp))
}

pub fn read_dataset_meta(path: &Path) -> Result<DatasetMeta, IoError> {
    let mp = meta_path(path);
    let text = std::fs::read_to_string(&mp).map_err(io_err(&mp))?;
    serde_json::from_str(&text).map_err(|source| IoError::Json { path: mp, source })
}

pub fn read_samples<R: Real>(path: &Path) -> Result<Vec<DataSample<R>>, IoError> {
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &DATASET_HEADER)?;
    let mut out = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err(path))?;
        let f: Vec<&str> = record.iter().collect();
        let parsed = (f.len() == 6)
            .then(|| Some((parse_vec(&f[0..3])?, parse_vec(&f[3..6])?)))
            .flatten();
        let (v, a) = parsed.ok_or_else(|| schema(path, format!("malformed sample on data line {}", line + 1)))?;
        out.push(DataSample::new(v, a));
    }
    Ok(out)
}

/// Loads a dataset using the sidecar's `dt` and `group_count`, or the overrides when given.
pub fn read_dataset<R: Real>(
    path: &Path,
    group_count: Option<usize>,
) -> Result<(ReferenceDataset<R>, DatasetMeta), IoError> {
    let samples = read_samples::<R>(path)?;
    let meta = read_dataset_meta(path)?;
    let ds = ReferenceDataset::build(samples, group_count.unwrap_or(meta.group_count), R::lit(meta.dt)).map_err(
        |source| IoError::Data {
            path: path.to_path_buf(),
            source,
        },
    )?;
    Ok((ds, meta))
}

/// A trajectory row tag used when recorded and simulated rows share a file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowSource {
    Recorded,
    Simulated,
    Ghost,
}

impl RowSource {
    pub fn as_str(self) -> &'static str {
        match self {
            RowSource::Recorded => "prefix",
            RowSource::Simulated => "sim",
            RowSource::Ghost => "ghost",
        }
    }
}

fn trajectory_fields<R: Real>(frame: u64, r: &TrajectoryRow<R>) -> [String; 8] {
    [
        frame.to_string(),
        r.agent_id.to_string(),
        fmt(r.position.x),
        fmt(r.position.y),
        fmt(r.position.z),
        fmt(r.velocity.x),
        fmt(r.velocity.y),
        fmt(r.velocity.z),
    ]
}

pub fn write_trajectory<R: Real>(path: &Path, trajectory: &Trajectory<R>) -> Result<(), IoError> {
    let mut w = writer(path)?;
    w.write_record(TRAJECTORY_HEADER).map_err(csv_err(path))?;
    for (frame, r) in trajectory.rows() {
        w.write_record(trajectory_fields(frame, r)).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes rows with a trailing `source` column.
pub fn write_tagged_trajectory<R: Real>(
    path: &Path,
    rows: &[(u64, TrajectoryRow<R>, RowSource)],
) -> Result<(), IoError> {
    let mut w = writer(path)?;
    let mut header = TRAJECTORY_HEADER.to_vec();
    header.push("source");
    w.write_record(&header).map_err(csv_err(path))?;
    for (frame, r, src) in rows {
        let mut f = trajectory_fields(*frame, r).to_vec();
        f.push(src.as_str().to_owned());
        w.write_record(&f).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads a trajectory CSV; an optional trailing `source` column is ignored.
pub fn read_trajectory<R: Real>(path: &Path) -> Result<Trajectory<R>, IoError> {
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &TRAJECTORY_HEADER)?;
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err(path))?;
        let f: Vec<&str> = record.iter().collect();
        let parsed = (f.len() >= 8)
            .then(|| {
                Some((
                    f[0].parse::<u64>().ok()?,
                    TrajectoryRow {
                        agent_id: f[1].parse::<usize>().ok()?,
                        position: parse_vec(&f[2..5])?,
                        velocity: parse_vec(&f[5..8])?,
                    },
                ))
            })
            .flatten();
        rows.push(parsed.ok_or_else(|| schema(path, format!("malformed row on data line {}", line + 1)))?);
    }
    Ok(Trajectory::from_rows(rows))
}

/// Line-delimited JSON, one record per frame.
pub fn write_reports(path: &Path, reports: &[StepReport]) -> Result<(), IoError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for r in reports {
        let line = serde_json::to_string(r).map_err(|source| IoError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}
