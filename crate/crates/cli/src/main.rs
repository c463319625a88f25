use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dataswarm::bench::{run_bench, BenchConfig};
use dataswarm::io::{self, DatasetMeta, IngestSummaryRecord, IoError, RowSource};
use dataswarm::metrics::{self, MetricsError};
use dataswarm::refdata::{
    estimate_samples, group_tracks, subsample, DataError, DEFAULT_DT, DEFAULT_GROUP_COUNT, DEFAULT_SAMPLE_BUDGET,
};
use dataswarm::scenario::{prefix_ends, tracks_by_id, Scenario, ScenarioError};
use dataswarm::sim::{GhostReplay, SimError};
use dataswarm::synth::{generate_tracklets, SynthConfig};
use dataswarm::trajectory::TrajectoryRow;
use dataswarm::{Agent, Dataset, Params, Sim, Swarm, Vec3d};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "dataswarm", version, about = "Data-driven insect swarm simulator")]
struct Cli {
    /// Overrides the seed of the scenario, subsample, generator or benchmark.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the frame loop (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate (velocity, acceleration) samples from tracklets and write a dataset.
    BuildDataset(BuildArgs),
    /// Run a scenario file.
    Run(RunArgs),
    /// Compare the distributions of two trajectories.
    Metrics(MetricsArgs),
    /// Measure seconds per frame against swarm size.
    Bench(BenchArgs),
    /// Extend tracklet prefixes, or simulate agents among replayed tracks.
    Predict(PredictArgs),
    /// Generate synthetic tracklets.
    Synth(SynthArgs),
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    #[arg(long, default_value_t = DEFAULT_GROUP_COUNT)]
    group_count: usize,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_BUDGET)]
    sample_budget: usize,
}

#[derive(Args)]
struct RunArgs {
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the scenario's frame count.
    #[arg(long)]
    frames: Option<u64>,
}

#[derive(Args)]
struct MetricsArgs {
    trajectory: PathBuf,
    reference: PathBuf,
    #[arg(long, default_value_t = metrics::DEFAULT_BINS)]
    bins: usize,
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Scenario supplying dataset and weights.
    scenario: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [100, 200, 400, 800])]
    agents: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    frames: u64,
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
    /// Start-cube side for 100 agents, in meters; other sizes keep the density.
    #[arg(long, default_value_t = 1.0)]
    side: f64,
    /// Write the result as JSON here as well.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Scenario supplying dataset, weights and environment.
    scenario: PathBuf,
    /// Tracklet prefixes to extend.
    #[arg(long, conflicts_with = "ghosts")]
    prefix: Option<PathBuf>,
    /// Recorded tracklets replayed unchanged around the simulated agents.
    #[arg(long)]
    ghosts: Option<PathBuf>,
    /// Simulated agents added in mixing mode.
    #[arg(long, default_value_t = 100)]
    agents: usize,
    /// Continuation steps; in mixing mode defaults to the replay length.
    #[arg(long)]
    frames: Option<u64>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = SynthConfig::default().tracks)]
    tracks: usize,
    #[arg(long, default_value_t = SynthConfig::default().min_len)]
    min_len: usize,
    #[arg(long, default_value_t = SynthConfig::default().max_len)]
    max_len: usize,
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    #[arg(long, default_value_t = SynthConfig::default().mean_speed)]
    mean_speed: f64,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Sim(s) => s.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<Scenario, CliError> {
    let mut s = Scenario::load(path)?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    Ok(s)
}

fn build_dataset(args: BuildArgs, seed: u64) -> Result<(), CliError> {
    let file = io::read_tracklets::<f64>(&args.input)?;
    let (tracks, duplicates) = group_tracks(&file.points);
    let est = estimate_samples(&tracks, args.dt)?;
    if est.samples.is_empty() {
        return Err(CliError::Input(format!("{}: no valid samples", args.input.display())));
    }
    let picked = subsample(&est.samples, args.sample_budget, seed);
    let ds = Dataset::build(picked, args.group_count, args.dt)?;
    let mut meta = DatasetMeta::describe(&ds);
    meta.seed = Some(seed);
    meta.ingest = Some(IngestSummaryRecord::new(&est.summary, file.malformed_lines, duplicates));
    io::write_dataset(&args.output, &ds, &meta)?;
    println!("samples: {} (of {} estimated)", ds.len(), est.samples.len());
    println!("malformed lines: {}", file.malformed_lines);
    println!("speed range: [{}, {}]", meta.speed_min, meta.speed_max);
    let b: Vec<String> = meta.boundaries.iter().map(|x| format!("{x:.6}")).collect();
    println!("bucket boundaries: {}", b.join(" "));
    Ok(())
}

fn run(args: RunArgs, seed: Option<u64>, threads: Option<usize>) -> Result<(), CliError> {
    let mut scenario = load_scenario(&args.scenario, seed)?;
    if let Some(f) = args.frames {
        scenario.frames = f;
    }
    let prep = scenario.prepare::<f64>(threads)?;
    let rec = prep.simulation.run(prep.initial, prep.frames)?;
    create_dir(&args.out)?;
    io::write_trajectory(&args.out.join("trajectory.csv"), &rec.trajectory)?;
    io::write_reports(&args.out.join("reports.jsonl"), &rec.reports)?;
    let mut summary = serde_json::json!({
        "scenario": scenario.name,
        "agents": rec.final_state.len(),
        "frames": prep.frames,
        "seed": scenario.seed,
        "rows": rec.trajectory.row_count(),
        "mean_seconds_per_frame": rec.reports.iter().map(|r| r.wall_time_s).sum::<f64>() / rec.reports.len().max(1) as f64,
    });
    if !scenario.paths.is_empty() {
        let visits: Vec<usize> = rec.final_state.control.iter().map(|c| c.distinct_visits()).collect();
        summary["distinct_keypoints_visited"] = visits.into();
    }
    write_json(&args.out.join("summary.json"), &summary)?;
    println!(
        "{}: {} agents, {} frames → {}",
        scenario.name,
        rec.final_state.len(),
        prep.frames,
        args.out.display()
    );
    Ok(())
}

fn metrics_cmd(args: MetricsArgs) -> Result<(), CliError> {
    let a = io::read_trajectory::<f64>(&args.trajectory)?;
    let b = io::read_trajectory::<f64>(&args.reference)?;
    let rep = metrics::report(&a, &b, args.bins, args.dt)?;
    create_dir(&args.out)?;
    write_json(&args.out.join("report.json"), &rep)?;
    for h in &rep.histograms {
        let path = args.out.join(format!("{}.csv", h.name));
        let mut text = String::from("bin_center,density,reference_density\n");
        for ((c, d), r) in h
            .candidate
            .centers()
            .iter()
            .zip(&h.candidate.densities)
            .zip(&h.reference.densities)
        {
            text += &format!("{c},{d},{r}\n");
        }
        std::fs::write(&path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    for (name, d) in metrics::STATISTIC_NAMES.iter().zip(rep.distances.to_array()) {
        println!("{name:<13} {d:.6e}");
    }
    Ok(())
}

fn bench(args: BenchArgs, seed: Option<u64>, threads: Option<usize>) -> Result<(), CliError> {
    let scenario = load_scenario(&args.scenario, seed)?;
    let (ds, _) = io::read_dataset::<f64>(&scenario.dataset_path(), scenario.params.group_count)?;
    let params: Params = scenario.sim_params(ds.dt(), ds.group_count());
    let cfg = BenchConfig {
        agent_counts: args.agents,
        frames: args.frames,
        repetitions: args.repetitions,
        seed: scenario.seed,
        reference_side: args.side,
        threads,
        ..BenchConfig::default()
    };
    let result = run_bench(&ds, params, &cfg)?;
    println!("{:>8} {:>14} {:>16}  timings", "agents", "s/frame", "evals/frame");
    for r in &result.rows {
        let t: Vec<String> = r.timings.iter().map(|x| format!("{x:.6}")).collect();
        println!(
            "{:>8} {:>14.6} {:>16.0}  {}",
            r.agents,
            r.mean_seconds_per_frame,
            r.evaluations_per_frame,
            t.join(" ")
        );
    }
    println!(
        "linear fit: slope {:.3e} s/agent, R² {:.4}",
        result.fit.slope, result.fit.r_squared
    );
    if let Some(p) = args.json {
        write_json(&p, &result)?;
    }
    Ok(())
}

fn predict(args: PredictArgs, seed: Option<u64>, threads: Option<usize>) -> Result<(), CliError> {
    let scenario = load_scenario(&args.scenario, seed)?;
    let (ds, _) = io::read_dataset::<f64>(&scenario.dataset_path(), scenario.params.group_count)?;
    let params: Params = scenario.sim_params(ds.dt(), ds.group_count());
    let env = scenario.environment::<f64>(params.dt)?;
    let noise = dataswarm::Noise::new(
        scenario.noise.seed.unwrap_or(scenario.seed),
        scenario.noise.spatial_scale,
        scenario.noise.time_scale,
        scenario.noise.spatial_scale / 1000.0,
    )
    .map_err(|e| CliError::Input(e.to_string()))?;
    let danger = scenario.danger_weights;
    let mut rows: Vec<(u64, TrajectoryRow<f64>, RowSource)> = Vec::new();

    match (&args.prefix, &args.ghosts) {
        (Some(prefix), None) => {
            let file = io::read_tracklets::<f64>(prefix)?;
            let (ends, dropped) = prefix_ends(&file.points, params.dt);
            for id in &dropped {
                eprintln!("warning: track {id} has no two consecutive final frames; dropped");
            }
            if ends.is_empty() {
                return Err(CliError::Input(format!("{}: no usable prefix", prefix.display())));
            }
            let tracks = tracks_by_id(&file.points);
            for (agent_id, e) in ends.iter().enumerate() {
                let pts = &tracks[&e.track_id];
                for (k, &(f, p)) in pts.iter().enumerate() {
                    let v = match pts.get(k + 1) {
                        Some(&(g, q)) if g == f + 1 => (q - p) / params.dt,
                        _ if k > 0 && pts[k - 1].0 + 1 == f => (p - pts[k - 1].1) / params.dt,
                        _ => Vec3d::zero(),
                    };
                    rows.push((
                        f,
                        TrajectoryRow {
                            agent_id,
                            position: p,
                            velocity: v,
                        },
                        RowSource::Recorded,
                    ));
                }
            }
            let frames = args.frames.unwrap_or(scenario.frames);
            let sim = Sim::new(ds, params, env, noise)?
                .with_danger_weights(danger)?
                .with_threads(threads)?;
            let mut state = Swarm::free(0, ends.iter().map(|e| e.agent).collect());
            sim.prime(&mut state);
            let rec = sim.run(state, frames)?;
            for (step, frame) in rec.trajectory.frames.iter().enumerate().skip(1) {
                for r in &frame.rows {
                    rows.push((ends[r.agent_id].frame + step as u64, *r, RowSource::Simulated));
                }
            }
        }
        (None, Some(ghost_path)) => {
            let file = io::read_tracklets::<f64>(ghost_path)?;
            if file.points.is_empty() {
                return Err(CliError::Input(format!("{}: no tracklet points", ghost_path.display())));
            }
            let tracks = tracks_by_id(&file.points);
            let replay = GhostReplay::from_tracks(&tracks, params.dt);
            let (first, last) = replay.frame_range().expect("non-empty replay");
            let frames = args.frames.unwrap_or(last - first);
            let start: Vec<Vec3d> = replay.at(first).iter().map(|g| g.1).collect();
            let (lo, hi) = start.iter().fold((start[0], start[0]), |(lo, hi), p| {
                (
                    Vec3d::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z)),
                    Vec3d::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z)),
                )
            });
            let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
            let pad = params.d_att1;
            let agents: Vec<Agent> = (0..args.agents)
                .map(|_| {
                    let p = Vec3d::new(
                        rng.gen_range(lo.x - pad..=hi.x + pad),
                        rng.gen_range(lo.y - pad..=hi.y + pad),
                        rng.gen_range(lo.z - pad..=hi.z + pad),
                    );
                    Agent {
                        position: p,
                        velocity: ds.samples()[rng.gen_range(0..ds.len())].velocity,
                        noise_dir: Vec3d::zero(),
                        control_dir: None,
                    }
                })
                .collect();
            let sim = Sim::new(ds, params, env, noise)?
                .with_danger_weights(danger)?
                .with_threads(threads)?
                .with_ghosts(replay);
            let mut state = Swarm::free(first, agents);
            sim.prime(&mut state);
            let rec = sim.run(state, frames)?;
            for (frame, r) in rec.trajectory.rows() {
                rows.push((frame, *r, RowSource::Simulated));
            }
            for (k, (&id, pts)) in tracks.iter().enumerate() {
                for &(f, p) in pts {
                    let v = sim
                        .ghosts()
                        .at(f)
                        .iter()
                        .find(|g| g.0 == id)
                        .map_or(Vec3d::zero(), |g| g.2);
                    rows.push((
                        f,
                        TrajectoryRow {
                            agent_id: args.agents + k,
                            position: p,
                            velocity: v,
                        },
                        RowSource::Ghost,
                    ));
                }
            }
        }
        _ => return Err(CliError::Input("give exactly one of --prefix or --ghosts".into())),
    }
    rows.sort_by_key(|(f, r, _)| (*f, r.agent_id));
    io::write_tagged_trajectory(&args.output, &rows)?;
    println!("{} rows → {}", rows.len(), args.output.display());
    Ok(())
}

fn synth(args: SynthArgs, seed: u64) -> Result<(), CliError> {
    if args.min_len > args.max_len || args.tracks == 0 {
        return Err(CliError::Input("need tracks ≥ 1 and min-len ≤ max-len".into()));
    }
    let cfg = SynthConfig {
        tracks: args.tracks,
        min_len: args.min_len,
        max_len: args.max_len,
        dt: args.dt,
        mean_speed: args.mean_speed,
        seed,
        ..SynthConfig::default()
    };
    let points = generate_tracklets::<f64>(&cfg);
    io::write_tracklets(&args.output, &points)?;
    println!(
        "{} points in {} tracks → {}",
        points.len(),
        cfg.tracks,
        args.output.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::BuildDataset(a) => build_dataset(a, cli.seed.unwrap_or(0)),
        Command::Run(a) => run(a, cli.seed, cli.threads),
        Command::Metrics(a) => metrics_cmd(a),
        Command::Bench(a) => bench(a, cli.seed, cli.threads),
        Command::Predict(a) => predict(a, cli.seed, cli.threads),
        Command::Synth(a) => synth(a, cli.seed.unwrap_or(0)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Input(m) | CliError::Numeric(m)) = &e;
            eprintln!("error: {m}");
            ExitCode::from(e.code())
        }
    }
}
