//! Synthetic tracklets: smooth random 3D flight paths with a preferred speed,
//! a weak pull toward a swarm center, and occasional detection gaps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::real::Real;
use crate::refdata::{TrackletPoint, DEFAULT_DT};
use crate::vec3::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub tracks: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub dt: f64,
    /// Mean preferred speed, m/s.
    pub mean_speed: f64,
    /// Half-width of the uniform spread of per-track preferred speeds.
    pub speed_spread: f64,
    /// Relaxation rate of the colored acceleration noise, 1/s.
    pub accel_relaxation: f64,
    /// Stationary standard deviation of the acceleration noise per axis, m/s².
    pub accel_sigma: f64,
    /// Gain pulling the speed back toward the preferred speed, 1/s.
    pub speed_gain: f64,
    /// Spring constant toward the origin, 1/s².
    pub center_pull: f64,
    /// Half-side of the cube where tracks start, m.
    pub start_half_side: f64,
    /// Per-frame probability of a detection gap.
    pub gap_probability: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            tracks: 200,
            min_len: 30,
            max_len: 120,
            dt: DEFAULT_DT,
            mean_speed: 0.3,
            speed_spread: 0.15,
            accel_relaxation: 6.0,
            accel_sigma: 0.8,
            speed_gain: 6.0,
            center_pull: 2.0,
            start_half_side: 0.3,
            gap_probability: 0.01,
            seed: 0,
        }
    }
}

fn normal3(rng: &mut ChaCha8Rng) -> Vec3<f64> {
    Vec3::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    )
}

/// Generates tracklet points ordered by track then frame.
pub fn generate_tracklets<R: Real>(cfg: &SynthConfig) -> Vec<TrackletPoint<R>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dt = cfg.dt;
    let decay = (-cfg.accel_relaxation * dt).exp();
    let kick = cfg.accel_sigma * (1.0 - decay * decay).sqrt();
    let mut out = Vec::new();
    let mut start_frame = 0u64;
    for track in 0..cfg.tracks {
        let len = rng.gen_range(cfg.min_len..=cfg.max_len.max(cfg.min_len));
        let target = cfg.mean_speed + cfg.speed_spread * rng.gen_range(-1.0..=1.0);
        let h = cfg.start_half_side;
        let mut p = Vec3::new(rng.gen_range(-h..=h), rng.gen_range(-h..=h), rng.gen_range(-h..=h));
        let mut v = normal3(&mut rng).unit_or_zero() * target;
        let mut noise = normal3(&mut rng) * cfg.accel_sigma;
        let mut frame = start_frame;
        for _ in 0..len {
            out.push(TrackletPoint {
                track_id: track as i64,
                frame,
                position: p.cast(),
            });
            let speed = v.norm();
            let restore = v.unit_or_zero() * (cfg.speed_gain * (target - speed));
            let a = noise + restore - p * cfg.center_pull;
            v += a * dt;
            p += v * dt;
            noise = noise * decay + normal3(&mut rng) * kick;
            frame += 1;
            if rng.gen_bool(cfg.gap_probability) {
                let skip = rng.gen_range(1..=3u64);
                for _ in 0..skip {
                    v += (noise - p * cfg.center_pull) * dt;
                    p += v * dt;
                }
                frame += skip;
            }
        }
        start_frame += rng.gen_range(0..20);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refdata::{estimate_samples, group_tracks};

    #[test]
    fn reproducible_and_seed_dependent() {
        let cfg = SynthConfig {
            tracks: 5,
            ..SynthConfig::default()
        };
        let a = generate_tracklets::<f64>(&cfg);
        assert_eq!(a, generate_tracklets::<f64>(&cfg));
        let b = generate_tracklets::<f64>(&SynthConfig { seed: 1, ..cfg });
        assert_ne!(a, b);
    }

    #[test]
    fn speeds_are_plausible() {
        let cfg = SynthConfig::default();
        let (tracks, dups) = group_tracks(&generate_tracklets::<f64>(&cfg));
        assert_eq!(dups, 0);
        assert_eq!(tracks.len(), cfg.tracks);
        let est = estimate_samples(&tracks, cfg.dt).unwrap();
        assert!(est.samples.len() > 10_000, "{}", est.samples.len());
        let mean = est.samples.iter().map(|s| s.speed).sum::<f64>() / est.samples.len() as f64;
        assert!((mean - cfg.mean_speed).abs() < 0.1, "{mean}");
        assert!(est.summary.segments > tracks.len());
    }
}
