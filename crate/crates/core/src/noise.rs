//! Curl-noise direction field.
//!
//! A vector potential ψ is built from three independently seeded channels of 4D
//! gradient noise over `(x, y, z, t)`. The noise direction is the normalized
//! central-difference curl `∇×ψ`, which is divergence-free by construction.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::real::Real;
use crate::vec3::Vec3;

pub const DEFAULT_SPATIAL_SCALE: f64 = 1.0;
pub const DEFAULT_TIME_SCALE: f64 = 1.0;

const CHANNEL_OFFSETS: [u64; 3] = [0x9E37_79B9_7F4A_7C15, 0xC2B2_AE3D_27D4_EB4F, 0x1656_67B1_9E37_79F9];
const DEGENERATE_CURL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("spatial_scale must be > 0")]
    BadSpatialScale,
    #[error("time_scale must be > 0")]
    BadTimeScale,
    #[error("epsilon must be in (0, spatial_scale/100]")]
    BadEpsilon,
}

#[derive(Clone, Debug)]
pub struct NoiseField<R> {
    seed: u64,
    spatial_scale: R,
    time_scale: R,
    epsilon: R,
    perms: [Box<[u8; 512]>; 3],
}

impl<R: Real> NoiseField<R> {
    pub fn new(seed: u64, spatial_scale: R, time_scale: R, epsilon: R) -> Result<Self, NoiseError> {
        if !(spatial_scale > R::zero()) || !spatial_scale.is_finite() {
            return Err(NoiseError::BadSpatialScale);
        }
        if !(time_scale > R::zero()) || !time_scale.is_finite() {
            return Err(NoiseError::BadTimeScale);
        }
        if !(epsilon > R::zero()) || epsilon > spatial_scale / R::lit(100.0) {
            return Err(NoiseError::BadEpsilon);
        }
        let perms = CHANNEL_OFFSETS.map(|offset| permutation(seed ^ offset));
        Ok(Self {
            seed,
            spatial_scale,
            time_scale,
            epsilon,
            perms,
        })
    }

    /// Default scales with `epsilon = spatial_scale / 1000`.
    pub fn with_seed(seed: u64) -> Self {
        let s = R::lit(DEFAULT_SPATIAL_SCALE);
        Self::new(seed, s, R::lit(DEFAULT_TIME_SCALE), s / R::lit(1000.0)).expect("default noise scales")
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn spatial_scale(&self) -> R {
        self.spatial_scale
    }

    pub fn time_scale(&self) -> R {
        self.time_scale
    }

    pub fn epsilon(&self) -> R {
        self.epsilon
    }

    /// Vector potential ψ(p, t); each component lies in [−1, 1].
    pub fn sample_potential(&self, p: Vec3<R>, t: R) -> Vec3<R> {
        let q = p / self.spatial_scale;
        let w = t / self.time_scale;
        let c = |i: usize| {
            gradient_noise4(&self.perms[i], q.x, q.y, q.z, w)
                .max(-R::one())
                .min(R::one())
        };
        Vec3::new(c(0), c(1), c(2))
    }

    /// Central-difference curl of the potential with step `epsilon`.
    pub fn curl(&self, p: Vec3<R>, t: R) -> Vec3<R> {
        let e = self.epsilon;
        let two_e = e + e;
        let at = |dx: R, dy: R, dz: R| self.sample_potential(Vec3::new(p.x + dx, p.y + dy, p.z + dz), t);
        let z = R::zero();
        let (xp, xm) = (at(e, z, z), at(-e, z, z));
        let (yp, ym) = (at(z, e, z), at(z, -e, z));
        let (zp, zm) = (at(z, z, e), at(z, z, -e));
        Vec3::new(
            (yp.z - ym.z) / two_e - (zp.y - zm.y) / two_e,
            (zp.x - zm.x) / two_e - (xp.z - xm.z) / two_e,
            (xp.y - xm.y) / two_e - (yp.x - ym.x) / two_e,
        )
    }

    /// Unit noise direction at `(p, t)`; never the zero vector.
    pub fn noise_direction(&self, p: Vec3<R>, t: R) -> Vec3<R> {
        let c = self.curl(p, t);
        let n = c.norm();
        if n.as_f64() < DEGENERATE_CURL || !n.is_finite() {
            return self.fallback_direction(p);
        }
        c / n
    }

    fn fallback_direction(&self, p: Vec3<R>) -> Vec3<R> {
        let mut h = self.seed;
        for c in p.to_array() {
            h = splitmix64(h ^ c.as_f64().to_bits());
        }
        let u1 = (splitmix64(h) >> 11) as f64 / (1u64 << 53) as f64;
        let u2 = (splitmix64(h ^ 0xA5A5_A5A5) >> 11) as f64 / (1u64 << 53) as f64;
        let z = 2.0 * u1 - 1.0;
        let r = (1.0 - z * z).max(0.0).sqrt();
        let phi = std::f64::consts::TAU * u2;
        Vec3::new(R::lit(r * phi.cos()), R::lit(r * phi.sin()), R::lit(z))
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn permutation(seed: u64) -> Box<[u8; 512]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut base: Vec<u8> = (0..=255u8).collect();
    base.shuffle(&mut rng);
    let mut table = Box::new([0u8; 512]);
    for i in 0..512 {
        table[i] = base[i & 255];
    }
    table
}

#[inline]
fn fade<R: Real>(t: R) -> R {
    // 6t⁵ − 15t⁴ + 10t³
    t * t * t * (t * (t * R::lit(6.0) - R::lit(15.0)) + R::lit(10.0))
}

#[inline]
fn lerp<R: Real>(t: R, a: R, b: R) -> R {
    a + t * (b - a)
}

/// Dot product with one of the 32 gradients that have one zero and three ±1 components.
#[inline]
fn grad4<R: Real>(hash: u8, x: R, y: R, z: R, w: R) -> R {
    let h = hash & 31;
    let (a, b, c) = match h >> 3 {
        0 => (y, z, w),
        1 => (x, z, w),
        2 => (x, y, w),
        _ => (x, y, z),
    };
    let sa = if h & 4 == 0 { a } else { -a };
    let sb = if h & 2 == 0 { b } else { -b };
    let sc = if h & 1 == 0 { c } else { -c };
    sa + sb + sc
}

/// Classic 4D gradient noise with quintic fade, smooth to second order.
fn gradient_noise4<R: Real>(perm: &[u8; 512], x: R, y: R, z: R, w: R) -> R {
    let cell = |v: R| {
        let f = v.floor();
        ((f.to_i64().unwrap_or(0) & 255) as usize, v - f)
    };
    let (ix, fx) = cell(x);
    let (iy, fy) = cell(y);
    let (iz, fz) = cell(z);
    let (iw, fw) = cell(w);
    let (u, v, s, t) = (fade(fx), fade(fy), fade(fz), fade(fw));
    let one = R::one();

    let corner = |dx: usize, dy: usize, dz: usize, dw: usize| {
        let h = perm[perm[perm[perm[ix + dx] as usize + iy + dy] as usize + iz + dz] as usize + iw + dw];
        let off = |d: usize, f: R| if d == 0 { f } else { f - one };
        grad4(h, off(dx, fx), off(dy, fy), off(dz, fz), off(dw, fw))
    };

    let mut along_w = [R::zero(); 2];
    for (dw, slot) in along_w.iter_mut().enumerate() {
        let mut along_z = [R::zero(); 2];
        for (dz, zslot) in along_z.iter_mut().enumerate() {
            let y0 = lerp(u, corner(0, 0, dz, dw), corner(1, 0, dz, dw));
            let y1 = lerp(u, corner(0, 1, dz, dw), corner(1, 1, dz, dw));
            *zslot = lerp(v, y0, y1);
        }
        *slot = lerp(s, along_z[0], along_z[1]);
    }
    lerp(t, along_w[0], along_w[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_points(n: usize, seed: u64) -> Vec<(Vec3<f64>, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                (
                    Vec3::new(
                        rng.gen_range(-5.0..5.0),
                        rng.gen_range(-5.0..5.0),
                        rng.gen_range(-5.0..5.0),
                    ),
                    rng.gen_range(0.0..20.0),
                )
            })
            .collect()
    }

    #[test]
    fn potential_is_deterministic_and_bounded() {
        let field = NoiseField::<f64>::with_seed(42);
        let again = NoiseField::<f64>::with_seed(42);
        for (p, t) in random_points(500, 1) {
            let a = field.sample_potential(p, t);
            assert_eq!(a, field.sample_potential(p, t));
            assert_eq!(a, again.sample_potential(p, t));
            for c in a.to_array() {
                assert!((-1.0..=1.0).contains(&c));
            }
        }
    }

    #[test]
    fn potential_depends_on_seed() {
        let a = NoiseField::<f64>::with_seed(1);
        let b = NoiseField::<f64>::with_seed(2);
        let differing = random_points(100, 2)
            .into_iter()
            .filter(|&(p, t)| (a.sample_potential(p, t) - b.sample_potential(p, t)).norm() > 1e-6)
            .count();
        assert!(differing >= 95, "{differing}");
    }

    #[test]
    fn channels_differ() {
        let f = NoiseField::<f64>::with_seed(9);
        let p = f.sample_potential(Vec3::new(0.37, 1.21, -0.4), 0.3);
        assert!(p.x != p.y && p.y != p.z);
    }

    #[test]
    fn directions_are_unit() {
        let f = NoiseField::<f64>::with_seed(3);
        for (p, t) in random_points(300, 3) {
            let d = f.noise_direction(p, t);
            assert!((d.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fallback_is_unit_and_deterministic() {
        let f = NoiseField::<f64>::with_seed(3);
        let d = f.fallback_direction(Vec3::new(1.0, 2.0, 3.0));
        assert!((d.norm() - 1.0).abs() < 1e-12);
        assert_eq!(d, f.fallback_direction(Vec3::new(1.0, 2.0, 3.0)));
    }

    /// Central-difference divergence of the curl using the same step.
    fn divergence(f: &NoiseField<f64>, p: Vec3<f64>, t: f64) -> f64 {
        let e = f.epsilon();
        let c = |d: Vec3<f64>| f.curl(p + d, t);
        let dx = (c(Vec3::new(e, 0.0, 0.0)).x - c(Vec3::new(-e, 0.0, 0.0)).x) / (2.0 * e);
        let dy = (c(Vec3::new(0.0, e, 0.0)).y - c(Vec3::new(0.0, -e, 0.0)).y) / (2.0 * e);
        let dz = (c(Vec3::new(0.0, 0.0, e)).z - c(Vec3::new(0.0, 0.0, -e)).z) / (2.0 * e);
        dx + dy + dz
    }

    #[test]
    fn curl_field_is_divergence_free() {
        let f = NoiseField::<f64>::with_seed(17);
        for (p, t) in random_points(100, 4) {
            let c = f.curl(p, t).norm();
            let rel = divergence(&f, p, t).abs() * f.spatial_scale() / c;
            assert!(rel <= 1e-6, "relative divergence {rel} at {p:?}");
        }
    }

    #[test]
    fn nearby_points_have_similar_directions() {
        let f = NoiseField::<f64>::with_seed(5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let step = f.spatial_scale() / 100.0;
        let mut smooth = 0;
        let trials = 500;
        for (p, t) in random_points(trials, 7) {
            let offset = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
            .unit_or_zero()
                * (step * rng.gen_range(0.0..1.0));
            let a = f.noise_direction(p, t);
            let b = f.noise_direction(p + offset, t);
            if a.dot(b).clamp(-1.0, 1.0).acos() < 0.1 {
                smooth += 1;
            }
        }
        assert!(smooth as f64 >= 0.95 * trials as f64, "{smooth}/{trials}");
    }

    #[test]
    fn rejects_coarse_epsilon() {
        assert_eq!(
            NoiseField::<f64>::new(0, 1.0, 1.0, 0.1).unwrap_err(),
            NoiseError::BadEpsilon
        );
        assert!(NoiseField::<f64>::new(0, 0.0, 1.0, 0.0).is_err());
    }
}
