//! Synthetic snapshots with the statistical fingerprints of two kinds of
//! production data, without any physics.
//!
//! * `HaccLike` (cosmology): particles stored in a spatially ordered way, so
//!   `xx` and `yy` drift slowly upward along the array and `zz` climbs in
//!   short, irregular cycles; velocities are smooth AR(1) sequences.
//! * `AmdfLike` (molecular dynamics): atoms stored molecule by molecule,
//!   molecules in no spatial order. Consecutive atoms of one molecule are
//!   close, which puts the lag-1 autocorrelation of coordinates near 0.7;
//!   velocities are independent Gaussians.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::model::ParticleSnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Profile {
    HaccLike,
    AmdfLike,
}

impl Profile {
    pub const ALL: [Profile; 2] = [Profile::HaccLike, Profile::AmdfLike];

    pub fn name(self) -> &'static str {
        match self {
            Profile::HaccLike => "hacc",
            Profile::AmdfLike => "amdf",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "hacc" | "hacc-like" | "hacclike" => Ok(Profile::HaccLike),
            "amdf" | "amdf-like" | "amdflike" => Ok(Profile::AmdfLike),
            _ => Err(format!("unknown profile {s:?} (expected hacc or amdf)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorProfile {
    pub profile: Profile,
    pub n: usize,
    pub seed: u64,
    /// Coordinates lie in `[0, box_size)`.
    pub box_size: f32,
    /// Coordinate noise, as a fraction of `box_size`.
    pub noise: f64,
    /// Velocity standard deviation.
    pub velocity_scale: f64,
}

impl GeneratorProfile {
    pub fn new(profile: Profile, n: usize, seed: u64) -> Self {
        match profile {
            Profile::HaccLike => Self {
                profile,
                n,
                seed,
                box_size: 256.0,
                noise: 2e-4,
                velocity_scale: 300.0,
            },
            Profile::AmdfLike => Self {
                profile,
                n,
                seed,
                box_size: 100.0,
                noise: 3e-3,
                velocity_scale: 5.0,
            },
        }
    }
}

// HACC-like shape parameters.
const HACC_VELOCITY_PHI: f64 = 0.92;
const HACC_Z_PERIOD: (usize, usize) = (500, 1100);
const HACC_Y_RESETS: usize = 4;

// AMDF-like shape parameters: the fraction of molecules placed inside a
// dense cluster and the cluster radius as a fraction of the box.
const AMDF_CLUSTERED: f64 = 0.8;
const AMDF_CLUSTER_RADIUS: f64 = 0.02;
const AMDF_ATOMS_PER_CLUSTER: usize = 4000;

/// Independent stream per field so fields can be generated separately and
/// the result never depends on generation order.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn generate(p: &GeneratorProfile) -> ParticleSnapshot {
    let fields = match p.profile {
        Profile::HaccLike => hacc(p),
        Profile::AmdfLike => amdf(p),
    };
    ParticleSnapshot::new(fields).expect("generated fields are finite and equal length")
}

fn clamp_box(v: f64, box_size: f32) -> f32 {
    // Largest f32 strictly below the box edge.
    let top = f32::from_bits(box_size.to_bits() - 1);
    (v as f32).clamp(0.0, top)
}

fn hacc(p: &GeneratorProfile) -> [Vec<f32>; 6] {
    let n = p.n;
    let b = p.box_size as f64;
    let sigma = p.noise * b;
    let noise = |rng: &mut ChaCha8Rng| sigma * rng.sample::<f64, _>(StandardNormal);

    let mut rng = stream(p.seed, 0);
    let xx = (0..n)
        .map(|i| clamp_box(b * i as f64 / n as f64 + noise(&mut rng), p.box_size))
        .collect();

    let mut rng = stream(p.seed, 1);
    let resets = HACC_Y_RESETS as f64;
    let yy = (0..n)
        .map(|i| {
            let t = resets * i as f64 / n as f64;
            clamp_box(b * t.fract() + noise(&mut rng), p.box_size)
        })
        .collect();

    let mut rng = stream(p.seed, 2);
    let mut zz = Vec::with_capacity(n);
    while zz.len() < n {
        let period = rng.gen_range(HACC_Z_PERIOD.0..=HACC_Z_PERIOD.1);
        let offset = rng.gen_range(0.0..0.05 * b);
        for j in 0..period.min(n - zz.len()) {
            let v = offset + (b - offset) * j as f64 / period as f64 + noise(&mut rng);
            zz.push(clamp_box(v, p.box_size));
        }
    }

    let [vx, vy, vz] = [3u64, 4, 5].map(|id| {
        let mut rng = stream(p.seed, id);
        let innovation = p.velocity_scale * (1.0 - HACC_VELOCITY_PHI * HACC_VELOCITY_PHI).sqrt();
        let mut v = p.velocity_scale * rng.sample::<f64, _>(StandardNormal);
        (0..n)
            .map(|_| {
                let out = v as f32;
                v = HACC_VELOCITY_PHI * v + innovation * rng.sample::<f64, _>(StandardNormal);
                out
            })
            .collect()
    });
    [xx, yy, zz, vx, vy, vz]
}

fn amdf(p: &GeneratorProfile) -> [Vec<f32>; 6] {
    let n = p.n;
    let b = p.box_size as f64;
    let mut rng = stream(p.seed, 0);
    let clusters: Vec<[f64; 3]> = (0..n.div_ceil(AMDF_ATOMS_PER_CLUSTER).max(1))
        .map(|_| std::array::from_fn(|_| rng.gen_range(0.0..b)))
        .collect();
    let cluster_spread = Normal::new(0.0, AMDF_CLUSTER_RADIUS * b).unwrap();
    let atom_spread = Normal::new(0.0, p.noise * b).unwrap();

    let mut coords: [Vec<f32>; 3] = std::array::from_fn(|_| Vec::with_capacity(n));
    while coords[0].len() < n {
        let centre: [f64; 3] = if rng.gen_bool(AMDF_CLUSTERED) {
            let c = clusters[rng.gen_range(0..clusters.len())];
            std::array::from_fn(|t| (c[t] + cluster_spread.sample(&mut rng)).rem_euclid(b))
        } else {
            std::array::from_fn(|_| rng.gen_range(0.0..b))
        };
        let atoms = rng.gen_range(3..=4).min(n - coords[0].len());
        for _ in 0..atoms {
            for t in 0..3 {
                coords[t].push(clamp_box(
                    centre[t] + atom_spread.sample(&mut rng),
                    p.box_size,
                ));
            }
        }
    }

    let [vx, vy, vz] = [3u64, 4, 5].map(|id| {
        let mut rng = stream(p.seed, id);
        (0..n)
            .map(|_| (p.velocity_scale * rng.sample::<f64, _>(StandardNormal)) as f32)
            .collect()
    });
    let [xx, yy, zz] = coords;
    [xx, yy, zz, vx, vy, vz]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{lag1_autocorrelation, Field};

    #[test]
    fn deterministic_per_seed() {
        for profile in Profile::ALL {
            let a = generate(&GeneratorProfile::new(profile, 5000, 9));
            let b = generate(&GeneratorProfile::new(profile, 5000, 9));
            let c = generate(&GeneratorProfile::new(profile, 5000, 10));
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn coordinates_stay_in_box() {
        for profile in Profile::ALL {
            let g = GeneratorProfile::new(profile, 20_000, 1);
            let s = generate(&g);
            for f in Field::COORDINATES {
                assert!(
                    s.field(f).iter().all(|&v| (0.0..g.box_size).contains(&v)),
                    "{profile} {f}"
                );
            }
        }
    }

    #[test]
    fn tiny_sizes() {
        for profile in Profile::ALL {
            for n in [0, 1, 2, 3, 5] {
                assert_eq!(generate(&GeneratorProfile::new(profile, n, 0)).len(), n);
            }
        }
    }

    #[test]
    fn autocorrelation_fingerprints() {
        let h = generate(&GeneratorProfile::new(Profile::HaccLike, 200_000, 1));
        assert!(lag1_autocorrelation(h.field(Field::Xx)).unwrap() >= 0.999);
        let vx = lag1_autocorrelation(h.field(Field::Vx)).unwrap();
        assert!((0.90..=0.94).contains(&vx), "{vx}");

        let a = generate(&GeneratorProfile::new(Profile::AmdfLike, 200_000, 1));
        for f in Field::COORDINATES {
            let r = lag1_autocorrelation(a.field(f)).unwrap();
            assert!((0.6..=0.8).contains(&r), "{f} {r}");
        }
        for f in Field::VELOCITIES {
            assert!(lag1_autocorrelation(a.field(f)).unwrap().abs() < 0.01);
        }
    }

    #[test]
    fn profile_names_parse() {
        for profile in Profile::ALL {
            assert_eq!(profile.name().parse::<Profile>().unwrap(), profile);
        }
        assert!("nbody".parse::<Profile>().is_err());
    }
}
