//! Random test systems and the particle CSV format.
//!
//! Generation uses ChaCha8 seeded with the user seed. Positions are drawn
//! from stream 0 (x, y, z per particle, in particle order), charges from
//! stream 1, and oracle sample indices from stream 2, so changing one never
//! perturbs the others.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::particles::ParticleSystem;

pub const POSITION_STREAM: u64 = 0;
pub const CHARGE_STREAM: u64 = 1;
pub const SAMPLE_STREAM: u64 = 2;

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n` particles uniform in `[-1, 1]^3` with charges uniform in `[-1, 1]`.
pub fn generate_particles(n: usize, seed: u64) -> ParticleSystem {
    let mut pos = rng_for(seed, POSITION_STREAM);
    let mut chg = rng_for(seed, CHARGE_STREAM);
    let mut sys = ParticleSystem::with_capacity(n);
    for _ in 0..n {
        let p = [
            pos.gen_range(-1.0..=1.0),
            pos.gen_range(-1.0..=1.0),
            pos.gen_range(-1.0..=1.0),
        ];
        sys.push(p, chg.gen_range(-1.0..=1.0));
    }
    sys
}

/// `m` distinct target indices out of `n`, sorted.
pub fn sample_indices(n: usize, m: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_for(seed, SAMPLE_STREAM);
    let mut idx = rand::seq::index::sample(&mut rng, n, m.min(n)).into_vec();
    idx.sort_unstable();
    idx
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    x: f64,
    y: f64,
    z: f64,
    q: f64,
}

/// Reads `x,y,z,q` rows.
pub fn read_particles_csv<R: Read>(reader: R) -> Result<ParticleSystem> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut sys = ParticleSystem::default();
    for row in rdr.deserialize() {
        let Row { x, y, z, q } = row?;
        sys.push([x, y, z], q);
    }
    Ok(sys)
}

/// Writes `x,y,z,q` rows with shortest round-trip formatting.
pub fn write_particles_csv<W: Write>(sys: &ParticleSystem, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for i in 0..sys.len() {
        let p = sys.position(i);
        wtr.serialize(Row {
            x: p[0],
            y: p[1],
            z: p[2],
            q: sys.q[i],
        })?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible() {
        assert_eq!(generate_particles(1000, 7), generate_particles(1000, 7));
        assert_ne!(generate_particles(10, 7), generate_particles(10, 8));
    }

    #[test]
    fn empty() {
        assert!(generate_particles(0, 1).is_empty());
    }

    #[test]
    fn within_bounds() {
        let sys = generate_particles(100_000, 3);
        for v in [&sys.x, &sys.y, &sys.z, &sys.q] {
            assert!(v.iter().all(|c| (-1.0..=1.0).contains(c)));
        }
    }

    #[test]
    fn streams_are_independent() {
        // the first particle's position does not depend on how many charges follow
        let a = generate_particles(1, 11);
        let b = generate_particles(50, 11);
        assert_eq!(a.position(0), b.position(0));
        assert_eq!(a.q[0], b.q[0]);
    }

    #[test]
    fn samples_distinct_sorted() {
        let s = sample_indices(1000, 100, 5);
        assert_eq!(s.len(), 100);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(sample_indices(10, 50, 5), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let sys = generate_particles(200, 9);
        let mut buf = Vec::new();
        write_particles_csv(&sys, &mut buf).unwrap();
        assert!(buf.starts_with(b"x,y,z,q\n"));
        let back = read_particles_csv(buf.as_slice()).unwrap();
        assert_eq!(back, sys);
    }
}
