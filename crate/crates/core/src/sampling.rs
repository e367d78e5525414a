//! Low-discrepancy point sets used by the searches and estimators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::{cos, powf, sin, sqrt, Vec3};

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Three-dimensional Halton sequence (bases 2, 3, 5) with a random
/// Cranley-Patterson rotation drawn from `seed`.
#[derive(Debug, Clone)]
pub struct Halton {
    index: u64,
    shift: [f64; 3],
}

impl Halton {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            index: 1,
            shift: [rng.random(), rng.random(), rng.random()],
        }
    }

    /// The `i`-th point, independent of iteration state.
    pub fn point(&self, i: u64) -> [f64; 3] {
        let mut u = [
            radical_inverse(i, 2),
            radical_inverse(i, 3),
            radical_inverse(i, 5),
        ];
        for (c, s) in u.iter_mut().zip(self.shift) {
            *c += s;
            if *c >= 1.0 {
                *c -= 1.0;
            }
        }
        u
    }
}

impl Iterator for Halton {
    type Item = [f64; 3];

    fn next(&mut self) -> Option<[f64; 3]> {
        let p = self.point(self.index);
        self.index += 1;
        Some(p)
    }
}

/// Unit vector from two uniforms, area-preserving.
pub fn unit_direction(u: f64, v: f64) -> Vec3 {
    let z = 2.0 * u - 1.0;
    let rho = sqrt((1.0 - z * z).max(0.0));
    let phi = 2.0 * core::f64::consts::PI * v;
    Vec3::new(rho * cos(phi), rho * sin(phi), z)
}

/// Maps the unit cube uniformly onto the ball of `radius` about `center`.
pub fn ball_point(u: [f64; 3], center: Vec3, radius: f64) -> Vec3 {
    center + unit_direction(u[0], u[1]) * (radius * powf(u[2], 1.0 / 3.0))
}
