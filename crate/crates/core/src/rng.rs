//! Deterministic random streams.
//!
//! A stream is a ChaCha20 keystream selected by `(seed, stream_id)`. ChaCha
//! is counter based, so distinct stream ids give independent sequences and a
//! sweep cell can be regenerated in isolation on any thread.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::matrix::C64;

#[derive(Clone, Debug)]
pub struct RngStream {
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { rng }
    }

    /// Stream id for sweep cell `(trial, pilot_len)`.
    pub fn cell_id(trial: u64, pilot_len: u64) -> u64 {
        (trial << 32) | (pilot_len & 0xffff_ffff)
    }

    /// Uniform on (0, 1].
    pub fn uniform_open0(&mut self) -> f64 {
        1.0 - self.rng.gen::<f64>()
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Circularly-symmetric complex Gaussian with `E|z|² = variance`, via
    /// Box–Muller: each real component has variance `variance / 2`.
    pub fn complex_gaussian(&mut self, variance: f64) -> C64 {
        let u1 = self.uniform_open0();
        let u2 = self.uniform();
        let radius = (-variance * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        C64::new(radius * c, radius * s)
    }

    pub(crate) fn inner(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let draw = |seed, id| {
            let mut s = RngStream::new(seed, id);
            (0..8).map(|_| s.complex_gaussian(1.0)).collect::<Vec<_>>()
        };
        assert_eq!(draw(7, 3), draw(7, 3));
        assert_ne!(draw(7, 3), draw(7, 4));
        assert_ne!(draw(7, 3), draw(8, 3));
    }

    #[test]
    fn gaussian_moments() {
        let mut s = RngStream::new(1, 0);
        let n = 200_000;
        let (mut re2, mut im2, mut cross, mut mean) = (0.0, 0.0, 0.0, C64::new(0.0, 0.0));
        for _ in 0..n {
            let z = s.complex_gaussian(2.0);
            re2 += z.re * z.re;
            im2 += z.im * z.im;
            cross += z.re * z.im;
            mean += z;
        }
        let n = n as f64;
        assert!((re2 / n - 1.0).abs() < 0.02);
        assert!((im2 / n - 1.0).abs() < 0.02);
        assert!((cross / n).abs() < 0.01);
        assert!((mean / n).norm() < 0.01);
    }

    #[test]
    fn cell_ids_do_not_collide() {
        assert_ne!(RngStream::cell_id(1, 30), RngStream::cell_id(0, 30));
        assert_ne!(RngStream::cell_id(0, 31), RngStream::cell_id(0, 30));
    }
}
