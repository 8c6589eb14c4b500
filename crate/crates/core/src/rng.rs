//! Reproducible random streams.
//!
//! Every random draw goes through ChaCha20 (`rand_chacha`), whose output is
//! fixed by its algorithm and therefore identical across platforms. A trial is
//! addressed by `(seed, stream)`; streams are derived from the cell and trial
//! indices, so the draws a trial sees do not depend on scheduling.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::scalar::{CMatrix, CVector, Real};

pub type TrialRng = ChaCha20Rng;

/// Generator for `stream` under the master `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> TrialRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for trial `trial` of experiment cell `cell`.
pub fn trial_stream(cell: u32, trial: u32) -> u64 {
    (u64::from(cell) << 32) | u64::from(trial)
}

pub fn trial_rng(seed: u64, cell: u32, trial: u32) -> TrialRng {
    stream_rng(seed, trial_stream(cell, trial))
}

/// Circularly-symmetric complex Gaussian with `E|z|^2 = 1`.
pub fn complex_gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    Complex::new(T::lit(re * scale), T::lit(im * scale))
}

pub fn complex_gaussian_vector<T: Real, R: Rng + ?Sized>(len: usize, rng: &mut R) -> CVector<T> {
    CVector::from_fn(len, |_, _| complex_gaussian(rng))
}

/// Column-major fill, so the draw order is stable.
pub fn complex_gaussian_matrix<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix<T> {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Uniform draw on `[0, 1)`.
pub fn unit_uniform<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.random::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| trial_rng(7, 1, 2).random()).collect();
        let b: Vec<u64> = (0..4).map(|_| trial_rng(7, 1, 2).random()).collect();
        assert_eq!(a, b);
        let mut x = trial_rng(7, 1, 2);
        let mut y = trial_rng(7, 1, 3);
        assert_ne!(x.random::<u64>(), y.random::<u64>());
    }

    #[test]
    fn chacha_output_is_pinned() {
        // Guards against an upstream algorithm change silently altering every
        // experiment.
        let mut rng = stream_rng(0, 0);
        let first: u64 = rng.random();
        let mut other = stream_rng(1, trial_stream(2, 3));
        let g: Complex<f64> = complex_gaussian(&mut other);
        assert_eq!(first, 449_479_075_714_955_186);
        assert_eq!(g, Complex::new(1.235929009187085e-2, 2.8999182178795924e-1));
    }
}
