//! Seeded synthetic inputs: Gaussian embedding clusters and test tones.
//!
//! Used by the test suites, the acceptance harness and the fixture builder.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ingest::AudioBuffer;
use crate::Matrix;

/// `frames` rows drawn from an isotropic Gaussian at `mean` with standard
/// deviation `sd`.
pub fn gaussian_cluster(frames: usize, mean: &[f64], sd: f64, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..frames)
        .flat_map(|_| mean.to_vec())
        .map(|mu| {
            let z: f64 = StandardNormal.sample(&mut rng);
            mu + sd * z
        })
        .collect();
    Matrix::new(data, frames, mean.len()).expect("cluster shape")
}

/// Mono sine at `freq` Hz, `amplitude` in (0, 1].
pub fn sine(freq: f64, sample_rate: u32, samples: usize, amplitude: f64) -> AudioBuffer {
    let step = std::f64::consts::TAU * freq / f64::from(sample_rate);
    let samples = (0..samples).map(|i| amplitude * (step * i as f64).sin()).collect();
    AudioBuffer::new(samples, sample_rate).expect("non-empty tone")
}

/// Sum of `partials` (frequency, amplitude) plus seeded white noise at
/// `noise` amplitude, clipped to [-1, 1].
pub fn textured_tone(
    partials: &[(f64, f64)],
    noise: f64,
    sample_rate: u32,
    samples: usize,
    seed: u64,
) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = f64::from(sample_rate);
    let samples = (0..samples)
        .map(|i| {
            let t = i as f64 / sr;
            let tone: f64 = partials
                .iter()
                .map(|&(f, a)| a * (std::f64::consts::TAU * f * t).sin())
                .sum();
            let z: f64 = StandardNormal.sample(&mut rng);
            (tone + noise * z).clamp(-1.0, 1.0)
        })
        .collect();
    AudioBuffer::new(samples, sample_rate).expect("non-empty tone")
}
