//! Frame-feature stand-in for a pre-trained audio model.
//!
//! Each frame becomes `[ln(eps + mean square), zero-crossing rate, spectral
//! centroid in Hz, spectral flatness]`. The spectrum is the magnitude of the
//! FFT of the Hann-windowed frame, bins `0..=frame_size/2`. An all-zero frame
//! is `[ln eps, 0, 0, 1]`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{AudioBuffer, IngestError};
use crate::Matrix;

pub const EPSILON: f64 = 1e-10;

pub(crate) fn hann(frame_size: usize) -> Vec<f64> {
    (0..frame_size)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / frame_size as f64).cos())
        .collect()
}

fn zero_crossing_rate(frame: &[f64]) -> f64 {
    let crossings = frame.windows(2).filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0)).count();
    crossings as f64 / (frame.len() - 1) as f64
}

/// Amplitude-weighted mean frequency and power-spectrum flatness.
pub(crate) fn centroid_and_flatness(magnitudes: &[f64], bin_hz: f64) -> (f64, f64) {
    let total: f64 = magnitudes.iter().sum();
    if total == 0.0 {
        return (0.0, 1.0);
    }
    let centroid = magnitudes.iter().enumerate().map(|(k, m)| k as f64 * bin_hz * m).sum::<f64>() / total;
    let bins = magnitudes.len() as f64;
    let log_mean = magnitudes.iter().map(|m| (m * m + EPSILON).ln()).sum::<f64>() / bins;
    let arith_mean = magnitudes.iter().map(|m| m * m).sum::<f64>() / bins;
    (centroid, log_mean.exp() / (arith_mean + EPSILON))
}

pub fn toy_embed(audio: &AudioBuffer, frame_size: usize, hop: usize) -> Result<Matrix, IngestError> {
    let len = audio.len();
    if frame_size < 2 || hop == 0 {
        return Err(IngestError::AudioTooShort { len, needed: 2 * frame_size.max(2) });
    }
    if len < 2 * frame_size {
        return Err(IngestError::AudioTooShort { len, needed: 2 * frame_size });
    }
    let frames = (len - frame_size) / hop + 1;
    if frames < 2 {
        return Err(IngestError::AudioTooShort { len, needed: frame_size + hop });
    }

    let window = hann(frame_size);
    let fft = FftPlanner::new().plan_fft_forward(frame_size);
    let bin_hz = f64::from(audio.sample_rate()) / frame_size as f64;
    let mut buffer = vec![Complex::new(0.0, 0.0); frame_size];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut magnitudes = vec![0.0; frame_size / 2 + 1];
    let mut data = Vec::with_capacity(frames * 4);

    for f in 0..frames {
        let frame = &audio.samples()[f * hop..f * hop + frame_size];
        let energy = frame.iter().map(|s| s * s).sum::<f64>() / frame_size as f64;
        if frame.iter().all(|&s| s == 0.0) {
            data.extend_from_slice(&[EPSILON.ln(), 0.0, 0.0, 1.0]);
            continue;
        }
        for ((b, &s), &w) in buffer.iter_mut().zip(frame).zip(&window) {
            *b = Complex::new(s * w, 0.0);
        }
        fft.process_with_scratch(&mut buffer, &mut scratch);
        for (m, c) in magnitudes.iter_mut().zip(&buffer) {
            *m = c.norm();
        }
        let (centroid, flatness) = centroid_and_flatness(&magnitudes, bin_hz);
        data.extend_from_slice(&[(EPSILON + energy).ln(), zero_crossing_rate(frame), centroid, flatness]);
    }
    Ok(Matrix::new(data, frames, 4)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    /// O(N^2) DFT magnitudes of the windowed frame, independent of the FFT.
    fn direct_dft_magnitudes(frame: &[f64]) -> Vec<f64> {
        let n = frame.len();
        let w = hann(n);
        (0..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, (&s, &wt)) in frame.iter().zip(&w).enumerate() {
                    let angle = -2.0 * PI * (k * t) as f64 / n as f64;
                    re += s * wt * angle.cos();
                    im += s * wt * angle.sin();
                }
                (re * re + im * im).sqrt()
            })
            .collect()
    }

    #[test]
    fn silent_audio_uses_degenerate_conventions() {
        let silence = AudioBuffer::new(vec![0.0; 4096], 16_000).unwrap();
        let m = toy_embed(&silence, 512, 256).unwrap();
        for row in m.rows() {
            assert_eq!(row, &[EPSILON.ln(), 0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn tone_centroid_matches_direct_dft() {
        let sr = 16_000;
        let frame_size = 1024;
        let tone = synth::sine(440.0, sr, 16_000, 0.8);
        let m = toy_embed(&tone, frame_size, 512).unwrap();
        let bin_hz = f64::from(sr) / frame_size as f64;

        let first = &tone.samples()[..frame_size];
        let (oracle, _) = centroid_and_flatness(&direct_dft_magnitudes(first), bin_hz);
        assert!((m.row(0)[2] - oracle).abs() < 1e-6, "{} vs {oracle}", m.row(0)[2]);
        for row in m.rows() {
            assert!((row[2] - 440.0).abs() <= bin_hz, "centroid {}", row[2]);
            // 440 Hz at 16 kHz crosses zero 880 times per second.
            assert!((row[1] - 880.0 / 16_000.0).abs() < 0.01);
        }
    }

    #[test]
    fn frame_count_formula() {
        let audio = synth::sine(100.0, 8_000, 5_000, 0.5);
        for (frame, hop) in [(256, 128), (512, 100), (1000, 1), (2500, 2500)] {
            let m = toy_embed(&audio, frame, hop).unwrap();
            assert_eq!(m.frames(), (5_000 - frame) / hop + 1);
            assert_eq!(m.dims(), 4);
        }
    }

    #[test]
    fn deterministic() {
        let audio = synth::textured_tone(&[(300.0, 0.3), (1200.0, 0.2)], 0.05, 8_000, 8_000, 3);
        let a = toy_embed(&audio, 400, 160).unwrap();
        let b = toy_embed(&audio, 400, 160).unwrap();
        assert_eq!(a, b);
        assert!(a.rows().all(|r| r[3] > 0.0 && r[3] <= 1.0));
    }

    #[test]
    fn too_short() {
        let audio = synth::sine(100.0, 8_000, 1_000, 0.5);
        assert!(matches!(toy_embed(&audio, 600, 100), Err(IngestError::AudioTooShort { .. })));
        assert!(matches!(toy_embed(&audio, 400, 700), Err(IngestError::AudioTooShort { .. })));
        assert!(matches!(toy_embed(&audio, 1, 1), Err(IngestError::AudioTooShort { .. })));
    }
}
