//! RIFF/WAVE PCM 16-bit decoding (mono, or multi-channel downmixed by
//! averaging) and a matching encoder for fixtures.

use std::path::Path;

use super::{read_file, AudioBuffer, IngestError};

const FORMAT_PCM: u16 = 1;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

struct Format {
    channels: u16,
    sample_rate: u32,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn parse_format(body: &[u8]) -> Result<Format, IngestError> {
    if body.len() < 16 {
        return Err(IngestError::TruncatedData { expected: 16, found: body.len() });
    }
    let mut tag = u16_at(body, 0);
    if tag == FORMAT_EXTENSIBLE && body.len() >= 26 {
        // Sub-format GUID starts with the plain format tag.
        tag = u16_at(body, 24);
    }
    let channels = u16_at(body, 2);
    let sample_rate = u32_at(body, 4);
    let bits = u16_at(body, 14);
    if tag != FORMAT_PCM {
        return Err(IngestError::UnsupportedCodec(format!("format tag {tag:#06x}")));
    }
    if bits != 16 {
        return Err(IngestError::UnsupportedCodec(format!("{bits}-bit PCM")));
    }
    if channels == 0 || sample_rate == 0 {
        return Err(IngestError::UnsupportedCodec("zero channels or sample rate".into()));
    }
    Ok(Format { channels, sample_rate })
}

/// Decodes WAV bytes; samples are scaled by 1/32768.
pub fn parse_wav(bytes: &[u8]) -> Result<AudioBuffer, IngestError> {
    if bytes.len() < 12 || &bytes[..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(IngestError::BadRiffHeader);
    }
    let mut pos = 12;
    let mut format = None;
    let mut data = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start + size;
        if id == b"data" {
            if body_end > bytes.len() {
                return Err(IngestError::TruncatedData { expected: size, found: bytes.len() - body_start });
            }
            data = Some(&bytes[body_start..body_end]);
            break;
        }
        if body_end > bytes.len() {
            return Err(IngestError::TruncatedData { expected: size, found: bytes.len() - body_start });
        }
        if id == b"fmt " {
            format = Some(parse_format(&bytes[body_start..body_end])?);
        }
        pos = body_end + (size & 1);
    }
    let format = format.ok_or(IngestError::BadRiffHeader)?;
    let data = data.ok_or(IngestError::TruncatedData { expected: 1, found: 0 })?;
    let channels = usize::from(format.channels);
    let frame_bytes = 2 * channels;
    if data.len() % frame_bytes != 0 {
        return Err(IngestError::TruncatedData {
            expected: data.len().next_multiple_of(frame_bytes),
            found: data.len(),
        });
    }
    let samples: Vec<f64> = data
        .chunks_exact(frame_bytes)
        .map(|frame| {
            let sum: f64 = frame
                .chunks_exact(2)
                .map(|s| f64::from(i16::from_le_bytes([s[0], s[1]])) / 32768.0)
                .sum();
            sum / channels as f64
        })
        .collect();
    AudioBuffer::new(samples, format.sample_rate)
        .ok_or(IngestError::TruncatedData { expected: frame_bytes, found: 0 })
}

pub fn decode_wav(path: &Path) -> Result<AudioBuffer, IngestError> {
    parse_wav(&read_file(path)?)
}

/// Encodes interleaved channel data as 16-bit PCM. `channels[c][i]` is
/// sample `i` of channel `c`; values are clipped to [-1, 1).
pub fn encode_wav_pcm16(channels: &[&[f64]], sample_rate: u32) -> Vec<u8> {
    let n_ch = channels.len();
    let frames = channels.first().map_or(0, |c| c.len());
    let data_len = frames * n_ch * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&(n_ch as u16).to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * n_ch as u32 * 2).to_le_bytes());
    out.extend_from_slice(&((n_ch * 2) as u16).to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for i in 0..frames {
        for ch in channels {
            let v = (ch[i] * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn decodes_one_second_tone() {
        let tone = synth::sine(440.0, 16_000, 16_000, 0.9);
        let bytes = encode_wav_pcm16(&[tone.samples()], 16_000);
        let audio = parse_wav(&bytes).unwrap();
        assert_eq!(audio.len(), 16_000);
        assert_eq!(audio.sample_rate(), 16_000);
        assert!(audio.samples().iter().all(|s| s.abs() <= 1.0));
        let data_len = u32_at(&bytes, 40) as usize;
        assert_eq!(audio.len(), data_len / 2);
        for (a, b) in audio.samples().iter().zip(tone.samples()) {
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }

    #[test]
    fn stereo_with_identical_channels_equals_mono() {
        let tone = synth::sine(220.0, 8_000, 800, 0.5);
        let mono = parse_wav(&encode_wav_pcm16(&[tone.samples()], 8_000)).unwrap();
        let stereo_bytes = encode_wav_pcm16(&[tone.samples(), tone.samples()], 8_000);
        let stereo = parse_wav(&stereo_bytes).unwrap();
        assert_eq!(stereo, mono);
        assert_eq!(stereo.len(), (u32_at(&stereo_bytes, 40) as usize) / (2 * 2));
    }

    #[test]
    fn stereo_is_averaged() {
        let left = [0.5, -0.25];
        let right = [0.0, 0.25];
        let audio = parse_wav(&encode_wav_pcm16(&[&left, &right], 100)).unwrap();
        assert_eq!(audio.samples(), &[0.25, 0.0]);
    }

    #[test]
    fn rejects_bad_files() {
        let mut bytes = encode_wav_pcm16(&[&[0.0, 0.1]], 8_000);
        bytes[..4].copy_from_slice(b"RIFX");
        assert!(matches!(parse_wav(&bytes), Err(IngestError::BadRiffHeader)));

        let mut float = encode_wav_pcm16(&[&[0.0, 0.1]], 8_000);
        float[20] = 3; // IEEE float
        assert!(matches!(parse_wav(&float), Err(IngestError::UnsupportedCodec(_))));

        let mut eight_bit = encode_wav_pcm16(&[&[0.0, 0.1]], 8_000);
        eight_bit[34] = 8;
        assert!(matches!(parse_wav(&eight_bit), Err(IngestError::UnsupportedCodec(_))));

        let full = encode_wav_pcm16(&[&[0.0, 0.1, 0.2, 0.3]], 8_000);
        assert!(matches!(parse_wav(&full[..full.len() - 3]), Err(IngestError::TruncatedData { .. })));
        assert!(matches!(parse_wav(b"RIFF"), Err(IngestError::BadRiffHeader)));
    }

    #[test]
    fn skips_unknown_chunks() {
        let plain = encode_wav_pcm16(&[&[0.0, 0.5, -0.5]], 8_000);
        let mut with_list = plain[..36].to_vec();
        with_list.extend_from_slice(b"LIST");
        with_list.extend_from_slice(&3u32.to_le_bytes());
        with_list.extend_from_slice(b"abc\0");
        with_list.extend_from_slice(&plain[36..]);
        assert_eq!(parse_wav(&with_list).unwrap(), parse_wav(&plain).unwrap());
    }
}
