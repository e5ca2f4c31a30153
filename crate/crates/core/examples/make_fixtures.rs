//! Regenerates the checked-in fixture trees under `fixtures/`.
//!
//! ```text
//! cargo run -p embalign-core --example make_fixtures -- fixtures
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use embalign_core::dataset::{CongruenceLabel, TrackId};
use embalign_core::ingest::{
    encode_npy, encode_wav_pcm16, parse_wav, toy_embed, write_embedding_csv, write_labels, LabelAssignment, NpyDtype,
};
use embalign_core::permutation::Verdict;
use embalign_core::report::render_matrix_csv;
use embalign_core::{synth, Matrix};

use CongruenceLabel::{Always as A, HalfTheTime as HT, Mostly as M, Sometimes as S};

const SAMPLE_RATE: u32 = 8_000;
const SAMPLES: usize = 4_000;
const FRAME: usize = 256;
const HOP: usize = 128;

const LABELS: [[CongruenceLabel; 6]; 3] = [[M, M, A, M, M, M], [S, S, M, S, S, HT], [HT, S, S, M, S, S]];

const MODEL_GRID: [&str; 6] = ["IDDDDD", "DIDDDD", "DDIIDD", "DDIIDD", "DDDDII", "DDDDII"];

fn tid(r: u32, v: u32) -> TrackId {
    TrackId::new(r, v).expect("recording >= 1")
}

fn put(path: &Path, bytes: &[u8]) {
    fs::create_dir_all(path.parent().expect("has parent")).expect("mkdir");
    fs::write(path, bytes).expect("write fixture");
}

/// Tracks sharing a label share a timbre; the seed only changes the noise.
fn kanjira_track(r: u32, v: u32, label: CongruenceLabel) -> embalign_core::ingest::AudioBuffer {
    let base = 110.0 * f64::from(r + 1);
    let k = f64::from(label.ordinal());
    let partials = [(base, 0.4), (base * (2.0 + 0.5 * k), 0.25), (base * (3.0 + k), 0.1 + 0.05 * k)];
    synth::textured_tone(&partials, 0.02 + 0.03 * k, SAMPLE_RATE, SAMPLES, u64::from(r * 100 + v))
}

fn kanjira(root: &Path) {
    let mut labels = LabelAssignment::new();
    for r in 1..=3u32 {
        for v in 0..6u32 {
            let id = tid(r, v);
            let label = LABELS[r as usize - 1][v as usize];
            labels.set(id, label);
            let wav = encode_wav_pcm16(&[kanjira_track(r, v, label).samples()], SAMPLE_RATE);
            put(&root.join(format!("Data/Recordings/{id}.wav")), &wav);
            // Embed what was written, so `embalign embed` reproduces the file.
            let audio = parse_wav(&wav).expect("valid wav");
            let emb = toy_embed(&audio, FRAME, HOP).expect("long enough");
            let path = root.join(format!("Data/Embeddings/{id}.csv"));
            fs::create_dir_all(path.parent().expect("has parent")).expect("mkdir");
            write_embedding_csv(&emb, &path).expect("write csv");
        }
    }
    write_labels(&labels, &root.join("Data/labels.csv")).expect("write labels");
}

fn table_repro(root: &Path) {
    let mut labels = LabelAssignment::new();
    for (v, &label) in LABELS[2].iter().enumerate() {
        labels.set(tid(3, v as u32), label);
    }
    fs::create_dir_all(root.join("Data")).expect("mkdir");
    write_labels(&labels, &root.join("Data/labels.csv")).expect("write labels");

    let order: Vec<TrackId> = (0..6).map(|v| tid(3, v)).collect();
    let cells: Vec<Verdict> = MODEL_GRID
        .iter()
        .flat_map(|row| row.chars().map(|c| if c == 'I' { Verdict::I } else { Verdict::D }))
        .collect();
    put(&root.join("R3_model.csv"), render_matrix_csv(&order, &cells).expect("6x6").as_bytes());
    put(&root.join("embalign.conf"), b"# align reads the model grid instead of embeddings\nmodel-matrix=R3_model.csv\n");
}

/// Values that are exact in `f32`, so the float32 files equal their CSV twins.
fn npy_twin(frames: usize, dims: usize) -> Matrix {
    let data = (0..frames * dims).map(|k| (k as f64 - 7.0) * 0.125 + (k % 3) as f64 * 1024.0).collect();
    Matrix::new(data, frames, dims).expect("valid")
}

fn header_bytes(dict: &str) -> Vec<u8> {
    let mut out = b"\x93NUMPY\x01\x00".to_vec();
    let unpadded = 10 + dict.len() + 1;
    let pad = (64 - unpadded % 64) % 64;
    out.extend_from_slice(&((dict.len() + pad + 1) as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.extend(std::iter::repeat_n(b' ', pad));
    out.push(b'\n');
    out
}

fn npy(root: &Path) {
    let m = npy_twin(5, 3);
    let csv = root.join("twin.csv");
    fs::create_dir_all(root).expect("mkdir");
    write_embedding_csv(&m, &csv).expect("write csv");
    for (dtype, tag) in [(NpyDtype::F4, "f4"), (NpyDtype::F8, "f8")] {
        for (fortran, order) in [(false, "c"), (true, "fortran")] {
            put(&root.join(format!("twin_{tag}_{order}.npy")), &encode_npy(&m, dtype, fortran));
        }
    }
    let column = npy_twin(6, 1);
    write_embedding_csv(&column, &root.join("column.csv")).expect("write csv");
    let mut one_d = header_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (6,), }");
    for v in column.as_slice() {
        one_d.extend_from_slice(&v.to_le_bytes());
    }
    put(&root.join("column_1d.npy"), &one_d);

    let good = encode_npy(&m, NpyDtype::F8, false);
    let bad = root.join("malformed");
    let mut magic = good.clone();
    magic[1] = b'X';
    put(&bad.join("bad_magic.npy"), &magic);
    put(&bad.join("truncated.npy"), &good[..good.len() - 5]);
    let mut version = good.clone();
    version[6] = 3;
    put(&bad.join("version3.npy"), &version);
    let mut big = header_bytes("{'descr': '>f8', 'fortran_order': False, 'shape': (5, 3), }");
    big.extend(m.as_slice().iter().flat_map(|v| v.to_be_bytes()));
    put(&bad.join("big_endian.npy"), &big);
    let mut ints = header_bytes("{'descr': '<i4', 'fortran_order': False, 'shape': (5, 3), }");
    ints.extend((0..15i32).flat_map(i32::to_le_bytes));
    put(&bad.join("int32.npy"), &ints);
    let mut rank3 = header_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (2, 2, 2), }");
    rank3.extend((0..8).flat_map(|k| f64::from(k).to_le_bytes()));
    put(&bad.join("rank3.npy"), &rank3);
    let mut garbled = header_bytes("{'descr': '<f8', 'fortran_order': Maybe, 'shape': (5, 3), }");
    garbled.extend(m.as_slice().iter().flat_map(|v| v.to_le_bytes()));
    put(&bad.join("bad_header.npy"), &garbled);
    let mut nan = m.as_slice().to_vec();
    let mut nan_bytes = header_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (5, 3), }");
    nan[4] = f64::NAN;
    nan_bytes.extend(nan.iter().flat_map(|v| v.to_le_bytes()));
    put(&bad.join("nan.npy"), &nan_bytes);
}

fn main() {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("fixtures"));
    kanjira(&out.join("kanjira"));
    table_repro(&out.join("table-repro"));
    npy(&out.join("npy"));
    println!("fixtures written to {}", out.display());
}
