//! Training data: noisy reduced distributions of random ansatz states, labelled with the
//! analytic one-hot populations.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::reduce::{hd_reduce, kept_size};
use super::MitigationError;
use crate::ansatz::{amplitude_map, build_ansatz, AnsatzParameters};
use crate::sim::{self, Gate, NoiseModel};
use crate::{seed, DocumentError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub params: Vec<f64>,
    /// Index into the measured-pair list.
    pub pair_index: usize,
    /// Probabilities over the Hamming-distance-1 basis.
    pub reduced: Vec<f64>,
    pub discarded_mass: f64,
    /// `c_m²` from the closed-form map.
    pub label: Vec<f64>,
}

impl TrainingSample {
    pub fn width(&self) -> usize {
        self.label.len()
    }
}

/// Network input: reduced probabilities followed by a one-hot pair encoding
/// (all zeros when `pair_index` is `None`).
pub fn encode_input(reduced: &[f64], pair_index: Option<usize>, pair_count: usize) -> Vec<f64> {
    let mut x = Vec::with_capacity(reduced.len() + pair_count);
    x.extend_from_slice(reduced);
    x.extend((0..pair_count).map(|i| if Some(i) == pair_index { 1.0 } else { 0.0 }));
    x
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub count: usize,
    pub shots: u64,
    /// Qubit pairs where the two probe CNOTs go (one per measurement job).
    pub pairs: Vec<(usize, usize)>,
    pub seed: u64,
}

/// Sample `i` draws angles uniformly from `[−π, π]`, picks a pair, runs ansatz + CNOT·CNOT on
/// that pair under `noise`, samples `shots` with readout error and reduces the histogram.
/// Samples use independent derived seeds and are generated in parallel.
pub fn generate_dataset(
    width: usize,
    spec: &DatasetSpec,
    noise: &NoiseModel,
    layout: &[usize],
) -> Result<Vec<TrainingSample>, MitigationError> {
    if spec.pairs.is_empty() {
        return Err(MitigationError::Settings("no measurement pairs".into()));
    }
    noise.check_layout(layout, width)?;
    (0..spec.count)
        .into_par_iter()
        .map(|i| {
            let s = seed::derive(spec.seed, i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let params: Vec<f64> =
                (0..width - 1).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
            let pair_index = rng.random_range(0..spec.pairs.len());
            let (p, q) = spec.pairs[pair_index];
            let ansatz = AnsatzParameters::new(params);
            let mut circuit = build_ansatz(width, &ansatz)?;
            circuit.extend([Gate::cnot(p, q), Gate::cnot(p, q)])?;
            let state = sim::run_noisy(&circuit, noise, layout)?;
            let histogram = sim::sample(&state, spec.shots, Some((noise, layout)), seed::derive(s, 1))?;
            let reduced = hd_reduce(&histogram);
            Ok(TrainingSample {
                label: amplitude_map(&ansatz).populations(),
                params: ansatz.into_inner(),
                pair_index,
                reduced: reduced.probabilities,
                discarded_mass: reduced.discarded_mass,
            })
        })
        .collect()
}

fn header(width: usize) -> Vec<String> {
    let mut h: Vec<String> = (0..width - 1).map(|i| format!("p{i}")).collect();
    h.push("pair_index".into());
    h.extend((0..kept_size(width)).map(|i| format!("r{i}")));
    h.push("discarded".into());
    h.extend((0..width).map(|i| format!("label{i}")));
    h
}

/// CSV with a header row. Floats are written in shortest round-trip form.
pub fn write_dataset_csv<W: Write>(samples: &[TrainingSample], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let Some(first) = samples.first() else {
        w.flush()?;
        return Ok(());
    };
    w.write_record(header(first.width()))?;
    for s in samples {
        let mut row: Vec<String> = s.params.iter().map(|v| v.to_string()).collect();
        row.push(s.pair_index.to_string());
        row.extend(s.reduced.iter().map(|v| v.to_string()));
        row.push(s.discarded_mass.to_string());
        row.extend(s.label.iter().map(|v| v.to_string()));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn dataset_to_csv(samples: &[TrainingSample]) -> String {
    let mut buf = Vec::new();
    write_dataset_csv(samples, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

/// Parses a dataset written by [`write_dataset_csv`]; the width comes from the header.
pub fn read_dataset_csv<R: Read>(input: R) -> Result<Vec<TrainingSample>, DocumentError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let head = r.headers().map_err(|e| DocumentError::Parse(e.to_string()))?.clone();
    if head.is_empty() || (head.len() == 1 && head[0].is_empty()) {
        return Ok(Vec::new());
    }
    let width = head.iter().filter(|h| h.starts_with("label")).count();
    if width < 2 {
        return Err(DocumentError::invalid("header", "need at least two label columns"));
    }
    let expected = header(width);
    if head.iter().ne(expected.iter().map(String::as_str)) {
        return Err(DocumentError::invalid("header", format!("expected columns {}", expected.join(","))));
    }
    let kept = kept_size(width);
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| DocumentError::Parse(e.to_string()))?;
        let num = |col: usize| -> Result<f64, DocumentError> {
            let v: f64 = rec[col]
                .parse()
                .map_err(|_| DocumentError::invalid(format!("row {row}.{}", &head[col]), "not a number"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(DocumentError::invalid(format!("row {row}.{}", &head[col]), "not finite"))
            }
        };
        let mut c = 0;
        let params = (0..width - 1).map(|i| num(c + i)).collect::<Result<Vec<_>, _>>()?;
        c += width - 1;
        let pair_index =
            rec[c].parse().map_err(|_| DocumentError::invalid(format!("row {row}.pair_index"), "not an index"))?;
        c += 1;
        let reduced = (0..kept).map(|i| num(c + i)).collect::<Result<Vec<_>, _>>()?;
        c += kept;
        let discarded_mass = num(c)?;
        c += 1;
        let label = (0..width).map(|i| num(c + i)).collect::<Result<Vec<_>, _>>()?;
        out.push(TrainingSample { params, pair_index, reduced, discarded_mass, label });
    }
    Ok(out)
}

/// SHA-256 of the CSV serialization, hex encoded.
pub fn dataset_hash(samples: &[TrainingSample]) -> String {
    hex::encode(Sha256::digest(dataset_to_csv(samples).as_bytes()))
}
