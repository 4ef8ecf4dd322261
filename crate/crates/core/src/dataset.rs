//! Benchmark loaders and the synthetic additive-noise generator.
//!
//! Two on-disk formats are supported: the challenge layout (one CSV of
//! space-separated sample columns plus a CSV of direction targets) and the
//! per-pair text files of the real-world cause-effect corpus with its
//! metadata table.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as RandDistribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{VariableKind, VariablePair};
use crate::seed::derive_seed;

/// Ground-truth relationship between the two columns of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairLabel {
    Causal,
    Anticausal,
    Confounded,
    Independent,
}

impl PairLabel {
    pub const ALL: [PairLabel; 4] = [
        PairLabel::Causal,
        PairLabel::Anticausal,
        PairLabel::Confounded,
        PairLabel::Independent,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PairLabel::Causal => "causal",
            PairLabel::Anticausal => "anticausal",
            PairLabel::Confounded => "confounded",
            PairLabel::Independent => "independent",
        }
    }

    /// The label after exchanging the roles of x and y.
    pub fn swapped(&self) -> PairLabel {
        match self {
            PairLabel::Causal => PairLabel::Anticausal,
            PairLabel::Anticausal => PairLabel::Causal,
            other => *other,
        }
    }
}

impl fmt::Display for PairLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PairLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "causal" => Ok(PairLabel::Causal),
            "anticausal" => Ok(PairLabel::Anticausal),
            "confounded" => Ok(PairLabel::Confounded),
            "independent" => Ok(PairLabel::Independent),
            other => Err(Error::InvalidLabels(format!("unknown label {other:?}"))),
        }
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetSource {
    Challenge,
    Tuebingen,
    Synthetic,
}

/// A labeled collection of variable pairs.
#[derive(Debug, Clone)]
pub struct PairDataset {
    pairs: Vec<VariablePair>,
    labels: Vec<PairLabel>,
    source: DatasetSource,
    skipped: usize,
}

impl PairDataset {
    pub fn new(
        pairs: Vec<VariablePair>,
        labels: Vec<PairLabel>,
        source: DatasetSource,
        skipped: usize,
    ) -> Result<Self> {
        if pairs.len() != labels.len() {
            return Err(Error::InvalidLabels(format!(
                "{} pairs but {} labels",
                pairs.len(),
                labels.len()
            )));
        }
        let mut ids = HashSet::new();
        for p in &pairs {
            if !ids.insert(p.id().to_string()) {
                return Err(Error::Dataset(format!("duplicate pair id {:?}", p.id())));
            }
        }
        Ok(Self {
            pairs,
            labels,
            source,
            skipped,
        })
    }

    pub fn pairs(&self) -> &[VariablePair] {
        &self.pairs
    }

    pub fn labels(&self) -> &[PairLabel] {
        &self.labels
    }

    pub fn source(&self) -> DatasetSource {
        self.source
    }

    /// Pairs present in the input but excluded by the loader.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Keeps only pairs whose label satisfies the predicate.
    pub fn filtered(&self, keep: impl Fn(PairLabel) -> bool) -> PairDataset {
        let mut pairs = Vec::new();
        let mut labels = Vec::new();
        for (p, l) in self.pairs.iter().zip(&self.labels) {
            if keep(*l) {
                pairs.push(p.clone());
                labels.push(*l);
            }
        }
        PairDataset {
            pairs,
            labels,
            source: self.source,
            skipped: self.skipped,
        }
    }
}

/// Distinct-value threshold at or below which an integer-coded column is
/// treated as categorical.
pub const DEFAULT_CATEGORICAL_THRESHOLD: usize = 20;

/// Infers whether a column is categorical: every value integral and the
/// distinct count at most `threshold`.
pub fn infer_kind(values: &[f64], threshold: usize) -> VariableKind {
    let mut distinct = HashSet::new();
    for &v in values {
        if v.fract() != 0.0 {
            return VariableKind::Numerical;
        }
        distinct.insert(v.to_bits());
        if distinct.len() > threshold {
            return VariableKind::Numerical;
        }
    }
    VariableKind::Categorical
}

/// Loads the challenge layout with the default categorical threshold.
pub fn load_challenge(data_path: &Path, target_path: &Path) -> Result<PairDataset> {
    load_challenge_with(data_path, target_path, DEFAULT_CATEGORICAL_THRESHOLD)
}

/// Loads the challenge layout: a data CSV of `SampleID,A,B` rows whose A/B
/// fields hold space-separated decimal samples, and a target CSV of
/// `SampleID,Target,Details` rows mapping each pair to its relationship.
pub fn load_challenge_with(
    data_path: &Path,
    target_path: &Path,
    categorical_threshold: usize,
) -> Result<PairDataset> {
    let mut targets: HashMap<String, (i64, String)> = HashMap::new();
    let mut target_order = 0usize;
    let mut reader = csv::Reader::from_path(target_path)?;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Dataset(format!("target row {i}: {e}")))?;
        if record.len() < 3 {
            return Err(Error::Dataset(format!(
                "target row {i}: expected SampleID,Target,Details"
            )));
        }
        let id = record[0].trim().to_string();
        let target: i64 = record[1]
            .trim()
            .parse()
            .map_err(|_| Error::Dataset(format!("target row {i}: bad target {:?}", &record[1])))?;
        targets.insert(id, (target, record[2].trim().to_string()));
        target_order += 1;
    }

    let mut pairs = Vec::new();
    let mut labels = Vec::new();
    let mut reader = csv::Reader::from_path(data_path)?;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Dataset(format!("data row {i}: {e}")))?;
        if record.len() < 3 {
            return Err(Error::Dataset(format!(
                "data row {i}: expected SampleID,A,B"
            )));
        }
        let id = record[0].trim().to_string();
        let xs = parse_sample_field(&record[1])
            .map_err(|e| Error::Dataset(format!("data row {i} ({id}): {e}")))?;
        let ys = parse_sample_field(&record[2])
            .map_err(|e| Error::Dataset(format!("data row {i} ({id}): {e}")))?;
        let (target, details) = targets
            .get(&id)
            .ok_or_else(|| Error::Dataset(format!("SampleID {id:?} missing from target file")))?;
        let label = challenge_label(*target, details)
            .map_err(|e| Error::Dataset(format!("target for {id}: {e}")))?;
        let x_kind = infer_kind(&xs, categorical_threshold);
        let y_kind = infer_kind(&ys, categorical_threshold);
        let pair = VariablePair::new(id, xs, ys, x_kind, y_kind)
            .map_err(|e| Error::Dataset(format!("data row {i}: {e}")))?;
        pairs.push(pair);
        labels.push(label);
    }
    if pairs.len() != target_order {
        return Err(Error::Dataset(format!(
            "SampleID mismatch: {} data rows vs {} target rows",
            pairs.len(),
            target_order
        )));
    }
    PairDataset::new(pairs, labels, DatasetSource::Challenge, 0)
}

fn parse_sample_field(field: &str) -> std::result::Result<Vec<f64>, String> {
    let values: std::result::Result<Vec<f64>, _> = field
        .split_whitespace()
        .map(|tok| tok.parse::<f64>().map_err(|_| format!("bad value {tok:?}")))
        .collect();
    values
}

fn challenge_label(target: i64, details: &str) -> std::result::Result<PairLabel, String> {
    match target {
        1 => Ok(PairLabel::Causal),
        -1 => Ok(PairLabel::Anticausal),
        0 => match details.to_ascii_lowercase().as_str() {
            "independent" | "4" => Ok(PairLabel::Independent),
            "confounded" | "3" => Ok(PairLabel::Confounded),
            other => Err(format!("ambiguous zero-target detail {other:?}")),
        },
        other => Err(format!("target {other} outside {{-1, 0, 1}}")),
    }
}

/// Writes a dataset in the challenge layout (the inverse of
/// [`load_challenge`]); used for synthetic corpora and round-trip tests.
pub fn write_challenge(ds: &PairDataset, data_path: &Path, target_path: &Path) -> Result<()> {
    let mut data = csv::Writer::from_path(data_path)?;
    data.write_record(["SampleID", "A", "B"])?;
    for p in ds.pairs() {
        let a = p.x().iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
        let b = p.y().iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
        data.write_record([p.id(), &a, &b])?;
    }
    data.flush()?;

    let mut targets = csv::Writer::from_path(target_path)?;
    targets.write_record(["SampleID", "Target", "Details"])?;
    for (p, label) in ds.pairs().iter().zip(ds.labels()) {
        let target = match label {
            PairLabel::Causal => "1",
            PairLabel::Anticausal => "-1",
            PairLabel::Confounded | PairLabel::Independent => "0",
        };
        targets.write_record([p.id(), target, label.as_str()])?;
    }
    targets.flush()?;
    Ok(())
}

/// Loads a directory of `pairNNNN.txt` sample files plus a `pairmeta.txt`
/// table of cause/effect column indices.
///
/// Pairs spanning more than one cause or effect column are skipped and
/// counted; per-pair weights in the metadata are ignored.
pub fn load_tuebingen(dir: &Path) -> Result<PairDataset> {
    let meta_path = dir.join("pairmeta.txt");
    let meta_text = fs::read_to_string(&meta_path)
        .map_err(|e| Error::Dataset(format!("cannot read {}: {e}", meta_path.display())))?;
    let mut meta: HashMap<u32, (usize, usize, usize, usize)> = HashMap::new();
    for (ln, line) in meta_text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 5 {
            return Err(Error::Dataset(format!(
                "pairmeta.txt line {}: expected at least 5 fields",
                ln + 1
            )));
        }
        let id: u32 = fields[0]
            .trim_start_matches("pair")
            .parse()
            .map_err(|_| Error::Dataset(format!("pairmeta.txt line {}: bad id", ln + 1)))?;
        let cols: std::result::Result<Vec<usize>, _> =
            fields[1..5].iter().map(|f| f.parse::<usize>()).collect();
        let cols = cols
            .map_err(|_| Error::Dataset(format!("pairmeta.txt line {}: bad column", ln + 1)))?;
        meta.insert(id, (cols[0], cols[1], cols[2], cols[3]));
    }

    let mut names: Vec<(u32, String)> = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().to_string();
        if let Some(id) = parse_pair_file_name(&name) {
            names.push((id, name));
        }
    }
    names.sort();

    let mut pairs = Vec::new();
    let mut labels = Vec::new();
    let mut skipped = 0usize;
    for (id, name) in names {
        let (cf, cl, ef, el) = *meta
            .get(&id)
            .ok_or_else(|| Error::Dataset(format!("{name}: no pairmeta.txt row")))?;
        if cf != cl || ef != el {
            log::warn!("{name}: multi-column pair skipped");
            skipped += 1;
            continue;
        }
        if cf == 0 || ef == 0 {
            return Err(Error::Dataset(format!("{name}: column indices are 1-based")));
        }
        let path = dir.join(&name);
        let text = fs::read_to_string(&path)?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> =
                line.split_whitespace().map(|t| t.parse::<f64>()).collect();
            let row = row.map_err(|_| {
                Error::Dataset(format!("{name} line {}: unparsable numeric cell", ln + 1))
            })?;
            if row.len() < cf.max(ef) {
                return Err(Error::Dataset(format!(
                    "{name} line {}: {} columns, need {}",
                    ln + 1,
                    row.len(),
                    cf.max(ef)
                )));
            }
            xs.push(row[cf - 1]);
            ys.push(row[ef - 1]);
        }
        let x_kind = infer_kind(&xs, DEFAULT_CATEGORICAL_THRESHOLD);
        let y_kind = infer_kind(&ys, DEFAULT_CATEGORICAL_THRESHOLD);
        let pair = VariablePair::new(format!("pair{id:04}"), xs, ys, x_kind, y_kind)
            .map_err(|e| Error::Dataset(format!("{name}: {e}")))?;
        pairs.push(pair);
        labels.push(PairLabel::Causal);
    }
    PairDataset::new(pairs, labels, DatasetSource::Tuebingen, skipped)
}

fn parse_pair_file_name(name: &str) -> Option<u32> {
    let digits = name.strip_prefix("pair")?.strip_suffix(".txt")?;
    if digits.len() == 4 && digits.bytes().all(|b| b.is_ascii_digit()) {
        digits.parse().ok()
    } else {
        None
    }
}

/// Swaps each pair (and flips its label) independently with probability 0.5
/// under a seeded generator. Requires a dataset of directional labels only.
pub fn randomize_directions(ds: &PairDataset, seed: u64) -> Result<PairDataset> {
    if ds
        .labels()
        .iter()
        .any(|l| !matches!(l, PairLabel::Causal | PairLabel::Anticausal))
    {
        return Err(Error::InvalidLabels(
            "direction randomization needs causal/anticausal labels only".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(ds.len());
    let mut labels = Vec::with_capacity(ds.len());
    for (p, l) in ds.pairs().iter().zip(ds.labels()) {
        if rng.gen::<bool>() {
            pairs.push(p.swapped());
            labels.push(l.swapped());
        } else {
            pairs.push(p.clone());
            labels.push(*l);
        }
    }
    PairDataset::new(pairs, labels, ds.source(), ds.skipped())
}

/// Cause-variable marginals available to the generator.
#[derive(Debug, Clone, Copy)]
enum CauseDist {
    Gaussian,
    Uniform,
    Mixture,
}

/// Mechanism families for the functional model y = f(x) + noise.
#[derive(Debug, Clone, Copy)]
enum Mechanism {
    Linear { slope: f64 },
    Quadratic { sign: f64 },
    Cubic { sign: f64 },
    Sine { freq: f64, phase: f64 },
    ExpSaturating { rate: f64, sign: f64 },
}

impl Mechanism {
    fn sample(rng: &mut ChaCha8Rng) -> Self {
        match rng.gen_range(0..5) {
            0 => Mechanism::Linear {
                slope: pick_sign(rng) * rng.gen_range(0.5..2.0),
            },
            1 => Mechanism::Quadratic {
                sign: pick_sign(rng),
            },
            2 => Mechanism::Cubic {
                sign: pick_sign(rng),
            },
            3 => Mechanism::Sine {
                freq: rng.gen_range(1.0..3.0),
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
            },
            _ => Mechanism::ExpSaturating {
                rate: rng.gen_range(1.0..3.0),
                sign: pick_sign(rng),
            },
        }
    }

    fn apply(&self, x: f64) -> f64 {
        match *self {
            Mechanism::Linear { slope } => slope * x,
            Mechanism::Quadratic { sign } => sign * x * x,
            Mechanism::Cubic { sign } => sign * x * x * x,
            Mechanism::Sine { freq, phase } => (freq * x + phase).sin(),
            Mechanism::ExpSaturating { rate, sign } => {
                // Smooth saturation toward +-1 with exponential decay.
                sign * (2.0 / (1.0 + (-rate * x).exp()) - 1.0)
            }
        }
    }
}

fn pick_sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen::<bool>() {
        1.0
    } else {
        -1.0
    }
}

fn sample_cause(rng: &mut ChaCha8Rng, dist: CauseDist, n: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    (0..n)
        .map(|_| match dist {
            CauseDist::Gaussian => normal.sample(rng),
            CauseDist::Uniform => rng.gen_range(-2.0..2.0),
            CauseDist::Mixture => {
                let center = if rng.gen::<bool>() { -1.2 } else { 1.2 };
                center + 0.6 * normal.sample(rng)
            }
        })
        .collect()
}

fn pick_cause_dist(rng: &mut ChaCha8Rng) -> CauseDist {
    match rng.gen_range(0..3) {
        0 => CauseDist::Gaussian,
        1 => CauseDist::Uniform,
        _ => CauseDist::Mixture,
    }
}

fn apply_mechanism_with_noise(rng: &mut ChaCha8Rng, xs: &[f64]) -> Vec<f64> {
    let mech = Mechanism::sample(rng);
    let noise_frac = rng.gen_range(0.1..0.5);
    let fx: Vec<f64> = xs.iter().map(|&x| mech.apply(x)).collect();
    let n = fx.len() as f64;
    let mean = fx.iter().sum::<f64>() / n;
    let var = fx.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let scale = (var.sqrt() * noise_frac).max(1e-6);
    let normal = Normal::new(0.0, scale).expect("valid normal");
    fx.iter().map(|&v| v + normal.sample(rng)).collect()
}

/// Generates labeled additive-noise pairs.
///
/// Two-class mode alternates causal and anticausal pairs (an anticausal pair
/// is a generated causal pair with columns swapped); four-class mode cycles
/// through causal, anticausal, confounded, and independent. Deterministic
/// under the seed, pair by pair.
pub fn generate_synthetic_anm(
    n_pairs: usize,
    n_samples: usize,
    n_classes: usize,
    seed: u64,
) -> Result<PairDataset> {
    if n_pairs == 0 {
        return Err(Error::InvalidConfig("n_pairs must be positive".into()));
    }
    if n_samples < 50 {
        return Err(Error::InvalidConfig("n_samples must be at least 50".into()));
    }
    if n_classes != 2 && n_classes != 4 {
        return Err(Error::InvalidConfig("n_classes must be 2 or 4".into()));
    }

    let mut pairs = Vec::with_capacity(n_pairs);
    let mut labels = Vec::with_capacity(n_pairs);
    for i in 0..n_pairs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
        let label = match i % n_classes {
            0 => PairLabel::Causal,
            1 => PairLabel::Anticausal,
            2 => PairLabel::Confounded,
            _ => PairLabel::Independent,
        };
        let (xs, ys) = match label {
            PairLabel::Causal | PairLabel::Anticausal => {
                let dist = pick_cause_dist(&mut rng);
                let xs = sample_cause(&mut rng, dist, n_samples);
                let ys = apply_mechanism_with_noise(&mut rng, &xs);
                if label == PairLabel::Anticausal {
                    (ys, xs)
                } else {
                    (xs, ys)
                }
            }
            PairLabel::Confounded => {
                let dist = pick_cause_dist(&mut rng);
                let zs = sample_cause(&mut rng, dist, n_samples);
                let xs = apply_mechanism_with_noise(&mut rng, &zs);
                let ys = apply_mechanism_with_noise(&mut rng, &zs);
                (xs, ys)
            }
            PairLabel::Independent => {
                let dist_x = pick_cause_dist(&mut rng);
                let xs = sample_cause(&mut rng, dist_x, n_samples);
                let dist_y = pick_cause_dist(&mut rng);
                let ys = sample_cause(&mut rng, dist_y, n_samples);
                (xs, ys)
            }
        };
        pairs.push(VariablePair::new(
            format!("synth{i:05}"),
            xs,
            ys,
            VariableKind::Numerical,
            VariableKind::Numerical,
        )?);
        labels.push(label);
    }
    PairDataset::new(pairs, labels, DatasetSource::Synthetic, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs::File;
    use std::io::Write as _;

    fn write_file(path: &Path, content: &str) {
        let mut f = File::create(path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
    }

    #[test]
    fn challenge_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = generate_synthetic_anm(8, 60, 4, 99).unwrap();
        let data = dir.path().join("pairs.csv");
        let targets = dir.path().join("targets.csv");
        write_challenge(&ds, &data, &targets).unwrap();
        let back = load_challenge(&data, &targets).unwrap();
        assert_eq!(back.len(), ds.len());
        assert_eq!(back.labels(), ds.labels());
        for (a, b) in back.pairs().iter().zip(ds.pairs()) {
            assert_eq!(a.id(), b.id());
            assert_eq!(a.x(), b.x());
            assert_eq!(a.y(), b.y());
        }
    }

    #[test]
    fn challenge_label_mapping() {
        assert_eq!(challenge_label(1, "causal").unwrap(), PairLabel::Causal);
        assert_eq!(
            challenge_label(-1, "anticausal").unwrap(),
            PairLabel::Anticausal
        );
        assert_eq!(
            challenge_label(0, "independent").unwrap(),
            PairLabel::Independent
        );
        assert_eq!(
            challenge_label(0, "confounded").unwrap(),
            PairLabel::Confounded
        );
        assert_eq!(challenge_label(0, "4").unwrap(), PairLabel::Independent);
        assert!(challenge_label(0, "???").is_err());
        assert!(challenge_label(2, "causal").is_err());
    }

    #[test]
    fn challenge_counts_preserved() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("pairs.csv");
        let targets = dir.path().join("targets.csv");
        write_file(
            &data,
            "SampleID,A,B\np1,1 2 3,4 5 6\np2,1 1 2,0 0 1\np3,0.5 0.25 1.5,1 2 3\n",
        );
        write_file(
            &targets,
            "SampleID,Target,Details\np1,1,causal\np2,-1,anticausal\np3,0,independent\n",
        );
        let ds = load_challenge(&data, &targets).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(
            ds.labels(),
            &[
                PairLabel::Causal,
                PairLabel::Anticausal,
                PairLabel::Independent
            ]
        );
        assert_eq!(ds.pairs()[2].id(), "p3");
        // 0.5/0.25 are not integer-coded, so the column is numerical.
        assert_eq!(ds.pairs()[2].x_kind(), VariableKind::Numerical);
        assert_eq!(ds.pairs()[0].x_kind(), VariableKind::Categorical);
    }

    #[test]
    fn challenge_id_mismatch_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("pairs.csv");
        let targets = dir.path().join("targets.csv");
        write_file(&data, "SampleID,A,B\np1,1 2,3 4\n");
        write_file(&targets, "SampleID,Target,Details\nOTHER,1,causal\n");
        assert!(matches!(
            load_challenge(&data, &targets),
            Err(Error::Dataset(_))
        ));
    }

    #[test]
    fn challenge_malformed_row_reports_index() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("pairs.csv");
        let targets = dir.path().join("targets.csv");
        write_file(&data, "SampleID,A,B\np1,1 2,3 4\np2,1 oops,3 4\n");
        write_file(
            &targets,
            "SampleID,Target,Details\np1,1,causal\np2,1,causal\n",
        );
        let err = load_challenge(&data, &targets).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    #[test]
    fn tuebingen_loader_maps_columns() {
        let dir = tempfile::tempdir().unwrap();
        write_file(
            &dir.path().join("pairmeta.txt"),
            "0001 1 1 2 2 1\n0002 2 2 1 1 1\n0003 1 2 3 3 1\n",
        );
        write_file(&dir.path().join("pair0001.txt"), "1.0 10.0\n2.0 20.0\n3.0 30.0\n");
        write_file(&dir.path().join("pair0002.txt"), "5.5 1.0\n6.5 2.0\n7.5 3.0\n");
        write_file(
            &dir.path().join("pair0003.txt"),
            "1 2 3\n4 5 6\n7 8 9\n",
        );
        let ds = load_tuebingen(dir.path()).unwrap();
        // pair0003 spans two cause columns and is skipped.
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.skipped(), 1);
        assert!(ds.labels().iter().all(|l| *l == PairLabel::Causal));
        assert_eq!(ds.pairs()[0].x(), &[1.0, 2.0, 3.0]);
        assert_eq!(ds.pairs()[0].y(), &[10.0, 20.0, 30.0]);
        // pair0002's cause lives in column 2.
        assert_eq!(ds.pairs()[1].x(), &[1.0, 2.0, 3.0]);
        assert_eq!(ds.pairs()[1].y(), &[5.5, 6.5, 7.5]);
    }

    #[test]
    fn tuebingen_missing_meta_row_is_error() {
        let dir = tempfile::tempdir().unwrap();
        write_file(&dir.path().join("pairmeta.txt"), "0001 1 1 2 2 1\n");
        write_file(&dir.path().join("pair0001.txt"), "1 2\n3 4\n");
        write_file(&dir.path().join("pair0002.txt"), "1 2\n3 4\n");
        let err = load_tuebingen(dir.path()).unwrap_err();
        assert!(err.to_string().contains("pair0002"), "{err}");
    }

    #[test]
    fn tuebingen_bad_cell_reports_location() {
        let dir = tempfile::tempdir().unwrap();
        write_file(&dir.path().join("pairmeta.txt"), "0001 1 1 2 2 1\n");
        write_file(&dir.path().join("pair0001.txt"), "1 2\nx 4\n");
        let err = load_tuebingen(dir.path()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    fn tiny_directional_dataset(n: usize) -> PairDataset {
        let pairs: Vec<VariablePair> = (0..n)
            .map(|i| {
                VariablePair::new(
                    format!("p{i}"),
                    vec![i as f64, i as f64 + 1.0],
                    vec![2.0 * i as f64, 3.0],
                    VariableKind::Numerical,
                    VariableKind::Numerical,
                )
                .unwrap()
            })
            .collect();
        let labels = vec![PairLabel::Causal; n];
        PairDataset::new(pairs, labels, DatasetSource::Synthetic, 0).unwrap()
    }

    #[test]
    fn randomize_is_deterministic_and_involutive() {
        let ds = tiny_directional_dataset(64);
        let once = randomize_directions(&ds, 5).unwrap();
        let again = randomize_directions(&ds, 5).unwrap();
        assert_eq!(once.labels(), again.labels());
        for (a, b) in once.pairs().iter().zip(again.pairs()) {
            assert_eq!(a.x(), b.x());
        }
        // Applying the same mask twice restores the original.
        let back = randomize_directions(&once, 5).unwrap();
        assert_eq!(back.labels(), ds.labels());
        for (a, b) in back.pairs().iter().zip(ds.pairs()) {
            assert_eq!(a.x(), b.x());
            assert_eq!(a.y(), b.y());
        }
    }

    #[test]
    fn randomize_rejects_nondirectional_labels() {
        let mut ds = tiny_directional_dataset(4);
        ds.labels[2] = PairLabel::Confounded;
        assert!(matches!(
            randomize_directions(&ds, 1),
            Err(Error::InvalidLabels(_))
        ));
    }

    #[test]
    fn randomize_balances_large_datasets() {
        let ds = tiny_directional_dataset(10_000);
        let shuffled = randomize_directions(&ds, 123).unwrap();
        let anticausal = shuffled
            .labels()
            .iter()
            .filter(|l| **l == PairLabel::Anticausal)
            .count() as f64
            / 10_000.0;
        assert!((0.45..=0.55).contains(&anticausal), "{anticausal}");
    }

    #[test]
    fn randomize_preserves_sample_values() {
        let ds = tiny_directional_dataset(32);
        let shuffled = randomize_directions(&ds, 9).unwrap();
        for (a, b) in ds.pairs().iter().zip(shuffled.pairs()) {
            let mut orig: Vec<f64> = a.x().iter().chain(a.y()).copied().collect();
            let mut new: Vec<f64> = b.x().iter().chain(b.y()).copied().collect();
            orig.sort_by(f64::total_cmp);
            new.sort_by(f64::total_cmp);
            assert_eq!(orig, new);
        }
    }

    #[test]
    fn synthetic_two_class_is_balanced() {
        let ds = generate_synthetic_anm(100, 50, 2, 3).unwrap();
        let causal = ds
            .labels()
            .iter()
            .filter(|l| **l == PairLabel::Causal)
            .count();
        assert_eq!(causal, 50);
        assert_eq!(ds.len(), 100);
    }

    #[test]
    fn synthetic_four_class_quarters() {
        let ds = generate_synthetic_anm(100, 50, 4, 3).unwrap();
        for label in PairLabel::ALL {
            let count = ds.labels().iter().filter(|l| **l == label).count();
            assert_eq!(count, 25, "{label}");
        }
    }

    #[test]
    fn synthetic_is_deterministic() {
        let a = generate_synthetic_anm(10, 64, 2, 77).unwrap();
        let b = generate_synthetic_anm(10, 64, 2, 77).unwrap();
        for (pa, pb) in a.pairs().iter().zip(b.pairs()) {
            assert_eq!(pa.x(), pb.x());
            assert_eq!(pa.y(), pb.y());
        }
    }

    #[test]
    fn synthetic_rejects_bad_arguments() {
        assert!(generate_synthetic_anm(0, 100, 2, 1).is_err());
        assert!(generate_synthetic_anm(10, 10, 2, 1).is_err());
        assert!(generate_synthetic_anm(10, 100, 3, 1).is_err());
    }

    #[test]
    fn independent_pairs_leak_little() {
        use crate::features::{extract_features, ExtractionConfig};
        let ds = generate_synthetic_anm(16, 5_000, 4, 2024).unwrap();
        let cfg = ExtractionConfig::default();
        let mut total = 0.0;
        let mut count = 0usize;
        for (p, l) in ds.pairs().iter().zip(ds.labels()) {
            if *l == PairLabel::Independent {
                let f = extract_features(p, &cfg).unwrap();
                total += f.get("shannon_add_direct").unwrap();
                count += 1;
            }
        }
        assert!(count >= 4);
        let mean = total / count as f64;
        assert!(mean < 0.05, "mean additive Shannon leakage {mean}");
    }
}
