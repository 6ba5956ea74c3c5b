//! On-disk formats.
//!
//! - Graph: `{"n": int, "adj": [n*n floats, row-major], "features": [n*c floats] | null}`.
//! - Dataset: JSON array of `{"functional": graph, "structural": graph, "label": int | null, "score": float | null}`.
//! - Edge list: CSV rows `src,dst,weight` (header optional), mirrored to both directions.
//! - Checkpoint: JSON object `name -> {"shape": [rows, cols], "values": [...]}`.
//! - Manifest: `{"config": {...}, "seed": int, "version": str}`.
//! - History: CSV with `epoch,lr,train_loss,val_loss,val_metric` followed by
//!   the reconstruction columns.
//! - Saliency: JSON array of `{"node_index", "score", "rank"}`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use dsbn_core::graph::{SignedGraph, Subject, UnsignedGraph};
use dsbn_core::model::SaliencyEntry;
use dsbn_core::synth::{Manifest, SynthConfig, GENERATOR_VERSION};
use dsbn_core::train::EpochRecord;
use dsbn_core::Tensor;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub adj: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<f64>>,
}

impl GraphFile {
    pub fn from_tensor(adj: &Tensor, features: Option<&Tensor>) -> Self {
        Self {
            n: adj.rows(),
            adj: adj.data().to_vec(),
            features: features.map(|f| f.data().to_vec()),
        }
    }

    pub fn adjacency(&self) -> CliResult<Tensor> {
        if self.adj.len() != self.n * self.n {
            return Err(CliError::Validation(format!(
                "graph declares n = {} but has {} adjacency entries",
                self.n,
                self.adj.len()
            )));
        }
        Ok(Tensor::from_vec(self.n, self.n, self.adj.clone())?)
    }

    pub fn feature_tensor(&self) -> CliResult<Option<Tensor>> {
        let Some(f) = &self.features else {
            return Ok(None);
        };
        if self.n == 0 || f.len() % self.n != 0 || f.is_empty() {
            return Err(CliError::Validation(format!(
                "{} feature values do not divide into {} nodes",
                f.len(),
                self.n
            )));
        }
        Ok(Some(Tensor::from_vec(self.n, f.len() / self.n, f.clone())?))
    }

    pub fn to_signed(&self) -> CliResult<SignedGraph> {
        Ok(SignedGraph::new(self.adjacency()?, self.feature_tensor()?)?)
    }

    pub fn to_unsigned(&self) -> CliResult<UnsignedGraph> {
        Ok(UnsignedGraph::new(self.adjacency()?)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub functional: GraphFile,
    pub structural: GraphFile,
    pub label: Option<usize>,
    pub score: Option<f64>,
}

impl SubjectRecord {
    pub fn from_subject(s: &Subject) -> Self {
        Self {
            functional: GraphFile::from_tensor(s.functional.adj(), s.functional.features()),
            structural: GraphFile::from_tensor(s.structural.adj(), None),
            label: s.label,
            score: s.score,
        }
    }

    pub fn to_subject(&self) -> CliResult<Subject> {
        Ok(Subject::new(
            self.functional.to_signed()?,
            self.structural.to_unsigned()?,
            self.label,
            self.score,
        )?)
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_dataset(path: &Path) -> CliResult<Vec<Subject>> {
    let records: Vec<SubjectRecord> = read_json(path)?;
    if records.is_empty() {
        return Err(CliError::Validation(format!("{}: dataset is empty", path.display())));
    }
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.to_subject()
                .map_err(|e| CliError::Validation(format!("{}: subject {i}: {e}", path.display())))
        })
        .collect()
}

pub fn write_dataset(path: &Path, subjects: &[Subject]) -> CliResult<()> {
    let records: Vec<SubjectRecord> = subjects.iter().map(SubjectRecord::from_subject).collect();
    write_json(path, &records)
}

#[derive(Debug, Deserialize)]
struct EdgeRow {
    src: usize,
    dst: usize,
    weight: f64,
}

/// Reads a `src,dst,weight` edge list; `n` is one past the largest index
/// unless given. Each edge is written in both directions.
pub fn read_edge_list(path: &Path, n: Option<usize>) -> CliResult<Tensor> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let has_header = text
        .lines()
        .next()
        .is_some_and(|l| l.split(',').next().is_some_and(|f| f.trim().parse::<f64>().is_err()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut edges = Vec::new();
    for row in reader.deserialize::<EdgeRow>() {
        let row = row.map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        edges.push(row);
    }
    let needed = edges.iter().map(|e| e.src.max(e.dst) + 1).max().unwrap_or(0);
    let n = n.unwrap_or(needed);
    if needed > n {
        return Err(CliError::Validation(format!(
            "{}: node index {} out of range for {n} nodes",
            path.display(),
            needed - 1
        )));
    }
    let mut adj = Tensor::zeros(n, n);
    for e in edges {
        adj.set(e.src, e.dst, e.weight);
        adj.set(e.dst, e.src, e.weight);
    }
    Ok(adj)
}

/// Reads a headerless CSV of equal-length float rows.
pub fn read_matrix_csv(path: &Path) -> CliResult<Tensor> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in reader.deserialize::<Vec<f64>>() {
        rows.push(rec.map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(CliError::Validation(format!("{}: expected a non-empty rectangular matrix", path.display())));
    }
    Ok(Tensor::from_vec(rows.len(), cols, rows.concat())?)
}

/// A single signed graph from `.json` (graph format) or `.csv` (edge list,
/// with features from a separate matrix CSV).
pub fn read_signed_graph(path: &Path, features: Option<&Path>) -> CliResult<SignedGraph> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let mut graph = if is_csv {
        SignedGraph::new(read_edge_list(path, None)?, None)?
    } else {
        read_json::<GraphFile>(path)?.to_signed()?
    };
    if let Some(fp) = features {
        graph = graph.with_features(read_matrix_csv(fp)?)?;
    }
    Ok(graph)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub shape: [usize; 2],
    pub values: Vec<f64>,
}

pub type CheckpointFile = BTreeMap<String, TensorEntry>;

pub fn checkpoint_from_named(named: &[(String, Tensor)]) -> CheckpointFile {
    named
        .iter()
        .map(|(name, t)| {
            (
                name.clone(),
                TensorEntry {
                    shape: t.shape(),
                    values: t.data().to_vec(),
                },
            )
        })
        .collect()
}

pub fn named_from_checkpoint(file: &CheckpointFile) -> CliResult<Vec<(String, Tensor)>> {
    file.iter()
        .map(|(name, e)| {
            Tensor::from_vec(e.shape[0], e.shape[1], e.values.clone())
                .map(|t| (name.clone(), t))
                .map_err(|err| CliError::Validation(format!("checkpoint tensor {name}: {err}")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfigFile {
    pub n_nodes: usize,
    pub n_subjects: usize,
    pub n_communities: usize,
    pub series_length: usize,
    pub noise_level: f64,
    pub class_effect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub config: SynthConfigFile,
    pub seed: u64,
    pub version: String,
}

impl ManifestFile {
    pub fn from_manifest(m: &Manifest) -> Self {
        let c = &m.config;
        Self {
            config: SynthConfigFile {
                n_nodes: c.n_nodes,
                n_subjects: c.n_subjects,
                n_communities: c.n_communities,
                series_length: c.series_length,
                noise_level: c.noise_level,
                class_effect: c.class_effect,
            },
            seed: m.seed,
            version: m.version.to_string(),
        }
    }

    pub fn synth_config(&self) -> CliResult<SynthConfig> {
        if self.version != GENERATOR_VERSION {
            return Err(CliError::Validation(format!(
                "manifest was written by generator version {}, this build is version {GENERATOR_VERSION}",
                self.version
            )));
        }
        let c = &self.config;
        Ok(SynthConfig {
            n_nodes: c.n_nodes,
            n_subjects: c.n_subjects,
            n_communities: c.n_communities,
            series_length: c.series_length,
            noise_level: c.noise_level,
            class_effect: c.class_effect,
            seed: self.seed,
        })
    }
}

#[derive(Debug, Serialize)]
struct HistoryRow {
    epoch: usize,
    lr: f64,
    train_loss: f64,
    val_loss: f64,
    val_metric: f64,
    train_recon_loss: f64,
    val_recon_loss: f64,
    val_recon_mae: f64,
}

pub fn write_history(path: &Path, history: &[EpochRecord]) -> CliResult<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    for r in history {
        writer
            .serialize(HistoryRow {
                epoch: r.epoch,
                lr: r.lr,
                train_loss: r.train_loss,
                val_loss: r.val_loss,
                val_metric: r.val_metric,
                train_recon_loss: r.train_recon_loss,
                val_recon_loss: r.val_recon_loss,
                val_recon_mae: r.val_recon_mae,
            })
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaliencyRecord {
    pub node_index: usize,
    pub score: f64,
    pub rank: usize,
}

pub fn saliency_records(entries: &[SaliencyEntry]) -> Vec<SaliencyRecord> {
    entries
        .iter()
        .map(|e| SaliencyRecord {
            node_index: e.node,
            score: e.score,
            rank: e.rank,
        })
        .collect()
}

/// Creates `dir` (and parents) if missing.
pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
        }
    }
}
