//! Dataset ingestion and validation, scorer assembly from a corpus
//! directory, and the experiment configuration file.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::decoder::SearchConfig;
use crate::metrics::KsmrConvention;
use crate::scorers::{NBestScorer, NgramConfig, NgramScorer, Scorer, ScorerError, DEFAULT_EPSILON};
use crate::seqcore::{FeatureError, FeatureMatrix, Modality, SourceContext, VocabError, Vocabulary};
use crate::simulator::{ReferencePolicy, SimulationConfig};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid UTF-8 at byte {offset}")]
    Utf8 { path: String, offset: usize },
    #[error("line counts differ: {source_lines} vs {reference_lines} ({path})")]
    LineCountMismatch {
        path: String,
        source_lines: usize,
        reference_lines: usize,
    },
    #[error("no reference files given")]
    NoReferences,
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("sample {id}: {source}")]
    Feature {
        id: String,
        #[source]
        source: FeatureError,
    },
    #[error("sample {id}: feature matrix has {found} columns, dataset has {expected}")]
    RaggedColumns { id: String, expected: usize, found: usize },
    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),
    #[error("corpus directory {0} has neither source.txt nor manifest.jsonl")]
    NoDataset(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub source: SourceContext,
    pub references: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub modality: Modality,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Sample> {
        self.samples.iter().find(|s| s.id == id)
    }

    /// Source text and one text per reference column, newline-joined.
    /// `None` for feature datasets.
    pub fn to_parallel_text(&self) -> Option<(String, Vec<String>)> {
        let mut src = Vec::with_capacity(self.samples.len());
        for s in &self.samples {
            match &s.source {
                SourceContext::Text { text, .. } => src.push(text.as_str()),
                SourceContext::Features { .. } => return None,
            }
        }
        let columns = self.samples.first().map_or(0, |s| s.references.len());
        let refs = (0..columns)
            .map(|k| {
                self.samples
                    .iter()
                    .map(|s| s.references[k].as_str())
                    .collect::<Vec<_>>()
                    .join("\n")
            })
            .collect();
        Some((src.join("\n"), refs))
    }
}

fn read_text(path: &Path) -> Result<String, CorpusError> {
    let bytes = std::fs::read(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    String::from_utf8(bytes).map_err(|e| CorpusError::Utf8 {
        path: path.display().to_string(),
        offset: e.utf8_error().valid_up_to(),
    })
}

/// Lines split on `\n` only, so that `\r` and other bytes survive; one
/// trailing newline is dropped.
fn split_lines(text: &str) -> Vec<&str> {
    if text.is_empty() {
        return Vec::new();
    }
    text.strip_suffix('\n').unwrap_or(text).split('\n').collect()
}

/// Line `i` of the source and of every reference file forms sample `i`
/// (id `"i"`, zero-based).
pub fn load_parallel<P: AsRef<Path>>(source_file: &Path, reference_files: &[P]) -> Result<Dataset, CorpusError> {
    if reference_files.is_empty() {
        return Err(CorpusError::NoReferences);
    }
    let source = read_text(source_file)?;
    let refs = reference_files
        .iter()
        .map(|p| read_text(p.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let src_lines = split_lines(&source);
    let ref_lines: Vec<Vec<&str>> = refs.iter().map(|r| split_lines(r)).collect();
    for (lines, path) in ref_lines.iter().zip(reference_files) {
        if lines.len() != src_lines.len() {
            return Err(CorpusError::LineCountMismatch {
                path: path.as_ref().display().to_string(),
                source_lines: src_lines.len(),
                reference_lines: lines.len(),
            });
        }
    }
    let samples = src_lines
        .iter()
        .enumerate()
        .map(|(i, text)| Sample {
            id: i.to_string(),
            source: SourceContext::text_with_id(i.to_string(), *text),
            references: ref_lines.iter().map(|r| r[i].to_owned()).collect(),
        })
        .collect();
    Ok(Dataset {
        modality: Modality::Text,
        samples,
    })
}

#[derive(Debug, Deserialize)]
struct ManifestRecord {
    id: String,
    features: PathBuf,
    refs: Vec<String>,
    #[serde(default)]
    modality: Option<Modality>,
}

/// JSON-lines manifest, one `{"id", "features", "refs", "modality"?}` per
/// sample; feature paths are relative to the manifest. Modality defaults to
/// image features.
pub fn load_features(manifest_file: &Path) -> Result<Dataset, CorpusError> {
    let text = read_text(manifest_file)?;
    let base = manifest_file.parent().unwrap_or(Path::new("."));
    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    let mut modality = None;
    let mut cols = None;
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| CorpusError::Manifest { line: n + 1, message };
        let rec: ManifestRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if rec.refs.is_empty() {
            return Err(err(format!("sample {} has no reference", rec.id)));
        }
        let m = rec.modality.unwrap_or(Modality::ImageFeatures);
        if m == Modality::Text {
            return Err(err("text samples belong in a parallel corpus".into()));
        }
        if *modality.get_or_insert(m) != m {
            return Err(err(format!("sample {} mixes modalities", rec.id)));
        }
        if !seen.insert(rec.id.clone()) {
            return Err(CorpusError::DuplicateId(rec.id));
        }
        let matrix = FeatureMatrix::load(base.join(&rec.features)).map_err(|source| CorpusError::Feature {
            id: rec.id.clone(),
            source,
        })?;
        let expected = *cols.get_or_insert(matrix.cols());
        if matrix.cols() != expected {
            return Err(CorpusError::RaggedColumns {
                id: rec.id,
                expected,
                found: matrix.cols(),
            });
        }
        samples.push(Sample {
            source: SourceContext::Features {
                id: rec.id.clone(),
                modality: m,
                matrix: Arc::new(matrix),
            },
            id: rec.id,
            references: rec.refs,
        });
    }
    Ok(Dataset {
        modality: modality.unwrap_or(Modality::ImageFeatures),
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthHistogram {
    pub bin_width: usize,
    /// Bin lower bound (in tokens) to sample count.
    pub bins: BTreeMap<usize, usize>,
    pub min: usize,
    pub max: usize,
    pub mean: f64,
}

impl LengthHistogram {
    pub fn new(lengths: &[usize], bin_width: usize) -> Self {
        let bin_width = bin_width.max(1);
        let mut bins = BTreeMap::new();
        for &l in lengths {
            *bins.entry(l / bin_width * bin_width).or_insert(0) += 1;
        }
        Self {
            bin_width,
            bins,
            min: lengths.iter().copied().min().unwrap_or(0),
            max: lengths.iter().copied().max().unwrap_or(0),
            mean: if lengths.is_empty() {
                0.0
            } else {
                lengths.iter().sum::<usize>() as f64 / lengths.len() as f64
            },
        }
    }

    pub fn total(&self) -> usize {
        self.bins.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideStats {
    pub tokens: usize,
    pub oov_tokens: usize,
    /// `None` when no vocabulary was given for the side.
    pub oov_percent: Option<f64>,
    /// One entry per sample (first reference on the target side).
    pub lengths: LengthHistogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub samples: usize,
    /// Absent for feature datasets.
    pub source: Option<SideStats>,
    pub target: SideStats,
}

pub const HISTOGRAM_BIN: usize = 5;

fn side_stats<'a>(
    texts: impl Iterator<Item = &'a str>,
    per_sample: impl Iterator<Item = &'a str>,
    vocab: Option<&Vocabulary>,
) -> SideStats {
    let mut tokens = 0;
    let mut oov = 0;
    for t in texts {
        for w in t.split_whitespace() {
            tokens += 1;
            if vocab.is_some_and(|v| v.id_of(w).is_none()) {
                oov += 1;
            }
        }
    }
    let lengths: Vec<usize> = per_sample.map(|t| t.split_whitespace().count()).collect();
    SideStats {
        tokens,
        oov_tokens: oov,
        oov_percent: vocab.map(|_| if tokens == 0 { 0.0 } else { 100.0 * oov as f64 / tokens as f64 }),
        lengths: LengthHistogram::new(&lengths, HISTOGRAM_BIN),
    }
}

/// Out-of-vocabulary rates over every reference token (and source token when
/// a source vocabulary is given) and per-sample length histograms.
pub fn validate(dataset: &Dataset, vocab: &Vocabulary, source_vocab: Option<&Vocabulary>) -> ValidationReport {
    let texts: Option<Vec<&str>> = dataset
        .samples
        .iter()
        .map(|s| match &s.source {
            SourceContext::Text { text, .. } => Some(text.as_str()),
            SourceContext::Features { .. } => None,
        })
        .collect();
    let source = texts.map(|t| side_stats(t.iter().copied(), t.iter().copied(), source_vocab));
    let target = side_stats(
        dataset.samples.iter().flat_map(|s| s.references.iter().map(String::as_str)),
        dataset
            .samples
            .iter()
            .map(|s| s.references.first().map_or("", String::as_str)),
        Some(vocab),
    );
    ValidationReport {
        samples: dataset.samples.len(),
        source,
        target,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScorerKind {
    #[default]
    Ngram,
    Nbest,
}

impl std::str::FromStr for ScorerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ngram" => Ok(ScorerKind::Ngram),
            "nbest" => Ok(ScorerKind::Nbest),
            other => Err(format!("unknown scorer {other:?} (expected ngram or nbest)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScorerConfig {
    pub kind: ScorerKind,
    pub ngram: NgramConfig,
    pub nbest_epsilon: f64,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        Self {
            kind: ScorerKind::Ngram,
            ngram: NgramConfig::default(),
            nbest_epsilon: DEFAULT_EPSILON,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationBlock {
    pub max_interactions: Option<usize>,
    pub reference_policy: ReferencePolicy,
    pub record_latency: bool,
}

impl Default for SimulationBlock {
    fn default() -> Self {
        Self {
            max_interactions: None,
            reference_policy: ReferencePolicy::First,
            record_latency: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerBlock {
    pub port: u16,
    pub session_ttl_secs: u64,
    pub ui_dir: Option<PathBuf>,
}

impl Default for ServerBlock {
    fn default() -> Self {
        Self {
            port: 8080,
            session_ttl_secs: 30 * 60,
            ui_dir: None,
        }
    }
}

/// Experiment file: JSON with `scorer`, `search`, `simulation`, `ksmr` and
/// `server` blocks. Missing fields take their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub scorer: ScorerConfig,
    pub search: SearchConfig,
    pub simulation: SimulationBlock,
    pub ksmr: KsmrConvention,
    pub server: ServerBlock,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = read_text(path)?;
        serde_json::from_str(&text).map_err(|e| CorpusError::Config(format!("{}: {e}", path.display())))
    }

    pub fn simulation_config(&self) -> SimulationConfig {
        SimulationConfig {
            search: self.search.clone(),
            max_interactions: self.simulation.max_interactions,
            reference_policy: self.simulation.reference_policy,
            ksmr: self.ksmr,
            record_latency: self.simulation.record_latency,
        }
    }
}

/// A corpus directory:
///
/// - `source.txt` with `ref*.txt` (sorted by name), or `manifest.jsonl`
/// - `vocab.txt` (optional; otherwise built from every target-side text)
/// - `train.source.txt` / `train.target.txt` (optional n-gram training pairs;
///   otherwise the evaluation pairs against their first reference)
/// - `nbest.tsv` (for the n-best scorer)
#[derive(Debug, Clone)]
pub struct CorpusDir {
    pub root: PathBuf,
    pub dataset: Dataset,
    pub vocab: Arc<Vocabulary>,
    pub train: Vec<(String, String)>,
    pub nbest: Option<PathBuf>,
}

impl CorpusDir {
    pub fn open(root: &Path) -> Result<Self, CorpusError> {
        let source = root.join("source.txt");
        let manifest = root.join("manifest.jsonl");
        let dataset = if source.is_file() {
            let mut refs: Vec<PathBuf> = std::fs::read_dir(root)
                .map_err(|e| CorpusError::Io {
                    path: root.display().to_string(),
                    source: e,
                })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with("ref") && n.ends_with(".txt"))
                })
                .collect();
            refs.sort();
            load_parallel(&source, &refs)?
        } else if manifest.is_file() {
            load_features(&manifest)?
        } else {
            return Err(CorpusError::NoDataset(root.display().to_string()));
        };

        let (ts, tt) = (root.join("train.source.txt"), root.join("train.target.txt"));
        let train: Vec<(String, String)> = if ts.is_file() && tt.is_file() {
            let train = load_parallel(&ts, &[&tt])?;
            train
                .samples
                .into_iter()
                .filter_map(|s| match s.source {
                    SourceContext::Text { text, .. } => Some((text, s.references[0].clone())),
                    SourceContext::Features { .. } => None,
                })
                .collect()
        } else {
            dataset
                .samples
                .iter()
                .filter_map(|s| match &s.source {
                    SourceContext::Text { text, .. } => Some((text.clone(), s.references[0].clone())),
                    SourceContext::Features { .. } => None,
                })
                .collect()
        };

        let nbest = Some(root.join("nbest.tsv")).filter(|p| p.is_file());
        let vocab_file = root.join("vocab.txt");
        let vocab = if vocab_file.is_file() {
            Vocabulary::load(&vocab_file)?
        } else {
            let mut texts: Vec<String> = dataset.samples.iter().flat_map(|s| s.references.clone()).collect();
            texts.extend(train.iter().map(|(_, t)| t.clone()));
            if let Some(p) = &nbest {
                texts.extend(read_text(p)?.lines().filter_map(|l| l.splitn(3, '\t').nth(2).map(str::to_owned)));
            }
            Vocabulary::build_from_texts(texts.iter().map(String::as_str))?
        };
        Ok(Self {
            root: root.to_owned(),
            dataset,
            vocab: Arc::new(vocab),
            train,
            nbest,
        })
    }

    pub fn build_scorer(&self, cfg: &ScorerConfig) -> Result<Arc<dyn Scorer>, CorpusError> {
        Ok(match cfg.kind {
            ScorerKind::Ngram => Arc::new(NgramScorer::train(
                Arc::clone(&self.vocab),
                self.train.iter().map(|(s, t)| (s.as_str(), t.as_str())),
                cfg.ngram.clone(),
            )?),
            ScorerKind::Nbest => {
                let path = self
                    .nbest
                    .as_ref()
                    .ok_or_else(|| CorpusError::Config(format!("{} has no nbest.tsv", self.root.display())))?;
                let text = read_text(path)?;
                let mut scorer = NBestScorer::parse(Arc::clone(&self.vocab), &text)?;
                scorer.set_epsilon(cfg.nbest_epsilon)?;
                Arc::new(scorer)
            }
        })
    }
}
