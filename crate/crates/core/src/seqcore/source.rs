use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modality {
    Text,
    ImageFeatures,
    VideoFeatures,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Text => "text",
            Modality::ImageFeatures => "image-features",
            Modality::VideoFeatures => "video-features",
        })
    }
}

impl FromStr for Modality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Modality::Text),
            "image" | "image-features" => Ok(Modality::ImageFeatures),
            "video" | "video-features" => Ok(Modality::VideoFeatures),
            other => Err(format!("unknown modality {other:?}")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("missing `rows cols` header")]
    MissingHeader,
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("matrix must have at least one row and one column, got {rows}x{cols}")]
    Empty { rows: usize, cols: usize },
    #[error("value #{index} {token:?} is not a number")]
    BadValue { index: usize, token: String },
    #[error("expected {expected} values, found {found}")]
    WrongCount { expected: usize, found: usize },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Precomputed real-valued features: one row per position (image region or
/// video frame), a fixed number of columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self, FeatureError> {
        if rows == 0 || cols == 0 {
            return Err(FeatureError::Empty { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(FeatureError::WrongCount {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn values(&self) -> &[f32] {
        &self.data
    }

    /// Header `rows cols`, then row-major whitespace-separated decimals.
    pub fn parse(text: &str) -> Result<Self, FeatureError> {
        let mut lines = text.lines().skip_while(|l| l.trim().is_empty());
        let header = lines.next().ok_or(FeatureError::MissingHeader)?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        let [rows, cols] = dims.as_slice() else {
            return Err(FeatureError::BadHeader(header.to_owned()));
        };
        let parse_dim = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| FeatureError::BadHeader(header.to_owned()))
        };
        let (rows, cols) = (parse_dim(rows)?, parse_dim(cols)?);

        let mut data = Vec::with_capacity(rows.saturating_mul(cols).min(1 << 24));
        for line in lines {
            for token in line.split_whitespace() {
                let v = token.parse::<f32>().map_err(|_| FeatureError::BadValue {
                    index: data.len(),
                    token: token.to_owned(),
                })?;
                data.push(v);
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FeatureError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Renders every value with nine significant digits, which is enough
    /// for `f32` to parse back bit-exactly.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|v| format!("{v:.8e}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// The input object `x`: raw text, or a precomputed feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceContext {
    Text {
        id: Option<String>,
        text: String,
    },
    Features {
        id: String,
        modality: Modality,
        matrix: Arc<FeatureMatrix>,
    },
}

impl SourceContext {
    pub fn text(text: impl Into<String>) -> Self {
        SourceContext::Text {
            id: None,
            text: text.into(),
        }
    }

    pub fn text_with_id(id: impl Into<String>, text: impl Into<String>) -> Self {
        SourceContext::Text {
            id: Some(id.into()),
            text: text.into(),
        }
    }

    pub fn id(&self) -> Option<&str> {
        match self {
            SourceContext::Text { id, .. } => id.as_deref(),
            SourceContext::Features { id, .. } => Some(id),
        }
    }

    /// Identifier used by lookup-based scorers: the explicit id when present,
    /// otherwise the text itself.
    pub fn lookup_key(&self) -> &str {
        match self {
            SourceContext::Text { id: Some(id), .. } => id,
            SourceContext::Text { id: None, text } => text,
            SourceContext::Features { id, .. } => id,
        }
    }

    pub fn modality(&self) -> Modality {
        match self {
            SourceContext::Text { .. } => Modality::Text,
            SourceContext::Features { modality, .. } => *modality,
        }
    }
}
