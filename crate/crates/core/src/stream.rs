//! Replayable stream sources: seeded synthetic generators and plain-text
//! trace files.
//!
//! Synthetic item `i` of a spec is drawn from its own generator seeded by
//! `derive_seed(seed, i)`, so any index range can be produced independently
//! and two calls with the same spec always agree bit for bit.
//!
//! Trace files are UTF-8 text, one record per LF-terminated line. A record
//! is either a bare integer or `key,timestamp,value`; lines starting with
//! `#` are comments.

use std::f64::consts::PI;
use std::fs;
use std::io::{self, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamItem {
    pub value: i64,
    pub index: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceColumn {
    #[default]
    Value,
    Timestamp,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceTransform {
    #[default]
    Raw,
    /// Differences between consecutive timestamps of the same key.
    SuccessiveIntervals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Source {
    Cauchy {
        location: f64,
        scale: f64,
    },
    Uniform {
        lo: i64,
        hi: i64,
    },
    /// 1, 2, 3, ...: every item exceeds every earlier one.
    Ascending,
    /// Concatenation of segments; each segment draws from
    /// `derive_seed(parent seed, segment seed)`.
    Piecewise {
        segments: Vec<StreamSpec>,
    },
    Trace {
        path: PathBuf,
        #[serde(default)]
        column: TraceColumn,
        #[serde(default)]
        transform: TraceTransform,
    },
}

/// A replayable stream description, serializable as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    #[serde(flatten)]
    pub source: Source,
    /// Item count. Required for synthetic sources; caps the item count of
    /// a trace.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    /// Free-form description carried into experiment outputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl StreamSpec {
    pub fn new(source: Source, length: u64, seed: u64) -> Self {
        StreamSpec {
            source,
            length: Some(length),
            seed,
            label: None,
        }
    }

    pub fn cauchy(location: f64, scale: f64, length: u64, seed: u64) -> Self {
        Self::new(Source::Cauchy { location, scale }, length, seed)
    }

    pub fn uniform(lo: i64, hi: i64, length: u64, seed: u64) -> Self {
        Self::new(Source::Uniform { lo, hi }, length, seed)
    }

    pub fn ascending(length: u64) -> Self {
        Self::new(Source::Ascending, length, 0)
    }

    /// Piecewise spec whose length is the sum of the segment lengths.
    pub fn piecewise(segments: Vec<StreamSpec>, seed: u64) -> Self {
        let length = segments.iter().filter_map(|s| s.length).sum();
        Self::new(Source::Piecewise { segments }, length, seed)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: StreamSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stream spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::StreamSpec(msg));
        if let Source::Trace { .. } = self.source {
            if self.length == Some(0) {
                return bad("trace length cap must be >= 1".into());
            }
            return Ok(());
        }
        let length = match self.length {
            Some(0) | None => return bad("length must be >= 1".into()),
            Some(n) => n,
        };
        match &self.source {
            Source::Cauchy { location, scale } => {
                if !location.is_finite() || !scale.is_finite() || *scale <= 0.0 {
                    return bad(format!(
                        "cauchy needs finite location and scale > 0, got ({location}, {scale})"
                    ));
                }
            }
            Source::Uniform { lo, hi } => {
                if lo > hi {
                    return bad(format!("uniform lo {lo} exceeds hi {hi}"));
                }
            }
            Source::Ascending => {}
            Source::Piecewise { segments } => {
                if segments.is_empty() {
                    return bad("piecewise needs at least one segment".into());
                }
                for s in segments {
                    if let Source::Trace { .. } = s.source {
                        return bad("piecewise segments must be synthetic".into());
                    }
                    s.validate()?;
                }
                let total: u64 = segments.iter().filter_map(|s| s.length).sum();
                if total != length {
                    return bad(format!("segment lengths sum to {total}, expected {length}"));
                }
            }
            Source::Trace { .. } => unreachable!(),
        }
        Ok(())
    }

    /// Start index and length of each piecewise segment; a single segment
    /// covering everything for other sources.
    pub fn segment_bounds(&self) -> Vec<Range<u64>> {
        match &self.source {
            Source::Piecewise { segments } => {
                let mut start = 0;
                segments
                    .iter()
                    .map(|s| {
                        let end = start + s.length.unwrap_or(0);
                        let r = start..end;
                        start = end;
                        r
                    })
                    .collect()
            }
            _ => std::iter::once(0..self.length.unwrap_or(0)).collect(),
        }
    }
}

/// Inverse-CDF Cauchy draw for `u` in `[0, 1)`, rounded to the nearest
/// integer. Extreme tails saturate at the `i64` limits.
pub fn cauchy_value(location: f64, scale: f64, u: f64) -> i64 {
    (location + scale * (PI * (u - 0.5)).tan()).round() as i64
}

fn synthetic_item(source: &Source, seed: u64, index: u64) -> i64 {
    match source {
        Source::Cauchy { location, scale } => {
            let u = SplitRng::new(derive_seed(seed, index)).unit();
            cauchy_value(*location, *scale, u)
        }
        Source::Uniform { lo, hi } => SplitRng::new(derive_seed(seed, index)).gen_range(*lo..=*hi),
        Source::Ascending => index as i64 + 1,
        Source::Piecewise { .. } | Source::Trace { .. } => unreachable!("not a leaf source"),
    }
}

/// Generates the whole stream.
pub fn generate(spec: &StreamSpec) -> Result<Vec<StreamItem>> {
    spec.validate()?;
    if let Source::Trace {
        path,
        column,
        transform,
    } = &spec.source
    {
        let mut items = ingest_trace(path, *column, *transform)?.items;
        if let Some(cap) = spec.length {
            items.truncate(cap as usize);
        }
        return Ok(items);
    }
    generate_range(spec, 0..spec.length.unwrap_or(0))
}

/// Generates items `range` of a synthetic stream.
pub fn generate_range(spec: &StreamSpec, range: Range<u64>) -> Result<Vec<StreamItem>> {
    spec.validate()?;
    let length = spec.length.unwrap_or(0);
    if range.end > length || range.start > range.end {
        return Err(Error::StreamSpec(format!(
            "range {range:?} outside stream of length {length}"
        )));
    }
    match &spec.source {
        Source::Trace { .. } => Err(Error::StreamSpec(
            "trace sources are not index-addressable; use generate".into(),
        )),
        Source::Piecewise { segments } => {
            let mut out = Vec::with_capacity((range.end - range.start) as usize);
            for (seg, bounds) in segments.iter().zip(spec.segment_bounds()) {
                let lo = range.start.max(bounds.start);
                let hi = range.end.min(bounds.end);
                if lo >= hi {
                    continue;
                }
                let sub_seed = derive_seed(spec.seed, seg.seed);
                for index in lo..hi {
                    out.push(StreamItem {
                        value: synthetic_item(&seg.source, sub_seed, index - bounds.start),
                        index,
                    });
                }
            }
            Ok(out)
        }
        source => Ok(range
            .map(|index| StreamItem {
                value: synthetic_item(source, spec.seed, index),
                index,
            })
            .collect()),
    }
}

/// One parsed trace line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Empty for bare-integer lines.
    pub key: String,
    pub timestamp: i64,
    pub value: i64,
}

impl TraceRecord {
    pub fn column(&self, column: TraceColumn) -> i64 {
        match column {
            TraceColumn::Value => self.value,
            TraceColumn::Timestamp => self.timestamp,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub skipped: usize,
}

fn parse_line(line: &str) -> Option<TraceRecord> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    match fields.as_slice() {
        [v] => {
            let v = v.parse().ok()?;
            Some(TraceRecord {
                key: String::new(),
                timestamp: v,
                value: v,
            })
        }
        [key, ts, v] => Some(TraceRecord {
            key: key.to_string(),
            timestamp: ts.parse().ok()?,
            value: v.parse().ok()?,
        }),
        _ => None,
    }
}

impl Trace {
    /// Parses trace text; unparsable lines are counted, comments are not.
    pub fn parse(text: &str) -> Trace {
        let mut trace = Trace::default();
        for line in text.lines() {
            if line.starts_with('#') {
                continue;
            }
            match parse_line(line) {
                Some(r) => trace.records.push(r),
                None => trace.skipped += 1,
            }
        }
        trace
    }

    pub fn read(path: &Path) -> Result<Trace> {
        let text = fs::read_to_string(path).map_err(|source| Error::TraceIo {
            path: path.to_path_buf(),
            source,
        })?;
        let trace = Trace::parse(&text);
        if trace.records.is_empty() {
            return Err(Error::EmptyTrace {
                path: path.to_path_buf(),
                skipped: trace.skipped,
            });
        }
        Ok(trace)
    }

    /// `(key, value)` pairs in file order. Raw mode emits the selected
    /// column; interval mode emits per-key differences of consecutive
    /// timestamps and ignores `column`.
    pub fn keyed_values(&self, column: TraceColumn, transform: TraceTransform) -> Vec<(&str, i64)> {
        match transform {
            TraceTransform::Raw => self
                .records
                .iter()
                .map(|r| (r.key.as_str(), r.column(column)))
                .collect(),
            TraceTransform::SuccessiveIntervals => {
                let mut last: std::collections::HashMap<&str, i64> = Default::default();
                let mut out = Vec::new();
                for r in &self.records {
                    let v = r.timestamp;
                    if let Some(prev) = last.insert(r.key.as_str(), v) {
                        out.push((r.key.as_str(), v - prev));
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ingested {
    pub items: Vec<StreamItem>,
    pub skipped: usize,
}

pub fn ingest_trace(path: &Path, column: TraceColumn, transform: TraceTransform) -> Result<Ingested> {
    let trace = Trace::read(path)?;
    let items = trace
        .keyed_values(column, transform)
        .into_iter()
        .enumerate()
        .map(|(i, (_, value))| StreamItem { value, index: i as u64 })
        .collect();
    Ok(Ingested {
        items,
        skipped: trace.skipped,
    })
}

/// Writes one value per line.
pub fn write_values<W: Write>(mut out: W, items: &[StreamItem]) -> io::Result<()> {
    for item in items {
        writeln!(out, "{}", item.value)?;
    }
    out.flush()
}
