//! Trace files: CSV with `# key: value` header lines, or JSON lines.

use std::io::Write;

use intent_core::geometry::PatternKind;
use intent_core::{IntentEstimate, SessionConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TraceFormat {
    #[default]
    Csv,
    Jsonl,
}

/// Provenance written at the top of every trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub m: usize,
    pub pattern: String,
    pub samples: usize,
    pub epsilon_motion: f64,
    pub goals: Vec<String>,
    /// Wall-clock creation time; absent in deterministic mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_unix: Option<u64>,
}

impl TraceMeta {
    pub fn new(scenario: &str, seed: u64, config: &SessionConfig, goals: Vec<String>, deterministic: bool) -> Self {
        let created_unix = (!deterministic).then(|| {
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
        });
        TraceMeta {
            tool: "intent".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            scenario: scenario.into(),
            seed,
            alpha: config.params.alpha,
            beta: config.params.beta,
            gamma: config.params.gamma,
            delta: config.params.delta,
            m: config.params.m,
            pattern: match config.pattern.kind {
                PatternKind::FibonacciSphere => "sphere".into(),
                PatternKind::PlanarCircle { .. } => "circle".into(),
            },
            samples: config.pattern.count,
            epsilon_motion: config.epsilon_motion,
            goals,
            created_unix,
        }
    }

    fn header_lines(&self) -> Vec<(&'static str, String)> {
        let mut lines = vec![
            ("tool", format!("{} {}", self.tool, self.version)),
            ("scenario", self.scenario.clone()),
            ("seed", self.seed.to_string()),
            ("alpha", self.alpha.to_string()),
            ("beta", self.beta.to_string()),
            ("gamma", self.gamma.to_string()),
            ("delta", self.delta.to_string()),
            ("m", self.m.to_string()),
            ("pattern", self.pattern.clone()),
            ("samples", self.samples.to_string()),
            ("epsilon_motion", self.epsilon_motion.to_string()),
            ("goals", self.goals.join(",")),
        ];
        if let Some(t) = self.created_unix {
            lines.push(("created_unix", t.to_string()));
        }
        lines
    }
}

/// Flat per-step record, one per observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub p: Vec<f64>,
    pub p_unknown: f64,
    pub p_irrational: f64,
    pub argmax: String,
    pub phi: f64,
    pub skipped: bool,
}

impl From<&IntentEstimate> for TraceRecord {
    fn from(e: &IntentEstimate) -> Self {
        TraceRecord {
            t: e.t,
            p: e.per_goal.iter().map(|g| g.p).collect(),
            p_unknown: e.p_unknown,
            p_irrational: e.p_irrational,
            argmax: e.argmax_label(),
            phi: e.phi,
            skipped: e.skipped,
        }
    }
}

pub fn write_trace(
    format: TraceFormat,
    meta: &TraceMeta,
    estimates: &[IntentEstimate],
    mut out: impl Write,
) -> std::io::Result<()> {
    match format {
        TraceFormat::Csv => {
            for (key, value) in meta.header_lines() {
                writeln!(out, "# {key}: {value}")?;
            }
            write!(out, "t")?;
            for id in &meta.goals {
                write!(out, ",{id}")?;
            }
            writeln!(out, ",p_unknown,p_irrational,argmax,phi,skipped")?;
            for e in estimates {
                let r = TraceRecord::from(e);
                write!(out, "{}", r.t)?;
                for p in &r.p {
                    write!(out, ",{p}")?;
                }
                writeln!(out, ",{},{},{},{},{}", r.p_unknown, r.p_irrational, r.argmax, r.phi, r.skipped)?;
            }
        }
        TraceFormat::Jsonl => {
            serde_json::to_writer(&mut out, &serde_json::json!({ "meta": meta }))?;
            out.write_all(b"\n")?;
            for e in estimates {
                serde_json::to_writer(&mut out, &TraceRecord::from(e))?;
                out.write_all(b"\n")?;
            }
        }
    }
    out.flush()
}

#[derive(Debug, thiserror::Error)]
#[error("trace line {line}: {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub message: String,
}

/// `# key: value` header pairs in file order.
pub type Header = Vec<(String, String)>;

/// Reads a CSV trace back into header metadata and records.
pub fn read_csv_trace(text: &str) -> Result<(Header, Vec<TraceRecord>), TraceParseError> {
    let err = |line: usize, message: &str| TraceParseError { line, message: message.into() };
    let mut header = Vec::new();
    let mut records = Vec::new();
    let mut columns: Option<usize> = None;
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if let Some(rest) = line.strip_prefix("# ") {
            let (k, v) = rest.split_once(": ").ok_or_else(|| err(n, "header line without `key: value`"))?;
            header.push((k.to_string(), v.to_string()));
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let Some(width) = columns else {
            if fields.first() != Some(&"t") || fields.len() < 6 {
                return Err(err(n, "missing column header"));
            }
            columns = Some(fields.len());
            continue;
        };
        if fields.len() != width {
            return Err(err(n, "wrong number of fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(n, "bad number"));
        let goals = width - 6;
        records.push(TraceRecord {
            t: num(fields[0])?,
            p: fields[1..=goals].iter().map(|s| num(s)).collect::<Result<_, _>>()?,
            p_unknown: num(fields[goals + 1])?,
            p_irrational: num(fields[goals + 2])?,
            argmax: fields[goals + 3].to_string(),
            phi: num(fields[goals + 4])?,
            skipped: fields[goals + 5].parse().map_err(|_| err(n, "bad flag"))?,
        });
    }
    Ok((header, records))
}
