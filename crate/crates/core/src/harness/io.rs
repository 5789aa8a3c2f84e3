//! Output directory layout and file formats.
//!
//! | file              | format | contents                                  |
//! |-------------------|--------|-------------------------------------------|
//! | `corpus.json`     | JSON   | [`Corpus`]                                |
//! | `hierarchy.json`  | JSON   | [`Hierarchy`]                             |
//! | `tasks.json`      | JSON   | [`TaskSet`](crate::episodes::TaskSet)     |
//! | `checkpoint.json` | JSON   | [`Checkpoint`]                            |
//! | `trace.csv`       | CSV    | one row per training batch and seed       |
//! | `report.csv`      | CSV    | one row per variant and seed, plus means  |
//! | `report.txt`      | text   | the same numbers as a table               |
//!
//! Every JSON document starts with a `version` field and every CSV row
//! carries one in its first column. Reports never include timings, so equal
//! inputs give byte-identical reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::chc::{Corpus, Hierarchy, CORPUS_VERSION, HIERARCHY_VERSION};
use crate::clipette::PromptState;
use crate::error::{Error, Result};
use crate::gram::{MetaState, RegulatorParams, TraceRecord};
use crate::harness::config::{ExperimentConfig, Variant};
use crate::harness::protocols::{EvalReport, Protocol, SeedStates};

pub const CHECKPOINT_VERSION: u32 = 1;
pub const CSV_VERSION: u32 = 1;

pub const CORPUS_FILE: &str = "corpus.json";
pub const HIERARCHY_FILE: &str = "hierarchy.json";
pub const TASKS_FILE: &str = "tasks.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_TXT: &str = "report.txt";

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[derive(Deserialize)]
struct Versioned {
    version: u32,
}

/// Reads a JSON document after checking its leading version.
pub fn read_json<T: DeserializeOwned>(path: &Path, version: u32) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let v: Versioned = serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if v.version != version {
        return Err(Error::Format(format!(
            "{} has version {}, expected {version}",
            path.display(),
            v.version
        )));
    }
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn read_corpus(path: &Path) -> Result<Corpus> {
    let c: Corpus = read_json(path, CORPUS_VERSION)?;
    c.validate()?;
    Ok(c)
}

pub fn read_hierarchy(path: &Path) -> Result<Hierarchy> {
    let h: Hierarchy = read_json(path, HIERARCHY_VERSION)?;
    h.validate()?;
    Ok(h)
}

/// Trained state of one evaluation seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedCheckpoint {
    pub index: usize,
    pub failure: Option<String>,
    pub theta: Option<PromptState>,
    pub phi: Option<RegulatorParams>,
    pub step: usize,
    pub trace: Vec<TraceRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: ExperimentConfig,
    pub protocol: Protocol,
    pub variant: Variant,
    pub seeds: Vec<SeedCheckpoint>,
}

impl Checkpoint {
    pub fn from_states(cfg: &ExperimentConfig, protocol: Protocol, variant: Variant, states: &SeedStates) -> Self {
        let seeds = states
            .iter()
            .enumerate()
            .map(|(index, s)| match s {
                Ok(m) => SeedCheckpoint {
                    index,
                    failure: None,
                    theta: Some(m.theta.clone()),
                    phi: Some(m.phi.clone()),
                    step: m.step,
                    trace: m.trace.clone(),
                },
                Err(reason) => SeedCheckpoint {
                    index,
                    failure: Some(reason.clone()),
                    theta: None,
                    phi: None,
                    step: 0,
                    trace: Vec::new(),
                },
            })
            .collect();
        Self {
            version: CHECKPOINT_VERSION,
            config: cfg.clone(),
            protocol,
            variant,
            seeds,
        }
    }

    pub fn states(&self) -> Result<SeedStates> {
        self.seeds
            .iter()
            .map(|s| match (&s.failure, &s.theta, &s.phi) {
                (Some(reason), _, _) => Ok(Err(reason.clone())),
                (None, Some(theta), Some(phi)) => Ok(Ok(MetaState {
                    theta: theta.clone(),
                    phi: phi.clone(),
                    step: s.step,
                    trace: s.trace.clone(),
                })),
                _ => Err(Error::Format(format!("checkpoint seed {} has no state", s.index))),
            })
            .collect()
    }

    /// Whether this checkpoint was trained for exactly this setting.
    pub fn matches(&self, cfg: &ExperimentConfig, protocol: Protocol, variant: Variant) -> bool {
        self.config == *cfg && self.protocol == protocol && self.variant == variant
    }
}

pub fn write_trace(path: &Path, states: &SeedStates) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e))?;
    let err = |e: csv::Error| Error::io(path, e);
    w.write_record([
        "version",
        "seed_index",
        "step",
        "tasks_seen",
        "mean_query_loss",
        "mean_alignment",
        "wall_ms",
    ])
    .map_err(err)?;
    for (i, s) in states.iter().enumerate() {
        let Ok(state) = s else { continue };
        for r in &state.trace {
            w.write_record([
                CSV_VERSION.to_string(),
                i.to_string(),
                r.step.to_string(),
                r.tasks_seen.to_string(),
                format!("{:.9}", r.mean_query_loss),
                format!("{:.9}", r.mean_alignment),
                format!("{:.3}", r.wall_ms),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

/// Machine-readable report: per-seed rows followed by one mean row per report.
pub fn report_csv(reports: &[EvalReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Format(e.to_string());
    w.write_record([
        "version",
        "protocol",
        "variant",
        "mode",
        "seed_index",
        "seed",
        "status",
        "base_acc",
        "new_acc",
        "harmonic_mean",
        "in_domain_acc",
        "held_out_acc",
        "alignment_first_quarter",
        "alignment_last_quarter",
    ])
    .map_err(err)?;
    for r in reports {
        for s in &r.per_seed {
            let status = s.failure.clone().unwrap_or_else(|| "ok".into());
            let (b, n) = (s.accuracy("base"), s.accuracy("new"));
            let h = match (b, n) {
                (Some(b), Some(n)) => Some(crate::harness::protocols::harmonic_mean(b, n)),
                _ => None,
            };
            w.write_record([
                CSV_VERSION.to_string(),
                r.protocol.name().into(),
                r.variant.name().into(),
                r.mode.clone(),
                s.index.to_string(),
                s.seed.to_string(),
                status,
                fmt_opt(b),
                fmt_opt(n),
                fmt_opt(h),
                fmt_opt(s.accuracy("in_domain")),
                fmt_opt(s.accuracy("held_out")),
                format!("{:.6}", s.alignment_first_quarter),
                format!("{:.6}", s.alignment_last_quarter),
            ])
            .map_err(err)?;
        }
        let b2n = r.protocol == Protocol::BaseToNew;
        w.write_record([
            CSV_VERSION.to_string(),
            r.protocol.name().into(),
            r.variant.name().into(),
            r.mode.clone(),
            "mean".into(),
            String::new(),
            format!(
                "{}/{} ok",
                r.per_seed.iter().filter(|s| s.failure.is_none()).count(),
                r.per_seed.len()
            ),
            fmt_opt(b2n.then_some(r.base_acc)),
            fmt_opt(b2n.then_some(r.new_acc)),
            fmt_opt(b2n.then_some(r.harmonic_mean)),
            fmt_opt(r.in_domain_acc),
            fmt_opt(r.held_out_acc),
            format!("{:.6}", r.alignment_first_quarter),
            format!("{:.6}", r.alignment_last_quarter),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// Human-readable report table.
pub fn report_text(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    let pct = |v: Option<f64>| v.map_or_else(|| "     -".to_string(), |x| format!("{:6.2}", 100.0 * x));
    for (i, r) in reports.iter().enumerate() {
        if i == 0 || reports[i - 1].protocol != r.protocol {
            let _ = writeln!(out, "protocol: {}   mode: {}", r.protocol.name(), r.mode);
            let _ = writeln!(
                out,
                "{:<26} {:>6} {:>6} {:>6} {:>6} {:>6}  {:>15}  {:>5}",
                "variant", "base", "new", "H", "in", "held", "alignment q1/q4", "seeds"
            );
        }
        let b2n = r.protocol == Protocol::BaseToNew;
        let ok = r.per_seed.iter().filter(|s| s.failure.is_none()).count();
        let _ = writeln!(
            out,
            "{:<26} {} {} {} {} {}  {:>7.3}/{:<7.3}  {:>2}/{:<2}",
            r.variant.name(),
            pct(b2n.then_some(r.base_acc)),
            pct(b2n.then_some(r.new_acc)),
            pct(b2n.then_some(r.harmonic_mean)),
            pct(r.in_domain_acc),
            pct(r.held_out_acc),
            r.alignment_first_quarter,
            r.alignment_last_quarter,
            ok,
            r.per_seed.len()
        );
        for s in &r.per_seed {
            let detail = match &s.failure {
                Some(reason) => format!("failed: {reason}"),
                None => s
                    .accuracies
                    .iter()
                    .map(|(n, v)| format!("{n} {:.2}", 100.0 * v))
                    .collect::<Vec<_>>()
                    .join(", "),
            };
            let _ = writeln!(out, "    seed {}: {detail}", s.index);
        }
    }
    out
}

/// Writes `report.csv` and `report.txt` into `dir`.
pub fn write_reports(dir: &Path, reports: &[EvalReport]) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join(REPORT_CSV);
    let txt_path = dir.join(REPORT_TXT);
    fs::write(&csv_path, report_csv(reports)?).map_err(|e| Error::io(&csv_path, e))?;
    fs::write(&txt_path, report_text(reports)).map_err(|e| Error::io(&txt_path, e))?;
    Ok((csv_path, txt_path))
}
