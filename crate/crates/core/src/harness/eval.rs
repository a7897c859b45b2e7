//! Confusion-matrix evaluation over synthetic corpora.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::harness::gen::{
    derive_seed, gen_activity_trace, gen_prox_stream, gen_tap_trace, Activity, GenError, GenParams, ProxKind,
    TapGesture,
};
use crate::prox::{run_detector, ProxConfig, ProxError};
use crate::sensor::{AccelTrace, ProxTrace};
use crate::tap::{build_template, match_trace, AxisRule, GestureTemplate, TapError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("corpus {0:?} is empty")]
    EmptyCorpus(String),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Tap(#[from] TapError),
    #[error(transparent)]
    Prox(#[from] ProxError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub gesture: String,
    pub activity: String,
    pub matches: usize,
    pub total: usize,
}

impl Cell {
    pub fn rate(&self) -> f64 {
        self.matches as f64 / self.total as f64
    }
}

/// Rows are gestures, columns are the corpora each gesture was tested on.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub title: String,
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    /// For each row, the column holding genuine instances of that gesture.
    pub positive_column: Vec<Option<String>>,
    /// Columns that contain no gesture of any row.
    pub negative_columns: Vec<String>,
    pub cells: Vec<Cell>,
    pub runtime: Duration,
}

impl EvalReport {
    pub fn cell(&self, gesture: &str, activity: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.gesture == gesture && c.activity == activity)
    }

    pub fn rate(&self, gesture: &str, activity: &str) -> Option<f64> {
        self.cell(gesture, activity).map(Cell::rate)
    }

    /// Fraction of genuine gestures the row's detector missed.
    pub fn fnr(&self, gesture: &str) -> Option<f64> {
        let row = self.rows.iter().position(|r| r == gesture)?;
        let column = self.positive_column[row].as_deref()?;
        self.rate(gesture, column).map(|r| 1.0 - r)
    }

    /// Pooled false-match rate over the negative columns.
    pub fn fpr(&self, gesture: &str) -> Option<f64> {
        let (m, t) = self
            .cells
            .iter()
            .filter(|c| c.gesture == gesture && self.negative_columns.contains(&c.activity))
            .fold((0, 0), |(m, t), c| (m + c.matches, t + c.total));
        (t > 0).then(|| m as f64 / t as f64)
    }

    /// `gesture,activity,matches,total,rate` per cell.
    pub fn machine_lines(&self) -> String {
        let mut out = String::new();
        for c in &self.cells {
            let _ = writeln!(out, "{},{},{},{},{:.4}", c.gesture, c.activity, c.matches, c.total, c.rate());
        }
        out
    }

    /// Aligned text table of match rates in percent.
    pub fn table(&self) -> String {
        let first = self.rows.iter().map(String::len).max().unwrap_or(0).max(8);
        let widths: Vec<usize> = self.columns.iter().map(|c| c.len().max(8)).collect();
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.title);
        let _ = write!(out, "{:first$}", "");
        for (c, w) in self.columns.iter().zip(&widths) {
            let _ = write!(out, " | {c:>w$}");
        }
        out.push('\n');
        let rule_len = first + widths.iter().map(|w| w + 3).sum::<usize>();
        let _ = writeln!(out, "{}", "-".repeat(rule_len));
        for row in &self.rows {
            let _ = write!(out, "{row:first$}");
            for (col, w) in self.columns.iter().zip(&widths) {
                let text = self.rate(row, col).map_or("-".to_string(), |r| format!("{:.2}%", 100.0 * r));
                let _ = write!(out, " | {text:>w$}");
            }
            out.push('\n');
        }
        for row in &self.rows {
            let fnr = self.fnr(row).map_or("-".into(), |v| format!("{:.2}%", 100.0 * v));
            let fpr = self.fpr(row).map_or("-".into(), |v| format!("{:.2}%", 100.0 * v));
            let _ = writeln!(out, "{row}: FNR {fnr}, FPR {fpr}");
        }
        out
    }
}

/// A labelled corpus of accelerometer windows.
#[derive(Debug, Clone)]
pub struct AccelCorpus {
    pub name: String,
    pub traces: Vec<AccelTrace>,
}

/// Matches every corpus against every template.
pub fn run_tap_evaluation(
    templates: &[(String, GestureTemplate)],
    corpora: &[AccelCorpus],
    positive_column: Vec<Option<String>>,
    negative_columns: Vec<String>,
) -> Result<EvalReport, EvalError> {
    let started = Instant::now();
    let mut cells = Vec::with_capacity(templates.len() * corpora.len());
    for (name, template) in templates {
        for corpus in corpora {
            if corpus.traces.is_empty() {
                return Err(EvalError::EmptyCorpus(corpus.name.clone()));
            }
            let mut matches = 0;
            for trace in &corpus.traces {
                if match_trace(trace, template)?.matched {
                    matches += 1;
                }
            }
            cells.push(Cell {
                gesture: name.clone(),
                activity: corpus.name.clone(),
                matches,
                total: corpus.traces.len(),
            });
        }
    }
    Ok(EvalReport {
        title: "Phone tap detection (match rate of row template against column corpus)".into(),
        rows: templates.iter().map(|(n, _)| n.clone()).collect(),
        columns: corpora.iter().map(|c| c.name.clone()).collect(),
        positive_column,
        negative_columns,
        cells,
        runtime: started.elapsed(),
    })
}

#[derive(Debug, Clone)]
pub struct TapSuiteConfig {
    pub params: GenParams,
    pub train_size: usize,
    pub corpus_size: usize,
    pub n: usize,
    pub axis_rule: AxisRule,
}

impl Default for TapSuiteConfig {
    fn default() -> Self {
        Self { params: GenParams::default(), train_size: 30, corpus_size: 150, n: 100, axis_rule: AxisRule::Mean }
    }
}

const TRAIN_TAG: u64 = 0x7261_696e;
const TEST_TAG: u64 = 0x7465_7374;

/// Training set for one tap gesture.
pub fn tap_training_set(cfg: &TapSuiteConfig, gesture: TapGesture) -> Result<Vec<AccelTrace>, GenError> {
    (0..cfg.train_size as u64)
        .map(|i| {
            let seed = derive_seed(cfg.params.rng_seed, TRAIN_TAG + gesture.taps() as u64, i);
            gen_tap_trace(&cfg.params.with_seed(seed).with_taps(gesture.taps()))
        })
        .collect()
}

/// Fresh test corpora: one per tap gesture, then one per benign activity.
pub fn tap_test_corpora(cfg: &TapSuiteConfig) -> Result<Vec<AccelCorpus>, GenError> {
    let mut corpora = Vec::new();
    for g in TapGesture::ALL {
        let traces = (0..cfg.corpus_size as u64)
            .map(|i| {
                let seed = derive_seed(cfg.params.rng_seed, TEST_TAG + g.taps() as u64, i);
                gen_tap_trace(&cfg.params.with_seed(seed).with_taps(g.taps()))
            })
            .collect::<Result<_, _>>()?;
        corpora.push(AccelCorpus { name: g.name().into(), traces });
    }
    for (k, a) in Activity::ALL.into_iter().enumerate() {
        let traces = (0..cfg.corpus_size as u64)
            .map(|i| {
                let seed = derive_seed(cfg.params.rng_seed, TEST_TAG + 16 + k as u64, i);
                gen_activity_trace(a, &cfg.params.with_seed(seed))
            })
            .collect::<Result<_, _>>()?;
        corpora.push(AccelCorpus { name: a.name().into(), traces });
    }
    Ok(corpora)
}

/// Trains one template per tap gesture and evaluates it against all corpora.
pub fn tap_suite(cfg: &TapSuiteConfig) -> Result<EvalReport, EvalError> {
    let started = Instant::now();
    let mut templates = Vec::new();
    for g in TapGesture::ALL {
        let training = tap_training_set(cfg, g)?;
        templates.push((g.name().to_string(), build_template(&training, cfg.n, cfg.axis_rule)?));
    }
    let corpora = tap_test_corpora(cfg)?;
    let positive = TapGesture::ALL.iter().map(|g| Some(g.name().to_string())).collect();
    let negative = Activity::ALL.iter().map(|a| a.name().to_string()).collect();
    let mut report = run_tap_evaluation(&templates, &corpora, positive, negative)?;
    report.runtime = started.elapsed();
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct ProxCorpus {
    pub name: String,
    pub traces: Vec<ProxTrace>,
}

/// Fraction of streams in each corpus that produced at least one unlock.
///
/// The detector does not tell the gestures apart, so both rows share the
/// per-corpus unlock counts; each row's own gesture column is its
/// recognition rate.
pub fn run_prox_evaluation(corpora: &[ProxCorpus], cfg: &ProxConfig, epsilon: f64) -> Result<EvalReport, EvalError> {
    let started = Instant::now();
    let mut counts = Vec::with_capacity(corpora.len());
    for corpus in corpora {
        if corpus.traces.is_empty() {
            return Err(EvalError::EmptyCorpus(corpus.name.clone()));
        }
        let mut unlocked = 0;
        for trace in &corpus.traces {
            if !run_detector(trace, cfg, epsilon)?.is_empty() {
                unlocked += 1;
            }
        }
        counts.push((corpus.name.clone(), unlocked, corpus.traces.len()));
    }
    let rows: Vec<String> = [ProxKind::Wave, ProxKind::TapRub].iter().map(|k| k.name().to_string()).collect();
    let cells = rows
        .iter()
        .flat_map(|row| {
            counts.iter().map(move |(name, m, t)| Cell {
                gesture: row.clone(),
                activity: name.clone(),
                matches: *m,
                total: *t,
            })
        })
        .collect();
    let columns: Vec<String> = corpora.iter().map(|c| c.name.clone()).collect();
    let positive = rows.iter().map(|r| columns.iter().find(|c| *c == r).cloned()).collect();
    let negative = columns.iter().filter(|c| !rows.contains(c)).cloned().collect();
    Ok(EvalReport {
        title: "Proximity wave/tap/rub detection (unlock rate per corpus)".into(),
        rows,
        columns,
        positive_column: positive,
        negative_columns: negative,
        cells,
        runtime: started.elapsed(),
    })
}

#[derive(Debug, Clone)]
pub struct ProxSuiteConfig {
    pub params: GenParams,
    pub corpus_size: usize,
    pub prox: ProxConfig,
    pub epsilon: f64,
}

impl Default for ProxSuiteConfig {
    fn default() -> Self {
        Self {
            params: GenParams::default(),
            corpus_size: 150,
            prox: ProxConfig::default(),
            epsilon: crate::prox::DEFAULT_EPSILON_CM,
        }
    }
}

const PROX_TAG: u64 = 0x7072_6f78;

pub fn prox_corpora(cfg: &ProxSuiteConfig) -> Result<Vec<ProxCorpus>, GenError> {
    ProxKind::ALL
        .iter()
        .enumerate()
        .map(|(k, &kind)| {
            let traces = (0..cfg.corpus_size as u64)
                .map(|i| {
                    gen_prox_stream(
                        kind,
                        &cfg.params.with_seed(derive_seed(cfg.params.rng_seed, PROX_TAG + k as u64, i)),
                    )
                })
                .collect::<Result<_, _>>()?;
            Ok(ProxCorpus { name: kind.name().into(), traces })
        })
        .collect()
}

pub fn prox_suite(cfg: &ProxSuiteConfig) -> Result<EvalReport, EvalError> {
    let started = Instant::now();
    let corpora = prox_corpora(cfg)?;
    let mut report = run_prox_evaluation(&corpora, &cfg.prox, cfg.epsilon)?;
    report.runtime = started.elapsed();
    Ok(report)
}
