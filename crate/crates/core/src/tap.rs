//! Phone-tap recognition by per-axis Pearson correlation against a trained
//! template.
//!
//! A template is the medoid of the training traces. Its threshold is the
//! smallest correlation between any two training traces, and a trace matches
//! when its correlation with the template reaches that threshold.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::sensor::{resample, AccelTrace, Axis, ResampleError};

/// How the three per-axis correlations collapse into one score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AxisRule {
    #[default]
    Mean,
    Min,
    AllAxes,
}

impl AxisRule {
    pub fn combine(self, [x, y, z]: [f64; 3]) -> f64 {
        match self {
            AxisRule::Mean => (x + y + z) / 3.0,
            AxisRule::Min | AxisRule::AllAxes => x.min(y).min(z),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AxisRule::Mean => "mean",
            AxisRule::Min => "min",
            AxisRule::AllAxes => "all_axes",
        }
    }
}

impl fmt::Display for AxisRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AxisRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "mean" => Ok(AxisRule::Mean),
            "min" => Ok(AxisRule::Min),
            "all_axes" | "all" => Ok(AxisRule::AllAxes),
            other => Err(format!("unknown axis rule {other:?} (expected mean, min or all_axes)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TapError {
    #[error("need at least 2 traces, got {0}")]
    TooFewTraces(usize),
    #[error(transparent)]
    Resample(#[from] ResampleError),
    #[error("buffer spans {buffer_ms} ms, shorter than the {window_ms} ms template window")]
    BufferTooShort { buffer_ms: u64, window_ms: u64 },
    #[error("stride must be at least 1 sample")]
    ZeroStride,
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
}

/// Pearson correlation of two equally long series, clamped to `[-1, 1]`.
///
/// A constant series has no defined correlation; it scores 0 so a motionless
/// phone never resembles a gesture.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "pearson needs equal-length series");
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return 0.0;
    }
    let r = cov / (var_a * var_b).sqrt();
    if r.is_nan() {
        0.0
    } else {
        r.clamp(-1.0, 1.0)
    }
}

/// Per-axis correlations `[x, y, z]` of two traces with equal sample counts.
pub fn axis_correlations(a: &AccelTrace, b: &AccelTrace) -> [f64; 3] {
    Axis::ALL.map(|axis| pearson(&a.axis_values(axis), &b.axis_values(axis)))
}

/// Correlation score between two already commensurate traces.
pub fn trace_correlation(a: &AccelTrace, b: &AccelTrace, rule: AxisRule) -> f64 {
    rule.combine(axis_correlations(a, b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GestureTemplate {
    reference: AccelTrace,
    n: usize,
    threshold: f64,
    axis_rule: AxisRule,
    created_from: usize,
}

impl GestureTemplate {
    pub fn from_parts(
        reference: AccelTrace,
        n: usize,
        threshold: f64,
        axis_rule: AxisRule,
        created_from: usize,
    ) -> Result<Self, TapError> {
        if reference.len() != n {
            return Err(TapError::InvalidTemplate(format!("reference has {} samples, n = {n}", reference.len())));
        }
        if !(-1.0..=1.0).contains(&threshold) {
            return Err(TapError::InvalidTemplate(format!("threshold {threshold} outside [-1, 1]")));
        }
        if created_from < 2 {
            return Err(TapError::InvalidTemplate(format!("built from {created_from} traces, need at least 2")));
        }
        Ok(Self { reference, n, threshold, axis_rule, created_from })
    }

    pub fn reference(&self) -> &AccelTrace {
        &self.reference
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn axis_rule(&self) -> AxisRule {
        self.axis_rule
    }

    pub fn created_from(&self) -> usize {
        self.created_from
    }

    /// Duration covered by the reference trace.
    pub fn window_ms(&self) -> u64 {
        self.reference.span()
    }

    /// Copy with a different threshold.
    pub fn with_threshold(&self, threshold: f64) -> Result<Self, TapError> {
        Self::from_parts(self.reference.clone(), self.n, threshold, self.axis_rule, self.created_from)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchResult {
    pub score: f64,
    pub matched: bool,
    /// Index of the first buffer sample of the window (0 for whole-trace matches).
    pub offset: usize,
}

/// Correlation of `trace` (already resampled to `template.n()`) with the template.
pub fn cross_correlation(trace: &AccelTrace, template: &GestureTemplate) -> f64 {
    trace_correlation(trace, &template.reference, template.axis_rule)
}

fn resample_all(traces: &[AccelTrace], n: usize) -> Result<Vec<AccelTrace>, TapError> {
    traces.iter().map(|t| resample(t, n).map_err(TapError::from)).collect()
}

/// Smallest pairwise correlation among commensurate training traces.
pub fn compute_threshold(traces: &[AccelTrace], rule: AxisRule) -> Result<f64, TapError> {
    if traces.len() < 2 {
        return Err(TapError::TooFewTraces(traces.len()));
    }
    let mut min = f64::INFINITY;
    for i in 0..traces.len() {
        for j in (i + 1)..traces.len() {
            min = min.min(trace_correlation(&traces[i], &traces[j], rule));
        }
    }
    Ok(min)
}

/// Resamples every training trace to `n`, picks the medoid as reference and
/// sets the threshold to the minimum pairwise correlation.
pub fn build_template(traces: &[AccelTrace], n: usize, rule: AxisRule) -> Result<GestureTemplate, TapError> {
    let m = traces.len();
    if m < 2 {
        return Err(TapError::TooFewTraces(m));
    }
    let resampled = resample_all(traces, n)?;
    let mut scores = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in (i + 1)..m {
            let c = trace_correlation(&resampled[i], &resampled[j], rule);
            scores[i][j] = c;
            scores[j][i] = c;
        }
    }
    let threshold =
        (0..m).flat_map(|i| ((i + 1)..m).map(move |j| (i, j))).map(|(i, j)| scores[i][j]).fold(f64::INFINITY, f64::min);
    // Ties keep the earliest trace.
    let mut medoid = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, row) in scores.iter().enumerate() {
        let total: f64 = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, c)| c).sum();
        if total > best {
            best = total;
            medoid = i;
        }
    }
    let reference = resampled.into_iter().nth(medoid).expect("medoid index in range");
    GestureTemplate::from_parts(reference, n, threshold, rule, m)
}

/// Matches a whole trace against the template after resampling it to `n`.
pub fn match_trace(trace: &AccelTrace, template: &GestureTemplate) -> Result<MatchResult, TapError> {
    let resampled = resample(trace, template.n)?;
    let score = cross_correlation(&resampled, template);
    Ok(MatchResult { score, matched: score >= template.threshold, offset: 0 })
}

/// Default sliding-window stride: a tenth of the template length.
pub fn default_stride(template: &GestureTemplate) -> usize {
    (template.n / 10).max(1)
}

/// Slides a template-length window over `buffer` and returns the coalesced
/// matches.
///
/// Windows start every `stride` samples; one extra window is aligned with the
/// end of the buffer so a gesture finishing at the last sample is always
/// examined. Matches whose offsets lie within one window length of each other
/// collapse to the highest-scoring one.
pub fn scan_stream(
    buffer: &AccelTrace,
    template: &GestureTemplate,
    stride: usize,
) -> Result<Vec<MatchResult>, TapError> {
    if stride == 0 {
        return Err(TapError::ZeroStride);
    }
    let window_ms = template.window_ms();
    if buffer.span() < window_ms {
        return Err(TapError::BufferTooShort { buffer_ms: buffer.span(), window_ms });
    }
    let samples = buffer.samples();
    let last_start_t = buffer.end() - window_ms;
    let last_start = samples.partition_point(|s| s.t <= last_start_t) - 1;
    let mut starts: Vec<usize> = (0..=last_start).step_by(stride).collect();
    if starts.last() != Some(&last_start) {
        starts.push(last_start);
    }
    let window_len = samples.partition_point(|s| s.t <= samples[0].t + window_ms).max(2);

    let mut hits = Vec::new();
    for start in starts {
        let end_t = samples[start].t + window_ms;
        let end = samples.partition_point(|s| s.t <= end_t);
        let Some(window) = buffer.slice_index(start, end) else { continue };
        if window.span() + 1 < template.n as u64 {
            continue;
        }
        let resampled = resample(&window, template.n)?;
        let score = cross_correlation(&resampled, template);
        if score >= template.threshold {
            hits.push(MatchResult { score, matched: true, offset: start });
        }
    }
    Ok(coalesce(hits, window_len))
}

fn coalesce(hits: Vec<MatchResult>, window_len: usize) -> Vec<MatchResult> {
    let mut out: Vec<MatchResult> = Vec::new();
    let mut group_start = 0usize;
    for hit in hits {
        match out.last_mut() {
            Some(best) if hit.offset < group_start + window_len => {
                if hit.score > best.score {
                    *best = hit;
                }
            }
            _ => {
                group_start = hit.offset;
                out.push(hit);
            }
        }
    }
    out
}
