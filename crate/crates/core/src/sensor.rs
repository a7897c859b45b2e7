//! Sensor samples, trace containers and the plain-text trace formats.
//!
//! Accelerometer files hold one `t_ms,ax,ay,az` row per line, proximity files
//! hold `t_ms,value_cm`. Lines starting with `#` are comments; a
//! `# label: <tag>` comment sets the trace label. Values are written with the
//! shortest decimal representation that parses back to the same `f64`, so a
//! parse/serialize/parse cycle is bit-exact.

use std::fmt::{self, Write as _};

use thiserror::Error;

/// Milliseconds since the start of a trace.
pub type Millis = u64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelSample {
    pub t: Millis,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

impl AccelSample {
    pub fn new(t: Millis, ax: f64, ay: f64, az: f64) -> Self {
        Self { t, ax, ay, az }
    }

    pub fn axis(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.ax,
            Axis::Y => self.ay,
            Axis::Z => self.az,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

/// A validated accelerometer recording: at least two samples, strictly
/// increasing timestamps, finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct AccelTrace {
    samples: Vec<AccelSample>,
    label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("trace needs at least {min} samples, got {got}")]
    TooShort { min: usize, got: usize },
    #[error("non-increasing timestamp at sample {index} ({t} ms after {prev} ms)")]
    NonIncreasing { index: usize, prev: Millis, t: Millis },
    #[error("non-finite value at sample {index}")]
    NonFinite { index: usize },
    #[error("negative proximity value at sample {index}")]
    NegativeProximity { index: usize },
}

impl AccelTrace {
    pub fn new(samples: Vec<AccelSample>, label: Option<String>) -> Result<Self, TraceError> {
        if samples.len() < 2 {
            return Err(TraceError::TooShort { min: 2, got: samples.len() });
        }
        for (i, s) in samples.iter().enumerate() {
            if !(s.ax.is_finite() && s.ay.is_finite() && s.az.is_finite()) {
                return Err(TraceError::NonFinite { index: i });
            }
            if i > 0 && s.t <= samples[i - 1].t {
                return Err(TraceError::NonIncreasing { index: i, prev: samples[i - 1].t, t: s.t });
            }
        }
        Ok(Self { samples, label })
    }

    pub fn samples(&self) -> &[AccelSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn with_label(mut self, label: Option<String>) -> Self {
        self.label = label;
        self
    }

    pub fn start(&self) -> Millis {
        self.samples[0].t
    }

    pub fn end(&self) -> Millis {
        self.samples[self.samples.len() - 1].t
    }

    pub fn span(&self) -> Millis {
        self.end() - self.start()
    }

    /// Values of one axis, in sample order.
    pub fn axis_values(&self, axis: Axis) -> Vec<f64> {
        self.samples.iter().map(|s| s.axis(axis)).collect()
    }

    /// Samples with `from <= t <= to`, or `None` when fewer than two fall
    /// inside the range.
    pub fn slice_time(&self, from: Millis, to: Millis) -> Option<AccelTrace> {
        let lo = self.samples.partition_point(|s| s.t < from);
        let hi = self.samples.partition_point(|s| s.t <= to);
        self.slice_index(lo, hi)
    }

    /// Samples `lo..hi`, or `None` when the range holds fewer than two.
    pub fn slice_index(&self, lo: usize, hi: usize) -> Option<AccelTrace> {
        if hi > self.samples.len() || hi < lo + 2 {
            return None;
        }
        Some(AccelTrace { samples: self.samples[lo..hi].to_vec(), label: self.label.clone() })
    }

    /// Same samples shifted so the first timestamp becomes `start`.
    pub fn rebased(&self, start: Millis) -> AccelTrace {
        let t0 = self.start();
        let samples = self.samples.iter().map(|s| AccelSample { t: s.t - t0 + start, ..*s }).collect();
        AccelTrace { samples, label: self.label.clone() }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 32);
        if let Some(label) = &self.label {
            let _ = writeln!(out, "# label: {label}");
        }
        for s in &self.samples {
            let _ = writeln!(out, "{},{},{},{}", s.t, s.ax, s.ay, s.az);
        }
        out
    }
}

impl fmt::Display for AccelTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxSample {
    pub t: Millis,
    pub value: f64,
}

impl ProxSample {
    pub fn new(t: Millis, value: f64) -> Self {
        Self { t, value }
    }
}

/// Proximity readings in cm. Binary near/far sensors are encoded as two
/// distinct constants (for example 0.0 and the sensor's maximum range).
#[derive(Debug, Clone, PartialEq)]
pub struct ProxTrace {
    samples: Vec<ProxSample>,
    label: Option<String>,
}

impl ProxTrace {
    pub fn new(samples: Vec<ProxSample>, label: Option<String>) -> Result<Self, TraceError> {
        if samples.is_empty() {
            return Err(TraceError::TooShort { min: 1, got: 0 });
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.value.is_finite() {
                return Err(TraceError::NonFinite { index: i });
            }
            if s.value < 0.0 {
                return Err(TraceError::NegativeProximity { index: i });
            }
            if i > 0 && s.t <= samples[i - 1].t {
                return Err(TraceError::NonIncreasing { index: i, prev: samples[i - 1].t, t: s.t });
            }
        }
        Ok(Self { samples, label })
    }

    pub fn samples(&self) -> &[ProxSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn end(&self) -> Millis {
        self.samples[self.samples.len() - 1].t
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 16);
        if let Some(label) = &self.label {
            let _ = writeln!(out, "# label: {label}");
        }
        for s in &self.samples {
            let _ = writeln!(out, "{},{}", s.t, s.value);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    /// 1-based line number; 0 when the error concerns the whole input.
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("wrong column count: expected {expected}, found {found}")]
    ColumnCount { expected: usize, found: usize },
    #[error("invalid number {0:?}")]
    BadNumber(String),
    #[error("non-finite value")]
    NonFinite,
    #[error("non-increasing timestamp")]
    NonIncreasingTimestamp,
    #[error("negative proximity value")]
    NegativeProximity,
    #[error("empty trace")]
    Empty,
    #[error("need at least 2 samples, found {0}")]
    TooFewSamples(usize),
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

/// Yields `(line_number, fields)` for data rows and collects the label.
fn rows<'a>(text: &'a str, label: &mut Option<String>) -> Vec<(usize, Vec<&'a str>)> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(tag) = comment.trim_start().strip_prefix("label:") {
                *label = Some(tag.trim().to_string());
            }
            continue;
        }
        out.push((i + 1, line.split(',').map(str::trim).collect()));
    }
    out
}

fn parse_t(line: usize, field: &str) -> Result<Millis, ParseError> {
    field.parse::<Millis>().map_err(|_| err(line, ParseErrorKind::BadNumber(field.to_string())))
}

fn parse_value(line: usize, field: &str) -> Result<f64, ParseError> {
    let v = field.parse::<f64>().map_err(|_| err(line, ParseErrorKind::BadNumber(field.to_string())))?;
    if !v.is_finite() {
        return Err(err(line, ParseErrorKind::NonFinite));
    }
    Ok(v)
}

pub fn parse_accel_trace(text: &str) -> Result<AccelTrace, ParseError> {
    let mut label = None;
    let rows = rows(text, &mut label);
    let mut samples: Vec<AccelSample> = Vec::with_capacity(rows.len());
    for (line, fields) in rows {
        if fields.len() != 4 {
            return Err(err(line, ParseErrorKind::ColumnCount { expected: 4, found: fields.len() }));
        }
        let t = parse_t(line, fields[0])?;
        let ax = parse_value(line, fields[1])?;
        let ay = parse_value(line, fields[2])?;
        let az = parse_value(line, fields[3])?;
        if samples.last().is_some_and(|p| t <= p.t) {
            return Err(err(line, ParseErrorKind::NonIncreasingTimestamp));
        }
        samples.push(AccelSample { t, ax, ay, az });
    }
    if samples.len() < 2 {
        return Err(err(0, ParseErrorKind::TooFewSamples(samples.len())));
    }
    Ok(AccelTrace { samples, label })
}

pub fn parse_prox_trace(text: &str) -> Result<ProxTrace, ParseError> {
    let mut label = None;
    let rows = rows(text, &mut label);
    let mut samples: Vec<ProxSample> = Vec::with_capacity(rows.len());
    for (line, fields) in rows {
        if fields.len() != 2 {
            return Err(err(line, ParseErrorKind::ColumnCount { expected: 2, found: fields.len() }));
        }
        let t = parse_t(line, fields[0])?;
        let value = parse_value(line, fields[1])?;
        if value < 0.0 {
            return Err(err(line, ParseErrorKind::NegativeProximity));
        }
        if samples.last().is_some_and(|p| t <= p.t) {
            return Err(err(line, ParseErrorKind::NonIncreasingTimestamp));
        }
        samples.push(ProxSample { t, value });
    }
    if samples.is_empty() {
        return Err(err(0, ParseErrorKind::Empty));
    }
    Ok(ProxTrace { samples, label })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResampleError {
    #[error("cannot resample to {0} points, need at least 2")]
    TooFewPoints(usize),
    #[error("trace spans {span} ms, too short for {n} distinct millisecond timestamps")]
    SpanTooShort { span: Millis, n: usize },
}

/// Resamples to `n` points on a uniform integer-millisecond grid from the
/// first to the last timestamp, interpolating each axis linearly.
///
/// Grid timestamps are rounded to whole milliseconds and values are
/// interpolated at the rounded time, so resampling an already uniform trace
/// (or a previous resample output) returns it unchanged.
pub fn resample(trace: &AccelTrace, n: usize) -> Result<AccelTrace, ResampleError> {
    if n < 2 {
        return Err(ResampleError::TooFewPoints(n));
    }
    let t0 = trace.start();
    let span = trace.span();
    if span < (n - 1) as Millis {
        return Err(ResampleError::SpanTooShort { span, n });
    }
    let src = trace.samples();
    let step = span as f64 / (n - 1) as f64;
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    for k in 0..n {
        let t = if k == n - 1 { trace.end() } else { t0 + (k as f64 * step).round() as Millis };
        while seg + 1 < src.len() && src[seg + 1].t <= t {
            seg += 1;
        }
        let sample = if seg + 1 == src.len() || src[seg].t == t {
            AccelSample { t, ..src[seg] }
        } else {
            let (a, b) = (&src[seg], &src[seg + 1]);
            let frac = (t - a.t) as f64 / (b.t - a.t) as f64;
            AccelSample { t, ax: lerp(a.ax, b.ax, frac), ay: lerp(a.ay, b.ay, frac), az: lerp(a.az, b.az, frac) }
        };
        out.push(sample);
    }
    Ok(AccelTrace { samples: out, label: trace.label.clone() })
}

fn lerp(a: f64, b: f64, frac: f64) -> f64 {
    let v = a + (b - a) * frac;
    v.clamp(a.min(b), a.max(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn accel(rows: &[(Millis, f64, f64, f64)]) -> AccelTrace {
        AccelTrace::new(rows.iter().map(|&(t, x, y, z)| AccelSample::new(t, x, y, z)).collect(), None).unwrap()
    }

    #[test]
    fn parses_two_rows() {
        let tr = parse_accel_trace("0,0.1,9.8,0.0\n20,0.2,9.7,0.1").unwrap();
        assert_eq!(tr.len(), 2);
        assert_eq!(tr.samples().iter().map(|s| s.t).collect::<Vec<_>>(), vec![0, 20]);
        assert_eq!(tr.samples()[1].az, 0.1);
    }

    #[test]
    fn duplicate_timestamp_is_rejected_at_line_2() {
        let e = parse_accel_trace("0,1,2,3\n0,1,2,3").unwrap_err();
        assert_eq!(e, ParseError { line: 2, kind: ParseErrorKind::NonIncreasingTimestamp });
    }

    #[test]
    fn wrong_column_count_reports_line() {
        let e = parse_accel_trace("0,1,2").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(matches!(e.kind, ParseErrorKind::ColumnCount { expected: 4, found: 3 }));
    }

    #[test]
    fn comments_count_toward_line_numbers() {
        let e = parse_accel_trace("# label: tap\n0,1,2,3\n10,x,2,3").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(matches!(e.kind, ParseErrorKind::BadNumber(_)));
    }

    #[test]
    fn single_accel_row_is_too_short() {
        let e = parse_accel_trace("0,1,2,3\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::TooFewSamples(1));
    }

    #[test]
    fn label_header_is_kept() {
        let tr = parse_accel_trace("# label: tap-once\n# generator: whatever\n0,0,0,0\n5,1,1,1\n").unwrap();
        assert_eq!(tr.label(), Some("tap-once"));
        assert!(tr.to_text().starts_with("# label: tap-once\n"));
    }

    #[test]
    fn nan_is_rejected() {
        let e = parse_accel_trace("0,NaN,0,0\n1,0,0,0").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::NonFinite);
    }

    #[test]
    fn prox_parsing() {
        let tr = parse_prox_trace("0,5.0\n100,0.0\n250,5.0").unwrap();
        assert_eq!(tr.len(), 3);
        let e = parse_prox_trace("0,-1.0").unwrap_err();
        assert_eq!(e, ParseError { line: 1, kind: ParseErrorKind::NegativeProximity });
        let e = parse_prox_trace("").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Empty);
        let e = parse_prox_trace("0,1,2").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::ColumnCount { expected: 2, found: 3 }));
    }

    #[test]
    fn resample_midpoint() {
        let tr = accel(&[(0, 0.0, 0.0, 0.0), (100, 10.0, 0.0, 0.0)]);
        let r = resample(&tr, 3).unwrap();
        assert_eq!(r.samples().iter().map(|s| s.t).collect::<Vec<_>>(), vec![0, 50, 100]);
        assert_eq!(r.axis_values(Axis::X), vec![0.0, 5.0, 10.0]);
    }

    #[test]
    fn resample_endpoints_only() {
        let tr = accel(&[(0, 0.0, 0.0, 0.0), (10, 10.0, 0.0, 0.0), (100, 10.0, 0.0, 0.0)]);
        let r = resample(&tr, 2).unwrap();
        assert_eq!(r.samples().iter().map(|s| s.t).collect::<Vec<_>>(), vec![0, 100]);
        assert_eq!(r.axis_values(Axis::X), vec![0.0, 10.0]);
    }

    #[test]
    fn resample_uniform_is_identity() {
        let rows: Vec<_> = (0..50).map(|k| (k * 20, (k as f64).sin(), 9.81, -(k as f64) * 0.3)).collect();
        let tr = accel(&rows);
        assert_eq!(resample(&tr, 50).unwrap(), tr);
    }

    #[test]
    fn resample_rejects_bad_sizes() {
        let tr = accel(&[(0, 0.0, 0.0, 0.0), (5, 1.0, 0.0, 0.0)]);
        assert_eq!(resample(&tr, 1), Err(ResampleError::TooFewPoints(1)));
        assert_eq!(resample(&tr, 10), Err(ResampleError::SpanTooShort { span: 5, n: 10 }));
    }

    #[test]
    fn slice_time_is_inclusive() {
        let rows: Vec<_> = (0..10).map(|k| (k * 10, k as f64, 0.0, 0.0)).collect();
        let tr = accel(&rows);
        let s = tr.slice_time(20, 50).unwrap();
        assert_eq!(s.start(), 20);
        assert_eq!(s.end(), 50);
        assert!(tr.slice_time(91, 200).is_none());
    }
}
