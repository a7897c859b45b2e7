//! Scenario replay: sensor streams plus timed access requests, run through
//! the detectors and the permission checker.
//!
//! Scenario files are TOML. Stream paths are relative to the scenario file;
//! requests are CSV lines `t_ms,app_id,service[,expected_outcome[,expected_reason]]`.
//!
//! ```toml
//! label = "legit-sms"
//! prox = "prox.csv"
//! requests = """
//! 1900,messenger,sms,FORWARD,WITHIN_UNLOCK_WINDOW
//! """
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::db::{DbError, GestureDatabase, GesturePolicy};
use crate::engine::{AccessRequest, CheckOptions, DecisionRecord, Outcome, PermissionChecker, Reason, SensorContext};
use crate::harness::eval::{Cell, EvalReport};
use crate::harness::gen::{
    derive_seed, embed_gesture, gen_activity_stream, gen_prox_stream, gen_tap_trace, Activity, GenError, GenParams,
    ProxKind, PROX_FAR_CM, PROX_NEAR_CM,
};
use crate::prox::{detect_changes, ProxConfig, ProxError, DEFAULT_EPSILON_CM};
use crate::sensor::{parse_accel_trace, parse_prox_trace, AccelTrace, Millis, ParseError, ProxSample, ProxTrace};
use crate::tap::AxisRule;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Format(String),
    #[error("request line {line}: {message}")]
    Request { line: usize, message: String },
    #[error("{path}: {source}")]
    Stream {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error("request at {t} ms lies outside the recorded streams")]
    OutsideStreams { t: Millis },
    #[error(transparent)]
    Prox(#[from] ProxError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Db(#[from] DbError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Expected {
    pub outcome: Outcome,
    pub reason: Option<Reason>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioRequest {
    pub request: AccessRequest,
    pub expected: Option<Expected>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub accel: Option<AccelTrace>,
    pub prox: Option<ProxTrace>,
    pub requests: Vec<ScenarioRequest>,
}

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    accel: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prox: Option<String>,
    requests: String,
}

pub fn parse_requests(text: &str) -> Result<Vec<ScenarioRequest>, ScenarioError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| ScenarioError::Request { line: i + 1, message };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !(3..=5).contains(&fields.len()) {
            return Err(bad(format!("expected 3 to 5 fields, found {}", fields.len())));
        }
        let t = fields[0].parse::<Millis>().map_err(|_| bad(format!("invalid time {:?}", fields[0])))?;
        if fields[1].is_empty() || fields[2].is_empty() {
            return Err(bad("app_id and service must be non-empty".into()));
        }
        let expected = match fields.get(3) {
            None => None,
            Some(o) => {
                let outcome = Outcome::parse(o).ok_or_else(|| bad(format!("unknown outcome {o:?}")))?;
                let reason = match fields.get(4) {
                    None => None,
                    Some(r) => Some(Reason::parse(r).ok_or_else(|| bad(format!("unknown reason {r:?}")))?),
                };
                Some(Expected { outcome, reason })
            }
        };
        out.push(ScenarioRequest { request: AccessRequest::new(fields[1], fields[2], t), expected });
    }
    Ok(out)
}

fn requests_text(requests: &[ScenarioRequest]) -> String {
    let mut out = String::new();
    for r in requests {
        let _ = write!(out, "{},{},{}", r.request.t, r.request.app_id, r.request.service);
        if let Some(e) = r.expected {
            let _ = write!(out, ",{}", e.outcome.as_str());
            if let Some(reason) = e.reason {
                let _ = write!(out, ",{}", reason.as_str());
            }
        }
        out.push('\n');
    }
    out
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
        let file: ScenarioFile = toml::from_str(&text).map_err(|e| ScenarioError::Format(e.to_string()))?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let read = |rel: &str| {
            let p = dir.join(rel);
            fs::read_to_string(&p).map(|t| (p.clone(), t)).map_err(|source| ScenarioError::Io { path: p, source })
        };
        let accel = match &file.accel {
            Some(rel) => {
                let (p, t) = read(rel)?;
                Some(parse_accel_trace(&t).map_err(|source| ScenarioError::Stream { path: p, source })?)
            }
            None => None,
        };
        let prox = match &file.prox {
            Some(rel) => {
                let (p, t) = read(rel)?;
                Some(parse_prox_trace(&t).map_err(|source| ScenarioError::Stream { path: p, source })?)
            }
            None => None,
        };
        let scenario = Scenario { label: file.label, accel, prox, requests: parse_requests(&file.requests)? };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Writes `scenario.toml` plus `accel.csv` / `prox.csv` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<PathBuf, ScenarioError> {
        let dir = dir.as_ref();
        let write = |name: &str, text: String| {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|source| ScenarioError::Io { path: p, source })
        };
        fs::create_dir_all(dir).map_err(|source| ScenarioError::Io { path: dir.to_path_buf(), source })?;
        if let Some(a) = &self.accel {
            write("accel.csv", a.to_text())?;
        }
        if let Some(p) = &self.prox {
            write("prox.csv", p.to_text())?;
        }
        let file = ScenarioFile {
            label: self.label.clone(),
            accel: self.accel.as_ref().map(|_| "accel.csv".into()),
            prox: self.prox.as_ref().map(|_| "prox.csv".into()),
            requests: requests_text(&self.requests),
        };
        let text = toml::to_string(&file).map_err(|e| ScenarioError::Format(e.to_string()))?;
        write("scenario.toml", text)?;
        Ok(dir.join("scenario.toml"))
    }

    /// Every request must fall within the span of the recorded streams.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let end =
            [self.accel.as_ref().map(|a| a.end()), self.prox.as_ref().map(|p| p.end())].into_iter().flatten().max();
        if let Some(end) = end {
            if let Some(r) = self.requests.iter().find(|r| r.request.t > end) {
                return Err(ScenarioError::OutsideStreams { t: r.request.t });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayConfig {
    pub prox: ProxConfig,
    pub epsilon: f64,
    pub check: CheckOptions,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        Self { prox: ProxConfig::default(), epsilon: DEFAULT_EPSILON_CM, check: CheckOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub index: usize,
    pub record: DecisionRecord,
    pub expected: Expected,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub log: Vec<DecisionRecord>,
    pub mismatches: Vec<Mismatch>,
    /// Forward rate per service.
    pub report: EvalReport,
}

impl ScenarioOutcome {
    pub fn log_text(&self) -> String {
        self.log.iter().map(|r| format!("{r}\n")).collect()
    }

    pub fn forwards(&self) -> usize {
        self.log.iter().filter(|r| r.decision.is_forward()).count()
    }

    pub fn rejects(&self) -> usize {
        self.log.len() - self.forwards()
    }
}

/// Replays the scenario in request-time order. Proximity changes at or
/// before a request's time reach the detector before the request is checked.
pub fn run_scenario(s: &Scenario, db: &GestureDatabase, cfg: &ReplayConfig) -> Result<ScenarioOutcome, ScenarioError> {
    let started = Instant::now();
    s.validate()?;
    cfg.prox.validate()?;
    let mut checker = PermissionChecker::new(db.clone(), cfg.prox, cfg.check);
    let changes = s.prox.as_ref().map(|p| detect_changes(p, cfg.epsilon)).unwrap_or_default();
    let mut next_change = 0;
    let mut order: Vec<usize> = (0..s.requests.len()).collect();
    order.sort_by_key(|&i| s.requests[i].request.t);

    let sensors = SensorContext { accel: s.accel.as_ref() };
    let mut mismatches = Vec::new();
    for i in order {
        let req = &s.requests[i];
        while next_change < changes.len() && changes[next_change] <= req.request.t {
            checker.on_prox_change(changes[next_change])?;
            next_change += 1;
        }
        let decision = checker.check(req.request.clone(), &sensors);
        if let Some(exp) = req.expected {
            let ok = decision.outcome() == exp.outcome && exp.reason.is_none_or(|r| r == decision.reason());
            if !ok {
                let record = checker.log().last().expect("just logged").clone();
                mismatches.push(Mismatch { index: i, record, expected: exp });
            }
        }
    }
    let log = checker.log().to_vec();

    let mut services: Vec<String> = log.iter().map(|r| r.request.service.clone()).collect();
    services.sort();
    services.dedup();
    let cells = services
        .iter()
        .map(|svc| {
            let of_svc: Vec<_> = log.iter().filter(|r| &r.request.service == svc).collect();
            Cell {
                gesture: svc.clone(),
                activity: s.label.clone(),
                matches: of_svc.iter().filter(|r| r.decision.is_forward()).count(),
                total: of_svc.len(),
            }
        })
        .collect();
    let report = EvalReport {
        title: format!("Scenario {} (forward rate per service)", s.label),
        rows: services,
        columns: vec![s.label.clone()],
        positive_column: Vec::new(),
        negative_columns: Vec::new(),
        cells,
        runtime: started.elapsed(),
    };
    Ok(ScenarioOutcome { log, mismatches, report })
}

/// Built-in scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinScenario {
    /// Hidden app polls the NFC reader every 500 ms for a minute; nobody touches the phone.
    Pickpocket,
    /// User taps the phone on a poster; the reader request arrives as the tap ends.
    LegitNfc,
    /// User waves over the sensor, then the messaging app sends.
    LegitSms,
}

impl BuiltinScenario {
    pub const ALL: [BuiltinScenario; 3] =
        [BuiltinScenario::Pickpocket, BuiltinScenario::LegitNfc, BuiltinScenario::LegitSms];

    pub fn slug(self) -> &'static str {
        match self {
            BuiltinScenario::Pickpocket => "pickpocket",
            BuiltinScenario::LegitNfc => "legit-nfc",
            BuiltinScenario::LegitSms => "legit-sms",
        }
    }
}

pub const TAP_TEMPLATE_ID: &str = "tap-once";
const SCENARIO_TAG: u64 = 0x7363_656e;

/// Database used by the built-in scenarios: NFC gated by a trained
/// tap-once template, SMS gated by proximity gestures, web unprotected.
pub fn builtin_database(p: &GenParams) -> Result<GestureDatabase, ScenarioError> {
    let training: Vec<AccelTrace> = (0..30)
        .map(|i| gen_tap_trace(&p.with_seed(derive_seed(p.rng_seed, SCENARIO_TAG, i)).with_taps(1)))
        .collect::<Result<_, _>>()?;
    let mut db = GestureDatabase::new();
    db.create_template(TAP_TEMPLATE_ID, &training, 100, AxisRule::Mean)?;
    db.register_policy(GesturePolicy::tap("nfc", TAP_TEMPLATE_ID))?;
    db.register_policy(GesturePolicy::prox("sms"))?;
    db.register_policy(GesturePolicy::unprotected("web"))?;
    Ok(db)
}

fn flat_prox(duration: Millis, label: &str) -> ProxTrace {
    ProxTrace::new(vec![ProxSample::new(0, PROX_FAR_CM), ProxSample::new(duration, PROX_FAR_CM)], Some(label.into()))
        .expect("two increasing samples")
}

fn expect(app: &str, service: &str, t: Millis, outcome: Outcome, reason: Reason) -> ScenarioRequest {
    ScenarioRequest {
        request: AccessRequest::new(app, service, t),
        expected: Some(Expected { outcome, reason: Some(reason) }),
    }
}

pub fn builtin_scenario(which: BuiltinScenario, p: &GenParams) -> Result<Scenario, ScenarioError> {
    let seed = |i| p.with_seed(derive_seed(p.rng_seed, SCENARIO_TAG + 1, i));
    let s = match which {
        BuiltinScenario::Pickpocket => {
            let duration = 60_000;
            let accel = gen_activity_stream(Activity::Still, duration + 20, &seed(0))?;
            let requests =
                (1..=120).map(|k| expect("tictactoe", "nfc", k * 500, Outcome::Reject, Reason::NoGesture)).collect();
            Scenario {
                label: which.slug().into(),
                accel: Some(accel),
                prox: Some(flat_prox(duration, "idle")),
                requests,
            }
        }
        BuiltinScenario::LegitNfc => {
            let stream = gen_activity_stream(Activity::Still, 10_000, &seed(1))?;
            let tap = gen_tap_trace(&seed(2).with_taps(1))?;
            let accel = embed_gesture(&stream, &tap, 5_000).expect("tap fits inside the stream");
            let requests = vec![
                expect("tictactoe", "nfc", 2_500, Outcome::Reject, Reason::NoGesture),
                expect("reader", "nfc", 5_000, Outcome::Forward, Reason::GestureMatched),
                expect("tictactoe", "nfc", 8_000, Outcome::Reject, Reason::NoGesture),
                expect("browser", "web", 8_000, Outcome::Forward, Reason::Unprotected),
            ];
            Scenario { label: which.slug().into(), accel: Some(accel), prox: Some(flat_prox(10_000, "idle")), requests }
        }
        BuiltinScenario::LegitSms => {
            let wave = gen_prox_stream(ProxKind::Wave, &seed(3))?;
            let wave = force_full_wave(wave, p);
            let changes = detect_changes(&wave, DEFAULT_EPSILON_CM);
            let unlock_at = first_unlock(&changes).expect("full wave unlocks");
            let requests = vec![
                expect("spyware", "sms", 100, Outcome::Reject, Reason::NoGesture),
                expect("messenger", "sms", unlock_at + 500, Outcome::Forward, Reason::WithinUnlockWindow),
                expect("spyware", "sms", unlock_at + 2_500, Outcome::Reject, Reason::NoGesture),
            ];
            let wave = extend_prox(wave, unlock_at + 4_000);
            let accel = gen_activity_stream(Activity::Still, wave.end() + 20, &seed(4))?;
            Scenario { label: which.slug().into(), accel: Some(accel), prox: Some(wave), requests }
        }
    };
    Ok(s)
}

/// Keeps a generated wave if it unlocks; otherwise substitutes a plain
/// three-pass wave at the configured transition period.
fn force_full_wave(wave: ProxTrace, p: &GenParams) -> ProxTrace {
    if first_unlock(&detect_changes(&wave, DEFAULT_EPSILON_CM)).is_some() {
        return wave;
    }
    let step = p.prox_transition_period_ms.round() as Millis;
    let mut samples = vec![ProxSample::new(0, PROX_FAR_CM)];
    for k in 1..=6u64 {
        samples.push(ProxSample::new(500 + k * step, if k % 2 == 1 { PROX_NEAR_CM } else { PROX_FAR_CM }));
    }
    samples.push(ProxSample::new(4_000, PROX_FAR_CM));
    ProxTrace::new(samples, Some("wave".into())).expect("increasing")
}

/// Holds the last reading until `end`.
fn extend_prox(trace: ProxTrace, end: Millis) -> ProxTrace {
    if trace.end() >= end {
        return trace;
    }
    let mut samples = trace.samples().to_vec();
    let last = samples[samples.len() - 1].value;
    samples.push(ProxSample::new(end, last));
    ProxTrace::new(samples, trace.label().map(str::to_string)).expect("extended past the end")
}

fn first_unlock(changes: &[Millis]) -> Option<Millis> {
    let cfg = ProxConfig::default();
    let mut st = crate::prox::ProxDetectorState::new(&cfg);
    changes.iter().find_map(|&t| st.on_change(t, &cfg).ok().flatten().map(|w| w.start))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_lines() {
        let r = parse_requests("# header\n500,app,nfc\n600,app,sms,FORWARD\n700,app,sms,reject,NO_GESTURE\n").unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r[0].expected, None);
        assert_eq!(r[1].expected, Some(Expected { outcome: Outcome::Forward, reason: None }));
        assert_eq!(r[2].expected, Some(Expected { outcome: Outcome::Reject, reason: Some(Reason::NoGesture) }));
        assert!(matches!(parse_requests("x,app,nfc"), Err(ScenarioError::Request { line: 1, .. })));
        assert!(matches!(parse_requests("1,app,nfc,MAYBE"), Err(ScenarioError::Request { .. })));
        assert!(matches!(parse_requests("1,app"), Err(ScenarioError::Request { .. })));
    }

    #[test]
    fn request_beyond_streams_rejected() {
        let s = Scenario {
            label: "x".into(),
            accel: None,
            prox: Some(flat_prox(1000, "idle")),
            requests: parse_requests("5000,a,sms").unwrap(),
        };
        assert!(matches!(s.validate(), Err(ScenarioError::OutsideStreams { t: 5000 })));
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let s = builtin_scenario(BuiltinScenario::LegitSms, &GenParams::default()).unwrap();
        let path = s.save(dir.path()).unwrap();
        assert_eq!(Scenario::load(path).unwrap(), s);
    }
}
