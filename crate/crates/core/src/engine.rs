//! Gesture-gated permission checks.
//!
//! A request for a service is looked up in the [`GestureDatabase`]. Services
//! without a policy, or with an unprotected one, are forwarded straight to the
//! platform's own permission check. Proximity-protected services are
//! forwarded only inside an unlock window; tap-protected services only when
//! the captured accelerometer window matches the service's template.

use std::fmt;

use crate::db::{GestureDatabase, GestureKind, GesturePolicy};
use crate::prox::{ProxConfig, ProxDetectorState, ProxError};
use crate::sensor::{AccelTrace, Millis};
use crate::tap::{scan_stream, GestureTemplate};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessRequest {
    pub app_id: String,
    pub service: String,
    pub t: Millis,
}

impl AccessRequest {
    pub fn new(app_id: impl Into<String>, service: impl Into<String>, t: Millis) -> Self {
        Self { app_id: app_id.into(), service: service.into(), t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Forward,
    Reject,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Forward => "FORWARD",
            Outcome::Reject => "REJECT",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "FORWARD" => Some(Outcome::Forward),
            "REJECT" => Some(Outcome::Reject),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reason {
    Unprotected,
    GestureMatched,
    WithinUnlockWindow,
    NoGesture,
    TemplateMissing,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::Unprotected => "UNPROTECTED",
            Reason::GestureMatched => "GESTURE_MATCHED",
            Reason::WithinUnlockWindow => "WITHIN_UNLOCK_WINDOW",
            Reason::NoGesture => "NO_GESTURE",
            Reason::TemplateMissing => "TEMPLATE_MISSING",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "UNPROTECTED" => Some(Reason::Unprotected),
            "GESTURE_MATCHED" => Some(Reason::GestureMatched),
            "WITHIN_UNLOCK_WINDOW" => Some(Reason::WithinUnlockWindow),
            "NO_GESTURE" => Some(Reason::NoGesture),
            "TEMPLATE_MISSING" => Some(Reason::TemplateMissing),
            _ => None,
        }
    }

    pub fn outcome(self) -> Outcome {
        match self {
            Reason::Unprotected | Reason::GestureMatched | Reason::WithinUnlockWindow => Outcome::Forward,
            Reason::NoGesture | Reason::TemplateMissing => Outcome::Reject,
        }
    }
}

/// Outcome of one check. The outcome always follows from the reason.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    reason: Reason,
    score: Option<f64>,
}

impl Decision {
    pub fn new(reason: Reason, score: Option<f64>) -> Self {
        Self { reason, score }
    }

    pub fn outcome(&self) -> Outcome {
        self.reason.outcome()
    }

    pub fn reason(&self) -> Reason {
        self.reason
    }

    pub fn score(&self) -> Option<f64> {
        self.score
    }

    pub fn is_forward(&self) -> bool {
        self.outcome() == Outcome::Forward
    }
}

/// Sensor data visible to the checker at request time.
#[derive(Debug, Clone, Copy, Default)]
pub struct SensorContext<'a> {
    pub accel: Option<&'a AccelTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    /// Also scan this many milliseconds after the request.
    pub wait_forward_ms: Option<Millis>,
    /// Window stride for the capture-buffer scan, in samples.
    pub scan_stride: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { wait_forward_ms: None, scan_stride: 1 }
    }
}

/// Cuts the part of the accelerometer stream the checker is allowed to see
/// for a request.
pub struct GestureExtractor;

impl GestureExtractor {
    pub fn capture(
        accel: &AccelTrace,
        policy: &GesturePolicy,
        req: &AccessRequest,
        opts: &CheckOptions,
    ) -> Option<AccelTrace> {
        let from = req.t.saturating_sub(policy.capture_window);
        let to = req.t + opts.wait_forward_ms.unwrap_or(0);
        accel.slice_time(from, to)
    }
}

/// Sole reader of the gesture database during checks.
pub struct GestureManager<'a> {
    db: &'a GestureDatabase,
}

impl<'a> GestureManager<'a> {
    pub fn new(db: &'a GestureDatabase) -> Self {
        Self { db }
    }

    pub fn policy(&self, service: &str) -> Option<&'a GesturePolicy> {
        self.db.policy(service)
    }

    pub fn template_for(&self, policy: &GesturePolicy) -> Option<&'a GestureTemplate> {
        policy.template_id.as_deref().and_then(|id| self.db.template(id))
    }

    /// Best template score inside the captured buffer, if any window matches.
    pub fn best_tap_match(&self, template: &GestureTemplate, captured: &AccelTrace, stride: usize) -> Option<f64> {
        scan_stream(captured, template, stride.max(1))
            .ok()?
            .into_iter()
            .map(|m| m.score)
            .fold(None, |best: Option<f64>, s| Some(best.map_or(s, |b| b.max(s))))
    }
}

pub fn check_permission(
    req: &AccessRequest,
    db: &GestureDatabase,
    sensors: &SensorContext<'_>,
    prox_state: &ProxDetectorState,
    opts: &CheckOptions,
) -> Decision {
    let manager = GestureManager::new(db);
    let Some(policy) = manager.policy(&req.service) else {
        return Decision::new(Reason::Unprotected, None);
    };
    match policy.kind {
        GestureKind::Unprotected => Decision::new(Reason::Unprotected, None),
        GestureKind::UserIndependentProx => {
            if prox_state.is_unlocked(req.t) {
                Decision::new(Reason::WithinUnlockWindow, None)
            } else {
                Decision::new(Reason::NoGesture, None)
            }
        }
        GestureKind::UserDependentTap => {
            let Some(template) = manager.template_for(policy) else {
                return Decision::new(Reason::TemplateMissing, None);
            };
            let captured = sensors.accel.and_then(|a| GestureExtractor::capture(a, policy, req, opts));
            match captured.and_then(|c| manager.best_tap_match(template, &c, opts.scan_stride)) {
                Some(score) => Decision::new(Reason::GestureMatched, Some(score)),
                None => Decision::new(Reason::NoGesture, None),
            }
        }
    }
}

/// One line of the append-only decision log.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRecord {
    pub request: AccessRequest,
    pub decision: Decision,
}

impl fmt::Display for DecisionRecord {
    /// `t_ms,app_id,service,outcome,reason,score` with an empty score when
    /// no template was involved.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},",
            self.request.t,
            self.request.app_id,
            self.request.service,
            self.decision.outcome().as_str(),
            self.decision.reason().as_str()
        )?;
        if let Some(score) = self.decision.score() {
            write!(f, "{score}")?;
        }
        Ok(())
    }
}

/// Per-device checker: owns the database, the single proximity detector and
/// the decision log. Calls must arrive in simulated-time order.
#[derive(Debug, Clone)]
pub struct PermissionChecker {
    db: GestureDatabase,
    prox_cfg: ProxConfig,
    prox: ProxDetectorState,
    opts: CheckOptions,
    log: Vec<DecisionRecord>,
}

impl PermissionChecker {
    pub fn new(db: GestureDatabase, prox_cfg: ProxConfig, opts: CheckOptions) -> Self {
        let prox = ProxDetectorState::new(&prox_cfg);
        Self { db, prox_cfg, prox, opts, log: Vec::new() }
    }

    pub fn database(&self) -> &GestureDatabase {
        &self.db
    }

    pub fn prox_state(&self) -> &ProxDetectorState {
        &self.prox
    }

    pub fn on_prox_change(&mut self, t: Millis) -> Result<(), ProxError> {
        self.prox.on_change(t, &self.prox_cfg).map(|_| ())
    }

    pub fn check(&mut self, req: AccessRequest, sensors: &SensorContext<'_>) -> Decision {
        let decision = check_permission(&req, &self.db, sensors, &self.prox, &self.opts);
        self.log.push(DecisionRecord { request: req, decision });
        decision
    }

    pub fn log(&self) -> &[DecisionRecord] {
        &self.log
    }

    pub fn log_text(&self) -> String {
        self.log.iter().map(|r| format!("{r}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::AccelSample;
    use crate::tap::{build_template, AxisRule};

    fn still(len: u64) -> AccelTrace {
        AccelTrace::new((0..len).map(|k| AccelSample::new(k * 20, 0.0, 9.81, 0.0)).collect(), None).unwrap()
    }

    fn bump_trace(center: f64) -> AccelTrace {
        let samples = (0..100)
            .map(|k| {
                let g = (-((k as f64 - center) / 4.0).powi(2)).exp();
                AccelSample::new(k * 20, 0.4 * g, 9.81 + 0.6 * g, 3.0 * g)
            })
            .collect();
        AccelTrace::new(samples, None).unwrap()
    }

    fn db_with_tap() -> GestureDatabase {
        let mut db = GestureDatabase::new();
        let t = build_template(&[bump_trace(49.0), bump_trace(50.0), bump_trace(51.0)], 100, AxisRule::Mean).unwrap();
        db.insert_template("tap", t).unwrap();
        db.register_policy(GesturePolicy::tap("nfc", "tap")).unwrap();
        db.register_policy(GesturePolicy::prox("sms")).unwrap();
        db
    }

    #[test]
    fn unknown_service_is_forwarded() {
        let db = GestureDatabase::new();
        let st = ProxDetectorState::new(&ProxConfig::default());
        let d = check_permission(
            &AccessRequest::new("app", "camera", 10),
            &db,
            &SensorContext::default(),
            &st,
            &CheckOptions::default(),
        );
        assert_eq!(d.outcome(), Outcome::Forward);
        assert_eq!(d.reason(), Reason::Unprotected);
    }

    #[test]
    fn prox_service_follows_unlock_window() {
        let db = db_with_tap();
        let cfg = ProxConfig::default();
        let mut st = ProxDetectorState::new(&cfg);
        let opts = CheckOptions::default();
        let req = AccessRequest::new("app", "sms", 1500);
        assert_eq!(check_permission(&req, &db, &SensorContext::default(), &st, &opts).reason(), Reason::NoGesture);
        for t in [0, 200, 400, 600, 800, 1000] {
            st.on_change(t, &cfg).unwrap();
        }
        let d = check_permission(&req, &db, &SensorContext::default(), &st, &opts);
        assert_eq!((d.outcome(), d.reason()), (Outcome::Forward, Reason::WithinUnlockWindow));
        let late = AccessRequest::new("app", "sms", 2000);
        assert_eq!(check_permission(&late, &db, &SensorContext::default(), &st, &opts).outcome(), Outcome::Reject);
    }

    #[test]
    fn tap_service_needs_matching_capture() {
        let db = db_with_tap();
        let st = ProxDetectorState::new(&ProxConfig::default());
        let opts = CheckOptions::default();
        let req = AccessRequest::new("app", "nfc", 1980);
        let quiet = still(100);
        let d = check_permission(&req, &db, &SensorContext { accel: Some(&quiet) }, &st, &opts);
        assert_eq!(d.reason(), Reason::NoGesture);
        let reference = db.template("tap").unwrap().reference().clone();
        let d = check_permission(&req, &db, &SensorContext { accel: Some(&reference) }, &st, &opts);
        assert_eq!(d.reason(), Reason::GestureMatched);
        assert_eq!(d.score(), Some(1.0));
        let none = check_permission(&req, &db, &SensorContext::default(), &st, &opts);
        assert_eq!(none.reason(), Reason::NoGesture);
    }

    #[test]
    fn missing_template_rejects() {
        let mut db = db_with_tap();
        db.insert_policy_unchecked(GesturePolicy::tap("wallet", "gone"));
        let st = ProxDetectorState::new(&ProxConfig::default());
        let d = check_permission(
            &AccessRequest::new("a", "wallet", 0),
            &db,
            &SensorContext::default(),
            &st,
            &CheckOptions::default(),
        );
        assert_eq!((d.outcome(), d.reason()), (Outcome::Reject, Reason::TemplateMissing));
    }

    #[test]
    fn log_line_format() {
        let rec = DecisionRecord {
            request: AccessRequest::new("game", "nfc", 500),
            decision: Decision::new(Reason::GestureMatched, Some(0.5)),
        };
        assert_eq!(rec.to_string(), "500,game,nfc,FORWARD,GESTURE_MATCHED,0.5");
        let rec = DecisionRecord {
            request: AccessRequest::new("m", "sms", 7),
            decision: Decision::new(Reason::NoGesture, None),
        };
        assert_eq!(rec.to_string(), "7,m,sms,REJECT,NO_GESTURE,");
    }

    #[test]
    fn reason_outcome_consistency() {
        for r in [
            Reason::Unprotected,
            Reason::GestureMatched,
            Reason::WithinUnlockWindow,
            Reason::NoGesture,
            Reason::TemplateMissing,
        ] {
            assert_eq!(Reason::parse(r.as_str()), Some(r));
            let fwd = matches!(r, Reason::Unprotected | Reason::GestureMatched | Reason::WithinUnlockWindow);
            assert_eq!(r.outcome() == Outcome::Forward, fwd);
        }
    }
}
