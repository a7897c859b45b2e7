//! Gesture-gated permission checks for sensitive phone services.
//!
//! Services such as NFC or SMS are protected by a human gesture: a phone tap
//! recognised from accelerometer data against a trained template, or a
//! hand wave / finger tap / rub seen as rapid proximity sensor changes. A
//! request arriving without the gesture is rejected before the platform's own
//! permission check ever sees it.
//!
//! - [`sensor`]: trace types, text formats, resampling
//! - [`tap`]: template correlation, thresholds, stream scanning
//! - [`prox`]: cyclic-buffer proximity gesture detector
//! - [`db`] and [`engine`]: policies, templates, permission decisions
//! - [`harness`]: synthetic corpora, evaluation tables, scenario replay

pub mod db;
pub mod engine;
pub mod harness;
pub mod prox;
pub mod sensor;
pub mod tap;

pub use db::{DbError, GestureDatabase, GestureKind, GesturePolicy};
pub use engine::{
    check_permission, AccessRequest, CheckOptions, Decision, DecisionRecord, Outcome, PermissionChecker, Reason,
    SensorContext,
};
pub use prox::{ProxConfig, ProxDetectorState, ProxError, UnlockWindow};
pub use sensor::{AccelSample, AccelTrace, Millis, ParseError, ProxSample, ProxTrace};
pub use tap::{AxisRule, GestureTemplate, MatchResult, TapError};
