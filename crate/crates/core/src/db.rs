//! Gesture policies, stored templates, and their on-disk form.
//!
//! The database file is TOML. Templates embed their reference trace in the
//! accelerometer trace text format:
//!
//! ```toml
//! version = 1
//!
//! [policies.nfc]
//! kind = "user_dependent_tap"
//! template_id = "tap-once"
//! capture_window_ms = 2000
//!
//! [templates.tap-once]
//! n = 100
//! axis_rule = "mean"
//! threshold = 0.8123
//! created_from = 30
//! reference = """
//! 0,0.01,9.81,-0.02
//! ...
//! """
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sensor::{parse_accel_trace, AccelTrace, Millis, ParseError};
use crate::tap::{build_template, AxisRule, GestureTemplate, TapError};

pub const DB_VERSION: u32 = 1;
pub const DEFAULT_CAPTURE_WINDOW_MS: Millis = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GestureKind {
    UserDependentTap,
    UserIndependentProx,
    Unprotected,
}

impl GestureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GestureKind::UserDependentTap => "user_dependent_tap",
            GestureKind::UserIndependentProx => "user_independent_prox",
            GestureKind::Unprotected => "unprotected",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GesturePolicy {
    pub service: String,
    pub kind: GestureKind,
    pub template_id: Option<String>,
    pub capture_window: Millis,
}

impl GesturePolicy {
    pub fn tap(service: impl Into<String>, template_id: impl Into<String>) -> Self {
        Self {
            service: service.into(),
            kind: GestureKind::UserDependentTap,
            template_id: Some(template_id.into()),
            capture_window: DEFAULT_CAPTURE_WINDOW_MS,
        }
    }

    pub fn prox(service: impl Into<String>) -> Self {
        Self {
            service: service.into(),
            kind: GestureKind::UserIndependentProx,
            template_id: None,
            capture_window: DEFAULT_CAPTURE_WINDOW_MS,
        }
    }

    pub fn unprotected(service: impl Into<String>) -> Self {
        Self {
            service: service.into(),
            kind: GestureKind::Unprotected,
            template_id: None,
            capture_window: DEFAULT_CAPTURE_WINDOW_MS,
        }
    }
}

#[derive(Debug, Error)]
pub enum DbError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed database: {0}")]
    Format(String),
    #[error("unsupported database version {found} (expected {DB_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("policy for service {service:?} references missing template {template_id:?}")]
    DanglingTemplate { service: String, template_id: String },
    #[error("tap policy for service {service:?} has no template_id")]
    MissingTemplateId { service: String },
    #[error("template {id:?}: {source}")]
    Template {
        id: String,
        #[source]
        source: TapError,
    },
    #[error("template {id:?} reference trace: {source}")]
    Trace {
        id: String,
        #[source]
        source: ParseError,
    },
    #[error("template {id:?} is still used by {services:?}")]
    TemplateInUse { id: String, services: Vec<String> },
    #[error("service and template identifiers must be non-empty")]
    EmptyIdentifier,
}

/// Policies keyed by service and templates keyed by id. Every tap policy's
/// template resolves.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GestureDatabase {
    policies: BTreeMap<String, GesturePolicy>,
    templates: BTreeMap<String, GestureTemplate>,
}

impl GestureDatabase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn version(&self) -> u32 {
        DB_VERSION
    }

    pub fn policies(&self) -> impl Iterator<Item = &GesturePolicy> {
        self.policies.values()
    }

    pub fn templates(&self) -> impl Iterator<Item = (&str, &GestureTemplate)> {
        self.templates.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn policy(&self, service: &str) -> Option<&GesturePolicy> {
        self.policies.get(service)
    }

    pub fn template(&self, id: &str) -> Option<&GestureTemplate> {
        self.templates.get(id)
    }

    /// Adds or replaces the policy for `policy.service`.
    pub fn register_policy(&mut self, policy: GesturePolicy) -> Result<(), DbError> {
        if policy.service.is_empty() {
            return Err(DbError::EmptyIdentifier);
        }
        self.check_policy(&policy)?;
        self.policies.insert(policy.service.clone(), policy);
        Ok(())
    }

    /// Removes the policy for `service`; returns whether one existed.
    pub fn remove_policy(&mut self, service: &str) -> bool {
        self.policies.remove(service).is_some()
    }

    /// Stores a template under `id`, replacing any previous one.
    pub fn insert_template(&mut self, id: impl Into<String>, template: GestureTemplate) -> Result<(), DbError> {
        let id = id.into();
        if id.is_empty() {
            return Err(DbError::EmptyIdentifier);
        }
        self.templates.insert(id, template);
        Ok(())
    }

    /// Builds a template from training traces and stores it under `id`.
    pub fn create_template(
        &mut self,
        id: &str,
        traces: &[AccelTrace],
        n: usize,
        rule: AxisRule,
    ) -> Result<&GestureTemplate, DbError> {
        let template =
            build_template(traces, n, rule).map_err(|source| DbError::Template { id: id.to_string(), source })?;
        self.insert_template(id, template)?;
        Ok(&self.templates[id])
    }

    /// Removes a template that no policy references; returns whether it existed.
    pub fn remove_template(&mut self, id: &str) -> Result<bool, DbError> {
        let services: Vec<String> = self
            .policies
            .values()
            .filter(|p| p.template_id.as_deref() == Some(id))
            .map(|p| p.service.clone())
            .collect();
        if !services.is_empty() {
            return Err(DbError::TemplateInUse { id: id.to_string(), services });
        }
        Ok(self.templates.remove(id).is_some())
    }

    #[cfg(test)]
    pub(crate) fn insert_policy_unchecked(&mut self, policy: GesturePolicy) {
        self.policies.insert(policy.service.clone(), policy);
    }

    fn check_policy(&self, policy: &GesturePolicy) -> Result<(), DbError> {
        match (&policy.kind, &policy.template_id) {
            (GestureKind::UserDependentTap, None) => {
                Err(DbError::MissingTemplateId { service: policy.service.clone() })
            }
            (_, Some(id)) if !self.templates.contains_key(id) => {
                Err(DbError::DanglingTemplate { service: policy.service.clone(), template_id: id.clone() })
            }
            _ => Ok(()),
        }
    }

    pub fn validate(&self) -> Result<(), DbError> {
        self.policies.values().try_for_each(|p| self.check_policy(p))
    }

    pub fn to_toml(&self) -> String {
        let file = DbFile {
            version: DB_VERSION,
            policies: self
                .policies
                .iter()
                .map(|(k, p)| {
                    (
                        k.clone(),
                        PolicyFile {
                            kind: p.kind,
                            template_id: p.template_id.clone(),
                            capture_window_ms: p.capture_window,
                        },
                    )
                })
                .collect(),
            templates: self
                .templates
                .iter()
                .map(|(k, t)| {
                    (
                        k.clone(),
                        TemplateFile {
                            n: t.n(),
                            axis_rule: t.axis_rule().as_str().to_string(),
                            threshold: t.threshold(),
                            created_from: t.created_from(),
                            reference: t.reference().to_text(),
                        },
                    )
                })
                .collect(),
        };
        toml::to_string(&file).expect("database serializes to TOML")
    }

    pub fn from_toml(text: &str) -> Result<Self, DbError> {
        let version: VersionProbe = toml::from_str(text).map_err(|e| DbError::Format(e.to_string()))?;
        if version.version != DB_VERSION {
            return Err(DbError::UnsupportedVersion { found: version.version });
        }
        let file: DbFile = toml::from_str(text).map_err(|e| DbError::Format(e.to_string()))?;
        let mut db = GestureDatabase::new();
        for (id, t) in file.templates {
            if id.is_empty() {
                return Err(DbError::EmptyIdentifier);
            }
            let reference =
                parse_accel_trace(&t.reference).map_err(|source| DbError::Trace { id: id.clone(), source })?;
            let rule: AxisRule = t.axis_rule.parse().map_err(DbError::Format)?;
            let template = GestureTemplate::from_parts(reference, t.n, t.threshold, rule, t.created_from)
                .map_err(|source| DbError::Template { id: id.clone(), source })?;
            db.templates.insert(id, template);
        }
        for (service, p) in file.policies {
            if service.is_empty() {
                return Err(DbError::EmptyIdentifier);
            }
            let policy = GesturePolicy {
                service: service.clone(),
                kind: p.kind,
                template_id: p.template_id,
                capture_window: p.capture_window_ms,
            };
            db.check_policy(&policy)?;
            db.policies.insert(service, policy);
        }
        Ok(db)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DbError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| DbError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DbError> {
        let path = path.as_ref();
        fs::write(path, self.to_toml()).map_err(|source| DbError::Io { path: path.to_path_buf(), source })
    }
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

#[derive(Serialize, Deserialize)]
struct DbFile {
    version: u32,
    #[serde(default)]
    policies: BTreeMap<String, PolicyFile>,
    #[serde(default)]
    templates: BTreeMap<String, TemplateFile>,
}

#[derive(Serialize, Deserialize)]
struct PolicyFile {
    kind: GestureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    template_id: Option<String>,
    #[serde(default = "default_capture_window")]
    capture_window_ms: Millis,
}

fn default_capture_window() -> Millis {
    DEFAULT_CAPTURE_WINDOW_MS
}

#[derive(Serialize, Deserialize)]
struct TemplateFile {
    n: usize,
    axis_rule: String,
    threshold: f64,
    created_from: usize,
    reference: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::AccelSample;

    fn small_template() -> GestureTemplate {
        let samples = (0..10)
            .map(|k| AccelSample::new(k * 20, (k as f64 * 0.7).sin(), 9.81 + 0.1 * k as f64, -0.25 * k as f64))
            .collect();
        let trace = AccelTrace::new(samples, None).unwrap();
        GestureTemplate::from_parts(trace, 10, 0.625, AxisRule::Mean, 30).unwrap()
    }

    #[test]
    fn register_then_lookup() {
        let mut db = GestureDatabase::new();
        db.insert_template("tap", small_template()).unwrap();
        db.register_policy(GesturePolicy::tap("nfc", "tap")).unwrap();
        assert_eq!(db.policy("nfc").unwrap().template_id.as_deref(), Some("tap"));
        db.register_policy(GesturePolicy::prox("nfc")).unwrap();
        assert_eq!(db.policy("nfc").unwrap().kind, GestureKind::UserIndependentProx);
    }

    #[test]
    fn remove_absent_policy_is_noop() {
        let mut db = GestureDatabase::new();
        assert!(!db.remove_policy("sms"));
        assert_eq!(db, GestureDatabase::new());
    }

    #[test]
    fn dangling_template_rejected() {
        let mut db = GestureDatabase::new();
        let e = db.register_policy(GesturePolicy::tap("nfc", "nope")).unwrap_err();
        assert!(matches!(e, DbError::DanglingTemplate { ref service, .. } if service == "nfc"));
        let mut missing = GesturePolicy::tap("nfc", "x");
        missing.template_id = None;
        assert!(matches!(db.register_policy(missing), Err(DbError::MissingTemplateId { .. })));
    }

    #[test]
    fn template_in_use_cannot_be_removed() {
        let mut db = GestureDatabase::new();
        db.insert_template("tap", small_template()).unwrap();
        db.register_policy(GesturePolicy::tap("nfc", "tap")).unwrap();
        assert!(matches!(db.remove_template("tap"), Err(DbError::TemplateInUse { .. })));
        db.remove_policy("nfc");
        assert!(db.remove_template("tap").unwrap());
        assert!(!db.remove_template("tap").unwrap());
    }

    #[test]
    fn create_with_one_trace_fails() {
        let mut db = GestureDatabase::new();
        let t = small_template().reference().clone();
        let e = db.create_template("tap", &[t], 10, AxisRule::Mean).unwrap_err();
        assert!(matches!(e, DbError::Template { source: TapError::TooFewTraces(1), .. }));
    }

    #[test]
    fn toml_round_trip() {
        let mut db = GestureDatabase::new();
        db.insert_template("tap-once", small_template()).unwrap();
        db.register_policy(GesturePolicy::tap("nfc", "tap-once")).unwrap();
        db.register_policy(GesturePolicy::prox("sms")).unwrap();
        db.register_policy(GesturePolicy::unprotected("web")).unwrap();
        let text = db.to_toml();
        assert_eq!(GestureDatabase::from_toml(&text).unwrap(), db);
    }

    #[test]
    fn empty_policies_load() {
        let db = GestureDatabase::from_toml("version = 1\n").unwrap();
        assert_eq!(db, GestureDatabase::new());
    }

    #[test]
    fn wrong_version_rejected() {
        let e = GestureDatabase::from_toml("version = 7\n").unwrap_err();
        assert!(matches!(e, DbError::UnsupportedVersion { found: 7 }));
    }

    #[test]
    fn dangling_file_names_service() {
        let text = "version = 1\n[policies.nfc]\nkind = \"user_dependent_tap\"\ntemplate_id = \"gone\"\n";
        let e = GestureDatabase::from_toml(text).unwrap_err();
        assert!(e.to_string().contains("\"nfc\""), "{e}");
    }

    #[test]
    fn missing_file_is_io_error() {
        let e = GestureDatabase::load("/nonexistent/dir/db.toml").unwrap_err();
        assert!(matches!(e, DbError::Io { .. }));
    }
}
