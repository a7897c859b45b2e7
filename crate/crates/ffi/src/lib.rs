//! C ABI over `twr-core`.
//!
//! Every fallible function returns a [`TwrStatus`]. On failure a message
//! describing the error is available from [`twr_last_error`] on the same
//! thread until the next failing call. Handles are opaque; each `*_new` or
//! `*_load` has a matching `*_free`. Strings are NUL-terminated UTF-8.
//! Traces are passed in the same text formats the command-line tool reads.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use twr_core::db::{DbError, GestureDatabase, GestureKind, GesturePolicy};
use twr_core::engine::{check_permission, AccessRequest, CheckOptions, Outcome, Reason, SensorContext};
use twr_core::prox::{ProxConfig, ProxDetectorState};
use twr_core::sensor::{parse_accel_trace, AccelTrace};
use twr_core::tap::{match_trace, pearson, AxisRule};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    IoError = 4,
    IntegrityError = 5,
    NotFound = 6,
    TemplateError = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwrAxisRule {
    Mean = 0,
    Min = 1,
    AllAxes = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwrGestureKind {
    UserDependentTap = 0,
    UserIndependentProx = 1,
    Unprotected = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwrOutcome {
    Forward = 0,
    Reject = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwrReason {
    GestureMatched = 0,
    WithinUnlockWindow = 1,
    NoGesture = 2,
    TemplateMissing = 3,
    Unprotected = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwrMatch {
    pub score: f64,
    pub matched: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwrDecision {
    pub outcome: TwrOutcome,
    pub reason: TwrReason,
    /// False when no template score applies; `score` is then 0.
    pub has_score: bool,
    pub score: f64,
}

/// Half-open unlock window `[start_ms, end_ms)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwrUnlockWindow {
    pub start_ms: u64,
    pub end_ms: u64,
}

/// Policies and templates.
pub struct TwrDatabase {
    inner: GestureDatabase,
}

/// One proximity gesture detector with its configuration.
pub struct TwrProxDetector {
    cfg: ProxConfig,
    state: ProxDetectorState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(TwrStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(TwrStatus::NullPointer, format!("{what} is null"))
    }
}

impl From<DbError> for Failure {
    fn from(e: DbError) -> Self {
        let status = match e {
            DbError::Io { .. } => TwrStatus::IoError,
            DbError::Format(_) | DbError::UnsupportedVersion { .. } | DbError::Trace { .. } => TwrStatus::ParseError,
            DbError::Template { .. } => TwrStatus::TemplateError,
            DbError::EmptyIdentifier => TwrStatus::InvalidArgument,
            _ => TwrStatus::IntegrityError,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TwrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TwrStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            TwrStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(TwrStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn accel_arg(p: *const c_char, what: &str) -> Result<AccelTrace, Failure> {
    parse_accel_trace(str_arg(p, what)?).map_err(|e| Failure(TwrStatus::ParseError, format!("{what}: {e}")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(what))
}

unsafe fn db_ref<'a>(db: *const TwrDatabase) -> Result<&'a TwrDatabase, Failure> {
    db.as_ref().ok_or_else(|| Failure::null("database"))
}

unsafe fn db_mut<'a>(db: *mut TwrDatabase) -> Result<&'a mut TwrDatabase, Failure> {
    db.as_mut().ok_or_else(|| Failure::null("database"))
}

/// Message for the most recent failure on this thread, or NULL if none.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn twr_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Pearson correlation of two series of `len` values.
///
/// # Safety
/// `a` and `b` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn twr_pearson(a: *const f64, b: *const f64, len: usize, out: *mut f64) -> TwrStatus {
    guard(|| {
        if a.is_null() || b.is_null() {
            return Err(Failure::null("series"));
        }
        if len == 0 {
            return Err(Failure(TwrStatus::InvalidArgument, "series are empty".into()));
        }
        let (xs, ys) = (std::slice::from_raw_parts(a, len), std::slice::from_raw_parts(b, len));
        *out_arg(out, "out")? = pearson(xs, ys);
        Ok(())
    })
}

/// New empty database. Never returns NULL.
#[no_mangle]
pub extern "C" fn twr_database_new() -> *mut TwrDatabase {
    Box::into_raw(Box::new(TwrDatabase { inner: GestureDatabase::new() }))
}

/// # Safety
/// `path` must be a valid string; `out` must be writable. On success `*out`
/// receives a handle to release with [`twr_database_free`].
#[no_mangle]
pub unsafe extern "C" fn twr_database_load(path: *const c_char, out: *mut *mut TwrDatabase) -> TwrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inner = GestureDatabase::load(str_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(TwrDatabase { inner }));
        Ok(())
    })
}

/// # Safety
/// `db` must be a live handle and `path` a valid string.
#[no_mangle]
pub unsafe extern "C" fn twr_database_save(db: *const TwrDatabase, path: *const c_char) -> TwrStatus {
    guard(|| Ok(db_ref(db)?.inner.save(str_arg(path, "path")?)?))
}

/// # Safety
/// `db` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn twr_database_free(db: *mut TwrDatabase) {
    if !db.is_null() {
        drop(Box::from_raw(db));
    }
}

/// Trains a template from `count` accelerometer trace texts and stores it
/// under `id`, replacing any previous template with that id.
///
/// # Safety
/// `traces` must point to `count` valid strings; `threshold_out` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn twr_database_create_template(
    db: *mut TwrDatabase,
    id: *const c_char,
    traces: *const *const c_char,
    count: usize,
    n: usize,
    rule: TwrAxisRule,
    threshold_out: *mut f64,
) -> TwrStatus {
    guard(|| {
        let db = db_mut(db)?;
        let id = str_arg(id, "id")?;
        if traces.is_null() {
            return Err(Failure::null("traces"));
        }
        let parsed = std::slice::from_raw_parts(traces, count)
            .iter()
            .enumerate()
            .map(|(i, &p)| accel_arg(p, &format!("trace {i}")))
            .collect::<Result<Vec<_>, _>>()?;
        let rule = match rule {
            TwrAxisRule::Mean => AxisRule::Mean,
            TwrAxisRule::Min => AxisRule::Min,
            TwrAxisRule::AllAxes => AxisRule::AllAxes,
        };
        let threshold = db.inner.create_template(id, &parsed, n, rule)?.threshold();
        if let Some(t) = threshold_out.as_mut() {
            *t = threshold;
        }
        Ok(())
    })
}

/// Adds or replaces the policy for `service`. `template_id` may be NULL for
/// non-tap kinds.
///
/// # Safety
/// Pointers must be valid as documented.
#[no_mangle]
pub unsafe extern "C" fn twr_database_add_policy(
    db: *mut TwrDatabase,
    service: *const c_char,
    kind: TwrGestureKind,
    template_id: *const c_char,
    capture_window_ms: u64,
) -> TwrStatus {
    guard(|| {
        let db = db_mut(db)?;
        let kind = match kind {
            TwrGestureKind::UserDependentTap => GestureKind::UserDependentTap,
            TwrGestureKind::UserIndependentProx => GestureKind::UserIndependentProx,
            TwrGestureKind::Unprotected => GestureKind::Unprotected,
        };
        let policy = GesturePolicy {
            service: str_arg(service, "service")?.to_string(),
            kind,
            template_id: opt_str_arg(template_id, "template_id")?.map(str::to_string),
            capture_window: capture_window_ms,
        };
        Ok(db.inner.register_policy(policy)?)
    })
}

/// # Safety
/// Pointers must be valid; `removed` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn twr_database_remove_policy(
    db: *mut TwrDatabase,
    service: *const c_char,
    removed: *mut bool,
) -> TwrStatus {
    guard(|| {
        let r = db_mut(db)?.inner.remove_policy(str_arg(service, "service")?);
        if let Some(out) = removed.as_mut() {
            *out = r;
        }
        Ok(())
    })
}

/// Fails with `INTEGRITY_ERROR` while a policy still refers to the template.
///
/// # Safety
/// Pointers must be valid; `removed` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn twr_database_remove_template(
    db: *mut TwrDatabase,
    id: *const c_char,
    removed: *mut bool,
) -> TwrStatus {
    guard(|| {
        let r = db_mut(db)?.inner.remove_template(str_arg(id, "id")?)?;
        if let Some(out) = removed.as_mut() {
            *out = r;
        }
        Ok(())
    })
}

/// Number of registered policies.
///
/// # Safety
/// `db` must be a live handle or NULL (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn twr_database_policy_count(db: *const TwrDatabase) -> usize {
    db.as_ref().map_or(0, |d| d.inner.policies().count())
}

/// Matches a whole accelerometer trace against template `id`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn twr_match(
    db: *const TwrDatabase,
    id: *const c_char,
    trace: *const c_char,
    out: *mut TwrMatch,
) -> TwrStatus {
    guard(|| {
        let db = db_ref(db)?;
        let id = str_arg(id, "id")?;
        let template =
            db.inner.template(id).ok_or_else(|| Failure(TwrStatus::NotFound, format!("unknown template {id:?}")))?;
        let trace = accel_arg(trace, "trace")?;
        let r = match_trace(&trace, template).map_err(|e| Failure(TwrStatus::TemplateError, e.to_string()))?;
        *out_arg(out, "out")? = TwrMatch { score: r.score, matched: r.matched };
        Ok(())
    })
}

/// New detector. Pass zeros to use the defaults (6 changes, 1500 ms, 1000 ms).
///
/// # Safety
/// `out` must be writable; on success it receives a handle to release with
/// [`twr_prox_detector_free`].
#[no_mangle]
pub unsafe extern "C" fn twr_prox_detector_new(
    wind_sz: usize,
    wave_time_limit_ms: u64,
    unlock_time_frame_ms: u64,
    out: *mut *mut TwrProxDetector,
) -> TwrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let d = ProxConfig::default();
        let or = |v: u64, dflt: u64| if v == 0 { dflt } else { v };
        let cfg = ProxConfig {
            wind_sz: if wind_sz == 0 { d.wind_sz } else { wind_sz },
            wave_time_limit: or(wave_time_limit_ms, d.wave_time_limit),
            unlock_time_frame: or(unlock_time_frame_ms, d.unlock_time_frame),
        };
        cfg.validate().map_err(|e| Failure(TwrStatus::InvalidArgument, e.to_string()))?;
        *out = Box::into_raw(Box::new(TwrProxDetector { cfg, state: ProxDetectorState::new(&cfg) }));
        Ok(())
    })
}

/// # Safety
/// `det` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn twr_prox_detector_free(det: *mut TwrProxDetector) {
    if !det.is_null() {
        drop(Box::from_raw(det));
    }
}

/// Feeds one proximity change at `t_ms`. When it opens or extends an unlock
/// window, `*unlocked` is set and `*window` (may be NULL) receives it.
///
/// # Safety
/// `det` must be a live handle; `unlocked` must be writable.
#[no_mangle]
pub unsafe extern "C" fn twr_prox_detector_on_change(
    det: *mut TwrProxDetector,
    t_ms: u64,
    unlocked: *mut bool,
    window: *mut TwrUnlockWindow,
) -> TwrStatus {
    guard(|| {
        let det = det.as_mut().ok_or_else(|| Failure::null("detector"))?;
        let unlocked = out_arg(unlocked, "unlocked")?;
        let r = det.state.on_change(t_ms, &det.cfg).map_err(|e| Failure(TwrStatus::InvalidArgument, e.to_string()))?;
        *unlocked = r.is_some();
        if let (Some(w), Some(out)) = (r, window.as_mut()) {
            *out = TwrUnlockWindow { start_ms: w.start, end_ms: w.end };
        }
        Ok(())
    })
}

/// # Safety
/// `det` must be a live handle or NULL (which yields false).
#[no_mangle]
pub unsafe extern "C" fn twr_prox_detector_is_unlocked(det: *const TwrProxDetector, t_ms: u64) -> bool {
    det.as_ref().is_some_and(|d| d.state.is_unlocked(t_ms))
}

/// Decides one access request.
///
/// `det` may be NULL (no proximity gestures seen). `accel` is the recent
/// accelerometer stream as text and may be NULL. `wait_forward_ms` extends
/// the tap capture past the request time; 0 disables it.
///
/// # Safety
/// Pointers must be valid as documented.
#[no_mangle]
pub unsafe extern "C" fn twr_check_permission(
    db: *const TwrDatabase,
    det: *const TwrProxDetector,
    app_id: *const c_char,
    service: *const c_char,
    t_ms: u64,
    accel: *const c_char,
    wait_forward_ms: u64,
    out: *mut TwrDecision,
) -> TwrStatus {
    guard(|| {
        let db = db_ref(db)?;
        let req = AccessRequest::new(str_arg(app_id, "app_id")?, str_arg(service, "service")?, t_ms);
        let accel = if accel.is_null() { None } else { Some(accel_arg(accel, "accel")?) };
        let fresh;
        let state = match det.as_ref() {
            Some(d) => &d.state,
            None => {
                fresh = ProxDetectorState::new(&ProxConfig::default());
                &fresh
            }
        };
        let opts = CheckOptions {
            wait_forward_ms: (wait_forward_ms > 0).then_some(wait_forward_ms),
            ..CheckOptions::default()
        };
        let d = check_permission(&req, &db.inner, &SensorContext { accel: accel.as_ref() }, state, &opts);
        *out_arg(out, "out")? = TwrDecision {
            outcome: match d.outcome() {
                Outcome::Forward => TwrOutcome::Forward,
                Outcome::Reject => TwrOutcome::Reject,
            },
            reason: match d.reason() {
                Reason::GestureMatched => TwrReason::GestureMatched,
                Reason::WithinUnlockWindow => TwrReason::WithinUnlockWindow,
                Reason::NoGesture => TwrReason::NoGesture,
                Reason::TemplateMissing => TwrReason::TemplateMissing,
                Reason::Unprotected => TwrReason::Unprotected,
            },
            has_score: d.score().is_some(),
            score: d.score().unwrap_or(0.0),
        };
        Ok(())
    })
}
