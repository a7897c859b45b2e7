use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use twr_core::harness::gen::{gen_activity_trace, gen_tap_trace, Activity, GenParams};
use twr_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = twr_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn tap_texts(count: u64) -> Vec<CString> {
    let p = GenParams::default();
    (0..count).map(|s| cstr(&gen_tap_trace(&p.with_seed(100 + s)).unwrap().to_text())).collect()
}

fn trained_db() -> *mut TwrDatabase {
    let db = twr_database_new();
    let texts = tap_texts(10);
    let ptrs: Vec<_> = texts.iter().map(|c| c.as_ptr()).collect();
    let mut threshold = f64::NAN;
    let id = cstr("tap-once");
    let st = unsafe {
        twr_database_create_template(db, id.as_ptr(), ptrs.as_ptr(), ptrs.len(), 100, TwrAxisRule::Mean, &mut threshold)
    };
    assert_eq!(st, TwrStatus::Ok);
    assert!((-1.0..=1.0).contains(&threshold));
    let svc = cstr("nfc");
    assert_eq!(
        unsafe { twr_database_add_policy(db, svc.as_ptr(), TwrGestureKind::UserDependentTap, id.as_ptr(), 2000) },
        TwrStatus::Ok
    );
    db
}

#[test]
fn pearson_and_null_handling() {
    let a = [1.0, 2.0, 3.0];
    let b = [3.0, 2.0, 1.0];
    let mut out = 0.0;
    assert_eq!(unsafe { twr_pearson(a.as_ptr(), b.as_ptr(), 3, &mut out) }, TwrStatus::Ok);
    assert_eq!(out, -1.0);
    assert_eq!(unsafe { twr_pearson(ptr::null(), b.as_ptr(), 3, &mut out) }, TwrStatus::NullPointer);
    assert!(last_error().contains("null"));
    assert_eq!(unsafe { twr_pearson(a.as_ptr(), b.as_ptr(), 0, &mut out) }, TwrStatus::InvalidArgument);
}

#[test]
fn match_and_check() {
    let db = trained_db();
    let id = cstr("tap-once");
    let probe = cstr(&gen_tap_trace(&GenParams::default().with_seed(5)).unwrap().to_text());
    let mut m = TwrMatch { score: 0.0, matched: false };
    assert_eq!(unsafe { twr_match(db, id.as_ptr(), probe.as_ptr(), &mut m) }, TwrStatus::Ok);
    assert!(m.matched, "score {}", m.score);

    let still = cstr(&gen_activity_trace(Activity::Still, &GenParams::default()).unwrap().to_text());
    assert_eq!(unsafe { twr_match(db, id.as_ptr(), still.as_ptr(), &mut m) }, TwrStatus::Ok);
    assert!(!m.matched);

    let missing = cstr("nope");
    assert_eq!(unsafe { twr_match(db, missing.as_ptr(), still.as_ptr(), &mut m) }, TwrStatus::NotFound);
    let garbage = cstr("0,1,2\n");
    assert_eq!(unsafe { twr_match(db, id.as_ptr(), garbage.as_ptr(), &mut m) }, TwrStatus::ParseError);
    assert!(last_error().contains("line 1"));

    let (app, nfc) = (cstr("reader"), cstr("nfc"));
    let mut d =
        TwrDecision { outcome: TwrOutcome::Forward, reason: TwrReason::Unprotected, has_score: false, score: 0.0 };
    let st =
        unsafe { twr_check_permission(db, ptr::null(), app.as_ptr(), nfc.as_ptr(), 1980, probe.as_ptr(), 0, &mut d) };
    assert_eq!(st, TwrStatus::Ok);
    assert_eq!((d.outcome, d.reason, d.has_score), (TwrOutcome::Forward, TwrReason::GestureMatched, true));
    let st =
        unsafe { twr_check_permission(db, ptr::null(), app.as_ptr(), nfc.as_ptr(), 1980, still.as_ptr(), 0, &mut d) };
    assert_eq!(st, TwrStatus::Ok);
    assert_eq!((d.outcome, d.reason), (TwrOutcome::Reject, TwrReason::NoGesture));
    let web = cstr("web");
    let st = unsafe { twr_check_permission(db, ptr::null(), app.as_ptr(), web.as_ptr(), 10, ptr::null(), 0, &mut d) };
    assert_eq!(st, TwrStatus::Ok);
    assert_eq!((d.outcome, d.reason), (TwrOutcome::Forward, TwrReason::Unprotected));
    unsafe { twr_database_free(db) };
}

#[test]
fn integrity_and_persistence() {
    let db = trained_db();
    let (ghost, svc, id) = (cstr("ghost"), cstr("x"), cstr("tap-once"));
    let st =
        unsafe { twr_database_add_policy(db, svc.as_ptr(), TwrGestureKind::UserDependentTap, ghost.as_ptr(), 2000) };
    assert_eq!(st, TwrStatus::IntegrityError);
    let mut removed = true;
    assert_eq!(unsafe { twr_database_remove_template(db, id.as_ptr(), &mut removed) }, TwrStatus::IntegrityError);
    assert_eq!(unsafe { twr_database_policy_count(db) }, 1);

    let dir = tempfile::tempdir().unwrap();
    let path = cstr(dir.path().join("db.toml").to_str().unwrap());
    assert_eq!(unsafe { twr_database_save(db, path.as_ptr()) }, TwrStatus::Ok);
    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { twr_database_load(path.as_ptr(), &mut loaded) }, TwrStatus::Ok);
    assert_eq!(unsafe { twr_database_policy_count(loaded) }, 1);

    let nfc = cstr("nfc");
    assert_eq!(unsafe { twr_database_remove_policy(loaded, nfc.as_ptr(), &mut removed) }, TwrStatus::Ok);
    assert!(removed);
    assert_eq!(unsafe { twr_database_remove_template(loaded, id.as_ptr(), &mut removed) }, TwrStatus::Ok);
    assert!(removed);

    let bad = cstr(dir.path().join("missing.toml").to_str().unwrap());
    assert_eq!(unsafe { twr_database_load(bad.as_ptr(), &mut loaded) }, TwrStatus::IoError);
    unsafe {
        twr_database_free(db);
        twr_database_free(loaded);
        twr_database_free(ptr::null_mut());
    }
}

#[test]
fn prox_detector_unlocks_sms() {
    let mut det = ptr::null_mut();
    assert_eq!(unsafe { twr_prox_detector_new(0, 0, 0, &mut det) }, TwrStatus::Ok);
    let mut unlocked = false;
    let mut w = TwrUnlockWindow { start_ms: 0, end_ms: 0 };
    for t in [0, 200, 400, 600, 800, 1000] {
        assert_eq!(unsafe { twr_prox_detector_on_change(det, t, &mut unlocked, &mut w) }, TwrStatus::Ok);
    }
    assert!(unlocked);
    assert_eq!(w, TwrUnlockWindow { start_ms: 1000, end_ms: 2000 });
    assert!(unsafe { twr_prox_detector_is_unlocked(det, 1999) });
    assert!(!unsafe { twr_prox_detector_is_unlocked(det, 2000) });
    assert_eq!(
        unsafe { twr_prox_detector_on_change(det, 500, &mut unlocked, ptr::null_mut()) },
        TwrStatus::InvalidArgument
    );

    let db = twr_database_new();
    let sms = cstr("sms");
    assert_eq!(
        unsafe { twr_database_add_policy(db, sms.as_ptr(), TwrGestureKind::UserIndependentProx, ptr::null(), 2000) },
        TwrStatus::Ok
    );
    let app = cstr("messenger");
    let mut d = TwrDecision { outcome: TwrOutcome::Reject, reason: TwrReason::NoGesture, has_score: false, score: 0.0 };
    assert_eq!(
        unsafe { twr_check_permission(db, det, app.as_ptr(), sms.as_ptr(), 1500, ptr::null(), 0, &mut d) },
        TwrStatus::Ok
    );
    assert_eq!((d.outcome, d.reason, d.has_score), (TwrOutcome::Forward, TwrReason::WithinUnlockWindow, false));
    assert_eq!(
        unsafe { twr_check_permission(db, det, app.as_ptr(), sms.as_ptr(), 2500, ptr::null(), 0, &mut d) },
        TwrStatus::Ok
    );
    assert_eq!(d.reason, TwrReason::NoGesture);

    let mut bad = ptr::null_mut();
    assert_eq!(unsafe { twr_prox_detector_new(0, 0, 0, ptr::null_mut()) }, TwrStatus::NullPointer);
    assert_eq!(unsafe { twr_prox_detector_new(1, 0, 0, &mut bad) }, TwrStatus::InvalidArgument);
    unsafe {
        twr_prox_detector_free(det);
        twr_database_free(db);
    }
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn target_profile_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_compiles_as_c() {
    let header = crate_dir().join("include/twr.h");
    let st =
        Command::new("cc").args(["-std=c11", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"]).arg(&header).status();
    match st {
        Ok(s) => assert!(s.success(), "header failed to compile"),
        Err(e) => eprintln!("skipping: no C compiler ({e})"),
    }
}

#[test]
fn c_program_links_against_static_library() {
    let lib = target_profile_dir().join("libtwr_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "twr.h"
int main(void) {
    double a[3] = {1, 2, 3}, b[3] = {2, 4, 6}, r = 0;
    if (twr_pearson(a, b, 3, &r) != TWR_STATUS_OK || r != 1.0) return 1;
    TwrProxDetector *det = NULL;
    if (twr_prox_detector_new(0, 0, 0, &det) != TWR_STATUS_OK) return 2;
    bool unlocked = false;
    TwrUnlockWindow w;
    for (uint64_t t = 0; t <= 1000; t += 200) twr_prox_detector_on_change(det, t, &unlocked, &w);
    TwrDatabase *db = twr_database_new();
    twr_database_add_policy(db, "sms", TWR_GESTURE_KIND_USER_INDEPENDENT_PROX, NULL, 2000);
    TwrDecision d;
    if (twr_check_permission(db, det, "app", "sms", 1500, NULL, 0, &d) != TWR_STATUS_OK) return 3;
    if (twr_match(db, "none", "0,0,0,0\n20,1,1,1\n", NULL) != TWR_STATUS_NOT_FOUND) return 4;
    printf("%d %llu %llu %d %s\n", unlocked, (unsigned long long)w.start_ms, (unsigned long long)w.end_ms,
           d.reason == TWR_REASON_WITHIN_UNLOCK_WINDOW, twr_last_error());
    twr_database_free(db);
    twr_prox_detector_free(det);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let built = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status();
    match built {
        Ok(s) => assert!(s.success(), "C smoke program failed to build"),
        Err(e) => {
            eprintln!("skipping: no C compiler ({e})");
            return;
        }
    }
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "1 1000 2000 1 unknown template \"none\"\n");
}
