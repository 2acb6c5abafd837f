//! Each check fails, with a witness, on a construction corrupted for it.

use basis_core::engine::{run, ConstructionState, Fault, RunConfig};
use basis_core::verifier::{
    check_basis_windows, check_prop_random_containments, check_property3, check_property4,
    check_structure, default_subbasis, deletion_probe, minimal_witness_check, selection_audit,
    stage_range, CheckResult, Status,
};

fn build(case: &str, kmax: u64, fault: Option<Fault>) -> ConstructionState {
    let mut cfg = RunConfig::new(case.parse().unwrap(), kmax, 42);
    cfg.inject = fault;
    run(&cfg).unwrap()
}

fn assert_fails(r: &CheckResult) {
    assert_eq!(r.status, Status::Fail, "{} should fail: {:?}", r.name, r.notes);
    assert!(r.violations > 0);
    assert!(!r.witnesses.is_empty(), "{} failed without a witness", r.name);
}

fn assert_passes(r: &CheckResult) {
    assert_eq!(r.status, Status::Pass, "{} should pass: {:?}", r.name, r.witnesses);
}

#[test]
fn overlap_breaks_structure() {
    let clean = build("TTF", 6, None);
    assert_passes(&check_structure(&clean));
    let s = build("TTF", 6, Some(Fault::Overlap));
    let r = check_structure(&s);
    assert_fails(&r);
    let x = s.stage(6).b_k.min().unwrap();
    assert!(r.witnesses.iter().any(|w| w.contains(&x.to_string())));
}

#[test]
fn stray_pair_breaks_property4() {
    let ks = |s: &ConstructionState| stage_range(s, 3, s.kmax());
    let clean = build("FTF", 6, None);
    assert_passes(&check_property4(&clean, &ks(&clean)));
    let s = build("FTF", 6, Some(Fault::StrayPair));
    let r = check_property4(&s, &ks(&s));
    assert_fails(&r);
    let n = s.stage(6).n_k;
    assert!(r.witnesses[0].contains(&format!("{} + {}", 3 * n / 2, 5 * n / 2)), "{:?}", r.witnesses);
}

#[test]
fn stray_pair_breaks_minimal_witness() {
    let clean = build("FTT", 7, None);
    assert_passes(&minimal_witness_check(&clean));
    let r = minimal_witness_check(&build("FTT", 7, Some(Fault::StrayPair)));
    assert_fails(&r);
    assert!(r.witnesses[0].contains("still represents"), "{:?}", r.witnesses);
}

#[test]
fn drop_reflected_breaks_property3() {
    let clean = build("TTF", 7, None);
    let ks = stage_range(&clean, 4, 7);
    assert_passes(&check_property3(&clean, &ks));
    let r = check_property3(&build("TTF", 7, Some(Fault::DropReflected)), &ks);
    assert_fails(&r);
}

#[test]
fn drop_block_breaks_basis_window() {
    let clean = build("TFF", 7, None);
    let ks = stage_range(&clean, 4, 7);
    assert_passes(&check_basis_windows(&clean, &ks));
    let r = check_basis_windows(&build("TFF", 7, Some(Fault::DropBlock)), &ks);
    assert_fails(&r);
    assert!(r.witnesses[0].contains("has no representation"));
}

#[test]
fn drop_block_breaks_deletion_probe() {
    // A = B here, so C cannot cover the dropped block
    let clean = build("FFF", 7, None);
    let ks = stage_range(&clean, 4, 7);
    assert_passes(&deletion_probe(&clean, &default_subbasis(&clean), &ks));
    let s = build("FFF", 7, Some(Fault::DropBlock));
    assert_fails(&deletion_probe(&s, &default_subbasis(&s), &ks));
}

#[test]
fn drop_reflected_breaks_containments() {
    let clean = build("FFF", 7, None);
    let ks = stage_range(&clean, 5, 7);
    assert_passes(&check_prop_random_containments(&clean, &ks));
    let r = check_prop_random_containments(&build("FFF", 7, Some(Fault::DropReflected)), &ks);
    assert_fails(&r);
    assert!(r.witnesses[0].contains("reflected"));
}

#[test]
fn skipped_candidate_breaks_selection_audit() {
    for case in ["TTF", "FFT"] {
        let clean = build(case, 6, None);
        assert_passes(&selection_audit(&clean, 6));
    }
    let r = selection_audit(&build("TTF", 6, Some(Fault::NonMinimalSelection)), 6);
    assert_fails(&r);
    assert!(r.witnesses[0].contains("prefers"), "{:?}", r.witnesses);
}

#[test]
fn fault_names_round_trip() {
    for f in Fault::ALL {
        assert_eq!(Fault::parse(f.name()).unwrap(), f);
    }
    assert!(Fault::parse("overlapping").is_err());
}
