use basis_core::engine::{run, RunConfig};
use basis_core::montecarlo::{profile_membership, sim_lemma_intersection, sim_lemma_sum};
use basis_core::report::RunReport;
use basis_core::selector::CaseParams;
use basis_core::verifier::{verify_all, VerifyOptions};

#[test]
fn every_case_reproduces_its_report() {
    for case in CaseParams::all() {
        let cfg = RunConfig::new(case, 7, 1234);
        let a = RunReport::from_state(&run(&cfg).unwrap()).to_json();
        let b = RunReport::from_state(&run(&cfg).unwrap()).to_json();
        assert_eq!(a, b, "case {case}");
    }
}

#[test]
fn report_config_alone_reproduces_the_run() {
    let cfg = RunConfig::new("FTT".parse().unwrap(), 6, 99);
    let state = run(&cfg).unwrap();
    let report = RunReport::from_state(&state);
    let again = run(&report.config.to_config().unwrap()).unwrap();
    assert_eq!(again.b_cum, state.b_cum);
    assert_eq!(again.c_cum, state.c_cum);
    assert_eq!(report.first_mismatch(&again), None);
}

#[test]
fn verification_is_deterministic() {
    let state = run(&RunConfig::new("TFT".parse().unwrap(), 6, 5)).unwrap();
    let opts = VerifyOptions::for_state(&state);
    let a = serde_json::to_string(&verify_all(&state, &opts)).unwrap();
    let b = serde_json::to_string(&verify_all(&state, &opts)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn simulations_are_deterministic() {
    assert_eq!(
        sim_lemma_sum(&[250, 1000], 10, 3, 0).unwrap(),
        sim_lemma_sum(&[250, 1000], 10, 3, 0).unwrap()
    );
    assert_ne!(
        sim_lemma_sum(&[1000], 30, 3, 0).unwrap()[0].mean_min_count,
        sim_lemma_sum(&[1000], 30, 3, 1).unwrap()[0].mean_min_count
    );
    assert_eq!(
        sim_lemma_intersection(&[4096], 5, 3, 0).unwrap(),
        sim_lemma_intersection(&[4096], 5, 3, 0).unwrap()
    );
    assert_eq!(
        profile_membership(4, 10, 20, 3).unwrap(),
        profile_membership(4, 10, 20, 3).unwrap()
    );
}
