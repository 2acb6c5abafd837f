//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Lines are written straight to stdout so they show up without
//! `--nocapture`. Every tolerance is a named constant below.

use std::io::Write;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use basis_core::engine::{run, ConstructionState, Fault, RunConfig, DEFAULT_SEED};
use basis_core::intset::{rep_count, rep_count_windowed, rep_profile, sumset};
use basis_core::montecarlo::{
    expected_levels, median_rate, profile_membership, relative_levels, sim_lemma_sum, ComplementModel,
};
use basis_core::selector::{CaseParams, PsiKind};
use basis_core::verifier::{
    check_basis_windows, check_prop_random_containments, check_property3, check_property4,
    check_structure, default_subbasis, deletion_probe, minimal_witness_check, selection_audit,
    stage_range, CheckResult, Status,
};
use basis_core::{ExactProbability, IntegerSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KMAX: u64 = 10;

const KERNEL_INSTANCES: usize = 200;
const KERNEL_MAX_SET: usize = 200;
const KERNEL_MAX_LIMIT: u64 = 5000;
const KERNEL_SECONDS: f64 = 10.0;

const STRUCTURE_SECONDS_PER_CASE: f64 = 60.0;
const PEAK_RSS_BYTES: u64 = 1 << 30;

const PROPERTY4_KS: (u64, u64) = (3, 10);
const COVERAGE_KS: (u64, u64) = (7, 10);
const CONTAINMENT_KS: (u64, u64) = (5, 10);
const BRUTE_FORCE_MAX_K: u64 = 6;
const DELETION_KS: (u64, u64) = (7, 10);

const SUM_GRID: [u64; 4] = [250, 1000, 4000, 16000];
const SUM_TRIALS: u64 = 200;
const SUM_REPS: u64 = 3;
const SUM_SEED: u64 = 7;
const SUM_SECONDS: f64 = 300.0;

const PROFILE_K: u64 = 8;
const PROFILE_SEEDS: u64 = 300;
const PROFILE_POINTS: usize = 200;
/// Points within the 3σ binomial band.
const PROFILE_AGREEMENT: f64 = 0.95;
const PROFILE_SIGMAS: f64 = 3.0;

fn line(id: u32, title: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "\n{tag} [{id:02}] {title}: {detail}").unwrap();
    out.flush().unwrap();
}

fn info(id: u32, detail: &str) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "\nINFO [{id:02}] {detail}").unwrap();
}

/// The eight default-seed runs at `KMAX`, built once.
fn states() -> &'static [ConstructionState] {
    static STATES: OnceLock<Vec<ConstructionState>> = OnceLock::new();
    STATES.get_or_init(|| {
        CaseParams::all()
            .into_iter()
            .map(|c| run(&RunConfig::new(c, KMAX, DEFAULT_SEED)).expect("default runs succeed"))
            .collect()
    })
}

fn ks(s: &ConstructionState, range: (u64, u64)) -> Vec<u64> {
    stage_range(s, range.0, range.1)
}

fn first_problem(r: &CheckResult) -> String {
    r.witnesses.first().cloned().unwrap_or_else(|| "no witness".into())
}

fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn random_set(rng: &mut ChaCha8Rng, limit: u64) -> IntegerSet {
    let size = rng.gen_range(0..=KERNEL_MAX_SET.min(limit as usize));
    IntegerSet::from_members(limit, (0..size).map(|_| rng.gen_range(0..limit))).unwrap()
}

#[test]
fn c01_kernels_match_brute_force() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = Vec::new();
    for inst in 0..KERNEL_INSTANCES {
        let limit = rng.gen_range(1..=KERNEL_MAX_LIMIT);
        let a = random_set(&mut rng, limit);
        let b = random_set(&mut rng, limit);
        let rho = rng.gen_range(1..=200);
        let members: Vec<u64> = a.iter().collect();
        let mut plain = vec![0u64; 2 * limit as usize];
        let mut windowed = vec![0u64; 2 * limit as usize];
        for (i, &x) in members.iter().enumerate() {
            for &y in &members[i..] {
                plain[(x + y) as usize] += 1;
                if x >= 1 && y <= rho * x {
                    windowed[(x + y) as usize] += 1;
                }
            }
        }
        let profile = rep_profile(&a, 0, 2 * limit, rho);
        for n in 0..2 * limit {
            let (p, w) = (plain[n as usize], windowed[n as usize]);
            if rep_count(&a, n) != p || rep_count_windowed(&a, n, rho) != w {
                mismatches.push(format!("instance {inst}: n={n}"));
            }
            if profile.plain_at(n) as u64 != p || profile.windowed_at(n) as u64 != w {
                mismatches.push(format!("instance {inst}: profile n={n}"));
            }
        }
        let mut expect = IntegerSet::new(2 * limit);
        for x in a.iter() {
            for y in b.iter() {
                expect.insert(x + y);
            }
        }
        if sumset(&a, &b, 2 * limit) != expect {
            mismatches.push(format!("instance {inst}: sumset"));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = mismatches.is_empty() && secs < KERNEL_SECONDS;
    line(
        1,
        "kernel-oracle equivalence",
        pass,
        &format!("{KERNEL_INSTANCES} instances, {} mismatches, {secs:.2}s (limit {KERNEL_SECONDS}s)", mismatches.len()),
    );
    assert!(pass, "{:?}", mismatches.first());
}

#[test]
fn c02_structure_invariants() {
    let mut failures = Vec::new();
    let mut slowest = 0.0f64;
    for case in CaseParams::all() {
        let t = Instant::now();
        let state = run(&RunConfig::new(case, KMAX, DEFAULT_SEED)).unwrap();
        let r = check_structure(&state);
        let secs = t.elapsed().as_secs_f64();
        slowest = slowest.max(secs);
        if !r.passed() || r.violations != 0 {
            failures.push(format!("{case}: {}", first_problem(&r)));
        }
        if secs >= STRUCTURE_SECONDS_PER_CASE {
            failures.push(format!("{case}: {secs:.1}s"));
        }
    }
    let rss = peak_rss_bytes();
    if let Some(b) = rss {
        if b >= PEAK_RSS_BYTES {
            failures.push(format!("peak RSS {b} bytes"));
        }
    }
    let pass = failures.is_empty();
    line(
        2,
        "structure invariants, eight cases",
        pass,
        &format!(
            "slowest case {slowest:.2}s, peak RSS {} MiB, {}",
            rss.map_or("n/a".to_string(), |b| (b >> 20).to_string()),
            failures.first().map_or("0 violations", |s| s.as_str())
        ),
    );
    assert!(pass, "{failures:?}");
}

#[test]
fn c03_property4_exhaustive() {
    let mut failures = Vec::new();
    let mut pairs = 0u64;
    for s in states() {
        let r = check_property4(s, &ks(s, PROPERTY4_KS));
        pairs += r.metrics["pairs_total"].as_u64().unwrap_or(0);
        if !r.passed() {
            failures.push(format!("{}: {}", s.params(), first_problem(&r)));
        }
    }
    let pass = failures.is_empty();
    line(
        3,
        "representations of N_(k+1) meet F_k, k in [3, 10]",
        pass,
        &format!("{pairs} pairs enumerated, {}", failures.first().map_or("0 violations", |s| s.as_str())),
    );
    assert!(pass, "{failures:?}");
}

#[test]
fn c04_windowed_coverage() {
    let mut failures = Vec::new();
    let mut mins = Vec::new();
    for s in states() {
        let params = s.params();
        let r = check_property3(s, &ks(s, COVERAGE_KS));
        if !r.passed() {
            failures.push(format!("{params}: {}", first_problem(&r)));
        }
        let labels: &[&str] = if params.p2 { &["B", "C"] } else { &["B"] };
        for label in labels {
            let seq: Vec<u64> = (COVERAGE_KS.0..=COVERAGE_KS.1)
                .map(|k| r.metrics[&format!("min_windowed_{label}_k{k:02}")].as_u64().unwrap())
                .collect();
            if seq.iter().any(|&m| m < 1) || seq.windows(2).any(|w| w[1] < w[0]) {
                failures.push(format!("{params} {label}: minima {seq:?}"));
            }
            if s.params().name() == "TTF" {
                mins.push(format!("{label}={seq:?}"));
            }
        }
    }
    let pass = failures.is_empty();
    line(
        4,
        "windowed coverage on [3N/2, 6N) minus 4N, k in [7, 10], rho = 100",
        pass,
        &format!("TTF minima {}; {}", mins.join(" "), failures.first().map_or("all cases non-decreasing", |s| s.as_str())),
    );
    assert!(pass, "{failures:?}");
}

#[test]
fn c05_containments() {
    let mut failures = Vec::new();
    for s in states() {
        let r = check_prop_random_containments(s, &ks(s, CONTAINMENT_KS));
        if !r.passed() {
            failures.push(format!("{}: {}", s.params(), first_problem(&r)));
        }
    }
    let pass = failures.is_empty();
    line(
        5,
        "subset containments, k in [5, 10]",
        pass,
        failures.first().map_or("eight cases, 0 violations", |s| s.as_str()),
    );
    assert!(pass, "{failures:?}");
}

#[test]
fn c06_selection_audit() {
    let mut failures = Vec::new();
    let mut compared = 0u64;
    for s in states() {
        let r = selection_audit(s, BRUTE_FORCE_MAX_K);
        compared += r.metrics.get("brute_force_stages").and_then(|v| v.as_u64()).unwrap_or(0);
        let skipped = r.metrics.get("brute_force_skipped").and_then(|v| v.as_u64()).unwrap_or(0);
        if !r.passed() {
            failures.push(format!("{}: {}", s.params(), first_problem(&r)));
        }
        if skipped != 0 {
            failures.push(format!("{}: {skipped} stages too large to enumerate", s.params()));
        }
    }
    let pass = failures.is_empty();
    line(
        6,
        "selection audit with brute-force cross-check for k <= 6",
        pass,
        &format!("{compared} stage comparisons, {}", failures.first().map_or("exact agreement", |s| s.as_str())),
    );
    assert!(pass, "{failures:?}");
}

#[test]
fn c07_minimal_witness() {
    let s = states().iter().find(|s| s.params().name() == "FTT").unwrap();
    let r = minimal_witness_check(s);
    let qualifying = r.metrics.get("qualifying_stages").and_then(|v| v.as_u64()).unwrap_or(0);
    let pass = r.passed() && qualifying >= 1;
    line(
        7,
        "FTT singleton witnesses: r_B(N) >= 1 and r_(B-b)(N) = 0",
        pass,
        &format!("{qualifying} qualifying stages, {}", r.witnesses.first().map_or("0 violations", |s| s.as_str())),
    );
    assert!(pass, "{r:?}");
}

#[test]
fn c08_deletion_probe() {
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    for s in states().iter().filter(|s| s.params().psi_kind() == PsiKind::Identity) {
        let r = deletion_probe(s, &default_subbasis(s), &ks(s, DELETION_KS));
        if !r.passed() {
            failures.push(format!("{}: {}", s.params(), first_problem(&r)));
        }
        notes.push(format!(
            "{} deleted {} part-b stages {}",
            s.params(),
            r.metrics["deleted"],
            r.metrics["part_b_stages"]
        ));
    }
    let pass = failures.is_empty() && notes.len() == 4;
    line(
        8,
        "deletion of min(A) keeps coverage, psi = n cases",
        pass,
        &format!("{}; {}", notes.join(", "), failures.first().map_or("0 violations", |s| s.as_str())),
    );
    assert!(pass, "{failures:?}");
}

#[test]
fn c09_sum_lemma() {
    let t = Instant::now();
    let mut rows = Vec::new();
    for rep in 0..SUM_REPS {
        rows.extend(sim_lemma_sum(&SUM_GRID, SUM_TRIALS, SUM_SEED, rep).unwrap());
    }
    let secs = t.elapsed().as_secs_f64();
    let medians: Vec<f64> = SUM_GRID
        .iter()
        .map(|&m| median_rate(&rows.iter().filter(|r| r.param == m).collect::<Vec<_>>()))
        .collect();
    let last = *SUM_GRID.last().unwrap();
    let last_failures: u64 = rows.iter().filter(|r| r.param == last).map(|r| r.failures).sum();
    let monotone = medians.windows(2).all(|w| w[1] <= w[0]);
    let pass = monotone && last_failures == 0 && secs < SUM_SECONDS;
    line(
        9,
        "sum lemma failure rates",
        pass,
        &format!("median rates {medians:?}, {last_failures} failures at m={last}, {secs:.1}s"),
    );
    assert!(pass);
}

/// Mean relative level (`frequency / (1/3)`) of sampled points by exact relative level.
fn empirical_means(p: &basis_core::montecarlo::ProfileReport) -> Vec<(String, f64, usize)> {
    let mut out: Vec<(String, f64, usize)> = Vec::new();
    for row in &p.rows {
        match out.iter_mut().find(|(l, ..)| *l == row.relative) {
            Some(e) => {
                e.1 += 3.0 * row.empirical;
                e.2 += 1;
            }
            None => out.push((row.relative.clone(), 3.0 * row.empirical, 1)),
        }
    }
    for e in &mut out {
        e.1 /= e.2 as f64;
    }
    out
}

#[test]
fn c10_membership_profile() {
    let p = profile_membership(PROFILE_K, PROFILE_SEEDS, PROFILE_POINTS, DEFAULT_SEED).unwrap();
    let sigma_ok = p.rows.iter().all(|r| {
        let sd = (r.exact_value * (1.0 - r.exact_value) / r.seeds as f64).sqrt();
        (r.tolerance - PROFILE_SIGMAS * sd).abs() < 1e-12
    });
    let agree = p.agreement >= PROFILE_AGREEMENT && sigma_ok && p.rows.len() == PROFILE_POINTS;
    line(
        10,
        "membership profile vs exact oracle (agreement)",
        agree,
        &format!(
            "{:.1}% of {} points within 3 sigma (need {:.0}%), N_k hit {} times",
            100.0 * p.agreement,
            p.rows.len(),
            100.0 * PROFILE_AGREEMENT,
            p.lattice_point_hits
        ),
    );

    // expected levels: each must be a plateau and the empirical plateaus must follow the same order
    let levels: Vec<ExactProbability> = relative_levels(PROFILE_K, ComplementModel::Union).unwrap();
    let means = empirical_means(&p);
    let mut missing = Vec::new();
    let mut observed = Vec::new();
    for l in expected_levels() {
        if !levels.contains(&l) {
            missing.push(l.to_string());
        }
        if let Some((_, m, _)) = means.iter().find(|(r, ..)| *r == l.to_string()) {
            observed.push(*m);
        }
    }
    let ordered = observed.len() == expected_levels().len() && observed.windows(2).all(|w| w[1] < w[0]);
    let levels_pass = missing.is_empty() && ordered;
    let shown: Vec<String> = levels.iter().map(|l| l.to_string()).collect();
    line(
        10,
        "membership profile plateau levels 1 > 7/9 > 20/27 > 2/3",
        levels_pass,
        &format!("relative plateaus of the construction: {}; missing {missing:?}", shown.join(", ")),
    );
    let b_only = relative_levels(PROFILE_K, ComplementModel::BOnly).unwrap();
    info(
        10,
        &format!(
            "reflecting only (0, N) minus B(k-1) gives plateaus {}",
            b_only.iter().take(8).map(|l| l.to_string()).collect::<Vec<_>>().join(", ")
        ),
    );
    assert!(agree, "agreement {}", p.agreement);
    assert!(levels_pass, "expected levels {missing:?} are not plateaus of the construction");
}

fn cli_bytes(args: &[&str], outputs: &[&std::path::Path]) -> Vec<Vec<u8>> {
    let o = Command::new(env!("CARGO_BIN_EXE_basis")).args(args).output().unwrap();
    let mut all = vec![o.stdout];
    for p in outputs {
        all.push(std::fs::read(p).unwrap_or_default());
    }
    all
}

#[test]
fn c11_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    let (r, v, s, sj, pr, pj) = (p("r.json"), p("v.json"), p("s.csv"), p("s.json"), p("p.csv"), p("p.json"));
    let st = |x: &std::path::PathBuf| x.to_str().unwrap().to_string();
    let commands: Vec<(Vec<String>, Vec<std::path::PathBuf>)> = vec![
        (
            ["construct", "--case", "FFT", "--kmax", "10", "--out", &st(&r)].map(String::from).to_vec(),
            vec![r.clone()],
        ),
        (
            ["verify", "--case", "TFT", "--kmax", "7", "--out", &st(&v)].map(String::from).to_vec(),
            vec![v.clone()],
        ),
        (
            ["simulate", "--lemma", "intersection", "--grid", "4096", "--trials", "10", "--out", &st(&s), "--summary", &st(&sj)]
                .map(String::from)
                .to_vec(),
            vec![s.clone(), sj.clone()],
        ),
        (
            ["profile", "--k", "6", "--seeds", "40", "--points", "50", "--out", &st(&pr), "--summary", &st(&pj)]
                .map(String::from)
                .to_vec(),
            vec![pr.clone(), pj.clone()],
        ),
    ];
    let mut differing = Vec::new();
    for (args, outs) in &commands {
        let a: Vec<&str> = args.iter().map(String::as_str).collect();
        let o: Vec<&std::path::Path> = outs.iter().map(|x| x.as_path()).collect();
        let first = cli_bytes(&a, &o);
        let second = cli_bytes(&a, &o);
        if first != second || first[1..].iter().any(|b| b.is_empty()) {
            differing.push(args[0].clone());
        }
    }
    let pass = differing.is_empty();
    line(
        11,
        "byte-identical outputs on repeat",
        pass,
        &format!("construct, verify, simulate, profile; differing {differing:?}"),
    );
    assert!(pass);
}

#[test]
fn c12_fault_injection() {
    let build = |case: &str, fault: Option<Fault>| {
        let mut cfg = RunConfig::new(case.parse().unwrap(), 7, DEFAULT_SEED);
        cfg.inject = fault;
        run(&cfg).unwrap()
    };
    type Check = fn(&ConstructionState) -> CheckResult;
    let fixtures: [(&str, &str, Fault, Check); 8] = [
        ("structure", "TTF", Fault::Overlap, check_structure),
        ("property3", "TTF", Fault::DropReflected, |s| check_property3(s, &stage_range(s, 4, 7))),
        ("property4", "FTF", Fault::StrayPair, |s| check_property4(s, &stage_range(s, 3, 7))),
        ("basis_window", "TFF", Fault::DropBlock, |s| check_basis_windows(s, &stage_range(s, 4, 7))),
        ("deletion_probe", "FFF", Fault::DropBlock, |s| {
            deletion_probe(s, &default_subbasis(s), &stage_range(s, 4, 7))
        }),
        ("minimal_witness", "FTT", Fault::StrayPair, minimal_witness_check),
        ("containments", "FFF", Fault::DropReflected, |s| {
            check_prop_random_containments(s, &stage_range(s, 5, 7))
        }),
        ("selection_audit", "TTF", Fault::NonMinimalSelection, |s| selection_audit(s, 6)),
    ];
    let mut problems = Vec::new();
    let mut shown = Vec::new();
    for (name, case, fault, check) in fixtures {
        let clean = check(&build(case, None));
        let bad = check(&build(case, Some(fault)));
        if clean.status != Status::Pass {
            problems.push(format!("{name} does not pass on the clean {case} run"));
        }
        if bad.status != Status::Fail || bad.witnesses.is_empty() {
            problems.push(format!("{name} did not fail with a witness under {}", fault.name()));
        } else {
            shown.push(format!("{name}<-{}", fault.name()));
        }
    }
    let pass = problems.is_empty();
    line(
        12,
        "each check fails with a witness on its corrupted fixture",
        pass,
        &format!("{}; {}", shown.join(" "), problems.first().map_or("all eight", |s| s.as_str())),
    );
    assert!(pass, "{problems:?}");
}
