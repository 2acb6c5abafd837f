//! Exhaustive finite-window checks of a completed construction.
//!
//! Every check is deterministic and sweeps its whole window. Results carry a
//! status, a violation count, up to [`MAX_WITNESSES`] witnesses and a map of
//! summary metrics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::coloring::Color;
use crate::engine::{h, ConstructionState};
use crate::error::Result;
use crate::intset::{
    integers_in, rep_count, rep_counts, rep_profile, IntegerSet, OpenRationalInterval,
};
use crate::selector::{
    best_unseen, count_k_eligible, fiber_f, n_index, AChoice, Mode,
    SelectionInput,
};

pub const MAX_WITNESSES: usize = 32;

/// Largest candidate space the brute-force selection enumerator will walk.
pub const BRUTE_FORCE_SPACE: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub window: String,
    pub status: Status,
    pub violations: u64,
    pub witnesses: Vec<String>,
    /// Informational lines that are not violations.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub metrics: BTreeMap<String, Value>,
}

impl CheckResult {
    fn new(name: &str, window: String) -> Self {
        CheckResult {
            name: name.into(),
            window,
            status: Status::Pass,
            violations: 0,
            witnesses: Vec::new(),
            notes: Vec::new(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }

    fn violation(&mut self, witness: impl FnOnce() -> String) {
        self.violations += 1;
        self.status = Status::Fail;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(witness());
        }
    }

    fn note(&mut self, line: String) {
        if self.notes.len() < MAX_WITNESSES {
            self.notes.push(line);
        }
    }

    fn metric(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.metrics.insert(key.into(), value.into());
    }
}

fn n_of(k: u64) -> u64 {
    n_index(k).expect("stage index validated by the run")
}

fn window_ks(ks: &[u64]) -> String {
    match (ks.first(), ks.last()) {
        (Some(a), Some(b)) => format!("k in [{a}, {b}]"),
        _ => "empty".into(),
    }
}

/// Stages `lo..=hi` clipped to the run.
pub fn stage_range(state: &ConstructionState, lo: u64, hi: u64) -> Vec<u64> {
    (lo.max(1)..=hi.min(state.kmax())).collect()
}

/// Stage sets inside `(N_k, N_{k+1})`, `F_k` within `[1, N_k]`, `G_k ∩ H_k = ∅`,
/// `B ∩ C = ∅`, cumulative sets equal to the union of their parts, and
/// reflections `N_{i+1} - G_i` inside `[3N_i, 4N_i)`.
pub fn check_structure(state: &ConstructionState) -> CheckResult {
    let mut r = CheckResult::new("structure", format!("k in [1, {}]", state.kmax()));
    let universe = state.universe();
    let mut b_rebuilt = IntegerSet::new(universe);
    let mut c_rebuilt = IntegerSet::new(universe);
    for s in &state.stages {
        let n = s.n_k;
        for (name, set) in [("B_k", &s.b_k), ("C_k", &s.c_k)] {
            for x in set.iter().filter(|&x| x <= n || x >= 4 * n) {
                r.violation(|| format!("k={}: {name} element {x} outside ({n}, {})", s.k, 4 * n));
            }
        }
        if let Some(x) = s.b_k.first_common(&s.c_k) {
            r.violation(|| format!("k={}: {x} lies in both B_k and C_k", s.k));
        }
        for &x in s.f.iter().filter(|&&x| x == 0 || x > n) {
            r.violation(|| format!("k={}: F_k element {x} outside [1, N_k = {n}]", s.k));
        }
        for x in s.g.iter().filter(|x| s.h.contains(x)) {
            r.violation(|| format!("k={}: {x} lies in both G_k and H_k", s.k));
        }
        b_rebuilt.union_with(&s.b_k);
        c_rebuilt.union_with(&s.c_k);
        for (set, rebuilt) in [(&s.g, &mut b_rebuilt), (&s.h, &mut c_rebuilt)] {
            for &x in set {
                let y = 4 * n - x;
                if y < 3 * n || y >= 4 * n {
                    r.violation(|| format!("k={}: reflection {y} of {x} outside [3N, 4N)", s.k));
                }
                rebuilt.insert(y);
            }
        }
    }
    if let Some(x) = state.b_cum.first_common(&state.c_cum) {
        let overlap = state.b_cum.intersection(&state.c_cum);
        for y in overlap.iter() {
            r.violation(|| format!("{y} lies in both B and C"));
        }
        r.metric("first_overlap", x);
    }
    if b_rebuilt != state.b_cum {
        let x = b_rebuilt
            .first_missing_from(&state.b_cum)
            .or_else(|| state.b_cum.first_missing_from(&b_rebuilt));
        r.violation(|| format!("B differs from the union of its stage parts near {x:?}"));
    }
    if c_rebuilt != state.c_cum {
        let x = c_rebuilt
            .first_missing_from(&state.c_cum)
            .or_else(|| state.c_cum.first_missing_from(&c_rebuilt));
        r.violation(|| format!("C differs from the union of its stage parts near {x:?}"));
    }
    r.metric("b_size", state.b_cum.len());
    r.metric("c_size", state.c_cum.len());
    r
}

/// `[3N_k/2, 6N_k)`.
fn prop_window(k: u64) -> (u64, u64) {
    let n = n_of(k);
    (3 * n / 2, 6 * n)
}

/// Windowed counts `r̃_{B(k)}(n), r̃_{C(k)}(n) >= max(1, h(n))` on
/// `[3N_k/2, 6N_k) \ {4N_k}` for each listed stage.
pub fn check_property3(state: &ConstructionState, ks: &[u64]) -> CheckResult {
    let cfg = &state.config;
    let mut r = CheckResult::new("property3", window_ks(ks));
    r.metric("rho", cfg.rho);
    r.metric("alpha", format!("{}/{}", cfg.alpha_num, cfg.alpha_den));
    let mut first_passing: Option<u64> = None;
    for &k in ks {
        let (lo, hi) = prop_window(k);
        let skip = 4 * n_of(k);
        let limit = n_of(k + 1);
        let mut stage_ok = true;
        for (label, set) in [("B", state.b_upto(k, limit)), ("C", state.c_upto(k, limit))] {
            let profile = rep_profile(&set, lo, hi, cfg.rho);
            let mut min = u32::MAX;
            let mut argmin = lo;
            for (n, _, w) in profile.iter() {
                if n == skip {
                    continue;
                }
                if w < min {
                    min = w;
                    argmin = n;
                }
                let need = h(n, cfg.alpha_num, cfg.alpha_den).max(1);
                if (w as u64) < need {
                    stage_ok = false;
                    r.violation(|| format!("k={k}: windowed count of {n} over {label}({k}) is {w} < {need}"));
                }
            }
            r.metric(format!("min_windowed_{label}_k{k:02}"), min);
            r.metric(format!("argmin_windowed_{label}_k{k:02}"), argmin);
        }
        match (stage_ok, first_passing) {
            (true, None) => first_passing = Some(k),
            (false, _) => first_passing = None,
            _ => {}
        }
    }
    r.metric("first_passing_k", first_passing.map_or(Value::Null, Value::from));
    r
}

/// Every pair `x <= x'` of `A(k)` with `x + x' = N_{k+1}` meets `F_k`.
pub fn check_property4(state: &ConstructionState, ks: &[u64]) -> CheckResult {
    let mut r = CheckResult::new("property4", window_ks(ks));
    let mut total_pairs = 0u64;
    for &k in ks {
        let target = n_of(k + 1);
        let a = state.a_upto(k, target);
        let f = &state.stage(k).f;
        let mut pairs = 0u64;
        for x in a.iter_range(0, target / 2 + 1) {
            let y = target - x;
            if !a.contains(y) {
                continue;
            }
            pairs += 1;
            if !f.contains(&x) && !f.contains(&y) {
                r.violation(|| format!("k={k}: {x} + {y} = {target} avoids F_k = {f:?}"));
            }
        }
        r.metric(format!("pairs_k{k:02}"), pairs);
        total_pairs += pairs;
    }
    r.metric("pairs_total", total_pairs);
    r
}

/// Plain `r_S(n) >= 1` for `n` in `[lo, hi)` off `exclusions`.
pub fn check_basis_window(
    name: &str,
    s: &IntegerSet,
    lo: u64,
    hi: u64,
    exclusions: &[u64],
) -> CheckResult {
    let mut r = CheckResult::new(name, format!("n in [{lo}, {hi})"));
    basis_window_into(&mut r, name, s, lo, hi, exclusions);
    r
}

fn basis_window_into(
    r: &mut CheckResult,
    label: &str,
    s: &IntegerSet,
    lo: u64,
    hi: u64,
    exclusions: &[u64],
) -> u32 {
    let counts = rep_counts(s, lo, hi);
    let mut min = u32::MAX;
    for (n, &c) in (lo..hi).zip(&counts) {
        if exclusions.contains(&n) {
            continue;
        }
        min = min.min(c);
        if c == 0 {
            r.violation(|| format!("{label}: {n} has no representation"));
        }
    }
    min
}

/// The basis checks per stage: `B(k)`, `C(k)` (decomposable cases) and the
/// case's `A(k)` cover `[3N_k/2, 6N_k) \ {4N_k}`, and `N_{k+1}` is a sum
/// in `B(k)` whenever `G_k` is nonempty (in `C(k)` whenever `H_k` is).
pub fn check_basis_windows(state: &ConstructionState, ks: &[u64]) -> CheckResult {
    let mut r = CheckResult::new("basis_window", window_ks(ks));
    let decomposable = state.params().mode() == Mode::Decomposable;
    for &k in ks {
        let (lo, hi) = prop_window(k);
        let target = n_of(k + 1);
        let b = state.b_upto(k, target);
        let c = state.c_upto(k, target);
        let mut sets = vec![("B", &b)];
        if decomposable {
            sets.push(("C", &c));
        }
        let a;
        if state.params().a_choice() == AChoice::BUnionC {
            a = b.union(&c);
            sets.push(("A", &a));
        }
        for (label, s) in sets {
            let min = basis_window_into(&mut r, &format!("{label}({k})"), s, lo, hi, &[target]);
            r.metric(format!("min_plain_{label}_k{k:02}"), min);
        }
        let st = state.stage(k);
        for (label, sel, s) in [("B", &st.g, &b), ("C", &st.h, &c)] {
            if sel.is_empty() {
                continue;
            }
            let reps = rep_count(s, target);
            if reps == 0 {
                r.violation(|| format!("k={k}: N_(k+1) = {target} has no representation in {label}({k})"));
            }
            r.metric(format!("r_{label}_N_k{k:02}"), reps);
        }
    }
    r
}

/// Deletes `d = min D` and re-checks coverage. Part (a): `r_{D'}(n) >= 1`
/// on each stage window off `{N_i}`. Part (b): for stages with
/// `ψ(i) > d`, `r_{D'}(N_{i+1}) = r_D(N_{i+1})`.
pub fn deletion_probe(state: &ConstructionState, d_set: &IntegerSet, ks: &[u64]) -> CheckResult {
    let mut r = CheckResult::new("deletion_probe", window_ks(ks));
    let Some(d) = d_set.min() else {
        r.violation(|| "candidate subbasis is empty".into());
        return r;
    };
    let mut d_prime = d_set.clone();
    d_prime.remove(d);
    r.metric("deleted", d);
    let lattice: Vec<u64> = (1..=state.kmax() + 2).filter_map(|i| n_index(i).ok()).collect();

    for &k in ks {
        let (lo, hi) = prop_window(k);
        let sub = d_prime.with_limit(hi.min(d_prime.limit()));
        let min = basis_window_into(&mut r, &format!("D'(k={k})"), &sub, lo, hi, &lattice);
        r.metric(format!("min_plain_k{k:02}"), min);
    }

    let params = state.params();
    let mut part_b = 0u64;
    for i in 1..=state.kmax() {
        if params.psi(i) <= d {
            continue;
        }
        let target = n_of(i + 1);
        if target >= d_set.limit() {
            continue;
        }
        part_b += 1;
        let full = rep_count(d_set, target);
        let reduced = rep_count(&d_prime, target);
        if full != reduced {
            r.violation(|| format!("i={i}: r_D(N_(i+1)) = {full} but r_D'(N_(i+1)) = {reduced}"));
        }
    }
    r.metric("part_b_stages", part_b);
    if part_b == 0 {
        r.note(format!(
            "part (b) skipped: no stage i <= {} has psi(i) > {d}",
            state.kmax()
        ));
    }
    r
}

/// The case's `A` on the whole universe.
pub fn default_subbasis(state: &ConstructionState) -> IntegerSet {
    match state.params().a_choice() {
        AChoice::BUnionC => state.a_cum(),
        AChoice::B => state.b_cum.clone(),
    }
}

/// Finite witnesses of minimality in the `ψ = 1` cases.
///
/// Decomposable: at each stage with `F_k ∩ B(k-1) = {b}`, `N_{k+1}` is a sum
/// in `B(k)` and every such sum uses `b`. Indecomposable: build the reduced
/// set `B'` and look for stages whose `G_i` misses `B' \ {b}`.
pub fn minimal_witness_check(state: &ConstructionState) -> CheckResult {
    let mut r = CheckResult::new("minimal_witness", format!("k in [1, {}]", state.kmax()));
    let params = state.params();
    if params.psi_kind() != crate::selector::PsiKind::One {
        r.status = Status::Inconclusive;
        r.note(format!("case {params} has psi(n) = n; the check applies to psi = 1 only"));
        return r;
    }
    match params.mode() {
        Mode::Decomposable => singleton_witnesses(state, &mut r),
        _ => reduced_set_witnesses(state, &mut r),
    }
    r
}

fn singleton_witnesses(state: &ConstructionState, r: &mut CheckResult) {
    let mut qualifying = 0u64;
    for st in &state.stages {
        let [b] = st.g.as_slice() else { continue };
        qualifying += 1;
        let target = n_of(st.k + 1);
        let set = state.b_upto(st.k, target);
        let with = rep_count(&set, target);
        let mut without_b = set.clone();
        without_b.remove(*b);
        let without = rep_count(&without_b, target);
        if with == 0 {
            r.violation(|| format!("k={}: N_(k+1) = {target} has no representation in B(k)", st.k));
        }
        if without != 0 {
            r.violation(|| {
                format!("k={}: B(k) minus {{{b}}} still represents {target} ({without} ways)", st.k)
            });
        }
        r.note(format!("k={}: b={b}, r_B(N)={with}, r_(B-b)(N)={without}", st.k));
    }
    r.metric("qualifying_stages", qualifying);
    if qualifying == 0 {
        r.status = Status::Inconclusive;
        r.note("no stage has a singleton F_k ∩ B".into());
    }
}

/// `B \ B'`: at every stage `k`, exactly `φ(k) - 1` removed elements `<= N_k`,
/// drawn from `(N_{k-1}, N_k]` and avoiding selected and reflected elements.
pub fn reduced_set_removals(state: &ConstructionState) -> (Vec<u64>, Vec<u64>) {
    let params = state.params();
    let mut protected = BTreeSet::new();
    for st in &state.stages {
        for &g in &st.g {
            protected.insert(g);
            protected.insert(4 * st.n_k - g);
        }
    }
    let mut removed = Vec::new();
    let mut short = Vec::new();
    for k in 1..=state.kmax() {
        let n = n_of(k);
        let want = params.phi(k).saturating_sub(1) as usize;
        let prev = if k == 1 { 0 } else { n_of(k - 1) + 1 };
        let candidates = state
            .b_cum
            .iter_range(prev, n + 1)
            .filter(|x| !protected.contains(x));
        for x in candidates {
            if removed.len() >= want {
                break;
            }
            removed.push(x);
        }
        if removed.len() < want {
            short.push(k);
        }
    }
    (removed, short)
}

fn reduced_set_witnesses(state: &ConstructionState, r: &mut CheckResult) {
    let (removed, short) = reduced_set_removals(state);
    let removed_set: BTreeSet<u64> = removed.iter().copied().collect();
    r.metric("removed", json!(removed));
    if !short.is_empty() {
        r.note(format!("not enough removable elements at stages {short:?}"));
    }
    // B' must meet every G_i
    for st in &state.stages {
        if !st.g.is_empty() && st.g.iter().all(|x| removed_set.contains(x)) {
            r.violation(|| format!("k={}: G_k = {:?} misses B'", st.k, st.g));
        }
    }
    let sampled: BTreeSet<u64> = state.stages.iter().flat_map(|s| s.g.iter().copied()).collect();
    let mut witnessed = 0u64;
    for &b in &sampled {
        let hit = state.stages.iter().find(|st| {
            !st.g.is_empty() && st.g.iter().all(|x| *x == b || removed_set.contains(x))
        });
        match hit {
            Some(st) => {
                witnessed += 1;
                let target = n_of(st.k + 1);
                let mut rest = state.b_upto(st.k, target);
                for x in removed.iter().chain([&b]) {
                    rest.remove(*x);
                }
                let reps = rep_count(&rest, target);
                if reps != 0 {
                    r.violation(|| {
                        format!("b={b}: G_{} misses B' minus b yet {target} has {reps} representations there", st.k)
                    });
                }
                r.note(format!("b={b}: G_{} = {:?} misses B' minus b", st.k, st.g));
            }
            None => r.note(format!("b={b}: no stage up to {} isolates it", state.kmax())),
        }
    }
    r.metric("sampled", sampled.len() as u64);
    r.metric("witnessed", witnessed);
    if witnessed == 0 && r.status == Status::Pass {
        r.status = Status::Inconclusive;
    }
}

/// Exact-rational integer members of `(a·N/d, b·N/d)` restricted to color `c`.
fn colored_interval(
    state: &ConstructionState,
    n: u64,
    (a, b, d): (i128, i128, i128),
    c: Color,
) -> Result<Vec<u64>> {
    let iv = OpenRationalInterval::scaled(n, a, b, d)?;
    let set = integers_in(&iv, state.universe());
    Ok(set.iter().filter(|&x| state.coloring.is(x, c)).collect())
}

/// The five containments of the coverage argument at stage `k`, for both
/// `(X_1, B)` and `(X_2, C)`.
pub fn check_prop_random_containments(state: &ConstructionState, ks: &[u64]) -> CheckResult {
    let mut r = CheckResult::new("containments", window_ks(ks));
    let parts: [(&str, (i128, i128, i128)); 4] = [
        ("(N/24, 3N/64)", (8, 9, 192)),
        ("(2N/3, 3N/4)", (8, 9, 12)),
        ("(4N/3, 2N)", (4, 6, 3)),
        ("(8N/3, 3N)", (8, 9, 3)),
    ];
    for &k in ks {
        if k < 4 {
            r.note(format!("k={k} skipped: needs k >= 4"));
            continue;
        }
        let n = n_of(k);
        let limit = 4 * n;
        let a_prev = state.a_upto(k - 1, limit);
        let mut checked = 0u64;
        for (color, label, target) in [
            (Color::One, "B", state.b_upto(k, limit)),
            (Color::Two, "C", state.c_upto(k, limit)),
        ] {
            for (name, frac) in parts {
                let xs = colored_interval(state, n, frac, color).unwrap_or_default();
                checked += xs.len() as u64;
                for x in xs.into_iter().filter(|&x| !target.contains(x)) {
                    r.violation(|| format!("k={k}: {x} in X{}{name} but not in {label}({k})", color.index()));
                }
            }
            let quarter = colored_interval(state, n, (1, 3, 4), Color::Three).unwrap_or_default();
            for y in quarter {
                let x = limit - y;
                if a_prev.contains(y) || !state.coloring.is(x, color) {
                    continue;
                }
                checked += 1;
                if !target.contains(x) {
                    r.violation(|| format!("k={k}: reflected {x} = 4N - {y} missing from {label}({k})"));
                }
            }
        }
        r.metric(format!("checked_k{k:02}"), checked);
    }
    r
}

/// `(max, cardinality, ascending elements)`.
fn rank_key(s: &[u64]) -> (u64, usize, Vec<u64>) {
    (*s.last().unwrap_or(&0), s.len(), s.to_vec())
}

/// Is `s` (ascending) `i`-eligible for some `i <= k`? Checked from the
/// definition against `B(i-1)`, `C(i-1)`.
pub fn cumulatively_eligible(state: &ConstructionState, s: &[u64], k: u64) -> Option<u64> {
    let params = state.params();
    let (&first, &last) = (s.first()?, s.last()?);
    (1..=k).find(|&i| {
        let n_i = n_of(i);
        if s.len() as u64 != params.phi(i) || first < params.psi(i) || last > n_i {
            return false;
        }
        let b = state.b_upto(i - 1, n_i + 1);
        let c = state.c_upto(i - 1, n_i + 1);
        match params.mode() {
            Mode::Decomposable => {
                s.iter().all(|&x| b.contains(x) || c.contains(x))
                    && s.iter().any(|&x| b.contains(x))
                    && s.iter().any(|&x| c.contains(x))
            }
            _ => s.iter().all(|&x| b.contains(x)),
        }
    })
}

/// Least-rank unseen cumulatively eligible set by exhaustive enumeration of
/// subsets of `A(k-1) ∩ [1, bound]`; `None` if the space exceeds the limit.
pub fn brute_force_best(
    state: &ConstructionState,
    k: u64,
    seen: &BTreeSet<Vec<u64>>,
    bound: u64,
) -> Option<Option<Vec<u64>>> {
    let params = state.params();
    let pool: Vec<u64> = state.a_upto(k - 1, bound + 1).iter().filter(|&x| x >= 1).collect();
    let sizes: BTreeSet<u64> = (1..=k).map(|i| params.phi(i)).collect();
    let space: u64 = sizes
        .iter()
        .map(|&c| crate::selector::binomial_capped(pool.len() as u64, c, u64::MAX))
        .fold(0u64, |a, b| a.saturating_add(b));
    if space > BRUTE_FORCE_SPACE {
        return None;
    }
    let mut best: Option<Vec<u64>> = None;
    let mut consider = |cand: &[u64]| {
        if !seen.contains(cand)
            && best.as_deref().is_none_or(|b| rank_key(cand) < rank_key(b))
            && cumulatively_eligible(state, cand, k).is_some()
        {
            best = Some(cand.to_vec());
        }
    };
    for &c in &sizes {
        combinations(&pool, c as usize, &mut Vec::new(), 0, &mut consider);
    }
    Some(best)
}

fn combinations(pool: &[u64], c: usize, cur: &mut Vec<u64>, from: usize, f: &mut impl FnMut(&[u64])) {
    if cur.len() == c {
        f(cur);
        return;
    }
    for i in from..pool.len() {
        if pool.len() - i < c - cur.len() {
            break;
        }
        cur.push(pool[i]);
        combinations(pool, c, cur, i + 1, f);
        cur.pop();
    }
}

/// Activation audit plus, per stage, eligibility, novelty and rank minimality
/// of `F_k` (brute force for `k <= brute_max`, ranked search beyond).
pub fn selection_audit(state: &ConstructionState, brute_max: u64) -> CheckResult {
    let mut r = CheckResult::new("selection_audit", format!("k in [1, {}]", state.kmax()));
    let params = state.params();
    if state.config.ignore_selection {
        r.status = Status::Inconclusive;
        r.note("run built without selection".into());
        return r;
    }
    if params.mode() == Mode::IndecomposableSpecial {
        fiber_audit(state, &mut r);
        return r;
    }

    let mut activation = None;
    for st in &state.stages {
        let k = st.k;
        let limit = n_of(k) + 1;
        let b = state.b_upto(k - 1, limit);
        let c = state.c_upto(k - 1, limit);
        let input = SelectionInput {
            k,
            params: &params,
            b_prev: &b,
            c_prev: &c,
        };
        let count = count_k_eligible(&input, state.config.count_cap);
        if st.eligible_count != Some(count) {
            r.violation(|| format!("k={k}: recorded count {:?} but recount gives {count}", st.eligible_count));
        }
        if activation.is_none() && count >= k {
            activation = Some(k);
        }
        match activation {
            Some(a) if count < k => {
                r.violation(|| format!("k={k}: active since {a} but only {count} eligible sets"))
            }
            None if !st.f.is_empty() => {
                r.violation(|| format!("k={k}: F_k = {:?} selected before activation", st.f))
            }
            Some(_) if st.f.is_empty() => r.violation(|| format!("k={k}: active but F_k is empty")),
            _ => {}
        }
    }
    r.metric("activation", activation.map_or(Value::Null, Value::from));
    if activation != state.activation {
        r.violation(|| format!("recorded activation {:?} differs from recount {activation:?}", state.activation));
    }

    let mut seen: BTreeSet<Vec<u64>> = BTreeSet::new();
    let mut brute_checked = 0u64;
    let mut brute_skipped = 0u64;
    for st in &state.stages {
        let k = st.k;
        if st.f.is_empty() {
            continue;
        }
        if cumulatively_eligible(state, &st.f, k).is_none() {
            r.violation(|| format!("k={k}: F_k = {:?} is not cumulatively eligible", st.f));
        }
        if seen.contains(&st.f) {
            r.violation(|| format!("k={k}: F_k = {:?} already occurred", st.f));
        }
        let brute = (k <= brute_max)
            .then(|| brute_force_best(state, k, &seen, *st.f.last().unwrap()))
            .flatten();
        match brute {
            Some(best) => {
                brute_checked += 1;
                if best.as_deref() != Some(st.f.as_slice()) {
                    r.violation(|| format!("k={k}: F_k = {:?} but exhaustive search prefers {best:?}", st.f));
                }
            }
            None => {
                if k <= brute_max {
                    brute_skipped += 1;
                }
                let limit = n_of(k) + 1;
                let b = state.b_upto(k - 1, limit);
                let c = state.c_upto(k - 1, limit);
                let input = SelectionInput {
                    k,
                    params: &params,
                    b_prev: &b,
                    c_prev: &c,
                };
                match best_unseen(&input, &seen, 0, state.config.candidate_cap) {
                    Ok(Some(best)) if best.elements == st.f => {}
                    Ok(other) => r.violation(|| {
                        format!("k={k}: F_k = {:?} but ranked search gives {:?}", st.f, other.map(|b| b.elements))
                    }),
                    Err(e) => r.violation(|| format!("k={k}: ranked search failed: {e}")),
                }
            }
        }
        seen.insert(st.f.clone());
    }
    r.metric("brute_force_stages", brute_checked);
    r.metric("brute_force_skipped", brute_skipped);
    r
}

fn fiber_audit(state: &ConstructionState, r: &mut CheckResult) {
    let b_len = |k: u64| state.b_cum.count_range(0, n_of(k + 1));
    let k0 = (1..=state.kmax()).find(|&s| b_len(s) >= 1);
    r.metric("k0", k0.map_or(Value::Null, Value::from));
    let Some(k0) = k0 else {
        r.status = Status::Inconclusive;
        return;
    };
    for k in k0..=state.kmax() {
        if b_len(k) <= k - k0 {
            r.violation(|| format!("|B({k})| = {} is not above {}", b_len(k), k - k0));
        }
    }
    let mut seq: Vec<u64> = Vec::new();
    for st in &state.stages {
        let k = st.k;
        if k <= k0 {
            if !st.g.is_empty() {
                r.violation(|| format!("k={k}: G_k = {:?} before k0 = {k0}", st.g));
            }
            continue;
        }
        let j = fiber_f(k - k0);
        while (seq.len() as u64) < j {
            let idx = seq.len() as u64 + 1;
            let after = seq.last().map_or(0, |&b| b + 1);
            match state.b_upto(idx + k0 - 1, n_of(idx + k0)).iter_range(after, u64::MAX).next() {
                Some(b) => seq.push(b),
                None => {
                    r.violation(|| format!("k={k}: b_{idx} does not exist"));
                    return;
                }
            }
        }
        let want = seq[(j - 1) as usize];
        if st.g != [want] || !st.h.is_empty() {
            r.violation(|| format!("k={k}: G_k = {:?}, expected {{b_{j}}} = {{{want}}}", st.g));
        }
    }
    if seq != state.b_sequence {
        r.violation(|| format!("recorded b-sequence {:?} differs from recomputed {seq:?}", state.b_sequence));
    }
    r.metric("b_sequence", json!(seq));
}

/// Which checks to run and over which stages.
#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub kmin: u64,
    pub property4_kmin: u64,
    pub containments_kmin: u64,
    pub brute_max: u64,
    pub checks: Vec<String>,
}

pub const CHECK_NAMES: [&str; 8] = [
    "structure",
    "property3",
    "property4",
    "basis_window",
    "deletion_probe",
    "minimal_witness",
    "containments",
    "selection_audit",
];

impl VerifyOptions {
    pub fn for_state(state: &ConstructionState) -> Self {
        let kmin = state.config.kmin;
        VerifyOptions {
            kmin,
            property4_kmin: kmin,
            containments_kmin: kmin.max(4),
            brute_max: 6,
            checks: CHECK_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Runs the selected checks in a fixed order.
pub fn verify_all(state: &ConstructionState, opts: &VerifyOptions) -> Vec<CheckResult> {
    let kmax = state.kmax();
    let ks = stage_range(state, opts.kmin, kmax);
    let mut out = Vec::new();
    for name in CHECK_NAMES {
        if !opts.checks.iter().any(|c| c == name) {
            continue;
        }
        out.push(match name {
            "structure" => check_structure(state),
            "property3" => check_property3(state, &ks),
            "property4" => check_property4(state, &stage_range(state, opts.property4_kmin, kmax)),
            "basis_window" => check_basis_windows(state, &ks),
            "deletion_probe" => deletion_probe(state, &default_subbasis(state), &ks),
            "minimal_witness" => minimal_witness_check(state),
            "containments" => {
                check_prop_random_containments(state, &stage_range(state, opts.containments_kmin, kmax))
            }
            _ => selection_audit(state, opts.brute_max),
        });
    }
    out
}

