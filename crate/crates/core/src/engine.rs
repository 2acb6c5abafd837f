//! The staged randomized construction.
//!
//! Stage `k` works at scale `N = N_k = 4^(k+1)`. It first asks the selection
//! mechanism for `G_k`, `H_k`, then assembles
//!
//! ```text
//! B_k = ((4N/3, 2N) ∪ (8N/3, 3N) ∪ (4N - ((0, N) \ A(k-1)))) ∩ X_1(0, 4N)
//! C_k = the same with X_2
//! ```
//!
//! and extends `B(k) = B(k-1) ∪ B_k ∪ (4N - G_k)`, `C(k)` likewise with `H_k`.

use serde::{Deserialize, Serialize};

use crate::coloring::{Color, Coloring};
use crate::error::{Error, Result};
use crate::intset::{integers_in, IntegerSet, OpenRationalInterval};
use crate::seed;
use crate::selector::{
    n_index, CaseParams, FiberSelector, Mode, NullSelector, SelectionInput, SelectionMechanism,
    SelectionMeta, StageAuditInfo, StandardSelector,
};

pub use crate::selector::n_index as stage_scale;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 42;

/// Largest supported `kmax`; the coloring of `[0, 4·N_kmax]` is held in memory.
pub const MAX_KMAX: u64 = 12;

/// `⌊n·num/den⌋` in exact integer arithmetic.
pub fn h(n: u64, alpha_num: u64, alpha_den: u64) -> u64 {
    assert!(alpha_den > 0, "alpha denominator must be positive");
    (n as u128 * alpha_num as u128 / alpha_den as u128) as u64
}

/// Deliberate corruptions used to show that each check can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Copy the least element of the last `B_k` into `C`.
    Overlap,
    /// Add `3N/2` and `5N/2` to the last `B_k`, a representation of `4N` avoiding `F_k`.
    StrayPair,
    /// Remove `B ∩ (8N/3, 4N)` at the last stage.
    DropBlock,
    /// Remove the reflected part `B_k ∩ (3N, 4N)` at the last stage.
    DropReflected,
    /// Pass over the best candidate at the stage where selection activates.
    NonMinimalSelection,
}

impl Fault {
    pub const ALL: [Fault; 5] = [
        Fault::Overlap,
        Fault::StrayPair,
        Fault::DropBlock,
        Fault::DropReflected,
        Fault::NonMinimalSelection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Fault::Overlap => "overlap",
            Fault::StrayPair => "stray-pair",
            Fault::DropBlock => "drop-block",
            Fault::DropReflected => "drop-reflected",
            Fault::NonMinimalSelection => "non-minimal-selection",
        }
    }

    pub fn parse(s: &str) -> Result<Fault> {
        Fault::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown fault {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub case: CaseParams,
    pub kmax: u64,
    pub seed: u64,
    pub alpha_num: u64,
    pub alpha_den: u64,
    pub rho: u64,
    pub kmin: u64,
    pub candidate_cap: u64,
    pub count_cap: u64,
    /// Build with no selection at all (membership profiles).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ignore_selection: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inject: Option<Fault>,
}

impl RunConfig {
    pub fn new(case: CaseParams, kmax: u64, seed: u64) -> Self {
        RunConfig {
            case,
            kmax,
            seed,
            alpha_num: 1,
            alpha_den: 100_000_000,
            rho: 100,
            kmin: 4,
            candidate_cap: 1_000_000,
            count_cap: 1_000_000_000_000_000_000,
            ignore_selection: false,
            inject: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kmax < 2 || self.kmax > MAX_KMAX {
            return Err(Error::Config(format!(
                "kmax must lie in [2, {MAX_KMAX}], got {}",
                self.kmax
            )));
        }
        if self.alpha_den == 0 {
            return Err(Error::Config("alpha denominator must be positive".into()));
        }
        if self.rho == 0 {
            return Err(Error::Config("rho must be at least 1".into()));
        }
        if self.kmin == 0 {
            return Err(Error::Config("kmin must be at least 1".into()));
        }
        Ok(())
    }
}

/// Everything produced at stage `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageRecord {
    pub k: u64,
    pub n_k: u64,
    pub b_k: IntegerSet,
    pub c_k: IntegerSet,
    pub f: Vec<u64>,
    pub g: Vec<u64>,
    pub h: Vec<u64>,
    pub meta: Option<SelectionMeta>,
    pub eligible_count: Option<u64>,
}

impl StageRecord {
    pub fn check_invariants(&self) -> Result<()> {
        let hi = 4 * self.n_k;
        for (name, s) in [("B_k", &self.b_k), ("C_k", &self.c_k)] {
            if let Some(x) = s.iter().find(|&x| x <= self.n_k || x >= hi) {
                return Err(Error::Internal(format!(
                    "{name} element {x} of stage {} outside ({}, {hi})",
                    self.k, self.n_k
                )));
            }
        }
        if let Some(&x) = self.f.iter().find(|&&x| x > self.n_k) {
            return Err(Error::HypothesisViolation {
                stage: self.k,
                reason: format!("F_k element {x} exceeds N_k = {}", self.n_k),
            });
        }
        let mut gh: Vec<u64> = self.g.iter().chain(&self.h).copied().collect();
        gh.sort_unstable();
        let before = gh.len();
        gh.dedup();
        if gh.len() != before || gh != self.f {
            return Err(Error::HypothesisViolation {
                stage: self.k,
                reason: "F_k is not the disjoint union of G_k and H_k".into(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ConstructionState {
    pub config: RunConfig,
    pub coloring: Coloring,
    pub stages: Vec<StageRecord>,
    /// `B(kmax)` on the universe `[0, 4·N_kmax]`.
    pub b_cum: IntegerSet,
    pub c_cum: IntegerSet,
    /// First stage with selection active, if any.
    pub activation: Option<u64>,
    /// Fiber selector sequence `b_1 < b_2 < ...` (special case only).
    pub b_sequence: Vec<u64>,
}

impl ConstructionState {
    pub fn params(&self) -> CaseParams {
        self.config.case
    }

    pub fn kmax(&self) -> u64 {
        self.config.kmax
    }

    pub fn universe(&self) -> u64 {
        self.b_cum.limit()
    }

    pub fn stage(&self, k: u64) -> &StageRecord {
        &self.stages[(k - 1) as usize]
    }

    pub fn a_cum(&self) -> IntegerSet {
        self.b_cum.union(&self.c_cum)
    }

    /// `B(k) = B ∩ [0, N_{k+1})` re-homed to `limit` (`k = 0` gives `∅`).
    pub fn b_upto(&self, k: u64, limit: u64) -> IntegerSet {
        upto(&self.b_cum, k, limit)
    }

    pub fn c_upto(&self, k: u64, limit: u64) -> IntegerSet {
        upto(&self.c_cum, k, limit)
    }

    pub fn a_upto(&self, k: u64, limit: u64) -> IntegerSet {
        self.b_upto(k, limit).union(&self.c_upto(k, limit))
    }

    /// The set the case treats as its basis `A`, up to stage `k`.
    pub fn basis_upto(&self, k: u64, limit: u64) -> IntegerSet {
        match self.params().a_choice() {
            crate::selector::AChoice::BUnionC => self.a_upto(k, limit),
            crate::selector::AChoice::B => self.b_upto(k, limit),
        }
    }
}

fn upto(s: &IntegerSet, k: u64, limit: u64) -> IntegerSet {
    let bound = if k == 0 { 0 } else { n_index(k + 1).unwrap_or(u64::MAX) };
    let mut out = s.with_limit(bound.min(s.limit()));
    if limit != out.limit() {
        out = out.with_limit(limit);
    }
    out
}

/// The fixed (selection-independent) skeleton `(4N/3, 2N) ∪ (8N/3, 3N) ∪ (4N - ((0, N) \ a_prev))`.
pub fn stage_skeleton(n: u64, a_prev: &IntegerSet) -> Result<IntegerSet> {
    let limit = 4 * n;
    let mut base = integers_in(&OpenRationalInterval::scaled(n, 4, 6, 3)?, limit);
    base.union_with(&integers_in(&OpenRationalInterval::scaled(n, 8, 9, 3)?, limit));
    for x in 1..n {
        if !a_prev.contains(x) {
            base.insert(limit - x);
        }
    }
    Ok(base)
}

fn mechanism(config: &RunConfig) -> Box<dyn SelectionMechanism> {
    if config.ignore_selection {
        return Box::new(NullSelector);
    }
    match config.case.mode() {
        Mode::IndecomposableSpecial => Box::new(FiberSelector::new()),
        _ => {
            let s = StandardSelector::new(config.count_cap, config.candidate_cap);
            if config.inject == Some(Fault::NonMinimalSelection) {
                Box::new(s.skipping_first())
            } else {
                Box::new(s)
            }
        }
    }
}

/// Runs stages `1..=kmax`.
pub fn run(config: &RunConfig) -> Result<ConstructionState> {
    config.validate()?;
    let params = config.case;
    let universe = 4 * n_index(config.kmax)? + 1;
    let coloring = Coloring::new(seed::derive(config.seed, seed::COLORING, &[]), universe);
    let x1 = coloring.class_in(Color::One, 0, universe, universe);
    let x2 = coloring.class_in(Color::Two, 0, universe, universe);

    let mut selector = mechanism(config);
    let mut b_cum = IntegerSet::new(universe);
    let mut c_cum = IntegerSet::new(universe);
    let mut stages = Vec::with_capacity(config.kmax as usize);
    let mut audit = Vec::with_capacity(config.kmax as usize);

    for k in 1..=config.kmax {
        let n = n_index(k)?;
        let input = SelectionInput {
            k,
            params: &params,
            b_prev: &b_cum,
            c_prev: &c_cum,
        };
        let sel = selector.select(&input)?;
        check_hypothesis(k, n, &sel.g, &sel.h, &b_cum, &c_cum)?;

        let a_prev = b_cum.union(&c_cum);
        let skeleton = stage_skeleton(n, &a_prev)?;
        let b_k = skeleton.intersection(&x1);
        let c_k = skeleton.intersection(&x2);

        b_cum.union_with(&b_k);
        c_cum.union_with(&c_k);
        for &x in &sel.g {
            b_cum.insert(4 * n - x);
        }
        for &x in &sel.h {
            c_cum.insert(4 * n - x);
        }

        audit.push(StageAuditInfo {
            k,
            eligible_count: sel.eligible_count,
            b_len: b_cum.len(),
        });
        stages.push(StageRecord {
            k,
            n_k: n,
            b_k,
            c_k,
            f: sel.f(),
            g: sel.g,
            h: sel.h,
            meta: sel.meta,
            eligible_count: sel.eligible_count,
        });
    }
    selector.audit(&audit)?;

    let mut state = ConstructionState {
        config: config.clone(),
        coloring,
        stages,
        b_cum,
        c_cum,
        activation: selector.activation(),
        b_sequence: selector.b_sequence().to_vec(),
    };
    if let Some(fault) = config.inject {
        inject_fault(&mut state, fault);
    }
    Ok(state)
}

fn check_hypothesis(
    k: u64,
    n: u64,
    g: &[u64],
    h: &[u64],
    b_prev: &IntegerSet,
    c_prev: &IntegerSet,
) -> Result<()> {
    let violation = |reason: String| Err(Error::HypothesisViolation { stage: k, reason });
    if let Some(&x) = g.iter().chain(h).find(|&&x| x > n || x == 0) {
        return violation(format!("F_k element {x} outside [1, N_k = {n}]"));
    }
    if let Some(&x) = g.iter().find(|x| h.contains(x)) {
        return violation(format!("{x} lies in both G_k and H_k"));
    }
    if let Some(&x) = g.iter().find(|&&x| !b_prev.contains(x)) {
        return violation(format!("G_k element {x} is not in B(k-1)"));
    }
    if let Some(&x) = h.iter().find(|&&x| !c_prev.contains(x)) {
        return violation(format!("H_k element {x} is not in C(k-1)"));
    }
    Ok(())
}

/// Applies a post-construction fault at the last stage. Selection faults act
/// during the run and are a no-op here.
pub fn inject_fault(state: &mut ConstructionState, fault: Fault) {
    let k = state.kmax();
    let n = state.stage(k).n_k;
    let idx = (k - 1) as usize;
    match fault {
        Fault::Overlap => {
            if let Some(x) = state.stages[idx].b_k.min() {
                state.stages[idx].c_k.insert(x);
                state.c_cum.insert(x);
            }
        }
        Fault::StrayPair => {
            for x in [3 * n / 2, 5 * n / 2] {
                state.stages[idx].b_k.insert(x);
                state.stages[idx].c_k.remove(x);
                state.b_cum.insert(x);
                state.c_cum.remove(x);
            }
        }
        Fault::DropBlock => {
            let lo = 8 * n / 3 + 1;
            for x in lo..4 * n {
                state.stages[idx].b_k.remove(x);
                state.b_cum.remove(x);
            }
        }
        Fault::DropReflected => {
            for x in 3 * n + 1..4 * n {
                if state.stages[idx].b_k.remove(x) {
                    state.b_cum.remove(x);
                }
            }
        }
        Fault::NonMinimalSelection => {}
    }
}
