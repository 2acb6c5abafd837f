//! Selection mechanisms producing the per-stage sets `G_k`, `H_k`.
//!
//! A mechanism sees only the cumulative sets `B(k-1)`, `C(k-1)` (which
//! already encode every earlier `B_i`, `C_i`, `G_i`, `H_i`) and returns
//! `F_k = G_k ∪ H_k`. Three mechanisms exist: the registry-based minimal-rank
//! selector used by seven of the eight cases, the fiber-function selector of
//! the remaining indecomposable case, and a null selector that never selects.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intset::IntegerSet;

/// `N_i = 4^(i+1)`.
pub fn n_index(i: u64) -> Result<u64> {
    if i == 0 {
        return Err(Error::Config("stage indices start at 1".into()));
    }
    u32::try_from(i + 1)
        .ok()
        .and_then(|e| 4u64.checked_pow(e))
        .ok_or_else(|| Error::Config(format!("N_{i} = 4^{} overflows 64 bits", i + 1)))
}

/// Smallest stage `i >= 1` with `x < N_i`.
pub fn first_stage_above(x: u64) -> u64 {
    let mut i = 1;
    while i < 31 && 4u64.pow(i as u32 + 1) <= x {
        i += 1;
    }
    i
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiKind {
    Identity,
    Two,
    One,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiKind {
    One,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Decomposable,
    Indecomposable,
    IndecomposableSpecial,
}

/// Which set plays the role of the basis `A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AChoice {
    BUnionC,
    B,
}

/// One row of the eight-case table, keyed by the truth values of
/// (P1) thin representations, (P2) decomposability, (P3) minimal subbasis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CaseParams {
    pub p1: bool,
    pub p2: bool,
    pub p3: bool,
}

impl CaseParams {
    pub const ALL: [&'static str; 8] = ["TTF", "FTF", "TTT", "FTT", "TFF", "FFF", "TFT", "FFT"];

    pub fn new(p1: bool, p2: bool, p3: bool) -> Self {
        CaseParams { p1, p2, p3 }
    }

    pub fn all() -> Vec<CaseParams> {
        Self::ALL.iter().map(|s| s.parse().unwrap()).collect()
    }

    pub fn name(&self) -> String {
        [self.p1, self.p2, self.p3]
            .iter()
            .map(|&b| if b { 'T' } else { 'F' })
            .collect()
    }

    pub fn phi_kind(&self) -> PhiKind {
        match (self.p1, self.p2) {
            (true, _) => PhiKind::Identity,
            (false, true) => PhiKind::Two,
            (false, false) => PhiKind::One,
        }
    }

    pub fn psi_kind(&self) -> PsiKind {
        if self.p3 {
            PsiKind::One
        } else {
            PsiKind::Identity
        }
    }

    pub fn mode(&self) -> Mode {
        match (self.p1, self.p2, self.p3) {
            (_, true, _) => Mode::Decomposable,
            (false, false, true) => Mode::IndecomposableSpecial,
            _ => Mode::Indecomposable,
        }
    }

    pub fn a_choice(&self) -> AChoice {
        if self.p2 {
            AChoice::BUnionC
        } else {
            AChoice::B
        }
    }

    pub fn phi(&self, k: u64) -> u64 {
        match self.phi_kind() {
            PhiKind::Identity => k,
            PhiKind::Two => 2,
            PhiKind::One => 1,
        }
    }

    pub fn psi(&self, k: u64) -> u64 {
        match self.psi_kind() {
            PsiKind::One => 1,
            PsiKind::Identity => k,
        }
    }
}

impl fmt::Display for CaseParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for CaseParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits: Vec<Option<bool>> = s
            .chars()
            .map(|c| match c {
                'T' => Some(true),
                'F' => Some(false),
                _ => None,
            })
            .collect();
        match bits.as_slice() {
            [Some(a), Some(b), Some(c)] => Ok(CaseParams::new(*a, *b, *c)),
            _ => Err(Error::Config(format!(
                "unknown case {s:?}; expected one of {}",
                Self::ALL.join(", ")
            ))),
        }
    }
}

impl Serialize for CaseParams {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for CaseParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `C(n, r)`, saturating at `cap`.
pub fn binomial_capped(n: u64, r: u64, cap: u64) -> u64 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for j in 1..=r as u128 {
        // C(n-r+j, j) is non-decreasing in j, so an early cap is final
        acc = acc * (n as u128 - r as u128 + j) / j;
        if acc >= cap as u128 {
            return cap;
        }
    }
    acc as u64
}

/// What a mechanism may look at when choosing `F_k`.
#[derive(Clone, Copy)]
pub struct SelectionInput<'a> {
    pub k: u64,
    pub params: &'a CaseParams,
    /// `B(k-1)`.
    pub b_prev: &'a IntegerSet,
    /// `C(k-1)`.
    pub c_prev: &'a IntegerSet,
}

/// Number of `k`-eligible sets (exact stage `k`, not cumulative), saturating at `cap`.
pub fn count_k_eligible(input: &SelectionInput<'_>, cap: u64) -> u64 {
    let k = input.k;
    let Ok(n_k) = n_index(k) else { return 0 };
    let (phi, psi) = (input.params.phi(k), input.params.psi(k));
    let b = input.b_prev.count_range(psi, n_k + 1);
    let c = input.c_prev.count_range(psi, n_k + 1);
    let decomposable = input.params.mode() == Mode::Decomposable;
    eligible_count(decomposable, b, c, phi, cap)
}

/// `phi`-subsets of `b` B-labeled and `c` C-labeled candidates; decomposable
/// sets need both labels, the others use B-labeled candidates only.
pub fn eligible_count(decomposable: bool, b: u64, c: u64, phi: u64, cap: u64) -> u64 {
    if !decomposable {
        return binomial_capped(b, phi, cap);
    }
    let mut total = 0u64;
    for j in 1..phi {
        let term = binomial_capped(b, j, cap).saturating_mul(binomial_capped(c, phi - j, cap));
        total = total.saturating_add(term).min(cap);
    }
    total
}

/// Provenance of a selected `F_k`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionMeta {
    /// Smallest `i <= k` at which `F_k` is `i`-eligible (registry selector).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eligible_stage: Option<u64>,
    /// Already-seen candidates passed over before `F_k` in rank order.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub skipped: Option<u64>,
    /// Fiber value `F(k - k0)` (fiber selector).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fiber_index: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Selection {
    pub g: Vec<u64>,
    pub h: Vec<u64>,
    pub meta: Option<SelectionMeta>,
    /// Stage-`k` eligibility count used for activation, if the mechanism counts.
    pub eligible_count: Option<u64>,
    pub active: bool,
}

impl Selection {
    pub fn f(&self) -> Vec<u64> {
        let mut f: Vec<u64> = self.g.iter().chain(&self.h).copied().collect();
        f.sort_unstable();
        f
    }
}

pub trait SelectionMechanism {
    fn select(&mut self, input: &SelectionInput<'_>) -> Result<Selection>;

    /// Post-run check of the activation index.
    fn audit(&self, stages: &[StageAuditInfo]) -> Result<()>;

    /// First stage at which selection was active (`k0 + 1` for the fiber
    /// selector, whose `k0` is the last idle stage).
    fn activation(&self) -> Option<u64>;

    /// The fiber selector's `b_1 < b_2 < ...`; empty for the others.
    fn b_sequence(&self) -> &[u64] {
        &[]
    }
}

/// Per-stage facts the audits need after the run.
#[derive(Clone, Debug)]
pub struct StageAuditInfo {
    pub k: u64,
    pub eligible_count: Option<u64>,
    /// `|B(k)|` after the stage.
    pub b_len: u64,
}

/// `G_k = F ∩ B(k-1)`, `H_k = F ∩ C(k-1)`; in the indecomposable modes `G = F`.
pub fn split_f(input: &SelectionInput<'_>, f: &[u64]) -> Result<(Vec<u64>, Vec<u64>)> {
    match input.params.mode() {
        Mode::Decomposable => {
            let mut g = Vec::new();
            let mut h = Vec::new();
            for &x in f {
                if input.b_prev.contains(x) {
                    g.push(x);
                } else if input.c_prev.contains(x) {
                    h.push(x);
                } else {
                    return Err(Error::Internal(format!(
                        "selected element {x} lies outside B(k-1) ∪ C(k-1)"
                    )));
                }
            }
            Ok((g, h))
        }
        _ => {
            if let Some(&x) = f.iter().find(|&&x| !input.b_prev.contains(x)) {
                return Err(Error::Internal(format!(
                    "selected element {x} lies outside B(k-1)"
                )));
            }
            Ok((f.to_vec(), Vec::new()))
        }
    }
}

/// The registry selector: once active, picks the unseen cumulatively
/// `k`-eligible set of least `(max, cardinality, lexicographic)` rank.
pub struct StandardSelector {
    registry: BTreeSet<Vec<u64>>,
    active_from: Option<u64>,
    count_cap: u64,
    candidate_cap: u64,
    skip_first_at_activation: bool,
}

impl StandardSelector {
    pub fn new(count_cap: u64, candidate_cap: u64) -> Self {
        StandardSelector {
            registry: BTreeSet::new(),
            active_from: None,
            count_cap,
            candidate_cap,
            skip_first_at_activation: false,
        }
    }

    /// Deliberately wrong variant for fault fixtures: passes over the best
    /// candidate at the activation stage.
    pub fn skipping_first(mut self) -> Self {
        self.skip_first_at_activation = true;
        self
    }

    pub fn active_from(&self) -> Option<u64> {
        self.active_from
    }

    pub fn registry(&self) -> &BTreeSet<Vec<u64>> {
        &self.registry
    }
}

impl SelectionMechanism for StandardSelector {
    fn select(&mut self, input: &SelectionInput<'_>) -> Result<Selection> {
        let count = count_k_eligible(input, self.count_cap);
        if self.active_from.is_none() && count >= input.k {
            self.active_from = Some(input.k);
        }
        let mut out = Selection {
            eligible_count: Some(count),
            ..Selection::default()
        };
        if self.active_from.is_none() {
            return Ok(out);
        }
        let skip = usize::from(self.skip_first_at_activation && self.active_from == Some(input.k));
        let found = best_unseen(input, &self.registry, skip, self.candidate_cap)?;
        let Some(best) = found else {
            return Err(Error::SelectionExhausted {
                stage: input.k,
                cap: self.candidate_cap,
            });
        };
        let (g, h) = split_f(input, &best.elements)?;
        self.registry.insert(best.elements);
        out.g = g;
        out.h = h;
        out.active = true;
        out.meta = Some(SelectionMeta {
            eligible_stage: Some(best.stage),
            skipped: Some(best.skipped),
            fiber_index: None,
        });
        Ok(out)
    }

    fn activation(&self) -> Option<u64> {
        self.active_from
    }

    fn audit(&self, stages: &[StageAuditInfo]) -> Result<()> {
        let Some(start) = self.active_from else {
            return Ok(());
        };
        for s in stages.iter().filter(|s| s.k >= start) {
            let c = s.eligible_count.unwrap_or(0);
            if c < s.k {
                return Err(Error::K0Violation {
                    stage: s.k,
                    reason: format!(
                        "selection activated at stage {start} but stage {} has only {c} eligible sets",
                        s.k
                    ),
                });
            }
        }
        Ok(())
    }
}

/// A cumulatively eligible set found by the ranked search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankedSet {
    pub elements: Vec<u64>,
    pub stage: u64,
    pub skipped: u64,
}

/// Stages `i <= k` at which a set with maximum `m` and `c` elements can be
/// `i`-eligible, summarized by the loosest lower bound `min ψ(i)` and the
/// least such `i`.
fn stage_window(params: &CaseParams, k: u64, m: u64, c: u64) -> Option<(u64, u64)> {
    let lo = first_stage_above(m).max(1);
    let mut best: Option<(u64, u64)> = None;
    for i in lo..=k {
        if params.phi(i) != c {
            continue;
        }
        let psi = params.psi(i);
        best = match best {
            None => Some((psi, i)),
            Some((p, s)) => Some((p.min(psi), s.min(i))),
        };
    }
    best
}

/// Least-rank unseen cumulatively `k`-eligible set, skipping the first
/// `skip` unseen hits (zero outside fault fixtures).
pub fn best_unseen(
    input: &SelectionInput<'_>,
    registry: &BTreeSet<Vec<u64>>,
    mut skip: usize,
    candidate_cap: u64,
) -> Result<Option<RankedSet>> {
    let params = input.params;
    let decomposable = params.mode() == Mode::Decomposable;
    // elements of B(k-1) are labeled true, of C(k-1) false
    let pool: Vec<(u64, bool)> = if decomposable {
        let mut v: Vec<(u64, bool)> = input
            .b_prev
            .iter()
            .map(|x| (x, true))
            .chain(input.c_prev.iter().map(|x| (x, false)))
            .collect();
        v.sort_unstable();
        v
    } else {
        input.b_prev.iter().map(|x| (x, true)).collect()
    };

    let mut cardinalities: Vec<u64> = (1..=input.k).map(|i| params.phi(i)).collect();
    cardinalities.sort_unstable();
    cardinalities.dedup();

    let mut examined = 0u64;
    let mut skipped = 0u64;
    for (top, &(m, m_label)) in pool.iter().enumerate() {
        for &c in &cardinalities {
            let Some((psi, stage)) = stage_window(params, input.k, m, c) else {
                continue;
            };
            let start = pool.partition_point(|&(x, _)| x < psi);
            if start > top || (c as usize) > top - start + 1 {
                continue;
            }
            let below = &pool[start..top];
            let mut search = Search {
                below,
                need: (c - 1) as usize,
                need_other: decomposable.then_some(!m_label),
                other_hits: 0,
                chosen: Vec::with_capacity(c as usize),
                top: m,
                stage: input.k,
                registry,
                skip: &mut skip,
                examined: &mut examined,
                skipped: &mut skipped,
                cap: candidate_cap,
            };
            if let Some(elements) = search.run(0)? {
                return Ok(Some(RankedSet {
                    elements,
                    stage,
                    skipped,
                }));
            }
        }
    }
    Ok(None)
}

struct Search<'a> {
    below: &'a [(u64, bool)],
    need: usize,
    /// In decomposable mode, the label that must still appear among the lower elements.
    need_other: Option<bool>,
    /// How many chosen elements carry that label.
    other_hits: usize,
    chosen: Vec<u64>,
    top: u64,
    stage: u64,
    registry: &'a BTreeSet<Vec<u64>>,
    skip: &'a mut usize,
    examined: &'a mut u64,
    skipped: &'a mut u64,
    cap: u64,
}

impl Search<'_> {
    fn run(&mut self, from: usize) -> Result<Option<Vec<u64>>> {
        let satisfied = self.need_other.is_none() || self.other_hits > 0;
        if self.chosen.len() == self.need {
            if !satisfied {
                return Ok(None);
            }
            *self.examined += 1;
            if *self.examined > self.cap {
                return Err(Error::SelectionExhausted {
                    stage: self.stage,
                    cap: self.cap,
                });
            }
            let mut set = self.chosen.clone();
            set.push(self.top);
            if self.registry.contains(&set) {
                *self.skipped += 1;
                return Ok(None);
            }
            if *self.skip > 0 {
                *self.skip -= 1;
                return Ok(None);
            }
            return Ok(Some(set));
        }
        let remaining = self.need - self.chosen.len();
        for idx in from..self.below.len() {
            if self.below.len() - idx < remaining {
                break;
            }
            if let Some(label) = self.need_other {
                if !satisfied && !self.below[idx..].iter().any(|&(_, l)| l == label) {
                    break;
                }
            }
            let (x, l) = self.below[idx];
            let counts = self.need_other == Some(l);
            self.chosen.push(x);
            self.other_hits += counts as usize;
            let hit = self.run(idx + 1)?;
            self.other_hits -= counts as usize;
            self.chosen.pop();
            if hit.is_some() {
                return Ok(hit);
            }
        }
        Ok(None)
    }
}

/// Triangular enumeration `1; 1,2; 1,2,3; ...` (1-based argument).
pub fn fiber_f(m: u64) -> u64 {
    assert!(m >= 1, "fiber function is defined on positive integers");
    // row r occupies positions r(r-1)/2 + 1 ..= r(r+1)/2
    let mut r = ((((8 * m as u128) as f64).sqrt() as u64).saturating_sub(1) / 2).max(1);
    while r * (r + 1) / 2 < m {
        r += 1;
    }
    while r > 1 && (r - 1) * r / 2 >= m {
        r -= 1;
    }
    m - (r - 1) * r / 2
}

/// The fiber selector: `G_k = {b_{F(k - k0)}}` for `k > k0`, where `k0` is
/// the first stage with `B(k0)` nonempty and `b_j` is the least element of
/// `B(j + k0 - 1)` above `b_{j-1}`.
#[derive(Default)]
pub struct FiberSelector {
    k0: Option<u64>,
    b_seq: Vec<u64>,
}

impl FiberSelector {
    pub fn new() -> Self {
        FiberSelector::default()
    }

    pub fn k0(&self) -> Option<u64> {
        self.k0
    }
}

impl SelectionMechanism for FiberSelector {
    fn select(&mut self, input: &SelectionInput<'_>) -> Result<Selection> {
        let k = input.k;
        if self.k0.is_none() {
            for s in 1..k {
                if input.b_prev.count_range(0, n_index(s + 1)?) >= 1 {
                    self.k0 = Some(s);
                    break;
                }
            }
        }
        let Some(k0) = self.k0.filter(|&k0| k > k0) else {
            return Ok(Selection::default());
        };
        let j = fiber_f(k - k0);
        while (self.b_seq.len() as u64) < j {
            let idx = self.b_seq.len() as u64 + 1;
            let bound = n_index(idx + k0)?;
            let after = self.b_seq.last().map_or(0, |&b| b + 1);
            let next = input.b_prev.iter_range(after, bound).next().ok_or_else(|| {
                Error::K0Violation {
                    stage: k,
                    reason: format!("B({}) has no element above b_{}", idx + k0 - 1, idx - 1),
                }
            })?;
            self.b_seq.push(next);
        }
        let b = self.b_seq[(j - 1) as usize];
        Ok(Selection {
            g: vec![b],
            h: Vec::new(),
            meta: Some(SelectionMeta {
                eligible_stage: None,
                skipped: None,
                fiber_index: Some(j),
            }),
            eligible_count: None,
            active: true,
        })
    }

    fn activation(&self) -> Option<u64> {
        self.k0.map(|k0| k0 + 1)
    }

    fn b_sequence(&self) -> &[u64] {
        &self.b_seq
    }

    fn audit(&self, stages: &[StageAuditInfo]) -> Result<()> {
        let Some(k0) = self.k0 else {
            return Ok(());
        };
        for s in stages.iter().filter(|s| s.k >= k0) {
            if s.b_len <= s.k - k0 {
                return Err(Error::K0Violation {
                    stage: s.k,
                    reason: format!("|B({})| = {} is not above {}", s.k, s.b_len, s.k - k0),
                });
            }
        }
        Ok(())
    }
}

/// Never selects; used where selection effects are deliberately ignored.
pub struct NullSelector;

impl SelectionMechanism for NullSelector {
    fn select(&mut self, _input: &SelectionInput<'_>) -> Result<Selection> {
        Ok(Selection::default())
    }

    fn audit(&self, _stages: &[StageAuditInfo]) -> Result<()> {
        Ok(())
    }

    fn activation(&self) -> Option<u64> {
        None
    }
}
