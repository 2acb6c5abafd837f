//! Dense finite sets of naturals and the additive kernels built on them.
//!
//! Every set carries an exclusive upper bound `limit`; members live in
//! `[0, limit)` and are stored one bit per integer. Sumsets and
//! representation counts are computed over these bitsets, switching to an
//! exact number-theoretic convolution once the quadratic cost gets large.

mod conv;
mod interval;
mod reps;

pub use conv::{cross_counts, self_counts};
pub use interval::{integers_in, OpenRationalInterval};
pub use reps::{
    rep_count, rep_count_windowed, rep_counts, rep_profile, sumset, windowed_floor, RepProfile,
};

use std::fmt;

use crate::error::{Error, Result};

const WORD: u64 = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntegerSet {
    limit: u64,
    words: Vec<u64>,
    len: u64,
}

impl IntegerSet {
    pub fn new(limit: u64) -> Self {
        IntegerSet {
            limit,
            words: vec![0; words_for(limit)],
            len: 0,
        }
    }

    /// All integers in `[lo, hi)` clipped to `[0, limit)`.
    pub fn range(lo: u64, hi: u64, limit: u64) -> Self {
        let mut s = IntegerSet::new(limit);
        let hi = hi.min(limit);
        if lo < hi {
            s.fill(lo, hi);
        }
        s
    }

    pub fn from_members<I: IntoIterator<Item = u64>>(limit: u64, members: I) -> Result<Self> {
        let mut s = IntegerSet::new(limit);
        for m in members {
            if m >= limit {
                return Err(Error::OutOfRange { value: m, limit });
            }
            s.insert(m);
        }
        Ok(s)
    }

    #[inline]
    pub fn limit(&self) -> u64 {
        self.limit
    }

    #[inline]
    pub fn len(&self) -> u64 {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn contains(&self, x: u64) -> bool {
        x < self.limit && self.words[(x / WORD) as usize] & (1 << (x % WORD)) != 0
    }

    /// Inserts `x`, returning whether it was absent.
    ///
    /// Panics if `x >= limit`.
    pub fn insert(&mut self, x: u64) -> bool {
        assert!(x < self.limit, "element {x} outside [0, {})", self.limit);
        let w = &mut self.words[(x / WORD) as usize];
        let bit = 1u64 << (x % WORD);
        let fresh = *w & bit == 0;
        *w |= bit;
        self.len += fresh as u64;
        fresh
    }

    pub fn remove(&mut self, x: u64) -> bool {
        if x >= self.limit {
            return false;
        }
        let w = &mut self.words[(x / WORD) as usize];
        let bit = 1u64 << (x % WORD);
        let present = *w & bit != 0;
        *w &= !bit;
        self.len -= present as u64;
        present
    }

    fn fill(&mut self, lo: u64, hi: u64) {
        for x in lo..hi {
            self.words[(x / WORD) as usize] |= 1 << (x % WORD);
        }
        self.len = self.recount();
    }

    pub fn iter(&self) -> Members<'_> {
        self.iter_range(0, self.limit)
    }

    /// Members in `[lo, hi)`, ascending.
    pub fn iter_range(&self, lo: u64, hi: u64) -> Members<'_> {
        let hi = hi.min(self.limit);
        let lo = lo.min(hi);
        let mut it = Members {
            words: &self.words,
            word_idx: (lo / WORD) as usize,
            current: 0,
            hi,
        };
        if lo < hi {
            it.current = self.words[it.word_idx] & (!0u64 << (lo % WORD));
        } else {
            it.word_idx = self.words.len();
        }
        it
    }

    pub fn min(&self) -> Option<u64> {
        self.iter().next()
    }

    pub fn max(&self) -> Option<u64> {
        self.words
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(i, &w)| i as u64 * WORD + 63 - w.leading_zeros() as u64)
    }

    pub fn to_vec(&self) -> Vec<u64> {
        self.iter().collect()
    }

    pub fn count_range(&self, lo: u64, hi: u64) -> u64 {
        let hi = hi.min(self.limit);
        if lo >= hi {
            return 0;
        }
        let (lw, hw) = ((lo / WORD) as usize, ((hi - 1) / WORD) as usize);
        let lo_mask = !0u64 << (lo % WORD);
        let hi_mask = !0u64 >> (63 - (hi - 1) % WORD);
        if lw == hw {
            return (self.words[lw] & lo_mask & hi_mask).count_ones() as u64;
        }
        let mut c = (self.words[lw] & lo_mask).count_ones() as u64;
        c += self.words[lw + 1..hw]
            .iter()
            .map(|w| w.count_ones() as u64)
            .sum::<u64>();
        c + (self.words[hw] & hi_mask).count_ones() as u64
    }

    /// Members in `[lo, hi)`; the limit is unchanged.
    pub fn restrict(&self, lo: u64, hi: u64) -> IntegerSet {
        let mut out = IntegerSet::new(self.limit);
        for x in self.iter_range(lo, hi) {
            out.insert(x);
        }
        out
    }

    /// Same members below `limit`, re-homed to the new bound.
    pub fn with_limit(&self, limit: u64) -> IntegerSet {
        let mut words = self.words.clone();
        words.resize(words_for(limit), 0);
        if !limit.is_multiple_of(WORD) {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (limit % WORD)) - 1;
            }
        }
        let mut s = IntegerSet { limit, words, len: 0 };
        s.len = s.recount();
        s
    }

    pub fn union(&self, other: &IntegerSet) -> IntegerSet {
        let limit = self.limit.max(other.limit);
        let mut out = self.with_limit(limit);
        out.union_with(other);
        out
    }

    /// In-place union. Members of `other` at or beyond `self.limit` extend the limit.
    pub fn union_with(&mut self, other: &IntegerSet) {
        if other.limit > self.limit {
            *self = self.with_limit(other.limit);
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
        self.len = self.recount();
    }

    pub fn intersection(&self, other: &IntegerSet) -> IntegerSet {
        let mut out = self.clone();
        for (i, w) in out.words.iter_mut().enumerate() {
            *w &= other.words.get(i).copied().unwrap_or(0);
        }
        out.len = out.recount();
        out
    }

    pub fn difference(&self, other: &IntegerSet) -> IntegerSet {
        let mut out = self.clone();
        for (i, w) in out.words.iter_mut().enumerate() {
            *w &= !other.words.get(i).copied().unwrap_or(0);
        }
        out.len = out.recount();
        out
    }

    /// Smallest common member, if any.
    pub fn first_common(&self, other: &IntegerSet) -> Option<u64> {
        self.words
            .iter()
            .zip(&other.words)
            .enumerate()
            .find(|(_, (a, b))| *a & *b != 0)
            .map(|(i, (a, b))| i as u64 * WORD + (a & b).trailing_zeros() as u64)
    }

    pub fn is_disjoint(&self, other: &IntegerSet) -> bool {
        self.first_common(other).is_none()
    }

    /// Smallest member of `self` that is not in `other`.
    pub fn first_missing_from(&self, other: &IntegerSet) -> Option<u64> {
        self.words
            .iter()
            .enumerate()
            .map(|(i, a)| (i, a & !other.words.get(i).copied().unwrap_or(0)))
            .find(|(_, d)| *d != 0)
            .map(|(i, d)| i as u64 * WORD + d.trailing_zeros() as u64)
    }

    pub fn is_subset(&self, other: &IntegerSet) -> bool {
        self.first_missing_from(other).is_none()
    }

    pub fn recount(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn check_invariants(&self) -> Result<()> {
        if self.words.len() != words_for(self.limit) {
            return Err(Error::Internal("word storage does not match limit".into()));
        }
        if let Some(m) = self.max() {
            if m >= self.limit {
                return Err(Error::OutOfRange { value: m, limit: self.limit });
            }
        }
        let n = self.recount();
        if n != self.len {
            return Err(Error::Internal(format!(
                "cached cardinality {} disagrees with recount {n}",
                self.len
            )));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Debug for IntegerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const SHOWN: usize = 16;
        let head: Vec<u64> = self.iter().take(SHOWN).collect();
        write!(f, "IntegerSet(limit={}, len={}, {:?}", self.limit, self.len, head)?;
        if self.len as usize > SHOWN {
            write!(f, "..")?;
        }
        write!(f, ")")
    }
}

pub struct Members<'a> {
    words: &'a [u64],
    word_idx: usize,
    current: u64,
    hi: u64,
}

impl Iterator for Members<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        loop {
            if self.current != 0 {
                let x = self.word_idx as u64 * WORD + self.current.trailing_zeros() as u64;
                if x >= self.hi {
                    self.word_idx = self.words.len();
                    self.current = 0;
                    return None;
                }
                self.current &= self.current - 1;
                return Some(x);
            }
            self.word_idx += 1;
            if self.word_idx >= self.words.len() || self.word_idx as u64 * WORD >= self.hi {
                self.word_idx = self.words.len();
                return None;
            }
            self.current = self.words[self.word_idx];
        }
    }
}

/// `{m - x : x in s, 0 <= m - x < limit}`.
pub fn reflect(s: &IntegerSet, m: u64, limit: u64) -> IntegerSet {
    let mut out = IntegerSet::new(limit);
    for x in s.iter_range(0, m.saturating_add(1)) {
        let y = m - x;
        if y < limit {
            out.insert(y);
        }
    }
    out
}

#[inline]
fn words_for(limit: u64) -> usize {
    limit.div_ceil(WORD) as usize
}

/// Up to 64 bits of `words` starting at bit `pos`; bits past the end read as 0.
#[inline]
pub(crate) fn bits_at(words: &[u64], pos: u64) -> u64 {
    let i = (pos / WORD) as usize;
    let off = pos % WORD;
    let lo = words.get(i).copied().unwrap_or(0);
    if off == 0 {
        return lo;
    }
    let hi = words.get(i + 1).copied().unwrap_or(0);
    (lo >> off) | (hi << (WORD - off))
}
