use super::conv::{cross_counts, self_counts};
use super::{bits_at, IntegerSet, WORD};

/// `{x + y : x in a, y in b, x + y < limit}` by shifted word-ORs.
pub fn sumset(a: &IntegerSet, b: &IntegerSet, limit: u64) -> IntegerSet {
    let (small, big) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut out = IntegerSet::new(limit);
    let nwords = out.words.len();
    let src = big.words();
    for x in small.iter_range(0, limit) {
        let ws = (x / WORD) as usize;
        let bs = x % WORD;
        for (i, &w) in src.iter().enumerate() {
            let dst = i + ws;
            if dst >= nwords {
                break;
            }
            if w == 0 {
                continue;
            }
            out.words[dst] |= w << bs;
            if bs != 0 && dst + 1 < nwords {
                out.words[dst + 1] |= w >> (WORD - bs);
            }
        }
    }
    if !limit.is_multiple_of(WORD) {
        if let Some(last) = out.words.last_mut() {
            *last &= (1u64 << (limit % WORD)) - 1;
        }
    }
    out.len = out.recount();
    out
}

/// Number of pairs `x <= x'` in `a` with `x + x' = n`.
pub fn rep_count(a: &IntegerSet, n: u64) -> u64 {
    a.iter_range(0, n / 2 + 1)
        .filter(|&x| a.contains(n - x))
        .count() as u64
}

/// Smallest summand allowed in a windowed representation of `n`: the least
/// `x >= 1` with `n - x <= rho·x`.
pub fn windowed_floor(n: u64, rho: u64) -> u64 {
    n.div_ceil(rho + 1).max(1)
}

/// Pairs `x <= x'` in `a` with `x + x' = n` and `x' <= rho·x`. Zero never
/// takes part, since it admits no finite ratio.
pub fn rep_count_windowed(a: &IntegerSet, n: u64, rho: u64) -> u64 {
    assert!(rho >= 1, "ratio window must be at least 1");
    a.iter_range(windowed_floor(n, rho), n / 2 + 1)
        .filter(|&x| a.contains(n - x))
        .count() as u64
}

/// Unordered representation counts for every `n` in `[from, to)`.
pub fn rep_counts(a: &IntegerSet, from: u64, to: u64) -> Vec<u32> {
    let mut counts = self_counts(a, from, to);
    halve_ordered(a, from, &mut counts);
    counts
}

fn halve_ordered(a: &IntegerSet, from: u64, counts: &mut [u32]) {
    for (i, c) in counts.iter_mut().enumerate() {
        let n = from + i as u64;
        let diag = n.is_multiple_of(2) && a.contains(n / 2);
        *c = (*c + diag as u32) / 2;
    }
}

/// Plain and ratio-windowed representation counts over a range of targets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepProfile {
    pub from: u64,
    pub rho: u64,
    pub plain: Vec<u32>,
    pub windowed: Vec<u32>,
}

impl RepProfile {
    pub fn to(&self) -> u64 {
        self.from + self.plain.len() as u64
    }

    pub fn plain_at(&self, n: u64) -> u32 {
        self.plain[(n - self.from) as usize]
    }

    pub fn windowed_at(&self, n: u64) -> u32 {
        self.windowed[(n - self.from) as usize]
    }

    /// `(n, r(n), windowed r(n))` triples.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u32, u32)> + '_ {
        self.plain
            .iter()
            .zip(&self.windowed)
            .enumerate()
            .map(|(i, (&r, &w))| (self.from + i as u64, r, w))
    }
}

/// Batch version of [`rep_count`] and [`rep_count_windowed`] over `[from, to)`.
///
/// Plain counts come from one self-convolution. Windowed counts subtract the
/// pairs whose smaller summand lies below [`windowed_floor`]; that floor grows
/// with `n`, so targets are processed in bands sharing a common prefix
/// (convolved once per band) plus a bit-parallel sweep over the remainder.
pub fn rep_profile(a: &IntegerSet, from: u64, to: u64, rho: u64) -> RepProfile {
    assert!(rho >= 1, "ratio window must be at least 1");
    assert!(from <= to, "empty profile range must have from <= to");
    let plain = rep_counts(a, from, to);
    let excess = windowed_excess(a, from, to, rho);
    let windowed = plain
        .iter()
        .zip(&excess)
        .map(|(&r, &e)| r - e)
        .collect();
    RepProfile {
        from,
        rho,
        plain,
        windowed,
    }
}

/// First `n` whose windowed floor is at least `x`.
fn first_target_with_floor(x: u64, rho: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        (rho + 1) * (x - 1) + 1
    }
}

const DIRECT_BUDGET: u64 = 40_000_000;
const BANDS: u64 = 96;

/// For each `n` in `[from, to)`: pairs `x < n - x` of `a` with `x` below the windowed floor.
fn windowed_excess(a: &IntegerSet, from: u64, to: u64, rho: u64) -> Vec<u32> {
    let width = (to - from) as usize;
    let mut out = vec![0u32; width];
    if width == 0 || a.is_empty() {
        return out;
    }
    let floor_lo = windowed_floor(from, rho);
    let floor_hi = windowed_floor(to - 1, rho);

    let small = a.count_range(0, floor_hi);
    let partners = a.count_range(from.saturating_sub(floor_hi), to);
    if small.saturating_mul(partners) <= DIRECT_BUDGET {
        for x in a.iter_range(0, floor_hi) {
            let n_lo = from.max(first_target_with_floor(x + 1, rho));
            if n_lo >= to {
                continue;
            }
            for y in a.iter_range(n_lo - x, to - x) {
                out[(x + y - from) as usize] += 1;
            }
        }
        return out;
    }

    // reversed copy: a(n - x) == rev(to - 1 - n + x)
    let mut rev = IntegerSet::new(to);
    for m in a.iter_range(0, to) {
        rev.insert(to - 1 - m);
    }

    let span = floor_hi - floor_lo + 1;
    let step = span.div_ceil(BANDS).max(WORD).next_multiple_of(WORD);
    let mut x_band = floor_lo;
    while x_band <= floor_hi {
        let x_next = x_band + step;
        let n0 = from.max(first_target_with_floor(x_band, rho));
        let n1 = to.min(first_target_with_floor(x_next, rho));
        if n0 < n1 {
            let prefix = a.with_limit(x_band);
            let full = cross_counts(&prefix, a, n0, n1);
            for (n, f) in (n0..n1).zip(full) {
                let partial = and_count(a, &rev, x_band, windowed_floor(n, rho), to - 1 - n);
                out[(n - from) as usize] = f + partial;
            }
        }
        x_band = x_next;
    }
    out
}

/// `#{x in [lo, hi) : a(x) and rev(x + shift)}`.
fn and_count(a: &IntegerSet, rev: &IntegerSet, lo: u64, hi: u64, shift: u64) -> u32 {
    let mut total = 0u32;
    let mut x = lo;
    while x < hi {
        let take = (hi - x).min(WORD);
        let mask = if take == WORD { !0 } else { (1u64 << take) - 1 };
        let w = bits_at(a.words(), x) & bits_at(rev.words(), x + shift) & mask;
        total += w.count_ones();
        x += take;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(limit: u64, xs: &[u64]) -> IntegerSet {
        IntegerSet::from_members(limit, xs.iter().copied()).unwrap()
    }

    // quadratic oracles, independent of the kernels above
    fn brute_reps(a: &IntegerSet, n: u64, rho: Option<u64>) -> u64 {
        let xs = a.to_vec();
        let mut c = 0;
        for (i, &x) in xs.iter().enumerate() {
            for &y in &xs[i..] {
                if x + y != n {
                    continue;
                }
                match rho {
                    None => c += 1,
                    Some(r) => {
                        if x >= 1 && y <= r * x {
                            c += 1
                        }
                    }
                }
            }
        }
        c
    }

    fn brute_sumset(a: &IntegerSet, b: &IntegerSet, limit: u64) -> Vec<u64> {
        let mut v: Vec<u64> = a
            .iter()
            .flat_map(|x| b.iter().map(move |y| x + y))
            .filter(|&s| s < limit)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    #[test]
    fn sumset_examples() {
        let a = set(10, &[1, 2]);
        assert_eq!(sumset(&a, &a, 10).to_vec(), vec![2, 3, 4]);
        let s = set(200, &[3, 70, 130, 199]);
        assert_eq!(sumset(&set(10, &[0]), &s, 200), s);
    }

    #[test]
    fn rep_count_examples() {
        assert_eq!(rep_count(&set(10, &[1, 2, 3]), 4), 2);
        assert_eq!(rep_count(&set(10, &[5]), 10), 1);
    }

    #[test]
    fn windowed_examples() {
        let a = set(300, &[1, 200]);
        assert_eq!(rep_count_windowed(&a, 201, 100), 0);
        assert_eq!(rep_count(&a, 201), 1);
        assert_eq!(rep_count_windowed(&set(300, &[100, 101]), 201, 100), 1);
        // zero has no ratio
        assert_eq!(rep_count_windowed(&set(10, &[0]), 0, 100), 0);
        assert_eq!(rep_count(&set(10, &[0]), 0), 1);
    }

    #[test]
    fn profile_examples() {
        let p = rep_profile(&set(10, &[1, 2, 3]), 2, 7, 100);
        assert_eq!(p.plain, vec![1, 1, 2, 1, 1]);
        let p = rep_profile(&IntegerSet::new(50), 0, 100, 100);
        assert!(p.plain.iter().chain(&p.windowed).all(|&c| c == 0));
    }

    #[test]
    fn banded_windowed_path_matches_pointwise() {
        // dense enough to leave the direct path
        let limit = 60_000;
        let a = IntegerSet::from_members(
            limit,
            (0..limit).filter(|x| (x * 2_654_435_761u64) % 5 < 2),
        )
        .unwrap();
        let (from, to) = (70_000, 110_000);
        let rho = 3;
        assert!(
            a.count_range(0, windowed_floor(to - 1, rho))
                * a.count_range(from - windowed_floor(to - 1, rho), to)
                > DIRECT_BUDGET
        );
        let p = rep_profile(&a, from, to, rho);
        for n in (from..to).step_by(97).chain([from, to - 1]) {
            assert_eq!(p.plain_at(n) as u64, rep_count(&a, n), "plain n={n}");
            assert_eq!(
                p.windowed_at(n) as u64,
                rep_count_windowed(&a, n, rho),
                "windowed n={n}"
            );
        }
    }

    fn arb_set() -> impl Strategy<Value = IntegerSet> {
        (1u64..5000).prop_flat_map(|limit| {
            proptest::collection::vec(0..limit, 0..=200)
                .prop_map(move |xs| IntegerSet::from_members(limit, xs).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn pointwise_counts_match_brute_force(a in arb_set(), n in 0u64..10_000, rho in 1u64..150) {
            prop_assert_eq!(rep_count(&a, n), brute_reps(&a, n, None));
            prop_assert_eq!(rep_count_windowed(&a, n, rho), brute_reps(&a, n, Some(rho)));
            prop_assert!(rep_count_windowed(&a, n, rho) <= rep_count(&a, n));
            if rho >= n {
                let with_zero = a.contains(0) && a.contains(n);
                prop_assert_eq!(rep_count_windowed(&a, n, rho) + with_zero as u64, rep_count(&a, n));
            }
        }

        #[test]
        fn sumset_matches_brute_force(a in arb_set(), b in arb_set(), limit in 1u64..10_000) {
            let s = sumset(&a, &b, limit);
            prop_assert_eq!(s.to_vec(), brute_sumset(&a, &b, limit));
            let doubled = sumset(&a, &a, limit);
            for n in 0..limit.min(a.limit() * 2) {
                prop_assert_eq!(doubled.contains(n), rep_count(&a, n) >= 1);
            }
        }

        #[test]
        fn profile_matches_pointwise(a in arb_set(), rho in 1u64..120) {
            let to = 2 * a.limit();
            let p = rep_profile(&a, 0, to, rho);
            for (n, r, w) in p.iter() {
                prop_assert_eq!(r as u64, rep_count(&a, n));
                prop_assert_eq!(w as u64, rep_count_windowed(&a, n, rho));
            }
        }
    }
}
