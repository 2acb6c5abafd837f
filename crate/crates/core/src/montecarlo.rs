//! Multi-seed experiments for the two probabilistic lemmas and the
//! membership-probability profile, plus an exact recursion for `P(n ∈ B(k))`.

use std::collections::BTreeMap;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coloring::{Color, Coloring};
use crate::engine::{run, RunConfig};
use crate::error::{Error, Result};
use crate::intset::{cross_counts, self_counts, IntegerSet, OpenRationalInterval};
use crate::seed;
use crate::selector::{first_stage_above, n_index, CaseParams};

/// One batch of trials at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub lemma: String,
    /// `m` for the sum lemma, `N` for the intersection lemma.
    pub param: u64,
    /// Interval `I` (intersection lemma only).
    pub interval: String,
    pub rep: u64,
    pub trials: u64,
    pub failures: u64,
    /// Smallest representation count seen in any trial.
    pub min_count: u64,
    /// Mean over trials of the per-trial minimum.
    pub mean_min_count: f64,
    pub seed: u64,
}

impl TrialReport {
    pub fn failure_rate(&self) -> f64 {
        self.failures as f64 / self.trials as f64
    }
}

/// Integers in `(lo, hi)` of color `c`, as a set with the given limit.
fn colored(col: &Coloring, iv: &OpenRationalInterval, c: Color, limit: u64) -> IntegerSet {
    let (lo, hi) = iv.clipped_range(limit);
    col.class_in(c, lo, hi, limit)
}

/// Sum lemma at `I = J = {1..m}`: a trial fails when some element of
/// `core(I + J)` has fewer than `m/2000` ordered representations in
/// `X_1(I) + X_1(J)`.
pub fn sim_lemma_sum(m_grid: &[u64], trials: u64, seed: u64, rep: u64) -> Result<Vec<TrialReport>> {
    let mut out = Vec::with_capacity(m_grid.len());
    for &m in m_grid {
        if m < 200 {
            return Err(Error::Config(format!("sum lemma needs m >= 200, got {m}")));
        }
        let i = OpenRationalInterval::integer(0, m as i128 + 1)?;
        let core = i.plus(&i).core()?;
        let (lo, hi) = core.clipped_range(2 * m + 2);
        let mut failures = 0;
        let mut min_all = u64::MAX;
        let mut sum_min = 0u64;
        for t in 0..trials {
            let s = seed::derive(seed, seed::LEMMA_SUM, &[m, rep, t]);
            let col = Coloring::new(s, m + 1);
            let x = colored(&col, &i, Color::One, m + 1);
            let counts = self_counts(&x, lo, hi);
            let min = counts.iter().copied().min().unwrap_or(0) as u64;
            // "fewer than m/2000" on integers: 2000·count < m
            if 2000 * min < m {
                failures += 1;
            }
            min_all = min_all.min(min);
            sum_min += min;
        }
        out.push(TrialReport {
            lemma: "sum".into(),
            param: m,
            interval: "(0, m+1)".into(),
            rep,
            trials,
            failures,
            min_count: min_all,
            mean_min_count: sum_min as f64 / trials.max(1) as f64,
            seed,
        });
    }
    Ok(out)
}

/// The three intervals `I` used with the intersection lemma, as `(a, b, d)`
/// for `(aN/d, bN/d)`.
pub const INTERSECTION_INTERVALS: [(&str, (i128, i128, i128)); 3] = [
    ("(2N/3, 3N/4)", (8, 9, 12)),
    ("(4N/3, 2N)", (4, 6, 3)),
    ("(8N/3, 3N)", (8, 9, 3)),
];

/// Intersection lemma with `i = 1`, `j = 3`, `J = (N/4, 3N/4)`: a trial fails
/// when some element of `core(I + 4N - J) \ {4N}` has at most `N·10⁻⁷`
/// representations (so zero at desk scale) in `X_1(I) + X_1(4N - X_3(J))`.
pub fn sim_lemma_intersection(
    n_grid: &[u64],
    trials: u64,
    seed: u64,
    rep: u64,
) -> Result<Vec<TrialReport>> {
    let mut out = Vec::new();
    for &n in n_grid {
        if n < 400 {
            return Err(Error::Config(format!("intersection lemma needs N >= 400, got {n}")));
        }
        let limit = 4 * n;
        let j = OpenRationalInterval::scaled(n, 1, 3, 4)?;
        let mut stats: Vec<(u64, u64, u64)> = vec![(0, u64::MAX, 0); INTERSECTION_INTERVALS.len()];
        for t in 0..trials {
            let s = seed::derive(seed, seed::LEMMA_INTERSECTION, &[n, rep, t]);
            let col = Coloring::new(s, limit);
            let x3 = colored(&col, &j, Color::Three, limit);
            let mut reflected = IntegerSet::new(limit);
            for y in x3.iter() {
                if col.is(limit - y, Color::One) {
                    reflected.insert(limit - y);
                }
            }
            for (slot, (_, frac)) in stats.iter_mut().zip(INTERSECTION_INTERVALS) {
                let i = OpenRationalInterval::scaled(n, frac.0, frac.1, frac.2)?;
                let x1 = colored(&col, &i, Color::One, limit);
                let core = i.plus(&j.reflected(limit as i128)).core()?;
                let (lo, hi) = core.clipped_range(2 * limit);
                let counts = cross_counts(&x1, &reflected, lo, hi);
                let min = (lo..hi)
                    .zip(&counts)
                    .filter(|(z, _)| *z != limit)
                    .map(|(_, &c)| c as u64)
                    .min()
                    .unwrap_or(0);
                // "at most N·10^-7" on integers: 10^7·count <= N
                if min == 0 || 10_000_000 * min <= n {
                    slot.0 += 1;
                }
                slot.1 = slot.1.min(min);
                slot.2 += min;
            }
        }
        for ((name, _), (failures, min, sum)) in INTERSECTION_INTERVALS.iter().zip(stats) {
            out.push(TrialReport {
                lemma: "intersection".into(),
                param: n,
                interval: (*name).into(),
                rep,
                trials,
                failures,
                min_count: min,
                mean_min_count: sum as f64 / trials.max(1) as f64,
                seed,
            });
        }
    }
    Ok(out)
}

/// How the reflected part removes earlier elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplementModel {
    /// `4N - ((0, N) \ A(k-1))` with `A = B ∪ C`, as the construction does.
    Union,
    /// `4N - ((0, N) \ B(k-1))`, the variant whose plateaus are
    /// `1, 2/3, 7/9, 20/27, 61/81, ...` (relative to `1/3`).
    BOnly,
}

/// `P(n ∈ B(k))` with selection ignored, by recursion over reflections.
///
/// Points of `(4N_i/3, 2N_i)` and `(8N_i/3, 3N_i)` have probability `1/3`;
/// a reflected point `4N_i - x` with `x ∈ (0, N_i)` has `(1/3)(1 - P(x ∈ A))`
/// where `P(x ∈ A) = 2·P(x ∈ B)` under [`ComplementModel::Union`].
pub fn exact_membership_probability<T>(n: u64, k: u64, model: ComplementModel) -> Result<T>
where
    T: Num + Clone + FromPrimitive,
{
    let top = n_index(k + 1)?;
    if n >= top {
        return Err(Error::OutOfRange { value: n, limit: top });
    }
    let third = T::one() / T::from_u64(3).expect("3 is representable");
    let weight = match model {
        ComplementModel::Union => T::from_u64(2).expect("2 is representable"),
        ComplementModel::BOnly => T::one(),
    };
    // walk the reflection chain down, then fold back up
    let mut reflections = 0u32;
    let mut x = n;
    let base = loop {
        let i = first_stage_above(x) - 1;
        if i == 0 {
            break T::zero();
        }
        let big = n_index(i)?;
        let (x3, big3) = (3 * x as u128, big as u128);
        if (4 * big3 < x3 && x3 < 6 * big3) || (8 * big3 < x3 && x3 < 9 * big3) {
            break third.clone();
        }
        if 3 * big < x && x < 4 * big {
            reflections += 1;
            x = 4 * big - x;
            continue;
        }
        break T::zero();
    };
    let mut p = base;
    for _ in 0..reflections {
        p = third.clone() * (T::one() - weight.clone() * p);
    }
    Ok(p)
}

/// Probabilities that `n` lands in `B`, in `C`, or in neither.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainProbabilities {
    pub b: Ratio<i64>,
    pub c: Ratio<i64>,
    pub neither: Ratio<i64>,
}

/// Exact probabilities by enumerating every coloring of the reflection chain
/// of `n` and applying the membership rule directly.
pub fn chain_enumeration_probability(n: u64, model: ComplementModel) -> ChainProbabilities {
    // chain[0] = n, chain[j+1] = reflection partner of chain[j]
    let mut chain = vec![n];
    let mut kinds = Vec::new();
    loop {
        let x = *chain.last().unwrap();
        let i = first_stage_above(x) - 1;
        let kind = if i == 0 {
            0
        } else {
            let big = 4u64.pow(i as u32 + 1);
            if (4 * big < 3 * x && 3 * x < 6 * big) || (8 * big < 3 * x && 3 * x < 9 * big) {
                1
            } else if 3 * big < x && x < 4 * big {
                chain.push(4 * big - x);
                2
            } else {
                0
            }
        };
        kinds.push(kind);
        if kind != 2 {
            break;
        }
    }
    let len = chain.len() as u32;
    let (mut hits_b, mut hits_c) = (0i64, 0i64);
    for code in 0..3i64.pow(len) {
        let colors: Vec<i64> = (0..len).map(|j| code / 3i64.pow(j) % 3).collect();
        // membership (color-1 set, color-2 set) evaluated from the bottom up
        let mut in_b = false;
        let mut in_c = false;
        for j in (0..len as usize).rev() {
            let (b, c) = match kinds[j] {
                0 => (false, false),
                1 => (colors[j] == 0, colors[j] == 1),
                _ => {
                    let blocked = match model {
                        ComplementModel::Union => in_b || in_c,
                        ComplementModel::BOnly => in_b,
                    };
                    (!blocked && colors[j] == 0, !blocked && colors[j] == 1)
                }
            };
            in_b = b;
            in_c = c;
        }
        hits_b += in_b as i64;
        hits_c += in_c as i64;
    }
    let total = 3i64.pow(len);
    ChainProbabilities {
        b: Ratio::new(hits_b, total),
        c: Ratio::new(hits_c, total),
        neither: Ratio::new(total - hits_b - hits_c, total),
    }
}

/// One sampled point of the membership profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub n: u64,
    pub hits: u64,
    pub seeds: u64,
    pub empirical: f64,
    pub exact: String,
    pub exact_value: f64,
    /// `exact / (1/3)`.
    pub relative: String,
    pub tolerance: f64,
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub k: u64,
    pub seeds: u64,
    pub seed: u64,
    pub rows: Vec<ProfileRow>,
    pub agreement: f64,
    /// Largest `|empirical - exact|` per relative plateau level.
    pub max_deviation: BTreeMap<String, f64>,
    /// Distinct relative levels among positive-probability points of `(0, N_{k+1})`, descending.
    pub levels: Vec<String>,
    /// Empirical frequency at `N_k`, a point in no construction interval.
    pub lattice_point_hits: u64,
}

/// Expected relative plateau levels, descending.
pub fn expected_levels() -> [Ratio<i64>; 4] {
    [
        Ratio::from_integer(1),
        Ratio::new(7, 9),
        Ratio::new(20, 27),
        Ratio::new(2, 3),
    ]
}

/// Distinct relative levels `P/(1/3)` over `(0, N_{k+1})`, descending.
pub fn relative_levels(k: u64, model: ComplementModel) -> Result<Vec<Ratio<i64>>> {
    let top = n_index(k + 1)?;
    let mut levels: Vec<Ratio<i64>> = Vec::new();
    for n in 1..top {
        let p: Ratio<i64> = exact_membership_probability(n, k, model)?;
        if p > Ratio::from_integer(0) {
            let rel = p * 3;
            if !levels.contains(&rel) {
                levels.push(rel);
            }
        }
    }
    levels.sort_unstable_by(|a, b| b.cmp(a));
    Ok(levels)
}

/// Empirical `P(n ∈ B(k))` over `seeds` selection-free runs against the
/// exact oracle, at `sample_points` points spread across the plateau levels.
pub fn profile_membership(k: u64, seeds: u64, sample_points: usize, seed: u64) -> Result<ProfileReport> {
    if seeds == 0 || sample_points == 0 {
        return Err(Error::Config("profile needs at least one seed and one point".into()));
    }
    let top = n_index(k + 1)?;
    let mut by_level: BTreeMap<Ratio<i64>, Vec<u64>> = BTreeMap::new();
    for n in 1..top {
        let p: Ratio<i64> = exact_membership_probability(n, k, ComplementModel::Union)?;
        if p > Ratio::from_integer(0) {
            by_level.entry(p).or_default().push(n);
        }
    }
    let points = stratified_sample(by_level.clone(), sample_points, seed::derive(seed, seed::SAMPLE_POINTS, &[k]));

    let lattice = n_index(k)?;
    let mut hits = vec![0u64; points.len()];
    let mut lattice_hits = 0;
    let mut cfg = RunConfig::new(CaseParams::new(true, true, false), k.max(2), 0);
    cfg.ignore_selection = true;
    cfg.kmin = 1;
    for j in 0..seeds {
        cfg.seed = seed::derive(seed, seed::PROFILE, &[j]);
        let state = run(&cfg)?;
        for (h, &n) in hits.iter_mut().zip(&points) {
            *h += state.b_cum.contains(n) as u64;
        }
        lattice_hits += state.b_cum.contains(lattice) as u64;
    }

    let mut rows = Vec::with_capacity(points.len());
    let mut max_dev: BTreeMap<String, f64> = BTreeMap::new();
    for (&n, &h) in points.iter().zip(&hits) {
        let p: Ratio<i64> = exact_membership_probability(n, k, ComplementModel::Union)?;
        let pv = p.to_f64().unwrap_or(0.0);
        let emp = h as f64 / seeds as f64;
        let tol = 3.0 * (pv * (1.0 - pv) / seeds as f64).sqrt();
        let dev = (emp - pv).abs();
        let rel = (p * 3).to_string();
        let e = max_dev.entry(rel.clone()).or_insert(0.0);
        *e = e.max(dev);
        rows.push(ProfileRow {
            n,
            hits: h,
            seeds,
            empirical: emp,
            exact: p.to_string(),
            exact_value: pv,
            relative: rel,
            tolerance: tol,
            within: dev <= tol,
        });
    }
    let agreement = rows.iter().filter(|r| r.within).count() as f64 / rows.len() as f64;
    let mut levels: Vec<Ratio<i64>> = by_level.keys().map(|p| p * 3).collect();
    levels.sort_unstable_by(|a, b| b.cmp(a));
    Ok(ProfileReport {
        k,
        seeds,
        seed,
        rows,
        agreement,
        max_deviation: max_dev,
        levels: levels.iter().map(|l| l.to_string()).collect(),
        lattice_point_hits: lattice_hits,
    })
}

/// Round-robin over levels, shuffled within each level, then sorted.
fn stratified_sample(by_level: BTreeMap<Ratio<i64>, Vec<u64>>, count: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pools: Vec<Vec<u64>> = by_level
        .into_values()
        .map(|mut v| {
            v.shuffle(&mut rng);
            v
        })
        .collect();
    let mut picked = Vec::with_capacity(count);
    while picked.len() < count && pools.iter().any(|p| !p.is_empty()) {
        for pool in pools.iter_mut() {
            if picked.len() == count {
                break;
            }
            if let Some(n) = pool.pop() {
                picked.push(n);
            }
        }
    }
    picked.sort_unstable();
    picked
}

/// Median of the failure rates of repeated batches.
pub fn median_rate(reports: &[&TrialReport]) -> f64 {
    let mut rates: Vec<f64> = reports.iter().map(|r| r.failure_rate()).collect();
    rates.sort_by(|a, b| a.total_cmp(b));
    match rates.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => rates[n / 2],
        n => (rates[n / 2 - 1] + rates[n / 2]) / 2.0,
    }
}
