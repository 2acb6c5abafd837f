//! Exact counting convolutions.
//!
//! Pair counts are convolutions of 0/1 indicator vectors. Small inputs use a
//! direct loop over members; large ones go through a number-theoretic
//! transform modulo the prime `15·2^27 + 1`, which is exact as long as every
//! count stays below the modulus (counts are bounded by set sizes < 2^31).

use super::IntegerSet;

const P: u64 = 2_013_265_921;
const GENERATOR: u64 = 31;
const MAX_LOG: u32 = 27;

/// `-P^{-1} mod 2^32`, for Montgomery reduction with `R = 2^32`.
const P_NEG_INV: u32 = {
    let mut inv: u32 = 1;
    let mut i = 0;
    while i < 5 {
        inv = inv.wrapping_mul(2u32.wrapping_sub((P as u32).wrapping_mul(inv)));
        i += 1;
    }
    inv.wrapping_neg()
};

/// `a·b·2^-32 mod P` for `a, b < P`.
#[inline(always)]
fn mont_mul(a: u32, b: u32) -> u32 {
    let t = a as u64 * b as u64;
    let m = (t as u32).wrapping_mul(P_NEG_INV);
    let u = ((t + m as u64 * P) >> 32) as u32;
    if u as u64 >= P {
        u - P as u32
    } else {
        u
    }
}

/// Montgomery form `x·2^32 mod P`.
#[inline]
fn to_mont(x: u64) -> u32 {
    (((x % P) << 32) % P) as u32
}

#[inline(always)]
fn add(a: u32, b: u32) -> u32 {
    let s = a + b;
    if s as u64 >= P {
        s - P as u32
    } else {
        s
    }
}

#[inline(always)]
fn sub(a: u32, b: u32) -> u32 {
    if a >= b {
        a - b
    } else {
        (a as u64 + P - b as u64) as u32
    }
}

fn pow_mod(mut base: u64, mut exp: u64) -> u64 {
    let mut acc = 1u64;
    base %= P;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % P;
        }
        base = base * base % P;
        exp >>= 1;
    }
    acc
}

/// Twiddles `w^0 .. w^(half-1)` in Montgomery form, `w` of order `2·half`.
fn twiddles(half: usize, inverse: bool, out: &mut Vec<u32>) {
    let mut w = pow_mod(GENERATOR, (P - 1) / (2 * half) as u64);
    if inverse {
        w = pow_mod(w, P - 2);
    }
    out.clear();
    let mut cur = 1u64;
    for _ in 0..half {
        out.push(to_mont(cur));
        cur = cur * w % P;
    }
}

/// Decimation-in-frequency transform: natural order in, bit-reversed out.
fn forward(a: &mut [u32]) {
    let n = a.len();
    assert!(n.is_power_of_two() && n.trailing_zeros() <= MAX_LOG);
    let mut tw = Vec::with_capacity(n / 2);
    let mut len = n;
    while len >= 2 {
        let half = len / 2;
        twiddles(half, false, &mut tw);
        for chunk in a.chunks_exact_mut(len) {
            let (lo, hi) = chunk.split_at_mut(half);
            for ((u, v), &w) in lo.iter_mut().zip(hi.iter_mut()).zip(&tw) {
                let (x, y) = (*u, *v);
                *u = add(x, y);
                *v = mont_mul(sub(x, y), w);
            }
        }
        len = half;
    }
}

/// Decimation-in-time inverse: bit-reversed in, natural order out, scaled by `scale·2^-32`.
fn inverse(a: &mut [u32], scale_mont: u32) {
    let n = a.len();
    assert!(n.is_power_of_two() && n.trailing_zeros() <= MAX_LOG);
    let mut tw = Vec::with_capacity(n / 2);
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        twiddles(half, true, &mut tw);
        for chunk in a.chunks_exact_mut(len) {
            let (lo, hi) = chunk.split_at_mut(half);
            for ((u, v), &w) in lo.iter_mut().zip(hi.iter_mut()).zip(&tw) {
                let x = *u;
                let y = mont_mul(*v, w);
                *u = add(x, y);
                *v = sub(x, y);
            }
        }
        len <<= 1;
    }
    for x in a.iter_mut() {
        *x = mont_mul(*x, scale_mont);
    }
}

/// Cyclic convolution of `a` with the (already transformed) `fb`, in place in `a`.
/// The pointwise Montgomery product drops a factor `2^32`, restored by the final scale.
fn convolve_into(a: &mut [u32], fb: Option<&[u32]>) {
    forward(a);
    match fb {
        Some(fb) => {
            for (x, &y) in a.iter_mut().zip(fb) {
                *x = mont_mul(*x, y);
            }
        }
        None => {
            for x in a.iter_mut() {
                *x = mont_mul(*x, *x);
            }
        }
    }
    // the result carries n·2^-32 from the product and the unscaled inverse
    let inv_n = pow_mod(a.len() as u64, P - 2);
    let r2 = ((1u128 << 64) % P as u128) as u64;
    inverse(a, (inv_n * r2 % P) as u32);
}

fn load(set: &IntegerSet, lo: u64, hi: u64, len: usize) -> Vec<u32> {
    let mut buf = vec![0u32; len];
    for x in set.iter_range(lo, hi) {
        buf[(x - lo) as usize] = 1;
    }
    buf
}

struct Span {
    lo: u64,
    hi: u64,
    count: u64,
}

fn span(set: &IntegerSet, lo: u64, hi: u64) -> Option<Span> {
    let mut it = set.iter_range(lo, hi);
    let first = it.next()?;
    let last = set
        .iter_range(first, hi)
        .last()
        .unwrap_or(first);
    Some(Span {
        lo: first,
        hi: last + 1,
        count: set.count_range(first, last + 1),
    })
}

fn transform_cost(len: u64) -> u64 {
    let l = len.next_power_of_two();
    // three transforms plus the pointwise product, in rough butterfly units
    3 * l * (64 - l.leading_zeros() as u64) / 2 + l
}

/// Ordered pair counts `#{(x, y) : x in a, y in b, x + y = n}` for `n` in `[from, to)`.
pub fn cross_counts(a: &IntegerSet, b: &IntegerSet, from: u64, to: u64) -> Vec<u32> {
    let width = to.saturating_sub(from) as usize;
    let mut out = vec![0u32; width];
    if width == 0 {
        return out;
    }
    let Some(sa) = span(a, 0, to) else { return out };
    let Some(sb) = span(b, from.saturating_sub(sa.hi - 1), to) else {
        return out;
    };
    let Some(sa) = span(a, from.saturating_sub(sb.hi - 1), to - sb.lo.min(to)) else {
        return out;
    };

    let direct = sa.count.saturating_mul(sb.count);
    let fft_len = (sa.hi - sa.lo) + (sb.hi - sb.lo) - 1;
    if direct <= transform_cost(fft_len) || fft_len.next_power_of_two() > 1 << MAX_LOG {
        for x in a.iter_range(sa.lo, sa.hi) {
            let lo = from.saturating_sub(x);
            let hi = to - x.min(to);
            for y in b.iter_range(lo.max(sb.lo), hi.min(sb.hi)) {
                out[(x + y - from) as usize] += 1;
            }
        }
        return out;
    }

    let len = fft_len.next_power_of_two() as usize;
    let mut fa = load(a, sa.lo, sa.hi, len);
    let mut fb = load(b, sb.lo, sb.hi, len);
    forward(&mut fb);
    convolve_into(&mut fa, Some(&fb));
    drop(fb);
    scatter(&fa, sa.lo + sb.lo, from, &mut out);
    out
}

/// Ordered pair counts of a set with itself, `#{(x, y) : x, y in a, x + y = n}`.
pub fn self_counts(a: &IntegerSet, from: u64, to: u64) -> Vec<u32> {
    let width = to.saturating_sub(from) as usize;
    let mut out = vec![0u32; width];
    if width == 0 {
        return out;
    }
    let Some(s) = span(a, 0, to) else { return out };
    let fft_len = 2 * (s.hi - s.lo) - 1;
    let direct = s.count.saturating_mul(s.count);
    if direct <= transform_cost(fft_len) || fft_len.next_power_of_two() > 1 << MAX_LOG {
        return cross_counts(a, a, from, to);
    }
    let len = fft_len.next_power_of_two() as usize;
    let mut f = load(a, s.lo, s.hi, len);
    convolve_into(&mut f, None);
    scatter(&f, 2 * s.lo, from, &mut out);
    out
}

fn scatter(conv: &[u32], base: u64, from: u64, out: &mut [u32]) {
    for (i, slot) in out.iter_mut().enumerate() {
        let n = from + i as u64;
        if n >= base {
            if let Some(&v) = conv.get((n - base) as usize) {
                *slot = v;
            }
        }
    }
}
