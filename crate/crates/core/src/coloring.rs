//! Seeded uniform three-coloring of an initial segment of the naturals.
//!
//! The color of `n` is drawn from the `n`-th 64-bit output of a ChaCha8
//! stream keyed by the seed. ChaCha is counter based, so the color of `n`
//! depends only on `(seed, n)` and growing the segment never recolors a
//! prefix.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::intset::IntegerSet;

/// One of the three classes `X_1`, `X_2`, `X_3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Color {
    One = 1,
    Two = 2,
    Three = 3,
}

impl Color {
    pub const ALL: [Color; 3] = [Color::One, Color::Two, Color::Three];

    #[inline]
    fn from_word(w: u64) -> Color {
        // multiply-high maps a uniform word onto {0, 1, 2}
        match ((w as u128 * 3) >> 64) as u8 {
            0 => Color::One,
            1 => Color::Two,
            _ => Color::Three,
        }
    }

    pub fn index(self) -> u8 {
        self as u8
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coloring {
    seed: u64,
    colors: Vec<Color>,
}

impl Coloring {
    pub fn new(seed: u64, limit: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let colors = (0..limit).map(|_| Color::from_word(rng.next_u64())).collect();
        Coloring { seed, colors }
    }

    /// Color of a single `n`, computed without materializing the prefix.
    pub fn color_at(seed: u64, n: u64) -> Color {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(2 * n as u128);
        Color::from_word(rng.next_u64())
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn limit(&self) -> u64 {
        self.colors.len() as u64
    }

    /// Color of `n`; panics if `n` is outside the colored segment.
    #[inline]
    pub fn color(&self, n: u64) -> Color {
        self.colors[n as usize]
    }

    #[inline]
    pub fn is(&self, n: u64, c: Color) -> bool {
        self.colors.get(n as usize) == Some(&c)
    }

    /// `X_c(s) = s ∩ X_c`.
    pub fn restrict(&self, c: Color, s: &IntegerSet) -> Result<IntegerSet> {
        if s.limit() > self.limit() {
            return Err(Error::OutOfRange {
                value: s.limit(),
                limit: self.limit() + 1,
            });
        }
        let mut out = IntegerSet::new(s.limit());
        for x in s.iter().filter(|&x| self.color(x) == c) {
            out.insert(x);
        }
        Ok(out)
    }

    /// Members of `[lo, hi)` with color `c`, as a set with the given limit.
    pub fn class_in(&self, c: Color, lo: u64, hi: u64, limit: u64) -> IntegerSet {
        let hi = hi.min(limit).min(self.limit());
        let mut out = IntegerSet::new(limit);
        for x in lo..hi {
            if self.color(x) == c {
                out.insert(x);
            }
        }
        out
    }

    pub fn frequencies(&self) -> [u64; 3] {
        let mut f = [0u64; 3];
        for c in &self.colors {
            f[(c.index() - 1) as usize] += 1;
        }
        f
    }
}
