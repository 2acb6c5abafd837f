//! Per-purpose seed derivation.
//!
//! Every random stream in a run descends from the single user seed through
//! [`derive`], keyed by a purpose tag and the indices that identify the
//! stream. The layout:
//!
//! | stream                          | derivation                                      |
//! |---------------------------------|-------------------------------------------------|
//! | construction coloring           | `derive(seed, COLORING, &[])`                   |
//! | membership profile, seed `j`    | `derive(seed, PROFILE, &[j])`                   |
//! | lemma trial `t`, point `p`, rep | `derive(seed, lemma_tag, &[p, rep, t])`         |
//! | plateau sample points           | `derive(seed, SAMPLE_POINTS, &[k])`             |

pub const COLORING: u64 = 0x636f_6c6f_7269_6e67;
pub const PROFILE: u64 = 0x7072_6f66_696c_6500;
pub const LEMMA_SUM: u64 = 0x6c65_6d6d_6173_756d;
pub const LEMMA_INTERSECTION: u64 = 0x6c65_6d6d_6169_6e74;
pub const SAMPLE_POINTS: u64 = 0x7361_6d70_6c65_7300;

/// SplitMix64 output function.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(seed: u64, tag: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix(seed ^ mix(tag)), |acc, &p| mix(acc ^ mix(p)))
}
