//! Small shared helpers: deterministic seed derivation, robust scalar math,
//! and order statistics used by the experiment drivers.

/// SplitMix64 step, used to derive independent RNG streams from a base seed
/// and a task index. Mixing is stateless so parallel schedules cannot affect
/// which stream a task receives.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Real cube root with sign handling; `f64::cbrt` already does this but the
/// name documents intent where negative radicands are expected.
pub fn real_cbrt(x: f64) -> f64 {
    x.cbrt()
}

/// Relative deviation |a - b| / (1 + max(|a|, |b|)); robust near zero.
pub fn rel_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

/// Median of a slice (does not require sorted input). Empty input yields NaN.
pub fn median(values: &[f64]) -> f64 {
    percentile(values, 50.0)
}

/// Linear-interpolated percentile, `p` in [0, 100]. Empty input yields NaN.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in percentile"));
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = rank - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

/// Formats a float with 17 significant digits in scientific notation, the
/// canonical representation used by every CSV this crate writes. 17 digits
/// round-trip any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
