//! Small scalar helpers shared by the two network implementations.
//!
//! The sigmoid below avoids libm's `exp` so the compiler can vectorize
//! training-loop slabs; full-batch training evaluates it billions of times.
//! It is a plain polynomial scheme with no data-dependent branches and is
//! accurate to a few ulp, which keeps finite-difference gradient checks
//! clean.

/// Round-to-even bias trick constant: 1.5 * 2^52.
const EXP_SHIFT: f64 = 6755399441055744.0;

/// e^t for |t| <= 40, via 2^k * e^r with |r| <= ln(2)/2 and a degree-12
/// Taylor polynomial for e^r (remainder ~1.7e-16 relative).
#[inline]
fn exp_small(t: f64) -> f64 {
    const LOG2E: f64 = std::f64::consts::LOG2_E;
    // ln(2) split for exact argument reduction.
    const LN2_HI: f64 = 0.693_147_180_369_123_8;
    const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
    let kf = t * LOG2E + EXP_SHIFT;
    let k = kf - EXP_SHIFT;
    let r = (t - k * LN2_HI) - k * LN2_LO;

    // Horner over 1 + r + r^2/2! + ... + r^12/12!.
    let mut p = 1.0 / 479_001_600.0;
    p = p * r + 1.0 / 39_916_800.0;
    p = p * r + 1.0 / 3_628_800.0;
    p = p * r + 1.0 / 362_880.0;
    p = p * r + 1.0 / 40_320.0;
    p = p * r + 1.0 / 5_040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;

    // 2^k by direct exponent construction; |k| <= 59 here, far from the
    // representable range edges. The integer k is read out of kf's low
    // mantissa bits (kf = 2^52 * 1.5 + k exactly) instead of a float-to-int
    // cast, which has no packed form on baseline x86-64 and would keep this
    // loop scalar.
    let kbits = kf.to_bits() as i64 - EXP_SHIFT.to_bits() as i64;
    let two_k = f64::from_bits(((kbits + 1023) << 52) as u64);
    p * two_k
}

/// Logistic sigmoid `1 / (1 + e^{-x})`.
///
/// Inputs are saturated at |x| = 40, beyond which the exact result already
/// rounds to 0 or 1 in f64.
#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-40.0, 40.0);
    1.0 / (1.0 + exp_small(-x))
}
