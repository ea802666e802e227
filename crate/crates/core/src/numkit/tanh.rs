//! Branch-free `tanh` that the compiler vectorizes over slices.
//!
//! The libm call dominated MLP evaluation time. This version computes
//! `e = exp(-2|x|)` by range reduction plus a degree-13 Taylor polynomial
//! and returns `sign(x) (1 - e) / (1 + e)`. Absolute error stays within a
//! few ulp of 1; relative error grows like `1e-16 / |x|` for tiny `|x|`,
//! which is irrelevant for network activations.

const LOG2E: f64 = std::f64::consts::LOG2_E;
const LN2_HI: f64 = 6.931_471_803_691_238_2e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;

// 1.5 * 2^52: adding it rounds to an integer held in the low mantissa bits
const SHIFTER: f64 = 6_755_399_441_055_744.0;

/// `exp(y)` for `y <= 0`; inputs below -708 are clamped. Written without
/// casts or calls so slice loops over it vectorize.
#[inline(always)]
fn exp_nonpositive(y: f64) -> f64 {
    let y = if y < -708.0 { -708.0 } else { y };
    let shifted = y * LOG2E + SHIFTER;
    let k = shifted - SHIFTER;
    let r = (y - k * LN2_HI) - k * LN2_LO;
    let mut p = 1.0 / 6_227_020_800.0;
    p = p * r + 1.0 / 479_001_600.0;
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
    // k = round(y / ln 2) lies in [-1022, 0]; build 2^k from its bits
    let k_bits = shifted.to_bits().wrapping_sub(SHIFTER.to_bits());
    let scale = f64::from_bits(k_bits.wrapping_add(1023) << 52);
    p * scale
}

#[inline(always)]
pub fn tanh(x: f64) -> f64 {
    let e = exp_nonpositive(-2.0 * x.abs());
    ((1.0 - e) / (1.0 + e)).copysign(x)
}

pub fn tanh_in_place(values: &mut [f64]) {
    for v in values {
        *v = tanh(*v);
    }
}
