//! Counter-based complex Gaussian noise.
//!
//! Every sample is a pure function of `(seed, slot_index, n)`, so noise is
//! reproducible regardless of how slots are chunked or which thread
//! computes them. The seed and slot are folded into a 64-bit key with a
//! SplitMix64 finalizer; per-sample uniforms come from 32-bit murmur3
//! finalizers over the sample counter, and Box-Muller runs in f32 so blocks
//! vectorize.

use std::f32::consts::{FRAC_PI_2, LN_2, SQRT_2};

use num_complex::Complex64;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const SLOT_MUL: u64 = 0xD1B5_4A32_D192_ED03;
const MUL_A: u32 = 0x9E37_79B9;
const MUL_B: u32 = 0x85EB_CA6B;
const BLOCK: usize = 64;
const TWO_M32: f32 = 1.0 / 4_294_967_296.0;

#[inline(always)]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline(always)]
fn fmix32(mut h: u32) -> u32 {
    h ^= h >> 16;
    h = h.wrapping_mul(0x85EB_CA6B);
    h ^= h >> 13;
    h = h.wrapping_mul(0xC2B2_AE35);
    h ^ (h >> 16)
}

/// Natural log for normal positive `x`, accurate to f32 precision.
#[inline(always)]
fn ln_pos(x: f32) -> f32 {
    let bits = x.to_bits();
    let mut exp = (bits >> 23) as i32;
    let mut m = f32::from_bits((bits & 0x007f_ffff) | 0x3f80_0000);
    let big = m > SQRT_2;
    m = if big { m * 0.5 } else { m };
    exp += big as i32;
    let e = (exp - 127) as f32;
    let s = (m - 1.0) / (m + 1.0);
    let z = s * s;
    let p = 1.0 + z * (1.0 / 3.0 + z * (1.0 / 5.0 + z * (1.0 / 7.0 + z * (1.0 / 9.0))));
    e * LN_2 + 2.0 * s * p
}

/// `(sin, cos)` of `2 pi b / 2^32`.
#[inline(always)]
fn sin_cos_turn(b: u32) -> (f32, f32) {
    let shifted = b.wrapping_add(1 << 29);
    let q = shifted >> 30;
    let d = (shifted & 0x3fff_ffff) as i32 - (1 << 29);
    let x = d as f32 * (FRAC_PI_2 / 1_073_741_824.0);
    let z = x * x;
    let sin = x
        * (1.0
            + z * (-1.0 / 6.0 + z * (1.0 / 120.0 + z * (-1.0 / 5040.0 + z * (1.0 / 362_880.0)))));
    let cos = 1.0
        + z * (-0.5
            + z * (1.0 / 24.0
                + z * (-1.0 / 720.0 + z * (1.0 / 40_320.0 + z * (-1.0 / 3_628_800.0)))));
    let odd = q & 1 == 1;
    let (s, c) = if odd { (cos, -sin) } else { (sin, cos) };
    let flip = ((q >> 1) & 1) << 31;
    (
        f32::from_bits(s.to_bits() ^ flip),
        f32::from_bits(c.to_bits() ^ flip),
    )
}

/// Unit-variance circular complex Gaussian source (0.5 per component).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CounterGaussian {
    key: u64,
}

impl CounterGaussian {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix64(seed.wrapping_add(GOLDEN)),
        }
    }

    /// Stream for one slot; cheap to construct.
    #[inline]
    pub fn slot(&self, slot_index: u64) -> SlotNoise {
        let k = mix64(self.key ^ slot_index.wrapping_mul(SLOT_MUL));
        SlotNoise {
            k1: k as u32,
            k2: (k >> 32) as u32,
        }
    }

    pub fn sample(&self, slot_index: u64, n: u64) -> Complex64 {
        let (re, im) = self.slot(slot_index).pair(n);
        Complex64::new(re, im)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SlotNoise {
    k1: u32,
    k2: u32,
}

impl SlotNoise {
    #[inline(always)]
    fn hashes(&self, n: u32) -> (u32, u32) {
        (
            fmix32(n.wrapping_mul(MUL_A).wrapping_add(self.k1)),
            fmix32(n.wrapping_mul(MUL_B).wrapping_add(self.k2)),
        )
    }

    /// Uniforms `(u1, u2)` with `u1` in (0, 1] and `u2` in [0, 1).
    ///
    /// `n` wraps at 2^32 samples per slot.
    #[inline(always)]
    pub fn uniforms(&self, n: u64) -> (f64, f64) {
        let (h1, h2) = self.hashes(n as u32);
        (
            ((h1 as f32 + 0.5) * TWO_M32) as f64,
            h2 as f64 / 4_294_967_296.0,
        )
    }

    #[inline(always)]
    fn pair_f32(&self, n: u32) -> (f32, f32) {
        let (h1, h2) = self.hashes(n);
        let u1 = (h1 as f32 + 0.5) * TWO_M32;
        // sqrt(-2 ln u1) scaled by sqrt(1/2) for 0.5 variance per component.
        let r = (-ln_pos(u1)).sqrt();
        let (s, c) = sin_cos_turn(h2);
        (r * c, r * s)
    }

    /// Real and imaginary parts of sample `n`.
    #[inline(always)]
    pub fn pair(&self, n: u64) -> (f64, f64) {
        let (a, b) = self.pair_f32(n as u32);
        (a as f64, b as f64)
    }

    /// Adds `sigma * w[n]` for `n = start..start + re.len()`.
    pub fn add_scaled(&self, start: u64, sigma: f64, re: &mut [f64], im: &mut [f64]) {
        #[cfg(target_arch = "x86_64")]
        {
            if std::is_x86_feature_detected!("avx512dq") {
                // SAFETY: the required CPU feature was detected above.
                unsafe { self.add_scaled_avx512(start, sigma, re, im) };
                return;
            }
            if std::is_x86_feature_detected!("avx2") {
                // SAFETY: the required CPU feature was detected above.
                unsafe { self.add_scaled_avx2(start, sigma, re, im) };
                return;
            }
        }
        self.add_scaled_impl(start, sigma, re, im)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx512f,avx512dq")]
    unsafe fn add_scaled_avx512(&self, start: u64, sigma: f64, re: &mut [f64], im: &mut [f64]) {
        self.add_scaled_impl(start, sigma, re, im)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn add_scaled_avx2(&self, start: u64, sigma: f64, re: &mut [f64], im: &mut [f64]) {
        self.add_scaled_impl(start, sigma, re, im)
    }

    #[inline(always)]
    fn add_scaled_impl(&self, start: u64, sigma: f64, re: &mut [f64], im: &mut [f64]) {
        let len = re.len().min(im.len());
        let mut wr = [0.0f32; BLOCK];
        let mut wi = [0.0f32; BLOCK];
        let mut base = 0;
        while base < len {
            let m = BLOCK.min(len - base);
            let n0 = start.wrapping_add(base as u64) as u32;
            for j in 0..BLOCK {
                let (a, b) = self.pair_f32(n0.wrapping_add(j as u32));
                wr[j] = a;
                wi[j] = b;
            }
            for (y, w) in re[base..base + m].iter_mut().zip(&wr[..m]) {
                *y += sigma * *w as f64;
            }
            for (y, w) in im[base..base + m].iter_mut().zip(&wi[..m]) {
                *y += sigma * *w as f64;
            }
            base += m;
        }
    }
}
