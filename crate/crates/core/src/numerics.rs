//! Configurable-precision complex amplitudes.
//!
//! Every diagram stores its values as [`Amplitude`]s whose two components are
//! MPFR floats carrying `mantissa_bits` bits of precision. The precision is a
//! property of one simulation ([`PrecisionConfig`]), never a global.
//!
//! Leaf coalescing works on an absolute grid of spacing `leaf_epsilon`: two
//! amplitudes share a [`GridKey`] iff both components round to the same
//! multiple of epsilon. Raising the precision shrinks the grid, which is the
//! remedy for distinct tiny amplitudes collapsing onto the zero cell.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Integer};

use crate::error::{Error, Result};

/// Real scalar used throughout the symbolic backends.
pub type Real = Float;

pub const DEFAULT_MANTISSA_BITS: u32 = 53;
pub const DEFAULT_LEAF_EPSILON: f64 = 1e-12;
pub const MIN_MANTISSA_BITS: u32 = 16;
/// `leaf_epsilon` is stored as an `f64`, so the grid cannot get finer than
/// what a subnormal double can express.
pub const MAX_MANTISSA_BITS: u32 = 1024;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrecisionConfig {
    mantissa_bits: u32,
    leaf_epsilon: f64,
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        PrecisionConfig {
            mantissa_bits: DEFAULT_MANTISSA_BITS,
            leaf_epsilon: DEFAULT_LEAF_EPSILON,
        }
    }
}

impl PrecisionConfig {
    pub fn new(mantissa_bits: u32, leaf_epsilon: f64) -> Result<Self> {
        if !(MIN_MANTISSA_BITS..=MAX_MANTISSA_BITS).contains(&mantissa_bits) {
            return Err(Error::Config(format!(
                "mantissa_bits must lie in {MIN_MANTISSA_BITS}..={MAX_MANTISSA_BITS}, got {mantissa_bits}"
            )));
        }
        if !(leaf_epsilon.is_finite() && leaf_epsilon > 0.0) {
            return Err(Error::Config(format!(
                "leaf_epsilon must be a positive finite number, got {leaf_epsilon}"
            )));
        }
        let machine_eps = 2f64.powi(1 - mantissa_bits as i32);
        if leaf_epsilon < machine_eps {
            return Err(Error::Config(format!(
                "leaf_epsilon {leaf_epsilon:e} is below the machine epsilon {machine_eps:e} at {mantissa_bits} bits"
            )));
        }
        Ok(PrecisionConfig {
            mantissa_bits,
            leaf_epsilon,
        })
    }

    /// Precision with the epsilon scaled to `2^(12 - mantissa_bits)`; the
    /// default 53-bit configuration keeps its `1e-12` epsilon.
    pub fn with_mantissa_bits(mantissa_bits: u32) -> Result<Self> {
        if mantissa_bits == DEFAULT_MANTISSA_BITS {
            return Ok(Self::default());
        }
        let eps = 2f64.powi(12 - mantissa_bits as i32);
        Self::new(mantissa_bits, eps)
    }

    pub fn mantissa_bits(&self) -> u32 {
        self.mantissa_bits
    }

    pub fn leaf_epsilon(&self) -> f64 {
        self.leaf_epsilon
    }

    /// Default tolerance of `measurement_counts`: `2^10 * leaf_epsilon`.
    pub fn counts_tolerance(&self) -> f64 {
        1024.0 * self.leaf_epsilon
    }

    /// Slack allowed on the total probability mass of a state.
    pub fn norm_tolerance(&self) -> f64 {
        (1u64 << 20) as f64 * self.leaf_epsilon
    }

    pub fn real(&self, x: f64) -> Real {
        Float::with_val(self.mantissa_bits, x)
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self)
    }
}

/// Complex number at a fixed binary precision.
#[derive(Clone, PartialEq)]
pub struct Amplitude {
    re: Float,
    im: Float,
}

impl fmt::Debug for Amplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:e}, {:e})", self.re.to_f64(), self.im.to_f64())
    }
}

impl fmt::Display for Amplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (re, im) = (self.re.to_f64(), self.im.to_f64());
        if im >= 0.0 {
            write!(f, "{re}+{im}i")
        } else {
            write!(f, "{re}{im}i")
        }
    }
}

impl Amplitude {
    pub fn zero(prec: u32) -> Self {
        Amplitude {
            re: Float::new(prec),
            im: Float::new(prec),
        }
    }

    pub fn one(prec: u32) -> Self {
        Amplitude {
            re: Float::with_val(prec, 1),
            im: Float::new(prec),
        }
    }

    pub fn from_f64(re: f64, im: f64, prec: u32) -> Self {
        assert!(re.is_finite() && im.is_finite(), "non-finite amplitude");
        Amplitude {
            re: Float::with_val(prec, re),
            im: Float::with_val(prec, im),
        }
    }

    pub fn from_real(re: Float) -> Self {
        let im = Float::new(re.prec());
        Amplitude { re, im }
    }

    pub fn from_parts(re: Float, im: Float) -> Self {
        debug_assert!(re.is_finite() && im.is_finite());
        Amplitude { re, im }
    }

    /// `1/sqrt(2)` rounded once at `prec` bits.
    pub fn frac_1_sqrt2(prec: u32) -> Self {
        let mut x = Float::with_val(prec, 2);
        x.recip_sqrt_mut();
        Amplitude::from_real(x)
    }

    /// `e^{2 pi i turns}`. Multiples of 1/8 turn are produced exactly (up to the
    /// single rounding of `1/sqrt(2)`), so dyadic phases never pick up spurious
    /// `1e-17` residue in the other component.
    pub fn phase_turns(turns: f64, prec: u32) -> Self {
        let eighths = turns * 8.0;
        if eighths.fract() == 0.0 && eighths.abs() < 1e15 {
            let k = (eighths as i64).rem_euclid(8);
            let h = Amplitude::frac_1_sqrt2(prec).re;
            let neg_h = Float::with_val(prec, -&h);
            let (re, im) = match k {
                0 => (Float::with_val(prec, 1), Float::new(prec)),
                1 => (h.clone(), h),
                2 => (Float::new(prec), Float::with_val(prec, 1)),
                3 => (neg_h, h),
                4 => (Float::with_val(prec, -1), Float::new(prec)),
                5 => (neg_h.clone(), neg_h),
                6 => (Float::new(prec), Float::with_val(prec, -1)),
                _ => (h, neg_h),
            };
            return Amplitude { re, im };
        }
        let pi = Float::with_val(prec + 16, Constant::Pi);
        let angle = Float::with_val(prec + 16, pi * 2u32) * turns;
        let (s, c) = angle.sin_cos(Float::new(prec + 16));
        Amplitude {
            re: Float::with_val(prec, c),
            im: Float::with_val(prec, s),
        }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn re(&self) -> &Float {
        &self.re
    }

    pub fn im(&self) -> &Float {
        &self.im
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    pub fn to_complex64(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn conj(&self) -> Self {
        Amplitude {
            re: self.re.clone(),
            im: Float::with_val(self.prec(), -&self.im),
        }
    }

    /// `|a|^2 = re^2 + im^2`, rounded once.
    pub fn norm_sqr(&self) -> Float {
        Float::with_val(
            self.prec(),
            &self.re * &self.re + &self.im * &self.im,
        )
    }

    pub fn scale(&self, k: &Float) -> Self {
        let p = self.prec();
        Amplitude {
            re: Float::with_val(p, &self.re * k),
            im: Float::with_val(p, &self.im * k),
        }
    }

    pub fn scale_integer(&self, k: &Integer) -> Self {
        let p = self.prec();
        Amplitude {
            re: Float::with_val(p, &self.re * k),
            im: Float::with_val(p, &self.im * k),
        }
    }

    /// Complex quotient. `rhs` must be nonzero.
    pub fn div(&self, rhs: &Amplitude) -> Self {
        let p = self.prec();
        let wp = p + 16;
        let den = Float::with_val(wp, &rhs.re * &rhs.re + &rhs.im * &rhs.im);
        let re = Float::with_val(wp, &self.re * &rhs.re + &self.im * &rhs.im);
        let im = Float::with_val(wp, &self.im * &rhs.re - &self.re * &rhs.im);
        Amplitude {
            re: Float::with_val(p, re / &den),
            im: Float::with_val(p, im / &den),
        }
    }

    /// Componentwise comparison within `eps`; `eps == 0` is exact equality.
    pub fn approx_eq(&self, other: &Amplitude, eps: f64) -> bool {
        let p = self.prec().max(other.prec());
        let dr = Float::with_val(p, &self.re - &other.re).abs();
        let di = Float::with_val(p, &self.im - &other.im).abs();
        dr <= eps && di <= eps
    }
}

impl Add for &Amplitude {
    type Output = Amplitude;
    fn add(self, rhs: &Amplitude) -> Amplitude {
        let p = self.prec();
        Amplitude {
            re: Float::with_val(p, &self.re + &rhs.re),
            im: Float::with_val(p, &self.im + &rhs.im),
        }
    }
}

impl Sub for &Amplitude {
    type Output = Amplitude;
    fn sub(self, rhs: &Amplitude) -> Amplitude {
        let p = self.prec();
        Amplitude {
            re: Float::with_val(p, &self.re - &rhs.re),
            im: Float::with_val(p, &self.im - &rhs.im),
        }
    }
}

impl Mul for &Amplitude {
    type Output = Amplitude;
    fn mul(self, rhs: &Amplitude) -> Amplitude {
        let p = self.prec();
        // fused ac - bd and ad + bc: one rounding per component
        Amplitude {
            re: Float::with_val(p, &self.re * &rhs.re - &self.im * &rhs.im),
            im: Float::with_val(p, &self.re * &rhs.im + &self.im * &rhs.re),
        }
    }
}

impl Neg for &Amplitude {
    type Output = Amplitude;
    fn neg(self) -> Amplitude {
        let p = self.prec();
        Amplitude {
            re: Float::with_val(p, -&self.re),
            im: Float::with_val(p, -&self.im),
        }
    }
}

/// One coordinate of a [`GridKey`]; small values avoid a heap integer.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Coord {
    Small(i64),
    Big(Integer),
}

/// Cell of the epsilon grid an amplitude falls into.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GridKey {
    re: Coord,
    im: Coord,
    /// Binary exponent of the cell size for relative keys; 0 for absolute ones.
    exp: i32,
}

impl GridKey {
    pub fn is_zero(&self) -> bool {
        self.re == Coord::Small(0) && self.im == Coord::Small(0) && self.exp == 0
    }
}

/// Quantizer onto the absolute epsilon grid of a [`PrecisionConfig`].
#[derive(Clone, Debug)]
pub struct Grid {
    eps: f64,
    inv_eps: Float,
    prec: u32,
}

impl Grid {
    pub fn new(cfg: &PrecisionConfig) -> Self {
        let prec = cfg.mantissa_bits();
        let inv_eps = Float::with_val(prec + 16, cfg.leaf_epsilon()).recip();
        Grid {
            eps: cfg.leaf_epsilon(),
            inv_eps,
            prec,
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn coord(&self, x: &Float) -> Coord {
        if x.is_zero() {
            return Coord::Small(0);
        }
        let scaled = Float::with_val(self.prec + 16, x * &self.inv_eps);
        let int = scaled
            .round()
            .to_integer()
            .expect("finite amplitude component");
        match int.to_i64() {
            Some(v) => Coord::Small(v),
            None => Coord::Big(int),
        }
    }

    pub fn key(&self, a: &Amplitude) -> GridKey {
        GridKey {
            re: self.coord(&a.re),
            im: self.coord(&a.im),
            exp: 0,
        }
    }

    /// Key on a grid scaled to the larger component of `a`, so that values
    /// of any magnitude are told apart at relative resolution `eps`. Only an
    /// exact zero gets the zero key.
    pub fn relative_key(&self, a: &Amplitude) -> GridKey {
        let big = if a.re.clone().abs() >= a.im.clone().abs() { &a.re } else { &a.im };
        let Some(e) = big.get_exp() else {
            return GridKey { re: Coord::Small(0), im: Coord::Small(0), exp: 0 };
        };
        let bits = (-self.eps.log2()).ceil() as i32;
        let shift = bits - e;
        let coord = |x: &Float| {
            let scaled = Float::with_val(self.prec + 16, x << shift);
            Coord::Small(scaled.round().to_f64() as i64)
        };
        // the exponent is offset so no nonzero key collides with an absolute one
        GridKey { re: coord(&a.re), im: coord(&a.im), exp: e.saturating_add(1 << 20) }
    }

    /// Grid key of a non-negative real, used for bucketing probabilities.
    pub fn real_key(&self, x: &Float) -> GridKey {
        GridKey {
            re: self.coord(x),
            im: Coord::Small(0),
            exp: 0,
        }
    }
}

/// `2^exp` at `prec` bits (exact for any exponent in MPFR's range).
pub fn pow2(prec: u32, exp: i64) -> Float {
    let two = Float::with_val(prec, 2);
    Float::with_val(prec, two.pow(exp as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn amp(re: f64, im: f64) -> Amplitude {
        Amplitude::from_f64(re, im, 53)
    }

    #[test]
    fn add_examples() {
        assert_eq!(&amp(1.0, 0.0) + &amp(0.0, 1.0), amp(1.0, 1.0));
        let h = Amplitude::frac_1_sqrt2(53);
        assert!((&h + &(-&h)).is_zero());
        assert_eq!(&amp(0.5, 0.25) + &amp(0.25, 0.5), amp(0.75, 0.75));
    }

    #[test]
    fn mul_examples() {
        let h = Amplitude::frac_1_sqrt2(53);
        let r = &h * &amp(-1.0, 0.0);
        assert_eq!(r, -&h);
        assert_eq!(&amp(0.0, 1.0) * &amp(0.0, 1.0), amp(-1.0, 0.0));
        let a = amp(0.3, -0.7);
        assert_eq!(&a * &Amplitude::one(53), a);
    }

    #[test]
    fn approx_eq_examples() {
        let a = amp(0.1, 0.2);
        assert!(a.approx_eq(&a, 1e-30));
        assert!(amp(0.0, 0.0).approx_eq(&amp(1e-15, 0.0), 1e-12));
        assert!(!amp(0.0, 0.0).approx_eq(&amp(1e-6, 0.0), 1e-12));
        assert!(!amp(0.0, 0.0).approx_eq(&amp(1e-300, 0.0), 0.0));
        assert!(a.approx_eq(&a.clone(), 0.0));
    }

    #[test]
    fn precision_config_validation() {
        assert!(PrecisionConfig::new(53, 0.0).is_err());
        assert!(PrecisionConfig::new(53, 1e-20).is_err());
        assert!(PrecisionConfig::new(8, 1e-2).is_err());
        let p = PrecisionConfig::with_mantissa_bits(128).unwrap();
        assert_eq!(p.leaf_epsilon(), 2f64.powi(-116));
        assert_eq!(PrecisionConfig::with_mantissa_bits(53).unwrap(), PrecisionConfig::default());
    }

    #[test]
    fn dyadic_results_independent_of_precision() {
        for bits in [53, 128, 256] {
            let a = Amplitude::from_f64(0.375, -0.125, bits);
            let b = Amplitude::from_f64(0.5, 0.25, bits);
            let s = &(&a * &b) + &a;
            assert_eq!(s.to_f64_pair(), (0.59375, -0.09375));
        }
    }

    #[test]
    fn phase_turns_exact_eighths() {
        let i = Amplitude::phase_turns(0.25, 53);
        assert_eq!(i, amp(0.0, 1.0));
        let m = Amplitude::phase_turns(-0.5, 53);
        assert_eq!(m, amp(-1.0, 0.0));
        let t = Amplitude::phase_turns(1.0 / 8.0, 53);
        let h = Amplitude::frac_1_sqrt2(53);
        assert_eq!(t.re(), h.re());
        assert_eq!(t.im(), h.re());
        let x = Amplitude::phase_turns(1.0 / 16.0, 53);
        let (re, im) = x.to_f64_pair();
        assert!((re - (std::f64::consts::PI / 8.0).cos()).abs() < 1e-15);
        assert!((im - (std::f64::consts::PI / 8.0).sin()).abs() < 1e-15);
    }

    #[test]
    fn grid_keys_bucket_near_values() {
        let g = PrecisionConfig::default().grid();
        assert_eq!(g.key(&amp(0.0, 0.0)), g.key(&amp(1e-15, -1e-14)));
        assert!(g.key(&amp(1e-15, 0.0)).is_zero());
        assert_ne!(g.key(&amp(0.0, 0.0)), g.key(&amp(1e-6, 0.0)));
        let h = Amplitude::frac_1_sqrt2(53);
        assert_ne!(g.key(&h), g.key(&-&h));
        // tiny values collapse at 53 bits but not at 256 bits
        let tiny = pow2(53, -64);
        assert!(g.real_key(&tiny).is_zero());
        let p = PrecisionConfig::with_mantissa_bits(256).unwrap();
        assert!(!p.grid().real_key(&pow2(256, -64)).is_zero());
    }

    #[test]
    fn pow2_is_exact_beyond_f64_range() {
        let x = pow2(53, -4096);
        let y = pow2(53, 4096);
        assert_eq!(Float::with_val(53, &x * &y), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_amp() -> impl Strategy<Value = Amplitude> {
            (-4.0f64..4.0, -4.0f64..4.0).prop_map(|(r, i)| Amplitude::from_f64(r, i, 53))
        }

        proptest! {
            #[test]
            fn add_mul_commute(a in arb_amp(), b in arb_amp()) {
                prop_assert_eq!(&a + &b, &b + &a);
                prop_assert_eq!(&a * &b, &b * &a);
            }

            #[test]
            fn add_mul_associate_within_ulps(a in arb_amp(), b in arb_amp(), c in arb_amp()) {
                let l = &(&a * &b) * &c;
                let r = &a * &(&b * &c);
                prop_assert!(l.approx_eq(&r, 1e-13));
                let l = &(&a + &b) + &c;
                let r = &a + &(&b + &c);
                prop_assert!(l.approx_eq(&r, 1e-14));
            }

            #[test]
            fn norm_sqr_non_negative(a in arb_amp()) {
                prop_assert!(a.norm_sqr() >= 0);
            }
        }
    }
}
