//! Arbitrary-precision real and complex arithmetic.
//!
//! The exact series algebra never touches floats.  This module is the single
//! place where floating point lives: evaluating finished series at a modular
//! parameter, S-matrix entries, and the residuals of the modular checks.
//! It wraps `astro-float` binary floats with an explicitly tracked working
//! precision (requested decimal digits plus guard bits).

use std::cell::RefCell;

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

const RM: RoundingMode = RoundingMode::ToEven;

/// Guard bits on top of the requested decimal precision.
const GUARD_BITS: usize = 64;

/// A working-precision context.
///
/// Not `Sync` (it holds a constants cache); create one per task.
pub struct Arith {
    bits: usize,
    cc: RefCell<Consts>,
}

/// Complex number at working precision, as a plain (re, im) pair.
#[derive(Clone, Debug)]
pub struct Cplx {
    pub re: BigFloat,
    pub im: BigFloat,
}

impl Arith {
    pub fn with_digits(digits: u32) -> Self {
        let bits = (digits as f64 * std::f64::consts::LOG2_10).ceil() as usize + GUARD_BITS;
        Arith {
            bits,
            cc: RefCell::new(Consts::new().expect("constants cache")),
        }
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn pi(&self) -> BigFloat {
        self.cc.borrow_mut().pi(self.bits, RM)
    }

    pub fn zero(&self) -> BigFloat {
        BigFloat::from_i64(0, self.bits)
    }

    pub fn from_i64(&self, x: i64) -> BigFloat {
        BigFloat::from_i64(x, self.bits)
    }

    pub fn from_bigint(&self, x: &BigInt) -> BigFloat {
        let digits = x.to_string();
        let p = self.bits.max(4 * digits.len() + 32);
        BigFloat::parse(&digits, Radix::Dec, p, RM, &mut self.cc.borrow_mut())
    }

    pub fn from_rat(&self, x: &BigRational) -> BigFloat {
        let n = self.from_bigint(x.numer());
        let d = self.from_bigint(x.denom());
        n.div(&d, self.bits, RM)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.bits, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.bits, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.bits, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.bits, RM)
    }

    pub fn sqrt(&self, a: &BigFloat) -> BigFloat {
        a.sqrt(self.bits, RM)
    }

    pub fn exp(&self, a: &BigFloat) -> BigFloat {
        a.exp(self.bits, RM, &mut self.cc.borrow_mut())
    }

    pub fn sin(&self, a: &BigFloat) -> BigFloat {
        a.sin(self.bits, RM, &mut self.cc.borrow_mut())
    }

    pub fn cos(&self, a: &BigFloat) -> BigFloat {
        a.cos(self.bits, RM, &mut self.cc.borrow_mut())
    }

    /// sin(pi * x) for exact rational x, reduced exactly before evaluation so
    /// that integer x gives an exact zero.
    pub fn sin_pi(&self, x: &BigRational) -> BigFloat {
        let two = BigRational::from_integer(2.into());
        let one = BigRational::from_integer(1.into());
        // reduce into [0, 2)
        let mut m = x - (x / &two).floor() * &two;
        let mut sign = 1i64;
        if m >= one {
            m -= &one;
            sign = -1;
        }
        // sin(pi m), m in [0,1); fold to [0, 1/2]
        if m > BigRational::new(1.into(), 2.into()) {
            m = &one - &m;
        }
        if m.is_zero() {
            return self.zero();
        }
        let arg = self.mul(&self.pi(), &self.from_rat(&m));
        let s = self.sin(&arg);
        if sign < 0 {
            s.neg()
        } else {
            s
        }
    }

    /// cos(pi * x) for exact rational x.
    pub fn cos_pi(&self, x: &BigRational) -> BigFloat {
        let half = BigRational::new(1.into(), 2.into());
        self.sin_pi(&(x + half))
    }

    /// Decimal string with `digits` significant mantissa digits.
    pub fn decimal_string(&self, x: &BigFloat, digits: u32) -> String {
        if x.is_zero() {
            return "0".to_string();
        }
        let s = match x.format(Radix::Dec, RM, &mut self.cc.borrow_mut()) {
            Ok(s) => s,
            Err(_) => return self.to_f64(x).to_string(),
        };
        match s.split_once(['e', 'E']) {
            Some((mant, exp)) => {
                let kept: String = mant
                    .chars()
                    .scan(0usize, |n, c| {
                        if c.is_ascii_digit() {
                            *n += 1;
                        }
                        if *n <= digits as usize {
                            Some(c)
                        } else {
                            None
                        }
                    })
                    .collect();
                format!("{kept}e{exp}")
            }
            None => s,
        }
    }

    pub fn to_f64(&self, a: &BigFloat) -> f64 {
        if a.is_zero() {
            return 0.0;
        }
        if a.is_nan() {
            return f64::NAN;
        }
        if a.is_inf_pos() {
            return f64::INFINITY;
        }
        if a.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        let s = a
            .format(Radix::Dec, RM, &mut self.cc.borrow_mut())
            .unwrap_or_default();
        s.parse::<f64>().unwrap_or(f64::NAN)
    }

    // ---- complex helpers -------------------------------------------------

    pub fn czero(&self) -> Cplx {
        Cplx {
            re: self.zero(),
            im: self.zero(),
        }
    }

    pub fn cplx_from_rats(&self, re: &BigRational, im: &BigRational) -> Cplx {
        Cplx {
            re: self.from_rat(re),
            im: self.from_rat(im),
        }
    }

    pub fn cadd(&self, a: &Cplx, b: &Cplx) -> Cplx {
        Cplx {
            re: self.add(&a.re, &b.re),
            im: self.add(&a.im, &b.im),
        }
    }

    pub fn csub(&self, a: &Cplx, b: &Cplx) -> Cplx {
        Cplx {
            re: self.sub(&a.re, &b.re),
            im: self.sub(&a.im, &b.im),
        }
    }

    pub fn cmul(&self, a: &Cplx, b: &Cplx) -> Cplx {
        Cplx {
            re: self.sub(&self.mul(&a.re, &b.re), &self.mul(&a.im, &b.im)),
            im: self.add(&self.mul(&a.re, &b.im), &self.mul(&a.im, &b.re)),
        }
    }

    pub fn cscale(&self, a: &BigFloat, z: &Cplx) -> Cplx {
        Cplx {
            re: self.mul(a, &z.re),
            im: self.mul(a, &z.im),
        }
    }

    pub fn cneg(&self, z: &Cplx) -> Cplx {
        Cplx {
            re: z.re.neg(),
            im: z.im.neg(),
        }
    }

    pub fn cabs(&self, z: &Cplx) -> BigFloat {
        let n = self.add(&self.mul(&z.re, &z.re), &self.mul(&z.im, &z.im));
        self.sqrt(&n)
    }

    /// Principal branch square root.  Correct for all inputs off the negative
    /// real axis, which is the only regime the modular prefactors need
    /// (`-i*tau` has positive real part whenever `Im tau > 0`).
    pub fn csqrt(&self, z: &Cplx) -> Cplx {
        let r = self.cabs(z);
        let two = self.from_i64(2);
        let u2 = self.div(&self.add(&r, &z.re), &two);
        let v2 = self.div(&self.sub(&r, &z.re), &two);
        let u = self.sqrt(&u2);
        let v = self.sqrt(&v2);
        let v = if z.im.is_negative() { v.neg() } else { v };
        Cplx { re: u, im: v }
    }

    /// exp(2*pi*i*e*tau) for exact rational e and tau = x + i y.
    pub fn q_power(&self, tau_re: &BigRational, tau_im: &BigRational, e: &BigRational) -> Cplx {
        let two_pi = self.mul(&self.from_i64(2), &self.pi());
        let ex = self.from_rat(&(e * tau_re));
        let ey = self.from_rat(&(e * tau_im));
        let modulus = self.exp(&self.mul(&two_pi, &ey).neg());
        let phase = self.mul(&two_pi, &ex);
        Cplx {
            re: self.mul(&modulus, &self.cos(&phase)),
            im: self.mul(&modulus, &self.sin(&phase)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::str::FromStr;

    #[test]
    fn pi_digits() {
        let ar = Arith::with_digits(60);
        let pi = ar.pi();
        let reference = "3.14159265358979323846264338327950288419716939937510582097494";
        let mut cc = Consts::new().unwrap();
        let refv = BigFloat::parse(reference, Radix::Dec, ar.bits(), RM, &mut cc);
        let err = ar.to_f64(&ar.sub(&pi, &refv).abs());
        assert!(err < 1e-58, "pi error {err}");
    }

    #[test]
    fn rational_conversion_round_trip() {
        let ar = Arith::with_digits(40);
        let r = BigRational::from_str("-123456789/65536").unwrap();
        let x = ar.from_rat(&r);
        // exact: denominator is a power of two
        assert_eq!(ar.to_f64(&x), -123456789.0 / 65536.0);
    }

    #[test]
    fn sin_pi_exact_zeros_and_halves() {
        let ar = Arith::with_digits(50);
        for n in -4i64..=4 {
            let z = ar.sin_pi(&BigRational::from_integer(n.into()));
            assert!(z.is_zero(), "sin(pi*{n}) should be exactly zero");
        }
        let h = ar.sin_pi(&BigRational::from_str("1/2").unwrap());
        assert!((ar.to_f64(&h) - 1.0).abs() < 1e-45);
        let m = ar.sin_pi(&BigRational::from_str("3/2").unwrap());
        assert!((ar.to_f64(&m) + 1.0).abs() < 1e-45);
        let c = ar.cos_pi(&BigRational::from_str("1/3").unwrap());
        assert!((ar.to_f64(&c) - 0.5).abs() < 1e-45);
    }

    #[test]
    fn csqrt_principal_branch() {
        let ar = Arith::with_digits(40);
        // sqrt(-i) = (1 - i)/sqrt(2): -i = (0, -1)
        let z = Cplx {
            re: ar.from_i64(0),
            im: ar.from_i64(-1),
        };
        let s = ar.csqrt(&z);
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        assert!((ar.to_f64(&s.re) - inv_sqrt2).abs() < 1e-15);
        assert!((ar.to_f64(&s.im) + inv_sqrt2).abs() < 1e-15);
        // square back
        let sq = ar.cmul(&s, &s);
        assert!(ar.to_f64(&sq.re).abs() < 1e-30);
        assert!((ar.to_f64(&sq.im) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn q_power_at_i() {
        let ar = Arith::with_digits(40);
        // q = exp(2 pi i tau) at tau = i is exp(-2 pi)
        let one = BigRational::from_integer(1.into());
        let zero = BigRational::zero();
        let q = ar.q_power(&zero, &one, &one);
        assert!((ar.to_f64(&q.re) - (-2.0 * std::f64::consts::PI).exp()).abs() < 1e-16);
        assert!(ar.to_f64(&q.im).abs() < 1e-35);
    }
}
