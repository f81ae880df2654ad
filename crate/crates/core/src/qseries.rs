//! Exact generalized q-series.
//!
//! A [`QSeries`] stores finitely many terms `c_n q^{a + n/D}` with exact
//! rational coefficients, together with a hard truncation order `N`: every
//! exponent `<= N` that the represented object supports is stored, everything
//! above is dropped.  Binary operations re-lattice through lcm denominators
//! and propagate the truncation order soundly, so a result is always exact up
//! to its stated order.
//!
//! Truncation is by exponent value, not term count; lattice and theta sums
//! with quadratically growing exponents therefore truncate exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::precision::{Arith, Cplx};

/// Exact rational scalar used for exponents, weights and coefficients.
pub type Rat = BigRational;

/// Shorthand for `n/d` as a [`Rat`].
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}

/// Shorthand for an integer [`Rat`].
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum QSeriesError {
    #[error("evaluation point must have positive imaginary part")]
    NonconvergentEvaluation,
    #[error("cannot invert a series that is zero to its truncation order")]
    InvertZeroSeries,
    #[error("malformed series JSON: {0}")]
    BadJson(String),
}

/// An exact truncated q-expansion with exponents in `offset + (1/denom) Z>=0`.
#[derive(Clone, Debug)]
pub struct QSeries {
    offset: Rat,
    denom: u64,
    order: Rat,
    coeffs: Vec<Rat>,
}

fn lcm_u64(a: u64, b: u64) -> u64 {
    a / a.gcd(&b) * b
}

fn rat_denom_u64(x: &Rat) -> u64 {
    x.denom()
        .to_u64()
        .expect("exponent denominator exceeds u64")
}

impl QSeries {
    /// The zero series truncated at `order`.
    pub fn zero(order: Rat) -> Self {
        QSeries {
            offset: Rat::zero(),
            denom: 1,
            order,
            coeffs: Vec::new(),
        }
    }

    /// Constant series `c`, truncated at `order` (drops to zero if `order < 0`).
    pub fn constant(c: Rat, order: Rat) -> Self {
        Self::from_terms([(Rat::zero(), c)], order)
    }

    pub fn one(order: Rat) -> Self {
        Self::constant(Rat::one(), order)
    }

    /// Single term `c q^e`, truncated at `order`.
    pub fn monomial(e: Rat, c: Rat, order: Rat) -> Self {
        Self::from_terms([(e, c)], order)
    }

    /// Build a series from (exponent, coefficient) pairs.  Duplicate exponents
    /// accumulate; terms above `order` are dropped.
    pub fn from_terms<I>(terms: I, order: Rat) -> Self
    where
        I: IntoIterator<Item = (Rat, Rat)>,
    {
        let mut map: BTreeMap<Rat, Rat> = BTreeMap::new();
        for (e, c) in terms {
            if e > order || c.is_zero() {
                continue;
            }
            let slot = map.entry(e).or_insert_with(Rat::zero);
            *slot += c;
        }
        map.retain(|_, c| !c.is_zero());
        let Some(offset) = map.keys().next().cloned() else {
            return Self::zero(order);
        };
        let mut denom = rat_denom_u64(&offset);
        for e in map.keys() {
            denom = lcm_u64(denom, rat_denom_u64(e));
        }
        let d_big = Rat::from_integer(denom.into());
        let len = ((map.keys().next_back().unwrap() - &offset) * &d_big)
            .to_integer()
            .to_usize()
            .expect("series too long");
        let mut coeffs = vec![Rat::zero(); len + 1];
        for (e, c) in map {
            let idx = ((&e - &offset) * &d_big).to_integer().to_usize().unwrap();
            coeffs[idx] = c;
        }
        QSeries {
            offset,
            denom,
            order,
            coeffs,
        }
        .normalized()
    }

    fn normalized(mut self) -> Self {
        let lead = self.coeffs.iter().position(|c| !c.is_zero());
        match lead {
            None => QSeries::zero(self.order),
            Some(0) => {
                while self.coeffs.last().is_some_and(Zero::is_zero) {
                    self.coeffs.pop();
                }
                self
            }
            Some(k) => {
                self.offset += Rat::new((k as i64).into(), (self.denom as i64).into());
                self.coeffs.drain(..k);
                while self.coeffs.last().is_some_and(Zero::is_zero) {
                    self.coeffs.pop();
                }
                self
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Exponent of the first stored lattice slot (the leading exponent for a
    /// nonzero series).
    pub fn offset(&self) -> &Rat {
        &self.offset
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    pub fn order(&self) -> &Rat {
        &self.order
    }

    /// Leading (exponent, coefficient), if the series is nonzero.
    pub fn leading(&self) -> Option<(Rat, &Rat)> {
        self.coeffs
            .first()
            .map(|c| (self.offset.clone(), c))
            .filter(|(_, c)| !c.is_zero())
    }

    fn exponent_at(&self, idx: usize) -> Rat {
        &self.offset + Rat::new((idx as i64).into(), (self.denom as i64).into())
    }

    /// Iterate the nonzero terms in ascending exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (Rat, &Rat)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (self.exponent_at(i), c))
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.iter().filter(|c| !c.is_zero()).count()
    }

    /// Coefficient of `q^e` (zero if the exponent is not stored).
    pub fn coeff(&self, e: &Rat) -> Rat {
        let rel = e - &self.offset;
        if rel.is_negative() {
            return Rat::zero();
        }
        let scaled = rel * Rat::from_integer(self.denom.into());
        if !scaled.is_integer() {
            return Rat::zero();
        }
        match scaled.to_integer().to_usize() {
            Some(i) if i < self.coeffs.len() => self.coeffs[i].clone(),
            _ => Rat::zero(),
        }
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c = -c.clone();
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Self::zero(self.order.clone());
        }
        let mut out = self.clone();
        for x in &mut out.coeffs {
            *x *= c;
        }
        out
    }

    /// Multiply by the monomial `q^e` (exact; order shifts along).
    pub fn shift(&self, e: &Rat) -> Self {
        let mut out = self.clone();
        out.offset += e;
        out.order += e;
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let order = self.order.clone().min(rhs.order.clone());
        let terms = self
            .terms()
            .map(|(e, c)| (e, c.clone()))
            .chain(rhs.terms().map(|(e, c)| (e, c.clone())));
        Self::from_terms(terms, order)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    /// Exact truncated product.  The result order is the sound exactness
    /// bound `min(order(a) + lead(b), order(b) + lead(a))`: coefficients up to
    /// it receive every contribution the factors can supply.
    pub fn mul(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            // a stored zero has no terms up to its order, so the product has
            // none up to order + lead of the other factor
            let order = match (self.leading(), rhs.leading()) {
                (None, Some((lb, _))) => &self.order + lb,
                (Some((la, _)), None) => &rhs.order + la,
                _ => &self.order + &rhs.order,
            };
            return Self::zero(order);
        }
        let order = (self.order.clone() + rhs.offset.clone())
            .min(rhs.order.clone() + self.offset.clone());
        let denom = lcm_u64(self.denom, rhs.denom);
        let stride_a = (denom / self.denom) as usize;
        let stride_b = (denom / rhs.denom) as usize;
        let offset = &self.offset + &rhs.offset;
        let d_big = Rat::from_integer(denom.into());
        let max_rel = (&order - &offset) * &d_big;
        if max_rel.is_negative() {
            return Self::zero(order);
        }
        let len = max_rel.floor().to_integer().to_usize().expect("series too long") + 1;

        // integer fast path: pull each factor onto a common coefficient
        // denominator and convolve BigInts
        let (ai, ad) = integerised(&self.coeffs);
        let (bi, bd) = integerised(&rhs.coeffs);
        let mut acc = vec![BigInt::zero(); len];
        for (i, ca) in ai.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            let base = i * stride_a;
            if base >= len {
                break;
            }
            for (j, cb) in bi.iter().enumerate() {
                if cb.is_zero() {
                    continue;
                }
                let idx = base + j * stride_b;
                if idx >= len {
                    break;
                }
                acc[idx] += ca * cb;
            }
        }
        let scale = &ad * &bd;
        let coeffs = acc
            .into_iter()
            .map(|n| Rat::new(n, scale.clone()))
            .collect();
        QSeries {
            offset,
            denom,
            order,
            coeffs,
        }
        .normalized()
    }

    /// Restrict to exponents `<= n`.  Requires `n <= order` — truncating
    /// beyond the stated order would claim exactness that was never computed.
    pub fn truncate(&self, n: &Rat) -> Self {
        assert!(
            n <= &self.order,
            "truncate({n}) beyond stated order {}",
            self.order
        );
        let terms = self
            .terms()
            .filter(|(e, _)| e <= n)
            .map(|(e, c)| (e, c.clone()));
        Self::from_terms(terms, n.clone())
    }

    /// Multiplicative inverse.  The leading coefficient must be nonzero
    /// (guaranteed for any nonzero series).  If the input has leading
    /// exponent `a` and order `N`, the inverse is exact to order `N - 2a`.
    pub fn invert(&self) -> Result<Self, QSeriesError> {
        if self.is_zero() {
            return Err(QSeriesError::InvertZeroSeries);
        }
        let lead = self.offset.clone();
        let c0 = self.coeffs[0].clone();
        let rel_len = self.coeffs.len().max(
            ((&self.order - &lead) * Rat::from_integer(self.denom.into()))
                .floor()
                .to_integer()
                .to_usize()
                .map(|n| n + 1)
                .unwrap_or(1),
        );
        let nonzero: Vec<(usize, &Rat)> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, c)| !c.is_zero())
            .collect();
        let mut b = Vec::with_capacity(rel_len);
        b.push(c0.recip());
        for n in 1..rel_len {
            let mut s = Rat::zero();
            for (k, c) in &nonzero {
                if *k > n {
                    break;
                }
                s += *c * &b[n - k];
            }
            b.push(-s / &c0);
        }
        let order = &self.order - &lead - &lead;
        Ok(QSeries {
            offset: -lead,
            denom: self.denom,
            order,
            coeffs: b,
        }
        .normalized())
    }

    /// Equality of all terms with exponent `<= n` (both series must be exact
    /// at least to `n`).
    pub fn eq_to_order(&self, rhs: &Self, n: &Rat) -> bool {
        assert!(n <= &self.order && n <= &rhs.order, "comparison beyond order");
        let mut a: BTreeMap<Rat, Rat> = self
            .terms()
            .filter(|(e, _)| e <= n)
            .map(|(e, c)| (e, c.clone()))
            .collect();
        for (e, c) in rhs.terms().filter(|(e, _)| e <= n) {
            let slot = a.entry(e).or_insert_with(Rat::zero);
            *slot -= c;
        }
        a.values().all(Zero::is_zero)
    }

    /// First exponent `<= min(order)` at which the two series differ.
    pub fn first_difference(&self, rhs: &Self) -> Option<Rat> {
        let n = self.order.clone().min(rhs.order.clone());
        let mut d: BTreeMap<Rat, Rat> = BTreeMap::new();
        for (e, c) in self.terms().filter(|(e, _)| e <= &n) {
            *d.entry(e).or_insert_with(Rat::zero) += c;
        }
        for (e, c) in rhs.terms().filter(|(e, _)| e <= &n) {
            *d.entry(e).or_insert_with(Rat::zero) -= c;
        }
        d.into_iter().find(|(_, c)| !c.is_zero()).map(|(e, _)| e)
    }

    // ---- serialization ----------------------------------------------------

    pub fn to_json(&self) -> serde_json::Value {
        let repr = QSeriesJson {
            offset: self.offset.to_string(),
            denom: self.denom,
            order: self.order.to_string(),
            terms: self
                .coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, c)| (i.to_string(), c.to_string()))
                .collect(),
        };
        serde_json::to_value(repr).expect("series serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, QSeriesError> {
        let repr: QSeriesJson =
            serde_json::from_value(v.clone()).map_err(|e| QSeriesError::BadJson(e.to_string()))?;
        let parse = |s: &str| {
            Rat::from_str(s).map_err(|e| QSeriesError::BadJson(format!("bad rational {s}: {e}")))
        };
        let offset = parse(&repr.offset)?;
        let order = parse(&repr.order)?;
        let d = Rat::from_integer(repr.denom.into());
        if repr.denom == 0 {
            return Err(QSeriesError::BadJson("denom must be positive".into()));
        }
        let mut terms = Vec::with_capacity(repr.terms.len());
        for (idx, coeff) in &repr.terms {
            let i = BigInt::from_str(idx)
                .map_err(|e| QSeriesError::BadJson(format!("bad index {idx}: {e}")))?;
            if i.is_negative() {
                return Err(QSeriesError::BadJson("negative term index".into()));
            }
            let e = &offset + Rat::from_integer(i) / &d;
            terms.push((e, parse(coeff)?));
        }
        Ok(Self::from_terms(terms, order))
    }
}

#[derive(Serialize, Deserialize)]
struct QSeriesJson {
    offset: String,
    denom: u64,
    order: String,
    terms: Vec<(String, String)>,
}

/// Mathematical equality: same truncation order and identical terms
/// (representation-independent).
impl PartialEq for QSeries {
    fn eq(&self, other: &Self) -> bool {
        if self.order != other.order {
            return false;
        }
        self.eq_to_order(other, &self.order.clone().min(other.order.clone()))
    }
}

impl Eq for QSeries {}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0 + O(q^>{})", self.order);
        }
        let mut first = true;
        for (e, c) in self.terms() {
            let (sign, mag) = if c.is_negative() {
                ("-", -c.clone())
            } else {
                ("+", c.clone())
            };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
                first = false;
            } else {
                write!(f, " {sign} ")?;
            }
            let show_coeff = !mag.is_one() || e.is_zero();
            if show_coeff {
                write!(f, "{mag}")?;
            }
            if !e.is_zero() {
                if show_coeff {
                    write!(f, "*")?;
                }
                if e.is_integer() && !e.is_negative() {
                    write!(f, "q^{e}")?;
                } else {
                    write!(f, "q^({e})")?;
                }
            }
        }
        write!(f, " + O(q^>{})", self.order)
    }
}

fn integerised(coeffs: &[Rat]) -> (Vec<BigInt>, BigInt) {
    let mut l = BigInt::one();
    for c in coeffs {
        if !c.is_zero() {
            l = l.lcm(c.denom());
        }
    }
    let ints = coeffs
        .iter()
        .map(|c| c.numer() * (&l / c.denom()))
        .collect();
    (ints, l)
}

// ---- Dedekind eta --------------------------------------------------------

/// Dedekind eta: `q^{1/24} prod_{n>=1} (1 - q^n)`, truncated at `n` via the
/// pentagonal-number expansion.
///
/// ```
/// use pfcoset_core::qseries::{eta, rat, rat_int};
/// let e = eta(&rat_int(8));
/// assert_eq!(e.coeff(&rat(1, 24)), rat_int(1));
/// assert_eq!(e.coeff(&(rat_int(5) + rat(1, 24))), rat_int(1));
/// assert_eq!(e.coeff(&(rat_int(3) + rat(1, 24))), rat_int(0));
/// ```
pub fn eta(n: &Rat) -> QSeries {
    let shift = rat(1, 24);
    let mut terms = Vec::new();
    let mut j: i64 = 0;
    loop {
        let mut hit = false;
        for jj in [j, -j] {
            let e = rat(jj * (3 * jj - 1) / 2, 1) + &shift;
            if &e <= n {
                hit = true;
                let sign = if jj.rem_euclid(2) == 0 { 1 } else { -1 };
                terms.push((e, rat_int(sign)));
            }
            if jj == 0 {
                break;
            }
        }
        if !hit && j > 0 {
            break;
        }
        j += 1;
    }
    QSeries::from_terms(terms, n.clone())
}

/// `1/eta`: `q^{-1/24} sum_{m>=0} p(m) q^m` with `p` the partition numbers,
/// computed by the Euler pentagonal recurrence.
pub fn eta_inverse(n: &Rat) -> QSeries {
    let m_max = (n + rat(1, 24)).floor().to_integer().to_i64().unwrap_or(-1);
    if m_max < 0 {
        return QSeries::zero(n.clone());
    }
    let p = partition_numbers(m_max as usize);
    let terms = p
        .into_iter()
        .enumerate()
        .map(|(m, c)| (rat_int(m as i64) - rat(1, 24), Rat::from_integer(c)));
    QSeries::from_terms(terms, n.clone())
}

/// Partition numbers `p(0..=m)` via Euler's recurrence.
pub fn partition_numbers(m: usize) -> Vec<BigInt> {
    let mut p = vec![BigInt::zero(); m + 1];
    p[0] = BigInt::one();
    for i in 1..=m {
        let mut acc = BigInt::zero();
        let mut j = 1i64;
        loop {
            let g1 = j * (3 * j - 1) / 2;
            let g2 = j * (3 * j + 1) / 2;
            if g1 as usize > i {
                break;
            }
            let sign_pos = j.rem_euclid(2) == 1;
            for g in [g1, g2] {
                if (g as usize) <= i {
                    let t = &p[i - g as usize];
                    if sign_pos {
                        acc += t;
                    } else {
                        acc -= t;
                    }
                }
            }
            j += 1;
        }
        p[i] = acc;
    }
    p
}

// ---- numerical evaluation ------------------------------------------------

/// A point in the upper half-plane, held exactly as a pair of rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tau {
    pub re: Rat,
    pub im: Rat,
}

impl Tau {
    pub fn new(re: Rat, im: Rat) -> Self {
        Tau { re, im }
    }

    pub fn i() -> Self {
        Tau::new(Rat::zero(), Rat::one())
    }

    /// `-1/tau`, computed exactly.
    pub fn s_transform(&self) -> Tau {
        let n = &self.re * &self.re + &self.im * &self.im;
        Tau::new(-&self.re / &n, self.im.clone() / n)
    }

    /// `tau + 1`.
    pub fn t_shift(&self) -> Tau {
        Tau::new(&self.re + Rat::one(), self.im.clone())
    }
}

impl fmt::Display for Tau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}i", self.re, self.im)
    }
}

/// Evaluate a series at `tau` with at least `digits` decimal digits of
/// working precision.  Returns the value and a heuristic bound on the
/// dropped tail, `|q|^order / (1 - |q|^{1/D}) * max |coeff|`.
pub fn eval(s: &QSeries, tau: &Tau, digits: u32) -> Result<(Cplx, f64), QSeriesError> {
    if !tau.im.is_positive() {
        return Err(QSeriesError::NonconvergentEvaluation);
    }
    let ar = Arith::with_digits(digits.max(15));
    let value = eval_with(&ar, s, tau);

    // tail bound in f64; |q| = exp(-2 pi Im tau)
    let im = tau.im.to_f64().unwrap_or(f64::NAN);
    let order = s.order().to_f64().unwrap_or(f64::NAN);
    let log_q = -2.0 * std::f64::consts::PI * im;
    let qn = (order * log_q).exp();
    let q_step = (log_q / s.denom() as f64).exp();
    let max_coeff = s
        .terms()
        .map(|(_, c)| c.to_f64().map(f64::abs).unwrap_or(f64::INFINITY))
        .fold(1.0_f64, f64::max);
    let tail = qn / (1.0 - q_step) * max_coeff;
    Ok((value, tail.max(0.0)))
}

/// Evaluation under a caller-supplied precision context (used by the modular
/// checks, which share one context across many series).
pub fn eval_with(ar: &Arith, s: &QSeries, tau: &Tau) -> Cplx {
    let mut acc = ar.czero();
    if s.is_zero() {
        return acc;
    }
    let step = ar.q_power(&tau.re, &tau.im, &Rat::new(1.into(), (s.denom() as i64).into()));
    let mut w = ar.q_power(&tau.re, &tau.im, s.offset());
    for (i, c) in s.coeffs.iter().enumerate() {
        if i > 0 {
            w = ar.cmul(&w, &step);
        }
        if c.is_zero() {
            continue;
        }
        acc = ar.cadd(&acc, &ar.cscale(&ar.from_rat(c), &w));
    }
    acc
}
