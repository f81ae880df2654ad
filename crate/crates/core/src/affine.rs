//! Admissible-level data and the sl(2) character calculus: weight-graded
//! characters of standard and atypical modules, spectral flow and
//! conjugation, decomposition into Heisenberg x coset data, and Grothendieck
//! fusion.
//!
//! Weight supports are infinite, so every character API takes an explicit
//! finite window of h-weights and never claims totals over all weights.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;

use crate::coset::{Coset, CosetKind, CosetLabel, Route};
use crate::fusion::FusionElement;
use crate::minmod::MinimalModel;
use crate::qseries::{eta_inverse, rat, rat_int, QSeries, Rat};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AffineError {
    #[error("not a negative admissible level datum: (u, v) = ({u}, {v}) needs gcd(u,v) = 1, u >= 2, v >= 2 and u < 2v")]
    BadLevel { u: u32, v: u32 },
    #[error("label parameter out of range: {0}")]
    RangeError(String),
    #[error("window weight {0} is not in the support coset of the label")]
    WeightNotInSupport(Rat),
    #[error("label must be canonical and irreducible for fusion: {0}")]
    UnnormalizedLabel(String),
    #[error("relaxed weight {0} is atypical for (r, s) = ({1}, {2})")]
    TypicalOnAtypicalWeight(Rat, u32, u32),
    #[error("cannot parse label {0:?}")]
    BadLabel(String),
}

/// Admissibility datum `(u, v)` with `t = u/v`, `k = t - 2 < 0`.
///
/// Only negative admissible levels are accepted: `u < 2v` and `v >= 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Level {
    u: u32,
    v: u32,
}

impl Level {
    pub fn new(u: u32, v: u32) -> Result<Self, AffineError> {
        if u < 2 || v < 2 || u.gcd(&v) != 1 || u >= 2 * v {
            return Err(AffineError::BadLevel { u, v });
        }
        Ok(Level { u, v })
    }

    pub fn u(&self) -> u32 {
        self.u
    }

    pub fn v(&self) -> u32 {
        self.v
    }

    /// `t = k + 2 = u/v`.
    pub fn t(&self) -> Rat {
        rat(self.u as i64, self.v as i64)
    }

    /// The level `k = (u - 2v)/v < 0`.
    pub fn k(&self) -> Rat {
        rat(self.u as i64 - 2 * self.v as i64, self.v as i64)
    }

    /// `w = -kv = 2v - u >= 1`.
    pub fn w(&self) -> u32 {
        2 * self.v - self.u
    }

    /// `p = vw`.
    pub fn p(&self) -> u32 {
        self.v * self.w()
    }

    /// Central charge of the affine algebra, `3 - 6/t`.
    pub fn c(&self) -> Rat {
        rat_int(3) - rat(6 * self.v as i64, self.u as i64)
    }

    /// Central charge of the parafermion coset, `2 - 6/t`.
    pub fn c_tilde(&self) -> Rat {
        rat_int(2) - rat(6 * self.v as i64, self.u as i64)
    }

    pub fn minmod(&self) -> MinimalModel {
        MinimalModel::new(self.u, self.v).expect("admissible level data is a minimal model datum")
    }

    /// `lambda_{r,s} = r - 1 - t s` (no range check; see [`weights`]).
    pub fn lambda(&self, r: i64, s: i64) -> Rat {
        rat_int(r - 1) - self.t() * rat_int(s)
    }

    /// `Delta_{r,s} = ((vr - us)^2 - v^2)/4uv` (no range check).
    pub fn delta(&self, r: i64, s: i64) -> Rat {
        let (u, v) = (self.u as i64, self.v as i64);
        let d = v * r - u * s;
        rat(d * d - v * v, 4 * u * v)
    }

    /// `mu^2 / 4k` as an exact rational.
    pub fn fock_exponent(&self, mu: &Rat) -> Rat {
        mu * mu * rat(-(self.v as i64), 4 * self.w() as i64)
    }
}

/// `(lambda_{r,s}, Delta_{r,s})` for `1 <= r <= u-1`, `0 <= s <= v-1`.
pub fn weights(level: &Level, r: i64, s: i64) -> Result<(Rat, Rat), AffineError> {
    if r < 1 || r > level.u as i64 - 1 || s < 0 || s > level.v as i64 - 1 {
        return Err(AffineError::RangeError(format!(
            "(r, s) = ({r}, {s}) at (u, v) = ({}, {})",
            level.u, level.v
        )));
    }
    Ok((level.lambda(r, s), level.delta(r, s)))
}

// ---- labels ----------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum AffineKind {
    /// Irreducible highest-weight `L_r`.
    L { r: u32 },
    /// Irreducible highest-weight `D^+_{r,s}`.
    DPlus { r: u32, s: u32 },
    /// Conjugate `D^-_{r,s}`.
    DMinus { r: u32, s: u32 },
    /// Irreducible relaxed `E_{lambda; r,s}` with `lambda` typical, mod 2.
    ETyp { lambda: Rat, r: u32, s: u32 },
    /// Atypical standard `E^+_{r,s}` (length 2).
    EStdPlus { r: u32, s: u32 },
    /// Atypical standard `E^-_{r,s}` (length 2).
    EStdMinus { r: u32, s: u32 },
}

/// A module label together with its spectral-flow exponent.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct AffineLabel {
    pub kind: AffineKind,
    pub flow: i64,
}

fn reduce_mod2(x: &Rat) -> Rat {
    let two = rat_int(2);
    x - (x / &two).floor() * &two
}

impl AffineLabel {
    /// Validate ranges (and for `ETyp`, reduce `lambda` mod 2 and reject
    /// atypical weights).
    pub fn new(level: &Level, kind: AffineKind, flow: i64) -> Result<Self, AffineError> {
        let (u, v) = (level.u as i64, level.v as i64);
        let check_r = |r: u32| {
            if r as i64 >= 1 && (r as i64) < u {
                Ok(())
            } else {
                Err(AffineError::RangeError(format!("r = {r}")))
            }
        };
        let check_s = |s: u32| {
            if s as i64 >= 1 && (s as i64) < v {
                Ok(())
            } else {
                Err(AffineError::RangeError(format!("s = {s}")))
            }
        };
        let kind = match kind {
            AffineKind::L { r } => {
                check_r(r)?;
                AffineKind::L { r }
            }
            AffineKind::DPlus { r, s } => {
                check_r(r)?;
                check_s(s)?;
                AffineKind::DPlus { r, s }
            }
            AffineKind::DMinus { r, s } => {
                check_r(r)?;
                check_s(s)?;
                AffineKind::DMinus { r, s }
            }
            AffineKind::ETyp { lambda, r, s } => {
                check_r(r)?;
                check_s(s)?;
                let lambda = reduce_mod2(&lambda);
                let a1 = reduce_mod2(&level.lambda(r as i64, s as i64));
                let a2 = reduce_mod2(&level.lambda(u - r as i64, v - s as i64));
                if lambda == a1 || lambda == a2 {
                    return Err(AffineError::TypicalOnAtypicalWeight(lambda, r, s));
                }
                AffineKind::ETyp { lambda, r, s }
            }
            AffineKind::EStdPlus { r, s } => {
                check_r(r)?;
                check_s(s)?;
                AffineKind::EStdPlus { r, s }
            }
            AffineKind::EStdMinus { r, s } => {
                check_r(r)?;
                check_s(s)?;
                AffineKind::EStdMinus { r, s }
            }
        };
        Ok(AffineLabel { kind, flow })
    }

    /// Canonical form under the spectral-flow identifications
    /// `sigma L_r = D^+_{u-r,v-1}`, `sigma^{-1} L_r = D^-_{u-r,v-1}` and
    /// `sigma^{-1} D^+_{r,s} = D^-_{u-r,v-1-s}`: the result uses only `L`,
    /// `D^+` with `s <= v-2`, and `ETyp` with a Kac-canonical `(r,s)`.
    pub fn canonicalize(&self, level: &Level) -> AffineLabel {
        let (u, v) = (level.u, level.v);
        match &self.kind {
            AffineKind::L { .. } | AffineKind::EStdPlus { .. } | AffineKind::EStdMinus { .. } => {
                self.clone()
            }
            AffineKind::DPlus { r, s } => {
                if *s == v - 1 {
                    AffineLabel {
                        kind: AffineKind::L { r: u - r },
                        flow: self.flow + 1,
                    }
                } else {
                    self.clone()
                }
            }
            AffineKind::DMinus { r, s } => {
                if *s == v - 1 {
                    AffineLabel {
                        kind: AffineKind::L { r: u - r },
                        flow: self.flow - 1,
                    }
                } else {
                    AffineLabel {
                        kind: AffineKind::DPlus {
                            r: u - r,
                            s: v - 1 - s,
                        },
                        flow: self.flow - 1,
                    }
                }
            }
            AffineKind::ETyp { lambda, r, s } => {
                let kac = level
                    .minmod()
                    .kac_canonical(*r as i64, *s as i64)
                    .expect("validated label");
                AffineLabel {
                    kind: AffineKind::ETyp {
                        lambda: reduce_mod2(lambda),
                        r: kac.r,
                        s: kac.s,
                    },
                    flow: self.flow,
                }
            }
        }
    }

    fn is_canonical_irreducible(&self, level: &Level) -> bool {
        match &self.kind {
            AffineKind::L { .. } => true,
            AffineKind::DPlus { s, .. } => *s <= level.v - 2,
            AffineKind::ETyp { .. } => self.canonicalize(level) == *self,
            _ => false,
        }
    }

    /// Base h-weight coset representative (before the `flow * k` shift).
    fn base_weight(&self, level: &Level) -> Rat {
        let (u, v) = (level.u as i64, level.v as i64);
        match &self.kind {
            AffineKind::L { r } => rat_int(*r as i64 - 1),
            AffineKind::DPlus { r, s } => level.lambda(*r as i64, *s as i64),
            AffineKind::DMinus { r, s } => level.lambda(u - *r as i64, v - *s as i64),
            AffineKind::ETyp { lambda, .. } => lambda.clone(),
            AffineKind::EStdPlus { r, s } => level.lambda(*r as i64, *s as i64),
            AffineKind::EStdMinus { r, s } => level.lambda(u - *r as i64, v - *s as i64),
        }
    }
}

impl fmt::Display for AffineLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.flow == 0 {
            write!(f, "{}", self.kind.body_string())
        } else {
            write!(f, "sf^{}({})", self.flow, self.kind.body_string())
        }
    }
}

impl AffineKind {
    fn body_string(&self) -> String {
        match self {
            AffineKind::L { r } => format!("L[{r}]"),
            AffineKind::DPlus { r, s } => format!("D+[{r},{s}]"),
            AffineKind::DMinus { r, s } => format!("D-[{r},{s}]"),
            AffineKind::ETyp { lambda, r, s } => format!("E[{lambda};{r},{s}]"),
            AffineKind::EStdPlus { r, s } => format!("Estd+[{r},{s}]"),
            AffineKind::EStdMinus { r, s } => format!("Estd-[{r},{s}]"),
        }
    }
}

/// Parse the label grammar `sf^l(L[r])`, `sf^l(D+[r,s])`,
/// `sf^l(E[lam;r,s])`, `sf^l(Estd+[r,s])`; a bare body means flow 0.
pub fn parse_affine_label(level: &Level, s: &str) -> Result<AffineLabel, AffineError> {
    let s = s.trim();
    let bad = || AffineError::BadLabel(s.to_string());
    let (flow, body) = if let Some(rest) = s.strip_prefix("sf^") {
        let open = rest.find('(').ok_or_else(bad)?;
        let flow: i64 = rest[..open].parse().map_err(|_| bad())?;
        let inner = rest[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        (flow, inner.trim())
    } else {
        (0, s)
    };
    let parse_u32 = |x: &str| x.trim().parse::<u32>().map_err(|_| bad());
    let parse_rat = |x: &str| Rat::from_str(x.trim()).map_err(|_| bad());
    let (head, args) = body.split_once('[').ok_or_else(bad)?;
    let args = args.strip_suffix(']').ok_or_else(bad)?;
    let kind = match head.trim() {
        "L" => AffineKind::L { r: parse_u32(args)? },
        "D+" => {
            let (r, sarg) = args.split_once(',').ok_or_else(bad)?;
            AffineKind::DPlus {
                r: parse_u32(r)?,
                s: parse_u32(sarg)?,
            }
        }
        "D-" => {
            let (r, sarg) = args.split_once(',').ok_or_else(bad)?;
            AffineKind::DMinus {
                r: parse_u32(r)?,
                s: parse_u32(sarg)?,
            }
        }
        "E" => {
            let (lam, rs) = args.split_once(';').ok_or_else(bad)?;
            let (r, sarg) = rs.split_once(',').ok_or_else(bad)?;
            AffineKind::ETyp {
                lambda: parse_rat(lam)?,
                r: parse_u32(r)?,
                s: parse_u32(sarg)?,
            }
        }
        "Estd+" => {
            let (r, sarg) = args.split_once(',').ok_or_else(bad)?;
            AffineKind::EStdPlus {
                r: parse_u32(r)?,
                s: parse_u32(sarg)?,
            }
        }
        "Estd-" => {
            let (r, sarg) = args.split_once(',').ok_or_else(bad)?;
            AffineKind::EStdMinus {
                r: parse_u32(r)?,
                s: parse_u32(sarg)?,
            }
        }
        _ => return Err(bad()),
    };
    AffineLabel::new(level, kind, flow)
}

// ---- weighted characters ---------------------------------------------------

/// A two-variable character restricted to a finite window of h-weights:
/// a map from weight `mu` to the exact q-series multiplying `z^mu`.
///
/// Components outside the window are absent by construction, not assumed
/// zero; callers must respect the window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedCharacter {
    pub level: Level,
    pub flow: i64,
    components: BTreeMap<Rat, QSeries>,
}

impl WeightedCharacter {
    pub fn new(level: Level, flow: i64) -> Self {
        WeightedCharacter {
            level,
            flow,
            components: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, weight: Rat, series: QSeries) {
        match self.components.get_mut(&weight) {
            Some(existing) => *existing = existing.add(&series),
            None => {
                self.components.insert(weight, series);
            }
        }
    }

    pub fn component(&self, weight: &Rat) -> Option<&QSeries> {
        self.components.get(weight)
    }

    pub fn weights(&self) -> impl Iterator<Item = &Rat> + '_ {
        self.components.keys()
    }

    pub fn components(&self) -> impl Iterator<Item = (&Rat, &QSeries)> + '_ {
        self.components.iter()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Equality of all components on `window`, to order `n`.  A weight
    /// missing on both sides counts as equal (zero).
    pub fn eq_on_window(&self, other: &Self, window: &[Rat], n: &Rat) -> bool {
        window.iter().all(|w| {
            match (self.component(w), other.component(w)) {
                (None, None) => true,
                (Some(a), None) | (None, Some(a)) => {
                    a.terms().all(|(e, _)| &e > n)
                }
                (Some(a), Some(b)) => a.eq_to_order(b, n),
            }
        })
    }

    /// Spectral flow by `ell`: each component at `mu` moves to `mu + ell*k`
    /// with multiplier `q^{ell^2 k/4 + ell mu/2}`.
    pub fn spectral_flow(&self, ell: i64) -> WeightedCharacter {
        let k = self.level.k();
        let mut out = WeightedCharacter::new(self.level, self.flow + ell);
        for (mu, series) in &self.components {
            let shift = &k * rat(ell * ell, 4) + mu * rat(ell, 2);
            let new_weight = mu + &k * rat_int(ell);
            out.insert(new_weight, series.shift(&shift));
        }
        out
    }

    /// Conjugation: negates all h-weights.
    pub fn conjugate(&self) -> WeightedCharacter {
        let mut out = WeightedCharacter::new(self.level, -self.flow);
        for (mu, series) in &self.components {
            out.insert(-mu.clone(), series.clone());
        }
        out
    }
}

/// Window of `count` consecutive lattice weights `base + 2j`, recentred so
/// that the weights straddle zero.
pub fn centered_window(base: &Rat, count: usize) -> Vec<Rat> {
    let start = -((count / 2) as i64);
    let j0 = ((-base.clone()) / rat_int(2)).round();
    (0..count)
        .map(|j| base + (Rat::from_integer(j0.to_integer()) + rat_int(start + j as i64)) * rat_int(2))
        .collect()
}

fn chi_over_eta2(level: &Level, r: i64, s: i64, order: &Rat) -> QSeries {
    let build = order + rat_int(1);
    let mm = level.minmod();
    let numer = mm.char_numerator(r, s, &build);
    let inv = eta_inverse(&build);
    let inv3 = inv.mul(&inv).mul(&inv);
    numer.mul(&inv3).truncate(order)
}

/// Character of a standard module (`ETyp`, `EStd+`, `EStd-`) on a window:
/// the component at `mu + l k` is `q^{l^2 k/4 + l mu/2} chi_{r,s}/eta^2`.
pub fn std_weighted_char(
    level: &Level,
    label: &AffineLabel,
    window: &[Rat],
    n: &Rat,
) -> Result<WeightedCharacter, AffineError> {
    let (r, s) = match &label.kind {
        AffineKind::ETyp { r, s, .. }
        | AffineKind::EStdPlus { r, s }
        | AffineKind::EStdMinus { r, s } => (*r as i64, *s as i64),
        other => {
            return Err(AffineError::RangeError(format!(
                "std_weighted_char needs a standard label, got {}",
                other.body_string()
            )))
        }
    };
    // EStd- characters coincide with EStd+ of the reflected Kac label
    let (r, s) = if matches!(label.kind, AffineKind::EStdMinus { .. }) {
        (level.u as i64 - r, level.v as i64 - s)
    } else {
        (r, s)
    };
    let k = level.k();
    let ell = label.flow;
    let base = label.base_weight(level) + &k * rat_int(ell);
    let mut out = WeightedCharacter::new(*level, ell);
    if window.is_empty() {
        return Ok(out);
    }
    // common chi/eta^2 at the deepest order any component needs
    let mut sub_orders = Vec::with_capacity(window.len());
    for nu in window {
        if !((nu - &base) / rat_int(2)).is_integer() {
            return Err(AffineError::WeightNotInSupport(nu.clone()));
        }
        let mu = nu - &k * rat_int(ell);
        let e0 = &k * rat(ell * ell, 4) + &mu * rat(ell, 2);
        sub_orders.push((nu.clone(), e0));
    }
    let deepest = sub_orders
        .iter()
        .map(|(_, e0)| n - e0)
        .max()
        .expect("nonempty window");
    let chi = chi_over_eta2(level, r, s, &deepest);
    for (nu, e0) in sub_orders {
        let sub = n - &e0;
        out.insert(nu, chi.truncate(&sub).shift(&e0));
    }
    Ok(out)
}

/// Character route selector for the atypical irreducibles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IrrRoute {
    /// Through the Heisenberg x coset decomposition (single source of truth).
    Decomposition,
    /// Through the alternating resolution by standard modules (cross-check).
    Resolution,
}

/// Character of an atypical irreducible (`L`, `D+`, `D-`) on a window.
pub fn irr_weighted_char(
    level: &Level,
    label: &AffineLabel,
    window: &[Rat],
    n: &Rat,
    route: IrrRoute,
) -> Result<WeightedCharacter, AffineError> {
    match &label.kind {
        AffineKind::L { .. } | AffineKind::DPlus { .. } => {}
        AffineKind::DMinus { .. } => {
            // conjugate of D+: component at nu equals the sigma^{-flow} D+
            // component at -nu
            let plus = AffineLabel {
                kind: match &label.kind {
                    AffineKind::DMinus { r, s } => AffineKind::DPlus { r: *r, s: *s },
                    _ => unreachable!(),
                },
                flow: -label.flow,
            };
            let mirrored: Vec<Rat> = window.iter().map(|w| -w.clone()).collect();
            return Ok(irr_weighted_char(level, &plus, &mirrored, n, route)?.conjugate());
        }
        other => {
            return Err(AffineError::RangeError(format!(
                "irr_weighted_char needs an atypical irreducible, got {}",
                other.body_string()
            )))
        }
    }
    match route {
        IrrRoute::Decomposition => irr_by_decomposition(level, label, window, n),
        IrrRoute::Resolution => irr_by_resolution(level, label, window, n),
    }
}

fn irr_by_decomposition(
    level: &Level,
    label: &AffineLabel,
    window: &[Rat],
    n: &Rat,
) -> Result<WeightedCharacter, AffineError> {
    let k = level.k();
    let ell = label.flow;
    let base = label.base_weight(level) + &k * rat_int(ell);
    let coset = Coset::new(*level);
    let mut out = WeightedCharacter::new(*level, ell);
    for nu in window {
        if !((nu - &base) / rat_int(2)).is_integer() {
            return Err(AffineError::WeightNotInSupport(nu.clone()));
        }
        let mu = nu - &k * rat_int(ell);
        let coset_label = match &label.kind {
            AffineKind::L { r } => CosetLabel::new(level, CosetKind::C { mu, r: *r }),
            AffineKind::DPlus { r, s } => CosetLabel::new(
                level,
                CosetKind::D {
                    mu,
                    r: *r,
                    s: *s,
                },
            ),
            _ => unreachable!(),
        }
        .map_err(|e| AffineError::RangeError(e.to_string()))?;
        let e0 = level.fock_exponent(nu);
        let sub = n - &e0 + rat(1, 12);
        // a coset factor starting above the requested order contributes a
        // window component with no terms up to n
        let component = if coset.ground_exponent(&coset_label) > sub {
            QSeries::zero(n.clone())
        } else {
            let ch = coset
                .character(&coset_label, &sub, Route::Primary)
                .map_err(|e| AffineError::RangeError(e.to_string()))?;
            let inv = eta_inverse(&sub);
            ch.mul(&inv).truncate(&(n - &e0)).shift(&e0)
        };
        out.insert(nu.clone(), component);
    }
    Ok(out)
}

fn irr_by_resolution(
    level: &Level,
    label: &AffineLabel,
    window: &[Rat],
    n: &Rat,
) -> Result<WeightedCharacter, AffineError> {
    let v = level.v as i64;
    let ell = label.flow;
    match &label.kind {
        AffineKind::L { r } => {
            let mut out = WeightedCharacter::new(*level, ell);
            for nu in window {
                out.insert(nu.clone(), QSeries::zero(n.clone()));
            }
            let mut m: i64 = 0;
            loop {
                let mut any = false;
                for s1 in 1..v {
                    let sign = if (s1 - 1) % 2 == 0 { 1 } else { -1 };
                    for (rr, flow) in [
                        (*r, 2 * m * v + s1 + ell),
                        (level.u - *r, 2 * (m + 1) * v - s1 + ell),
                    ] {
                        let sign = if flow == 2 * m * v + s1 + ell { sign } else { -sign };
                        if !resolution_term_is_dead(level, flow, window, n) {
                            any = true;
                            let term = AffineLabel::new(
                                level,
                                AffineKind::EStdPlus {
                                    r: rr,
                                    s: s1 as u32,
                                },
                                flow,
                            )?;
                            let ch = std_weighted_char(level, &term, window, n)?;
                            for (wt, series) in ch.components() {
                                out.insert(wt.clone(), series.scale(&rat_int(sign)).truncate(n));
                            }
                        }
                    }
                }
                if !any && m > 0 {
                    break;
                }
                m += 1;
            }
            Ok(out)
        }
        AffineKind::DPlus { r, s } => {
            let mut out = WeightedCharacter::new(*level, ell);
            for nu in window {
                out.insert(nu.clone(), QSeries::zero(n.clone()));
            }
            let s = *s as i64;
            for s1 in (s + 1)..v {
                let sign = if (s1 - s - 1) % 2 == 0 { 1 } else { -1 };
                let term = AffineLabel::new(
                    level,
                    AffineKind::EStdPlus {
                        r: *r,
                        s: s1 as u32,
                    },
                    s1 - s + ell,
                )?;
                let ch = std_weighted_char(level, &term, window, n)?;
                for (wt, series) in ch.components() {
                    out.insert(wt.clone(), series.scale(&rat_int(sign)).truncate(n));
                }
            }
            let sign = if (v - 1 - s) % 2 == 0 { 1 } else { -1 };
            let l_term = AffineLabel::new(
                level,
                AffineKind::L { r: level.u - *r },
                v - s + ell,
            )?;
            let l_char = irr_by_resolution(level, &l_term, window, n)?;
            for (wt, series) in l_char.components() {
                out.insert(wt.clone(), series.scale(&rat_int(sign)).truncate(n));
            }
            Ok(out)
        }
        _ => unreachable!(),
    }
}

/// True when every window component of a flow-`ell` standard character must
/// start above order `n` (exponent floor `ell*nu/2 - ell^2 k/4 - 1`).
fn resolution_term_is_dead(level: &Level, ell: i64, window: &[Rat], n: &Rat) -> bool {
    let k = level.k();
    window.iter().all(|nu| {
        let floor = nu * rat(ell, 2) - &k * rat(ell * ell, 4) - rat_int(1);
        &floor > n
    })
}

// ---- decomposition ----------------------------------------------------------

/// Heisenberg x coset decomposition of a module on a window of Fock weights:
/// the pairs `(nu, X_{nu - l k})` with `nu` running over the window
/// intersected with the support coset.
pub fn decompose(
    level: &Level,
    label: &AffineLabel,
    window: &[Rat],
) -> Result<Vec<(Rat, CosetLabel)>, AffineError> {
    if matches!(label.kind, AffineKind::DMinus { .. }) {
        let rewritten = label.canonicalize(level);
        return decompose(level, &rewritten, window);
    }
    let k = level.k();
    let ell = label.flow;
    let base = label.base_weight(level) + &k * rat_int(ell);
    let mut out = Vec::new();
    for nu in window {
        if !((nu - &base) / rat_int(2)).is_integer() {
            continue;
        }
        let mu = nu - &k * rat_int(ell);
        let kind = match &label.kind {
            AffineKind::L { r } => CosetKind::C { mu, r: *r },
            AffineKind::DPlus { r, s } => CosetKind::D { mu, r: *r, s: *s },
            AffineKind::ETyp { r, s, .. } => CosetKind::ETyp { mu, r: *r, s: *s },
            AffineKind::EStdPlus { r, s } => CosetKind::EStdPlus { mu, r: *r, s: *s },
            AffineKind::EStdMinus { r, s } => CosetKind::EStdMinus { mu, r: *r, s: *s },
            AffineKind::DMinus { .. } => unreachable!(),
        };
        let coset_label = CosetLabel::new(level, kind)
            .map_err(|e| AffineError::RangeError(e.to_string()))?;
        out.push((nu.clone(), coset_label));
    }
    Ok(out)
}

/// Lifting predicate: `Fock_nu (x) X_mu` lifts to an affine module iff
/// `nu - mu` lies in the dual lattice `kZ`.
pub fn lifts_to_affine(level: &Level, fock_weight: &Rat, coset_weight: &Rat) -> bool {
    let k = level.k();
    ((fock_weight - coset_weight) / k).is_integer()
}

// ---- Grothendieck fusion -----------------------------------------------------

/// Grothendieck fusion of two canonical irreducible labels.  Fusions with
/// `sigma^l L_r` are genuine fusion rules; everything else holds in the
/// Grothendieck ring.  Outputs are canonicalized, with standard classes at
/// atypical weights resolved into their composition factors.
pub fn gr_fuse_affine(
    level: &Level,
    a: &AffineLabel,
    b: &AffineLabel,
) -> Result<FusionElement<AffineLabel>, AffineError> {
    for x in [a, b] {
        if !x.is_canonical_irreducible(level) {
            return Err(AffineError::UnnormalizedLabel(x.to_string()));
        }
    }
    let mm = level.minmod();
    let mut out = FusionElement::zero();
    let (u, v) = (level.u as i64, level.v as i64);
    let k = level.k();

    // L acts by the s=1 row of the minimal-model fusion
    let l_action =
        |out: &mut FusionElement<AffineLabel>, r: u32, fl: i64, other: &AffineLabel| {
            let (r2, flow2) = (other_r(other), other.flow);
            for (r3, _) in mm.rect_outputs((r as i64, 1), (r2 as i64, 1)) {
                let kind = match &other.kind {
                    AffineKind::L { .. } => AffineKind::L { r: r3 as u32 },
                    AffineKind::DPlus { s, .. } => AffineKind::DPlus {
                        r: r3 as u32,
                        s: *s,
                    },
                    AffineKind::ETyp { lambda, s, .. } => {
                        emit_typical(
                            level,
                            out,
                            &(rat_int(r as i64 - 1) + lambda),
                            r3,
                            *s as i64,
                            fl + flow2,
                            1,
                        );
                        continue;
                    }
                    _ => unreachable!(),
                };
                let label =
                    AffineLabel::new(level, kind, fl + flow2).expect("in-range fusion output");
                out.add_term(label.canonicalize(level), 1);
            }
        };

    match (&a.kind, &b.kind) {
        (AffineKind::L { r }, _) => {
            l_action(&mut out, *r, a.flow, b);
            out.genuine = matches!(
                b.kind,
                AffineKind::L { .. } | AffineKind::DPlus { .. } | AffineKind::ETyp { .. }
            );
        }
        (_, AffineKind::L { r }) => {
            l_action(&mut out, *r, b.flow, a);
        }
        (AffineKind::DPlus { r, s }, AffineKind::DPlus { r: r2, s: s2 }) => {
            let (r, s, r2, s2) = (*r as i64, *s as i64, *r2 as i64, *s2 as i64);
            let fl = a.flow + b.flow;
            out.genuine = false;
            if s + s2 < v {
                for (r3, s3) in mm.rect_outputs((r, s), (r2, s2)) {
                    let lam = level.lambda(r3, s + s2 + 1);
                    emit_typical(level, &mut out, &lam, r3, s3, fl + 1, 1);
                }
                for (r3, _) in mm.rect_outputs((r, 1), (r2, 1)) {
                    let label = AffineLabel::new(
                        level,
                        AffineKind::DPlus {
                            r: r3 as u32,
                            s: (s + s2) as u32,
                        },
                        fl,
                    )?;
                    out.add_term(label.canonicalize(level), 1);
                }
            } else {
                for (r3, s3) in mm.rect_outputs((r, s + 1), (r2, s2 + 1)) {
                    let lam = level.lambda(r3, s + s2 + 1);
                    emit_typical(level, &mut out, &lam, r3, s3, fl + 1, 1);
                }
                for (r3, _) in mm.rect_outputs((r, 1), (r2, 1)) {
                    let label = AffineLabel::new(
                        level,
                        AffineKind::DPlus {
                            r: (u - r3) as u32,
                            s: (s + s2 - v + 1) as u32,
                        },
                        fl + 1,
                    )?;
                    out.add_term(label.canonicalize(level), 1);
                }
            }
        }
        (AffineKind::ETyp { lambda, r, s }, AffineKind::DPlus { r: r2, s: s2 })
        | (AffineKind::DPlus { r: r2, s: s2 }, AffineKind::ETyp { lambda, r, s }) => {
            let (r, s, r2, s2) = (*r as i64, *s as i64, *r2 as i64, *s2 as i64);
            let fl = a.flow + b.flow;
            out.genuine = false;
            for (r3, s3) in mm.rect_outputs((r, s), (r2, s2 + 1)) {
                emit_typical(level, &mut out, &(lambda + level.lambda(r2, s2)), r3, s3, fl, 1);
            }
            for (r3, s3) in mm.rect_outputs((r, s), (r2, s2)) {
                emit_typical(
                    level,
                    &mut out,
                    &(lambda + level.lambda(r2, s2 + 1)),
                    r3,
                    s3,
                    fl + 1,
                    1,
                );
            }
        }
        (AffineKind::ETyp { lambda, r, s }, AffineKind::ETyp { lambda: l2, r: r2, s: s2 }) => {
            let (r, s, r2, s2) = (*r as i64, *s as i64, *r2 as i64, *s2 as i64);
            let fl = a.flow + b.flow;
            out.genuine = false;
            for (r3, s3) in mm.rect_outputs((r, s), (r2, s2)) {
                emit_typical(level, &mut out, &(lambda + l2 - &k), r3, s3, fl + 1, 1);
                emit_typical(level, &mut out, &(lambda + l2 + &k), r3, s3, fl - 1, 1);
            }
            for shift in [-1, 1] {
                for (r3, s3) in mm.rect_outputs((r, s), (r2, s2 + shift)) {
                    emit_typical(level, &mut out, &(lambda + l2), r3, s3, fl, 1);
                }
            }
        }
        _ => unreachable!("non-irreducible kinds are rejected above"),
    }
    Ok(out)
}

fn other_r(label: &AffineLabel) -> u32 {
    match &label.kind {
        AffineKind::L { r }
        | AffineKind::DPlus { r, .. }
        | AffineKind::DMinus { r, .. }
        | AffineKind::ETyp { r, .. }
        | AffineKind::EStdPlus { r, .. }
        | AffineKind::EStdMinus { r, .. } => *r,
    }
}

/// Add `mult` copies of the standard class at relaxed weight `lambda` over
/// `(r, s)` and `flow`.  Typical weights give the irreducible `ETyp`;
/// atypical weights are resolved into the composition factors of the
/// standard module supported there.
fn emit_typical(
    level: &Level,
    out: &mut FusionElement<AffineLabel>,
    lambda: &Rat,
    r: i64,
    s: i64,
    flow: i64,
    mult: i64,
) {
    let (u, v) = (level.u as i64, level.v as i64);
    let lam = reduce_mod2(lambda);
    let a1 = reduce_mod2(&level.lambda(r, s));
    let a2 = reduce_mod2(&level.lambda(u - r, v - s));
    if lam != a1 && lam != a2 {
        let label = AffineLabel::new(
            level,
            AffineKind::ETyp {
                lambda: lam,
                r: r as u32,
                s: s as u32,
            },
            flow,
        )
        .expect("typical weight")
        .canonicalize(level);
        out.add_term(label, mult);
        return;
    }
    // atypical: [E^+_{r,s}] = [D^+_{r,s}] + [sigma^{-1} D^+_{r,s-1}]
    // (the second factor is sigma^{-1} L_r when s = 1)
    let (rr, ss) = if lam == a1 { (r, s) } else { (u - r, v - s) };
    let head = AffineLabel::new(
        level,
        AffineKind::DPlus {
            r: rr as u32,
            s: ss as u32,
        },
        flow,
    )
    .expect("in range")
    .canonicalize(level);
    out.add_term(head, mult);
    let tail = if ss >= 2 {
        AffineLabel::new(
            level,
            AffineKind::DPlus {
                r: rr as u32,
                s: (ss - 1) as u32,
            },
            flow - 1,
        )
    } else {
        AffineLabel::new(level, AffineKind::L { r: rr as u32 }, flow - 1)
    }
    .expect("in range")
    .canonicalize(level);
    out.add_term(tail, mult);
}
