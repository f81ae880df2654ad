//! The parafermion coset: canonical module labels, conformal weights, exact
//! characters and (Grothendieck) fusion.
//!
//! Labels are canonicalized at construction: `D` with `s = v-1` is rewritten
//! to a `C`-type label, relaxed labels get a Kac-canonical `(r,s)`, and every
//! parity constraint is enforced.  `C(mu; r)` and `C(-mu; r)` stay distinct —
//! they share a character without being isomorphic.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::RwLock;

use num_traits::{Signed, Zero};

use crate::affine::Level;
use crate::fusion::FusionElement;
use crate::qseries::{eta_inverse, rat_int, QSeries, Rat};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CosetError {
    #[error("label parameter out of range: {0}")]
    RangeError(String),
    #[error("weight {mu} violates the parity constraint {constraint} of {kind}")]
    ParityMismatch {
        mu: Rat,
        constraint: String,
        kind: String,
    },
    #[error("relaxed weight {0} lies on an atypical coset of (r, s) = ({1}, {2})")]
    TypicalOnAtypicalWeight(Rat, u32, u32),
    #[error("truncation order {order} lies below the ground-state exponent {lead}")]
    TruncationBelowGroundState { order: Rat, lead: Rat },
    #[error("label must be canonical here: {0}")]
    UnnormalizedLabel(String),
    #[error("cannot parse label {0:?}")]
    BadLabel(String),
}

/// Character route selector: the resolution-derived formulas are primary,
/// the conjugate resolution provides an independent cross-check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Primary,
    Crosscheck,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CosetKind {
    /// `C_{mu;r}`: coset factor of the atypical irreducible `L_r` family.
    C { mu: Rat, r: u32 },
    /// `D_{mu;r,s}`: coset factor of the `D^+` family (`s <= v-2` once canonical).
    D { mu: Rat, r: u32, s: u32 },
    /// Irreducible typical `E_{mu;r,s}`.
    ETyp { mu: Rat, r: u32, s: u32 },
    /// Length-2 standard `E^+_{mu;r,s}`.
    EStdPlus { mu: Rat, r: u32, s: u32 },
    /// Length-2 standard `E^-_{mu;r,s}`.
    EStdMinus { mu: Rat, r: u32, s: u32 },
}

/// A canonical parafermion module label.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CosetLabel {
    kind: CosetKind,
}

fn reduce_mod2(x: &Rat) -> Rat {
    let two = rat_int(2);
    x - (x / &two).floor() * &two
}

fn same_coset2(a: &Rat, b: &Rat) -> bool {
    ((a - b) / rat_int(2)).is_integer()
}

impl CosetLabel {
    /// Validate and canonicalize.  Idempotent: feeding a canonical label's
    /// kind back returns the same label.
    pub fn new(level: &Level, kind: CosetKind) -> Result<Self, CosetError> {
        let (u, v) = (level.u() as i64, level.v() as i64);
        let check_r = |r: u32, what: &str| {
            if (1..u).contains(&(r as i64)) {
                Ok(())
            } else {
                Err(CosetError::RangeError(format!("r = {r} in {what}")))
            }
        };
        let check_s = |s: u32, what: &str| {
            if (1..v).contains(&(s as i64)) {
                Ok(())
            } else {
                Err(CosetError::RangeError(format!("s = {s} in {what}")))
            }
        };
        let parity = |mu: &Rat, base: &Rat, kind: &str| {
            if same_coset2(mu, base) {
                Ok(())
            } else {
                Err(CosetError::ParityMismatch {
                    mu: mu.clone(),
                    constraint: format!("mu = {base} (mod 2)"),
                    kind: kind.to_string(),
                })
            }
        };
        match kind {
            CosetKind::C { mu, r } => {
                check_r(r, "C")?;
                parity(&mu, &rat_int(r as i64 - 1), "C")?;
                Ok(CosetLabel {
                    kind: CosetKind::C { mu, r },
                })
            }
            CosetKind::D { mu, r, s } => {
                check_r(r, "D")?;
                check_s(s, "D")?;
                parity(&mu, &level.lambda(r as i64, s as i64), "D")?;
                if s as i64 == v - 1 {
                    // D_{mu;r,v-1} is isomorphic to C_{mu-k;u-r}
                    let mu2 = &mu - level.k();
                    Self::new(
                        level,
                        CosetKind::C {
                            mu: mu2,
                            r: (u - r as i64) as u32,
                        },
                    )
                } else {
                    Ok(CosetLabel {
                        kind: CosetKind::D { mu, r, s },
                    })
                }
            }
            CosetKind::ETyp { mu, r, s } => {
                check_r(r, "E")?;
                check_s(s, "E")?;
                let a1 = level.lambda(r as i64, s as i64);
                let a2 = level.lambda(u - r as i64, v - s as i64);
                if same_coset2(&mu, &a1) || same_coset2(&mu, &a2) {
                    return Err(CosetError::TypicalOnAtypicalWeight(mu, r, s));
                }
                let kac = level
                    .minmod()
                    .kac_canonical(r as i64, s as i64)
                    .expect("range-checked");
                Ok(CosetLabel {
                    kind: CosetKind::ETyp {
                        mu,
                        r: kac.r,
                        s: kac.s,
                    },
                })
            }
            CosetKind::EStdPlus { mu, r, s } => {
                check_r(r, "Estd+")?;
                check_s(s, "Estd+")?;
                parity(&mu, &level.lambda(r as i64, s as i64), "Estd+")?;
                Ok(CosetLabel {
                    kind: CosetKind::EStdPlus { mu, r, s },
                })
            }
            CosetKind::EStdMinus { mu, r, s } => {
                check_r(r, "Estd-")?;
                check_s(s, "Estd-")?;
                parity(
                    &mu,
                    &level.lambda(u - r as i64, v - s as i64),
                    "Estd-",
                )?;
                Ok(CosetLabel {
                    kind: CosetKind::EStdMinus { mu, r, s },
                })
            }
        }
    }

    pub fn kind(&self) -> &CosetKind {
        &self.kind
    }

    pub fn mu(&self) -> &Rat {
        match &self.kind {
            CosetKind::C { mu, .. }
            | CosetKind::D { mu, .. }
            | CosetKind::ETyp { mu, .. }
            | CosetKind::EStdPlus { mu, .. }
            | CosetKind::EStdMinus { mu, .. } => mu,
        }
    }

    /// Shift the weight by `delta` (stays in the same family).
    pub fn weight_shifted(&self, level: &Level, delta: &Rat) -> CosetLabel {
        let mut kind = self.kind.clone();
        match &mut kind {
            CosetKind::C { mu, .. }
            | CosetKind::D { mu, .. }
            | CosetKind::ETyp { mu, .. }
            | CosetKind::EStdPlus { mu, .. }
            | CosetKind::EStdMinus { mu, .. } => *mu = &*mu + delta,
        }
        CosetLabel::new(level, kind).expect("weight shift by a lattice vector stays valid")
    }

    pub fn is_irreducible(&self) -> bool {
        !matches!(
            self.kind,
            CosetKind::EStdPlus { .. } | CosetKind::EStdMinus { .. }
        )
    }
}

impl fmt::Display for CosetLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            CosetKind::C { mu, r } => write!(f, "C[{mu};{r}]"),
            CosetKind::D { mu, r, s } => write!(f, "D[{mu};{r},{s}]"),
            CosetKind::ETyp { mu, r, s } => write!(f, "E[{mu};{r},{s}]"),
            CosetKind::EStdPlus { mu, r, s } => write!(f, "Estd+[{mu};{r},{s}]"),
            CosetKind::EStdMinus { mu, r, s } => write!(f, "Estd-[{mu};{r},{s}]"),
        }
    }
}

/// Parse the grammar `C[mu;r]`, `D[mu;r,s]`, `E[mu;r,s]`, `Estd+[mu;r,s]`,
/// `Estd-[mu;r,s]`.
pub fn parse_coset_label(level: &Level, text: &str) -> Result<CosetLabel, CosetError> {
    let text = text.trim();
    let bad = || CosetError::BadLabel(text.to_string());
    let (head, args) = text.split_once('[').ok_or_else(bad)?;
    let args = args.strip_suffix(']').ok_or_else(bad)?;
    let (mu_str, rest) = args.split_once(';').ok_or_else(bad)?;
    let mu = Rat::from_str(mu_str.trim()).map_err(|_| bad())?;
    let parse_u32 = |x: &str| x.trim().parse::<u32>().map_err(|_| bad());
    let rs = |rest: &str| -> Result<(u32, u32), CosetError> {
        let (r, s) = rest.split_once(',').ok_or_else(bad)?;
        Ok((parse_u32(r)?, parse_u32(s)?))
    };
    let kind = match head.trim() {
        "C" => CosetKind::C {
            mu,
            r: parse_u32(rest)?,
        },
        "D" => {
            let (r, s) = rs(rest)?;
            CosetKind::D { mu, r, s }
        }
        "E" => {
            let (r, s) = rs(rest)?;
            CosetKind::ETyp { mu, r, s }
        }
        "Estd+" => {
            let (r, s) = rs(rest)?;
            CosetKind::EStdPlus { mu, r, s }
        }
        "Estd-" => {
            let (r, s) = rs(rest)?;
            CosetKind::EStdMinus { mu, r, s }
        }
        _ => return Err(bad()),
    };
    CosetLabel::new(level, kind)
}

// ---- family enumeration -----------------------------------------------------

/// A one-parameter family of inequivalent irreducible coset modules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FamilyDescriptor {
    /// `C_{mu;r}` with `mu` in `base + 2Z`.
    C { r: u32, base: Rat },
    /// `D_{mu;r,s}` with `mu` in `base + 2Z` (`s <= v-2`).
    D { r: u32, s: u32, base: Rat },
    /// `E_{mu;r,s}` with `mu` mod 2 off the two excluded cosets.
    ETyp {
        r: u32,
        s: u32,
        excluded: [Rat; 2],
    },
}

impl FamilyDescriptor {
    pub fn contains(&self, mu: &Rat) -> bool {
        match self {
            FamilyDescriptor::C { base, .. } | FamilyDescriptor::D { base, .. } => {
                same_coset2(mu, base)
            }
            FamilyDescriptor::ETyp { excluded, .. } => {
                !same_coset2(mu, &excluded[0]) && !same_coset2(mu, &excluded[1])
            }
        }
    }

    /// A concrete canonical label at weight `mu`.
    pub fn instantiate(&self, level: &Level, mu: Rat) -> Result<CosetLabel, CosetError> {
        let kind = match self {
            FamilyDescriptor::C { r, .. } => CosetKind::C { mu, r: *r },
            FamilyDescriptor::D { r, s, .. } => CosetKind::D { mu, r: *r, s: *s },
            FamilyDescriptor::ETyp { r, s, .. } => CosetKind::ETyp { mu, r: *r, s: *s },
        };
        CosetLabel::new(level, kind)
    }
}

impl fmt::Display for FamilyDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyDescriptor::C { r, base } => write!(f, "C[{base}+2m;{r}], m in Z"),
            FamilyDescriptor::D { r, s, base } => write!(f, "D[{base}+2m;{r},{s}], m in Z"),
            FamilyDescriptor::ETyp { r, s, excluded } => write!(
                f,
                "E[mu;{r},{s}], mu mod 2 not in {{{}, {}}}",
                excluded[0], excluded[1]
            ),
        }
    }
}

/// Descriptors of the inequivalent irreducible families: the `C` series, the
/// independent `D` series (`s <= v-2`), and one `E` family per Kac class,
/// with representatives split by the parity of `u` (matching the known
/// lists for `k = -(n-1)/n`).
pub fn enumerate_families(level: &Level) -> Vec<FamilyDescriptor> {
    let (u, v) = (level.u() as i64, level.v() as i64);
    let mut out = Vec::new();
    for r in 1..u {
        out.push(FamilyDescriptor::C {
            r: r as u32,
            base: reduce_mod2(&rat_int(r - 1)),
        });
    }
    for r in 1..u {
        for s in 1..=(v - 2) {
            out.push(FamilyDescriptor::D {
                r: r as u32,
                s: s as u32,
                base: reduce_mod2(&level.lambda(r, s)),
            });
        }
    }
    let (r_max, s_max) = if u % 2 == 1 {
        ((u - 1) / 2, v - 1)
    } else {
        (u - 1, (v - 1) / 2)
    };
    for r in 1..=r_max {
        for s in 1..=s_max {
            out.push(FamilyDescriptor::ETyp {
                r: r as u32,
                s: s as u32,
                excluded: [
                    reduce_mod2(&level.lambda(r, s)),
                    reduce_mod2(&level.lambda(u - r, v - s)),
                ],
            });
        }
    }
    out
}

// ---- the coset algebra --------------------------------------------------------

/// Level-bound coset context.  Carries a read-safe cache of the
/// `chi_{r,s}/eta` building blocks.
pub struct Coset {
    level: Level,
    chi_cache: RwLock<BTreeMap<(u32, u32), QSeries>>,
}

impl Coset {
    pub fn new(level: Level) -> Self {
        Coset {
            level,
            chi_cache: RwLock::new(BTreeMap::new()),
        }
    }

    pub fn level(&self) -> &Level {
        &self.level
    }

    /// `chi_{r,s}/eta`, exact at least to `order`.
    pub fn chi_over_eta(&self, r: u32, s: u32, order: &Rat) -> QSeries {
        {
            let cache = self.chi_cache.read().expect("cache lock");
            if let Some(hit) = cache.get(&(r, s)) {
                if hit.order() >= order {
                    return hit.truncate(order);
                }
            }
        }
        let build = order + rat_int(2);
        let mm = self.level.minmod();
        let numer = mm.char_numerator(r as i64, s as i64, &build);
        let inv = eta_inverse(&build);
        let series = numer.mul(&inv.mul(&inv)).truncate(order);
        let mut cache = self.chi_cache.write().expect("cache lock");
        cache.insert((r, s), series.clone());
        series
    }

    /// Conformal weight of the ground states of a canonical label.
    pub fn conformal_weight(&self, label: &CosetLabel) -> Rat {
        let level = &self.level;
        let fock = |mu: &Rat| -level.fock_exponent(mu);
        match &label.kind {
            CosetKind::ETyp { mu, r, s }
            | CosetKind::EStdPlus { mu, r, s }
            | CosetKind::EStdMinus { mu, r, s } => {
                level.delta(*r as i64, *s as i64) + fock(mu)
            }
            CosetKind::C { mu, r } => {
                let lam = rat_int(*r as i64 - 1);
                let base = level.delta(*r as i64, 0) + fock(mu);
                if mu.abs() <= lam {
                    base
                } else {
                    base + (mu.abs() - lam) / rat_int(2)
                }
            }
            CosetKind::D { mu, r, s } => {
                let lam = level.lambda(*r as i64, *s as i64);
                let base = level.delta(*r as i64, *s as i64) + fock(mu);
                if mu <= &lam {
                    base
                } else {
                    base + (mu - lam) / rat_int(2)
                }
            }
        }
    }

    /// Ground-state exponent `Delta - c~/24` of the character.
    pub fn ground_exponent(&self, label: &CosetLabel) -> Rat {
        self.conformal_weight(label) - self.level.c_tilde() / rat_int(24)
    }

    /// Exact character to order `n`.
    pub fn character(&self, label: &CosetLabel, n: &Rat, route: Route) -> Result<QSeries, CosetError> {
        let lead = self.ground_exponent(label);
        if n < &lead {
            return Err(CosetError::TruncationBelowGroundState {
                order: n.clone(),
                lead,
            });
        }
        let level = &self.level;
        match &label.kind {
            CosetKind::ETyp { mu, r, s }
            | CosetKind::EStdPlus { mu, r, s }
            | CosetKind::EStdMinus { mu, r, s } => {
                let e0 = -level.fock_exponent(mu);
                let sub = n - &e0;
                Ok(self.chi_over_eta(*r, *s, &sub).shift(&e0).truncate(n))
            }
            CosetKind::C { mu, r } => Ok(self.c_character(mu, *r, n, route)),
            CosetKind::D { mu, r, s } => self.d_character(mu, *r, *s, n, route),
        }
    }

    fn c_character(&self, mu: &Rat, r: u32, n: &Rat, route: Route) -> QSeries {
        let level = &self.level;
        let v = level.v() as i64;
        let k = level.k();
        let w = rat_int(level.w() as i64);
        let mut acc = QSeries::zero(n.clone());
        for s in 1..v {
            let sign = if (s - 1) % 2 == 0 { 1 } else { -1 };
            // lattice sums with exactly truncated quadratic exponents
            let sk = &k * rat_int(s);
            let (xa, xb, step) = match route {
                // sum_m [ q^{-(mu - sk + 2wm)^2/4k} - q^{-(mu + sk + 2w(m+1))^2/4k} ]
                Route::Primary => (mu - &sk, mu + &sk + rat_int(2) * &w, rat_int(2) * &w),
                // conjugate resolution: 2vk m = -2w m
                Route::Crosscheck => (mu + &sk, mu - &sk - rat_int(2) * &w, rat_int(-2) * &w),
            };
            let chi = self.chi_over_eta(r, s as u32, n);
            let chi_lead = chi
                .leading()
                .map(|(e, _)| e)
                .unwrap_or_else(Rat::zero);
            let sub = n - &chi_lead;
            let mut terms = Vec::new();
            for (start, coeff) in [(xa, 1i64), (xb, -1i64)] {
                let mut m = 0i64;
                loop {
                    let x = &start + &step * rat_int(m);
                    let e = -level.fock_exponent(&x);
                    let past_vertex = if step.is_positive() {
                        x.is_positive()
                    } else {
                        x.is_negative()
                    };
                    if &e <= &sub {
                        terms.push((e, rat_int(coeff * sign)));
                    } else if past_vertex {
                        break;
                    }
                    m += 1;
                }
            }
            let lattice = QSeries::from_terms(terms, sub.clone());
            acc = acc.add(&lattice.mul(&chi).truncate(n));
        }
        acc
    }

    fn d_character(
        &self,
        mu: &Rat,
        r: u32,
        s: u32,
        n: &Rat,
        route: Route,
    ) -> Result<QSeries, CosetError> {
        let level = &self.level;
        let (u, v) = (level.u() as i64, level.v() as i64);
        let k = level.k();
        let mut acc = QSeries::zero(n.clone());
        for s1 in (s as i64 + 1)..v {
            let sign = if (s1 - s as i64 - 1) % 2 == 0 { 1 } else { -1 };
            let e0 = -level.fock_exponent(&(mu - &k * rat_int(s1 - s as i64)));
            if &e0 > n {
                continue;
            }
            let sub = n - &e0;
            let piece = self
                .chi_over_eta(r, s1 as u32, &sub)
                .shift(&e0)
                .scale(&rat_int(sign));
            acc = acc.add(&piece.truncate(n));
        }
        let sign = if (v - 1 - s as i64) % 2 == 0 { 1 } else { -1 };
        let tail_mu = mu - &k * rat_int(v - s as i64);
        let tail = self.c_character(&tail_mu, (u - r as i64) as u32, n, route);
        Ok(acc.add(&tail.scale(&rat_int(sign))))
    }

    // ---- fusion -----------------------------------------------------------

    /// Genuine fusion with a `C`-type label (simple-current style rules).
    /// Standard (`Estd`) arguments are resolved through their composition
    /// factors, which is recorded on the output.
    pub fn fuse_with_c(
        &self,
        c: &CosetLabel,
        x: &CosetLabel,
    ) -> Result<FusionElement<CosetLabel>, CosetError> {
        let CosetKind::C { mu, r } = &c.kind else {
            return Err(CosetError::UnnormalizedLabel(format!(
                "fuse_with_c needs a C-type first factor, got {c}"
            )));
        };
        let level = &self.level;
        let mm = level.minmod();
        let mut out = FusionElement::zero();
        if !x.is_irreducible() {
            let factors = self.composition_factors(x);
            for (f, m) in factors.terms() {
                let prod = self.fuse_with_c(c, f)?;
                out.add_assign(&prod.scaled(m));
            }
            out.genuine = false;
            out.via_composition_factors = true;
            return Ok(out);
        }
        let (x_mu, x_r) = (x.mu().clone(), coset_r(x));
        for (r3, _) in mm.rect_outputs((*r as i64, 1), (x_r as i64, 1)) {
            let mu3 = mu + &x_mu;
            let kind = match &x.kind {
                CosetKind::C { .. } => CosetKind::C {
                    mu: mu3,
                    r: r3 as u32,
                },
                CosetKind::D { s, .. } => CosetKind::D {
                    mu: mu3,
                    r: r3 as u32,
                    s: *s,
                },
                CosetKind::ETyp { s, .. } => CosetKind::ETyp {
                    mu: mu3,
                    r: r3 as u32,
                    s: *s,
                },
                _ => unreachable!(),
            };
            out.add_term(CosetLabel::new(level, kind)?, 1);
        }
        Ok(out)
    }

    /// Composition factors of a standard label in the Grothendieck group.
    pub fn composition_factors(&self, x: &CosetLabel) -> FusionElement<CosetLabel> {
        let level = &self.level;
        let (u, v) = (level.u(), level.v());
        let k = level.k();
        let mut out = FusionElement::zero();
        match &x.kind {
            CosetKind::EStdPlus { mu, r, s } => {
                // 0 -> D_{mu;r,s} -> E^+ -> D_{mu+k;r,s-1} -> 0 (s=1: C_{mu+k;r})
                out.add_term(
                    CosetLabel::new(
                        level,
                        CosetKind::D {
                            mu: mu.clone(),
                            r: *r,
                            s: *s,
                        },
                    )
                    .expect("valid factor"),
                    1,
                );
                let tail = if *s >= 2 {
                    CosetKind::D {
                        mu: mu + &k,
                        r: *r,
                        s: *s - 1,
                    }
                } else {
                    CosetKind::C { mu: mu + &k, r: *r }
                };
                out.add_term(CosetLabel::new(level, tail).expect("valid factor"), 1);
            }
            CosetKind::EStdMinus { mu, r, s } => {
                // 0 -> D_{mu+k;u-r,v-1-s} -> E^- -> D_{mu;u-r,v-s} -> 0
                // (s = v-1: the submodule is C_{mu+k;u-r})
                let head = if *s <= v - 2 {
                    CosetKind::D {
                        mu: mu + &k,
                        r: u - *r,
                        s: v - 1 - *s,
                    }
                } else {
                    CosetKind::C {
                        mu: mu + &k,
                        r: u - *r,
                    }
                };
                out.add_term(CosetLabel::new(level, head).expect("valid factor"), 1);
                out.add_term(
                    CosetLabel::new(
                        level,
                        CosetKind::D {
                            mu: mu.clone(),
                            r: u - *r,
                            s: v - *s,
                        },
                    )
                    .expect("valid factor"),
                    1,
                );
            }
            _ => {
                out.add_term(x.clone(), 1);
            }
        }
        out
    }

    /// Grothendieck fusion of two canonical labels.  Standard inputs are
    /// resolved through their composition factors (flagged on the output);
    /// products with `C`-type labels are genuine fusion rules.
    pub fn gr_fuse(
        &self,
        a: &CosetLabel,
        b: &CosetLabel,
    ) -> Result<FusionElement<CosetLabel>, CosetError> {
        if !a.is_irreducible() || !b.is_irreducible() {
            let fa = self.composition_factors(a);
            let fb = self.composition_factors(b);
            let mut out = FusionElement::zero();
            for (la, ma) in fa.terms() {
                for (lb, mb) in fb.terms() {
                    let prod = self.gr_fuse(la, lb)?;
                    out.add_assign(&prod.scaled(ma * mb));
                }
            }
            out.genuine = false;
            out.via_composition_factors = true;
            return Ok(out);
        }
        if matches!(a.kind, CosetKind::C { .. }) {
            return self.fuse_with_c(a, b);
        }
        if matches!(b.kind, CosetKind::C { .. }) {
            return self.fuse_with_c(b, a);
        }
        let level = &self.level;
        let mm = level.minmod();
        let v = level.v() as i64;
        let k = level.k();
        let mut out = FusionElement::zero();
        out.genuine = false;
        match (&a.kind, &b.kind) {
            (CosetKind::D { mu, r, s }, CosetKind::D { mu: mu2, r: r2, s: s2 }) => {
                let (r, s, r2, s2) = (*r as i64, *s as i64, *r2 as i64, *s2 as i64);
                let msum = mu + mu2;
                if s + s2 < v {
                    for (r3, s3) in mm.rect_outputs((r, s), (r2, s2)) {
                        self.emit_typical(&mut out, &(&msum - &k), r3, s3, 1);
                    }
                    for (r3, _) in mm.rect_outputs((r, 1), (r2, 1)) {
                        out.add_term(
                            CosetLabel::new(
                                level,
                                CosetKind::D {
                                    mu: msum.clone(),
                                    r: r3 as u32,
                                    s: (s + s2) as u32,
                                },
                            )?,
                            1,
                        );
                    }
                } else {
                    for (r3, s3) in mm.rect_outputs((r, s + 1), (r2, s2 + 1)) {
                        self.emit_typical(&mut out, &(&msum - &k), r3, s3, 1);
                    }
                    for (r3, _) in mm.rect_outputs((r, 1), (r2, 1)) {
                        out.add_term(
                            CosetLabel::new(
                                level,
                                CosetKind::D {
                                    mu: &msum - &k,
                                    r: (level.u() as i64 - r3) as u32,
                                    s: (s + s2 - v + 1) as u32,
                                },
                            )?,
                            1,
                        );
                    }
                }
            }
            (CosetKind::ETyp { mu, r, s }, CosetKind::D { mu: mu2, r: r2, s: s2 })
            | (CosetKind::D { mu: mu2, r: r2, s: s2 }, CosetKind::ETyp { mu, r, s }) => {
                let (r, s, r2, s2) = (*r as i64, *s as i64, *r2 as i64, *s2 as i64);
                let msum = mu + mu2;
                for (r3, s3) in mm.rect_outputs((r, s), (r2, s2 + 1)) {
                    self.emit_typical(&mut out, &msum, r3, s3, 1);
                }
                for (r3, s3) in mm.rect_outputs((r, s), (r2, s2)) {
                    self.emit_typical(&mut out, &(&msum - &k), r3, s3, 1);
                }
            }
            (CosetKind::ETyp { mu, r, s }, CosetKind::ETyp { mu: mu2, r: r2, s: s2 }) => {
                let (r, s, r2, s2) = (*r as i64, *s as i64, *r2 as i64, *s2 as i64);
                let msum = mu + mu2;
                for (r3, s3) in mm.rect_outputs((r, s), (r2, s2)) {
                    self.emit_typical(&mut out, &(&msum - &k), r3, s3, 1);
                    self.emit_typical(&mut out, &(&msum + &k), r3, s3, 1);
                }
                for shift in [-1, 1] {
                    for (r3, s3) in mm.rect_outputs((r, s), (r2, s2 + shift)) {
                        self.emit_typical(&mut out, &msum, r3, s3, 1);
                    }
                }
            }
            _ => unreachable!("C handled above, standards resolved above"),
        }
        Ok(out)
    }

    /// Add the Grothendieck class of the standard module at weight `mu` over
    /// `(r,s)`: the typical irreducible off the atypical cosets, otherwise
    /// the composition factors of the length-2 standard supported there.
    fn emit_typical(
        &self,
        out: &mut FusionElement<CosetLabel>,
        mu: &Rat,
        r: i64,
        s: i64,
        mult: i64,
    ) {
        let level = &self.level;
        let (u, v) = (level.u() as i64, level.v() as i64);
        let k = level.k();
        let a1 = level.lambda(r, s);
        let a2 = level.lambda(u - r, v - s);
        if !same_coset2(mu, &a1) && !same_coset2(mu, &a2) {
            let label = CosetLabel::new(
                level,
                CosetKind::ETyp {
                    mu: mu.clone(),
                    r: r as u32,
                    s: s as u32,
                },
            )
            .expect("typical weight in range");
            out.add_term(label, mult);
            return;
        }
        let (rr, ss) = if same_coset2(mu, &a1) {
            (r, s)
        } else {
            (u - r, v - s)
        };
        let head = CosetLabel::new(
            level,
            CosetKind::D {
                mu: mu.clone(),
                r: rr as u32,
                s: ss as u32,
            },
        )
        .expect("in range");
        out.add_term(head, mult);
        let tail = if ss >= 2 {
            CosetKind::D {
                mu: mu + &k,
                r: rr as u32,
                s: (ss - 1) as u32,
            }
        } else {
            CosetKind::C {
                mu: mu + &k,
                r: rr as u32,
            }
        };
        out.add_term(CosetLabel::new(level, tail).expect("in range"), mult);
    }

    /// Fuse two ring elements bilinearly.
    pub fn gr_fuse_elements(
        &self,
        a: &FusionElement<CosetLabel>,
        b: &FusionElement<CosetLabel>,
    ) -> Result<FusionElement<CosetLabel>, CosetError> {
        let mut out = FusionElement::zero();
        for (la, ma) in a.terms() {
            for (lb, mb) in b.terms() {
                let prod = self.gr_fuse(la, lb)?;
                out.add_assign(&prod.scaled(ma * mb));
            }
        }
        Ok(out)
    }
}

fn coset_r(label: &CosetLabel) -> u32 {
    match &label.kind {
        CosetKind::C { r, .. }
        | CosetKind::D { r, .. }
        | CosetKind::ETyp { r, .. }
        | CosetKind::EStdPlus { r, .. }
        | CosetKind::EStdMinus { r, .. } => *r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::Level;
    use crate::qseries::rat;
    use num_traits::One;

    fn lvl(u: u32, v: u32) -> Level {
        Level::new(u, v).unwrap()
    }

    fn c_label(level: &Level, mu: Rat, r: u32) -> CosetLabel {
        CosetLabel::new(level, CosetKind::C { mu, r }).unwrap()
    }

    #[test]
    fn canonicalization_rules() {
        let l = lvl(4, 3);
        // D(mu; r, v-1) -> C(mu - k; u - r)
        let lam = l.lambda(1, 2);
        let d = CosetLabel::new(
            &l,
            CosetKind::D {
                mu: lam.clone(),
                r: 1,
                s: 2,
            },
        )
        .unwrap();
        match d.kind() {
            CosetKind::C { mu, r } => {
                assert_eq!(*r, 3);
                assert_eq!(mu, &(&lam - l.k()));
            }
            other => panic!("expected C rewrite, got {other:?}"),
        }
        // Etyp Kac identification: (1,1) ~ (3,2) at (4,3)
        let e1 = CosetLabel::new(&l, CosetKind::ETyp { mu: Rat::zero(), r: 1, s: 1 }).unwrap();
        let e2 = CosetLabel::new(&l, CosetKind::ETyp { mu: Rat::zero(), r: 3, s: 2 }).unwrap();
        assert_eq!(e1, e2);
        // vacuum maps to itself
        let vac = c_label(&l, Rat::zero(), 1);
        assert_eq!(
            CosetLabel::new(&l, vac.kind().clone()).unwrap(),
            vac
        );
        // parity violations are rejected
        assert!(matches!(
            CosetLabel::new(&l, CosetKind::C { mu: rat(1, 2), r: 1 }),
            Err(CosetError::ParityMismatch { .. })
        ));
        // typical labels on atypical weights are rejected
        assert!(matches!(
            CosetLabel::new(&l, CosetKind::ETyp { mu: rat(2, 3), r: 1, s: 1 }),
            Err(CosetError::TypicalOnAtypicalWeight(..))
        ));
        // C(mu) and C(-mu) stay distinct
        let a = c_label(&l, rat_int(2), 1);
        let b = c_label(&l, rat_int(-2), 1);
        assert_ne!(a, b);
    }

    #[test]
    fn simple_current_and_table_conformal_weights() {
        // simple current weight 1 + v/w at several levels
        for (u, v) in [(3u32, 2u32), (4, 3), (2, 3), (5, 3), (3, 4), (7, 4)] {
            let l = lvl(u, v);
            let coset = Coset::new(l);
            for mu in [rat_int(2), rat_int(-2)] {
                let c = c_label(&l, mu, 1);
                assert_eq!(
                    coset.conformal_weight(&c),
                    Rat::one() + rat(v as i64, l.w() as i64),
                    "C(+-2;1) at ({u},{v})"
                );
            }
        }
        // k = -4/3: Delta(C(4;1)) = 5
        let l = lvl(2, 3);
        let coset = Coset::new(l);
        assert_eq!(coset.conformal_weight(&c_label(&l, rat_int(4), 1)), rat_int(5));
        // k = -2/3 examples
        let l = lvl(4, 3);
        let coset = Coset::new(l);
        assert_eq!(coset.conformal_weight(&c_label(&l, Rat::zero(), 3)), rat(3, 2));
        let e = CosetLabel::new(&l, CosetKind::ETyp { mu: Rat::zero(), r: 1, s: 1 }).unwrap();
        assert_eq!(coset.conformal_weight(&e), rat(-1, 6));
        let d = CosetLabel::new(&l, CosetKind::D { mu: rat(2, 3), r: 1, s: 1 }).unwrap();
        assert_eq!(coset.conformal_weight(&d), Rat::one());
        let d2 = CosetLabel::new(&l, CosetKind::D { mu: rat(2, 3), r: 3, s: 1 }).unwrap();
        assert_eq!(coset.conformal_weight(&d2), rat(1, 2));
    }

    #[test]
    fn character_leading_exponent_matches_conformal_weight() {
        for (u, v) in [(3u32, 2u32), (4, 3), (2, 3)] {
            let l = lvl(u, v);
            let coset = Coset::new(l);
            let mut labels = vec![
                c_label(&l, Rat::zero(), 1),
                c_label(&l, rat_int(2), 1),
                c_label(&l, rat_int(-4), 1),
            ];
            if v >= 3 {
                labels.push(
                    CosetLabel::new(
                        &l,
                        CosetKind::D {
                            mu: l.lambda(1, 1),
                            r: 1,
                            s: 1,
                        },
                    )
                    .unwrap(),
                );
                labels.push(
                    CosetLabel::new(
                        &l,
                        CosetKind::D {
                            mu: l.lambda(1, 1) + rat_int(4),
                            r: 1,
                            s: 1,
                        },
                    )
                    .unwrap(),
                );
            }
            for label in labels {
                let lead = coset.ground_exponent(&label);
                let n = &lead + rat_int(6);
                let ch = coset.character(&label, &n, Route::Primary).unwrap();
                let (e, _) = ch.leading().expect("nonempty character");
                assert_eq!(e, lead, "label {label} at ({u},{v})");
            }
        }
    }

    #[test]
    fn c_character_routes_agree_and_are_reflection_symmetric() {
        for (u, v) in [(3u32, 2u32), (4, 3), (2, 3)] {
            let l = lvl(u, v);
            let coset = Coset::new(l);
            for r in 1..u {
                for m in -3i64..=3 {
                    let mu = rat_int(r as i64 - 1 + 2 * m);
                    let label = c_label(&l, mu.clone(), r);
                    let n = coset.ground_exponent(&label) + rat_int(8);
                    let a = coset.character(&label, &n, Route::Primary).unwrap();
                    let b = coset.character(&label, &n, Route::Crosscheck).unwrap();
                    assert!(a.eq_to_order(&b, &n), "routes at C[{mu};{r}] ({u},{v})");
                    let c = coset
                        .character(&c_label(&l, -mu.clone(), r), &n, Route::Primary)
                        .unwrap();
                    assert!(a.eq_to_order(&c, &n), "reflection at C[{mu};{r}] ({u},{v})");
                }
            }
        }
    }

    #[test]
    fn standard_character_short_exact_additivity() {
        // ch E^+_{mu;r,s} = ch D_{mu;r,s} + ch D_{mu+k;r,s-1} (s=1: C_{mu+k;r})
        for (u, v) in [(4u32, 3u32), (3, 4), (5, 3)] {
            let l = lvl(u, v);
            let coset = Coset::new(l);
            let n = rat_int(10);
            for r in 1..u {
                for s in 1..v {
                    let mu = l.lambda(r as i64, s as i64) + rat_int(2);
                    let e = CosetLabel::new(
                        &l,
                        CosetKind::EStdPlus {
                            mu: mu.clone(),
                            r,
                            s,
                        },
                    )
                    .unwrap();
                    let factors = coset.composition_factors(&e);
                    let n = factors
                        .terms()
                        .map(|(f, _)| coset.ground_exponent(f))
                        .chain([coset.ground_exponent(&e), n.clone()])
                        .max()
                        .unwrap()
                        + rat_int(6);
                    let lhs = coset.character(&e, &n, Route::Primary).unwrap();
                    let mut rhs = QSeries::zero(n.clone());
                    for (f, m) in factors.terms() {
                        assert_eq!(m, 1);
                        rhs = rhs.add(&coset.character(f, &n, Route::Primary).unwrap());
                    }
                    assert!(lhs.eq_to_order(&rhs, &n), "E+[{mu};{r},{s}] at ({u},{v})");
                }
            }
        }
    }

    #[test]
    fn fusion_unit_and_simple_current_group_for_k_minus_two_thirds() {
        let l = lvl(4, 3);
        let coset = Coset::new(l);
        let g = c_label(&l, Rat::zero(), 3);
        // G x G = vacuum
        let f = coset.fuse_with_c(&g, &g).unwrap();
        assert_eq!(f.as_single(), Some(&c_label(&l, Rat::zero(), 1)));
        assert!(f.genuine);
        // G x C_{mu;r} = C_{mu;4-r}
        for r in 1..=3u32 {
            let x = c_label(&l, rat_int(r as i64 - 1), r);
            let f = coset.fuse_with_c(&g, &x).unwrap();
            assert_eq!(
                f.as_single(),
                Some(&c_label(&l, rat_int(r as i64 - 1), 4 - r))
            );
        }
        // unit
        let unit = c_label(&l, Rat::zero(), 1);
        let d = CosetLabel::new(&l, CosetKind::D { mu: rat(2, 3), r: 1, s: 1 }).unwrap();
        let f = coset.fuse_with_c(&unit, &d).unwrap();
        assert_eq!(f.as_single(), Some(&d));
    }

    #[test]
    fn gr_fuse_commutes_and_respects_parity() {
        let l = lvl(4, 3);
        let coset = Coset::new(l);
        let d1 = CosetLabel::new(&l, CosetKind::D { mu: rat(2, 3), r: 1, s: 1 }).unwrap();
        let d2 = CosetLabel::new(&l, CosetKind::D { mu: rat(-1, 3), r: 2, s: 1 }).unwrap();
        let ab = coset.gr_fuse(&d1, &d2).unwrap();
        let ba = coset.gr_fuse(&d2, &d1).unwrap();
        assert_eq!(ab, ba);
        assert!(!ab.is_empty());
        let e = CosetLabel::new(&l, CosetKind::ETyp { mu: Rat::zero(), r: 1, s: 1 }).unwrap();
        let ed = coset.gr_fuse(&e, &d1).unwrap();
        let de = coset.gr_fuse(&d1, &e).unwrap();
        assert_eq!(ed, de);
    }

    #[test]
    fn family_descriptors_match_known_small_level_lists() {
        // k = -1/2 (n = 2): two C series, no independent D, one E family
        let l = lvl(3, 2);
        let fams = enumerate_families(&l);
        let c_count = fams.iter().filter(|f| matches!(f, FamilyDescriptor::C { .. })).count();
        let d_count = fams.iter().filter(|f| matches!(f, FamilyDescriptor::D { .. })).count();
        let e_fams: Vec<_> = fams
            .iter()
            .filter_map(|f| match f {
                FamilyDescriptor::ETyp { r, s, excluded } => Some((*r, *s, excluded.clone())),
                _ => None,
            })
            .collect();
        assert_eq!(c_count, 2);
        assert_eq!(d_count, 0);
        assert_eq!(e_fams.len(), 1);
        assert_eq!((e_fams[0].0, e_fams[0].1), (1, 1));
        // excluded points are the half-integer atypical cosets
        assert!(e_fams[0].2.contains(&rat(1, 2)));
        assert!(e_fams[0].2.contains(&rat(3, 2)));

        // k = -2/3 (n = 3): 3 C series, 3 D series, u even so s <= (v-1)/2
        let l = lvl(4, 3);
        let fams = enumerate_families(&l);
        let c_count = fams.iter().filter(|f| matches!(f, FamilyDescriptor::C { .. })).count();
        let d_count = fams.iter().filter(|f| matches!(f, FamilyDescriptor::D { .. })).count();
        let e_count = fams.iter().filter(|f| matches!(f, FamilyDescriptor::ETyp { .. })).count();
        assert_eq!((c_count, d_count, e_count), (3, 3, 3));
    }

    #[test]
    fn family_constraints_parity_consistent_with_canonicalization() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for (u, v) in [(3u32, 2u32), (4, 3), (2, 3)] {
            let l = lvl(u, v);
            let fams = enumerate_families(&l);
            for _ in 0..3500 {
                let fam = &fams[rng.gen_range(0..fams.len())];
                let m = rng.gen_range(-6i64..=6);
                match fam {
                    FamilyDescriptor::C { base, .. } | FamilyDescriptor::D { base, .. } => {
                        let mu = base + rat_int(2 * m);
                        assert!(fam.contains(&mu));
                        fam.instantiate(&l, mu).expect("family member is canonical");
                    }
                    FamilyDescriptor::ETyp { excluded, .. } => {
                        let offset = rat(rng.gen_range(1i64..=11), 12);
                        let mu = rat_int(2 * m) + &offset;
                        if fam.contains(&mu) {
                            fam.instantiate(&l, mu).expect("typical member is canonical");
                        } else {
                            assert!(
                                same_coset2(&mu, &excluded[0]) || same_coset2(&mu, &excluded[1])
                            );
                        }
                    }
                }
            }
        }
    }
}
