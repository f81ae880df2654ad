//! The extended parafermion coset: lattice theta functions and their
//! derivatives, standard and atypical extended characters, the weight-one
//! parts `Gamma_{mu;r}`, the finite module spectrum, and all S/T modular
//! data.
//!
//! The extension lattice is `L = 2wZ` with dual `L' = (1/v)Z` and
//! `p = (1/2)|L'/L| = vw`.  Extended weights are reduced mod `L` into
//! `[0, 2w)` at construction.

use std::fmt;

use astro_float::BigFloat;
use num_traits::{One, Signed, Zero};

use crate::affine::Level;
use crate::coset::{Coset, CosetError, CosetKind, CosetLabel, Route};
use crate::fusion::FusionElement;
use crate::precision::Arith;
use crate::qseries::{rat, rat_int, QSeries, Rat};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ExtensionError {
    #[error("typical weight {0} does not lie in the dual lattice (1/v)Z, so the module does not lift")]
    NotLiftable(Rat),
    #[error("weight {mu} is not congruent to {expected} mod 2")]
    ParityMismatch { mu: Rat, expected: Rat },
    #[error(transparent)]
    Coset(#[from] CosetError),
}

/// The extension lattice `L = 2wZ` with its dual `L' = (1/v)Z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExtLattice {
    level: Level,
}

impl ExtLattice {
    pub fn new(level: Level) -> Self {
        ExtLattice { level }
    }

    /// Generator `2w` of `L`.
    pub fn modulus(&self) -> u32 {
        2 * self.level.w()
    }

    /// `p = vw`, half the discriminant group order.
    pub fn p(&self) -> u32 {
        self.level.p()
    }

    /// `|L'/L| = 2p`.
    pub fn discriminant_order(&self) -> u32 {
        2 * self.level.p()
    }

    pub fn contains(&self, x: &Rat) -> bool {
        (x / rat_int(self.modulus() as i64)).is_integer()
    }

    pub fn in_dual(&self, x: &Rat) -> bool {
        (x * rat_int(self.level.v() as i64)).is_integer()
    }

    /// Representative of `x + L` in `[0, 2w)`.
    pub fn reduce(&self, x: &Rat) -> Rat {
        let m = rat_int(self.modulus() as i64);
        x - (x / &m).floor() * &m
    }
}

/// Canonical label of an extended module: a canonical coset label with its
/// weight reduced mod `L`, liftability enforced.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ExtLabel {
    inner: CosetLabel,
}

impl ExtLabel {
    pub fn new(level: &Level, label: CosetLabel) -> Result<Self, ExtensionError> {
        let lattice = ExtLattice::new(*level);
        if !lifts(level, &label) {
            return Err(ExtensionError::NotLiftable(label.mu().clone()));
        }
        let delta = lattice.reduce(label.mu()) - label.mu();
        Ok(ExtLabel {
            inner: label.weight_shifted(level, &delta),
        })
    }

    /// The underlying coset label (weight in `[0, 2w)`).
    pub fn coset(&self) -> &CosetLabel {
        &self.inner
    }

    pub fn mu(&self) -> &Rat {
        self.inner.mu()
    }
}

impl fmt::Display for ExtLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B.{}", self.inner)
    }
}

/// Some coset modules do not lift to the extension: typical weights must lie
/// in the dual lattice.  Atypical families (`C`, `D`, `Estd+-`) always lift.
pub fn lifts(level: &Level, label: &CosetLabel) -> bool {
    match label.kind() {
        CosetKind::ETyp { mu, .. } => ExtLattice::new(*level).in_dual(mu),
        _ => true,
    }
}

/// A row/column index of the Gamma S-matrix: the spanning-set pairs
/// `(mu; r)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct BkIndex {
    pub mu: u32,
    pub r: u32,
}

impl fmt::Display for BkIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({};{})", self.mu, self.r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SMatrixKind {
    /// Theta-function S-matrix, indices `0..=p`.
    Typ,
    /// Theta-derivative S-matrix, indices `1..=p-1`.
    Theta,
    /// Minimal-model S-matrix over the canonical Kac table.
    Vir,
    /// Weight-one sector S-matrix over the spanning set.
    Gamma,
}

pub struct SMatrix {
    pub kind: SMatrixKind,
    pub labels: Vec<String>,
    pub entries: Vec<Vec<BigFloat>>,
}

/// Level-bound context for the extended coset.
pub struct Extension {
    level: Level,
    lattice: ExtLattice,
    coset: Coset,
}

impl Extension {
    pub fn new(level: Level) -> Self {
        Extension {
            level,
            lattice: ExtLattice::new(level),
            coset: Coset::new(level),
        }
    }

    pub fn level(&self) -> &Level {
        &self.level
    }

    pub fn lattice(&self) -> &ExtLattice {
        &self.lattice
    }

    pub fn coset(&self) -> &Coset {
        &self.coset
    }

    /// Lattice theta function `theta_{mu+L}(q) = sum_{x in mu+L} q^{-x^2/4k}`
    /// at `z = 1`, or its normalized derivative
    /// `dtheta_{mu+L} = sum_{x in mu+L} (-x/2w) q^{-x^2/4k}`, exactly
    /// truncated at `n`.
    pub fn theta(&self, mu: &Rat, n: &Rat, deriv: bool) -> QSeries {
        let step = rat_int(self.lattice.modulus() as i64);
        let two_w = rat_int(2 * self.level.w() as i64);
        let mut terms = Vec::new();
        for dir in [1i64, -1] {
            let mut j = if dir == 1 { 0i64 } else { 1 };
            loop {
                let x = mu + &step * rat_int(dir * j);
                let e = -self.level.fock_exponent(&x);
                if &e <= n {
                    let c = if deriv { -&x / &two_w } else { Rat::one() };
                    terms.push((e, c));
                } else if (dir == 1 && x.is_positive()) || (dir == -1 && x.is_negative()) {
                    break;
                }
                j += 1;
            }
        }
        QSeries::from_terms(terms, n.clone())
    }

    /// The resummed double sum `A_lambda`.  The primary route is the closed
    /// form `2 dtheta_{lambda+L} + (1 + lambda/w) theta_{lambda+L}`; the
    /// cross-check reruns the partial-sum resummation
    /// `A = 2 A^+ + theta - 2 sum_{l>=0} q^{-(lambda-2wl)^2/4k}`.
    pub fn a_series(&self, lambda: &Rat, n: &Rat, route: Route) -> QSeries {
        match route {
            Route::Primary => {
                let dt = self.theta(lambda, n, true).scale(&rat_int(2));
                let coeff = Rat::one() + lambda / rat_int(self.level.w() as i64);
                dt.add(&self.theta(lambda, n, false).scale(&coeff))
            }
            Route::Crosscheck => {
                let two_w = rat_int(2 * self.level.w() as i64);
                let exp_minus = |nn: i64| {
                    let x = lambda - &two_w * rat_int(nn);
                    -self.level.fock_exponent(&x)
                };
                let exp_plus = |nn: i64| {
                    let x = lambda + &two_w * rat_int(nn);
                    -self.level.fock_exponent(&x)
                };
                // window of n-indices that can still reach order n
                let mut nmax = 0i64;
                {
                    let mut j = 0i64;
                    loop {
                        let alive = &exp_minus(j) <= n || &exp_plus(j + 1) <= n;
                        if alive {
                            nmax = j;
                        } else if (lambda - &two_w * rat_int(j)).is_negative()
                            && (lambda + &two_w * rat_int(j + 1)).is_positive()
                        {
                            // both quadratics past their vertices: dead for good
                            break;
                        }
                        j += 1;
                    }
                }
                // raw A^+ double sum over l, m >= 0
                let mut terms = Vec::new();
                for l in 0..=nmax {
                    for m in 0..=(nmax - l) {
                        let nn = l + m;
                        let e1 = exp_minus(nn);
                        if &e1 <= n {
                            terms.push((e1, rat_int(2)));
                        }
                        let e2 = exp_plus(nn + 1);
                        if &e2 <= n {
                            terms.push((e2, rat_int(-2)));
                        }
                    }
                }
                // + theta - 2 * one-sided sum
                let mut j = 0i64;
                loop {
                    let x = lambda - &two_w * rat_int(j);
                    let e = -self.level.fock_exponent(&x);
                    if &e <= n {
                        terms.push((e, rat_int(-2)));
                    } else if x.is_negative() {
                        break;
                    }
                    j += 1;
                }
                QSeries::from_terms(terms, n.clone()).add(&self.theta(lambda, n, false))
            }
        }
    }

    /// Standard extended character `(chi_{r,s}/eta) * theta_{mu+L}`,
    /// exact to order `n`.
    pub fn std_char(&self, mu: &Rat, r: u32, s: u32, n: &Rat) -> Result<QSeries, ExtensionError> {
        let (u, v) = (self.level.u() as i64, self.level.v() as i64);
        let a1 = self.level.lambda(r as i64, s as i64);
        let a2 = self.level.lambda(u - r as i64, v - s as i64);
        let atypical =
            ((mu - &a1) / rat_int(2)).is_integer() || ((mu - &a2) / rat_int(2)).is_integer();
        if !atypical && !self.lattice.in_dual(mu) {
            return Err(ExtensionError::NotLiftable(mu.clone()));
        }
        let chi = self.coset.chi_over_eta(r, s, n);
        let chi_lead = chi.leading().map(|(e, _)| e).unwrap_or_else(Rat::zero);
        let th = self.theta(mu, &(n - &chi_lead), false);
        Ok(th.mul(&chi).truncate(n))
    }

    /// The modular-weight-one part of the atypical extended character:
    /// `Gamma_{mu;r} = sum_s (-1)^{s-1} (chi_{r,s}/eta)
    ///                [dtheta_{mu+sk+L} - dtheta_{mu-sk+L}]`.
    pub fn gamma(&self, mu: &Rat, r: u32, n: &Rat) -> Result<QSeries, ExtensionError> {
        let expected = rat_int(r as i64 - 1);
        if !((mu - &expected) / rat_int(2)).is_integer() {
            return Err(ExtensionError::ParityMismatch {
                mu: mu.clone(),
                expected,
            });
        }
        let v = self.level.v() as i64;
        let k = self.level.k();
        let mut acc = QSeries::zero(n.clone());
        for s in 1..v {
            let sign = if (s - 1) % 2 == 0 { 1 } else { -1 };
            let chi = self.coset.chi_over_eta(r, s as u32, n);
            let chi_lead = chi.leading().map(|(e, _)| e).unwrap_or_else(Rat::zero);
            let sub = n - &chi_lead;
            let sk = &k * rat_int(s);
            let bracket = self
                .theta(&(mu + &sk), &sub, true)
                .sub(&self.theta(&(mu - &sk), &sub, true));
            acc = acc.add(&bracket.mul(&chi).truncate(n).scale(&rat_int(sign)));
        }
        Ok(acc)
    }

    /// Exact extended character.  The primary route assembles theta data
    /// (`Gamma` plus standard characters); the cross-check sums the coset
    /// characters over `mu + L`, which is finite to any fixed order.
    pub fn character(
        &self,
        label: &ExtLabel,
        n: &Rat,
        route: Route,
    ) -> Result<QSeries, ExtensionError> {
        match route {
            Route::Primary => self.char_theta_route(label, n),
            Route::Crosscheck => self.char_coset_sum(label, n),
        }
    }

    fn char_theta_route(&self, label: &ExtLabel, n: &Rat) -> Result<QSeries, ExtensionError> {
        let (weight1, weight0) = self.char_sectors(label, n)?;
        Ok(weight1.add(&weight0))
    }

    /// Split of the extended character into its modular-weight-one part (the
    /// `Gamma` sector) and the weight-zero remainder, which is an explicit
    /// rational combination of standard characters.  Typical and standard
    /// modules have no weight-one part.
    pub fn char_sectors(
        &self,
        label: &ExtLabel,
        n: &Rat,
    ) -> Result<(QSeries, QSeries), ExtensionError> {
        let level = &self.level;
        let (u, v) = (level.u() as i64, level.v() as i64);
        let k = level.k();
        let two_w = rat_int(2 * level.w() as i64);
        match label.coset().kind() {
            CosetKind::ETyp { mu, r, s }
            | CosetKind::EStdPlus { mu, r, s }
            | CosetKind::EStdMinus { mu, r, s } => {
                Ok((QSeries::zero(n.clone()), self.std_char(mu, *r, *s, n)?))
            }
            CosetKind::C { mu, r } => {
                let weight1 = self.gamma(mu, *r, n)?;
                let mut weight0 = QSeries::zero(n.clone());
                for s in 1..v {
                    let sign = rat_int(if (s - 1) % 2 == 0 { 1 } else { -1 });
                    let sk = &k * rat_int(s);
                    let vsk = &k * rat_int(v - s);
                    let c_plus = (mu - &vsk) / &two_w;
                    let c_minus = (mu + &vsk) / &two_w;
                    let part = self
                        .std_char(&(mu + &sk), *r, s as u32, n)?
                        .scale(&c_plus)
                        .sub(&self.std_char(&(mu - &sk), *r, s as u32, n)?.scale(&c_minus));
                    weight0 = weight0.add(&part.scale(&sign));
                }
                Ok((weight1, weight0))
            }
            CosetKind::D { mu, r, s } => {
                let mut weight0 = QSeries::zero(n.clone());
                for s1 in (*s as i64 + 1)..v {
                    let sign = rat_int(if (s1 - *s as i64 - 1) % 2 == 0 { 1 } else { -1 });
                    let shifted = mu - &k * rat_int(s1 - *s as i64);
                    let part = self.std_char(&shifted, *r, s1 as u32, n)?;
                    weight0 = weight0.add(&part.scale(&sign));
                }
                let sign = rat_int(if (v - 1 - *s as i64) % 2 == 0 { 1 } else { -1 });
                let tail_mu = mu - &k * rat_int(v - *s as i64);
                let tail_label = ExtLabel::new(
                    level,
                    CosetLabel::new(
                        level,
                        CosetKind::C {
                            mu: tail_mu,
                            r: (u - *r as i64) as u32,
                        },
                    )?,
                )?;
                let (tail1, tail0) = self.char_sectors(&tail_label, n)?;
                Ok((tail1.scale(&sign), weight0.add(&tail0.scale(&sign))))
            }
        }
    }

    fn char_coset_sum(&self, label: &ExtLabel, n: &Rat) -> Result<QSeries, ExtensionError> {
        let step = rat_int(self.lattice.modulus() as i64);
        let mut acc = QSeries::zero(n.clone());
        for dir in [1i64, -1] {
            let mut j = if dir == 1 { 0i64 } else { 1 };
            loop {
                let target = label.mu() + &step * rat_int(dir * j);
                let shifted = label
                    .coset()
                    .weight_shifted(&self.level, &(&target - label.mu()));
                let lead = self.coset.ground_exponent(&shifted);
                if &lead <= n {
                    acc = acc.add(&self.coset.character(&shifted, n, Route::Primary)?);
                } else if j > 0 {
                    // ground states grow quadratically in the weight
                    break;
                }
                j += 1;
            }
        }
        Ok(acc)
    }

    /// Ground-state conformal weight of the extended module: the minimum of
    /// the coset conformal weights over `mu + L`.
    pub fn conformal_weight(&self, label: &ExtLabel) -> Rat {
        let step = rat_int(self.lattice.modulus() as i64);
        // Delta(X_x) >= -x^2/4k + min Delta-table, so the scan below is finite
        let mut floor_const = Rat::zero();
        let level = &self.level;
        for r in 1..level.u() as i64 {
            for s in 0..level.v() as i64 {
                floor_const = floor_const.min(level.delta(r, s));
            }
        }
        let mut best: Option<Rat> = None;
        for dir in [1i64, -1] {
            let mut j = if dir == 1 { 0i64 } else { 1 };
            loop {
                let x = label.mu() + &step * rat_int(dir * j);
                let quad = -level.fock_exponent(&x) + &floor_const;
                if let Some(b) = &best {
                    if &quad > b
                        && ((dir == 1 && x.is_positive()) || (dir == -1 && x.is_negative()))
                    {
                        break;
                    }
                }
                let shifted = label.coset().weight_shifted(level, &(&x - label.mu()));
                let d = self.coset.conformal_weight(&shifted);
                best = Some(match best {
                    None => d,
                    Some(b) => b.min(d),
                });
                j += 1;
            }
        }
        best.expect("nonempty scan")
    }

    /// The complete finite list of inequivalent irreducible extended labels:
    /// `C` and `D` families over their parity classes mod `L`, and the
    /// liftable typicals over `L'/L` minus the atypical points.
    pub fn enumerate_modules(&self) -> Vec<ExtLabel> {
        let level = &self.level;
        let (u, v, w) = (level.u() as i64, level.v() as i64, level.w() as i64);
        let mut out = Vec::new();
        let lift = |kind| {
            ExtLabel::new(level, CosetLabel::new(level, kind).expect("enumerated label"))
                .expect("enumerated labels lift")
        };
        for r in 1..u {
            let base = (r - 1).rem_euclid(2);
            for j in 0..w {
                out.push(lift(CosetKind::C {
                    mu: rat_int(base + 2 * j),
                    r: r as u32,
                }));
            }
        }
        for r in 1..u {
            for s in 1..=(v - 2) {
                let base = self.lattice.reduce(&level.lambda(r, s));
                let base = &base - (&base / rat_int(2)).floor() * rat_int(2);
                for j in 0..w {
                    out.push(lift(CosetKind::D {
                        mu: &base + rat_int(2 * j),
                        r: r as u32,
                        s: s as u32,
                    }));
                }
            }
        }
        let mm = level.minmod();
        for kac in mm.kac_table() {
            let (r, s) = (kac.r as i64, kac.s as i64);
            let a1 = level.lambda(r, s);
            let a2 = level.lambda(u - r, v - s);
            for i in 0..(2 * level.p() as i64) {
                let mu = rat(i, v);
                let atypical = ((&mu - &a1) / rat_int(2)).is_integer()
                    || ((&mu - &a2) / rat_int(2)).is_integer();
                if atypical {
                    continue;
                }
                out.push(lift(CosetKind::ETyp {
                    mu,
                    r: r as u32,
                    s: s as u32,
                }));
            }
        }
        out
    }

    /// The spanning-set index pairs `(mu; r)` of the weight-one sector,
    /// quotiented by the affine Weyl and Kac symmetries.
    pub fn basis_bk(&self) -> Vec<BkIndex> {
        let (u, w) = (self.level.u(), self.level.w());
        let mut out = Vec::new();
        let push_range = |r: u32, mu_max: u32, out: &mut Vec<BkIndex>| {
            let mut mu = (r - 1) % 2;
            while mu <= mu_max {
                out.push(BkIndex { mu, r });
                mu += 2;
            }
        };
        if u % 2 == 1 {
            for r in 1..=(u - 1) / 2 {
                push_range(r, w, &mut out);
            }
        } else {
            for r in 1..u / 2 {
                push_range(r, w, &mut out);
            }
            push_range(u / 2, w / 2, &mut out);
        }
        out.sort_by_key(|b| (b.r, b.mu));
        out
    }

    /// Exact rank of the coefficient matrix of the spanning-set `Gamma`
    /// series truncated at `n`.  Rank equal to `|B_k|` is evidence (not
    /// proof) that the spanning set is linearly independent.
    pub fn gamma_rank(&self, n: &Rat) -> Result<usize, ExtensionError> {
        use std::collections::BTreeSet;
        let bk = self.basis_bk();
        let gammas: Vec<QSeries> = bk
            .iter()
            .map(|b| self.gamma(&rat_int(b.mu as i64), b.r, n))
            .collect::<Result<_, _>>()?;
        let exponents: BTreeSet<Rat> = gammas
            .iter()
            .flat_map(|g| g.terms().map(|(e, _)| e))
            .collect();
        let cols: Vec<Rat> = exponents.into_iter().collect();
        let mut rows: Vec<Vec<Rat>> = gammas
            .iter()
            .map(|g| cols.iter().map(|e| g.coeff(e)).collect())
            .collect();
        // exact Gaussian elimination over the rationals
        let mut rank = 0;
        let mut col = 0;
        while rank < rows.len() && col < cols.len() {
            if let Some(pivot) = (rank..rows.len()).find(|&i| !rows[i][col].is_zero()) {
                rows.swap(rank, pivot);
                let lead = rows[rank][col].clone();
                for i in (rank + 1)..rows.len() {
                    if rows[i][col].is_zero() {
                        continue;
                    }
                    let factor = &rows[i][col] / &lead;
                    for j in col..cols.len() {
                        let sub = &factor * &rows[rank][j];
                        rows[i][j] = &rows[i][j] - sub;
                    }
                }
                rank += 1;
            }
            col += 1;
        }
        Ok(rank)
    }

    /// Closed-form cardinality of the spanning set.
    pub fn dim_bound(&self) -> u64 {
        let (u, v, w) = (
            self.level.u() as i64,
            self.level.v() as i64,
            self.level.w() as i64,
        );
        let n = if u % 2 == 1 {
            (u - 1) * (w + 1) / 4
        } else {
            u * w / 4 - (v - 1 - u) / 2
        };
        n as u64
    }

    /// S-matrices of the modular data.
    pub fn smatrix(&self, kind: SMatrixKind, ar: &Arith) -> SMatrix {
        let p = self.level.p() as i64;
        match kind {
            SMatrixKind::Typ => {
                let norm_edge = ar.sqrt(&ar.from_rat(&rat(1, 2 * p)));
                let norm_bulk = ar.sqrt(&ar.from_rat(&rat(2, p)));
                let labels = (0..=p).map(|m| format!("{m}/{}", self.level.v())).collect();
                let entries = (0..=p)
                    .map(|m| {
                        (0..=p)
                            .map(|l| {
                                let norm = if l % p == 0 { &norm_edge } else { &norm_bulk };
                                ar.mul(norm, &ar.cos_pi(&rat(l * m, p)))
                            })
                            .collect()
                    })
                    .collect();
                SMatrix {
                    kind,
                    labels,
                    entries,
                }
            }
            SMatrixKind::Theta => {
                let norm = ar.sqrt(&ar.from_rat(&rat(2, p)));
                let labels = (1..p).map(|m| format!("{m}/{}", self.level.v())).collect();
                let entries = (1..p)
                    .map(|m| {
                        (1..p)
                            .map(|l| ar.mul(&norm, &ar.sin_pi(&rat(l * m, p))))
                            .collect()
                    })
                    .collect();
                SMatrix {
                    kind,
                    labels,
                    entries,
                }
            }
            SMatrixKind::Vir => {
                let (table, entries) = self.level.minmod().s_matrix(ar);
                SMatrix {
                    kind,
                    labels: table.iter().map(|l| l.to_string()).collect(),
                    entries,
                }
            }
            SMatrixKind::Gamma => {
                let bk = self.basis_bk();
                let labels = bk.iter().map(|b| b.to_string()).collect();
                let entries = bk
                    .iter()
                    .map(|a| bk.iter().map(|b| self.s_gamma_entry(a, b, ar)).collect())
                    .collect();
                SMatrix {
                    kind,
                    labels,
                    entries,
                }
            }
        }
    }

    /// `S^Gamma_{(mu;r)(mu';r')} = (2 A_{mu';r'}/sqrt(uw)) sin(pi r r'/t)
    /// cos(pi mu mu'/k)`.
    pub fn s_gamma_entry(&self, a: &BkIndex, b: &BkIndex, ar: &Arith) -> BigFloat {
        let (u, v, w) = (
            self.level.u() as i64,
            self.level.v() as i64,
            self.level.w() as i64,
        );
        // fold multiplicity of the column index under the symmetries that cut
        // [0, 2w) down to the spanning set: reflection mu -> 2w - mu always,
        // plus mu -> w -+ mu when r' = u/2 (each Kac-fixed column carries the
        // half-weight from its halved s'-range).  Net weight: 1 on the fixed
        // sublattice, 2 off it.
        let fixed_step = if b.r as i64 * 2 == u { w / 2 } else { w };
        let weight = if (b.mu as i64) % fixed_step == 0 {
            Rat::one()
        } else {
            rat_int(2)
        };
        let norm = ar.div(
            &ar.from_rat(&(rat_int(2) * weight)),
            &ar.sqrt(&ar.from_rat(&rat(u * w, 1))),
        );
        // r r'/t = r r' v / u; mu mu'/k = -mu mu' v / w (cos is even)
        let s = ar.sin_pi(&rat(a.r as i64 * b.r as i64 * v, u));
        let c = ar.cos_pi(&rat(a.mu as i64 * b.mu as i64 * v, w));
        ar.mul(&norm, &ar.mul(&s, &c))
    }

    /// Exact T-phase exponent: the class of `Delta - c~/24` mod 1, checked
    /// against every stored exponent of the assembled series.
    pub fn t_phase_gamma(&self, index: &BkIndex) -> Result<Rat, ExtensionError> {
        let label = CosetLabel::new(
            &self.level,
            CosetKind::C {
                mu: rat_int(index.mu as i64),
                r: index.r,
            },
        )?;
        let delta = self.coset.conformal_weight(&label);
        let phase = &delta - self.level.c_tilde() / rat_int(24);
        let probe = self.gamma(&rat_int(index.mu as i64), index.r, &(&phase + rat_int(4)))?;
        for (e, _) in probe.terms() {
            assert!(
                (&e - &phase).is_integer(),
                "Gamma exponent {e} not congruent to {phase} mod 1"
            );
        }
        Ok(reduce_mod1(&phase))
    }

    /// T-phase exponent of an extended module's character, through the
    /// congruence class of the assembled series (asserted to be single).
    pub fn t_phase_label(&self, label: &ExtLabel, n: &Rat) -> Result<Rat, ExtensionError> {
        let delta = self.conformal_weight(label);
        let phase = &delta - self.level.c_tilde() / rat_int(24);
        let build = n.clone().max(&phase + rat_int(3));
        let probe = self.character(label, &build, Route::Primary)?;
        for (e, _) in probe.terms() {
            assert!(
                (&e - &phase).is_integer(),
                "character exponent {e} not congruent to {phase} mod 1"
            );
        }
        Ok(reduce_mod1(&phase))
    }

    /// Grothendieck fusion of extended labels: the coset rules followed by
    /// reduction of output weights mod `L`.
    pub fn gr_fuse_ext(
        &self,
        a: &ExtLabel,
        b: &ExtLabel,
    ) -> Result<FusionElement<ExtLabel>, ExtensionError> {
        let product = self.coset.gr_fuse(a.coset(), b.coset())?;
        let mut out = FusionElement::zero();
        out.genuine = product.genuine;
        out.via_composition_factors = product.via_composition_factors;
        for (label, m) in product.terms() {
            // every output of a liftable fusion lifts: typical outputs stay
            // in the dual lattice because k and the inputs lie in it
            let lifted = ExtLabel::new(&self.level, label.clone())?;
            out.add_term(lifted, m);
        }
        Ok(out)
    }
}

fn reduce_mod1(x: &Rat) -> Rat {
    x - x.floor()
}
