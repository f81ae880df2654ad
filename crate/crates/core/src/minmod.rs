//! Virasoro minimal model `M(u,v)` data: Kac table, conformal weights,
//! irreducible characters, fusion coefficients and the modular S-matrix.

use std::collections::BTreeMap;

use astro_float::BigFloat;
use num_integer::Integer;
use serde_json::json;

use crate::precision::Arith;
use crate::qseries::{eta_inverse, rat, rat_int, QSeries, Rat};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MinModError {
    #[error("invalid minimal model data (u, v) = ({u}, {v}): need coprime integers >= 2")]
    BadModel { u: u32, v: u32 },
    #[error("Kac label (r, s) = ({r}, {s}) outside the (u, v) = ({u}, {v}) table")]
    OutOfKacTable { r: i64, s: i64, u: u32, v: u32 },
}

/// A canonical Kac label.  Of the identified pair `(r,s) ~ (u-r, v-s)` the
/// member with `v r - u s > 0` is stored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KacLabel {
    pub r: u32,
    pub s: u32,
}

impl std::fmt::Display for KacLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.r, self.s)
    }
}

/// The Virasoro minimal model `M(u,v)`, `u, v >= 2` coprime.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MinimalModel {
    u: u32,
    v: u32,
}

impl MinimalModel {
    pub fn new(u: u32, v: u32) -> Result<Self, MinModError> {
        if u < 2 || v < 2 || u.gcd(&v) != 1 {
            return Err(MinModError::BadModel { u, v });
        }
        Ok(MinimalModel { u, v })
    }

    pub fn u(&self) -> u32 {
        self.u
    }

    pub fn v(&self) -> u32 {
        self.v
    }

    /// Central charge `1 - 6 (v-u)^2 / uv`.
    pub fn central_charge(&self) -> Rat {
        let (u, v) = (self.u as i64, self.v as i64);
        rat_int(1) - rat(6 * (v - u) * (v - u), u * v)
    }

    fn in_table(&self, r: i64, s: i64) -> bool {
        r >= 1 && r <= self.u as i64 - 1 && s >= 1 && s <= self.v as i64 - 1
    }

    fn check(&self, r: i64, s: i64) -> Result<(), MinModError> {
        if self.in_table(r, s) {
            Ok(())
        } else {
            Err(MinModError::OutOfKacTable {
                r,
                s,
                u: self.u,
                v: self.v,
            })
        }
    }

    /// Canonical representative of the class of `(r, s)` under
    /// `(r,s) ~ (u-r, v-s)`.
    pub fn kac_canonical(&self, r: i64, s: i64) -> Result<KacLabel, MinModError> {
        self.check(r, s)?;
        let (u, v) = (self.u as i64, self.v as i64);
        // no ties: gcd(u,v) = 1 forces vr != us inside the table
        if v * r - u * s > 0 {
            Ok(KacLabel {
                r: r as u32,
                s: s as u32,
            })
        } else {
            Ok(KacLabel {
                r: (u - r) as u32,
                s: (v - s) as u32,
            })
        }
    }

    /// All canonical labels, sorted.
    pub fn kac_table(&self) -> Vec<KacLabel> {
        let mut out = Vec::new();
        for r in 1..self.u as i64 {
            for s in 1..self.v as i64 {
                if self.v as i64 * r - self.u as i64 * s > 0 {
                    out.push(KacLabel {
                        r: r as u32,
                        s: s as u32,
                    });
                }
            }
        }
        out.sort();
        out
    }

    /// Conformal weight `h_{r,s} = ((vr - us)^2 - (v-u)^2) / 4uv`.
    pub fn h(&self, r: i64, s: i64) -> Result<Rat, MinModError> {
        self.check(r, s)?;
        let (u, v) = (self.u as i64, self.v as i64);
        let d = v * r - u * s;
        Ok(rat(d * d - (v - u) * (v - u), 4 * u * v))
    }

    /// Irreducible character
    /// `(1/eta) sum_n [q^{(2uvn + vr - us)^2/4uv} - q^{(2uvn + vr + us)^2/4uv}]`,
    /// exact to order `n`.
    pub fn min_char(&self, r: i64, s: i64, n: &Rat) -> Result<QSeries, MinModError> {
        self.check(r, s)?;
        let build = n + rat_int(1);
        let theta_part = self.char_numerator(r, s, &build);
        let inv = eta_inverse(&build);
        Ok(theta_part.mul(&inv).truncate(n))
    }

    /// The alternating theta-type numerator `eta * chi_{r,s}`.
    pub(crate) fn char_numerator(&self, r: i64, s: i64, build: &Rat) -> QSeries {
        let (u, v) = (self.u as i64, self.v as i64);
        let mut terms = Vec::new();
        for (root, coeff) in [(v * r - u * s, 1i64), (v * r + u * s, -1i64)] {
            let mut m: i64 = 0;
            loop {
                let mut hit = false;
                for mm in [m, -m] {
                    let a = 2 * u * v * mm + root;
                    let e = rat(a * a, 4 * u * v);
                    if &e <= build {
                        hit = true;
                        terms.push((e, rat_int(coeff)));
                    }
                    if mm == 0 {
                        break;
                    }
                }
                if !hit && m > 0 {
                    break;
                }
                m += 1;
            }
        }
        QSeries::from_terms(terms, build.clone())
    }

    /// Rectangle-rule (BPZ) fusion outputs of `(r,s) x (r',s')` with unit
    /// coefficients, before any Kac identification.  Empty for labels outside
    /// the table.
    pub(crate) fn rect_outputs(&self, a: (i64, i64), b: (i64, i64)) -> Vec<(i64, i64)> {
        let (u, v) = (self.u as i64, self.v as i64);
        if !self.in_table(a.0, a.1) || !self.in_table(b.0, b.1) {
            return Vec::new();
        }
        let rmax = (a.0 + b.0 - 1).min(2 * u - 1 - a.0 - b.0);
        let smax = (a.1 + b.1 - 1).min(2 * v - 1 - a.1 - b.1);
        let mut out = Vec::new();
        let mut r = (a.0 - b.0).abs() + 1;
        while r <= rmax {
            let mut s = (a.1 - b.1).abs() + 1;
            while s <= smax {
                out.push((r, s));
                s += 2;
            }
            r += 2;
        }
        out
    }

    /// Fusion coefficients of `(r,s) x (r',s')`, canonicalized: the rectangle
    /// rule with multiplicities accumulated over the Kac identification.
    pub fn fusion_coeffs(
        &self,
        a: (i64, i64),
        b: (i64, i64),
    ) -> Result<BTreeMap<KacLabel, u64>, MinModError> {
        self.check(a.0, a.1)?;
        self.check(b.0, b.1)?;
        let mut out = BTreeMap::new();
        for (r, s) in self.rect_outputs(a, b) {
            let label = self.kac_canonical(r, s)?;
            *out.entry(label).or_insert(0) += 1;
        }
        Ok(out)
    }

    /// Modular S-matrix entry
    /// `-2 sqrt(2/uv) (-1)^{rs' + r's} sin(v pi r r'/u) sin(u pi s s'/v)`.
    pub fn s_vir(&self, a: (i64, i64), b: (i64, i64), ar: &Arith) -> Result<BigFloat, MinModError> {
        self.check(a.0, a.1)?;
        self.check(b.0, b.1)?;
        let (u, v) = (self.u as i64, self.v as i64);
        let norm = ar.sqrt(&ar.from_rat(&rat(2, u * v)));
        let sign = if (a.0 * b.1 + b.0 * a.1) % 2 == 0 { -2 } else { 2 };
        let s1 = ar.sin_pi(&rat(v * a.0 * b.0, u));
        let s2 = ar.sin_pi(&rat(u * a.1 * b.1, v));
        let mut x = ar.mul(&norm, &s1);
        x = ar.mul(&x, &s2);
        Ok(ar.mul(&ar.from_i64(sign), &x))
    }

    /// Full S-matrix over the canonical table (rows and columns in
    /// `kac_table` order).
    pub fn s_matrix(&self, ar: &Arith) -> (Vec<KacLabel>, Vec<Vec<BigFloat>>) {
        let table = self.kac_table();
        let m = table
            .iter()
            .map(|a| {
                table
                    .iter()
                    .map(|b| {
                        self.s_vir(
                            (a.r as i64, a.s as i64),
                            (b.r as i64, b.s as i64),
                            ar,
                        )
                        .expect("canonical labels")
                    })
                    .collect()
            })
            .collect();
        (table, m)
    }

    /// Verlinde numbers `N_{ab}^c = sum_m S_{am} S_{bm} S_{cm} / S_{0m}` for
    /// every triple of canonical labels, from one S-matrix evaluation.
    pub fn verlinde_table(&self, ar: &Arith) -> (Vec<KacLabel>, Vec<Vec<Vec<BigFloat>>>) {
        let (table, s) = self.s_matrix(ar);
        let vac = self.kac_canonical(1, 1).expect("vacuum");
        let vac_idx = table.iter().position(|l| *l == vac).expect("vacuum in table");
        let n = table.len();
        let mut out = vec![vec![vec![ar.zero(); n]; n]; n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut acc = ar.zero();
                    for m in 0..n {
                        let t = ar.mul(&ar.mul(&s[a][m], &s[b][m]), &s[c][m]);
                        acc = ar.add(&acc, &ar.div(&t, &s[vac_idx][m]));
                    }
                    out[a][b][c] = acc;
                }
            }
        }
        (table, out)
    }

    /// Kac table with h values and the S-matrix, as JSON with decimal strings
    /// at the requested precision.
    pub fn kac_json(&self, digits: u32) -> serde_json::Value {
        let ar = Arith::with_digits(digits);
        let (table, s) = self.s_matrix(&ar);
        let labels: Vec<_> = table
            .iter()
            .map(|l| {
                json!({
                    "r": l.r,
                    "s": l.s,
                    "h": self.h(l.r as i64, l.s as i64).unwrap().to_string(),
                })
            })
            .collect();
        let rows: Vec<Vec<String>> = s
            .iter()
            .map(|row| row.iter().map(|x| ar.decimal_string(x, digits)).collect())
            .collect();
        json!({
            "u": self.u,
            "v": self.v,
            "central_charge": self.central_charge().to_string(),
            "labels": labels,
            "s_matrix": rows,
        })
    }
}
