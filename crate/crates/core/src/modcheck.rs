//! Numerical verification of the modular claims: theta and standard-character
//! S-transforms, the weight-one sector S-transform and T-phases, the
//! partial-theta resummation lemma, short exact sequences, spectral-flow
//! identities, and the two-route character equalities.
//!
//! Numeric kinds evaluate the left side at `-1/tau` and the weighted right
//! side at `tau` with the stated prefactor; symbolic kinds compare exact
//! series and report residual 0 or the first differing exponent.

use std::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::json;

use crate::affine::{
    centered_window, irr_weighted_char, AffineKind, AffineLabel, IrrRoute, Level,
};
use crate::coset::{Coset, CosetError, CosetKind, CosetLabel, Route};
use crate::extension::{Extension, ExtensionError, SMatrixKind};
use crate::precision::{Arith, Cplx};
use crate::qseries::{eval_with, rat, rat_int, QSeries, QSeriesError, Rat, Tau};

#[derive(Debug, thiserror::Error)]
pub enum ModCheckError {
    #[error(transparent)]
    Series(#[from] QSeriesError),
    #[error(transparent)]
    Coset(#[from] CosetError),
    #[error(transparent)]
    Extension(#[from] ExtensionError),
    #[error("affine character error: {0}")]
    Affine(String),
    #[error("truncation tail budget {tail:.3e} exceeds the tolerance {tol:.3e}; raise the order")]
    InsufficientTruncation { tail: f64, tol: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CheckKind {
    ThetaS,
    StdS,
    GammaS,
    TPhase,
    LemmaA,
    Resolutions,
    TwistRules,
    TwoRoute,
}

impl CheckKind {
    pub fn all() -> [CheckKind; 8] {
        [
            CheckKind::ThetaS,
            CheckKind::StdS,
            CheckKind::GammaS,
            CheckKind::TPhase,
            CheckKind::LemmaA,
            CheckKind::Resolutions,
            CheckKind::TwistRules,
            CheckKind::TwoRoute,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::ThetaS => "theta-s",
            CheckKind::StdS => "std-s",
            CheckKind::GammaS => "gamma-s",
            CheckKind::TPhase => "t",
            CheckKind::LemmaA => "lemma",
            CheckKind::Resolutions => "resolutions",
            CheckKind::TwistRules => "twistrules",
            CheckKind::TwoRoute => "two-route",
        }
    }

    pub fn parse(s: &str) -> Option<CheckKind> {
        Self::all().into_iter().find(|k| k.name() == s)
    }

    /// Numeric kinds compare floating evaluations; the rest compare exact
    /// series.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            CheckKind::ThetaS | CheckKind::StdS | CheckKind::GammaS | CheckKind::TPhase
        )
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct CheckParams {
    pub level: Level,
    pub taus: Vec<Tau>,
    pub n: Rat,
    pub digits: u32,
    pub tol: f64,
}

impl CheckParams {
    /// Acceptance-grade defaults: `tau` in `{i, -2/5 + 9i/10}`, order 60,
    /// 80 digits, tolerance 1e-20.
    pub fn new(level: Level) -> Self {
        CheckParams {
            level,
            taus: vec![Tau::i(), Tau::new(rat(-2, 5), rat(9, 10))],
            n: rat_int(60),
            digits: 80,
            tol: 1e-20,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub check: String,
    pub level: (u32, u32),
    pub taus: Vec<String>,
    pub order: Rat,
    pub digits: u32,
    pub identities: usize,
    pub residual: f64,
    pub tail_budget: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: Option<String>,
}

impl CheckReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "check": self.check,
            "u": self.level.0,
            "v": self.level.1,
            "taus": self.taus,
            "order": self.order.to_string(),
            "digits": self.digits,
            "identities": self.identities,
            "residual": format!("{:.3e}", self.residual),
            "tail_budget": format!("{:.3e}", self.tail_budget),
            "tolerance": format!("{:.3e}", self.tolerance),
            "pass": self.pass,
            "detail": self.detail,
        })
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (u,v)=({},{}) N={} digits={} identities={} residual={:.3e} tail={:.3e} tol={:.3e} {}",
            self.check,
            self.level.0,
            self.level.1,
            self.order,
            self.digits,
            self.identities,
            self.residual,
            self.tail_budget,
            self.tolerance,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

/// Run one verification kind.
pub fn verify(kind: CheckKind, params: &CheckParams) -> Result<CheckReport, ModCheckError> {
    if kind.is_numeric() {
        for tau in &params.taus {
            if !tau.im.is_positive() {
                return Err(QSeriesError::NonconvergentEvaluation.into());
            }
        }
    }
    let (identities, residual, tail, detail) = match kind {
        CheckKind::ThetaS => check_theta_s(params)?,
        CheckKind::StdS => check_std_s(params)?,
        CheckKind::GammaS => check_gamma_s(params)?,
        CheckKind::TPhase => check_t_phase(params)?,
        CheckKind::LemmaA => check_lemma_a(params)?,
        CheckKind::Resolutions => check_resolutions(params)?,
        CheckKind::TwistRules => check_twistrules(params)?,
        CheckKind::TwoRoute => check_two_route(params)?,
    };
    if kind.is_numeric() && tail > params.tol {
        return Err(ModCheckError::InsufficientTruncation {
            tail,
            tol: params.tol,
        });
    }
    Ok(CheckReport {
        check: kind.name().to_string(),
        level: (params.level.u(), params.level.v()),
        taus: params.taus.iter().map(|t| t.to_string()).collect(),
        order: params.n.clone(),
        digits: params.digits,
        identities,
        residual,
        tail_budget: tail,
        tolerance: params.tol,
        pass: residual <= params.tol + tail,
        detail,
    })
}

/// Run every kind, aggregated in a fixed order.
pub fn verify_all(params: &CheckParams) -> Result<Vec<CheckReport>, ModCheckError> {
    CheckKind::all()
        .into_iter()
        .map(|k| verify(k, params))
        .collect()
}

/// `(standard_count, gamma_dim_bound, total)`: `p(u-1)(v-1)` standard
/// characters plus twice the weight-one spanning-set bound.
pub fn rep_dimension_report(level: &Level) -> (u64, u64, u64) {
    let e = Extension::new(*level);
    let standard = level.p() as u64 * (level.u() as u64 - 1) * (level.v() as u64 - 1);
    let bound = e.dim_bound();
    (standard, bound, standard + 2 * bound)
}

// ---- numeric checks ---------------------------------------------------------

struct NumericAcc {
    residual: f64,
    tail: f64,
    identities: usize,
}

impl NumericAcc {
    fn new() -> Self {
        NumericAcc {
            residual: 0.0,
            tail: 0.0,
            identities: 0,
        }
    }

    fn record(&mut self, ar: &Arith, lhs: &Cplx, rhs: &Cplx, tail: f64) {
        let diff = ar.to_f64(&ar.cabs(&ar.csub(lhs, rhs)));
        self.residual = self.residual.max(diff);
        self.tail = self.tail.max(tail);
        self.identities += 1;
    }
}

/// `-i*tau` as a complex number.
fn minus_i_tau(ar: &Arith, tau: &Tau) -> Cplx {
    Cplx {
        re: ar.from_rat(&tau.im),
        im: ar.from_rat(&(-tau.re.clone())),
    }
}

fn eval_and_tail(ar: &Arith, s: &QSeries, tau: &Tau) -> (Cplx, f64) {
    let v = eval_with(ar, s, tau);
    let im = tau.im.to_f64().unwrap_or(f64::NAN);
    let order = s.order().to_f64().unwrap_or(f64::NAN);
    let log_q = -2.0 * std::f64::consts::PI * im;
    let qn = (order * log_q).exp();
    let q_step = (log_q / s.denom().max(1) as f64).exp();
    let max_coeff = s
        .terms()
        .map(|(_, c)| c.to_f64().map(f64::abs).unwrap_or(f64::INFINITY))
        .fold(1.0_f64, f64::max);
    (v, (qn / (1.0 - q_step) * max_coeff).max(0.0))
}

fn check_theta_s(params: &CheckParams) -> Result<(usize, f64, f64, Option<String>), ModCheckError> {
    let ar = Arith::with_digits(params.digits);
    let ext = Extension::new(params.level);
    let p = params.level.p() as i64;
    let v = params.level.v() as i64;
    let styp = ext.smatrix(SMatrixKind::Typ, &ar);
    let mut acc = NumericAcc::new();
    let thetas: Vec<QSeries> = (0..=p)
        .map(|l| ext.theta(&rat(l, v), &params.n, false))
        .collect();
    for tau in &params.taus {
        let tau_s = tau.s_transform();
        let prefactor = ar.csqrt(&minus_i_tau(&ar, tau));
        let at_tau: Vec<(Cplx, f64)> = thetas.iter().map(|t| eval_and_tail(&ar, t, tau)).collect();
        for m in 0..=p {
            let (lhs, tail_l) = eval_and_tail(&ar, &thetas[m as usize], &tau_s);
            let mut rhs = ar.czero();
            let mut tail_r = 0.0;
            for l in 0..=p {
                let (val, tl) = &at_tau[l as usize];
                rhs = ar.cadd(&rhs, &ar.cscale(&styp.entries[m as usize][l as usize], val));
                tail_r += tl;
            }
            rhs = ar.cmul(&prefactor, &rhs);
            acc.record(&ar, &lhs, &rhs, tail_l + 2.0 * tail_r);
        }
    }
    Ok((acc.identities, acc.residual, acc.tail, None))
}

fn check_std_s(params: &CheckParams) -> Result<(usize, f64, f64, Option<String>), ModCheckError> {
    let ar = Arith::with_digits(params.digits);
    let ext = Extension::new(params.level);
    let mm = params.level.minmod();
    let p = params.level.p() as i64;
    let v = params.level.v() as i64;
    let kac = mm.kac_table();
    let styp = ext.smatrix(SMatrixKind::Typ, &ar);
    let (_, svir) = mm.s_matrix(&ar);
    // all standard characters ch B(E_{l/v; r', s'})
    let chars: Vec<Vec<QSeries>> = kac
        .iter()
        .map(|rs| {
            (0..=p)
                .map(|l| {
                    ext.std_char(&rat(l, v), rs.r, rs.s, &params.n)
                        .expect("dual-lattice weights lift")
                })
                .collect()
        })
        .collect();
    let mut acc = NumericAcc::new();
    for tau in &params.taus {
        let tau_s = tau.s_transform();
        let at_tau: Vec<Vec<(Cplx, f64)>> = chars
            .iter()
            .map(|row| row.iter().map(|c| eval_and_tail(&ar, c, tau)).collect())
            .collect();
        for (i, _) in kac.iter().enumerate() {
            for m in 0..=p {
                let (lhs, tail_l) = eval_and_tail(&ar, &chars[i][m as usize], &tau_s);
                let mut rhs = ar.czero();
                let mut tail_r = 0.0;
                for (j, _) in kac.iter().enumerate() {
                    for l in 0..=p {
                        let weight = ar.mul(&svir[i][j], &styp.entries[m as usize][l as usize]);
                        let (val, tl) = &at_tau[j][l as usize];
                        rhs = ar.cadd(&rhs, &ar.cscale(&weight, val));
                        tail_r += tl;
                    }
                }
                acc.record(&ar, &lhs, &rhs, tail_l + 2.0 * tail_r);
            }
        }
    }
    Ok((acc.identities, acc.residual, acc.tail, None))
}

fn check_gamma_s(params: &CheckParams) -> Result<(usize, f64, f64, Option<String>), ModCheckError> {
    let ar = Arith::with_digits(params.digits);
    let ext = Extension::new(params.level);
    let bk = ext.basis_bk();
    let sgamma = ext.smatrix(SMatrixKind::Gamma, &ar);
    let gammas: Vec<QSeries> = bk
        .iter()
        .map(|b| ext.gamma(&rat_int(b.mu as i64), b.r, &params.n))
        .collect::<Result<_, _>>()?;
    let mut acc = NumericAcc::new();
    for tau in &params.taus {
        let tau_s = tau.s_transform();
        let prefactor = minus_i_tau(&ar, tau);
        let at_tau: Vec<(Cplx, f64)> = gammas.iter().map(|g| eval_and_tail(&ar, g, tau)).collect();
        for (i, _) in bk.iter().enumerate() {
            let (lhs, tail_l) = eval_and_tail(&ar, &gammas[i], &tau_s);
            let mut rhs = ar.czero();
            let mut tail_r = 0.0;
            for (j, _) in bk.iter().enumerate() {
                let (val, tl) = &at_tau[j];
                rhs = ar.cadd(&rhs, &ar.cscale(&sgamma.entries[i][j], val));
                tail_r += tl;
            }
            rhs = ar.cmul(&prefactor, &rhs);
            acc.record(&ar, &lhs, &rhs, tail_l + 2.0 * tail_r);
        }
    }
    Ok((acc.identities, acc.residual, acc.tail, None))
}

fn check_t_phase(params: &CheckParams) -> Result<(usize, f64, f64, Option<String>), ModCheckError> {
    let ar = Arith::with_digits(params.digits);
    let ext = Extension::new(params.level);
    let mut acc = NumericAcc::new();
    for index in ext.basis_bk() {
        // exact congruence of every exponent is asserted inside
        let phase_exp = ext.t_phase_gamma(&index)?;
        let gamma = ext.gamma(&rat_int(index.mu as i64), index.r, &params.n)?;
        let phase = ar.q_power(&Rat::one(), &Rat::zero(), &phase_exp);
        for tau in &params.taus {
            let (at_tau, tail) = eval_and_tail(&ar, &gamma, tau);
            let (at_shift, tail2) = eval_and_tail(&ar, &gamma, &tau.t_shift());
            let rhs = ar.cmul(&phase, &at_tau);
            acc.record(&ar, &at_shift, &rhs, tail + tail2);
        }
    }
    Ok((acc.identities, acc.residual, acc.tail, None))
}

// ---- symbolic checks ---------------------------------------------------------

struct SymbolicAcc {
    identities: usize,
    failures: usize,
    first: Option<String>,
}

impl SymbolicAcc {
    fn new() -> Self {
        SymbolicAcc {
            identities: 0,
            failures: 0,
            first: None,
        }
    }

    fn record(&mut self, lhs: &QSeries, rhs: &QSeries, n: &Rat, what: impl Fn() -> String) {
        self.identities += 1;
        if !lhs.eq_to_order(rhs, n) {
            self.failures += 1;
            if self.first.is_none() {
                let at = lhs
                    .first_difference(rhs)
                    .map(|e| format!(" (first difference at q^{e})"))
                    .unwrap_or_default();
                self.first = Some(format!("{}{}", what(), at));
            }
        }
    }

    fn finish(self) -> (usize, f64, f64, Option<String>) {
        let residual = if self.failures == 0 { 0.0 } else { f64::INFINITY };
        let detail = self.first.map(|f| {
            format!(
                "{} of {} identities failed; first: {f}",
                self.failures, self.identities
            )
        });
        (self.identities, residual, 0.0, detail)
    }
}

fn check_lemma_a(params: &CheckParams) -> Result<(usize, f64, f64, Option<String>), ModCheckError> {
    let ext = Extension::new(params.level);
    let (v, w) = (params.level.v() as i64, params.level.w() as i64);
    let mut acc = SymbolicAcc::new();
    let mut i = -4 * w * v;
    while i <= 4 * w * v {
        let lambda = rat(i, v);
        let primary = ext.a_series(&lambda, &params.n, Route::Primary);
        let resummed = ext.a_series(&lambda, &params.n, Route::Crosscheck);
        acc.record(&primary, &resummed, &params.n, || {
            format!("A at lambda={lambda}")
        });
        i += 1;
    }
    Ok(acc.finish())
}

fn check_resolutions(
    params: &CheckParams,
) -> Result<(usize, f64, f64, Option<String>), ModCheckError> {
    let level = params.level;
    let coset = Coset::new(level);
    let (u, v) = (level.u(), level.v());
    let mut acc = SymbolicAcc::new();
    let mut labels = Vec::new();
    for r in 1..u {
        for s in 1..v {
            for plus in [true, false] {
                let base = if plus {
                    level.lambda(r as i64, s as i64)
                } else {
                    level.lambda(u as i64 - r as i64, v as i64 - s as i64)
                };
                let mut m = ((-rat_int(6) - &base) / rat_int(2)).ceil();
                loop {
                    let mu = &base + rat_int(2) * &m;
                    if mu > rat_int(6) {
                        break;
                    }
                    let kind = if plus {
                        CosetKind::EStdPlus { mu, r, s }
                    } else {
                        CosetKind::EStdMinus { mu, r, s }
                    };
                    labels.push(CosetLabel::new(&level, kind)?);
                    m += rat_int(1);
                }
            }
        }
    }
    for label in labels {
        let factors = coset.composition_factors(&label);
        let n = factors
            .terms()
            .map(|(f, _)| coset.ground_exponent(f))
            .chain([coset.ground_exponent(&label), params.n.clone()])
            .max()
            .unwrap();
        let lhs = coset.character(&label, &n, Route::Primary)?;
        let mut rhs = QSeries::zero(n.clone());
        for (f, m) in factors.terms() {
            rhs = rhs.add(&coset.character(f, &n, Route::Primary)?.scale(&rat_int(m)));
        }
        acc.record(&lhs, &rhs, &n, || format!("short exact sequence at {label}"));
    }
    Ok(acc.finish())
}

fn check_twistrules(
    params: &CheckParams,
) -> Result<(usize, f64, f64, Option<String>), ModCheckError> {
    let level = params.level;
    let (u, v) = (level.u(), level.v());
    let mut acc = SymbolicAcc::new();
    let n = &params.n;
    let aff = |e: crate::affine::AffineError| ModCheckError::Affine(e.to_string());
    let flow_slack = |window: &[Rat]| {
        window
            .iter()
            .map(|x| x.abs())
            .max()
            .unwrap_or_else(Rat::zero)
            / rat_int(2)
            + rat_int(2)
    };
    for r in 1..u {
        // sigma L_r = D^+_{u-r, v-1}
        let l_label = AffineLabel::new(&level, AffineKind::L { r }, 0).map_err(aff)?;
        let d_label =
            AffineLabel::new(&level, AffineKind::DPlus { r: u - r, s: v - 1 }, 0).map_err(aff)?;
        let window = centered_window(&level.lambda(u as i64 - r as i64, v as i64 - 1), 9);
        let pre: Vec<Rat> = window.iter().map(|x| x - level.k()).collect();
        let lhs = irr_weighted_char(
            &level,
            &l_label,
            &pre,
            &(n + flow_slack(&pre)),
            IrrRoute::Decomposition,
        )
        .map_err(aff)?
        .spectral_flow(1);
        let rhs =
            irr_weighted_char(&level, &d_label, &window, n, IrrRoute::Decomposition).map_err(aff)?;
        for nu in &window {
            let a = lhs.component(nu).expect("window in support");
            let b = rhs.component(nu).expect("window in support");
            acc.record(a, b, n, || {
                format!("sigma L_{r} vs D+[{},{}] at {nu}", u - r, v - 1)
            });
        }
        // sigma^{-1} L_r = D^-_{u-r, v-1}
        let dm_label =
            AffineLabel::new(&level, AffineKind::DMinus { r: u - r, s: v - 1 }, 0).map_err(aff)?;
        let window_m: Vec<Rat> = window.iter().map(|x| -x.clone()).collect();
        let pre: Vec<Rat> = window_m.iter().map(|x| x + level.k()).collect();
        let lhs = irr_weighted_char(
            &level,
            &l_label,
            &pre,
            &(n + flow_slack(&pre)),
            IrrRoute::Decomposition,
        )
        .map_err(aff)?
        .spectral_flow(-1);
        let rhs = irr_weighted_char(&level, &dm_label, &window_m, n, IrrRoute::Decomposition)
            .map_err(aff)?;
        for nu in &window_m {
            let a = lhs.component(nu).expect("window in support");
            let b = rhs.component(nu).expect("window in support");
            acc.record(a, b, n, || {
                format!("sigma^-1 L_{r} vs D-[{},{}] at {nu}", u - r, v - 1)
            });
        }
        // sigma^{-1} D^+_{r,s} = D^-_{u-r, v-1-s} for s <= v-2
        for s in 1..=(v.saturating_sub(2)) {
            let dp = AffineLabel::new(&level, AffineKind::DPlus { r, s }, 0).map_err(aff)?;
            let dm = AffineLabel::new(
                &level,
                AffineKind::DMinus {
                    r: u - r,
                    s: v - 1 - s,
                },
                0,
            )
            .map_err(aff)?;
            let base = level.lambda(r as i64, s as i64 + 1);
            let window = centered_window(&base, 9);
            let pre: Vec<Rat> = window.iter().map(|x| x + level.k()).collect();
            let lhs = irr_weighted_char(
                &level,
                &dp,
                &pre,
                &(n + flow_slack(&pre)),
                IrrRoute::Decomposition,
            )
            .map_err(aff)?
            .spectral_flow(-1);
            let rhs =
                irr_weighted_char(&level, &dm, &window, n, IrrRoute::Decomposition).map_err(aff)?;
            for nu in &window {
                let a = lhs.component(nu).expect("window in support");
                let b = rhs.component(nu).expect("window in support");
                acc.record(a, b, n, || {
                    format!(
                        "sigma^-1 D+[{r},{s}] vs D-[{},{}] at {nu}",
                        u - r,
                        v - 1 - s
                    )
                });
            }
        }
    }
    Ok(acc.finish())
}

fn check_two_route(
    params: &CheckParams,
) -> Result<(usize, f64, f64, Option<String>), ModCheckError> {
    let ext = Extension::new(params.level);
    let mut acc = SymbolicAcc::new();
    for label in ext.enumerate_modules() {
        let theta_route = ext.character(&label, &params.n, Route::Primary)?;
        let coset_sum = ext.character(&label, &params.n, Route::Crosscheck)?;
        acc.record(&theta_route, &coset_sum, &params.n, || format!("{label}"));
    }
    Ok(acc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_params(u: u32, v: u32, n: i64, digits: u32, tol: f64) -> CheckParams {
        CheckParams {
            level: Level::new(u, v).unwrap(),
            taus: vec![Tau::i(), Tau::new(rat(-2, 5), rat(9, 10))],
            n: rat_int(n),
            digits,
            tol,
        }
    }

    #[test]
    fn rep_dimension_reports() {
        let l = Level::new(4, 3).unwrap();
        assert_eq!(rep_dimension_report(&l), (36, 3, 42));
        let l = Level::new(3, 2).unwrap();
        assert_eq!(rep_dimension_report(&l), (4, 1, 6));
        // total - standard_count is even by construction
        for (u, v) in [(2u32, 3u32), (5, 3), (3, 4)] {
            let l = Level::new(u, v).unwrap();
            let (s, _, t) = rep_dimension_report(&l);
            assert_eq!((t - s) % 2, 0);
        }
    }

    #[test]
    fn theta_s_small_level() {
        let params = quick_params(3, 2, 40, 45, 1e-25);
        let report = verify(CheckKind::ThetaS, &params).unwrap();
        assert!(report.pass, "{report}");
        assert!(report.residual < 1e-25, "{report}");
    }

    #[test]
    fn gamma_s_and_t_phase_small_level() {
        let params = quick_params(3, 2, 40, 45, 1e-25);
        let report = verify(CheckKind::GammaS, &params).unwrap();
        assert!(report.pass, "{report}");
        let report = verify(CheckKind::TPhase, &params).unwrap();
        assert!(report.pass, "{report}");
        assert!(report.residual < 1e-30, "{report}");
    }

    #[test]
    fn std_s_small_level() {
        let params = quick_params(3, 2, 40, 45, 1e-25);
        let report = verify(CheckKind::StdS, &params).unwrap();
        assert!(report.pass, "{report}");
    }

    #[test]
    fn symbolic_kinds_small_level() {
        let mut params = quick_params(4, 3, 16, 30, 1e-12);
        params.taus = vec![Tau::i()];
        for kind in [
            CheckKind::LemmaA,
            CheckKind::Resolutions,
            CheckKind::TwistRules,
            CheckKind::TwoRoute,
        ] {
            let report = verify(kind, &params).unwrap();
            assert!(report.pass, "{report} :: {:?}", report.detail);
            assert_eq!(report.residual, 0.0);
            assert!(report.identities > 0);
        }
    }

    #[test]
    fn insufficient_truncation_is_reported() {
        let mut params = quick_params(3, 2, 2, 30, 1e-25);
        params.taus = vec![Tau::new(rat(0, 1), rat(1, 10))];
        let err = verify(CheckKind::ThetaS, &params).unwrap_err();
        assert!(matches!(err, ModCheckError::InsufficientTruncation { .. }));
    }

    #[test]
    fn nonconvergent_tau_rejected() {
        let mut params = quick_params(3, 2, 10, 30, 1e-10);
        params.taus = vec![Tau::new(Rat::zero(), -Rat::one())];
        let err = verify(CheckKind::ThetaS, &params).unwrap_err();
        assert!(matches!(
            err,
            ModCheckError::Series(QSeriesError::NonconvergentEvaluation)
        ));
    }
}
