//! Acceptance suite: one test per criterion, each printing a pass line
//! (visible with `cargo test --test acceptance -- --show-output`).
//!
//! Every tolerance is pinned here; nothing is deferred to calibration.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pfcoset_core::affine::Level;
use pfcoset_core::coset::{
    enumerate_families, parse_coset_label, Coset, CosetKind, CosetLabel, FamilyDescriptor, Route,
};
use pfcoset_core::extension::{ExtLabel, Extension};
use pfcoset_core::fusion::FusionElement;
use pfcoset_core::modcheck::{
    rep_dimension_report, verify, CheckKind, CheckParams, CheckReport,
};
use pfcoset_core::precision::Arith;
use pfcoset_core::qseries::{rat, rat_int, QSeries, Rat, Tau};

fn lvl(u: u32, v: u32) -> Level {
    Level::new(u, v).unwrap()
}

fn pass(criterion: u32, what: &str) {
    println!("criterion {criterion}: PASS - {what}");
}

fn acceptance_params(level: Level, n: i64, digits: u32, tol: f64) -> CheckParams {
    CheckParams {
        level,
        taus: vec![Tau::i(), Tau::new(rat(-2, 5), rat(9, 10))],
        n: rat_int(n),
        digits,
        tol,
    }
}

fn assert_pass(report: &CheckReport) {
    assert!(
        report.pass,
        "{report} :: {}",
        report.detail.as_deref().unwrap_or("")
    );
}

/// 1. k = -2/3 vacuum expansion to order 5, exact integer coefficients.
#[test]
fn criterion_1_vacuum_expansion() {
    let level = lvl(4, 3);
    let coset = Coset::new(level);
    let n = rat_int(6);
    let c0 = coset
        .character(&parse_coset_label(&level, "C[0;1]").unwrap(), &n, Route::Primary)
        .unwrap();
    let c3 = coset
        .character(&parse_coset_label(&level, "C[0;3]").unwrap(), &n, Route::Primary)
        .unwrap();
    let total = c0.add(&c3);
    // q^{5/48} (1 + q^{3/2} + q^2 + 2q^{5/2} + 2q^3 + 3q^{7/2} + 4q^4 + 5q^{9/2} + 6q^5)
    let expected = QSeries::from_terms(
        [
            (rat(0, 2), rat_int(1)),
            (rat(3, 2), rat_int(1)),
            (rat(4, 2), rat_int(1)),
            (rat(5, 2), rat_int(2)),
            (rat(6, 2), rat_int(2)),
            (rat(7, 2), rat_int(3)),
            (rat(8, 2), rat_int(4)),
            (rat(9, 2), rat_int(5)),
            (rat(10, 2), rat_int(6)),
        ]
        .map(|(e, c)| (e + rat(5, 48), c)),
        rat_int(5) + rat(5, 48),
    );
    assert!(
        total.eq_to_order(&expected, &(rat_int(5) + rat(5, 48))),
        "vacuum expansion mismatch: first difference {:?}",
        total.first_difference(&expected)
    );
    pass(1, "ch C[0;1] + ch C[0;3] at k=-2/3 matches the known expansion to order 5, exactly");
}

/// 2. Conformal-weight table: the twelve k = -2/3 labels (minimal weights
/// over the simple-current orbits of the extended modules), the k = -4/3
/// simple current, and the generic simple-current weight 1 + v/w.
#[test]
fn criterion_2_conformal_weights() {
    let level = lvl(4, 3);
    let ext = Extension::new(level);
    // the order-2 simple currents of the extension
    let group: Vec<ExtLabel> = ["C[0;1]", "C[0;3]", "C[2;1]", "C[2;3]"]
        .iter()
        .map(|s| ExtLabel::new(&level, parse_coset_label(&level, s).unwrap()).unwrap())
        .collect();
    let orbit_weight = |label: &str| -> Rat {
        let lifted =
            ExtLabel::new(&level, parse_coset_label(&level, label).unwrap()).unwrap();
        group
            .iter()
            .map(|g| {
                let image = ext.gr_fuse_ext(g, &lifted).unwrap();
                let single = image.as_single().expect("simple-current image").clone();
                ext.conformal_weight(&single)
            })
            .min()
            .unwrap()
    };
    let table = [
        ("C[0;1]", rat_int(0)),
        ("C[1;2]", rat(15, 16)),
        ("D[2/3;1,1]", rat(1, 2)),
        ("D[5/3;2,1]", rat(-1, 16)),
        ("E[0;1,1]", rat(-1, 6)),
        ("E[1/3;1,1]", rat(-1, 8)),
        ("E[1;1,1]", rat(5, 24)),
        ("E[5/3;1,1]", rat(-1, 8)),
        ("E[0;2,1]", rat(-5, 48)),
        ("E[2/3;2,1]", rat(1, 16)),
        ("E[1;2,1]", rat(13, 48)),
        ("E[4/3;2,1]", rat(1, 16)),
    ];
    for (label, expect) in table {
        assert_eq!(orbit_weight(label), expect, "table weight at {label}");
    }
    // the non-vacuum simple currents have ground spaces of dimensions
    // 1, 2, 2 at weights 3/2, 5/2, 3
    let level = lvl(4, 3);
    for (label, dim, weight) in [
        ("C[0;3]", 1i64, rat(3, 2)),
        ("C[2;1]", 2, rat(5, 2)),
        ("C[2;3]", 2, rat_int(3)),
    ] {
        let lifted = ExtLabel::new(&level, parse_coset_label(&level, label).unwrap()).unwrap();
        let exponent = &weight - level.c_tilde() / rat_int(24);
        let ch = ext
            .character(&lifted, &(&exponent + rat_int(2)), Route::Primary)
            .unwrap();
        let (lead, coeff) = ch.leading().unwrap();
        assert_eq!(lead, exponent, "ground exponent of B.{label}");
        assert_eq!(coeff, &rat_int(dim), "ground dimension of B.{label}");
    }
    // k = -4/3: Delta(C(4;1)) = 5
    let level = lvl(2, 3);
    let coset = Coset::new(level);
    assert_eq!(
        coset.conformal_weight(&parse_coset_label(&level, "C[4;1]").unwrap()),
        rat_int(5)
    );
    // generic: Delta(C(+-2;1)) = 1 + v/w for all admissible (u,v), u+v <= 20
    for u in 2u32..=18 {
        for v in 2u32..=18 {
            if u + v > 20 || u.gcd(&v) != 1 || u >= 2 * v {
                continue;
            }
            let level = lvl(u, v);
            let coset = Coset::new(level);
            for mu in [2i64, -2] {
                let label = CosetLabel::new(&level, CosetKind::C { mu: rat_int(mu), r: 1 }).unwrap();
                assert_eq!(
                    coset.conformal_weight(&label),
                    Rat::one() + rat(v as i64, level.w() as i64),
                    "C[{mu};1] at ({u},{v})"
                );
            }
        }
    }
    pass(2, "conformal-weight table reproduced exactly (twelve k=-2/3 values, C(4;1)=5 at k=-4/3, 1+v/w generically)");
}

/// 3. The partial-theta resummation identity, exact to order 60 for all
/// dual-lattice weights with |lambda| <= 4w at five levels.
#[test]
fn criterion_3_partial_theta_lemma() {
    for (u, v) in [(3u32, 2u32), (4, 3), (2, 3), (5, 3), (3, 4)] {
        let params = acceptance_params(lvl(u, v), 60, 30, 0.0);
        let report = verify(CheckKind::LemmaA, &params).unwrap();
        assert_pass(&report);
        assert_eq!(report.residual, 0.0, "exact identity at ({u},{v})");
    }
    pass(3, "A_lambda = 2*dtheta + (1 + lambda/w)*theta exactly to order 60, |lambda| <= 4w, five levels");
}

/// 4. Theta-route and coset-sum-route characters agree exactly to order 40
/// for every irreducible extended module of k = -1/2 and k = -2/3.
#[test]
fn criterion_4_character_cross_routes() {
    let mut counts = Vec::new();
    for (u, v) in [(3u32, 2u32), (4, 3)] {
        let params = acceptance_params(lvl(u, v), 40, 30, 0.0);
        let report = verify(CheckKind::TwoRoute, &params).unwrap();
        assert_pass(&report);
        counts.push(report.identities);
    }
    assert_eq!(counts, vec![4, 36], "full spectra covered");
    pass(4, "two-route character equality, exact to order 40, all 4 + 36 extended irreducibles");
}

/// 5. Short exact sequences (with the D-to-C rewriting) to order 40 for
/// |mu| <= 6 at five levels, and the spectral-flow character identities on
/// 9-weight windows.
#[test]
fn criterion_5_resolutions_and_twists() {
    for (u, v) in [(3u32, 2u32), (4, 3), (2, 3), (5, 3), (3, 4)] {
        let params = acceptance_params(lvl(u, v), 40, 30, 0.0);
        let report = verify(CheckKind::Resolutions, &params).unwrap();
        assert_pass(&report);
        let report = verify(CheckKind::TwistRules, &params).unwrap();
        assert_pass(&report);
    }
    pass(5, "short-exact-sequence additivity and spectral-flow identities, exact to order 40, five levels");
}

/// 6. Modularity: theta, standard and Gamma S-transforms with residuals
/// below 1e-20 (T-phases below 1e-30) at order 60 and 80 digits.
#[test]
fn criterion_6_modularity() {
    for (u, v) in [(3u32, 2u32), (4, 3), (2, 3)] {
        let params = acceptance_params(lvl(u, v), 60, 80, 1e-20);
        for kind in [CheckKind::ThetaS, CheckKind::StdS, CheckKind::GammaS] {
            let report = verify(kind, &params).unwrap();
            assert_pass(&report);
            assert!(
                report.residual < 1e-20,
                "{kind} residual {} at ({u},{v})",
                report.residual
            );
        }
        let report = verify(CheckKind::TPhase, &params).unwrap();
        assert_pass(&report);
        assert!(
            report.residual < 1e-30,
            "t-phase residual {} at ({u},{v})",
            report.residual
        );
    }
    pass(6, "theta-s/std-s/gamma-s residuals < 1e-20 and t-phase < 1e-30 at N=60, 80 digits, three levels");
}

/// 7. Counting: spanning-set enumeration vs closed form for u+v <= 30, the
/// known spectra at k = -2/3 and k = -1/2, and the representation
/// dimension reports.
#[test]
fn criterion_7_counting() {
    for u in 2u32..=28 {
        for v in 2u32..=28 {
            if u + v > 30 || u.gcd(&v) != 1 || u >= 2 * v {
                continue;
            }
            let ext = Extension::new(lvl(u, v));
            assert_eq!(ext.basis_bk().len() as u64, ext.dim_bound(), "B_k at ({u},{v})");
        }
    }
    // k = -2/3: (6, 6, 24)
    let ext = Extension::new(lvl(4, 3));
    let labels = ext.enumerate_modules();
    let count =
        |f: fn(&CosetKind) -> bool| labels.iter().filter(|l| f(l.coset().kind())).count();
    assert_eq!(
        (
            count(|k| matches!(k, CosetKind::C { .. })),
            count(|k| matches!(k, CosetKind::D { .. })),
            count(|k| matches!(k, CosetKind::ETyp { .. }))
        ),
        (6, 6, 24)
    );
    // k = -1/2: (2, 0, 2) with weights {0, 1, -1/8, 3/8}
    let ext = Extension::new(lvl(3, 2));
    let labels = ext.enumerate_modules();
    let count =
        |f: fn(&CosetKind) -> bool| labels.iter().filter(|l| f(l.coset().kind())).count();
    assert_eq!(
        (
            count(|k| matches!(k, CosetKind::C { .. })),
            count(|k| matches!(k, CosetKind::D { .. })),
            count(|k| matches!(k, CosetKind::ETyp { .. }))
        ),
        (2, 0, 2)
    );
    let mut weights: Vec<Rat> = labels.iter().map(|l| ext.conformal_weight(l)).collect();
    weights.sort();
    assert_eq!(
        weights,
        vec![rat(-1, 8), Rat::zero(), rat(3, 8), Rat::one()]
    );
    assert_eq!(rep_dimension_report(&lvl(4, 3)), (36, 3, 42));
    assert_eq!(rep_dimension_report(&lvl(3, 2)), (4, 1, 6));
    pass(7, "|B_k| = closed form for u+v <= 30; spectra (6,6,24) and (2,0,2) with weights {0,1,-1/8,3/8}; reports (36,3,42) and (4,1,6)");
}

fn random_coset_label(
    rng: &mut ChaCha8Rng,
    level: &Level,
    fams: &[FamilyDescriptor],
) -> CosetLabel {
    loop {
        let fam = &fams[rng.gen_range(0..fams.len())];
        let m = rng.gen_range(-3i64..=3);
        match fam {
            FamilyDescriptor::C { base, .. } | FamilyDescriptor::D { base, .. } => {
                return fam.instantiate(level, base + rat_int(2 * m)).unwrap();
            }
            FamilyDescriptor::ETyp { .. } => {
                let offset = rat(rng.gen_range(1i64..=23), 24);
                let mu = rat_int(2 * m) + offset;
                if fam.contains(&mu) {
                    return fam.instantiate(level, mu).unwrap();
                }
            }
        }
    }
}

/// 8. Fusion rings: minimal-model fusion equals Verlinde for uv <= 40,
/// the coset and extended rings are commutative, unit-respecting and
/// associative on 500 random canonical triples per level, and the k = -2/3
/// simple currents close as Z2 + Z2.
#[test]
fn criterion_8_fusion_rings() {
    // Verlinde integrality and agreement
    let ar = Arith::with_digits(30);
    for u in 2u32..=20 {
        for v in 2u32..=20 {
            if u * v > 40 || u.gcd(&v) != 1 {
                continue;
            }
            let m = pfcoset_core::minmod::MinimalModel::new(u, v).unwrap();
            let (table, nv) = m.verlinde_table(&ar);
            for (ia, a) in table.iter().enumerate() {
                for (ib, b) in table.iter().enumerate() {
                    let f = m
                        .fusion_coeffs((a.r as i64, a.s as i64), (b.r as i64, b.s as i64))
                        .unwrap();
                    for (ic, c) in table.iter().enumerate() {
                        let x = ar.to_f64(&nv[ia][ib][ic]);
                        assert!((x - x.round()).abs() < 1e-9, "integrality at M({u},{v})");
                        assert!(
                            (x - f.get(c).copied().unwrap_or(0) as f64).abs() < 1e-9,
                            "Verlinde match at M({u},{v})"
                        );
                    }
                }
            }
        }
    }
    // coset ring: commutative, unital, associative on random triples
    let mut rng = ChaCha8Rng::seed_from_u64(20260810);
    for (u, v) in [(3u32, 2u32), (4, 3), (2, 3)] {
        let level = lvl(u, v);
        let coset = Coset::new(level);
        let fams = enumerate_families(&level);
        let unit = CosetLabel::new(&level, CosetKind::C { mu: Rat::zero(), r: 1 }).unwrap();
        for trial in 0..500 {
            let a = random_coset_label(&mut rng, &level, &fams);
            let b = random_coset_label(&mut rng, &level, &fams);
            let c = random_coset_label(&mut rng, &level, &fams);
            let ab = coset.gr_fuse(&a, &b).unwrap();
            let ba = coset.gr_fuse(&b, &a).unwrap();
            assert_eq!(ab, ba, "commutativity at ({u},{v}) trial {trial}");
            let ua = coset.gr_fuse(&unit, &a).unwrap();
            assert_eq!(ua, FusionElement::from_label(a.clone()), "unit at ({u},{v})");
            let left = coset
                .gr_fuse_elements(&ab, &FusionElement::from_label(c.clone()))
                .unwrap();
            let bc = coset.gr_fuse(&b, &c).unwrap();
            let right = coset
                .gr_fuse_elements(&FusionElement::from_label(a.clone()), &bc)
                .unwrap();
            assert_eq!(
                left, right,
                "associativity failure at ({u},{v}): ({a} x {b}) x {c}"
            );
        }
        // extended ring on the finite spectrum
        let ext = Extension::new(level);
        let modules = ext.enumerate_modules();
        for trial in 0..500 {
            let a = &modules[rng.gen_range(0..modules.len())];
            let b = &modules[rng.gen_range(0..modules.len())];
            let c = &modules[rng.gen_range(0..modules.len())];
            let ab = ext.gr_fuse_ext(a, b).unwrap();
            assert_eq!(ab, ext.gr_fuse_ext(b, a).unwrap(), "ext commutativity");
            let mut left: FusionElement<ExtLabel> = FusionElement::zero();
            for (l, m) in ab.terms() {
                left.add_assign(&ext.gr_fuse_ext(l, c).unwrap().scaled(m));
            }
            let bc = ext.gr_fuse_ext(b, c).unwrap();
            let mut right: FusionElement<ExtLabel> = FusionElement::zero();
            for (l, m) in bc.terms() {
                right.add_assign(&ext.gr_fuse_ext(a, l).unwrap().scaled(m));
            }
            assert_eq!(
                left, right,
                "ext associativity failure at ({u},{v}) trial {trial}: ({a} x {b}) x {c}"
            );
        }
    }
    // k = -2/3 simple currents close as Z2 + Z2
    let level = lvl(4, 3);
    let ext = Extension::new(level);
    let group: Vec<ExtLabel> = ["C[0;1]", "C[0;3]", "C[2;1]", "C[2;3]"]
        .iter()
        .map(|s| ExtLabel::new(&level, parse_coset_label(&level, s).unwrap()).unwrap())
        .collect();
    let mut products: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (i, a) in group.iter().enumerate() {
        for (j, b) in group.iter().enumerate() {
            let f = ext.gr_fuse_ext(a, b).unwrap();
            let single = f.as_single().expect("group-like").clone();
            let idx = group.iter().position(|g| *g == single).expect("closure");
            products.insert((i, j), idx);
            if i == j {
                assert_eq!(idx, 0, "every element squares to the unit");
            }
        }
    }
    assert_eq!(products[&(1, 2)], 3, "Z2 + Z2 multiplication table");
    pass(8, "Verlinde = combinatorial fusion (uv <= 40); rings commutative/unital/associative on 500 random triples per level; Z2+Z2 closure");
}

/// 9. Every irreducible extended character decomposes exactly (order 40) as
/// its weight-one Gamma part plus a rational combination of standard
/// characters, computed against the independent coset-sum route; the
/// S-transforms of both sectors are the criterion-6 checks.
#[test]
fn criterion_9_sector_decomposition() {
    let n = rat_int(40);
    for (u, v) in [(3u32, 2u32), (4, 3), (2, 3)] {
        let level = lvl(u, v);
        let ext = Extension::new(level);
        for label in ext.enumerate_modules() {
            let (weight1, weight0) = ext.char_sectors(&label, &n).unwrap();
            let independent = ext.character(&label, &n, Route::Crosscheck).unwrap();
            let recombined = weight1.add(&weight0);
            assert!(
                independent.eq_to_order(&recombined, &n),
                "sector decomposition at {label} ({u},{v}): first difference {:?}",
                independent.first_difference(&recombined)
            );
            // typicals and standards carry no weight-one part
            if matches!(label.coset().kind(), CosetKind::ETyp { .. }) {
                assert!(weight1.is_zero());
            }
        }
    }
    pass(9, "irreducible characters = Gamma sector + standard combination, exact to order 40, against the coset-sum route");
}
