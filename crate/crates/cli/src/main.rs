//! `pfcoset`: command-line front end for the parafermion coset character
//! calculus — level data, module enumeration, exact characters, fusion
//! products, S-matrices and the modular verification harness.

use std::fmt::Write as _;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use pfcoset_core::affine::{
    centered_window, irr_weighted_char, parse_affine_label, std_weighted_char, AffineKind,
    AffineLabel, IrrRoute, Level, WeightedCharacter,
};
use pfcoset_core::coset::{
    enumerate_families, parse_coset_label, Coset, CosetKind, CosetLabel, Route,
};
use pfcoset_core::extension::{ExtLabel, Extension, SMatrixKind};
use pfcoset_core::modcheck::{rep_dimension_report, verify, CheckKind, CheckParams};
use pfcoset_core::precision::Arith;
use pfcoset_core::qseries::{rat, rat_int, QSeries, Rat, Tau};

#[derive(Parser)]
#[command(
    name = "pfcoset",
    version,
    about = "Exact q-series calculus for negative admissible-level sl(2) parafermion cosets"
)]
struct Cli {
    /// Admissibility datum u (level k = u/v - 2)
    #[arg(long, global = true, default_value_t = 4)]
    u: u32,
    /// Admissibility datum v
    #[arg(long, global = true, default_value_t = 3)]
    v: u32,
    /// Truncation order N (rational, e.g. "40" or "81/2")
    #[arg(long, global = true, default_value = "20")]
    order: String,
    /// Window size (number of h-weights) for affine characters
    #[arg(long, global = true, default_value_t = 9)]
    window: usize,
    /// Working precision in decimal digits
    #[arg(long, global = true, default_value_t = 80)]
    digits: u32,
    /// Evaluation point "re,im" (rational or decimal); repeatable
    #[arg(long = "tau", global = true, allow_hyphen_values = true)]
    taus: Vec<String>,
    /// Residual tolerance for the numeric checks
    #[arg(long, global = true, default_value_t = 1e-20)]
    tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Print the derived level data (k, t, w, p, central charges)
    Info,
    /// Kac table with conformal weights and the Virasoro S-matrix
    Kac,
    /// List the module families (coset) or the finite extended spectrum
    Enumerate {
        /// Coset families (the default)
        #[arg(long)]
        coset: bool,
        /// Finite list of extended modules
        #[arg(long)]
        extended: bool,
    },
    /// Exact character of a module label
    ///
    /// Coset labels: `C[mu;r]`, `D[mu;r,s]`, `E[mu;r,s]`, `Estd+[mu;r,s]`,
    /// `Estd-[mu;r,s]`.  Extended labels carry a `B.` prefix.  Affine labels
    /// (`sf^l(L[r])`, `sf^l(D+[r,s])`, `sf^l(E[lam;r,s])`, ...) produce a
    /// weight-graded character on `--window` weights.
    Char {
        label: String,
        /// Force the affine reading of an ambiguous E[..;r,s] label
        #[arg(long)]
        affine: bool,
        /// Use the cross-check route instead of the primary one
        #[arg(long)]
        crosscheck: bool,
    },
    /// Genuine fusion product (first factor a C-type or L-type label)
    Fuse { a: String, b: String },
    /// Grothendieck fusion product
    Gfuse { a: String, b: String },
    /// Lattice theta function theta_{mu+L}, or its derivative with --deriv
    Theta {
        mu: String,
        #[arg(long)]
        deriv: bool,
    },
    /// Weight-one part Gamma_{mu;r} of the atypical extended character
    Gamma { mu: String, r: u32 },
    /// Modular S-matrices
    Smatrix {
        #[arg(value_parser = ["typ", "theta", "vir", "gamma"])]
        kind: String,
    },
    /// The weight-one spanning set and its dimension bound
    Basis,
    /// Run the modular/identity verification suite
    Verify {
        #[arg(value_parser = [
            "theta-s", "std-s", "gamma-s", "t", "lemma", "resolutions",
            "twistrules", "two-route", "all",
        ])]
        kind: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    if let Ok(r) = Rat::from_str(s) {
        return Ok(r);
    }
    // decimal form like -0.4
    if let Some((int, frac)) = s.split_once('.') {
        let denom = 10i64.pow(frac.len() as u32);
        let sign = if int.trim_start().starts_with('-') { -1 } else { 1 };
        let int_part: i64 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse()?
        };
        let frac_part: i64 = if frac.is_empty() { 0 } else { frac.parse()? };
        return Ok(rat_int(int_part) + rat(sign * frac_part, denom));
    }
    bail!("cannot parse rational {s:?}")
}

fn parse_tau(s: &str) -> Result<Tau> {
    let (re, im) = s
        .split_once(',')
        .ok_or_else(|| anyhow!("tau must be re,im"))?;
    Ok(Tau::new(parse_rat(re)?, parse_rat(im)?))
}

fn series_out(s: &QSeries, format: Format) -> String {
    match format {
        Format::Text => format!("{s}\n"),
        Format::Json => format!("{}\n", s.to_json()),
        Format::Csv => {
            let mut out = String::from("exponent,coefficient\n");
            for (e, c) in s.terms() {
                let _ = writeln!(out, "{e},{c}");
            }
            out
        }
    }
}

fn weighted_out(ch: &WeightedCharacter, format: Format) -> String {
    match format {
        Format::Json => {
            let comps: serde_json::Map<String, serde_json::Value> = ch
                .components()
                .map(|(w, s)| (w.to_string(), s.to_json()))
                .collect();
            format!("{}\n", json!({ "flow": ch.flow, "components": comps }))
        }
        _ => {
            let mut out = String::new();
            for (w, s) in ch.components() {
                let _ = writeln!(out, "z^({w}): {s}");
            }
            out
        }
    }
}

enum AnyLabel {
    Coset(CosetLabel),
    Ext(ExtLabel),
    Affine(AffineLabel),
}

fn parse_any_label(level: &Level, text: &str, force_affine: bool) -> Result<AnyLabel> {
    let text = text.trim();
    if let Some(rest) = text.strip_prefix("B.") {
        let inner = parse_coset_label(level, rest)?;
        return Ok(AnyLabel::Ext(ExtLabel::new(level, inner)?));
    }
    let affine_shape = text.starts_with("sf^")
        || text.starts_with("L[")
        || text.starts_with("D+[")
        || text.starts_with("D-[")
        || (text.starts_with("Estd") && !text.contains(';'));
    if affine_shape || (force_affine && text.starts_with("E[")) {
        return Ok(AnyLabel::Affine(parse_affine_label(level, text)?));
    }
    Ok(AnyLabel::Coset(parse_coset_label(level, text)?))
}

fn fusion_out<L: Ord + Clone + std::fmt::Display>(
    f: &pfcoset_core::fusion::FusionElement<L>,
    format: Format,
) -> String {
    match format {
        Format::Json => json!({
            "terms": f
                .terms()
                .map(|(l, m)| json!({"label": l.to_string(), "multiplicity": m}))
                .collect::<Vec<_>>(),
            "genuine": f.genuine,
            "via_composition_factors": f.via_composition_factors,
        })
        .to_string(),
        Format::Csv => {
            let mut out = String::from("label,multiplicity\n");
            for (l, m) in f.terms() {
                let _ = writeln!(out, "{l},{m}");
            }
            out.pop();
            out
        }
        Format::Text => {
            let note = if f.via_composition_factors {
                "  [standard inputs resolved into composition factors]"
            } else if !f.genuine {
                "  [Grothendieck image]"
            } else {
                ""
            };
            format!("{f}{note}")
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let level = Level::new(cli.u, cli.v)
        .with_context(|| format!("invalid level data (u, v) = ({}, {})", cli.u, cli.v))?;
    let order = parse_rat(&cli.order)?;
    let format = cli.format;
    match &cli.command {
        Command::Info => {
            match format {
                Format::Json => {
                    println!(
                        "{}",
                        json!({
                            "u": level.u(),
                            "v": level.v(),
                            "k": level.k().to_string(),
                            "t": level.t().to_string(),
                            "w": level.w(),
                            "p": level.p(),
                            "c": level.c().to_string(),
                            "c_tilde": level.c_tilde().to_string(),
                        })
                    );
                }
                _ => {
                    println!(
                        "(u,v) = ({},{})  k = {}  t = {}  w = {}  p = {}  c = {}  c~ = {}",
                        level.u(),
                        level.v(),
                        level.k(),
                        level.t(),
                        level.w(),
                        level.p(),
                        level.c(),
                        level.c_tilde()
                    );
                }
            }
        }
        Command::Kac => match format {
            Format::Json => println!("{}", level.minmod().kac_json(cli.digits)),
            _ => {
                let mm = level.minmod();
                println!("M({},{}), c = {}", level.u(), level.v(), mm.central_charge());
                for l in mm.kac_table() {
                    println!("  {l}  h = {}", mm.h(l.r as i64, l.s as i64).unwrap());
                }
            }
        },
        Command::Enumerate { extended, .. } => {
            if *extended {
                let ext = Extension::new(level);
                let labels = ext.enumerate_modules();
                match format {
                    Format::Json => {
                        let list: Vec<_> = labels
                            .iter()
                            .map(|l| {
                                json!({
                                    "label": l.to_string(),
                                    "conformal_weight": ext.conformal_weight(l).to_string(),
                                })
                            })
                            .collect();
                        println!("{}", json!({"count": labels.len(), "modules": list}));
                    }
                    _ => {
                        for l in &labels {
                            println!("{l}  Delta = {}", ext.conformal_weight(l));
                        }
                        println!("total: {}", labels.len());
                    }
                }
            } else {
                let fams = enumerate_families(&level);
                match format {
                    Format::Json => {
                        let list: Vec<_> = fams.iter().map(|f| json!(f.to_string())).collect();
                        println!("{}", json!({"count": fams.len(), "families": list}));
                    }
                    _ => {
                        for f in &fams {
                            println!("{f}");
                        }
                        println!("total: {} families", fams.len());
                    }
                }
            }
        }
        Command::Char {
            label,
            affine,
            crosscheck,
        } => {
            let route = if *crosscheck {
                Route::Crosscheck
            } else {
                Route::Primary
            };
            match parse_any_label(&level, label, *affine)? {
                AnyLabel::Coset(l) => {
                    let coset = Coset::new(level);
                    let ch = coset.character(&l, &order, route)?;
                    print!("{}", series_out(&ch, format));
                }
                AnyLabel::Ext(l) => {
                    let ext = Extension::new(level);
                    let ch = ext.character(&l, &order, route)?;
                    print!("{}", series_out(&ch, format));
                }
                AnyLabel::Affine(l) => {
                    let window = centered_window(&affine_base(&level, &l), cli.window);
                    let ch = match &l.kind {
                        AffineKind::ETyp { .. }
                        | AffineKind::EStdPlus { .. }
                        | AffineKind::EStdMinus { .. } => {
                            std_weighted_char(&level, &l, &window, &order)
                                .map_err(|e| anyhow!("{e}"))?
                        }
                        _ => {
                            let irr_route = if *crosscheck {
                                IrrRoute::Resolution
                            } else {
                                IrrRoute::Decomposition
                            };
                            irr_weighted_char(&level, &l, &window, &order, irr_route)
                                .map_err(|e| anyhow!("{e}"))?
                        }
                    };
                    print!("{}", weighted_out(&ch, format));
                }
            }
        }
        Command::Fuse { a, b } => {
            let product = match (
                parse_any_label(&level, a, false)?,
                parse_any_label(&level, b, false)?,
            ) {
                (AnyLabel::Coset(x), AnyLabel::Coset(y)) => {
                    let coset = Coset::new(level);
                    fusion_out(&coset.fuse_with_c(&x, &y)?, format)
                }
                (AnyLabel::Ext(x), AnyLabel::Ext(y)) => {
                    if !matches!(x.coset().kind(), CosetKind::C { .. }) {
                        bail!("genuine fusion needs a C-type first factor, got {x}");
                    }
                    let ext = Extension::new(level);
                    fusion_out(&ext.gr_fuse_ext(&x, &y)?, format)
                }
                (AnyLabel::Affine(x), AnyLabel::Affine(y)) => {
                    if !matches!(x.kind, AffineKind::L { .. }) {
                        bail!("genuine affine fusion needs an L-type first factor, got {x}");
                    }
                    fusion_out(
                        &pfcoset_core::affine::gr_fuse_affine(&level, &x, &y)
                            .map_err(|e| anyhow!("{e}"))?,
                        format,
                    )
                }
                _ => bail!("fusion factors must live in the same algebra"),
            };
            println!("{product}");
        }
        Command::Gfuse { a, b } => {
            let product = match (
                parse_any_label(&level, a, false)?,
                parse_any_label(&level, b, false)?,
            ) {
                (AnyLabel::Coset(x), AnyLabel::Coset(y)) => {
                    let coset = Coset::new(level);
                    fusion_out(&coset.gr_fuse(&x, &y)?, format)
                }
                (AnyLabel::Ext(x), AnyLabel::Ext(y)) => {
                    let ext = Extension::new(level);
                    fusion_out(&ext.gr_fuse_ext(&x, &y)?, format)
                }
                (AnyLabel::Affine(x), AnyLabel::Affine(y)) => fusion_out(
                    &pfcoset_core::affine::gr_fuse_affine(&level, &x, &y)
                        .map_err(|e| anyhow!("{e}"))?,
                    format,
                ),
                _ => bail!("fusion factors must live in the same algebra"),
            };
            println!("{product}");
        }
        Command::Theta { mu, deriv } => {
            let ext = Extension::new(level);
            let th = ext.theta(&parse_rat(mu)?, &order, *deriv);
            print!("{}", series_out(&th, format));
        }
        Command::Gamma { mu, r } => {
            let ext = Extension::new(level);
            let g = ext.gamma(&parse_rat(mu)?, *r, &order)?;
            print!("{}", series_out(&g, format));
        }
        Command::Smatrix { kind } => {
            let ext = Extension::new(level);
            let ar = Arith::with_digits(cli.digits);
            let kind = match kind.as_str() {
                "typ" => SMatrixKind::Typ,
                "theta" => SMatrixKind::Theta,
                "vir" => SMatrixKind::Vir,
                _ => SMatrixKind::Gamma,
            };
            let m = ext.smatrix(kind, &ar);
            match format {
                Format::Json => {
                    let rows: Vec<Vec<String>> = m
                        .entries
                        .iter()
                        .map(|row| {
                            row.iter()
                                .map(|x| ar.decimal_string(x, cli.digits))
                                .collect()
                        })
                        .collect();
                    println!("{}", json!({"labels": m.labels, "entries": rows}));
                }
                Format::Csv => {
                    for (lab, row) in m.labels.iter().zip(m.entries.iter()) {
                        let cells: Vec<String> = row
                            .iter()
                            .map(|x| ar.decimal_string(x, cli.digits))
                            .collect();
                        println!("{lab},{}", cells.join(","));
                    }
                }
                Format::Text => {
                    for (lab, row) in m.labels.iter().zip(m.entries.iter()) {
                        let cells: Vec<String> = row
                            .iter()
                            .map(|x| format!("{:>12.8}", ar.to_f64(x)))
                            .collect();
                        println!("{lab:>8}  {}", cells.join(" "));
                    }
                }
            }
        }
        Command::Basis => {
            let ext = Extension::new(level);
            let bk = ext.basis_bk();
            let (standard, _, total) = rep_dimension_report(&level);
            let rank = ext.gamma_rank(&order)?;
            match format {
                Format::Json => {
                    println!(
                        "{}",
                        json!({
                            "basis": bk.iter().map(|b| json!({"mu": b.mu, "r": b.r})).collect::<Vec<_>>(),
                            "dim_bound": ext.dim_bound(),
                            "gamma_rank_to_order": rank,
                            "standard_count": standard,
                            "representation_dimension": total,
                        })
                    );
                }
                _ => {
                    let list: Vec<String> = bk.iter().map(|b| b.to_string()).collect();
                    println!("B_k = {{ {} }}, |B_k| = {}", list.join(", "), ext.dim_bound());
                    println!(
                        "rank of the Gamma coefficient matrix to order {order}: {rank} (independence evidence, not asserted)"
                    );
                    println!("standard characters: {standard}; representation dimension <= {total}");
                }
            }
        }
        Command::Verify { kind } => {
            let mut taus = Vec::new();
            for t in &cli.taus {
                taus.push(parse_tau(t)?);
            }
            if taus.is_empty() {
                taus = vec![Tau::i(), Tau::new(rat(-2, 5), rat(9, 10))];
            }
            let params = CheckParams {
                level,
                taus,
                n: order,
                digits: cli.digits,
                tol: cli.tol,
            };
            let kinds: Vec<CheckKind> = if kind == "all" {
                CheckKind::all().to_vec()
            } else {
                vec![CheckKind::parse(kind).ok_or_else(|| anyhow!("unknown check {kind}"))?]
            };
            let mut all_pass = true;
            if format == Format::Csv {
                println!("check,u,v,order,digits,identities,residual,tail_budget,tolerance,pass");
            }
            for k in kinds {
                let report = verify(k, &params)?;
                all_pass &= report.pass;
                match format {
                    Format::Text => println!("{report}"),
                    Format::Json => println!("{}", report.to_json()),
                    Format::Csv => println!(
                        "{},{},{},{},{},{},{:.3e},{:.3e},{:.3e},{}",
                        report.check,
                        report.level.0,
                        report.level.1,
                        report.order,
                        report.digits,
                        report.identities,
                        report.residual,
                        report.tail_budget,
                        report.tolerance,
                        report.pass
                    ),
                }
            }
            if !all_pass {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn affine_base(level: &Level, label: &AffineLabel) -> Rat {
    let (u, v) = (level.u() as i64, level.v() as i64);
    let base = match &label.kind {
        AffineKind::L { r } => rat_int(*r as i64 - 1),
        AffineKind::DPlus { r, s } => level.lambda(*r as i64, *s as i64),
        AffineKind::DMinus { r, s } => level.lambda(u - *r as i64, v - *s as i64),
        AffineKind::ETyp { lambda, .. } => lambda.clone(),
        AffineKind::EStdPlus { r, s } => level.lambda(*r as i64, *s as i64),
        AffineKind::EStdMinus { r, s } => level.lambda(u - *r as i64, v - *s as i64),
    };
    base + level.k() * rat_int(label.flow)
}
