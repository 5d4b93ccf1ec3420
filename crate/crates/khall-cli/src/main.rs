//! Command-line front end: expression evaluation, directional expansion,
//! shuffle products, and the verification suites, with optional JSON reports.
//!
//! Exit codes: 0 = success/pass, 1 = a verification failed, 2 = usage or
//! expression error.

mod lower;
mod parse;

use clap::{Parser, Subcommand, ValueEnum};
use khall::dist::{exchange_defect, expand, ordered_double_expand, Direction};
use khall::hall::{derive_report, weyl_rank_check, HeckeSetup, REPORT_SCHEMA_VERSION};
use khall::kclass::{twisted_expansion, ChiTable, KClass};
use khall::laurent::{LaurentPoly, Monomial};
use khall::ratfun::RatFun;
use khall::ring::{Ring, RingElement};
use khall::shuffle::{shuffle_mul, ShuffleElement};
use lower::{class_to_string, Lowering, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value as Json};
use std::process::ExitCode;
use std::time::Instant;

const DEFAULT_ORDER: i32 = 8;
const DEFAULT_SEED: u64 = 20240915;

#[derive(Parser)]
#[command(name = "khall", version, about = "Exact Hecke-commutator calculus")]
struct Cli {
    /// Emit a JSON report instead of text
    #[arg(long, global = true)]
    json: bool,
    /// Seed for the randomized verification suites
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Truncation order (falls back to KHALL_ORDER, then 8)
    #[arg(long, global = true)]
    order: Option<i32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum At {
    Inf,
    Zero,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum RingPreset {
    Free,
    P2,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an expression to a kernel object and print it
    Eval { expr: String },
    /// Expand a rational expression in a formal variable
    Expand {
        expr: String,
        #[arg(long)]
        var: String,
        #[arg(long, value_enum, default_value_t = At::Both)]
        at: At,
    },
    /// Shuffle-multiply two symmetric Laurent polynomials in z1..zn
    Shuffle {
        left: String,
        right: String,
        /// Degree of the left factor (default: highest z-index, at least 1)
        #[arg(long)]
        left_degree: Option<usize>,
        /// Degree of the right factor (default: highest z-index, at least 1)
        #[arg(long)]
        right_degree: Option<usize>,
    },
    /// Check the residue exchange identity on a seeded family
    ResidueCheck,
    /// Verification suites
    Verify {
        #[command(subcommand)]
        suite: VerifyCmd,
    },
    /// Euler-characteristic rank check on the plane
    WeylRank {
        #[arg(long)]
        d: i64,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Full commutator derivation report
    Commutator {
        #[arg(long, default_value_t = 1)]
        rank: usize,
        #[arg(long, value_enum, default_value_t = RingPreset::Free)]
        ring: RingPreset,
    },
    /// Twisted-expansion coefficient identities on random rank-0 classes
    LemmaCalculation,
}

/// The versioned report envelope; `payload` is command-specific.
#[derive(Serialize)]
struct Report {
    schema_version: u32,
    command: String,
    ring: String,
    order: i32,
    seed: u64,
    pass: bool,
    payload: Json,
    elapsed_ms: u64,
}

enum CliError {
    /// Bad input: exit code 2.
    Usage(String),
    /// A kernel operation failed: exit code 1.
    Kernel(String),
}

impl From<parse::SyntaxError> for CliError {
    fn from(e: parse::SyntaxError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<lower::LowerError> for CliError {
    fn from(e: lower::LowerError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<khall::AlgebraError> for CliError {
    fn from(e: khall::AlgebraError) -> Self {
        CliError::Kernel(e.to_string())
    }
}

/// Command outcome before wrapping in the envelope.
struct Outcome {
    ring: String,
    pass: bool,
    payload: Json,
    text: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let order = match resolve_order(cli.order) {
        Ok(o) => o,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let echo: Vec<String> = std::env::args().skip(1).collect();
    let started = Instant::now();
    let outcome = run(&cli.command, order, cli.seed);
    match outcome {
        Ok(out) => {
            let pass = out.pass;
            if cli.json {
                let report = Report {
                    schema_version: REPORT_SCHEMA_VERSION,
                    command: echo.join(" "),
                    ring: out.ring,
                    order,
                    seed: cli.seed,
                    pass,
                    payload: out.payload,
                    elapsed_ms: started.elapsed().as_millis() as u64,
                };
                println!("{}", serde_json::to_string_pretty(&report).expect("report is serializable"));
            } else {
                println!("{}", out.text);
            }
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Kernel(msg)) => {
            eprintln!("kernel error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Order precedence: command-line flag, then KHALL_ORDER, then the default.
fn resolve_order(flag: Option<i32>) -> Result<i32, String> {
    let order = match flag {
        Some(o) => o,
        None => match std::env::var("KHALL_ORDER") {
            Ok(s) => s
                .parse::<i32>()
                .map_err(|_| format!("KHALL_ORDER={s} is not an integer"))?,
            Err(_) => DEFAULT_ORDER,
        },
    };
    if order < 2 {
        return Err(format!("truncation order {order} is too small (need >= 2)"));
    }
    Ok(order)
}

/// The delta-coefficient window certified by tails truncated at `order`.
fn window_for(order: i32) -> i32 {
    (order / 2 - 1).max(1)
}

fn run(cmd: &Command, order: i32, seed: u64) -> Result<Outcome, CliError> {
    match cmd {
        Command::Eval { expr } => eval_cmd(expr, order),
        Command::Expand { expr, var, at } => expand_cmd(expr, var, *at, order),
        Command::Shuffle { left, right, left_degree, right_degree } => {
            shuffle_cmd(left, right, *left_degree, *right_degree)
        }
        Command::ResidueCheck => residue_check_cmd(order, seed),
        Command::Verify { suite } => match suite {
            VerifyCmd::Commutator { rank, ring } => commutator_cmd(*rank, *ring, order),
            VerifyCmd::LemmaCalculation => lemma_cmd(order, seed),
        },
        Command::WeylRank { d } => weyl_rank_cmd(*d),
    }
}

fn eval_cmd(expr: &str, order: i32) -> Result<Outcome, CliError> {
    let ast = parse::parse(expr)?;
    let ctx = Lowering::for_exprs(&[&ast], &[], order);
    let value = ctx.lower(&ast)?;
    let (kind, rendered) = match &value {
        Value::Rat(r) => ("ratfun", r.to_string()),
        Value::Dist(d) => ("distribution", d.to_string()),
        Value::Class(k) => ("class", class_to_string(k)),
    };
    Ok(Outcome {
        ring: "free".into(),
        pass: true,
        payload: json!({ "kind": kind, "value": rendered }),
        text: rendered,
    })
}

fn expand_cmd(expr: &str, var: &str, at: At, order: i32) -> Result<Outcome, CliError> {
    let ast = parse::parse(expr)?;
    let ctx = Lowering::for_exprs(&[&ast], &[var], order);
    let f = ctx.lower_rat(&ast)?;
    let ring = ctx.ring().clone();
    let mut payload = serde_json::Map::new();
    payload.insert("var".into(), json!(var));
    let mut text_parts = Vec::new();

    if at == At::Zero || at == At::Both {
        let s = expand(&f, var, Direction::AtZero, order)?;
        let lo = s.coeffs().keys().next().copied().unwrap_or(0).min(0);
        let mut coeffs = Vec::new();
        let mut rendered = Vec::new();
        for k in lo..=order {
            let c = s.coeff(k, &ring)?;
            coeffs.push(json!({ "exp": k, "coeff": c.to_string() }));
            rendered.push(c.to_string());
        }
        payload.insert("at_zero".into(), Json::Array(coeffs));
        let list = format!("[{}]", rendered.join(", "));
        text_parts.push(if at == At::Both {
            format!("at zero: {list}")
        } else {
            list
        });
    }
    if at == At::Inf || at == At::Both {
        let s = expand(&f, var, Direction::AtInfinity, order)?;
        let hi = s.coeffs().keys().next_back().copied().unwrap_or(0).max(0);
        let mut coeffs = Vec::new();
        let mut rendered = Vec::new();
        for k in (hi - order..=hi).rev() {
            let c = s.coeff(k, &ring)?;
            coeffs.push(json!({ "exp": k, "coeff": c.to_string() }));
            rendered.push(format!("{var}^{k}: {c}"));
        }
        payload.insert("at_infinity".into(), Json::Array(coeffs));
        let list = format!("[{}]", rendered.join(", "));
        text_parts.push(if at == At::Both {
            format!("at infinity: {list}")
        } else {
            list
        });
    }
    Ok(Outcome {
        ring: "free".into(),
        pass: true,
        payload: Json::Object(payload),
        text: text_parts.join("\n"),
    })
}

fn shuffle_cmd(
    left: &str,
    right: &str,
    left_degree: Option<usize>,
    right_degree: Option<usize>,
) -> Result<Outcome, CliError> {
    let la = parse::parse(left)?;
    let ra = parse::parse(right)?;
    let ctx = Lowering::for_exprs(&[&la, &ra], &[], DEFAULT_ORDER);
    let to_element = |ast: &parse::Expr, deg: Option<usize>| -> Result<ShuffleElement, CliError> {
        let p = ctx
            .lower_rat(ast)?
            .as_polynomial()
            .map_err(|_| CliError::Usage("shuffle factors must be Laurent polynomials".into()))?;
        let n = deg.unwrap_or_else(|| zdegree(&p).max(1));
        ShuffleElement::canonicalize(p, n).map_err(|e| CliError::Usage(e.to_string()))
    };
    let f = to_element(&la, left_degree)?;
    let g = to_element(&ra, right_degree)?;
    let prod = shuffle_mul(&f, &g)?;
    let rendered = prod.value().to_string();
    Ok(Outcome {
        ring: "integers".into(),
        pass: true,
        payload: json!({
            "left_degree": f.degree(),
            "right_degree": g.degree(),
            "degree": prod.degree(),
            "result": rendered,
        }),
        text: rendered,
    })
}

/// Highest slot index among the z-variables of a polynomial.
fn zdegree(p: &LaurentPoly) -> usize {
    p.vars()
        .iter()
        .filter_map(|v| v.strip_prefix('z').and_then(|s| s.parse::<usize>().ok()))
        .max()
        .unwrap_or(0)
}

fn random_unit(ring: &Ring, rng: &mut ChaCha8Rng) -> RingElement {
    let mut u = ring.one();
    for name in ring.gen_names() {
        let e: i32 = rng.gen_range(-2..=2);
        u = u
            .mul(&khall::dist::unit_pow(&ring.gen(name).unwrap(), e).unwrap())
            .unwrap();
    }
    u
}

/// Rational functions with at most two tracked binomial denominator factors.
fn residue_family(ring: &Ring, rng: &mut ChaCha8Rng, var: &str) -> Vec<RatFun> {
    let mut out = vec![RatFun::one(ring)];
    for nfac in 1..=2usize {
        for _ in 0..2 {
            let a: i32 = rng.gen_range(-1..=1);
            let mut f = RatFun::from_poly(LaurentPoly::var_pow(ring, var, a));
            for _ in 0..nfac {
                let u = random_unit(ring, rng);
                let e = if rng.gen_bool(0.5) { 1 } else { -1 };
                let m = Monomial::new(u, &[(var, e)]).unwrap();
                f = f.mul(&RatFun::inv_one_minus(&m)).unwrap();
            }
            out.push(f);
        }
    }
    out
}

fn residue_check_cmd(order: i32, seed: u64) -> Result<Outcome, CliError> {
    let ring = Ring::free_units(&["q", "u", "v"]);
    let q = ring.gen("q")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs = residue_family(&ring, &mut rng, "x");
    let gs = residue_family(&ring, &mut rng, "y");
    let window = window_for(order);
    let mut cases = 0usize;
    let mut failures = Vec::new();
    for alpha in [ring.one(), q.unit_inverse()?] {
        for f in &fs {
            for g in &gs {
                let pole =
                    Monomial::new(alpha.unit_inverse()?, &[("y", 1), ("x", -1)])?;
                let ff = f
                    .mul(g)?
                    .mul(&RatFun::inv_one_minus(&pole))?
                    .scale(&alpha.unit_inverse()?.neg())?;
                let lhs = ordered_double_expand(&ff, "x", "y", order)?
                    .sub(&ordered_double_expand(&ff, "y", "x", order)?)?;
                let rhs = exchange_defect(f, g, &alpha, "x", "y", order)?;
                if !lhs.agrees(&rhs, window)? {
                    failures.push(format!("f={f} g={g} alpha={alpha}"));
                }
                cases += 1;
            }
        }
    }
    let pass = failures.is_empty();
    let text = if pass {
        format!("residue identity holds on {cases} cases (order {order}, window {window})")
    } else {
        format!("residue identity FAILED on {} of {cases} cases", failures.len())
    };
    Ok(Outcome {
        ring: "free".into(),
        pass,
        payload: json!({ "cases": cases, "window": window, "failures": failures }),
        text,
    })
}

fn commutator_cmd(rank: usize, preset: RingPreset, order: i32) -> Result<Outcome, CliError> {
    let setup = match preset {
        RingPreset::Free => HeckeSetup::free(rank, order)?,
        RingPreset::P2 => HeckeSetup::p2(rank, order)?,
    };
    let report = derive_report(&setup, window_for(order))?;
    let mut text = String::new();
    for stage in &report.stages {
        text.push_str(&format!(
            "{}: {} ({})\n",
            stage.name,
            if stage.pass { "pass" } else { "FAIL" },
            stage.detail
        ));
    }
    text.push_str(&format!(
        "commutator derivation ({}, rank {rank}, order {order}): {}",
        setup.preset(),
        if report.pass { "pass" } else { "FAIL" }
    ));
    let pass = report.pass;
    let ring = setup.preset().to_string();
    Ok(Outcome {
        ring,
        pass,
        payload: serde_json::to_value(&report).expect("report is serializable"),
        text,
    })
}

fn lemma_cmd(order: i32, seed: u64) -> Result<Outcome, CliError> {
    let ring = Ring::free_units(&["u", "v", "w", "l"]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = 0usize;
    let mut failures = Vec::new();
    for np in 1..=3usize {
        for _ in 0..4 {
            let plus: Vec<RingElement> = (0..np).map(|_| random_unit(&ring, &mut rng)).collect();
            let minus: Vec<RingElement> = (0..np).map(|_| random_unit(&ring, &mut rng)).collect();
            let k = KClass::new(&ring, plus, minus)?;
            let l = random_unit(&ring, &mut rng);
            // the expansion self-certifies its inner coefficient window
            if let Err(e) = twisted_expansion(&k, &l, "x", order) {
                failures.push(format!("K={k:?} L={l}: {e}"));
            }
            cases += 1;
        }
    }
    let pass = failures.is_empty();
    let text = if pass {
        format!("twisted-expansion coefficient identities hold on {cases} rank-0 classes")
    } else {
        format!("twisted-expansion identities FAILED on {} of {cases} cases", failures.len())
    };
    Ok(Outcome {
        ring: "free".into(),
        pass,
        payload: json!({ "cases": cases, "failures": failures }),
        text,
    })
}

fn weyl_rank_cmd(d: i64) -> Result<Outcome, CliError> {
    if d < 1 {
        return Err(CliError::Usage(format!("--d must be positive, got {d}")));
    }
    let ring = Ring::p2();
    let table = ChiTable::p2(&ring);
    let res = weyl_rank_check(&table, d)?;
    let pass = res.passes();
    Ok(Outcome {
        ring: "p2".into(),
        pass,
        payload: json!({
            "d": d,
            "chi": res.chi.to_string(),
            "rank": res.rank.to_string(),
        }),
        text: format!(
            "d={d}: chi={} rank={} — {}",
            res.chi,
            res.rank,
            if pass { "pass" } else { "FAIL" }
        ),
    })
}
