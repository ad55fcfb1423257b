//! Command-line front end: parses input files, dispatches to the library,
//! and prints a machine-readable JSON report on standard output (the
//! `fixtures` subcommand prints the complex text format instead, so that its
//! output feeds straight back into the other subcommands). Diagnostics go to
//! standard error.
//!
//! Exit codes: 0 computed, 2 malformed input, 3 precondition failure,
//! 64 unknown subcommand.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use kampen::chords::{self, ChordError};
use kampen::equivariant::{deleted_product, Parity};
use kampen::exactalg::{AbelianGroup, ClassOrder};
use kampen::obstructions::{self, ObstructionError, ObstructionReport, SpatialGraphEmbedding};
use kampen::simplicial::{Coefficients, SimplicialComplex, SimplicialError};

#[derive(Parser)]
#[command(name = "kampen", version, about = "Exact embeddability obstructions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embeddability obstruction of an n-complex in R^{2n}.
    Obstruction {
        complex: PathBuf,
        /// Report the mod-2 reduction of the class instead.
        #[arg(long)]
        mod2: bool,
    },
    /// Presentation of the top equivariant cohomology of the deleted product.
    H2n {
        complex: PathBuf,
        /// Cross-check the presentation against the direct computation.
        #[arg(long)]
        verify: bool,
    },
    /// Co-index of the deleted product; with --cone, of the cone's.
    Coindex {
        complex: PathBuf,
        #[arg(long)]
        cone: bool,
    },
    /// Linkless-embeddability obstruction of a graph.
    Linkless { graph: PathBuf },
    /// Isotopy obstruction between two spatial embeddings of one graph.
    Isotopy {
        emb1: PathBuf,
        emb2: PathBuf,
        /// Seed for fallback projection directions.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Co-connectivity certificate and the embedding dimension it implies.
    Coconnect {
        complex: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Chord diagram analysis.
    Chords {
        #[command(subcommand)]
        command: ChordsCommand,
    },
    /// Prints a named example complex in the facet-per-line text format.
    Fixtures { name: String },
}

#[derive(Subcommand)]
enum ChordsCommand {
    /// Invariant-group rank, irreducible factors, and planarity witnesses.
    Analyze { code: String },
    /// Arrow-formula search for given derivative data.
    Formula {
        code: String,
        /// File with lines `C D value` giving the derivative on arc pairs.
        #[arg(long)]
        deriv: PathBuf,
    },
}

#[derive(Debug)]
enum CliError {
    Malformed(String),
    Precondition(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Malformed(_) => 2,
            CliError::Precondition(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Malformed(m) => write!(f, "malformed input: {}", m),
            CliError::Precondition(m) => write!(f, "precondition failure: {}", m),
        }
    }
}

impl From<SimplicialError> for CliError {
    fn from(e: SimplicialError) -> CliError {
        match e {
            SimplicialError::Parse { .. } => CliError::Malformed(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<ObstructionError> for CliError {
    fn from(e: ObstructionError) -> CliError {
        match e {
            ObstructionError::Parse { .. } => CliError::Malformed(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<ChordError> for CliError {
    fn from(e: ChordError) -> CliError {
        match e {
            ChordError::Parse(_) | ChordError::BadToken(..) => CliError::Malformed(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{}", e);
                    std::process::exit(0);
                }
                ErrorKind::InvalidSubcommand => {
                    eprint!("{}", e);
                    std::process::exit(64);
                }
                _ => {
                    eprint!("{}", e);
                    std::process::exit(2);
                }
            }
        }
    };
    match run(cli.command) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {}", e);
            std::process::exit(e.code());
        }
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Malformed(format!("{}: {}", path.display(), e)))
}

fn digest(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
    }
    format!("sha256:{:x}", h.finalize())
}

fn load_complex(path: &Path) -> Result<(SimplicialComplex, String), CliError> {
    let text = read_input(path)?;
    let (k, _) = SimplicialComplex::parse(&text)?;
    Ok((k, text))
}

fn class_order_json(order: &ClassOrder) -> Value {
    match order {
        ClassOrder::Infinite => json!("infinite"),
        ClassOrder::Finite(n) => match i64::try_from(n.clone()) {
            Ok(v) => json!(v),
            Err(_) => json!(n.to_string()),
        },
    }
}

fn group_json(g: &AbelianGroup) -> Value {
    json!({
        "display": g.to_string(),
        "free_rank": g.free_rank,
        "torsion": g.torsion.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
    })
}

fn report_json(r: &ObstructionReport, mod2: bool) -> Value {
    if mod2 {
        json!({
            "trivial": r.mod2_trivial,
            "order": if r.mod2_trivial { json!(1) } else { json!(2) },
            "verdict": format!("{:?}",
                if r.mod2_trivial { kampen::obstructions::Verdict::Embeds }
                else { kampen::obstructions::Verdict::DoesNotEmbed }),
            "ambient_dim": r.ambient_dim,
            "mod2": true,
        })
    } else {
        let mut v = json!({
            "trivial": r.trivial,
            "order": class_order_json(&r.order),
            "mod2_trivial": r.mod2_trivial,
            "verdict": format!("{:?}", r.verdict),
            "ambient_dim": r.ambient_dim,
        });
        if let Some(ci) = r.co_index {
            v["co_index"] = json!(ci);
        }
        v
    }
}

fn emit(command: &str, input_digest: String, result: Value, started: Instant) {
    let report = json!({
        "command": command,
        "input_digest": input_digest,
        "result": result,
        "timing_ms": started.elapsed().as_millis() as u64,
    });
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
}

/// The facet-per-line text form of a complex, with zero-padded vertex labels
/// so that the lexicographic label order used by the parser agrees with the
/// numeric vertex order and the output parses back to the same complex.
fn complex_text(k: &SimplicialComplex) -> String {
    let facets: Vec<_> = k
        .all_simplices()
        .filter(|s| {
            !k.all_simplices()
                .any(|t| t != *s && s.is_face_of(t))
        })
        .collect();
    let width = k
        .vertices()
        .iter()
        .map(|v| v.to_string().len())
        .max()
        .unwrap_or(1);
    let mut out = String::new();
    for f in facets {
        let line: Vec<String> = f
            .vertices()
            .iter()
            .map(|v| format!("{:0width$}", v, width = width))
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

fn fixture(name: &str) -> Result<SimplicialComplex, CliError> {
    match name {
        "k5" => Ok(obstructions::k5()),
        "k33" => Ok(obstructions::k33()),
        "sarkaria" => Ok(obstructions::sarkaria_example()),
        "petersen" => Ok(obstructions::petersen()),
        _ => {
            if let Some(n) = name.strip_prefix("flores-") {
                let n: usize = n
                    .parse()
                    .map_err(|_| CliError::Malformed(format!("bad fixture name {:?}", name)))?;
                Ok(obstructions::flores(n))
            } else {
                Err(CliError::Malformed(format!(
                    "unknown fixture {:?}; known: k5, k33, sarkaria, petersen, flores-<n>",
                    name
                )))
            }
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    let started = Instant::now();
    match command {
        Command::Obstruction { complex, mod2 } => {
            let (k, text) = load_complex(&complex)?;
            let r = obstructions::van_kampen(&k)?;
            eprintln!(
                "obstruction: {:?} (order {}, mod-2 trivial: {})",
                r.verdict, r.order, r.mod2_trivial
            );
            emit("obstruction", digest(&[&text]), report_json(&r, mod2), started);
        }
        Command::H2n { complex, verify } => {
            let (k, text) = load_complex(&complex)?;
            let g = obstructions::h2n_presentation(&k)?;
            let verified = if verify {
                let n = usize::try_from(k.dim()).map_err(|_| {
                    CliError::Precondition("empty complex has no top cohomology".into())
                })?;
                let direct = deleted_product(&k).twisted_cohomology(
                    2 * n as i64,
                    Parity::Untwisted,
                    Coefficients::Integral,
                );
                Some(direct == g)
            } else {
                None
            };
            eprintln!("presentation: {}", g);
            emit(
                "h2n",
                digest(&[&text]),
                json!({ "group": group_json(&g), "verified": verified }),
                started,
            );
        }
        Command::Coindex { complex, cone } => {
            let (k, text) = load_complex(&complex)?;
            if cone {
                let r = obstructions::panelled_cone_obstruction(&k)?;
                eprintln!("co-index of the cone's deleted product: {:?}", r.co_index);
                emit("coindex", digest(&[&text]), report_json(&r, false), started);
            } else {
                let ci = deleted_product(&k)
                    .co_index()
                    .map_err(|e| CliError::Precondition(e.to_string()))?;
                eprintln!("co-index of the deleted product: {}", ci);
                emit("coindex", digest(&[&text]), json!({ "co_index": ci }), started);
            }
        }
        Command::Linkless { graph } => {
            let (k, text) = load_complex(&graph)?;
            let r = obstructions::linkless_obstruction(&k)?;
            eprintln!("linkless embedding: {:?}", r.verdict);
            emit("linkless", digest(&[&text]), report_json(&r, false), started);
        }
        Command::Isotopy { emb1, emb2, seed } => {
            let t1 = read_input(&emb1)?;
            let t2 = read_input(&emb2)?;
            let (f, _) = SpatialGraphEmbedding::parse(&t1)?;
            let (g, _) = SpatialGraphEmbedding::parse(&t2)?;
            let r = obstructions::isotopy_obstruction_seeded(&f, &g, seed)?;
            eprintln!("isotopy: {:?}", r.verdict);
            emit("isotopy", digest(&[&t1, &t2]), report_json(&r, false), started);
        }
        Command::Coconnect { complex, k } => {
            let (cx, text) = load_complex(&complex)?;
            let r = obstructions::coconnectivity_check(&cx, k)?;
            let failures: Vec<String> = r
                .star_table
                .iter()
                .filter(|(_, ok)| !ok)
                .map(|(s, _)| s.to_string())
                .collect();
            eprintln!(
                "co-connectivity: hypothesis {}, embeds in {:?}",
                r.hypothesis, r.embeds_in
            );
            emit(
                "coconnect",
                digest(&[&text]),
                json!({
                    "hypothesis": r.hypothesis,
                    "i_k": r.i_k,
                    "ii_k_minus_1": r.ii_k_minus_1,
                    "embeds_in": r.embeds_in,
                    "link_failures": failures,
                }),
                started,
            );
        }
        Command::Chords { command } => run_chords(command, started)?,
        Command::Fixtures { name } => {
            let k = fixture(&name)?;
            print!("{}", complex_text(&k));
        }
    }
    Ok(())
}

fn run_chords(command: ChordsCommand, started: Instant) -> Result<(), CliError> {
    match command {
        ChordsCommand::Analyze { code } => {
            let theta = chords::parse_diagram(&code)?;
            let rank = chords::gamma1_rank(&theta)?;
            let (factors, _) = chords::irreducible_factors(&theta);
            let p = chords::planarity(&theta)?;
            eprintln!(
                "rank {}, {} irreducible factor(s), planar: {}",
                rank, factors, p.planar
            );
            emit(
                "chords analyze",
                digest(&[&code]),
                json!({
                    "rank": rank,
                    "factors": factors,
                    "planar": p.planar,
                    "witnesses": {
                        "zeta_trivial": p.zeta_trivial,
                        "manturov_empty": p.manturov_empty,
                        "realizable": p.realizable,
                    },
                }),
                started,
            );
        }
        ChordsCommand::Formula { code, deriv } => {
            let theta = chords::parse_diagram(&code)?;
            let text = read_input(&deriv)?;
            let data = chords::DerivativeData::parse(&text, theta.arc_count())?;
            let bc = chords::build_config_space(&theta)?;
            chords::validate_derivative(&bc, &data)?;
            let obstruction = chords::arrow_formula_obstruction(&bc, &data)?;
            let obstruction_trivial = chords::class_is_trivial(&bc, &obstruction)?;
            let propto = chords::propto(&bc, &data)?;
            let formula = chords::integral_arrow_formula(&bc, &data)?;
            let formula_json = |f: &chords::ArrowFormula| {
                json!({
                    "doubled": f.doubled,
                    "constant": f.constant.to_string(),
                    "coefficients": f
                        .coeffs
                        .iter()
                        .map(|(&(c, d), v)| json!([c, d, v.to_string()]))
                        .collect::<Vec<_>>(),
                })
            };
            let half = chords::half_integer_formula(&bc, &data)?;
            match &formula {
                Some(f) => eprintln!(
                    "integral arrow formula with {} coefficients",
                    f.coeffs.len()
                ),
                None => eprintln!(
                    "no integral arrow formula (propto = {}); half-integer formula supplied",
                    propto
                ),
            }
            emit(
                "chords formula",
                digest(&[&code, &text]),
                json!({
                    "propto": propto,
                    "obstruction_trivial": obstruction_trivial,
                    "formula": formula.as_ref().map(formula_json),
                    "half_integer_formula": formula_json(&half),
                }),
                started,
            );
        }
    }
    Ok(())
}
