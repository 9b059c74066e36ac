//! Command-line front end. Exit codes: 0 true, 1 false, 2 error,
//! 3 engines disagree.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::corpus::{self, FormulaConfig};
use crate::expressivity::{chain_period_scan, make_t, make_vault, T12Spec, VaultSpec, Which};
use crate::oracle::eval_semantics;
use crate::pipeline::{compile_sentence, write_trace};
use crate::regular::compute_type_regular;
use crate::sup::{decide_sup, tree_to_grammar};
use crate::syntax::{parse_formula, parse_regular_tree, parse_tree, Formula, Letter, LetterSet, RegularTree};
use crate::types::Composer;
use crate::{regular, FiniteTree, Valuation};

pub const EXIT_TRUE: i32 = 0;
pub const EXIT_FALSE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_DISAGREE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "wmsotup", about = "Model checker for WMSO+U over finite and regular binary trees")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Engine {
    Fixpoint,
    Pipeline,
    Brute,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Decide a sentence on a tree (finite or regular format).
    Check {
        tree: PathBuf,
        formula: PathBuf,
        #[arg(long, value_enum, default_value = "fixpoint")]
        engine: Engine,
        /// Run every applicable engine and compare.
        #[arg(long)]
        all_engines: bool,
        /// Truncation depth that makes the brute-force engine applicable to infinite trees.
        #[arg(long)]
        max_depth: Option<usize>,
        /// Give up after this many composition steps (fixpoint and pipeline engines).
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Types of the formula at every state of the minimized tree.
    Types {
        tree: PathBuf,
        formula: PathBuf,
        /// Include every subformula, not only the whole formula.
        #[arg(long)]
        dump_types: bool,
    },
    /// Simultaneous unboundedness of the nd-language for letter sets like `a,b`.
    Sup {
        tree: PathBuf,
        #[arg(required = true)]
        sets: Vec<String>,
        #[arg(long)]
        dump_grammar: bool,
    },
    /// Decide a sentence with the transducer pipeline and list the operations.
    Pipeline {
        tree: PathBuf,
        formula: PathBuf,
        /// Write every intermediate tree to numbered files in this directory.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Generate trees and formulas.
    Gen {
        #[command(subcommand)]
        what: GenCmd,
    },
    /// Periodicity of `Efin X. psi` types over chains `upper^m lower^n`.
    Scan {
        formula: PathBuf,
        #[arg(long, default_value_t = 12)]
        m_max: usize,
        #[arg(long, default_value_t = 12)]
        n_max: usize,
        #[arg(long, default_value = "a")]
        upper: String,
        #[arg(long, default_value = "b")]
        lower: String,
    },
}

#[derive(Subcommand, Debug)]
enum GenCmd {
    Vault {
        m: usize,
        n: usize,
        #[arg(long, default_value_t = 1)]
        p: usize,
    },
    T1 {
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    T2 {
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    Formula {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        sentence: bool,
    },
    Regular {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        states: usize,
    },
    Tree {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        nodes: usize,
    },
}

type CmdResult = Result<i32, String>;

/// Parses `args` (program name first) and runs the command.
pub fn run(args: impl IntoIterator<Item = String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = write!(err, "{e}");
            return EXIT_ERROR;
        }
        // --help and --version
        Err(e) => {
            let _ = write!(out, "{e}");
            return EXIT_TRUE;
        }
    };
    match dispatch(cli.cmd, out) {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

enum AnyTree {
    Finite(FiniteTree),
    Regular(RegularTree),
}

/// A file with a `root` declaration is a regular tree, anything else a finite tree.
fn load_tree(path: &Path) -> Result<AnyTree, String> {
    let text = read(path)?;
    let is_regular = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim_start())
        .any(|l| l.starts_with("root ") || l == "root");
    let ctx = |e: crate::syntax::ParseError| format!("{}: {e}", path.display());
    if is_regular {
        parse_regular_tree(&text).map(AnyTree::Regular).map_err(ctx)
    } else {
        parse_tree(&text).map(AnyTree::Finite).map_err(ctx)
    }
}

fn load_regular(path: &Path) -> Result<RegularTree, String> {
    Ok(match load_tree(path)? {
        AnyTree::Finite(t) => RegularTree::from_finite(&t),
        AnyTree::Regular(r) => r,
    })
}

fn load_formula(path: &Path) -> Result<Formula, String> {
    parse_formula(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn verdict(b: bool) -> i32 {
    if b {
        EXIT_TRUE
    } else {
        EXIT_FALSE
    }
}

fn w(out: &mut dyn Write, s: impl std::fmt::Display) -> Result<(), String> {
    writeln!(out, "{s}").map_err(|e| e.to_string())
}

fn dispatch(cmd: Cmd, out: &mut dyn Write) -> CmdResult {
    match cmd {
        Cmd::Check { tree, formula, engine, all_engines, max_depth, budget } => {
            cmd_check(&tree, &formula, engine, all_engines, max_depth, budget, out)
        }
        Cmd::Types { tree, formula, dump_types } => {
            let rt = load_regular(&tree)?.minimize().canonical();
            let phi = load_formula(&formula)?;
            let table = compute_type_regular(&phi, &rt).map_err(|e| e.to_string())?;
            if dump_types {
                write!(out, "{}", table.dump()).map_err(|e| e.to_string())?;
            } else {
                for (s, t) in table.top().iter().enumerate() {
                    w(out, format_args!("{}\t{t}", rt.name(s)))?;
                }
            }
            Ok(EXIT_TRUE)
        }
        Cmd::Sup { tree, sets, dump_grammar } => {
            let rt = load_regular(&tree)?;
            let g = tree_to_grammar(&rt);
            if dump_grammar {
                write!(out, "{g}").map_err(|e| e.to_string())?;
            }
            let mut all = true;
            for s in &sets {
                let set: LetterSet = s
                    .split(',')
                    .map(str::trim)
                    .filter(|x| !x.is_empty())
                    .map(|x| Letter::parse_token(x).map_err(|e| e.to_string()))
                    .collect::<Result<_, _>>()?;
                let b = decide_sup(&g, &set).map_err(|e| e.to_string())?;
                all &= b;
                w(out, format_args!("{{{s}}}\t{b}"))?;
            }
            Ok(verdict(all))
        }
        Cmd::Pipeline { tree, formula, trace } => {
            let rt = load_regular(&tree)?;
            let phi = load_formula(&formula)?;
            let compiled = compile_sentence(&phi, &rt, trace.is_some()).map_err(|e| e.to_string())?;
            for (i, op) in compiled.ops.ops.iter().enumerate() {
                w(out, format_args!("{:>3} {op}", i + 1))?;
            }
            if let Some(dir) = trace {
                write_trace(&dir, &rt, &compiled).map_err(|e| format!("{}: {e}", dir.display()))?;
            }
            let o = &compiled.output;
            let b = o.letter(o.root()).is_some_and(|l| l.is_atom("tt"));
            w(out, b)?;
            Ok(verdict(b))
        }
        Cmd::Gen { what } => {
            let text = match what {
                GenCmd::Vault { m, n, p } => make_vault(VaultSpec { m, n, p }).map_err(|e| e.to_string())?.to_string(),
                GenCmd::T1 { p, depth } => {
                    make_t(T12Spec { which: Which::T1, p, depth }).map_err(|e| e.to_string())?.to_string()
                }
                GenCmd::T2 { p, depth } => {
                    make_t(T12Spec { which: Which::T2, p, depth }).map_err(|e| e.to_string())?.to_string()
                }
                GenCmd::Formula { seed, sentence } => {
                    let cfg = FormulaConfig { sentence, ..FormulaConfig::small() };
                    corpus::random_formula(&mut corpus::rng(seed), &cfg).to_string()
                }
                GenCmd::Regular { seed, states } => {
                    if states == 0 {
                        return Err("--states must be at least 1".into());
                    }
                    let ab = [Letter::atom("a"), Letter::atom("b")];
                    corpus::random_regular(&mut corpus::rng(seed), &ab, states, 0.3).to_string().trim_end().to_string()
                }
                GenCmd::Tree { seed, nodes } => {
                    let ab = [Letter::atom("a"), Letter::atom("b")];
                    corpus::random_tree(&mut corpus::rng(seed), &ab, nodes).to_string()
                }
            };
            w(out, text)?;
            Ok(EXIT_TRUE)
        }
        Cmd::Scan { formula, m_max, n_max, upper, lower } => {
            let psi = load_formula(&formula)?;
            let r = chain_period_scan(&psi, m_max, n_max, &upper, &lower).map_err(|e| e.to_string())?;
            w(out, "m\tn\ttype")?;
            for (m, n, id) in r.rows() {
                w(out, format_args!("{m}\t{n}\t{id}"))?;
            }
            match r.stable {
                Some((m0, n0, p)) => {
                    w(out, format_args!("stable m0={m0} n0={n0} period={p} reachable={}", r.reachable))?;
                    Ok(EXIT_TRUE)
                }
                None => {
                    w(out, format_args!("no stabilization within {m_max}x{n_max} reachable={}", r.reachable))?;
                    Ok(EXIT_FALSE)
                }
            }
        }
    }
}

fn cmd_check(
    tree: &Path,
    formula: &Path,
    engine: Engine,
    all: bool,
    max_depth: Option<usize>,
    budget: Option<u64>,
    out: &mut dyn Write,
) -> CmdResult {
    let t = load_tree(tree)?;
    let phi = load_formula(formula)?;
    if !phi.is_sentence() {
        return Err(format!("{}: formula has free variables", formula.display()));
    }
    let (rt, finite) = match t {
        AnyTree::Finite(f) => (RegularTree::from_finite(&f), Some(f)),
        AnyTree::Regular(r) => {
            let fin = r.unfold_finite();
            (r, fin)
        }
    };
    let brute_tree = finite.clone().or_else(|| max_depth.map(|d| rt.truncate(d)));
    let composer = || budget.map_or_else(Composer::new, Composer::with_budget);
    let run = |e: Engine| -> Result<bool, String> {
        match e {
            Engine::Fixpoint => regular::check_sentence_with(&mut composer(), &phi, &rt).map_err(|e| e.to_string()),
            Engine::Pipeline => {
                crate::pipeline::check_via_pipeline_with(composer(), &phi, &rt).map_err(|e| e.to_string())
            }
            Engine::Brute => {
                let t = brute_tree
                    .as_ref()
                    .ok_or("the brute-force engine needs a finite tree or --max-depth")?;
                eval_semantics(&phi, t, &Valuation::new()).map_err(|e| e.to_string())
            }
        }
    };
    if !all {
        let b = run(engine)?;
        w(out, b)?;
        return Ok(verdict(b));
    }
    // brute force on a truncation decides a different tree, so it only
    // joins the comparison when the input is finite
    let mut engines = vec![Engine::Fixpoint, Engine::Pipeline];
    if finite.is_some() {
        engines.push(Engine::Brute);
    }
    let mut results = Vec::new();
    for e in engines {
        let b = run(e)?;
        w(out, b)?;
        results.push(b);
    }
    if results.iter().all(|&b| b == results[0]) {
        Ok(verdict(results[0]))
    } else {
        Ok(EXIT_DISAGREE)
    }
}
