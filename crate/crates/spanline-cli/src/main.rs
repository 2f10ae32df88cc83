//! Command-line interface: compile regex formulas, evaluate spanners,
//! apply the skyline operator, analyze and validate domination rules,
//! export branching programs, run the algebra on automata files, and emit
//! the SAT-to-skyline reduction.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spanline::autops::{self, Va};
use spanline::domination::{template_var, validate_rule, DominationRule};
use spanline::error::Error;
use spanline::eval::evaluate;
use spanline::genbench::{sat_to_skyline, Cnf};
use spanline::nrobp::to_nrobp;
use spanline::regexformula::parse_letters_inferred;
use spanline::skyline::{analyze_rule, skyline_compiled, skyline_filter_threads};
use spanline::spancore::{Alphabet, Mapping, Var};

#[derive(Parser)]
#[command(
    name = "spanline",
    about = "Document spanners: regex-formula compilation, spanner algebra, skyline extraction",
    version,
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SpannerArg {
    /// Regex formula text, or a path to a formula file or VA JSON file
    spanner: String,
    /// Force the spanner argument to be read as a regex formula
    #[arg(long)]
    regex: bool,
    /// Force the spanner argument to be read as a VA JSON file
    #[arg(long)]
    va: bool,
}

#[derive(Args, Clone)]
struct DocArg {
    /// Path to a document file (alternatively use --doc)
    docfile: Option<PathBuf>,
    /// Document text given inline
    #[arg(long)]
    doc: Option<String>,
    /// Extra alphabet letters beyond those of the document and spanner
    #[arg(long, default_value = "")]
    alphabet: String,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a regex formula to a sequential VA (JSON on stdout or -o)
    Compile {
        #[command(flatten)]
        spanner: SpannerArg,
        /// Extra alphabet letters to declare
        #[arg(long, default_value = "")]
        alphabet: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Print state/transition counts and flags to stderr
        #[arg(long)]
        stats: bool,
    },
    /// Evaluate a spanner on a document; mappings as JSON lines
    Eval {
        #[command(flatten)]
        spanner: SpannerArg,
        #[command(flatten)]
        doc: DocArg,
    },
    /// Extract the skyline (maximal mappings) under a domination rule
    Skyline {
        #[command(flatten)]
        spanner: SpannerArg,
        #[command(flatten)]
        doc: DocArg,
        /// self | varinc | spaninc | ltr | spanlen | file:<path>
        #[arg(long)]
        rule: String,
        /// direct: evaluate then filter; compiled: compile the rule into
        /// the automaton first
        #[arg(long, default_value = "direct")]
        mode: String,
        /// Print input/output counts (and the constructed VA size in
        /// compiled mode) to stderr
        #[arg(long)]
        stats: bool,
        /// Worker threads for the pairwise domination filter
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Strict domination pairs, disjointness and hitting measures of a rule
    AnalyzeRule {
        /// self | varinc | spaninc | ltr | spanlen | file:<path>
        rule: String,
        #[command(flatten)]
        doc: DocArg,
    },
    /// Check the partial-order axioms of a rule on a document
    ValidateRule {
        /// self | varinc | spaninc | ltr | spanlen | file:<path>
        rule: String,
        #[command(flatten)]
        doc: DocArg,
        /// Variables to check (comma separated; at most 2 for exhaustive
        /// mode)
        #[arg(long, default_value = "x")]
        vars: String,
        /// Check axioms only on the support of the materialized relation
        #[arg(long)]
        relation_mode: bool,
    },
    /// Export the branching program of a spanner on a document
    Nrobp {
        #[command(flatten)]
        spanner: SpannerArg,
        #[command(flatten)]
        doc: DocArg,
        /// Write GraphViz output to this file
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Also print the model count
        #[arg(long)]
        count: bool,
    },
    /// Emit a reduction instance
    Reduce {
        #[command(subcommand)]
        which: ReduceCommand,
    },
    /// Binary spanner algebra on VA JSON files
    Va {
        /// union | concat | product | join | intersect | difference | project
        op: String,
        a: PathBuf,
        /// Second operand (omitted for project)
        b: Option<PathBuf>,
        /// Variables kept by project (comma separated)
        #[arg(long, default_value = "")]
        vars: String,
        /// Print state/transition counts and flags to stderr
        #[arg(long)]
        stats: bool,
    },
}

#[derive(Subcommand)]
enum ReduceCommand {
    /// SAT-to-skyline reduction from a DIMACS CNF file
    SatSkyline {
        cnf: PathBuf,
        /// Write <prefix>.va.json and <prefix>.manifest.json instead of a
        /// combined JSON object on stdout
        #[arg(short, long)]
        output: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own message; usage problems exit with 1
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Internal(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn read_file(path: &PathBuf) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &PathBuf, content: &str) -> Result<(), Error> {
    std::fs::write(path, content)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

/// The spanner argument is a VA JSON file, a formula file, or literal
/// formula text; sniffed by extension and content unless forced.
fn load_spanner(arg: &SpannerArg, alphabet: &Alphabet) -> Result<Va, Error> {
    if arg.regex && arg.va {
        return Err(Error::InvalidInput("--regex and --va are mutually exclusive".into()));
    }
    let path = PathBuf::from(&arg.spanner);
    let file_text = if !arg.regex && path.is_file() { Some(read_file(&path)?) } else { None };
    let looks_like_va = arg.va
        || path.extension().is_some_and(|e| e == "json")
        || file_text.as_deref().is_some_and(|t| t.trim_start().starts_with('{'));
    if looks_like_va {
        let text = file_text.ok_or_else(|| {
            Error::InvalidInput(format!("{} is not a readable VA file", arg.spanner))
        })?;
        let json: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("bad VA JSON: {e}")))?;
        return Va::from_json(&json);
    }
    let text = file_text.unwrap_or_else(|| arg.spanner.clone());
    compile_formula_text(&text, alphabet)
}

/// Two-pass compilation of formula text: a first parse discovers the
/// letters, and a reparse against the full working alphabet settles
/// letter-versus-variable readings of unspaced runs like `bx{...}`.
fn compile_formula_text(text: &str, alphabet: &Alphabet) -> Result<Va, Error> {
    let discovered = parse_letters_inferred(text)?;
    let mut letters: BTreeSet<char> = discovered.letters();
    letters.extend(alphabet.letters());
    let sigma = Alphabet::new(letters);
    let formula = spanline::regexformula::parse(text, &sigma)?;
    formula.compile(&sigma)
}

fn load_doc_text(doc: &DocArg) -> Result<String, Error> {
    match (&doc.docfile, &doc.doc) {
        (Some(_), Some(_)) => {
            Err(Error::InvalidInput("give either a document file or --doc, not both".into()))
        }
        (Some(path), None) => {
            let text = read_file(path)?;
            Ok(text.strip_suffix('\n').unwrap_or(&text).to_string())
        }
        (None, Some(text)) => Ok(text.clone()),
        (None, None) => Err(Error::InvalidInput("no document: give a file or --doc".into())),
    }
}

/// The working alphabet: spanner letters, document letters, and any extra
/// letters requested on the command line.
fn working_alphabet(doc_text: &str, extra: &str, spanner: Option<&Va>) -> Alphabet {
    let mut letters: BTreeSet<char> = doc_text.chars().collect();
    letters.extend(extra.chars());
    if let Some(va) = spanner {
        letters.extend(va.alphabet().letters());
    }
    Alphabet::new(letters)
}

fn load_rule(name: &str, alphabet: &Alphabet) -> Result<DominationRule, Error> {
    if let Some(path) = name.strip_prefix("file:") {
        return load_rule_file(&PathBuf::from(path), alphabet);
    }
    DominationRule::builtin(name, alphabet)
}

/// Rule files are either JSON `{"kind": "variable-wise"|"explicit",
/// "va": ...}` or formula text with an optional `# variable-wise` /
/// `# explicit` header line (variable-wise is the default).
fn load_rule_file(path: &PathBuf, alphabet: &Alphabet) -> Result<DominationRule, Error> {
    let text = read_file(path)?;
    let name = format!("file:{}", path.display());
    if text.trim_start().starts_with('{') {
        let json: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("bad rule JSON: {e}")))?;
        let kind = json
            .get("kind")
            .and_then(|k| k.as_str())
            .ok_or_else(|| Error::InvalidInput("rule JSON needs a \"kind\" header".into()))?;
        let va = Va::from_json(
            json.get("va").ok_or_else(|| Error::InvalidInput("rule JSON needs \"va\"".into()))?,
        )?;
        return match kind {
            "variable-wise" => DominationRule::from_template(&name, va),
            "explicit" => Ok(DominationRule::Regular { name, va }),
            other => Err(Error::InvalidInput(format!("unknown rule kind {other:?}"))),
        };
    }
    let mut kind = "variable-wise";
    let mut body = Vec::new();
    for line in text.lines() {
        if let Some(header) = line.trim().strip_prefix('#') {
            match header.trim() {
                "variable-wise" => kind = "variable-wise",
                "explicit" => kind = "explicit",
                other => {
                    return Err(Error::InvalidInput(format!("unknown rule header {other:?}")))
                }
            }
        } else {
            body.push(line);
        }
    }
    let va = compile_formula_text(&body.join("\n"), alphabet)?;
    match kind {
        "variable-wise" => DominationRule::from_template(&name, va),
        _ => Ok(DominationRule::Regular { name, va }),
    }
}

fn print_mappings(mappings: &std::collections::BTreeSet<Mapping>, universe: &BTreeSet<Var>) {
    for m in mappings {
        println!("{}", m.to_json(universe));
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Compile { spanner, alphabet, output, stats } => {
            let va = load_spanner(&spanner, &Alphabet::from_letters(&alphabet))?;
            let json = serde_json::to_string_pretty(&va.to_json())
                .expect("serialization cannot fail");
            match output {
                Some(path) => write_file(&path, &json)?,
                None => println!("{json}"),
            }
            if stats {
                eprintln!("{}", serde_json::to_string(&va.stats()).unwrap());
            }
            Ok(())
        }
        Command::Eval { spanner, doc } => {
            let doc_text = load_doc_text(&doc)?;
            let va = load_spanner(&spanner, &working_alphabet(&doc_text, &doc.alphabet, None))?;
            let alphabet = working_alphabet(&doc_text, &doc.alphabet, Some(&va));
            let va = va.widen(alphabet.clone(), va.variables().clone())?;
            let d = alphabet.document(&doc_text)?;
            let mappings = evaluate(&va, &d)?;
            print_mappings(&mappings, va.variables());
            Ok(())
        }
        Command::Skyline { spanner, doc, rule, mode, stats, threads } => {
            let doc_text = load_doc_text(&doc)?;
            let va = load_spanner(&spanner, &working_alphabet(&doc_text, &doc.alphabet, None))?;
            let alphabet = working_alphabet(&doc_text, &doc.alphabet, Some(&va));
            let va = va.widen(alphabet.clone(), va.variables().clone())?;
            let d = alphabet.document(&doc_text)?;
            let rule = load_rule(&rule, &alphabet)?;
            let extracted = evaluate(&va, &d)?;
            let (sky, constructed) = match mode.as_str() {
                "direct" => (skyline_filter_threads(&extracted, &d, &rule, threads)?, None),
                "compiled" => {
                    let compiled = skyline_compiled(&va, &rule)?;
                    (evaluate(&compiled, &d)?, Some(compiled.stats()))
                }
                other => {
                    return Err(Error::InvalidInput(format!(
                        "unknown mode {other:?} (use direct or compiled)"
                    )))
                }
            };
            print_mappings(&sky, va.variables());
            if stats {
                let mut block = serde_json::json!({
                    "input_mappings": extracted.len(),
                    "output_mappings": sky.len(),
                    "rule": rule.name(),
                    "mode": mode,
                });
                if let Some(s) = constructed {
                    block["constructed_va"] = serde_json::to_value(s).unwrap();
                }
                eprintln!("{block}");
            }
            Ok(())
        }
        Command::AnalyzeRule { rule, doc } => {
            let doc_text = load_doc_text(&doc)?;
            let alphabet = working_alphabet(&doc_text, &doc.alphabet, None);
            let d = alphabet.document(&doc_text)?;
            let rule = load_rule(&rule, &alphabet)?;
            let analysis = analyze_rule(&rule, &d)?;
            println!("{}", serde_json::to_string_pretty(&analysis.to_json()).unwrap());
            Ok(())
        }
        Command::ValidateRule { rule, doc, vars, relation_mode } => {
            let doc_text = load_doc_text(&doc)?;
            let alphabet = working_alphabet(&doc_text, &doc.alphabet, None);
            let d = alphabet.document(&doc_text)?;
            let rule = load_rule(&rule, &alphabet)?;
            let vars: BTreeSet<Var> = if vars.is_empty() {
                [template_var()].into()
            } else {
                vars.split(',').map(Var::parse).collect::<Result<_, _>>()?
            };
            let report = validate_rule(&rule, &d, &vars, !relation_mode)?;
            println!("{}", serde_json::to_string_pretty(&report.to_json()).unwrap());
            Ok(())
        }
        Command::Nrobp { spanner, doc, dot, count } => {
            let doc_text = load_doc_text(&doc)?;
            let va = load_spanner(&spanner, &working_alphabet(&doc_text, &doc.alphabet, None))?;
            let alphabet = working_alphabet(&doc_text, &doc.alphabet, Some(&va));
            let va = va.widen(alphabet.clone(), va.variables().clone())?;
            let d = alphabet.document(&doc_text)?;
            let g = to_nrobp(&va, &d)?;
            let mut block = serde_json::json!({
                "nodes": g.num_nodes(),
                "edges": g.num_edges(),
                "variables": g.vars().iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                "read_once": g.check_read_once(),
            });
            if count {
                block["models"] = serde_json::json!(g.count_models()?);
            }
            println!("{}", serde_json::to_string_pretty(&block).unwrap());
            if let Some(path) = dot {
                write_file(&path, &g.to_dot())?;
            }
            Ok(())
        }
        Command::Reduce { which } => match which {
            ReduceCommand::SatSkyline { cnf, output } => {
                let cnf = Cnf::parse_dimacs(&read_file(&cnf)?)?;
                let red = sat_to_skyline(&cnf)?;
                let manifest = serde_json::json!({
                    "document": red.doc.to_string(),
                    "threshold": red.threshold,
                    "rule": red.rule_name,
                    "formula": red.formula.to_string(),
                });
                let va_json = red.va.to_json();
                match output {
                    Some(prefix) => {
                        write_file(
                            &PathBuf::from(format!("{prefix}.va.json")),
                            &serde_json::to_string_pretty(&va_json).unwrap(),
                        )?;
                        write_file(
                            &PathBuf::from(format!("{prefix}.manifest.json")),
                            &serde_json::to_string_pretty(&manifest).unwrap(),
                        )?;
                    }
                    None => {
                        let combined = serde_json::json!({"va": va_json, "manifest": manifest});
                        println!("{}", serde_json::to_string_pretty(&combined).unwrap());
                    }
                }
                Ok(())
            }
        },
        Command::Va { op, a, b, vars, stats } => {
            let load = |p: &PathBuf| -> Result<Va, Error> {
                let json: serde_json::Value = serde_json::from_str(&read_file(p)?)
                    .map_err(|e| Error::InvalidInput(format!("bad VA JSON: {e}")))?;
                Va::from_json(&json)
            };
            let a = load(&a)?;
            let result = if op == "project" {
                let keep: BTreeSet<Var> = if vars.is_empty() {
                    BTreeSet::new()
                } else {
                    vars.split(',').map(Var::parse).collect::<Result<_, _>>()?
                };
                autops::project(&a, &keep)?
            } else {
                let b = b.ok_or_else(|| {
                    Error::InvalidInput(format!("operation {op} needs two operands"))
                })?;
                let b = load(&b)?;
                match op.as_str() {
                    "union" => autops::union(&a, &b)?,
                    "concat" => autops::concat(&a, &b)?,
                    "product" => autops::cartesian_product(&a, &b)?,
                    "join" => autops::join(&a, &b)?,
                    "intersect" => autops::intersection(&a, &b)?,
                    "difference" => autops::difference(&a, &b)?,
                    other => {
                        return Err(Error::InvalidInput(format!("unknown operation {other:?}")))
                    }
                }
            };
            println!("{}", serde_json::to_string_pretty(&result.to_json()).unwrap());
            if stats {
                eprintln!("{}", serde_json::to_string(&result.stats()).unwrap());
            }
            Ok(())
        }
    }
}
