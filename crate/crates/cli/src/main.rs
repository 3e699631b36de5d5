//! Command-line entry point. Every command prints machine-readable JSON
//! on stdout (pretty-printed with --pretty) and exits 0 on success or a
//! holding claim, 1 on a negative answer (countermodel found, check
//! failed, derivation rejected), 2 on usage or resource errors.

use clap::{Args, Parser, Subcommand};
use enlogic::catalog::{build_catalog, CatalogConfig, CountermodelCatalog};
use enlogic::decide::{search_countermodel, SearchConfig, Verdict};
use enlogic::neighborhood::{check_frame, NeighborhoodModel};
use enlogic::oracle::{oracle_validity, OracleVerdict};
use enlogic::prover::{check_derivation, Derivation};
use enlogic::sandbox::{
    ecn4_report, run_g, verify_run, Check, CheckReport, CheckStatus, GTrace, GVariant, Scenario,
};
use enlogic::{Formula, Logic};
use serde_json::{json, Value};
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(name = "enlogic", version, about = "Workbench for the modal logics EN, ECN, ENP, END, ECNP")]
struct Cli {
    /// Pretty-print the JSON output.
    #[arg(long, global = true)]
    pretty: bool,
    /// Seed for randomized suites; accepted everywhere so that scripted
    /// pipelines stay reproducible.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct FormulaInput {
    /// Formula text in the workbench grammar.
    #[arg(long)]
    formula: Option<String>,
    /// File containing the formula text.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a formula and print its canonical form, code, and closure.
    Parse(FormulaInput),
    /// Search for a countermodel (exit 1 when one is found).
    Decide {
        #[arg(long)]
        logic: String,
        #[command(flatten)]
        input: FormulaInput,
        /// Maximum world count to search.
        #[arg(long, default_value_t = 3)]
        bound: usize,
    },
    /// Exhaustive small-model oracle (frames up to --bound <= 3 worlds).
    Oracle {
        #[arg(long)]
        logic: String,
        #[command(flatten)]
        input: FormulaInput,
        #[arg(long, default_value_t = 3)]
        bound: usize,
    },
    /// Check the frame conditions of a logic on a model file.
    CheckFrame {
        #[arg(long)]
        logic: String,
        /// Model JSON ("-" for stdin).
        #[arg(long)]
        file: String,
    },
    /// Validate a model file (or a decide verdict piped in), optionally
    /// against a logic and a formula it is supposed to falsify.
    CheckModel {
        /// Model or verdict JSON ("-" for stdin).
        #[arg(long)]
        file: String,
        #[arg(long)]
        logic: Option<String>,
        /// Formula the model's witness world must falsify.
        #[arg(long)]
        formula: Option<String>,
        /// Witness world; defaults to the verdict's witness when piping.
        #[arg(long)]
        witness: Option<u64>,
    },
    /// Check a Hilbert-style derivation file.
    CheckDerivation {
        #[arg(long)]
        logic: String,
        #[arg(long)]
        file: PathBuf,
    },
    /// Build the countermodel catalog for a logic.
    Catalog {
        #[arg(long)]
        logic: String,
        #[arg(long)]
        count: usize,
    },
    /// Run the staged sandbox construction over a scenario and catalog.
    Simulate {
        /// g0 or g1.
        #[arg(long)]
        variant: String,
        /// Expected catalog logic (cross-checked).
        #[arg(long)]
        logic: Option<String>,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        /// Comma-separated checks: E, C, ConL, ConS, ECN4.
        #[arg(long)]
        verify: Option<String>,
    },
    /// Re-run checks on a saved trace.
    Verify {
        #[arg(long)]
        trace: PathBuf,
        /// Comma-separated checks: E, C, ConL, ConS, ECN4.
        #[arg(long)]
        verify: String,
    },
}

struct Failure {
    message: String,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { message: e.to_string() }
    }
}

fn node_budget() -> u64 {
    std::env::var("WORKBENCH_NODE_BUDGET")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(20_000_000)
}

fn read_input(path: &str) -> Result<String, Failure> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        Ok(buf)
    } else {
        Ok(std::fs::read_to_string(path)?)
    }
}

fn parse_logic(s: &str) -> Result<Logic, Failure> {
    Logic::from_str(s).map_err(|e| Failure { message: e })
}

fn formula_from(input: &FormulaInput) -> Result<Formula, Failure> {
    let text = match (&input.formula, &input.file) {
        (Some(t), None) => t.clone(),
        (None, Some(p)) => std::fs::read_to_string(p)?,
        _ => {
            return Err(Failure {
                message: "provide exactly one of --formula or --file".into(),
            })
        }
    };
    Ok(text.trim().parse::<Formula>()?)
}

fn parse_checks(list: &str) -> Result<Vec<String>, Failure> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item {
            "E" | "C" | "ConL" | "ConS" | "ECN4" => out.push(item.to_string()),
            other => {
                return Err(Failure {
                    message: format!(
                        "unknown check {other:?}; expected E, C, ConL, ConS or ECN4"
                    ),
                })
            }
        }
    }
    Ok(out)
}

fn run_checks(trace: &GTrace, names: &[String]) -> Vec<CheckReport> {
    names
        .iter()
        .map(|name| match name.as_str() {
            "E" => verify_run(trace, &Check::E),
            "C" => verify_run(trace, &Check::C),
            "ConL" => verify_run(trace, &Check::ConL),
            "ConS" => verify_run(trace, &Check::ConS),
            _ => ecn4_report(trace),
        })
        .collect()
}

fn dispatch(cli: &Cli) -> Result<(Value, u8), Failure> {
    match &cli.cmd {
        Cmd::Parse(input) => {
            let f = formula_from(input)?;
            let closure: Vec<String> =
                f.subformula_closure().iter().map(|g| g.to_string()).collect();
            Ok((
                json!({
                    "canonical": f.to_string(),
                    "code": f.code().to_string(),
                    "atoms": f.atoms().into_iter().collect::<Vec<_>>(),
                    "modal_depth": f.modal_depth(),
                    "closure": closure,
                }),
                0,
            ))
        }
        Cmd::Decide { logic, input, bound } => {
            let logic = parse_logic(logic)?;
            let f = formula_from(input)?;
            let cfg = SearchConfig { max_worlds: *bound, node_budget: node_budget() };
            let verdict = search_countermodel(logic, &f, &cfg)?;
            let exit = match &verdict {
                Verdict::Countermodel { .. } => 1,
                Verdict::NoCountermodelUpTo { .. } => 0,
            };
            Ok((serde_json::to_value(&verdict)?, exit))
        }
        Cmd::Oracle { logic, input, bound } => {
            let logic = parse_logic(logic)?;
            let f = formula_from(input)?;
            match oracle_validity(logic, &f, *bound)? {
                OracleVerdict::ValidUpTo { bound } => {
                    Ok((json!({"verdict": "valid_up_to", "bound": bound}), 0))
                }
                OracleVerdict::Countermodel { model, witness } => Ok((
                    json!({
                        "verdict": "countermodel",
                        "witness": witness,
                        "model": serde_json::to_value(&model)?,
                    }),
                    1,
                )),
            }
        }
        Cmd::CheckFrame { logic, file } => {
            let logic = parse_logic(logic)?;
            let model: NeighborhoodModel = serde_json::from_str(&read_input(file)?)?;
            match check_frame(model.frame(), logic) {
                Ok(()) => Ok((json!({"ok": true, "logic": logic.to_string()}), 0)),
                Err(v) => Ok((
                    json!({
                        "ok": false,
                        "logic": logic.to_string(),
                        "violation": serde_json::to_value(&v)?,
                        "message": v.to_string(),
                    }),
                    1,
                )),
            }
        }
        Cmd::CheckModel { file, logic, formula, witness } => {
            let raw = read_input(file)?;
            let value: Value = serde_json::from_str(&raw)?;
            // accept either a bare model or a decide verdict
            let (model_value, verdict_witness) = if value.get("model").is_some() {
                (value["model"].clone(), value.get("witness").and_then(Value::as_u64))
            } else {
                (value, None)
            };
            let model: NeighborhoodModel = serde_json::from_value(model_value)?;
            let mut report = json!({"ok": true, "worlds": model.worlds().len()});
            if let Some(l) = logic {
                let l = parse_logic(l)?;
                if let Err(v) = check_frame(model.frame(), l) {
                    return Ok((
                        json!({"ok": false, "message": v.to_string()}),
                        1,
                    ));
                }
                report["logic"] = json!(l.to_string());
            }
            if let Some(fsrc) = formula {
                let f: Formula = fsrc.parse()?;
                let w = witness.or(verdict_witness).ok_or_else(|| Failure {
                    message: "a witness world is required to check falsification".into(),
                })?;
                let holds = model.eval(w, &f)?;
                if holds {
                    return Ok((
                        json!({
                            "ok": false,
                            "message": format!("{f} holds at the witness world {w}"),
                        }),
                        1,
                    ));
                }
                report["falsified_at"] = json!(w);
            }
            Ok((report, 0))
        }
        Cmd::CheckDerivation { logic, file } => {
            let logic = parse_logic(logic)?;
            let d = Derivation::from_json(logic, &std::fs::read_to_string(file)?)?;
            match check_derivation(&d) {
                Ok(()) => Ok((
                    json!({
                        "accepted": true,
                        "logic": logic.to_string(),
                        "conclusion": d.conclusion().map(|f| f.to_string()),
                    }),
                    0,
                )),
                Err(e) => Ok((
                    json!({"accepted": false, "step": e.step, "reason": e.reason}),
                    1,
                )),
            }
        }
        Cmd::Catalog { logic, count } => {
            let logic = parse_logic(logic)?;
            let cfg = CatalogConfig { node_budget: node_budget(), ..CatalogConfig::default() };
            let cat = build_catalog(logic, *count, &cfg)?;
            Ok((serde_json::to_value(&cat)?, 0))
        }
        Cmd::Simulate { variant, logic, scenario, catalog, verify } => {
            let variant = GVariant::from_str(variant).map_err(|m| Failure { message: m })?;
            let sc: Scenario = serde_json::from_str(&std::fs::read_to_string(scenario)?)?;
            let cat: CountermodelCatalog =
                serde_json::from_str(&std::fs::read_to_string(catalog)?)?;
            if let Some(l) = logic {
                let l = parse_logic(l)?;
                if l != cat.logic {
                    return Err(Failure {
                        message: format!("catalog is for {}, not {}", cat.logic, l),
                    });
                }
            }
            let trace = run_g(variant, &sc, &cat)?;
            let names = verify.as_deref().map(parse_checks).transpose()?.unwrap_or_default();
            let reports = run_checks(&trace, &names);
            let failed = reports.iter().any(|r| r.status == CheckStatus::Failed);
            Ok((
                json!({
                    "trace": serde_json::to_value(&trace)?,
                    "checks": serde_json::to_value(&reports)?,
                }),
                u8::from(failed),
            ))
        }
        Cmd::Verify { trace, verify } => {
            let trace: GTrace = serde_json::from_str(&std::fs::read_to_string(trace)?)?;
            let names = parse_checks(verify)?;
            let reports = run_checks(&trace, &names);
            let failed = reports.iter().any(|r| r.status == CheckStatus::Failed);
            Ok((json!({"checks": serde_json::to_value(&reports)?}), u8::from(failed)))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok((value, exit)) => {
            let out = if cli.pretty {
                serde_json::to_string_pretty(&value).expect("serializable")
            } else {
                serde_json::to_string(&value).expect("serializable")
            };
            println!("{out}");
            ExitCode::from(exit)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(2)
        }
    }
}
