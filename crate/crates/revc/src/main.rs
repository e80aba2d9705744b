//! Command-line driver for the compiler.
//!
//! Exit codes: 0 on success, 1 for user errors (bad files, parse or type
//! errors, wrong arguments), 2 for semantic failures (a program halting
//! with `err`, a verification mismatch), 3 for exhausted resources (fuel,
//! optimizer rounds, too many input bits to enumerate).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::rc::Rc;

use clap::{Parser, Subcommand};

use revc::circuit::Circuit;
use revc::eval::{eval, value_bits, EvalResult};
use revc::lifting::{lift_program, lifted_run, LiftedRunError};
use revc::machine::{input_interface, synth, MachineState, MachineStep, SynthError};
use revc::optimizer::{equivalent, optimize_with, Pass};
use revc::syntax::ast::build::{app, ff, pair, tt};
use revc::syntax::{parse_program, parse_term_str, pretty_program, pretty_term, SourceProgram, Term, TypeExpr};
use revc::typecheck::{check, check_program, normalize};

#[derive(Parser)]
#[command(name = "revc", version, about = "Compile first-order functional programs to reversible circuits")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and typecheck a program, printing the entry point's type
    Check {
        /// Source file (.pcfl)
        file: PathBuf,
    },
    /// Evaluate the entry point applied to literal arguments
    Run {
        /// Source file (.pcfl)
        file: PathBuf,
        /// Argument terms, one per parameter, e.g. --arg tt --arg '<tt,ff>'
        #[arg(long = "arg", value_name = "TERM")]
        args: Vec<String>,
        /// Evaluation step budget
        #[arg(long, default_value_t = 10_000_000)]
        fuel: u64,
    },
    /// Synthesize a reversible circuit with the abstract machine
    Synth {
        /// Source file (.pcfl)
        file: PathBuf,
        /// Where to write the circuit JSON (stdout when omitted)
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write one JSON line per machine step: term, gates, next wire
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
        /// Machine step budget
        #[arg(long, default_value_t = 10_000_000)]
        fuel: u64,
    },
    /// Run a circuit on an input bit-string
    Sim {
        /// Circuit JSON file
        circuit: PathBuf,
        /// Input bits, one character per input wire, e.g. 0110
        #[arg(long)]
        input: String,
    },
    /// Check the synthesized circuit against evaluation on every input
    Verify {
        /// Source file (.pcfl)
        file: PathBuf,
        /// Refuse to enumerate more input bits than this
        #[arg(long, default_value_t = 10)]
        max_bits: u32,
        /// Step budget per run
        #[arg(long, default_value_t = 10_000_000)]
        fuel: u64,
    },
    /// Optimize a circuit
    Opt {
        /// Circuit JSON file
        circuit: PathBuf,
        /// Where to write the optimized JSON (stdout when omitted)
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Subset of passes: constant, dead, copy, xor, shuffle
        #[arg(long, value_delimiter = ',', value_name = "PASS")]
        passes: Option<Vec<String>>,
        /// Exhaustively check the result against the input circuit
        #[arg(long, value_name = "MAX_BITS")]
        verify: Option<u32>,
    },
    /// Emit the state-threading lifted program as source
    Lift {
        /// Source file (.pcfl)
        file: PathBuf,
        /// Where to write the lifted source (stdout when omitted)
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build the circuit by evaluating the lifted program
    LiftedRun {
        /// Source file (.pcfl)
        file: PathBuf,
        /// Where to write the circuit JSON (stdout when omitted)
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Evaluation step budget
        #[arg(long, default_value_t = 10_000_000)]
        fuel: u64,
    },
    /// Print a circuit as ASCII art
    Render {
        /// Circuit JSON file
        circuit: PathBuf,
    },
}

struct Failure {
    code: u8,
    message: String,
}

type R<T> = Result<T, Failure>;

fn user(message: String) -> Failure {
    Failure { code: 1, message }
}

fn semantic(message: String) -> Failure {
    Failure { code: 2, message }
}

fn resource(message: String) -> Failure {
    Failure { code: 3, message }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version are not errors; anything else is misuse
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read_file(path: &Path) -> R<String> {
    std::fs::read_to_string(path).map_err(|e| user(format!("cannot read {}: {e}", path.display())))
}

fn load_program(path: &Path) -> R<SourceProgram> {
    let src = read_file(path)?;
    let p = parse_program(&src).map_err(|e| user(format!("{}: {e}", path.display())))?;
    check_program(&p).map_err(|e| user(format!("{}: {e}", path.display())))?;
    Ok(p)
}

fn load_circuit(path: &Path) -> R<Circuit> {
    let src = read_file(path)?;
    Circuit::from_json(&src).map_err(|e| user(format!("{}: {e}", path.display())))
}

fn emit(output: &Option<PathBuf>, content: &str) -> R<()> {
    match output {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| user(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn synth_failure(e: SynthError) -> Failure {
    match e {
        SynthError::Interface(m) => user(m),
        SynthError::Halted => semantic(
            "the machine halted: the program reached err or joined branches of different shapes"
                .into(),
        ),
        SynthError::OutOfFuel => resource("the machine ran out of fuel".into()),
        SynthError::Stuck(r) => semantic(format!("the machine got stuck: {r}")),
    }
}

/// The domains of the entry type, one per expected argument.
fn domains(ty: &Rc<TypeExpr>) -> (Vec<Rc<TypeExpr>>, Rc<TypeExpr>) {
    let mut doms = Vec::new();
    let mut cur = normalize(ty);
    while let TypeExpr::Arrow(d, r) = &*cur.clone() {
        doms.push(d.clone());
        cur = r.clone();
    }
    (doms, cur)
}

/// A literal of the given product-of-bits type, consuming input bits in
/// the same left-to-right order the machine numbers its wires.
fn bool_tree(ty: &TypeExpr, bits: &[bool], next: &mut usize) -> Rc<Term> {
    match ty {
        TypeExpr::Prod(a, b) => {
            let l = bool_tree(a, bits, next);
            let r = bool_tree(b, bits, next);
            pair(l, r)
        }
        _ => {
            let b = bits[*next];
            *next += 1;
            if b {
                tt()
            } else {
                ff()
            }
        }
    }
}

fn dispatch(cmd: Cmd) -> R<()> {
    match cmd {
        Cmd::Check { file } => {
            let p = load_program(&file)?;
            let entry = p.entry();
            println!("{} : {}", entry.name, entry.ty);
            Ok(())
        }
        Cmd::Run { file, args, fuel } => {
            let p = load_program(&file)?;
            let entry = p.entry();
            let (doms, _) = domains(&entry.ty);
            if args.len() != doms.len() {
                return Err(user(format!(
                    "'{}' takes {} arguments, got {}",
                    entry.name,
                    doms.len(),
                    args.len()
                )));
            }
            let mut term = p.entry_closed_term();
            for (i, (src, dom)) in args.iter().zip(&doms).enumerate() {
                let arg = parse_term_str(src)
                    .map_err(|e| user(format!("argument {}: {e}", i + 1)))?;
                check(&mut Vec::new(), &arg, dom)
                    .map_err(|e| user(format!("argument {}: {e}", i + 1)))?;
                term = app(term, arg);
            }
            match eval(&term, fuel) {
                EvalResult::Value(v) => {
                    println!("{}", pretty_term(&v));
                    Ok(())
                }
                EvalResult::Error => Err(semantic("the program halted with err".into())),
                EvalResult::OutOfFuel(_) => Err(resource("evaluation ran out of fuel".into())),
                EvalResult::Stuck { reason, .. } => {
                    Err(semantic(format!("evaluation got stuck: {reason}")))
                }
            }
        }
        Cmd::Synth { file, output, trace, fuel } => {
            let p = load_program(&file)?;
            let entry = p.entry();
            let c = match trace {
                None => synth(&p.entry_closed_term(), &entry.ty, fuel).map_err(synth_failure)?,
                Some(trace_path) => {
                    let (args, n) = input_interface(&entry.ty).map_err(synth_failure)?;
                    let mut term = p.entry_closed_term();
                    for a in args {
                        term = app(term, a);
                    }
                    let mut st = MachineState::new(term, n);
                    let mut out = std::fs::File::create(&trace_path).map_err(|e| {
                        user(format!("cannot write {}: {e}", trace_path.display()))
                    })?;
                    let mut line = |st: &MachineState| -> R<()> {
                        let record = serde_json::json!({
                            "term": pretty_term(&st.term),
                            "gates": st.circuit.len(),
                            "next_fresh": st.next_fresh,
                        });
                        writeln!(out, "{record}").map_err(|e| {
                            user(format!("cannot write {}: {e}", trace_path.display()))
                        })
                    };
                    line(&st)?;
                    let mut spent = 0;
                    loop {
                        if spent == fuel {
                            return Err(synth_failure(SynthError::OutOfFuel));
                        }
                        spent += 1;
                        match st.step() {
                            MachineStep::Stepped(_) => line(&st)?,
                            MachineStep::Finished => break,
                            MachineStep::ErrHalt => {
                                return Err(synth_failure(SynthError::Halted))
                            }
                            MachineStep::Stuck(r) => {
                                return Err(synth_failure(SynthError::Stuck(r)))
                            }
                        }
                    }
                    st.finish().map_err(|r| synth_failure(SynthError::Stuck(r)))?
                }
            };
            if let Some(path) = &output {
                eprintln!(
                    "wrote {} wires, {} gates to {}",
                    c.num_wires,
                    c.gates.len(),
                    path.display()
                );
            }
            emit(&output, &(c.to_json() + "\n"))
        }
        Cmd::Sim { circuit, input } => {
            let c = load_circuit(&circuit)?;
            if input.len() != c.inputs.len() {
                return Err(user(format!(
                    "the circuit has {} inputs, but the input string has {} bits",
                    c.inputs.len(),
                    input.len()
                )));
            }
            let bits = input
                .chars()
                .map(|ch| match ch {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    other => Err(user(format!("input bits must be 0 or 1, found '{other}'"))),
                })
                .collect::<R<Vec<bool>>>()?;
            let out: String =
                c.execute(&bits).iter().map(|&b| if b { '1' } else { '0' }).collect();
            println!("{out}");
            Ok(())
        }
        Cmd::Verify { file, max_bits, fuel } => {
            let p = load_program(&file)?;
            let entry = p.entry();
            let c = synth(&p.entry_closed_term(), &entry.ty, fuel).map_err(synth_failure)?;
            let n = c.inputs.len() as u32;
            if n > max_bits {
                return Err(resource(format!(
                    "checking {n} input bits needs 2^{n} runs; raise --max-bits past {max_bits} to allow it"
                )));
            }
            let (doms, _) = domains(&entry.ty);
            let total: u64 = 1 << n;
            for v in 0..total {
                let bits: Vec<bool> = (0..n).map(|i| v >> i & 1 == 1).collect();
                let circuit_out = c.execute(&bits);
                let mut term = p.entry_closed_term();
                let mut next = 0;
                for dom in &doms {
                    term = app(term, bool_tree(dom, &bits, &mut next));
                }
                let value = match eval(&term, fuel) {
                    EvalResult::Value(value) => value,
                    EvalResult::Error => {
                        return Err(semantic(format!(
                            "evaluation halted with err on input {bits:?} but the circuit did not"
                        )))
                    }
                    EvalResult::OutOfFuel(_) => {
                        return Err(resource("evaluation ran out of fuel".into()))
                    }
                    EvalResult::Stuck { reason, .. } => {
                        return Err(semantic(format!("evaluation got stuck: {reason}")))
                    }
                };
                let expected = value_bits(&value).ok_or_else(|| {
                    semantic(format!("the value {} carries no bits", pretty_term(&value)))
                })?;
                if expected != circuit_out {
                    return Err(semantic(format!(
                        "mismatch on input {bits:?}: circuit {circuit_out:?}, evaluation {expected:?}"
                    )));
                }
            }
            println!("{total}/{total} inputs match");
            Ok(())
        }
        Cmd::Opt { circuit, output, passes, verify } => {
            let c = load_circuit(&circuit)?;
            let passes = match passes {
                None => Pass::ALL.to_vec(),
                Some(names) => names
                    .iter()
                    .map(|s| s.parse())
                    .collect::<Result<Vec<Pass>, String>>()
                    .map_err(user)?,
            };
            let (o, rounds, converged) = optimize_with(&c, &passes, 100);
            if !converged {
                eprintln!("warning: stopped after {rounds} rounds without reaching a fixpoint");
            }
            eprintln!(
                "gates: {} -> {}, wires: {} -> {} ({} rounds)",
                c.gates.len(),
                o.gates.len(),
                c.num_wires,
                o.num_wires,
                rounds
            );
            if let Some(mb) = verify {
                match equivalent(&c, &o, mb) {
                    Err(m) => return Err(resource(m)),
                    Ok(false) => {
                        return Err(semantic(
                            "the optimized circuit is not equivalent to the original".into(),
                        ))
                    }
                    Ok(true) => {
                        eprintln!("verified on all {} inputs", 1u64 << c.inputs.len())
                    }
                }
            }
            emit(&output, &(o.to_json() + "\n"))
        }
        Cmd::Lift { file, output } => {
            let p = load_program(&file)?;
            let lifted = lift_program(&p).map_err(|e| user(e.to_string()))?;
            emit(&output, &pretty_program(&lifted))
        }
        Cmd::LiftedRun { file, output, fuel } => {
            let p = load_program(&file)?;
            let lc = lifted_run(&p, fuel).map_err(|e| match e {
                LiftedRunError::Type(t) => user(t.to_string()),
                LiftedRunError::Interface(m) => user(m),
                LiftedRunError::Halted => semantic(
                    "evaluation of the lifted program halted: the program reached err or joined branches of different shapes".into(),
                ),
                LiftedRunError::OutOfFuel => resource("evaluation ran out of fuel".into()),
                LiftedRunError::Stuck(m) => semantic(format!("evaluation got stuck: {m}")),
                LiftedRunError::Decode(m) => semantic(format!("cannot decode the result: {m}")),
            })?;
            let (doms, _) = domains(&p.entry().ty);
            let n: usize = doms.iter().map(|d| count_bits(d)).sum();
            let c = Circuit {
                num_wires: lc.num_wires.max(n),
                inputs: (0..n).collect(),
                outputs: lc.outputs,
                gates: lc.gates,
            };
            c.validate().map_err(|m| semantic(format!("decoded an invalid circuit: {m}")))?;
            if let Some(path) = &output {
                eprintln!(
                    "wrote {} wires, {} gates to {}",
                    c.num_wires,
                    c.gates.len(),
                    path.display()
                );
            }
            emit(&output, &(c.to_json() + "\n"))
        }
        Cmd::Render { circuit } => {
            let c = load_circuit(&circuit)?;
            print!("{}", c.render_ascii());
            Ok(())
        }
    }
}

fn count_bits(ty: &TypeExpr) -> usize {
    match ty {
        TypeExpr::Prod(a, b) => count_bits(a) + count_bits(b),
        _ => 1,
    }
}
