//! End-to-end acceptance checks, one test per claim the toolchain makes.
//!
//! Each test prints a single summary line on success, so a full run reads
//! as a scorecard: circuit/evaluator agreement, per-step residual
//! tracking, the call-by-value sharing example, shape rejection, machine
//! versus lifted-program agreement plus the monad laws, the Bennett
//! embedding, optimizer soundness and progress, the circuit algebra, and
//! randomized progress/preservation sweeps.

use std::path::{Path, PathBuf};
use std::rc::Rc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use revc::circuit::{neg, pos, Circuit, Gate};
use revc::eval::{self, eval, is_value, value_bits, EvalResult, Step};
use revc::lifting::{circ, encode_state, encode_unary, lifted_run, wire_ty, Lifter};
use revc::machine::{
    self, input_interface, machine_is_value, synth, MachineState, MachineStep, RuleTag,
    SynthError,
};
use revc::optimizer::{equivalent, optimize};
use revc::syntax::ast::build::{
    and2, app, app2, arrow, bit, cons, err, ff, fix, inj1, inj2, ite, lam, lam_t, let_unit,
    list_ty, match_term, nil, not1, pair, prod, proj1, proj2, skip, split_of, sum, tt, unit, var,
    xor2,
};
use revc::syntax::{alpha_eq, parse_program, Definition, SourceProgram, Term, TypeExpr};
use revc::typecheck::{check, check_program, infer, normalize};

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn corpus(name: &str) -> SourceProgram {
    let path = corpus_dir().join(name);
    let src = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let p = parse_program(&src).unwrap_or_else(|e| panic!("{name}: {e}"));
    check_program(&p).unwrap_or_else(|e| panic!("{name}: {e}"));
    p
}

fn domains(ty: &Rc<TypeExpr>) -> Vec<Rc<TypeExpr>> {
    let mut doms = Vec::new();
    let mut cur = normalize(ty);
    while let TypeExpr::Arrow(d, r) = &*cur.clone() {
        doms.push(d.clone());
        cur = r.clone();
    }
    doms
}

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

/// Evaluate the entry point on the given input bits and flatten the value.
fn eval_bits(p: &SourceProgram, bits: &[bool]) -> Vec<bool> {
    let mut term = p.entry_closed_term();
    let mut next = 0;
    for dom in &domains(&p.entry().ty) {
        term = app(term, bool_tree(dom, bits, &mut next));
    }
    match eval(&term, 10_000_000) {
        EvalResult::Value(v) => value_bits(&v).expect("first-order value"),
        other => panic!("evaluation did not finish: {other:?}"),
    }
}

fn index_bits(v: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| v >> i & 1 == 1).collect()
}

/// The ripple-carry adder over k-digit numbers, as source text.
fn adder_source(k: usize) -> String {
    let prelude = "\
def bit_adder : bit * bit * bit -> bit * bit
def bit_adder t =
  let <a, b, cin> = t in
  <xor (xor a b) cin, xor (and a b) (xor (and a cin) (and b cin))>

def zip_bits : [bit] -> [bit] -> [bit * bit]
def zip_bits x y =
  letrec go (p : [bit]) (q : [bit]) : [bit * bit] =
    match split p with
      inl u -> (match split q with inl u2 -> nil | inr n -> err)
    | inr m -> (match split q with
                  inl u2 -> err
                | inr n -> <pi1 m, pi1 n> :: go (pi2 m) (pi2 n))
  in go x y

def add_list : [bit * bit] -> bit -> [bit]
def add_list l c =
  letrec go (r : [bit * bit]) (cin : bit) : [bit] =
    match split r with
      inl u -> cin :: nil
    | inr node ->
        let sc = bit_adder <pi1 (pi1 node), pi2 (pi1 node), cin> in
        pi1 sc :: go (pi2 node) (pi2 sc)
  in go l c
";
    if k == 1 {
        return format!(
            "{prelude}\ndef adder1 : bit -> bit -> [bit]\ndef adder1 x y = add_list (zip_bits (x :: nil) (y :: nil)) ff\n"
        );
    }
    let ty = vec!["bit"; k].join(" * ");
    let xs: Vec<String> = (0..k).map(|i| format!("x{i}")).collect();
    let ys: Vec<String> = (0..k).map(|i| format!("y{i}")).collect();
    format!(
        "{prelude}\ndef adder{k} : {ty} -> {ty} -> [bit]\ndef adder{k} x y =\n  let <{}> = x in\n  let <{}> = y in\n  add_list (zip_bits ({} :: nil) ({} :: nil)) ff\n",
        xs.join(", "),
        ys.join(", "),
        xs.join(" :: "),
        ys.join(" :: ")
    )
}

fn synth_corpus(name: &str) -> Circuit {
    let p = corpus(name);
    synth(&p.entry_closed_term(), &p.entry().ty, 10_000_000)
        .unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Every corpus program the machine accepts, small enough to enumerate.
const SWEEPABLE: [&str; 12] = [
    "not.pcfl",
    "and.pcfl",
    "xor.pcfl",
    "mux.pcfl",
    "bit_adder.pcfl",
    "adder2.pcfl",
    "adder4.pcfl",
    "foldl.pcfl",
    "map.pcfl",
    "zip.pcfl",
    "cbv_demo.pcfl",
    "const_xor.pcfl",
];

#[test]
fn criterion_1_circuits_agree_with_evaluation_on_every_input() {
    let start = Instant::now();
    let mut runs = 0u64;
    for name in SWEEPABLE {
        let p = corpus(name);
        let c = synth_corpus(name);
        let n = c.inputs.len();
        assert!(n <= 10, "{name} has too many inputs for the sweep");
        for v in 0..(1u64 << n) {
            let bits = index_bits(v, n);
            assert_eq!(c.execute(&bits), eval_bits(&p, &bits), "{name} on {bits:?}");
            runs += 1;
        }
    }
    // the adder family, one instance per size up to ten input bits
    for k in 1..=5usize {
        let src = adder_source(k);
        let p = parse_program(&src).unwrap();
        check_program(&p).unwrap();
        let c = synth(&p.entry_closed_term(), &p.entry().ty, 10_000_000).unwrap();
        assert_eq!(c.inputs.len(), 2 * k);
        for v in 0..(1u64 << (2 * k)) {
            let bits = index_bits(v, 2 * k);
            let out = c.execute(&bits);
            assert_eq!(out, eval_bits(&p, &bits), "adder{k} on {bits:?}");
            // the digits really add: little-endian sum with carry last
            let x: u64 = (0..k).filter(|&i| bits[i]).map(|i| 1 << i).sum();
            let y: u64 = (0..k).filter(|&i| bits[k + i]).map(|i| 1 << i).sum();
            let got: u64 = out.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| 1 << i).sum();
            assert_eq!(got, x + y, "adder{k}: {x} + {y}");
            runs += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "sweep took {elapsed:?}");
    println!(
        "criterion 1 PASS: {runs} input vectors agree across {} corpus programs and 5 adders in {elapsed:?}",
        SWEEPABLE.len()
    );
}

#[test]
fn criterion_2_residual_terms_track_every_machine_step() {
    let mut steps_checked = 0u64;
    for name in ["bit_adder.pcfl", "adder2.pcfl"] {
        let p = corpus(name);
        let (args, n) = input_interface(&p.entry().ty).unwrap();
        for v in 0..(1u64 << n) {
            let bits = index_bits(v, n);
            let mut term = p.entry_closed_term();
            for a in &args {
                term = app(term, a.clone());
            }
            let mut st = MachineState::new(term, n);
            loop {
                let before = machine::residual(&st, &bits);
                match st.step() {
                    MachineStep::Stepped(tag) => {
                        let after = machine::residual(&st, &bits);
                        match tag {
                            RuleTag::LitTrue | RuleTag::LitFalse => {
                                assert!(
                                    alpha_eq(&before, &after),
                                    "{name} {bits:?}: literal step changed the residual"
                                );
                            }
                            _ => match eval::step(&before) {
                                Step::Next(expected) => assert!(
                                    alpha_eq(&expected, &after),
                                    "{name} {bits:?}: machine step {tag:?} does not match evaluation"
                                ),
                                other => panic!(
                                    "{name} {bits:?}: residual cannot step ({other:?}) under {tag:?}"
                                ),
                            },
                        }
                        steps_checked += 1;
                    }
                    MachineStep::Finished => {
                        assert!(is_value(&machine::residual(&st, &bits)));
                        break;
                    }
                    other => panic!("{name} {bits:?}: machine stopped with {other:?}"),
                }
            }
        }
    }
    println!("criterion 2 PASS: {steps_checked} machine steps tracked by their residual terms");
}

#[test]
fn criterion_3_call_by_value_shares_the_argument_wire() {
    let c = synth_corpus("cbv_demo.pcfl");
    assert_eq!(c.num_wires, 3);
    assert_eq!(
        c.gates,
        vec![Gate::new(1, vec![neg(0)]), Gate::new(2, vec![pos(1), pos(1)])]
    );
    assert_eq!(c.outputs, vec![2]);
    assert_eq!(c.execute(&[false]), vec![true]);
    assert_eq!(c.execute(&[true]), vec![false]);
    println!("criterion 3 PASS: (\\y. and y y)(not x) is 3 wires and 2 gates computing not x");
}

#[test]
fn criterion_4_shape_mismatch_typechecks_but_never_becomes_a_circuit() {
    let p = corpus("err_shape.pcfl");
    let r = synth(&p.entry_closed_term(), &p.entry().ty, 10_000_000);
    assert!(matches!(r, Err(SynthError::Halted)), "expected a halt, got {r:?}");
    println!("criterion 4 PASS: branches of different list lengths halt the machine after typechecking");
}

fn assert_lifted_matches_machine(name: &str) {
    let p = corpus(name);
    let (st, outcome) =
        machine::synth_run(&p.entry_closed_term(), &p.entry().ty, 10_000_000).unwrap();
    assert_eq!(outcome, machine::Outcome::Finished);
    let machine_circuit = st.finish().unwrap();
    let lc = lifted_run(&p, 100_000_000).unwrap_or_else(|e| panic!("{name}: {e}"));
    assert_eq!(lc.gates, machine_circuit.gates, "{name}: gate lists differ");
    assert_eq!(lc.num_wires, st.next_fresh, "{name}: wire counts differ");
    assert_eq!(lc.outputs, machine_circuit.outputs, "{name}: outputs differ");
}

/// `bind m f` in the lifted language: run m, then apply f to its result.
fn bind(lf: &mut Lifter, m: Rc<Term>, f: Rc<Term>) -> Rc<Term> {
    let w = wire_ty();
    let fun = arrow(w.clone(), circ(w.clone()));
    let retf = lf.ret_of(&fun);
    let appi = lf.app_of(&w, &w);
    app2(var(&appi), app(var(&retf), f), m)
}

fn run_lifted(defs: &[Definition], body: Rc<Term>, state: Rc<Term>) -> Rc<Term> {
    let mut p = SourceProgram { defs: defs.to_vec() };
    p.defs.push(Definition {
        name: "law".into(),
        ty: bit(), // the signature is irrelevant; the term is only evaluated
        params: vec![],
        body: app(body, state),
    });
    match eval(&p.entry_closed_term(), 10_000_000) {
        EvalResult::Value(v) => v,
        other => panic!("law instance did not finish: {other:?}"),
    }
}

#[test]
fn criterion_5_lifted_programs_rebuild_the_machine_circuit() {
    for name in ["not.pcfl", "and.pcfl", "mux.pcfl", "bit_adder.pcfl", "adder2.pcfl"] {
        assert_lifted_matches_machine(name);
    }

    // the monad laws at the wire type, on random states and computations
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for round in 0..10 {
        let mut lf = Lifter::new();
        let retw = lf.ret_of(&wire_ty());
        let mnot = lf.mnot();
        let mtt = lf.mtt();

        let counter = rng.gen_range(2..6);
        let gates: Vec<Gate> = (0..rng.gen_range(0..4))
            .map(|_| {
                let t = rng.gen_range(0..counter);
                let c = rng.gen_range(0..counter);
                Gate::new(t, if c == t { vec![] } else { vec![pos(c)] })
            })
            .collect();
        let state = encode_state(&gates, counter);
        let v = encode_unary(rng.gen_range(0..counter));

        let fs = [var(&mnot), var(&retw), lam("k", var(&mtt))];
        let f = fs[rng.gen_range(0..fs.len())].clone();
        let g = fs[rng.gen_range(0..fs.len())].clone();
        let ms = [
            var(&mtt),
            app(var(&mnot), v.clone()),
            app(var(&retw), v.clone()),
        ];
        let m = ms[rng.gen_range(0..ms.len())].clone();

        // left identity: bind (ret v) f = f v
        let lhs = bind(&mut lf, app(var(&retw), v.clone()), f.clone());
        let rhs = app(f.clone(), v.clone());
        // right identity: bind m ret = m
        let lhs2 = bind(&mut lf, m.clone(), var(&retw));
        // associativity: bind (bind m f) g = bind m (\x. bind (f x) g)
        let mf = bind(&mut lf, m.clone(), f.clone());
        let lhs3 = bind(&mut lf, mf, g.clone());
        let inner = bind(&mut lf, app(f.clone(), var("k0")), g.clone());
        let rhs3 = bind(&mut lf, m.clone(), lam("k0", inner));

        let defs = lf.defs();
        let left = (
            run_lifted(&defs, lhs, state.clone()),
            run_lifted(&defs, rhs, state.clone()),
        );
        assert!(alpha_eq(&left.0, &left.1), "round {round}: left identity");
        let right = (
            run_lifted(&defs, lhs2, state.clone()),
            run_lifted(&defs, m.clone(), state.clone()),
        );
        assert!(alpha_eq(&right.0, &right.1), "round {round}: right identity");
        let assoc = (
            run_lifted(&defs, lhs3, state.clone()),
            run_lifted(&defs, rhs3, state.clone()),
        );
        assert!(alpha_eq(&assoc.0, &assoc.1), "round {round}: associativity");
    }
    println!(
        "criterion 5 PASS: 5 lifted corpus programs match the machine gate for gate; monad laws hold on 10 random instances"
    );
}

#[test]
fn criterion_6_bennett_embedding_xors_results_and_restores_auxiliaries() {
    let f = synth_corpus("adder2.pcfl");
    let b = f.bennett().unwrap();
    let n = f.inputs.len();
    let m = f.outputs.len();
    assert_eq!(b.inputs.len(), n + m);
    assert!(n + m <= 10);
    for v in 0..(1u64 << (n + m)) {
        let bits = index_bits(v, n + m);
        let (x, y) = bits.split_at(n);
        let fx = f.execute(x);
        let (out, valuation) = b.execute_full(&bits);
        let expected: Vec<bool> =
            x.iter().copied().chain(y.iter().zip(&fx).map(|(a, r)| a ^ r)).collect();
        assert_eq!(out, expected, "input {bits:?}");
        for (w, &val) in valuation.iter().enumerate() {
            if !b.inputs.contains(&w) {
                assert!(!val, "auxiliary wire {w} left dirty on {bits:?}");
            }
        }
    }

    // the identity on one bit embeds as a single copy gate
    let id = Circuit { num_wires: 1, inputs: vec![0], outputs: vec![0], gates: vec![] };
    let idb = id.bennett().unwrap();
    assert_eq!(idb.gates, vec![Gate::new(1, vec![pos(0)])]);
    println!(
        "criterion 6 PASS: bennett(adder2) maps (x,y) to (x, y xor f(x)) on all {} inputs with clean auxiliaries",
        1u64 << (n + m)
    );
}

#[test]
fn criterion_7_optimizer_preserves_functions_and_shrinks_the_adder() {
    for name in SWEEPABLE {
        let c = synth_corpus(name);
        let o = optimize(&c);
        assert!(equivalent(&c, &o, 10).unwrap(), "{name}: optimization changed the function");
        assert!(o.gates.len() <= c.gates.len(), "{name}: gate count grew");
        assert!(o.num_wires <= c.num_wires, "{name}: wire count grew");
    }
    let raw = synth_corpus("adder4.pcfl");
    let opt = optimize(&raw);
    assert!(
        opt.gates.len() < raw.gates.len(),
        "the 4-bit adder must strictly shrink: {} -> {}",
        raw.gates.len(),
        opt.gates.len()
    );
    let ratio = raw.gates.len() as f64 / opt.gates.len() as f64;
    println!(
        "criterion 7 PASS: all corpus circuits preserved; adder4 gates {} -> {} (ratio {ratio:.2}; stretch target 10x)",
        raw.gates.len(),
        opt.gates.len()
    );
}

#[test]
fn criterion_8_inversion_and_composition_obey_the_circuit_algebra() {
    let mut inverted = 0;
    for name in SWEEPABLE {
        let c = synth_corpus(name);
        if c.num_wires > 10 {
            continue;
        }
        let inv = c.invert();
        for v in 0..(1u64 << c.num_wires) {
            let val = index_bits(v, c.num_wires);
            assert_eq!(
                inv.run_valuation(&c.run_valuation(&val)),
                val,
                "{name}: inversion failed on {val:?}"
            );
        }
        inverted += 1;
    }
    assert!(inverted >= 6, "too few circuits small enough to invert exhaustively");

    let compose_cases = [
        ("not.pcfl", "not.pcfl"),
        ("mux.pcfl", "not.pcfl"),
        ("bit_adder.pcfl", "xor.pcfl"),
    ];
    for (gname, hname) in compose_cases {
        let g = synth_corpus(gname);
        let h = synth_corpus(hname);
        let gh = g.compose(&h).unwrap();
        for v in 0..(1u64 << g.inputs.len()) {
            let bits = index_bits(v, g.inputs.len());
            assert_eq!(
                gh.execute(&bits),
                h.execute(&g.execute(&bits)),
                "{gname};{hname} on {bits:?}"
            );
        }
    }

    // random compositions: h's inputs renamed onto g's outputs
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for round in 0..20 {
        let g = random_circuit(&mut rng, true);
        let mut h = random_circuit(&mut rng, false);
        h.inputs = (0..g.outputs.len()).collect();
        if h.inputs.len() > h.num_wires {
            h.num_wires = h.inputs.len();
        }
        h.validate().unwrap();
        let gh = g.compose(&h).unwrap();
        for v in 0..(1u64 << g.inputs.len()) {
            let bits = index_bits(v, g.inputs.len());
            assert_eq!(
                gh.execute(&bits),
                h.execute(&g.execute(&bits)),
                "round {round} on {bits:?}"
            );
        }
    }
    println!(
        "criterion 8 PASS: {inverted} circuits invert to the identity on every valuation; 23 compositions run in sequence"
    );
}

fn random_circuit(rng: &mut ChaCha8Rng, distinct_outputs: bool) -> Circuit {
    let num_wires = rng.gen_range(2..6);
    let inputs: Vec<usize> = (0..rng.gen_range(1..=num_wires.min(3))).collect();
    let mut gates = Vec::new();
    for _ in 0..rng.gen_range(0..6) {
        let target = rng.gen_range(0..num_wires);
        let mut controls = Vec::new();
        for _ in 0..rng.gen_range(0..3) {
            let w = rng.gen_range(0..num_wires);
            if w != target {
                controls.push(if rng.gen_bool(0.7) { pos(w) } else { neg(w) });
            }
        }
        gates.push(Gate::new(target, controls));
    }
    let outputs: Vec<usize> = if distinct_outputs {
        let count = rng.gen_range(1..=num_wires);
        (0..num_wires).take(count).collect()
    } else {
        (0..rng.gen_range(1..=num_wires)).map(|_| rng.gen_range(0..num_wires)).collect()
    };
    let c = Circuit { num_wires, inputs, outputs, gates };
    c.validate().unwrap();
    c
}

/// Types for re-checking terms mid-trace. The source checker is
/// bidirectional, so bare injections only ever appear where an expected
/// type constrains them; evaluation moves value injections into inferred
/// positions (a nil tail under a projection, say), where no finite
/// annotation pins down the absent summand. Holes plus unification
/// recover the declarative notion of typing that preservation is about:
/// a reduct is well typed iff some instantiation of its holes types it.
#[derive(Clone, Debug, PartialEq)]
enum RtTy {
    Bit,
    Unit,
    Prod(Box<RtTy>, Box<RtTy>),
    Sum(Box<RtTy>, Box<RtTy>),
    Arrow(Box<RtTy>, Box<RtTy>),
    List(Box<RtTy>),
    Hole(usize),
}

#[derive(Default)]
struct Uni {
    bindings: Vec<Option<RtTy>>,
}

impl Uni {
    fn fresh(&mut self) -> RtTy {
        self.bindings.push(None);
        RtTy::Hole(self.bindings.len() - 1)
    }

    /// Follow hole bindings at the root only.
    fn resolve(&self, t: &RtTy) -> RtTy {
        let mut cur = t.clone();
        while let RtTy::Hole(h) = cur {
            match &self.bindings[h] {
                Some(next) => cur = next.clone(),
                None => return RtTy::Hole(h),
            }
        }
        cur
    }

    fn occurs(&self, h: usize, t: &RtTy) -> bool {
        match self.resolve(t) {
            RtTy::Hole(i) => i == h,
            RtTy::Prod(a, b) | RtTy::Sum(a, b) | RtTy::Arrow(a, b) => {
                self.occurs(h, &a) || self.occurs(h, &b)
            }
            RtTy::List(e) => self.occurs(h, &e),
            _ => false,
        }
    }

    fn unify(&mut self, a: &RtTy, b: &RtTy) -> Result<(), String> {
        let (a, b) = (self.resolve(a), self.resolve(b));
        match (&a, &b) {
            (RtTy::Hole(i), RtTy::Hole(j)) if i == j => Ok(()),
            (RtTy::Hole(h), t) | (t, RtTy::Hole(h)) => {
                if self.occurs(*h, t) {
                    return Err("occurs check failed".into());
                }
                self.bindings[*h] = Some(t.clone());
                Ok(())
            }
            (RtTy::Bit, RtTy::Bit) | (RtTy::Unit, RtTy::Unit) => Ok(()),
            (RtTy::Prod(a1, a2), RtTy::Prod(b1, b2))
            | (RtTy::Sum(a1, a2), RtTy::Sum(b1, b2))
            | (RtTy::Arrow(a1, a2), RtTy::Arrow(b1, b2)) => {
                self.unify(a1, b1)?;
                self.unify(a2, b2)
            }
            (RtTy::List(e1), RtTy::List(e2)) => self.unify(e1, e2),
            // a list is its own unfolding: [E] = 1 + E * [E]
            (RtTy::List(e), RtTy::Sum(l, r)) | (RtTy::Sum(l, r), RtTy::List(e)) => {
                self.unify(l, &RtTy::Unit)?;
                let unfolded =
                    RtTy::Prod(e.clone(), Box::new(RtTy::List(e.clone())));
                self.unify(r, &unfolded)
            }
            _ => Err(format!("cannot unify {a:?} with {b:?}")),
        }
    }
}

fn embed(ty: &TypeExpr) -> RtTy {
    match &*normalize(&Rc::new(ty.clone())) {
        TypeExpr::Bit => RtTy::Bit,
        TypeExpr::Unit => RtTy::Unit,
        TypeExpr::Prod(a, b) => RtTy::Prod(Box::new(embed(a)), Box::new(embed(b))),
        TypeExpr::Sum(a, b) => RtTy::Sum(Box::new(embed(a)), Box::new(embed(b))),
        TypeExpr::Arrow(a, b) => RtTy::Arrow(Box::new(embed(a)), Box::new(embed(b))),
        TypeExpr::List(e) => RtTy::List(Box::new(embed(e))),
    }
}

fn rt_infer(
    u: &mut Uni,
    env: &mut Vec<(String, RtTy)>,
    t: &Term,
) -> Result<RtTy, String> {
    match t {
        Term::Var(x) => env
            .iter()
            .rev()
            .find(|(n, _)| n == x)
            .map(|(_, t)| t.clone())
            .ok_or(format!("unbound variable '{x}'")),
        Term::WireRef(_) | Term::True | Term::False => Ok(RtTy::Bit),
        Term::Skip => Ok(RtTy::Unit),
        Term::NotPrim => Ok(RtTy::Arrow(Box::new(RtTy::Bit), Box::new(RtTy::Bit))),
        Term::AndPrim | Term::XorPrim => Ok(RtTy::Arrow(
            Box::new(RtTy::Prod(Box::new(RtTy::Bit), Box::new(RtTy::Bit))),
            Box::new(RtTy::Bit),
        )),
        Term::Split => {
            let e = u.fresh();
            let l = RtTy::List(Box::new(e.clone()));
            Ok(RtTy::Arrow(
                Box::new(l.clone()),
                Box::new(RtTy::Sum(
                    Box::new(RtTy::Unit),
                    Box::new(RtTy::Prod(Box::new(e), Box::new(l))),
                )),
            ))
        }
        Term::Err => Ok(u.fresh()),
        Term::Lam(x, ann, b) => {
            let dom = match ann {
                Some(a) => embed(a),
                None => u.fresh(),
            };
            env.push((x.clone(), dom.clone()));
            let cod = rt_infer(u, env, b)?;
            env.pop();
            Ok(RtTy::Arrow(Box::new(dom), Box::new(cod)))
        }
        Term::App(f, a) => {
            let tf = rt_infer(u, env, f)?;
            let ta = rt_infer(u, env, a)?;
            let r = u.fresh();
            u.unify(&tf, &RtTy::Arrow(Box::new(ta), Box::new(r.clone())))?;
            Ok(r)
        }
        Term::Pair(a, b) => Ok(RtTy::Prod(
            Box::new(rt_infer(u, env, a)?),
            Box::new(rt_infer(u, env, b)?),
        )),
        Term::Proj1(p) | Term::Proj2(p) => {
            let tp = rt_infer(u, env, p)?;
            let (h1, h2) = (u.fresh(), u.fresh());
            u.unify(&tp, &RtTy::Prod(Box::new(h1.clone()), Box::new(h2.clone())))?;
            Ok(if matches!(t, Term::Proj1(_)) { h1 } else { h2 })
        }
        Term::LetUnit(s, b) => {
            let ts = rt_infer(u, env, s)?;
            u.unify(&ts, &RtTy::Unit)?;
            rt_infer(u, env, b)
        }
        Term::If(c, m, n) => {
            let tc = rt_infer(u, env, c)?;
            u.unify(&tc, &RtTy::Bit)?;
            let tm = rt_infer(u, env, m)?;
            let tn = rt_infer(u, env, n)?;
            u.unify(&tm, &tn)?;
            Ok(tm)
        }
        Term::Match { scrutinee, left, right } => {
            let ts = rt_infer(u, env, scrutinee)?;
            let (hl, hr) = (u.fresh(), u.fresh());
            u.unify(&ts, &RtTy::Sum(Box::new(hl.clone()), Box::new(hr.clone())))?;
            let mut result = None;
            for (arm, comp) in [(left, &hl), (right, &hr)] {
                if let Some(ann) = &arm.ann {
                    u.unify(comp, &embed(ann))?;
                }
                env.push((arm.binder.clone(), comp.clone()));
                let tb = rt_infer(u, env, &arm.body)?;
                env.pop();
                match &result {
                    None => result = Some(tb),
                    Some(r) => u.unify(r, &tb)?,
                }
            }
            Ok(result.unwrap())
        }
        Term::Inj1(a) => Ok(RtTy::Sum(Box::new(rt_infer(u, env, a)?), Box::new(u.fresh()))),
        Term::Inj2(b) => Ok(RtTy::Sum(Box::new(u.fresh()), Box::new(rt_infer(u, env, b)?))),
        Term::Fix(f) => {
            let tf = rt_infer(u, env, f)?;
            let h = u.fresh();
            u.unify(&tf, &RtTy::Arrow(Box::new(h.clone()), Box::new(h.clone())))?;
            Ok(h)
        }
    }
}

/// The reduct is declaratively well typed at `ty`: some instantiation of
/// the holes produces a derivation.
fn rt_check(t: &Term, ty: &TypeExpr) -> Result<(), String> {
    let mut u = Uni::default();
    let got = rt_infer(&mut u, &mut Vec::new(), t)?;
    u.unify(&got, &embed(ty))
}

/// Type-directed generation of closed well-typed terms.
struct TermGen {
    rng: ChaCha8Rng,
}

impl TermGen {
    fn small_type(&mut self) -> Rc<TypeExpr> {
        match self.rng.gen_range(0..6) {
            0 => bit(),
            1 => unit(),
            2 => prod(bit(), bit()),
            3 => sum(bit(), unit()),
            4 => list_ty(bit()),
            _ => arrow(bit(), bit()),
        }
    }

    fn leaf(&mut self, env: &[(String, Rc<TypeExpr>)], ty: &Rc<TypeExpr>) -> Rc<Term> {
        let candidates: Vec<&String> = env
            .iter()
            .filter(|(_, t)| revc::typecheck::types_equal(t, ty))
            .map(|(n, _)| n)
            .collect();
        if !candidates.is_empty() && self.rng.gen_bool(0.6) {
            return var(candidates[self.rng.gen_range(0..candidates.len())]);
        }
        match &*normalize(ty) {
            TypeExpr::Bit => {
                if self.rng.gen_bool(0.5) {
                    tt()
                } else {
                    ff()
                }
            }
            TypeExpr::Unit => skip(),
            TypeExpr::Prod(a, b) => pair(self.leaf(env, a), self.leaf(env, b)),
            TypeExpr::Sum(a, b) => {
                if self.rng.gen_bool(0.5) {
                    inj1(self.leaf(env, a))
                } else {
                    inj2(self.leaf(env, b))
                }
            }
            TypeExpr::List(e) => {
                if self.rng.gen_bool(0.5) {
                    nil()
                } else {
                    cons(self.leaf(env, e), nil())
                }
            }
            TypeExpr::Arrow(a, b) => {
                let x = format!("x{}", self.rng.gen_range(0..1000));
                let mut inner = env.to_vec();
                inner.push((x.clone(), a.clone()));
                lam_t(&x, a.clone(), self.leaf(&inner, b))
            }
        }
    }

    /// Like `gen`, but for positions the typechecker infers rather than
    /// checks. Terms that only check (injections, say) get an annotated
    /// identity wrapped around them, which infers by the let rule.
    fn inferable(
        &mut self,
        env: &mut Vec<(String, Rc<TypeExpr>)>,
        ty: &Rc<TypeExpr>,
        budget: &mut usize,
    ) -> Rc<Term> {
        let m = self.gen(env, ty, budget);
        if infer(&mut env.clone(), &m).is_ok() {
            m
        } else {
            let x = format!("c{}", self.rng.gen_range(0..1000));
            app(lam_t(&x, ty.clone(), var(&x)), m)
        }
    }

    fn gen(
        &mut self,
        env: &mut Vec<(String, Rc<TypeExpr>)>,
        ty: &Rc<TypeExpr>,
        budget: &mut usize,
    ) -> Rc<Term> {
        if *budget == 0 {
            return self.leaf(env, ty);
        }
        *budget -= 1;
        let tn = normalize(ty);
        let first_order = tn.is_first_order();
        // a menu of constructions; fall through to a leaf when the dice
        // pick a form this type does not support
        match self.rng.gen_range(0..12) {
            0 if self.rng.gen_bool(0.15) => err(),
            1 if first_order => {
                let c = self.gen(env, &bit(), budget);
                let m = self.gen(env, &tn, budget);
                let n = self.gen(env, &tn, budget);
                ite(c, m, n)
            }
            2 => {
                // an annotated immediate application, the let form
                let a = self.small_type();
                let x = format!("x{}", self.rng.gen_range(0..1000));
                let bound = self.gen(env, &a, budget);
                env.push((x.clone(), a.clone()));
                let body = self.gen(env, &tn, budget);
                env.pop();
                app(lam_t(&x, a, body), bound)
            }
            3 => {
                let s = self.gen(env, &unit(), budget);
                let b = self.gen(env, &tn, budget);
                let_unit(s, b)
            }
            4 => {
                // match on a sum or a list
                let (scrut_ty, lc, rc) = if self.rng.gen_bool(0.5) {
                    let (a, b) = (self.small_type(), self.small_type());
                    (sum(a.clone(), b.clone()), a, b)
                } else {
                    let e = bit();
                    (list_ty(e.clone()), unit(), prod(e.clone(), list_ty(e)))
                };
                let s = self.inferable(env, &scrut_ty, budget);
                let lx = format!("x{}", self.rng.gen_range(0..1000));
                let rx = format!("x{}", self.rng.gen_range(0..1000));
                env.push((lx.clone(), lc));
                let lb = self.gen(env, &tn, budget);
                env.pop();
                env.push((rx.clone(), rc));
                let rb = self.gen(env, &tn, budget);
                env.pop();
                match_term(s, &lx, lb, &rx, rb)
            }
            5 if matches!(&*tn, TypeExpr::Bit) => match self.rng.gen_range(0..3) {
                0 => not1(self.gen(env, &bit(), budget)),
                1 => and2(self.gen(env, &bit(), budget), self.gen(env, &bit(), budget)),
                _ => xor2(self.gen(env, &bit(), budget), self.gen(env, &bit(), budget)),
            },
            6 if matches!(&*tn, TypeExpr::Prod(..)) => {
                let TypeExpr::Prod(a, b) = &*tn else { unreachable!() };
                pair(self.gen(env, a, budget), self.gen(env, b, budget))
            }
            7 => {
                // project out of a pair built around the goal
                let other = self.small_type();
                if self.rng.gen_bool(0.5) {
                    proj1(self.inferable(env, &prod(tn.clone(), other), budget))
                } else {
                    proj2(self.inferable(env, &prod(other, tn.clone()), budget))
                }
            }
            8 if matches!(&*tn, TypeExpr::List(..)) => {
                let TypeExpr::List(e) = &*tn else { unreachable!() };
                if self.rng.gen_bool(0.5) {
                    cons(self.gen(env, e, budget), self.gen(env, &tn, budget))
                } else {
                    split_of(self.inferable(env, &tn, budget))
                }
            }
            9 if matches!(&*tn, TypeExpr::Arrow(..)) => {
                let TypeExpr::Arrow(a, b) = &*tn else { unreachable!() };
                let x = format!("x{}", self.rng.gen_range(0..1000));
                env.push((x.clone(), a.clone()));
                let body = self.gen(env, b, budget);
                env.pop();
                lam_t(&x, a.clone(), body)
            }
            10 if matches!(&*tn, TypeExpr::Arrow(..)) && self.rng.gen_bool(0.3) => {
                let f = format!("f{}", self.rng.gen_range(0..1000));
                env.push((f.clone(), tn.clone()));
                let body = self.gen(env, &tn, budget);
                env.pop();
                fix(lam_t(&f, tn.clone(), body))
            }
            11 => {
                // apply a function built for the occasion
                let a = self.small_type();
                let f = self.inferable(env, &arrow(a.clone(), tn.clone()), budget);
                let arg = self.gen(env, &a, budget);
                app(f, arg)
            }
            _ => self.leaf(env, ty),
        }
    }
}

#[test]
fn criterion_9_random_well_typed_terms_stay_typed_while_they_run() {
    let mut gen = TermGen { rng: ChaCha8Rng::seed_from_u64(30) };
    let mut eval_steps = 0u64;
    let mut machine_steps = 0u64;
    for i in 0..1000 {
        let ty = gen.small_type();
        let mut budget = 30;
        let t = gen.gen(&mut Vec::new(), &ty, &mut budget);
        check(&mut Vec::new(), &t, &ty).unwrap_or_else(|e| {
            panic!("term {i} is not well typed as generated: {e}\n{t}")
        });

        // progress and preservation along plain evaluation
        let mut cur = t.clone();
        for _ in 0..500 {
            match eval::step(&cur) {
                Step::Value => {
                    assert!(is_value(&cur), "term {i}: Value on a non-value");
                    break;
                }
                Step::HitErr => break,
                Step::Next(next) => {
                    rt_check(&next, &ty).unwrap_or_else(|e| {
                        panic!("term {i}: type lost after an evaluation step: {e}\n{next}")
                    });
                    cur = next;
                    eval_steps += 1;
                }
                Step::Stuck(reason) => {
                    panic!("term {i}: evaluation stuck ({reason}) on a well-typed term\n{cur}")
                }
            }
        }

        // the machine enjoys the same guarantees, gates and all
        let mut st = MachineState::new(t.clone(), 0);
        for _ in 0..500 {
            match st.step() {
                MachineStep::Stepped(_) => {
                    rt_check(&st.term, &ty).unwrap_or_else(|e| {
                        panic!("term {i}: type lost after a machine step: {e}\n{}", st.term)
                    });
                    machine_steps += 1;
                }
                MachineStep::Finished => {
                    assert!(machine_is_value(&st.term));
                    break;
                }
                MachineStep::ErrHalt => break,
                MachineStep::Stuck(reason) => {
                    panic!("term {i}: machine stuck ({reason}) on a well-typed term\n{}", st.term)
                }
            }
        }
    }
    println!(
        "criterion 9 PASS: 1000 generated terms; {eval_steps} evaluation steps and {machine_steps} machine steps all preserve typing"
    );
}
