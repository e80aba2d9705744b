//! The circuit-generating abstract machine.
//!
//! The machine rewrites a term under the same deterministic call-by-value
//! strategy as [`crate::eval`], except that boolean data lives on circuit
//! wires instead of in the term: `tt` and `ff` are machine redexes that
//! allocate a wire, and the boolean primitives compile to gates over the
//! wires of their arguments. A conditional with a wire for its condition
//! multiplexes the two branch values leaf by leaf. When the term has been
//! rewritten to a value (a tree of wire references), the gates emitted
//! along the way are the circuit for the original term.
//!
//! Wire references in the term are resolved through an explicit linking
//! map. References and wires are allocated in lockstep here, so the map is
//! the identity on the allocated range; it is still consulted on every
//! lookup and only ever extended, which keeps the state honest: every free
//! wire reference in the term is linked, and already-linked entries never
//! change.

use std::collections::BTreeMap;
use std::rc::Rc;

use crate::circuit::{neg, pos, Circuit, Gate, RawCircuit};
use crate::eval;
use crate::syntax::{build, subst, wire_refs, Term, TypeExpr};
use crate::typecheck::normalize;

/// Values of the machine: like evaluator values, but `tt` and `ff` still
/// need to be moved onto wires.
pub fn machine_is_value(t: &Term) -> bool {
    match t {
        Term::True | Term::False => false,
        Term::Pair(a, b) => machine_is_value(a) && machine_is_value(b),
        Term::Inj1(a) | Term::Inj2(a) => machine_is_value(a),
        _ => eval::is_value(t),
    }
}

/// Which rule a machine step fired. Steps tagged `LitTrue` and `LitFalse`
/// leave the residual term unchanged; every other step corresponds to
/// exactly one evaluator step on the residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleTag {
    LitTrue,
    LitFalse,
    NotGate,
    AndGate,
    XorGate,
    IfMux,
    Beta,
    Fst,
    Snd,
    LetUnitStep,
    MatchL,
    MatchR,
    SplitStep,
    Unfold,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MachineStep {
    Stepped(RuleTag),
    Finished,
    /// `err` reached the focus, or a conditional tried to join two list
    /// values of different lengths.
    ErrHalt,
    Stuck(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Finished,
    Halted,
    OutOfFuel,
    Stuck(String),
}

#[derive(Debug, Clone)]
pub struct MachineState {
    pub term: Rc<Term>,
    pub num_inputs: usize,
    /// Emitted gates, newest at the front.
    pub circuit: RawCircuit,
    /// Wire reference in the term -> circuit wire.
    pub linking: BTreeMap<usize, usize>,
    pub next_fresh: usize,
}

enum Out {
    Next(Rc<Term>, RuleTag),
    Value,
    Halt,
    Stuck(String),
}

macro_rules! into {
    ($self:ident, $t:expr, $f:expr) => {
        match $self.go($t) {
            Out::Next(t2, tag) => Out::Next(Rc::new($f(t2)), tag),
            Out::Value => unreachable!("caller checked the subterm is not a value"),
            other => other,
        }
    };
}

impl MachineState {
    pub fn new(term: Rc<Term>, num_inputs: usize) -> MachineState {
        MachineState {
            term,
            num_inputs,
            circuit: RawCircuit::new(),
            linking: (0..num_inputs).map(|i| (i, i)).collect(),
            next_fresh: num_inputs,
        }
    }

    fn alloc(&mut self) -> usize {
        let r = self.next_fresh;
        self.next_fresh += 1;
        self.linking.insert(r, r);
        r
    }

    /// The circuit wire a term-level reference points at.
    pub fn wire(&self, r: usize) -> usize {
        *self.linking.get(&r).expect("every free wire reference is linked")
    }

    fn emit(&mut self, g: Gate) {
        self.circuit.push_front(g);
    }

    pub fn step(&mut self) -> MachineStep {
        let t = self.term.clone();
        match self.go(&t) {
            Out::Next(t2, tag) => {
                self.term = t2;
                MachineStep::Stepped(tag)
            }
            Out::Value => MachineStep::Finished,
            Out::Halt => MachineStep::ErrHalt,
            Out::Stuck(r) => MachineStep::Stuck(r),
        }
    }

    pub fn run(&mut self, fuel: u64) -> Outcome {
        for _ in 0..fuel {
            match self.step() {
                MachineStep::Stepped(_) => {}
                MachineStep::Finished => return Outcome::Finished,
                MachineStep::ErrHalt => return Outcome::Halted,
                MachineStep::Stuck(r) => return Outcome::Stuck(r),
            }
        }
        Outcome::OutOfFuel
    }

    fn go(&mut self, t: &Rc<Term>) -> Out {
        if machine_is_value(t) {
            return Out::Value;
        }
        match &**t {
            Term::True => {
                let u = self.alloc();
                self.emit(Gate::new(self.wire(u), vec![]));
                Out::Next(build::wire(u), RuleTag::LitTrue)
            }
            Term::False => {
                let u = self.alloc();
                Out::Next(build::wire(u), RuleTag::LitFalse)
            }
            Term::App(f, a) => {
                if !machine_is_value(f) {
                    into!(self, f, |f2| Term::App(f2, a.clone()))
                } else if !machine_is_value(a) {
                    into!(self, a, |a2| Term::App(f.clone(), a2))
                } else {
                    self.fire_app(f, a)
                }
            }
            Term::Pair(a, b) => {
                if !machine_is_value(a) {
                    into!(self, a, |a2| Term::Pair(a2, b.clone()))
                } else {
                    into!(self, b, |b2| Term::Pair(a.clone(), b2))
                }
            }
            Term::Inj1(a) => into!(self, a, Term::Inj1),
            Term::Inj2(a) => into!(self, a, Term::Inj2),
            Term::Proj1(p) => {
                if !machine_is_value(p) {
                    into!(self, p, Term::Proj1)
                } else if let Term::Pair(a, _) = &**p {
                    Out::Next(a.clone(), RuleTag::Fst)
                } else {
                    Out::Stuck("first projection of a non-pair".into())
                }
            }
            Term::Proj2(p) => {
                if !machine_is_value(p) {
                    into!(self, p, Term::Proj2)
                } else if let Term::Pair(_, b) = &**p {
                    Out::Next(b.clone(), RuleTag::Snd)
                } else {
                    Out::Stuck("second projection of a non-pair".into())
                }
            }
            Term::LetUnit(m, n) => {
                if !machine_is_value(m) {
                    into!(self, m, |m2| Term::LetUnit(m2, n.clone()))
                } else if matches!(&**m, Term::Skip) {
                    Out::Next(n.clone(), RuleTag::LetUnitStep)
                } else {
                    Out::Stuck("unit binding of a non-unit value".into())
                }
            }
            Term::If(c, m, n) => {
                if !machine_is_value(c) {
                    into!(self, c, |c2| Term::If(c2, m.clone(), n.clone()))
                } else if !machine_is_value(m) {
                    into!(self, m, |m2| Term::If(c.clone(), m2, n.clone()))
                } else if !machine_is_value(n) {
                    into!(self, n, |n2| Term::If(c.clone(), m.clone(), n2))
                } else if let Term::WireRef(cr) = &**c {
                    let cw = self.wire(*cr);
                    match self.mux(cw, m, n) {
                        Some(joined) => Out::Next(joined, RuleTag::IfMux),
                        None => Out::Halt,
                    }
                } else {
                    Out::Stuck("conditional on a non-wire value".into())
                }
            }
            Term::Match { scrutinee, left, right } => {
                if !machine_is_value(scrutinee) {
                    into!(self, scrutinee, |s2| Term::Match {
                        scrutinee: s2,
                        left: left.clone(),
                        right: right.clone(),
                    })
                } else {
                    match &**scrutinee {
                        Term::Inj1(v) => {
                            Out::Next(subst(&left.body, &left.binder, v), RuleTag::MatchL)
                        }
                        Term::Inj2(v) => {
                            Out::Next(subst(&right.body, &right.binder, v), RuleTag::MatchR)
                        }
                        _ => Out::Stuck("match on a non-injection".into()),
                    }
                }
            }
            Term::Fix(f) => {
                if !machine_is_value(f) {
                    into!(self, f, Term::Fix)
                } else if let Term::Lam(x, _, body) = &**f {
                    Out::Next(subst(body, x, t), RuleTag::Unfold)
                } else {
                    Out::Next(Rc::new(Term::App(f.clone(), t.clone())), RuleTag::Unfold)
                }
            }
            Term::Err => Out::Halt,
            Term::Var(x) => Out::Stuck(format!("free variable '{x}'")),
            _ => unreachable!("remaining forms are values"),
        }
    }

    fn fire_app(&mut self, f: &Rc<Term>, a: &Rc<Term>) -> Out {
        match &**f {
            Term::Lam(x, _, body) => Out::Next(subst(body, x, a), RuleTag::Beta),
            Term::NotPrim => {
                if let Term::WireRef(i) = &**a {
                    let iw = self.wire(*i);
                    let u = self.alloc();
                    self.emit(Gate::new(self.wire(u), vec![neg(iw)]));
                    Out::Next(build::wire(u), RuleTag::NotGate)
                } else {
                    Out::Stuck("not applied to a non-wire".into())
                }
            }
            Term::AndPrim | Term::XorPrim => {
                let Term::Pair(x, y) = &**a else {
                    return Out::Stuck("binary primitive applied to a non-pair".into());
                };
                let (Term::WireRef(i), Term::WireRef(j)) = (&**x, &**y) else {
                    return Out::Stuck("binary primitive applied to non-wires".into());
                };
                let (iw, jw) = (self.wire(*i), self.wire(*j));
                let u = self.alloc();
                let uw = self.wire(u);
                if matches!(&**f, Term::AndPrim) {
                    self.emit(Gate::new(uw, vec![pos(iw), pos(jw)]));
                    Out::Next(build::wire(u), RuleTag::AndGate)
                } else {
                    self.emit(Gate::new(uw, vec![pos(iw)]));
                    self.emit(Gate::new(uw, vec![pos(jw)]));
                    Out::Next(build::wire(u), RuleTag::XorGate)
                }
            }
            Term::Split => Out::Next(a.clone(), RuleTag::SplitStep),
            _ => Out::Stuck("application of a non-function value".into()),
        }
    }

    /// Join two branch values of the same shape, allocating one fresh wire
    /// per bit leaf: the leaf from the then branch copies in under a
    /// positive control on `c`, the one from the else branch under a
    /// negative control. Returns None when the shapes disagree, which for
    /// well-typed terms means two list values of different lengths.
    fn mux(&mut self, c: usize, v: &Rc<Term>, w: &Rc<Term>) -> Option<Rc<Term>> {
        match (&**v, &**w) {
            (Term::WireRef(i), Term::WireRef(j)) => {
                let (iw, jw) = (self.wire(*i), self.wire(*j));
                let u = self.alloc();
                let uw = self.wire(u);
                self.emit(Gate::new(uw, vec![pos(c), pos(iw)]));
                self.emit(Gate::new(uw, vec![neg(c), pos(jw)]));
                Some(build::wire(u))
            }
            (Term::Skip, Term::Skip) => Some(v.clone()),
            (Term::Pair(a, b), Term::Pair(x, y)) => {
                let l = self.mux(c, a, x)?;
                let r = self.mux(c, b, y)?;
                Some(Rc::new(Term::Pair(l, r)))
            }
            (Term::Inj1(a), Term::Inj1(x)) => Some(Rc::new(Term::Inj1(self.mux(c, a, x)?))),
            (Term::Inj2(a), Term::Inj2(x)) => Some(Rc::new(Term::Inj2(self.mux(c, a, x)?))),
            _ => None,
        }
    }

    /// Package a finished run as a circuit: inputs are the initial wires,
    /// outputs the wires of the final value's bit leaves, left to right.
    pub fn finish(&self) -> Result<Circuit, String> {
        let mut outputs = Vec::new();
        self.value_wires(&self.term, &mut outputs)?;
        Ok(Circuit {
            num_wires: self.next_fresh.max(self.num_inputs),
            inputs: (0..self.num_inputs).collect(),
            outputs,
            gates: self.circuit.iter().rev().cloned().collect(),
        })
    }

    fn value_wires(&self, t: &Term, out: &mut Vec<usize>) -> Result<(), String> {
        match t {
            Term::WireRef(r) => {
                out.push(self.wire(*r));
                Ok(())
            }
            Term::Skip => Ok(()),
            Term::Pair(a, b) => {
                self.value_wires(a, out)?;
                self.value_wires(b, out)
            }
            Term::Inj1(v) | Term::Inj2(v) => self.value_wires(v, out),
            other => Err(format!("final value is not first-order data: {other}")),
        }
    }
}

/// The residual term of a machine state on concrete inputs: run the gates
/// emitted so far, then replace every wire reference with the boolean its
/// wire carries. Stepping the machine either leaves the residual unchanged
/// (wire allocation for `tt`/`ff`) or advances it by one evaluator step.
pub fn residual(state: &MachineState, input_bits: &[bool]) -> Rc<Term> {
    assert_eq!(input_bits.len(), state.num_inputs);
    let mut val = vec![false; state.next_fresh];
    val[..input_bits.len()].copy_from_slice(input_bits);
    for g in state.circuit.iter().rev() {
        g.apply(&mut val);
    }
    plug_wires(&state.term, &|r| val[state.wire(r)])
}

/// Replace each wire reference with a boolean literal.
pub fn plug_wires(t: &Rc<Term>, lookup: &impl Fn(usize) -> bool) -> Rc<Term> {
    let rebuild = |s: &Rc<Term>| plug_wires(s, lookup);
    Rc::new(match &**t {
        Term::WireRef(r) => {
            if lookup(*r) {
                Term::True
            } else {
                Term::False
            }
        }
        Term::Var(_)
        | Term::Skip
        | Term::True
        | Term::False
        | Term::AndPrim
        | Term::XorPrim
        | Term::NotPrim
        | Term::Split
        | Term::Err => (**t).clone(),
        Term::Lam(x, ann, b) => Term::Lam(x.clone(), ann.clone(), rebuild(b)),
        Term::App(f, a) => Term::App(rebuild(f), rebuild(a)),
        Term::Pair(a, b) => Term::Pair(rebuild(a), rebuild(b)),
        Term::Proj1(p) => Term::Proj1(rebuild(p)),
        Term::Proj2(p) => Term::Proj2(rebuild(p)),
        Term::LetUnit(m, n) => Term::LetUnit(rebuild(m), rebuild(n)),
        Term::If(c, m, n) => Term::If(rebuild(c), rebuild(m), rebuild(n)),
        Term::Inj1(v) => Term::Inj1(rebuild(v)),
        Term::Inj2(v) => Term::Inj2(rebuild(v)),
        Term::Match { scrutinee, left, right } => {
            let arm = |a: &crate::syntax::MatchArm| crate::syntax::MatchArm {
                binder: a.binder.clone(),
                ann: a.ann.clone(),
                body: rebuild(&a.body),
            };
            Term::Match {
                scrutinee: rebuild(scrutinee),
                left: arm(left),
                right: arm(right),
            }
        }
        Term::Fix(f) => Term::Fix(rebuild(f)),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SynthError {
    /// The term's type does not describe a circuit interface: every input
    /// must be a product of bits and the result first-order.
    Interface(String),
    /// The run reached `err` or a branch shape mismatch.
    Halted,
    OutOfFuel,
    Stuck(String),
}

impl std::fmt::Display for SynthError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SynthError::Interface(m) => write!(f, "{m}"),
            SynthError::Halted => write!(f, "evaluation halted with an error"),
            SynthError::OutOfFuel => write!(f, "ran out of fuel"),
            SynthError::Stuck(m) => write!(f, "machine stuck: {m}"),
        }
    }
}

fn count_bit_leaves(ty: &TypeExpr) -> Result<usize, String> {
    match ty {
        TypeExpr::Bit => Ok(1),
        TypeExpr::Prod(a, b) => Ok(count_bit_leaves(a)? + count_bit_leaves(b)?),
        other => Err(format!("input type {other} is not a product of bits")),
    }
}

fn wire_tree(ty: &TypeExpr, next: &mut usize) -> Rc<Term> {
    match ty {
        TypeExpr::Prod(a, b) => {
            let l = wire_tree(a, next);
            let r = wire_tree(b, next);
            Rc::new(Term::Pair(l, r))
        }
        _ => {
            let w = build::wire(*next);
            *next += 1;
            w
        }
    }
}

/// The argument wire trees and input count for a circuit interface type:
/// a chain of arrows whose domains are products of bits, ending in a
/// first-order result.
pub fn input_interface(ty: &Rc<TypeExpr>) -> Result<(Vec<Rc<Term>>, usize), SynthError> {
    let mut ty = normalize(ty);
    let mut args = Vec::new();
    let mut next = 0;
    loop {
        match &*ty {
            TypeExpr::Arrow(d, r) => {
                count_bit_leaves(d).map_err(SynthError::Interface)?;
                args.push(wire_tree(d, &mut next));
                ty = r.clone();
            }
            other => {
                if !other.is_first_order() {
                    return Err(SynthError::Interface(format!(
                        "result type {other} is not first-order data"
                    )));
                }
                return Ok((args, next));
            }
        }
    }
}

/// Compile a closed term of circuit interface type to a circuit: apply it
/// to one wire per input bit and run the machine to a value.
pub fn synth(term: &Rc<Term>, ty: &Rc<TypeExpr>, fuel: u64) -> Result<Circuit, SynthError> {
    let (st, outcome) = synth_run(term, ty, fuel)?;
    match outcome {
        Outcome::Finished => st.finish().map_err(SynthError::Stuck),
        Outcome::Halted => Err(SynthError::Halted),
        Outcome::OutOfFuel => Err(SynthError::OutOfFuel),
        Outcome::Stuck(r) => Err(SynthError::Stuck(r)),
    }
}

/// Like [`synth`] but hands back the machine state as well, for callers
/// that inspect the run itself.
pub fn synth_run(
    term: &Rc<Term>,
    ty: &Rc<TypeExpr>,
    fuel: u64,
) -> Result<(MachineState, Outcome), SynthError> {
    let (args, n) = input_interface(ty)?;
    let mut t = term.clone();
    for a in args {
        t = Rc::new(Term::App(t, a));
    }
    let mut st = MachineState::new(t, n);
    let outcome = st.run(fuel);
    Ok((st, outcome))
}

/// State invariant: the linking map is defined on every free wire
/// reference of the term (and is the identity under lockstep allocation).
pub fn linking_covers_term(state: &MachineState) -> bool {
    let mut refs = std::collections::BTreeSet::new();
    wire_refs(&state.term, &mut refs);
    refs.iter().all(|r| state.linking.contains_key(r))
        && state.linking.iter().all(|(r, w)| r == w)
        && state.linking.len() == state.next_fresh
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Step;
    use crate::syntax::{alpha_eq, parse_term_str, parse_type_str};

    /// Parse a term that names its input wires `p0`, `p1`, ... and swap
    /// the names for real wire references.
    fn machine_on(src: &str, num_inputs: usize) -> MachineState {
        let mut t = parse_term_str(src).unwrap();
        for i in 0..num_inputs {
            t = subst(&t, &format!("p{i}"), &build::wire(i));
        }
        MachineState::new(t, num_inputs)
    }

    fn run_tags(st: &mut MachineState) -> Vec<RuleTag> {
        let mut tags = Vec::new();
        for _ in 0..10_000 {
            match st.step() {
                MachineStep::Stepped(tag) => tags.push(tag),
                MachineStep::Finished => return tags,
                other => panic!("machine did not finish: {other:?}"),
            }
        }
        panic!("machine ran away");
    }

    fn synth_src(term: &str, ty: &str) -> Circuit {
        let t = parse_term_str(term).unwrap();
        let ty = parse_type_str(ty).unwrap();
        synth(&t, &ty, 100_000).unwrap()
    }

    #[test]
    fn argument_wiring_then_beta_then_gates() {
        let c = synth_src("\\x : bit. (\\y : bit. and y y) (not x)", "bit -> bit");
        assert_eq!(c.num_wires, 3);
        assert_eq!(c.inputs, vec![0]);
        assert_eq!(c.outputs, vec![2]);
        assert_eq!(
            c.gates,
            vec![Gate::new(1, vec![neg(0)]), Gate::new(2, vec![pos(1), pos(1)])]
        );
    }

    #[test]
    fn constants_allocate_wires_before_their_gate() {
        let c = synth_src("xor ff ff", "bit");
        assert_eq!(c.num_wires, 3);
        assert_eq!(c.inputs, Vec::<usize>::new());
        assert_eq!(c.outputs, vec![2]);
        assert_eq!(
            c.gates,
            vec![Gate::new(2, vec![pos(0)]), Gate::new(2, vec![pos(1)])]
        );
    }

    #[test]
    fn true_emits_a_not_gate_on_a_fresh_wire() {
        let c = synth_src("\\x : bit. tt", "bit -> bit");
        assert_eq!(c.num_wires, 2);
        assert_eq!(c.gates, vec![Gate::new(1, vec![])]);
        assert_eq!(c.outputs, vec![1]);
        assert_eq!(c.execute(&[false]), vec![true]);
        assert_eq!(c.execute(&[true]), vec![true]);
    }

    #[test]
    fn conditional_multiplexes_under_both_polarities() {
        let c = synth_src(
            "\\c : bit. \\a : bit. \\b : bit. if c then a else b",
            "bit -> bit -> bit -> bit",
        );
        assert_eq!(c.num_wires, 4);
        assert_eq!(c.outputs, vec![3]);
        assert_eq!(
            c.gates,
            vec![
                Gate::new(3, vec![pos(0), pos(1)]),
                Gate::new(3, vec![neg(0), pos(2)]),
            ]
        );
        for k in 0..8u32 {
            let bits: Vec<bool> = (0..3).map(|i| (k >> i) & 1 == 1).collect();
            let want = if bits[0] { bits[1] } else { bits[2] };
            assert_eq!(c.execute(&bits), vec![want]);
        }
    }

    #[test]
    fn pair_branches_multiplex_leaf_by_leaf() {
        let c = synth_src(
            "\\c : bit. \\p : bit * bit. if c then p else <pi2 p, pi1 p>",
            "bit -> bit * bit -> bit * bit",
        );
        assert_eq!(c.num_wires, 5);
        assert_eq!(c.outputs, vec![3, 4]);
        assert_eq!(
            c.gates,
            vec![
                Gate::new(3, vec![pos(0), pos(1)]),
                Gate::new(3, vec![neg(0), pos(2)]),
                Gate::new(4, vec![pos(0), pos(2)]),
                Gate::new(4, vec![neg(0), pos(1)]),
            ]
        );
    }

    #[test]
    fn rule_trace_for_the_call_by_value_demo() {
        let mut st = machine_on("(\\y : bit. and y y) (not p0)", 1);
        let tags = run_tags(&mut st);
        assert_eq!(tags, vec![RuleTag::NotGate, RuleTag::Beta, RuleTag::AndGate]);
        assert!(alpha_eq(&st.term, &build::wire(2)));
    }

    #[test]
    fn xor_emits_two_gates_in_argument_order() {
        let mut st = machine_on("xor p0 p1", 2);
        let tags = run_tags(&mut st);
        assert_eq!(tags, vec![RuleTag::XorGate]);
        let c = st.finish().unwrap();
        assert_eq!(
            c.gates,
            vec![Gate::new(2, vec![pos(0)]), Gate::new(2, vec![pos(1)])]
        );
        for bits in [[false, false], [false, true], [true, false], [true, true]] {
            assert_eq!(c.execute(&bits), vec![bits[0] ^ bits[1]]);
        }
    }

    #[test]
    fn split_is_the_identity_on_list_values() {
        let mut st = machine_on("split (p0 :: nil)", 1);
        assert_eq!(st.step(), MachineStep::Stepped(RuleTag::SplitStep));
        assert_eq!(st.step(), MachineStep::Finished);
        assert!(st.circuit.is_empty());
    }

    #[test]
    fn branch_shape_mismatch_halts() {
        let t = parse_term_str("\\x : bit. if x then nil else (tt :: nil)").unwrap();
        let ty = parse_type_str("bit -> [bit]").unwrap();
        assert_eq!(synth(&t, &ty, 100_000), Err(SynthError::Halted));
    }

    #[test]
    fn err_at_focus_halts() {
        let mut st = machine_on("and p0 err", 1);
        assert_eq!(st.step(), MachineStep::ErrHalt);
    }

    #[test]
    fn lists_in_the_result_contribute_elements_in_order() {
        let c = synth_src("\\x : bit. x :: not x :: nil", "bit -> [bit]");
        assert_eq!(c.outputs, vec![0, 1]);
        assert_eq!(c.execute(&[true]), vec![true, false]);
    }

    #[test]
    fn interface_rejects_non_bit_inputs() {
        let cases = [
            ("\\f : bit -> bit. f tt", "(bit -> bit) -> bit"),
            ("\\l : [bit]. l", "[bit] -> [bit]"),
            ("\\u : 1. tt", "1 -> bit"),
        ];
        for (term, ty) in cases {
            let t = parse_term_str(term).unwrap();
            let ty = parse_type_str(ty).unwrap();
            assert!(matches!(synth(&t, &ty, 1000), Err(SynthError::Interface(_))), "{ty}");
        }
    }

    #[test]
    fn fuel_runs_out_on_divergence() {
        let t = parse_term_str("Y (\\x : bit. x)").unwrap();
        let ty = parse_type_str("bit").unwrap();
        assert_eq!(synth(&t, &ty, 50), Err(SynthError::OutOfFuel));
    }

    #[test]
    fn linking_stays_identity_and_covers_the_term() {
        let src = "(\\p : bit * bit. \
                      if xor (pi1 p) (pi2 p) then <and (pi1 p) (pi2 p), tt> else <ff, pi1 p>) \
                    <p0, p1>";
        let mut st = machine_on(src, 2);
        assert!(linking_covers_term(&st));
        for _ in 0..10_000 {
            match st.step() {
                MachineStep::Stepped(_) => assert!(linking_covers_term(&st)),
                MachineStep::Finished => return,
                other => panic!("unexpected {other:?}"),
            }
        }
        panic!("machine ran away");
    }

    #[test]
    fn residuals_track_evaluation_one_step_at_a_time() {
        for k in 0..2u32 {
            let bits = vec![k == 1];
            let mut st = machine_on("(\\y : bit. and y (xor y tt)) (not p0)", 1);
            loop {
                let before = residual(&st, &bits);
                match st.step() {
                    MachineStep::Stepped(RuleTag::LitTrue | RuleTag::LitFalse) => {
                        assert!(alpha_eq(&before, &residual(&st, &bits)));
                    }
                    MachineStep::Stepped(_) => {
                        let Step::Next(expected) = eval::step(&before) else {
                            panic!("residual should step");
                        };
                        assert!(alpha_eq(&expected, &residual(&st, &bits)));
                    }
                    MachineStep::Finished => break,
                    other => panic!("unexpected {other:?}"),
                }
            }
            // y and (y xor tt) is y and not y, false on both inputs
            let out = residual(&st, &bits);
            assert!(alpha_eq(&out, &Rc::new(Term::False)));
        }
    }
}
