//! Deterministic small-step evaluator.
//!
//! The strategy is leftmost-innermost call by value, with one deliberate
//! twist: a conditional evaluates its condition **and both branches** to
//! values before selecting one. The circuit-generating machine must lay
//! down gates for both branches, so the plain evaluator follows the same
//! schedule to keep the two traces aligned step for step.
//!
//! `err` anywhere at the evaluation focus aborts the whole run, including
//! inside a branch the conditional would not have selected.

use std::rc::Rc;

use crate::syntax::{subst, Term};

/// One step of evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    /// The term took a step to the payload.
    Next(Rc<Term>),
    /// The term is a value; there is nothing to do.
    Value,
    /// The focus reached `err`.
    HitErr,
    /// The focus reached a term no rule covers (ill-typed or open).
    Stuck(String),
}

/// Values: literals, wire references, lambdas and the unapplied primitives,
/// and pairs/injections of values.
pub fn is_value(t: &Term) -> bool {
    match t {
        Term::True
        | Term::False
        | Term::Skip
        | Term::WireRef(_)
        | Term::Lam(..)
        | Term::AndPrim
        | Term::XorPrim
        | Term::NotPrim
        | Term::Split => true,
        Term::Pair(a, b) => is_value(a) && is_value(b),
        Term::Inj1(a) | Term::Inj2(a) => is_value(a),
        _ => false,
    }
}

fn bool_lit(t: &Term) -> Option<bool> {
    match t {
        Term::True => Some(true),
        Term::False => Some(false),
        _ => None,
    }
}

fn lit(b: bool) -> Rc<Term> {
    Rc::new(if b { Term::True } else { Term::False })
}

/// Step a subterm and rebuild the parent on success.
macro_rules! into {
    ($sub:expr, $build:expr) => {
        match step($sub) {
            Step::Next(n) => Step::Next($build(n)),
            other => other,
        }
    };
}

/// The unique next term under the deterministic strategy.
pub fn step(t: &Rc<Term>) -> Step {
    match &**t {
        Term::Err => Step::HitErr,
        Term::Var(x) => Step::Stuck(format!("unbound variable '{x}'")),
        _ if is_value(t) => Step::Value,

        Term::App(f, a) => {
            if !is_value(f) {
                return into!(f, |n| Rc::new(Term::App(n, a.clone())));
            }
            if !is_value(a) {
                return into!(a, |n| Rc::new(Term::App(f.clone(), n)));
            }
            match &**f {
                Term::Lam(x, _, body) => Step::Next(subst(body, x, a)),
                Term::NotPrim => match bool_lit(a) {
                    Some(b) => Step::Next(lit(!b)),
                    None => Step::Stuck("'not' applied to a non-boolean".into()),
                },
                Term::AndPrim | Term::XorPrim => match &**a {
                    Term::Pair(x, y) => match (bool_lit(x), bool_lit(y)) {
                        (Some(bx), Some(by)) => {
                            let r = if matches!(&**f, Term::AndPrim) { bx && by } else { bx ^ by };
                            Step::Next(lit(r))
                        }
                        _ => Step::Stuck("boolean primitive applied to non-booleans".into()),
                    },
                    _ => Step::Stuck("boolean primitive applied to a non-pair".into()),
                },
                // a list value already exposes its first constructor
                Term::Split => match &**a {
                    Term::Inj1(_) | Term::Inj2(_) => Step::Next(a.clone()),
                    _ => Step::Stuck("'split' applied to a non-list".into()),
                },
                _ => Step::Stuck(format!("applied non-function value {}", f)),
            }
        }

        Term::If(c, m, n) => {
            if !is_value(c) {
                return into!(c, |x| Rc::new(Term::If(x, m.clone(), n.clone())));
            }
            if !is_value(m) {
                return into!(m, |x| Rc::new(Term::If(c.clone(), x, n.clone())));
            }
            if !is_value(n) {
                return into!(n, |x| Rc::new(Term::If(c.clone(), m.clone(), x)));
            }
            match bool_lit(c) {
                Some(true) => Step::Next(m.clone()),
                Some(false) => Step::Next(n.clone()),
                None => Step::Stuck("conditional on a non-boolean".into()),
            }
        }

        Term::Pair(a, b) => {
            if !is_value(a) {
                into!(a, |n| Rc::new(Term::Pair(n, b.clone())))
            } else {
                into!(b, |n| Rc::new(Term::Pair(a.clone(), n)))
            }
        }

        Term::Proj1(p) => {
            if !is_value(p) {
                return into!(p, |n| Rc::new(Term::Proj1(n)));
            }
            match &**p {
                Term::Pair(a, _) => Step::Next(a.clone()),
                _ => Step::Stuck("first projection of a non-pair".into()),
            }
        }
        Term::Proj2(p) => {
            if !is_value(p) {
                return into!(p, |n| Rc::new(Term::Proj2(n)));
            }
            match &**p {
                Term::Pair(_, b) => Step::Next(b.clone()),
                _ => Step::Stuck("second projection of a non-pair".into()),
            }
        }

        Term::LetUnit(s, b) => {
            if !is_value(s) {
                return into!(s, |n| Rc::new(Term::LetUnit(n, b.clone())));
            }
            match &**s {
                Term::Skip => Step::Next(b.clone()),
                _ => Step::Stuck("unit binding of a non-unit".into()),
            }
        }

        Term::Match { scrutinee, left, right } => {
            if !is_value(scrutinee) {
                return into!(scrutinee, |n| Rc::new(Term::Match {
                    scrutinee: n,
                    left: left.clone(),
                    right: right.clone(),
                }));
            }
            match &**scrutinee {
                Term::Inj1(v) => Step::Next(subst(&left.body, &left.binder, v)),
                Term::Inj2(v) => Step::Next(subst(&right.body, &right.binder, v)),
                _ => Step::Stuck("match on a non-injection".into()),
            }
        }

        Term::Inj1(a) => into!(a, |n| Rc::new(Term::Inj1(n))),
        Term::Inj2(a) => into!(a, |n| Rc::new(Term::Inj2(n))),

        Term::Fix(f) => {
            if !is_value(f) {
                return into!(f, |n| Rc::new(Term::Fix(n)));
            }
            match &**f {
                Term::Lam(x, _, body) => Step::Next(subst(body, x, t)),
                // Y of any other function value unfolds generically
                _ => Step::Next(Rc::new(Term::App(f.clone(), t.clone()))),
            }
        }

        // remaining forms are values, handled above
        _ => Step::Value,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalResult {
    Value(Rc<Term>),
    /// The run reached `err`.
    Error,
    /// Fuel ran out; the payload is the last term reached.
    OutOfFuel(Rc<Term>),
    Stuck { term: Rc<Term>, reason: String },
}

/// Run to a value, an error, or fuel exhaustion. Fuel counts steps.
pub fn eval(t: &Rc<Term>, fuel: u64) -> EvalResult {
    let mut cur = t.clone();
    let mut left = fuel;
    loop {
        match step(&cur) {
            Step::Value => return EvalResult::Value(cur),
            Step::HitErr => return EvalResult::Error,
            Step::Stuck(reason) => return EvalResult::Stuck { term: cur, reason },
            Step::Next(n) => {
                if left == 0 {
                    return EvalResult::OutOfFuel(cur);
                }
                left -= 1;
                cur = n;
            }
        }
    }
}

/// Decode a closed first-order value into its bits, left to right.
/// Pairs flatten; list elements contribute in order; units contribute none.
pub fn value_bits(t: &Term) -> Option<Vec<bool>> {
    fn go(t: &Term, out: &mut Vec<bool>) -> bool {
        match t {
            Term::True => {
                out.push(true);
                true
            }
            Term::False => {
                out.push(false);
                true
            }
            Term::Skip => true,
            Term::Pair(a, b) => go(a, out) && go(b, out),
            Term::Inj1(u) => matches!(&**u, Term::Skip),
            Term::Inj2(p) => match &**p {
                Term::Pair(h, t) => go(h, out) && go(t, out),
                _ => false,
            },
            _ => false,
        }
    }
    let mut out = Vec::new();
    go(t, &mut out).then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::ast::build::*;
    use crate::syntax::parse_term_str;

    fn t(src: &str) -> Rc<Term> {
        parse_term_str(src).unwrap()
    }

    fn run(src: &str) -> EvalResult {
        eval(&t(src), 100_000)
    }

    fn value(src: &str) -> Rc<Term> {
        match run(src) {
            EvalResult::Value(v) => v,
            other => panic!("{src}: {other:?}"),
        }
    }

    #[test]
    fn booleans() {
        assert_eq!(value("and tt ff"), ff());
        assert_eq!(value("and tt tt"), tt());
        assert_eq!(value("xor tt tt"), ff());
        assert_eq!(value("xor tt ff"), tt());
        assert_eq!(value("not ff"), tt());
    }

    #[test]
    fn argument_evaluates_before_beta() {
        let t0 = t("(\\y : bit. and y y) (not tt)");
        let Step::Next(t1) = step(&t0) else { panic!() };
        assert_eq!(t1, t("(\\y : bit. and y y) ff"));
        let Step::Next(t2) = step(&t1) else { panic!() };
        assert_eq!(t2, t("and ff ff"));
        let Step::Next(t3) = step(&t2) else { panic!() };
        assert_eq!(t3, ff());
        assert_eq!(step(&t3), Step::Value);
    }

    #[test]
    fn conditionals_evaluate_both_branches_before_selecting() {
        let t0 = t("if tt then (not tt) else (not ff)");
        let Step::Next(t1) = step(&t0) else { panic!() };
        assert_eq!(t1, t("if tt then ff else (not ff)"));
        let Step::Next(t2) = step(&t1) else { panic!() };
        assert_eq!(t2, t("if tt then ff else tt"));
        let Step::Next(t3) = step(&t2) else { panic!() };
        assert_eq!(t3, ff());
    }

    #[test]
    fn err_in_an_unselected_branch_still_aborts() {
        assert_eq!(run("if tt then tt else err"), EvalResult::Error);
        assert_eq!(run("if ff then err else tt"), EvalResult::Error);
        assert_eq!(run("err"), EvalResult::Error);
    }

    #[test]
    fn lets_and_pairs() {
        assert_eq!(value("let x = not tt in <x, not x>"), pair(ff(), tt()));
        assert_eq!(value("pi2 <tt, ff>"), ff());
        assert_eq!(value("let * = skip in tt"), tt());
        assert_eq!(value("let <a, b> = <tt, ff> in xor a b"), tt());
    }

    #[test]
    fn split_exposes_list_constructors() {
        assert_eq!(value("(\\xs : [bit]. split xs) nil"), nil());
        assert_eq!(
            value("(\\xs : [bit]. split xs) [tt]"),
            cons(tt(), nil())
        );
        assert_eq!(
            value("(\\xs : [bit]. match split xs with inl u -> ff | inr p -> pi1 p) [tt, ff]"),
            tt()
        );
    }

    #[test]
    fn recursion_copies_a_list() {
        let src = "letrec copy (xs : [bit]) : [bit] = \
                   match split xs with inl u -> nil | inr p -> pi1 p :: copy (pi2 p) \
                   in copy [tt, ff, tt]";
        assert_eq!(value(src), list(vec![tt(), ff(), tt()]));
    }

    #[test]
    fn divergence_runs_out_of_fuel() {
        assert!(matches!(eval(&t("Y (\\x : bit. x)"), 100), EvalResult::OutOfFuel(_)));
        // Y of a non-lambda value unfolds generically instead of sticking
        assert!(matches!(eval(&t("Y not"), 100), EvalResult::OutOfFuel(_)));
    }

    #[test]
    fn stuck_terms_report_a_reason() {
        assert!(matches!(run("tt ff"), EvalResult::Stuck { .. }));
        assert!(matches!(run("pi1 tt"), EvalResult::Stuck { .. }));
    }

    #[test]
    fn bits_of_first_order_values() {
        assert_eq!(value_bits(&pair(tt(), pair(ff(), tt()))), Some(vec![true, false, true]));
        assert_eq!(value_bits(&list(vec![tt(), ff()])), Some(vec![true, false]));
        assert_eq!(value_bits(&nil()), Some(vec![]));
        assert_eq!(value_bits(&skip()), Some(vec![]));
        assert_eq!(value_bits(&lam("x", var("x"))), None);
    }
}
