//! Bidirectional typechecker.
//!
//! `infer` computes a type for terms whose head determines one; `check`
//! pushes an expected type into terms like injections, bare lambdas, and
//! `err` that have no principal type of their own. Types are compared up to
//! unfolding of the list type: `1 + A * [A]` and `[A]` are interchangeable.

use std::rc::Rc;

use crate::syntax::ast::build::{arrow, bit, list_ty, prod, sum, unit};
use crate::syntax::{pretty_term, SourceProgram, Term, TypeExpr};

pub type TypeEnv = Vec<(String, Rc<TypeExpr>)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeError {
    pub in_def: Option<String>,
    pub message: String,
}

impl std::fmt::Display for TypeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.in_def {
            Some(d) => write!(f, "type error in '{d}': {}", self.message),
            None => write!(f, "type error: {}", self.message),
        }
    }
}

impl std::error::Error for TypeError {}

fn fail<T>(message: String) -> Result<T, TypeError> {
    Err(TypeError { in_def: None, message })
}

/// Rewrite every `1 + A * [A]` to `[A]`, bottom up. Normal forms are the
/// canonical representatives for type equality.
pub fn normalize(ty: &TypeExpr) -> Rc<TypeExpr> {
    match ty {
        TypeExpr::Bit => bit(),
        TypeExpr::Unit => unit(),
        TypeExpr::List(a) => list_ty(normalize(a)),
        TypeExpr::Prod(a, b) => prod(normalize(a), normalize(b)),
        TypeExpr::Arrow(a, b) => arrow(normalize(a), normalize(b)),
        TypeExpr::Sum(a, b) => {
            let a = normalize(a);
            let b = normalize(b);
            if let (TypeExpr::Unit, TypeExpr::Prod(h, t)) = (&*a, &*b) {
                if let TypeExpr::List(e) = &**t {
                    if e == h {
                        return t.clone();
                    }
                }
            }
            sum(a, b)
        }
    }
}

pub fn types_equal(a: &TypeExpr, b: &TypeExpr) -> bool {
    normalize(a) == normalize(b)
}

/// The two alternatives a scrutinee of this type offers, if any. A list
/// unfolds to nil on the left and head/tail on the right.
pub fn sum_components(ty: &TypeExpr) -> Option<(Rc<TypeExpr>, Rc<TypeExpr>)> {
    match ty {
        TypeExpr::Sum(a, b) => Some((a.clone(), b.clone())),
        TypeExpr::List(e) => Some((unit(), prod(e.clone(), list_ty(e.clone())))),
        _ => None,
    }
}

fn bind<R>(env: &mut TypeEnv, x: &str, ty: Rc<TypeExpr>, f: impl FnOnce(&mut TypeEnv) -> R) -> R {
    env.push((x.to_string(), ty));
    let r = f(env);
    env.pop();
    r
}

fn lookup(env: &TypeEnv, x: &str) -> Option<Rc<TypeExpr>> {
    env.iter().rev().find(|(n, _)| n == x).map(|(_, t)| t.clone())
}

pub fn infer(env: &mut TypeEnv, t: &Rc<Term>) -> Result<Rc<TypeExpr>, TypeError> {
    match &**t {
        Term::Var(x) => {
            lookup(env, x).ok_or(()).or_else(|_| fail(format!("unbound variable '{x}'")))
        }
        Term::WireRef(_) => Ok(bit()),
        Term::True | Term::False => Ok(bit()),
        Term::Skip => Ok(unit()),
        Term::NotPrim => Ok(arrow(bit(), bit())),
        Term::AndPrim | Term::XorPrim => Ok(arrow(prod(bit(), bit()), bit())),
        Term::Split => fail("cannot infer a type for bare 'split'; apply it to a list".into()),
        Term::Err => fail("cannot infer a type for 'err'".into()),
        Term::Lam(x, Some(a), b) => {
            let r = bind(env, x, a.clone(), |env| infer(env, b))?;
            Ok(arrow(a.clone(), r))
        }
        Term::Lam(x, None, _) => {
            fail(format!("cannot infer a type for the unannotated lambda binding '{x}'"))
        }
        Term::App(f, a) => match &**f {
            Term::Split => {
                let ta = infer(env, a)?;
                match &*normalize(&ta) {
                    TypeExpr::List(e) => Ok(sum(unit(), prod(e.clone(), list_ty(e.clone())))),
                    other => fail(format!(
                        "'split' needs a list, but {} has type {other}",
                        pretty_term(a)
                    )),
                }
            }
            Term::Lam(x, None, body) => {
                let ta = infer(env, a)?;
                bind(env, x, ta, |env| infer(env, body))
            }
            Term::Lam(x, Some(ann), body) => {
                check(env, a, ann)?;
                bind(env, x, ann.clone(), |env| infer(env, body))
            }
            _ => {
                let tf = infer(env, f)?;
                match &*normalize(&tf) {
                    TypeExpr::Arrow(p, r) => {
                        check(env, a, p)?;
                        Ok(r.clone())
                    }
                    other => fail(format!(
                        "{} has type {other} and cannot be applied",
                        pretty_term(f)
                    )),
                }
            }
        },
        Term::Pair(a, b) => Ok(prod(infer(env, a)?, infer(env, b)?)),
        Term::Proj1(p) | Term::Proj2(p) => {
            let tp = infer(env, p)?;
            match &*normalize(&tp) {
                TypeExpr::Prod(a, b) => Ok(if matches!(&**t, Term::Proj1(_)) {
                    a.clone()
                } else {
                    b.clone()
                }),
                other => fail(format!(
                    "projection needs a pair, but {} has type {other}",
                    pretty_term(p)
                )),
            }
        }
        Term::LetUnit(s, b) => {
            check(env, s, &unit())?;
            infer(env, b)
        }
        Term::If(c, m, n) => {
            check(env, c, &bit())?;
            let ty = join_infer(env, m, n)?;
            if !ty.is_first_order() {
                return fail(format!("conditional branches have type {ty}, which is not first order"));
            }
            Ok(ty)
        }
        Term::Match { scrutinee, left, right } => {
            let ts = infer(env, scrutinee)?;
            let Some((lc, rc)) = sum_components(&normalize(&ts)) else {
                return fail(format!(
                    "match needs a sum or list, but {} has type {ts}",
                    pretty_term(scrutinee)
                ));
            };
            for (arm, comp) in [(left, &lc), (right, &rc)] {
                if let Some(ann) = &arm.ann {
                    if !types_equal(ann, comp) {
                        return fail(format!(
                            "match arm binds '{}' at {ann}, but the scrutinee provides {comp}",
                            arm.binder
                        ));
                    }
                }
            }
            let l_try =
                bind(env, &left.binder, lc.clone(), |env| infer(env, &left.body));
            match l_try {
                Ok(tl) => {
                    bind(env, &right.binder, rc, |env| check(env, &right.body, &tl))?;
                    Ok(normalize(&tl))
                }
                Err(le) => {
                    let tr = bind(env, &right.binder, rc, |env| infer(env, &right.body))
                        .map_err(|_| le)?;
                    bind(env, &left.binder, lc, |env| check(env, &left.body, &tr))?;
                    Ok(normalize(&tr))
                }
            }
        }
        Term::Inj1(_) | Term::Inj2(_) => {
            fail("cannot infer a type for an injection; the other summand is unconstrained".into())
        }
        Term::Fix(f) => {
            // an annotated lambda under Y checks its body against the
            // annotation, so recursive results need no principal type
            if let Term::Lam(x, Some(a), body) = &**f {
                bind(env, x, a.clone(), |env| check(env, body, a))?;
                return Ok(a.clone());
            }
            let tf = infer(env, f)?;
            match &*normalize(&tf) {
                TypeExpr::Arrow(a, b) if types_equal(a, b) => Ok(a.clone()),
                other => fail(format!(
                    "Y needs a function from a type to itself, but {} has type {other}",
                    pretty_term(f)
                )),
            }
        }
    }
}

/// Infer whichever of the two sides has a principal type and check the other
/// against it.
fn join_infer(env: &mut TypeEnv, m: &Rc<Term>, n: &Rc<Term>) -> Result<Rc<TypeExpr>, TypeError> {
    match infer(env, m) {
        Ok(tm) => {
            check(env, n, &tm)?;
            Ok(normalize(&tm))
        }
        Err(em) => {
            let tn = infer(env, n).map_err(|_| em)?;
            check(env, m, &tn)?;
            Ok(normalize(&tn))
        }
    }
}

pub fn check(env: &mut TypeEnv, t: &Rc<Term>, want: &Rc<TypeExpr>) -> Result<(), TypeError> {
    let w = normalize(want);
    match (&**t, &*w) {
        (Term::Err, _) => Ok(()),
        (Term::Lam(x, ann, b), TypeExpr::Arrow(p, r)) => {
            if let Some(a) = ann {
                if !types_equal(a, p) {
                    return fail(format!(
                        "lambda binder '{x}' is annotated {a}, but {p} is expected"
                    ));
                }
            }
            bind(env, x, p.clone(), |env| check(env, b, r))
        }
        (Term::Lam(..), _) => fail(format!("found a lambda where {w} is expected")),
        (Term::Pair(a, b), TypeExpr::Prod(p, q)) => {
            check(env, a, p)?;
            check(env, b, q)
        }
        (Term::Pair(..), _) => fail(format!("found a pair where {w} is expected")),
        (Term::Inj1(a), TypeExpr::Sum(l, _)) => check(env, a, l),
        (Term::Inj2(a), TypeExpr::Sum(_, r)) => check(env, a, r),
        (Term::Inj1(a), TypeExpr::List(_)) => check(env, a, &unit()),
        (Term::Inj2(a), TypeExpr::List(e)) => check(env, a, &prod(e.clone(), w.clone())),
        (Term::Inj1(_) | Term::Inj2(_), _) => {
            fail(format!("found an injection where {w} is expected"))
        }
        (Term::If(c, m, n), _) => {
            check(env, c, &bit())?;
            if !w.is_first_order() {
                return fail(format!("conditional at type {w}, which is not first order"));
            }
            check(env, m, &w)?;
            check(env, n, &w)
        }
        (Term::Match { scrutinee, left, right }, _) => {
            let ts = infer(env, scrutinee)?;
            let Some((lc, rc)) = sum_components(&normalize(&ts)) else {
                return fail(format!(
                    "match needs a sum or list, but {} has type {ts}",
                    pretty_term(scrutinee)
                ));
            };
            for (arm, comp) in [(left, &lc), (right, &rc)] {
                if let Some(ann) = &arm.ann {
                    if !types_equal(ann, comp) {
                        return fail(format!(
                            "match arm binds '{}' at {ann}, but the scrutinee provides {comp}",
                            arm.binder
                        ));
                    }
                }
            }
            bind(env, &left.binder, lc, |env| check(env, &left.body, &w))?;
            bind(env, &right.binder, rc, |env| check(env, &right.body, &w))
        }
        (Term::LetUnit(s, b), _) => {
            check(env, s, &unit())?;
            check(env, b, &w)
        }
        (Term::App(f, a), _) => match &**f {
            Term::Lam(x, None, body) => {
                let ta = infer(env, a)?;
                bind(env, x, ta, |env| check(env, body, &w))
            }
            Term::Lam(x, Some(ann), body) => {
                check(env, a, ann)?;
                bind(env, x, ann.clone(), |env| check(env, body, &w))
            }
            _ => {
                let got = infer(env, t)?;
                expect_equal(t, &got, &w)
            }
        },
        (Term::Fix(f), _) => check(env, f, &arrow(w.clone(), w.clone())),
        (Term::Split, TypeExpr::Arrow(d, r)) => {
            // [A] -> 1 + A * [A], whose result normalizes back to [A]
            if matches!(&**d, TypeExpr::List(_)) && d == r {
                Ok(())
            } else {
                fail(format!("'split' has type [A] -> 1 + A * [A] and cannot check against {w}"))
            }
        }
        _ => {
            let got = infer(env, t)?;
            expect_equal(t, &got, &w)
        }
    }
}

fn expect_equal(t: &Rc<Term>, got: &Rc<TypeExpr>, want: &Rc<TypeExpr>) -> Result<(), TypeError> {
    if types_equal(got, want) {
        Ok(())
    } else {
        fail(format!("{} has type {got}, but {want} is expected", pretty_term(t)))
    }
}

pub fn infer_closed(t: &Rc<Term>) -> Result<Rc<TypeExpr>, TypeError> {
    infer(&mut Vec::new(), t)
}

pub fn check_closed(t: &Rc<Term>, ty: &Rc<TypeExpr>) -> Result<(), TypeError> {
    check(&mut Vec::new(), t, ty)
}

/// Check every definition against its declared signature, with earlier
/// definitions in scope.
pub fn check_program(p: &SourceProgram) -> Result<(), TypeError> {
    let mut env: TypeEnv = Vec::new();
    for def in &p.defs {
        let t = def.term();
        check(&mut env, &t, &def.ty).map_err(|mut e| {
            if e.in_def.is_none() {
                e.in_def = Some(def.name.clone());
            }
            e
        })?;
        env.push((def.name.clone(), def.ty.clone()));
    }
    Ok(())
}
