use std::rc::Rc;

/// Types: bits, unit, sums, products, functions and lists.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeExpr {
    Bit,
    Unit,
    Sum(Rc<TypeExpr>, Rc<TypeExpr>),
    Prod(Rc<TypeExpr>, Rc<TypeExpr>),
    Arrow(Rc<TypeExpr>, Rc<TypeExpr>),
    List(Rc<TypeExpr>),
}

impl TypeExpr {
    /// First-order types are the ones an `if` may return and a circuit may
    /// carry on wires: bits, products of first-order types, lists of
    /// first-order types. Unit, sums and functions are excluded.
    pub fn is_first_order(&self) -> bool {
        match self {
            TypeExpr::Bit => true,
            TypeExpr::Prod(a, b) => a.is_first_order() && b.is_first_order(),
            TypeExpr::List(a) => a.is_first_order(),
            TypeExpr::Unit | TypeExpr::Sum(..) | TypeExpr::Arrow(..) => false,
        }
    }
}

/// One arm of a match; the binder may carry an annotation when the
/// scrutinee's type is not inferable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchArm {
    pub binder: String,
    pub ann: Option<Rc<TypeExpr>>,
    pub body: Rc<Term>,
}

/// Core terms. Surface sugar (let, letrec, lists, uncurried and/xor) is
/// desugared by the parser; `WireRef` never appears in parsed source, it is
/// the machine's handle on an allocated circuit wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(String),
    WireRef(usize),
    Lam(String, Option<Rc<TypeExpr>>, Rc<Term>),
    App(Rc<Term>, Rc<Term>),
    Pair(Rc<Term>, Rc<Term>),
    Proj1(Rc<Term>),
    Proj2(Rc<Term>),
    Skip,
    LetUnit(Rc<Term>, Rc<Term>),
    True,
    False,
    If(Rc<Term>, Rc<Term>, Rc<Term>),
    AndPrim,
    XorPrim,
    NotPrim,
    Inj1(Rc<Term>),
    Inj2(Rc<Term>),
    Match {
        scrutinee: Rc<Term>,
        left: MatchArm,
        right: MatchArm,
    },
    Split,
    Fix(Rc<Term>),
    Err,
}

/// A named top-level definition: declared type, parameter list and body.
/// `term()` folds the parameters back into lambdas.
#[derive(Debug, Clone, PartialEq)]
pub struct Definition {
    pub name: String,
    pub ty: Rc<TypeExpr>,
    pub params: Vec<(String, Option<Rc<TypeExpr>>)>,
    pub body: Rc<Term>,
}

impl Definition {
    /// The definition as a lambda term. Parameters without their own
    /// annotation pick one up from the declared type.
    pub fn term(&self) -> Rc<Term> {
        let mut anns: Vec<Option<Rc<TypeExpr>>> = Vec::new();
        let mut sig: &TypeExpr = &self.ty;
        for (_, own) in &self.params {
            let from_sig = match sig {
                TypeExpr::Arrow(a, rest) => {
                    let a = a.clone();
                    sig = rest;
                    Some(a)
                }
                _ => None,
            };
            anns.push(own.clone().or(from_sig));
        }
        let mut t = self.body.clone();
        for ((name, _), ann) in self.params.iter().zip(anns).rev() {
            t = Rc::new(Term::Lam(name.clone(), ann, t));
        }
        t
    }
}

/// A parsed source file. The last definition is the program entry; earlier
/// definitions may be referenced by later ones and are resolved by
/// substitution.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceProgram {
    pub defs: Vec<Definition>,
}

impl SourceProgram {
    pub fn entry(&self) -> &Definition {
        self.defs.last().expect("programs have at least one definition")
    }

    /// The entry term with every earlier definition substituted in.
    pub fn entry_closed_term(&self) -> Rc<Term> {
        let mut resolved: Vec<(String, Rc<Term>)> = Vec::new();
        for def in &self.defs {
            let mut t = def.term();
            for (name, closed) in resolved.iter().rev() {
                t = subst(&t, name, closed);
            }
            resolved.push((def.name.clone(), t));
        }
        resolved.pop().unwrap().1
    }
}

/// Free variables of a term, ignoring wire references.
pub fn free_vars(t: &Term, acc: &mut std::collections::BTreeSet<String>) {
    match t {
        Term::Var(x) => {
            acc.insert(x.clone());
        }
        Term::Lam(x, _, b) => {
            let mut inner = std::collections::BTreeSet::new();
            free_vars(b, &mut inner);
            inner.remove(x);
            acc.extend(inner);
        }
        Term::Match { scrutinee, left, right } => {
            free_vars(scrutinee, acc);
            for arm in [left, right] {
                let mut inner = std::collections::BTreeSet::new();
                free_vars(&arm.body, &mut inner);
                inner.remove(&arm.binder);
                acc.extend(inner);
            }
        }
        _ => {
            for c in children(t) {
                free_vars(c, acc);
            }
        }
    }
}

/// Wire references occurring in a term.
pub fn wire_refs(t: &Term, acc: &mut std::collections::BTreeSet<usize>) {
    if let Term::WireRef(i) = t {
        acc.insert(*i);
    }
    match t {
        Term::Match { scrutinee, left, right } => {
            wire_refs(scrutinee, acc);
            wire_refs(&left.body, acc);
            wire_refs(&right.body, acc);
        }
        _ => {
            for c in children(t) {
                wire_refs(c, acc);
            }
        }
    }
}

fn children(t: &Term) -> Vec<&Rc<Term>> {
    match t {
        Term::Lam(_, _, b) | Term::Proj1(b) | Term::Proj2(b) | Term::Inj1(b)
        | Term::Inj2(b) | Term::Fix(b) => vec![b],
        Term::App(a, b) | Term::Pair(a, b) | Term::LetUnit(a, b) => vec![a, b],
        Term::If(a, b, c) => vec![a, b, c],
        Term::Match { .. } => vec![],
        _ => vec![],
    }
}

/// Capture-avoiding substitution of `value` for the free variable `x`.
/// Binders shadow; a binder whose name occurs free in `value` is renamed.
pub fn subst(t: &Rc<Term>, x: &str, value: &Rc<Term>) -> Rc<Term> {
    match &**t {
        Term::Var(y) => {
            if y == x {
                value.clone()
            } else {
                t.clone()
            }
        }
        Term::Lam(y, ann, b) => {
            if y == x {
                t.clone()
            } else if occurs_free(value, y) {
                let fresh = fresh_name(y, &[b, value]);
                let renamed = subst(b, y, &Rc::new(Term::Var(fresh.clone())));
                Rc::new(Term::Lam(fresh, ann.clone(), subst(&renamed, x, value)))
            } else {
                Rc::new(Term::Lam(y.clone(), ann.clone(), subst(b, x, value)))
            }
        }
        Term::Match { scrutinee, left, right } => {
            let sub_arm = |arm: &MatchArm| -> MatchArm {
                if arm.binder == x {
                    arm.clone()
                } else if occurs_free(value, &arm.binder) {
                    let fresh = fresh_name(&arm.binder, &[&arm.body, value]);
                    let renamed = subst(&arm.body, &arm.binder, &Rc::new(Term::Var(fresh.clone())));
                    MatchArm { binder: fresh, ann: arm.ann.clone(), body: subst(&renamed, x, value) }
                } else {
                    MatchArm { binder: arm.binder.clone(), ann: arm.ann.clone(), body: subst(&arm.body, x, value) }
                }
            };
            Rc::new(Term::Match {
                scrutinee: subst(scrutinee, x, value),
                left: sub_arm(left),
                right: sub_arm(right),
            })
        }
        Term::App(a, b) => Rc::new(Term::App(subst(a, x, value), subst(b, x, value))),
        Term::Pair(a, b) => Rc::new(Term::Pair(subst(a, x, value), subst(b, x, value))),
        Term::LetUnit(a, b) => Rc::new(Term::LetUnit(subst(a, x, value), subst(b, x, value))),
        Term::If(c, m, n) => Rc::new(Term::If(subst(c, x, value), subst(m, x, value), subst(n, x, value))),
        Term::Proj1(a) => Rc::new(Term::Proj1(subst(a, x, value))),
        Term::Proj2(a) => Rc::new(Term::Proj2(subst(a, x, value))),
        Term::Inj1(a) => Rc::new(Term::Inj1(subst(a, x, value))),
        Term::Inj2(a) => Rc::new(Term::Inj2(subst(a, x, value))),
        Term::Fix(a) => Rc::new(Term::Fix(subst(a, x, value))),
        Term::WireRef(_) | Term::Skip | Term::True | Term::False | Term::AndPrim
        | Term::XorPrim | Term::NotPrim | Term::Split | Term::Err => t.clone(),
    }
}

fn occurs_free(t: &Term, x: &str) -> bool {
    let mut fv = std::collections::BTreeSet::new();
    free_vars(t, &mut fv);
    fv.contains(x)
}

fn fresh_name(base: &str, avoid_in: &[&Rc<Term>]) -> String {
    let mut avoid = std::collections::BTreeSet::new();
    for t in avoid_in {
        free_vars(t, &mut avoid);
        all_names(t, &mut avoid);
    }
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() { "x" } else { stem };
    for k in 1.. {
        let cand = format!("{stem}{k}");
        if !avoid.contains(&cand) {
            return cand;
        }
    }
    unreachable!()
}

fn all_names(t: &Term, acc: &mut std::collections::BTreeSet<String>) {
    match t {
        Term::Var(x) => {
            acc.insert(x.clone());
        }
        Term::Lam(x, _, b) => {
            acc.insert(x.clone());
            all_names(b, acc);
        }
        Term::Match { scrutinee, left, right } => {
            all_names(scrutinee, acc);
            for arm in [left, right] {
                acc.insert(arm.binder.clone());
                all_names(&arm.body, acc);
            }
        }
        _ => {
            for c in children(t) {
                all_names(c, acc);
            }
        }
    }
}

/// Alpha-equivalence: equality up to consistent renaming of bound variables.
pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    fn go(a: &Term, b: &Term, env: &mut Vec<(String, String)>) -> bool {
        let lookup = |env: &[(String, String)], x: &str, left: bool| -> Option<usize> {
            env.iter().rposition(|(l, r)| if left { l == x } else { r == x })
        };
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => match (lookup(env, x, true), lookup(env, y, false)) {
                (Some(i), Some(j)) => i == j,
                (None, None) => x == y,
                _ => false,
            },
            (Term::Lam(x, ax, ba), Term::Lam(y, ay, bb)) => {
                if ax != ay {
                    return false;
                }
                env.push((x.clone(), y.clone()));
                let r = go(ba, bb, env);
                env.pop();
                r
            }
            (
                Term::Match { scrutinee: sa, left: la, right: ra },
                Term::Match { scrutinee: sb, left: lb, right: rb },
            ) => {
                if !go(sa, sb, env) || la.ann != lb.ann || ra.ann != rb.ann {
                    return false;
                }
                env.push((la.binder.clone(), lb.binder.clone()));
                let l = go(&la.body, &lb.body, env);
                env.pop();
                if !l {
                    return false;
                }
                env.push((ra.binder.clone(), rb.binder.clone()));
                let r = go(&ra.body, &rb.body, env);
                env.pop();
                r
            }
            (Term::App(a1, a2), Term::App(b1, b2))
            | (Term::Pair(a1, a2), Term::Pair(b1, b2))
            | (Term::LetUnit(a1, a2), Term::LetUnit(b1, b2)) => {
                go(a1, b1, env) && go(a2, b2, env)
            }
            (Term::If(a1, a2, a3), Term::If(b1, b2, b3)) => {
                go(a1, b1, env) && go(a2, b2, env) && go(a3, b3, env)
            }
            (Term::Proj1(a1), Term::Proj1(b1))
            | (Term::Proj2(a1), Term::Proj2(b1))
            | (Term::Inj1(a1), Term::Inj1(b1))
            | (Term::Inj2(a1), Term::Inj2(b1))
            | (Term::Fix(a1), Term::Fix(b1)) => go(a1, b1, env),
            _ => a == b,
        }
    }
    go(a, b, &mut Vec::new())
}

/// Terse constructors used by tests and by the lifting translation.
pub mod build {
    use super::*;

    pub fn var(x: &str) -> Rc<Term> {
        Rc::new(Term::Var(x.to_string()))
    }
    pub fn wire(i: usize) -> Rc<Term> {
        Rc::new(Term::WireRef(i))
    }
    pub fn lam(x: &str, body: Rc<Term>) -> Rc<Term> {
        Rc::new(Term::Lam(x.to_string(), None, body))
    }
    pub fn lam_t(x: &str, ty: Rc<TypeExpr>, body: Rc<Term>) -> Rc<Term> {
        Rc::new(Term::Lam(x.to_string(), Some(ty), body))
    }
    pub fn app(f: Rc<Term>, a: Rc<Term>) -> Rc<Term> {
        Rc::new(Term::App(f, a))
    }
    pub fn app2(f: Rc<Term>, a: Rc<Term>, b: Rc<Term>) -> Rc<Term> {
        app(app(f, a), b)
    }
    pub fn pair(a: Rc<Term>, b: Rc<Term>) -> Rc<Term> {
        Rc::new(Term::Pair(a, b))
    }
    pub fn proj1(a: Rc<Term>) -> Rc<Term> {
        Rc::new(Term::Proj1(a))
    }
    pub fn proj2(a: Rc<Term>) -> Rc<Term> {
        Rc::new(Term::Proj2(a))
    }
    pub fn skip() -> Rc<Term> {
        Rc::new(Term::Skip)
    }
    pub fn let_unit(s: Rc<Term>, b: Rc<Term>) -> Rc<Term> {
        Rc::new(Term::LetUnit(s, b))
    }
    pub fn tt() -> Rc<Term> {
        Rc::new(Term::True)
    }
    pub fn ff() -> Rc<Term> {
        Rc::new(Term::False)
    }
    pub fn ite(c: Rc<Term>, m: Rc<Term>, n: Rc<Term>) -> Rc<Term> {
        Rc::new(Term::If(c, m, n))
    }
    pub fn inj1(a: Rc<Term>) -> Rc<Term> {
        Rc::new(Term::Inj1(a))
    }
    pub fn inj2(a: Rc<Term>) -> Rc<Term> {
        Rc::new(Term::Inj2(a))
    }
    pub fn nil() -> Rc<Term> {
        inj1(skip())
    }
    pub fn cons(h: Rc<Term>, t: Rc<Term>) -> Rc<Term> {
        inj2(pair(h, t))
    }
    pub fn list(items: Vec<Rc<Term>>) -> Rc<Term> {
        items.into_iter().rev().fold(nil(), |acc, h| cons(h, acc))
    }
    pub fn fix(a: Rc<Term>) -> Rc<Term> {
        Rc::new(Term::Fix(a))
    }
    pub fn err() -> Rc<Term> {
        Rc::new(Term::Err)
    }
    pub fn and2(a: Rc<Term>, b: Rc<Term>) -> Rc<Term> {
        app(Rc::new(Term::AndPrim), pair(a, b))
    }
    pub fn xor2(a: Rc<Term>, b: Rc<Term>) -> Rc<Term> {
        app(Rc::new(Term::XorPrim), pair(a, b))
    }
    pub fn not1(a: Rc<Term>) -> Rc<Term> {
        app(Rc::new(Term::NotPrim), a)
    }
    pub fn match_term(s: Rc<Term>, lx: &str, lb: Rc<Term>, rx: &str, rb: Rc<Term>) -> Rc<Term> {
        Rc::new(Term::Match {
            scrutinee: s,
            left: MatchArm { binder: lx.to_string(), ann: None, body: lb },
            right: MatchArm { binder: rx.to_string(), ann: None, body: rb },
        })
    }
    pub fn split_of(a: Rc<Term>) -> Rc<Term> {
        app(Rc::new(Term::Split), a)
    }
    pub fn let_in(x: &str, bound: Rc<Term>, body: Rc<Term>) -> Rc<Term> {
        app(lam(x, body), bound)
    }

    pub fn bit() -> Rc<TypeExpr> {
        Rc::new(TypeExpr::Bit)
    }
    pub fn unit() -> Rc<TypeExpr> {
        Rc::new(TypeExpr::Unit)
    }
    pub fn sum(a: Rc<TypeExpr>, b: Rc<TypeExpr>) -> Rc<TypeExpr> {
        Rc::new(TypeExpr::Sum(a, b))
    }
    pub fn prod(a: Rc<TypeExpr>, b: Rc<TypeExpr>) -> Rc<TypeExpr> {
        Rc::new(TypeExpr::Prod(a, b))
    }
    pub fn arrow(a: Rc<TypeExpr>, b: Rc<TypeExpr>) -> Rc<TypeExpr> {
        Rc::new(TypeExpr::Arrow(a, b))
    }
    pub fn list_ty(a: Rc<TypeExpr>) -> Rc<TypeExpr> {
        Rc::new(TypeExpr::List(a))
    }
}
