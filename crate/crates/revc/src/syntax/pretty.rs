use std::fmt::Write as _;
use std::rc::Rc;

use super::ast::{Definition, SourceProgram, Term, TypeExpr};

// Type precedence: arrow 0, sum 1, product 2, atoms 3.
fn pp_ty(t: &TypeExpr, min: u8, out: &mut String) {
    let prec = match t {
        TypeExpr::Arrow(..) => 0,
        TypeExpr::Sum(..) => 1,
        TypeExpr::Prod(..) => 2,
        _ => 3,
    };
    let paren = prec < min;
    if paren {
        out.push('(');
    }
    match t {
        TypeExpr::Bit => out.push_str("bit"),
        TypeExpr::Unit => out.push('1'),
        TypeExpr::List(a) => {
            out.push('[');
            pp_ty(a, 0, out);
            out.push(']');
        }
        TypeExpr::Arrow(a, b) => {
            pp_ty(a, 1, out);
            out.push_str(" -> ");
            pp_ty(b, 0, out);
        }
        TypeExpr::Sum(a, b) => {
            pp_ty(a, 2, out);
            out.push_str(" + ");
            pp_ty(b, 1, out);
        }
        TypeExpr::Prod(a, b) => {
            pp_ty(a, 3, out);
            out.push_str(" * ");
            pp_ty(b, 2, out);
        }
    }
    if paren {
        out.push(')');
    }
}

impl std::fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut s = String::new();
        pp_ty(self, 0, &mut s);
        f.write_str(&s)
    }
}

// Term precedence: binders and branches 0, cons 1, application 2, atoms 3.
const P_LOW: u8 = 0;
const P_CONS: u8 = 1;
const P_APP: u8 = 2;
const P_ATOM: u8 = 3;

/// A cons chain ending in nil prints as a list literal.
fn as_literal_list(t: &Term) -> Option<Vec<&Rc<Term>>> {
    let mut items = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            Term::Inj1(u) if matches!(&**u, Term::Skip) => return Some(items),
            Term::Inj2(p) => match &**p {
                Term::Pair(h, t) => {
                    items.push(h);
                    cur = t;
                }
                _ => return None,
            },
            _ => return None,
        }
    }
}

/// Recognize `(\f. body) (Y (\f. \p1. .. bound))` so it can print as letrec.
/// Returns the pieces only when reparsing the printed form rebuilds the same
/// tree.
struct LetrecView<'a> {
    name: &'a str,
    params: Vec<(&'a str, Option<&'a Rc<TypeExpr>>)>,
    ret: Option<Rc<TypeExpr>>,
    bound: &'a Rc<Term>,
    body: &'a Rc<Term>,
}

fn as_letrec(t: &Term) -> Option<LetrecView<'_>> {
    let (fun, arg) = match t {
        Term::App(f, a) => (f, a),
        _ => return None,
    };
    let (name, body) = match &**fun {
        Term::Lam(n, None, b) => (n.as_str(), b),
        _ => return None,
    };
    let inner = match &**arg {
        Term::Fix(i) => i,
        _ => return None,
    };
    let (name2, f_ann, mut cur) = match &**inner {
        Term::Lam(n, ann, b) => (n.as_str(), ann, b),
        _ => return None,
    };
    if name2 != name {
        return None;
    }
    let mut params = Vec::new();
    while let Term::Lam(p, ann, b) = &**cur {
        params.push((p.as_str(), ann.as_ref()));
        cur = b;
    }
    match f_ann {
        None => Some(LetrecView { name, params, ret: None, bound: cur, body }),
        Some(fty) => {
            // the annotation must be exactly the fold of the param annotations
            let mut ty: &TypeExpr = fty;
            for (_, ann) in &params {
                let ann = (*ann)?;
                match ty {
                    TypeExpr::Arrow(a, b) if **a == **ann => ty = b,
                    _ => return None,
                }
            }
            Some(LetrecView {
                name,
                params,
                ret: Some(Rc::new(ty.clone())),
                bound: cur,
                body,
            })
        }
    }
}

fn pp_term(t: &Term, min: u8, out: &mut String) {
    // sugar that needs no parenthesis decisions of its own
    if matches!(t, Term::Inj1(u) if matches!(&**u, Term::Skip)) {
        out.push_str("nil");
        return;
    }
    if let Some(items) = as_literal_list(t) {
        out.push('[');
        for (i, item) in items.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            pp_term(item, P_LOW, out);
        }
        out.push(']');
        return;
    }

    let prec = match t {
        Term::Lam(..) | Term::LetUnit(..) | Term::If(..) | Term::Match { .. } => P_LOW,
        Term::App(f, _) => match &**f {
            Term::Lam(..) => P_LOW, // prints as let
            _ => P_APP,
        },
        Term::Inj2(p) if matches!(&**p, Term::Pair(..)) => P_CONS,
        Term::Proj1(_) | Term::Proj2(_) | Term::Inj1(_) | Term::Inj2(_) | Term::Fix(_) => P_APP,
        _ => P_ATOM,
    };
    let paren = prec < min;
    if paren {
        out.push('(');
    }
    match t {
        Term::Var(x) => out.push_str(x),
        Term::WireRef(i) => {
            let _ = write!(out, "p{i}");
        }
        Term::True => out.push_str("tt"),
        Term::False => out.push_str("ff"),
        Term::Skip => out.push_str("skip"),
        Term::Err => out.push_str("err"),
        Term::AndPrim => out.push_str("and"),
        Term::XorPrim => out.push_str("xor"),
        Term::NotPrim => out.push_str("not"),
        Term::Split => out.push_str("split"),
        Term::Lam(x, ann, b) => {
            let _ = write!(out, "\\{x}");
            if let Some(a) = ann {
                out.push_str(" : ");
                pp_ty(a, 0, out);
            }
            out.push_str(". ");
            pp_term(b, P_LOW, out);
        }
        Term::App(f, a) => {
            if let Some(lr) = as_letrec(t) {
                let _ = write!(out, "letrec {}", lr.name);
                for (p, ann) in &lr.params {
                    match ann {
                        Some(ty) => {
                            let _ = write!(out, " ({p} : ");
                            pp_ty(ty, 0, out);
                            out.push(')');
                        }
                        None => {
                            let _ = write!(out, " {p}");
                        }
                    }
                }
                if let Some(r) = &lr.ret {
                    out.push_str(" : ");
                    pp_ty(r, 0, out);
                }
                out.push_str(" = ");
                pp_term(lr.bound, P_LOW, out);
                out.push_str(" in ");
                pp_term(lr.body, P_LOW, out);
            } else if let Term::Lam(x, None, body) = &**f {
                let _ = write!(out, "let {x} = ");
                pp_term(a, P_LOW, out);
                out.push_str(" in ");
                pp_term(body, P_LOW, out);
            } else {
                // and/xor applied to a literal pair print uncurried
                match (&**f, &**a) {
                    (Term::AndPrim, Term::Pair(x, y)) => {
                        out.push_str("and ");
                        pp_term(x, P_ATOM, out);
                        out.push(' ');
                        pp_term(y, P_ATOM, out);
                    }
                    (Term::XorPrim, Term::Pair(x, y)) => {
                        out.push_str("xor ");
                        pp_term(x, P_ATOM, out);
                        out.push(' ');
                        pp_term(y, P_ATOM, out);
                    }
                    _ => {
                        // `and x` applied further would reparse as the
                        // uncurried form, so force parentheses around it
                        let lone_prim = matches!(&**f,
                            Term::App(g, b)
                                if matches!(&**g, Term::AndPrim | Term::XorPrim)
                                    && !matches!(&**b, Term::Pair(..)));
                        pp_term(f, if lone_prim { P_ATOM } else { P_APP }, out);
                        out.push(' ');
                        pp_term(a, P_ATOM, out);
                    }
                }
            }
        }
        Term::Pair(..) => {
            out.push('<');
            let mut cur = t;
            let mut first = true;
            while let Term::Pair(a, b) = cur {
                if !first {
                    out.push_str(", ");
                }
                pp_term(a, P_LOW, out);
                first = false;
                cur = b;
            }
            out.push_str(", ");
            pp_term(cur, P_LOW, out);
            out.push('>');
        }
        Term::Proj1(a) => {
            out.push_str("pi1 ");
            pp_term(a, P_ATOM, out);
        }
        Term::Proj2(a) => {
            out.push_str("pi2 ");
            pp_term(a, P_ATOM, out);
        }
        Term::Inj1(a) => {
            out.push_str("inl ");
            pp_term(a, P_ATOM, out);
        }
        Term::Inj2(a) => match &**a {
            Term::Pair(h, tl) => {
                pp_term(h, P_APP, out);
                out.push_str(" :: ");
                pp_term(tl, P_CONS, out);
            }
            _ => {
                out.push_str("inr ");
                pp_term(a, P_ATOM, out);
            }
        },
        Term::LetUnit(s, b) => {
            out.push_str("let * = ");
            pp_term(s, P_LOW, out);
            out.push_str(" in ");
            pp_term(b, P_LOW, out);
        }
        Term::If(c, m, n) => {
            out.push_str("if ");
            pp_term(c, P_LOW, out);
            out.push_str(" then ");
            pp_term(m, P_LOW, out);
            out.push_str(" else ");
            pp_term(n, P_LOW, out);
        }
        Term::Match { scrutinee, left, right } => {
            out.push_str("match ");
            pp_term(scrutinee, P_LOW, out);
            out.push_str(" with inl ");
            match &left.ann {
                Some(ty) => {
                    let _ = write!(out, "({} : ", left.binder);
                    pp_ty(ty, 0, out);
                    out.push(')');
                }
                None => out.push_str(&left.binder),
            }
            out.push_str(" -> ");
            pp_term(&left.body, P_LOW, out);
            out.push_str(" | inr ");
            match &right.ann {
                Some(ty) => {
                    let _ = write!(out, "({} : ", right.binder);
                    pp_ty(ty, 0, out);
                    out.push(')');
                }
                None => out.push_str(&right.binder),
            }
            out.push_str(" -> ");
            pp_term(&right.body, P_LOW, out);
        }
        Term::Fix(a) => {
            out.push_str("Y ");
            pp_term(a, P_ATOM, out);
        }
    }
    if paren {
        out.push(')');
    }
}

impl std::fmt::Display for Term {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut s = String::new();
        pp_term(self, P_LOW, &mut s);
        f.write_str(&s)
    }
}

pub fn pretty_term(t: &Term) -> String {
    let mut s = String::new();
    pp_term(t, P_LOW, &mut s);
    s
}

pub fn pretty_definition(d: &Definition) -> String {
    let mut s = String::new();
    let _ = write!(s, "def {} : ", d.name);
    pp_ty(&d.ty, 0, &mut s);
    let _ = write!(s, "\ndef {}", d.name);
    for (p, ann) in &d.params {
        match ann {
            Some(ty) => {
                let _ = write!(s, " ({p} : ");
                pp_ty(ty, 0, &mut s);
                s.push(')');
            }
            None => {
                let _ = write!(s, " {p}");
            }
        }
    }
    s.push_str(" =\n  ");
    pp_term(&d.body, P_LOW, &mut s);
    s.push('\n');
    s
}

pub fn pretty_program(p: &SourceProgram) -> String {
    let mut s = String::new();
    for (i, d) in p.defs.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        s.push_str(&pretty_definition(d));
    }
    s
}
