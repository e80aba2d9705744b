//! Circuit generation as a program transformation.
//!
//! The machine in [`crate::machine`] threads a circuit through evaluation
//! from outside the language. The same construction can be expressed
//! inside the language: encode wires as unary numbers (`[1]`), gates and
//! the gate list as nested pairs and lists, and pass a state pair of
//! emitted gates and a fresh-wire counter through every computation. A
//! term of type `A` lifts to a term of type `state -> state * A'`, where
//! `A'` replaces `bit` with the wire encoding and every arrow `B -> C`
//! with `B' -> (state -> state * C')`.
//!
//! The translation is call-by-value and wire-for-wire faithful to the
//! machine: running a lifted program with the evaluator produces exactly
//! the gate list, counter value and output wires the machine produces on
//! the same program. Boolean literals and primitives become combinators
//! (`mtt`, `mnot`, ...) that prepend gates and bump the counter; a
//! conditional becomes a type-directed multiplexer over the branch shape;
//! the fixpoint lifts through a wrapper that keeps recursive calls guarded
//! behind a lambda. The emitted program is self-contained, typechecks
//! under the ordinary rules, and contains no conditionals at all.

use std::collections::BTreeSet;
use std::rc::Rc;

use crate::circuit::{Control, Gate};
use crate::eval::{eval, EvalResult};
use crate::syntax::ast::build::{
    app, app2, arrow, bit, cons, err, ff, fix, inj1, inj2, lam, lam_t, let_in, let_unit, list_ty,
    nil, pair, proj1, proj2, prod, skip, split_of, sum, tt, unit, var,
};
use crate::syntax::{
    free_vars, pretty_term, subst, Definition, MatchArm, SourceProgram, Term, TypeExpr,
};
use crate::typecheck::{normalize, sum_components, types_equal, TypeEnv, TypeError};

pub fn wire_ty() -> Rc<TypeExpr> {
    list_ty(unit())
}

pub fn control_ty() -> Rc<TypeExpr> {
    prod(wire_ty(), bit())
}

pub fn gate_ty() -> Rc<TypeExpr> {
    prod(wire_ty(), list_ty(control_ty()))
}

/// Gates emitted so far (newest first) and the next fresh wire.
pub fn state_ty() -> Rc<TypeExpr> {
    prod(list_ty(gate_ty()), wire_ty())
}

/// The type of a circuit-building computation returning `t`.
pub fn circ(t: Rc<TypeExpr>) -> Rc<TypeExpr> {
    arrow(state_ty(), prod(state_ty(), t))
}

/// `bit` becomes a wire; arrows pick up the state thread on their result.
pub fn lift_type(t: &TypeExpr) -> Rc<TypeExpr> {
    match &*normalize(t) {
        TypeExpr::Bit => wire_ty(),
        TypeExpr::Unit => unit(),
        TypeExpr::Prod(a, b) => prod(lift_type(a), lift_type(b)),
        TypeExpr::Sum(a, b) => sum(lift_type(a), lift_type(b)),
        TypeExpr::List(e) => list_ty(lift_type(e)),
        TypeExpr::Arrow(a, r) => arrow(lift_type(a), circ(lift_type(r))),
    }
}

/// Compact spelling of a type for instance names. The wire, state and
/// computation types get single letters; the rest spell their structure.
fn mangle(t: &TypeExpr) -> String {
    let mut s = String::new();
    mangle_into(&normalize(t), &mut s);
    s
}

fn mangle_into(t: &TypeExpr, out: &mut String) {
    if *t == *wire_ty() {
        out.push('w');
        return;
    }
    if *t == *state_ty() {
        out.push('z');
        return;
    }
    if let TypeExpr::Arrow(d, r) = t {
        if **d == *state_ty() {
            if let TypeExpr::Prod(s1, x) = &**r {
                if **s1 == *state_ty() {
                    out.push('c');
                    mangle_into(x, out);
                    return;
                }
            }
        }
    }
    match t {
        TypeExpr::Bit => out.push('b'),
        TypeExpr::Unit => out.push('u'),
        TypeExpr::Prod(a, b) => {
            out.push('p');
            mangle_into(a, out);
            mangle_into(b, out);
        }
        TypeExpr::Sum(a, b) => {
            out.push('s');
            mangle_into(a, out);
            mangle_into(b, out);
        }
        TypeExpr::Arrow(a, b) => {
            out.push('a');
            mangle_into(a, out);
            mangle_into(b, out);
        }
        TypeExpr::List(e) => {
            out.push('l');
            mangle_into(e, out);
        }
    }
}

fn terr(message: String) -> TypeError {
    TypeError { in_def: None, message }
}

/// Names the translation owns. Source binders that would collide are
/// renamed before lifting.
pub fn is_reserved(name: &str) -> bool {
    matches!(name, "mtt" | "mff" | "mnot" | "mand" | "mxor")
        || [
            "ret_", "app_", "mfst_", "msnd_", "mpair_", "minl_", "minr_", "msplit_", "mif_",
            "mux_", "yfix_", "loop_",
        ]
        .iter()
        .any(|p| name.starts_with(p))
        || (name.len() > 1
            && name.starts_with('v')
            && name[1..].bytes().all(|b| b.is_ascii_digit()))
}

fn fix_binder(x: &str, body: &Rc<Term>) -> (String, Rc<Term>) {
    if !is_reserved(x) {
        return (x.to_string(), body.clone());
    }
    let mut fv = BTreeSet::new();
    free_vars(body, &mut fv);
    let mut cand = format!("u_{x}");
    while is_reserved(&cand) || fv.contains(&cand) {
        cand = format!("u_{cand}");
    }
    let renamed = subst(body, x, &var(&cand));
    (cand, renamed)
}

/// Rename every binder whose name the translation reserves for itself.
pub fn sanitize(t: &Rc<Term>) -> Rc<Term> {
    match &**t {
        Term::Lam(x, ann, b) => {
            let (x2, b2) = fix_binder(x, b);
            Rc::new(Term::Lam(x2, ann.clone(), sanitize(&b2)))
        }
        Term::Match { scrutinee, left, right } => {
            let arm = |a: &MatchArm| {
                let (x2, b2) = fix_binder(&a.binder, &a.body);
                MatchArm { binder: x2, ann: a.ann.clone(), body: sanitize(&b2) }
            };
            Rc::new(Term::Match {
                scrutinee: sanitize(scrutinee),
                left: arm(left),
                right: arm(right),
            })
        }
        Term::App(f, a) => Rc::new(Term::App(sanitize(f), sanitize(a))),
        Term::Pair(a, b) => Rc::new(Term::Pair(sanitize(a), sanitize(b))),
        Term::Proj1(p) => Rc::new(Term::Proj1(sanitize(p))),
        Term::Proj2(p) => Rc::new(Term::Proj2(sanitize(p))),
        Term::LetUnit(m, n) => Rc::new(Term::LetUnit(sanitize(m), sanitize(n))),
        Term::If(c, m, n) => Rc::new(Term::If(sanitize(c), sanitize(m), sanitize(n))),
        Term::Inj1(v) => Rc::new(Term::Inj1(sanitize(v))),
        Term::Inj2(v) => Rc::new(Term::Inj2(sanitize(v))),
        Term::Fix(f) => Rc::new(Term::Fix(sanitize(f))),
        _ => t.clone(),
    }
}

/// Builds the lifted term and collects the combinator instances it needs,
/// each as a definition usable ahead of the lifted entry point.
pub struct Lifter {
    seen: BTreeSet<String>,
    defs: Vec<Definition>,
    fresh: usize,
}

impl Default for Lifter {
    fn default() -> Self {
        Lifter::new()
    }
}

impl Lifter {
    pub fn new() -> Lifter {
        Lifter { seen: BTreeSet::new(), defs: Vec::new(), fresh: 0 }
    }

    pub fn defs(self) -> Vec<Definition> {
        self.defs
    }

    fn ensure(&mut self, name: &str, mk: impl FnOnce() -> (Rc<TypeExpr>, Rc<Term>)) -> String {
        if self.seen.insert(name.to_string()) {
            let (ty, body) = mk();
            self.defs.push(Definition { name: name.to_string(), ty, params: vec![], body });
        }
        name.to_string()
    }

    fn fresh_var(&mut self, avoid: &[&Rc<Term>]) -> String {
        loop {
            let name = format!("v{}", self.fresh);
            self.fresh += 1;
            let mut fv = BTreeSet::new();
            for t in avoid {
                free_vars(t, &mut fv);
            }
            if !fv.contains(&name) {
                return name;
            }
        }
    }

    /// `ret : T -> circ T`, the effect-free computation.
    pub fn ret_of(&mut self, l: &Rc<TypeExpr>) -> String {
        let l = normalize(l);
        let name = format!("ret_{}", mangle(&l));
        self.ensure(&name, || {
            (arrow(l.clone(), circ(l.clone())), lam("a", lam("s", pair(var("s"), var("a")))))
        })
    }

    /// `app : circ (X -> circ Y) -> circ X -> circ Y`. Runs the function
    /// computation, then the argument computation, then applies.
    pub fn app_of(&mut self, x: &Rc<TypeExpr>, y: &Rc<TypeExpr>) -> String {
        let (x, y) = (normalize(x), normalize(y));
        let name = format!("app_{}_{}", mangle(&x), mangle(&y));
        self.ensure(&name, || {
            (
                arrow(
                    circ(arrow(x.clone(), circ(y.clone()))),
                    arrow(circ(x.clone()), circ(y.clone())),
                ),
                lam(
                    "f",
                    lam(
                        "x",
                        lam(
                            "s",
                            let_in(
                                "q1",
                                app(var("f"), var("s")),
                                let_in(
                                    "q2",
                                    app(var("x"), proj1(var("q1"))),
                                    app2(proj2(var("q1")), proj2(var("q2")), proj1(var("q2"))),
                                ),
                            ),
                        ),
                    ),
                ),
            )
        })
    }

    /// A fresh wire carrying true: allocate it and flip it with a gate.
    pub fn mtt(&mut self) -> String {
        self.ensure("mtt", || {
            (
                circ(wire_ty()),
                lam(
                    "s",
                    pair(
                        pair(
                            cons(pair(proj2(var("s")), nil()), proj1(var("s"))),
                            cons(skip(), proj2(var("s"))),
                        ),
                        proj2(var("s")),
                    ),
                ),
            )
        })
    }

    /// A fresh wire carrying false: allocation only.
    pub fn mff(&mut self) -> String {
        self.ensure("mff", || {
            (
                circ(wire_ty()),
                lam(
                    "s",
                    pair(
                        pair(proj1(var("s")), cons(skip(), proj2(var("s")))),
                        proj2(var("s")),
                    ),
                ),
            )
        })
    }

    pub fn mnot(&mut self) -> String {
        self.ensure("mnot", || {
            (
                arrow(wire_ty(), circ(wire_ty())),
                lam(
                    "x",
                    lam(
                        "s",
                        pair(
                            pair(
                                cons(
                                    pair(proj2(var("s")), cons(pair(var("x"), ff()), nil())),
                                    proj1(var("s")),
                                ),
                                cons(skip(), proj2(var("s"))),
                            ),
                            proj2(var("s")),
                        ),
                    ),
                ),
            )
        })
    }

    pub fn mand(&mut self) -> String {
        self.ensure("mand", || {
            (
                arrow(prod(wire_ty(), wire_ty()), circ(wire_ty())),
                lam(
                    "p",
                    lam(
                        "s",
                        pair(
                            pair(
                                cons(
                                    pair(
                                        proj2(var("s")),
                                        cons(
                                            pair(proj1(var("p")), tt()),
                                            cons(pair(proj2(var("p")), tt()), nil()),
                                        ),
                                    ),
                                    proj1(var("s")),
                                ),
                                cons(skip(), proj2(var("s"))),
                            ),
                            proj2(var("s")),
                        ),
                    ),
                ),
            )
        })
    }

    /// Two single-control gates onto one fresh wire; the second gate sits
    /// at the head of the list because the list keeps newest first.
    pub fn mxor(&mut self) -> String {
        self.ensure("mxor", || {
            (
                arrow(prod(wire_ty(), wire_ty()), circ(wire_ty())),
                lam(
                    "p",
                    lam(
                        "s",
                        pair(
                            pair(
                                cons(
                                    pair(
                                        proj2(var("s")),
                                        cons(pair(proj2(var("p")), tt()), nil()),
                                    ),
                                    cons(
                                        pair(
                                            proj2(var("s")),
                                            cons(pair(proj1(var("p")), tt()), nil()),
                                        ),
                                        proj1(var("s")),
                                    ),
                                ),
                                cons(skip(), proj2(var("s"))),
                            ),
                            proj2(var("s")),
                        ),
                    ),
                ),
            )
        })
    }

    pub fn mfst_of(&mut self, a: &Rc<TypeExpr>, b: &Rc<TypeExpr>) -> String {
        let (a, b) = (normalize(a), normalize(b));
        let name = format!("mfst_{}_{}", mangle(&a), mangle(&b));
        if self.seen.contains(&name) {
            return name;
        }
        let ret = self.ret_of(&a);
        self.ensure(&name, || {
            (arrow(prod(a.clone(), b.clone()), circ(a.clone())), lam("p", app(var(&ret), proj1(var("p")))))
        })
    }

    pub fn msnd_of(&mut self, a: &Rc<TypeExpr>, b: &Rc<TypeExpr>) -> String {
        let (a, b) = (normalize(a), normalize(b));
        let name = format!("msnd_{}_{}", mangle(&a), mangle(&b));
        if self.seen.contains(&name) {
            return name;
        }
        let ret = self.ret_of(&b);
        self.ensure(&name, || {
            (arrow(prod(a.clone(), b.clone()), circ(b.clone())), lam("p", app(var(&ret), proj2(var("p")))))
        })
    }

    pub fn mpair_of(&mut self, a: &Rc<TypeExpr>, b: &Rc<TypeExpr>) -> String {
        let (a, b) = (normalize(a), normalize(b));
        let name = format!("mpair_{}_{}", mangle(&a), mangle(&b));
        if self.seen.contains(&name) {
            return name;
        }
        let pr = prod(a.clone(), b.clone());
        let t1 = arrow(b.clone(), circ(pr.clone()));
        let ret_pr = self.ret_of(&pr);
        let ret_t1 = self.ret_of(&t1);
        self.ensure(&name, || {
            (
                arrow(a.clone(), circ(t1.clone())),
                lam(
                    "a",
                    app(var(&ret_t1), lam("b", app(var(&ret_pr), pair(var("a"), var("b"))))),
                ),
            )
        })
    }

    pub fn minl_of(&mut self, a: &Rc<TypeExpr>, b: &Rc<TypeExpr>) -> String {
        let (a, b) = (normalize(a), normalize(b));
        let name = format!("minl_{}_{}", mangle(&a), mangle(&b));
        if self.seen.contains(&name) {
            return name;
        }
        let st = normalize(&sum(a.clone(), b.clone()));
        let ret = self.ret_of(&st);
        self.ensure(&name, || {
            (arrow(a.clone(), circ(st.clone())), lam("x", app(var(&ret), inj1(var("x")))))
        })
    }

    pub fn minr_of(&mut self, a: &Rc<TypeExpr>, b: &Rc<TypeExpr>) -> String {
        let (a, b) = (normalize(a), normalize(b));
        let name = format!("minr_{}_{}", mangle(&a), mangle(&b));
        if self.seen.contains(&name) {
            return name;
        }
        let st = normalize(&sum(a.clone(), b.clone()));
        let ret = self.ret_of(&st);
        self.ensure(&name, || {
            (arrow(b.clone(), circ(st.clone())), lam("x", app(var(&ret), inj2(var("x")))))
        })
    }

    /// `split` lifted: still the identity, since unfolding a list type is
    /// free.
    pub fn msplit_of(&mut self, e: &Rc<TypeExpr>) -> String {
        let e = normalize(e);
        let name = format!("msplit_{}", mangle(&e));
        if self.seen.contains(&name) {
            return name;
        }
        let lt = list_ty(e);
        let ret = self.ret_of(&lt);
        self.ensure(&name, || {
            (arrow(lt.clone(), circ(lt.clone())), lam("l", app(var(&ret), split_of(var("l")))))
        })
    }

    /// The multiplexer for one first-order source shape:
    /// `mux : wire -> S' -> S' -> circ S'`.
    pub fn mux_of(&mut self, s_src: &Rc<TypeExpr>) -> String {
        let s = normalize(s_src);
        let l = lift_type(&s);
        let name = format!("mux_{}", mangle(&l));
        if self.seen.contains(&name) {
            return name;
        }
        match &*s {
            TypeExpr::Bit => self.ensure(&name, || {
                let n = || proj2(var("s"));
                let g1 = pair(
                    n(),
                    cons(pair(var("c"), tt()), cons(pair(var("a"), tt()), nil())),
                );
                let g2 = pair(
                    n(),
                    cons(pair(var("c"), ff()), cons(pair(var("b"), tt()), nil())),
                );
                (
                    arrow(wire_ty(), arrow(wire_ty(), arrow(wire_ty(), circ(wire_ty())))),
                    lam(
                        "c",
                        lam(
                            "a",
                            lam(
                                "b",
                                lam(
                                    "s",
                                    pair(
                                        pair(
                                            cons(g2, cons(g1, proj1(var("s")))),
                                            cons(skip(), n()),
                                        ),
                                        n(),
                                    ),
                                ),
                            ),
                        ),
                    ),
                )
            }),
            TypeExpr::Prod(p, q) => {
                let mp = self.mux_of(p);
                let mq = self.mux_of(q);
                self.ensure(&name, || {
                    (
                        arrow(wire_ty(), arrow(l.clone(), arrow(l.clone(), circ(l.clone())))),
                        lam(
                            "c",
                            lam(
                                "a",
                                lam(
                                    "b",
                                    lam(
                                        "s",
                                        let_in(
                                            "q1",
                                            app(
                                                app2(
                                                    app(var(&mp), var("c")),
                                                    proj1(var("a")),
                                                    proj1(var("b")),
                                                ),
                                                var("s"),
                                            ),
                                            let_in(
                                                "q2",
                                                app(
                                                    app2(
                                                        app(var(&mq), var("c")),
                                                        proj2(var("a")),
                                                        proj2(var("b")),
                                                    ),
                                                    proj1(var("q1")),
                                                ),
                                                pair(
                                                    proj1(var("q2")),
                                                    pair(proj2(var("q1")), proj2(var("q2"))),
                                                ),
                                            ),
                                        ),
                                    ),
                                ),
                            ),
                        ),
                    )
                })
            }
            TypeExpr::List(e) => {
                let me = self.mux_of(e);
                let le = lift_type(e);
                let ll = list_ty(le);
                let retnil = self.ret_of(&ll);
                let tgo = arrow(ll.clone(), arrow(ll.clone(), circ(ll.clone())));
                self.ensure(&name, || {
                    let step = lam(
                        "s",
                        let_in(
                            "q1",
                            app(
                                app2(app(var(&me), var("c")), proj1(var("hp")), proj1(var("hq"))),
                                var("s"),
                            ),
                            let_in(
                                "q2",
                                app(
                                    app2(var("go"), proj2(var("hp")), proj2(var("hq"))),
                                    proj1(var("q1")),
                                ),
                                pair(
                                    proj1(var("q2")),
                                    cons(proj2(var("q1")), proj2(var("q2"))),
                                ),
                            ),
                        ),
                    );
                    let body = Rc::new(Term::Match {
                        scrutinee: split_of(var("a")),
                        left: MatchArm {
                            binder: "u".into(),
                            ann: None,
                            body: Rc::new(Term::Match {
                                scrutinee: split_of(var("b")),
                                left: MatchArm {
                                    binder: "u2".into(),
                                    ann: None,
                                    body: app(var(&retnil), nil()),
                                },
                                right: MatchArm { binder: "hq".into(), ann: None, body: err() },
                            }),
                        },
                        right: MatchArm {
                            binder: "hp".into(),
                            ann: None,
                            body: Rc::new(Term::Match {
                                scrutinee: split_of(var("b")),
                                left: MatchArm { binder: "u2".into(), ann: None, body: err() },
                                right: MatchArm { binder: "hq".into(), ann: None, body: step },
                            }),
                        },
                    });
                    (
                        arrow(wire_ty(), tgo.clone()),
                        lam(
                            "c",
                            fix(lam_t(
                                "go",
                                tgo.clone(),
                                lam_t("a", ll.clone(), lam_t("b", ll.clone(), body)),
                            )),
                        ),
                    )
                })
            }
            other => unreachable!("multiplexing a non-first-order shape {other}"),
        }
    }

    /// The conditional combinator: condition wire, then both fully
    /// evaluated branches, then the multiplexer.
    pub fn mif_of(&mut self, s_src: &Rc<TypeExpr>) -> String {
        let s = normalize(s_src);
        let l = lift_type(&s);
        let name = format!("mif_{}", mangle(&l));
        if self.seen.contains(&name) {
            return name;
        }
        let mux = self.mux_of(&s);
        let t2 = arrow(l.clone(), circ(l.clone()));
        let t1 = arrow(l.clone(), circ(t2.clone()));
        let r1 = self.ret_of(&t1);
        let r2 = self.ret_of(&t2);
        self.ensure(&name, || {
            (
                arrow(wire_ty(), circ(t1.clone())),
                lam(
                    "c",
                    app(
                        var(&r1),
                        lam(
                            "a",
                            app(
                                var(&r2),
                                lam("b", app2(app(var(&mux), var("c")), var("a"), var("b"))),
                            ),
                        ),
                    ),
                ),
            )
        })
    }

    /// Fixpoints at lifted function types: unfold once to a guarded
    /// lambda, so the body's construction effects run per call, exactly
    /// when the machine unfolds.
    pub fn yfix_of(&mut self, a_src: &Rc<TypeExpr>) -> String {
        let a = normalize(a_src);
        let l = lift_type(&a);
        let name = format!("yfix_{}", mangle(&l));
        if self.seen.contains(&name) {
            return name;
        }
        let TypeExpr::Arrow(dx, dy) = &*a else {
            unreachable!("yfix instantiated at a non-arrow type {a}");
        };
        let lx = lift_type(dx);
        let retl = self.ret_of(&l);
        let retx = self.ret_of(&lx);
        let appi = self.app_of(&lx, &lift_type(dy));
        self.ensure(&name, || {
            (
                arrow(arrow(l.clone(), circ(l.clone())), circ(l.clone())),
                lam(
                    "m",
                    app(
                        var(&retl),
                        fix(lam_t(
                            "w",
                            l.clone(),
                            lam_t(
                                "x",
                                lx.clone(),
                                app2(
                                    var(&appi),
                                    app(var("m"), var("w")),
                                    app(var(&retx), var("x")),
                                ),
                            ),
                        )),
                    ),
                ),
            )
        })
    }

    /// Fixpoints at non-function lifted types have no guard to hide
    /// behind; the lifted computation simply diverges when forced.
    pub fn loop_of(&mut self, a_src: &Rc<TypeExpr>) -> String {
        let l = lift_type(&normalize(a_src));
        let name = format!("loop_{}", mangle(&l));
        self.ensure(&name, || {
            (
                arrow(arrow(l.clone(), circ(l.clone())), circ(l.clone())),
                lam(
                    "m",
                    fix(lam_t(
                        "d",
                        circ(l.clone()),
                        lam_t("s", state_ty(), app(var("d"), var("s"))),
                    )),
                ),
            )
        })
    }

    fn retv(&mut self, lifted_ty: &Rc<TypeExpr>, v: Rc<Term>) -> Rc<Term> {
        let inst = self.ret_of(lifted_ty);
        app(var(&inst), v)
    }

    /// Monadic application at source types `dom -> cod`.
    fn mapp(&mut self, fhat: Rc<Term>, ahat: Rc<Term>, dom: &Rc<TypeExpr>, cod: &Rc<TypeExpr>) -> Rc<Term> {
        let inst = self.app_of(&lift_type(dom), &lift_type(cod));
        app2(var(&inst), fhat, ahat)
    }

    fn pair_chain(&mut self, ah: Rc<Term>, bh: Rc<Term>, ta: &Rc<TypeExpr>, tb: &Rc<TypeExpr>) -> Rc<Term> {
        let m = self.mpair_of(&lift_type(ta), &lift_type(tb));
        let rest = arrow(tb.clone(), prod(ta.clone(), tb.clone()));
        let fun = arrow(ta.clone(), rest.clone());
        let fh = self.retv(&lift_type(&fun), var(&m));
        let s1 = self.mapp(fh, ah, ta, &rest);
        self.mapp(s1, bh, tb, &prod(ta.clone(), tb.clone()))
    }

    fn letunit_chain(&mut self, sh: Rc<Term>, bh: Rc<Term>, tb: &Rc<TypeExpr>) -> Rc<Term> {
        let u = self.fresh_var(&[&bh]);
        let fun = arrow(unit(), tb.clone());
        let fh = self.retv(&lift_type(&fun), lam(&u, let_unit(var(&u), bh)));
        self.mapp(fh, sh, &unit(), tb)
    }

    fn if_chain(&mut self, ch: Rc<Term>, mh: Rc<Term>, nh: Rc<Term>, ty: &Rc<TypeExpr>) -> Rc<Term> {
        let mi = self.mif_of(ty);
        let once = arrow(ty.clone(), ty.clone());
        let twice = arrow(ty.clone(), once.clone());
        let fh = self.retv(&lift_type(&arrow(bit(), twice.clone())), var(&mi));
        let s1 = self.mapp(fh, ch, &bit(), &twice);
        let s2 = self.mapp(s1, mh, ty, &once);
        self.mapp(s2, nh, ty, ty)
    }

    fn fix_chain(&mut self, fh: Rc<Term>, a: &Rc<TypeExpr>) -> Rc<Term> {
        let an = normalize(a);
        let inst = if matches!(&*an, TypeExpr::Arrow(..)) {
            self.yfix_of(&an)
        } else {
            self.loop_of(&an)
        };
        let loop_ty = arrow(an.clone(), an.clone());
        let fh2 = self.retv(&lift_type(&arrow(loop_ty.clone(), an.clone())), var(&inst));
        self.mapp(fh2, fh, &loop_ty, &an)
    }

    fn inj_chain(
        &mut self,
        is_left: bool,
        ah: Rc<Term>,
        lc: &Rc<TypeExpr>,
        rc: &Rc<TypeExpr>,
        res: &Rc<TypeExpr>,
    ) -> Rc<Term> {
        let (la, lb) = (lift_type(lc), lift_type(rc));
        let m = if is_left { self.minl_of(&la, &lb) } else { self.minr_of(&la, &lb) };
        let dom = if is_left { lc } else { rc };
        let fun = arrow(dom.clone(), res.clone());
        let fh = self.retv(&lift_type(&fun), var(&m));
        self.mapp(fh, ah, dom, res)
    }

    fn match_chain(
        &mut self,
        sh: Rc<Term>,
        (left, lh): (&MatchArm, Rc<Term>),
        (right, rh): (&MatchArm, Rc<Term>),
        scrut_ty: &Rc<TypeExpr>,
        res: &Rc<TypeExpr>,
    ) -> Rc<Term> {
        let v = self.fresh_var(&[&lh, &rh]);
        let body = Rc::new(Term::Match {
            scrutinee: var(&v),
            left: MatchArm { binder: left.binder.clone(), ann: None, body: lh },
            right: MatchArm { binder: right.binder.clone(), ann: None, body: rh },
        });
        let fun = arrow(scrut_ty.clone(), res.clone());
        let fh = self.retv(&lift_type(&fun), lam(&v, body));
        self.mapp(fh, sh, scrut_ty, res)
    }

    /// Lift in inference mode; returns the lifted computation and the
    /// source type. Mirrors the typechecker rule for rule, so it succeeds
    /// exactly where checking does.
    pub fn lift_infer(
        &mut self,
        env: &mut TypeEnv,
        t: &Rc<Term>,
    ) -> Result<(Rc<Term>, Rc<TypeExpr>), TypeError> {
        match &**t {
            Term::Var(x) => {
                let ty = env
                    .iter()
                    .rev()
                    .find(|(n, _)| n == x)
                    .map(|(_, t)| t.clone())
                    .ok_or_else(|| terr(format!("unbound variable '{x}'")))?;
                let l = lift_type(&ty);
                Ok((self.retv(&l, var(x)), ty))
            }
            Term::WireRef(_) => Err(terr("wire references cannot be lifted".into())),
            Term::True => Ok((var(&self.mtt()), bit())),
            Term::False => Ok((var(&self.mff()), bit())),
            Term::Skip => Ok((self.retv(&unit(), skip()), unit())),
            Term::NotPrim => {
                let ty = arrow(bit(), bit());
                let m = self.mnot();
                Ok((self.retv(&lift_type(&ty), var(&m)), ty))
            }
            Term::AndPrim | Term::XorPrim => {
                let ty = arrow(prod(bit(), bit()), bit());
                let m = if matches!(&**t, Term::AndPrim) { self.mand() } else { self.mxor() };
                Ok((self.retv(&lift_type(&ty), var(&m)), ty))
            }
            Term::Split => {
                Err(terr("cannot infer a type for bare 'split'; apply it to a list".into()))
            }
            Term::Err => Err(terr("cannot infer a type for 'err'".into())),
            Term::Lam(x, Some(a), b) => {
                env.push((x.clone(), a.clone()));
                let r = self.lift_infer(env, b);
                env.pop();
                let (bh, tb) = r?;
                let fun = arrow(a.clone(), tb.clone());
                let lifted = self.retv(&lift_type(&fun), lam_t(x, lift_type(a), bh));
                Ok((lifted, fun))
            }
            Term::Lam(x, None, _) => {
                Err(terr(format!("cannot infer a type for the unannotated lambda binding '{x}'")))
            }
            Term::App(f, a) => match &**f {
                Term::Split => {
                    let (ah, ta) = self.lift_infer(env, a)?;
                    let tn = normalize(&ta);
                    let TypeExpr::List(e) = &*tn else {
                        return Err(terr(format!(
                            "'split' needs a list, but {} has type {tn}",
                            pretty_term(a)
                        )));
                    };
                    let res = sum(unit(), prod(e.clone(), list_ty(e.clone())));
                    let m = self.msplit_of(&lift_type(e));
                    let fun = arrow(tn.clone(), res.clone());
                    let fh = self.retv(&lift_type(&fun), var(&m));
                    Ok((self.mapp(fh, ah, &tn, &res), res))
                }
                Term::Lam(x, None, body) => {
                    let (ah, ta) = self.lift_infer(env, a)?;
                    env.push((x.clone(), ta.clone()));
                    let r = self.lift_infer(env, body);
                    env.pop();
                    let (bh, tb) = r?;
                    let fun = arrow(ta.clone(), tb.clone());
                    let fh = self.retv(&lift_type(&fun), lam(x, bh));
                    Ok((self.mapp(fh, ah, &ta, &tb), tb))
                }
                Term::Lam(x, Some(ann), body) => {
                    let ah = self.lift_check(env, a, ann)?;
                    env.push((x.clone(), ann.clone()));
                    let r = self.lift_infer(env, body);
                    env.pop();
                    let (bh, tb) = r?;
                    let fun = arrow(ann.clone(), tb.clone());
                    let fh = self.retv(&lift_type(&fun), lam(x, bh));
                    Ok((self.mapp(fh, ah, ann, &tb), tb))
                }
                _ => {
                    let (fh, tf) = self.lift_infer(env, f)?;
                    let tfn = normalize(&tf);
                    let TypeExpr::Arrow(p, r) = &*tfn else {
                        return Err(terr(format!(
                            "{} has type {tfn} and cannot be applied",
                            pretty_term(f)
                        )));
                    };
                    let ah = self.lift_check(env, a, p)?;
                    Ok((self.mapp(fh, ah, p, r), r.clone()))
                }
            },
            Term::Pair(a, b) => {
                let (ah, ta) = self.lift_infer(env, a)?;
                let (bh, tb) = self.lift_infer(env, b)?;
                let lifted = self.pair_chain(ah, bh, &ta, &tb);
                Ok((lifted, prod(ta, tb)))
            }
            Term::Proj1(p) | Term::Proj2(p) => {
                let (ph, tp) = self.lift_infer(env, p)?;
                let tn = normalize(&tp);
                let TypeExpr::Prod(a, b) = &*tn else {
                    return Err(terr(format!(
                        "projection needs a pair, but {} has type {tn}",
                        pretty_term(p)
                    )));
                };
                let first = matches!(&**t, Term::Proj1(_));
                let (m, res) = if first {
                    (self.mfst_of(&lift_type(a), &lift_type(b)), a.clone())
                } else {
                    (self.msnd_of(&lift_type(a), &lift_type(b)), b.clone())
                };
                let fun = arrow(tn.clone(), res.clone());
                let fh = self.retv(&lift_type(&fun), var(&m));
                Ok((self.mapp(fh, ph, &tn, &res), res))
            }
            Term::LetUnit(s, b) => {
                let sh = self.lift_check(env, s, &unit())?;
                let (bh, tb) = self.lift_infer(env, b)?;
                let lifted = self.letunit_chain(sh, bh, &tb);
                Ok((lifted, tb))
            }
            Term::If(c, m, n) => {
                let ch = self.lift_check(env, c, &bit())?;
                let (mh, nh, ty) = match self.lift_infer(env, m) {
                    Ok((mh, tm)) => {
                        let nh = self.lift_check(env, n, &tm)?;
                        (mh, nh, normalize(&tm))
                    }
                    Err(em) => {
                        let (nh, tn) = self.lift_infer(env, n).map_err(|_| em)?;
                        let mh = self.lift_check(env, m, &tn)?;
                        (mh, nh, normalize(&tn))
                    }
                };
                if !ty.is_first_order() {
                    return Err(terr(format!(
                        "conditional branches have type {ty}, which is not first order"
                    )));
                }
                let lifted = self.if_chain(ch, mh, nh, &ty);
                Ok((lifted, ty))
            }
            Term::Match { scrutinee, left, right } => {
                let (sh, ts) = self.lift_infer(env, scrutinee)?;
                let tn = normalize(&ts);
                let Some((lc, rc)) = sum_components(&tn) else {
                    return Err(terr(format!(
                        "match needs a sum or list, but {} has type {ts}",
                        pretty_term(scrutinee)
                    )));
                };
                for (arm, comp) in [(left, &lc), (right, &rc)] {
                    if let Some(ann) = &arm.ann {
                        if !types_equal(ann, comp) {
                            return Err(terr(format!(
                                "match arm binds '{}' at {ann}, but the scrutinee provides {comp}",
                                arm.binder
                            )));
                        }
                    }
                }
                env.push((left.binder.clone(), lc.clone()));
                let ltry = self.lift_infer(env, &left.body);
                env.pop();
                let (lh, rh, ty) = match ltry {
                    Ok((lh, tl)) => {
                        env.push((right.binder.clone(), rc.clone()));
                        let r = self.lift_check(env, &right.body, &tl);
                        env.pop();
                        (lh, r?, normalize(&tl))
                    }
                    Err(le) => {
                        env.push((right.binder.clone(), rc.clone()));
                        let rtry = self.lift_infer(env, &right.body);
                        env.pop();
                        let (rh, tr) = rtry.map_err(|_| le)?;
                        env.push((left.binder.clone(), lc.clone()));
                        let l = self.lift_check(env, &left.body, &tr);
                        env.pop();
                        (l?, rh, normalize(&tr))
                    }
                };
                let lifted = self.match_chain(sh, (left, lh), (right, rh), &tn, &ty);
                Ok((lifted, ty))
            }
            Term::Inj1(_) | Term::Inj2(_) => Err(terr(
                "cannot infer a type for an injection; the other summand is unconstrained".into(),
            )),
            Term::Fix(f) => {
                if let Term::Lam(x, Some(a), body) = &**f {
                    env.push((x.clone(), a.clone()));
                    let r = self.lift_check(env, body, a);
                    env.pop();
                    let bh = r?;
                    let fun = arrow(a.clone(), a.clone());
                    let fh = self.retv(&lift_type(&fun), lam_t(x, lift_type(a), bh));
                    let lifted = self.fix_chain(fh, a);
                    return Ok((lifted, a.clone()));
                }
                let (fh, tf) = self.lift_infer(env, f)?;
                let tn = normalize(&tf);
                let TypeExpr::Arrow(a, b) = &*tn else {
                    return Err(terr(format!(
                        "Y needs a function from a type to itself, but {} has type {tn}",
                        pretty_term(f)
                    )));
                };
                if !types_equal(a, b) {
                    return Err(terr(format!(
                        "Y needs a function from a type to itself, but {} has type {tn}",
                        pretty_term(f)
                    )));
                }
                let lifted = self.fix_chain(fh, a);
                Ok((lifted, a.clone()))
            }
        }
    }

    /// Lift in checking mode against a source type.
    pub fn lift_check(
        &mut self,
        env: &mut TypeEnv,
        t: &Rc<Term>,
        want: &Rc<TypeExpr>,
    ) -> Result<Rc<Term>, TypeError> {
        let w = normalize(want);
        match (&**t, &*w) {
            (Term::Err, _) => Ok(err()),
            (Term::Lam(x, ann, b), TypeExpr::Arrow(p, r)) => {
                if let Some(a) = ann {
                    if !types_equal(a, p) {
                        return Err(terr(format!(
                            "lambda binder '{x}' is annotated {a}, but {p} is expected"
                        )));
                    }
                }
                env.push((x.clone(), p.clone()));
                let rr = self.lift_check(env, b, r);
                env.pop();
                let bh = rr?;
                let lifted_lam = if ann.is_some() { lam_t(x, lift_type(p), bh) } else { lam(x, bh) };
                Ok(self.retv(&lift_type(&w), lifted_lam))
            }
            (Term::Lam(..), _) => Err(terr(format!("found a lambda where {w} is expected"))),
            (Term::Pair(a, b), TypeExpr::Prod(p, q)) => {
                let ah = self.lift_check(env, a, p)?;
                let bh = self.lift_check(env, b, q)?;
                Ok(self.pair_chain(ah, bh, p, q))
            }
            (Term::Pair(..), _) => Err(terr(format!("found a pair where {w} is expected"))),
            (Term::Inj1(a), TypeExpr::Sum(lc, rc)) => {
                let ah = self.lift_check(env, a, lc)?;
                Ok(self.inj_chain(true, ah, lc, rc, &w))
            }
            (Term::Inj2(a), TypeExpr::Sum(lc, rc)) => {
                let ah = self.lift_check(env, a, rc)?;
                Ok(self.inj_chain(false, ah, lc, rc, &w))
            }
            (Term::Inj1(a), TypeExpr::List(e)) => {
                let ah = self.lift_check(env, a, &unit())?;
                let rc = prod(e.clone(), w.clone());
                Ok(self.inj_chain(true, ah, &unit(), &rc, &w))
            }
            (Term::Inj2(a), TypeExpr::List(e)) => {
                let rc = prod(e.clone(), w.clone());
                let ah = self.lift_check(env, a, &rc)?;
                Ok(self.inj_chain(false, ah, &unit(), &rc, &w))
            }
            (Term::Inj1(_) | Term::Inj2(_), _) => {
                Err(terr(format!("found an injection where {w} is expected")))
            }
            (Term::If(c, m, n), _) => {
                let ch = self.lift_check(env, c, &bit())?;
                if !w.is_first_order() {
                    return Err(terr(format!(
                        "conditional at type {w}, which is not first order"
                    )));
                }
                let mh = self.lift_check(env, m, &w)?;
                let nh = self.lift_check(env, n, &w)?;
                Ok(self.if_chain(ch, mh, nh, &w))
            }
            (Term::Match { scrutinee, left, right }, _) => {
                let (sh, ts) = self.lift_infer(env, scrutinee)?;
                let tn = normalize(&ts);
                let Some((lc, rc)) = sum_components(&tn) else {
                    return Err(terr(format!(
                        "match needs a sum or list, but {} has type {ts}",
                        pretty_term(scrutinee)
                    )));
                };
                for (arm, comp) in [(left, &lc), (right, &rc)] {
                    if let Some(ann) = &arm.ann {
                        if !types_equal(ann, comp) {
                            return Err(terr(format!(
                                "match arm binds '{}' at {ann}, but the scrutinee provides {comp}",
                                arm.binder
                            )));
                        }
                    }
                }
                env.push((left.binder.clone(), lc));
                let l = self.lift_check(env, &left.body, &w);
                env.pop();
                let lh = l?;
                env.push((right.binder.clone(), rc));
                let r = self.lift_check(env, &right.body, &w);
                env.pop();
                let rh = r?;
                Ok(self.match_chain(sh, (left, lh), (right, rh), &tn, &w))
            }
            (Term::LetUnit(s, b), _) => {
                let sh = self.lift_check(env, s, &unit())?;
                let bh = self.lift_check(env, b, &w)?;
                Ok(self.letunit_chain(sh, bh, &w))
            }
            (Term::App(f, a), _) => match &**f {
                Term::Lam(x, None, body) => {
                    let (ah, ta) = self.lift_infer(env, a)?;
                    env.push((x.clone(), ta.clone()));
                    let r = self.lift_check(env, body, &w);
                    env.pop();
                    let bh = r?;
                    let fun = arrow(ta.clone(), w.clone());
                    let fh = self.retv(&lift_type(&fun), lam(x, bh));
                    Ok(self.mapp(fh, ah, &ta, &w))
                }
                Term::Lam(x, Some(ann), body) => {
                    let ah = self.lift_check(env, a, ann)?;
                    env.push((x.clone(), ann.clone()));
                    let r = self.lift_check(env, body, &w);
                    env.pop();
                    let bh = r?;
                    let fun = arrow(ann.clone(), w.clone());
                    let fh = self.retv(&lift_type(&fun), lam(x, bh));
                    Ok(self.mapp(fh, ah, ann, &w))
                }
                _ => {
                    let (th, got) = self.lift_infer(env, t)?;
                    if !types_equal(&got, &w) {
                        return Err(terr(format!(
                            "{} has type {got}, but {w} is expected",
                            pretty_term(t)
                        )));
                    }
                    Ok(th)
                }
            },
            (Term::Fix(f), _) => {
                let fh = self.lift_check(env, f, &arrow(w.clone(), w.clone()))?;
                Ok(self.fix_chain(fh, &w))
            }
            (Term::Split, TypeExpr::Arrow(d, r)) => {
                if matches!(&**d, TypeExpr::List(_)) && d == r {
                    let TypeExpr::List(e) = &**d else { unreachable!() };
                    let m = self.msplit_of(&lift_type(e));
                    Ok(self.retv(&lift_type(&w), var(&m)))
                } else {
                    Err(terr(format!(
                        "'split' has type [A] -> 1 + A * [A] and cannot check against {w}"
                    )))
                }
            }
            _ => {
                let (th, got) = self.lift_infer(env, t)?;
                if !types_equal(&got, &w) {
                    return Err(terr(format!(
                        "{} has type {got}, but {w} is expected",
                        pretty_term(t)
                    )));
                }
                Ok(th)
            }
        }
    }
}

/// Lift a whole program: the combinator instances the entry point needs,
/// followed by the lifted entry point itself.
pub fn lift_program(p: &SourceProgram) -> Result<SourceProgram, TypeError> {
    let entry = p.entry();
    let term = sanitize(&p.entry_closed_term());
    let mut lifter = Lifter::new();
    let mut env = Vec::new();
    let body = lifter.lift_check(&mut env, &term, &entry.ty).map_err(|mut e| {
        if e.in_def.is_none() {
            e.in_def = Some(entry.name.clone());
        }
        e
    })?;
    let mut defs = lifter.defs();
    defs.push(Definition {
        name: format!("{}_lifted", entry.name),
        ty: circ(lift_type(&entry.ty)),
        params: vec![],
        body,
    });
    Ok(SourceProgram { defs })
}

pub fn encode_unary(n: usize) -> Rc<Term> {
    (0..n).fold(nil(), |acc, _| cons(skip(), acc))
}

fn encode_gate(g: &Gate) -> Rc<Term> {
    let mut cs = nil();
    for c in g.controls.iter().rev() {
        let pol = if c.positive { tt() } else { ff() };
        cs = cons(pair(encode_unary(c.wire), pol), cs);
    }
    pair(encode_unary(g.target), cs)
}

/// A state value: gates given chronologically, stored newest first.
pub fn encode_state(gates: &[Gate], counter: usize) -> Rc<Term> {
    let mut l = nil();
    for g in gates {
        l = cons(encode_gate(g), l);
    }
    pair(l, encode_unary(counter))
}

pub fn decode_unary(t: &Term) -> Result<usize, String> {
    let mut n = 0;
    let mut cur = t;
    loop {
        match cur {
            Term::Inj1(s) if matches!(&**s, Term::Skip) => return Ok(n),
            Term::Inj2(p) => match &**p {
                Term::Pair(h, rest) if matches!(&**h, Term::Skip) => {
                    n += 1;
                    cur = rest;
                }
                _ => return Err(format!("not a unary number: {cur}")),
            },
            _ => return Err(format!("not a unary number: {cur}")),
        }
    }
}

fn decode_list(t: &Term) -> Result<Vec<Rc<Term>>, String> {
    let mut items = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            Term::Inj1(s) if matches!(&**s, Term::Skip) => return Ok(items),
            Term::Inj2(p) => match &**p {
                Term::Pair(h, rest) => {
                    items.push(h.clone());
                    cur = rest;
                }
                _ => return Err(format!("not a list value: {cur}")),
            },
            _ => return Err(format!("not a list value: {cur}")),
        }
    }
}

fn decode_gate(t: &Term) -> Result<Gate, String> {
    let Term::Pair(target, controls) = t else {
        return Err(format!("not a gate value: {t}"));
    };
    let target = decode_unary(target)?;
    let mut cs = Vec::new();
    for c in decode_list(controls)? {
        let Term::Pair(w, pol) = &*c else {
            return Err(format!("not a control value: {c}"));
        };
        let positive = match &**pol {
            Term::True => true,
            Term::False => false,
            other => return Err(format!("not a polarity: {other}")),
        };
        cs.push(Control { wire: decode_unary(w)?, positive });
    }
    Ok(Gate::new(target, cs))
}

/// Gates in chronological order plus the counter value.
pub fn decode_state(t: &Term) -> Result<(Vec<Gate>, usize), String> {
    let Term::Pair(gates, counter) = t else {
        return Err(format!("not a state value: {t}"));
    };
    let mut gs = decode_list(gates)?
        .iter()
        .map(|g| decode_gate(g))
        .collect::<Result<Vec<_>, _>>()?;
    gs.reverse();
    Ok((gs, decode_unary(counter)?))
}

fn decode_outputs(t: &Term, ty: &TypeExpr, out: &mut Vec<usize>) -> Result<(), String> {
    match &*normalize(ty) {
        TypeExpr::Bit => {
            out.push(decode_unary(t)?);
            Ok(())
        }
        TypeExpr::Prod(a, b) => {
            let Term::Pair(x, y) = t else {
                return Err(format!("expected a pair of outputs, got {t}"));
            };
            decode_outputs(x, a, out)?;
            decode_outputs(y, b, out)
        }
        TypeExpr::List(e) => {
            for item in decode_list(t)? {
                decode_outputs(&item, e, out)?;
            }
            Ok(())
        }
        other => Err(format!("result type {other} is not first-order data")),
    }
}

fn unary_tree(ty: &TypeExpr, n: &mut usize) -> Result<Rc<Term>, String> {
    match ty {
        TypeExpr::Bit => {
            let t = encode_unary(*n);
            *n += 1;
            Ok(t)
        }
        TypeExpr::Prod(a, b) => {
            let l = unary_tree(a, n)?;
            let r = unary_tree(b, n)?;
            Ok(pair(l, r))
        }
        other => Err(format!("input type {other} is not a product of bits")),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LiftedRunError {
    Type(TypeError),
    Interface(String),
    Halted,
    OutOfFuel,
    Stuck(String),
    Decode(String),
}

impl std::fmt::Display for LiftedRunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LiftedRunError::Type(e) => write!(f, "{e}"),
            LiftedRunError::Interface(m) => write!(f, "{m}"),
            LiftedRunError::Halted => write!(f, "evaluation halted with an error"),
            LiftedRunError::OutOfFuel => write!(f, "ran out of fuel"),
            LiftedRunError::Stuck(m) => write!(f, "evaluation stuck: {m}"),
            LiftedRunError::Decode(m) => write!(f, "cannot decode the result: {m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedCircuit {
    pub gates: Vec<Gate>,
    pub num_wires: usize,
    pub outputs: Vec<usize>,
}

/// Lift the program, apply it to unary-encoded input wires and an empty
/// state, run the evaluator, and decode the circuit it built.
pub fn lifted_run(p: &SourceProgram, fuel: u64) -> Result<LiftedCircuit, LiftedRunError> {
    let entry_ty = p.entry().ty.clone();
    let lifted = lift_program(p).map_err(LiftedRunError::Type)?;
    let comp = lifted.entry_closed_term();

    let mut ty = normalize(&entry_ty);
    let mut n = 0usize;
    let mut args = Vec::new();
    loop {
        match &*ty.clone() {
            TypeExpr::Arrow(d, r) => {
                args.push(unary_tree(d, &mut n).map_err(LiftedRunError::Interface)?);
                ty = r.clone();
            }
            other => {
                if !other.is_first_order() {
                    return Err(LiftedRunError::Interface(format!(
                        "result type {other} is not first-order data"
                    )));
                }
                break;
            }
        }
    }
    let result_ty = ty;

    let mut t = app(comp, pair(nil(), encode_unary(n)));
    for a in args {
        t = let_in("q", t, app2(proj2(var("q")), a, proj1(var("q"))));
    }
    match eval(&t, fuel) {
        EvalResult::Value(v) => {
            let Term::Pair(st, res) = &*v else {
                return Err(LiftedRunError::Decode(format!("expected a state pair, got {v}")));
            };
            let (gates, num_wires) = decode_state(st).map_err(LiftedRunError::Decode)?;
            let mut outputs = Vec::new();
            decode_outputs(res, &result_ty, &mut outputs).map_err(LiftedRunError::Decode)?;
            Ok(LiftedCircuit { gates, num_wires, outputs })
        }
        EvalResult::Error => Err(LiftedRunError::Halted),
        EvalResult::OutOfFuel(_) => Err(LiftedRunError::OutOfFuel),
        EvalResult::Stuck { reason, .. } => Err(LiftedRunError::Stuck(reason)),
    }
}
