use std::collections::BTreeSet;
use std::rc::Rc;

use super::ast::{Definition, MatchArm, SourceProgram, Term, TypeExpr};
use super::lexer::{lex, Pos, Token};
use super::subst;

/// Parse failure with a 1-based source position.
#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
#[error("parse error at line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    pub fn at(pos: Pos, message: &str) -> Self {
        ParseError { line: pos.line, col: pos.col, message: message.to_string() }
    }
}

/// Parse a source file: a sequence of `def name : type` / `def name args = term`
/// pairs. The last definition is the entry point.
pub fn parse_program(src: &str) -> Result<SourceProgram, ParseError> {
    let mut p = Parser::new(src)?;
    let mut defs: Vec<Definition> = Vec::new();
    while !p.at_eof() {
        defs.push(p.definition()?);
    }
    if defs.is_empty() {
        return Err(ParseError { line: 1, col: 1, message: "expected at least one definition".into() });
    }
    let mut seen = BTreeSet::new();
    for d in &defs {
        if !seen.insert(d.name.clone()) {
            return Err(ParseError {
                line: 1,
                col: 1,
                message: format!("duplicate definition of '{}'", d.name),
            });
        }
    }
    Ok(SourceProgram { defs })
}

/// Parse a standalone term, e.g. a literal argument on the command line.
pub fn parse_term_str(src: &str) -> Result<Rc<Term>, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

/// Parse a standalone type.
pub fn parse_type_str(src: &str) -> Result<Rc<TypeExpr>, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

enum Pattern {
    Var(String, Option<Rc<TypeExpr>>),
    Unit,
    Tuple(Vec<Pattern>),
}

struct Parser {
    toks: Vec<(Token, Pos)>,
    pos: usize,
    used_names: BTreeSet<String>,
    last_pos: Pos,
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        let toks = lex(src)?;
        let used_names = toks
            .iter()
            .filter_map(|(t, _)| match t {
                Token::Ident(s) => Some(s.clone()),
                _ => None,
            })
            .collect();
        let last_pos = toks.last().map(|&(_, p)| p).unwrap_or(Pos { line: 1, col: 1 });
        Ok(Parser { toks, pos: 0, used_names, last_pos })
    }

    fn fresh(&mut self, base: &str) -> String {
        for k in 0.. {
            let cand = if k == 0 { base.to_string() } else { format!("{base}{k}") };
            if !self.used_names.contains(&cand) {
                self.used_names.insert(cand.clone());
                return cand;
            }
        }
        unreachable!()
    }

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> Pos {
        self.toks.get(self.pos).map(|&(_, p)| p).unwrap_or(self.last_pos)
    }

    fn at_eof(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Token, what: &str) -> Result<(), ParseError> {
        let pos = self.here();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(ParseError::at(pos, &format!("expected {what}, found {t:?}"))),
            None => Err(ParseError::at(pos, &format!("expected {what}, found end of input"))),
        }
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        if self.at_eof() {
            Ok(())
        } else {
            Err(ParseError::at(self.here(), "expected end of input"))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        let pos = self.here();
        match self.bump() {
            Some(Token::Ident(s)) => Ok(s),
            other => Err(ParseError::at(pos, &format!("expected {what}, found {other:?}"))),
        }
    }

    fn definition(&mut self) -> Result<Definition, ParseError> {
        self.expect(Token::Def, "'def'")?;
        let name = self.ident("definition name")?;
        self.expect(Token::Colon, "':' after definition name")?;
        let ty = self.ty()?;
        self.expect(Token::Def, "'def' starting the definition body")?;
        let pos = self.here();
        let name2 = self.ident("definition name")?;
        if name2 != name {
            return Err(ParseError::at(
                pos,
                &format!("definition body for '{name2}' does not match signature '{name}'"),
            ));
        }
        let mut params = Vec::new();
        while let Some(Token::Ident(_)) | Some(Token::LParen) = self.peek() {
            params.push(self.binder()?);
        }
        self.expect(Token::Eq, "'=' before the definition body")?;
        let body = self.term()?;
        Ok(Definition { name, ty, params, body })
    }

    /// A binder: `x` or `(x : type)`.
    fn binder(&mut self) -> Result<(String, Option<Rc<TypeExpr>>), ParseError> {
        match self.peek() {
            Some(Token::LParen) => {
                self.bump();
                let name = self.ident("binder name")?;
                self.expect(Token::Colon, "':' in annotated binder")?;
                let ty = self.ty()?;
                self.expect(Token::RParen, "')' closing binder")?;
                Ok((name, Some(ty)))
            }
            _ => Ok((self.ident("binder name")?, None)),
        }
    }

    fn ty(&mut self) -> Result<Rc<TypeExpr>, ParseError> {
        let l = self.ty_sum()?;
        if self.peek() == Some(&Token::Arrow) {
            self.bump();
            let r = self.ty()?;
            Ok(Rc::new(TypeExpr::Arrow(l, r)))
        } else {
            Ok(l)
        }
    }

    fn ty_sum(&mut self) -> Result<Rc<TypeExpr>, ParseError> {
        let l = self.ty_prod()?;
        if self.peek() == Some(&Token::Plus) {
            self.bump();
            let r = self.ty_sum()?;
            Ok(Rc::new(TypeExpr::Sum(l, r)))
        } else {
            Ok(l)
        }
    }

    fn ty_prod(&mut self) -> Result<Rc<TypeExpr>, ParseError> {
        let l = self.ty_atom()?;
        if self.peek() == Some(&Token::Star) {
            self.bump();
            let r = self.ty_prod()?;
            Ok(Rc::new(TypeExpr::Prod(l, r)))
        } else {
            Ok(l)
        }
    }

    fn ty_atom(&mut self) -> Result<Rc<TypeExpr>, ParseError> {
        let pos = self.here();
        match self.bump() {
            Some(Token::BitKw) => Ok(Rc::new(TypeExpr::Bit)),
            Some(Token::One) => Ok(Rc::new(TypeExpr::Unit)),
            Some(Token::LBracket) => {
                let inner = self.ty()?;
                self.expect(Token::RBracket, "']' closing list type")?;
                Ok(Rc::new(TypeExpr::List(inner)))
            }
            Some(Token::LParen) => {
                let inner = self.ty()?;
                self.expect(Token::RParen, "')' closing type")?;
                Ok(inner)
            }
            other => Err(ParseError::at(pos, &format!("expected a type, found {other:?}"))),
        }
    }

    fn term(&mut self) -> Result<Rc<Term>, ParseError> {
        match self.peek() {
            Some(Token::Backslash) => self.lambda(),
            Some(Token::Let) => self.let_term(),
            Some(Token::Letrec) => self.letrec_term(),
            Some(Token::If) => self.if_term(),
            Some(Token::Match) => self.match_term(),
            _ => self.cons_term(),
        }
    }

    fn lambda(&mut self) -> Result<Rc<Term>, ParseError> {
        self.bump();
        let name = self.ident("lambda binder")?;
        let ann = if self.peek() == Some(&Token::Colon) {
            self.bump();
            Some(self.ty()?)
        } else {
            None
        };
        self.expect(Token::Dot, "'.' after lambda binder")?;
        let body = self.term()?;
        Ok(Rc::new(Term::Lam(name, ann, body)))
    }

    fn let_term(&mut self) -> Result<Rc<Term>, ParseError> {
        self.bump();
        match self.peek() {
            Some(Token::Star) => {
                self.bump();
                self.expect(Token::Eq, "'=' in let")?;
                let bound = self.term()?;
                self.expect(Token::In, "'in'")?;
                let body = self.term()?;
                Ok(Rc::new(Term::LetUnit(bound, body)))
            }
            Some(Token::LAngle) | Some(Token::LParen) => {
                // `let <a, b> = ..` or `let (x : T) = ..`
                let pat = self.pattern()?;
                self.expect(Token::Eq, "'=' in let")?;
                let bound = self.term()?;
                self.expect(Token::In, "'in'")?;
                let body = self.term()?;
                Ok(self.bind_pattern(pat, bound, body))
            }
            _ => {
                let name = self.ident("let binder")?;
                let mut params = Vec::new();
                while let Some(Token::Ident(_)) | Some(Token::LParen) = self.peek() {
                    params.push(self.binder()?);
                }
                self.expect(Token::Eq, "'=' in let")?;
                let mut bound = self.term()?;
                for (p, ann) in params.into_iter().rev() {
                    bound = Rc::new(Term::Lam(p, ann, bound));
                }
                self.expect(Token::In, "'in'")?;
                let body = self.term()?;
                Ok(Rc::new(Term::App(Rc::new(Term::Lam(name, None, body)), bound)))
            }
        }
    }

    /// `letrec f (x:A) .. : C = M in N` becomes `(\f. N) (Y (\f. \x. .. M))`.
    /// The fixpoint lambda is annotated with f's full type when the binder
    /// annotations and the result annotation are all present.
    fn letrec_term(&mut self) -> Result<Rc<Term>, ParseError> {
        self.bump();
        let name = self.ident("letrec binder")?;
        let mut params = Vec::new();
        while let Some(Token::Ident(_)) | Some(Token::LParen) = self.peek() {
            params.push(self.binder()?);
        }
        let ret = if self.peek() == Some(&Token::Colon) {
            self.bump();
            Some(self.ty()?)
        } else {
            None
        };
        self.expect(Token::Eq, "'=' in letrec")?;
        let mut bound = self.term()?;
        self.expect(Token::In, "'in'")?;
        let body = self.term()?;

        let f_ty = match (&ret, params.iter().all(|(_, a)| a.is_some())) {
            (Some(r), true) => {
                let mut ty = r.clone();
                for (_, ann) in params.iter().rev() {
                    ty = Rc::new(TypeExpr::Arrow(ann.clone().unwrap(), ty));
                }
                Some(ty)
            }
            _ => None,
        };
        for (p, ann) in params.into_iter().rev() {
            bound = Rc::new(Term::Lam(p, ann, bound));
        }
        let fix = Rc::new(Term::Fix(Rc::new(Term::Lam(name.clone(), f_ty, bound))));
        Ok(Rc::new(Term::App(Rc::new(Term::Lam(name, None, body)), fix)))
    }

    fn if_term(&mut self) -> Result<Rc<Term>, ParseError> {
        self.bump();
        let c = self.term()?;
        self.expect(Token::Then, "'then'")?;
        let m = self.term()?;
        self.expect(Token::Else, "'else'")?;
        let n = self.term()?;
        Ok(self.eta_if(c, m, n))
    }

    /// A conditional whose branches are syntactic lambdas is lifted to a
    /// lambda over a fresh variable, so the test happens at a first-order
    /// type once all arguments are in.
    fn eta_if(&mut self, c: Rc<Term>, m: Rc<Term>, n: Rc<Term>) -> Rc<Term> {
        let m_lam = matches!(&*m, Term::Lam(..));
        let n_lam = matches!(&*n, Term::Lam(..));
        if !m_lam && !n_lam {
            return Rc::new(Term::If(c, m, n));
        }
        let ann = match (&*m, &*n) {
            (Term::Lam(_, Some(a), _), _) => Some(a.clone()),
            (_, Term::Lam(_, Some(a), _)) => Some(a.clone()),
            _ => None,
        };
        let z = self.fresh("x");
        let zv = Rc::new(Term::Var(z.clone()));
        let apply1 = |t: Rc<Term>, zv: &Rc<Term>| -> Rc<Term> {
            match &*t {
                Term::Lam(x, _, b) => subst(b, x, zv),
                _ => Rc::new(Term::App(t, zv.clone())),
            }
        };
        let m2 = apply1(m, &zv);
        let n2 = apply1(n, &zv);
        let inner = self.eta_if(c, m2, n2);
        Rc::new(Term::Lam(z, ann, inner))
    }

    fn match_term(&mut self) -> Result<Rc<Term>, ParseError> {
        self.bump();
        let scrutinee = self.term()?;
        self.expect(Token::With, "'with'")?;
        if self.peek() == Some(&Token::Bar) {
            self.bump();
        }
        let (side1, arm1) = self.match_arm()?;
        self.expect(Token::Bar, "'|' between match arms")?;
        let pos = self.here();
        let (side2, arm2) = self.match_arm()?;
        let (left, right) = match (side1, side2) {
            (ArmSide::Left, ArmSide::Right) => (arm1, arm2),
            (ArmSide::Right, ArmSide::Left) => (arm2, arm1),
            _ => {
                return Err(ParseError::at(pos, "match needs exactly one inl arm and one inr arm"));
            }
        };
        Ok(Rc::new(Term::Match { scrutinee, left, right }))
    }

    fn match_arm(&mut self) -> Result<(ArmSide, MatchArm), ParseError> {
        let pos = self.here();
        let side = match self.bump() {
            Some(Token::Inl) => ArmSide::Left,
            Some(Token::Inr) => ArmSide::Right,
            other => {
                return Err(ParseError::at(pos, &format!("expected 'inl' or 'inr', found {other:?}")));
            }
        };
        let pat = self.pattern()?;
        self.expect(Token::Arrow, "'->' after match pattern")?;
        let body = self.term()?;
        let arm = match pat {
            Pattern::Var(x, ann) => MatchArm { binder: x, ann, body },
            Pattern::Unit => MatchArm { binder: self.fresh("u"), ann: None, body },
            pat @ Pattern::Tuple(_) => {
                let z = self.fresh("z");
                let zv = Rc::new(Term::Var(z.clone()));
                let body = self.bind_pattern(pat, zv, body);
                MatchArm { binder: z, ann: None, body }
            }
        };
        Ok((side, arm))
    }

    fn pattern(&mut self) -> Result<Pattern, ParseError> {
        let pos = self.here();
        match self.peek() {
            Some(Token::Star) => {
                self.bump();
                Ok(Pattern::Unit)
            }
            Some(Token::Ident(_)) => Ok(Pattern::Var(self.ident("pattern")?, None)),
            Some(Token::LParen) => {
                self.bump();
                let name = self.ident("pattern name")?;
                self.expect(Token::Colon, "':' in annotated pattern")?;
                let ty = self.ty()?;
                self.expect(Token::RParen, "')' closing pattern")?;
                Ok(Pattern::Var(name, Some(ty)))
            }
            Some(Token::LAngle) => {
                self.bump();
                let mut pats = vec![self.pattern()?];
                while self.peek() == Some(&Token::Comma) {
                    self.bump();
                    pats.push(self.pattern()?);
                }
                self.expect(Token::RAngle, "'>' closing tuple pattern")?;
                if pats.len() < 2 {
                    return Err(ParseError::at(pos, "tuple patterns need at least two components"));
                }
                Ok(Pattern::Tuple(pats))
            }
            other => Err(ParseError::at(pos, &format!("expected a pattern, found {other:?}"))),
        }
    }

    /// Bind `pat` to `bound` inside `body`, projecting tuple components
    /// left to right.
    fn bind_pattern(&mut self, pat: Pattern, bound: Rc<Term>, body: Rc<Term>) -> Rc<Term> {
        match pat {
            Pattern::Var(x, ann) => Rc::new(Term::App(Rc::new(Term::Lam(x, ann, body)), bound)),
            Pattern::Unit => Rc::new(Term::LetUnit(bound, body)),
            Pattern::Tuple(pats) => {
                let z = self.fresh("z");
                let zv = Rc::new(Term::Var(z.clone()));
                let n = pats.len();
                let mut accesses = Vec::new();
                for i in 0..n {
                    let mut acc = zv.clone();
                    for _ in 0..i.min(n - 1) {
                        acc = Rc::new(Term::Proj2(acc));
                    }
                    if i < n - 1 {
                        acc = Rc::new(Term::Proj1(acc));
                    }
                    accesses.push(acc);
                }
                let mut result = body;
                for (p, acc) in pats.into_iter().zip(accesses).rev() {
                    result = self.bind_pattern(p, acc, result);
                }
                Rc::new(Term::App(Rc::new(Term::Lam(z, None, result)), bound))
            }
        }
    }

    fn cons_term(&mut self) -> Result<Rc<Term>, ParseError> {
        let l = self.app_term()?;
        if self.peek() == Some(&Token::ColonColon) {
            self.bump();
            let r = self.cons_term()?;
            Ok(Rc::new(Term::Inj2(Rc::new(Term::Pair(l, r)))))
        } else {
            Ok(l)
        }
    }

    fn app_term(&mut self) -> Result<Rc<Term>, ParseError> {
        let first = self.applied_atom()?;
        let mut args = Vec::new();
        while self.starts_atom() {
            args.push(self.applied_atom()?);
        }
        // and/xor take their two arguments as a pair
        let mut args = args.into_iter();
        let mut t = match &*first {
            Term::AndPrim | Term::XorPrim => match (args.next(), args.next()) {
                (Some(a), Some(b)) => {
                    Rc::new(Term::App(first, Rc::new(Term::Pair(a, b))))
                }
                (Some(a), None) => Rc::new(Term::App(first, a)),
                _ => first,
            },
            _ => first,
        };
        for a in args {
            t = Rc::new(Term::App(t, a));
        }
        Ok(t)
    }

    fn applied_atom(&mut self) -> Result<Rc<Term>, ParseError> {
        let pos = self.here();
        match self.peek() {
            Some(Token::Pi1) => {
                self.bump();
                Ok(Rc::new(Term::Proj1(self.applied_atom_arg(pos, "pi1")?)))
            }
            Some(Token::Pi2) => {
                self.bump();
                Ok(Rc::new(Term::Proj2(self.applied_atom_arg(pos, "pi2")?)))
            }
            Some(Token::Inl) => {
                self.bump();
                Ok(Rc::new(Term::Inj1(self.applied_atom_arg(pos, "inl")?)))
            }
            Some(Token::Inr) => {
                self.bump();
                Ok(Rc::new(Term::Inj2(self.applied_atom_arg(pos, "inr")?)))
            }
            Some(Token::YKw) => {
                self.bump();
                Ok(Rc::new(Term::Fix(self.applied_atom_arg(pos, "Y")?)))
            }
            _ => self.atom(),
        }
    }

    fn applied_atom_arg(&mut self, pos: Pos, head: &str) -> Result<Rc<Term>, ParseError> {
        if !self.starts_atom() && !matches!(self.peek(), Some(Token::Pi1 | Token::Pi2 | Token::Inl | Token::Inr | Token::YKw)) {
            return Err(ParseError::at(pos, &format!("'{head}' expects an argument")));
        }
        self.applied_atom()
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Some(
                Token::Ident(_)
                    | Token::Tt
                    | Token::Ff
                    | Token::SkipKw
                    | Token::ErrKw
                    | Token::Nil
                    | Token::AndKw
                    | Token::XorKw
                    | Token::NotKw
                    | Token::SplitKw
                    | Token::LParen
                    | Token::LAngle
                    | Token::LBracket
                    | Token::Pi1
                    | Token::Pi2
                    | Token::Inl
                    | Token::Inr
                    | Token::YKw
            )
        )
    }

    fn atom(&mut self) -> Result<Rc<Term>, ParseError> {
        let pos = self.here();
        match self.bump() {
            Some(Token::Ident(s)) => Ok(Rc::new(Term::Var(s))),
            Some(Token::Tt) => Ok(Rc::new(Term::True)),
            Some(Token::Ff) => Ok(Rc::new(Term::False)),
            Some(Token::SkipKw) => Ok(Rc::new(Term::Skip)),
            Some(Token::ErrKw) => Ok(Rc::new(Term::Err)),
            Some(Token::Nil) => Ok(Rc::new(Term::Inj1(Rc::new(Term::Skip)))),
            Some(Token::AndKw) => Ok(Rc::new(Term::AndPrim)),
            Some(Token::XorKw) => Ok(Rc::new(Term::XorPrim)),
            Some(Token::NotKw) => Ok(Rc::new(Term::NotPrim)),
            Some(Token::SplitKw) => Ok(Rc::new(Term::Split)),
            Some(Token::LParen) => {
                let inner = self.term()?;
                self.expect(Token::RParen, "')'")?;
                Ok(inner)
            }
            Some(Token::LAngle) => {
                let mut items = vec![self.term()?];
                while self.peek() == Some(&Token::Comma) {
                    self.bump();
                    items.push(self.term()?);
                }
                self.expect(Token::RAngle, "'>' closing tuple")?;
                if items.len() < 2 {
                    return Err(ParseError::at(pos, "tuples need at least two components"));
                }
                let mut t = items.pop().unwrap();
                while let Some(prev) = items.pop() {
                    t = Rc::new(Term::Pair(prev, t));
                }
                Ok(t)
            }
            Some(Token::LBracket) => {
                if self.peek() == Some(&Token::RBracket) {
                    self.bump();
                    return Ok(Rc::new(Term::Inj1(Rc::new(Term::Skip))));
                }
                let mut items = vec![self.term()?];
                while self.peek() == Some(&Token::Comma) {
                    self.bump();
                    items.push(self.term()?);
                }
                self.expect(Token::RBracket, "']' closing list")?;
                let mut t = Rc::new(Term::Inj1(Rc::new(Term::Skip)));
                while let Some(h) = items.pop() {
                    t = Rc::new(Term::Inj2(Rc::new(Term::Pair(h, t))));
                }
                Ok(t)
            }
            other => Err(ParseError::at(pos, &format!("expected a term, found {other:?}"))),
        }
    }
}

enum ArmSide {
    Left,
    Right,
}
