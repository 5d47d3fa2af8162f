use std::collections::BTreeSet;
use std::sync::Arc;

use super::lexer::{tokenize, ParseError, SourceSpan, Tok, Token};
use crate::kernel::{Constraint, Prim, Term, TypeExpr};
use crate::registry::{AxiomStmt, ClassDecl, InstanceDecl, OpField};
use crate::resolver::Goal;

pub const FORMAT_VERSION: u64 = 1;

const KEYWORDS: [&str; 11] =
    ["class", "instance", "op", "axiom", "requires", "extends", "forall", "fun", "natrec", "version", "priority"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decl {
    Class(ClassDecl),
    Instance(InstanceDecl),
}

impl Decl {
    pub fn name(&self) -> &str {
        match self {
            Decl::Class(c) => &c.name,
            Decl::Instance(i) => &i.name,
        }
    }

    /// Same declaration without source locations.
    pub fn without_span(&self) -> Decl {
        match self {
            Decl::Class(c) => Decl::Class(ClassDecl { span: None, ..c.clone() }),
            Decl::Instance(i) => Decl::Instance(InstanceDecl { span: None, ..i.clone() }),
        }
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

/// Scope for identifiers inside a term.
struct TermScope<'a> {
    type_vars: &'a BTreeSet<String>,
    frees: &'a BTreeSet<String>,
    binders: Vec<String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span.clone()
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(ParseError { span: self.span(), message: message.into() })
    }

    fn expect(&mut self, tok: Tok) -> PResult<Token> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            self.error(format!("expected {tok}, found {}", self.peek()))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{kw}`, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            Tok::Ident(s) => self.error(format!("`{s}` is a keyword")),
            other => self.error(format!("expected identifier, found {other}")),
        }
    }

    fn at_plain_ident(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()))
    }

    fn file(&mut self) -> PResult<Vec<Decl>> {
        let mut out = Vec::new();
        if *self.peek() == Tok::Eof {
            return Ok(out);
        }
        self.version()?;
        while *self.peek() != Tok::Eof {
            if self.is_kw("class") {
                out.push(Decl::Class(self.class()?));
            } else if self.is_kw("instance") {
                out.push(Decl::Instance(self.instance()?));
            } else {
                return self.error(format!("expected `class` or `instance`, found {}", self.peek()));
            }
        }
        Ok(out)
    }

    fn version(&mut self) -> PResult<()> {
        if !self.is_kw("version") {
            return self.error("files must start with `version 1`");
        }
        self.bump();
        match self.peek() {
            Tok::Num(FORMAT_VERSION) => {
                self.bump();
                Ok(())
            }
            Tok::Num(n) => self.error(format!("unsupported format version {n}")),
            other => self.error(format!("expected version number, found {other}")),
        }
    }

    fn type_atom(&mut self, vars: &BTreeSet<String>) -> PResult<TypeExpr> {
        if *self.peek() == Tok::LParen {
            self.bump();
            let t = self.type_expr(vars)?;
            self.expect(Tok::RParen)?;
            return Ok(t);
        }
        let name = self.ident()?;
        Ok(if vars.contains(&name) { TypeExpr::Var(name) } else { TypeExpr::atom(name) })
    }

    fn type_expr(&mut self, vars: &BTreeSet<String>) -> PResult<TypeExpr> {
        if *self.peek() == Tok::LParen {
            return self.type_atom(vars);
        }
        let sp = self.span();
        let head = self.ident()?;
        let mut args = Vec::new();
        while self.at_plain_ident() || *self.peek() == Tok::LParen {
            args.push(self.type_atom(vars)?);
        }
        if vars.contains(&head) {
            if !args.is_empty() {
                return Err(ParseError { span: sp, message: format!("type variable `{head}` cannot be applied") });
            }
            return Ok(TypeExpr::Var(head));
        }
        Ok(TypeExpr::App(head, args))
    }

    fn constraint(&mut self, vars: &BTreeSet<String>) -> PResult<Constraint> {
        let class = self.ident()?;
        let mut args = Vec::new();
        while self.at_plain_ident() || *self.peek() == Tok::LParen {
            args.push(self.type_atom(vars)?);
        }
        Ok(Constraint::new(class, args))
    }

    fn bracket(&mut self, vars: &BTreeSet<String>) -> PResult<Constraint> {
        self.expect(Tok::LBracket)?;
        let c = self.constraint(vars)?;
        self.expect(Tok::RBracket)?;
        Ok(c)
    }

    fn class(&mut self) -> PResult<ClassDecl> {
        let span = self.span();
        self.expect_kw("class")?;
        let name = self.ident()?;
        let mut params = Vec::new();
        while *self.peek() == Tok::LParen {
            self.bump();
            let mut group = vec![self.ident()?];
            while self.at_plain_ident() {
                group.push(self.ident()?);
            }
            self.expect(Tok::Colon)?;
            if !self.is_kw("Type") {
                return self.error("class parameters must have type `Type`");
            }
            self.bump();
            self.expect(Tok::RParen)?;
            params.extend(group);
        }
        let vars: BTreeSet<String> = params.iter().cloned().collect();
        let mut premises = Vec::new();
        if self.is_kw("requires") {
            self.bump();
            premises.push(self.bracket(&vars)?);
            while *self.peek() == Tok::LBracket {
                premises.push(self.bracket(&vars)?);
            }
        }
        let mut extends = Vec::new();
        if self.is_kw("extends") {
            self.bump();
            extends.push(self.constraint(&vars)?);
            while *self.peek() == Tok::Comma {
                self.bump();
                extends.push(self.constraint(&vars)?);
            }
        }
        self.expect(Tok::LBrace)?;
        let mut ops = Vec::new();
        let mut axioms = Vec::new();
        loop {
            if self.is_kw("op") {
                self.bump();
                let name = self.ident()?;
                self.expect(Tok::Colon)?;
                let mut sig = vec![self.type_expr(&vars)?];
                while *self.peek() == Tok::Arrow {
                    self.bump();
                    sig.push(self.type_expr(&vars)?);
                }
                if *self.peek() == Tok::Semi {
                    self.bump();
                }
                ops.push(OpField { name, sig });
            } else if self.is_kw("axiom") {
                axioms.push(self.axiom(&vars)?);
            } else if *self.peek() == Tok::RBrace {
                self.bump();
                break;
            } else {
                return self.error(format!("expected `op`, `axiom` or `}}`, found {}", self.peek()));
            }
        }
        Ok(ClassDecl { name, params, premises, extends, ops, axioms, span: Some(span) })
    }

    fn axiom(&mut self, vars: &BTreeSet<String>) -> PResult<AxiomStmt> {
        self.expect_kw("axiom")?;
        let name = self.ident()?;
        self.expect(Tok::Colon)?;
        let mut binders = Vec::new();
        if self.is_kw("forall") {
            self.bump();
            if *self.peek() == Tok::LParen {
                while *self.peek() == Tok::LParen {
                    self.bump();
                    self.binder_group(vars, &mut binders)?;
                    self.expect(Tok::RParen)?;
                }
            } else {
                self.binder_group(vars, &mut binders)?;
            }
            self.expect(Tok::Comma)?;
        }
        let frees: BTreeSet<String> = binders.iter().map(|(n, _): &(String, TypeExpr)| n.clone()).collect();
        let mut scope = TermScope { type_vars: vars, frees: &frees, binders: Vec::new() };
        let lhs = self.term(&mut scope)?;
        self.expect(Tok::Eq)?;
        let rhs = self.term(&mut scope)?;
        if *self.peek() == Tok::Semi {
            self.bump();
        }
        Ok(AxiomStmt { name, binders, lhs, rhs })
    }

    fn binder_group(&mut self, vars: &BTreeSet<String>, out: &mut Vec<(String, TypeExpr)>) -> PResult<()> {
        let mut names = vec![self.ident()?];
        while self.at_plain_ident() {
            names.push(self.ident()?);
        }
        self.expect(Tok::Colon)?;
        let ty = self.type_expr(vars)?;
        out.extend(names.into_iter().map(|n| (n, ty.clone())));
        Ok(())
    }

    fn instance(&mut self) -> PResult<InstanceDecl> {
        let span = self.span();
        self.expect_kw("instance")?;
        let name = self.ident()?;
        let mut type_vars = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            while self.at_plain_ident() {
                type_vars.push(self.ident()?);
            }
            self.expect(Tok::RParen)?;
        }
        let vars: BTreeSet<String> = type_vars.iter().cloned().collect();
        let mut premises = Vec::new();
        while *self.peek() == Tok::LBracket {
            premises.push(self.bracket(&vars)?);
        }
        self.expect(Tok::Colon)?;
        let head = self.constraint(&vars)?;
        let mut priority = None;
        if self.is_kw("priority") {
            self.bump();
            let negative = *self.peek() == Tok::Minus;
            if negative {
                self.bump();
            }
            match self.peek().clone() {
                Tok::Num(n) => {
                    self.bump();
                    let Ok(n) = i64::try_from(n) else { return self.error("priority out of range") };
                    priority = Some(if negative { -n } else { n });
                }
                other => return self.error(format!("expected priority number, found {other}")),
            }
        }
        self.expect(Tok::LBrace)?;
        let mut defs = Vec::new();
        let frees = BTreeSet::new();
        while *self.peek() != Tok::RBrace {
            let field = self.ident()?;
            self.expect(Tok::Define)?;
            let mut scope = TermScope { type_vars: &vars, frees: &frees, binders: Vec::new() };
            let body = self.term(&mut scope)?;
            if *self.peek() == Tok::Semi {
                self.bump();
            }
            defs.push((field, body));
        }
        self.expect(Tok::RBrace)?;
        Ok(InstanceDecl { name, type_vars, premises, head, defs, priority, span: Some(span) })
    }

    fn term(&mut self, scope: &mut TermScope<'_>) -> PResult<Term> {
        if self.is_kw("fun") {
            self.bump();
            let mut names = vec![self.ident()?];
            while self.at_plain_ident() {
                names.push(self.ident()?);
            }
            self.expect(Tok::FatArrow)?;
            let depth = scope.binders.len();
            scope.binders.extend(names.iter().cloned());
            let body = self.term(scope);
            scope.binders.truncate(depth);
            let mut body = body?;
            for n in names.into_iter().rev() {
                body = Term::lam(n, body);
            }
            return Ok(body);
        }
        let mut head = self.app_head(scope)?;
        while self.starts_atom() {
            let arg = self.atom(scope)?;
            head = Term::app(head, arg);
        }
        Ok(head)
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Num(_) | Tok::LParen => true,
            Tok::Ident(s) if s == "natrec" => true,
            Tok::Ident(s) => !KEYWORDS.contains(&s.as_str()) && *self.peek_at(1) != Tok::Define,
            _ => false,
        }
    }

    fn app_head(&mut self, scope: &mut TermScope<'_>) -> PResult<Term> {
        if self.is_kw("natrec") {
            self.bump();
            let z = self.atom(scope)?;
            let s = self.atom(scope)?;
            let n = self.atom(scope)?;
            return Ok(Term::natrec(z, s, n));
        }
        if !self.starts_atom() {
            return self.error(format!("expected a term, found {}", self.peek()));
        }
        self.atom(scope)
    }

    fn atom(&mut self, scope: &mut TermScope<'_>) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Term::NatLit(n))
            }
            Tok::LParen => {
                self.bump();
                let t = self.term(scope)?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::Ident(s) if s == "natrec" => {
                self.bump();
                let z = self.atom(scope)?;
                let sc = self.atom(scope)?;
                let n = self.atom(scope)?;
                Ok(Term::natrec(z, sc, n))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if let Some(pos) = scope.binders.iter().rposition(|b| *b == name) {
                    return Ok(Term::Var(scope.binders.len() - 1 - pos));
                }
                if scope.frees.contains(&name) {
                    return Ok(Term::Free(name));
                }
                if let Some(p) = Prim::from_name(&name) {
                    return Ok(Term::Prim(p));
                }
                let mut at = None;
                if *self.peek() == Tok::LBracket {
                    self.bump();
                    let mut tys = vec![self.type_expr(scope.type_vars)?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        tys.push(self.type_expr(scope.type_vars)?);
                    }
                    self.expect(Tok::RBracket)?;
                    at = Some(tys);
                }
                Ok(Term::Field { name, at })
            }
            other => self.error(format!("expected a term, found {other}")),
        }
    }
}

fn parser_for(file: &str, text: &str) -> Result<Parser, Vec<ParseError>> {
    let file: Arc<str> = Arc::from(file);
    let toks = tokenize(&file, text).map_err(|e| vec![e])?;
    Ok(Parser { toks, pos: 0 })
}

/// Parses a `.tc` declaration file.
pub fn parse_file(file: &str, text: &str) -> Result<Vec<Decl>, Vec<ParseError>> {
    let mut p = parser_for(file, text)?;
    p.file().map_err(|e| vec![e])
}

/// Parses a goal such as `[monoid M] mul_action (opposite M) M`. Every name
/// is an opaque atom; bracketed constraints become local hypotheses.
pub fn parse_goal(text: &str) -> Result<Goal, ParseError> {
    let mut p = parser_for("<goal>", text).map_err(|mut e| e.remove(0))?;
    let none = BTreeSet::new();
    let mut hypotheses = Vec::new();
    while *p.peek() == Tok::LBracket {
        hypotheses.push(p.bracket(&none)?);
    }
    let target = p.constraint(&none)?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {} after goal", p.peek()));
    }
    Ok(Goal { hypotheses, target })
}

/// Parses a standalone term (used by tests and tooling). Names listed in
/// `frees` become element variables; other names are operation references.
pub fn parse_term(text: &str, frees: &[&str]) -> Result<Term, ParseError> {
    let mut p = parser_for("<term>", text).map_err(|mut e| e.remove(0))?;
    let vars = BTreeSet::new();
    let frees: BTreeSet<String> = frees.iter().map(|s| s.to_string()).collect();
    let mut scope = TermScope { type_vars: &vars, frees: &frees, binders: Vec::new() };
    let t = p.term(&mut scope)?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {} after term", p.peek()));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(text: &str) -> Decl {
        let mut d = parse_file("t.tc", text).unwrap();
        assert_eq!(d.len(), 1);
        d.remove(0)
    }

    #[test]
    fn class_with_op() {
        let d = one("version 1\nclass has_scalar (M : Type) (A : Type) { op smul : M -> A -> A }");
        let Decl::Class(c) = d else { panic!() };
        assert_eq!(c.params, vec!["M", "A"]);
        assert_eq!(c.ops.len(), 1);
        assert_eq!(c.ops[0].sig, vec![TypeExpr::var("M"), TypeExpr::var("A"), TypeExpr::var("A")]);
    }

    #[test]
    fn empty_file() {
        assert!(parse_file("e.tc", "").unwrap().is_empty());
        assert!(parse_file("e.tc", "-- only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn instance_with_premise() {
        let d = one("version 1\ninstance f (A) [has_mul A] : has_scalar A A { smul := fun a b => mul a b }");
        let Decl::Instance(i) = d else { panic!() };
        assert_eq!(i.premises.len(), 1);
        assert_eq!(i.head, Constraint::new("has_scalar", vec![TypeExpr::var("A"), TypeExpr::var("A")]));
        let body = Term::lam("a", Term::lam("b", Term::apps(Term::field("mul"), [Term::Var(1), Term::Var(0)])));
        assert_eq!(i.defs, vec![("smul".to_string(), body)]);
    }

    #[test]
    fn axioms_with_binders_and_qualified_ops() {
        let src = "version 1
class tower (M N A : Type) requires [s M N] [s N A] [s M A] {
  axiom smul_assoc : forall (x : M) (y : N) (z : A), smul[M, A] (smul[M, N] x y) z = smul[M, A] x (smul[N, A] y z)
}";
        let Decl::Class(c) = one(src) else { panic!() };
        assert_eq!(c.premises.len(), 3);
        let ax = &c.axioms[0];
        assert_eq!(ax.binders.len(), 3);
        assert!(
            matches!(&ax.lhs, Term::App(f, _) if matches!(&**f, Term::App(g, _) if matches!(&**g, Term::Field { at: Some(_), .. })))
        );
    }

    #[test]
    fn multiple_defs_without_separators() {
        let src =
            "version 1\ninstance z (A) [c A] : d A { zero := fun i => zero\n add := fun f g i => add (f i) (g i) }";
        let Decl::Instance(i) = one(src) else { panic!() };
        assert_eq!(i.defs.len(), 2);
    }

    #[test]
    fn goal_with_hypotheses() {
        let g = parse_goal("[add_comm_monoid A] [add_comm_monoid B] module Nat (fn iota (add_hom A B))").unwrap();
        assert_eq!(g.hypotheses.len(), 2);
        assert_eq!(g.target.class, "module");
        assert_eq!(g.target.args[1].to_string(), "fn iota (add_hom A B)");
        let g = parse_goal("has_mul A").unwrap();
        assert_eq!(g.target, Constraint::new("has_mul", vec![TypeExpr::atom("A")]));
        let g = parse_goal("has_scalar R (fn i1 (fn i2 R))").unwrap();
        assert_eq!(g.target.args[1].to_string(), "fn i1 (fn i2 R)");
    }

    #[test]
    fn natrec_and_prims() {
        let t = parse_term("fun n x => natrec zero (fun k r => add r x) n", &[]).unwrap();
        let Term::Lam(_, b) = &t else { panic!() };
        let Term::Lam(_, b) = &**b else { panic!() };
        assert!(matches!(&**b, Term::NatRec(..)));
        assert_eq!(parse_term("succ 3", &[]).unwrap(), Term::app(Term::Prim(Prim::Succ), Term::NatLit(3)));
    }

    #[test]
    fn errors_carry_spans() {
        let err = parse_file("bad.tc", "version 1\nclass x (A : Type) { op f : A -> }").unwrap_err();
        assert_eq!(err[0].span.line, 2);
        assert!(err[0].span.column > 1);
        let err = parse_file("bad.tc", "class x (A : Type) {}").unwrap_err();
        assert_eq!(err[0].span.line, 1);
        let err = parse_file("bad.tc", "version 2\n").unwrap_err();
        assert!(err[0].message.contains("version"));
    }
}
