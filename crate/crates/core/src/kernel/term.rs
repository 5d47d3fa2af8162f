use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::types::TypeExpr;
use crate::resolver::Derivation;

/// Binder name kept only for printing. All binders compare equal, so the
/// derived `PartialEq` on [`Term`] is alpha-equivalence.
#[derive(Clone, Debug)]
pub struct Binder(pub String);

impl PartialEq for Binder {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}
impl Eq for Binder {}
impl Hash for Binder {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

/// Built-in constants that have no instance-level definition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Prim {
    Succ,
    MkOp,
    Unop,
    IntOfNat,
    IntNeg,
    IntAdd,
    IntMul,
}

impl Prim {
    pub const ALL: [Prim; 7] =
        [Prim::Succ, Prim::MkOp, Prim::Unop, Prim::IntOfNat, Prim::IntNeg, Prim::IntAdd, Prim::IntMul];

    pub fn name(self) -> &'static str {
        match self {
            Prim::Succ => "succ",
            Prim::MkOp => "mkop",
            Prim::Unop => "unop",
            Prim::IntOfNat => "int_of_nat",
            Prim::IntNeg => "int_neg",
            Prim::IntAdd => "int_add",
            Prim::IntMul => "int_mul",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Prim::IntAdd | Prim::IntMul => 2,
            _ => 1,
        }
    }

    pub fn from_name(name: &str) -> Option<Prim> {
        Prim::ALL.into_iter().find(|p| p.name() == name)
    }
}

/// Which dictionary a projection reads from.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum InstanceRef {
    /// The structure a class axiom talks about.
    This,
    /// The i-th bracket premise of the enclosing class or instance.
    Premise(usize),
    /// A resolved dictionary.
    Derived(Arc<Derivation>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    /// De Bruijn index into enclosing `Lam`s.
    Var(usize),
    /// Element variable (axiom binder or evaluation input).
    Free(String),
    Lam(Binder, Box<Term>),
    App(Box<Term>, Box<Term>),
    Proj(InstanceRef, String),
    /// Operation reference not yet bound to a dictionary. Produced by the
    /// parser and replaced by `Proj` during registry elaboration.
    Field {
        name: String,
        at: Option<Vec<TypeExpr>>,
    },
    NatLit(u64),
    /// `NatRec(zero_case, succ_case, scrutinee)`; `succ_case` takes the
    /// predecessor and the recursive result.
    NatRec(Box<Term>, Box<Term>, Box<Term>),
    Prim(Prim),
}

impl Term {
    pub fn lam(name: impl Into<String>, body: Term) -> Term {
        Term::Lam(Binder(name.into()), Box::new(body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }

    pub fn free(name: impl Into<String>) -> Term {
        Term::Free(name.into())
    }

    pub fn proj(r: InstanceRef, field: impl Into<String>) -> Term {
        Term::Proj(r, field.into())
    }

    pub fn natrec(z: Term, s: Term, n: Term) -> Term {
        Term::NatRec(Box::new(z), Box::new(s), Box::new(n))
    }

    pub fn field(name: impl Into<String>) -> Term {
        Term::Field { name: name.into(), at: None }
    }

    /// Splits an application spine into head and arguments.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut t = self;
        while let Term::App(f, a) = t {
            args.push(a.as_ref());
            t = f;
        }
        args.reverse();
        (t, args)
    }

    /// Shifts free de Bruijn indices `>= cutoff` by `delta`.
    pub fn shift(&self, delta: isize, cutoff: usize) -> Term {
        match self {
            Term::Var(i) if *i >= cutoff => Term::Var((*i as isize + delta) as usize),
            Term::Lam(b, body) => Term::Lam(b.clone(), Box::new(body.shift(delta, cutoff + 1))),
            Term::App(f, a) => Term::app(f.shift(delta, cutoff), a.shift(delta, cutoff)),
            Term::NatRec(z, s, n) => {
                Term::natrec(z.shift(delta, cutoff), s.shift(delta, cutoff), n.shift(delta, cutoff))
            }
            _ => self.clone(),
        }
    }

    /// Replaces index `j` by `s` (no shifting of the result).
    fn subst_at(&self, j: usize, s: &Term) -> Term {
        match self {
            Term::Var(i) if *i == j => s.clone(),
            Term::Lam(b, body) => Term::Lam(b.clone(), Box::new(body.subst_at(j + 1, &s.shift(1, 0)))),
            Term::App(f, a) => Term::app(f.subst_at(j, s), a.subst_at(j, s)),
            Term::NatRec(z, sc, n) => Term::natrec(z.subst_at(j, s), sc.subst_at(j, s), n.subst_at(j, s)),
            _ => self.clone(),
        }
    }

    /// Beta-instantiates the body of a `Lam` with `arg`.
    pub fn instantiate(body: &Term, arg: &Term) -> Term {
        body.subst_at(0, &arg.shift(1, 0)).shift(-1, 0)
    }

    pub fn has_var(&self, idx: usize) -> bool {
        match self {
            Term::Var(i) => *i == idx,
            Term::Lam(_, body) => body.has_var(idx + 1),
            Term::App(f, a) => f.has_var(idx) || a.has_var(idx),
            Term::NatRec(z, s, n) => z.has_var(idx) || s.has_var(idx) || n.has_var(idx),
            _ => false,
        }
    }

    /// Rewrites every `Proj` reference through `f`.
    pub fn map_refs(&self, f: &impl Fn(&InstanceRef, &str) -> Option<Term>) -> Term {
        match self {
            Term::Proj(r, field) => f(r, field).unwrap_or_else(|| self.clone()),
            Term::Lam(b, body) => Term::Lam(b.clone(), Box::new(body.map_refs(f))),
            Term::App(g, a) => Term::app(g.map_refs(f), a.map_refs(f)),
            Term::NatRec(z, s, n) => Term::natrec(z.map_refs(f), s.map_refs(f), n.map_refs(f)),
            _ => self.clone(),
        }
    }

    /// Rewrites unresolved field references.
    pub fn map_fields(&self, f: &impl Fn(&str, Option<&[TypeExpr]>) -> Option<Term>) -> Term {
        match self {
            Term::Field { name, at } => f(name, at.as_deref()).unwrap_or_else(|| self.clone()),
            Term::Lam(b, body) => Term::Lam(b.clone(), Box::new(body.map_fields(f))),
            Term::App(g, a) => Term::app(g.map_fields(f), a.map_fields(f)),
            Term::NatRec(z, s, n) => Term::natrec(z.map_fields(f), s.map_fields(f), n.map_fields(f)),
            _ => self.clone(),
        }
    }

    pub fn visit(&self, f: &mut impl FnMut(&Term)) {
        f(self);
        match self {
            Term::Lam(_, body) => body.visit(f),
            Term::App(g, a) => {
                g.visit(f);
                a.visit(f);
            }
            Term::NatRec(z, s, n) => {
                z.visit(f);
                s.visit(f);
                n.visit(f);
            }
            _ => {}
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| {
            if let Term::Free(n) = t {
                out.insert(n.clone());
            }
        });
        out
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    fn used_names(&self, out: &mut BTreeSet<String>) {
        self.visit(&mut |t| match t {
            Term::Free(n) | Term::Field { name: n, .. } => {
                out.insert(n.clone());
            }
            Term::Proj(_, n) => {
                out.insert(n.clone());
            }
            _ => {}
        });
    }
}

/// Surface-syntax printer. Binder names are freshened on clashes so the
/// output reparses to an alpha-equivalent term.
pub struct TermPrinter<'a> {
    term: &'a Term,
}

impl Term {
    pub fn display(&self) -> TermPrinter<'_> {
        TermPrinter { term: self }
    }
}

impl fmt::Display for TermPrinter<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut reserved = BTreeSet::new();
        self.term.used_names(&mut reserved);
        for p in Prim::ALL {
            reserved.insert(p.name().to_string());
        }
        let mut scope = Vec::new();
        write_term(f, self.term, &mut scope, &reserved, Prec::Top)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Top,
    Atom,
}

const KEYWORDS: [&str; 11] =
    ["class", "instance", "op", "axiom", "requires", "extends", "forall", "fun", "natrec", "version", "priority"];

fn fresh_name(hint: &str, scope: &[String], reserved: &BTreeSet<String>) -> String {
    let mut name = if hint.is_empty() { "x".to_string() } else { hint.to_string() };
    while scope.contains(&name) || reserved.contains(&name) || KEYWORDS.contains(&name.as_str()) {
        name.push('\'');
    }
    name
}

fn write_term(
    f: &mut fmt::Formatter<'_>,
    t: &Term,
    scope: &mut Vec<String>,
    reserved: &BTreeSet<String>,
    prec: Prec,
) -> fmt::Result {
    match t {
        Term::Var(i) => match scope.len().checked_sub(i + 1).and_then(|k| scope.get(k)) {
            Some(n) => f.write_str(n),
            None => write!(f, "#{i}"),
        },
        Term::Free(n) => f.write_str(n),
        Term::Prim(p) => f.write_str(p.name()),
        Term::NatLit(n) => write!(f, "{n}"),
        Term::Field { name, at } => {
            f.write_str(name)?;
            if let Some(at) = at {
                f.write_str("[")?;
                for (i, ty) in at.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{ty}")?;
                }
                f.write_str("]")?;
            }
            Ok(())
        }
        Term::Proj(r, field) => match r {
            InstanceRef::This => write!(f, "{field}"),
            InstanceRef::Premise(i) => write!(f, "{field}@{i}"),
            InstanceRef::Derived(d) => write!(f, "{field}<{}>", d.goal),
        },
        Term::Lam(..) => {
            if prec > Prec::Top {
                f.write_str("(")?;
            }
            f.write_str("fun")?;
            let mut body = t;
            let base = scope.len();
            while let Term::Lam(b, inner) = body {
                let name = fresh_name(&b.0, scope, reserved);
                write!(f, " {name}")?;
                scope.push(name);
                body = inner;
            }
            f.write_str(" => ")?;
            write_term(f, body, scope, reserved, Prec::Top)?;
            scope.truncate(base);
            if prec > Prec::Top {
                f.write_str(")")?;
            }
            Ok(())
        }
        Term::App(..) | Term::NatRec(..) => {
            if prec == Prec::Atom {
                f.write_str("(")?;
            }
            match t {
                Term::NatRec(z, s, n) => {
                    f.write_str("natrec")?;
                    for part in [z, s, n] {
                        f.write_str(" ")?;
                        write_term(f, part, scope, reserved, Prec::Atom)?;
                    }
                }
                _ => {
                    let (head, args) = t.spine();
                    write_term(f, head, scope, reserved, Prec::Atom)?;
                    for a in args {
                        f.write_str(" ")?;
                        write_term(f, a, scope, reserved, Prec::Atom)?;
                    }
                }
            }
            if prec == Prec::Atom {
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}
