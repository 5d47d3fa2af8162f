use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// A first-order type expression: a variable, or a constructor applied to
/// arguments. Zero-argument constructors double as opaque atoms (`A`, `Nat`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum TypeExpr {
    Var(String),
    App(String, Vec<TypeExpr>),
}

impl TypeExpr {
    pub fn var(name: impl Into<String>) -> Self {
        TypeExpr::Var(name.into())
    }

    pub fn atom(name: impl Into<String>) -> Self {
        TypeExpr::App(name.into(), Vec::new())
    }

    pub fn app(ctor: impl Into<String>, args: Vec<TypeExpr>) -> Self {
        TypeExpr::App(ctor.into(), args)
    }

    pub fn is_ground(&self) -> bool {
        match self {
            TypeExpr::Var(_) => false,
            TypeExpr::App(_, args) => args.iter().all(TypeExpr::is_ground),
        }
    }

    pub fn occurs(&self, var: &str) -> bool {
        match self {
            TypeExpr::Var(v) => v == var,
            TypeExpr::App(_, args) => args.iter().any(|a| a.occurs(var)),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            TypeExpr::Var(v) => {
                out.insert(v.clone());
            }
            TypeExpr::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    /// Visits every constructor occurrence with its arity.
    pub fn for_each_ctor(&self, f: &mut impl FnMut(&str, usize)) {
        if let TypeExpr::App(c, args) = self {
            f(c, args.len());
            args.iter().for_each(|a| a.for_each_ctor(f));
        }
    }

    fn fmt_atomic(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::App(_, args) if !args.is_empty() => write!(f, "({self})"),
            _ => write!(f, "{self}"),
        }
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Var(v) => f.write_str(v),
            TypeExpr::App(c, args) => {
                f.write_str(c)?;
                for a in args {
                    f.write_str(" ")?;
                    a.fmt_atomic(f)?;
                }
                Ok(())
            }
        }
    }
}

/// A class applied to type arguments: `module Nat (fn I M)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Constraint {
    pub class: String,
    pub args: Vec<TypeExpr>,
}

impl Constraint {
    pub fn new(class: impl Into<String>, args: Vec<TypeExpr>) -> Self {
        Constraint { class: class.into(), args }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(TypeExpr::is_ground)
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.args.iter().for_each(|a| a.collect_vars(&mut out));
        out
    }

    pub fn apply(&self, s: &Substitution) -> Constraint {
        Constraint { class: self.class.clone(), args: self.args.iter().map(|a| s.apply(a)).collect() }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.class)?;
        for a in &self.args {
            f.write_str(" ")?;
            a.fmt_atomic(f)?;
        }
        Ok(())
    }
}

/// Idempotent map from type variables to type expressions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Substitution(BTreeMap<String, TypeExpr>);

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a substitution from explicit pairs without checking idempotence.
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, TypeExpr)>,
        S: Into<String>,
    {
        Substitution(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn get(&self, var: &str) -> Option<&TypeExpr> {
        self.0.get(var)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &TypeExpr)> {
        self.0.iter()
    }

    pub fn apply(&self, t: &TypeExpr) -> TypeExpr {
        match t {
            TypeExpr::Var(v) => match self.0.get(v) {
                Some(img) => img.clone(),
                None => t.clone(),
            },
            TypeExpr::App(c, args) => TypeExpr::App(c.clone(), args.iter().map(|a| self.apply(a)).collect()),
        }
    }

    /// Restricts the domain to the given variables.
    pub fn restrict<'a>(&self, vars: impl IntoIterator<Item = &'a String>) -> Substitution {
        let mut out = BTreeMap::new();
        for v in vars {
            if let Some(t) = self.0.get(v) {
                out.insert(v.clone(), t.clone());
            }
        }
        Substitution(out)
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Substitution) -> Substitution {
        let mut out: BTreeMap<String, TypeExpr> = other.0.iter().map(|(k, v)| (k.clone(), self.apply(v))).collect();
        for (k, v) in &self.0 {
            out.entry(k.clone()).or_insert_with(|| v.clone());
        }
        out.retain(|k, v| !matches!(v, TypeExpr::Var(w) if w == k));
        Substitution(out)
    }

    fn bind(&mut self, var: String, t: TypeExpr) {
        let single = Substitution(BTreeMap::from([(var.clone(), t.clone())]));
        for img in self.0.values_mut() {
            *img = single.apply(img);
        }
        self.0.insert(var, t);
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k} := {v}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnifyError {
    #[error("cannot unify `{left}` with `{right}`")]
    Clash { left: TypeExpr, right: TypeExpr },
    #[error("variable `{var}` occurs in `{ty}`")]
    Occurs { var: String, ty: TypeExpr },
}

/// Syntactic first-order unification with occurs check. Returns an idempotent
/// most general unifier.
pub fn unify(a: &TypeExpr, b: &TypeExpr) -> Result<Substitution, UnifyError> {
    let mut s = Substitution::new();
    unify_into(a, b, &mut s)?;
    Ok(s)
}

/// Unifies argument lists pairwise under one substitution.
pub fn unify_all(a: &[TypeExpr], b: &[TypeExpr]) -> Result<Substitution, UnifyError> {
    let mut s = Substitution::new();
    if a.len() != b.len() {
        return Err(UnifyError::Clash { left: TypeExpr::app("_", a.to_vec()), right: TypeExpr::app("_", b.to_vec()) });
    }
    for (x, y) in a.iter().zip(b) {
        unify_into(x, y, &mut s)?;
    }
    Ok(s)
}

pub fn unify_constraints(a: &Constraint, b: &Constraint) -> Result<Substitution, UnifyError> {
    if a.class != b.class {
        return Err(UnifyError::Clash {
            left: TypeExpr::app(a.class.clone(), a.args.clone()),
            right: TypeExpr::app(b.class.clone(), b.args.clone()),
        });
    }
    unify_all(&a.args, &b.args)
}

fn unify_into(a: &TypeExpr, b: &TypeExpr, s: &mut Substitution) -> Result<(), UnifyError> {
    let a = s.apply(a);
    let b = s.apply(b);
    match (&a, &b) {
        (TypeExpr::Var(x), TypeExpr::Var(y)) if x == y => Ok(()),
        (TypeExpr::Var(x), t) | (t, TypeExpr::Var(x)) => {
            if t.occurs(x) {
                return Err(UnifyError::Occurs { var: x.clone(), ty: t.clone() });
            }
            s.bind(x.clone(), t.clone());
            Ok(())
        }
        (TypeExpr::App(c, xs), TypeExpr::App(d, ys)) => {
            if c != d || xs.len() != ys.len() {
                return Err(UnifyError::Clash { left: a.clone(), right: b.clone() });
            }
            for (x, y) in xs.iter().zip(ys) {
                unify_into(x, y, s)?;
            }
            Ok(())
        }
    }
}
