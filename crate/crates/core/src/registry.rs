//! Class and instance declarations.
//!
//! Classes are stored with their fields flattened through `extends`, so an
//! instance of `module R M` defines every operation of `has_scalar R M` as
//! well. Each `extends` clause also produces a projection instance
//! `child.to_parent` whose single premise is the child class.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::kernel::{Constraint, InstanceRef, Substitution, Term, TypeExpr};
use crate::parser::{self, Decl, ParseError, SourceSpan};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpField {
    pub name: String,
    /// Parameter types followed by the result type.
    pub sig: Vec<TypeExpr>,
}

impl OpField {
    pub fn arity(&self) -> usize {
        self.sig.len() - 1
    }

    pub fn result(&self) -> &TypeExpr {
        self.sig.last().expect("signature has a result type")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomStmt {
    pub name: String,
    pub binders: Vec<(String, TypeExpr)>,
    pub lhs: Term,
    pub rhs: Term,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassDecl {
    pub name: String,
    pub params: Vec<String>,
    pub premises: Vec<Constraint>,
    pub extends: Vec<Constraint>,
    pub ops: Vec<OpField>,
    pub axioms: Vec<AxiomStmt>,
    pub span: Option<SourceSpan>,
}

impl ClassDecl {
    pub fn new(name: impl Into<String>, params: &[&str]) -> Self {
        ClassDecl {
            name: name.into(),
            params: params.iter().map(|p| p.to_string()).collect(),
            premises: Vec::new(),
            extends: Vec::new(),
            ops: Vec::new(),
            axioms: Vec::new(),
            span: None,
        }
    }

    pub fn self_constraint(&self) -> Constraint {
        Constraint::new(self.name.clone(), self.params.iter().map(TypeExpr::var).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceDecl {
    pub name: String,
    pub type_vars: Vec<String>,
    pub premises: Vec<Constraint>,
    pub head: Constraint,
    pub defs: Vec<(String, Term)>,
    pub priority: Option<i64>,
    pub span: Option<SourceSpan>,
}

impl InstanceDecl {
    pub fn def(&self, field: &str) -> Option<&Term> {
        self.defs.iter().find(|(n, _)| n == field).map(|(_, t)| t)
    }
}

/// An axiom reachable from a class, possibly inherited through `extends`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatAxiom {
    /// Class that declares the axiom.
    pub origin: String,
    /// Arguments of the origin class, over the inheriting class's params.
    pub args: Vec<TypeExpr>,
    pub index: usize,
}

#[derive(Clone, Debug)]
pub struct ClassInfo {
    pub decl: ClassDecl,
    /// Own and inherited operation fields, over this class's params.
    pub fields: Vec<OpField>,
    pub axioms: Vec<FlatAxiom>,
}

impl ClassInfo {
    pub fn field(&self, name: &str) -> Option<&OpField> {
        self.fields.iter().find(|f| f.name == name)
    }

    /// Substitution from class params to the constraint's arguments.
    pub fn instantiation(&self, args: &[TypeExpr]) -> Substitution {
        Substitution::from_pairs(self.decl.params.iter().cloned().zip(args.iter().cloned()))
    }
}

#[derive(Clone, Debug)]
pub struct InstanceInfo {
    pub decl: InstanceDecl,
    pub seq: usize,
    /// Generated from an `extends` clause.
    pub synthetic: bool,
}

impl InstanceInfo {
    pub fn priority(&self) -> i64 {
        self.decl.priority.unwrap_or(self.seq as i64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("class `{0}` is already declared")]
    DuplicateClass(String),
    #[error("instance `{0}` is already declared")]
    DuplicateInstance(String),
    #[error("`{decl}` mentions type variable `{var}` that is not a parameter")]
    UnscopedVariable { decl: String, var: String },
    #[error("class `{class}` extends unknown class `{parent}`")]
    UnknownSuperclass { class: String, parent: String },
    #[error("instance `{instance}` targets unknown class `{class}`")]
    UnknownClass { instance: String, class: String },
    #[error("instance `{instance}` does not define `{field}`")]
    MissingOpDef { instance: String, field: String },
    #[error("instance `{instance}` defines `{field}`, which is not a field of `{class}`")]
    ExtraOpDef { instance: String, field: String, class: String },
    #[error("`{decl}`: variable `{var}` appears in a premise but not in the head")]
    AmbiguousVariable { decl: String, var: String },
    #[error("class `{class}` declares field `{field}` more than once")]
    DuplicateField { class: String, field: String },
    #[error("class `{class}` inherits `{field}` with incompatible signatures")]
    ConflictingField { class: String, field: String },
    #[error("`{constraint}` has {found} arguments but class expects {expected}")]
    ArityMismatch { constraint: String, expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    Arity,
    UnknownSymbol,
    AmbiguousSymbol,
    Scoping,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub message: String,
    pub span: Option<SourceSpan>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.span {
            Some(s) => write!(f, "{s}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{}", join_lines(.0))]
    Parse(Vec<ParseError>),
    #[error("{0}")]
    Registry(#[from] RegistryError),
    #[error("{}", join_lines(.0))]
    Invalid(Vec<Diagnostic>),
}

fn join_lines<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("\n")
}

#[derive(Clone, Debug, Default)]
pub struct Registry {
    classes: Vec<ClassInfo>,
    class_ix: HashMap<String, usize>,
    instances: Vec<InstanceInfo>,
    instance_ix: HashMap<String, usize>,
    order: Vec<usize>,
    /// Operation references left unresolved because several premises
    /// provide them, keyed by the declaration context used in diagnostics.
    ambiguous: BTreeMap<String, Vec<(String, usize)>>,
}

enum RefLookup {
    Found(InstanceRef),
    Unknown,
    Ambiguous(usize),
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses, elaborates and validates one source text.
    pub fn from_sources<'a>(sources: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Registry, LoadError> {
        let mut reg = Registry::new();
        for (file, text) in sources {
            reg.load_source(file, text)?;
        }
        let diags = reg.validate();
        if !diags.is_empty() {
            return Err(LoadError::Invalid(diags));
        }
        Ok(reg)
    }

    /// Adds every declaration of a `.tc` file. Parsing completes before the
    /// registry is touched; registry errors abort at the failing declaration.
    pub fn load_source(&mut self, file: &str, text: &str) -> Result<(), LoadError> {
        let decls = parser::parse_file(file, text).map_err(LoadError::Parse)?;
        let mut staged = self.clone();
        for d in decls {
            match d {
                Decl::Class(c) => staged.add_class(c)?,
                Decl::Instance(i) => staged.add_instance(i)?,
            }
        }
        *self = staged;
        Ok(())
    }

    pub fn class(&self, name: &str) -> Option<&ClassInfo> {
        self.class_ix.get(name).map(|&i| &self.classes[i])
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassInfo> {
        self.classes.iter()
    }

    pub fn instance(&self, name: &str) -> Option<&InstanceInfo> {
        self.instance_ix.get(name).map(|&i| &self.instances[i])
    }

    /// Instances in the order the resolver tries them.
    pub fn instances(&self) -> impl Iterator<Item = &InstanceInfo> {
        self.order.iter().map(|&i| &self.instances[i])
    }

    pub fn instance_count(&self) -> usize {
        self.instances.len()
    }

    pub fn axiom(&self, flat: &FlatAxiom) -> Option<&AxiomStmt> {
        self.class(&flat.origin)?.decl.axioms.get(flat.index)
    }

    /// Signature of `field` in the class of `c`, instantiated at `c`'s arguments.
    pub fn field_signature(&self, c: &Constraint, field: &str) -> Option<Vec<TypeExpr>> {
        let info = self.class(&c.class)?;
        let f = info.field(field)?;
        let s = info.instantiation(&c.args);
        Some(f.sig.iter().map(|t| s.apply(t)).collect())
    }

    pub fn add_class(&mut self, mut decl: ClassDecl) -> Result<(), RegistryError> {
        if self.class_ix.contains_key(&decl.name) {
            return Err(RegistryError::DuplicateClass(decl.name));
        }
        let params: BTreeSet<String> = decl.params.iter().cloned().collect();
        let mut mentioned = BTreeSet::new();
        for c in decl.premises.iter().chain(&decl.extends) {
            mentioned.extend(c.vars());
        }
        for op in &decl.ops {
            op.sig.iter().for_each(|t| t.collect_vars(&mut mentioned));
        }
        for ax in &decl.axioms {
            ax.binders.iter().for_each(|(_, t)| t.collect_vars(&mut mentioned));
        }
        if let Some(var) = mentioned.difference(&params).next() {
            return Err(RegistryError::UnscopedVariable { decl: decl.name, var: var.clone() });
        }

        let mut seen = BTreeSet::new();
        for name in decl.ops.iter().map(|o| &o.name).chain(decl.axioms.iter().map(|a| &a.name)) {
            if !seen.insert(name.clone()) {
                return Err(RegistryError::DuplicateField { class: decl.name, field: name.clone() });
            }
        }

        // Flatten fields and axioms through `extends`.
        let mut fields: Vec<OpField> = Vec::new();
        let mut axioms: Vec<FlatAxiom> = Vec::new();
        for parent in &decl.extends {
            let Some(pinfo) = self.class(&parent.class) else {
                return Err(RegistryError::UnknownSuperclass { class: decl.name, parent: parent.class.clone() });
            };
            if pinfo.decl.params.len() != parent.args.len() {
                return Err(RegistryError::ArityMismatch {
                    constraint: parent.to_string(),
                    expected: pinfo.decl.params.len(),
                    found: parent.args.len(),
                });
            }
            if let Some(var) = params.difference(&parent.vars()).next() {
                return Err(RegistryError::AmbiguousVariable {
                    decl: format!("{}.to_{}", decl.name, parent.class),
                    var: var.clone(),
                });
            }
            let s = pinfo.instantiation(&parent.args);
            for f in &pinfo.fields {
                let sig: Vec<TypeExpr> = f.sig.iter().map(|t| s.apply(t)).collect();
                match fields.iter().find(|g| g.name == f.name) {
                    Some(g) if g.sig != sig => {
                        return Err(RegistryError::ConflictingField { class: decl.name, field: f.name.clone() })
                    }
                    Some(_) => {}
                    None => fields.push(OpField { name: f.name.clone(), sig }),
                }
            }
            for a in &pinfo.axioms {
                let flat = FlatAxiom {
                    origin: a.origin.clone(),
                    args: a.args.iter().map(|t| s.apply(t)).collect(),
                    index: a.index,
                };
                if !axioms.contains(&flat) {
                    axioms.push(flat);
                }
            }
        }
        for op in &decl.ops {
            if fields.iter().any(|f| f.name == op.name) {
                return Err(RegistryError::DuplicateField { class: decl.name, field: op.name.clone() });
            }
            fields.push(op.clone());
        }
        for index in 0..decl.axioms.len() {
            axioms.push(FlatAxiom {
                origin: decl.name.clone(),
                args: decl.params.iter().map(TypeExpr::var).collect(),
                index,
            });
        }

        // Elaborate operation references in axioms.
        let this = decl.self_constraint();
        let this_fields: Vec<&str> = fields.iter().map(|f| f.name.as_str()).collect();
        let mut sources: Vec<(InstanceRef, &Constraint, Vec<&str>)> = vec![(InstanceRef::This, &this, this_fields)];
        for (i, p) in decl.premises.iter().enumerate() {
            sources.push((InstanceRef::Premise(i), p, self.field_names(&p.class)));
        }
        let mut ambiguous = Vec::new();
        let elaborated: Vec<AxiomStmt> = decl
            .axioms
            .iter()
            .map(|ax| {
                let (lhs, mut a) = Self::elaborate(&ax.lhs, &sources);
                let (rhs, b) = Self::elaborate(&ax.rhs, &sources);
                a.extend(b);
                if !a.is_empty() {
                    ambiguous.push((format!("axiom `{}.{}`", decl.name, ax.name), a));
                }
                AxiomStmt { lhs, rhs, ..ax.clone() }
            })
            .collect();
        drop(sources);
        decl.axioms = elaborated;
        self.ambiguous.extend(ambiguous);

        let projections: Vec<InstanceDecl> = decl
            .extends
            .iter()
            .map(|parent| {
                let pfields = &self.class(&parent.class).expect("checked above").fields;
                InstanceDecl {
                    name: format!("{}.to_{}", decl.name, parent.class),
                    type_vars: decl.params.clone(),
                    premises: vec![this.clone()],
                    head: parent.clone(),
                    defs: pfields
                        .iter()
                        .map(|f| (f.name.clone(), Term::proj(InstanceRef::Premise(0), f.name.clone())))
                        .collect(),
                    priority: None,
                    span: decl.span.clone(),
                }
            })
            .collect();

        self.class_ix.insert(decl.name.clone(), self.classes.len());
        self.classes.push(ClassInfo { decl, fields, axioms });
        for p in projections {
            self.push_instance(p, true)?;
        }
        Ok(())
    }

    pub fn add_instance(&mut self, decl: InstanceDecl) -> Result<(), RegistryError> {
        let Some(info) = self.class(&decl.head.class) else {
            return Err(RegistryError::UnknownClass { instance: decl.name, class: decl.head.class });
        };
        let scoped: BTreeSet<String> = decl.type_vars.iter().cloned().collect();
        let mut mentioned = decl.head.vars();
        for p in &decl.premises {
            mentioned.extend(p.vars());
        }
        if let Some(var) = mentioned.difference(&scoped).next() {
            return Err(RegistryError::UnscopedVariable { decl: decl.name, var: var.clone() });
        }
        let head_vars = decl.head.vars();
        for p in &decl.premises {
            if let Some(var) = p.vars().difference(&head_vars).next() {
                return Err(RegistryError::AmbiguousVariable { decl: decl.name, var: var.clone() });
            }
        }
        for f in &info.fields {
            if decl.def(&f.name).is_none() {
                return Err(RegistryError::MissingOpDef { instance: decl.name, field: f.name.clone() });
            }
        }
        let mut seen = BTreeSet::new();
        for (name, _) in &decl.defs {
            if info.field(name).is_none() || !seen.insert(name.clone()) {
                return Err(RegistryError::ExtraOpDef {
                    instance: decl.name,
                    field: name.clone(),
                    class: decl.head.class,
                });
            }
        }
        self.push_instance(decl, false)
    }

    fn push_instance(&mut self, mut decl: InstanceDecl, synthetic: bool) -> Result<(), RegistryError> {
        if self.instance_ix.contains_key(&decl.name) {
            return Err(RegistryError::DuplicateInstance(decl.name));
        }
        if !synthetic {
            let sources: Vec<(InstanceRef, &Constraint, Vec<&str>)> = decl
                .premises
                .iter()
                .enumerate()
                .map(|(i, p)| (InstanceRef::Premise(i), p, self.field_names(&p.class)))
                .collect();
            let mut ambiguous = Vec::new();
            let defs = decl
                .defs
                .iter()
                .map(|(n, t)| {
                    let (t, a) = Self::elaborate(t, &sources);
                    ambiguous.extend(a);
                    (n.clone(), t)
                })
                .collect();
            drop(sources);
            decl.defs = defs;
            if !ambiguous.is_empty() {
                self.ambiguous.insert(format!("instance `{}`", decl.name), ambiguous);
            }
        }
        let seq = self.instances.len();
        self.instance_ix.insert(decl.name.clone(), seq);
        self.instances.push(InstanceInfo { decl, seq, synthetic });
        self.order.push(seq);
        let instances = &self.instances;
        self.order.sort_by_key(|&i| (instances[i].priority(), instances[i].seq));
        Ok(())
    }

    fn field_names(&self, class: &str) -> Vec<&str> {
        self.class(class).map(|c| c.fields.iter().map(|f| f.name.as_str()).collect()).unwrap_or_default()
    }

    fn lookup(name: &str, at: Option<&[TypeExpr]>, sources: &[(InstanceRef, &Constraint, Vec<&str>)]) -> RefLookup {
        let hits: Vec<&InstanceRef> = sources
            .iter()
            .filter(|(_, c, fields)| fields.contains(&name) && at.is_none_or(|at| c.args == at))
            .map(|(r, _, _)| r)
            .collect();
        match hits.as_slice() {
            [r] => RefLookup::Found((*r).clone()),
            [] => RefLookup::Unknown,
            many => RefLookup::Ambiguous(many.len()),
        }
    }

    /// Binds field references to sources; also returns the names that
    /// matched more than one source.
    fn elaborate(t: &Term, sources: &[(InstanceRef, &Constraint, Vec<&str>)]) -> (Term, Vec<(String, usize)>) {
        let ambiguous = std::cell::RefCell::new(Vec::new());
        let out = t.map_fields(&|name, at| match Self::lookup(name, at, sources) {
            RefLookup::Found(r) => Some(Term::proj(r, name)),
            RefLookup::Ambiguous(n) => {
                ambiguous.borrow_mut().push((name.to_string(), n));
                None
            }
            RefLookup::Unknown => None,
        });
        (out, ambiguous.into_inner())
    }

    /// Well-formedness check. An empty list means the registry is usable.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        let mut arities: BTreeMap<String, usize> = BTreeMap::new();
        let mut reported: BTreeSet<String> = BTreeSet::new();
        let mut check_type = |t: &TypeExpr, span: &Option<SourceSpan>, diags: &mut Vec<Diagnostic>| {
            t.for_each_ctor(&mut |c, n| match arities.get(c) {
                Some(&m) if m != n => {
                    if reported.insert(c.to_string()) {
                        diags.push(Diagnostic {
                            kind: DiagnosticKind::Arity,
                            message: format!("constructor `{c}` is used with arity {m} and {n}"),
                            span: span.clone(),
                        });
                    }
                }
                Some(_) => {}
                None => {
                    arities.insert(c.to_string(), n);
                }
            });
        };

        let check_constraint =
            |c: &Constraint, span: &Option<SourceSpan>, diags: &mut Vec<Diagnostic>| match self.class(&c.class) {
                None => diags.push(Diagnostic {
                    kind: DiagnosticKind::UnknownSymbol,
                    message: format!("unknown class `{}`", c.class),
                    span: span.clone(),
                }),
                Some(info) if info.decl.params.len() != c.args.len() => diags.push(Diagnostic {
                    kind: DiagnosticKind::Arity,
                    message: format!(
                        "`{c}` has {} arguments but `{}` expects {}",
                        c.args.len(),
                        c.class,
                        info.decl.params.len()
                    ),
                    span: span.clone(),
                }),
                Some(_) => {}
            };

        for info in &self.classes {
            let d = &info.decl;
            for c in d.premises.iter().chain(&d.extends) {
                check_constraint(c, &d.span, &mut diags);
                c.args.iter().for_each(|t| check_type(t, &d.span, &mut diags));
            }
            for op in &d.ops {
                op.sig.iter().for_each(|t| check_type(t, &d.span, &mut diags));
            }
            for ax in &d.axioms {
                ax.binders.iter().for_each(|(_, t)| check_type(t, &d.span, &mut diags));
                let bound: BTreeSet<String> = ax.binders.iter().map(|(n, _)| n.clone()).collect();
                let ctx = format!("axiom `{}.{}`", d.name, ax.name);
                for side in [&ax.lhs, &ax.rhs] {
                    term_diagnostics(side, &ctx, &bound, self.ambiguous.get(&ctx), &d.span, &mut diags);
                }
                ambiguity_diagnostics(&ctx, self.ambiguous.get(&ctx), &d.span, &mut diags);
            }
        }
        for inst in &self.instances {
            let d = &inst.decl;
            for c in d.premises.iter().chain(std::iter::once(&d.head)) {
                check_constraint(c, &d.span, &mut diags);
                c.args.iter().for_each(|t| check_type(t, &d.span, &mut diags));
            }
            let ctx = format!("instance `{}`", d.name);
            for (_, t) in &d.defs {
                term_diagnostics(t, &ctx, &BTreeSet::new(), self.ambiguous.get(&ctx), &d.span, &mut diags);
            }
            ambiguity_diagnostics(&ctx, self.ambiguous.get(&ctx), &d.span, &mut diags);
        }
        diags
    }
}

fn ambiguity_diagnostics(
    ctx: &str,
    ambiguous: Option<&Vec<(String, usize)>>,
    span: &Option<SourceSpan>,
    diags: &mut Vec<Diagnostic>,
) {
    let mut seen = BTreeSet::new();
    for (name, n) in ambiguous.into_iter().flatten() {
        if seen.insert(name) {
            diags.push(Diagnostic {
                kind: DiagnosticKind::AmbiguousSymbol,
                message: format!("{ctx}: `{name}` is provided by {n} premises; qualify it as `{name}[T, ...]`"),
                span: span.clone(),
            });
        }
    }
}

fn term_diagnostics(
    t: &Term,
    ctx: &str,
    bound: &BTreeSet<String>,
    ambiguous: Option<&Vec<(String, usize)>>,
    span: &Option<SourceSpan>,
    diags: &mut Vec<Diagnostic>,
) {
    fn walk(
        t: &Term,
        depth: usize,
        out: &mut Vec<(DiagnosticKind, String)>,
        bound: &BTreeSet<String>,
        ambiguous_names: &BTreeSet<&str>,
    ) {
        match t {
            Term::Var(i) if *i >= depth => out.push((DiagnosticKind::Scoping, format!("dangling variable #{i}"))),
            Term::Free(n) if !bound.contains(n) => {
                out.push((DiagnosticKind::Scoping, format!("unbound variable `{n}`")))
            }
            Term::Field { name, at } if !ambiguous_names.contains(name.as_str()) => {
                let q = at
                    .as_ref()
                    .map(|at| format!("[{}]", at.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")))
                    .unwrap_or_default();
                out.push((DiagnosticKind::UnknownSymbol, format!("unresolved operation `{name}{q}`")))
            }
            Term::Lam(_, b) => walk(b, depth + 1, out, bound, ambiguous_names),
            Term::App(f, a) => {
                walk(f, depth, out, bound, ambiguous_names);
                walk(a, depth, out, bound, ambiguous_names);
            }
            Term::NatRec(z, s, n) => {
                walk(z, depth, out, bound, ambiguous_names);
                walk(s, depth, out, bound, ambiguous_names);
                walk(n, depth, out, bound, ambiguous_names);
            }
            _ => {}
        }
    }
    let ambiguous_names: BTreeSet<&str> = ambiguous.into_iter().flatten().map(|(n, _)| n.as_str()).collect();
    let mut found = Vec::new();
    walk(t, 0, &mut found, bound, &ambiguous_names);
    for (kind, msg) in found {
        diags.push(Diagnostic { kind, message: format!("{ctx}: {msg}"), span: span.clone() });
    }
}
