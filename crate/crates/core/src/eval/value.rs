use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use thiserror::Error;

use super::carrier::{
    build_add_hom_carrier, build_function_carrier, build_opposite_carrier, CarrierError, FiniteCarrier, Structure,
};
use crate::config::Limits;
use crate::kernel::{Constraint, InstanceRef, Prim, Term, TypeExpr};
use crate::registry::Registry;
use crate::resolver::{unfold_projection, Derivation, InstanceKey, ResolveError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("no carrier bound for `{0}`")]
    UnboundType(String),
    #[error("type `{0}` has no finite model")]
    Unsupported(String),
    #[error("ℕ literal {value} is outside the checked range 0..={max}")]
    ScalarOutOfRange { value: u64, max: u64 },
    #[error("carrier `{carrier}` has no `{op}` table")]
    MissingTable { carrier: String, op: String },
    #[error(transparent)]
    Carrier(#[from] CarrierError),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("result is not an element of `{0}`")]
    NotInCarrier(String),
    #[error("value is not a function")]
    NotAFunction,
    #[error("operation `{0}` is not bound to an instance")]
    Unresolved(String),
    #[error("arithmetic overflow")]
    Overflow,
    #[error(transparent)]
    Resolve(#[from] ResolveError),
}

type Result<T> = std::result::Result<T, EvalError>;

/// The set a type denotes. ℕ and ℤ are truncated to the checked scalar
/// range when enumerated.
#[derive(Clone, Debug)]
pub enum Domain {
    Nat { max: u64 },
    Int { bound: u64 },
    Finite(Arc<FiniteCarrier>),
}

impl Domain {
    pub fn size(&self) -> u64 {
        match self {
            Domain::Nat { max } => max + 1,
            Domain::Int { bound } => 2 * bound + 1,
            Domain::Finite(c) => c.len() as u64,
        }
    }

    /// The `k`-th value in enumeration order.
    pub fn nth(&self, k: u64) -> Value {
        match self {
            Domain::Nat { .. } => Value::Nat(k),
            Domain::Int { bound } => Value::Int(k as i64 - *bound as i64),
            Domain::Finite(c) => Value::Elem(c.clone(), k as usize),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Domain::Nat { max } => format!("Nat[0..={max}]"),
            Domain::Int { bound } => format!("Int[-{bound}..={bound}]"),
            Domain::Finite(c) => c.to_string(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Env {
    locals: Vec<Value>,
    frees: Arc<BTreeMap<String, Value>>,
}

impl Env {
    pub fn with_frees(frees: BTreeMap<String, Value>) -> Self {
        Env { locals: Vec::new(), frees: Arc::new(frees) }
    }
}

#[derive(Debug)]
pub struct Closure {
    body: Term,
    env: Env,
}

/// An operation waiting for arguments.
#[derive(Debug)]
pub enum Head {
    /// An instance-defined operation: arguments and result are coerced into
    /// the domains of its signature.
    Field {
        inner: Value,
        sig: Vec<Domain>,
    },
    /// A table or built-in operation on the result domain.
    Builtin {
        op: String,
        result: Domain,
        arity: usize,
    },
    Prim(Prim),
}

impl Head {
    fn arity(&self) -> usize {
        match self {
            Head::Field { sig, .. } => sig.len() - 1,
            Head::Builtin { arity, .. } => *arity,
            Head::Prim(p) => p.arity(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Value {
    Nat(u64),
    Int(i64),
    Elem(Arc<FiniteCarrier>, usize),
    Closure(Arc<Closure>),
    Partial(Arc<Head>, Vec<Value>),
}

impl Value {
    pub fn is_first_order(&self) -> bool {
        matches!(self, Value::Nat(_) | Value::Int(_) | Value::Elem(..))
    }

    pub fn elem_index(&self) -> Option<usize> {
        match self {
            Value::Elem(_, i) => Some(*i),
            _ => None,
        }
    }
}

/// Elements compare by carrier name and index; functions never compare equal.
impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Nat(a), Value::Nat(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Elem(c, i), Value::Elem(d, j)) => i == j && c.name() == d.name(),
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Nat(n) => write!(f, "{n}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Elem(c, i) => f.write_str(&c.elements()[*i]),
            Value::Closure(_) | Value::Partial(..) => f.write_str("<function>"),
        }
    }
}

/// Carrier bindings for type atoms plus caches of derived carriers.
pub struct EvalContext<'r> {
    reg: &'r Registry,
    bindings: BTreeMap<String, Arc<FiniteCarrier>>,
    limits: Limits,
    domains: RwLock<HashMap<TypeExpr, Domain>>,
    opposites: RwLock<HashMap<String, Arc<FiniteCarrier>>>,
}

impl<'r> EvalContext<'r> {
    pub fn new(reg: &'r Registry, limits: Limits) -> Self {
        EvalContext {
            reg,
            bindings: BTreeMap::new(),
            limits,
            domains: RwLock::new(HashMap::new()),
            opposites: RwLock::new(HashMap::new()),
        }
    }

    pub fn bind(mut self, atom: impl Into<String>, carrier: Arc<FiniteCarrier>) -> Self {
        self.bindings.insert(atom.into(), carrier);
        self.domains.get_mut().expect("not poisoned").clear();
        self
    }

    pub fn registry(&self) -> &'r Registry {
        self.reg
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    pub fn bindings(&self) -> &BTreeMap<String, Arc<FiniteCarrier>> {
        &self.bindings
    }

    pub fn domain(&self, t: &TypeExpr) -> Result<Domain> {
        if let Some(d) = self.domains.read().expect("not poisoned").get(t) {
            return Ok(d.clone());
        }
        let d = self.build_domain(t)?;
        Ok(self.domains.write().expect("not poisoned").entry(t.clone()).or_insert(d).clone())
    }

    fn finite(&self, t: &TypeExpr) -> Result<Arc<FiniteCarrier>> {
        match self.domain(t)? {
            Domain::Finite(c) => Ok(c),
            _ => Err(EvalError::Unsupported(t.to_string())),
        }
    }

    fn build_domain(&self, t: &TypeExpr) -> Result<Domain> {
        let cap = self.limits.element_cap;
        match t {
            TypeExpr::Var(v) => Err(EvalError::UnboundType(v.clone())),
            TypeExpr::App(c, args) if args.is_empty() => match c.as_str() {
                "Nat" => Ok(Domain::Nat { max: self.limits.scalar_range }),
                "Int" => Ok(Domain::Int { bound: self.limits.scalar_range }),
                _ => self.bindings.get(c).cloned().map(Domain::Finite).ok_or_else(|| EvalError::UnboundType(c.clone())),
            },
            TypeExpr::App(c, args) => match (c.as_str(), args.as_slice()) {
                ("fn", [i, x]) => {
                    let c = build_function_carrier(&self.finite(i)?, &self.finite(x)?, cap)?;
                    Ok(Domain::Finite(Arc::new(c)))
                }
                ("add_hom", [a, b]) => {
                    let c = build_add_hom_carrier(&self.finite(a)?, &self.finite(b)?, cap)?;
                    Ok(Domain::Finite(Arc::new(c)))
                }
                ("opposite", [x]) => Ok(Domain::Finite(self.opposite(&self.finite(x)?)?)),
                _ => Err(EvalError::Unsupported(t.to_string())),
            },
        }
    }

    fn opposite(&self, c: &Arc<FiniteCarrier>) -> Result<Arc<FiniteCarrier>> {
        if let Some(o) = self.opposites.read().expect("not poisoned").get(c.name()) {
            return Ok(o.clone());
        }
        let o = Arc::new(build_opposite_carrier(c)?);
        Ok(self.opposites.write().expect("not poisoned").entry(c.name().to_string()).or_insert(o).clone())
    }

    /// Domains of a field's parameters followed by its result.
    pub fn field_domains(&self, goal: &Constraint, field: &str) -> Result<Vec<Domain>> {
        let sig = self
            .reg
            .field_signature(goal, field)
            .ok_or_else(|| ResolveError::NotAField { class: goal.class.clone(), field: field.to_string() })?;
        sig.iter().map(|t| self.domain(t)).collect()
    }

    /// Denotation of `Proj(d, field)`.
    pub fn field_value(&self, d: &Arc<Derivation>, field: &str) -> Result<Value> {
        let sig = self.field_domains(&d.goal, field)?;
        let arity = sig.len() - 1;
        match &d.instance {
            InstanceKey::Instance(_) => {
                let body =
                    unfold_projection(self.reg, d, field).ok_or_else(|| EvalError::Unresolved(field.to_string()))?;
                let inner = self.eval(&body, &Env::default())?;
                if arity == 0 {
                    self.reify(inner, &sig[0])
                } else {
                    Ok(Value::Partial(Arc::new(Head::Field { inner, sig }), Vec::new()))
                }
            }
            InstanceKey::Hypothesis(_) => {
                let result = sig.last().expect("signature has a result").clone();
                let head = Head::Builtin { op: field.to_string(), result, arity };
                if arity == 0 {
                    self.fire(&head, &[])
                } else {
                    Ok(Value::Partial(Arc::new(head), Vec::new()))
                }
            }
        }
    }

    /// Applies `field` of `d` to first-order arguments.
    pub fn apply_field(&self, d: &Arc<Derivation>, field: &str, args: &[Value]) -> Result<Value> {
        let f = self.field_value(d, field)?;
        self.apply_all(f, args)
    }

    pub fn eval(&self, t: &Term, env: &Env) -> Result<Value> {
        match t {
            Term::Var(i) => env
                .locals
                .len()
                .checked_sub(i + 1)
                .map(|k| env.locals[k].clone())
                .ok_or_else(|| EvalError::UnboundVariable(format!("#{i}"))),
            Term::Free(n) => env.frees.get(n).cloned().ok_or_else(|| EvalError::UnboundVariable(n.clone())),
            Term::Lam(_, body) => Ok(Value::Closure(Arc::new(Closure { body: (**body).clone(), env: env.clone() }))),
            Term::App(f, a) => {
                let f = self.eval(f, env)?;
                let a = self.eval(a, env)?;
                self.apply(f, a)
            }
            Term::Proj(InstanceRef::Derived(d), field) => self.field_value(d, field),
            Term::Proj(_, field) | Term::Field { name: field, .. } => Err(EvalError::Unresolved(field.clone())),
            Term::NatLit(n) => {
                if *n > self.limits.scalar_range {
                    return Err(EvalError::ScalarOutOfRange { value: *n, max: self.limits.scalar_range });
                }
                Ok(Value::Nat(*n))
            }
            Term::NatRec(z, s, n) => {
                let Value::Nat(k) = self.eval(n, env)? else {
                    return Err(EvalError::TypeMismatch("natrec on a non-ℕ value".into()));
                };
                let mut acc = self.eval(z, env)?;
                let step = self.eval(s, env)?;
                for i in 0..k {
                    acc = self.apply_all(step.clone(), &[Value::Nat(i), acc])?;
                }
                Ok(acc)
            }
            Term::Prim(p) => Ok(Value::Partial(Arc::new(Head::Prim(*p)), Vec::new())),
        }
    }

    pub fn apply_all(&self, f: Value, args: &[Value]) -> Result<Value> {
        args.iter().try_fold(f, |f, a| self.apply(f, a.clone()))
    }

    pub fn apply(&self, f: Value, a: Value) -> Result<Value> {
        match f {
            Value::Closure(c) => {
                let mut env = c.env.clone();
                env.locals.push(a);
                self.eval(&c.body, &env)
            }
            Value::Elem(c, e) => {
                let (dom, graphs) = match c.structure() {
                    Structure::Function { index, graphs, .. } => (index, graphs),
                    Structure::AddHom { dom, graphs, .. } => (dom, graphs),
                    _ => return Err(EvalError::NotAFunction),
                };
                let result = match c.structure() {
                    Structure::Function { base, .. } => base,
                    Structure::AddHom { cod, .. } => cod,
                    _ => unreachable!(),
                };
                match a {
                    Value::Elem(ac, j) if ac.name() == dom.name() => Ok(Value::Elem(result.clone(), graphs[e][j])),
                    other => Err(EvalError::TypeMismatch(format!("`{other}` applied as an argument of {}", c.name()))),
                }
            }
            Value::Partial(head, mut args) => {
                args.push(a);
                if args.len() == head.arity() {
                    self.fire(&head, &args)
                } else {
                    Ok(Value::Partial(head, args))
                }
            }
            Value::Nat(_) | Value::Int(_) => Err(EvalError::NotAFunction),
        }
    }

    fn fire(&self, head: &Head, args: &[Value]) -> Result<Value> {
        match head {
            Head::Field { inner, sig } => {
                let mut v = inner.clone();
                for (a, d) in args.iter().zip(sig) {
                    let a = self.reify(a.clone(), d)?;
                    v = self.apply(v, a)?;
                }
                self.reify(v, sig.last().expect("signature has a result"))
            }
            Head::Builtin { op, result, .. } => self.builtin(op, result, args),
            Head::Prim(p) => self.prim(*p, args),
        }
    }

    /// Coerces a value into `dom`, tabulating functions into elements of
    /// function and additive-map carriers.
    pub fn reify(&self, v: Value, dom: &Domain) -> Result<Value> {
        match (dom, v) {
            (Domain::Nat { .. }, v @ Value::Nat(_)) | (Domain::Int { .. }, v @ Value::Int(_)) => Ok(v),
            (Domain::Finite(c), Value::Elem(e, i)) => {
                if e.name() == c.name() {
                    Ok(Value::Elem(e, i))
                } else {
                    Err(EvalError::TypeMismatch(format!("element of {} where {} expected", e.name(), c.name())))
                }
            }
            (Domain::Finite(c), v @ (Value::Closure(_) | Value::Partial(..))) => {
                let (points, target) = match c.structure() {
                    Structure::Function { index, base, .. } => (index, base),
                    Structure::AddHom { dom, cod, .. } => (dom, cod),
                    _ => return Err(EvalError::TypeMismatch(format!("function where {} expected", c.name()))),
                };
                let target = Domain::Finite(target.clone());
                let mut graph = Vec::with_capacity(points.len());
                for j in 0..points.len() {
                    let r = self.apply(v.clone(), Value::Elem(points.clone(), j))?;
                    let r = self.reify(r, &target)?;
                    graph.push(r.elem_index().expect("reified to an element"));
                }
                match c.graph_index(&graph) {
                    Some(k) => Ok(Value::Elem(c.clone(), k)),
                    None => Err(EvalError::NotInCarrier(c.name().to_string())),
                }
            }
            (dom, v) => Err(EvalError::TypeMismatch(format!("`{v}` is not in {}", dom.describe()))),
        }
    }

    fn builtin(&self, op: &str, result: &Domain, args: &[Value]) -> Result<Value> {
        let nat = |v: &Value| match v {
            Value::Nat(n) => Ok(*n),
            other => Err(EvalError::TypeMismatch(format!("expected ℕ, found `{other}`"))),
        };
        let int = |v: &Value| match v {
            Value::Int(n) => Ok(*n),
            other => Err(EvalError::TypeMismatch(format!("expected ℤ, found `{other}`"))),
        };
        let missing = |carrier: &str| EvalError::MissingTable { carrier: carrier.to_string(), op: op.to_string() };
        match result {
            Domain::Nat { .. } => Ok(Value::Nat(match (op, args) {
                ("zero", []) => 0,
                ("one", []) => 1,
                ("add", [a, b]) => nat(a)?.checked_add(nat(b)?).ok_or(EvalError::Overflow)?,
                ("mul", [a, b]) => nat(a)?.checked_mul(nat(b)?).ok_or(EvalError::Overflow)?,
                _ => return Err(missing("Nat")),
            })),
            Domain::Int { .. } => Ok(Value::Int(match (op, args) {
                ("zero", []) => 0,
                ("one", []) => 1,
                ("neg", [a]) => int(a)?.checked_neg().ok_or(EvalError::Overflow)?,
                ("add", [a, b]) => int(a)?.checked_add(int(b)?).ok_or(EvalError::Overflow)?,
                ("mul", [a, b]) => int(a)?.checked_mul(int(b)?).ok_or(EvalError::Overflow)?,
                _ => return Err(missing("Int")),
            })),
            Domain::Finite(c) => {
                if let Some(t) = c.table(op).filter(|t| t.arity() == args.len()) {
                    let mut ix = Vec::with_capacity(args.len());
                    for a in args {
                        match a {
                            Value::Elem(ac, i) if ac.name() == c.name() => ix.push(*i),
                            other => {
                                return Err(EvalError::TypeMismatch(format!(
                                    "`{other}` passed to table `{op}` of {}",
                                    c.name()
                                )))
                            }
                        }
                    }
                    return Ok(Value::Elem(c.clone(), t.apply(&ix)));
                }
                let elem = |v: &Value| match v {
                    Value::Elem(ac, i) if ac.name() == c.name() => Ok(*i),
                    other => Err(EvalError::TypeMismatch(format!("`{other}` is not in {}", c.name()))),
                };
                let table = |name: &str, arity: usize| {
                    c.table(name).filter(|t| t.arity() == arity).ok_or_else(|| missing(c.name()))
                };
                let nsmul = |n: u64, x: usize| -> Result<usize> {
                    let add = table("add", 2)?;
                    let zero = table("zero", 0)?.apply(&[]);
                    Ok((0..n).fold(zero, |acc, _| add.apply(&[acc, x])))
                };
                match (op, args) {
                    ("nsmul", [n, x]) => Ok(Value::Elem(c.clone(), nsmul(nat(n)?, elem(x)?)?)),
                    ("zsmul", [z, x]) => {
                        let z = int(z)?;
                        let r = nsmul(z.unsigned_abs(), elem(x)?)?;
                        let r = if z < 0 { table("neg", 1)?.apply(&[r]) } else { r };
                        Ok(Value::Elem(c.clone(), r))
                    }
                    _ => Err(missing(c.name())),
                }
            }
        }
    }

    fn prim(&self, p: Prim, args: &[Value]) -> Result<Value> {
        let mismatch = || EvalError::TypeMismatch(format!("bad arguments to `{}`", p.name()));
        match (p, args) {
            (Prim::Succ, [Value::Nat(n)]) => n.checked_add(1).map(Value::Nat).ok_or(EvalError::Overflow),
            (Prim::IntOfNat, [Value::Nat(n)]) => i64::try_from(*n).map(Value::Int).map_err(|_| EvalError::Overflow),
            (Prim::IntNeg, [Value::Int(a)]) => a.checked_neg().map(Value::Int).ok_or(EvalError::Overflow),
            (Prim::IntAdd, [Value::Int(a), Value::Int(b)]) => {
                a.checked_add(*b).map(Value::Int).ok_or(EvalError::Overflow)
            }
            (Prim::IntMul, [Value::Int(a), Value::Int(b)]) => {
                a.checked_mul(*b).map(Value::Int).ok_or(EvalError::Overflow)
            }
            (Prim::MkOp, [Value::Elem(c, i)]) => Ok(Value::Elem(self.opposite(c)?, *i)),
            (Prim::Unop, [Value::Elem(c, i)]) => match c.structure() {
                Structure::Opposite { base } => Ok(Value::Elem(base.clone(), *i)),
                _ => Err(mismatch()),
            },
            _ => Err(mismatch()),
        }
    }
}
