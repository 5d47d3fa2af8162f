//! Backward-chaining instance search.
//!
//! A goal is resolved by unifying it against each candidate head (local
//! hypotheses first, then instances in priority order) and recursively
//! resolving the instantiated premises. A subgoal equal to one of its
//! ancestors is pruned, which makes every query terminate without hiding
//! alternative derivations the way a global cache would.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::config::Limits;
use crate::exec::Exec;
use crate::kernel::{unify_constraints, Constraint, InstanceRef, Substitution, Term};
use crate::registry::Registry;

/// A query: a target constraint plus local hypotheses over opaque atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Goal {
    pub hypotheses: Vec<Constraint>,
    pub target: Constraint,
}

impl Goal {
    pub fn new(target: Constraint) -> Self {
        Goal { hypotheses: Vec::new(), target }
    }

    /// Same hypotheses, different target.
    pub fn retarget(&self, target: Constraint) -> Goal {
        Goal { hypotheses: self.hypotheses.clone(), target }
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for h in &self.hypotheses {
            write!(f, "[{h}] ")?;
        }
        write!(f, "{}", self.target)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKey {
    Instance(String),
    Hypothesis(usize),
}

/// A closed tree of instance applications.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Derivation {
    pub instance: InstanceKey,
    pub goal: Constraint,
    /// Unifier of the instance head with `goal`, restricted to the
    /// instance's type variables.
    pub subst: Substitution,
    pub children: Vec<Arc<Derivation>>,
}

impl Derivation {
    pub fn label(&self) -> String {
        match &self.instance {
            InstanceKey::Instance(n) => n.clone(),
            InstanceKey::Hypothesis(i) => format!("hypothesis #{i}"),
        }
    }

    /// Height of the tree, counting the root.
    pub fn height(&self) -> usize {
        1 + self.children.iter().map(|c| c.height()).max().unwrap_or(0)
    }

    /// Instance names along the leftmost spine of non-hypothesis nodes,
    /// in pre-order.
    pub fn instance_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |d| {
            if let InstanceKey::Instance(n) = &d.instance {
                out.push(n.clone());
            }
        });
        out
    }

    pub fn walk(&self, f: &mut impl FnMut(&Derivation)) {
        f(self);
        self.children.iter().for_each(|c| c.walk(f));
    }

    /// Replays the derivation: every node's instance head, instantiated by
    /// its substitution, is exactly its goal, and its children prove the
    /// instantiated premises in order.
    pub fn replays(&self, reg: &Registry, hypotheses: &[Constraint]) -> bool {
        match &self.instance {
            InstanceKey::Hypothesis(i) => self.children.is_empty() && hypotheses.get(*i) == Some(&self.goal),
            InstanceKey::Instance(name) => {
                let Some(inst) = reg.instance(name) else { return false };
                let d = &inst.decl;
                d.head.apply(&self.subst) == self.goal
                    && self.goal.is_ground()
                    && d.premises.len() == self.children.len()
                    && d.premises
                        .iter()
                        .zip(&self.children)
                        .all(|(p, c)| p.apply(&self.subst) == c.goal && c.replays(reg, hypotheses))
            }
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Resolution {
    pub derivations: Vec<Arc<Derivation>>,
    /// Set when the depth bound cut off at least one subgoal, so the list
    /// may be incomplete.
    pub depth_exceeded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("no instance found for `{0}`")]
    NoInstance(Constraint),
    #[error("no instance found for `{goal}` within depth {depth}")]
    DepthExceeded { goal: Constraint, depth: usize },
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("`{field}` is not an operation of `{class}`")]
    NotAField { class: String, field: String },
}

enum Candidate<'r> {
    Hypothesis(usize),
    Instance(&'r str, &'r crate::registry::InstanceDecl),
}

pub struct Resolver<'r> {
    reg: &'r Registry,
    hypotheses: &'r [Constraint],
    depth: usize,
    exec: Exec,
}

impl<'r> Resolver<'r> {
    pub fn new(reg: &'r Registry, hypotheses: &'r [Constraint], limits: &Limits) -> Self {
        Resolver { reg, hypotheses, depth: limits.depth, exec: limits.exec }
    }

    fn candidates(&self, target: &Constraint) -> Vec<(Candidate<'r>, Substitution)> {
        let mut out = Vec::new();
        for (i, h) in self.hypotheses.iter().enumerate() {
            if h == target {
                out.push((Candidate::Hypothesis(i), Substitution::new()));
            }
        }
        for inst in self.reg.instances() {
            if inst.decl.head.class != target.class {
                continue;
            }
            if let Ok(s) = unify_constraints(&inst.decl.head, target) {
                let s = s.restrict(&inst.decl.type_vars);
                out.push((Candidate::Instance(&inst.decl.name, &inst.decl), s));
            }
        }
        out
    }

    fn node(
        cand: &Candidate<'_>,
        target: &Constraint,
        subst: Substitution,
        children: Vec<Arc<Derivation>>,
    ) -> Arc<Derivation> {
        let instance = match cand {
            Candidate::Hypothesis(i) => InstanceKey::Hypothesis(*i),
            Candidate::Instance(n, _) => InstanceKey::Instance(n.to_string()),
        };
        Arc::new(Derivation { instance, goal: target.clone(), subst, children })
    }

    fn premises(cand: &Candidate<'_>, subst: &Substitution) -> Vec<Constraint> {
        match cand {
            Candidate::Hypothesis(_) => Vec::new(),
            Candidate::Instance(_, d) => d.premises.iter().map(|p| p.apply(subst)).collect(),
        }
    }

    /// All derivations, in candidate order, then by the children's order
    /// with the first premise varying slowest.
    pub fn all(&self, target: &Constraint) -> Resolution {
        let (derivations, depth_exceeded) = self.search_all(target, 1, &[]);
        Resolution { derivations, depth_exceeded }
    }

    fn search_all(&self, target: &Constraint, level: usize, path: &[Constraint]) -> (Vec<Arc<Derivation>>, bool) {
        if level > self.depth {
            return (Vec::new(), true);
        }
        if path.contains(target) {
            return (Vec::new(), false);
        }
        let mut path = path.to_vec();
        path.push(target.clone());
        let cands = self.candidates(target);
        let explore = |(cand, subst): &(Candidate<'r>, Substitution)| {
            let mut exceeded = false;
            let mut combos: Vec<Vec<Arc<Derivation>>> = vec![Vec::new()];
            for p in Self::premises(cand, subst) {
                if combos.is_empty() {
                    break;
                }
                let (alts, ex) = self.search_all(&p, level + 1, &path);
                exceeded |= ex;
                combos = combos
                    .into_iter()
                    .flat_map(|c| {
                        alts.iter().map(move |a| {
                            let mut c = c.clone();
                            c.push(a.clone());
                            c
                        })
                    })
                    .collect();
            }
            let nodes: Vec<Arc<Derivation>> =
                combos.into_iter().map(|children| Self::node(cand, target, subst.clone(), children)).collect();
            (nodes, exceeded)
        };
        let exec = if level <= 2 { self.exec } else { Exec::Sequential };
        let parts = exec.map(&cands, explore);
        let mut out = Vec::new();
        let mut exceeded = false;
        for (nodes, ex) in parts {
            out.extend(nodes);
            exceeded |= ex;
        }
        (out, exceeded)
    }

    /// The first derivation in [`Resolver::all`] order, found without
    /// enumerating the rest.
    pub fn first(&self, target: &Constraint) -> Result<Arc<Derivation>, ResolveError> {
        if self.reg.class(&target.class).is_none() {
            return Err(ResolveError::UnknownClass(target.class.clone()));
        }
        match self.search_first(target, 1, &[]) {
            (Some(d), _) => Ok(d),
            (None, true) => Err(ResolveError::DepthExceeded { goal: target.clone(), depth: self.depth }),
            (None, false) => Err(ResolveError::NoInstance(target.clone())),
        }
    }

    fn search_first(&self, target: &Constraint, level: usize, path: &[Constraint]) -> (Option<Arc<Derivation>>, bool) {
        if level > self.depth {
            return (None, true);
        }
        if path.contains(target) {
            return (None, false);
        }
        let mut path = path.to_vec();
        path.push(target.clone());
        let mut exceeded = false;
        'cands: for (cand, subst) in self.candidates(target) {
            let mut children = Vec::new();
            for p in Self::premises(&cand, &subst) {
                let (found, ex) = self.search_first(&p, level + 1, &path);
                exceeded |= ex;
                match found {
                    Some(d) => children.push(d),
                    None => continue 'cands,
                }
            }
            return (Some(Self::node(&cand, target, subst, children)), exceeded);
        }
        (None, exceeded)
    }
}

/// First derivation of the goal under priority-ordered depth-first search.
pub fn resolve(goal: &Goal, reg: &Registry, limits: &Limits) -> Result<Arc<Derivation>, ResolveError> {
    Resolver::new(reg, &goal.hypotheses, limits).first(&goal.target)
}

/// Every closed derivation within the depth bound.
pub fn resolve_all(goal: &Goal, reg: &Registry, limits: &Limits) -> Resolution {
    Resolver::new(reg, &goal.hypotheses, limits).all(&goal.target)
}

/// Delta step: the body of `field` in the instance at the root of `d`, with
/// premise references wired to the child derivations. `None` for
/// hypotheses, whose operations are opaque.
pub fn unfold_projection(reg: &Registry, d: &Arc<Derivation>, field: &str) -> Option<Term> {
    let InstanceKey::Instance(name) = &d.instance else { return None };
    let body = reg.instance(name)?.decl.def(field)?;
    Some(body.map_refs(&|r, g| match r {
        InstanceRef::Premise(i) => d.children.get(*i).map(|c| Term::proj(InstanceRef::Derived(c.clone()), g)),
        _ => None,
    }))
}

/// The construction term for one operation of the derived structure.
pub fn derivation_term(d: &Arc<Derivation>, field: &str, reg: &Registry) -> Result<Term, ResolveError> {
    let class = reg.class(&d.goal.class).ok_or_else(|| ResolveError::UnknownClass(d.goal.class.clone()))?;
    if class.field(field).is_none() {
        return Err(ResolveError::NotAField { class: d.goal.class.clone(), field: field.to_string() });
    }
    Ok(unfold_projection(reg, d, field).unwrap_or_else(|| Term::proj(InstanceRef::Derived(d.clone()), field)))
}

/// Follows `extends` projections from `d` until reaching `target`.
pub fn project_to(reg: &Registry, d: &Arc<Derivation>, target: &Constraint) -> Option<Arc<Derivation>> {
    if &d.goal == target {
        return Some(d.clone());
    }
    let info = reg.class(&d.goal.class)?;
    let s = info.instantiation(&d.goal.args);
    for parent in &info.decl.extends {
        let node = Arc::new(Derivation {
            instance: InstanceKey::Instance(format!("{}.to_{}", info.decl.name, parent.class)),
            goal: parent.apply(&s),
            subst: s.clone(),
            children: vec![d.clone()],
        });
        if let Some(found) = project_to(reg, &node, target) {
            return Some(found);
        }
    }
    None
}

/// Treats an instance's type variables as opaque atoms and its premises
/// as hypotheses, giving a goal whose derivation uses exactly that instance.
pub fn instance_as_goal(reg: &Registry, name: &str) -> Option<(Goal, Arc<Derivation>)> {
    let decl = &reg.instance(name)?.decl;
    let subst =
        Substitution::from_pairs(decl.type_vars.iter().map(|v| (v.clone(), crate::kernel::TypeExpr::atom(v.clone()))));
    let hypotheses: Vec<Constraint> = decl.premises.iter().map(|p| p.apply(&subst)).collect();
    let children = hypotheses
        .iter()
        .enumerate()
        .map(|(i, h)| {
            Arc::new(Derivation {
                instance: InstanceKey::Hypothesis(i),
                goal: h.clone(),
                subst: Substitution::new(),
                children: Vec::new(),
            })
        })
        .collect();
    let target = decl.head.apply(&subst);
    let d = Arc::new(Derivation {
        instance: InstanceKey::Instance(name.to_string()),
        goal: target.clone(),
        subst,
        children,
    });
    Some((Goal { hypotheses, target }, d))
}

/// Indented tree, one node per line: `instance : goal`.
pub fn explain_path(d: &Derivation) -> String {
    fn go(d: &Derivation, indent: usize, out: &mut String) {
        let label = match &d.instance {
            InstanceKey::Instance(n) => n.clone(),
            InstanceKey::Hypothesis(_) => "(hypothesis)".to_string(),
        };
        out.push_str(&format!("{}{} : {}\n", "  ".repeat(indent), label, d.goal));
        for c in &d.children {
            go(c, indent + 1, out);
        }
    }
    let mut out = String::new();
    go(d, 0, &mut out);
    out
}
