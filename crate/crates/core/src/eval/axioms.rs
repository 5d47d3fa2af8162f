use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::value::{Domain, Env, EvalContext, EvalError, Value};
use crate::kernel::{unify_constraints, Constraint, InstanceRef, Term, TypeExpr};
use crate::resolver::{project_to, resolve, Derivation, Goal, InstanceKey};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    Fails,
    /// Evaluation could not finish (for example a literal outside the
    /// scalar range). Never counts as a pass.
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Holds => "holds",
            Status::Fails => "FAILS",
            Status::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub assignment: Vec<(String, String)>,
    pub lhs: String,
    pub rhs: String,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars: Vec<String> = self.assignment.iter().map(|(n, v)| format!("{n} = {v}")).collect();
        write!(f, "{}: {} ≠ {}", vars.join(", "), self.lhs, self.rhs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    /// `class.axiom`.
    pub axiom: String,
    pub status: Status,
    /// Number of assignments in the full enumeration.
    pub assignments: u64,
    pub counterexample: Option<Counterexample>,
    pub note: Option<String>,
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<12} {} ({} assignments)", self.status.to_string(), self.axiom, self.assignments)?;
        if let Some(c) = &self.counterexample {
            write!(f, "\n             counterexample {c}")?;
        }
        if let Some(n) = &self.note {
            write!(f, "\n             {n}")?;
        }
        Ok(())
    }
}

/// Decodes `k` as a mixed-radix number, first digit most significant.
fn decode(mut k: u64, doms: &[Domain]) -> Vec<Value> {
    let mut out = vec![Value::Nat(0); doms.len()];
    for (slot, d) in out.iter_mut().zip(doms).rev() {
        let n = d.size();
        *slot = d.nth(k % n);
        k /= n;
    }
    out
}

/// Checks `lhs = rhs` for every assignment of the binders. References in
/// both sides must already be bound to derivations.
pub fn check_statement(
    ctx: &EvalContext<'_>,
    label: &str,
    binders: &[(String, TypeExpr)],
    lhs: &Term,
    rhs: &Term,
) -> Result<AxiomReport, EvalError> {
    let doms: Vec<Domain> = binders.iter().map(|(_, t)| ctx.domain(t)).collect::<Result<_, _>>()?;
    let total = doms.iter().map(|d| d.size()).product::<u64>();
    let found = ctx.limits().exec.find_first(total, |k| {
        let vals = decode(k, &doms);
        let frees: BTreeMap<String, Value> = binders.iter().map(|(n, _)| n.clone()).zip(vals.iter().cloned()).collect();
        let env = Env::with_frees(frees);
        let sides = ctx.eval(lhs, &env).and_then(|l| Ok((l, ctx.eval(rhs, &env)?)));
        match sides {
            Ok((l, r)) if !l.is_first_order() || !r.is_first_order() => {
                Some(Err(EvalError::TypeMismatch("axiom sides are not first-order values".into())))
            }
            Ok((l, r)) if l == r => None,
            Ok((l, r)) => Some(Ok(Counterexample {
                assignment: binders.iter().map(|(n, _)| n.clone()).zip(vals.iter().map(|v| v.to_string())).collect(),
                lhs: l.to_string(),
                rhs: r.to_string(),
            })),
            Err(e) => Some(Err(e)),
        }
    });
    let (status, counterexample, note) = match found {
        None => (Status::Holds, None, None),
        Some(Ok(c)) => (Status::Fails, Some(c), None),
        Some(Err(e)) => (Status::Inconclusive, None, Some(e.to_string())),
    };
    Ok(AxiomReport { axiom: label.to_string(), status, assignments: total, counterexample, note })
}

/// Checks every axiom of the goal class of `d`, including inherited ones.
/// Premises of the declaring classes are resolved under `hypotheses`.
pub fn check_axioms(
    ctx: &EvalContext<'_>,
    d: &Arc<Derivation>,
    hypotheses: &[Constraint],
) -> Result<Vec<AxiomReport>, EvalError> {
    let reg = ctx.registry();
    let info = reg
        .class(&d.goal.class)
        .ok_or_else(|| EvalError::Resolve(crate::resolver::ResolveError::UnknownClass(d.goal.class.clone())))?;
    let goal_s = info.instantiation(&d.goal.args);
    let mut reports = Vec::new();
    for flat in &info.axioms {
        let origin = reg.class(&flat.origin).expect("flattened from a known class");
        let ax = reg.axiom(flat).expect("flattened from a known axiom");
        let label = format!("{}.{}", flat.origin, ax.name);
        let args: Vec<TypeExpr> = flat.args.iter().map(|t| goal_s.apply(t)).collect();
        let s = origin.instantiation(&args);
        let this = project_to(reg, d, &Constraint::new(flat.origin.clone(), args))
            .expect("inherited axioms are reachable through extends");

        let mut used = Vec::new();
        for side in [&ax.lhs, &ax.rhs] {
            side.visit(&mut |t| {
                if let Term::Proj(InstanceRef::Premise(i), _) = t {
                    used.push(*i);
                }
            });
        }
        let mut premises: BTreeMap<usize, Arc<Derivation>> = BTreeMap::new();
        let mut unresolved = None;
        for i in used {
            let p = origin.decl.premises[i].apply(&s);
            let goal = Goal { hypotheses: hypotheses.to_vec(), target: p };
            match resolve(&goal, reg, ctx.limits()) {
                Ok(pd) => {
                    premises.insert(i, pd);
                }
                Err(e) => unresolved = Some(e),
            }
        }
        if let Some(e) = unresolved {
            reports.push(AxiomReport {
                axiom: label,
                status: Status::Inconclusive,
                assignments: 0,
                counterexample: None,
                note: Some(format!("premise unavailable: {e}")),
            });
            continue;
        }
        let wire = |t: &Term| {
            t.map_refs(&|r, field| match r {
                InstanceRef::This => Some(Term::proj(InstanceRef::Derived(this.clone()), field)),
                InstanceRef::Premise(i) => {
                    premises.get(i).map(|pd| Term::proj(InstanceRef::Derived(pd.clone()), field))
                }
                InstanceRef::Derived(_) => None,
            })
        };
        let binders: Vec<(String, TypeExpr)> = ax.binders.iter().map(|(n, t)| (n.clone(), s.apply(t))).collect();
        reports.push(check_statement(ctx, &label, &binders, &wire(&ax.lhs), &wire(&ax.rhs))?);
    }
    Ok(reports)
}

/// The two statements compared for one half of the correspondence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Correspondence {
    pub direct: AxiomReport,
    pub class_axiom: AxiomReport,
    pub agree: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OfModuleReport {
    pub goal: String,
    /// `(r • x) * y = r • (x * y)` against `is_scalar_tower.smul_assoc`.
    pub assoc: Correspondence,
    /// `x * (r • y) = r • (x * y)` against `smul_comm_class.smul_comm`.
    pub comm: Correspondence,
}

impl OfModuleReport {
    pub fn agree(&self) -> bool {
        self.assoc.agree && self.comm.agree
    }
}

impl fmt::Display for OfModuleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "goal: {}", self.goal)?;
        for (name, c) in [("assoc", &self.assoc), ("comm", &self.comm)] {
            writeln!(f, "{name}: {}", if c.agree { "verdicts agree" } else { "VERDICTS DIFFER" })?;
            writeln!(f, "  {}", c.direct)?;
            writeln!(f, "  {}", c.class_axiom)?;
        }
        Ok(())
    }
}

/// Evaluates the two algebra-from-module conditions directly and through
/// the tower and commutation class axioms, with the ring acting on itself
/// by `has_mul.to_has_scalar`.
pub fn check_of_module_correspondence(
    ctx: &EvalContext<'_>,
    module: &Arc<Derivation>,
    hypotheses: &[Constraint],
) -> Result<OfModuleReport, EvalError> {
    let reg = ctx.registry();
    let unavailable = |what: &str| EvalError::Unresolved(what.to_string());
    let [r, a] = module.goal.args.as_slice() else {
        return Err(EvalError::TypeMismatch(format!("`{}` is not a module goal", module.goal)));
    };
    let smul = project_to(reg, module, &Constraint::new("has_scalar", vec![r.clone(), a.clone()]))
        .ok_or_else(|| unavailable("has_scalar"))?;
    let mul = resolve(
        &Goal { hypotheses: hypotheses.to_vec(), target: Constraint::new("has_mul", vec![a.clone()]) },
        reg,
        ctx.limits(),
    )?;
    let self_goal = Constraint::new("has_scalar", vec![a.clone(), a.clone()]);
    let inst = reg.instance("has_mul.to_has_scalar").ok_or_else(|| unavailable("has_mul.to_has_scalar"))?;
    let subst = unify_constraints(&inst.decl.head, &self_goal)
        .map_err(|e| EvalError::TypeMismatch(e.to_string()))?
        .restrict(&inst.decl.type_vars);
    let self_smul = Arc::new(Derivation {
        instance: InstanceKey::Instance(inst.decl.name.clone()),
        goal: self_goal,
        subst,
        children: vec![mul.clone()],
    });

    let op = |d: &Arc<Derivation>, field: &str, args: Vec<Term>| {
        Term::apps(Term::proj(InstanceRef::Derived(d.clone()), field), args)
    };
    let v = Term::free;
    let binders = vec![("r".to_string(), r.clone()), ("x".to_string(), a.clone()), ("y".to_string(), a.clone())];

    let h1 = check_statement(
        ctx,
        "h1",
        &binders,
        &op(&mul, "mul", vec![op(&smul, "smul", vec![v("r"), v("x")]), v("y")]),
        &op(&smul, "smul", vec![v("r"), op(&mul, "mul", vec![v("x"), v("y")])]),
    )?;
    let h2 = check_statement(
        ctx,
        "h2",
        &binders,
        &op(&mul, "mul", vec![v("x"), op(&smul, "smul", vec![v("r"), v("y")])]),
        &op(&smul, "smul", vec![v("r"), op(&mul, "mul", vec![v("x"), v("y")])]),
    )?;

    // Premises whose first argument is the first class parameter carry the
    // module action; the rest carry the self action.
    let class_axiom = |class: &str, axiom: &str| -> Result<AxiomReport, EvalError> {
        let info = reg.class(class).ok_or_else(|| unavailable(class))?;
        let ax = info.decl.axioms.iter().find(|x| x.name == axiom).ok_or_else(|| unavailable(axiom))?;
        let s = info.instantiation(&[r.clone(), a.clone(), a.clone()]);
        let first = TypeExpr::var(info.decl.params[0].clone());
        let wire = |t: &Term| {
            t.map_refs(&|rf, field| match rf {
                InstanceRef::Premise(i) => {
                    let d = if info.decl.premises[*i].args.first() == Some(&first) { &smul } else { &self_smul };
                    Some(Term::proj(InstanceRef::Derived(d.clone()), field))
                }
                _ => None,
            })
        };
        let binders: Vec<(String, TypeExpr)> = ax.binders.iter().map(|(n, t)| (n.clone(), s.apply(t))).collect();
        check_statement(ctx, &format!("{class}.{axiom}"), &binders, &wire(&ax.lhs), &wire(&ax.rhs))
    };
    let assoc_ax = class_axiom("is_scalar_tower", "smul_assoc")?;
    let comm_ax = class_axiom("smul_comm_class", "smul_comm")?;
    Ok(OfModuleReport {
        goal: module.goal.to_string(),
        assoc: Correspondence { agree: h1.status == assoc_ax.status, direct: h1, class_axiom: assoc_ax },
        comm: Correspondence { agree: h2.status == comm_ax.status, direct: h2, class_axiom: comm_ax },
    })
}
