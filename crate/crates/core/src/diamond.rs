//! Diamond detection: every pair of derivations of one goal is classified
//! by comparing the construction terms of each operation field, first by
//! normalization and then by evaluation over the bound carriers.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::config::Limits;
use crate::eval::{Counterexample, Domain, EvalContext, EvalError, Value};
use crate::kernel::defeq;
use crate::registry::Registry;
use crate::resolver::{derivation_term, explain_path, resolve_all, Derivation, Goal};

/// Ordered from best to worst, so the verdict of a pair is the maximum
/// over its fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Defeq,
    PropEqOnly,
    Inconclusive,
    Divergent,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Defeq => "defeq",
            Verdict::PropEqOnly => "prop_eq_only",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Divergent => "divergent",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FieldVerdict {
    pub field: String,
    pub verdict: Verdict,
    /// `None` when normalization ran out of fuel.
    pub defeq: Option<bool>,
    /// Assignments evaluated on the carriers, if any were checked.
    pub checked: Option<u64>,
    pub counterexample: Option<Counterexample>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairVerdict {
    pub left: usize,
    pub right: usize,
    pub verdict: Verdict,
    pub fields: Vec<FieldVerdict>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RenderedDerivation {
    pub index: usize,
    pub instances: Vec<String>,
    pub height: usize,
    pub tree: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiamondReport {
    pub goal: String,
    pub carriers: Vec<(String, String)>,
    /// The depth bound cut the search, so derivations may be missing.
    pub incomplete: bool,
    pub derivations: Vec<RenderedDerivation>,
    pub pairs: Vec<PairVerdict>,
}

impl DiamondReport {
    /// Worst verdict over all pairs.
    pub fn worst(&self) -> Option<Verdict> {
        self.pairs.iter().map(|p| p.verdict).max()
    }
}

impl fmt::Display for DiamondReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "goal: {}", self.goal)?;
        if !self.carriers.is_empty() {
            let b: Vec<String> = self.carriers.iter().map(|(a, c)| format!("{a}={c}")).collect();
            writeln!(f, "carriers: {}", b.join(" "))?;
        }
        writeln!(
            f,
            "derivations: {}{}",
            self.derivations.len(),
            if self.incomplete { " (incomplete: depth bound reached)" } else { "" }
        )?;
        for d in &self.derivations {
            writeln!(f, "#{} (height {})", d.index, d.height)?;
            for line in d.tree.lines() {
                writeln!(f, "  {line}")?;
            }
        }
        if self.pairs.is_empty() {
            return writeln!(f, "no diamond");
        }
        writeln!(f, "pairs: {}", self.pairs.len())?;
        for p in &self.pairs {
            writeln!(f, "#{} #{}: {}", p.left, p.right, p.verdict)?;
            for fv in &p.fields {
                let kernel = match fv.defeq {
                    Some(true) => "defeq",
                    Some(false) => "not defeq",
                    None => "fuel exhausted",
                };
                write!(f, "  {}: {} ({kernel}", fv.field, fv.verdict)?;
                if let Some(n) = fv.checked {
                    write!(f, ", {n} assignments checked")?;
                }
                writeln!(f, ")")?;
                if let Some(c) = &fv.counterexample {
                    writeln!(f, "    counterexample {c}")?;
                }
                if let Some(n) = &fv.note {
                    writeln!(f, "    {n}")?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiamondError {
    #[error("derivations #{left} and #{right} are definitionally equal on `{field}` but differ at {counterexample}")]
    KernelUnsound { left: usize, right: usize, field: String, counterexample: Counterexample },
    #[error(transparent)]
    Resolve(#[from] crate::resolver::ResolveError),
}

/// Compares one field of two derivations on every argument tuple.
pub fn compare_field(
    ctx: &EvalContext<'_>,
    a: &Arc<Derivation>,
    b: &Arc<Derivation>,
    field: &str,
) -> Result<(u64, Option<Counterexample>), EvalError> {
    let sig = ctx.field_domains(&a.goal, field)?;
    let doms: Vec<Domain> = sig[..sig.len() - 1].to_vec();
    let total = doms.iter().map(|d| d.size()).product::<u64>();
    let found = ctx.limits().exec.find_first(total, |mut k| {
        let mut args = vec![Value::Nat(0); doms.len()];
        for (slot, d) in args.iter_mut().zip(&doms).rev() {
            *slot = d.nth(k % d.size());
            k /= d.size();
        }
        let l = ctx.apply_field(a, field, &args);
        let r = ctx.apply_field(b, field, &args);
        match (l, r) {
            (Ok(l), Ok(r)) if l == r => None,
            (Ok(l), Ok(r)) => Some(Ok(Counterexample {
                assignment: args.iter().enumerate().map(|(i, v)| (format!("arg{i}"), v.to_string())).collect(),
                lhs: l.to_string(),
                rhs: r.to_string(),
            })),
            (Err(e), _) | (_, Err(e)) => Some(Err(e)),
        }
    });
    match found {
        None => Ok((total, None)),
        Some(Ok(c)) => Ok((total, Some(c))),
        Some(Err(e)) => Err(e),
    }
}

fn field_verdict(
    reg: &Registry,
    limits: &Limits,
    ctx: Option<&EvalContext<'_>>,
    (i, a): (usize, &Arc<Derivation>),
    (j, b): (usize, &Arc<Derivation>),
    field: &str,
) -> Result<FieldVerdict, DiamondError> {
    let ta = derivation_term(a, field, reg)?;
    let tb = derivation_term(b, field, reg)?;
    let kernel = defeq(&ta, &tb, reg, limits.fuel).ok();
    let mut out = FieldVerdict {
        field: field.to_string(),
        verdict: Verdict::Inconclusive,
        defeq: kernel,
        checked: None,
        counterexample: None,
        note: None,
    };
    let evidence = ctx.map(|ctx| compare_field(ctx, a, b, field));
    match evidence {
        Some(Ok((n, cex))) => {
            out.checked = Some(n);
            out.counterexample = cex;
        }
        Some(Err(e)) => out.note = Some(format!("not evaluated: {e}")),
        None => out.note = Some("no carriers bound".into()),
    }
    out.verdict = match (kernel, &out.counterexample, out.checked) {
        (Some(true), Some(c), _) => {
            return Err(DiamondError::KernelUnsound {
                left: i,
                right: j,
                field: field.to_string(),
                counterexample: c.clone(),
            })
        }
        (Some(true), None, _) => Verdict::Defeq,
        (_, Some(_), _) => Verdict::Divergent,
        (Some(false), None, Some(_)) => Verdict::PropEqOnly,
        _ => Verdict::Inconclusive,
    };
    Ok(out)
}

/// Resolves every derivation of `goal` and classifies each pair.
pub fn find_diamonds(
    goal: &Goal,
    reg: &Registry,
    limits: &Limits,
    ctx: Option<&EvalContext<'_>>,
) -> Result<DiamondReport, DiamondError> {
    let class = reg
        .class(&goal.target.class)
        .ok_or_else(|| crate::resolver::ResolveError::UnknownClass(goal.target.class.clone()))?;
    let resolution = resolve_all(goal, reg, limits);
    let ds = &resolution.derivations;
    let fields: Vec<String> = class.fields.iter().map(|f| f.name.clone()).collect();
    let pairs: Vec<(usize, usize)> = (0..ds.len()).flat_map(|i| (i + 1..ds.len()).map(move |j| (i, j))).collect();
    let verdicts = limits.exec.map(&pairs, |&(i, j)| -> Result<PairVerdict, DiamondError> {
        let fields: Vec<FieldVerdict> = fields
            .iter()
            .map(|f| field_verdict(reg, limits, ctx, (i, &ds[i]), (j, &ds[j]), f))
            .collect::<Result<_, _>>()?;
        let verdict = fields.iter().map(|f| f.verdict).max().unwrap_or(Verdict::Defeq);
        Ok(PairVerdict { left: i, right: j, verdict, fields })
    });
    Ok(DiamondReport {
        goal: goal.to_string(),
        carriers: ctx
            .map(|c| c.bindings().iter().map(|(a, c)| (a.clone(), c.name().to_string())).collect())
            .unwrap_or_default(),
        incomplete: resolution.depth_exceeded,
        derivations: ds
            .iter()
            .enumerate()
            .map(|(index, d)| RenderedDerivation {
                index,
                instances: d.instance_names(),
                height: d.height(),
                tree: explain_path(d),
            })
            .collect(),
        pairs: verdicts.into_iter().collect::<Result<_, _>>()?,
    })
}
