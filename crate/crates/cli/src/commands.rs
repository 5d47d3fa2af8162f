use std::fmt::Write;
use std::sync::Arc;

use serde::Serialize;
use tc_core::diamond::{find_diamonds, DiamondError, RenderedDerivation};
use tc_core::eval::{self, check_of_module_correspondence, AxiomReport, EvalContext};
use tc_core::kernel::{defeq as kernel_defeq, KernelError};
use tc_core::resolver::{
    derivation_term, explain_path, instance_as_goal, resolve as resolve_first, resolve_all, Derivation, Goal,
    ResolveError,
};

use crate::load::{self, CliError};
use crate::Config;

/// What a command prints and whether it counts as success (exit 0) or a
/// negative answer (exit 1). Errors exit 2.
pub struct Outcome {
    pub output: String,
    pub success: bool,
}

fn emit<T: Serialize>(
    config: &Config,
    value: &T,
    text: impl FnOnce() -> String,
    success: bool,
) -> Result<Outcome, CliError> {
    let output = if config.json {
        let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
        s.push('\n');
        s
    } else {
        text()
    };
    Ok(Outcome { output, success })
}

fn render(index: usize, d: &Derivation) -> RenderedDerivation {
    RenderedDerivation { index, instances: d.instance_names(), height: d.height(), tree: explain_path(d) }
}

impl From<DiamondError> for CliError {
    fn from(e: DiamondError) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Serialize)]
struct ResolveReport {
    goal: String,
    resolved: bool,
    incomplete: bool,
    derivations: Vec<RenderedDerivation>,
    error: Option<String>,
}

pub fn resolve(config: &Config, goal: &str, all: bool) -> Result<Outcome, CliError> {
    let reg = load::registry(config)?;
    load::context(config, &reg)?;
    let goal = load::goal(goal)?;
    let limits = load::limits(config);
    let (derivations, incomplete, error) = if all {
        let r = resolve_all(&goal, &reg, &limits);
        let error = match (r.derivations.is_empty(), reg.class(&goal.target.class)) {
            (_, None) => Some(ResolveError::UnknownClass(goal.target.class.clone())),
            (true, Some(_)) if r.depth_exceeded => {
                Some(ResolveError::DepthExceeded { goal: goal.target.clone(), depth: limits.depth })
            }
            (true, Some(_)) => Some(ResolveError::NoInstance(goal.target.clone())),
            (false, Some(_)) => None,
        };
        (r.derivations, r.depth_exceeded, error)
    } else {
        match resolve_first(&goal, &reg, &limits) {
            Ok(d) => (vec![d], false, None),
            Err(e) => {
                let cut = matches!(e, ResolveError::DepthExceeded { .. });
                (Vec::new(), cut, Some(e))
            }
        }
    };
    let report = ResolveReport {
        goal: goal.to_string(),
        resolved: error.is_none(),
        incomplete,
        derivations: derivations.iter().enumerate().map(|(i, d)| render(i, d)).collect(),
        error: error.as_ref().map(|e| e.to_string()),
    };
    let text = || {
        let mut s = String::new();
        if let Some(e) = &report.error {
            let _ = writeln!(s, "{e}");
        } else if all {
            let note = if incomplete { " (incomplete: depth bound reached)" } else { "" };
            let _ = writeln!(s, "derivations: {}{note}", report.derivations.len());
            for d in &report.derivations {
                let _ = writeln!(s, "#{} (height {})", d.index, d.height);
                for line in d.tree.lines() {
                    let _ = writeln!(s, "  {line}");
                }
            }
        } else {
            s.push_str(&report.derivations[0].tree);
        }
        s
    };
    let success = report.resolved;
    emit(config, &report, text, success)
}

pub fn diamonds(config: &Config, goal: &str) -> Result<Outcome, CliError> {
    let reg = load::registry(config)?;
    let goal = load::goal(goal)?;
    let limits = load::limits(config);
    let ctx = load::context(config, &reg)?;
    let ctx = (!ctx.bindings().is_empty()).then_some(&ctx);
    let report = find_diamonds(&goal, &reg, &limits, ctx)?;
    let success = report.worst().is_none_or(|v| v == tc_core::diamond::Verdict::Defeq);
    emit(config, &report, || report.to_string(), success)
}

#[derive(Serialize)]
struct AxiomsReport {
    goal: String,
    instance: Option<String>,
    derivation: RenderedDerivation,
    reports: Vec<AxiomReport>,
    holds: usize,
    total: usize,
}

fn report_axioms(
    config: &Config,
    ctx: &EvalContext<'_>,
    goal: &Goal,
    d: &Arc<Derivation>,
    instance: Option<&str>,
) -> Result<Outcome, CliError> {
    let reports = eval::check_axioms(ctx, d, &goal.hypotheses)?;
    let holds = reports.iter().filter(|r| r.status == tc_core::eval::Status::Holds).count();
    let report = AxiomsReport {
        goal: goal.to_string(),
        instance: instance.map(str::to_string),
        derivation: render(0, d),
        total: reports.len(),
        holds,
        reports,
    };
    let text = || {
        let mut s = String::new();
        let _ = writeln!(s, "goal: {}", report.goal);
        for line in report.derivation.tree.lines() {
            let _ = writeln!(s, "  {line}");
        }
        for r in &report.reports {
            let _ = writeln!(s, "{r}");
        }
        let _ = writeln!(s, "{} of {} axioms hold", report.holds, report.total);
        s
    };
    let success = report.holds == report.total;
    emit(config, &report, text, success)
}

pub fn check_axioms(config: &Config, goal: Option<&str>, instance: Option<&str>) -> Result<Outcome, CliError> {
    let reg = load::registry(config)?;
    let ctx = load::context(config, &reg)?;
    let (goal, d) = match (goal, instance) {
        (_, Some(name)) => {
            instance_as_goal(&reg, name).ok_or_else(|| CliError::Usage(format!("no instance named `{name}`")))?
        }
        (Some(text), None) => {
            let goal = load::goal(text)?;
            match resolve_first(&goal, &reg, &load::limits(config)) {
                Ok(d) => (goal, d),
                Err(ResolveError::UnknownClass(c)) => return Err(CliError::Usage(format!("unknown class `{c}`"))),
                Err(e) => return not_resolved(config, &goal, e),
            }
        }
        (None, None) => return Err(CliError::Usage("give a goal or `--instance`".into())),
    };
    report_axioms(config, &ctx, &goal, &d, instance)
}

fn not_resolved(config: &Config, goal: &Goal, e: ResolveError) -> Result<Outcome, CliError> {
    let report = ResolveReport {
        goal: goal.to_string(),
        resolved: false,
        incomplete: matches!(e, ResolveError::DepthExceeded { .. }),
        derivations: Vec::new(),
        error: Some(e.to_string()),
    };
    emit(config, &report, || format!("{e}\n"), false)
}

#[derive(Serialize)]
struct FieldDefeq {
    field: String,
    defeq: bool,
}

#[derive(Serialize)]
struct DefeqReport {
    goal: String,
    left: RenderedDerivation,
    right: RenderedDerivation,
    fields: Vec<FieldDefeq>,
    defeq: bool,
}

pub fn defeq(config: &Config, goal: &str, left: usize, right: usize) -> Result<Outcome, CliError> {
    let reg = load::registry(config)?;
    let goal = load::goal(goal)?;
    load::context(config, &reg)?;
    let limits = load::limits(config);
    let class = reg
        .class(&goal.target.class)
        .ok_or_else(|| CliError::Usage(format!("unknown class `{}`", goal.target.class)))?;
    let all = resolve_all(&goal, &reg, &limits);
    let n = all.derivations.len();
    let pick = |i: usize| {
        all.derivations
            .get(i)
            .ok_or_else(|| CliError::Usage(format!("derivation index {i} out of range: the goal has {n} derivations")))
    };
    let (a, b) = (pick(left)?, pick(right)?);
    let mut fields = Vec::new();
    for f in &class.fields {
        let ta = derivation_term(a, &f.name, &reg).map_err(|e| CliError::Usage(e.to_string()))?;
        let tb = derivation_term(b, &f.name, &reg).map_err(|e| CliError::Usage(e.to_string()))?;
        let eq = kernel_defeq(&ta, &tb, &reg, limits.fuel).map_err(|KernelError::FuelExhausted(k)| {
            CliError::Usage(format!("normalizing `{}` ran out of fuel after {k} steps", f.name))
        })?;
        fields.push(FieldDefeq { field: f.name.clone(), defeq: eq });
    }
    let report = DefeqReport {
        goal: goal.to_string(),
        left: render(left, a),
        right: render(right, b),
        defeq: fields.iter().all(|f| f.defeq),
        fields,
    };
    let text = || {
        let mut s = String::new();
        let _ = writeln!(s, "goal: {}", report.goal);
        for d in [&report.left, &report.right] {
            let _ = writeln!(s, "#{} (height {})", d.index, d.height);
            for line in d.tree.lines() {
                let _ = writeln!(s, "  {line}");
            }
        }
        for f in &report.fields {
            let _ = writeln!(s, "{}: {}", f.field, if f.defeq { "defeq" } else { "not defeq" });
        }
        let _ = writeln!(s, "#{} #{}: {}", left, right, if report.defeq { "defeq" } else { "not defeq" });
        s
    };
    let success = report.defeq;
    emit(config, &report, text, success)
}

pub fn of_module(config: &Config, goal: &str) -> Result<Outcome, CliError> {
    let reg = load::registry(config)?;
    let goal = load::goal(goal)?;
    let ctx = load::context(config, &reg)?;
    let d = match resolve_first(&goal, &reg, &load::limits(config)) {
        Ok(d) => d,
        Err(ResolveError::UnknownClass(c)) => return Err(CliError::Usage(format!("unknown class `{c}`"))),
        Err(e) => return not_resolved(config, &goal, e),
    };
    let mut report = check_of_module_correspondence(&ctx, &d, &goal.hypotheses)?;
    report.goal = goal.to_string();
    let success = report.agree();
    emit(config, &report, || report.to_string(), success)
}
