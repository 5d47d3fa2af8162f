//! Acceptance suite. Prints one pass/fail line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::fmt::Display;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tc_core::bundled;
use tc_core::diamond::{compare_field, find_diamonds, Verdict};
use tc_core::eval::{
    check_axioms, check_of_module_correspondence, check_statement, Domain, EvalContext, FiniteCarrier, Status,
    Structure, Value,
};
use tc_core::kernel::{normalize, unify, Substitution, Term, TypeExpr, DEFAULT_FUEL};
use tc_core::parser::parse_goal;
use tc_core::registry::Registry;
use tc_core::resolver::{derivation_term, instance_as_goal, resolve, resolve_all, Derivation, Goal, InstanceKey};
use tc_core::Limits;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const DIAMOND_GOAL: &str = "[add_comm_monoid A] [add_comm_monoid B] module Nat (fn ι (add_hom A B))";

fn err(e: impl Display) -> String {
    e.to_string()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn carrier(name: &str) -> Arc<FiniteCarrier> {
    bundled::carrier(name).expect("bundled carrier").expect("bundled carrier parses")
}

fn context<'r>(reg: &'r Registry, binds: &[(&str, &str)]) -> EvalContext<'r> {
    binds.iter().fold(EvalContext::new(reg, Limits::default()), |ctx, (atom, name)| ctx.bind(*atom, carrier(name)))
}

fn goal(text: &str) -> Goal {
    parse_goal(text).unwrap_or_else(|e| panic!("goal `{text}`: {e}"))
}

fn main_registry() -> Registry {
    bundled::default_registry().expect("bundled corpus loads")
}

fn diamond_registries() -> Vec<(&'static str, Registry)> {
    [bundled::DIAMOND_NAIVE, bundled::DIAMOND_FIXED]
        .into_iter()
        .map(|(name, text)| (name, Registry::from_sources([(name, text)]).expect("diamond corpus loads")))
        .collect()
}

fn diamond_paths() -> Outcome {
    let expected: Vec<Vec<&str>> = vec![
        vec!["function.module", "add_hom.module", "add_comm_monoid.to_nat_module"],
        vec!["function.module", "add_comm_monoid.to_nat_module", "add_hom.add_comm_monoid"],
        vec!["add_comm_monoid.to_nat_module", "function.add_comm_monoid", "add_hom.add_comm_monoid"],
    ];
    let limits = Limits::default().with_depth(6);
    let mut tallest = 0;
    for (name, reg) in diamond_registries() {
        let g = goal(DIAMOND_GOAL);
        let r = resolve_all(&g, &reg, &limits);
        ensure(!r.depth_exceeded, || format!("{name}: depth bound 6 reached"))?;
        let got: Vec<Vec<String>> = r.derivations.iter().map(|d| d.instance_names()).collect();
        ensure(got == expected, || format!("{name}: got paths {got:?}"))?;
        for d in &r.derivations {
            ensure(d.replays(&reg, &g.hypotheses), || format!("{name}: derivation does not replay"))?;
            tallest = tallest.max(d.height());
        }
        let sub = resolve_all(&goal("[add_comm_monoid A] [add_comm_monoid B] module Nat (add_hom A B)"), &reg, &limits);
        ensure(sub.derivations.len() == 2, || format!("{name}: sub-goal has {} derivations", sub.derivations.len()))?;
    }
    Ok(format!("all 3 path shapes on both diamond corpora, max height {tallest}; sub-goal has 2"))
}

fn diamond_verdicts() -> Outcome {
    let mut lines = Vec::new();
    for ((name, reg), want) in diamond_registries().into_iter().zip([Verdict::PropEqOnly, Verdict::Defeq]) {
        let ctx = context(&reg, &[("ι", "idx2"), ("A", "zmod2"), ("B", "zmod2")]);
        let report = find_diamonds(&goal(DIAMOND_GOAL), &reg, &Limits::default(), Some(&ctx)).map_err(err)?;
        let got: Vec<Verdict> = report.pairs.iter().map(|p| p.verdict).collect();
        ensure(got == vec![want; 3], || format!("{name}: verdicts {got:?}"))?;
        lines.push(format!("{name}: 3 × {want}"));
    }
    Ok(lines.join(", "))
}

/// `n • x` by repeated addition on the carrier's own tables, pointwise on
/// the graphs for function and additive-map carriers.
fn nfold(c: &FiniteCarrier, n: u64, x: usize) -> usize {
    match c.structure() {
        Structure::Function { base, graphs, .. } | Structure::AddHom { cod: base, graphs, .. } => {
            let g: Vec<usize> = graphs[x].iter().map(|&v| nfold(base, n, v)).collect();
            c.graph_index(&g).expect("closed under pointwise addition")
        }
        _ => {
            let zero = c.op("zero", &[]).expect("zero table");
            (0..n).fold(zero, |acc, _| c.op("add", &[acc, x]).expect("add table"))
        }
    }
}

fn target_carrier(ctx: &EvalContext<'_>, d: &Derivation) -> Result<Arc<FiniteCarrier>, String> {
    match ctx.domain(&d.goal.args[1]).map_err(err)? {
        Domain::Finite(c) => Ok(c),
        other => Err(format!("`{}` is not finite: {}", d.goal, other.describe())),
    }
}

fn subsingleton() -> Outcome {
    let plain = ["zmod2", "zmod3", "zmod4"];
    let mut scenarios: Vec<(String, Vec<(&str, &str)>)> = Vec::new();
    for c in plain {
        scenarios.push(("[add_comm_monoid A] module Nat A".into(), vec![("A", c)]));
    }
    scenarios.push((
        "[add_comm_monoid A] [add_comm_monoid B] module Nat (add_hom A B)".into(),
        vec![("A", "zmod2"), ("B", "zmod2")],
    ));
    scenarios.push(("[add_comm_monoid A] module Nat (fn ι A)".into(), vec![("ι", "idx2"), ("A", "zmod2")]));
    scenarios.push((DIAMOND_GOAL.into(), vec![("ι", "idx2"), ("A", "zmod2"), ("B", "zmod2")]));

    let mut regs = diamond_registries();
    regs.push(("main", main_registry()));
    let (mut pairs, mut evaluations, mut derivations) = (0u64, 0u64, 0usize);
    for (name, reg) in &regs {
        let mut local = scenarios.clone();
        if *name == "main" {
            for c in plain {
                local.push(("[comm_semiring A] module Nat A".into(), vec![("A", c)]));
            }
        }
        for (text, binds) in &local {
            let g = goal(text);
            let ctx = context(reg, binds);
            let ds = resolve_all(&g, reg, &Limits::default()).derivations;
            ensure(!ds.is_empty(), || format!("{name}: no derivation of `{text}`"))?;
            derivations += ds.len();
            for (i, a) in ds.iter().enumerate() {
                for b in &ds[i + 1..] {
                    let (n, cex) = compare_field(&ctx, a, b, "smul").map_err(err)?;
                    if let Some(c) = cex {
                        return Err(format!("{name} `{text}` {binds:?}: {c}"));
                    }
                    pairs += n;
                }
                let c = target_carrier(&ctx, a)?;
                for n in 0..=8 {
                    for x in 0..c.len() {
                        let got =
                            ctx.apply_field(a, "smul", &[Value::Nat(n), Value::Elem(c.clone(), x)]).map_err(err)?;
                        let want = Value::Elem(c.clone(), nfold(&c, n, x));
                        ensure(got == want, || {
                            format!("{name} `{text}` {binds:?}: {n} • {} = {got}, expected {want}", c.elements()[x])
                        })?;
                        evaluations += 1;
                    }
                }
            }
        }
    }
    Ok(format!(
        "{derivations} derivations, {pairs} pairwise (n, x) comparisons, {evaluations} checks against repeated addition, 0 counterexamples"
    ))
}

fn recursive_chaining() -> Outcome {
    let reg = main_registry();
    let g = goal("[has_mul R] has_scalar R (fn i1 (fn i2 R))");
    let d = resolve(&g, &reg, &Limits::default()).map_err(err)?;
    let names = d.instance_names();
    ensure(names == ["function.has_scalar'", "function.has_scalar'", "has_mul.to_has_scalar"], || {
        format!("got {names:?}")
    })?;
    let leaf = &d.children[0].children[0].children[0];
    ensure(leaf.instance == InstanceKey::Hypothesis(0) && leaf.children.is_empty(), || {
        format!("leaf is {}", leaf.label())
    })?;
    ensure(d.replays(&reg, &g.hypotheses), || "derivation does not replay".into())?;
    Ok(format!("{} → hypothesis leaf", names.join(" → ")))
}

fn all_hold(reg: &Registry, text: &str, binds: &[(&str, &str)]) -> Result<u64, String> {
    let g = goal(text);
    let ctx = context(reg, binds);
    let d = resolve(&g, reg, &Limits::default()).map_err(err)?;
    let reports = check_axioms(&ctx, &d, &g.hypotheses).map_err(err)?;
    ensure(!reports.is_empty(), || format!("`{text}` has no axioms"))?;
    let mut n = 0;
    for r in reports {
        ensure(r.status == Status::Holds, || format!("`{text}` {binds:?}: {r}"))?;
        n += r.assignments;
    }
    Ok(n)
}

const BROKEN: &str = "version 1
instance broken.mul_action (A) [monoid A] : mul_action A A {
  smul := fun r a => r
}
";

fn axiom_checking() -> Outcome {
    let reg = main_registry();
    let mut n = 0;
    for c in ["zmod2", "zmod3", "zmod4", "noncomm2"] {
        n += all_hold(&reg, "[monoid A] mul_action A A", &[("A", c)])?;
        n += all_hold(&reg, "[add_comm_monoid A] module Nat A", &[("A", c)])?;
    }
    for c in ["zmod2", "zmod4"] {
        n += all_hold(&reg, "[comm_semiring R] is_scalar_tower R R R", &[("R", c)])?;
        n += all_hold(&reg, "[comm_semiring R] smul_comm_class R R R", &[("R", c)])?;
    }
    let mut broken = main_registry();
    broken.load_source("broken.tc", BROKEN).map_err(err)?;
    let (g, d) = instance_as_goal(&broken, "broken.mul_action").ok_or("broken instance missing")?;
    let ctx = context(&broken, &[("A", "zmod2")]);
    let reports = check_axioms(&ctx, &d, &g.hypotheses).map_err(err)?;
    let one = reports.iter().find(|r| r.axiom == "mul_action.one_smul").ok_or("one_smul not checked")?;
    let cex = one.counterexample.as_ref().filter(|_| one.status == Status::Fails).ok_or_else(|| one.to_string())?;
    ensure(cex.assignment == [("a".to_string(), "0".to_string())], || format!("counterexample {cex}"))?;
    Ok(format!("{n} assignments hold; corrupted instance fails one_smul at {cex}"))
}

fn opposite_action() -> Outcome {
    let reg = main_registry();
    let nc = carrier("noncomm2");
    let g = goal("[monoid A] mul_action (opposite A) A");
    let ctx = EvalContext::new(&reg, Limits::default()).bind("A", nc.clone());
    let d = resolve(&g, &reg, &Limits::default()).map_err(err)?;
    ensure(d.instance_names().first().map(String::as_str) == Some("monoid.to_opposite_mul_action"), || {
        format!("resolved via {:?}", d.instance_names())
    })?;
    let op = match ctx.domain(&d.goal.args[0]).map_err(err)? {
        Domain::Finite(c) => c,
        other => return Err(format!("opposite is {}", other.describe())),
    };
    let mul = |a: usize, b: usize| nc.op("mul", &[a, b]).expect("mul table");
    let n = nc.len();
    ensure((0..n).any(|a| (0..n).any(|b| mul(a, b) != mul(b, a))), || "noncomm2 is commutative".into())?;
    for a in 0..n {
        for b in 0..n {
            let got =
                ctx.apply_field(&d, "smul", &[Value::Elem(op.clone(), a), Value::Elem(nc.clone(), b)]).map_err(err)?;
            let want = Value::Elem(nc.clone(), mul(b, a));
            ensure(got == want, || format!("op {} • {} = {got}, expected {want}", nc.elements()[a], nc.elements()[b]))?;
        }
    }
    let axioms = all_hold(&reg, "[monoid A] mul_action (opposite A) A", &[("A", "noncomm2")])?;
    Ok(format!("{} pairs satisfy op a • b = b * a; axioms hold on {axioms} assignments", n * n))
}

fn of_module() -> Outcome {
    let reg = main_registry();
    let cases: [(&str, &[(&str, &str)]); 5] = [
        ("[comm_semiring R] [semiring A] [module R A] module R A", &[("R", "zmod4_bad"), ("A", "zmod4_bad")]),
        ("[semiring A] module Nat A", &[("A", "zmod4")]),
        ("[comm_semiring R] module R R", &[("R", "zmod2")]),
        ("[comm_semiring R] module R R", &[("R", "zmod4")]),
        ("[comm_semiring R] module R R", &[("R", "trivial")]),
    ];
    let mut statuses = Vec::new();
    for (i, (text, binds)) in cases.iter().enumerate() {
        let g = goal(text);
        let ctx = context(&reg, binds);
        let d = resolve(&g, &reg, &Limits::default()).map_err(err)?;
        let r = check_of_module_correspondence(&ctx, &d, &g.hypotheses).map_err(err)?;
        ensure(r.agree(), || format!("`{text}` {binds:?}:\n{r}"))?;
        let want = if i == 0 { Status::Fails } else { Status::Holds };
        ensure(r.assoc.direct.status == want && r.comm.direct.status == want, || format!("`{text}` {binds:?}:\n{r}"))?;
        if i == 0 {
            let cex = r.assoc.direct.counterexample.as_ref().ok_or("no h1 counterexample")?;
            let at: Vec<(&str, &str)> = cex.assignment.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
            ensure(at == [("r", "1"), ("x", "1"), ("y", "2")], || format!("first h1 counterexample {cex}"))?;
        }
        statuses.push(format!("{}={}", binds.iter().map(|b| b.1).collect::<Vec<_>>().join("/"), r.assoc.direct.status));
    }
    Ok(format!("verdicts agree on {} cases ({})", cases.len(), statuses.join(", ")))
}

fn random_type(rng: &mut ChaCha8Rng, depth: usize, vars: &[&str]) -> TypeExpr {
    if depth == 0 || rng.gen_bool(0.3) {
        if !vars.is_empty() && rng.gen_bool(0.4) {
            TypeExpr::var(vars[rng.gen_range(0..vars.len())])
        } else {
            TypeExpr::atom(["A", "B", "Nat"][rng.gen_range(0..3)])
        }
    } else {
        let pick = rng.gen_range(0..3);
        let mut sub = || random_type(rng, depth - 1, vars);
        match pick {
            0 => TypeExpr::app("fn", vec![sub(), sub()]),
            1 => TypeExpr::app("add_hom", vec![sub(), sub()]),
            _ => TypeExpr::app("opposite", vec![sub()]),
        }
    }
}

fn atoms(t: &TypeExpr, out: &mut BTreeSet<String>) {
    if let TypeExpr::App(name, args) = t {
        if args.is_empty() {
            out.insert(name.clone());
        }
        args.iter().for_each(|a| atoms(a, out));
    }
}

fn goal_atoms(g: &Goal) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for c in g.hypotheses.iter().chain([&g.target]) {
        c.args.iter().for_each(|a| atoms(a, &mut out));
    }
    out
}

fn kernel_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7c_2024);
    let (mut unified, mut clashes) = (0, 0);
    for i in 0..1000 {
        let (a, b) = if i % 2 == 0 {
            (random_type(&mut rng, 3, &["x", "y", "z"]), random_type(&mut rng, 3, &["x", "y", "z"]))
        } else {
            let a = random_type(&mut rng, 3, &["x", "y"]);
            let s = Substitution::from_pairs(["x", "y"].map(|v| (v, random_type(&mut rng, 2, &["z", "w"]))));
            let b = s.apply(&a);
            (a, b)
        };
        match unify(&a, &b) {
            Ok(s) => {
                let (sa, sb) = (s.apply(&a), s.apply(&b));
                ensure(sa == sb, || format!("unify({a}, {b}) gave a non-unifier: {sa} vs {sb}"))?;
                ensure(s.apply(&sa) == sa, || format!("unify({a}, {b}) is not idempotent"))?;
                unified += 1;
            }
            Err(e) if i % 2 == 1 => return Err(format!("unify({a}, {b}) failed on an instance pair: {e}")),
            Err(_) => clashes += 1,
        }
    }

    let mut regs = diamond_registries();
    regs.push(("main", main_registry()));
    let (mut terms, mut evaluated, mut skipped) = (0, 0, 0);
    for (_, reg) in &regs {
        let mut subjects: Vec<(Goal, Arc<Derivation>)> =
            reg.instances().filter_map(|i| instance_as_goal(reg, &i.decl.name)).collect();
        if let Some(fig2) = resolve_all(&goal(DIAMOND_GOAL), reg, &Limits::default()).derivations.first() {
            subjects.push((goal(DIAMOND_GOAL), fig2.clone()));
        }
        for (g, d) in subjects {
            let binds: Vec<(String, &str)> = goal_atoms(&g)
                .into_iter()
                .filter(|a| a != "Nat" && a != "Int")
                .map(|a| {
                    let c = if a == "I" || a == "ι" { "idx2" } else { "zmod4" };
                    (a, c)
                })
                .collect();
            let ctx = binds
                .iter()
                .fold(EvalContext::new(reg, Limits::default()), |ctx, (a, c)| ctx.bind(a.clone(), carrier(c)));
            let class = reg.class(&d.goal.class).ok_or("unknown class")?;
            for field in &class.fields {
                let t = derivation_term(&d, &field.name, reg).map_err(err)?;
                let nf = normalize(&t, reg, DEFAULT_FUEL).map_err(err)?;
                let again = normalize(&nf, reg, DEFAULT_FUEL).map_err(err)?;
                ensure(again == nf, || format!("normalizing `{}` twice changed it", nf.display()))?;
                terms += 1;
                let sig = reg.field_signature(&d.goal, &field.name).ok_or("no field signature")?;
                let binders: Vec<(String, TypeExpr)> =
                    sig[..sig.len() - 1].iter().enumerate().map(|(i, t)| (format!("v{i}"), t.clone())).collect();
                let frees = || binders.iter().map(|(n, _)| Term::free(n.clone())).collect::<Vec<_>>();
                let label = format!("{}.{}", d.label(), field.name);
                match check_statement(&ctx, &label, &binders, &Term::apps(t.clone(), frees()), &Term::apps(nf, frees()))
                {
                    Ok(r) if r.status == Status::Holds => evaluated += 1,
                    Ok(r) if r.status == Status::Fails => return Err(format!("eval ∘ normalize differs: {r}")),
                    _ => skipped += 1,
                }
            }
        }
    }
    ensure(evaluated > 0, || "no term could be evaluated".into())?;
    Ok(format!(
        "1000 unifications ({unified} unified, {clashes} clashes), {terms} terms normalize idempotently, \
         eval ∘ normalize = eval on {evaluated} ({skipped} not evaluable over zmod4)"
    ))
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Ty {
    Var(usize),
    Ctor(&'static str, Vec<Ty>),
}

const CTORS: [(&str, usize); 4] = [("a", 0), ("b", 0), ("f", 1), ("g", 2)];
const VAR_NAMES: [&str; 3] = ["X", "Y", "Z"];

impl Ty {
    fn render(&self) -> String {
        match self {
            Ty::Var(v) => VAR_NAMES[*v].to_string(),
            Ty::Ctor(c, args) => {
                let mut s = c.to_string();
                for a in args {
                    match a {
                        Ty::Ctor(_, inner) if !inner.is_empty() => s += &format!(" ({})", a.render()),
                        _ => s += &format!(" {}", a.render()),
                    }
                }
                s
            }
        }
    }

    fn vars(&self, out: &mut BTreeSet<usize>) {
        match self {
            Ty::Var(v) => {
                out.insert(*v);
            }
            Ty::Ctor(_, args) => args.iter().for_each(|a| a.vars(out)),
        }
    }

    fn subst(&self, s: &[Option<Ty>]) -> Ty {
        match self {
            Ty::Var(v) => s[*v].clone().expect("head binds every variable"),
            Ty::Ctor(c, args) => Ty::Ctor(c, args.iter().map(|a| a.subst(s)).collect()),
        }
    }

    fn from_expr(t: &TypeExpr) -> Ty {
        match t {
            TypeExpr::Var(v) => panic!("unexpected variable {v} in a derivation"),
            TypeExpr::App(c, args) => {
                let name = CTORS.iter().find(|(n, _)| n == c).expect("known constructor").0;
                Ty::Ctor(name, args.iter().map(Ty::from_expr).collect())
            }
        }
    }
}

/// One-way matching of a pattern against a ground type.
fn matches(pat: &Ty, t: &Ty, s: &mut [Option<Ty>]) -> bool {
    match (pat, t) {
        (Ty::Var(v), _) => match &s[*v] {
            Some(bound) => bound == t,
            None => {
                s[*v] = Some(t.clone());
                true
            }
        },
        (Ty::Ctor(c, xs), Ty::Ctor(d, ys)) => {
            c == d && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| matches(x, y, s))
        }
        _ => false,
    }
}

fn random_ty(rng: &mut ChaCha8Rng, depth: usize, nvars: usize) -> Ty {
    if nvars > 0 && rng.gen_bool(0.35) {
        return Ty::Var(rng.gen_range(0..nvars));
    }
    let pool: Vec<_> = CTORS.iter().filter(|(_, k)| depth > 0 || *k == 0).collect();
    let (c, k) = *pool[rng.gen_range(0..pool.len())];
    Ty::Ctor(c, (0..k).map(|_| random_ty(rng, depth.saturating_sub(1), nvars)).collect())
}

struct MiniInstance {
    name: String,
    nvars: usize,
    head: (usize, Ty),
    premises: Vec<(usize, Ty)>,
}

fn random_registry(rng: &mut ChaCha8Rng) -> Vec<MiniInstance> {
    (0..rng.gen_range(1..=6))
        .map(|i| {
            let head = random_ty(rng, 2, 3);
            let mut used = BTreeSet::new();
            head.vars(&mut used);
            let renumber: Vec<usize> = used.iter().copied().collect();
            fn remap(t: &Ty, r: &[usize]) -> Ty {
                match t {
                    Ty::Var(v) => Ty::Var(r.iter().position(|x| x == v).expect("used variable")),
                    Ty::Ctor(c, args) => Ty::Ctor(c, args.iter().map(|a| remap(a, r)).collect()),
                }
            }
            let head = remap(&head, &renumber);
            let nvars = renumber.len();
            let count = [0, 0, 1, 1, 2][rng.gen_range(0..5)];
            let premises = (0..count).map(|_| (rng.gen_range(0..2), random_ty(rng, 1, nvars))).collect();
            MiniInstance { name: format!("i{i}"), nvars, head: (rng.gen_range(0..2), head), premises }
        })
        .collect()
}

fn render_registry(insts: &[MiniInstance]) -> String {
    let mut s = String::from("version 1\nclass c0 (T : Type) { }\nclass c1 (T : Type) { }\nclass c2 (T : Type) { }\n");
    for i in insts {
        let vars = VAR_NAMES[..i.nvars].join(" ");
        let prem: String = i.premises.iter().map(|(c, t)| format!(" [c{c} {}]", paren(t))).collect();
        s += &format!("instance {} ({vars}){prem} : c{} {} {{ }}\n", i.name, i.head.0, paren(&i.head.1));
    }
    s
}

fn paren(t: &Ty) -> String {
    match t {
        Ty::Ctor(_, args) if !args.is_empty() => format!("({})", t.render()),
        _ => t.render(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Tree {
    instance: String,
    goal: (usize, Ty),
    children: Vec<Tree>,
}

/// Every tree of height at most `height`, without loop pruning. `None`
/// once more than `budget` trees have been built.
fn enumerate(insts: &[MiniInstance], goal: &(usize, Ty), height: usize, budget: &mut usize) -> Option<Vec<Tree>> {
    if height == 0 {
        return Some(Vec::new());
    }
    let mut out = Vec::new();
    for inst in insts {
        let mut s = vec![None; inst.nvars];
        if inst.head.0 != goal.0 || !matches(&inst.head.1, &goal.1, &mut s) {
            continue;
        }
        let mut combos: Vec<Vec<Tree>> = vec![Vec::new()];
        for (c, t) in &inst.premises {
            let alts = enumerate(insts, &(*c, t.subst(&s)), height - 1, budget)?;
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    alts.iter().map(move |a| {
                        let mut p = prefix.clone();
                        p.push(a.clone());
                        p
                    })
                })
                .collect();
            *budget = budget.checked_sub(combos.len())?;
        }
        out.extend(combos.into_iter().map(|children| Tree {
            instance: inst.name.clone(),
            goal: goal.clone(),
            children,
        }));
    }
    Some(out)
}

fn repeats_on_path(t: &Tree, path: &mut Vec<(usize, Ty)>) -> bool {
    if path.contains(&t.goal) {
        return true;
    }
    path.push(t.goal.clone());
    let found = t.children.iter().any(|c| repeats_on_path(c, path));
    path.pop();
    found
}

fn to_tree(d: &Derivation) -> Tree {
    let class: usize = d.goal.class[1..].parse().expect("class c<k>");
    Tree {
        instance: d.label(),
        goal: (class, Ty::from_expr(&d.goal.args[0])),
        children: d.children.iter().map(|c| to_tree(c)).collect(),
    }
}

fn brute_force_agreement() -> Outcome {
    const DEPTH: usize = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let (mut accepted, mut total, mut nonempty) = (0, 0, 0);
    let mut attempts = 0;
    while accepted < 20 {
        attempts += 1;
        ensure(attempts < 10_000, || "could not generate 20 tractable registries".into())?;
        let insts = random_registry(&mut rng);
        let goal_ty = if rng.gen_bool(0.9) {
            let inst = &insts[rng.gen_range(0..insts.len())];
            let s: Vec<Option<Ty>> = (0..inst.nvars).map(|_| Some(random_ty(&mut rng, 1, 0))).collect();
            (inst.head.0, inst.head.1.subst(&s))
        } else {
            (rng.gen_range(0..3), random_ty(&mut rng, 2, 0))
        };
        let mut budget = 200_000;
        let Some(trees) = enumerate(&insts, &goal_ty, DEPTH, &mut budget) else { continue };
        let oracle: Vec<Tree> = trees.into_iter().filter(|t| !repeats_on_path(t, &mut Vec::new())).collect();

        let src = render_registry(&insts);
        let reg = Registry::from_sources([("mini.tc", src.as_str())]).map_err(|e| format!("{e}\n{src}"))?;
        let g = goal(&format!("c{} {}", goal_ty.0, paren(&goal_ty.1)));
        let got: Vec<Tree> = resolve_all(&g, &reg, &Limits::default().with_depth(DEPTH))
            .derivations
            .iter()
            .map(|d| to_tree(d))
            .collect();
        ensure(got == oracle, || {
            format!(
                "registry #{accepted}, goal `{g}`: resolver found {}, brute force {}\n{src}",
                got.len(),
                oracle.len()
            )
        })?;
        accepted += 1;
        total += got.len();
        nonempty += usize::from(!got.is_empty());
    }
    Ok(format!("20 registries ({nonempty} with derivations), {total} derivations match in order"))
}

fn nat_smul() -> Outcome {
    let reg = main_registry();
    let z4 = carrier("zmod4");
    let value = |i: usize| -> u64 { z4.elements()[i].parse().expect("numeric element") };
    let mut checks = 0;
    for text in ["[add_comm_monoid A] module Nat A", "[comm_semiring A] module Nat A"] {
        let g = goal(text);
        let ctx = EvalContext::new(&reg, Limits::default()).bind("A", z4.clone());
        for d in resolve_all(&g, &reg, &Limits::default()).derivations {
            for n in 0..=8u64 {
                for x in 0..z4.len() {
                    let got = ctx.apply_field(&d, "smul", &[Value::Nat(n), Value::Elem(z4.clone(), x)]).map_err(err)?;
                    let want = (n * value(x)) % 4;
                    ensure(got.to_string() == want.to_string(), || {
                        format!("{}: {n} • {} = {got}, expected {want}", d.label(), value(x))
                    })?;
                    checks += 1;
                }
            }
        }
    }
    Ok(format!("{checks} evaluations equal n-fold addition, including 0 • x = 0"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("diamond paths", diamond_paths),
        ("diamond verdicts", diamond_verdicts),
        ("subsingleton nat action", subsingleton),
        ("recursive chaining", recursive_chaining),
        ("axiom checking", axiom_checking),
        ("opposite action", opposite_action),
        ("of_module correspondence", of_module),
        ("kernel properties", kernel_properties),
        ("brute-force resolution", brute_force_agreement),
        ("nat smul", nat_smul),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: pass ({detail})", i + 1),
            Err(reason) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({reason})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
