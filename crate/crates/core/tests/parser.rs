use proptest::prelude::*;
use tc_core::bundled;
use tc_core::kernel::{Constraint, Prim, Term, TypeExpr};
use tc_core::parser::{parse_carrier, parse_file, parse_goal, parse_term, print_file, Decl};
use tc_core::registry::{AxiomStmt, ClassDecl, InstanceDecl, OpField};

fn stripped(decls: &[Decl]) -> Vec<Decl> {
    decls.iter().map(Decl::without_span).collect()
}

#[test]
fn corpus_round_trips() {
    for (file, text) in bundled::CORPUS {
        let decls = parse_file(file, text).unwrap();
        assert!(!decls.is_empty(), "{file}");
        let printed = print_file(&decls);
        let again = parse_file("printed.tc", &printed).unwrap_or_else(|e| panic!("{file}: {e:?}\n{printed}"));
        assert_eq!(stripped(&decls), stripped(&again), "{file}");
        assert_eq!(printed, print_file(&again), "{file}");
    }
}

#[test]
fn bundled_carriers_parse() {
    for (name, _) in bundled::CARRIERS {
        let c = bundled::carrier(name).unwrap().unwrap();
        assert_eq!(c.name(), name);
    }
    assert_eq!(bundled::carrier("zmod4").unwrap().unwrap().len(), 4);
    assert!(bundled::carrier("idx0").unwrap().unwrap().is_empty());
    assert!(bundled::carrier("nope").is_none());
}

#[test]
fn partial_table_is_rejected() {
    let text = "version 1\ncarrier c\nelems 0 1\ntable add 2\n0 1\n";
    let e = parse_carrier("c.car", text).unwrap_err();
    assert!(e.to_string().contains("add"), "{e}");
}

#[test]
fn unknown_element_is_rejected() {
    let text = "version 1\ncarrier c\nelems 0 1\ntable zero 0\n2\n";
    assert!(parse_carrier("c.car", text).is_err());
}

#[test]
fn missing_version_line_is_rejected() {
    assert!(parse_file("x.tc", "class c (A : Type) { }").is_err());
}

#[test]
fn diagnostics_point_inside_the_input() {
    let inputs = [
        "version 1\nclass c (A : Type) { op f : A -> }\n",
        "version 1\ninstance i (A) : c A { f := fun => x }\n",
        "version 1\nclass c (A : Type) {\n  axiom a : forall x : A, f x\n}\n",
        "version 1\nclass\n",
    ];
    for text in inputs {
        let errs = parse_file("bad.tc", text).unwrap_err();
        assert!(!errs.is_empty());
        let lines: Vec<&str> = text.lines().collect();
        for e in errs {
            let s = &e.span;
            assert!(s.line >= 1 && s.column >= 1, "{e}");
            let line = lines.get(s.line - 1).unwrap_or_else(|| panic!("line out of range: {e}"));
            assert!(s.column <= line.chars().count() + 1, "{e}");
        }
    }
}

#[test]
fn goals_parse() {
    let g = parse_goal("module Nat (fn iota (add_hom A B))").unwrap();
    assert!(g.hypotheses.is_empty());
    assert_eq!(g.target.to_string(), "module Nat (fn iota (add_hom A B))");
    assert_eq!(parse_goal("has_mul A").unwrap().target, Constraint::new("has_mul", vec![TypeExpr::atom("A")]));
    let g = parse_goal("has_scalar R (fn i1 (fn i2 R))").unwrap();
    assert_eq!(
        g.target.args[1],
        TypeExpr::app(
            "fn",
            vec![TypeExpr::atom("i1"), TypeExpr::app("fn", vec![TypeExpr::atom("i2"), TypeExpr::atom("R")])]
        )
    );
}

fn arb_type(vars: Vec<&'static str>) -> impl Strategy<Value = TypeExpr> {
    let mut leaves = vec![prop::sample::select(vec!["A", "B", "Nat"]).prop_map(TypeExpr::atom).boxed()];
    if !vars.is_empty() {
        leaves.push(prop::sample::select(vars).prop_map(TypeExpr::var).boxed());
    }
    prop::strategy::Union::new(leaves).prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| TypeExpr::app("fn", vec![a, b])),
            inner.prop_map(|a| TypeExpr::app("opposite", vec![a])),
        ]
    })
}

/// Closes a raw term: variable indices are reduced modulo the number of
/// enclosing binders, and become a field reference at top level.
fn close(t: Term, depth: usize) -> Term {
    match t {
        Term::Var(i) if depth == 0 => Term::field(["mul", "add"][i % 2]),
        Term::Var(i) => Term::Var(i % depth),
        Term::Lam(b, body) => Term::Lam(b, Box::new(close(*body, depth + 1))),
        Term::App(f, a) => Term::app(close(*f, depth), close(*a, depth)),
        Term::NatRec(z, s, n) => Term::natrec(close(*z, depth), close(*s, depth), close(*n, depth)),
        other => other,
    }
}

/// Terms using only syntax that survives a print.
fn arb_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["mul", "add", "smul", "zero"]).prop_map(Term::field),
        (0u64..20).prop_map(Term::NatLit),
        prop::sample::select(Prim::ALL.to_vec()).prop_map(Term::Prim),
        arb_type(vec![]).prop_map(|t| Term::Field { name: "add".into(), at: Some(vec![t]) }),
        (0usize..4).prop_map(Term::Var),
    ];
    leaf.prop_recursive(5, 24, 3, |inner| {
        prop_oneof![
            2 => (inner.clone(), inner.clone()).prop_map(|(f, a)| Term::app(f, a)),
            1 => (prop::sample::select(vec!["x", "y", "fun", "priority"]), inner.clone())
                .prop_map(|(n, b)| Term::lam(n, b)),
            1 => (inner.clone(), inner.clone(), inner).prop_map(|(z, s, n)| Term::natrec(z, s, n)),
        ]
    })
    .prop_map(|t| close(t, 0))
}

fn arb_decls() -> impl Strategy<Value = Vec<Decl>> {
    let class = (
        prop::collection::vec(arb_type(vec![]), 1..3),
        prop::collection::vec(arb_term(), 0..3),
        prop::collection::vec(arb_type(vec![]), 0..2),
    )
        .prop_map(|(sig, sides, binder_tys)| {
            let mut c = ClassDecl::new("c", &["T"]);
            c.ops.push(OpField { name: "f".into(), sig });
            let binders: Vec<(String, TypeExpr)> =
                binder_tys.into_iter().enumerate().map(|(i, t)| (format!("v{i}"), t)).collect();
            for (i, lhs) in sides.into_iter().enumerate() {
                let rhs = binders.first().map_or(Term::NatLit(0), |(n, _)| Term::free(n.clone()));
                c.axioms.push(AxiomStmt { name: format!("ax{i}"), binders: binders.clone(), lhs, rhs });
            }
            Decl::Class(c)
        });
    let instance = (arb_type(vec!["X"]), arb_term(), prop::option::of(-5i64..5)).prop_map(|(head, def, priority)| {
        let mut vars = std::collections::BTreeSet::new();
        head.collect_vars(&mut vars);
        Decl::Instance(InstanceDecl {
            name: "i.x'".into(),
            type_vars: vars.into_iter().collect(),
            premises: vec![Constraint::new("c", vec![TypeExpr::atom("B")])],
            head: Constraint::new("c", vec![head]),
            defs: vec![("f".into(), def)],
            priority,
            span: None,
        })
    });
    prop::collection::vec(prop_oneof![class, instance], 0..4)
}

proptest! {
    #[test]
    fn printed_declarations_reparse(decls in arb_decls()) {
        let printed = print_file(&decls);
        let again = parse_file("p.tc", &printed).map_err(|e| TestCaseError::fail(format!("{e:?}\n{printed}")))?;
        prop_assert_eq!(stripped(&decls), stripped(&again), "{}", printed);
    }

    #[test]
    fn printed_terms_reparse(t in arb_term()) {
        let printed = t.display().to_string();
        let again = parse_term(&printed, &[]).map_err(|e| TestCaseError::fail(format!("{e}: {printed}")))?;
        prop_assert_eq!(t, again, "{}", printed);
    }
}
