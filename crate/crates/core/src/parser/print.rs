use std::fmt;

use super::decl::{Decl, FORMAT_VERSION};
use crate::registry::{ClassDecl, InstanceDecl};

fn write_constraint_atomic(f: &mut fmt::Formatter<'_>, c: &crate::kernel::Constraint) -> fmt::Result {
    write!(f, "[{c}]")
}

impl fmt::Display for Decl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decl::Class(c) => write_class(f, c),
            Decl::Instance(i) => write_instance(f, i),
        }
    }
}

fn write_class(f: &mut fmt::Formatter<'_>, c: &ClassDecl) -> fmt::Result {
    write!(f, "class {}", c.name)?;
    for p in &c.params {
        write!(f, " ({p} : Type)")?;
    }
    if !c.premises.is_empty() {
        f.write_str(" requires")?;
        for p in &c.premises {
            f.write_str(" ")?;
            write_constraint_atomic(f, p)?;
        }
    }
    if !c.extends.is_empty() {
        f.write_str(" extends ")?;
        for (i, p) in c.extends.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
    }
    f.write_str(" {\n")?;
    for op in &c.ops {
        let sig: Vec<String> = op.sig.iter().map(|t| t.to_string()).collect();
        writeln!(f, "  op {} : {}", op.name, sig.join(" -> "))?;
    }
    for ax in &c.axioms {
        write!(f, "  axiom {} : ", ax.name)?;
        if !ax.binders.is_empty() {
            f.write_str("forall")?;
            for (n, t) in &ax.binders {
                write!(f, " ({n} : {t})")?;
            }
            f.write_str(", ")?;
        }
        writeln!(f, "{} = {}", ax.lhs.display(), ax.rhs.display())?;
    }
    f.write_str("}\n")
}

fn write_instance(f: &mut fmt::Formatter<'_>, i: &InstanceDecl) -> fmt::Result {
    write!(f, "instance {} ({})", i.name, i.type_vars.join(" "))?;
    for p in &i.premises {
        f.write_str(" ")?;
        write_constraint_atomic(f, p)?;
    }
    write!(f, " : {}", i.head)?;
    if let Some(p) = i.priority {
        write!(f, " priority {p}")?;
    }
    f.write_str(" {\n")?;
    for (name, t) in &i.defs {
        writeln!(f, "  {name} := {};", t.display())?;
    }
    f.write_str("}\n")
}

/// Renders declarations as a complete `.tc` file.
pub fn print_file(decls: &[Decl]) -> String {
    let mut out = format!("version {FORMAT_VERSION}\n");
    for d in decls {
        out.push_str(&d.to_string());
    }
    out
}
