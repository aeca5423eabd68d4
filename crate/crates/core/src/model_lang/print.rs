use std::fmt::Write;

use crate::term::Var;

use super::ast::*;

fn var_groups(vars: &[Var]) -> String {
    let mut out = String::new();
    let mut i = 0;
    while i < vars.len() {
        let sort = vars[i].sort;
        out.push_str(" (");
        while i < vars.len() && vars[i].sort == sort {
            write!(out, "{} ", vars[i].name).unwrap();
            i += 1;
        }
        write!(out, "{sort})").unwrap();
    }
    out
}

fn print_role(r: &RoleDef, out: &mut String) {
    writeln!(out, "  (defrole {}", r.name).unwrap();
    writeln!(out, "    (vars{})", var_groups(&r.vars)).unwrap();
    out.push_str("    (trace");
    for e in &r.trace {
        write!(out, "\n     ({} {})", e.dir.as_str(), e.msg).unwrap();
    }
    out.push(')');
    if !r.uniq_gen.is_empty() {
        out.push_str("\n    (uniq-gen");
        for t in &r.uniq_gen {
            write!(out, " {t}").unwrap();
        }
        out.push(')');
    }
    out.push_str(")\n");
}

fn print_pred(p: &Pred) -> String {
    match p {
        Pred::Position { role, strand, index } => format!("(p {role:?} {strand} {index})"),
        Pred::Param {
            role,
            param,
            strand,
            value,
        } => format!("(p {role:?} {param:?} {strand} {value})"),
    }
}

fn print_rule(r: &RuleDef, out: &mut String) {
    writeln!(out, "  (defrule {}", r.name).unwrap();
    out.push_str("    (forall (");
    if !r.strand_vars.is_empty() {
        write!(out, "({} strd)", r.strand_vars.join(" ")).unwrap();
    }
    let rest = var_groups(&r.vars);
    if r.strand_vars.is_empty() {
        out.push_str(rest.trim_start());
    } else {
        out.push_str(&rest);
    }
    out.push_str(")\n      (implies\n       (and");
    for p in &r.hypothesis {
        write!(out, "\n        {}", print_pred(p)).unwrap();
    }
    writeln!(out, ")\n       (= {} {}))))", r.conclusion.0, r.conclusion.1).unwrap();
}

pub fn print_protocol(p: &ProtocolDef) -> String {
    let mut out = format!("(defprotocol {} {}\n", p.name, p.algebra);
    for r in &p.roles {
        print_role(r, &mut out);
    }
    for r in &p.rules {
        print_rule(r, &mut out);
    }
    out.push_str(")\n");
    out
}

pub fn print_skeleton(s: &SkeletonDef) -> String {
    let mut out = format!("(defskeleton {}\n", s.protocol);
    write!(out, "  (vars{})", var_groups(&s.vars)).unwrap();
    for st in &s.strands {
        write!(out, "\n  (defstrand {} {}", st.role, st.height).unwrap();
        for (v, t) in &st.bindings {
            write!(out, " ({v} {t})").unwrap();
        }
        out.push(')');
    }
    for l in &s.listeners {
        write!(out, "\n  (deflistener {l})").unwrap();
    }
    if !s.neq.is_empty() {
        out.push_str("\n  (neq");
        for (a, b) in &s.neq {
            write!(out, " ({a} {b})").unwrap();
        }
        out.push(')');
    }
    if !s.non_orig.is_empty() {
        out.push_str("\n  (non-orig");
        for t in &s.non_orig {
            write!(out, " {t}").unwrap();
        }
        out.push(')');
    }
    out.push_str(")\n");
    out
}

/// Renders a model file back to source text.
pub fn print(m: &ModelFile) -> String {
    let mut parts = Vec::new();
    for d in &m.defs {
        parts.push(match d {
            Definition::Protocol(p) => print_protocol(p),
            Definition::Skeleton(s) => print_skeleton(s),
        });
    }
    parts.join("\n")
}
