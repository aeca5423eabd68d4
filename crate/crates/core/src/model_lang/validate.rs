use std::collections::BTreeSet;

use thiserror::Error;

use crate::term::{Term, Var};

use super::ast::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Diagnostic {
    #[error("protocol {protocol}: algebra `{algebra}` is not supported, expected diffie-hellman")]
    BadAlgebra { protocol: String, algebra: String },
    #[error("role {role} is defined more than once")]
    DuplicateRole { role: String },
    #[error("role {role}: variable {var} is declared more than once")]
    DuplicateVariable { role: String, var: String },
    #[error("role {role}: variable {var} is not declared")]
    UndeclaredVariable { role: String, var: String },
    #[error("role {role}: uniq-gen {atom} never occurs in the trace")]
    UnusedUniqGen { role: String, atom: String },
    #[error("role {role}: uniq-gen {term} is not an atom")]
    UniqGenNotAtomic { role: String, term: String },
    #[error("role {role}: uniq-gen {atom} first occurs in a reception or observation")]
    UniqGenNotOriginating { role: String, atom: String },
    #[error("rule {rule}: unknown role {role}")]
    RuleUnknownRole { rule: String, role: String },
    #[error("rule {rule}: role {role} has no parameter {param}")]
    RuleUnknownParam { rule: String, role: String, param: String },
    #[error("rule {rule}: role {role} has no node {index}")]
    RuleBadPosition { rule: String, role: String, index: usize },
    #[error("rule {rule}: {detail}")]
    RuleShape { rule: String, detail: String },
    #[error("skeleton refers to unknown protocol {protocol}")]
    UnknownProtocol { protocol: String },
    #[error("skeleton refers to unknown role {role}")]
    UnknownRole { role: String },
    #[error("strand of role {role} has height {height}, outside 1..={max}")]
    HeightOutOfRange { role: String, height: usize, max: usize },
    #[error("strand of role {role} binds unknown variable {var}")]
    UnknownRoleVariable { role: String, var: String },
    #[error("strand of role {role} binds {var} to ill-sorted {term}")]
    BindingSort { role: String, var: String, term: String },
    #[error("skeleton term {term} uses undeclared variable {var}")]
    SkeletonUndeclared { term: String, var: String },
}

/// The single rule shape the analyzer supports: two strands of `role` that
/// both reach node `index` and agree on every parameter in `params` are the
/// same strand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleShape {
    pub role: String,
    pub index: usize,
    pub params: Vec<String>,
}

pub fn rule_shape(rule: &RuleDef) -> Result<RuleShape, String> {
    let [z0, z1] = rule.strand_vars.as_slice() else {
        return Err("expected exactly two strand variables".into());
    };
    let (c0, c1) = &rule.conclusion;
    if !((c0 == z0 && c1 == z1) || (c0 == z1 && c1 == z0)) {
        return Err("conclusion must equate the two strand variables".into());
    }
    let mut role = None;
    let mut positions = [None, None];
    let mut params: Vec<(String, [Option<String>; 2])> = Vec::new();
    let slot = |z: &str| if z == z0 { Some(0) } else if z == z1 { Some(1) } else { None };
    for p in &rule.hypothesis {
        let (r, z) = match p {
            Pred::Position { role, strand, .. } | Pred::Param { role, strand, .. } => (role, strand),
        };
        if *role.get_or_insert(r.clone()) != *r {
            return Err("all predicates must concern one role".into());
        }
        let i = slot(z).ok_or("predicate over an unquantified strand")?;
        match p {
            Pred::Position { index, .. } => positions[i] = Some(*index),
            Pred::Param { param, value, .. } => {
                let entry = match params.iter_mut().find(|(n, _)| n == param) {
                    Some(e) => e,
                    None => {
                        params.push((param.clone(), [None, None]));
                        params.last_mut().unwrap()
                    }
                };
                entry.1[i] = Some(value.clone());
            }
        }
    }
    let role = role.ok_or("empty hypothesis")?;
    let index = match positions {
        [Some(a), Some(b)] if a == b => a,
        _ => return Err("both strands need the same position predicate".into()),
    };
    let mut names = Vec::new();
    for (name, [a, b]) in params {
        match (a, b) {
            (Some(a), Some(b)) if a == b => names.push(name),
            _ => return Err(format!("parameter {name} must be shared by both strands")),
        }
    }
    Ok(RuleShape {
        role,
        index,
        params: names,
    })
}

fn validate_role(r: &RoleDef, out: &mut Vec<Diagnostic>) {
    let mut seen = BTreeSet::new();
    for v in &r.vars {
        if !seen.insert(v.name.clone()) {
            out.push(Diagnostic::DuplicateVariable {
                role: r.name.clone(),
                var: v.name.to_string(),
            });
        }
    }
    let declared = |v: &Var| r.vars.contains(v);
    let mut undeclared = BTreeSet::new();
    for e in &r.trace {
        for v in e.msg.vars() {
            if !declared(&v) {
                undeclared.insert(v.name.to_string());
            }
        }
    }
    for t in &r.uniq_gen {
        for v in t.vars() {
            if !declared(&v) {
                undeclared.insert(v.name.to_string());
            }
        }
    }
    for var in undeclared {
        out.push(Diagnostic::UndeclaredVariable {
            role: r.name.clone(),
            var,
        });
    }
    for t in &r.uniq_gen {
        if !matches!(t, Term::Var(_)) {
            out.push(Diagnostic::UniqGenNotAtomic {
                role: r.name.clone(),
                term: t.to_string(),
            });
            continue;
        }
        match r.trace.iter().find(|e| e.msg.occurs(t)) {
            None => out.push(Diagnostic::UnusedUniqGen {
                role: r.name.clone(),
                atom: t.to_string(),
            }),
            Some(e) if !e.dir.is_outbound() => out.push(Diagnostic::UniqGenNotOriginating {
                role: r.name.clone(),
                atom: t.to_string(),
            }),
            Some(_) => {}
        }
    }
}

fn validate_rule(p: &ProtocolDef, rule: &RuleDef, out: &mut Vec<Diagnostic>) {
    for pred in &rule.hypothesis {
        let (role, param, index) = match pred {
            Pred::Position { role, index, .. } => (role, None, Some(*index)),
            Pred::Param { role, param, .. } => (role, Some(param), None),
        };
        let Some(r) = p.role(role) else {
            out.push(Diagnostic::RuleUnknownRole {
                rule: rule.name.clone(),
                role: role.clone(),
            });
            continue;
        };
        if let Some(param) = param {
            if r.var(param).is_none() {
                out.push(Diagnostic::RuleUnknownParam {
                    rule: rule.name.clone(),
                    role: role.clone(),
                    param: param.clone(),
                });
            }
        }
        if let Some(index) = index {
            if index >= r.trace.len() {
                out.push(Diagnostic::RuleBadPosition {
                    rule: rule.name.clone(),
                    role: role.clone(),
                    index,
                });
            }
        }
    }
    if let Err(detail) = rule_shape(rule) {
        out.push(Diagnostic::RuleShape {
            rule: rule.name.clone(),
            detail,
        });
    }
}

/// Checks a protocol definition.  Empty iff well-formed.
pub fn validate(p: &ProtocolDef) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if p.algebra != "diffie-hellman" {
        out.push(Diagnostic::BadAlgebra {
            protocol: p.name.clone(),
            algebra: p.algebra.clone(),
        });
    }
    let mut names = BTreeSet::new();
    for r in &p.roles {
        if !names.insert(r.name.as_str()) {
            out.push(Diagnostic::DuplicateRole { role: r.name.clone() });
        }
        validate_role(r, &mut out);
    }
    for rule in &p.rules {
        validate_rule(p, rule, &mut out);
    }
    out
}

/// Checks a skeleton against the protocol it names.
pub fn validate_skeleton(s: &SkeletonDef, p: &ProtocolDef) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if s.protocol != p.name {
        out.push(Diagnostic::UnknownProtocol {
            protocol: s.protocol.clone(),
        });
    }
    let mut implicit: Vec<Var> = Vec::new();
    for st in &s.strands {
        let Some(r) = p.role(&st.role) else {
            out.push(Diagnostic::UnknownRole { role: st.role.clone() });
            continue;
        };
        if st.height == 0 || st.height > r.trace.len() {
            out.push(Diagnostic::HeightOutOfRange {
                role: st.role.clone(),
                height: st.height,
                max: r.trace.len(),
            });
        }
        for (name, t) in &st.bindings {
            match r.var(name) {
                None => out.push(Diagnostic::UnknownRoleVariable {
                    role: st.role.clone(),
                    var: name.clone(),
                }),
                Some(v) if !t.sort().le(v.sort) => out.push(Diagnostic::BindingSort {
                    role: st.role.clone(),
                    var: name.clone(),
                    term: t.to_string(),
                }),
                Some(_) => {}
            }
            check_declared(t, &s.vars, &[], &mut out);
        }
        implicit.extend(
            r.vars
                .iter()
                .filter(|v| !st.bindings.iter().any(|(b, _)| **b == *v.name))
                .cloned(),
        );
    }
    for t in s.listeners.iter().chain(&s.non_orig).chain(s.neq.iter().flat_map(|(a, b)| [a, b])) {
        check_declared(t, &s.vars, &implicit, &mut out);
    }
    out
}

fn check_declared(t: &Term, vars: &[Var], implicit: &[Var], out: &mut Vec<Diagnostic>) {
    for v in t.vars() {
        if !vars.contains(&v) && !implicit.contains(&v) {
            out.push(Diagnostic::SkeletonUndeclared {
                term: t.to_string(),
                var: v.name.to_string(),
            });
        }
    }
}

/// Every diagnostic for a parsed file: each protocol, then each skeleton
/// against the most recent protocol of its name.
pub fn validate_file(m: &ModelFile) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut protos: Vec<&ProtocolDef> = Vec::new();
    for d in &m.defs {
        match d {
            Definition::Protocol(p) => {
                out.extend(validate(p));
                protos.push(p);
            }
            Definition::Skeleton(s) => match protos.iter().rev().find(|p| p.name == s.protocol) {
                Some(p) => out.extend(validate_skeleton(s, p)),
                None => out.push(Diagnostic::UnknownProtocol {
                    protocol: s.protocol.clone(),
                }),
            },
        }
    }
    out
}
