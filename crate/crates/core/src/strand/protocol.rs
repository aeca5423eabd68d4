use std::sync::{Arc, OnceLock};

use crate::model_lang::{rule_shape, validate, Diagnostic, Dir, Event, ProtocolDef};
use crate::term::{Sort, Term, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Role {
    pub name: String,
    pub vars: Vec<Var>,
    pub trace: Vec<Event>,
    pub uniq_gen: Vec<Var>,
    pub listener: bool,
}

impl Role {
    pub fn len(&self) -> usize {
        self.trace.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trace.is_empty()
    }

    pub fn var(&self, name: &str) -> Option<&Var> {
        self.vars.iter().find(|v| &*v.name == name)
    }

    /// The built-in listener role: receive a value, then repeat it.
    pub fn listener() -> Arc<Role> {
        static LISTENER: OnceLock<Arc<Role>> = OnceLock::new();
        LISTENER
            .get_or_init(|| {
                let x = Var::new("x", Sort::Mesg);
                Arc::new(Role {
                    name: "listener".into(),
                    vars: vec![x.clone()],
                    trace: vec![
                        Event::new(Dir::Recv, Term::Var(x.clone())),
                        Event::new(Dir::Send, Term::Var(x)),
                    ],
                    uniq_gen: Vec::new(),
                    listener: true,
                })
            })
            .clone()
    }
}

/// "Two strands of `role` reaching height `min_height` that agree on
/// `params` are one strand."
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    pub role: String,
    pub min_height: usize,
    pub params: Vec<Var>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Protocol {
    pub name: String,
    pub roles: Vec<Arc<Role>>,
    pub rules: Vec<Rule>,
}

impl Protocol {
    /// Validates and compiles a protocol definition.
    pub fn from_def(def: &ProtocolDef) -> Result<Protocol, Vec<Diagnostic>> {
        let diags = validate(def);
        if !diags.is_empty() {
            return Err(diags);
        }
        let roles: Vec<Arc<Role>> = def
            .roles
            .iter()
            .map(|r| {
                Arc::new(Role {
                    name: r.name.clone(),
                    vars: r.vars.clone(),
                    trace: r.trace.clone(),
                    uniq_gen: r.uniq_gen.iter().filter_map(|t| t.as_var().cloned()).collect(),
                    listener: false,
                })
            })
            .collect();
        let rules = def
            .rules
            .iter()
            .map(|r| {
                let shape = rule_shape(r).expect("validated");
                let role = roles.iter().find(|x| x.name == shape.role).expect("validated");
                Rule {
                    name: r.name.clone(),
                    role: shape.role.clone(),
                    min_height: shape.index + 1,
                    params: shape.params.iter().map(|p| role.var(p).expect("validated").clone()).collect(),
                }
            })
            .collect();
        Ok(Protocol {
            name: def.name.clone(),
            roles,
            rules,
        })
    }

    pub fn role(&self, name: &str) -> Option<&Arc<Role>> {
        self.roles.iter().find(|r| r.name == name)
    }

    pub fn role_index(&self, name: &str) -> Option<usize> {
        self.roles.iter().position(|r| r.name == name)
    }

    /// The same protocol without its rules.
    pub fn without_rules(&self) -> Protocol {
        Protocol {
            rules: Vec::new(),
            ..self.clone()
        }
    }
}
