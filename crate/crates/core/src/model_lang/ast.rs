use crate::term::{Term, Var};

use super::sexp::Pos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    Send,
    Recv,
    Init,
    Obsv,
}

impl Dir {
    pub fn as_str(self) -> &'static str {
        match self {
            Dir::Send => "send",
            Dir::Recv => "recv",
            Dir::Init => "init",
            Dir::Obsv => "obsv",
        }
    }

    /// Send and init are the events at which a value can originate.
    pub fn is_outbound(self) -> bool {
        matches!(self, Dir::Send | Dir::Init)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Event {
    pub dir: Dir,
    pub msg: Term,
}

impl Event {
    pub fn new(dir: Dir, msg: Term) -> Event {
        Event { dir, msg }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleDef {
    pub name: String,
    pub vars: Vec<Var>,
    pub trace: Vec<Event>,
    pub uniq_gen: Vec<Term>,
    pub pos: Pos,
}

impl RoleDef {
    pub fn var(&self, name: &str) -> Option<&Var> {
        self.vars.iter().find(|v| &*v.name == name)
    }
}

/// `(p "role" z i)` or `(p "role" "param" z value)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pred {
    Position {
        role: String,
        strand: String,
        index: usize,
    },
    Param {
        role: String,
        param: String,
        strand: String,
        value: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleDef {
    pub name: String,
    pub strand_vars: Vec<String>,
    pub vars: Vec<Var>,
    pub hypothesis: Vec<Pred>,
    pub conclusion: (String, String),
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolDef {
    pub name: String,
    pub algebra: String,
    pub roles: Vec<RoleDef>,
    pub rules: Vec<RuleDef>,
    pub pos: Pos,
}

impl ProtocolDef {
    pub fn role(&self, name: &str) -> Option<&RoleDef> {
        self.roles.iter().find(|r| r.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrandDef {
    pub role: String,
    pub height: usize,
    /// Role variable name to skeleton term.
    pub bindings: Vec<(String, Term)>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonDef {
    pub protocol: String,
    pub vars: Vec<Var>,
    pub strands: Vec<StrandDef>,
    pub listeners: Vec<Term>,
    pub non_orig: Vec<Term>,
    pub neq: Vec<(Term, Term)>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Definition {
    Protocol(ProtocolDef),
    Skeleton(SkeletonDef),
}

/// The definitions of one model file, in source order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModelFile {
    pub defs: Vec<Definition>,
}

impl ModelFile {
    pub fn protocols(&self) -> impl Iterator<Item = &ProtocolDef> {
        self.defs.iter().filter_map(|d| match d {
            Definition::Protocol(p) => Some(p),
            _ => None,
        })
    }

    pub fn skeletons(&self) -> impl Iterator<Item = &SkeletonDef> {
        self.defs.iter().filter_map(|d| match d {
            Definition::Skeleton(s) => Some(s),
            _ => None,
        })
    }

    pub fn protocol(&self, name: &str) -> Option<&ProtocolDef> {
        self.protocols().find(|p| p.name == name)
    }
}
