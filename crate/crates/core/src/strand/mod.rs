//! Bounded strand-space search: a point-of-view skeleton is refined by
//! explaining unrealized receptions and observations until every node is
//! realized; realized skeletons are minimized into shapes.

mod explain;
mod homomorphism;
mod minimize;
mod protocol;
mod rules;
mod search;
mod skeleton;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::model_lang::{validate_file, Diagnostic, Dir, ModelFile};

pub use explain::explain;
pub use homomorphism::{homomorphism, isomorphic};
pub use minimize::{drop_redundant, is_minimal, is_redundant, minimize};
pub use protocol::{Protocol, Role, Rule};
pub use rules::{apply_rules, merge};
pub use search::{search, Outcome, Stats};
pub use skeleton::{Node, Order, Skeleton, Strand};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub max_strands: usize,
    pub max_depth: usize,
    pub max_branch: usize,
}

impl Default for Bounds {
    fn default() -> Bounds {
        Bounds {
            max_strands: 8,
            max_depth: 16,
            max_branch: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Complete,
    BoundsExhausted,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Complete => "complete",
            Status::BoundsExhausted => "bounds-exhausted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeStyle {
    /// The message arrives exactly as sent.
    Solid,
    /// The adversary altered or recomposed the message in transit.
    Dashed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeEdge {
    pub from: Node,
    pub to: Node,
    pub style: EdgeStyle,
    /// Init to obsv: state, not a network message.
    pub state: bool,
}

#[derive(Debug, Clone)]
pub struct Shape {
    pub skeleton: Skeleton,
    pub edges: Vec<ShapeEdge>,
}

impl Shape {
    pub fn new(skeleton: Skeleton) -> Shape {
        let edges = skeleton
            .edges
            .iter()
            .map(|&(from, to)| ShapeEdge {
                from,
                to,
                style: if skeleton.msg(from) == skeleton.msg(to) {
                    EdgeStyle::Solid
                } else {
                    EdgeStyle::Dashed
                },
                state: skeleton.event(from).dir == Dir::Init,
            })
            .collect();
        Shape { skeleton, edges }
    }

    pub fn strands_of(&self, role: &str) -> Vec<usize> {
        self.skeleton
            .strands
            .iter()
            .enumerate()
            .filter(|(_, s)| s.role.name == role)
            .map(|(i, _)| i)
            .collect()
    }
}

/// A point of view ready for search.
#[derive(Debug, Clone)]
pub struct PointOfView {
    pub name: String,
    pub skeleton: Skeleton,
}

/// Default name of a point of view: the first strand's role, `-pov`, then
/// `-listener-<term>` per listener and `-neq` when disequalities are
/// present; repeats get `-2`, `-3`, ...
fn pov_name(def: &crate::model_lang::SkeletonDef, taken: &[String]) -> String {
    let mut name = match def.strands.first() {
        Some(s) => format!("{}-pov", s.role),
        None => "listener-pov".to_string(),
    };
    for l in &def.listeners {
        name.push_str(&format!("-listener-{l}"));
    }
    if !def.neq.is_empty() {
        name.push_str("-neq");
    }
    let mut candidate = name.clone();
    let mut k = 2;
    while taken.contains(&candidate) {
        candidate = format!("{name}-{k}");
        k += 1;
    }
    candidate
}

/// Validates a parsed file and instantiates every skeleton in it.
pub fn load(file: &ModelFile) -> Result<Vec<PointOfView>, Vec<Diagnostic>> {
    let diags = validate_file(file);
    if !diags.is_empty() {
        return Err(diags);
    }
    let mut compiled: Vec<(&crate::model_lang::ProtocolDef, Arc<Protocol>)> = Vec::new();
    let mut out: Vec<PointOfView> = Vec::new();
    for d in &file.defs {
        match d {
            crate::model_lang::Definition::Protocol(p) => {
                compiled.push((p, Arc::new(Protocol::from_def(p)?)));
            }
            crate::model_lang::Definition::Skeleton(s) => {
                let (pdef, proto) = compiled
                    .iter()
                    .rev()
                    .find(|(p, _)| p.name == s.protocol)
                    .expect("validated");
                let taken: Vec<String> = out.iter().map(|p| p.name.clone()).collect();
                out.push(PointOfView {
                    name: pov_name(s, &taken),
                    skeleton: Skeleton::from_def(s, pdef, proto.clone())?,
                });
            }
        }
    }
    Ok(out)
}
