use std::collections::HashSet;

use crate::par::{self, Parallelism};

use super::explain::explain;
use super::homomorphism::{homomorphism, isomorphic};
use super::minimize::minimize;
use super::rules::apply_rules;
use super::skeleton::{Node, Skeleton};
use super::{Bounds, Shape, Status};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    pub expanded: usize,
    pub levels: usize,
    pub realized: usize,
    /// Refinements dropped for exceeding the strand bound.
    pub strand_cutoffs: usize,
    /// Nodes whose refinements were truncated by the branch bound.
    pub branch_cutoffs: usize,
    /// Whether the depth bound stopped the search.
    pub depth_cutoff: bool,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub shapes: Vec<Shape>,
    pub status: Status,
    pub stats: Stats,
}

enum Step {
    Realized(Skeleton),
    Children(Vec<Skeleton>, bool),
}

/// Explains the unrealized node with the fewest refinements, ties going
/// to the lowest (strand, position).
fn step(sk: &Skeleton, max_branch: usize) -> Step {
    let pending = sk.unrealized();
    if pending.is_empty() {
        return Step::Realized(sk.clone());
    }
    let mut best: Option<(Node, Vec<Skeleton>)> = None;
    for n in pending {
        let kids = explain(sk, n);
        let better = match &best {
            None => true,
            Some((_, b)) => kids.len() < b.len(),
        };
        if better {
            let done = kids.is_empty();
            best = Some((n, kids));
            if done {
                break;
            }
        }
    }
    let (_, mut kids) = best.expect("nonempty");
    let truncated = kids.len() > max_branch;
    kids.truncate(max_branch);
    Step::Children(kids, truncated)
}

/// Bounded breadth-first refinement of a point-of-view skeleton into its
/// shapes.
pub fn search(pov: &Skeleton, bounds: &Bounds, mode: Parallelism) -> Outcome {
    let mut stats = Stats::default();
    let mut exhausted = false;
    let mut seen = HashSet::new();
    let mut frontier: Vec<Skeleton> = if pov.check() { apply_rules(pov.clone()) } else { Vec::new() };
    frontier.retain(|s| seen.insert(s.key()));
    let mut found: Vec<Skeleton> = Vec::new();
    while !frontier.is_empty() {
        if stats.levels >= bounds.max_depth {
            exhausted = true;
            stats.depth_cutoff = true;
            break;
        }
        stats.levels += 1;
        stats.expanded += frontier.len();
        let steps = par::map(mode, &frontier, |sk| step(sk, bounds.max_branch));
        let mut next = Vec::new();
        for s in steps {
            match s {
                Step::Realized(sk) => found.push(sk),
                Step::Children(kids, truncated) => {
                    exhausted |= truncated;
                    stats.branch_cutoffs += truncated as usize;
                    for k in kids {
                        if k.strands.len() > bounds.max_strands {
                            exhausted = true;
                            stats.strand_cutoffs += 1;
                        } else if seen.insert(k.key()) {
                            next.push(k);
                        }
                    }
                }
            }
        }
        frontier = next;
    }
    stats.realized = found.len();
    let minimized = par::map(mode, &found, minimize);
    let mut distinct: Vec<Skeleton> = Vec::new();
    for m in minimized {
        if !distinct.iter().any(|d| isomorphic(d, &m)) {
            distinct.push(m);
        }
    }
    let keep: Vec<bool> = par::map_range(mode, distinct.len(), |i| {
        !distinct
            .iter()
            .enumerate()
            .any(|(j, d)| j != i && homomorphism(d, &distinct[i]) && !homomorphism(&distinct[i], d))
    });
    let shapes = distinct
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(s, _)| Shape::new(s))
        .collect();
    Outcome {
        shapes,
        status: if exhausted {
            Status::BoundsExhausted
        } else {
            Status::Complete
        },
        stats,
    }
}
