use crate::unify::{unify_all, Fresh};

use super::protocol::Rule;
use super::skeleton::{Node, Skeleton};

fn matches(rule: &Rule, sk: &Skeleton, i: usize, j: usize) -> bool {
    let (a, b) = (&sk.strands[i], &sk.strands[j]);
    a.role.name == rule.role
        && b.role.name == rule.role
        && a.height >= rule.min_height
        && b.height >= rule.min_height
        && rule.params.iter().all(|p| a.inst[p] == b.inst[p])
}

/// Merges strand `j` into strand `i` (`i < j`, same role): unifies their
/// instances, keeps the greater height and redirects `j`'s edges.  One
/// result per unifier that leaves the skeleton well formed.
pub fn merge(sk: &Skeleton, i: usize, j: usize) -> Vec<Skeleton> {
    let (a, b) = (&sk.strands[i], &sk.strands[j]);
    let pairs: Vec<_> = a
        .inst
        .iter()
        .map(|(v, t)| (t.clone(), b.inst[v].clone()))
        .collect();
    let mut fresh = Fresh::new("w-", sk.next_var);
    let unifiers = unify_all(&pairs, &Default::default(), &mut fresh);
    let mut out = Vec::new();
    for sigma in unifiers {
        let mut m = sk.clone();
        m.next_var = fresh.next_index().max(sk.next_var);
        m.apply(&sigma);
        m.strands[i].height = a.height.max(b.height);
        if j < m.pov.len() {
            m.pov[i] = m.pov[i].max(m.pov[j]);
        }
        let redirect = |(s, p): Node| if s == j { (i, p) } else { (s, p) };
        m.edges = m
            .edges
            .iter()
            .map(|&(x, y)| (redirect(x), redirect(y)))
            .filter(|(x, y)| x.0 != y.0)
            .collect();
        m.remove_strand(j);
        if m.check() {
            out.push(m);
        }
    }
    out
}

/// Applies the protocol's rules to a fixpoint.  An empty result means the
/// skeleton contradicts a rule.
pub fn apply_rules(sk: Skeleton) -> Vec<Skeleton> {
    let protocol = sk.protocol.clone();
    for rule in &protocol.rules {
        for j in 0..sk.strands.len() {
            for i in 0..j {
                if matches(rule, &sk, i, j) {
                    let mut out = Vec::new();
                    for mut m in merge(&sk, i, j) {
                        m.path.push(format!("rule {}: merge strands {i} and {j}", rule.name));
                        out.extend(apply_rules(m));
                    }
                    return out;
                }
            }
        }
    }
    vec![sk]
}
