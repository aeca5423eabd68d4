use super::skeleton::Skeleton;

fn acceptable(sk: &Skeleton) -> bool {
    sk.check() && sk.realized()
}

/// Greedily drops non-point-of-view strands, lowers heights (never below
/// the point of view) and drops ordering edges, keeping the skeleton
/// realized.
pub fn minimize(sk: &Skeleton) -> Skeleton {
    let mut cur = sk.clone();
    loop {
        let mut changed = false;
        for i in (cur.pov_len()..cur.strands.len()).rev() {
            let mut c = cur.clone();
            c.remove_strand(i);
            if acceptable(&c) {
                cur = c;
                changed = true;
            }
        }
        for i in 0..cur.strands.len() {
            let floor = cur.pov.get(i).copied().unwrap_or(1);
            while cur.strands[i].height > floor {
                let mut c = cur.clone();
                c.set_height(i, cur.strands[i].height - 1);
                if !acceptable(&c) {
                    break;
                }
                cur = c;
                changed = true;
            }
        }
        for e in cur.edges.clone() {
            let mut c = cur.clone();
            c.edges.remove(&e);
            if acceptable(&c) {
                cur = c;
                changed = true;
            }
        }
        if !changed {
            return cur;
        }
    }
}

/// Whether no single deletion (strand, edge, or trailing node) keeps the
/// skeleton realized.
pub fn is_minimal(sk: &Skeleton) -> bool {
    for i in sk.pov_len()..sk.strands.len() {
        let mut c = sk.clone();
        c.remove_strand(i);
        if acceptable(&c) {
            return false;
        }
    }
    for e in &sk.edges {
        let mut c = sk.clone();
        c.edges.remove(e);
        if acceptable(&c) {
            return false;
        }
    }
    true
}

/// Whether strand `i` contributes nothing: none of its atoms is reserved
/// elsewhere, no observation relies on its inits, every other reception
/// realized without it stays so, and at the remaining receptions each of its
/// earlier transmissions is derivable without it.
pub fn is_redundant(sk: &Skeleton, i: usize) -> bool {
    use crate::model_lang::Dir;
    if i < sk.pov_len() {
        return false;
    }
    let s = &sk.strands[i];
    for t in s.uniq_gen() {
        if sk
            .strands
            .iter()
            .enumerate()
            .any(|(j, o)| j != i && o.first_occurrence(&t).is_some())
        {
            return false;
        }
    }
    let Some(order) = sk.order() else {
        return false;
    };
    let mut without = sk.clone();
    without.splice_out(i);
    let Some(order2) = without.order() else {
        return false;
    };
    let shift = |(a, p): (usize, usize)| if a > i { (a - 1, p) } else { (a, p) };
    for n in sk.nodes().filter(|n| n.0 != i) {
        let n2 = shift(n);
        match sk.event(n).dir {
            Dir::Obsv => {
                if sk.node_realized(&order, n) && !without.node_realized(&order2, n2) {
                    return false;
                }
            }
            Dir::Recv => {
                if without.node_realized(&order2, n2) {
                    continue;
                }
                let mut kb = None;
                for p in 0..s.height {
                    let m = (i, p);
                    if s.event(p).dir == Dir::Send && order.before(m, n) {
                        let kb = kb.get_or_insert_with(|| without.knowledge_before(&order2, n2).analyze());
                        if !kb.derivable(s.msg(p)) {
                            return false;
                        }
                    }
                }
            }
            Dir::Send | Dir::Init => {}
        }
    }
    true
}

/// Drops redundant strands, newest first, until none is left.
pub fn drop_redundant(mut sk: Skeleton) -> Skeleton {
    while let Some(i) = (sk.pov_len()..sk.strands.len()).rev().find(|&i| is_redundant(&sk, i)) {
        sk.splice_out(i);
        sk.path.push(format!("drop redundant strand {i}"));
    }
    sk
}
