use std::collections::HashSet;

use crate::model_lang::Dir;
use crate::subst::Substitution;
use crate::term::Term;
use crate::unify::{unify_in, Fresh};

use super::minimize::drop_redundant;
use super::rules::apply_rules;
use super::skeleton::{Node, Order, Skeleton};

/// Where an explaining event comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    /// A node already in the skeleton.
    Existing(Node),
    /// Strand `.0` extended so that position `.1` is its last node.
    Extend(usize, usize),
    /// A new instance of role `.0` ending at position `.1`.
    New(usize, usize),
}

/// Candidate sources of a `dir` event for node `n`, in exploration order:
/// existing nodes, then extensions, then new strands by role and height.
fn sources(sk: &Skeleton, order: &Order, n: Node, dir: Dir) -> Vec<Source> {
    let mut out = Vec::new();
    let after_n = |m: Node| m == n || order.before(n, m);
    for m in sk.nodes() {
        if sk.event(m).dir == dir && !after_n(m) {
            out.push(Source::Existing(m));
        }
    }
    for (i, s) in sk.strands.iter().enumerate() {
        if s.is_listener() || i == n.0 || after_n((i, s.height - 1)) {
            continue;
        }
        for p in s.height..s.role.len() {
            if s.event(p).dir == dir {
                out.push(Source::Extend(i, p));
            }
        }
    }
    for (r, role) in sk.protocol.roles.iter().enumerate() {
        for (p, e) in role.trace.iter().enumerate() {
            if e.dir == dir {
                out.push(Source::New(r, p));
            }
        }
    }
    out
}

/// The skeleton with the source in place, and the source node.
fn place(sk: &Skeleton, src: Source) -> (Skeleton, Node) {
    let mut child = sk.clone();
    let node = match src {
        Source::Existing(m) => m,
        Source::Extend(i, p) => {
            child.strands[i].height = p + 1;
            (i, p)
        }
        Source::New(r, p) => {
            let role = sk.protocol.roles[r].clone();
            (child.add_strand(role, p + 1), p)
        }
    };
    (child, node)
}

fn describe(sk: &Skeleton, src: Source, n: Node, via: &Term) -> String {
    let (what, m) = match src {
        Source::Existing(m) => ("existing", m),
        Source::Extend(i, p) => ("extend", (i, p)),
        Source::New(r, p) => {
            return format!(
                "{}.{}: new {} strand, height {}, explaining {via}",
                n.0,
                n.1 + 1,
                sk.protocol.roles[r].name,
                p + 1
            )
        }
    };
    format!("{}.{}: {what} {}.{}, explaining {via}", n.0, n.1 + 1, m.0, m.1 + 1)
}

/// Unifies `target` against `pattern` inside `child`; one skeleton per
/// unifier, with the ordering edge `m -> n` added.
fn bind(child: &Skeleton, m: Node, n: Node, target: &Term, pattern: &Term) -> Vec<(Skeleton, Substitution)> {
    let mut fresh = Fresh::new("w-", child.next_var);
    let unifiers = unify_in(pattern, target, &Substitution::new(), &mut fresh);
    let next = fresh.next_index().max(child.next_var);
    unifiers
        .into_iter()
        .map(|sigma| {
            let mut c = child.clone();
            c.next_var = next;
            let applied = c.apply(&sigma);
            if m.0 != n.0 {
                c.edges.insert((m, n));
            }
            (c, applied)
        })
        .collect()
}

/// Encryptions on the carried paths from `msg` to `goal`, and whether some
/// path reaches `goal` through pairs alone.
fn wrappers(msg: &Term, goal: &Term, out: &mut Vec<Term>) -> bool {
    if msg == goal {
        return true;
    }
    match msg {
        Term::Pair(a, b) => {
            let x = wrappers(a, goal, out);
            let y = wrappers(b, goal, out);
            x || y
        }
        Term::Enc(p, _) => {
            let before = out.len();
            let plain = wrappers(p, goal, out);
            if plain || out.len() > before {
                out.insert(before, msg.clone());
            }
            false
        }
        _ => false,
    }
}

/// A new strand supplying `goal` at its node `m` must come by `goal`
/// somehow.  Originating it, holding it from state, or knowing it in a
/// non-carried position needs nothing further.  Otherwise it received
/// `goal` carried in an earlier message.  Through pairs alone that means the
/// adversary already had it, so the strand adds nothing.  Inside an
/// encryption the adversary could only have built, the same holds, so some
/// encryption on the way must be one a transmission of the skeleton already
/// carries; the two are unified, one refinement per unifier.
fn anchor(c: &Skeleton, m: Node, goal: &Term) -> Vec<(Skeleton, Term)> {
    let (y, p) = m;
    let strand = &c.strands[y];
    let mut carrying = Vec::new();
    for q in 0..p {
        let ev = strand.event(q);
        if !ev.msg.occurs(goal) {
            continue;
        }
        let carried = ev.msg.carried().contains(&goal);
        match ev.dir {
            Dir::Obsv => return vec![(c.clone(), goal.clone())],
            Dir::Recv if !carried => return vec![(c.clone(), goal.clone())],
            Dir::Recv => carrying.push(q),
            Dir::Send | Dir::Init => {}
        }
    }
    if carrying.is_empty() {
        return vec![(c.clone(), goal.clone())];
    }
    let mut protected = Vec::new();
    for (j, s) in c.strands.iter().enumerate() {
        if j == y {
            continue;
        }
        for e in s.events() {
            if e.dir == Dir::Send {
                for t in e.msg.carried() {
                    if matches!(t, Term::Enc(..)) && !protected.contains(t) {
                        protected.push(t.clone());
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    for q in carrying {
        let mut ws = Vec::new();
        wrappers(&strand.event(q).msg, goal, &mut ws);
        for w in &ws {
            for e in &protected {
                let mut fresh = Fresh::new("w-", c.next_var);
                for sigma in unify_in(w, e, &Substitution::new(), &mut fresh) {
                    let mut c2 = c.clone();
                    c2.next_var = fresh.next_index().max(c.next_var);
                    let applied = c2.apply(&sigma);
                    if c2.check() {
                        out.push((c2, applied.apply(goal)));
                    }
                }
            }
        }
    }
    out
}

/// Refinements of `sk` that explain the unrealized node `n`.  A reception
/// is explained by making one of its critical terms available: some
/// transmission carrying a unifiable subterm is put before it.  An
/// observation is explained by an init of a unifiable record put before it.
/// Results are well formed, closed under the rules, and distinct.
pub fn explain(sk: &Skeleton, n: Node) -> Vec<Skeleton> {
    let Some(order) = sk.order() else {
        return Vec::new();
    };
    let ev = sk.event(n).clone();
    let mut raw: Vec<Skeleton> = Vec::new();
    match ev.dir {
        Dir::Recv => {
            let needs = sk.knowledge_before(&order, n).needs(&ev.msg);
            let srcs = sources(sk, &order, n, Dir::Send);
            for t in &needs {
                for &src in &srcs {
                    let (child, m) = place(sk, src);
                    let carried: Vec<Term> = child.msg(m).carried().into_iter().cloned().collect();
                    for c in &carried {
                        for (mut c2, sigma) in bind(&child, m, n, t, c) {
                            let Some(o2) = c2.order() else { continue };
                            let goal = sigma.apply(t);
                            if !c2.knowledge_before(&o2, n).derivable(&goal) {
                                continue;
                            }
                            c2.path.push(describe(sk, src, n, c));
                            match src {
                                Source::New(..) => {
                                    for (c3, g3) in anchor(&c2, m, &goal) {
                                        let Some(o3) = c3.order() else { continue };
                                        if c3.knowledge_before(&o3, n).derivable(&g3) {
                                            raw.push(c3);
                                        }
                                    }
                                }
                                _ => raw.push(c2),
                            }
                        }
                    }
                }
            }
        }
        Dir::Obsv => {
            for src in sources(sk, &order, n, Dir::Init) {
                let (child, m) = place(sk, src);
                let record = child.msg(m).clone();
                for (mut c2, _) in bind(&child, m, n, &ev.msg, &record) {
                    if c2.check() {
                        c2.path.push(describe(sk, src, n, &record));
                        raw.push(c2);
                    }
                }
            }
        }
        Dir::Send | Dir::Init => {}
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for c in raw {
        if !c.check() {
            continue;
        }
        for r in apply_rules(c) {
            let r = drop_redundant(r);
            if seen.insert(r.key()) {
                out.push(r);
            }
        }
    }
    out
}
