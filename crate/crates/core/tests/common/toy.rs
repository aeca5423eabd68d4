//! Exhaustive shape enumeration for a small nonce-echo protocol, written
//! independently of the search: candidate skeletons are generated from
//! strand multisets, variable partitions and edge subsets, then filtered by
//! hand-written realization, minimality and generality checks.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use srp_shapes::model_lang::{parse, Dir};
use srp_shapes::strand::{load, Node, Role, Skeleton};
use srp_shapes::{Sort, Substitution, Term, Var};

pub const TOY: &str = r#"
(defprotocol echo diffie-hellman
  (defrole init
    (vars (n text) (k skey))
    (trace (send (enc n k)) (recv n))
    (uniq-gen n))
  (defrole resp
    (vars (n text) (k skey))
    (trace (recv (enc n k)) (send n))))

(defskeleton echo
  (vars (n text) (k skey))
  (defstrand init 2 (n n) (k k))
  (non-orig k))

(defskeleton echo
  (vars (n text) (k skey))
  (defstrand resp 2 (n n) (k k))
  (non-orig k))
"#;

pub fn povs() -> Vec<(String, Skeleton)> {
    load(&parse(TOY).unwrap())
        .unwrap()
        .into_iter()
        .map(|p| (p.name, p.skeleton))
        .collect()
}

fn roles(sk: &Skeleton) -> Vec<Arc<Role>> {
    sk.protocol.roles.iter().filter(|r| !r.listener).cloned().collect()
}

fn nodes(sk: &Skeleton) -> Vec<Node> {
    sk.strands
        .iter()
        .enumerate()
        .flat_map(|(i, s)| (0..s.height).map(move |p| (i, p)))
        .collect()
}

fn dir(sk: &Skeleton, (s, p): Node) -> Dir {
    sk.strands[s].events()[p].dir
}

fn msg(sk: &Skeleton, (s, p): Node) -> &Term {
    &sk.strands[s].events()[p].msg
}

/// Strict precedence, or `None` when cyclic.
fn precedes(sk: &Skeleton) -> Option<HashMap<(Node, Node), bool>> {
    let ns = nodes(sk);
    let mut succ: HashMap<Node, Vec<Node>> = HashMap::new();
    for &(s, p) in &ns {
        if p + 1 < sk.strands[s].height {
            succ.entry((s, p)).or_default().push((s, p + 1));
        }
    }
    for &(a, b) in &sk.edges {
        succ.entry(a).or_default().push(b);
    }
    let mut out = HashMap::new();
    for &a in &ns {
        let mut seen = BTreeSet::new();
        let mut stack = succ.get(&a).cloned().unwrap_or_default();
        while let Some(x) = stack.pop() {
            if seen.insert(x) {
                stack.extend(succ.get(&x).cloned().unwrap_or_default());
            }
        }
        if seen.contains(&a) {
            return None;
        }
        for &b in &ns {
            out.insert((a, b), seen.contains(&b));
        }
    }
    Some(out)
}

fn occurs(t: &Term, a: &Term) -> bool {
    t == a
        || match t {
            Term::Enc(x, y) | Term::Pair(x, y) => occurs(x, a) || occurs(y, a),
            _ => false,
        }
}

/// Uniquely generated atoms: the nonce of every init strand.
fn reserved(sk: &Skeleton) -> Vec<Term> {
    sk.strands
        .iter()
        .filter(|s| s.role.name == "init")
        .map(|s| match s.msg(0) {
            Term::Enc(n, _) => (**n).clone(),
            t => panic!("unexpected init message {t}"),
        })
        .collect()
}

/// Distinct reserved atoms, each first occurring on a send of exactly one
/// strand; non-originating atoms carried by no message.
fn well_formed(sk: &Skeleton) -> bool {
    let r = reserved(sk);
    if r.iter().collect::<BTreeSet<_>>().len() != r.len() {
        return false;
    }
    for a in &r {
        let origins = sk
            .strands
            .iter()
            .filter(|s| s.events().iter().find(|e| occurs(&e.msg, a)).is_some_and(|e| e.dir == Dir::Send))
            .count();
        if origins != 1 {
            return false;
        }
    }
    sk.non_orig.iter().all(|k| {
        nodes(sk).into_iter().all(|n| match msg(sk, n) {
            Term::Enc(p, _) => !occurs(p, k),
            t => !occurs(t, k),
        })
    })
}

fn derivable(known: &[Term], goal: &Term, free: &dyn Fn(&Term) -> bool) -> bool {
    let mut k: BTreeSet<Term> = known.iter().cloned().collect();
    loop {
        let mut more = Vec::new();
        for t in &k {
            if let Term::Enc(p, key) = t {
                if synth(&k, key, free) && !k.contains(&**p) {
                    more.push((**p).clone());
                }
            }
        }
        if more.is_empty() {
            return synth(&k, goal, free);
        }
        k.extend(more);
    }
}

fn synth(k: &BTreeSet<Term>, t: &Term, free: &dyn Fn(&Term) -> bool) -> bool {
    k.contains(t)
        || match t {
            Term::Enc(p, key) => synth(k, p, free) && synth(k, key, free),
            Term::Var(_) => free(t),
            _ => false,
        }
}

fn realized(sk: &Skeleton) -> bool {
    let Some(before) = precedes(sk) else { return false };
    let r = reserved(sk);
    let free = |t: &Term| !r.contains(t) && !sk.non_orig.contains(t);
    nodes(sk).into_iter().filter(|&n| dir(sk, n) == Dir::Recv).all(|n| {
        let known: Vec<Term> = nodes(sk)
            .into_iter()
            .filter(|&m| dir(sk, m) == Dir::Send && before[&(m, n)])
            .map(|m| msg(sk, m).clone())
            .collect();
        derivable(&known, msg(sk, n), &free)
    })
}

fn ok(sk: &Skeleton) -> bool {
    well_formed(sk) && realized(sk)
}

fn drop_strand(sk: &Skeleton, i: usize) -> Skeleton {
    let mut c = sk.clone();
    c.strands.remove(i);
    let shift = |(s, p): Node| (if s > i { s - 1 } else { s }, p);
    c.edges = sk
        .edges
        .iter()
        .filter(|(a, b)| a.0 != i && b.0 != i)
        .map(|&(a, b)| (shift(a), shift(b)))
        .collect();
    c
}

fn minimal(sk: &Skeleton) -> bool {
    let pov = sk.pov.len();
    for i in pov..sk.strands.len() {
        if ok(&drop_strand(sk, i)) {
            return false;
        }
        if sk.strands[i].height > 1 {
            let mut c = sk.clone();
            let h = sk.strands[i].height - 1;
            c.strands[i].height = h;
            c.edges.retain(|(a, b)| !(a.0 == i && a.1 >= h) && !(b.0 == i && b.1 >= h));
            if ok(&c) {
                return false;
            }
        }
    }
    sk.edges.iter().all(|e| {
        let mut c = sk.clone();
        c.edges.remove(e);
        !ok(&c)
    })
}

fn matches(pat: &Term, t: &Term, s: &mut HashMap<Var, Term>) -> bool {
    match (pat, t) {
        (Term::Var(v), _) => {
            let sort_ok = match t {
                Term::Var(w) => w.sort == v.sort,
                _ => v.sort == Sort::Mesg,
            };
            sort_ok && s.entry(v.clone()).or_insert_with(|| t.clone()) == t
        }
        (Term::Enc(a, b), Term::Enc(c, d)) | (Term::Pair(a, b), Term::Pair(c, d)) => {
            matches(a, c, s) && matches(b, d, s)
        }
        _ => pat == t,
    }
}

/// A homomorphism from `a` into `b`, found by trying every strand map.
pub fn hom(a: &Skeleton, b: &Skeleton) -> bool {
    let Some(bb) = precedes(b) else { return false };
    let pov = a.pov.len();
    fn go(a: &Skeleton, b: &Skeleton, bb: &HashMap<(Node, Node), bool>, map: &mut Vec<usize>, pov: usize) -> bool {
        let i = map.len();
        if i == a.strands.len() {
            let mut s = HashMap::new();
            for (x, &y) in map.iter().enumerate() {
                for p in 0..a.strands[x].height {
                    if !matches(a.strands[x].msg(p), b.strands[y].msg(p), &mut s) {
                        return false;
                    }
                }
            }
            let img = |(x, p): Node| (map[x], p);
            let sub = |t: &Term| match t {
                Term::Var(v) => s.get(v).cloned().unwrap_or_else(|| t.clone()),
                _ => t.clone(),
            };
            return a.edges.iter().all(|&(x, y)| bb[&(img(x), img(y))])
                && a.non_orig.iter().all(|k| b.non_orig.contains(&sub(k)));
        }
        let cands: Vec<usize> = if i < pov { vec![i] } else { (pov..b.strands.len()).collect() };
        for j in cands {
            let (sa, sb) = (&a.strands[i], &b.strands[j]);
            if map.contains(&j) || sa.role.name != sb.role.name || sb.height < sa.height {
                continue;
            }
            map.push(j);
            if go(a, b, bb, map, pov) {
                return true;
            }
            map.pop();
        }
        false
    }
    pov == b.pov.len() && go(a, b, &bb, &mut Vec::new(), pov)
}

pub fn iso(a: &Skeleton, b: &Skeleton) -> bool {
    let heights = |s: &Skeleton| {
        let mut h: Vec<_> = s.strands.iter().map(|x| (x.role.name.clone(), x.height)).collect();
        h.sort();
        h
    };
    a.edges.len() == b.edges.len() && heights(a) == heights(b) && hom(a, b) && hom(b, a)
}

/// Every way to identify each new variable with an older one of its sort.
fn partitions(sk: &Skeleton, fresh: &[Var]) -> Vec<Skeleton> {
    let old: Vec<Var> = sk.vars_in_order().into_iter().filter(|v| !fresh.contains(v)).collect();
    let mut out = Vec::new();
    fn go(sk: &Skeleton, fresh: &[Var], reps: &mut Vec<Var>, pairs: &mut Vec<(Var, Term)>, out: &mut Vec<Skeleton>) {
        let Some((v, rest)) = fresh.split_first() else {
            let mut c = sk.clone();
            c.apply(&Substitution::from_pairs(pairs.clone()).unwrap());
            out.push(c);
            return;
        };
        for r in reps.clone().iter().filter(|r| r.sort == v.sort) {
            pairs.push((v.clone(), Term::Var(r.clone())));
            go(sk, rest, reps, pairs, out);
            pairs.pop();
        }
        reps.push(v.clone());
        go(sk, rest, reps, pairs, out);
        reps.pop();
    }
    go(sk, fresh, &mut old.clone(), &mut Vec::new(), &mut out);
    out
}

/// Shapes of `pov` with at most `max_strands` strands, by brute force.
pub fn enumerate(pov: &Skeleton, max_strands: usize) -> (Vec<Skeleton>, usize) {
    let kinds: Vec<(Arc<Role>, usize)> = roles(pov)
        .into_iter()
        .flat_map(|r| (1..=r.trace.len()).map(move |h| (r.clone(), h)))
        .collect();
    let mut layouts: Vec<Vec<usize>> = vec![vec![]];
    for _ in pov.strands.len()..max_strands {
        let longer: Vec<Vec<usize>> = layouts
            .iter()
            .filter(|l| l.len() + pov.strands.len() < max_strands)
            .flat_map(|l| {
                (l.last().copied().unwrap_or(0)..kinds.len()).map(move |k| {
                    let mut m = l.clone();
                    m.push(k);
                    m
                })
            })
            .collect();
        layouts.extend(longer);
        layouts.sort();
        layouts.dedup();
    }
    let mut candidates = 0;
    let mut found: Vec<Skeleton> = Vec::new();
    for layout in layouts {
        let mut base = pov.clone();
        let before: BTreeSet<Var> = base.vars_in_order().into_iter().collect();
        for &k in &layout {
            base.add_strand(kinds[k].0.clone(), kinds[k].1);
        }
        let fresh: Vec<Var> = base.vars_in_order().into_iter().filter(|v| !before.contains(v)).collect();
        for sk in partitions(&base, &fresh) {
            let ns = nodes(&sk);
            let cross: Vec<(Node, Node)> = ns
                .iter()
                .filter(|&&a| dir(&sk, a) == Dir::Send)
                .flat_map(|&a| ns.iter().filter(move |&&b| b.0 != a.0).map(move |&b| (a, b)))
                .filter(|&(_, b)| dir(&sk, b) == Dir::Recv)
                .collect();
            for mask in 0u32..(1 << cross.len()) {
                let mut c = sk.clone();
                c.edges = (0..cross.len()).filter(|i| mask >> i & 1 == 1).map(|i| cross[i]).collect();
                candidates += 1;
                if ok(&c) && minimal(&c) {
                    found.push(c);
                }
            }
        }
    }
    let general: Vec<Skeleton> = found
        .iter()
        .filter(|c| !found.iter().any(|d| hom(d, c) && !hom(c, d)))
        .cloned()
        .collect();
    let mut shapes: Vec<Skeleton> = Vec::new();
    for g in general {
        if !shapes.iter().any(|s| iso(s, &g)) {
            shapes.push(g);
        }
    }
    (shapes, candidates)
}
