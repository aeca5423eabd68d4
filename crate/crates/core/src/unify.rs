//! Unification and one-way matching modulo the exponent theory.
//!
//! Everything except exponent products is a free symbol.  Products are
//! multisets; the solver cancels common factors and then binds one exponent
//! variable at a time, either to a single factor on the other side or, when
//! the variable is the only factor left on its side, to the whole residual
//! product.  This is a restricted AC procedure: it does not produce
//! unifiers in which variables on both sides absorb several factors at
//! once.  Results are sound; completeness holds for the equations the
//! strand search generates, where at most one side of a product carries
//! unbound variables.

use crate::subst::Substitution;
use crate::term::{Sort, Term, Var};

/// Supplier of fresh exponent variables.
#[derive(Debug, Clone)]
pub struct Fresh {
    prefix: String,
    next: u32,
}

impl Fresh {
    pub fn new(prefix: impl Into<String>, next: u32) -> Fresh {
        Fresh {
            prefix: prefix.into(),
            next,
        }
    }

    /// A supplier whose names cannot collide with variables in `terms`.
    pub fn avoiding<'a>(terms: impl IntoIterator<Item = &'a Term>) -> Fresh {
        let mut next = 0;
        for t in terms {
            for v in t.vars() {
                if let Some(n) = v.name.strip_prefix("_w").and_then(|s| s.parse::<u32>().ok()) {
                    next = next.max(n + 1);
                }
            }
        }
        Fresh::new("_w", next)
    }

    pub fn next_index(&self) -> u32 {
        self.next
    }

    pub fn expt(&mut self) -> Var {
        let v = Var::new(format!("{}{}", self.prefix, self.next), Sort::Expt);
        self.next += 1;
        v
    }
}

enum Eqn {
    Term(Term, Term),
    Prod(Vec<Term>, Vec<Term>),
}

/// Complete set (within the restricted theory) of unifiers of two canonical
/// terms.  Empty means not unifiable.
pub fn unify(t1: &Term, t2: &Term) -> Vec<Substitution> {
    let mut fresh = Fresh::avoiding([t1, t2]);
    unify_in(t1, t2, &Substitution::new(), &mut fresh)
}

/// Unifiers of `t1` and `t2` that extend `sigma`.
pub fn unify_in(t1: &Term, t2: &Term, sigma: &Substitution, fresh: &mut Fresh) -> Vec<Substitution> {
    unify_all(&[(t1.clone(), t2.clone())], sigma, fresh)
}

/// Simultaneous unifiers of every pair, extending `sigma`.
pub fn unify_all(pairs: &[(Term, Term)], sigma: &Substitution, fresh: &mut Fresh) -> Vec<Substitution> {
    let eqs = pairs
        .iter()
        .rev()
        .map(|(a, b)| Eqn::Term(a.clone(), b.clone()))
        .collect();
    let mut out = Vec::new();
    solve(eqs, sigma.clone(), fresh, &mut out);
    let mut uniq: Vec<Substitution> = Vec::with_capacity(out.len());
    for s in out {
        if !uniq.contains(&s) {
            uniq.push(s);
        }
    }
    uniq
}

/// Binding that makes variable `v` equal to `t`, respecting sorts.
fn bind_var(sigma: &Substitution, v: &Var, t: &Term) -> Option<Substitution> {
    let mut s = sigma.clone();
    match t {
        Term::Var(w) => {
            if w.sort.le(v.sort) {
                s.bind_solved(v.clone(), t.clone());
            } else if v.sort.le(w.sort) {
                s.bind_solved(w.clone(), Term::Var(v.clone()));
            } else {
                return None;
            }
        }
        _ => {
            if t.contains_var(v) || !t.sort().le(v.sort) {
                return None;
            }
            s.bind_solved(v.clone(), t.clone());
        }
    }
    Some(s)
}

fn solve(mut eqs: Vec<Eqn>, mut sigma: Substitution, fresh: &mut Fresh, out: &mut Vec<Substitution>) {
    while let Some(eq) = eqs.pop() {
        match eq {
            Eqn::Term(s, t) => {
                let s = sigma.apply(&s);
                let t = sigma.apply(&t);
                if s == t {
                    continue;
                }
                match (&s, &t) {
                    (Term::Var(v), _) => match bind_var(&sigma, v, &t) {
                        Some(next) => sigma = next,
                        None => return,
                    },
                    (_, Term::Var(v)) => match bind_var(&sigma, v, &s) {
                        Some(next) => sigma = next,
                        None => return,
                    },
                    (Term::Exp(b1, p1), Term::Exp(b2, p2)) => {
                        // Same base, equal powers.
                        let mut same = std::mem::take(&mut eqs);
                        let rest = clone_eqs(&same);
                        same.push(Eqn::Prod(p1.factors(), p2.factors()));
                        same.push(Eqn::Term((**b1).clone(), (**b2).clone()));
                        solve(same, sigma.clone(), fresh, out);
                        // A base variable absorbing part of the other power.
                        for (vb, ob, vp, op) in [(b1, b2, p1, p2), (b2, b1, p2, p1)] {
                            if let Term::Var(v) = &**vb {
                                if v.sort == Sort::Base && vb != ob {
                                    let w = fresh.expt();
                                    let mut s2 = sigma.clone();
                                    s2.bind_solved(v.clone(), Term::exp_raw((**ob).clone(), Term::Var(w.clone())));
                                    let mut e2 = clone_eqs(&rest);
                                    let mut lhs = vp.factors();
                                    lhs.push(Term::Var(w));
                                    e2.push(Eqn::Prod(lhs, op.factors()));
                                    solve(e2, s2, fresh, out);
                                }
                            }
                        }
                        return;
                    }
                    (Term::Mul(_), _) | (_, Term::Mul(_)) => {
                        if !(s.sort().is_exponent() && t.sort().is_exponent()) {
                            return;
                        }
                        eqs.push(Eqn::Prod(s.factors(), t.factors()));
                    }
                    (Term::Pair(a1, b1), Term::Pair(a2, b2))
                    | (Term::Enc(a1, b1), Term::Enc(a2, b2))
                    | (Term::Ltk(a1, b1), Term::Ltk(a2, b2)) => {
                        eqs.push(Eqn::Term((**b1).clone(), (**b2).clone()));
                        eqs.push(Eqn::Term((**a1).clone(), (**a2).clone()));
                    }
                    (Term::Hash(xs), Term::Hash(ys)) if xs.len() == ys.len() => {
                        for (x, y) in xs.iter().zip(ys).rev() {
                            eqs.push(Eqn::Term(x.clone(), y.clone()));
                        }
                    }
                    _ => return,
                }
            }
            Eqn::Prod(l, r) => {
                let l = apply_factors(&sigma, &l);
                let r = apply_factors(&sigma, &r);
                let (l, r) = cancel(l, r);
                if l.is_empty() && r.is_empty() {
                    continue;
                }
                if l.is_empty() || r.is_empty() {
                    return;
                }
                let (side, other) = match first_var(&l) {
                    Some(_) => (l, r),
                    None => match first_var(&r) {
                        Some(_) => (r, l),
                        None => return,
                    },
                };
                let v = first_var(&side).unwrap().clone();
                let mut options: Vec<Substitution> = Vec::new();
                if side.len() == 1 && other.len() > 1 && v.sort == Sort::Expt {
                    let prod = Term::product(other.clone()).unwrap();
                    if !prod.contains_var(&v) {
                        let mut s2 = sigma.clone();
                        s2.bind_solved(v.clone(), prod);
                        options.push(s2);
                    }
                }
                let mut seen: Vec<&Term> = Vec::new();
                for f in &other {
                    if seen.contains(&f) {
                        continue;
                    }
                    seen.push(f);
                    if let Some(s2) = bind_var(&sigma, &v, f) {
                        if !options.contains(&s2) {
                            options.push(s2);
                        }
                    }
                }
                for s2 in options {
                    let mut e2 = clone_eqs(&eqs);
                    e2.push(Eqn::Prod(side.clone(), other.clone()));
                    solve(e2, s2, fresh, out);
                }
                return;
            }
        }
    }
    out.push(sigma);
}

fn clone_eqs(eqs: &[Eqn]) -> Vec<Eqn> {
    eqs.iter()
        .map(|e| match e {
            Eqn::Term(a, b) => Eqn::Term(a.clone(), b.clone()),
            Eqn::Prod(a, b) => Eqn::Prod(a.clone(), b.clone()),
        })
        .collect()
}

fn apply_factors(sigma: &Substitution, fs: &[Term]) -> Vec<Term> {
    let mut out: Vec<Term> = fs.iter().flat_map(|f| sigma.apply(f).into_factors()).collect();
    out.sort_by(crate::term::factor_cmp);
    out
}

fn cancel(mut l: Vec<Term>, mut r: Vec<Term>) -> (Vec<Term>, Vec<Term>) {
    let mut i = 0;
    while i < l.len() {
        if let Some(j) = r.iter().position(|x| *x == l[i]) {
            r.remove(j);
            l.remove(i);
        } else {
            i += 1;
        }
    }
    (l, r)
}

fn first_var(fs: &[Term]) -> Option<&Var> {
    fs.iter().find_map(Term::as_var)
}

// ---------------------------------------------------------------------------
// One-way matching.  Variables of the pattern are bound to subterms of the
// target; the target's variables are rigid.  Bindings are stored raw (not in
// solved form) because pattern and target may share variable names.

/// All substitutions `s` extending `sigma` with `s(pattern) == target`,
/// where `s` only binds pattern variables.
pub fn match_term(pattern: &Term, target: &Term, sigma: &Substitution) -> Vec<Substitution> {
    let mut out = Vec::new();
    match_eqs(vec![MEq::Term(pattern.clone(), target.clone())], sigma.clone(), &mut out);
    out
}

/// Simultaneous matching of several pattern/target pairs.
pub fn match_all(pairs: &[(Term, Term)], sigma: &Substitution) -> Vec<Substitution> {
    let mut out = Vec::new();
    let eqs = pairs
        .iter()
        .rev()
        .map(|(p, t)| MEq::Term(p.clone(), t.clone()))
        .collect();
    match_eqs(eqs, sigma.clone(), &mut out);
    out
}

enum MEq {
    Term(Term, Term),
    Prod(Vec<Term>, Vec<Term>),
}

fn clone_meqs(eqs: &[MEq]) -> Vec<MEq> {
    eqs.iter()
        .map(|e| match e {
            MEq::Term(a, b) => MEq::Term(a.clone(), b.clone()),
            MEq::Prod(a, b) => MEq::Prod(a.clone(), b.clone()),
        })
        .collect()
}

fn match_eqs(mut eqs: Vec<MEq>, mut sigma: Substitution, out: &mut Vec<Substitution>) {
    while let Some(eq) = eqs.pop() {
        match eq {
            MEq::Term(p, t) => match (&p, &t) {
                (Term::Var(v), _) => match sigma.get(v) {
                    Some(bound) => {
                        if *bound != t {
                            return;
                        }
                    }
                    None => {
                        if !t.sort().le(v.sort) {
                            return;
                        }
                        sigma.insert_raw(v.clone(), t.clone());
                    }
                },
                (Term::Exp(pb, pp), Term::Exp(tb, tp)) => {
                    let rest = std::mem::take(&mut eqs);
                    let tf = tp.factors();
                    // Base to base.
                    let mut e1 = clone_meqs(&rest);
                    e1.push(MEq::Prod(pp.factors(), tf.clone()));
                    e1.push(MEq::Term((**pb).clone(), (**tb).clone()));
                    match_eqs(e1, sigma.clone(), out);
                    // Pattern base variable absorbing part of the target power.
                    if let Term::Var(v) = &**pb {
                        if v.sort == Sort::Base {
                            match sigma.get(v) {
                                Some(Term::Exp(bb, bp)) => {
                                    if **bb == **tb {
                                        if let Some(rem) = crate::term::factor_difference(&tf, &bp.factors()) {
                                            let mut e2 = clone_meqs(&rest);
                                            e2.push(MEq::Prod(pp.factors(), rem));
                                            match_eqs(e2, sigma.clone(), out);
                                        }
                                    }
                                }
                                Some(_) => {}
                                None => {
                                    for q in sub_multisets(&tf) {
                                        if q.is_empty() || q.len() == tf.len() {
                                            continue;
                                        }
                                        let rem = crate::term::factor_difference(&tf, &q).unwrap();
                                        let mut s2 = sigma.clone();
                                        s2.insert_raw(v.clone(), Term::exp_raw((**tb).clone(), Term::product(q).unwrap()));
                                        let mut e2 = clone_meqs(&rest);
                                        e2.push(MEq::Prod(pp.factors(), rem));
                                        match_eqs(e2, s2, out);
                                    }
                                }
                            }
                        }
                    }
                    return;
                }
                (Term::Mul(_), _) | (_, Term::Mul(_)) => {
                    if !(p.sort().is_exponent() && t.sort().is_exponent()) {
                        return;
                    }
                    eqs.push(MEq::Prod(p.factors(), t.factors()));
                }
                (Term::Pair(a1, b1), Term::Pair(a2, b2))
                | (Term::Enc(a1, b1), Term::Enc(a2, b2))
                | (Term::Ltk(a1, b1), Term::Ltk(a2, b2)) => {
                    eqs.push(MEq::Term((**b1).clone(), (**b2).clone()));
                    eqs.push(MEq::Term((**a1).clone(), (**a2).clone()));
                }
                (Term::Hash(xs), Term::Hash(ys)) if xs.len() == ys.len() => {
                    for (x, y) in xs.iter().zip(ys).rev() {
                        eqs.push(MEq::Term(x.clone(), y.clone()));
                    }
                }
                _ => {
                    if p != t || !p.is_atomic() {
                        return;
                    }
                }
            },
            MEq::Prod(pf, tf) => {
                // Subtract fixed pattern factors (constants and bound vars).
                let mut remaining = tf.clone();
                let mut free: Vec<Var> = Vec::new();
                for f in &pf {
                    let fixed: Vec<Term> = match f {
                        Term::Var(v) => match sigma.get(v) {
                            Some(b) => b.factors(),
                            None => {
                                free.push(v.clone());
                                continue;
                            }
                        },
                        other => vec![other.clone()],
                    };
                    match crate::term::factor_difference(&remaining, &fixed) {
                        Some(r) => remaining = r,
                        None => return,
                    }
                }
                if free.is_empty() {
                    if remaining.is_empty() {
                        continue;
                    }
                    return;
                }
                let v = free[0].clone();
                let k = free.iter().filter(|w| **w == v).count();
                let others_free = free.len() > k;
                for q in sub_multisets(&remaining) {
                    if q.is_empty() {
                        continue;
                    }
                    let q_term = Term::product(q.clone()).unwrap();
                    if !q_term.sort().le(v.sort) {
                        continue;
                    }
                    let need: Vec<Term> = (0..k).flat_map(|_| q.iter().cloned()).collect();
                    let Some(left) = crate::term::factor_difference(&remaining, &need) else {
                        continue;
                    };
                    if !others_free && !left.is_empty() {
                        continue;
                    }
                    let mut s2 = sigma.clone();
                    s2.insert_raw(v.clone(), q_term);
                    let mut e2 = clone_meqs(&eqs);
                    e2.push(MEq::Prod(pf.clone(), tf.clone()));
                    match_eqs(e2, s2, out);
                }
                return;
            }
        }
    }
    out.push(sigma);
}

/// Distinct sub-multisets of a sorted factor list (the empty one included).
pub fn sub_multisets(fs: &[Term]) -> Vec<Vec<Term>> {
    let mut groups: Vec<(Term, usize)> = Vec::new();
    for f in fs {
        match groups.last_mut() {
            Some((g, n)) if g == f => *n += 1,
            _ => groups.push((f.clone(), 1)),
        }
    }
    let mut out = vec![Vec::new()];
    for (g, n) in groups {
        let mut next = Vec::new();
        for base in &out {
            for k in 0..=n {
                let mut v = base.clone();
                v.extend(std::iter::repeat(g.clone()).take(k));
                next.push(v);
            }
        }
        out = next;
    }
    for v in &mut out {
        v.sort_by(crate::term::factor_cmp);
    }
    out
}

/// Whether `sigma` maps variables injectively onto variables.
pub fn is_renaming(sigma: &Substitution) -> bool {
    let mut seen = std::collections::BTreeSet::new();
    sigma.iter().all(|(_, t)| match t {
        Term::Var(w) => seen.insert(w.clone()),
        _ => false,
    })
}

/// `a` and `b` are equal up to a consistent renaming of variables.
pub fn is_variant(a: &Term, b: &Term) -> bool {
    match_term(a, b, &Substitution::new()).iter().any(is_renaming)
        && match_term(b, a, &Substitution::new()).iter().any(is_renaming)
}
