use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;

use srp_shapes::dolev_yao::KnowledgeBase;
use srp_shapes::{canonicalize, substitute, unify, Sort, Substitution, Term, Var};

// Exponent and DH terms.

pub fn exp_factor() -> impl Strategy<Value = Term> {
    prop_oneof![
        (0..3u8).prop_map(|i| Term::Atom(format!("r{i}").into(), Sort::Rndx)),
        (0..3u8).prop_map(|i| Term::var(format!("e{i}"), Sort::Expt)),
        (0..2u8).prop_map(|i| Term::var(format!("x{i}"), Sort::Rndx)),
    ]
}

/// A power possibly given as a nested, unsorted product.
pub fn raw_power() -> impl Strategy<Value = Term> {
    prop_oneof![
        exp_factor(),
        prop::collection::vec(exp_factor(), 2..4).prop_map(Term::Mul),
        (prop::collection::vec(exp_factor(), 2..3), exp_factor())
            .prop_map(|(inner, f)| Term::Mul(vec![f, Term::Mul(inner)])),
    ]
}

pub fn raw_base() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![Just(Term::Gen), (0..2u8).prop_map(|i| Term::var(format!("g{i}"), Sort::Base))];
    leaf.prop_recursive(2, 6, 1, |inner| {
        (inner, raw_power()).prop_map(|(b, p)| Term::Exp(Box::new(b), Box::new(p)))
    })
}

pub fn raw_mesg() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (0..3u8).prop_map(|i| Term::var(format!("m{i}"), Sort::Mesg)),
        (0..3u8).prop_map(|i| Term::var(format!("t{i}"), Sort::Text)),
        (0..2u8).prop_map(|i| Term::var(format!("n{i}"), Sort::Name)),
        (0..2u8).prop_map(|i| Term::text(format!("c{i}"))),
        (0..2u8).prop_map(|i| Term::name(format!("p{i}"))),
        Just(Term::tag("lbl")),
        raw_base(),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::pair(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::enc(a, b)),
            prop::collection::vec(inner, 1..3).prop_map(Term::hash),
        ]
    })
}

pub fn canonical_mesg() -> impl Strategy<Value = Term> {
    raw_mesg().prop_map(|t| canonicalize(&t).expect("generated terms are well sorted"))
}

/// Pairs that often unify: independent terms, or a term and a renamed,
/// partially instantiated copy.
pub fn term_pair() -> impl Strategy<Value = (Term, Term)> {
    prop_oneof![
        (canonical_mesg(), canonical_mesg()),
        (canonical_mesg(), canonical_mesg(), any::<u64>()).prop_map(|(t, filler, seed)| {
            let mut k = seed;
            let u = t.map_vars(&mut |v| {
                k = k.rotate_left(7) ^ 0x9e37_79b9;
                match (k % 4, v.sort) {
                    (0, Sort::Mesg) => filler.clone(),
                    (1, _) => Term::var(format!("{}'", v.name), v.sort),
                    _ => Term::Var(v.clone()),
                }
            });
            (t, u)
        }),
    ]
}

pub fn unified(t1: &Term, t2: &Term, s: &Substitution) -> bool {
    substitute(t1, s).ok() == substitute(t2, s).ok() && substitute(t1, s).is_ok()
}



// Free fragment: no exponentials, checked against Robinson unification.

pub fn free_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (0..3u8).prop_map(|i| Term::var(format!("m{i}"), Sort::Mesg)),
        (0..2u8).prop_map(|i| Term::var(format!("t{i}"), Sort::Text)),
        (0..2u8).prop_map(|i| Term::var(format!("n{i}"), Sort::Name)),
        (0..2u8).prop_map(|i| Term::text(format!("c{i}"))),
        Just(Term::name("p")),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::pair(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::enc(a, b)),
            prop::collection::vec(inner, 1..3).prop_map(Term::hash),
        ]
    })
}

pub fn walk(t: &Term, s: &HashMap<Var, Term>) -> Term {
    match t {
        Term::Var(v) => match s.get(v) {
            Some(u) => walk(u, s),
            None => t.clone(),
        },
        Term::Pair(a, b) => Term::pair(walk(a, s), walk(b, s)),
        Term::Enc(a, b) => Term::enc(walk(a, s), walk(b, s)),
        Term::Hash(xs) => Term::hash(xs.iter().map(|x| walk(x, s)).collect()),
        _ => t.clone(),
    }
}

pub fn le(a: Sort, b: Sort) -> bool {
    a == b || b == Sort::Mesg
}

pub fn sort_of(t: &Term) -> Sort {
    match t {
        Term::Var(v) => v.sort,
        Term::Text(_) => Sort::Text,
        Term::Name(_) => Sort::Name,
        _ => Sort::Mesg,
    }
}

pub fn occurs(v: &Var, t: &Term) -> bool {
    match t {
        Term::Var(w) => v == w,
        Term::Pair(a, b) | Term::Enc(a, b) => occurs(v, a) || occurs(v, b),
        Term::Hash(xs) => xs.iter().any(|x| occurs(v, x)),
        _ => false,
    }
}

/// Textbook Robinson unification with sorts.
pub fn robinson(t1: &Term, t2: &Term) -> Option<HashMap<Var, Term>> {
    let mut s: HashMap<Var, Term> = HashMap::new();
    let mut stack = vec![(t1.clone(), t2.clone())];
    while let Some((a, b)) = stack.pop() {
        let (a, b) = (walk(&a, &s), walk(&b, &s));
        if a == b {
            continue;
        }
        match (&a, &b) {
            (Term::Var(v), Term::Var(w)) => {
                if le(w.sort, v.sort) {
                    s.insert(v.clone(), b.clone());
                } else if le(v.sort, w.sort) {
                    s.insert(w.clone(), a.clone());
                } else {
                    return None;
                }
            }
            (Term::Var(v), t) | (t, Term::Var(v)) => {
                if occurs(v, t) || !le(sort_of(t), v.sort) {
                    return None;
                }
                s.insert(v.clone(), t.clone());
            }
            (Term::Pair(a1, b1), Term::Pair(a2, b2)) | (Term::Enc(a1, b1), Term::Enc(a2, b2)) => {
                stack.push(((**a1).clone(), (**a2).clone()));
                stack.push(((**b1).clone(), (**b2).clone()));
            }
            (Term::Hash(xs), Term::Hash(ys)) if xs.len() == ys.len() => {
                stack.extend(xs.iter().cloned().zip(ys.iter().cloned()));
            }
            _ => return None,
        }
    }
    Some(s)
}

/// Whether `a` and `b` are equal up to a bijective renaming of variables.
pub fn variant(a: &Term, b: &Term, fwd: &mut HashMap<Var, Var>, back: &mut HashMap<Var, Var>) -> bool {
    match (a, b) {
        (Term::Var(v), Term::Var(w)) => {
            v.sort == w.sort
                && *fwd.entry(v.clone()).or_insert_with(|| w.clone()) == *w
                && *back.entry(w.clone()).or_insert_with(|| v.clone()) == *v
        }
        (Term::Pair(a1, b1), Term::Pair(a2, b2)) | (Term::Enc(a1, b1), Term::Enc(a2, b2)) => {
            variant(a1, a2, fwd, back) && variant(b1, b2, fwd, back)
        }
        (Term::Hash(xs), Term::Hash(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| variant(x, y, fwd, back))
        }
        _ => a == b,
    }
}


// Derivability against a brute-force closure over the finite universe of
// subterms.

pub fn dy_atom() -> impl Strategy<Value = Term> {
    prop_oneof![
        (0..4u8).prop_map(|i| Term::text(format!("t{i}"))),
        (0..2u8).prop_map(|i| Term::name(format!("a{i}"))),
        (0..2u8, 0..2u8).prop_map(|(i, j)| Term::ltk(Term::name(format!("a{i}")), Term::name(format!("a{j}"))).unwrap()),
    ]
}

pub fn dy_term() -> impl Strategy<Value = Term> {
    dy_atom().prop_recursive(3, 10, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::pair(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::enc(a, b)),
            prop::collection::vec(inner, 1..3).prop_map(Term::hash),
        ]
    })
}

#[derive(Debug, Clone)]
pub struct Kb {
    pub observed: Vec<Term>,
    pub non_orig: Vec<Term>,
    pub uniq_gen: Vec<Term>,
}

pub fn kb_strategy() -> impl Strategy<Value = Kb> {
    (
        prop::collection::vec(dy_term(), 0..5),
        prop::collection::vec(dy_atom(), 0..3),
        prop::collection::vec(dy_atom(), 0..3),
    )
        .prop_map(|(observed, non_orig, uniq_gen)| Kb {
            observed,
            non_orig,
            uniq_gen,
        })
}

pub fn subterms(t: &Term, out: &mut BTreeSet<Term>) {
    out.insert(t.clone());
    match t {
        Term::Pair(a, b) | Term::Enc(a, b) | Term::Ltk(a, b) => {
            subterms(a, out);
            subterms(b, out);
        }
        Term::Hash(xs) => xs.iter().for_each(|x| subterms(x, out)),
        _ => {}
    }
}

pub fn oracle(kb: &Kb, goal: &Term) -> bool {
    let mut universe = BTreeSet::new();
    for t in kb.observed.iter().chain([goal]) {
        subterms(t, &mut universe);
    }
    let banned = |t: &Term| kb.non_orig.contains(t);
    let mut known: BTreeSet<Term> = kb.observed.iter().filter(|t| !banned(t)).cloned().collect();
    for t in &universe {
        let atomic = matches!(t, Term::Text(_) | Term::Name(_) | Term::Ltk(..));
        if atomic && !banned(t) && !kb.uniq_gen.contains(t) {
            known.insert(t.clone());
        }
    }
    loop {
        let mut next = known.clone();
        for t in &known {
            match t {
                Term::Pair(a, b) => {
                    next.insert((**a).clone());
                    next.insert((**b).clone());
                }
                Term::Enc(p, k) if known.contains(&**k) => {
                    next.insert((**p).clone());
                }
                _ => {}
            }
        }
        for t in &universe {
            let ok = match t {
                Term::Pair(a, b) | Term::Enc(a, b) => known.contains(&**a) && known.contains(&**b),
                Term::Hash(xs) => xs.iter().all(|x| known.contains(x)),
                _ => false,
            };
            if ok {
                next.insert(t.clone());
            }
        }
        next.retain(|t| !banned(t));
        if next == known {
            return known.contains(goal);
        }
        known = next;
    }
}

pub fn build(kb: &Kb) -> KnowledgeBase {
    KnowledgeBase::new(kb.observed.clone(), kb.non_orig.clone(), kb.uniq_gen.clone())
}


// Checks shared by the property suites and the acceptance run.

pub fn check_idempotent(t: &Term) -> Result<(), TestCaseError> {
    let c = canonicalize(t).unwrap();
    prop_assert_eq!(canonicalize(&c).unwrap(), c);
    Ok(())
}

pub fn check_unifiers(t1: &Term, t2: &Term) -> Result<(), TestCaseError> {
    for s in unify(t1, t2) {
        prop_assert!(unified(t1, t2, &s), "{} vs {} under {}", t1, t2, s);
    }
    Ok(())
}

pub fn check_derivable(kb: &Kb, goal: &Term) -> Result<(), TestCaseError> {
    let k = build(kb);
    prop_assert_eq!(k.derivable(goal), oracle(kb, goal), "{:?} |- {}", kb, goal);
    for t in &kb.observed {
        prop_assert_eq!(k.derivable(t), oracle(kb, t));
    }
    Ok(())
}
