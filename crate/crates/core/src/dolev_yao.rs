//! Adversary derivability.
//!
//! The adversary holds a set of observed messages.  Analysis closes that set
//! under decomposition: pairs split, and an encryption opens when its key is
//! derivable.  Hashes and exponentials are opaque.  Derivability of a goal
//! then asks whether it can be composed from the closure plus public and
//! adversary-chosen material.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::term::{factor_difference, Term};
use crate::unify::sub_multisets;

/// Observed messages plus origination assumptions.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    observed: Vec<Term>,
    members: HashSet<Term>,
    /// Terms that never become available to the adversary.
    pub non_orig: BTreeSet<Term>,
    /// Atoms that originate only at their declared regular nodes, so the
    /// adversary cannot choose them.
    pub uniq_gen: BTreeSet<Term>,
    analyzed: bool,
}

impl KnowledgeBase {
    pub fn new(
        observed: impl IntoIterator<Item = Term>,
        non_orig: impl IntoIterator<Item = Term>,
        uniq_gen: impl IntoIterator<Item = Term>,
    ) -> KnowledgeBase {
        let mut kb = KnowledgeBase {
            non_orig: non_orig.into_iter().collect(),
            uniq_gen: uniq_gen.into_iter().collect(),
            ..KnowledgeBase::default()
        };
        for t in observed {
            kb.insert(t);
        }
        kb
    }

    fn insert(&mut self, t: Term) -> bool {
        if self.non_orig.contains(&t) || self.members.contains(&t) {
            return false;
        }
        self.members.insert(t.clone());
        self.observed.push(t);
        self.analyzed = false;
        true
    }

    /// Terms currently held, in insertion order.
    pub fn terms(&self) -> &[Term] {
        &self.observed
    }

    pub fn contains(&self, t: &Term) -> bool {
        self.members.contains(t)
    }

    pub fn is_analyzed(&self) -> bool {
        self.analyzed
    }

    /// Adds a message and re-analyzes.
    pub fn observe(&mut self, t: Term) {
        if self.insert(t) {
            self.close();
        }
    }

    /// Least fixpoint of decomposition.
    pub fn analyze(&self) -> KnowledgeBase {
        let mut kb = self.clone();
        kb.close();
        kb
    }

    fn close(&mut self) {
        let mut opened: HashSet<usize> = HashSet::new();
        loop {
            // Split pairs.
            let mut i = 0;
            while i < self.observed.len() {
                if let Term::Pair(a, b) = self.observed[i].clone() {
                    self.insert(*a);
                    self.insert(*b);
                }
                i += 1;
            }
            let mut changed = false;
            let mut memo = HashMap::new();
            for i in 0..self.observed.len() {
                if opened.contains(&i) {
                    continue;
                }
                if let Term::Enc(p, k) = &self.observed[i] {
                    if self.derive(k, &mut memo) {
                        let p = (**p).clone();
                        opened.insert(i);
                        if self.insert(p) {
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        self.analyzed = true;
    }

    /// Material the adversary has without observing anything: the
    /// generator, tags, names, and any atom that is neither reserved nor
    /// non-originating.
    pub fn is_free(&self, t: &Term) -> bool {
        if self.non_orig.contains(t) || self.uniq_gen.contains(t) {
            return false;
        }
        match t {
            Term::Gen | Term::Tag(_) | Term::Name(_) => true,
            Term::Var(_) | Term::Text(_) | Term::Atom(..) | Term::Ltk(..) => true,
            _ => false,
        }
    }

    /// Whether `goal` can be composed from the closure.  Analyzes first if
    /// needed.
    pub fn derivable(&self, goal: &Term) -> bool {
        if !self.analyzed {
            return self.analyze().derivable(goal);
        }
        self.derive(goal, &mut HashMap::new())
    }

    fn derive(&self, t: &Term, memo: &mut HashMap<Term, bool>) -> bool {
        if self.non_orig.contains(t) {
            return false;
        }
        if self.members.contains(t) {
            return true;
        }
        if let Some(&r) = memo.get(t) {
            return r;
        }
        let r = match t {
            Term::Var(_)
            | Term::Tag(_)
            | Term::Name(_)
            | Term::Text(_)
            | Term::Atom(..)
            | Term::Gen
            | Term::Ltk(..) => self.is_free(t),
            Term::Pair(a, b) | Term::Enc(a, b) => self.derive(a, memo) && self.derive(b, memo),
            Term::Hash(xs) | Term::Mul(xs) => xs.iter().all(|x| self.derive(x, memo)),
            Term::Exp(base, power) => {
                let fs = power.factors();
                (self.derive(base, memo) && fs.iter().all(|f| self.derive(f, memo)))
                    || self.observed.iter().any(|k| match k {
                        Term::Exp(b2, q) if b2 == base => match factor_difference(&fs, &q.factors()) {
                            Some(rest) => rest.iter().all(|f| self.derive(f, memo)),
                            None => false,
                        },
                        _ => false,
                    })
            }
        };
        memo.insert(t.clone(), r);
        r
    }

    /// Underivable terms whose availability would help derive `goal`: the
    /// goal itself, its underivable components, partial exponentials it
    /// could be raised from, and keys guarding observed encryptions that
    /// carry any of these.  Deterministic order; non-originating terms are
    /// left out since nothing can supply them.
    pub fn needs(&self, goal: &Term) -> Vec<Term> {
        let kb = if self.analyzed { self.clone() } else { self.analyze() };
        let mut out = Vec::new();
        let mut memo = HashMap::new();
        kb.collect_needs(goal, &mut out, &mut memo);
        out
    }

    fn collect_needs(&self, t: &Term, out: &mut Vec<Term>, memo: &mut HashMap<Term, bool>) {
        if self.non_orig.contains(t) || out.contains(t) || self.derive(t, memo) {
            return;
        }
        out.push(t.clone());
        // A composite with a non-originating part can never be built, so
        // its other parts are not worth supplying.
        if t.children().iter().any(|c| self.non_orig.contains(*c)) {
            return;
        }
        match t {
            Term::Pair(a, b) | Term::Enc(a, b) => {
                self.collect_needs(a, out, memo);
                self.collect_needs(b, out, memo);
            }
            Term::Hash(xs) | Term::Mul(xs) => {
                for x in xs {
                    self.collect_needs(x, out, memo);
                }
            }
            Term::Exp(base, power) => {
                let fs = power.factors();
                for f in &fs {
                    self.collect_needs(f, out, memo);
                }
                for q in sub_multisets(&fs) {
                    if !q.is_empty() && q.len() < fs.len() {
                        let partial = Term::exp_raw((**base).clone(), Term::product(q).unwrap());
                        self.collect_needs(&partial, out, memo);
                    }
                }
                self.collect_needs(base, out, memo);
            }
            _ => {}
        }
        for k in &self.observed {
            if let Term::Enc(p, key) = k {
                if p.carried().contains(&t) {
                    self.collect_needs(key, out, memo);
                }
            }
        }
    }
}

/// Convenience: analyze `kb` and test `goal`.
pub fn derivable(kb: &KnowledgeBase, goal: &Term) -> bool {
    kb.derivable(goal)
}

/// Convenience: the analyzed closure of `kb`.
pub fn analyze(kb: &KnowledgeBase) -> KnowledgeBase {
    kb.analyze()
}
