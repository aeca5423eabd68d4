use std::collections::BTreeMap;
use std::fmt;

use crate::term::{SortError, Term, Var};

/// A finite, sort-respecting map from variables to canonical terms, kept in
/// solved form (no domain variable occurs in the range) so application is
/// idempotent.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Substitution {
    map: BTreeMap<Var, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a substitution from pairs, checking sorts and solving the
    /// bindings against each other.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, Term)>) -> Result<Self, SortError> {
        let mut s = Substitution::new();
        for (v, t) in pairs {
            s.bind(v, t)?;
        }
        Ok(s)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn get(&self, v: &Var) -> Option<&Term> {
        self.map.get(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.map.iter()
    }

    /// Adds `v -> t` (with `t` first rewritten by `self`), then rewrites the
    /// existing range by the new binding.
    pub fn bind(&mut self, v: Var, t: Term) -> Result<(), SortError> {
        let t = self.apply(&t);
        if !t.sort().le(v.sort) {
            return Err(SortError::Mismatch {
                expected: v.sort,
                found: t.sort(),
                term: t.to_string(),
            });
        }
        if t == Term::Var(v.clone()) {
            return Ok(());
        }
        self.bind_solved(v, t);
        Ok(())
    }

    /// `bind` without the sort check; callers guarantee sorts and that `t`
    /// is already rewritten by `self` and does not contain `v`.
    pub(crate) fn bind_solved(&mut self, v: Var, t: Term) {
        let single = |x: &Var| {
            if *x == v {
                t.clone()
            } else {
                Term::Var(x.clone())
            }
        };
        for val in self.map.values_mut() {
            if val.contains_var(&v) {
                *val = val.map_vars(&mut |x| single(x));
            }
        }
        self.map.insert(v, t);
    }

    /// Inserts a binding as-is.  Used by one-way matching, where pattern and
    /// target variables live in separate namespaces.
    pub(crate) fn insert_raw(&mut self, v: Var, t: Term) {
        self.map.insert(v, t);
    }

    /// Applies the substitution, returning a canonical term.
    pub fn apply(&self, t: &Term) -> Term {
        if self.map.is_empty() {
            return t.clone();
        }
        t.map_vars(&mut |v| {
            self.map
                .get(v)
                .cloned()
                .unwrap_or_else(|| Term::Var(v.clone()))
        })
    }

    /// Drops bindings for variables not satisfying `keep`.
    pub fn restrict(&self, keep: impl Fn(&Var) -> bool) -> Substitution {
        Substitution {
            map: self
                .map
                .iter()
                .filter(|(v, _)| keep(v))
                .map(|(v, t)| (v.clone(), t.clone()))
                .collect(),
        }
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{} -> {}", v.name, t)?;
        }
        f.write_str("}")
    }
}

/// Sort-checked application: fails if any binding in `sigma` is ill-sorted.
pub fn substitute(t: &Term, sigma: &Substitution) -> Result<Term, SortError> {
    for (v, val) in sigma.iter() {
        if !val.sort().le(v.sort) {
            return Err(SortError::Mismatch {
                expected: v.sort,
                found: val.sort(),
                term: val.to_string(),
            });
        }
    }
    Ok(sigma.apply(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Sort;

    #[test]
    fn pair_substitution() {
        let x = Var::new("x", Sort::Mesg);
        let s = Substitution::from_pairs([(x.clone(), Term::Gen)]).unwrap();
        let t = Term::pair(Term::Var(x), Term::tag("s"));
        assert_eq!(substitute(&t, &s).unwrap().to_string(), "(cat (gen) \"s\")");
    }

    #[test]
    fn exponent_substitution_recanonicalizes() {
        let x = Var::new("x", Sort::Expt);
        let u = Term::atom("u", Sort::Rndx);
        let t = Term::exp(Term::Gen, Term::mul(vec![Term::Var(x.clone()), u]).unwrap()).unwrap();
        let s = Substitution::from_pairs([(x, Term::atom("b", Sort::Rndx))]).unwrap();
        assert_eq!(s.apply(&t).to_string(), "(exp (gen) (mul b u))");
    }

    #[test]
    fn verifier_as_key() {
        let v = Var::new("v", Sort::Base);
        let gb = Term::exp(Term::Gen, Term::atom("b", Sort::Rndx)).unwrap();
        let t = Term::enc(gb, Term::Var(v.clone()));
        let gx = Term::exp(Term::Gen, Term::atom("x", Sort::Rndx)).unwrap();
        let s = Substitution::from_pairs([(v, gx)]).unwrap();
        assert_eq!(s.apply(&t).to_string(), "(enc (exp (gen) b) (exp (gen) x))");
    }

    #[test]
    fn base_variable_bound_to_exp_flattens() {
        let v = Var::new("v", Sort::Base);
        let t = Term::exp(Term::Var(v.clone()), Term::atom("u", Sort::Rndx)).unwrap();
        let gx = Term::exp(Term::Gen, Term::atom("x", Sort::Rndx)).unwrap();
        let s = Substitution::from_pairs([(v, gx)]).unwrap();
        assert_eq!(s.apply(&t).to_string(), "(exp (gen) (mul u x))");
    }

    #[test]
    fn ill_sorted_binding_is_an_error() {
        let v = Var::new("a", Sort::Rndx);
        assert!(Substitution::from_pairs([(v, Term::text("s"))]).is_err());
    }

    #[test]
    fn idempotent_after_chained_binds() {
        let x = Var::new("x", Sort::Mesg);
        let y = Var::new("y", Sort::Mesg);
        let mut s = Substitution::new();
        s.bind(x.clone(), Term::pair(Term::Var(y.clone()), Term::Gen)).unwrap();
        s.bind(y.clone(), Term::tag("k")).unwrap();
        let t = Term::pair(Term::Var(x), Term::Var(y));
        let once = s.apply(&t);
        assert_eq!(s.apply(&once), once);
    }
}
