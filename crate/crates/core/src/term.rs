//! Symbolic messages over the Diffie-Hellman term algebra.
//!
//! Terms are kept in a canonical form: exponentiation never nests
//! (`exp(exp(b, x), y)` is stored as `exp(b, x*y)`), exponent products are
//! flattened multisets sorted under a fixed order, and a product with a
//! single factor collapses to that factor.  Structural equality of canonical
//! terms is equality modulo the exponent theory.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub type Sym = Arc<str>;

/// Variable and atom sorts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Name,
    Text,
    Data,
    Skey,
    Rndx,
    Expt,
    Base,
    Mesg,
}

impl Sort {
    /// `self` is a subsort of `other`.  `mesg` is the top, `rndx <= expt`.
    pub fn le(self, other: Sort) -> bool {
        self == other || other == Sort::Mesg || (self == Sort::Rndx && other == Sort::Expt)
    }

    pub fn parse(s: &str) -> Option<Sort> {
        Some(match s {
            "name" => Sort::Name,
            "text" => Sort::Text,
            "data" => Sort::Data,
            "skey" => Sort::Skey,
            "rndx" => Sort::Rndx,
            "expt" => Sort::Expt,
            "base" => Sort::Base,
            "mesg" => Sort::Mesg,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sort::Name => "name",
            Sort::Text => "text",
            Sort::Data => "data",
            Sort::Skey => "skey",
            Sort::Rndx => "rndx",
            Sort::Expt => "expt",
            Sort::Base => "base",
            Sort::Mesg => "mesg",
        }
    }

    pub fn is_exponent(self) -> bool {
        matches!(self, Sort::Rndx | Sort::Expt)
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Var {
    pub name: Sym,
    pub sort: Sort,
}

impl Var {
    pub fn new(name: impl Into<Sym>, sort: Sort) -> Var {
        Var {
            name: name.into(),
            sort,
        }
    }
}

// Canonical atom order: (sort, id).
impl Ord for Var {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.sort, &self.name).cmp(&(other.sort, &other.name))
    }
}

impl PartialOrd for Var {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    /// String literal; serves as a label.
    Tag(Sym),
    Name(Sym),
    Text(Sym),
    /// Long-term symmetric key shared by two names.
    Ltk(Box<Term>, Box<Term>),
    /// Exponent constant of sort `rndx` or `expt`.
    Atom(Sym, Sort),
    Gen,
    /// `Exp(base, power)`; base is never itself an `Exp`, power is a single
    /// exponent factor or a `Mul` of at least two.
    Exp(Box<Term>, Box<Term>),
    /// Exponent product, sorted, at least two factors.
    Mul(Vec<Term>),
    Pair(Box<Term>, Box<Term>),
    Enc(Box<Term>, Box<Term>),
    Hash(Vec<Term>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SortError {
    #[error("expected a term of sort {expected}, found {found} in `{term}`")]
    Mismatch {
        expected: Sort,
        found: Sort,
        term: String,
    },
    #[error("empty exponent product")]
    EmptyProduct,
    #[error("atom `{0}` must have sort rndx or expt")]
    BadAtomSort(String),
}

fn expect(term: &Term, expected: Sort) -> Result<(), SortError> {
    let found = term.sort();
    if found.le(expected) {
        Ok(())
    } else {
        Err(SortError::Mismatch {
            expected,
            found,
            term: term.to_string(),
        })
    }
}

/// Ordering used for exponent factors inside a product.
pub fn factor_cmp(a: &Term, b: &Term) -> Ordering {
    fn key(t: &Term) -> (Sort, &str, u8) {
        match t {
            Term::Var(v) => (v.sort, &v.name, 0),
            Term::Atom(n, s) => (*s, n, 1),
            _ => (Sort::Mesg, "", 2),
        }
    }
    key(a).cmp(&key(b)).then_with(|| a.cmp(b))
}

impl Term {
    pub fn var(name: impl Into<Sym>, sort: Sort) -> Term {
        Term::Var(Var::new(name, sort))
    }

    pub fn tag(s: impl Into<Sym>) -> Term {
        Term::Tag(s.into())
    }

    pub fn name(s: impl Into<Sym>) -> Term {
        Term::Name(s.into())
    }

    pub fn text(s: impl Into<Sym>) -> Term {
        Term::Text(s.into())
    }

    pub fn atom(s: impl Into<Sym>, sort: Sort) -> Term {
        debug_assert!(sort.is_exponent());
        Term::Atom(s.into(), sort)
    }

    pub fn checked_atom(s: impl Into<Sym>, sort: Sort) -> Result<Term, SortError> {
        let s = s.into();
        if sort.is_exponent() {
            Ok(Term::Atom(s, sort))
        } else {
            Err(SortError::BadAtomSort(s.to_string()))
        }
    }

    pub fn ltk(a: Term, b: Term) -> Result<Term, SortError> {
        expect(&a, Sort::Name)?;
        expect(&b, Sort::Name)?;
        Ok(Term::Ltk(Box::new(a), Box::new(b)))
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::Pair(Box::new(a), Box::new(b))
    }

    /// Right-nested pairing: `cat(a, b, c) = pair(a, pair(b, c))`.
    pub fn cat(mut parts: Vec<Term>) -> Term {
        let mut acc = parts.pop().expect("cat of nothing");
        while let Some(p) = parts.pop() {
            acc = Term::pair(p, acc);
        }
        acc
    }

    pub fn enc(payload: Term, key: Term) -> Term {
        Term::Enc(Box::new(payload), Box::new(key))
    }

    pub fn hash(args: Vec<Term>) -> Term {
        Term::Hash(args)
    }

    /// Sort-checked exponentiation, returned in canonical form.
    pub fn exp(base: Term, power: Term) -> Result<Term, SortError> {
        expect(&base, Sort::Base)?;
        expect(&power, Sort::Expt)?;
        Ok(Term::exp_raw(base, power))
    }

    /// Sort-checked exponent product, returned in canonical form.
    pub fn mul(factors: Vec<Term>) -> Result<Term, SortError> {
        for f in &factors {
            expect(f, Sort::Expt)?;
        }
        Term::product(flatten_factors(factors)).ok_or(SortError::EmptyProduct)
    }

    /// Canonical exponentiation without sort checks.  Inputs must already
    /// be canonical.
    pub(crate) fn exp_raw(base: Term, power: Term) -> Term {
        let (base, mut factors) = match base {
            Term::Exp(b, p) => (*b, p.into_factors()),
            b => (b, Vec::new()),
        };
        factors.extend(power.into_factors());
        match Term::product(factors) {
            Some(p) => Term::Exp(Box::new(base), Box::new(p)),
            None => base,
        }
    }

    /// Builds a canonical product from already-flat factors.  `None` for
    /// the empty product.
    pub fn product(mut factors: Vec<Term>) -> Option<Term> {
        factors.sort_by(factor_cmp);
        match factors.len() {
            0 => None,
            1 => factors.pop(),
            _ => Some(Term::Mul(factors)),
        }
    }

    /// The exponent factors of a power term (a `Mul` splits, anything else
    /// is a single factor).
    pub fn into_factors(self) -> Vec<Term> {
        match self {
            Term::Mul(fs) => fs,
            t => vec![t],
        }
    }

    pub fn factors(&self) -> Vec<Term> {
        self.clone().into_factors()
    }

    pub fn sort(&self) -> Sort {
        match self {
            Term::Var(v) => v.sort,
            Term::Tag(_) => Sort::Mesg,
            Term::Name(_) => Sort::Name,
            Term::Text(_) => Sort::Text,
            Term::Ltk(..) => Sort::Skey,
            Term::Atom(_, s) => *s,
            Term::Gen | Term::Exp(..) => Sort::Base,
            Term::Mul(_) => Sort::Expt,
            Term::Pair(..) | Term::Enc(..) | Term::Hash(_) => Sort::Mesg,
        }
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    /// Atomic values: variables and constants (including `Gen` and tags).
    pub fn is_atomic(&self) -> bool {
        matches!(
            self,
            Term::Var(_) | Term::Tag(_) | Term::Name(_) | Term::Text(_) | Term::Atom(..) | Term::Gen
        )
    }

    /// Immediate subterms, exponent factors included.
    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Ltk(a, b) | Term::Pair(a, b) | Term::Enc(a, b) => vec![a, b],
            Term::Exp(b, p) => match &**p {
                Term::Mul(fs) => std::iter::once(&**b).chain(fs.iter()).collect(),
                p => vec![b, p],
            },
            Term::Mul(fs) | Term::Hash(fs) => fs.iter().collect(),
            _ => Vec::new(),
        }
    }

    pub fn occurs(&self, needle: &Term) -> bool {
        self == needle || self.children().into_iter().any(|c| c.occurs(needle))
    }

    pub fn contains_var(&self, v: &Var) -> bool {
        match self {
            Term::Var(w) => w == v,
            _ => self.children().into_iter().any(|c| c.contains_var(v)),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            _ => self.children().into_iter().for_each(|c| c.collect_vars(out)),
        }
    }

    /// Variables in order of first appearance (pre-order, left to right).
    pub fn vars_in_order(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            _ => self.children().into_iter().for_each(|c| c.vars_in_order(out)),
        }
    }

    /// Every subterm, the term itself included.
    pub fn subterms(&self) -> Vec<&Term> {
        let mut out = vec![self];
        let mut i = 0;
        while i < out.len() {
            let t = out[i];
            out.extend(t.children());
            i += 1;
        }
        out
    }

    /// Subterms an observer can reach by projecting pairs and opening
    /// encryptions (ignoring whether the key is available).
    pub fn carried(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        self.push_carried(&mut out);
        out
    }

    fn push_carried<'a>(&'a self, out: &mut Vec<&'a Term>) {
        out.push(self);
        match self {
            Term::Pair(a, b) => {
                a.push_carried(out);
                b.push_carried(out);
            }
            Term::Enc(p, _) => p.push_carried(out),
            _ => {}
        }
    }

    /// Size in constructor count, used to bound random generation and
    /// oracle searches.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Term::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self
            .children()
            .into_iter()
            .map(Term::depth)
            .max()
            .unwrap_or(0)
    }

    /// Applies `f` bottom-up to variables, rebuilding in canonical form.
    /// `f` must respect sorts.
    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Term) -> Term {
        match self {
            Term::Var(v) => f(v),
            Term::Tag(_) | Term::Name(_) | Term::Text(_) | Term::Atom(..) | Term::Gen => {
                self.clone()
            }
            Term::Ltk(a, b) => Term::Ltk(Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
            Term::Exp(b, p) => Term::exp_raw(b.map_vars(f), p.map_vars(f)),
            Term::Mul(fs) => {
                let fs = flatten_factors(fs.iter().map(|x| x.map_vars(f)).collect());
                Term::product(fs).expect("nonempty")
            }
            Term::Pair(a, b) => Term::pair(a.map_vars(f), b.map_vars(f)),
            Term::Enc(a, b) => Term::enc(a.map_vars(f), b.map_vars(f)),
            Term::Hash(xs) => Term::Hash(xs.iter().map(|x| x.map_vars(f)).collect()),
        }
    }
}

fn flatten_factors(factors: Vec<Term>) -> Vec<Term> {
    factors.into_iter().flat_map(Term::into_factors).collect()
}

/// Canonical form of a well-sorted term.  Idempotent.
pub fn canonicalize(t: &Term) -> Result<Term, SortError> {
    Ok(match t {
        Term::Var(_) | Term::Tag(_) | Term::Name(_) | Term::Text(_) | Term::Gen => t.clone(),
        Term::Atom(n, s) => Term::checked_atom(n.clone(), *s)?,
        Term::Ltk(a, b) => Term::ltk(canonicalize(a)?, canonicalize(b)?)?,
        Term::Exp(b, p) => Term::exp(canonicalize(b)?, canonicalize(p)?)?,
        Term::Mul(fs) => Term::mul(fs.iter().map(canonicalize).collect::<Result<_, _>>()?)?,
        Term::Pair(a, b) => Term::pair(canonicalize(a)?, canonicalize(b)?),
        Term::Enc(a, b) => Term::enc(canonicalize(a)?, canonicalize(b)?),
        Term::Hash(xs) => Term::Hash(xs.iter().map(canonicalize).collect::<Result<_, _>>()?),
    })
}

/// Multiset difference `a - b` on sorted factor lists.  `None` unless `b`
/// is contained in `a`.
pub fn factor_difference(a: &[Term], b: &[Term]) -> Option<Vec<Term>> {
    let mut rest = a.to_vec();
    for f in b {
        let i = rest.iter().position(|x| x == f)?;
        rest.remove(i);
    }
    Some(rest)
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(&v.name),
            Term::Tag(s) => write!(f, "{s:?}"),
            Term::Name(s) | Term::Text(s) | Term::Atom(s, _) => f.write_str(s),
            Term::Ltk(a, b) => write!(f, "(ltk {a} {b})"),
            Term::Gen => f.write_str("(gen)"),
            Term::Exp(b, p) => write!(f, "(exp {b} {p})"),
            Term::Mul(fs) => {
                f.write_str("(mul")?;
                for x in fs {
                    write!(f, " {x}")?;
                }
                f.write_str(")")
            }
            Term::Pair(..) => {
                f.write_str("(cat")?;
                write_cat_items(self, f)?;
                f.write_str(")")
            }
            Term::Enc(p, k) => {
                f.write_str("(enc")?;
                write_cat_items(p, f)?;
                write!(f, " {k})")
            }
            Term::Hash(xs) => {
                f.write_str("(hash")?;
                for x in xs {
                    write!(f, " {x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn write_cat_items(t: &Term, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let mut cur = t;
    while let Term::Pair(a, b) = cur {
        write!(f, " {a}")?;
        cur = b;
    }
    write!(f, " {cur}")
}
