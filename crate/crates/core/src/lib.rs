//! Strand-space protocol analysis in the Dolev-Yao model, an SRP-3 model
//! corpus, and a numeric SRP-3 reference implementation.

pub mod corpus;
pub mod dolev_yao;
pub mod mapping;
pub mod model_lang;
pub mod par;
pub mod render;
pub mod srp3;
pub mod strand;
pub mod subst;
pub mod term;
pub mod unify;

pub use subst::{substitute, Substitution};
pub use term::{canonicalize, Sort, SortError, Sym, Term, Var};
pub use unify::{unify, Fresh};
