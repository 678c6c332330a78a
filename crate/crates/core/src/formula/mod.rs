//! The cross-client value language: quantifier-free arithmetic formulas over
//! dereferences, with a fixed textual s-expression encoding.
//!
//! A dereference with segment expression `s`, offset expression `o` and type
//! `t` is encoded as an application of the binary uninterpreted function
//! `DEREF_t` to `s` and `o`. Everything else is integer arithmetic plus
//! `and`/`or`/`not` and the comparisons `=`, `<`, `<=`. No declarations are
//! exchanged; all parties know the meaning of the `DEREF_t` symbols.

mod decode;
mod normalize;
mod parse;

pub use decode::{
    decode_to_interval, decode_to_octagon_constraints, restrict_to_dereferences, Interval,
    OctConstraint,
};
pub use normalize::{eval_formula, normalize, Conjunct, Monomial, NormAtom, NormalForm};
pub use parse::{parse_formula, FormulaSyntaxError};

use std::collections::BTreeSet;
use std::fmt;

use crate::memory::{Dereference, SegExpr};

pub const DEFAULT_DISJUNCT_CAP: usize = 256;

/// Integer term over constants, `+`, `*`, unary and binary `-`, and
/// dereference applications. Binary subtraction is accepted on input and
/// rewritten away by normalization.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(i64),
    Deref(Box<Dereference>),
    Add(Vec<Term>),
    Mul(Vec<Term>),
    Neg(Box<Term>),
    Sub(Box<Term>, Box<Term>),
}

impl Term {
    pub fn deref(d: Dereference) -> Term {
        Term::Deref(Box::new(d))
    }

    pub fn contains_deref(&self) -> bool {
        match self {
            Term::Const(_) => false,
            Term::Deref(_) => true,
            Term::Add(ts) | Term::Mul(ts) => ts.iter().any(Term::contains_deref),
            Term::Neg(t) => t.contains_deref(),
            Term::Sub(a, b) => a.contains_deref() || b.contains_deref(),
        }
    }

    pub fn collect_derefs(&self, out: &mut BTreeSet<Dereference>) {
        match self {
            Term::Const(_) => {}
            Term::Deref(d) => {
                out.insert((**d).clone());
                if let SegExpr::Deref(inner) = &d.seg {
                    Term::Deref(inner.clone()).collect_derefs(out);
                }
                d.off.collect_derefs(out);
            }
            Term::Add(ts) | Term::Mul(ts) => {
                for t in ts {
                    t.collect_derefs(out);
                }
            }
            Term::Neg(t) => t.collect_derefs(out),
            Term::Sub(a, b) => {
                a.collect_derefs(out);
                b.collect_derefs(out);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Eq,
    Lt,
    Le,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "=",
            Rel::Lt => "<",
            Rel::Le => "<=",
        }
    }
}

/// Quantifier-free formula over integer terms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
    Atom(Rel, Term, Term),
}

impl Formula {
    /// The agreed simple tautology `(= 1 1)`.
    pub fn tautology() -> Formula {
        Formula::Atom(Rel::Eq, Term::Const(1), Term::Const(1))
    }

    /// The agreed false-equivalent `(< 0 0)`.
    pub fn falsum() -> Formula {
        Formula::Atom(Rel::Lt, Term::Const(0), Term::Const(0))
    }

    pub fn is_tautology_literal(&self) -> bool {
        matches!(self, Formula::Atom(Rel::Eq, Term::Const(a), Term::Const(b)) if a == b)
    }

    pub fn conj(parts: Vec<Formula>) -> Formula {
        match parts.len() {
            0 => Formula::tautology(),
            1 => parts.into_iter().next().unwrap(),
            _ => Formula::And(parts),
        }
    }

    pub fn disj(parts: Vec<Formula>) -> Formula {
        match parts.len() {
            0 => Formula::falsum(),
            1 => parts.into_iter().next().unwrap(),
            _ => Formula::Or(parts),
        }
    }

    pub fn collect_derefs(&self) -> BTreeSet<Dereference> {
        let mut out = BTreeSet::new();
        self.collect_derefs_into(&mut out);
        out
    }

    pub fn collect_derefs_into(&self, out: &mut BTreeSet<Dereference>) {
        match self {
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.collect_derefs_into(out);
                }
            }
            Formula::Not(f) => f.collect_derefs_into(out),
            Formula::Atom(_, a, b) => {
                a.collect_derefs(out);
                b.collect_derefs(out);
            }
        }
    }
}

// Canonical printing: lowercase operators, single spaces, negative integer
// literals printed bare (`-6`), unary minus kept for structured operands.
// Printing is faithful to the tree so that parse(print(f)) == f.

fn fmt_deref(d: &Dereference, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "(DEREF_{} ", d.vtype)?;
    match &d.seg {
        SegExpr::Const(s) => write!(f, "{s}")?,
        SegExpr::Deref(inner) => fmt_deref(inner, f)?,
    }
    write!(f, " {})", d.off)
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write!(f, "{c}"),
            Term::Deref(d) => fmt_deref(d, f),
            Term::Add(ts) => {
                write!(f, "(+")?;
                for t in ts {
                    write!(f, " {t}")?;
                }
                write!(f, ")")
            }
            Term::Mul(ts) => {
                write!(f, "(*")?;
                for t in ts {
                    write!(f, " {t}")?;
                }
                write!(f, ")")
            }
            Term::Neg(t) => write!(f, "(- {t})"),
            Term::Sub(a, b) => write!(f, "(- {a} {b})"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::And(fs) => {
                write!(f, "(and")?;
                for x in fs {
                    write!(f, " {x}")?;
                }
                write!(f, ")")
            }
            Formula::Or(fs) => {
                write!(f, "(or")?;
                for x in fs {
                    write!(f, " {x}")?;
                }
                write!(f, ")")
            }
            Formula::Not(x) => write!(f, "(not {x})"),
            Formula::Atom(r, a, b) => write!(f, "({} {} {})", r.symbol(), a, b),
        }
    }
}
