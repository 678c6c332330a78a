//! Parser for the textual formula encoding.
//!
//! Accepts the operator set {and, or, not, =, <, <=, +, *, -, DEREF_<type>}
//! with `-` either unary or binary, and bare (possibly negative) integer
//! literals. Positions in errors are byte offsets into the input.

use std::fmt;

use super::{Formula, Rel, Term};
use crate::memory::{Dereference, SegExpr, ValueType};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormulaSyntaxError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for FormulaSyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "formula syntax error at {}: {}", self.position, self.message)
    }
}

impl std::error::Error for FormulaSyntaxError {}

#[derive(Debug)]
enum Sexp {
    Atom(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn pos(&self) -> usize {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }
}

struct Reader<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err<T>(&self, pos: usize, msg: impl Into<String>) -> Result<T, FormulaSyntaxError> {
        Err(FormulaSyntaxError {
            position: pos,
            message: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn read(&mut self) -> Result<Sexp, FormulaSyntaxError> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return self.err(self.pos, "unexpected end of input");
        }
        let start = self.pos;
        match self.src[self.pos] {
            b'(' => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    if self.pos >= self.src.len() {
                        return self.err(start, "unclosed `(`");
                    }
                    if self.src[self.pos] == b')' {
                        self.pos += 1;
                        return Ok(Sexp::List(items, start));
                    }
                    items.push(self.read()?);
                }
            }
            b')' => self.err(self.pos, "unexpected `)`"),
            _ => {
                while self.pos < self.src.len()
                    && !self.src[self.pos].is_ascii_whitespace()
                    && self.src[self.pos] != b'('
                    && self.src[self.pos] != b')'
                {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos])
                    .map_err(|_| FormulaSyntaxError {
                        position: start,
                        message: "invalid utf-8".into(),
                    })?
                    .to_string();
                Ok(Sexp::Atom(text, start))
            }
        }
    }
}

fn err<T>(pos: usize, msg: impl Into<String>) -> Result<T, FormulaSyntaxError> {
    Err(FormulaSyntaxError {
        position: pos,
        message: msg.into(),
    })
}

fn term_of(s: &Sexp) -> Result<Term, FormulaSyntaxError> {
    match s {
        Sexp::Atom(a, p) => match a.parse::<i64>() {
            Ok(v) => Ok(Term::Const(v)),
            Err(_) => err(*p, format!("expected integer constant, got `{a}`")),
        },
        Sexp::List(items, p) => {
            let head = match items.first() {
                Some(Sexp::Atom(h, _)) => h.as_str(),
                _ => return err(*p, "expected operator"),
            };
            let args = &items[1..];
            match head {
                "+" => {
                    if args.len() < 2 {
                        return err(*p, "`+` needs at least two arguments");
                    }
                    Ok(Term::Add(args.iter().map(term_of).collect::<Result<_, _>>()?))
                }
                "*" => {
                    if args.len() < 2 {
                        return err(*p, "`*` needs at least two arguments");
                    }
                    Ok(Term::Mul(args.iter().map(term_of).collect::<Result<_, _>>()?))
                }
                "-" => match args.len() {
                    1 => Ok(Term::Neg(Box::new(term_of(&args[0])?))),
                    2 => Ok(Term::Sub(
                        Box::new(term_of(&args[0])?),
                        Box::new(term_of(&args[1])?),
                    )),
                    _ => err(*p, "`-` takes one or two arguments"),
                },
                _ if head.starts_with("DEREF_") => Ok(Term::Deref(Box::new(deref_of(s)?))),
                _ => err(*p, format!("unknown term operator `{head}`")),
            }
        }
    }
}

fn deref_of(s: &Sexp) -> Result<Dereference, FormulaSyntaxError> {
    let (items, p) = match s {
        Sexp::List(items, p) => (items, *p),
        Sexp::Atom(_, p) => return err(*p, "expected dereference"),
    };
    let head = match items.first() {
        Some(Sexp::Atom(h, _)) => h.as_str(),
        _ => return err(p, "expected DEREF_<type>"),
    };
    let vtype = head
        .strip_prefix("DEREF_")
        .and_then(ValueType::from_name)
        .ok_or_else(|| FormulaSyntaxError {
            position: p,
            message: format!("unknown dereference type in `{head}`"),
        })?;
    if items.len() != 3 {
        return err(p, "dereference takes a segment and an offset");
    }
    let seg = match &items[1] {
        Sexp::Atom(a, ap) => match a.parse::<u32>() {
            Ok(v) => SegExpr::Const(v),
            Err(_) => return err(*ap, format!("expected segment constant, got `{a}`")),
        },
        nested @ Sexp::List(..) => {
            let d = deref_of(nested)?;
            if d.vtype != ValueType::Seg {
                return err(
                    nested.pos(),
                    "nested segment expression must have type seg",
                );
            }
            SegExpr::Deref(Box::new(d))
        }
    };
    let off = term_of(&items[2])?;
    Ok(Dereference { seg, off, vtype })
}

fn formula_of(s: &Sexp) -> Result<Formula, FormulaSyntaxError> {
    let (items, p) = match s {
        Sexp::List(items, p) => (items, *p),
        Sexp::Atom(_, p) => return err(*p, "expected formula"),
    };
    let head = match items.first() {
        Some(Sexp::Atom(h, _)) => h.as_str(),
        _ => return err(p, "expected connective or comparison"),
    };
    let args = &items[1..];
    match head {
        "and" => Ok(Formula::And(
            args.iter().map(formula_of).collect::<Result<_, _>>()?,
        )),
        "or" => Ok(Formula::Or(
            args.iter().map(formula_of).collect::<Result<_, _>>()?,
        )),
        "not" => {
            if args.len() != 1 {
                return err(p, "`not` takes one argument");
            }
            Ok(Formula::Not(Box::new(formula_of(&args[0])?)))
        }
        "=" | "<" | "<=" => {
            if args.len() != 2 {
                return err(p, format!("`{head}` takes two arguments"));
            }
            let rel = match head {
                "=" => Rel::Eq,
                "<" => Rel::Lt,
                _ => Rel::Le,
            };
            Ok(Formula::Atom(rel, term_of(&args[0])?, term_of(&args[1])?))
        }
        _ => err(p, format!("unknown connective `{head}`")),
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, FormulaSyntaxError> {
    let mut r = Reader {
        src: text.as_bytes(),
        pos: 0,
    };
    let sexp = r.read()?;
    r.skip_ws();
    if r.pos != r.src.len() {
        return err(r.pos, "trailing input after formula");
    }
    formula_of(&sexp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_answer_formula() {
        // A two-variable linear answer as exchanged between clients.
        let f = parse_formula("(< (+ (+ (DEREF_i32 2 0) (* 2 (DEREF_i32 3 0))) (- 6)) 0)").unwrap();
        match &f {
            Formula::Atom(Rel::Lt, lhs, Term::Const(0)) => {
                assert!(lhs.contains_deref());
            }
            _ => panic!("unexpected shape: {f:?}"),
        }
        assert_eq!(
            f.to_string(),
            "(< (+ (+ (DEREF_i32 2 0) (* 2 (DEREF_i32 3 0))) (- 6)) 0)"
        );
    }

    #[test]
    fn parses_tautology() {
        let f = parse_formula("(= 1 1)").unwrap();
        assert!(f.is_tautology_literal());
    }

    #[test]
    fn parses_pointer_answer() {
        let f = parse_formula("(and (= (DEREF_seg 2 0) 3) (= (DEREF_off 2 0) 4))").unwrap();
        let ds = f.collect_derefs();
        assert_eq!(ds.len(), 2);
        assert_eq!(f.to_string(), "(and (= (DEREF_seg 2 0) 3) (= (DEREF_off 2 0) 4))");
    }

    #[test]
    fn parses_nested_dereference() {
        let f = parse_formula("(= (DEREF_i32 (DEREF_seg 2 0) (+ (DEREF_off 2 0) 12)) 7)").unwrap();
        let printed = f.to_string();
        assert_eq!(parse_formula(&printed).unwrap(), f);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_formula("").is_err());
        assert!(parse_formula("(= 1)").is_err());
        assert!(parse_formula("(frob 1 2)").is_err());
        assert!(parse_formula("(= 1 1) junk").is_err());
        let e = parse_formula("(= (DEREF_q7 1 0) 2)").unwrap_err();
        assert!(e.message.contains("dereference type"));
    }

    #[test]
    fn negative_literals_and_unary_minus_are_distinct_trees() {
        let bare = parse_formula("(< -6 0)").unwrap();
        let unary = parse_formula("(< (- 6) 0)").unwrap();
        assert_ne!(bare, unary);
        assert_eq!(bare.to_string(), "(< -6 0)");
        assert_eq!(unary.to_string(), "(< (- 6) 0)");
    }
}
