//! Normalization to the agreed syntactic restrictions: DNF, constants folded,
//! distributivity applied, `<=` and binary subtraction rewritten away, and
//! every atom brought to the shape `sum-of-monomials REL integer-constant`.
//!
//! Variables denote integers, so strict bounds tighten by one and equalities
//! with a non-dividing gcd fold to false.

use std::collections::BTreeMap;
use std::fmt;

use super::{Formula, Rel, Term};
use crate::memory::Dereference;

/// DNF expansion (or term blow-up) exceeded the configured cap. Callers fall
/// back to treating the unnormalized formula as opaque but sound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SizeBudgetExceeded;

impl fmt::Display for SizeBudgetExceeded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("formula size budget exceeded")
    }
}

impl std::error::Error for SizeBudgetExceeded {}

/// Product of one or more dereferences, sorted. Linear atoms have
/// single-dereference monomials only.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(pub Vec<Dereference>);

impl Monomial {
    pub fn var(d: Dereference) -> Monomial {
        Monomial(vec![d])
    }

    pub fn is_linear(&self) -> bool {
        self.0.len() == 1
    }

    pub fn single(&self) -> Option<&Dereference> {
        if self.0.len() == 1 {
            Some(&self.0[0])
        } else {
            None
        }
    }
}

/// `lhs REL rhs` with `lhs` a sum of coefficient-weighted monomials, `rel`
/// one of `<`/`=`, and `rhs` a constant.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NormAtom {
    pub lhs: Vec<(i64, Monomial)>,
    pub rel: Rel,
    pub rhs: i64,
}

impl NormAtom {
    pub fn is_linear(&self) -> bool {
        self.lhs.iter().all(|(_, m)| m.is_linear())
    }

    pub fn mentions(&self, d: &Dereference) -> bool {
        self.lhs.iter().any(|(_, m)| m.0.contains(d))
    }

    pub fn derefs(&self) -> impl Iterator<Item = &Dereference> {
        self.lhs.iter().flat_map(|(_, m)| m.0.iter())
    }

    /// Cosmetic canonical tree: unit single-variable atoms print with the
    /// constant on the small side, everything else keeps the sum left.
    pub fn to_formula(&self) -> Formula {
        if self.lhs.len() == 1 {
            let (c, m) = &self.lhs[0];
            let mterm = monomial_term(m);
            match (*c, self.rel) {
                (1, rel) => return Formula::Atom(rel, mterm, Term::Const(self.rhs)),
                (-1, Rel::Lt) => {
                    return Formula::Atom(Rel::Lt, Term::Const(-self.rhs), mterm);
                }
                (-1, Rel::Eq) => {
                    return Formula::Atom(Rel::Eq, mterm, Term::Const(-self.rhs));
                }
                _ => {}
            }
        }
        let mut parts: Vec<Term> = Vec::new();
        for (c, m) in &self.lhs {
            let mterm = monomial_term(m);
            let part = match *c {
                1 => mterm,
                -1 => Term::Neg(Box::new(mterm)),
                c if c > 0 => Term::Mul(vec![Term::Const(c), mterm]),
                c => Term::Neg(Box::new(Term::Mul(vec![Term::Const(-c), mterm]))),
            };
            parts.push(part);
        }
        let lhs = if parts.len() == 1 {
            parts.into_iter().next().unwrap()
        } else {
            Term::Add(parts)
        };
        Formula::Atom(self.rel, lhs, Term::Const(self.rhs))
    }
}

fn monomial_term(m: &Monomial) -> Term {
    if m.0.len() == 1 {
        Term::deref(m.0[0].clone())
    } else {
        Term::Mul(m.0.iter().map(|d| Term::deref(d.clone())).collect())
    }
}

/// Conjunction of normalized atoms, sorted and deduplicated.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Conjunct {
    pub atoms: Vec<NormAtom>,
}

impl Conjunct {
    pub fn is_true(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// Top-level disjunction of conjunctions of atoms. No disjuncts means false;
/// a single empty conjunct means true.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalForm {
    pub disjuncts: Vec<Conjunct>,
}

impl NormalForm {
    pub fn truth() -> NormalForm {
        NormalForm {
            disjuncts: vec![Conjunct { atoms: vec![] }],
        }
    }

    pub fn falsity() -> NormalForm {
        NormalForm { disjuncts: vec![] }
    }

    pub fn is_false(&self) -> bool {
        self.disjuncts.is_empty()
    }

    pub fn is_true(&self) -> bool {
        self.disjuncts.iter().any(Conjunct::is_true)
    }

    pub fn to_formula(&self) -> Formula {
        if self.is_false() {
            return Formula::falsum();
        }
        let mut parts = Vec::new();
        for c in &self.disjuncts {
            if c.atoms.is_empty() {
                parts.push(Formula::tautology());
            } else {
                parts.push(Formula::conj(c.atoms.iter().map(NormAtom::to_formula).collect()));
            }
        }
        Formula::disj(parts)
    }

    pub fn derefs(&self) -> std::collections::BTreeSet<Dereference> {
        let mut out = std::collections::BTreeSet::new();
        for c in &self.disjuncts {
            for a in &c.atoms {
                for d in a.derefs() {
                    out.insert(d.clone());
                }
            }
        }
        out
    }
}

// Negation-normal form with `<=` eliminated: `a <= b` becomes `a < b + 1`,
// `not (a < b)` becomes `b < a + 1`, `not (a = b)` splits into a disjunction.
fn nnf(f: &Formula, positive: bool) -> Formula {
    match f {
        Formula::And(fs) => {
            let parts = fs.iter().map(|x| nnf(x, positive)).collect();
            if positive {
                Formula::And(parts)
            } else {
                Formula::Or(parts)
            }
        }
        Formula::Or(fs) => {
            let parts = fs.iter().map(|x| nnf(x, positive)).collect();
            if positive {
                Formula::Or(parts)
            } else {
                Formula::And(parts)
            }
        }
        Formula::Not(x) => nnf(x, !positive),
        Formula::Atom(rel, a, b) => {
            let plus_one = |t: &Term| Term::Add(vec![t.clone(), Term::Const(1)]);
            match (rel, positive) {
                (Rel::Le, true) => Formula::Atom(Rel::Lt, a.clone(), plus_one(b)),
                (Rel::Le, false) => Formula::Atom(Rel::Lt, b.clone(), a.clone()),
                (Rel::Lt, true) => Formula::Atom(Rel::Lt, a.clone(), b.clone()),
                (Rel::Lt, false) => Formula::Atom(Rel::Lt, b.clone(), plus_one(a)),
                (Rel::Eq, true) => Formula::Atom(Rel::Eq, a.clone(), b.clone()),
                (Rel::Eq, false) => Formula::Or(vec![
                    Formula::Atom(Rel::Lt, a.clone(), b.clone()),
                    Formula::Atom(Rel::Lt, b.clone(), a.clone()),
                ]),
            }
        }
    }
}

type Combo = (BTreeMap<Monomial, i128>, i128);

const MONOMIAL_CAP: usize = 128;

fn linearize(t: &Term) -> Result<Combo, SizeBudgetExceeded> {
    match t {
        Term::Const(c) => Ok((BTreeMap::new(), *c as i128)),
        Term::Deref(d) => {
            let mut m = BTreeMap::new();
            m.insert(Monomial::var((**d).clone()), 1i128);
            Ok((m, 0))
        }
        Term::Add(ts) => {
            let mut acc: Combo = (BTreeMap::new(), 0);
            for x in ts {
                let (m, k) = linearize(x)?;
                acc.1 += k;
                for (mono, c) in m {
                    *acc.0.entry(mono).or_insert(0) += c;
                }
            }
            acc.0.retain(|_, c| *c != 0);
            if acc.0.len() > MONOMIAL_CAP {
                return Err(SizeBudgetExceeded);
            }
            Ok(acc)
        }
        Term::Mul(ts) => {
            let mut acc: Combo = (BTreeMap::new(), 1);
            for x in ts {
                let (m, k) = linearize(x)?;
                acc = mul_combo(&acc, &(m, k))?;
            }
            Ok(acc)
        }
        Term::Neg(x) => {
            let (mut m, k) = linearize(x)?;
            for c in m.values_mut() {
                *c = -*c;
            }
            Ok((m, -k))
        }
        Term::Sub(a, b) => {
            let (ma, ka) = linearize(a)?;
            let (mb, kb) = linearize(b)?;
            let mut m = ma;
            for (mono, c) in mb {
                *m.entry(mono).or_insert(0) -= c;
            }
            m.retain(|_, c| *c != 0);
            Ok((m, ka - kb))
        }
    }
}

fn mul_combo(a: &Combo, b: &Combo) -> Result<Combo, SizeBudgetExceeded> {
    let mut out: Combo = (BTreeMap::new(), a.1 * b.1);
    for (m, c) in &a.0 {
        *out.0.entry(m.clone()).or_insert(0) += c * b.1;
    }
    for (m, c) in &b.0 {
        *out.0.entry(m.clone()).or_insert(0) += c * a.1;
    }
    for (ma, ca) in &a.0 {
        for (mb, cb) in &b.0 {
            let mut prod = ma.0.clone();
            prod.extend(mb.0.iter().cloned());
            prod.sort();
            *out.0.entry(Monomial(prod)).or_insert(0) += ca * cb;
        }
    }
    out.0.retain(|_, c| *c != 0);
    if out.0.len() > MONOMIAL_CAP {
        return Err(SizeBudgetExceeded);
    }
    Ok(out)
}

enum AtomOut {
    True,
    False,
    Atom(NormAtom),
}

fn normalize_atom(rel: Rel, a: &Term, b: &Term) -> Result<AtomOut, SizeBudgetExceeded> {
    debug_assert!(rel != Rel::Le, "Le is eliminated in nnf");
    let (ma, ka) = linearize(a)?;
    let (mb, kb) = linearize(b)?;
    let mut lhs = ma;
    for (mono, c) in mb {
        *lhs.entry(mono).or_insert(0) -= c;
    }
    lhs.retain(|_, c| *c != 0);
    let mut rhs = kb - ka;
    if lhs.is_empty() {
        let holds = match rel {
            Rel::Lt => 0 < rhs,
            Rel::Eq => rhs == 0,
            Rel::Le => unreachable!(),
        };
        return Ok(if holds { AtomOut::True } else { AtomOut::False });
    }
    // gcd reduction with integer tightening
    let mut g: i128 = 0;
    for c in lhs.values() {
        g = gcd(g, c.abs());
    }
    if g > 1 {
        match rel {
            Rel::Eq => {
                if rhs % g != 0 {
                    return Ok(AtomOut::False);
                }
                rhs /= g;
                for c in lhs.values_mut() {
                    *c /= g;
                }
            }
            Rel::Lt => {
                rhs = (rhs - 1).div_euclid(g) + 1;
                for c in lhs.values_mut() {
                    *c /= g;
                }
            }
            Rel::Le => unreachable!(),
        }
    }
    if rhs > i64::MAX as i128 || rhs < i64::MIN as i128 {
        return Err(SizeBudgetExceeded);
    }
    let mut terms = Vec::with_capacity(lhs.len());
    for (m, c) in lhs {
        if c > i64::MAX as i128 || c < i64::MIN as i128 {
            return Err(SizeBudgetExceeded);
        }
        terms.push((c as i64, m));
    }
    terms.sort_by(|a, b| a.1.cmp(&b.1));
    // canonical sign for equalities
    if rel == Rel::Eq && terms[0].0 < 0 {
        for (c, _) in terms.iter_mut() {
            *c = -*c;
        }
        rhs = -rhs;
    }
    Ok(AtomOut::Atom(NormAtom {
        lhs: terms,
        rel,
        rhs: rhs as i64,
    }))
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Normalizes a formula into DNF with folded constants and linearized atoms.
/// Fails with `SizeBudgetExceeded` if the expansion exceeds `disjunct_cap`.
pub fn normalize(f: &Formula, disjunct_cap: usize) -> Result<NormalForm, SizeBudgetExceeded> {
    let n = nnf(f, true);
    let disjuncts = dnf(&n, disjunct_cap)?;
    let mut out: Vec<Conjunct> = Vec::new();
    'next: for conj in disjuncts {
        let mut atoms = Vec::new();
        for (rel, a, b) in conj {
            match normalize_atom(rel, &a, &b)? {
                AtomOut::True => {}
                AtomOut::False => continue 'next,
                AtomOut::Atom(at) => atoms.push(at),
            }
        }
        atoms.sort();
        atoms.dedup();
        out.push(Conjunct { atoms });
    }
    out.sort();
    out.dedup();
    if out.iter().any(Conjunct::is_true) {
        return Ok(NormalForm::truth());
    }
    Ok(NormalForm { disjuncts: out })
}

type RawAtom = (Rel, Term, Term);

fn dnf(f: &Formula, cap: usize) -> Result<Vec<Vec<RawAtom>>, SizeBudgetExceeded> {
    match f {
        Formula::Atom(rel, a, b) => Ok(vec![vec![(*rel, a.clone(), b.clone())]]),
        Formula::Or(fs) => {
            let mut out = Vec::new();
            for x in fs {
                out.extend(dnf(x, cap)?);
                if out.len() > cap {
                    return Err(SizeBudgetExceeded);
                }
            }
            Ok(out)
        }
        Formula::And(fs) => {
            let mut out: Vec<Vec<RawAtom>> = vec![vec![]];
            for x in fs {
                let d = dnf(x, cap)?;
                let mut next = Vec::new();
                for base in &out {
                    for extra in &d {
                        let mut c = base.clone();
                        c.extend(extra.iter().cloned());
                        next.push(c);
                        if next.len() > cap {
                            return Err(SizeBudgetExceeded);
                        }
                    }
                }
                out = next;
            }
            Ok(out)
        }
        Formula::Not(_) => unreachable!("negations are eliminated in nnf"),
    }
}

fn eval_term(t: &Term, env: &dyn Fn(&Dereference) -> i64) -> i128 {
    match t {
        Term::Const(c) => *c as i128,
        Term::Deref(d) => env(d) as i128,
        Term::Add(ts) => ts.iter().map(|x| eval_term(x, env)).sum(),
        Term::Mul(ts) => ts.iter().map(|x| eval_term(x, env)).product(),
        Term::Neg(x) => -eval_term(x, env),
        Term::Sub(a, b) => eval_term(a, env) - eval_term(b, env),
    }
}

/// Evaluates a formula under an integer assignment to its dereferences.
/// Nested dereferences are looked up as opaque keys.
pub fn eval_formula(f: &Formula, env: &dyn Fn(&Dereference) -> i64) -> bool {
    match f {
        Formula::And(fs) => fs.iter().all(|x| eval_formula(x, env)),
        Formula::Or(fs) => fs.iter().any(|x| eval_formula(x, env)),
        Formula::Not(x) => !eval_formula(x, env),
        Formula::Atom(rel, a, b) => {
            let va = eval_term(a, env);
            let vb = eval_term(b, env);
            match rel {
                Rel::Eq => va == vb,
                Rel::Lt => va < vb,
                Rel::Le => va <= vb,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::memory::{Dereference, ValueType};

    fn norm(s: &str) -> NormalForm {
        normalize(&parse_formula(s).unwrap(), 256).unwrap()
    }

    #[test]
    fn integer_negation_of_strict_bound() {
        // not (x < 3) over integers is x >= 3, i.e. 2 < x.
        let nf = norm("(not (< (DEREF_i32 2 0) 3))");
        assert_eq!(nf.disjuncts.len(), 1);
        let a = &nf.disjuncts[0].atoms[0];
        assert_eq!(a.rel, Rel::Lt);
        assert_eq!(a.lhs, vec![(-1, Monomial::var(Dereference::basic_var(2, ValueType::I32)))]);
        assert_eq!(a.rhs, -2);
        assert_eq!(a.to_formula().to_string(), "(< 2 (DEREF_i32 2 0))");
    }

    #[test]
    fn distributivity_applies() {
        let nf = norm(
            "(and (= (DEREF_i32 1 0) 1) (or (= (DEREF_i32 2 0) 2) (= (DEREF_i32 3 0) 3)))",
        );
        assert_eq!(nf.disjuncts.len(), 2);
        for c in &nf.disjuncts {
            assert_eq!(c.atoms.len(), 2);
        }
    }

    #[test]
    fn subtraction_and_unary_minus_are_rewritten() {
        // -d < -3 becomes 3 < d, printed subtraction-free.
        let nf = norm("(< (- (DEREF_i32 3 4)) (- 3))");
        let f = nf.to_formula();
        assert_eq!(f.to_string(), "(< 3 (DEREF_i32 3 4))");
    }

    #[test]
    fn constants_fold() {
        assert!(norm("(< 1 2)").is_true());
        assert!(norm("(< 2 1)").is_false());
        assert!(norm("(and (= 1 1) (= 2 2))").is_true());
        // 2d = 1 has no integer solution
        assert!(norm("(= (* 2 (DEREF_i32 1 0)) 1)").is_false());
    }

    #[test]
    fn budget_exceeded_reported() {
        // (a1=0 or b1=0) and ... expands exponentially
        let mut parts = Vec::new();
        for i in 1..=12 {
            parts.push(format!(
                "(or (= (DEREF_i32 {} 0) 0) (= (DEREF_i32 {} 1) 0))",
                i, i
            ));
        }
        let f = parse_formula(&format!("(and {})", parts.join(" "))).unwrap();
        assert_eq!(normalize(&f, 256), Err(SizeBudgetExceeded));
    }

    #[test]
    fn normalization_preserves_truth_on_models() {
        let cases = [
            "(not (and (< (DEREF_i32 1 0) 3) (not (= (DEREF_i32 2 0) 0))))",
            "(or (<= (DEREF_i32 1 0) (DEREF_i32 2 0)) (< (- (DEREF_i32 1 0) 4) 0))",
            "(and (not (= (DEREF_i32 1 0) (DEREF_i32 2 0))) (< (* 2 (DEREF_i32 1 0)) 7))",
            "(not (not (< (+ (DEREF_i32 1 0) (DEREF_i32 2 0)) (- 2))))",
        ];
        for src in cases {
            let f = parse_formula(src).unwrap();
            let nf = normalize(&f, 4096).unwrap().to_formula();
            for x in -5i64..=5 {
                for y in -5i64..=5 {
                    let env = move |d: &Dereference| match d.const_seg() {
                        Some(1) => x,
                        Some(2) => y,
                        _ => 0,
                    };
                    assert_eq!(
                        eval_formula(&f, &env),
                        eval_formula(&nf, &env),
                        "mismatch for {src} at ({x},{y})"
                    );
                }
            }
        }
    }
}
