//! Decoding of exchanged formulas into weaker, domain-shaped facts.
//!
//! A received formula may encode information beyond the expressivity of the
//! receiving abstract domain; decoding keeps whatever the domain can express
//! and soundly ignores the rest. Atoms the decoder does not understand only
//! ever widen the result.

use std::collections::BTreeSet;

use super::normalize::{Conjunct, NormAtom, NormalForm};
use super::Rel;
use crate::dbm::Dbm;
use crate::memory::Dereference;

/// Integer interval with optional infinite ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Interval {
    Empty,
    Range(Option<i64>, Option<i64>),
}

impl Interval {
    pub fn top() -> Interval {
        Interval::Range(None, None)
    }

    pub fn singleton(c: i64) -> Interval {
        Interval::Range(Some(c), Some(c))
    }

    pub fn bounded(lo: i64, hi: i64) -> Interval {
        if lo > hi {
            Interval::Empty
        } else {
            Interval::Range(Some(lo), Some(hi))
        }
    }

    pub fn range(lo: Option<i64>, hi: Option<i64>) -> Interval {
        match (lo, hi) {
            (Some(l), Some(h)) if l > h => Interval::Empty,
            _ => Interval::Range(lo, hi),
        }
    }

    pub fn is_empty(self) -> bool {
        self == Interval::Empty
    }

    pub fn is_top(self) -> bool {
        self == Interval::Range(None, None)
    }

    pub fn lo(self) -> Option<i64> {
        match self {
            Interval::Empty => None,
            Interval::Range(l, _) => l,
        }
    }

    pub fn hi(self) -> Option<i64> {
        match self {
            Interval::Empty => None,
            Interval::Range(_, h) => h,
        }
    }

    pub fn contains(self, v: i64) -> bool {
        match self {
            Interval::Empty => false,
            Interval::Range(l, h) => l.map_or(true, |l| l <= v) && h.map_or(true, |h| v <= h),
        }
    }

    pub fn join(self, other: Interval) -> Interval {
        match (self, other) {
            (Interval::Empty, x) | (x, Interval::Empty) => x,
            (Interval::Range(l1, h1), Interval::Range(l2, h2)) => {
                let lo = match (l1, l2) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    _ => None,
                };
                let hi = match (h1, h2) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    _ => None,
                };
                Interval::Range(lo, hi)
            }
        }
    }

    pub fn meet(self, other: Interval) -> Interval {
        match (self, other) {
            (Interval::Empty, _) | (_, Interval::Empty) => Interval::Empty,
            (Interval::Range(l1, h1), Interval::Range(l2, h2)) => {
                let lo = match (l1, l2) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (x, None) | (None, x) => x,
                };
                let hi = match (h1, h2) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (x, None) | (None, x) => x,
                };
                Interval::range(lo, hi)
            }
        }
    }

    /// Standard interval widening: unstable bounds go to infinity.
    pub fn widen(self, newer: Interval) -> Interval {
        match (self, newer) {
            (Interval::Empty, x) => x,
            (x, Interval::Empty) => x,
            (Interval::Range(l1, h1), Interval::Range(l2, h2)) => {
                let lo = match (l1, l2) {
                    (Some(a), Some(b)) if b >= a => Some(a),
                    _ => None,
                };
                let hi = match (h1, h2) {
                    (Some(a), Some(b)) if b <= a => Some(a),
                    _ => None,
                };
                Interval::Range(lo, hi)
            }
        }
    }

    /// Narrowing: infinite bounds recover the newer finite ones.
    pub fn narrow(self, newer: Interval) -> Interval {
        match (self, newer) {
            (Interval::Empty, _) => Interval::Empty,
            (_, Interval::Empty) => Interval::Empty,
            (Interval::Range(l1, h1), Interval::Range(l2, h2)) => {
                let lo = if l1.is_none() { l2 } else { l1 };
                let hi = if h1.is_none() { h2 } else { h1 };
                Interval::range(lo, hi)
            }
        }
    }

    fn clamp128(v: i128) -> Option<i64> {
        if v > i64::MAX as i128 || v < i64::MIN as i128 {
            None
        } else {
            Some(v as i64)
        }
    }

    pub fn add(self, other: Interval) -> Interval {
        match (self, other) {
            (Interval::Empty, _) | (_, Interval::Empty) => Interval::Empty,
            (Interval::Range(l1, h1), Interval::Range(l2, h2)) => {
                let lo = match (l1, l2) {
                    (Some(a), Some(b)) => Interval::clamp128(a as i128 + b as i128),
                    _ => None,
                };
                let hi = match (h1, h2) {
                    (Some(a), Some(b)) => Interval::clamp128(a as i128 + b as i128),
                    _ => None,
                };
                Interval::Range(lo, hi)
            }
        }
    }

    pub fn neg(self) -> Interval {
        match self {
            Interval::Empty => Interval::Empty,
            Interval::Range(l, h) => Interval::Range(
                h.and_then(|v| v.checked_neg()),
                l.and_then(|v| v.checked_neg()),
            ),
        }
    }

    pub fn sub(self, other: Interval) -> Interval {
        self.add(other.neg())
    }

    pub fn mul(self, other: Interval) -> Interval {
        match (self, other) {
            (Interval::Empty, _) | (_, Interval::Empty) => Interval::Empty,
            (Interval::Range(l1, h1), Interval::Range(l2, h2)) => {
                // any infinite end makes the product unbounded unless the
                // other side is exactly [0,0]
                if self == Interval::singleton(0) || other == Interval::singleton(0) {
                    return Interval::singleton(0);
                }
                match (l1, h1, l2, h2) {
                    (Some(a), Some(b), Some(c), Some(d)) => {
                        let prods = [
                            a as i128 * c as i128,
                            a as i128 * d as i128,
                            b as i128 * c as i128,
                            b as i128 * d as i128,
                        ];
                        let lo = *prods.iter().min().unwrap();
                        let hi = *prods.iter().max().unwrap();
                        Interval::Range(Interval::clamp128(lo), Interval::clamp128(hi))
                    }
                    _ => Interval::top(),
                }
            }
        }
    }
}

/// The single-dereference view of an atom: coefficient of `d` if the atom
/// constrains `d` alone.
fn sole_var_coeff(atom: &NormAtom, d: &Dereference) -> Option<i64> {
    if atom.lhs.len() != 1 {
        return None;
    }
    let (c, m) = &atom.lhs[0];
    if m.single()? == d {
        Some(*c)
    } else {
        None
    }
}

fn atom_to_interval(atom: &NormAtom, d: &Dereference) -> Interval {
    let c = match sole_var_coeff(atom, d) {
        Some(c) => c,
        None => return Interval::top(),
    };
    match atom.rel {
        Rel::Eq => {
            if atom.rhs % c == 0 {
                Interval::singleton(atom.rhs / c)
            } else {
                Interval::Empty
            }
        }
        Rel::Lt => {
            if c > 0 {
                // c*d < rhs  =>  d <= floor((rhs-1)/c)
                Interval::Range(None, Some((atom.rhs - 1).div_euclid(c)))
            } else {
                // c*d < rhs with c < 0  =>  d >= floor(rhs/c) + 1
                Interval::Range(Some(atom.rhs.div_euclid(c) + 1), None)
            }
        }
        Rel::Le => unreachable!("normal forms carry no <="),
    }
}

/// Sound interval for `d` under the formula: every model's value of `d` lies
/// inside the result. Disjunctions decode to the interval hull; atoms beyond
/// single-variable shape are ignored.
pub fn decode_to_interval(nf: &NormalForm, d: &Dereference) -> Interval {
    if !d.vtype.is_signed_int() && d.vtype != crate::memory::ValueType::Seg
        && d.vtype != crate::memory::ValueType::Off
    {
        return Interval::top();
    }
    let mut out = Interval::Empty;
    for conj in &nf.disjuncts {
        let mut iv = Interval::top();
        for atom in &conj.atoms {
            iv = iv.meet(atom_to_interval(atom, d));
            if iv.is_empty() {
                break;
            }
        }
        out = out.join(iv);
        if out.is_top() {
            break;
        }
    }
    out
}

/// `s1*d1 [+ s2*d2] <= bound`, the constraint shape an octagon can absorb.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct OctConstraint {
    pub s1: i8,
    pub d1: Dereference,
    pub s2: Option<(i8, Dereference)>,
    pub bound: i64,
}

/// Octagonal view of an atom over the tracked dereference list, if it has
/// unit coefficients and at most two variables from the list.
fn atom_oct_view(atom: &NormAtom, vars: &[Dereference]) -> Option<Vec<(i8, usize)>> {
    if atom.lhs.is_empty() || atom.lhs.len() > 2 {
        return None;
    }
    let mut out = Vec::new();
    for (c, m) in &atom.lhs {
        if *c != 1 && *c != -1 {
            return None;
        }
        let d = m.single()?;
        let idx = vars.iter().position(|v| v == d)?;
        out.push((*c as i8, idx));
    }
    Some(out)
}

/// Sound set of octagonal constraints implied by the formula: every model
/// satisfies every emitted constraint. Disjunctions are joined after
/// per-disjunct closure, so the result is the octagon hull.
pub fn decode_to_octagon_constraints(
    nf: &NormalForm,
    ds: &BTreeSet<Dereference>,
) -> Vec<OctConstraint> {
    let vars: Vec<Dereference> = ds.iter().cloned().collect();
    if vars.is_empty() {
        return Vec::new();
    }
    let mut joined: Option<Dbm> = None;
    for conj in &nf.disjuncts {
        let mut dbm = Dbm::top(vars.len());
        for atom in &conj.atoms {
            let view = match atom_oct_view(atom, &vars) {
                Some(v) => v,
                None => continue,
            };
            // strict < over integers becomes <= rhs-1; equalities split
            let bounds: &[(i64, bool)] = match atom.rel {
                Rel::Lt => &[(1, false)],
                Rel::Eq => &[(1, false), (-1, true)],
                Rel::Le => unreachable!(),
            };
            for &(sign, flip) in bounds {
                let c = if atom.rel == Rel::Lt {
                    atom.rhs - 1
                } else {
                    sign * atom.rhs
                };
                match view.as_slice() {
                    [(s, i)] => {
                        let s = if flip { -s } else { *s };
                        dbm.add_unary(s, *i, c);
                    }
                    [(s1, i1), (s2, i2)] if i1 != i2 => {
                        let (s1v, s2v) = if flip { (-s1, -s2) } else { (*s1, *s2) };
                        dbm.add_pair(s1v, *i1, s2v, *i2, c);
                    }
                    _ => {}
                }
            }
        }
        if !dbm.close() {
            continue; // unreachable disjunct
        }
        joined = Some(match joined {
            None => dbm,
            Some(j) => j.join(&dbm),
        });
    }
    let dbm = match joined {
        Some(d) => d,
        None => return Vec::new(),
    };
    let mut out = Vec::new();
    for i in 0..vars.len() {
        if let Some(c) = dbm.upper(i) {
            out.push(OctConstraint {
                s1: 1,
                d1: vars[i].clone(),
                s2: None,
                bound: c,
            });
        }
        if let Some(c) = dbm.lower(i) {
            out.push(OctConstraint {
                s1: -1,
                d1: vars[i].clone(),
                s2: None,
                bound: -c,
            });
        }
        for j in (i + 1)..vars.len() {
            for (s1, s2) in [(1i8, 1i8), (1, -1), (-1, 1), (-1, -1)] {
                if let Some(c) = dbm.pair_bound(s1, i, s2, j) {
                    out.push(OctConstraint {
                        s1,
                        d1: vars[i].clone(),
                        s2: Some((s2, vars[j].clone())),
                        bound: c,
                    });
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Keeps, within each disjunct, the atoms linked to `ds` through shared
/// dereferences; everything else is dropped. The result is entailed by the
/// input.
pub fn restrict_to_dereferences(nf: &NormalForm, ds: &BTreeSet<Dereference>) -> NormalForm {
    if nf.is_false() {
        return NormalForm::falsity();
    }
    let mut out = Vec::new();
    for conj in &nf.disjuncts {
        let mut linked: BTreeSet<Dereference> = ds.clone();
        loop {
            let before = linked.len();
            for atom in &conj.atoms {
                if atom.derefs().any(|d| linked.contains(d)) {
                    for d in atom.derefs() {
                        linked.insert(d.clone());
                    }
                }
            }
            if linked.len() == before {
                break;
            }
        }
        let atoms: Vec<NormAtom> = conj
            .atoms
            .iter()
            .filter(|a| a.derefs().any(|d| linked.contains(d)))
            .cloned()
            .collect();
        out.push(Conjunct { atoms });
    }
    if out.iter().any(Conjunct::is_true) {
        return NormalForm::truth();
    }
    out.sort();
    out.dedup();
    NormalForm { disjuncts: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{normalize, parse_formula};
    use crate::memory::ValueType;

    fn nf(s: &str) -> NormalForm {
        normalize(&parse_formula(s).unwrap(), 256).unwrap()
    }

    fn d34() -> Dereference {
        Dereference::at(3, 4, ValueType::I32)
    }

    #[test]
    fn equality_decodes_to_singleton() {
        let iv = decode_to_interval(&nf("(= (DEREF_i32 3 4) 3)"), &d34());
        assert_eq!(iv, Interval::singleton(3));
    }

    #[test]
    fn strict_bounds_decode_exactly() {
        let iv = decode_to_interval(
            &nf("(and (< (- (DEREF_i32 3 4)) (- 3)) (< (DEREF_i32 3 4) 10))"),
            &d34(),
        );
        assert_eq!(iv, Interval::bounded(4, 9));
    }

    #[test]
    fn multi_variable_equality_decodes_to_top() {
        let iv = decode_to_interval(
            &nf("(= (+ (* 2 (DEREF_i32 3 4)) (DEREF_i32 4 0)) 10)"),
            &d34(),
        );
        assert!(iv.is_top());
    }

    #[test]
    fn disjunction_decodes_to_hull() {
        let iv = decode_to_interval(
            &nf("(or (< (DEREF_i32 3 4) 3) (= (DEREF_i32 3 4) 10))"),
            &d34(),
        );
        assert_eq!(iv, Interval::Range(None, Some(10)));
    }

    #[test]
    fn octagon_equality_splits() {
        let d = Dereference::basic_var(1, ValueType::I32);
        let ds: BTreeSet<_> = [d.clone()].into_iter().collect();
        let cs = decode_to_octagon_constraints(&nf("(= (DEREF_i32 1 0) 3)"), &ds);
        assert!(cs.contains(&OctConstraint {
            s1: 1,
            d1: d.clone(),
            s2: None,
            bound: 3
        }));
        assert!(cs.contains(&OctConstraint {
            s1: -1,
            d1: d,
            s2: None,
            bound: -3
        }));
    }

    #[test]
    fn octagon_strict_sum_tightens() {
        let d1 = Dereference::basic_var(1, ValueType::I32);
        let d2 = Dereference::basic_var(2, ValueType::I32);
        let ds: BTreeSet<_> = [d1.clone(), d2.clone()].into_iter().collect();
        let cs = decode_to_octagon_constraints(
            &nf("(< (+ (DEREF_i32 1 0) (DEREF_i32 2 0)) 7)"),
            &ds,
        );
        assert!(cs.contains(&OctConstraint {
            s1: 1,
            d1,
            s2: Some((1, d2)),
            bound: 6
        }));
    }

    #[test]
    fn octagon_hull_of_two_boxes_matches_enumeration() {
        // (1<=x<=2 and 1<=y<=2) or (4<=x<=5 and 4<=y<=5)
        let src = "(or (and (< 0 (DEREF_i32 1 0)) (< (DEREF_i32 1 0) 3) \
                        (< 0 (DEREF_i32 2 0)) (< (DEREF_i32 2 0) 3)) \
                   (and (< 3 (DEREF_i32 1 0)) (< (DEREF_i32 1 0) 6) \
                        (< 3 (DEREF_i32 2 0)) (< (DEREF_i32 2 0) 6)))";
        let formula = parse_formula(src).unwrap();
        let n = nf(src);
        let d1 = Dereference::basic_var(1, ValueType::I32);
        let d2 = Dereference::basic_var(2, ValueType::I32);
        let ds: BTreeSet<_> = [d1.clone(), d2.clone()].into_iter().collect();
        let cs = decode_to_octagon_constraints(&n, &ds);

        // enumeration oracle: tightest octagon containing all integer models
        let mut tight: std::collections::BTreeMap<(i8, i8), i64> = std::collections::BTreeMap::new();
        let mut any = false;
        for x in -8i64..=8 {
            for y in -8i64..=8 {
                let env = move |d: &Dereference| match d.const_seg() {
                    Some(1) => x,
                    Some(2) => y,
                    _ => 0,
                };
                if crate::formula::eval_formula(&formula, &env) {
                    any = true;
                    for (s1, s2) in [(1i8, 1i8), (1, -1), (-1, 1), (-1, -1)] {
                        let v = s1 as i64 * x + s2 as i64 * y;
                        tight
                            .entry((s1, s2))
                            .and_modify(|b| *b = (*b).max(v))
                            .or_insert(v);
                    }
                }
            }
        }
        assert!(any);
        for ((s1, s2), want) in tight {
            let got = cs
                .iter()
                .find(|c| {
                    c.s1 == s1 && matches!(&c.s2, Some((s, d)) if *s == s2 && *d == d2) && c.d1 == d1
                })
                .map(|c| c.bound);
            assert_eq!(got, Some(want), "bound for ({s1},{s2})");
        }
        // soundness: every emitted constraint holds on every model
        for x in -8i64..=8 {
            for y in -8i64..=8 {
                let env = move |d: &Dereference| match d.const_seg() {
                    Some(1) => x,
                    Some(2) => y,
                    _ => 0,
                };
                if crate::formula::eval_formula(&formula, &env) {
                    for c in &cs {
                        let mut v = c.s1 as i64 * if c.d1 == d1 { x } else { y };
                        if let Some((s2, d)) = &c.s2 {
                            v += *s2 as i64 * if *d == d1 { x } else { y };
                        }
                        assert!(v <= c.bound);
                    }
                }
            }
        }
    }

    #[test]
    fn restrict_keeps_linked_atoms() {
        // a + 2(b-3) < 0 and c = 7, restricted to {a}: the a/b atom stays
        // linked through a, the c atom drops.
        let src = "(and (< (+ (DEREF_i32 1 0) (* 2 (- (DEREF_i32 2 0) 3))) 0) \
                        (= (DEREF_i32 3 0) 7))";
        let n = nf(src);
        let a = Dereference::basic_var(1, ValueType::I32);
        let ds: BTreeSet<_> = [a].into_iter().collect();
        let r = restrict_to_dereferences(&n, &ds);
        assert_eq!(r.disjuncts.len(), 1);
        assert_eq!(r.disjuncts[0].atoms.len(), 1);
        let kept = &r.disjuncts[0].atoms[0];
        assert!(kept.mentions(&Dereference::basic_var(2, ValueType::I32)));
    }

    #[test]
    fn restrict_to_empty_set_is_tautology() {
        let n = nf("(and (= (DEREF_i32 1 0) 1) (= (DEREF_i32 2 0) 2))");
        let r = restrict_to_dereferences(&n, &BTreeSet::new());
        assert!(r.is_true());
    }

    #[test]
    fn restrict_covering_all_is_identity() {
        let n = nf("(and (= (DEREF_i32 1 0) 1) (< (DEREF_i32 2 0) 2))");
        let ds = n.derefs();
        let r = restrict_to_dereferences(&n, &ds);
        assert_eq!(r, n);
    }

    #[test]
    fn interval_ops_sanity() {
        let a = Interval::bounded(0, 5);
        let b = Interval::bounded(3, 10);
        assert_eq!(a.meet(b), Interval::bounded(3, 5));
        assert_eq!(a.join(b), Interval::bounded(0, 10));
        assert_eq!(a.widen(Interval::bounded(0, 11)), Interval::Range(Some(0), None));
        assert_eq!(
            Interval::Range(Some(0), None).narrow(Interval::bounded(0, 10)),
            Interval::bounded(0, 10)
        );
        assert_eq!(a.add(b), Interval::bounded(3, 15));
        assert_eq!(a.mul(Interval::singleton(-2)), Interval::bounded(-10, 0));
    }
}
