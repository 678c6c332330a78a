//! Internal, deliberately incomplete decision engine over linear integer
//! arithmetic.
//!
//! Satisfiability is decided by Gaussian substitution of equalities followed
//! by Fourier-Motzkin elimination over rationals, with integer tightening on
//! single-variable constraints. Nonlinear atoms force `Unknown`, as does any
//! blow-up past the size budget. `Sat` is only reported together with a
//! constructed witness; `Unsat` answers are sound for integer-valued
//! variables.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::formula::{normalize, Conjunct, Formula, NormalForm, Rel, DEFAULT_DISJUNCT_CAP};
use crate::memory::Dereference;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinRel {
    Le,
    Eq,
}

/// One linear constraint: `coeffs . vars REL rhs`.
#[derive(Clone, Debug)]
pub struct LinConstraint {
    pub coeffs: Vec<BigRational>,
    pub rel: LinRel,
    pub rhs: BigRational,
}

/// A finite system of linear constraints over integer-valued variables.
#[derive(Clone, Debug, Default)]
pub struct LinearSystem {
    pub num_vars: usize,
    pub constraints: Vec<LinConstraint>,
}

impl LinearSystem {
    pub fn new(num_vars: usize) -> LinearSystem {
        LinearSystem {
            num_vars,
            constraints: Vec::new(),
        }
    }

    pub fn le(&mut self, coeffs: Vec<i64>, rhs: i64) {
        self.push(coeffs, LinRel::Le, rhs);
    }

    pub fn eq(&mut self, coeffs: Vec<i64>, rhs: i64) {
        self.push(coeffs, LinRel::Eq, rhs);
    }

    fn push(&mut self, coeffs: Vec<i64>, rel: LinRel, rhs: i64) {
        assert_eq!(coeffs.len(), self.num_vars);
        self.constraints.push(LinConstraint {
            coeffs: coeffs.into_iter().map(rat).collect(),
            rel,
            rhs: rat(rhs),
        });
    }
}

#[derive(Clone, Debug)]
pub struct Witness {
    pub values: Vec<BigRational>,
    /// Present when every component is integral (or could be rounded to an
    /// integral point that still satisfies the system).
    pub integral: Option<Vec<i64>>,
}

#[derive(Clone, Debug)]
pub struct SatOutcome {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
}

impl SatOutcome {
    fn unsat() -> SatOutcome {
        SatOutcome {
            verdict: Verdict::Unsat,
            witness: None,
        }
    }

    fn unknown() -> SatOutcome {
        SatOutcome {
            verdict: Verdict::Unknown,
            witness: None,
        }
    }
}

pub fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

const CONSTRAINT_BUDGET: usize = 4000;

#[derive(Clone, Debug)]
struct Sparse {
    coeffs: BTreeMap<usize, BigRational>,
    rel: LinRel,
    rhs: BigRational,
}

impl Sparse {
    fn normalize(mut self) -> Option<Result<Sparse, ()>> {
        self.coeffs.retain(|_, c| !c.is_zero());
        if self.coeffs.is_empty() {
            let ok = match self.rel {
                LinRel::Le => !self.rhs.is_negative(),
                LinRel::Eq => self.rhs.is_zero(),
            };
            return if ok { None } else { Some(Err(())) };
        }
        Some(Ok(self))
    }
}

enum Step {
    /// var := sum(coeffs . vars) + konst
    Subst {
        var: usize,
        coeffs: BTreeMap<usize, BigRational>,
        konst: BigRational,
    },
    /// var eliminated by FM; bounds are in terms of the remaining vars:
    /// lowers give `var >= expr`, uppers give `var <= expr`.
    Eliminate {
        var: usize,
        lowers: Vec<(BTreeMap<usize, BigRational>, BigRational)>,
        uppers: Vec<(BTreeMap<usize, BigRational>, BigRational)>,
    },
}

fn floor(r: &BigRational) -> BigInt {
    r.floor().to_integer()
}

fn ceil(r: &BigRational) -> BigInt {
    r.ceil().to_integer()
}

/// Decides satisfiability of a linear system over integer-valued variables.
pub fn check_sat_system(sys: &LinearSystem) -> SatOutcome {
    let mut cs: Vec<Sparse> = Vec::new();
    for c in &sys.constraints {
        let coeffs: BTreeMap<usize, BigRational> = c
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, v)| (i, v.clone()))
            .collect();
        match (Sparse {
            coeffs,
            rel: c.rel,
            rhs: c.rhs.clone(),
        })
        .normalize()
        {
            None => {}
            Some(Err(())) => return SatOutcome::unsat(),
            Some(Ok(s)) => cs.push(s),
        }
    }
    let mut steps: Vec<Step> = Vec::new();

    loop {
        if cs.len() > CONSTRAINT_BUDGET {
            return SatOutcome::unknown();
        }
        // integer tightening of single-variable constraints
        let mut tightened = Vec::with_capacity(cs.len());
        for c in cs.drain(..) {
            if c.coeffs.len() == 1 {
                let (&v, coeff) = c.coeffs.iter().next().unwrap();
                let bound = &c.rhs / coeff;
                let t = match (c.rel, coeff.is_positive()) {
                    (LinRel::Le, true) => Sparse {
                        coeffs: [(v, rat(1))].into_iter().collect(),
                        rel: LinRel::Le,
                        rhs: BigRational::from_integer(floor(&bound)),
                    },
                    (LinRel::Le, false) => Sparse {
                        coeffs: [(v, rat(-1))].into_iter().collect(),
                        rel: LinRel::Le,
                        rhs: BigRational::from_integer(-ceil(&bound)),
                    },
                    (LinRel::Eq, _) => {
                        if !bound.is_integer() {
                            return SatOutcome::unsat();
                        }
                        Sparse {
                            coeffs: [(v, rat(1))].into_iter().collect(),
                            rel: LinRel::Eq,
                            rhs: bound,
                        }
                    }
                };
                tightened.push(t);
            } else {
                tightened.push(c);
            }
        }
        cs = tightened;

        // substitute one equality, if any
        if let Some(idx) = cs.iter().position(|c| c.rel == LinRel::Eq) {
            let eqc = cs.remove(idx);
            // solve for the variable with fewest occurrences elsewhere
            let var = *eqc
                .coeffs
                .keys()
                .min_by_key(|v| {
                    (
                        cs.iter().filter(|c| c.coeffs.contains_key(v)).count(),
                        **v,
                    )
                })
                .unwrap();
            let cv = eqc.coeffs[&var].clone();
            let mut coeffs = BTreeMap::new();
            for (v, c) in &eqc.coeffs {
                if *v != var {
                    coeffs.insert(*v, -(c / &cv));
                }
            }
            let konst = &eqc.rhs / &cv;
            let mut next = Vec::with_capacity(cs.len());
            for c in cs.drain(..) {
                let sub = substitute(&c, var, &coeffs, &konst);
                match sub.normalize() {
                    None => {}
                    Some(Err(())) => return SatOutcome::unsat(),
                    Some(Ok(s)) => next.push(s),
                }
            }
            cs = next;
            steps.push(Step::Subst { var, coeffs, konst });
            continue;
        }

        // pick an elimination variable: fewest occurrences, then lowest index
        let mut occ: BTreeMap<usize, usize> = BTreeMap::new();
        for c in &cs {
            for v in c.coeffs.keys() {
                *occ.entry(*v).or_insert(0) += 1;
            }
        }
        let var = match occ.iter().min_by_key(|(v, n)| (**n, **v)) {
            Some((v, _)) => *v,
            None => break, // only constant constraints remain (already checked)
        };

        let mut lowers = Vec::new();
        let mut uppers = Vec::new();
        let mut rest = Vec::new();
        for c in cs.drain(..) {
            match c.coeffs.get(&var) {
                None => rest.push(c),
                Some(coeff) => {
                    // normalize to var <= expr (coeff > 0) or var >= expr
                    let cv = coeff.clone();
                    let mut expr: BTreeMap<usize, BigRational> = BTreeMap::new();
                    for (v, co) in &c.coeffs {
                        if *v != var {
                            expr.insert(*v, -(co / &cv));
                        }
                    }
                    let k = &c.rhs / &cv;
                    if cv.is_positive() {
                        uppers.push((expr, k));
                    } else {
                        lowers.push((expr, k));
                    }
                }
            }
        }
        if lowers.len() * uppers.len() + rest.len() > CONSTRAINT_BUDGET {
            return SatOutcome::unknown();
        }
        for (lo_e, lo_k) in &lowers {
            for (up_e, up_k) in &uppers {
                // lo <= var <= up  =>  lo - up <= 0
                let mut coeffs = lo_e.clone();
                for (v, c) in up_e {
                    let e = coeffs.entry(*v).or_insert_with(BigRational::zero);
                    *e -= c;
                }
                let s = Sparse {
                    coeffs,
                    rel: LinRel::Le,
                    rhs: up_k - lo_k,
                };
                match s.normalize() {
                    None => {}
                    Some(Err(())) => return SatOutcome::unsat(),
                    Some(Ok(s)) => rest.push(s),
                }
            }
        }
        cs = rest;
        steps.push(Step::Eliminate { var, lowers, uppers });
    }

    // satisfiable: back-substitute a witness
    let mut values: BTreeMap<usize, BigRational> = BTreeMap::new();
    for step in steps.iter().rev() {
        match step {
            Step::Eliminate { var, lowers, uppers } => {
                let eval = |expr: &BTreeMap<usize, BigRational>, k: &BigRational| {
                    let mut acc = k.clone();
                    for (v, c) in expr {
                        acc += c * values.get(v).cloned().unwrap_or_else(BigRational::zero);
                    }
                    acc
                };
                let lo = lowers.iter().map(|(e, k)| eval(e, k)).max();
                let hi = uppers.iter().map(|(e, k)| eval(e, k)).min();
                values.insert(*var, pick_value(lo, hi));
            }
            Step::Subst { var, coeffs, konst } => {
                let mut acc = konst.clone();
                for (v, c) in coeffs {
                    acc += c * values.get(v).cloned().unwrap_or_else(BigRational::zero);
                }
                values.insert(*var, acc);
            }
        }
    }
    let values: Vec<BigRational> = (0..sys.num_vars)
        .map(|v| values.get(&v).cloned().unwrap_or_else(BigRational::zero))
        .collect();
    debug_assert!(satisfies(sys, &values));
    let integral = if values.iter().all(|v| v.is_integer()) {
        let ints: Option<Vec<i64>> = values
            .iter()
            .map(|v| i64::try_from(&v.to_integer()).ok())
            .collect();
        ints
    } else {
        None
    };
    SatOutcome {
        verdict: Verdict::Sat,
        witness: Some(Witness { values, integral }),
    }
}

fn substitute(
    c: &Sparse,
    var: usize,
    coeffs: &BTreeMap<usize, BigRational>,
    konst: &BigRational,
) -> Sparse {
    match c.coeffs.get(&var) {
        None => c.clone(),
        Some(cv) => {
            let cv = cv.clone();
            let mut out: BTreeMap<usize, BigRational> = c.coeffs.clone();
            out.remove(&var);
            for (v, sc) in coeffs {
                let e = out.entry(*v).or_insert_with(BigRational::zero);
                *e += &cv * sc;
            }
            Sparse {
                coeffs: out,
                rel: c.rel,
                rhs: &c.rhs - &cv * konst,
            }
        }
    }
}

fn pick_value(lo: Option<BigRational>, hi: Option<BigRational>) -> BigRational {
    match (lo, hi) {
        (None, None) => BigRational::zero(),
        (Some(l), None) => {
            let c = ceil(&l);
            let z = BigInt::zero();
            BigRational::from_integer(if c <= z { z } else { c })
        }
        (None, Some(h)) => {
            let f = floor(&h);
            let z = BigInt::zero();
            BigRational::from_integer(if f >= z { z } else { f })
        }
        (Some(l), Some(h)) => {
            let cl = ceil(&l);
            let fh = floor(&h);
            if cl <= fh {
                // some integer fits; take the one closest to zero
                let z = BigInt::zero();
                let v = if cl <= z && z <= fh {
                    z
                } else if cl > z {
                    cl
                } else {
                    fh
                };
                BigRational::from_integer(v)
            } else {
                (l + h) / rat(2)
            }
        }
    }
}

/// Checks a candidate assignment against a system, in rational arithmetic.
pub fn satisfies(sys: &LinearSystem, values: &[BigRational]) -> bool {
    sys.constraints.iter().all(|c| {
        let mut acc = BigRational::zero();
        for (coeff, v) in c.coeffs.iter().zip(values.iter()) {
            acc += coeff * v;
        }
        match c.rel {
            LinRel::Le => acc <= c.rhs,
            LinRel::Eq => acc == c.rhs,
        }
    })
}

/// Lowers one DNF conjunct to a linear system over the given variable order.
/// Returns `None` if any atom is nonlinear.
pub fn system_of_conjunct(conj: &Conjunct, vars: &[Dereference]) -> Option<LinearSystem> {
    let index: BTreeMap<&Dereference, usize> =
        vars.iter().enumerate().map(|(i, d)| (d, i)).collect();
    let mut sys = LinearSystem::new(vars.len());
    for atom in &conj.atoms {
        if !atom.is_linear() {
            return None;
        }
        let mut coeffs = vec![0i64; vars.len()];
        for (c, m) in &atom.lhs {
            let d = m.single().expect("linear atom");
            coeffs[index[d]] += *c;
        }
        match atom.rel {
            Rel::Eq => sys.eq(coeffs, atom.rhs),
            Rel::Lt => sys.le(coeffs, atom.rhs - 1),
            Rel::Le => unreachable!("normal forms carry no <="),
        }
    }
    Some(sys)
}

fn normal_form_of(f: &Formula) -> Option<NormalForm> {
    normalize(f, DEFAULT_DISJUNCT_CAP).ok()
}

/// Satisfiability of a formula: DNF split, each disjunct checked separately.
pub fn check_sat(f: &Formula) -> Verdict {
    check_sat_detailed(f).verdict
}

pub fn check_sat_detailed(f: &Formula) -> SatOutcome {
    let nf = match normal_form_of(f) {
        Some(nf) => nf,
        None => return SatOutcome::unknown(),
    };
    check_sat_normal(&nf)
}

pub fn check_sat_normal(nf: &NormalForm) -> SatOutcome {
    let vars: Vec<Dereference> = nf.derefs().into_iter().collect();
    let mut saw_unknown = false;
    for conj in &nf.disjuncts {
        match system_of_conjunct(conj, &vars) {
            None => saw_unknown = true,
            Some(sys) => {
                let out = check_sat_system(&sys);
                match out.verdict {
                    Verdict::Sat => return out,
                    Verdict::Unknown => saw_unknown = true,
                    Verdict::Unsat => {}
                }
            }
        }
    }
    if saw_unknown {
        SatOutcome::unknown()
    } else {
        SatOutcome::unsat()
    }
}

const ENTAILMENT_PAIR_BUDGET: usize = 512;

/// Three-valued entailment: `Sat` means `a` entails `b`, `Unsat` means it
/// does not (an integral countermodel exists), `Unknown` otherwise.
pub fn entails(a: &Formula, b: &Formula) -> Verdict {
    let nfa = match normal_form_of(a) {
        Some(x) => x,
        None => return Verdict::Unknown,
    };
    let not_b = Formula::Not(Box::new(b.clone()));
    let nfb = match normal_form_of(&not_b) {
        Some(x) => x,
        None => return Verdict::Unknown,
    };
    if nfa.is_false() || nfb.is_false() {
        return Verdict::Sat;
    }
    if nfa.disjuncts.len() * nfb.disjuncts.len() > ENTAILMENT_PAIR_BUDGET {
        return Verdict::Unknown;
    }
    let mut vars: std::collections::BTreeSet<Dereference> = nfa.derefs();
    vars.extend(nfb.derefs());
    let vars: Vec<Dereference> = vars.into_iter().collect();
    let mut saw_unknown = false;
    for da in &nfa.disjuncts {
        for db in &nfb.disjuncts {
            let merged = Conjunct {
                atoms: da.atoms.iter().chain(db.atoms.iter()).cloned().collect(),
            };
            match system_of_conjunct(&merged, &vars) {
                None => saw_unknown = true,
                Some(sys) => {
                    let out = check_sat_system(&sys);
                    match out.verdict {
                        Verdict::Sat => {
                            // a definite countermodel needs an integral point
                            if out.witness.and_then(|w| w.integral).is_some() {
                                return Verdict::Unsat;
                            }
                            saw_unknown = true;
                        }
                        Verdict::Unknown => saw_unknown = true,
                        Verdict::Unsat => {}
                    }
                }
            }
        }
    }
    if saw_unknown {
        Verdict::Unknown
    } else {
        Verdict::Sat
    }
}

/// Logical equality of two formulas, via entailment both ways.
pub fn equivalent(a: &Formula, b: &Formula) -> Verdict {
    match entails(a, b) {
        Verdict::Sat => entails(b, a),
        v => v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn sum_bound_is_unsat() {
        // x >= 1, y >= 2, x + y <= 2
        let mut sys = LinearSystem::new(2);
        sys.le(vec![-1, 0], -1);
        sys.le(vec![0, -1], -2);
        sys.le(vec![1, 1], 2);
        assert_eq!(check_sat_system(&sys).verdict, Verdict::Unsat);
    }

    #[test]
    fn empty_range_is_unsat() {
        // x < 3 and x > 5
        let v = check_sat(&f(
            "(and (< (DEREF_i32 1 0) 3) (< 5 (DEREF_i32 1 0)))",
        ));
        assert_eq!(v, Verdict::Unsat);
    }

    #[test]
    fn nonlinear_is_unknown() {
        let v = check_sat(&f("(<= (* (DEREF_i32 1 0) (DEREF_i32 1 0)) 4)"));
        assert_eq!(v, Verdict::Unknown);
    }

    #[test]
    fn sat_produces_verifiable_witness() {
        let mut sys = LinearSystem::new(3);
        sys.le(vec![1, 1, 0], 5);
        sys.le(vec![-1, 0, 1], 2);
        sys.eq(vec![1, -1, 0], 1);
        let out = check_sat_system(&sys);
        assert_eq!(out.verdict, Verdict::Sat);
        let w = out.witness.unwrap();
        assert!(satisfies(&sys, &w.values));
        assert!(w.integral.is_some());
    }

    #[test]
    fn divisibility_contradiction_found() {
        // 2x = 1 has no integer solution
        let mut sys = LinearSystem::new(1);
        sys.eq(vec![2], 1);
        assert_eq!(check_sat_system(&sys).verdict, Verdict::Unsat);
    }

    #[test]
    fn entailment_basic() {
        let a = f("(and (< -1 (DEREF_i32 1 0)) (< (DEREF_i32 1 0) 6))"); // 0..5
        let b = f("(and (< -1 (DEREF_i32 1 0)) (< (DEREF_i32 1 0) 11))"); // 0..10
        assert_eq!(entails(&a, &b), Verdict::Sat);
        assert_eq!(entails(&b, &a), Verdict::Unsat);
    }

    #[test]
    fn entails_self() {
        for s in [
            "(= 1 1)",
            "(< (DEREF_i32 1 0) 4)",
            "(or (= (DEREF_i32 1 0) 1) (< (DEREF_i32 2 0) 0))",
        ] {
            assert_eq!(entails(&f(s), &f(s)), Verdict::Sat, "{s}");
        }
    }

    #[test]
    fn adding_constraints_never_flips_unsat_to_sat() {
        let base = f("(and (< (DEREF_i32 1 0) 0) (< 0 (DEREF_i32 1 0)))");
        assert_eq!(check_sat(&base), Verdict::Unsat);
        let more = Formula::And(vec![base, f("(< (DEREF_i32 2 0) 7)")]);
        assert_eq!(check_sat(&more), Verdict::Unsat);
    }
}
