//! Difference-bound matrix over doubled variables, the standard octagon
//! encoding: for variables x_0..x_{n-1} the matrix ranges over 2n indices
//! with v_{2i} = +x_i and v_{2i+1} = -x_i, and entry (a,b) bounds
//! v_a - v_b <= m[a][b]. Closure is Floyd-Warshall plus the unary
//! strengthening step, with integer tightening of the 2c diagonals.

/// `None` stands for +infinity.
type Bound = Option<i64>;

fn badd(a: Bound, b: Bound) -> Bound {
    match (a, b) {
        (Some(x), Some(y)) => {
            let s = x as i128 + y as i128;
            Some(s.clamp(i64::MIN as i128, i64::MAX as i128) as i64)
        }
        _ => None,
    }
}

fn bmin(a: Bound, b: Bound) -> Bound {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

fn ble(a: Bound, b: Bound) -> bool {
    match (a, b) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(x), Some(y)) => x <= y,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dbm {
    n: usize,
    m: Vec<Bound>,
}

pub fn pos(i: usize) -> usize {
    2 * i
}

pub fn neg(i: usize) -> usize {
    2 * i + 1
}

fn bar(a: usize) -> usize {
    a ^ 1
}

impl Dbm {
    pub fn top(n: usize) -> Dbm {
        let dim = 2 * n;
        let mut m = vec![None; dim * dim];
        for a in 0..dim {
            m[a * dim + a] = Some(0);
        }
        Dbm { n, m }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn get(&self, a: usize, b: usize) -> Bound {
        self.m[a * self.dim() + b]
    }

    fn set_min(&mut self, a: usize, b: usize, c: Bound) {
        let d = self.dim();
        self.m[a * d + b] = bmin(self.m[a * d + b], c);
    }

    /// Adds `s1*x_i + s2*x_j <= c` (two-variable, i != j).
    pub fn add_pair(&mut self, s1: i8, i: usize, s2: i8, j: usize, c: i64) {
        debug_assert!(i != j);
        let (a, b) = match (s1 > 0, s2 > 0) {
            (true, true) => (pos(i), neg(j)),   //  x_i + x_j <= c
            (true, false) => (pos(i), pos(j)),  //  x_i - x_j <= c
            (false, true) => (neg(i), neg(j)),  // -x_i + x_j <= c
            (false, false) => (neg(i), pos(j)), // -x_i - x_j <= c
        };
        self.set_min(a, b, Some(c));
        self.set_min(bar(b), bar(a), Some(c));
    }

    /// Adds `s*x_i <= c`.
    pub fn add_unary(&mut self, s: i8, i: usize, c: i64) {
        let twoc = (c as i128 * 2).clamp(i64::MIN as i128, i64::MAX as i128) as i64;
        if s > 0 {
            self.set_min(pos(i), neg(i), Some(twoc));
        } else {
            self.set_min(neg(i), pos(i), Some(twoc));
        }
    }

    pub fn upper(&self, i: usize) -> Bound {
        self.get(pos(i), neg(i)).map(|c| c.div_euclid(2))
    }

    pub fn lower(&self, i: usize) -> Bound {
        self.get(neg(i), pos(i)).map(|c| -c.div_euclid(2))
    }

    /// Tightest c with `s1*x_i + s2*x_j <= c`, if finite.
    pub fn pair_bound(&self, s1: i8, i: usize, s2: i8, j: usize) -> Bound {
        let (a, b) = match (s1 > 0, s2 > 0) {
            (true, true) => (pos(i), neg(j)),
            (true, false) => (pos(i), pos(j)),
            (false, true) => (neg(i), neg(j)),
            (false, false) => (neg(i), pos(j)),
        };
        self.get(a, b)
    }

    /// Shortest-path closure with octagonal strengthening. Returns false if
    /// the system is unsatisfiable.
    pub fn close(&mut self) -> bool {
        let d = self.dim();
        // integer tightening of unary rows: v - bar(v) <= 2c is even-bounded
        for a in 0..d {
            if let Some(c) = self.m[a * d + bar(a)] {
                self.m[a * d + bar(a)] = Some(2 * c.div_euclid(2));
            }
        }
        for k in 0..d {
            for a in 0..d {
                let mak = self.m[a * d + k];
                if mak.is_none() {
                    continue;
                }
                for b in 0..d {
                    let via = badd(mak, self.m[k * d + b]);
                    self.m[a * d + b] = bmin(self.m[a * d + b], via);
                }
            }
        }
        for a in 0..d {
            for b in 0..d {
                let half = match (self.m[a * d + bar(a)], self.m[bar(b) * d + b]) {
                    (Some(x), Some(y)) => {
                        Some((x.div_euclid(2) as i128 + y.div_euclid(2) as i128)
                            .clamp(i64::MIN as i128, i64::MAX as i128) as i64)
                    }
                    _ => None,
                };
                self.m[a * d + b] = bmin(self.m[a * d + b], half);
            }
        }
        for a in 0..d {
            if let Some(c) = self.m[a * d + a] {
                if c < 0 {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_bottom_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).any(|a| matches!(self.m[a * d + a], Some(c) if c < 0))
    }

    /// Pointwise max; sound join of closed operands.
    pub fn join(&self, other: &Dbm) -> Dbm {
        debug_assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (o, x) in out.m.iter_mut().zip(other.m.iter()) {
            *o = match (*o, *x) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            };
        }
        out
    }

    /// Keeps stable bounds, drops the ones that grew.
    pub fn widen(&self, newer: &Dbm) -> Dbm {
        debug_assert_eq!(self.n, newer.n);
        let mut out = self.clone();
        for (o, x) in out.m.iter_mut().zip(newer.m.iter()) {
            if !ble(*x, *o) {
                *o = None;
            }
        }
        out
    }

    /// Pointwise min; meet.
    pub fn meet(&self, other: &Dbm) -> Dbm {
        debug_assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (o, x) in out.m.iter_mut().zip(other.m.iter()) {
            *o = bmin(*o, *x);
        }
        out
    }

    pub fn includes(&self, other: &Dbm) -> bool {
        self.m.iter().zip(other.m.iter()).all(|(a, b)| ble(*b, *a))
    }

    /// Drops all constraints mentioning x_i.
    pub fn forget(&mut self, i: usize) {
        let d = self.dim();
        for v in [pos(i), neg(i)] {
            for b in 0..d {
                self.m[v * d + b] = None;
                self.m[b * d + v] = None;
            }
            self.m[v * d + v] = Some(0);
        }
    }

    /// x_i := x_i + c.
    pub fn shift(&mut self, i: usize, c: i64) {
        let d = self.dim();
        let p = pos(i);
        let ng = neg(i);
        for b in 0..d {
            if b == p || b == ng {
                continue;
            }
            self.m[p * d + b] = badd(self.m[p * d + b], Some(-c));
            self.m[b * d + p] = badd(self.m[b * d + p], Some(c));
            self.m[ng * d + b] = badd(self.m[ng * d + b], Some(c));
            self.m[b * d + ng] = badd(self.m[b * d + ng], Some(-c));
        }
        self.m[p * d + ng] = badd(self.m[p * d + ng], Some(-2 * c));
        self.m[ng * d + p] = badd(self.m[ng * d + p], Some(2 * c));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unary_bounds_round_trip() {
        let mut d = Dbm::top(2);
        d.add_unary(1, 0, 10);
        d.add_unary(-1, 0, -3); // x0 >= 3
        assert!(d.close());
        assert_eq!(d.upper(0), Some(10));
        assert_eq!(d.lower(0), Some(3));
        assert_eq!(d.upper(1), None);
    }

    #[test]
    fn closure_derives_transitive_bounds() {
        // x - y <= 0, y <= 5  =>  x <= 5
        let mut d = Dbm::top(2);
        d.add_pair(1, 0, -1, 1, 0);
        d.add_unary(1, 1, 5);
        assert!(d.close());
        assert_eq!(d.upper(0), Some(5));
    }

    #[test]
    fn contradiction_detected() {
        let mut d = Dbm::top(1);
        d.add_unary(1, 0, 2);
        d.add_unary(-1, 0, -5); // x >= 5
        assert!(!d.close());
    }

    #[test]
    fn integer_tightening_on_sum() {
        // x + y <= 1 and x - y <= 0 give 2x <= 1, so x <= 0 over integers.
        let mut d = Dbm::top(2);
        d.add_pair(1, 0, 1, 1, 1);
        d.add_pair(1, 0, -1, 1, 0);
        assert!(d.close());
        assert_eq!(d.upper(0), Some(0));
    }

    #[test]
    fn join_is_hull_and_widen_drops_unstable() {
        let mut a = Dbm::top(1);
        a.add_unary(1, 0, 2);
        a.add_unary(-1, 0, 0);
        a.close();
        let mut b = Dbm::top(1);
        b.add_unary(1, 0, 5);
        b.add_unary(-1, 0, -1);
        b.close();
        let j = a.join(&b);
        assert_eq!(j.upper(0), Some(5));
        assert_eq!(j.lower(0), Some(0));
        let w = a.widen(&j);
        assert_eq!(w.upper(0), None);
        assert_eq!(w.lower(0), Some(0));
    }

    #[test]
    fn closure_is_idempotent() {
        let mut d = Dbm::top(3);
        d.add_pair(1, 0, -1, 1, 3);
        d.add_pair(1, 1, 1, 2, 4);
        d.add_unary(-1, 2, -1);
        assert!(d.close());
        let once = d.clone();
        assert!(d.close());
        assert_eq!(once, d);
    }
}
