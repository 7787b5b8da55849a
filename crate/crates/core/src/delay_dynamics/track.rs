//! Trajectories sampled on a uniform time grid with cadlag cell rules.
//!
//! Inside a cell `[t_k, t_{k+1})` the path is the linear interpolant between the
//! value at `t_k` and the left limit at `t_{k+1}`. Only index 0 may carry a
//! left limit different from its value (the jump between the initial tail and the
//! initial head); every later node is continuous.

use crate::scalar::Real;

use super::segment::Segment;

#[derive(Debug, Clone)]
pub(crate) struct Track<T: Real> {
    n: usize,
    dt: T,
    first: i64,
    values: Vec<T>,
    cum: Vec<T>,
    jump_left: Option<Vec<T>>,
}

impl<T: Real> Track<T> {
    /// Track whose node `first` is `values[0..n]`; `jump_left` is the left limit at index 0.
    pub(crate) fn new(n: usize, dt: T, first: i64, jump_left: Option<Vec<T>>) -> Self {
        Self {
            n,
            dt,
            first,
            values: Vec::new(),
            cum: Vec::new(),
            jump_left,
        }
    }

    /// The segment viewed as a path on `[-d, 0]`, index 0 at θ = 0.
    pub(crate) fn from_segment(x: &Segment<T>) -> Self {
        let n = x.dim();
        let grid = x.grid_size();
        let mut tr = Self::new(n, x.spacing(), -(grid as i64), Some(x.tail_point(grid).to_vec()));
        tr.values.reserve((grid + 1) * n);
        tr.cum.reserve((grid + 1) * n);
        for j in 0..grid {
            tr.push(x.tail_point(j));
        }
        tr.push(x.head());
        tr
    }

    #[inline]
    pub(crate) fn dim(&self) -> usize {
        self.n
    }

    /// Index of the newest node.
    #[inline]
    pub(crate) fn last(&self) -> i64 {
        self.first + (self.values.len() / self.n) as i64 - 1
    }

    #[inline]
    fn slot(&self, k: i64) -> usize {
        ((k - self.first) as usize) * self.n
    }

    /// Value at node `k` (right-continuous value).
    #[inline]
    pub(crate) fn right(&self, k: i64) -> &[T] {
        let s = self.slot(k);
        &self.values[s..s + self.n]
    }

    /// Left limit at node `k`.
    #[inline]
    pub(crate) fn left(&self, k: i64) -> &[T] {
        if k == 0 {
            if let Some(j) = &self.jump_left {
                return j;
            }
        }
        self.right(k)
    }

    pub(crate) fn push(&mut self, v: &[T]) {
        debug_assert_eq!(v.len(), self.n);
        let len = self.values.len();
        if len == 0 {
            self.values.extend_from_slice(v);
            self.cum.extend(std::iter::repeat_n(T::zero(), self.n));
            return;
        }
        let k_new = self.last() + 1;
        let half = self.dt * T::lit(0.5);
        let prev = len - self.n;
        for i in 0..self.n {
            let l = if k_new == 0 {
                self.jump_left.as_ref().map_or(v[i], |j| j[i])
            } else {
                v[i]
            };
            let c = self.cum[prev + i] + half * (self.values[prev + i] + l);
            self.cum.push(c);
        }
        self.values.extend_from_slice(v);
    }

    /// Splits a position in grid units into a node and a fraction, snapping near-integers.
    #[inline]
    fn locate(&self, u: T) -> (i64, T) {
        let r = u.round();
        let last = self.last();
        let k;
        let lam;
        if (u - r).abs() <= T::lit(1e-9) * T::one().max(u.abs()) {
            k = r.to_i64().unwrap_or(self.first);
            lam = T::zero();
        } else {
            let f = u.floor();
            k = f.to_i64().unwrap_or(self.first);
            lam = u - f;
        }
        if k < self.first {
            (self.first, T::zero())
        } else if k >= last {
            (last, T::zero())
        } else {
            (k, lam)
        }
    }

    /// Path value at position `u` (grid units); an exact node returns its right value.
    #[inline]
    pub(crate) fn point_into(&self, u: T, out: &mut [T]) {
        let (k, lam) = self.locate(u);
        let a = self.right(k);
        if lam == T::zero() {
            out.copy_from_slice(a);
            return;
        }
        let b = self.left(k + 1);
        for i in 0..self.n {
            out[i] = a[i] + lam * (b[i] - a[i]);
        }
    }

    /// `∫_{first}^{u} path` (time units) using the cadlag linear interpolant.
    #[inline]
    pub(crate) fn antider_into(&self, u: T, out: &mut [T]) {
        let (k, lam) = self.locate(u);
        let s = self.slot(k);
        out.copy_from_slice(&self.cum[s..s + self.n]);
        if lam == T::zero() {
            return;
        }
        let a = self.right(k);
        let b = self.left(k + 1);
        let half = T::lit(0.5);
        for i in 0..self.n {
            out[i] = out[i] + self.dt * lam * (a[i] + half * lam * (b[i] - a[i]));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antiderivative_of_linear_path_is_exact() {
        let mut tr = Track::<f64>::new(1, 0.1, -10, None);
        for k in -10..=5 {
            tr.push(&[k as f64 * 0.1]);
        }
        let mut out = [0.0];
        tr.antider_into(3.5, &mut out);
        let t = 0.35;
        let want = 0.5 * (t * t - 1.0);
        assert!((out[0] - want).abs() < 1e-14, "{} vs {want}", out[0]);
        tr.point_into(-2.5, &mut out);
        assert!((out[0] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn jump_at_zero_uses_left_limit_inside_last_history_cell() {
        let x = Segment::constant(vec![5.0], &[1.0], 1.0, 4).unwrap();
        let tr = Track::from_segment(&x);
        let mut out = [0.0f64];
        tr.point_into(-0.5, &mut out);
        assert_eq!(out[0], 1.0);
        tr.point_into(0.0, &mut out);
        assert_eq!(out[0], 5.0);
        tr.antider_into(0.0, &mut out);
        assert!((out[0] - 1.0).abs() < 1e-15);
    }
}
