use crate::error::{Error, Result};
use crate::scalar::Real;

/// State of the delay system: present value and the past trajectory on `[-d, 0)`.
///
/// The tail is stored on the uniform grid `θ_j = -d + j·d/N`, `j = 0..=N`, and
/// interpolated linearly. The last slot `j = N` holds the left limit `x₁(0⁻)`,
/// so a head that differs from the end of the tail is a genuine jump at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment<T: Real = f64> {
    n: usize,
    d: T,
    grid: usize,
    head: Vec<T>,
    tail: Vec<T>,
}

impl<T: Real> Segment<T> {
    /// `tail` is row-major with `N + 1` points of dimension `head.len()`.
    pub fn from_parts(head: Vec<T>, tail: Vec<T>, d: T) -> Result<Self> {
        let n = head.len();
        if n == 0 {
            return Err(Error::Invalid("segment dimension must be ≥ 1".into()));
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::Invalid(format!("delay horizon must be positive, got {d}")));
        }
        if !tail.len().is_multiple_of(n) || tail.len() / n < 3 {
            return Err(Error::Invalid(format!(
                "tail needs N + 1 ≥ 3 points of dimension {n}, got {} values",
                tail.len()
            )));
        }
        if head.iter().chain(&tail).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("segment values must be finite".into()));
        }
        let grid = tail.len() / n - 1;
        Ok(Self { n, d, grid, head, tail })
    }

    pub fn zeros(n: usize, d: T, grid: usize) -> Result<Self> {
        Self::from_parts(vec![T::zero(); n], vec![T::zero(); n * (grid + 1)], d)
    }

    /// Constant tail `c` on the whole grid.
    pub fn constant(head: Vec<T>, c: &[T], d: T, grid: usize) -> Result<Self> {
        if c.len() != head.len() {
            return Err(Error::Dimension {
                expected: head.len(),
                got: c.len(),
            });
        }
        let tail = (0..=grid).flat_map(|_| c.iter().copied()).collect();
        Self::from_parts(head, tail, d)
    }

    /// Tail sampled from `f(θ)` at the grid points (the last sample is read as `x₁(0⁻)`).
    pub fn from_fn(head: Vec<T>, d: T, grid: usize, f: impl Fn(T) -> Vec<T>) -> Result<Self> {
        let n = head.len();
        let h = d / T::from_usize_lossy(grid.max(1));
        let mut tail = Vec::with_capacity(n * (grid + 1));
        for j in 0..=grid {
            let v = f(-d + h * T::from_usize_lossy(j));
            if v.len() != n {
                return Err(Error::Dimension { expected: n, got: v.len() });
            }
            tail.extend(v);
        }
        Self::from_parts(head, tail, d)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn delay(&self) -> T {
        self.d
    }

    /// Number of tail cells `N`.
    #[inline]
    pub fn grid_size(&self) -> usize {
        self.grid
    }

    /// Tail grid spacing `d / N`.
    #[inline]
    pub fn spacing(&self) -> T {
        self.d / T::from_usize_lossy(self.grid)
    }

    pub fn theta(&self, j: usize) -> T {
        if j == self.grid {
            T::zero()
        } else {
            -self.d + self.spacing() * T::from_usize_lossy(j)
        }
    }

    #[inline]
    pub fn head(&self) -> &[T] {
        &self.head
    }

    pub fn head_mut(&mut self) -> &mut [T] {
        &mut self.head
    }

    #[inline]
    pub fn tail_point(&self, j: usize) -> &[T] {
        &self.tail[j * self.n..(j + 1) * self.n]
    }

    pub fn tail_point_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.tail[j * self.n..(j + 1) * self.n]
    }

    pub fn tail(&self) -> &[T] {
        &self.tail
    }

    /// Piecewise-linear tail value at `θ ∈ [-d, 0]`; `θ = 0` gives the left limit.
    pub fn eval_tail(&self, theta: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        self.eval_tail_into(theta, &mut out);
        out
    }

    pub fn eval_tail_into(&self, theta: T, out: &mut [T]) {
        let u = ((theta + self.d) / self.spacing()).max(T::zero());
        let gmax = T::from_usize_lossy(self.grid);
        if u >= gmax {
            out.copy_from_slice(self.tail_point(self.grid));
            return;
        }
        let k = u.floor();
        let lam = u - k;
        let k = k.to_usize().unwrap_or(0);
        let a = self.tail_point(k);
        let b = self.tail_point(k + 1);
        for i in 0..self.n {
            out[i] = a[i] + lam * (b[i] - a[i]);
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.grid != other.grid || self.d != other.d {
            return Err(Error::Invalid("segments live on different grids".into()));
        }
        Ok(())
    }

    /// `self + c · other`.
    pub fn axpy(&self, c: T, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (a, b) in out.head.iter_mut().zip(&other.head) {
            *a = *a + c * *b;
        }
        for (a, b) in out.tail.iter_mut().zip(&other.tail) {
            *a = *a + c * *b;
        }
        Ok(out)
    }

    pub fn scaled(&self, c: T) -> Self {
        let mut out = self.clone();
        out.head.iter_mut().chain(out.tail.iter_mut()).for_each(|v| *v = *v * c);
        out
    }

    /// Re-samples the tail on a grid of `grid` cells (linear interpolation).
    pub fn resampled(&self, grid: usize) -> Result<Self> {
        let h = self.d / T::from_usize_lossy(grid.max(1));
        let mut tail = Vec::with_capacity(self.n * (grid + 1));
        for j in 0..=grid {
            let theta = if j == grid { T::zero() } else { -self.d + h * T::from_usize_lossy(j) };
            tail.extend(self.eval_tail(theta));
        }
        Self::from_parts(self.head.clone(), tail, self.d)
    }

    /// Sup-norm distance over head and tail grid values.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.check_compatible(other)?;
        Ok(self
            .head
            .iter()
            .zip(&other.head)
            .chain(self.tail.iter().zip(&other.tail))
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs())))
    }

    pub fn cast<U: Real>(&self) -> Segment<U> {
        Segment {
            n: self.n,
            d: U::lit(self.d.to_f64_lossy()),
            grid: self.grid,
            head: self.head.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
            tail: self.tail.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_or_nonfinite_tails() {
        assert!(Segment::from_parts(vec![0.0], vec![0.0, 0.0], 1.0).is_err());
        assert!(Segment::from_parts(vec![0.0], vec![0.0, f64::NAN, 0.0], 1.0).is_err());
        assert!(Segment::from_parts(vec![0.0], vec![0.0; 3], 0.0).is_err());
    }

    #[test]
    fn linear_tail_interpolates_exactly() {
        let x: Segment = Segment::from_fn(vec![1.0], 1.0, 10, |th| vec![th]).unwrap();
        assert!((x.eval_tail(-0.55)[0] + 0.55).abs() < 1e-15);
        assert!((x.eval_tail(-1.0)[0] + 1.0).abs() < 1e-15);
        assert_eq!(x.eval_tail(0.0)[0], 0.0);
        let r = x.resampled(40).unwrap();
        assert!((r.eval_tail(-0.3)[0] + 0.3).abs() < 1e-14);
    }

    #[test]
    fn axpy_checks_grids() {
        let a = Segment::<f64>::zeros(1, 1.0, 4).unwrap();
        let b = Segment::<f64>::zeros(1, 1.0, 5).unwrap();
        assert!(a.axpy(1.0, &b).is_err());
        let c = Segment::constant(vec![2.0], &[1.0], 1.0, 4).unwrap();
        let s = a.axpy(3.0, &c).unwrap();
        assert_eq!(s.head()[0], 6.0);
        assert_eq!(s.tail_point(2)[0], 3.0);
    }
}
