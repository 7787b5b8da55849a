use crate::error::{Error, Result};
use crate::scalar::{integer_ratio, Real};

use super::measure::CompiledMeasure;
use super::segment::Segment;
use super::system::DelaySystem;
use super::track::Track;

/// Explicit Euler integrator for the delay equation with the past kept as a
/// history buffer on the step grid.
#[derive(Debug, Clone)]
pub struct Stepper<'a, T: Real = f64> {
    sys: &'a DelaySystem<T>,
    drift: CompiledMeasure<T>,
    dt: T,
    track: Track<T>,
    k: i64,
    cur: Vec<T>,
    acc: Vec<T>,
    scratch: Vec<T>,
    grid: usize,
    ratio: Option<usize>,
}

impl<'a, T: Real> Stepper<'a, T> {
    fn with_track(sys: &'a DelaySystem<T>, dt: T, track: Track<T>, head: Vec<T>, grid: usize, ratio: Option<usize>) -> Self {
        let n = sys.dim();
        Self {
            sys,
            drift: sys.a1().compile(dt),
            dt,
            track,
            k: 0,
            cur: head,
            acc: vec![T::zero(); n],
            scratch: vec![T::zero(); 2 * n],
            grid,
            ratio,
        }
    }

    /// Starts from segment `x`; `dt` must divide the tail spacing of `x`.
    pub fn from_segment(sys: &'a DelaySystem<T>, x: &Segment<T>, dt: T) -> Result<Self> {
        if x.dim() != sys.dim() {
            return Err(Error::Dimension {
                expected: sys.dim(),
                got: x.dim(),
            });
        }
        let rel = ((x.delay() - sys.delay()) / sys.delay()).abs();
        if rel > T::lit(1e-12) {
            return Err(Error::Invalid(format!(
                "segment horizon {} differs from system delay {}",
                x.delay(),
                sys.delay()
            )));
        }
        if !(dt > T::zero()) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        let m = integer_ratio(x.spacing(), dt).filter(|m| *m >= 1).ok_or_else(|| {
            Error::StepMismatch(format!(
                "dt = {dt} does not divide the tail spacing {}; resample the segment first",
                x.spacing()
            ))
        })?;
        let n = sys.dim();
        let grid = x.grid_size();
        let hist = grid * m;
        let mut track = Track::new(n, dt, -(hist as i64), Some(x.tail_point(grid).to_vec()));
        let mut buf = vec![T::zero(); n];
        let mf = T::from_usize_lossy(m);
        for i in 0..hist {
            let (j, r) = (i / m, i % m);
            if r == 0 {
                track.push(x.tail_point(j));
            } else {
                let lam = T::from_usize_lossy(r) / mf;
                let a = x.tail_point(j);
                let b = x.tail_point(j + 1);
                for c in 0..n {
                    buf[c] = a[c] + lam * (b[c] - a[c]);
                }
                track.push(&buf);
            }
        }
        track.push(x.head());
        Ok(Self::with_track(sys, dt, track, x.head().to_vec(), grid, Some(m)))
    }

    /// Starts from head `head` with zero past. Output segments use the system's default grid.
    pub fn from_zero_past(sys: &'a DelaySystem<T>, head: &[T], dt: T) -> Result<Self> {
        if head.len() != sys.dim() {
            return Err(Error::Dimension {
                expected: sys.dim(),
                got: head.len(),
            });
        }
        if !(dt > T::zero()) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        let n = sys.dim();
        let grid = sys.tail_grid();
        let h = sys.delay() / T::from_usize_lossy(grid);
        let ratio = integer_ratio(h, dt).filter(|m| *m >= 1);
        let hist = match ratio {
            Some(m) => grid * m,
            None => (sys.delay() / dt - T::lit(1e-9)).ceil().to_usize().unwrap_or(0),
        };
        let zero = vec![T::zero(); n];
        let mut track = Track::new(n, dt, -(hist as i64), Some(zero.clone()));
        for _ in 0..hist {
            track.push(&zero);
        }
        track.push(head);
        Ok(Self::with_track(sys, dt, track, head.to_vec(), grid, ratio))
    }

    pub fn system(&self) -> &'a DelaySystem<T> {
        self.sys
    }

    #[inline]
    pub fn dt(&self) -> T {
        self.dt
    }

    /// Number of steps taken.
    #[inline]
    pub fn index(&self) -> i64 {
        self.k
    }

    #[inline]
    pub fn time(&self) -> T {
        self.dt * T::lit(self.k as f64)
    }

    /// Current head `y(t_k)`.
    #[inline]
    pub fn current(&self) -> &[T] {
        &self.cur
    }

    pub(crate) fn track(&self) -> &Track<T> {
        &self.track
    }

    /// `a₀ y(t_k) + ∫ y(t_k + θ) a₁(dθ)`.
    pub fn drift_into(&mut self, out: &mut [T]) {
        out.iter_mut().for_each(|v| *v = T::zero());
        self.sys.a0().mul_vec_acc(&self.cur, out);
        if !self.drift.is_empty() {
            self.drift.apply_acc(&self.track, self.k, out, &mut self.scratch);
        }
    }

    /// One Euler step; `extra` is added to the head increment (noise and control terms).
    pub fn step(&mut self, extra: Option<&[T]>) {
        let mut acc = std::mem::take(&mut self.acc);
        self.drift_into(&mut acc);
        for i in 0..self.cur.len() {
            let mut v = self.cur[i] + self.dt * acc[i];
            if let Some(e) = extra {
                v = v + e[i];
            }
            self.cur[i] = v;
        }
        self.acc = acc;
        self.track.push(&self.cur);
        self.k += 1;
    }

    /// The state `(y(t_k), y_{t_k})` as a segment on the output grid.
    pub fn segment(&self) -> Result<Segment<T>> {
        let m = self.ratio.ok_or_else(|| {
            Error::StepMismatch(format!(
                "dt = {} does not divide the tail spacing; segments cannot be read off the step grid",
                self.dt
            ))
        })?;
        let n = self.sys.dim();
        let mut tail = Vec::with_capacity((self.grid + 1) * n);
        for j in 0..self.grid {
            let idx = self.k - ((self.grid - j) * m) as i64;
            tail.extend_from_slice(self.track.right(idx));
        }
        tail.extend_from_slice(self.track.left(self.k));
        Segment::from_parts(self.cur.clone(), tail, self.sys.delay())
    }
}

/// `e^{tA}x`: the deterministic delay flow by explicit Euler.
pub fn evolve_deterministic<T: Real>(sys: &DelaySystem<T>, x: &Segment<T>, t: T, dt: T) -> Result<Segment<T>> {
    let steps = checked_steps(t, dt)?;
    let mut st = Stepper::from_segment(sys, x, dt)?;
    for _ in 0..steps {
        st.step(None);
    }
    st.segment()
}

/// `e^{tA}Gη` with `Gη = (σ η, 0)`.
pub fn fundamental_response<T: Real>(sys: &DelaySystem<T>, eta: &[T], t: T, dt: T) -> Result<Segment<T>> {
    let steps = checked_steps(t, dt)?;
    let head = sys.sigma().mul_vec(eta);
    let mut st = Stepper::from_zero_past(sys, &head, dt)?;
    for _ in 0..steps {
        st.step(None);
    }
    st.segment()
}

/// Number of steps of size `dt` in `t`, or the matching error.
pub fn checked_steps<T: Real>(t: T, dt: T) -> Result<usize> {
    if t < T::zero() || !t.is_finite() {
        return Err(Error::Domain(format!("time must be ≥ 0, got {t}")));
    }
    if !(dt > T::zero()) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    integer_ratio(t, dt).ok_or_else(|| Error::StepMismatch(format!("dt = {dt} does not divide t = {t}")))
}
