use crate::error::{Error, Result};

/// Weights of the 4-point Lagrange interpolant on a uniform index grid of
/// `m ≥ 4` nodes at fractional index `pos` (clamped to `[0, m-1]`).
/// Returns the first stencil node and its four weights.
#[inline]
pub(crate) fn cubic_stencil(m: usize, pos: f64) -> (usize, [f64; 4]) {
    let pos = pos.clamp(0.0, (m - 1) as f64);
    let start = ((pos.floor() as isize) - 1).clamp(0, m as isize - 4) as usize;
    let u = pos - (start + 1) as f64;
    let w = [
        -u * (u - 1.0) * (u - 2.0) / 6.0,
        (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
        -(u + 1.0) * u * (u - 2.0) / 2.0,
        (u + 1.0) * u * (u - 1.0) / 6.0,
    ];
    (start, w)
}

/// Uniform tensor grid on a box in `ℝⁿ`, `m` nodes per axis, first axis slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceGrid {
    n: usize,
    m: usize,
    lo: Vec<f64>,
    h: Vec<f64>,
}

impl SpaceGrid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, m: usize) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Dimension {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if m < 4 {
            return Err(Error::Invalid(format!("space grid needs at least 4 nodes per axis, got {m}")));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(b > a) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::Invalid("space grid box must have lo < hi on every axis".into()));
        }
        let h = lo.iter().zip(&hi).map(|(a, b)| (b - a) / (m - 1) as f64).collect();
        Ok(Self { n: lo.len(), m, lo, h })
    }

    /// Box `center ± half_width` on every axis.
    pub fn centered(center: &[f64], half_width: f64, m: usize) -> Result<Self> {
        Self::new(
            center.iter().map(|c| c - half_width).collect(),
            center.iter().map(|c| c + half_width).collect(),
            m,
        )
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> &[f64] {
        &self.h
    }

    pub fn lower(&self) -> &[f64] {
        &self.lo
    }

    pub fn upper(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.h).map(|(a, h)| a + h * (self.m - 1) as f64).collect()
    }

    pub fn node(&self, mut j: usize) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for c in (0..self.n).rev() {
            y[c] = self.lo[c] + self.h[c] * (j % self.m) as f64;
            j /= self.m;
        }
        y
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|j| self.node(j)).collect()
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.iter().enumerate().all(|(c, v)| {
            let top = self.lo[c] + self.h[c] * (self.m - 1) as f64;
            *v >= self.lo[c] - 1e-12 && *v <= top + 1e-12
        })
    }

    /// Interpolates `width` interleaved fields (`data[j*width + w]`) at `y`,
    /// accumulating `scale ×` the result into `out`; outside the box the
    /// coordinate is clamped to the boundary.
    pub fn interp_acc(&self, data: &[f64], width: usize, y: &[f64], scale: f64, out: &mut [f64]) {
        match self.n {
            1 => {
                let (s, w) = cubic_stencil(self.m, (y[0] - self.lo[0]) / self.h[0]);
                for (a, wa) in w.iter().enumerate() {
                    let base = (s + a) * width;
                    let c = scale * wa;
                    for k in 0..width {
                        out[k] += c * data[base + k];
                    }
                }
            }
            _ => {
                let st: Vec<(usize, [f64; 4])> =
                    (0..self.n).map(|c| cubic_stencil(self.m, (y[c] - self.lo[c]) / self.h[c])).collect();
                let total = 4usize.pow(self.n as u32);
                for code in 0..total {
                    let mut idx = 0;
                    let mut wt = scale;
                    let mut r = code;
                    for (s, w) in &st {
                        let a = r % 4;
                        r /= 4;
                        idx = idx * self.m + s + a;
                        wt *= w[a];
                    }
                    let _ = r;
                    let base = idx * width;
                    for k in 0..width {
                        out[k] += wt * data[base + k];
                    }
                }
            }
        }
    }

    /// Single-field interpolation.
    pub fn interp(&self, data: &[f64], y: &[f64]) -> f64 {
        let mut out = [0.0];
        self.interp_acc(data, 1, y, 1.0, &mut out);
        out[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_reproduces_cubics() {
        let g = SpaceGrid::new(vec![-1.0], vec![2.0], 13).unwrap();
        let f = |y: f64| 1.0 - 2.0 * y + 0.5 * y * y * y;
        let data: Vec<f64> = g.nodes().iter().map(|y| f(y[0])).collect();
        for y in [-1.0, -0.93, 0.1, 1.77, 2.0] {
            assert!((g.interp(&data, &[y]) - f(y)).abs() < 1e-13);
        }
    }

    #[test]
    fn tensor_interpolation_is_exact_on_bilinear() {
        let g = SpaceGrid::centered(&[0.0, 1.0], 2.0, 9).unwrap();
        let data: Vec<f64> = g.nodes().iter().map(|y| y[0] * y[1] + y[1]).collect();
        let y = [0.37, 1.41];
        assert!((g.interp(&data, &y) - (0.37 * 1.41 + 1.41)).abs() < 1e-13);
        // clamped outside
        let out = g.interp(&data, &[5.0, 1.0]);
        assert!((out - (2.0 * 1.0 + 1.0)).abs() < 1e-13);
    }
}
