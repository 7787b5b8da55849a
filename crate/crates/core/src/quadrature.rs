//! Gauss-Legendre and Gauss-Hermite rules.
//!
//! Nodes are computed in f64 by Newton iteration on the three-term recurrences
//! and cast to the requested scalar type.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre<T: Real = f64> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Invalid("Gauss-Legendre order must be ≥ 1".into()));
        }
        let (x, w) = legendre_f64(order);
        Ok(Self {
            nodes: x.into_iter().map(T::lit).collect(),
            weights: w.into_iter().map(T::lit).collect(),
        })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on_interval(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * *x, half * *w))
    }

    pub fn integrate(&self, a: T, b: T, f: impl Fn(T) -> T) -> T {
        self.on_interval(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_f64(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let half = m.div_ceil(2);
    for i in 0..half {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..m {
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j as f64 + 1.0) * z * p2 - j as f64 * p3) / (j as f64 + 1.0);
            }
            pp = m as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[m - 1 - i] = w[i];
    }
    (x, w)
}

/// One-dimensional Gauss-Hermite rule normalized for the standard Gaussian:
/// `E[f(ζ)] ≈ Σ w_i f(x_i)` with `ζ ~ N(0, 1)` and `Σ w_i = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite<T: Real = f64> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussHermite<T> {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 || order > 200 {
            return Err(Error::Invalid(format!("Gauss-Hermite order {order} outside 1..=200")));
        }
        let (x, w) = hermite_f64(order);
        let sum: f64 = w.iter().sum();
        Ok(Self {
            nodes: x.iter().map(|v| T::lit(v * std::f64::consts::SQRT_2)).collect(),
            weights: w.iter().map(|v| T::lit(v / sum)).collect(),
        })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn expect(&self, f: impl Fn(T) -> T) -> T {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| *w * f(*x)).sum()
    }
}

/// Physicists' Gauss-Hermite nodes/weights (weight e^{-x²}).
fn hermite_f64(m: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let half = m.div_ceil(2);
    let mf = m as f64;
    let mut z = 0.0;
    for i in 0..half {
        z = match i {
            0 => (2.0 * mf + 1.0).sqrt() - 1.85575 * (2.0 * mf + 1.0).powf(-0.16667),
            1 => z - 1.14 * mf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..m {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * mf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[m - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[m - 1 - i] = w[i];
    }
    // ascending order
    x.reverse();
    w.reverse();
    (x, w)
}

/// Tensor-product Gauss-Hermite rule for `N(0, I_n)` expectations.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGaussHermite<T: Real = f64> {
    dim: usize,
    points: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> TensorGaussHermite<T> {
    pub fn new(dim: usize, order: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("tensor rule dimension must be ≥ 1".into()));
        }
        let total = order
            .checked_pow(dim as u32)
            .filter(|t| *t <= 2_000_000)
            .ok_or_else(|| Error::Invalid(format!("tensor rule {order}^{dim} too large")))?;
        let rule = GaussHermite::<T>::new(order)?;
        let mut points = Vec::with_capacity(total * dim);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            let mut w = T::one();
            for &k in &idx {
                points.push(rule.nodes[k]);
                w = w * rule.weights[k];
            }
            weights.push(w);
            for slot in idx.iter_mut().rev() {
                *slot += 1;
                if *slot < order {
                    break;
                }
                *slot = 0;
            }
        }
        Ok(Self { dim, points, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Iterator over `(ζ, weight)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (&[T], T)> + '_ {
        self.points.chunks(self.dim).zip(self.weights.iter().copied())
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn double_factorial(k: u32) -> f64 {
        (1..=k).rev().step_by(2).map(f64::from).product()
    }

    #[test]
    fn hermite_moments_exact_up_to_degree_six() {
        for m in [4usize, 5, 10, 20, 40] {
            let gh = GaussHermite::<f64>::new(m).unwrap();
            assert_relative_eq!(gh.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-14);
            for p in 0..=6u32 {
                if 2 * m as u32 <= p {
                    continue;
                }
                let got = gh.expect(|x| x.powi(p as i32));
                let want = if p % 2 == 1 { 0.0 } else { double_factorial(p.saturating_sub(1)) };
                assert!((got - want).abs() < 1e-11, "m={m} p={p}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn hermite_cosine_expectation() {
        let gh = GaussHermite::<f64>::new(40).unwrap();
        assert_relative_eq!(gh.expect(f64::cos), (-0.5f64).exp(), epsilon = 1e-14);
        let gh32 = GaussHermite::<f32>::new(20).unwrap();
        assert!((gh32.expect(f32::cos) - (-0.5f32).exp()).abs() < 1e-5);
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let gl = GaussLegendre::<f64>::new(5).unwrap();
        for p in 0..10 {
            let got = gl.integrate(0.0, 2.0, |x| x.powi(p));
            let want = 2f64.powi(p + 1) / f64::from(p + 1);
            assert_relative_eq!(got, want, max_relative = 1e-13);
        }
        assert!(GaussLegendre::<f64>::new(0).is_err());
    }

    #[test]
    fn tensor_rule_second_moments() {
        let t = TensorGaussHermite::<f64>::new(2, 6).unwrap();
        assert_eq!(t.len(), 36);
        let mut m = [0.0; 3];
        for (z, w) in t.iter() {
            m[0] += w * z[0] * z[0];
            m[1] += w * z[0] * z[1];
            m[2] += w * z[1] * z[1] * z[0] * z[0];
        }
        assert_relative_eq!(m[0], 1.0, epsilon = 1e-13);
        assert!(m[1].abs() < 1e-14);
        assert_relative_eq!(m[2], 1.0, epsilon = 1e-13);
    }

    #[test]
    fn normal_cdf_values() {
        assert_relative_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-15);
        // statrs erfc is good to about 1e-12 here
        assert_relative_eq!(normal_cdf(1.959_963_984_540_054), 0.975, epsilon = 1e-11);
        assert_relative_eq!(normal_pdf(0.0), 0.398_942_280_401_432_7, epsilon = 1e-15);
    }
}
