use crate::error::{Error, Result};
use crate::functionals::HalfSpace;
use crate::linalg::{dot, sym, SquareMatrix};
use crate::quadrature::{normal_cdf, normal_pdf, TensorGaussHermite};
use crate::rng::{family, fill_normals, path_rng};

/// Numerical settings shared by the Gaussian-expectation routines.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadConfig {
    /// Gauss-Hermite order per axis; `None` picks 40 (n=1), 20 (n=2), 10 (n=3), MC above.
    pub gh_order: Option<usize>,
    /// Step of the Euler response table and of the mean flow.
    pub dt: f64,
    /// Gauss-Legendre nodes per table cell in covariance integrals.
    pub quad_nodes: usize,
    /// Eigenvalue floor below which a covariance is treated as a point mass.
    pub floor: f64,
    /// Sample count of the Monte Carlo rule used above dimension 3.
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            gh_order: None,
            dt: 1e-4,
            quad_nodes: 2,
            floor: 1e-12,
            mc_samples: 20_000,
            seed: 0,
        }
    }
}

/// Nodes and weights for `E[f(ζ)]`, `ζ ~ N(0, I_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn for_dim(n: usize, cfg: &QuadConfig) -> Result<Self> {
        let order = cfg.gh_order.or(match n {
            1 => Some(40),
            2 => Some(20),
            3 => Some(10),
            _ => None,
        });
        match order {
            Some(m) => Self::tensor(n, m),
            None => Ok(Self::monte_carlo(n, cfg.mc_samples, cfg.seed)),
        }
    }

    pub fn tensor(n: usize, order: usize) -> Result<Self> {
        let t = TensorGaussHermite::<f64>::new(n, order)?;
        let mut points = Vec::with_capacity(t.len() * n);
        let mut weights = Vec::with_capacity(t.len());
        for (z, w) in t.iter() {
            points.extend_from_slice(z);
            weights.push(w);
        }
        Ok(Self { dim: n, points, weights })
    }

    pub fn monte_carlo(n: usize, samples: usize, seed: u64) -> Self {
        let mut rng = path_rng(seed, family::GAUSS_MC, n as u64);
        let mut points = vec![0.0; n * samples];
        fill_normals(&mut rng, &mut points);
        Self {
            dim: n,
            points,
            weights: vec![1.0 / samples as f64; samples],
        }
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

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points.chunks(self.dim).zip(self.weights.iter().copied())
    }
}

/// Centered Gaussian `N(0, Q)` prepared for quadrature.
#[derive(Debug, Clone)]
pub struct Gaussian {
    n: usize,
    cov: SquareMatrix<f64>,
    sqrt: SquareMatrix<f64>,
    inv_sqrt: Option<SquareMatrix<f64>>,
    lambda_min: f64,
}

impl Gaussian {
    pub fn new(cov: &SquareMatrix<f64>, floor: f64) -> Self {
        let e = sym::SymEigen::new(cov);
        let lambda_min = e.min();
        let sqrt = e.apply(f64::sqrt);
        let inv_sqrt = (lambda_min > floor).then(|| e.apply(|l| 1.0 / l.sqrt()));
        Self {
            n: cov.dim(),
            cov: cov.clone(),
            sqrt,
            inv_sqrt,
            lambda_min,
        }
    }

    pub fn point_mass(n: usize) -> Self {
        Self::new(&SquareMatrix::zeros(n), 0.0)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn cov(&self) -> &SquareMatrix<f64> {
        &self.cov
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// `true` when `λ_min` is below the floor and the law is treated as degenerate.
    pub fn is_degenerate(&self) -> bool {
        self.inv_sqrt.is_none()
    }

    fn singular(&self) -> Error {
        Error::SingularCovariance {
            lambda_min: self.lambda_min,
            floor: 0.0,
        }
    }

    /// `E f(mean + Z)`. A degenerate covariance still uses its (clipped) square root,
    /// which reduces to `f(mean)` at the zero matrix.
    pub fn expect(&self, rule: &GaussRule, mean: &[f64], f: impl Fn(&[f64]) -> f64) -> f64 {
        if self.cov.is_zero() {
            return f(mean);
        }
        let mut y = vec![0.0; self.n];
        let mut acc = 0.0;
        for (z, w) in rule.iter() {
            y.copy_from_slice(mean);
            self.sqrt.mul_vec_acc(z, &mut y);
            acc += w * f(&y);
        }
        acc
    }

    /// `(E f(mean + Z), E[f(mean + Z) Q⁻¹Z])`.
    pub fn expect_with_score(&self, rule: &GaussRule, mean: &[f64], f: impl Fn(&[f64]) -> f64) -> Result<(f64, Vec<f64>)> {
        let inv_sqrt = self.inv_sqrt.as_ref().ok_or_else(|| self.singular())?;
        let n = self.n;
        let mut y = vec![0.0; n];
        let mut val = 0.0;
        let mut zeta_acc = vec![0.0; n];
        for (z, w) in rule.iter() {
            y.copy_from_slice(mean);
            self.sqrt.mul_vec_acc(z, &mut y);
            let fv = w * f(&y);
            val += fv;
            for i in 0..n {
                zeta_acc[i] += fv * z[i];
            }
        }
        Ok((val, inv_sqrt.mul_vec(&zeta_acc)))
    }

    /// `E[f(mean + Z) ⟨Q⁻¹v, Z⟩]`: the derivative of `y ↦ E f(y + Z)` along `v`.
    pub fn expect_score(&self, rule: &GaussRule, mean: &[f64], v: &[f64], f: impl Fn(&[f64]) -> f64) -> Result<f64> {
        let (_, g) = self.expect_with_score(rule, mean, f)?;
        Ok(dot(&g, v))
    }

    /// `P(⟨a, mean + Z⟩ > b)` in closed form.
    pub fn half_space_prob(&self, hs: &HalfSpace, mean: &[f64], floor: f64) -> f64 {
        let m = dot(&hs.normal, mean) - hs.offset;
        let s2 = dot(&hs.normal, &self.cov.mul_vec(&hs.normal));
        if s2 <= floor {
            return if m > 0.0 { 1.0 } else { 0.0 };
        }
        normal_cdf(m / s2.sqrt())
    }

    /// Derivative of [`Self::half_space_prob`] along the mean direction `v`.
    pub fn half_space_grad(&self, hs: &HalfSpace, mean: &[f64], v: &[f64], floor: f64) -> Result<f64> {
        let m = dot(&hs.normal, mean) - hs.offset;
        let s2 = dot(&hs.normal, &self.cov.mul_vec(&hs.normal));
        if s2 <= floor {
            return Err(Error::SingularCovariance { lambda_min: s2, floor });
        }
        let s = s2.sqrt();
        Ok(normal_pdf(m / s) * dot(&hs.normal, v) / s)
    }

    /// Gradient vector of [`Self::half_space_prob`] in the mean.
    pub fn half_space_grad_vec(&self, hs: &HalfSpace, mean: &[f64], floor: f64) -> Result<Vec<f64>> {
        let m = dot(&hs.normal, mean) - hs.offset;
        let s2 = dot(&hs.normal, &self.cov.mul_vec(&hs.normal));
        if s2 <= floor {
            return Err(Error::SingularCovariance { lambda_min: s2, floor });
        }
        let s = s2.sqrt();
        let c = normal_pdf(m / s) / s;
        Ok(hs.normal.iter().map(|a| c * a).collect())
    }
}
