use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::scalar::Real;

use super::track::Track;

/// Point mass `weight · δ_θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom<T: Real = f64> {
    pub theta: T,
    pub weight: SquareMatrix<T>,
}

/// Matrix-valued finite measure on `[-d, 0]`: atoms plus a piecewise-constant
/// density on a uniform mesh of `[-d, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayMeasure<T: Real = f64> {
    n: usize,
    d: T,
    atoms: Vec<Atom<T>>,
    density: Vec<SquareMatrix<T>>,
}

impl<T: Real> DelayMeasure<T> {
    pub fn zero(n: usize, d: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("measure dimension must be ≥ 1".into()));
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::Invalid(format!("delay horizon must be positive, got {d}")));
        }
        Ok(Self {
            n,
            d,
            atoms: Vec::new(),
            density: Vec::new(),
        })
    }

    pub fn with_atom(mut self, theta: T, weight: SquareMatrix<T>) -> Result<Self> {
        if weight.dim() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: weight.dim(),
            });
        }
        if !weight.is_finite() || !theta.is_finite() {
            return Err(Error::Invalid("atom must be finite".into()));
        }
        if theta < -self.d || theta > T::zero() {
            return Err(Error::Invalid(format!(
                "atom location {theta} outside [-{}, 0]",
                self.d
            )));
        }
        self.atoms.push(Atom { theta, weight });
        Ok(self)
    }

    /// Density values on `cells.len()` equal cells covering `[-d, 0]`, left to right.
    pub fn with_density(mut self, cells: Vec<SquareMatrix<T>>) -> Result<Self> {
        for c in &cells {
            if c.dim() != self.n {
                return Err(Error::Dimension {
                    expected: self.n,
                    got: c.dim(),
                });
            }
            if !c.is_finite() {
                return Err(Error::Invalid("density must be finite".into()));
            }
        }
        self.density = cells;
        Ok(self)
    }

    /// Constant density `f` on `[-d, 0]`.
    pub fn with_constant_density(self, f: SquareMatrix<T>) -> Result<Self> {
        self.with_density(vec![f])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn delay(&self) -> T {
        self.d
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn density_cells(&self) -> &[SquareMatrix<T>] {
        &self.density
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|a| a.weight.is_zero()) && self.density.iter().all(|c| c.is_zero())
    }

    pub fn has_atom_at_zero(&self) -> bool {
        self.atoms.iter().any(|a| a.theta == T::zero() && !a.weight.is_zero())
    }

    fn cell_width(&self) -> T {
        self.d / T::from_usize_lossy(self.density.len().max(1))
    }

    /// Total variation bound `Σ‖wᵢ‖ + ∫‖f‖` (row-sum norm).
    pub fn total_variation(&self) -> T {
        let atoms: T = self.atoms.iter().map(|a| a.weight.norm_inf()).sum();
        let dens: T = self.density.iter().map(|c| c.norm_inf()).sum::<T>() * self.cell_width();
        atoms + dens
    }

    /// `s⁻¹ ∫_{-s}^0 f(θ) dθ` for the density part.
    pub fn cesaro_mean(&self, s: T) -> SquareMatrix<T> {
        let mut out = SquareMatrix::zeros(self.n);
        if self.density.is_empty() || !(s > T::zero()) {
            return out;
        }
        let s = s.min(self.d);
        let w = self.cell_width();
        let m = self.density.len();
        let mut covered = T::zero();
        for c in (0..m).rev() {
            let len = w.min(s - covered);
            if len <= T::zero() {
                break;
            }
            out.axpy(len, &self.density[c]);
            covered = covered + len;
        }
        out.scale(T::one() / s)
    }

    /// Prepares the measure for integration against tracks with step `dt`.
    pub(crate) fn compile(&self, dt: T) -> CompiledMeasure<T> {
        let atoms = self
            .atoms
            .iter()
            .filter(|a| !a.weight.is_zero())
            .map(|a| (a.theta / dt, a.weight.clone()))
            .collect();
        let w = self.cell_width();
        let cells = self
            .density
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| {
                let a = -self.d + w * T::from_usize_lossy(i);
                let b = a + w;
                (a / dt, b / dt, c.clone())
            })
            .collect();
        CompiledMeasure {
            n: self.n,
            atoms,
            cells,
        }
    }
}

/// Atom offsets and density cell bounds expressed in grid units of a track.
#[derive(Debug, Clone)]
pub(crate) struct CompiledMeasure<T: Real> {
    n: usize,
    atoms: Vec<(T, SquareMatrix<T>)>,
    cells: Vec<(T, T, SquareMatrix<T>)>,
}

impl<T: Real> CompiledMeasure<T> {
    /// `out += ∫ path(k + θ) μ(dθ)` at node `k` of `track`.
    pub(crate) fn apply_acc(&self, track: &Track<T>, k: i64, out: &mut [T], scratch: &mut [T]) {
        debug_assert_eq!(track.dim(), self.n);
        let kf = T::lit(k as f64);
        let (p, q) = scratch.split_at_mut(self.n);
        for (off, w) in &self.atoms {
            track.point_into(kf + *off, p);
            w.mul_vec_acc(p, out);
        }
        for (a, b, f) in &self.cells {
            track.antider_into(kf + *b, p);
            track.antider_into(kf + *a, q);
            for i in 0..self.n {
                p[i] = p[i] - q[i];
            }
            f.mul_vec_acc(p, out);
        }
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.atoms.is_empty() && self.cells.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atom_bounds_are_checked() {
        let m = DelayMeasure::<f64>::zero(1, 1.0).unwrap();
        assert!(m.clone().with_atom(-1.5, SquareMatrix::identity(1)).is_err());
        assert!(m.clone().with_atom(0.1, SquareMatrix::identity(1)).is_err());
        assert!(m.clone().with_atom(-0.5, SquareMatrix::identity(2)).is_err());
        let ok = m.with_atom(0.0, SquareMatrix::identity(1)).unwrap();
        assert!(ok.has_atom_at_zero());
    }

    #[test]
    fn cesaro_mean_of_unit_density_is_one() {
        let m = DelayMeasure::<f64>::zero(1, 1.0)
            .unwrap()
            .with_constant_density(SquareMatrix::identity(1))
            .unwrap();
        for s in [1e-4, 0.3, 1.0] {
            assert!((m.cesaro_mean(s).get(0, 0) - 1.0).abs() < 1e-14);
        }
        assert!((m.total_variation() - 1.0).abs() < 1e-15);
    }
}
