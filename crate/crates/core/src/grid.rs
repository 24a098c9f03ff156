//! Uniform symmetric grids in the self-similar space variable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::rho;

/// Samples of a function of y on nodes y_j = (j − n_half)·dy, j = 0..=2·n_half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub s: f64,
    pub n_half: usize,
    pub dy: f64,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(s: f64, n_half: usize, dy: f64) -> Self {
        Self {
            s,
            n_half,
            dy,
            values: vec![0.0; 2 * n_half + 1],
        }
    }

    /// Smallest symmetric grid with spacing `dy` whose half-width is at least `half_width`.
    pub fn covering(s: f64, half_width: f64, dy: f64) -> Self {
        Self::zeros(s, (half_width / dy).ceil() as usize, dy)
    }

    pub fn from_fn(s: f64, n_half: usize, dy: f64, f: impl Fn(f64) -> f64) -> Self {
        let mut g = Self::zeros(s, n_half, dy);
        for j in 0..g.len() {
            g.values[j] = f(g.y(j));
        }
        g
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        (j as f64 - self.n_half as f64) * self.dy
    }

    pub fn half_width(&self) -> f64 {
        self.n_half as f64 * self.dy
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|j| self.y(j))
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.len());
        Self {
            s: self.s,
            n_half: self.n_half,
            dy: self.dy,
            values,
        }
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..self.len()).map(|j| f(self.y(j), self.values[j])).collect();
        self.with_values(values)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Fails on the first non-finite sample.
    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite {
                index,
                y: self.y(index),
            }),
            None => Ok(()),
        }
    }

    /// Value at node nearest to y = 0.
    pub fn center(&self) -> f64 {
        self.values[self.n_half]
    }

    /// ρ-weighted trapezoid ∫ f(y, v(y)) ρ(y) dy with symmetric pairing.
    pub fn integrate_rho(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let n = self.n_half;
        let mut acc = f(0.0, self.values[n]) * rho(0.0);
        for k in 1..=n {
            let y = k as f64 * self.dy;
            let w = if k == n { 0.5 } else { 1.0 };
            acc += w * rho(y) * (f(y, self.values[n + k]) + f(-y, self.values[n - k]));
        }
        acc * self.dy
    }

    /// Centered first difference (one-sided at the ends).
    pub fn gradient(&self) -> Vec<f64> {
        let n = self.len();
        let mut g = vec![0.0; n];
        if n < 2 {
            return g;
        }
        let h = self.dy;
        for j in 1..n - 1 {
            g[j] = (self.values[j + 1] - self.values[j - 1]) / (2.0 * h);
        }
        g[0] = (self.values[1] - self.values[0]) / h;
        g[n - 1] = (self.values[n - 1] - self.values[n - 2]) / h;
        g
    }

    /// Piecewise-cubic (Catmull–Rom) interpolation; zero outside the grid.
    pub fn interpolate(&self, y: f64) -> f64 {
        let t = y / self.dy + self.n_half as f64;
        let last = self.len() as f64 - 1.0;
        if !(t >= 0.0 && t <= last) {
            return 0.0;
        }
        let i = (t.floor() as usize).min(self.len().saturating_sub(2));
        let u = t - i as f64;
        let at = |k: isize| -> f64 {
            let k = k.clamp(0, self.len() as isize - 1) as usize;
            self.values[k]
        };
        let ii = i as isize;
        let (p0, p1, p2, p3) = (at(ii - 1), at(ii), at(ii + 1), at(ii + 2));
        let (p0, p3) = (
            if i == 0 { 2.0 * p1 - p2 } else { p0 },
            if i + 2 >= self.len() { 2.0 * p2 - p1 } else { p3 },
        );
        0.5 * (2.0 * p1
            + (p2 - p0) * u
            + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u * u
            + (3.0 * (p1 - p2) + p3 - p0) * u * u * u)
    }

    /// Zero-pad symmetrically to `n_half` (no-op if already that wide).
    pub fn padded(&self, n_half: usize) -> Self {
        if n_half <= self.n_half {
            return self.clone();
        }
        let extra = n_half - self.n_half;
        let mut values = vec![0.0; 2 * n_half + 1];
        values[extra..extra + self.len()].copy_from_slice(&self.values);
        Self {
            s: self.s,
            n_half,
            dy: self.dy,
            values,
        }
    }

    /// Largest |v(y) − v(−y)|.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n_half;
        (1..=n).fold(0.0, |m, k| m.max((self.values[n + k] - self.values[n - k]).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn nodes_are_symmetric() {
        let g = GridField::zeros(1.0, 50, 0.1);
        assert_eq!(g.len(), 101);
        assert_eq!(g.y(50), 0.0);
        for k in 0..=50 {
            assert_eq!(g.y(50 + k), -g.y(50 - k));
        }
        assert_relative_eq!(g.half_width(), 5.0);
    }

    #[test]
    fn rho_trapezoid_accuracy() {
        let g = GridField::from_fn(1.0, 400, 0.1, |y| y * y - 2.0);
        assert_relative_eq!(g.integrate_rho(|_, v| 1.0 + 0.0 * v), 1.0, max_relative = 1e-12);
        assert_relative_eq!(g.integrate_rho(|_, v| v * v), 8.0, max_relative = 1e-12);
        let odd = GridField::from_fn(1.0, 400, 0.1, |y| y.powi(3));
        assert_eq!(odd.integrate_rho(|_, v| v), 0.0);
    }

    #[test]
    fn interpolation_and_padding() {
        let g = GridField::from_fn(1.0, 200, 0.05, |y| (0.3 * y).sin());
        for y in [-3.3, 0.012, 2.71] {
            assert!((g.interpolate(y) - (0.3 * y).sin()).abs() < 1e-6);
        }
        assert_eq!(g.interpolate(20.0), 0.0);
        let p = g.padded(250);
        assert_eq!(p.len(), 501);
        assert_eq!(p.values[50 + 200], g.values[200]);
        assert_eq!(p.values[0], 0.0);
    }

    #[test]
    fn non_finite_detected() {
        let mut g = GridField::zeros(1.0, 3, 1.0);
        g.values[4] = f64::NAN;
        assert_eq!(g.check_finite(), Err(Error::NonFinite { index: 4, y: 1.0 }));
    }
}
