//! Integration rules against the Gaussian weight ρ(y) = e^{-y²/4}/√(4π).

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

/// Default Gauss–Hermite node count.
pub const DEFAULT_NODES: usize = 256;

/// Half-width beyond which e^{-y²/4} is below f64 resolution of any O(1) integrand.
pub const RHO_CUTOFF: f64 = 40.0;

#[inline]
pub fn rho(y: f64) -> f64 {
    (-0.25 * y * y).exp() / (4.0 * PI).sqrt()
}

/// Gauss–Hermite rule for the measure ρ(y)dy.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    /// Golub–Welsch eigenvalues of the Jacobi matrix, polished by Newton on the
    /// orthonormal Hermite recurrence; nodes mapped y = 2t.
    pub fn gauss_hermite(n: usize) -> Self {
        assert!(n >= 1);
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                (0.5 * i.max(j) as f64).sqrt()
            } else {
                0.0
            }
        });
        let mut t: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        t.sort_by(f64::total_cmp);
        let mut w = vec![0.0; n];
        for (ti, wi) in t.iter_mut().zip(w.iter_mut()) {
            let mut z = *ti;
            let mut pp = 1.0;
            for _ in 0..8 {
                let (pn, pn1) = orthonormal_hermite(n, z);
                pp = (2.0 * n as f64).sqrt() * pn1;
                let dz = pn / pp;
                z -= dz;
                if dz.abs() <= 1e-16 * z.abs().max(1.0) {
                    break;
                }
            }
            let (_, pn1) = orthonormal_hermite(n, z);
            pp = pp.signum() * ((2.0 * n as f64).sqrt() * pn1).abs();
            *ti = z;
            *wi = 2.0 / (pp * pp);
        }
        // enforce exact symmetry
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let z = 0.5 * (t[j] - t[i]);
            let wm = 0.5 * (w[i] + w[j]);
            t[i] = -z;
            t[j] = z;
            w[i] = wm;
            w[j] = wm;
        }
        if n % 2 == 1 {
            t[n / 2] = 0.0;
        }
        let mut mass = Neumaier::default();
        w.iter().for_each(|&x| mass.add(x));
        let norm = mass.total();
        Self {
            nodes: t.iter().map(|x| 2.0 * x).collect(),
            weights: w.iter().map(|x| x / norm).collect(),
        }
    }

    /// ∫ f ρ.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        // pair symmetric nodes so odd integrands vanish exactly
        // (Neumaier-compensated to keep large polynomial moments exact to a few ulp)
        let n = self.nodes.len();
        let mut sum = Neumaier::default();
        for i in 0..n / 2 {
            let j = n - 1 - i;
            sum.add(self.weights[i] * (f(self.nodes[i]) + f(self.nodes[j])));
        }
        if n % 2 == 1 {
            sum.add(self.weights[n / 2] * f(self.nodes[n / 2]));
        }
        sum.total()
    }
}

/// Compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// (p_n(t), p_{n-1}(t)) for the orthonormal Hermite polynomials with weight e^{-t²}.
fn orthonormal_hermite(n: usize, t: f64) -> (f64, f64) {
    let mut p1 = PI.powf(-0.25);
    let mut p2 = 0.0;
    for j in 0..n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = t * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, p2)
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::gauss_hermite(DEFAULT_NODES)
    }
}

/// Double-exponential (tanh-sinh) rule on [0, len], accurate for integrands with
/// algebraic endpoint singularities such as |y|^q at the origin.
#[derive(Debug, Clone)]
pub struct TanhSinh {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl TanhSinh {
    pub fn new(len: f64, h: f64) -> Self {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let kmax = (4.5 / h).ceil() as i64;
        for k in -kmax..=kmax {
            let t = k as f64 * h;
            let u = 0.5 * PI * t.sinh();
            // x = len/(1+e^{-2u}), evaluated without cancellation at either end
            let x = len / (1.0 + (-2.0 * u).exp());
            let ch = u.cosh();
            let wt = h * len * 0.5 * (0.5 * PI * t.cosh()) / (ch * ch);
            if x > 0.0 && x < len && wt > 0.0 && wt.is_finite() {
                nodes.push(x);
                weights.push(wt);
            }
        }
        Self { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

impl Default for TanhSinh {
    fn default() -> Self {
        Self::new(RHO_CUTOFF, 1.0 / 64.0)
    }
}

/// ∫_ℝ f ρ for integrands that may be non-smooth at y = 0, by folding onto [0, ∞).
pub fn integrate_rho_folded(rule: &TanhSinh, f: impl Fn(f64) -> f64) -> f64 {
    rule.integrate(|y| (f(y) + f(-y)) * rho(y))
}

/// ∫_ℝ |y|^r e^{-y²/4} dy by quadrature.
pub fn abs_moment_quadrature(r: f64) -> f64 {
    let rule = TanhSinh::default();
    2.0 * rule.integrate(|y| y.powf(r) * (-0.25 * y * y).exp())
}

/// Gregory end-corrected trapezoid weights (fourth order) for n uniform points of spacing h.
pub fn gregory_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n < 8 {
        // plain trapezoid
        if n >= 1 {
            w[0] *= 0.5;
            w[n - 1] *= 0.5;
        }
        return w;
    }
    let c = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
    for (i, ci) in c.iter().enumerate() {
        w[i] = ci * h;
        w[n - 1 - i] = ci * h;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::gaussian_abs_moment;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_hermite_mass_and_moments() {
        let q = Quadrature::default();
        assert_eq!(q.nodes.len(), 256);
        assert!((q.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(q.weights.iter().all(|&w| w > 0.0));
        assert_relative_eq!(q.integrate(|y| y * y), 2.0, max_relative = 1e-12);
        assert_relative_eq!(q.integrate(|y| y.powi(4)), 12.0, max_relative = 1e-12);
        assert_eq!(q.integrate(|y| y.powi(3)), 0.0);
    }

    #[test]
    fn small_rules() {
        for n in [1, 2, 3, 5, 20] {
            let q = Quadrature::gauss_hermite(n);
            assert!((q.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13, "n={n}");
        }
        let q = Quadrature::gauss_hermite(3);
        assert_relative_eq!(q.integrate(|y| y.powi(4)), 12.0, max_relative = 1e-13);
    }

    #[test]
    fn tanh_sinh_moments() {
        for r in [0.0, 1.0, 1.6, 5.0 / 3.0, 1.75, 3.6] {
            let exact = gaussian_abs_moment(r);
            assert_relative_eq!(abs_moment_quadrature(r), exact, max_relative = 1e-13);
        }
        let rule = TanhSinh::default();
        assert_relative_eq!(integrate_rho_folded(&rule, |_| 1.0), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn gregory_exact_on_cubics() {
        let n = 41;
        let h = 0.05;
        let w = gregory_weights(n, h);
        let s: f64 = (0..n).map(|i| w[i] * (i as f64 * h).powi(3)).sum();
        assert_relative_eq!(s, 2f64.powi(4) / 4.0, max_relative = 1e-13);
    }
}
