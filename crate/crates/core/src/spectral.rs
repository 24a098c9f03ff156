//! Hermite eigenbasis, cutoff χ and the five-component mode decomposition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::params::ModelParams;
use crate::quadrature::{integrate_rho_folded, Quadrature, TanhSinh};

/// h_m with h₀ = 1, h₁ = y, h_{m+1} = y h_m − 2m h_{m−1}.
pub fn hermite_h(m: usize, y: f64) -> f64 {
    let mut prev = 1.0;
    if m == 0 {
        return prev;
    }
    let mut cur = y;
    for k in 1..m {
        let next = y * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// ‖h_m‖²_ρ = 2^m m!.
pub fn hermite_norm_sq(m: usize) -> f64 {
    (1..=m).fold(1.0, |acc, k| acc * 2.0 * k as f64)
}

/// Dual basis element k_m = h_m/‖h_m‖².
pub fn hermite_k(m: usize, y: f64) -> f64 {
    hermite_h(m, y) / hermite_norm_sq(m)
}

/// ∫ f g ρ for callables via Gauss–Hermite.
pub fn inner_product_rho(quad: &Quadrature, f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> f64 {
    quad.integrate(|y| f(y) * g(y))
}

/// ∫ f g ρ for two fields on the same grid.
pub fn inner_product_grid(f: &GridField, g: &GridField) -> Result<f64> {
    if f.len() != g.len() || f.dy != g.dy {
        return Err(Error::InvalidArgument("fields live on different grids".into()));
    }
    f.check_finite()?;
    g.check_finite()?;
    let n = f.n_half;
    let mut acc = f.values[n] * g.values[n] * crate::quadrature::rho(0.0);
    for k in 1..=n {
        let y = k as f64 * f.dy;
        let w = if k == n { 0.5 } else { 1.0 };
        acc += w
            * crate::quadrature::rho(y)
            * (f.values[n + k] * g.values[n + k] + f.values[n - k] * g.values[n - k]);
    }
    Ok(acc * f.dy)
}

/// Concrete shape of the one-dimensional cutoff χ₀.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CutoffShape {
    /// f(2−x)/(f(2−x)+f(x−1)) with f(t) = e^{−1/t} on (1,2); C^∞.
    #[default]
    Mollifier,
    /// Quintic smoothstep on (1,2); C².
    Smoothstep,
}

impl CutoffShape {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mollifier" => Some(Self::Mollifier),
            "smoothstep" => Some(Self::Smoothstep),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Mollifier => "mollifier",
            Self::Smoothstep => "smoothstep",
        }
    }
}

/// χ₀(x): 1 on [0,1], 0 on [2,∞), non-increasing in between.
pub fn chi0(x: f64, shape: CutoffShape) -> f64 {
    if x <= 1.0 {
        return 1.0;
    }
    if x >= 2.0 {
        return 0.0;
    }
    match shape {
        CutoffShape::Mollifier => {
            let f = |t: f64| (-1.0 / t).exp();
            let a = f(2.0 - x);
            let b = f(x - 1.0);
            a / (a + b)
        }
        CutoffShape::Smoothstep => {
            let t = x - 1.0;
            1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
        }
    }
}

/// χ(y,s) = χ₀(|y|/(K s^β)); `doubled` evaluates χ(2y,s).
pub fn truncation_chi(y: f64, s: f64, params: &ModelParams, doubled: bool, shape: CutoffShape) -> f64 {
    let scale = params.k_trunc * s.powf(params.beta);
    let yy = if doubled { 2.0 * y.abs() } else { y.abs() };
    chi0(yy / scale, shape)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeDecomposition {
    pub v0: f64,
    pub v1: f64,
    pub v2: f64,
    pub v_minus: GridField,
    pub v_e: GridField,
    /// sup_y |v_−(y)|/(1+|y|³)
    pub norm_minus_weighted: f64,
    pub norm_e: f64,
    pub s: f64,
}

impl ModeDecomposition {
    pub fn mode(&self, m: usize) -> f64 {
        match m {
            0 => self.v0,
            1 => self.v1,
            2 => self.v2,
            _ => panic!("mode index {m} out of range"),
        }
    }
}

/// Splits v into v₀h₀ + v₁h₁ + v₂h₂ + v_− (inside the cutoff) and v_e (outside).
pub fn project_modes(v: &GridField, s: f64, params: &ModelParams, shape: CutoffShape) -> Result<ModeDecomposition> {
    let required = 2.0 * params.k_trunc * s.powf(params.beta);
    if v.half_width() < required {
        return Err(Error::InsufficientDomain {
            half_width: v.half_width(),
            required,
        });
    }
    v.check_finite()?;
    let chi: Vec<f64> = v.nodes().map(|y| truncation_chi(y, s, params, false, shape)).collect();
    let vb = v.with_values(v.values.iter().zip(&chi).map(|(a, c)| a * c).collect());
    let mut coeffs = [0.0; 3];
    for (m, c) in coeffs.iter_mut().enumerate() {
        *c = vb.integrate_rho(|y, val| val * hermite_k(m, y));
    }
    let mut minus = vb.clone();
    let mut norm_minus: f64 = 0.0;
    for j in 0..minus.len() {
        let y = v.y(j);
        let fit = coeffs[0] + coeffs[1] * y + coeffs[2] * (y * y - 2.0);
        minus.values[j] -= fit;
        norm_minus = norm_minus.max(minus.values[j].abs() / (1.0 + y.abs().powi(3)));
    }
    let ve = v.with_values(v.values.iter().zip(&chi).map(|(a, c)| a * (1.0 - c)).collect());
    let norm_e = ve.sup_norm();
    Ok(ModeDecomposition {
        v0: coeffs[0],
        v1: coeffs[1],
        v2: coeffs[2],
        v_minus: minus,
        v_e: ve,
        norm_minus_weighted: norm_minus,
        norm_e,
        s,
    })
}

/// One entry of the orthogonality table. `error` is measured in the orthonormal
/// basis, i.e. divided by ‖h_n‖‖h_m‖ (raw entries reach 2^8·8! ≈ 10⁷, where the
/// f64 floor alone is ~10⁻⁸).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrthogonalityRow {
    pub n: usize,
    pub m: usize,
    pub computed: f64,
    pub exact: f64,
    pub error: f64,
}

/// Named moment identity check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub name: String,
    pub p: f64,
    pub computed: f64,
    pub exact: f64,
    pub error: f64,
}

pub fn orthogonality_table(quad: &Quadrature, max_index: usize) -> Vec<OrthogonalityRow> {
    let mut rows = Vec::new();
    for n in 0..=max_index {
        for m in 0..=max_index {
            let computed = inner_product_rho(quad, |y| hermite_h(n, y), |y| hermite_h(m, y));
            let exact = if n == m { hermite_norm_sq(n) } else { 0.0 };
            let scale = (hermite_norm_sq(n) * hermite_norm_sq(m)).sqrt();
            rows.push(OrthogonalityRow {
                n,
                m,
                computed,
                exact,
                error: (computed - exact).abs() / scale,
            });
        }
    }
    rows
}

/// The h₂ moments and the q-moment identity ∫|y|^q h₂ ρ = 2q ∫|y|^q ρ for each p.
/// Errors are absolute for the polynomial moments and relative for the q-identity.
pub fn moment_table(quad: &Quadrature, ps: &[f64]) -> Vec<MomentRow> {
    let mut rows = Vec::new();
    let h2 = |y: f64| hermite_h(2, y);
    let c8 = inner_product_rho(quad, h2, h2);
    rows.push(MomentRow {
        name: "h2_h2".into(),
        p: f64::NAN,
        computed: c8,
        exact: 8.0,
        error: (c8 - 8.0).abs(),
    });
    let c64 = quad.integrate(|y| h2(y).powi(3));
    rows.push(MomentRow {
        name: "h2_cubed".into(),
        p: f64::NAN,
        computed: c64,
        exact: 64.0,
        error: (c64 - 64.0).abs(),
    });
    let rule = TanhSinh::default();
    for &p in ps {
        let q = 2.0 * p / (p + 1.0);
        let lhs = integrate_rho_folded(&rule, |y| y.abs().powf(q) * h2(y));
        let rhs = 2.0 * q * integrate_rho_folded(&rule, |y| y.abs().powf(q));
        rows.push(MomentRow {
            name: "q_identity".into(),
            p,
            computed: lhs,
            exact: rhs,
            error: ((lhs - rhs) / rhs).abs(),
        });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hermite_values() {
        for y in [-2.5, 0.0, 0.7, 3.0] {
            assert_relative_eq!(hermite_h(2, y), y * y - 2.0, epsilon = 1e-14);
            assert_relative_eq!(hermite_h(4, y), y.powi(4) - 12.0 * y * y + 12.0, epsilon = 1e-12);
        }
        assert_eq!(hermite_h(3, 0.0), 0.0);
        assert_eq!(hermite_norm_sq(3), 48.0);
    }

    #[test]
    fn orthogonality_and_moments() {
        let q = Quadrature::default();
        let worst = orthogonality_table(&q, 8).iter().map(|r| r.error).fold(0.0, f64::max);
        assert!(worst <= 1e-8, "{worst}");
        for row in moment_table(&q, &[4.0, 5.0, 7.0, 9.0]) {
            let tol = if row.name == "q_identity" { 1e-6 } else { 1e-8 };
            assert!(row.error <= tol, "{row:?}");
        }
    }

    #[test]
    fn cutoff_properties() {
        let m = ModelParams::new(5.0, 1.0, 6.0).unwrap();
        let s: f64 = 20.0;
        let ks = 6.0 * s.powf(0.75);
        for shape in [CutoffShape::Mollifier, CutoffShape::Smoothstep] {
            assert_eq!(truncation_chi(0.0, s, &m, false, shape), 1.0);
            assert_eq!(truncation_chi(3.0 * ks, s, &m, false, shape), 0.0);
            assert_eq!(truncation_chi(ks, s, &m, true, shape), 0.0);
            let mut prev = 1.0;
            let h = 1e-3;
            let mut lip: f64 = 0.0;
            for i in 0..30000 {
                let x = i as f64 * h;
                let c = chi0(x, shape);
                assert!(c <= prev && (0.0..=1.0).contains(&c));
                lip = lip.max((prev - c) / h);
                prev = c;
            }
            assert!(lip < 3.0, "{lip}");
        }
        assert_relative_eq!(chi0(1.5, CutoffShape::Mollifier), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn projection_recovers_h1() {
        let m = ModelParams::new(5.0, 1.0, 6.0).unwrap();
        let s = 16.0;
        let v = GridField::covering(s, 2.5 * 6.0 * s.powf(0.75), 0.1);
        let v = v.map(|y, _| y);
        let d = project_modes(&v, s, &m, CutoffShape::Mollifier).unwrap();
        assert_relative_eq!(d.v1, 1.0, epsilon = 1e-12);
        assert!(d.v0.abs() < 1e-14 && d.v2.abs() < 1e-12);
        // reconstruction
        for j in 0..v.len() {
            let y = v.y(j);
            let chi = truncation_chi(y, s, &m, false, CutoffShape::Mollifier);
            let rec = d.v0 + d.v1 * y + d.v2 * (y * y - 2.0) + d.v_minus.values[j];
            assert!((v.values[j] * chi - rec).abs() <= 1e-12 * (1.0 + y.abs()));
            assert!((v.values[j] * (1.0 - chi) - d.v_e.values[j]).abs() <= 1e-12);
        }
    }

    #[test]
    fn projection_requires_domain() {
        let m = ModelParams::new(5.0, 1.0, 6.0).unwrap();
        let v = GridField::zeros(16.0, 100, 0.1);
        assert!(matches!(
            project_modes(&v, 16.0, &m, CutoffShape::Mollifier),
            Err(Error::InsufficientDomain { .. })
        ));
    }

    #[test]
    fn projection_idempotent() {
        let m = ModelParams::new(5.0, 1.0, 6.0).unwrap();
        let s = 16.0;
        let v = GridField::covering(s, 100.0, 0.1).map(|y, _| (0.4 * y).sin() + (-0.1 * y * y).exp());
        let d = project_modes(&v, s, &m, CutoffShape::Mollifier).unwrap();
        let again = project_modes(&d.v_minus, s, &m, CutoffShape::Mollifier).unwrap();
        assert!(again.v0.abs() < 1e-13 && again.v1.abs() < 1e-13 && again.v2.abs() < 1e-13);
    }

    #[test]
    fn grid_and_gauss_agree() {
        let q = Quadrature::default();
        let f = |y: f64| (0.3 * y).cos() * (1.0 + y * y);
        let g = GridField::covering(1.0, 50.0, 0.1).map(|y, _| f(y));
        let one = g.with_values(vec![1.0; g.len()]);
        let a = inner_product_grid(&g, &one).unwrap();
        let b = inner_product_rho(&q, f, |_| 1.0);
        assert!((a - b).abs() < 1e-6);
    }
}
