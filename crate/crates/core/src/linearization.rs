//! Coefficient and source terms of the perturbation equation
//! ∂_s v = (ℒ + V)v + B(v) + G(v) + R.

use serde::Serialize;

use crate::error::Result;
use crate::fit::{geomspace, loglog_fit, LineFit};
use crate::grid::GridField;
use crate::params::{ModelParams, ProfilePoint, ProfileSlice};
use crate::quadrature::{integrate_rho_folded, TanhSinh};
use crate::spectral::{hermite_k, truncation_chi, CutoffShape};

/// V(y,s) = pφ^{p−1} − p/(p−1).
pub fn potential_v(y: f64, s: f64, params: &ModelParams) -> Result<f64> {
    let phi = params.phi(y, s)?;
    Ok(potential_from_phi(phi, params.p))
}

#[inline]
pub fn potential_from_phi(phi: f64, p: f64) -> f64 {
    p * phi.powf(p - 1.0) - p / (p - 1.0)
}

/// B(v) = |φ+v|^{p−1}(φ+v) − φ^p − pφ^{p−1}v, for given φ.
#[inline]
pub fn nonlinear_b_from_phi(phi: f64, v: f64, p: f64) -> f64 {
    let w = phi + v;
    let pm1 = phi.powf(p - 1.0);
    w.abs().powf(p - 1.0) * w - pm1 * phi - p * pm1 * v
}

pub fn nonlinear_b(v: f64, y: f64, s: f64, params: &ModelParams) -> Result<f64> {
    Ok(nonlinear_b_from_phi(params.phi(y, s)?, v, params.p))
}

/// G = μ(|∂_yφ + ∂_yv|^q − |∂_yφ|^q).
#[inline]
pub fn gradient_g(grad_phi: f64, grad_v: f64, params: &ModelParams) -> f64 {
    params.mu * ((grad_phi + grad_v).abs().powf(params.q) - grad_phi.abs().powf(params.q))
}

/// R = Δφ − ½y∂_yφ − φ/(p−1) + φ^p − ∂_sφ + μ|∂_yφ|^q.
pub fn rest_r(y: f64, s: f64, params: &ModelParams) -> Result<f64> {
    let slice = params.slice(s)?;
    Ok(rest_from_slice(&slice, y, params))
}

#[inline]
pub fn rest_from_slice(slice: &ProfileSlice, y: f64, params: &ModelParams) -> f64 {
    rest_from_point(&slice.at(y), y, params)
}

#[inline]
pub fn rest_from_point(d: &ProfilePoint, y: f64, params: &ModelParams) -> f64 {
    let p = params.p;
    d.dyy - 0.5 * y * d.dy - d.phi / (p - 1.0) + d.phi.powf(p) - d.ds + params.mu * d.dy.abs().powf(params.q)
}

/// V, R and ∂_yφ sampled on a grid at a fixed s, with handles for B and G.
#[derive(Debug, Clone)]
pub struct TermBundle {
    pub s: f64,
    pub phi: GridField,
    pub grad_phi: GridField,
    pub v: GridField,
    pub r: GridField,
    params: ModelParams,
}

impl TermBundle {
    pub fn new(s: f64, n_half: usize, dy: f64, params: &ModelParams) -> Result<Self> {
        let slice = params.slice(s)?;
        let mut phi = GridField::zeros(s, n_half, dy);
        let mut grad_phi = phi.clone();
        let mut v = phi.clone();
        let mut r = phi.clone();
        for j in 0..phi.len() {
            let y = phi.y(j);
            let d = slice.at(y);
            phi.values[j] = d.phi;
            grad_phi.values[j] = d.dy;
            v.values[j] = potential_from_phi(d.phi, params.p);
            r.values[j] = rest_from_point(&d, y, params);
        }
        Ok(Self {
            s,
            phi,
            grad_phi,
            v,
            r,
            params: *params,
        })
    }

    pub fn b_of(&self, field: &GridField) -> GridField {
        let p = self.params.p;
        field.with_values(
            field
                .values
                .iter()
                .zip(&self.phi.values)
                .map(|(&v, &phi)| nonlinear_b_from_phi(phi, v, p))
                .collect(),
        )
    }

    pub fn g_of(&self, grad_v: &[f64]) -> GridField {
        self.phi.with_values(
            grad_v
                .iter()
                .zip(&self.grad_phi.values)
                .map(|(&gv, &gp)| gradient_g(gp, gv, &self.params))
                .collect(),
        )
    }
}

/// Projections (R₀, R₁, R₂) of χR on h₀, h₁, h₂, by double-exponential quadrature.
pub fn rest_modes(s: f64, params: &ModelParams, shape: CutoffShape, rule: &TanhSinh) -> Result<[f64; 3]> {
    let slice = params.slice(s)?;
    let f = |y: f64| rest_from_slice(&slice, y, params) * truncation_chi(y, s, params, false, shape);
    let mut out = [0.0; 3];
    for (m, o) in out.iter_mut().enumerate() {
        *o = integrate_rho_folded(rule, |y| f(y) * hermite_k(m, y));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualRow {
    pub s: f64,
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    /// s^{2β+1} R₀
    pub r0_scaled: f64,
    /// s^{4β} R₂
    pub r2_scaled: f64,
    /// R₂ with b ← b_factor·b
    pub r2_variant: f64,
    /// s^{2β+1} R₂ with b ← b_factor·b
    pub r2_variant_scaled: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualStudy {
    pub rows: Vec<ResidualRow>,
    pub b_factor: f64,
    pub slope_r0: LineFit,
    pub slope_r2: LineFit,
    pub slope_r2_variant: LineFit,
    /// sup |R₁| over the ladder
    pub max_r1: f64,
}

pub fn residual_study(
    params: &ModelParams,
    s_lo: f64,
    s_hi: f64,
    points: usize,
    b_factor: f64,
    shape: CutoffShape,
) -> Result<ResidualStudy> {
    let rule = TanhSinh::default();
    let variant = params.with_b_factor(b_factor);
    let beta = params.beta;
    let mut rows = Vec::with_capacity(points);
    for s in geomspace(s_lo, s_hi, points) {
        let [r0, r1, r2] = rest_modes(s, params, shape, &rule)?;
        let [_, _, r2v] = rest_modes(s, &variant, shape, &rule)?;
        rows.push(ResidualRow {
            s,
            r0,
            r1,
            r2,
            r0_scaled: s.powf(2.0 * beta + 1.0) * r0,
            r2_scaled: s.powf(4.0 * beta) * r2,
            r2_variant: r2v,
            r2_variant_scaled: s.powf(2.0 * beta + 1.0) * r2v,
        });
    }
    let ss: Vec<f64> = rows.iter().map(|r| r.s).collect();
    let col = |f: fn(&ResidualRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    Ok(ResidualStudy {
        slope_r0: loglog_fit(&ss, &col(|r| r.r0))?,
        slope_r2: loglog_fit(&ss, &col(|r| r.r2))?,
        slope_r2_variant: loglog_fit(&ss, &col(|r| r.r2_variant))?,
        max_r1: rows.iter().fold(0.0, |m, r| m.max(r.r1.abs())),
        b_factor,
        rows,
    })
}

/// Sup-norm of R over a grid covering the cutoff support.
pub fn rest_sup(s: f64, params: &ModelParams, dy: f64) -> Result<f64> {
    let slice = params.slice(s)?;
    let w = 3.0 * params.k_trunc * s.powf(params.beta);
    let n = (w / dy).ceil() as usize;
    Ok((0..=n).fold(0.0, |m, j| m.max(rest_from_slice(&slice, j as f64 * dy, params).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p5() -> ModelParams {
        ModelParams::new(5.0, 1.0, 6.0).unwrap()
    }

    #[test]
    fn potential_limits() {
        let m = p5();
        assert!(potential_v(0.0, 1e8, &m).unwrap().abs() < 1e-8);
        for s in [50.0, 200.0] {
            let y = 10.0 * 6.0 * f64::powf(s, 0.75);
            let v = potential_v(y, s, &m).unwrap();
            assert!((v + 1.25).abs() < 0.125);
        }
    }

    #[test]
    fn b_quadratic_leading_term() {
        let m = p5();
        let phi = m.kappa;
        for v in [1e-3, 1e-4] {
            let ratio = nonlinear_b_from_phi(phi, v, 5.0) / (v * v);
            assert_relative_eq!(ratio, 0.5 * 5.0 * 4.0 * phi.powi(3), max_relative = 5e-3);
        }
        assert_eq!(nonlinear_b_from_phi(phi, 0.0, 5.0), 0.0);
        // continuous across φ + v = 0
        let a = nonlinear_b_from_phi(phi, -phi + 1e-9, 5.0);
        let b = nonlinear_b_from_phi(phi, -phi - 1e-9, 5.0);
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn g_definition_and_bound() {
        let m = p5();
        assert_eq!(gradient_g(0.3, 0.0, &m), 0.0);
        assert_relative_eq!(gradient_g(0.0, 0.2, &m), 0.2f64.powf(m.q), max_relative = 1e-15);
        let mut c: f64 = 0.0;
        for i in 0..200 {
            let gp = -1.0 + 0.01 * i as f64;
            for k in 1..50 {
                let gv = -0.5 + 0.0201 * k as f64;
                let g = gradient_g(gp, gv, &m).abs();
                let bound = gp.abs().powf(m.q - 1.0) * gv.abs() + gv.abs().powf(m.q);
                c = c.max(g / bound);
            }
        }
        assert!(c.is_finite() && c < 4.0, "{c}");
    }

    #[test]
    fn rest_decays_like_inverse_s() {
        let m = p5();
        let vals: Vec<f64> = [20.0, 200.0, 2000.0]
            .iter()
            .map(|&s| rest_sup(s, &m, 0.05).unwrap() * s)
            .collect();
        let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi / lo < 3.0, "{vals:?}");
    }

    #[test]
    fn rest_at_origin_cancels() {
        let m = p5();
        let beta = m.beta;
        // scaled by s^{2β}, R(0,s) → 0 with the paper's a, and not with 1.5a
        let r_s = |mm: &ModelParams, s: f64| rest_r(0.0, s, mm).unwrap() * s.powf(2.0 * beta);
        assert!(r_s(&m, 1e4).abs() < 1e-2 * r_s(&m.with_a_factor(1.5), 1e4).abs());
        let lim = r_s(&m.with_a_factor(1.5), 1e6);
        assert_relative_eq!(lim, 0.5 * m.a, max_relative = 1e-2);
        assert_relative_eq!(
            m.a - 2.0 * m.b * m.kappa / 16.0,
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn rest_modes_symmetry() {
        let m = p5();
        let rule = TanhSinh::default();
        let [_, r1, _] = rest_modes(100.0, &m, CutoffShape::Mollifier, &rule).unwrap();
        assert_eq!(r1, 0.0);
    }

    #[test]
    fn term_bundle_zero_inputs() {
        let m = p5();
        let tb = TermBundle::new(20.0, 100, 0.1, &m).unwrap();
        let z = GridField::zeros(20.0, 100, 0.1);
        assert!(tb.b_of(&z).values.iter().all(|&x| x == 0.0));
        assert!(tb.g_of(&vec![0.0; z.len()]).values.iter().all(|&x| x == 0.0));
        assert!(tb.v.check_finite().is_ok() && tb.r.check_finite().is_ok());
    }
}
