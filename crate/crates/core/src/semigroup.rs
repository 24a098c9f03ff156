//! Explicit kernel of e^{θℒ}, ℒ = Δ − ½y·∇ + 1, and its application by quadrature.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::quadrature::gregory_weights;
use crate::spectral::hermite_h;

/// Tail mass tolerance per output node.
pub const TAIL_TOLERANCE: f64 = 1e-12;

/// Degree of the edge polynomial used for the tail correction.
const TAIL_DEGREE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEval {
    pub theta: f64,
    /// e^θ/√(4π(1−e^{−θ}))
    pub prefactor: f64,
    /// 4(1−e^{−θ})
    pub scale: f64,
}

impl KernelEval {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0) {
            return Err(Error::NonPositiveTheta(theta));
        }
        let one_minus = -(-theta).exp_m1();
        Ok(Self {
            theta,
            prefactor: theta.exp() / (4.0 * PI * one_minus).sqrt(),
            scale: 4.0 * one_minus,
        })
    }

    #[inline]
    pub fn value(&self, y: f64, x: f64) -> f64 {
        let d = y * (-0.5 * self.theta).exp() - x;
        self.prefactor * (-d * d / self.scale).exp()
    }

    /// Center and standard deviation of the Gaussian in x.
    pub fn center_sigma(&self, y: f64) -> (f64, f64) {
        (y * (-0.5 * self.theta).exp(), (0.5 * self.scale).sqrt())
    }
}

pub fn kernel_value(theta: f64, y: f64, x: f64) -> Result<f64> {
    Ok(KernelEval::new(theta)?.value(y, x))
}

/// What to do with the part of the kernel that falls outside the input grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TailPolicy {
    /// Fail if the outside mass exceeds the tolerance at any output node.
    Strict,
    /// Continue r by its edge polynomial and add the Gaussian tail analytically.
    #[default]
    Extrapolate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemigroupOptions {
    pub tail: TailPolicy,
    /// Output is restricted to |y| ≤ this (None = full input grid).
    pub output_half_width: Option<f64>,
}

impl Default for SemigroupOptions {
    fn default() -> Self {
        Self {
            tail: TailPolicy::Extrapolate,
            output_half_width: None,
        }
    }
}

/// ∫_{u0}^∞ u^k φ(u) du for k = 0..=n, φ the standard normal density.
fn normal_tail_moments(u0: f64, n: usize) -> Vec<f64> {
    let phi = (-0.5 * u0 * u0).exp() / (2.0 * PI).sqrt();
    let mut m = vec![0.0; n + 1];
    m[0] = 0.5 * erfc(u0 / 2f64.sqrt());
    if n >= 1 {
        m[1] = phi;
    }
    for k in 2..=n {
        m[k] = u0.powi(k as i32 - 1) * phi + (k as f64 - 1.0) * m[k - 2];
    }
    m
}

/// Monomial coefficients in t = x − x_edge of the polynomial through the given samples.
fn edge_polynomial(ts: &[f64], vals: &[f64]) -> Vec<f64> {
    let n = ts.len();
    let a = DMatrix::from_fn(n, n, |i, j| ts[i].powi(j as i32));
    let b = DVector::from_column_slice(vals);
    match a.lu().solve(&b) {
        Some(c) => c.iter().copied().collect(),
        None => vec![0.0; n],
    }
}

/// ∫_{edge}^{∞} N(x; c, σ) P(x − edge) dx where `dir` = +1 (right tail) or −1 (left tail).
fn gaussian_tail_integral(c: f64, sigma: f64, edge: f64, dir: f64, coeffs: &[f64]) -> f64 {
    // mirror the left tail onto the right
    let (c, edge) = (dir * c, dir * edge);
    let u0 = (edge - c) / sigma;
    let deg = coeffs.len() - 1;
    let mom = normal_tail_moments(u0, deg);
    // in mirrored coordinates t = x' − edge' = σ(u − u0)
    let mut total = 0.0;
    for (k, &ck) in coeffs.iter().enumerate() {
        // (σ(u − u0))^k expanded binomially
        let scale = sigma.powi(k as i32);
        let mut acc = 0.0;
        let mut binom = 1.0;
        for j in 0..=k {
            acc += binom * mom[j] * (-u0).powi((k - j) as i32);
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
        total += ck * scale * acc;
    }
    total
}

fn tail_mass(c: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    0.5 * erfc((hi - c) / (sigma * 2f64.sqrt())) + 0.5 * erfc((c - lo) / (sigma * 2f64.sqrt()))
}

/// e^{θℒ}r sampled on the grid nodes (optionally restricted to |y| ≤ W).
pub fn apply_semigroup(theta: f64, r: &GridField, opts: SemigroupOptions) -> Result<GridField> {
    r.check_finite()?;
    if theta == 0.0 {
        return Ok(restrict(r, opts.output_half_width));
    }
    let k = KernelEval::new(theta)?;
    let n = r.len();
    let h = r.dy;
    let weights = gregory_weights(n, h);
    let lo = r.y(0);
    let hi = r.y(n - 1);

    let stride = ((0.5 / h).round() as usize).max(1);
    let edge_fit = |right: bool| -> Vec<f64> {
        if n < stride * TAIL_DEGREE + 1 {
            return vec![0.0];
        }
        let mut ts = Vec::with_capacity(TAIL_DEGREE + 1);
        let mut vs = Vec::with_capacity(TAIL_DEGREE + 1);
        for i in 0..=TAIL_DEGREE {
            let j = if right { n - 1 - i * stride } else { i * stride };
            let t = if right { r.y(j) - hi } else { lo - r.y(j) };
            ts.push(t);
            vs.push(r.values[j]);
        }
        edge_polynomial(&ts, &vs)
    };
    let right = edge_fit(true);
    let left = edge_fit(false);

    let out_grid = restrict(r, opts.output_half_width);
    let results: Vec<Result<f64>> = (0..out_grid.len())
        .into_par_iter()
        .map(|jo| {
            let y = out_grid.y(jo);
            let (c, sigma) = k.center_sigma(y);
            let mass = tail_mass(c, sigma, lo, hi);
            if opts.tail == TailPolicy::Strict && mass > TAIL_TOLERANCE {
                return Err(Error::TailTruncation { y, mass });
            }
            // kernel negligible beyond 40σ of the center
            let a = (((c - 40.0 * sigma) - lo) / h).floor().max(0.0) as usize;
            let b = ((((c + 40.0 * sigma) - lo) / h).ceil() as usize).min(n - 1);
            let mut acc = 0.0;
            if a <= b {
                for i in a..=b {
                    acc += weights[i] * k.value(y, r.y(i)) * r.values[i];
                }
            }
            if opts.tail == TailPolicy::Extrapolate && mass > 1e-300 {
                let e = theta.exp();
                acc += e * gaussian_tail_integral(c, sigma, hi, 1.0, &right);
                acc += e * gaussian_tail_integral(c, sigma, lo, -1.0, &left);
            }
            Ok(acc)
        })
        .collect();
    let values = results.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(out_grid.with_values(values))
}

fn restrict(r: &GridField, half_width: Option<f64>) -> GridField {
    match half_width {
        Some(w) => {
            let nh = ((w / r.dy + 1e-9).floor() as usize).min(r.n_half);
            let start = r.n_half - nh;
            GridField {
                s: r.s,
                n_half: nh,
                dy: r.dy,
                values: r.values[start..start + 2 * nh + 1].to_vec(),
            }
        }
        None => r.clone(),
    }
}

/// Empirical constants realized by the bounds of the semigroup regularization lemma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularizationReport {
    pub theta: f64,
    pub m: i32,
    /// ‖∇e^{θℒ}r‖ / (e^{θ/2}‖∇r‖)
    pub c_ii: f64,
    /// ‖∇e^{θℒ}r‖·√(1−e^{−θ}) / (e^{θ/2}‖r‖)
    pub c_iii: f64,
    /// sup|e^{θℒ}r|/(1+|y|^m) / (η e^θ)
    pub c_iv: f64,
    /// sup|∇e^{θℒ}r|/(1+|y|^m) / (η' e^{θ/2})
    pub c_v: f64,
    /// sup|∇e^{θℒ}r|/(1+|y|^m)·√(1−e^{−θ}) / (η e^{θ/2})
    pub c_vi: f64,
}

/// Applies e^{θℒ} to r and measures the realized constants on |y| ≤ `window`.
pub fn check_regularization(theta: f64, r: &GridField, m: i32, window: f64) -> Result<RegularizationReport> {
    let out = apply_semigroup(
        theta,
        r,
        SemigroupOptions {
            tail: TailPolicy::Extrapolate,
            output_half_width: Some(window),
        },
    )?;
    let weight = |y: f64| 1.0 + y.abs().powi(m);
    let gr = r.gradient();
    let go = out.gradient();
    let inner = |g: &GridField, vals: &[f64], f: &dyn Fn(f64, f64) -> f64| {
        (1..vals.len() - 1).fold(0.0f64, |acc, j| acc.max(f(g.y(j), vals[j])))
    };
    let sup_r = r.sup_norm();
    let sup_gr = inner(r, &gr, &|_, v| v.abs());
    let sup_go = inner(&out, &go, &|_, v| v.abs());
    let eta = inner(r, &r.values, &|y, v| v.abs() / weight(y));
    let eta_g = inner(r, &gr, &|y, v| v.abs() / weight(y));
    let out_w = inner(&out, &out.values, &|y, v| v.abs() / weight(y));
    let gout_w = inner(&out, &go, &|y, v| v.abs() / weight(y));
    let e_half = (0.5 * theta).exp();
    let root = (-(-theta).exp_m1()).sqrt();
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    Ok(RegularizationReport {
        theta,
        m,
        c_ii: ratio(sup_go, e_half * sup_gr),
        c_iii: ratio(sup_go * root, e_half * sup_r),
        c_iv: ratio(out_w, eta * theta.exp()),
        c_v: ratio(gout_w, eta_g * e_half),
        c_vi: ratio(gout_w * root, eta * e_half),
    })
}

/// Smallest value of e^{θℒ}r₂ − e^{θℒ}r₁ on the output window (≥ 0 when order is preserved).
pub fn order_gap(theta: f64, r1: &GridField, r2: &GridField, window: f64) -> Result<f64> {
    let opts = SemigroupOptions {
        tail: TailPolicy::Extrapolate,
        output_half_width: Some(window),
    };
    let a = apply_semigroup(theta, r1, opts)?;
    let b = apply_semigroup(theta, r2, opts)?;
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| y - x).fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenRow {
    pub m: usize,
    pub theta: f64,
    pub rel_err: f64,
}

/// ‖e^{θℒ}h_m − e^{(1−m/2)θ}h_m‖∞ / ‖h_m‖∞ on |y| ≤ window.
pub fn eigenaction_error(m: usize, theta: f64, window: f64, grid_half_width: f64, dy: f64) -> Result<f64> {
    let r = GridField::covering(0.0, grid_half_width, dy).map(|y, _| hermite_h(m, y));
    let out = apply_semigroup(
        theta,
        &r,
        SemigroupOptions {
            tail: TailPolicy::Strict,
            output_half_width: Some(window),
        },
    )?;
    let lam = ((1.0 - 0.5 * m as f64) * theta).exp();
    let mut err: f64 = 0.0;
    let mut norm: f64 = 0.0;
    for j in 0..out.len() {
        let h = hermite_h(m, out.y(j));
        err = err.max((out.values[j] - lam * h).abs());
        norm = norm.max(h.abs());
    }
    Ok(err / norm)
}

pub fn eigenaction_table(ms: &[usize], thetas: &[f64]) -> Result<Vec<EigenRow>> {
    let mut rows = Vec::new();
    for &m in ms {
        for &theta in thetas {
            rows.push(EigenRow {
                m,
                theta,
                rel_err: eigenaction_error(m, theta, 10.0, 40.0, 0.05)?,
            });
        }
    }
    Ok(rows)
}

/// sup |e^{θ₂ℒ}e^{θ₁ℒ}r − e^{(θ₁+θ₂)ℒ}r| for a Gaussian-localized test function.
pub fn semigroup_law_error(theta1: f64, theta2: f64) -> Result<f64> {
    let r = GridField::covering(0.0, 40.0, 0.05).map(|y, _| (1.0 + y) * (-y * y).exp());
    let o = SemigroupOptions::default();
    let ab = apply_semigroup(theta2, &apply_semigroup(theta1, &r, o)?, o)?;
    let c = apply_semigroup(theta1 + theta2, &r, o)?;
    Ok(ab.values.iter().zip(&c.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kernel_basics() {
        let k = KernelEval::new(0.7).unwrap();
        assert_relative_eq!(k.scale, 4.0 * (1.0 - (-0.7f64).exp()), max_relative = 1e-14);
        let g = GridField::covering(0.0, 40.0, 0.01).map(|x, _| kernel_value(0.7, 1.3, x).unwrap());
        let mass: f64 = g.values.iter().sum::<f64>() * 0.01;
        assert_relative_eq!(mass, 0.7f64.exp(), max_relative = 1e-12);
        let c = 1.3 * (-0.35f64).exp();
        assert_relative_eq!(k.value(1.3, c + 0.4), k.value(1.3, c - 0.4), max_relative = 1e-14);
        assert!(matches!(kernel_value(0.0, 0.0, 0.0), Err(Error::NonPositiveTheta(_))));
    }

    #[test]
    fn identity_at_zero() {
        let r = GridField::covering(0.0, 5.0, 0.1).map(|y, _| y.sin());
        assert_eq!(apply_semigroup(0.0, &r, SemigroupOptions::default()).unwrap(), r);
    }

    #[test]
    fn eigenaction() {
        for m in 0..=4 {
            for theta in [0.1, 1.0, 3.0] {
                let e = eigenaction_error(m, theta, 10.0, 40.0, 0.05).unwrap();
                assert!(e < 1e-6, "m={m} theta={theta} err={e}");
            }
        }
    }

    #[test]
    fn tail_correction_is_exact_for_polynomials() {
        // grid too narrow for strict mode at y = 6
        let r = GridField::covering(0.0, 8.0, 0.05).map(|y, _| hermite_h(4, y));
        let strict = SemigroupOptions {
            tail: TailPolicy::Strict,
            output_half_width: Some(7.0),
        };
        assert!(matches!(apply_semigroup(1.0, &r, strict), Err(Error::TailTruncation { .. })));
        let out = apply_semigroup(
            1.0,
            &r,
            SemigroupOptions {
                tail: TailPolicy::Extrapolate,
                output_half_width: Some(7.0),
            },
        )
        .unwrap();
        let lam = (-1.0f64).exp();
        for j in 0..out.len() {
            let y = out.y(j);
            assert!((out.values[j] - lam * hermite_h(4, y)).abs() < 1e-7 * (1.0 + y.powi(4)), "y={y}");
        }
    }

    #[test]
    fn semigroup_law() {
        let err = semigroup_law_error(0.6, 0.4).unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn regularization_and_order() {
        let r = GridField::covering(0.0, 40.0, 0.05).map(|x, _| 1.0 + x.abs().powi(3));
        let rep = check_regularization(1.0, &r, 3, 10.0).unwrap();
        assert!(rep.c_iv.is_finite() && rep.c_iv > 0.0);
        let r1 = GridField::covering(0.0, 40.0, 0.05).map(|x, _| (0.5 * x).cos());
        let r2 = r1.map(|x, v| v + (-x * x).exp());
        assert!(order_gap(0.5, &r1, &r2, 10.0).unwrap() > -1e-12);
    }
}
