//! Self-checks of the integrator: scalar ODE, eigenmode growth, spatial order, ε-sensitivity.

use serde::Serialize;

use crate::error::Result;
use crate::grid::GridField;
use crate::params::ModelParams;
use crate::shooting::initial_psi;
use crate::solver::{run, Background, Boundary, RunConfig, Terms};
use crate::spectral::{hermite_h, inner_product_grid};

/// Exact w(s) for w' = −w/(p−1) + |w|^{p−1}w with w(s0) = w0 > 0, via z = w^{1−p}.
pub fn scalar_ode_exact(w0: f64, ds: f64, p: f64) -> f64 {
    let z0 = w0.powf(1.0 - p);
    let z = (p - 1.0) + (z0 - (p - 1.0)) * ds.exp();
    z.powf(1.0 / (1.0 - p))
}

/// Relative error of the solver against the scalar ODE for constant data κ + δ (κ background,
/// Neumann ends), sampled every cadence over `span`.
pub fn scalar_ode_error(params: &ModelParams, delta: f64, span: f64, cfg: &RunConfig) -> Result<f64> {
    let cfg = RunConfig {
        bc: Boundary::Neumann,
        background: Background::Kappa,
        ..*cfg
    };
    let s0 = 1.0;
    let v0 = GridField::covering(s0, cfg.required_half_width(s0 + span, params), cfg.dy).map(|_, _| delta);
    let mut rec = crate::solver::Recorder::new(0);
    run(v0, s0, s0 + span, params, &cfg, &mut [&mut rec])?;
    let w0 = params.kappa + delta;
    let mut worst: f64 = 0.0;
    for r in &rec.rows {
        let exact = scalar_ode_exact(w0, r.s - s0, params.p);
        let got = params.kappa + r.center;
        worst = worst.max((got - exact).abs() / exact.abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthRow {
    pub mode: usize,
    pub measured: f64,
    pub exact: f64,
    pub relative_error: f64,
}

/// Growth of ⟨v, h_m⟩_ρ under the linear part alone over `span`, against e^{(1−m/2)span}.
pub fn eigenmode_growth(params: &ModelParams, modes: &[usize], span: f64, cfg: &RunConfig) -> Result<Vec<GrowthRow>> {
    let cfg = RunConfig {
        terms: Terms::LINEAR_ONLY,
        ..*cfg
    };
    let s0 = 20.0;
    let mut out = Vec::new();
    for &m in modes {
        let f = GridField::covering(s0, 40.0, cfg.dy).map(|y, _| hermite_h(m, y));
        let norm = inner_product_grid(&f, &f)?;
        let sum = run(f.clone(), s0, s0 + span, params, &cfg, &mut [])?;
        let g = sum.final_field;
        let f = if g.len() == f.len() { f } else { f.padded(g.n_half) };
        let measured = inner_product_grid(&g, &f)? / norm;
        let exact = ((1.0 - 0.5 * m as f64) * span).exp();
        out.push(GrowthRow {
            mode: m,
            measured,
            exact,
            relative_error: (measured / exact - 1.0).abs(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderStudy {
    pub dys: Vec<f64>,
    /// sup over |y| ≤ window of the differences between successive resolutions
    pub differences: Vec<f64>,
    pub order: f64,
}

fn run_from_psi(d0: f64, d1: f64, s0: f64, span: f64, a: f64, params: &ModelParams, cfg: &RunConfig) -> Result<GridField> {
    let v0 = initial_psi(d0, d1, s0, a, params, cfg)?;
    Ok(run(v0, s0, s0 + span, params, cfg, &mut [])?.final_field)
}

/// Observed order from three runs at dy, dy/2, dy/4 compared on the coarse nodes.
pub fn spatial_order(params: &ModelParams, dy: f64, s0: f64, span: f64, window: f64, cfg: &RunConfig) -> Result<OrderStudy> {
    let dys = vec![dy, dy / 2.0, dy / 4.0];
    let fields = dys
        .iter()
        .map(|&h| {
            let c = RunConfig { dy: h, ..*cfg };
            run_from_psi(-0.5, 0.5, s0, span, 20.0, params, &c)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = (window / dy).floor() as usize;
    let diff = |a: &GridField, b: &GridField, stride_a: usize, stride_b: usize| {
        let mut d: f64 = 0.0;
        for k in 0..=2 * n {
            let ia = a.n_half - n * stride_a + k * stride_a;
            let ib = b.n_half - n * stride_b + k * stride_b;
            d = d.max((a.values[ia] - b.values[ib]).abs());
        }
        d
    };
    let d1 = diff(&fields[0], &fields[1], 1, 2);
    let d2 = diff(&fields[1], &fields[2], 2, 4);
    Ok(OrderStudy {
        dys,
        differences: vec![d1, d2],
        order: (d1 / d2).log2(),
    })
}

/// Relative sup difference between runs with two gradient regularizations.
pub fn eps_grad_sensitivity(params: &ModelParams, eps_a: f64, eps_b: f64, s0: f64, span: f64, cfg: &RunConfig) -> Result<f64> {
    let a = run_from_psi(-0.5, 0.5, s0, span, 20.0, params, &RunConfig { eps_grad: eps_a, ..*cfg })?;
    let b = run_from_psi(-0.5, 0.5, s0, span, 20.0, params, &RunConfig { eps_grad: eps_b, ..*cfg })?;
    let scale = a.sup_norm().max(b.sup_norm());
    let d = a
        .values
        .iter()
        .zip(&b.values)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    Ok(d / scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_ode_fixed_point() {
        let k = 0.25f64.powf(0.25);
        assert!((scalar_ode_exact(k, 3.0, 5.0) - k).abs() < 1e-14);
        assert!(scalar_ode_exact(0.9 * k, 1.0, 5.0) < 0.9 * k);
    }

    #[test]
    fn scalar_ode_small_span() {
        let m = ModelParams::new(5.0, 1.0, 6.0).unwrap();
        let e = scalar_ode_error(&m, -0.05, 1.0, &RunConfig::default()).unwrap();
        assert!(e < 1e-6, "{e}");
    }
}
