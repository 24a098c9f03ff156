//! Shrinking-set membership, γ selection and mode-ODE diagnostics.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::quadrature::{integrate_rho_folded, TanhSinh};
use crate::solver::TimeRow;
use crate::spectral::{hermite_k, truncation_chi, CutoffShape, ModeDecomposition};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShrinkParams {
    pub a: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub beta: f64,
}

/// Upper end of the γ window, min(5β−1, 2β+1).
pub fn gamma_ceiling(beta: f64) -> f64 {
    (5.0 * beta - 1.0).min(2.0 * beta + 1.0)
}

/// γ = min(5β−1, 2β+1) − ε, requiring γ > 3β.
pub fn choose_gamma(params: &ModelParams, epsilon: f64) -> Result<f64> {
    let top = gamma_ceiling(params.beta);
    let width = top - 3.0 * params.beta;
    if !(epsilon > 0.0 && epsilon < width) {
        return Err(Error::GammaWindow { epsilon, width });
    }
    Ok(top - epsilon)
}

impl ShrinkParams {
    pub fn new(params: &ModelParams, a: f64, epsilon: f64) -> Result<Self> {
        if !(a >= 1.0) {
            return Err(Error::InvalidArgument(format!("trap size A must be at least 1, got {a}")));
        }
        Ok(Self {
            a,
            gamma: choose_gamma(params, epsilon)?,
            epsilon,
            beta: params.beta,
        })
    }

    /// Bounds in component order (e, −, 0, 1, 2).
    pub fn bounds(&self, s: f64) -> [f64; 5] {
        let b = self.beta;
        let a = self.a;
        let mode = a / s.powf(2.0 * b + 1.0);
        [
            a * a / s.powf(self.gamma - 3.0 * b),
            a / s.powf(self.gamma),
            mode,
            mode,
            a.sqrt() / s.powf(4.0 * b - 1.0),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    Outer,
    Minus,
    Mode0,
    Mode1,
    Mode2,
}

impl Component {
    /// Order used for slack vectors.
    pub const ALL: [Component; 5] = [
        Component::Outer,
        Component::Minus,
        Component::Mode0,
        Component::Mode1,
        Component::Mode2,
    ];
    /// Tie-break order for the first violator.
    pub const PRIORITY: [Component; 5] = [
        Component::Outer,
        Component::Minus,
        Component::Mode2,
        Component::Mode0,
        Component::Mode1,
    ];

    pub fn index(self) -> usize {
        match self {
            Component::Outer => 0,
            Component::Minus => 1,
            Component::Mode0 => 2,
            Component::Mode1 => 3,
            Component::Mode2 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::Outer => "e",
            Component::Minus => "minus",
            Component::Mode0 => "0",
            Component::Mode1 => "1",
            Component::Mode2 => "2",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MembershipReport {
    pub in_set: bool,
    /// |quantity|/bound in order (e, −, 0, 1, 2).
    pub slack: [f64; 5],
    /// Component with the largest ratio.
    pub worst: Component,
}

impl MembershipReport {
    /// First violated component by the fixed priority order, if any.
    pub fn first_violation(&self) -> Option<Component> {
        Component::PRIORITY.into_iter().find(|c| self.slack[c.index()] > 1.0)
    }
}

fn quantities(d: &ModeDecomposition) -> [f64; 5] {
    [d.norm_e, d.norm_minus_weighted, d.v0.abs(), d.v1.abs(), d.v2.abs()]
}

pub fn check_membership(d: &ModeDecomposition, shrink: &ShrinkParams, s: f64) -> Result<MembershipReport> {
    if !(s >= 1.0) {
        return Err(Error::InvalidArgument(format!("membership needs s >= 1, got {s}")));
    }
    Ok(membership_from(quantities(d), shrink, s))
}

pub fn membership_from(q: [f64; 5], shrink: &ShrinkParams, s: f64) -> MembershipReport {
    let bounds = shrink.bounds(s);
    let mut slack = [0.0; 5];
    for i in 0..5 {
        slack[i] = q[i] / bounds[i];
    }
    let mut worst = Component::Outer;
    for c in Component::ALL {
        if slack[c.index()] > slack[worst.index()] {
            worst = c;
        }
    }
    MembershipReport {
        in_set: slack.iter().all(|&r| r <= 1.0),
        slack,
        worst,
    }
}

pub fn row_membership(row: &TimeRow, shrink: &ShrinkParams) -> MembershipReport {
    membership_from(
        [row.norm_e, row.norm_minus_weighted, row.v0.abs(), row.v1.abs(), row.v2.abs()],
        shrink,
        row.s,
    )
}

/// Smallest A ≥ 1 for which every row lies in V_A(s) (γ held fixed).
pub fn minimal_trap_size(rows: &[TimeRow], params: &ModelParams, gamma: f64) -> f64 {
    let b = params.beta;
    rows.iter().fold(1.0f64, |acc, r| {
        let s = r.s;
        let need = [
            (r.norm_e * s.powf(gamma - 3.0 * b)).sqrt(),
            r.norm_minus_weighted * s.powf(gamma),
            r.v0.abs() * s.powf(2.0 * b + 1.0),
            r.v1.abs() * s.powf(2.0 * b + 1.0),
            (r.v2.abs() * s.powf(4.0 * b - 1.0)).powi(2),
        ];
        need.into_iter().fold(acc, f64::max)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualPoint {
    pub s: f64,
    /// s^{2β+1}|v₀' − v₀|
    pub r0: f64,
    /// s^{2β+1}|v₁' − v₁/2|
    pub r1: f64,
    /// s^{4β}|v₂' + (2β+1)v₂/s|
    pub r2: f64,
}

/// Relative tolerance on the step-halving estimate of the derivative error.
pub const CADENCE_TOLERANCE: f64 = 1e-2;

/// Scaled residuals of the mode ODEs from a uniformly sampled time series.
pub fn mode_ode_residuals(rows: &[TimeRow], params: &ModelParams) -> Result<Vec<ResidualPoint>> {
    let n = rows.len();
    if n < 9 {
        return Err(Error::BadSeries { needed: 9 });
    }
    let h = rows[1].s - rows[0].s;
    if !(h > 0.0) || rows.windows(2).any(|w| ((w[1].s - w[0].s) - h).abs() > 1e-6 * h) {
        return Err(Error::BadSeries { needed: 9 });
    }
    let b = params.beta;
    let deriv = |f: &dyn Fn(usize) -> f64, i: usize, k: usize| -> f64 {
        let hk = h * k as f64;
        (-f(i + 2 * k) + 8.0 * f(i + k) - 8.0 * f(i - k) + f(i - 2 * k)) / (12.0 * hk)
    };
    let comps: [&dyn Fn(usize) -> f64; 3] = [&|i| rows[i].v0, &|i| rows[i].v1, &|i| rows[i].v2];
    let mut out = Vec::with_capacity(n - 8);
    for i in 4..n - 4 {
        let s = rows[i].s;
        let mut d = [0.0; 3];
        for m in 0..3 {
            let fine = deriv(comps[m], i, 1);
            let coarse = deriv(comps[m], i, 2);
            let est = (fine - coarse).abs() / 15.0;
            let lin = match m {
                0 => comps[m](i),
                1 => 0.5 * comps[m](i),
                _ => (2.0 * b + 1.0) / s * comps[m](i),
            };
            let scale = fine.abs().max(lin.abs());
            if scale > 0.0 && est > CADENCE_TOLERANCE * scale {
                return Err(Error::CadenceTooCoarse { s, estimate: est });
            }
            d[m] = fine;
        }
        out.push(ResidualPoint {
            s,
            r0: s.powf(2.0 * b + 1.0) * (d[0] - rows[i].v0).abs(),
            r1: s.powf(2.0 * b + 1.0) * (d[1] - 0.5 * rows[i].v1).abs(),
            r2: s.powf(4.0 * b) * (d[2] + (2.0 * b + 1.0) / s * rows[i].v2).abs(),
        });
    }
    Ok(out)
}

/// Second mode of w̄ = w − κ = (φ − κ) + v, i.e. P₂(χ(φ−κ)) + v₂.
pub fn inner_second_mode(params: &ModelParams, s: f64, v2: f64, shape: CutoffShape, rule: &TanhSinh) -> Result<f64> {
    let slice = params.slice(s)?;
    let k = params.kappa;
    let prof = integrate_rho_folded(rule, |y| {
        (slice.phi(y) - k) * truncation_chi(y, s, params, false, shape) * hermite_k(2, y)
    });
    Ok(prof + v2)
}

/// B = [(q−1)|c̃₂|]^{−1/(q−1)} with c̃₂ = μ2^q/8 ∫|y|^q(y²−2)ρ = μ2^q q/4 ∫|y|^qρ.
pub fn inner_constant_b(params: &ModelParams) -> f64 {
    let m_rho = params.q_moment / (4.0 * std::f64::consts::PI).sqrt();
    let c2 = params.mu * 2f64.powf(params.q) * params.q * m_rho / 4.0;
    ((params.q - 1.0) * c2.abs()).powf(-1.0 / (params.q - 1.0))
}
