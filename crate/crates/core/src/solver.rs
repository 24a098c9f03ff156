//! Method-of-lines integrator for ∂_s v = (ℒ+V)v + B(v) + G(v) + R on a growing grid,
//! and the self-similar ↔ physical change of variables.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::linearization::{nonlinear_b_from_phi, potential_from_phi, rest_from_point};
use crate::params::ModelParams;
use crate::spectral::{project_modes, CutoffShape, ModeDecomposition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    /// v = 0 at both ends.
    Dirichlet,
    /// ∂_y v = 0 at both ends (mirror ghost node).
    Neumann,
}

impl Boundary {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dirichlet" => Some(Self::Dirichlet),
            "neumann" => Some(Self::Neumann),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Dirichlet => "dirichlet",
            Self::Neumann => "neumann",
        }
    }
}

/// The field v is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Background {
    /// φ(y,s), the intermediate profile.
    Profile,
    /// The constant κ (for which V = R = 0).
    Kappa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Terms {
    pub linear: bool,
    pub potential: bool,
    pub nonlinear: bool,
    pub gradient: bool,
    pub rest: bool,
}

impl Terms {
    pub const ALL: Self = Self {
        linear: true,
        potential: true,
        nonlinear: true,
        gradient: true,
        rest: true,
    };
    pub const LINEAR_ONLY: Self = Self {
        linear: true,
        potential: false,
        nonlinear: false,
        gradient: false,
        rest: false,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dy: f64,
    /// Fraction of the explicit stability limit; equals ds/dy² when drift is negligible.
    pub dt_safety: f64,
    pub eps_grad: f64,
    pub bc: Boundary,
    /// Domain policy: half-width ≥ domain_factor·K·s^β.
    pub domain_factor: f64,
    /// Output (observer) cadence in s.
    pub cadence: f64,
    /// sup|v| above which the run is declared divergent.
    pub guard: f64,
    pub terms: Terms,
    pub background: Background,
    pub cutoff: CutoffShape,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dy: 0.1,
            dt_safety: 0.4,
            eps_grad: 1e-10,
            bc: Boundary::Dirichlet,
            domain_factor: 2.5,
            cadence: 0.01,
            guard: 1e8,
            terms: Terms::ALL,
            background: Background::Profile,
            cutoff: CutoffShape::Mollifier,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.dy > 0.0) {
            return bad("dy must be positive");
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 0.5) {
            return bad("dt_safety must lie in (0, 0.5]");
        }
        if !(self.eps_grad >= 0.0) {
            return bad("eps_grad must be non-negative");
        }
        if !(self.domain_factor >= 2.0) {
            return bad("domain_factor must be at least 2 (the cutoff support)");
        }
        if !(self.cadence > 0.0) {
            return bad("cadence must be positive");
        }
        if !(self.guard > 0.0) {
            return bad("guard must be positive");
        }
        Ok(())
    }

    pub fn required_half_width(&self, s: f64, params: &ModelParams) -> f64 {
        self.domain_factor * params.k_trunc * s.powf(params.beta)
    }

    /// Explicit step for a grid of the given half-width, before cadence alignment.
    pub fn stable_ds(&self, half_width: f64) -> f64 {
        let h = self.dy;
        // forward-Euler limit for diffusion plus upwinded drift of speed L/2
        let fe = 1.0 / (2.0 / (h * h) + 0.5 * half_width / h);
        2.0 * self.dt_safety * fe
    }

    /// Step dividing the cadence into an integer number of substeps.
    pub fn aligned_ds(&self, half_width: f64) -> (f64, usize) {
        let n = (self.cadence / self.stable_ds(half_width)).ceil().max(1.0) as usize;
        (self.cadence / n as f64, n)
    }
}

/// s-dependent coefficients on the current grid.
#[derive(Debug, Clone)]
struct Coeffs {
    s: f64,
    len: usize,
    phi: Vec<f64>,
    gphi: Vec<f64>,
    pot: Vec<f64>,
    rest: Vec<f64>,
}

impl Coeffs {
    fn build(s: f64, grid: &GridField, params: &ModelParams, cfg: &RunConfig) -> Result<Self> {
        let n = grid.len();
        let mut c = Self {
            s,
            len: n,
            phi: vec![0.0; n],
            gphi: vec![0.0; n],
            pot: vec![0.0; n],
            rest: vec![0.0; n],
        };
        match cfg.background {
            Background::Profile => {
                let slice = params.slice(s)?;
                for j in 0..n {
                    let y = grid.y(j);
                    let d = slice.at(y);
                    c.phi[j] = d.phi;
                    c.gphi[j] = d.dy;
                    c.pot[j] = potential_from_phi(d.phi, params.p);
                    c.rest[j] = rest_from_point(&d, y, params);
                }
            }
            Background::Kappa => {
                let k = params.kappa;
                let pot = potential_from_phi(k, params.p);
                let rest = -k / (params.p - 1.0) + k.powf(params.p);
                c.phi.fill(k);
                c.pot.fill(pot);
                c.rest.fill(rest);
            }
        }
        Ok(c)
    }
}

/// Manufactured forcing added to the right-hand side.
pub type Source<'a> = &'a (dyn Fn(f64, f64) -> f64 + Sync);

#[inline]
fn reg_pow(g: f64, eps: f64, q: f64) -> f64 {
    if eps == 0.0 {
        g.abs().powf(q)
    } else {
        (g * g + eps * eps).powf(0.5 * q)
    }
}

fn rhs(
    v: &[f64],
    grid: &GridField,
    s: f64,
    c: &Coeffs,
    params: &ModelParams,
    cfg: &RunConfig,
    source: Option<Source<'_>>,
    out: &mut [f64],
) {
    let n = v.len();
    let h = grid.dy;
    let inv_h2 = 1.0 / (h * h);
    let t = cfg.terms;
    let p = params.p;
    let q = params.q;
    let eps = cfg.eps_grad;
    let centered_limit = 4.0 / h;
    let at = |j: isize| -> f64 {
        if j < 0 {
            match cfg.bc {
                Boundary::Dirichlet => 0.0,
                Boundary::Neumann => v[1],
            }
        } else if j as usize >= n {
            match cfg.bc {
                Boundary::Dirichlet => 0.0,
                Boundary::Neumann => v[n - 2],
            }
        } else {
            v[j as usize]
        }
    };
    for j in 0..n {
        if cfg.bc == Boundary::Dirichlet && (j == 0 || j == n - 1) {
            out[j] = 0.0;
            continue;
        }
        let y = grid.y(j);
        let vm = at(j as isize - 1);
        let vp = at(j as isize + 1);
        let vj = v[j];
        let mut acc = 0.0;
        if t.linear {
            let lap = ((vp + vm) - 2.0 * vj) * inv_h2;
            let drift = if y.abs() <= centered_limit {
                -0.5 * y * (vp - vm) / (2.0 * h)
            } else if y > 0.0 {
                -0.5 * y * (vj - vm) / h
            } else {
                -0.5 * y * (vp - vj) / h
            };
            acc += lap + drift + vj;
        }
        if t.potential {
            acc += c.pot[j] * vj;
        }
        if t.nonlinear {
            acc += nonlinear_b_from_phi(c.phi[j], vj, p);
        }
        if t.gradient {
            let gv = (vp - vm) / (2.0 * h);
            let gp = c.gphi[j];
            acc += params.mu * (reg_pow(gp + gv, eps, q) - reg_pow(gp, eps, q));
        }
        if t.rest {
            acc += c.rest[j];
        }
        if let Some(f) = source {
            acc += f(y, s);
        }
        out[j] = acc;
    }
}

/// Explicit Heun (RK2) integrator holding the current state.
#[derive(Debug, Clone)]
pub struct Integrator {
    pub params: ModelParams,
    pub cfg: RunConfig,
    pub v: GridField,
    pub s: f64,
    cache: Option<Coeffs>,
    k1: Vec<f64>,
    k2: Vec<f64>,
    stage: Vec<f64>,
}

impl Integrator {
    pub fn new(v0: GridField, s0: f64, params: &ModelParams, cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        if !(s0 > 0.0) && cfg.background == Background::Profile {
            return Err(Error::NonPositiveTime(s0));
        }
        if (v0.dy - cfg.dy).abs() > 1e-12 * cfg.dy {
            return Err(Error::InvalidConfig(format!(
                "initial field spacing {} differs from configured dy {}",
                v0.dy, cfg.dy
            )));
        }
        v0.check_finite()?;
        let mut v = v0;
        v.s = s0;
        if cfg.bc == Boundary::Dirichlet {
            let n = v.len();
            v.values[0] = 0.0;
            v.values[n - 1] = 0.0;
        }
        let n = v.len();
        Ok(Self {
            params: *params,
            cfg: *cfg,
            v,
            s: s0,
            cache: None,
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            stage: vec![0.0; n],
        })
    }

    fn coeffs_at(&mut self, s: f64) -> Result<Coeffs> {
        if let Some(c) = self.cache.take() {
            if c.s == s && c.len == self.v.len() {
                return Ok(c);
            }
        }
        Coeffs::build(s, &self.v, &self.params, &self.cfg)
    }

    /// One Heun step of size ds.
    pub fn step(&mut self, ds: f64, source: Option<Source<'_>>) -> Result<()> {
        let s = self.s;
        let c1 = self.coeffs_at(s)?;
        rhs(&self.v.values, &self.v, s, &c1, &self.params, &self.cfg, source, &mut self.k1);
        for j in 0..self.v.len() {
            self.stage[j] = self.v.values[j] + ds * self.k1[j];
        }
        let s2 = s + ds;
        let c2 = Coeffs::build(s2, &self.v, &self.params, &self.cfg)?;
        rhs(&self.stage, &self.v, s2, &c2, &self.params, &self.cfg, source, &mut self.k2);
        let mut sup: f64 = 0.0;
        let mut finite = true;
        for j in 0..self.v.len() {
            let nv = self.v.values[j] + 0.5 * ds * (self.k1[j] + self.k2[j]);
            finite &= nv.is_finite();
            sup = sup.max(nv.abs());
            self.v.values[j] = nv;
        }
        self.s = s2;
        self.v.s = s2;
        self.cache = Some(c2);
        if !finite || sup > self.cfg.guard {
            return Err(Error::Divergence {
                s: s2,
                norm: if finite { sup } else { f64::INFINITY },
            });
        }
        Ok(())
    }

    /// Re-grid with zero padding when the half-width falls below the policy.
    pub fn ensure_domain(&mut self, s_next: f64) -> bool {
        if self.cfg.background == Background::Kappa {
            return false;
        }
        let need = self.cfg.required_half_width(s_next, &self.params);
        if self.v.half_width() >= need {
            return false;
        }
        let target = self.cfg.required_half_width(self.s + 1.0, &self.params).max(need);
        let n_half = (target / self.cfg.dy).ceil() as usize;
        self.v = self.v.padded(n_half);
        let n = self.v.len();
        self.k1 = vec![0.0; n];
        self.k2 = vec![0.0; n];
        self.stage = vec![0.0; n];
        self.cache = None;
        true
    }

    pub fn decompose(&self) -> Result<ModeDecomposition> {
        project_modes(&self.v, self.s, &self.params, self.cfg.cutoff)
    }
}

/// State delivered to observers at each output time.
#[derive(Debug)]
pub struct Snapshot<'a> {
    pub index: usize,
    pub s: f64,
    pub v: &'a GridField,
    pub modes: &'a ModeDecomposition,
    pub sup: f64,
}

pub trait Observer {
    fn observe(&mut self, snap: &Snapshot<'_>) -> Result<ControlFlow<()>>;
}

/// One row of the output time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeRow {
    pub s: f64,
    pub v0: f64,
    pub v1: f64,
    pub v2: f64,
    pub norm_minus_weighted: f64,
    pub norm_e: f64,
    pub sup: f64,
    /// v(0, s)
    pub center: f64,
}

/// Records the time series and, optionally, every k-th field.
#[derive(Debug, Clone, Default)]
pub struct Recorder {
    pub rows: Vec<TimeRow>,
    pub snapshot_every: usize,
    pub snapshots: Vec<GridField>,
}

impl Recorder {
    pub fn new(snapshot_every: usize) -> Self {
        Self {
            snapshot_every,
            ..Self::default()
        }
    }
}

impl Observer for Recorder {
    fn observe(&mut self, snap: &Snapshot<'_>) -> Result<ControlFlow<()>> {
        self.rows.push(TimeRow {
            s: snap.s,
            v0: snap.modes.v0,
            v1: snap.modes.v1,
            v2: snap.modes.v2,
            norm_minus_weighted: snap.modes.norm_minus_weighted,
            norm_e: snap.modes.norm_e,
            sup: snap.sup,
            center: snap.v.center(),
        });
        if self.snapshot_every > 0 && snap.index % self.snapshot_every == 0 {
            self.snapshots.push(snap.v.clone());
        }
        Ok(ControlFlow::Continue(()))
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub s_final: f64,
    pub outputs: usize,
    pub steps: usize,
    pub stopped_early: bool,
    pub final_field: GridField,
}

/// Integrates from s0 to s_end, calling every observer at each output time (s0 included).
pub fn run(
    v0: GridField,
    s0: f64,
    s_end: f64,
    params: &ModelParams,
    cfg: &RunConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<RunSummary> {
    run_with_source(v0, s0, s_end, params, cfg, observers, None)
}

pub fn run_with_source(
    v0: GridField,
    s0: f64,
    s_end: f64,
    params: &ModelParams,
    cfg: &RunConfig,
    observers: &mut [&mut dyn Observer],
    source: Option<Source<'_>>,
) -> Result<RunSummary> {
    run_indexed(v0, s0, 0, s_end, params, cfg, observers, source)
}

/// Continues a run whose output k sits at s_origin + k·cadence, starting from output `start`
/// (v0 is the state there); snapshot indices stay global, so a resumed run repeats the
/// uninterrupted one exactly.
#[allow(clippy::too_many_arguments)]
pub fn run_indexed(
    v0: GridField,
    s_origin: f64,
    start: usize,
    s_end: f64,
    params: &ModelParams,
    cfg: &RunConfig,
    observers: &mut [&mut dyn Observer],
    source: Option<Source<'_>>,
) -> Result<RunSummary> {
    let s0 = s_origin + start as f64 * cfg.cadence;
    if !(s_end > s0) {
        return Err(Error::InvalidArgument(format!("s_end {s_end} must exceed s0 {s0}")));
    }
    let mut it = Integrator::new(v0, s0, params, cfg)?;
    let n_out = ((s_end - s_origin) / cfg.cadence).round() as usize;
    let mut steps = 0usize;
    let mut stopped_early = false;
    let mut grid_changed = true;
    let (mut ds, mut nsub) = (0.0, 0usize);
    let mut outputs = 0usize;
    for k in start..=n_out {
        let s_out = s_origin + k as f64 * cfg.cadence;
        it.s = s_out;
        it.v.s = s_out;
        if it.ensure_domain(s_out + cfg.cadence) {
            grid_changed = true;
        }
        if !observers.is_empty() {
            let modes = it.decompose()?;
            let snap = Snapshot {
                index: k,
                s: s_out,
                v: &it.v,
                modes: &modes,
                sup: it.v.sup_norm(),
            };
            let mut stop = false;
            for obs in observers.iter_mut() {
                if obs.observe(&snap)?.is_break() {
                    stop = true;
                }
            }
            outputs += 1;
            if stop {
                stopped_early = k < n_out;
                break;
            }
        }
        if k == n_out {
            break;
        }
        if grid_changed {
            (ds, nsub) = cfg.aligned_ds(it.v.half_width());
            grid_changed = false;
        }
        for i in 0..nsub {
            it.s = s_out + i as f64 * ds;
            it.step(ds, source)?;
            steps += 1;
        }
    }
    Ok(RunSummary {
        s_final: it.s,
        outputs,
        steps,
        stopped_early,
        final_field: it.v,
    })
}

/// w = φ + v on the field's grid.
pub fn total_field(v: &GridField, params: &ModelParams, background: Background) -> Result<GridField> {
    match background {
        Background::Profile => {
            let slice = params.slice(v.s)?;
            Ok(v.map(|y, val| slice.phi(y) + val))
        }
        Background::Kappa => Ok(v.map(|_, val| params.kappa + val)),
    }
}

/// Relation between physical time and self-similar time: s = σ − log(T − t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalFrame {
    pub blowup_time: f64,
    pub sigma: f64,
}

impl PhysicalFrame {
    /// T = e^{−s0}, σ = 0: the standard change of variables, t = 0 at s = s0.
    pub fn native(s0: f64) -> Self {
        Self {
            blowup_time: (-s0).exp(),
            sigma: 0.0,
        }
    }

    /// T = 1, σ = s0: t = 0 at s = s0 with unit blow-up time.
    pub fn normalized(s0: f64) -> Self {
        Self {
            blowup_time: 1.0,
            sigma: s0,
        }
    }

    pub fn s_of_t(&self, t: f64) -> Result<f64> {
        if !(t < self.blowup_time) {
            return Err(Error::AfterBlowup {
                t,
                blowup_time: self.blowup_time,
            });
        }
        Ok(self.sigma - (self.blowup_time - t).ln())
    }

    pub fn t_of_s(&self, s: f64) -> f64 {
        self.blowup_time - (self.sigma - s).exp()
    }

    /// T − t at self-similar time s.
    pub fn remaining(&self, s: f64) -> f64 {
        (self.sigma - s).exp()
    }
}

/// u(·, t) on a uniform symmetric x-grid (the grid's `s` slot holds t, `dy` holds dx).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSlice {
    pub t: f64,
    pub u: GridField,
}

impl PhysicalSlice {
    pub fn x(&self, j: usize) -> f64 {
        self.u.y(j)
    }
}

/// u(x,t) = (T−t)^{−1/(p−1)} w(x/√(T−t), s).
pub fn to_physical(w: &GridField, params: &ModelParams, frame: &PhysicalFrame) -> PhysicalSlice {
    let tau = frame.remaining(w.s);
    let t = frame.t_of_s(w.s);
    let amp = tau.powf(-1.0 / (params.p - 1.0));
    PhysicalSlice {
        t,
        u: GridField {
            s: t,
            n_half: w.n_half,
            dy: w.dy * tau.sqrt(),
            values: w.values.iter().map(|x| amp * x).collect(),
        },
    }
}

/// w(y,s) = (T−t)^{1/(p−1)} u(y√(T−t), t), interpolated (cubic) onto the requested y-grid.
pub fn from_physical(
    slice: &PhysicalSlice,
    params: &ModelParams,
    frame: &PhysicalFrame,
    n_half: usize,
    dy: f64,
) -> Result<GridField> {
    let s = frame.s_of_t(slice.t)?;
    let tau = frame.blowup_time - slice.t;
    let amp = tau.powf(1.0 / (params.p - 1.0));
    let root = tau.sqrt();
    Ok(GridField::from_fn(s, n_half, dy, |y| amp * slice.u.interpolate(y * root)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::hermite_h;
    use approx::assert_relative_eq;

    fn p5() -> ModelParams {
        ModelParams::new(5.0, 1.0, 6.0).unwrap()
    }

    #[test]
    fn config_validation() {
        let mut c = RunConfig::default();
        assert!(c.validate().is_ok());
        c.dt_safety = 0.6;
        assert!(c.validate().is_err());
        c = RunConfig {
            eps_grad: -1.0,
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
        let (ds, n) = RunConfig::default().aligned_ds(100.0);
        assert_relative_eq!(ds * n as f64, 0.01, max_relative = 1e-14);
    }

    #[test]
    fn euler_consistency_from_zero() {
        let m = p5();
        let cfg = RunConfig::default();
        let s = 20.0;
        let v0 = GridField::covering(s, cfg.required_half_width(s, &m), cfg.dy);
        let mut it = Integrator::new(v0.clone(), s, &m, &cfg).unwrap();
        let ds = 1e-5;
        it.step(ds, None).unwrap();
        let slice = m.slice(s).unwrap();
        for j in (100..v0.len() - 100).step_by(37) {
            let y = v0.y(j);
            let r = rest_from_point(&slice.at(y), y, &m);
            assert!((it.v.values[j] - ds * r).abs() < 1e-3 * ds * r.abs() + 1e-12, "y={y}");
        }
    }

    #[test]
    fn linear_eigenmode_growth() {
        let m = p5();
        let cfg = RunConfig {
            terms: Terms::LINEAR_ONLY,
            ..RunConfig::default()
        };
        let v0 = GridField::covering(20.0, 60.0, cfg.dy);
        for mode in 0..=3 {
            let f = v0.map(|y, _| hermite_h(mode, y));
            let mut it = Integrator::new(f.clone(), 20.0, &m, &cfg).unwrap();
            let ds = 1e-3;
            it.step(ds, None).unwrap();
            let g = ((1.0 - 0.5 * mode as f64) * ds).exp();
            for j in 0..f.len() {
                if f.y(j).abs() <= 10.0 {
                    let expect = g * f.values[j];
                    assert!((it.v.values[j] - expect).abs() <= 1e-5 * (1.0 + f.values[j].abs()));
                }
            }
        }
    }

    #[test]
    fn evenness_preserved() {
        let m = p5();
        let cfg = RunConfig::default();
        let s0 = 15.0;
        let v0 = GridField::covering(s0, cfg.required_half_width(s0, &m), cfg.dy)
            .map(|y, _| 1e-3 * (-0.1 * y * y).exp());
        let sum = run(v0, s0, s0 + 0.2, &m, &cfg, &mut []).unwrap();
        assert!(sum.final_field.asymmetry() <= 1e-10);
    }

    #[test]
    fn domain_growth_pads() {
        let m = p5();
        let cfg = RunConfig::default();
        let s0 = 15.0;
        let v0 = GridField::covering(s0, cfg.required_half_width(s0, &m), cfg.dy);
        let n0 = v0.n_half;
        let mut rec = Recorder::new(0);
        let sum = run(v0, s0, s0 + 0.5, &m, &cfg, &mut [&mut rec]).unwrap();
        assert!(sum.final_field.n_half > n0);
        assert_eq!(rec.rows.len(), 51);
        assert!(sum.final_field.half_width() >= cfg.required_half_width(sum.s_final, &m));
    }

    #[test]
    fn frames_and_round_trip() {
        let m = p5();
        let f = PhysicalFrame::normalized(10.0);
        assert_relative_eq!(f.s_of_t(0.0).unwrap(), 10.0);
        assert!(matches!(f.s_of_t(1.0), Err(Error::AfterBlowup { .. })));
        let mut last = f64::NEG_INFINITY;
        for t in [0.0, 0.3, 0.9, 0.999] {
            let s = f.s_of_t(t).unwrap();
            assert!(s > last);
            assert_relative_eq!(f.t_of_s(s), t, epsilon = 1e-14);
            last = s;
        }
        let w = GridField::from_fn(12.0, 300, 0.05, |y| (-0.05 * y * y).exp());
        let u = to_physical(&w, &m, &f);
        let back = from_physical(&u, &m, &f, 200, 0.05).unwrap();
        for j in 0..back.len() {
            assert!((back.values[j] - (-0.05 * back.y(j).powi(2)).exp()).abs() < 1e-6);
        }
        // constant κ maps to the ODE blow-up
        let k = GridField::from_fn(12.0, 10, 0.1, |_| m.kappa);
        let u = to_physical(&k, &m, &f);
        let tau = 1.0 - u.t;
        assert_relative_eq!(u.u.values[3], m.kappa * tau.powf(-0.25), max_relative = 1e-14);
    }
}
