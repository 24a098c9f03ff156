//! Physical-variable diagnostics: blow-up time and point, profile convergence,
//! gradient growth, the single-point criterion, the final profile and the
//! empirical stability table.

use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{fit_line, geomspace, loglog_fit, LineFit};
use crate::grid::GridField;
use crate::params::ModelParams;
use crate::solver::{run, total_field, Background, Observer, PhysicalFrame, PhysicalSlice, RunConfig, Snapshot, TimeRow};

/// Time series and sampled total fields w = φ + v of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RecordedRun {
    pub rows: Vec<TimeRow>,
    /// (s, sup|w|) at every output
    pub w_sup: Vec<(f64, f64)>,
    #[serde(skip)]
    pub fields: Vec<GridField>,
    /// s at which the guard fired, if it did
    pub diverged_at: Option<f64>,
}

struct TrajectoryRecorder {
    params: ModelParams,
    background: Background,
    every: usize,
    out: RecordedRun,
}

impl Observer for TrajectoryRecorder {
    fn observe(&mut self, snap: &Snapshot<'_>) -> Result<ControlFlow<()>> {
        let m = snap.modes;
        self.out.rows.push(TimeRow {
            s: snap.s,
            v0: m.v0,
            v1: m.v1,
            v2: m.v2,
            norm_minus_weighted: m.norm_minus_weighted,
            norm_e: m.norm_e,
            sup: snap.sup,
            center: snap.v.center(),
        });
        let w = total_field(snap.v, &self.params, self.background)?;
        self.out.w_sup.push((snap.s, w.sup_norm()));
        if self.every > 0 && snap.index % self.every == 0 {
            self.out.fields.push(w);
        }
        Ok(ControlFlow::Continue(()))
    }
}

/// Runs from v0, keeping every `every`-th total field; a guard crossing ends the run without error.
pub fn record_run(
    v0: GridField,
    s0: f64,
    s_end: f64,
    params: &ModelParams,
    cfg: &RunConfig,
    every: usize,
) -> Result<RecordedRun> {
    let mut rec = TrajectoryRecorder {
        params: *params,
        background: cfg.background,
        every,
        out: RecordedRun {
            rows: Vec::new(),
            w_sup: Vec::new(),
            fields: Vec::new(),
            diverged_at: None,
        },
    };
    match run(v0, s0, s_end, params, cfg, &mut [&mut rec]) {
        Ok(_) => {}
        Err(Error::Divergence { s, .. }) => rec.out.diverged_at = Some(s),
        Err(e) => return Err(e),
    }
    Ok(rec.out)
}

/// u(x,t) samples plus the sup-norm history.
#[derive(Debug, Clone, Serialize)]
pub struct PhysicalTrajectory {
    pub frame: PhysicalFrame,
    /// (t, sup|u|)
    pub sup: Vec<(f64, f64)>,
    pub slices: Vec<PhysicalSlice>,
}

impl PhysicalTrajectory {
    pub fn from_run(run: &RecordedRun, params: &ModelParams, frame: PhysicalFrame) -> Self {
        let e = 1.0 / (params.p - 1.0);
        Self {
            frame,
            sup: run
                .w_sup
                .iter()
                .map(|&(s, w)| (frame.t_of_s(s), w * frame.remaining(s).powf(-e)))
                .collect(),
            slices: run
                .fields
                .iter()
                .map(|w| crate::solver::to_physical(w, params, &frame))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupEstimate {
    pub t_est: f64,
    pub a_est: f64,
    pub rate_exponent: f64,
    /// fit of sup^{−(p−1)} against t
    pub time_fit: LineFit,
    /// fit of log sup against log(T_est − t)
    pub rate_fit: LineFit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateOptions {
    /// Trailing fraction of the sup history used by both fits.
    pub tail_fraction: f64,
    /// Largest accepted residual of the time fit, relative to the data range.
    pub max_relative_residual: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            tail_fraction: 0.25,
            max_relative_residual: 1e-2,
        }
    }
}

/// Location of max|u| with a parabolic correction through the neighbouring nodes.
pub fn peak_location(u: &GridField) -> f64 {
    let (mut j, mut best) = (0, f64::NEG_INFINITY);
    for (i, v) in u.values.iter().enumerate() {
        if v.abs() > best {
            best = v.abs();
            j = i;
        }
    }
    if j == 0 || j + 1 == u.len() {
        return u.y(j);
    }
    let (a, b, c) = (u.values[j - 1].abs(), best, u.values[j + 1].abs());
    let den = a - 2.0 * b + c;
    let shift = if den < 0.0 { 0.5 * (a - c) / den } else { 0.0 };
    u.y(j) + shift * u.dy
}

/// T from the linear fit of ‖u‖^{−(p−1)} in t, the point from the last slice, the rate by log-fit.
pub fn estimate_blowup(traj: &PhysicalTrajectory, params: &ModelParams, opts: &EstimateOptions) -> Result<BlowupEstimate> {
    let n = traj.sup.len();
    if n < 4 {
        return Err(Error::FitRejected(format!("need at least 4 sup samples, got {n}")));
    }
    let m = ((n as f64 * opts.tail_fraction).ceil() as usize).clamp(3, n);
    let tail = &traj.sup[n - m..];
    let ts: Vec<f64> = tail.iter().map(|r| r.0).collect();
    let ys: Vec<f64> = tail.iter().map(|r| r.1.powf(1.0 - params.p)).collect();
    let time_fit = fit_line(&ts, &ys)?;
    if !(time_fit.slope < 0.0) {
        return Err(Error::FitRejected("sup-norm is not growing".into()));
    }
    let range = ys.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - ys.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if time_fit.max_residual > opts.max_relative_residual * range {
        return Err(Error::FitRejected(format!(
            "time fit residual {:e} exceeds {:e} of the data range",
            time_fit.max_residual, opts.max_relative_residual
        )));
    }
    let t_est = -time_fit.intercept / time_fit.slope;
    let (lx, ly): (Vec<f64>, Vec<f64>) = tail
        .iter()
        .filter(|r| t_est - r.0 > 0.0)
        .map(|r| (t_est - r.0, r.1))
        .unzip();
    let rate_fit = loglog_fit(&lx, &ly)?;
    let a_est = traj
        .slices
        .last()
        .map(|s| peak_location(&s.u))
        .ok_or_else(|| Error::FitRejected("no field slices".into()))?;
    Ok(BlowupEstimate {
        t_est,
        a_est,
        rate_exponent: rate_fit.slope,
        time_fit,
        rate_fit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileError {
    pub s: f64,
    pub sup: f64,
    pub grad_sup: f64,
    /// min(2/(p−1), (p−3)/(2(p−1))) − ε with ε = 0
    pub predicted_order: f64,
}

/// sup|w − φ₀(y/s^b)| and sup|∂_y w − ∂_y φ₀(y/s^b)| with the exponent b given.
pub fn profile_error_with_exponent(w: &GridField, s: f64, params: &ModelParams, exponent: f64) -> ProfileError {
    let scale = s.powf(exponent);
    let model = w.map(|y, _| params.phi0(y / scale));
    let gw = w.gradient();
    let gm = model.gradient();
    let mut sup: f64 = 0.0;
    let mut grad: f64 = 0.0;
    for j in 0..w.len() {
        sup = sup.max((w.values[j] - model.values[j]).abs());
        if j > 0 && j + 1 < w.len() {
            grad = grad.max((gw[j] - gm[j]).abs());
        }
    }
    let p = params.p;
    ProfileError {
        s,
        sup,
        grad_sup: grad,
        predicted_order: (2.0 / (p - 1.0)).min((p - 3.0) / (2.0 * (p - 1.0))),
    }
}

pub fn profile_convergence_error(w: &GridField, s: f64, params: &ModelParams) -> ProfileError {
    profile_error_with_exponent(w, s, params, params.beta)
}

/// Upper end of the α window, min(2β−1, (γ−2β)/2).
pub fn alpha_ceiling(params: &ModelParams, gamma: f64) -> f64 {
    (2.0 * params.beta - 1.0).min((gamma - 2.0 * params.beta) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientPoint {
    pub s: f64,
    pub y: f64,
    pub grad: f64,
    /// |∇w(s^α,s)|·s^{2β−α}
    pub scaled: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientSeries {
    pub alpha: f64,
    pub points: Vec<GradientPoint>,
    /// log|∇w(s^α,s)| against log s
    pub fit: LineFit,
    pub expected_exponent: f64,
}

fn gradient_at(w: &GridField, y: f64) -> f64 {
    let h = w.dy;
    (w.interpolate(y + h) - w.interpolate(y - h)) / (2.0 * h)
}

pub fn gradient_blowup_diagnostic(fields: &[GridField], params: &ModelParams, alpha: f64, gamma: f64) -> Result<GradientSeries> {
    let upper = alpha_ceiling(params, gamma);
    if !(alpha > 0.0 && alpha < upper) {
        return Err(Error::AlphaWindow { alpha, upper });
    }
    let b = params.beta;
    let points: Vec<GradientPoint> = fields
        .iter()
        .map(|w| {
            let y = w.s.powf(alpha);
            let g = gradient_at(w, y).abs();
            GradientPoint {
                s: w.s,
                y,
                grad: g,
                scaled: g * w.s.powf(2.0 * b - alpha),
            }
        })
        .collect();
    let ss: Vec<f64> = points.iter().map(|p| p.s).collect();
    let gs: Vec<f64> = points.iter().map(|p| p.grad).collect();
    Ok(GradientSeries {
        alpha,
        fit: loglog_fit(&ss, &gs)?,
        expected_exponent: alpha - 2.0 * b,
        points,
    })
}

/// Solves |x0| = K0 √τ |log τ|^β for τ = T − t0 on the branch τ ≤ e^{−2β}.
pub fn solve_t0_gap(x0: f64, k0: f64, beta: f64) -> Result<f64> {
    if x0 == 0.0 {
        return Err(Error::ZeroPoint);
    }
    if !(k0 > 0.0) {
        return Err(Error::InvalidArgument(format!("K0 must be positive, got {k0}")));
    }
    let g = |tau: f64| k0 * tau.sqrt() * (-tau.ln()).powf(beta) - x0.abs();
    let mut hi = (-2.0 * beta).exp();
    if g(hi) < 0.0 {
        return Err(Error::Bisection(format!(
            "|x0| = {} exceeds the largest attainable value {}",
            x0.abs(),
            g(hi) + x0.abs()
        )));
    }
    let mut lo = f64::MIN_POSITIVE;
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinglePointReport {
    pub x0: f64,
    pub k0: f64,
    pub t0: f64,
    /// sup over |ξ| ≤ 1 and the computed τ of (|U| + √(1−τ)|∇U|)(1−τ)^{1/(p−1)}
    pub threshold: f64,
    pub u_final: f64,
    pub grad_final: f64,
    /// growth exponents in (T − t) over the trailing quarter of the slices
    pub u_exponent: f64,
    pub grad_exponent: f64,
    /// the same exponents for sup|u| and sup|∇u|
    pub sup_exponent: f64,
    pub grad_sup_exponent: f64,
    /// both local exponents below a third of their global counterparts
    pub bounded: bool,
}

pub fn single_point_check(traj: &PhysicalTrajectory, params: &ModelParams, blowup_time: f64, x0: f64, k0: f64) -> Result<SinglePointReport> {
    let gap = solve_t0_gap(x0, k0, params.beta)?;
    let t0 = blowup_time - gap;
    if !(t0 >= 0.0 && t0 < blowup_time) {
        return Err(Error::Bisection(format!("t0 = {t0} leaves [0, T)")));
    }
    let e = 1.0 / (params.p - 1.0);
    let root = gap.sqrt();
    let mut threshold: f64 = 0.0;
    let mut local = Vec::new();
    for sl in &traj.slices {
        let u = &sl.u;
        if x0.abs() + u.dy > u.half_width() {
            return Err(Error::InsufficientDomain {
                half_width: u.half_width(),
                required: x0.abs() + u.dy,
            });
        }
        let ux = u.interpolate(x0);
        let gx = gradient_at(u, x0);
        let gsup = u.gradient().iter().fold(0.0f64, |a, g| a.max(g.abs()));
        local.push((blowup_time - sl.t, ux.abs(), gx.abs(), gsup));
        let tau = (sl.t - t0) / gap;
        if !(0.0..1.0).contains(&tau) {
            continue;
        }
        let w = (1.0 - tau).powf(e);
        for k in -10..=10 {
            let xi = 0.1 * k as f64;
            let x = x0 + xi * root;
            let big_u = gap.powf(e) * u.interpolate(x);
            let grad_u = gap.powf(e) * root * gradient_at(u, x);
            threshold = threshold.max((big_u.abs() + (1.0 - tau).sqrt() * grad_u.abs()) * w);
        }
    }
    let n = local.len();
    if n < 4 {
        return Err(Error::InsufficientRange(format!("{n} slices")));
    }
    let tail = &local[n - (n / 4).max(3)..];
    let taus: Vec<f64> = tail.iter().map(|r| r.0).collect();
    let u_exponent = loglog_fit(&taus, &tail.iter().map(|r| r.1).collect::<Vec<_>>())?.slope;
    let grad_exponent = loglog_fit(&taus, &tail.iter().map(|r| r.2).collect::<Vec<_>>())?.slope;
    let grad_sup_exponent = loglog_fit(&taus, &tail.iter().map(|r| r.3).collect::<Vec<_>>())?.slope;
    let m = traj.sup.len();
    let sup_tail = &traj.sup[m - (m / 4).max(3)..];
    let sup_exponent = loglog_fit(
        &sup_tail.iter().map(|r| blowup_time - r.0).collect::<Vec<_>>(),
        &sup_tail.iter().map(|r| r.1).collect::<Vec<_>>(),
    )?
    .slope;
    Ok(SinglePointReport {
        x0,
        k0,
        t0,
        threshold,
        u_final: local[n - 1].1,
        grad_final: local[n - 1].2,
        u_exponent,
        grad_exponent,
        sup_exponent,
        grad_sup_exponent,
        bounded: u_exponent > sup_exponent / 3.0 && grad_exponent > grad_sup_exponent / 3.0,
    })
}

/// (b x²/(2|log x|)^{2β})^{−1/(p−1)}
pub fn final_profile_model(x: f64, params: &ModelParams) -> f64 {
    final_profile_argument(x, params).powf(-1.0 / (params.p - 1.0))
}

fn final_profile_argument(x: f64, params: &ModelParams) -> f64 {
    params.b * x * x / (2.0 * x.abs().ln().abs()).powf(2.0 * params.beta)
}

/// The μ = 0 law (8p|log x|/((p−1)²x²))^{1/(p−1)}.
pub fn final_profile_mu0(x: f64, p: f64) -> f64 {
    (8.0 * p * x.abs().ln().abs() / ((p - 1.0).powi(2) * x * x)).powf(1.0 / (p - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FinalProfileRow {
    pub x: f64,
    pub u: f64,
    pub model: f64,
    pub ratio: f64,
    pub mu0_model: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FinalProfile {
    pub rows: Vec<FinalProfileRow>,
    /// log u against log(bx²/(2|log x|)^{2β})
    pub fit: LineFit,
}

/// n points x = z·s^β·√(T − t(s)), z geometric on [z_lo, z_hi]: the outer part of the profile zone.
pub fn profile_zone_points(s: f64, params: &ModelParams, frame: &PhysicalFrame, z_lo: f64, z_hi: f64, n: usize) -> Vec<f64> {
    let scale = s.powf(params.beta) * frame.remaining(s).sqrt();
    geomspace(z_lo * scale, z_hi * scale, n)
}

pub fn final_profile(slice: &PhysicalSlice, xs: &[f64], params: &ModelParams) -> Result<FinalProfile> {
    let lo = xs.iter().fold(f64::INFINITY, |a, &x| a.min(x.abs()));
    let hi = xs.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if !(lo > 0.0) || hi / lo < 10.0 - 1e-9 {
        return Err(Error::InsufficientRange(format!("x range [{lo}, {hi}] spans less than a decade")));
    }
    if hi >= 1.0 || hi > slice.u.half_width() {
        return Err(Error::InsufficientRange(format!(
            "x up to {hi} must stay below 1 and within the grid half-width {}",
            slice.u.half_width()
        )));
    }
    let rows: Vec<FinalProfileRow> = xs
        .iter()
        .map(|&x| {
            let u = slice.u.interpolate(x);
            let model = final_profile_model(x, params);
            FinalProfileRow {
                x,
                u,
                model,
                ratio: u / model,
                mu0_model: final_profile_mu0(x, params.p),
            }
        })
        .collect();
    let args: Vec<f64> = xs.iter().map(|&x| final_profile_argument(x, params)).collect();
    let us: Vec<f64> = rows.iter().map(|r| r.u).collect();
    Ok(FinalProfile {
        fit: loglog_fit(&args, &us)?,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Perturbation {
    /// ε·e^{−(y−1)²}
    Bump,
    /// −ε ∂_y φ(·, s0)
    Generator,
    /// φ(y − ε, s0) − φ(y, s0)
    Translation,
}

impl Perturbation {
    pub fn name(self) -> &'static str {
        match self {
            Perturbation::Bump => "bump",
            Perturbation::Generator => "generator",
            Perturbation::Translation => "translation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftRow {
    pub kind: Perturbation,
    pub epsilon: f64,
    pub t_est: f64,
    pub a_est: f64,
    pub dt: f64,
    pub da: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct StabilitySetup {
    pub params: ModelParams,
    pub cfg: RunConfig,
    pub s0: f64,
    pub s_end: f64,
    pub frame: PhysicalFrame,
    pub estimate: EstimateOptions,
    pub snapshot_every: usize,
}

impl StabilitySetup {
    fn initial(&self, kind: Perturbation, eps: f64) -> Result<GridField> {
        let half = self.cfg.required_half_width(self.s0, &self.params);
        let n_half = (half / self.cfg.dy).ceil() as usize;
        let slice = self.params.slice(self.s0)?;
        // physical x equals y at s0 only in a frame with T − t(s0) = 1
        let stretch = self.frame.remaining(self.s0).sqrt();
        Ok(GridField::from_fn(self.s0, n_half, self.cfg.dy, |y| {
            if eps == 0.0 {
                return 0.0;
            }
            let shift = eps / stretch;
            match kind {
                Perturbation::Bump => eps * (-(y - 1.0).powi(2)).exp(),
                Perturbation::Generator => -shift * slice.at(y).dy,
                Perturbation::Translation => slice.phi(y - shift) - slice.phi(y),
            }
        }))
    }

    pub fn run_estimate(&self, kind: Perturbation, eps: f64) -> Result<BlowupEstimate> {
        let v0 = self.initial(kind, eps)?;
        let run = record_run(v0, self.s0, self.s_end, &self.params, &self.cfg, self.snapshot_every)?;
        let traj = PhysicalTrajectory::from_run(&run, &self.params, self.frame);
        estimate_blowup(&traj, &self.params, &self.estimate)
    }
}

/// Drift of (T, a) against the unperturbed run, for each kind and ε.
pub fn stability_experiment(setup: &StabilitySetup, kinds: &[Perturbation], eps: &[f64]) -> Result<(BlowupEstimate, Vec<DriftRow>)> {
    let base = setup.run_estimate(Perturbation::Bump, 0.0)?;
    let jobs: Vec<(Perturbation, f64)> = kinds.iter().flat_map(|&k| eps.iter().map(move |&e| (k, e))).collect();
    let rows: Vec<Result<DriftRow>> = jobs
        .par_iter()
        .map(|&(kind, epsilon)| {
            let est = setup.run_estimate(kind, epsilon)?;
            Ok(DriftRow {
                kind,
                epsilon,
                t_est: est.t_est,
                a_est: est.a_est,
                dt: (est.t_est - base.t_est).abs(),
                da: (est.a_est - base.a_est).abs(),
            })
        })
        .collect();
    Ok((base, rows.into_iter().collect::<Result<Vec<_>>>()?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monitor::gamma_ceiling;
    use approx::assert_relative_eq;

    fn p5() -> ModelParams {
        ModelParams::new(5.0, 1.0, 6.0).unwrap()
    }

    fn ode_trajectory(t_blow: f64, shift: f64, m: &ModelParams) -> PhysicalTrajectory {
        let frame = PhysicalFrame::normalized(0.0);
        let ts: Vec<f64> = (0..200).map(|i| t_blow * (1.0 - (-(i as f64) * 0.04).exp())).collect();
        let sup = ts.iter().map(|&t| (t, m.kappa * (t_blow - t).powf(-0.25))).collect();
        let last = *ts.last().unwrap();
        let amp = m.kappa * (t_blow - last).powf(-0.25);
        let u = GridField::from_fn(last, 400, 0.01, |x| amp * (-(x - shift).powi(2)).exp());
        PhysicalTrajectory {
            frame,
            sup,
            slices: vec![PhysicalSlice { t: last, u }],
        }
    }

    #[test]
    fn ode_data_recovers_time_and_rate() {
        let m = p5();
        let est = estimate_blowup(&ode_trajectory(0.7, 0.0, &m), &m, &EstimateOptions::default()).unwrap();
        assert_relative_eq!(est.t_est, 0.7, epsilon = 1e-10);
        assert_relative_eq!(est.rate_exponent, -0.25, epsilon = 1e-8);
        assert!(est.a_est.abs() < 1e-12);
        let shifted = estimate_blowup(&ode_trajectory(0.7, 0.3, &m), &m, &EstimateOptions::default()).unwrap();
        assert!((shifted.a_est - 0.3).abs() < 0.01);
    }

    #[test]
    fn profile_error_of_phi_is_the_shift() {
        let m = p5();
        let s = 30.0;
        let slice = m.slice(s).unwrap();
        let w = GridField::from_fn(s, 2000, 0.1, |y| slice.phi(y));
        let e = profile_convergence_error(&w, s, &m);
        assert_relative_eq!(e.sup, m.a / s.powf(1.5), max_relative = 1e-12);
        assert!(e.grad_sup < 1e-12);
        assert_relative_eq!(e.predicted_order, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn alpha_window() {
        let m = p5();
        assert_relative_eq!(alpha_ceiling(&m, 2.45), 0.475, epsilon = 1e-12);
        assert!(gradient_blowup_diagnostic(&[], &m, 0.6, 2.45).is_err());
        assert!(matches!(
            gradient_blowup_diagnostic(&[], &m, 0.0, 2.45),
            Err(Error::AlphaWindow { .. })
        ));
        assert!(alpha_ceiling(&m, gamma_ceiling(m.beta)) > 0.0);
    }

    #[test]
    fn gradient_of_phi_limit() {
        // d_yφ(s^α, s)·s^{2β−α} → −2bκ/(p−1)² (here at large s)
        let m = p5();
        let s: f64 = 1e8;
        let alpha = 0.2;
        let d = m.derivatives(s.powf(alpha), s).unwrap();
        let scaled = d.dy * s.powf(2.0 * m.beta - alpha);
        assert_relative_eq!(scaled, -2.0 * m.b * m.kappa / 16.0, max_relative = 1e-3);
    }

    #[test]
    fn t0_bisection() {
        let b = 0.75;
        let tau = solve_t0_gap(0.1, 10.0, b).unwrap();
        assert!((10.0 * tau.sqrt() * (-tau.ln()).powf(b) - 0.1).abs() <= 1e-10);
        assert!(matches!(solve_t0_gap(0.0, 10.0, b), Err(Error::ZeroPoint)));
        assert!(matches!(solve_t0_gap(5.0, 1.0, b), Err(Error::Bisection(_))));
    }

    #[test]
    fn final_profile_self_fit() {
        let m = p5();
        let xs: Vec<f64> = crate::fit::geomspace(1e-4, 1e-3, 12);
        let u = GridField::from_fn(0.0, 12000, 1e-7, |x| if x == 0.0 { 0.0 } else { final_profile_model(x, &m) });
        let slice = PhysicalSlice { t: 0.0, u };
        let xs: Vec<f64> = xs.into_iter().map(|x| (x / 1e-7).round() * 1e-7).collect();
        let fp = final_profile(&slice, &xs, &m).unwrap();
        assert_relative_eq!(fp.fit.slope, -0.25, epsilon = 1e-9);
        // the μ = 0 law falls below near zero
        let r: Vec<f64> = fp.rows.iter().map(|r| r.model / r.mu0_model).collect();
        assert!(r.windows(2).all(|w| w[0] > w[1]));
        assert!(final_profile(&slice, &[1e-4, 5e-4], &m).is_err());
    }
}
