//! Two-parameter initial data and the quadrant-subdivision shooting search.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::monitor::{membership_from, Component, ShrinkParams};
use crate::params::ModelParams;
use crate::solver::{run, Observer, RunConfig, Snapshot, TimeRow};
use crate::spectral::truncation_chi;

/// Outputs recorded past an exit, for differentiating the exiting mode.
const EXTRA_OUTPUTS: usize = 2;

/// ψ(y) = (A/s₀^{2β+1})(d₀h₀ + d₁h₁)χ(2y, s₀) on a grid of the configured policy width.
pub fn initial_psi(d0: f64, d1: f64, s0: f64, a: f64, params: &ModelParams, cfg: &RunConfig) -> Result<GridField> {
    if !(s0 > 0.0) {
        return Err(Error::NonPositiveTime(s0));
    }
    let half = cfg.required_half_width(s0, params);
    let support = params.k_trunc * s0.powf(params.beta);
    if half < support {
        return Err(Error::InsufficientDomain {
            half_width: half,
            required: support,
        });
    }
    let amp = a / s0.powf(2.0 * params.beta + 1.0);
    let n_half = (half / cfg.dy).ceil() as usize;
    Ok(GridField::from_fn(s0, n_half, cfg.dy, |y| {
        amp * (d0 + d1 * y) * truncation_chi(y, s0, params, true, cfg.cutoff)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ExitKind {
    Bound(Component),
    BlowupGuard,
}

impl ExitKind {
    pub fn name(self) -> &'static str {
        match self {
            ExitKind::Bound(c) => c.name(),
            ExitKind::BlowupGuard => "blowup-guard",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ShotResult {
    pub d0: f64,
    pub d1: f64,
    pub s0: f64,
    /// First output time outside V_A(s), or the window end.
    pub s_exit: f64,
    pub exit_component: Option<ExitKind>,
    /// (v₀, v₁)·s^{2β+1}/A at exit (at the window end if confined).
    pub exit_scaled: (f64, f64),
    pub exit_signs: (i8, i8),
    pub confined_window: f64,
    /// ω v_m'(s_exit)·s^{2β+1}/A for exits through mode 0 or 1.
    pub transverse: Option<f64>,
    #[serde(skip)]
    pub rows: Vec<TimeRow>,
}

impl ShotResult {
    pub fn confined(&self) -> bool {
        self.exit_component.is_none()
    }
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

struct ShotMonitor {
    shrink: ShrinkParams,
    s_end: f64,
    cadence: f64,
    rows: Vec<TimeRow>,
    exit: Option<(usize, Component)>,
}

impl Observer for ShotMonitor {
    fn observe(&mut self, snap: &Snapshot<'_>) -> Result<ControlFlow<()>> {
        let m = snap.modes;
        self.rows.push(TimeRow {
            s: snap.s,
            v0: m.v0,
            v1: m.v1,
            v2: m.v2,
            norm_minus_weighted: m.norm_minus_weighted,
            norm_e: m.norm_e,
            sup: snap.sup,
            center: snap.v.center(),
        });
        let k = self.rows.len() - 1;
        if self.exit.is_none() && snap.s <= self.s_end + 0.5 * self.cadence {
            let q = [m.norm_e, m.norm_minus_weighted, m.v0.abs(), m.v1.abs(), m.v2.abs()];
            if let Some(c) = membership_from(q, &self.shrink, snap.s).first_violation() {
                self.exit = Some((k, c));
            }
        }
        match self.exit {
            Some((e, _)) if k >= e + EXTRA_OUTPUTS => Ok(ControlFlow::Break(())),
            _ => Ok(ControlFlow::Continue(())),
        }
    }
}

fn mode_value(r: &TimeRow, m: usize) -> f64 {
    if m == 0 {
        r.v0
    } else {
        r.v1
    }
}

fn transverse_rate(rows: &[TimeRow], k: usize, m: usize) -> Option<f64> {
    let here = mode_value(&rows[k], m);
    let d = match (k.checked_sub(1), rows.get(k + 1)) {
        (Some(a), Some(b)) => (mode_value(b, m) - mode_value(&rows[a], m)) / (b.s - rows[a].s),
        (None, Some(b)) => (mode_value(b, m) - here) / (b.s - rows[k].s),
        (Some(a), None) => (here - mode_value(&rows[a], m)) / (rows[k].s - rows[a].s),
        (None, None) => return None,
    };
    Some(f64::from(sign(here)) * d)
}

/// Runs ψ_{s₀,d₀,d₁} and reports the first exit from V_A(s) on [s₀, s₀+window].
pub fn evaluate_shot(
    d0: f64,
    d1: f64,
    s0: f64,
    window: f64,
    shrink: &ShrinkParams,
    params: &ModelParams,
    cfg: &RunConfig,
) -> Result<ShotResult> {
    if !(d0.abs() <= 2.0 && d1.abs() <= 2.0) {
        return Err(Error::ParameterOutOfRange { d0, d1 });
    }
    if !(window > 0.0) {
        return Err(Error::InvalidArgument(format!("window must be positive, got {window}")));
    }
    let psi = initial_psi(d0, d1, s0, shrink.a, params, cfg)?;
    let s_end = s0 + window;
    let mut mon = ShotMonitor {
        shrink: *shrink,
        s_end,
        cadence: cfg.cadence,
        rows: Vec::new(),
        exit: None,
    };
    let ran = run(
        psi,
        s0,
        s_end + EXTRA_OUTPUTS as f64 * cfg.cadence,
        params,
        cfg,
        &mut [&mut mon],
    );
    let scale = |s: f64| s.powf(2.0 * params.beta + 1.0) / shrink.a;
    let guard_exit = match ran {
        Ok(_) => None,
        Err(Error::Divergence { s, .. }) => Some(s),
        Err(e) => return Err(e),
    };
    let rows = mon.rows;
    let (s_exit, kind, at, transverse) = match (mon.exit, guard_exit) {
        (Some((k, c)), _) => {
            let tr = match c {
                Component::Mode0 => transverse_rate(&rows, k, 0),
                Component::Mode1 => transverse_rate(&rows, k, 1),
                _ => None,
            }
            .map(|d| d * scale(rows[k].s));
            (rows[k].s, Some(ExitKind::Bound(c)), k, tr)
        }
        (None, Some(s)) if s <= s_end => (s, Some(ExitKind::BlowupGuard), rows.len() - 1, None),
        _ => {
            let k = rows
                .iter()
                .rposition(|r| r.s <= s_end + 0.5 * cfg.cadence)
                .unwrap_or(0);
            (s_end, None, k, None)
        }
    };
    let r = &rows[at];
    let exit_scaled = (r.v0 * scale(r.s), r.v1 * scale(r.s));
    Ok(ShotResult {
        d0,
        d1,
        s0,
        s_exit,
        exit_component: kind,
        exit_scaled,
        exit_signs: (sign(exit_scaled.0), sign(exit_scaled.1)),
        confined_window: s_exit - s0,
        transverse,
        rows,
    })
}

/// One refinement level of the search.
#[derive(Debug, Clone, Serialize)]
pub struct LevelLog {
    pub level: usize,
    /// [d0_lo, d0_hi, d1_lo, d1_hi] of the rectangle whose stencil was evaluated.
    pub rect: [f64; 4],
    /// Longest-confined shot on this level's stencil.
    pub stencil_best: (f64, f64),
    pub stencil_window: f64,
    /// Longest confinement seen so far by the search (non-decreasing by construction).
    pub best_window: f64,
    pub new_shots: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchReport {
    pub d0: f64,
    pub d1: f64,
    pub final_rect: [f64; 4],
    pub log: Vec<LevelLog>,
    /// Every distinct shot evaluated, in evaluation order.
    pub shots: Vec<ShotResult>,
    /// The shot from the returned center.
    pub accepted: ShotResult,
}

impl SearchReport {
    /// Confinement lengths per level.
    pub fn windows(&self) -> Vec<f64> {
        self.log.iter().map(|l| l.best_window).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SearchSetup {
    pub s0: f64,
    pub window: f64,
    pub shrink: ShrinkParams,
    pub depth: usize,
}

/// Does the set of sign pairs reach every quadrant? A zero sign matches both sides.
pub fn covers_quadrants(signs: &[(i8, i8)]) -> bool {
    [(1, 1), (1, -1), (-1, 1), (-1, -1)].iter().all(|&(a, b): &(i8, i8)| {
        signs
            .iter()
            .any(|&(x, y)| (x == 0 || x == a) && (y == 0 || y == b))
    })
}

fn key(d0: f64, d1: f64) -> (u64, u64) {
    (d0.to_bits(), d1.to_bits())
}

fn stencil_text(pts: &[[f64; 3]; 2], cache: &HashMap<(u64, u64), usize>, shots: &[ShotResult]) -> String {
    let mut out = String::new();
    for &d1 in pts[1].iter().rev() {
        for &d0 in &pts[0] {
            let r = &shots[cache[&key(d0, d1)]];
            let _ = write!(
                out,
                "({d0:+.6},{d1:+.6}) {:>12} {:+} {:+} | ",
                r.exit_component.map_or("confined", |k| k.name()),
                r.exit_signs.0,
                r.exit_signs.1
            );
        }
        out.push('\n');
    }
    out
}

/// Recursive quadrant subdivision of [−2,2]², keeping a child whose corner exit signs
/// cover all four quadrants; returns the center of the final rectangle.
pub fn topological_search(setup: &SearchSetup, params: &ModelParams, cfg: &RunConfig) -> Result<SearchReport> {
    let SearchSetup { s0, window, shrink, depth } = *setup;
    let mut rect = [-2.0, 2.0, -2.0, 2.0];
    let mut cache: HashMap<(u64, u64), usize> = HashMap::new();
    let mut shots: Vec<ShotResult> = Vec::new();
    let mut log = Vec::with_capacity(depth);
    for level in 1..=depth {
        let xs = [rect[0], 0.5 * (rect[0] + rect[1]), rect[1]];
        let ys = [rect[2], 0.5 * (rect[2] + rect[3]), rect[3]];
        let pending: Vec<(f64, f64)> = ys
            .iter()
            .flat_map(|&d1| xs.iter().map(move |&d0| (d0, d1)))
            .filter(|&(d0, d1)| !cache.contains_key(&key(d0, d1)))
            .collect();
        let fresh: Vec<Result<ShotResult>> = pending
            .par_iter()
            .map(|&(d0, d1)| evaluate_shot(d0, d1, s0, window, &shrink, params, cfg))
            .collect();
        let new_shots = fresh.len();
        for r in fresh {
            let r = r?;
            cache.insert(key(r.d0, r.d1), shots.len());
            shots.push(r);
        }
        let get = |i: usize, j: usize| &shots[cache[&key(xs[i], ys[j])]];
        let mut best = (0, 0);
        for j in 0..3 {
            for i in 0..3 {
                if get(i, j).confined_window > get(best.0, best.1).confined_window {
                    best = (i, j);
                }
            }
        }
        let best_shot = get(best.0, best.1);
        let so_far = log.last().map_or(0.0, |l: &LevelLog| l.best_window);
        log.push(LevelLog {
            level,
            rect,
            stencil_best: (best_shot.d0, best_shot.d1),
            stencil_window: best_shot.confined_window,
            best_window: so_far.max(best_shot.confined_window),
            new_shots,
        });
        // children indexed by their lower-left stencil index
        let mut chosen: Option<((usize, usize), f64, bool)> = None;
        for (ci, cj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let corners = [(ci, cj), (ci + 1, cj), (ci, cj + 1), (ci + 1, cj + 1)];
            let signs: Vec<(i8, i8)> = corners.iter().map(|&(i, j)| get(i, j).exit_signs).collect();
            if !covers_quadrants(&signs) {
                continue;
            }
            let holds_best = corners.contains(&best);
            let top = corners
                .iter()
                .map(|&(i, j)| get(i, j).confined_window)
                .fold(f64::NEG_INFINITY, f64::max);
            let better = match chosen {
                None => true,
                Some((_, t, h)) => (holds_best && !h) || (holds_best == h && top > t),
            };
            if better {
                chosen = Some(((ci, cj), top, holds_best));
            }
        }
        let Some(((ci, cj), _, _)) = chosen else {
            return Err(Error::DegreeLost {
                level,
                stencil: stencil_text(&[xs, ys], &cache, &shots),
            });
        };
        rect = [xs[ci], xs[ci + 1], ys[cj], ys[cj + 1]];
    }
    let d0 = 0.5 * (rect[0] + rect[1]);
    let d1 = 0.5 * (rect[2] + rect[3]);
    let accepted = match cache.get(&key(d0, d1)) {
        Some(&i) => shots[i].clone(),
        None => evaluate_shot(d0, d1, s0, window, &shrink, params, cfg)?,
    };
    Ok(SearchReport {
        d0,
        d1,
        final_rect: rect,
        log,
        shots,
        accepted,
    })
}
