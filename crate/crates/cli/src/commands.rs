//! One function per subcommand; each writes its files into the output directory.

use std::fs;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use critblow::analysis::{
    estimate_blowup, final_profile, gradient_blowup_diagnostic, profile_convergence_error,
    profile_error_with_exponent, profile_zone_points, single_point_check, stability_experiment, EstimateOptions,
    Perturbation, StabilitySetup,
};
use critblow::monitor::{inner_constant_b, minimal_trap_size, mode_ode_residuals, row_membership};
use critblow::params::gaussian_abs_moment;
use critblow::semigroup::{eigenaction_table, semigroup_law_error};
use critblow::shooting::{initial_psi, topological_search, SearchSetup};
use critblow::solver::{run_indexed, total_field, Observer, PhysicalFrame, Snapshot};
use critblow::spectral::{moment_table, orthogonality_table};
use critblow::{GridField, PhysicalTrajectory, Quadrature, RecordedRun, TimeRow};
use serde::Serialize;
use serde_json::json;

use crate::config::Config;
use crate::error::CliError;
use crate::output::{fmt_f64, Cell, OutputDir};

const TIMESERIES: &str = "timeseries.csv";
const SNAPSHOTS: &str = "snapshots.csv";
const CHECKPOINT: &str = "checkpoint.csv";
const TIMESERIES_HEADER: [&str; 10] = [
    "index",
    "s",
    "v0",
    "v1",
    "v2",
    "norm_minus_weighted",
    "norm_e",
    "sup",
    "center",
    "w_sup",
];

pub fn constants(cfg: &Config, out: &OutputDir) -> Result<String, CliError> {
    let m = &cfg.params;
    let closed = gaussian_abs_moment(m.q);
    let pairs: Vec<(&str, String)> = vec![
        ("p", fmt_f64(m.p)),
        ("mu", fmt_f64(m.mu)),
        ("N", m.dim.to_string()),
        ("q", fmt_f64(m.q)),
        ("beta", fmt_f64(m.beta)),
        ("kappa", fmt_f64(m.kappa)),
        ("b", fmt_f64(m.b)),
        ("a", fmt_f64(m.a)),
        ("K", fmt_f64(m.k_trunc)),
        ("q_moment", fmt_f64(m.q_moment)),
        ("q_moment_closed_form", fmt_f64(closed)),
        ("q_moment_relative_error", fmt_f64((m.q_moment - closed).abs() / closed)),
        ("two_beta_q_minus_1", fmt_f64(2.0 * m.beta * (m.q - 1.0))),
        ("B_inner", fmt_f64(inner_constant_b(m))),
        ("A", fmt_f64(cfg.shrink.a)),
        ("gamma", fmt_f64(cfg.shrink.gamma)),
        ("alpha_ceiling", fmt_f64(critblow::analysis::alpha_ceiling(m, cfg.shrink.gamma))),
    ];
    let text: String = pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    out.write_text("constants.txt", &text)?;
    Ok(text)
}

pub fn spectral_check(cfg: &Config, out: &OutputDir) -> Result<String, CliError> {
    let o = &cfg.options;
    let quad = Quadrature::gauss_hermite(o.gh_nodes);
    let orth = orthogonality_table(&quad, o.max_index);
    out.csv(
        "orthogonality.csv",
        &["n", "m", "computed", "exact", "error"],
        orth.iter()
            .map(|r| vec![r.n.into(), r.m.into(), r.computed.into(), r.exact.into(), r.error.into()]),
    )?;
    let moments = moment_table(&quad, &o.moment_ps);
    out.csv(
        "moments.csv",
        &["name", "p", "computed", "exact", "error"],
        moments.iter().map(|r| {
            vec![
                r.name.as_str().into(),
                r.p.into(),
                r.computed.into(),
                r.exact.into(),
                r.error.into(),
            ]
        }),
    )?;
    let max_orth = orth.iter().fold(0.0f64, |a, r| a.max(r.error));
    let max_moment = moments.iter().fold(0.0f64, |a, r| a.max(r.error));
    out.json(
        "summary.json",
        &json!({ "nodes": o.gh_nodes, "max_orthogonality_error": max_orth, "max_moment_error": max_moment }),
    )?;
    Ok(format!(
        "max orthogonality error {}\nmax moment error {}\n",
        fmt_f64(max_orth),
        fmt_f64(max_moment)
    ))
}

pub fn semigroup_check(cfg: &Config, out: &OutputDir) -> Result<String, CliError> {
    let rows = eigenaction_table(&[0, 1, 2, 3, 4], &cfg.options.thetas)?;
    out.csv(
        "eigenaction.csv",
        &["m", "theta", "rel_err"],
        rows.iter().map(|r| vec![r.m.into(), r.theta.into(), r.rel_err.into()]),
    )?;
    let pairs = [(0.6, 0.4), (0.1, 1.0), (1.0, 2.0)];
    let law = pairs
        .iter()
        .map(|&(a, b)| Ok((a, b, semigroup_law_error(a, b)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    out.csv(
        "semigroup_law.csv",
        &["theta1", "theta2", "error"],
        law.iter().map(|&(a, b, e)| vec![a.into(), b.into(), e.into()]),
    )?;
    let max_eigen = rows.iter().fold(0.0f64, |a, r| a.max(r.rel_err));
    let max_law = law.iter().fold(0.0f64, |a, r| a.max(r.2));
    out.json(
        "summary.json",
        &json!({ "max_eigenaction_error": max_eigen, "max_law_error": max_law }),
    )?;
    Ok(format!(
        "max eigenaction error {}\nmax semigroup-law error {}\n",
        fmt_f64(max_eigen),
        fmt_f64(max_law)
    ))
}

pub fn residual_study(cfg: &Config, out: &OutputDir) -> Result<String, CliError> {
    let o = &cfg.options;
    let st = critblow::linearization::residual_study(&cfg.params, o.s_lo, o.s_hi, o.points, o.b_factor, cfg.run.cutoff)?;
    out.csv(
        "residuals.csv",
        &["s", "r0", "r1", "r2", "r0_scaled", "r2_scaled", "r2_variant", "r2_variant_scaled"],
        st.rows.iter().map(|r| {
            vec![
                r.s.into(),
                r.r0.into(),
                r.r1.into(),
                r.r2.into(),
                r.r0_scaled.into(),
                r.r2_scaled.into(),
                r.r2_variant.into(),
                r.r2_variant_scaled.into(),
            ]
        }),
    )?;
    let b = cfg.params.beta;
    out.json(
        "summary.json",
        &json!({
            "b_factor": st.b_factor,
            "slope_r0": st.slope_r0,
            "slope_r2": st.slope_r2,
            "slope_r2_variant": st.slope_r2_variant,
            "max_r1": st.max_r1,
            "reference_r0": -(2.0 * b + 1.0),
            "reference_r2": -4.0 * b,
            "reference_r2_variant": -(2.0 * b + 1.0),
        }),
    )?;
    Ok(format!(
        "slope R0 {}\nslope R2 {}\nslope R2 (b x {}) {}\nmax |R1| {}\n",
        fmt_f64(st.slope_r0.slope),
        fmt_f64(st.slope_r2.slope),
        st.b_factor,
        fmt_f64(st.slope_r2_variant.slope),
        fmt_f64(st.max_r1)
    ))
}

fn timeseries_cells(index: usize, r: &TimeRow, w_sup: f64) -> Vec<Cell> {
    vec![
        index.into(),
        r.s.into(),
        r.v0.into(),
        r.v1.into(),
        r.v2.into(),
        r.norm_minus_weighted.into(),
        r.norm_e.into(),
        r.sup.into(),
        r.center.into(),
        w_sup.into(),
    ]
}

fn field_csv(field: &GridField, second: Option<&GridField>, header: &str) -> String {
    let mut s = format!("{header}\n");
    for j in 0..field.len() {
        s.push_str(&fmt_f64(field.y(j)));
        s.push(',');
        s.push_str(&fmt_f64(field.values[j]));
        if let Some(g) = second {
            s.push(',');
            s.push_str(&fmt_f64(g.values[j]));
        }
        s.push('\n');
    }
    s
}

fn snapshot_name(index: usize) -> String {
    format!("snapshots/w_{index:06}.csv")
}

/// Streams rows to memory, snapshots and checkpoints to disk.
struct SimWriter<'a> {
    cfg: &'a Config,
    out: &'a OutputDir,
    offset: usize,
    rows: Vec<(usize, TimeRow, f64)>,
    snaps: Vec<(usize, f64)>,
    error: Option<CliError>,
}

impl SimWriter<'_> {
    fn flush_series(&self) -> Result<(), CliError> {
        self.out.csv(
            TIMESERIES,
            &TIMESERIES_HEADER,
            self.rows.iter().map(|(i, r, w)| timeseries_cells(*i, r, *w)),
        )?;
        self.out.csv(
            SNAPSHOTS,
            &["index", "s", "file"],
            self.snaps
                .iter()
                .map(|&(i, s)| vec![i.into(), s.into(), snapshot_name(i).as_str().into()]),
        )
    }
}

impl Observer for SimWriter<'_> {
    fn observe(&mut self, snap: &Snapshot<'_>) -> critblow::Result<ControlFlow<()>> {
        let index = snap.index;
        if index == self.offset && self.offset > 0 {
            // the resumed starting point is already on record
            return Ok(ControlFlow::Continue(()));
        }
        let m = snap.modes;
        let row = TimeRow {
            s: snap.s,
            v0: m.v0,
            v1: m.v1,
            v2: m.v2,
            norm_minus_weighted: m.norm_minus_weighted,
            norm_e: m.norm_e,
            sup: snap.sup,
            center: snap.v.center(),
        };
        let w = total_field(snap.v, &self.cfg.params, self.cfg.run.background)?;
        self.rows.push((index, row, w.sup_norm()));
        let every = self.cfg.options.snapshot_every;
        if every > 0 && index % every == 0 {
            let res = self
                .out
                .write_text(&snapshot_name(index), &field_csv(&w, None, "y,w"))
                .and_then(|_| {
                    self.snaps.push((index, snap.s));
                    self.flush_series()
                })
                .and_then(|_| {
                    self.out.write_text(
                        CHECKPOINT,
                        &format!("# index={index}\n{}", field_csv(snap.v, None, "y,v")),
                    )
                });
            if let Err(e) = res {
                self.error = Some(e);
                return Ok(ControlFlow::Break(()));
            }
        }
        Ok(ControlFlow::Continue(()))
    }
}

/// Reads a headed numeric CSV into columns by name.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    path: PathBuf,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| CliError::Input {
                path: path.into(),
                msg: "empty file".into(),
            })?
            .split(',')
            .map(str::to_string)
            .collect();
        let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
        if let Some(k) = rows.iter().position(|r| r.len() != header.len()) {
            return Err(CliError::Input {
                path: path.into(),
                msg: format!("row {} has {} fields, expected {}", k + 1, rows[k].len(), header.len()),
            });
        }
        Ok(Self {
            header,
            rows,
            path: path.into(),
        })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let c = self.header.iter().position(|h| h == name).ok_or_else(|| CliError::Input {
            path: self.path.clone(),
            msg: format!("missing column '{name}'"),
        })?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r[c].parse::<f64>().map_err(|_| CliError::Input {
                    path: self.path.clone(),
                    msg: format!("row {}: '{}' is not a number", i + 1, r[c]),
                })
            })
            .collect()
    }

    pub fn text_column(&self, name: &str) -> Result<Vec<String>, CliError> {
        let c = self.header.iter().position(|h| h == name).ok_or_else(|| CliError::Input {
            path: self.path.clone(),
            msg: format!("missing column '{name}'"),
        })?;
        Ok(self.rows.iter().map(|r| r[c].clone()).collect())
    }
}

fn read_field(path: &Path, s: f64) -> Result<GridField, CliError> {
    let t = Table::read(path)?;
    let ys = t.column("y")?;
    let vs = t.column(&t.header[1].clone())?;
    let n = ys.len();
    if n < 3 || n % 2 == 0 {
        return Err(CliError::Input {
            path: path.into(),
            msg: format!("{n} nodes do not form a symmetric grid"),
        });
    }
    let n_half = (n - 1) / 2;
    let dy = ys[n_half + 1] - ys[n_half];
    if !(dy > 0.0) || ys[n_half] != 0.0 {
        return Err(CliError::Input {
            path: path.into(),
            msg: "grid is not centred at y = 0".into(),
        });
    }
    Ok(GridField {
        s,
        n_half,
        dy,
        values: vs,
    })
}

fn read_series(dir: &Path) -> Result<(Vec<usize>, Vec<TimeRow>, Vec<f64>), CliError> {
    let t = Table::read(&dir.join(TIMESERIES))?;
    let col = |n: &str| t.column(n);
    let idx: Vec<usize> = col("index")?.into_iter().map(|x| x as usize).collect();
    let (s, v0, v1, v2, nm, ne, sup, center, w_sup) = (
        col("s")?,
        col("v0")?,
        col("v1")?,
        col("v2")?,
        col("norm_minus_weighted")?,
        col("norm_e")?,
        col("sup")?,
        col("center")?,
        col("w_sup")?,
    );
    let rows = (0..s.len())
        .map(|i| TimeRow {
            s: s[i],
            v0: v0[i],
            v1: v1[i],
            v2: v2[i],
            norm_minus_weighted: nm[i],
            norm_e: ne[i],
            sup: sup[i],
            center: center[i],
        })
        .collect();
    Ok((idx, rows, w_sup))
}

/// Loads a directory written by `simulate`.
pub fn load_trajectory(dir: &Path) -> Result<RecordedRun, CliError> {
    let (_, rows, w_sup) = read_series(dir)?;
    let snaps = Table::read(&dir.join(SNAPSHOTS))?;
    let ss = snaps.column("s")?;
    let files = snaps.text_column("file")?;
    let fields = ss
        .iter()
        .zip(&files)
        .map(|(&s, f)| read_field(&dir.join(f), s))
        .collect::<Result<Vec<_>, _>>()?;
    let summary_path = dir.join("summary.json");
    let diverged_at = fs::read_to_string(&summary_path)
        .ok()
        .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
        .and_then(|v| v.get("diverged_at").and_then(|d| d.as_f64()));
    Ok(RecordedRun {
        w_sup: rows.iter().zip(&w_sup).map(|(r, &w)| (r.s, w)).collect(),
        rows,
        fields,
        diverged_at,
    })
}

pub fn simulate(cfg: &Config, out: &OutputDir, resume: bool) -> Result<String, CliError> {
    let o = &cfg.options;
    let params = &cfg.params;
    let mut writer = SimWriter {
        cfg,
        out,
        offset: 0,
        rows: Vec::new(),
        snaps: Vec::new(),
        error: None,
    };
    let ckpt = out.path(CHECKPOINT);
    let (v0, start) = if resume && ckpt.exists() {
        let text = fs::read_to_string(&ckpt).map_err(|e| CliError::io(&ckpt, e))?;
        let index: usize = text
            .lines()
            .next()
            .and_then(|l| l.strip_prefix("# index="))
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| CliError::Input {
                path: ckpt.clone(),
                msg: "missing '# index=' line".into(),
            })?;
        let (idx, rows, w_sup) = read_series(out.root.as_path())?;
        let snaps = Table::read(&out.path(SNAPSHOTS))?;
        let keep = idx.iter().position(|&i| i == index).ok_or_else(|| CliError::Input {
            path: out.path(TIMESERIES),
            msg: format!("checkpoint index {index} not in the time series"),
        })?;
        writer.rows = (0..=keep).map(|k| (idx[k], rows[k], w_sup[k])).collect();
        writer.snaps = snaps
            .column("index")?
            .into_iter()
            .zip(snaps.column("s")?)
            .map(|(i, s)| (i as usize, s))
            .filter(|&(i, _)| i <= index)
            .collect();
        writer.offset = index;
        let s = o.s0 + index as f64 * cfg.run.cadence;
        (read_field(&ckpt, s)?, index)
    } else {
        (initial_psi(o.d0, o.d1, o.s0, cfg.shrink.a, params, &cfg.run)?, 0)
    };
    let mut diverged_at = None;
    if o.s_end - (o.s0 + start as f64 * cfg.run.cadence) > 0.5 * cfg.run.cadence {
        match run_indexed(v0, o.s0, start, o.s_end, params, &cfg.run, &mut [&mut writer], None) {
            Ok(_) => {}
            Err(critblow::Error::Divergence { s, .. }) => diverged_at = Some(s),
            Err(e) => return Err(e.into()),
        }
    }
    if let Some(e) = writer.error.take() {
        return Err(e);
    }
    writer.flush_series()?;
    let last = writer.rows.last().map(|r| r.1);
    out.json(
        "summary.json",
        &json!({
            "d0": o.d0,
            "d1": o.d1,
            "s0": o.s0,
            "s_end": o.s_end,
            "outputs": writer.rows.len(),
            "diverged_at": diverged_at,
            "final": last,
            "resumed_from": if writer.offset > 0 { Some(writer.offset) } else { None },
        }),
    )?;
    Ok(format!(
        "{} outputs, last s {}{}\n",
        writer.rows.len(),
        last.map(|r| fmt_f64(r.s)).unwrap_or_default(),
        diverged_at.map(|s| format!(", guard crossed at s {}", fmt_f64(s))).unwrap_or_default()
    ))
}

fn trajectory_dir(cfg: &Config) -> Result<&Path, CliError> {
    cfg.options.trajectory.as_deref().ok_or_else(|| CliError::Config {
        line: None,
        msg: "this command needs trajectory=DIR (a simulate output directory)".into(),
    })
}

pub fn monitor(cfg: &Config, out: &OutputDir) -> Result<String, CliError> {
    let dir = trajectory_dir(cfg)?;
    let (_, rows, _) = read_series(dir)?;
    let residuals = mode_ode_residuals(&rows, &cfg.params)?;
    let mut first_exit = None;
    let table: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            let rep = row_membership(r, &cfg.shrink);
            if first_exit.is_none() {
                if let Some(c) = rep.first_violation() {
                    first_exit = Some((r.s, c.name()));
                }
            }
            let res = residuals.iter().find(|p| p.s == r.s);
            let mut cells: Vec<Cell> = vec![r.s.into()];
            cells.extend(rep.slack.iter().map(|&x| Cell::F(x)));
            cells.push(res.map(|p| p.r0).into());
            cells.push(res.map(|p| p.r1).into());
            cells.push(res.map(|p| p.r2).into());
            cells
        })
        .collect();
    out.csv(
        "monitor.csv",
        &["s", "slack_e", "slack_minus", "slack_0", "slack_1", "slack_2", "r0", "r1", "r2"],
        table,
    )?;
    let sup = |f: fn(&critblow::monitor::ResidualPoint) -> f64| residuals.iter().map(f).fold(0.0f64, f64::max);
    let (r0, r1, r2) = (sup(|p| p.r0), sup(|p| p.r1), sup(|p| p.r2));
    let trap = minimal_trap_size(&rows, &cfg.params, cfg.shrink.gamma);
    out.json(
        "summary.json",
        &json!({
            "rows": rows.len(),
            "first_exit_s": first_exit.map(|e| e.0),
            "first_exit_component": first_exit.map(|e| e.1),
            "minimal_trap_size": trap,
            "sup_r0": r0,
            "sup_r1": r1,
            "sup_r2": r2,
        }),
    )?;
    Ok(match first_exit {
        Some((s, c)) => format!("leaves V_A at s {} through {c}\n", fmt_f64(s)),
        None => "stays in V_A over the whole series\n".into(),
    } + &format!("sup scaled residuals {} {} {}\n", fmt_f64(r0), fmt_f64(r1), fmt_f64(r2)))
}

#[derive(Serialize)]
struct ProfileRowOut {
    s: f64,
    sup: f64,
    grad_sup: f64,
    wrong_beta_sup: f64,
}

pub fn analyze(cfg: &Config, out: &OutputDir) -> Result<String, CliError> {
    let dir = trajectory_dir(cfg)?;
    let run = load_trajectory(dir)?;
    let params = &cfg.params;
    let o = &cfg.options;
    let s0 = run.rows.first().map(|r| r.s).ok_or_else(|| CliError::Input {
        path: dir.join(TIMESERIES),
        msg: "empty time series".into(),
    })?;
    let profile: Vec<ProfileRowOut> = run
        .fields
        .iter()
        .map(|w| {
            let e = profile_convergence_error(w, w.s, params);
            let wb = profile_error_with_exponent(w, w.s, params, 0.5);
            ProfileRowOut {
                s: w.s,
                sup: e.sup,
                grad_sup: e.grad_sup,
                wrong_beta_sup: wb.sup,
            }
        })
        .collect();
    out.csv(
        "profile.csv",
        &["s", "sup_error", "grad_sup_error", "wrong_beta_sup_error"],
        profile
            .iter()
            .map(|r| vec![r.s.into(), r.sup.into(), r.grad_sup.into(), r.wrong_beta_sup.into()]),
    )?;
    let opts = EstimateOptions {
        tail_fraction: o.tail_fraction,
        ..EstimateOptions::default()
    };
    let normalized = PhysicalTrajectory::from_run(&run, params, PhysicalFrame::normalized(s0));
    let estimate = estimate_blowup(&normalized, params, &opts)?;
    let point = single_point_check(&normalized, params, estimate.t_est, o.x0, o.k0)?;
    let native = PhysicalTrajectory::from_run(&run, params, PhysicalFrame::native(s0));
    let last = native.slices.last().ok_or_else(|| CliError::Input {
        path: dir.join(SNAPSHOTS),
        msg: "no snapshots".into(),
    })?;
    let s_last = run.fields.last().map(|w| w.s).unwrap_or(s0);
    let xs = profile_zone_points(s_last, params, &native.frame, o.z_lo, o.z_hi, 12);
    let fp = final_profile(last, &xs, params)?;
    out.csv(
        "final_profile.csv",
        &["x", "u", "model", "ratio", "mu0_model"],
        fp.rows
            .iter()
            .map(|r| vec![r.x.into(), r.u.into(), r.model.into(), r.ratio.into(), r.mu0_model.into()]),
    )?;
    let grad = gradient_blowup_diagnostic(&run.fields, params, o.alpha, cfg.shrink.gamma)?;
    out.csv(
        "gradient.csv",
        &["s", "y", "grad", "scaled"],
        grad.points
            .iter()
            .map(|p| vec![p.s.into(), p.y.into(), p.grad.into(), p.scaled.into()]),
    )?;
    let center = run.fields.last().map(|w| w.center() / params.kappa);
    out.json(
        "summary.json",
        &json!({
            "s0": s0,
            "s_last": s_last,
            "center_over_kappa": center,
            "blowup": estimate,
            "reference_rate": -1.0 / (params.p - 1.0),
            "final_profile_slope": fp.fit,
            "gradient": { "alpha": grad.alpha, "fit": grad.fit, "expected_exponent": grad.expected_exponent },
            "single_point": point,
        }),
    )?;
    Ok(format!(
        "T {} (normalized frame), rate exponent {}\nfinal-profile slope {}\ngradient exponent {} (reference {})\nsingle point x0={}: bounded={}\n",
        fmt_f64(estimate.t_est),
        fmt_f64(estimate.rate_exponent),
        fmt_f64(fp.fit.slope),
        fmt_f64(grad.fit.slope),
        fmt_f64(grad.expected_exponent),
        o.x0,
        point.bounded
    ))
}

pub fn shoot(cfg: &Config, out: &OutputDir) -> Result<String, CliError> {
    let o = &cfg.options;
    let setup = SearchSetup {
        s0: o.s0,
        window: o.window,
        shrink: cfg.shrink,
        depth: o.depth,
    };
    let rep = topological_search(&setup, &cfg.params, &cfg.run)?;
    out.csv(
        "levels.csv",
        &[
            "level",
            "d0_lo",
            "d0_hi",
            "d1_lo",
            "d1_hi",
            "stencil_best_d0",
            "stencil_best_d1",
            "stencil_window",
            "best_window",
            "new_shots",
        ],
        rep.log.iter().map(|l| {
            vec![
                l.level.into(),
                l.rect[0].into(),
                l.rect[1].into(),
                l.rect[2].into(),
                l.rect[3].into(),
                l.stencil_best.0.into(),
                l.stencil_best.1.into(),
                l.stencil_window.into(),
                l.best_window.into(),
                l.new_shots.into(),
            ]
        }),
    )?;
    out.csv(
        "shots.csv",
        &[
            "d0",
            "d1",
            "s_exit",
            "exit",
            "v0_scaled",
            "v1_scaled",
            "sign0",
            "sign1",
            "confined_window",
            "transverse",
        ],
        rep.shots.iter().map(|s| {
            vec![
                s.d0.into(),
                s.d1.into(),
                s.s_exit.into(),
                s.exit_component.map_or("none", |e| e.name()).into(),
                s.exit_scaled.0.into(),
                s.exit_scaled.1.into(),
                s.exit_signs.0.into(),
                s.exit_signs.1.into(),
                s.confined_window.into(),
                s.transverse.into(),
            ]
        }),
    )?;
    out.csv(
        "accepted_timeseries.csv",
        &TIMESERIES_HEADER[..9],
        rep.accepted.rows.iter().enumerate().map(|(i, r)| {
            let mut c = timeseries_cells(i, r, 0.0);
            c.pop();
            c
        }),
    )?;
    out.json(
        "summary.json",
        &json!({
            "d0": rep.d0,
            "d1": rep.d1,
            "final_rect": rep.final_rect,
            "accepted": rep.accepted,
            "shots": rep.shots.len(),
            "windows": rep.windows(),
        }),
    )?;
    Ok(format!(
        "d0 {} d1 {}\nconfined for {} of {}\n{} shots\n",
        fmt_f64(rep.d0),
        fmt_f64(rep.d1),
        fmt_f64(rep.accepted.confined_window),
        o.window,
        rep.shots.len()
    ))
}

pub fn stability(cfg: &Config, out: &OutputDir) -> Result<String, CliError> {
    let o = &cfg.options;
    let setup = StabilitySetup {
        params: cfg.params,
        cfg: cfg.run,
        s0: o.s0,
        s_end: o.s_end,
        frame: PhysicalFrame::normalized(o.s0),
        estimate: EstimateOptions {
            tail_fraction: o.tail_fraction,
            ..EstimateOptions::default()
        },
        // the point estimate reads the last slice, so keep every output
        snapshot_every: 1,
    };
    let kinds = [Perturbation::Bump, Perturbation::Generator, Perturbation::Translation];
    let (base, rows) = stability_experiment(&setup, &kinds, &o.epsilons)?;
    out.csv(
        "drift.csv",
        &["kind", "epsilon", "t_est", "a_est", "dT", "da"],
        rows.iter().map(|r| {
            vec![
                r.kind.name().into(),
                r.epsilon.into(),
                r.t_est.into(),
                r.a_est.into(),
                r.dt.into(),
                r.da.into(),
            ]
        }),
    )?;
    out.json("summary.json", &json!({ "base": base, "rows": rows.len() }))?;
    Ok(format!(
        "base T {} a {}\n{} perturbed runs\n",
        fmt_f64(base.t_est),
        fmt_f64(base.a_est),
        rows.len()
    ))
}
