//! Plain `key=value` run configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use critblow::monitor::ShrinkParams;
use critblow::solver::{Boundary, RunConfig};
use critblow::{CutoffShape, ModelParams};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Environment variables `CRITBLOW_<KEY>` override the file.
pub const ENV_PREFIX: &str = "CRITBLOW_";

/// Known keys with their defaults ("" = unset).
const KEYS: &[(&str, &str)] = &[
    ("p", "5"),
    ("mu", "1"),
    ("K", "6"),
    ("dy", "0.1"),
    ("dt_safety", "0.4"),
    ("eps_grad", "1e-10"),
    ("bc", "dirichlet"),
    ("domain_factor", "2.5"),
    ("cadence", "0.01"),
    ("guard", "1e8"),
    ("cutoff", "mollifier"),
    ("A", "20"),
    ("gamma_epsilon", "0.05"),
    ("s0", "15"),
    ("window", "8"),
    ("depth", "12"),
    ("d0", "0"),
    ("d1", "0"),
    ("s_end", ""),
    ("snapshot_every", "10"),
    ("gh_nodes", "256"),
    ("max_index", "8"),
    ("moment_ps", "4,5,7,9"),
    ("thetas", "0.1,1,3"),
    ("b_factor", "1.5"),
    ("s_lo", "50"),
    ("s_hi", "800"),
    ("points", "9"),
    ("alpha", "0.2"),
    ("x0", "0.5"),
    ("k0", "2"),
    ("z_lo", "1.5"),
    ("z_hi", "15"),
    ("tail_fraction", "0.25"),
    ("epsilons", "1e-2,1e-3,1e-4"),
    ("trajectory", ""),
];

/// Everything a command may need besides the three parameter groups.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommandOptions {
    pub s0: f64,
    pub window: f64,
    pub depth: usize,
    pub d0: f64,
    pub d1: f64,
    pub s_end: f64,
    pub snapshot_every: usize,
    pub gh_nodes: usize,
    pub max_index: usize,
    pub moment_ps: Vec<f64>,
    pub thetas: Vec<f64>,
    pub b_factor: f64,
    pub s_lo: f64,
    pub s_hi: f64,
    pub points: usize,
    pub alpha: f64,
    pub x0: f64,
    pub k0: f64,
    pub z_lo: f64,
    pub z_hi: f64,
    pub tail_fraction: f64,
    pub epsilons: Vec<f64>,
    pub trajectory: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Config {
    pub params: ModelParams,
    pub run: RunConfig,
    pub shrink: ShrinkParams,
    pub options: CommandOptions,
    /// Every key with its canonical value, defaults included.
    pub canonical: BTreeMap<String, String>,
}

impl Config {
    /// sha256 over the canonical `key=value` listing.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.canonical {
            h.update(format!("{k}={v}\n").as_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Where a value came from, for error messages.
#[derive(Debug, Clone)]
enum Origin {
    Default,
    Line(usize),
    Env(String),
}

impl Origin {
    fn err(&self, msg: String) -> CliError {
        match self {
            Origin::Line(n) => CliError::Config { line: Some(*n), msg },
            Origin::Env(var) => CliError::Config {
                line: None,
                msg: format!("{var}: {msg}"),
            },
            Origin::Default => CliError::Config { line: None, msg },
        }
    }
}

fn lookup_key(name: &str) -> Option<&'static str> {
    KEYS.iter().map(|(k, _)| *k).find(|k| *k == name)
}

pub fn parse_config(text: &str) -> Result<Config, CliError> {
    parse_config_with_env(text, std::iter::empty())
}

/// Parses the file, then applies `CRITBLOW_*` overrides from `env`.
pub fn parse_config_with_env(
    text: &str,
    env: impl IntoIterator<Item = (String, String)>,
) -> Result<Config, CliError> {
    let mut raw: BTreeMap<&'static str, (String, Origin)> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let line = match line.find('#') {
            Some(c) => &line[..c],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::Config {
            line: Some(n),
            msg: format!("expected key=value, got '{line}'"),
        })?;
        let k = k.trim();
        let key = lookup_key(k).ok_or_else(|| CliError::Config {
            line: Some(n),
            msg: format!("unknown key '{k}'"),
        })?;
        if raw.contains_key(key) {
            return Err(CliError::Config {
                line: Some(n),
                msg: format!("duplicate key '{k}'"),
            });
        }
        raw.insert(key, (v.trim().to_string(), Origin::Line(n)));
    }
    for (var, v) in env {
        let Some(suffix) = var.strip_prefix(ENV_PREFIX) else { continue };
        let key = KEYS
            .iter()
            .map(|(k, _)| *k)
            .find(|k| k.eq_ignore_ascii_case(suffix))
            .ok_or_else(|| CliError::Config {
                line: None,
                msg: format!("{var}: unknown key '{}'", suffix.to_ascii_lowercase()),
            })?;
        raw.insert(key, (v.trim().to_string(), Origin::Env(var.clone())));
    }
    let mut r = Reader {
        raw,
        canonical: BTreeMap::new(),
    };

    let params = ModelParams::new(r.f64("p")?, r.f64("mu")?, r.f64("K")?)?;
    let bc = r.choice("bc", Boundary::parse, "dirichlet|neumann")?;
    let cutoff = r.choice("cutoff", CutoffShape::parse, "mollifier|smoothstep")?;
    let run = RunConfig {
        dy: r.f64("dy")?,
        dt_safety: r.f64("dt_safety")?,
        eps_grad: r.f64("eps_grad")?,
        bc,
        domain_factor: r.f64("domain_factor")?,
        cadence: r.f64("cadence")?,
        guard: r.f64("guard")?,
        cutoff,
        ..RunConfig::default()
    };
    run.validate()?;
    let shrink = ShrinkParams::new(&params, r.f64("A")?, r.f64("gamma_epsilon")?)?;
    let s0 = r.f64("s0")?;
    let window = r.f64("window")?;
    let s_end = r.opt_f64("s_end")?.unwrap_or(s0 + window);
    let options = CommandOptions {
        s0,
        window,
        depth: r.usize("depth")?,
        d0: r.f64("d0")?,
        d1: r.f64("d1")?,
        s_end,
        snapshot_every: r.usize("snapshot_every")?,
        gh_nodes: r.usize("gh_nodes")?,
        max_index: r.usize("max_index")?,
        moment_ps: r.list("moment_ps")?,
        thetas: r.list("thetas")?,
        b_factor: r.f64("b_factor")?,
        s_lo: r.f64("s_lo")?,
        s_hi: r.f64("s_hi")?,
        points: r.usize("points")?,
        alpha: r.f64("alpha")?,
        x0: r.f64("x0")?,
        k0: r.f64("k0")?,
        z_lo: r.f64("z_lo")?,
        z_hi: r.f64("z_hi")?,
        tail_fraction: r.f64("tail_fraction")?,
        epsilons: r.list("epsilons")?,
        trajectory: r.string("trajectory").map(PathBuf::from),
    };
    check_options(&options, &r)?;
    Ok(Config {
        params,
        run,
        shrink,
        options,
        canonical: r.canonical,
    })
}

fn check_options(o: &CommandOptions, r: &Reader) -> Result<(), CliError> {
    let bad = |key: &str, msg: &str| Err(r.origin(key).err(format!("{key}: {msg}")));
    if !(o.s0 > 0.0) {
        return bad("s0", "must be positive");
    }
    if !(o.window > 0.0) {
        return bad("window", "must be positive");
    }
    if !(o.s_end > o.s0) {
        return bad("s_end", "must exceed s0");
    }
    if o.gh_nodes < 2 {
        return bad("gh_nodes", "needs at least 2 nodes");
    }
    if !(o.s_lo > 0.0 && o.s_hi > o.s_lo) {
        return bad("s_hi", "need 0 < s_lo < s_hi");
    }
    if o.points < 3 {
        return bad("points", "need at least 3");
    }
    if !(o.tail_fraction > 0.0 && o.tail_fraction <= 1.0) {
        return bad("tail_fraction", "must lie in (0, 1]");
    }
    if !(o.z_lo > 0.0 && o.z_hi > o.z_lo) {
        return bad("z_hi", "need 0 < z_lo < z_hi");
    }
    Ok(())
}

struct Reader {
    raw: BTreeMap<&'static str, (String, Origin)>,
    canonical: BTreeMap<String, String>,
}

impl Reader {
    fn get(&self, key: &'static str) -> (String, Origin) {
        match self.raw.get(key) {
            Some((v, o)) => (v.clone(), o.clone()),
            None => {
                let d = KEYS.iter().find(|(k, _)| *k == key).map(|(_, d)| *d).unwrap_or("");
                (d.to_string(), Origin::Default)
            }
        }
    }

    fn origin(&self, key: &str) -> Origin {
        self.raw
            .iter()
            .find(|(k, _)| **k == key)
            .map(|(_, (_, o))| o.clone())
            .unwrap_or(Origin::Default)
    }

    fn num(v: &str, key: &str, o: &Origin) -> Result<f64, CliError> {
        let x: f64 = v
            .parse()
            .map_err(|_| o.err(format!("{key}: '{v}' is not a number")))?;
        if !x.is_finite() {
            return Err(o.err(format!("{key}: '{v}' is not finite")));
        }
        Ok(x)
    }

    fn f64(&mut self, key: &'static str) -> Result<f64, CliError> {
        let (v, o) = self.get(key);
        let x = Self::num(&v, key, &o)?;
        self.canonical.insert(key.into(), format!("{x:?}"));
        Ok(x)
    }

    fn opt_f64(&mut self, key: &'static str) -> Result<Option<f64>, CliError> {
        let (v, o) = self.get(key);
        if v.is_empty() {
            self.canonical.insert(key.into(), String::new());
            return Ok(None);
        }
        let x = Self::num(&v, key, &o)?;
        self.canonical.insert(key.into(), format!("{x:?}"));
        Ok(Some(x))
    }

    fn usize(&mut self, key: &'static str) -> Result<usize, CliError> {
        let (v, o) = self.get(key);
        let x: usize = v
            .parse()
            .map_err(|_| o.err(format!("{key}: '{v}' is not a non-negative integer")))?;
        self.canonical.insert(key.into(), x.to_string());
        Ok(x)
    }

    fn list(&mut self, key: &'static str) -> Result<Vec<f64>, CliError> {
        let (v, o) = self.get(key);
        let xs = v
            .split(',')
            .map(|t| Self::num(t.trim(), key, &o))
            .collect::<Result<Vec<_>, _>>()?;
        self.canonical.insert(
            key.into(),
            xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(","),
        );
        Ok(xs)
    }

    fn string(&mut self, key: &'static str) -> Option<String> {
        let (v, _) = self.get(key);
        self.canonical.insert(key.into(), v.clone());
        (!v.is_empty()).then_some(v)
    }

    fn choice<T>(&mut self, key: &'static str, parse: fn(&str) -> Option<T>, allowed: &str) -> Result<T, CliError> {
        let (v, o) = self.get(key);
        let t = parse(&v).ok_or_else(|| o.err(format!("{key}: '{v}' is not one of {allowed}")))?;
        self.canonical.insert(key.into(), v);
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_gamma() {
        let c = parse_config("p=5\nmu=1.0").unwrap();
        assert_eq!(c.params.p, 5.0);
        assert_eq!(c.run, RunConfig::default());
        assert!((c.shrink.gamma - 2.45).abs() < 1e-12);
        assert_eq!(c.options.s_end, 23.0);
        let d = parse_config("gamma_epsilon=0.05 # trailing comment\n\n# full line\n").unwrap();
        assert!((d.shrink.gamma - 2.45).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let e = parse_config("p=2.5").unwrap_err();
        assert!(e.to_string().contains("p > 3"), "{e}");
        let e = parse_config("p=5\nfoo=1").unwrap_err();
        assert!(matches!(e, CliError::Config { line: Some(2), .. }), "{e}");
        let e = parse_config("p=5\n\ndy=abc").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        assert!(parse_config("p=5\np=6").is_err());
        assert!(parse_config("novalue").is_err());
        assert!(parse_config("bc=periodic").is_err());
        assert!(parse_config("s_end=10").is_err());
    }

    #[test]
    fn canonical_hash() {
        let a = parse_config("p=5").unwrap();
        let b = parse_config("p = 5.0\nmu=1").unwrap();
        let c = parse_config("p=6").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn env_overrides() {
        let env = vec![
            ("CRITBLOW_DY".to_string(), "0.05".to_string()),
            ("CRITBLOW_A".to_string(), "30".to_string()),
            ("PATH".to_string(), "/bin".to_string()),
        ];
        let c = parse_config_with_env("dy=0.1", env).unwrap();
        assert_eq!(c.run.dy, 0.05);
        assert_eq!(c.shrink.a, 30.0);
        let bad = vec![("CRITBLOW_NOPE".to_string(), "1".to_string())];
        assert!(parse_config_with_env("", bad).is_err());
    }
}
