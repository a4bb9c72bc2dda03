//! Flat `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Keys:
//!
//! | key | value |
//! |-----|-------|
//! | `experiment` | experiment name |
//! | `law` | built-in law name |
//! | `weights` | comma-separated `π̂(0), π̂(1), …` (replaces `law`) |
//! | `h`, `tau` | rescaling |
//! | `c` | schedule constant |
//! | `q_grid`, `t_grid` | grid spec: `log:LO:HI:N` or `a,b,c` |
//! | `seed` | 64-bit seed |
//! | `out` | output directory |
//! | `n` | generations or steps |
//! | `samples` | Monte Carlo units |
//! | `k_max` | largest level |
//! | `x` | initial mass |
//! | `tol` | tolerance override |

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gw::FamilyLaw;
use crate::measure::log_grid;

/// Family law given by name or by weights.
#[derive(Debug, Clone, PartialEq)]
pub enum LawSpec {
    Named(String),
    Weights(Vec<f64>),
}

impl LawSpec {
    pub fn resolve(&self) -> Result<FamilyLaw> {
        match self {
            LawSpec::Named(n) => FamilyLaw::named(n).map_err(|e| Error::Config(e.to_string())),
            LawSpec::Weights(w) => FamilyLaw::new(w).map_err(|e| Error::Config(e.to_string())),
        }
    }
}

/// Grid of positive reals.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// `n` log-spaced points from `lo` to `hi`.
    Log {
        lo: f64,
        hi: f64,
        n: usize,
    },
    List(Vec<f64>),
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            GridSpec::Log { lo, hi, n } => log_grid(*lo, *hi, *n),
            GridSpec::List(v) => v.clone(),
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::Log { lo, hi, n } => write!(f, "log:{lo:?}:{hi:?}:{n}"),
            GridSpec::List(v) => write!(f, "{}", join_floats(v)),
        }
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spec = if let Some(rest) = s.strip_prefix("log:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(Error::Config(format!("grid '{s}' is not log:LO:HI:N")));
            }
            let (lo, hi) = (parse_f64(parts[0])?, parse_f64(parts[1])?);
            let n = parts[2].trim().parse().map_err(|_| Error::Config(format!("bad point count in '{s}'")))?;
            if !(lo > 0.0 && hi > lo && n >= 1) {
                return Err(Error::Config(format!("grid '{s}' needs 0 < LO < HI and N ≥ 1")));
            }
            GridSpec::Log { lo, hi, n }
        } else {
            let v = parse_list(s)?;
            if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || v.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Config(format!("grid '{s}' must be nonempty, nonnegative and increasing")));
            }
            GridSpec::List(v)
        };
        Ok(spec)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Config(format!("'{s}' is not a number")))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_f64).collect()
}

fn join_floats(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

/// All settings of one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub law: LawSpec,
    pub h: f64,
    pub tau: f64,
    pub c: f64,
    pub q_grid: GridSpec,
    pub t_grid: GridSpec,
    pub seed: u64,
    pub out: PathBuf,
    pub n: usize,
    pub samples: usize,
    pub k_max: usize,
    pub x: f64,
    pub tol: Option<f64>,
}

impl ExperimentConfig {
    /// Defaults: binary law, `h = τ = 2⁻¹⁰`, `c = 1`, 41-point q-grid on
    /// `[2⁻¹⁰, 2¹⁰]`, `t ∈ {½, 1, 2}`, seed 0, `n = 12`, 10⁶ samples,
    /// `k_max = 4`, `x = 1`.
    pub fn new(experiment: &str) -> Self {
        let h = 2f64.powi(-10);
        Self {
            experiment: experiment.to_string(),
            law: LawSpec::Named("binary".into()),
            h,
            tau: h,
            c: 1.0,
            q_grid: GridSpec::Log { lo: 2f64.powi(-10), hi: 2f64.powi(10), n: 41 },
            t_grid: GridSpec::List(vec![0.5, 1.0, 2.0]),
            seed: 0,
            out: PathBuf::from("."),
            n: 12,
            samples: 1_000_000,
            k_max: 4,
            x: 1.0,
            tol: None,
        }
    }

    /// Parses `key = value` lines over the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::new("");
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| parse_f64(v);
        let int = |v: &str| -> Result<u64> { v.parse().map_err(|_| Error::Config(format!("'{v}' is not an integer"))) };
        match key {
            "experiment" => self.experiment = value.to_string(),
            "law" => self.law = LawSpec::Named(value.to_string()),
            "weights" => self.law = LawSpec::Weights(parse_list(value)?),
            "h" => self.h = num(value)?,
            "tau" => self.tau = num(value)?,
            "c" => self.c = num(value)?,
            "q_grid" => self.q_grid = value.parse()?,
            "t_grid" => self.t_grid = value.parse()?,
            "seed" => self.seed = int(value)?,
            "out" => self.out = PathBuf::from(value),
            "n" => self.n = int(value)? as usize,
            "samples" => self.samples = int(value)? as usize,
            "k_max" => self.k_max = int(value)? as usize,
            "x" => self.x = num(value)?,
            "tol" => self.tol = Some(num(value)?),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// `(key, value)` pairs accepted back by [`ExperimentConfig::set`].
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let mut e = vec![("experiment", self.experiment.clone())];
        match &self.law {
            LawSpec::Named(n) => e.push(("law", n.clone())),
            LawSpec::Weights(w) => e.push(("weights", join_floats(w))),
        }
        e.extend([
            ("h", format!("{:?}", self.h)),
            ("tau", format!("{:?}", self.tau)),
            ("c", format!("{:?}", self.c)),
            ("q_grid", self.q_grid.to_string()),
            ("t_grid", self.t_grid.to_string()),
            ("seed", self.seed.to_string()),
            ("out", self.out.display().to_string()),
            ("n", self.n.to_string()),
            ("samples", self.samples.to_string()),
            ("k_max", self.k_max.to_string()),
            ("x", format!("{:?}", self.x)),
        ]);
        if let Some(t) = self.tol {
            e.push(("tol", format!("{t:?}")));
        }
        e
    }

    pub fn to_text(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn q_values(&self) -> Vec<f64> {
        self.q_grid.values()
    }

    pub fn t_values(&self) -> Vec<f64> {
        self.t_grid.values()
    }

    /// Tolerance override or `default`.
    pub fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_and_defaults() {
        let cfg = ExperimentConfig::parse(
            "# demo\nexperiment = limit\nweights = 0.25, 0.5, 0.25\nq_grid = 1\nt_grid = log:0.5:2:3\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, "limit");
        assert_eq!(cfg.law, LawSpec::Weights(vec![0.25, 0.5, 0.25]));
        assert_eq!(cfg.q_values(), vec![1.0]);
        assert_eq!(cfg.t_values().len(), 3);
        assert_eq!(cfg.h, 2f64.powi(-10));
        assert!(ExperimentConfig::parse("bogus = 1").is_err());
        assert!(ExperimentConfig::parse("no equals sign").is_err());
        assert!(ExperimentConfig::parse("q_grid = 2,1").is_err());
        assert!(ExperimentConfig::parse("q_grid = log:1:0.5:3").is_err());
        assert!(LawSpec::Named("nope".into()).resolve().is_err());
        assert!(LawSpec::Weights(vec![0.5, 0.6]).resolve().is_err());
    }

    #[test]
    fn default_grid_matches_library() {
        assert_eq!(ExperimentConfig::new("x").q_values(), crate::measure::default_q_grid());
    }

    proptest! {
        #[test]
        fn round_trip(h in 1e-6f64..1.0, c in 0.41f64..10.0, seed in any::<u64>(), n in 0usize..50,
                      w in proptest::collection::vec(0.0f64..1.0, 1..6), tol in proptest::option::of(1e-12f64..1.0),
                      lo in 1e-6f64..1.0, span in 1.0f64..1e6, pts in 1usize..60) {
            let mut cfg = ExperimentConfig::new("grimvall");
            cfg.h = h;
            cfg.tau = h / 3.0;
            cfg.c = c;
            cfg.seed = seed;
            cfg.n = n;
            cfg.law = LawSpec::Weights(w);
            cfg.tol = tol;
            cfg.q_grid = GridSpec::Log { lo, hi: lo * (1.0 + span), n: pts };
            cfg.t_grid = GridSpec::List(vec![0.0, lo, lo + span]);
            let back = ExperimentConfig::parse(&cfg.to_text()).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
