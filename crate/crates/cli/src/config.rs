//! Run configuration: JSON file, command-line flags, and the merge of the two.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Which Hamiltonian a model-generic command works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Bs,
    Mg,
}

/// Per-assertion tolerance overrides. Unset entries take the command default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub stationarity: Option<f64>,
    pub residual: Option<f64>,
    pub root: Option<f64>,
    pub commutator: Option<f64>,
    pub ratio: Option<f64>,
    pub manifold: Option<f64>,
    pub price: Option<f64>,
    pub martingale: Option<f64>,
}

impl ToleranceOverrides {
    fn merge(&mut self, other: &ToleranceOverrides) {
        macro_rules! take {
            ($($f:ident),*) => {$( if other.$f.is_some() { self.$f = other.$f; } )*};
        }
        take!(
            stationarity,
            residual,
            root,
            commutator,
            ratio,
            manifold,
            price,
            martingale
        );
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "stationarity" => self.stationarity,
            "residual" => self.residual,
            "root" => self.root,
            "commutator" => self.commutator,
            "ratio" => self.ratio,
            "manifold" => self.manifold,
            "price" => self.price,
            "martingale" => self.martingale,
            _ => None,
        }
    }
}

/// Everything a command may read. Keys mirror the parameter field names.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub model: Option<Model>,

    pub r: Option<f64>,
    pub sigma: Option<f64>,
    pub sigma2: Option<f64>,

    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub zeta: Option<f64>,
    pub alpha: Option<f64>,
    pub rho: Option<f64>,
    pub y: Option<f64>,

    pub mu2: Option<f64>,
    pub lam4: Option<f64>,
    pub ys: Option<Vec<f64>>,

    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub n: Option<usize>,
    pub y_min: Option<f64>,
    pub y_max: Option<f64>,
    pub ny: Option<usize>,

    pub maturity: Option<f64>,
    pub steps: Option<usize>,
    pub scheme: Option<String>,
    pub strike: Option<f64>,
    pub spot: Option<f64>,
    pub bracket: Option<[f64; 2]>,

    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub csv: Option<PathBuf>,

    pub tolerances: Option<ToleranceOverrides>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn merge(&mut self, other: RunConfig) {
        macro_rules! take {
            ($($f:ident),*) => {$( if other.$f.is_some() { self.$f = other.$f; } )*};
        }
        take!(
            command, model, r, sigma, sigma2, lambda, mu, zeta, alpha, rho, y, mu2, lam4, ys,
            x_min, x_max, n, y_min, y_max, ny, maturity, steps, scheme, strike, spot, bracket, out,
            csv
        );
        if let Some(t) = other.tolerances {
            self.tolerances
                .get_or_insert_with(Default::default)
                .merge(&t);
        }
    }

    /// Inputs as echoed in a report: set fields only, in key order.
    pub fn echo(&self) -> BTreeMap<String, serde_json::Value> {
        let value = serde_json::to_value(self).expect("config serializes");
        let serde_json::Value::Object(map) = value else {
            unreachable!("struct serializes to an object")
        };
        map.into_iter()
            .filter(|(_, v)| !v.is_null())
            .map(|(k, v)| match (k.as_str(), v) {
                ("tolerances", serde_json::Value::Object(t)) => (
                    k,
                    serde_json::Value::Object(
                        t.into_iter().filter(|(_, v)| !v.is_null()).collect(),
                    ),
                ),
                (_, v) => (k, v),
            })
            .collect()
    }

    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances
            .as_ref()
            .and_then(|t| t.get(name))
            .unwrap_or(default)
    }

    pub fn require(&self, value: Option<f64>, name: &'static str) -> Result<f64, CliError> {
        value.ok_or(CliError::Missing(name))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "vacuumlab",
    version,
    about = "Martingale, vacuum and symmetry diagnostics for discretised pricing Hamiltonians",
    allow_negative_numbers = true
)]
pub struct Args {
    /// Analysis to run; `vacuumlab list` prints the available names.
    pub command: Option<String>,

    /// JSON config file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the command's table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub model: Option<Model>,

    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Variance sigma^2; preferred over --sigma.
    #[arg(long)]
    pub sigma2: Option<f64>,

    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Log-variance coordinate for pointwise MG analyses.
    #[arg(long)]
    pub y: Option<f64>,

    #[arg(long)]
    pub mu2: Option<f64>,
    #[arg(long)]
    pub lam4: Option<f64>,
    /// Log-variance sample points for the vacuum manifold.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub ys: Option<Vec<f64>>,

    #[arg(long)]
    pub x_min: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub y_min: Option<f64>,
    #[arg(long)]
    pub y_max: Option<f64>,
    #[arg(long)]
    pub ny: Option<usize>,

    #[arg(long)]
    pub maturity: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Time scheme: implicit-euler or crank-nicolson.
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub strike: Option<f64>,
    #[arg(long)]
    pub spot: Option<f64>,
    /// Root bracket `LO HI`.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub bracket: Option<Vec<f64>>,

    #[arg(long)]
    pub tol_stationarity: Option<f64>,
    #[arg(long)]
    pub tol_residual: Option<f64>,
    #[arg(long)]
    pub tol_root: Option<f64>,
    #[arg(long)]
    pub tol_commutator: Option<f64>,
    #[arg(long)]
    pub tol_ratio: Option<f64>,
    #[arg(long)]
    pub tol_manifold: Option<f64>,
    #[arg(long)]
    pub tol_price: Option<f64>,
    #[arg(long)]
    pub tol_martingale: Option<f64>,
}

impl Args {
    /// Loads the config file (if any) and applies the flags on top.
    pub fn resolve(self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let tolerances = ToleranceOverrides {
            stationarity: self.tol_stationarity,
            residual: self.tol_residual,
            root: self.tol_root,
            commutator: self.tol_commutator,
            ratio: self.tol_ratio,
            manifold: self.tol_manifold,
            price: self.tol_price,
            martingale: self.tol_martingale,
        };
        let any_tol = tolerances != ToleranceOverrides::default();
        cfg.merge(RunConfig {
            command: self.command,
            model: self.model,
            r: self.r,
            sigma: self.sigma,
            sigma2: self.sigma2,
            lambda: self.lambda,
            mu: self.mu,
            zeta: self.zeta,
            alpha: self.alpha,
            rho: self.rho,
            y: self.y,
            mu2: self.mu2,
            lam4: self.lam4,
            ys: self.ys,
            x_min: self.x_min,
            x_max: self.x_max,
            n: self.n,
            y_min: self.y_min,
            y_max: self.y_max,
            ny: self.ny,
            maturity: self.maturity,
            steps: self.steps,
            scheme: self.scheme,
            strike: self.strike,
            spot: self.spot,
            bracket: self.bracket.map(|b| [b[0], b[1]]),
            out: self.out,
            csv: self.csv,
            tolerances: any_tol.then_some(tolerances),
        });
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(argv: &[&str]) -> Args {
        Args::try_parse_from(std::iter::once("vacuumlab").chain(argv.iter().copied())).unwrap()
    }

    #[test]
    fn negative_values_and_bracket() {
        let cfg = parse(&["constraint-root", "--lambda", "-1", "--bracket", "-2", "2"])
            .resolve()
            .unwrap();
        assert_eq!(cfg.lambda, Some(-1.0));
        assert_eq!(cfg.bracket, Some([-2.0, 2.0]));
    }

    #[test]
    fn flags_override_file_values() {
        let mut file: RunConfig = serde_json::from_str(
            r#"{"r": 0.1, "sigma2": 0.04, "tolerances": {"root": 1e-8, "price": 0.5}}"#,
        )
        .unwrap();
        file.merge(
            parse(&["--r", "0.05", "--tol-root", "1e-12"])
                .resolve()
                .unwrap(),
        );
        assert_eq!(file.r, Some(0.05));
        assert_eq!(file.sigma2, Some(0.04));
        assert_eq!(file.tolerance("root", 1.0), 1e-12);
        assert_eq!(file.tolerance("price", 1.0), 0.5);
        assert_eq!(file.tolerance("ratio", 1.0), 1.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"rate": 0.1}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"tolerances": {"tight": 1}}"#).is_err());
    }

    #[test]
    fn echo_skips_unset_fields_and_paths() {
        let cfg = RunConfig {
            r: Some(0.05),
            out: Some("report.json".into()),
            ..Default::default()
        };
        let echo = cfg.echo();
        assert_eq!(echo.keys().collect::<Vec<_>>(), ["r"]);
    }

    #[test]
    fn manifold_points_accept_commas() {
        let cfg = parse(&["vacuum-manifold", "--ys=-1,0,1"])
            .resolve()
            .unwrap();
        assert_eq!(cfg.ys, Some(vec![-1.0, 0.0, 1.0]));
    }
}
