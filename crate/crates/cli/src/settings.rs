use std::path::{Path, PathBuf};

use pureconn::models::{ModelKind, ModelMetric, Point4, Scheme};
use pureconn::quadrature::{S4Settings, SphereRule};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Values read from a TOML file; every key is optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<String>,
    pub point: Option<Point4>,
    pub lambda: Option<f64>,
    pub scheme: Option<String>,
    pub h: Option<f64>,
    pub tol: Option<f64>,
    pub points: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub radial: Option<usize>,
    pub angular: Option<[usize; 3]>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: FileConfig) -> FileConfig {
        FileConfig {
            model: over.model.or(self.model),
            point: over.point.or(self.point),
            lambda: over.lambda.or(self.lambda),
            scheme: over.scheme.or(self.scheme),
            h: over.h.or(self.h),
            tol: over.tol.or(self.tol),
            points: over.points.or(self.points),
            seed: over.seed.or(self.seed),
            out: over.out.or(self.out),
            radial: over.radial.or(self.radial),
            angular: over.angular.or(self.angular),
        }
    }
}

/// Resolved run settings, echoed at the head of every report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub model: Option<String>,
    pub point: Point4,
    pub lambda: Option<f64>,
    pub scheme: String,
    pub h: f64,
    pub tol: Option<f64>,
    pub points: usize,
    pub seed: u64,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub radial: usize,
    pub angular: [usize; 3],
}

impl Settings {
    pub fn resolve(c: FileConfig) -> Result<Self, CliError> {
        let s = Settings {
            model: c.model,
            point: c.point.unwrap_or([0.0; 4]),
            lambda: c.lambda,
            scheme: c.scheme.unwrap_or_else(|| "analytic".into()),
            h: c.h.unwrap_or(Scheme::DEFAULT_STEP),
            tol: c.tol,
            points: c.points.unwrap_or(20),
            seed: c.seed.unwrap_or(7),
            out: c.out,
            radial: c.radial.unwrap_or(64),
            angular: c.angular.unwrap_or([5, 5, 8]),
        };
        if !(s.h > 0.0 && s.h.is_finite()) {
            return Err(CliError::Usage(format!("step h must be positive, got {}", s.h)));
        }
        if let Some(t) = s.tol {
            if !(t >= 0.0) {
                return Err(CliError::Usage(format!("tolerance must be non-negative, got {t}")));
            }
        }
        if s.lambda == Some(0.0) {
            return Err(CliError::Usage("lambda must be non-zero".into()));
        }
        if s.points == 0 || s.radial < 2 || s.angular.contains(&0) {
            return Err(CliError::Usage("point and node counts must be positive".into()));
        }
        s.scheme()?;
        if let Some(m) = &s.model {
            parse_model(m)?;
        }
        Ok(s)
    }

    pub fn scheme(&self) -> Result<Scheme, CliError> {
        match self.scheme.as_str() {
            "analytic" => Ok(Scheme::Analytic),
            "fd" | "finite-difference" => Ok(Scheme::FiniteDifference(self.h)),
            other => Err(CliError::Usage(format!("unknown scheme `{other}` (analytic or fd)"))),
        }
    }

    /// The selected model, or the suite's defaults when none is given.
    pub fn models(&self, defaults: &[ModelMetric]) -> Vec<ModelMetric> {
        match &self.model {
            Some(m) => vec![parse_model(m).expect("validated in resolve")],
            None => defaults.to_vec(),
        }
    }

    pub fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    pub fn s4(&self) -> S4Settings {
        S4Settings {
            radial: self.radial,
            angular: SphereRule {
                n_chi: self.angular[0],
                n_theta: self.angular[1],
                n_phi: self.angular[2],
            },
            ..S4Settings::default()
        }
    }
}

/// Model names as in the catalog, with an optional `-reversed` suffix.
pub fn parse_model(name: &str) -> Result<ModelMetric, CliError> {
    let (base, reversed) = match name.strip_suffix("-reversed") {
        Some(b) => (b, true),
        None => (name, false),
    };
    let kind: ModelKind = base
        .parse()
        .map_err(|e: pureconn::Error| CliError::Usage(e.to_string()))?;
    let m = ModelMetric::new(kind);
    Ok(if reversed { m.reversed() } else { m })
}

pub fn parse_point(s: &str) -> Result<Point4, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into()
        .map_err(|v: Vec<f64>| format!("expected 4 coordinates, got {}", v.len()))
}
