//! Run configuration: a TOML document with `model`, `numerics` and
//! `outputs` sections, overridden by command line flags.
//!
//! ```toml
//! [model]
//! family = "ads_schwarzschild"
//! m = 1.0
//!
//! [numerics]
//! ladder = [0.4, 0.3, 0.22, 0.16, 0.12, 0.09, 0.065, 0.05]
//! tol_fit = 1e-4
//!
//! [outputs]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::volume::{check_ladder, default_ladder};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub ladder: Vec<f64>,
    /// Relative tolerance of the radial volume quadrature.
    pub tol_quadrature: f64,
    /// Largest accepted residual of the volume regression.
    pub tol_fit: f64,
    /// Relative tolerance of the four-dimensional curvature integrals.
    pub tol_integrals: f64,
    /// Nodes per sampled axis for curvature integrals.
    pub quadrature_nodes: usize,
    /// Tolerance of the compactification checks.
    pub tol_compactification: f64,
    pub tol_einstein: f64,
    /// Relative tolerance of the Gauss–Bonnet identity before the decision
    /// layer refuses conclusions.
    pub tol_consistency: f64,
    pub tol_comparison: f64,
    pub conformal_factors: usize,
    pub conformal_nodes: usize,
    pub conformal_amplitude: f64,
    pub seed: u64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            ladder: default_ladder(),
            tol_quadrature: 1e-12,
            tol_fit: 1e-4,
            tol_integrals: 1e-8,
            quadrature_nodes: 24,
            tol_compactification: 1e-4,
            tol_einstein: 1e-6,
            tol_consistency: crate::topology::DEFAULT_CONSISTENCY_TOL,
            tol_comparison: crate::topology::DEFAULT_COMPARISON_TOL,
            conformal_factors: 5,
            conformal_nodes: 16,
            conformal_amplitude: 0.3,
            seed: 20_240_601,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub dir: PathBuf,
    pub report: bool,
    pub csv: bool,
    /// Eigenfunction samples and boundary-metric tables.
    pub raw_grids: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            dir: PathBuf::from("out"),
            report: true,
            csv: true,
            raw_grids: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_model")]
    pub model: ModelSpec,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub outputs: Outputs,
}

fn default_model() -> ModelSpec {
    ModelSpec::Hyperbolic
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: default_model(),
            numerics: Numerics::default(),
            outputs: Outputs::default(),
        }
    }
}

/// Command line values that replace document fields.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub model: Option<String>,
    pub m: Option<f64>,
    pub ladder: Option<Vec<f64>>,
    pub tol_quadrature: Option<f64>,
    pub tol_fit: Option<f64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn apply(mut self, o: &Overrides) -> Result<Self> {
        if let Some(name) = &o.model {
            self.model = ModelSpec::from_name(name, None)?;
        }
        if let Some(m) = o.m {
            self.model = self.model.with_parameter(m)?;
        }
        if let Some(l) = &o.ladder {
            self.numerics.ladder = l.clone();
        }
        if let Some(t) = o.tol_quadrature {
            self.numerics.tol_quadrature = t;
        }
        if let Some(t) = o.tol_fit {
            self.numerics.tol_fit = t;
        }
        if let Some(d) = &o.out {
            self.outputs.dir = d.clone();
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = &self.numerics;
        let tolerances = [
            ("tol_quadrature", n.tol_quadrature),
            ("tol_fit", n.tol_fit),
            ("tol_integrals", n.tol_integrals),
            ("tol_compactification", n.tol_compactification),
            ("tol_einstein", n.tol_einstein),
            ("tol_consistency", n.tol_consistency),
            ("tol_comparison", n.tol_comparison),
            ("conformal_amplitude", n.conformal_amplitude),
        ];
        for (name, t) in tolerances {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {t}")));
            }
        }
        if n.quadrature_nodes < 4 || n.conformal_nodes < 4 {
            return Err(Error::Config("quadrature needs at least 4 nodes per axis".into()));
        }
        check_ladder(&n.ladder).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Parses `0.4,0.3,0.2`.
pub fn parse_ladder(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad ladder entry '{t}': {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_overrides() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let text = "[model]\nfamily = \"ads_schwarzschild\"\nm = 2.0\n[numerics]\ntol_fit = 1e-5\n";
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.model, ModelSpec::AdsSchwarzschild { m: 2.0 });
        let o = Overrides { m: Some(0.5), tol_fit: Some(1e-3), ..Overrides::default() };
        let cfg = cfg.apply(&o).unwrap();
        assert_eq!(cfg.model, ModelSpec::AdsSchwarzschild { m: 0.5 });
        assert_eq!(cfg.numerics.tol_fit, 1e-3);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(RunConfig::from_toml("[numerics]\ntol_fit = -1.0\n").is_err());
        assert!(RunConfig::from_toml("[numerics]\nunknown = 1\n").is_err());
        assert!(RunConfig::from_toml("[model]\nfamily = \"nope\"\n").is_err());
        let o = Overrides { ladder: Some(parse_ladder("0.2,0.1,0.05").unwrap()), ..Overrides::default() };
        assert!(RunConfig::default().apply(&o).is_err());
        assert!(parse_ladder("0.2,x").is_err());
    }
}
