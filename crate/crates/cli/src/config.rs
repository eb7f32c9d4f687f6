//! Run configuration: one TOML file per solve or sweep.
//!
//! ```toml
//! version = 1
//! k = 5.0
//! band = 31
//! intervals = 32
//! order = 2
//! radius = 2.0
//!
//! [scenario]
//! kind = "centered-sphere"
//! n0 = 2.0
//! radius = 1.0
//!
//! [incident]
//! m_inc = 1
//!
//! [gmres]
//! tol = 1e-10
//!
//! [sweep]
//! parameter = "intervals"
//! values = [8, 16, 32]
//!
//! [output]
//! dir = "out/sphere"
//! moment_cache = "out/cache"
//! ```

use std::path::{Path, PathBuf};

use lsscatter::operator::GmresOptions;
use lsscatter::scenarios::{ContrastSpec, IncidentSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub k: f64,
    pub band: usize,
    pub intervals: usize,
    pub order: usize,
    pub radius: f64,
    pub scenario: Scenario,
    pub incident: Incident,
    #[serde(default)]
    pub gmres: Gmres,
    #[serde(default)]
    pub reference: Reference,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Scenario {
    Vacuum,
    CenteredSphere {
        n0: f64,
        #[serde(default = "unit")]
        radius: f64,
    },
    ShiftedSphere {
        n0: f64,
        #[serde(default = "unit")]
        radius: f64,
        offset: f64,
    },
    RotatedSquare {
        n0: f64,
        #[serde(default = "unit")]
        half_diagonal: f64,
    },
    Hoelder {
        beta: f64,
        m_ref: i64,
    },
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Incident {
    pub m_inc: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Gmres {
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for Gmres {
    fn default() -> Self {
        let d = GmresOptions::default();
        Self { tol: d.tol, max_iter: d.max_iter, restart: d.restart }
    }
}

/// What the relative error is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Reference {
    /// Closed-form solution of the scenario; the default where one exists.
    Exact,
    /// A solve of the same problem at a higher band limit.
    Band { band: usize },
    None,
}

impl Default for Reference {
    fn default() -> Self {
        Reference::Exact
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    Intervals,
    Band,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub dir: PathBuf,
    /// Directory holding binary moment tables, one file per grid and band.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment_cache: Option<PathBuf>,
    /// Angular samples per radius on the meridian slice.
    #[serde(default = "default_slice_angles")]
    pub slice_angles: usize,
}

fn default_slice_angles() -> usize {
    180
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return bad(format!("k must be positive, got {}", self.k));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad(format!("radius must be positive, got {}", self.radius));
        }
        if self.intervals == 0 || self.order == 0 {
            return bad("intervals and order must be at least 1".into());
        }
        if self.band < self.incident.m_inc.unsigned_abs() as usize {
            return bad(format!("band {} is below |m_inc| = {}", self.band, self.incident.m_inc.abs()));
        }
        if !(self.gmres.tol > 0.0) || self.gmres.max_iter == 0 || self.gmres.restart == 0 {
            return bad("gmres needs tol > 0, max_iter >= 1, restart >= 1".into());
        }
        self.contrast().validate().map_err(|e| CliError::Config(e.to_string()))?;
        match self.reference {
            Reference::Exact if !self.has_exact_solution() => {
                return bad("no exact solution for this scenario; use reference kind \"band\" or \"none\"".into())
            }
            Reference::Band { band } if band <= self.max_band() => {
                return bad(format!("reference band {band} must exceed every solved band"))
            }
            _ => {}
        }
        if self.output.slice_angles == 0 {
            return bad("output.slice_angles must be at least 1".into());
        }
        if let Some(s) = &self.sweep {
            if s.values.len() < 2 {
                return bad(format!("a sweep needs at least 2 values, got {}", s.values.len()));
            }
            if s.values.iter().any(|&v| v == 0) {
                return bad("sweep values must be positive".into());
            }
            if s.parameter == SweepParameter::Band
                && s.values.iter().any(|&v| v < self.incident.m_inc.unsigned_abs() as usize)
            {
                return bad("every swept band must be at least |m_inc|".into());
            }
        }
        Ok(())
    }

    fn max_band(&self) -> usize {
        match &self.sweep {
            Some(Sweep { parameter: SweepParameter::Band, values }) => values.iter().copied().max().unwrap_or(self.band),
            _ => self.band,
        }
    }

    pub fn has_exact_solution(&self) -> bool {
        matches!(self.scenario, Scenario::Vacuum | Scenario::CenteredSphere { .. } | Scenario::ShiftedSphere { .. })
    }

    pub fn contrast(&self) -> ContrastSpec {
        match self.scenario {
            Scenario::Vacuum => ContrastSpec::Vacuum,
            Scenario::CenteredSphere { n0, radius } => ContrastSpec::CenteredSphere { n0, radius },
            Scenario::ShiftedSphere { n0, radius, offset } => ContrastSpec::ShiftedSphere { n0, radius, offset },
            Scenario::RotatedSquare { n0, half_diagonal } => ContrastSpec::RotatedSquare { n0, half_diagonal },
            Scenario::Hoelder { beta, m_ref } => ContrastSpec::Hoelder { beta, m_ref },
        }
    }

    /// The incident field is centered on the scatterer.
    pub fn incident(&self) -> IncidentSpec {
        let offset = match self.scenario {
            Scenario::ShiftedSphere { offset, .. } => offset,
            _ => 0.0,
        };
        IncidentSpec { m_inc: self.incident.m_inc, k: self.k, offset }
    }

    pub fn gmres_options(&self) -> GmresOptions {
        GmresOptions { tol: self.gmres.tol, max_iter: self.gmres.max_iter, restart: self.gmres.restart }
    }

    pub fn scenario_name(&self) -> &'static str {
        match self.scenario {
            Scenario::Vacuum => "vacuum",
            Scenario::CenteredSphere { .. } => "centered-sphere",
            Scenario::ShiftedSphere { .. } => "shifted-sphere",
            Scenario::RotatedSquare { .. } => "rotated-square",
            Scenario::Hoelder { .. } => "hoelder",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
version = 1
k = 5.0
band = 31
intervals = 8
order = 2
radius = 2.0

[scenario]
kind = "centered-sphere"
n0 = 2.0

[incident]
m_inc = 1

[sweep]
parameter = "intervals"
values = [8, 16, 32]

[output]
dir = "out"
"#;

    #[test]
    fn parse_defaults_and_roundtrip() {
        let cfg = RunConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.scenario, Scenario::CenteredSphere { n0: 2.0, radius: 1.0 });
        assert_eq!(cfg.gmres, Gmres::default());
        assert_eq!(cfg.reference, Reference::Exact);
        assert_eq!(cfg.output.slice_angles, 180);
        let again = RunConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = SAMPLE.replace("order = 2", "order = 2\nsmoothing = 3");
        assert!(matches!(RunConfig::parse(&text), Err(CliError::Config(_))));
        let text = SAMPLE.replace("n0 = 2.0", "n0 = 2.0\ncolour = 1");
        assert!(RunConfig::parse(&text).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        for (from, to) in [
            ("version = 1", "version = 2"),
            ("values = [8, 16, 32]", "values = [8]"),
            ("k = 5.0", "k = -1.0"),
            ("m_inc = 1", "m_inc = 40"),
        ] {
            assert!(RunConfig::parse(&SAMPLE.replace(from, to)).is_err(), "{to}");
        }
        let text = SAMPLE.replace("kind = \"centered-sphere\"\nn0 = 2.0", "kind = \"hoelder\"\nbeta = 0.4\nm_ref = 1");
        assert!(RunConfig::parse(&text).is_err(), "hoelder has no exact reference");
        let text = text.replace("[output]", "[reference]\nkind = \"band\"\nband = 63\n\n[output]");
        assert!(RunConfig::parse(&text).is_ok());
    }

    #[test]
    fn incident_offset_follows_the_scatterer() {
        let text = SAMPLE.replace("kind = \"centered-sphere\"\nn0 = 2.0", "kind = \"shifted-sphere\"\nn0 = 2.0\noffset = 1.0");
        let cfg = RunConfig::parse(&text).unwrap();
        assert_eq!(cfg.incident().offset, 1.0);
    }
}
