//! JSON metric specifications.
//!
//! ```json
//! {"kind": "linear", "h_modes": [{"m": [1, 0, 0], "re": [[0,0,0],[0,1,0],[0,0,-1]], "im": [[0,0,0],[0,0,-1],[0,-1,0]]}]}
//! {"kind": "conformal", "phi_modes": [{"m": [1, 0, 0], "re": 0.5, "im": 0.0}]}
//! {"kind": "quadratic-example", "reflect": true}
//! ```
//!
//! Reality partners at `-m` are filled in when absent. Asymmetric tensor
//! coefficients are symmetrized with a warning.

use std::path::Path;

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{LatticeVector, ScalarFourierField, TensorFourierField};
use crate::geometry::MetricFamily;

/// Tolerance for asymmetry and reality checks on loaded coefficients.
pub const LOAD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecKind {
    Linear,
    Conformal,
    QuadraticExample,
    QuarticExample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorMode {
    pub m: [i32; 3],
    pub re: [[f64; 3]; 3],
    #[serde(default)]
    pub im: [[f64; 3]; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarMode {
    pub m: [i32; 3],
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpecFile {
    pub kind: SpecKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_modes: Option<Vec<TensorMode>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_modes: Option<Vec<ScalarMode>>,
    /// Replace `g(x)` by `g(-x)`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reflect: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSpec {
    pub spec: MetricSpecFile,
    pub family: MetricFamily,
    pub warnings: Vec<String>,
}

impl MetricSpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn quadratic() -> Self {
        Self::example(SpecKind::QuadraticExample)
    }

    pub fn quartic() -> Self {
        Self::example(SpecKind::QuarticExample)
    }

    fn example(kind: SpecKind) -> Self {
        Self {
            kind,
            h_modes: None,
            phi_modes: None,
            reflect: false,
        }
    }

    /// Validates the document and builds the metric family.
    pub fn into_family(self) -> Result<LoadedSpec> {
        let mut warnings = Vec::new();
        let (has_h, has_phi) = (self.h_modes.is_some(), self.phi_modes.is_some());
        let family = match self.kind {
            SpecKind::Linear => {
                if has_phi || !has_h {
                    return Err(Error::Spec(
                        "kind \"linear\" needs \"h_modes\" and no \"phi_modes\"".into(),
                    ));
                }
                MetricFamily::Linear {
                    h: tensor_field(self.h_modes.as_deref().unwrap_or_default(), &mut warnings)?,
                }
            }
            SpecKind::Conformal => {
                if has_h || !has_phi {
                    return Err(Error::Spec(
                        "kind \"conformal\" needs \"phi_modes\" and no \"h_modes\"".into(),
                    ));
                }
                MetricFamily::Conformal {
                    phi: scalar_field(self.phi_modes.as_deref().unwrap_or_default())?,
                }
            }
            SpecKind::QuadraticExample | SpecKind::QuarticExample => {
                if has_h || has_phi {
                    return Err(Error::Spec("example kinds take no \"h_modes\" or \"phi_modes\"".into()));
                }
                if self.kind == SpecKind::QuadraticExample {
                    MetricFamily::QuadraticExample
                } else {
                    MetricFamily::QuarticExample
                }
            }
        };
        let family = if self.reflect { family.reflected() } else { family };
        Ok(LoadedSpec {
            spec: self,
            family,
            warnings,
        })
    }
}

fn check_unique(ms: impl Iterator<Item = [i32; 3]>) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for m in ms {
        if !seen.insert(m) {
            return Err(Error::Spec(format!("mode {m:?} listed twice")));
        }
    }
    Ok(())
}

fn tensor_field(modes: &[TensorMode], warnings: &mut Vec<String>) -> Result<TensorFourierField> {
    check_unique(modes.iter().map(|t| t.m))?;
    let entries: Vec<(LatticeVector, Matrix3<Complex64>)> = modes
        .iter()
        .map(|t| {
            let c = Matrix3::from_fn(|a, b| Complex64::new(t.re[a][b], t.im[a][b]));
            if !c.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Spec(format!("non-finite coefficient at mode {:?}", t.m)));
            }
            Ok((LatticeVector(t.m), c))
        })
        .collect::<Result<_>>()?;
    let mut h = TensorFourierField::from_modes(&entries).with_reality_partners();
    let asym = h.symmetry_defect();
    if asym > LOAD_TOL {
        warnings.push(format!(
            "h coefficients were not symmetric (defect {asym:.3e}); symmetrized"
        ));
        h.symmetrize();
    }
    let (defect, mode) = h.reality_defect();
    if defect > LOAD_TOL {
        return Err(Error::RealityViolation { mode: mode.0, defect });
    }
    Ok(h)
}

fn scalar_field(modes: &[ScalarMode]) -> Result<ScalarFourierField> {
    check_unique(modes.iter().map(|p| p.m))?;
    let mut entries: Vec<(LatticeVector, Complex64)> = Vec::new();
    for p in modes {
        let c = Complex64::new(p.re, p.im);
        if !(c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::Spec(format!("non-finite coefficient at mode {:?}", p.m)));
        }
        entries.push((LatticeVector(p.m), c));
    }
    for p in modes {
        let neg = [-p.m[0], -p.m[1], -p.m[2]];
        match modes.iter().find(|q| q.m == neg) {
            None => entries.push((LatticeVector(neg), Complex64::new(p.re, -p.im))),
            Some(q) => {
                let defect = Complex64::new(q.re - p.re, q.im + p.im).norm();
                if defect > LOAD_TOL {
                    return Err(Error::RealityViolation { mode: p.m, defect });
                }
            }
        }
    }
    let mut phi = ScalarFourierField::from_modes(&entries);
    phi.enforce_reality();
    Ok(phi)
}

/// Reads and validates a spec file.
pub fn load_spec(path: &Path) -> Result<LoadedSpec> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Spec(format!("cannot read {}: {e}", path.display())))?;
    MetricSpecFile::parse(&text)
        .map_err(|e| match e {
            Error::Spec(msg) => Error::Spec(format!("{}: {msg}", path.display())),
            other => other,
        })?
        .into_family()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples_parse() {
        let s = MetricSpecFile::parse(r#"{"kind": "quadratic-example"}"#).unwrap();
        assert_eq!(s.into_family().unwrap().family, MetricFamily::QuadraticExample);
        let s = MetricSpecFile::parse(r#"{"kind": "quartic-example", "reflect": true}"#).unwrap();
        assert_eq!(
            s.into_family().unwrap().family,
            MetricFamily::QuarticExample.reflected()
        );
    }

    #[test]
    fn linear_gets_reality_partner() {
        let text = r#"{"kind": "linear", "h_modes": [
            {"m": [1, 0, 0], "re": [[0,0,0],[0,1,0],[0,0,-1]], "im": [[0,0,0],[0,0,-1],[0,-1,0]]}]}"#;
        let loaded = MetricSpecFile::parse(text).unwrap().into_family().unwrap();
        let MetricFamily::Linear { h } = loaded.family else {
            panic!()
        };
        assert_eq!(h, MetricFamily::QuadraticExample.h());
        assert!(loaded.warnings.is_empty());
    }

    #[test]
    fn asymmetric_is_symmetrized_with_warning() {
        let text = r#"{"kind": "linear", "h_modes": [{"m": [0, 1, 0], "re": [[0,1,0],[0,0,0],[0,0,0]]}]}"#;
        let loaded = MetricSpecFile::parse(text).unwrap().into_family().unwrap();
        assert_eq!(loaded.warnings.len(), 1);
        let MetricFamily::Linear { h } = loaded.family else {
            panic!()
        };
        assert_eq!(h.get(LatticeVector::new(0, 1, 0))[(1, 0)], Complex64::new(0.5, 0.0));
    }

    #[test]
    fn schema_violations() {
        assert!(matches!(
            MetricSpecFile::parse(r#"{"kind": "linear", "bogus": 1}"#),
            Err(Error::Spec(_))
        ));
        assert!(matches!(
            MetricSpecFile::parse(r#"{"kind": "sphere"}"#),
            Err(Error::Spec(_))
        ));
        let no_modes = MetricSpecFile::parse(r#"{"kind": "linear"}"#).unwrap();
        assert!(matches!(no_modes.into_family(), Err(Error::Spec(_))));
        let both = MetricSpecFile::parse(r#"{"kind": "conformal", "phi_modes": [], "h_modes": []}"#).unwrap();
        assert!(matches!(both.into_family(), Err(Error::Spec(_))));
    }

    #[test]
    fn inconsistent_partners_rejected() {
        let text = r#"{"kind": "conformal", "phi_modes": [
            {"m": [1, 0, 0], "re": 1.0, "im": 0.5}, {"m": [-1, 0, 0], "re": 1.0, "im": 0.5}]}"#;
        assert!(matches!(
            MetricSpecFile::parse(text).unwrap().into_family(),
            Err(Error::RealityViolation { .. })
        ));
    }

    #[test]
    fn error_reports_position() {
        let err = MetricSpecFile::parse("{\n  \"kind\": 3\n}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
