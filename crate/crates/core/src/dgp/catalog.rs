//! Named DGP catalogs in TOML.
//!
//! ```toml
//! [dgp.null]
//! density = "uniform"          # or "truncated_gaussian" (needs mean, sd)
//! support = [-1.0, 1.0]
//! mu_minus = [0.0, 0.5]        # c0 + c1 z + c2 z² + c3 z³; missing terms are 0
//! mu_plus = [0.0, 0.5]
//! var_minus = 1.0              # a constant or [q0, q1, q2]
//! var_plus = 1.0
//! kappa = 0.5
//!
//! [splice.adversary]
//! outer = "alt"
//! inner = "null"
//! mass = 1e-4                  # or epsilon_tilde = 0.01
//! ```

use std::collections::BTreeMap;

use serde::Deserialize;

use super::{epsilon_tilde_from_mass, splice, Cubic, Density, Dgp, Law, Quadratic};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum VarianceSpec {
    Constant(f64),
    Quadratic(Vec<f64>),
}

impl VarianceSpec {
    fn to_quadratic(&self) -> Result<Quadratic> {
        match self {
            VarianceSpec::Constant(c) => Ok(Quadratic::constant(*c)),
            VarianceSpec::Quadratic(c) => Quadratic::from_slice(c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityFamily {
    Uniform,
    TruncatedGaussian,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpEntry {
    pub density: DensityFamily,
    pub support: [f64; 2],
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub mu_minus: Vec<f64>,
    pub mu_plus: Vec<f64>,
    pub var_minus: VarianceSpec,
    pub var_plus: VarianceSpec,
    pub kappa: f64,
}

impl DgpEntry {
    pub fn to_dgp(&self) -> Result<Dgp> {
        let [a, b] = self.support;
        let density = match self.density {
            DensityFamily::Uniform => {
                if self.mean.is_some() || self.sd.is_some() {
                    return Err(Error::InvalidDgp("uniform density takes no mean or sd".into()));
                }
                Density::Uniform { a, b }
            }
            DensityFamily::TruncatedGaussian => match (self.mean, self.sd) {
                (Some(mean), Some(sd)) => Density::TruncatedGaussian { mean, sd, a, b },
                _ => {
                    return Err(Error::InvalidDgp(
                        "truncated_gaussian density needs mean and sd".into(),
                    ))
                }
            },
        };
        Dgp::new(
            density,
            Cubic::from_slice(&self.mu_minus)?,
            Cubic::from_slice(&self.mu_plus)?,
            self.var_minus.to_quadratic()?,
            self.var_plus.to_quadratic()?,
            self.kappa,
        )
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpliceEntry {
    pub outer: String,
    pub inner: String,
    pub mass: Option<f64>,
    pub epsilon_tilde: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogFile {
    #[serde(default)]
    pub dgp: BTreeMap<String, DgpEntry>,
    #[serde(default)]
    pub splice: BTreeMap<String, SpliceEntry>,
}

/// Resolved laws, keyed by name.
pub type Catalog = BTreeMap<String, Law>;

impl CatalogFile {
    pub fn resolve(&self) -> Result<Catalog> {
        let mut out = Catalog::new();
        for (name, entry) in &self.dgp {
            let dgp = entry
                .to_dgp()
                .map_err(|e| Error::Catalog(format!("dgp.{name}: {e}")))?;
            out.insert(name.clone(), Law::Plain(dgp));
        }
        for (name, entry) in &self.splice {
            if out.contains_key(name) {
                return Err(Error::Catalog(format!("duplicate name {name}")));
            }
            let law = resolve_splice(&self.dgp, entry)
                .map_err(|e| Error::Catalog(format!("splice.{name}: {e}")))?;
            out.insert(name.clone(), law);
        }
        Ok(out)
    }
}

fn resolve_splice(dgps: &BTreeMap<String, DgpEntry>, entry: &SpliceEntry) -> Result<Law> {
    let lookup = |n: &str| {
        dgps.get(n)
            .ok_or_else(|| Error::Catalog(format!("unknown dgp {n}")))
            .and_then(DgpEntry::to_dgp)
    };
    let outer = lookup(&entry.outer)?;
    let inner = lookup(&entry.inner)?;
    let radius = match (entry.mass, entry.epsilon_tilde) {
        (Some(m), None) => epsilon_tilde_from_mass(&outer, m)?,
        (None, Some(r)) => r,
        _ => return Err(Error::Catalog("give exactly one of mass or epsilon_tilde".into())),
    };
    Ok(Law::Spliced(splice(&outer, &inner, radius)?))
}

pub fn parse_catalog(text: &str) -> Result<Catalog> {
    let file: CatalogFile = toml::from_str(text).map_err(|e| Error::Catalog(e.to_string()))?;
    file.resolve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::ConditionalLaw;

    const TEXT: &str = r#"
[dgp.null]
density = "uniform"
support = [-1.0, 1.0]
mu_minus = [0.0, 0.5]
mu_plus = [0.0, 0.5, 0.0, 1.0]
var_minus = 1.0
var_plus = [1.0, 0.1, 0.2]
kappa = 0.5

[dgp.alt]
density = "uniform"
support = [-1.0, 1.0]
mu_minus = [0.0, 0.5]
mu_plus = [2.0, 0.5]
var_minus = 1.0
var_plus = 1.0
kappa = 0.5

[dgp.tg]
density = "truncated_gaussian"
support = [-2.0, 3.0]
mean = 0.2
sd = 1.0
mu_minus = [1.0]
mu_plus = [1.0]
var_minus = 0.5
var_plus = 0.5
kappa = 1.0

[splice.adv]
outer = "alt"
inner = "null"
mass = 0.01
"#;

    #[test]
    fn parses_plain_and_spliced() {
        let cat = parse_catalog(TEXT).unwrap();
        assert_eq!(cat.len(), 4);
        let null = cat["null"].local();
        assert_eq!(null.mu_plus.0, [0.0, 0.5, 0.0, 1.0]);
        assert_eq!(null.var_plus.0, [1.0, 0.1, 0.2]);
        match &cat["adv"] {
            Law::Spliced(s) => {
                assert!((s.epsilon_tilde - 0.01).abs() < 1e-15);
                assert_eq!(s.theta(), 0.0);
            }
            other => panic!("expected a splice, got {other:?}"),
        }
        assert!(matches!(cat["tg"].local().density, Density::TruncatedGaussian { .. }));
    }

    #[test]
    fn rejects_unknown_fields_and_names() {
        let bad = TEXT.replace("kappa = 1.0", "kappa = 1.0\nbandwidth = 3");
        assert!(matches!(parse_catalog(&bad), Err(Error::Catalog(_))));
        let bad = TEXT.replace("outer = \"alt\"", "outer = \"nope\"");
        let err = parse_catalog(&bad).unwrap_err();
        assert!(err.to_string().contains("nope"), "{err}");
        let bad = TEXT.replace("mass = 0.01", "mass = 0.01\nepsilon_tilde = 0.2");
        assert!(parse_catalog(&bad).is_err());
    }

    #[test]
    fn invalid_parameters_are_reported_by_name() {
        let bad = TEXT.replace("mu_minus = [1.0]", "mu_minus = [1.0, 2.0, 3.0, 4.0, 5.0]");
        let err = parse_catalog(&bad).unwrap_err().to_string();
        assert!(err.contains("dgp.tg"), "{err}");
        let bad = TEXT.replace("mean = 0.2\n", "");
        assert!(parse_catalog(&bad).is_err());
    }
}
