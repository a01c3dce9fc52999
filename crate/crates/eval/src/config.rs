//! Evaluation configuration: one JSON document with a section per protocol.

use serde::{Deserialize, Serialize};
use zonegraph::atlas::GovernanceParams;
use zonegraph::propagation::PropagationParams;
use zonegraph::{Error, Result};

use crate::generators::{Family, GeneratorConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    P1,
    P2,
    P3,
    P4,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [Protocol::P1, Protocol::P2, Protocol::P3, Protocol::P4];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::P1 => "p1",
            Protocol::P2 => "p2",
            Protocol::P3 => "p3",
            Protocol::P4 => "p4",
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p1" => Ok(Protocol::P1),
            "p2" => Ok(Protocol::P2),
            "p3" => Ok(Protocol::P3),
            "p4" => Ok(Protocol::P4),
            other => Err(Error::Validation(format!("unknown protocol {other:?}"))),
        }
    }
}

/// Propagation settings shared by the protocol sections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Solver {
    pub alpha: f64,
    pub eta: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for Solver {
    fn default() -> Self {
        Self {
            alpha: 0.6,
            eta: 1.0,
            tol: 1e-6,
            max_iter: 2000,
        }
    }
}

impl Solver {
    /// Structure-prior parameters for this solver.
    pub fn params(&self) -> PropagationParams {
        PropagationParams {
            tol: self.tol,
            max_iter: self.max_iter,
            ..PropagationParams::new(self.alpha, self.eta)
        }
    }
}

fn generator(family: Family) -> GeneratorConfig {
    GeneratorConfig {
        family,
        ..GeneratorConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct P1Config {
    pub generator: GeneratorConfig,
    pub alphas: Vec<f64>,
    pub etas: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for P1Config {
    fn default() -> Self {
        Self {
            generator: generator(Family::G1),
            alphas: vec![0.2, 0.4, 0.6, 0.8],
            etas: vec![0.0, 0.5, 1.0],
            tol: 1e-6,
            max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct P2Config {
    pub generator: GeneratorConfig,
    pub solver: Solver,
    pub quantiles: Vec<f64>,
    pub governance: GovernanceParams,
    pub louvain_resolution: f64,
}

impl Default for P2Config {
    fn default() -> Self {
        Self {
            generator: generator(Family::G2),
            solver: Solver::default(),
            quantiles: (0..=12).map(|i| (30 + 5 * i) as f64 / 100.0).collect(),
            governance: GovernanceParams::default(),
            louvain_resolution: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct P3Config {
    pub generator: GeneratorConfig,
    pub solver: Solver,
    pub quantile: f64,
    pub jitter_scales: Vec<f64>,
    pub governance: GovernanceParams,
    pub histogram_bins: usize,
}

impl Default for P3Config {
    fn default() -> Self {
        Self {
            generator: generator(Family::G2),
            solver: Solver::default(),
            quantile: 0.75,
            jitter_scales: vec![0.0, 0.05],
            governance: GovernanceParams::default(),
            histogram_bins: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct P4Config {
    pub generator: GeneratorConfig,
    pub solver: Solver,
    pub quantile: f64,
    /// Total shock mass `m`, spread evenly over the targets.
    pub masses: Vec<f64>,
    pub targets: usize,
    pub kappa: f64,
    pub rho_shock: f64,
    pub delta_margin: Option<f64>,
    pub governance: GovernanceParams,
    /// When set, the same shocks also run on this planted-zone family to
    /// measure false collapse.
    pub false_collapse: Option<GeneratorConfig>,
}

impl Default for P4Config {
    fn default() -> Self {
        Self {
            generator: generator(Family::G3),
            solver: Solver::default(),
            quantile: 0.75,
            masses: vec![0.0, 0.1, 0.2, 0.3, 0.4],
            targets: 40,
            kappa: 0.5,
            rho_shock: 1.0,
            delta_margin: None,
            governance: GovernanceParams::default(),
            false_collapse: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub base_seed: u64,
    pub seeds: usize,
    /// Worker threads; `None` uses all cores.
    pub workers: Option<usize>,
    pub p1: P1Config,
    pub p2: P2Config,
    pub p3: P3Config,
    pub p4: P4Config,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            base_seed: 1,
            seeds: 30,
            workers: None,
            p1: P1Config::default(),
            p2: P2Config::default(),
            p3: P3Config::default(),
            p4: P4Config::default(),
        }
    }
}

fn family_check(protocol: Protocol, cfg: &GeneratorConfig, want: Family) -> Result<()> {
    if cfg.family != want {
        return Err(Error::Validation(format!(
            "protocol {protocol} runs on {want:?} graphs, config has {:?}",
            cfg.family
        )));
    }
    cfg.validate()
}

fn unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} = {v} not in [0, 1]")))
    }
}

fn nonempty<T>(name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        Err(Error::Validation(format!("{name} must not be empty")))
    } else {
        Ok(())
    }
}

impl EvalConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.base_seed + i).collect()
    }

    /// Checks the section for `protocol` and the shared fields.
    pub fn validate(&self, protocol: Protocol) -> Result<()> {
        if self.seeds == 0 {
            return Err(Error::Validation("at least one seed is required".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Validation("workers must be positive".into()));
        }
        match protocol {
            Protocol::P1 => {
                let c = &self.p1;
                family_check(protocol, &c.generator, Family::G1)?;
                nonempty("alphas", &c.alphas)?;
                nonempty("etas", &c.etas)?;
                for &a in &c.alphas {
                    for &e in &c.etas {
                        PropagationParams {
                            tol: c.tol,
                            max_iter: c.max_iter,
                            ..PropagationParams::new(a, e)
                        }
                        .validate()?;
                    }
                }
            }
            Protocol::P2 => {
                let c = &self.p2;
                family_check(protocol, &c.generator, Family::G2)?;
                c.solver.params().validate()?;
                c.governance.validate()?;
                nonempty("quantiles", &c.quantiles)?;
                for &q in &c.quantiles {
                    unit("quantile", q)?;
                }
                if !(c.louvain_resolution > 0.0) {
                    return Err(Error::Validation(
                        "louvain_resolution must be positive".into(),
                    ));
                }
            }
            Protocol::P3 => {
                let c = &self.p3;
                family_check(protocol, &c.generator, Family::G2)?;
                c.solver.params().validate()?;
                c.governance.validate()?;
                unit("quantile", c.quantile)?;
                nonempty("jitter_scales", &c.jitter_scales)?;
                if c.jitter_scales
                    .iter()
                    .any(|&s| !(s >= 0.0 && s.is_finite()))
                {
                    return Err(Error::Validation(
                        "jitter scales must be finite and >= 0".into(),
                    ));
                }
                if c.histogram_bins == 0 {
                    return Err(Error::Validation("histogram_bins must be positive".into()));
                }
            }
            Protocol::P4 => {
                let c = &self.p4;
                family_check(protocol, &c.generator, Family::G3)?;
                if let Some(g) = &c.false_collapse {
                    family_check(protocol, g, Family::G2)?;
                    if c.targets > g.n {
                        return Err(Error::Validation(format!(
                            "{} shock targets exceed the {} nodes of the planted-zone graph",
                            c.targets, g.n
                        )));
                    }
                }
                c.solver.params().validate()?;
                c.governance.validate()?;
                unit("quantile", c.quantile)?;
                nonempty("masses", &c.masses)?;
                if c.targets == 0 || c.targets > c.generator.n {
                    return Err(Error::Validation(format!(
                        "targets = {} must lie in 1..={}",
                        c.targets, c.generator.n
                    )));
                }
                for &m in &c.masses {
                    if !(m >= 0.0 && m / c.targets as f64 <= 1.0) {
                        return Err(Error::Validation(format!(
                            "shock mass {m} gives per-node strength outside [0, 1]"
                        )));
                    }
                }
                zonegraph::dynamics::ShockSpec {
                    targets: Vec::new(),
                    kappa: c.kappa,
                    rho_shock: c.rho_shock,
                    delta_margin: c.delta_margin,
                }
                .validate(0)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = EvalConfig::default();
        for p in Protocol::ALL {
            c.validate(p).unwrap();
        }
        assert_eq!(c.seed_list().len(), 30);
        assert_eq!(c.p2.quantiles.len(), 13);
        assert_eq!(c.p2.quantiles[12], 0.9);
    }

    #[test]
    fn wrong_family_is_rejected() {
        let mut c = EvalConfig::default();
        c.p1.generator.family = Family::G2;
        assert!(c.validate(Protocol::P1).is_err());
        c.p4.false_collapse = Some(GeneratorConfig::new(Family::G1, 100, 0));
        assert!(c.validate(Protocol::P4).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(EvalConfig::from_json(r#"{"seeds": 3, "bogus": 1}"#).is_err());
        assert!(EvalConfig::from_json(r#"{"p2": {"quantile": 0.5}}"#).is_err());
        let c = EvalConfig::from_json(r#"{"seeds": 3, "p1": {"alphas": [0.5]}}"#).unwrap();
        assert_eq!(c.seeds, 3);
        assert_eq!(c.p1.alphas, vec![0.5]);
        assert_eq!(c.p1.etas.len(), 3);
    }

    #[test]
    fn protocol_names_round_trip() {
        for p in Protocol::ALL {
            assert_eq!(p.name().parse::<Protocol>().unwrap(), p);
        }
        assert!("p5".parse::<Protocol>().is_err());
    }
}
