//! Scenario files: JSON with a `"format": 1` version tag.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use kinwave_core::flux::{ArcDescriptor, FluxDescriptor};
use kinwave_core::loading::{DepartureProfile, LoadingConfig};
use kinwave_core::network::{CostFunction, GroupDescriptor, Network};
use kinwave_core::solvers::{GlobalConfig, NashConfig};
use serde::{Deserialize, Serialize};

pub const FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub format: u32,
    pub nodes: Vec<String>,
    pub arcs: Vec<ArcSpec>,
    pub groups: Vec<GroupSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub output: OutputSpec,
    /// Departure rates for `load`, routes in group-major path order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<DepartureProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcSpec {
    pub from: String,
    pub to: String,
    pub length: f64,
    pub flux: FluxDescriptor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub size: f64,
    pub origin: String,
    pub destination: String,
    pub departure_cost: CostFunction,
    pub arrival_cost: CostFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub bins: usize,
    pub dt: f64,
    pub drain_slack: f64,
    pub tol: f64,
    pub damping: f64,
    /// Defaults to 5000 for `nash` and 500 for `opt`.
    pub max_iter: Option<usize>,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let nash = NashConfig::default();
        let global = GlobalConfig::default();
        Self {
            bins: nash.bins,
            dt: nash.loading.dt,
            drain_slack: nash.loading.drain_slack,
            tol: nash.tol,
            damping: nash.damping,
            max_iter: None,
            restarts: global.restarts,
            seed: global.seed,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dump_curves: bool,
    pub emit_plot_data: bool,
}

impl SolverSpec {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            bail!("solver.bins must be at least 2, got {}", self.bins);
        }
        for (name, v) in [
            ("dt", self.dt),
            ("drain_slack", self.drain_slack),
            ("tol", self.tol),
            ("damping", self.damping),
        ] {
            if !(v.is_finite() && v > 0.0) {
                bail!("solver.{name} must be positive and finite, got {v}");
            }
        }
        if self.restarts == 0 {
            bail!("solver.restarts must be at least 1");
        }
        Ok(())
    }

    pub fn loading(&self) -> LoadingConfig {
        LoadingConfig {
            dt: self.dt,
            drain_slack: self.drain_slack,
        }
    }

    pub fn nash(&self) -> NashConfig {
        let d = NashConfig::default();
        NashConfig {
            bins: self.bins,
            tol: self.tol,
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            damping: self.damping,
            loading: self.loading(),
        }
    }

    pub fn global(&self) -> GlobalConfig {
        let d = GlobalConfig::default();
        GlobalConfig {
            bins: self.bins,
            tol: self.tol,
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            restarts: self.restarts,
            seed: self.seed,
            loading: self.loading(),
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("at `{path}`: {}", e.into_inner())
        })?;
        if scenario.format != FORMAT {
            bail!("at `format`: unsupported scenario format {}, expected {FORMAT}", scenario.format);
        }
        scenario.solver.validate()?;
        Ok(scenario)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read scenario {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("invalid scenario {}", path.display()))
    }

    /// Resolves node ids and validates the topology.
    pub fn network(&self) -> Result<Network> {
        let index = |what: &str, id: &str| {
            self.nodes
                .iter()
                .position(|n| n == id)
                .with_context(|| format!("{what} references unknown node \"{id}\""))
        };
        let arcs = self
            .arcs
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let from = index(&format!("arcs[{i}].from"), &a.from)?;
                let to = index(&format!("arcs[{i}].to"), &a.to)?;
                ArcDescriptor::new(from, to, a.length, a.flux.clone()).with_context(|| format!("arcs[{i}]"))
            })
            .collect::<Result<Vec<_>>>()?;
        let groups = self
            .groups
            .iter()
            .enumerate()
            .map(|(k, g)| {
                Ok(GroupDescriptor {
                    size: g.size,
                    origin: index(&format!("groups[{k}].origin"), &g.origin)?,
                    destination: index(&format!("groups[{k}].destination"), &g.destination)?,
                    departure_cost: g.departure_cost.clone(),
                    arrival_cost: g.arrival_cost.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Network::new(self.nodes.clone(), arcs, groups)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "format": 1,
        "nodes": ["A", "B"],
        "arcs": [{"from": "A", "to": "B", "length": 1.0,
                  "flux": {"kind": "greenshields", "v_free": 1.0, "rho_jam": 1.0}}],
        "groups": [{"size": 0.5, "origin": "A", "destination": "B",
                    "departure_cost": {"kind": "affine", "a": 0.0, "b": -1.0},
                    "arrival_cost": {"kind": "vickrey", "target": 1.0, "early_rate": 0.5, "late_rate": 2.0}}]
    }"#;

    #[test]
    fn parses_minimal() {
        let s = Scenario::from_json(MINIMAL).unwrap();
        let net = s.network().unwrap();
        assert_eq!(net.arcs().len(), 1);
        assert_eq!(net.groups().len(), 1);
        assert_eq!(s.solver, SolverSpec::default());
    }

    #[test]
    fn unknown_key_is_located() {
        let text = MINIMAL.replace("\"length\": 1.0", "\"length\": 1.0, \"lanes\": 2");
        let msg = format!("{:#}", Scenario::from_json(&text).unwrap_err());
        assert!(msg.contains("arcs[0]") && msg.contains("lanes"), "{msg}");
    }

    #[test]
    fn dangling_node_is_named() {
        let text = MINIMAL.replace("\"to\": \"B\"", "\"to\": \"Z\"");
        let msg = format!("{:#}", Scenario::from_json(&text).unwrap().network().unwrap_err());
        assert!(msg.contains("\"Z\""), "{msg}");
    }

    #[test]
    fn rejects_other_formats() {
        let text = MINIMAL.replace("\"format\": 1", "\"format\": 2");
        assert!(Scenario::from_json(&text).is_err());
    }

    #[test]
    fn invalid_flux_is_located() {
        let text = MINIMAL.replace("\"v_free\": 1.0", "\"v_free\": -1.0");
        let msg = format!("{:#}", Scenario::from_json(&text).unwrap_err());
        assert!(msg.contains("arcs[0].flux") && msg.contains("v_free"), "{msg}");
    }
}
