//! Nash-gap diagnostics and the equilibrium solver.
//!
//! Costs are compared bin by bin through the cost of each bin's last driver
//! (see [`CostProfile::bin_cost`]). A profile is an equilibrium of the
//! discretized problem when every bin carrying mass has the smallest bin cost
//! available to its group.

use serde::Serialize;

use super::cost::{cost_profile, CostProfile};
use super::{masses, project, with_masses};
use crate::error::{Error, Result};
use crate::loading::{network_load, DepartureProfile, LoadingConfig};
use crate::network::{compute_bounds, Network, SolverBounds};

/// Bins carrying less than this fraction of their group are treated as empty.
const SUPPORT_FRACTION: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NashConfig {
    pub bins: usize,
    /// Target gap in cost units.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial step, as a fraction of the largest group size per unit of cost spread.
    pub damping: f64,
    pub loading: LoadingConfig,
}

impl Default for NashConfig {
    fn default() -> Self {
        Self {
            bins: 64,
            tol: 1e-3,
            max_iter: 5000,
            damping: 0.2,
            loading: LoadingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupGap {
    /// Largest and smallest bin cost over bins carrying this group's traffic.
    pub support_max: Option<f64>,
    pub support_min: Option<f64>,
    /// Mass-weighted mean cost on the support: the common cost `c_k`.
    pub cost: Option<f64>,
    /// Smallest bin cost over all paths and bins of the group.
    pub best: f64,
    /// Smallest sampled cost over all paths and sample times of the group.
    pub best_pointwise: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub groups: Vec<GroupGap>,
    pub gap: f64,
    pub iterations: usize,
    /// Set by the solver: whether the gap reached the tolerance.
    pub converged: bool,
    pub gap_history: Vec<f64>,
}

/// Checks that rates respect the equilibrium rate bound and that traffic
/// departs within the equilibrium window (padded by one bin).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportDiagnostics {
    pub kappa: f64,
    pub max_rate: f64,
    pub rate_bound_ok: bool,
    pub t0: f64,
    pub support: Option<(f64, f64)>,
    pub support_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NashSolution {
    pub profile: DepartureProfile,
    pub report: EquilibriumReport,
    pub bounds: SolverBounds,
    pub diagnostics: SupportDiagnostics,
}

fn support_threshold(size: f64) -> f64 {
    SUPPORT_FRACTION * size
}

pub fn gap_report(network: &Network, profile: &DepartureProfile, costs: &CostProfile) -> EquilibriumReport {
    let mut groups = Vec::with_capacity(network.groups().len());
    for (k, g) in network.groups().iter().enumerate() {
        let mut best = f64::INFINITY;
        let mut best_pointwise = f64::INFINITY;
        let mut support_max = f64::NEG_INFINITY;
        let mut support_min = f64::INFINITY;
        let mut weighted = 0.0;
        let mut mass = 0.0;
        for r in network.group_routes(k) {
            best_pointwise = costs.values[r].iter().copied().fold(best_pointwise, f64::min);
            for l in 0..profile.bins {
                let c = costs.bin_cost(r, l);
                best = best.min(c);
                let m = profile.rates[r][l] * profile.width;
                if g.size > 0.0 && m > support_threshold(g.size) {
                    support_max = support_max.max(c);
                    support_min = support_min.min(c);
                    weighted += m * c;
                    mass += m;
                }
            }
        }
        let has_support = mass > 0.0;
        groups.push(GroupGap {
            support_max: has_support.then_some(support_max),
            support_min: has_support.then_some(support_min),
            cost: has_support.then(|| weighted / mass),
            best,
            best_pointwise,
            gap: if has_support { (support_max - best).max(0.0) } else { 0.0 },
        });
    }
    let gap = groups.iter().map(|g| g.gap).fold(0.0, f64::max);
    EquilibriumReport {
        groups,
        gap,
        iterations: 0,
        converged: false,
        gap_history: Vec::new(),
    }
}

pub fn nash_gap(network: &Network, profile: &DepartureProfile, config: &LoadingConfig) -> Result<EquilibriumReport> {
    let loading = network_load(network, profile, config)?;
    let costs = cost_profile(network, profile, &loading);
    Ok(gap_report(network, profile, &costs))
}

pub fn support_diagnostics(network: &Network, profile: &DepartureProfile, bounds: &SolverBounds) -> SupportDiagnostics {
    let max_rate = profile.max_rate();
    let mut support: Option<(f64, f64)> = None;
    for (r, route) in network.routes().iter().enumerate() {
        let size = network.groups()[route.group].size;
        for l in 0..profile.bins {
            if profile.rates[r][l] * profile.width > support_threshold(size) {
                let (a, b) = (profile.bin_start(l), profile.bin_start(l + 1));
                support = Some(support.map_or((a, b), |(lo, hi)| (lo.min(a), hi.max(b))));
            }
        }
    }
    let pad = profile.width;
    let support_ok = support.map_or(true, |(a, b)| a >= -bounds.t0 - pad && b <= bounds.t0 + pad);
    SupportDiagnostics {
        kappa: bounds.kappa,
        max_rate,
        rate_bound_ok: max_rate <= bounds.kappa * (1.0 + 1e-6),
        t0: bounds.t0,
        support,
        support_ok,
    }
}

struct Evaluation {
    bin_costs: Vec<f64>,
    report: EquilibriumReport,
}

fn evaluate(network: &Network, template: &DepartureProfile, x: &[f64], config: &LoadingConfig) -> Result<Evaluation> {
    let profile = with_masses(template, x);
    let loading = network_load(network, &profile, config)?;
    let costs = cost_profile(network, &profile, &loading);
    let bin_costs = (0..network.routes().len()).flat_map(|r| costs.bin_costs(r)).collect();
    Ok(Evaluation {
        bin_costs,
        report: gap_report(network, &profile, &costs),
    })
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// Projected extragradient iteration on the bin masses of every group.
///
/// Each step moves mass away from expensive bins and paths toward cheap ones
/// while keeping every group's total fixed and every rate within `[0, 4κ]` on
/// the bin grid `[−T, T]`. The step adapts so that the cost map is contracted
/// along the extrapolation. The best iterate seen is returned.
pub fn solve_nash(network: &Network, config: &NashConfig) -> Result<NashSolution> {
    if config.bins < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 bins, got {}", config.bins)));
    }
    if !(config.tol > 0.0 && config.damping > 0.0) {
        return Err(Error::InvalidConfig("tolerance and damping must be positive".into()));
    }
    let bounds = compute_bounds(network)?;
    let template = DepartureProfile::uniform_on(network, bounds.horizon, config.bins);
    let cap = 4.0 * bounds.kappa * template.width;
    let bins = config.bins;

    let mut x = masses(&template);
    project(network, bins, &mut x, cap);
    let mut current = evaluate(network, &template, &x, &config.loading)?;
    let mut best = (current.report.gap, x.clone(), current.report.clone());
    let mut history = vec![current.report.gap];

    let spread = {
        let (lo, hi) = current
            .bin_costs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| (lo.min(c), hi.max(c)));
        (hi - lo).max(1e-12)
    };
    let largest = network.groups().iter().map(|g| g.size).fold(0.0, f64::max);
    let mut gamma = config.damping * largest.max(1e-12) / spread;
    let mut iterations = 0;

    while best.0 > config.tol && iterations < config.max_iter {
        iterations += 1;
        // extrapolate, shrinking the step until the cost map is contracted
        let (y, at_y) = loop {
            let mut y: Vec<f64> = x.iter().zip(&current.bin_costs).map(|(m, c)| m - gamma * c).collect();
            project(network, bins, &mut y, cap);
            let at_y = evaluate(network, &template, &y, &config.loading)?;
            let moved = norm(x.iter().zip(&y).map(|(a, b)| a - b));
            let change = norm(current.bin_costs.iter().zip(&at_y.bin_costs).map(|(a, b)| a - b));
            if gamma * change <= 0.9 * moved || moved == 0.0 || gamma < 1e-300 {
                if gamma * change < 0.3 * moved {
                    gamma *= 1.5;
                }
                break (y, at_y);
            }
            gamma *= 0.5;
        };
        if at_y.report.gap < best.0 {
            best = (at_y.report.gap, y.clone(), at_y.report.clone());
        }
        let mut next: Vec<f64> = x.iter().zip(&at_y.bin_costs).map(|(m, c)| m - gamma * c).collect();
        project(network, bins, &mut next, cap);
        x = next;
        current = evaluate(network, &template, &x, &config.loading)?;
        history.push(current.report.gap);
        if current.report.gap < best.0 {
            best = (current.report.gap, x.clone(), current.report.clone());
        }
    }

    let (gap, x, mut report) = best;
    let profile = with_masses(&template, &x);
    report.iterations = iterations;
    report.converged = gap <= config.tol;
    report.gap_history = history;
    let diagnostics = support_diagnostics(network, &profile, &bounds);
    Ok(NashSolution {
        profile,
        report,
        bounds,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::{ArcDescriptor, FluxDescriptor};
    use crate::network::{CostFunction, GroupDescriptor};
    use approx::assert_abs_diff_eq;

    fn vickrey() -> CostFunction {
        CostFunction::Vickrey {
            target: 1.0,
            early_rate: 0.5,
            late_rate: 2.0,
            smoothing: 1.0,
        }
    }

    fn diamond(size: f64, long: f64) -> Network {
        let f = || FluxDescriptor::triangular(1.0, 1.0, 1.0).unwrap();
        let arcs = vec![
            ArcDescriptor::new(0, 1, 1.0, f()).unwrap(),
            ArcDescriptor::new(1, 3, 1.0, f()).unwrap(),
            ArcDescriptor::new(0, 2, 1.0, f()).unwrap(),
            ArcDescriptor::new(2, 3, long, f()).unwrap(),
        ];
        let group = GroupDescriptor {
            size,
            origin: 0,
            destination: 3,
            departure_cost: CostFunction::Affine { a: 0.0, b: -1.0 },
            arrival_cost: vickrey(),
        };
        Network::new((0..4).map(|i| format!("N{i}")).collect(), arcs, vec![group]).unwrap()
    }

    #[test]
    fn zero_demand_has_zero_gap() {
        let net = diamond(0.0, 1.0);
        let p = DepartureProfile::zeros(&net, -2.0, 1.0, 4);
        let rep = nash_gap(&net, &p, &LoadingConfig::default()).unwrap();
        assert_eq!(rep.gap, 0.0);
        assert!(rep.groups[0].cost.is_none());
    }

    #[test]
    fn lopsided_profile_has_positive_gap() {
        // all traffic on the longer path while the short one is empty
        let net = diamond(0.2, 3.0);
        let mut p = DepartureProfile::zeros(&net, -2.0, 1.0, 4);
        p.rates[1] = vec![0.0, 0.2, 0.0, 0.0];
        assert_eq!(net.paths()[net.routes()[1].path].nodes, vec![0, 2, 3]);
        let rep = nash_gap(&net, &p, &LoadingConfig::default()).unwrap();
        // exhaustive oracle over every bin of both paths
        let loading = network_load(&net, &p, &LoadingConfig::default()).unwrap();
        let g = &net.groups()[0];
        let bin_cost = |path: usize, l: usize| {
            let a = -2.0 + l as f64;
            let phi = |t: f64| g.departure_cost.value(t) + g.arrival_cost.value(loading.arrival_time_path(path, t));
            phi(a + 1.0)
        };
        let used = bin_cost(net.routes()[1].path, 1);
        let best = (0..4)
            .flat_map(|l| [bin_cost(net.routes()[0].path, l), bin_cost(net.routes()[1].path, l)])
            .fold(f64::INFINITY, f64::min);
        assert!(rep.gap > 0.5);
        assert_abs_diff_eq!(rep.gap, used - best, epsilon = 1e-12);
    }

    #[test]
    fn rejects_single_bin() {
        let net = diamond(0.2, 1.0);
        let cfg = NashConfig {
            bins: 1,
            ..NashConfig::default()
        };
        assert!(solve_nash(&net, &cfg).is_err());
    }

    #[test]
    fn symmetric_diamond_splits_evenly() {
        let net = diamond(1.0, 1.0);
        let cfg = NashConfig {
            bins: 96,
            ..NashConfig::default()
        };
        let sol = solve_nash(&net, &cfg).unwrap();
        assert!(sol.report.converged, "gap {}", sol.report.gap);
        let a = sol.profile.route_mass(0);
        let b = sol.profile.route_mass(1);
        assert!((a - b).abs() <= 0.02 * (a + b));
        assert_abs_diff_eq!(a + b, 1.0, epsilon = 1e-9);
        assert!(sol.diagnostics.rate_bound_ok && sol.diagnostics.support_ok);
    }
}
