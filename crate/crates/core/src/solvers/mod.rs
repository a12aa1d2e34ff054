//! Cost evaluation, equilibrium diagnostics, and the optimum and equilibrium solvers.

mod cost;
mod global;
mod nash;

pub use cost::{cost_profile, integrate_against, loading_cost, total_cost, CostProfile};
pub use global::{solve_global, GlobalConfig, GlobalSolution};
pub use nash::{
    gap_report, nash_gap, solve_nash, support_diagnostics, EquilibriumReport, GroupGap, NashConfig, NashSolution,
    SupportDiagnostics,
};

use crate::loading::DepartureProfile;
use crate::network::Network;

/// Bin masses `rate·width`, route-major.
pub(crate) fn masses(profile: &DepartureProfile) -> Vec<f64> {
    profile.rates.iter().flatten().map(|u| u * profile.width).collect()
}

pub(crate) fn with_masses(template: &DepartureProfile, masses: &[f64]) -> DepartureProfile {
    let mut p = template.clone();
    for (r, row) in p.rates.iter_mut().enumerate() {
        for (l, u) in row.iter_mut().enumerate() {
            *u = masses[r * template.bins + l] / template.width;
        }
    }
    p
}

/// Euclidean projection of each group's bin masses onto
/// `{ 0 ≤ m ≤ cap, Σ m = G_k }`.
pub(crate) fn project(network: &Network, bins: usize, x: &mut [f64], cap: f64) {
    for k in 0..network.groups().len() {
        let routes = network.group_routes(k);
        let block = &mut x[routes.start * bins..routes.end * bins];
        project_capped_simplex(block, network.groups()[k].size, cap);
    }
}

fn project_capped_simplex(v: &mut [f64], total: f64, cap: f64) {
    let n = v.len();
    if total <= 0.0 {
        v.fill(0.0);
        return;
    }
    let clamp = |x: f64| x.clamp(0.0, cap);
    let sum_at = |v: &[f64], lambda: f64| v.iter().map(|&x| clamp(x - lambda)).sum::<f64>();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (min - cap.min(total) - 1.0, max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sum_at(v, mid) > total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // solve exactly on the active set found by bisection
    let lambda = 0.5 * (lo + hi);
    let free: Vec<usize> = (0..n).filter(|&i| v[i] - lambda > 0.0 && v[i] - lambda < cap).collect();
    let capped = (0..n).filter(|&i| v[i] - lambda >= cap).count();
    let capped_mass = if capped == 0 { 0.0 } else { capped as f64 * cap };
    let lambda = if free.is_empty() {
        lambda
    } else {
        (free.iter().map(|&i| v[i]).sum::<f64>() + capped_mass - total) / free.len() as f64
    };
    for x in v.iter_mut() {
        *x = clamp(*x - lambda);
    }
}
