//! A-priori bounds on equilibrium departures and checks of the standing assumptions.

use serde::Serialize;

use super::{CostFunction, Network, Path};
use crate::error::{Error, Result};

const T0_STEP: f64 = 0.25;
const T0_MAX_STEPS: usize = 1_000_000;
const GRID_POINTS: usize = 1001;

/// Horizon and rate bounds used to size the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverBounds {
    /// Upper bound on the travel time along any path.
    pub t_max: f64,
    /// No equilibrium driver departs or arrives outside `[−t0, t0]`.
    pub t0: f64,
    /// Upper bound on equilibrium departure rates.
    pub kappa: f64,
    /// Support bound `t0 + G/κ` for solver iterates.
    pub horizon: f64,
    /// Shortest free-flow arc traversal time.
    pub delta_min: f64,
    pub f_max: f64,
    pub phi_prime_max: f64,
    pub psi_prime_min: f64,
}

/// `Σ_arcs (G/F_max + L/v(ρ*))`: queueing plus slowest uncongested traversal.
pub fn max_travel_time(network: &Network, path: &Path, total_demand: f64) -> f64 {
    path.arcs
        .iter()
        .map(|&a| {
            let arc = &network.arcs()[a];
            total_demand / arc.f_max() + arc.length / arc.flux.critical_speed()
        })
        .sum()
}

/// `φ'_max · F_max / ψ'_min`.
pub fn rate_bound(phi_prime_max: f64, f_max: f64, psi_prime_min: f64) -> f64 {
    phi_prime_max * f_max / psi_prime_min
}

/// Smallest multiple of the scan step `T0` such that for every group
/// `φ_k(t) + ψ_k(t) > max_j (φ_j(0) + ψ_j(t_max))` whenever `|t| ≥ T0`.
///
/// The scan proceeds outward from zero. Beyond the first passing point the
/// cost sums must keep growing outward; if they do not, the inputs are
/// reported as oscillatory rather than scanned further.
pub fn scan_t0(costs: &[(&CostFunction, &CostFunction)], t_max: f64) -> Result<f64> {
    let threshold = costs
        .iter()
        .map(|(phi, psi)| phi.value(0.0) + psi.value(t_max))
        .fold(f64::NEG_INFINITY, f64::max);
    let sum = |k: usize, t: f64| costs[k].0.value(t) + costs[k].1.value(t);
    let slope = |k: usize, t: f64| costs[k].0.derivative(t) + costs[k].1.derivative(t);
    for step in 0..=T0_MAX_STEPS {
        let t = step as f64 * T0_STEP;
        if (0..costs.len()).all(|k| sum(k, t) > threshold && sum(k, -t) > threshold) {
            let reach = 4.0 * (t + 1.0);
            for k in 0..costs.len() {
                for i in 0..GRID_POINTS {
                    let s = t + reach * i as f64 / (GRID_POINTS - 1) as f64;
                    if slope(k, s) <= 0.0 {
                        return Err(Error::OscillatoryCost { group: k, at: s });
                    }
                    if slope(k, -s) >= 0.0 {
                        return Err(Error::OscillatoryCost { group: k, at: -s });
                    }
                }
            }
            return Ok(t);
        }
    }
    Err(Error::NotCoercive {
        limit: T0_MAX_STEPS as f64 * T0_STEP,
    })
}

fn grid(lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    (0..GRID_POINTS).map(move |i| lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64)
}

pub fn compute_bounds(network: &Network) -> Result<SolverBounds> {
    let g = network.total_demand();
    let t_max = network
        .paths()
        .iter()
        .map(|p| max_travel_time(network, p, g))
        .fold(0.0, f64::max);
    let costs: Vec<_> = network
        .groups()
        .iter()
        .map(|gr| (&gr.departure_cost, &gr.arrival_cost))
        .collect();
    let t0 = scan_t0(&costs, t_max)?;
    let reach = t0 + t_max;
    let mut phi_prime_max = 0.0f64;
    let mut psi_prime_min = f64::INFINITY;
    for (phi, psi) in &costs {
        for t in grid(-reach, reach) {
            phi_prime_max = phi_prime_max.max(phi.derivative(t).abs());
            psi_prime_min = psi_prime_min.min(psi.derivative(t));
        }
    }
    if psi_prime_min <= 0.0 || !psi_prime_min.is_finite() {
        return Err(Error::AssumptionViolated(format!(
            "arrival costs must be strictly increasing on [{}, {reach}], minimum slope is {psi_prime_min}",
            -reach
        )));
    }
    if phi_prime_max <= 0.0 {
        return Err(Error::AssumptionViolated(
            "departure costs must be strictly decreasing".into(),
        ));
    }
    let f_max = network.f_max();
    let kappa = rate_bound(phi_prime_max, f_max, psi_prime_min);
    Ok(SolverBounds {
        t_max,
        t0,
        kappa,
        horizon: t0 + g / kappa,
        delta_min: network.delta_min(),
        f_max,
        phi_prime_max,
        psi_prime_min,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub item: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub window: (f64, f64),
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, item: String, failure: Option<String>) {
        self.checks.push(AssumptionCheck {
            item,
            passed: failure.is_none(),
            detail: failure.unwrap_or_else(|| "ok".into()),
        });
    }
}

/// Checks flux shape on a density grid and cost monotonicity on a time grid
/// over `window`. Never fails; the report carries the verdicts.
pub fn validate_assumptions(network: &Network, window: (f64, f64)) -> AssumptionReport {
    let mut report = AssumptionReport {
        window,
        checks: Vec::new(),
    };
    let names = network.nodes();
    for (i, arc) in network.arcs().iter().enumerate() {
        let label = format!("arc {i} ({} -> {})", names[arc.from], names[arc.to]);
        let flux = &arc.flux;
        let rho_jam = flux.rho_jam();
        let rho: Vec<f64> = grid(0.0, rho_jam).collect();
        let f: Vec<f64> = rho.iter().map(|&r| flux.eval_flux(r).unwrap_or(f64::NAN)).collect();
        let scale = flux.f_max().max(f64::MIN_POSITIVE);
        let tol = 1e-12 * scale;

        let bad = f.iter().position(|v| !(*v >= -tol));
        report.push(
            format!("{label}: flux non-negative"),
            bad.map(|j| format!("F({}) = {}", rho[j], f[j])),
        );
        let ends = f[0].abs() <= tol && f[GRID_POINTS - 1].abs() <= tol;
        report.push(
            format!("{label}: flux vanishes at 0 and jam density"),
            (!ends).then(|| format!("F(0) = {}, F(rho_jam) = {}", f[0], f[GRID_POINTS - 1])),
        );
        let bad = (1..GRID_POINTS - 1).find(|&j| f[j - 1] - 2.0 * f[j] + f[j + 1] > tol);
        report.push(
            format!("{label}: flux concave"),
            bad.map(|j| format!("positive second difference at rho = {}", rho[j])),
        );
        let rho_star = flux.rho_star();
        let bad = (1..GRID_POINTS).find(|&j| rho[j] <= rho_star && f[j] <= f[j - 1]);
        report.push(
            format!("{label}: flux strictly increasing below critical density"),
            bad.map(|j| format!("not increasing at rho = {}", rho[j])),
        );
        report.push(
            format!("{label}: positive free-flow speed"),
            (!(arc.mu() > 0.0 && arc.mu().is_finite())).then(|| format!("mu = {}", arc.mu())),
        );
    }

    let (lo, hi) = window;
    for (k, g) in network.groups().iter().enumerate() {
        let label = format!("group {k}");
        let bad = grid(lo, hi).find(|&t| g.departure_cost.derivative(t) >= 0.0);
        report.push(
            format!("{label}: departure cost decreasing"),
            bad.map(|t| format!("phi'({t}) = {}", g.departure_cost.derivative(t))),
        );
        let bad = grid(lo, hi).find(|&t| g.arrival_cost.derivative(t) <= 0.0);
        report.push(
            format!("{label}: arrival cost increasing"),
            bad.map(|t| format!("psi'({t}) = {}", g.arrival_cost.derivative(t))),
        );
        let slope = |t: f64| g.departure_cost.derivative(t) + g.arrival_cost.derivative(t);
        let coercive = slope(hi) > 0.0 && slope(lo) < 0.0;
        report.push(
            format!("{label}: total cost grows toward both window edges"),
            (!coercive).then(|| format!("slope {} at {lo}, {} at {hi}", slope(lo), slope(hi))),
        );
        for (which, cost) in [("departure", &g.departure_cost), ("arrival", &g.arrival_cost)] {
            if let CostFunction::Vickrey { .. } = cost {
                let bad = grid(lo, hi).find(|&t| {
                    let (p, dp) = cost.schedule_penalty(t).unwrap();
                    p < 0.0 || dp <= -1.0
                });
                report.push(
                    format!("{label}: {which} schedule penalty non-negative with slope above -1"),
                    bad.map(|t| format!("violated at t = {t}")),
                );
            }
        }
    }
    report
}
