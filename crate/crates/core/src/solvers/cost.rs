//! Total cost of a loading and per-route cost profiles on the bin grid.

use rayon::prelude::*;

use crate::curves::CumulativeCurve;
use crate::error::Result;
use crate::loading::{network_load, DepartureProfile, LoadingConfig, LoadingResult};
use crate::network::{CostFunction, Network};

/// `∫ cost dV` for a piecewise-linear cumulative curve, integrated exactly per piece.
pub fn integrate_against(cost: &CostFunction, curve: &CumulativeCurve) -> f64 {
    curve.segments().map(|s| s.rate() * cost.integral(s.t0, s.t1)).sum()
}

/// `J = Σ_routes ∫ φ_k dU^depart + ∫ ψ_k dU^arrive`.
pub fn loading_cost(network: &Network, loading: &LoadingResult) -> f64 {
    network
        .routes()
        .iter()
        .enumerate()
        .map(|(r, route)| {
            let g = &network.groups()[route.group];
            integrate_against(&g.departure_cost, &loading.departures[r])
                + integrate_against(&g.arrival_cost, loading.arrivals(r))
        })
        .sum()
}

pub fn total_cost(network: &Network, profile: &DepartureProfile, config: &LoadingConfig) -> Result<f64> {
    let loading = network_load(network, profile, config)?;
    Ok(loading_cost(network, &loading))
}

/// `Φ_{k,p}(t) = φ_k(t) + ψ_k(τ_p(t))` sampled at every bin endpoint and midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct CostProfile {
    pub start: f64,
    pub width: f64,
    pub bins: usize,
    /// Per route, `2·bins + 1` samples at `start + i·width/2`.
    pub values: Vec<Vec<f64>>,
}

impl CostProfile {
    pub fn sample_time(&self, i: usize) -> f64 {
        self.start + 0.5 * self.width * i as f64
    }

    /// Cost of the last driver leaving in bin `l` of route `r`, i.e. `Φ` at the
    /// bin's right edge.
    ///
    /// Symmetric rules such as the bin average are blind to alternating rate
    /// patterns: under a queue, raising one bin and lowering the next by the
    /// same mass shifts every later average equally, so checkerboard profiles
    /// pass as equilibria. The right edge sees the whole bin's mass ahead of it,
    /// which removes that mode.
    pub fn bin_cost(&self, r: usize, l: usize) -> f64 {
        self.values[r][2 * l + 2]
    }

    pub fn bin_costs(&self, r: usize) -> Vec<f64> {
        (0..self.bins).map(|l| self.bin_cost(r, l)).collect()
    }
}

pub fn cost_profile(network: &Network, profile: &DepartureProfile, loading: &LoadingResult) -> CostProfile {
    let values = network
        .routes()
        .par_iter()
        .map(|route| {
            let g = &network.groups()[route.group];
            (0..=2 * profile.bins)
                .map(|i| {
                    let t = profile.start + 0.5 * profile.width * i as f64;
                    g.departure_cost.value(t) + g.arrival_cost.value(loading.arrival_time_path(route.path, t))
                })
                .collect()
        })
        .collect();
    CostProfile {
        start: profile.start,
        width: profile.width,
        bins: profile.bins,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::{ArcDescriptor, FluxDescriptor};
    use crate::network::GroupDescriptor;
    use approx::assert_abs_diff_eq;

    fn one_arc(flux: FluxDescriptor, length: f64, size: f64, arrival_cost: CostFunction) -> Network {
        let arc = ArcDescriptor::new(0, 1, length, flux).unwrap();
        let group = GroupDescriptor {
            size,
            origin: 0,
            destination: 1,
            departure_cost: CostFunction::Affine { a: 0.0, b: -1.0 },
            arrival_cost,
        };
        Network::new(vec!["A".into(), "B".into()], vec![arc], vec![group]).unwrap()
    }

    #[test]
    fn zero_demand_costs_nothing() {
        let net = one_arc(
            FluxDescriptor::greenshields(1.0, 1.0).unwrap(),
            1.0,
            0.0,
            CostFunction::Affine { a: 0.0, b: 1.0 },
        );
        let p = DepartureProfile::zeros(&net, 0.0, 1.0, 3);
        assert_eq!(total_cost(&net, &p, &LoadingConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn free_flow_costs_telescope() {
        // μ = 1 and no queue: every driver pays −t + (t + 1) = 1
        let net = one_arc(
            FluxDescriptor::triangular(1.0, 1.0, 1.0).unwrap(),
            1.0,
            0.1,
            CostFunction::Affine { a: 0.0, b: 1.0 },
        );
        let p = DepartureProfile::uniform(&net, 0.0, 1.0, 1);
        assert_abs_diff_eq!(total_cost(&net, &p, &LoadingConfig::default()).unwrap(), 0.1, epsilon = 1e-15);
        let loading = network_load(&net, &p, &LoadingConfig::default()).unwrap();
        let cp = cost_profile(&net, &p, &loading);
        for v in &cp.values[0] {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn congested_cost_matches_riemann_sum() {
        let psi = CostFunction::Quadratic { a: 0.0, b: 1.0, c: 0.2 };
        let net = one_arc(FluxDescriptor::greenshields(1.0, 1.0).unwrap(), 1.0, 0.6, psi.clone());
        let mut p = DepartureProfile::zeros(&net, 0.0, 1.0, 2);
        p.rates[0] = vec![0.5, 0.1];
        let loading = network_load(&net, &p, &LoadingConfig::default()).unwrap();
        let j = loading_cost(&net, &loading);
        let times = loading.per_driver_times(0);
        let n = 100_000;
        let db = 0.6 / n as f64;
        let riemann: f64 = (0..n)
            .map(|i| {
                let beta = (i as f64 + 0.5) * db;
                -times.departure_time(beta).unwrap() + psi.value(times.arrival_time(beta).unwrap())
            })
            .sum::<f64>()
            * db;
        assert_abs_diff_eq!(j, riemann, epsilon = 1e-5);

        // the cost profile agrees with direct recomputation
        let cp = cost_profile(&net, &p, &loading);
        for i in 0..=4 {
            let t = cp.sample_time(i);
            let direct = -t + psi.value(loading.arrival_time_path(0, t));
            assert_abs_diff_eq!(cp.values[0][i], direct, epsilon = 0.0);
        }
    }
}
