//! Network loading: from piecewise-constant departure rates to every arc's
//! entry and exit curves, their per-route compositions, and arrival times.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::curves::{exit_time, fifo_split, lax_hopf_exit, CumulativeCurve};
use crate::error::{Error, Result};
use crate::network::{max_travel_time, Network};

/// Relative mass tolerance of the admissibility check.
const MASS_TOL: f64 = 1e-9;

/// Departure rates per route, constant on each bin of a uniform grid.
///
/// Routes are indexed as in [`Network::routes`]: group by group, and within a
/// group in path order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepartureProfile {
    pub start: f64,
    pub width: f64,
    pub bins: usize,
    pub rates: Vec<Vec<f64>>,
}

impl DepartureProfile {
    pub fn zeros(network: &Network, start: f64, width: f64, bins: usize) -> Self {
        Self {
            start,
            width,
            bins,
            rates: vec![vec![0.0; bins]; network.routes().len()],
        }
    }

    /// Spreads every group evenly over all its paths and bins.
    pub fn uniform(network: &Network, start: f64, width: f64, bins: usize) -> Self {
        let mut p = Self::zeros(network, start, width, bins);
        for k in 0..network.groups().len() {
            let routes = network.group_routes(k);
            let rate = network.groups()[k].size / (routes.len() as f64 * bins as f64 * width);
            for r in routes {
                p.rates[r].fill(rate);
            }
        }
        p
    }

    /// Bin grid `[−horizon, horizon]` split into `bins` pieces, spread uniformly.
    pub fn uniform_on(network: &Network, horizon: f64, bins: usize) -> Self {
        Self::uniform(network, -horizon, 2.0 * horizon / bins as f64, bins)
    }

    pub fn end(&self) -> f64 {
        self.start + self.width * self.bins as f64
    }

    pub fn bin_start(&self, l: usize) -> f64 {
        self.start + self.width * l as f64
    }

    pub fn route_mass(&self, r: usize) -> f64 {
        self.rates[r].iter().sum::<f64>() * self.width
    }

    pub fn group_mass(&self, network: &Network, k: usize) -> f64 {
        network.group_routes(k).map(|r| self.route_mass(r)).sum()
    }

    pub fn max_rate(&self) -> f64 {
        self.rates.iter().flatten().copied().fold(0.0, f64::max)
    }

    pub fn departure_curve(&self, r: usize) -> CumulativeCurve {
        CumulativeCurve::from_rates(self.start, self.width, &self.rates[r])
    }

    /// Checks shape, sign, and that each group departs exactly its size.
    pub fn check(&self, network: &Network) -> Result<()> {
        if !(self.width.is_finite() && self.width > 0.0 && self.start.is_finite()) {
            return Err(Error::Inadmissible(format!(
                "bin grid needs a finite start and positive width, got start {} width {}",
                self.start, self.width
            )));
        }
        if self.rates.len() != network.routes().len() {
            return Err(Error::Inadmissible(format!(
                "expected rates for {} routes, got {}",
                network.routes().len(),
                self.rates.len()
            )));
        }
        for (r, row) in self.rates.iter().enumerate() {
            if row.len() != self.bins {
                return Err(Error::Inadmissible(format!(
                    "route {r} has {} rates for {} bins",
                    row.len(),
                    self.bins
                )));
            }
            if let Some(x) = row.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return Err(Error::Inadmissible(format!("route {r} has invalid rate {x}")));
            }
        }
        for (k, g) in network.groups().iter().enumerate() {
            let mass = self.group_mass(network, k);
            if (mass - g.size).abs() > MASS_TOL * g.size.max(1.0) {
                return Err(Error::Inadmissible(format!(
                    "group {k} departs {mass} vehicles but has size {}",
                    g.size
                )));
            }
        }
        Ok(())
    }

    pub fn check_rate_cap(&self, cap: f64) -> Result<()> {
        let m = self.max_rate();
        if m > cap {
            return Err(Error::Inadmissible(format!("rate {m} exceeds the cap {cap}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadingConfig {
    /// Time grid for arcs whose exit curves are not computed exactly.
    pub dt: f64,
    /// Extra time allowed beyond the a-priori travel-time bound before
    /// declaring that the network failed to drain.
    pub drain_slack: f64,
}

impl Default for LoadingConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            drain_slack: 10.0,
        }
    }
}

/// Entry and exit curves of one arc.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArcFlow {
    pub entry: CumulativeCurve,
    pub exit: CumulativeCurve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadingResult {
    /// Per arc, the aggregate flow.
    pub arcs: Vec<ArcFlow>,
    /// Per route, the flow of that route on each arc of its path, in travel order.
    pub compositions: Vec<Vec<ArcFlow>>,
    /// Per route, the departure curve.
    pub departures: Vec<CumulativeCurve>,
    path_arcs: Vec<Vec<usize>>,
    mu: Vec<f64>,
}

impl LoadingResult {
    /// Cumulative arrivals of route `r` at its destination.
    pub fn arrivals(&self, r: usize) -> &CumulativeCurve {
        &self.compositions[r].last().expect("paths are non-empty").exit
    }

    /// Arrival time of a driver who starts along path `p` at time `t`.
    pub fn arrival_time_path(&self, p: usize, t: f64) -> f64 {
        self.path_arcs[p].iter().fold(t, |tau, &a| {
            let flow = &self.arcs[a];
            exit_time(&flow.entry, &flow.exit, self.mu[a], tau)
        })
    }

    /// Exit time from arc `a` of a driver entering it at `t`.
    pub fn exit_time(&self, a: usize, t: f64) -> f64 {
        let flow = &self.arcs[a];
        exit_time(&flow.entry, &flow.exit, self.mu[a], t)
    }

    /// Departure and arrival times of the `β`-th driver of route `r`.
    pub fn per_driver_times(&self, r: usize) -> DriverTimes<'_> {
        DriverTimes {
            departure: &self.departures[r],
            arrival: self.arrivals(r),
        }
    }
}

/// Generalized inverses of one route's departure and arrival curves.
#[derive(Debug, Clone, Copy)]
pub struct DriverTimes<'a> {
    pub departure: &'a CumulativeCurve,
    pub arrival: &'a CumulativeCurve,
}

impl DriverTimes<'_> {
    pub fn departure_time(&self, beta: f64) -> Result<f64> {
        self.departure.inverse(beta)
    }

    pub fn arrival_time(&self, beta: f64) -> Result<f64> {
        self.arrival.inverse(beta)
    }
}

/// Where the entry of a route on an arc comes from.
#[derive(Debug, Clone, Copy)]
struct Use {
    route: usize,
    position: usize,
}

pub fn network_load(network: &Network, profile: &DepartureProfile, config: &LoadingConfig) -> Result<LoadingResult> {
    profile.check(network)?;
    load(network, profile, config)
}

/// Loads a profile whose group masses may differ from the group sizes, as
/// needed for finite differences of the total cost.
pub(crate) fn load_relaxed(
    network: &Network,
    profile: &DepartureProfile,
    config: &LoadingConfig,
) -> Result<LoadingResult> {
    if let Some(x) = profile.rates.iter().flatten().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::Inadmissible(format!("invalid departure rate {x}")));
    }
    load(network, profile, config)
}

fn load(network: &Network, profile: &DepartureProfile, config: &LoadingConfig) -> Result<LoadingResult> {
    if profile.rates.len() != network.routes().len() || profile.rates.iter().any(|r| r.len() != profile.bins) {
        return Err(Error::Inadmissible("profile shape does not match the network routes".into()));
    }
    if !(config.dt.is_finite() && config.dt > 0.0) {
        return Err(Error::InvalidConfig(format!("dt must be positive, got {}", config.dt)));
    }
    let arcs = network.arcs();
    let routes = network.routes();
    let paths = network.paths();

    let mut uses: Vec<Vec<Use>> = vec![Vec::new(); arcs.len()];
    for (r, route) in routes.iter().enumerate() {
        for (position, &a) in paths[route.path].arcs.iter().enumerate() {
            uses[a].push(Use { route: r, position });
        }
    }

    let departures: Vec<CumulativeCurve> = (0..routes.len()).map(|r| profile.departure_curve(r)).collect();
    let mut state = State {
        arcs: vec![ArcFlow::default(); arcs.len()],
        compositions: routes
            .iter()
            .map(|route| vec![ArcFlow::default(); paths[route.path].arcs.len()])
            .collect(),
    };

    let g = network.total_demand();
    let t_max = paths.iter().map(|p| max_travel_time(network, p, g)).fold(0.0, f64::max);
    let horizon = profile.end() + t_max + config.drain_slack;

    match arc_order(network) {
        Some(order) => {
            for a in order {
                state.update_arc(network, a, &uses[a], &departures, f64::INFINITY, config.dt)?;
            }
        }
        None => {
            // traffic on some arcs feeds back into itself: advance a window of
            // one shortest traversal time per sweep, which fixes the curves up
            // to the window end, until a full sweep changes nothing
            let step = network.delta_min();
            let mut window = profile.start + step;
            loop {
                let mut changed = false;
                let mut truncated = false;
                for a in 0..arcs.len() {
                    let (c, t) = state.update_arc(network, a, &uses[a], &departures, window, config.dt)?;
                    changed |= c;
                    truncated |= t;
                }
                if !changed && !truncated {
                    break;
                }
                if window > horizon + step {
                    return Err(drain_failure(&state, &departures, horizon));
                }
                window += step;
            }
        }
    }

    let result = LoadingResult {
        arcs: state.arcs,
        compositions: state.compositions,
        departures,
        path_arcs: paths.iter().map(|p| p.arcs.clone()).collect(),
        mu: arcs.iter().map(|a| a.mu()).collect(),
    };
    let late = (0..routes.len()).any(|r| result.arrivals(r).last_time().is_some_and(|t| t > horizon));
    if late {
        let state = State {
            arcs: result.arcs,
            compositions: result.compositions,
        };
        return Err(drain_failure(&state, &result.departures, horizon));
    }
    Ok(result)
}

fn drain_failure(state: &State, departures: &[CumulativeCurve], horizon: f64) -> Error {
    let departed: f64 = departures.iter().map(CumulativeCurve::total).sum();
    let arrived: f64 = state
        .compositions
        .iter()
        .map(|c| c.last().map_or(0.0, |f| f.exit.eval(horizon)))
        .sum();
    Error::DrainFailure {
        horizon,
        remaining: departed - arrived,
    }
}

struct State {
    arcs: Vec<ArcFlow>,
    compositions: Vec<Vec<ArcFlow>>,
}

impl State {
    /// Recomputes arc `a` from its current sources, frozen at `window`.
    /// Returns whether anything changed and whether any source was truncated.
    fn update_arc(
        &mut self,
        network: &Network,
        a: usize,
        uses: &[Use],
        departures: &[CumulativeCurve],
        window: f64,
        dt: f64,
    ) -> Result<(bool, bool)> {
        if uses.is_empty() {
            return Ok((false, false));
        }
        let mut truncated = false;
        let sources: Vec<CumulativeCurve> = uses
            .iter()
            .map(|u| {
                let src = if u.position == 0 {
                    &departures[u.route]
                } else {
                    &self.compositions[u.route][u.position - 1].exit
                };
                if src.last_time().is_some_and(|t| t > window) {
                    truncated = true;
                    src.truncated(window)
                } else {
                    src.clone()
                }
            })
            .collect();
        let entry = CumulativeCurve::sum(sources.iter());
        if entry == self.arcs[a].entry && !self.arcs[a].entry.is_zero() {
            let same = uses
                .iter()
                .zip(&sources)
                .all(|(u, s)| &self.compositions[u.route][u.position].entry == s);
            if same {
                return Ok((false, truncated));
            }
        }
        let exit = lax_hopf_exit(&entry, &network.arcs()[a], dt)?;
        let refs: Vec<&CumulativeCurve> = sources.iter().collect();
        let parts = fifo_split(&refs, &exit);
        let mut changed = self.arcs[a].exit != exit || self.arcs[a].entry != entry;
        for ((u, src), part) in uses.iter().zip(sources).zip(parts) {
            let slot = &mut self.compositions[u.route][u.position];
            changed |= slot.entry != src || slot.exit != part;
            slot.entry = src;
            slot.exit = part;
        }
        self.arcs[a] = ArcFlow { entry, exit };
        Ok((changed, truncated))
    }
}

/// Topological order of the arcs under "route goes from one arc to the next",
/// or `None` if that relation has a cycle.
fn arc_order(network: &Network) -> Option<Vec<usize>> {
    let n = network.arcs().len();
    let mut next: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indegree = vec![0usize; n];
    for path in network.paths() {
        for w in path.arcs.windows(2) {
            if !next[w[0]].contains(&w[1]) {
                next[w[0]].push(w[1]);
                indegree[w[1]] += 1;
            }
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&a| indegree[a] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(a)) = ready.pop() {
        order.push(a);
        for &b in &next[a] {
            indegree[b] -= 1;
            if indegree[b] == 0 {
                ready.push(Reverse(b));
            }
        }
    }
    (order.len() == n).then_some(order)
}
