//! Network topology, driver groups, and loop-free path enumeration.

mod bounds;
mod cost;

pub use bounds::{
    compute_bounds, max_travel_time, rate_bound, scan_t0, validate_assumptions, AssumptionCheck, AssumptionReport,
    SolverBounds,
};
pub use cost::CostFunction;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::flux::ArcDescriptor;

/// A population of drivers sharing origin, destination, and costs.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupDescriptor {
    pub size: f64,
    pub origin: usize,
    pub destination: usize,
    pub departure_cost: CostFunction,
    pub arrival_cost: CostFunction,
}

/// A loop-free chain of arcs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    /// Visited nodes, origin first.
    pub nodes: Vec<usize>,
    /// Arc indices in travel order.
    pub arcs: Vec<usize>,
}

impl Path {
    pub fn origin(&self) -> usize {
        self.nodes[0]
    }

    pub fn destination(&self) -> usize {
        *self.nodes.last().unwrap()
    }
}

/// A (group, path) pair that may carry departures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Route {
    pub group: usize,
    pub path: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    nodes: Vec<String>,
    arcs: Vec<ArcDescriptor>,
    groups: Vec<GroupDescriptor>,
    paths: Vec<Path>,
    group_paths: Vec<Vec<usize>>,
    routes: Vec<Route>,
}

impl Network {
    pub fn new(nodes: Vec<String>, arcs: Vec<ArcDescriptor>, groups: Vec<GroupDescriptor>) -> Result<Self> {
        let mut seen_nodes = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if seen_nodes.insert(n.as_str(), i).is_some() {
                return Err(Error::InvalidNetwork(format!("duplicate node id {n:?}")));
            }
        }
        let mut pairs = HashMap::new();
        for (i, a) in arcs.iter().enumerate() {
            if a.from >= nodes.len() || a.to >= nodes.len() {
                return Err(Error::InvalidNetwork(format!("arc {i} references a node index out of range")));
            }
            if a.from == a.to {
                return Err(Error::InvalidNetwork(format!("arc {i} is a self-loop at {:?}", nodes[a.from])));
            }
            if pairs.insert((a.from, a.to), i).is_some() {
                return Err(Error::InvalidNetwork(format!(
                    "more than one arc from {:?} to {:?}",
                    nodes[a.from], nodes[a.to]
                )));
            }
        }
        for (k, g) in groups.iter().enumerate() {
            if !(g.size.is_finite() && g.size >= 0.0) {
                return Err(Error::InvalidNetwork(format!("group {k} has invalid size {}", g.size)));
            }
            if g.origin >= nodes.len() || g.destination >= nodes.len() {
                return Err(Error::InvalidNetwork(format!("group {k} references a node index out of range")));
            }
            if g.origin == g.destination {
                return Err(Error::InvalidNetwork(format!("group {k} has origin equal to destination")));
            }
            g.departure_cost.validate()?;
            g.arrival_cost.validate()?;
        }

        let paths = enumerate_paths(nodes.len(), &arcs, &groups);
        let mut group_paths = Vec::with_capacity(groups.len());
        for (k, g) in groups.iter().enumerate() {
            let ps: Vec<usize> = (0..paths.len())
                .filter(|&p| paths[p].origin() == g.origin && paths[p].destination() == g.destination)
                .collect();
            if ps.is_empty() {
                return Err(Error::NoViablePath {
                    group: k,
                    origin: nodes[g.origin].clone(),
                    destination: nodes[g.destination].clone(),
                });
            }
            group_paths.push(ps);
        }
        let routes = group_paths
            .iter()
            .enumerate()
            .flat_map(|(k, ps)| ps.iter().map(move |&p| Route { group: k, path: p }))
            .collect();
        Ok(Self {
            nodes,
            arcs,
            groups,
            paths,
            group_paths,
            routes,
        })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[ArcDescriptor] {
        &self.arcs
    }

    pub fn groups(&self) -> &[GroupDescriptor] {
        &self.groups
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    /// Indices into [`Network::paths`] of the paths serving group `k`.
    pub fn group_paths(&self, k: usize) -> &[usize] {
        &self.group_paths[k]
    }

    /// All (group, path) pairs, grouped by group and in path order.
    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    /// Indices into [`Network::routes`] belonging to group `k`.
    pub fn group_routes(&self, k: usize) -> std::ops::Range<usize> {
        let start: usize = self.group_paths[..k].iter().map(Vec::len).sum();
        start..start + self.group_paths[k].len()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == id)
    }

    pub fn total_demand(&self) -> f64 {
        self.groups.iter().map(|g| g.size).sum()
    }

    /// Largest capacity over all arcs.
    pub fn f_max(&self) -> f64 {
        self.arcs.iter().map(ArcDescriptor::f_max).fold(0.0, f64::max)
    }

    /// Shortest free-flow traversal time over all arcs.
    pub fn delta_min(&self) -> f64 {
        self.arcs.iter().map(ArcDescriptor::mu).fold(f64::INFINITY, f64::min)
    }

    /// Human-readable path listing, one path per line.
    pub fn describe_paths(&self) -> String {
        let mut out = String::new();
        for (k, ps) in self.group_paths.iter().enumerate() {
            for &p in ps {
                let names: Vec<&str> = self.paths[p].nodes.iter().map(|&n| self.nodes[n].as_str()).collect();
                out.push_str(&format!("group {k} path {p}: {}\n", names.join(" -> ")));
            }
        }
        out
    }
}

/// All loop-free arc chains joining the origin/destination pairs of `groups`,
/// in lexicographic order of node sequences and without duplicates.
pub fn enumerate_paths(node_count: usize, arcs: &[ArcDescriptor], groups: &[GroupDescriptor]) -> Vec<Path> {
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); node_count];
    for (i, a) in arcs.iter().enumerate() {
        adjacency[a.from].push((a.to, i));
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }
    let mut pairs: Vec<(usize, usize)> = groups.iter().map(|g| (g.origin, g.destination)).collect();
    pairs.sort_unstable();
    pairs.dedup();

    let mut paths = Vec::new();
    for (o, d) in pairs {
        let mut nodes = vec![o];
        let mut arc_stack = Vec::new();
        let mut visited = vec![false; node_count];
        visited[o] = true;
        dfs(&adjacency, d, &mut nodes, &mut arc_stack, &mut visited, &mut paths);
    }
    paths.sort_by(|a, b| a.nodes.cmp(&b.nodes));
    paths
}

fn dfs(
    adjacency: &[Vec<(usize, usize)>],
    target: usize,
    nodes: &mut Vec<usize>,
    arcs: &mut Vec<usize>,
    visited: &mut [bool],
    out: &mut Vec<Path>,
) {
    let here = *nodes.last().unwrap();
    if here == target {
        out.push(Path {
            nodes: nodes.clone(),
            arcs: arcs.clone(),
        });
        return;
    }
    for &(next, arc) in &adjacency[here] {
        if visited[next] {
            continue;
        }
        visited[next] = true;
        nodes.push(next);
        arcs.push(arc);
        dfs(adjacency, target, nodes, arcs, visited, out);
        arcs.pop();
        nodes.pop();
        visited[next] = false;
    }
}
