use kinwave_core::curves::{lax_hopf_exit, CumulativeCurve};
use kinwave_core::flux::{ArcDescriptor, FluxDescriptor};
use kinwave_core::loading::{network_load, DepartureProfile, LoadingConfig};
use kinwave_core::network::{CostFunction, GroupDescriptor, Network};
use kinwave_core::solvers::total_cost;

fn group(size: f64, origin: usize, destination: usize) -> GroupDescriptor {
    GroupDescriptor {
        size,
        origin,
        destination,
        departure_cost: CostFunction::Affine { a: 0.0, b: -1.0 },
        arrival_cost: CostFunction::Vickrey {
            target: 2.0,
            early_rate: 0.5,
            late_rate: 2.0,
            smoothing: 1.0,
        },
    }
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("N{i}")).collect()
}

/// Loop-free paths by depth-first search over an adjacency matrix.
fn count_paths(adj: &[Vec<bool>], at: usize, to: usize, seen: &mut Vec<bool>) -> usize {
    if at == to {
        return 1;
    }
    seen[at] = true;
    let mut n = 0;
    for next in 0..adj.len() {
        if adj[at][next] && !seen[next] {
            n += count_paths(adj, next, to, seen);
        }
    }
    seen[at] = false;
    n
}

#[test]
fn complete_graph_paths_match_depth_first_count() {
    let n = 4;
    let tri = FluxDescriptor::triangular(1.0, 1.0, 1.0).unwrap();
    let mut arcs = Vec::new();
    let mut adj = vec![vec![false; n]; n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                arcs.push(ArcDescriptor::new(a, b, 1.0, tri.clone()).unwrap());
                adj[a][b] = true;
            }
        }
    }
    let net = Network::new(names(n), arcs, vec![group(1.0, 0, 3)]).unwrap();
    assert_eq!(net.paths().len(), count_paths(&adj, 0, 3, &mut vec![false; n]));
    assert_eq!(net.paths().len(), 5);
}

#[test]
fn two_path_loading_conserves_mass_and_respects_free_flow() {
    let gs = FluxDescriptor::greenshields(1.0, 1.0).unwrap();
    let tri = FluxDescriptor::triangular(1.0, 0.5, 1.0).unwrap();
    let arcs = vec![
        ArcDescriptor::new(0, 1, 1.0, gs.clone()).unwrap(),
        ArcDescriptor::new(1, 2, 1.0, tri.clone()).unwrap(),
        ArcDescriptor::new(0, 2, 1.5, tri).unwrap(),
    ];
    let net = Network::new(names(3), arcs, vec![group(1.2, 0, 2)]).unwrap();
    let mut profile = DepartureProfile::zeros(&net, -1.0, 0.5, 4);
    profile.rates = vec![vec![0.6, 0.3, 0.0, 0.0], vec![0.0, 0.3, 0.6, 0.6]];
    let loading = network_load(&net, &profile, &LoadingConfig::default()).unwrap();
    let mut arrived = 0.0;
    for (r, route) in net.routes().iter().enumerate() {
        let dep = &loading.departures[r];
        let arr = loading.arrivals(r);
        assert!((arr.total() - dep.total()).abs() < 1e-12);
        arrived += arr.total();
        let free: f64 = net.paths()[route.path].arcs.iter().map(|&a| net.arcs()[a].mu()).sum();
        for k in 0..=200 {
            let t = -1.0 + 6.0 * k as f64 / 200.0;
            // no driver beats the free-flow time, and nobody arrives before departing
            assert!(arr.eval(t) <= dep.eval(t - free) + 1e-12, "route {r} at {t}");
        }
    }
    assert!((arrived - 1.2).abs() < 1e-12);
}

#[test]
fn sampled_triangle_reproduces_triangular_exit() {
    let (v, w, jam) = (1.0, 0.5, 2.0);
    let tri = FluxDescriptor::triangular(v, w, jam).unwrap();
    let rho_star = w * jam / (v + w);
    let sampled = FluxDescriptor::sampled(vec![(0.0, 0.0), (rho_star, v * rho_star), (jam, 0.0)]).unwrap();
    assert!((sampled.f_max() - tri.f_max()).abs() < 1e-15);
    let entry = CumulativeCurve::from_rates(0.0, 0.5, &[0.2, 1.0, 0.9, 0.0, 0.4]);
    let a = lax_hopf_exit(&entry, &ArcDescriptor::new(0, 1, 1.3, tri).unwrap(), 1e-2).unwrap();
    let b = lax_hopf_exit(&entry, &ArcDescriptor::new(0, 1, 1.3, sampled).unwrap(), 1e-2).unwrap();
    for k in 0..=400 {
        let t = 12.0 * k as f64 / 400.0;
        assert!((a.eval(t) - b.eval(t)).abs() < 1e-12, "t {t}");
    }
}

#[test]
fn profile_round_trips_through_json() {
    let tri = FluxDescriptor::triangular(1.0, 1.0, 1.0).unwrap();
    let net = Network::new(names(2), vec![ArcDescriptor::new(0, 1, 1.0, tri).unwrap()], vec![group(0.5, 0, 1)]).unwrap();
    let profile = DepartureProfile::uniform(&net, -2.0, 0.25, 8);
    let text = serde_json::to_string(&profile).unwrap();
    let back: DepartureProfile = serde_json::from_str(&text).unwrap();
    assert_eq!(profile, back);
    let cfg = LoadingConfig::default();
    assert_eq!(total_cost(&net, &profile, &cfg).unwrap(), total_cost(&net, &back, &cfg).unwrap());
}
