//! Shared fixtures for the criterion benchmarks.

use kinwave_core::curves::CumulativeCurve;
use kinwave_core::flux::{ArcDescriptor, FluxDescriptor};
use kinwave_core::network::{CostFunction, GroupDescriptor, Network};

pub fn greenshields_arc() -> ArcDescriptor {
    ArcDescriptor::new(0, 1, 1.0, FluxDescriptor::greenshields(1.0, 1.0).unwrap()).unwrap()
}

pub fn triangular_arc() -> ArcDescriptor {
    ArcDescriptor::new(0, 1, 1.0, FluxDescriptor::triangular(1.0, 1.0, 1.0).unwrap()).unwrap()
}

pub fn sampled_arc() -> ArcDescriptor {
    let flux = FluxDescriptor::sampled(vec![(0.0, 0.0), (0.2, 0.3), (0.5, 0.45), (0.8, 0.5), (1.2, 0.3), (1.6, 0.0)]).unwrap();
    ArcDescriptor::new(0, 1, 1.0, flux).unwrap()
}

/// Entry curve with `bins` pieces whose rates cycle through free flow and overload.
pub fn entry(bins: usize) -> CumulativeCurve {
    let rates: Vec<f64> = (0..bins).map(|i| [0.1, 0.4, 0.9, 0.2][i % 4]).collect();
    CumulativeCurve::from_rates(0.0, 4.0 / bins as f64, &rates)
}

/// Two-path diamond with one group, mixing both smooth and piecewise-linear arcs.
pub fn diamond(size: f64) -> Network {
    let tri = FluxDescriptor::triangular(1.0, 1.0, 1.0).unwrap();
    let gs = FluxDescriptor::greenshields(1.0, 2.0).unwrap();
    let arcs = vec![
        ArcDescriptor::new(0, 1, 1.0, tri.clone()).unwrap(),
        ArcDescriptor::new(1, 3, 1.0, gs.clone()).unwrap(),
        ArcDescriptor::new(0, 2, 1.5, tri).unwrap(),
        ArcDescriptor::new(2, 3, 1.0, gs).unwrap(),
    ];
    let group = GroupDescriptor {
        size,
        origin: 0,
        destination: 3,
        departure_cost: CostFunction::Affine { a: 0.0, b: -1.0 },
        arrival_cost: CostFunction::Vickrey {
            target: 3.0,
            early_rate: 0.5,
            late_rate: 2.0,
            smoothing: 1.0,
        },
    };
    let nodes = ["A", "B", "C", "D"].iter().map(|s| s.to_string()).collect();
    Network::new(nodes, arcs, vec![group]).unwrap()
}
