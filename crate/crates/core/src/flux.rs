//! Concave arc fluxes `F(ρ) = ρ·v(ρ)`, the inverse `g` of their increasing
//! branch, and the convex conjugate `g*` that drives the Lax-Hopf formula.
//!
//! All three kinds expose the same handful of evaluations. Downstream code
//! only ever needs `g*` and its subgradient (the characteristic pace `g'`),
//! which is what [`FluxDescriptor::legendre`] and [`FluxDescriptor::pace`]
//! provide.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack accepted when checking that a density or flow lies inside
/// its admissible interval.
const DOMAIN_TOL: f64 = 1e-12;

/// Parametric description of a fundamental diagram, as written in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FluxKind {
    /// `F(ρ) = v_free·ρ·(1 − ρ/rho_jam)`.
    Greenshields { v_free: f64, rho_jam: f64 },
    /// Newell's triangle `F(ρ) = min(v_free·ρ, w_back·(rho_jam − ρ))`.
    Triangular { v_free: f64, w_back: f64, rho_jam: f64 },
    /// Piecewise-linear concave flux through `(density, flow)` breakpoints.
    SampledConcave { breakpoints: Vec<(f64, f64)> },
}

/// Inverse and conjugate tables of a sampled flux, built once at construction.
#[derive(Debug, Clone, PartialEq)]
struct SampledTable {
    densities: Vec<f64>,
    flows: Vec<f64>,
    /// Breakpoints of `g` on `[0, F_max]`: flows `u_i` (strictly increasing)
    /// and the matching densities `g(u_i)`.
    g_flows: Vec<f64>,
    g_densities: Vec<f64>,
    /// Slope of `g` on `[u_i, u_{i+1}]`; nondecreasing since `g` is convex.
    g_slopes: Vec<f64>,
}

/// A validated flux function with its derived quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FluxKind", into = "FluxKind")]
pub struct FluxDescriptor {
    kind: FluxKind,
    rho_jam: f64,
    rho_star: f64,
    f_max: f64,
    free_speed: f64,
    table: Option<SampledTable>,
}

impl From<FluxDescriptor> for FluxKind {
    fn from(flux: FluxDescriptor) -> Self {
        flux.kind
    }
}

impl TryFrom<FluxKind> for FluxDescriptor {
    type Error = Error;

    fn try_from(kind: FluxKind) -> Result<Self> {
        FluxDescriptor::new(kind)
    }
}

fn positive_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidFlux(format!("{name} must be positive and finite, got {value}")))
    }
}

impl FluxDescriptor {
    pub fn new(kind: FluxKind) -> Result<Self> {
        match kind {
            FluxKind::Greenshields { v_free, rho_jam } => {
                positive_finite("v_free", v_free)?;
                positive_finite("rho_jam", rho_jam)?;
                Ok(Self {
                    kind,
                    rho_jam,
                    rho_star: rho_jam / 2.0,
                    f_max: v_free * rho_jam / 4.0,
                    free_speed: v_free,
                    table: None,
                })
            }
            FluxKind::Triangular { v_free, w_back, rho_jam } => {
                positive_finite("v_free", v_free)?;
                positive_finite("w_back", w_back)?;
                positive_finite("rho_jam", rho_jam)?;
                let rho_star = w_back * rho_jam / (v_free + w_back);
                Ok(Self {
                    kind,
                    rho_jam,
                    rho_star,
                    f_max: v_free * rho_star,
                    free_speed: v_free,
                    table: None,
                })
            }
            FluxKind::SampledConcave { ref breakpoints } => {
                let table = SampledTable::build(breakpoints)?;
                let peak = table.g_flows.len() - 1;
                let rho_jam = *table.densities.last().unwrap();
                let rho_star = table.g_densities[peak];
                let f_max = table.g_flows[peak];
                let free_speed = 1.0 / table.g_slopes[0];
                Ok(Self {
                    kind,
                    rho_jam,
                    rho_star,
                    f_max,
                    free_speed,
                    table: Some(table),
                })
            }
        }
    }

    pub fn greenshields(v_free: f64, rho_jam: f64) -> Result<Self> {
        Self::new(FluxKind::Greenshields { v_free, rho_jam })
    }

    pub fn triangular(v_free: f64, w_back: f64, rho_jam: f64) -> Result<Self> {
        Self::new(FluxKind::Triangular { v_free, w_back, rho_jam })
    }

    pub fn sampled(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(FluxKind::SampledConcave { breakpoints })
    }

    pub fn kind(&self) -> &FluxKind {
        &self.kind
    }

    pub fn rho_jam(&self) -> f64 {
        self.rho_jam
    }

    /// Density at which the flux peaks.
    pub fn rho_star(&self) -> f64 {
        self.rho_star
    }

    /// Capacity `F_max = F(ρ*)`.
    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    /// Free-flow speed `v(0)`.
    pub fn free_speed(&self) -> f64 {
        self.free_speed
    }

    /// Speed at the critical density, `v(ρ*) = F_max / ρ*`.
    pub fn critical_speed(&self) -> f64 {
        self.f_max / self.rho_star
    }

    /// `g'(0) = 1 / v(0)`: the smallest pace at which `g*` leaves zero.
    pub fn free_pace(&self) -> f64 {
        1.0 / self.free_speed
    }

    /// True when the Lax-Hopf kernel is piecewise linear, so exit curves can be
    /// computed exactly rather than on a time grid.
    pub fn has_exact_exit(&self) -> bool {
        !matches!(self.kind, FluxKind::Greenshields { .. })
    }

    /// Linear pieces of the convex kernel `p ↦ g*(p)` beyond the free pace, as
    /// `(flow, pace width)` in order of increasing flow. The last piece has
    /// flow `F_max` and infinite width. `None` when the kernel is smooth.
    pub fn kernel_pieces(&self) -> Option<Vec<(f64, f64)>> {
        match (&self.kind, &self.table) {
            (FluxKind::Triangular { .. }, _) => Some(vec![(self.f_max, f64::INFINITY)]),
            (FluxKind::SampledConcave { .. }, Some(t)) => {
                let n = t.g_slopes.len();
                let mut pieces: Vec<(f64, f64)> = (1..n)
                    .map(|i| (t.g_flows[i], t.g_slopes[i] - t.g_slopes[i - 1]))
                    .filter(|&(_, w)| w > 0.0)
                    .collect();
                pieces.push((self.f_max, f64::INFINITY));
                Some(pieces)
            }
            _ => None,
        }
    }

    pub fn eval_flux(&self, rho: f64) -> Result<f64> {
        let slack = DOMAIN_TOL * self.rho_jam;
        if !(rho >= -slack && rho <= self.rho_jam + slack) {
            return Err(Error::DensityOutOfRange {
                rho,
                rho_jam: self.rho_jam,
            });
        }
        let rho = rho.clamp(0.0, self.rho_jam);
        let flow = match self.kind {
            FluxKind::Greenshields { v_free, rho_jam } => v_free * rho * (1.0 - rho / rho_jam),
            FluxKind::Triangular { v_free, w_back, rho_jam } => {
                (v_free * rho).min(w_back * (rho_jam - rho))
            }
            FluxKind::SampledConcave { .. } => {
                let t = self.table.as_ref().unwrap();
                interpolate(&t.densities, &t.flows, rho)
            }
        };
        Ok(flow.max(0.0))
    }

    /// Inverse of the increasing branch: the unique `ρ ∈ [0, ρ*]` with `F(ρ) = u`.
    pub fn inverse_g(&self, u: f64) -> Result<f64> {
        let slack = DOMAIN_TOL * self.f_max;
        if u.is_nan() || u > self.f_max + slack {
            return Err(Error::CapacityExceeded {
                flow: u,
                f_max: self.f_max,
            });
        }
        let u = u.clamp(0.0, self.f_max);
        Ok(match self.kind {
            FluxKind::Greenshields { rho_jam, .. } => {
                let disc = (1.0 - u / self.f_max).max(0.0);
                0.5 * rho_jam * (1.0 - disc.sqrt())
            }
            FluxKind::Triangular { v_free, .. } => u / v_free,
            FluxKind::SampledConcave { .. } => {
                let t = self.table.as_ref().unwrap();
                interpolate(&t.g_flows, &t.g_densities, u)
            }
        })
    }

    /// Subgradient of `g` at flow `r`, i.e. the pace (time per unit length) of
    /// the characteristic carrying flow `r`. Returns `+∞` at or above capacity.
    /// At kinks of a sampled `g` the right derivative is returned.
    pub fn pace(&self, r: f64) -> f64 {
        if r >= self.f_max {
            return f64::INFINITY;
        }
        let r = r.max(0.0);
        match self.kind {
            FluxKind::Greenshields { v_free, .. } => 1.0 / (v_free * (1.0 - r / self.f_max).sqrt()),
            FluxKind::Triangular { v_free, .. } => 1.0 / v_free,
            FluxKind::SampledConcave { .. } => {
                let t = self.table.as_ref().unwrap();
                let seg = t.g_flows.partition_point(|&u| u <= r).saturating_sub(1);
                t.g_slopes[seg.min(t.g_slopes.len() - 1)]
            }
        }
    }

    /// Legendre transform `g*(p) = max_{u ∈ [0, F_max]} (p·u − g(u))`.
    /// Defined for every real `p`; zero for `p ≤ g'(0)`.
    pub fn legendre(&self, p: f64) -> f64 {
        if p <= self.free_pace() {
            return 0.0;
        }
        match self.kind {
            FluxKind::Greenshields { v_free, rho_jam } => {
                let pv = p * v_free;
                rho_jam * (pv - 1.0) * (pv - 1.0) / (4.0 * pv)
            }
            FluxKind::Triangular { v_free, .. } => (p - 1.0 / v_free) * self.f_max,
            FluxKind::SampledConcave { .. } => {
                let t = self.table.as_ref().unwrap();
                t.g_flows
                    .iter()
                    .zip(&t.g_densities)
                    .map(|(u, g)| p * u - g)
                    .fold(0.0, f64::max)
            }
        }
    }

    /// A maximizer `u*` of `p·u − g(u)` (the smallest one for sampled fluxes).
    pub fn conjugate_maximizer(&self, p: f64) -> f64 {
        if p <= self.free_pace() {
            return 0.0;
        }
        match self.kind {
            FluxKind::Greenshields { v_free, .. } => {
                let s = 1.0 / (p * v_free);
                self.f_max * (1.0 - s * s)
            }
            FluxKind::Triangular { .. } => self.f_max,
            FluxKind::SampledConcave { .. } => {
                let t = self.table.as_ref().unwrap();
                let mut best = (0.0, 0.0);
                for (u, g) in t.g_flows.iter().zip(&t.g_densities) {
                    let value = p * u - g;
                    if value > best.1 {
                        best = (*u, value);
                    }
                }
                best.0
            }
        }
    }
}

/// `h(s) = −L·g*(−s/L)`: the concave kernel of the exit-time representation.
/// Vanishes for `s ≥ −μ` and is strictly negative below.
pub fn h_kernel(flux: &FluxDescriptor, length: f64, s: f64) -> f64 {
    -length * flux.legendre(-s / length)
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = xs.partition_point(|&v| v <= x);
    if i == 0 {
        return ys[0];
    }
    if i >= xs.len() {
        return *ys.last().unwrap();
    }
    let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

impl SampledTable {
    fn build(points: &[(f64, f64)]) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidFlux(msg));
        if points.len() < 3 {
            return bad("a sampled flux needs at least three breakpoints".into());
        }
        if points.iter().any(|(r, f)| !r.is_finite() || !f.is_finite()) {
            return bad("breakpoints must be finite".into());
        }
        let (r0, f0) = points[0];
        let (rj, fj) = *points.last().unwrap();
        if r0 != 0.0 || f0 != 0.0 {
            return bad(format!("first breakpoint must be (0, 0), got ({r0}, {f0})"));
        }
        if fj != 0.0 || rj <= 0.0 {
            return bad(format!("last breakpoint must be (rho_jam, 0), got ({rj}, {fj})"));
        }
        let mut slopes = Vec::with_capacity(points.len() - 1);
        for w in points.windows(2) {
            let (ra, fa) = w[0];
            let (rb, fb) = w[1];
            if rb <= ra {
                return bad("breakpoint densities must be strictly increasing".into());
            }
            if fb < 0.0 {
                return bad(format!("flow must be nonnegative, got {fb}"));
            }
            slopes.push((fb - fa) / (rb - ra));
        }
        let scale = slopes.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
        for (i, w) in slopes.windows(2).enumerate() {
            if w[1] > w[0] + 1e-12 * scale {
                return bad(format!("flux is not concave at breakpoint {}", i + 1));
            }
        }
        // Peak: first breakpoint attaining the maximum flow.
        let f_max = points.iter().map(|p| p.1).fold(0.0, f64::max);
        if f_max <= 0.0 {
            return bad("flux must be positive somewhere".into());
        }
        let peak = points.iter().position(|p| p.1 == f_max).unwrap();
        if slopes[..peak].iter().any(|&s| s <= 0.0) {
            return bad("flux must be strictly increasing below the critical density".into());
        }
        let g_flows: Vec<f64> = points[..=peak].iter().map(|p| p.1).collect();
        let g_densities: Vec<f64> = points[..=peak].iter().map(|p| p.0).collect();
        let g_slopes = slopes[..peak].iter().map(|s| 1.0 / s).collect();
        Ok(Self {
            densities: points.iter().map(|p| p.0).collect(),
            flows: points.iter().map(|p| p.1).collect(),
            g_flows,
            g_densities,
            g_slopes,
        })
    }
}

/// An arc of the network: endpoints, length, and flux.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcDescriptor {
    pub from: usize,
    pub to: usize,
    pub length: f64,
    pub flux: FluxDescriptor,
}

impl ArcDescriptor {
    pub fn new(from: usize, to: usize, length: f64, flux: FluxDescriptor) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidNetwork(format!(
                "arc length must be positive, got {length}"
            )));
        }
        Ok(Self {
            from,
            to,
            length,
            flux,
        })
    }

    /// Minimum traversal time `μ = L / v(0)`.
    pub fn mu(&self) -> f64 {
        self.length * self.flux.free_pace()
    }

    pub fn f_max(&self) -> f64 {
        self.flux.f_max()
    }

    /// `L·g*((t − τ)/L)`: the Lax-Hopf cost of shifting an entry at `τ` to an exit at `t`.
    pub fn kernel(&self, elapsed: f64) -> f64 {
        self.length * self.flux.legendre(elapsed / self.length)
    }

    pub fn h(&self, s: f64) -> f64 {
        h_kernel(&self.flux, self.length, s)
    }
}
