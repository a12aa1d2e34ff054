//! Moduli of continuity for exit-time maps.
//!
//! If the entry rate of an arc never exceeds `M` and the arc carries at most
//! `G` vehicles, the exit time `τ(t)` of a driver entering at `t` satisfies
//! `τ(t₂) − τ(t₁) ≤ φ(t₂ − t₁)` with `φ = max(φ♯, φ♭)`:
//!
//! * `φ♭(ξ)` solves `h(−μ − φ♭) = −min(Mξ, G)`, covering the case where the
//!   driver entering at `t₂` is held back by traffic that entered before `t₁`;
//! * `φ♯(ξ) = ξ + inf { τ' : h(σ − τ') ≤ Mσ for σ ∈ [−ξ, 0] } − μ`, covering
//!   the case where the binding traffic entered inside `[t₁, t₂]`.

use crate::error::{Error, Result};
use crate::flux::ArcDescriptor;

const BISECTION_STEPS: usize = 200;
const GOLDEN_STEPS: usize = 120;

/// Exit-time modulus of one arc for entry rates bounded by `m` and mass bounded by `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct Modulus {
    arc: ArcDescriptor,
    m: f64,
    g: f64,
}

pub fn modulus_of_continuity(arc: &ArcDescriptor, m: f64, g: f64) -> Result<Modulus> {
    Modulus::new(arc, m, g)
}

impl Modulus {
    pub fn new(arc: &ArcDescriptor, m: f64, g: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) || !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "modulus needs positive finite rate and mass bounds, got M = {m}, G = {g}"
            )));
        }
        Ok(Self {
            arc: arc.clone(),
            m,
            g,
        })
    }

    pub fn rate_bound(&self) -> f64 {
        self.m
    }

    pub fn mass_bound(&self) -> f64 {
        self.g
    }

    pub fn eval(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            return 0.0;
        }
        self.sharp(xi).max(self.flat(xi))
    }

    /// Smallest `y ≥ 0` with `h(−μ − y) ≤ −min(Mξ, G)`.
    pub fn flat(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            return 0.0;
        }
        let target = -(self.m * xi).min(self.g);
        let mu = self.arc.mu();
        let below = |y: f64| self.arc.h(-mu - y) <= target;
        let mut hi = self.arc.mu().max(xi);
        while !below(hi) {
            hi *= 2.0;
        }
        bisect(0.0, hi, below)
    }

    pub fn sharp(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            return 0.0;
        }
        let mu = self.arc.mu();
        let m = self.m;
        // σ ↦ h(σ − τ') − Mσ is concave, so its maximum on [−ξ, 0] is found by golden section
        let feasible = |tau: f64| {
            let f = |s: f64| self.arc.h(s - tau) - m * s;
            let peak = golden_max(-xi, 0.0, f).max(f(-xi)).max(f(0.0));
            peak <= 0.0
        };
        let mut hi = 2.0 * mu + xi;
        while !feasible(hi) {
            hi *= 2.0;
        }
        let tau = if feasible(mu) { mu } else { bisect(mu, hi, feasible) };
        (xi + tau - mu).max(0.0)
    }
}

/// Arrival-time modulus of a path: the composition of its arc moduli, first arc innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct PathModulus {
    arcs: Vec<Modulus>,
}

impl PathModulus {
    pub fn new(arcs: Vec<Modulus>) -> Self {
        Self { arcs }
    }

    pub fn arcs(&self) -> &[Modulus] {
        &self.arcs
    }

    pub fn eval(&self, xi: f64) -> f64 {
        self.arcs.iter().fold(xi, |x, m| m.eval(x))
    }
}

/// Smallest point of `[lo, hi]` where the monotone predicate holds, from above.
fn bisect(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn golden_max(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = fc.max(fd);
    for _ in 0..GOLDEN_STEPS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
            best = best.max(fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
            best = best.max(fd);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{CumulativeCurve, ExitComputation};
    use crate::flux::FluxDescriptor;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn gs_arc() -> ArcDescriptor {
        ArcDescriptor::new(0, 1, 1.0, FluxDescriptor::greenshields(1.0, 1.0).unwrap()).unwrap()
    }

    fn tri_arc() -> ArcDescriptor {
        ArcDescriptor::new(0, 1, 1.0, FluxDescriptor::triangular(1.0, 1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn vanishes_at_zero() {
        let m = Modulus::new(&gs_arc(), 0.25, 1.0).unwrap();
        assert_eq!(m.eval(0.0), 0.0);
        // the Greenshields kernel is quadratic near −μ, so φ(ξ) ~ sqrt(ξ)
        assert!(m.eval(1e-12) < 1e-5);
    }

    #[test]
    fn flat_branch_solves_kernel_equation() {
        // h(−1 − y) = −y²/(4(1 + y)) = −0.25 gives y² = 1 + y
        let m = Modulus::new(&gs_arc(), 0.25, 10.0).unwrap();
        let y = m.flat(1.0);
        assert_abs_diff_eq!(y, 0.5 * (1.0 + 5f64.sqrt()), epsilon = 1e-10);
        assert_abs_diff_eq!(gs_arc().h(-1.0 - y), -0.25, epsilon = 1e-10);
    }

    #[test]
    fn triangular_closed_form() {
        // a capacity-0.5 point queue: φ(ξ) = max(ξ, Mξ/F_max)
        let arc = tri_arc();
        for &(m, xi) in &[(0.1, 0.5), (0.25, 2.0), (0.7, 1.0), (1.5, 0.3)] {
            let md = Modulus::new(&arc, m, 100.0).unwrap();
            assert_abs_diff_eq!(md.eval(xi), xi.max(m * xi / 0.5), epsilon = 1e-9);
        }
    }

    #[test]
    fn mass_bound_caps_the_flat_branch() {
        let arc = tri_arc();
        let md = Modulus::new(&arc, 1.0, 0.5).unwrap();
        assert_abs_diff_eq!(md.flat(10.0), 0.5 / 0.5, epsilon = 1e-9);
    }

    #[test]
    fn is_nondecreasing() {
        let md = Modulus::new(&gs_arc(), 0.4, 2.0).unwrap();
        let mut prev = 0.0;
        for i in 1..100 {
            let v = md.eval(0.05 * i as f64);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn rejects_nonpositive_bounds() {
        assert!(Modulus::new(&gs_arc(), 0.0, 1.0).is_err());
        assert!(Modulus::new(&gs_arc(), 1.0, -1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn bounds_exit_time_increments(
            fracs in prop::collection::vec(0.0..1.0f64, 1..8),
            greens in any::<bool>(),
            t1 in -0.5..4.0f64,
            dt in 0.0..2.0f64,
        ) {
            let arc = if greens { gs_arc() } else { tri_arc() };
            let m = 0.4;
            let rates: Vec<f64> = fracs.iter().map(|f| f * m).collect();
            let entry = CumulativeCurve::from_rates(0.0, 0.5, &rates);
            let g = entry.total().max(1e-9);
            let md = Modulus::new(&arc, m, g).unwrap();
            let ec = ExitComputation::new(entry, &arc, 1e-3).unwrap();
            let inc = ec.exit_time(t1 + dt) - ec.exit_time(t1);
            prop_assert!(inc <= md.eval(dt) + 1e-6, "increment {inc} > φ({dt}) = {}", md.eval(dt));
        }
    }
}
