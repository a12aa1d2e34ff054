//! Piecewise-linear cumulative vehicle counts and the Lax-Hopf evolution of
//! an entry curve along a single arc.
//!
//! A [`CumulativeCurve`] is continuous, nondecreasing, zero before its first
//! breakpoint and constant after its last one. Curves are kept in a canonical
//! form: the first breakpoint is the last time the curve is still zero, the
//! last breakpoint is the first time it reaches its total, and collinear
//! interior breakpoints are dropped.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::flux::ArcDescriptor;

/// Relative resolution below which two breakpoint times are merged.
const TIME_EPS: f64 = 1e-12;
/// Relative tolerance of the collinearity test used to drop redundant breakpoints.
const COLLINEAR_EPS: f64 = 1e-13;

/// Nondecreasing, continuous, piecewise-linear function of time with `V(−∞) = 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CumulativeCurve {
    times: Vec<f64>,
    values: Vec<f64>,
}

/// Incremental constructor that maintains the canonical form.
#[derive(Debug, Default)]
pub(crate) struct CurveBuilder {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl CurveBuilder {
    pub(crate) fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
        }
    }

    pub(crate) fn push(&mut self, t: f64, v: f64) {
        let n = self.times.len();
        if n > 0 {
            let (lt, lv) = (self.times[n - 1], self.values[n - 1]);
            let v = v.max(lv);
            if t <= lt + TIME_EPS * (1.0 + lt.abs()) {
                self.values[n - 1] = v;
                return;
            }
            if n >= 2 {
                let (t0, v0) = (self.times[n - 2], self.values[n - 2]);
                let interp = v0 + (v - v0) * (lt - t0) / (t - t0);
                let scale = v.abs().max(v0.abs()).max(f64::MIN_POSITIVE);
                if (lv - interp).abs() <= COLLINEAR_EPS * scale {
                    self.times[n - 1] = t;
                    self.values[n - 1] = v;
                    return;
                }
            }
            self.times.push(t);
            self.values.push(v);
        } else {
            self.times.push(t);
            self.values.push(v.max(0.0));
        }
    }

    pub(crate) fn finish(mut self) -> CumulativeCurve {
        let Some(first_positive) = self.values.iter().position(|&v| v > 0.0) else {
            return CumulativeCurve::zero();
        };
        let total = *self.values.last().unwrap();
        let last = self.values.iter().position(|&v| v >= total).unwrap();
        let first = first_positive.saturating_sub(1);
        self.times.truncate(last + 1);
        self.values.truncate(last + 1);
        self.times.drain(..first);
        self.values.drain(..first);
        if first_positive == 0 {
            // the curve must start from zero; a positive first value means a jump
            // at the first time, which a continuous curve cannot have
            self.times.insert(0, self.times[0]);
            self.values.insert(0, 0.0);
            self.times[0] -= TIME_EPS * (1.0 + self.times[0].abs()) * 2.0;
        }
        self.values[0] = 0.0;
        CumulativeCurve {
            times: self.times,
            values: self.values,
        }
    }
}

/// Forward-only evaluator for a monotone sequence of query times.
pub(crate) struct Cursor<'a> {
    curve: &'a CumulativeCurve,
    idx: usize,
}

impl Cursor<'_> {
    pub(crate) fn at(&mut self, t: f64) -> f64 {
        let c = self.curve;
        let n = c.times.len();
        if n == 0 || t <= c.times[0] {
            return 0.0;
        }
        if t >= c.times[n - 1] {
            return c.values[n - 1];
        }
        while self.idx + 1 < n && c.times[self.idx + 1] <= t {
            self.idx += 1;
        }
        let i = self.idx;
        lerp(c.times[i], c.values[i], c.times[i + 1], c.values[i + 1], t)
    }
}

fn lerp(t0: f64, v0: f64, t1: f64, v1: f64, t: f64) -> f64 {
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

/// One linear piece of a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub v0: f64,
    pub v1: f64,
}

impl Segment {
    pub fn rate(&self) -> f64 {
        (self.v1 - self.v0) / (self.t1 - self.t0)
    }
}

impl CumulativeCurve {
    /// The curve that is identically zero.
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds a curve from explicit breakpoints, validating the invariants.
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::UnboundedMass);
        }
        if let Some(&(_, v0)) = points.first() {
            if v0 != 0.0 {
                return Err(Error::InvalidCurve(format!(
                    "a continuous cumulative curve starts at zero, got {v0}"
                )));
            }
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidCurve("breakpoint times must be strictly increasing".into()));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::InvalidCurve("cumulative values must be nondecreasing".into()));
            }
        }
        let mut b = CurveBuilder::with_capacity(points.len());
        for &(t, v) in points {
            b.push(t, v);
        }
        Ok(b.finish())
    }

    /// Integrates a piecewise-constant rate given on `rates.len()` bins of
    /// `width` starting at `start`.
    pub fn from_rates(start: f64, width: f64, rates: &[f64]) -> Self {
        let mut b = CurveBuilder::with_capacity(rates.len() + 1);
        let mut total = 0.0;
        b.push(start, 0.0);
        for (i, &r) in rates.iter().enumerate() {
            total += r * width;
            b.push(start + (i + 1) as f64 * width, total);
        }
        b.finish()
    }

    pub fn is_zero(&self) -> bool {
        self.times.is_empty()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.times.windows(2).zip(self.values.windows(2)).map(|(t, v)| Segment {
            t0: t[0],
            t1: t[1],
            v0: v[0],
            v1: v[1],
        })
    }

    /// Last time at which the curve is still zero.
    pub fn first_time(&self) -> Option<f64> {
        self.times.first().copied()
    }

    /// First time at which the curve reaches its total.
    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// `V(+∞)`.
    pub fn total(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.times.len();
        if n == 0 || t <= self.times[0] {
            return 0.0;
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let i = self.times.partition_point(|&x| x <= t);
        lerp(self.times[i - 1], self.values[i - 1], self.times[i], self.values[i], t)
    }

    pub(crate) fn cursor(&self) -> Cursor<'_> {
        Cursor { curve: self, idx: 0 }
    }

    /// Rate `dV/dt` just after `t` (zero outside the support).
    pub fn rate_after(&self, t: f64) -> f64 {
        let n = self.times.len();
        if n < 2 || t < self.times[0] || t >= self.times[n - 1] {
            return 0.0;
        }
        let i = self.times.partition_point(|&x| x <= t);
        (self.values[i] - self.values[i - 1]) / (self.times[i] - self.times[i - 1])
    }

    pub fn max_rate(&self) -> f64 {
        self.segments().map(|s| s.rate()).fold(0.0, f64::max)
    }

    /// Generalized left inverse `inf { t : V(t) ≥ β }`.
    ///
    /// `β = 0` returns the first breakpoint time (negative infinity for the
    /// zero curve) instead of `−∞`.
    pub fn inverse(&self, beta: f64) -> Result<f64> {
        let total = self.total();
        if beta.is_nan() || beta < 0.0 || beta > total + 1e-12 * total.max(1.0) {
            return Err(Error::CountOutOfRange { beta, total });
        }
        if beta <= 0.0 {
            return Ok(self.first_time().unwrap_or(f64::NEG_INFINITY));
        }
        let beta = beta.min(total);
        let i = self.values.partition_point(|&v| v < beta);
        let (t0, t1, v0, v1) = (self.times[i - 1], self.times[i], self.values[i - 1], self.values[i]);
        Ok(t0 + (beta - v0) * (t1 - t0) / (v1 - v0))
    }

    /// Pointwise sum of several curves.
    pub fn sum<'a, I>(curves: I) -> Self
    where
        I: IntoIterator<Item = &'a CumulativeCurve>,
    {
        let curves: Vec<&CumulativeCurve> = curves.into_iter().filter(|c| !c.is_zero()).collect();
        match curves.len() {
            0 => return Self::zero(),
            1 => return curves[0].clone(),
            _ => {}
        }
        let times = merged_times(curves.iter().map(|c| c.times.as_slice()));
        let mut cursors: Vec<Cursor> = curves.iter().map(|c| c.cursor()).collect();
        let mut b = CurveBuilder::with_capacity(times.len());
        for t in times {
            let v = cursors.iter_mut().map(|c| c.at(t)).sum();
            b.push(t, v);
        }
        b.finish()
    }

    /// The curve frozen at time `t_end`: equal to `self` before, constant after.
    pub fn truncated(&self, t_end: f64) -> Self {
        let n = self.times.partition_point(|&t| t < t_end);
        if n == self.times.len() {
            return self.clone();
        }
        let mut b = CurveBuilder::with_capacity(n + 1);
        for i in 0..n {
            b.push(self.times[i], self.values[i]);
        }
        b.push(t_end, self.eval(t_end));
        b.finish()
    }

    pub fn shifted(&self, dt: f64) -> Self {
        Self {
            times: self.times.iter().map(|t| t + dt).collect(),
            values: self.values.clone(),
        }
    }

    /// Writes `t,value` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,value")?;
        for (t, v) in self.points() {
            writeln!(w, "{t:.16e},{v:.16e}")?;
        }
        Ok(())
    }
}

pub(crate) fn merged_times<'a, I>(lists: I) -> Vec<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut times: Vec<f64> = lists.into_iter().flatten().copied().collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

/// Exact Lax-Hopf value `min_τ { U⁻(τ) + L·g*((t − τ)/L) }` at a single time.
///
/// The objective is convex on each linear piece of the entry curve, so its
/// minimizer there is the characteristic foot `τ = t − L·g'(r)` clipped to
/// the piece. Entry times later than `t − μ` all give `U⁻(t − μ)`.
pub fn lax_hopf_value(entry: &CumulativeCurve, arc: &ArcDescriptor, t: f64) -> f64 {
    if entry.len() < 2 {
        return 0.0;
    }
    lax_hopf_scan(entry, arc, t, 0, entry.len() - 2).0
}

/// Minimum over entry pieces `lo..=hi` plus the candidate `τ = t − μ`, with
/// the index of the piece holding the smallest minimizer.
fn lax_hopf_scan(entry: &CumulativeCurve, arc: &ArcDescriptor, t: f64, lo: usize, hi: usize) -> (f64, usize) {
    let cut = t - arc.mu();
    let times = &entry.times;
    let values = &entry.values;
    let mut best = f64::INFINITY;
    let mut best_seg = lo;
    for j in lo..=hi {
        let (a, b) = (times[j], times[j + 1]);
        if a >= cut {
            break;
        }
        let (va, vb) = (values[j], values[j + 1]);
        let r = (vb - va) / (b - a);
        let end = b.min(cut);
        let pace = arc.flux.pace(r);
        let tau = if pace.is_finite() {
            (t - arc.length * pace).clamp(a, end)
        } else {
            a
        };
        let value = va + r * (tau - a) + arc.kernel(t - tau);
        if value < best {
            best = value;
            best_seg = j;
        }
    }
    let tail = entry.eval(cut);
    if tail < best {
        best = tail;
        let seg = times.partition_point(|&x| x <= cut).saturating_sub(1);
        best_seg = seg.clamp(lo, hi);
    }
    (best, best_seg)
}

/// Lax-Hopf values at `t = (k0 + i)·dt`, `i < n`.
///
/// The kernel is convex, so the smallest minimizer is nondecreasing in `t`;
/// divide and conquer over the query times then needs `O((n + m) log n)`
/// piece evaluations for an entry curve with `m` pieces.
fn lax_hopf_grid(entry: &CumulativeCurve, arc: &ArcDescriptor, k0: i64, n: usize, dt: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    let last_seg = entry.len() - 2;
    let mut stack = vec![(0usize, n, 0usize, last_seg)];
    while let Some((lo, hi, slo, shi)) = stack.pop() {
        if lo >= hi {
            continue;
        }
        let mid = lo + (hi - lo) / 2;
        let t = (k0 + mid as i64) as f64 * dt;
        let (value, seg) = lax_hopf_scan(entry, arc, t, slo, shi);
        out[mid] = value;
        stack.push((lo, mid, slo, seg));
        stack.push((mid + 1, hi, seg, shi));
    }
    out
}

/// Output of a capacity-`c` point queue fed by `entry`:
/// `W(s) = min_{τ ≤ s} { U(τ) + c·(s − τ) }`.
fn point_queue_output(entry: &CumulativeCurve, capacity: f64) -> CumulativeCurve {
    let mut b = CurveBuilder::with_capacity(entry.len() + 2);
    let mut pts = entry.points();
    let Some((t0, _)) = pts.next() else {
        return CumulativeCurve::zero();
    };
    b.push(t0, 0.0);
    let (mut a, mut ua, mut wa) = (t0, 0.0_f64, 0.0_f64);
    for (tb, ub) in pts {
        let r = (ub - ua) / (tb - a);
        let backlog = ua - wa;
        let wb = if r > capacity {
            wa + capacity * (tb - a)
        } else if backlog <= 1e-14 * ua.max(1.0) {
            ub
        } else {
            let catch_up = a + backlog / (capacity - r);
            if catch_up < tb {
                b.push(catch_up, ua + r * (catch_up - a));
                ub
            } else {
                wa + capacity * (tb - a)
            }
        };
        let wb = wb.min(ub);
        b.push(tb, wb);
        (a, ua, wa) = (tb, ub, wb);
    }
    if wa < ua {
        b.push(a + (ua - wa) / capacity, ua);
    }
    b.finish()
}

/// Output of a rate-`u` element that holds each vehicle at most `ℓ`:
/// `W(t) = min_{0 ≤ s ≤ ℓ} { U(t − s) + u·s }`.
///
/// Between consecutive times in `{b, b + ℓ}` over breakpoints `b`, the
/// candidates are `U(t)`, `U(t − ℓ) + u·ℓ`, and `u·t` plus the smallest
/// `U(b) − u·b` over breakpoints in the window, all linear; the envelope is
/// assembled from their crossings.
fn window_output(entry: &CumulativeCurve, rate: f64, hold: f64) -> CumulativeCurve {
    if entry.is_zero() {
        return CumulativeCurve::zero();
    }
    let bps: Vec<(f64, f64)> = entry.points().collect();
    let total = entry.total();
    let mut events: Vec<f64> = bps.iter().flat_map(|&(b, _)| [b, b + hold]).collect();
    events.sort_by(f64::total_cmp);
    events.dedup();
    let key = |i: usize| bps[i].1 - rate * bps[i].0;
    let mut window = std::collections::VecDeque::new();
    let mut next = 0;
    let mut b = CurveBuilder::with_capacity(events.len() * 2);
    b.push(events[0], 0.0);
    for w in events.windows(2) {
        let (e0, e1) = (w[0], w[1]);
        while next < bps.len() && bps[next].0 <= e0 {
            while window.back().is_some_and(|&j| key(j) >= key(next)) {
                window.pop_back();
            }
            window.push_back(next);
            next += 1;
        }
        // expiry times are compared exactly as they were generated as events
        while window.front().is_some_and(|&j| bps[j].0 + hold <= e0) {
            window.pop_front();
        }
        let lines = |t: f64| {
            let held = window.front().map_or(f64::INFINITY, |&j| rate * t + key(j));
            [entry.eval(t), entry.eval(t - hold) + rate * hold, held]
        };
        let (l0, l1) = (lines(e0), lines(e1));
        let mut thetas = Vec::with_capacity(3);
        for (x, y) in [(0, 1), (0, 2), (1, 2)] {
            let (d0, d1) = (l0[x] - l0[y], l1[x] - l1[y]);
            if d0.is_finite() && d1.is_finite() && d0 * d1 < 0.0 {
                thetas.push(d0 / (d0 - d1));
            }
        }
        thetas.sort_by(f64::total_cmp);
        for th in thetas.into_iter().chain([1.0]) {
            let v = (0..3)
                .map(|i| l0[i] + (l1[i] - l0[i]) * th)
                .filter(|v| !v.is_nan())
                .fold(f64::INFINITY, f64::min);
            // rounding must not leave the curve a few ulps short of its total
            let v = if v >= total * (1.0 - 8.0 * f64::EPSILON) { total } else { v };
            b.push(e0 + (e1 - e0) * th, v);
        }
    }
    b.push(*events.last().unwrap(), total);
    b.finish()
}

/// Exit curve `U⁺(t) = min_τ { U⁻(τ) + L·g*((t − τ)/L) }` of an arc.
///
/// Piecewise-linear fluxes have a piecewise-linear convex kernel, which is the
/// min-plus product of its linear pieces: one bounded-hold element per finite
/// piece, a capacity-`F_max` point queue, and a free-flow delay `μ`. Those are
/// handled exactly. Greenshields is evaluated exactly on the global grid
/// `{k·dt}` and interpolated.
pub fn lax_hopf_exit(entry: &CumulativeCurve, arc: &ArcDescriptor, dt: f64) -> Result<CumulativeCurve> {
    if entry.values.iter().chain(&entry.times).any(|x| !x.is_finite()) {
        return Err(Error::UnboundedMass);
    }
    if entry.is_zero() {
        return Ok(CumulativeCurve::zero());
    }
    if let Some(pieces) = arc.flux.kernel_pieces() {
        let mut out = None;
        for &(rate, width) in pieces.iter().filter(|p| p.1.is_finite()) {
            out = Some(window_output(out.as_ref().unwrap_or(entry), rate, arc.length * width));
        }
        let queued = point_queue_output(out.as_ref().unwrap_or(entry), arc.f_max());
        return Ok(queued.shifted(arc.mu()));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidConfig(format!("grid step must be positive, got {dt}")));
    }
    let mu = arc.mu();
    if dt > mu {
        return Err(Error::InvalidConfig(format!(
            "grid step {dt} exceeds the free-flow traversal time {mu}"
        )));
    }
    let total = entry.total();
    let t_first = entry.first_time().unwrap() + mu;
    let t_last = entry.last_time().unwrap();
    // past this time every candidate is at least the total mass
    let drain = t_last + (total + arc.length * arc.flux.rho_star()) / arc.f_max() + mu;
    let k0 = (t_first / dt).floor() as i64;
    let k1 = (drain / dt).ceil() as i64 + 1;
    let n = (k1 - k0 + 1) as usize;
    let values = lax_hopf_grid(entry, arc, k0, n, dt);
    let mut b = CurveBuilder::with_capacity(n);
    for (i, v) in values.into_iter().enumerate() {
        b.push((k0 + i as i64) as f64 * dt, v.min(total));
    }
    b.push(k1 as f64 * dt, total);
    Ok(b.finish())
}

/// Entry and exit curves of one arc, with the exit-time map they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitComputation {
    pub entry: CumulativeCurve,
    pub exit: CumulativeCurve,
    pub arc: ArcDescriptor,
}

impl ExitComputation {
    pub fn new(entry: CumulativeCurve, arc: &ArcDescriptor, dt: f64) -> Result<Self> {
        let exit = lax_hopf_exit(&entry, arc, dt)?;
        Ok(Self {
            entry,
            exit,
            arc: arc.clone(),
        })
    }

    /// Exit time of a driver joining the arc at `t`:
    /// `(t + μ) ∨ inf { τ : U⁺(τ) ≥ U⁻(t) }`.
    pub fn exit_time(&self, t: f64) -> f64 {
        exit_time(&self.entry, &self.exit, self.arc.mu(), t)
    }
}

pub fn exit_time(entry: &CumulativeCurve, exit: &CumulativeCurve, mu: f64, t: f64) -> f64 {
    let level = entry.eval(t);
    let free = t + mu;
    if level <= 0.0 || exit.is_zero() {
        return free;
    }
    let level = level.min(exit.total());
    // level is within [0, total] so the inverse cannot fail
    let queued = exit.inverse(level).unwrap_or(free);
    free.max(queued)
}

/// FIFO split of an arc's exit flow among the components of its entry flow.
///
/// Component `c` leaves at time `t` in the proportion it held at the entry time
/// `τ^enter(t)` with `U⁻(τ^enter) = U⁺(t)`, which integrates to
/// `U⁺_c(t) = U⁻_c(τ^enter(t))`. The map from cumulative level to component
/// count is piecewise linear, so the composition is exact.
pub fn fifo_split(components: &[&CumulativeCurve], exit: &CumulativeCurve) -> Vec<CumulativeCurve> {
    let nonzero: Vec<usize> = (0..components.len()).filter(|&i| !components[i].is_zero()).collect();
    let mut out = vec![CumulativeCurve::zero(); components.len()];
    if nonzero.is_empty() || exit.is_zero() {
        return out;
    }
    if nonzero.len() == 1 {
        out[nonzero[0]] = exit.clone();
        return out;
    }

    // level table: cumulative entry level and per-component counts at every breakpoint
    let times = merged_times(nonzero.iter().map(|&i| components[i].times()));
    let mut cursors: Vec<Cursor> = nonzero.iter().map(|&i| components[i].cursor()).collect();
    let mut levels: Vec<f64> = Vec::with_capacity(times.len() + 1);
    let mut counts: Vec<Vec<f64>> = vec![Vec::with_capacity(times.len() + 1); nonzero.len()];
    levels.push(0.0);
    for c in counts.iter_mut() {
        c.push(0.0);
    }
    for &t in &times {
        let vals: Vec<f64> = cursors.iter_mut().map(|c| c.at(t)).collect();
        let level: f64 = vals.iter().sum();
        if level > *levels.last().unwrap() {
            levels.push(level);
            for (c, v) in counts.iter_mut().zip(vals) {
                c.push(v);
            }
        }
    }
    let top = *levels.last().unwrap();

    // sample points of the composition: exit breakpoints plus level crossings
    let mut samples: Vec<(f64, usize, f64)> = Vec::with_capacity(exit.len() + levels.len());
    let locate = |v: f64, j: &mut usize| -> (usize, f64) {
        let v = v.clamp(0.0, top);
        while *j + 1 < levels.len() && levels[*j + 1] <= v {
            *j += 1;
        }
        if *j + 1 >= levels.len() {
            return (*j, 0.0);
        }
        (*j, (v - levels[*j]) / (levels[*j + 1] - levels[*j]))
    };
    let mut j = 0usize;
    let pts: Vec<(f64, f64)> = exit.points().collect();
    for (m, &(tm, vm)) in pts.iter().enumerate() {
        let (jj, frac) = locate(vm, &mut j);
        samples.push((tm, jj, frac));
        if let Some(&(tn, vn)) = pts.get(m + 1) {
            let mut k = jj + 1;
            while k < levels.len() && levels[k] < vn.min(top) {
                if levels[k] > vm {
                    let tc = tm + (levels[k] - vm) * (tn - tm) / (vn - vm);
                    samples.push((tc, k, 0.0));
                }
                k += 1;
            }
        }
    }

    for (slot, &idx) in nonzero.iter().enumerate() {
        let c = &counts[slot];
        let mut b = CurveBuilder::with_capacity(samples.len());
        for &(t, k, frac) in &samples {
            let v = if frac > 0.0 && k + 1 < c.len() {
                c[k] + frac * (c[k + 1] - c[k])
            } else {
                c[k]
            };
            b.push(t, v);
        }
        out[idx] = b.finish();
    }
    out
}
