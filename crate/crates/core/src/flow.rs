//! Time integration of `x' = X_F(x)`.
//!
//! Dormand-Prince 5(4) with Hairer's fourth-order continuous extension. The
//! state is augmented with a quadrature component accumulating
//! `lambda(X_F) = p . q'`, and optionally with the 16 entries of the
//! linearised flow `M' = DX_F(x) M`, `M(0) = Id`.

use nalgebra::{Matrix4, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::{Involution, PhasePoint, ReversibleSystem, State};

/// Integrator tolerances and guards.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    pub collision_radius: f64,
    pub max_steps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-11,
            rel_tol: 1e-11,
            max_step: 0.5,
            collision_radius: crate::systems::DEFAULT_COLLISION_RADIUS,
            max_steps: 2_000_000,
        }
    }
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step with its continuous extension.
#[derive(Clone, Debug)]
pub(crate) struct DenseStep<const D: usize> {
    t0: f64,
    h: f64,
    rcont: [SVector<f64, D>; 5],
}

impl<const D: usize> DenseStep<D> {
    fn eval(&self, t: f64) -> SVector<f64, D> {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        r1 + (r2 + (r3 + (r4 + r5 * theta1) * theta) * theta1) * theta
    }

    fn end(&self) -> SVector<f64, D> {
        self.rcont[0] + self.rcont[1]
    }
}

/// Dense solution of an autonomous ODE on `[0, duration]` (duration may be negative).
#[derive(Clone, Debug)]
pub(crate) struct DenseSolution<const D: usize> {
    y0: SVector<f64, D>,
    duration: f64,
    steps: Vec<DenseStep<D>>,
}

impl<const D: usize> DenseSolution<D> {
    pub(crate) fn eval(&self, t: f64) -> SVector<f64, D> {
        if self.steps.is_empty() || t == 0.0 {
            return self.y0;
        }
        let forward = self.duration > 0.0;
        // first step whose end lies at or beyond t
        let idx = self.steps.partition_point(|s| {
            let end = s.t0 + s.h;
            if forward {
                end < t
            } else {
                end > t
            }
        });
        let step = &self.steps[idx.min(self.steps.len() - 1)];
        if idx >= self.steps.len() - 1 && t == self.duration {
            return step.end();
        }
        step.eval(t)
    }

    pub(crate) fn final_state(&self) -> SVector<f64, D> {
        self.steps.last().map(DenseStep::end).unwrap_or(self.y0)
    }

    /// Times of the accepted nodes, starting with 0 and ending with the duration.
    pub(crate) fn nodes(&self) -> Vec<f64> {
        let mut t = Vec::with_capacity(self.steps.len() + 1);
        t.push(0.0);
        for (i, s) in self.steps.iter().enumerate() {
            if i + 1 == self.steps.len() {
                t.push(self.duration);
            } else {
                t.push(s.t0 + s.h);
            }
        }
        t
    }
}

fn error_norm<const D: usize>(
    err: &SVector<f64, D>,
    y0: &SVector<f64, D>,
    y1: &SVector<f64, D>,
    opts: &FlowOptions,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..D {
        let sc = opts.abs_tol + opts.rel_tol * y0[i].abs().max(y1[i].abs());
        let e = err[i] / sc;
        acc += e * e;
    }
    (acc / D as f64).sqrt()
}

fn initial_step<const D: usize, F>(
    f: &F,
    y0: &SVector<f64, D>,
    f0: &SVector<f64, D>,
    dir: f64,
    span: f64,
    opts: &FlowOptions,
) -> Result<f64>
where
    F: Fn(&SVector<f64, D>) -> Result<SVector<f64, D>>,
{
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..D {
        let sk = opts.abs_tol + opts.rel_tol * y0[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y0[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(opts.max_step).min(span);
    let y1 = y0 + f0 * (h * dir);
    let f1 = f(&y1)?;
    let mut der2 = 0.0;
    for i in 0..D {
        let sk = opts.abs_tol + opts.rel_tol * y0[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    Ok((100.0 * h).min(h1).min(opts.max_step).min(span))
}

/// Integrates `y' = f(y)` from `y0` over `duration` with adaptive steps.
///
/// `f` errors abort the integration and are reported with the time of the
/// last accepted step.
pub(crate) fn dopri5<const D: usize, F>(
    f: F,
    y0: SVector<f64, D>,
    duration: f64,
    opts: &FlowOptions,
) -> Result<DenseSolution<D>>
where
    F: Fn(&SVector<f64, D>) -> Result<SVector<f64, D>>,
{
    let mut sol = DenseSolution { y0, duration, steps: Vec::new() };
    if duration == 0.0 {
        return Ok(sol);
    }
    if !duration.is_finite() {
        return Err(Error::InvalidArgument(format!("duration {duration}")));
    }
    let dir = duration.signum();
    let span = duration.abs();
    let with_time = |e: Error, t: f64| match e {
        Error::Collision { radius, .. } => Error::Collision { t, radius },
        other => other,
    };

    let mut t = 0.0_f64;
    let mut y = y0;
    let mut k1 = f(&y).map_err(|e| with_time(e, 0.0))?;
    let mut h = initial_step(&f, &y, &k1, dir, span, opts).map_err(|e| with_time(e, 0.0))?;
    let mut reject = false;

    loop {
        if sol.steps.len() >= opts.max_steps {
            return Err(Error::TooManySteps { t });
        }
        let remaining = span - t.abs();
        let mut last = false;
        if h >= remaining * (1.0 - 1e-12) {
            h = remaining;
            last = true;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t });
        }
        let hs = h * dir;

        let stages = (|| -> Result<_> {
            let k2 = f(&(y + k1 * (A21 * hs)))?;
            let k3 = f(&(y + (k1 * A31 + k2 * A32) * hs))?;
            let k4 = f(&(y + (k1 * A41 + k2 * A42 + k3 * A43) * hs))?;
            let k5 = f(&(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * hs))?;
            let k6 = f(&(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * hs))?;
            let y1 = y + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * hs;
            let k7 = f(&y1)?;
            Ok((k2, k3, k4, k5, k6, k7, y1))
        })();
        let (_k2, k3, k4, k5, k6, k7, y1) = match stages {
            Ok(v) => v,
            Err(Error::Collision { .. }) => {
                // a trial stage entered the guard: shrink and retry
                h *= 0.25;
                reject = true;
                continue;
            }
            Err(e) => return Err(with_time(e, t * dir)),
        };
        let err = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * hs;
        let en = error_norm(&err, &y, &y1, opts);
        if !en.is_finite() {
            h *= 0.25;
            reject = true;
            continue;
        }

        if en <= 1.0 {
            let ydiff = y1 - y;
            let bspl = k1 * hs - ydiff;
            let rcont = [
                y,
                ydiff,
                bspl,
                ydiff - k7 * hs - bspl,
                (k1 * D1 + k3 * D3 + k4 * D4 + k5 * D5 + k6 * D6 + k7 * D7) * hs,
            ];
            sol.steps.push(DenseStep { t0: t * dir, h: hs, rcont });
            t += h;
            y = y1;
            k1 = k7;
            if last {
                return Ok(sol);
            }
            let mut fac = 0.9 * en.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 10.0);
            if reject {
                fac = fac.min(1.0);
            }
            reject = false;
            h = (h * fac).min(opts.max_step);
        } else {
            let fac = (0.9 * en.powf(-0.2)).max(0.2);
            h *= fac;
            reject = true;
        }
    }
}

/// Plain state plus the `lambda(X_F)` accumulator.
type Aug = SVector<f64, 5>;
/// State, column-major linearised flow, accumulator.
type VarAug = SVector<f64, 21>;

#[derive(Clone, Debug)]
enum SegmentData {
    Plain(DenseSolution<5>),
    Variational(DenseSolution<21>),
}

/// A solved stretch of trajectory with dense output.
#[derive(Clone, Debug)]
pub struct TrajectorySegment {
    pub system: String,
    pub initial: PhasePoint,
    pub duration: f64,
    data: SegmentData,
    /// Smallest `lambda(X_F)` seen at the accepted nodes.
    pub min_contact_density: f64,
    /// Largest `|F(x(t)) - F(x(0))|` at the accepted nodes.
    pub max_energy_drift: f64,
}

impl TrajectorySegment {
    pub fn state_vector(&self, t: f64) -> State {
        match &self.data {
            SegmentData::Plain(sol) => sol.eval(t).fixed_rows::<4>(0).into_owned(),
            SegmentData::Variational(sol) => sol.eval(t).fixed_rows::<4>(0).into_owned(),
        }
    }

    pub fn state(&self, t: f64) -> PhasePoint {
        PhasePoint::from_state(&self.state_vector(t))
    }

    pub fn final_state(&self) -> PhasePoint {
        self.state(self.duration)
    }

    pub fn final_state_vector(&self) -> State {
        match &self.data {
            SegmentData::Plain(sol) => sol.final_state().fixed_rows::<4>(0).into_owned(),
            SegmentData::Variational(sol) => sol.final_state().fixed_rows::<4>(0).into_owned(),
        }
    }

    /// Linearised flow `M(t)`, if the segment was integrated with it.
    pub fn monodromy(&self, t: f64) -> Option<Matrix4<f64>> {
        match &self.data {
            SegmentData::Plain(_) => None,
            SegmentData::Variational(sol) => Some(unpack_matrix(&sol.eval(t))),
        }
    }

    pub fn final_monodromy(&self) -> Option<Matrix4<f64>> {
        match &self.data {
            SegmentData::Plain(_) => None,
            SegmentData::Variational(sol) => Some(unpack_matrix(&sol.final_state())),
        }
    }

    /// Accumulated `integral lambda(X_F) dt` up to `t`.
    pub fn accumulated_length(&self, t: f64) -> f64 {
        match &self.data {
            SegmentData::Plain(sol) => sol.eval(t)[4],
            SegmentData::Variational(sol) => sol.eval(t)[20],
        }
    }

    fn final_accumulator(&self) -> f64 {
        match &self.data {
            SegmentData::Plain(sol) => sol.final_state()[4],
            SegmentData::Variational(sol) => sol.final_state()[20],
        }
    }

    /// Accepted node times, from 0 to the duration.
    pub fn nodes(&self) -> Vec<f64> {
        match &self.data {
            SegmentData::Plain(sol) => sol.nodes(),
            SegmentData::Variational(sol) => sol.nodes(),
        }
    }

    pub fn has_monodromy(&self) -> bool {
        matches!(self.data, SegmentData::Variational(_))
    }
}

fn unpack_matrix(y: &VarAug) -> Matrix4<f64> {
    Matrix4::from_iterator(y.iter().skip(4).take(16).copied())
}

fn check_collision(sys: &ReversibleSystem, x: &State, guard: f64) -> Result<()> {
    if sys.hamiltonian_template().kepler != 0.0 {
        let r = x[0].hypot(x[1]);
        if !(r >= guard) {
            return Err(Error::Collision { t: 0.0, radius: r });
        }
    }
    Ok(())
}

fn node_diagnostics(
    sys: &ReversibleSystem,
    x0: &State,
    nodes: &[f64],
    state: impl Fn(f64) -> State,
) -> (f64, f64) {
    let f0 = sys.energy(x0);
    let mut min_contact = f64::INFINITY;
    let mut drift = 0.0_f64;
    for &t in nodes {
        let x = state(t);
        min_contact = min_contact.min(sys.contact_density(&x));
        drift = drift.max((sys.energy(&x) - f0).abs());
    }
    (min_contact, drift)
}

/// Integrates the Hamiltonian flow from `x0` for the (signed) duration `t`.
pub fn integrate(
    sys: &ReversibleSystem,
    x0: &PhasePoint,
    t: f64,
    opts: &FlowOptions,
) -> Result<TrajectorySegment> {
    let x = x0.to_state();
    check_collision(sys, &x, opts.collision_radius)?;
    let guard = opts.collision_radius;
    let rhs = |y: &Aug| -> Result<Aug> {
        let x = y.fixed_rows::<4>(0).into_owned();
        check_collision(sys, &x, guard)?;
        let v = sys.vector_field_unchecked(&x);
        Ok(Aug::new(v[0], v[1], v[2], v[3], sys.liouville(&x, &v)))
    };
    let y0 = Aug::new(x[0], x[1], x[2], x[3], 0.0);
    let sol = dopri5(rhs, y0, t, opts)?;
    let nodes = sol.nodes();
    let (min_contact_density, max_energy_drift) =
        node_diagnostics(sys, &x, &nodes, |s| sol.eval(s).fixed_rows::<4>(0).into_owned());
    Ok(TrajectorySegment {
        system: sys.id.clone(),
        initial: *x0,
        duration: t,
        data: SegmentData::Plain(sol),
        min_contact_density,
        max_energy_drift,
    })
}

/// Integrates the flow together with `M' = DX_F(x) M`, `M(0) = Id`.
pub fn integrate_variational(
    sys: &ReversibleSystem,
    x0: &PhasePoint,
    t: f64,
    opts: &FlowOptions,
) -> Result<TrajectorySegment> {
    let x = x0.to_state();
    check_collision(sys, &x, opts.collision_radius)?;
    let guard = opts.collision_radius;
    let rhs = |y: &VarAug| -> Result<VarAug> {
        let x = y.fixed_rows::<4>(0).into_owned();
        check_collision(sys, &x, guard)?;
        let v = sys.vector_field_unchecked(&x);
        let a = sys.vector_field_jacobian(&x);
        let m = unpack_matrix(y);
        let dm = a * m;
        let mut out = VarAug::zeros();
        out.fixed_rows_mut::<4>(0).copy_from(&v);
        for (i, val) in dm.iter().enumerate() {
            out[4 + i] = *val;
        }
        out[20] = sys.liouville(&x, &v);
        Ok(out)
    };
    let mut y0 = VarAug::zeros();
    y0.fixed_rows_mut::<4>(0).copy_from(&x);
    for i in 0..4 {
        y0[4 + 5 * i] = 1.0;
    }
    let sol = dopri5(rhs, y0, t, opts)?;
    let nodes = sol.nodes();
    let (min_contact_density, max_energy_drift) =
        node_diagnostics(sys, &x, &nodes, |s| sol.eval(s).fixed_rows::<4>(0).into_owned());
    Ok(TrajectorySegment {
        system: sys.id.clone(),
        initial: *x0,
        duration: t,
        data: SegmentData::Variational(sol),
        min_contact_density,
        max_energy_drift,
    })
}

/// `integral_0^T lambda(X_F(x(t))) dt`, the Reeb length of the segment.
pub fn reeb_length(seg: &TrajectorySegment) -> Result<f64> {
    if seg.duration == 0.0 {
        return Ok(0.0);
    }
    if !(seg.min_contact_density > 0.0) {
        return Err(Error::NotContactType { t: 0.0, value: seg.min_contact_density });
    }
    Ok(seg.final_accumulator())
}

/// Closed interval of times searched for fixed-set crossings. The left end is
/// excluded from the result and the right end included.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn whole(seg: &TrajectorySegment) -> Self {
        Self { start: 0.0, end: seg.duration }
    }
}

/// Tolerance on `|g2|` for accepting a `g1` root as a fixed-set crossing.
pub const CROSSING_FILTER_TOL: f64 = 1e-8;
const CROSSING_SUBSAMPLES: usize = 4;

/// Times in `(window.start, window.end]` where the segment meets `Fix(inv)`.
///
/// Sign changes of `g1` are bracketed on the dense output, refined there, then
/// polished by Newton on `g1` with exact re-integration from the nearest node;
/// roots with `|g2| >= 1e-8` are dropped.
pub fn detect_fix_crossings(
    sys: &ReversibleSystem,
    seg: &TrajectorySegment,
    inv: &Involution,
    window: Window,
    opts: &FlowOptions,
) -> Vec<(f64, PhasePoint)> {
    let (a, b) = (window.start.max(0.0), window.end.min(seg.duration));
    if seg.duration <= 0.0 || b <= a {
        return Vec::new();
    }
    let g1 = |t: f64| inv.fix_defining_state(&seg.state_vector(t))[0];

    let mut samples: Vec<f64> = vec![a];
    for w in seg.nodes().windows(2) {
        let (t0, t1) = (w[0], w[1]);
        for k in 0..CROSSING_SUBSAMPLES {
            let t = t0 + (t1 - t0) * (k + 1) as f64 / CROSSING_SUBSAMPLES as f64;
            if t > a && t < b {
                samples.push(t);
            }
        }
    }
    samples.push(b);

    let zero_tol = 1e-9;
    let mut roots = Vec::new();
    let mut prev_t = a;
    let mut prev_g = g1(a);
    if prev_g.abs() <= zero_tol {
        // root sitting on the excluded left end: take the side from the next sample
        prev_g = 0.0;
    }
    for &t in &samples[1..] {
        let g = g1(t);
        let at_right_end = t == b && g.abs() <= zero_tol;
        if at_right_end {
            roots.push(b);
        } else if prev_g != 0.0 && g != 0.0 && prev_g.signum() != g.signum() {
            roots.push(bisect(&g1, prev_t, t, prev_g));
        } else if prev_g == 0.0 && t == samples[1] {
            // nothing: leaving a root at the excluded left end
        }
        prev_t = t;
        prev_g = g;
    }

    let nodes = seg.nodes();
    let mut out: Vec<(f64, PhasePoint)> = Vec::new();
    for t in roots {
        let (t, x) = polish_crossing(sys, seg, inv, &nodes, t, opts);
        let g = inv.fix_defining_state(&x.to_state());
        if g[1].abs() < CROSSING_FILTER_TOL
            && g[0].abs() < CROSSING_FILTER_TOL
            && t > a
            && out.last().is_none_or(|(s, _)| (t - s).abs() > 1e-9)
        {
            out.push((t, x));
        }
    }
    out
}

fn bisect(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, g_lo: f64) -> f64 {
    let sign_lo = g_lo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if gm.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn state_by_reintegration(
    sys: &ReversibleSystem,
    seg: &TrajectorySegment,
    nodes: &[f64],
    t: f64,
    opts: &FlowOptions,
) -> Option<State> {
    let idx = nodes.partition_point(|&s| s <= t).saturating_sub(1);
    let t0 = nodes[idx];
    let x0 = seg.state(t0);
    if t == t0 {
        return Some(x0.to_state());
    }
    integrate(sys, &x0, t - t0, opts).ok().map(|s| s.final_state_vector())
}

fn polish_crossing(
    sys: &ReversibleSystem,
    seg: &TrajectorySegment,
    inv: &Involution,
    nodes: &[f64],
    t: f64,
    opts: &FlowOptions,
) -> (f64, PhasePoint) {
    let row = inv.defining_rows()[0];
    let mut t = t;
    let mut x = seg.state_vector(t);
    for _ in 0..4 {
        let Some(y) = state_by_reintegration(sys, seg, nodes, t, opts) else { break };
        x = y;
        let g = row.dot(&x);
        let dg = row.dot(&sys.vector_field_unchecked(&x));
        if dg == 0.0 {
            break;
        }
        let dt = -g / dg;
        if !(dt.abs() < 1e-3) {
            break;
        }
        t = (t + dt).clamp(0.0, seg.duration);
        if dt.abs() < 1e-14 {
            break;
        }
    }
    if let Some(y) = state_by_reintegration(sys, seg, nodes, t, opts) {
        x = y;
    }
    (t, PhasePoint::from_state(&x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{make_system, symplectic_matrix, Branch};
    use approx::assert_abs_diff_eq;

    /// Radius of the direct circular orbit on level tau, by scalar Newton.
    fn circular_radius(tau: f64) -> f64 {
        let mut r: f64 = 0.5;
        for _ in 0..100 {
            let f = -0.5 / r - r.sqrt() - tau;
            let df = 0.5 / (r * r) - 0.5 / r.sqrt();
            r -= f / df;
        }
        r
    }

    #[test]
    fn zero_duration_is_identity() {
        let sys = make_system("rotating-kepler").unwrap();
        let x0 = PhasePoint::new(0.5, 0.0, 0.0, -1.4);
        let seg = integrate_variational(&sys, &x0, 0.0, &FlowOptions::default()).unwrap();
        assert_eq!(seg.final_state(), x0);
        assert_eq!(seg.final_monodromy().unwrap(), Matrix4::identity());
        assert_eq!(reeb_length(&seg).unwrap(), 0.0);
    }

    #[test]
    fn circular_orbit_returns() {
        let sys = make_system("rotating-kepler").unwrap();
        let r = circular_radius(-1.8);
        let x0 = PhasePoint::new(r, 0.0, 0.0, -1.0 / r.sqrt());
        let period = 2.0 * std::f64::consts::PI / (r.powf(-1.5) - 1.0);
        let seg = integrate(&sys, &x0, period, &FlowOptions::default()).unwrap();
        assert!(seg.final_state().distance(&x0) < 1e-8);
        assert!(seg.max_energy_drift < 1e-9);
        // length t (1/r - sqrt r)
        let len = reeb_length(&seg).unwrap();
        assert_abs_diff_eq!(len, period * (1.0 / r - r.sqrt()), epsilon = 1e-9 * len);
    }

    #[test]
    fn bit_for_bit_reproducible() {
        let sys = make_system("hill-lunar").unwrap();
        let x0 = PhasePoint::new(0.3, 0.0, 0.0, -1.9);
        let a = integrate(&sys, &x0, 3.3, &FlowOptions::default()).unwrap();
        let b = integrate(&sys, &x0, 3.3, &FlowOptions::default()).unwrap();
        assert_eq!(a.final_state(), b.final_state());
        assert_eq!(a.nodes(), b.nodes());
    }

    #[test]
    fn linear_flow_matches_matrix_exponential() {
        let sys = make_system("rotating-oscillator-test").unwrap();
        let x0 = PhasePoint::new(1.0, 0.0, 0.0, 0.0);
        let a = sys.vector_field_jacobian(&x0.to_state());
        let t = 2.7;
        let expm = (a * t).exp();
        let seg = integrate_variational(&sys, &x0, t, &FlowOptions::default()).unwrap();
        let exact = expm * x0.to_state();
        assert!((seg.final_state_vector() - exact).norm() < 1e-10);
        assert!((seg.final_monodromy().unwrap() - expm).abs().max() < 1e-9);
    }

    #[test]
    fn monodromy_is_symplectic_and_transports_the_flow_direction() {
        let sys = make_system("rotating-kepler").unwrap();
        let r = circular_radius(-1.8);
        let x0 = PhasePoint::new(r, 0.0, 0.0, -1.0 / r.sqrt());
        let seg = integrate_variational(&sys, &x0, 3.0, &FlowOptions::default()).unwrap();
        let m = seg.final_monodromy().unwrap();
        let j = symplectic_matrix();
        assert!((m.transpose() * j * m - j).abs().max() < 1e-6);
        assert!((m.determinant() - 1.0).abs() < 1e-6);
        let v0 = sys.vector_field_state(&x0.to_state()).unwrap();
        let v1 = sys.vector_field_state(&seg.final_state_vector()).unwrap();
        assert!((m * v0 - v1).norm() < 1e-6);
    }

    #[test]
    fn circular_fix_crossings() {
        let sys = make_system("rotating-kepler").unwrap();
        let r = circular_radius(-1.8);
        let x0 = PhasePoint::new(r, 0.0, 0.0, -1.0 / r.sqrt());
        let period = 2.0 * std::f64::consts::PI / (r.powf(-1.5) - 1.0);
        let opts = FlowOptions::default();
        let seg = integrate(&sys, &x0, period, &opts).unwrap();
        let rho0 = sys.involution("rho0").unwrap();
        let hits = detect_fix_crossings(&sys, &seg, rho0, Window::whole(&seg), &opts);
        assert_eq!(hits.len(), 2);
        assert!((hits[0].0 - period / 2.0).abs() < 1e-10);
        assert!((hits[1].0 - period).abs() < 1e-10);
        let rho90 = sys.involution("rho_pi2").unwrap();
        let hits = detect_fix_crossings(&sys, &seg, rho90, Window::whole(&seg), &opts);
        assert_eq!(hits.len(), 2);
        assert!((hits[0].0 - period / 4.0).abs() < 1e-10);
        assert!((hits[1].0 - 3.0 * period / 4.0).abs() < 1e-10);
        assert!(detect_fix_crossings(&sys, &seg, rho0, Window::new(1.0, 1.0), &opts).is_empty());
    }

    #[test]
    fn reversed_trajectory_is_reflected() {
        let sys = make_system("hill-lunar").unwrap();
        let opts = FlowOptions::default();
        for inv in sys.involutions() {
            let x0 = sys.fix_chart(inv, 0.25, -3.9, Branch::Direct).unwrap();
            let fwd = integrate(&sys, &x0, 2.5, &opts).unwrap();
            let bwd = integrate(&sys, &x0, -2.5, &opts).unwrap();
            for k in 1..=10 {
                let t = 0.25 * k as f64;
                let lhs = inv.apply(&fwd.state(t));
                assert!(lhs.distance(&bwd.state(-t)) < 1e-8, "{} at {t}", inv.id);
            }
        }
    }

    #[test]
    fn collision_is_reported_with_time() {
        let sys = make_system("rotating-kepler").unwrap();
        // radial fall: zero inertial angular momentum
        let x0 = PhasePoint::new(0.5, 0.0, 0.0, 0.0);
        let opts = FlowOptions { collision_radius: 1e-3, ..FlowOptions::default() };
        match integrate(&sys, &x0, 10.0, &opts) {
            Err(Error::StepSizeUnderflow { t }) | Err(Error::Collision { t, .. }) => assert!(t > 0.0),
            other => panic!("expected a rejection, got {:?}", other.map(|s| s.final_state())),
        }
    }

    #[test]
    fn contact_violation_is_rejected() {
        let sys = make_system("rotating-oscillator-test").unwrap();
        let seg = integrate(&sys, &PhasePoint::new(1.0, 0.0, 0.0, 0.0), 1.0, &FlowOptions::default())
            .unwrap();
        assert!(matches!(reeb_length(&seg), Err(Error::NotContactType { .. })));
    }
}
