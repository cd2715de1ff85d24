//! Chords between fixed-point sets at fixed energy, and the symmetric
//! periodic orbits they close up into.

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{
    detect_fix_crossings, integrate, integrate_variational, reeb_length, FlowOptions,
    TrajectorySegment, Window,
};
use crate::index::{degeneracy_measure, DEFAULT_DEGENERACY_THRESHOLD};
use crate::systems::{Branch, Involution, PhasePoint, ReversibleSystem};

/// A solved chord. `duration` is Hamiltonian time, `eta` the Reeb length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chord {
    pub system: String,
    pub involution: String,
    pub end_involution: String,
    pub branch: Branch,
    pub tau: f64,
    pub s: f64,
    #[serde(rename = "T")]
    pub duration: f64,
    pub eta: f64,
    pub m: u64,
    pub nondegenerate: bool,
    pub residual: f64,
    pub degeneracy_measure: f64,
    #[serde(skip)]
    pub newton_steps: usize,
}

impl Chord {
    pub fn spec(&self) -> ChordSpec {
        ChordSpec {
            start: self.involution.clone(),
            end: self.end_involution.clone(),
            tau: self.tau,
            branch: self.branch,
        }
    }

    pub fn is_double(&self) -> bool {
        self.involution != self.end_involution
    }

    pub fn involutions<'a>(&self, sys: &'a ReversibleSystem) -> Result<(&'a Involution, &'a Involution)> {
        Ok((sys.involution(&self.involution)?, sys.involution(&self.end_involution)?))
    }

    pub fn start_point(&self, sys: &ReversibleSystem) -> Result<PhasePoint> {
        sys.fix_chart(sys.involution(&self.involution)?, self.s, self.tau, self.branch)
    }

    /// Distance in the `(s, T)` plane.
    pub fn distance(&self, other: &Chord) -> f64 {
        (self.s - other.s).hypot(self.duration - other.duration)
    }
}

/// Boundary condition of a chord: start and end fixed sets, energy, chart branch.
#[derive(Clone, Debug, PartialEq)]
pub struct ChordSpec {
    pub start: String,
    pub end: String,
    pub tau: f64,
    pub branch: Branch,
}

impl ChordSpec {
    pub fn single(inv: &str, tau: f64) -> Self {
        Self { start: inv.into(), end: inv.into(), tau, branch: Branch::Direct }
    }

    pub fn double(start: &str, end: &str, tau: f64) -> Self {
        Self { start: start.into(), end: end.into(), tau, branch: Branch::Direct }
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        Self { tau, ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShootOptions {
    pub flow: FlowOptions,
    pub tol: f64,
    pub max_iterations: usize,
    pub degeneracy_threshold: f64,
    pub covering_tol: f64,
    /// A stalled iterate with residual below this is accepted; zero disables.
    pub stagnation_tol: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            flow: FlowOptions::default(),
            tol: 1e-10,
            max_iterations: 50,
            degeneracy_threshold: DEFAULT_DEGENERACY_THRESHOLD,
            covering_tol: 1e-7,
            stagnation_tol: 0.0,
        }
    }
}

/// Converged Newton iterate with the data needed to finalise a chord.
#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub s: f64,
    pub duration: f64,
    pub residual: f64,
    pub iterations: usize,
    pub jacobian: Matrix2<f64>,
    pub segment: TrajectorySegment,
}

struct Evaluation {
    g: Vector2<f64>,
    jac: Matrix2<f64>,
    g_tau: Vector2<f64>,
    seg: TrajectorySegment,
}

fn evaluate(
    sys: &ReversibleSystem,
    start: &Involution,
    end: &Involution,
    spec: &ChordSpec,
    s: f64,
    duration: f64,
    flow: &FlowOptions,
) -> Result<Evaluation> {
    let x0 = sys.fix_chart(start, s, spec.tau, spec.branch)?;
    let seg = integrate_variational(sys, &x0, duration, flow)?;
    let x1 = seg.final_state_vector();
    let m = seg.final_monodromy().expect("variational");
    let rows = end.defining_rows();
    let dx_ds = m * sys.chart_tangent(start, &x0.to_state());
    let v1 = sys.vector_field_unchecked(&x1);
    let g = Vector2::new(rows[0].dot(&x1), rows[1].dot(&x1));
    let jac = Matrix2::new(rows[0].dot(&dx_ds), rows[0].dot(&v1), rows[1].dot(&dx_ds), rows[1].dot(&v1));
    let dx_dtau = m * sys.chart_energy_derivative(start, &x0.to_state());
    let g_tau = Vector2::new(rows[0].dot(&dx_dtau), rows[1].dot(&dx_dtau));
    Ok(Evaluation { g, jac, g_tau, seg })
}

/// Residual, Jacobian in `(s, T)` and derivative in `tau` of the shooting map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShootingData {
    pub residual: Vector2<f64>,
    pub jacobian: Matrix2<f64>,
    pub d_tau: Vector2<f64>,
}

impl ShootingData {
    /// `d(s, T)/d tau` along the solution curve, from the implicit function
    /// theorem.
    pub fn tangent(&self) -> Option<Vector2<f64>> {
        self.jacobian.lu().solve(&(-self.d_tau))
    }
}

pub fn shooting_data(
    sys: &ReversibleSystem,
    spec: &ChordSpec,
    s: f64,
    duration: f64,
    flow: &FlowOptions,
) -> Result<ShootingData> {
    let ev = evaluate(sys, sys.involution(&spec.start)?, sys.involution(&spec.end)?, spec, s, duration, flow)?;
    Ok(ShootingData { residual: ev.g, jacobian: ev.jac, d_tau: ev.g_tau })
}

/// Determinant of the shooting Jacobian scaled by its column norms.
pub fn relative_determinant(jac: &Matrix2<f64>) -> f64 {
    let scale = jac.column(0).norm() * jac.column(1).norm();
    if scale == 0.0 {
        0.0
    } else {
        jac.determinant() / scale
    }
}

const SINGULAR_TOL: f64 = 1e-14;

/// Damped Newton on `G(s, T) = g_end(x(T; s))`.
pub fn newton(
    sys: &ReversibleSystem,
    spec: &ChordSpec,
    s_seed: f64,
    t_seed: f64,
    opts: &ShootOptions,
) -> Result<NewtonOutcome> {
    newton_within(sys, spec, s_seed, t_seed, opts, None)
}

fn newton_within(
    sys: &ReversibleSystem,
    spec: &ChordSpec,
    s_seed: f64,
    t_seed: f64,
    opts: &ShootOptions,
    bounds: Option<&ScanWindow>,
) -> Result<NewtonOutcome> {
    if !(t_seed > 0.0) {
        return Err(Error::InvalidArgument(format!("duration seed {t_seed} must be positive")));
    }
    let start = sys.involution(&spec.start)?;
    let end = sys.involution(&spec.end)?;
    let (mut s, mut t) = (s_seed, t_seed);
    let mut ev = evaluate(sys, start, end, spec, s, t, &opts.flow)?;
    let mut norm = ev.g.norm();
    for iteration in 0..=opts.max_iterations {
        if norm < opts.tol {
            return Ok(NewtonOutcome {
                s,
                duration: t,
                residual: norm,
                iterations: iteration,
                jacobian: ev.jac,
                segment: ev.seg,
            });
        }
        if iteration == opts.max_iterations {
            break;
        }
        let rel_det = relative_determinant(&ev.jac);
        if rel_det.abs() < SINGULAR_TOL {
            return Err(Error::NearDegenerate { s, duration: t, det: rel_det });
        }
        let step = ev.jac.lu().solve(&(-ev.g)).unwrap_or_else(Vector2::zeros);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let (s1, t1) = (s + lambda * step[0], t + lambda * step[1]);
            if t1 > 0.0 {
                if let Ok(next) = evaluate(sys, start, end, spec, s1, t1, &opts.flow) {
                    if next.g.norm() < norm {
                        accepted = Some((s1, t1, next));
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        let Some((s1, t1, next)) = accepted else { break };
        if bounds.is_some_and(|w| !w.contains(s1, t1)) {
            return Err(Error::NonConvergence { iterations: iteration + 1, residual: next.g.norm() });
        }
        s = s1;
        t = t1;
        norm = next.g.norm();
        ev = next;
    }
    if norm < opts.stagnation_tol {
        return Ok(NewtonOutcome {
            s,
            duration: t,
            residual: norm,
            iterations: opts.max_iterations,
            jacobian: ev.jac,
            segment: ev.seg,
        });
    }
    let rel_det = relative_determinant(&ev.jac);
    if rel_det.abs() < 1e-6 {
        Err(Error::NearDegenerate { s, duration: t, det: rel_det })
    } else {
        Err(Error::NonConvergence { iterations: opts.max_iterations, residual: norm })
    }
}

/// Covering number read off interior fixed-set hits: the smallest hit time
/// `t` with `T/t` an integer `m >= 2`.
fn covering_multiplicity(
    sys: &ReversibleSystem,
    seg: &TrajectorySegment,
    end: &Involution,
    double: bool,
    opts: &ShootOptions,
) -> u64 {
    let duration = seg.duration;
    let hits = detect_fix_crossings(sys, seg, end, Window::whole(seg), &opts.flow);
    for (t, _) in hits {
        if t >= duration * (1.0 - 1e-9) {
            continue;
        }
        let ratio = duration / t;
        let m = ratio.round();
        if m >= 2.0 && (ratio - m).abs() < opts.covering_tol && (!double || m as u64 % 2 == 1) {
            return m as u64;
        }
    }
    1
}

/// Turns a converged Newton iterate into a chord record.
pub fn finalize(
    sys: &ReversibleSystem,
    spec: &ChordSpec,
    outcome: &NewtonOutcome,
    opts: &ShootOptions,
) -> Result<Chord> {
    let start = sys.involution(&spec.start)?;
    let end = sys.involution(&spec.end)?;
    let seg = &outcome.segment;
    let eta = reeb_length(seg)?;
    let measure = degeneracy_measure(sys, seg, start, end)?;
    let m = covering_multiplicity(sys, seg, end, spec.start != spec.end, opts);
    let x1 = seg.final_state_vector();
    let g = end.fix_defining_state(&x1);
    let residual = g[0].abs().max(g[1].abs());
    if residual > opts.stagnation_tol.max(1e-9) {
        return Err(Error::EndpointResidual { residual });
    }
    Ok(Chord {
        system: sys.id.clone(),
        involution: spec.start.clone(),
        end_involution: spec.end.clone(),
        branch: spec.branch,
        tau: spec.tau,
        s: outcome.s,
        duration: outcome.duration,
        eta,
        m,
        nondegenerate: measure.abs() >= opts.degeneracy_threshold,
        residual,
        degeneracy_measure: measure,
        newton_steps: outcome.iterations,
    })
}

/// Solves for a chord from `Fix(spec.start)` to `Fix(spec.end)` on `F = tau`.
pub fn shoot_spec(
    sys: &ReversibleSystem,
    spec: &ChordSpec,
    s_seed: f64,
    t_seed: f64,
    opts: &ShootOptions,
) -> Result<Chord> {
    let outcome = newton(sys, spec, s_seed, t_seed, opts)?;
    finalize(sys, spec, &outcome, opts)
}

/// Solves for a chord from `Fix(inv)` back to `Fix(inv)` on `F = tau`.
pub fn shoot(
    sys: &ReversibleSystem,
    inv: &str,
    tau: f64,
    s_seed: f64,
    t_seed: f64,
    opts: &ShootOptions,
) -> Result<Chord> {
    shoot_spec(sys, &ChordSpec::single(inv, tau), s_seed, t_seed, opts)
}

/// Covering number and the underlying simple chord.
pub fn covering_analysis(
    sys: &ReversibleSystem,
    ch: &Chord,
    opts: &ShootOptions,
) -> Result<(u64, Chord)> {
    let (_, end) = ch.involutions(sys)?;
    let x0 = ch.start_point(sys)?;
    let seg = integrate(sys, &x0, ch.duration, &opts.flow)?;
    let m = covering_multiplicity(sys, &seg, end, ch.is_double(), opts);
    if m == 1 {
        return Ok((1, Chord { m: 1, ..ch.clone() }));
    }
    let mut base = shoot_spec(sys, &ch.spec(), ch.s, ch.duration / m as f64, opts)?;
    base.m = 1;
    Ok((m, base))
}

/// The reflected chord `t -> rho(c(eta - t))`, solved from the end point.
pub fn partner_chord(sys: &ReversibleSystem, ch: &Chord, opts: &ShootOptions) -> Result<Chord> {
    let (_, end) = ch.involutions(sys)?;
    let x0 = ch.start_point(sys)?;
    let seg = integrate(sys, &x0, ch.duration, &opts.flow)?;
    let x1 = seg.final_state_vector();
    let spec = ChordSpec {
        start: ch.end_involution.clone(),
        end: ch.involution.clone(),
        tau: ch.tau,
        branch: sys.chart_branch(end, &x1),
    };
    shoot_spec(sys, &spec, end.chart_coordinate(&x1), ch.duration, opts)
}

/// `integral c^* lambda - integral (F - tau)` by Gauss-Legendre quadrature on
/// the integrator's steps.
pub fn action_value(sys: &ReversibleSystem, ch: &Chord, opts: &ShootOptions) -> Result<f64> {
    const NODES: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683_1,
        0.0,
        0.538_469_310_105_683_1,
        0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.236_926_885_056_189_1,
        0.478_628_670_499_366_5,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
    ];
    let x0 = ch.start_point(sys)?;
    let seg = integrate(sys, &x0, ch.duration, &opts.flow)?;
    let mut total = 0.0;
    for w in seg.nodes().windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (node, weight) in NODES.iter().zip(WEIGHTS) {
            let x = seg.state_vector(mid + half * node);
            let v = sys.vector_field_unchecked(&x);
            total += weight * half * (sys.liouville(&x, &v) - (sys.energy(&x) - ch.tau));
        }
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosureKind {
    Single,
    Double,
}

/// Closed symmetric orbit sampled at uniform times over one period.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymmetricOrbit {
    pub chord: Chord,
    pub kind: ClosureKind,
    pub period: f64,
    pub start: PhasePoint,
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    /// `|x(period) - x(0)|`.
    pub closure_residual: f64,
    /// Largest violation of the time-reversal identities on the samples.
    pub symmetry_residual: f64,
    /// Largest mismatch between the integrated loop and the glued pieces.
    pub junction_residual: f64,
}

/// Default number of samples for closed loops.
pub const DEFAULT_LOOP_SAMPLES: usize = 256;

fn wrap(t: f64, period: f64) -> f64 {
    t.rem_euclid(period)
}

/// Glues `c` and `rho(c(eta - t))` into the period-`2 eta` loop.
pub fn close_chord(
    sys: &ReversibleSystem,
    ch: &Chord,
    samples: usize,
    opts: &FlowOptions,
) -> Result<SymmetricOrbit> {
    if ch.is_double() {
        return Err(Error::InvalidArgument("chord ends on a different fixed set".into()));
    }
    if ch.residual > 1e-8 {
        return Err(Error::EndpointResidual { residual: ch.residual });
    }
    let rho = sys.involution(&ch.involution)?;
    let x0 = ch.start_point(sys)?;
    let t = ch.duration;
    let period = 2.0 * t;
    let chord_seg = integrate(sys, &x0, t, opts)?;
    let end_residual = rho.fix_defining(&chord_seg.final_state());
    let end_residual = end_residual[0].abs().max(end_residual[1].abs());
    if end_residual > 1e-8 {
        return Err(Error::EndpointResidual { residual: end_residual });
    }
    let seg = integrate(sys, &x0, period, opts)?;
    let n = samples.max(4);
    let times: Vec<f64> = (0..n).map(|k| period * k as f64 / n as f64).collect();
    let points: Vec<PhasePoint> = times.iter().map(|&s| seg.state(s)).collect();

    let glued = |s: f64| {
        if s <= t {
            chord_seg.state(s)
        } else {
            rho.apply(&chord_seg.state(period - s))
        }
    };
    let mut symmetry: f64 = 0.0;
    let mut junction: f64 = 0.0;
    for (&s, x) in times.iter().zip(&points) {
        let mirrored = seg.state(wrap(period - s, period));
        symmetry = symmetry.max(rho.apply(x).distance(&mirrored));
        junction = junction.max(glued(s).distance(x));
    }
    Ok(SymmetricOrbit {
        chord: ch.clone(),
        kind: ClosureKind::Single,
        period,
        start: x0,
        times,
        points,
        closure_residual: seg.final_state().distance(&x0),
        symmetry_residual: symmetry,
        junction_residual: junction,
    })
}

/// Builds the period-`4 eta` loop from a chord between two commuting
/// involutions.
pub fn close_double_chord(
    sys: &ReversibleSystem,
    ch: &Chord,
    samples: usize,
    opts: &FlowOptions,
) -> Result<SymmetricOrbit> {
    if !ch.is_double() {
        return Err(Error::InvalidArgument("chord starts and ends on the same fixed set".into()));
    }
    if ch.residual > 1e-8 {
        return Err(Error::EndpointResidual { residual: ch.residual });
    }
    let (rho1, rho2) = ch.involutions(sys)?;
    let x0 = ch.start_point(sys)?;
    let t = ch.duration;
    let period = 4.0 * t;
    let chord_seg = integrate(sys, &x0, t, opts)?;
    let g = rho2.fix_defining(&chord_seg.final_state());
    if g[0].abs().max(g[1].abs()) > 1e-8 {
        return Err(Error::EndpointResidual { residual: g[0].abs().max(g[1].abs()) });
    }
    let seg = integrate(sys, &x0, period, opts)?;
    let c = |s: f64| chord_seg.state(s.clamp(0.0, t));
    let pieces = |s: f64| -> PhasePoint {
        if s <= t {
            c(s)
        } else if s <= 2.0 * t {
            rho2.apply(&c(2.0 * t - s))
        } else if s <= 3.0 * t {
            rho1.apply(&rho2.apply(&c(s - 2.0 * t)))
        } else {
            rho1.apply(&c(4.0 * t - s))
        }
    };
    let n = samples.max(8);
    let times: Vec<f64> = (0..n).map(|k| period * k as f64 / n as f64).collect();
    let points: Vec<PhasePoint> = times.iter().map(|&s| seg.state(s)).collect();
    let mut junction: f64 = 0.0;
    for j in 1..=3 {
        let s = j as f64 * t;
        let left = pieces(s);
        let right = match j {
            1 => rho2.apply(&c(t)),
            2 => rho1.apply(&rho2.apply(&c(0.0))),
            _ => rho1.apply(&c(t)),
        };
        junction = junction.max(left.distance(&right));
    }
    let mut symmetry: f64 = 0.0;
    for (&s, x) in times.iter().zip(&points) {
        junction = junction.max(pieces(s).distance(x));
        let m1 = seg.state(wrap(period - s, period));
        let m2 = seg.state(wrap(2.0 * t - s, period));
        symmetry = symmetry.max(rho1.apply(x).distance(&m1)).max(rho2.apply(x).distance(&m2));
    }
    Ok(SymmetricOrbit {
        chord: ch.clone(),
        kind: ClosureKind::Double,
        period,
        start: x0,
        times,
        points,
        closure_residual: seg.final_state().distance(&x0),
        symmetry_residual: symmetry,
        junction_residual: junction,
    })
}

/// Isolation window in chart coordinate and duration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanWindow {
    pub s: (f64, f64),
    pub duration: (f64, f64),
}

impl ScanWindow {
    /// The window grown by `factor` times its size on every side.
    pub fn expanded(&self, factor: f64) -> Self {
        let ds = factor * (self.s.1 - self.s.0);
        let dt = factor * (self.duration.1 - self.duration.0);
        Self {
            s: (self.s.0 - ds, self.s.1 + ds),
            duration: (self.duration.0 - dt, self.duration.1 + dt),
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.s.0 < self.s.1 && self.duration.0 < self.duration.1)
    }

    pub fn contains(&self, s: f64, t: f64) -> bool {
        s >= self.s.0 && s <= self.s.1 && t >= self.duration.0 && t <= self.duration.1
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    pub grid: usize,
    pub dedupe_tol: f64,
    pub branch: Branch,
    /// Options for the final polish of each distinct candidate.
    pub shoot: ShootOptions,
    /// Options for the grid phase.
    pub coarse: ShootOptions,
}

impl Default for ScanOptions {
    fn default() -> Self {
        let shoot = ShootOptions::default();
        let flow = FlowOptions { abs_tol: 1e-8, rel_tol: 1e-8, ..shoot.flow };
        Self {
            grid: 64,
            dedupe_tol: 1e-6,
            branch: Branch::Direct,
            shoot,
            coarse: ShootOptions { flow, tol: 1e-7, max_iterations: 15, ..shoot },
        }
    }
}

/// Distinct chords reached by Newton from a uniform grid of seeds in the
/// window, sorted by `(s, T)`.
pub fn neighborhood_scan(
    sys: &ReversibleSystem,
    inv: &str,
    tau: f64,
    window: ScanWindow,
    opts: &ScanOptions,
) -> Vec<Chord> {
    if window.is_empty() || opts.grid == 0 || sys.involution(inv).is_err() {
        return Vec::new();
    }
    let spec = ChordSpec { branch: opts.branch, ..ChordSpec::single(inv, tau) };
    let n = opts.grid;
    let seeds: Vec<(f64, f64)> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let s = window.s.0 + (window.s.1 - window.s.0) * (i as f64 + 0.5) / n as f64;
            let t = window.duration.0 + (window.duration.1 - window.duration.0) * (j as f64 + 0.5) / n as f64;
            (s, t)
        })
        .collect();
    let reach = window.expanded(0.5);
    let mut found: Vec<(f64, f64)> = seeds
        .par_iter()
        .filter_map(|&(s, t)| {
            let out = newton_within(sys, &spec, s, t, &opts.coarse, Some(&reach)).ok()?;
            reach.contains(out.s, out.duration).then_some((out.s, out.duration))
        })
        .collect();
    found.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // coarse solutions agree to roughly the coarse tolerance
    let coarse_tol = opts.dedupe_tol.max(1e3 * opts.coarse.tol);
    let candidates = dedupe(found, coarse_tol);
    let polished: Vec<Chord> = candidates
        .into_par_iter()
        .filter_map(|(s, t)| shoot_spec(sys, &spec, s, t, &opts.shoot).ok())
        .filter(|c| window.contains(c.s, c.duration))
        .collect();
    let mut out: Vec<Chord> = Vec::new();
    for c in polished {
        if out.iter().all(|d| d.distance(&c) >= opts.dedupe_tol) {
            out.push(c);
        }
    }
    out.sort_by(|a, b| (a.s, a.duration).partial_cmp(&(b.s, b.duration)).unwrap());
    out
}

fn dedupe(points: Vec<(f64, f64)>, tol: f64) -> Vec<(f64, f64)> {
    let mut distinct: Vec<(f64, f64)> = Vec::new();
    for p in points {
        if distinct.iter().all(|q| (p.0 - q.0).hypot(p.1 - q.1) >= tol) {
            distinct.push(p);
        }
    }
    distinct
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kepler::circular_data;
    use crate::systems::make_system;

    fn kepler() -> ReversibleSystem {
        make_system("rotating-kepler").unwrap()
    }

    #[test]
    fn exact_seed_needs_no_steps() {
        let sys = kepler();
        let c = circular_data(-1.8).unwrap();
        let ch = shoot(&sys, "rho0", -1.8, c.r, c.half_period, &ShootOptions::default()).unwrap();
        assert_eq!(ch.newton_steps, 0);
        assert!(ch.residual < 1e-10);
        assert_eq!(ch.m, 1);
        assert!(ch.nondegenerate);
    }

    #[test]
    fn perturbed_seed_recovers_the_circle() {
        let sys = kepler();
        let c = circular_data(-1.8).unwrap();
        let ch = shoot(&sys, "rho0", -1.8, c.r + 1e-3, c.half_period - 1e-3, &ShootOptions::default())
            .unwrap();
        assert!((ch.s - c.r).abs() < 1e-8);
        assert!((ch.duration - c.half_period).abs() < 1e-8);
        assert!((ch.eta - c.reeb_half_length).abs() < 1e-8);
    }

    #[test]
    fn bad_seed_duration_is_rejected() {
        let sys = kepler();
        assert!(shoot(&sys, "rho0", -1.8, 0.5, -1.0, &ShootOptions::default()).is_err());
        assert!(matches!(
            shoot(&sys, "nope", -1.8, 0.5, 1.0, &ShootOptions::default()),
            Err(Error::UnknownInvolution(_))
        ));
    }

    #[test]
    fn double_cover_is_detected() {
        let sys = kepler();
        let c = circular_data(-1.8).unwrap();
        let opts = ShootOptions::default();
        let ch = shoot(&sys, "rho0", -1.8, c.r, c.cover_duration(2), &opts).unwrap();
        assert_eq!(ch.m, 2);
        let (m, base) = covering_analysis(&sys, &ch, &opts).unwrap();
        assert_eq!(m, 2);
        assert!((base.duration - c.half_period).abs() < 1e-8);
        assert_eq!(base.m, 1);
    }

    #[test]
    fn circular_closures() {
        let sys = kepler();
        let c = circular_data(-1.8).unwrap();
        let opts = ShootOptions::default();
        let ch = shoot(&sys, "rho0", -1.8, c.r, c.half_period, &opts).unwrap();
        let orbit = close_chord(&sys, &ch, 64, &opts.flow).unwrap();
        assert!((orbit.period - c.period()).abs() < 1e-8);
        assert!(orbit.closure_residual < 1e-7);
        assert!(orbit.symmetry_residual < 1e-7);
        assert!(orbit.junction_residual < 1e-7);

        let quarter = shoot_spec(
            &sys,
            &ChordSpec::double("rho0", "rho_pi2", -1.8),
            c.r,
            c.half_period / 2.0,
            &opts,
        )
        .unwrap();
        let loop4 = close_double_chord(&sys, &quarter, 64, &opts.flow).unwrap();
        assert!((loop4.period - c.period()).abs() < 1e-8);
        assert!(loop4.closure_residual < 1e-7);
        assert!(loop4.symmetry_residual < 1e-7);
        assert!(loop4.junction_residual < 1e-7);
        assert!(close_chord(&sys, &quarter, 64, &opts.flow).is_err());
    }

    #[test]
    fn action_matches_length() {
        let sys = kepler();
        let opts = ShootOptions::default();
        let c = circular_data(-2.5).unwrap();
        let one = shoot(&sys, "rho0", -2.5, c.r, c.half_period, &opts).unwrap();
        let three = shoot(&sys, "rho0", -2.5, c.r, c.cover_duration(3), &opts).unwrap();
        let a1 = action_value(&sys, &one, &opts).unwrap();
        let a3 = action_value(&sys, &three, &opts).unwrap();
        assert!((a1 - one.eta).abs() < 1e-8);
        assert!((a1 - c.reeb_half_length).abs() < 1e-8);
        assert!((a3 - 3.0 * a1).abs() < 1e-8);
    }

    #[test]
    fn partner_of_circle_is_itself() {
        let sys = kepler();
        let opts = ShootOptions::default();
        let c = circular_data(-1.8).unwrap();
        let ch = shoot(&sys, "rho0", -1.8, c.r, c.half_period, &opts).unwrap();
        let p = partner_chord(&sys, &ch, &opts).unwrap();
        assert!((p.s + c.r).abs() < 1e-8);
        assert!((p.duration - ch.duration).abs() < 1e-8);
        assert_eq!(p.nondegenerate, ch.nondegenerate);
    }

    #[test]
    fn empty_window_scans_nothing() {
        let sys = kepler();
        let w = ScanWindow { s: (0.5, 0.5), duration: (1.0, 2.0) };
        assert!(neighborhood_scan(&sys, "rho0", -1.8, w, &ScanOptions::default()).is_empty());
    }
}
