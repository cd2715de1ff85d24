//! Robbin-Salamon index of chords in the planar case.
//!
//! Along a chord the linearised flow carries the tangent line of the start
//! Legendrian through the contact planes `xi = ker(lambda) ∩ T Sigma`. In a
//! symplectic frame `(e1, e2)` of `xi` every line is an angle mod `pi`. The
//! index counts signed crossings of this angle with a reference path that runs
//! from the start Legendrian tangent to the end Legendrian tangent.
//!
//! The frame keeps `e2` vertical: `e2 = (0, 0, -qdot2, qdot1)`, which lies in
//! `xi` for every planar Hamiltonian of the form `1/2|p|^2 + ...`. Legendrian
//! tangents of fixed-set charts are never vertical, so their angles lie in
//! `(-pi/2, pi/2)` without branch ambiguity.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector4};
use serde::{Deserialize, Serialize};

use crate::chords::Chord;
use crate::error::{Error, Result};
use crate::flow::{integrate_variational, FlowOptions, TrajectorySegment};
use crate::systems::{omega, Involution, ReversibleSystem, State};

/// Default threshold on `|degeneracy_measure|` (radians).
pub const DEFAULT_DEGENERACY_THRESHOLD: f64 = 1e-6;

const MAX_ANGLE_STEP: f64 = PI / 4.0;
const CROSSING_TIME_TOL: f64 = 1e-8;

/// Symplectic basis of the contact plane at a point, `omega(e1, e2) = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub e1: State,
    pub e2: State,
}

impl Frame {
    /// Coordinates `(a, b)` of the `xi`-component of `w` in the frame.
    ///
    /// The `X_F` component is invisible because `omega(X_F, T Sigma) = 0`.
    pub fn coordinates(&self, w: &State) -> (f64, f64) {
        (omega(w, &self.e2), omega(&self.e1, w))
    }

    /// Angle of the line spanned by `w`, in `(-pi/2, pi/2]`.
    pub fn line_angle(&self, w: &State) -> f64 {
        let (a, b) = self.coordinates(w);
        reduce_line_angle(b.atan2(a))
    }
}

/// Representative of a line angle in `(-pi/2, pi/2]`.
pub fn reduce_line_angle(phi: f64) -> f64 {
    let mut r = phi - PI * (phi / PI).round();
    if r <= -PI / 2.0 {
        r += PI;
    }
    r
}

/// Vector Euclidean-orthogonal to three vectors in `R^4`.
fn cross4(u: &State, v: &State, w: &State) -> State {
    let minor = |skip: usize| {
        let cols: Vec<usize> = (0..4).filter(|&c| c != skip).collect();
        Matrix3::from_fn(|r, c| [u, v, w][r][cols[c]]).determinant()
    };
    Vector4::new(minor(0), -minor(1), minor(2), -minor(3))
}

/// Vertical-preserving symplectic frame of `xi` at `x`.
pub fn contact_reduction(sys: &ReversibleSystem, x: &State) -> Result<Frame> {
    let v = sys.vector_field_unchecked(x);
    let density = sys.liouville(x, &v);
    if !(density > 0.0) {
        return Err(Error::NotContactType { t: 0.0, value: density });
    }
    let grad = sys.gradient(x);
    let e2 = Vector4::new(0.0, 0.0, -v[1], v[0]);
    let liouville_form = Vector4::new(x[2], x[3], 0.0, 0.0);
    let e1 = cross4(&grad, &liouville_form, &e2);
    let pairing = omega(&e1, &e2);
    if !(pairing.abs() > 0.0) {
        return Err(Error::NotContactType { t: 0.0, value: density });
    }
    Ok(Frame { e1: e1 / pairing, e2 })
}

/// The transported start tangent, sampled with its lifted angle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LagrangianPath {
    pub times: Vec<f64>,
    /// Lifted line angle, continuous with `angles[0] = start_angle`.
    pub angles: Vec<f64>,
    pub start_angle: f64,
    /// Angle of the end Legendrian tangent.
    pub end_angle: f64,
    pub duration: f64,
}

impl LagrangianPath {
    fn reference(&self, t: f64) -> f64 {
        if self.duration == 0.0 {
            return self.start_angle;
        }
        self.start_angle + (self.end_angle - self.start_angle) * t / self.duration
    }

    /// Angle relative to the reference path, zero at the start.
    pub fn relative(&self, i: usize) -> f64 {
        self.angles[i] - self.reference(self.times[i])
    }

    pub fn relative_end(&self) -> f64 {
        self.relative(self.times.len() - 1)
    }
}

/// One crossing of the relative angle with `pi Z`; endpoint crossings carry
/// half weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub t: f64,
    pub sign: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexResult {
    pub mu_rs_x2: i64,
    pub mu_x2: i64,
    pub crossings: Vec<Crossing>,
    pub degeneracy_measure: f64,
    /// Final relative angle; its integer part in units of `pi` is the index.
    pub relative_end_angle: f64,
    /// A tangential touch of `pi Z` was seen in the interior.
    pub degenerate_interior: bool,
}

impl IndexResult {
    pub fn mu(&self) -> f64 {
        self.mu_x2 as f64 / 2.0
    }

    pub fn is_degenerate(&self, threshold: f64) -> bool {
        self.degeneracy_measure.abs() < threshold
    }
}

struct PathSampler<'a> {
    sys: &'a ReversibleSystem,
    seg: &'a TrajectorySegment,
    l0: State,
}

impl PathSampler<'_> {
    fn angle(&self, t: f64) -> Result<f64> {
        let x = self.seg.state_vector(t);
        let m = self.seg.monodromy(t).expect("variational segment");
        let frame = contact_reduction(self.sys, &x).map_err(|e| with_time(e, t))?;
        Ok(frame.line_angle(&(m * self.l0)))
    }
}

fn with_time(e: Error, t: f64) -> Error {
    match e {
        Error::NotContactType { value, .. } => Error::NotContactType { t, value },
        other => other,
    }
}

fn lift(prev: f64, raw: f64) -> f64 {
    prev + reduce_line_angle(raw - prev)
}

/// Samples the transported start tangent along a variational segment.
///
/// Samples are refined until successive lifted angles differ by less than
/// `pi/4`.
pub fn lagrangian_path(
    sys: &ReversibleSystem,
    seg: &TrajectorySegment,
    start: &Involution,
    end: &Involution,
) -> Result<LagrangianPath> {
    if !seg.has_monodromy() {
        return Err(Error::InvalidArgument("segment lacks monodromy".into()));
    }
    let x0 = seg.initial.to_state();
    let l0 = sys.chart_tangent(start, &x0);
    let start_angle = contact_reduction(sys, &x0)?.line_angle(&l0);
    let x1 = seg.final_state_vector();
    let end_angle = contact_reduction(sys, &x1)
        .map_err(|e| with_time(e, seg.duration))?
        .line_angle(&sys.chart_tangent(end, &x1));
    let sampler = PathSampler { sys, seg, l0 };

    let mut grid = Vec::new();
    for w in seg.nodes().windows(2) {
        for k in 0..4 {
            grid.push(w[0] + (w[1] - w[0]) * k as f64 / 4.0);
        }
    }
    grid.push(seg.duration);

    let mut times = vec![0.0];
    let mut angles = vec![start_angle];
    for &t in &grid[1..] {
        let t0 = *times.last().unwrap();
        let phi0 = *angles.last().unwrap();
        // refine the interval (t0, t] until the lift is safe
        let mut stack = vec![t];
        let (mut a_t, mut a_phi) = (t0, phi0);
        while let Some(b_t) = stack.pop() {
            let b_raw = sampler.angle(b_t)?;
            let b_phi = lift(a_phi, b_raw);
            if (b_phi - a_phi).abs() >= MAX_ANGLE_STEP && b_t - a_t > 1e-12 {
                stack.push(b_t);
                stack.push(0.5 * (a_t + b_t));
                continue;
            }
            times.push(b_t);
            angles.push(b_phi);
            a_t = b_t;
            a_phi = b_phi;
        }
    }
    Ok(LagrangianPath { times, angles, start_angle, end_angle, duration: seg.duration })
}

/// Signed distance of the final line to the end tangent, reduced to
/// `(-pi/2, pi/2]`. Needs only the final linearised flow.
pub fn degeneracy_measure(
    sys: &ReversibleSystem,
    seg: &TrajectorySegment,
    start: &Involution,
    end: &Involution,
) -> Result<f64> {
    let m = seg
        .final_monodromy()
        .ok_or_else(|| Error::InvalidArgument("segment lacks monodromy".into()))?;
    let x0 = seg.initial.to_state();
    let x1 = seg.final_state_vector();
    let frame = contact_reduction(sys, &x1)?;
    let phi = frame.line_angle(&(m * sys.chart_tangent(start, &x0)));
    let theta = frame.line_angle(&sys.chart_tangent(end, &x1));
    Ok(reduce_line_angle(phi - theta))
}

/// Crossing count of a sampled path.
pub fn index_from_path(
    path: &LagrangianPath,
    sys: &ReversibleSystem,
    seg: &TrajectorySegment,
    start: &Involution,
    threshold: f64,
) -> IndexResult {
    let n = path.times.len();
    let mut delta: Vec<f64> = (0..n).map(|i| path.relative(i)).collect();
    let delta_end = delta[n - 1];
    let measure = delta_end - PI * (delta_end / PI).round();
    let mut crossings = Vec::new();
    let mut mu_rs_x2 = 0i64;

    if n < 2 {
        return IndexResult {
            mu_rs_x2: 0,
            mu_x2: -1,
            crossings,
            degeneracy_measure: measure,
            relative_end_angle: delta_end,
            degenerate_interior: false,
        };
    }

    let first_moving = delta.iter().skip(1).find(|d| d.abs() > 1e-13).copied();
    let start_sign = match first_moving {
        Some(d) if d < 0.0 => -1,
        _ => 1,
    };
    crossings.push(Crossing { t: 0.0, sign: start_sign });
    mu_rs_x2 += start_sign as i64;

    let end_degenerate = measure.abs() < threshold;
    let mut end_sign = 0;
    if end_degenerate {
        let k_end = (delta_end / PI).round();
        let prev = delta[n - 2];
        end_sign = if prev < k_end * PI { 1 } else { -1 };
        // move the last sample just off the lattice so it is not double counted
        delta[n - 1] = k_end * PI - end_sign as f64 * 1e-14 * k_end.abs().max(1.0);
    }

    let sampler = PathSampler { sys, seg, l0: sys.chart_tangent(start, &seg.initial.to_state()) };
    let mut degenerate_interior = false;
    for i in 1..n {
        let (d0, d1) = (delta[i - 1], delta[i]);
        let (lo, hi, sign) = if d1 > d0 { (d0, d1, 1) } else { (d1, d0, -1) };
        // up: d0 < k pi <= d1; down: d1 <= k pi < d0
        let ks: Vec<i64> = if sign > 0 {
            ((lo / PI).floor() as i64 + 1..=(hi / PI).floor() as i64).collect()
        } else {
            ((lo / PI).ceil() as i64..=(hi / PI).ceil() as i64 - 1).collect()
        };
        for k in ks {
            let t = refine_crossing(&sampler, path, i, k as f64 * PI);
            crossings.push(Crossing { t, sign });
            mu_rs_x2 += 2 * sign as i64;
        }
        if i + 1 < n {
            let d2 = delta[i + 1];
            let k = (d1 / PI).round();
            let near = (d1 - k * PI).abs() < threshold;
            let touch = (d0 - k * PI) * (d2 - k * PI) > 0.0
                && (d1 - k * PI).abs() < (d0 - k * PI).abs().min((d2 - k * PI).abs());
            if near && touch {
                degenerate_interior = true;
            }
        }
    }
    if end_degenerate {
        crossings.push(Crossing { t: path.duration, sign: end_sign });
        mu_rs_x2 += end_sign as i64;
    }

    IndexResult {
        mu_rs_x2,
        mu_x2: mu_rs_x2 - 1,
        crossings,
        degeneracy_measure: measure,
        relative_end_angle: delta_end,
        degenerate_interior,
    }
}

fn refine_crossing(sampler: &PathSampler, path: &LagrangianPath, i: usize, level: f64) -> f64 {
    let (mut a, mut b) = (path.times[i - 1], path.times[i]);
    let (mut da, db) = (path.relative(i - 1), path.relative(i));
    if db == level {
        return b;
    }
    let mut phi_a = path.angles[i - 1];
    let side = (da - level).signum();
    while b - a > CROSSING_TIME_TOL {
        let m = 0.5 * (a + b);
        let Ok(raw) = sampler.angle(m) else { break };
        let phi = lift(phi_a, raw);
        let d = phi - path.reference(m);
        if (d - level).signum() == side {
            a = m;
            da = d;
            phi_a = phi;
        } else {
            b = m;
        }
    }
    let _ = da;
    0.5 * (a + b)
}

/// Options for index evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndexOptions {
    pub flow: FlowOptions,
    pub threshold: f64,
}

impl Default for IndexOptions {
    fn default() -> Self {
        Self { flow: FlowOptions::default(), threshold: DEFAULT_DEGENERACY_THRESHOLD }
    }
}

/// Index of the transported start tangent along a variational segment.
pub fn index_of_segment(
    sys: &ReversibleSystem,
    seg: &TrajectorySegment,
    start: &Involution,
    end: &Involution,
    threshold: f64,
) -> Result<IndexResult> {
    let path = lagrangian_path(sys, seg, start, end)?;
    Ok(index_from_path(&path, sys, seg, start, threshold))
}

/// Robbin-Salamon index of a chord and the shifted index `mu = mu_rs - 1/2`.
pub fn rs_index(sys: &ReversibleSystem, ch: &Chord, opts: &IndexOptions) -> Result<IndexResult> {
    let (start, end) = ch.involutions(sys)?;
    let x0 = ch.start_point(sys)?;
    let seg = integrate_variational(sys, &x0, ch.duration, &opts.flow)?;
    index_of_segment(sys, &seg, start, end, opts.threshold)
}

/// Non-degeneracy verdict and the signed degeneracy measure.
pub fn is_nondegenerate(
    sys: &ReversibleSystem,
    ch: &Chord,
    opts: &IndexOptions,
) -> Result<(bool, f64)> {
    let (start, end) = ch.involutions(sys)?;
    let x0 = ch.start_point(sys)?;
    let seg = integrate_variational(sys, &x0, ch.duration, &opts.flow)?;
    let measure = degeneracy_measure(sys, &seg, start, end)?;
    Ok((measure.abs() >= opts.threshold, measure))
}
