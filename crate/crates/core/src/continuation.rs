//! Continuation of chord families in the energy, location of index jumps,
//! branch switching and symmetry classification of the new branches.

use std::f64::consts::PI;

use nalgebra::{Vector2, SVD};
use serde::{Deserialize, Serialize};

use crate::chords::{
    close_chord, close_double_chord, newton, shoot_spec, shooting_data, Chord, ChordSpec,
    ShootOptions, SymmetricOrbit, DEFAULT_LOOP_SAMPLES,
};
use crate::error::{Error, Result};
use crate::flow::{integrate, TrajectorySegment};
use crate::index::{is_nondegenerate, rs_index, IndexOptions};
use crate::kepler::circular_data;
use crate::systems::{Involution, PhasePoint, ReversibleSystem};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuationOptions {
    /// Nominal step in the energy.
    pub step: f64,
    pub min_step: f64,
    /// Largest accepted distance between predictor and corrector in `(s, T)`.
    pub max_corrector_distance: f64,
    pub shoot: ShootOptions,
    pub index: IndexOptions,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            step: 5e-3,
            min_step: 1e-10,
            max_corrector_distance: 2e-2,
            shoot: ShootOptions::default(),
            index: IndexOptions::default(),
        }
    }
}

/// One accepted member of a family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyPoint {
    pub chord: Chord,
    pub mu_x2: i64,
    pub relative_end_angle: f64,
}

impl FamilyPoint {
    pub fn tau(&self) -> f64 {
        self.chord.tau
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StopReason {
    RangeEnd,
    Fold { tau: f64 },
    Failure { tau: f64 },
}

/// Maximal run of members with the same index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plateau {
    pub first: usize,
    pub last: usize,
    pub mu_x2: i64,
}

/// Energy-parametrised family, stored in increasing `tau`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub involution: String,
    pub end_involution: String,
    pub covering: u64,
    pub points: Vec<FamilyPoint>,
    pub stop: StopReason,
}

impl Family {
    pub fn plateaus(&self) -> Vec<Plateau> {
        let mut out: Vec<Plateau> = Vec::new();
        for (i, p) in self.points.iter().enumerate() {
            match out.last_mut() {
                Some(last) if last.mu_x2 == p.mu_x2 => last.last = i,
                _ => out.push(Plateau { first: i, last: i, mu_x2: p.mu_x2 }),
            }
        }
        out
    }

    pub fn spec(&self) -> Option<ChordSpec> {
        self.points.first().map(|p| p.chord.spec())
    }

    /// Member with the energy closest to `tau`.
    pub fn nearest(&self, tau: f64) -> Option<&FamilyPoint> {
        self.points
            .iter()
            .min_by(|a, b| (a.tau() - tau).abs().partial_cmp(&(b.tau() - tau).abs()).unwrap())
    }
}

fn family_point(sys: &ReversibleSystem, chord: Chord, opts: &ContinuationOptions) -> Result<FamilyPoint> {
    let ix = rs_index(sys, &chord, &opts.index)?;
    Ok(FamilyPoint { chord, mu_x2: ix.mu_x2, relative_end_angle: ix.relative_end_angle })
}

/// Chord of the same family at a nearby energy, seeded by `guess`.
fn correct(
    sys: &ReversibleSystem,
    prev: &Chord,
    tau: f64,
    guess: Vector2<f64>,
    opts: &ContinuationOptions,
) -> Option<Chord> {
    let spec = prev.spec().with_tau(tau);
    let out = newton(sys, &spec, guess[0], guess[1], &opts.shoot).ok()?;
    if (Vector2::new(out.s, out.duration) - guess).norm() > opts.max_corrector_distance {
        return None;
    }
    let chord = crate::chords::finalize(sys, &spec, &out, &opts.shoot).ok()?;
    (chord.m == prev.m).then_some(chord)
}

fn tangent(sys: &ReversibleSystem, ch: &Chord, opts: &ContinuationOptions) -> Option<Vector2<f64>> {
    shooting_data(sys, &ch.spec(), ch.s, ch.duration, &opts.shoot.flow).ok()?.tangent()
}

/// Marches from `seed` (re-solved at `range.0` if needed) to `range.1`.
pub fn continue_family(
    sys: &ReversibleSystem,
    seed: &Chord,
    range: (f64, f64),
    opts: &ContinuationOptions,
) -> Result<Family> {
    let (from, to) = range;
    let mut first = seed.clone();
    if first.tau != from {
        first = shoot_spec(sys, &seed.spec().with_tau(from), seed.s, seed.duration, &opts.shoot)?;
        first.m = first.m.max(1);
    }
    if !first.nondegenerate {
        return Err(Error::DegenerateSeed { measure: first.degeneracy_measure });
    }
    let covering = first.m;
    let mut points = vec![family_point(sys, first, opts)?];
    let dir = if to >= from { 1.0 } else { -1.0 };
    let mut h = opts.step;
    let mut stop = StopReason::RangeEnd;
    let mut last_det = None;

    while (to - points.last().unwrap().tau()) * dir > 1e-14 {
        let prev = &points.last().unwrap().chord;
        let remaining = (to - prev.tau).abs();
        let step = h.min(remaining);
        let tau = if step == remaining { to } else { prev.tau + dir * step };
        let base = Vector2::new(prev.s, prev.duration);
        let guess = if points.len() >= 2 {
            let pp = &points[points.len() - 2].chord;
            let slope = (base - Vector2::new(pp.s, pp.duration)) / (prev.tau - pp.tau);
            base + slope * (tau - prev.tau)
        } else {
            tangent(sys, prev, opts).map_or(base, |t| base + t * (tau - prev.tau))
        };
        match correct(sys, prev, tau, guess, opts) {
            Some(chord) => {
                if let Ok(d) = shooting_data(sys, &chord.spec(), chord.s, chord.duration, &opts.shoot.flow) {
                    last_det = Some(crate::chords::relative_determinant(&d.jacobian));
                }
                points.push(family_point(sys, chord, opts)?);
                h = (2.0 * h).min(opts.step);
            }
            None => {
                h *= 0.5;
                if h < opts.min_step {
                    let det = last_det.unwrap_or(1.0);
                    stop = if det.abs() < 1e-4 {
                        StopReason::Fold { tau: prev.tau }
                    } else {
                        StopReason::Failure { tau: prev.tau }
                    };
                    break;
                }
            }
        }
    }
    if dir < 0.0 {
        points.reverse();
    }
    Ok(Family {
        involution: seed.involution.clone(),
        end_involution: seed.end_involution.clone(),
        covering,
        points,
        stop,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    IndexJump,
    Fold,
    Termination,
}

/// Branch found by switching, with its closed orbit's symmetry verdicts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchReport {
    pub chord: Chord,
    pub mu_x2: i64,
    pub symmetry: Option<SymmetryReport>,
    pub family: Option<Family>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BifurcationEvent {
    pub tau_star: f64,
    pub kind: EventKind,
    /// `mu(right) - mu(left)` with right the larger energy.
    pub p: i64,
    pub bracket: (f64, f64),
    pub mu_left_x2: i64,
    pub mu_right_x2: i64,
    /// Family member at `tau_star`.
    pub chord: Chord,
    /// Set when a lower cover of the chord is itself degenerate at `tau_star`.
    pub inherited_from_cover: Option<u64>,
    pub branches: Vec<BranchReport>,
}

/// Options of the bisection on plateau boundaries.
const LOCATE_TOL: f64 = 1e-8;

fn relative_angle_at(
    sys: &ReversibleSystem,
    fam: &Family,
    left: &FamilyPoint,
    right: &FamilyPoint,
    tau: f64,
    opts: &ContinuationOptions,
) -> Result<(Chord, f64)> {
    let w = (tau - left.tau()) / (right.tau() - left.tau());
    let s = left.chord.s + w * (right.chord.s - left.chord.s);
    let t = left.chord.duration + w * (right.chord.duration - left.chord.duration);
    let spec = left.chord.spec().with_tau(tau);
    // only the side of the relative angle matters here
    let shoot = ShootOptions { stagnation_tol: 1e-8, ..opts.shoot };
    let out = newton(sys, &spec, s, t, &shoot)?;
    let mut chord = crate::chords::finalize(sys, &spec, &out, &shoot)?;
    chord.m = fam.covering;
    let ix = rs_index(sys, &chord, &opts.index)?;
    Ok((chord, ix.relative_end_angle))
}

/// Locates each plateau boundary to `1e-8` in the energy.
pub fn locate_index_jump(
    sys: &ReversibleSystem,
    fam: &Family,
    opts: &ContinuationOptions,
) -> Result<Vec<BifurcationEvent>> {
    let mut events = Vec::new();
    for pair in fam.points.windows(2) {
        let (left, right) = (&pair[0], &pair[1]);
        if left.mu_x2 == right.mu_x2 {
            continue;
        }
        let (lo_mu, hi_mu) = (left.mu_x2.min(right.mu_x2) / 2, left.mu_x2.max(right.mu_x2) / 2);
        // one crossing of pi * level per integer between the two indices
        for level in (lo_mu + 1)..=hi_mu {
            let target = PI * level as f64;
            let (mut a, mut b) = (left.tau(), right.tau());
            let fa = left.relative_end_angle - target;
            let mut chord = left.chord.clone();
            while b - a > LOCATE_TOL {
                let mid = 0.5 * (a + b);
                let (c, angle) = relative_angle_at(sys, fam, left, right, mid, opts)?;
                chord = c;
                if (angle - target).signum() == fa.signum() {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let tau_star = 0.5 * (a + b);
            let (c, _) = relative_angle_at(sys, fam, left, right, tau_star, opts).unwrap_or((chord, 0.0));
            let inherited = inherited_cover(sys, &c, opts);
            let sign = if right.mu_x2 > left.mu_x2 { 1 } else { -1 };
            events.push(BifurcationEvent {
                tau_star,
                kind: EventKind::IndexJump,
                p: sign,
                bracket: (a, b),
                mu_left_x2: left.mu_x2,
                mu_right_x2: right.mu_x2,
                chord: c,
                inherited_from_cover: inherited,
                branches: Vec::new(),
            });
        }
    }
    if let StopReason::Fold { tau } = fam.stop {
        if let Some(p) = fam.nearest(tau) {
            events.push(BifurcationEvent {
                tau_star: tau,
                kind: EventKind::Fold,
                p: 0,
                bracket: (tau, tau),
                mu_left_x2: p.mu_x2,
                mu_right_x2: p.mu_x2,
                chord: p.chord.clone(),
                inherited_from_cover: None,
                branches: Vec::new(),
            });
        }
    }
    if let StopReason::Failure { tau } = fam.stop {
        if let Some(p) = fam.nearest(tau) {
            if !p.chord.nondegenerate {
                events.push(BifurcationEvent {
                    tau_star: tau,
                    kind: EventKind::Termination,
                    p: 0,
                    bracket: (tau, tau),
                    mu_left_x2: p.mu_x2,
                    mu_right_x2: p.mu_x2,
                    chord: p.chord.clone(),
                    inherited_from_cover: None,
                    branches: Vec::new(),
                });
            }
        }
    }
    events.sort_by(|a, b| a.tau_star.partial_cmp(&b.tau_star).unwrap());
    Ok(events)
}

/// Smallest proper cover `d | m` of the chord's base that is degenerate.
fn inherited_cover(sys: &ReversibleSystem, ch: &Chord, opts: &ContinuationOptions) -> Option<u64> {
    let m = ch.m;
    (1..m).filter(|&d| m.is_multiple_of(d)).find(|&d| {
        let lower = Chord { duration: ch.duration * d as f64 / m as f64, m: d, ..ch.clone() };
        is_nondegenerate(sys, &lower, &opts.index)
            .map(|(_, measure)| measure.abs() < 1e-5)
            .unwrap_or(false)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchSwitchOptions {
    pub dtau: f64,
    /// Multiples of `sqrt(dtau)` used as offsets along the kernel direction.
    pub offsets: [f64; 5],
    /// Number of ring seeds per radius.
    pub ring: usize,
    /// Solutions farther than this multiple of `sqrt(dtau)` are ignored.
    pub locality: f64,
    pub dedupe_tol: f64,
    pub continuation: ContinuationOptions,
}

impl Default for BranchSwitchOptions {
    fn default() -> Self {
        Self {
            dtau: 1e-3,
            offsets: [0.25, 0.5, 1.0, 2.0, 4.0],
            ring: 8,
            locality: 4.0,
            dedupe_tol: 1e-6,
            continuation: ContinuationOptions::default(),
        }
    }
}

/// Near-kernel direction of the shooting Jacobian at the event, in `(s, T)`.
pub fn kernel_direction(sys: &ReversibleSystem, ch: &Chord, opts: &ShootOptions) -> Result<Vector2<f64>> {
    let data = shooting_data(sys, &ch.spec(), ch.s, ch.duration, &opts.flow)?;
    let svd = SVD::new(data.jacobian, false, true);
    let v_t = svd.v_t.expect("requested");
    let (i, _) = svd.singular_values.argmin();
    Ok(Vector2::new(v_t[(i, 0)], v_t[(i, 1)]))
}

/// New chords near the event at `tau_star + side * dtau`, excluding the
/// continued family member.
pub fn branch_switch(
    sys: &ReversibleSystem,
    event: &BifurcationEvent,
    side: Side,
    opts: &BranchSwitchOptions,
) -> Result<Vec<Chord>> {
    let shoot = &opts.continuation.shoot;
    let tau = event.tau_star + side.sign() * opts.dtau;
    let spec = event.chord.spec().with_tau(tau);
    let base = Vector2::new(event.chord.s, event.chord.duration);
    let continued = correct(sys, &event.chord, tau, base, &opts.continuation)
        .or_else(|| shoot_spec(sys, &spec, base[0], base[1], shoot).ok());
    let centre = continued.as_ref().map_or(base, |c| Vector2::new(c.s, c.duration));
    let kernel = kernel_direction(sys, &event.chord, shoot)?;
    let scale = opts.dtau.sqrt();

    let mut seeds = Vec::new();
    for &k in &opts.offsets {
        seeds.push(centre + kernel * (k * scale));
        seeds.push(centre - kernel * (k * scale));
    }
    for radius in [scale, 2.0 * scale] {
        for j in 0..opts.ring {
            let a = 2.0 * PI * (j as f64 + 0.5) / opts.ring as f64;
            seeds.push(centre + Vector2::new(a.cos(), a.sin()) * radius);
        }
    }

    let mut found: Vec<Chord> = Vec::new();
    for seed in seeds {
        if !(seed[1] > 0.0) {
            continue;
        }
        let Ok(out) = newton(sys, &spec, seed[0], seed[1], shoot) else { continue };
        let point = Vector2::new(out.s, out.duration);
        if (point - centre).norm() > opts.locality * scale {
            continue;
        }
        if let Some(c) = &continued {
            if (point - Vector2::new(c.s, c.duration)).norm() < opts.dedupe_tol {
                continue;
            }
        }
        if found.iter().any(|f| (Vector2::new(f.s, f.duration) - point).norm() < opts.dedupe_tol) {
            continue;
        }
        let Ok(chord) = crate::chords::finalize(sys, &spec, &out, shoot) else { continue };
        if chord.nondegenerate {
            found.push(chord);
        }
    }
    found.sort_by(|a, b| (a.s, a.duration).partial_cmp(&(b.s, b.duration)).unwrap());
    Ok(found)
}

/// Verdict of one involution on a closed orbit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryVerdict {
    pub involution: String,
    /// Hausdorff distance between the loop and its image.
    pub distance: f64,
    pub symmetric: bool,
    /// Image loop is a different orbit (distance above `1e-4`).
    pub partner_distinct: bool,
    /// Involutions under which the image loop is symmetric.
    pub partner_symmetric_under: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub verdicts: Vec<SymmetryVerdict>,
}

impl SymmetryReport {
    pub fn verdict(&self, id: &str) -> Option<&SymmetryVerdict> {
        self.verdicts.iter().find(|v| v.involution == id)
    }
}

pub const SYMMETRIC_TOL: f64 = 1e-6;
pub const DISTINCT_TOL: f64 = 1e-4;

/// Dense closed loop used for point-to-curve distances.
struct LoopCurve {
    seg: TrajectorySegment,
    times: Vec<f64>,
    points: Vec<PhasePoint>,
}

impl LoopCurve {
    fn new(sys: &ReversibleSystem, orbit: &SymmetricOrbit) -> Result<Self> {
        let opts = crate::flow::FlowOptions::default();
        let seg = integrate(sys, &orbit.start, orbit.period, &opts)?;
        Ok(Self { seg, times: orbit.times.clone(), points: orbit.points.clone() })
    }

    /// Distance from `y` to the loop, refined by golden-section search on the
    /// dense output around the nearest sample.
    fn distance(&self, y: &PhasePoint) -> f64 {
        let n = self.points.len();
        let (i, _) = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.distance(y)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        let period = self.seg.duration;
        let dt = period / n as f64;
        let t0 = self.times[i];
        let f = |t: f64| self.seg.state(t.rem_euclid(period)).distance(y);
        let (mut a, mut b) = (t0 - dt, t0 + dt);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..80 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = f(d);
            }
            if b - a < 1e-12 {
                break;
            }
        }
        fc.min(fd).min(f(t0))
    }

    /// Hausdorff distance between this loop and its image under `map`.
    fn hausdorff_to_image(&self, map: &dyn Fn(&PhasePoint) -> PhasePoint, inverse: &dyn Fn(&PhasePoint) -> PhasePoint) -> f64 {
        // d(map(x), L) for x in L, and d(x, map(L)) = d(inverse(x), L) for isometric maps
        let forward = self.points.iter().map(|x| self.distance(&map(x))).fold(0.0, f64::max);
        let backward = self.points.iter().map(|x| self.distance(&inverse(x))).fold(0.0, f64::max);
        forward.max(backward)
    }
}

/// Tests each involution for mapping the loop onto itself.
pub fn classify_symmetry(
    sys: &ReversibleSystem,
    orbit: &SymmetricOrbit,
    involutions: &[&Involution],
) -> Result<SymmetryReport> {
    let curve = LoopCurve::new(sys, orbit)?;
    let mut verdicts = Vec::new();
    for rho in involutions {
        let map = |x: &PhasePoint| rho.apply(x);
        let distance = curve.hausdorff_to_image(&map, &map);
        let symmetric = distance < SYMMETRIC_TOL;
        let mut partner_symmetric_under = Vec::new();
        if !symmetric {
            for sigma in involutions {
                // sigma(rho(L)) against rho(L), pulled back by rho
                let conj = |x: &PhasePoint| rho.apply(&sigma.apply(&rho.apply(x)));
                if curve.hausdorff_to_image(&conj, &conj) < SYMMETRIC_TOL {
                    partner_symmetric_under.push(sigma.id.clone());
                }
            }
        }
        verdicts.push(SymmetryVerdict {
            involution: rho.id.clone(),
            distance,
            symmetric,
            partner_distinct: distance > DISTINCT_TOL,
            partner_symmetric_under,
        });
    }
    Ok(SymmetryReport { verdicts })
}

/// Hausdorff distance between the loop of `a` and the image of the loop of
/// `b` under `map` (the loop itself when `map` is `None`).
pub fn orbit_distance(
    sys: &ReversibleSystem,
    a: &SymmetricOrbit,
    b: &SymmetricOrbit,
    map: Option<&Involution>,
) -> Result<f64> {
    let (ca, cb) = (LoopCurve::new(sys, a)?, LoopCurve::new(sys, b)?);
    let apply = |x: &PhasePoint| map.map_or(*x, |rho| rho.apply(x));
    let forward = cb.points.iter().map(|x| ca.distance(&apply(x))).fold(0.0, f64::max);
    let backward = ca.points.iter().map(|y| cb.distance(&apply(y))).fold(0.0, f64::max);
    Ok(forward.max(backward))
}

/// Closes a chord into its loop, single or double as appropriate.
pub fn close_any(sys: &ReversibleSystem, ch: &Chord, opts: &ShootOptions) -> Result<SymmetricOrbit> {
    if ch.is_double() {
        close_double_chord(sys, ch, DEFAULT_LOOP_SAMPLES, &opts.flow)
    } else {
        close_chord(sys, ch, DEFAULT_LOOP_SAMPLES, &opts.flow)
    }
}

/// How the scanned family is seeded.
#[derive(Clone, Debug, PartialEq)]
pub enum FamilySeed {
    /// The `cover`-fold direct circular chord of the rotating Kepler problem.
    KeplerCircular { cover: u64 },
    /// An explicit chord; it is re-solved at the start of the range.
    Chord(Chord),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanDiagramOptions {
    pub switch: BranchSwitchOptions,
    /// Length of the continuation of each new branch.
    pub branch_range: f64,
}

impl Default for ScanDiagramOptions {
    fn default() -> Self {
        Self { switch: BranchSwitchOptions::default(), branch_range: 2e-2 }
    }
}

/// Families and events of one diagram.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Forest {
    pub families: Vec<Family>,
    pub events: Vec<BifurcationEvent>,
}

impl Forest {
    /// Index-jump events not inherited from a lower cover.
    pub fn primary_events(&self) -> impl Iterator<Item = &BifurcationEvent> {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::IndexJump && e.inherited_from_cover.is_none())
    }

    /// Diagram rows `(family_id, tau, s, T, eta, mu_x2, m)`.
    pub fn csv(&self) -> String {
        let mut out = String::from("family_id,tau,s,T,eta,mu_x2,m\n");
        for (id, fam) in self.families.iter().enumerate() {
            for p in &fam.points {
                let c = &p.chord;
                out.push_str(&format!(
                    "{id},{:.12},{:.12},{:.12},{:.12},{},{}\n",
                    c.tau, c.s, c.duration, c.eta, p.mu_x2, c.m
                ));
            }
        }
        out
    }
}

/// Continues the seeded family over `range`, locates its index jumps,
/// switches branches on both sides of each and classifies the new orbits.
pub fn scan_bifurcation_diagram(
    sys: &ReversibleSystem,
    inv: &str,
    seed: &FamilySeed,
    range: (f64, f64),
    opts: &ScanDiagramOptions,
) -> Result<Forest> {
    if !(range.0 < range.1) {
        return Ok(Forest::default());
    }
    let cont = &opts.switch.continuation;
    let chord = match seed {
        FamilySeed::KeplerCircular { cover } => {
            let c = circular_data(range.0)?;
            let spec = ChordSpec::single(inv, range.0);
            shoot_spec(sys, &spec, c.r, c.cover_duration(*cover), &cont.shoot)?
        }
        FamilySeed::Chord(ch) => ch.clone(),
    };
    let main = continue_family(sys, &chord, range, cont)?;
    let mut events = locate_index_jump(sys, &main, cont)?;
    let mut families = vec![main];
    let involutions: Vec<&Involution> = sys.involutions().iter().collect();

    for event in &mut events {
        if event.kind != EventKind::IndexJump {
            continue;
        }
        for side in [Side::Plus, Side::Minus] {
            let Ok(chords) = branch_switch(sys, event, side, &opts.switch) else { continue };
            for ch in chords {
                let mu_x2 = rs_index(sys, &ch, &cont.index).map(|i| i.mu_x2).unwrap_or(i64::MIN);
                let symmetry = close_any(sys, &ch, &cont.shoot)
                    .and_then(|o| classify_symmetry(sys, &o, &involutions))
                    .ok();
                let end = ch.tau + side.sign() * opts.branch_range;
                let family = continue_family(sys, &ch, (ch.tau, end), cont).ok();
                if let Some(f) = &family {
                    families.push(f.clone());
                }
                event.branches.push(BranchReport { chord: ch, mu_x2, symmetry, family });
            }
        }
    }
    Ok(Forest { families, events })
}
