//! Subcommand bodies. Each returns the artifacts to write.

use std::path::PathBuf;

use serde_json::{json, Value};
use symchord_core::chords::{shoot_spec, Chord, ChordSpec};
use symchord_core::continuation::{
    continue_family, locate_index_jump, scan_bifurcation_diagram, FamilySeed, Forest,
};
use symchord_core::homology::{
    brute_force_realizable, minimal_completion, parse_degrees, parse_profile, realizable, z2_homology,
    GradedZ2Complex, BRUTE_FORCE_CAP,
};
use symchord_core::index::rs_index;
use symchord_core::kepler::{circular_data, doubly_symmetric_condition, tau_kl, ResonanceLabel};
use symchord_core::systems::verify_reversibility;

use crate::config::{ExperimentConfig, RawConfig};
use crate::failure::Failure;
use crate::svg;

pub const SCHEMA_VERSION: u32 = 1;

/// What a command produced.
#[derive(Debug, Default)]
pub struct Output {
    pub json: Value,
    pub csv: Option<String>,
    pub svg: Option<String>,
    /// Set when the run completed but an expectation was not met.
    pub expectation: Option<Failure>,
}

impl Output {
    fn json(body: Value) -> Self {
        Self { json: with_schema(body), ..Self::default() }
    }
}

fn with_schema(mut body: Value) -> Value {
    if let Value::Object(map) = &mut body {
        map.insert("schema_version".into(), json!(SCHEMA_VERSION));
    }
    body
}

fn to_value<T: serde::Serialize>(x: &T) -> Result<Value, Failure> {
    serde_json::to_value(x).map_err(|e| Failure::numerical(format!("serialization: {e}")))
}

fn spec_at(cfg: &ExperimentConfig, tau: f64) -> ChordSpec {
    let mut spec = match &cfg.end_involution {
        Some(end) => ChordSpec::double(&cfg.involution, end, tau),
        None => ChordSpec::single(&cfg.involution, tau),
    };
    spec.branch = cfg.branch;
    spec
}

/// Explicit seed, or the covered direct circular chord for the rotating Kepler problem.
fn seed_at(cfg: &ExperimentConfig, tau: f64) -> Result<(f64, f64), Failure> {
    if let Some(seed) = cfg.seed {
        return Ok(seed);
    }
    if cfg.system.id != "rotating-kepler" || cfg.end_involution.is_some() {
        return Err(Failure::config("seed.s and seed.T are required for this system"));
    }
    let c = circular_data(tau)?;
    Ok((c.r, c.cover_duration(cfg.cover)))
}

fn solve_at(cfg: &ExperimentConfig, tau: f64) -> Result<Chord, Failure> {
    let (s, t) = seed_at(cfg, tau)?;
    Ok(shoot_spec(&cfg.system, &spec_at(cfg, tau), s, t, cfg.shoot())?)
}

pub fn find_chord(raw: &RawConfig) -> Result<Output, Failure> {
    let cfg = ExperimentConfig::from_raw(raw)?;
    let chord = solve_at(&cfg, cfg.require_tau()?)?;
    Ok(Output::json(json!({ "chord": to_value(&chord)? })))
}

pub fn index(raw: &RawConfig) -> Result<Output, Failure> {
    let cfg = ExperimentConfig::from_raw(raw)?;
    let chord = solve_at(&cfg, cfg.require_tau()?)?;
    let ix = rs_index(&cfg.system, &chord, &cfg.continuation().index)?;
    Ok(Output::json(json!({ "chord": to_value(&chord)?, "index": to_value(&ix)? })))
}

pub fn continue_cmd(raw: &RawConfig) -> Result<Output, Failure> {
    let cfg = ExperimentConfig::from_raw(raw)?;
    let range = cfg.require_range()?;
    let seed = solve_at(&cfg, range.0)?;
    let family = continue_family(&cfg.system, &seed, range, cfg.continuation())?;
    let events = locate_index_jump(&cfg.system, &family, cfg.continuation())?;
    let forest = Forest { families: vec![family], events };
    let family = &forest.families[0];
    let mut out = Output::json(json!({
        "family": to_value(family)?,
        "plateaus": to_value(&family.plateaus())?,
        "events": to_value(&forest.events)?,
    }));
    out.csv = Some(forest.csv());
    Ok(out)
}

pub fn scan(raw: &RawConfig, expect_events: Option<usize>) -> Result<Output, Failure> {
    let cfg = ExperimentConfig::from_raw(raw)?;
    let range = cfg.require_range()?;
    let seed = if cfg.seed.is_some() || cfg.end_involution.is_some() {
        FamilySeed::Chord(solve_at(&cfg, range.0)?)
    } else if cfg.system.id == "rotating-kepler" {
        FamilySeed::KeplerCircular { cover: cfg.cover }
    } else {
        return Err(Failure::config("seed.s and seed.T are required for this system"));
    };
    let forest = scan_bifurcation_diagram(&cfg.system, &cfg.involution, &seed, range, &cfg.scan)?;
    let primary = forest.primary_events().count();
    let mut out = Output::json(json!({
        "primary_event_count": primary,
        "primary_event_taus": forest.primary_events().map(|e| e.tau_star).collect::<Vec<_>>(),
        "forest": to_value(&forest)?,
    }));
    out.csv = Some(forest.csv());
    out.svg = Some(svg::render(&forest, env!("CARGO_PKG_VERSION")));
    if let Some(n) = expect_events {
        if n != primary {
            out.expectation = Some(Failure::expectation(format!("expected {n} events, found {primary}")));
        }
    }
    Ok(out)
}

pub fn tau_table(raw: &RawConfig) -> Result<Output, Failure> {
    let cover = raw.u64_or("cover", 1)?;
    let k_max = raw.u64_or("tau_table.k_max", 9)?;
    let labels = ResonanceLabel::with_cover(cover, k_max);
    let mut csv = String::from("k,l,tau,doubly_symmetric\n");
    let mut rows = Vec::new();
    for lbl in labels {
        let tau = tau_kl(lbl);
        let doubly = doubly_symmetric_condition(lbl);
        csv.push_str(&format!("{},{},{},{}\n", lbl.k, lbl.l, tau, doubly));
        rows.push(json!({ "k": lbl.k, "l": lbl.l, "tau": tau, "doubly_symmetric": doubly }));
    }
    let mut out = Output::json(json!({ "cover": cover, "k_max": k_max, "rows": rows }));
    out.csv = Some(csv);
    Ok(out)
}

fn profile_value(p: &std::collections::BTreeMap<i64, usize>) -> Value {
    Value::Object(p.iter().map(|(d, n)| (d.to_string(), json!(n))).collect())
}

pub fn homology(raw: &RawConfig) -> Result<Output, Failure> {
    if let Some(path) = raw.get("homology.complex") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {path}: {e}")))?;
        let cx: GradedZ2Complex =
            serde_json::from_str(&text).map_err(|e| Failure::config(format!("complex JSON: {e}")))?;
        let h = z2_homology(&cx)?;
        return Ok(Output::json(json!({ "mode": "homology", "complex": to_value(&cx)?, "homology": profile_value(&h) })));
    }
    let target = parse_profile(raw.get("homology.target").unwrap_or(""))?;
    if let Some(fixed) = raw.get("homology.fixed") {
        let fixed = parse_degrees(fixed)?;
        let pairing = raw.bool_or("homology.pairing", false)?;
        let window = match raw.list_f64("homology.window")? {
            Some(w) if w.len() == 2 && w.iter().all(|x| x.fract() == 0.0) => (w[0] as i64, w[1] as i64),
            Some(_) => return Err(Failure::config("`homology.window` needs two integers lo, hi")),
            None => default_window(&fixed, &target),
        };
        let completions = minimal_completion(&fixed, &target, pairing, window)?;
        let size = completions.first().map_or(0, Vec::len);
        return Ok(Output::json(json!({
            "mode": "completion",
            "fixed": fixed,
            "target": profile_value(&target),
            "pairing": pairing,
            "window": [window.0, window.1],
            "size": size,
            "completions": completions,
        })));
    }
    if let Some(sets) = raw.get("homology.degrees") {
        let mut rows = Vec::new();
        let mut csv = String::from("degrees,realizable,brute_force\n");
        for set in sets.split(';') {
            let degrees = parse_degrees(set)?;
            let fast = realizable(&degrees, &target);
            let brute = if degrees.len() <= BRUTE_FORCE_CAP {
                Some(brute_force_realizable(&degrees, &target)?)
            } else {
                None
            };
            let list: Vec<String> = degrees.iter().map(i64::to_string).collect();
            csv.push_str(&format!(
                "{},{},{}\n",
                list.join(" "),
                fast,
                brute.map_or("".to_string(), |b| b.to_string())
            ));
            rows.push(json!({ "degrees": degrees, "realizable": fast, "brute_force": brute }));
        }
        let mut out = Output::json(json!({ "mode": "realizability", "target": profile_value(&target), "rows": rows }));
        out.csv = Some(csv);
        return Ok(out);
    }
    Err(Failure::config("homology needs homology.complex, homology.fixed or homology.degrees"))
}

fn default_window(fixed: &[i64], target: &std::collections::BTreeMap<i64, usize>) -> (i64, i64) {
    let all: Vec<i64> = fixed.iter().chain(target.keys()).copied().collect();
    let lo = all.iter().copied().min().unwrap_or(0);
    let hi = all.iter().copied().max().unwrap_or(0);
    let pad = fixed.len() as i64 + 2;
    (lo - pad, hi + pad)
}

pub fn verify(raw: &RawConfig) -> Result<Output, Failure> {
    let cfg = ExperimentConfig::from_raw(raw)?;
    let samples = raw.u64_or("verify.samples", 1000)? as usize;
    let tol = raw.positive_or("verify.tol", 1e-10)?;
    let report = verify_reversibility(&cfg.system, samples);
    let passes = report.passes(tol);
    let mut out = Output::json(json!({
        "tolerance": tol,
        "passes": passes,
        "max_residual": report.max_residual(),
        "report": to_value(&report)?,
    }));
    if !passes {
        out.expectation = Some(Failure::expectation(format!(
            "reversibility residual {:e} exceeds {tol:e}",
            report.max_residual()
        )));
    }
    Ok(out)
}

/// Resolves the output paths: flags win over config keys.
pub fn output_paths(
    raw: &RawConfig,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
    svg: Option<PathBuf>,
) -> (Option<PathBuf>, Option<PathBuf>, Option<PathBuf>) {
    (
        out.or_else(|| raw.path("output.json")),
        csv.or_else(|| raw.path("output.csv")),
        svg.or_else(|| raw.path("output.svg")),
    )
}
