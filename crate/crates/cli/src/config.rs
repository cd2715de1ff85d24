//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use symchord_core::chords::ShootOptions;
use symchord_core::continuation::{BranchSwitchOptions, ContinuationOptions, ScanDiagramOptions};
use symchord_core::flow::FlowOptions;
use symchord_core::index::IndexOptions;
use symchord_core::systems::{
    make_system, reflection_id, Branch, Involution, PlanarHamiltonian, ReversibleSystem,
};

use crate::failure::Failure;

/// Every key the loader understands.
pub const KNOWN_KEYS: &[&str] = &[
    "system",
    "custom.coriolis",
    "custom.kepler",
    "custom.quadratic",
    "custom.angles",
    "custom.critical_value",
    "involution",
    "end_involution",
    "branch",
    "tau",
    "tau.min",
    "tau.max",
    "cover",
    "seed.s",
    "seed.T",
    "flow.abs_tol",
    "flow.rel_tol",
    "flow.max_step",
    "flow.collision_radius",
    "flow.max_steps",
    "shoot.tol",
    "shoot.max_iterations",
    "continuation.step",
    "continuation.min_step",
    "continuation.max_corrector_distance",
    "index.threshold",
    "switch.dtau",
    "scan.branch_range",
    "tau_table.k_max",
    "homology.complex",
    "homology.degrees",
    "homology.fixed",
    "homology.target",
    "homology.pairing",
    "homology.window",
    "verify.samples",
    "verify.tol",
    "output.json",
    "output.csv",
    "output.svg",
];

/// Raw key/value pairs after parsing and overrides.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    /// Parses UTF-8 text: one `key = value` per line, `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, Failure> {
        let mut cfg = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Failure::config(format!("line {}: expected key = value", n + 1)));
            };
            cfg.insert(key.trim(), value.trim())
                .map_err(|f| Failure::config(format!("line {}: {}", n + 1, f.message)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn insert(&mut self, key: &str, value: &str) -> Result<(), Failure> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(Failure::config(format!("unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<(), Failure> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Failure::config(format!("override `{assignment}` is not key=value")))?;
        self.insert(k.trim(), v.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, Failure> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Failure::config(format!("`{key}` = `{v}` is not a finite number")))
            })
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, Failure> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn positive_or(&self, key: &str, default: f64) -> Result<f64, Failure> {
        let v = self.f64_or(key, default)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(Failure::config(format!("`{key}` must be positive")))
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, Failure> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Failure::config(format!("`{key}` = `{v}` is not a nonnegative integer"))),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, Failure> {
        match self.get(key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(Failure::config(format!("`{key}` = `{v}` is not a boolean"))),
        }
    }

    pub fn list_f64(&self, key: &str) -> Result<Option<Vec<f64>>, Failure> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|_| Failure::config(format!("`{key}` entry `{}` is not a number", x.trim())))
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }
}

/// Validated view of the settings shared by the numerical subcommands.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub system: ReversibleSystem,
    pub involution: String,
    pub end_involution: Option<String>,
    pub branch: Branch,
    pub tau: Option<f64>,
    pub tau_range: Option<(f64, f64)>,
    pub cover: u64,
    pub seed: Option<(f64, f64)>,
    pub scan: ScanDiagramOptions,
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, Failure> {
        let system = build_system(raw)?;
        let involution = match raw.get("involution") {
            Some(name) => name.to_string(),
            None => system.involutions()[0].id.clone(),
        };
        system.involution(&involution).map_err(Failure::from)?;
        let end_involution = raw.get("end_involution").map(str::to_string);
        if let Some(e) = &end_involution {
            system.involution(e).map_err(Failure::from)?;
        }
        let branch = match raw.get("branch") {
            None => Branch::Direct,
            Some(b) => b
                .parse()
                .map_err(|_| Failure::config(format!("`branch` = `{b}` is not direct or retrograde")))?,
        };
        let tau = raw.f64("tau")?;
        let tau_range = match (raw.f64("tau.min")?, raw.f64("tau.max")?) {
            (Some(a), Some(b)) if a < b => Some((a, b)),
            (Some(_), Some(_)) => return Err(Failure::config("tau range is empty")),
            (None, None) => None,
            _ => return Err(Failure::config("tau.min and tau.max must be given together")),
        };
        let cover = raw.u64_or("cover", 1)?;
        if cover == 0 {
            return Err(Failure::config("`cover` must be at least 1"));
        }
        let seed = match (raw.f64("seed.s")?, raw.f64("seed.T")?) {
            (Some(s), Some(t)) => Some((s, t)),
            (None, None) => None,
            _ => return Err(Failure::config("seed.s and seed.T must be given together")),
        };

        let d = FlowOptions::default();
        let flow = FlowOptions {
            abs_tol: raw.positive_or("flow.abs_tol", d.abs_tol)?,
            rel_tol: raw.positive_or("flow.rel_tol", d.rel_tol)?,
            max_step: raw.positive_or("flow.max_step", d.max_step)?,
            collision_radius: raw.positive_or("flow.collision_radius", d.collision_radius)?,
            max_steps: raw.u64_or("flow.max_steps", d.max_steps as u64)? as usize,
        };
        let ds = ShootOptions::default();
        let shoot = ShootOptions {
            flow,
            tol: raw.positive_or("shoot.tol", ds.tol)?,
            max_iterations: raw.u64_or("shoot.max_iterations", ds.max_iterations as u64)? as usize,
            ..ds
        };
        let index = IndexOptions {
            flow,
            threshold: raw.positive_or("index.threshold", IndexOptions::default().threshold)?,
        };
        let dc = ContinuationOptions::default();
        let continuation = ContinuationOptions {
            step: raw.positive_or("continuation.step", dc.step)?,
            min_step: raw.positive_or("continuation.min_step", dc.min_step)?,
            max_corrector_distance: raw
                .positive_or("continuation.max_corrector_distance", dc.max_corrector_distance)?,
            shoot,
            index,
        };
        let dsw = BranchSwitchOptions::default();
        let switch = BranchSwitchOptions {
            dtau: raw.positive_or("switch.dtau", dsw.dtau)?,
            continuation,
            ..dsw
        };
        let scan = ScanDiagramOptions {
            switch,
            branch_range: raw.positive_or("scan.branch_range", ScanDiagramOptions::default().branch_range)?,
        };
        Ok(Self { system, involution, end_involution, branch, tau, tau_range, cover, seed, scan })
    }

    pub fn continuation(&self) -> &ContinuationOptions {
        &self.scan.switch.continuation
    }

    pub fn shoot(&self) -> &ShootOptions {
        &self.continuation().shoot
    }

    pub fn require_tau(&self) -> Result<f64, Failure> {
        self.tau.ok_or_else(|| Failure::config("`tau` is required"))
    }

    pub fn require_range(&self) -> Result<(f64, f64), Failure> {
        self.tau_range.ok_or_else(|| Failure::config("`tau.min` and `tau.max` are required"))
    }
}

fn build_system(raw: &RawConfig) -> Result<ReversibleSystem, Failure> {
    let id = raw.get("system").unwrap_or("rotating-kepler");
    let mut sys = if id == "custom" {
        let quadratic = match raw.list_f64("custom.quadratic")? {
            None => [0.0, 0.0],
            Some(v) if v.len() == 2 => [v[0], v[1]],
            Some(_) => return Err(Failure::config("`custom.quadratic` needs two numbers")),
        };
        let ham = PlanarHamiltonian {
            coriolis: raw.f64_or("custom.coriolis", 0.0)?,
            kepler: raw.f64_or("custom.kepler", 0.0)?,
            quadratic,
        };
        let angles = raw.list_f64("custom.angles")?.unwrap_or_else(|| vec![0.0]);
        let invs = angles.iter().map(|&a| Involution::reflection(reflection_id(a), a)).collect();
        ReversibleSystem::new("custom", ham, invs, raw.f64("custom.critical_value")?)
    } else {
        make_system(id).map_err(Failure::from)?
    };
    if let Some(r) = raw.f64("flow.collision_radius")? {
        sys = sys.with_collision_radius(r);
    }
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_dotted_keys() {
        let raw = RawConfig::parse("# header\nsystem = rotating-kepler\nflow.abs_tol = 1e-10 # tighter\n\ncover=2\n").unwrap();
        assert_eq!(raw.get("system"), Some("rotating-kepler"));
        assert_eq!(raw.f64("flow.abs_tol").unwrap(), Some(1e-10));
        assert_eq!(raw.u64_or("cover", 1).unwrap(), 2);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(RawConfig::parse("system rotating-kepler").is_err());
        assert!(RawConfig::parse("colour = red").is_err());
        let raw = RawConfig::parse("flow.abs_tol = -1").unwrap();
        assert!(ExperimentConfig::from_raw(&raw).is_err());
        let raw = RawConfig::parse("tau.min = -1.6\ntau.max = -1.7").unwrap();
        assert!(ExperimentConfig::from_raw(&raw).is_err());
        let raw = RawConfig::parse("system = two-body").unwrap();
        assert!(ExperimentConfig::from_raw(&raw).is_err());
        let raw = RawConfig::parse("involution = rho7").unwrap();
        assert!(ExperimentConfig::from_raw(&raw).is_err());
    }

    #[test]
    fn overrides_replace_values() {
        let mut raw = RawConfig::parse("cover = 2").unwrap();
        raw.set("cover=3").unwrap();
        assert_eq!(raw.u64_or("cover", 1).unwrap(), 3);
        assert!(raw.set("cover").is_err());
    }

    #[test]
    fn custom_template_system() {
        let raw = RawConfig::parse(
            "system = custom\ncustom.coriolis = 1\ncustom.kepler = 1\ncustom.quadratic = -2, 1\ncustom.angles = 0, 1.5707963267948966",
        )
        .unwrap();
        let cfg = ExperimentConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.system.involutions().len(), 2);
        assert!(cfg.system.involution("rho_pi2").is_ok());
    }
}
