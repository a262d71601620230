//! Experiment configuration: bracketed sections of `key = value` pairs.
//!
//! ```text
//! seed = 7
//!
//! [system]
//! kind = grid          ; full | grid
//! k = auto             ; grid only: ceil(1/eps) symbols at each scale
//! sidedness = one-sided
//!
//! [potential.phi]
//! type = constant
//! value = 0
//!
//! [schedule]
//! eps = 2^-3, 2^-4, 2^-5
//! n = 1, 2, 3, 4
//! ```
//!
//! Numbers are decimal, `a/b`, or `b^e` (for example `2^-3`).

use crate::bowen::{Caps, DEFAULT_EXACT_CAP};
use crate::error::{Error, Result};
use crate::systems::{
    Potential, PotentialSpec, ShiftKind, Sidedness, SymbolMetric, SystemFamily, SystemModel, DEFAULT_ENUMERATION_CAP,
    DEFAULT_EPS_MIN,
};
use ini::Ini;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

pub type Section = BTreeMap<String, String>;

#[derive(Clone, Debug, PartialEq)]
pub struct Schedules {
    pub eps: Vec<f64>,
    pub n: Vec<usize>,
    pub t: Vec<f64>,
    pub delta: Vec<f64>,
    pub eta: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub family: SystemFamily,
    pub potentials: BTreeMap<String, PotentialSpec>,
    pub schedules: Schedules,
    pub caps: Caps,
    /// Every section as raw strings, for command-specific options.
    pub sections: BTreeMap<String, Section>,
    /// SHA-256 of the config text and the effective seed.
    pub hash: String,
}

/// Parses `1.5`, `3/8` or `2^-3`.
pub fn parse_number(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let bad = || format!("not a number: {s:?}");
    let v = if let Some((b, e)) = s.split_once('^') {
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        let e: f64 = e.trim().parse().map_err(|_| bad())?;
        b.powf(e)
    } else if let Some((a, b)) = s.split_once('/') {
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        a / b
    } else {
        s.parse().map_err(|_| bad())?
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

fn key_err(section: &str, key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("[{section}] {key}: {msg}"))
}

fn section_label(name: &str) -> &str {
    if name.is_empty() {
        "general"
    } else {
        name
    }
}

/// Typed access to one section.
#[derive(Clone, Copy)]
pub struct SectionView<'a> {
    pub name: &'a str,
    pub map: Option<&'a Section>,
}

impl<'a> SectionView<'a> {
    pub fn raw(&self, key: &str) -> Option<&'a str> {
        self.map.and_then(|m| m.get(key)).map(|s| s.as_str())
    }

    fn err(&self, key: &str, msg: impl std::fmt::Display) -> Error {
        key_err(section_label(self.name), key, msg)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key).map(|s| parse_number(s).map_err(|e| self.err(key, e))).transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.raw(key)
            .map(|s| s.trim().parse::<usize>().map_err(|_| self.err(key, format!("not a nonnegative integer: {s:?}"))))
            .transpose()
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.usize(key)?.unwrap_or(default))
    }

    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.raw(key)
            .map(|s| {
                s.split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| parse_number(t).map_err(|e| self.err(key, e)))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()
    }

    pub fn usize_list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        self.raw(key)
            .map(|s| {
                s.split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| {
                        t.trim()
                            .parse::<usize>()
                            .map_err(|_| self.err(key, format!("not a nonnegative integer: {t:?}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()
    }

    pub fn string_or(&self, key: &str, default: &str) -> String {
        self.raw(key).map(|s| s.trim().to_string()).unwrap_or_else(|| default.to_string())
    }

    pub fn choice<T: Copy>(&self, key: &str, default: T, options: &[(&str, T)]) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => options
                .iter()
                .find(|(name, _)| *name == s.trim())
                .map(|(_, v)| *v)
                .ok_or_else(|| {
                    self.err(
                        key,
                        format!(
                            "unknown value {s:?}, expected one of {}",
                            options.iter().map(|o| o.0).collect::<Vec<_>>().join(", ")
                        ),
                    )
                }),
        }
    }
}

fn monotone<T: PartialOrd + Copy>(xs: &[T], increasing: bool, key: &str) -> Result<()> {
    if xs.is_empty() {
        return Err(key_err("schedule", key, "must not be empty"));
    }
    let ok = xs.windows(2).all(|w| if increasing { w[0] < w[1] } else { w[0] > w[1] });
    if !ok {
        let dir = if increasing { "increasing" } else { "decreasing" };
        return Err(key_err("schedule", key, format!("must be strictly {dir}")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn section<'a>(&'a self, name: &'a str) -> SectionView<'a> {
        view_of(&self.sections, name)
    }

    /// A named potential, with an error naming the missing name.
    pub fn potential(&self, name: &str) -> Result<&PotentialSpec> {
        self.potentials
            .get(name)
            .ok_or_else(|| Error::Config(format!("potential {name:?} is not defined (expected a [potential.{name}] section)")))
    }

    pub fn require_eps(&self) -> Result<&[f64]> {
        if self.schedules.eps.is_empty() {
            return Err(key_err("schedule", "eps", "missing"));
        }
        Ok(&self.schedules.eps)
    }

    pub fn require_n(&self) -> Result<&[usize]> {
        if self.schedules.n.is_empty() {
            return Err(key_err("schedule", "n", "missing"));
        }
        Ok(&self.schedules.n)
    }

    pub fn require_t(&self) -> Result<&[f64]> {
        if self.schedules.t.is_empty() {
            return Err(key_err("schedule", "T", "missing"));
        }
        Ok(&self.schedules.t)
    }

    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, seed_override)
    }

    pub fn parse(text: &str, seed_override: Option<u64>) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(format!("malformed config: {e}")))?;
        let mut sections: BTreeMap<String, Section> = BTreeMap::new();
        for (name, props) in ini.iter() {
            let entry = sections.entry(name.unwrap_or("").to_string()).or_default();
            for (k, v) in props.iter() {
                entry.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        let view = |name: &'static str| view_of(&sections, name);

        let seed = match seed_override {
            Some(s) => s,
            None => {
                let general = view("");
                let run = view("run");
                let raw = general.raw("seed").map(|s| ("general", s)).or_else(|| run.raw("seed").map(|s| ("run", s)));
                match raw {
                    Some((sec, s)) => s
                        .trim()
                        .parse::<u64>()
                        .map_err(|_| key_err(sec, "seed", format!("not an unsigned integer: {s:?}")))?,
                    None => return Err(Error::Config("missing required key: seed".into())),
                }
            }
        };

        let sched = view("schedule");
        let eps = sched.f64_list("eps")?.unwrap_or_default();
        if !eps.is_empty() {
            monotone(&eps, false, "eps")?;
            if eps.iter().any(|&e| !(e > 0.0)) {
                return Err(key_err("schedule", "eps", "values must be positive"));
            }
        }
        let n = sched.usize_list("n")?.unwrap_or_default();
        if !n.is_empty() {
            monotone(&n, true, "n")?;
            if n[0] == 0 {
                return Err(key_err("schedule", "n", "values must be positive"));
            }
        }
        let t = sched.f64_list("T")?.or(sched.f64_list("t")?).unwrap_or_default();
        if !t.is_empty() {
            monotone(&t, true, "T")?;
        }
        let delta = sched.f64_list("delta")?.unwrap_or_default();
        if delta.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
            return Err(key_err("schedule", "delta", "values must lie in (0, 1)"));
        }
        let eta = sched.f64_list("eta")?.unwrap_or_default();
        if eta.iter().any(|&e| !(e > 0.0)) {
            return Err(key_err("schedule", "eta", "values must be positive"));
        }

        let caps_sec = view("caps");
        let enumeration_cap = caps_sec.usize_or("enumeration", DEFAULT_ENUMERATION_CAP)?;
        let caps = Caps {
            exact: caps_sec.usize_or("exact", DEFAULT_EXACT_CAP)?,
        };

        let family = parse_system(view("system"), &eps, enumeration_cap)?;
        let mut potentials = BTreeMap::new();
        for name in sections.keys() {
            if let Some(p) = name.strip_prefix("potential.") {
                let spec = parse_potential(view_of(&sections, name), &family)?;
                potentials.insert(p.to_string(), spec);
            }
        }

        let mut h = Sha256::new();
        h.update(text.as_bytes());
        h.update(format!("\nseed={seed}\n").as_bytes());
        let hash = h.finalize().iter().map(|b| format!("{b:02x}")).collect();

        Ok(ExperimentConfig {
            seed,
            family,
            potentials,
            schedules: Schedules { eps, n, t, delta, eta },
            caps,
            sections,
            hash,
        })
    }
}

fn view_of<'a>(sections: &'a BTreeMap<String, Section>, name: &'a str) -> SectionView<'a> {
    SectionView {
        name: sections.get_key_value(name).map(|(k, _)| k.as_str()).unwrap_or(name),
        map: sections.get(name),
    }
}

fn parse_system(sec: SectionView<'_>, eps: &[f64], enumeration_cap: usize) -> Result<SystemFamily> {
    if sec.map.is_none() {
        return Err(Error::Config("missing [system] section".into()));
    }
    let kind = sec.choice(
        "kind",
        ShiftKind::FullShift,
        &[
            ("full", ShiftKind::FullShift),
            ("full-shift", ShiftKind::FullShift),
            ("grid", ShiftKind::GridShift),
            ("grid-shift", ShiftKind::GridShift),
        ],
    )?;
    let sidedness = sec.choice(
        "sidedness",
        Sidedness::OneSided,
        &[("one-sided", Sidedness::OneSided), ("two-sided", Sidedness::TwoSided)],
    )?;
    let weight_base = sec.f64_or("weight_base", 0.5)?;
    let smallest = eps.iter().cloned().fold(f64::INFINITY, f64::min);
    let eps_min = sec.f64_or("eps_min", DEFAULT_EPS_MIN.min(smallest))?;
    let k_raw = sec.raw("k").map(|s| s.trim().to_string());
    if kind == ShiftKind::GridShift && k_raw.as_deref().is_none_or(|k| k == "auto") {
        if sec.raw("window").is_some() {
            return Err(key_err("system", "window", "not supported with k = auto"));
        }
        return Ok(SystemFamily::GridPerScale {
            sidedness,
            weight_base,
            eps_min,
            enumeration_cap,
        });
    }
    let k = sec
        .usize("k")?
        .ok_or_else(|| key_err("system", "k", "missing (alphabet size)"))?;
    let mut b = SystemModel::builder(kind, k)
        .sidedness(sidedness)
        .weight_base(weight_base)
        .eps_min(eps_min)
        .enumeration_cap(enumeration_cap);
    if let Some(w) = sec.usize("window")? {
        b = b.window(w);
    }
    if let Some(m) = sec.raw("metric") {
        let m = match m.trim() {
            "discrete" => SymbolMetric::Discrete,
            "abs-diff" | "grid" => SymbolMetric::AbsDiff,
            other => return Err(key_err("system", "metric", format!("unknown value {other:?}"))),
        };
        b = b.symbol_metric(m);
    }
    Ok(SystemFamily::Fixed(b.build().map_err(|e| Error::Config(format!("[system] {e}")))?))
}

fn parse_potential(sec: SectionView<'_>, family: &SystemFamily) -> Result<PotentialSpec> {
    let ty = sec.string_or("type", "constant");
    let need = |key: &str| -> Result<f64> { sec.f64(key)?.ok_or_else(|| sec.err(key, "missing")) };
    let list = |key: &str| -> Result<Vec<f64>> { sec.f64_list(key)?.ok_or_else(|| sec.err(key, "missing")) };
    match ty.as_str() {
        "constant" => Ok(PotentialSpec::constant(need("value")?)),
        "affine" => Ok(PotentialSpec::Affine {
            offset: sec.f64_or("offset", 0.0)?,
            slope: sec.f64_or("slope", 0.0)?,
        }),
        "coordinate" | "table" => {
            let SystemFamily::Fixed(sys) = family else {
                return Err(sec.err("type", "table potentials need a fixed alphabet; use type = affine with k = auto"));
            };
            let values = list("values")?;
            let len = if ty == "coordinate" { 1 } else { sec.usize_or("len", 1)? };
            let p = Potential::finite_range(len, sys.k(), values).map_err(|e| sec.err("values", e))?;
            Ok(PotentialSpec::Fixed(p))
        }
        other => Err(sec.err("type", format!("unknown potential type {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "seed = 3\n[system]\nkind = grid\n[schedule]\neps = 2^-3, 2^-4, 2^-5\nn = 1, 2, 3\n[potential.phi]\ntype = constant\nvalue = 0.5\n";

    #[test]
    fn numbers() {
        assert_eq!(parse_number("2^-3").unwrap(), 0.125);
        assert_eq!(parse_number("3/8").unwrap(), 0.375);
        assert_eq!(parse_number(" 1e-2 ").unwrap(), 0.01);
        assert!(parse_number("two").is_err());
    }

    #[test]
    fn parses_base() {
        let c = ExperimentConfig::parse(BASE, None).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.schedules.eps, vec![0.125, 0.0625, 0.03125]);
        assert!(matches!(c.family, SystemFamily::GridPerScale { .. }));
        assert_eq!(c.potential("phi").unwrap(), &PotentialSpec::constant(0.5));
        assert!(c.potential("psi").is_err());
        let d = ExperimentConfig::parse(BASE, Some(9)).unwrap();
        assert_eq!(d.seed, 9);
        assert_ne!(c.hash, d.hash);
    }

    #[test]
    fn missing_seed_is_named() {
        let text = BASE.replace("seed = 3\n", "");
        let e = ExperimentConfig::parse(&text, None).unwrap_err().to_string();
        assert!(e.contains("seed"), "{e}");
    }

    #[test]
    fn offending_key_is_named() {
        let text = BASE.replace("n = 1, 2, 3", "n = 3, 2");
        let e = ExperimentConfig::parse(&text, None).unwrap_err().to_string();
        assert!(e.contains("[schedule] n"), "{e}");
        let text = BASE.replace("value = 0.5", "value = lots");
        let e = ExperimentConfig::parse(&text, None).unwrap_err().to_string();
        assert!(e.contains("[potential.phi] value"), "{e}");
    }

    #[test]
    fn fixed_system_with_table() {
        let text = "seed = 1\n[system]\nkind = full\nk = 2\n[potential.phi]\ntype = coordinate\nvalues = 0.25, 1\n";
        let c = ExperimentConfig::parse(text, None).unwrap();
        match c.potential("phi").unwrap() {
            PotentialSpec::Fixed(Potential::Table(t)) => assert_eq!(t.values, vec![0.25, 1.0]),
            other => panic!("{other:?}"),
        }
    }
}
