//! Experiment configuration files.
//!
//! The format is line based: `[section]` headers, `key = value` assignments
//! and `#` comments. A value is a single item or a comma-separated list;
//! several assignments may share a line when separated by commas, as in
//! `r = 2, s = 1/4, b = 0.55`. Numbers are decimals (`0.55`, `1e-3`) or
//! fractions (`-5/8`); exponents are kept as exact rationals until they are
//! evaluated.
//!
//! ```text
//! [experiment]
//! kind = sweep            # probe | sweep | solve | lipschitz
//! seed = 7
//! out = results           # optional
//! resolution = 128, 256   # grid ladder for solve and lipschitz
//!
//! [probe]
//! estimate = TRILINEAR_T2
//! r = 2, s = 1/4, b = 0.55, b_prime = -17/40
//! samples = 20
//! lambdas = 0.5, 1, 2
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use crate::probes::family::FamilySpec;
use crate::probes::params::{q, to_f64, EstimateKind, EstimateParams, Q};
use crate::probes::runner::ProbeConfig;
use crate::solver::{LipschitzOptions, PicardConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    /// One estimate at the listed dilations (default: `lambda = 1`).
    Probe,
    /// One estimate over a dilation sweep (default: three decades).
    Sweep,
    /// Picard solve, checked against the reference integrator.
    Solve,
    /// Data-to-solution Lipschitz quotients.
    Lipschitz,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Probe => "probe",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Solve => "solve",
            ExperimentKind::Lipschitz => "lipschitz",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "probe" => Ok(ExperimentKind::Probe),
            "sweep" => Ok(ExperimentKind::Sweep),
            "solve" => Ok(ExperimentKind::Solve),
            "lipschitz" => Ok(ExperimentKind::Lipschitz),
            _ => Err(LabError::Parameter(format!(
                "unknown experiment kind `{s}` (expected probe, sweep, solve or lipschitz)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSection {
    pub estimate: EstimateKind,
    /// Only the keys the estimate reads are set.
    pub params: EstimateParams,
    pub samples: usize,
    pub lambdas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub band: f64,
    pub max_terms: usize,
    pub real: bool,
    pub gaussian_only: bool,
    pub refine: f64,
    pub check_resolution: bool,
    pub region_samples: usize,
}

impl ProbeSection {
    pub fn new(estimate: EstimateKind, experiment: ExperimentKind) -> Self {
        let base = ProbeConfig::new(estimate);
        let family = FamilySpec::default();
        let mut params = EstimateParams::default();
        let defaults = estimate.default_params();
        for key in estimate.keys() {
            if let Some(v) = defaults.get(key) {
                params.set(key, v).expect("estimate keys are parameter keys");
            }
        }
        Self {
            estimate,
            params,
            samples: base.samples,
            lambdas: if experiment == ExperimentKind::Sweep {
                ProbeConfig::decade_lambdas()
            } else {
                base.lambdas
            },
            deltas: base.deltas,
            band: family.band,
            max_terms: family.max_terms,
            real: family.real,
            gaussian_only: family.gaussian_only,
            refine: base.refine,
            check_resolution: base.check_resolution,
            region_samples: base.region_samples,
        }
    }

    pub fn probe_config(&self, seed: u64) -> ProbeConfig {
        ProbeConfig {
            kind: self.estimate,
            params: self.params,
            family: FamilySpec {
                band: self.band,
                max_terms: self.max_terms,
                real: self.real,
                gaussian_only: self.gaussian_only,
            },
            samples: self.samples,
            seed,
            lambdas: self.lambdas.clone(),
            deltas: self.deltas.clone(),
            refine: self.refine,
            check_resolution: self.check_resolution,
            region_samples: self.region_samples,
        }
    }
}

/// Initial datum `amplitude * exp(-(x / width)^2)` on `[-half_length, half_length)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSection {
    pub delta: Q,
    pub r: Q,
    pub s: Q,
    pub b: Q,
    pub b_prime: Q,
    pub half_length: f64,
    pub amplitude: f64,
    pub width: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub nonlinear: bool,
    pub time_refine: f64,
    pub constant: f64,
    /// Cross-check against the reference integrator.
    pub reference: bool,
    /// Reference step; half the stability limit (at most `1e-4`) when unset.
    pub reference_dt: Option<f64>,
}

impl Default for SolveSection {
    fn default() -> Self {
        Self {
            delta: q(1, 2),
            r: q(2, 1),
            s: q(1, 4),
            b: q(11, 20),
            b_prime: q(-17, 40),
            half_length: 20.0,
            amplitude: 0.1,
            width: 1.0,
            max_iter: 60,
            tol: 1e-10,
            nonlinear: true,
            time_refine: 1.0,
            constant: 1.0,
            reference: true,
            reference_dt: None,
        }
    }
}

impl SolveSection {
    pub fn picard_config(&self) -> PicardConfig {
        let default = PicardConfig::default();
        PicardConfig {
            delta: to_f64(self.delta),
            r: to_f64(self.r),
            s: to_f64(self.s),
            b: to_f64(self.b),
            b_prime: to_f64(self.b_prime),
            max_iter: self.max_iter,
            tol: self.tol,
            nonlinear: self.nonlinear,
            time_refine: self.time_refine,
            constant: self.constant,
            constant_source: if self.constant == default.constant {
                default.constant_source.clone()
            } else {
                "configuration".into()
            },
            ..default
        }
    }

    /// Exact check of the solver hypotheses, one message per violation.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (zero, one) = (Q::zero(), Q::one());
        let mut need = |ok: bool, msg: &str, source: &str| {
            if !ok {
                out.push(format!("[solve] {msg} ({source})"));
            }
        };
        need(self.delta > zero && self.delta <= one, "delta must satisfy 0 < delta <= 1", "Theorem 1");
        need(
            self.r > q(4, 3) && self.r <= q(2, 1),
            "r must lie in (4/3, 2]: 2 >= r > 4/3",
            "Theorem 3",
        );
        if self.r > zero {
            need(self.b > self.r.recip(), "b must exceed 1/r", "Theorem 1");
            need(
                self.s >= q(1, 2) - self.r.recip() / q(2, 1),
                "s must satisfy s >= s(r) = 1/2 - 1/(2r)",
                "Theorem 3",
            );
        }
        need(
            self.b_prime > self.b - one && self.b_prime <= zero,
            "b' must lie in (b - 1, 0]",
            "Theorem 1",
        );
        let mut num = |ok: bool, msg: &str| {
            if !ok {
                out.push(format!("[solve] {msg}"));
            }
        };
        num(self.half_length > 0.0, "half_length must be positive");
        num(self.width > 0.0, "width must be positive");
        num(self.amplitude.is_finite(), "amplitude must be finite");
        num(self.max_iter > 0, "max_iter must be positive");
        num(self.tol > 0.0, "tol must be positive");
        num(self.time_refine >= 1.0, "time_refine must be >= 1");
        num(self.constant > 0.0, "constant must be positive");
        num(self.reference_dt.map_or(true, |dt| dt > 0.0), "reference_dt must be positive");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzSection {
    pub eps: Vec<f64>,
    /// Quotients are taken over `[0, delta0]`.
    pub delta0: Q,
    pub band: f64,
}

impl LipschitzSection {
    pub fn new(delta: Q) -> Self {
        Self {
            eps: vec![1e-2, 1e-3, 1e-4],
            delta0: delta,
            band: 2.0,
        }
    }

    pub fn options(&self, seed: u64) -> LipschitzOptions {
        LipschitzOptions {
            eps: self.eps.clone(),
            delta0: to_f64(self.delta0),
            seed,
            band: self.band,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Grid sizes `N` for solve and lipschitz runs, coarse to fine.
    pub resolution: Vec<usize>,
    pub probe: Option<ProbeSection>,
    pub solve: Option<SolveSection>,
    pub lipschitz: Option<LipschitzSection>,
}

impl ExperimentConfig {
    /// Probe of `estimate` at its default parameters.
    pub fn probe(estimate: EstimateKind, kind: ExperimentKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            out: None,
            resolution: vec![256],
            probe: Some(ProbeSection::new(estimate, kind)),
            solve: None,
            lipschitz: None,
        }
    }

    /// Solve or Lipschitz run at the default solver settings.
    pub fn solver(kind: ExperimentKind, seed: u64) -> Self {
        let solve = SolveSection::default();
        Self {
            kind,
            seed,
            out: None,
            resolution: vec![256],
            lipschitz: (kind == ExperimentKind::Lipschitz).then(|| LipschitzSection::new(solve.delta)),
            probe: None,
            solve: Some(solve),
        }
    }

    /// Every violation of the configuration, or `Ok`.
    pub fn validate(&self) -> Result<()> {
        let errors = self.violations();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(LabError::Config(errors))
        }
    }

    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.resolution.is_empty() {
            out.push("[experiment] resolution must list at least one grid size".into());
        }
        for &n in &self.resolution {
            if n < 16 || n % 2 != 0 {
                out.push(format!("[experiment] resolution {n} must be even and >= 16"));
            }
        }
        match self.kind {
            ExperimentKind::Probe | ExperimentKind::Sweep => match &self.probe {
                None => out.push(format!("missing section [probe] required by kind = {}", self.kind.name())),
                Some(p) => {
                    if let Err(e) = p.estimate.check(&p.params) {
                        out.push(format!("[probe] {}: {}", p.estimate, hypothesis_text(&e)));
                    }
                    if p.samples == 0 {
                        out.push("[probe] samples must be positive".into());
                    }
                    if p.lambdas.is_empty() || p.lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                        out.push("[probe] lambdas must be a non-empty list of positive numbers".into());
                    }
                    if p.deltas.is_empty() || p.deltas.iter().any(|d| !(*d > 0.0 && *d <= 1.0)) {
                        out.push("[probe] deltas must be a non-empty list in (0, 1]".into());
                    }
                    if !(p.band > 0.0) || p.max_terms == 0 {
                        out.push("[probe] band and max_terms must be positive".into());
                    }
                    if !(p.refine >= 1.0) {
                        out.push("[probe] refine must be >= 1".into());
                    }
                }
            },
            ExperimentKind::Solve | ExperimentKind::Lipschitz => match &self.solve {
                None => out.push(format!("missing section [solve] required by kind = {}", self.kind.name())),
                Some(s) => {
                    out.extend(s.violations());
                    if self.kind == ExperimentKind::Lipschitz {
                        match &self.lipschitz {
                            None => out.push("missing section [lipschitz] required by kind = lipschitz".into()),
                            Some(l) => {
                                if l.eps.is_empty() || l.eps.iter().any(|e| *e == 0.0 || !e.is_finite()) {
                                    out.push(
                                        "[lipschitz] eps must list nonzero finite sizes (a zero size leaves the quotient undefined)"
                                            .into(),
                                    );
                                }
                                if !(l.delta0 > Q::zero() && l.delta0 <= s.delta) {
                                    out.push("[lipschitz] delta0 must lie in (0, delta]".into());
                                }
                                if !(l.band > 0.0) {
                                    out.push("[lipschitz] band must be positive".into());
                                }
                            }
                        }
                    }
                }
            },
        }
        out
    }

    /// Canonical text: fixed section and key order, every field written.
    pub fn to_text(&self) -> String {
        let mut t = String::new();
        let _ = writeln!(t, "[experiment]");
        let _ = writeln!(t, "kind = {}", self.kind.name());
        let _ = writeln!(t, "seed = {}", self.seed);
        if let Some(out) = &self.out {
            let _ = writeln!(t, "out = {}", out.display());
        }
        let _ = writeln!(t, "resolution = {}", join(&self.resolution));
        if let Some(p) = &self.probe {
            let _ = writeln!(t, "\n[probe]");
            let _ = writeln!(t, "estimate = {}", p.estimate);
            for key in EstimateParams::KEYS {
                if let Some(v) = p.params.get(key) {
                    let _ = writeln!(t, "{key} = {v}");
                }
            }
            let _ = writeln!(t, "samples = {}", p.samples);
            let _ = writeln!(t, "lambdas = {}", join(&p.lambdas));
            let _ = writeln!(t, "deltas = {}", join(&p.deltas));
            let _ = writeln!(t, "band = {}", p.band);
            let _ = writeln!(t, "max_terms = {}", p.max_terms);
            let _ = writeln!(t, "real = {}", p.real);
            let _ = writeln!(t, "gaussian_only = {}", p.gaussian_only);
            let _ = writeln!(t, "refine = {}", p.refine);
            let _ = writeln!(t, "check_resolution = {}", p.check_resolution);
            let _ = writeln!(t, "region_samples = {}", p.region_samples);
        }
        if let Some(s) = &self.solve {
            let _ = writeln!(t, "\n[solve]");
            let _ = writeln!(t, "delta = {}", s.delta);
            let _ = writeln!(t, "r = {}", s.r);
            let _ = writeln!(t, "s = {}", s.s);
            let _ = writeln!(t, "b = {}", s.b);
            let _ = writeln!(t, "b_prime = {}", s.b_prime);
            let _ = writeln!(t, "half_length = {}", s.half_length);
            let _ = writeln!(t, "amplitude = {}", s.amplitude);
            let _ = writeln!(t, "width = {}", s.width);
            let _ = writeln!(t, "max_iter = {}", s.max_iter);
            let _ = writeln!(t, "tol = {}", s.tol);
            let _ = writeln!(t, "nonlinear = {}", s.nonlinear);
            let _ = writeln!(t, "time_refine = {}", s.time_refine);
            let _ = writeln!(t, "constant = {}", s.constant);
            let _ = writeln!(t, "reference = {}", s.reference);
            if let Some(dt) = s.reference_dt {
                let _ = writeln!(t, "reference_dt = {dt}");
            }
        }
        if let Some(l) = &self.lipschitz {
            let _ = writeln!(t, "\n[lipschitz]");
            let _ = writeln!(t, "eps = {}", join(&l.eps));
            let _ = writeln!(t, "delta0 = {}", l.delta0);
            let _ = writeln!(t, "band = {}", l.band);
        }
        t
    }

    /// SHA-256 of the canonical text, so independent of the order in which
    /// keys and sections were written.
    pub fn hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.to_text().as_bytes()))
    }
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn hypothesis_text(e: &LabError) -> String {
    match e {
        LabError::Precondition(m) | LabError::Parameter(m) => m.clone(),
        other => other.to_string(),
    }
}

/// Exact value of a decimal (`-0.55`, `1e-3`) or fraction (`1/4`).
pub fn parse_rational(text: &str) -> Result<Q> {
    let text = text.trim();
    let bad = || LabError::Parameter(format!("`{text}` is not a decimal or fraction"));
    if let Some((n, d)) = text.split_once('/') {
        let (n, d) = (parse_decimal(n.trim()).ok_or_else(bad)?, parse_decimal(d.trim()).ok_or_else(bad)?);
        if d.is_zero() {
            return Err(LabError::Parameter(format!("`{text}` has a zero denominator")));
        }
        return Ok(n / d);
    }
    parse_decimal(text).ok_or_else(bad)
}

fn parse_decimal(text: &str) -> Option<Q> {
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let mut n: i64 = 0;
    for c in int.chars().chain(frac.chars()) {
        n = n.checked_mul(10)?.checked_add(c.to_digit(10)? as i64)?;
    }
    let shift = exp - frac.len() as i32;
    let pow = 10i64.checked_pow(shift.unsigned_abs())?;
    let v = if shift >= 0 {
        Q::from_integer(n.checked_mul(pow)?)
    } else {
        Q::new(n, pow)
    };
    Some(if neg { -v } else { v })
}

/// Number as `f64`, accepting the same syntax as [`parse_rational`] plus
/// decimals too long for an exact `i64` ratio.
fn parse_float(text: &str) -> Result<f64> {
    match parse_rational(text) {
        Ok(v) => Ok(to_f64(v)),
        Err(e) => text.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or(e),
    }
}

struct Entry {
    items: Vec<String>,
    line: usize,
}

/// Assignments of one section, consumed key by key; leftovers are unknown keys.
struct Section {
    name: String,
    entries: BTreeMap<String, Entry>,
    used: BTreeSet<String>,
    errors: Vec<String>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<(Vec<String>, usize)> {
        self.used.insert(key.to_string());
        self.entries.get(key).map(|e| (e.items.clone(), e.line))
    }

    fn err(&mut self, line: usize, msg: String) {
        self.errors.push(format!("line {line}: [{}] {msg}", self.name));
    }

    fn scalar(&mut self, key: &str) -> Option<(String, usize)> {
        let (items, line) = self.take(key)?;
        if items.len() != 1 {
            self.err(line, format!("`{key}` takes a single value"));
            return None;
        }
        Some((items[0].clone(), line))
    }

    fn parsed<T>(&mut self, key: &str, parse: impl Fn(&str) -> Result<T>) -> Option<T> {
        let (v, line) = self.scalar(key)?;
        match parse(&v) {
            Ok(x) => Some(x),
            Err(e) => {
                self.err(line, format!("`{key}`: {}", hypothesis_text(&e)));
                None
            }
        }
    }

    fn list<T>(&mut self, key: &str, parse: impl Fn(&str) -> Result<T>) -> Option<Vec<T>> {
        let (items, line) = self.take(key)?;
        let mut out = Vec::with_capacity(items.len());
        for it in &items {
            match parse(it) {
                Ok(x) => out.push(x),
                Err(e) => {
                    self.err(line, format!("`{key}`: {}", hypothesis_text(&e)));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn rational(&mut self, key: &str, default: Q) -> Q {
        self.parsed(key, parse_rational).unwrap_or(default)
    }

    fn float(&mut self, key: &str, default: f64) -> f64 {
        self.parsed(key, parse_float).unwrap_or(default)
    }

    fn count(&mut self, key: &str, default: usize) -> usize {
        self.parsed(key, parse_count).unwrap_or(default)
    }

    fn flag(&mut self, key: &str, default: bool) -> bool {
        self.parsed(key, parse_bool).unwrap_or(default)
    }

    fn finish(mut self) -> Vec<String> {
        let unknown: Vec<(String, usize)> = self
            .entries
            .iter()
            .filter(|(k, _)| !self.used.contains(*k))
            .map(|(k, e)| (k.clone(), e.line))
            .collect();
        for (k, line) in unknown {
            self.err(line, format!("unknown key `{k}`"));
        }
        self.errors
    }
}

fn parse_count(text: &str) -> Result<usize> {
    text.parse::<usize>()
        .map_err(|_| LabError::Parameter(format!("`{text}` is not a non-negative integer")))
}

fn parse_bool(text: &str) -> Result<bool> {
    match text {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(LabError::Parameter(format!("`{text}` is not true or false"))),
    }
}

const SECTIONS: [&str; 4] = ["experiment", "probe", "solve", "lipschitz"];

/// Splits the text into sections of assignments. Errors are collected.
fn split_sections(text: &str, errors: &mut Vec<String>) -> BTreeMap<String, Section> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                errors.push(format!("line {line_no}: malformed section header `{line}`"));
                current = None;
                continue;
            };
            let name = name.trim().to_string();
            if !SECTIONS.contains(&name.as_str()) {
                errors.push(format!(
                    "line {line_no}: unknown section [{name}] (expected one of {})",
                    SECTIONS.join(", ")
                ));
                current = None;
                continue;
            }
            if sections.contains_key(&name) {
                errors.push(format!("line {line_no}: section [{name}] appears twice"));
            }
            sections.entry(name.clone()).or_insert_with(|| Section {
                name: name.clone(),
                entries: BTreeMap::new(),
                used: BTreeSet::new(),
                errors: Vec::new(),
            });
            current = Some(name);
            continue;
        }
        let Some(name) = current.clone() else {
            errors.push(format!("line {line_no}: `{line}` appears before any section header"));
            continue;
        };
        let section = sections.get_mut(&name).expect("current section exists");
        let mut key: Option<String> = None;
        for part in line.split(',') {
            let part = part.trim();
            if let Some((k, v)) = part.split_once('=') {
                let k = k.trim().to_string();
                if k.is_empty() || k.contains(char::is_whitespace) {
                    errors.push(format!("line {line_no}: malformed key `{k}`"));
                    key = None;
                    continue;
                }
                if section.entries.contains_key(&k) {
                    errors.push(format!("line {line_no}: [{name}] key `{k}` is set twice"));
                }
                section.entries.insert(
                    k.clone(),
                    Entry {
                        items: vec![v.trim().to_string()],
                        line: line_no,
                    },
                );
                key = Some(k);
            } else if let Some(k) = &key {
                section.entries.get_mut(k).expect("key was inserted").items.push(part.to_string());
            } else {
                errors.push(format!("line {line_no}: expected `key = value`, found `{part}`"));
            }
        }
    }
    for s in sections.values() {
        for (k, e) in &s.entries {
            if e.items.iter().any(|v| v.is_empty()) {
                errors.push(format!("line {}: [{}] `{k}` has an empty value", e.line, s.name));
            }
        }
    }
    sections
}

/// Parses and validates a configuration, reporting every violation found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut errors = Vec::new();
    let mut sections = split_sections(text, &mut errors);

    let Some(mut exp) = sections.remove("experiment") else {
        errors.push("missing section [experiment]".into());
        return Err(LabError::Config(errors));
    };
    let kind = match exp.scalar("kind") {
        Some((v, line)) => match v.parse::<ExperimentKind>() {
            Ok(k) => Some(k),
            Err(e) => {
                exp.err(line, hypothesis_text(&e));
                None
            }
        },
        None => {
            exp.errors.push("[experiment] missing key `kind`".into());
            None
        }
    };
    let seed = exp.parsed("seed", |v| {
        v.parse::<u64>()
            .map_err(|_| LabError::Parameter(format!("`{v}` is not a non-negative integer seed")))
    });
    if seed.is_none() && !exp.entries.contains_key("seed") {
        exp.errors.push("[experiment] missing key `seed` (runs must be reproducible)".into());
    }
    let out = exp.scalar("out").map(|(v, _)| PathBuf::from(v));
    let resolution = exp.list("resolution", parse_count).unwrap_or_else(|| vec![256]);
    errors.extend(exp.finish());
    let kind = kind.unwrap_or(ExperimentKind::Probe);

    let probe = sections.remove("probe").map(|mut sec| {
        let estimate = match sec.scalar("estimate") {
            Some((v, line)) => match v.parse::<EstimateKind>() {
                Ok(k) => Some(k),
                Err(e) => {
                    sec.err(line, hypothesis_text(&e));
                    None
                }
            },
            None => {
                sec.errors.push("[probe] missing key `estimate`".into());
                None
            }
        };
        let estimate = estimate.unwrap_or(EstimateKind::TrilinearT2);
        let mut p = ProbeSection::new(estimate, kind);
        for key in EstimateParams::KEYS {
            if !sec.entries.contains_key(key) {
                continue;
            }
            if !estimate.keys().contains(&key) {
                let line = sec.entries[key].line;
                sec.used.insert(key.to_string());
                sec.err(line, format!("`{key}` is not a parameter of {estimate}"));
                continue;
            }
            if let Some(v) = sec.parsed(key, parse_rational) {
                p.params.set(key, v).expect("known key");
            }
        }
        p.samples = sec.count("samples", p.samples);
        if let Some(l) = sec.list("lambdas", parse_float) {
            p.lambdas = l;
        }
        if let Some(d) = sec.list("deltas", parse_float) {
            p.deltas = d;
        }
        p.band = sec.float("band", p.band);
        p.max_terms = sec.count("max_terms", p.max_terms);
        p.real = sec.flag("real", p.real);
        p.gaussian_only = sec.flag("gaussian_only", p.gaussian_only);
        p.refine = sec.float("refine", p.refine);
        p.check_resolution = sec.flag("check_resolution", p.check_resolution);
        p.region_samples = sec.count("region_samples", p.region_samples);
        errors.extend(sec.finish());
        p
    });

    let solve = sections.remove("solve").map(|mut sec| {
        let d = SolveSection::default();
        let s = SolveSection {
            delta: sec.rational("delta", d.delta),
            r: sec.rational("r", d.r),
            s: sec.rational("s", d.s),
            b: sec.rational("b", d.b),
            b_prime: sec.rational("b_prime", d.b_prime),
            half_length: sec.float("half_length", d.half_length),
            amplitude: sec.float("amplitude", d.amplitude),
            width: sec.float("width", d.width),
            max_iter: sec.count("max_iter", d.max_iter),
            tol: sec.float("tol", d.tol),
            nonlinear: sec.flag("nonlinear", d.nonlinear),
            time_refine: sec.float("time_refine", d.time_refine),
            constant: sec.float("constant", d.constant),
            reference: sec.flag("reference", d.reference),
            reference_dt: sec.parsed("reference_dt", parse_float),
        };
        errors.extend(sec.finish());
        s
    });

    let delta = solve.as_ref().map_or(SolveSection::default().delta, |s| s.delta);
    let mut lipschitz = sections.remove("lipschitz").map(|mut sec| {
        let mut l = LipschitzSection::new(delta);
        if let Some(e) = sec.list("eps", parse_float) {
            l.eps = e;
        }
        l.delta0 = sec.rational("delta0", l.delta0);
        l.band = sec.float("band", l.band);
        errors.extend(sec.finish());
        l
    });
    if kind == ExperimentKind::Lipschitz && lipschitz.is_none() {
        lipschitz = Some(LipschitzSection::new(delta));
    }

    let config = ExperimentConfig {
        kind,
        seed: seed.unwrap_or(0),
        out,
        resolution,
        probe,
        solve,
        lipschitz,
    };
    errors.extend(config.violations());
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(LabError::Config(errors))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const T2: &str = "[experiment]\nkind = probe\nseed = 7\n\n[probe]\nestimate = TRILINEAR_T2\nr = 2, s = 1/4, b = 0.55\n";

    fn messages(text: &str) -> Vec<String> {
        match parse_config(text) {
            Err(LabError::Config(m)) => m,
            other => panic!("expected a configuration error, got {other:?}"),
        }
    }

    #[test]
    fn trilinear_example_is_valid() {
        let c = parse_config(T2).unwrap();
        let p = c.probe.unwrap();
        assert_eq!(p.estimate, EstimateKind::TrilinearT2);
        assert_eq!(p.params.r, Some(q(2, 1)));
        assert_eq!(p.params.s, Some(q(1, 4)));
        assert_eq!(p.params.b, Some(q(11, 20)));
        assert_eq!(c.seed, 7);
    }

    #[test]
    fn r_below_four_thirds_names_the_hypothesis() {
        let m = messages(&T2.replace("r = 2", "r = 1.2"));
        assert!(m.iter().any(|e| e.contains("2 >= r > 4/3")), "{m:?}");
    }

    #[test]
    fn empty_text_is_missing_a_section() {
        let m = messages("");
        assert_eq!(m, vec!["missing section [experiment]".to_string()]);
    }

    #[test]
    fn every_violation_is_listed() {
        let text = "[experiment]\nkind = probe\ncolour = red\n[probe]\nestimate = TRILINEAR_T2\nsamples = many\nq = 3\n[plots]\n";
        let m = messages(text);
        for needle in ["unknown key `colour`", "missing key `seed`", "`many`", "`q` is not a parameter", "unknown section [plots]"] {
            assert!(m.iter().any(|e| e.contains(needle)), "{needle} not in {m:?}");
        }
    }

    #[test]
    fn fractions_and_decimals_are_exact() {
        assert_eq!(parse_rational("1/4").unwrap(), q(1, 4));
        assert_eq!(parse_rational("-5/8").unwrap(), q(-5, 8));
        assert_eq!(parse_rational("0.55").unwrap(), q(11, 20));
        assert_eq!(parse_rational("1e-3").unwrap(), q(1, 1000));
        assert_eq!(parse_rational("2.5E1").unwrap(), q(25, 1));
        assert_eq!(parse_rational("0.5/2").unwrap(), q(1, 4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn exact_boundary_is_rejected() {
        // b = 1/r exactly fails b > 1/r, which a decimal 0.5000000001 would pass
        let m = messages(&T2.replace("b = 0.55", "b = 1/2"));
        assert!(m.iter().any(|e| e.contains("b must exceed 1/r")), "{m:?}");
    }

    #[test]
    fn round_trip_is_identity() {
        let texts = [
            T2.to_string(),
            "[experiment]\nkind = lipschitz\nseed = 3\nresolution = 128, 256\n[solve]\ndelta = 1/4\n[lipschitz]\neps = 1e-2, 1e-3\n".into(),
            "[experiment]\nkind = sweep\nseed = 1\nout = /tmp/x\n[probe]\nestimate = LEMMA2_DELTA\ndeltas = 1, 1/2, 1/4\n".into(),
        ];
        for t in texts {
            let a = parse_config(&t).unwrap();
            let b = parse_config(&a.to_text()).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.to_text(), b.to_text());
        }
    }

    #[test]
    fn hash_ignores_field_order() {
        let a = parse_config(T2).unwrap();
        let shuffled = "[probe]\nb = 11/20\nestimate = TRILINEAR_T2\ns = 0.25, r = 2\n[experiment]\nseed = 7\nkind = probe\n";
        let b = parse_config(shuffled).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = parse_config(&T2.replace("seed = 7", "seed = 8")).unwrap();
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn solver_hypotheses_are_checked_exactly() {
        let text = "[experiment]\nkind = solve\nseed = 0\n[solve]\nr = 2\nb = 1/2\nb_prime = -1/2\ns = 1/8\ndelta = 2\n";
        let m = messages(text);
        for needle in ["0 < delta <= 1", "b must exceed 1/r", "b' must lie in (b - 1, 0]", "s >= s(r)"] {
            assert!(m.iter().any(|e| e.contains(needle)), "{needle} not in {m:?}");
        }
    }

    #[test]
    fn zero_perturbation_is_a_configuration_error() {
        let text = "[experiment]\nkind = lipschitz\nseed = 0\n[solve]\n[lipschitz]\neps = 1e-3, 0\n";
        assert!(messages(text).iter().any(|e| e.contains("quotient undefined")));
    }

    #[test]
    fn lists_and_multiple_assignments_share_lines() {
        let text = "[experiment]\nkind = sweep, seed = 2\n[probe]\nestimate = EMBED_52\nlambdas = 1, 2, 4, samples = 3\n";
        let c = parse_config(text).unwrap();
        let p = c.probe.unwrap();
        assert_eq!(p.lambdas, vec![1.0, 2.0, 4.0]);
        assert_eq!(p.samples, 3);
    }

    #[test]
    fn sweep_defaults_span_three_decades() {
        let c = parse_config("[experiment]\nkind = sweep\nseed = 0\n[probe]\nestimate = HOMOG_5\n").unwrap();
        assert_eq!(c.probe.unwrap().lambdas, ProbeConfig::decade_lambdas());
    }
}
