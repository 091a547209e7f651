//! Run configuration: strict JSON schema, presets and `key=value` overrides.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::contfrac::{cf_elements, convergents, golden_convergents, ContinuedFraction, ExactTag, RationalApproximant};
use crate::error::{Error, Result};
use crate::interface::Boundary;
use crate::numerics::Window;
use crate::potentials::{CoefficientField, FourierTerm, ProblemKind, QuasiperiodicProblem, Surface, Tile};
use crate::tiling::SubstitutionRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Bands,
    Superspace,
    Pwe,
    TraceScan,
    Interface,
    Convergence,
    TilingInfo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Sin2dSchrodinger,
    Sin2dGeneralized,
    GoldenLaminate,
    ReflectedSchrodinger,
    ReflectedGeneralized,
}

/// `"sin2d"`, `"sin2d+3"`, `{"fourier": [[m, n, re, im], ...]}` or `{"constant": c}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Named(String),
    Fourier { fourier: Vec<(i32, i32, f64, f64)> },
    Constant { constant: f64 },
}

impl FieldSpec {
    pub fn surface(&self) -> Result<Surface> {
        match self {
            FieldSpec::Named(s) if s == "sin2d" => Ok(Surface::sin2d()),
            FieldSpec::Named(s) if s == "sin2d+3" => Ok(Surface::sin2d_plus(3.0)),
            FieldSpec::Named(s) if s == "zero" => Ok(Surface::zero()),
            FieldSpec::Named(s) => Err(Error::Config(format!("unknown field '{s}'"))),
            FieldSpec::Fourier { fourier } => {
                let terms: Vec<FourierTerm> = fourier
                    .iter()
                    .map(|&(m, n, re, im)| FourierTerm {
                        m,
                        n,
                        coeff: num_complex::Complex64::new(re, im),
                    })
                    .collect();
                Surface::from_terms(&terms)
            }
            FieldSpec::Constant { constant } => Ok(Surface::constant(*constant)),
        }
    }
}

/// `"golden"`, `"sqrt2"`, `{"cf": [a0, a1, ...]}` or `{"rational": [p, q]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaSpec {
    Named(String),
    Cf { cf: Vec<i64> },
    Rational { rational: (i64, i64) },
}

impl ThetaSpec {
    fn expansion(&self) -> Result<ContinuedFraction> {
        match self {
            ThetaSpec::Named(s) if s == "golden" => cf_elements(ExactTag::Golden, 40),
            ThetaSpec::Named(s) if s == "sqrt2" => cf_elements(ExactTag::Sqrt2, 40),
            ThetaSpec::Named(s) => Err(Error::Config(format!("unknown theta '{s}'"))),
            ThetaSpec::Cf { cf } => ContinuedFraction::from_elements(cf.clone()),
            ThetaSpec::Rational { rational: (p, q) } => {
                if *q <= 0 {
                    return Err(Error::Config(format!("rational theta {p}/{q} needs q > 0")));
                }
                cf_elements(ExactTag::Rational { p: *p, q: *q }, 64)
            }
        }
    }

    pub fn value(&self) -> Result<f64> {
        match self {
            ThetaSpec::Named(s) if s == "golden" => Ok(ExactTag::Golden.value()),
            ThetaSpec::Named(s) if s == "sqrt2" => Ok(ExactTag::Sqrt2.value()),
            ThetaSpec::Rational { rational: (p, q) } if *q > 0 => Ok(*p as f64 / *q as f64),
            _ => {
                let cf = self.expansion()?;
                Ok(convergents(&cf, cf.len())?.last().map_or(0.0, |a| a.value()))
            }
        }
    }

    /// All convergents available from the expansion.
    pub fn convergents(&self) -> Result<Vec<RationalApproximant>> {
        if matches!(self, ThetaSpec::Named(s) if s == "golden") {
            return golden_convergents(40);
        }
        let cf = self.expansion()?;
        convergents(&cf, cf.len())
    }

    /// The convergents with the listed denominators, in order.
    pub fn approximants(&self, denominators: &[i64]) -> Result<Vec<RationalApproximant>> {
        let all = self.convergents()?;
        denominators
            .iter()
            .map(|&q| {
                all.iter()
                    .rev()
                    .find(|a| a.q == q)
                    .copied()
                    .ok_or_else(|| Error::Config(format!("{q} is not a convergent denominator of theta")))
            })
            .collect()
    }

    pub fn rational(&self) -> Option<(i64, i64)> {
        match self {
            ThetaSpec::Rational { rational } => Some(*rational),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSpec {
    pub alphabet: Vec<char>,
    pub images: BTreeMap<char, String>,
}

impl RuleSpec {
    pub fn rule(&self) -> Result<SubstitutionRule> {
        SubstitutionRule::new(self.alphabet.clone(), self.images.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ProblemKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflected: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tiles: Option<BTreeMap<char, Tile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    pub h: Option<f64>,
    pub points_per_unit: Option<usize>,
    pub alpha_count: Option<usize>,
    pub n_bands: Option<usize>,
    pub n_pw: Option<usize>,
    pub half_width: Option<f64>,
    pub window: Option<[f64; 2]>,
    pub beta: Option<f64>,
    pub levels: Option<Vec<i64>>,
    pub generations: Option<Vec<usize>>,
    pub resolution: Option<usize>,
    pub epsilon: Option<f64>,
    pub n_max: Option<usize>,
    pub boundary: Option<Boundary>,
    pub tol: Option<f64>,
    pub margin: Option<f64>,
    pub min_gap_width: Option<f64>,
    pub modes: Option<Vec<f64>>,
}

/// The file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemSpec>,
    #[serde(default)]
    pub discretization: Discretization,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Preset {
    pub fn problem(self) -> ProblemSpec {
        let golden = Some(ThetaSpec::Named("golden".into()));
        let smooth = |kind, field: &str, reflected| ProblemSpec {
            kind: Some(kind),
            field: Some(FieldSpec::Named(field.into())),
            theta: golden.clone(),
            offset: Some([0.0, 0.0]),
            reflected: Some(reflected),
            tiles: None,
            rule: None,
        };
        match self {
            Preset::Sin2dSchrodinger => smooth(ProblemKind::Schrodinger, "sin2d", false),
            Preset::Sin2dGeneralized => smooth(ProblemKind::Generalized, "sin2d+3", false),
            Preset::ReflectedSchrodinger => smooth(ProblemKind::Schrodinger, "sin2d", true),
            Preset::ReflectedGeneralized => smooth(ProblemKind::Generalized, "sin2d+3", true),
            Preset::GoldenLaminate => ProblemSpec {
                kind: Some(ProblemKind::WaveSpeed),
                tiles: Some(crate::potentials::Laminate::default_tiles()),
                rule: Some(RuleSpec {
                    alphabet: vec!['a', 'b'],
                    images: BTreeMap::from([('a', "ab".to_string()), ('b', "a".to_string())]),
                }),
                ..ProblemSpec::default()
            },
        }
    }
}

fn merge_problem(base: ProblemSpec, top: ProblemSpec) -> ProblemSpec {
    ProblemSpec {
        kind: top.kind.or(base.kind),
        field: top.field.or(base.field),
        theta: top.theta.or(base.theta),
        offset: top.offset.or(base.offset),
        reflected: top.reflected.or(base.reflected),
        tiles: top.tiles.or(base.tiles),
        rule: top.rule.or(base.rule),
    }
}

const TOP_KEYS: [&str; 5] = ["command", "preset", "problem", "discretization", "output"];
const PROBLEM_KEYS: [&str; 7] = ["kind", "field", "theta", "offset", "reflected", "tiles", "rule"];

/// Applies `key=value`. Keys are dotted paths; a bare problem key goes under
/// `problem`, any other bare key other than a top-level one under
/// `discretization`. Values are parsed as JSON, falling back to a string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{assignment}' is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("override '{assignment}' has an empty key")));
    }
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut path: Vec<&str> = key.split('.').collect();
    if path.len() == 1 && !TOP_KEYS.contains(&path[0]) {
        let section = if PROBLEM_KEYS.contains(&path[0]) {
            "problem"
        } else {
            "discretization"
        };
        path.insert(0, section);
    }
    let mut node = doc;
    for (k, part) in path.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override '{key}': '{part}' is not inside an object")))?;
        if k + 1 == path.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Parses a config document with overrides applied first.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut doc: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    serde_json::from_value(doc).map_err(|e| Error::Config(e.to_string()))
}

/// The physical problem a run operates on.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSetup {
    Smooth {
        problem: QuasiperiodicProblem,
        theta: ThetaSpec,
        reflected: bool,
    },
    Laminate {
        tiles: BTreeMap<char, Tile>,
        rule: SubstitutionRule,
    },
}

/// Every parameter with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub h: f64,
    pub points_per_unit: usize,
    pub alpha_count: usize,
    pub n_bands: Option<usize>,
    pub n_pw: usize,
    pub half_width: f64,
    pub window: Option<Window>,
    pub beta: f64,
    pub levels: Vec<i64>,
    pub generations: Vec<usize>,
    pub resolution: usize,
    pub epsilon: f64,
    pub n_max: usize,
    pub boundary: Boundary,
    pub tol: f64,
    pub margin: f64,
    pub min_gap_width: f64,
    pub modes: Vec<f64>,
}

/// A validated run: the problem, settings, and what was defaulted.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub command: Command,
    pub preset: Option<Preset>,
    pub problem: Option<ProblemSetup>,
    pub problem_spec: ProblemSpec,
    pub settings: Settings,
    pub defaults: BTreeMap<String, Value>,
    pub output: Option<PathBuf>,
}

struct Filler {
    used: BTreeMap<String, Value>,
}

impl Filler {
    fn pick<T: Serialize>(&mut self, name: &str, given: Option<T>, default: T) -> T {
        match given {
            Some(v) => v,
            None => {
                self.used
                    .insert(name.to_string(), serde_json::to_value(&default).unwrap_or(Value::Null));
                default
            }
        }
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {x}")))
    }
}

fn at_least(name: &str, x: usize, min: usize) -> Result<()> {
    if x >= min {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be at least {min}, got {x}")))
    }
}

fn default_window(cmd: Command) -> Option<[f64; 2]> {
    match cmd {
        Command::Bands | Command::Superspace => Some([0.0, 30.0]),
        Command::Pwe => Some([9.0, 11.0]),
        Command::Convergence => Some([0.0, 20.0]),
        Command::TraceScan => Some([0.05, 6.0]),
        Command::Interface | Command::TilingInfo => None,
    }
}

fn default_levels(cmd: Command, rational: Option<(i64, i64)>) -> Vec<i64> {
    match (cmd, rational) {
        (Command::Bands, Some((_, q))) => vec![q],
        (Command::Bands, None) => vec![2, 5, 13],
        (Command::Convergence, _) => vec![2, 5, 13, 34],
        (Command::Interface | Command::Pwe | Command::Superspace, _) => vec![13, 21, 34],
        _ => Vec::new(),
    }
}

fn default_generations(cmd: Command) -> Vec<usize> {
    match cmd {
        Command::Bands => vec![3, 5, 7],
        Command::TilingInfo => (1..=9).collect(),
        Command::Interface => Vec::new(),
        _ => vec![5, 6, 7, 8, 9],
    }
}

/// Discretization keys a command reads.
pub fn relevant_keys(cmd: Command) -> &'static [&'static str] {
    match cmd {
        Command::Bands => &["points_per_unit", "alpha_count", "window", "levels", "generations"],
        Command::Superspace => &["h", "alpha_count", "window", "beta", "modes"],
        Command::Pwe => &[
            "n_pw",
            "alpha_count",
            "window",
            "beta",
            "tol",
            "levels",
            "points_per_unit",
            "margin",
            "min_gap_width",
        ],
        Command::TraceScan => &["window", "resolution", "epsilon", "n_max"],
        Command::Interface => &[
            "h",
            "half_width",
            "boundary",
            "levels",
            "points_per_unit",
            "alpha_count",
            "min_gap_width",
        ],
        Command::Convergence => &["levels", "window", "points_per_unit", "alpha_count"],
        Command::TilingInfo => &["generations"],
    }
}

impl RunConfig {
    pub fn resolve(&self) -> Result<ResolvedRun> {
        let cmd = self.command;
        let spec = match (self.preset, &self.problem) {
            (Some(p), Some(top)) => merge_problem(p.problem(), top.clone()),
            (Some(p), None) => p.problem(),
            (None, Some(top)) => top.clone(),
            (None, None) if cmd == Command::TilingInfo => ProblemSpec::default(),
            (None, None) => return Err(Error::Config("a preset or a problem block is required".into())),
        };
        let mut f = Filler { used: BTreeMap::new() };
        let problem = self.build_problem(&spec, &mut f)?;
        let d = &self.discretization;
        let (h_default, ppu_default) = match cmd {
            Command::Interface => (crate::interface::DEFAULT_H, 100),
            Command::Pwe => (crate::superspace::DEFAULT_H, 200),
            _ => (crate::superspace::DEFAULT_H, 40),
        };
        let alpha_default = match cmd {
            Command::Superspace => 8,
            Command::Pwe => 20,
            _ => 64,
        };
        let rational = match &problem {
            Some(ProblemSetup::Smooth { theta, .. }) => theta.rational(),
            _ => None,
        };
        let window = match (d.window, default_window(cmd)) {
            (Some(w), _) => Some(w),
            (None, Some(w)) => {
                f.used.insert("window".into(), serde_json::json!(w));
                Some(w)
            }
            (None, None) => None,
        };
        let window = window
            .map(|[lo, hi]| {
                Window::new(lo, hi).map_err(|_| Error::Config(format!("window [{lo}, {hi}] needs lo < hi")))
            })
            .transpose()?;
        let settings = Settings {
            h: f.pick("h", d.h, h_default),
            points_per_unit: f.pick("points_per_unit", d.points_per_unit, ppu_default),
            alpha_count: f.pick("alpha_count", d.alpha_count, alpha_default),
            n_bands: d.n_bands,
            n_pw: f.pick("n_pw", d.n_pw, crate::superspace::DEFAULT_N_PW),
            half_width: f.pick("half_width", d.half_width, crate::interface::DEFAULT_HALF_WIDTH),
            window,
            beta: f.pick("beta", d.beta, 0.0),
            levels: f.pick("levels", d.levels.clone(), default_levels(cmd, rational)),
            generations: f.pick("generations", d.generations.clone(), default_generations(cmd)),
            resolution: f.pick("resolution", d.resolution, 2000),
            epsilon: f.pick("epsilon", d.epsilon, crate::transfermap::DEFAULT_EPSILON),
            n_max: f.pick("n_max", d.n_max, 40),
            boundary: f.pick("boundary", d.boundary, Boundary::Dirichlet),
            tol: f.pick("tol", d.tol, 1e-6),
            margin: f.pick("margin", d.margin, 1e-3),
            min_gap_width: f.pick("min_gap_width", d.min_gap_width, 0.1),
            modes: f.pick("modes", d.modes.clone(), Vec::new()),
        };
        let s = &settings;
        positive("h", s.h)?;
        positive("half_width", s.half_width)?;
        positive("epsilon", s.epsilon)?;
        positive("tol", s.tol)?;
        positive("margin", s.margin)?;
        positive("min_gap_width", s.min_gap_width)?;
        at_least("points_per_unit", s.points_per_unit, 1)?;
        at_least("alpha_count", s.alpha_count, 2)?;
        at_least("n_pw", s.n_pw, 1)?;
        at_least("resolution", s.resolution, 100)?;
        at_least("n_max", s.n_max, 3)?;
        if let Some(n) = s.n_bands {
            at_least("n_bands", n, 1)?;
        }
        if !(0.0..=2.0 * std::f64::consts::PI).contains(&s.beta) {
            return Err(Error::Config(format!("beta {} must lie in [0, 2 pi]", s.beta)));
        }
        if let Some(q) = s.levels.iter().find(|&&q| q < 1) {
            return Err(Error::Config(format!("level denominator {q} must be positive")));
        }
        if let Some(ProblemSetup::Smooth { theta, .. }) = &problem {
            theta.approximants(&s.levels)?;
        }
        if s.generations.contains(&0) {
            return Err(Error::Config("generations start at 1".into()));
        }
        let keys = relevant_keys(cmd);
        let laminate = matches!(problem, Some(ProblemSetup::Laminate { .. }));
        f.used.retain(|k, _| {
            k.starts_with("problem.")
                || (keys.contains(&k.as_str())
                    && !(k == "levels" && laminate)
                    && !(k == "generations" && !laminate && cmd == Command::Bands))
        });
        Ok(ResolvedRun {
            command: cmd,
            preset: self.preset,
            problem,
            problem_spec: spec,
            settings,
            defaults: f.used,
            output: self.output.clone(),
        })
    }

    fn build_problem(&self, spec: &ProblemSpec, f: &mut Filler) -> Result<Option<ProblemSetup>> {
        let cmd = self.command;
        let laminate_cmd = matches!(cmd, Command::TraceScan | Command::TilingInfo);
        let kind = spec.kind.unwrap_or(if laminate_cmd || spec.tiles.is_some() {
            ProblemKind::WaveSpeed
        } else {
            ProblemKind::Schrodinger
        });
        if kind == ProblemKind::WaveSpeed || cmd == Command::TilingInfo {
            if spec.field.is_some() || spec.theta.is_some() || spec.reflected == Some(true) {
                if cmd == Command::TilingInfo {
                    return Ok(None);
                }
                return Err(Error::Config(
                    "laminate problems take tiles and rule, not field, theta or reflected".into(),
                ));
            }
            let tiles = f.pick(
                "problem.tiles",
                spec.tiles.clone(),
                crate::potentials::Laminate::default_tiles(),
            );
            let rule = f.pick(
                "problem.rule",
                spec.rule.clone(),
                RuleSpec {
                    alphabet: vec!['a', 'b'],
                    images: BTreeMap::from([('a', "ab".to_string()), ('b', "a".to_string())]),
                },
            );
            let rule = rule.rule()?;
            for c in rule.alphabet() {
                let t = tiles
                    .get(c)
                    .ok_or_else(|| Error::Config(format!("no tile for letter '{c}'")))?;
                if !(t.length > 0.0 && t.value > 0.0) {
                    return Err(Error::Config(format!("tile '{c}' needs positive length and value")));
                }
            }
            return Ok(Some(ProblemSetup::Laminate { tiles, rule }));
        }
        if matches!(cmd, Command::TraceScan) {
            return Err(Error::Config("trace-scan needs a laminate problem".into()));
        }
        if spec.tiles.is_some() || spec.rule.is_some() {
            return Err(Error::Config("tiles and rule only apply to laminate problems".into()));
        }
        if spec.kind.is_none() {
            f.used
                .insert("problem.kind".into(), serde_json::to_value(kind).unwrap_or(Value::Null));
        }
        let field = f.pick("problem.field", spec.field.clone(), FieldSpec::Named("sin2d".into()));
        let theta = f.pick("problem.theta", spec.theta.clone(), ThetaSpec::Named("golden".into()));
        let [y1, y2] = f.pick("problem.offset", spec.offset, [0.0, 0.0]);
        let reflected = f.pick("problem.reflected", spec.reflected, cmd == Command::Interface);
        if reflected != (cmd == Command::Interface) {
            return Err(Error::Config(if reflected {
                "reflected problems are only used by the interface command".into()
            } else {
                "the interface command needs a reflected problem".into()
            }));
        }
        let field_value = CoefficientField::new(field.surface()?, theta.value()?).with_offset(y1, y2);
        let problem = QuasiperiodicProblem::new(kind, field_value).map_err(|e| Error::Config(e.to_string()))?;
        Ok(Some(ProblemSetup::Smooth {
            problem,
            theta,
            reflected,
        }))
    }
}
