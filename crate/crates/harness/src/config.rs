//! Run configuration: a flat `key = value` file with repeated `[solver]`
//! blocks, and the two built-in protocol presets.

use std::fmt;
use std::path::{Path, PathBuf};

use agentopt::scheduler::{Budget, Priority};
use agentopt::solvers::{SolverConfig, SolverKind};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn at(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        line,
        message: message.into(),
    }
}

/// Population size, either absolute or a multiple of `np`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SizeSpec {
    Absolute(usize),
    TimesNp(f64),
}

impl SizeSpec {
    pub fn resolve(self, np: usize) -> usize {
        match self {
            SizeSpec::Absolute(n) => n,
            SizeSpec::TimesNp(f) => ((f * np as f64).round() as usize).max(1),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some(f) = s.strip_suffix("np") {
            let f = f.trim().trim_end_matches('*').trim();
            if f.is_empty() {
                return Some(SizeSpec::TimesNp(1.0));
            }
            return f.parse().ok().filter(|v: &f64| *v > 0.0).map(SizeSpec::TimesNp);
        }
        if let Some(d) = s.strip_prefix("np/") {
            return d.trim().parse().ok().filter(|v: &f64| *v > 0.0).map(|v| SizeSpec::TimesNp(1.0 / v));
        }
        s.parse().ok().map(SizeSpec::Absolute)
    }
}

impl fmt::Display for SizeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizeSpec::Absolute(n) => write!(f, "{n}"),
            SizeSpec::TimesNp(x) => write!(f, "{x}np"),
        }
    }
}

/// One solver instance before `np` is known.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverSpec {
    pub kind: SolverKind,
    pub size: SizeSpec,
    pub omega: f64,
    pub priority: u8,
    pub label: Option<String>,
}

impl SolverSpec {
    pub fn new(kind: SolverKind, size: SizeSpec) -> Self {
        SolverSpec {
            kind,
            size,
            omega: 0.5,
            priority: 1,
            label: None,
        }
    }

    fn omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    fn labelled(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    /// Concrete solver configuration; `seed` is filled in per run.
    pub fn build(&self, np: usize) -> SolverConfig {
        let mut size = self.size.resolve(np);
        if self.kind == SolverKind::Ga {
            size = size.max(2);
        }
        let label = self.label.clone().unwrap_or_else(|| match self.kind {
            SolverKind::Sd | SolverKind::Cs => format!("{}", self.kind),
            _ => format!("{}-{}", self.kind, size),
        });
        SolverConfig::new(self.kind, size)
            .with_omega(self.omega)
            .with_priority(Priority::new(self.priority as i64).unwrap_or(Priority::LOWEST))
            .with_label(label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Preset {
    Hen,
    Mutas,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::Hen, Preset::Mutas];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Hen => "hen-protocol",
            Preset::Mutas => "mutas-protocol",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.strip_suffix("-protocol").unwrap_or(s);
        Preset::ALL
            .into_iter()
            .find(|p| p.name().strip_suffix("-protocol") == Some(s))
    }

    pub fn budget(self) -> Budget {
        match self {
            Preset::Hen => Budget::Messages(60_000),
            Preset::Mutas => Budget::Evaluations(1000),
        }
    }

    /// Fixed `np`, if the protocol has one; otherwise it is the number of
    /// design variables.
    pub fn np(self) -> Option<usize> {
        match self {
            Preset::Hen => None,
            Preset::Mutas => Some(20),
        }
    }

    pub fn roster(self) -> Vec<SolverSpec> {
        use SizeSpec::TimesNp;
        use SolverKind::*;
        match self {
            Preset::Hen => vec![
                SolverSpec::new(Ga, TimesNp(1.0)).labelled("small GA"),
                SolverSpec::new(Ga, TimesNp(5.0)).labelled("large GA"),
                SolverSpec::new(Ppa, TimesNp(0.5)).labelled("small PPA"),
                SolverSpec::new(Ppa, TimesNp(2.0)).labelled("large PPA"),
                SolverSpec::new(Sd, TimesNp(1.0)).labelled("SD"),
                SolverSpec::new(Cs, TimesNp(1.0)).labelled("CS"),
            ],
            Preset::Mutas => {
                let mut r = vec![
                    SolverSpec::new(Ga, TimesNp(2.0)).labelled("small GA"),
                    SolverSpec::new(Ga, TimesNp(5.0)).labelled("big GA"),
                    SolverSpec::new(Ppa, TimesNp(0.5)).labelled("small PPA"),
                    SolverSpec::new(Ppa, TimesNp(2.0)).labelled("big PPA"),
                    SolverSpec::new(Pso, TimesNp(1.0)).labelled("small PSO"),
                    SolverSpec::new(Pso, TimesNp(5.0)).labelled("big PSO"),
                ];
                for kind in [Sd, Cs] {
                    for w in [0.2, 0.4, 0.6, 0.8] {
                        r.push(
                            SolverSpec::new(kind, TimesNp(1.0))
                                .omega(w)
                                .labelled(&format!("{kind} w={w}")),
                        );
                    }
                }
                r
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub problem: String,
    pub preset: Option<Preset>,
    pub n_evaluators: usize,
    pub budget: Budget,
    pub sharing: bool,
    pub solvers: Vec<SolverSpec>,
    /// Base population size; `None` means the number of design variables.
    pub np: Option<usize>,
    pub seed: u64,
    pub repetitions: usize,
    pub output_dir: PathBuf,
    pub deterministic: bool,
}

impl RunConfig {
    pub fn new(problem: impl Into<String>) -> Self {
        RunConfig {
            problem: problem.into(),
            preset: None,
            n_evaluators: 2,
            budget: Budget::Messages(60_000),
            sharing: true,
            solvers: Preset::Hen.roster(),
            np: None,
            seed: 1,
            repetitions: 10,
            output_dir: PathBuf::from("out"),
            deterministic: false,
        }
    }

    pub fn from_preset(preset: Preset, problem: impl Into<String>) -> Self {
        RunConfig {
            preset: Some(preset),
            budget: preset.budget(),
            solvers: preset.roster(),
            np: preset.np(),
            ..RunConfig::new(problem)
        }
    }

    /// `np` for a problem with `n_vars` design variables.
    pub fn resolve_np(&self, n_vars: usize) -> usize {
        self.np.unwrap_or(n_vars).max(1)
    }

    pub fn solver_configs(&self, n_vars: usize) -> Vec<SolverConfig> {
        let np = self.resolve_np(n_vars);
        self.solvers.iter().map(|s| s.build(np)).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.problem.trim().is_empty() {
            return Err(ConfigError::Invalid("missing required key `problem`".into()));
        }
        if self.n_evaluators == 0 {
            return Err(ConfigError::Invalid("n_evaluators must be at least 1".into()));
        }
        if self.solvers.is_empty() {
            return Err(ConfigError::Invalid("at least one solver is required".into()));
        }
        if self.repetitions == 0 {
            return Err(ConfigError::Invalid("repetitions must be at least 1".into()));
        }
        Ok(())
    }
}

fn parse_bool(line: usize, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(at(line, format!("expected a boolean, got `{v}`"))),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse()
        .map_err(|_| at(line, format!("invalid value `{v}` for `{key}`")))
}

#[derive(Default)]
struct Pending {
    line: usize,
    kind: Option<SolverKind>,
    size: Option<SizeSpec>,
    omega: Option<f64>,
    priority: Option<u8>,
    label: Option<String>,
}

impl Pending {
    fn finish(self) -> Result<SolverSpec, ConfigError> {
        let kind = self
            .kind
            .ok_or_else(|| at(self.line, "[solver] block without `kind`"))?;
        let mut s = SolverSpec::new(kind, self.size.unwrap_or(SizeSpec::TimesNp(1.0)));
        if let Some(w) = self.omega {
            s.omega = w;
        }
        if let Some(p) = self.priority {
            s.priority = p;
        }
        s.label = self.label;
        Ok(s)
    }
}

/// Parses configuration text. Keys may appear in any order; a `preset` is
/// applied first and explicit keys override it. Any `[solver]` block
/// replaces the preset roster.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut top: Vec<(usize, String, String)> = Vec::new();
    let mut blocks: Vec<Pending> = Vec::new();
    let mut in_solver = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            if content != "[solver]" {
                return Err(at(line, format!("unknown section `{content}`")));
            }
            blocks.push(Pending {
                line,
                ..Pending::default()
            });
            in_solver = true;
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| at(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if in_solver {
            let b = blocks.last_mut().expect("inside a block");
            match key {
                "kind" => {
                    b.kind = Some(
                        SolverKind::parse(value)
                            .ok_or_else(|| at(line, format!("unknown solver kind `{value}`")))?,
                    )
                }
                "size" => {
                    b.size = Some(
                        SizeSpec::parse(value)
                            .ok_or_else(|| at(line, format!("invalid size `{value}`")))?,
                    )
                }
                "omega" | "ω" => {
                    let w: f64 = parse_num(line, key, value)?;
                    if !(0.0..=1.0).contains(&w) {
                        return Err(at(line, format!("omega {w} outside [0, 1]")));
                    }
                    b.omega = Some(w);
                }
                "priority" => {
                    let p: i64 = parse_num(line, key, value)?;
                    Priority::new(p).map_err(|e| at(line, e.to_string()))?;
                    b.priority = Some(p as u8);
                }
                "label" => b.label = Some(value.to_string()),
                _ => return Err(at(line, format!("unknown solver key `{key}`"))),
            }
        } else {
            top.push((line, key.to_string(), value.to_string()));
        }
    }

    let preset = match top.iter().find(|(_, k, _)| k == "preset") {
        Some((line, _, v)) => Some(
            Preset::parse(v).ok_or_else(|| at(*line, format!("unknown preset `{v}`")))?,
        ),
        None => None,
    };
    let mut cfg = match preset {
        Some(p) => RunConfig::from_preset(p, ""),
        None => RunConfig::new(""),
    };
    let mut budget_line = None;
    for (line, key, value) in &top {
        let (line, v) = (*line, value.as_str());
        match key.as_str() {
            "preset" => {}
            "problem" => cfg.problem = v.to_string(),
            "n_evaluators" => {
                cfg.n_evaluators = parse_num(line, key, v)?;
                if cfg.n_evaluators == 0 {
                    return Err(at(line, "n_evaluators must be at least 1"));
                }
            }
            "budget.messages" | "budget.evaluations" => {
                if let Some(prev) = budget_line {
                    return Err(at(line, format!("budget already set on line {prev}")));
                }
                budget_line = Some(line);
                let n: u64 = parse_num(line, key, v)?;
                cfg.budget = if key == "budget.messages" {
                    Budget::Messages(n)
                } else {
                    Budget::Evaluations(n)
                };
            }
            "sharing" => cfg.sharing = parse_bool(line, v)?,
            "deterministic" => cfg.deterministic = parse_bool(line, v)?,
            "np" => {
                let np: usize = parse_num(line, key, v)?;
                if np == 0 {
                    return Err(at(line, "np must be at least 1"));
                }
                cfg.np = Some(np);
            }
            "seed" => cfg.seed = parse_num(line, key, v)?,
            "repetitions" => {
                cfg.repetitions = parse_num(line, key, v)?;
                if cfg.repetitions == 0 {
                    return Err(at(line, "repetitions must be at least 1"));
                }
            }
            "output_dir" => cfg.output_dir = PathBuf::from(v),
            _ => return Err(at(line, format!("unknown key `{key}`"))),
        }
    }
    if !blocks.is_empty() {
        cfg.solvers = blocks
            .into_iter()
            .map(Pending::finish)
            .collect::<Result<_, _>>()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}

/// splitmix64 finalizer folded over the parts.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut h = master ^ 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        h = h.wrapping_add(p.wrapping_mul(0xbf58_476d_1ce4_e5b9)).wrapping_add(0x9e37_79b9_7f4a_7c15);
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    h
}

/// Seed of one repetition's initial population; shared by both modes.
pub fn population_seed(master: u64, rep: usize) -> u64 {
    derive_seed(master, &[rep as u64])
}

/// Seed of one solver's private stream.
pub fn solver_seed(master: u64, rep: usize, sharing: bool, solver: usize) -> u64 {
    derive_seed(master, &[rep as u64, sharing as u64 + 1, solver as u64 + 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hen_preset_roster() {
        let cfg = parse_config("preset = hen-protocol\nproblem = rastrigin-10\n").unwrap();
        assert_eq!(cfg.budget, Budget::Messages(60_000));
        let solvers = cfg.solver_configs(10);
        let roster: Vec<(SolverKind, usize)> = solvers.iter().map(|s| (s.kind, s.size)).collect();
        use SolverKind::*;
        assert_eq!(
            roster,
            vec![(Ga, 10), (Ga, 50), (Ppa, 5), (Ppa, 20), (Sd, 10), (Cs, 10)]
        );
    }

    #[test]
    fn mutas_preset_roster() {
        let cfg = parse_config("preset = mutas-protocol\nproblem = biobj-quadratic-5").unwrap();
        assert_eq!(cfg.budget, Budget::Evaluations(1000));
        let s = cfg.solver_configs(5);
        assert_eq!(s.len(), 14);
        let sizes: Vec<usize> = s[..6].iter().map(|c| c.size).collect();
        assert_eq!(sizes, vec![40, 100, 10, 40, 20, 100]);
        let omegas: Vec<f64> = s[6..].iter().map(|c| c.omega).collect();
        assert_eq!(omegas, vec![0.2, 0.4, 0.6, 0.8, 0.2, 0.4, 0.6, 0.8]);
    }

    #[test]
    fn missing_problem_is_an_error() {
        let err = parse_config("preset = hen-protocol\n").unwrap_err();
        assert!(err.to_string().contains("problem"));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_config("problem = sphere-2\n\nbogus = 1\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::Parse {
                line: 3,
                message: "unknown key `bogus`".into()
            }
        );
        let err = parse_config("problem = sphere-2\n[solver]\nkind = GA\npriority = 11\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 4, .. }), "{err}");
        let err = parse_config("problem = sphere-2\nn_evaluators = 0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }));
        let err = parse_config("problem = sphere-2\n[solver]\nsize = 4\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }));
    }

    #[test]
    fn solver_blocks_replace_roster() {
        let text = "
            problem = sphere-3   # three variables
            budget.evaluations = 500
            deterministic = true
            n_evaluators = 1
            np = 4

            [solver]
            kind = ga
            size = 2.5np
            priority = 3

            [solver]
            kind = SD
            omega = 0.25
            label = descent
        ";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.budget, Budget::Evaluations(500));
        assert!(cfg.deterministic);
        let s = cfg.solver_configs(3);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].size, 10);
        assert_eq!(s[0].priority.level(), 3);
        assert_eq!(s[1].label, "descent");
        assert_eq!(s[1].omega, 0.25);
    }

    #[test]
    fn size_spec_forms() {
        assert_eq!(SizeSpec::parse("12"), Some(SizeSpec::Absolute(12)));
        assert_eq!(SizeSpec::parse("np"), Some(SizeSpec::TimesNp(1.0)));
        assert_eq!(SizeSpec::parse("5np"), Some(SizeSpec::TimesNp(5.0)));
        assert_eq!(SizeSpec::parse("np/2"), Some(SizeSpec::TimesNp(0.5)));
        assert_eq!(SizeSpec::parse("x"), None);
        assert_eq!(SizeSpec::TimesNp(0.5).resolve(3), 2);
        assert_eq!(SizeSpec::TimesNp(0.5).resolve(1), 1);
    }

    #[test]
    fn child_seeds_are_distinct_and_stable() {
        let seeds: Vec<u64> = (0..10).map(|r| population_seed(42, r)).collect();
        let mut uniq = seeds.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), 10);
        assert_eq!(seeds, (0..10).map(|r| population_seed(42, r)).collect::<Vec<_>>());
        assert_ne!(solver_seed(42, 0, true, 0), solver_seed(42, 0, false, 0));
        assert_ne!(population_seed(1, 0), population_seed(2, 0));
    }
}
