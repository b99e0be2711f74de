//! Run configuration read from a small TOML file.
//!
//! ```toml
//! [grid]
//! half_width = 12.0
//! points = 48
//!
//! [problem]
//! instance = "const_K_gaussian_f"   # or k = "...", f = "..." (see below)
//! q = 1.5
//! lambda_fraction = 0.5             # or lambda = 0.677
//!
//! [solver]
//! grad_tol = 1e-6
//! seed = 0
//! saddle_seed_epsilon = 1.0
//! ball_seed = "f"                   # or "bubble"
//!
//! [output]
//! dir = "out"
//! ```
//!
//! A custom problem replaces `instance` by `k = "constant" | "lorentzian"`
//! with `k_value` or `k_amplitude`, `k_width`, `k_center`, and
//! `f = "gaussian" | "compact"` with `f_amplitude`, `f_width` or `f_radius`,
//! and `f_center`.

use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::energy::compute_constants;
use crate::error::{Error, Result};
use crate::field::Grid3;
use crate::models::{builtin_specs, PotentialSpec, ProblemInstance, WeightSpec};

/// Where the pair `(K, f)` comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Builtin(String),
    Custom { k: PotentialSpec, f: WeightSpec },
}

/// `λ` either directly or as a fraction of `λ₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSpec {
    Absolute(f64),
    Fraction(f64),
}

impl LambdaSpec {
    /// Same kind, new value.
    pub fn with_value(self, v: f64) -> LambdaSpec {
        match self {
            LambdaSpec::Absolute(_) => LambdaSpec::Absolute(v),
            LambdaSpec::Fraction(_) => LambdaSpec::Fraction(v),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            LambdaSpec::Absolute(v) | LambdaSpec::Fraction(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub grad_tol: f64,
    /// String relaxation sweeps.
    pub string_iters: usize,
    pub path_nodes: usize,
    pub refine_steps: usize,
    pub ball_iters: usize,
    /// Sphere samples in the geometry check.
    pub geometry_samples: usize,
    /// Random fields in the Poisson identity checks.
    pub verify_samples: usize,
    pub bubble_scales: Vec<f64>,
    pub bubble_half_width: f64,
    /// Defaults to four times the main grid's points.
    pub bubble_points: Option<usize>,
    pub seed: u64,
    /// Scale of the cutoff bubble that seeds the mountain-pass path.
    pub saddle_seed_epsilon: f64,
    pub ball_seed: BallSeed,
}

/// Starting direction of the ball descent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallSeed {
    /// The profile of `f`.
    Weight,
    /// The cutoff bubble with `ε = 1` at the maximum point of `K`.
    Bubble,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            grad_tol: 1e-6,
            string_iters: 300,
            path_nodes: 10,
            refine_steps: 30,
            ball_iters: 5000,
            geometry_samples: 64,
            verify_samples: 8,
            bubble_scales: vec![0.4, 0.2, 0.1],
            bubble_half_width: 2.4,
            bubble_points: None,
            seed: 0,
            saddle_seed_epsilon: 1.0,
            ball_seed: BallSeed::Weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSource,
    pub half_width: f64,
    pub points: usize,
    pub q: f64,
    pub lambda: LambdaSpec,
    pub solver: SolverSettings,
    pub out_dir: PathBuf,
    pub strict: bool,
    /// Run solvers even when `λ >= λ₀`; results are then flagged unguaranteed.
    pub force: bool,
}

impl Default for RunConfig {
    /// The canonical desk-scale run.
    fn default() -> Self {
        RunConfig {
            problem: ProblemSource::Builtin("const_K_gaussian_f".into()),
            half_width: 12.0,
            points: 48,
            q: 1.5,
            lambda: LambdaSpec::Fraction(0.5),
            solver: SolverSettings::default(),
            out_dir: PathBuf::from("out"),
            strict: false,
            force: false,
        }
    }
}

const SECTIONS: [&str; 4] = ["grid", "problem", "solver", "output"];

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| {
            let at = e.span().map(|s| format!("line {}: ", line_at(text, s.start))).unwrap_or_default();
            Error::Config(format!("{at}{}", e.message()))
        })?;
        let doc = Doc { text, table: &table };
        for (name, value) in &table {
            if !SECTIONS.contains(&name.as_str()) {
                return Err(doc.err(name, None, format!("unknown section [{name}]")));
            }
            if !value.is_table() {
                return Err(doc.err(name, None, format!("`{name}` must be a section")));
            }
        }

        let mut cfg = RunConfig::default();
        let defaults = SolverSettings::default();

        let grid = doc.section("grid", &["half_width", "points"])?;
        cfg.half_width = grid.float("half_width")?.unwrap_or(cfg.half_width);
        cfg.points = grid.count("points")?.unwrap_or(cfg.points);

        let problem = doc.section(
            "problem",
            &[
                "instance",
                "q",
                "lambda",
                "lambda_fraction",
                "k",
                "k_value",
                "k_amplitude",
                "k_width",
                "k_center",
                "f",
                "f_amplitude",
                "f_width",
                "f_radius",
                "f_center",
            ],
        )?;
        cfg.q = problem.float("q")?.unwrap_or(cfg.q);
        cfg.lambda = match (problem.float("lambda")?, problem.float("lambda_fraction")?) {
            (Some(_), Some(_)) => {
                return Err(problem.err("lambda_fraction", "give either `lambda` or `lambda_fraction`, not both"))
            }
            (Some(v), None) => LambdaSpec::Absolute(v),
            (None, Some(v)) => LambdaSpec::Fraction(v),
            (None, None) => cfg.lambda,
        };
        if !(cfg.lambda.value() > 0.0) {
            let key = match cfg.lambda {
                LambdaSpec::Absolute(_) => "lambda",
                LambdaSpec::Fraction(_) => "lambda_fraction",
            };
            return Err(problem.err(key, "must be positive"));
        }
        cfg.problem = problem_source(&problem)?;

        let solver = doc.section(
            "solver",
            &[
                "grad_tol",
                "string_iters",
                "path_nodes",
                "refine_steps",
                "ball_iters",
                "geometry_samples",
                "verify_samples",
                "bubble_scales",
                "bubble_half_width",
                "bubble_points",
                "seed",
                "saddle_seed_epsilon",
                "ball_seed",
            ],
        )?;
        let s = &mut cfg.solver;
        s.grad_tol = solver.float("grad_tol")?.unwrap_or(defaults.grad_tol);
        s.string_iters = solver.count("string_iters")?.unwrap_or(defaults.string_iters);
        s.path_nodes = solver.count("path_nodes")?.unwrap_or(defaults.path_nodes);
        s.refine_steps = solver.count("refine_steps")?.unwrap_or(defaults.refine_steps);
        s.ball_iters = solver.count("ball_iters")?.unwrap_or(defaults.ball_iters);
        s.geometry_samples = solver.count("geometry_samples")?.unwrap_or(defaults.geometry_samples);
        s.verify_samples = solver.count("verify_samples")?.unwrap_or(defaults.verify_samples);
        s.bubble_scales = solver.floats("bubble_scales")?.unwrap_or(defaults.bubble_scales);
        s.bubble_half_width = solver.float("bubble_half_width")?.unwrap_or(defaults.bubble_half_width);
        s.bubble_points = solver.count("bubble_points")?;
        s.seed = solver.count("seed")?.map(|v| v as u64).unwrap_or(defaults.seed);
        s.saddle_seed_epsilon = solver.float("saddle_seed_epsilon")?.unwrap_or(defaults.saddle_seed_epsilon);
        s.ball_seed = match solver.string("ball_seed")?.as_deref() {
            None => defaults.ball_seed,
            Some("f") => BallSeed::Weight,
            Some("bubble") => BallSeed::Bubble,
            Some(other) => return Err(solver.err("ball_seed", &format!("unknown seed `{other}` (f, bubble)"))),
        };
        if !(s.grad_tol > 0.0) {
            return Err(solver.err("grad_tol", "must be positive"));
        }
        if !(s.saddle_seed_epsilon > 0.0) {
            return Err(solver.err("saddle_seed_epsilon", "must be positive"));
        }

        let output = doc.section("output", &["dir", "strict"])?;
        if let Some(dir) = output.string("dir")? {
            cfg.out_dir = PathBuf::from(dir);
        }
        cfg.strict = output.boolean("strict")?.unwrap_or(false);

        if let Err(e) = cfg.grid() {
            return Err(grid.err("points", &e.to_string()));
        }
        if !cfg.points.is_power_of_two() {
            log::warn!("{} points per axis is not a power of two; FFTs will be slower", cfg.points);
        }
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<Grid3> {
        Grid3::new(self.half_width, self.points)
    }

    /// Grid for the bubble checks, fine enough to resolve the smallest scale.
    pub fn bubble_grid(&self) -> Result<Grid3> {
        Grid3::new(self.solver.bubble_half_width, self.solver.bubble_points.unwrap_or(4 * self.points))
    }

    /// `(K, f)` specs for this run.
    pub fn specs(&self) -> Result<(PotentialSpec, WeightSpec)> {
        match &self.problem {
            ProblemSource::Builtin(name) => builtin_specs(name),
            ProblemSource::Custom { k, f } => Ok((k.clone(), f.clone())),
        }
    }

    pub fn instance_name(&self) -> String {
        match &self.problem {
            ProblemSource::Builtin(name) => name.clone(),
            ProblemSource::Custom { .. } => "custom".into(),
        }
    }

    /// The instance on `grid` with `λ` resolved against that grid's `λ₀`.
    pub fn instance_on(&self, grid: Grid3) -> Result<ProblemInstance> {
        let (k, f) = self.specs()?;
        let base = ProblemInstance::new(self.instance_name(), k.realize(grid)?, f.realize(grid, self.q)?, 1.0)?;
        let lambda = match self.lambda {
            LambdaSpec::Absolute(v) => v,
            LambdaSpec::Fraction(v) => v * compute_constants(&base)?.lambda0,
        };
        base.with_lambda(lambda)
    }

    pub fn instance(&self) -> Result<ProblemInstance> {
        self.instance_on(self.grid()?)
    }
}

fn problem_source(problem: &Section<'_>) -> Result<ProblemSource> {
    let custom_keys =
        ["k", "k_value", "k_amplitude", "k_width", "k_center", "f", "f_amplitude", "f_width", "f_radius", "f_center"];
    if let Some(name) = problem.string("instance")? {
        if let Some(key) = custom_keys.iter().find(|k| problem.has(k)) {
            return Err(problem.err(key, "custom K/f keys cannot be combined with `instance`"));
        }
        builtin_specs(&name).map_err(|e| problem.err("instance", &e.to_string()))?;
        return Ok(ProblemSource::Builtin(name));
    }
    let Some(kind) = problem.string("k")? else {
        if problem.has("f") {
            return Err(problem.err("f", "custom problem is missing the `k` spec"));
        }
        return Ok(ProblemSource::Builtin("const_K_gaussian_f".into()));
    };
    let k = match kind.as_str() {
        "constant" => PotentialSpec::Constant { value: problem.float("k_value")?.unwrap_or(1.0) },
        "lorentzian" => PotentialSpec::Lorentzian {
            amplitude: problem.float("k_amplitude")?.unwrap_or(1.0),
            width: problem.float("k_width")?.unwrap_or(1.0),
            center: problem.point("k_center")?.unwrap_or([0.0; 3]),
        },
        other => return Err(problem.err("k", &format!("unknown K shape `{other}` (constant, lorentzian)"))),
    };
    let Some(kind) = problem.string("f")? else {
        return Err(problem.err("k", "custom problem is missing the `f` spec"));
    };
    let amplitude = problem.float("f_amplitude")?.unwrap_or(1.0);
    let center = problem.point("f_center")?.unwrap_or([0.0; 3]);
    let f = match kind.as_str() {
        "gaussian" => WeightSpec::Gaussian { amplitude, width: problem.float("f_width")?.unwrap_or(1.0), center },
        "compact" => WeightSpec::CompactBump { amplitude, radius: problem.float("f_radius")?.unwrap_or(1.0), center },
        other => return Err(problem.err("f", &format!("unknown f shape `{other}` (gaussian, compact)"))),
    };
    Ok(ProblemSource::Custom { k, f })
}

/// 1-based line of a byte offset.
fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

struct Doc<'a> {
    text: &'a str,
    table: &'a Table,
}

impl<'a> Doc<'a> {
    /// Line of `key` inside `[section]`, or of the section header itself.
    fn line_of(&self, section: &str, key: Option<&str>) -> Option<usize> {
        let mut in_section = false;
        for (i, raw) in self.text.lines().enumerate() {
            let line = raw.trim();
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.trim_end_matches(']').trim();
                in_section = name == section;
                if in_section && key.is_none() {
                    return Some(i + 1);
                }
                continue;
            }
            if in_section {
                if let Some(key) = key {
                    let lhs = line.split('=').next().unwrap_or("").trim();
                    if lhs == key {
                        return Some(i + 1);
                    }
                }
            }
        }
        None
    }

    fn err(&self, section: &str, key: Option<&str>, msg: String) -> Error {
        match self.line_of(section, key) {
            Some(n) => Error::Config(format!("line {n}: {msg}")),
            None => Error::Config(msg),
        }
    }

    fn section(&self, name: &'a str, keys: &[&str]) -> Result<Section<'a>> {
        static EMPTY: std::sync::OnceLock<Table> = std::sync::OnceLock::new();
        let table = match self.table.get(name) {
            Some(Value::Table(t)) => t,
            _ => EMPTY.get_or_init(Table::new),
        };
        for key in table.keys() {
            if !keys.contains(&key.as_str()) {
                return Err(self.err(name, Some(key), format!("unknown key `{key}` in [{name}]")));
            }
        }
        Ok(Section { doc: Doc { text: self.text, table: self.table }, name, table })
    }
}

struct Section<'a> {
    doc: Doc<'a>,
    name: &'a str,
    table: &'a Table,
}

impl Section<'_> {
    fn err(&self, key: &str, msg: &str) -> Error {
        self.doc.err(self.name, Some(key), format!("[{}] {key}: {msg}", self.name))
    }

    fn has(&self, key: &str) -> bool {
        self.table.contains_key(key)
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Float(v)) => Ok(Some(*v)),
            Some(Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(_) => Err(self.err(key, "expected a number")),
        }
    }

    fn count(&self, key: &str) -> Result<Option<usize>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Integer(v)) if *v >= 0 => Ok(Some(*v as usize)),
            Some(_) => Err(self.err(key, "expected a nonnegative integer")),
        }
    }

    fn string(&self, key: &str) -> Result<Option<String>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(self.err(key, "expected a string")),
        }
    }

    fn boolean(&self, key: &str) -> Result<Option<bool>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(_) => Err(self.err(key, "expected true or false")),
        }
    }

    fn floats(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(value) = self.table.get(key) else {
            return Ok(None);
        };
        let Value::Array(items) = value else {
            return Err(self.err(key, "expected an array of numbers"));
        };
        items
            .iter()
            .map(|v| match v {
                Value::Float(x) => Ok(*x),
                Value::Integer(x) => Ok(*x as f64),
                _ => Err(self.err(key, "expected an array of numbers")),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn point(&self, key: &str) -> Result<Option<[f64; 3]>> {
        match self.floats(key)? {
            None => Ok(None),
            Some(v) if v.len() == 3 => Ok(Some([v[0], v[1], v[2]])),
            Some(_) => Err(self.err(key, "expected three coordinates")),
        }
    }
}
