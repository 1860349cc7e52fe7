//! Option resolution: command-line flags over a flat `key = value` config
//! file over per-command defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Raw flags shared by every subcommand; `None` means "not given".
#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Config file with `key = value` lines; repeat a key to build a list.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// ε grid `a:b:n`, or `a:b:n:log` for spacing logarithmic in |ε−1|.
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<String>,
    /// Comma-separated system sizes.
    #[arg(long = "L")]
    pub sizes: Option<String>,
    /// Linear perturbation: a constant, or `inv-sqrt-L` for λ = 1/√L.
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub n_max_cap: Option<usize>,
    /// Relative convergence tolerance of the two lowest levels.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// 1 runs sequentially, 0 uses every core.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Real coherent amplitude of the initial state.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub sample_interval: Option<f64>,
    /// Integrate the deterministic flow instead of the stochastic ensemble.
    #[arg(long)]
    pub no_noise: bool,
    /// Size used for the infinite-size exponent sweeps.
    #[arg(long)]
    pub critical_size: Option<f64>,
    /// Collapse an exactly scaling synthetic data set.
    #[arg(long)]
    pub synthetic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Sweep,
    Perturb,
    Exponents,
    Collapse,
    PositiveP,
    SelfTest,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Sweep => "sweep",
            CommandKind::Perturb => "perturb",
            CommandKind::Exponents => "exponents",
            CommandKind::Collapse => "collapse",
            CommandKind::PositiveP => "positive-p",
            CommandKind::SelfTest => "self-test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub n: usize,
    pub log: bool,
}

impl Grid {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let bad = || CliError::Usage(format!("bad epsilon grid '{text}', expected a:b:n[:log]"));
        let parts: Vec<&str> = text.trim().split(':').collect();
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        let grid = match parts.as_slice() {
            [a] => Grid { start: num(a)?, end: num(a)?, n: 1, log: false },
            [a, b, n] | [a, b, n, _] => {
                Grid { start: num(a)?, end: num(b)?, n: n.trim().parse().map_err(|_| bad())?, log: parts.len() == 4 }
            }
            _ => return Err(bad()),
        };
        if parts.len() == 4 && parts[3].trim() != "log" {
            return Err(bad());
        }
        grid.check()?;
        Ok(grid)
    }

    fn check(&self) -> Result<(), CliError> {
        if self.n == 0 {
            return Err(CliError::Usage("epsilon grid is empty".into()));
        }
        if !self.start.is_finite() || !self.end.is_finite() || self.start < 0.0 || self.end < 0.0 {
            return Err(CliError::Usage("epsilon must be finite and non-negative".into()));
        }
        if self.log {
            let (a, b) = (self.start - 1.0, self.end - 1.0);
            if a == 0.0 || b == 0.0 || a.signum() != b.signum() {
                return Err(CliError::Usage("a log grid must stay on one side of epsilon = 1".into()));
            }
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.start];
        }
        let last = (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                let t = i as f64 / last;
                if self.log {
                    let (a, b) = ((self.start - 1.0).abs(), (self.end - 1.0).abs());
                    let d = (a.ln() + t * (b.ln() - a.ln())).exp();
                    1.0 + (self.start - 1.0).signum() * d
                } else {
                    self.start + t * (self.end - self.start)
                }
            })
            .collect()
    }

    fn canonical(&self) -> String {
        format!("{:e}:{:e}:{}{}", self.start, self.end, self.n, if self.log { ":log" } else { "" })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaRule {
    Constant(f64),
    InvSqrtSize,
}

impl LambdaRule {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let t = text.trim();
        if t == "inv-sqrt-L" {
            return Ok(LambdaRule::InvSqrtSize);
        }
        let v = t.strip_prefix("const:").unwrap_or(t);
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(LambdaRule::Constant(x)),
            _ => Err(CliError::Usage(format!("bad lambda '{text}', expected a number or inv-sqrt-L"))),
        }
    }

    pub fn at(&self, size: f64) -> f64 {
        match *self {
            LambdaRule::Constant(x) => x,
            LambdaRule::InvSqrtSize => 1.0 / size.sqrt(),
        }
    }

    fn canonical(&self) -> String {
        match self {
            LambdaRule::Constant(x) => format!("{x:e}"),
            LambdaRule::InvSqrtSize => "inv-sqrt-L".into(),
        }
    }
}

/// Fully resolved options.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub command: CommandKind,
    pub epsilon: Grid,
    pub sizes: Vec<f64>,
    pub lambda: LambdaRule,
    pub n_max_cap: usize,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub workers: usize,
    pub trajectories: usize,
    pub dt: f64,
    pub t_final: f64,
    pub alpha0: f64,
    pub sample_interval: f64,
    pub noise: bool,
    pub critical_size: f64,
    pub synthetic: bool,
}

fn decades(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect()
}

impl Settings {
    pub fn defaults(command: CommandKind) -> Self {
        let mut s = Settings {
            command,
            epsilon: Grid { start: 0.0, end: 2.0, n: 41, log: false },
            sizes: vec![1e5],
            lambda: LambdaRule::Constant(0.0),
            n_max_cap: 4096,
            tol: 1e-11,
            out: None,
            format: Format::Csv,
            seed: 0,
            workers: 1,
            trajectories: 10_000,
            dt: 1e-3,
            t_final: 2.0,
            alpha0: 0.0,
            sample_interval: 0.1,
            noise: true,
            critical_size: 1e10,
            synthetic: false,
        };
        match command {
            CommandKind::Perturb => {
                s.epsilon = Grid { start: 1.3, end: 1.3, n: 1, log: false };
                s.sizes = vec![1e6, 1e8, 1e10];
                s.lambda = LambdaRule::InvSqrtSize;
            }
            CommandKind::Exponents => s.sizes = decades(4.0, 12.0, 9),
            CommandKind::Collapse => s.sizes = vec![1e6, 1e8, 1e10],
            CommandKind::PositiveP => {
                s.epsilon = Grid { start: 0.8, end: 0.8, n: 1, log: false };
                s.sizes = vec![10.0];
            }
            CommandKind::Sweep | CommandKind::SelfTest => {}
        }
        s
    }

    pub fn resolve(command: CommandKind, opts: &Options) -> Result<Self, CliError> {
        let file = match &opts.config {
            Some(path) => read_config(path)?,
            None => BTreeMap::new(),
        };
        let mut s = Settings::defaults(command);
        let last = |key: &str| file.get(key).and_then(|v| v.last()).map(String::as_str);

        if let Some(g) = opts.epsilon.as_deref().or(last("epsilon")) {
            s.epsilon = Grid::parse(g)?;
        }
        let size_text: Option<String> = opts.sizes.clone().or_else(|| file.get("L").map(|v| v.join(",")));
        if let Some(text) = size_text {
            s.sizes = parse_sizes(&text)?;
        }
        if let Some(l) = opts.lambda.as_deref().or(last("lambda")) {
            s.lambda = LambdaRule::parse(l)?;
        }
        s.n_max_cap = pick(opts.n_max_cap, last("n-max-cap"), "n-max-cap")?.unwrap_or(s.n_max_cap);
        s.tol = pick(opts.tol, last("tol"), "tol")?.unwrap_or(s.tol);
        s.out = opts.out.clone().or_else(|| last("out").map(PathBuf::from));
        if let Some(f) = opts.format {
            s.format = f;
        } else if let Some(f) = last("format") {
            s.format = Format::from_str(f, true).map_err(|_| CliError::Usage(format!("unknown format '{f}'")))?;
        }
        s.seed = pick(opts.seed, last("seed"), "seed")?.unwrap_or(s.seed);
        s.workers = pick(opts.workers, last("workers"), "workers")?.unwrap_or(s.workers);
        s.trajectories = pick(opts.trajectories, last("trajectories"), "trajectories")?.unwrap_or(s.trajectories);
        s.dt = pick(opts.dt, last("dt"), "dt")?.unwrap_or(s.dt);
        s.t_final = pick(opts.t_final, last("t-final"), "t-final")?.unwrap_or(s.t_final);
        s.alpha0 = pick(opts.alpha0, last("alpha0"), "alpha0")?.unwrap_or(s.alpha0);
        s.sample_interval =
            pick(opts.sample_interval, last("sample-interval"), "sample-interval")?.unwrap_or(s.sample_interval);
        s.critical_size = pick(opts.critical_size, last("critical-size"), "critical-size")?.unwrap_or(s.critical_size);
        s.noise = !(opts.no_noise || pick::<bool>(None, last("no-noise"), "no-noise")?.unwrap_or(false));
        s.synthetic = opts.synthetic || pick::<bool>(None, last("synthetic"), "synthetic")?.unwrap_or(false);
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<(), CliError> {
        if self.sizes.is_empty() {
            return Err(CliError::Usage("the L list is empty".into()));
        }
        if !(self.tol > 0.0) {
            return Err(CliError::Usage("tol must be positive".into()));
        }
        if self.n_max_cap < 16 {
            return Err(CliError::Usage("n-max-cap must be at least 16".into()));
        }
        if !(self.critical_size > 0.0) {
            return Err(CliError::Usage("critical-size must be positive".into()));
        }
        Ok(())
    }

    /// Everything that influences the primary output, one `key=value` per
    /// line. Worker count and output path are deliberately absent.
    pub fn canonical(&self) -> Vec<(String, String)> {
        let sizes: Vec<String> = self.sizes.iter().map(|l| format!("{l:e}")).collect();
        let mut kv = vec![("command", self.command.name().to_string()), ("format", self.format.as_str().to_string())];
        if matches!(self.command, CommandKind::Sweep | CommandKind::Perturb | CommandKind::PositiveP) {
            kv.push(("epsilon", self.epsilon.canonical()));
        }
        if self.command != CommandKind::SelfTest {
            kv.push(("L", sizes.join(",")));
            kv.push(("lambda", self.lambda.canonical()));
        }
        if self.command != CommandKind::PositiveP && self.command != CommandKind::SelfTest {
            kv.push(("n-max-cap", self.n_max_cap.to_string()));
            kv.push(("tol", format!("{:e}", self.tol)));
        }
        match self.command {
            CommandKind::PositiveP => kv.extend([
                ("seed", self.seed.to_string()),
                ("trajectories", self.trajectories.to_string()),
                ("dt", format!("{:e}", self.dt)),
                ("t-final", format!("{:e}", self.t_final)),
                ("alpha0", format!("{:e}", self.alpha0)),
                ("sample-interval", format!("{:e}", self.sample_interval)),
                ("noise", self.noise.to_string()),
            ]),
            CommandKind::Exponents => kv.push(("critical-size", format!("{:e}", self.critical_size))),
            CommandKind::Collapse => kv.push(("synthetic", self.synthetic.to_string())),
            CommandKind::SelfTest => kv.push(("seed", self.seed.to_string())),
            _ => {}
        }
        kv.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

fn pick<T: std::str::FromStr>(flag: Option<T>, file: Option<&str>, key: &str) -> Result<Option<T>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    file.map(|v| v.trim().parse::<T>().map_err(|_| CliError::Usage(format!("bad value '{v}' for {key}")))).transpose()
}

pub fn parse_sizes(text: &str) -> Result<Vec<f64>, CliError> {
    let mut sizes = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let v: f64 = part.parse().map_err(|_| CliError::Usage(format!("bad size '{part}'")))?;
        if !(v > 0.0) {
            return Err(CliError::Usage(format!("size must be positive, got {part}")));
        }
        sizes.push(v);
    }
    Ok(sizes)
}

/// `key = value` lines; `#` starts a comment; repeated keys accumulate.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, Vec<String>>, CliError> {
    let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
        map.entry(k.trim().to_string()).or_default().push(v.trim().to_string());
    }
    Ok(map)
}

fn read_config(path: &Path) -> Result<BTreeMap<String, Vec<String>>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_and_log_grids() {
        let g = Grid::parse("0:2:41").unwrap();
        let v = g.values();
        assert_eq!(v.len(), 41);
        assert_eq!(v[20], 1.0);
        let g = Grid::parse("0.9:0.999:3:log").unwrap();
        let v = g.values();
        assert!((v[0] - 0.9).abs() < 1e-15 && (v[1] - 0.99).abs() < 1e-15 && (v[2] - 0.999).abs() < 1e-15);
        assert!(Grid::parse("0.9:1.1:5:log").is_err());
        assert!(Grid::parse("0:1:0").is_err());
        assert_eq!(Grid::parse("1.3").unwrap().values(), vec![1.3]);
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "# sweep\nL = 1e2\nL = 1e3, 1e4\nlambda = inv-sqrt-L\ntol = 1e-9\n").unwrap();
        let mut opts = Options { config: Some(path), ..Default::default() };
        let s = Settings::resolve(CommandKind::Sweep, &opts).unwrap();
        assert_eq!(s.sizes, vec![1e2, 1e3, 1e4]);
        assert_eq!(s.lambda, LambdaRule::InvSqrtSize);
        assert_eq!(s.tol, 1e-9);
        opts.sizes = Some("5".into());
        opts.tol = Some(1e-10);
        let s = Settings::resolve(CommandKind::Sweep, &opts).unwrap();
        assert_eq!(s.sizes, vec![5.0]);
        assert_eq!(s.tol, 1e-10);
    }

    #[test]
    fn empty_size_list_is_a_usage_error() {
        let opts = Options { sizes: Some(" , ".into()), ..Default::default() };
        assert!(matches!(Settings::resolve(CommandKind::Sweep, &opts), Err(CliError::Usage(_))));
    }

    #[test]
    fn canonical_form_ignores_workers() {
        let a = Settings::resolve(CommandKind::Sweep, &Options { workers: Some(1), ..Default::default() }).unwrap();
        let b = Settings::resolve(CommandKind::Sweep, &Options { workers: Some(8), ..Default::default() }).unwrap();
        assert_eq!(a.canonical(), b.canonical());
    }
}
