//! Line-oriented `key = value` configuration under `[section]` headers.
//!
//! ```text
//! [potential]
//! kind = soft-sphere        # soft-sphere | zero | tabulated
//! v0 = 2.0
//! radius = 1.0
//!
//! [lattice]
//! cutoff = 1.0              # |m| <= cutoff for momenta 2πm
//!
//! [model]
//! n_particles = 6
//! modes = 5                 # zero mode plus an even number of lattice points
//! state_kind = exact-ground-state
//!
//! [observable]
//! kind = multiplication-cosine
//! amplitudes = 1.0, 0.5, 0.0
//!
//! [experiment]
//! n_grid = 4, 6
//! replicas = 100
//! deltas = 0.05, 0.1, 0.2
//! functions = identity, indicator:0.0
//! seed = 1
//!
//! [output]
//! directory = out
//! plot = true
//! ```
//!
//! Lists are comma separated. Unknown sections and keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use ini::{Ini, ParseOption};

use crate::error::{AppError, AppResult};
use crate::functions::TestFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    SoftSphere,
    Zero,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSection {
    pub kind: PotentialKind,
    pub v0: Option<f64>,
    pub radius: Option<f64>,
    pub r: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSection {
    pub cutoff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    ExactGroundState,
    Product,
    Quasifree,
    Dressed,
    IidSurrogate,
}

impl StateKind {
    pub fn name(self) -> &'static str {
        match self {
            StateKind::ExactGroundState => "exact-ground-state",
            StateKind::Product => "product",
            StateKind::Quasifree => "quasifree",
            StateKind::Dressed => "dressed",
            StateKind::IidSurrogate => "iid-surrogate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub n_particles: Option<usize>,
    pub modes: Option<usize>,
    pub state_kind: StateKind,
    pub ell: f64,
    pub grid_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObservableSection {
    Cosine { amplitudes: [f64; 3] },
    MatrixFile { file: PathBuf },
    Law { atoms: Vec<f64>, weights: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct ExperimentSection {
    pub n_grid: Vec<usize>,
    pub replicas: usize,
    pub deltas: Vec<f64>,
    pub functions: Vec<TestFunction>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub plot: bool,
    pub samples: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), plot: false, samples: false }
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    pub potential: Option<PotentialSection>,
    pub lattice: Option<LatticeSection>,
    pub model: Option<ModelSection>,
    pub observable: Option<ObservableSection>,
    pub experiment: Option<ExperimentSection>,
    pub output: OutputSection,
}

/// Keys of one section, consumed as they are read so leftovers can be
/// reported.
struct Section {
    name: &'static str,
    keys: BTreeMap<String, String>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<String> {
        self.keys.remove(key)
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> AppResult<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => {
                v.parse().map(Some).map_err(|_| AppError::config(format!("[{}] {key}: cannot parse `{v}`", self.name)))
            }
        }
    }

    fn required<T: FromStr>(&mut self, key: &str) -> AppResult<T> {
        self.parse(key)?.ok_or_else(|| AppError::config(format!("[{}] is missing `{key}`", self.name)))
    }

    fn list<T: FromStr>(&mut self, key: &str) -> AppResult<Option<Vec<T>>> {
        let Some(v) = self.take(key) else { return Ok(None) };
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| AppError::config(format!("[{}] {key}: cannot parse `{}`", self.name, s.trim())))
            })
            .collect::<AppResult<Vec<T>>>()
            .map(Some)
    }

    fn positive(&mut self, key: &str) -> AppResult<Option<f64>> {
        match self.parse::<f64>(key)? {
            Some(v) if !(v > 0.0 && v.is_finite()) => {
                Err(AppError::config(format!("[{}] {key} must be positive, got {v}", self.name)))
            }
            other => Ok(other),
        }
    }

    fn finish(self) -> AppResult<()> {
        match self.keys.keys().next() {
            Some(k) => Err(AppError::config(format!("[{}] unknown key `{k}`", self.name))),
            None => Ok(()),
        }
    }
}

const SECTIONS: [&str; 6] = ["potential", "lattice", "model", "observable", "experiment", "output"];

impl Config {
    pub fn parse(text: &str) -> AppResult<Self> {
        let opt = ParseOption { enabled_escape: false, ..ParseOption::default() };
        let ini = Ini::load_from_str_opt(text, opt).map_err(|e| AppError::config(e.to_string()))?;
        let mut sections: BTreeMap<&'static str, Section> = BTreeMap::new();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(AppError::config(format!("key `{k}` appears before any section")));
                }
                continue;
            };
            let name = SECTIONS
                .iter()
                .copied()
                .find(|s| *s == name)
                .ok_or_else(|| AppError::config(format!("unknown section [{name}]")))?;
            if sections.contains_key(name) {
                return Err(AppError::config(format!("section [{name}] appears twice")));
            }
            let mut keys = BTreeMap::new();
            for (k, v) in props.iter() {
                if keys.insert(k.to_string(), v.to_string()).is_some() {
                    return Err(AppError::config(format!("[{name}] key `{k}` appears twice")));
                }
            }
            sections.insert(name, Section { name, keys });
        }

        let potential = sections.remove("potential").map(parse_potential).transpose()?;
        let lattice = match sections.remove("lattice") {
            None => None,
            Some(mut s) => {
                let cutoff = s.positive("cutoff")?.ok_or_else(|| AppError::config("[lattice] is missing `cutoff`"))?;
                s.finish()?;
                Some(LatticeSection { cutoff })
            }
        };
        let model = sections.remove("model").map(parse_model).transpose()?;
        let observable = sections.remove("observable").map(parse_observable).transpose()?;
        let mut experiment = sections.remove("experiment").map(parse_experiment).transpose()?;
        if let Some(e) = experiment.as_mut().filter(|e| e.n_grid.is_empty()) {
            let n = model.as_ref().and_then(|m| m.n_particles);
            e.n_grid = vec![n.ok_or_else(|| {
                AppError::config("[experiment] is missing `n_grid` and [model] has no `n_particles`")
            })?];
        }
        let output = match sections.remove("output") {
            None => OutputSection::default(),
            Some(mut s) => {
                let d = OutputSection::default();
                let out = OutputSection {
                    directory: s.take("directory").map(PathBuf::from).unwrap_or(d.directory),
                    plot: s.parse("plot")?.unwrap_or(d.plot),
                    samples: s.parse("samples")?.unwrap_or(d.samples),
                };
                s.finish()?;
                out
            }
        };
        Ok(Config { potential, lattice, model, observable, experiment, output })
    }

    /// Reads and parses a file. A relative matrix file path is taken
    /// relative to the configuration file.
    pub fn load(path: &std::path::Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| AppError::Io { path: path.to_path_buf(), source })?;
        let mut config = Self::parse(&text)?;
        if let Some(ObservableSection::MatrixFile { file }) = &mut config.observable {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(config)
    }

    pub fn potential(&self) -> AppResult<&PotentialSection> {
        self.potential.as_ref().ok_or_else(|| missing("potential"))
    }

    pub fn lattice(&self) -> AppResult<&LatticeSection> {
        self.lattice.as_ref().ok_or_else(|| missing("lattice"))
    }

    pub fn model(&self) -> AppResult<&ModelSection> {
        self.model.as_ref().ok_or_else(|| missing("model"))
    }

    pub fn observable(&self) -> AppResult<&ObservableSection> {
        self.observable.as_ref().ok_or_else(|| missing("observable"))
    }

    pub fn experiment(&self) -> AppResult<&ExperimentSection> {
        self.experiment.as_ref().ok_or_else(|| missing("experiment"))
    }
}

fn missing(section: &str) -> AppError {
    AppError::config(format!("missing [{section}] section"))
}

fn parse_potential(mut s: Section) -> AppResult<PotentialSection> {
    let kind = match s.take("kind").as_deref() {
        Some("soft-sphere") => PotentialKind::SoftSphere,
        Some("zero") => PotentialKind::Zero,
        Some("tabulated") => PotentialKind::Tabulated,
        Some(other) => return Err(AppError::config(format!("[potential] unknown kind `{other}`"))),
        None => return Err(AppError::config("[potential] is missing `kind`")),
    };
    let v0 = s.parse::<f64>("v0")?;
    let radius = s.positive("radius")?;
    let r = s.list("r")?.unwrap_or_default();
    let v = s.list("v")?.unwrap_or_default();
    s.finish()?;
    match kind {
        PotentialKind::SoftSphere => {
            let v0 = v0.ok_or_else(|| AppError::config("[potential] soft-sphere needs `v0`"))?;
            if !(v0 >= 0.0) {
                return Err(AppError::config(format!("[potential] v0 must be nonnegative, got {v0}")));
            }
            if radius.is_none() {
                return Err(AppError::config("[potential] soft-sphere needs `radius`"));
            }
        }
        PotentialKind::Tabulated if r.is_empty() || r.len() != v.len() => {
            return Err(AppError::config("[potential] tabulated needs lists `r` and `v` of equal length"));
        }
        _ => {}
    }
    Ok(PotentialSection { kind, v0, radius, r, v })
}

fn parse_model(mut s: Section) -> AppResult<ModelSection> {
    let n_particles = s.parse::<usize>("n_particles")?;
    if n_particles == Some(0) {
        return Err(AppError::config("[model] n_particles must be positive"));
    }
    let modes = s.parse::<usize>("modes")?;
    if let Some(m) = modes {
        if m < 3 || m % 2 == 0 {
            return Err(AppError::config(format!("[model] modes must be odd and at least 3, got {m}")));
        }
    }
    let state_kind = match s.take("state_kind").as_deref() {
        None | Some("exact-ground-state") => StateKind::ExactGroundState,
        Some("product") => StateKind::Product,
        Some("quasifree") => StateKind::Quasifree,
        Some("dressed") => StateKind::Dressed,
        Some("iid-surrogate") => StateKind::IidSurrogate,
        Some(other) => return Err(AppError::config(format!("[model] unknown state_kind `{other}`"))),
    };
    let ell = s.positive("ell")?.unwrap_or(0.25);
    if ell >= 0.5 {
        return Err(AppError::config(format!("[model] ell must lie in (0, 1/2), got {ell}")));
    }
    let grid_size = s.parse::<usize>("grid_size")?.unwrap_or(64);
    if grid_size < 64 {
        return Err(AppError::config(format!("[model] grid_size must be at least 64, got {grid_size}")));
    }
    s.finish()?;
    Ok(ModelSection { n_particles, modes, state_kind, ell, grid_size })
}

fn parse_observable(mut s: Section) -> AppResult<ObservableSection> {
    let out = match s.take("kind").as_deref() {
        Some("multiplication-cosine") => {
            let a: Vec<f64> = s.list("amplitudes")?.unwrap_or_else(|| vec![1.0, 0.0, 0.0]);
            if a.len() != 3 || a.iter().any(|x| !x.is_finite()) {
                return Err(AppError::config("[observable] amplitudes needs three finite numbers"));
            }
            ObservableSection::Cosine { amplitudes: [a[0], a[1], a[2]] }
        }
        Some("custom-matrix-file") => {
            let file =
                s.take("file").ok_or_else(|| AppError::config("[observable] custom-matrix-file needs `file`"))?;
            ObservableSection::MatrixFile { file: PathBuf::from(file) }
        }
        Some("discrete-law") => {
            let atoms: Vec<f64> = s.list("atoms")?.unwrap_or_default();
            let weights: Vec<f64> = s.list("weights")?.unwrap_or_default();
            if atoms.is_empty() || atoms.len() != weights.len() {
                return Err(AppError::config("[observable] discrete-law needs `atoms` and `weights` of equal length"));
            }
            ObservableSection::Law { atoms, weights }
        }
        Some(other) => return Err(AppError::config(format!("[observable] unknown kind `{other}`"))),
        None => return Err(AppError::config("[observable] is missing `kind`")),
    };
    s.finish()?;
    Ok(out)
}

fn parse_experiment(mut s: Section) -> AppResult<ExperimentSection> {
    // An absent grid is filled from [model] n_particles once all sections are read.
    let n_grid: Vec<usize> = s.list("n_grid")?.unwrap_or_default();
    if n_grid.first() == Some(&0) || n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AppError::config("[experiment] n_grid must be positive and strictly increasing"));
    }
    let replicas: usize = s.required("replicas")?;
    if replicas < 2 {
        return Err(AppError::config("[experiment] replicas must be at least 2"));
    }
    let deltas: Vec<f64> = s.list("deltas")?.unwrap_or_else(|| vec![0.05, 0.1, 0.2]);
    if deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(AppError::config("[experiment] deltas must be positive"));
    }
    let functions = match s.take("functions") {
        None => vec![TestFunction::Identity],
        Some(v) => v.split(',').map(TestFunction::parse).collect::<AppResult<Vec<_>>>()?,
    };
    let seed = s.parse("seed")?.unwrap_or(0);
    s.finish()?;
    Ok(ExperimentSection { n_grid, replicas, deltas, functions, seed })
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Normalized form, written next to results as a record of the run.
impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = &self.potential {
            writeln!(f, "[potential]")?;
            let kind = match p.kind {
                PotentialKind::SoftSphere => "soft-sphere",
                PotentialKind::Zero => "zero",
                PotentialKind::Tabulated => "tabulated",
            };
            writeln!(f, "kind = {kind}")?;
            if let Some(v0) = p.v0 {
                writeln!(f, "v0 = {v0}")?;
            }
            if let Some(r) = p.radius {
                writeln!(f, "radius = {r}")?;
            }
            if !p.r.is_empty() {
                writeln!(f, "r = {}\nv = {}", join(&p.r), join(&p.v))?;
            }
            writeln!(f)?;
        }
        if let Some(l) = &self.lattice {
            writeln!(f, "[lattice]\ncutoff = {}\n", l.cutoff)?;
        }
        if let Some(m) = &self.model {
            writeln!(f, "[model]")?;
            if let Some(n) = m.n_particles {
                writeln!(f, "n_particles = {n}")?;
            }
            if let Some(d) = m.modes {
                writeln!(f, "modes = {d}")?;
            }
            writeln!(f, "state_kind = {}\nell = {}\ngrid_size = {}\n", m.state_kind.name(), m.ell, m.grid_size)?;
        }
        if let Some(o) = &self.observable {
            writeln!(f, "[observable]")?;
            match o {
                ObservableSection::Cosine { amplitudes } => {
                    writeln!(f, "kind = multiplication-cosine\namplitudes = {}", join(amplitudes))?
                }
                ObservableSection::MatrixFile { file } => {
                    writeln!(f, "kind = custom-matrix-file\nfile = {}", file.display())?
                }
                ObservableSection::Law { atoms, weights } => {
                    writeln!(f, "kind = discrete-law\natoms = {}\nweights = {}", join(atoms), join(weights))?
                }
            }
            writeln!(f)?;
        }
        if let Some(e) = &self.experiment {
            writeln!(f, "[experiment]")?;
            writeln!(f, "n_grid = {}\nreplicas = {}", join(&e.n_grid), e.replicas)?;
            writeln!(f, "deltas = {}\nfunctions = {}\nseed = {}\n", join(&e.deltas), join(&e.functions), e.seed)?;
        }
        let o = &self.output;
        writeln!(f, "[output]\ndirectory = {}\nplot = {}\nsamples = {}", o.directory.display(), o.plot, o.samples)
    }
}
