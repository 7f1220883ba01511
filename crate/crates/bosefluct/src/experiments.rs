//! Monte Carlo runs over a grid of particle numbers.
//!
//! Replica `r` at particle number `N` draws from `seed::replica_rng(seed, N,
//! r)`. Replicas run in parallel and are collected in index order, so every
//! number produced here is independent of the thread count.

use std::f64::consts::PI;

use bosefluct_core::bogoliubov::{
    convolution, covariance_matrix, dressed_dispersion, l2_norm_sq, sigma_f, Covariance, MomentumLattice,
    SpectralObservable,
};
use bosefluct_core::fockspace::{second_quantize, FockVector};
use bosefluct_core::linalg::{self, CMatrix, LanczosOptions};
use bosefluct_core::ot1d::{wasserstein_1_cdf, DiscreteMeasure};
use bosefluct_core::quantum_sim::{
    build_hamiltonian, centered_function, ground_state, model_state, nu_phi, sample_iid, MeasurementSampler, ModelKind,
    TorusModel,
};
use bosefluct_core::scattering::{eta_coefficients, solve_neumann, solve_zero_energy, EtaConvention, RadialPotential};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Config, ObservableSection, PotentialKind, PotentialSection, StateKind};
use crate::error::{AppError, AppResult};
use crate::functions::TestFunction;
use crate::seed::replica_rng;
use crate::stats::{self, LinearFit, NormalityTest};

/// What is measured: a one-particle observable, or for the i.i.d.
/// surrogate a law given directly.
#[derive(Debug, Clone)]
pub enum ObservableSpec {
    Matrix(SpectralObservable),
    Law(DiscreteMeasure),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub state: StateKind,
    pub potential: RadialPotential,
    /// Excited modes of the model; the zero mode is implicit.
    pub lattice: MomentumLattice,
    pub observable: ObservableSpec,
    pub ell: f64,
    pub grid_size: usize,
    pub n_grid: Vec<usize>,
    pub replicas: usize,
    pub deltas: Vec<f64>,
    pub functions: Vec<TestFunction>,
    pub seed: u64,
    /// Keep raw outcome vectors (for the `samples_N*.csv` export).
    pub keep_samples: bool,
}

impl ExperimentConfig {
    /// An i.i.d. surrogate run on a given law, with defaults elsewhere.
    pub fn iid(law: DiscreteMeasure, n_grid: Vec<usize>, replicas: usize, seed: u64) -> Self {
        Self {
            state: StateKind::IidSurrogate,
            potential: RadialPotential::zero(),
            lattice: MomentumLattice::from_points(Vec::new()).expect("empty lattice"),
            observable: ObservableSpec::Law(law),
            ell: 0.25,
            grid_size: 64,
            n_grid,
            replicas,
            deltas: vec![0.05, 0.1, 0.2],
            functions: vec![TestFunction::Identity],
            seed,
            keep_samples: false,
        }
    }

    pub fn from_config(config: &Config) -> AppResult<Self> {
        let exp = config.experiment()?;
        let state = config.model.as_ref().map_or(StateKind::IidSurrogate, |m| m.state_kind);
        let needs_potential = matches!(state, StateKind::ExactGroundState | StateKind::Quasifree | StateKind::Dressed);
        let potential = match &config.potential {
            Some(p) => build_potential(p)?,
            None if needs_potential => return Err(AppError::config("missing [potential] section")),
            None => RadialPotential::zero(),
        };
        let observable_section = config.observable()?;
        let lattice = match (&config.lattice, observable_section) {
            (None, ObservableSection::Law { .. }) => MomentumLattice::from_points(Vec::new())?,
            _ => model_lattice(config)?,
        };
        let observable = build_observable(observable_section, &lattice)?;
        if matches!(observable, ObservableSpec::Law(_)) && state != StateKind::IidSurrogate {
            return Err(AppError::config("a discrete-law observable needs state_kind = iid-surrogate"));
        }
        let (ell, grid_size) = config.model.as_ref().map_or((0.25, 64), |m| (m.ell, m.grid_size));
        Ok(Self {
            state,
            potential,
            lattice,
            observable,
            ell,
            grid_size,
            n_grid: exp.n_grid.clone(),
            replicas: exp.replicas,
            deltas: exp.deltas.clone(),
            functions: exp.functions.clone(),
            seed: exp.seed,
            keep_samples: config.output.samples,
        })
    }

    fn matrix_observable(&self) -> Option<&SpectralObservable> {
        match &self.observable {
            ObservableSpec::Matrix(o) => Some(o),
            ObservableSpec::Law(_) => None,
        }
    }
}

pub fn build_potential(p: &PotentialSection) -> AppResult<RadialPotential> {
    let v = match p.kind {
        PotentialKind::Zero => RadialPotential::zero(),
        PotentialKind::SoftSphere => RadialPotential::soft_sphere(p.v0.unwrap_or(0.0), p.radius.unwrap_or(1.0))
            .map_err(|e| AppError::config(format!("[potential] {e}")))?,
        PotentialKind::Tabulated => RadialPotential::tabulated(p.r.clone(), p.v.clone())
            .map_err(|e| AppError::config(format!("[potential] {e}")))?,
    };
    Ok(v)
}

/// Lattice points with `|m| <= cutoff`, cut to the first `modes - 1` points
/// when `[model] modes` is set.
pub fn model_lattice(config: &Config) -> AppResult<MomentumLattice> {
    let full = MomentumLattice::new(2.0 * PI * config.lattice()?.cutoff)?;
    match config.model.as_ref().and_then(|m| m.modes) {
        None => Ok(full),
        Some(m) if m - 1 > full.len() => {
            Err(AppError::config(format!("[model] modes = {m} exceeds the {} modes inside the cutoff", full.len() + 1)))
        }
        Some(m) => Ok(full.truncated(m - 1)?),
    }
}

pub fn build_observable(section: &ObservableSection, lattice: &MomentumLattice) -> AppResult<ObservableSpec> {
    Ok(match section {
        ObservableSection::Cosine { amplitudes } => {
            ObservableSpec::Matrix(SpectralObservable::multiplication_cosine(lattice.mode_list(), *amplitudes)?)
        }
        ObservableSection::MatrixFile { file } => {
            let m = crate::io::read_matrix(file)?;
            let modes = lattice.mode_list();
            if m.nrows() != modes.len() {
                return Err(AppError::config(format!(
                    "{}: matrix is {}x{} but the model has {} modes",
                    file.display(),
                    m.nrows(),
                    m.ncols(),
                    modes.len()
                )));
            }
            ObservableSpec::Matrix(SpectralObservable::new(modes, m)?)
        }
        ObservableSection::Law { atoms, weights } => ObservableSpec::Law(
            DiscreteMeasure::new(atoms, weights).map_err(|e| AppError::config(format!("[observable] {e}")))?,
        ),
    })
}

/// Scattering length of the unscaled potential; zero for `V ≡ 0`.
pub fn scattering_length(v: &RadialPotential) -> AppResult<f64> {
    if v.is_zero() {
        return Ok(0.0);
    }
    Ok(solve_zero_energy(v, 4.0 * v.support_radius(), 256)?.a0)
}

/// `(η, τ)` on the lattice at particle number `n`.
pub fn bogoliubov_coefficients(cfg: &ExperimentConfig, n: usize) -> AppResult<(Vec<f64>, Vec<f64>)> {
    let neu = solve_neumann(&cfg.potential, n, cfg.ell, cfg.grid_size)?;
    let eta = eta_coefficients(&neu, &cfg.lattice, n, EtaConvention::AsWritten);
    let eta0 = -neu.w_hat(0.0) / (n * n) as f64;
    let w = convolution(&cfg.potential, &eta, eta0, &cfg.lattice, n)?;
    let d = dressed_dispersion(&eta, &w, &cfg.lattice)?;
    Ok((eta, d.tau))
}

enum Sampler {
    Iid(DiscreteMeasure),
    Exact(MeasurementSampler),
}

/// Everything needed to draw replicas at one particle number.
pub struct PreparedState {
    pub n: usize,
    /// `ν_φ`, the reference law.
    pub reference: DiscreteMeasure,
    /// The many-body state, for states that are built explicitly.
    pub psi: Option<FockVector>,
    pub gamma1: Option<CMatrix>,
    sampler: Sampler,
}

impl PreparedState {
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match &self.sampler {
            Sampler::Iid(law) => sample_iid(law, self.n, rng),
            Sampler::Exact(s) => s.sample(rng),
        }
    }
}

pub fn prepare(cfg: &ExperimentConfig, n: usize) -> AppResult<PreparedState> {
    let reference = match &cfg.observable {
        ObservableSpec::Law(law) => law.clone(),
        ObservableSpec::Matrix(o) => nu_phi(o)?,
    };
    // φ^{⊗N} rotated to the eigenbasis of O is (Wφ)^{⊗N}, whose occupation
    // law is multinomial: exact i.i.d. sampling from ν_φ.
    if matches!(cfg.state, StateKind::Product | StateKind::IidSurrogate) {
        return Ok(PreparedState { n, sampler: Sampler::Iid(reference.clone()), reference, psi: None, gamma1: None });
    }
    let o = cfg.matrix_observable().expect("checked at configuration");
    let (psi, gamma1) = match cfg.state {
        StateKind::ExactGroundState => {
            let model = TorusModel::new(cfg.potential.clone(), cfg.lattice.clone(), n)?;
            let h = build_hamiltonian(&model)?;
            let gs = ground_state(&h, model.basis(), LanczosOptions::default())?;
            (gs.state, Some(gs.gamma1))
        }
        StateKind::Quasifree => {
            let (_, tau) = bogoliubov_coefficients(cfg, n)?;
            (model_state(&ModelKind::Quasifree { tau }, &cfg.lattice, n)?, None)
        }
        StateKind::Dressed => {
            let (eta, tau) = bogoliubov_coefficients(cfg, n)?;
            (model_state(&ModelKind::Dressed { eta, tau }, &cfg.lattice, n)?, None)
        }
        StateKind::Product | StateKind::IidSurrogate => unreachable!(),
    };
    let sampler = Sampler::Exact(MeasurementSampler::new(&psi, o)?);
    Ok(PreparedState { n, reference, psi: Some(psi), gamma1, sampler })
}

/// Runs `f` on every replica in parallel; results come back in replica
/// order.
fn replicas<T: Send>(
    seed: u64,
    n: usize,
    count: usize,
    f: impl Fn(&mut ChaCha8Rng) -> bosefluct_core::Result<T> + Sync,
) -> AppResult<Vec<T>> {
    (0..count)
        .into_par_iter()
        .map(|r| f(&mut replica_rng(seed, n, r)).map_err(|source| AppError::Replica { n, replica: r, source }))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlnRow {
    pub n: usize,
    pub replicas: usize,
    pub delta: f64,
    pub p_exceed: f64,
    pub mean_w1: f64,
    pub stderr_w1: f64,
    pub sqrt_n_mean_w1: f64,
}

#[derive(Debug, Clone)]
pub struct LlnRecord {
    pub rows: Vec<LlnRow>,
    /// Per-replica `W1(ν_N, ν_φ)` for each `N`.
    pub w1: Vec<(usize, Vec<f64>)>,
    pub samples: Vec<(usize, Vec<Vec<f64>>)>,
    /// Diameter of the spectrum, which contains every outcome.
    pub diameter: f64,
}

pub fn lln_run(cfg: &ExperimentConfig) -> AppResult<LlnRecord> {
    let mut rows = Vec::new();
    let mut w1_all = Vec::new();
    let mut samples_all = Vec::new();
    let diameter = match &cfg.observable {
        ObservableSpec::Matrix(o) => {
            let ev = o.eigenvalues();
            ev.iter().copied().fold(f64::MIN, f64::max) - ev.iter().copied().fold(f64::MAX, f64::min)
        }
        ObservableSpec::Law(l) => l.max_atom() - l.min_atom(),
    };
    for &n in &cfg.n_grid {
        let state = prepare(cfg, n)?;
        let draws = replicas(cfg.seed, n, cfg.replicas, |rng| {
            let y = state.sample(rng);
            let w1 = wasserstein_1_cdf(&DiscreteMeasure::empirical(&y)?, &state.reference);
            Ok((w1, if cfg.keep_samples { y } else { Vec::new() }))
        })?;
        let (w1, samples): (Vec<f64>, Vec<Vec<f64>>) = draws.into_iter().unzip();
        let mean_w1 = stats::mean(&w1);
        let stderr_w1 = stats::standard_error(&w1);
        for &delta in &cfg.deltas {
            let p_exceed = w1.iter().filter(|&&w| w > delta).count() as f64 / w1.len() as f64;
            rows.push(LlnRow {
                n,
                replicas: cfg.replicas,
                delta,
                p_exceed,
                mean_w1,
                stderr_w1,
                sqrt_n_mean_w1: (n as f64).sqrt() * mean_w1,
            });
        }
        w1_all.push((n, w1));
        if cfg.keep_samples {
            samples_all.push((n, samples));
        }
    }
    Ok(LlnRecord { rows, w1: w1_all, samples: samples_all, diameter })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    /// `log E[W1]` against `log N`.
    pub fit: LinearFit,
    /// `√N E[W1]` never rises by more than two combined standard errors
    /// between neighbouring grid points.
    pub sqrt_n_nonincreasing: bool,
    /// `max/min - 1` of `√N E[W1]` over the upper half of the grid.
    pub top_half_spread: f64,
}

/// Fit from `(N, E[W1], standard error)` triples.
pub fn scaling_fit_points(points: &[(usize, f64, f64)]) -> AppResult<ScalingFit> {
    if points.len() < 4 {
        return Err(AppError::Statistics {
            what: format!("scaling fit needs at least 4 N values, got {}", points.len()),
        });
    }
    if points.iter().any(|p| !(p.1 > 0.0)) {
        return Err(AppError::Statistics { what: "scaling fit needs positive mean W1 values".into() });
    }
    let x: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let fit = stats::ols(&x, &y)?;
    let scaled: Vec<(f64, f64)> =
        points.iter().map(|p| ((p.0 as f64).sqrt() * p.1, (p.0 as f64).sqrt() * p.2)).collect();
    let sqrt_n_nonincreasing =
        scaled.windows(2).all(|w| w[1].0 <= w[0].0 + 2.0 * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt());
    let top = &scaled[scaled.len() / 2..];
    let max = top.iter().map(|s| s.0).fold(f64::MIN, f64::max);
    let min = top.iter().map(|s| s.0).fold(f64::MAX, f64::min);
    Ok(ScalingFit { fit, sqrt_n_nonincreasing, top_half_spread: max / min - 1.0 })
}

pub fn scaling_fit(record: &LlnRecord) -> AppResult<ScalingFit> {
    let points: Vec<(usize, f64, f64)> =
        record.w1.iter().map(|(n, w)| (*n, stats::mean(w), stats::standard_error(w))).collect();
    scaling_fit_points(&points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltSummaryRow {
    pub j: usize,
    pub k: usize,
    pub sigma_model: f64,
    pub sigma_sample: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone)]
pub struct CltRecord {
    /// `values[i][j][r]`: statistic `j` of replica `r` at `n_grid[i]`.
    pub n_grid: Vec<usize>,
    pub values: Vec<Vec<Vec<f64>>>,
    /// Second moments at the largest `N`.
    pub summary: Vec<CltSummaryRow>,
    /// KS test of each coordinate at the largest `N` against `N(0,
    /// sigma_model[j][j])`; `None` when that variance vanishes or there are
    /// too few replicas.
    pub normality: Vec<Option<NormalityTest>>,
    /// The limiting covariance from the Bogoliubov σ vectors, when the
    /// observable is a matrix.
    pub bogoliubov: Option<Covariance>,
}

/// Exact second moments `E[s_j s_k]` of the statistics
/// `s_j = √N(⟨ν_N, f_j⟩ - ⟨ν_φ, f_j⟩)` in the prepared state.
pub fn model_second_moments(cfg: &ExperimentConfig, state: &PreparedState) -> AppResult<Vec<Vec<f64>>> {
    let m = cfg.functions.len();
    let mut out = vec![vec![0.0; m]; m];
    match (&state.psi, cfg.matrix_observable()) {
        (Some(psi), Some(o)) => {
            let n = state.n as f64;
            let vecs: Vec<Vec<_>> = cfg
                .functions
                .iter()
                .map(|f| {
                    let dg = second_quantize(&psi.basis, &centered_function(o, &f.as_fn()))?;
                    Ok(dg.apply(&psi.amplitudes))
                })
                .collect::<AppResult<_>>()?;
            for j in 0..m {
                for k in 0..m {
                    out[j][k] = linalg::inner(&vecs[j], &vecs[k]).re / n;
                }
            }
        }
        _ => {
            // i.i.d.: the covariance of (f_j, f_k) under ν_φ.
            let nu = &state.reference;
            for j in 0..m {
                for k in 0..m {
                    let (fj, fk) = (&cfg.functions[j], &cfg.functions[k]);
                    out[j][k] = nu.integrate(|x| fj.eval(x) * fk.eval(x))
                        - nu.integrate(|x| fj.eval(x)) * nu.integrate(|x| fk.eval(x));
                }
            }
        }
    }
    Ok(out)
}

pub fn clt_run(cfg: &ExperimentConfig) -> AppResult<CltRecord> {
    if cfg.replicas < 100 {
        return Err(AppError::config(format!("CLT runs need at least 100 replicas, got {}", cfg.replicas)));
    }
    let bogoliubov = match cfg.matrix_observable() {
        Some(o) => {
            let a0 = scattering_length(&cfg.potential)?;
            let sigmas = cfg
                .functions
                .iter()
                .map(|f| sigma_f(o, &f.as_fn(), a0, &cfg.lattice))
                .collect::<bosefluct_core::Result<Vec<_>>>()?;
            Some(covariance_matrix(&sigmas)?)
        }
        None => None,
    };
    let m = cfg.functions.len();
    let mut values = Vec::new();
    let mut last = None;
    for &n in &cfg.n_grid {
        let state = prepare(cfg, n)?;
        let means: Vec<f64> = cfg.functions.iter().map(|f| state.reference.integrate(|x| f.eval(x))).collect();
        let stats_per_replica = replicas(cfg.seed, n, cfg.replicas, |rng| {
            let y = state.sample(rng);
            Ok(cfg
                .functions
                .iter()
                .zip(&means)
                .map(|(f, mean)| {
                    let avg = y.iter().map(|&v| f.eval(v)).sum::<f64>() / n as f64;
                    (n as f64).sqrt() * (avg - mean)
                })
                .collect::<Vec<f64>>())
        })?;
        let by_function: Vec<Vec<f64>> = (0..m).map(|j| stats_per_replica.iter().map(|s| s[j]).collect()).collect();
        values.push(by_function);
        last = Some(state);
    }
    let state = last.ok_or_else(|| AppError::config("[experiment] n_grid is empty"))?;
    let model = model_second_moments(cfg, &state)?;
    let top = values.last().expect("nonempty grid");
    let mut summary = Vec::new();
    for j in 0..m {
        for k in 0..m {
            let products: Vec<f64> = top[j].iter().zip(&top[k]).map(|(a, b)| a * b).collect();
            summary.push(CltSummaryRow {
                j,
                k,
                sigma_model: model[j][k],
                sigma_sample: stats::mean(&products),
                stderr: stats::standard_error(&products),
            });
        }
    }
    let normality = (0..m)
        .map(|j| {
            let var = model[j][j];
            if var > 1e-14 && top[j].len() >= stats::MIN_NORMALITY_SAMPLES {
                stats::normality_test(&top[j], var).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<AppResult<_>>()?;
    Ok(CltRecord { n_grid: cfg.n_grid.clone(), values, summary, normality, bogoliubov })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceRow {
    pub n: usize,
    pub lhs_times_n: f64,
    pub sigma_norm_sq: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct VarianceReport {
    pub rows: Vec<VarianceRow>,
    /// Slope of `log|gap|` against `log N`, when at least three gaps are
    /// nonzero.
    pub decay: Option<LinearFit>,
    /// `γ^(1)` at the largest `N`, for exact ground states.
    pub gamma1: Option<CMatrix>,
}

/// `N · variance_lhs` against `‖σ_g‖²` along the grid.
pub fn variance_comparison(cfg: &ExperimentConfig, g: &TestFunction) -> AppResult<VarianceReport> {
    let o = cfg.matrix_observable().ok_or_else(|| AppError::config("variance comparison needs a matrix observable"))?;
    let a0 = scattering_length(&cfg.potential)?;
    let sigma_norm_sq = l2_norm_sq(&sigma_f(o, &g.as_fn(), a0, &cfg.lattice)?);
    let single = ExperimentConfig { functions: vec![g.clone()], ..cfg.clone() };
    let mut rows = Vec::new();
    let mut gamma1 = None;
    for &n in &cfg.n_grid {
        let state = prepare(&single, n)?;
        let lhs_times_n = model_second_moments(&single, &state)?[0][0];
        rows.push(VarianceRow { n, lhs_times_n, sigma_norm_sq, gap: lhs_times_n - sigma_norm_sq });
        gamma1 = state.gamma1;
    }
    let nonzero: Vec<&VarianceRow> = rows.iter().filter(|r| r.gap != 0.0).collect();
    let decay = if nonzero.len() >= 3 {
        let x: Vec<f64> = nonzero.iter().map(|r| (r.n as f64).ln()).collect();
        let y: Vec<f64> = nonzero.iter().map(|r| r.gap.abs().ln()).collect();
        Some(stats::ols(&x, &y)?)
    } else {
        None
    };
    Ok(VarianceReport { rows, decay, gamma1 })
}
