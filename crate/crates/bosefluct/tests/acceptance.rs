//! The eight acceptance criteria, each at its stated tolerance. Prints one
//! PASS/FAIL line per criterion and fails if any criterion fails.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use bosefluct::config::StateKind;
use bosefluct::experiments::{clt_run, lln_run, scaling_fit, variance_comparison, ExperimentConfig, ObservableSpec};
use bosefluct::functions::TestFunction;
use bosefluct::io::{self, OutputDir};
use bosefluct::stats;
use bosefluct_core::bogoliubov::{MomentumLattice, SpectralObservable};
use bosefluct_core::fockspace::{
    excitation_map, hopping, modified_b, modified_b_mode, modified_bstar, modified_bstar_mode, number_plus,
    second_quantize, FockVector, OccupationBasis,
};
use bosefluct_core::linalg::{self, CMatrix, SparseMatrix};
use bosefluct_core::ot1d::{wasserstein_1_cdf, wasserstein_p, DiscreteMeasure};
use bosefluct_core::quantum_sim::{
    centered_function, fluctuation_parts, model_state, variance_lhs, MeasurementSampler, ModelKind,
};
use bosefluct_core::scattering::{scattering_length_integral, solve_zero_energy, RadialPotential};
use bosefluct_core::Complex64;
use bosefluct_testkit::{joint_law, transport_lp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20261016;

struct Outcome {
    pass: bool,
    detail: String,
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    let m = CMatrix::from_fn(d, d, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&m + m.adjoint()) * c(0.5)
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

fn transport() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (m, n) = (rng.random_range(1..=12), rng.random_range(1..=12));
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let (wx, wy) = (random_weights(&mut rng, m), random_weights(&mut rng, n));
        let (mx, my) = (DiscreteMeasure::new(&x, &wx).unwrap(), DiscreteMeasure::new(&y, &wy).unwrap());
        let cdf = wasserstein_1_cdf(&mx, &my);
        let quantile = wasserstein_p(&mx, &my, 1.0).unwrap();
        let lp = transport_lp(&x, &wx, &y, &wy, 1.0);
        worst = worst.max((cdf - quantile).abs()).max((cdf - lp).abs());
    }
    let t = start.elapsed();
    Outcome {
        pass: worst <= 1e-10 && t < Duration::from_secs(10),
        detail: format!("max disagreement {worst:.1e} over 1000 pairs in {t:.2?}"),
    }
}

fn scattering() -> Outcome {
    let (mut worst_a0, mut worst_gap): (f64, f64) = (0.0, 0.0);
    for v0 in [0.1, 0.7, 2.0, 5.0, 12.0] {
        for r in [0.25, 0.8, 1.0, 2.0] {
            let v = RadialPotential::soft_sphere(v0, r).unwrap();
            let sol = solve_zero_energy(&v, 4.0 * r, 64).unwrap();
            let kappa = (v0 / 2.0).sqrt();
            let exact = r * (1.0 - (kappa * r).tanh() / (kappa * r));
            worst_a0 = worst_a0.max((sol.a0 - exact).abs() / exact);
            let integral = scattering_length_integral(&sol, &v).unwrap();
            worst_gap = worst_gap.max((integral - sol.a0).abs() / sol.a0);
        }
    }
    Outcome {
        pass: worst_a0 <= 1e-8 && worst_gap <= 1e-6,
        detail: format!("closed form rel. error {worst_a0:.1e}, integral vs slope {worst_gap:.1e} over 20 pairs"),
    }
}

fn operator_identities() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    // Modified commutators on the truncated excitation space.
    for modes in 1..=4 {
        for n in 1..=8 {
            let b = OccupationBasis::truncated(modes, n).unwrap();
            let nplus = number_plus(&b).matrix;
            let id = SparseMatrix::identity(b.dim());
            let nf = n as f64;
            for p in 0..modes {
                let bp = modified_b_mode(&b, p).unwrap().matrix;
                for q in 0..modes {
                    let bsq = modified_bstar_mode(&b, q).unwrap().matrix;
                    let bq = modified_b_mode(&b, q).unwrap().matrix;
                    let mut rhs = hopping(&b, q, p).unwrap().matrix.scale(c(-1.0 / nf));
                    if p == q {
                        rhs = rhs.add(&id.axpy(c(-1.0 / nf), &nplus));
                    }
                    worst = worst.max(bp.commutator(&bsq).defect(&rhs)).max(bp.commutator(&bq).max_abs());
                }
            }
        }
    }
    // Conjugation by the excitation map.
    for d in 2..=5 {
        for n in 1..=8 {
            let fixed = OccupationBasis::fixed(d, n).unwrap();
            let exc = OccupationBasis::truncated(d - 1, n).unwrap();
            let u = excitation_map(&fixed, &exc).unwrap().matrix;
            let ut = u.adjoint();
            let conj = |m: &SparseMatrix| u.mul(m).mul(&ut);
            let nf = n as f64;
            let rhs = SparseMatrix::identity(exc.dim()).scale(c(nf)).sub(&number_plus(&exc).matrix);
            worst = worst.max(conj(&hopping(&fixed, 0, 0).unwrap().matrix).defect(&rhs));
            for p in 1..d {
                let rhs = modified_bstar_mode(&exc, p - 1).unwrap().matrix.scale(c(nf.sqrt()));
                worst = worst.max(conj(&hopping(&fixed, p, 0).unwrap().matrix).defect(&rhs));
                let rhs = modified_b_mode(&exc, p - 1).unwrap().matrix.scale(c(nf.sqrt()));
                worst = worst.max(conj(&hopping(&fixed, 0, p).unwrap().matrix).defect(&rhs));
                for q in 1..d {
                    let rhs = hopping(&exc, p - 1, q - 1).unwrap().matrix;
                    worst = worst.max(conj(&hopping(&fixed, p, q).unwrap().matrix).defect(&rhs));
                }
            }
        }
    }
    // U dΓ(g̃(O)) U* = √N b(h) + √N b*(h) + dΓ(H), and the vacuum field square.
    let g = |x: f64| (2.0 * x).sin() + 0.5 * x * x;
    for points in [vec![[1, 0, 0], [-1, 0, 0]], vec![[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]]] {
        let lat = MomentumLattice::from_points(points).unwrap();
        let d = lat.len() + 1;
        let o = SpectralObservable::multiplication_cosine(lat.mode_list(), [1.0, 0.6, 0.0]).unwrap();
        let (h, big_h) = fluctuation_parts(&o, &g).unwrap();
        for n in 1..=8 {
            let fixed = OccupationBasis::fixed(d, n).unwrap();
            let exc = Arc::new(OccupationBasis::truncated(d - 1, n).unwrap());
            let u = excitation_map(&fixed, &exc).unwrap().matrix;
            let lhs = u.mul(&second_quantize(&fixed, &centered_function(&o, &g)).unwrap().matrix).mul(&u.adjoint());
            let sn = c((n as f64).sqrt());
            let field = modified_b(&exc, &h).unwrap().matrix.add(&modified_bstar(&exc, &h).unwrap().matrix);
            let rhs = field.scale(sn).add(&second_quantize(&exc, &big_h).unwrap().matrix);
            worst = worst.max(lhs.defect(&rhs));
            let vac = FockVector::vacuum(exc.clone()).unwrap();
            let once = field.mul_vec(&vac.amplitudes);
            let h2: f64 = h.iter().map(|z| z.norm_sqr()).sum();
            worst = worst.max((linalg::inner(&once, &once).re - h2).abs());
        }
    }
    let t = start.elapsed();
    Outcome {
        pass: worst <= 1e-10 && t < Duration::from_secs(60),
        detail: format!("max defect {worst:.1e} for d <= 5, N <= 8 in {t:.2?}"),
    }
}

fn joint_law_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let draws = 100_000;
    let mut worst_z: f64 = 0.0;
    for n in [2usize, 3] {
        let basis = Arc::new(OccupationBasis::fixed(2, n).unwrap());
        let amps = (0..basis.dim())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut psi = FockVector::new(basis, amps).unwrap();
        psi.normalize();
        let o = SpectralObservable::new(vec![[0, 0, 0], [1, 0, 0]], random_hermitian(&mut rng, 2)).unwrap();
        let (atoms, law) = joint_law(&psi.amplitudes, o.matrix(), n);
        let sampler = MeasurementSampler::new(&psi, &o).unwrap();
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for _ in 0..draws {
            let y = sampler.sample(&mut rng);
            let mut idx: Vec<usize> = y
                .iter()
                .map(|v| atoms.iter().position(|a| (a - v).abs() < 1e-9).expect("outcome is an eigenvalue"))
                .collect();
            idx.sort_unstable();
            *counts.entry(idx).or_default() += 1;
        }
        for (pattern, p) in &law {
            let freq = *counts.get(pattern).unwrap_or(&0) as f64 / draws as f64;
            let sigma = (p * (1.0 - p) / draws as f64).sqrt();
            if sigma > 0.0 {
                worst_z = worst_z.max((freq - p).abs() / sigma);
            } else if freq != *p {
                worst_z = f64::INFINITY;
            }
        }
    }
    Outcome { pass: worst_z <= 4.0, detail: format!("largest cell deviation {worst_z:.2} sigma (N = 2, 3; d = 2)") }
}

fn three_atom_law() -> DiscreteMeasure {
    DiscreteMeasure::new(&[-1.0, 0.3, 2.0], &[0.25, 0.45, 0.3]).unwrap()
}

fn lln_scaling() -> Outcome {
    let start = Instant::now();
    let grid: Vec<usize> = (4..=10).map(|k| 1usize << k).collect();
    let cfg = ExperimentConfig::iid(three_atom_law(), grid, 2000, SEED);
    let rec = lln_run(&cfg).unwrap();
    let fit = scaling_fit(&rec).unwrap();
    let t = start.elapsed();
    let slope = fit.fit.slope;
    Outcome {
        pass: (-0.6..=-0.4).contains(&slope) && fit.top_half_spread < 0.2 && t < Duration::from_secs(300),
        detail: format!(
            "slope {slope:.4} (95% CI {:.4}..{:.4}), sqrt(N) E[W1] spread {:.1}% over the top half, {t:.2?}",
            fit.fit.ci.0,
            fit.fit.ci.1,
            100.0 * fit.top_half_spread
        ),
    }
}

fn one_mode_pair() -> MomentumLattice {
    MomentumLattice::from_points(vec![[1, 0, 0], [-1, 0, 0]]).unwrap()
}

fn clt_pipeline() -> Outcome {
    // Product state, f = identity: cos(2πx) on {0, ±e1} gives the symmetric
    // law ν_φ = (δ_{-1/√2} + δ_{1/√2}) / 2.
    let lattice = one_mode_pair();
    let o = SpectralObservable::multiplication_cosine(lattice.mode_list(), [1.0, 0.0, 0.0]).unwrap();
    let base = ExperimentConfig {
        state: StateKind::Product,
        lattice,
        observable: ObservableSpec::Matrix(o),
        ..ExperimentConfig::iid(three_atom_law(), vec![4096], 200, SEED)
    };
    let mut passes = 0;
    let mut pooled = Vec::new();
    let mut var_model = 0.0;
    for run in 0..100 {
        let cfg = ExperimentConfig { seed: SEED + run, ..base.clone() };
        let rec = clt_run(&cfg).unwrap();
        if rec.normality[0].expect("normality test ran").p_value >= 0.01 {
            passes += 1;
        }
        var_model = rec.summary[0].sigma_model;
        pooled.extend(rec.values[0][0].iter().map(|s| s * s));
    }
    let (m2, se) = (stats::mean(&pooled), stats::standard_error(&pooled));
    let product_ok = passes >= 98 && (m2 - var_model).abs() <= 3.0 * se;

    // Quasifree state: second moment of the statistic against the exact
    // quadratic form N · variance_lhs.
    let lattice = MomentumLattice::new(2.0 * PI).unwrap();
    let o = SpectralObservable::multiplication_cosine(lattice.mode_list(), [1.0, 0.5, 0.25]).unwrap();
    let n = 10;
    let cfg = ExperimentConfig {
        state: StateKind::Quasifree,
        potential: RadialPotential::soft_sphere(2.0, 1.0).unwrap(),
        lattice: lattice.clone(),
        observable: ObservableSpec::Matrix(o.clone()),
        ..ExperimentConfig::iid(three_atom_law(), vec![n], 4000, SEED)
    };
    let rec = clt_run(&cfg).unwrap();
    let (_, tau) = bosefluct::experiments::bogoliubov_coefficients(&cfg, n).unwrap();
    let tau_max = tau.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let psi = model_state(&ModelKind::Quasifree { tau }, &lattice, n).unwrap();
    let exact = n as f64 * variance_lhs(&psi, &o, &|x| x).unwrap();
    let row = &rec.summary[0];
    let quasifree_ok = (row.sigma_sample - exact).abs() <= 3.0 * row.stderr;
    Outcome {
        pass: product_ok && quasifree_ok,
        detail: format!(
            "product: {passes}/100 normality passes, E[s^2] {m2:.5} vs Var {var_model:.5} (3 SE = {:.5}); \
             quasifree (max |tau| {tau_max:.3}): {:.5} vs N*variance_lhs {exact:.5} (3 SE = {:.5})",
            3.0 * se,
            row.sigma_sample,
            3.0 * row.stderr
        ),
    }
}

fn variance_formula() -> Outcome {
    let lattice = MomentumLattice::new(2.0 * PI).unwrap();
    let o = SpectralObservable::multiplication_cosine(lattice.mode_list(), [1.0, 0.5, 0.25]).unwrap();
    let base = ExperimentConfig {
        lattice,
        observable: ObservableSpec::Matrix(o),
        ..ExperimentConfig::iid(three_atom_law(), vec![4, 6, 8, 10], 2, SEED)
    };
    let mut free_gap: f64 = 0.0;
    for state in [StateKind::Product, StateKind::ExactGroundState] {
        let cfg = ExperimentConfig { state, potential: RadialPotential::zero(), ..base.clone() };
        for g in [TestFunction::Identity, TestFunction::Square, TestFunction::Indicator(0.1)] {
            for r in variance_comparison(&cfg, &g).unwrap().rows {
                free_gap = free_gap.max(r.gap.abs());
            }
        }
    }
    let cfg = ExperimentConfig {
        state: StateKind::ExactGroundState,
        potential: RadialPotential::soft_sphere(0.5, 1.0).unwrap(),
        ..base
    };
    let gaps: Vec<f64> =
        variance_comparison(&cfg, &TestFunction::Identity).unwrap().rows.iter().map(|r| r.gap).collect();
    let decreasing = gaps.windows(2).all(|w| w[1].abs() < w[0].abs());
    let shown: Vec<String> = gaps.iter().map(|g| format!("{g:.3e}")).collect();
    Outcome {
        pass: free_gap <= 1e-10 && decreasing,
        detail: format!(
            "V = 0 gap {free_gap:.1e}; soft sphere V0 = 0.5, R = 1 gaps over N = 4..10: {}",
            shown.join(", ")
        ),
    }
}

fn csv_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let lattice = one_mode_pair();
    let o = SpectralObservable::multiplication_cosine(lattice.mode_list(), [1.0, 0.0, 0.0]).unwrap();
    let cfg = ExperimentConfig {
        state: StateKind::ExactGroundState,
        potential: RadialPotential::soft_sphere(2.0, 1.0).unwrap(),
        lattice,
        observable: ObservableSpec::Matrix(o),
        functions: vec![TestFunction::Identity, TestFunction::Indicator(0.0)],
        keep_samples: true,
        ..ExperimentConfig::iid(three_atom_law(), vec![3, 5, 8], 300, SEED)
    };
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in [1, 2, 8] {
        let dir = tmp.path().join(format!("t{threads}"));
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let out = OutputDir::create(&dir).unwrap();
            io::write_lln(&out, &lln_run(&cfg).unwrap()).unwrap();
            io::write_clt(&out, &clt_run(&cfg).unwrap()).unwrap();
            io::write_variance(&out, &variance_comparison(&cfg, &TestFunction::Identity).unwrap()).unwrap();
        });
        outputs.push(csv_bytes(&dir));
    }
    let identical = outputs.windows(2).all(|w| w[0] == w[1]);
    Outcome {
        pass: identical && outputs[0].len() >= 7,
        detail: format!("{} CSV files byte-identical across 1, 2 and 8 threads: {identical}", outputs[0].len()),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("transport oracle equivalence", transport),
        ("scattering length", scattering),
        ("operator identities", operator_identities),
        ("joint law exactness", joint_law_exactness),
        ("LLN scaling", lln_scaling),
        ("CLT pipeline", clt_pipeline),
        ("variance formula", variance_formula),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {} ({name}): {}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
