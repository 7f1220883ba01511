//! CSV and text outputs. Floats are written with Rust's shortest
//! round-trip formatting and LF line endings, so files are reproducible
//! byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use bosefluct_core::bogoliubov::{Covariance, MomentumLattice};
use bosefluct_core::linalg::CMatrix;
use bosefluct_core::scattering::ScatteringSolution;
use bosefluct_core::Complex64;

use crate::error::{AppError, AppResult};
use crate::experiments::{CltRecord, LlnRecord, VarianceReport};

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> AppResult<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|source| AppError::Io { path: root.clone(), source })?;
        Ok(Self { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> AppResult<PathBuf> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|source| AppError::Io { path: path.clone(), source })?;
        Ok(path)
    }

    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> AppResult<PathBuf> {
        let path = self.path(name);
        let err = |source| AppError::Csv { path: path.clone(), source };
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(&path).map_err(err)?;
        w.write_record(header).map_err(err)?;
        for row in rows {
            w.write_record(row).map_err(err)?;
        }
        w.flush().map_err(|source| AppError::Io { path: path.clone(), source })?;
        Ok(path)
    }
}

fn s<T: ToString>(v: T) -> String {
    v.to_string()
}

pub fn write_lln(out: &OutputDir, rec: &LlnRecord) -> AppResult<Vec<PathBuf>> {
    let rows: Vec<Vec<String>> = rec
        .rows
        .iter()
        .map(|r| {
            vec![s(r.n), s(r.replicas), s(r.delta), s(r.p_exceed), s(r.mean_w1), s(r.stderr_w1), s(r.sqrt_n_mean_w1)]
        })
        .collect();
    let mut paths = vec![out.write_csv(
        "lln_results.csv",
        &["N", "replicas", "delta", "p_exceed", "mean_w1", "stderr_w1", "sqrtN_mean_w1"],
        &rows,
    )?];
    for (n, samples) in &rec.samples {
        let rows: Vec<Vec<String>> = samples
            .iter()
            .enumerate()
            .flat_map(|(r, y)| y.iter().enumerate().map(move |(i, v)| vec![s(r), s(i), s(v)]))
            .collect();
        paths.push(out.write_csv(&format!("samples_N{n}.csv"), &["replica", "particle_index", "outcome"], &rows)?);
    }
    Ok(paths)
}

pub fn write_clt(out: &OutputDir, rec: &CltRecord) -> AppResult<Vec<PathBuf>> {
    let mut rows = Vec::new();
    for (n, per_j) in rec.n_grid.iter().zip(&rec.values) {
        for (j, vals) in per_j.iter().enumerate() {
            for (r, v) in vals.iter().enumerate() {
                rows.push(vec![s(n), s(r), s(j), s(v)]);
            }
        }
    }
    let mut paths = vec![out.write_csv("clt_samples.csv", &["N", "replica", "j", "value"], &rows)?];
    let rows: Vec<Vec<String>> =
        rec.summary.iter().map(|r| vec![s(r.j), s(r.k), s(r.sigma_model), s(r.sigma_sample), s(r.stderr)]).collect();
    paths.push(out.write_csv("clt_summary.csv", &["j", "k", "sigma_model", "sigma_sample", "stderr"], &rows)?);
    let rows: Vec<Vec<String>> = rec
        .normality
        .iter()
        .enumerate()
        .map(|(j, t)| match t {
            Some(t) => vec![s(j), s(t.statistic), s(t.p_value)],
            None => vec![s(j), String::new(), String::new()],
        })
        .collect();
    paths.push(out.write_csv("clt_normality.csv", &["j", "ks_statistic", "p_value"], &rows)?);
    if let Some(cov) = &rec.bogoliubov {
        paths.push(write_covariance(out, "clt_bogoliubov.csv", cov)?);
    }
    Ok(paths)
}

pub fn write_covariance(out: &OutputDir, name: &str, cov: &Covariance) -> AppResult<PathBuf> {
    let m = cov.sigma.nrows();
    let mut rows = Vec::new();
    for j in 0..m {
        for k in 0..m {
            rows.push(vec![s(j), s(k), s(cov.sigma[(j, k)]), s(cov.imaginary[(j, k)])]);
        }
    }
    out.write_csv(name, &["j", "k", "sigma", "imaginary"], &rows)
}

pub fn write_sigma(
    out: &OutputDir,
    lattice: &MomentumLattice,
    mu: &[f64],
    sigmas: &[Vec<Complex64>],
) -> AppResult<PathBuf> {
    let mut rows = Vec::new();
    for (j, sig) in sigmas.iter().enumerate() {
        for (i, z) in sig.iter().enumerate() {
            let p = lattice.point(i);
            rows.push(vec![s(j), s(p[0]), s(p[1]), s(p[2]), s(lattice.norm(i)), s(mu[i]), s(z.re), s(z.im)]);
        }
    }
    out.write_csv("sigma.csv", &["j", "p1", "p2", "p3", "abs_p", "mu", "re", "im"], &rows)
}

pub fn write_variance(out: &OutputDir, rep: &VarianceReport) -> AppResult<Vec<PathBuf>> {
    let rows: Vec<Vec<String>> =
        rep.rows.iter().map(|r| vec![s(r.n), s(r.lhs_times_n), s(r.sigma_norm_sq), s(r.gap)]).collect();
    let mut paths = vec![out.write_csv("variance_report.csv", &["N", "lhs_times_N", "sigma_norm_sq", "gap"], &rows)?];
    if let Some(g) = &rep.gamma1 {
        paths.push(write_matrix(out, "gamma1.csv", g)?);
    }
    Ok(paths)
}

pub fn write_matrix(out: &OutputDir, name: &str, m: &CMatrix) -> AppResult<PathBuf> {
    let mut rows = Vec::new();
    for k in 0..m.nrows() {
        for l in 0..m.ncols() {
            rows.push(vec![s(k), s(l), s(m[(k, l)].re), s(m[(k, l)].im)]);
        }
    }
    out.write_csv(name, &["k", "l", "re", "im"], &rows)
}

pub fn write_scattering(out: &OutputDir, sol: &ScatteringSolution, a0_integral: f64) -> AppResult<Vec<PathBuf>> {
    let v = sol.potential_values();
    let rows: Vec<Vec<String>> = sol.r.iter().zip(&sol.f).zip(&v).map(|((r, f), v)| vec![s(r), s(f), s(v)]).collect();
    let csv = out.write_csv("scattering.csv", &["r", "f", "V"], &rows)?;
    let text = format!(
        "a0_tail {}\na0_integral {}\ndifference {}\nresidual {}\n",
        sol.a0,
        a0_integral,
        (sol.a0 - a0_integral).abs(),
        sol.residual
    );
    Ok(vec![csv, out.write_text("a0.txt", &text)?])
}

/// Reads a `k,l,re,im` table into a square matrix. Missing entries are
/// zero.
pub fn read_matrix(path: &Path) -> AppResult<CMatrix> {
    let err = |source| AppError::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(err)?;
    let headers = reader.headers().map_err(err)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["k", "l", "re", "im"] {
        return Err(AppError::config(format!("{}: expected header k,l,re,im", path.display())));
    }
    let mut entries = Vec::new();
    let mut dim = 0;
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(err)?;
        let bad = || AppError::config(format!("{}: malformed row {}", path.display(), line + 2));
        let k: usize = rec[0].parse().map_err(|_| bad())?;
        let l: usize = rec[1].parse().map_err(|_| bad())?;
        let re: f64 = rec[2].parse().map_err(|_| bad())?;
        let im: f64 = rec[3].parse().map_err(|_| bad())?;
        if !re.is_finite() || !im.is_finite() {
            return Err(bad());
        }
        dim = dim.max(k + 1).max(l + 1);
        entries.push((k, l, Complex64::new(re, im)));
    }
    let mut m = CMatrix::zeros(dim, dim);
    for (k, l, z) in entries {
        m[(k, l)] = z;
    }
    Ok(m)
}
