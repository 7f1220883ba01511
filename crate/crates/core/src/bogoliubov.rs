//! Momentum lattice, spectral observables on plane-wave modes, the
//! fluctuation vectors `σ_f`, their covariance and the dressed quadratic
//! coefficients `F_p`, `G_p`, `τ_p`.
//!
//! Momenta are `p = 2π n` with `n ∈ Z³`. Plane waves `e^{ipx}` on the unit
//! torus are orthonormal, so the Fourier coefficient of `v` at `p` is simply
//! its coordinate on the mode `p`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::linalg::{dense_hermiticity_defect, hermitian_eigen, CMatrix};
use crate::scattering::RadialPotential;
use crate::{Error, Result};

pub type Mode = [i32; 3];

pub const ZERO_MODE: Mode = [0, 0, 0];

fn neg(n: Mode) -> Mode {
    [-n[0], -n[1], -n[2]]
}

fn norm_sq_int(n: Mode) -> i64 {
    n.iter().map(|&c| i64::from(c) * i64::from(c)).sum()
}

/// `|2π n|²`.
pub fn momentum_sq(n: Mode) -> f64 {
    4.0 * PI * PI * norm_sq_int(n) as f64
}

/// A point is a "positive representative" if its first nonzero coordinate
/// is positive.
fn is_positive(n: Mode) -> bool {
    n.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
}

/// Nonzero lattice momenta up to a cutoff, closed under `p -> -p`.
///
/// Points are ordered by `|n|²`; inside a shell, positive representatives
/// come in descending lexicographic order, each immediately followed by its
/// negative. Any even-length prefix is therefore again closed under
/// reflection.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumLattice {
    cutoff: f64,
    points: Vec<Mode>,
    partner: Vec<usize>,
    index: BTreeMap<Mode, usize>,
}

impl MomentumLattice {
    /// All `p ∈ 2πZ³` with `0 < |p| <= cutoff`.
    pub fn new(cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(Error::Domain(format!("lattice cutoff {cutoff} must be positive")));
        }
        let m = (cutoff / (2.0 * PI)).floor() as i32;
        let mut positive = Vec::new();
        for a in -m..=m {
            for b in -m..=m {
                for c in -m..=m {
                    let n = [a, b, c];
                    if is_positive(n) && momentum_sq(n).sqrt() <= cutoff * (1.0 + 1e-14) {
                        positive.push(n);
                    }
                }
            }
        }
        positive.sort_by(|x, y| norm_sq_int(*x).cmp(&norm_sq_int(*y)).then_with(|| y.cmp(x)));
        let mut points = Vec::with_capacity(2 * positive.len());
        for n in positive {
            points.push(n);
            points.push(neg(n));
        }
        Ok(Self::from_ordered(cutoff, points))
    }

    fn from_ordered(cutoff: f64, points: Vec<Mode>) -> Self {
        let index: BTreeMap<Mode, usize> = points.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let partner = points.iter().map(|&n| index[&neg(n)]).collect();
        Self { cutoff, points, partner, index }
    }

    /// An explicit point set; it must avoid 0, have no repeats and be closed
    /// under reflection.
    pub fn from_points(points: Vec<Mode>) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for (i, &n) in points.iter().enumerate() {
            if n == ZERO_MODE {
                return Err(Error::InvalidModes("the zero momentum is not a lattice point".into()));
            }
            if seen.insert(n, i).is_some() {
                return Err(Error::InvalidModes(format!("repeated lattice point {n:?}")));
            }
        }
        if let Some(&n) = points.iter().find(|&&n| !seen.contains_key(&neg(n))) {
            return Err(Error::UnpairedMode(n));
        }
        let cutoff = points.iter().map(|&n| momentum_sq(n).sqrt()).fold(0.0, f64::max);
        Ok(Self::from_ordered(cutoff, points))
    }

    /// The first `count` points in lattice order; `count` must be even.
    pub fn truncated(&self, count: usize) -> Result<Self> {
        if count % 2 == 1 || count > self.points.len() {
            return Err(Error::InvalidModes(format!(
                "cannot keep {count} of {} points without splitting a ±p pair",
                self.points.len()
            )));
        }
        Self::from_points(self.points[..count].to_vec())
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn indices(&self) -> core::ops::Range<usize> {
        0..self.points.len()
    }

    pub fn points(&self) -> &[Mode] {
        &self.points
    }

    pub fn point(&self, i: usize) -> Mode {
        self.points[i]
    }

    /// Index of `-p`.
    pub fn partner(&self, i: usize) -> usize {
        self.partner[i]
    }

    pub fn index_of(&self, n: Mode) -> Option<usize> {
        self.index.get(&n).copied()
    }

    pub fn norm_sq_int(&self, i: usize) -> i64 {
        norm_sq_int(self.points[i])
    }

    pub fn norm_sq(&self, i: usize) -> f64 {
        momentum_sq(self.points[i])
    }

    pub fn norm(&self, i: usize) -> f64 {
        self.norm_sq(i).sqrt()
    }

    /// Zero mode followed by the lattice points: the plane-wave mode list of
    /// a truncated one-particle space.
    pub fn mode_list(&self) -> Vec<Mode> {
        let mut modes = Vec::with_capacity(self.points.len() + 1);
        modes.push(ZERO_MODE);
        modes.extend_from_slice(&self.points);
        modes
    }
}

/// Eigenvalues closer than this are one spectral atom.
pub const EIGENVALUE_MERGE_TOL: f64 = 1e-9;

/// A Hermitian one-particle observable on finitely many plane-wave modes.
#[derive(Debug, Clone)]
pub struct SpectralObservable {
    modes: Vec<Mode>,
    matrix: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
    /// Eigen-indices grouped into atoms, with the atom value.
    atoms: Vec<(f64, Vec<usize>)>,
    zero_index: usize,
}

impl SpectralObservable {
    pub fn new(modes: Vec<Mode>, matrix: CMatrix) -> Result<Self> {
        let d = modes.len();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: matrix.nrows() });
        }
        let zero_index = modes
            .iter()
            .position(|&n| n == ZERO_MODE)
            .ok_or_else(|| Error::InvalidModes("mode list lacks the zero mode".into()))?;
        let mut sorted = modes.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidModes("repeated plane-wave mode".into()));
        }
        let defect = dense_hermiticity_defect(&matrix);
        if defect > 1e-12 {
            return Err(Error::NotHermitian(defect));
        }
        let (eigenvalues, eigenvectors) = hermitian_eigen(&matrix);
        let mut atoms: Vec<(f64, Vec<usize>)> = Vec::new();
        for (k, &lam) in eigenvalues.iter().enumerate() {
            match atoms.last_mut() {
                Some((_, idx)) if lam - eigenvalues[*idx.last().unwrap()] <= EIGENVALUE_MERGE_TOL => idx.push(k),
                _ => atoms.push((lam, alloc::vec![k])),
            }
        }
        for (value, idx) in atoms.iter_mut() {
            *value = idx.iter().map(|&k| eigenvalues[k]).sum::<f64>() / idx.len() as f64;
        }
        Ok(Self { modes, matrix, eigenvalues, eigenvectors, atoms, zero_index })
    }

    /// Diagonal in plane waves: `O e_{n_k} = values[k] e_{n_k}`.
    pub fn diagonal(modes: Vec<Mode>, values: &[f64]) -> Result<Self> {
        if values.len() != modes.len() {
            return Err(Error::DimensionMismatch { expected: modes.len(), found: values.len() });
        }
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            values.len(),
            values.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        Self::new(modes, m)
    }

    /// Multiplication by `Σ_i a_i cos(2π x_i)` compressed to `modes`. Each
    /// cosine couples `n` and `n ± e_i` with weight `a_i / 2`.
    pub fn multiplication_cosine(modes: Vec<Mode>, amplitudes: [f64; 3]) -> Result<Self> {
        let d = modes.len();
        let mut m = CMatrix::zeros(d, d);
        for (r, nr) in modes.iter().enumerate() {
            for (c, nc) in modes.iter().enumerate() {
                let diff = [nr[0] - nc[0], nr[1] - nc[1], nr[2] - nc[2]];
                for (axis, &a) in amplitudes.iter().enumerate() {
                    let mut unit = [0; 3];
                    unit[axis] = 1;
                    if diff == unit || diff == neg(unit) {
                        m[(r, c)] += Complex64::new(a / 2.0, 0.0);
                    }
                }
            }
        }
        Self::new(modes, m)
    }

    pub fn dimension(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode_index(&self, n: Mode) -> Option<usize> {
        self.modes.iter().position(|&m| m == n)
    }

    pub fn zero_index(&self) -> usize {
        self.zero_index
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are orthonormal eigenvectors, matching `eigenvalues`.
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    /// Distinct spectral atoms (merged within [`EIGENVALUE_MERGE_TOL`]) and
    /// the eigen-indices spanning each eigenspace.
    pub fn atoms(&self) -> &[(f64, Vec<usize>)] {
        &self.atoms
    }

    /// Atom value for eigen-index `k`.
    pub fn atom_value(&self, k: usize) -> f64 {
        self.atoms.iter().find(|(_, idx)| idx.contains(&k)).map(|(v, _)| *v).unwrap()
    }

    /// `f(O) = Σ_atoms f(λ) P_λ`.
    pub fn functional_calculus(&self, f: &dyn Fn(f64) -> f64) -> CMatrix {
        let d = self.dimension();
        let mut out = CMatrix::zeros(d, d);
        for (value, idx) in &self.atoms {
            let fv = Complex64::new(f(*value), 0.0);
            for &k in idx {
                let col = self.eigenvectors.column(k);
                out += col * col.adjoint() * fv;
            }
        }
        out
    }

    /// Defect of `Q diag(λ) Q† = O`.
    pub fn reconstruction_defect(&self) -> f64 {
        let lam = nalgebra::DVector::from_iterator(
            self.dimension(),
            self.eigenvalues.iter().map(|&v| Complex64::new(v, 0.0)),
        );
        let rebuilt = &self.eigenvectors * CMatrix::from_diagonal(&lam) * self.eigenvectors.adjoint();
        (rebuilt - &self.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// `μ_p = ¼ ln(p² / (p² + 16π a0))`.
pub fn mu(a0: f64, p_sq: f64) -> Result<f64> {
    if !(p_sq > 0.0) {
        return Err(Error::Domain("mu is undefined at p = 0".into()));
    }
    if !(a0 >= 0.0) {
        return Err(Error::Domain(format!("scattering length {a0} must be >= 0")));
    }
    // ln(1/(1+x)) without cancellation for small x.
    Ok(-0.25 * (16.0 * PI * a0 / p_sq).ln_1p())
}

/// `μ_p` on every lattice point.
pub fn mu_on_lattice(a0: f64, lattice: &MomentumLattice) -> Result<Vec<f64>> {
    lattice.indices().map(|i| mu(a0, lattice.norm_sq(i))).collect()
}

/// Plane-wave coefficients of `f(O) φ`, indexed like `O.modes()`.
pub fn applied_to_condensate(o: &SpectralObservable, f: &dyn Fn(f64) -> f64) -> Vec<Complex64> {
    o.functional_calculus(f).column(o.zero_index()).iter().copied().collect()
}

/// `σ_f(p) = cosh(μ_p) v(p) + sinh(μ_p) v(-p)` with `v = q f(O) φ`, on
/// every lattice point. The `(-p)` coefficient enters without complex
/// conjugation.
pub fn sigma_f(
    o: &SpectralObservable,
    f: &dyn Fn(f64) -> f64,
    a0: f64,
    lattice: &MomentumLattice,
) -> Result<Vec<Complex64>> {
    let v = applied_to_condensate(o, f);
    let mut slot = Vec::with_capacity(lattice.len());
    for &n in lattice.points() {
        slot.push(o.mode_index(n).ok_or(Error::MissingMode(n))?);
    }
    lattice
        .indices()
        .map(|i| {
            let m = mu(a0, lattice.norm_sq(i))?;
            let vp = v[slot[i]];
            let vm = v[slot[lattice.partner(i)]];
            Ok(vp * m.cosh() + vm * m.sinh())
        })
        .collect()
}

/// Covariance of the limiting Gaussian vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariance {
    /// `Re ⟨σ_i, σ_j⟩`.
    pub sigma: DMatrix<f64>,
    /// `Im ⟨σ_i, σ_j⟩`, kept for reporting.
    pub imaginary: DMatrix<f64>,
}

impl Covariance {
    /// Smallest eigenvalue of `sigma`.
    pub fn min_eigenvalue(&self) -> f64 {
        if self.sigma.nrows() == 0 {
            return 0.0;
        }
        self.sigma.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Gram matrix `⟨σ_i, σ_j⟩ = Σ_p conj(σ_i(p)) σ_j(p)`, split into real and
/// imaginary parts.
pub fn covariance_matrix(sigmas: &[Vec<Complex64>]) -> Result<Covariance> {
    let m = sigmas.len();
    let len = sigmas.first().map_or(0, Vec::len);
    if let Some(bad) = sigmas.iter().find(|s| s.len() != len) {
        return Err(Error::DimensionMismatch { expected: len, found: bad.len() });
    }
    let mut sigma = DMatrix::zeros(m, m);
    let mut imaginary = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let g: Complex64 = sigmas[i].iter().zip(&sigmas[j]).map(|(a, b)| a.conj() * b).sum();
            sigma[(i, j)] = g.re;
            sigma[(j, i)] = g.re;
            imaginary[(i, j)] = g.im;
            imaginary[(j, i)] = -g.im;
        }
    }
    Ok(Covariance { sigma, imaginary })
}

pub fn l2_norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Coefficients of the diagonalized quadratic term.
#[derive(Debug, Clone, PartialEq)]
pub struct DressedDispersion {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub tau: Vec<f64>,
    pub tau_l2: f64,
    pub tau_linf: f64,
}

/// `(V̂(·/N) * f̂_{N,ℓ})_p` by direct summation over the truncated lattice,
/// with `f̂_{N,ℓ}(q) = δ_{q,0} + η_q / N`. `eta_zero` is the `q = 0`
/// coefficient `-ŵ_ℓ(0)/N²`.
pub fn convolution(
    potential: &RadialPotential,
    eta: &[f64],
    eta_zero: f64,
    lattice: &MomentumLattice,
    n_particles: usize,
) -> Result<Vec<f64>> {
    if eta.len() != lattice.len() {
        return Err(Error::DimensionMismatch { expected: lattice.len(), found: eta.len() });
    }
    let n = n_particles as f64;
    let mut cache: BTreeMap<i64, f64> = BTreeMap::new();
    let mut v_hat =
        |diff: Mode| *cache.entry(norm_sq_int(diff)).or_insert_with(|| potential.fourier(momentum_sq(diff).sqrt() / n));
    Ok(lattice
        .indices()
        .map(|i| {
            let p = lattice.point(i);
            let mut acc = v_hat(p) * (1.0 + eta_zero / n);
            for (j, &q) in lattice.points().iter().enumerate() {
                acc += v_hat([p[0] - q[0], p[1] - q[1], p[2] - q[2]]) * eta[j] / n;
            }
            acc
        })
        .collect())
}

/// `F_p`, `G_p` and `τ_p = ½ artanh(-G_p/F_p)` from `η` and the convolution
/// values `W_p`.
pub fn dressed_dispersion(eta: &[f64], w: &[f64], lattice: &MomentumLattice) -> Result<DressedDispersion> {
    for len in [eta.len(), w.len()] {
        if len != lattice.len() {
            return Err(Error::DimensionMismatch { expected: lattice.len(), found: len });
        }
    }
    let mut out = DressedDispersion {
        f: Vec::with_capacity(lattice.len()),
        g: Vec::with_capacity(lattice.len()),
        tau: Vec::with_capacity(lattice.len()),
        tau_l2: 0.0,
        tau_linf: 0.0,
    };
    for i in lattice.indices() {
        let p2 = lattice.norm_sq(i);
        let (s, c) = (eta[i].sinh(), eta[i].cosh());
        let f = p2 * (s * s + c * c) + w[i] * (s + c) * (s + c);
        let g = p2 * s * c + w[i] * (s + c) * (s + c);
        if !(g.abs() < f) {
            return Err(Error::UnstableDispersion { p: lattice.point(i), f, g });
        }
        let tau = 0.5 * (-g / f).atanh();
        out.f.push(f);
        out.g.push(g);
        out.tau.push(tau);
        out.tau_l2 += tau * tau;
        out.tau_linf = out.tau_linf.max(tau.abs());
    }
    out.tau_l2 = out.tau_l2.sqrt();
    Ok(out)
}
