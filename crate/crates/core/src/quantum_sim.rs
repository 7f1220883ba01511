//! Torus Hamiltonians on a truncated plane-wave basis, ground states,
//! one-particle reduced densities, model states and exact sampling of the
//! joint law of measuring a one-particle observable on every particle.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::bogoliubov::{momentum_sq, Mode, MomentumLattice, SpectralObservable};
use crate::fockspace::{
    apply_exponential, bogoliubov_generator, de_excite, second_quantize, FockVector, ModeOperator, OccupationBasis,
};
use crate::linalg::{self, expm_dense, hermitian_eigen, lanczos_lowest, CMatrix, LanczosOptions, SparseMatrix};
use crate::ot1d::DiscreteMeasure;
use crate::scattering::RadialPotential;
use crate::{Error, Result};

/// Largest Fock dimension the exact routines will build.
pub const MAX_FOCK_DIM: usize = 250_000;

/// `N` bosons on the unit torus restricted to the zero mode and the given
/// lattice points.
#[derive(Debug, Clone)]
pub struct TorusModel {
    lattice: MomentumLattice,
    modes: Vec<Mode>,
    n_particles: usize,
    potential: RadialPotential,
    basis: Arc<OccupationBasis>,
}

impl TorusModel {
    pub fn new(potential: RadialPotential, lattice: MomentumLattice, n_particles: usize) -> Result<Self> {
        if n_particles == 0 {
            return Err(Error::Domain("a model needs at least one particle".into()));
        }
        let modes = lattice.mode_list();
        let dim = crate::fockspace::binomial(n_particles + modes.len() - 1, modes.len() - 1);
        if dim > MAX_FOCK_DIM {
            return Err(Error::Domain(format!(
                "{} modes with N = {n_particles} give Fock dimension {dim} > {MAX_FOCK_DIM}",
                modes.len()
            )));
        }
        let basis = Arc::new(OccupationBasis::fixed(modes.len(), n_particles)?);
        Ok(Self { lattice, modes, n_particles, potential, basis })
    }

    pub fn lattice(&self) -> &MomentumLattice {
        &self.lattice
    }

    /// Zero mode first, then the lattice points.
    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn potential(&self) -> &RadialPotential {
        &self.potential
    }

    pub fn basis(&self) -> Arc<OccupationBasis> {
        self.basis.clone()
    }

    /// `V̂(k/N)` for the momentum difference of two modes.
    fn v_hat(&self, a: Mode, b: Mode) -> f64 {
        let diff = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
        self.potential.fourier(momentum_sq(diff).sqrt() / self.n_particles as f64)
    }
}

/// `H_N = Σ_p p² a*_p a_p + (1/2N) Σ V̂(k/N) a*_{p+k} a*_{q-k} a_q a_p`, the
/// sum running over momentum-conserving mode quadruples inside the model.
pub fn build_hamiltonian(model: &TorusModel) -> Result<ModeOperator> {
    let modes = model.modes();
    let d = modes.len();
    let basis = &model.basis;
    let n = model.n_particles as f64;
    let index = |m: Mode| modes.iter().position(|&x| x == m);

    // (r, s, i, j, coefficient) with a*_r a*_s a_j a_i.
    let mut quads = Vec::new();
    for i in 0..d {
        for j in 0..d {
            for r in 0..d {
                let target = [
                    modes[i][0] + modes[j][0] - modes[r][0],
                    modes[i][1] + modes[j][1] - modes[r][1],
                    modes[i][2] + modes[j][2] - modes[r][2],
                ];
                if let Some(s) = index(target) {
                    let c = model.v_hat(modes[r], modes[i]) / (2.0 * n);
                    if c != 0.0 {
                        quads.push((r, s, i, j, c));
                    }
                }
            }
        }
    }
    let kinetic: Vec<f64> = modes.iter().map(|&m| momentum_sq(m)).collect();

    let mut triplets = Vec::new();
    let mut occ = vec![0u8; d];
    for (col, state) in basis.states().enumerate() {
        let e_kin: f64 = state.iter().zip(&kinetic).map(|(&k, &p2)| k as f64 * p2).sum();
        if e_kin != 0.0 {
            triplets.push((col, col, Complex64::new(e_kin, 0.0)));
        }
        for &(r, s, i, j, c) in &quads {
            occ.copy_from_slice(state);
            let mut amp = 1.0;
            for (k, lower) in [(i, true), (j, true), (s, false), (r, false)] {
                if lower {
                    if occ[k] == 0 {
                        amp = 0.0;
                        break;
                    }
                    amp *= (occ[k] as f64).sqrt();
                    occ[k] -= 1;
                } else {
                    occ[k] += 1;
                    amp *= (occ[k] as f64).sqrt();
                }
            }
            if amp != 0.0 {
                triplets.push((basis.rank(&occ).unwrap(), col, Complex64::new(c * amp, 0.0)));
            }
        }
    }
    let h = SparseMatrix::from_triplets(basis.dim(), basis.dim(), triplets);
    let defect = h.hermiticity_defect();
    if defect > 1e-10 {
        return Err(Error::NotHermitian(defect));
    }
    Ok(ModeOperator::new("H_N", h))
}

#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub energy: f64,
    pub state: FockVector,
    pub residual: f64,
    pub gamma1: CMatrix,
}

/// Lowest eigenpair of `H` by restarted Lanczos from the normalized
/// all-ones vector. The global phase is fixed so the largest amplitude is
/// real and positive.
pub fn ground_state(h: &ModeOperator, basis: Arc<OccupationBasis>, opts: LanczosOptions) -> Result<GroundStateResult> {
    if h.matrix.nrows() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), found: h.matrix.nrows() });
    }
    let defect = h.matrix.hermiticity_defect();
    if defect > 1e-10 {
        return Err(Error::NotHermitian(defect));
    }
    let pair = lanczos_lowest(&h.matrix, opts)?;
    let mut v = pair.vector;
    let pivot = v.iter().copied().fold(Complex64::new(0.0, 0.0), |a, b| if b.norm() > a.norm() { b } else { a });
    let phase = pivot.conj() / pivot.norm();
    for a in &mut v {
        *a *= phase;
    }
    let state = FockVector::new(basis, v)?;
    let gamma1 = reduced_density(&state);
    Ok(GroundStateResult { energy: pair.value, state, residual: pair.residual, gamma1 })
}

/// `γ_{kl} = ⟨ψ, a*_l a_k ψ⟩ / tr`, trace-normalized (for a fixed-`N`
/// vector the trace is `N`).
pub fn reduced_density(psi: &FockVector) -> CMatrix {
    let basis = &psi.basis;
    let d = basis.modes();
    let mut gamma = CMatrix::zeros(d, d);
    let mut occ = vec![0u8; d];
    for (col, state) in basis.states().enumerate() {
        let a = psi.amplitudes[col];
        if a == Complex64::new(0.0, 0.0) {
            continue;
        }
        for k in 0..d {
            if state[k] == 0 {
                continue;
            }
            for l in 0..d {
                occ.copy_from_slice(state);
                let amp = (occ[k] as f64).sqrt();
                occ[k] -= 1;
                occ[l] += 1;
                let amp = amp * (occ[l] as f64).sqrt();
                let row = basis.rank(&occ).unwrap();
                gamma[(k, l)] += psi.amplitudes[row].conj() * a * amp;
            }
        }
    }
    let trace: f64 = (0..d).map(|k| gamma[(k, k)].re).sum();
    if trace > 0.0 {
        gamma /= Complex64::new(trace, 0.0);
    }
    gamma
}

/// `ν_φ(A) = ⟨φ, 1_A(O) φ⟩`: spectral atoms of `O` weighted by the overlap
/// of their eigenspaces with the zero mode.
pub fn nu_phi(o: &SpectralObservable) -> Result<DiscreteMeasure> {
    let z = o.zero_index();
    let w = o.eigenvectors();
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for (value, idx) in o.atoms() {
        atoms.push(*value);
        weights.push(idx.iter().map(|&k| w[(z, k)].norm_sqr()).sum());
    }
    DiscreteMeasure::new(&atoms, &weights)
}

/// Hermitian `K` with `exp(iK) = u` for a unitary `u`.
fn unitary_log(u: &CMatrix) -> Result<CMatrix> {
    let d = u.nrows();
    let adj = u.adjoint();
    let i = Complex64::new(0.0, 1.0);
    // A generic real combination of the commuting Hermitian parts separates
    // distinct eigenvalues of `u`; try a few in case of a coincidence.
    for c in [0.618_033_988_749_894_9, 1.324_717_957_244_746, 0.414_213_562_373_095] {
        let h = (u + &adj) * Complex64::new(0.5, 0.0) + (u - &adj) * (Complex64::new(c, 0.0) / (i * 2.0));
        let (_, v) = hermitian_eigen(&h);
        let mut k = CMatrix::zeros(d, d);
        for j in 0..d {
            let col = v.column(j);
            let lam = (col.adjoint() * u * col)[(0, 0)];
            k += col * col.adjoint() * Complex64::new(lam.arg(), 0.0);
        }
        let back = expm_dense(&(&k * i));
        if (back - u).iter().all(|z| z.norm() <= 1e-11) {
            // Remove rounding asymmetry.
            return Ok((&k + k.adjoint()) * Complex64::new(0.5, 0.0));
        }
    }
    Err(Error::NonConvergent { what: "unitary logarithm", defect: f64::NAN })
}

/// Exact sampler of the outcomes `(Y_1..Y_N)` of measuring `O` on every
/// particle of a symmetric state.
///
/// The state is rotated into the eigenbasis of `O`, which turns the joint law
/// into a law on occupation vectors. Drawing one occupation and listing each
/// eigenvalue with its multiplicity in random order reproduces the joint
/// law exactly, because the law of a symmetric state is exchangeable.
#[derive(Debug, Clone)]
pub struct MeasurementSampler {
    basis: Arc<OccupationBasis>,
    /// Atom value of every eigenmode.
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

impl MeasurementSampler {
    pub fn new(psi: &FockVector, o: &SpectralObservable) -> Result<Self> {
        if !psi.is_normalized() {
            return Err(Error::NotNormalized(psi.norm()));
        }
        if psi.basis.is_truncated() {
            return Err(Error::Domain("measurement needs a fixed-N state".into()));
        }
        if psi.basis.modes() != o.dimension() {
            return Err(Error::DimensionMismatch { expected: o.dimension(), found: psi.basis.modes() });
        }
        // Amplitudes on eigen-occupations are ⟨n|Γ(W*)ψ⟩ and
        // Γ(W*) = exp(i dΓ(K)) with exp(iK) = W*.
        let k = unitary_log(&o.eigenvectors().adjoint())?;
        let rotated = if k.iter().all(|z| z.norm() == 0.0) {
            psi.amplitudes.clone()
        } else {
            let g = second_quantize(&psi.basis, &k)?;
            linalg::expm_apply(&g.matrix, Complex64::new(0.0, 1.0), &psi.amplitudes)
        };
        let mut cumulative = Vec::with_capacity(rotated.len());
        let mut acc = 0.0;
        for a in &rotated {
            acc += a.norm_sqr();
            cumulative.push(acc);
        }
        for c in &mut cumulative {
            *c /= acc;
        }
        let values = (0..o.dimension()).map(|k| o.atom_value(k)).collect();
        Ok(Self { basis: psi.basis.clone(), values, cumulative })
    }

    /// Probability of every eigen-occupation vector, in basis order.
    pub fn occupation_law(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cumulative
            .iter()
            .map(|&c| {
                let p = c - prev;
                prev = c;
                p
            })
            .collect()
    }

    pub fn basis(&self) -> &OccupationBasis {
        &self.basis
    }

    /// Atom value for each eigenmode.
    pub fn mode_values(&self) -> &[f64] {
        &self.values
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let u: f64 = rng.random();
        let i = self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1);
        let mut out = Vec::with_capacity(self.basis.n());
        for (k, &count) in self.basis.state(i).iter().enumerate() {
            out.extend(core::iter::repeat_n(self.values[k], count as usize));
        }
        out.shuffle(rng);
        out
    }
}

/// One draw from the joint law of `ψ`.
pub fn sample_measurement<R: Rng + ?Sized>(psi: &FockVector, o: &SpectralObservable, rng: &mut R) -> Result<Vec<f64>> {
    Ok(MeasurementSampler::new(psi, o)?.sample(rng))
}

/// `N` i.i.d. draws from a discrete law; for `φ^{⊗N}` this is exactly the
/// joint measurement law, for any `N`.
pub fn sample_iid<R: Rng + ?Sized>(law: &DiscreteMeasure, n: usize, rng: &mut R) -> Vec<f64> {
    let mut cumulative = Vec::with_capacity(law.len());
    let mut acc = 0.0;
    for &w in law.weights() {
        acc += w;
        cumulative.push(acc);
    }
    (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * acc;
            let i = cumulative.partition_point(|&c| c <= u).min(law.len() - 1);
            law.atoms()[i]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    /// `φ^{⊗N}`.
    Product,
    /// `U_N* e^{B(τ)} Ω`.
    Quasifree { tau: Vec<f64> },
    /// `U_N* e^{B(η)} e^{B(τ)} Ω`.
    Dressed { eta: Vec<f64>, tau: Vec<f64> },
}

/// Excitation vector of a model state on `F^{<=N}` over the lattice modes.
pub fn model_excitation_vector(kind: &ModelKind, lattice: &MomentumLattice, n: usize) -> Result<FockVector> {
    let exc = Arc::new(OccupationBasis::truncated(lattice.len(), n)?);
    let mut xi = FockVector::vacuum(exc.clone())?;
    let transforms: Vec<&[f64]> = match kind {
        ModelKind::Product => Vec::new(),
        ModelKind::Quasifree { tau } => vec![tau],
        ModelKind::Dressed { eta, tau } => vec![tau, eta],
    };
    for coeffs in transforms {
        let g = bogoliubov_generator(&exc, lattice, coeffs)?;
        if g.matrix.nnz() > 0 {
            xi.amplitudes = apply_exponential(&g, 1.0, &xi.amplitudes);
        }
    }
    Ok(xi)
}

/// A model state on the fixed-`N` sector over `[0] ++ lattice`.
pub fn model_state(kind: &ModelKind, lattice: &MomentumLattice, n: usize) -> Result<FockVector> {
    let xi = model_excitation_vector(kind, lattice, n)?;
    let fixed = Arc::new(OccupationBasis::fixed(lattice.len() + 1, n)?);
    let mut psi = de_excite(&xi, fixed)?;
    psi.normalize();
    Ok(psi)
}

/// `g̃(O) = g(O) - ⟨φ, g(O) φ⟩`.
pub fn centered_function(o: &SpectralObservable, g: &dyn Fn(f64) -> f64) -> CMatrix {
    let mut m = o.functional_calculus(g);
    let z = o.zero_index();
    let shift = m[(z, z)];
    for k in 0..m.nrows() {
        m[(k, k)] -= shift;
    }
    m
}

/// `⟨ψ, [N^{-1} Σ_i g(O^{(i)}) - ⟨φ, g(O)φ⟩]² ψ⟩ = ‖dΓ(g̃(O)) ψ‖² / N²`.
pub fn variance_lhs(psi: &FockVector, o: &SpectralObservable, g: &dyn Fn(f64) -> f64) -> Result<f64> {
    if !psi.is_normalized() {
        return Err(Error::NotNormalized(psi.norm()));
    }
    let dg = second_quantize(&psi.basis, &centered_function(o, g))?;
    let n = psi.basis.n() as f64;
    Ok(linalg::norm(&dg.apply(&psi.amplitudes)).powi(2) / (n * n))
}

/// `h = q g̃(O) φ` on the excited modes and `H = q g̃(O) q`, for an
/// observable whose zero mode comes first.
pub fn fluctuation_parts(o: &SpectralObservable, g: &dyn Fn(f64) -> f64) -> Result<(Vec<Complex64>, CMatrix)> {
    if o.zero_index() != 0 {
        return Err(Error::InvalidModes("the zero mode must be listed first".into()));
    }
    let gt = centered_function(o, g);
    let d = o.dimension();
    let h = (1..d).map(|k| gt[(k, 0)]).collect();
    let big_h = gt.view((1, 1), (d - 1, d - 1)).into_owned();
    Ok((h, big_h))
}
