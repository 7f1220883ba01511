//! Bosonic Fock space over finitely many modes, as explicit sparse
//! matrices.
//!
//! Occupation vectors are enumerated in ascending lexicographic order and
//! ranked combinatorially, so the basis index is a pure function of the
//! vector. In the truncated space `⊕_{n<=N}` the vacuum has index 0.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::bogoliubov::MomentumLattice;
use crate::linalg::{self, dense_hermiticity_defect, CMatrix, SparseMatrix};
use crate::{Error, Result};

/// `C(n, k)`, saturating at `usize::MAX`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by i + 1, and acc <= usize::MAX here.
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    /// Exactly `N` particles.
    Fixed(usize),
    /// At most `N` particles.
    Truncated(usize),
}

/// Occupation vectors over `d` modes in one sector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupationBasis {
    modes: usize,
    sector: Sector,
    /// Flattened occupation vectors, `modes` entries per state.
    states: Vec<u8>,
}

impl OccupationBasis {
    pub fn fixed(modes: usize, n: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidModes("a fixed-N sector needs at least one mode".into()));
        }
        Self::build(modes, Sector::Fixed(n))
    }

    pub fn truncated(modes: usize, n_max: usize) -> Result<Self> {
        Self::build(modes, Sector::Truncated(n_max))
    }

    fn build(modes: usize, sector: Sector) -> Result<Self> {
        let n = match sector {
            Sector::Fixed(n) | Sector::Truncated(n) => n,
        };
        if n > u8::MAX as usize {
            return Err(Error::Domain(format!("particle number {n} too large")));
        }
        let mut states = Vec::new();
        let mut current = vec![0u8; modes];
        fn fill(pos: usize, left: usize, exact: bool, cur: &mut [u8], out: &mut Vec<u8>) {
            if pos + 1 == cur.len() && exact {
                cur[pos] = left as u8;
                out.extend_from_slice(cur);
                return;
            }
            if pos == cur.len() {
                out.extend_from_slice(cur);
                return;
            }
            for k in 0..=left {
                cur[pos] = k as u8;
                fill(pos + 1, left - k, exact, cur, out);
            }
            cur[pos] = 0;
        }
        if modes == 0 {
            // Only the empty occupation vector.
            return Ok(Self { modes, sector, states });
        }
        fill(0, n, matches!(sector, Sector::Fixed(_)), &mut current, &mut states);
        Ok(Self { modes, sector, states })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    /// `N` (fixed sector) or `N_max` (truncated).
    pub fn n(&self) -> usize {
        match self.sector {
            Sector::Fixed(n) | Sector::Truncated(n) => n,
        }
    }

    pub fn is_truncated(&self) -> bool {
        matches!(self.sector, Sector::Truncated(_))
    }

    pub fn dim(&self) -> usize {
        match self.sector {
            Sector::Fixed(n) => binomial(n + self.modes - 1, self.modes - 1),
            Sector::Truncated(n) => binomial(n + self.modes, self.modes),
        }
    }

    pub fn state(&self, i: usize) -> &[u8] {
        if self.modes == 0 {
            return &[];
        }
        &self.states[i * self.modes..(i + 1) * self.modes]
    }

    pub fn states(&self) -> impl Iterator<Item = &[u8]> + '_ {
        (0..self.dim()).map(move |i| self.state(i))
    }

    /// Index of an occupation vector, or `None` if it is not in the sector.
    pub fn rank(&self, occ: &[u8]) -> Option<usize> {
        if occ.len() != self.modes {
            return None;
        }
        let total: usize = occ.iter().map(|&x| x as usize).sum();
        let (mut left, exact) = match self.sector {
            Sector::Fixed(n) if total == n => (n, true),
            Sector::Truncated(n) if total <= n => (n, false),
            _ => return None,
        };
        let d = self.modes;
        let mut rank = 0;
        for (pos, &x) in occ.iter().enumerate() {
            let rest = d - pos - 1;
            if exact && rest == 0 {
                break;
            }
            for j in 0..x as usize {
                // Vectors with this prefix and a smaller entry here.
                rank += if exact { binomial(left - j + rest - 1, rest - 1) } else { binomial(left - j + rest, rest) };
            }
            left -= x as usize;
        }
        Some(rank)
    }

    /// Total occupation of state `i`.
    pub fn total(&self, i: usize) -> usize {
        self.state(i).iter().map(|&x| x as usize).sum()
    }
}

/// A state in an occupation basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    pub basis: Arc<OccupationBasis>,
    pub amplitudes: Vec<Complex64>,
}

impl FockVector {
    pub fn new(basis: Arc<OccupationBasis>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), found: amplitudes.len() });
        }
        Ok(Self { basis, amplitudes })
    }

    /// The basis vector with the given occupation.
    pub fn occupation(basis: Arc<OccupationBasis>, occ: &[u8]) -> Result<Self> {
        let i = basis.rank(occ).ok_or_else(|| Error::InvalidModes(format!("occupation {occ:?} not in basis")))?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.dim()];
        amplitudes[i] = Complex64::new(1.0, 0.0);
        Ok(Self { basis, amplitudes })
    }

    /// Vacuum of a truncated basis.
    pub fn vacuum(basis: Arc<OccupationBasis>) -> Result<Self> {
        let occ = vec![0u8; basis.modes()];
        Self::occupation(basis, &occ)
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amplitudes)
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-10
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        for a in &mut self.amplitudes {
            *a /= n;
        }
    }
}

/// A labelled sparse operator between occupation bases.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeOperator {
    pub label: String,
    pub matrix: SparseMatrix,
}

impl ModeOperator {
    pub fn new(label: impl Into<String>, matrix: SparseMatrix) -> Self {
        Self { label: label.into(), matrix }
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.matrix.mul_vec(v)
    }

    pub fn adjoint(&self) -> Self {
        Self { label: format!("({})*", self.label), matrix: self.matrix.adjoint() }
    }
}

fn check_mode(basis: &OccupationBasis, k: usize) -> Result<()> {
    if k >= basis.modes() {
        return Err(Error::ModeOutOfRange { mode: k, modes: basis.modes() });
    }
    Ok(())
}

fn require_truncated(basis: &OccupationBasis, what: &str) -> Result<()> {
    if !basis.is_truncated() {
        return Err(Error::Domain(format!("{what} changes the particle number; use a truncated basis")));
    }
    Ok(())
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Triplets of `a*_k` weighted by `w(|n|)`, acting on `n` with `|n| < N`.
fn raising_triplets(basis: &OccupationBasis, k: usize, w: impl Fn(usize) -> f64) -> Vec<(usize, usize, Complex64)> {
    let n_max = basis.n();
    let mut out = Vec::new();
    let mut occ = vec![0u8; basis.modes()];
    for (col, state) in basis.states().enumerate() {
        let total: usize = state.iter().map(|&x| x as usize).sum();
        if total >= n_max {
            continue;
        }
        occ.copy_from_slice(state);
        occ[k] += 1;
        let row = basis.rank(&occ).unwrap();
        let val = (occ[k] as f64).sqrt() * w(total);
        if val != 0.0 {
            out.push((row, col, real(val)));
        }
    }
    out
}

/// `a*_k` on a truncated basis.
pub fn creation(basis: &OccupationBasis, k: usize) -> Result<ModeOperator> {
    check_mode(basis, k)?;
    require_truncated(basis, "a*")?;
    let t = raising_triplets(basis, k, |_| 1.0);
    Ok(ModeOperator::new(format!("a*_{k}"), SparseMatrix::from_triplets(basis.dim(), basis.dim(), t)))
}

/// `a_k` on a truncated basis.
pub fn annihilation(basis: &OccupationBasis, k: usize) -> Result<ModeOperator> {
    let c = creation(basis, k)?;
    Ok(ModeOperator::new(format!("a_{k}"), c.matrix.adjoint()))
}

/// `a*_k a_l`; particle-number conserving, valid on either sector.
pub fn hopping(basis: &OccupationBasis, k: usize, l: usize) -> Result<ModeOperator> {
    check_mode(basis, k)?;
    check_mode(basis, l)?;
    let mut t = Vec::new();
    let mut occ = vec![0u8; basis.modes()];
    for (col, state) in basis.states().enumerate() {
        if state[l] == 0 {
            continue;
        }
        occ.copy_from_slice(state);
        let a = (occ[l] as f64).sqrt();
        occ[l] -= 1;
        occ[k] += 1;
        let val = a * (occ[k] as f64).sqrt();
        t.push((basis.rank(&occ).unwrap(), col, real(val)));
    }
    Ok(ModeOperator::new(format!("a*_{k} a_{l}"), SparseMatrix::from_triplets(basis.dim(), basis.dim(), t)))
}

/// `dΓ(A) = Σ_{kl} A_{kl} a*_k a_l`.
pub fn second_quantize(basis: &OccupationBasis, a: &CMatrix) -> Result<ModeOperator> {
    let d = basis.modes();
    if a.nrows() != d || a.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: a.nrows() });
    }
    let defect = dense_hermiticity_defect(a);
    if defect > 1e-10 {
        return Err(Error::NotHermitian(defect));
    }
    let mut t = Vec::new();
    let mut occ = vec![0u8; d];
    for (col, state) in basis.states().enumerate() {
        for l in 0..d {
            if state[l] == 0 {
                continue;
            }
            for k in 0..d {
                let akl = a[(k, l)];
                if akl == Complex64::new(0.0, 0.0) {
                    continue;
                }
                occ.copy_from_slice(state);
                let amp = (occ[l] as f64).sqrt();
                occ[l] -= 1;
                occ[k] += 1;
                t.push((basis.rank(&occ).unwrap(), col, akl * amp * (occ[k] as f64).sqrt()));
            }
        }
    }
    Ok(ModeOperator::new("dΓ(A)", SparseMatrix::from_triplets(basis.dim(), basis.dim(), t)))
}

/// Total number operator.
pub fn number(basis: &OccupationBasis) -> ModeOperator {
    let diag: Vec<Complex64> = (0..basis.dim()).map(|i| real(basis.total(i) as f64)).collect();
    ModeOperator::new("N", SparseMatrix::diagonal(&diag))
}

/// `N₊`: on an excitation basis every mode is an excited mode.
pub fn number_plus(basis: &OccupationBasis) -> ModeOperator {
    ModeOperator::new("N+", number(basis).matrix)
}

/// `U_N`: fixed-`N` sector over `d` modes (mode 0 the condensate) onto the
/// truncated excitation space over the remaining `d - 1` modes.
pub fn excitation_map(fixed: &OccupationBasis, excitations: &OccupationBasis) -> Result<ModeOperator> {
    if fixed.is_truncated() || !excitations.is_truncated() {
        return Err(Error::Domain("excitation map goes from a fixed-N to a truncated basis".into()));
    }
    if excitations.modes() + 1 != fixed.modes() {
        return Err(Error::DimensionMismatch { expected: fixed.modes() - 1, found: excitations.modes() });
    }
    if excitations.n() != fixed.n() {
        return Err(Error::OccupationOverflow { n: excitations.n(), found: fixed.n() });
    }
    let t: Vec<_> =
        fixed.states().enumerate().map(|(col, s)| (excitations.rank(&s[1..]).unwrap(), col, real(1.0))).collect();
    Ok(ModeOperator::new("U_N", SparseMatrix::from_triplets(excitations.dim(), fixed.dim(), t)))
}

/// `U_N ψ`.
pub fn excite(psi: &FockVector, excitations: Arc<OccupationBasis>) -> Result<FockVector> {
    let u = excitation_map(&psi.basis, &excitations)?;
    FockVector::new(excitations, u.apply(&psi.amplitudes))
}

/// `U_N* ξ`.
pub fn de_excite(xi: &FockVector, fixed: Arc<OccupationBasis>) -> Result<FockVector> {
    let u = excitation_map(&fixed, &xi.basis)?;
    FockVector::new(fixed, u.matrix.adjoint().mul_vec(&xi.amplitudes))
}

/// `b*_k = a*_k sqrt((N - N₊)/N)` on the truncated excitation space.
pub fn modified_bstar_mode(basis: &OccupationBasis, k: usize) -> Result<ModeOperator> {
    check_mode(basis, k)?;
    require_truncated(basis, "b*")?;
    let n = basis.n() as f64;
    let t = raising_triplets(basis, k, |total| ((n - total as f64) / n).sqrt());
    Ok(ModeOperator::new(format!("b*_{k}"), SparseMatrix::from_triplets(basis.dim(), basis.dim(), t)))
}

/// `b_k = sqrt((N - N₊)/N) a_k`.
pub fn modified_b_mode(basis: &OccupationBasis, k: usize) -> Result<ModeOperator> {
    let s = modified_bstar_mode(basis, k)?;
    Ok(ModeOperator::new(format!("b_{k}"), s.matrix.adjoint()))
}

/// `b*(h) = Σ_k h_k b*_k`.
pub fn modified_bstar(basis: &OccupationBasis, h: &[Complex64]) -> Result<ModeOperator> {
    if h.len() != basis.modes() {
        return Err(Error::DimensionMismatch { expected: basis.modes(), found: h.len() });
    }
    let mut m = SparseMatrix::zeros(basis.dim(), basis.dim());
    for (k, &hk) in h.iter().enumerate() {
        if hk != Complex64::new(0.0, 0.0) {
            m = m.axpy(hk, &modified_bstar_mode(basis, k)?.matrix);
        }
    }
    Ok(ModeOperator::new("b*(h)", m))
}

/// `b(h) = Σ_k conj(h_k) b_k`, the adjoint of [`modified_bstar`].
pub fn modified_b(basis: &OccupationBasis, h: &[Complex64]) -> Result<ModeOperator> {
    let s = modified_bstar(basis, h)?;
    Ok(ModeOperator::new("b(h)", s.matrix.adjoint()))
}

/// `B(η) = ½ Σ_p η_p (b*_p b*_{-p} - b_p b_{-p})` on the excitation space
/// whose modes are the lattice points in lattice order.
pub fn bogoliubov_generator(basis: &OccupationBasis, lattice: &MomentumLattice, eta: &[f64]) -> Result<ModeOperator> {
    if basis.modes() != lattice.len() {
        return Err(Error::DimensionMismatch { expected: lattice.len(), found: basis.modes() });
    }
    if eta.len() != lattice.len() {
        return Err(Error::DimensionMismatch { expected: lattice.len(), found: eta.len() });
    }
    for i in lattice.indices() {
        let j = lattice.partner(i);
        if (eta[i] - eta[j]).abs() > 1e-12 * eta[i].abs().max(1.0) {
            return Err(Error::InvalidModes(format!("η is not even at {:?}", lattice.point(i))));
        }
    }
    let bstars: Vec<SparseMatrix> =
        (0..basis.modes()).map(|k| modified_bstar_mode(basis, k).map(|o| o.matrix)).collect::<Result<_>>()?;
    let mut pair = SparseMatrix::zeros(basis.dim(), basis.dim());
    for i in lattice.indices() {
        if eta[i] != 0.0 {
            pair = pair.axpy(real(0.5 * eta[i]), &bstars[i].mul(&bstars[lattice.partner(i)]));
        }
    }
    let generator = pair.sub(&pair.adjoint());
    Ok(ModeOperator::new("B(η)", generator))
}

/// `exp(G)` as a dense matrix, for small bases only.
pub fn unitary(generator: &ModeOperator) -> ModeOperator {
    let e = linalg::expm_dense(&generator.matrix.to_dense());
    ModeOperator::new(format!("exp({})", generator.label), SparseMatrix::from_dense(&e))
}

/// `exp(t G) v` without forming the exponential.
pub fn apply_exponential(generator: &ModeOperator, t: f64, v: &[Complex64]) -> Vec<Complex64> {
    linalg::expm_apply(&generator.matrix, real(t), v)
}
