//! Brute-force reference computations for tests. Nothing here shares code
//! with the library under test: transport uses a dense simplex, Fock-space
//! operators are built on the full tensor product and measurement laws are
//! summed over every ordered outcome tuple.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

/// Minimizes `c·x` subject to `A x = b`, `x >= 0` with a two-phase dense
/// simplex and Bland's rule. Panics if the problem is infeasible or
/// unbounded.
pub fn simplex_min(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> f64 {
    const EPS: f64 = 1e-12;
    let m = a.len();
    let n = c.len();
    // Columns: n structural, m artificial, then the right-hand side.
    let width = n + m + 1;
    let mut t: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
            let mut row = vec![0.0; width];
            for j in 0..n {
                row[j] = sign * a[i][j];
            }
            row[n + i] = 1.0;
            row[width - 1] = sign * b[i];
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();

    fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, c: usize) {
        let p = t[r][c];
        for v in t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && row[c] != 0.0 {
                let f = row[c];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        basis[r] = c;
    }

    fn optimize(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], allowed: usize) {
        let width = t[0].len();
        loop {
            let mut entering = None;
            for j in 0..allowed {
                if basis.contains(&j) {
                    continue;
                }
                let d = cost[j] - t.iter().zip(basis.iter()).map(|(row, &bi)| cost[bi] * row[j]).sum::<f64>();
                if d < -EPS {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j) = entering else { return };
            let mut best: Option<(f64, usize, usize)> = None;
            for (i, row) in t.iter().enumerate() {
                if row[j] > EPS {
                    let ratio = row[width - 1] / row[j];
                    let better = match best {
                        None => true,
                        Some((r, _, bi)) => ratio < r - EPS || (ratio <= r + EPS && basis[i] < bi),
                    };
                    if better {
                        best = Some((ratio, i, basis[i]));
                    }
                }
            }
            let (_, r, _) = best.expect("unbounded linear program");
            pivot(t, basis, r, j);
        }
    }

    if m == 0 {
        return 0.0;
    }
    let mut phase1 = vec![0.0; n + m];
    for v in &mut phase1[n..] {
        *v = 1.0;
    }
    optimize(&mut t, &mut basis, &phase1, n + m);
    let infeasibility: f64 = t.iter().zip(&basis).filter(|(_, &bi)| bi >= n).map(|(row, _)| row[width - 1]).sum();
    assert!(infeasibility < 1e-9, "infeasible linear program");
    // Drive zero-level artificials out of the basis or drop redundant rows.
    let mut r = 0;
    while r < t.len() {
        if basis[r] >= n {
            if let Some(j) = (0..n).find(|&j| t[r][j].abs() > 1e-9) {
                pivot(&mut t, &mut basis, r, j);
            } else {
                t.remove(r);
                basis.remove(r);
                continue;
            }
        }
        r += 1;
    }
    let mut cost = c.to_vec();
    cost.extend(std::iter::repeat_n(0.0, m));
    optimize(&mut t, &mut basis, &cost, n);
    t.iter().zip(&basis).map(|(row, &bi)| cost[bi] * row[width - 1]).sum()
}

/// `W_p^p` between two discrete laws as a transportation LP.
pub fn transport_lp(x: &[f64], wx: &[f64], y: &[f64], wy: &[f64], p: f64) -> f64 {
    let (m, n) = (x.len(), y.len());
    let mut c = Vec::with_capacity(m * n);
    for xi in x {
        for yj in y {
            c.push((xi - yj).abs().powf(p));
        }
    }
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..m {
        let mut row = vec![0.0; m * n];
        row[i * n..(i + 1) * n].iter_mut().for_each(|v| *v = 1.0);
        rows.push(row);
        rhs.push(wx[i]);
    }
    for j in 0..n {
        let mut row = vec![0.0; m * n];
        for i in 0..m {
            row[i * n + j] = 1.0;
        }
        rows.push(row);
        rhs.push(wy[j]);
    }
    simplex_min(&c, &rows, &rhs)
}

/// Occupation vectors over `d` modes with total `n`, ascending
/// lexicographic order, found by filtering all of `{0..n}^d`.
pub fn occupations(d: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let total = (n + 1).pow(d as u32);
    for code in 0..total {
        let mut v = vec![0; d];
        let mut c = code;
        for k in (0..d).rev() {
            v[k] = c % (n + 1);
            c /= n + 1;
        }
        if v.iter().sum::<usize>() == n {
            out.push(v);
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Isometry from the symmetric occupation basis into `(C^d)^{⊗n}`: column
/// `k` is the normalized symmetrization of the occupation vector `k`.
pub fn symmetric_embedding(d: usize, n: usize) -> CMat {
    let occ = occupations(d, n);
    let dim = d.pow(n as u32);
    let mut e = CMat::zeros(dim, occ.len());
    for idx in 0..dim {
        // Digits of idx are the single-particle modes of each factor.
        let mut counts = vec![0; d];
        let mut c = idx;
        for _ in 0..n {
            counts[c % d] += 1;
            c /= d;
        }
        let k = occ.iter().position(|o| *o == counts).unwrap();
        let norm: f64 = counts.iter().map(|&x| factorial(x)).product::<f64>() / factorial(n);
        e[(idx, k)] = Complex64::new(norm.sqrt(), 0.0);
    }
    e
}

/// `A^{(i)}`: `a` acting on tensor factor `i` of `n`.
pub fn one_body(a: &CMat, i: usize, n: usize) -> CMat {
    let d = a.nrows();
    let mut out = CMat::identity(1, 1);
    // Factor 0 is the least significant digit, matching `symmetric_embedding`.
    for f in (0..n).rev() {
        let factor = if f == i { a.clone() } else { CMat::identity(d, d) };
        out = out.kronecker(&factor);
    }
    out
}

/// `Σ_i A^{(i)}` compressed to the symmetric subspace.
pub fn dgamma_first_quantized(a: &CMat, n: usize) -> CMat {
    let d = a.nrows();
    let e = symmetric_embedding(d, n);
    let mut full = CMat::zeros(d.pow(n as u32), d.pow(n as u32));
    for i in 0..n {
        full += one_body(a, i, n);
    }
    e.adjoint() * full * e
}

/// Spectral projectors of a Hermitian matrix, eigenvalues merged within
/// `tol`.
pub fn spectral_projectors(o: &CMat, tol: f64) -> Vec<(f64, CMat)> {
    let eig = o.clone().symmetric_eigen();
    let mut pairs: Vec<(f64, usize)> = eig.eigenvalues.iter().copied().zip(0..).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, CMat, usize)> = Vec::new();
    for (lam, k) in pairs {
        let v = eig.eigenvectors.column(k);
        let p = &v * v.adjoint();
        match out.last_mut() {
            Some((l, acc, cnt)) if lam - *l / *cnt as f64 <= tol => {
                *l += lam;
                *acc += p;
                *cnt += 1;
            }
            _ => out.push((lam, p, 1)),
        }
    }
    out.into_iter().map(|(l, p, c)| (l / c as f64, p)).collect()
}

/// Exact law of the sorted outcome tuple of measuring `o` on each of the
/// `n` particles of the symmetric state with occupation amplitudes `psi`.
/// Returns `(sorted atom indices, probability)`, summed over all ordered
/// outcome tuples.
pub fn joint_law(psi: &[Complex64], o: &CMat, n: usize) -> (Vec<f64>, Vec<(Vec<usize>, f64)>) {
    let d = o.nrows();
    let proj = spectral_projectors(o, 1e-9);
    let e = symmetric_embedding(d, n);
    let full = &e * nalgebra::DVector::from_column_slice(psi);
    let atoms: Vec<f64> = proj.iter().map(|(l, _)| *l).collect();
    let k = proj.len();
    let mut law: Vec<(Vec<usize>, f64)> = Vec::new();
    for code in 0..k.pow(n as u32) {
        let mut tuple = vec![0; n];
        let mut c = code;
        for slot in tuple.iter_mut() {
            *slot = c % k;
            c /= k;
        }
        let mut op = CMat::identity(1, 1);
        for f in (0..n).rev() {
            op = op.kronecker(&proj[tuple[f]].1);
        }
        let p = (full.adjoint() * &op * &full)[(0, 0)].re;
        tuple.sort_unstable();
        match law.iter_mut().find(|(t, _)| *t == tuple) {
            Some((_, acc)) => *acc += p,
            None => law.push((tuple, p)),
        }
    }
    (atoms, law)
}
