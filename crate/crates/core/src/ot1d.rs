//! Exact optimal transport on the real line.
//!
//! Every quantity is evaluated piecewise on the merged grid of jump points,
//! so there is no quadrature error: the CDF formula for `W_1`, the quantile
//! formula for `W_p` and the cost of the monotone coupling agree to rounding.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Atoms closer than this are merged into one.
pub const ATOM_MERGE_TOL: f64 = 1e-12;
/// Total mass deviations below this are silently renormalized.
pub const RENORMALIZE_TOL: f64 = 1e-9;

/// A finitely supported probability measure on the real line.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
    /// `cumulative[i]` is the mass of `(-inf, atoms[i]]`; the last entry is 1.
    cumulative: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from unsorted atoms and weights.
    ///
    /// Atoms within [`ATOM_MERGE_TOL`] are merged (weights added) and
    /// zero-weight atoms dropped. A total mass within [`RENORMALIZE_TOL`] of
    /// one is renormalized, anything further off is rejected.
    pub fn new(atoms: &[f64], weights: &[f64]) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!("{} atoms but {} weights", atoms.len(), weights.len())));
        }
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        for (&a, &w) in atoms.iter().zip(weights) {
            if !a.is_finite() {
                return Err(Error::InvalidMeasure(format!("non-finite atom {a}")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidMeasure(format!("weight {w} is not a nonnegative number")));
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > RENORMALIZE_TOL {
            return Err(Error::InvalidMeasure(format!("total mass {total} is not 1")));
        }

        let mut pairs: Vec<(f64, f64)> = atoms.iter().copied().zip(weights.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut merged_atoms: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut merged_weights: Vec<f64> = Vec::with_capacity(pairs.len());
        for (a, w) in pairs {
            match merged_atoms.last() {
                Some(&last) if a - last <= ATOM_MERGE_TOL => {
                    *merged_weights.last_mut().unwrap() += w;
                }
                _ => {
                    merged_atoms.push(a);
                    merged_weights.push(w);
                }
            }
        }
        let (atoms, weights): (Vec<f64>, Vec<f64>) =
            merged_atoms.into_iter().zip(merged_weights).filter(|&(_, w)| w > 0.0).unzip();
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("all weights are zero".into()));
        }

        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for &w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(Self { atoms, weights, cumulative })
    }

    /// Point mass at `x`.
    pub fn dirac(x: f64) -> Result<Self> {
        Self::new(&[x], &[1.0])
    }

    /// Empirical measure of a sample: each distinct value gets its relative
    /// frequency.
    pub fn empirical(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut atoms = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for x in sorted {
            if !x.is_finite() {
                return Err(Error::InvalidMeasure(format!("non-finite sample {x}")));
            }
            if atoms.last() == Some(&x) {
                *counts.last_mut().unwrap() += 1;
            } else {
                atoms.push(x);
                counts.push(1);
            }
        }
        let weights: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
        Self::new(&atoms, &weights)
    }

    /// Empirical measure from occupation counts on a fixed set of values.
    pub fn from_counts(values: &[f64], counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptySample);
        }
        let weights: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Self::new(values, &weights)
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn min_atom(&self) -> f64 {
        self.atoms[0]
    }

    pub fn max_atom(&self) -> f64 {
        *self.atoms.last().unwrap()
    }

    /// `m((-inf, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.atoms.partition_point(|&a| a <= x);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// Right-continuous quantile `sup { x : F(x) <= t }` for `t` in `(0, 1)`.
    pub fn quantile(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Domain(format!("quantile level {t} outside (0,1)")));
        }
        let k = self.cumulative.partition_point(|&c| c <= t);
        Ok(self.atoms[k.min(self.atoms.len() - 1)])
    }

    /// `∫ f dm`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().zip(&self.weights).map(|(&a, &w)| w * f(a)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.integrate(|x| x)
    }

    /// The same measure with every atom moved by `s`.
    pub fn shifted(&self, s: f64) -> Self {
        let atoms: Vec<f64> = self.atoms.iter().map(|a| a + s).collect();
        Self { atoms, weights: self.weights.clone(), cumulative: self.cumulative.clone() }
    }

    /// The push-forward under `x -> lambda * x` with `lambda > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::Domain(format!("scale factor {lambda} must be positive")));
        }
        let atoms: Vec<f64> = self.atoms.iter().map(|a| a * lambda).collect();
        Self::new(&atoms, &self.weights)
    }
}

/// `W_p(m1, m2)` via the `L^p(0,1)` distance of the quantile functions,
/// integrated exactly over the merged grid of cumulative levels.
pub fn wasserstein_p(m1: &DiscreteMeasure, m2: &DiscreteMeasure, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!("Wasserstein order p = {p} must satisfy p >= 1")));
    }
    let (mut i, mut j) = (0usize, 0usize);
    let mut level = 0.0;
    let mut acc = 0.0;
    while i < m1.len() && j < m2.len() {
        let next = m1.cumulative[i].min(m2.cumulative[j]);
        let width = next - level;
        if width > 0.0 {
            acc += width * (m1.atoms[i] - m2.atoms[j]).abs().powf(p);
        }
        level = next;
        // Both can advance at once when the levels coincide.
        if m1.cumulative[i] <= next {
            i += 1;
        }
        if m2.cumulative[j] <= next {
            j += 1;
        }
    }
    Ok(acc.powf(1.0 / p))
}

/// `W_1(m1, m2) = ∫ |F_1 - F_2| dx`, integrated exactly between consecutive
/// atoms of the merged support.
pub fn wasserstein_1_cdf(m1: &DiscreteMeasure, m2: &DiscreteMeasure) -> f64 {
    let (mut i, mut j) = (0usize, 0usize);
    let (mut f1, mut f2) = (0.0f64, 0.0f64);
    let mut acc = 0.0;
    let mut prev: Option<f64> = None;
    while i < m1.len() || j < m2.len() {
        let a1 = m1.atoms.get(i).copied().unwrap_or(f64::INFINITY);
        let a2 = m2.atoms.get(j).copied().unwrap_or(f64::INFINITY);
        let x = a1.min(a2);
        if let Some(p) = prev {
            acc += (f1 - f2).abs() * (x - p);
        }
        if a1 <= x {
            f1 = m1.cumulative[i];
            i += 1;
        }
        if a2 <= x {
            f2 = m2.cumulative[j];
            j += 1;
        }
        prev = Some(x);
    }
    acc
}

/// A test function for the Kantorovich dual bound.
pub trait LipschitzFn {
    fn eval(&self, x: f64) -> f64;
    /// An upper bound for the Lipschitz constant.
    fn lipschitz(&self) -> f64;
}

/// Continuous piecewise-linear function through the given knots, constant
/// outside them.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    knots: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn new(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::Domain("piecewise-linear function needs a knot".into()));
        }
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Domain("piecewise-linear knots must be distinct".into()));
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }
}

impl LipschitzFn for PiecewiseLinear {
    fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= k[0].0 {
            return k[0].1;
        }
        if x >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let i = k.partition_point(|&(kx, _)| kx <= x);
        let (x0, y0) = k[i - 1];
        let (x1, y1) = k[i];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    fn lipschitz(&self) -> f64 {
        self.knots.windows(2).map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs()).fold(0.0, f64::max)
    }
}

/// A closure paired with its declared Lipschitz constant.
pub struct DeclaredLipschitz<F> {
    pub f: F,
    pub lip: f64,
}

impl<F: Fn(f64) -> f64> LipschitzFn for DeclaredLipschitz<F> {
    fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn lipschitz(&self) -> f64 {
        self.lip
    }
}

/// Lower bound on `W_1` from the dual formulation: the largest
/// `|∫ f d(m1 - m2)| / Lip(f)` over the given test functions. Constant
/// functions contribute nothing.
pub fn w1_dual_bound(m1: &DiscreteMeasure, m2: &DiscreteMeasure, test_fns: &[&dyn LipschitzFn]) -> f64 {
    test_fns
        .iter()
        .filter(|f| f.lipschitz() > 0.0)
        .map(|f| {
            let diff = m1.integrate(|x| f.eval(x)) - m2.integrate(|x| f.eval(x));
            diff.abs() / f.lipschitz()
        })
        .fold(0.0, f64::max)
}

/// A coupling given as `(source atom, target atom, mass)` triples.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub entries: Vec<(usize, usize, f64)>,
}

impl TransportPlan {
    /// `∫ |x - y|^p dπ`.
    pub fn cost(&self, m1: &DiscreteMeasure, m2: &DiscreteMeasure, p: f64) -> f64 {
        self.entries.iter().map(|&(i, j, w)| w * (m1.atoms[i] - m2.atoms[j]).abs().powf(p)).sum()
    }

    /// Largest deviation of the plan's marginals from the weights of `m1`
    /// and `m2`.
    pub fn marginal_defect(&self, m1: &DiscreteMeasure, m2: &DiscreteMeasure) -> f64 {
        let mut rows = alloc::vec![0.0; m1.len()];
        let mut cols = alloc::vec![0.0; m2.len()];
        for &(i, j, w) in &self.entries {
            rows[i] += w;
            cols[j] += w;
        }
        let r = rows.iter().zip(&m1.weights).map(|(a, b)| (a - b).abs());
        let c = cols.iter().zip(&m2.weights).map(|(a, b)| (a - b).abs());
        r.chain(c).fold(0.0, f64::max)
    }
}

/// The monotone (north-west corner) coupling, optimal for every convex cost
/// on the line.
pub fn optimal_plan(m1: &DiscreteMeasure, m2: &DiscreteMeasure) -> TransportPlan {
    let mut entries = Vec::with_capacity(m1.len() + m2.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut level = 0.0;
    while i < m1.len() && j < m2.len() {
        let next = m1.cumulative[i].min(m2.cumulative[j]);
        let mass = next - level;
        if mass > 0.0 {
            entries.push((i, j, mass));
        }
        level = next;
        if m1.cumulative[i] <= next {
            i += 1;
        }
        if m2.cumulative[j] <= next {
            j += 1;
        }
    }
    TransportPlan { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn m(atoms: &[f64], weights: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::new(atoms, weights).unwrap()
    }

    #[test]
    fn empirical_counts_duplicates() {
        let e = DiscreteMeasure::empirical(&[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(e.atoms(), &[1.0, 2.0]);
        assert!((e.weights()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((e.weights()[1] - 1.0 / 3.0).abs() < 1e-15);

        let single = DiscreteMeasure::empirical(&[5.0]).unwrap();
        assert_eq!(single.atoms(), &[5.0]);
        assert_eq!(single.weights(), &[1.0]);
    }

    #[test]
    fn empirical_rejects_empty() {
        assert_eq!(DiscreteMeasure::empirical(&[]), Err(Error::EmptySample));
    }

    #[test]
    fn construction_merges_and_renormalizes() {
        let x = m(&[1.0, 1.0 + 1e-13, 0.0], &[0.25, 0.25, 0.5 + 1e-10]);
        assert_eq!(x.len(), 2);
        let total: f64 = x.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(DiscreteMeasure::new(&[0.0, 1.0], &[0.5, 0.6]).is_err());
        assert!(DiscreteMeasure::new(&[0.0], &[-1.0]).is_err());
    }

    #[test]
    fn cdf_is_right_continuous() {
        let d = DiscreteMeasure::dirac(0.0).unwrap();
        assert_eq!(d.cdf(-1.0), 0.0);
        assert_eq!(d.cdf(0.0), 1.0);
        let half = m(&[0.0, 1.0], &[0.5, 0.5]);
        assert_eq!(half.cdf(0.5), 0.5);
        assert_eq!(half.cdf(1.0), 1.0);
        assert_eq!(half.cdf(7.0), 1.0);
    }

    #[test]
    fn quantile_jumps() {
        let d = DiscreteMeasure::dirac(3.5).unwrap();
        for t in [0.01, 0.5, 0.99] {
            assert_eq!(d.quantile(t).unwrap(), 3.5);
        }
        let half = m(&[0.0, 1.0], &[0.5, 0.5]);
        assert_eq!(half.quantile(0.25).unwrap(), 0.0);
        assert_eq!(half.quantile(0.75).unwrap(), 1.0);
        assert!(half.quantile(0.0).is_err());
        assert!(half.quantile(1.0).is_err());
    }

    #[test]
    fn wasserstein_examples() {
        let d0 = DiscreteMeasure::dirac(0.0).unwrap();
        let d1 = DiscreteMeasure::dirac(1.0).unwrap();
        assert!((wasserstein_p(&d0, &d1, 2.0).unwrap() - 1.0).abs() < 1e-15);
        let a = m(&[0.0, 1.0], &[0.5, 0.5]);
        let b = m(&[0.0, 2.0], &[0.5, 0.5]);
        // Brute-force LP over all couplings of two 2-atom measures: the
        // coupling (t, 1/2-t; 1/2-t, t) costs 0*t + 2(1/2-t) + 1(1/2-t) + 1*t,
        // minimized at t = 1/2 with value 1/2.
        assert!((wasserstein_p(&a, &b, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(wasserstein_p(&a, &a, 3.0).unwrap(), 0.0);
        assert!(wasserstein_p(&a, &b, 0.5).is_err());
    }

    #[test]
    fn w1_cdf_examples() {
        let da = DiscreteMeasure::dirac(-2.0).unwrap();
        let db = DiscreteMeasure::dirac(3.0).unwrap();
        assert!((wasserstein_1_cdf(&da, &db) - 5.0).abs() < 1e-15);
        // LP: move 1/3 of mass from 1 to 0 at unit distance.
        let a = m(&[0.0, 1.0], &[1.0 / 3.0, 2.0 / 3.0]);
        let b = m(&[0.0, 1.0], &[2.0 / 3.0, 1.0 / 3.0]);
        assert!((wasserstein_1_cdf(&a, &b) - 1.0 / 3.0).abs() < 1e-15);
        assert!((wasserstein_1_cdf(&a, &b) - wasserstein_p(&a, &b, 1.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn dual_bound_examples() {
        let d0 = DiscreteMeasure::dirac(0.0).unwrap();
        let d1 = DiscreteMeasure::dirac(1.0).unwrap();
        let id = DeclaredLipschitz { f: |x: f64| x, lip: 1.0 };
        let constant = DeclaredLipschitz { f: |_x: f64| 4.0, lip: 0.0 };
        assert!((w1_dual_bound(&d0, &d1, &[&id]) - 1.0).abs() < 1e-15);
        assert_eq!(w1_dual_bound(&d0, &d1, &[&constant]), 0.0);
    }

    #[test]
    fn piecewise_linear_eval() {
        let f = PiecewiseLinear::new(vec![(1.0, 2.0), (0.0, 0.0), (2.0, 2.0)]).unwrap();
        assert_eq!(f.eval(-1.0), 0.0);
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.eval(1.5), 2.0);
        assert_eq!(f.eval(9.0), 2.0);
        assert_eq!(f.lipschitz(), 2.0);
    }

    #[test]
    fn plan_examples() {
        let d0 = DiscreteMeasure::dirac(0.0).unwrap();
        let d1 = DiscreteMeasure::dirac(1.0).unwrap();
        assert_eq!(optimal_plan(&d0, &d1).entries, vec![(0, 0, 1.0)]);
        let a = m(&[0.0, 1.0, 4.0], &[0.2, 0.3, 0.5]);
        let plan = optimal_plan(&a, &a);
        assert!(plan.entries.iter().all(|&(i, j, _)| i == j));
        assert!(plan.marginal_defect(&a, &a) < 1e-15);
    }
}
