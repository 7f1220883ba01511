//! Zero-energy scattering and the finite-ball Neumann problem for radial
//! potentials.
//!
//! Both problems are reduced to the radial equation for `u(r) = r f(r)`,
//!
//! ```text
//! u'' = (V(r)/2 - lambda) u,    u(0) = 0,
//! ```
//!
//! integrated with fixed-step RK4 inside the support of `V`. Outside the
//! support the solution is known in closed form (affine for `lambda = 0`,
//! trigonometric otherwise), so no integration error accrues there.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::bogoliubov::MomentumLattice;
use crate::{Error, Result};

/// Radial profile of the two-body potential.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialProfile {
    /// `V(r) = v0` for `r <= R`, zero beyond.
    SoftSphere { v0: f64 },
    /// Piecewise-linear through `(r_i, v_i)`, constant below `r_0`, zero
    /// beyond the last node.
    Tabulated { r: Vec<f64>, v: Vec<f64> },
}

/// A compactly supported, nonnegative, spherically symmetric potential.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPotential {
    support_radius: f64,
    profile: PotentialProfile,
}

impl RadialPotential {
    pub fn soft_sphere(v0: f64, radius: f64) -> Result<Self> {
        if !(v0 >= 0.0) || !v0.is_finite() {
            return Err(Error::InvalidPotential(format!("soft-sphere height {v0} must be >= 0")));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidPotential(format!("support radius {radius} must be > 0")));
        }
        Ok(Self { support_radius: radius, profile: PotentialProfile::SoftSphere { v0 } })
    }

    /// `V ≡ 0`, given a unit nominal support radius.
    pub fn zero() -> Self {
        Self { support_radius: 1.0, profile: PotentialProfile::SoftSphere { v0: 0.0 } }
    }

    pub fn tabulated(r: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if r.len() != v.len() || r.len() < 2 {
            return Err(Error::InvalidPotential("table needs >= 2 matching (r, V) rows".into()));
        }
        if r[0] < 0.0 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPotential("table radii must be >= 0 and strictly increasing".into()));
        }
        if v.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidPotential("tabulated potential must be nonnegative".into()));
        }
        let support_radius = *r.last().unwrap();
        Ok(Self { support_radius, profile: PotentialProfile::Tabulated { r, v } })
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn profile(&self) -> &PotentialProfile {
        &self.profile
    }

    pub fn is_zero(&self) -> bool {
        match &self.profile {
            PotentialProfile::SoftSphere { v0 } => *v0 == 0.0,
            PotentialProfile::Tabulated { v, .. } => v.iter().all(|&x| x == 0.0),
        }
    }

    /// `V(r)`; zero for `r > support_radius`.
    pub fn value(&self, r: f64) -> f64 {
        if r > self.support_radius {
            return 0.0;
        }
        match &self.profile {
            PotentialProfile::SoftSphere { v0 } => *v0,
            PotentialProfile::Tabulated { r: rs, v } => {
                if r <= rs[0] {
                    return v[0];
                }
                let i = rs.partition_point(|&x| x <= r).min(rs.len() - 1);
                let (r0, r1) = (rs[i - 1], rs[i]);
                v[i - 1] + (v[i] - v[i - 1]) * (r - r0) / (r1 - r0)
            }
        }
    }

    /// Breakpoints of the profile inside `[0, R]`, including both ends.
    fn breakpoints(&self) -> Vec<f64> {
        match &self.profile {
            PotentialProfile::SoftSphere { .. } => vec![0.0, self.support_radius],
            PotentialProfile::Tabulated { r, .. } => {
                let mut b = Vec::with_capacity(r.len() + 1);
                if r[0] > 0.0 {
                    b.push(0.0);
                }
                b.extend_from_slice(r);
                b
            }
        }
    }

    /// `V̂(k) = ∫ V(x) e^{ik·x} dx = 4π ∫ V(r) r² sin(kr)/(kr) dr`.
    pub fn fourier(&self, k: f64) -> f64 {
        let k = k.abs();
        match &self.profile {
            PotentialProfile::SoftSphere { v0 } => {
                let r = self.support_radius;
                let x = k * r;
                // The closed form cancels badly for small x; the series is
                // exact to rounding below the switch.
                if x < 0.05 {
                    let x2 = x * x;
                    4.0 * PI * v0 * r * r * r / 3.0 * (1.0 - x2 / 10.0 + x2 * x2 / 280.0 - x2 * x2 * x2 / 15120.0)
                } else {
                    4.0 * PI * v0 * (x.sin() - x * x.cos()) / (k * k * k)
                }
            }
            PotentialProfile::Tabulated { .. } => {
                let b = self.breakpoints();
                let mut acc = 0.0;
                for w in b.windows(2) {
                    let n = 256 + 64 * (k * (w[1] - w[0])).ceil() as usize;
                    acc += simpson(|r| self.value(r) * r * r * sinc(k * r), w[0], w[1], n);
                }
                4.0 * PI * acc
            }
        }
    }
}

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// Composite Simpson over uniformly spaced samples; `values.len()` must be
/// odd.
fn simpson_samples(values: &[f64], h: f64) -> f64 {
    debug_assert!(values.len() % 2 == 1);
    let n = values.len() - 1;
    let mut acc = values[0] + values[n];
    for (i, &v) in values.iter().enumerate().take(n).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * h / 3.0
}

/// Nodes of the inner radial grid: every profile segment is split into an
/// even number of equal steps, about `steps` in total.
#[derive(Debug, Clone, PartialEq)]
struct InnerGrid {
    nodes: Vec<f64>,
    /// Node indices where profile segments start and end.
    segment_bounds: Vec<usize>,
}

impl InnerGrid {
    fn new(potential: &RadialPotential, steps: usize) -> Self {
        let b = potential.breakpoints();
        let total = potential.support_radius - b[0];
        let mut nodes = vec![b[0]];
        let mut segment_bounds = vec![0];
        for w in b.windows(2) {
            let share = ((w[1] - w[0]) / total * steps as f64).ceil() as usize;
            let m = (share.max(2) + 1) / 2 * 2;
            let h = (w[1] - w[0]) / m as f64;
            for i in 1..m {
                nodes.push(w[0] + h * i as f64);
            }
            nodes.push(w[1]);
            segment_bounds.push(nodes.len() - 1);
        }
        Self { nodes, segment_bounds }
    }

    fn steps(&self) -> usize {
        self.nodes.len() - 1
    }
}

/// RK4 for `u'' = (V/2 - lambda) u` on the inner grid, from `u(0) = 0`,
/// `u'(0) = 1`. Returns `(u, u')` at every node.
fn integrate_inner(potential: &RadialPotential, grid: &InnerGrid, lambda: f64) -> Vec<(f64, f64)> {
    let rhs = |r: f64, u: f64| (0.5 * potential.value(r) - lambda) * u;
    let mut out = Vec::with_capacity(grid.nodes.len());
    let (mut u, mut du) = (0.0, 1.0);
    out.push((u, du));
    for w in grid.nodes.windows(2) {
        let (r, h) = (w[0], w[1] - w[0]);
        // Evaluate V strictly inside the step so a profile jump at a node
        // never leaks into the neighbouring step.
        let (ra, rm, rb) = (r + 1e-14 * h, r + 0.5 * h, w[1] - 1e-14 * h);
        let k1u = du;
        let k1v = rhs(ra, u);
        let k2u = du + 0.5 * h * k1v;
        let k2v = rhs(rm, u + 0.5 * h * k1u);
        let k3u = du + 0.5 * h * k2v;
        let k3v = rhs(rm, u + 0.5 * h * k2u);
        let k4u = du + h * k3v;
        let k4v = rhs(rb, u + h * k3u);
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        du += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        out.push((u, du));
    }
    out
}

/// Largest refinement of the inner grid before giving up.
const MAX_INNER_STEPS: usize = 1 << 20;
/// Richardson error target for the inner solution.
const INNER_TOL: f64 = 1e-12;
/// Solutions whose Richardson estimate exceeds this are reported as failed.
const RESIDUAL_LIMIT: f64 = 1e-8;

/// Refines the inner grid until the RK4 solution at `lambda` is converged.
/// Returns the fine grid, its solution and the Richardson error estimate of
/// `u/u'(R)` over the coarse nodes.
fn converged_inner(
    potential: &RadialPotential,
    grid_size: usize,
    lambda: f64,
) -> Result<(InnerGrid, Vec<(f64, f64)>, f64)> {
    let mut steps = grid_size;
    let mut coarse_grid = InnerGrid::new(potential, steps);
    let mut coarse = integrate_inner(potential, &coarse_grid, lambda);
    loop {
        let fine_grid = InnerGrid::new(potential, 2 * coarse_grid.steps());
        let fine = integrate_inner(potential, &fine_grid, lambda);
        // Fine nodes are exact refinements of the coarse ones.
        let scale_c = coarse.last().unwrap().1;
        let scale_f = fine.last().unwrap().1;
        let mut defect: f64 = 0.0;
        for (i, (uc, _)) in coarse.iter().enumerate() {
            let (uf, _) = fine[2 * i];
            defect = defect.max((uf / scale_f - uc / scale_c).abs() / 15.0);
        }
        let (ucr, ducr) = *coarse.last().unwrap();
        let (ufr, dufr) = *fine.last().unwrap();
        let slope_gap = ((dufr - ducr) / dufr).abs().max(((ufr - ucr) / dufr).abs()) / 15.0;
        defect = defect.max(slope_gap);
        if defect <= INNER_TOL {
            return Ok((fine_grid, fine, defect));
        }
        steps = fine_grid.steps();
        if steps >= MAX_INNER_STEPS {
            if defect <= RESIDUAL_LIMIT {
                return Ok((fine_grid, fine, defect));
            }
            return Err(Error::NonConvergent { what: "radial RK4 integration", defect });
        }
        coarse_grid = fine_grid;
        coarse = fine;
    }
}

/// Solution of the zero-energy scattering equation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringSolution {
    pub potential: RadialPotential,
    /// Radial grid: inner RK4 nodes followed by uniform outer nodes up to
    /// `r_max`.
    pub r: Vec<f64>,
    /// `f(r)`, normalized so `f(r) = 1 - a0/r` outside the support.
    pub f: Vec<f64>,
    /// Scattering length from the affine tail of `u = r f`.
    pub a0: f64,
    /// Richardson estimate of the integration error in `f`.
    pub residual: f64,
    /// Number of inner nodes (the first `inner_len` entries of `r`).
    pub inner_len: usize,
    segment_bounds: Vec<usize>,
}

impl ScatteringSolution {
    /// `V(r)` sampled on the solution grid.
    pub fn potential_values(&self) -> Vec<f64> {
        self.r.iter().map(|&r| self.potential.value(r)).collect()
    }
}

/// Solves `[-Δ + V/2] f = 0` with `f -> 1` at infinity.
pub fn solve_zero_energy(potential: &RadialPotential, r_max: f64, grid_size: usize) -> Result<ScatteringSolution> {
    let big_r = potential.support_radius();
    if !(r_max >= 4.0 * big_r) {
        return Err(Error::Domain(format!("r_max = {r_max} must be >= 4 x support radius {big_r}")));
    }
    if grid_size < 64 {
        return Err(Error::Domain(format!("grid_size = {grid_size} must be >= 64")));
    }
    let (grid, sol, residual) = converged_inner(potential, grid_size, 0.0)?;
    let (u_r, du_r) = *sol.last().unwrap();
    let a0 = big_r - u_r / du_r;

    let mut r = Vec::with_capacity(grid.nodes.len() + grid_size);
    let mut f = Vec::with_capacity(r.capacity());
    for (&x, &(u, _)) in grid.nodes.iter().zip(&sol) {
        r.push(x);
        // f(0) = lim u/r = u'(0)/u'(R).
        f.push(if x == 0.0 { 1.0 / du_r } else { u / (du_r * x) });
    }
    let inner_len = r.len();
    let h = (r_max - big_r) / grid_size as f64;
    for i in 1..=grid_size {
        let x = if i == grid_size { r_max } else { big_r + h * i as f64 };
        r.push(x);
        f.push(1.0 - a0 / x);
    }
    Ok(ScatteringSolution {
        potential: potential.clone(),
        r,
        f,
        a0,
        residual,
        inner_len,
        segment_bounds: grid.segment_bounds,
    })
}

/// `(1/8π) ∫ V f dx = ½ ∫₀^R V(r) f(r) r² dr` by Simpson quadrature on the
/// solution grid.
pub fn scattering_length_integral(sol: &ScatteringSolution, potential: &RadialPotential) -> Result<f64> {
    if sol.potential != *potential {
        return Err(Error::GridMismatch("solution was computed for a different potential".into()));
    }
    let mut acc = 0.0;
    for w in sol.segment_bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        let h = (sol.r[b] - sol.r[a]) / (b - a) as f64;
        let vals: Vec<f64> = (a..=b)
            .map(|i| {
                // The profile value at a segment end belongs to that segment.
                let x = sol.r[i];
                let probe = if i == b { x - 1e-12 * h } else { x + 1e-12 * h };
                potential.value(probe) * sol.f[i] * x * x
            })
            .collect();
        acc += simpson_samples(&vals, h);
    }
    Ok(0.5 * acc)
}

/// Lowest Neumann eigenpair on the ball of radius `rho = N * ell`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannSolution {
    pub rho: f64,
    pub r: Vec<f64>,
    /// `f_ℓ`, normalized so `f_ℓ(rho) = 1`.
    pub f: Vec<f64>,
    /// `w_ℓ = 1 - f_ℓ`.
    pub w: Vec<f64>,
    pub lambda: f64,
    /// `f_ℓ'(rho)` after normalization.
    pub boundary_derivative: f64,
    pub inner_len: usize,
    segment_bounds: Vec<usize>,
}

/// `(u(rho), u'(rho))` continued analytically from `(u(R), u'(R))` through
/// the potential-free shell with `u'' = -lambda u`.
fn continue_outside(u_r: f64, du_r: f64, lambda: f64, dist: f64) -> (f64, f64) {
    let k = lambda.sqrt();
    let x = k * dist;
    let (c, s_over_k, k_s) = if x < 1e-6 {
        (1.0 - x * x / 2.0, dist * (1.0 - x * x / 6.0), lambda * dist)
    } else {
        (x.cos(), x.sin() / k, k * x.sin())
    };
    (u_r * c + du_r * s_over_k, -u_r * k_s + du_r * c)
}

/// Solves `[-Δ + V/2] f = λ f` on `|x| <= N ell` with zero Neumann data and
/// the lowest `λ`.
pub fn solve_neumann(
    potential: &RadialPotential,
    n_particles: usize,
    ell: f64,
    grid_size: usize,
) -> Result<NeumannSolution> {
    if !(ell > 0.0 && ell < 0.5) {
        return Err(Error::Domain(format!("ell = {ell} must lie in (0, 1/2)")));
    }
    let big_r = potential.support_radius();
    let rho = n_particles as f64 * ell;
    if !(rho > big_r) {
        return Err(Error::Domain(format!("ball radius N*ell = {rho} must exceed the support radius {big_r}")));
    }
    if grid_size < 64 {
        return Err(Error::Domain(format!("grid_size = {grid_size} must be >= 64")));
    }
    let dist = rho - big_r;

    let lambda = if potential.is_zero() {
        0.0
    } else {
        let (grid, _, _) = converged_inner(potential, grid_size, 0.0)?;
        let mismatch = |lambda: f64| {
            let sol = integrate_inner(potential, &grid, lambda);
            let (u_r, du_r) = *sol.last().unwrap();
            let (u, du) = continue_outside(u_r, du_r, lambda, dist);
            // Normalize so the sign test is insensitive to overall scale.
            (rho * du - u) / du_r.abs()
        };
        let sol0 = integrate_inner(potential, &grid, 0.0);
        let (u_r, du_r) = *sol0.last().unwrap();
        let a0 = big_r - u_r / du_r;
        let guess = 3.0 * a0.max(1e-300) / (rho * rho * rho);
        let mut lo = 0.0;
        let mut hi = guess / 8.0;
        let mut expansions = 0;
        while mismatch(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            expansions += 1;
            if expansions > 200 {
                return Err(Error::NonConvergent { what: "Neumann eigenvalue bracketing", defect: mismatch(hi) });
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if mismatch(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    let (grid, sol, _) = converged_inner(potential, grid_size, lambda)?;
    let (u_r, du_r) = *sol.last().unwrap();
    let (u_rho, du_rho) = continue_outside(u_r, du_r, lambda, dist);
    let f_rho = u_rho / rho;
    let boundary_derivative = (du_rho * rho - u_rho) / (rho * rho) / f_rho;
    if !(boundary_derivative.abs() <= 1e-8) {
        return Err(Error::NonConvergent { what: "Neumann boundary condition", defect: boundary_derivative.abs() });
    }

    let mut r = Vec::new();
    let mut f = Vec::new();
    for (&x, &(u, du)) in grid.nodes.iter().zip(&sol) {
        r.push(x);
        f.push(if x == 0.0 { du / f_rho } else { u / x / f_rho });
    }
    let inner_len = r.len();
    // Outer shell on a uniform grid with an even number of steps, no coarser
    // than the inner spacing and at most 2^17 steps.
    let h_inner = big_r / grid.steps() as f64;
    let m = ((dist / h_inner).ceil() as usize).clamp(grid_size, 1 << 17);
    let m = m + m % 2;
    let h = dist / m as f64;
    for i in 1..=m {
        let x = if i == m { rho } else { big_r + h * i as f64 };
        let (u, _) = continue_outside(u_r, du_r, lambda, x - big_r);
        r.push(x);
        f.push(u / x / f_rho);
    }
    let mut segment_bounds = grid.segment_bounds.clone();
    segment_bounds.push(r.len() - 1);
    let w = f.iter().map(|v| 1.0 - v).collect();
    Ok(NeumannSolution { rho, r, f, w, lambda, boundary_derivative, inner_len, segment_bounds })
}

impl NeumannSolution {
    /// `ŵ_ℓ(k) = ∫_{|x| <= rho} w_ℓ(x) e^{ik·x} dx`, by Simpson quadrature
    /// on each smooth piece of the grid. `scale` evaluates the transform of
    /// `w_ℓ(scale ·)` at `k` instead (the `1/scale^3` Jacobian included).
    fn radial_transform(&self, k: f64, scale: f64) -> f64 {
        let mut acc = 0.0;
        for win in self.segment_bounds.windows(2) {
            let (a, b) = (win[0], win[1]);
            let h = (self.r[b] - self.r[a]) / (b - a) as f64 / scale;
            let vals: Vec<f64> = (a..=b)
                .map(|i| {
                    let s = self.r[i] / scale;
                    self.w[i] * s * s * sinc(k * s)
                })
                .collect();
            acc += simpson_samples(&vals, h);
        }
        4.0 * PI * acc
    }

    /// `ŵ_ℓ(k)` in the unscaled variable.
    pub fn w_hat(&self, k: f64) -> f64 {
        self.radial_transform(k, 1.0)
    }
}

/// Normalization convention for the correlation coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaConvention {
    /// `η_p = -N^{-2} ŵ_ℓ(p/N)` with the transform in the unscaled variable.
    AsWritten,
    /// `η_p = -N ŵ_{N,ℓ}(p)` with `w_{N,ℓ}(x) = w_ℓ(N x)` transformed on the
    /// torus scale.
    Rescaled,
}

/// `η_p` for every lattice point, in lattice order. Values depend on `|p|`
/// only, so each shell is transformed once.
pub fn eta_coefficients(
    neu: &NeumannSolution,
    lattice: &MomentumLattice,
    n_particles: usize,
    convention: EtaConvention,
) -> Vec<f64> {
    let n = n_particles as f64;
    let mut cache: alloc::collections::BTreeMap<i64, f64> = alloc::collections::BTreeMap::new();
    lattice
        .indices()
        .map(|i| {
            let shell = lattice.norm_sq_int(i);
            *cache.entry(shell).or_insert_with(|| {
                let p = lattice.norm(i);
                match convention {
                    EtaConvention::AsWritten => -neu.w_hat(p / n) / (n * n),
                    EtaConvention::Rescaled => -n * neu.radial_transform(p, n),
                }
            })
        })
        .collect()
}
