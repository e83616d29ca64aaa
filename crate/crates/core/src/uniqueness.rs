//! Numerical checks of the uniqueness argument for maps near the identity.
//!
//! For `φ = id + u` sharing Jacobian determinant and curl with the identity,
//! `div u = F(u)` and `curl u = 0`, hence `Δu = ∇F(u)`. The argument bounds
//! `‖u‖`, `‖∇u‖` and `‖Δu‖` through Green's identity, Cauchy–Schwarz and the
//! Poincaré inequality, then iterates the bounds down to zero. Everything here
//! evaluates those steps on discrete fields with the summation-by-parts pair,
//! for which Green's identity holds exactly.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diffops::{self, StencilConvention};
use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField, VectorField};
use crate::poisson::{self, SolverConfig};

/// Relative slack for the Green identity and Cauchy–Schwarz rows.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Relative slack for rows involving the Poincaré constant.
pub const POINCARE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormTriple {
    pub u_l2: f64,
    pub grad_l2: f64,
    pub lap_l2: f64,
}

impl NormTriple {
    /// The smallness parameter `ε` read off a measured triple.
    pub fn max(&self) -> f64 {
        self.u_l2.max(self.grad_l2).max(self.lap_l2)
    }
}

fn require_zero_boundary(u: &VectorField) -> Result<()> {
    let grid = u.grid();
    for c in u.components() {
        for node in grid.boundary_nodes() {
            let value = c.values()[node];
            if value != 0.0 {
                return Err(Error::NotZeroBoundary { node, value });
            }
        }
    }
    Ok(())
}

fn forward_gradient_sq(u: &VectorField) -> Result<f64> {
    let mut sum = 0.0;
    for c in u.components() {
        let g = diffops::gradient(c, StencilConvention::SUMMATION_BY_PARTS);
        sum += g.l2_norm()?.powi(2);
    }
    Ok(sum)
}

/// `(‖u‖, ‖∇⁺u‖, ‖Δₕu‖)` for a field vanishing on the boundary.
pub fn norm_triple(u: &VectorField) -> Result<NormTriple> {
    require_zero_boundary(u)?;
    let u_l2 = u.l2_norm()?;
    let grad_l2 = forward_gradient_sq(u)?.sqrt();
    let lap_l2 = diffops::vector_laplacian(u).l2_norm()?;
    Ok(NormTriple { u_l2, grad_l2, lap_l2 })
}

fn inner_with_laplacian(u: &VectorField) -> Result<f64> {
    u.dot(&diffops::vector_laplacian(u))
}

/// `|‖∇⁺u‖² − |⟨u, Δₕu⟩||`.
pub fn green_identity_gap(u: &VectorField) -> Result<f64> {
    require_zero_boundary(u)?;
    let grad_sq = forward_gradient_sq(u)?;
    Ok((grad_sq - inner_with_laplacian(u)?.abs()).abs())
}

/// `(‖∇u‖², ‖u‖·‖Δu‖)`.
pub fn interpolation_check(u: &VectorField) -> Result<(f64, f64)> {
    let t = norm_triple(u)?;
    Ok((t.grad_l2 * t.grad_l2, t.u_l2 * t.lap_l2))
}

/// `(‖u‖², C·‖∇u‖²)`.
pub fn poincare_check(u: &VectorField, c: f64) -> Result<(f64, f64)> {
    let t = norm_triple(u)?;
    Ok((t.u_l2 * t.u_l2, c * t.grad_l2 * t.grad_l2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRow {
    pub k: usize,
    pub bound_u: f64,
    pub bound_grad: f64,
    pub bound_lap: f64,
}

/// The bounds `C^(1+k/2) ε^(2+k)`, `C^(1/2+k/2) ε^(2+k)`, `C^(k/2) ε^(2+k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSequence {
    pub epsilon: f64,
    pub c: f64,
    pub rows: Vec<BoundRow>,
    /// `ε < min{1, 1/√C}`.
    pub convergent: bool,
}

pub fn bound_sequence(epsilon: f64, c: f64, k_max: usize) -> Result<BoundSequence> {
    if !(epsilon > 0.0 && epsilon.is_finite()) || !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "epsilon and C must be positive and finite, got ε={epsilon}, C={c}"
        )));
    }
    let rows = (0..=k_max)
        .map(|k| {
            let kf = k as f64;
            let eps_pow = epsilon.powf(2.0 + kf);
            BoundRow {
                k,
                bound_u: c.powf(1.0 + kf / 2.0) * eps_pow,
                bound_grad: c.powf(0.5 + kf / 2.0) * eps_pow,
                bound_lap: c.powf(kf / 2.0) * eps_pow,
            }
        })
        .collect();
    Ok(BoundSequence {
        epsilon,
        c,
        rows,
        convergent: epsilon < 1.0_f64.min(1.0 / c.sqrt()),
    })
}

impl BoundSequence {
    /// Columns `k, epsilon, c, bound_u, bound_grad, bound_lap, convergent`.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["k", "epsilon", "c", "bound_u", "bound_grad", "bound_lap", "convergent"])?;
        for r in &self.rows {
            w.write_record(&[
                r.k.to_string(),
                format!("{:e}", self.epsilon),
                format!("{:e}", self.c),
                format!("{:e}", r.bound_u),
                format!("{:e}", r.bound_grad),
                format!("{:e}", r.bound_lap),
                u8::from(self.convergent).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainRow {
    pub relation: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// Holds only under the structural hypothesis `‖Δu‖ ≤ ε²`, which a
    /// generic field need not satisfy; excluded from [`ChainReport::all_pass`].
    pub conditional: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub triple: NormTriple,
    pub epsilon: f64,
    pub c: f64,
    pub rows: Vec<ChainRow>,
}

impl ChainReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().filter(|r| !r.conditional).all(|r| r.pass)
    }

    pub const CSV_HEADER: [&'static str; 6] = ["trial", "relation", "lhs", "rhs", "pass", "conditional"];

    pub fn write_csv_rows<W: Write>(&self, trial: usize, w: &mut csv::Writer<W>) -> Result<()> {
        for r in &self.rows {
            w.write_record(&[
                trial.to_string(),
                r.relation.to_string(),
                format!("{:e}", r.lhs),
                format!("{:e}", r.rhs),
                u8::from(r.pass).to_string(),
                u8::from(r.conditional).to_string(),
            ])?;
        }
        Ok(())
    }
}

fn leq(lhs: f64, rhs: f64, tol: f64) -> bool {
    lhs <= rhs + tol * rhs.abs()
}

/// Evaluates every link of the inequality chain on `u`.
pub fn chain_report(u: &VectorField, c: f64) -> Result<ChainReport> {
    let t = norm_triple(u)?;
    let inner = inner_with_laplacian(u)?.abs();
    let grad_sq = t.grad_l2 * t.grad_l2;
    let eps = t.max();
    let row = |relation, lhs, rhs, pass| ChainRow {
        relation,
        lhs,
        rhs,
        pass,
        conditional: false,
    };
    let rows = vec![
        row(
            "green_identity",
            grad_sq,
            inner,
            (grad_sq - inner).abs() <= IDENTITY_TOL * grad_sq.max(1.0),
        ),
        row(
            "interpolation",
            grad_sq,
            t.u_l2 * t.lap_l2,
            leq(grad_sq, t.u_l2 * t.lap_l2, IDENTITY_TOL),
        ),
        row(
            "poincare",
            t.u_l2 * t.u_l2,
            c * grad_sq,
            leq(t.u_l2 * t.u_l2, c * grad_sq, POINCARE_TOL),
        ),
        row(
            "poincare_interpolation",
            t.u_l2 * t.u_l2,
            c * t.u_l2 * t.lap_l2,
            leq(t.u_l2 * t.u_l2, c * t.u_l2 * t.lap_l2, POINCARE_TOL),
        ),
        row(
            "u_by_laplacian",
            t.u_l2,
            c * t.lap_l2,
            leq(t.u_l2, c * t.lap_l2, POINCARE_TOL),
        ),
        ChainRow {
            relation: "u_by_epsilon_squared",
            lhs: t.u_l2,
            rhs: c * eps * eps,
            pass: leq(t.u_l2, c * eps * eps, POINCARE_TOL),
            conditional: true,
        },
        row(
            "grad_by_geometric_mean",
            t.grad_l2,
            (t.u_l2 * t.lap_l2).sqrt(),
            leq(t.grad_l2, (t.u_l2 * t.lap_l2).sqrt(), IDENTITY_TOL),
        ),
    ];
    Ok(ChainReport {
        triple: t,
        epsilon: eps,
        c,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointRun {
    /// Seed followed by every iterate.
    pub triples: Vec<NormTriple>,
    /// Interior `‖∇F(u_m)‖₂` driving step `m + 1`.
    pub forcing: Vec<f64>,
    pub diverged: bool,
}

impl FixedPointRun {
    /// Whether `‖∇F(u_m)‖ ≤ ε_m²` held at each step, with `ε_m` the max of
    /// the measured triple.
    pub fn epsilon_squared_bounds(&self) -> Vec<bool> {
        self.forcing
            .iter()
            .zip(&self.triples)
            .map(|(f, t)| *f <= t.max() * t.max())
            .collect()
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["m", "u_l2", "grad_l2", "lap_l2", "forcing_l2", "diverged"])?;
        let last = self.triples.len() - 1;
        for (m, t) in self.triples.iter().enumerate() {
            let forcing = self.forcing.get(m).map_or(String::new(), |f| format!("{f:e}"));
            w.write_record(&[
                m.to_string(),
                format!("{:e}", t.u_l2),
                format!("{:e}", t.grad_l2),
                format!("{:e}", t.lap_l2),
                forcing,
                u8::from(self.diverged && m == last).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Growth over the seed's `ε` that counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 10.0;

/// Iterates `u ← Δₕ⁻¹ ∇F(u)` with homogeneous Dirichlet data.
///
/// `u = 0` is the fixed point; small seeds contract onto it quadratically.
/// Growth past [`DIVERGENCE_FACTOR`] times the seed's `ε`, or a non-finite
/// iterate, stops the run with `diverged` set.
pub fn fixed_point_iteration(seed: &VectorField, m_max: usize, cfg: &SolverConfig) -> Result<FixedPointRun> {
    let start = norm_triple(seed)?;
    let limit = DIVERGENCE_FACTOR * start.max();
    let mut run = FixedPointRun {
        triples: vec![start],
        forcing: Vec::new(),
        diverged: false,
    };
    let mut u = seed.clone();
    for _ in 0..m_max {
        if run.triples.last().is_some_and(|t| t.max() == 0.0) {
            break;
        }
        let rhs = match diffops::expansion_f(&u) {
            Ok(f) => diffops::gradient(&f, StencilConvention::CENTRAL),
            Err(Error::NonFinite) => {
                run.diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let Ok(forcing) = rhs.interior_l2_norm() else {
            run.diverged = true;
            break;
        };
        run.forcing.push(forcing);
        let next = match poisson::solve_vector_dirichlet(&rhs, cfg) {
            Ok(v) if v.is_finite() => v,
            Ok(_) | Err(Error::NonFinite | Error::SolverDiverged { .. }) => {
                run.diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let t = match norm_triple(&next) {
            Ok(t) => t,
            Err(Error::NonFinite) => {
                run.diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        run.triples.push(t);
        if !t.max().is_finite() || t.max() > limit {
            run.diverged = true;
            break;
        }
        u = next;
    }
    Ok(run)
}

/// Pointwise product bound on `‖∇F(u)‖₂` from max-norms of first and second
/// difference quotients.
///
/// With `m₁ = max|∂ⱼuᵢ|` and `m₂ = max|∂ₖ∂ⱼuᵢ|` (central quotients, the
/// latter over interior nodes), a discrete mean-value argument gives
/// `|∂ₖF| ≤ dim² · p(m₁) · m₂` with `p(m) = m` in 2D and `2m + 2m²` in 3D.
pub fn forcing_product_bound(u: &VectorField) -> Result<f64> {
    let grid = *u.grid();
    let dim = grid.dim();
    let a = diffops::gradient_matrix(u)?;
    let m1 = a.iter().flatten().map(ScalarField::max_norm).fold(0.0, f64::max);
    let mut m2 = 0.0_f64;
    for entry in a.iter().flatten() {
        let d = diffops::gradient(entry, StencilConvention::CENTRAL);
        for c in d.components() {
            m2 = grid.interior_nodes().map(|i| c.values()[i].abs()).fold(m2, f64::max);
        }
    }
    let slope = if dim == 2 { m1 } else { 2.0 * m1 + 2.0 * m1 * m1 };
    let pointwise = (dim as f64).sqrt() * (dim * dim) as f64 * slope * m2;
    let interior_volume = (grid.n() - 2).pow(dim as u32) as f64 * grid.cell_volume();
    Ok(pointwise * interior_volume.sqrt())
}

/// White noise on interior nodes, zero on the boundary.
pub fn random_zero_boundary(grid: GridSpec, components: usize, seed: u64) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps = (0..components)
        .map(|_| {
            let values = (0..grid.len())
                .map(|i| if grid.is_boundary(i) { 0.0 } else { rng.random_range(-1.0..1.0) })
                .collect();
            ScalarField::from_raw(grid, values)
        })
        .collect();
    VectorField::from_parts(grid, comps)
}

/// Random combination of low sine modes (wavenumbers 1..=3 per axis) with
/// `1/|k|²` decay; exactly zero on the boundary.
pub fn random_smooth_zero_boundary(grid: GridSpec, seed: u64) -> VectorField {
    use std::f64::consts::PI;
    const KMAX: usize = 3;
    let dim = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<[usize; 3]> = (0..KMAX.pow(dim as u32))
        .map(|m| {
            let mut k = [1; 3];
            let mut rest = m;
            for slot in k.iter_mut().take(dim) {
                *slot = rest % KMAX + 1;
                rest /= KMAX;
            }
            k
        })
        .collect();
    let comps = (0..dim)
        .map(|_| {
            let coeffs: Vec<f64> = modes
                .iter()
                .map(|k| {
                    let k2: usize = k[..dim].iter().map(|v| v * v).sum();
                    rng.random_range(-1.0..1.0) / k2 as f64
                })
                .collect();
            let mut values = vec![0.0; grid.len()];
            for (node, v) in values.iter_mut().enumerate() {
                if grid.is_boundary(node) {
                    continue;
                }
                let x = grid.coords(node);
                *v = modes
                    .iter()
                    .zip(&coeffs)
                    .map(|(k, a)| a * (0..dim).map(|d| (k[d] as f64 * PI * x[d]).sin()).product::<f64>())
                    .sum();
            }
            ScalarField::from_raw(grid, values)
        })
        .collect();
    VectorField::from_parts(grid, comps)
}

/// A smooth seed rescaled so that `max(norm_triple) = epsilon`.
pub fn scaled_seed(grid: GridSpec, seed: u64, epsilon: f64) -> Result<VectorField> {
    let raw = random_smooth_zero_boundary(grid, seed);
    if epsilon == 0.0 {
        return Ok(VectorField::zeros(grid, grid.dim()));
    }
    let t = norm_triple(&raw)?;
    Ok(raw.scale(epsilon / t.max()))
}

/// A smooth seed rescaled so that its largest nodal component is `amplitude`.
pub fn sup_scaled_seed(grid: GridSpec, seed: u64, amplitude: f64) -> VectorField {
    let raw = random_smooth_zero_boundary(grid, seed);
    let peak = raw.max_norm();
    raw.scale(amplitude / peak)
}

/// First Dirichlet eigenvector `Π sin(πxₖ)` in every component, scaled to unit L² norm.
pub fn first_eigenvector(grid: GridSpec) -> VectorField {
    use std::f64::consts::PI;
    let e = ScalarField::from_fn(grid, |x| {
        (0..grid.dim()).map(|d| (PI * x[d]).sin()).product::<f64>()
    });
    // sin(π·1) is not exactly zero in floating point
    let values = e
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| if grid.is_boundary(i) { 0.0 } else { v })
        .collect();
    let e = ScalarField::from_raw(grid, values);
    let v = VectorField::from_parts(grid, vec![e; grid.dim()]);
    let norm = v.l2_norm().expect("finite");
    v.scale(1.0 / norm)
}
