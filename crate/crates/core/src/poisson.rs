//! Homogeneous-Dirichlet Poisson solves for the standard lattice Laplacian,
//! the div-curl → Poisson reduction, and the discrete Poincaré constant.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::diffops::{self, StencilConvention};
use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Exact modal inversion in the discrete sine basis.
    SineSpectral,
    /// Red-black successive over-relaxation.
    Sor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub backend: Backend,
    /// Relative interior residual target `‖Δₕs − rhs‖₂ / ‖rhs‖₂`.
    pub residual_tol: f64,
    /// SOR sweep limit; `None` means `50·N²`.
    pub max_iterations: Option<usize>,
    pub sor_omega: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            backend: Backend::SineSpectral,
            residual_tol: 1e-10,
            max_iterations: None,
            sor_omega: 1.9,
        }
    }
}

impl SolverConfig {
    pub fn sor() -> Self {
        Self {
            backend: Backend::Sor,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "residual_tol must be positive, got {}",
                self.residual_tol
            )));
        }
        if !(self.sor_omega > 0.0 && self.sor_omega < 2.0) {
            return Err(Error::InvalidConfig(format!(
                "sor_omega must lie in (0, 2), got {}",
                self.sor_omega
            )));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        Ok(())
    }

    fn sweep_limit(&self, grid: &GridSpec) -> usize {
        self.max_iterations.unwrap_or(50 * grid.n() * grid.n())
    }
}

/// Solves `Δₕs = rhs` at interior nodes with `s = 0` on the boundary.
///
/// Boundary entries of `rhs` are ignored.
pub fn solve_dirichlet(rhs: &ScalarField, cfg: &SolverConfig) -> Result<ScalarField> {
    cfg.validate()?;
    if !rhs.is_finite() {
        return Err(Error::NonFinite);
    }
    if rhs.grid().interior_nodes().all(|i| rhs.values()[i] == 0.0) {
        return Ok(ScalarField::zeros(*rhs.grid()));
    }
    match cfg.backend {
        Backend::SineSpectral => Ok(sine_solve(rhs)),
        Backend::Sor => sor_solve(rhs, cfg),
    }
}

pub fn solve_vector_dirichlet(rhs: &VectorField, cfg: &SolverConfig) -> Result<VectorField> {
    let components = rhs
        .components()
        .iter()
        .map(|c| solve_dirichlet(c, cfg))
        .collect::<Result<Vec<_>>>()?;
    VectorField::new(components)
}

/// `‖Δₕs − rhs‖₂ / ‖rhs‖₂` over interior nodes (absolute when `rhs` vanishes).
pub fn relative_residual(s: &ScalarField, rhs: &ScalarField) -> Result<f64> {
    let r = diffops::laplacian(s).sub(rhs)?;
    let num = r.interior_l2_norm()?;
    let den = rhs.interior_l2_norm()?;
    Ok(if den > 0.0 { num / den } else { num })
}

/// DST-I of every line along one axis of an `m^dim` interior block.
fn sine_transform_axis(data: &mut [f64], m: usize, dim: usize, axis: usize, table: &[f64]) {
    let stride = m.pow((dim - 1 - axis) as u32);
    let mut line = vec![0.0; m];
    let mut out = vec![0.0; m];
    for start in 0..data.len() {
        if !(start / stride).is_multiple_of(m) {
            continue;
        }
        for (k, slot) in line.iter_mut().enumerate() {
            *slot = data[start + k * stride];
        }
        for (j, o) in out.iter_mut().enumerate() {
            let row = &table[j * m..(j + 1) * m];
            *o = row.iter().zip(&line).map(|(a, b)| a * b).sum();
        }
        for (k, &v) in out.iter().enumerate() {
            data[start + k * stride] = v;
        }
    }
}

fn sine_solve(rhs: &ScalarField) -> ScalarField {
    let grid = *rhs.grid();
    let dim = grid.dim();
    let n = grid.n();
    let m = n - 2;
    let h = grid.spacing();

    let table: Vec<f64> = (0..m * m)
        .map(|jk| {
            let (j, k) = (jk / m + 1, jk % m + 1);
            (PI * (j * k) as f64 / (m + 1) as f64).sin()
        })
        .collect();
    let eig: Vec<f64> = (1..=m)
        .map(|k| {
            let s = (0.5 * PI * k as f64 * h).sin();
            -4.0 * s * s / (h * h)
        })
        .collect();

    let block_len = m.pow(dim as u32);
    let to_grid = |b: usize| {
        let mut multi = [0usize; 3];
        let mut rest = b;
        for axis in (0..dim).rev() {
            multi[axis] = rest % m + 1;
            rest /= m;
        }
        grid.linear_index(&multi)
    };

    let mut data: Vec<f64> = (0..block_len).map(|b| rhs.values()[to_grid(b)]).collect();
    for axis in 0..dim {
        sine_transform_axis(&mut data, m, dim, axis, &table);
    }
    for (b, v) in data.iter_mut().enumerate() {
        let mut rest = b;
        let mut lambda = 0.0;
        for _ in 0..dim {
            lambda += eig[rest % m];
            rest /= m;
        }
        *v /= lambda;
    }
    for axis in 0..dim {
        sine_transform_axis(&mut data, m, dim, axis, &table);
    }
    let norm = (2.0 / (m + 1) as f64).powi(dim as i32);

    let mut out = vec![0.0; grid.len()];
    for (b, v) in data.into_iter().enumerate() {
        out[to_grid(b)] = v * norm;
    }
    ScalarField::from_raw(grid, out)
}

fn sor_solve(rhs: &ScalarField, cfg: &SolverConfig) -> Result<ScalarField> {
    const CHECK_EVERY: usize = 10;
    let grid = *rhs.grid();
    let dim = grid.dim();
    let h2 = grid.spacing() * grid.spacing();
    let strides: Vec<usize> = (0..dim).map(|a| grid.stride(a)).collect();
    let colors: [Vec<usize>; 2] = {
        let mut red = Vec::new();
        let mut black = Vec::new();
        for node in grid.interior_nodes() {
            let m = grid.multi_index(node);
            if m[..dim].iter().sum::<usize>() % 2 == 0 {
                red.push(node);
            } else {
                black.push(node);
            }
        }
        [red, black]
    };
    let f = rhs.values();
    let omega = cfg.sor_omega;
    let diag = 2.0 * dim as f64;
    let limit = cfg.sweep_limit(&grid);

    let mut s = ScalarField::zeros(grid);
    let mut residual = f64::INFINITY;
    for sweep in 1..=limit {
        let v = s.values_mut();
        for nodes in &colors {
            for &node in nodes {
                let mut nb = 0.0;
                for &st in &strides {
                    nb += v[node + st] + v[node - st];
                }
                let gs = (nb - h2 * f[node]) / diag;
                v[node] += omega * (gs - v[node]);
            }
        }
        if sweep % CHECK_EVERY == 0 || sweep == limit {
            residual = relative_residual(&s, rhs)?;
            if residual <= cfg.residual_tol {
                return Ok(s);
            }
            if !residual.is_finite() {
                break;
            }
        }
    }
    Err(Error::SolverDiverged {
        iterations: limit,
        residual,
    })
}

/// `∇f − curl g` from central differences.
///
/// This is `Δu` for any `u` with `div u = f` and `curl u = g`, via
/// `Δu = ∇(div u) − curl(curl u)`. In 2D, where `g = ∂₁u₂ − ∂₂u₁` is a
/// scalar, it reads `(∂₁f − ∂₂g, ∂₂f + ∂₁g)`.
pub fn assemble_divcurl_rhs(f: &ScalarField, g: &VectorField) -> Result<VectorField> {
    let grid = *f.grid();
    grid.check_same(g.grid())?;
    if g.component_count() != diffops::curl_component_count(&grid) {
        return Err(Error::DimensionMismatch(format!(
            "curl target on a {}D grid needs {} components, got {}",
            grid.dim(),
            diffops::curl_component_count(&grid),
            g.component_count()
        )));
    }
    let grad_f = diffops::gradient(f, StencilConvention::CENTRAL);
    if grid.dim() == 2 {
        let g = g.component(0);
        let dg = |axis| diffops::derivative(g, axis, diffops::Difference::Central);
        let components = vec![
            grad_f.component(0).sub(&dg(1))?,
            grad_f.component(1).add(&dg(0))?,
        ];
        VectorField::new(components)
    } else {
        grad_f.sub(&diffops::curl(g)?)
    }
}

#[derive(Debug, Clone)]
pub struct DivCurlSolution {
    pub u: VectorField,
    /// Interior `‖div u − f‖₂`.
    pub div_residual: f64,
    /// Interior `‖curl u − g‖₂`.
    pub curl_residual: f64,
}

/// Solves `div u = f`, `curl u = g`, `u = 0` on the boundary through the
/// componentwise Poisson reduction and reports how well the first-order
/// system is met.
pub fn solve_div_curl(f: &ScalarField, g: &VectorField, cfg: &SolverConfig) -> Result<DivCurlSolution> {
    let rhs = assemble_divcurl_rhs(f, g)?;
    let u = solve_vector_dirichlet(&rhs, cfg)?;
    let div_residual = diffops::divergence(&u, StencilConvention::CENTRAL)?
        .sub(f)?
        .interior_l2_norm()?;
    let curl_residual = diffops::curl(&u)?.sub(g)?.interior_l2_norm()?;
    Ok(DivCurlSolution {
        u,
        div_residual,
        curl_residual,
    })
}

/// Smallest eigenvalue of the discrete Dirichlet `−Δₕ`: `dim · (4/h²) sin²(πh/2)`.
pub fn first_eigenvalue(grid: &GridSpec) -> f64 {
    let h = grid.spacing();
    let s = (0.5 * PI * h).sin();
    grid.dim() as f64 * 4.0 * s * s / (h * h)
}

/// Sharp discrete Poincaré constant `1/λ₁`.
pub fn poincare_constant(grid: &GridSpec) -> f64 {
    1.0 / first_eigenvalue(grid)
}
