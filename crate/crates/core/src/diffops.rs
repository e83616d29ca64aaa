//! Finite-difference operators on the lattice, and the algebraic expansion
//! `J(id + u) = 1 + div(u) - F(u)`.
//!
//! Central differences are second order in the interior and use second-order
//! one-sided quotients on boundary faces, so every derivative is defined at
//! every node. Forward and backward differences form the summation-by-parts
//! pair: forward quotients live on edges (the last node along an axis carries
//! no edge and stores 0) and `backward ∘ forward` reproduces the standard
//! `2·dim + 1` point Laplacian at interior nodes.

use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField, Transformation, VectorField};

/// One-dimensional difference quotient applied along an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Difference {
    Central,
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientScheme {
    Central,
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceScheme {
    Central,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StencilConvention {
    pub gradient: GradientScheme,
    pub divergence: DivergenceScheme,
}

impl StencilConvention {
    pub const CENTRAL: Self = Self {
        gradient: GradientScheme::Central,
        divergence: DivergenceScheme::Central,
    };

    /// Forward gradient with backward divergence; adjoint up to sign on
    /// zero-boundary fields.
    pub const SUMMATION_BY_PARTS: Self = Self {
        gradient: GradientScheme::Forward,
        divergence: DivergenceScheme::Backward,
    };
}

impl Default for StencilConvention {
    fn default() -> Self {
        Self::CENTRAL
    }
}

/// Difference quotient of `s` along `axis`.
pub fn derivative(s: &ScalarField, axis: usize, scheme: Difference) -> ScalarField {
    let grid = *s.grid();
    assert!(axis < grid.dim(), "axis {axis} out of range");
    let n = grid.n();
    let stride = grid.stride(axis);
    let inv_h = 1.0 / grid.spacing();
    let v = s.values();
    let out = (0..grid.len())
        .map(|idx| {
            let i = (idx / stride) % n;
            let at = |k: isize| v[(idx as isize + k * stride as isize) as usize];
            match scheme {
                Difference::Central => {
                    if i == 0 {
                        0.5 * inv_h * (-3.0 * at(0) + 4.0 * at(1) - at(2))
                    } else if i == n - 1 {
                        0.5 * inv_h * (3.0 * at(0) - 4.0 * at(-1) + at(-2))
                    } else {
                        0.5 * inv_h * (at(1) - at(-1))
                    }
                }
                Difference::Forward => {
                    if i == n - 1 {
                        0.0
                    } else {
                        inv_h * (at(1) - at(0))
                    }
                }
                Difference::Backward => {
                    if i == 0 {
                        inv_h * (at(1) - at(0))
                    } else {
                        inv_h * (at(0) - at(-1))
                    }
                }
            }
        })
        .collect();
    ScalarField::from_raw(grid, out)
}

fn central(s: &ScalarField, axis: usize) -> ScalarField {
    derivative(s, axis, Difference::Central)
}

pub fn gradient(s: &ScalarField, convention: StencilConvention) -> VectorField {
    let scheme = match convention.gradient {
        GradientScheme::Central => Difference::Central,
        GradientScheme::Forward => Difference::Forward,
    };
    let grid = *s.grid();
    let components = (0..grid.dim()).map(|axis| derivative(s, axis, scheme)).collect();
    VectorField::from_parts(grid, components)
}

fn require_dim_components(v: &VectorField) -> Result<()> {
    if v.component_count() != v.grid().dim() {
        return Err(Error::DimensionMismatch(format!(
            "expected {} components, got {}",
            v.grid().dim(),
            v.component_count()
        )));
    }
    Ok(())
}

pub fn divergence(v: &VectorField, convention: StencilConvention) -> Result<ScalarField> {
    require_dim_components(v)?;
    let scheme = match convention.divergence {
        DivergenceScheme::Central => Difference::Central,
        DivergenceScheme::Backward => Difference::Backward,
    };
    let grid = *v.grid();
    let mut acc = vec![0.0; grid.len()];
    for (axis, c) in v.components().iter().enumerate() {
        let d = derivative(c, axis, scheme);
        acc.iter_mut().zip(d.values()).for_each(|(a, b)| *a += b);
    }
    Ok(ScalarField::from_raw(grid, acc))
}

/// Central-difference curl.
///
/// 3D: `(∂₂v₃ − ∂₃v₂, ∂₃v₁ − ∂₁v₃, ∂₁v₂ − ∂₂v₁)`. 2D: the single component
/// `∂₁v₂ − ∂₂v₁`, which is the third 3D component of the extruded field.
pub fn curl(v: &VectorField) -> Result<VectorField> {
    require_dim_components(v)?;
    let grid = *v.grid();
    let d = |c: usize, axis: usize| central(v.component(c), axis);
    let components = if grid.dim() == 2 {
        vec![d(1, 0).sub(&d(0, 1))?]
    } else {
        vec![
            d(2, 1).sub(&d(1, 2))?,
            d(0, 2).sub(&d(2, 0))?,
            d(1, 0).sub(&d(0, 1))?,
        ]
    };
    Ok(VectorField::from_parts(grid, components))
}

/// Number of components the curl has on a grid of this dimension.
pub fn curl_component_count(grid: &GridSpec) -> usize {
    if grid.dim() == 2 {
        1
    } else {
        3
    }
}

/// Standard `2·dim + 1` point Laplacian; boundary nodes hold 0.
pub fn laplacian(s: &ScalarField) -> ScalarField {
    let grid = *s.grid();
    let n = grid.n();
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let v = s.values();
    let strides: Vec<usize> = (0..grid.dim()).map(|a| grid.stride(a)).collect();
    let out = (0..grid.len())
        .map(|idx| {
            let interior = strides.iter().all(|&st| {
                let i = (idx / st) % n;
                i != 0 && i != n - 1
            });
            if !interior {
                return 0.0;
            }
            let mut acc = -2.0 * grid.dim() as f64 * v[idx];
            for &st in &strides {
                acc += v[idx + st] + v[idx - st];
            }
            acc * inv_h2
        })
        .collect();
    ScalarField::from_raw(grid, out)
}

pub fn vector_laplacian(v: &VectorField) -> VectorField {
    let components = v.components().iter().map(laplacian).collect();
    VectorField::from_parts(*v.grid(), components)
}

/// Central-difference gradient matrix: `entry[i][j] = ∂v_i/∂x_j`.
pub fn gradient_matrix(v: &VectorField) -> Result<Vec<Vec<ScalarField>>> {
    require_dim_components(v)?;
    let dim = v.grid().dim();
    Ok(v
        .components()
        .iter()
        .map(|c| (0..dim).map(|axis| central(c, axis)).collect())
        .collect())
}

/// Gathers the matrix at one node.
fn matrix_at(m: &[Vec<ScalarField>], node: usize) -> [[f64; 3]; 3] {
    let mut a = [[0.0; 3]; 3];
    for (i, row) in m.iter().enumerate() {
        for (j, entry) in row.iter().enumerate() {
            a[i][j] = entry.values()[node];
        }
    }
    a
}

fn det(a: &[[f64; 3]; 3], dim: usize) -> f64 {
    if dim == 2 {
        a[0][0] * a[1][1] - a[0][1] * a[1][0]
    } else {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    }
}

/// Sum of the principal 2×2 minors.
fn tail(a: &[[f64; 3]; 3], dim: usize) -> f64 {
    if dim == 2 {
        det(a, 2)
    } else {
        a[0][0] * a[1][1] + a[0][0] * a[2][2] + a[1][1] * a[2][2]
            - a[0][1] * a[1][0]
            - a[0][2] * a[2][0]
            - a[1][2] * a[2][1]
    }
}

fn pointwise(v: &VectorField, f: impl Fn(&[[f64; 3]; 3], usize) -> f64) -> Result<ScalarField> {
    let m = gradient_matrix(v)?;
    let grid = *v.grid();
    let values = (0..grid.len())
        .map(|node| f(&matrix_at(&m, node), grid.dim()))
        .collect();
    Ok(ScalarField::from_raw(grid, values))
}

/// Determinant of the central-difference gradient of the positions.
pub fn jacobian_det(phi: &Transformation) -> ScalarField {
    pointwise(phi.positions(), det).expect("transformations carry dim components")
}

/// Quadratic remainder of the Jacobian expansion.
///
/// 3D: `u₁,₁u₂,₂ + u₁,₁u₃,₃ + u₂,₂u₃,₃ − u₁,₂u₂,₁ − u₁,₃u₃,₁ − u₂,₃u₃,₂`.
/// 2D: `det ∇u`, the exact 2×2 analog.
pub fn expansion_tail(u: &VectorField) -> Result<ScalarField> {
    pointwise(u, tail)
}

/// `F(u) = −(det ∇u + Tail(u))` in 3D and `−det ∇u` in 2D, so that
/// `J(id + u) = 1 + div u − F(u)` holds exactly for shared quotients.
pub fn expansion_f(u: &VectorField) -> Result<ScalarField> {
    pointwise(u, |a, dim| {
        if dim == 2 {
            -det(a, 2)
        } else {
            -(det(a, 3) + tail(a, 3))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn g2(n: usize) -> GridSpec {
        GridSpec::new(2, n).unwrap()
    }

    fn g3(n: usize) -> GridSpec {
        GridSpec::new(3, n).unwrap()
    }

    fn interior_max(s: &ScalarField) -> f64 {
        s.grid()
            .interior_nodes()
            .map(|i| s.values()[i].abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn gradient_of_constant_and_linear() {
        let g = g3(7);
        let c = ScalarField::constant(g, 4.2);
        assert!(gradient(&c, StencilConvention::CENTRAL).max_norm() < 1e-12);
        let x1 = ScalarField::from_fn(g, |x| x[0]);
        for conv in [StencilConvention::CENTRAL, StencilConvention::SUMMATION_BY_PARTS] {
            let grad = gradient(&x1, conv);
            for node in g.interior_nodes() {
                assert!((grad.component(0).values()[node] - 1.0).abs() < 1e-12);
                assert!(grad.component(1).values()[node].abs() < 1e-12);
                assert!(grad.component(2).values()[node].abs() < 1e-12);
            }
        }
        // one-sided boundary quotients are exact on linears too
        let grad = gradient(&x1, StencilConvention::CENTRAL);
        assert!(grad.component(0).values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn gradient_of_sine_product() {
        let g = g2(65);
        let s = ScalarField::from_fn(g, |x| (PI * x[0]).sin() * (PI * x[1]).sin());
        let grad = gradient(&s, StencilConvention::CENTRAL);
        let exact = VectorField::from_fn(g, 2, |x| {
            vec![
                PI * (PI * x[0]).cos() * (PI * x[1]).sin(),
                PI * (PI * x[0]).sin() * (PI * x[1]).cos(),
            ]
        });
        // truncation error is π(1 − sinc(πh)) ≈ 1.26e-3 absolute, so measure it
        // relative to max|∇s| = π
        let err = grad.sub(&exact).unwrap();
        assert!(interior_max(err.component(0)) / PI < 1e-3);
        assert!(interior_max(err.component(1)) / PI < 1e-3);
    }

    #[test]
    fn divergence_examples() {
        let g = g3(6);
        let id = Transformation::identity(g);
        let d = divergence(id.positions(), StencilConvention::CENTRAL).unwrap();
        assert!(d.values().iter().all(|v| (v - 3.0).abs() < 1e-12));
        let zero = divergence(&VectorField::zeros(g, 3), StencilConvention::CENTRAL).unwrap();
        assert_eq!(zero.max_norm(), 0.0);
        assert!(divergence(&VectorField::zeros(g, 2), StencilConvention::CENTRAL).is_err());
    }

    #[test]
    fn backward_of_forward_is_the_laplacian() {
        let g = g2(11);
        let s = ScalarField::from_fn(g, |x| (3.0 * x[0]).exp() * (2.0 * x[1]).cos());
        let composed =
            divergence(&gradient(&s, StencilConvention::SUMMATION_BY_PARTS), StencilConvention::SUMMATION_BY_PARTS)
                .unwrap();
        let lap = laplacian(&s);
        for node in g.interior_nodes() {
            assert!((composed.values()[node] - lap.values()[node]).abs() < 1e-9);
        }
    }

    #[test]
    fn central_divergence_of_gradient_approximates_laplacian() {
        // wide-stencil composition against the compact Laplacian: both O(h²)
        let g = g2(33);
        let s = ScalarField::from_fn(g, |x| (PI * x[0]).sin() * (2.0 * PI * x[1]).sin() + x[0] * x[1]);
        let composed =
            divergence(&gradient(&s, StencilConvention::CENTRAL), StencilConvention::CENTRAL).unwrap();
        let diff = composed.sub(&laplacian(&s)).unwrap();
        // measured 0.36 at N=33; the bound is the O(h^2) truncation of both stencils
        let scale = 5.0 * PI * PI;
        assert!(interior_max(&diff) < 0.05 * scale, "{}", interior_max(&diff));
    }

    #[test]
    fn curl_examples() {
        let g = g2(9);
        let rot = VectorField::from_fn(g, 2, |x| vec![-x[1], x[0]]);
        let c = curl(&rot).unwrap();
        assert_eq!(c.component_count(), 1);
        assert!(c.component(0).values().iter().all(|v| (v - 2.0).abs() < 1e-12));

        let g = g3(9);
        let sym = VectorField::from_fn(g, 3, |x| vec![x[1] * x[2], x[0] * x[2], x[0] * x[1]]);
        assert!(curl(&sym).unwrap().max_norm() < 1e-12);
    }

    #[test]
    fn curl_of_gradient_vanishes() {
        for g in [g2(65), g3(17)] {
            let s = ScalarField::from_fn(g, |x| {
                (2.0 * x[0] + x[1]).sin() * (x[2] + 0.5).exp() + x[0] * x[1] * x[1]
            });
            let c = curl(&gradient(&s, StencilConvention::CENTRAL)).unwrap();
            assert!(c.max_norm() < 1e-10, "{}", c.max_norm());
        }
    }

    #[test]
    fn divergence_of_curl_vanishes() {
        let g = g3(13);
        let v = VectorField::from_fn(g, 3, |x| {
            vec![(x[1] * 3.0).sin(), x[0] * x[2] * x[2], (x[0] + x[1]).cos()]
        });
        let d = divergence(&curl(&v).unwrap(), StencilConvention::CENTRAL).unwrap();
        assert!(d.max_norm() < 1e-10);
    }

    #[test]
    fn laplacian_examples() {
        let g = g2(17);
        assert!(laplacian(&ScalarField::constant(g, 3.0)).max_norm() < 1e-12);
        let sq = laplacian(&ScalarField::from_fn(g, |x| x[0] * x[0]));
        for node in g.interior_nodes() {
            assert!((sq.values()[node] - 2.0).abs() < 1e-9);
        }
        for node in g.boundary_nodes() {
            assert_eq!(sq.values()[node], 0.0);
        }

        // eigenfunction: second-order error
        let errs: Vec<f64> = [33, 65]
            .iter()
            .map(|&n| {
                let g = g2(n);
                let s = ScalarField::from_fn(g, |x| (PI * x[0]).sin() * (PI * x[1]).sin());
                let lap = laplacian(&s);
                let exact = s.scale(-2.0 * PI * PI);
                interior_max(&lap.sub(&exact).unwrap())
            })
            .collect();
        let ratio = errs[0] / errs[1];
        assert!((3.5..4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn jacobian_of_identity_and_diagonal_stretch() {
        let g = g3(7);
        let jac = jacobian_det(&Transformation::identity(g));
        assert!(jac.values().iter().all(|v| (v - 1.0).abs() < 1e-12));

        let (a, b, c) = (0.1, -0.05, 0.2);
        let pos = VectorField::from_fn(g, 3, |x| {
            vec![(1.0 + a) * x[0], (1.0 + b) * x[1], (1.0 + c) * x[2]]
        });
        let m = gradient_matrix(&pos).unwrap();
        let jac = pointwise(&pos, det).unwrap();
        let expected = (1.0 + a) * (1.0 + b) * (1.0 + c);
        assert!(jac.values().iter().all(|v| (v - expected).abs() < 1e-12));
        assert_eq!(m.len(), 3);
    }

    #[test]
    fn tail_and_f_of_diagonal_field() {
        let g = g3(6);
        let (a, b, c) = (0.3, 0.2, -0.1);
        let u = VectorField::from_fn(g, 3, |x| vec![a * x[0], b * x[1], c * x[2]]);
        let t = expansion_tail(&u).unwrap();
        let f = expansion_f(&u).unwrap();
        for node in 0..g.len() {
            assert!((t.values()[node] - (a * b + a * c + b * c)).abs() < 1e-12);
            assert!((f.values()[node] + (a * b * c + a * b + a * c + b * c)).abs() < 1e-12);
        }
        assert_eq!(expansion_f(&VectorField::zeros(g, 3)).unwrap().max_norm(), 0.0);
    }

    #[test]
    fn planar_f_is_negative_determinant() {
        let g = g2(5);
        let u = VectorField::from_fn(g, 2, |x| vec![0.2 * x[0] + 0.1 * x[1], 0.3 * x[0] - 0.4 * x[1]]);
        let f = expansion_f(&u).unwrap();
        let expected = -(0.2 * -0.4 - 0.1 * 0.3);
        assert!(f.values().iter().all(|v| (v - expected).abs() < 1e-12));
    }
}
