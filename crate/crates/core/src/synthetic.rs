//! Closed-form test transformations.

use std::f64::consts::PI;

use crate::error::Result;
use crate::field::{GridSpec, ScalarField, Transformation, VectorField};

/// `id + amp·(sin πx₁ sin 2πx₂, sin 2πx₁ sin πx₂)`, extended in 3D by a
/// `sin πx₃` envelope and a third component `amp·sin πx₁ sin πx₂ sin 2πx₃`.
pub fn sine_target(grid: GridSpec, amp: f64) -> Result<Transformation> {
    let u = VectorField::from_fn(grid, grid.dim(), |x| {
        let s = |k: f64, t: f64| (k * PI * t).sin();
        if grid.dim() == 2 {
            vec![amp * s(1.0, x[0]) * s(2.0, x[1]), amp * s(2.0, x[0]) * s(1.0, x[1])]
        } else {
            vec![
                amp * s(1.0, x[0]) * s(2.0, x[1]) * s(1.0, x[2]),
                amp * s(2.0, x[0]) * s(1.0, x[1]) * s(1.0, x[2]),
                amp * s(1.0, x[0]) * s(1.0, x[1]) * s(2.0, x[2]),
            ]
        }
    });
    Transformation::from_displacement(&u)
}

/// `id + amp·∇b` with `b = Π sin³(πxₖ)`; the displacement and its first
/// derivatives vanish on the boundary, and its continuous curl is zero.
pub fn gradient_bump(grid: GridSpec, amp: f64) -> Result<Transformation> {
    let dim = grid.dim();
    let u = VectorField::from_fn(grid, dim, |x| {
        let s: Vec<f64> = (0..dim).map(|k| (PI * x[k]).sin()).collect();
        let c: Vec<f64> = (0..dim).map(|k| (PI * x[k]).cos()).collect();
        (0..dim)
            .map(|k| {
                let others: f64 = (0..dim).filter(|&j| j != k).map(|j| s[j].powi(3)).product();
                amp * 3.0 * PI * s[k] * s[k] * c[k] * others
            })
            .collect()
    });
    Transformation::from_displacement(&u)
}

/// Area-preserving swirl about `center` in the `(x₁, x₂)` plane.
///
/// Points at distance `r < radius` rotate by `angle·(1 − (r/radius)²)³`;
/// everything else is left untouched, so the map fixes the boundary when the
/// disk lies inside the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Swirl {
    pub center: [f64; 2],
    pub radius: f64,
    pub angle: f64,
}

impl Swirl {
    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let r2 = dx * dx + dy * dy;
        let rho2 = self.radius * self.radius;
        if r2 >= rho2 {
            return p;
        }
        let theta = self.angle * (1.0 - r2 / rho2).powi(3);
        let (sin, cos) = theta.sin_cos();
        [
            self.center[0] + cos * dx - sin * dy,
            self.center[1] + sin * dx + cos * dy,
        ]
    }

    /// `swirl ∘ t`: the Jacobian determinant of `t` is kept, the curl is not.
    pub fn compose(&self, t: &Transformation) -> Result<Transformation> {
        let grid = *t.grid();
        let pos = t.positions();
        let mut comps: Vec<Vec<f64>> = pos.components().iter().map(|c| c.values().to_vec()).collect();
        let (xs, rest) = comps.split_at_mut(1);
        for (x, y) in xs[0].iter_mut().zip(rest[0].iter_mut()) {
            [*x, *y] = self.apply([*x, *y]);
        }
        let components = comps
            .into_iter()
            .map(|v| ScalarField::new(grid, v))
            .collect::<Result<Vec<_>>>()?;
        Transformation::from_positions(VectorField::new(components)?)
    }
}
