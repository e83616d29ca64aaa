//! Lattices on the unit square/cube and the fields sampled on them.
//!
//! Storage is row-major over the multi-index `(i0, i1, i2)`, with the last
//! axis fastest. Axis `k` carries the coordinate `x_{k+1} = i_k / (N - 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform cubic lattice on `[0, 1]^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    n: usize,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dim must be 2 or 3, got {dim}")));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 points per axis, got {n}")));
        }
        // Guard against lattices whose node count overflows or cannot be allocated.
        if n.checked_pow(dim as u32).is_none_or(|len| len > (1usize << 32)) {
            return Err(Error::InvalidGrid(format!("lattice {n}^{dim} is too large")));
        }
        Ok(Self { dim, n })
    }

    /// Builds a grid from per-axis point counts; all axes must agree.
    pub fn from_axes(points: &[usize]) -> Result<Self> {
        let Some(&n) = points.first() else {
            return Err(Error::InvalidGrid("no axes given".into()));
        };
        if points.iter().any(|&p| p != n) {
            return Err(Error::InvalidGrid(format!(
                "rectangular lattices are not supported: {points:?}"
            )));
        }
        Self::new(points.len(), n)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    /// Weight `h^dim` attached to every node by the discrete L² norm.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Linear-index stride of axis `k`.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for axis in (0..self.dim).rev() {
            out[axis] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi[..self.dim].iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Lattice coordinate of axis index `i`.
    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 / (self.n - 1) as f64
    }

    /// Coordinates of node `idx`; unused trailing entries are zero in 2D.
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let m = self.multi_index(idx);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = self.coordinate(m[axis]);
        }
        x
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let m = self.multi_index(idx);
        m[..self.dim].iter().any(|&i| i == 0 || i == self.n - 1)
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| !self.is_boundary(i))
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.is_boundary(i))
    }

    /// Trapezoid weight of node `idx`, so that constants integrate exactly to 1.
    pub fn trapezoid_weight(&self, idx: usize) -> f64 {
        let m = self.multi_index(idx);
        m[..self.dim].iter().fold(self.cell_volume(), |w, &i| {
            if i == 0 || i == self.n - 1 {
                w * 0.5
            } else {
                w
            }
        })
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "{}D N={} vs {}D N={}",
                self.dim, self.n, other.dim, other.n
            )));
        }
        Ok(())
    }
}

/// Real samples at every lattice node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid, values })
    }

    /// Skips the finiteness scan; callers guarantee the length.
    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.len()])
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        Self::from_raw(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self::from_raw(self.grid, values))
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        self.map(|v| alpha * v)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `sqrt(h^dim * Σ v²)` over every node.
    pub fn l2_norm(&self) -> Result<f64> {
        weighted_l2(&self.grid, std::iter::once(self.values.as_slice()), false)
    }

    /// Same as [`l2_norm`](Self::l2_norm) with boundary nodes skipped.
    pub fn interior_l2_norm(&self) -> Result<f64> {
        weighted_l2(&self.grid, std::iter::once(self.values.as_slice()), true)
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Node-weighted inner product `h^dim Σ a b`.
    pub fn dot(&self, other: &ScalarField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(self.grid.cell_volume() * s)
    }

    /// Trapezoid-rule integral over the unit square/cube.
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| self.grid.trapezoid_weight(i) * v)
            .sum()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// A tuple of scalar fields on one grid.
///
/// Most vector fields have `dim` components. The planar curl is stored as a
/// single-component field.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::DimensionMismatch("vector field needs components".into()));
        };
        let grid = first.grid;
        for c in &components[1..] {
            grid.check_same(&c.grid)?;
        }
        Ok(Self { grid, components })
    }

    pub(crate) fn from_parts(grid: GridSpec, components: Vec<ScalarField>) -> Self {
        debug_assert!(components.iter().all(|c| c.grid == grid));
        Self { grid, components }
    }

    pub fn zeros(grid: GridSpec, count: usize) -> Self {
        Self::from_parts(grid, vec![ScalarField::zeros(grid); count.max(1)])
    }

    pub fn from_fn(grid: GridSpec, count: usize, f: impl Fn([f64; 3]) -> Vec<f64>) -> Self {
        let samples: Vec<Vec<f64>> = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        let components = (0..count)
            .map(|c| ScalarField::from_raw(grid, samples.iter().map(|s| s[c]).collect()))
            .collect();
        Self::from_parts(grid, components)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn component(&self, c: usize) -> &ScalarField {
        &self.components[c]
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn zip_map(&self, other: &VectorField, f: impl Fn(f64, f64) -> f64 + Copy) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        if self.components.len() != other.components.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} vs {} components",
                self.components.len(),
                other.components.len()
            )));
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.zip_map(b, f))
            .collect::<Result<_>>()?;
        Ok(Self::from_parts(self.grid, components))
    }

    pub fn add(&self, other: &VectorField) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &VectorField) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        let components = self.components.iter().map(|c| c.scale(alpha)).collect();
        Self::from_parts(self.grid, components)
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(ScalarField::is_finite)
    }

    /// `sqrt(h^dim * Σ_c Σ v_c²)` over every node.
    pub fn l2_norm(&self) -> Result<f64> {
        weighted_l2(&self.grid, self.components.iter().map(|c| c.values()), false)
    }

    pub fn interior_l2_norm(&self) -> Result<f64> {
        weighted_l2(&self.grid, self.components.iter().map(|c| c.values()), true)
    }

    pub fn max_norm(&self) -> f64 {
        self.components.iter().map(ScalarField::max_norm).fold(0.0, f64::max)
    }

    pub fn dot(&self, other: &VectorField) -> Result<f64> {
        if self.components.len() != other.components.len() {
            return Err(Error::DimensionMismatch("component counts differ".into()));
        }
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.dot(b))
            .sum()
    }
}

fn weighted_l2<'a>(
    grid: &GridSpec,
    components: impl Iterator<Item = &'a [f64]>,
    interior_only: bool,
) -> Result<f64> {
    let mut sum = 0.0;
    for values in components {
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite);
            }
            if interior_only && grid.is_boundary(i) {
                continue;
            }
            sum += v * v;
        }
    }
    Ok((grid.cell_volume() * sum).sqrt())
}

/// A map of the unit square/cube onto itself, stored as absolute node positions.
///
/// Boundary nodes sit exactly on their lattice coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Transformation {
    positions: VectorField,
}

impl Transformation {
    pub fn identity(grid: GridSpec) -> Self {
        let components = (0..grid.dim())
            .map(|axis| ScalarField::from_fn(grid, |x| x[axis]))
            .collect();
        Self {
            positions: VectorField::from_parts(grid, components),
        }
    }

    pub fn from_positions(positions: VectorField) -> Result<Self> {
        let grid = *positions.grid();
        if positions.component_count() != grid.dim() {
            return Err(Error::DimensionMismatch(format!(
                "transformation needs {} components, got {}",
                grid.dim(),
                positions.component_count()
            )));
        }
        if !positions.is_finite() {
            return Err(Error::NonFinite);
        }
        for node in grid.boundary_nodes() {
            let x = grid.coords(node);
            for (axis, c) in positions.components().iter().enumerate() {
                if c.values()[node] != x[axis] {
                    return Err(Error::BoundaryNotFixed { node });
                }
            }
        }
        Ok(Self { positions })
    }

    /// `id + u`; `u` must vanish on the boundary.
    pub fn from_displacement(u: &VectorField) -> Result<Self> {
        let id = Self::identity(*u.grid());
        Self::from_positions(id.positions.add(u)?)
    }

    pub fn grid(&self) -> &GridSpec {
        self.positions.grid()
    }

    pub fn positions(&self) -> &VectorField {
        &self.positions
    }

    pub fn into_positions(self) -> VectorField {
        self.positions
    }

    /// `positions - id`.
    pub fn displacement(&self) -> VectorField {
        let id = Self::identity(*self.grid());
        self.positions
            .sub(&id.positions)
            .expect("identity shares the grid")
    }

    /// Adds a displacement whose boundary values are zero.
    pub(crate) fn displaced(&self, u: &VectorField) -> Result<Self> {
        let positions = self.positions.add(u)?;
        Self::from_positions(positions)
    }

    /// L² distance between node positions.
    pub fn distance(&self, other: &Transformation) -> Result<f64> {
        self.positions.sub(&other.positions)?.l2_norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(1, 10).is_err());
        assert!(GridSpec::new(2, 2).is_err());
        assert!(GridSpec::from_axes(&[5, 7]).is_err());
        let g = GridSpec::from_axes(&[9, 9, 9]).unwrap();
        assert_eq!(g.dim(), 3);
        assert_eq!(g.len(), 729);
        let h = g.spacing();
        assert!((h * 8.0 - 1.0).abs() <= f64::EPSILON);
    }

    #[test]
    fn index_round_trip() {
        let g = GridSpec::new(3, 5).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.linear_index(&g.multi_index(i)), i);
        }
        assert_eq!(g.stride(0), 25);
        assert_eq!(g.stride(2), 1);
    }

    #[test]
    fn identity_positions() {
        let g = GridSpec::new(2, 3).unwrap();
        let id = Transformation::identity(g);
        let node = g.linear_index(&[1, 1]);
        assert_eq!(id.positions().component(0).values()[node], 0.5);
        assert_eq!(id.positions().component(1).values()[node], 0.5);
        assert_eq!(id.displacement().max_norm(), 0.0);

        let g3 = GridSpec::new(3, 5).unwrap();
        let id3 = Transformation::identity(g3);
        let corner = g3.linear_index(&[4, 0, 4]);
        let p: Vec<f64> = (0..3).map(|c| id3.positions().component(c).values()[corner]).collect();
        assert_eq!(p, vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn l2_examples() {
        let g = GridSpec::new(2, 65).unwrap();
        assert_eq!(ScalarField::zeros(g).l2_norm().unwrap(), 0.0);
        let one = ScalarField::constant(g, 1.0).l2_norm().unwrap();
        assert!((one - 1.0).abs() < 0.02, "{one}");

        let g = GridSpec::new(2, 129).unwrap();
        let s = ScalarField::from_fn(g, |x| (PI * x[0]).sin() * (PI * x[1]).sin());
        assert!((s.l2_norm().unwrap() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn l2_rejects_non_finite() {
        let g = GridSpec::new(2, 3).unwrap();
        let mut values = vec![0.0; 9];
        values[4] = f64::NAN;
        assert!(matches!(ScalarField::new(g, values.clone()), Err(Error::NonFinite)));
        let raw = ScalarField::from_raw(g, values);
        assert!(matches!(raw.l2_norm(), Err(Error::NonFinite)));
    }

    #[test]
    fn max_norm_examples() {
        let g = GridSpec::new(2, 5).unwrap();
        assert_eq!(ScalarField::zeros(g).max_norm(), 0.0);
        assert_eq!(ScalarField::constant(g, -3.5).max_norm(), 3.5);
        let mut s = ScalarField::zeros(g);
        s.values_mut()[7] = 7.0;
        assert_eq!(s.max_norm(), 7.0);
    }

    #[test]
    fn trapezoid_integrates_constants() {
        for (dim, n) in [(2, 3), (2, 17), (3, 9)] {
            let g = GridSpec::new(dim, n).unwrap();
            assert_relative_eq!(ScalarField::constant(g, 1.0).integral(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn transformation_rejects_moved_boundary() {
        let g = GridSpec::new(2, 5).unwrap();
        let mut u = VectorField::zeros(g, 2);
        assert!(Transformation::from_displacement(&u).is_ok());
        u.components[0].values_mut()[0] = 1e-3;
        assert!(matches!(
            Transformation::from_displacement(&u),
            Err(Error::BoundaryNotFixed { node: 0 })
        ));
    }
}
