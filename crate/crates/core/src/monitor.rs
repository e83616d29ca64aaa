//! Target Jacobian determinant and curl ("monitor pair") construction.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diffops::{self, StencilConvention};
use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField, Transformation, VectorField};
use crate::io::{self, GrayImage};
use crate::poisson::{self, SolverConfig};

/// Tolerance on `|∫f0 − 1|`.
pub const MASS_TOL: f64 = 1e-10;
/// Tolerance on the discrete divergence of a 3D curl target.
pub const SOLENOIDAL_TOL: f64 = 1e-8;
pub const DEFAULT_BETA: f64 = 2.0;

/// Validated `(f0, g0)`.
///
/// `f0` is positive and integrates to 1; in 3D `g0` is discretely
/// solenoidal. On a planar grid `g0` is the single-component scalar curl.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorPair {
    pub(crate) f0: ScalarField,
    pub(crate) g0: VectorField,
    pub(crate) curl_enabled: bool,
}

impl MonitorPair {
    pub fn new(f0: ScalarField, g0: VectorField, curl_enabled: bool) -> Result<Self> {
        let grid = *f0.grid();
        grid.check_same(g0.grid())?;
        if g0.component_count() != diffops::curl_component_count(&grid) {
            return Err(Error::DimensionMismatch(format!(
                "g0 needs {} components on a {}D grid",
                diffops::curl_component_count(&grid),
                grid.dim()
            )));
        }
        check_positive(&f0)?;
        let mass = f0.integral();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMonitor(format!("∫f0 = {mass}, expected 1")));
        }
        if grid.dim() == 3 {
            let defect = divergence_defect(&g0)?;
            if defect > SOLENOIDAL_TOL * g0.l2_norm()?.max(1.0) {
                return Err(Error::InvalidMonitor(format!(
                    "g0 is not divergence-free (‖div g0‖ = {defect:e})"
                )));
            }
        }
        Ok(Self {
            f0,
            g0,
            curl_enabled,
        })
    }

    /// Uniform target: `f0 ≡ 1`, `g0 = 0`.
    pub fn uniform(grid: GridSpec, curl_enabled: bool) -> Self {
        Self {
            f0: ScalarField::constant(grid, 1.0),
            g0: VectorField::zeros(grid, diffops::curl_component_count(&grid)),
            curl_enabled,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.f0.grid()
    }

    pub fn f0(&self) -> &ScalarField {
        &self.f0
    }

    pub fn g0(&self) -> &VectorField {
        &self.g0
    }

    pub fn curl_enabled(&self) -> bool {
        self.curl_enabled
    }

    pub fn with_curl_enabled(mut self, enabled: bool) -> Self {
        self.curl_enabled = enabled;
        self
    }
}

fn check_positive(f: &ScalarField) -> Result<()> {
    match f.values().iter().position(|&v| !(v > 0.0)) {
        Some(node) => Err(Error::NonpositiveMonitor {
            node,
            value: f.values()[node],
        }),
        None => Ok(()),
    }
}

/// Interior L² norm of the divergence under the better-satisfied discrete
/// convention.
///
/// Central curls are exactly solenoidal for the central divergence, while
/// [`project_divergence_free`] is exact for the backward divergence; either
/// certifies a curl target.
fn divergence_defect(g: &VectorField) -> Result<f64> {
    let central = diffops::divergence(g, StencilConvention::CENTRAL)?.interior_l2_norm()?;
    let backward =
        diffops::divergence(g, StencilConvention::SUMMATION_BY_PARTS)?.interior_l2_norm()?;
    Ok(central.min(backward))
}

/// Scales a positive field so its trapezoid integral is 1.
pub fn normalize_f0(raw: &ScalarField) -> Result<ScalarField> {
    check_positive(raw)?;
    let mass = raw.integral();
    Ok(raw.scale(1.0 / mass))
}

/// Removes the gradient part: `g − ∇⁺ Δₕ⁻¹ (∇⁻·g)`.
///
/// Uses the summation-by-parts pair, so the backward divergence of the result
/// vanishes at interior nodes up to roundoff and the map is idempotent.
pub fn project_divergence_free(g: &VectorField, cfg: &SolverConfig) -> Result<VectorField> {
    if g.grid().dim() != 3 || g.component_count() != 3 {
        return Err(Error::DimensionMismatch(
            "divergence-free projection needs a 3D vector field".into(),
        ));
    }
    let div = diffops::divergence(g, StencilConvention::SUMMATION_BY_PARTS)?;
    let potential = poisson::solve_dirichlet(&div, cfg)?;
    let grad = diffops::gradient(&potential, StencilConvention::SUMMATION_BY_PARTS);
    g.sub(&grad)
}

/// Maps image intensity to a density: `1 + beta·(1 − I/255)`, so dark
/// regions receive smaller cells. 3D grids extrude the image along `x3`.
pub fn monitor_from_image(
    image: &GrayImage,
    beta: f64,
    grid: GridSpec,
    curl_enabled: bool,
) -> Result<MonitorPair> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidConfig(format!("beta must be positive, got {beta}")));
    }
    let raw = ScalarField::from_fn(grid, |x| 1.0 + beta * (1.0 - image.sample(x[0], x[1]) / 255.0));
    let f0 = normalize_f0(&raw)?;
    MonitorPair::new(
        f0,
        VectorField::zeros(grid, diffops::curl_component_count(&grid)),
        curl_enabled,
    )
}

/// Targets read off an existing map: normalized `J(t)` and, optionally, `curl(t)`.
pub fn monitor_from_transformation(t: &Transformation, use_curl: bool) -> Result<MonitorPair> {
    let jac = diffops::jacobian_det(t);
    let min_jacobian = jac.min_value();
    if !(min_jacobian > 0.0) {
        return Err(Error::FoldedTarget { min_jacobian });
    }
    let f0 = normalize_f0(&jac)?;
    let grid = *t.grid();
    let g0 = if use_curl {
        diffops::curl(t.positions())?
    } else {
        VectorField::zeros(grid, diffops::curl_component_count(&grid))
    };
    MonitorPair::new(f0, g0, use_curl)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorManifest {
    pub dim: usize,
    pub n: usize,
    pub f0: String,
    pub g0: String,
    pub curl_enabled: bool,
}

pub const MANIFEST_NAME: &str = "monitor.toml";

/// Writes `f0.fld`, `g0.fld` and `monitor.toml` into `dir`; returns the manifest path.
pub fn save_monitor(m: &MonitorPair, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let manifest = MonitorManifest {
        dim: m.grid().dim(),
        n: m.grid().n(),
        f0: "f0.fld".into(),
        g0: "g0.fld".into(),
        curl_enabled: m.curl_enabled,
    };
    io::write_scalar(&m.f0, BufWriter::new(File::create(dir.join(&manifest.f0))?))?;
    io::write_field(&m.g0, BufWriter::new(File::create(dir.join(&manifest.g0))?))?;
    let text = toml::to_string(&manifest).map_err(|e| Error::Manifest(e.to_string()))?;
    let path = dir.join(MANIFEST_NAME);
    std::fs::write(&path, text)?;
    Ok(path)
}

/// Loads a monitor from its manifest; field paths resolve relative to it.
pub fn load_monitor(manifest_path: &Path) -> Result<MonitorPair> {
    let text = std::fs::read_to_string(manifest_path)?;
    let manifest: MonitorManifest =
        toml::from_str(&text).map_err(|e| Error::Manifest(e.to_string()))?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let f0 = io::read_scalar(File::open(base.join(&manifest.f0))?)?;
    let g0 = io::read_field(File::open(base.join(&manifest.g0))?)?;
    let expected = GridSpec::new(manifest.dim, manifest.n)?;
    f0.grid().check_same(&expected)?;
    MonitorPair::new(f0, g0, manifest.curl_enabled)
}
