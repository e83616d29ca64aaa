//! File formats: `FLD1` fields, PGM images, VTK meshes.

pub mod fld;
pub mod pgm;
pub mod vtk;

pub use fld::{read_field, read_scalar, write_field, write_scalar};
pub use pgm::{read_pgm, read_pgm_file, write_pgm, GrayImage};
pub use vtk::write_structured_grid;
