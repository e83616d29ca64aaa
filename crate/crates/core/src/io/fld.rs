//! The `FLD1` binary field format.
//!
//! Layout: magic `FLD1`, one byte dim, one byte component count, two reserved
//! zero bytes, little-endian `u32` N, then `N^dim * components` little-endian
//! `f64` values, component-major and row-major within a component.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField, VectorField};

pub const MAGIC: &[u8; 4] = b"FLD1";
const HEADER_LEN: usize = 12;

pub fn write_field<W: Write>(field: &VectorField, mut sink: W) -> Result<()> {
    let grid = field.grid();
    let count = u8::try_from(field.component_count())
        .map_err(|_| Error::DimensionMismatch("too many components".into()))?;
    let mut header = [0u8; HEADER_LEN];
    header[..4].copy_from_slice(MAGIC);
    header[4] = grid.dim() as u8;
    header[5] = count;
    header[8..].copy_from_slice(&(grid.n() as u32).to_le_bytes());
    sink.write_all(&header)?;

    let mut payload = Vec::with_capacity(grid.len() * field.component_count() * 8);
    for c in field.components() {
        for v in c.values() {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    sink.write_all(&payload)?;
    sink.flush()?;
    Ok(())
}

pub fn write_scalar<W: Write>(field: &ScalarField, sink: W) -> Result<()> {
    write_field(&VectorField::from_parts(*field.grid(), vec![field.clone()]), sink)
}

pub fn read_field<R: Read>(mut source: R) -> Result<VectorField> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    decode(&bytes)
}

/// Reads a file that must hold exactly one component.
pub fn read_scalar<R: Read>(source: R) -> Result<ScalarField> {
    let field = read_field(source)?;
    if field.component_count() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "expected a scalar field, found {} components",
            field.component_count()
        )));
    }
    Ok(field.into_components().remove(0))
}

pub fn decode(bytes: &[u8]) -> Result<VectorField> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let dim = bytes[4] as usize;
    let count = bytes[5] as usize;
    if bytes[6] != 0 || bytes[7] != 0 {
        return Err(Error::DimensionMismatch("reserved header bytes are nonzero".into()));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let grid = GridSpec::new(dim, n).map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    if count == 0 {
        return Err(Error::DimensionMismatch("component count is zero".into()));
    }

    let expected = HEADER_LEN + grid.len() * count * 8;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::DimensionMismatch(format!(
            "{} trailing bytes after payload",
            bytes.len() - expected
        )));
    }

    let mut chunks = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let components = (0..count)
        .map(|_| ScalarField::new(grid, chunks.by_ref().take(grid.len()).collect()))
        .collect::<Result<Vec<_>>>()?;
    VectorField::new(components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn encode(field: &VectorField) -> Vec<u8> {
        let mut buf = Vec::new();
        write_field(field, &mut buf).unwrap();
        buf
    }

    #[test]
    fn header_layout() {
        let g = GridSpec::new(3, 4).unwrap();
        let bytes = encode(&VectorField::zeros(g, 3));
        assert_eq!(&bytes[..4], b"FLD1");
        assert_eq!(bytes[4], 3);
        assert_eq!(bytes[5], 3);
        assert_eq!(&bytes[6..8], &[0, 0]);
        assert_eq!(&bytes[8..12], &4u32.to_le_bytes());
        assert_eq!(bytes.len(), 12 + 64 * 3 * 8);
    }

    #[test]
    fn wrong_magic() {
        let g = GridSpec::new(2, 3).unwrap();
        let mut bytes = encode(&VectorField::zeros(g, 1));
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes), Err(Error::BadMagic)));
    }

    #[test]
    fn short_payload() {
        let g = GridSpec::new(2, 17).unwrap();
        let bytes = encode(&VectorField::zeros(g, 1));
        let err = decode(&bytes[..bytes.len() - 8]).unwrap_err();
        assert!(matches!(err, Error::Truncated { .. }));
        assert!(err.to_string().starts_with("truncated"));
    }

    #[test]
    fn bad_dimension() {
        let g = GridSpec::new(2, 3).unwrap();
        let mut bytes = encode(&VectorField::zeros(g, 1));
        bytes[4] = 4;
        assert!(matches!(decode(&bytes), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn scalar_reader_rejects_vectors() {
        let g = GridSpec::new(2, 3).unwrap();
        let bytes = encode(&VectorField::zeros(g, 2));
        assert!(read_scalar(bytes.as_slice()).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(values in proptest::collection::vec(-1e300f64..1e300, 17 * 17)) {
            let g = GridSpec::new(2, 17).unwrap();
            let field = VectorField::new(vec![ScalarField::new(g, values).unwrap()]).unwrap();
            let back = decode(&encode(&field)).unwrap();
            for (a, b) in field.component(0).values().iter().zip(back.component(0).values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
