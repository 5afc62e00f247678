//! Flat binary container and CSV export for fields.
//!
//! Layout: `dim: u64`, `n: u64`, `L: f64`, `s: f64`, then `n^dim` samples as
//! `f64`, row-major, all little-endian.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::GridSpec;

const HEADER_LEN: usize = 32;

/// Writes `field` with the fractional order `s` recorded in the header.
pub fn write_field<W: Write>(mut out: W, field: &Field, s: f64) -> Result<()> {
    let g = field.grid();
    out.write_all(&(g.dim as u64).to_le_bytes())?;
    out.write_all(&(g.points_per_axis as u64).to_le_bytes())?;
    out.write_all(&g.half_length.to_le_bytes())?;
    out.write_all(&s.to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Reads a container; returns the field and the stored `s`.
pub fn read_field<R: Read>(mut input: R) -> Result<(Field, f64)> {
    let mut header = [0u8; HEADER_LEN];
    input
        .read_exact(&mut header)
        .map_err(|_| Error::Format("truncated header".into()))?;
    let word = |i: usize| -> [u8; 8] { header[8 * i..8 * i + 8].try_into().expect("8 bytes") };
    let dim = u64::from_le_bytes(word(0));
    let n = u64::from_le_bytes(word(1));
    let half_length = f64::from_le_bytes(word(2));
    let s = f64::from_le_bytes(word(3));
    let (dim, n) = match (usize::try_from(dim), usize::try_from(n)) {
        (Ok(d), Ok(n)) => (d, n),
        _ => return Err(Error::Format("header sizes overflow".into())),
    };
    let grid = GridSpec::new(dim, n, half_length)?;
    let mut payload = Vec::new();
    input.read_to_end(&mut payload)?;
    if payload.len() != 8 * grid.len() {
        return Err(Error::Format(format!(
            "payload has {} bytes, header implies {}",
            payload.len(),
            8 * grid.len()
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((Field::from_values(grid, values)?, s))
}

/// One row per sample: coordinates `x0..x{N-1}` then `value`.
pub fn write_field_csv<W: Write>(mut out: W, field: &Field) -> Result<()> {
    let g = field.grid();
    let header: Vec<String> = (0..g.dim)
        .map(|i| format!("x{i}"))
        .chain(["value".into()])
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for (x, v) in g.points().iter().zip(field.values()) {
        let cols: Vec<String> = x[..g.dim].iter().chain([v]).map(|c| format!("{c:e}")).collect();
        writeln!(out, "{}", cols.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{sample, Family};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn binary_round_trip(dim in 1usize..=3, seed in 0u64..100, s in 0.05f64..0.95) {
            let n = [0, 32, 16, 8][dim];
            let g = GridSpec::new(dim, n, 3.5).unwrap();
            let u = sample(&g, Family::RandomBandlimited { cutoff: 0.5, seed }).unwrap();
            let mut buf = Vec::new();
            write_field(&mut buf, &u, s).unwrap();
            prop_assert_eq!(buf.len(), HEADER_LEN + 8 * g.len());
            let (v, s2) = read_field(buf.as_slice()).unwrap();
            prop_assert_eq!(s2, s);
            prop_assert_eq!(v, u);
        }
    }

    #[test]
    fn header_layout() {
        let g = GridSpec::new(2, 8, 2.5).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &Field::zeros(g), 0.5).unwrap();
        assert_eq!(&buf[0..8], &2u64.to_le_bytes());
        assert_eq!(&buf[8..16], &8u64.to_le_bytes());
        assert_eq!(&buf[16..24], &2.5f64.to_le_bytes());
        assert_eq!(&buf[24..32], &0.5f64.to_le_bytes());
    }

    #[test]
    fn rejects_truncated_input() {
        let g = GridSpec::new(1, 16, 1.0).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &Field::zeros(g), 0.4).unwrap();
        assert!(matches!(read_field(&buf[..20]), Err(Error::Format(_))));
        assert!(matches!(read_field(&buf[..buf.len() - 3]), Err(Error::Format(_))));
        buf[0] = 7;
        assert!(read_field(buf.as_slice()).is_err());
    }

    #[test]
    fn csv_has_coordinates_and_values() {
        let g = GridSpec::new(2, 8, 4.0).unwrap();
        let u = Field::from_fn(g, |x| x[0] + 10.0 * x[1]);
        let mut buf = Vec::new();
        write_field_csv(&mut buf, &u).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x0,x1,value"));
        let rows: Vec<Vec<f64>> = lines
            .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 64);
        for r in rows {
            assert!((r[2] - (r[0] + 10.0 * r[1])).abs() < 1e-12);
        }
    }
}
