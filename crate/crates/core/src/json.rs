//! JSON helpers. Every float is written with 17 significant digits.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::Result;

/// Schema tag embedded in every artifact.
pub const SCHEMA: &str = "soslift/1";

#[derive(Clone, Copy, Debug, Default)]
struct Digits17;

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{:.16e}", value as f64)
    }
}

/// Serialize `value` as compact JSON with 17 significant digits per float.
pub fn to_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits utf-8"))
}

pub(crate) fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>], ncols: usize) -> Result<nalgebra::DMatrix<f64>> {
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(crate::Error::Malformed(format!(
                "row {i} has {} entries, expected {ncols}",
                r.len()
            )));
        }
    }
    Ok(nalgebra::DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_17_digits() {
        let s = to_string(&vec![0.1f64, -2.0, 1e-300]).unwrap();
        assert_eq!(
            s,
            "[1.0000000000000001e-1,-2.0000000000000000e0,1.0000000000000000e-300]"
        );
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, -2.0, 1e-300]);
    }

    #[test]
    fn non_finite_becomes_null() {
        assert_eq!(to_string(&f64::NAN).unwrap(), "null");
    }
}
