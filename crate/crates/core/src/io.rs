//! Shared helpers for the JSON file formats.

use std::path::Path;

use serde::de::DeserializeOwned;

use crate::{c64, CMat, CVec, Error, Result};

/// Split a complex matrix into row-major real and imaginary parts.
pub fn matrix_to_reim(m: &CMat) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let re = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect())
        .collect();
    let im = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect())
        .collect();
    (re, im)
}

/// Assemble a `rows × cols` complex matrix from row-major parts.
///
/// An empty `im` is read as zero imaginary part.
pub fn matrix_from_reim(rows: usize, cols: usize, re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<CMat> {
    if re.len() != rows {
        return Err(Error::Input(format!("expected {rows} rows in re, found {}", re.len())));
    }
    if !im.is_empty() && im.len() != rows {
        return Err(Error::Input(format!("expected {rows} rows in im, found {}", im.len())));
    }
    let mut m = CMat::zeros(rows, cols);
    for i in 0..rows {
        if re[i].len() != cols {
            return Err(Error::Input(format!("row {i} of re has {} entries, expected {cols}", re[i].len())));
        }
        if !im.is_empty() && im[i].len() != cols {
            return Err(Error::Input(format!("row {i} of im has {} entries, expected {cols}", im[i].len())));
        }
        for j in 0..cols {
            let y = if im.is_empty() { 0.0 } else { im[i][j] };
            if !re[i][j].is_finite() || !y.is_finite() {
                return Err(Error::Input(format!("non-finite entry at ({i},{j})")));
            }
            m[(i, j)] = c64(re[i][j], y);
        }
    }
    Ok(m)
}

pub fn vector_to_reim(v: &CVec) -> (Vec<f64>, Vec<f64>) {
    (v.iter().map(|z| z.re).collect(), v.iter().map(|z| z.im).collect())
}

pub fn vector_from_reim(re: &[f64], im: &[f64]) -> Result<CVec> {
    if !im.is_empty() && im.len() != re.len() {
        return Err(Error::Input(format!("re has {} entries but im has {}", re.len(), im.len())));
    }
    let v = CVec::from_iterator(
        re.len(),
        re.iter().enumerate().map(|(i, &x)| c64(x, if im.is_empty() { 0.0 } else { im[i] })),
    );
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Input("non-finite vector entry".into()));
    }
    Ok(v)
}

/// Read and deserialize a JSON file.
pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = std::fs::read_to_string(path.as_ref())?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_roundtrip() {
        let m = CMat::from_fn(2, 3, |i, j| c64(i as f64, j as f64 - 1.0));
        let (re, im) = matrix_to_reim(&m);
        assert_eq!(matrix_from_reim(2, 3, &re, &im).unwrap(), m);
    }

    #[test]
    fn ragged_rows_rejected() {
        let re = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(matrix_from_reim(2, 2, &re, &[]).is_err());
    }

    #[test]
    fn missing_imaginary_part_is_zero() {
        let v = vector_from_reim(&[1.0, 2.0], &[]).unwrap();
        assert_eq!(v[1], c64(2.0, 0.0));
    }
}
