//! Binary matrix newtypes shared across the crate.
//!
//! All three wrap a validated `Array2<u8>` whose entries are 0 or 1:
//! the item-by-attribute structure (`QMatrix`), observed responses
//! (`ResponseMatrix`), and latent attribute patterns (`AttributeMatrix`).

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

fn check_binary(entries: &Array2<u8>, what: &str) -> Result<()> {
    if entries.nrows() == 0 || entries.ncols() == 0 {
        return Err(Error::InvalidArgument(format!("{what} must be non-empty")));
    }
    if let Some(bad) = entries.iter().find(|&&v| v > 1) {
        return Err(Error::InvalidArgument(format!(
            "{what} entries must be 0 or 1, found {bad}"
        )));
    }
    Ok(())
}

/// Item-by-attribute requirement matrix: `q[j, k] = 1` means item `j`
/// requires attribute `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QMatrix(Array2<u8>);

impl QMatrix {
    pub fn new(entries: Array2<u8>) -> Result<Self> {
        check_binary(&entries, "Q-matrix")?;
        Ok(Self(entries))
    }

    pub fn n_items(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_attributes(&self) -> usize {
        self.0.ncols()
    }

    pub fn row(&self, j: usize) -> ArrayView1<'_, u8> {
        self.0.row(j)
    }

    pub fn as_array(&self) -> ArrayView2<'_, u8> {
        self.0.view()
    }

    pub fn into_inner(self) -> Array2<u8> {
        self.0
    }

    /// Fraction of entries equal to 0.
    pub fn zero_fraction(&self) -> f64 {
        let zeros = self.0.iter().filter(|&&v| v == 0).count();
        zeros as f64 / self.0.len() as f64
    }
}

/// Observed binary responses: one row per subject, one column per item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseMatrix(Array2<u8>);

impl ResponseMatrix {
    pub fn new(entries: Array2<u8>) -> Result<Self> {
        check_binary(&entries, "response matrix")?;
        Ok(Self(entries))
    }

    pub fn n_subjects(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_items(&self) -> usize {
        self.0.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, u8> {
        self.0.row(i)
    }

    pub fn as_array(&self) -> ArrayView2<'_, u8> {
        self.0.view()
    }

    pub fn into_inner(self) -> Array2<u8> {
        self.0
    }

    /// Copy of the selected rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument(
                "row selection must be non-empty".into(),
            ));
        }
        let mut out = Array2::<u8>::zeros((rows.len(), self.n_items()));
        for (dst, &src) in rows.iter().enumerate() {
            if src >= self.n_subjects() {
                return Err(Error::InvalidArgument(format!(
                    "row index {src} out of range for {} subjects",
                    self.n_subjects()
                )));
            }
            out.row_mut(dst).assign(&self.0.row(src));
        }
        Ok(Self(out))
    }
}

/// Latent attribute patterns: one row per subject, one column per attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeMatrix(Array2<u8>);

impl AttributeMatrix {
    pub fn new(entries: Array2<u8>) -> Result<Self> {
        check_binary(&entries, "attribute matrix")?;
        Ok(Self(entries))
    }

    pub fn n_subjects(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_attributes(&self) -> usize {
        self.0.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, u8> {
        self.0.row(i)
    }

    pub fn as_array(&self) -> ArrayView2<'_, u8> {
        self.0.view()
    }

    pub fn into_inner(self) -> Array2<u8> {
        self.0
    }
}
