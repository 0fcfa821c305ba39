//! Set-to-set shape matching over per-view code vectors.
//!
//! Every model carries one code per depth view. The distance from model A to
//! model B averages, over A's codes, the minimum p-norm distance to any code
//! of B. This mean-of-minima is a directional variant of the Hausdorff
//! distance (which takes the max), so the matrix it fills is generally
//! asymmetric; retrieval ranks candidates X by the distance from the query Q,
//! i.e. with Q as the first argument.

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// The code vectors of one model's view set: one row per view.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSet {
    pub model_id: String,
    pub codes: Array2<f64>,
}

impl CodeSet {
    pub fn new(model_id: impl Into<String>, codes: Array2<f64>) -> Result<Self> {
        if codes.nrows() == 0 || codes.ncols() == 0 {
            return Err(Error::InvalidInput("empty code set".into()));
        }
        if codes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite code value".into()));
        }
        Ok(CodeSet {
            model_id: model_id.into(),
            codes,
        })
    }

    pub fn view_count(&self) -> usize {
        self.codes.nrows()
    }

    pub fn code_dim(&self) -> usize {
        self.codes.ncols()
    }
}

/// p-norm of the difference between two code vectors.
///
/// ```
/// use ndarray::array;
/// use shapecode::matching::pairwise_code_distance;
///
/// let d = pairwise_code_distance(array![0.0, 0.0].view(), array![3.0, 4.0].view(), 2.0).unwrap();
/// assert_eq!(d, 5.0);
/// ```
pub fn pairwise_code_distance(a: ArrayView1<f64>, b: ArrayView1<f64>, p: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "code lengths {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidInput(format!("norm order must be >= 1, got {p}")));
    }
    if p == 2.0 {
        let sum: f64 = a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        Ok(sum.sqrt())
    } else {
        let sum: f64 = a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).abs().powf(p))
            .sum();
        Ok(sum.powf(1.0 / p))
    }
}

/// Directed set distance: the mean over A's codes of the minimum distance to
/// any code of B.
pub fn set_distance(a: &CodeSet, b: &CodeSet, p: f64) -> Result<f64> {
    if a.code_dim() != b.code_dim() {
        return Err(Error::DimensionMismatch(format!(
            "code dims {} vs {}",
            a.code_dim(),
            b.code_dim()
        )));
    }
    if a.view_count() != b.view_count() {
        return Err(Error::DimensionMismatch(format!(
            "view counts {} vs {}",
            a.view_count(),
            b.view_count()
        )));
    }
    let mut total = 0.0;
    for ai in a.codes.rows() {
        let mut best = f64::INFINITY;
        for bj in b.codes.rows() {
            let d = pairwise_code_distance(ai, bj, p)?;
            if d < best {
                best = d;
            }
        }
        total += best;
    }
    Ok(total / a.view_count() as f64)
}

/// Pairwise shape distances, ordered like the input ids. The diagonal is
/// zero; off-diagonal entries need not be symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub ids: Vec<String>,
    pub values: Array2<f64>,
}

impl DistanceMatrix {
    pub fn new(ids: Vec<String>, values: Array2<f64>) -> Result<Self> {
        let n = ids.len();
        if values.dim() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "{} ids vs {}x{} matrix",
                n,
                values.nrows(),
                values.ncols()
            )));
        }
        for i in 0..n {
            if values[[i, i]] != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "nonzero diagonal at {i}: {}",
                    values[[i, i]]
                )));
            }
        }
        if values.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidInput(
                "distance entries must be finite and nonnegative".into(),
            ));
        }
        Ok(DistanceMatrix { ids, values })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }
}

/// Evaluate every ordered pair of code sets. Rows are computed in parallel;
/// the diagonal is pinned to zero.
pub fn distance_matrix(sets: &[CodeSet], p: f64) -> Result<DistanceMatrix> {
    if sets.is_empty() {
        return Err(Error::InvalidInput("no code sets given".into()));
    }
    let n = sets.len();
    let first = &sets[0];
    for s in sets {
        if s.code_dim() != first.code_dim() || s.view_count() != first.view_count() {
            return Err(Error::DimensionMismatch(format!(
                "code set {} has shape {}x{}, expected {}x{}",
                s.model_id,
                s.view_count(),
                s.code_dim(),
                first.view_count(),
                first.code_dim()
            )));
        }
    }

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n];
            for (j, other) in sets.iter().enumerate() {
                if i != j {
                    // shapes were validated above
                    row[j] = set_distance(&sets[i], other, p).expect("validated dims");
                }
            }
            row
        })
        .collect();

    let mut values = Array2::zeros((n, n));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    DistanceMatrix::new(sets.iter().map(|s| s.model_id.clone()).collect(), values)
}
