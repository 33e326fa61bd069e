//! Exact brute-force nearest-neighbour search.
//!
//! Neighbours are ordered by (squared Euclidean distance, row index), so
//! equal distances always resolve to the lower row index.

use crate::matrix::{sq_dist, Matrix};

/// The `k` rows of `data` nearest to `query` as `(squared distance, row)`,
/// nearest first. `skip` excludes one row (the query itself).
pub fn nearest_k(data: &Matrix, query: &[f64], k: usize, skip: Option<usize>) -> Vec<(f64, usize)> {
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    if k == 0 {
        return best;
    }
    for (i, row) in data.iter_rows().enumerate() {
        if Some(i) == skip {
            continue;
        }
        let d = sq_dist(query, row);
        if best.len() == k && d >= best[k - 1].0 {
            continue;
        }
        // rows arrive in index order, so inserting after equal distances
        // keeps the lower index first
        let pos = best.partition_point(|&(bd, _)| bd <= d);
        best.insert(pos, (d, i));
        best.truncate(k);
    }
    best
}

/// Nearest other row of `data[i]` among `data`.
pub fn nearest_other(data: &Matrix, i: usize) -> Option<usize> {
    nearest_k(data, data.row(i), 1, Some(i))
        .first()
        .map(|&(_, j)| j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_resolve_to_lower_index() {
        let m = Matrix::from_rows(&[vec![1.0], vec![-1.0], vec![1.0], vec![3.0]]).unwrap();
        let got: Vec<usize> = nearest_k(&m, &[0.0], 3, None).iter().map(|p| p.1).collect();
        assert_eq!(got, vec![0, 1, 2]);
        assert_eq!(nearest_other(&m, 0), Some(2));
    }

    #[test]
    fn k_larger_than_rows() {
        let m = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert_eq!(nearest_k(&m, &[0.0], 5, None).len(), 2);
        assert_eq!(nearest_k(&m, &[0.0], 5, Some(0)).len(), 1);
    }
}
