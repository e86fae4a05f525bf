//! Dual PCA: `S_D = n⁻¹ X'X`, its eigenpairs, recovered primal directions
//! `û_i = X v_i / ‖X v_i‖`, and angles through the inner-product matrix
//! `P = U'Û`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::DataMatrix;
use crate::spectra::{population_eigvec_inner, CovarianceModel};

/// Relative asymmetry accepted by [`eigendecompose`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;
/// Directions with `λ̂_i ≤ RANK_THRESHOLD · λ̂_1` cannot be recovered.
pub const RANK_THRESHOLD: f64 = 1e-12;
/// Relative gap under which neighbouring dual eigenvalues count as tied.
pub const TIE_TOLERANCE: f64 = 1e-10;

/// Eigenvalues in descending order with matching orthonormal eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Symmetric eigendecomposition, sorted descending. Each eigenvector's
/// largest-magnitude coordinate is made positive.
pub fn eigendecompose(matrix: &DMatrix<f64>) -> Result<Eigenpairs> {
    let m = matrix.nrows();
    if m != matrix.ncols() || m == 0 {
        return Err(Error::InvalidMatrix(format!(
            "expected a nonempty square matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let scale = matrix.amax().max(f64::MIN_POSITIVE);
    let asym = (matrix - matrix.transpose()).amax();
    if !asym.is_finite() || asym > SYMMETRY_TOLERANCE * scale {
        return Err(Error::InvalidMatrix(format!(
            "not symmetric: max |a_ij - a_ji| = {asym:e}"
        )));
    }
    let sym = (matrix + matrix.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<f64>::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let lead = col.iamax();
        if col[lead] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }
    Ok(Eigenpairs { values, vectors })
}

/// `n⁻¹X'X`, symmetrised, together with `c_d = n⁻¹ Σ_i λ_{i,d}`.
pub fn dual_covariance(x: &DataMatrix) -> (DMatrix<f64>, f64) {
    let n = x.n() as f64;
    let gram = x.values().tr_mul(x.values()) / n;
    let sym = (&gram + gram.transpose()) * 0.5;
    (sym, x.trace() / n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualDecomposition {
    pub dual_matrix: DMatrix<f64>,
    /// `λ̂_1 ≥ … ≥ λ̂_n ≥ 0`.
    pub eigenvalues: Vec<f64>,
    /// Dual eigenvectors `v_i` as columns.
    pub eigenvectors: DMatrix<f64>,
    pub c_d: f64,
}

impl DualDecomposition {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Whether `λ̂_i` (1-based) is separated from its neighbours; inside a tied
    /// block only subspace angles are meaningful.
    pub fn identifiable(&self, i: usize) -> bool {
        let tol = TIE_TOLERANCE * self.eigenvalues[0].abs().max(f64::MIN_POSITIVE);
        let v = &self.eigenvalues;
        let idx = i - 1;
        let below = idx + 1 < v.len() && (v[idx] - v[idx + 1]).abs() <= tol;
        let above = idx > 0 && (v[idx - 1] - v[idx]).abs() <= tol;
        !(below || above)
    }
}

/// Dual covariance and its eigendecomposition.
pub fn decompose(x: &DataMatrix) -> Result<DualDecomposition> {
    if x.n() < 2 {
        return Err(Error::Shape("need at least two observations".into()));
    }
    let (dual_matrix, c_d) = dual_covariance(x);
    let pairs = eigendecompose(&dual_matrix)?;
    Ok(DualDecomposition {
        dual_matrix,
        eigenvalues: pairs.values.into_iter().map(|v| v.max(0.0)).collect(),
        eigenvectors: pairs.vectors,
        c_d,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Coordinates in the population eigenbasis, where `u_j = e_j`.
    Eigenbasis,
    /// Original variable coordinates.
    Ambient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDirections {
    /// `û_1, …, û_r` as columns.
    pub vectors: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub identifiable: Vec<bool>,
    pub frame: Frame,
}

impl PrimalDirections {
    /// Wraps externally supplied unit directions given in ambient coordinates.
    pub fn from_ambient(vectors: DMatrix<f64>) -> Self {
        let r = vectors.ncols();
        Self {
            vectors,
            eigenvalues: vec![f64::NAN; r],
            identifiable: vec![true; r],
            frame: Frame::Ambient,
        }
    }

    pub fn retained(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn d(&self) -> usize {
        self.vectors.nrows()
    }
}

/// `û_i = X v_i / ‖X v_i‖` for `i = 1..=r`.
pub fn recover_directions(
    x: &DataMatrix,
    dual: &DualDecomposition,
    r: usize,
) -> Result<PrimalDirections> {
    if r > dual.n() {
        return Err(Error::InvalidIndex {
            index: r,
            reason: format!("only {} dual eigenpairs", dual.n()),
        });
    }
    let threshold = RANK_THRESHOLD * dual.eigenvalues[0];
    let mut vectors = DMatrix::<f64>::zeros(x.d(), r);
    for i in 0..r {
        let value = dual.eigenvalues[i];
        if !(value > threshold) {
            return Err(Error::RankDeficient {
                index: i + 1,
                value,
                threshold,
            });
        }
        let u: DVector<f64> = x.values() * dual.eigenvectors.column(i);
        let norm = u.norm();
        vectors.set_column(i, &(u / norm));
    }
    Ok(PrimalDirections {
        vectors,
        eigenvalues: dual.eigenvalues[..r].to_vec(),
        identifiable: (1..=r).map(|i| dual.identifiable(i)).collect(),
        frame: Frame::Eigenbasis,
    })
}

/// Rows `(p_{j1}, …, p_{jr})` of `P = U'Û` for the tracked population indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerProductRows {
    pub rows: BTreeMap<usize, Vec<f64>>,
}

impl InnerProductRows {
    pub fn get(&self, j: usize, i: usize) -> Option<f64> {
        self.rows.get(&j).and_then(|row| row.get(i - 1)).copied()
    }
}

pub fn inner_products(
    dirs: &PrimalDirections,
    model: &CovarianceModel,
    d: usize,
    tracked: &[usize],
) -> Result<InnerProductRows> {
    if dirs.d() != d {
        return Err(Error::Shape(format!(
            "directions have dimension {}, expected {d}",
            dirs.d()
        )));
    }
    let mut rows = BTreeMap::new();
    for &j in tracked {
        if j == 0 || j > d {
            return Err(Error::UnsupportedEigenvector { j, d });
        }
        let row = match dirs.frame {
            Frame::Eigenbasis => dirs.vectors.row(j - 1).iter().copied().collect(),
            Frame::Ambient => dirs
                .vectors
                .column_iter()
                .map(|c| population_eigvec_inner(model, d, j, c.as_slice()))
                .collect::<Result<Vec<f64>>>()?,
        };
        rows.insert(j, row);
    }
    Ok(InnerProductRows { rows })
}

/// `arccos |p|` in radians, in `[0, π/2]`.
pub fn angle(p: f64) -> f64 {
    p.abs().min(1.0).acos()
}

/// `arccos (Σ_{j∈J} p_{ji}²)^{1/2}`: angle between `û_i` and `span{u_j : j ∈ J}`.
pub fn subspace_angle(rows: &InnerProductRows, i: usize, group: &[usize]) -> Result<f64> {
    if group.is_empty() {
        return Err(Error::InvalidIndex {
            index: i,
            reason: "empty eigenvector group".into(),
        });
    }
    let mut sq = 0.0;
    for &j in group {
        let p = rows.get(j, i).ok_or(Error::InvalidIndex {
            index: j,
            reason: format!("population index {j} / sample index {i} not in the rows"),
        })?;
        sq += p * p;
    }
    Ok(sq.sqrt().min(1.0).acos())
}

/// `max_{jk} |c_d⁻¹ S_D − I_n|`.
pub fn scaled_dual_deviation(dual: &DualDecomposition) -> f64 {
    let n = dual.dual_matrix.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            let target = if j == k { 1.0 } else { 0.0 };
            worst = worst.max((dual.dual_matrix[(j, k)] / dual.c_d - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::PowerLaw;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn data(cols: &[&[f64]], trace: f64) -> DataMatrix {
        let d = cols[0].len();
        DataMatrix::new(DMatrix::from_fn(d, cols.len(), |i, j| cols[j][i]), trace)
    }

    #[test]
    fn dual_covariance_example() {
        let x = data(&[&[2.0, 0.0, 0.0], &[0.0, 1.0, 0.0]], 3.0);
        let (s, c_d) = dual_covariance(&x);
        assert_eq!(s, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]));
        assert_eq!(c_d, 1.5);
        let zero = data(&[&[0.0; 3], &[0.0; 3]], 3.0);
        assert_eq!(dual_covariance(&zero).0, DMatrix::zeros(2, 2));
    }

    #[test]
    fn eigendecompose_examples() {
        let e = eigendecompose(&DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5])).unwrap();
        assert_eq!(e.values, vec![2.0, 0.5]);
        assert_eq!(e.vectors, DMatrix::identity(2, 2));

        let e = eigendecompose(&DMatrix::from_element(2, 2, 1.0)).unwrap();
        assert!((e.values[0] - 2.0).abs() < 1e-14 && e.values[1].abs() < 1e-14);
        let h = 0.5_f64.sqrt();
        assert!((e.vectors[(0, 0)] - h).abs() < 1e-14 && (e.vectors[(1, 0)] - h).abs() < 1e-14);

        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(eigendecompose(&bad), Err(Error::InvalidMatrix(_))));
    }

    #[test]
    fn recover_examples() {
        let x = data(&[&[2.0, 0.0, 0.0], &[0.0, 1.0, 0.0]], 3.0);
        let dual = decompose(&x).unwrap();
        let dirs = recover_directions(&x, &dual, 2).unwrap();
        assert_eq!(dirs.vectors.column(0).as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(dirs.vectors.column(1).as_slice(), &[0.0, 1.0, 0.0]);

        let x = data(&[&[3.0, 0.0, 0.0], &[0.0, 0.0, 0.0]], 3.0);
        let dual = decompose(&x).unwrap();
        let dirs = recover_directions(&x, &dual, 1).unwrap();
        assert_eq!(dirs.vectors.column(0).as_slice(), &[1.0, 0.0, 0.0]);
        assert!(matches!(
            recover_directions(&x, &dual, 2),
            Err(Error::RankDeficient { index: 2, .. })
        ));
    }

    #[test]
    fn angle_examples() {
        assert_eq!(angle(1.0), 0.0);
        assert_eq!(angle(-1.0), 0.0);
        assert!((angle(0.0) - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(angle(1.0 + 1e-11), 0.0);

        let h = 0.5_f64.sqrt();
        let dirs = PrimalDirections::from_ambient(DMatrix::from_column_slice(3, 1, &[h, 0.0, h]));
        let rows = inner_products(&dirs, &CovarianceModel::identity(), 3, &[1, 2, 3]).unwrap();
        let a = subspace_angle(&rows, 1, &[1, 2]).unwrap();
        assert!((a - FRAC_PI_4).abs() < 1e-12);
        assert!(subspace_angle(&rows, 1, &[1, 2, 3]).unwrap() < 1e-7);
        assert!(subspace_angle(&rows, 1, &[]).is_err());
    }

    #[test]
    fn equicorrelation_ambient_inner_product() {
        let m = CovarianceModel::equicorrelation(PowerLaw::constant(0.4)).unwrap();
        let dirs = PrimalDirections::from_ambient(DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 0.0, 0.0]));
        let rows = inner_products(&dirs, &m, 4, &[1]).unwrap();
        assert!((rows.get(1, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            inner_products(&dirs, &m, 4, &[5]),
            Err(Error::UnsupportedEigenvector { j: 5, .. })
        ));
    }

    #[test]
    fn deviation_examples() {
        let mk = |m: DMatrix<f64>, c_d: f64| DualDecomposition {
            eigenvalues: vec![0.0; m.nrows()],
            eigenvectors: DMatrix::identity(m.nrows(), m.nrows()),
            dual_matrix: m,
            c_d,
        };
        assert_eq!(scaled_dual_deviation(&mk(DMatrix::identity(3, 3) * 2.5, 2.5)), 0.0);
        let s = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 2.0]);
        assert_eq!(scaled_dual_deviation(&mk(s, 2.0)), 1.0);
    }

    #[test]
    fn ties_flagged() {
        let x = data(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 2.0]], 3.0);
        let dual = decompose(&x).unwrap();
        assert!(dual.identifiable(1));
        assert!(!dual.identifiable(2));
        assert!(!dual.identifiable(3));
    }

    #[test]
    fn identity_c_d() {
        let x = DataMatrix::new(DMatrix::zeros(10, 5), 10.0);
        assert_eq!(dual_covariance(&x).1, 2.0);
    }
}
