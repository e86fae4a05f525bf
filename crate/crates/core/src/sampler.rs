//! Sphered data `Z` and data matrices `X = Λ^{1/2} Z`, expressed in the
//! population eigenbasis (`U = I`). No sample mean is ever subtracted.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{eigenvalues, CovarianceModel, EigenSpectrum};

/// Law of the i.i.d. (or, for the scale mixture, column-coupled) components of `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Gaussian,
    /// ±1 with equal probability.
    Rademacher,
    /// Uniform on `[-√3, √3]`.
    UniformStd,
    /// Each column is `y₁` or `σ·y₂` with probability ½, rescaled to unit
    /// variance. Uncorrelated but not ρ-mixing under any permutation.
    ScaleMixture { sigma: f64 },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseSpec::ScaleMixture { sigma } if !(*sigma > 1.0 && sigma.is_finite()) => Err(
                Error::Configuration("scale mixture needs sigma > 1".into()),
            ),
            _ => Ok(()),
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, NoiseSpec::Gaussian)
    }

    /// Components independent with bounded moments of every order.
    pub fn has_independent_components(&self) -> bool {
        !matches!(self, NoiseSpec::ScaleMixture { .. })
    }

    fn draw_scalar<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseSpec::Gaussian | NoiseSpec::ScaleMixture { .. } => rng.sample(StandardNormal),
            NoiseSpec::Rademacher => {
                if rng.random_bool(0.5) {
                    1.0
                } else {
                    -1.0
                }
            }
            NoiseSpec::UniformStd => {
                let s3 = 3.0_f64.sqrt();
                rng.random_range(-s3..s3)
            }
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Master seed plus the rule that derives one child stream per
/// `(replicate, column)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    /// Independent sub-experiment (e.g. one grid point) under the same master seed.
    pub fn substream(&self, tag: u64) -> SeedSpec {
        SeedSpec {
            master_seed: splitmix64(self.master_seed ^ splitmix64(tag.wrapping_add(0xA5A5))),
        }
    }

    pub fn child(&self, replicate: u64, column: u64) -> u64 {
        let r = splitmix64(self.master_seed ^ splitmix64(replicate));
        splitmix64(r ^ splitmix64(column.wrapping_mul(0xD6E8_FEB8_6659_FD93)))
    }

    pub fn rng(&self, replicate: u64, column: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.child(replicate, column))
    }
}

/// `d × n` sphered matrix for one replicate.
pub fn sample_z(
    noise: &NoiseSpec,
    d: usize,
    n: usize,
    seed: &SeedSpec,
    replicate: u64,
) -> Result<DMatrix<f64>> {
    if d < 2 || n < 2 {
        return Err(Error::Shape(format!("need d >= 2 and n >= 2, got d={d}, n={n}")));
    }
    noise.validate()?;
    let mut z = DMatrix::<f64>::zeros(d, n);
    for (j, mut col) in z.column_iter_mut().enumerate() {
        let mut rng = seed.rng(replicate, j as u64);
        let scale = match noise {
            NoiseSpec::ScaleMixture { sigma } => {
                let s = if rng.random_bool(0.5) { 1.0 } else { *sigma };
                s / ((1.0 + sigma * sigma) / 2.0).sqrt()
            }
            _ => 1.0,
        };
        for x in col.iter_mut() {
            *x = scale * noise.draw_scalar(&mut rng);
        }
    }
    Ok(z)
}

/// Data matrix in eigenbasis coordinates together with `tr Σ_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    trace: f64,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>, trace: f64) -> Self {
        Self { values, trace }
    }

    pub fn d(&self) -> usize {
        self.values.nrows()
    }

    pub fn n(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// `Σ_i λ_{i,d}` of the generating model.
    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// Little-endian dump: `d`, `n` as `u64`, then entries row-major as `f64`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.d() as u64).to_le_bytes())?;
        w.write_all(&(self.n() as u64).to_le_bytes())?;
        for i in 0..self.d() {
            for j in 0..self.n() {
                w.write_all(&self.values[(i, j)].to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reads a dump written by [`DataMatrix::write_binary`]; the trace is not stored.
    pub fn read_binary<R: Read>(mut r: R) -> Result<DMatrix<f64>> {
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let d = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let n = u64::from_le_bytes(word) as usize;
        let mut m = DMatrix::<f64>::zeros(d, n);
        for i in 0..d {
            for j in 0..n {
                r.read_exact(&mut word)?;
                m[(i, j)] = f64::from_le_bytes(word);
            }
        }
        Ok(m)
    }
}

/// Scales row `i` of `z` by `√λ_i`.
pub fn synthesize_x(model: &CovarianceModel, z: &DMatrix<f64>) -> Result<DataMatrix> {
    let spectrum = eigenvalues(model, z.nrows())
        .map_err(|e| Error::Shape(format!("z has {} rows: {e}", z.nrows())))?;
    synthesize_with_spectrum(&spectrum, z)
}

pub fn synthesize_with_spectrum(spectrum: &EigenSpectrum, z: &DMatrix<f64>) -> Result<DataMatrix> {
    if spectrum.d() != z.nrows() {
        return Err(Error::Shape(format!(
            "z has {} rows but the spectrum has dimension {}",
            z.nrows(),
            spectrum.d()
        )));
    }
    let roots: Vec<f64> = spectrum.iter().map(f64::sqrt).collect();
    let mut x = z.clone();
    for mut col in x.column_iter_mut() {
        col.iter_mut().zip(&roots).for_each(|(e, r)| *e *= r);
    }
    Ok(DataMatrix::new(x, spectrum.trace()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceStats {
    /// `‖x_j‖ / √(Σλ)`.
    pub scaled_norms: Vec<f64>,
    /// `‖x_j − x_k‖ / √(2Σλ)` for `j < k`, row by row.
    pub scaled_distances: Vec<f64>,
}

pub fn distance_stats(x: &DataMatrix) -> DistanceStats {
    let v = x.values();
    let n = x.n();
    let scaled_norms = v.column_iter().map(|c| c.norm() / x.trace().sqrt()).collect();
    let mut scaled_distances = Vec::with_capacity(n * (n - 1) / 2);
    for j in 0..n {
        for k in j + 1..n {
            let dist = (v.column(j) - v.column(k)).norm();
            scaled_distances.push(dist / (2.0 * x.trace()).sqrt());
        }
    }
    DistanceStats {
        scaled_norms,
        scaled_distances,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rademacher_support() {
        let z = sample_z(&NoiseSpec::Rademacher, 50, 4, &SeedSpec::new(3), 0).unwrap();
        assert!(z.iter().all(|&x| x == 1.0 || x == -1.0));
    }

    #[test]
    fn uniform_support() {
        let z = sample_z(&NoiseSpec::UniformStd, 50, 4, &SeedSpec::new(3), 0).unwrap();
        assert!(z.iter().all(|&x| x.abs() <= 3.0_f64.sqrt()));
    }

    #[test]
    fn reproducible_and_distinct_streams() {
        let s = SeedSpec::new(11);
        let a = sample_z(&NoiseSpec::Gaussian, 20, 3, &s, 5).unwrap();
        let b = sample_z(&NoiseSpec::Gaussian, 20, 3, &s, 5).unwrap();
        assert_eq!(a, b);
        let c = sample_z(&NoiseSpec::Gaussian, 20, 3, &s, 6).unwrap();
        assert_ne!(a, c);
        assert_ne!(a.column(0), a.column(1));
        assert_ne!(s.substream(0), s.substream(1));
    }

    #[test]
    fn gaussian_mean_near_zero() {
        let d = 10_000;
        let z = sample_z(&NoiseSpec::Gaussian, d, 2, &SeedSpec::new(1), 0).unwrap();
        let mean = z.column(0).sum() / d as f64;
        assert!(mean.abs() < 4.0 / (d as f64).sqrt());
    }

    #[test]
    fn scale_mixture_columns_have_unit_second_moment_on_average() {
        let d = 10_000;
        let sigma = 3.0;
        let z = sample_z(&NoiseSpec::ScaleMixture { sigma }, d, 200, &SeedSpec::new(9), 0).unwrap();
        let moments: Vec<f64> = z
            .column_iter()
            .map(|c| c.norm_squared() / d as f64)
            .collect();
        let low = 2.0 / (1.0 + sigma * sigma);
        let high = sigma * sigma * low;
        // each column sits at one of the two modes; their average is one
        for m in &moments {
            assert!((m - low).abs() < 0.05 || (m - high).abs() < 0.15, "{m}");
        }
        let mean = moments.iter().sum::<f64>() / moments.len() as f64;
        assert!((mean - 1.0).abs() < 0.2, "{mean}");
    }

    #[test]
    fn synthesize_examples() {
        let z = DMatrix::from_fn(4, 2, |i, j| if i == j { 1.0 } else { 0.0 });
        let spike = CovarianceModel::single_spike(2.0, 1.0, 1.0).unwrap();
        let x = synthesize_x(&spike, &z).unwrap();
        assert_eq!(x.values().column(0).as_slice(), &[4.0, 0.0, 0.0, 0.0]);
        assert_eq!(x.values().column(1).as_slice(), &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(x.trace(), 19.0);

        let id = synthesize_x(&CovarianceModel::identity(), &z).unwrap();
        assert_eq!(id.values(), &z);

        let zero = synthesize_x(&spike, &DMatrix::zeros(4, 3)).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
        assert!(distance_stats(&zero).scaled_norms.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn synthesize_shape_error() {
        let m = CovarianceModel::explicit_diagonal(vec![2.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            synthesize_x(&m, &DMatrix::zeros(4, 2)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn distance_stats_counts() {
        let z = sample_z(&NoiseSpec::Gaussian, 100, 5, &SeedSpec::new(2), 0).unwrap();
        let x = synthesize_x(&CovarianceModel::identity(), &z).unwrap();
        let s = distance_stats(&x);
        assert_eq!(s.scaled_norms.len(), 5);
        assert_eq!(s.scaled_distances.len(), 10);
    }

    #[test]
    fn binary_dump_layout() {
        let x = DataMatrix::new(DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), 1.0);
        let mut buf = Vec::new();
        x.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 6 * 8);
        assert_eq!(&buf[0..8], &2u64.to_le_bytes());
        assert_eq!(&buf[8..16], &3u64.to_le_bytes());
        assert_eq!(&buf[16..24], &1.0f64.to_le_bytes());
        assert_eq!(&buf[24..32], &2.0f64.to_le_bytes());
        let back = DataMatrix::read_binary(buf.as_slice()).unwrap();
        assert_eq!(&back, x.values());
    }
}
