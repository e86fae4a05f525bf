//! Population eigenvectors in ambient coordinates.
//!
//! Diagonal families use the coordinate axes in eigenvalue order. The
//! equicorrelation families put the normalised ones-vector of each block
//! first; the rest of each block is completed by Gram–Schmidt applied to
//! `e_1, e_2, …` against the ones-vector, which has the closed form
//!
//! `w_k = (0, …, 0, m-1, -1, …, -1) / sqrt(m (m-1))`, `m = b - k + 1`,
//!
//! for a block of size `b` and `k = 1..b-1` (the `m-1` sits at position `k`).
//! Nothing here materialises a `d × d` matrix.

use super::model::{CovarianceModel, Family};
use super::spectrum::block_size;
use crate::error::{Error, Result};

/// Where eigenvector `j` (1-based) lives.
enum Slot {
    Axis(usize),
    Ones { offset: usize, len: usize },
    Completion { offset: usize, len: usize, k: usize },
}

fn slot(model: &CovarianceModel, d: usize, j: usize) -> Result<Slot> {
    if j == 0 || j > d {
        return Err(Error::UnsupportedEigenvector { j, d });
    }
    Ok(match model.family() {
        Family::ExplicitDiagonal(p) => {
            if p.values.len() != d {
                return Err(Error::UnsupportedEigenvector { j, d });
            }
            Slot::Axis(explicit_order(&p.values)[j - 1])
        }
        Family::Equicorrelation(_) => {
            if j == 1 {
                Slot::Ones { offset: 0, len: d }
            } else {
                Slot::Completion { offset: 0, len: d, k: j - 1 }
            }
        }
        Family::BlockEquicorrelation(_) => {
            let h = block_size(d).map_err(|_| Error::UnsupportedEigenvector { j, d })?;
            // order: u1 (block 1), u2 (block 2), block-2 completion, block-1 completion
            match j {
                1 => Slot::Ones { offset: 0, len: h },
                2 => Slot::Ones { offset: h, len: h },
                _ if j <= h + 1 => Slot::Completion { offset: h, len: h, k: j - 2 },
                _ => Slot::Completion { offset: 0, len: h, k: j - h - 1 },
            }
        }
        _ => Slot::Axis(j - 1),
    })
}

/// Ambient axis of each sorted eigenvalue (stable for ties).
fn explicit_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

fn completion_coeffs(len: usize, k: usize) -> (f64, f64) {
    let m = (len - k + 1) as f64;
    let norm = (m * (m - 1.0)).sqrt();
    ((m - 1.0) / norm, -1.0 / norm)
}

/// `u_j' v` for a unit vector `v` in ambient coordinates.
pub fn population_eigvec_inner(
    model: &CovarianceModel,
    d: usize,
    j: usize,
    v: &[f64],
) -> Result<f64> {
    if v.len() != d {
        return Err(Error::Shape(format!("vector has length {}, expected {d}", v.len())));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotUnitVector { norm });
    }
    Ok(match slot(model, d, j)? {
        Slot::Axis(a) => v[a],
        Slot::Ones { offset, len } => {
            v[offset..offset + len].iter().sum::<f64>() / (len as f64).sqrt()
        }
        Slot::Completion { offset, len, k } => {
            let (lead, rest) = completion_coeffs(len, k);
            let block = &v[offset..offset + len];
            lead * block[k - 1] + rest * block[k..].iter().sum::<f64>()
        }
    })
}

/// Materialises `u_j` in ambient coordinates (O(d)).
pub fn population_eigenvector(model: &CovarianceModel, d: usize, j: usize) -> Result<Vec<f64>> {
    let mut u = vec![0.0; d];
    match slot(model, d, j)? {
        Slot::Axis(a) => u[a] = 1.0,
        Slot::Ones { offset, len } => {
            let x = 1.0 / (len as f64).sqrt();
            u[offset..offset + len].iter_mut().for_each(|e| *e = x);
        }
        Slot::Completion { offset, len, k } => {
            let (lead, rest) = completion_coeffs(len, k);
            u[offset + k - 1] = lead;
            u[offset + k..offset + len].iter_mut().for_each(|e| *e = rest);
        }
    }
    Ok(u)
}

/// Maps eigenbasis coordinates `c` to ambient coordinates `Σ_j c_j u_j` in O(d).
pub fn to_ambient(model: &CovarianceModel, coords: &[f64]) -> Result<Vec<f64>> {
    let d = coords.len();
    match model.family() {
        Family::Equicorrelation(_) => Ok(block_to_ambient(coords[0], &coords[1..])),
        Family::BlockEquicorrelation(_) => {
            let h = block_size(d)?;
            let mut out = block_to_ambient(coords[0], &coords[h + 1..]);
            out.extend(block_to_ambient(coords[1], &coords[2..h + 1]));
            Ok(out)
        }
        Family::ExplicitDiagonal(p) => {
            if p.values.len() != d {
                return Err(Error::Shape(format!(
                    "explicit diagonal has {} entries, got {d} coordinates",
                    p.values.len()
                )));
            }
            let mut out = vec![0.0; d];
            for (c, axis) in coords.iter().zip(explicit_order(&p.values)) {
                out[axis] = *c;
            }
            Ok(out)
        }
        _ => Ok(coords.to_vec()),
    }
}

/// One block: `ones` multiplies the ones-vector, `completion[k-1]` multiplies `w_k`.
fn block_to_ambient(ones: f64, completion: &[f64]) -> Vec<f64> {
    let len = completion.len() + 1;
    let base = ones / (len as f64).sqrt();
    let mut out = Vec::with_capacity(len);
    let mut carried = 0.0;
    for i in 0..len {
        // position i (0-based) sees w_{i+1} at its lead and every earlier w_k at its tail
        let mut x = base + carried;
        if i + 1 < len {
            let (lead, rest) = completion_coeffs(len, i + 1);
            x += completion[i] * lead;
            carried += completion[i] * rest;
        }
        out.push(x);
    }
    out
}
