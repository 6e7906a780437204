#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use nslr::data::SeededStream;
use nslr::{Dataset, DesignMatrix};

pub fn dense(rows: usize, cols: usize, data: &[f64], y: &[f64]) -> Dataset {
    Dataset::new(DesignMatrix::from_row_major(rows, cols, data).unwrap(), y.to_vec()).unwrap()
}

/// Gaussian `n x p` design with fair-coin labels.
pub fn gaussian(rng: &mut SeededStream, n: usize, p: usize) -> Dataset {
    let data: Vec<f64> = (0..n * p).map(|_| rng.normal()).collect();
    let y: Vec<f64> = (0..n).map(|_| if rng.uniform() < 0.5 { 0.0 } else { 1.0 }).collect();
    dense(n, p, &data, &y)
}

pub fn normals(rng: &mut SeededStream, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| scale * rng.normal()).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Straight-from-the-definition loss, no stabilization tricks.
pub fn naive_loss(x: &DMatrix<f64>, y: &[f64], z: &[f64]) -> f64 {
    let t = x * DVector::from_column_slice(z);
    let n = y.len() as f64;
    t.iter().zip(y).map(|(&t, &y)| (1.0 + t.exp()).ln() - y * t).sum::<f64>() / n
}

pub fn naive_gradient(x: &DMatrix<f64>, y: &[f64], z: &[f64]) -> Vec<f64> {
    let t = x * DVector::from_column_slice(z);
    let r = DVector::from_iterator(y.len(), t.iter().zip(y).map(|(&t, &y)| 1.0 / (1.0 + (-t).exp()) - y));
    (x.transpose() * r / y.len() as f64).iter().copied().collect()
}

pub fn naive_hessian(x: &DMatrix<f64>, z: &[f64]) -> DMatrix<f64> {
    let n = x.nrows();
    let t = x * DVector::from_column_slice(z);
    let mut h = DMatrix::zeros(x.ncols(), x.ncols());
    for i in 0..n {
        let s = 1.0 / (1.0 + (-t[i]).exp());
        let row = x.row(i).transpose();
        h += &row * row.transpose() * (s * (1.0 - s));
    }
    h / n as f64
}

pub fn to_dense(ds: &Dataset) -> DMatrix<f64> {
    ds.x().to_dense()
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix.
pub fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let m = a.nrows();
    for _ in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..m {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..m).map(|i| a[(i, i)]).collect()
}
