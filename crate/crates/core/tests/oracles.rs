//! Independent oracles for the loss kernels, the stationary residual and its
//! Jacobian, the restricted eigenvalue and the Newton step.

mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use nslr::data::SeededStream;
use nslr::model;
use nslr::solver::newton_step;
use nslr::stationarity::{
    jacobian_dense, jacobian_inverse_formula, jacobian_variable_order, residual,
    restricted_min_eigenvalue, Iterate,
};
use nslr::SupportSet;

fn random_support(rng: &mut SeededStream, p: usize, s: usize) -> SupportSet {
    SupportSet::from_unsorted(rng.sample_indices(p, s), p).unwrap()
}

#[test]
fn loss_and_gradient_match_naive_formulas() {
    let mut rng = SeededStream::new(11);
    for _ in 0..50 {
        let (n, p) = (2 + rng.below(29), 1 + rng.below(12));
        let ds = gaussian(&mut rng, n, p);
        let z = normals(&mut rng, p, 0.7);
        let x = to_dense(&ds);
        let l = model::loss(&ds, &z).unwrap();
        assert!((l - naive_loss(&x, ds.y(), &z)).abs() <= 1e-12 * l.max(1.0));
        let g = model::gradient(&ds, &z).unwrap();
        let ng = naive_gradient(&x, ds.y(), &z);
        for (a, b) in g.iter().zip(&ng) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = SeededStream::new(12);
    for _ in 0..50 {
        let (n, p) = (2 + rng.below(29), 1 + rng.below(12));
        let ds = gaussian(&mut rng, n, p);
        let z = normals(&mut rng, p, 0.5);
        let h = 1e-5 * z.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let fd: Vec<f64> = (0..p)
            .map(|j| {
                let (mut a, mut b) = (z.clone(), z.clone());
                a[j] += h;
                b[j] -= h;
                (model::loss(&ds, &a).unwrap() - model::loss(&ds, &b).unwrap()) / (2.0 * h)
            })
            .collect();
        let g = model::gradient(&ds, &z).unwrap();
        let err: Vec<f64> = fd.iter().zip(&g).map(|(a, b)| a - b).collect();
        assert!(norm(&err) <= 1e-6 * norm(&g).max(1e-12), "{err:?}");
    }
}

#[test]
fn hessian_blocks_match_naive_hessian_and_differences() {
    let mut rng = SeededStream::new(13);
    for _ in 0..50 {
        let (n, p) = (2 + rng.below(29), 1 + rng.below(12));
        let ds = gaussian(&mut rng, n, p);
        let z = normals(&mut rng, p, 0.5);
        let full = SupportSet::full(p);
        let hess = model::hessian_block(&ds, &z, &full, &full).unwrap();
        let naive = naive_hessian(&to_dense(&ds), &z);
        assert!((&hess - &naive).amax() <= 1e-13);

        let h = 1e-5;
        let mut fd = DMatrix::zeros(p, p);
        for j in 0..p {
            let (mut a, mut b) = (z.clone(), z.clone());
            a[j] += h;
            b[j] -= h;
            let (ga, gb) = (model::gradient(&ds, &a).unwrap(), model::gradient(&ds, &b).unwrap());
            for i in 0..p {
                fd[(i, j)] = (ga[i] - gb[i]) / (2.0 * h);
            }
        }
        assert!((&fd - &hess).norm() <= 1e-5 * hess.norm());

        let (kr, kc) = (1 + rng.below(p), 1 + rng.below(p));
        let rows = random_support(&mut rng, p, kr);
        let cols = random_support(&mut rng, p, kc);
        let block = model::hessian_block(&ds, &z, &rows, &cols).unwrap();
        for (a, &i) in rows.indices().iter().enumerate() {
            for (b, &j) in cols.indices().iter().enumerate() {
                assert!((block[(a, b)] - hess[(i, j)]).abs() <= 1e-15);
            }
        }
    }
}

#[test]
fn residual_matches_naive_stacking() {
    let mut rng = SeededStream::new(14);
    for _ in 0..30 {
        let (n, p) = (3 + rng.below(20), 2 + rng.below(10));
        let ds = gaussian(&mut rng, n, p);
        let s = 1 + rng.below(p);
        let t = random_support(&mut rng, p, s);
        let u = Iterate::new(normals(&mut rng, p, 1.0), normals(&mut rng, p, 1.0)).unwrap();
        let g = naive_gradient(&to_dense(&ds), ds.y(), &u.z);
        let tc = t.complement(p);
        let mut naive = Vec::new();
        naive.extend(t.indices().iter().map(|&i| u.d[i]));
        naive.extend(tc.iter().map(|&i| u.z[i]));
        naive.extend(t.indices().iter().map(|&i| u.d[i] - g[i]));
        naive.extend(tc.iter().map(|&i| u.d[i] - g[i]));
        let r = residual(&ds, &u, &t).unwrap();
        assert_eq!(r.vector.len(), 2 * p);
        for (a, b) in r.vector.iter().zip(&naive) {
            assert!((a - b).abs() <= 1e-14);
        }
        assert!((r.norm - norm(&naive)).abs() <= 1e-14);
    }
}

#[test]
fn jacobian_matches_differences_of_the_residual() {
    let mut rng = SeededStream::new(15);
    for _ in 0..20 {
        let (n, p) = (5 + rng.below(15), 2 + rng.below(8));
        let ds = gaussian(&mut rng, n, p);
        let k = 1 + rng.below(p);
        let t = random_support(&mut rng, p, k);
        let u = Iterate::new(normals(&mut rng, p, 0.5), normals(&mut rng, p, 0.5)).unwrap();
        let j = jacobian_dense(&ds, &u, &t).unwrap();
        let order = jacobian_variable_order(&t, p);
        let h = 1e-6;
        for (col, &var) in order.iter().enumerate() {
            let (mut a, mut b) = (u.clone(), u.clone());
            if var < p {
                a.z[var] += h;
                b.z[var] -= h;
            } else {
                a.d[var - p] += h;
                b.d[var - p] -= h;
            }
            let ra = residual(&ds, &a, &t).unwrap().vector;
            let rb = residual(&ds, &b, &t).unwrap().vector;
            let fd = DVector::from_iterator(2 * p, ra.iter().zip(&rb).map(|(x, y)| (x - y) / (2.0 * h)));
            let exact = j.column(col);
            assert!((&fd - exact).norm() <= 1e-5 * exact.norm().max(1.0));
        }
    }
}

#[test]
fn inverse_formula_matches_dense_inverse() {
    let mut rng = SeededStream::new(16);
    for _ in 0..10 {
        let ds = gaussian(&mut rng, 20, 8);
        let k = 1 + rng.below(4);
        let t = random_support(&mut rng, 8, k);
        let u = Iterate::new(normals(&mut rng, 8, 0.5), normals(&mut rng, 8, 0.5)).unwrap();
        let j = jacobian_dense(&ds, &u, &t).unwrap();
        let formula = jacobian_inverse_formula(&ds, &u, &t).unwrap();
        let oracle = j.clone().try_inverse().unwrap();
        assert!((&formula - &oracle).amax() <= 1e-8 * oracle.amax().max(1.0));
        assert!((&j * &formula - DMatrix::identity(16, 16)).amax() <= 1e-8);
    }
}

#[test]
fn restricted_eigenvalue_matches_jacobi() {
    let mut rng = SeededStream::new(17);
    for _ in 0..20 {
        let ds = gaussian(&mut rng, 10, 6);
        let t = random_support(&mut rng, 6, 3);
        let xt = to_dense(&ds).select_columns(t.indices().iter());
        let oracle = jacobi_eigenvalues(xt.transpose() * &xt)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let got = restricted_min_eigenvalue(&ds, &t).unwrap();
        assert!((got - oracle).abs() <= 1e-8, "{got} vs {oracle}");
    }
    let ds = dense(3, 3, &[1.0, 1.0, 0.0, 2.0, 2.0, 1.0, 0.0, 0.0, 3.0], &[0.0, 1.0, 0.0]);
    let t = SupportSet::new(vec![0, 1], 3).unwrap();
    assert!(restricted_min_eigenvalue(&ds, &t).unwrap() <= 1e-10);
}

#[test]
fn newton_step_matches_dense_solve() {
    let mut rng = SeededStream::new(18);
    for _ in 0..20 {
        let (n, p, s) = (20, 10, 3);
        let ds = gaussian(&mut rng, n, p);
        let t_prev = random_support(&mut rng, p, s);
        let t = random_support(&mut rng, p, s);
        let mut z = vec![0.0; p];
        for &i in t_prev.indices() {
            z[i] = 0.5 * rng.normal();
        }
        let x = to_dense(&ds);
        let g = naive_gradient(&x, ds.y(), &z);
        let u = Iterate::new(z.clone(), normals(&mut rng, p, 1.0)).unwrap();
        let next = newton_step(&ds, &u, &t, &t_prev, 0.0).unwrap();

        let hess = naive_hessian(&x, &z);
        let ti = t.indices();
        let h_tt = hess.select_rows(ti.iter()).select_columns(ti.iter());
        let h_tp = hess.select_rows(ti.iter()).select_columns(t_prev.indices().iter());
        let z_prev = DVector::from_iterator(s, t_prev.indices().iter().map(|&i| z[i]));
        let rhs = &h_tp * z_prev - DVector::from_iterator(s, ti.iter().map(|&i| g[i]));
        let v = h_tt.lu().solve(&rhs).unwrap();
        for (k, &i) in ti.iter().enumerate() {
            assert!((next.z[i] - v[k]).abs() <= 1e-10 * v[k].abs().max(1.0));
            assert_eq!(next.d[i], 0.0);
        }
        let delta = DVector::from_iterator(p, next.z.iter().zip(&z).map(|(a, b)| a - b));
        let hd = &hess * delta;
        for i in t.complement(p) {
            assert_eq!(next.z[i], 0.0);
            assert!((next.d[i] - (g[i] + hd[i])).abs() <= 1e-12);
        }
    }
}
