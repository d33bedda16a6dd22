// SPDX-License-Identifier: MIT OR Apache-2.0

//! Minimum-norm least squares through a complete orthogonal decomposition.
//!
//! Householder QR with column-norm pivoting reveals the numerical rank r of A;
//! a second QR of the leading r rows of R (transposed) then yields the
//! minimum-norm solution of the rank-deficient system.

use nalgebra::DMatrix;

pub(crate) fn min_norm_lstsq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, l) = a.shape();
    let g = b.ncols();
    let steps = n.min(l);
    let mut r = a.clone();
    let mut qtb = b.clone();
    let mut perm: Vec<usize> = (0..l).collect();

    for k in 0..steps {
        let pivot = (k..l)
            .map(|j| (j, r.view_range(k.., j).norm_squared()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best })
            .0;
        if pivot != k {
            r.swap_columns(k, pivot);
            perm.swap(k, pivot);
        }

        let alpha = r.view_range(k.., k).norm();
        if alpha == 0.0 {
            break;
        }
        let x0 = r[(k, k)];
        let beta = if x0 >= 0.0 { -alpha } else { alpha };
        let mut v = r.view_range(k.., k).into_owned();
        v[0] -= beta;
        let vnorm2 = v.norm_squared();
        if vnorm2 > 0.0 {
            let scale = 2.0 / vnorm2;
            for j in k..l {
                let dot = v.dot(&r.view_range(k.., j));
                r.view_range_mut(k.., j).axpy(-scale * dot, &v, 1.0);
            }
            for j in 0..g {
                let dot = v.dot(&qtb.view_range(k.., j));
                qtb.view_range_mut(k.., j).axpy(-scale * dot, &v, 1.0);
            }
        }
        r[(k, k)] = beta;
        r.view_range_mut(k + 1.., k).fill(0.0);
    }

    let lead = (0..steps).map(|k| r[(k, k)].abs()).fold(0.0, f64::max);
    let tol = f64::EPSILON * n.max(l) as f64 * lead;
    let rank = (0..steps).take_while(|&k| r[(k, k)].abs() > tol).count();

    let mut beta = DMatrix::zeros(l, g);
    if rank == 0 {
        return beta;
    }

    // R[..rank, ..] = R2ᵀ Q2ᵀ with Q2 R2 the QR of its transpose.
    let top_t = r.rows(0, rank).transpose();
    let qr = top_t.qr();
    let (q2, r2) = (qr.q(), qr.r());
    let c = qtb.rows(0, rank).into_owned();
    let z = r2.transpose().solve_lower_triangular(&c).expect("leading block of a rank-revealing QR is nonsingular");
    let y = q2 * z;
    for (k, &orig) in perm.iter().enumerate() {
        beta.row_mut(orig).copy_from(&y.row(k));
    }
    beta
}
