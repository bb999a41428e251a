//! Dense kernels for symmetric positive-definite matrices.
//!
//! nalgebra's own decompositions are unblocked; the samplers factor and
//! invert hundreds of matrices per sweep, so the routines here use a
//! right-looking blocked layout whose bulk work is routed through
//! `gemm` (and therefore `matrixmultiply`). All matrices are column-major
//! `DMatrix<f64>`.

use nalgebra::DMatrix;

/// Panel width of the blocked kernels.
const NB: usize = 64;

/// Smallest pivot accepted by the factorizations.
pub const PIVOT_TOL: f64 = 1e-12;

/// `dst[rows] -= f * src[rows]` on two distinct columns of a column-major slice.
#[inline]
fn col_axpy(d: &mut [f64], n: usize, dst: usize, src: usize, lo: usize, hi: usize, f: f64) {
    debug_assert!(dst != src);
    if f == 0.0 || lo >= hi {
        return;
    }
    if dst > src {
        let (left, right) = d.split_at_mut(dst * n);
        let s = &left[src * n + lo..src * n + hi];
        let t = &mut right[lo..hi];
        for (ti, si) in t.iter_mut().zip(s) {
            *ti -= f * si;
        }
    } else {
        let (left, right) = d.split_at_mut(src * n);
        let s = &right[lo..hi];
        let t = &mut left[dst * n + lo..dst * n + hi];
        for (ti, si) in t.iter_mut().zip(s) {
            *ti -= f * si;
        }
    }
}

/// Unblocked factorization of the diagonal block `[k, k+kb)`.
fn potf2(d: &mut [f64], n: usize, k: usize, kb: usize, tol: f64) -> Result<(), usize> {
    let end = k + kb;
    for j in k..end {
        for c in k..j {
            let f = d[j + c * n];
            col_axpy(d, n, j, c, j, end, f);
        }
        let piv = d[j + j * n];
        if !(piv > tol) {
            return Err(j);
        }
        let s = piv.sqrt();
        d[j + j * n] = s;
        let inv = 1.0 / s;
        for v in &mut d[j * n + j + 1..j * n + end] {
            *v *= inv;
        }
    }
    Ok(())
}

/// Panel solve `A21 <- A21 L11^{-T}` for rows `[r0, n)` of block column `k`.
fn trsm_panel(d: &mut [f64], n: usize, k: usize, kb: usize, r0: usize) {
    for c in k..k + kb {
        for c2 in k..c {
            let f = d[c + c2 * n];
            col_axpy(d, n, c, c2, r0, n, f);
        }
        let inv = 1.0 / d[c + c * n];
        for v in &mut d[c * n + r0..c * n + n] {
            *v *= inv;
        }
    }
}

fn zero_upper(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    let d = a.as_mut_slice();
    for j in 1..n {
        for v in &mut d[j * n..j * n + j] {
            *v = 0.0;
        }
    }
}

/// Copies the lower triangle onto the upper triangle.
pub fn symmetrize_from_lower(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for j in 0..n {
        for i in j + 1..n {
            a[(j, i)] = a[(i, j)];
        }
    }
}

/// Copies the upper triangle onto the lower triangle.
pub fn symmetrize_from_upper(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for j in 0..n {
        for i in j + 1..n {
            a[(i, j)] = a[(j, i)];
        }
    }
}

/// Lower Cholesky factor computed in place from the lower triangle of `a`.
///
/// On success the strict upper triangle is zeroed. On failure returns the
/// zero-based index of the first pivot not exceeding `tol`; `a` is then
/// left partially overwritten.
pub fn cholesky_in_place(a: &mut DMatrix<f64>, tol: f64) -> Result<(), usize> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "cholesky of a non-square matrix");
    let mut k = 0;
    while k < n {
        let kb = NB.min(n - k);
        potf2(a.as_mut_slice(), n, k, kb, tol)?;
        let r0 = k + kb;
        if r0 < n {
            trsm_panel(a.as_mut_slice(), n, k, kb, r0);
            let m = n - r0;
            let panel = a.view((r0, k), (m, kb)).into_owned();
            let pt = panel.transpose();
            let mut jb = 0;
            while jb < m {
                let w = NB.min(m - jb);
                a.view_mut((r0 + jb, r0 + jb), (m - jb, w)).gemm(
                    -1.0,
                    &panel.rows(jb, m - jb),
                    &pt.columns(jb, w),
                    1.0,
                );
                jb += w;
            }
        }
        k = r0;
    }
    zero_upper(a);
    Ok(())
}

/// Lower Cholesky factor of `a` (only its lower triangle is read).
pub fn cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>, usize> {
    let mut l = a.clone();
    cholesky_in_place(&mut l, PIVOT_TOL)?;
    Ok(l)
}

fn trti2_block(l: &mut DMatrix<f64>, k: usize, kb: usize) {
    let blk = l.view((k, k), (kb, kb)).into_owned();
    let mut x = vec![0.0; kb];
    for j in 0..kb {
        x.iter_mut().for_each(|v| *v = 0.0);
        x[j] = 1.0;
        for c in j..kb {
            x[c] /= blk[(c, c)];
            let xc = x[c];
            if xc != 0.0 {
                let col = &blk.as_slice()[c * kb..(c + 1) * kb];
                for i in c + 1..kb {
                    x[i] -= col[i] * xc;
                }
            }
        }
        for i in 0..kb {
            l[(k + i, k + j)] = if i < j { 0.0 } else { x[i] };
        }
    }
}

/// Replaces a lower-triangular matrix with its inverse.
pub fn tri_lower_inverse_in_place(l: &mut DMatrix<f64>) {
    let n = l.nrows();
    assert_eq!(n, l.ncols());
    zero_upper(l);
    let starts: Vec<usize> = (0..n).step_by(NB).collect();
    for &k in starts.iter().rev() {
        let kb = NB.min(n - k);
        let r0 = k + kb;
        let m = n - r0;
        if m == 0 {
            trti2_block(l, k, kb);
            continue;
        }
        let l21 = l.view((r0, k), (m, kb)).into_owned();
        let mut x = DMatrix::<f64>::zeros(m, kb);
        let mut jb = 0;
        while jb < m {
            let w = NB.min(m - jb);
            x.rows_mut(jb, m - jb).gemm(
                1.0,
                &l.view((r0 + jb, r0 + jb), (m - jb, w)),
                &l21.rows(jb, w),
                1.0,
            );
            jb += w;
        }
        trti2_block(l, k, kb);
        let l11inv = l.view((k, k), (kb, kb)).into_owned();
        l.view_mut((r0, k), (m, kb)).gemm(-1.0, &x, &l11inv, 0.0);
    }
}

/// `WᵀW` for lower-triangular `W`, returned as a full symmetric matrix.
pub fn lower_gram(w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = w.nrows();
    let wt = w.transpose();
    let mut g = DMatrix::<f64>::zeros(n, n);
    let mut jb = 0;
    while jb < n {
        let bw = NB.min(n - jb);
        g.view_mut((jb, jb), (n - jb, bw)).gemm(
            1.0,
            &wt.view((jb, jb), (n - jb, n - jb)),
            &w.view((jb, jb), (n - jb, bw)),
            0.0,
        );
        jb += bw;
    }
    symmetrize_from_lower(&mut g);
    g
}

/// Inverse of a symmetric positive-definite matrix through its Cholesky factor.
pub fn spd_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>, usize> {
    let mut l = cholesky(a)?;
    tri_lower_inverse_in_place(&mut l);
    Ok(lower_gram(&l))
}

/// Lower triangle of `c` accumulates `alpha * B Bᵀ`.
pub fn syrk_lower(c: &mut DMatrix<f64>, alpha: f64, b: &DMatrix<f64>) {
    let n = b.nrows();
    assert_eq!(c.shape(), (n, n));
    let bt = b.transpose();
    let mut jb = 0;
    while jb < n {
        let w = NB.min(n - jb);
        c.view_mut((jb, jb), (n - jb, w))
            .gemm(alpha, &b.rows(jb, n - jb), &bt.columns(jb, w), 1.0);
        jb += w;
    }
}

/// Solves `L x = b` in place.
pub fn solve_lower_in_place(l: &DMatrix<f64>, x: &mut [f64]) {
    let n = l.nrows();
    let d = l.as_slice();
    for c in 0..n {
        x[c] /= d[c + c * n];
        let xc = x[c];
        if xc != 0.0 {
            for (xi, li) in x[c + 1..].iter_mut().zip(&d[c * n + c + 1..(c + 1) * n]) {
                *xi -= li * xc;
            }
        }
    }
}

/// Solves `Lᵀ x = b` in place.
pub fn solve_lower_transpose_in_place(l: &DMatrix<f64>, x: &mut [f64]) {
    let n = l.nrows();
    let d = l.as_slice();
    for i in (0..n).rev() {
        let col = &d[i * n + i + 1..(i + 1) * n];
        let s: f64 = col.iter().zip(&x[i + 1..]).map(|(a, b)| a * b).sum();
        x[i] = (x[i] - s) / d[i + i * n];
    }
}

/// `log |A|` from the lower Cholesky factor of `A`.
pub fn log_det_from_cholesky(l: &DMatrix<f64>) -> f64 {
    2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// Largest absolute asymmetry `|a_ij - a_ji|`.
pub fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in j + 1..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}
