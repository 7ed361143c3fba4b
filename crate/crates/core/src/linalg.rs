//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Dense complex matrix.
pub type CMat = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Matrix unit `E_{ij}` of size `n`.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(i, j)] = ONE;
    m
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest entry modulus of `a - b`; `f64::INFINITY` on a shape mismatch.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `u b u*`.
pub fn ad(u: &CMat, b: &CMat) -> CMat {
    u * b * u.adjoint()
}

/// `max |u*u - 1|` entrywise; infinite for non-square input.
pub fn unitarity_residual(u: &CMat) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

/// How far `Ad(a)` and `Ad(b)` are apart as maps, measured on matrix units.
pub fn ad_residual(a: &CMat, b: &CMat) -> f64 {
    if a.shape() != b.shape() || !a.is_square() {
        return f64::INFINITY;
    }
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            // a E_ij a* = a_{:,i} (a_{:,j})*
            let lhs = a.column(i) * a.column(j).adjoint();
            let rhs = b.column(i) * b.column(j).adjoint();
            worst = worst.max(max_abs_diff(&lhs, &rhs));
        }
    }
    worst
}

/// Operator (spectral) norm.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix (the Hermitian part of `m` is used).
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// Ascending eigenvalues of the Hermitian part of `m` with orthonormal eigenvectors as columns.
///
/// nalgebra's complex solver occasionally returns NaN on sparse input. In that
/// case the matrix is conjugated by a fixed pseudo-random unitary and solved again.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let h = hermitian_part(m);
    let n = h.nrows();
    let finite = |e: &nalgebra::SymmetricEigen<Complex64, nalgebra::Dyn>| {
        e.eigenvalues.iter().all(|v| v.is_finite()) && e.eigenvectors.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    };
    let mut eig = h.clone().symmetric_eigen();
    let mut attempt = 0u64;
    while !finite(&eig) && attempt < 8 {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed ^ attempt);
        let q = random_unitary(n, &mut rng);
        let rotated = hermitian_part(&(q.adjoint() * &h * &q));
        let mut e = rotated.symmetric_eigen();
        e.eigenvectors = &q * e.eigenvectors;
        eig = e;
        attempt += 1;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Orthonormal basis of the null space of `a`, as columns.
///
/// Singular values below `rel_tol · max(1, σ_max)` count as zero.
pub fn null_space(a: &CMat, rel_tol: f64) -> CMat {
    let cols = a.ncols();
    if cols == 0 {
        return CMat::zeros(0, 0);
    }
    // Pad so the SVD returns a full right basis.
    let padded = if a.nrows() < cols {
        let mut p = CMat::zeros(cols, cols);
        p.view_mut((0, 0), (a.nrows(), cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = rel_tol * sigma_max.max(1.0);
    let keep: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] <= cutoff).collect();
    let mut basis = CMat::zeros(cols, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        for r in 0..cols {
            basis[(r, k)] = v_t[(i, r)].conj();
        }
    }
    basis
}

/// Numerical rank with relative cutoff `rel_tol · max(1, σ_max)`.
pub fn rank(a: &CMat, rel_tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv: Vec<f64> = a.singular_values().iter().cloned().collect();
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    let cutoff = rel_tol * sigma_max.max(1.0);
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// Stacks matrices as the columns of a `rows·cols × k` matrix (column-major vec).
pub fn vec_columns<'a>(mats: impl IntoIterator<Item = &'a CMat>, len: usize) -> CMat {
    let cols: Vec<&CMat> = mats.into_iter().collect();
    let mut out = CMat::zeros(len, cols.len());
    for (k, m) in cols.iter().enumerate() {
        debug_assert_eq!(m.len(), len);
        for (r, z) in m.iter().enumerate() {
            out[(r, k)] = *z;
        }
    }
    out
}

/// Frobenius inner product `tr(a* b)`.
pub fn frobenius_dot(a: &CMat, b: &CMat) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Standard complex Gaussian matrix.
pub fn random_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-distributed unitary via QR of a Gaussian matrix with phase correction.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = random_gaussian(n, n, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    hermitian_part(&random_gaussian(n, n, rng))
}

/// Random phase `e^{iθ}`.
pub fn random_phase<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(1.0, theta)
}
