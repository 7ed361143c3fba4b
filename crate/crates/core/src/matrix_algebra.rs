//! Concrete `*`-closed matrix algebras and their Artin–Wedderburn profile.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Error;
use crate::linalg::{frobenius_dot, hermitian_eigen, hermitian_part, max_abs, random_gaussian, vec_columns, CMat, CVec, ZERO};

/// Seed of the generic central element used by [`wedderburn`].
pub const DEFAULT_SEED: u64 = 0x5eed;

/// Tolerance for integer rounding of block sizes.
pub const ROUNDING_TOL: f64 = 1e-6;

const MAX_RETRIES: usize = 5;

/// Orthonormal (Frobenius) basis of a subspace of `M_N`, grown by Gram–Schmidt.
#[derive(Clone, Debug)]
struct Span {
    basis: Vec<CMat>,
    rel_tol: f64,
}

impl Span {
    fn new(rel_tol: f64) -> Self {
        Self { basis: Vec::new(), rel_tol }
    }

    fn residual(&self, m: &CMat) -> CMat {
        let mut r = m.clone();
        // Two passes keep the basis orthonormal to working precision.
        for _ in 0..2 {
            for b in &self.basis {
                let c = frobenius_dot(b, &r);
                r -= b * c;
            }
        }
        r
    }

    /// Adds `m` if it is not already in the span; returns whether it was added.
    fn push(&mut self, m: &CMat) -> bool {
        let scale = m.norm();
        if scale == 0.0 {
            return false;
        }
        let r = self.residual(m);
        let norm = r.norm();
        if norm <= self.rel_tol * scale.max(1.0) {
            return false;
        }
        self.basis.push(r / crate::linalg::c64(norm, 0.0));
        true
    }
}

/// A `*`-subalgebra of `M_N(ℂ)` given by a Frobenius-orthonormal basis.
#[derive(Clone, Debug)]
pub struct MatrixStarAlgebra {
    ambient_dim: usize,
    basis: Vec<CMat>,
    /// The basis vectorized as the columns of an `N² × dim` matrix.
    stack: CMat,
    unit: CMat,
}

/// The multiset of simple-summand sizes, sorted increasingly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct BlockStructure {
    pub block_dims: Vec<usize>,
}

impl BlockStructure {
    pub fn new(mut block_dims: Vec<usize>) -> Self {
        block_dims.sort_unstable();
        Self { block_dims }
    }

    pub fn count(&self) -> usize {
        self.block_dims.len()
    }

    /// `Σ n_i²`.
    pub fn dimension(&self) -> usize {
        self.block_dims.iter().map(|n| n * n).sum()
    }
}

/// Output of [`wedderburn`].
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub blocks: BlockStructure,
    /// Minimal central projections, in the order of the unsorted block sizes.
    pub central_projections: Vec<CMat>,
    pub center_dim: usize,
    /// Largest distance of a block size estimate `n_i²` from its rounded value.
    pub rounding_residual: f64,
    /// Whether `Σ n_i²` equals the algebra dimension.
    pub dimension_matches: bool,
}

impl MatrixStarAlgebra {
    /// The span of `mats`, which must already be closed under products and adjoints.
    ///
    /// Fails when the span is not closed within `tol`.
    pub fn from_spanning_set(mats: &[CMat], n: usize, tol: f64) -> Result<Self, Error> {
        if mats.iter().any(|m| m.shape() != (n, n)) {
            return Err(Error::InvalidParameter(format!("all matrices must be {n}x{n}")));
        }
        let mut span = Span::new(1e-9);
        for m in mats {
            span.push(m);
        }
        let alg = Self::from_orthonormal(n, span.basis);
        let r = alg.closure_residual();
        if r > tol {
            return Err(Error::NotInSubspace(format!("span is not a *-algebra (residual {r:.3e})")));
        }
        Ok(alg)
    }

    pub(crate) fn from_orthonormal(n: usize, basis: Vec<CMat>) -> Self {
        let mut frame = CMat::zeros(n, n);
        for b in &basis {
            frame += b * b.adjoint();
        }
        let unit = range_projection(&frame);
        let stack = vec_columns(basis.iter(), n * n);
        Self { ambient_dim: n, basis, stack, unit }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// The basis vectorized as the columns of an `N² × dim` matrix.
    pub fn stacked(&self) -> &CMat {
        &self.stack
    }

    /// Frobenius-orthonormal basis.
    pub fn basis(&self) -> &[CMat] {
        &self.basis
    }

    /// The unit of the algebra: the projection onto the span of the ranges of its elements.
    pub fn unit(&self) -> &CMat {
        &self.unit
    }

    /// Coordinates `⟨b_k, x⟩` in the orthonormal basis.
    pub fn coordinates(&self, x: &CMat) -> CVec {
        CVec::from_iterator(self.basis.len(), self.basis.iter().map(|b| frobenius_dot(b, x)))
    }

    /// Coordinates of several matrices at once, one column each.
    pub fn coordinates_many(&self, xs: &[CMat]) -> CMat {
        self.stack.ad_mul(&vec_columns(xs.iter(), self.ambient_dim * self.ambient_dim))
    }

    pub fn from_coordinates(&self, c: &CVec) -> CMat {
        let mut m = CMat::zeros(self.ambient_dim, self.ambient_dim);
        for (b, z) in self.basis.iter().zip(c.iter()) {
            m += b * *z;
        }
        m
    }

    /// Distance from `x` to its orthogonal projection onto the algebra.
    pub fn distance(&self, x: &CMat) -> f64 {
        max_abs(&(x - self.from_coordinates(&self.coordinates(x))))
    }

    pub fn contains(&self, x: &CMat, tol: f64) -> bool {
        x.shape() == (self.ambient_dim, self.ambient_dim) && self.distance(x) <= tol
    }

    /// Largest distance of `b_i b_j` and `b_i*` from the span.
    pub fn closure_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in &self.basis {
            worst = worst.max(self.distance(&a.adjoint()));
            for b in &self.basis {
                worst = worst.max(self.distance(&(a * b)));
            }
        }
        worst
    }

    /// `u* A u`.
    pub fn conjugate(&self, u: &CMat) -> Self {
        let basis: Vec<CMat> = self.basis.iter().map(|b| u.adjoint() * b * u).collect();
        let stack = vec_columns(basis.iter(), self.ambient_dim * self.ambient_dim);
        Self { ambient_dim: self.ambient_dim, basis, stack, unit: u.adjoint() * &self.unit * u }
    }

    /// Orthonormal basis of the center, in coordinates (one column per element).
    fn center_coordinates(&self, rng: &mut ChaCha8Rng) -> CMat {
        let d = self.dim();
        let n = self.ambient_dim;
        if d == 0 {
            return CMat::zeros(0, 0);
        }
        // A generic pair of elements generates every simple summand, so
        // commuting with two random elements characterizes the center.
        let mut wide = CMat::zeros(n, n * d);
        let mut tall = CMat::zeros(n * d, n);
        for (j, b) in self.basis.iter().enumerate() {
            wide.view_mut((0, j * n), (n, n)).copy_from(b);
            tall.view_mut((j * n, 0), (n, n)).copy_from(b);
        }
        let rounds = 2;
        let mut stacked = CMat::zeros(rounds * d, d);
        for r in 0..rounds {
            let c = random_gaussian(d, 1, rng);
            let a = self.from_coordinates(&c.column(0).into_owned());
            let left = &a * &wide;
            let right = &tall * &a;
            let mut comm = CMat::zeros(n * n, d);
            for j in 0..d {
                for col in 0..n {
                    for row in 0..n {
                        comm[(col * n + row, j)] = right[(j * n + row, col)] - left[(row, j * n + col)];
                    }
                }
            }
            stacked.view_mut((r * d, 0), (d, d)).copy_from(&self.stack.ad_mul(&comm));
        }
        crate::linalg::null_space(&stacked, 1e-8)
    }
}

/// Smallest `*`-algebra containing `generators`.
///
/// Starts from the span of the generators and their adjoints and multiplies
/// by generators on the left until the span stops growing.
pub fn star_closure(generators: &[CMat], n: usize) -> Result<MatrixStarAlgebra, Error> {
    if generators.iter().any(|m| m.shape() != (n, n)) {
        return Err(Error::InvalidParameter(format!("all generators must be {n}x{n}")));
    }
    let mut letters: Vec<CMat> = Vec::new();
    for g in generators {
        letters.push(g.clone());
        letters.push(g.adjoint());
    }
    let mut span = Span::new(1e-9);
    let mut frontier: Vec<CMat> = Vec::new();
    for l in &letters {
        if span.push(l) {
            frontier.push(span.basis.last().unwrap().clone());
        }
    }
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for w in &frontier {
            for l in &letters {
                if span.push(&(l * w)) {
                    next.push(span.basis.last().unwrap().clone());
                }
            }
        }
        frontier = next;
    }
    Ok(MatrixStarAlgebra::from_orthonormal(n, span.basis))
}

/// Projection onto the range of a positive semidefinite matrix.
fn range_projection(m: &CMat) -> CMat {
    let n = m.nrows();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let (values, vectors) = hermitian_eigen(m);
    let scale = values.iter().cloned().fold(0.0, f64::max).max(1.0);
    let mut p = CMat::zeros(n, n);
    for (k, &lambda) in values.iter().enumerate() {
        if lambda > 1e-9 * scale {
            let v = vectors.column(k);
            p += &v * v.adjoint();
        }
    }
    p
}

/// Splits sorted values into clusters separated by gaps larger than `gap`.
fn clusters(values: &[(f64, usize)], gap: f64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for &(v, idx) in values {
        if out.is_empty() || v - last > gap {
            out.push(Vec::new());
        }
        out.last_mut().unwrap().push(idx);
        last = v;
    }
    out
}

/// Artin–Wedderburn decomposition with the default seed.
pub fn wedderburn(a: &MatrixStarAlgebra) -> Result<Decomposition, Error> {
    wedderburn_seeded(a, DEFAULT_SEED)
}

/// Artin–Wedderburn decomposition.
///
/// The center is the common kernel of commutators with random elements. A
/// random self-adjoint central element `h` is diagonalized after shifting the
/// complement of the unit away from its spectrum; its eigenvalue clusters give
/// the minimal central projections `P_i`. Block sizes come from
/// `n_i² = tr(P_i Σ_k b_k b_k*)`, which is basis independent.
pub fn wedderburn_seeded(a: &MatrixStarAlgebra, seed: u64) -> Result<Decomposition, Error> {
    let n = a.ambient_dim();
    if a.dim() == 0 {
        return Ok(Decomposition {
            blocks: BlockStructure::new(Vec::new()),
            central_projections: Vec::new(),
            center_dim: 0,
            rounding_residual: 0.0,
            dimension_matches: true,
        });
    }
    let mut frame = CMat::zeros(n, n);
    for b in a.basis() {
        frame += b * b.adjoint();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_error = String::new();
    for _ in 0..MAX_RETRIES {
        let center = a.center_coordinates(&mut rng);
        let m = center.ncols();
        if m == 0 {
            last_error = "center is trivial".into();
            continue;
        }
        let coeffs = random_gaussian(m, 1, &mut rng);
        let z = a.from_coordinates(&(&center * &coeffs).column(0).into_owned());
        let mut h = hermitian_part(&z);
        // Normalize so eigenvalue gaps are measured on a fixed scale.
        let scale = crate::linalg::op_norm(&h);
        if scale == 0.0 {
            last_error = "generic central element vanished".into();
            continue;
        }
        h /= crate::linalg::c64(scale, 0.0);
        let shift = 3.0;
        let complement = CMat::identity(n, n) - a.unit();
        let shifted = &h + complement * crate::linalg::c64(shift, 0.0);
        let (eigenvalues, eigenvectors) = hermitian_eigen(&shifted);
        let values: Vec<(f64, usize)> = eigenvalues.iter().cloned().zip(0..n).collect();
        let groups: Vec<Vec<usize>> = clusters(&values, 1e-6)
            .into_iter()
            .filter(|g| g.iter().any(|&i| (eigenvalues[i] - shift).abs() > 0.5))
            .collect();
        if groups.len() != m {
            last_error = format!("found {} eigenvalue clusters for a center of dimension {m}", groups.len());
            continue;
        }
        let mut projections = Vec::with_capacity(m);
        let mut sizes = Vec::with_capacity(m);
        let mut rounding: f64 = 0.0;
        let mut ok = true;
        for g in &groups {
            let mut p = CMat::zeros(n, n);
            for &i in g {
                let v = eigenvectors.column(i);
                p += &v * v.adjoint();
            }
            let sq = (&p * &frame).trace().re;
            let rounded = sq.round();
            rounding = rounding.max((sq - rounded).abs());
            let root = (rounded.max(0.0).sqrt()).round() as usize;
            if (sq - rounded).abs() > ROUNDING_TOL || root * root != rounded as usize || root == 0 {
                last_error = format!("block size estimate {sq} is not a nonzero perfect square");
                ok = false;
                break;
            }
            projections.push(p);
            sizes.push(root);
        }
        if !ok {
            continue;
        }
        let blocks = BlockStructure::new(sizes);
        let dimension_matches = blocks.dimension() == a.dim();
        return Ok(Decomposition {
            blocks,
            central_projections: projections,
            center_dim: m,
            rounding_residual: rounding,
            dimension_matches,
        });
    }
    Err(Error::Numerical(format!("Wedderburn decomposition failed after {MAX_RETRIES} attempts: {last_error}")))
}

/// Whether a self-adjoint element of `a` is positive: its least eigenvalue is at least `-tol`.
pub fn is_positive(x: &CMat, a: &MatrixStarAlgebra, tol: f64) -> Result<bool, Error> {
    if !a.contains(x, tol.max(1e-9)) {
        return Err(Error::NotInSubspace("element is not in the algebra".into()));
    }
    if max_abs(&(x - x.adjoint())) > tol.max(1e-9) {
        return Err(Error::InvalidParameter("element is not self-adjoint".into()));
    }
    Ok(min_eigenvalue(x) >= -tol)
}

/// Least eigenvalue of the self-adjoint part.
pub fn min_eigenvalue(x: &CMat) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    crate::linalg::hermitian_eigenvalues(x).first().copied().unwrap_or(0.0)
}

/// Finite-dimensional C*-algebras are Morita equivalent iff they have the
/// same number of simple summands.
pub fn morita_equivalent(b1: &BlockStructure, b2: &BlockStructure) -> bool {
    b1.count() == b2.count()
}

/// Block diagonal embedding of `M_{n_1} ⊕ … ⊕ M_{n_k}`, used by tests and examples.
pub fn block_diagonal_algebra(block_dims: &[usize]) -> MatrixStarAlgebra {
    let n: usize = block_dims.iter().sum();
    let mut basis = Vec::new();
    let mut offset = 0;
    for &d in block_dims {
        for i in 0..d {
            for j in 0..d {
                let mut m = CMat::from_element(n, n, ZERO);
                m[(offset + i, offset + j)] = crate::linalg::ONE;
                basis.push(m);
            }
        }
        offset += d;
    }
    MatrixStarAlgebra::from_orthonormal(n, basis)
}
