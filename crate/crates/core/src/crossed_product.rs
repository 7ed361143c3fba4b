//! Crossed products by finite groups, realized as concrete matrix algebras.
//!
//! A global bundle action `σ` of `G` on `𝐁` acts on `V = ⊕_z ℂ^{n_z}` through
//! sections and on `ℓ²(G) ⊗ V` through the regular representation:
//! `π̃(f)` is block diagonal with block `g` equal to `π(σ̃_{g⁻¹}(f))`, and
//! `λ_s` moves block `g` to block `sg`. The crossed product is spanned by
//! `π̃(f)λ_t`. Partial crossed products are the corner `p W p` of the crossed
//! product `W` of the enveloping action, where `p = π̃(1_X)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bundle::{enveloping_bundle, AlgebraPartialAction, BundleAction, EnvelopingBundle, Section};
use crate::error::Error;
use crate::linalg::{ad, c64, max_abs, random_gaussian, rank, vec_columns, CMat, ZERO};
use crate::matrix_algebra::{morita_equivalent, wedderburn, BlockStructure, Decomposition, MatrixStarAlgebra};

/// The regular covariant representation of a global bundle action.
#[derive(Clone, Debug)]
pub struct RegularRepresentation {
    action: AlgebraPartialAction,
    offsets: Vec<usize>,
    fiber_space: usize,
}

impl RegularRepresentation {
    pub fn new(global: &BundleAction) -> Result<Self, Error> {
        if !global.base().is_global() {
            return Err(Error::NotGlobal);
        }
        let mut offsets = Vec::with_capacity(global.fiber_dims().len());
        let mut acc = 0;
        for &n in global.fiber_dims() {
            offsets.push(acc);
            acc += n;
        }
        Ok(Self { action: AlgebraPartialAction::on_sections(global), offsets, fiber_space: acc })
    }

    pub fn bundle_action(&self) -> &BundleAction {
        self.action.source()
    }

    pub fn group_order(&self) -> usize {
        self.action.group().order()
    }

    /// `|G| · Σ_z n_z`.
    pub fn size(&self) -> usize {
        self.group_order() * self.fiber_space
    }

    /// `π̃(f) λ_t`.
    pub fn pi_lambda(&self, f: &Section, t: usize) -> CMat {
        let g = self.action.group();
        let d = self.fiber_space;
        let mut m = CMat::zeros(self.size(), self.size());
        for h in g.elements() {
            // λ_t sends column block h to row block th, where π̃(f) acts by σ̃_{(th)⁻¹}(f).
            let row_block = g.mul(t, h);
            let twisted = self.action.apply(g.inv(row_block), f);
            for (z, fz) in twisted.fibers.iter().enumerate() {
                let o = self.offsets[z];
                m.view_mut((row_block * d + o, h * d + o), fz.shape()).copy_from(fz);
            }
        }
        m
    }

    /// `π̃(f)`.
    pub fn pi(&self, f: &Section) -> CMat {
        self.pi_lambda(f, self.action.group().identity())
    }

    /// `λ_t`.
    pub fn lambda(&self, t: usize) -> CMat {
        let alg = self.action.carrier();
        self.pi_lambda(&alg.unit(), t)
    }

    /// `Σ_t π̃(a(t)) λ_t`.
    pub fn represent(&self, a: &[Section]) -> CMat {
        let mut m = CMat::zeros(self.size(), self.size());
        for (t, f) in a.iter().enumerate() {
            m += self.pi_lambda(f, t);
        }
        m
    }

    /// Normalized `π̃(f) λ_t` for `f` running over the matrix units.
    fn crossed_product_basis(&self) -> Vec<CMat> {
        let alg = self.action.carrier();
        let norm = c64(1.0 / (self.group_order() as f64).sqrt(), 0.0);
        let units = alg.basis();
        self.action
            .group()
            .elements()
            .flat_map(|t| units.iter().map(move |u| (t, u)))
            .map(|(t, u)| self.pi_lambda(u, t) * norm)
            .collect()
    }
}

/// A crossed product together with its matrix realization and block structure.
#[derive(Clone, Debug)]
pub struct CrossedProduct {
    pub algebra: MatrixStarAlgebra,
    pub decomposition: Decomposition,
    /// `dim` of the ideal at each group element.
    pub ideal_dims: Vec<usize>,
    apa: AlgebraPartialAction,
    rep: RegularRepresentation,
    /// Source point to representation point.
    embed: Vec<usize>,
    /// Fiber identification at each source point.
    embed_unitaries: Vec<CMat>,
    /// `p = π̃(1_X)` for partial products.
    corner: Option<CMat>,
}

impl CrossedProduct {
    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn blocks(&self) -> &BlockStructure {
        &self.decomposition.blocks
    }

    /// `Σ_t dim(ideal_t)`.
    pub fn expected_dim(&self) -> usize {
        self.ideal_dims.iter().sum()
    }

    pub fn representation(&self) -> &RegularRepresentation {
        &self.rep
    }

    pub fn action(&self) -> &AlgebraPartialAction {
        &self.apa
    }

    /// The corner projection of a partial crossed product.
    pub fn corner_projection(&self) -> Option<&CMat> {
        self.corner.as_ref()
    }

    /// Transports an algebra element to a section over the representation base.
    fn to_rep_section(&self, f: &Section) -> Section {
        let source = match self.apa.induced() {
            Some(ia) => ia.project(f),
            None => f.clone(),
        };
        let mut out = self.rep.action.carrier().zero();
        for (x, fx) in source.fibers.iter().enumerate() {
            out.fibers[self.embed[x]] = ad(&self.embed_unitaries[x], fx);
        }
        out
    }

    /// Matrix of the element `Σ_t a(t) δ_t`.
    pub fn represent(&self, a: &[Section]) -> CMat {
        let mut m = CMat::zeros(self.rep.size(), self.rep.size());
        for (t, f) in a.iter().enumerate() {
            m += self.rep.pi_lambda(&self.to_rep_section(f), t);
        }
        m
    }
}

fn build(
    apa: &AlgebraPartialAction,
    rep: RegularRepresentation,
    embed: Vec<usize>,
    embed_unitaries: Vec<CMat>,
    corner: Option<CMat>,
) -> Result<CrossedProduct, Error> {
    let source = apa.source();
    let g = source.group();
    let norm = c64(1.0 / (g.order() as f64).sqrt(), 0.0);
    let rep_alg = rep.action.carrier();
    let mut basis = Vec::new();
    for t in g.elements() {
        for x in source.base().domain(t) {
            let n = source.fiber_dim(x);
            for i in 0..n {
                for j in 0..n {
                    let mut f = rep_alg.zero();
                    f.fibers[embed[x]] = ad(&embed_unitaries[x], &crate::linalg::matrix_unit(n, i, j));
                    basis.push(rep.pi_lambda(&f, t) * norm);
                }
            }
        }
    }
    let ideal_dims: Vec<usize> = g.elements().map(|t| apa.ideal_dim(t)).collect();
    let algebra = MatrixStarAlgebra::from_orthonormal(rep.size(), basis);
    let independent = gram_rank(algebra.stacked());
    if independent != algebra.dim() {
        return Err(Error::Assertion(format!(
            "realization is not faithful: {independent} independent elements out of {}",
            algebra.dim()
        )));
    }
    let decomposition = wedderburn(&algebra)?;
    let cp = CrossedProduct { algebra, decomposition, ideal_dims, apa: apa.clone(), rep, embed, embed_unitaries, corner };
    if cp.dim() != cp.expected_dim() {
        return Err(Error::Assertion(format!(
            "crossed product has dimension {} but the ideals add up to {}",
            cp.dim(),
            cp.expected_dim()
        )));
    }
    if !cp.decomposition.dimension_matches {
        return Err(Error::Numerical(format!(
            "block sizes {:?} do not account for dimension {}",
            cp.blocks().block_dims,
            cp.dim()
        )));
    }
    Ok(cp)
}

/// Crossed product by a global action, in the regular representation.
pub fn global_crossed_product(apa: &AlgebraPartialAction) -> Result<CrossedProduct, Error> {
    if !apa.is_global() {
        return Err(Error::NotGlobal);
    }
    let source = apa.source();
    let rep = RegularRepresentation::new(source)?;
    let n = source.base().num_points();
    let embed = (0..n).collect();
    let embed_unitaries = (0..n).map(|x| CMat::identity(source.fiber_dim(x), source.fiber_dim(x))).collect();
    build(apa, rep, embed, embed_unitaries, None)
}

/// `p = π̃(1_{ι X})`: entry `(g, z, i)` is one iff `g·z ∈ ι X`.
fn corner_projection(rep: &RegularRepresentation, env: &EnvelopingBundle) -> CMat {
    let alg = rep.action.carrier();
    let indicator = alg.indicator(&env.base.embed);
    rep.pi(&indicator)
}

/// Partial crossed product as the corner `p W p` of the enveloping crossed product.
///
/// The corner basis is `π̃(ι e^x_{ij}) λ_t` for `x ∈ X_t`. Its dimension is
/// cross-checked against the rank of `{p w p}` over a basis of `W`.
pub fn partial_crossed_product(apa: &AlgebraPartialAction) -> Result<CrossedProduct, Error> {
    let (cp, _) = partial_with_envelope(apa)?;
    Ok(cp)
}

fn partial_with_envelope(apa: &AlgebraPartialAction) -> Result<(CrossedProduct, Vec<CMat>), Error> {
    let source = apa.source();
    let env = enveloping_bundle(source)?;
    let rep = RegularRepresentation::new(&env.action)?;
    let p = corner_projection(&rep, &env);
    let embed = env.base.embed.clone();
    let embed_unitaries = (0..embed.len()).map(|x| env.embedding_unitary(x).clone()).collect();
    let w_basis = rep.crossed_product_basis();
    let cp = build(apa, rep, embed, embed_unitaries, Some(p.clone()))?;

    let mask: Vec<bool> = (0..p.nrows()).map(|i| p[(i, i)].re > 0.5).collect();
    let compress = |w: &CMat| CMat::from_fn(w.nrows(), w.ncols(), |r, c| if mask[r] && mask[c] { w[(r, c)] } else { ZERO });
    let corner_residual = cp.algebra.basis().iter().map(|b| max_abs(&(b - compress(b)))).fold(0.0, f64::max);
    if corner_residual > 1e-9 {
        return Err(Error::Assertion(format!("corner basis leaves the corner (residual {corner_residual:.3e})")));
    }
    let compressed: Vec<CMat> = w_basis.iter().map(compress).collect();
    let n = p.nrows();
    let corner_rank = gram_rank(&vec_columns(compressed.iter(), n * n));
    if corner_rank != cp.expected_dim() {
        return Err(Error::Assertion(format!(
            "pWp has dimension {corner_rank} but the ideals add up to {}",
            cp.expected_dim()
        )));
    }
    Ok((cp, w_basis))
}

/// Rank of the column span via the Gram matrix.
pub(crate) fn gram_rank(cols: &CMat) -> usize {
    if cols.ncols() == 0 {
        return 0;
    }
    let gram = cols.ad_mul(cols);
    let ev = crate::linalg::hermitian_eigenvalues(&gram);
    let top = ev.last().copied().unwrap_or(0.0).max(1e-300);
    ev.iter().filter(|&&v| v > 1e-10 * top).count()
}

/// `(a ★ b)(t) = Σ_s α̃_s(α̃_{s⁻¹}(a(s)) b(s⁻¹t))`.
pub fn convolve(apa: &AlgebraPartialAction, a: &[Section], b: &[Section]) -> Vec<Section> {
    let g = apa.group();
    let alg = apa.carrier();
    g.elements()
        .map(|t| {
            let mut acc = alg.zero();
            for s in g.elements() {
                let si = g.inv(s);
                let inner = &apa.apply(si, &a[s]) * &b[g.mul(si, t)];
                acc = &acc + &apa.apply(s, &inner);
            }
            acc
        })
        .collect()
}

/// `a*(t) = α̃_t(a(t⁻¹)*)`.
pub fn involution(apa: &AlgebraPartialAction, a: &[Section]) -> Vec<Section> {
    let g = apa.group();
    g.elements().map(|t| apa.apply(t, &a[g.inv(t)].adjoint())).collect()
}

/// A random element `Σ_t a(t) δ_t` with `a(t)` in the ideal at `t`.
pub fn random_element(apa: &AlgebraPartialAction, rng: &mut ChaCha8Rng) -> Vec<Section> {
    let alg = apa.carrier();
    apa.group()
        .elements()
        .map(|t| {
            let basis = apa.ideal_basis(t);
            let coeffs = random_gaussian(basis.len(), 1, rng);
            basis.iter().enumerate().fold(alg.zero(), |acc, (k, b)| &acc + &b.scale(coeffs[(k, 0)]))
        })
        .collect()
}

/// Outcome of [`verify_enveloping_morita`].
#[derive(Clone, Debug, Serialize)]
pub struct EnvelopingMoritaReport {
    pub corner_dim: usize,
    pub expected_corner_dim: usize,
    pub global_dim: usize,
    pub ambient_dim: usize,
    pub corner_blocks: BlockStructure,
    pub global_blocks: BlockStructure,
    pub fullness_rank: usize,
    pub full: bool,
    pub central_support_full: bool,
    pub hereditary_residual: f64,
    pub hereditary: bool,
    pub morita: bool,
}

impl EnvelopingMoritaReport {
    pub fn verified(&self) -> bool {
        self.corner_dim == self.expected_corner_dim
            && self.full
            && self.central_support_full
            && self.hereditary
            && self.morita
    }
}

/// Checks that the partial crossed product is a full hereditary corner of the
/// enveloping crossed product and compares their block counts.
pub fn verify_enveloping_morita(ba: &BundleAction, tol: f64, seed: u64) -> Result<EnvelopingMoritaReport, Error> {
    let apa = AlgebraPartialAction::on_sections(ba);
    let (corner, w_basis) = partial_with_envelope(&apa)?;
    let env_action = corner.rep.bundle_action().clone();
    let global = global_crossed_product(&AlgebraPartialAction::on_sections(&env_action))?;
    let w = &global.algebra;
    debug_assert_eq!(w.dim(), w_basis.len());
    let p = corner.corner.clone().expect("partial crossed product has a corner");
    let n = p.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random_in = |alg: &MatrixStarAlgebra, rng: &mut ChaCha8Rng| {
        alg.from_coordinates(&random_gaussian(alg.dim(), 1, rng).column(0).into_owned())
    };

    // The ideal W p W, spanned by random sandwiches.
    let samples: Vec<CMat> = (0..w.dim() + 4)
        .map(|_| {
            let r1 = random_in(w, &mut rng);
            let r2 = random_in(w, &mut rng);
            r1 * &p * r2
        })
        .collect();
    let fullness_rank = gram_rank(&vec_columns(samples.iter(), n * n));

    // Central support: the minimal central projections not orthogonal to p add up to 1_W.
    let mut support = CMat::zeros(n, n);
    for q in &global.decomposition.central_projections {
        if max_abs(&(q * &p)) > 1e-8 {
            support += q;
        }
    }
    let central_support_full = max_abs(&(support - w.unit())) <= 1e-8;

    let mut hereditary_residual: f64 = 0.0;
    for _ in 0..4 {
        let a = random_in(&corner.algebra, &mut rng);
        let b = random_in(&corner.algebra, &mut rng);
        let x = random_in(w, &mut rng);
        let y = &a * x * &b;
        let scale = max_abs(&y).max(1.0);
        hereditary_residual = hereditary_residual.max(corner.algebra.distance(&y) / scale);
    }

    Ok(EnvelopingMoritaReport {
        corner_dim: corner.dim(),
        expected_corner_dim: corner.expected_dim(),
        global_dim: w.dim(),
        ambient_dim: n,
        corner_blocks: corner.blocks().clone(),
        global_blocks: global.blocks().clone(),
        fullness_rank,
        full: fullness_rank == w.dim(),
        central_support_full,
        hereditary_residual,
        hereditary: hereditary_residual <= tol.max(1e-9),
        morita: morita_equivalent(corner.blocks(), global.blocks()),
    })
}

/// Block structure of a section algebra `⊕_x M_{n_x}` from its block-diagonal realization.
pub fn section_algebra_blocks(fiber_dims: &[usize]) -> Result<BlockStructure, Error> {
    let alg = crate::matrix_algebra::block_diagonal_algebra(fiber_dims);
    Ok(wedderburn(&alg)?.blocks)
}

/// Numerical rank of a family of matrices.
pub fn span_rank(mats: &[CMat]) -> usize {
    if mats.is_empty() {
        return 0;
    }
    let n = mats[0].nrows();
    rank(&vec_columns(mats.iter(), n * mats[0].ncols()), 1e-9)
}
