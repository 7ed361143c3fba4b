//! The imprimitivity bimodule between `C(H, Ind₀(𝐁, β))` and `C(K, Ind₀(𝐁, α))`
//! and the end-to-end symmetric imprimitivity pipeline.
//!
//! For commuting free global actions `α` of `H` and `β` of `K` on a bundle `𝐁`,
//! `Z = C(𝐁)` carries, with counting measure and trivial modular functions,
//!
//! * `b·f = Σ_s b(s) α̃_s(f)`
//! * `f·c = Σ_t β̃_t(f c(t⁻¹))`
//! * `⟨f, g⟩_E(s) = Σ_t β̃_t(f α̃_s(g*))`
//! * `⟨f, g⟩_F(t) = Σ_s α̃_s(f* β̃_t(g))`
//!
//! Partial actions are handled by passing to the enveloping action of the
//! product action and slicing it back into an `H`- and a `K`-action.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bundle::{
    enveloping_bundle, ensure_bundle_commute, induced_algebra_action, product_bundle_action, AlgebraPartialAction,
    BundleAction, EnvelopingBundle, OrbitBundle, Section,
};
use crate::crossed_product::{
    convolve, global_crossed_product, gram_rank, involution, partial_crossed_product, random_element, CrossedProduct,
};
use crate::error::Error;
use crate::linalg::{ad_residual, max_abs, op_norm, random_gaussian, vec_columns, CMat};
use crate::matrix_algebra::{min_eigenvalue, morita_equivalent, BlockStructure};

/// Largest Z-dimension for which every axiom is checked on full bases.
pub const EXHAUSTIVE_LIMIT: usize = 16;

/// Number of random samples per axiom above [`EXHAUSTIVE_LIMIT`].
pub const RANDOM_SAMPLES: usize = 6;

/// Names of the residuals reported by [`verify_bimodule_axioms`], in report order.
pub const AXIOMS: [&str; 11] = [
    "left_inner_symmetry",
    "right_inner_symmetry",
    "left_linearity",
    "right_linearity",
    "compatibility",
    "associativity",
    "left_positivity",
    "right_positivity",
    "norm_identity",
    "left_inner_range",
    "right_inner_range",
];

/// The `E`–`F` bimodule `Z = C(𝐁)` for commuting free global actions.
#[derive(Clone, Debug)]
pub struct ImprimitivityBimodule {
    alpha: AlgebraPartialAction,
    beta: AlgebraPartialAction,
    /// `H` acting on `Ind₀(𝐁, β)`; `E` is its crossed product.
    e_action: AlgebraPartialAction,
    /// `K` acting on `Ind₀(𝐁, α)`; `F` is its crossed product.
    f_action: AlgebraPartialAction,
    pub e: CrossedProduct,
    pub f: CrossedProduct,
}

/// Residual table and fullness ranks from [`verify_bimodule_axioms`].
#[derive(Clone, Debug, Serialize)]
pub struct BimoduleReport {
    pub dim_z: usize,
    pub dim_e: usize,
    pub dim_f: usize,
    pub exhaustive: bool,
    pub residuals: BTreeMap<String, f64>,
    pub left_fullness_rank: usize,
    pub right_fullness_rank: usize,
}

impl BimoduleReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.values().cloned().fold(0.0, f64::max)
    }

    pub fn full(&self) -> bool {
        self.left_fullness_rank == self.dim_e && self.right_fullness_rank == self.dim_f
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.full() && self.max_residual() <= tol
    }
}

/// Builds the bimodule for commuting, free, global bundle actions on the same bundle.
pub fn build_bimodule(alpha: &BundleAction, beta: &BundleAction, tol: f64) -> Result<ImprimitivityBimodule, Error> {
    for (name, a) in [("first", alpha), ("second", beta)] {
        if !a.base().is_global() {
            return Err(Error::InvalidParameter(format!("the {name} action is not global")));
        }
        a.base().ensure_free()?;
    }
    ensure_bundle_commute(alpha, beta, tol)?;
    let e_action = induced_algebra_action(beta, alpha, tol)?;
    let f_action = induced_algebra_action(alpha, beta, tol)?;
    let e = global_crossed_product(&e_action)?;
    let f = global_crossed_product(&f_action)?;
    Ok(ImprimitivityBimodule {
        alpha: AlgebraPartialAction::on_sections(alpha),
        beta: AlgebraPartialAction::on_sections(beta),
        e_action,
        f_action,
        e,
        f,
    })
}

fn sum(sections: impl IntoIterator<Item = Section>, zero: Section) -> Section {
    sections.into_iter().fold(zero, |acc, s| &acc + &s)
}

fn max_diff(a: &[Section], b: &[Section]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.max_abs_diff(y)).fold(0.0, f64::max)
}

impl ImprimitivityBimodule {
    fn zero(&self) -> Section {
        self.alpha.carrier().zero()
    }

    pub fn dim_z(&self) -> usize {
        self.alpha.carrier().dim()
    }

    /// `b·f = Σ_s b(s) α̃_s(f)`.
    pub fn left_action(&self, b: &[Section], f: &Section) -> Section {
        sum(b.iter().enumerate().map(|(s, bs)| bs * &self.alpha.apply(s, f)), self.zero())
    }

    /// `f·c = Σ_t β̃_t(f c(t⁻¹))`.
    pub fn right_action(&self, f: &Section, c: &[Section]) -> Section {
        let k = self.beta.group();
        sum(k.elements().map(|t| self.beta.apply(t, &(f * &c[k.inv(t)]))), self.zero())
    }

    /// `⟨f, g⟩_E(s) = Σ_t β̃_t(f α̃_s(g*))`.
    pub fn left_inner(&self, f: &Section, g: &Section) -> Vec<Section> {
        let gs = g.adjoint();
        self.alpha
            .group()
            .elements()
            .map(|s| {
                let inner = f * &self.alpha.apply(s, &gs);
                sum(self.beta.group().elements().map(|t| self.beta.apply(t, &inner)), self.zero())
            })
            .collect()
    }

    /// `⟨f, g⟩_F(t) = Σ_s α̃_s(f* β̃_t(g))`.
    pub fn right_inner(&self, f: &Section, g: &Section) -> Vec<Section> {
        let fs = f.adjoint();
        self.beta
            .group()
            .elements()
            .map(|t| {
                let inner = &fs * &self.beta.apply(t, g);
                sum(self.alpha.group().elements().map(|s| self.alpha.apply(s, &inner)), self.zero())
            })
            .collect()
    }

    /// Product in `E`.
    pub fn e_product(&self, a: &[Section], b: &[Section]) -> Vec<Section> {
        convolve(&self.e_action, a, b)
    }

    /// Product in `F`.
    pub fn f_product(&self, a: &[Section], b: &[Section]) -> Vec<Section> {
        convolve(&self.f_action, a, b)
    }

    pub fn e_star(&self, a: &[Section]) -> Vec<Section> {
        involution(&self.e_action, a)
    }

    pub fn f_star(&self, a: &[Section]) -> Vec<Section> {
        involution(&self.f_action, a)
    }

    /// `δ_s ⊗ u` over the group and a basis of the coefficient algebra.
    fn basis_of(&self, apa: &AlgebraPartialAction) -> Vec<Vec<Section>> {
        let g = apa.group();
        let coeffs = apa.basis();
        let mut out = Vec::new();
        for s in g.elements() {
            for u in &coeffs {
                let mut b = vec![self.zero(); g.order()];
                b[s] = u.clone();
                out.push(b);
            }
        }
        out
    }
}

/// Checks every bimodule axiom and the fullness of both inner products.
///
/// Full bases are used when `dim Z ≤ 16`. Above that, each trilinear identity
/// is checked on [`RANDOM_SAMPLES`] random triples and fullness is the rank of
/// `dim + 4` random inner products.
pub fn verify_bimodule_axioms(zb: &ImprimitivityBimodule, seed: u64) -> BimoduleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let carrier = zb.alpha.carrier();
    let exhaustive = carrier.dim() <= EXHAUSTIVE_LIMIT;
    let random_z = |rng: &mut ChaCha8Rng| Section {
        fibers: carrier.fiber_dims().iter().map(|&n| random_gaussian(n, n, rng)).collect(),
    };

    let (zs, es, fs): (Vec<Section>, Vec<Vec<Section>>, Vec<Vec<Section>>) = if exhaustive {
        (carrier.basis(), zb.basis_of(&zb.e_action), zb.basis_of(&zb.f_action))
    } else {
        (
            (0..RANDOM_SAMPLES).map(|_| random_z(&mut rng)).collect(),
            (0..RANDOM_SAMPLES).map(|_| random_element(&zb.e_action, &mut rng)).collect(),
            (0..RANDOM_SAMPLES).map(|_| random_element(&zb.f_action, &mut rng)).collect(),
        )
    };
    let pairs: Vec<(usize, usize)> = if exhaustive {
        (0..zs.len()).flat_map(|i| (0..zs.len()).map(move |j| (i, j))).collect()
    } else {
        (0..zs.len()).map(|i| (i, (i + 1) % zs.len())).collect()
    };
    let triples: Vec<(usize, usize, usize)> = if exhaustive {
        pairs.iter().flat_map(|&(i, j)| (0..zs.len()).map(move |k| (i, j, k))).collect()
    } else {
        (0..zs.len()).map(|i| (i, (i + 1) % zs.len(), (i + 2) % zs.len())).collect()
    };

    let mut r: BTreeMap<String, f64> = AXIOMS.iter().map(|k| (k.to_string(), 0.0)).collect();
    let mut bump = |key: &str, v: f64| {
        let e = r.get_mut(key).expect("known axiom");
        *e = e.max(v);
    };

    let mut left_inners: Vec<Vec<Section>> = Vec::new();
    let mut right_inners: Vec<Vec<Section>> = Vec::new();
    for &(i, j) in &pairs {
        let (f, g) = (&zs[i], &zs[j]);
        let le = zb.left_inner(f, g);
        let rf = zb.right_inner(f, g);
        bump("left_inner_symmetry", max_diff(&zb.e_star(&le), &zb.left_inner(g, f)));
        bump("right_inner_symmetry", max_diff(&zb.f_star(&rf), &zb.right_inner(g, f)));
        bump(
            "left_inner_range",
            le.iter().map(|s| zb.e_action.distance_to_algebra(s)).fold(0.0, f64::max),
        );
        bump(
            "right_inner_range",
            rf.iter().map(|s| zb.f_action.distance_to_algebra(s)).fold(0.0, f64::max),
        );
        let sample_b: Vec<&Vec<Section>> = if exhaustive { es.iter().collect() } else { vec![&es[i]] };
        for b in sample_b {
            let lhs = zb.left_inner(&zb.left_action(b, f), g);
            bump("left_linearity", max_diff(&lhs, &zb.e_product(b, &le)));
        }
        let sample_c: Vec<&Vec<Section>> = if exhaustive { fs.iter().collect() } else { vec![&fs[i]] };
        for c in sample_c {
            let lhs = zb.right_inner(f, &zb.right_action(g, c));
            bump("right_linearity", max_diff(&lhs, &zb.f_product(&rf, c)));
        }
        left_inners.push(le);
        right_inners.push(rf);
    }

    let pair_index = |i: usize, j: usize| pairs.iter().position(|&p| p == (i, j));
    for &(i, j, k) in &triples {
        let le = match pair_index(i, j) {
            Some(p) => left_inners[p].clone(),
            None => zb.left_inner(&zs[i], &zs[j]),
        };
        let rf = zb.right_inner(&zs[j], &zs[k]);
        let lhs = zb.left_action(&le, &zs[k]);
        let rhs = zb.right_action(&zs[i], &rf);
        bump("compatibility", lhs.max_abs_diff(&rhs));
    }

    let assoc_cases: Vec<(usize, usize, usize)> = if exhaustive {
        let (ne, nz, nf) = (es.len(), zs.len(), fs.len());
        (0..ne)
            .flat_map(|a| (0..nz).flat_map(move |z| (0..nf).map(move |c| (a, z, c))))
            .collect()
    } else {
        (0..zs.len()).map(|i| (i, i, i)).collect()
    };
    for (a, z, c) in assoc_cases {
        let lhs = zb.right_action(&zb.left_action(&es[a], &zs[z]), &fs[c]);
        let rhs = zb.left_action(&es[a], &zb.right_action(&zs[z], &fs[c]));
        bump("associativity", lhs.max_abs_diff(&rhs));
    }

    // Positivity and the norm identity on the sampled elements and random combinations.
    let mut probes: Vec<Section> = if exhaustive { zs.clone() } else { Vec::new() };
    probes.extend((0..RANDOM_SAMPLES).map(|_| random_z(&mut rng)));
    for f in &probes {
        let le = zb.e.represent(&zb.left_inner(f, f));
        let rf = zb.f.represent(&zb.right_inner(f, f));
        bump("left_positivity", (-min_eigenvalue(&le)).max(0.0).max(max_abs(&(&le - le.adjoint()))));
        bump("right_positivity", (-min_eigenvalue(&rf)).max(0.0).max(max_abs(&(&rf - rf.adjoint()))));
        let (ne, nf) = (op_norm(&le), op_norm(&rf));
        bump("norm_identity", (ne - nf).abs() / ne.max(nf).max(1.0));
    }

    // Fullness.
    let (left_fullness_rank, right_fullness_rank) = if exhaustive {
        let le: Vec<CMat> = left_inners.iter().map(|v| zb.e.represent(v)).collect();
        let rf: Vec<CMat> = right_inners.iter().map(|v| zb.f.represent(v)).collect();
        (span_rank(&le), span_rank(&rf))
    } else {
        let le: Vec<CMat> = (0..zb.e.dim() + 4)
            .map(|_| zb.e.represent(&zb.left_inner(&random_z(&mut rng), &random_z(&mut rng))))
            .collect();
        let rf: Vec<CMat> = (0..zb.f.dim() + 4)
            .map(|_| zb.f.represent(&zb.right_inner(&random_z(&mut rng), &random_z(&mut rng))))
            .collect();
        (span_rank(&le), span_rank(&rf))
    };

    BimoduleReport {
        dim_z: carrier.dim(),
        dim_e: zb.e.dim(),
        dim_f: zb.f.dim(),
        exhaustive,
        residuals: r,
        left_fullness_rank,
        right_fullness_rank,
    }
}

fn span_rank(mats: &[CMat]) -> usize {
    if mats.is_empty() {
        return 0;
    }
    let n = mats[0].nrows();
    gram_rank(&vec_columns(mats.iter(), n * n))
}

/// Hypotheses of the main theorem; the topological ones always hold for finite discrete data.
#[derive(Clone, Debug, Serialize)]
pub struct Hypotheses {
    pub alpha_free: bool,
    pub beta_free: bool,
    pub commuting: bool,
    pub closed_domains: &'static str,
    pub closed_graphs: &'static str,
    pub proper: &'static str,
}

/// Dimension and block data of one crossed product.
#[derive(Clone, Debug, Serialize)]
pub struct CrossedProductSummary {
    pub dim: usize,
    pub expected_dim: usize,
    pub ideal_dims: Vec<usize>,
    pub ambient_dim: usize,
    pub blocks: BlockStructure,
    /// `Σ n_i²` over the blocks.
    pub wedderburn_sum: usize,
    pub rounding_residual: f64,
}

impl CrossedProductSummary {
    pub fn of(cp: &CrossedProduct) -> Self {
        Self {
            dim: cp.dim(),
            expected_dim: cp.expected_dim(),
            ideal_dims: cp.ideal_dims.clone(),
            ambient_dim: cp.algebra.ambient_dim(),
            blocks: cp.blocks().clone(),
            wedderburn_sum: cp.blocks().dimension(),
            rounding_residual: cp.decomposition.rounding_residual,
        }
    }
}

/// Outcome of comparing the enveloping action of the descended action with the
/// action descended from the envelope.
#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeComparison {
    pub envelope_points: usize,
    pub target_points: usize,
    pub well_defined: bool,
    pub bijective: bool,
    pub equivariant: bool,
    pub fiber_residual: f64,
}

impl EnvelopeComparison {
    pub fn holds(&self, tol: f64) -> bool {
        self.well_defined && self.bijective && self.equivariant && self.fiber_residual <= tol
    }
}

/// Everything the symmetric imprimitivity pipeline computed.
#[derive(Clone, Debug, Serialize)]
pub struct ImprimitivityReport {
    pub hypotheses: Hypotheses,
    pub base_points: usize,
    pub enveloping_points: usize,
    pub envelope_round_trip_residual: f64,
    pub envelope_restriction_exact: bool,
    pub a_k: CrossedProductSummary,
    pub a_h: CrossedProductSummary,
    pub g_k: CrossedProductSummary,
    pub g_h: CrossedProductSummary,
    pub descended_envelope_k: EnvelopeComparison,
    pub descended_envelope_h: EnvelopeComparison,
    pub bimodule: BimoduleReport,
    pub morita_a_k_g_k: bool,
    pub morita_a_h_g_h: bool,
    pub morita_a_k_a_h: bool,
    pub verified: bool,
}

/// An error tagged with the pipeline stage where it happened.
#[derive(Debug)]
pub struct PipelineError {
    pub stage: &'static str,
    pub source: Error,
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {}: {}", self.stage, self.source)
    }
}

impl std::error::Error for PipelineError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

fn at<T>(stage: &'static str, r: Result<T, Error>) -> Result<T, PipelineError> {
    r.map_err(|source| PipelineError { stage, source })
}

/// Compares `enveloping(μ)` with `ν`, where `μ` is `β` descended to `𝐁/H` and
/// `ν` is `τ` descended to `𝐁ᵉ/H`.
///
/// The map sends `[t, Hx]` to `ν_t(H ι(x))`. Its fiber map at the class with
/// least pair `(t₀, Hx₀)` is `U^ν_{t₀} · T^σ(rep, ι x₀)* · ι_{x₀}`, and the
/// check is `Ad(Φ_{rq}) ∘ Ad(U^{μᵉ}_{r,q}) = Ad(U^ν_{r,Φq}) ∘ Ad(Φ_q)`.
fn compare_descended_envelope(
    mu: &BundleAction,
    mu_orbits: &OrbitBundle,
    nu: &BundleAction,
    sigma_orbits: &OrbitBundle,
    product_env: &EnvelopingBundle,
    tol: f64,
) -> Result<EnvelopeComparison, Error> {
    let mu_env = enveloping_bundle(mu)?;
    let k = mu.group();
    let m = mu.base().num_points();
    let classes = mu_env.action.base().num_points();
    let mut image: Vec<Option<usize>> = vec![None; classes];
    let mut well_defined = true;
    for t in k.elements() {
        for c in 0..m {
            let x = mu_orbits.orbits.representative[c];
            let d = sigma_orbits.orbits.class_of[product_env.base.embed[x]];
            let target = nu.base().apply(t, d).expect("global");
            let q = mu_env.base.class_of(t, c);
            match image[q] {
                None => image[q] = Some(target),
                Some(prev) if prev == target => {}
                Some(_) => well_defined = false,
            }
        }
    }
    let map: Vec<usize> = image.iter().map(|i| i.unwrap_or(usize::MAX)).collect();
    let mut hit = vec![false; nu.base().num_points()];
    for &y in &map {
        if y < hit.len() {
            hit[y] = true;
        }
    }
    let bijective = classes == nu.base().num_points() && hit.iter().all(|&h| h);
    let equivariant = well_defined
        && bijective
        && k.elements().all(|r| {
            (0..classes).all(|q| map[mu_env.action.base().apply(r, q).unwrap()] == nu.base().apply(r, map[q]).unwrap())
        });
    let mut fiber_residual = f64::INFINITY;
    if equivariant {
        let phi: Vec<CMat> = mu_env
            .base
            .representatives
            .iter()
            .map(|&(t0, c0)| {
                let x0 = mu_orbits.orbits.representative[c0];
                let z = product_env.base.embed[x0];
                let d = sigma_orbits.orbits.class_of[z];
                nu.unitary(t0, d).unwrap()
                    * sigma_orbits.from_representative(z).adjoint()
                    * product_env.embedding_unitary(x0)
            })
            .collect();
        let mut worst: f64 = 0.0;
        for r in k.elements() {
            for q in 0..classes {
                let rq = mu_env.action.base().apply(r, q).unwrap();
                let lhs = &phi[rq] * mu_env.action.unitary(r, q).unwrap();
                let rhs = nu.unitary(r, map[q]).unwrap() * &phi[q];
                worst = worst.max(ad_residual(&lhs, &rhs));
            }
        }
        fiber_residual = worst;
    }
    let _ = tol;
    Ok(EnvelopeComparison {
        envelope_points: classes,
        target_points: nu.base().num_points(),
        well_defined,
        bijective,
        equivariant,
        fiber_residual,
    })
}

/// Runs the symmetric imprimitivity pipeline for free commuting bundle actions.
///
/// 1. Check the hypotheses (freeness, bundle-level commutation).
/// 2. Globalize the product action and slice it into `σ` (of `H`) and `τ` (of `K`).
/// 3. Check that `σ` and `τ` are free.
/// 4. Partial crossed products `A_K = Ind₀(𝐁, α) ⋊ K` and `A_H = Ind₀(𝐁, β) ⋊ H`.
/// 5. Global crossed products `G_K = Ind₀(𝐁ᵉ, σ) ⋊ K` and `G_H = Ind₀(𝐁ᵉ, τ) ⋊ H`,
///    and the comparison of the descended actions with the envelopes.
/// 6. The bimodule between `G_H` and `G_K` on `C(𝐁ᵉ)` and its axioms.
/// 7. Morita verdicts by block counts.
pub fn symmetric_imprimitivity(
    alpha: &BundleAction,
    beta: &BundleAction,
    tol: f64,
    seed: u64,
) -> Result<ImprimitivityReport, PipelineError> {
    at("hypotheses", alpha.ensure_valid(tol))?;
    at("hypotheses", beta.ensure_valid(tol))?;
    at("hypotheses", alpha.base().ensure_free())?;
    at("hypotheses", beta.base().ensure_free())?;
    at("hypotheses", ensure_bundle_commute(alpha, beta, tol))?;
    let hypotheses = Hypotheses {
        alpha_free: true,
        beta_free: true,
        commuting: true,
        closed_domains: "automatic (finite discrete space)",
        closed_graphs: "automatic (finite discrete space)",
        proper: "automatic (finite group)",
    };

    let product = at("globalization", product_bundle_action(alpha, beta, tol))?;
    let env = at("globalization", enveloping_bundle(&product))?;
    at("globalization", env.check(&product, tol))?;
    let round_trip = env.round_trip_residual(&product);
    let exact = env.base.restriction_matches(product.base());
    let (sigma, tau) = at("globalization", env.action.product_slices(alpha.group(), beta.group()))?;

    at("freeness", sigma.base().ensure_free())?;
    at("freeness", tau.base().ensure_free())?;

    let mu_k = at("partial_crossed_products", induced_algebra_action(alpha, beta, tol))?;
    let mu_h = at("partial_crossed_products", induced_algebra_action(beta, alpha, tol))?;
    let a_k = at("partial_crossed_products", partial_crossed_product(&mu_k))?;
    let a_h = at("partial_crossed_products", partial_crossed_product(&mu_h))?;

    let bimodule = at("bimodule", build_bimodule(&sigma, &tau, tol))?;
    let (g_h, g_k) = (&bimodule.e, &bimodule.f);
    let alpha_orbits = at("global_crossed_products", OrbitBundle::new(alpha))?;
    let beta_orbits = at("global_crossed_products", OrbitBundle::new(beta))?;
    let sigma_orbits = at("global_crossed_products", OrbitBundle::new(&sigma))?;
    let tau_orbits = at("global_crossed_products", OrbitBundle::new(&tau))?;
    let cmp_k = at(
        "global_crossed_products",
        compare_descended_envelope(mu_k.source(), &alpha_orbits, g_k.action().source(), &sigma_orbits, &env, tol),
    )?;
    let cmp_h = at(
        "global_crossed_products",
        compare_descended_envelope(mu_h.source(), &beta_orbits, g_h.action().source(), &tau_orbits, &env, tol),
    )?;
    let bimodule_report = verify_bimodule_axioms(&bimodule, seed);

    let morita_a_k_g_k = morita_equivalent(a_k.blocks(), g_k.blocks());
    let morita_a_h_g_h = morita_equivalent(a_h.blocks(), g_h.blocks());
    let morita_a_k_a_h = morita_equivalent(a_k.blocks(), a_h.blocks());
    let verified = morita_a_k_g_k
        && morita_a_h_g_h
        && morita_a_k_a_h
        && cmp_k.holds(tol)
        && cmp_h.holds(tol)
        && bimodule_report.holds(tol)
        && exact
        && round_trip <= tol;
    Ok(ImprimitivityReport {
        hypotheses,
        base_points: alpha.base().num_points(),
        enveloping_points: env.action.base().num_points(),
        envelope_round_trip_residual: round_trip,
        envelope_restriction_exact: exact,
        a_k: CrossedProductSummary::of(&a_k),
        a_h: CrossedProductSummary::of(&a_h),
        g_k: CrossedProductSummary::of(g_k),
        g_h: CrossedProductSummary::of(g_h),
        descended_envelope_k: cmp_k,
        descended_envelope_h: cmp_h,
        bimodule: bimodule_report,
        morita_a_k_g_k,
        morita_a_h_g_h,
        morita_a_k_a_h,
        verified,
    })
}
