//! Partial actions on finite bundles of full matrix algebras.
//!
//! A bundle assigns the algebra `B_x = M_{n_x}(ℂ)` to every base point. Every
//! `*`-isomorphism between full matrix algebras is a unitary conjugation, so a
//! bundle action is stored as one unitary `U_{t,x} : ℂ^{n_x} → ℂ^{n_{α_t(x)}}`
//! per admissible pair, acting on fibers by `b ↦ U b U*`. Unitaries are only
//! meaningful up to a phase; all comparisons go through [`ad_residual`].

mod induced;
mod sections;

pub use induced::{induced_algebra_action, InducedAlgebra, IsoReport, OrbitBundle};
pub use sections::{AlgebraActionReport, AlgebraPartialAction, Section, SectionAlgebra};

use serde::Serialize;

use crate::error::Error;
use crate::group::FiniteGroup;
use crate::linalg::{ad_residual, identity, max_abs_diff, unitarity_residual, CMat};
use crate::partial_action::{
    commute, enveloping, product_action, ActionViolation, CommuteWitness, EnvelopingResult, PartialAction,
};

/// A finite bundle of full matrix algebras.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteBundle {
    pub fiber_dims: Vec<usize>,
}

impl FiniteBundle {
    pub fn new(fiber_dims: Vec<usize>) -> Result<Self, Error> {
        if fiber_dims.is_empty() {
            return Err(Error::InvalidBundle("the base is empty".into()));
        }
        if let Some(x) = fiber_dims.iter().position(|&n| n == 0) {
            return Err(Error::InvalidBundle(format!("fiber {x} has dimension 0")));
        }
        Ok(Self { fiber_dims })
    }

    pub fn section_algebra(&self) -> SectionAlgebra {
        SectionAlgebra::new(self.fiber_dims.clone())
    }
}

/// A partial action on a bundle, given by the base action and per-point unitaries.
#[derive(Clone, Debug)]
pub struct BundleAction {
    base: PartialAction,
    fiber_dims: Vec<usize>,
    /// `unitaries[t][x]` is present exactly for `x ∈ X_{t⁻¹}`.
    unitaries: Vec<Vec<Option<CMat>>>,
}

/// A single failure found by [`BundleAction::validate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum BundleViolation {
    Base(ActionViolation),
    /// `n_{α_t(x)} ≠ n_x`.
    FiberDimension { t: usize, point: String, source_dim: usize, target_dim: usize },
    /// A unitary is present outside `X_{t⁻¹}` or missing inside it.
    UnitaryPresence { t: usize, point: String, present: bool },
    UnitaryShape { t: usize, point: String, rows: usize, cols: usize },
    Unitarity { t: usize, point: String, residual: f64 },
    /// `Ad(U_{e,x})` is not the identity map.
    IdentityNotTrivial { point: String, residual: f64 },
    /// `Ad(U_{st,x}) ≠ Ad(U_{s,α_t(x)}) ∘ Ad(U_{t,x})`.
    Composition { s: usize, t: usize, point: String, residual: f64 },
}

impl std::fmt::Display for BundleViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BundleViolation::Base(v) => write!(f, "{v}"),
            BundleViolation::FiberDimension { t, point, source_dim, target_dim } => {
                write!(f, "fiber dimension jumps from {source_dim} to {target_dim} under t={t} at {point}")
            }
            BundleViolation::UnitaryPresence { t, point, present: true } => {
                write!(f, "unitary given for (t={t}, x={point}) outside the domain")
            }
            BundleViolation::UnitaryPresence { t, point, present: false } => {
                write!(f, "unitary missing for (t={t}, x={point})")
            }
            BundleViolation::UnitaryShape { t, point, rows, cols } => {
                write!(f, "unitary for (t={t}, x={point}) has shape {rows}x{cols}")
            }
            BundleViolation::Unitarity { t, point, residual } => {
                write!(f, "matrix for (t={t}, x={point}) is not unitary (residual {residual:.3e})")
            }
            BundleViolation::IdentityNotTrivial { point, residual } => {
                write!(f, "the identity acts non-trivially on the fiber at {point} (residual {residual:.3e})")
            }
            BundleViolation::Composition { s, t, point, residual } => {
                write!(f, "fiber maps do not compose for s={s}, t={t} at {point} (residual {residual:.3e})")
            }
        }
    }
}

/// Result of [`BundleAction::validate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BundleReport {
    pub violations: Vec<BundleViolation>,
    pub max_unitarity_residual: f64,
    pub max_composition_residual: f64,
    pub is_global: bool,
}

impl BundleReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Failure of bundle-level commutation.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "level", rename_all = "snake_case")]
pub enum BundleCommuteWitness {
    Base(CommuteWitness),
    /// `Ad(U^α_{s,β_t x} U^β_{t,x}) ≠ Ad(U^β_{t,α_s x} U^α_{s,x})`.
    Fibers { s: usize, t: usize, point: String, residual: f64 },
}

impl std::fmt::Display for BundleCommuteWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BundleCommuteWitness::Base(w) => write!(f, "{w}"),
            BundleCommuteWitness::Fibers { s, t, point, residual } => {
                write!(f, "fiber maps of s={s} and t={t} do not commute at {point} (residual {residual:.3e})")
            }
        }
    }
}

impl BundleAction {
    /// Assembles a bundle action, checking shapes only.
    pub fn new(
        base: PartialAction,
        fiber_dims: Vec<usize>,
        unitaries: Vec<Vec<Option<CMat>>>,
    ) -> Result<Self, Error> {
        FiniteBundle::new(fiber_dims.clone())?;
        if fiber_dims.len() != base.num_points() {
            return Err(Error::InvalidBundle(format!(
                "{} fiber dimensions for {} points",
                fiber_dims.len(),
                base.num_points()
            )));
        }
        if unitaries.len() != base.group().order() || unitaries.iter().any(|row| row.len() != base.num_points()) {
            return Err(Error::InvalidBundle("unitary table has the wrong shape".into()));
        }
        Ok(Self { base, fiber_dims, unitaries })
    }

    /// Identity unitaries wherever the base action is defined.
    pub fn with_identity_unitaries(base: PartialAction, fiber_dims: Vec<usize>) -> Result<Self, Error> {
        let unitaries = base
            .group()
            .elements()
            .map(|t| {
                (0..base.num_points())
                    .map(|x| base.apply(t, x).map(|_| identity(fiber_dims.get(x).copied().unwrap_or(1))))
                    .collect()
            })
            .collect();
        Self::new(base, fiber_dims, unitaries)
    }

    /// The line bundle `X × ℂ` with trivial fiber action.
    pub fn line_bundle(base: PartialAction) -> Self {
        let n = base.num_points();
        Self::with_identity_unitaries(base, vec![1; n]).expect("line bundle shapes are consistent")
    }

    pub fn base(&self) -> &PartialAction {
        &self.base
    }

    pub fn group(&self) -> &FiniteGroup {
        self.base.group()
    }

    pub fn fiber_dims(&self) -> &[usize] {
        &self.fiber_dims
    }

    pub fn fiber_dim(&self, x: usize) -> usize {
        self.fiber_dims[x]
    }

    pub fn bundle(&self) -> FiniteBundle {
        FiniteBundle { fiber_dims: self.fiber_dims.clone() }
    }

    pub fn section_algebra(&self) -> SectionAlgebra {
        SectionAlgebra::new(self.fiber_dims.clone())
    }

    /// `U_{t,x}` for `x ∈ X_{t⁻¹}`.
    pub fn unitary(&self, t: usize, x: usize) -> Option<&CMat> {
        self.unitaries[t][x].as_ref()
    }

    pub fn unitaries(&self) -> &[Vec<Option<CMat>>] {
        &self.unitaries
    }

    /// Errors with the first violation at tolerance `tol`.
    pub fn ensure_valid(&self, tol: f64) -> Result<(), Error> {
        match self.validate(tol).violations.first() {
            Some(v) => Err(Error::InvalidBundle(v.to_string())),
            None => Ok(()),
        }
    }

    /// Checks the base axioms, fiber-dimension compatibility, unitarity,
    /// Ad-triviality at the identity and Ad-composition.
    pub fn validate(&self, tol: f64) -> BundleReport {
        let base_report = self.base.validate();
        let mut violations: Vec<BundleViolation> =
            base_report.violations.into_iter().map(BundleViolation::Base).collect();
        let mut max_unitarity: f64 = 0.0;
        let mut max_composition: f64 = 0.0;
        let g = self.base.group();
        let name = |x: usize| self.base.point_name(x).to_string();
        let structural_ok = violations.is_empty();

        for t in g.elements() {
            for x in 0..self.base.num_points() {
                let image = self.base.apply(t, x);
                let u = self.unitaries[t][x].as_ref();
                if image.is_some() != u.is_some() {
                    violations.push(BundleViolation::UnitaryPresence { t, point: name(x), present: u.is_some() });
                    continue;
                }
                let (Some(y), Some(u)) = (image, u) else { continue };
                if self.fiber_dims[y] != self.fiber_dims[x] {
                    violations.push(BundleViolation::FiberDimension {
                        t,
                        point: name(x),
                        source_dim: self.fiber_dims[x],
                        target_dim: self.fiber_dims[y],
                    });
                    continue;
                }
                if u.shape() != (self.fiber_dims[x], self.fiber_dims[x]) {
                    violations.push(BundleViolation::UnitaryShape {
                        t,
                        point: name(x),
                        rows: u.nrows(),
                        cols: u.ncols(),
                    });
                    continue;
                }
                let r = unitarity_residual(u);
                max_unitarity = max_unitarity.max(r);
                if r > tol {
                    violations.push(BundleViolation::Unitarity { t, point: name(x), residual: r });
                }
            }
        }
        if !violations.is_empty() || !structural_ok {
            return BundleReport {
                violations,
                max_unitarity_residual: max_unitarity,
                max_composition_residual: max_composition,
                is_global: self.base.is_global(),
            };
        }

        let e = g.identity();
        for x in 0..self.base.num_points() {
            let u = self.unitaries[e][x].as_ref().expect("identity is defined everywhere");
            let r = ad_residual(u, &identity(self.fiber_dims[x]));
            max_composition = max_composition.max(r);
            if r > tol {
                violations.push(BundleViolation::IdentityNotTrivial { point: name(x), residual: r });
            }
        }
        for s in g.elements() {
            for t in g.elements() {
                let st = g.mul(s, t);
                for x in 0..self.base.num_points() {
                    let Some(y) = self.base.apply(t, x) else { continue };
                    let Some(us) = self.unitaries[s][y].as_ref() else { continue };
                    let ut = self.unitaries[t][x].as_ref().expect("checked presence");
                    let ust = self.unitaries[st][x].as_ref().expect("composition axiom holds");
                    let r = ad_residual(ust, &(us * ut));
                    max_composition = max_composition.max(r);
                    if r > tol {
                        violations.push(BundleViolation::Composition { s, t, point: name(x), residual: r });
                    }
                }
            }
        }
        BundleReport {
            violations,
            max_unitarity_residual: max_unitarity,
            max_composition_residual: max_composition,
            is_global: self.base.is_global(),
        }
    }

    /// Restriction to a subset of base points; the unitaries are kept.
    pub fn restrict(&self, subset: &[usize]) -> Result<BundleAction, Error> {
        let base = self.base.restrict(subset)?;
        let mut order: Vec<usize> = subset.to_vec();
        order.sort_unstable();
        order.dedup();
        let fiber_dims = order.iter().map(|&x| self.fiber_dims[x]).collect();
        let unitaries = self
            .group()
            .elements()
            .map(|t| {
                order
                    .iter()
                    .enumerate()
                    .map(|(local, &x)| base.apply(t, local).and(self.unitaries[t][x].clone()))
                    .collect()
            })
            .collect();
        BundleAction::new(base, fiber_dims, unitaries)
    }

    /// The action of `group` in which `t` acts as `image[t]` does here.
    pub fn along_homomorphism(&self, group: FiniteGroup, image: &[usize]) -> Result<BundleAction, Error> {
        let base = self.base.along_homomorphism(group, image)?;
        let unitaries = image.iter().map(|&t| self.unitaries[t].clone()).collect();
        BundleAction::new(base, self.fiber_dims.clone(), unitaries)
    }

    /// The slices `s ↦ (s, e)` and `t ↦ (e, t)` of an action of `H × K`.
    pub fn product_slices(&self, h: &FiniteGroup, k: &FiniteGroup) -> Result<(BundleAction, BundleAction), Error> {
        if h.order() * k.order() != self.group().order() {
            return Err(Error::InvalidParameter("factor orders do not match the product".into()));
        }
        let kk = k.order();
        let left: Vec<usize> = h.elements().map(|s| s * kk + k.identity()).collect();
        let right: Vec<usize> = k.elements().map(|t| h.identity() * kk + t).collect();
        Ok((self.along_homomorphism(h.clone(), &left)?, self.along_homomorphism(k.clone(), &right)?))
    }
}

/// The trivial bundle `M_n × X` with `U_{t,x} = γ_t`.
///
/// `gamma` must be a unitary representation up to phase of the whole group.
pub fn trivial_bundle(base: PartialAction, n: usize, gamma: &[CMat], tol: f64) -> Result<BundleAction, Error> {
    let g = base.group().clone();
    if n == 0 {
        return Err(Error::InvalidParameter("fiber dimension must be positive".into()));
    }
    if gamma.len() != g.order() || gamma.iter().any(|u| u.shape() != (n, n)) {
        return Err(Error::InvalidBundle(format!("expected {} unitaries of size {n}", g.order())));
    }
    for (t, u) in gamma.iter().enumerate() {
        let r = unitarity_residual(u);
        if r > tol {
            return Err(Error::InvalidBundle(format!("gamma_{t} is not unitary (residual {r:.3e})")));
        }
    }
    for s in g.elements() {
        for t in g.elements() {
            let r = ad_residual(&gamma[g.mul(s, t)], &(&gamma[s] * &gamma[t]));
            if r > tol {
                return Err(Error::InvalidBundle(format!(
                    "gamma is not a homomorphism up to phase at ({s}, {t}) (residual {r:.3e})"
                )));
            }
        }
    }
    let np = base.num_points();
    let unitaries = g
        .elements()
        .map(|t| (0..np).map(|x| base.apply(t, x).map(|_| gamma[t].clone())).collect())
        .collect();
    BundleAction::new(base, vec![n; np], unitaries)
}

/// Bundle-level commutation: the base actions commute and, wherever both
/// composites are defined, `Ad(U^α_{s,β_t x} U^β_{t,x}) = Ad(U^β_{t,α_s x} U^α_{s,x})`.
pub fn bundle_commute(
    alpha: &BundleAction,
    beta: &BundleAction,
    tol: f64,
) -> Result<Option<BundleCommuteWitness>, Error> {
    if alpha.fiber_dims != beta.fiber_dims {
        return Err(Error::PointMismatch);
    }
    let c = commute(&alpha.base, &beta.base)?;
    if let Some(w) = c.witness {
        return Ok(Some(BundleCommuteWitness::Base(w)));
    }
    for s in alpha.group().elements() {
        for t in beta.group().elements() {
            for x in 0..alpha.base.num_points() {
                let Some(bx) = beta.base.apply(t, x) else { continue };
                let Some(u_ab) = alpha.unitary(s, bx).map(|ua| ua * beta.unitary(t, x).unwrap()) else { continue };
                let ax = alpha.base.apply(s, x).ok_or_else(|| {
                    Error::Assertion("commuting base actions disagree on domains".into())
                })?;
                let u_ba = beta
                    .unitary(t, ax)
                    .ok_or_else(|| Error::Assertion("commuting base actions disagree on domains".into()))?
                    * alpha.unitary(s, x).unwrap();
                let r = ad_residual(&u_ab, &u_ba);
                if r > tol {
                    return Ok(Some(BundleCommuteWitness::Fibers {
                        s,
                        t,
                        point: alpha.base.point_name(x).to_string(),
                        residual: r,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// Errors unless `alpha` and `beta` commute at bundle level.
pub fn ensure_bundle_commute(alpha: &BundleAction, beta: &BundleAction, tol: f64) -> Result<(), Error> {
    match bundle_commute(alpha, beta, tol)? {
        Some(w) => Err(Error::NotCommuting(w.to_string())),
        None => Ok(()),
    }
}

/// The action of `H × K` with `U_{(s,t),x} = U^α_{s,β_t(x)} U^β_{t,x}`.
pub fn product_bundle_action(alpha: &BundleAction, beta: &BundleAction, tol: f64) -> Result<BundleAction, Error> {
    ensure_bundle_commute(alpha, beta, tol)?;
    let base = product_action(&alpha.base, &beta.base)?;
    let kk = beta.group().order();
    let unitaries = base
        .group()
        .elements()
        .map(|g| {
            let (s, t) = (g / kk, g % kk);
            (0..base.num_points())
                .map(|x| {
                    let y = beta.base.apply(t, x)?;
                    Some(alpha.unitary(s, y)? * beta.unitary(t, x)?)
                })
                .collect()
        })
        .collect();
    let product = BundleAction::new(base, alpha.fiber_dims.clone(), unitaries)?;
    product.ensure_valid(tol).map_err(|e| Error::Assertion(format!("product bundle action: {e}")))?;
    Ok(product)
}

/// The enveloping bundle action and the data of the embedding.
#[derive(Clone, Debug)]
pub struct EnvelopingBundle {
    /// Global action on the enveloping bundle.
    pub action: BundleAction,
    /// Set-level globalization of the base.
    pub base: EnvelopingResult,
    /// `C_{(t,x)} : B_x → Bᵉ_{[t,x]}`, stored at `t·|X| + x`.
    charts: Vec<CMat>,
}

/// Globalizes a bundle action.
///
/// The fiber over the class of `(t, x)` is `B_{x₀}` where `(t₀, x₀)` is the
/// least pair of the class. The chart `C_{(t,x)} = U_{t₀⁻¹t, x}` identifies
/// `B_x` with that fiber, the embedding at `x` is `Ad(C_{(e,x)})`, and the
/// global unitaries are `Uᵉ_{r,[t₀,x₀]} = C_{(r t₀, x₀)}`.
pub fn enveloping_bundle(ba: &BundleAction) -> Result<EnvelopingBundle, Error> {
    let env = enveloping(&ba.base);
    let g = ba.group();
    let n = ba.base.num_points();
    let mut charts = Vec::with_capacity(g.order() * n);
    for t in g.elements() {
        for x in 0..n {
            let (t0, _) = env.representatives[env.class_of(t, x)];
            let u = ba
                .unitary(g.mul(g.inv(t0), t), x)
                .ok_or_else(|| Error::Assertion(format!("no chart for the pair ({t}, {x})")))?;
            charts.push(u.clone());
        }
    }
    let fiber_dims: Vec<usize> = env.representatives.iter().map(|&(_, x0)| ba.fiber_dims[x0]).collect();
    let unitaries = g
        .elements()
        .map(|r| {
            env.representatives
                .iter()
                .map(|&(t0, x0)| Some(charts[g.mul(r, t0) * n + x0].clone()))
                .collect()
        })
        .collect();
    let action = BundleAction::new(env.env_action.clone(), fiber_dims, unitaries)?;
    Ok(EnvelopingBundle { action, base: env, charts })
}

impl EnvelopingBundle {
    /// `C_{(t,x)}`.
    pub fn chart(&self, t: usize, x: usize) -> &CMat {
        &self.charts[t * self.base.embed.len() + x]
    }

    /// The unitary of the embedding `B_x → Bᵉ_{ι(x)}`.
    pub fn embedding_unitary(&self, x: usize) -> &CMat {
        self.chart(self.action.group().identity(), x)
    }

    /// Maximal Ad-residual of `Ad(Uᵉ_{t,ι x}) ∘ ι_x = ι_{α_t x} ∘ Ad(U_{t,x})` over the input's graph.
    pub fn round_trip_residual(&self, ba: &BundleAction) -> f64 {
        let mut worst: f64 = 0.0;
        for t in ba.group().elements() {
            for x in 0..ba.base.num_points() {
                let Some(y) = ba.base.apply(t, x) else { continue };
                let ue = self.action.unitary(t, self.base.embed[x]).expect("global");
                let lhs = ue * self.embedding_unitary(x);
                let rhs = self.embedding_unitary(y) * ba.unitary(t, x).unwrap();
                worst = worst.max(ad_residual(&lhs, &rhs));
            }
        }
        worst
    }

    /// Checks the envelope: the base properties, validity and globality of the
    /// bundle action, well-defined charts and the embedding round trip.
    pub fn check(&self, ba: &BundleAction, tol: f64) -> Result<(), Error> {
        self.base.check(&ba.base)?;
        if !self.base.restriction_matches(&ba.base) {
            return Err(Error::Assertion("restriction of the envelope differs from the input".into()));
        }
        self.action.ensure_valid(tol).map_err(|e| Error::Assertion(format!("enveloping bundle: {e}")))?;
        for x in 0..ba.base.num_points() {
            if self.action.fiber_dim(self.base.embed[x]) != ba.fiber_dim(x) {
                return Err(Error::Assertion(format!("fiber dimension changes at {}", ba.base.point_name(x))));
            }
        }
        let r = self.round_trip_residual(ba);
        if r > tol {
            return Err(Error::Assertion(format!("embedding does not intertwine fiber maps (residual {r:.3e})")));
        }
        Ok(())
    }
}

/// Largest Ad-residual between two unitary tables of the same shape; infinite if the domains differ.
pub fn max_family_ad_residual(a: &[Vec<Option<CMat>>], b: &[Vec<Option<CMat>>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        for (ua, ub) in ra.iter().zip(rb) {
            match (ua, ub) {
                (Some(ua), Some(ub)) => worst = worst.max(ad_residual(ua, ub)),
                (None, None) => {}
                _ => return f64::INFINITY,
            }
        }
    }
    worst
}

/// Entrywise distance of two sections' fibers, for tests and reports.
pub(crate) fn fiberwise_diff(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| max_abs_diff(x, y)).fold(0.0, f64::max)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::linalg::{c64, random_phase, random_unitary, ONE, ZERO};
    use crate::partial_action::tests::{e1, v4_pair, z4_translation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub fn flip() -> CMat {
        CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    /// E2: coordinate translations on Z_2 × Z_2 with the line bundle.
    pub fn e2() -> (BundleAction, BundleAction) {
        let (h, k) = v4_pair();
        (BundleAction::line_bundle(h), BundleAction::line_bundle(k))
    }

    /// E3: the E2 pair restricted to {(0,0), (1,0)}.
    pub fn e3() -> (BundleAction, BundleAction) {
        let (h, k) = e2();
        (h.restrict(&[0, 2]).unwrap(), k.restrict(&[0, 2]).unwrap())
    }

    #[test]
    fn trivial_bundles() {
        let z2 = FiniteGroup::cyclic(2).unwrap();
        let base = PartialAction::global(z2.clone(), vec!["p".into()], |_, x| x).unwrap();
        let ba = trivial_bundle(base.clone(), 2, &[identity(2), flip()], 1e-9).unwrap();
        assert!(ba.validate(1e-9).is_valid());

        let bad = CMat::from_row_slice(2, 2, &[c64(2.0, 0.0), ZERO, ZERO, ONE]);
        assert!(trivial_bundle(base, 2, &[identity(2), bad], 1e-9).is_err());

        let line = trivial_bundle(e1(), 1, &vec![identity(1); 4], 1e-9).unwrap();
        assert_eq!(line.fiber_dims(), &[1, 1, 1]);
        assert!(line.validate(1e-9).is_valid());
    }

    #[test]
    fn phases_do_not_matter() {
        let (h, _) = e2();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let unitaries = h
            .unitaries()
            .iter()
            .map(|row| row.iter().map(|u| u.as_ref().map(|u| u * random_phase(&mut rng))).collect())
            .collect();
        let twisted = BundleAction::new(h.base().clone(), h.fiber_dims().to_vec(), unitaries).unwrap();
        assert!(twisted.validate(1e-9).is_valid());
    }

    #[test]
    fn defects_are_reported() {
        let (h, _) = e2();
        let mut unitaries = h.unitaries().to_vec();
        unitaries[1][0] = Some(CMat::from_element(1, 1, c64(2.0, 0.0)));
        let bad = BundleAction::new(h.base().clone(), h.fiber_dims().to_vec(), unitaries).unwrap();
        let report = bad.validate(1e-9);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, BundleViolation::Unitarity { t: 1, .. })));

        // Mismatched fiber dimensions along an orbit.
        let dims = BundleAction::with_identity_unitaries(h.base().clone(), vec![1, 1, 2, 1]).unwrap();
        assert!(dims
            .validate(1e-9)
            .violations
            .iter()
            .any(|v| matches!(v, BundleViolation::FiberDimension { .. })));
    }

    #[test]
    fn random_twisted_global_action_is_valid() {
        // U_{t,x} = W_{t+x} W_x* composes exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w: Vec<CMat> = (0..4).map(|_| random_unitary(2, &mut rng)).collect();
        let g = z4_translation();
        let unitaries = (0..4)
            .map(|t| (0..4).map(|x| Some(&w[(t + x) % 4] * w[x].adjoint())).collect())
            .collect();
        let ba = BundleAction::new(g, vec![2; 4], unitaries).unwrap();
        let report = ba.validate(1e-9);
        assert!(report.is_valid(), "{:?}", report.violations);
        assert!(report.max_composition_residual < 1e-12);

        let restricted = ba.restrict(&[0, 1, 2]).unwrap();
        assert!(restricted.validate(1e-9).is_valid());
        let env = enveloping_bundle(&restricted).unwrap();
        env.check(&restricted, 1e-10).unwrap();
        assert_eq!(env.action.fiber_dims(), &[2, 2, 2, 2]);
    }

    #[test]
    fn e1_envelope_is_z4_line_bundle() {
        let ba = BundleAction::line_bundle(e1());
        let env = enveloping_bundle(&ba).unwrap();
        env.check(&ba, 1e-10).unwrap();
        assert_eq!(env.action.base().num_points(), 4);
        assert!(env.action.base().is_global());
        assert_eq!(env.action.fiber_dims(), &[1, 1, 1, 1]);
    }

    #[test]
    fn global_input_envelope_is_itself() {
        let (h, _) = e2();
        let env = enveloping_bundle(&h).unwrap();
        env.check(&h, 1e-10).unwrap();
        assert_eq!(env.action.base().num_points(), 4);
        assert!(h.base().is_isomorphism(env.action.base(), &env.base.embed));
    }

    #[test]
    fn products_and_slices() {
        let (h, k) = e2();
        let p = product_bundle_action(&h, &k, 1e-9).unwrap();
        assert!(p.base().is_global());
        let (a, b) = p.product_slices(h.group(), k.group()).unwrap();
        assert_eq!(a.base(), h.base());
        assert_eq!(b.base(), k.base());

        let (a3, b3) = e3();
        let p3 = product_bundle_action(&a3, &b3, 1e-9).unwrap();
        assert!(p3.base().domain(3).is_empty());
        let (s, _) = p3.product_slices(a3.group(), b3.group()).unwrap();
        assert_eq!(max_family_ad_residual(s.unitaries(), a3.unitaries()), 0.0);
    }

    #[test]
    fn fiber_level_commutation_failure() {
        // Base actions commute but the fiber unitaries anticommute.
        let z2 = FiniteGroup::cyclic(2).unwrap();
        let base = PartialAction::global(z2, vec!["p".into()], |_, x| x).unwrap();
        let sz = CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
        let a = trivial_bundle(base.clone(), 2, &[identity(2), flip()], 1e-9).unwrap();
        let b = trivial_bundle(base.clone(), 2, &[identity(2), sz.clone()], 1e-9).unwrap();
        // σ_x σ_z = -σ_z σ_x, so Ad agrees.
        assert!(bundle_commute(&a, &b, 1e-9).unwrap().is_none());
        let hadamard = CMat::from_row_slice(2, 2, &[ONE, ONE, ONE, -ONE]) * c64(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let c = trivial_bundle(base, 2, &[identity(2), hadamard], 1e-9).unwrap();
        assert!(matches!(
            bundle_commute(&a, &c, 1e-9).unwrap(),
            Some(BundleCommuteWitness::Fibers { .. })
        ));
    }
}
