//! Section algebras `C₀(𝐁)` and the partial actions induced on them.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::Serialize;

use super::{BundleAction, InducedAlgebra};
use crate::group::FiniteGroup;
use crate::linalg::{ad, matrix_unit, max_abs, op_norm, CMat, CVec};

/// A section of a finite bundle: one matrix per base point.
#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub fibers: Vec<CMat>,
}

impl Section {
    pub fn adjoint(&self) -> Section {
        Section { fibers: self.fibers.iter().map(|m| m.adjoint()).collect() }
    }

    pub fn scale(&self, z: Complex64) -> Section {
        Section { fibers: self.fibers.iter().map(|m| m * z).collect() }
    }

    /// `max_x ‖f(x)‖`.
    pub fn norm(&self) -> f64 {
        self.fibers.iter().map(op_norm).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.fibers.iter().map(max_abs).fold(0.0, f64::max)
    }

    /// Largest entrywise difference, infinite on a shape mismatch.
    pub fn max_abs_diff(&self, other: &Section) -> f64 {
        if self.fibers.len() != other.fibers.len() {
            return f64::INFINITY;
        }
        super::fiberwise_diff(&self.fibers, &other.fibers)
    }

    /// Points where the section is nonzero (above `tol`).
    pub fn support(&self, tol: f64) -> Vec<usize> {
        (0..self.fibers.len()).filter(|&x| max_abs(&self.fibers[x]) > tol).collect()
    }

    /// `Σ_x tr(f(x)* g(x))`.
    pub fn dot(&self, other: &Section) -> Complex64 {
        self.fibers.iter().zip(&other.fibers).map(|(a, b)| crate::linalg::frobenius_dot(a, b)).sum()
    }

    fn zip_with(&self, other: &Section, op: impl Fn(&CMat, &CMat) -> CMat) -> Section {
        assert_eq!(self.fibers.len(), other.fibers.len(), "sections over different bases");
        Section { fibers: self.fibers.iter().zip(&other.fibers).map(|(a, b)| op(a, b)).collect() }
    }
}

impl Add for &Section {
    type Output = Section;
    fn add(self, rhs: &Section) -> Section {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Section {
    type Output = Section;
    fn sub(self, rhs: &Section) -> Section {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &Section {
    type Output = Section;
    fn mul(self, rhs: &Section) -> Section {
        self.zip_with(rhs, |a, b| a * b)
    }
}

/// `C₀(𝐁)` for a finite bundle: all sections, with pointwise operations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectionAlgebra {
    dims: Vec<usize>,
    offsets: Vec<usize>,
}

impl SectionAlgebra {
    pub fn new(dims: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(dims.len() + 1);
        let mut acc = 0;
        for &n in &dims {
            offsets.push(acc);
            acc += n * n;
        }
        offsets.push(acc);
        Self { dims, offsets }
    }

    pub fn fiber_dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_points(&self) -> usize {
        self.dims.len()
    }

    /// `Σ_x n_x²`.
    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn zero(&self) -> Section {
        Section { fibers: self.dims.iter().map(|&n| CMat::zeros(n, n)).collect() }
    }

    pub fn unit(&self) -> Section {
        self.indicator(&(0..self.dims.len()).collect::<Vec<_>>())
    }

    /// The central projection `1_S`.
    pub fn indicator(&self, support: &[usize]) -> Section {
        let mut f = self.zero();
        for &x in support {
            f.fibers[x] = CMat::identity(self.dims[x], self.dims[x]);
        }
        f
    }

    /// The section equal to `E_{ij}` at `x` and zero elsewhere.
    pub fn matrix_unit(&self, x: usize, i: usize, j: usize) -> Section {
        let mut f = self.zero();
        f.fibers[x] = matrix_unit(self.dims[x], i, j);
        f
    }

    /// Matrix units supported on `points`, ordered by point then row then column.
    pub fn matrix_units_on(&self, points: &[usize]) -> Vec<Section> {
        let mut out = Vec::new();
        for &x in points {
            let n = self.dims[x];
            for i in 0..n {
                for j in 0..n {
                    out.push(self.matrix_unit(x, i, j));
                }
            }
        }
        out
    }

    /// The matrix-unit basis.
    pub fn basis(&self) -> Vec<Section> {
        self.matrix_units_on(&(0..self.dims.len()).collect::<Vec<_>>())
    }

    /// Coordinates in the matrix-unit basis (column-major within each fiber).
    pub fn coords(&self, f: &Section) -> CVec {
        let mut v = CVec::zeros(self.dim());
        for (x, m) in f.fibers.iter().enumerate() {
            for (k, z) in m.iter().enumerate() {
                v[self.offsets[x] + k] = *z;
            }
        }
        v
    }

    pub fn from_coords(&self, v: &CVec) -> Section {
        Section {
            fibers: self
                .dims
                .iter()
                .enumerate()
                .map(|(x, &n)| CMat::from_iterator(n, n, v.rows(self.offsets[x], n * n).iter().cloned()))
                .collect(),
        }
    }

    /// Offset of the fiber at `x` in coordinate space.
    pub fn offset(&self, x: usize) -> usize {
        self.offsets[x]
    }

    /// `f·1_S`.
    pub fn cut(&self, f: &Section, support: &[usize]) -> Section {
        let mut g = self.zero();
        for &x in support {
            g.fibers[x] = f.fibers[x].clone();
        }
        g
    }
}

/// A partial action on a section algebra by `*`-isomorphisms between ideals.
///
/// Two shapes occur: the action `α̃` on `C₀(𝐁)` induced by a bundle action,
/// and the action on an induced algebra `Ind₀(𝐁, α)` obtained by pulling the
/// orbit-bundle action back through the identification `Ind₀(𝐁, α) ≅ C₀(𝐁/H)`.
/// In both cases `source` is the bundle action whose induced action realizes
/// this one, so crossed products can be built from it directly.
#[derive(Clone, Debug)]
pub struct AlgebraPartialAction {
    source: BundleAction,
    induced: Option<InducedAlgebra>,
}

/// A failed algebra-level axiom.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum AlgebraActionViolation {
    Identity { residual: f64 },
    /// `α̃_t` maps outside the target ideal or the ideals have different dimensions.
    Ideal { t: usize, residual: f64 },
    Inverse { t: usize, residual: f64 },
    Multiplicative { t: usize, residual: f64 },
    Involution { t: usize, residual: f64 },
    Composition { s: usize, t: usize, residual: f64 },
}

/// Result of [`AlgebraPartialAction::validate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlgebraActionReport {
    pub violations: Vec<AlgebraActionViolation>,
    pub max_residual: f64,
}

impl AlgebraActionReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl AlgebraPartialAction {
    /// `α̃_t(f)(x) = Ad(U_{t,t⁻¹x}) f(t⁻¹x)` for `x ∈ X_t`, zero elsewhere.
    pub fn on_sections(ba: &BundleAction) -> Self {
        Self { source: ba.clone(), induced: None }
    }

    pub(crate) fn on_induced(source: BundleAction, induced: InducedAlgebra) -> Self {
        Self { source, induced: Some(induced) }
    }

    pub fn group(&self) -> &FiniteGroup {
        self.source.group()
    }

    /// The bundle action realizing this action (on `𝐁` or on `𝐁/H`).
    pub fn source(&self) -> &BundleAction {
        &self.source
    }

    /// Present when the algebra is an induced algebra.
    pub fn induced(&self) -> Option<&InducedAlgebra> {
        self.induced.as_ref()
    }

    /// The section algebra containing the acted-upon algebra.
    pub fn carrier(&self) -> SectionAlgebra {
        match &self.induced {
            Some(ia) => ia.ambient().clone(),
            None => self.source.section_algebra(),
        }
    }

    pub fn is_global(&self) -> bool {
        self.source.base().is_global()
    }

    fn apply_source(&self, t: usize, f: &Section) -> Section {
        let base = self.source.base();
        let g = base.group();
        let ti = g.inv(t);
        Section {
            fibers: (0..base.num_points())
                .map(|x| match base.apply(ti, x) {
                    Some(y) => ad(self.source.unitary(t, y).expect("defined on X_{t⁻¹}"), &f.fibers[y]),
                    None => CMat::zeros(self.source.fiber_dim(x), self.source.fiber_dim(x)),
                })
                .collect(),
        }
    }

    /// `α̃_t(f)`; only the part of `f` in the ideal at `t⁻¹` contributes.
    pub fn apply(&self, t: usize, f: &Section) -> Section {
        match &self.induced {
            None => self.apply_source(t, f),
            Some(ia) => ia.lift(&self.apply_source(t, &ia.project(f))),
        }
    }

    /// Carrier points outside of which the ideal at `t` vanishes.
    pub fn ideal_support(&self, t: usize) -> Vec<usize> {
        let domain = self.source.base().domain(t);
        match &self.induced {
            None => domain,
            Some(ia) => {
                let mut pts: Vec<usize> =
                    domain.iter().flat_map(|&c| ia.orbit_bundle().orbits.classes[c].iter().copied()).collect();
                pts.sort_unstable();
                pts
            }
        }
    }

    /// Orthonormal basis of the ideal at `t`.
    pub fn ideal_basis(&self, t: usize) -> Vec<Section> {
        let domain = self.source.base().domain(t);
        match &self.induced {
            None => self.source.section_algebra().matrix_units_on(&domain),
            Some(ia) => ia.lifted_units(&domain),
        }
    }

    pub fn ideal_dim(&self, t: usize) -> usize {
        self.source.base().domain(t).iter().map(|&x| self.source.fiber_dim(x).pow(2)).sum()
    }

    /// Orthonormal basis of the algebra.
    pub fn basis(&self) -> Vec<Section> {
        self.ideal_basis(self.group().identity())
    }

    pub fn dim(&self) -> usize {
        self.ideal_dim(self.group().identity())
    }

    /// Distance of `f` from the algebra (zero for plain section algebras).
    pub fn distance_to_algebra(&self, f: &Section) -> f64 {
        match &self.induced {
            None => 0.0,
            Some(ia) => ia.distance(f),
        }
    }

    /// Distance of `f` from the ideal at `t`.
    pub fn distance_to_ideal(&self, t: usize, f: &Section) -> f64 {
        let support = self.ideal_support(t);
        let carrier = self.carrier();
        let outside = f - &carrier.cut(f, &support);
        outside.max_abs().max(self.distance_to_algebra(f))
    }

    /// Checks the partial-action axioms at algebra level on the ideal bases.
    pub fn validate(&self, tol: f64) -> AlgebraActionReport {
        let g = self.group();
        let carrier = self.carrier();
        let mut violations = Vec::new();
        let mut worst: f64 = 0.0;
        let mut record = |r: f64, v: AlgebraActionViolation, violations: &mut Vec<AlgebraActionViolation>| {
            worst = worst.max(r);
            if r > tol {
                violations.push(v);
            }
        };

        let basis = self.basis();
        let r = basis.iter().map(|b| self.apply(g.identity(), b).max_abs_diff(b)).fold(0.0, f64::max);
        record(r, AlgebraActionViolation::Identity { residual: r }, &mut violations);

        for t in g.elements() {
            let ti = g.inv(t);
            let source = sample(self.ideal_basis(ti), 24);
            let images: Vec<Section> = source.iter().map(|b| self.apply(t, b)).collect();

            let mut r = if self.ideal_dim(t) == self.ideal_dim(ti) { 0.0 } else { f64::INFINITY };
            for img in &images {
                r = r.max(self.distance_to_ideal(t, img));
            }
            record(r, AlgebraActionViolation::Ideal { t, residual: r }, &mut violations);

            let r = source
                .iter()
                .zip(&images)
                .map(|(b, img)| self.apply(ti, img).max_abs_diff(b))
                .fold(0.0, f64::max);
            record(r, AlgebraActionViolation::Inverse { t, residual: r }, &mut violations);

            let mut r: f64 = 0.0;
            for (i, a) in source.iter().enumerate() {
                for (j, b) in source.iter().enumerate() {
                    r = r.max(self.apply(t, &(a * b)).max_abs_diff(&(&images[i] * &images[j])));
                }
            }
            record(r, AlgebraActionViolation::Multiplicative { t, residual: r }, &mut violations);

            let r = source
                .iter()
                .zip(&images)
                .map(|(b, img)| self.apply(t, &b.adjoint()).max_abs_diff(&img.adjoint()))
                .fold(0.0, f64::max);
            record(r, AlgebraActionViolation::Involution { t, residual: r }, &mut violations);

            for s in g.elements() {
                let st = g.mul(s, t);
                let cut_to = self.ideal_support(g.inv(s));
                let mut r: f64 = 0.0;
                for img in &images {
                    // img·1_{X_{s⁻¹}} lies in the ideals at t and s⁻¹.
                    let h = carrier.cut(img, &cut_to);
                    let f = self.apply(ti, &h);
                    r = r.max(self.distance_to_ideal(g.inv(st), &f));
                    r = r.max(self.apply(s, &h).max_abs_diff(&self.apply(st, &f)));
                }
                record(r, AlgebraActionViolation::Composition { s, t, residual: r }, &mut violations);
            }
        }
        AlgebraActionReport { violations, max_residual: worst }
    }
}

/// At most `k` elements, evenly spread.
fn sample<T: Clone>(items: Vec<T>, k: usize) -> Vec<T> {
    if items.len() <= k {
        return items;
    }
    let step = items.len() as f64 / k as f64;
    (0..k).map(|i| items[(i as f64 * step) as usize].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::tests::e2;
    use crate::linalg::{random_gaussian, ONE};
    use crate::partial_action::tests::e1;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_section(alg: &SectionAlgebra, seed: u64) -> Section {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Section { fibers: alg.fiber_dims().iter().map(|&n| random_gaussian(n, n, &mut rng)).collect() }
    }

    #[test]
    fn section_algebra_dimensions() {
        assert_eq!(SectionAlgebra::new(vec![1, 1, 1]).dim(), 3);
        assert_eq!(SectionAlgebra::new(vec![2, 1]).dim(), 5);
        let alg = SectionAlgebra::new(vec![2, 1]);
        assert_eq!(alg.basis().len(), 5);
    }

    #[test]
    fn section_operations() {
        let alg = SectionAlgebra::new(vec![2, 1, 3]);
        let f = random_section(&alg, 1);
        let g = random_section(&alg, 2);
        assert_eq!(f.adjoint().adjoint(), f);
        assert!((&f * &g).adjoint().max_abs_diff(&(&g.adjoint() * &f.adjoint())) < 1e-12);
        assert!((&f * &alg.unit()).max_abs_diff(&f) < 1e-15);
        assert_eq!(alg.from_coords(&alg.coords(&f)), f);
        let line = SectionAlgebra::new(vec![1, 1, 1]);
        let (a, b) = (random_section(&line, 3), random_section(&line, 4));
        assert!((&a * &b).max_abs_diff(&(&b * &a)) < 1e-15);
    }

    #[test]
    fn e1_induced_action() {
        let ba = BundleAction::line_bundle(e1());
        let apa = AlgebraPartialAction::on_sections(&ba);
        assert_eq!(apa.ideal_dim(1), 2);
        assert_eq!(apa.ideal_dim(0), 3);
        let report = apa.validate(1e-9);
        assert!(report.is_valid(), "{:?}", report.violations);

        // δ_0 ↦ δ_1 under t = 1.
        let alg = ba.section_algebra();
        assert!(ba.base().in_domain(3, 0));
        let delta0 = alg.matrix_unit(0, 0, 0);
        assert_eq!(apa.apply(1, &delta0), alg.matrix_unit(1, 0, 0));
    }

    #[test]
    fn global_actions_have_full_ideals() {
        let (h, _) = e2();
        let apa = AlgebraPartialAction::on_sections(&h);
        assert!(apa.is_global());
        for t in 0..2 {
            assert_eq!(apa.ideal_dim(t), 4);
        }
        assert!(apa.validate(1e-9).is_valid());
    }

    #[test]
    fn broken_fiber_maps_fail_validation() {
        let (h, _) = e2();
        let mut unitaries = h.unitaries().to_vec();
        // α̃_1 no longer inverts α̃_1.
        unitaries[1][0] = Some(CMat::from_element(1, 1, ONE * 2.0));
        let bad = BundleAction::new(h.base().clone(), h.fiber_dims().to_vec(), unitaries).unwrap();
        assert!(!AlgebraPartialAction::on_sections(&bad).validate(1e-9).is_valid());
    }
}
