//! Orbit bundles of free actions and induced algebras.

use serde::Serialize;

use super::{ensure_bundle_commute, AlgebraPartialAction, BundleAction, Section, SectionAlgebra};
use crate::error::Error;
use crate::linalg::{ad, ad_residual, null_space, CMat};
use crate::partial_action::{quotient_action, OrbitStructure};

/// The bundle `𝐁/H` over the orbit space of a free action.
///
/// The fiber over an orbit is the fiber over its least point. For a point `x`
/// of the orbit of `r`, the transfer `T(r, x) = U_{t(r,x), r}` identifies
/// `B_r` with `B_x`, where `t(r, x)` is the unique element moving `r` to `x`.
#[derive(Clone, Debug)]
pub struct OrbitBundle {
    pub orbits: OrbitStructure,
    /// Fiber dimension per orbit.
    pub fiber_dims: Vec<usize>,
    /// Orbit names (the name of the least point).
    pub names: Vec<String>,
    /// `t(rep, x)` per point.
    from_rep_element: Vec<usize>,
    /// `T(rep, x)` per point.
    from_rep: Vec<CMat>,
}

impl OrbitBundle {
    pub fn new(ba: &BundleAction) -> Result<Self, Error> {
        let base = ba.base();
        base.ensure_free()?;
        let orbits = base.orbits();
        let mut from_rep_element = Vec::with_capacity(base.num_points());
        let mut from_rep = Vec::with_capacity(base.num_points());
        for x in 0..base.num_points() {
            let rep = orbits.representative[orbits.class_of[x]];
            let t = base
                .group()
                .elements()
                .find(|&t| base.apply(t, rep) == Some(x))
                .ok_or_else(|| Error::Assertion(format!("{} is not a translate of its orbit's least point", base.point_name(x))))?;
            from_rep_element.push(t);
            from_rep.push(ba.unitary(t, rep).expect("defined").clone());
        }
        let fiber_dims = orbits.representative.iter().map(|&r| ba.fiber_dim(r)).collect();
        let names = orbits.representative.iter().map(|&r| base.point_name(r).to_string()).collect();
        Ok(Self { orbits, fiber_dims, names, from_rep_element, from_rep })
    }

    pub fn section_algebra(&self) -> SectionAlgebra {
        SectionAlgebra::new(self.fiber_dims.clone())
    }

    /// The unique `t` with `α_t(x) = y`, for points of one orbit.
    pub fn transfer_element(&self, ba: &BundleAction, x: usize, y: usize) -> Option<usize> {
        if self.orbits.class_of[x] != self.orbits.class_of[y] {
            return None;
        }
        let g = ba.group();
        Some(g.mul(self.from_rep_element[y], g.inv(self.from_rep_element[x])))
    }

    /// `T(rep, x) : B_rep → B_x`.
    pub fn from_representative(&self, x: usize) -> &CMat {
        &self.from_rep[x]
    }
}

/// `Ind₀(𝐁, α)`: sections with `f(α_t x) = Ad(U_{t,x}) f(x)` whenever defined.
#[derive(Clone, Debug)]
pub struct InducedAlgebra {
    ambient: SectionAlgebra,
    orbit_bundle: OrbitBundle,
    /// Orthonormal basis of the solution space of the equivariance constraints.
    basis: Vec<Section>,
}

/// Checks of the identification `Ind₀(𝐁, α) ≅ C₀(𝐁/H)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsoReport {
    pub induced_dim: usize,
    pub orbit_algebra_dim: usize,
    pub homomorphism_residual: f64,
    pub involution_residual: f64,
    pub round_trip_residual: f64,
    pub isometry_residual: f64,
    pub equivariance_residual: f64,
}

impl IsoReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.homomorphism_residual,
            self.involution_residual,
            self.round_trip_residual,
            self.isometry_residual,
            self.equivariance_residual,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.induced_dim == self.orbit_algebra_dim && self.max_residual() <= tol
    }
}

impl InducedAlgebra {
    /// Solves the equivariance constraints of a free bundle action.
    pub fn new(ba: &BundleAction) -> Result<Self, Error> {
        let orbit_bundle = OrbitBundle::new(ba)?;
        let ambient = ba.section_algebra();
        let base = ba.base();
        let d = ambient.dim();
        let mut rows: Vec<CMat> = Vec::new();
        for t in base.group().elements() {
            for x in 0..base.num_points() {
                let Some(y) = base.apply(t, x) else { continue };
                if x == y {
                    continue;
                }
                let u = ba.unitary(t, x).expect("defined");
                let n = ba.fiber_dim(x);
                // Column k of the constraint block is the residual of the k-th coordinate vector.
                let mut block = CMat::zeros(n * n, d);
                for i in 0..n {
                    for j in 0..n {
                        let e = crate::linalg::matrix_unit(n, i, j);
                        let image = ad(u, &e);
                        for (k, z) in image.iter().enumerate() {
                            block[(k, ambient.offset(x) + j * n + i)] -= *z;
                        }
                        block[(j * n + i, ambient.offset(y) + j * n + i)] += crate::linalg::ONE;
                    }
                }
                rows.push(block);
            }
        }
        let total: usize = rows.iter().map(|b| b.nrows()).sum();
        let mut constraints = CMat::zeros(total, d);
        let mut r = 0;
        for b in &rows {
            constraints.view_mut((r, 0), (b.nrows(), d)).copy_from(b);
            r += b.nrows();
        }
        let ns = null_space(&constraints, 1e-10);
        let basis: Vec<Section> =
            (0..ns.ncols()).map(|k| ambient.from_coords(&ns.column(k).into_owned())).collect();
        let expected: usize = orbit_bundle.fiber_dims.iter().map(|n| n * n).sum();
        if basis.len() != expected {
            return Err(Error::Numerical(format!(
                "equivariant sections span dimension {}, expected {expected}",
                basis.len()
            )));
        }
        Ok(Self { ambient, orbit_bundle, basis })
    }

    pub fn ambient(&self) -> &SectionAlgebra {
        &self.ambient
    }

    pub fn orbit_bundle(&self) -> &OrbitBundle {
        &self.orbit_bundle
    }

    /// Orthonormal basis from the constraint solve.
    pub fn basis(&self) -> &[Section] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `f ↦ (Hx ↦ f(rep))`, the identification with `C₀(𝐁/H)`.
    pub fn project(&self, f: &Section) -> Section {
        Section { fibers: self.orbit_bundle.orbits.representative.iter().map(|&r| f.fibers[r].clone()).collect() }
    }

    /// The inverse identification: `lift(g)(x) = Ad(T(rep, x)) g(Hx)`.
    pub fn lift(&self, g: &Section) -> Section {
        let ob = &self.orbit_bundle;
        Section {
            fibers: (0..self.ambient.num_points())
                .map(|x| ad(ob.from_representative(x), &g.fibers[ob.orbits.class_of[x]]))
                .collect(),
        }
    }

    /// Lifts of the matrix units of `C₀(𝐁/H)` over the given orbits, normalized.
    pub fn lifted_units(&self, classes: &[usize]) -> Vec<Section> {
        let quotient = self.orbit_bundle.section_algebra();
        quotient
            .matrix_units_on(classes)
            .iter()
            .zip(classes.iter().flat_map(|&c| std::iter::repeat(c).take(quotient.fiber_dims()[c].pow(2))))
            .map(|(u, c)| {
                let size = self.orbit_bundle.orbits.classes[c].len() as f64;
                self.lift(u).scale((1.0 / size.sqrt()).into())
            })
            .collect()
    }

    /// `‖f − lift(project f)‖`, zero exactly on equivariant sections.
    pub fn distance(&self, f: &Section) -> f64 {
        f.max_abs_diff(&self.lift(&self.project(f)))
    }

    pub fn contains(&self, f: &Section, tol: f64) -> bool {
        self.distance(f) <= tol
    }

    /// Checks that projection is a bijective isometric `*`-homomorphism onto `C₀(𝐁/H)`.
    pub fn verify_iso(&self, ba: &BundleAction) -> IsoReport {
        let quotient = self.orbit_bundle.section_algebra();
        let mut hom: f64 = 0.0;
        let mut star: f64 = 0.0;
        let mut round: f64 = 0.0;
        let mut iso: f64 = 0.0;
        let mut equiv: f64 = 0.0;
        for (i, a) in self.basis.iter().enumerate() {
            let pa = self.project(a);
            round = round.max(self.lift(&pa).max_abs_diff(a));
            star = star.max(self.project(&a.adjoint()).max_abs_diff(&pa.adjoint()));
            iso = iso.max((pa.norm() - a.norm()).abs());
            equiv = equiv.max(equivariance_residual(ba, a));
            for b in self.basis.iter().skip(i) {
                hom = hom.max(self.project(&(a * b)).max_abs_diff(&(&pa * &self.project(b))));
            }
        }
        for u in quotient.basis() {
            round = round.max(self.project(&self.lift(&u)).max_abs_diff(&u));
        }
        // The projected basis must span the whole orbit algebra.
        let projected: Vec<_> = self.basis.iter().map(|b| quotient.coords(&self.project(b))).collect();
        let span = crate::linalg::rank(&CMat::from_columns(&projected), 1e-9);
        IsoReport {
            induced_dim: span,
            orbit_algebra_dim: quotient.dim(),
            homomorphism_residual: hom,
            involution_residual: star,
            round_trip_residual: round,
            isometry_residual: iso,
            equivariance_residual: equiv,
        }
    }
}

/// `max |f(α_t x) − Ad(U_{t,x}) f(x)|` over the graph.
pub fn equivariance_residual(ba: &BundleAction, f: &Section) -> f64 {
    let base = ba.base();
    let mut worst: f64 = 0.0;
    for t in base.group().elements() {
        for x in 0..base.num_points() {
            if let Some(y) = base.apply(t, x) {
                let image = ad(ba.unitary(t, x).unwrap(), &f.fibers[x]);
                worst = worst.max(crate::linalg::max_abs_diff(&image, &f.fibers[y]));
            }
        }
    }
    worst
}

/// The partial action of `K` on `Ind₀(𝐁, α)` induced by `β`.
///
/// It is built on the orbit bundle: `β` descends to a partial action `μ` of
/// `K` on `𝐁/H` with `U^μ_{t,Hx} = T(rep', β_t x)* U^β_{t,x} T(rep, x)`, whose
/// induced action on `C₀(𝐁/H)` is pulled back to `Ind₀(𝐁, α)`. The ideal at
/// `t` consists of equivariant sections vanishing off `H·X^K_t`.
pub fn induced_algebra_action(
    alpha: &BundleAction,
    beta: &BundleAction,
    tol: f64,
) -> Result<AlgebraPartialAction, Error> {
    alpha.base().ensure_free()?;
    ensure_bundle_commute(alpha, beta, tol)?;
    let induced = InducedAlgebra::new(alpha)?;
    let q = quotient_action(beta.base(), alpha.base())?;
    let ob = induced.orbit_bundle();
    if q.orbits != ob.orbits {
        return Err(Error::Assertion("orbit partitions disagree".into()));
    }
    let k = beta.group();
    let num_classes = ob.orbits.len();
    let mut unitaries = vec![vec![None; num_classes]; k.order()];
    for t in k.elements() {
        for x in 0..beta.base().num_points() {
            let Some(y) = beta.base().apply(t, x) else { continue };
            let (c, d) = (ob.orbits.class_of[x], ob.orbits.class_of[y]);
            let candidate =
                ob.from_representative(y).adjoint() * beta.unitary(t, x).unwrap() * ob.from_representative(x);
            match &unitaries[t][c] {
                None => unitaries[t][c] = Some(candidate),
                Some(first) => {
                    let r = ad_residual(first, &candidate);
                    if r > tol {
                        return Err(Error::Assertion(format!(
                            "descended fiber map for t={t} depends on the point chosen in orbit {} (residual {r:.3e})",
                            ob.names[c]
                        )));
                    }
                }
            }
            debug_assert_eq!(q.action.apply(t, c), Some(d));
        }
    }
    let mu = BundleAction::new(q.action, ob.fiber_dims.clone(), unitaries)?;
    mu.ensure_valid(tol).map_err(|e| Error::Assertion(format!("descended action: {e}")))?;
    Ok(AlgebraPartialAction::on_induced(mu, induced))
}
