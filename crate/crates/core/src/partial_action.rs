//! Partial actions of finite groups on finite sets.
//!
//! A partial action of `G` on `X` is a family of subsets `X_t ⊆ X` together
//! with bijections `α_t : X_{t⁻¹} → X_t` such that `X_e = X`, `α_e = id` and
//! `α_s ∘ α_t ⊆ α_{st}` wherever the left-hand side is defined.
//!
//! Everything here is set-level and exact. Spaces are finite and discrete, so
//! the topological hypotheses that usually accompany partial actions (open or
//! closed domains, closed graph, properness) always hold; see
//! [`PartialAction::has_closed_domain`] and friends.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::Error;
use crate::group::FiniteGroup;
use crate::union_find::UnionFind;

/// A partial action of a finite group on a finite set of named points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialAction {
    group: FiniteGroup,
    points: Vec<String>,
    /// `domains[t][x]` is true iff `x ∈ X_t`.
    domains: Vec<Vec<bool>>,
    /// `maps[t][x] = Some(α_t(x))` for `x ∈ X_{t⁻¹}`.
    maps: Vec<Vec<Option<usize>>>,
}

/// A single axiom failure found by [`PartialAction::validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum ActionViolation {
    /// `X_e` is not the whole space.
    IdentityDomain { point: String },
    /// `α_e` moves a point (or is undefined on it).
    IdentityMap { point: String, image: Option<String> },
    /// `α_t` is defined on a point outside `X_{t⁻¹}`, or undefined on a point inside it.
    Domain { t: usize, point: String, defined: bool },
    /// `α_t(x)` lands outside `X_t`.
    Range { t: usize, point: String, image: String },
    /// Two points share an image under `α_t`.
    NotInjective { t: usize, first: String, second: String, image: String },
    /// A point of `X_t` is not hit by `α_t`.
    NotSurjective { t: usize, point: String },
    /// `α_{t⁻¹}(α_t(x)) ≠ x`.
    Inverse { t: usize, point: String },
    /// The composition axiom fails: `x ∈ X_{t⁻¹}`, `α_t(x) ∈ X_{s⁻¹}` but
    /// `α_{st}(x)` is undefined or differs from `α_s(α_t(x))`.
    Composition { s: usize, t: usize, point: String },
}

impl fmt::Display for ActionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionViolation::IdentityDomain { point } => write!(f, "X_e is missing point {point}"),
            ActionViolation::IdentityMap { point, image } => {
                write!(f, "α_e({point}) = {image:?}, expected {point}")
            }
            ActionViolation::Domain { t, point, defined: true } => {
                write!(f, "α_{t} is defined at {point}, which is outside X_{{{t}⁻¹}}")
            }
            ActionViolation::Domain { t, point, defined: false } => {
                write!(f, "α_{t} is undefined at {point} ∈ X_{{{t}⁻¹}}")
            }
            ActionViolation::Range { t, point, image } => {
                write!(f, "α_{t}({point}) = {image} lies outside X_{t}")
            }
            ActionViolation::NotInjective { t, first, second, image } => {
                write!(f, "α_{t} maps both {first} and {second} to {image}")
            }
            ActionViolation::NotSurjective { t, point } => {
                write!(f, "{point} ∈ X_{t} is not in the image of α_{t}")
            }
            ActionViolation::Inverse { t, point } => {
                write!(f, "α_{{{t}⁻¹}}(α_{t}({point})) ≠ {point}")
            }
            ActionViolation::Composition { s, t, point } => {
                write!(f, "composition axiom fails for s={s}, t={t} at {point}")
            }
        }
    }
}

/// Result of [`PartialAction::validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ActionReport {
    pub violations: Vec<ActionViolation>,
    pub is_global: bool,
}

impl ActionReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Partition of the points into orbits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitStructure {
    /// Classes in increasing order of their least member.
    pub classes: Vec<Vec<usize>>,
    /// Point index to class index.
    pub class_of: Vec<usize>,
    /// Class index to its least member.
    pub representative: Vec<usize>,
}

impl OrbitStructure {
    fn from_union_find(uf: &mut UnionFind, len: usize) -> Self {
        let classes = uf.classes();
        let mut class_of = vec![0; len];
        for (c, members) in classes.iter().enumerate() {
            for &x in members {
                class_of[x] = c;
            }
        }
        let representative = classes.iter().map(|c| c[0]).collect();
        Self { classes, class_of, representative }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Union of the classes meeting `set`.
    pub fn saturate(&self, set: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        set.into_iter().flat_map(|x| self.classes[self.class_of[x]].iter().copied()).collect()
    }
}

/// Failure of the commutation conditions for a pair `(s, t)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum CommuteWitness {
    /// `α_s(X^H_{s⁻¹} ∩ X^K_t) ≠ β_t(X^K_{t⁻¹} ∩ X^H_s)`.
    Domains { s: usize, t: usize, via_alpha: Vec<String>, via_beta: Vec<String> },
    /// `α_s β_t(x) ≠ β_t α_s(x)` for some `x ∈ α_{s⁻¹}(X^H_s ∩ X^K_{t⁻¹})`.
    Values { s: usize, t: usize, point: String, alpha_beta: Option<String>, beta_alpha: Option<String> },
}

impl fmt::Display for CommuteWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CommuteWitness::Domains { s, t, via_alpha, via_beta } => write!(
                f,
                "(s,t)=({s},{t}): α_s(X_s⁻¹ ∩ X_t) = {via_alpha:?} but β_t(X_t⁻¹ ∩ X_s) = {via_beta:?}"
            ),
            CommuteWitness::Values { s, t, point, alpha_beta, beta_alpha } => write!(
                f,
                "(s,t)=({s},{t}) at {point}: α_sβ_t = {alpha_beta:?} but β_tα_s = {beta_alpha:?}"
            ),
        }
    }
}

/// Outcome of [`commute`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Commutation {
    pub commute: bool,
    pub witness: Option<CommuteWitness>,
}

/// Partial action on an orbit space together with the orbit partition it lives on.
#[derive(Clone, Debug)]
pub struct QuotientAction {
    pub action: PartialAction,
    pub orbits: OrbitStructure,
}

/// A globalization: the enveloping action and the embedding of the original space.
#[derive(Clone, Debug)]
pub struct EnvelopingResult {
    /// Global action on the enveloping space.
    pub env_action: PartialAction,
    /// Original point index to enveloping point index.
    pub embed: Vec<usize>,
    /// Least pair `(t, x)` of each class of `G × X`.
    pub representatives: Vec<(usize, usize)>,
    /// Class of the pair `(t, x)`, stored at `t·|X| + x`.
    pub pair_class: Vec<usize>,
}

impl PartialAction {
    /// Assembles an action from raw tables without checking the axioms.
    ///
    /// Only shapes are checked; use [`validate`](Self::validate) for the axioms.
    pub fn from_parts(
        group: FiniteGroup,
        points: Vec<String>,
        domains: Vec<Vec<bool>>,
        maps: Vec<Vec<Option<usize>>>,
    ) -> Result<Self, Error> {
        let (g, n) = (group.order(), points.len());
        if n == 0 {
            return Err(Error::InvalidAction("the point set is empty".into()));
        }
        let unique: BTreeSet<&String> = points.iter().collect();
        if unique.len() != n {
            return Err(Error::InvalidAction("point identifiers are not unique".into()));
        }
        if domains.len() != g || maps.len() != g {
            return Err(Error::InvalidAction(format!("expected {g} domains and maps")));
        }
        if domains.iter().any(|d| d.len() != n) || maps.iter().any(|m| m.len() != n) {
            return Err(Error::InvalidAction(format!("domain and map rows must have length {n}")));
        }
        if maps.iter().flatten().flatten().any(|&y| y >= n) {
            return Err(Error::InvalidAction("map image out of range".into()));
        }
        Ok(Self { group, points, domains, maps })
    }

    /// Builds an action from its partial maps; each `X_t` is taken to be the image of `α_t`.
    pub fn from_maps(
        group: FiniteGroup,
        points: Vec<String>,
        maps: Vec<Vec<Option<usize>>>,
    ) -> Result<Self, Error> {
        let n = points.len();
        let domains = maps
            .iter()
            .map(|m| {
                let mut d = vec![false; n];
                for &y in m.iter().flatten() {
                    if y < n {
                        d[y] = true;
                    }
                }
                d
            })
            .collect();
        Self::from_parts(group, points, domains, maps)
    }

    /// A global action given by `act(t, x)`.
    pub fn global(
        group: FiniteGroup,
        points: Vec<String>,
        act: impl Fn(usize, usize) -> usize,
    ) -> Result<Self, Error> {
        let n = points.len();
        let maps = group.elements().map(|t| (0..n).map(|x| Some(act(t, x))).collect()).collect();
        let action = Self::from_maps(group, points, maps)?;
        action.ensure_valid()?;
        Ok(action)
    }

    /// Errors with the first violation when the action is not valid.
    pub fn ensure_valid(&self) -> Result<(), Error> {
        match self.validate().violations.first() {
            Some(v) => Err(Error::InvalidAction(v.to_string())),
            None => Ok(()),
        }
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn point_name(&self, x: usize) -> &str {
        &self.points[x]
    }

    pub fn point_index(&self, name: &str) -> Option<usize> {
        self.points.iter().position(|p| p == name)
    }

    /// `x ∈ X_t`.
    #[inline]
    pub fn in_domain(&self, t: usize, x: usize) -> bool {
        self.domains[t][x]
    }

    /// `α_t(x)` when `x ∈ X_{t⁻¹}`.
    #[inline]
    pub fn apply(&self, t: usize, x: usize) -> Option<usize> {
        self.maps[t][x]
    }

    /// The points of `X_t`, increasing.
    pub fn domain(&self, t: usize) -> Vec<usize> {
        (0..self.num_points()).filter(|&x| self.domains[t][x]).collect()
    }

    pub fn is_global(&self) -> bool {
        self.domains.iter().all(|d| d.iter().all(|&b| b))
    }

    /// Finite discrete spaces make every domain clopen.
    pub fn has_closed_domain(&self) -> bool {
        true
    }

    /// Finite discrete spaces make every graph closed.
    pub fn has_closed_graph(&self) -> bool {
        true
    }

    /// Every partial action of a finite group on a finite set is proper.
    pub fn is_proper(&self) -> bool {
        true
    }

    /// Exhaustive axiom scan.
    pub fn validate(&self) -> ActionReport {
        let n = self.num_points();
        let g = &self.group;
        let e = g.identity();
        let name = |x: usize| self.points[x].clone();
        let mut violations = Vec::new();

        for x in 0..n {
            if !self.domains[e][x] {
                violations.push(ActionViolation::IdentityDomain { point: name(x) });
            }
            if self.maps[e][x] != Some(x) {
                violations.push(ActionViolation::IdentityMap {
                    point: name(x),
                    image: self.maps[e][x].map(name),
                });
            }
        }

        for t in g.elements() {
            let ti = g.inv(t);
            let mut preimage: Vec<Option<usize>> = vec![None; n];
            for x in 0..n {
                let defined = self.maps[t][x].is_some();
                if defined != self.domains[ti][x] {
                    violations.push(ActionViolation::Domain { t, point: name(x), defined });
                }
                if let Some(y) = self.maps[t][x] {
                    if !self.domains[t][y] {
                        violations.push(ActionViolation::Range { t, point: name(x), image: name(y) });
                    }
                    match preimage[y] {
                        Some(first) => violations.push(ActionViolation::NotInjective {
                            t,
                            first: name(first),
                            second: name(x),
                            image: name(y),
                        }),
                        None => preimage[y] = Some(x),
                    }
                    if self.maps[ti][y] != Some(x) {
                        violations.push(ActionViolation::Inverse { t, point: name(x) });
                    }
                }
            }
            for y in 0..n {
                if self.domains[t][y] && preimage[y].is_none() {
                    violations.push(ActionViolation::NotSurjective { t, point: name(y) });
                }
            }
        }

        for t in g.elements() {
            for s in g.elements() {
                let st = g.mul(s, t);
                for x in 0..n {
                    let Some(y) = self.maps[t][x] else { continue };
                    let Some(z) = self.maps[s][y] else { continue };
                    if self.maps[st][x] != Some(z) {
                        violations.push(ActionViolation::Composition { s, t, point: name(x) });
                    }
                }
            }
        }

        ActionReport { violations, is_global: self.is_global() }
    }

    /// Restriction to a nonempty subset `S`: `X'_t = S ∩ α_t(S ∩ X_{t⁻¹})`.
    ///
    /// The result acts on the points of `S` (in increasing index order).
    pub fn restrict(&self, subset: &[usize]) -> Result<PartialAction, Error> {
        let members: BTreeSet<usize> = subset.iter().copied().collect();
        if members.is_empty() {
            return Err(Error::InvalidParameter("cannot restrict to an empty subset".into()));
        }
        if let Some(&x) = members.iter().find(|&&x| x >= self.num_points()) {
            return Err(Error::InvalidParameter(format!("point index {x} out of range")));
        }
        let order: Vec<usize> = members.iter().copied().collect();
        let mut local = vec![usize::MAX; self.num_points()];
        for (i, &x) in order.iter().enumerate() {
            local[x] = i;
        }
        let maps = self
            .group
            .elements()
            .map(|t| {
                order
                    .iter()
                    .map(|&x| self.maps[t][x].filter(|y| members.contains(y)).map(|y| local[y]))
                    .collect()
            })
            .collect();
        let points = order.iter().map(|&x| self.points[x].clone()).collect();
        PartialAction::from_maps(self.group.clone(), points, maps)
    }

    /// Restriction to a subset given by point names.
    pub fn restrict_to_names<S: AsRef<str>>(&self, names: &[S]) -> Result<PartialAction, Error> {
        let idx = names
            .iter()
            .map(|n| {
                self.point_index(n.as_ref())
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown point {}", n.as_ref())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.restrict(&idx)
    }

    /// Orbit partition: the reachability closure of `x ~ α_t(x)`.
    pub fn orbits(&self) -> OrbitStructure {
        let n = self.num_points();
        let mut uf = UnionFind::new(n);
        for t in self.group.elements() {
            for x in 0..n {
                if let Some(y) = self.maps[t][x] {
                    uf.union(x, y);
                }
            }
        }
        OrbitStructure::from_union_find(&mut uf, n)
    }

    /// `HU = ⋃_t α_t(U ∩ X_{t⁻¹})`.
    pub fn orbit_of_set(&self, set: &[usize]) -> BTreeSet<usize> {
        self.group
            .elements()
            .flat_map(|t| set.iter().filter_map(move |&x| self.maps[t][x]))
            .collect()
    }

    /// `H_x = {t : x ∈ X_{t⁻¹}, α_t(x) = x}`.
    pub fn stabilizer(&self, x: usize) -> Vec<usize> {
        self.group.elements().filter(|&t| self.maps[t][x] == Some(x)).collect()
    }

    /// True when every stabilizer is trivial.
    pub fn is_free(&self) -> bool {
        self.first_non_free_point().is_none()
    }

    pub fn first_non_free_point(&self) -> Option<usize> {
        (0..self.num_points()).find(|&x| self.stabilizer(x).len() > 1)
    }

    /// Errors with the offending point when the action is not free.
    pub fn ensure_free(&self) -> Result<(), Error> {
        match self.first_non_free_point() {
            None => Ok(()),
            Some(x) => Err(Error::NotFree {
                point: self.points[x].clone(),
                stabilizer: self.stabilizer(x),
            }),
        }
    }

    /// The action of `group` in which `t` acts as `α_{image[t]}`.
    ///
    /// `image` must describe a homomorphism into this action's group; the
    /// typical use is a factor slice `s ↦ (s, e)` of a product action.
    pub fn along_homomorphism(&self, group: FiniteGroup, image: &[usize]) -> Result<Self, Error> {
        if image.len() != group.order() || image.iter().any(|&t| t >= self.group.order()) {
            return Err(Error::InvalidParameter("homomorphism table has the wrong shape".into()));
        }
        let domains = image.iter().map(|&t| self.domains[t].clone()).collect();
        let maps = image.iter().map(|&t| self.maps[t].clone()).collect();
        let action = Self::from_parts(group, self.points.clone(), domains, maps)?;
        action.ensure_valid()?;
        Ok(action)
    }

    /// True when `map` (a bijection of point indices) intertwines `self` with `other`.
    pub fn is_isomorphism(&self, other: &PartialAction, map: &[usize]) -> bool {
        if self.group != other.group || map.len() != self.num_points() || other.num_points() != map.len() {
            return false;
        }
        let image: BTreeSet<usize> = map.iter().copied().collect();
        if image.len() != map.len() {
            return false;
        }
        self.group.elements().all(|t| {
            (0..self.num_points()).all(|x| {
                self.domains[t][x] == other.domains[t][map[x]]
                    && self.maps[t][x].map(|y| map[y]) == other.maps[t][map[x]]
            })
        })
    }

    fn domain_set(&self, t: usize) -> BTreeSet<usize> {
        self.domain(t).into_iter().collect()
    }

    fn names(&self, set: &BTreeSet<usize>) -> Vec<String> {
        set.iter().map(|&x| self.points[x].clone()).collect()
    }
}

/// Decides whether two partial actions on the same points commute.
///
/// Checks, for every `(s, t)`, that `α_s(X^H_{s⁻¹} ∩ X^K_t) = β_t(X^K_{t⁻¹} ∩ X^H_s)`
/// and that `α_s β_t = β_t α_s` on `α_{s⁻¹}(X^H_s ∩ X^K_{t⁻¹})`. The first failing
/// pair, in lexicographic order of `(s, t)`, is returned as the witness.
pub fn commute(alpha: &PartialAction, beta: &PartialAction) -> Result<Commutation, Error> {
    if alpha.points != beta.points {
        return Err(Error::PointMismatch);
    }
    let (h, k) = (&alpha.group, &beta.group);
    for s in h.elements() {
        let si = h.inv(s);
        for t in k.elements() {
            let ti = k.inv(t);
            let left: BTreeSet<usize> = alpha
                .domain_set(si)
                .intersection(&beta.domain_set(t))
                .filter_map(|&x| alpha.apply(s, x))
                .collect();
            let right: BTreeSet<usize> = beta
                .domain_set(ti)
                .intersection(&alpha.domain_set(s))
                .filter_map(|&x| beta.apply(t, x))
                .collect();
            if left != right {
                return Ok(Commutation {
                    commute: false,
                    witness: Some(CommuteWitness::Domains {
                        s,
                        t,
                        via_alpha: alpha.names(&left),
                        via_beta: alpha.names(&right),
                    }),
                });
            }
            let start: Vec<usize> = alpha
                .domain_set(s)
                .intersection(&beta.domain_set(ti))
                .filter_map(|&y| alpha.apply(si, y))
                .collect();
            for x in start {
                let ab = beta.apply(t, x).and_then(|y| alpha.apply(s, y));
                let ba = alpha.apply(s, x).and_then(|y| beta.apply(t, y));
                if ab != ba {
                    return Ok(Commutation {
                        commute: false,
                        witness: Some(CommuteWitness::Values {
                            s,
                            t,
                            point: alpha.points[x].clone(),
                            alpha_beta: ab.map(|y| alpha.points[y].clone()),
                            beta_alpha: ba.map(|y| alpha.points[y].clone()),
                        }),
                    });
                }
            }
        }
    }
    Ok(Commutation { commute: true, witness: None })
}

fn ensure_commute(alpha: &PartialAction, beta: &PartialAction) -> Result<(), Error> {
    let c = commute(alpha, beta)?;
    match c.witness {
        Some(w) => Err(Error::NotCommuting(w.to_string())),
        None => Ok(()),
    }
}

/// The partial action of `H × K` with `X_{(s,t)} = α_s(X^H_{s⁻¹} ∩ X^K_t)` and
/// `(s, t) ↦ α_s ∘ β_t`. The pair `(s, t)` has index `s·|K| + t`.
pub fn product_action(alpha: &PartialAction, beta: &PartialAction) -> Result<PartialAction, Error> {
    ensure_commute(alpha, beta)?;
    let group = alpha.group.direct_product(&beta.group);
    let kk = beta.group.order();
    let n = alpha.num_points();
    let maps = group
        .elements()
        .map(|g| {
            let (s, t) = (g / kk, g % kk);
            (0..n).map(|x| beta.apply(t, x).and_then(|y| alpha.apply(s, y))).collect()
        })
        .collect();
    let product = PartialAction::from_maps(group, alpha.points.clone(), maps)?;
    product.ensure_valid().map_err(|e| Error::Assertion(format!("product action: {e}")))?;
    Ok(product)
}

/// The partial action of `H` on `X/K` induced by commuting `alpha` (of `H`) and `beta` (of `K`).
///
/// `(X/K)_s` is the `K`-saturation of `X^H_s` and `α̂_s(Kx) = Kα_s(x)`. Orbit
/// points are named after their least member.
pub fn quotient_action(alpha: &PartialAction, beta: &PartialAction) -> Result<QuotientAction, Error> {
    ensure_commute(alpha, beta)?;
    let orbits = beta.orbits();
    let m = orbits.len();
    let h = &alpha.group;
    let mut maps = vec![vec![None; m]; h.order()];
    for s in h.elements() {
        for x in 0..alpha.num_points() {
            if let Some(y) = alpha.apply(s, x) {
                let (c, d) = (orbits.class_of[x], orbits.class_of[y]);
                match maps[s][c] {
                    None => maps[s][c] = Some(d),
                    Some(prev) if prev == d => {}
                    Some(prev) => {
                        return Err(Error::Assertion(format!(
                            "quotient map for s={s} is not well defined on class {c}: {prev} vs {d}"
                        )))
                    }
                }
            }
        }
    }
    let points = orbits.representative.iter().map(|&r| alpha.points[r].clone()).collect();
    let action = PartialAction::from_maps(h.clone(), points, maps)?;
    action.ensure_valid().map_err(|e| Error::Assertion(format!("quotient action: {e}")))?;
    Ok(QuotientAction { action, orbits })
}

/// Globalization: `Xᵉ = (G × X)/∼` with `(t,x) ∼ (s,y)` iff `x ∈ X_{t⁻¹s}` and
/// `α_{s⁻¹t}(x) = y`, acted on by `r·[t,x] = [rt,x]`, with `x ↦ [e,x]`.
///
/// Enveloping points are ordered by their least pair. A point containing
/// `(e, x)` keeps the name of `x`; the others are named `"t*x"` after their
/// least pair.
pub fn enveloping(pa: &PartialAction) -> EnvelopingResult {
    let g = &pa.group;
    let n = pa.num_points();
    let idx = |t: usize, x: usize| t * n + x;
    let mut uf = UnionFind::new(g.order() * n);
    for t in g.elements() {
        for x in 0..n {
            for r in g.elements() {
                // (t, x) ∼ (t r⁻¹, α_r(x))
                if let Some(y) = pa.apply(r, x) {
                    uf.union(idx(t, x), idx(g.mul(t, g.inv(r)), y));
                }
            }
        }
    }
    let classes = uf.classes();
    let mut pair_class = vec![0; g.order() * n];
    for (c, members) in classes.iter().enumerate() {
        for &p in members {
            pair_class[p] = c;
        }
    }
    let representatives: Vec<(usize, usize)> = classes.iter().map(|c| (c[0] / n, c[0] % n)).collect();
    let e = g.identity();
    let embed: Vec<usize> = (0..n).map(|x| pair_class[idx(e, x)]).collect();
    let mut names: Vec<Option<String>> = vec![None; classes.len()];
    for x in 0..n {
        names[embed[x]] = Some(pa.points[x].clone());
    }
    let points: Vec<String> = names
        .into_iter()
        .zip(&representatives)
        .map(|(name, &(t, x))| name.unwrap_or_else(|| format!("{t}*{}", pa.points[x])))
        .collect();
    let maps = g
        .elements()
        .map(|r| {
            representatives
                .iter()
                .map(|&(t, x)| Some(pair_class[idx(g.mul(r, t), x)]))
                .collect()
        })
        .collect();
    let env_action = PartialAction::from_maps(g.clone(), points, maps)
        .expect("enveloping space is nonempty with well-formed tables");
    EnvelopingResult { env_action, embed, representatives, pair_class }
}

impl EnvelopingResult {
    /// Class of the pair `(t, x)`.
    pub fn class_of(&self, t: usize, x: usize) -> usize {
        self.pair_class[t * self.embed.len() + x]
    }

    /// Checks the three defining properties against the original action.
    ///
    /// The enveloping action must be global, the embedding must be injective
    /// and equivariant with its image carrying exactly the original action,
    /// and the orbit of the image must be everything.
    pub fn check(&self, pa: &PartialAction) -> Result<(), Error> {
        let env = &self.env_action;
        let fail = |msg: String| Err(Error::Assertion(msg));
        if let Some(v) = env.validate().violations.first() {
            return fail(format!("enveloping action invalid: {v}"));
        }
        if !env.is_global() {
            return fail("enveloping action is not global".into());
        }
        let image: BTreeSet<usize> = self.embed.iter().copied().collect();
        if image.len() != self.embed.len() {
            return fail("embedding is not injective".into());
        }
        for t in pa.group.elements() {
            for x in 0..pa.num_points() {
                let env_image = env.apply(t, self.embed[x]).expect("global");
                match pa.apply(t, x) {
                    Some(y) if env_image != self.embed[y] => {
                        return fail(format!("embedding not equivariant at t={t}, x={}", pa.points[x]))
                    }
                    None if image.contains(&env_image) => {
                        return fail(format!(
                            "restriction to the image is larger than the input at t={t}, x={}",
                            pa.points[x]
                        ))
                    }
                    _ => {}
                }
            }
        }
        let embedded: Vec<usize> = self.embed.clone();
        if env.orbit_of_set(&embedded).len() != env.num_points() {
            return fail("enveloping space is not the orbit of the embedded base".into());
        }
        Ok(())
    }

    /// Set-level round trip: restricting the enveloping action to the embedded
    /// base reproduces the input exactly (same domains and maps).
    pub fn restriction_matches(&self, pa: &PartialAction) -> bool {
        match self.env_action.restrict(&self.embed) {
            Ok(restricted) => {
                // `restrict` orders points by enveloping index.
                let mut order: Vec<usize> = (0..self.embed.len()).collect();
                order.sort_by_key(|&x| self.embed[x]);
                let mut map = vec![0; self.embed.len()];
                for (local, &x) in order.iter().enumerate() {
                    map[x] = local;
                }
                pa.is_isomorphism(&restricted, &map)
            }
            Err(_) => false,
        }
    }
}
