//! Deterministic random instances of commuting free partial bundle actions.
//!
//! A superset `Y = H × K × S` carries the global actions `s·(a, b, c) = (sa, b, c)`
//! and `t·(a, b, c) = (a, tb, π_t c)`, where `π` is a permutation action of `K`
//! on the slot `S`. Both are free and commute. Fibers have a constant dimension
//! on each `π`-orbit and the unitaries are `U_{g,y} = e^{iθ} W_{gy} γ_g W_y*` for
//! Haar unitaries `W_y` and a diagonal representation `γ` of `H × K`. A random
//! subset `X ⊆ Y` is kept once the restrictions commute.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bundle::{bundle_commute, BundleAction};
use crate::error::Error;
use crate::group::FiniteGroup;
use crate::linalg::{c64, random_phase, random_unitary, CMat};
use crate::partial_action::PartialAction;
use crate::system::SystemDescription;

/// Number of random subsets tried before giving up.
pub const REJECTION_BUDGET: usize = 256;

/// Upper bounds `(points, group order, fiber dimension)` for generated instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub max_points: usize,
    pub max_group_order: usize,
    pub max_fiber_dim: usize,
}

impl Bounds {
    pub fn new(max_points: usize, max_group_order: usize, max_fiber_dim: usize) -> Result<Self, Error> {
        if max_points == 0 || max_group_order == 0 || max_fiber_dim == 0 {
            return Err(Error::InvalidParameter("bounds must be at least 1".into()));
        }
        Ok(Self { max_points, max_group_order, max_fiber_dim })
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Self { max_points: 8, max_group_order: 4, max_fiber_dim: 2 }
    }
}

impl fmt::Display for Bounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.max_points, self.max_group_order, self.max_fiber_dim)
    }
}

impl FromStr for Bounds {
    type Err = Error;

    /// Parses `points,group,fiber`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::InvalidParameter(format!("bounds must look like 8,4,2, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let nums: Vec<usize> = parts.iter().map(|p| p.parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        Bounds::new(nums[0], nums[1], nums[2])
    }
}

/// A generated pair of actions on a common bundle.
#[derive(Clone, Debug)]
pub struct GeneratedInstance {
    pub seed: u64,
    pub alpha: BundleAction,
    pub beta: BundleAction,
    /// `|Y|` before restriction.
    pub superset_points: usize,
    /// Subsets drawn, including the accepted one.
    pub attempts: usize,
    pub notice: Option<String>,
}

impl GeneratedInstance {
    pub fn description(&self) -> SystemDescription {
        let mut sd = SystemDescription::from_actions(
            &format!("random-{}", self.seed),
            Some(self.seed),
            &[("alpha", &self.alpha), ("beta", &self.beta)],
        );
        sd.notice = self.notice.clone();
        sd
    }
}

/// A finite abelian group `Z_{n₁} × … × Z_{n_r}`, indexed lexicographically.
#[derive(Clone, Debug)]
struct Abelian {
    factors: Vec<usize>,
    group: FiniteGroup,
}

impl Abelian {
    fn new(factors: Vec<usize>) -> Self {
        let group = factors
            .iter()
            .fold(FiniteGroup::trivial(), |acc, &n| acc.direct_product(&FiniteGroup::cyclic(n).expect("positive")));
        Self { factors, group }
    }

    fn random<R: Rng>(max_order: usize, rng: &mut R) -> Self {
        let n = rng.random_range(1..=max_order);
        if n == 4 && rng.random_bool(0.5) {
            Self::new(vec![2, 2])
        } else {
            Self::new(vec![n])
        }
    }

    fn coords(&self, mut a: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (i, &n) in self.factors.iter().enumerate().rev() {
            out[i] = a % n;
            a /= n;
        }
        out
    }

    /// A random character `a ↦ e^{2πi Σ a_f j_f / n_f}`, as its exponents.
    fn random_character<R: Rng>(&self, rng: &mut R) -> Vec<usize> {
        self.factors.iter().map(|&n| rng.random_range(0..n)).collect()
    }

    fn character(&self, exponents: &[usize], a: usize) -> num_complex::Complex64 {
        let phase: f64 = self
            .coords(a)
            .iter()
            .zip(exponents)
            .zip(&self.factors)
            .map(|((&x, &j), &n)| (x * j) as f64 / n as f64)
            .sum();
        num_complex::Complex64::from_polar(1.0, TAU * phase)
    }
}

/// A permutation action of `K` on `0..s`: a generator image per cyclic factor,
/// each with cycle lengths dividing the factor order.
fn random_slot_action<R: Rng>(k: &Abelian, s: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let gens: Vec<Vec<usize>> = k
        .factors
        .iter()
        .enumerate()
        .map(|(f, &n)| {
            // Only the first factor permutes the slot, so the generators commute.
            if f > 0 {
                return (0..s).collect();
            }
            let mut perm: Vec<usize> = (0..s).collect();
            let mut order: Vec<usize> = (0..s).collect();
            order.shuffle(rng);
            let lengths: Vec<usize> = (1..=n).filter(|d| n % d == 0).collect();
            let mut i = 0;
            while i < s {
                let fitting: Vec<usize> = lengths.iter().copied().filter(|&d| i + d <= s).collect();
                let d = fitting[rng.random_range(0..fitting.len())];
                for j in 0..d {
                    perm[order[i + j]] = order[i + (j + 1) % d];
                }
                i += d;
            }
            perm
        })
        .collect();
    k.group
        .elements()
        .map(|t| {
            let coords = k.coords(t);
            (0..s)
                .map(|mut c| {
                    for (g, &power) in gens.iter().zip(&coords) {
                        for _ in 0..power {
                            c = g[c];
                        }
                    }
                    c
                })
                .collect()
        })
        .collect()
}

struct GlobalPair {
    alpha: BundleAction,
    beta: BundleAction,
}

fn global_pair<R: Rng>(bounds: Bounds, rng: &mut R) -> Result<GlobalPair, Error> {
    let h = Abelian::random(bounds.max_group_order, rng);
    let k = Abelian::random(bounds.max_group_order, rng);
    let (nh, nk) = (h.group.order(), k.group.order());
    let max_slot = bounds.max_points.div_ceil(nh * nk).clamp(1, 3);
    let s = rng.random_range(1..=max_slot);
    let pi = random_slot_action(&k, s, rng);
    let index = |a: usize, b: usize, c: usize| (a * nk + b) * s + c;
    let n = nh * nk * s;
    let mut names = vec![String::new(); n];
    for a in 0..nh {
        for b in 0..nk {
            for c in 0..s {
                names[index(a, b, c)] = format!("{a}-{b}-{c}");
            }
        }
    }
    let slot = |y: usize| y % s;
    let alpha_base = PartialAction::global(h.group.clone(), names.clone(), |t, y| {
        let (a, b, c) = (y / (nk * s), (y / s) % nk, y % s);
        index(h.group.mul(t, a), b, c)
    })?;
    let beta_base = PartialAction::global(k.group.clone(), names, |t, y| {
        let (a, b, c) = (y / (nk * s), (y / s) % nk, y % s);
        index(a, k.group.mul(t, b), pi[t][c])
    })?;

    // π-orbits of the slot carry the fiber dimension and the diagonal representation.
    let mut slot_class: Vec<usize> = (0..s).collect();
    for c in 0..s {
        let least = (0..nk).map(|t| pi[t][c]).min().unwrap_or(c);
        slot_class[c] = least;
    }
    let mut class_dim = vec![0; s];
    let mut class_chars: Vec<Vec<(Vec<usize>, Vec<usize>)>> = vec![Vec::new(); s];
    for c in 0..s {
        if slot_class[c] == c {
            let d = rng.random_range(1..=bounds.max_fiber_dim);
            class_dim[c] = d;
            class_chars[c] = (0..d).map(|_| (h.random_character(rng), k.random_character(rng))).collect();
        }
    }
    let dims: Vec<usize> = (0..n).map(|y| class_dim[slot_class[slot(y)]]).collect();
    let w: Vec<CMat> = dims.iter().map(|&d| random_unitary(d, rng)).collect();
    let unitaries = |group: &Abelian, base: &PartialAction, left: bool, rng: &mut R| -> Vec<Vec<Option<CMat>>> {
        group
            .group
            .elements()
            .map(|t| {
                (0..n)
                    .map(|y| {
                        let ty = base.apply(t, y).expect("global");
                        let chars = &class_chars[slot_class[slot(y)]];
                        let gamma = CMat::from_fn(dims[y], dims[y], |i, j| {
                            if i != j {
                                return c64(0.0, 0.0);
                            }
                            let exps = if left { &chars[i].0 } else { &chars[i].1 };
                            group.character(exps, t)
                        });
                        let phase = if t == group.group.identity() { c64(1.0, 0.0) } else { random_phase(rng) };
                        Some((&w[ty] * gamma * w[y].adjoint()) * phase)
                    })
                    .collect()
            })
            .collect()
    };
    let ua = unitaries(&h, &alpha_base, true, rng);
    let ub = unitaries(&k, &beta_base, false, rng);
    Ok(GlobalPair {
        alpha: BundleAction::new(alpha_base, dims.clone(), ua)?,
        beta: BundleAction::new(beta_base, dims, ub)?,
    })
}

/// Draws a subset; the first half of the budget favors sizes of at least half the bound.
fn random_subset<R: Rng>(n: usize, max: usize, attempt: usize, rng: &mut R) -> Vec<usize> {
    let top = max.min(n);
    let low = if attempt <= REJECTION_BUDGET / 2 { top.div_ceil(2) } else { 1 };
    let size = rng.random_range(low..=top);
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    let mut subset = all[..size].to_vec();
    subset.sort_unstable();
    subset
}

const TOL: f64 = 1e-9;

/// A random instance whose restrictions commute and are free.
///
/// When no subset is accepted within [`REJECTION_BUDGET`] draws, the global
/// instance is returned (or a single point if the global one is too large),
/// with a notice.
pub fn random_instance(seed: u64, bounds: Bounds) -> Result<GeneratedInstance, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pair = global_pair(bounds, &mut rng)?;
    let n = pair.alpha.base().num_points();
    for attempt in 1..=REJECTION_BUDGET {
        let subset = random_subset(n, bounds.max_points, attempt, &mut rng);
        let alpha = pair.alpha.restrict(&subset)?;
        let beta = pair.beta.restrict(&subset)?;
        if bundle_commute(&alpha, &beta, TOL)?.is_none() && alpha.base().is_free() && beta.base().is_free() {
            return Ok(GeneratedInstance { seed, alpha, beta, superset_points: n, attempts: attempt, notice: None });
        }
    }
    let (alpha, beta, notice) = if n <= bounds.max_points {
        (pair.alpha, pair.beta, "rejection budget exhausted; emitted the global instance")
    } else {
        (
            pair.alpha.restrict(&[0])?,
            pair.beta.restrict(&[0])?,
            "rejection budget exhausted; emitted a single point of the superset",
        )
    };
    Ok(GeneratedInstance {
        seed,
        alpha,
        beta,
        superset_points: n,
        attempts: REJECTION_BUDGET,
        notice: Some(notice.into()),
    })
}

/// Supersets drawn by [`random_negative_instance`] before giving up.
pub const NEGATIVE_SUPERSETS: usize = 16;

/// A rejected subset of a random superset: restrictions that fail to commute.
///
/// Small supersets may have no such subset, so up to [`NEGATIVE_SUPERSETS`]
/// supersets are drawn in turn.
pub fn random_negative_instance(seed: u64, bounds: Bounds) -> Result<Option<GeneratedInstance>, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attempts = 0;
    for _ in 0..NEGATIVE_SUPERSETS {
        let pair = global_pair(bounds, &mut rng)?;
        let n = pair.alpha.base().num_points();
        for attempt in 1..=REJECTION_BUDGET / 4 {
            attempts += 1;
            let subset = random_subset(n, bounds.max_points, attempt, &mut rng);
            let alpha = pair.alpha.restrict(&subset)?;
            let beta = pair.beta.restrict(&subset)?;
            if bundle_commute(&alpha, &beta, TOL)?.is_some() {
                return Ok(Some(GeneratedInstance {
                    seed,
                    alpha,
                    beta,
                    superset_points: n,
                    attempts,
                    notice: Some("rejected subset: the restrictions do not commute".into()),
                }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partial_action::commute;

    #[test]
    fn bounds_parse() {
        assert_eq!("8,4,2".parse::<Bounds>().unwrap(), Bounds::default());
        assert!("8,4".parse::<Bounds>().is_err());
        assert!("0,1,1".parse::<Bounds>().is_err());
        assert_eq!(Bounds::default().to_string(), "8,4,2");
    }

    #[test]
    fn deterministic() {
        let b = Bounds::new(8, 4, 2).unwrap();
        let a = random_instance(1, b).unwrap().description().to_json();
        let c = random_instance(1, b).unwrap().description().to_json();
        assert_eq!(a, c);
        assert_ne!(a, random_instance(2, b).unwrap().description().to_json());
    }

    #[test]
    fn superset_actions_are_valid_free_and_commuting() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pair = global_pair(Bounds::default(), &mut rng).unwrap();
            assert!(pair.alpha.validate(1e-9).is_valid());
            assert!(pair.beta.validate(1e-9).is_valid());
            assert!(pair.alpha.base().is_free() && pair.beta.base().is_free());
            assert!(bundle_commute(&pair.alpha, &pair.beta, 1e-9).unwrap().is_none());
        }
    }

    #[test]
    fn emitted_instances_meet_the_contract() {
        let b = Bounds::default();
        for seed in 0..40 {
            let inst = random_instance(seed, b).unwrap();
            let (a, be) = (inst.alpha.base(), inst.beta.base());
            assert!(a.num_points() <= b.max_points);
            assert!(a.group().order() <= 4 && be.group().order() <= 4);
            assert!(inst.alpha.fiber_dims().iter().all(|&d| d <= 2));
            assert!(commute(a, be).unwrap().commute);
            assert!(a.is_free() && be.is_free());
            assert!(inst.alpha.validate(1e-9).is_valid() && inst.beta.validate(1e-9).is_valid());
            let loaded = inst.description().resolve(1e-9).unwrap();
            assert_eq!(loaded.action("alpha").unwrap().base(), a);
        }
    }

    #[test]
    fn negative_instances_do_not_commute() {
        for seed in 0..30 {
            let inst = random_negative_instance(seed, Bounds::default()).unwrap().expect("a rejected subset");
            assert!(bundle_commute(&inst.alpha, &inst.beta, 1e-9).unwrap().is_some());
        }
        assert!(random_negative_instance(0, Bounds::new(1, 4, 2).unwrap()).unwrap().is_none());
    }

    /// `H` swaps the two points globally while `K` only has its identity defined, or vice versa.
    fn has_e3_shape(inst: &GeneratedInstance) -> bool {
        let (a, b) = (inst.alpha.base(), inst.beta.base());
        let swaps = |p: &PartialAction| p.group().order() == 2 && p.is_global() && p.apply(1, 0) == Some(1);
        let idle = |p: &PartialAction| p.group().order() == 2 && p.domain(1).is_empty();
        a.num_points() == 2 && ((swaps(a) && idle(b)) || (swaps(b) && idle(a)))
    }

    #[test]
    fn small_bounds_reach_the_e3_shape() {
        let b = Bounds::new(2, 2, 1).unwrap();
        let seed = (0..500).find(|&s| has_e3_shape(&random_instance(s, b).unwrap()));
        assert!(seed.is_some());
    }
}
