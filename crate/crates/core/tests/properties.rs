//! Property tests for the structural invariants of every layer.

use padyn::bundle::{
    enveloping_bundle, AlgebraPartialAction, BundleAction, InducedAlgebra,
};
use padyn::crossed_product::{convolve, involution, partial_crossed_product, random_element};
use padyn::generator::{random_instance, Bounds};
use padyn::group::FiniteGroup;
use padyn::imprimitivity::{symmetric_imprimitivity, verify_bimodule_axioms, build_bimodule};
use padyn::linalg::{c64, max_abs_diff, random_unitary, CMat, ONE, ZERO};
use padyn::matrix_algebra::{block_diagonal_algebra, is_positive, wedderburn, wedderburn_seeded};
use padyn::partial_action::{commute, enveloping, product_action, PartialAction};
use padyn::system::SystemDescription;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn group_strategy() -> impl Strategy<Value = FiniteGroup> {
    prop_oneof![
        (1usize..=7).prop_map(|n| FiniteGroup::cyclic(n).unwrap()),
        (1usize..=3, 1usize..=3)
            .prop_map(|(a, b)| FiniteGroup::cyclic(a).unwrap().direct_product(&FiniteGroup::cyclic(b).unwrap())),
    ]
}

/// A permutation of `0..n` whose cycle lengths divide `order`, from a shuffle and a cut sequence.
fn permutation(n: usize, order: usize, shuffle: &[usize], cuts: &[usize]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for (i, &s) in shuffle.iter().enumerate().take(n) {
        idx.swap(i, i + s % (n - i));
    }
    let lengths: Vec<usize> = (1..=order).filter(|d| order % d == 0).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let (mut i, mut k) = (0, 0);
    while i < n {
        let fitting: Vec<usize> = lengths.iter().copied().filter(|&d| i + d <= n).collect();
        let d = fitting[cuts.get(k).copied().unwrap_or(0) % fitting.len()];
        for j in 0..d {
            perm[idx[i + j]] = idx[i + (j + 1) % d];
        }
        i += d;
        k += 1;
    }
    perm
}

/// A global action of `Z_order` on `n` points, generated by one permutation.
fn cyclic_action() -> impl Strategy<Value = PartialAction> {
    (1usize..=5, 1usize..=8).prop_flat_map(|(order, n)| {
        (Just(order), Just(n), prop::collection::vec(0usize..8, n), prop::collection::vec(0usize..8, n)).prop_map(
            |(order, n, shuffle, cuts)| {
                let p = permutation(n, order, &shuffle, &cuts);
                PartialAction::global(FiniteGroup::cyclic(order).unwrap(), names(n), |t, mut x| {
                    for _ in 0..t {
                        x = p[x];
                    }
                    x
                })
                .unwrap()
            },
        )
    })
}

fn subset_of(n: usize, mask: u32) -> Vec<usize> {
    let s: Vec<usize> = (0..n).filter(|&x| mask >> x & 1 == 1).collect();
    if s.is_empty() {
        vec![0]
    } else {
        s
    }
}

fn bounds() -> Bounds {
    Bounds::new(6, 4, 2).unwrap()
}

fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// Translations of `Z_a × Z_b` on a rank-2 bundle with fiber maps `X^s` and `Z^t`,
/// so every matrix entry lies in {0, ±1}.
fn exact_pair(a: usize, b: usize) -> (BundleAction, BundleAction) {
    let n = a * b;
    let pts: Vec<String> = (0..n).map(|y| format!("{}-{}", y / b, y % b)).collect();
    let h = FiniteGroup::cyclic(a).unwrap();
    let k = FiniteGroup::cyclic(b).unwrap();
    let alpha = PartialAction::global(h.clone(), pts.clone(), |s, y| ((y / b + s) % a) * b + y % b).unwrap();
    let beta = PartialAction::global(k.clone(), pts, |t, y| (y / b) * b + (y % b + t) % b).unwrap();
    let power = |m: &CMat, e: usize, order: usize| {
        let e = if order % 2 == 0 { e % 2 } else { 0 };
        if e == 1 { m.clone() } else { CMat::identity(2, 2) }
    };
    let ua = (0..a).map(|s| (0..n).map(|_| Some(power(&pauli_x(), s, a))).collect()).collect();
    let ub = (0..b).map(|t| (0..n).map(|_| Some(power(&pauli_z(), t, b))).collect()).collect();
    (
        BundleAction::new(alpha, vec![2; n], ua).unwrap(),
        BundleAction::new(beta, vec![2; n], ub).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, .. ProptestConfig::default() })]

    #[test]
    fn group_axioms(g in group_strategy()) {
        let e = g.identity();
        for a in g.elements() {
            prop_assert_eq!(g.mul(e, a), a);
            prop_assert_eq!(g.mul(a, e), a);
            prop_assert_eq!(g.mul(a, g.inv(a)), e);
            for b in g.elements() {
                for c in g.elements() {
                    prop_assert_eq!(g.mul(g.mul(a, b), c), g.mul(a, g.mul(b, c)));
                }
            }
        }
        prop_assert!(g.validate().is_valid());
    }

    #[test]
    fn direct_product_is_associative_up_to_reindexing(
        a in group_strategy(), b in 1usize..=3, c in 1usize..=3,
    ) {
        let (gb, gc) = (FiniteGroup::cyclic(b).unwrap(), FiniteGroup::cyclic(c).unwrap());
        let left = a.direct_product(&gb).direct_product(&gc);
        let right = a.direct_product(&gb.direct_product(&gc));
        prop_assert_eq!(left.order(), right.order());
        // ((x, y), z) ↦ (x, (y, z)) is the identity on lexicographic indices.
        for x in left.elements() {
            for y in left.elements() {
                prop_assert_eq!(left.mul(x, y), right.mul(x, y));
            }
        }
    }

    #[test]
    fn restrictions_are_valid(pa in cyclic_action(), mask in any::<u32>()) {
        let sub = subset_of(pa.num_points(), mask);
        let r = pa.restrict(&sub).unwrap();
        prop_assert!(r.validate().is_valid());
        prop_assert_eq!(r.num_points(), sub.len());
    }

    #[test]
    fn commute_is_symmetric(
        pa in cyclic_action(), shuffle in prop::collection::vec(0usize..8, 8),
        cuts in prop::collection::vec(0usize..8, 8), order in 1usize..=4, mask in any::<u32>(),
    ) {
        let n = pa.num_points();
        let p = permutation(n, order, &shuffle, &cuts);
        let other = PartialAction::global(FiniteGroup::cyclic(order).unwrap(), names(n), |t, mut x| {
            for _ in 0..t { x = p[x]; }
            x
        }).unwrap();
        let sub = subset_of(n, mask);
        let (a, b) = (pa.restrict(&sub).unwrap(), other.restrict(&sub).unwrap());
        prop_assert_eq!(commute(&a, &b).unwrap().commute, commute(&b, &a).unwrap().commute);
    }

    #[test]
    fn envelope_preserves_freeness_and_orbits(pa in cyclic_action(), mask in any::<u32>()) {
        let r = pa.restrict(&subset_of(pa.num_points(), mask)).unwrap();
        let env = enveloping(&r);
        env.check(&r).unwrap();
        prop_assert!(env.restriction_matches(&r));
        prop_assert_eq!(env.env_action.is_free(), r.is_free());
        let (o, oe) = (r.orbits(), env.env_action.orbits());
        for x in 0..r.num_points() {
            for y in 0..r.num_points() {
                let same = o.class_of[x] == o.class_of[y];
                let same_env = oe.class_of[env.embed[x]] == oe.class_of[env.embed[y]];
                prop_assert_eq!(same, same_env);
            }
        }
        prop_assert_eq!(o.len(), oe.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, .. ProptestConfig::default() })]

    #[test]
    fn product_slices_recover_the_factors(seed in any::<u64>()) {
        let inst = random_instance(seed, bounds()).unwrap();
        let (a, b) = (inst.alpha.base(), inst.beta.base());
        let p = product_action(a, b).unwrap();
        let kk = b.group().order();
        for x in 0..a.num_points() {
            for s in a.group().elements() {
                prop_assert_eq!(p.apply(s * kk + b.group().identity(), x), a.apply(s, x));
            }
            for t in b.group().elements() {
                prop_assert_eq!(p.apply(a.group().identity() * kk + t, x), b.apply(t, x));
            }
        }
    }

    #[test]
    fn section_actions_satisfy_the_axioms(seed in any::<u64>()) {
        let inst = random_instance(seed, bounds()).unwrap();
        for ba in [&inst.alpha, &inst.beta] {
            let report = AlgebraPartialAction::on_sections(ba).validate(1e-9);
            prop_assert!(report.is_valid(), "{:?}", report.violations);
        }
    }

    #[test]
    fn induced_algebra_matches_the_orbit_bundle(seed in any::<u64>()) {
        let inst = random_instance(seed, bounds()).unwrap();
        let ba = &inst.alpha;
        let ind = InducedAlgebra::new(ba).unwrap();
        let o = ba.base().orbits();
        let expected: usize = o.representative.iter().map(|&x| ba.fiber_dim(x).pow(2)).sum();
        prop_assert_eq!(ind.dim(), expected);
        let iso = ind.verify_iso(ba);
        prop_assert!(iso.isometry_residual <= 1e-10, "{:?}", iso);
        prop_assert!(iso.max_residual() <= 1e-9, "{:?}", iso);
    }

    #[test]
    fn enveloping_bundle_round_trip(seed in any::<u64>()) {
        let inst = random_instance(seed, bounds()).unwrap();
        let env = enveloping_bundle(&inst.alpha).unwrap();
        env.check(&inst.alpha, 1e-9).unwrap();
        prop_assert!(env.round_trip_residual(&inst.alpha) <= 1e-10);
        prop_assert!(env.action.validate(1e-9).is_valid());
    }

    #[test]
    fn wedderburn_is_conjugation_invariant(
        dims in prop::collection::vec(1usize..=3, 1..=4), seed in any::<u64>(),
    ) {
        let a = block_diagonal_algebra(&dims);
        let d = wedderburn(&a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_unitary(a.ambient_dim(), &mut rng);
        let dc = wedderburn_seeded(&a.conjugate(&u), seed).unwrap();
        let mut sorted = dims.clone();
        sorted.sort_unstable();
        prop_assert_eq!(&d.blocks.block_dims, &sorted);
        prop_assert_eq!(&dc.blocks, &d.blocks);
        prop_assert_eq!(d.blocks.dimension(), a.dim());
        prop_assert_eq!(d.center_dim, d.blocks.count());
        prop_assert!(d.dimension_matches && dc.dimension_matches);
    }

    #[test]
    fn crossed_product_algebra_laws(seed in any::<u64>()) {
        let inst = random_instance(seed, bounds()).unwrap();
        let apa = AlgebraPartialAction::on_sections(&inst.alpha);
        let cp = partial_crossed_product(&apa).unwrap();
        prop_assert_eq!(cp.dim(), cp.ideal_dims.iter().sum::<usize>());
        prop_assert_eq!(cp.blocks().dimension(), cp.dim());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (
            random_element(&apa, &mut rng),
            random_element(&apa, &mut rng),
            random_element(&apa, &mut rng),
        );
        let rep = |x: &[padyn::bundle::Section]| cp.represent(x);
        let ab = convolve(&apa, &a, &b);
        prop_assert!(max_abs_diff(&rep(&ab), &(rep(&a) * rep(&b))) <= 1e-9);
        let lhs = convolve(&apa, &ab, &c);
        let rhs = convolve(&apa, &a, &convolve(&apa, &b, &c));
        prop_assert!(max_abs_diff(&rep(&lhs), &rep(&rhs)) <= 1e-9);
        let star = involution(&apa, &ab);
        let rev = convolve(&apa, &involution(&apa, &b), &involution(&apa, &a));
        prop_assert!(max_abs_diff(&rep(&star), &rep(&rev)) <= 1e-9);
        let pos = rep(&convolve(&apa, &involution(&apa, &a), &a));
        prop_assert!(is_positive(&pos, &cp.algebra, 1e-9).unwrap());
    }

    #[test]
    fn main_theorem_block_counts(seed in any::<u64>()) {
        let inst = random_instance(seed, bounds()).unwrap();
        let r = symmetric_imprimitivity(&inst.alpha, &inst.beta, 1e-9, seed).unwrap();
        prop_assert_eq!(r.a_k.blocks.count(), r.a_h.blocks.count());
        prop_assert!(r.descended_envelope_k.holds(1e-9) && r.descended_envelope_h.holds(1e-9));
        prop_assert!(r.bimodule.holds(1e-7), "{:?}", r.bimodule);
        prop_assert!(r.verified);
    }

    #[test]
    fn exact_entry_bimodules(a in prop::sample::select(vec![1usize, 2, 4]), b in prop::sample::select(vec![1usize, 2, 4])) {
        let (alpha, beta) = exact_pair(a, b);
        prop_assert!(alpha.validate(1e-12).is_valid() && beta.validate(1e-12).is_valid());
        let zb = build_bimodule(&alpha, &beta, 1e-9).unwrap();
        let report = verify_bimodule_axioms(&zb, 5);
        prop_assert!(report.max_residual() <= 1e-8, "{:?}", report.residuals);
        prop_assert!(report.full());
    }

    #[test]
    fn descriptions_round_trip(seed in any::<u64>()) {
        let inst = random_instance(seed, bounds()).unwrap();
        let sd = inst.description();
        let text = sd.to_json();
        let back = SystemDescription::from_json(&text).unwrap();
        prop_assert_eq!(&back, &sd);
        prop_assert_eq!(back.to_json(), text.clone());
        prop_assert_eq!(random_instance(seed, bounds()).unwrap().description().to_json(), text);
        let loaded = back.resolve(1e-9).unwrap();
        let (a, b) = (loaded.action("alpha").unwrap(), loaded.action("beta").unwrap());
        prop_assert!(a.base().is_free() && b.base().is_free());
        prop_assert!(commute(a.base(), b.base()).unwrap().commute);
        prop_assert_eq!(a.base(), inst.alpha.base());
    }
}

#[test]
fn phases_in_exact_instances_stay_exact() {
    let (alpha, _) = exact_pair(2, 2);
    for t in 0..2 {
        for x in 0..4 {
            let u = alpha.unitary(t, x).unwrap();
            assert!(u.iter().all(|z| [ZERO, ONE, -ONE, c64(0.0, 1.0), c64(0.0, -1.0)].contains(z)));
        }
    }
}
