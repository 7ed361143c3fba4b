//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use padyn::bundle::{AlgebraPartialAction, BundleAction};
use padyn::crossed_product::{partial_crossed_product, verify_enveloping_morita};
use padyn::generator::Bounds;
use padyn::harness::{stress, StressRecord, ROUND_TRIP_TOL, STRESS_RESIDUAL_TOL};
use padyn::imprimitivity::{symmetric_imprimitivity, CrossedProductSummary, AXIOMS};
use padyn::linalg::random_unitary;
use padyn::matrix_algebra::{block_diagonal_algebra, morita_equivalent, wedderburn, wedderburn_seeded, MatrixStarAlgebra};
use padyn::partial_action::{commute, CommuteWitness, PartialAction};
use padyn::system::load_system;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;
const BIMODULE_TOL: f64 = 1e-8;
const STRESS_COUNT: usize = 200;
const STRESS_SEED: u64 = 0;
const STRESS_BOUNDS: Bounds = Bounds { max_points: 8, max_group_order: 4, max_fiber_dim: 2 };
const CONJUGATION_SEED: u64 = 8;

fn fixture(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name].iter().collect()
}

fn action(file: &str, name: &str) -> BundleAction {
    load_system(&fixture(file), TOL).expect("fixture loads").action(name).expect("action exists").clone()
}

/// Results that later criteria reuse.
#[derive(Default)]
struct Shared {
    /// `(dim, Σ n_i²)` of every decomposition computed so far.
    decompositions: Vec<(String, usize, usize)>,
    /// Algebras used for the conjugation-invariance check.
    algebras: Vec<(String, MatrixStarAlgebra)>,
    stress: Vec<StressRecord>,
}

impl Shared {
    fn record(&mut self, name: &str, s: &CrossedProductSummary) {
        self.decompositions.push((name.into(), s.dim, s.wedderburn_sum));
    }
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed <= limit, format!("took {:.2} s, limit {:.0} s", elapsed.as_secs_f64(), limit.as_secs_f64()))
}

/// `Σ_t |X_t|` for a line bundle: the dimension of the partial crossed product.
fn domain_count(pa: &PartialAction) -> usize {
    pa.group().elements().map(|t| (0..pa.num_points()).filter(|&x| pa.in_domain(t, x)).count()).sum()
}

fn green_type(shared: &mut Shared) -> Check {
    let start = Instant::now();
    let e1 = action("e1.json", "alpha");
    let apa = AlgebraPartialAction::on_sections(&e1);
    let cp = partial_crossed_product(&apa).map_err(|e| e.to_string())?;
    let summary = CrossedProductSummary::of(&cp);
    let oracle = domain_count(e1.base());
    let orbits = e1.base().orbits();
    let orbit_algebra = block_diagonal_algebra(&vec![1; orbits.len()]);
    let orbit_blocks = wedderburn(&orbit_algebra).map_err(|e| e.to_string())?.blocks;
    let elapsed = start.elapsed();
    shared.record("E1 partial crossed product", &summary);
    shared.decompositions.push(("C(X/G) for E1".into(), orbit_algebra.dim(), orbit_blocks.dimension()));
    shared.algebras.push(("E1 partial crossed product".into(), cp.algebra.clone()));
    ensure(cp.dim() == 9 && oracle == 9, format!("dimension {} (domain count {oracle})", cp.dim()))?;
    ensure(cp.blocks().block_dims == [3], format!("blocks {:?}", cp.blocks().block_dims))?;
    ensure(orbit_blocks.block_dims == [1], format!("orbit space blocks {:?}", orbit_blocks.block_dims))?;
    ensure(morita_equivalent(cp.blocks(), &orbit_blocks), "not Morita equivalent")?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("E1: dim 9 (= Σ|X_t|), blocks [3] vs C(X/G) [1], Morita ({:.3} s)", elapsed.as_secs_f64()))
}

fn enveloping(shared: &mut Shared) -> Check {
    let start = Instant::now();
    let e1 = action("e1.json", "alpha");
    let r = verify_enveloping_morita(&e1, TOL, 1).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    shared.decompositions.push(("E1 corner".into(), r.corner_dim, r.corner_blocks.dimension()));
    shared.decompositions.push(("E1 enveloping crossed product".into(), r.global_dim, r.global_blocks.dimension()));
    ensure(r.corner_dim == 9 && r.expected_corner_dim == 9, format!("corner dimension {}", r.corner_dim))?;
    ensure(r.global_dim == 16 && r.ambient_dim == 16, format!("global dimension {} in M_{}", r.global_dim, r.ambient_dim))?;
    ensure(r.full && r.fullness_rank == 16, format!("fullness rank {}", r.fullness_rank))?;
    ensure(r.hereditary && r.central_support_full, "corner is not hereditary with full central support")?;
    ensure(r.morita && r.verified(), "Morita verdict false")?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!(
        "E1: corner dim 9 inside M_4 (dim 16), fullness rank 16, blocks {:?} vs {:?} ({:.3} s)",
        r.corner_blocks.block_dims,
        r.global_blocks.block_dims,
        elapsed.as_secs_f64()
    ))
}

fn raeburn_toy(shared: &mut Shared) -> Check {
    let start = Instant::now();
    let (h, k) = (action("e2.json", "h"), action("e2.json", "k"));
    let r = symmetric_imprimitivity(&h, &k, TOL, 2).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    for (name, s) in [("E2 A_K", &r.a_k), ("E2 A_H", &r.a_h), ("E2 G_K", &r.g_k), ("E2 G_H", &r.g_h)] {
        shared.record(name, s);
    }
    let b = &r.bimodule;
    let keys: Vec<&str> = b.residuals.keys().map(String::as_str).collect();
    let mut expected: Vec<&str> = AXIOMS.to_vec();
    expected.sort_unstable();
    ensure(keys == expected, "residual table does not match the axiom list")?;
    ensure(r.a_k.blocks.block_dims == [2], format!("blocks(A_K) {:?}", r.a_k.blocks.block_dims))?;
    ensure(r.a_h.blocks.block_dims == [2], format!("blocks(A_H) {:?}", r.a_h.blocks.block_dims))?;
    ensure(b.max_residual() <= BIMODULE_TOL, format!("max residual {:.3e}", b.max_residual()))?;
    ensure(
        b.dim_e == 4 && b.dim_f == 4 && b.left_fullness_rank == 4 && b.right_fullness_rank == 4,
        format!("dim E {}, dim F {}, ranks {}/{}", b.dim_e, b.dim_f, b.left_fullness_rank, b.right_fullness_rank),
    )?;
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!(
        "E2: blocks [2]/[2], max bimodule residual {:.1e} ≤ {BIMODULE_TOL:.0e}, fullness 4 = 4 ({:.3} s)",
        b.max_residual(),
        elapsed.as_secs_f64()
    ))
}

fn partial_main(shared: &mut Shared) -> Check {
    let start = Instant::now();
    let (h, k) = (action("e3.json", "h"), action("e3.json", "k"));
    ensure(!h.base().is_global() || !k.base().is_global(), "E3 should be genuinely partial")?;
    let r = symmetric_imprimitivity(&h, &k, TOL, 3).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    for (name, s) in [("E3 A_K", &r.a_k), ("E3 A_H", &r.a_h), ("E3 G_K", &r.g_k), ("E3 G_H", &r.g_h)] {
        shared.record(name, s);
    }
    ensure(r.a_k.blocks.block_dims == [1], format!("blocks(A_K) {:?}", r.a_k.blocks.block_dims))?;
    ensure(r.a_h.blocks.block_dims == [2], format!("blocks(A_H) {:?}", r.a_h.blocks.block_dims))?;
    ensure(r.morita_a_k_a_h, "Morita verdict false")?;
    ensure(
        r.descended_envelope_k.holds(TOL) && r.descended_envelope_h.holds(TOL),
        "descended action differs from the enveloping one",
    )?;
    ensure(r.verified, "pipeline not verified")?;
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!(
        "E3: blocks [1]/[2], counts 1 = 1, Morita, envelope comparison residual {:.1e} ({:.3} s)",
        r.descended_envelope_k.fiber_residual.max(r.descended_envelope_h.fiber_residual),
        elapsed.as_secs_f64()
    ))
}

/// First `(s, t)` where the two sets of the domain condition differ, by direct enumeration.
fn enumerate_domain_witness(a: &PartialAction, b: &PartialAction) -> Option<(usize, usize, BTreeSet<usize>, BTreeSet<usize>)> {
    let n = a.num_points();
    for s in a.group().elements() {
        for t in b.group().elements() {
            let si = a.group().inv(s);
            let ti = b.group().inv(t);
            let via_a: BTreeSet<usize> =
                (0..n).filter(|&x| a.in_domain(si, x) && b.in_domain(t, x)).filter_map(|x| a.apply(s, x)).collect();
            let via_b: BTreeSet<usize> =
                (0..n).filter(|&x| b.in_domain(ti, x) && a.in_domain(s, x)).filter_map(|x| b.apply(t, x)).collect();
            if via_a != via_b {
                return Some((s, t, via_a, via_b));
            }
        }
    }
    None
}

fn restriction_breaks_commutation(_: &mut Shared) -> Check {
    let start = Instant::now();
    let (h, k) = (action("e2.json", "h"), action("e2.json", "k"));
    ensure(commute(h.base(), k.base()).map_err(|e| e.to_string())?.commute, "E2 itself should commute")?;
    let keep: Vec<usize> = (0..4).filter(|&x| h.base().point_name(x) != "(1,1)").collect();
    let (a, b) = (h.base().restrict(&keep).map_err(|e| e.to_string())?, k.base().restrict(&keep).map_err(|e| e.to_string())?);
    let c = commute(&a, &b).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(!c.commute, "restriction still commutes")?;
    let (s, t, via_a, via_b) = enumerate_domain_witness(&a, &b).ok_or("enumeration finds no witness")?;
    let names = |set: &BTreeSet<usize>| set.iter().map(|&x| a.point_name(x).to_string()).collect::<Vec<_>>();
    match c.witness {
        Some(CommuteWitness::Domains { s: ws, t: wt, via_alpha, via_beta }) => {
            ensure((ws, wt) == (s, t), format!("witness ({ws},{wt}) but enumeration gives ({s},{t})"))?;
            ensure(via_alpha == names(&via_a) && via_beta == names(&via_b), "witness sets differ from enumeration")?;
            ensure(
                via_alpha == ["(1,0)"] && via_beta == ["(0,1)"],
                format!("sets {via_alpha:?} vs {via_beta:?}"),
            )?;
        }
        other => return Err(format!("unexpected witness {other:?}")),
    }
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("E2 without (1,1): witness (h,k) = ({s},{t}), {{(1,0)}} vs {{(0,1)}}, matches enumeration"))
}

fn stress_suite(shared: &mut Shared) -> Check {
    let start = Instant::now();
    let (records, summary) = stress(STRESS_COUNT, STRESS_SEED, STRESS_BOUNDS, TOL);
    let elapsed = start.elapsed();
    shared.stress = records;
    let recs = &shared.stress;
    ensure(recs.len() >= 200, format!("only {} instances", recs.len()))?;
    let bounded = recs.iter().all(|r| {
        r.points <= 8 && r.h_order <= 4 && r.k_order <= 4 && r.fiber_dims.iter().all(|&d| d <= 2)
    });
    ensure(bounded, "an instance exceeds the bounds")?;
    let errors: Vec<u64> = recs.iter().filter(|r| r.error.is_some()).map(|r| r.seed).collect();
    ensure(errors.is_empty(), format!("pipeline errors for seeds {errors:?}"))?;
    let count_fail: Vec<u64> = recs.iter().filter(|r| !r.block_counts_match).map(|r| r.seed).collect();
    ensure(count_fail.is_empty(), format!("block counts differ for seeds {count_fail:?}"))?;
    let resid_fail: Vec<u64> =
        recs.iter().filter(|r| r.max_bimodule_residual > STRESS_RESIDUAL_TOL).map(|r| r.seed).collect();
    ensure(resid_fail.is_empty(), format!("bimodule residual above {STRESS_RESIDUAL_TOL:.0e} for seeds {resid_fail:?}"))?;
    within(elapsed, Duration::from_secs(300))?;
    Ok(format!(
        "{} instances, block counts equal 100%, max bimodule residual {:.1e} ≤ {STRESS_RESIDUAL_TOL:.0e} ({:.1} s)",
        recs.len(),
        summary.max_bimodule_residual,
        elapsed.as_secs_f64()
    ))
}

fn round_trip(shared: &mut Shared) -> Check {
    let recs = &shared.stress;
    ensure(!recs.is_empty(), "stress suite did not run")?;
    let inexact: Vec<u64> = recs.iter().filter(|r| !r.restriction_exact).map(|r| r.seed).collect();
    ensure(inexact.is_empty(), format!("set-level mismatch for seeds {inexact:?}"))?;
    let worst = recs.iter().map(|r| r.round_trip_residual).fold(0.0, f64::max);
    ensure(worst <= ROUND_TRIP_TOL, format!("fiber residual {worst:.3e}"))?;
    Ok(format!(
        "{} / {} instances exact on points, max fiber residual {worst:.1e} ≤ {ROUND_TRIP_TOL:.0e}",
        recs.len(),
        recs.len()
    ))
}

fn wedderburn_soundness(shared: &mut Shared) -> Check {
    let bad: Vec<&str> =
        shared.decompositions.iter().filter(|(_, d, s)| d != s).map(|(n, _, _)| n.as_str()).collect();
    ensure(bad.is_empty(), format!("Σ n_i² ≠ dim for {bad:?}"))?;
    let stress_bad: Vec<u64> = shared.stress.iter().filter(|r| !r.wedderburn_consistent).map(|r| r.seed).collect();
    ensure(stress_bad.is_empty(), format!("Σ n_i² ≠ dim in stress seeds {stress_bad:?}"))?;

    let h = action("e2.json", "h");
    let e1 = action("e1.json", "alpha");
    let mut algebras = shared.algebras.clone();
    let e2_section = partial_crossed_product(&AlgebraPartialAction::on_sections(&h)).map_err(|e| e.to_string())?;
    algebras.push(("E2 section crossed product".into(), e2_section.algebra.clone()));
    algebras.push(("C(X) for E1".into(), block_diagonal_algebra(&vec![1; e1.base().num_points()])));
    algebras.push(("mixed blocks".into(), block_diagonal_algebra(&[1, 2, 2, 3])));
    let mut rng = ChaCha8Rng::seed_from_u64(CONJUGATION_SEED);
    for (name, a) in &algebras {
        let before = wedderburn(a).map_err(|e| e.to_string())?;
        let u = random_unitary(a.ambient_dim(), &mut rng);
        let after = wedderburn_seeded(&a.conjugate(&u), CONJUGATION_SEED).map_err(|e| e.to_string())?;
        ensure(before.blocks == after.blocks, format!("{name}: {:?} became {:?}", before.blocks, after.blocks))?;
        ensure(before.dimension_matches && after.dimension_matches, format!("{name}: Σ n_i² ≠ dim"))?;
    }
    Ok(format!(
        "Σ n_i² = dim in {} decompositions and {} stress instances; blocks unchanged under conjugation in {} algebras",
        shared.decompositions.len(),
        shared.stress.len(),
        algebras.len()
    ))
}

fn main() {
    type Criterion = (&'static str, fn(&mut Shared) -> Check);
    let criteria: [Criterion; 8] = [
        ("Green-type check", green_type),
        ("enveloping theorem", enveloping),
        ("Raeburn toy", raeburn_toy),
        ("genuinely partial main-theorem instance", partial_main),
        ("commutation not automatic under restriction", restriction_breaks_commutation),
        ("stress suite", stress_suite),
        ("globalization round trip", round_trip),
        ("Wedderburn soundness", wedderburn_soundness),
    ];
    let mut shared = Shared::default();
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(|| check(&mut shared)))
            .unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
