//! Command dispatch and the batch stress runner behind the `padyn` binary.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::bundle::{bundle_commute, enveloping_bundle, induced_algebra_action, AlgebraPartialAction, BundleAction};
use crate::crossed_product::{partial_crossed_product, section_algebra_blocks, verify_enveloping_morita, CrossedProduct};
use crate::error::Error;
use crate::generator::{random_instance, Bounds};
use crate::imprimitivity::{symmetric_imprimitivity, CrossedProductSummary, ImprimitivityReport};
use crate::matrix_algebra::{morita_equivalent, BlockStructure};
use crate::partial_action::{quotient_action, PartialAction};
use crate::report::{digest, RunFailure, RunReport};
use crate::system::{LoadedSystem, SystemDescription, SystemError};

pub const DEFAULT_TOL: f64 = 1e-9;
/// Bound on bimodule residuals in the stress suite.
pub const STRESS_RESIDUAL_TOL: f64 = 1e-7;
/// Bound on the fiber round-trip residual of the globalization.
pub const ROUND_TRIP_TOL: f64 = 1e-10;

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Verified = 0,
    VerdictFalse = 1,
    InvalidInput = 2,
    Internal = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Validate,
    Globalize,
    Orbits,
    CrossedProduct,
    EnvelopingMorita,
    Imprimitivity,
    Stress,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Validate,
        Command::Globalize,
        Command::Orbits,
        Command::CrossedProduct,
        Command::EnvelopingMorita,
        Command::Imprimitivity,
        Command::Stress,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Globalize => "globalize",
            Command::Orbits => "orbits",
            Command::CrossedProduct => "crossed-product",
            Command::EnvelopingMorita => "enveloping-morita",
            Command::Imprimitivity => "imprimitivity",
            Command::Stress => "stress",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown command {s:?}")))
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub system: Option<PathBuf>,
    pub alpha: Option<String>,
    pub beta: Option<String>,
    pub tol: f64,
    pub seed: u64,
    pub count: usize,
    pub bounds: Bounds,
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            system: None,
            alpha: None,
            beta: None,
            tol: DEFAULT_TOL,
            seed: 0,
            count: 200,
            bounds: Bounds::default(),
            timing: false,
        }
    }
}

/// Exit status for a library error: unmet hypotheses are input problems,
/// numerical and consistency failures are internal.
pub fn classify(e: &Error) -> ExitStatus {
    match e {
        Error::Numerical(_) | Error::Assertion(_) | Error::NotInSubspace(_) => ExitStatus::Internal,
        _ => ExitStatus::InvalidInput,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidParameter(_) => "invalid_parameter",
        Error::InvalidGroup(_) => "invalid_group",
        Error::InvalidAction(_) => "invalid_action",
        Error::InvalidBundle(_) => "invalid_bundle",
        Error::NotCommuting(_) => "not_commuting",
        Error::NotFree { .. } => "not_free",
        Error::NotGlobal => "not_global",
        Error::PointMismatch => "point_mismatch",
        Error::NotInSubspace(_) => "not_in_subspace",
        Error::Numerical(_) => "numerical",
        Error::Assertion(_) => "assertion",
    }
}

struct Failure {
    status: ExitStatus,
    failure: RunFailure,
}

impl Failure {
    fn from_error(stage: &str, e: Error) -> Self {
        Failure {
            status: classify(&e),
            failure: RunFailure {
                stage: stage.into(),
                kind: error_kind(&e).into(),
                message: e.to_string(),
                witnesses: vec![e.to_string()],
            },
        }
    }

    fn from_system(e: SystemError) -> Self {
        let kind = match &e {
            SystemError::Io { .. } => "io",
            SystemError::Parse { .. } => "parse",
            SystemError::Resolve { .. } => "resolve",
            SystemError::Validation { .. } => "validation",
        };
        Failure {
            status: ExitStatus::InvalidInput,
            failure: RunFailure { stage: "load".into(), kind: kind.into(), message: e.to_string(), witnesses: e.witnesses() },
        }
    }

    fn usage(message: String) -> Self {
        Failure {
            status: ExitStatus::InvalidInput,
            failure: RunFailure { stage: "arguments".into(), kind: "usage".into(), message, witnesses: Vec::new() },
        }
    }
}

fn lift<T>(stage: &'static str, r: Result<T, Error>) -> Result<T, Failure> {
    r.map_err(|e| Failure::from_error(stage, e))
}

/// Runs `command` and returns its report, with `exit_code` filled in.
pub fn run(command: Command, opts: &RunOptions) -> RunReport {
    let start = Instant::now();
    let mut rr = RunReport::new(command.name(), opts.seed, opts.tol);
    let outcome = match command {
        Command::Stress => run_stress(opts, &mut rr),
        _ => load(opts, &mut rr).and_then(|sys| dispatch(command, &sys, opts, &mut rr)),
    };
    match outcome {
        Ok(verdict) => {
            rr.verdict = verdict;
            rr.exit_code = if verdict { ExitStatus::Verified } else { ExitStatus::VerdictFalse }.code();
        }
        Err(f) => {
            rr.verdict = false;
            rr.exit_code = f.status.code();
            rr.failure = Some(f.failure);
        }
    }
    if opts.timing {
        rr.wall_clock_seconds = Some(start.elapsed().as_secs_f64());
    }
    rr
}

fn load(opts: &RunOptions, rr: &mut RunReport) -> Result<LoadedSystem, Failure> {
    let path = opts.system.as_ref().ok_or_else(|| Failure::usage("--system is required".into()))?;
    let bytes = std::fs::read(path)
        .map_err(|source| Failure::from_system(SystemError::Io { path: path.clone(), source }))?;
    rr.input_digest = Some(digest(&bytes));
    let text = String::from_utf8_lossy(&bytes);
    let sd = SystemDescription::from_json(&text).map_err(Failure::from_system)?;
    rr.label = Some(sd.label.clone());
    sd.resolve(opts.tol).map_err(Failure::from_system)
}

fn named<'a>(sys: &'a LoadedSystem, flag: &str, name: Option<&String>) -> Result<&'a BundleAction, Failure> {
    let name = name.ok_or_else(|| Failure::usage(format!("--{flag} is required")))?;
    sys.action(name).map_err(Failure::from_system)
}

fn dispatch(command: Command, sys: &LoadedSystem, opts: &RunOptions, rr: &mut RunReport) -> Result<bool, Failure> {
    match command {
        Command::Validate => validate(sys, opts, rr),
        Command::Globalize => globalize(named(sys, "alpha", opts.alpha.as_ref())?, opts, rr),
        Command::Orbits => orbits(sys, opts, rr),
        Command::CrossedProduct => crossed_product(sys, opts, rr),
        Command::EnvelopingMorita => {
            let ba = named(sys, "alpha", opts.alpha.as_ref())?;
            let report = lift("enveloping_morita", verify_enveloping_morita(ba, opts.tol, opts.seed))?;
            rr.stage("enveloping_morita", &report);
            Ok(report.verified())
        }
        Command::Imprimitivity => {
            let alpha = named(sys, "alpha", opts.alpha.as_ref())?;
            let beta = named(sys, "beta", opts.beta.as_ref())?;
            let report = symmetric_imprimitivity(alpha, beta, opts.tol, opts.seed).map_err(|e| {
                let mut f = Failure::from_error(e.stage, e.source);
                f.failure.stage = e.stage.into();
                f
            })?;
            rr.hypotheses = Some(serde_json::to_value(&report.hypotheses).expect("serializes"));
            rr.stage("imprimitivity", &report);
            Ok(report.verified)
        }
        Command::Stress => unreachable!("stress does not load a system"),
    }
}

fn point_names(pa: &PartialAction, xs: &[usize]) -> Vec<String> {
    xs.iter().map(|&x| pa.point_name(x).to_string()).collect()
}

fn validate(sys: &LoadedSystem, opts: &RunOptions, rr: &mut RunReport) -> Result<bool, Failure> {
    for (name, ba) in &sys.actions {
        let base = ba.base();
        let report = ba.validate(opts.tol);
        let orbits = base.orbits();
        rr.stage(
            &format!("action.{name}"),
            json!({
                "group_order": ba.group().order(),
                "points": base.num_points(),
                "global": base.is_global(),
                "free": base.is_free(),
                "orbits": orbits.classes.iter().map(|c| point_names(base, c)).collect::<Vec<_>>(),
                "violations": report.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                "max_unitarity_residual": report.max_unitarity_residual,
                "max_composition_residual": report.max_composition_residual,
            }),
        );
    }
    if let (Some(a), Some(b)) = (opts.alpha.as_ref(), opts.beta.as_ref()) {
        let (alpha, beta) = (sys.action(a).map_err(Failure::from_system)?, sys.action(b).map_err(Failure::from_system)?);
        let witness = lift("commutation", bundle_commute(alpha, beta, opts.tol))?;
        rr.stage(
            "commutation",
            json!({ "commute": witness.is_none(), "witness": witness.as_ref().map(|w| w.to_string()) }),
        );
    }
    Ok(true)
}

fn globalize(ba: &BundleAction, opts: &RunOptions, rr: &mut RunReport) -> Result<bool, Failure> {
    let env = lift("globalization", enveloping_bundle(ba))?;
    let check = env.check(ba, opts.tol);
    let exact = env.base.restriction_matches(ba.base());
    let residual = env.round_trip_residual(ba);
    let ea = env.action.base();
    rr.stage(
        "globalization",
        json!({
            "points": ea.num_points(),
            "point_names": ea.points(),
            "embedding": point_names(ea, &env.base.embed),
            "fiber_dims": env.action.fiber_dims(),
            "global": ea.is_global(),
            "restriction_exact": exact,
            "round_trip_residual": residual,
            "check": check.as_ref().err().map(|e| e.to_string()),
        }),
    );
    Ok(check.is_ok() && exact && residual <= opts.tol)
}

fn orbits(sys: &LoadedSystem, opts: &RunOptions, rr: &mut RunReport) -> Result<bool, Failure> {
    let alpha = named(sys, "alpha", opts.alpha.as_ref())?;
    let base = alpha.base();
    let o = base.orbits();
    rr.stage(
        "orbits",
        json!({
            "classes": o.classes.iter().map(|c| point_names(base, c)).collect::<Vec<_>>(),
            "representatives": point_names(base, &o.representative),
            "stabilizers": (0..base.num_points()).map(|x| base.stabilizer(x)).collect::<Vec<_>>(),
            "free": base.is_free(),
        }),
    );
    if let Some(b) = opts.beta.as_ref() {
        let beta = sys.action(b).map_err(Failure::from_system)?;
        let q = lift("quotient", quotient_action(beta.base(), base))?;
        let qa = &q.action;
        rr.stage(
            "quotient",
            json!({
                "points": qa.num_points(),
                "point_names": qa.points(),
                "global": qa.is_global(),
                "free": qa.is_free(),
                "valid": qa.validate().is_valid(),
            }),
        );
        return Ok(qa.validate().is_valid());
    }
    Ok(true)
}

/// Blocks of `C₀(𝐁/G)` for a free action: one full matrix block per orbit.
fn orbit_space_blocks(ba: &BundleAction) -> Result<BlockStructure, Error> {
    let o = ba.base().orbits();
    let dims: Vec<usize> = o.representative.iter().map(|&x| ba.fiber_dim(x)).collect();
    section_algebra_blocks(&dims)
}

fn crossed_product(sys: &LoadedSystem, opts: &RunOptions, rr: &mut RunReport) -> Result<bool, Failure> {
    let alpha = named(sys, "alpha", opts.alpha.as_ref())?;
    let apa = match opts.beta.as_ref() {
        Some(b) => {
            let beta = sys.action(b).map_err(Failure::from_system)?;
            lift("induced_action", induced_algebra_action(alpha, beta, opts.tol))?
        }
        None => AlgebraPartialAction::on_sections(alpha),
    };
    let cp: CrossedProduct = lift("crossed_product", partial_crossed_product(&apa))?;
    let summary = CrossedProductSummary::of(&cp);
    let source = apa.source();
    let free = source.base().is_free();
    let mut verdict = cp.dim() == cp.expected_dim() && cp.decomposition.dimension_matches;
    let mut stage = json!({ "crossed_product": summary, "free": free });
    if free {
        let orbit_blocks = lift("orbit_space", orbit_space_blocks(source))?;
        let morita = morita_equivalent(cp.blocks(), &orbit_blocks);
        stage["orbit_space_blocks"] = json!(orbit_blocks);
        stage["morita_with_orbit_space"] = json!(morita);
        verdict &= morita;
    }
    rr.stage("crossed_product", stage);
    Ok(verdict)
}

/// Outcome of the pipeline on one generated instance.
#[derive(Clone, Debug, Serialize)]
pub struct StressRecord {
    pub seed: u64,
    pub points: usize,
    pub superset_points: usize,
    pub h_order: usize,
    pub k_order: usize,
    pub fiber_dims: Vec<usize>,
    pub attempts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notice: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks_a_k: Option<BlockStructure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks_a_h: Option<BlockStructure>,
    pub block_counts_match: bool,
    pub max_bimodule_residual: f64,
    pub bimodule_full: bool,
    pub restriction_exact: bool,
    pub round_trip_residual: f64,
    /// `Σ n_i² = dim` for all four crossed products.
    pub wedderburn_consistent: bool,
    pub pipeline_verified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl StressRecord {
    /// The stress criteria: equal block counts, small bimodule residuals and an
    /// exact globalization round trip.
    pub fn passed(&self) -> bool {
        self.error.is_none()
            && self.block_counts_match
            && self.max_bimodule_residual <= STRESS_RESIDUAL_TOL
            && self.bimodule_full
            && self.restriction_exact
            && self.round_trip_residual <= ROUND_TRIP_TOL
            && self.wedderburn_consistent
    }
}

fn wedderburn_consistent(report: &ImprimitivityReport) -> bool {
    [&report.a_k, &report.a_h, &report.g_k, &report.g_h].iter().all(|s| s.wedderburn_sum == s.dim)
}

/// Generates the instance for `seed` and runs the full pipeline on it.
pub fn stress_instance(seed: u64, bounds: Bounds, tol: f64) -> StressRecord {
    let inst = match random_instance(seed, bounds) {
        Ok(i) => i,
        Err(e) => {
            return StressRecord {
                seed,
                points: 0,
                superset_points: 0,
                h_order: 0,
                k_order: 0,
                fiber_dims: Vec::new(),
                attempts: 0,
                notice: None,
                blocks_a_k: None,
                blocks_a_h: None,
                block_counts_match: false,
                max_bimodule_residual: f64::INFINITY,
                bimodule_full: false,
                restriction_exact: false,
                round_trip_residual: f64::INFINITY,
                wedderburn_consistent: false,
                pipeline_verified: false,
                error: Some(format!("generator: {e}")),
            }
        }
    };
    let mut rec = StressRecord {
        seed,
        points: inst.alpha.base().num_points(),
        superset_points: inst.superset_points,
        h_order: inst.alpha.group().order(),
        k_order: inst.beta.group().order(),
        fiber_dims: inst.alpha.fiber_dims().to_vec(),
        attempts: inst.attempts,
        notice: inst.notice.clone(),
        blocks_a_k: None,
        blocks_a_h: None,
        block_counts_match: false,
        max_bimodule_residual: f64::INFINITY,
        bimodule_full: false,
        restriction_exact: false,
        round_trip_residual: f64::INFINITY,
        wedderburn_consistent: false,
        pipeline_verified: false,
        error: None,
    };
    match symmetric_imprimitivity(&inst.alpha, &inst.beta, tol, seed) {
        Ok(report) => {
            rec.block_counts_match = report.a_k.blocks.count() == report.a_h.blocks.count();
            rec.max_bimodule_residual = report.bimodule.max_residual();
            rec.bimodule_full = report.bimodule.full();
            rec.restriction_exact = report.envelope_restriction_exact;
            rec.round_trip_residual = report.envelope_round_trip_residual;
            rec.wedderburn_consistent = wedderburn_consistent(&report);
            rec.pipeline_verified = report.verified;
            rec.blocks_a_k = Some(report.a_k.blocks);
            rec.blocks_a_h = Some(report.a_h.blocks);
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

#[derive(Clone, Debug, Serialize)]
pub struct StressSummary {
    pub count: usize,
    pub passed: usize,
    pub failed_seeds: Vec<u64>,
    pub max_bimodule_residual: f64,
    pub max_round_trip_residual: f64,
}

/// Runs `count` instances with seeds `seed, seed + 1, …` in parallel.
pub fn stress(count: usize, seed: u64, bounds: Bounds, tol: f64) -> (Vec<StressRecord>, StressSummary) {
    let records: Vec<StressRecord> =
        (0..count as u64).into_par_iter().map(|i| stress_instance(seed.wrapping_add(i), bounds, tol)).collect();
    let failed_seeds: Vec<u64> = records.iter().filter(|r| !r.passed()).map(|r| r.seed).collect();
    let summary = StressSummary {
        count,
        passed: count - failed_seeds.len(),
        failed_seeds,
        max_bimodule_residual: records.iter().map(|r| r.max_bimodule_residual).fold(0.0, f64::max),
        max_round_trip_residual: records.iter().map(|r| r.round_trip_residual).fold(0.0, f64::max),
    };
    (records, summary)
}

fn run_stress(opts: &RunOptions, rr: &mut RunReport) -> Result<bool, Failure> {
    if opts.count == 0 {
        return Err(Failure::usage("--count must be positive".into()));
    }
    let (records, summary) = stress(opts.count, opts.seed, opts.bounds, opts.tol);
    rr.label = Some(format!("stress {} from seed {} with bounds {}", opts.count, opts.seed, opts.bounds));
    let ok = summary.passed == summary.count;
    rr.stage("summary", &summary);
    rr.stage("instances", &records);
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert!("frobnicate".parse::<Command>().is_err());
    }

    #[test]
    fn missing_system_is_a_usage_error() {
        let rr = run(Command::Validate, &RunOptions::default());
        assert_eq!(rr.exit_code, 2);
        assert_eq!(rr.failure.unwrap().kind, "usage");
    }

    #[test]
    fn stress_instances_pass() {
        let (records, summary) = stress(6, 100, Bounds::default(), DEFAULT_TOL);
        assert_eq!(records.len(), 6);
        assert_eq!(summary.passed, 6, "{records:#?}");
    }

    #[test]
    fn error_classification() {
        assert_eq!(classify(&Error::NotGlobal), ExitStatus::InvalidInput);
        assert_eq!(classify(&Error::Assertion("x".into())), ExitStatus::Internal);
    }
}
