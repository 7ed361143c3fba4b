//! JSON system descriptions: named groups, a point set, fiber dimensions and
//! named bundle actions.
//!
//! ```json
//! {
//!   "format": "padyn-system/1",
//!   "label": "E1",
//!   "groups": { "Z4": { "cyclic": 4 } },
//!   "space": ["0", "1", "2"],
//!   "bundle": { "fibers": [1, 1, 1] },
//!   "actions": {
//!     "alpha": {
//!       "group": "Z4",
//!       "domains": [["0", "1", "2"], ["1", "2"], ["0", "2"], ["0", "1"]],
//!       "maps": [{"0": "0", "1": "1", "2": "2"}, {"0": "1", "1": "2"}, {"0": "2", "2": "0"}, {"1": "0", "2": "1"}]
//!     }
//!   }
//! }
//! ```
//!
//! `domains[t]` lists `X_t` and `maps[t]` sends each point of `X_{t⁻¹}` to its
//! image. Unitaries are `{ "t", "point", "matrix" }` entries with complex
//! entries as `[re, im]`; entries left out default to the identity.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::BundleAction;
use crate::group::FiniteGroup;
use crate::linalg::{c64, max_abs_diff, identity, CMat};
use crate::partial_action::PartialAction;

/// Value of the top-level `format` field.
pub const FORMAT: &str = "padyn-system/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDescription {
    pub format: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notice: Option<String>,
    pub groups: BTreeMap<String, GroupSpec>,
    pub space: Vec<String>,
    pub bundle: BundleSpec,
    pub actions: BTreeMap<String, ActionSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupSpec {
    Cyclic(usize),
    Table(Vec<Vec<usize>>),
    /// Direct product of previously named groups, indexed lexicographically.
    Product(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleSpec {
    pub fibers: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSpec {
    pub group: String,
    pub domains: Vec<Vec<String>>,
    pub maps: Vec<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unitaries: Vec<UnitarySpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitarySpec {
    pub t: usize,
    pub point: String,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{field}: {message}")]
    Resolve { field: String, message: String },
    #[error("{field}: {} violation(s), first: {}", witnesses.len(), witnesses.first().map(String::as_str).unwrap_or("?"))]
    Validation { field: String, witnesses: Vec<String> },
}

impl SystemError {
    fn resolve(field: impl Into<String>, message: impl Into<String>) -> Self {
        SystemError::Resolve { field: field.into(), message: message.into() }
    }

    /// Individual violations, or the message itself for non-validation errors.
    pub fn witnesses(&self) -> Vec<String> {
        match self {
            SystemError::Validation { witnesses, .. } => witnesses.clone(),
            other => vec![other.to_string()],
        }
    }
}

/// A description with every group and action resolved and validated.
#[derive(Clone, Debug)]
pub struct LoadedSystem {
    pub description: SystemDescription,
    pub groups: BTreeMap<String, FiniteGroup>,
    pub actions: BTreeMap<String, BundleAction>,
}

impl LoadedSystem {
    pub fn action(&self, name: &str) -> Result<&BundleAction, SystemError> {
        self.actions.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.actions.keys().map(String::as_str).collect();
            SystemError::resolve("actions", format!("no action named {name:?} (known: {})", known.join(", ")))
        })
    }
}

impl SystemDescription {
    pub fn from_json(text: &str) -> Result<Self, SystemError> {
        serde_json::from_str(text).map_err(|e| SystemError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("descriptions serialize");
        s.push('\n');
        s
    }

    /// Describes bundle actions that share one bundle.
    ///
    /// Every action gets its own group entry, named `G_<action>`.
    pub fn from_actions(label: &str, seed: Option<u64>, actions: &[(&str, &BundleAction)]) -> Self {
        let first = actions.first().expect("at least one action").1;
        let space = first.base().points().to_vec();
        let mut groups = BTreeMap::new();
        let mut specs = BTreeMap::new();
        for &(name, ba) in actions {
            let gname = format!("G_{name}");
            groups.insert(gname.clone(), GroupSpec::Table(ba.group().table().to_vec()));
            specs.insert(name.to_string(), ActionSpec::of(&gname, ba));
        }
        SystemDescription {
            format: FORMAT.into(),
            label: label.into(),
            seed,
            notice: None,
            groups,
            space,
            bundle: BundleSpec { fibers: first.fiber_dims().to_vec() },
            actions: specs,
        }
    }

    /// Resolves all references and validates every payload.
    pub fn resolve(&self, tol: f64) -> Result<LoadedSystem, SystemError> {
        if self.format != FORMAT {
            return Err(SystemError::resolve("format", format!("expected {FORMAT:?}, found {:?}", self.format)));
        }
        let groups = self.resolve_groups()?;
        if self.space.is_empty() {
            return Err(SystemError::resolve("space", "the point set is empty"));
        }
        let mut seen = BTreeSet::new();
        for (i, p) in self.space.iter().enumerate() {
            if !seen.insert(p) {
                return Err(SystemError::resolve(format!("space[{i}]"), format!("duplicate point {p:?}")));
            }
        }
        if self.bundle.fibers.len() != self.space.len() {
            return Err(SystemError::resolve(
                "bundle.fibers",
                format!("{} fiber dimensions for {} points", self.bundle.fibers.len(), self.space.len()),
            ));
        }
        if let Some(i) = self.bundle.fibers.iter().position(|&n| n == 0) {
            return Err(SystemError::resolve(format!("bundle.fibers[{i}]"), "fiber dimension 0"));
        }
        let mut actions = BTreeMap::new();
        for (name, spec) in &self.actions {
            let ba = self.resolve_action(name, spec, &groups, tol)?;
            actions.insert(name.clone(), ba);
        }
        Ok(LoadedSystem { description: self.clone(), groups, actions })
    }

    fn resolve_groups(&self) -> Result<BTreeMap<String, FiniteGroup>, SystemError> {
        let mut out: BTreeMap<String, FiniteGroup> = BTreeMap::new();
        let mut pending: Vec<(&String, &GroupSpec)> = self.groups.iter().collect();
        // Products may refer to groups defined under later keys.
        while !pending.is_empty() {
            let before = pending.len();
            let mut rest = Vec::new();
            for (name, spec) in pending {
                let field = format!("groups.{name}");
                let group = match spec {
                    GroupSpec::Cyclic(n) => {
                        Some(FiniteGroup::cyclic(*n).map_err(|e| SystemError::resolve(&field, e.to_string()))?)
                    }
                    GroupSpec::Table(t) => Some(
                        FiniteGroup::from_table(t.clone()).map_err(|e| SystemError::resolve(&field, e.to_string()))?,
                    ),
                    GroupSpec::Product(factors) => {
                        for f in factors {
                            if !self.groups.contains_key(f) {
                                return Err(SystemError::resolve(&field, format!("unknown group id {f:?}")));
                            }
                            if f == name {
                                return Err(SystemError::resolve(&field, "a product cannot contain itself"));
                            }
                        }
                        if factors.iter().all(|f| out.contains_key(f)) {
                            Some(factors.iter().fold(FiniteGroup::trivial(), |acc, f| acc.direct_product(&out[f])))
                        } else {
                            None
                        }
                    }
                };
                match group {
                    Some(g) => {
                        out.insert(name.clone(), g);
                    }
                    None => rest.push((name, spec)),
                }
            }
            if rest.len() == before {
                return Err(SystemError::resolve(format!("groups.{}", rest[0].0), "cyclic product definitions"));
            }
            pending = rest;
        }
        Ok(out)
    }

    fn resolve_action(
        &self,
        name: &str,
        spec: &ActionSpec,
        groups: &BTreeMap<String, FiniteGroup>,
        tol: f64,
    ) -> Result<BundleAction, SystemError> {
        let field = format!("actions.{name}");
        let group = groups
            .get(&spec.group)
            .ok_or_else(|| SystemError::resolve(format!("{field}.group"), format!("unknown group id {:?}", spec.group)))?;
        let g = group.order();
        let n = self.space.len();
        let index: BTreeMap<&str, usize> = self.space.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
        let lookup = |f: &str, p: &str| {
            index.get(p).copied().ok_or_else(|| SystemError::resolve(f, format!("unknown point {p:?}")))
        };
        if spec.domains.len() != g || spec.maps.len() != g {
            return Err(SystemError::resolve(
                &field,
                format!("expected {g} domains and {g} maps, found {} and {}", spec.domains.len(), spec.maps.len()),
            ));
        }
        let mut domains = vec![vec![false; n]; g];
        let mut maps = vec![vec![None; n]; g];
        for t in 0..g {
            for p in &spec.domains[t] {
                domains[t][lookup(&format!("{field}.domains[{t}]"), p)?] = true;
            }
            for (src, dst) in &spec.maps[t] {
                let f = format!("{field}.maps[{t}].{src}");
                maps[t][lookup(&f, src)?] = Some(lookup(&f, dst)?);
            }
        }
        let base = PartialAction::from_parts(group.clone(), self.space.clone(), domains, maps)
            .map_err(|e| SystemError::resolve(&field, e.to_string()))?;
        let report = base.validate();
        if !report.is_valid() {
            return Err(SystemError::Validation {
                field,
                witnesses: report.violations.iter().map(|v| v.to_string()).collect(),
            });
        }
        let dims = &self.bundle.fibers;
        let mut unitaries: Vec<Vec<Option<CMat>>> = group
            .elements()
            .map(|t| (0..n).map(|x| base.apply(t, x).map(|_| identity(dims[x]))).collect())
            .collect();
        for (i, u) in spec.unitaries.iter().enumerate() {
            let f = format!("{field}.unitaries[{i}]");
            if u.t >= g {
                return Err(SystemError::resolve(&f, format!("group element {} out of range", u.t)));
            }
            let x = lookup(&f, &u.point)?;
            let rows = u.matrix.len();
            if u.matrix.iter().any(|r| r.len() != rows) {
                return Err(SystemError::resolve(&f, "matrix is not square"));
            }
            let m = CMat::from_fn(rows, rows, |r, c| c64(u.matrix[r][c][0], u.matrix[r][c][1]));
            if base.apply(u.t, x).is_none() {
                return Err(SystemError::Validation {
                    field: f,
                    witnesses: vec![format!("unitary given for (t={}, x={}) outside the domain", u.t, u.point)],
                });
            }
            unitaries[u.t][x] = Some(m);
        }
        let ba = BundleAction::new(base, dims.clone(), unitaries)
            .map_err(|e| SystemError::resolve(&field, e.to_string()))?;
        let report = ba.validate(tol);
        if !report.is_valid() {
            return Err(SystemError::Validation {
                field,
                witnesses: report.violations.iter().map(|v| v.to_string()).collect(),
            });
        }
        Ok(ba)
    }
}

impl ActionSpec {
    /// Payload for `ba`; identity unitaries and the identity element's entries are left out.
    pub fn of(group: &str, ba: &BundleAction) -> Self {
        let base = ba.base();
        let e = ba.group().identity();
        let domains = ba
            .group()
            .elements()
            .map(|t| base.domain(t).into_iter().map(|x| base.point_name(x).to_string()).collect())
            .collect();
        let maps = ba
            .group()
            .elements()
            .map(|t| {
                (0..base.num_points())
                    .filter_map(|x| base.apply(t, x).map(|y| (base.point_name(x).to_string(), base.point_name(y).to_string())))
                    .collect()
            })
            .collect();
        let mut unitaries = Vec::new();
        for t in ba.group().elements().filter(|&t| t != e) {
            for x in 0..base.num_points() {
                if let Some(u) = ba.unitary(t, x) {
                    if max_abs_diff(u, &identity(u.nrows())) == 0.0 {
                        continue;
                    }
                    let matrix = (0..u.nrows()).map(|r| (0..u.ncols()).map(|c| [u[(r, c)].re, u[(r, c)].im]).collect()).collect();
                    unitaries.push(UnitarySpec { t, point: base.point_name(x).to_string(), matrix });
                }
            }
        }
        ActionSpec { group: group.to_string(), domains, maps, unitaries }
    }
}

/// Reads, parses, resolves and validates a system file.
pub fn load_system(path: &Path, tol: f64) -> Result<LoadedSystem, SystemError> {
    let text = std::fs::read_to_string(path).map_err(|source| SystemError::Io { path: path.to_path_buf(), source })?;
    SystemDescription::from_json(&text)?.resolve(tol)
}
