//! Group structures over `{0, .., p-1}`, the experimental overlap scenarios,
//! group-sparse signal sampling, and the replication map.
//!
//! Indices are 0-based everywhere. A structure may leave coordinates
//! uncovered; those coordinates have infinite latent group norm and are
//! therefore forced to zero by every recovery routine.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng::{derive_seed, label, rng_from_seed};
use crate::Vector;

/// A collection of `M >= 1` non-empty index sets over an ambient dimension
/// `p`. Groups may overlap and may repeat.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawStructure", into = "RawStructure")]
pub struct GroupStructure {
    p: usize,
    groups: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct RawStructure {
    p: usize,
    groups: Vec<Vec<usize>>,
}

impl TryFrom<RawStructure> for GroupStructure {
    type Error = Error;

    fn try_from(raw: RawStructure) -> Result<Self> {
        GroupStructure::new(raw.p, raw.groups)
    }
}

impl From<GroupStructure> for RawStructure {
    fn from(g: GroupStructure) -> Self {
        RawStructure { p: g.p, groups: g.groups }
    }
}

impl GroupStructure {
    /// Builds a structure, sorting and deduplicating each group.
    pub fn new(p: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidParameter("ambient dimension p must be positive".into()));
        }
        if groups.is_empty() {
            return Err(Error::InvalidParameter("at least one group is required".into()));
        }
        let mut normalized = Vec::with_capacity(groups.len());
        for (gi, mut group) in groups.into_iter().enumerate() {
            group.sort_unstable();
            group.dedup();
            if group.is_empty() {
                return Err(Error::InvalidParameter(format!("group {gi} is empty")));
            }
            if let Some(&last) = group.last() {
                if last >= p {
                    return Err(Error::InvalidParameter(format!("group {gi} contains index {last} >= p = {p}")));
                }
            }
            normalized.push(group);
        }
        Ok(GroupStructure { p, groups: normalized })
    }

    /// `{0}, {1}, .., {p-1}`: the structure under which the latent group norm
    /// is the ℓ1 norm.
    pub fn singletons(p: usize) -> Result<Self> {
        GroupStructure::new(p, (0..p).map(|i| vec![i]).collect())
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group(&self, g: usize) -> &[usize] {
        &self.groups[g]
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    /// Largest group size `B`.
    pub fn max_group_size(&self) -> usize {
        self.groups.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Sum of group sizes, the dimension of the replicated space.
    pub fn total_size(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// Number of groups containing each coordinate.
    pub fn multiplicities(&self) -> Vec<usize> {
        let mut mult = vec![0; self.p];
        for g in &self.groups {
            for &i in g {
                mult[i] += 1;
            }
        }
        mult
    }

    /// `true` for coordinates contained in at least one group.
    pub fn cover_mask(&self) -> Vec<bool> {
        self.multiplicities().into_iter().map(|m| m > 0).collect()
    }

    pub fn is_disjoint(&self) -> bool {
        self.multiplicities().into_iter().all(|m| m <= 1)
    }

    /// Pairs `(first, later)` of groups with identical index sets.
    pub fn duplicate_groups(&self) -> Vec<(usize, usize)> {
        let mut dups = Vec::new();
        for i in 0..self.groups.len() {
            for j in (i + 1)..self.groups.len() {
                if self.groups[i] == self.groups[j] {
                    dups.push((i, j));
                }
            }
        }
        dups
    }

    /// Human readable warnings for legal but suspicious structures.
    pub fn validation_warnings(&self) -> Vec<String> {
        let mut warnings: Vec<String> =
            self.duplicate_groups().into_iter().map(|(i, j)| format!("groups {i} and {j} are identical")).collect();
        let uncovered = self.cover_mask().iter().filter(|c| !**c).count();
        if uncovered > 0 {
            warnings.push(format!("{uncovered} coordinate(s) are not covered by any group and are forced to zero"));
        }
        warnings
    }

    /// Groups sharing at least one index with `support`.
    pub fn groups_intersecting(&self, support: &[usize]) -> Vec<usize> {
        let set: BTreeSet<usize> = support.iter().copied().collect();
        (0..self.groups.len()).filter(|&g| self.groups[g].iter().any(|i| set.contains(i))).collect()
    }

    /// Euclidean norm of the restriction `u_G`.
    pub fn group_norm(&self, u: &Vector, g: usize) -> f64 {
        self.groups[g].iter().map(|&i| u[i] * u[i]).sum::<f64>().sqrt()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// The overlap configurations used in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// `M` consecutive blocks of size `B`.
    Disjoint,
    /// Consecutive blocks where neighbours share `overlap` indices.
    Chain,
    /// A common core of `B-1` indices plus one private index per group.
    NearComplete,
    /// Two near-complete families on disjoint cores, alternating by parity.
    Alternating,
    /// `M/2` disjoint blocks followed by groups drawn at random from the
    /// indices those blocks cover.
    RandomOverlap,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::Disjoint,
        ScenarioKind::Chain,
        ScenarioKind::NearComplete,
        ScenarioKind::Alternating,
        ScenarioKind::RandomOverlap,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ScenarioKind::Disjoint => "disjoint",
            ScenarioKind::Chain => "chain",
            ScenarioKind::NearComplete => "near_complete",
            ScenarioKind::Alternating => "alternating",
            ScenarioKind::RandomOverlap => "random_overlap",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scenario '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioParams {
    /// Indices shared by neighbouring groups in the chain scenario.
    pub overlap: usize,
    /// Seed for the random overlap scenario.
    pub seed: u64,
}

/// Builds the group structure for one of the experimental scenarios.
pub fn make_scenario(kind: ScenarioKind, m: usize, b: usize, params: ScenarioParams) -> Result<GroupStructure> {
    if m == 0 {
        return Err(Error::InvalidParameter("number of groups M must be >= 1".into()));
    }
    if b == 0 {
        return Err(Error::InvalidParameter("group size B must be >= 1".into()));
    }
    match kind {
        ScenarioKind::Disjoint => {
            let groups = (0..m).map(|g| (g * b..(g + 1) * b).collect()).collect();
            GroupStructure::new(m * b, groups)
        }
        ScenarioKind::Chain => {
            if params.overlap >= b {
                return Err(Error::InvalidParameter(format!(
                    "chain overlap {} must be smaller than group size {b}",
                    params.overlap
                )));
            }
            let stride = b - params.overlap;
            let p = m * b - (m - 1) * params.overlap;
            let groups = (0..m).map(|g| (g * stride..g * stride + b).collect()).collect();
            GroupStructure::new(p, groups)
        }
        ScenarioKind::NearComplete => {
            let core = b - 1;
            let groups = (0..m).map(|g| (0..core).chain(std::iter::once(core + g)).collect()).collect();
            GroupStructure::new(core + m, groups)
        }
        ScenarioKind::Alternating => {
            let core = b - 1;
            let cores = if m >= 2 { 2 } else { 1 };
            let private = cores * core;
            let groups = (0..m)
                .map(|g| {
                    let start = (g % 2) * core;
                    (start..start + core).chain(std::iter::once(private + g)).collect()
                })
                .collect();
            GroupStructure::new(private + m, groups)
        }
        ScenarioKind::RandomOverlap => {
            let fixed = (m / 2).max(1);
            let p = fixed * b;
            let mut rng = rng_from_seed(derive_seed(params.seed, &[label("random_overlap")]));
            let mut groups: Vec<Vec<usize>> = (0..fixed).map(|g| (g * b..(g + 1) * b).collect()).collect();
            for _ in fixed..m {
                groups.push(sample(&mut rng, p, b).into_vec());
            }
            GroupStructure::new(p, groups)
        }
    }
}

/// A set of active groups `G*` within a structure.
#[derive(Debug, Clone)]
pub struct ActiveSet<'a> {
    structure: &'a GroupStructure,
    active: Vec<usize>,
}

impl<'a> ActiveSet<'a> {
    pub fn new(structure: &'a GroupStructure, mut active: Vec<usize>) -> Result<Self> {
        active.sort_unstable();
        active.dedup();
        if let Some(&g) = active.iter().find(|&&g| g >= structure.num_groups()) {
            return Err(Error::InvalidParameter(format!(
                "active group {g} out of range (M = {})",
                structure.num_groups()
            )));
        }
        Ok(ActiveSet { structure, active })
    }

    /// `k` groups drawn uniformly without replacement.
    pub fn random(structure: &'a GroupStructure, k: usize, seed: u64) -> Result<Self> {
        let m = structure.num_groups();
        if k > m {
            return Err(Error::InvalidParameter(format!("k = {k} exceeds M = {m}")));
        }
        let mut rng = rng_from_seed(seed);
        ActiveSet::new(structure, sample(&mut rng, m, k).into_vec())
    }

    pub fn structure(&self) -> &'a GroupStructure {
        self.structure
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn k(&self) -> usize {
        self.active.len()
    }

    pub fn is_active(&self, g: usize) -> bool {
        self.active.binary_search(&g).is_ok()
    }

    pub fn inactive(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.structure.num_groups()).filter(move |&g| !self.is_active(g))
    }

    /// Sorted union `S` of the active groups.
    pub fn union_support(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.active.iter().flat_map(|&g| self.structure.group(g).iter().copied()).collect();
        set.into_iter().collect()
    }

    /// Indicator of `S` over `{0, .., p-1}`.
    pub fn support_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.structure.p()];
        for &g in &self.active {
            for &i in self.structure.group(g) {
                mask[i] = true;
            }
        }
        mask
    }
}

/// Distribution of the non-zero signal entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueLaw {
    /// Uniform on `[0, 1]`.
    Uniform01,
    /// Uniform on `[-1, 1]`.
    UniformSymmetric,
}

impl FromStr for ValueLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform01" | "uniform_0_1" => Ok(ValueLaw::Uniform01),
            "uniform_symmetric" | "uniform_pm1" => Ok(ValueLaw::UniformSymmetric),
            other => Err(Error::InvalidParameter(format!("unknown value law '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSample {
    pub x: Vector,
    /// Set when the active set is empty and `x` is identically zero.
    pub degenerate: bool,
}

/// Draws a signal whose entries on `S` are i.i.d. from `law` and zero elsewhere.
pub fn sample_signal(active: &ActiveSet<'_>, law: ValueLaw, seed: u64) -> SignalSample {
    let p = active.structure().p();
    let mut x = Vector::zeros(p);
    if active.k() == 0 {
        return SignalSample { x, degenerate: true };
    }
    let mut rng = rng_from_seed(seed);
    for i in active.union_support() {
        x[i] = match law {
            ValueLaw::Uniform01 => rng.random_range(0.0..=1.0),
            ValueLaw::UniformSymmetric => rng.random_range(-1.0..=1.0),
        };
    }
    SignalSample { x, degenerate: false }
}

/// Maps an overlapping structure onto a disjoint one by giving every group
/// its own copy of its coordinates.
///
/// Expanded coordinate `j` is a replica of source coordinate `index[j]`. Group
/// `g` owns the contiguous block `ranges[g]`, laid out in the group's sorted
/// index order.
#[derive(Debug, Clone)]
pub struct ReplicationMap {
    source: GroupStructure,
    ranges: Vec<Range<usize>>,
    index: Vec<usize>,
    multiplicity: Vec<usize>,
}

pub fn replicate(g: &GroupStructure) -> ReplicationMap {
    let mut ranges = Vec::with_capacity(g.num_groups());
    let mut index = Vec::with_capacity(g.total_size());
    for group in g.groups() {
        let start = index.len();
        index.extend_from_slice(group);
        ranges.push(start..index.len());
    }
    ReplicationMap { source: g.clone(), ranges, index, multiplicity: g.multiplicities() }
}

impl ReplicationMap {
    pub fn source(&self) -> &GroupStructure {
        &self.source
    }

    /// Expanded dimension `Σ_G |G|`.
    pub fn expanded_dim(&self) -> usize {
        self.index.len()
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    /// Source coordinate of every expanded coordinate.
    pub fn source_index(&self) -> &[usize] {
        &self.index
    }

    pub fn multiplicity(&self) -> &[usize] {
        &self.multiplicity
    }

    /// The partition of `[0, p̃)` into the replicated groups.
    pub fn expanded_structure(&self) -> GroupStructure {
        GroupStructure { p: self.expanded_dim(), groups: self.ranges.iter().map(|r| r.clone().collect()).collect() }
    }

    /// `R x̃`: sums replicas back onto the source coordinates.
    pub fn collapse(&self, expanded: &Vector) -> Vector {
        let mut x = Vector::zeros(self.source.p());
        for (j, &i) in self.index.iter().enumerate() {
            x[i] += expanded[j];
        }
        x
    }

    /// `Rᵀ x`: copies each source coordinate into all of its replicas.
    pub fn lift(&self, x: &Vector) -> Vector {
        Vector::from_iterator(self.index.len(), self.index.iter().map(|&i| x[i]))
    }

    /// Places per-group latent vectors (given on the group's sorted indices)
    /// into the expanded space.
    pub fn embed_latents(&self, latents: &[Vec<f64>]) -> Result<Vector> {
        check_dim(self.ranges.len(), latents.len())?;
        let mut out = Vector::zeros(self.expanded_dim());
        for (range, v) in self.ranges.iter().zip(latents) {
            check_dim(range.len(), v.len())?;
            for (j, &val) in range.clone().zip(v) {
                out[j] = val;
            }
        }
        Ok(out)
    }

    /// Splits an expanded vector into per-group latents on sorted indices.
    pub fn split(&self, expanded: &Vector) -> Vec<Vec<f64>> {
        self.ranges.iter().map(|r| r.clone().map(|j| expanded[j]).collect()).collect()
    }
}
