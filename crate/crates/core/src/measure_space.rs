//! Finite measure spaces, atom-generated filtrations and conditional
//! expectation.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Deref;

use crate::error::{Error, Result};
use crate::num::{self, Accumulator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MeasureKind {
    Probability,
    SigmaFinite,
}

/// Finite weighted point set. Points are `0..len()`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSpace {
    weights: Vec<f64>,
    kind: MeasureKind,
}

impl MeasureSpace {
    pub fn new(weights: Vec<f64>, kind: MeasureKind) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptySpace);
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidWeight { index, value });
            }
        }
        if kind == MeasureKind::Probability {
            let total = num::sum(weights.iter().copied());
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::NotProbability { total });
            }
        }
        Ok(Self { weights, kind })
    }

    pub fn probability(weights: Vec<f64>) -> Result<Self> {
        Self::new(weights, MeasureKind::Probability)
    }

    pub fn sigma_finite(weights: Vec<f64>) -> Result<Self> {
        Self::new(weights, MeasureKind::SigmaFinite)
    }

    /// Uniform probability on `n` points.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::probability(vec![1.0 / n as f64; n])
    }

    /// Normalizes arbitrary positive masses into a probability space.
    pub fn normalized(masses: &[f64]) -> Result<Self> {
        let total = num::sum(masses.iter().copied());
        if !(total > 0.0) {
            return Err(Error::EmptySpace);
        }
        Self::probability(masses.iter().map(|m| m / total).collect())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn total_mass(&self) -> f64 {
        num::sum(self.weights.iter().copied())
    }

    pub fn mass(&self, points: &[usize]) -> f64 {
        num::sum(points.iter().map(|&i| self.weights[i]))
    }

    /// `Σ w_i f_i`.
    pub fn integral(&self, f: &[f64]) -> f64 {
        num::sum(self.weights.iter().zip(f).map(|(w, v)| w * v))
    }

    /// `∫_A f` over a point list.
    pub fn integral_over(&self, f: &[f64], points: &[usize]) -> f64 {
        num::sum(points.iter().map(|&i| self.weights[i] * f[i]))
    }

    pub fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: f.len(),
            });
        }
        Ok(())
    }
}

/// Real function on the points of a space.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Func(Vec<f64>);

impl Func {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self(vec![c; n])
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> f64) -> Self {
        Self((0..n).map(f).collect())
    }

    pub(crate) fn raw(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn mul(&self, other: &Func) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
    }

    pub fn add(&self, other: &Func) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Func) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `max_i |self_i - other_i|`.
    pub fn max_diff(&self, other: &Func) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

impl Deref for Func {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Disjoint nonempty blocks covering `0..n_points`. Members of each block are
/// kept sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl Partition {
    pub fn new(n_points: usize, mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        let issues = partition_issues(n_points, 0, &blocks);
        if !issues.is_empty() {
            return Err(Error::InvalidFiltration(ValidationReport { issues }));
        }
        for b in &mut blocks {
            b.sort_unstable();
        }
        Ok(Self::assemble(n_points, blocks))
    }

    fn assemble(n_points: usize, blocks: Vec<Vec<usize>>) -> Self {
        let mut block_of = vec![0; n_points];
        for (b, members) in blocks.iter().enumerate() {
            for &i in members {
                block_of[i] = b;
            }
        }
        Self { blocks, block_of }
    }

    pub fn trivial(n_points: usize) -> Self {
        Self::assemble(n_points, vec![(0..n_points).collect()])
    }

    pub fn discrete(n_points: usize) -> Self {
        Self::assemble(n_points, (0..n_points).map(|i| vec![i]).collect())
    }

    /// Partition from a block label per point; labels are renumbered in order
    /// of first appearance.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map: Vec<Option<usize>> = Vec::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (i, &l) in labels.iter().enumerate() {
            if l >= map.len() {
                map.resize(l + 1, None);
            }
            let b = *map[l].get_or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[b].push(i);
        }
        Self::assemble(labels.len(), blocks)
    }

    pub fn n_points(&self) -> usize {
        self.block_of.len()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block(&self, b: usize) -> &[usize] {
        &self.blocks[b]
    }

    pub fn block_of(&self, point: usize) -> usize {
        self.block_of[point]
    }

    pub fn labels(&self) -> &[usize] {
        &self.block_of
    }

    pub fn is_discrete(&self) -> bool {
        self.blocks.len() == self.block_of.len()
    }

    /// Index of the block equal to `points` (any order), if any.
    pub fn find_block(&self, points: &[usize]) -> Option<usize> {
        let first = *points.first()?;
        if first >= self.n_points() {
            return None;
        }
        let b = self.block_of[first];
        let block = &self.blocks[b];
        if block.len() != points.len() {
            return None;
        }
        points
            .iter()
            .all(|&i| i < self.n_points() && self.block_of[i] == b)
            .then_some(b)
    }
}

/// One problem found by [`validate_filtration`]. Levels are filtration
/// indices `k`, not offsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Issue {
    NoLevels,
    EmptyBlock { level: i32, block: usize },
    OutOfRange { level: i32, block: usize, point: usize },
    Duplicate { level: i32, point: usize },
    Uncovered { level: i32, point: usize },
    Straddles { level: i32, block: usize, parents: Vec<usize> },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::NoLevels => write!(f, "no levels"),
            Issue::EmptyBlock { level, block } => write!(f, "level {level}: block {block} is empty"),
            Issue::OutOfRange { level, block, point } => {
                write!(f, "level {level}: block {block} names unknown point {point}")
            }
            Issue::Duplicate { level, point } => {
                write!(f, "level {level}: point {point} appears twice")
            }
            Issue::Uncovered { level, point } => {
                write!(f, "level {level}: point {point} is not covered")
            }
            Issue::Straddles { level, block, parents } => write!(
                f,
                "nestedness violation at level {level}: block {block} straddles parents {parents:?}"
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn nestedness_violations(&self) -> usize {
        self.issues
            .iter()
            .filter(|i| matches!(i, Issue::Straddles { .. }))
            .count()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return write!(f, "valid");
        }
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

fn partition_issues(n_points: usize, level: i32, blocks: &[Vec<usize>]) -> Vec<Issue> {
    let mut issues = Vec::new();
    let mut seen = vec![false; n_points];
    for (b, members) in blocks.iter().enumerate() {
        if members.is_empty() {
            issues.push(Issue::EmptyBlock { level, block: b });
        }
        for &point in members {
            if point >= n_points {
                issues.push(Issue::OutOfRange { level, block: b, point });
            } else if seen[point] {
                issues.push(Issue::Duplicate { level, point });
            } else {
                seen[point] = true;
            }
        }
    }
    for (point, s) in seen.iter().enumerate() {
        if !s {
            issues.push(Issue::Uncovered { level, point });
        }
    }
    issues
}

/// Lists nestedness violations, coverage gaps and empty blocks. An empty
/// report means the partitions form a filtration of `space`.
pub fn validate_filtration(
    space: &MeasureSpace,
    k_min: i32,
    partitions: &[Vec<Vec<usize>>],
) -> ValidationReport {
    validate_partitions(space.len(), k_min, partitions)
}

pub(crate) fn validate_partitions(
    n_points: usize,
    k_min: i32,
    partitions: &[Vec<Vec<usize>>],
) -> ValidationReport {
    let mut issues = Vec::new();
    if partitions.is_empty() {
        issues.push(Issue::NoLevels);
    }
    let mut prev_labels: Option<Vec<Option<usize>>> = None;
    for (idx, blocks) in partitions.iter().enumerate() {
        let level = k_min + idx as i32;
        issues.extend(partition_issues(n_points, level, blocks));
        let mut labels = vec![None; n_points];
        for (b, members) in blocks.iter().enumerate() {
            for &i in members {
                if i < n_points && labels[i].is_none() {
                    labels[i] = Some(b);
                }
            }
        }
        if let Some(prev) = &prev_labels {
            for (b, members) in blocks.iter().enumerate() {
                let mut parents: Vec<usize> = members
                    .iter()
                    .filter(|&&i| i < n_points)
                    .filter_map(|&i| prev[i])
                    .collect();
                parents.sort_unstable();
                parents.dedup();
                if parents.len() > 1 {
                    issues.push(Issue::Straddles { level, block: b, parents });
                }
            }
        }
        prev_labels = Some(labels);
    }
    ValidationReport { issues }
}

/// Nested partitions indexed by `k_min..=k_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct Filtration {
    k_min: i32,
    levels: Vec<Partition>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<Vec<usize>>>,
}

impl Filtration {
    pub fn new(n_points: usize, k_min: i32, partitions: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        let report = validate_partitions(n_points, k_min, &partitions);
        if !report.is_valid() {
            return Err(Error::InvalidFiltration(report));
        }
        let levels = partitions
            .into_iter()
            .map(|mut blocks| {
                for b in &mut blocks {
                    b.sort_unstable();
                }
                Partition::assemble(n_points, blocks)
            })
            .collect();
        Ok(Self::link(k_min, levels))
    }

    /// Builds from already-validated partitions, checking nestedness.
    pub fn from_partitions(k_min: i32, levels: Vec<Partition>) -> Result<Self> {
        let raw: Vec<Vec<Vec<usize>>> = levels.iter().map(|p| p.blocks.clone()).collect();
        let n = levels.first().map_or(0, Partition::n_points);
        let report = validate_partitions(n, k_min, &raw);
        if !report.is_valid() {
            return Err(Error::InvalidFiltration(report));
        }
        Ok(Self::link(k_min, levels))
    }

    fn link(k_min: i32, levels: Vec<Partition>) -> Self {
        let mut parents = vec![Vec::new()];
        let mut children = Vec::with_capacity(levels.len());
        for idx in 1..levels.len() {
            let coarse = &levels[idx - 1];
            let fine = &levels[idx];
            parents.push(
                fine.blocks
                    .iter()
                    .map(|members| coarse.block_of[members[0]])
                    .collect(),
            );
        }
        for idx in 0..levels.len() {
            let mut ch = vec![Vec::new(); levels[idx].len()];
            if idx + 1 < levels.len() {
                for (b, &p) in parents[idx + 1].iter().enumerate() {
                    ch[p].push(b);
                }
            }
            children.push(ch);
        }
        Self {
            k_min,
            levels,
            parents,
            children,
        }
    }

    /// Regular `branching`-ary tree with `depth` refinements over
    /// `branching^depth` points; level 0 is `{Ω}`, the last level singletons.
    pub fn uniform_tree(branching: usize, depth: usize) -> Self {
        let n = branching.pow(depth as u32);
        let levels = (0..=depth)
            .map(|k| {
                let size = branching.pow((depth - k) as u32);
                Partition::assemble(n, (0..n / size).map(|b| (b * size..(b + 1) * size).collect()).collect())
            })
            .collect();
        Self::link(0, levels)
    }

    pub fn n_points(&self) -> usize {
        self.levels[0].n_points()
    }

    pub fn k_min(&self) -> i32 {
        self.k_min
    }

    pub fn k_max(&self) -> i32 {
        self.k_min + self.levels.len() as i32 - 1
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Partition] {
        &self.levels
    }

    /// Partition at offset `idx = k - k_min`.
    pub fn at(&self, idx: usize) -> &Partition {
        &self.levels[idx]
    }

    /// Partition at filtration index `k`.
    pub fn level(&self, k: i32) -> Result<&Partition> {
        self.index_of(k).map(|idx| &self.levels[idx])
    }

    pub fn index_of(&self, k: i32) -> Result<usize> {
        if k < self.k_min || k > self.k_max() {
            return Err(Error::LevelOutOfRange { level: k });
        }
        Ok((k - self.k_min) as usize)
    }

    /// Parent block (at offset `idx - 1`) of block `b` at offset `idx >= 1`.
    pub fn parent(&self, idx: usize, b: usize) -> usize {
        self.parents[idx][b]
    }

    pub fn children(&self, idx: usize, b: usize) -> &[usize] {
        &self.children[idx][b]
    }

    pub fn is_separating(&self) -> bool {
        self.levels.last().is_some_and(Partition::is_discrete)
    }

    /// `k_min = 0` and level 0 is `{Ω}`.
    pub fn has_root(&self) -> bool {
        self.k_min == 0 && self.levels[0].len() == 1
    }

    pub fn check_space(&self, space: &MeasureSpace) -> Result<()> {
        if self.n_points() != space.len() {
            return Err(Error::MismatchedFiltration {
                expected: space.len(),
                found: self.n_points(),
            });
        }
        Ok(())
    }

    /// Whether `f` is constant on the blocks at offset `idx`, relative to
    /// `tol * max(1, max|f|)`.
    pub fn is_measurable(&self, f: &[f64], idx: usize, tol: f64) -> bool {
        let scale = f.iter().fold(1f64, |m, v| m.max(v.abs()));
        self.levels[idx].blocks.iter().all(|members| {
            let v0 = f[members[0]];
            members.iter().all(|&i| (f[i] - v0).abs() <= tol * scale)
        })
    }

    pub fn to_raw(&self) -> Vec<Vec<Vec<usize>>> {
        self.levels.iter().map(|p| p.blocks.clone()).collect()
    }
}

/// Weighted block averages of `f`, one per block.
pub fn block_means(weights: &[f64], partition: &Partition, f: &[f64]) -> Vec<f64> {
    partition
        .blocks
        .iter()
        .map(|members| block_mean(weights, members, f))
        .collect()
}

pub(crate) fn block_mean(weights: &[f64], members: &[usize], f: &[f64]) -> f64 {
    let v0 = f[members[0]];
    if members.iter().all(|&i| f[i] == v0) {
        return v0;
    }
    let mut num = Accumulator::new();
    let mut den = Accumulator::new();
    for &i in members {
        num.add(weights[i] * f[i]);
        den.add(weights[i]);
    }
    num.value() / den.value()
}

pub(crate) fn expand_means(partition: &Partition, means: &[f64]) -> Vec<f64> {
    partition.block_of.iter().map(|&b| means[b]).collect()
}

/// `E(f | σ(partition))`.
pub fn conditional_expectation(
    space: &MeasureSpace,
    partition: &Partition,
    f: &[f64],
) -> Result<Func> {
    space.check_len(f)?;
    if partition.n_points() != space.len() {
        return Err(Error::MismatchedFiltration {
            expected: space.len(),
            found: partition.n_points(),
        });
    }
    let means = block_means(space.weights(), partition, f);
    Ok(Func::raw(expand_means(partition, &means)))
}

/// Max over levels `k >= 1` and blocks `A` of `P(parent(A)) / P(A)`.
pub fn regularity_constant(space: &MeasureSpace, filt: &Filtration) -> Result<f64> {
    filt.check_space(space)?;
    if !filt.has_root() {
        return Err(Error::NoRootLevel);
    }
    let mut worst = 1f64;
    for idx in 1..filt.num_levels() {
        let coarse = filt.at(idx - 1);
        let fine = filt.at(idx);
        let coarse_mass: Vec<f64> = coarse.blocks.iter().map(|b| space.mass(b)).collect();
        for (b, members) in fine.blocks.iter().enumerate() {
            let ratio = coarse_mass[filt.parent(idx, b)] / space.mass(members);
            worst = worst.max(ratio);
        }
    }
    Ok(worst)
}

/// Conditional probability space on a block together with the traced
/// filtration.
#[derive(Clone, Debug, PartialEq)]
pub struct Restriction {
    pub space: MeasureSpace,
    pub filtration: Filtration,
    /// `points[j]` is the original id of restricted point `j`.
    pub points: Vec<usize>,
}

impl Restriction {
    pub fn restrict(&self, f: &[f64]) -> Func {
        Func::raw(self.points.iter().map(|&i| f[i]).collect())
    }
}

/// `(A, F^A, P_A)` with `P_A(B) = P(B)/P(A)` and `F^A_k` the trace of `F_{k+n}`.
pub fn restrict_space(
    space: &MeasureSpace,
    filt: &Filtration,
    level: i32,
    block: &[usize],
) -> Result<Restriction> {
    filt.check_space(space)?;
    let idx = filt.index_of(level)?;
    let b = filt
        .at(idx)
        .find_block(block)
        .ok_or(Error::NotABlock { level })?;
    let points = filt.at(idx).block(b).to_vec();
    let mut local = vec![usize::MAX; space.len()];
    for (j, &i) in points.iter().enumerate() {
        local[i] = j;
    }
    let total = space.mass(&points);
    let weights: Vec<f64> = points.iter().map(|&i| space.weight(i) / total).collect();
    let restricted = MeasureSpace::normalized(&weights)?;
    let mut levels = Vec::new();
    for part in &filt.levels[idx..] {
        let blocks: Vec<Vec<usize>> = part
            .blocks
            .iter()
            .filter(|m| local[m[0]] != usize::MAX)
            .map(|m| m.iter().map(|&i| local[i]).collect())
            .collect();
        levels.push(Partition::assemble(points.len(), blocks));
    }
    Ok(Restriction {
        space: restricted,
        filtration: Filtration::link(0, levels),
        points,
    })
}
