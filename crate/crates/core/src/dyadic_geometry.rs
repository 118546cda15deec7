//! Quasi-metric measure spaces, δ-nets, dyadic cube systems and adjacent
//! families of systems on finite point sets.
//!
//! Balls are open: `B(x, r) = {y : d(x, y) < r}`. A ball on a finite space is
//! determined by its point set, so sup-type quantities range over the finite
//! family `B(x_i, d(x_i, x_j))` together with the centers' singletons.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measure_space::{Filtration, MeasureSpace};
use crate::num::{self, Accumulator};

/// Exhaustive triple scans are used up to this many points.
pub const EXHAUSTIVE_LIMIT: usize = 512;

/// Finite quasi-metric space with a positive measure.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiMetricSpace {
    n: usize,
    dim: Option<usize>,
    coords: Vec<f64>,
    dist: Vec<f64>,
    weights: Vec<f64>,
    a0: f64,
    /// Per point, all point ids sorted by `(d(x, ·), id)`.
    sorted: Vec<Vec<usize>>,
    /// Per point, prefix sums of weights along `sorted`.
    prefix: Vec<Vec<f64>>,
}

impl QuasiMetricSpace {
    /// Euclidean points given as rows of coordinates.
    pub fn from_coords(coords: &[Vec<f64>], weights: Vec<f64>, a0: f64) -> Result<Self> {
        let n = coords.len();
        let dim = coords.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::InvalidMetric {
                reason: "points need at least one coordinate".into(),
            });
        }
        let mut flat = Vec::with_capacity(n * dim);
        for (i, row) in coords.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::LengthMismatch { expected: dim, found: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index: i });
            }
            flat.extend_from_slice(row);
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = euclid(&flat[i * dim..(i + 1) * dim], &flat[j * dim..(j + 1) * dim]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Self::assemble(n, Some(dim), flat, dist, weights, a0)
    }

    /// Points given by a full symmetric distance matrix.
    pub fn from_matrix(matrix: &[Vec<f64>], weights: Vec<f64>, a0: f64) -> Result<Self> {
        let n = matrix.len();
        let mut dist = Vec::with_capacity(n * n);
        for row in matrix {
            if row.len() != n {
                return Err(Error::LengthMismatch { expected: n, found: row.len() });
            }
            dist.extend_from_slice(row);
        }
        for i in 0..n {
            for j in 0..n {
                let d = dist[i * n + j];
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::InvalidMetric {
                        reason: format!("d({i}, {j}) = {d} is not a finite nonnegative number"),
                    });
                }
                if d != dist[j * n + i] {
                    return Err(Error::InvalidMetric {
                        reason: format!("d({i}, {j}) differs from d({j}, {i})"),
                    });
                }
            }
            if dist[i * n + i] != 0.0 {
                return Err(Error::InvalidMetric { reason: format!("d({i}, {i}) is not zero") });
            }
        }
        Self::assemble(n, None, Vec::new(), dist, weights, a0)
    }

    /// Like [`from_matrix`](Self::from_matrix) but merges points at distance
    /// zero into their smallest-index representative, adding their weights.
    /// Returns the merged space and the representative index of every input
    /// point.
    pub fn merged(matrix: &[Vec<f64>], weights: Vec<f64>, a0: f64) -> Result<(Self, Vec<usize>)> {
        let n = matrix.len();
        if weights.len() != n {
            return Err(Error::LengthMismatch { expected: n, found: weights.len() });
        }
        let mut rep = vec![usize::MAX; n];
        let mut keep = Vec::new();
        for i in 0..n {
            if rep[i] != usize::MAX {
                continue;
            }
            rep[i] = keep.len();
            for j in i + 1..n {
                if rep[j] == usize::MAX && matrix[i].get(j) == Some(&0.0) {
                    rep[j] = keep.len();
                }
            }
            keep.push(i);
        }
        let sub: Vec<Vec<f64>> = keep
            .iter()
            .map(|&i| keep.iter().map(|&j| matrix[i].get(j).copied().unwrap_or(f64::NAN)).collect())
            .collect();
        let mut w = vec![0.0; keep.len()];
        for (i, &r) in rep.iter().enumerate() {
            w[r] += weights[i];
        }
        Ok((Self::from_matrix(&sub, w, a0)?, rep))
    }

    fn assemble(
        n: usize,
        dim: Option<usize>,
        coords: Vec<f64>,
        dist: Vec<f64>,
        weights: Vec<f64>,
        a0: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        if weights.len() != n {
            return Err(Error::LengthMismatch { expected: n, found: weights.len() });
        }
        for (index, &value) in weights.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidWeight { index, value });
            }
        }
        if !(a0.is_finite() && a0 >= 1.0) {
            return Err(Error::InvalidParameter { name: "A0", value: a0 });
        }
        for i in 0..n {
            for j in i + 1..n {
                if dist[i * n + j] == 0.0 {
                    return Err(Error::InvalidMetric {
                        reason: format!("distinct points {i} and {j} are at distance zero; merge them"),
                    });
                }
            }
        }
        let mut sorted = Vec::with_capacity(n);
        let mut prefix = Vec::with_capacity(n);
        for x in 0..n {
            let row = &dist[x * n..(x + 1) * n];
            let mut ids: Vec<usize> = (0..n).collect();
            ids.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
            let mut acc = Accumulator::new();
            let mut pre = Vec::with_capacity(n + 1);
            pre.push(0.0);
            for &y in &ids {
                acc.add(weights[y]);
                pre.push(acc.value());
            }
            sorted.push(ids);
            prefix.push(pre);
        }
        let space = Self { n, dim, coords, dist, weights, a0, sorted, prefix };
        let observed = space.quasi_triangle_constant(0);
        if observed > a0 * (1.0 + 1e-12) {
            return Err(Error::InvalidMetric {
                reason: format!("quasi-triangle constant {observed} exceeds declared A0 = {a0}"),
            });
        }
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    /// Coordinates of point `i`, when the space is Euclidean.
    pub fn coords(&self, i: usize) -> Option<&[f64]> {
        self.dim.map(|d| &self.coords[i * d..(i + 1) * d])
    }

    #[inline]
    pub fn d(&self, x: usize, y: usize) -> f64 {
        self.dist[x * self.n + y]
    }

    /// The σ-finite measure space carrying the same weights.
    pub fn measure_space(&self) -> MeasureSpace {
        MeasureSpace::sigma_finite(self.weights.clone()).expect("weights validated at construction")
    }

    pub fn total_mass(&self) -> f64 {
        self.prefix[0][self.n]
    }

    pub fn diameter(&self) -> f64 {
        (0..self.n).map(|x| self.d(x, self.sorted[x][self.n - 1])).fold(0.0, f64::max)
    }

    /// Smallest positive distance (zero for a single point).
    pub fn separation(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (0..self.n).map(|x| self.d(x, self.sorted[x][1])).fold(f64::INFINITY, f64::min)
    }

    /// Number of points in the open ball `B(x, r)`.
    pub fn ball_count(&self, x: usize, r: f64) -> usize {
        let row = &self.dist[x * self.n..(x + 1) * self.n];
        self.sorted[x].partition_point(|&y| row[y] < r)
    }

    /// Points of `B(x, r)` sorted by distance from `x`.
    pub fn ball(&self, x: usize, r: f64) -> &[usize] {
        &self.sorted[x][..self.ball_count(x, r)]
    }

    /// `μ(B(x, r))`.
    pub fn ball_mass(&self, x: usize, r: f64) -> f64 {
        self.prefix[x][self.ball_count(x, r)]
    }

    /// Points sorted by distance from `x`, ties by id.
    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.sorted[x]
    }

    /// Prefix masses along [`neighbors`](Self::neighbors); `len() + 1` entries.
    pub fn neighbor_masses(&self, x: usize) -> &[f64] {
        &self.prefix[x]
    }

    /// Distance from a cube center to point `y`.
    pub fn center_distance(&self, center: &Center, y: usize) -> f64 {
        match center {
            Center::Point(z) => self.d(*z, y),
            Center::Coords(c) => euclid(c, self.coords(y).expect("coordinate centers need coordinates")),
        }
    }

    fn centers_distance(&self, a: &Center, b: &Center) -> f64 {
        match (a, b) {
            (Center::Point(x), Center::Point(y)) => self.d(*x, *y),
            (Center::Coords(x), Center::Coords(y)) => euclid(x, y),
            (Center::Point(x), c @ Center::Coords(_)) | (c @ Center::Coords(_), Center::Point(x)) => {
                self.center_distance(c, *x)
            }
        }
    }

    /// `max d(x,y) / (d(x,z) + d(z,y))` over triples: exhaustive up to
    /// [`EXHAUSTIVE_LIMIT`] points, otherwise over `samples` random triples
    /// per point drawn from `seed`.
    fn quasi_triangle_constant(&self, seed: u64) -> f64 {
        let n = self.n;
        let mut best = 1.0f64;
        if n <= EXHAUSTIVE_LIMIT {
            for x in 0..n {
                let rx = &self.dist[x * n..(x + 1) * n];
                for y in x + 1..n {
                    let ry = &self.dist[y * n..(y + 1) * n];
                    let mut m = f64::INFINITY;
                    for z in 0..n {
                        m = m.min(rx[z] + ry[z]);
                    }
                    // z = x or z = y gives d(x, y) itself, so m ≤ d(x, y).
                    if m > 0.0 {
                        best = best.max(rx[y] / m);
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..64 * n {
                let x = rng.random_range(0..n);
                let y = rng.random_range(0..n);
                let z = rng.random_range(0..n);
                let m = self.d(x, z) + self.d(z, y);
                if m > 0.0 {
                    best = best.max(self.d(x, y) / m);
                }
            }
        }
        best
    }
}

#[inline]
fn euclid(a: &[f64], b: &[f64]) -> f64 {
    num::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Observed geometric constants of a space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceConstants {
    /// Quasi-triangle constant.
    pub a0: f64,
    /// Doubling exponent: `max log₂(μB(x,2r)/μB(x,r))`.
    pub c_mu: f64,
    /// Most half-radius balls a greedy cover of one ball needed.
    pub a1: f64,
}

/// Estimates `A0`, `Cμ` and `A1`.
///
/// `Cμ` is exact: on each interval of radii where `μB(x, r)` is constant the
/// ratio is largest at the right end, so the scan runs over `r = d(x, y)`.
/// `A1` uses greedy covers of up to 16 radii per center.
pub fn estimate_constants(space: &QuasiMetricSpace, seed: u64) -> SpaceConstants {
    let n = space.n;
    let a0 = space.quasi_triangle_constant(seed);
    let mut c_mu = 0.0f64;
    for x in 0..n {
        let ids = &space.sorted[x];
        let pre = &space.prefix[x];
        let mut far = 0;
        for j in 1..n {
            let r = space.d(x, ids[j]);
            if r == space.d(x, ids[j - 1]) {
                continue;
            }
            // μB(x, r) with r = d(x, ids[j]) counts the first j points.
            while far < n && space.d(x, ids[far]) < 2.0 * r {
                far += 1;
            }
            c_mu = c_mu.max(num::log2(pre[far] / pre[j]));
        }
    }
    let mut a1 = 1usize;
    for x in 0..n {
        let radii: Vec<f64> = {
            let mut all: Vec<f64> = space.sorted[x][1..].iter().map(|&y| space.d(x, y)).collect();
            all.dedup();
            let step = all.len().div_ceil(16).max(1);
            all.into_iter().step_by(step).collect()
        };
        for r in radii {
            let r = num::next_up(r);
            let members = space.ball(x, r);
            let mut covered = vec![false; members.len()];
            let mut count = 0;
            for i in 0..members.len() {
                if covered[i] {
                    continue;
                }
                count += 1;
                for (j, c) in covered.iter_mut().enumerate() {
                    if space.d(members[i], members[j]) < r / 2.0 {
                        *c = true;
                    }
                }
            }
            a1 = a1.max(count);
        }
    }
    SpaceConstants { a0, c_mu, a1: a1 as f64 }
}

/// Maximal `r`-separated subset chosen greedily in `order` (input order when
/// `None`). Every point lies within distance `< r` of the net.
pub fn greedy_net(space: &QuasiMetricSpace, r: f64, order: Option<&[usize]>) -> Vec<usize> {
    let identity: Vec<usize>;
    let order = match order {
        Some(o) => o,
        None => {
            identity = (0..space.n).collect();
            &identity
        }
    };
    extend_net(space, Vec::new(), r, order)
}

fn extend_net(space: &QuasiMetricSpace, mut net: Vec<usize>, r: f64, order: &[usize]) -> Vec<usize> {
    let mut near = vec![f64::INFINITY; space.n];
    for &z in &net {
        for (y, m) in near.iter_mut().enumerate() {
            *m = m.min(space.d(z, y));
        }
    }
    for &p in order {
        if near[p] >= r {
            net.push(p);
            for (y, m) in near.iter_mut().enumerate() {
                *m = m.min(space.d(p, y));
            }
        }
    }
    net
}

/// Where a cube is anchored: a point of the space or, for Euclidean grids,
/// the geometric midpoint of the box.
#[derive(Clone, Debug, PartialEq)]
pub enum Center {
    Point(usize),
    Coords(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cube {
    pub center: Center,
    /// Sorted member point ids.
    pub members: Vec<usize>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Largest distance between two members.
    pub diameter: f64,
}

/// Constants a dyadic system is certified against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubeConstants {
    pub delta: f64,
    pub c0: f64,
    pub big_c0: f64,
    pub c1: f64,
    pub big_c1: f64,
}

impl CubeConstants {
    /// Constants for the cube construction: `c1 = c0/(3A0²)`, `C1 = 2A0C0`.
    pub fn from_params(a0: f64, delta: f64, c0: f64, big_c0: f64) -> Self {
        Self {
            delta,
            c0,
            big_c0,
            c1: c0 / (3.0 * a0 * a0),
            big_c1: 2.0 * a0 * big_c0,
        }
    }

    /// Grid boxes of side `2^{-k}` with midpoints as centers. The inner and
    /// separation radii are half the sharp ones so that points on a box
    /// face, whose side is decided by rounding, cannot trip the checks.
    pub fn grid() -> Self {
        Self {
            delta: 0.5,
            c0: 0.5,
            big_c0: 1.0,
            c1: 0.25,
            big_c1: 1.0,
        }
    }

    fn scale(&self, k: i32) -> f64 {
        num::powf(self.delta, k as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SystemKind {
    /// Cubes grown from nested δ-nets of the space.
    Nets { seed: Option<u64>, attempt: usize },
    /// Dyadic boxes of `[0,1)^dim` shifted by `(-1)^k t_i/3 · 2^{-k}` per axis.
    ShiftedGrid { shift: Vec<u8> },
}

/// Nested cube partitions indexed by `k_min..=k_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicSystem {
    pub kind: SystemKind,
    pub constants: CubeConstants,
    k_min: i32,
    levels: Vec<Vec<Cube>>,
    labels: Vec<Vec<usize>>,
}

impl DyadicSystem {
    /// Assembles a system from per-level cubes (members, centers, parents),
    /// filling child links, labels and diameters.
    pub fn from_levels(
        space: &QuasiMetricSpace,
        kind: SystemKind,
        constants: CubeConstants,
        k_min: i32,
        levels: Vec<Vec<(Center, Vec<usize>, Option<usize>)>>,
    ) -> Result<Self> {
        let n = space.len();
        let mut cubes: Vec<Vec<Cube>> = Vec::with_capacity(levels.len());
        let mut labels = Vec::with_capacity(levels.len());
        for (idx, level) in levels.into_iter().enumerate() {
            let mut label = vec![usize::MAX; n];
            let mut built = Vec::with_capacity(level.len());
            for (c, (center, mut members, parent)) in level.into_iter().enumerate() {
                members.sort_unstable();
                for &m in &members {
                    if m >= n {
                        return Err(Error::PointOutOfRange { point: m });
                    }
                    label[m] = c;
                }
                if let Some(p) = parent {
                    if idx == 0 || p >= cubes[idx - 1].len() {
                        return Err(Error::InvalidParameter { name: "parent", value: p as f64 });
                    }
                }
                let diameter = set_diameter(space, &members);
                built.push(Cube { center, members, parent, children: Vec::new(), diameter });
            }
            if idx > 0 {
                for (c, cube) in built.iter().enumerate() {
                    if let Some(p) = cube.parent {
                        cubes[idx - 1][p].children.push(c);
                    }
                }
            }
            cubes.push(built);
            labels.push(label);
        }
        if cubes.is_empty() {
            return Err(Error::InvalidFiltration(crate::measure_space::ValidationReport {
                issues: vec![crate::measure_space::Issue::NoLevels],
            }));
        }
        Ok(Self { kind, constants, k_min, levels: cubes, labels })
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

    pub fn n_points(&self) -> usize {
        self.labels[0].len()
    }

    /// Cubes at offset `idx` from `k_min`.
    pub fn at(&self, idx: usize) -> &[Cube] {
        &self.levels[idx]
    }

    pub fn level(&self, k: i32) -> Result<&[Cube]> {
        Ok(&self.levels[self.index_of(k)?])
    }

    pub fn index_of(&self, k: i32) -> Result<usize> {
        if k < self.k_min || k > self.k_max() {
            return Err(Error::LevelOutOfRange { level: k });
        }
        Ok((k - self.k_min) as usize)
    }

    /// Cube at offset `idx` containing `point`.
    pub fn cube_of(&self, idx: usize, point: usize) -> usize {
        self.labels[idx][point]
    }

    pub fn labels(&self, idx: usize) -> &[usize] {
        &self.labels[idx]
    }

    /// Member lists per level, the raw form of the induced filtration.
    pub fn partitions(&self) -> Vec<Vec<Vec<usize>>> {
        self.levels
            .iter()
            .map(|level| level.iter().map(|c| c.members.clone()).collect())
            .collect()
    }
}

fn set_diameter(space: &QuasiMetricSpace, members: &[usize]) -> f64 {
    let mut d = 0.0f64;
    for (i, &a) in members.iter().enumerate() {
        for &b in &members[i + 1..] {
            d = d.max(space.d(a, b));
        }
    }
    d
}

/// Parameters of the net-based cube construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DyadicParams {
    pub delta: f64,
    pub c0: f64,
    pub big_c0: f64,
    pub k_min: i32,
    pub k_max: i32,
}

impl DyadicParams {
    /// `c0 = C0 = 1` with the largest `δ = 1/(12A0³)` allowed by the gate and
    /// a level range from one cube to singletons.
    pub fn auto(space: &QuasiMetricSpace) -> Self {
        let a0 = space.a0();
        let delta = 1.0 / (12.0 * a0 * a0 * a0);
        let (k_min, k_max) = level_range(space, delta, 1.0);
        Self { delta, c0: 1.0, big_c0: 1.0, k_min, k_max }
    }

    /// Same as [`auto`](Self::auto) but with `δ = 1/(96A0⁶)` as required for
    /// adjacent families.
    pub fn auto_adjacent(space: &QuasiMetricSpace) -> Self {
        let a0 = space.a0();
        let delta = 1.0 / (96.0 * num::powf(a0, 6.0));
        let (k_min, k_max) = level_range(space, delta, 1.0);
        Self { delta, c0: 1.0, big_c0: 1.0, k_min, k_max }
    }
}

/// Levels from the last `k` with `c0 δ^k` above the diameter (a single
/// center) to the first with `c0 δ^k` at most the separation (all points are
/// centers).
pub fn level_range(space: &QuasiMetricSpace, delta: f64, c0: f64) -> (i32, i32) {
    let diam = space.diameter();
    let sep = space.separation();
    let mut k_min = 0i32;
    while c0 * num::powf(delta, k_min as f64) <= diam {
        k_min -= 1;
    }
    while k_min < 0 && c0 * num::powf(delta, (k_min + 1) as f64) > diam {
        k_min += 1;
    }
    let mut k_max = k_min;
    if space.len() > 1 {
        while c0 * num::powf(delta, k_max as f64) > sep {
            k_max += 1;
        }
    }
    (k_min, k_max)
}

fn check_cube_params(a0: f64, p: &DyadicParams) -> Result<()> {
    if !(p.delta > 0.0 && p.delta < 1.0) {
        return Err(Error::InvalidParameter { name: "delta", value: p.delta });
    }
    if !(p.c0 > 0.0 && p.c0.is_finite()) {
        return Err(Error::InvalidParameter { name: "c0", value: p.c0 });
    }
    if !(p.big_c0 >= p.c0 && p.big_c0.is_finite()) {
        return Err(Error::InvalidParameter { name: "C0", value: p.big_c0 });
    }
    if p.k_max < p.k_min {
        return Err(Error::InvalidParameter { name: "k_max", value: p.k_max as f64 });
    }
    let lhs = 12.0 * a0 * a0 * a0 * p.big_c0 * p.delta;
    if lhs > p.c0 {
        return Err(Error::ParameterGate { rule: "12 A0^3 C0 delta <= c0", lhs, rhs: p.c0 });
    }
    Ok(())
}

/// Retries after the first construction, each with a freshly shuffled order.
pub const MAX_ATTEMPTS: usize = 16;

/// Dyadic cubes from nested δ-nets.
///
/// Level `k` centers extend the level `k-1` centers greedily at separation
/// `c0 δ^k`. Each center picks as parent the closest center one level up
/// (itself when it already was one), every point joins its closest center at
/// the finest level, and cubes are the resulting descendant sets. The first
/// attempt uses the input order (or the `seed` shuffle); when exhaustive
/// verification finds a violation the order is reshuffled.
pub fn build_dyadic_system(space: &QuasiMetricSpace, params: &DyadicParams, seed: Option<u64>) -> Result<DyadicSystem> {
    check_cube_params(space.a0(), params)?;
    let mut order: Vec<usize> = (0..space.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
    if seed.is_some() {
        order.shuffle(&mut rng);
    }
    let mut last = 0;
    for attempt in 0..MAX_ATTEMPTS {
        if attempt > 0 {
            order.shuffle(&mut rng);
        }
        let system = nets_system(space, params, &order, SystemKind::Nets { seed, attempt })?;
        let violations = verify_system(space, &system);
        if violations.is_empty() {
            return Ok(system);
        }
        last = violations.len();
    }
    Err(Error::ConstructionFailed { attempts: MAX_ATTEMPTS, violations: last })
}

fn nets_system(space: &QuasiMetricSpace, p: &DyadicParams, order: &[usize], kind: SystemKind) -> Result<DyadicSystem> {
    let constants = CubeConstants::from_params(space.a0(), p.delta, p.c0, p.big_c0);
    let levels = (p.k_max - p.k_min + 1) as usize;
    let mut nets: Vec<Vec<usize>> = Vec::with_capacity(levels);
    for idx in 0..levels {
        let r = p.c0 * constants.scale(p.k_min + idx as i32);
        let seed = nets.last().cloned().unwrap_or_default();
        nets.push(extend_net(space, seed, r, order));
    }
    // parents[idx][c]: index in nets[idx - 1] of the parent of nets[idx][c].
    let mut parents: Vec<Vec<usize>> = vec![Vec::new()];
    for idx in 1..levels {
        let coarse = &nets[idx - 1];
        parents.push(nets[idx].iter().map(|&z| closest(space, coarse, z)).collect());
    }
    let finest = &nets[levels - 1];
    // Cube label of every point at every level, fine to coarse.
    let mut labels = vec![vec![0usize; space.len()]; levels];
    for x in 0..space.len() {
        labels[levels - 1][x] = closest(space, finest, x);
    }
    for idx in (0..levels - 1).rev() {
        for x in 0..space.len() {
            labels[idx][x] = parents[idx + 1][labels[idx + 1][x]];
        }
    }
    let mut out = Vec::with_capacity(levels);
    for idx in 0..levels {
        let mut members = vec![Vec::new(); nets[idx].len()];
        for x in 0..space.len() {
            members[labels[idx][x]].push(x);
        }
        out.push(
            members
                .into_iter()
                .enumerate()
                .map(|(c, m)| (Center::Point(nets[idx][c]), m, (idx > 0).then(|| parents[idx][c])))
                .collect(),
        );
    }
    DyadicSystem::from_levels(space, kind, constants, p.k_min, out)
}

/// Index in `centers` of the center closest to `x`, ties by index.
fn closest(space: &QuasiMetricSpace, centers: &[usize], x: usize) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &z) in centers.iter().enumerate() {
        let d = space.d(z, x);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// One failed cube-system property.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Unassigned { k: i32, point: usize },
    Mislabeled { k: i32, point: usize },
    EmptyCube { k: i32, cube: usize },
    NotNested { k: i32, cube: usize },
    /// A point of `B(z, c1 δ^k)` outside the cube.
    InnerBall { k: i32, cube: usize, point: usize },
    /// A member outside `B(z, C1 δ^k)`.
    OuterBall { k: i32, cube: usize, point: usize },
    Separation { k: i32, a: usize, b: usize, distance: f64 },
    Coverage { k: i32, point: usize, distance: f64 },
    /// A point of the child's outer ball outside the parent's outer ball.
    BallNesting { k: i32, cube: usize, point: usize },
}

/// Exhaustive check of partition, nestedness, sandwich balls, center
/// separation, coverage and outer-ball nesting on every level.
pub fn verify_system(space: &QuasiMetricSpace, system: &DyadicSystem) -> Vec<Violation> {
    let n = space.len();
    let c = system.constants;
    let mut out = Vec::new();
    for idx in 0..system.num_levels() {
        let k = system.k_min + idx as i32;
        let scale = c.scale(k);
        let cubes = &system.levels[idx];
        let labels = &system.labels[idx];
        let mut seen = vec![0usize; n];
        for (q, cube) in cubes.iter().enumerate() {
            if cube.members.is_empty() {
                out.push(Violation::EmptyCube { k, cube: q });
            }
            for &m in &cube.members {
                seen[m] += 1;
                if labels[m] != q {
                    out.push(Violation::Mislabeled { k, point: m });
                }
            }
        }
        for (point, &s) in seen.iter().enumerate() {
            if s != 1 {
                out.push(Violation::Unassigned { k, point });
            }
        }
        for (q, cube) in cubes.iter().enumerate() {
            if idx > 0 {
                let prev = &system.labels[idx - 1];
                let ok = match cube.parent {
                    Some(p) => cube.members.iter().all(|&m| prev[m] == p),
                    None => false,
                };
                if !ok {
                    out.push(Violation::NotNested { k, cube: q });
                }
            }
            for y in 0..n {
                let d = space.center_distance(&cube.center, y);
                let inside = labels[y] == q;
                if d < c.c1 * scale && !inside {
                    out.push(Violation::InnerBall { k, cube: q, point: y });
                }
                if inside && d >= c.big_c1 * scale {
                    out.push(Violation::OuterBall { k, cube: q, point: y });
                }
            }
            if idx > 0 {
                if let Some(p) = cube.parent {
                    let parent = &system.levels[idx - 1][p];
                    let pscale = c.scale(k - 1);
                    for y in 0..n {
                        if space.center_distance(&cube.center, y) < c.big_c1 * scale
                            && space.center_distance(&parent.center, y) >= c.big_c1 * pscale
                        {
                            out.push(Violation::BallNesting { k, cube: q, point: y });
                        }
                    }
                }
            }
        }
        for a in 0..cubes.len() {
            for b in a + 1..cubes.len() {
                let distance = space.centers_distance(&cubes[a].center, &cubes[b].center);
                if distance < c.c0 * scale {
                    out.push(Violation::Separation { k, a, b, distance });
                }
            }
        }
        for point in 0..n {
            let distance = cubes
                .iter()
                .map(|q| space.center_distance(&q.center, point))
                .fold(f64::INFINITY, f64::min);
            if distance >= c.big_c0 * scale {
                out.push(Violation::Coverage { k, point, distance });
            }
        }
    }
    out
}

/// Several dyadic systems over one space with a certified covering constant.
#[derive(Clone, Debug)]
pub struct AdjacentSystems {
    pub systems: Vec<DyadicSystem>,
    pub certificate: CoveringCertificate,
    /// `escape[t][idx][x]`: distance from `x` to the nearest point outside its
    /// level-`idx` cube in system `t` (infinite for a cube holding everything).
    escape: Vec<Vec<Vec<f64>>>,
}

/// Outcome of the exhaustive ball-covering check.
#[derive(Clone, Debug, PartialEq)]
pub struct CoveringCertificate {
    /// Largest `diam(Q) / r` over the ball family, with the best cube per ball.
    pub constant: f64,
    /// Ball attaining it.
    pub worst: (usize, f64),
    pub balls_checked: usize,
}

/// The cube chosen for a ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallCover {
    pub system: usize,
    pub k: i32,
    pub cube: usize,
    pub diameter: f64,
}

impl AdjacentSystems {
    /// Wraps systems and certifies covering over `B(x_i, d(x_i, x_j))`.
    pub fn certify(space: &QuasiMetricSpace, systems: Vec<DyadicSystem>) -> Result<Self> {
        let escape = systems.iter().map(|s| escape_table(space, s)).collect();
        let mut adj = Self {
            systems,
            certificate: CoveringCertificate { constant: 0.0, worst: (0, 0.0), balls_checked: 0 },
            escape,
        };
        let mut worst = (0.0f64, (0usize, 0.0f64));
        let mut balls = 0;
        for x in 0..space.len() {
            let mut prev = f64::NAN;
            for &y in &space.sorted[x][1..] {
                let r = space.d(x, y);
                if r == prev {
                    continue;
                }
                prev = r;
                balls += 1;
                let cover = adj.cover(x, r).ok_or(Error::NoCoveringCube { center: x, radius: r })?;
                let ratio = cover.diameter / r;
                if ratio > worst.0 {
                    worst = (ratio, (x, r));
                }
            }
        }
        adj.certificate = CoveringCertificate { constant: worst.0, worst: worst.1, balls_checked: balls };
        Ok(adj)
    }

    pub fn len(&self) -> usize {
        self.systems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systems.is_empty()
    }

    /// Smallest-diameter cube over all systems containing `B(x, r)`; ties go
    /// to the smaller system index.
    fn cover(&self, x: usize, r: f64) -> Option<BallCover> {
        let mut best: Option<BallCover> = None;
        for (t, system) in self.systems.iter().enumerate() {
            let table = &self.escape[t];
            let Some(idx) = (0..system.num_levels()).rev().find(|&idx| table[idx][x] >= r) else {
                continue;
            };
            let cube = system.labels[idx][x];
            let diameter = system.levels[idx][cube].diameter;
            if best.is_none_or(|b| diameter < b.diameter) {
                best = Some(BallCover { system: t, k: system.k_min + idx as i32, cube, diameter });
            }
        }
        best
    }
}

fn escape_table(space: &QuasiMetricSpace, system: &DyadicSystem) -> Vec<Vec<f64>> {
    (0..system.num_levels())
        .map(|idx| {
            let labels = &system.labels[idx];
            (0..space.len())
                .map(|x| {
                    space.sorted[x]
                        .iter()
                        .find(|&&y| labels[y] != labels[x])
                        .map_or(f64::INFINITY, |&y| space.d(x, y))
                })
                .collect()
        })
        .collect()
}

/// Minimal-diameter cube across the systems containing `B(x, r)`.
pub fn cover_ball(space: &QuasiMetricSpace, adjacent: &AdjacentSystems, x: usize, r: f64) -> Result<BallCover> {
    if x >= space.len() {
        return Err(Error::PointOutOfRange { point: x });
    }
    adjacent.cover(x, r).ok_or(Error::NoCoveringCube { center: x, radius: r })
}

/// Finest grid level used when none is requested: side `2^{-k}` at most an
/// eighth of the smallest distance.
fn auto_depth(space: &QuasiMetricSpace) -> i32 {
    let sep = space.separation();
    if sep <= 0.0 {
        return 0;
    }
    (num::ceil(-num::log2(sep)) as i32 + 3).max(0)
}

/// Coarsest grid level; one box of side 4 holds `[0,1)^dim` for every shift.
pub const GRID_K_MIN: i32 = -2;

/// Shifted dyadic grids on points of `[0,1)^dim`, `dim ∈ {1, 2}`, one system
/// per shift vector in `{0,1,2}^dim`.
///
/// Level `k` boxes are `2^{-k}([0,1)^dim + m + (-1)^k t/3)`; the alternating
/// sign makes consecutive levels nest. Box indices are computed once at the
/// finest level and carried up by exact integer arithmetic.
pub fn euclidean_shifted_grids(space: &QuasiMetricSpace, depth: Option<i32>) -> Result<AdjacentSystems> {
    let dim = space.dim().ok_or(Error::MissingCoordinates)?;
    if dim == 0 || dim > 2 {
        return Err(Error::UnsupportedDimension { dim });
    }
    for i in 0..space.len() {
        if space.coords(i).unwrap().iter().any(|&v| !(0.0..1.0).contains(&v)) {
            return Err(Error::PointOutOfRange { point: i });
        }
    }
    let k_max = grid_depth(space, depth);
    let shifts: Vec<Vec<u8>> = if dim == 1 {
        (0..3).map(|t| vec![t]).collect()
    } else {
        (0..3).flat_map(|a| (0..3).map(move |b| vec![a, b])).collect()
    };
    let systems = shifts
        .into_iter()
        .map(|shift| grid_system(space, dim, shift, k_max))
        .collect::<Result<Vec<_>>>()?;
    AdjacentSystems::certify(space, systems)
}

fn grid_depth(space: &QuasiMetricSpace, depth: Option<i32>) -> i32 {
    depth.unwrap_or_else(|| auto_depth(space)).max(GRID_K_MIN)
}

/// The single system of [`euclidean_shifted_grids`] with shift vector
/// `shift`, without the covering certificate.
pub fn shifted_grid(space: &QuasiMetricSpace, shift: &[u8], depth: Option<i32>) -> Result<DyadicSystem> {
    let dim = space.dim().ok_or(Error::MissingCoordinates)?;
    if dim == 0 || dim > 2 {
        return Err(Error::UnsupportedDimension { dim });
    }
    if shift.len() != dim || shift.iter().any(|&t| t > 2) {
        return Err(Error::InvalidParameter { name: "shift", value: shift.len() as f64 });
    }
    for i in 0..space.len() {
        if space.coords(i).unwrap().iter().any(|&v| !(0.0..1.0).contains(&v)) {
            return Err(Error::PointOutOfRange { point: i });
        }
    }
    grid_system(space, dim, shift.to_vec(), grid_depth(space, depth))
}

fn grid_system(space: &QuasiMetricSpace, dim: usize, shift: Vec<u8>, k_max: i32) -> Result<DyadicSystem> {
    let n = space.len();
    let sign = |k: i32| if k.rem_euclid(2) == 0 { 1i64 } else { -1i64 };
    // Integer box index per point per axis, fine to coarse.
    let levels = (k_max - GRID_K_MIN + 1) as usize;
    let mut index = vec![vec![vec![0i64; dim]; n]; levels];
    for x in 0..n {
        let c = space.coords(x).unwrap();
        for a in 0..dim {
            let s = sign(k_max) as f64 * shift[a] as f64 / 3.0;
            index[levels - 1][x][a] = num::floor(c[a] * num::powf(2.0, k_max as f64) - s) as i64;
        }
    }
    for idx in (0..levels - 1).rev() {
        let k = GRID_K_MIN + idx as i32;
        for x in 0..n {
            for a in 0..dim {
                let fine = index[idx + 1][x][a];
                index[idx][x][a] = (fine - sign(k) * shift[a] as i64).div_euclid(2);
            }
        }
    }
    let mut out = Vec::with_capacity(levels);
    let mut prev_ids: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    for idx in 0..levels {
        let k = GRID_K_MIN + idx as i32;
        let side = num::powf(2.0, -(k as f64));
        let mut ids: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
        for x in 0..n {
            ids.entry(index[idx][x].clone()).or_insert(0);
        }
        for (i, v) in ids.values_mut().enumerate() {
            *v = i;
        }
        let mut cubes: Vec<(Center, Vec<usize>, Option<usize>)> = ids
            .keys()
            .map(|m| {
                let mid = (0..dim)
                    .map(|a| side * (m[a] as f64 + sign(k) as f64 * shift[a] as f64 / 3.0 + 0.5))
                    .collect();
                (Center::Coords(mid), Vec::new(), None)
            })
            .collect();
        for x in 0..n {
            let c = ids[&index[idx][x]];
            cubes[c].1.push(x);
            if idx > 0 {
                cubes[c].2 = Some(prev_ids[&index[idx - 1][x]]);
            }
        }
        out.push(cubes);
        prev_ids = ids;
    }
    DyadicSystem::from_levels(space, SystemKind::ShiftedGrid { shift }, CubeConstants::grid(), GRID_K_MIN, out)
}

/// `K` net-based systems from seeds `seed, seed+1, …`, certified for
/// covering. Fails when the achieved constant exceeds `max_constant`,
/// listing the balls above it.
pub fn build_adjacent_systems(
    space: &QuasiMetricSpace,
    params: &DyadicParams,
    k: usize,
    seed: u64,
    max_constant: f64,
) -> Result<AdjacentSystems> {
    let a0 = space.a0();
    let lhs = 96.0 * num::powf(a0, 6.0) * params.delta;
    if lhs > 1.0 {
        return Err(Error::ParameterGate { rule: "96 A0^6 delta <= 1", lhs, rhs: 1.0 });
    }
    if k == 0 {
        return Err(Error::InvalidParameter { name: "K", value: 0.0 });
    }
    let systems = (0..k as u64)
        .map(|t| build_dyadic_system(space, params, Some(seed.wrapping_add(t))))
        .collect::<Result<Vec<_>>>()?;
    let adj = AdjacentSystems::certify(space, systems)?;
    if adj.certificate.constant > max_constant {
        let mut uncovered = Vec::new();
        for x in 0..space.len() {
            let mut prev = f64::NAN;
            for &y in &space.sorted[x][1..] {
                let r = space.d(x, y);
                if r == prev {
                    continue;
                }
                prev = r;
                if adj.cover(x, r).is_none_or(|c| c.diameter / r > max_constant) {
                    uncovered.push((x, r));
                }
            }
        }
        return Err(Error::CoveringFailed { constant: adj.certificate.constant, uncovered });
    }
    Ok(adj)
}

/// The measure space and two-sided filtration generated by the cubes.
pub fn system_to_filtration(space: &QuasiMetricSpace, system: &DyadicSystem) -> Result<(MeasureSpace, Filtration)> {
    let filt = Filtration::new(space.len(), system.k_min(), system.partitions())?;
    Ok((space.measure_space(), filt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_space::validate_filtration;

    fn line(points: &[f64]) -> QuasiMetricSpace {
        let coords: Vec<Vec<f64>> = points.iter().map(|&x| vec![x]).collect();
        QuasiMetricSpace::from_coords(&coords, vec![1.0; points.len()], 1.0).unwrap()
    }

    fn uniform_line(n: usize) -> QuasiMetricSpace {
        line(&(0..n).map(|i| i as f64 / n as f64).collect::<Vec<_>>())
    }

    #[test]
    fn euclidean_line_is_a_metric() {
        let s = line(&[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(estimate_constants(&s, 0).a0, 1.0);
    }

    #[test]
    fn discrete_metric() {
        let m: Vec<Vec<f64>> = (0..5).map(|i| (0..5).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect();
        let s = QuasiMetricSpace::from_matrix(&m, vec![1.0; 5], 1.0).unwrap();
        assert_eq!(estimate_constants(&s, 0).a0, 1.0);
        assert_eq!(s.ball_count(2, 1.5), 5);
        assert_eq!(s.ball_count(2, 1.0), 1);
    }

    #[test]
    fn doubling_of_uniform_grid() {
        // Brute force over a fine radius grid as an independent scan.
        let s = uniform_line(32);
        let c = estimate_constants(&s, 0).c_mu;
        let mut brute = 0.0f64;
        for x in 0..32 {
            for step in 1..4000 {
                let r = step as f64 / 2000.0;
                let ratio = s.ball_mass(x, 2.0 * r) / s.ball_mass(x, r);
                brute = brute.max(num::log2(ratio));
            }
        }
        assert!(c >= brute - 1e-12);
        assert!(c <= brute + 1e-9 || c <= 2.0);
        assert!(c > 1.0 && c <= 2.0, "{c}");
    }

    #[test]
    fn quasi_triangle_violation_rejected() {
        // d(0,2) = 10 > 1 * (1 + 1).
        let m = vec![vec![0.0, 1.0, 10.0], vec![1.0, 0.0, 1.0], vec![10.0, 1.0, 0.0]];
        assert!(matches!(
            QuasiMetricSpace::from_matrix(&m, vec![1.0; 3], 1.0),
            Err(Error::InvalidMetric { .. })
        ));
        assert!(QuasiMetricSpace::from_matrix(&m, vec![1.0; 3], 5.0).is_ok());
    }

    #[test]
    fn zero_distance_points_merge() {
        let m = vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        assert!(QuasiMetricSpace::from_matrix(&m, vec![1.0; 3], 1.0).is_err());
        let (s, rep) = QuasiMetricSpace::merged(&m, vec![1.0, 2.0, 1.0], 1.0).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(rep, vec![0, 0, 1]);
        assert_eq!(s.weights(), &[3.0, 1.0]);
    }

    #[test]
    fn greedy_net_examples() {
        let s = line(&[0.0, 0.4, 1.0]);
        assert_eq!(greedy_net(&s, 0.5, None), vec![0, 2]);
        assert_eq!(greedy_net(&s, 5.0, None), vec![0]);
        assert_eq!(greedy_net(&s, 0.3, None), vec![0, 1, 2]);
        assert_eq!(greedy_net(&s, 5.0, Some(&[1, 0, 2])), vec![1]);
    }

    #[test]
    fn nets_system_on_uniform_line() {
        let s = uniform_line(64);
        let params = DyadicParams { delta: 1.0 / 96.0, c0: 0.125, big_c0: 0.125, k_min: -1, k_max: 2 };
        let sys = build_dyadic_system(&s, &params, None).unwrap();
        assert!(verify_system(&s, &sys).is_empty());
        assert_eq!(sys.at(0).len(), 1);
        let (space, filt) = system_to_filtration(&s, &sys).unwrap();
        assert!(validate_filtration(&space, filt.k_min(), &filt.to_raw()).is_valid());
    }

    #[test]
    fn parameter_gate() {
        let s = uniform_line(8);
        let params = DyadicParams { delta: 0.5, c0: 1.0, big_c0: 1.0, k_min: 0, k_max: 2 };
        assert!(matches!(build_dyadic_system(&s, &params, None), Err(Error::ParameterGate { .. })));
    }

    #[test]
    fn single_point_space() {
        let s = line(&[0.5]);
        let params = DyadicParams { delta: 0.05, c0: 1.0, big_c0: 1.0, k_min: -1, k_max: 2 };
        let sys = build_dyadic_system(&s, &params, None).unwrap();
        assert!((0..sys.num_levels()).all(|i| sys.at(i).len() == 1));
        let (_, filt) = system_to_filtration(&s, &sys).unwrap();
        assert!(filt.levels().iter().all(|p| p.len() == 1));
    }

    #[test]
    fn auto_params_build_valid_systems() {
        let pts: Vec<f64> = (0..50).map(|i| ((i * 37) % 50) as f64 / 50.0 + 0.001 * i as f64).collect();
        let s = line(&pts);
        let p = DyadicParams::auto(&s);
        for seed in 0..4 {
            let sys = build_dyadic_system(&s, &p, Some(seed)).unwrap();
            assert!(verify_system(&s, &sys).is_empty());
            assert_eq!(sys.at(0).len(), 1);
            assert!(sys.at(sys.num_levels() - 1).iter().all(|c| c.members.len() == 1));
        }
    }

    #[test]
    fn unshifted_grid_is_the_dyadic_tree() {
        let s = uniform_line(8);
        let adj = euclidean_shifted_grids(&s, Some(3)).unwrap();
        let sys = &adj.systems[0];
        let (_, filt) = system_to_filtration(&s, sys).unwrap();
        let tree = Filtration::uniform_tree(2, 3);
        let idx0 = filt.index_of(0).unwrap();
        for k in 0..=3usize {
            assert_eq!(filt.at(idx0 + k).blocks(), tree.at(k).blocks());
        }
    }

    #[test]
    fn grids_satisfy_cube_properties() {
        let s = uniform_line(40);
        let adj = euclidean_shifted_grids(&s, None).unwrap();
        for sys in &adj.systems {
            let v = verify_system(&s, sys);
            assert!(v.is_empty(), "{:?}", &v[..v.len().min(5)]);
        }
    }

    #[test]
    fn small_interval_cover() {
        // (0.49, 0.51): the brute force over the three grids finds a box of
        // side 1/16 with shift 1/3 or 2/3.
        let pts: Vec<f64> = (0..200).map(|i| i as f64 / 200.0).collect();
        let s = line(&pts);
        let adj = euclidean_shifted_grids(&s, Some(10)).unwrap();
        let x = 100;
        let cover = cover_ball(&s, &adj, x, 0.01).unwrap();
        assert!(cover.diameter <= 0.12);
        assert_ne!(cover.system, 0);
        let mut best = f64::INFINITY;
        for t in 0..3u8 {
            for k in -2..=10i32 {
                let h = num::powf(2.0, -(k as f64));
                let s0 = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 } * t as f64 / 3.0;
                let m = num::floor(0.5 / h - s0);
                let (lo, hi) = (h * (m + s0), h * (m + s0 + 1.0));
                if lo <= 0.49 && 0.51 <= hi {
                    best = best.min(h);
                }
            }
        }
        assert!(best <= 0.12 && cover.diameter <= best);
    }

    #[test]
    fn whole_space_ball_uses_a_root_cube() {
        let s = uniform_line(16);
        let adj = euclidean_shifted_grids(&s, None).unwrap();
        let cover = cover_ball(&s, &adj, 3, 10.0).unwrap();
        let sys = &adj.systems[cover.system];
        assert_eq!(sys.level(cover.k).unwrap()[cover.cube].members.len(), 16);
    }

    #[test]
    fn dyadic_interval_is_covered_by_unshifted_grid() {
        let s = uniform_line(64);
        let adj = euclidean_shifted_grids(&s, Some(6)).unwrap();
        // B(28/64, 4/64) holds the points 25/64..=31/64, all inside the
        // unshifted interval [3/8, 1/2).
        let cover = cover_ball(&s, &adj, 28, 4.0 / 64.0).unwrap();
        assert_eq!(cover.system, 0);
        assert_eq!(cover.k, 3);
        assert_eq!(cover.diameter, 7.0 / 64.0);
    }

    #[test]
    fn euclidean_covering_constants() {
        let s = uniform_line(64);
        let adj = euclidean_shifted_grids(&s, None).unwrap();
        assert!(adj.certificate.constant <= 6.0, "{}", adj.certificate.constant);
        let pts: Vec<Vec<f64>> = (0..36).map(|i| vec![(i % 6) as f64 / 6.0, (i / 6) as f64 / 6.0]).collect();
        let s2 = QuasiMetricSpace::from_coords(&pts, vec![1.0; 36], 1.0).unwrap();
        let adj2 = euclidean_shifted_grids(&s2, None).unwrap();
        assert_eq!(adj2.len(), 9);
        assert!(adj2.certificate.constant <= 6.0 * core::f64::consts::SQRT_2);
        assert_eq!(shifted_grid(&s2, &[2, 1], None).unwrap(), adj2.systems[7]);
        assert!(shifted_grid(&s2, &[3, 0], None).is_err());
        assert!(shifted_grid(&s2, &[0], None).is_err());
        for sys in &adj2.systems {
            let v = verify_system(&s2, sys);
            assert!(v.is_empty(), "{:?}", &v[..v.len().min(5)]);
        }
    }

    #[test]
    fn grid_requires_unit_cube_points() {
        let s = line(&[0.5, 1.5]);
        assert!(matches!(euclidean_shifted_grids(&s, None), Err(Error::PointOutOfRange { point: 1 })));
        let m = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let s = QuasiMetricSpace::from_matrix(&m, vec![1.0; 2], 1.0).unwrap();
        assert!(matches!(euclidean_shifted_grids(&s, None), Err(Error::MissingCoordinates)));
    }

    #[test]
    fn adjacent_nets_on_circle() {
        let n = 64;
        let m: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let k = (i as i64 - j as i64).unsigned_abs() as usize;
                        k.min(n - k) as f64 / n as f64
                    })
                    .collect()
            })
            .collect();
        let s = QuasiMetricSpace::from_matrix(&m, vec![1.0; n], 1.0).unwrap();
        let p = DyadicParams::auto_adjacent(&s);
        let adj = build_adjacent_systems(&s, &p, 4, 11, f64::INFINITY).unwrap();
        assert!(adj.certificate.constant.is_finite());
        for sys in &adj.systems {
            assert!(verify_system(&s, sys).is_empty());
        }
        match build_adjacent_systems(&s, &p, 1, 11, 1.0) {
            Err(Error::CoveringFailed { uncovered, .. }) => assert!(!uncovered.is_empty()),
            other => panic!("{other:?}"),
        }
    }
}
