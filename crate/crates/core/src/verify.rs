//! Seeded generators and empirical constant estimation.
//!
//! A [`Sampler`] names a family, a seed and a stream; the stream is the trial
//! index, so every trial draws from its own ChaCha8 stream and trials can be
//! evaluated in any order. [`estimate_constant`] turns a numerator and a
//! denominator functional into the sup of their ratio with a replayable
//! witness.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::atomic::{size_exponent, SimpleAtom};
use crate::dyadic_geometry::QuasiMetricSpace;
use crate::error::{Error, Result};
use crate::function_norms::lp_norm;
use crate::homogeneous::multiplier_check;
use crate::measure_space::{block_mean, Filtration, Func, MeasureSpace};
use crate::num;

/// Size ladder used to detect growth of empirical constants.
pub const LADDER: [usize; 3] = [64, 256, 512];
/// Largest tolerated ratio between sups at two ladder sizes.
pub const LADDER_FACTOR: f64 = 3.0;
/// Smallest fraction of trials with a nonzero finite denominator.
pub const MIN_NONDEGENERATE: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    GaussianMartingale,
    RademacherBmo,
    Atom,
    Lipschitz,
    Multiplier,
    MetricCloud,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::GaussianMartingale,
        Family::RademacherBmo,
        Family::Atom,
        Family::Lipschitz,
        Family::Multiplier,
        Family::MetricCloud,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::GaussianMartingale => "gaussian_martingale",
            Family::RademacherBmo => "rademacher_bmo",
            Family::Atom => "atom",
            Family::Lipschitz => "lipschitz",
            Family::Multiplier => "multiplier",
            Family::MetricCloud => "metric_cloud",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownFamily(s.into()))
    }
}

/// How random filtrations split their blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Shape {
    /// Every block splits into 2 to 4 children of near-equal size until
    /// singletons remain; the filtration is regular.
    Balanced,
    /// Intermediate levels cut blocks into 1 to 4 pieces at random positions;
    /// the last level is discrete.
    Ragged,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sampler {
    pub family: Family,
    pub seed: u64,
    /// ChaCha stream, the trial index in estimation loops.
    pub stream: u64,
    pub n_points: usize,
    pub max_levels: usize,
    pub shape: Shape,
    /// Exponent for atoms, Lipschitz functions and multipliers.
    pub p: f64,
    /// Ambient dimension of metric clouds.
    pub dim: usize,
}

impl Sampler {
    pub fn new(family: Family, seed: u64, n_points: usize) -> Self {
        Self {
            family,
            seed,
            stream: 0,
            n_points,
            max_levels: 12,
            shape: Shape::Balanced,
            p: 0.5,
            dim: 1,
        }
    }

    pub fn for_trial(&self, trial: u64) -> Self {
        Self { stream: trial, ..self.clone() }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        trial_rng(self.seed, self.stream)
    }
}

/// The generator of trial `trial` under `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// A probability space with a filtration whose last level is discrete.
#[derive(Clone, Debug, PartialEq)]
pub struct Fixture {
    pub space: MeasureSpace,
    pub filtration: Filtration,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sample {
    Martingale { fixture: Fixture, f: Func },
    Atom { fixture: Fixture, atom: SimpleAtom },
    Multiplier { cloud: QuasiMetricSpace, origin: usize, h: Func },
    Cloud(QuasiMetricSpace),
}

/// Draws the object described by `sampler`.
pub fn sample(sampler: &Sampler) -> Result<Sample> {
    let mut rng = sampler.rng();
    let n = sampler.n_points;
    match sampler.family {
        Family::GaussianMartingale | Family::RademacherBmo | Family::Lipschitz => {
            let fixture = random_filtration(&mut rng, n, sampler.max_levels, sampler.shape)?;
            let kind = match sampler.family {
                Family::GaussianMartingale => MartingaleKind::Gaussian,
                Family::RademacherBmo => MartingaleKind::Rademacher,
                _ => MartingaleKind::Lipschitz { p: sampler.p },
            };
            let f = martingale_on(&mut rng, &fixture.space, &fixture.filtration, kind)?;
            Ok(Sample::Martingale { fixture, f })
        }
        Family::Atom => {
            let fixture = random_filtration(&mut rng, n, sampler.max_levels, sampler.shape)?;
            let atom = atom_on(&mut rng, &fixture.space, &fixture.filtration, sampler.p, f64::INFINITY)?;
            Ok(Sample::Atom { fixture, atom })
        }
        Family::Multiplier => {
            let cloud = random_cloud(&mut rng, n, sampler.dim)?;
            let origin = rng.random_range(0..n);
            let alpha = if sampler.p < 1.0 { 1.0 / sampler.p - 1.0 } else { 0.0 };
            let h = multiplier_on(&mut rng, &cloud, origin, alpha)?;
            Ok(Sample::Multiplier { cloud, origin, h })
        }
        Family::MetricCloud => Ok(Sample::Cloud(random_cloud(&mut rng, n, sampler.dim)?)),
    }
}

fn check_points(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptySpace);
    }
    Ok(())
}

/// Probability weights drawn from `[0.5, 1.5]` and normalized.
pub fn random_weights(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let total = num::sum(raw.iter().copied());
    raw.into_iter().map(|w| w / total).collect()
}

/// Random filtration on `n` points with at most `max_levels` levels (a
/// balanced tree ignores the cap only when `n` needs more binary levels).
pub fn random_filtration(rng: &mut impl Rng, n: usize, max_levels: usize, shape: Shape) -> Result<Fixture> {
    check_points(n)?;
    if max_levels < 2 && n > 1 {
        return Err(Error::InvalidParameter { name: "max_levels", value: max_levels as f64 });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut levels: Vec<Vec<Vec<usize>>> = vec![vec![order]];
    match shape {
        Shape::Balanced => {
            while levels.last().unwrap().iter().any(|b| b.len() > 1) {
                let next = levels
                    .last()
                    .unwrap()
                    .iter()
                    .flat_map(|block| {
                        let parts = rng.random_range(2..=4).min(block.len());
                        split_even(block, parts)
                    })
                    .collect();
                levels.push(next);
            }
        }
        Shape::Ragged => {
            let total = if n == 1 { 1 } else { rng.random_range(2..=max_levels) };
            for _ in 1..total.saturating_sub(1) {
                let next = levels
                    .last()
                    .unwrap()
                    .iter()
                    .flat_map(|block| {
                        let parts = rng.random_range(1..=4).min(block.len());
                        let mut cuts: Vec<usize> = (1..block.len()).collect();
                        cuts.shuffle(rng);
                        let mut cuts = cuts[..parts - 1].to_vec();
                        cuts.sort_unstable();
                        let mut pieces = Vec::with_capacity(parts);
                        let mut start = 0;
                        for c in cuts.into_iter().chain([block.len()]) {
                            pieces.push(block[start..c].to_vec());
                            start = c;
                        }
                        pieces
                    })
                    .collect();
                levels.push(next);
            }
            if total > 1 {
                levels.push((0..n).map(|i| vec![i]).collect());
            }
        }
    }
    let space = MeasureSpace::probability(random_weights(rng, n))?;
    let filtration = Filtration::new(n, 0, levels)?;
    Ok(Fixture { space, filtration })
}

fn split_even(block: &[usize], parts: usize) -> Vec<Vec<usize>> {
    let (q, r) = (block.len() / parts, block.len() % parts);
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for i in 0..parts {
        let len = q + usize::from(i < r);
        out.push(block[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Increments used by [`martingale_on`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MartingaleKind {
    /// Standard normal values per child, a normal base term.
    Gaussian,
    /// `±2^{-j}` per child at the `j`-th difference, zero base; the BMO norm
    /// stays below `Σ_j 2^{1-j}`.
    Rademacher,
    /// `±u P(B)^{α_p}` per child `C ⊂ B`, `u ∈ [1/2, 1]`, zero base.
    Lipschitz { p: f64 },
}

/// Random martingale along `filt`: every difference is constant on the
/// children of each parent block and has weighted mean zero there.
pub fn martingale_on(rng: &mut impl Rng, space: &MeasureSpace, filt: &Filtration, kind: MartingaleKind) -> Result<Func> {
    filt.check_space(space)?;
    let n = space.len();
    let mut f = vec![0.0; n];
    if kind == MartingaleKind::Gaussian {
        for block in filt.at(0).blocks() {
            let v: f64 = rng.sample(StandardNormal);
            for &i in block {
                f[i] = v;
            }
        }
    }
    let alpha = match kind {
        MartingaleKind::Lipschitz { p } => {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidExponent { name: "p", value: p });
            }
            1.0 / p - 1.0
        }
        _ => 0.0,
    };
    for idx in 1..filt.num_levels() {
        let parent = filt.at(idx - 1);
        let child = filt.at(idx);
        for (b, members) in parent.blocks().iter().enumerate() {
            let kids = filt.children(idx - 1, b);
            if kids.len() < 2 {
                continue;
            }
            let parent_mass = space.mass(members);
            let vals: Vec<f64> = kids
                .iter()
                .map(|_| match kind {
                    MartingaleKind::Gaussian => rng.sample(StandardNormal),
                    MartingaleKind::Rademacher => {
                        let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        s * num::powf(2.0, -(idx as f64))
                    }
                    MartingaleKind::Lipschitz { .. } => {
                        let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        s * rng.random_range(0.5..=1.0) * num::powf(parent_mass, alpha)
                    }
                })
                .collect();
            let mean = num::sum(kids.iter().zip(&vals).map(|(&c, v)| space.mass(child.block(c)) * v)) / parent_mass;
            for (&c, v) in kids.iter().zip(&vals) {
                for &i in child.block(c) {
                    f[i] += v - mean;
                }
            }
        }
    }
    Func::new(f)
}

/// Random simple `(p, q)`-atom: a block `A` with at least two points on a
/// non-terminal level, independent normal values on `A` with the weighted
/// mean removed, scaled to `‖a‖_q = u P(A)^{1/q-1/p}` with `u ∈ [1/2, 1]`.
pub fn atom_on(rng: &mut impl Rng, space: &MeasureSpace, filt: &Filtration, p: f64, q: f64) -> Result<SimpleAtom> {
    filt.check_space(space)?;
    let last = filt.num_levels() - 1;
    if !filt.at(last).is_discrete() {
        return Err(Error::NotMeasurable { level: filt.k_max() });
    }
    let candidates: Vec<(usize, usize)> = (0..last)
        .flat_map(|idx| {
            filt.at(idx)
                .blocks()
                .iter()
                .enumerate()
                .filter(|(_, b)| b.len() > 1)
                .map(move |(b, _)| (idx, b))
        })
        .collect();
    if candidates.is_empty() {
        return Err(Error::InvalidParameter { name: "n_points", value: space.len() as f64 });
    }
    let (idx, b) = candidates[rng.random_range(0..candidates.len())];
    let members = filt.at(idx).block(b);
    let mut values = vec![0.0; space.len()];
    for &i in members {
        values[i] = rng.sample(StandardNormal);
    }
    let mean = block_mean(space.weights(), members, &values);
    for &i in members {
        values[i] -= mean;
    }
    let norm = lp_norm(space, &values, q)?;
    let target = rng.random_range(0.5..=1.0) * num::powf(space.mass(members), size_exponent(p, q));
    if norm > 0.0 {
        for v in values.iter_mut() {
            *v *= target / norm;
        }
    }
    Ok(SimpleAtom {
        values: Func::new(values)?,
        level: filt.k_min() + idx as i32,
        block: b,
        p,
        q,
    })
}

/// Uniform points in `[0, 1)^dim` with Euclidean distance, `A0 = 1`, and
/// weights from `[0.5, 1.5]`.
pub fn random_cloud(rng: &mut impl Rng, n: usize, dim: usize) -> Result<QuasiMetricSpace> {
    check_points(n)?;
    if dim == 0 {
        return Err(Error::UnsupportedDimension { dim });
    }
    let coords: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
    let weights = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    QuasiMetricSpace::from_coords(&coords, weights, 1.0)
}

/// `n` points of `[0, 1)^dim`, one per randomly chosen cell of the
/// `m^dim` grid with `m = ⌈n^{1/dim}⌉`, placed uniformly in the middle half
/// of its cell. Separation and density are comparable at every scale, so the
/// doubling constant stays bounded as `n` grows. Weights as in
/// [`random_cloud`].
pub fn jittered_cloud(rng: &mut impl Rng, n: usize, dim: usize) -> Result<QuasiMetricSpace> {
    check_points(n)?;
    if dim == 0 || dim > 3 {
        return Err(Error::UnsupportedDimension { dim });
    }
    let mut m = 1usize;
    while m.pow(dim as u32) < n {
        m += 1;
    }
    let mut cells: Vec<usize> = (0..m.pow(dim as u32)).collect();
    cells.shuffle(rng);
    cells.truncate(n);
    cells.sort_unstable();
    let side = 1.0 / m as f64;
    let coords: Vec<Vec<f64>> = cells
        .iter()
        .map(|&c| {
            (0..dim)
                .map(|a| {
                    let i = (c / m.pow(a as u32)) % m;
                    (i as f64 + rng.random_range(0.25..0.75)) * side
                })
                .collect()
        })
        .collect();
    let weights = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    QuasiMetricSpace::from_coords(&coords, weights, 1.0)
}

/// A multiplier in the test class: a random smooth profile in `d(x, O)`
/// times the decay envelope, divided by the larger of its two membership
/// constants (when that exceeds 1).
pub fn multiplier_on(rng: &mut impl Rng, space: &QuasiMetricSpace, origin: usize, alpha: f64) -> Result<Func> {
    let freq = rng.random_range(0.5..4.0);
    let phase = rng.random_range(0.0..core::f64::consts::TAU);
    let h: Vec<f64> = (0..space.len())
        .map(|x| {
            let d = space.d(x, origin);
            let m = space.ball_mass(origin, d);
            libm::cos(freq * d + phase) / ((1.0 + num::powf(m, alpha)) * num::ln(core::f64::consts::E + d))
        })
        .collect();
    let c = multiplier_check(space, origin, &h, alpha)?;
    let scale = c.decay.max(c.oscillation).max(1.0);
    Func::new(h.into_iter().map(|v| v / scale).collect())
}

/// One trial of an estimation loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialRatio {
    pub trial: u64,
    pub numerator: f64,
    pub denominator: f64,
}

impl TrialRatio {
    /// `None` when the denominator vanishes or either side is not finite.
    pub fn ratio(&self) -> Option<f64> {
        let r = self.numerator / self.denominator;
        (self.denominator != 0.0 && self.numerator.is_finite() && self.denominator.is_finite() && r.is_finite())
            .then_some(r)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantEstimate {
    pub trials: usize,
    pub skipped: usize,
    pub sup_ratio: f64,
    /// Trial attaining the sup (first one on ties).
    pub witness: u64,
    pub min_ratio: f64,
    pub min_witness: u64,
    /// `(level, value)` pairs at levels 0, .5, .9, .99, 1 (nearest rank).
    pub quantiles: Vec<(f64, f64)>,
}

impl ConstantEstimate {
    pub fn nondegenerate_fraction(&self) -> f64 {
        (self.trials - self.skipped) as f64 / self.trials as f64
    }
}

pub const QUANTILE_LEVELS: [f64; 5] = [0.0, 0.5, 0.9, 0.99, 1.0];

/// Sup, inf and quantiles over the non-degenerate trials.
pub fn summarize(results: &[TrialRatio]) -> Result<ConstantEstimate> {
    let mut ratios: Vec<(f64, u64)> = results.iter().filter_map(|t| t.ratio().map(|r| (r, t.trial))).collect();
    if ratios.is_empty() {
        return Err(Error::AllTrialsDegenerate { trials: results.len() });
    }
    let (mut sup, mut witness) = ratios[0];
    let (mut inf, mut min_witness) = ratios[0];
    for &(r, t) in &ratios[1..] {
        if r > sup {
            sup = r;
            witness = t;
        }
        if r < inf {
            inf = r;
            min_witness = t;
        }
    }
    ratios.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = ratios.len();
    let quantiles = QUANTILE_LEVELS
        .iter()
        .map(|&level| {
            let rank = num::ceil(level * m as f64) as usize;
            (level, ratios[rank.clamp(1, m) - 1].0)
        })
        .collect();
    Ok(ConstantEstimate {
        trials: results.len(),
        skipped: results.len() - m,
        sup_ratio: sup,
        witness,
        min_ratio: inf,
        min_witness,
        quantiles,
    })
}

/// Sup of `numerator / denominator` over `trials` streams of `sampler`.
pub fn estimate_constant(
    sampler: &Sampler,
    trials: u64,
    numerator: impl Fn(&Sample) -> Result<f64>,
    denominator: impl Fn(&Sample) -> Result<f64>,
) -> Result<ConstantEstimate> {
    let mut results = Vec::with_capacity(trials as usize);
    for trial in 0..trials {
        let s = sample(&sampler.for_trial(trial))?;
        results.push(TrialRatio {
            trial,
            numerator: numerator(&s)?,
            denominator: denominator(&s)?,
        });
    }
    summarize(&results)
}

/// Largest `sup[j] / sup[i]` over `i < j`, with sups listed by increasing
/// size; 1 when fewer than two sizes are given.
pub fn ladder_growth(sups: &[f64]) -> f64 {
    let mut worst = 1.0f64;
    for i in 0..sups.len() {
        for j in i + 1..sups.len() {
            let g = if sups[i] > 0.0 {
                sups[j] / sups[i]
            } else if sups[j] > 0.0 {
                f64::INFINITY
            } else {
                1.0
            };
            worst = worst.max(g);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::validate_simple_atom;
    use crate::martingale_ops::{expand, BaseConvention};
    use crate::measure_space::validate_filtration;

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!(matches!("gauss".parse::<Family>(), Err(Error::UnknownFamily(_))));
    }

    #[test]
    fn same_seed_same_bits() {
        for family in Family::ALL {
            let s = Sampler::new(family, 42, 40).for_trial(3);
            assert_eq!(sample(&s).unwrap(), sample(&s).unwrap());
        }
        let a = sample(&Sampler::new(Family::GaussianMartingale, 42, 40)).unwrap();
        let b = sample(&Sampler::new(Family::GaussianMartingale, 42, 40).for_trial(1)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn random_filtrations_are_valid() {
        for trial in 0..20 {
            for shape in [Shape::Balanced, Shape::Ragged] {
                let mut rng = trial_rng(5, trial);
                let fx = random_filtration(&mut rng, 100, 12, shape).unwrap();
                let report = validate_filtration(&fx.space, 0, &fx.filtration.to_raw());
                assert!(report.is_valid(), "{report:?}");
                let last = fx.filtration.num_levels() - 1;
                assert!(fx.filtration.at(last).is_discrete());
                assert!(fx.filtration.num_levels() <= 12);
                assert!((fx.space.total_mass() - 1.0).abs() < 1e-12);
                for idx in 1..last {
                    for b in 0..fx.filtration.at(idx - 1).len() {
                        assert!(fx.filtration.children(idx - 1, b).len() <= 4);
                    }
                }
            }
        }
    }

    #[test]
    fn gaussian_differences_have_zero_conditional_mean() {
        let mut rng = trial_rng(9, 0);
        let fx = random_filtration(&mut rng, 16, 3, Shape::Balanced).unwrap();
        let f = martingale_on(&mut rng, &fx.space, &fx.filtration, MartingaleKind::Gaussian).unwrap();
        let exp = expand(&fx.space, &fx.filtration, &f, BaseConvention::Expectation).unwrap();
        let w = fx.space.weights();
        for (j, d) in exp.diffs().iter().enumerate() {
            for block in fx.filtration.at(j).blocks() {
                assert!(block_mean(w, block, d).abs() < 1e-12);
            }
            for block in fx.filtration.at(j + 1).blocks() {
                let v = d[block[0]];
                assert!(block.iter().all(|&i| d[i] == v));
            }
        }
    }

    #[test]
    fn atoms_pass_the_validator() {
        for trial in 0..30 {
            for p in [0.3, 0.5, 1.0] {
                let s = Sampler { p, ..Sampler::new(Family::Atom, 11, 64) }.for_trial(trial);
                let Sample::Atom { fixture, atom } = sample(&s).unwrap() else { unreachable!() };
                assert!(validate_simple_atom(&fixture.space, &fixture.filtration, &atom).unwrap().is_valid());
            }
        }
    }

    #[test]
    fn multipliers_are_normalized() {
        let s = Sampler { p: 0.5, ..Sampler::new(Family::Multiplier, 2, 30) };
        let Sample::Multiplier { cloud, origin, h } = sample(&s).unwrap() else { unreachable!() };
        let c = multiplier_check(&cloud, origin, &h, 1.0).unwrap();
        assert!(c.decay <= 1.0 + 1e-12 && c.oscillation <= 1.0 + 1e-12);
    }

    #[test]
    fn trivial_estimates() {
        let s = Sampler::new(Family::GaussianMartingale, 1, 16);
        let norm = |x: &Sample| match x {
            Sample::Martingale { f, .. } => Ok(f.max_abs()),
            _ => unreachable!(),
        };
        let est = estimate_constant(&s, 10, norm, norm).unwrap();
        assert_eq!(est.sup_ratio, 1.0);
        assert_eq!(est.skipped, 0);
        let est = estimate_constant(&s, 10, |_| Ok(0.0), norm).unwrap();
        assert_eq!(est.sup_ratio, 0.0);
        assert!(matches!(
            estimate_constant(&s, 4, norm, |_| Ok(0.0)),
            Err(Error::AllTrialsDegenerate { trials: 4 })
        ));
    }

    #[test]
    fn witness_and_quantiles() {
        let rs: Vec<TrialRatio> = (0..10)
            .map(|t| TrialRatio {
                trial: t,
                numerator: (t % 7) as f64,
                denominator: if t == 3 { 0.0 } else { 1.0 },
            })
            .collect();
        let e = summarize(&rs).unwrap();
        assert_eq!((e.sup_ratio, e.witness, e.skipped), (6.0, 6, 1));
        assert_eq!((e.min_ratio, e.min_witness), (0.0, 0));
        assert_eq!(e.quantiles[0], (0.0, 0.0));
        assert_eq!(e.quantiles[4], (1.0, 6.0));
        assert!((e.nondegenerate_fraction() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn ladder() {
        assert_eq!(ladder_growth(&[1.0, 2.0, 1.5]), 2.0);
        assert_eq!(ladder_growth(&[3.0, 1.0]), 1.0);
        assert_eq!(ladder_growth(&[0.0, 0.0]), 1.0);
        assert_eq!(ladder_growth(&[0.0, 1.0]), f64::INFINITY);
    }

    #[test]
    fn jittered_clouds_are_separated() {
        let mut rng = trial_rng(5, 0);
        for (n, dim, m) in [(64, 1, 64), (50, 2, 8), (512, 2, 23)] {
            let s = jittered_cloud(&mut rng, n, dim).unwrap();
            assert_eq!(s.len(), n);
            assert!(s.separation() >= 0.5 / m as f64 - 1e-15);
            assert!((0..n).all(|i| s.coords(i).unwrap().iter().all(|&x| (0.0..1.0).contains(&x))));
        }
        assert!(jittered_cloud(&mut rng, 8, 0).is_err());
    }
}
