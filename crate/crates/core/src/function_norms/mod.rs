//! Norm calculators: L^p, Hardy, BMO/bmo, diagonal, martingale Lipschitz and
//! Luxembourg norms.

mod orlicz;
mod sum_space;

pub use orlicz::{
    check_musielak, check_orlicz, luxembourg_norm, modular, LogOrlicz, Musielak, MusielakFn,
    Orlicz, OrliczCheck, OrliczFn, PowerOrlicz,
};
pub use sum_space::{sum_norm_upper, SplitStrategy, SumSplit};

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::martingale_ops::{
    conditional_square_function, expand, maximal_function, square_function, BaseConvention,
};
use crate::measure_space::{block_mean, block_means, expand_means, Filtration, MeasureSpace};
use crate::num::{self, Accumulator};

/// `(Σ w_i |f_i|^p)^{1/p}`, or `max |f_i|` at `p = ∞`.
pub fn lp_norm(space: &MeasureSpace, f: &[f64], p: f64) -> Result<f64> {
    space.check_len(f)?;
    if !(p > 0.0) {
        return Err(Error::InvalidExponent { name: "p", value: p });
    }
    if p == f64::INFINITY {
        return Ok(f.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let w = space.weights();
    if p == 1.0 {
        return Ok(num::sum(w.iter().zip(f).map(|(w, v)| w * v.abs())));
    }
    if p == 2.0 {
        return Ok(num::sqrt(num::sum(w.iter().zip(f).map(|(w, v)| w * v * v))));
    }
    let s = num::sum(w.iter().zip(f).map(|(w, v)| w * num::powf(v.abs(), p)));
    Ok(num::powf(s, 1.0 / p))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HardyVariant {
    /// `‖S(f)‖_p`
    Square,
    /// `‖s(f)‖_p`
    ConditionalSquare,
    /// `‖f*‖_p`
    Maximal,
}

/// Hardy quasi-norm of `f` with the zero-base expansion.
pub fn hardy_norm(
    space: &MeasureSpace,
    filt: &Filtration,
    f: &[f64],
    variant: HardyVariant,
    p: f64,
) -> Result<f64> {
    let exp = expand(space, filt, f, BaseConvention::Zero)?;
    let functional = match variant {
        HardyVariant::Square => square_function(&exp),
        HardyVariant::ConditionalSquare => conditional_square_function(space, filt, &exp)?,
        HardyVariant::Maximal => maximal_function(&exp),
    };
    lp_norm(space, &functional, p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BmoVariant {
    /// `sup_{n > k_min} ‖E_n|g - g_{n-1}|²‖_∞^{1/2}`
    Bmo,
    /// `sup_{n >= k_min} ‖E_n|g - g_n|²‖_∞^{1/2}`
    SmallBmo,
}

/// BMO or bmo norm. The base term `g_{k_min}` follows `convention`.
pub fn bmo_norm(
    space: &MeasureSpace,
    filt: &Filtration,
    g: &[f64],
    variant: BmoVariant,
    convention: BaseConvention,
) -> Result<f64> {
    let exp = expand(space, filt, g, convention)?;
    let w = space.weights();
    let mut worst = 0f64;
    for idx in 0..filt.num_levels() {
        let reference = match variant {
            BmoVariant::Bmo if idx == 0 => continue,
            BmoVariant::Bmo => &exp.martingale()[idx - 1],
            BmoVariant::SmallBmo => &exp.martingale()[idx],
        };
        let sq: Vec<f64> = g.iter().zip(reference.iter()).map(|(a, b)| (a - b) * (a - b)).collect();
        for m in block_means(w, filt.at(idx), &sq) {
            worst = worst.max(m);
        }
    }
    Ok(num::sqrt(worst))
}

/// `Σ_k ‖d_k f‖_1` with the zero-base expansion.
pub fn diagonal_norm(space: &MeasureSpace, filt: &Filtration, f: &[f64]) -> Result<f64> {
    let exp = expand(space, filt, f, BaseConvention::Zero)?;
    let mut acc = Accumulator::new();
    for d in exp.diffs() {
        acc.add(lp_norm(space, d, 1.0)?);
    }
    Ok(acc.value())
}

/// `α_p = 1/p - 1` for `p ∈ (0, 1)`.
pub fn alpha(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidExponent { name: "p", value: p });
    }
    Ok(1.0 / p - 1.0)
}

/// Per-level, per-block data `(mass, ∫_A |g - g_n|^q, max_A |g - g_n|)`.
fn oscillations(
    space: &MeasureSpace,
    filt: &Filtration,
    g: &[f64],
    q: f64,
    convention: BaseConvention,
) -> Result<Vec<Vec<(f64, f64, f64)>>> {
    let exp = expand(space, filt, g, convention)?;
    let w = space.weights();
    let mut out = Vec::with_capacity(filt.num_levels());
    for (idx, part) in filt.levels().iter().enumerate() {
        let gn = &exp.martingale()[idx];
        out.push(
            part.blocks()
                .iter()
                .map(|members| {
                    let mut mass = Accumulator::new();
                    let mut integral = Accumulator::new();
                    let mut sup = 0f64;
                    for &i in members {
                        let d = (g[i] - gn[i]).abs();
                        mass.add(w[i]);
                        integral.add(w[i] * pow_q(d, q));
                        sup = sup.max(d);
                    }
                    (mass.value(), integral.value(), sup)
                })
                .collect(),
        );
    }
    Ok(out)
}

fn pow_q(d: f64, q: f64) -> f64 {
    if q == 1.0 {
        d
    } else if q == 2.0 {
        d * d
    } else {
        num::powf(d, q)
    }
}

fn root_q(x: f64, q: f64) -> f64 {
    if q == 1.0 {
        x
    } else if q == 2.0 {
        num::sqrt(x)
    } else {
        num::powf(x, 1.0 / q)
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidExponent { name: "q", value: q });
    }
    Ok(())
}

/// `sup_n sup_{A ∈ F_n} P(A)^{-1/q-α_p} (∫_A |g - g_n|^q)^{1/q}`.
///
/// For a disjoint union the `q`-th power of the functional is at most the
/// largest per-block value because `t ↦ t^{1+qα}` is superadditive, so single
/// blocks attain the sup; [`lipschitz_norm_unions`] enumerates unions to
/// cross-check this.
pub fn lipschitz_norm(
    space: &MeasureSpace,
    filt: &Filtration,
    g: &[f64],
    p: f64,
    q: f64,
    convention: BaseConvention,
) -> Result<f64> {
    let a = alpha(p)?;
    check_q(q)?;
    let mut worst = 0f64;
    for level in oscillations(space, filt, g, q, convention)? {
        for (mass, integral, _) in level {
            worst = worst.max(root_q(integral, q) / num::powf(mass, 1.0 / q + a));
        }
    }
    Ok(worst)
}

/// Same functional as [`lipschitz_norm`] with the sup taken over all unions
/// of at most `max_union` blocks per level.
pub fn lipschitz_norm_unions(
    space: &MeasureSpace,
    filt: &Filtration,
    g: &[f64],
    p: f64,
    q: f64,
    max_union: usize,
    convention: BaseConvention,
) -> Result<f64> {
    let a = alpha(p)?;
    check_q(q)?;
    let mut worst = 0f64;
    for level in oscillations(space, filt, g, q, convention)? {
        let mut chosen = Vec::new();
        unions(&level, 0, max_union, &mut chosen, &mut |set| {
            let mass = num::sum(set.iter().map(|&b| level[b].0));
            let integral = num::sum(set.iter().map(|&b| level[b].1));
            worst = worst.max(root_q(integral, q) / num::powf(mass, 1.0 / q + a));
        });
    }
    Ok(worst)
}

fn unions<T>(
    items: &[T],
    start: usize,
    left: usize,
    chosen: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if !chosen.is_empty() {
        visit(chosen);
    }
    if left == 0 {
        return;
    }
    for b in start..items.len() {
        chosen.push(b);
        unions(items, b + 1, left - 1, chosen, visit);
        chosen.pop();
    }
}

/// `sup_n sup_{A ∈ F_n} P(A)^{-α_p} ‖1_A |g - g_n|‖_∞`.
pub fn lipschitz_sup_norm(
    space: &MeasureSpace,
    filt: &Filtration,
    g: &[f64],
    p: f64,
    convention: BaseConvention,
) -> Result<f64> {
    let a = alpha(p)?;
    let mut worst = 0f64;
    for level in oscillations(space, filt, g, 1.0, convention)? {
        for (mass, _, sup) in level {
            worst = worst.max(sup / num::powf(mass, a));
        }
    }
    Ok(worst)
}

/// `‖g - g_{k_min}‖_∞` with the true conditional expectation at the base.
pub fn base_deviation(space: &MeasureSpace, filt: &Filtration, g: &[f64]) -> Result<f64> {
    filt.check_space(space)?;
    space.check_len(g)?;
    let part = filt.at(0);
    let base = expand_means(part, &block_means(space.weights(), part, g));
    Ok(g.iter().zip(&base).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

/// Mean of `g` on a point list.
pub fn mean_on(space: &MeasureSpace, g: &[f64], members: &[usize]) -> f64 {
    block_mean(space.weights(), members, g)
}

/// Tag selecting a norm for [`evaluate_norm`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NormVariant {
    HpS,
    HpSmall,
    HpMax,
    Bmo,
    SmallBmo,
    H1Diag,
    LambdaQ,
    LambdaSup,
    OrliczHardy,
}

impl NormVariant {
    pub const ALL: [NormVariant; 9] = [
        NormVariant::HpS,
        NormVariant::HpSmall,
        NormVariant::HpMax,
        NormVariant::Bmo,
        NormVariant::SmallBmo,
        NormVariant::H1Diag,
        NormVariant::LambdaQ,
        NormVariant::LambdaSup,
        NormVariant::OrliczHardy,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            NormVariant::HpS => "Hp_S",
            NormVariant::HpSmall => "hp_s",
            NormVariant::HpMax => "Hp_max",
            NormVariant::Bmo => "BMO",
            NormVariant::SmallBmo => "bmo",
            NormVariant::H1Diag => "h1_diag",
            NormVariant::LambdaQ => "Lambda_q",
            NormVariant::LambdaSup => "Lambda_sup",
            NormVariant::OrliczHardy => "Orlicz_Hardy",
        }
    }
}

impl fmt::Display for NormVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownVariant;

impl fmt::Display for UnknownVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("unknown norm variant")
    }
}

impl FromStr for NormVariant {
    type Err = UnknownVariant;

    fn from_str(s: &str) -> core::result::Result<Self, UnknownVariant> {
        NormVariant::ALL
            .into_iter()
            .find(|v| v.tag() == s)
            .ok_or(UnknownVariant)
    }
}

/// Exponents consumed by [`evaluate_norm`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormParams {
    pub p: f64,
    pub q: f64,
    pub convention: BaseConvention,
}

impl Default for NormParams {
    fn default() -> Self {
        Self {
            p: 1.0,
            q: 1.0,
            convention: BaseConvention::Expectation,
        }
    }
}

pub fn evaluate_norm(
    space: &MeasureSpace,
    filt: &Filtration,
    f: &[f64],
    variant: NormVariant,
    params: NormParams,
) -> Result<f64> {
    match variant {
        NormVariant::HpS => hardy_norm(space, filt, f, HardyVariant::Square, params.p),
        NormVariant::HpSmall => hardy_norm(space, filt, f, HardyVariant::ConditionalSquare, params.p),
        NormVariant::HpMax => hardy_norm(space, filt, f, HardyVariant::Maximal, params.p),
        NormVariant::Bmo => bmo_norm(space, filt, f, BmoVariant::Bmo, params.convention),
        NormVariant::SmallBmo => bmo_norm(space, filt, f, BmoVariant::SmallBmo, params.convention),
        NormVariant::H1Diag => diagonal_norm(space, filt, f),
        NormVariant::LambdaQ => lipschitz_norm(space, filt, f, params.p, params.q, params.convention),
        NormVariant::LambdaSup => lipschitz_sup_norm(space, filt, f, params.p, params.convention),
        NormVariant::OrliczHardy => {
            let exp = expand(space, filt, f, BaseConvention::Zero)?;
            luxembourg_norm(space, &LogOrlicz, &square_function(&exp))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_space::Partition;
    use alloc::vec;

    const E: BaseConvention = BaseConvention::Expectation;

    fn fixture() -> (MeasureSpace, Filtration) {
        (MeasureSpace::uniform(4).unwrap(), Filtration::uniform_tree(2, 2))
    }

    #[test]
    fn lp_examples() {
        let s = MeasureSpace::uniform(4).unwrap();
        assert_eq!(lp_norm(&s, &[1.0; 4], 2.0).unwrap(), 1.0);
        assert_eq!(lp_norm(&s, &[1.0, -1.0, 2.0, -2.0], 1.0).unwrap(), 1.5);
        assert_eq!(lp_norm(&s, &[3.0, 0.0, 0.0, 0.0], f64::INFINITY).unwrap(), 3.0);
        assert!(lp_norm(&s, &[1.0; 4], 0.0).is_err());
        let half = lp_norm(&s, &[4.0, 0.0, 0.0, 0.0], 0.5).unwrap();
        assert!((half - 0.25 * 0.25 * 4.0).abs() < 1e-15);
    }

    #[test]
    fn hardy_examples() {
        let (s, filt) = fixture();
        let f = [1.0, -1.0, 2.0, -2.0];
        assert_eq!(hardy_norm(&s, &filt, &f, HardyVariant::Square, 1.0).unwrap(), 1.5);
        assert_eq!(hardy_norm(&s, &filt, &f, HardyVariant::Maximal, 1.0).unwrap(), 1.5);
        for v in [HardyVariant::Square, HardyVariant::ConditionalSquare, HardyVariant::Maximal] {
            assert_eq!(hardy_norm(&s, &filt, &[0.0; 4], v, 0.5).unwrap(), 0.0);
        }
    }

    #[test]
    fn bmo_examples() {
        let (s, filt) = fixture();
        let g = [1.0, -1.0, 1.0, -1.0];
        assert_eq!(bmo_norm(&s, &filt, &g, BmoVariant::Bmo, E).unwrap(), 1.0);
        assert_eq!(bmo_norm(&s, &filt, &g, BmoVariant::SmallBmo, E).unwrap(), 1.0);
        assert_eq!(bmo_norm(&s, &filt, &[2.5; 4], BmoVariant::SmallBmo, E).unwrap(), 0.0);
        assert_eq!(bmo_norm(&s, &filt, &[2.5; 4], BmoVariant::Bmo, BaseConvention::Zero).unwrap(), 2.5);
    }

    #[test]
    fn diagonal_examples() {
        let (s, filt) = fixture();
        assert_eq!(diagonal_norm(&s, &filt, &[1.0, -1.0, 2.0, -2.0]).unwrap(), 1.5);
        assert_eq!(diagonal_norm(&s, &filt, &[-3.0; 4]).unwrap(), 3.0);
        assert_eq!(diagonal_norm(&s, &filt, &[0.0; 4]).unwrap(), 0.0);
    }

    #[test]
    fn lipschitz_examples() {
        let (s, filt) = fixture();
        let g = [1.0, -1.0, 1.0, -1.0];
        assert!((lipschitz_norm(&s, &filt, &g, 0.5, 1.0, E).unwrap() - 2.0).abs() < 1e-14);
        assert!((lipschitz_norm(&s, &filt, &g, 0.5, 2.0, E).unwrap() - 2.0).abs() < 1e-14);
        assert!((lipschitz_sup_norm(&s, &filt, &g, 0.5, E).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(lipschitz_norm(&s, &filt, &[4.0; 4], 0.5, 1.0, E).unwrap(), 0.0);
        assert_eq!(lipschitz_sup_norm(&s, &filt, &[4.0; 4], 0.5, E).unwrap(), 0.0);
        assert!(lipschitz_norm(&s, &filt, &g, 1.0, 1.0, E).is_err());
    }

    #[test]
    fn spike_on_trivial_then_discrete() {
        // Brute force: level 0 has one block Ω, level 1 singletons.
        let n = 8usize;
        let s = MeasureSpace::uniform(n).unwrap();
        let filt = Filtration::from_partitions(0, vec![Partition::trivial(n), Partition::discrete(n)]).unwrap();
        let h = 3.0;
        let mut g = vec![0.0; n];
        g[2] = h;
        let mean = h / n as f64;
        let brute = (0..n).map(|i| (g[i] - mean).abs()).fold(0.0, f64::max);
        let got = lipschitz_sup_norm(&s, &filt, &g, 0.5, E).unwrap();
        assert!((got - brute).abs() < 1e-14);
    }

    #[test]
    fn unions_never_beat_single_blocks() {
        let s = MeasureSpace::probability(vec![0.05, 0.15, 0.1, 0.2, 0.12, 0.08, 0.2, 0.1]).unwrap();
        let filt = Filtration::uniform_tree(2, 3);
        let g = [0.3, -1.2, 2.0, 0.7, -0.4, 1.1, -2.2, 0.9];
        for (p, q) in [(0.5, 1.0), (0.75, 2.0), (0.3, 1.0)] {
            let single = lipschitz_norm(&s, &filt, &g, p, q, E).unwrap();
            let unions = lipschitz_norm_unions(&s, &filt, &g, p, q, 4, E).unwrap();
            assert!((single - unions).abs() <= 1e-12 * single);
        }
    }

    #[test]
    fn variant_tags_roundtrip() {
        for v in NormVariant::ALL {
            assert_eq!(v.tag().parse::<NormVariant>().unwrap(), v);
        }
        assert!("Hp".parse::<NormVariant>().is_err());
    }
}
