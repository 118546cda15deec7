//! Simple `(p,q)`-atoms and constructive atomic decompositions.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::function_norms::lp_norm;
use crate::martingale_ops::{conditional_square_partials, expand, BaseConvention};
use crate::measure_space::{block_mean, Filtration, Func, MeasureSpace};
use crate::num::{self, Accumulator};

/// Candidate simple atom supported on block `block` of level `level`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimpleAtom {
    pub values: Func,
    pub level: i32,
    pub block: usize,
    pub p: f64,
    pub q: f64,
}

/// Outcome of [`validate_simple_atom`]; defects are absolute.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AtomReport {
    /// `max |E_k a|`.
    pub mean_defect: f64,
    /// `max |a|` outside the block.
    pub support_defect: f64,
    /// `‖a‖_q`.
    pub size: f64,
    /// `P(A)^{1/q - 1/p}`.
    pub size_bound: f64,
    pub mean_ok: bool,
    pub support_ok: bool,
    pub size_ok: bool,
}

impl AtomReport {
    pub fn is_valid(&self) -> bool {
        self.mean_ok && self.support_ok && self.size_ok
    }

    /// `size / size_bound`.
    pub fn size_margin(&self) -> f64 {
        self.size / self.size_bound
    }
}

fn check_exponents(p: f64, q: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidExponent { name: "p", value: p });
    }
    if !(q >= 1.0) {
        return Err(Error::InvalidExponent { name: "q", value: q });
    }
    Ok(())
}

/// `1/q - 1/p` with `1/q = 0` at `q = ∞`.
pub fn size_exponent(p: f64, q: f64) -> f64 {
    let inv_q = if q == f64::INFINITY { 0.0 } else { 1.0 / q };
    inv_q - 1.0 / p
}

/// Checks the three atom conditions: `E_k a = 0`, `supp a ⊆ A`,
/// `‖a‖_q <= P(A)^{1/q-1/p}`.
pub fn validate_simple_atom(
    space: &MeasureSpace,
    filt: &Filtration,
    atom: &SimpleAtom,
) -> Result<AtomReport> {
    filt.check_space(space)?;
    space.check_len(&atom.values)?;
    check_exponents(atom.p, atom.q)?;
    let idx = filt.index_of(atom.level)?;
    let part = filt.at(idx);
    if atom.block >= part.len() {
        return Err(Error::NotABlock { level: atom.level });
    }
    let a = atom.values.values();
    let w = space.weights();
    let scale = atom.values.max_abs();
    let mean_defect = part
        .blocks()
        .iter()
        .map(|m| block_mean(w, m, a).abs())
        .fold(0.0, f64::max);
    let support_defect = (0..a.len())
        .filter(|&i| part.block_of(i) != atom.block)
        .map(|i| a[i].abs())
        .fold(0.0, f64::max);
    let size = lp_norm(space, a, atom.q)?;
    let size_bound = num::powf(space.mass(part.block(atom.block)), size_exponent(atom.p, atom.q));
    Ok(AtomReport {
        mean_defect,
        support_defect,
        size,
        size_bound,
        mean_ok: mean_defect <= 1e-12 * scale.max(f64::MIN_POSITIVE),
        support_ok: support_defect == 0.0,
        size_ok: size <= size_bound * (1.0 + 1e-12),
    })
}

/// `λ · a` with the stopping stage that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicTerm {
    pub lambda: f64,
    pub atom: SimpleAtom,
    /// Threshold exponent `j` (`None` for block splits).
    pub stage: Option<i32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecompositionMethod {
    StoppingTime,
    /// `f = Σ_A 1_A f` over the blocks of a level where `E_k f = 0`.
    BlockSplit { level: i32 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomicDecomposition {
    pub p: f64,
    pub q: f64,
    pub method: DecompositionMethod,
    /// `E_{k_min} f`, which no simple atom can carry; zero when `f` has
    /// vanishing coarsest conditional expectation.
    pub base: Func,
    pub terms: Vec<AtomicTerm>,
}

impl AtomicDecomposition {
    /// `(Σ |λ_j|^p)^{1/p}`.
    pub fn quasi_norm(&self) -> f64 {
        quasi_norm(self.p, &self.terms)
    }

    pub fn reconstruct(&self, n: usize) -> Func {
        let mut acc = vec![Accumulator::new(); n];
        for (a, b) in acc.iter_mut().zip(self.base.iter()) {
            if *b != 0.0 {
                a.add(*b);
            }
        }
        for t in &self.terms {
            for (a, v) in acc.iter_mut().zip(t.atom.values.iter()) {
                if *v != 0.0 {
                    a.add(t.lambda * v);
                }
            }
        }
        Func::raw(acc.iter().map(Accumulator::value).collect())
    }
}

fn quasi_norm(p: f64, terms: &[AtomicTerm]) -> f64 {
    if terms.is_empty() {
        return 0.0;
    }
    if p == 1.0 {
        return num::sum(terms.iter().map(|t| t.lambda.abs()));
    }
    num::powf(num::sum(terms.iter().map(|t| num::powf(t.lambda.abs(), p))), 1.0 / p)
}

/// Atomic decomposition of `f` into simple `(p,q)`-atoms.
///
/// The stopping times are `ν_j = min{n : s_{n+1}(f) > 2^j}`; each
/// `f^{ν_{j+1}} - f^{ν_j}` is cut along the blocks of `{ν_j = n}`, every
/// piece is moved to the deepest single block that contains its support and
/// on which it has mean zero, and then normalized. The level-wise block
/// splits at levels where `E_k f = 0` are also tried; the cheapest
/// decomposition in quasi-norm is returned.
pub fn stopping_time_decomposition(
    space: &MeasureSpace,
    filt: &Filtration,
    f: &[f64],
    p: f64,
    q: f64,
) -> Result<AtomicDecomposition> {
    filt.check_space(space)?;
    space.check_len(f)?;
    check_exponents(p, q)?;
    let last = filt.num_levels() - 1;
    if !filt.is_measurable(f, last, 1e-12) {
        return Err(Error::NotMeasurable { level: filt.k_max() });
    }
    let base = expand(space, filt, f, BaseConvention::Expectation)?.base().clone();
    let g = f.iter().zip(base.iter()).map(|(a, b)| a - b).collect::<Vec<_>>();
    let mut best = AtomicDecomposition {
        p,
        q,
        method: DecompositionMethod::StoppingTime,
        base: base.clone(),
        terms: stopping_terms(space, filt, &g, p, q)?,
    };
    let mut best_norm = best.quasi_norm();
    let exp = expand(space, filt, &g, BaseConvention::Expectation)?;
    let tol = 1e-12 * g.iter().fold(0f64, |m, v| m.max(v.abs()));
    for idx in 0..filt.num_levels() {
        if idx > 0 && exp.martingale()[idx].max_abs() > tol {
            continue;
        }
        let terms = split_terms(space, filt, &g, idx, p, q)?;
        let norm = quasi_norm(p, &terms);
        if norm < best_norm {
            best_norm = norm;
            best = AtomicDecomposition {
                p,
                q,
                method: DecompositionMethod::BlockSplit {
                    level: filt.k_min() + idx as i32,
                },
                base: base.clone(),
                terms,
            };
        }
    }
    Ok(best)
}

/// `(Σ|λ_j|^p)^{1/p}` of [`stopping_time_decomposition`].
pub fn atomic_norm_upper(
    space: &MeasureSpace,
    filt: &Filtration,
    f: &[f64],
    p: f64,
    q: f64,
) -> Result<f64> {
    Ok(stopping_time_decomposition(space, filt, f, p, q)?.quasi_norm())
}

fn stopping_terms(
    space: &MeasureSpace,
    filt: &Filtration,
    f: &[f64],
    p: f64,
    q: f64,
) -> Result<Vec<AtomicTerm>> {
    let n = space.len();
    let levels = filt.num_levels();
    let exp = expand(space, filt, f, BaseConvention::Zero)?;
    let s = conditional_square_partials(space, filt, &exp)?;
    let (mut lo, mut hi) = (f64::INFINITY, 0f64);
    for level in &s {
        for &v in level.iter() {
            if v > 0.0 {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    if hi == 0.0 {
        return Ok(Vec::new());
    }
    let j_min = num::floor(num::log2(lo)) as i32 - 1;
    let j_max = num::ceil(num::log2(hi)) as i32 + 1;
    let never = levels - 1;
    let stop = |j: i32| -> Vec<usize> {
        let threshold = num::powf(2.0, j as f64);
        (0..n)
            .map(|x| (0..never).find(|&m| s[m + 1][x] > threshold).unwrap_or(never))
            .collect()
    };
    let diffs = exp.diffs();
    let mut terms = Vec::new();
    let mut nu_j = stop(j_min);
    for j in j_min..j_max {
        let nu_next = stop(j + 1);
        // Pieces keyed by (n, block at offset n).
        let mut pieces: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
        for x in 0..n {
            let start = nu_j[x];
            if start == never {
                continue;
            }
            let mut acc = Accumulator::new();
            for k in start + 1..=nu_next[x] {
                acc.add(diffs[k - 1][x]);
            }
            let v = acc.value();
            if v != 0.0 {
                let b = filt.at(start).block_of(x);
                pieces.entry((start, b)).or_insert_with(|| vec![0.0; n])[x] = v;
            }
        }
        for ((level, block), values) in pieces {
            if let Some(term) = make_term(space, filt, values, level, block, p, q, Some(j)) {
                terms.push(term);
            }
        }
        nu_j = nu_next;
    }
    terms.sort_by_key(|t| (t.stage, t.atom.level, t.atom.block));
    Ok(terms)
}

fn split_terms(
    space: &MeasureSpace,
    filt: &Filtration,
    f: &[f64],
    idx: usize,
    p: f64,
    q: f64,
) -> Result<Vec<AtomicTerm>> {
    let part = filt.at(idx);
    let n = space.len();
    let mut terms = Vec::new();
    for (b, members) in part.blocks().iter().enumerate() {
        if members.iter().all(|&i| f[i] == 0.0) {
            continue;
        }
        let mut values = vec![0.0; n];
        for &i in members {
            values[i] = f[i];
        }
        if let Some(term) = make_term(space, filt, values, idx, b, p, q, None) {
            terms.push(term);
        }
    }
    Ok(terms)
}

/// Tightens a mean-zero piece on block `block` at offset `idx` to the deepest
/// block carrying it, removes the rounding residue of its mean there and
/// normalizes.
#[allow(clippy::too_many_arguments)]
fn make_term(
    space: &MeasureSpace,
    filt: &Filtration,
    mut values: Vec<f64>,
    idx: usize,
    block: usize,
    p: f64,
    q: f64,
    stage: Option<i32>,
) -> Option<AtomicTerm> {
    let w = space.weights();
    let support: Vec<usize> = (0..values.len()).filter(|&i| values[i] != 0.0).collect();
    let first = *support.first()?;
    let scale = support.iter().fold(0.0f64, |m, &i| m.max(values[i].abs()));
    let (mut level, mut b) = (idx, block);
    for m in (idx + 1..filt.num_levels()).rev() {
        let part = filt.at(m);
        let cand = part.block_of(first);
        if support.iter().all(|&i| part.block_of(i) == cand)
            && block_mean(w, part.block(cand), &values).abs() <= 1e-12 * scale
        {
            level = m;
            b = cand;
            break;
        }
    }
    let members = filt.at(level).block(b);
    let mean = block_mean(w, members, &values);
    if mean != 0.0 {
        for &i in members {
            values[i] -= mean;
        }
    }
    let size = lp_norm(space, &values, q).ok()?;
    if size == 0.0 {
        return None;
    }
    let lambda = size / num::powf(space.mass(members), size_exponent(p, q));
    for v in &mut values {
        *v /= lambda;
    }
    Some(AtomicTerm {
        lambda,
        atom: SimpleAtom {
            values: Func::raw(values),
            level: filt.k_min() + level as i32,
            block: b,
            p,
            q,
        },
        stage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_norms::{hardy_norm, HardyVariant};

    fn fixture() -> (MeasureSpace, Filtration) {
        (MeasureSpace::uniform(4).unwrap(), Filtration::uniform_tree(2, 2))
    }

    fn atom(values: [f64; 4], p: f64, q: f64) -> SimpleAtom {
        SimpleAtom {
            values: Func::new(values.to_vec()).unwrap(),
            level: 1,
            block: 0,
            p,
            q,
        }
    }

    #[test]
    fn valid_atom() {
        let (s, filt) = fixture();
        let r = validate_simple_atom(&s, &filt, &atom([2.0, -2.0, 0.0, 0.0], 1.0, f64::INFINITY)).unwrap();
        assert!(r.is_valid());
        assert_eq!(r.size, 2.0);
        assert_eq!(r.size_bound, 2.0);
    }

    #[test]
    fn oversized_atom() {
        let (s, filt) = fixture();
        let r = validate_simple_atom(&s, &filt, &atom([3.0, -3.0, 0.0, 0.0], 1.0, f64::INFINITY)).unwrap();
        assert!(r.mean_ok && r.support_ok && !r.size_ok);
        assert_eq!(r.size_margin(), 1.5);
    }

    #[test]
    fn atom_without_cancellation() {
        let (s, filt) = fixture();
        let r = validate_simple_atom(&s, &filt, &atom([1.0, 1.0, 0.0, 0.0], 1.0, f64::INFINITY)).unwrap();
        assert!(!r.mean_ok);
        assert_eq!(r.mean_defect, 1.0);
    }

    #[test]
    fn zero_function_decomposes_to_nothing() {
        let (s, filt) = fixture();
        let d = stopping_time_decomposition(&s, &filt, &[0.0; 4], 1.0, 2.0).unwrap();
        assert!(d.terms.is_empty());
        assert_eq!(atomic_norm_upper(&s, &filt, &[0.0; 4], 0.5, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn single_atom_is_reproduced() {
        let (s, filt) = fixture();
        let f = [3.0, -3.0, 0.0, 0.0];
        let d = stopping_time_decomposition(&s, &filt, &f, 1.0, f64::INFINITY).unwrap();
        assert_eq!(d.terms.len(), 1);
        assert!((d.terms[0].lambda - 1.5).abs() < 1e-15);
        assert_eq!(d.terms[0].atom.values.values(), &[2.0, -2.0, 0.0, 0.0]);
        let norm = atomic_norm_upper(&s, &filt, &[2.0, -2.0, 0.0, 0.0], 1.0, f64::INFINITY).unwrap();
        assert!(norm <= 1.0 + 1e-10);
    }

    #[test]
    fn two_disjoint_atoms() {
        let s = MeasureSpace::uniform(8).unwrap();
        let filt = Filtration::uniform_tree(2, 3);
        let f = [2.0, -2.0, 0.0, 0.0, 0.0, 0.0, 4.0, -4.0];
        let d = stopping_time_decomposition(&s, &filt, &f, 1.0, f64::INFINITY).unwrap();
        assert!(d.quasi_norm() <= 2.0 + 1e-10);
        assert!(d.reconstruct(8).max_diff(&Func::new(f.to_vec()).unwrap()) < 1e-12);
    }

    #[test]
    fn random_three_level_function() {
        let s = MeasureSpace::uniform(8).unwrap();
        let filt = Filtration::uniform_tree(2, 3);
        let f = [0.7, -1.3, 2.9, 0.4, -0.1, 5.5, -2.6, 1.0];
        let d = stopping_time_decomposition(&s, &filt, &f, 1.0, 2.0).unwrap();
        let back = d.reconstruct(8);
        for (a, b) in back.iter().zip(f) {
            assert!((a - b).abs() <= 1e-10);
        }
        for t in &d.terms {
            assert!(validate_simple_atom(&s, &filt, &t.atom).unwrap().is_valid());
        }
        let hs = hardy_norm(&s, &filt, &f, HardyVariant::ConditionalSquare, 1.0).unwrap();
        let ratio = d.quasi_norm() / hs;
        assert!(ratio.is_finite() && ratio > 0.0);
    }

    #[test]
    fn terms_are_ordered() {
        let s = MeasureSpace::uniform(8).unwrap();
        let filt = Filtration::uniform_tree(2, 3);
        let f = [0.7, -1.3, 2.9, 0.4, -0.1, 5.5, -2.6, 1.0];
        let terms = stopping_terms(&s, &filt, &f, 0.5, 2.0).unwrap();
        let keys: Vec<_> = terms.iter().map(|t| (t.stage, t.atom.level, t.atom.block)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }
}
