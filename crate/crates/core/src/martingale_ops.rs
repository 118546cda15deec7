//! Martingale differences, the maximal, square and conditional square
//! functions, and the three paraproducts of a pointwise product.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::function_norms::{bmo_norm, BmoVariant};
use crate::measure_space::{block_means, expand_means, Filtration, Func, MeasureSpace};
use crate::num;

/// What the expansion uses as `f_{k_min}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BaseConvention {
    /// `f_{k_min} = 0`, so the first difference is `E_{k_min+1} f`.
    Zero,
    /// `f_{k_min} = E_{k_min} f`.
    Expectation,
}

/// `f_k` for every level together with the differences `d_k f`.
#[derive(Clone, Debug, PartialEq)]
pub struct MartingaleExpansion {
    k_min: i32,
    convention: BaseConvention,
    /// `levels[idx] = f_{k_min + idx}`; `levels[0]` is the base.
    levels: Vec<Func>,
    /// `diffs[j] = d_{k_min + 1 + j} f`.
    diffs: Vec<Func>,
}

impl MartingaleExpansion {
    pub fn k_min(&self) -> i32 {
        self.k_min
    }

    pub fn k_max(&self) -> i32 {
        self.k_min + self.diffs.len() as i32
    }

    pub fn convention(&self) -> BaseConvention {
        self.convention
    }

    pub fn base(&self) -> &Func {
        &self.levels[0]
    }

    pub fn diffs(&self) -> &[Func] {
        &self.diffs
    }

    /// `d_k f` for `k_min < k <= k_max`.
    pub fn diff(&self, k: i32) -> Option<&Func> {
        let j = k - self.k_min - 1;
        (j >= 0).then(|| self.diffs.get(j as usize)).flatten()
    }

    /// All `f_k`, base first.
    pub fn martingale(&self) -> &[Func] {
        &self.levels
    }

    /// `f_k` for `k_min <= k <= k_max`.
    pub fn level(&self, k: i32) -> Option<&Func> {
        let idx = k - self.k_min;
        (idx >= 0).then(|| self.levels.get(idx as usize)).flatten()
    }

    pub fn terminal(&self) -> &Func {
        self.levels.last().expect("expansion has a base level")
    }

    pub fn n_points(&self) -> usize {
        self.levels[0].len()
    }
}

/// Martingale expansion of `f` along `filt`.
pub fn expand(
    space: &MeasureSpace,
    filt: &Filtration,
    f: &[f64],
    convention: BaseConvention,
) -> Result<MartingaleExpansion> {
    filt.check_space(space)?;
    space.check_len(f)?;
    let w = space.weights();
    let mut levels = Vec::with_capacity(filt.num_levels());
    for (idx, part) in filt.levels().iter().enumerate() {
        if idx == 0 && convention == BaseConvention::Zero {
            levels.push(Func::zeros(f.len()));
        } else {
            levels.push(Func::raw(expand_means(part, &block_means(w, part, f))));
        }
    }
    let diffs = levels.windows(2).map(|pair| pair[1].sub(&pair[0])).collect();
    Ok(MartingaleExpansion {
        k_min: filt.k_min(),
        convention,
        levels,
        diffs,
    })
}

/// `f* = max_k |f_k|` over all levels including the base.
pub fn maximal_function(exp: &MartingaleExpansion) -> Func {
    let mut out = Func::zeros(exp.n_points()).into_vec();
    for level in &exp.levels {
        for (o, v) in out.iter_mut().zip(level.iter()) {
            *o = o.max(v.abs());
        }
    }
    Func::raw(out)
}

/// `S(f) = (Σ_k |d_k f|²)^{1/2}`.
pub fn square_function(exp: &MartingaleExpansion) -> Func {
    let n = exp.n_points();
    Func::from_fn(n, |i| num::sqrt(num::sum(exp.diffs.iter().map(|d| d[i] * d[i]))))
}

/// `s(f) = (Σ_k E_{k-1}|d_k f|²)^{1/2}`.
pub fn conditional_square_function(
    space: &MeasureSpace,
    filt: &Filtration,
    exp: &MartingaleExpansion,
) -> Result<Func> {
    let partial = conditional_square_partials(space, filt, exp)?;
    Ok(partial.into_iter().last().expect("at least one level"))
}

/// `out[idx] = s_{k_min+idx}(f) = (Σ_{k <= k_min+idx} E_{k-1}|d_k f|²)^{1/2}`;
/// `out[0] = 0`. Entry `idx` is measurable at offset `idx - 1`.
pub fn conditional_square_partials(
    space: &MeasureSpace,
    filt: &Filtration,
    exp: &MartingaleExpansion,
) -> Result<Vec<Func>> {
    filt.check_space(space)?;
    if exp.n_points() != space.len() || exp.diffs.len() + 1 != filt.num_levels() {
        return Err(Error::MismatchedFiltration {
            expected: filt.num_levels(),
            found: exp.diffs.len() + 1,
        });
    }
    let w = space.weights();
    let n = space.len();
    let mut acc = alloc::vec![num::Accumulator::new(); n];
    let mut out = Vec::with_capacity(filt.num_levels());
    out.push(Func::zeros(n));
    for (j, d) in exp.diffs.iter().enumerate() {
        let part = filt.at(j);
        let sq: Vec<f64> = d.iter().map(|v| v * v).collect();
        let cond = expand_means(part, &block_means(w, part, &sq));
        for (a, c) in acc.iter_mut().zip(&cond) {
            a.add(*c);
        }
        out.push(Func::from_fn(n, |i| num::sqrt(acc[i].value().max(0.0))));
    }
    Ok(out)
}

/// `Π1 = Σ d_k f d_k g`, `Π2 = Σ f_{k-1} d_k g`, `Π3 = Σ g_{k-1} d_k f`.
#[derive(Clone, Debug, PartialEq)]
pub struct Paraproducts {
    pub pi1: Func,
    pub pi2: Func,
    pub pi3: Func,
}

impl Paraproducts {
    pub fn sum(&self) -> Func {
        self.pi1.add(&self.pi2).add(&self.pi3)
    }

    /// `max_i |f_i g_i - (Π1 + Π2 + Π3)_i|`.
    pub fn residual(&self, f: &[f64], g: &[f64]) -> f64 {
        let total = self.sum();
        f.iter()
            .zip(g)
            .zip(total.iter())
            .fold(0.0, |m, ((a, b), s)| m.max((a * b - s).abs()))
    }
}

/// Paraproducts of `f` and `g` with zero-base expansions. Both functions
/// must be measurable at the finest level so that the decomposition of the
/// pointwise product is exact.
pub fn paraproducts(
    space: &MeasureSpace,
    filt: &Filtration,
    f: &[f64],
    g: &[f64],
) -> Result<Paraproducts> {
    filt.check_space(space)?;
    space.check_len(f)?;
    space.check_len(g)?;
    let last = filt.num_levels() - 1;
    if !filt.is_measurable(f, last, 1e-12) || !filt.is_measurable(g, last, 1e-12) {
        return Err(Error::NotMeasurable { level: filt.k_max() });
    }
    let fe = expand(space, filt, f, BaseConvention::Zero)?;
    let ge = expand(space, filt, g, BaseConvention::Zero)?;
    paraproducts_from(&fe, &ge)
}

/// Paraproducts from two zero-base expansions along the same filtration.
pub fn paraproducts_from(fe: &MartingaleExpansion, ge: &MartingaleExpansion) -> Result<Paraproducts> {
    if fe.convention != BaseConvention::Zero || ge.convention != BaseConvention::Zero {
        return Err(Error::InvalidParameter {
            name: "base convention (paraproducts need a zero base)",
            value: 0.0,
        });
    }
    if fe.n_points() != ge.n_points() || fe.diffs.len() != ge.diffs.len() || fe.k_min != ge.k_min {
        return Err(Error::LengthMismatch {
            expected: fe.n_points(),
            found: ge.n_points(),
        });
    }
    let n = fe.n_points();
    let mut pi1 = alloc::vec![0.0; n];
    for (df, dg) in fe.diffs.iter().zip(&ge.diffs) {
        for i in 0..n {
            pi1[i] += df[i] * dg[i];
        }
    }
    Ok(Paraproducts {
        pi1: Func::raw(pi1),
        pi2: low_high(fe, ge),
        pi3: low_high(ge, fe),
    })
}

/// `Σ_k a_{k-1} d_k b`, accumulated in ascending level order.
fn low_high(a: &MartingaleExpansion, b: &MartingaleExpansion) -> Func {
    let n = a.n_points();
    let mut out = alloc::vec![0.0; n];
    for (j, db) in b.diffs.iter().enumerate() {
        let prev = &a.levels[j];
        for i in 0..n {
            out[i] += prev[i] * db[i];
        }
    }
    Func::raw(out)
}

/// Ratios tracked for the maximal-function BMO estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BmoMaximalRatios {
    pub bmo: f64,
    /// `‖E_{k_min}(g*)‖_∞`.
    pub maximal_base: f64,
    pub maximal_bmo: f64,
    pub base_ratio: f64,
    pub bmo_ratio: f64,
}

/// `(g*)_0 / ‖g‖_BMO` and `‖g*‖_BMO / ‖g‖_BMO` under the zero-base
/// convention for `g`.
pub fn check_bmo_maximal(space: &MeasureSpace, filt: &Filtration, g: &[f64]) -> Result<BmoMaximalRatios> {
    let bmo = bmo_norm(space, filt, g, BmoVariant::Bmo, BaseConvention::Zero)?;
    if bmo == 0.0 {
        return Err(Error::ZeroNorm { what: "BMO norm of g" });
    }
    let exp = expand(space, filt, g, BaseConvention::Zero)?;
    let star = maximal_function(&exp);
    let base_means = block_means(space.weights(), filt.at(0), &star);
    let maximal_base = base_means.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let maximal_bmo = bmo_norm(space, filt, &star, BmoVariant::Bmo, BaseConvention::Expectation)?;
    Ok(BmoMaximalRatios {
        bmo,
        maximal_base,
        maximal_bmo,
        base_ratio: maximal_base / bmo,
        bmo_ratio: maximal_bmo / bmo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn fixture() -> (MeasureSpace, Filtration) {
        (MeasureSpace::uniform(4).unwrap(), Filtration::uniform_tree(2, 2))
    }

    #[test]
    fn expansion_of_alternating_function() {
        let (s, filt) = fixture();
        let e = expand(&s, &filt, &[1.0, -1.0, 2.0, -2.0], BaseConvention::Zero).unwrap();
        assert_eq!(e.diff(1).unwrap().values(), &[0.0; 4]);
        assert_eq!(e.diff(2).unwrap().values(), &[1.0, -1.0, 2.0, -2.0]);
        assert!(e.base().is_zero());
    }

    #[test]
    fn expansion_of_constant() {
        let (s, filt) = fixture();
        let e = expand(&s, &filt, &[1.0; 4], BaseConvention::Zero).unwrap();
        assert_eq!(e.diff(1).unwrap().values(), &[1.0; 4]);
        assert!(e.diff(2).unwrap().is_zero());
    }

    #[test]
    fn expectation_base_is_mean() {
        let (s, filt) = fixture();
        let e = expand(&s, &filt, &[1.0, 2.0, 3.0, 6.0], BaseConvention::Expectation).unwrap();
        assert_eq!(e.base().values(), &[3.0; 4]);
    }

    #[test]
    fn classical_functionals() {
        let (s, filt) = fixture();
        let e = expand(&s, &filt, &[1.0, -1.0, 2.0, -2.0], BaseConvention::Zero).unwrap();
        assert_eq!(square_function(&e).values(), &[1.0, 1.0, 2.0, 2.0]);
        assert_eq!(maximal_function(&e).values(), &[1.0, 1.0, 2.0, 2.0]);
        let cs = conditional_square_function(&s, &filt, &e).unwrap();
        assert_eq!(cs.values(), &[1.0, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn paraproducts_of_constants() {
        let (s, filt) = fixture();
        let p = paraproducts(&s, &filt, &[1.0; 4], &[1.0; 4]).unwrap();
        assert_eq!(p.pi1.values(), &[1.0; 4]);
        assert!(p.pi2.is_zero() && p.pi3.is_zero());
    }

    #[test]
    fn paraproducts_of_alternating_square() {
        let (s, filt) = fixture();
        let f = [1.0, -1.0, 2.0, -2.0];
        let p = paraproducts(&s, &filt, &f, &f).unwrap();
        assert_eq!(p.pi1.values(), &[1.0, 1.0, 4.0, 4.0]);
        assert!(p.pi2.is_zero() && p.pi3.is_zero());
    }

    #[test]
    fn paraproducts_by_hand_abel_summation() {
        let (s, filt) = fixture();
        let g = [1.0, -1.0, 2.0, -2.0];
        let p = paraproducts(&s, &filt, &[1.0; 4], &g).unwrap();
        assert!(p.pi1.is_zero());
        assert_eq!(p.pi2.values(), &g);
        assert!(p.pi3.is_zero());
        assert_eq!(p.residual(&[1.0; 4], &g), 0.0);
    }

    #[test]
    fn paraproducts_reject_bad_inputs() {
        let (s, filt) = fixture();
        assert!(matches!(
            paraproducts(&s, &filt, &[1.0; 3], &[1.0; 4]),
            Err(Error::LengthMismatch { .. })
        ));
        let coarse = Filtration::uniform_tree(2, 1);
        let s2 = MeasureSpace::uniform(2).unwrap();
        assert!(paraproducts(&s2, &coarse, &[1.0, 2.0], &[1.0, 1.0]).is_ok());
        let filt = Filtration::new(4, 0, vec![vec![vec![0, 1, 2, 3]], vec![vec![0, 1], vec![2, 3]]]).unwrap();
        assert_eq!(
            paraproducts(&s, &filt, &[1.0, 2.0, 3.0, 4.0], &[1.0; 4]).unwrap_err(),
            Error::NotMeasurable { level: 1 }
        );
    }

    #[test]
    fn bmo_maximal_alternating() {
        let (s, filt) = fixture();
        let r = check_bmo_maximal(&s, &filt, &[1.0, -1.0, 1.0, -1.0]).unwrap();
        assert_eq!(r.bmo, 1.0);
        assert_eq!(r.maximal_base, 1.0);
        assert_eq!(r.base_ratio, 1.0);
    }

    #[test]
    fn bmo_maximal_constant_and_zero() {
        let (s, filt) = fixture();
        let r = check_bmo_maximal(&s, &filt, &[3.0; 4]).unwrap();
        assert_eq!(r.bmo, 3.0);
        assert!(r.base_ratio.is_finite() && r.bmo_ratio.is_finite());
        assert!(matches!(check_bmo_maximal(&s, &filt, &[0.0; 4]), Err(Error::ZeroNorm { .. })));
    }
}
