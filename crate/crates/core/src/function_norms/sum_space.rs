use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::martingale_ops::{expand, BaseConvention};
use crate::measure_space::{block_means, Filtration, Func, MeasureSpace};
use crate::num;

use super::{diagonal_norm, hardy_norm, HardyVariant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SplitStrategy {
    /// Everything in `h¹`.
    TrivialLeft,
    /// Everything in the diagonal space.
    TrivialRight,
    /// Convex search over per-(level, parent block) weights.
    CoordinateDescent,
}

/// An exhibited splitting `f = left + right`.
#[derive(Clone, Debug, PartialEq)]
pub struct SumSplit {
    /// `‖left‖_{h¹} + ‖right‖_{h¹_d}`.
    pub value: f64,
    pub left: Func,
    pub right: Func,
    pub left_norm: f64,
    pub right_norm: f64,
}

/// Upper bound for the `h¹ + h¹_d` norm of `f` via an explicit splitting.
///
/// Each difference `d_k f` restricted to a block `B` of level `k-1` is split
/// as `(1-θ) d_k f` to the left and `θ d_k f` to the right; both pieces stay
/// martingale differences. The objective is convex in the weights, so
/// coordinate descent with golden-section steps never increases it.
pub fn sum_norm_upper(
    space: &MeasureSpace,
    filt: &Filtration,
    f: &[f64],
    strategy: SplitStrategy,
) -> Result<SumSplit> {
    let last = filt.num_levels() - 1;
    filt.check_space(space)?;
    space.check_len(f)?;
    if !filt.is_measurable(f, last, 1e-12) {
        return Err(Error::NotMeasurable { level: filt.k_max() });
    }
    let exp = expand(space, filt, f, BaseConvention::Zero)?;
    let theta: Vec<Vec<f64>> = match strategy {
        SplitStrategy::TrivialLeft => weights(filt, 0.0),
        SplitStrategy::TrivialRight => weights(filt, 1.0),
        SplitStrategy::CoordinateDescent => descend(space, filt, exp.diffs()),
    };
    let n = space.len();
    let mut left = vec![0.0; n];
    let mut right = vec![0.0; n];
    for (j, d) in exp.diffs().iter().enumerate() {
        let part = filt.at(j);
        for i in 0..n {
            let t = theta[j][part.block_of(i)];
            left[i] += (1.0 - t) * d[i];
            right[i] += t * d[i];
        }
    }
    let left_norm = hardy_norm(space, filt, &left, HardyVariant::ConditionalSquare, 1.0)?;
    let right_norm = diagonal_norm(space, filt, &right)?;
    Ok(SumSplit {
        value: left_norm + right_norm,
        left: Func::raw(left),
        right: Func::raw(right),
        left_norm,
        right_norm,
    })
}

/// `theta[j][b]` for difference `j` and block `b` at offset `j`.
fn weights(filt: &Filtration, value: f64) -> Vec<Vec<f64>> {
    (0..filt.num_levels() - 1)
        .map(|j| vec![value; filt.at(j).len()])
        .collect()
}

fn descend(space: &MeasureSpace, filt: &Filtration, diffs: &[Func]) -> Vec<Vec<f64>> {
    let w = space.weights();
    let n = space.len();
    // c[j][b]: E_{k-1}|d_k f|² on block b; l[j][b]: ∫_B |d_k f|.
    let mut c = Vec::new();
    let mut l = Vec::new();
    for (j, d) in diffs.iter().enumerate() {
        let part = filt.at(j);
        let sq: Vec<f64> = d.iter().map(|v| v * v).collect();
        c.push(block_means(w, part, &sq));
        l.push(
            part.blocks()
                .iter()
                .map(|m| num::sum(m.iter().map(|&i| w[i] * d[i].abs())))
                .collect::<Vec<f64>>(),
        );
    }
    let objective = |theta: &[Vec<f64>]| -> f64 {
        let mut total = 0.0;
        for i in 0..n {
            let s: f64 = (0..diffs.len())
                .map(|j| {
                    let b = filt.at(j).block_of(i);
                    let t = 1.0 - theta[j][b];
                    t * t * c[j][b]
                })
                .sum();
            total += w[i] * num::sqrt(s);
        }
        for j in 0..diffs.len() {
            for (b, lb) in l[j].iter().enumerate() {
                total += theta[j][b] * lb;
            }
        }
        total
    };
    let left = weights(filt, 0.0);
    let right = weights(filt, 1.0);
    let mut theta = if objective(&left) <= objective(&right) { left } else { right };
    // Per-point sum of squares, maintained incrementally.
    let mut sq = vec![0.0; n];
    for i in 0..n {
        for j in 0..diffs.len() {
            let b = filt.at(j).block_of(i);
            let t = 1.0 - theta[j][b];
            sq[i] += t * t * c[j][b];
        }
    }
    let mut current = objective(&theta);
    for _sweep in 0..60 {
        let before = current;
        for j in 0..diffs.len() {
            let part = filt.at(j);
            for b in 0..part.len() {
                if c[j][b] == 0.0 {
                    continue;
                }
                let members = part.block(b);
                let old = theta[j][b];
                let cb = c[j][b];
                let lb = l[j][b];
                let local = |t: f64| -> f64 {
                    let keep = (1.0 - old) * (1.0 - old) * cb;
                    let new = (1.0 - t) * (1.0 - t) * cb;
                    let mut acc = 0.0;
                    for &i in members {
                        acc += w[i] * num::sqrt((sq[i] - keep + new).max(0.0));
                    }
                    acc + t * lb
                };
                let base = local(old);
                let (best_t, best_v) = golden(&local, 0.0, 1.0);
                let (best_t, best_v) = [(0.0, local(0.0)), (1.0, local(1.0)), (best_t, best_v)]
                    .into_iter()
                    .fold((old, base), |acc, cand| if cand.1 < acc.1 { cand } else { acc });
                if best_v < base {
                    let keep = (1.0 - old) * (1.0 - old) * cb;
                    let new = (1.0 - best_t) * (1.0 - best_t) * cb;
                    for &i in members {
                        sq[i] = (sq[i] - keep + new).max(0.0);
                    }
                    theta[j][b] = best_t;
                }
            }
        }
        current = objective(&theta);
        if before - current <= 1e-13 * before.abs().max(1e-300) {
            break;
        }
    }
    theta
}

fn golden(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (num::sqrt(5.0) - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..80 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (MeasureSpace, Filtration) {
        (MeasureSpace::uniform(8).unwrap(), Filtration::uniform_tree(2, 3))
    }

    #[test]
    fn trivial_left_is_conditional_square_norm() {
        let (s, filt) = fixture();
        let f = [1.0, -2.0, 0.5, 0.5, 3.0, 1.0, -1.0, 0.0];
        let split = sum_norm_upper(&s, &filt, &f, SplitStrategy::TrivialLeft).unwrap();
        let h1 = hardy_norm(&s, &filt, &f, HardyVariant::ConditionalSquare, 1.0).unwrap();
        assert!((split.value - h1).abs() < 1e-14);
        assert!(split.right.is_zero());
    }

    #[test]
    fn trivial_right_on_single_difference() {
        let s = MeasureSpace::uniform(4).unwrap();
        let filt = Filtration::uniform_tree(2, 2);
        let f = [1.0, -1.0, 2.0, -2.0];
        let split = sum_norm_upper(&s, &filt, &f, SplitStrategy::TrivialRight).unwrap();
        assert_eq!(split.value, 1.5);
    }

    #[test]
    fn descent_beats_trivial_splits() {
        let (s, filt) = fixture();
        let f = [0.3, -1.7, 2.2, 0.1, -0.6, 0.6, 4.0, -3.9];
        let l = sum_norm_upper(&s, &filt, &f, SplitStrategy::TrivialLeft).unwrap();
        let r = sum_norm_upper(&s, &filt, &f, SplitStrategy::TrivialRight).unwrap();
        let c = sum_norm_upper(&s, &filt, &f, SplitStrategy::CoordinateDescent).unwrap();
        assert!(c.value <= l.value.min(r.value) + 1e-12);
        assert!(c.left.add(&c.right).max_diff(&Func::new(f.to_vec()).unwrap()) < 1e-12);
    }
}
