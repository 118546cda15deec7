use crate::error::{Error, Result};
use crate::measure_space::MeasureSpace;
use crate::num::{self, Accumulator};

/// Growth function `Φ: [0, ∞) → [0, ∞)`.
pub trait Orlicz {
    fn eval(&self, t: f64) -> f64;
}

/// Point-dependent growth function `Ψ(x, t)`.
pub trait Musielak {
    fn eval(&self, x: usize, t: f64) -> f64;
}

impl<T: Orlicz> Musielak for T {
    fn eval(&self, _x: usize, t: f64) -> f64 {
        Orlicz::eval(self, t)
    }
}

/// `Φ(t) = t / log(e + t)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LogOrlicz;

impl Orlicz for LogOrlicz {
    fn eval(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        t / num::ln(core::f64::consts::E + t)
    }
}

/// `t^p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerOrlicz(pub f64);

impl Orlicz for PowerOrlicz {
    fn eval(&self, t: f64) -> f64 {
        num::powf(t, self.0)
    }
}

/// Closure-backed Orlicz function.
pub struct OrliczFn<F>(pub F);

impl<F: Fn(f64) -> f64> Orlicz for OrliczFn<F> {
    fn eval(&self, t: f64) -> f64 {
        (self.0)(t)
    }
}

/// Closure-backed Musielak–Orlicz function.
pub struct MusielakFn<F>(pub F);

impl<F: Fn(usize, f64) -> f64> Musielak for MusielakFn<F> {
    fn eval(&self, x: usize, t: f64) -> f64 {
        (self.0)(x, t)
    }
}

/// Spot checks of the Orlicz axioms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrliczCheck {
    pub vanishes_at_zero: bool,
    pub positive: bool,
    pub nondecreasing: bool,
    pub unbounded: bool,
}

impl OrliczCheck {
    pub fn passed(&self) -> bool {
        self.vanishes_at_zero && self.positive && self.nondecreasing && self.unbounded
    }
}

fn check_fn(eval: impl Fn(f64) -> f64) -> OrliczCheck {
    let grid = (-40..=40).map(|e| num::powf(2.0, e as f64 * 0.5));
    let mut positive = true;
    let mut nondecreasing = true;
    let mut prev = 0.0;
    for t in grid {
        let v = eval(t);
        positive &= v > 0.0;
        nondecreasing &= v >= prev;
        prev = v;
    }
    OrliczCheck {
        vanishes_at_zero: eval(0.0) == 0.0,
        positive,
        nondecreasing,
        unbounded: eval(1e12) > 1e6 * eval(1.0),
    }
}

pub fn check_orlicz(phi: &impl Orlicz) -> OrliczCheck {
    check_fn(|t| phi.eval(t))
}

/// Runs the Orlicz checks at every listed point.
pub fn check_musielak(psi: &impl Musielak, points: impl IntoIterator<Item = usize>) -> OrliczCheck {
    let mut all = OrliczCheck {
        vanishes_at_zero: true,
        positive: true,
        nondecreasing: true,
        unbounded: true,
    };
    for x in points {
        let c = check_fn(|t| psi.eval(x, t));
        all.vanishes_at_zero &= c.vanishes_at_zero;
        all.positive &= c.positive;
        all.nondecreasing &= c.nondecreasing;
        all.unbounded &= c.unbounded;
    }
    all
}

/// `∫ Ψ(x, |f(x)| / λ) dμ`.
pub fn modular(space: &MeasureSpace, psi: &impl Musielak, f: &[f64], lambda: f64) -> f64 {
    let mut acc = Accumulator::new();
    for (i, (&w, &v)) in space.weights().iter().zip(f).enumerate() {
        if v != 0.0 {
            acc.add(w * psi.eval(i, v.abs() / lambda));
        }
    }
    acc.value()
}

/// `inf{λ > 0 : ∫ Ψ(x, |f|/λ) dμ <= 1}`.
///
/// Starts from `λ₀ = ‖f‖_1 + ‖f‖_∞`, doubles or halves until the modular
/// crosses 1, then bisects to relative width `1e-12`. Returns the upper end of
/// the final bracket, where the modular is at most 1.
pub fn luxembourg_norm(space: &MeasureSpace, psi: &impl Musielak, f: &[f64]) -> Result<f64> {
    space.check_len(f)?;
    if f.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let l1 = num::sum(space.weights().iter().zip(f).map(|(w, v)| w * v.abs()));
    let sup = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let start = l1 + sup;
    let (mut lo, mut hi);
    if modular(space, psi, f, start) <= 1.0 {
        hi = start;
        lo = start * 0.5;
        let mut steps = 0;
        while modular(space, psi, f, lo) <= 1.0 {
            hi = lo;
            lo *= 0.5;
            steps += 1;
            if steps > 2200 || lo == 0.0 {
                return Err(Error::NoBracket { what: "Luxembourg modular" });
            }
        }
    } else {
        lo = start;
        hi = start * 2.0;
        let mut steps = 0;
        while modular(space, psi, f, hi) > 1.0 {
            lo = hi;
            hi *= 2.0;
            steps += 1;
            if steps > 2200 || !hi.is_finite() {
                return Err(Error::NoBracket { what: "Luxembourg modular" });
            }
        }
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if modular(space, psi, f, mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn root_of_phi_equals_one() -> f64 {
        // t / log(e + t) = 1 by plain bisection on [1, 10].
        let (mut lo, mut hi) = (1.0f64, 10.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = mid / (core::f64::consts::E + mid).ln();
            if v < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn zero_function_has_zero_norm() {
        let s = MeasureSpace::uniform(3).unwrap();
        assert_eq!(luxembourg_norm(&s, &LogOrlicz, &[0.0; 3]).unwrap(), 0.0);
    }

    #[test]
    fn constant_function_against_root_oracle() {
        let s = MeasureSpace::uniform(5).unwrap();
        let t_star = root_of_phi_equals_one();
        for c in [0.01, 1.0, 7.5, 1e6] {
            let got = luxembourg_norm(&s, &LogOrlicz, &[c; 5]).unwrap();
            assert!((got - c / t_star).abs() <= 1e-10 * (c / t_star), "{c}: {got}");
        }
    }

    #[test]
    fn orlicz_homogeneity() {
        let s = MeasureSpace::probability(vec![0.2, 0.3, 0.5]).unwrap();
        let f = [1.5, -0.2, 40.0];
        let a = luxembourg_norm(&s, &LogOrlicz, &f).unwrap();
        let b = luxembourg_norm(&s, &LogOrlicz, &[3.0, -0.4, 80.0]).unwrap();
        assert!((b / a - 2.0).abs() < 1e-9);
    }

    #[test]
    fn modular_is_one_at_the_norm() {
        let s = MeasureSpace::probability(vec![0.2, 0.3, 0.5]).unwrap();
        let f = [1e-3, 5.0, -2.0];
        let lam = luxembourg_norm(&s, &LogOrlicz, &f).unwrap();
        assert!((modular(&s, &LogOrlicz, &f, lam) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn power_orlicz_matches_lp() {
        let s = MeasureSpace::probability(vec![0.25, 0.25, 0.5]).unwrap();
        let f = [2.0, 0.0, 1.0];
        let lam = luxembourg_norm(&s, &PowerOrlicz(1.0), &f).unwrap();
        assert!((lam - 1.0).abs() < 1e-11);
    }

    #[test]
    fn phi_passes_axiom_checks() {
        assert!(check_orlicz(&LogOrlicz).passed());
        assert!(!check_orlicz(&OrliczFn(|t: f64| t.min(1.0))).passed());
    }
}
