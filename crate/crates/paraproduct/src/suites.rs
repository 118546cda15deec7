//! Randomized suites. A suite draws inputs per trial, evaluates a numerator
//! and a denominator, and reports the sup of their ratio over a size ladder
//! or over random sizes.

use std::collections::BTreeMap;
use std::marker::PhantomData;
use std::sync::OnceLock;
use std::time::Instant;

use paraproduct_core::atomic::{atomic_norm_upper, stopping_time_decomposition, validate_simple_atom};
use paraproduct_core::dyadic_geometry::{
    build_dyadic_system, euclidean_shifted_grids, shifted_grid, system_to_filtration, verify_system,
    DyadicParams, DyadicSystem, QuasiMetricSpace,
};
use paraproduct_core::function_norms::{
    base_deviation, bmo_norm, hardy_norm, lipschitz_norm, lipschitz_sup_norm, lp_norm, luxembourg_norm, mean_on,
    modular, sum_norm_upper, BmoVariant, HardyVariant, LogOrlicz, SplitStrategy,
};
use paraproduct_core::homogeneous::{
    ball_atom_to_dyadic, ball_integral_growth_check, ball_norm, cube_norm, dyadic_atom_to_ball,
    multiplier_inequality, pi_f_operators, plus_norm, validate_ball_atom, BallAtom, BallNorm, BasePointContext,
    PlusNorm, Psi,
};
use paraproduct_core::martingale_ops::{
    check_bmo_maximal, conditional_square_function, expand, maximal_function, paraproducts, square_function,
    BaseConvention,
};
use paraproduct_core::measure_space::conditional_expectation;
use paraproduct_core::verify::{
    atom_on, jittered_cloud, ladder_growth, martingale_on, multiplier_on, random_cloud, random_filtration, summarize, trial_rng,
    ConstantEstimate, Fixture, MartingaleKind, Shape, TrialRatio, LADDER, LADDER_FACTOR, MIN_NONDEGENERATE,
};
use paraproduct_core::{Error, Filtration, Func, MeasureSpace, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::report::{Check, SizeSummary, VerificationReport, Witness};

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("unknown suite `{0}`")]
    Unknown(String),
    #[error("suite {suite}: {stage}")]
    Core { suite: &'static str, stage: &'static str, source: Error },
    #[error("suite {suite}: witness inputs do not round-trip: {message}")]
    Witness { suite: &'static str, message: String },
}

/// Result of evaluating one trial.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrialOut {
    pub numerator: f64,
    pub denominator: f64,
    pub violations: u64,
    pub extras: Vec<(&'static str, f64)>,
}

impl TrialOut {
    pub fn ratio(numerator: f64, denominator: f64) -> Self {
        Self { numerator, denominator, ..Self::default() }
    }

    pub fn value(v: f64) -> Self {
        Self::ratio(v, 1.0)
    }

    /// A trial with a vanishing denominator, counted as skipped.
    pub fn degenerate() -> Self {
        Self::ratio(0.0, 0.0)
    }

    pub fn extra(mut self, name: &'static str, v: f64) -> Self {
        self.extras.push((name, v));
        self
    }

    pub fn violations(mut self, count: u64) -> Self {
        self.violations += count;
        self
    }
}

/// Zero-norm failures make a trial degenerate instead of failing the suite.
fn or_degenerate(r: Result<TrialOut>) -> Result<TrialOut> {
    match r {
        Err(Error::ZeroNorm { .. }) => Ok(TrialOut::degenerate()),
        other => other,
    }
}

pub trait Bench: Sync {
    type Input: Serialize + DeserializeOwned + Send;

    /// Draws the inputs of `trial` at size `n`.
    fn generate(&self, rng: &mut ChaCha8Rng, n: usize, trial: u64) -> Result<Self::Input>;

    fn evaluate(&self, input: &Self::Input) -> Result<TrialOut>;
}

pub struct FnBench<I, G, E> {
    generate: G,
    evaluate: E,
    _input: PhantomData<fn() -> I>,
}

impl<I, G, E> Bench for FnBench<I, G, E>
where
    I: Serialize + DeserializeOwned + Send,
    G: Fn(&mut ChaCha8Rng, usize, u64) -> Result<I> + Sync,
    E: Fn(&I) -> Result<TrialOut> + Sync,
{
    type Input = I;

    fn generate(&self, rng: &mut ChaCha8Rng, n: usize, trial: u64) -> Result<I> {
        (self.generate)(rng, n, trial)
    }

    fn evaluate(&self, input: &I) -> Result<TrialOut> {
        (self.evaluate)(input)
    }
}

fn bench<I, G, E>(generate: G, evaluate: E) -> FnBench<I, G, E>
where
    I: Serialize + DeserializeOwned + Send,
    G: Fn(&mut ChaCha8Rng, usize, u64) -> Result<I> + Sync,
    E: Fn(&I) -> Result<TrialOut> + Sync,
{
    FnBench { generate, evaluate, _input: PhantomData }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sizes {
    /// Exact sizes 64, 256 and 512 with a growth check.
    Ladder,
    /// Sizes drawn per trial from `2..=max`.
    Random(usize),
}

#[derive(Clone, Copy, Debug)]
pub struct SuiteInfo {
    pub id: &'static str,
    pub summary: &'static str,
    /// Trials per size.
    pub trials: u64,
    pub sizes: Sizes,
    pub upper: Option<f64>,
    pub lower: Option<f64>,
    /// Also checks ladder growth of `1 / min_ratio`.
    pub two_sided: bool,
    /// Bounds on the largest value of named extras; unlisted extras only
    /// have to be finite.
    pub extras: &'static [(&'static str, f64)],
}

const BASE: SuiteInfo = SuiteInfo {
    id: "",
    summary: "",
    trials: 334,
    sizes: Sizes::Ladder,
    upper: None,
    lower: None,
    two_sided: false,
    extras: &[],
};

pub const SUITES: &[SuiteInfo] = &[
    SuiteInfo {
        id: "identity",
        summary: "|fg - Π1 - Π2 - Π3| / (1 + |f|∞ |g|∞) on random filtrations",
        trials: 1000,
        sizes: Sizes::Random(512),
        upper: Some(1e-12),
        ..BASE
    },
    SuiteInfo {
        id: "functional-identities",
        summary: "|∫(S² - s²)| / ∫S², with tower, projection and integral checks over all level pairs",
        trials: 200,
        sizes: Sizes::Random(512),
        upper: Some(1e-10),
        extras: &[("tower", 1e-12), ("projection", 1e-12), ("integral", 1e-12)],
        ..BASE
    },
    SuiteInfo {
        id: "atomic",
        summary: "stopping-time atomic quasi-norm over |s f|_p, p in {1/2, 1}, q = 2",
        trials: 200,
        extras: &[("reconstruction", 1e-10)],
        ..BASE
    },
    SuiteInfo {
        id: "doob",
        summary: "(1 - p) |f*|_p^p for |f|_1 <= 1, p in {0.3, 0.5, 0.8}",
        trials: 900,
        sizes: Sizes::Random(512),
        extras: &[("excess", 1e-9)],
        ..BASE
    },
    SuiteInfo {
        id: "lipschitz-char",
        summary: "sup-oscillation Lipschitz norm over the q = 1 norm, p in {1/2, 3/4}",
        trials: 334,
        lower: Some(1.0 - 1e-12),
        ..BASE
    },
    SuiteInfo {
        id: "holder-phi",
        summary: "|fg|_Φ / (|f|_1 |g|_BMO) with Φ(t) = t / log(e + t)",
        ..BASE
    },
    SuiteInfo { id: "pi1-h1", summary: "|Π1(f, g)|_1 / (|Sf|_1 |g|_BMO)", ..BASE },
    SuiteInfo { id: "pi2-h1", summary: "|S Π2(f, g)|_1 / (|Sf|_1 |g|_BMO)", ..BASE },
    SuiteInfo { id: "pi3-h1", summary: "|S Π3(f, g)|_Φ / (|Sf|_1 |g|_BMO)", ..BASE },
    SuiteInfo { id: "pi1-hp", summary: "|Π1(f, g)|_1 / (|Sf|_p |g|_Λ1), p in {1/2, 3/4}", ..BASE },
    SuiteInfo { id: "pi2-hp", summary: "|S Π2(f, g)|_1 / (|Sf|_p |g|_Λ1), p in {1/2, 3/4}", ..BASE },
    SuiteInfo { id: "pi3-hp", summary: "|S Π3(f, g)|_p / (|Sf|_p |g|_Λ1), p in {1/2, 3/4}", ..BASE },
    SuiteInfo {
        id: "bb",
        summary: "|g|_BMO / (|g|_bmo + sup_k |d_k g|∞) on ragged filtrations",
        upper: Some(100.0),
        lower: Some(0.01),
        two_sided: true,
        ..BASE
    },
    SuiteInfo { id: "mbmo", summary: "max of E_0(g*) / |g|_BMO and |g*|_BMO / |g|_BMO", ..BASE },
    SuiteInfo { id: "lam1", summary: "|g - g_0|∞ / |g|_Λ1, p in {1/2, 3/4}", ..BASE },
    SuiteInfo {
        id: "lambda-q",
        summary: "|g|_Λ2 / |g|_Λ1, p in {1/2, 3/4}",
        lower: Some(1.0 - 1e-12),
        two_sided: true,
        ..BASE
    },
    SuiteInfo { id: "john-nirenberg", summary: "1 / κ with E exp(κ |g - Eg| / |g|_BMO) = 2", ..BASE },
    SuiteInfo {
        id: "dec-of-h",
        summary: "|Sf|_1 over an exhibited h1 + h1_d splitting on ragged filtrations",
        ..BASE
    },
    SuiteInfo { id: "at-of-hp", summary: "(p, ∞) atomic quasi-norm over |s f|_p, p in {1/2, 3/4}", ..BASE },
    SuiteInfo {
        id: "dyadic-props",
        summary: "cube-system property violations on shifted grids and net systems",
        trials: 4,
        upper: Some(0.0),
        ..BASE
    },
    SuiteInfo {
        id: "adjacent-euclid",
        summary: "covering constant of the shifted grids over 6 √dim",
        trials: 6,
        upper: Some(1.0),
        ..BASE
    },
    SuiteInfo {
        id: "dec-hm",
        summary: "|Sf|_p / |f*|_p on a grid filtration, p in {1/2, 1}",
        trials: 50,
        two_sided: true,
        ..BASE
    },
    SuiteInfo {
        id: "hardy-equiv",
        summary: "scalar turning a ball atom into a cube atom, p in {1/2, 1}",
        trials: 100,
        extras: &[("scalar_over_bound", 1.0 + 1e-12)],
        ..BASE
    },
    SuiteInfo {
        id: "lips-equiv",
        summary: "ball Lipschitz norm over the max of cube Lipschitz norms, p in {1/2, 3/4}",
        trials: 100,
        two_sided: true,
        ..BASE
    },
    SuiteInfo {
        id: "bmo-equiv",
        summary: "ball BMO norm over the max of cube BMO norms",
        trials: 100,
        two_sided: true,
        ..BASE
    },
    SuiteInfo { id: "holder1", summary: "|fg|_Ψ1 / (|f|_1 |g|_BMO+)", trials: 50, ..BASE },
    SuiteInfo { id: "holder2", summary: "|fg|_Ψp / (|f|_p |g|_Λ+), p in {1/2, 3/4}", trials: 50, ..BASE },
    SuiteInfo {
        id: "multiplier",
        summary: "|gh|_+ / (|g|_+ (|h|∞ + 1)) for test multipliers h, p in {1/2, 1}",
        trials: 50,
        ..BASE
    },
    SuiteInfo { id: "pi1-dyadic-h1", summary: "|Π1|_1 / (|Sf|_1 |g|_BMO+) on a grid", trials: 50, ..BASE },
    SuiteInfo { id: "pi2-dyadic-h1", summary: "|S Π2|_1 / (|Sf|_1 |g|_BMO+) on a grid", trials: 50, ..BASE },
    SuiteInfo { id: "pi3-dyadic-h1", summary: "|S Π3|_Ψ1 / (|Sf|_1 |g|_BMO+) on a grid", trials: 50, ..BASE },
    SuiteInfo { id: "pi1-dyadic-hp", summary: "|Π1|_1 / (|Sf|_p |g|_Λ+) on a grid", trials: 50, ..BASE },
    SuiteInfo { id: "pi2-dyadic-hp", summary: "|S Π2|_1 / (|Sf|_p |g|_Λ+) on a grid", trials: 50, ..BASE },
    SuiteInfo { id: "pi3-dyadic-hp", summary: "|S Π3|_Ψp / (|Sf|_p |g|_Λ+) on a grid", trials: 50, ..BASE },
    SuiteInfo {
        id: "ball-growth",
        summary: "∫ over D B against ∫ over B of the Ψp density, D in {2, 4}",
        trials: 50,
        ..BASE
    },
    SuiteInfo {
        id: "pi-f",
        summary: "per-system paraproduct norms of a sum of ball atoms over |f|_at |g|_Lip+",
        trials: 50,
        extras: &[("identity", 1e-10)],
        ..BASE
    },
    SuiteInfo {
        id: "luxembourg",
        summary: "|modular at the returned norm - 1| for Φ, Ψ1 and Ψp",
        trials: 500,
        sizes: Sizes::Random(512),
        upper: Some(1e-8),
        extras: &[("homogeneity", 1e-9)],
        ..BASE
    },
];

pub fn suite(id: &str) -> Option<&'static SuiteInfo> {
    SUITES.iter().find(|s| s.id == id)
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: u64,
    /// Trials per size; the suite default when absent.
    pub trials: Option<u64>,
    /// Replaces the ladder, or the largest random size.
    pub sizes: Option<Vec<usize>>,
    /// Bound overrides keyed `suite.check`.
    pub tolerances: BTreeMap<String, f64>,
}

/// Runs the suite `id`.
pub fn run_suite(id: &str, opts: &RunOptions) -> std::result::Result<VerificationReport, SuiteError> {
    let info = suite(id).ok_or_else(|| SuiteError::Unknown(id.into()))?;
    match info.id {
        "identity" => execute(info, &identity(), opts),
        "functional-identities" => execute(info, &functional_identities(), opts),
        "atomic" => execute(info, &atomic(), opts),
        "doob" => execute(info, &doob(), opts),
        "lipschitz-char" => execute(info, &lipschitz_char(), opts),
        "holder-phi" => execute(info, &holder_phi(), opts),
        "pi1-h1" => execute(info, &pi_h1(Target::Pi1), opts),
        "pi2-h1" => execute(info, &pi_h1(Target::Pi2), opts),
        "pi3-h1" => execute(info, &pi_h1(Target::Pi3), opts),
        "pi1-hp" => execute(info, &pi_hp(Target::Pi1), opts),
        "pi2-hp" => execute(info, &pi_hp(Target::Pi2), opts),
        "pi3-hp" => execute(info, &pi_hp(Target::Pi3), opts),
        "bb" => execute(info, &bb(), opts),
        "mbmo" => execute(info, &mbmo(), opts),
        "lam1" => execute(info, &lam1(), opts),
        "lambda-q" => execute(info, &lambda_q(), opts),
        "john-nirenberg" => execute(info, &john_nirenberg(), opts),
        "dec-of-h" => execute(info, &dec_of_h(), opts),
        "at-of-hp" => execute(info, &at_of_hp(), opts),
        "dyadic-props" => execute(info, &dyadic_props(), opts),
        "adjacent-euclid" => execute(info, &adjacent_euclid(), opts),
        "dec-hm" => execute(info, &dec_hm(), opts),
        "hardy-equiv" => execute(info, &hardy_equiv(), opts),
        "lips-equiv" => execute(info, &lips_equiv(), opts),
        "bmo-equiv" => execute(info, &bmo_equiv(), opts),
        "holder1" => execute(info, &holder_psi(false), opts),
        "holder2" => execute(info, &holder_psi(true), opts),
        "multiplier" => execute(info, &multiplier(), opts),
        "pi1-dyadic-h1" => execute(info, &pi_dyadic(Target::Pi1, false), opts),
        "pi2-dyadic-h1" => execute(info, &pi_dyadic(Target::Pi2, false), opts),
        "pi3-dyadic-h1" => execute(info, &pi_dyadic(Target::Pi3, false), opts),
        "pi1-dyadic-hp" => execute(info, &pi_dyadic(Target::Pi1, true), opts),
        "pi2-dyadic-hp" => execute(info, &pi_dyadic(Target::Pi2, true), opts),
        "pi3-dyadic-hp" => execute(info, &pi_dyadic(Target::Pi3, true), opts),
        "ball-growth" => execute(info, &ball_growth(), opts),
        "pi-f" => execute(info, &pi_f(), opts),
        "luxembourg" => execute(info, &luxembourg(), opts),
        other => Err(SuiteError::Unknown(other.into())),
    }
}

/// ChaCha stream of trial `t` at size `n`.
fn stream(n: usize, t: u64) -> u64 {
    ((n as u64) << 32) | t
}

fn run_trial<B: Bench>(bench: &B, seed: u64, n: usize, t: u64) -> Result<(B::Input, TrialOut)> {
    let mut rng = trial_rng(seed, stream(n, t));
    let input = bench.generate(&mut rng, n, t)?;
    let out = bench.evaluate(&input)?;
    Ok((input, out))
}

fn execute<B: Bench>(
    info: &'static SuiteInfo,
    bench: &B,
    opts: &RunOptions,
) -> std::result::Result<VerificationReport, SuiteError> {
    let start = Instant::now();
    let fail = |stage: &'static str| move |source: Error| SuiteError::Core { suite: info.id, stage, source };
    let trials = opts.trials.unwrap_or(info.trials);
    let mut sizes = opts.sizes.clone().unwrap_or_else(|| match info.sizes {
        Sizes::Ladder => LADDER.to_vec(),
        Sizes::Random(max) => vec![max],
    });
    sizes.sort_unstable();
    sizes.dedup();

    let mut estimates: Vec<(usize, ConstantEstimate)> = Vec::with_capacity(sizes.len());
    let mut all = Vec::new();
    let mut extras: BTreeMap<String, f64> = BTreeMap::new();
    let mut violations = 0u64;
    for (s, &n) in sizes.iter().enumerate() {
        let outs = (0..trials)
            .into_par_iter()
            .map(|t| run_trial(bench, opts.seed, n, t).map(|(_, out)| out))
            .collect::<Result<Vec<_>>>()
            .map_err(fail("trial"))?;
        let mut ratios = Vec::with_capacity(outs.len());
        for (t, out) in outs.into_iter().enumerate() {
            let t = t as u64;
            ratios.push(TrialRatio { trial: t, numerator: out.numerator, denominator: out.denominator });
            all.push(TrialRatio { trial: s as u64 * trials + t, numerator: out.numerator, denominator: out.denominator });
            violations += out.violations;
            for (name, v) in out.extras {
                let v = if v.is_nan() { f64::INFINITY } else { v };
                extras.entry(name.to_string()).and_modify(|m| *m = m.max(v)).or_insert(v);
            }
        }
        estimates.push((n, summarize(&ratios).map_err(fail("summary"))?));
    }
    let overall = summarize(&all).map_err(fail("summary"))?;

    // Witness: the size holding the overall sup, first on ties.
    let (wn, west) = estimates
        .iter()
        .fold(None::<&(usize, ConstantEstimate)>, |best, e| match best {
            Some(b) if b.1.sup_ratio >= e.1.sup_ratio => Some(b),
            _ => Some(e),
        })
        .expect("at least one size");
    let (input, out) = run_trial(bench, opts.seed, *wn, west.witness).map_err(fail("witness"))?;
    let value = serde_json::to_value(&input).map_err(|e| SuiteError::Witness { suite: info.id, message: e.to_string() })?;
    let replay_input: B::Input = serde_json::from_value(value.clone())
        .map_err(|e| SuiteError::Witness { suite: info.id, message: e.to_string() })?;
    let replay = bench.evaluate(&replay_input).map_err(fail("witness replay"))?;
    let ratio_of = |o: &TrialOut| {
        TrialRatio { trial: 0, numerator: o.numerator, denominator: o.denominator }
            .ratio()
            .unwrap_or(f64::NAN)
    };
    let witness = Witness { n: *wn, trial: west.witness, ratio: ratio_of(&out), replayed: ratio_of(&replay), inputs: value };

    let bound = |name: &str, default: f64| {
        opts.tolerances.get(&format!("{}.{name}", info.id)).copied().unwrap_or(default)
    };
    let mut checks = vec![
        Check::at_most("sup_finite", overall.sup_ratio, bound("sup_finite", f64::MAX)),
        Check::at_least("nondegenerate", overall.nondegenerate_fraction(), bound("nondegenerate", MIN_NONDEGENERATE)),
        Check::at_most(
            "replay",
            (witness.replayed - witness.ratio).abs() / witness.ratio.abs().max(1.0),
            bound("replay", 1e-12),
        ),
        Check::at_most("violations", violations as f64, bound("violations", 0.0)),
    ];
    if let Some(u) = info.upper {
        checks.push(Check::at_most("upper", overall.sup_ratio, bound("upper", u)));
    }
    if let Some(l) = info.lower {
        checks.push(Check::at_least("lower", overall.min_ratio, bound("lower", l)));
    }
    let ladder = info.sizes == Sizes::Ladder && estimates.len() > 1;
    let ladder_value = ladder.then(|| ladder_growth(&estimates.iter().map(|e| e.1.sup_ratio).collect::<Vec<_>>()));
    let inverse_value = (ladder && info.two_sided)
        .then(|| ladder_growth(&estimates.iter().map(|e| 1.0 / e.1.min_ratio).collect::<Vec<_>>()));
    if let Some(g) = ladder_value {
        checks.push(Check::at_most("ladder", g, bound("ladder", LADDER_FACTOR)));
    }
    if let Some(g) = inverse_value {
        checks.push(Check::at_most("inverse_ladder", g, bound("inverse_ladder", LADDER_FACTOR)));
    }
    if info.two_sided {
        checks.push(Check::at_least("min_positive", overall.min_ratio, bound("min_positive", f64::MIN_POSITIVE)));
    }
    for (name, &v) in &extras {
        let default = info.extras.iter().find(|e| e.0 == name).map_or(f64::MAX, |e| e.1);
        let key = format!("extra.{name}");
        let b = bound(&key, default);
        checks.push(Check::at_most(key, v, b));
    }
    let pass = checks.iter().all(|c| c.pass);
    let quantiles = |e: &ConstantEstimate| e.quantiles.iter().map(|&(l, v)| [l, v]).collect::<Vec<_>>();
    Ok(VerificationReport {
        suite: info.id.into(),
        summary: info.summary.into(),
        seed: opts.seed,
        trials: overall.trials as u64,
        skipped: overall.skipped as u64,
        sup_ratio: overall.sup_ratio,
        min_ratio: overall.min_ratio,
        quantiles: quantiles(&overall),
        witness,
        sizes: estimates
            .iter()
            .map(|(n, e)| SizeSummary {
                n: *n,
                trials: e.trials as u64,
                skipped: e.skipped as u64,
                sup_ratio: e.sup_ratio,
                min_ratio: e.min_ratio,
                witness_trial: e.witness,
                min_witness_trial: e.min_witness,
                quantiles: quantiles(e),
            })
            .collect(),
        ladder_growth: ladder_value,
        inverse_ladder_growth: inverse_value,
        violations,
        extras,
        checks,
        pass,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// Martingale inputs

/// A probability space, a filtration starting at level 0, and up to two
/// functions.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartInput {
    pub weights: Vec<f64>,
    pub partitions: Vec<Vec<Vec<usize>>>,
    pub f: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub g: Vec<f64>,
    pub p: f64,
}

impl MartInput {
    fn new(fx: &Fixture, f: Vec<f64>, g: Vec<f64>, p: f64) -> Self {
        Self { weights: fx.space.weights().to_vec(), partitions: fx.filtration.to_raw(), f, g, p }
    }

    fn fixture(&self) -> Result<(MeasureSpace, Filtration)> {
        let space = MeasureSpace::probability(self.weights.clone())?;
        let filt = Filtration::new(self.weights.len(), 0, self.partitions.clone())?;
        Ok((space, filt))
    }
}

fn max_abs(f: &[f64]) -> f64 {
    f.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn random_n(rng: &mut ChaCha8Rng, max: usize) -> usize {
    rng.random_range(2..=max.max(2))
}

fn draw_fixture(rng: &mut ChaCha8Rng, n: usize, shape: Shape) -> Result<Fixture> {
    random_filtration(rng, n, 12, shape)
}

fn draw_martingale(rng: &mut ChaCha8Rng, fx: &Fixture, kind: MartingaleKind) -> Result<Vec<f64>> {
    Ok(martingale_on(rng, &fx.space, &fx.filtration, kind)?.into_vec())
}

/// `f - E_0 f`.
fn without_base(space: &MeasureSpace, filt: &Filtration, f: Vec<f64>) -> Result<Vec<f64>> {
    let base = conditional_expectation(space, filt.at(0), &f)?;
    Ok(f.iter().zip(base.iter()).map(|(a, b)| a - b).collect())
}

fn two_p(t: u64) -> f64 {
    [0.5, 0.75][(t % 2) as usize]
}

fn identity() -> impl Bench {
    bench(
        |rng, n, _| {
            let n = random_n(rng, n);
            let fx = draw_fixture(rng, n, Shape::Ragged)?;
            let f = draw_martingale(rng, &fx, MartingaleKind::Gaussian)?;
            let g = draw_martingale(rng, &fx, MartingaleKind::Gaussian)?;
            Ok(MartInput::new(&fx, f, g, 1.0))
        },
        |x: &MartInput| {
            let (s, filt) = x.fixture()?;
            let pi = paraproducts(&s, &filt, &x.f, &x.g)?;
            let scale = 1.0 + max_abs(&x.f) * max_abs(&x.g);
            Ok(TrialOut::value(pi.residual(&x.f, &x.g) / scale))
        },
    )
}

fn functional_identities() -> impl Bench {
    bench(
        |rng, n, _| {
            let n = random_n(rng, n);
            let fx = draw_fixture(rng, n, Shape::Ragged)?;
            let f = draw_martingale(rng, &fx, MartingaleKind::Gaussian)?;
            Ok(MartInput::new(&fx, f, Vec::new(), 2.0))
        },
        |x: &MartInput| {
            let (s, filt) = x.fixture()?;
            let exp = expand(&s, &filt, &x.f, BaseConvention::Zero)?;
            let big = square_function(&exp);
            let small = conditional_square_function(&s, &filt, &exp)?;
            let big2: Vec<f64> = big.iter().map(|v| v * v).collect();
            let diff: Vec<f64> = big.iter().zip(small.iter()).map(|(a, b)| a * a - b * b).collect();
            let scale = 1.0 + max_abs(&x.f);
            let conds = filt
                .levels()
                .iter()
                .map(|part| conditional_expectation(&s, part, &x.f))
                .collect::<Result<Vec<_>>>()?;
            let total = s.integral(&x.f);
            let (mut tower, mut projection, mut integral) = (0.0f64, 0.0f64, 0.0f64);
            for i in 0..filt.num_levels() {
                integral = integral.max((s.integral(&conds[i]) - total).abs() / scale);
                for j in i..filt.num_levels() {
                    let ij = conditional_expectation(&s, filt.at(i), &conds[j])?;
                    tower = tower.max(ij.max_diff(&conds[i]) / scale);
                    let ji = conditional_expectation(&s, filt.at(j), &conds[i])?;
                    projection = projection.max(ji.max_diff(&conds[i]) / scale);
                }
            }
            Ok(TrialOut::ratio(s.integral(&diff).abs(), s.integral(&big2))
                .extra("tower", tower)
                .extra("projection", projection)
                .extra("integral", integral))
        },
    )
}

fn atomic() -> impl Bench {
    bench(
        |rng, n, t| {
            let fx = draw_fixture(rng, n, Shape::Balanced)?;
            let f = draw_martingale(rng, &fx, MartingaleKind::Gaussian)?;
            let f = without_base(&fx.space, &fx.filtration, f)?;
            Ok(MartInput::new(&fx, f, Vec::new(), [0.5, 1.0][(t % 2) as usize]))
        },
        |x: &MartInput| {
            let (s, filt) = x.fixture()?;
            let dec = stopping_time_decomposition(&s, &filt, &x.f, x.p, 2.0)?;
            let mut invalid = 0;
            for term in &dec.terms {
                if !validate_simple_atom(&s, &filt, &term.atom)?.is_valid() {
                    invalid += 1;
                }
            }
            let f = Func::new(x.f.clone())?;
            let rec = dec.reconstruct(x.f.len()).max_diff(&f) / (1.0 + f.max_abs());
            let den = hardy_norm(&s, &filt, &x.f, HardyVariant::ConditionalSquare, x.p)?;
            Ok(TrialOut::ratio(dec.quasi_norm(), den).violations(invalid).extra("reconstruction", rec))
        },
    )
}

fn doob() -> impl Bench {
    bench(
        |rng, n, t| {
            let p = [0.3, 0.5, 0.8][(t % 3) as usize];
            let n = random_n(rng, n);
            let fx = draw_fixture(rng, n, Shape::Ragged)?;
            let f = if (t / 3) % 2 == 0 {
                atom_on(rng, &fx.space, &fx.filtration, p, 1.0)?.values.into_vec()
            } else {
                draw_martingale(rng, &fx, MartingaleKind::Gaussian)?
            };
            let l1 = lp_norm(&fx.space, &f, 1.0)?;
            let f = if l1 > 1.0 || t % 6 >= 3 { f.iter().map(|v| v / l1).collect() } else { f };
            Ok(MartInput::new(&fx, f, Vec::new(), p))
        },
        |x: &MartInput| {
            let (s, filt) = x.fixture()?;
            let exp = expand(&s, &filt, &x.f, BaseConvention::Expectation)?;
            let star = maximal_function(&exp);
            let integral = lp_norm(&s, &star, x.p)?.powf(x.p);
            Ok(TrialOut::value((1.0 - x.p) * integral).extra("excess", integral - 1.0 / (1.0 - x.p)))
        },
    )
}

fn lipschitz_input(rng: &mut ChaCha8Rng, n: usize, t: u64, shape: Shape) -> Result<MartInput> {
    let p = two_p(t);
    let fx = draw_fixture(rng, n, shape)?;
    let g = draw_martingale(rng, &fx, MartingaleKind::Lipschitz { p })?;
    Ok(MartInput::new(&fx, Vec::new(), g, p))
}

fn lipschitz_char() -> impl Bench {
    bench(
        |rng, n, t| lipschitz_input(rng, n, t, Shape::Balanced),
        |x: &MartInput| {
            let (s, filt) = x.fixture()?;
            let conv = BaseConvention::Expectation;
            let sup = lipschitz_sup_norm(&s, &filt, &x.g, x.p, conv)?;
            let one = lipschitz_norm(&s, &filt, &x.g, x.p, 1.0, conv)?;
            Ok(TrialOut::ratio(sup, one))
        },
    )
}

fn bmo_zero(s: &MeasureSpace, filt: &Filtration, g: &[f64]) -> Result<f64> {
    bmo_norm(s, filt, g, BmoVariant::Bmo, BaseConvention::Zero)
}

fn holder_phi() -> impl Bench {
    bench(
        |rng, n, _| {
            let fx = draw_fixture(rng, n, Shape::Balanced)?;
            let f = draw_martingale(rng, &fx, MartingaleKind::Gaussian)?;
            let g = draw_martingale(rng, &fx, MartingaleKind::Rademacher)?;
            Ok(MartInput::new(&fx, f, g, 1.0))
        },
        |x: &MartInput| {
            let (s, filt) = x.fixture()?;
            let fg: Vec<f64> = x.f.iter().zip(&x.g).map(|(a, b)| a * b).collect();
            let num = luxembourg_norm(&s, &LogOrlicz, &fg)?;
            Ok(TrialOut::ratio(num, lp_norm(&s, &x.f, 1.0)? * bmo_zero(&s, &filt, &x.g)?))
        },
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Target {
    Pi1,
    Pi2,
    Pi3,
}

fn square_norm(s: &MeasureSpace, filt: &Filtration, f: &[f64], p: f64) -> Result<f64> {
    hardy_norm(s, filt, f, HardyVariant::Square, p)
}

fn square_of(s: &MeasureSpace, filt: &Filtration, f: &[f64]) -> Result<Func> {
    Ok(square_function(&expand(s, filt, f, BaseConvention::Zero)?))
}

fn pi_input(rng: &mut ChaCha8Rng, n: usize, t: u64, p: f64, g_kind: MartingaleKind) -> Result<MartInput> {
    let fx = draw_fixture(rng, n, Shape::Balanced)?;
    let f = if t % 2 == 0 {
        draw_martingale(rng, &fx, MartingaleKind::Gaussian)?
    } else {
        atom_on(rng, &fx.space, &fx.filtration, p, f64::INFINITY)?.values.into_vec()
    };
    let g = draw_martingale(rng, &fx, g_kind)?;
    Ok(MartInput::new(&fx, f, g, p))
}

fn pi_h1(target: Target) -> impl Bench {
    bench(
        |rng, n, t| pi_input(rng, n, t, 1.0, MartingaleKind::Rademacher),
        move |x: &MartInput| {
            let (s, filt) = x.fixture()?;
            let pi = paraproducts(&s, &filt, &x.f, &x.g)?;
            let num = match target {
                Target::Pi1 => lp_norm(&s, &pi.pi1, 1.0)?,
                Target::Pi2 => square_norm(&s, &filt, &pi.pi2, 1.0)?,
                Target::Pi3 => luxembourg_norm(&s, &LogOrlicz, &square_of(&s, &filt, &pi.pi3)?)?,
            };
            Ok(TrialOut::ratio(num, square_norm(&s, &filt, &x.f, 1.0)? * bmo_zero(&s, &filt, &x.g)?))
        },
    )
}

fn pi_hp(target: Target) -> impl Bench {
    bench(
        |rng, n, t| {
            let p = two_p(t / 2);
            pi_input(rng, n, t, p, MartingaleKind::Lipschitz { p })
        },
        move |x: &MartInput| {
            let (s, filt) = x.fixture()?;
            let pi = paraproducts(&s, &filt, &x.f, &x.g)?;
            let num = match target {
                Target::Pi1 => lp_norm(&s, &pi.pi1, 1.0)?,
                Target::Pi2 => square_norm(&s, &filt, &pi.pi2, 1.0)?,
                Target::Pi3 => square_norm(&s, &filt, &pi.pi3, x.p)?,
            };
            let lip = lipschitz_norm(&s, &filt, &x.g, x.p, 1.0, BaseConvention::Zero)?;
            Ok(TrialOut::ratio(num, square_norm(&s, &filt, &x.f, x.p)? * lip))
        },
    )
}

fn bb() -> impl Bench {
    bench(
        |rng, n, t| {
            let fx = draw_fixture(rng, n, Shape::Ragged)?;
            let kind = if t % 2 == 0 { MartingaleKind::Rademacher } else { MartingaleKind::Gaussian };
            let g = draw_martingale(rng, &fx, kind)?;
            Ok(MartInput::new(&fx, Vec::new(), g, 1.0))
        },
        |x: &MartInput| {
            let (s, filt) = x.fixture()?;
            let conv = BaseConvention::Zero;
            let big = bmo_norm(&s, &filt, &x.g, BmoVariant::Bmo, conv)?;
            let small = bmo_norm(&s, &filt, &x.g, BmoVariant::SmallBmo, conv)?;
            let exp = expand(&s, &filt, &x.g, conv)?;
            let jumps = exp.diffs().iter().map(|d| d.max_abs()).fold(0.0, f64::max);
            Ok(TrialOut::ratio(big, small + jumps))
        },
    )
}

fn mbmo() -> impl Bench {
    bench(
        |rng, n, _| {
            let fx = draw_fixture(rng, n, Shape::Balanced)?;
            let g = draw_martingale(rng, &fx, MartingaleKind::Rademacher)?;
            Ok(MartInput::new(&fx, Vec::new(), g, 1.0))
        },
        |x: &MartInput| {
            let (s, filt) = x.fixture()?;
            or_degenerate(check_bmo_maximal(&s, &filt, &x.g).map(|r| {
                TrialOut::value(r.base_ratio.max(r.bmo_ratio))
                    .extra("base_ratio", r.base_ratio)
                    .extra("bmo_ratio", r.bmo_ratio)
            }))
        },
    )
}

fn lam1() -> impl Bench {
    bench(
        |rng, n, t| lipschitz_input(rng, n, t, Shape::Balanced),
        |x: &MartInput| {
            let (s, filt) = x.fixture()?;
            let lip = lipschitz_norm(&s, &filt, &x.g, x.p, 1.0, BaseConvention::Expectation)?;
            Ok(TrialOut::ratio(base_deviation(&s, &filt, &x.g)?, lip))
        },
    )
}

fn lambda_q() -> impl Bench {
    bench(
        |rng, n, t| lipschitz_input(rng, n, t, Shape::Balanced),
        |x: &MartInput| {
            let (s, filt) = x.fixture()?;
            let conv = BaseConvention::Expectation;
            let two = lipschitz_norm(&s, &filt, &x.g, x.p, 2.0, conv)?;
            let one = lipschitz_norm(&s, &filt, &x.g, x.p, 1.0, conv)?;
            Ok(TrialOut::ratio(two, one))
        },
    )
}

/// The `κ` with `∫ exp(κ h) = 2`, by doubling and bisection; 0 when `h`
/// vanishes.
fn exponential_level(s: &MeasureSpace, h: &[f64]) -> f64 {
    let m = |k: f64| s.integral(&h.iter().map(|v| (k * v).exp()).collect::<Vec<_>>());
    if max_abs(h) == 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while m(hi) < 2.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return 0.0;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if m(mid) < 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn john_nirenberg() -> impl Bench {
    bench(
        |rng, n, _| {
            let fx = draw_fixture(rng, n, Shape::Balanced)?;
            let g = draw_martingale(rng, &fx, MartingaleKind::Rademacher)?;
            Ok(MartInput::new(&fx, Vec::new(), g, 1.0))
        },
        |x: &MartInput| {
            let (s, filt) = x.fixture()?;
            let bmo = bmo_norm(&s, &filt, &x.g, BmoVariant::Bmo, BaseConvention::Expectation)?;
            if bmo == 0.0 {
                return Ok(TrialOut::degenerate());
            }
            let mean = s.integral(&x.g);
            let h: Vec<f64> = x.g.iter().map(|v| (v - mean).abs() / bmo).collect();
            Ok(TrialOut::ratio(1.0, exponential_level(&s, &h)))
        },
    )
}

fn dec_of_h() -> impl Bench {
    bench(
        |rng, n, _| {
            let fx = draw_fixture(rng, n, Shape::Ragged)?;
            let f = draw_martingale(rng, &fx, MartingaleKind::Gaussian)?;
            Ok(MartInput::new(&fx, f, Vec::new(), 1.0))
        },
        |x: &MartInput| {
            let (s, filt) = x.fixture()?;
            let split = sum_norm_upper(&s, &filt, &x.f, SplitStrategy::CoordinateDescent)?;
            Ok(TrialOut::ratio(square_norm(&s, &filt, &x.f, 1.0)?, split.value))
        },
    )
}

fn at_of_hp() -> impl Bench {
    bench(
        |rng, n, t| {
            let fx = draw_fixture(rng, n, Shape::Balanced)?;
            let f = draw_martingale(rng, &fx, MartingaleKind::Gaussian)?;
            let f = without_base(&fx.space, &fx.filtration, f)?;
            Ok(MartInput::new(&fx, f, Vec::new(), two_p(t)))
        },
        |x: &MartInput| {
            let (s, filt) = x.fixture()?;
            let upper = atomic_norm_upper(&s, &filt, &x.f, x.p, f64::INFINITY)?;
            Ok(TrialOut::ratio(upper, hardy_norm(&s, &filt, &x.f, HardyVariant::ConditionalSquare, x.p)?))
        },
    )
}

// ---------------------------------------------------------------------------
// Point clouds

/// Points of `[0, 1)^dim` with weights; the metric space is built on first
/// use.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cloud {
    pub coords: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    #[serde(skip)]
    built: OnceLock<QuasiMetricSpace>,
}

impl Cloud {
    fn draw(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Result<Self> {
        Ok(Self::from_space(random_cloud(rng, n, dim)?))
    }

    /// One point per grid cell, for suites whose constants depend on the
    /// doubling constant.
    fn jittered(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Result<Self> {
        Ok(Self::from_space(jittered_cloud(rng, n, dim)?))
    }

    fn from_space(space: QuasiMetricSpace) -> Self {
        let n = space.len();
        let coords = (0..n).map(|i| space.coords(i).expect("cloud has coordinates").to_vec()).collect();
        let cloud = Self { coords, weights: space.weights().to_vec(), built: OnceLock::new() };
        let _ = cloud.built.set(space);
        cloud
    }

    fn space(&self) -> Result<&QuasiMetricSpace> {
        if let Some(s) = self.built.get() {
            return Ok(s);
        }
        let s = QuasiMetricSpace::from_coords(&self.coords, self.weights.clone(), 1.0)?;
        Ok(self.built.get_or_init(|| s))
    }
}

fn dim_of(t: u64) -> usize {
    1 + (t % 2) as usize
}

/// A cloud with a base point, functions and an exponent.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudInput {
    pub cloud: Cloud,
    pub origin: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub f: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub g: Vec<f64>,
    pub p: f64,
}

fn cloud_input(rng: &mut ChaCha8Rng, n: usize, t: u64, p: f64) -> Result<CloudInput> {
    let cloud = Cloud::draw(rng, n, dim_of(t))?;
    let origin = rng.random_range(0..n);
    Ok(CloudInput { cloud, origin, f: Vec::new(), g: Vec::new(), p })
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// `c + Σ_j a_j cos(ω_j · x + φ_j)` over three random waves.
fn smooth(rng: &mut ChaCha8Rng, cloud: &Cloud) -> Vec<f64> {
    let dim = cloud.coords.first().map_or(1, Vec::len);
    let top = rng.random_range(1.0..30.0);
    let c = normal(rng);
    let waves: Vec<(f64, Vec<f64>, f64)> = (0..3)
        .map(|_| {
            let a = normal(rng);
            let w = (0..dim).map(|_| rng.random_range(-top..top)).collect();
            (a, w, rng.random_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    cloud
        .coords
        .iter()
        .map(|x| {
            c + waves
                .iter()
                .map(|(a, w, phi)| a * (w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + phi).cos())
                .sum::<f64>()
        })
        .collect()
}

/// Normal values with the weighted mean removed.
fn noise(rng: &mut ChaCha8Rng, space: &QuasiMetricSpace) -> Vec<f64> {
    let v: Vec<f64> = (0..space.len()).map(|_| normal(rng)).collect();
    let all: Vec<usize> = (0..space.len()).collect();
    let m = mean_on(&space.measure_space(), &v, &all);
    v.into_iter().map(|x| x - m).collect()
}

/// A ball through a random second point, closed at that point.
fn random_ball(rng: &mut ChaCha8Rng, space: &QuasiMetricSpace) -> (usize, f64) {
    let n = space.len();
    let c = rng.random_range(0..n);
    let mut y = rng.random_range(0..n - 1);
    if y >= c {
        y += 1;
    }
    (c, space.d(c, y).next_up())
}

/// Mean-zero normal values on a random ball scaled to
/// `|a|_q = u μ(B)^{1/q - 1/p}`, `u ∈ [1/2, 1]`.
fn ball_atom(rng: &mut ChaCha8Rng, space: &QuasiMetricSpace, p: f64, q: f64) -> Result<BallAtom> {
    let (center, radius) = random_ball(rng, space);
    let members = space.ball(center, radius).to_vec();
    let ms = space.measure_space();
    let mut v = vec![0.0; space.len()];
    for &i in &members {
        v[i] = normal(rng);
    }
    let m = mean_on(&ms, &v, &members);
    for &i in &members {
        v[i] -= m;
    }
    let size = lp_norm(&ms, &v, q)?;
    let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
    let target = rng.random_range(0.5..=1.0) * space.ball_mass(center, radius).powf(inv_q - 1.0 / p);
    if size > 0.0 {
        v.iter_mut().for_each(|x| *x *= target / size);
    }
    Ok(BallAtom { values: Func::new(v)?, center, radius, p, q })
}

/// `Σ_j λ_j a_j` over 1 to 4 ball `(p, ∞)`-atoms, with `(Σ |λ_j|^p)^{1/p}`.
fn atom_sum(rng: &mut ChaCha8Rng, space: &QuasiMetricSpace, p: f64) -> Result<(Vec<f64>, f64)> {
    let mut f = vec![0.0; space.len()];
    let mut acc = 0.0;
    for _ in 0..rng.random_range(1..=4) {
        let a = ball_atom(rng, space, p, f64::INFINITY)?;
        let lambda = normal(rng);
        acc += lambda.abs().powf(p);
        for (fi, ai) in f.iter_mut().zip(a.values.iter()) {
            *fi += lambda * ai;
        }
    }
    Ok((f, acc.powf(1.0 / p)))
}

fn grid(space: &QuasiMetricSpace, t: usize) -> Result<DyadicSystem> {
    let dim = space.dim().ok_or(Error::MissingCoordinates)?;
    let shift: Vec<u8> = (0..dim).map(|a| ((t / 3usize.pow(a as u32)) % 3) as u8).collect();
    shifted_grid(space, &shift, None)
}

fn all_grids(space: &QuasiMetricSpace) -> Result<Vec<DyadicSystem>> {
    let dim = space.dim().ok_or(Error::MissingCoordinates)?;
    (0..3usize.pow(dim as u32)).map(|t| grid(space, t)).collect()
}

fn dyadic_props() -> impl Bench {
    #[derive(Debug, Serialize, Deserialize)]
    struct Input {
        cloud: Cloud,
        seed: u64,
    }
    bench(
        |rng, n, t| Ok(Input { cloud: Cloud::draw(rng, n, dim_of(t))?, seed: rng.random() }),
        |x: &Input| {
            let space = x.cloud.space()?;
            let mut systems = all_grids(space)?;
            systems.push(build_dyadic_system(space, &DyadicParams::auto(space), Some(x.seed))?);
            let count: usize = systems.iter().map(|s| verify_system(space, s).len()).sum();
            Ok(TrialOut::value(count as f64).violations(count as u64))
        },
    )
}

fn adjacent_euclid() -> impl Bench {
    bench(
        |rng, n, t| Cloud::draw(rng, n, dim_of(t)),
        |x: &Cloud| {
            let space = x.space()?;
            let adj = euclidean_shifted_grids(space, None)?;
            let dim = space.dim().unwrap_or(1) as f64;
            Ok(TrialOut::value(adj.certificate.constant / (6.0 * dim.sqrt())))
        },
    )
}

fn dec_hm() -> impl Bench {
    bench(
        |rng, n, t| {
            let p = [0.5, 1.0][((t / 2) % 2) as usize];
            let mut x = cloud_input(rng, n, t, p)?;
            let space = x.cloud.space()?;
            x.f = if (t / 4) % 2 == 0 { noise(rng, space) } else { atom_sum(rng, space, p)?.0 };
            Ok(x)
        },
        |x: &CloudInput| {
            let space = x.cloud.space()?;
            let (ms, filt) = system_to_filtration(space, &grid(space, 0)?)?;
            let big = hardy_norm(&ms, &filt, &x.f, HardyVariant::Square, x.p)?;
            let small = hardy_norm(&ms, &filt, &x.f, HardyVariant::ConditionalSquare, x.p)?;
            let star = hardy_norm(&ms, &filt, &x.f, HardyVariant::Maximal, x.p)?;
            Ok(TrialOut::ratio(big, star).extra("s_over_S", small / big).extra("S_over_s", big / small))
        },
    )
}

fn hardy_equiv() -> impl Bench {
    #[derive(Debug, Serialize, Deserialize)]
    struct Input {
        cloud: Cloud,
        values: Vec<f64>,
        center: usize,
        radius: f64,
        p: f64,
    }
    bench(
        |rng, n, t| {
            let cloud = Cloud::jittered(rng, n, dim_of(t))?;
            let p = [0.5, 1.0][((t / 2) % 2) as usize];
            let a = ball_atom(rng, cloud.space()?, p, 2.0)?;
            Ok(Input { values: a.values.into_vec(), center: a.center, radius: a.radius, p, cloud })
        },
        |x: &Input| {
            let space = x.cloud.space()?;
            let atom = BallAtom { values: Func::new(x.values.clone())?, center: x.center, radius: x.radius, p: x.p, q: 2.0 };
            let mut invalid = u64::from(!validate_ball_atom(space, &atom)?.is_valid());
            let adj = euclidean_shifted_grids(space, None)?;
            let to_cube = ball_atom_to_dyadic(space, &adj, &atom)?;
            let system = &adj.systems[to_cube.system];
            let (ms, filt) = system_to_filtration(space, system)?;
            invalid += u64::from(!validate_simple_atom(&ms, &filt, &to_cube.atom)?.is_valid());
            let back = dyadic_atom_to_ball(space, system, &to_cube.atom)?;
            invalid += u64::from(!validate_ball_atom(space, &back.atom)?.is_valid());
            Ok(TrialOut::value(to_cube.scalar)
                .violations(invalid)
                .extra("scalar_over_bound", to_cube.scalar / to_cube.bound)
                .extra("cube_to_ball", back.scalar))
        },
    )
}

/// `ln |x - c|` about a random point `c` of the unit cube.
fn log_profile(rng: &mut ChaCha8Rng, cloud: &Cloud) -> Vec<f64> {
    let dim = cloud.coords.first().map_or(1, Vec::len);
    let c: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    cloud
        .coords
        .iter()
        .map(|x| x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt().max(1e-9).ln())
        .collect()
}

fn lips_equiv() -> impl Bench {
    bench(
        |rng, n, t| {
            let mut x = cloud_input(rng, n, t, two_p(t / 2))?;
            x.g = smooth(rng, &x.cloud);
            Ok(x)
        },
        |x: &CloudInput| {
            let space = x.cloud.space()?;
            let a = 1.0 / x.p - 1.0;
            let ball = ball_norm(space, &x.g, BallNorm::Lipschitz { alpha: a })?;
            let mut cube = 0.0f64;
            for s in all_grids(space)? {
                cube = cube.max(cube_norm(space, &s, &x.g, 1.0, a)?);
            }
            Ok(TrialOut::ratio(ball, cube))
        },
    )
}

fn bmo_equiv() -> impl Bench {
    bench(
        |rng, n, t| {
            let mut x = cloud_input(rng, n, t, 1.0)?;
            x.g = if (t / 2) % 2 == 0 { smooth(rng, &x.cloud) } else { log_profile(rng, &x.cloud) };
            Ok(x)
        },
        |x: &CloudInput| {
            let space = x.cloud.space()?;
            let ball = ball_norm(space, &x.g, BallNorm::Bmo)?;
            let mut cube = 0.0f64;
            for s in all_grids(space)? {
                cube = cube.max(cube_norm(space, &s, &x.g, 1.0, 0.0)?);
            }
            Ok(TrialOut::ratio(ball, cube))
        },
    )
}

fn plus_kind(p: f64) -> PlusNorm {
    if p == 1.0 {
        PlusNorm::BmoPlus
    } else {
        PlusNorm::LipschitzPlus
    }
}

fn holder_psi(fractional: bool) -> impl Bench {
    bench(
        move |rng, n, t| {
            let p = if fractional { two_p(t / 2) } else { 1.0 };
            let mut x = cloud_input(rng, n, t, p)?;
            x.f = (0..n).map(|_| normal(rng)).collect();
            x.g = smooth(rng, &x.cloud);
            Ok(x)
        },
        |x: &CloudInput| {
            let space = x.cloud.space()?;
            let ms = space.measure_space();
            let system = grid(space, 0)?;
            let ctx = BasePointContext::new(space, &system, x.origin)?;
            let psi = Psi::new(space, x.origin, x.p)?;
            let fg: Vec<f64> = x.f.iter().zip(&x.g).map(|(a, b)| a * b).collect();
            let num = luxembourg_norm(&ms, &psi, &fg)?;
            let g_norm = plus_norm(space, &system, &ctx, &x.g, plus_kind(x.p), x.p)?;
            Ok(TrialOut::ratio(num, lp_norm(&ms, &x.f, x.p)? * g_norm))
        },
    )
}

fn multiplier() -> impl Bench {
    bench(
        |rng, n, t| {
            let p = [0.5, 1.0][((t / 2) % 2) as usize];
            let mut x = cloud_input(rng, n, t, p)?;
            let alpha = if p < 1.0 { 1.0 / p - 1.0 } else { 0.0 };
            x.g = smooth(rng, &x.cloud);
            x.f = multiplier_on(rng, x.cloud.space()?, x.origin, alpha)?.into_vec();
            Ok(x)
        },
        |x: &CloudInput| {
            let space = x.cloud.space()?;
            let system = grid(space, 0)?;
            let ctx = BasePointContext::new(space, &system, x.origin)?;
            or_degenerate(multiplier_inequality(space, &system, &ctx, &x.g, &x.f, x.p).map(TrialOut::value))
        },
    )
}

fn pi_dyadic(target: Target, fractional: bool) -> impl Bench {
    bench(
        move |rng, n, t| {
            let p = if fractional { two_p(t / 2) } else { 1.0 };
            let mut x = cloud_input(rng, n, t, p)?;
            let space = x.cloud.space()?;
            x.f = if (t / 4) % 2 == 0 { noise(rng, space) } else { atom_sum(rng, space, p)?.0 };
            x.g = smooth(rng, &x.cloud);
            Ok(x)
        },
        move |x: &CloudInput| {
            let space = x.cloud.space()?;
            let system = grid(space, 0)?;
            let (ms, filt) = system_to_filtration(space, &system)?;
            let ctx = BasePointContext::new(space, &system, x.origin)?;
            let pi = paraproducts(&ms, &filt, &x.f, &x.g)?;
            let num = match target {
                Target::Pi1 => lp_norm(&ms, &pi.pi1, 1.0)?,
                Target::Pi2 => square_norm(&ms, &filt, &pi.pi2, 1.0)?,
                Target::Pi3 => luxembourg_norm(&ms, &Psi::new(space, x.origin, x.p)?, &square_of(&ms, &filt, &pi.pi3)?)?,
            };
            let g_norm = plus_norm(space, &system, &ctx, &x.g, plus_kind(x.p), x.p)?;
            Ok(TrialOut::ratio(num, square_norm(&ms, &filt, &x.f, x.p)? * g_norm))
        },
    )
}

fn ball_growth() -> impl Bench {
    #[derive(Debug, Serialize, Deserialize)]
    struct Input {
        cloud: Cloud,
        origin: usize,
        center: usize,
        radius: f64,
        dilation: f64,
        p: f64,
    }
    bench(
        |rng, n, t| {
            let cloud = Cloud::draw(rng, n, dim_of(t))?;
            let origin = rng.random_range(0..n);
            let (center, radius) = random_ball(rng, cloud.space()?);
            let dilation = [2.0, 4.0][((t / 2) % 2) as usize];
            Ok(Input { cloud, origin, center, radius, dilation, p: two_p(t / 4) })
        },
        |x: &Input| {
            let space = x.cloud.space()?;
            let g = ball_integral_growth_check(space, x.origin, x.p, x.center, x.radius, x.dilation)?;
            Ok(TrialOut::ratio(g.rhs, g.lhs))
        },
    )
}

fn pi_f() -> impl Bench {
    #[derive(Debug, Serialize, Deserialize)]
    struct Input {
        input: CloudInput,
        atomic_norm: f64,
    }
    bench(
        |rng, n, t| {
            let p = two_p(t / 2);
            let mut x = cloud_input(rng, n, t, p)?;
            let (f, atomic_norm) = atom_sum(rng, x.cloud.space()?, p)?;
            x.f = f;
            x.g = smooth(rng, &x.cloud);
            Ok(Input { input: x, atomic_norm })
        },
        |w: &Input| {
            let x = &w.input;
            let space = x.cloud.space()?;
            let ms = space.measure_space();
            let adj = euclidean_shifted_grids(space, None)?;
            let routed = pi_f_operators(space, &adj, &x.f, &x.g, x.p)?;
            let psi = Psi::new(space, x.origin, x.p)?;
            let mut norms = [0.0f64; 3];
            for (t, piece) in routed.pieces.iter().enumerate() {
                if piece.is_zero() {
                    continue;
                }
                let (_, filt) = system_to_filtration(space, &adj.systems[t])?;
                let pi = paraproducts(&ms, &filt, piece, &x.g)?;
                norms[0] += lp_norm(&ms, &pi.pi1, 1.0)?;
                norms[1] += square_norm(&ms, &filt, &pi.pi2, 1.0)?;
                norms[2] += luxembourg_norm(&ms, &psi, &square_of(&ms, &filt, &pi.pi3)?)?;
            }
            let b1 = space.ball(x.origin, 1.0);
            let lip = ball_norm(space, &x.g, BallNorm::Lipschitz { alpha: 1.0 / x.p - 1.0 })?;
            let den = w.atomic_norm * (mean_on(&ms, &x.g, b1).abs() + lip);
            let scale = 1.0 + max_abs(&x.f) * max_abs(&x.g);
            let num = norms.iter().copied().fold(0.0, f64::max);
            Ok(TrialOut::ratio(num, den)
                .extra("identity", routed.pi.residual(&x.f, &x.g) / scale)
                .extra("pi1", norms[0] / den)
                .extra("pi2", norms[1] / den)
                .extra("pi3", norms[2] / den))
        },
    )
}

fn luxembourg() -> impl Bench {
    #[derive(Debug, Serialize, Deserialize)]
    struct Input {
        cloud: Cloud,
        origin: usize,
        f: Vec<f64>,
        /// 0: Φ, 1: Ψ1, 2: Ψp.
        which: u8,
        p: f64,
        c: f64,
    }
    bench(
        |rng, n, t| {
            let n = random_n(rng, n);
            let cloud = Cloud::draw(rng, n, 1)?;
            let scale = 10f64.powf(rng.random_range(-3.0..3.0));
            let mut f: Vec<f64> =
                (0..n).map(|_| if rng.random::<bool>() { scale * normal(rng) } else { 0.0 }).collect();
            let k = rng.random_range(0..n);
            f[k] = scale * (1.0 + rng.random::<f64>());
            Ok(Input {
                cloud,
                origin: rng.random_range(0..n),
                f,
                which: (t % 3) as u8,
                p: rng.random_range(0.2..0.9),
                c: 10f64.powf(rng.random_range(-2.0..2.0)),
            })
        },
        |x: &Input| {
            let space = x.cloud.space()?;
            let ms = space.measure_space();
            let out = match x.which {
                0 => {
                    let norm = luxembourg_norm(&ms, &LogOrlicz, &x.f)?;
                    let scaled: Vec<f64> = x.f.iter().map(|v| x.c * v).collect();
                    let again = luxembourg_norm(&ms, &LogOrlicz, &scaled)?;
                    TrialOut::value((modular(&ms, &LogOrlicz, &x.f, norm) - 1.0).abs())
                        .extra("homogeneity", (again - x.c * norm).abs() / (x.c * norm))
                }
                w => {
                    let psi = Psi::new(space, x.origin, if w == 1 { 1.0 } else { x.p })?;
                    let norm = luxembourg_norm(&ms, &psi, &x.f)?;
                    TrialOut::value((modular(&ms, &psi, &x.f, norm) - 1.0).abs())
                }
            };
            Ok(out)
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(id: &str, trials: u64, sizes: Vec<usize>) -> VerificationReport {
        let opts = RunOptions { seed: 3, trials: Some(trials), sizes: Some(sizes), ..RunOptions::default() };
        run_suite(id, &opts).unwrap()
    }

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(matches!(run_suite("nope", &RunOptions::default()), Err(SuiteError::Unknown(_))));
    }

    #[test]
    fn every_suite_runs_small() {
        for info in SUITES {
            let r = quick(info.id, 4, vec![12, 24]);
            assert_eq!(r.trials, 8, "{}", info.id);
            assert!(r.sup_ratio.is_finite(), "{}", info.id);
            assert_eq!(r.witness.ratio.to_bits(), r.witness.replayed.to_bits(), "{}", info.id);
        }
    }

    #[test]
    fn reruns_are_identical() {
        let a = quick("pi2-h1", 5, vec![16, 32]);
        let b = quick("pi2-h1", 5, vec![16, 32]);
        assert_eq!(a.to_json_without_runtime(), b.to_json_without_runtime());
    }

    #[test]
    fn tolerance_override_applies() {
        let mut opts = RunOptions { seed: 1, trials: Some(10), sizes: Some(vec![20]), ..RunOptions::default() };
        opts.tolerances.insert("identity.upper".into(), -1.0);
        let r = run_suite("identity", &opts).unwrap();
        assert!(!r.pass);
        assert_eq!(r.failed_checks().map(|c| c.name.as_str()).collect::<Vec<_>>(), ["upper"]);
    }

    #[test]
    fn exponential_level_of_a_constant() {
        // ∫ exp(κ) = 2 at κ = ln 2.
        let s = MeasureSpace::uniform(4).unwrap();
        let k = exponential_level(&s, &[1.0; 4]);
        assert!((k - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(exponential_level(&s, &[0.0; 4]), 0.0);
    }
}
