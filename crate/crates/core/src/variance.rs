//! Monte-Carlo check that averaging m returns from the same state divides
//! the variance of an advantage estimate by m, and of how much a noisy
//! baseline inflates it again.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};
use thiserror::Error;

use crate::llm::scripted::fnv;

/// Two-sided confidence level of the pass/fail band.
pub const CONFIDENCE: f64 = 0.99;

#[derive(Debug, Error, PartialEq)]
pub enum VarianceError {
    #[error("invalid experiment: {0}")]
    Invalid(String),
}

/// Distribution of a single return given its mean and standard deviation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReturnModel {
    #[default]
    Gaussian,
    /// Sparse two-point returns: a Bernoulli(p) draw rescaled to the
    /// requested mean and standard deviation.
    Bernoulli { p: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceExperiment {
    pub action_sigmas: Vec<f64>,
    pub action_means: Vec<f64>,
    pub samples_per_action: Vec<u32>,
    pub trials: u32,
    pub seed: u64,
    #[serde(default)]
    pub returns: ReturnModel,
}

impl VarianceExperiment {
    /// Equal-mean actions, one per (σ, m) pair.
    pub fn new(sigmas: &[f64], samples: &[u32], trials: u32, seed: u64) -> Self {
        VarianceExperiment {
            action_sigmas: sigmas.to_vec(),
            action_means: vec![0.0; sigmas.len()],
            samples_per_action: samples.to_vec(),
            trials,
            seed,
            returns: ReturnModel::Gaussian,
        }
    }

    pub fn validate(&self) -> Result<(), VarianceError> {
        let n = self.action_sigmas.len();
        if n == 0 {
            return Err(VarianceError::Invalid("at least one action is required".into()));
        }
        if self.action_means.len() != n || self.samples_per_action.len() != n {
            return Err(VarianceError::Invalid(format!(
                "action_sigmas, action_means and samples_per_action must have equal lengths ({n}, {}, {})",
                self.action_means.len(),
                self.samples_per_action.len()
            )));
        }
        if let Some(s) = self.action_sigmas.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(VarianceError::Invalid(format!("sigma must be finite and >= 0, got {s}")));
        }
        if self.action_means.iter().any(|m| !m.is_finite()) {
            return Err(VarianceError::Invalid("action means must be finite".into()));
        }
        if self.samples_per_action.contains(&0) {
            return Err(VarianceError::Invalid("samples_per_action must be >= 1".into()));
        }
        if self.trials < 100 {
            return Err(VarianceError::Invalid(format!("trials must be >= 100, got {}", self.trials)));
        }
        if let ReturnModel::Bernoulli { p } = self.returns {
            if !(p > 0.0 && p < 1.0) {
                return Err(VarianceError::Invalid(format!("bernoulli p must lie in (0, 1), got {p}")));
            }
        }
        Ok(())
    }

    /// Fixed baseline V̂: the mean of the true action values.
    pub fn baseline(&self) -> f64 {
        self.action_means.iter().sum::<f64>() / self.action_means.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionVariance {
    pub action: usize,
    pub sigma: f64,
    pub m: u32,
    pub var_single: f64,
    pub var_mar: f64,
    pub ratio: f64,
    /// The 1/m target.
    pub bound: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub experiment: VarianceExperiment,
    pub confidence: f64,
    pub actions: Vec<ActionVariance>,
}

impl VarianceReport {
    pub fn all_pass(&self) -> bool {
        self.actions.iter().all(|a| a.pass)
    }
}

/// Band that `ratio` falls in with the given probability when the true
/// ratio is 1/m: both sample variances are scaled chi-square with T−1
/// degrees of freedom, so their normalized ratio is F(T−1, T−1).
pub fn ratio_interval(m: u32, trials: u32, confidence: f64) -> (f64, f64) {
    let df = (trials - 1) as f64;
    let f = FisherSnedecor::new(df, df).expect("positive degrees of freedom");
    let tail = (1.0 - confidence) / 2.0;
    let target = 1.0 / m as f64;
    (target * f.inverse_cdf(tail), target * f.inverse_cdf(1.0 - tail))
}

fn trial_rng(seed: u64, stream: &str, action: usize, trial: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(fnv(seed, &[stream, &action.to_string(), &trial.to_string()]))
}

fn draw(rng: &mut ChaCha8Rng, model: ReturnModel, mean: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return mean;
    }
    match model {
        ReturnModel::Gaussian => Normal::new(mean, sigma).expect("finite sigma").sample(rng),
        ReturnModel::Bernoulli { p } => {
            let hit = rand_distr::Bernoulli::new(p).expect("p in (0, 1)").sample(rng);
            let x = if hit { 1.0 - p } else { -p };
            mean + sigma * x / (p * (1.0 - p)).sqrt()
        }
    }
}

fn mean_of(rng: &mut ChaCha8Rng, model: ReturnModel, mean: f64, sigma: f64, m: u32) -> f64 {
    (0..m).map(|_| draw(rng, model, mean, sigma)).sum::<f64>() / m as f64
}

/// Unbiased sample variance, summed in index order.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Single-trajectory and multi-path advantage estimators against a fixed
/// baseline, one independent set of draws each.
pub fn simulate_estimators(exp: &VarianceExperiment) -> Result<VarianceReport, VarianceError> {
    exp.validate()?;
    let baseline = exp.baseline();
    let mut actions = Vec::with_capacity(exp.action_sigmas.len());
    for (a, ((&sigma, &mean), &m)) in
        exp.action_sigmas.iter().zip(&exp.action_means).zip(&exp.samples_per_action).enumerate()
    {
        let (single, mar): (Vec<f64>, Vec<f64>) = (0..exp.trials)
            .into_par_iter()
            .map(|t| {
                let s = draw(&mut trial_rng(exp.seed, "single", a, t), exp.returns, mean, sigma) - baseline;
                let q = mean_of(&mut trial_rng(exp.seed, "mar", a, t), exp.returns, mean, sigma, m) - baseline;
                (s, q)
            })
            .unzip();
        let var_single = sample_variance(&single);
        let var_mar = sample_variance(&mar);
        let bound = 1.0 / m as f64;
        let (ratio, ci_low, ci_high) = if sigma == 0.0 {
            (1.0, 1.0, 1.0)
        } else {
            let (lo, hi) = ratio_interval(m, exp.trials, CONFIDENCE);
            (var_mar / var_single, lo, hi)
        };
        let pass = sigma == 0.0 || (ci_low..=ci_high).contains(&ratio);
        actions.push(ActionVariance { action: a, sigma, m, var_single, var_mar, ratio, bound, ci_low, ci_high, pass });
    }
    Ok(VarianceReport { experiment: exp.clone(), confidence: CONFIDENCE, actions })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inflation {
    pub action: usize,
    pub sigma: f64,
    pub m: u32,
    pub baseline_noise: f64,
    /// Var[Q̂ − V̂] / Var[Q̂] over the same trials.
    pub factor: f64,
    /// (σ²/m + σ_V²) / (σ²/m).
    pub expected: f64,
}

/// Repeats the multi-path estimator with a baseline resampled per trial
/// from N(V, σ_V²) and reports the variance inflation per action.
pub fn simulate_baseline_stability(exp: &VarianceExperiment, baseline_noise: f64) -> Result<Vec<Inflation>, VarianceError> {
    exp.validate()?;
    if !(baseline_noise.is_finite() && baseline_noise >= 0.0) {
        return Err(VarianceError::Invalid(format!("baseline noise must be finite and >= 0, got {baseline_noise}")));
    }
    let baseline = exp.baseline();
    let mut out = Vec::with_capacity(exp.action_sigmas.len());
    for (a, ((&sigma, &mean), &m)) in
        exp.action_sigmas.iter().zip(&exp.action_means).zip(&exp.samples_per_action).enumerate()
    {
        let (q, adv): (Vec<f64>, Vec<f64>) = (0..exp.trials)
            .into_par_iter()
            .map(|t| {
                let q = mean_of(&mut trial_rng(exp.seed, "mar", a, t), exp.returns, mean, sigma, m);
                let v = draw(&mut trial_rng(exp.seed, "baseline", a, t), ReturnModel::Gaussian, baseline, baseline_noise);
                (q, q - v)
            })
            .unzip();
        let var_q = sample_variance(&q);
        let var_adv = sample_variance(&adv);
        let factor = if var_q > 0.0 {
            var_adv / var_q
        } else if var_adv > 0.0 {
            f64::INFINITY
        } else {
            1.0
        };
        let base = sigma * sigma / m as f64;
        let expected = if base > 0.0 {
            (base + baseline_noise * baseline_noise) / base
        } else if baseline_noise > 0.0 {
            f64::INFINITY
        } else {
            1.0
        };
        out.push(Inflation { action: a, sigma, m, baseline_noise, factor, expected });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn validation_names_the_problem() {
        let mut e = VarianceExperiment::new(&[1.0], &[2], 100, 0);
        assert!(e.validate().is_ok());
        e.trials = 99;
        assert!(e.validate().unwrap_err().to_string().contains("trials"));
        let e = VarianceExperiment::new(&[-1.0], &[2], 100, 0);
        assert!(e.validate().unwrap_err().to_string().contains("sigma"));
        let e = VarianceExperiment::new(&[1.0], &[0], 100, 0);
        assert!(e.validate().unwrap_err().to_string().contains("samples_per_action"));
        let mut e = VarianceExperiment::new(&[1.0], &[1], 100, 0);
        e.action_means.push(1.0);
        assert!(e.validate().is_err());
    }

    #[test]
    fn interval_brackets_the_target() {
        let (lo, hi) = ratio_interval(4, 10_000, 0.99);
        assert!(lo < 0.25 && 0.25 < hi);
        // F(9999, 9999) is nearly normal with sd sqrt(4/9999)
        let half = 2.5758 * (4.0f64 / 9999.0).sqrt() * 0.25;
        assert!((hi - lo - 2.0 * half).abs() < 0.002, "{lo} {hi}");
    }

    #[test]
    fn single_sample_estimators_coincide_in_expectation() {
        let r = simulate_estimators(&VarianceExperiment::new(&[1.0], &[1], 10_000, 3)).unwrap();
        assert!(r.actions[0].pass, "{:?}", r.actions[0]);
    }

    #[test]
    fn sample_mean_variance() {
        let r = simulate_estimators(&VarianceExperiment::new(&[1.0, 2.0], &[4, 8], 10_000, 7)).unwrap();
        assert!(r.all_pass(), "{:?}", r.actions);
        assert!((r.actions[1].var_mar - 0.5).abs() < 0.5 * 0.06, "{}", r.actions[1].var_mar);
    }

    #[test]
    fn zero_sigma_is_degenerate() {
        let r = simulate_estimators(&VarianceExperiment::new(&[0.0], &[3], 100, 1)).unwrap();
        assert_eq!((r.actions[0].var_single, r.actions[0].var_mar, r.actions[0].ratio), (0.0, 0.0, 1.0));
    }

    #[test]
    fn bernoulli_returns_keep_moments() {
        let mut e = VarianceExperiment::new(&[1.5], &[4], 20_000, 5);
        e.action_means = vec![2.0];
        e.returns = ReturnModel::Bernoulli { p: 0.1 };
        let r = simulate_estimators(&e).unwrap();
        assert!((r.actions[0].var_single - 2.25).abs() < 0.25, "{}", r.actions[0].var_single);
        assert!(r.actions[0].pass, "{:?}", r.actions[0]);
    }

    #[test]
    fn noiseless_baseline_does_not_inflate() {
        let e = VarianceExperiment::new(&[1.0], &[4], 1000, 2);
        let inf = simulate_baseline_stability(&e, 0.0).unwrap();
        assert_eq!(inf[0].factor, 1.0);
        assert_eq!(inf[0].expected, 1.0);
    }

    #[test]
    fn noisy_baseline_adds_variance() {
        let e = VarianceExperiment::new(&[1.0, 1.0], &[1, 4], 20_000, 9);
        let inf = simulate_baseline_stability(&e, 1.0).unwrap();
        assert_eq!((inf[0].expected, inf[1].expected), (2.0, 5.0));
        assert!((inf[0].factor - 2.0).abs() < 0.1, "{}", inf[0].factor);
        assert!((inf[1].factor - 5.0).abs() < 0.25, "{}", inf[1].factor);
    }

    #[test]
    fn seeded_runs_repeat() {
        let e = VarianceExperiment::new(&[1.0], &[3], 500, 11);
        assert_eq!(simulate_estimators(&e).unwrap(), simulate_estimators(&e).unwrap());
        let mut other = e.clone();
        other.seed = 12;
        assert_ne!(simulate_estimators(&e).unwrap().actions[0].var_mar, simulate_estimators(&other).unwrap().actions[0].var_mar);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn variances_are_finite_and_nonnegative(sigma in 0.0f64..5.0, m in 1u32..6, seed in any::<u64>()) {
            let r = simulate_estimators(&VarianceExperiment::new(&[sigma], &[m], 100, seed)).unwrap();
            let a = &r.actions[0];
            prop_assert!(a.var_single >= 0.0 && a.var_mar >= 0.0 && a.ratio.is_finite());
        }
    }
}
