//! Length-of-stay distributions.
//!
//! Every facility gets a gamma distribution fitted by the method of moments
//! (or a fixed value when the spread is zero). Draws are whole days, rounded
//! half-up and clamped to at least one day. Agents placed in facilities at
//! initialization instead draw from an "aged" remaining-LOS distribution: the
//! steady state of a process that adds a cohort of fresh draws every day and
//! removes one day from everything already in the system.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::distribution::{ContinuousCDF, Gamma as GammaCdf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LosFamily {
    Gamma { shape: f64, scale: f64 },
    Fixed { days: u32 },
}

#[derive(Debug, Clone)]
pub struct LosDistribution {
    mean: f64,
    sd: f64,
    family: LosFamily,
    sampler: Option<Gamma<f64>>,
}

fn round_days(x: f64) -> u32 {
    let r = (x + 0.5).floor();
    if r < 1.0 {
        1
    } else if r > u32::MAX as f64 {
        u32::MAX
    } else {
        r as u32
    }
}

/// Method-of-moments gamma: `shape = (mean/sd)²`, `scale = sd²/mean`.
pub fn fit_los(mean: f64, sd: f64) -> Result<LosDistribution> {
    if !(mean.is_finite() && mean > 0.0) {
        return Err(Error::input(format!("LOS mean must be positive, got {mean}")));
    }
    if !(sd.is_finite() && sd >= 0.0) {
        return Err(Error::input(format!("LOS sd must be non-negative, got {sd}")));
    }
    if sd == 0.0 {
        return Ok(LosDistribution {
            mean,
            sd,
            family: LosFamily::Fixed { days: round_days(mean) },
            sampler: None,
        });
    }
    let shape = (mean / sd).powi(2);
    let scale = sd * sd / mean;
    let sampler = Gamma::new(shape, scale).map_err(|e| Error::input(format!("gamma({shape}, {scale}): {e}")))?;
    Ok(LosDistribution {
        mean,
        sd,
        family: LosFamily::Gamma { shape, scale },
        sampler: Some(sampler),
    })
}

impl LosDistribution {
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }

    pub fn family(&self) -> LosFamily {
        self.family
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match (&self.family, &self.sampler) {
            (LosFamily::Fixed { days }, _) => *days,
            (_, Some(g)) => round_days(g.sample(rng)),
            (LosFamily::Gamma { .. }, None) => unreachable!("gamma family always carries a sampler"),
        }
    }

    /// Probability mass of the rounded, clamped draw: `pmf[k - 1] = P(LOS = k)`.
    /// The tail beyond the returned support carries less than 1e-12 mass.
    pub fn pmf(&self) -> Vec<f64> {
        match self.family {
            LosFamily::Fixed { days } => {
                let mut v = vec![0.0; days as usize];
                v[days as usize - 1] = 1.0;
                v
            }
            LosFamily::Gamma { shape, scale } => {
                let g = GammaCdf::new(shape, 1.0 / scale).expect("fitted gamma parameters are valid");
                let mut out = Vec::new();
                let mut prev = 0.0;
                let mut k = 1u32;
                loop {
                    let c = g.cdf(k as f64 + 0.5);
                    out.push(c - prev);
                    prev = c;
                    if 1.0 - c < 1e-12 && (k as f64) > self.mean {
                        break;
                    }
                    k += 1;
                }
                out
            }
        }
    }
}

/// Steady-state distribution of remaining days for agents already in a facility.
#[derive(Debug, Clone)]
pub struct RemainingLosDistribution {
    /// `weights[k - 1]` is the probability of `k` remaining days.
    weights: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

impl RemainingLosDistribution {
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || !(total > 0.0) {
            return Err(Error::input("remaining-LOS weights must have positive mass"));
        }
        let weights: Vec<f64> = weights.into_iter().map(|w| w / total).collect();
        let sampler = WeightedIndex::new(&weights).map_err(|e| Error::input(e.to_string()))?;
        Ok(RemainingLosDistribution { weights, sampler })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().enumerate().map(|(i, w)| (i + 1) as f64 * w).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.sampler.sample(rng) as u32 + 1
    }
}

/// Knobs for the aging simulation.
#[derive(Debug, Clone, Copy)]
pub struct AgingConfig {
    /// Draws making up the daily cohort.
    pub cohort_draws: usize,
    /// Minimum simulated days, as a multiple of the mean LOS.
    pub horizon_multiplier: f64,
    /// Stop once the day-over-day total-variation change falls below this.
    pub tolerance: f64,
}

impl Default for AgingConfig {
    fn default() -> Self {
        AgingConfig {
            cohort_draws: 20_000,
            horizon_multiplier: 10.0,
            tolerance: 1e-3,
        }
    }
}

pub fn age_distribution<R: Rng + ?Sized>(dist: &LosDistribution, rng: &mut R) -> RemainingLosDistribution {
    age_distribution_with(dist, &AgingConfig::default(), rng)
}

/// Simulates the aging process: each simulated day every value in the system
/// loses one day (non-positive values leave), then a cohort of fresh LOS draws
/// is added. Runs at least `horizon_multiplier × mean` days and until the
/// normalized histogram changes by less than `tolerance` in total variation.
pub fn age_distribution_with<R: Rng + ?Sized>(
    dist: &LosDistribution,
    cfg: &AgingConfig,
    rng: &mut R,
) -> RemainingLosDistribution {
    let draws = cfg.cohort_draws.max(1);
    let mut cohort: Vec<f64> = Vec::new();
    for _ in 0..draws {
        let v = dist.sample(rng) as usize;
        if cohort.len() < v {
            cohort.resize(v, 0.0);
        }
        cohort[v - 1] += 1.0;
    }
    let width = cohort.len();
    let min_days = (cfg.horizon_multiplier * dist.mean()).ceil() as usize;
    // after `width` days the histogram is exactly stationary
    let max_days = min_days.max(width) + 1;

    let mut live = vec![0.0; width];
    let mut prev = vec![0.0; width];
    let mut cur = vec![0.0; width];
    for day in 1..=max_days {
        live.rotate_left(1);
        live[width - 1] = 0.0;
        for (h, c) in live.iter_mut().zip(&cohort) {
            *h += c;
        }
        let total: f64 = live.iter().sum();
        for (o, h) in cur.iter_mut().zip(&live) {
            *o = h / total;
        }
        let tv = 0.5 * cur.iter().zip(&prev).map(|(a, b)| (a - b).abs()).sum::<f64>();
        std::mem::swap(&mut prev, &mut cur);
        if day >= min_days && tv < cfg.tolerance {
            break;
        }
    }
    RemainingLosDistribution::from_weights(prev).expect("aged histogram has positive mass")
}

pub fn sample_los<R: Rng + ?Sized>(dist: &LosDistribution, rng: &mut R) -> u32 {
    dist.sample(rng)
}

pub fn sample_remaining_los<R: Rng + ?Sized>(rd: &RemainingLosDistribution, rng: &mut R) -> u32 {
    rd.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn moments(xs: &[u32]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
        let v = xs.iter().map(|&x| (x as f64 - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v.sqrt())
    }

    #[test]
    fn method_of_moments_fit() {
        let d = fit_los(5.77, 2.5).unwrap();
        match d.family() {
            LosFamily::Gamma { shape, scale } => {
                assert!((shape - 5.327).abs() < 1e-3, "{shape}");
                assert!((scale - 1.083).abs() < 1e-3, "{scale}");
            }
            other => panic!("{other:?}"),
        }
        assert!(fit_los(0.0, 1.0).is_err());
        assert!(fit_los(-2.0, 1.0).is_err());
        assert!(fit_los(3.0, -1.0).is_err());
    }

    #[test]
    fn degenerate_distribution() {
        let d = fit_los(3.0, 0.0).unwrap();
        let mut rng = seeded(1);
        assert!((0..1000).all(|_| sample_los(&d, &mut rng) == 3));
        let d = fit_los(0.2, 0.0).unwrap();
        assert_eq!(sample_los(&d, &mut rng), 1);
        assert_eq!(fit_los(4.5, 0.0).unwrap().sample(&mut rng), 5);
    }

    #[test]
    fn draws_are_at_least_one_day() {
        // mostly mass below 0.5: every such draw clamps to 1
        let d = fit_los(0.3, 0.5).unwrap();
        let mut rng = seeded(2);
        let xs: Vec<u32> = (0..10_000).map(|_| d.sample(&mut rng)).collect();
        assert!(xs.iter().all(|&x| x >= 1));
        assert!(xs.iter().filter(|&&x| x == 1).count() > 9_000);
    }

    #[test]
    fn monte_carlo_moments() {
        let d = fit_los(5.77, 2.5).unwrap();
        let mut rng = seeded(3);
        let xs: Vec<u32> = (0..1_000_000).map(|_| d.sample(&mut rng)).collect();
        let (m, s) = moments(&xs);
        assert!((m / 5.77 - 1.0).abs() < 0.01, "mean {m}");
        assert!((s / 2.5 - 1.0).abs() < 0.01, "sd {s}");
    }

    #[test]
    fn facility_sized_sample_sits_in_band() {
        // 49k draws: sampling error of the mean is ~0.2%
        let d = fit_los(5.77, 2.5).unwrap();
        let mut rng = seeded(23);
        let xs: Vec<u32> = (0..49_304).map(|_| d.sample(&mut rng)).collect();
        let (m, _) = moments(&xs);
        assert!((m - 5.77).abs() / 5.77 < 0.01, "{m}");
    }

    #[test]
    fn pmf_matches_sampling() {
        let d = fit_los(6.0, 2.0).unwrap();
        let pmf = d.pmf();
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let mut rng = seeded(4);
        let n = 400_000;
        let mut counts = vec![0.0; pmf.len() + 50];
        for _ in 0..n {
            counts[d.sample(&mut rng) as usize - 1] += 1.0;
        }
        for (k, p) in pmf.iter().enumerate() {
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((counts[k] / n as f64 - p).abs() < 5.0 * se + 1e-6, "k={}", k + 1);
        }
    }

    #[test]
    fn aging_point_mass_at_one() {
        let d = fit_los(1.0, 0.0).unwrap();
        let rd = age_distribution(&d, &mut seeded(5));
        assert_eq!(rd.weights(), &[1.0]);
        let mut rng = seeded(6);
        assert!((0..100).all(|_| sample_remaining_los(&rd, &mut rng) == 1));
    }

    /// In steady state every residual day of a fixed k-day stay is equally likely.
    #[test]
    fn aging_fixed_stay_is_uniform() {
        for k in [2u32, 3, 7, 12] {
            let d = fit_los(k as f64, 0.0).unwrap();
            let rd = age_distribution(&d, &mut seeded(7));
            assert_eq!(rd.weights().len(), k as usize);
            let tv: f64 = 0.5 * rd.weights().iter().map(|w| (w - 1.0 / k as f64).abs()).sum::<f64>();
            assert!(tv < 0.02, "k={k}: tv {tv}");
        }
    }

    /// Brute force over the LOS pmf: the stationary residual of a renewal
    /// process with whole-day stays has mean E[L(L+1)/2] / E[L].
    #[test]
    fn aging_mean_matches_stationary_residual() {
        for (mean, sd) in [(5.77, 2.5), (25.0, 10.0), (3.0, 2.5), (120.0, 60.0)] {
            let d = fit_los(mean, sd).unwrap();
            let pmf = d.pmf();
            let (mut num, mut den) = (0.0, 0.0);
            for (i, p) in pmf.iter().enumerate() {
                let l = (i + 1) as f64;
                num += p * l * (l + 1.0) / 2.0;
                den += p * l;
            }
            let analytic = num / den;
            let rd = age_distribution(&d, &mut seeded(8));
            assert!(
                (rd.mean() / analytic - 1.0).abs() < 0.02,
                "{mean}/{sd}: {} vs {analytic}",
                rd.mean()
            );
        }
    }

    #[test]
    fn remaining_sampler_matches_weights() {
        let d = fit_los(6.0, 3.0).unwrap();
        let rd = age_distribution(&d, &mut seeded(9));
        let mut rng = seeded(10);
        let n = 1_000_000;
        let mut counts = vec![0u32; rd.weights().len()];
        for _ in 0..n {
            let v = sample_remaining_los(&rd, &mut rng);
            assert!(v >= 1);
            counts[v as usize - 1] += 1;
        }
        for (w, c) in rd.weights().iter().zip(&counts) {
            if *w >= 0.01 {
                let f = *c as f64 / n as f64;
                assert!(
                    (f / w - 1.0).abs() < 0.005 * 2.0 + 3.0 * (1.0 / (*w * n as f64)).sqrt(),
                    "{f} vs {w}"
                );
            }
        }
    }

    #[test]
    fn seeded_draws_repeat() {
        let d = fit_los(7.2, 3.2).unwrap();
        let a: Vec<u32> = {
            let mut r = seeded(99);
            (0..100).map(|_| d.sample(&mut r)).collect()
        };
        let b: Vec<u32> = {
            let mut r = seeded(99);
            (0..100).map(|_| d.sample(&mut r)).collect()
        };
        assert_eq!(a, b);
    }
}
