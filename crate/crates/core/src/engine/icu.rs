//! ICU assignment for hospital admissions and calibration of its multiplier.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{AgeGroup, BedType};
use crate::los::LosDistribution;
use crate::population::ComorbidityRates;
use crate::scenario::Parameters;

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Logistic model of needing an ICU bed, scaled by a calibration multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcuModel {
    pub intercept: f64,
    pub b_age1: f64,
    pub b_age2: f64,
    pub b_comorbid: f64,
    pub b_los: f64,
    /// Per 100 beds.
    pub b_bedcount: f64,
    pub multiplier: f64,
}

impl IcuModel {
    pub fn from_params(p: &Parameters, multiplier: f64) -> Self {
        IcuModel {
            intercept: p.icu_intercept,
            b_age1: p.icu_b_age1,
            b_age2: p.icu_b_age2,
            b_comorbid: p.icu_b_comorbid,
            b_los: p.icu_b_los,
            b_bedcount: p.icu_b_bedcount,
            multiplier,
        }
    }

    pub fn with_multiplier(self, multiplier: f64) -> Self {
        IcuModel { multiplier, ..self }
    }

    pub fn linear_predictor(&self, age: AgeGroup, comorbid: bool, los: u32, beds: u32) -> f64 {
        let mut z = self.intercept + self.b_los * los as f64 + self.b_bedcount * beds as f64 / 100.0;
        match age {
            AgeGroup::Under50 => {}
            AgeGroup::From50To64 => z += self.b_age1,
            AgeGroup::Over65 => z += self.b_age2,
        }
        if comorbid {
            z += self.b_comorbid;
        }
        z
    }

    pub fn probability(&self, age: AgeGroup, comorbid: bool, los: u32, beds: u32) -> f64 {
        (self.multiplier * logistic(self.linear_predictor(age, comorbid, los, beds))).clamp(0.0, 1.0)
    }

    /// Bernoulli draw on [`IcuModel::probability`]. No draw is consumed when
    /// the probability is 0 or 1.
    pub fn assign<R: Rng + ?Sized>(&self, age: AgeGroup, comorbid: bool, los: u32, beds: u32, rng: &mut R) -> BedType {
        let p = self.probability(age, comorbid, los, beds);
        let icu = if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            rng.random::<f64>() < p
        };
        if icu {
            BedType::Icu
        } else {
            BedType::NonIcu
        }
    }
}

/// Annual admissions to one hospital with ICU beds, as seen by the model.
#[derive(Debug, Clone)]
pub struct IcuDemand {
    pub admissions_per_year: f64,
    /// Input (unscaled) total beds, the bed-count predictor.
    pub beds: u32,
    pub age_shares: [f64; 3],
    pub los: LosDistribution,
}

/// Expected ICU agent census: admissions × P(ICU) × LOS / 365, summed over
/// age, comorbidity and the discretized LOS distribution.
pub fn expected_icu_census(model: &IcuModel, demand: &[IcuDemand], rates: &ComorbidityRates) -> f64 {
    let mut total = 0.0;
    for d in demand {
        let pmf = d.los.pmf();
        let mut per_admission = 0.0;
        for age in AgeGroup::ALL {
            let share = d.age_shares[age.index()];
            if share == 0.0 {
                continue;
            }
            let pc = rates.0[age.index()];
            for (cc, w) in [(true, pc), (false, 1.0 - pc)] {
                if w == 0.0 {
                    continue;
                }
                let days: f64 = pmf
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        let k = i as u32 + 1;
                        p * model.probability(age, cc, k, d.beds) * k as f64
                    })
                    .sum();
                per_admission += share * w * days;
            }
        }
        total += d.admissions_per_year * per_admission / 365.0;
    }
    total
}

/// Finds the multiplier whose expected ICU census equals `target` by bisection.
pub fn calibrate_multiplier(
    base: &IcuModel,
    demand: &[IcuDemand],
    rates: &ComorbidityRates,
    target: f64,
) -> Result<f64> {
    if !(target >= 0.0) {
        return Err(Error::input(format!(
            "ICU census target must be non-negative, got {target}"
        )));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    let f = |m: f64| expected_icu_census(&base.with_multiplier(m), demand, rates);
    let mut hi = 1.0;
    while f(hi) < target {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::input(format!(
                "ICU census target {target:.1} exceeds the census reachable with every admission in ICU"
            )));
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::los::fit_los;
    use crate::rng::seeded;

    fn zero() -> IcuModel {
        IcuModel {
            intercept: 0.0,
            b_age1: 0.0,
            b_age2: 0.0,
            b_comorbid: 0.0,
            b_los: 0.0,
            b_bedcount: 0.0,
            multiplier: 1.0,
        }
    }

    #[test]
    fn multiplier_zero_never_icu() {
        let m = IcuModel::from_params(&Parameters::default(), 0.0);
        let mut rng = seeded(1);
        for los in 1..50 {
            assert_eq!(m.assign(AgeGroup::Over65, true, los, 900, &mut rng), BedType::NonIcu);
        }
    }

    #[test]
    fn zero_coefficients_give_one_half() {
        assert_eq!(zero().probability(AgeGroup::Under50, false, 5, 100), 0.5);
        let mut rng = seeded(9);
        let n = 200_000;
        let icu = (0..n)
            .filter(|_| zero().assign(AgeGroup::From50To64, true, 3, 10, &mut rng) == BedType::Icu)
            .count();
        assert!((icu as f64 / n as f64 - 0.5).abs() < 0.005);
    }

    #[test]
    fn probability_is_clamped() {
        let m = zero().with_multiplier(5.0);
        assert_eq!(m.probability(AgeGroup::Under50, false, 1, 1), 1.0);
    }

    #[test]
    fn documented_coefficients() {
        let m = IcuModel::from_params(&Parameters::default(), 1.0);
        let z = m.linear_predictor(AgeGroup::Over65, true, 4, 300);
        assert!((z - (-2.2 + 0.6 + 0.5 + 0.05 * 4.0 + 0.1 * 3.0)).abs() < 1e-12);
    }

    #[test]
    fn calibration_hits_target() {
        let demand = vec![
            IcuDemand {
                admissions_per_year: 10_000.0,
                beds: 400,
                age_shares: [0.41, 0.2, 0.39],
                los: fit_los(5.0, 3.0).unwrap(),
            },
            IcuDemand {
                admissions_per_year: 2_000.0,
                beds: 60,
                age_shares: [0.3, 0.3, 0.4],
                los: fit_los(4.0, 0.0).unwrap(),
            },
        ];
        let base = IcuModel::from_params(&Parameters::default(), 1.0);
        let rates = ComorbidityRates::default();
        let m = calibrate_multiplier(&base, &demand, &rates, 12.0).unwrap();
        let got = expected_icu_census(&base.with_multiplier(m), &demand, &rates);
        assert!((got - 12.0).abs() < 1e-6, "{got}");
        // with a fixed 4-day stay and zero coefficients everything is a closed form
        let fixed = vec![IcuDemand {
            admissions_per_year: 365.0,
            beds: 0,
            age_shares: [1.0, 0.0, 0.0],
            los: fit_los(4.0, 0.0).unwrap(),
        }];
        let e = expected_icu_census(&zero(), &fixed, &ComorbidityRates([0.0, 0.0, 0.0]));
        assert!((e - 2.0).abs() < 1e-12);
        assert!(calibrate_multiplier(&zero(), &fixed, &rates, 5.0).is_err());
    }
}
