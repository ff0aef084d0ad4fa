//! First-choice facility probabilities per home county.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geography::DistanceMatrix;
use crate::ids::{Category, CountyId, FacilityId};
use crate::scenario::{Distances, Parameters};
use crate::transitions::HospitalRecord;

/// Inverse-distance weights `1 / max(d, 1)`, normalized to sum to 1.
pub fn inverse_distance_weights<K: Copy>(pairs: &[(K, f64)]) -> Vec<(K, f64)> {
    let raw: Vec<(K, f64)> = pairs.iter().map(|(k, d)| (*k, 1.0 / d.max(1.0))).collect();
    let total: f64 = raw.iter().map(|(_, w)| w).sum();
    raw.into_iter().map(|(k, w)| (k, w / total)).collect()
}

/// Probability of each county supplying an occupant of `facility`,
/// proportional to inverse distance over every county.
pub fn county_weights(matrix: &DistanceMatrix, facility: FacilityId) -> Result<Vec<(CountyId, f64)>> {
    let mut pairs = Vec::with_capacity(matrix.counties().len());
    for c in matrix.counties() {
        let d = matrix
            .get(*c, facility)
            .ok_or_else(|| Error::input(format!("facility {facility} missing from distance matrix")))?;
        pairs.push((*c, d));
    }
    Ok(inverse_distance_weights(&pairs))
}

/// Maps a uniform draw to an entry of a probability list.
pub fn pick_weighted<K: Copy>(options: &[(K, f64)], u: f64) -> Option<K> {
    let mut acc = 0.0;
    for (k, p) in options {
        acc += p;
        if u < acc {
            return Some(*k);
        }
    }
    options.last().map(|(k, _)| *k)
}

#[derive(Debug, Clone, Default)]
pub struct ChoiceTables {
    hospital: BTreeMap<CountyId, Vec<(FacilityId, f64)>>,
    ltach: BTreeMap<CountyId, Vec<(FacilityId, f64)>>,
    nh: BTreeMap<CountyId, Vec<(FacilityId, f64)>>,
}

fn restricted(
    matrix: &DistanceMatrix,
    county: CountyId,
    keep: &dyn Fn(FacilityId) -> bool,
    max: f64,
) -> Result<Vec<(FacilityId, f64)>> {
    Ok(matrix
        .within(county, max)?
        .into_iter()
        .filter(|(f, _)| keep(*f))
        .collect())
}

impl ChoiceTables {
    /// Hospitals are chosen in proportion to their discharges from the
    /// county; a county no hospital reports falls back to its nearest
    /// hospital within range. LTACHs and nursing homes are chosen by inverse
    /// distance among the closest N within range.
    pub fn build(
        hospitals: &[HospitalRecord],
        ltachs: &[FacilityId],
        nhs: &[FacilityId],
        distances: &Distances,
        params: &Parameters,
    ) -> Result<Self> {
        let mut out = ChoiceTables::default();
        let hospital_ids: Vec<FacilityId> = hospitals.iter().map(|h| h.facility_id).collect();
        for &county in distances.stach.counties() {
            let weights: Vec<(FacilityId, f64)> = hospitals
                .iter()
                .map(|h| (h.facility_id, h.county_share(county) * h.in_state_discharges()))
                .filter(|(_, w)| *w > 0.0)
                .collect();
            let total: f64 = weights.iter().map(|(_, w)| w).sum();
            let options = if total > 0.0 {
                weights.into_iter().map(|(f, w)| (f, w / total)).collect()
            } else {
                let near = restricted(
                    &distances.stach,
                    county,
                    &|f| hospital_ids.contains(&f),
                    params.max_distance,
                )?;
                near.first().map(|(f, _)| vec![(*f, 1.0)]).unwrap_or_default()
            };
            out.hospital.insert(county, options);
        }
        for (cat, ids, n, matrix) in [
            (Category::Ltach, ltachs, params.ltach_closest_n, &distances.ltach),
            (Category::Nh, nhs, params.nursing_home_closest_n, &distances.nh),
        ] {
            let table = if cat == Category::Ltach {
                &mut out.ltach
            } else {
                &mut out.nh
            };
            for &county in matrix.counties() {
                let mut near = restricted(matrix, county, &|f| ids.contains(&f), params.max_distance)?;
                near.truncate(n as usize);
                table.insert(county, inverse_distance_weights(&near));
            }
        }
        Ok(out)
    }

    pub fn options(&self, category: Category, county: CountyId) -> &[(FacilityId, f64)] {
        let table = match category {
            Category::Stach => &self.hospital,
            Category::Ltach => &self.ltach,
            Category::Nh => &self.nh,
            Category::Community => return &[],
        };
        table.get(&county).map_or(&[], |v| v.as_slice())
    }

    pub fn pick(&self, category: Category, county: CountyId, u: f64) -> Option<FacilityId> {
        pick_weighted(self.options(category, county), u)
    }
}
