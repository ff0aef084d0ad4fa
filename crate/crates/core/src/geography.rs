//! County-centroid to facility distance matrices.
//!
//! One matrix exists per facility category. Distances are great-circle miles
//! between a county centroid and a facility geocode, and the per-county rows
//! are kept pre-sorted so nearest-facility queries are a prefix scan.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{Category, CountyId, FacilityId};

pub const EARTH_RADIUS_MILES: f64 = 3958.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    latitude: f64,
    longitude: f64,
}

impl GeoPoint {
    pub fn new(latitude: f64, longitude: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&latitude) || !latitude.is_finite() {
            return Err(Error::input(format!("latitude {latitude} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&longitude) || !longitude.is_finite() {
            return Err(Error::input(format!("longitude {longitude} outside [-180, 180]")));
        }
        Ok(GeoPoint { latitude, longitude })
    }

    pub fn latitude(&self) -> f64 {
        self.latitude
    }

    pub fn longitude(&self) -> f64 {
        self.longitude
    }
}

/// Haversine distance in miles.
pub fn great_circle_miles(a: GeoPoint, b: GeoPoint) -> f64 {
    let lat1 = a.latitude.to_radians();
    let lat2 = b.latitude.to_radians();
    let dlat = (b.latitude - a.latitude).to_radians();
    let dlon = (b.longitude - a.longitude).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_MILES * h.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    category: Category,
    counties: Vec<CountyId>,
    facilities: Vec<FacilityId>,
    county_index: HashMap<CountyId, usize>,
    facility_index: HashMap<FacilityId, usize>,
    /// Row-major `[county][facility]`.
    miles: Vec<f64>,
    /// Per county: facility indices ascending by (distance, facility id).
    sorted: Vec<Vec<u32>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DistanceRecord {
    county_id: u32,
    facility_id: u32,
    miles: f64,
}

const DISTANCE_HEADER: [&str; 3] = ["county_id", "facility_id", "miles"];

fn index_unique<T: Copy + Eq + std::hash::Hash + std::fmt::Display>(
    ids: &[T],
    what: &str,
) -> Result<HashMap<T, usize>> {
    let mut map = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if map.insert(*id, i).is_some() {
            return Err(Error::input(format!("duplicate {what} id {id}")));
        }
    }
    Ok(map)
}

impl DistanceMatrix {
    /// Great-circle distances from every county centroid to every facility.
    pub fn build(
        category: Category,
        counties: &[(CountyId, GeoPoint)],
        facilities: &[(FacilityId, GeoPoint)],
    ) -> Result<Self> {
        if counties.is_empty() || facilities.is_empty() {
            return Err(Error::input(format!(
                "{category} distance matrix needs at least one county and one facility"
            )));
        }
        let county_ids: Vec<CountyId> = counties.iter().map(|c| c.0).collect();
        let facility_ids: Vec<FacilityId> = facilities.iter().map(|f| f.0).collect();
        let mut miles = Vec::with_capacity(counties.len() * facilities.len());
        for (_, cp) in counties {
            for (_, fp) in facilities {
                miles.push(great_circle_miles(*cp, *fp));
            }
        }
        Self::from_parts(category, county_ids, facility_ids, miles)
    }

    fn from_parts(
        category: Category,
        counties: Vec<CountyId>,
        facilities: Vec<FacilityId>,
        miles: Vec<f64>,
    ) -> Result<Self> {
        let county_index = index_unique(&counties, "county")?;
        let facility_index = index_unique(&facilities, "facility")?;
        if let Some(bad) = miles.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::input(format!(
                "distance {bad} is not a finite non-negative number"
            )));
        }
        let nf = facilities.len();
        let sorted = (0..counties.len())
            .map(|ci| {
                let row = &miles[ci * nf..(ci + 1) * nf];
                let mut order: Vec<u32> = (0..nf as u32).collect();
                order.sort_by(|&a, &b| {
                    row[a as usize]
                        .total_cmp(&row[b as usize])
                        .then(facilities[a as usize].cmp(&facilities[b as usize]))
                });
                order
            })
            .collect();
        Ok(DistanceMatrix {
            category,
            counties,
            facilities,
            county_index,
            facility_index,
            miles,
            sorted,
        })
    }

    pub fn category(&self) -> Category {
        self.category
    }

    pub fn counties(&self) -> &[CountyId] {
        &self.counties
    }

    pub fn facilities(&self) -> &[FacilityId] {
        &self.facilities
    }

    pub fn len(&self) -> usize {
        self.miles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.miles.is_empty()
    }

    pub fn get(&self, county: CountyId, facility: FacilityId) -> Option<f64> {
        let ci = *self.county_index.get(&county)?;
        let fi = *self.facility_index.get(&facility)?;
        Some(self.miles[ci * self.facilities.len() + fi])
    }

    fn county_row(&self, county: CountyId) -> Result<usize> {
        self.county_index
            .get(&county)
            .copied()
            .ok_or_else(|| Error::input(format!("county {county} not in {} distance matrix", self.category)))
    }

    /// All facilities within `max_miles` of the county centroid, nearest first
    /// (ties broken by ascending facility id).
    pub fn within(&self, county: CountyId, max_miles: f64) -> Result<Vec<(FacilityId, f64)>> {
        let ci = self.county_row(county)?;
        let nf = self.facilities.len();
        Ok(self.sorted[ci]
            .iter()
            .map(|&fi| (self.facilities[fi as usize], self.miles[ci * nf + fi as usize]))
            .take_while(|&(_, d)| d <= max_miles)
            .collect())
    }

    /// Up to `n` nearest facilities within `max_miles`.
    pub fn closest_n(&self, county: CountyId, n: usize, max_miles: f64) -> Result<Vec<FacilityId>> {
        if n == 0 {
            return Err(Error::input("closest_n needs n >= 1"));
        }
        let mut out = self.within(county, max_miles)?;
        out.truncate(n);
        Ok(out.into_iter().map(|(id, _)| id).collect())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let nf = self.facilities.len();
        for (ci, c) in self.counties.iter().enumerate() {
            for (fi, f) in self.facilities.iter().enumerate() {
                wtr.serialize(DistanceRecord {
                    county_id: c.0,
                    facility_id: f.0,
                    miles: self.miles[ci * nf + fi],
                })?;
            }
        }
        wtr.flush().map_err(|e| Error::io("<distance csv>", e))?;
        Ok(())
    }

    /// Reads `county_id,facility_id,miles`. The file must cover the full
    /// county × facility grid.
    pub fn read_csv<R: Read>(category: Category, r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != DISTANCE_HEADER {
            return Err(Error::input(format!(
                "distance file header must be {}, got {}",
                DISTANCE_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut counties = Vec::new();
        let mut facilities = Vec::new();
        let mut seen_c = HashMap::new();
        let mut seen_f = HashMap::new();
        let mut cells = HashMap::new();
        for rec in rdr.deserialize() {
            let rec: DistanceRecord = rec?;
            let c = CountyId(rec.county_id);
            let f = FacilityId(rec.facility_id);
            seen_c.entry(c).or_insert_with(|| {
                counties.push(c);
            });
            seen_f.entry(f).or_insert_with(|| {
                facilities.push(f);
            });
            if cells.insert((c, f), rec.miles).is_some() {
                return Err(Error::input(format!("duplicate distance entry ({c}, {f})")));
            }
        }
        if cells.len() != counties.len() * facilities.len() {
            return Err(Error::input(format!(
                "{category} distance file has {} entries, expected {} x {}",
                cells.len(),
                counties.len(),
                facilities.len()
            )));
        }
        let mut miles = Vec::with_capacity(cells.len());
        for c in &counties {
            for f in &facilities {
                miles.push(cells[&(*c, *f)]);
            }
        }
        Self::from_parts(category, counties, facilities, miles)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: spherical law of cosines / atan2 (Vincenty on a sphere).
    fn vincenty_sphere_miles(a: GeoPoint, b: GeoPoint) -> f64 {
        let (p1, p2) = (a.latitude().to_radians(), b.latitude().to_radians());
        let dl = (b.longitude() - a.longitude()).to_radians();
        let num =
            ((p2.cos() * dl.sin()).powi(2) + (p1.cos() * p2.sin() - p1.sin() * p2.cos() * dl.cos()).powi(2)).sqrt();
        let den = p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos();
        EARTH_RADIUS_MILES * num.atan2(den)
    }

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn identical_points_are_zero_apart() {
        let p = pt(35.78, -78.64);
        assert_eq!(great_circle_miles(p, p), 0.0);
    }

    #[test]
    fn antipodes_on_equator() {
        let d = great_circle_miles(pt(0.0, 0.0), pt(0.0, 180.0));
        assert!((d - 12436.0).abs() < 1.0, "{d}");
    }

    #[test]
    fn raleigh_to_greensboro_matches_oracle() {
        let (a, b) = (pt(35.78, -78.64), pt(36.08, -79.79));
        let oracle = vincenty_sphere_miles(a, b);
        // frozen from the oracle above
        assert!((oracle - 67.596).abs() < 0.01, "{oracle}");
        assert!((great_circle_miles(a, b) - oracle).abs() < 0.5);
    }

    #[test]
    fn invalid_coordinates_rejected() {
        assert!(GeoPoint::new(91.0, 0.0).is_err());
        assert!(GeoPoint::new(0.0, -180.5).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn matrix_cardinality_and_single_entry() {
        let p = pt(35.0, -79.0);
        let m = DistanceMatrix::build(Category::Nh, &[(CountyId(1), p)], &[(FacilityId(9), p)]).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.get(CountyId(1), FacilityId(9)), Some(0.0));

        let counties = [(CountyId(1), pt(35.0, -79.0)), (CountyId(3), pt(36.0, -80.0))];
        let facs = [
            (FacilityId(1), pt(35.5, -79.5)),
            (FacilityId(2), pt(34.5, -78.0)),
            (FacilityId(3), pt(36.2, -81.0)),
        ];
        let m = DistanceMatrix::build(Category::Stach, &counties, &facs).unwrap();
        assert_eq!(m.len(), 6);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let p = pt(35.0, -79.0);
        let err = DistanceMatrix::build(
            Category::Nh,
            &[(CountyId(1), p), (CountyId(1), p)],
            &[(FacilityId(1), p)],
        );
        assert!(err.is_err());
        let err = DistanceMatrix::build(
            Category::Nh,
            &[(CountyId(1), p)],
            &[(FacilityId(1), p), (FacilityId(1), p)],
        );
        assert!(err.is_err());
    }

    #[test]
    fn closest_n_ties_and_radius() {
        let c = pt(35.0, -79.0);
        // 7 and 3 are mirror images across the centroid meridian: equal distance
        let facs = [
            (FacilityId(7), pt(35.0, -78.5)),
            (FacilityId(3), pt(35.0, -79.5)),
            (FacilityId(5), pt(35.0, -90.0)),
        ];
        let m = DistanceMatrix::build(Category::Nh, &[(CountyId(1), c)], &facs).unwrap();
        assert_eq!(m.closest_n(CountyId(1), 1, 200.0).unwrap(), vec![FacilityId(3)]);
        // facility 5 is ~620 mi away, outside 200 mi
        assert_eq!(
            m.closest_n(CountyId(1), 10, 200.0).unwrap(),
            vec![FacilityId(3), FacilityId(7)]
        );
        assert!(m.closest_n(CountyId(2), 1, 200.0).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let counties = [(CountyId(1), pt(35.0, -79.0)), (CountyId(3), pt(36.0, -80.0))];
        let facs = [(FacilityId(1), pt(35.5, -79.5)), (FacilityId(2), pt(34.5, -78.0))];
        let m = DistanceMatrix::build(Category::Ltach, &counties, &facs).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"county_id,facility_id,miles\n"));
        let back = DistanceMatrix::read_csv(Category::Ltach, buf.as_slice()).unwrap();
        for (c, _) in counties {
            for (f, _) in facs {
                assert_eq!(back.get(c, f), m.get(c, f));
            }
        }
    }

    #[test]
    fn partial_grid_rejected() {
        let csv = "county_id,facility_id,miles\n1,1,3.0\n1,2,4.0\n2,1,5.0\n";
        assert!(DistanceMatrix::read_csv(Category::Nh, csv.as_bytes()).is_err());
        let bad_header = "county,facility,miles\n1,1,3.0\n";
        assert!(DistanceMatrix::read_csv(Category::Nh, bad_header.as_bytes()).is_err());
    }

    fn arb_point() -> impl Strategy<Value = GeoPoint> {
        (-89.0f64..89.0, -179.0f64..179.0).prop_map(|(a, b)| GeoPoint::new(a, b).unwrap())
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(x in arb_point(), y in arb_point(), z in arb_point()) {
            prop_assert_eq!(great_circle_miles(x, x), 0.0);
            let dxy = great_circle_miles(x, y);
            prop_assert!((dxy - great_circle_miles(y, x)).abs() < 1e-9);
            prop_assert!(great_circle_miles(x, z) <= dxy + great_circle_miles(y, z) + 1e-6);
        }

        #[test]
        fn closest_n_is_prefix_closed_and_in_radius(
            county in arb_point(),
            facs in proptest::collection::vec(arb_point(), 1..30),
            n in 1usize..20,
            radius in 100.0f64..5000.0,
        ) {
            let facs: Vec<_> = facs.into_iter().enumerate().map(|(i, p)| (FacilityId(i as u32), p)).collect();
            let m = DistanceMatrix::build(Category::Nh, &[(CountyId(1), county)], &facs).unwrap();
            let a = m.closest_n(CountyId(1), n, radius).unwrap();
            let b = m.closest_n(CountyId(1), n + 1, radius).unwrap();
            prop_assert_eq!(&b[..a.len()], &a[..]);
            for f in &b {
                prop_assert!(m.get(CountyId(1), *f).unwrap() <= radius);
            }
            // brute-force oracle: full sort of the row
            let mut all: Vec<(f64, FacilityId)> = facs.iter().map(|(id, p)| (great_circle_miles(county, *p), *id)).collect();
            all.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            let expect: Vec<FacilityId> = all.into_iter().filter(|(d, _)| *d <= radius).take(n).map(|(_, id)| id).collect();
            prop_assert_eq!(a, expect);
        }
    }
}
