//! Identifier newtypes and small domain enums shared by every module.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// County identifier. Treated as opaque; FIPS codes are typical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CountyId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FacilityId(pub u32);

/// Dense agent identifier, assigned from 0 in sampling order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl AgentId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for CountyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for FacilityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Age bins: `<50`, `50-64`, `65+`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum AgeGroup {
    Under50 = 0,
    From50To64 = 1,
    Over65 = 2,
}

impl AgeGroup {
    pub const ALL: [AgeGroup; 3] = [AgeGroup::Under50, AgeGroup::From50To64, AgeGroup::Over65];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl From<AgeGroup> for u8 {
    fn from(g: AgeGroup) -> u8 {
        g as u8
    }
}

impl TryFrom<u8> for AgeGroup {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        AgeGroup::from_index(v as usize).ok_or_else(|| format!("age group must be 0, 1 or 2, got {v}"))
    }
}

/// The four location types. The discriminant doubles as the row/column
/// index of four-by-four movement matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Community = 0,
    Stach = 1,
    Ltach = 2,
    Nh = 3,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::Community, Category::Stach, Category::Ltach, Category::Nh];
    pub const FACILITIES: [Category; 3] = [Category::Stach, Category::Ltach, Category::Nh];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Category::Community => "community",
            Category::Stach => "stach",
            Category::Ltach => "ltach",
            Category::Nh => "nh",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "community" => Ok(Category::Community),
            "stach" | "hospital" => Ok(Category::Stach),
            "ltach" => Ok(Category::Ltach),
            "nh" | "nursing_home" => Ok(Category::Nh),
            other => Err(Error::input(format!("unknown location category '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BedType {
    Icu,
    NonIcu,
}

impl BedType {
    pub fn other(self) -> BedType {
        match self {
            BedType::Icu => BedType::NonIcu,
            BedType::NonIcu => BedType::Icu,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BedType::Icu => "icu",
            BedType::NonIcu => "nonicu",
        }
    }
}

/// Where an agent is right now.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Location {
    Community,
    Facility(FacilityId),
}

impl Location {
    pub fn facility(self) -> Option<FacilityId> {
        match self {
            Location::Community => None,
            Location::Facility(id) => Some(id),
        }
    }

    pub fn is_community(self) -> bool {
        matches!(self, Location::Community)
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Community => f.write_str("community"),
            Location::Facility(id) => write!(f, "{id}"),
        }
    }
}
