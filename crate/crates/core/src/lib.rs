//! Seeded, discrete-time agent-based simulation of patient movement among
//! short-term acute care hospitals (STACH), long-term acute care hospitals
//! (LTACH), nursing homes (NH) and the community.
//!
//! The crate is organised by subsystem:
//!
//! * [`geography`]: county-to-facility great-circle distance matrices.
//! * [`population`]: synthetic population expansion, agent sampling, comorbidities.
//! * [`network`]: facility nodes, bed scaling and occupancy.
//! * [`los`]: length-of-stay fitting, sampling and aged remaining-LOS distributions.
//! * [`transitions`]: the tables computed once at initiation from scenario inputs.
//! * [`engine`]: initialization and the daily action loop.
//! * [`validation`]: LOS, census and flow pattern reports.
//! * [`scenario`]: file formats, parameters, the synthetic scenario generator.
//! * [`cli`]: the `patientflow` command line driver.

pub mod cli;
pub mod engine;
pub mod error;
pub mod geography;
pub mod ids;
pub mod los;
pub mod network;
pub mod population;
pub mod rng;
pub mod scenario;
pub mod transitions;
pub mod validation;

pub use error::{Error, Result};
pub use ids::{AgeGroup, AgentId, BedType, Category, CountyId, FacilityId, Location};
