//! Soil electrical properties: closed-form frequency models, Debye
//! fitting, layered-earth resistivity soundings, and depth of
//! investigation.

pub mod apparent;
pub mod array;
pub mod doi;
pub mod fit;
pub mod layered;
pub mod models;

pub use apparent::{apparent_from_vi, ApparentRow};
pub use array::ElectrodeArray;
pub use doi::{depth_of_investigation, DoiMethod};
pub use fit::{fit_debye, DebyeFit, FitOptions, SoilSample, SoilSampleSet};
pub use layered::{Layer, LayeredEarth};
pub use models::{SoilModel, SoilProperties};
