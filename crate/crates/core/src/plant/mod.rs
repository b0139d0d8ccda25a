//! Plant and controller models, the control-affine reduction and the benchmark catalog.

mod catalog;
mod load;
mod model;

pub use catalog::{benchmark_catalog, catalog_entry, catalog_source, heater_plant, suite_ids, CATALOG_SIZE};
pub use load::{load_model, model_to_json, Model, ModelDefaults, ReferenceRow, PhiPolicy, Plant, TemplateSpec};
pub use model::{affine_to_switched, ControlAffinePlant, Mode, SpecKind, StabilitySpec, SwitchedPlant};
