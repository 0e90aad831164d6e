//! Scenario files, the example registry and the end-to-end runner.

pub mod registry;
pub mod run;
pub mod sampling;
pub mod scenario;

pub use registry::{example_scenario, list_examples, ExampleInfo, RegistryError};
pub use run::{grid_dump, run, run_example, ReconstructMode, RunError, RunOptions, RunReport};
pub use sampling::{held_out_seed, sample_points, sample_with, SamplingExhausted};
pub use scenario::{load_scenario, Scenario, ScenarioError, ScenarioSpec};
