//! Self-organizing map toolkit: training, quality measures, per-neuron map
//! analyses, neuron clustering, sample collection, SVG rendering and a
//! benchmark harness.

pub mod analysis;
pub mod bench;
pub mod cli;
pub mod clustering;
pub mod data;
pub mod error;
pub mod grid;
pub mod render;
pub mod kernels;
mod linalg;
pub mod som;

pub use data::{BlobSpec, CsvOptions, Dataset, Scaler};
pub use error::{Result, SomError};
pub use grid::{GridTopology, NeuronCoord, PlanarPosition, TopologyKind};
pub use kernels::{FeatureDistance, NeighborhoodKernel, ScheduleKind, ScheduleState};
pub use som::{BmuResult, FitReport, PcaInit, SomModel, TrainConfig, UpdateMode};
