//! Extended geometry-based stochastic channel model: drop-based channel
//! generation with sensing targets, XL-MIMO arrays, RIS panels and
//! frequency-dependent sparsity.

pub mod antenna;
pub mod channel;
pub mod config;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod isac;
pub mod metrics;
pub mod node;
pub mod output;
pub mod polarization;
pub mod random;
pub mod ris;
pub mod scenario;
pub mod sparsity;
pub mod xlmimo;

pub use channel::{ChannelRealization, DelayMode, ExtensionSet, PropagationPath};
pub use config::{load_config, ConfigError, ScenarioConfig};
pub use engine::{run_drop, DropOutput, PreparedScenario};
pub use error::{Error, Result};
pub use geometry::{DirectionPair, Position3};
pub use random::SeedTree;
