pub mod analysis;
pub mod dataset;
pub mod error;
pub mod exchange;
pub mod model;
pub mod oracle;
pub mod params;
pub mod sampler;
pub mod space;
pub mod state;
pub mod stats;
pub mod verify;
