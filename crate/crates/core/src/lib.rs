pub mod baseline;
pub mod corpus;
pub mod exec;
pub mod metrics;
pub mod midi;
pub mod model;
pub mod nn;
pub mod score;
