pub mod canonical;
pub mod codecs;
pub mod geometry;
pub mod metrics;
pub mod qa;
pub mod s3ft;
pub mod scene;
pub mod scenegen;
