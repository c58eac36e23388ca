//! Violent-event dataset construction from OCR'd news articles.
//!
//! The crate covers the whole batch pipeline: corpus ingestion and length
//! pre-screening ([`corpus`]), LLM featurization and inclusion filters
//! ([`extraction`]), geocoding ([`geocode`]), near-duplicate clustering
//! ([`dedup`]), linkage against a reference event dataset ([`linkage`]),
//! department-year fixed-effects regressions ([`regress`]) and the stage
//! orchestrator with its artifacts and exports ([`pipeline`]).
//!
//! Numeric kernels are generic over [`num::Scalar`]; the aliases below fix
//! the scalar to `f64` (or `f32`) for everyday use.

pub mod corpus;
pub mod dedup;
pub mod digest;
pub mod error;
pub mod event;
pub mod extraction;
pub mod geocode;
pub mod linkage;
pub mod num;
pub mod pipeline;
pub mod regress;
pub mod synth;
pub mod text;

pub use error::{Error, Result};

/// Double-precision design matrix.
pub type Matrix = regress::Matrix<f64>;
/// Single-precision design matrix.
pub type Matrix32 = regress::Matrix<f32>;
pub type OlsFit = regress::OlsFit<f64>;
pub type OlsFit32 = regress::OlsFit<f32>;
pub type Design = regress::Design<f64>;
pub type Design32 = regress::Design<f32>;

/// [`dedup::shingle_tfidf_cosine`] in `f64`.
pub fn text_similarity(a: &str, b: &str, n: usize) -> f64 {
    dedup::shingle_tfidf_cosine(a, b, n)
}

/// [`geocode::haversine_km`] in `f64`.
pub fn distance_km(lat_a: f64, lon_a: f64, lat_b: f64, lon_b: f64) -> f64 {
    geocode::haversine_km(lat_a, lon_a, lat_b, lon_b)
}
