//! Simulation toolkit for bivariate bicycle codes distributed across several
//! QPUs: code construction, column partitioning, depth-8 syndrome extraction
//! with elevated-rate nonlocal CNOTs, detector-model compilation, BP+OSD
//! decoding, Monte Carlo estimation of logical error rates, and the quadratic
//! alpha-dependent logical-error ansatz.
//!
//! Floating-point code (the decoder and the ansatz fit) is generic over the
//! scalar type; the aliases at the bottom of this file fix it to `f64`.

pub mod ansatz;
pub mod circuit;
pub mod code;
pub mod decoder;
pub mod detector;
pub mod error;
pub mod experiment;
pub mod gf2;
pub mod montecarlo;
pub mod noise;
pub mod partition;
pub mod plot;

pub use error::{Error, Result};

/// Scalar type accepted by the floating-point layers (`f32` or `f64`).
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Copy
    + Default
    + std::fmt::Debug
    + std::fmt::Display
    + std::iter::Sum
    + Send
    + Sync
    + 'static
{
    fn lit(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("representable literal")
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type BpOsdDecoder = decoder::BpOsdDecoder<f64>;
pub type DecoderConfig = decoder::DecoderConfig<f64>;
pub type DecodeResult = decoder::DecodeResult<f64>;
pub type AnsatzParams = ansatz::AnsatzParams<f64>;
pub type FitResult = ansatz::FitResult<f64>;
pub type DataPoint = ansatz::DataPoint<f64>;
