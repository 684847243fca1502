//! Fall detection over wearable accelerometer streams.
//!
//! Samples are grouped into fixed-size windows, summarised as 58 statistical
//! features, min-max scaled, and classified by a small multilayer
//! perceptron. The same path serves offline datasets and live sockets, so a
//! replayed trial yields exactly the probabilities of batch evaluation.

pub mod error;
pub mod features;
pub mod ingest;
pub mod model;
pub mod stream;
pub mod windowing;

pub use error::{Error, Result};
