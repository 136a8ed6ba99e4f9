//! Training laboratory for class-imbalanced classification.
//!
//! The crate provides, end to end:
//!
//! - a minimal dense numeric kernel ([`tensor`]) with numerically stable
//!   softmax and log-softmax,
//! - the training objectives ([`losses`]): cross entropy, complement
//!   entropy and its balanced/modulated variants, complement cross
//!   entropy, and focal loss — each with hand-derived analytic gradients
//!   with respect to logits,
//! - confusion-matrix based evaluation ([`metrics`]) with balanced
//!   accuracy,
//! - long-tailed / step imbalance construction ([`imbalance`]),
//! - dataset generation and ingestion ([`data`]): synthetic blobs,
//!   IDX image files, labeled CSV,
//! - a from-scratch multilayer perceptron with SGD + momentum and a
//!   warm-up / step-decay schedule ([`model`], [`optim`]),
//! - an experiment harness ([`harness`]) driving the four training
//!   regimes (plain cross entropy, focal loss, bi-objective complement
//!   training, single-pass complement cross entropy), gamma sweeps,
//!   and result persistence.
//!
//! Hot kernels are data-parallel over rows when the `parallel` feature
//! (default) is enabled. Reductions keep a fixed order, so results are
//! bit-identical with parallelism on or off and for any thread count.

pub mod data;
pub mod error;
pub mod gradcheck;
pub mod harness;
pub mod imbalance;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{Matrix, OneHotBatch, ProbBatch};
