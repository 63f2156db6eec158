//! Numerical core for gauge flow models.
//!
//! A gauge flow model augments a learned velocity field `v_theta(x, t)` with a
//! correction `-alpha(t) * (sum_mu d^mu A_mu(x, t)) v_nu(x, t)`, where
//! `A_mu` takes values in so(N). This crate carries everything needed to
//! build, train and analyse such models in pure `no_std + alloc` Rust:
//!
//! - [`nn`]: dense MLPs with hand-written reverse mode, SiLU, Adam.
//! - [`rng`]: the splitmix64 stream every dataset and initialization uses.
//! - [`gauge`]: so(N) basis, decoding, contractions and curvature diagnostics.
//! - [`flow`]: the model kinds, velocity assembly and ODE integration.
//! - [`gmm`]: the Gaussian-mixture benchmark.
//! - [`fm`]: conditional flow matching loss, training and the marginal oracle.
//!
//! File formats, the benchmark harness and the CLI live in the `gaugeflow`
//! crate.
#![no_std]

extern crate alloc;

mod error;
pub mod flow;
pub mod fm;
pub mod gauge;
pub mod gmm;
mod math;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};
pub use flow::{FlowModel, GaugeFlowModel, ModelKind, PlainFlowModel, TrainableField, VelocityField};
pub use rng::Prng;
