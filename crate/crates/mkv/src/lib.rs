//! Numerical toolkit for stable-driven McKean-Vlasov SDEs with
//! Besov-distributional interaction kernels: well-posedness thresholds,
//! mild (Duhamel) solutions of the associated nonlinear Fokker-Planck
//! equation, thermic Besov norms, singular model kernels (Burgers,
//! 2-D vortex, Keller-Segel) and a mean-field particle simulator.

pub mod besov;
pub mod conditions;
pub mod config;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod particles;
pub mod runner;
pub mod solver;
pub mod spectral;
pub mod stable;

pub use error::{Error, Result};
