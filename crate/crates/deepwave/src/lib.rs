//! Pseudospectral machinery for the modulation (wave-packet) approximation of
//! 3D deep-water waves: quaternion j-Fourier calculus, flat Hilbert/Riesz
//! multiplier operators and their multiscale expansions, the hyperbolic cubic
//! NLS envelope solver, closed-form wave-packet correctors through third
//! order, normal-form bilinear kernels with their resonance-denominator
//! bounds, and an order-by-order residual verification harness.

pub mod error;
pub mod quat;
pub mod grid;
pub mod fft;
pub mod cfield;
pub mod spectral;
pub mod serialize;
pub mod hnls;
pub mod multiscale;
pub mod wavepacket;
pub mod expansion;
pub mod normal_form;
pub mod verify;
pub mod config;
pub mod cli;

pub use error::{Error, Result};
