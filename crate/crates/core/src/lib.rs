//! Four-chamber suction cup haptic search.
//!
//! The cup reads one vacuum pressure per chamber. [`controller`] turns those
//! readings and the axial force into a tool-frame motion increment.
//! [`cupmodel`] and [`pneumatics`] stand in for the physical cup: a rigid lip
//! ray-cast against analytic scenes feeds a lumped conductance network.
//! [`characterize`] and [`binpick`] drive the closed loop through the
//! calibration sweeps and the bin-picking protocol.
//!
//! Units are SI throughout: metres, radians, pascals, newtons, seconds.
//! Vacuum pressure is atmospheric minus absolute, so larger means stronger
//! suction.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod binpick;
pub mod characterize;
pub mod controller;
pub mod cupmodel;
mod error;
pub mod math;
pub mod pneumatics;
pub mod rngs;
pub mod se3;

pub use error::{Error, Result};
