//! Detection of oriented boxes in synthetic LiDAR point-cloud videos.
//!
//! The crate is organized around the data path: a deterministic scene
//! simulator produces sweep sequences ([`sim`]); merged keyframes are
//! quantized into pillar grids and encoded per grid ([`grid`]); a k-NN
//! message passing network refines grid features ([`gmp`]) before they are
//! scattered to a bird's-eye-view map and run through a small convolutional
//! backbone ([`backbone`]); a recurrent aggregator with spatial and temporal
//! attention fuses keyframes over time ([`astgru`]); an anchor-free center
//! head emits oriented boxes ([`head`]) scored by center-distance average
//! precision ([`eval`]). Everything learnable is built on the reverse-mode
//! [`tensor`] module. [`model`], [`train`] and [`config`] tie the pieces into
//! trainable variants behind the `pcvd` command line.

pub mod astgru;
pub mod backbone;
pub mod config;
pub mod error;
pub mod eval;
pub mod gmp;
pub mod grid;
pub mod head;
pub mod model;
pub mod par;
pub mod sim;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use tensor::{Tape, Tensor};
