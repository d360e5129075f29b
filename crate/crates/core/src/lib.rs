//! Intrusion detection for quantum-polarization ghost imaging.

pub mod detection;
pub mod error;
pub mod ghostsim;
pub mod optimize;
pub mod pnm;
pub mod polarization;
pub mod raster;

pub use error::{BellLabel, Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/states.md")]
    mod states {}
    #[doc = include_str!("../../../book/src/detection.md")]
    mod detection {}
    #[doc = include_str!("../../../book/src/jamming.md")]
    mod jamming {}
    #[doc = include_str!("../../../book/src/imaging.md")]
    mod imaging {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
