pub mod cli;
pub mod degeneration;
pub mod error;
pub mod exact;
pub mod exec;
pub mod expint;
pub mod hfun;
pub mod lp;
pub mod minimize;
pub mod oracle;
pub mod poly;
pub mod polytope;
pub mod presets;
pub mod rootsys;
pub mod testconfig;

pub use error::{Error, Result};
