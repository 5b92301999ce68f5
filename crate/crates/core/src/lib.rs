//! Data-driven state observers for discrete-time descriptor systems.
//!
//! Observer gains are computed from one recorded experiment `(u, x, y)`
//! without identifying `(E, A, B, C)`. There are three observer variants:
//! standard, unknown-input and extended-state.
//!
//! ```no_run
//! use deso::data::{DataMatrices, DataRecord};
//! use deso::synthesis::synthesize_observer;
//!
//! let rec = DataRecord::read_csv("dataset.csv")?;
//! let syn = synthesize_observer(&DataMatrices::from_record(&rec), &Default::default())?;
//! if let Some(gains) = syn.gains {
//!     println!("A_O =\n{:.4}", gains.a_o);
//! }
//! # Ok::<(), deso::Error>(())
//! ```

pub mod data;
pub mod descriptor;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod plants;
pub mod runtime;
pub mod synthesis;
pub mod validation;

pub use error::{Error, Result};
pub use linalg::{Mat, Tolerances};
