//! Validate a calculation implementation against spreadsheet calculation
//! specifications.
//!
//! A calculation specification is a workbook whose formulas define how
//! outputs follow from inputs. This crate
//!
//! 1. extracts a schema of the workbook's input and output fields
//!    ([`schema`]),
//! 2. collects a policy's input values and the system's output values
//!    through pluggable data sources ([`sources`]),
//! 3. fills the inputs into a copy of the workbook, recomputes it with its
//!    own formula engine ([`formula`]) and compares the outputs, writing
//!    evidence with mismatches highlighted ([`validate`]),
//! 4. runs many policies against many workbooks in bulk ([`batch`]).

pub mod address;
pub mod batch;
pub mod cli;
pub mod format;
pub mod formula;
pub mod round;
pub mod schema;
pub mod sources;
pub mod validate;
pub mod value;
pub mod workbook;

pub use address::{a1_to_address, address_to_a1, CellAddress};
pub use format::Format;
pub use value::{CellValue, ErrorCode};
pub use workbook::{load_workbook, save_workbook, Workbook};
pub use batch::{run_batch, BatchManifest, BatchSummary};
pub use schema::{generate_schema, SchemaOptions};
pub use sources::DataSources;
pub use validate::{validate_policy, Status, Template, ValidateOptions};
