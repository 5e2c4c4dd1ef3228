//! Schema-tagged tables and the preprocessing that turns them into numeric
//! matrices.

mod filter;
mod pca;
mod preprocess;
mod schema;
mod table;

pub use filter::{Clause, Comparator, FilterCondition};
pub use pca::PcaModel;
pub use preprocess::{ColumnTransform, Preprocessor};
pub use schema::{ColumnKind, ColumnRole, ColumnSchema, Schema};
pub use table::{concatenate, load_csv, LoadReport, SplitSpec, Table, Value};
