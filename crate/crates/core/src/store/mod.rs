//! Chunked columnar storage: packed or run-length code vectors in IMCUs with
//! zone maps, predicate scans, and DML.

pub mod bitpack;
pub mod imcu;
pub mod predicate;
pub mod rle;
pub mod table;

pub use bitpack::PackedVector;
pub use imcu::{Encoding, Imcu, ZoneMap, IMCU_ROWS, MAX_IMCU_BIT_WIDTH};
pub use predicate::{parse_predicate, Predicate};
pub use rle::RleVector;
pub use table::{Column, ColumnStorage, ColumnTable, ScanOptions, ScanResult, ScanStats, Schema};
