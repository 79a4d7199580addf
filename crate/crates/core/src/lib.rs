pub mod catalog;
pub mod census;
pub mod exact;
pub mod homology;
pub mod index;
pub mod jump;

pub use catalog::{CatalogError, CrossRow};
pub use census::{CensusConfig, CensusError, CensusReport, Mode, OrbitDataset, Verdict};
pub use exact::{ExactError, ExactReal, RadicalSum};
pub use homology::{HomologyError, Monotonicity, PrequantSpec};
pub use index::{IndexError, IterateEntry, IterateIndexTable, OrbitModel};
pub use jump::{JumpCertificate, JumpError, JumpParams, JumpRequest, Side, Sides};
