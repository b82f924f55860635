//! Complex Pearson correlators for non-Hermitian observables, the bounds they
//! obey, and the numerical machinery used to probe those bounds.

pub mod bounds;
pub mod certify;
pub mod correlator;
pub mod error;
pub mod observables;
pub mod operator;
pub mod optimize;
pub mod state;
pub mod tables;
pub mod weakmeas;

pub use bounds::{BoundReport, Side};
pub use correlator::{CorrelationReport, DEFAULT_EPSILON};
pub use error::{Error, Result};
pub use observables::{ObservableSet, ParafermionObservables};
pub use operator::Operator;
pub use state::{AmplitudePairs, QuantumState};
