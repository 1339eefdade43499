//! Real-time quantum correlation functions of one-dimensional systems from
//! path-integral effective potentials, with centroid dynamics and an exact
//! eigensolver for reference.

pub mod cmd;
pub mod effpot;
pub mod epac;
pub mod error;
pub mod io;
pub mod model;
pub mod oracle;
pub mod pimd;
pub mod polynomial;
pub mod registry;
pub mod series;
pub mod spectra;
pub mod stats;

pub use error::{Error, Result};
pub use model::{PotentialSpec, SystemParams};
pub use series::{CorrelationSeries, LineKind, SeriesKind, SpectralLine, SpectralLines};
