//! Bell nonlocality with collective spin measurements.
//!
//! Two parts share the spin algebra in [`spin`]:
//!
//! * first-moment Bell expressions on `N + N` spin-1/2 particles: local bounds
//!   ([`local`]), quantum values from the Bell operator ([`bell`]), settings
//!   optimization and random scans ([`search`]), and catalogs of inequalities
//!   in table form ([`catalog`]);
//! * a one-axis-twisted ensemble split on a beam splitter ([`squeeze`]) and
//!   measured with parity binning to test CHSH ([`parity`]).

pub mod bell;
pub mod catalog;
pub mod error;
pub mod local;
pub mod optimize;
pub mod parity;
pub mod search;
pub mod spin;
pub mod squeeze;

pub use catalog::{parse_catalog, to_normalized, verify_entry, CatalogEntry};
pub use bell::{assemble_wv, bell_operator, quantum_value, witness_value, BellInequality, MeasurementSettings, WvDecomposition};
pub use error::{Error, Result};
pub use local::{local_bound, violation_gap, DeterministicStrategy, LocalBound};
pub use optimize::SearchConfig;
pub use search::{monotonicity_check, optimize_settings, random_inequality, scan_random, ScanReport};
pub use spin::{direction_operator, spin_components, wigner_rotation, Direction, HermitianMatrix, SpinSector};
pub use parity::{chsh_value, joint_distribution, optimize_chsh, parity_correlator, ChshResult, ChshSettings, JointDistribution};
pub use squeeze::{ghz_overlap, one_axis_twisted, split_state, wineland_xi2, DickeState, SplitState};
