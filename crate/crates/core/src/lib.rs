//! Classical and quantum leveled branching programs: exact simulators,
//! fingerprinting builders, (xor-)reordering, commutative compilation,
//! pointer-jumping k-layer programs and an exact minimal-width oracle.

pub mod bp;
pub mod check;
pub mod commutative;
pub mod error;
pub mod fingerprint;
pub mod functions;
pub mod harness;
pub mod linalg;
pub mod order;
pub mod qobdd;
pub mod reorder;
pub mod width;

pub use bp::{KLayerProgram, Kind, LeveledProgram, Transition};
pub use check::{Acceptor, InputSelection, Mode, Verdict};
pub use error::{Error, Result};
pub use fingerprint::{FingerprintParams, LinearForm};
pub use functions::BooleanFunction;
pub use order::Order;
pub use qobdd::QuantumProgram;
pub use reorder::{AddressMode, ReorderLayout};
pub use width::WidthProfile;
