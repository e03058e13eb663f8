//! Shared inputs for the criterion benches.

use mucert::constellation::{build_system, ConstellationSpec, PolynomialSystem};

/// The four-vector qubit system `{1,1,1,1}_2`.
pub fn qubit_system() -> PolynomialSystem {
    build_system(&qubit_spec())
}

pub fn qubit_spec() -> ConstellationSpec {
    ConstellationSpec::parse(2, "1,1,1,1").expect("valid spec")
}
