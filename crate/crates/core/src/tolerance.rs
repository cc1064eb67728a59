use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by every check in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Generic "equals zero" threshold for identities and residuals.
    pub num: f64,
    /// Threshold on `c(a, a)` for Aubry membership and on `A(x,y) + c(y,x)` for `D`.
    pub aubry: f64,
    /// Allowed gap between optimal values of linear programs.
    pub dual: f64,
    /// Mass below which a coupling entry is treated as zero.
    pub mass: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            num: 1e-9,
            aubry: 1e-7,
            dual: 1e-7,
            mass: 1e-12,
        }
    }
}
