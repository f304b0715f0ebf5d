use crate::qstate::DEFAULT_DIM_CAP;
use crate::transforms::FourierPath;

/// Largest group order for which [`VerifyLevel::Auto`] runs the O(m^2)
/// intermediate-state checks.
pub const AUTO_VERIFY_MAX_ORDER: u64 = 64;

/// Default cap on chi preparation rounds.
pub const DEFAULT_RETRY_CAP: usize = 10_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum VerifyLevel {
    #[default]
    Auto,
    Always,
    Never,
}

impl VerifyLevel {
    pub fn enabled(self, order: u64) -> bool {
        match self {
            VerifyLevel::Auto => order <= AUTO_VERIFY_MAX_ORDER,
            VerifyLevel::Always => true,
            VerifyLevel::Never => false,
        }
    }
}

/// Knobs shared by chi preparation and the logarithm runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimOptions {
    pub dim_cap: usize,
    pub fourier: FourierPath,
    pub verify: VerifyLevel,
    pub retry_cap: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            dim_cap: DEFAULT_DIM_CAP,
            fourier: FourierPath::Dense,
            verify: VerifyLevel::Auto,
            retry_cap: DEFAULT_RETRY_CAP,
        }
    }
}
