use crate::exec::Exec;

pub const DEFAULT_DEPTH: usize = 8;
pub const DEFAULT_SCALAR_RANGE: u64 = 8;
pub const DEFAULT_ELEMENT_CAP: usize = 256;

/// Search and evaluation bounds shared by every phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Maximum derivation height, counting the root.
    pub depth: usize,
    /// Normalization step budget.
    pub fuel: usize,
    /// ℕ scalars are checked over `0..=scalar_range`, ℤ over `-k..=k`.
    pub scalar_range: u64,
    /// Largest derived carrier that may be built.
    pub element_cap: usize,
    pub exec: Exec,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            depth: DEFAULT_DEPTH,
            fuel: crate::kernel::DEFAULT_FUEL,
            scalar_range: DEFAULT_SCALAR_RANGE,
            element_cap: DEFAULT_ELEMENT_CAP,
            exec: Exec::default(),
        }
    }
}

impl Limits {
    pub fn with_exec(self, exec: Exec) -> Self {
        Limits { exec, ..self }
    }

    pub fn with_depth(self, depth: usize) -> Self {
        Limits { depth, ..self }
    }
}
