/// Outcome of comparing two clocks, read as "the left clock is ... the right one".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CausalVerdict {
    StrictlyAfter,
    /// Also used for "equal".
    AfterOrEqual,
    StrictlyBefore,
    BeforeOrEqual,
    Concurrent,
    /// The clocks share no comparable depth interval.
    Indeterminate,
}

impl CausalVerdict {
    /// The same relation seen from the other side.
    pub fn flip(self) -> Self {
        use CausalVerdict::*;
        match self {
            StrictlyAfter => StrictlyBefore,
            StrictlyBefore => StrictlyAfter,
            AfterOrEqual => BeforeOrEqual,
            BeforeOrEqual => AfterOrEqual,
            other => other,
        }
    }

    /// Left may causally depend on right.
    pub fn is_after(self) -> bool {
        matches!(self, Self::StrictlyAfter | Self::AfterOrEqual)
    }

    pub fn is_before(self) -> bool {
        matches!(self, Self::StrictlyBefore | Self::BeforeOrEqual)
    }

    pub fn is_causal(self) -> bool {
        self.is_after() || self.is_before()
    }
}
