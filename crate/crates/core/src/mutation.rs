//! Deliberate defects that can be switched on in an [`crate::seqclass::Engine`]
//! or a verification run, to confirm that the property suite notices them.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mutation {
    /// The strong `ℓ_p` engine sums with exponent 1 instead of `p`.
    LpWrongExponent,
    /// The weak engine uses exponent `2p`.
    WeakWrongExponent,
    /// The Cohen engine constrains its functionals in weak `ℓ_p` instead of weak `ℓ_{p'}`.
    CohenDroppedConjugation,
    /// The mixed engine measures `x⁰` in weak `ℓ_q` instead of weak `ℓ_s`.
    MixedWrongExponent,
    /// Symmetrization sums over permutations without dividing by `n!`.
    SymmetrizeMissingDivisor,
    /// Functional extension of a polynomial divides by `(n+1)!` instead of `n+1`.
    ScalarExtendFactorialDivisor,
}

impl Mutation {
    pub const ALL: [Mutation; 6] = [
        Mutation::LpWrongExponent,
        Mutation::WeakWrongExponent,
        Mutation::CohenDroppedConjugation,
        Mutation::MixedWrongExponent,
        Mutation::SymmetrizeMissingDivisor,
        Mutation::ScalarExtendFactorialDivisor,
    ];
}

pub(crate) fn active(m: Option<Mutation>, which: Mutation) -> bool {
    m == Some(which)
}
