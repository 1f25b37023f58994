pub mod agents;
pub mod data;
pub mod envs;
pub mod experiment;
pub mod harness;
pub mod neural;
pub mod report;

/// Random number generator used for every stream in a simulation.
pub type SimRng = rand_chacha::ChaCha8Rng;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/concrete-dropout.md")]
    mod concrete_dropout {}
    #[doc = include_str!("../../../book/src/thompson-sampling.md")]
    mod thompson_sampling {}
    #[doc = include_str!("../../../book/src/environments.md")]
    mod environments {}
    #[doc = include_str!("../../../book/src/agents.md")]
    mod agents {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/results.md")]
    mod results {}
}
