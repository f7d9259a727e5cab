//! Compiles the guide's code blocks as doctests, one module per chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/register.md")]
pub mod register {}

#[doc = include_str!("../../../book/src/sampling.md")]
pub mod sampling {}

#[doc = include_str!("../../../book/src/propagation.md")]
pub mod propagation {}

#[doc = include_str!("../../../book/src/errors.md")]
pub mod errors {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
