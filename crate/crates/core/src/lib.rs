//! Numerical experiments on the group `C*`-algebra of the Heisenberg motion
//! groups `G_n = 𝕋ⁿ ⋉ ℍ_n`, through its Fourier transform.
//!
//! The modules follow the pipeline: [`special`] and [`quad`] provide Bessel
//! functions, stable coefficients and radial quadrature; [`testfn`] holds
//! test functions; [`fock`] and [`reps`] turn them into matrices over the
//! spectrum; [`control`] measures norm-controlled limits along sequences;
//! [`orbits`] classifies limits of orbit sequences; [`strata`] handles
//! tensor products and sampled operator fields; [`cli`] runs experiments.

pub mod cli;
pub mod control;
pub mod error;
pub mod fock;
pub mod orbits;
pub mod quad;
pub mod reps;
pub mod special;
pub mod strata;
pub mod testfn;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/test-functions.md")]
    mod test_functions {}
    #[doc = include_str!("../../../book/src/representations.md")]
    mod representations {}
    #[doc = include_str!("../../../book/src/sequences.md")]
    mod sequences {}
    #[doc = include_str!("../../../book/src/orbits.md")]
    mod orbits {}
    #[doc = include_str!("../../../book/src/tensors.md")]
    mod tensors {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
