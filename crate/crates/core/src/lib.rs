//! Strong-coupling polaron and bipolaron toolkit.

// `!(x > 0.0)` is how argument checks reject NaN along with the bad range
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod banded;
pub mod coherent;
pub mod ecg;
pub mod error;
pub mod fock;
pub mod gross;
pub mod pekar;
pub mod quadrature;
pub mod radial;
pub mod simplex;
pub mod special;

pub use error::{Error, Result};

// Run the guide's snippets as doctests so the book cannot drift from the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/pekar.md")]
    mod pekar {}
    #[doc = include_str!("../../../book/src/bipolaron.md")]
    mod bipolaron {}
    #[doc = include_str!("../../../book/src/coherent.md")]
    mod coherent {}
    #[doc = include_str!("../../../book/src/gross.md")]
    mod gross {}
    #[doc = include_str!("../../../book/src/fock.md")]
    mod fock {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
