//! Compiles and runs every snippet of the guide as a doc-test.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/classical.md")]
pub mod classical {}
#[doc = include_str!("../../../book/src/quantum.md")]
pub mod quantum {}
#[doc = include_str!("../../../book/src/rotator.md")]
pub mod rotator {}
#[doc = include_str!("../../../book/src/dephasing.md")]
pub mod dephasing {}
#[doc = include_str!("../../../book/src/wigner.md")]
pub mod wigner {}
#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}
