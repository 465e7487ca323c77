//! The guide under `book/`, one module per chapter so its listings run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/networks.md")]
pub mod networks {}
#[doc = include_str!("../../../book/src/dnm.md")]
pub mod dnm_models {}
#[doc = include_str!("../../../book/src/forecasting.md")]
pub mod forecasting {}
#[doc = include_str!("../../../book/src/adaptation.md")]
pub mod adaptation {}
#[doc = include_str!("../../../book/src/learning.md")]
pub mod learning {}
#[doc = include_str!("../../../book/src/preprocessing.md")]
pub mod preprocessing {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
