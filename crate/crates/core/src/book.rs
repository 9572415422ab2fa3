//! Guide chapters compiled as doc-tests so their snippets stay in sync.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/robust-statistics.md")]
pub mod robust_statistics {}
#[doc = include_str!("../../../book/src/clustering.md")]
pub mod clustering {}
#[doc = include_str!("../../../book/src/purification.md")]
pub mod purification {}
#[doc = include_str!("../../../book/src/tuning.md")]
pub mod tuning {}
#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../../book/src/formats.md")]
pub mod formats {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
