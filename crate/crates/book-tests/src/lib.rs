// SPDX-License-Identifier: Apache-2.0

//! Runs the code blocks of the guide in `book/` as doc tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod ch00_introduction {}

#[doc = include_str!("../../../book/src/graphs.md")]
pub mod ch01_graphs {}

#[doc = include_str!("../../../book/src/privacy.md")]
pub mod ch02_privacy {}

#[doc = include_str!("../../../book/src/kcore.md")]
pub mod ch03_kcore {}

#[doc = include_str!("../../../book/src/triangles.md")]
pub mod ch04_triangles {}

#[doc = include_str!("../../../book/src/runtime.md")]
pub mod ch05_runtime {}

#[doc = include_str!("../../../book/src/baselines.md")]
pub mod ch06_baselines {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod ch07_experiments {}

#[doc = include_str!("../../../book/src/datasets.md")]
pub mod ch08_datasets {}
