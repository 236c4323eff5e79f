#![allow(dead_code)]

pub mod bpe_oracle;
pub mod eigen3;
pub mod tanimoto_oracle;
pub mod gradchecks;
pub mod cloud;
