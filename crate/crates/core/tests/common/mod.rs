#![allow(dead_code)]

pub mod fourier_motzkin;
pub mod props;
pub mod systems;
