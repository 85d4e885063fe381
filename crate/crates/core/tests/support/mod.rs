#![allow(dead_code)]

pub mod brute;
pub mod gen;
pub mod mcdc;
