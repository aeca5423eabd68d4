#![allow(dead_code)]

pub mod toy;
pub mod props;
