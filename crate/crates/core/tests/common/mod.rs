#![allow(dead_code)]
pub mod hankel;
pub mod instance;
