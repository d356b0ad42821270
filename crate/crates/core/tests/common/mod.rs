#![allow(dead_code)]

pub mod chem;
pub mod corpus;
pub mod orbitals;
pub mod toys;
pub mod trees;
