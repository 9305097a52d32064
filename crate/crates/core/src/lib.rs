//! Cyclic mutually unbiased bases for qubit systems, built from symplectic
//! stabilizer matrices over GF(2).

pub mod gf2core;
pub mod fibpoly;
pub mod stabsearch;
pub mod mubgen;
pub mod entclass;
pub mod qcompile;
pub mod qpke;
pub mod selftest;
pub mod cli;
