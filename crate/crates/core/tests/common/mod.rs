//! Random catalogs, formulas and queries shared by the property suites.

#![allow(unused_imports)]

pub use orbitprio_oracles::random::*;
