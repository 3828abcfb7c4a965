//! Compiler and verifier core for the boolean, positional and prefix-sum
//! RASP dialects: parsing and typing, a reference interpreter, finite
//! transducers, program transformations and an exact average-hard-attention
//! transformer backend.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod aha;
pub mod emit;
pub mod fst;
pub mod interp;
pub mod lang;
pub mod lower;
