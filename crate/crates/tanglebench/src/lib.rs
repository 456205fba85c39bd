//! tanglebench: an exact workbench for the diagram category of framed
//! tangles, the BMW algebra, and its matrix realization on tensor powers of
//! the symplectic vector representation.
//!
//! All arithmetic is exact over the rational function field in `q` and `r`;
//! there is no floating point anywhere. The crate is organized around the
//! pipeline
//!
//! ```text
//! qfield  ->  exactla  ->  tangles  ->  rep  ->  bmw  ->  verify  ->  cli
//! ```
//!
//! * [`qfield`] — Laurent polynomials and rational functions in q, r.
//! * [`exactla`] — exact sparse linear algebra over that field.
//! * [`gfp`] — a fast mod-p evaluation twin used to certify span ranks.
//! * [`tangles`] — the framed-tangle expression calculus and its parser.
//! * [`rep`] — the symplectic matrix data and the evaluation functor.
//! * [`bmw`] — abstract BMW algebra elements, Yang–Baxter elements, traces.
//! * [`verify`] — the identity-by-identity check suite and report emitter.
//! * [`cli`] — the `tanglebench` command-line entry point.

pub mod bmw;
pub mod cli;
pub mod exactla;
pub mod gfp;
pub mod qfield;
pub mod rep;
pub mod tangles;
pub mod verify;
