//! Sketched answer set programming: complete partial ASP programs from examples.
//!
//! A sketch is parsed ([`lang`]), checked for stratification ([`dependency`]),
//! rewritten into a single meta-program ([`rewrite`]), solved ([`solve`]) and the
//! resulting substitutions filtered by preference ([`synth`]). [`bench`] holds the
//! bundled problems and experiments.

pub mod lang;
pub mod dependency;
pub mod rewrite;
pub mod solve;
pub mod synth;
pub mod bench;
