//! Interactive-predictive sequence prediction.
//!
//! A user validates a prefix of the system output and types one correction;
//! the engine returns the most probable continuation compatible with it.
//!
//! - [`seqcore`]: vocabulary, token sequences, sources, prefix constraints
//! - [`scorers`]: conditional models behind one interface
//! - [`decoder`]: beam search, forced decoding, constrained search
//! - [`metrics`]: BLEU, meteor_lite, CharacTER, KSMR
//! - [`session`], [`simulator`], [`server`]: the correction loop, driven by a
//!   simulated user or over HTTP
//! - [`corpus`]: dataset loading, validation and experiment configuration

pub mod cli;
pub mod corpus;
pub mod decoder;
pub mod metrics;
pub mod scorers;
pub mod seqcore;
pub mod server;
pub mod session;
pub mod simulator;
