//! Outage analysis and surface partitioning for STAR-RIS-assisted NOMA downlinks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod model;
pub mod partition;
pub mod sim;
pub mod specfun;
