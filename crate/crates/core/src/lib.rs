// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod cli;
pub mod flow;
pub mod geometry;
pub mod mdgrid;
pub mod mesh_io;
pub mod oracle;
pub mod postproc;
pub mod sparse;
pub mod transport;
