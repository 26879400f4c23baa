pub mod bench;
pub mod explain;
pub mod extract;
pub mod predict;
pub mod train;
