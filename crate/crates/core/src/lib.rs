pub mod bitcodec;
pub mod dyadic;
pub mod funcspace;
pub mod interval;
pub mod meter;
pub mod names;
pub mod sop;
pub mod translate;
