pub mod bound;
pub mod optimize_noise;
pub mod simulate;
pub mod sweep;
pub mod verify;
