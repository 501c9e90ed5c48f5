pub mod analyze;
pub mod intervene;
pub mod simulate;
pub mod verify;
