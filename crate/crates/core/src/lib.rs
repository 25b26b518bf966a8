pub mod analysis;
pub mod cli;
pub mod device;
pub mod error;
pub mod gates;
pub mod grover;
pub mod hilbert;
pub mod pulses;
