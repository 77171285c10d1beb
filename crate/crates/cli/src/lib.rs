//! Front ends over the kernel, generators and prover: library loading,
//! policy backends, proof shortening and the interactive session service.

pub mod backend;
pub mod config;
pub mod library;
pub mod server;
pub mod session;
pub mod shorten;
