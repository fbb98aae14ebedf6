pub mod adversary;
pub mod cli;
pub mod crypto;
pub mod principals;
pub mod properties;
pub mod scenario;
pub mod trace;
pub mod transport;
