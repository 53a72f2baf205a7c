pub mod gp;
pub mod sieve;
