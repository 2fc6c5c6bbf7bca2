pub mod canonical;
pub mod lattice;
pub mod oracle;
pub mod pauli;
pub mod split;
pub mod vacuum;
