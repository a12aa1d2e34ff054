pub mod curves;
pub mod error;
pub mod flux;
pub mod loading;
pub mod modulus;
pub mod network;
pub mod solvers;
