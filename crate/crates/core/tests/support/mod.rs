pub mod adjudication;
pub mod distribution;
pub mod oracles;
