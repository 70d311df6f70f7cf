mod bench;
mod generate;
mod oracle;

pub use bench::*;
pub use generate::*;
pub use oracle::*;
