pub mod assumptions;
pub mod fparith;
pub mod graddesc;
pub mod net;
pub mod oracle;
pub mod regions;
pub mod scalar;
