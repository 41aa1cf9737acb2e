pub mod decide;
pub mod eqsys;
pub mod measure;
pub mod ppda;
pub mod semantics;
pub mod syntax;
