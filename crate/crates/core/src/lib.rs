pub mod cli;
pub mod expr;
pub mod foldcore;
pub mod inverse;
pub mod linfold;
pub mod odefold;
pub mod sysmodel;
pub mod verify;
