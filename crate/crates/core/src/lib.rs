pub mod lang;
pub mod eval;
pub mod workbook;
pub mod lint;
pub mod registry;
pub mod stdlib;
pub mod budget;
