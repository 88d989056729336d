//! Workbooks: the JSON schema, the compiled model and recalculation.

mod model;
mod recalc;
mod schema;

pub use model::{CellKey, Content, Formula, LoadedModule, Model, ModelError, NameEntry, Rect, SheetData, TableData};
pub use recalc::{recalculate, CellResult, Computed};
pub use schema::{
    literal_scalar, CellInput, DefinedName, ImportRecord, ModuleSource, Settings, Sheet, Table, Workbook,
    WorkbookIoError,
};

impl Model {
    pub fn recalculate(&self) -> Computed {
        recalculate(self)
    }
}
