//! Spider `tables.json` records and BIRD database-description CSVs.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{ColumnMeta, ColumnRef, DatabaseSchema, ForeignKey, TableMeta};

/// One entry of a Spider-style catalog.
///
/// Column indices in `primary_keys` and `foreign_keys` are global: they index
/// `column_names_original`, whose entries carry the owning table index (`-1`
/// for the `*` pseudo-column).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogRecord {
    pub db_id: String,
    pub table_names_original: Vec<String>,
    pub column_names_original: Vec<(i64, String)>,
    pub column_types: Vec<String>,
    #[serde(default)]
    pub primary_keys: Vec<PrimaryKeyEntry>,
    #[serde(default)]
    pub foreign_keys: Vec<(usize, usize)>,
}

/// A primary key is either one global column index or a composite list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PrimaryKeyEntry {
    Single(usize),
    Composite(Vec<usize>),
}

impl PrimaryKeyEntry {
    fn indices(&self) -> &[usize] {
        match self {
            PrimaryKeyEntry::Single(i) => std::slice::from_ref(i),
            PrimaryKeyEntry::Composite(v) => v,
        }
    }
}

/// Converts one catalog record into a validated schema.
pub fn load_catalog(record: &CatalogRecord) -> Result<DatabaseSchema> {
    let err = |message: String| Error::Catalog {
        db_id: record.db_id.clone(),
        message,
    };
    if record.column_types.len() != record.column_names_original.len() {
        return Err(err(format!(
            "{} column types for {} columns",
            record.column_types.len(),
            record.column_names_original.len()
        )));
    }

    let mut tables: Vec<TableMeta> = record
        .table_names_original
        .iter()
        .map(|name| TableMeta::new(name.clone(), Vec::new()))
        .collect();

    // global column index -> (table, column)
    let mut global: Vec<Option<ColumnRef>> = Vec::with_capacity(record.column_names_original.len());
    for ((table, name), ty) in record
        .column_names_original
        .iter()
        .zip(&record.column_types)
    {
        if *table < 0 {
            global.push(None);
            continue;
        }
        let t = *table as usize;
        let Some(meta) = tables.get_mut(t) else {
            return Err(Error::IndexOutOfRange {
                what: "table",
                index: t,
                limit: record.table_names_original.len(),
            });
        };
        global.push(Some(ColumnRef::new(t, meta.columns.len())));
        meta.columns.push(ColumnMeta::new(name.clone(), ty.clone()));
    }

    let lookup = |index: usize| -> Result<ColumnRef> {
        match global.get(index) {
            Some(Some(c)) => Ok(*c),
            Some(None) => Err(err(format!(
                "key references the `*` pseudo-column ({index})"
            ))),
            None => Err(Error::IndexOutOfRange {
                what: "column",
                index,
                limit: global.len(),
            }),
        }
    };

    for entry in &record.primary_keys {
        for &index in entry.indices() {
            let col = lookup(index)?;
            let pk = &mut tables[col.table_index].primary_key;
            if !pk.contains(&col.column_index) {
                pk.push(col.column_index);
            }
        }
    }
    for &(from, to) in &record.foreign_keys {
        let from = lookup(from)?;
        let to = lookup(to)?;
        let fk = ForeignKey {
            column: from.column_index,
            target: to,
        };
        let fks = &mut tables[from.table_index].foreign_keys;
        if !fks.contains(&fk) {
            fks.push(fk);
        }
    }

    DatabaseSchema::new(record.db_id.clone(), tables).map_err(|e| err(e.to_string()))
}

/// Reads a JSON array of catalog records. The first invalid record aborts.
pub fn load_catalog_file(path: &Path) -> Result<Vec<DatabaseSchema>> {
    let text = crate::util::read_to_string(path)?;
    let records: Vec<CatalogRecord> = serde_json::from_str(&text)?;
    records.iter().map(load_catalog).collect()
}

#[derive(Debug, Deserialize)]
struct MetadataRow {
    #[serde(default)]
    table_name: Option<String>,
    original_column_name: String,
    #[serde(default)]
    column_description: Option<String>,
    #[serde(default)]
    data_format: Option<String>,
    #[serde(default)]
    value_description: Option<String>,
}

fn non_blank(s: Option<String>) -> Option<String> {
    s.map(|s| crate::util::normalize_ws(&s))
        .filter(|s| !s.is_empty())
}

fn apply_rows<R: Read>(
    schema: &mut DatabaseSchema,
    reader: R,
    fixed_table: Option<&str>,
) -> Result<usize> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut applied = 0;
    for row in rdr.deserialize::<MetadataRow>() {
        let row = row?;
        let table = match (fixed_table, row.table_name.as_deref()) {
            (Some(t), _) => t.to_string(),
            (None, Some(t)) => t.to_string(),
            (None, None) => {
                return Err(Error::InvalidInput(
                    "metadata row without table_name".into(),
                ));
            }
        };
        let Some(col) = schema.resolve(&table, &row.original_column_name) else {
            log::warn!(
                "{}: metadata for unknown column {}.{} ignored",
                schema.db_id,
                table,
                row.original_column_name
            );
            continue;
        };
        let meta = &mut schema.tables[col.table_index].columns[col.column_index];
        meta.description = non_blank(row.column_description).or(meta.description.take());
        meta.data_format = non_blank(row.data_format).or(meta.data_format.take());
        meta.value_description = non_blank(row.value_description).or(meta.value_description.take());
        applied += 1;
    }
    Ok(applied)
}

/// Applies a per-database CSV with columns `table_name, original_column_name,
/// column_description, data_format, value_description`. Returns the number of
/// columns updated; rows naming unknown columns are skipped with a warning.
pub fn apply_metadata_csv<R: Read>(schema: &mut DatabaseSchema, reader: R) -> Result<usize> {
    apply_rows(schema, reader, None)
}

/// Same as [`apply_metadata_csv`] for BIRD's one-file-per-table layout, where
/// the table name comes from the file rather than a column.
pub fn apply_table_metadata_csv<R: Read>(
    schema: &mut DatabaseSchema,
    table: &str,
    reader: R,
) -> Result<usize> {
    apply_rows(schema, reader, Some(table))
}
