//! Database schema model, DDL and catalog ingestion, schema documents and join
//! graphs.
//!
//! Identifiers are matched case-insensitively everywhere; the original casing
//! is kept for display and serialization.

mod catalog;
mod ddl;
pub(crate) mod document;
mod graph;

pub use catalog::{
    apply_metadata_csv, apply_table_metadata_csv, load_catalog, load_catalog_file, CatalogRecord,
};
pub use ddl::parse_ddl;
pub use document::{serialize_schema_document, DocumentStyle};
pub use graph::{build_join_graph_from_keys, is_connected_subset, SchemaGraph};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::corpus::EvidenceSet;
use crate::error::{Error, Result};

/// Position of a column inside a [`DatabaseSchema`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColumnRef {
    pub table_index: usize,
    pub column_index: usize,
}

impl ColumnRef {
    pub fn new(table_index: usize, column_index: usize) -> Self {
        Self {
            table_index,
            column_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    /// SQL type as written in the source, possibly empty.
    #[serde(default)]
    pub data_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_format: Option<String>,
}

impl ColumnMeta {
    pub fn new(name: impl Into<String>, data_type: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            data_type: data_type.into(),
            description: None,
            value_description: None,
            data_format: None,
        }
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = Some(description.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ForeignKey {
    /// Column index inside the owning table.
    pub column: usize,
    pub target: ColumnRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableMeta {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub columns: Vec<ColumnMeta>,
    #[serde(default)]
    pub primary_key: Vec<usize>,
    #[serde(default)]
    pub foreign_keys: Vec<ForeignKey>,
}

impl TableMeta {
    pub fn new(name: impl Into<String>, columns: Vec<ColumnMeta>) -> Self {
        Self {
            name: name.into(),
            description: None,
            columns,
            primary_key: Vec::new(),
            foreign_keys: Vec::new(),
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| c.name.eq_ignore_ascii_case(name))
    }

    pub fn is_primary_key(&self, column: usize) -> bool {
        self.primary_key.contains(&column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatabaseSchema {
    pub db_id: String,
    pub tables: Vec<TableMeta>,
    /// Database-level evidence sentences (BIRD style domain knowledge).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<EvidenceSet>,
}

impl DatabaseSchema {
    /// Builds a schema and checks every invariant.
    pub fn new(db_id: impl Into<String>, tables: Vec<TableMeta>) -> Result<Self> {
        let schema = Self {
            db_id: db_id.into(),
            tables,
            metadata: None,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn table_index(&self, name: &str) -> Option<usize> {
        self.tables
            .iter()
            .position(|t| t.name.eq_ignore_ascii_case(name))
    }

    /// Resolves `table.column` (case-insensitive).
    pub fn resolve(&self, table: &str, column: &str) -> Option<ColumnRef> {
        let t = self.table_index(table)?;
        let c = self.tables[t].column_index(column)?;
        Some(ColumnRef::new(t, c))
    }

    pub fn column(&self, col: ColumnRef) -> Option<&ColumnMeta> {
        self.tables
            .get(col.table_index)?
            .columns
            .get(col.column_index)
    }

    /// `Table.column` for display.
    pub fn qualified_name(&self, col: ColumnRef) -> String {
        match (self.tables.get(col.table_index), self.column(col)) {
            (Some(t), Some(c)) => format!("{}.{}", t.name, c.name),
            _ => format!("#{}.#{}", col.table_index, col.column_index),
        }
    }

    pub fn column_count(&self) -> usize {
        self.tables.iter().map(|t| t.columns.len()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |message: String| Error::InvalidSchema {
            db_id: self.db_id.clone(),
            message,
        };
        if self.db_id.trim().is_empty() {
            return Err(invalid("empty db_id".into()));
        }
        if self.tables.is_empty() {
            return Err(invalid("no tables".into()));
        }
        let mut table_names = HashSet::new();
        for table in &self.tables {
            if table.name.is_empty() {
                return Err(invalid("table with empty name".into()));
            }
            if !table_names.insert(table.name.to_lowercase()) {
                return Err(Error::DuplicateTable(table.name.clone()));
            }
            if table.columns.is_empty() {
                return Err(invalid(format!("table `{}` has no columns", table.name)));
            }
            let mut column_names = HashSet::new();
            for column in &table.columns {
                if column.name.is_empty() {
                    return Err(invalid(format!("empty column name in `{}`", table.name)));
                }
                if !column_names.insert(column.name.to_lowercase()) {
                    return Err(Error::DuplicateColumn {
                        table: table.name.clone(),
                        column: column.name.clone(),
                    });
                }
            }
            for &pk in &table.primary_key {
                if pk >= table.columns.len() {
                    return Err(invalid(format!(
                        "primary key column {pk} out of range in `{}`",
                        table.name
                    )));
                }
            }
            for fk in &table.foreign_keys {
                if fk.column >= table.columns.len() || self.column(fk.target).is_none() {
                    return Err(invalid(format!(
                        "foreign key in `{}` has an endpoint that does not exist",
                        table.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Checks repository-level invariants: every schema valid, db ids unique.
pub fn validate_repository(repository: &[DatabaseSchema]) -> Result<()> {
    let mut seen = HashSet::new();
    for schema in repository {
        schema.validate()?;
        if !seen.insert(schema.db_id.as_str()) {
            return Err(Error::InvalidInput(format!(
                "duplicate db_id `{}` in repository",
                schema.db_id
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    fn cols(names: &[&str]) -> Vec<ColumnMeta> {
        names.iter().map(|n| ColumnMeta::new(*n, "TEXT")).collect()
    }

    /// The five-table Activity database, with declared foreign keys.
    pub fn activity() -> DatabaseSchema {
        let mut tables = vec![
            TableMeta::new("Activity", cols(&["activity_id", "activity_name"])),
            TableMeta::new("Participates_in", cols(&["student_id", "activity_id"])),
            TableMeta::new(
                "Faculty_Participates_in",
                cols(&["faculty_id", "activity_id"]),
            ),
            TableMeta::new("Student", cols(&["student_name", "student_id"])),
            TableMeta::new("Faculty", cols(&["faculty_name", "faculty_id"])),
        ];
        tables[0].primary_key = vec![0];
        tables[3].primary_key = vec![1];
        tables[4].primary_key = vec![1];
        tables[1].foreign_keys = vec![
            ForeignKey {
                column: 0,
                target: ColumnRef::new(3, 1),
            },
            ForeignKey {
                column: 1,
                target: ColumnRef::new(0, 0),
            },
        ];
        tables[2].foreign_keys = vec![
            ForeignKey {
                column: 0,
                target: ColumnRef::new(4, 1),
            },
            ForeignKey {
                column: 1,
                target: ColumnRef::new(0, 0),
            },
        ];
        DatabaseSchema::new("activity_1", tables).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_column_names_differ_only_in_case() {
        let t = TableMeta::new(
            "t",
            vec![ColumnMeta::new("Id", ""), ColumnMeta::new("ID", "")],
        );
        assert!(matches!(
            DatabaseSchema::new("db", vec![t]),
            Err(Error::DuplicateColumn { .. })
        ));
    }

    #[test]
    fn empty_schema_rejected() {
        assert!(DatabaseSchema::new("db", vec![]).is_err());
        assert!(DatabaseSchema::new(
            "",
            vec![TableMeta::new("t", vec![ColumnMeta::new("a", "")])]
        )
        .is_err());
        assert!(DatabaseSchema::new("db", vec![TableMeta::new("t", vec![])]).is_err());
    }

    #[test]
    fn resolve_is_case_insensitive() {
        let s = fixtures::activity();
        assert_eq!(
            s.resolve("student", "STUDENT_NAME"),
            Some(ColumnRef::new(3, 0))
        );
        assert_eq!(
            s.qualified_name(ColumnRef::new(3, 0)),
            "Student.student_name"
        );
        assert_eq!(s.resolve("Student", "nope"), None);
    }

    #[test]
    fn repository_rejects_duplicate_ids() {
        let a = fixtures::activity();
        assert!(validate_repository(&[a.clone(), a]).is_err());
    }
}
