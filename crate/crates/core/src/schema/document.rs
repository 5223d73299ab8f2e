use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{DatabaseSchema, TableMeta};

/// How a schema is rendered for embedding and prompting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocumentStyle {
    /// Header, `CREATE TABLE` statements and (optionally) column metadata blocks.
    #[default]
    Ddl,
    /// One line per database: `Table(col, col); ...`.
    Compact,
}

/// Renders a schema document in the default DDL style.
///
/// The output is a pure function of the schema, so identical input always
/// yields identical bytes. With `include_metadata` unset no description or
/// evidence text is emitted, and the result parses back with
/// [`super::parse_ddl`].
pub fn serialize_schema_document(schema: &DatabaseSchema, include_metadata: bool) -> String {
    render(schema, include_metadata, DocumentStyle::Ddl)
}

pub(crate) fn render(
    schema: &DatabaseSchema,
    include_metadata: bool,
    style: DocumentStyle,
) -> String {
    let mut out = String::new();
    match style {
        DocumentStyle::Ddl => {
            let _ = writeln!(out, "Database: {}:", schema.db_id);
            for table in &schema.tables {
                let _ = writeln!(out, "Table: {}", table.name);
                let _ = writeln!(out, "{}", create_table(schema, table));
                if include_metadata {
                    write_table_metadata(&mut out, table);
                }
            }
        }
        DocumentStyle::Compact => {
            let _ = write!(out, "Database: {}. Tables: ", schema.db_id);
            for (i, table) in schema.tables.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                let cols: Vec<&str> = table.columns.iter().map(|c| c.name.as_str()).collect();
                let _ = write!(out, "{}({})", table.name, cols.join(", "));
            }
            out.push('\n');
        }
    }
    if include_metadata {
        if let Some(evidence) = schema.metadata.as_ref().filter(|e| !e.is_empty()) {
            out.push_str("Evidence:\n");
            for item in evidence.iter() {
                let _ = writeln!(out, "- {item}");
            }
        }
    }
    out
}

fn write_table_metadata(out: &mut String, table: &TableMeta) {
    let _ = writeln!(
        out,
        "Table Description: {}",
        table.description.as_deref().unwrap_or(&table.name)
    );
    for (i, col) in table.columns.iter().enumerate() {
        let _ = write!(out, "COLUMN {} column_name: {}", i + 1, col.name);
        if let Some(d) = &col.description {
            let _ = write!(out, "; Column description: {d}");
        }
        if let Some(f) = &col.data_format {
            let _ = write!(out, "; Data format: {f}");
        }
        if let Some(v) = &col.value_description {
            let _ = write!(out, "; Value description: {v}");
        }
        out.push('\n');
    }
}

fn create_table(schema: &DatabaseSchema, table: &TableMeta) -> String {
    let mut parts: Vec<String> = table
        .columns
        .iter()
        .map(|c| {
            if c.data_type.is_empty() {
                column_ident(&c.name)
            } else {
                format!("{} {}", column_ident(&c.name), c.data_type)
            }
        })
        .collect();
    if !table.primary_key.is_empty() {
        let cols: Vec<String> = table
            .primary_key
            .iter()
            .map(|&i| column_ident(&table.columns[i].name))
            .collect();
        parts.push(format!("PRIMARY KEY ({})", cols.join(", ")));
    }
    for fk in &table.foreign_keys {
        let target_table = &schema.tables[fk.target.table_index];
        parts.push(format!(
            "FOREIGN KEY ({}) REFERENCES {} ({})",
            column_ident(&table.columns[fk.column].name),
            quote(&target_table.name),
            column_ident(&target_table.columns[fk.target.column_index].name)
        ));
    }
    format!("CREATE TABLE {} ({})", quote(&table.name), parts.join(", "))
}

const RESERVED: &[&str] = &[
    "CONSTRAINT",
    "PRIMARY",
    "FOREIGN",
    "UNIQUE",
    "CHECK",
    "KEY",
    "INDEX",
    "NOT",
    "NULL",
    "DEFAULT",
    "COLLATE",
    "REFERENCES",
    "GENERATED",
    "AS",
    "AUTOINCREMENT",
    "AUTO_INCREMENT",
    "COMMENT",
    "ON",
    "CREATE",
    "TABLE",
];

fn column_ident(name: &str) -> String {
    let simple = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !RESERVED.iter().any(|r| r.eq_ignore_ascii_case(name));
    if simple {
        name.to_string()
    } else {
        quote(name)
    }
}

fn quote(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}
