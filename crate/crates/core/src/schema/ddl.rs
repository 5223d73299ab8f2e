//! A tolerant parser for the `CREATE TABLE` subset used by Spider/BIRD dumps.
//!
//! Only table definitions are modeled. Other statements (`INSERT`, `CREATE
//! INDEX`, `PRAGMA`, ...) and free-form text lines are skipped, so schema
//! documents produced by [`super::serialize_schema_document`] parse back.
//! Column type strings are kept verbatim (whitespace-normalized).

use crate::error::{Error, Result};

use super::{ColumnMeta, ColumnRef, DatabaseSchema, ForeignKey, TableMeta};

/// Parses every `CREATE TABLE` statement in `script` into a schema named `db_id`.
///
/// Tables keep script order. Foreign keys may reference tables defined later
/// in the script; a reference that cannot be resolved is an error.
pub fn parse_ddl(db_id: &str, script: &str) -> Result<DatabaseSchema> {
    let mut parser = Parser::new(script);
    let mut tables: Vec<TableMeta> = Vec::new();
    let mut pending: Vec<PendingFk> = Vec::new();

    while let Some(table) = parser.next_create_table()? {
        if tables
            .iter()
            .any(|t| t.name.eq_ignore_ascii_case(&table.meta.name))
        {
            return Err(Error::DuplicateTable(table.meta.name));
        }
        let table_index = tables.len();
        pending.extend(
            table
                .fks
                .into_iter()
                .map(|fk| PendingFk { table_index, ..fk }),
        );
        tables.push(table.meta);
    }
    if tables.is_empty() {
        return Err(Error::NoTables);
    }

    for fk in pending {
        resolve_fk(&mut tables, fk)?;
    }
    for table in &mut tables {
        table.foreign_keys.dedup();
    }

    DatabaseSchema::new(db_id, tables)
}

#[derive(Debug)]
struct PendingFk {
    table_index: usize,
    columns: Vec<String>,
    target_table: String,
    target_columns: Option<Vec<String>>,
}

fn resolve_fk(tables: &mut [TableMeta], fk: PendingFk) -> Result<()> {
    let owner = &tables[fk.table_index];
    let unresolved = |column: &str, target: String| Error::UnresolvedForeignKey {
        table: owner.name.clone(),
        column: column.to_string(),
        target,
    };
    let first = fk.columns.first().map(String::as_str).unwrap_or("");

    let target_index = tables
        .iter()
        .position(|t| t.name.eq_ignore_ascii_case(&fk.target_table))
        .ok_or_else(|| unresolved(first, format!("table `{}`", fk.target_table)))?;
    let target = &tables[target_index];

    let target_cols: Vec<usize> = match &fk.target_columns {
        Some(names) => names
            .iter()
            .map(|n| {
                target
                    .column_index(n)
                    .ok_or_else(|| unresolved(first, format!("column `{}.{}`", target.name, n)))
            })
            .collect::<Result<_>>()?,
        None => target.primary_key.clone(),
    };
    if target_cols.len() != fk.columns.len() {
        return Err(unresolved(
            first,
            format!(
                "`{}` ({} referencing columns, {} referenced)",
                target.name,
                fk.columns.len(),
                target_cols.len()
            ),
        ));
    }

    let mut resolved = Vec::with_capacity(fk.columns.len());
    for (name, target_col) in fk.columns.iter().zip(target_cols) {
        let local = owner
            .column_index(name)
            .ok_or_else(|| unresolved(name, format!("local column `{name}`")))?;
        resolved.push(ForeignKey {
            column: local,
            target: ColumnRef::new(target_index, target_col),
        });
    }
    tables[fk.table_index].foreign_keys.extend(resolved);
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident { text: String, quoted: bool },
    Str(String),
    Num(String),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

impl Token {
    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.tok, Tok::Ident { text, quoted: false } if text.eq_ignore_ascii_case(kw))
    }

    fn is_punct(&self, c: char) -> bool {
        self.tok == Tok::Punct(c)
    }
}

struct ParsedTable {
    meta: TableMeta,
    fks: Vec<PendingFk>,
}

/// Words that end a column type and begin a column constraint.
const CONSTRAINT_WORDS: &[&str] = &[
    "CONSTRAINT",
    "PRIMARY",
    "NOT",
    "NULL",
    "UNIQUE",
    "CHECK",
    "DEFAULT",
    "COLLATE",
    "REFERENCES",
    "GENERATED",
    "AS",
    "AUTOINCREMENT",
    "AUTO_INCREMENT",
    "COMMENT",
    "ON",
];

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    peeked: Option<Token>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            pos: 0,
            peeked: None,
        }
    }

    fn error_at(&self, offset: usize, message: impl Into<String>) -> Error {
        let before = &self.src[..offset.min(self.src.len())];
        let line = before.matches('\n').count() + 1;
        let column = before
            .rfind('\n')
            .map_or(before.len(), |nl| before.len() - nl - 1)
            + 1;
        Error::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_trivia(&mut self) {
        loop {
            let rest = self.rest();
            let trimmed = rest.trim_start();
            self.pos += rest.len() - trimmed.len();
            if trimmed.starts_with("--") {
                self.pos += trimmed.find('\n').unwrap_or(trimmed.len());
            } else if trimmed.starts_with("/*") {
                self.pos += trimmed.find("*/").map_or(trimmed.len(), |i| i + 2);
            } else {
                return;
            }
        }
    }

    /// Skips raw text up to and including the next newline or `;`.
    fn skip_line(&mut self) {
        let rest = self.rest();
        self.pos += rest.find(['\n', ';']).map_or(rest.len(), |i| i + 1);
    }

    fn lex(&mut self) -> Result<Option<Token>> {
        if let Some(t) = self.peeked.take() {
            return Ok(Some(t));
        }
        self.skip_trivia();
        let offset = self.pos;
        let mut chars = self.rest().chars();
        let Some(c) = chars.next() else {
            return Ok(None);
        };
        let tok = match c {
            '"' | '`' | '[' => {
                let close = if c == '[' { ']' } else { c };
                let text = self.lex_quoted(c.len_utf8(), close, offset)?;
                Tok::Ident { text, quoted: true }
            }
            '\'' => Tok::Str(self.lex_quoted(1, '\'', offset)?),
            c if c.is_ascii_digit() => {
                let len = self
                    .rest()
                    .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '.'))
                    .unwrap_or(self.rest().len());
                let text = self.rest()[..len].to_string();
                self.pos += len;
                Tok::Num(text)
            }
            c if c.is_alphabetic() || c == '_' => {
                let len = self
                    .rest()
                    .find(|ch: char| !(ch.is_alphanumeric() || ch == '_' || ch == '$'))
                    .unwrap_or(self.rest().len());
                let text = self.rest()[..len].to_string();
                self.pos += len;
                Tok::Ident {
                    text,
                    quoted: false,
                }
            }
            other => {
                self.pos += other.len_utf8();
                Tok::Punct(other)
            }
        };
        Ok(Some(Token { tok, offset }))
    }

    /// Reads a quoted run; a doubled closing quote is an escaped quote.
    fn lex_quoted(&mut self, open_len: usize, close: char, offset: usize) -> Result<String> {
        self.pos += open_len;
        let mut out = String::new();
        loop {
            let rest = self.rest();
            let Some(i) = rest.find(close) else {
                return Err(self.error_at(offset, "unterminated quoted text"));
            };
            out.push_str(&rest[..i]);
            self.pos += i + close.len_utf8();
            if close != ']' && self.rest().starts_with(close) {
                out.push(close);
                self.pos += close.len_utf8();
            } else {
                return Ok(out);
            }
        }
    }

    fn peek(&mut self) -> Result<Option<&Token>> {
        if self.peeked.is_none() {
            self.peeked = self.lex()?;
        }
        Ok(self.peeked.as_ref())
    }

    fn next(&mut self, what: &str) -> Result<Token> {
        match self.lex()? {
            Some(t) => Ok(t),
            None => Err(self.error_at(
                self.src.len(),
                format!("unexpected end of input, expected {what}"),
            )),
        }
    }

    fn peek_keyword(&mut self, kw: &str) -> Result<bool> {
        Ok(self.peek()?.is_some_and(|t| t.is_keyword(kw)))
    }

    fn peek_punct(&mut self, c: char) -> Result<bool> {
        Ok(self.peek()?.is_some_and(|t| t.is_punct(c)))
    }

    fn eat_keyword(&mut self, kw: &str) -> Result<bool> {
        if self.peek_keyword(kw)? {
            self.peeked = None;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        let t = self.next(kw)?;
        if t.is_keyword(kw) {
            Ok(())
        } else {
            Err(self.error_at(t.offset, format!("expected {kw}")))
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<()> {
        let t = self.next(&format!("`{c}`"))?;
        if t.is_punct(c) {
            Ok(())
        } else {
            Err(self.error_at(t.offset, format!("expected `{c}`")))
        }
    }

    fn identifier(&mut self, what: &str) -> Result<String> {
        let t = self.next(what)?;
        match t.tok {
            Tok::Ident { text, .. } | Tok::Str(text) => Ok(text),
            _ => Err(self.error_at(t.offset, format!("expected {what}"))),
        }
    }

    /// Possibly schema-qualified name; the last component is returned.
    fn object_name(&mut self, what: &str) -> Result<String> {
        let mut name = self.identifier(what)?;
        while self.peek_punct('.')? {
            self.peeked = None;
            name = self.identifier(what)?;
        }
        Ok(name)
    }

    /// Consumes a balanced parenthesized group; the opening paren must be next.
    fn skip_group(&mut self) -> Result<Vec<Token>> {
        let open = self.next("`(`")?;
        if !open.is_punct('(') {
            return Err(self.error_at(open.offset, "expected `(`"));
        }
        let mut depth = 1usize;
        let mut inner = Vec::new();
        loop {
            let t = self.next("`)`")?;
            if t.is_punct('(') {
                depth += 1;
            } else if t.is_punct(')') {
                depth -= 1;
                if depth == 0 {
                    return Ok(inner);
                }
            }
            inner.push(t);
        }
    }

    /// Skips one token, or a whole group when it is an opening paren.
    fn skip_term(&mut self) -> Result<()> {
        if self.peek_punct('(')? {
            self.skip_group()?;
        } else {
            self.next("a term")?;
        }
        Ok(())
    }

    /// `(a [ASC|DESC], b, ...)` as a list of column names.
    fn column_list(&mut self) -> Result<Vec<String>> {
        self.expect_punct('(')?;
        let mut names = Vec::new();
        loop {
            names.push(self.identifier("column name")?);
            // ASC, DESC, COLLATE x, length prefixes: skip until `,` or `)`.
            loop {
                let t = self.next("`,` or `)`")?;
                if t.is_punct(',') {
                    break;
                }
                if t.is_punct(')') {
                    return Ok(names);
                }
                if t.is_punct('(') {
                    self.peeked = Some(t);
                    self.skip_group()?;
                }
            }
        }
    }

    fn next_create_table(&mut self) -> Result<Option<ParsedTable>> {
        loop {
            self.skip_trivia();
            if self.rest().is_empty() {
                return Ok(None);
            }
            let word_len = self
                .rest()
                .find(|c: char| !(c.is_alphanumeric() || c == '_'))
                .unwrap_or(self.rest().len());
            if !self.rest()[..word_len].eq_ignore_ascii_case("CREATE") {
                self.skip_line();
                continue;
            }
            self.pos += word_len;
            self.eat_keyword("TEMP")?;
            self.eat_keyword("TEMPORARY")?;
            if !self.eat_keyword("TABLE")? {
                self.skip_statement()?;
                continue;
            }
            let table = self.create_table_body()?;
            self.peeked = None;
            self.skip_line();
            return Ok(Some(table));
        }
    }

    fn skip_statement(&mut self) -> Result<()> {
        while let Some(t) = self.lex()? {
            if t.is_punct(';') {
                break;
            }
        }
        Ok(())
    }

    fn create_table_body(&mut self) -> Result<ParsedTable> {
        if self.eat_keyword("IF")? {
            self.expect_keyword("NOT")?;
            self.expect_keyword("EXISTS")?;
        }
        let name = self.object_name("table name")?;
        self.expect_punct('(')?;

        let mut meta = TableMeta::new(name, Vec::new());
        let mut fks = Vec::new();
        let mut pk_names: Vec<(String, usize)> = Vec::new();

        loop {
            let start = self.peek()?.map(|t| t.offset).unwrap_or(self.src.len());
            if self.is_table_constraint()? {
                self.table_constraint(&mut pk_names, &mut fks, start)?;
            } else {
                self.column_def(&mut meta, &mut pk_names, &mut fks)?;
            }
            let t = self.next("`,` or `)`")?;
            if t.is_punct(')') {
                break;
            }
            if !t.is_punct(',') {
                return Err(self.error_at(t.offset, "expected `,` or `)`"));
            }
        }

        for (pk, offset) in pk_names {
            let idx = meta.column_index(&pk).ok_or_else(|| {
                self.error_at(offset, format!("primary key names unknown column `{pk}`"))
            })?;
            if !meta.primary_key.contains(&idx) {
                meta.primary_key.push(idx);
            }
        }
        if meta.columns.is_empty() {
            return Err(self.error_at(self.pos, format!("table `{}` has no columns", meta.name)));
        }
        Ok(ParsedTable { meta, fks })
    }

    fn is_table_constraint(&mut self) -> Result<bool> {
        let Some(t) = self.peek()? else {
            return Ok(false);
        };
        Ok([
            "CONSTRAINT",
            "PRIMARY",
            "FOREIGN",
            "UNIQUE",
            "CHECK",
            "KEY",
            "INDEX",
        ]
        .iter()
        .any(|kw| t.is_keyword(kw)))
    }

    fn table_constraint(
        &mut self,
        pk_names: &mut Vec<(String, usize)>,
        fks: &mut Vec<PendingFk>,
        start: usize,
    ) -> Result<()> {
        if self.eat_keyword("CONSTRAINT")? {
            self.identifier("constraint name")?;
        }
        if self.eat_keyword("PRIMARY")? {
            self.expect_keyword("KEY")?;
            let offset = self.peek()?.map_or(start, |t| t.offset);
            pk_names.extend(self.column_list()?.into_iter().map(|c| (c, offset)));
        } else if self.eat_keyword("FOREIGN")? {
            self.expect_keyword("KEY")?;
            let columns = self.column_list()?;
            self.expect_keyword("REFERENCES")?;
            let (target_table, target_columns) = self.references_target()?;
            fks.push(PendingFk {
                table_index: 0,
                columns,
                target_table,
                target_columns,
            });
        } else {
            // UNIQUE (...), CHECK (...), KEY name (...), INDEX name (...)
            self.next("constraint")?;
            while !self.peek_punct(',')? && !self.peek_punct(')')? {
                if self.peek()?.is_none() {
                    return Err(self.error_at(start, "unterminated table constraint"));
                }
                self.skip_term()?;
            }
        }
        self.skip_reference_actions()?;
        Ok(())
    }

    fn references_target(&mut self) -> Result<(String, Option<Vec<String>>)> {
        let table = self.object_name("referenced table")?;
        let columns = if self.peek_punct('(')? {
            Some(self.column_list()?)
        } else {
            None
        };
        Ok((table, columns))
    }

    /// ON DELETE/UPDATE ..., MATCH x, [NOT] DEFERRABLE ...
    fn skip_reference_actions(&mut self) -> Result<()> {
        const ACTION_WORDS: &[&str] = &[
            "ON",
            "DELETE",
            "UPDATE",
            "SET",
            "NULL",
            "DEFAULT",
            "CASCADE",
            "RESTRICT",
            "NO",
            "ACTION",
            "MATCH",
            "FULL",
            "PARTIAL",
            "SIMPLE",
            "DEFERRABLE",
            "INITIALLY",
            "DEFERRED",
            "IMMEDIATE",
        ];
        loop {
            let Some(t) = self.peek()? else {
                return Ok(());
            };
            if t.is_keyword("NOT") {
                // NOT DEFERRABLE; anything else is a column constraint.
                let save = (self.pos, self.peeked.clone());
                self.peeked = None;
                if self.peek_keyword("DEFERRABLE")? {
                    self.peeked = None;
                    continue;
                }
                self.pos = save.0;
                self.peeked = save.1;
                return Ok(());
            }
            if ACTION_WORDS.iter().any(|kw| t.is_keyword(kw)) {
                self.peeked = None;
            } else {
                return Ok(());
            }
        }
    }

    fn column_def(
        &mut self,
        meta: &mut TableMeta,
        pk_names: &mut Vec<(String, usize)>,
        fks: &mut Vec<PendingFk>,
    ) -> Result<()> {
        let name_tok = self.next("column name")?;
        let name = match name_tok.tok {
            Tok::Ident { text, .. } | Tok::Str(text) => text,
            _ => return Err(self.error_at(name_tok.offset, "expected column name")),
        };

        let data_type = self.column_type()?;
        let column_index = meta.columns.len();
        meta.columns.push(ColumnMeta::new(name.clone(), data_type));

        loop {
            let Some(t) = self.peek()? else {
                return Ok(());
            };
            if t.is_punct(',') || t.is_punct(')') {
                return Ok(());
            }
            let offset = t.offset;
            if self.eat_keyword("CONSTRAINT")? {
                self.identifier("constraint name")?;
            } else if self.eat_keyword("PRIMARY")? {
                self.expect_keyword("KEY")?;
                pk_names.push((name.clone(), offset));
            } else if self.eat_keyword("REFERENCES")? {
                let (target_table, target_columns) = self.references_target()?;
                fks.push(PendingFk {
                    table_index: 0,
                    columns: vec![meta.columns[column_index].name.clone()],
                    target_table,
                    target_columns,
                });
                self.skip_reference_actions()?;
            } else if self.eat_keyword("DEFAULT")? {
                if self.peek_punct('-')? || self.peek_punct('+')? {
                    self.next("sign")?;
                }
                self.skip_term()?;
                if self.peek_punct('(')? {
                    // function-call default such as CURRENT_TIMESTAMP()
                    self.skip_group()?;
                }
            } else {
                // NOT NULL, UNIQUE, CHECK (...), COLLATE x, AUTOINCREMENT, ...
                self.skip_term()?;
            }
        }
    }

    /// Type tokens up to the first constraint keyword, `,` or `)`.
    fn column_type(&mut self) -> Result<String> {
        let mut out = String::new();
        loop {
            let Some(t) = self.peek()? else {
                return Ok(out);
            };
            match &t.tok {
                Tok::Ident {
                    text,
                    quoted: false,
                } if !CONSTRAINT_WORDS
                    .iter()
                    .any(|kw| text.eq_ignore_ascii_case(kw)) =>
                {
                    if !out.is_empty() {
                        out.push(' ');
                    }
                    out.push_str(text);
                    self.peeked = None;
                }
                Tok::Punct('(') if !out.is_empty() => {
                    let inner = self.skip_group()?;
                    out.push('(');
                    for tok in inner {
                        match tok.tok {
                            Tok::Ident { text, .. } | Tok::Num(text) => out.push_str(&text),
                            Tok::Str(text) => {
                                out.push('\'');
                                out.push_str(&text.replace('\'', "''"));
                                out.push('\'');
                            }
                            Tok::Punct(c) => out.push(c),
                        }
                    }
                    out.push(')');
                }
                _ => return Ok(out),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn author_table() {
        let s = parse_ddl(
            "authors",
            r#"CREATE TABLE "Author" (Id INTEGER, Name TEXT, Affiliation TEXT)"#,
        )
        .unwrap();
        assert_eq!(s.tables.len(), 1);
        let t = &s.tables[0];
        assert_eq!(t.name, "Author");
        let names: Vec<_> = t.columns.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["Id", "Name", "Affiliation"]);
        assert!(t.primary_key.is_empty());
        assert!(t.foreign_keys.is_empty());
    }

    #[test]
    fn empty_script() {
        assert!(matches!(parse_ddl("x", ""), Err(Error::NoTables)));
        assert!(matches!(
            parse_ddl("x", "-- nothing\nPRAGMA foreign_keys = ON;"),
            Err(Error::NoTables)
        ));
    }

    #[test]
    fn table_level_foreign_key() {
        let s = parse_ddl(
            "d",
            "CREATE TABLE A (id INTEGER PRIMARY KEY, name TEXT);\n\
             CREATE TABLE B (b_id INT, a_id INT, PRIMARY KEY (b_id), FOREIGN KEY (a_id) REFERENCES A(id));",
        )
        .unwrap();
        assert_eq!(s.tables[0].primary_key, vec![0]);
        assert_eq!(s.tables[1].primary_key, vec![0]);
        assert_eq!(
            s.tables[1].foreign_keys,
            vec![ForeignKey {
                column: 1,
                target: ColumnRef::new(0, 0)
            }]
        );
    }

    #[test]
    fn inline_reference_forward_and_implicit_pk() {
        let s = parse_ddl(
            "d",
            "create table child (x int references Parent, y varchar(20) not null default 'a''b');
             create table parent (pid integer primary key autoincrement);",
        )
        .unwrap();
        assert_eq!(s.tables[0].columns[1].data_type, "varchar(20)");
        assert_eq!(
            s.tables[0].foreign_keys,
            vec![ForeignKey {
                column: 0,
                target: ColumnRef::new(1, 0)
            }]
        );
    }

    #[test]
    fn composite_keys_and_dialect_noise() {
        let s = parse_ddl(
            "d",
            "CREATE TABLE IF NOT EXISTS main.`orders` (\n\
               `id` int(11) NOT NULL AUTO_INCREMENT,\n\
               [line] INTEGER,\n\
               amount NUMERIC(10, 2) CHECK (amount > 0),\n\
               created DATETIME DEFAULT CURRENT_TIMESTAMP,\n\
               CONSTRAINT pk PRIMARY KEY (id, line),\n\
               UNIQUE (line),\n\
               KEY idx_amount (amount)\n\
             ) ENGINE=InnoDB DEFAULT CHARSET=utf8;\n\
             CREATE INDEX i ON orders(id);\n\
             CREATE TABLE items (oid int, ln int, FOREIGN KEY (oid, ln) REFERENCES orders (id, line) ON DELETE CASCADE NOT DEFERRABLE);",
        )
        .unwrap();
        let orders = &s.tables[0];
        assert_eq!(orders.name, "orders");
        assert_eq!(orders.primary_key, vec![0, 1]);
        assert_eq!(orders.columns[0].data_type, "int(11)");
        assert_eq!(orders.columns[2].data_type, "NUMERIC(10,2)");
        assert_eq!(s.tables[1].foreign_keys.len(), 2);
        assert_eq!(s.tables[1].foreign_keys[1].target, ColumnRef::new(0, 1));
    }

    #[test]
    fn unknown_types_preserved() {
        let s = parse_ddl("d", "CREATE TABLE t (a FANCY GEO TYPE, b)").unwrap();
        assert_eq!(s.tables[0].columns[0].data_type, "FANCY GEO TYPE");
        assert_eq!(s.tables[0].columns[1].data_type, "");
    }

    #[test]
    fn errors_are_reported() {
        assert!(matches!(
            parse_ddl("d", "CREATE TABLE a (x int); CREATE TABLE A (y int);"),
            Err(Error::DuplicateTable(_))
        ));
        assert!(matches!(
            parse_ddl("d", "CREATE TABLE a (x int REFERENCES missing(id));"),
            Err(Error::UnresolvedForeignKey { .. })
        ));
        assert!(matches!(
            parse_ddl("d", "CREATE TABLE a (x int); CREATE TABLE b (y int, FOREIGN KEY (y) REFERENCES a(nope));"),
            Err(Error::UnresolvedForeignKey { .. })
        ));
        match parse_ddl("d", "CREATE TABLE a (\n  x int,\n  y int") {
            Err(Error::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(matches!(
            parse_ddl("d", "CREATE TABLE a ('unterminated"),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn skips_document_noise() {
        let s = parse_ddl(
            "d",
            "Database: d:\nTable: a\nCREATE TABLE \"a\" (x INT)\nTable Description: it's a table\nCOLUMN 1 column_name: x\n",
        )
        .unwrap();
        assert_eq!(s.tables.len(), 1);
    }
}
