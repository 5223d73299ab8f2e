use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{ColumnRef, DatabaseSchema};
use crate::util::normalize_ws;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    /// The span names the column itself.
    Column,
    /// The span is a value stored in the column.
    Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "snake_case")]
pub enum MappingTarget {
    Column {
        table: String,
        column: String,
        column_ref: ColumnRef,
        kind: MatchKind,
    },
    NotMapped,
}

impl MappingTarget {
    pub fn column_ref(&self) -> Option<ColumnRef> {
        match self {
            Self::Column { column_ref, .. } => Some(*column_ref),
            Self::NotMapped => None,
        }
    }
}

/// A question span and every column it may refer to. A span with no
/// candidate column holds the single target [`MappingTarget::NotMapped`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseMapping {
    pub phrase: String,
    pub candidates: Vec<MappingTarget>,
}

impl PhraseMapping {
    pub fn not_mapped(phrase: impl Into<String>) -> Self {
        Self {
            phrase: phrase.into(),
            candidates: vec![MappingTarget::NotMapped],
        }
    }

    pub fn is_mapped(&self) -> bool {
        self.candidates.iter().any(|c| c.column_ref().is_some())
    }

    pub fn column_refs(&self) -> impl Iterator<Item = ColumnRef> + '_ {
        self.candidates.iter().filter_map(MappingTarget::column_ref)
    }

    /// Distinct tables among the candidates.
    pub fn tables(&self) -> BTreeSet<usize> {
        self.column_refs().map(|c| c.table_index).collect()
    }
}

const ARROWS: &[&str] = &["->", "→", "=>"];

fn strip_bullet(line: &str) -> &str {
    let line = line.trim();
    for prefix in ["- ", "* ", "• "] {
        if let Some(rest) = line.strip_prefix(prefix) {
            return rest.trim_start();
        }
    }
    let digits = line.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &line[digits..];
        if let Some(rest) = rest.strip_prefix(". ").or_else(|| rest.strip_prefix(") ")) {
            return rest.trim_start();
        }
    }
    line
}

fn unquote(s: &str) -> &str {
    s.trim()
        .trim_matches(|c| matches!(c, '"' | '\'' | '`' | '*' | '[' | ']'))
        .trim()
}

fn is_not_mapped(s: &str) -> bool {
    let s = s.trim_end_matches('.');
    ["N/A", "NA", "NONE", "N.A"]
        .iter()
        .any(|n| s.eq_ignore_ascii_case(n))
}

fn resolve_target(raw: &str, schema: &DatabaseSchema) -> Option<MappingTarget> {
    let mut text = raw.trim().trim_end_matches('.').trim();
    let mut kind = MatchKind::Column;
    let lower = text.to_ascii_lowercase();
    if lower.ends_with("(value)") {
        kind = MatchKind::Value;
        text = text[..text.len() - "(value)".len()].trim();
    }
    let text = unquote(text);
    if is_not_mapped(text) {
        return Some(MappingTarget::NotMapped);
    }
    let column_ref = if text.contains('.') {
        // try every dot so names that contain dots still resolve
        text.match_indices('.')
            .find_map(|(i, _)| schema.resolve(unquote(&text[..i]), unquote(&text[i + 1..])))
    } else {
        let hits: Vec<ColumnRef> = schema
            .tables
            .iter()
            .enumerate()
            .filter_map(|(t, table)| table.column_index(text).map(|c| ColumnRef::new(t, c)))
            .collect();
        (hits.len() == 1).then(|| hits[0])
    };
    let Some(column_ref) = column_ref else {
        log::warn!("{}: dropping unknown column `{text}`", schema.db_id);
        return None;
    };
    let table = &schema.tables[column_ref.table_index];
    Some(MappingTarget::Column {
        table: table.name.clone(),
        column: table.columns[column_ref.column_index].name.clone(),
        column_ref,
        kind,
    })
}

/// Parses `span -> Table.Column` lines.
///
/// Spans must occur in `query` (case and whitespace insensitive); others are
/// dropped. Several targets may be comma separated on one line, and repeated
/// spans are merged in first-seen order. An empty answer means the question
/// has no spans; a non-empty answer without one usable line is a format error.
pub fn parse_phrase_mappings(
    text: &str,
    query: &str,
    schema: &DatabaseSchema,
) -> Result<Vec<PhraseMapping>> {
    let haystack = normalize_ws(query).to_lowercase();
    let mut out: Vec<PhraseMapping> = Vec::new();
    let mut saw_line = false;
    for line in text.lines() {
        let line = strip_bullet(line);
        if line.is_empty() || line.starts_with("```") {
            continue;
        }
        let Some((at, arrow)) = ARROWS
            .iter()
            .filter_map(|a| line.find(a).map(|i| (i, *a)))
            .min()
        else {
            continue;
        };
        let phrase = normalize_ws(unquote(&line[..at]));
        let rhs = line[at + arrow.len()..].trim();
        if phrase.is_empty() || rhs.is_empty() {
            continue;
        }
        saw_line = true;
        if !haystack.contains(&phrase.to_lowercase()) {
            log::warn!("{}: span `{phrase}` is not in the question", schema.db_id);
            continue;
        }
        let targets: Vec<MappingTarget> = rhs
            .split([',', ';'])
            .filter_map(|t| resolve_target(t, schema))
            .collect();
        let key = phrase.to_lowercase();
        let idx = match out.iter().position(|m| m.phrase.to_lowercase() == key) {
            Some(i) => i,
            None => {
                out.push(PhraseMapping {
                    phrase,
                    candidates: Vec::new(),
                });
                out.len() - 1
            }
        };
        let entry = &mut out[idx];
        for t in targets {
            if !entry.candidates.contains(&t) {
                entry.candidates.push(t);
            }
        }
    }
    if !saw_line && !text.trim().is_empty() {
        return Err(Error::Format(
            "no `span -> Table.Column` lines in the answer".into(),
        ));
    }
    for m in &mut out {
        if m.is_mapped() {
            m.candidates.retain(|c| c.column_ref().is_some());
        } else {
            m.candidates = vec![MappingTarget::NotMapped];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::fixtures;
    use proptest::prelude::*;

    const QUERY: &str = "Find the names of students who participate in Canoeing";

    #[test]
    fn worked_example() {
        let text = "students -> Student.student_name\nnames -> Student.student_name, Faculty.faculty_name\nCanoeing -> Activity.activity_name (value)\nparticipate -> Participates_in.student_id";
        let m = parse_phrase_mappings(text, QUERY, &fixtures::activity()).unwrap();
        assert_eq!(m.len(), 4);
        assert_eq!(m[1].tables(), BTreeSet::from([3, 4]));
        assert!(matches!(
            &m[2].candidates[0],
            MappingTarget::Column { table, kind: MatchKind::Value, .. } if table == "Activity"
        ));
    }

    #[test]
    fn noise_tolerated() {
        let text = "Here are the mappings:\n```\n- \"Students\" → student.STUDENT_NAME\n1. canoeing -> `Activity`.`activity_name` (VALUE)\n* names -> N/A\n```";
        let m = parse_phrase_mappings(text, QUERY, &fixtures::activity()).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m[0].phrase, "Students");
        assert!(
            matches!(&m[0].candidates[0], MappingTarget::Column { column, .. } if column == "student_name")
        );
        assert_eq!(m[2].candidates, vec![MappingTarget::NotMapped]);
    }

    #[test]
    fn merge_and_drop() {
        let text = "names -> N/A\nnames -> Student.student_name\nnames -> Student.student_name\nstudents -> Student.nickname\nteachers -> Faculty.faculty_name";
        let m = parse_phrase_mappings(text, QUERY, &fixtures::activity()).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].candidates.len(), 1);
        assert!(m[0].is_mapped());
        assert!(!m[1].is_mapped());
    }

    #[test]
    fn bare_column_names() {
        let m =
            parse_phrase_mappings("students -> student_id", QUERY, &fixtures::activity()).unwrap();
        assert!(!m[0].is_mapped());
        let m = parse_phrase_mappings("students -> student_name", QUERY, &fixtures::activity())
            .unwrap();
        assert_eq!(
            m[0].column_refs().collect::<Vec<_>>(),
            [ColumnRef::new(3, 0)]
        );
    }

    #[test]
    fn empty_and_garbage() {
        assert!(parse_phrase_mappings("  \n", QUERY, &fixtures::activity())
            .unwrap()
            .is_empty());
        assert!(matches!(
            parse_phrase_mappings(
                "I think the answer is Student",
                QUERY,
                &fixtures::activity()
            ),
            Err(Error::Format(_))
        ));
    }

    proptest! {
        #[test]
        fn total_and_consistent(text in "[a-zA-Z_.,>\\- \n]{0,120}") {
            if let Ok(ms) = parse_phrase_mappings(&text, QUERY, &fixtures::activity()) {
                for m in ms {
                    prop_assert!(!m.candidates.is_empty());
                    prop_assert!(QUERY.to_lowercase().contains(&m.phrase.to_lowercase()));
                    prop_assert!(m.is_mapped() || m.candidates == vec![MappingTarget::NotMapped]);
                }
            }
        }
    }
}
