use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Parses an adjacency list such as `{0: {1, 2}; 1: {0, 3}}`.
///
/// Entry separators may be `,` or `;`, neighbor sets may use `{}` or `[]`,
/// and keys may be quoted, so JSON objects of arrays are accepted too. Text
/// before the first `{` is ignored. Indices must be below `table_count`.
pub fn parse_adjacency(text: &str, table_count: usize) -> Result<BTreeMap<usize, BTreeSet<usize>>> {
    let start = text
        .find('{')
        .ok_or_else(|| Error::Format("no adjacency list found".into()))?;
    let mut s = Scanner {
        chars: text[start..].chars().collect(),
        pos: 0,
    };
    let mut out = BTreeMap::new();
    s.expect('{')?;
    loop {
        s.skip_separators();
        if s.eat('}') {
            break;
        }
        let key = s.number()?;
        s.skip_ws();
        s.expect(':')?;
        s.skip_ws();
        let close = if s.eat('{') {
            '}'
        } else if s.eat('[') {
            ']'
        } else {
            return Err(Error::Format(format!(
                "expected a neighbor set after `{key}:`"
            )));
        };
        let mut neighbors = BTreeSet::new();
        loop {
            s.skip_separators();
            if s.eat(close) {
                break;
            }
            let n = s.number()?;
            check(n, table_count)?;
            neighbors.insert(n);
        }
        check(key, table_count)?;
        out.entry(key)
            .or_insert_with(BTreeSet::new)
            .extend(neighbors);
    }
    Ok(out)
}

fn check(index: usize, table_count: usize) -> Result<()> {
    if index < table_count {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange {
            what: "table",
            index,
            limit: table_count,
        })
    }
}

struct Scanner {
    chars: Vec<char>,
    pos: usize,
}

impl Scanner {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn skip_separators(&mut self) {
        while self
            .peek()
            .is_some_and(|c| c.is_whitespace() || c == ',' || c == ';')
        {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::Format(match self.peek() {
                Some(found) => format!("expected `{c}`, found `{found}`"),
                None => format!("expected `{c}`, found end of text"),
            }))
        }
    }

    fn number(&mut self) -> Result<usize> {
        let quote = self.peek().filter(|c| *c == '"' || *c == '\'');
        if quote.is_some() {
            self.pos += 1;
        }
        let begin = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if begin == self.pos {
            return Err(Error::Format(match self.peek() {
                Some(found) => format!("expected a table number, found `{found}`"),
                None => "expected a table number, found end of text".into(),
            }));
        }
        let digits: String = self.chars[begin..self.pos].iter().collect();
        if let Some(q) = quote {
            self.expect(q)?;
        }
        digits
            .parse()
            .map_err(|_| Error::Format(format!("table number `{digits}` is too large")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn numbered_list_format() {
        let m =
            parse_adjacency("{0: {1, 2};\n1: {0, 3};\n2: {0, 4};\n3: {1};\n4: {2}}.", 5).unwrap();
        assert_eq!(m[&0], BTreeSet::from([1, 2]));
        assert_eq!(m[&4], BTreeSet::from([2]));
    }

    #[test]
    fn json_and_prose() {
        let m = parse_adjacency("Here you go:\n```json\n{\"0\": [1], \"1\": []}\n```", 2).unwrap();
        assert_eq!(m[&0], BTreeSet::from([1]));
        assert!(m[&1].is_empty());
    }

    #[test]
    fn malformed() {
        assert!(matches!(
            parse_adjacency("no braces", 3),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            parse_adjacency("{0: 1}", 3),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            parse_adjacency("{0: {1, 2}", 3),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            parse_adjacency("{a: {1}}", 3),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            parse_adjacency("{0: {99999999999999999999999}}", 3),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            parse_adjacency("{0: {3}}", 3),
            Err(Error::IndexOutOfRange { index: 3, .. })
        ));
        assert!(matches!(
            parse_adjacency("{7: {}}", 3),
            Err(Error::IndexOutOfRange { index: 7, .. })
        ));
    }

    proptest! {
        #[test]
        fn total_over_arbitrary_text(text in ".{0,80}", n in 0usize..6) {
            let _ = parse_adjacency(&text, n);
        }

        #[test]
        fn total_over_brace_soup(text in "[{}\\[\\]0-9:;, \"]{0,40}", n in 0usize..6) {
            if let Ok(m) = parse_adjacency(&text, n) {
                prop_assert!(m.iter().all(|(k, v)| *k < n && v.iter().all(|j| *j < n)));
            }
        }
    }
}
