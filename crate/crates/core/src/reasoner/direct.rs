use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectRerankResult {
    pub query_id: String,
    /// Chosen databases, best first.
    pub top: Vec<String>,
}

/// Parses `Q <id>: a, b, c`.
///
/// The line may be decorated with brackets, quotes or asterisks. Exactly
/// `keep` distinct ids are required, all taken from `candidates`.
pub fn parse_direct_rerank(
    text: &str,
    query_id: &str,
    candidates: &[String],
    keep: usize,
) -> Result<DirectRerankResult> {
    let prefix = format!("Q {query_id}:");
    let lines: Vec<&str> = text
        .lines()
        .map(|l| l.trim().trim_matches('*').trim())
        .collect();
    let body = lines
        .iter()
        .find_map(|l| l.strip_prefix(&prefix))
        .or_else(|| {
            // tolerate a different question label
            lines
                .iter()
                .filter(|l| l.starts_with("Q "))
                .find_map(|l| l.split_once(':').map(|(_, rest)| rest))
        })
        .ok_or_else(|| Error::Format(format!("no `{prefix}` line in the answer")))?;
    let picks: Vec<String> = body
        .split(',')
        .map(|s| {
            s.trim()
                .trim_matches(|c| matches!(c, '[' | ']' | '"' | '\'' | '`' | '*' | '.'))
                .trim()
        })
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    if picks.len() != keep {
        return Err(Error::Format(format!(
            "expected {keep} databases, got {}",
            picks.len()
        )));
    }
    for (i, p) in picks.iter().enumerate() {
        if picks[..i].contains(p) {
            return Err(Error::Format(format!("`{p}` is listed twice")));
        }
        if !candidates.contains(p) {
            return Err(Error::NotACandidate(p.clone()));
        }
    }
    Ok(DirectRerankResult {
        query_id: query_id.to_string(),
        top: picks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids() -> Vec<String> {
        ["a", "b", "c", "d"].map(String::from).to_vec()
    }

    #[test]
    fn decorated() {
        let r = parse_direct_rerank("**Q 3: [c], [a], [d]**", "3", &ids(), 3).unwrap();
        assert_eq!(r.top, ["c", "a", "d"]);
        let r = parse_direct_rerank("Sure.\nQ 3: b, a, c.", "3", &ids(), 3).unwrap();
        assert_eq!(r.top, ["b", "a", "c"]);
    }

    #[test]
    fn violations() {
        assert!(matches!(
            parse_direct_rerank("b, a, c", "3", &ids(), 3),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            parse_direct_rerank("Q 3: a, a, c", "3", &ids(), 3),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            parse_direct_rerank("Q 3: a, b, c, d", "3", &ids(), 3),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            parse_direct_rerank("Q 3: a, b, z", "3", &ids(), 3),
            Err(Error::NotACandidate(_))
        ));
    }

    #[test]
    fn short_lists() {
        let two = ["a", "b"].map(String::from).to_vec();
        assert_eq!(
            parse_direct_rerank("Q x: b, a", "x", &two, 2).unwrap().top,
            ["b", "a"]
        );
    }
}
