use crate::error::{Error, Result};
use crate::ranking::RankedList;

/// 1 when `gold` is among the first `k` items.
pub fn recall_at_k(ranked: &RankedList, gold: &str, k: usize) -> Result<u8> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    Ok(u8::from(ranked.rank_of(gold).is_some_and(|r| r <= k)))
}

/// With a single relevant database: `1 / rank`, or 0 when absent.
pub fn average_precision(ranked: &RankedList, gold: &str) -> f64 {
    ranked.rank_of(gold).map_or(0.0, |r| 1.0 / r as f64)
}

pub fn mean_average_precision<'a, I>(pairs: I) -> Result<f64>
where
    I: IntoIterator<Item = (&'a RankedList, &'a str)>,
{
    let (sum, count) = pairs.into_iter().fold((0.0, 0usize), |(s, c), (r, g)| {
        (s + average_precision(r, g), c + 1)
    });
    if count == 0 {
        return Err(Error::InvalidInput(
            "mean average precision of no queries".into(),
        ));
    }
    Ok(sum / count as f64)
}
