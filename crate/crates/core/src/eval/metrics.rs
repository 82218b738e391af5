//! Self-retrieval metrics.

/// Fraction of references whose own claim ranks within the top `k`.
/// Absent ranks count as misses.
pub fn recall_at_k(self_ranks: &[Option<usize>], k: usize) -> f64 {
    if self_ranks.is_empty() {
        return 0.0;
    }
    let hits = self_ranks
        .iter()
        .filter(|r| matches!(r, Some(rank) if *rank <= k))
        .count();
    hits as f64 / self_ranks.len() as f64
}

/// Mean of `1 / rank`; absent ranks contribute 0.
pub fn mean_reciprocal_rank(self_ranks: &[Option<usize>]) -> f64 {
    if self_ranks.is_empty() {
        return 0.0;
    }
    let total: f64 = self_ranks.iter().map(|r| r.map_or(0.0, |rank| 1.0 / rank as f64)).sum();
    total / self_ranks.len() as f64
}
