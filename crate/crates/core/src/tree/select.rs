//! Per-tree feature selection by gain-ratio importance.

use rand::seq::index;
use rand::Rng;

use super::measure::{variable_importance, GainRatioResult};
use super::Hyperparams;
use crate::error::{Error, Result};

/// Picks the `m_selected` features a tree may split on: the `k_top` most
/// important features by normalized gain ratio (descending, ties by
/// ascending index), then `m_selected - k_top` drawn uniformly without
/// replacement from the rest.
///
/// `results` holds one evaluation per input feature, in feature order.
pub fn dimension_reduce<R: Rng + ?Sized>(
    results: &[GainRatioResult],
    h: &Hyperparams,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let n_features = results.len();
    if n_features == 0 {
        return Err(Error::InvalidArgument("no feature evaluations".into()));
    }
    let sel = h.selection(n_features)?;
    let vi = variable_importance(results);
    let mut ranked: Vec<usize> = (0..n_features).collect();
    ranked.sort_by(|&a, &b| vi[b].total_cmp(&vi[a]).then(a.cmp(&b)));

    let mut chosen: Vec<usize> = ranked[..sel.k_top]
        .iter()
        .map(|&pos| results[pos].feature_index)
        .collect();
    let mut rest: Vec<usize> = ranked[sel.k_top..]
        .iter()
        .map(|&pos| results[pos].feature_index)
        .collect();
    rest.sort_unstable();
    let extra = sel.m_selected - sel.k_top;
    chosen.extend(index::sample(rng, rest.len(), extra).into_iter().map(|i| rest[i]));
    Ok(chosen)
}
