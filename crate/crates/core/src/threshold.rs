//! Connectivity threshold of the one-dimensional geometric graph.
//!
//! On the line every Lp norm is `|u - v|`, and the graph with radius `r` is
//! connected exactly when no two consecutive sorted points are more than `r`
//! apart. The threshold is therefore the widest consecutive gap.

use crate::error::{domain, Result};
use crate::union_find::UnionFind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    MaxGap,
    GraphSearch,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdResult {
    pub r: f64,
    pub gap_left: f64,
    pub gap_right: f64,
    pub method: Method,
}

fn sorted_copy(points: &[f64]) -> Vec<f64> {
    let mut sorted = points.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    sorted
}

/// Leftmost widest gap over an already sorted slice.
fn widest_gap(sorted: &[f64]) -> (f64, f64, f64) {
    sorted.windows(2).fold((0.0, sorted[0], sorted[0]), |best, w| {
        let width = w[1] - w[0];
        if width > best.0 {
            (width, w[0], w[1])
        } else {
            best
        }
    })
}

pub fn connectivity_threshold(points: &[f64]) -> Result<ThresholdResult> {
    if points.is_empty() {
        return Err(domain("connectivity_threshold: empty point set"));
    }
    let sorted = sorted_copy(points);
    let (r, gap_left, gap_right) = widest_gap(&sorted);
    Ok(ThresholdResult {
        r,
        gap_left,
        gap_right,
        method: Method::MaxGap,
    })
}

/// Builds the geometric graph with closed adjacency `|u - v| <= r`
/// and checks that it has a single component.
pub fn is_connected(points: &[f64], r: f64) -> Result<bool> {
    if !(r > 0.0) {
        return Err(domain(format!("is_connected: radius must be positive, got {r}")));
    }
    if points.is_empty() {
        return Err(domain("is_connected: empty point set"));
    }
    Ok(components(points, r) == 1)
}

fn components(points: &[f64], r: f64) -> usize {
    // visit vertices by position so each edge list is a contiguous window
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_unstable_by(|&a, &b| points[a].total_cmp(&points[b]));
    let mut dsu = UnionFind::new(points.len());
    for (i, &u) in order.iter().enumerate() {
        for &v in &order[i + 1..] {
            if points[v] - points[u] > r {
                break;
            }
            dsu.union(u, v);
        }
    }
    dsu.count()
}

/// Threshold found by probing [`is_connected`] at every distinct
/// consecutive-gap value, smallest first.
pub fn threshold_by_search(points: &[f64]) -> Result<ThresholdResult> {
    if points.len() < 2 {
        return Err(domain("threshold_by_search: needs at least two points"));
    }
    let sorted = sorted_copy(points);
    let mut gaps: Vec<(f64, usize)> = sorted
        .windows(2)
        .enumerate()
        .map(|(i, w)| (w[1] - w[0], i))
        .collect();
    gaps.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut candidates: Vec<f64> = gaps.iter().map(|g| g.0).collect();
    candidates.dedup();
    for r in candidates {
        let connected = if r > 0.0 {
            is_connected(points, r)?
        } else {
            sorted.first() == sorted.last()
        };
        if connected {
            let left = gaps
                .iter()
                .filter(|g| g.0 == r)
                .map(|g| g.1)
                .min()
                .expect("candidate comes from a gap");
            return Ok(ThresholdResult {
                r,
                gap_left: sorted[left],
                gap_right: sorted[left + 1],
                method: Method::GraphSearch,
            });
        }
    }
    unreachable!("the widest gap always connects the graph")
}
