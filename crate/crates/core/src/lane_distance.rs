//! Threshold-bounded distance along the lane graph.
//!
//! A path runs either entirely along successor links or entirely along
//! predecessor links. Mixing directions would connect side-by-side lanes
//! through a shared successor, so it is not allowed.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::lane_graph::{LaneGraph, LaneIdx};
use crate::scalar::Scalar;

/// A position on a segment's centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanePoint<T> {
    pub segment: LaneIdx,
    pub s: T,
}

impl<T> LanePoint<T> {
    pub fn new(segment: LaneIdx, s: T) -> Self {
        Self { segment, s }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachResult<T> {
    pub reached: bool,
    /// Shortest along-lane distance, present only when `reached`.
    pub distance: Option<T>,
}

impl<T> ReachResult<T> {
    fn from_best(best: Option<T>) -> Self {
        Self {
            reached: best.is_some(),
            distance: best,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Backward,
}

/// Min-heap entry keyed on the distance at which a segment is entered.
struct Frontier<T> {
    entry: T,
    segment: LaneIdx,
}

impl<T: Scalar> PartialEq for Frontier<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for Frontier<T> {}
impl<T: Scalar> PartialOrd for Frontier<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for Frontier<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .entry
            .partial_cmp(&self.entry)
            .unwrap_or(Ordering::Equal)
            .then(other.segment.cmp(&self.segment))
    }
}

fn check_point<T: Scalar>(graph: &LaneGraph<T>, pt: &LanePoint<T>) -> Result<()> {
    let seg = graph.segment(pt.segment)?;
    if !(pt.s >= T::zero() && pt.s <= seg.length() + T::tolerance()) {
        return Err(Error::InvalidConfig(format!(
            "arc-length {} outside lane {} of length {}",
            pt.s,
            seg.id,
            seg.length()
        )));
    }
    Ok(())
}

/// Whether any of `targets` lies less than `threshold` along the lane graph
/// from `from`, and the shortest such distance.
///
/// Same segment: `|s_to - s_from|`. Forward through `m1..mn`:
/// `(len(from) - s_from) + sum len(mi) + s_to`. Backward mirrors that.
/// The search expands segments best-first by entry distance, never expands
/// past the threshold, and re-enters a segment only at a strictly smaller
/// entry distance, which also makes loops safe.
pub fn within_lane_distance<T: Scalar>(
    graph: &LaneGraph<T>,
    from: LanePoint<T>,
    targets: &[LanePoint<T>],
    threshold: T,
) -> Result<ReachResult<T>> {
    check_point(graph, &from)?;
    for t in targets {
        check_point(graph, t)?;
    }
    if threshold.is_nan() || threshold <= T::zero() {
        return Err(Error::InvalidConfig(format!("threshold must be positive, got {threshold}")));
    }
    let mut best: Option<T> = None;
    let mut offer = |d: T| {
        if d < threshold && best.is_none_or(|b| d < b) {
            best = Some(d);
        }
    };
    for t in targets.iter().filter(|t| t.segment == from.segment) {
        offer((t.s - from.s).abs());
    }
    for dir in [Direction::Forward, Direction::Backward] {
        if let Some(d) = directed_search(graph, from, targets, threshold, dir) {
            offer(d);
        }
    }
    Ok(ReachResult::from_best(best))
}

fn directed_search<T: Scalar>(
    graph: &LaneGraph<T>,
    from: LanePoint<T>,
    targets: &[LanePoint<T>],
    threshold: T,
    dir: Direction,
) -> Option<T> {
    let next = |idx: LaneIdx| match dir {
        Direction::Forward => graph[idx].successors(),
        Direction::Backward => graph[idx].predecessors(),
    };
    // distance from a segment's entry point to position s on it
    let inside = |idx: LaneIdx, s: T| match dir {
        Direction::Forward => s,
        Direction::Backward => graph[idx].length() - s,
    };
    let exit_start = match dir {
        Direction::Forward => graph[from.segment].length() - from.s,
        Direction::Backward => from.s,
    };

    let mut best_entry: Vec<Option<T>> = vec![None; graph.len()];
    let mut heap = BinaryHeap::new();
    let push = |heap: &mut BinaryHeap<Frontier<T>>, best_entry: &mut Vec<Option<T>>, seg: LaneIdx, entry: T| {
        if entry < threshold && best_entry[seg.0].is_none_or(|b| entry < b) {
            best_entry[seg.0] = Some(entry);
            heap.push(Frontier { entry, segment: seg });
        }
    };
    for &n in next(from.segment) {
        push(&mut heap, &mut best_entry, n, exit_start);
    }

    let mut best: Option<T> = None;
    while let Some(Frontier { entry, segment }) = heap.pop() {
        if best_entry[segment.0].is_some_and(|b| entry > b) {
            continue;
        }
        if best.is_some_and(|b| entry >= b) {
            break;
        }
        for t in targets.iter().filter(|t| t.segment == segment) {
            let d = entry + inside(segment, t.s);
            if d < threshold && best.is_none_or(|b| d < b) {
                best = Some(d);
            }
        }
        let exit = entry + graph[segment].length();
        for &n in next(segment) {
            push(&mut heap, &mut best_entry, n, exit);
        }
    }
    best
}

/// Exhaustive reference for [`within_lane_distance`]: enumerates every
/// monotone path whose accumulated length stays within `cap` and returns the
/// exact minimum distance, or `None` when no path qualifies.
pub fn oracle_lane_distance<T: Scalar>(
    graph: &LaneGraph<T>,
    from: LanePoint<T>,
    to: LanePoint<T>,
    cap: T,
) -> Result<Option<T>> {
    check_point(graph, &from)?;
    check_point(graph, &to)?;
    if cap.is_nan() || cap <= T::zero() {
        return Err(Error::InvalidConfig(format!("cap must be positive, got {cap}")));
    }
    let mut found: Vec<T> = Vec::new();
    if from.segment == to.segment {
        found.push((to.s - from.s).abs());
    }
    // forward
    enumerate(graph, from.segment, graph[from.segment].length() - from.s, cap, true, &mut |seg, acc| {
        if seg == to.segment {
            found.push(acc + to.s);
        }
    });
    // backward
    enumerate(graph, from.segment, from.s, cap, false, &mut |seg, acc| {
        if seg == to.segment {
            found.push(acc + (graph[seg].length() - to.s));
        }
    });
    Ok(found.into_iter().filter(|&d| d <= cap).reduce(T::min))
}

/// Depth-first walk over every path from `at`, calling `visit(segment, acc)`
/// for each entered segment with the distance travelled up to its entry.
fn enumerate<T: Scalar>(
    graph: &LaneGraph<T>,
    at: LaneIdx,
    acc: T,
    cap: T,
    forward: bool,
    visit: &mut dyn FnMut(LaneIdx, T),
) {
    if acc > cap {
        return;
    }
    let links = if forward {
        graph[at].successors()
    } else {
        graph[at].predecessors()
    };
    for &n in links {
        visit(n, acc);
        enumerate(graph, n, acc + graph[n].length(), cap, forward, visit);
    }
}
