//! Staircase line sweeps over a chart.
//!
//! A sweep fills every node from a base node by marching along grid lines:
//! first along `order[0]` through the base, then along `order[1]` from every
//! node reached so far, and so on. Each node is reached by exactly one
//! axis-ordered path, so two sweeps with different orders agree only when the
//! underlying first-order system is compatible.

use crate::error::{Error, Result};
use crate::grid::GridChart;

/// Propagates a state from a node to its neighbour along one axis.
pub(crate) trait LineStep {
    type State: Clone;

    fn step(
        &self,
        node: usize,
        axis: usize,
        forward: bool,
        state: &Self::State,
    ) -> Result<Self::State>;
}

pub(crate) fn sweep<S: LineStep>(
    chart: &GridChart,
    base: &[usize],
    order: &[usize],
    init: S::State,
    stepper: &S,
) -> Result<Vec<S::State>> {
    let n = chart.dim();
    if order.len() != n {
        return Err(Error::Dimension(format!(
            "sweep order has {} axes, chart has {n}",
            order.len()
        )));
    }
    let base_node = chart.node(base)?;
    let mut states: Vec<Option<S::State>> = vec![None; chart.len()];
    states[base_node] = Some(init);
    for (m, &axis) in order.iter().enumerate() {
        let fixed = &order[m..];
        let seeds: Vec<usize> = (0..chart.len())
            .filter(|&p| fixed.iter().all(|&a| chart.axis_index(p, a) == base[a]))
            .collect();
        for seed in seeds {
            for forward in [true, false] {
                let mut p = seed;
                while let Some(q) = chart.step(p, axis, forward) {
                    let from = states[p]
                        .as_ref()
                        .expect("sweep visits seeds before their lines");
                    let next = stepper.step(p, axis, forward, from)?;
                    states[q] = Some(next);
                    p = q;
                }
            }
        }
    }
    Ok(states
        .into_iter()
        .map(|s| s.expect("staircase covers every node"))
        .collect())
}

pub(crate) fn natural_order(n: usize) -> Vec<usize> {
    (0..n).collect()
}

pub(crate) fn reversed_order(n: usize) -> Vec<usize> {
    (0..n).rev().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Counter;

    impl LineStep for Counter {
        type State = (usize, Vec<usize>);

        fn step(
            &self,
            _node: usize,
            axis: usize,
            _forward: bool,
            s: &Self::State,
        ) -> Result<Self::State> {
            let mut path = s.1.clone();
            if path.last() != Some(&axis) {
                path.push(axis);
            }
            Ok((s.0 + 1, path))
        }
    }

    #[test]
    fn covers_every_node_with_manhattan_paths() {
        let chart = GridChart::from_bounds(&[0.0; 3], &[1.0; 3], &[4, 3, 5]).unwrap();
        let base = vec![1, 2, 0];
        let out = sweep(&chart, &base, &[0, 1, 2], (0, vec![]), &Counter).unwrap();
        for (p, (steps, path)) in out.iter().enumerate() {
            let idx = chart.multi_index(p);
            let dist: usize = idx.iter().zip(&base).map(|(a, b)| a.abs_diff(*b)).sum();
            assert_eq!(*steps, dist);
            assert!(path.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
