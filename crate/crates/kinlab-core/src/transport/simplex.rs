//! Exact discrete optimal transport between weighted atom sets, via the
//! transportation (network) simplex on the complete bipartite graph.
//!
//! Weights are quantized to integers on a 2^40 grid (largest-remainder
//! rounding, both sides forced to the same total), so pivot arithmetic on
//! flows is exact and degeneracy handling is clean; costs stay `f64`. The
//! quantization perturbs the optimal value by at most `max_cost * 2^-40 * n`,
//! far below every tolerance this crate asserts.

use crate::{Error, Result};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

const SCALE: u64 = 1 << 40;
/// Reduced costs above `-EPS` count as nonnegative; see the module note on
/// the induced error bound.
const EPS: f64 = 1e-11;

/// Largest-remainder quantization of a positive weight vector to integers
/// summing exactly to `SCALE`.
fn quantize(ws: &[f64]) -> Result<Vec<u64>> {
    let total: f64 = ws.iter().sum();
    if !(total > 0.0) {
        return Err(Error::argument("weights must have positive total"));
    }
    let mut ints = Vec::with_capacity(ws.len());
    let mut rems: Vec<(f64, usize)> = Vec::with_capacity(ws.len());
    let mut acc: u64 = 0;
    for (i, &w) in ws.iter().enumerate() {
        if !(w > 0.0) {
            return Err(Error::argument("atom weights must be positive; drop zero atoms"));
        }
        let exact = w / total * SCALE as f64;
        let fl = libm::floor(exact);
        ints.push(fl as u64);
        acc += fl as u64;
        rems.push((exact - fl, i));
    }
    let missing = (SCALE - acc) as usize;
    if missing > ws.len() {
        return Err(Error::numeric("weight quantization failed"));
    }
    // Stable selection of the largest remainders.
    rems.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    for k in 0..missing {
        ints[rems[k].1] += 1;
    }
    Ok(ints)
}

/// Minimal total cost of moving `supply` onto `demand` under `cost(i, j)`.
/// Both weight vectors are normalized to total mass 1 internally.
pub fn min_cost_transport(
    supply: &[f64],
    demand: &[f64],
    cost: &dyn Fn(usize, usize) -> f64,
) -> Result<f64> {
    let n = supply.len();
    let m = demand.len();
    if n == 0 || m == 0 {
        return Err(Error::argument("transport needs nonempty supports"));
    }
    let s = quantize(supply)?;
    let d = quantize(demand)?;

    // Basic arcs of the current spanning tree.
    struct Arc {
        i: usize,
        j: usize,
        flow: u64,
    }

    // Northwest-corner start. Both sides total SCALE, so the loop fills
    // exactly n + m - 1 arcs (inserting zero-flow arcs on simultaneous
    // exhaustion) and ends with both cursors on the last atoms.
    let mut basis: Vec<Arc> = Vec::with_capacity(n + m - 1);
    {
        let mut rem_s = s.clone();
        let mut rem_d = d.clone();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let f = rem_s[i].min(rem_d[j]);
            basis.push(Arc { i, j, flow: f });
            rem_s[i] -= f;
            rem_d[j] -= f;
            if i + 1 == n && j + 1 == m {
                break;
            }
            if rem_s[i] == 0 && i + 1 < n {
                i += 1;
            } else {
                j += 1;
            }
        }
    }
    debug_assert_eq!(basis.len(), n + m - 1);

    let nodes = n + m;
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes]; // (neighbor, arc index)
    let mut pot = vec![0.0_f64; nodes]; // u on supply nodes, v on demand nodes
    let mut parent = vec![usize::MAX; nodes];
    let mut parent_arc = vec![usize::MAX; nodes];
    let mut depth = vec![0usize; nodes];
    let mut order = Vec::with_capacity(nodes);

    // Rebuilds adjacency, potentials and the rooted-tree arrays. O(n + m).
    let refresh = |basis: &[Arc],
                   adj: &mut Vec<Vec<(usize, usize)>>,
                   pot: &mut [f64],
                   parent: &mut [usize],
                   parent_arc: &mut [usize],
                   depth: &mut [usize],
                   order: &mut Vec<usize>|
     -> Result<()> {
        for a in adj.iter_mut() {
            a.clear();
        }
        for (idx, arc) in basis.iter().enumerate() {
            adj[arc.i].push((n + arc.j, idx));
            adj[n + arc.j].push((arc.i, idx));
        }
        order.clear();
        order.push(0);
        parent[0] = 0;
        parent_arc[0] = usize::MAX;
        depth[0] = 0;
        pot[0] = 0.0;
        let mut seen = vec![false; pot.len()];
        seen[0] = true;
        let mut head = 0;
        while head < order.len() {
            let vtx = order[head];
            head += 1;
            for &(nb, arc_idx) in &adj[vtx] {
                if seen[nb] {
                    continue;
                }
                seen[nb] = true;
                parent[nb] = vtx;
                parent_arc[nb] = arc_idx;
                depth[nb] = depth[vtx] + 1;
                let arc = &basis[arc_idx];
                let c = cost(arc.i, arc.j);
                // u_i + v_j = c on basic arcs.
                pot[nb] = c - pot[vtx];
                order.push(nb);
            }
        }
        if order.len() != pot.len() {
            return Err(Error::LinearSolve(format!(
                "transport basis lost connectivity ({} of {} nodes reached)",
                order.len(),
                pot.len()
            )));
        }
        Ok(())
    };

    refresh(
        &basis, &mut adj, &mut pot, &mut parent, &mut parent_arc, &mut depth, &mut order,
    )?;

    let total_arcs = n * m;
    let block = 4096usize.min(total_arcs);
    let mut cursor = 0usize;
    let max_pivots = 200 * nodes + 20_000;

    for _pivot in 0..max_pivots {
        // Block pricing: scan blocks until one contains a negative reduced
        // cost; take the most negative in that block.
        let mut enter: Option<(usize, usize, f64)> = None;
        let mut scanned = 0usize;
        while scanned < total_arcs {
            let mut best_in_block: Option<(usize, usize, f64)> = None;
            let end = block.min(total_arcs - scanned);
            for k in 0..end {
                let flat = (cursor + k) % total_arcs;
                let i = flat / m;
                let j = flat % m;
                let rc = cost(i, j) - pot[i] - pot[n + j];
                if rc < -EPS {
                    match best_in_block {
                        Some((_, _, b)) if b <= rc => {}
                        _ => best_in_block = Some((i, j, rc)),
                    }
                }
            }
            cursor = (cursor + end) % total_arcs;
            scanned += end;
            if best_in_block.is_some() {
                enter = best_in_block;
                break;
            }
        }
        let Some((ei, ej, _)) = enter else {
            // Optimal: no arc prices out.
            let mut total = 0.0;
            for arc in &basis {
                if arc.flow > 0 {
                    total += arc.flow as f64 / SCALE as f64 * cost(arc.i, arc.j);
                }
            }
            return Ok(total);
        };

        // Cycle: entering arc plus the tree path between its endpoints.
        // Collect the node path from supply node `ei` to demand node `ej`.
        let (mut a, mut b) = (ei, n + ej);
        let mut path_a = vec![a];
        let mut path_b = vec![b];
        while depth[a] > depth[b] {
            a = parent[a];
            path_a.push(a);
        }
        while depth[b] > depth[a] {
            b = parent[b];
            path_b.push(b);
        }
        while a != b {
            a = parent[a];
            b = parent[b];
            path_a.push(a);
            path_b.push(b);
        }
        // Full node cycle: ei .. lca .. ej (reverse of path_b sans lca).
        let mut cycle = path_a;
        for &node in path_b.iter().rev().skip(1) {
            cycle.push(node);
        }

        // The entering arc carries +theta in the cycle direction
        // ei -> ej -> (tree path back to ei). Our `cycle` lists the tree
        // path from ei to ej, i.e. the cycle traversed BACKWARD, so a pair
        // stepped supply -> demand here is traversed demand -> supply in the
        // cycle and takes -theta.
        let mut minus_arcs: Vec<usize> = Vec::new();
        let mut plus_arcs: Vec<usize> = Vec::new();
        for w in cycle.windows(2) {
            let (x, y) = (w[0], w[1]);
            let arc_idx = if parent[x] == y { parent_arc[x] } else { parent_arc[y] };
            debug_assert!(arc_idx != usize::MAX);
            let supply_to_demand = x < n;
            if supply_to_demand {
                minus_arcs.push(arc_idx);
            } else {
                plus_arcs.push(arc_idx);
            }
        }
        let theta = minus_arcs
            .iter()
            .map(|&idx| basis[idx].flow)
            .min()
            .unwrap_or(0);
        let leave = *minus_arcs
            .iter()
            .find(|&&idx| basis[idx].flow == theta)
            .ok_or_else(|| Error::LinearSolve("degenerate cycle without leaving arc".into()))?;
        for &idx in &plus_arcs {
            basis[idx].flow += theta;
        }
        for &idx in &minus_arcs {
            basis[idx].flow -= theta;
        }
        basis[leave] = Arc { i: ei, j: ej, flow: theta };
        refresh(
            &basis, &mut adj, &mut pot, &mut parent, &mut parent_arc, &mut depth, &mut order,
        )?;
    }
    Err(Error::LinearSolve(
        "transport simplex exceeded its pivot budget".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_hand_instance() {
        // Supplies (0.5, 0.5) at x = 0, 1; demands (0.5, 0.5) at x = 0, 1.
        // Identity transport is optimal: cost 0.
        let c = |i: usize, j: usize| if i == j { 0.0 } else { 1.0 };
        let v = min_cost_transport(&[0.5, 0.5], &[0.5, 0.5], &c).unwrap();
        assert!(v.abs() < 1e-9);
    }

    #[test]
    fn forced_split() {
        // One supply atom feeding two demand atoms at costs 1 and 3.
        let c = |_i: usize, j: usize| if j == 0 { 1.0 } else { 3.0 };
        let v = min_cost_transport(&[1.0], &[0.25, 0.75], &c).unwrap();
        assert!((v - (0.25 + 2.25)).abs() < 1e-9);
    }

    #[test]
    fn matches_assignment_on_uniform_weights() {
        // With equal counts and uniform weights the optimum is a permutation.
        let xs = [0.0, 0.3, 1.1, 2.0, 2.2];
        let ys = [0.1, 0.25, 0.9, 2.5, 2.05];
        let cost = |i: usize, j: usize| {
            let d: f64 = xs[i] - ys[j];
            d * d
        };
        let w = [0.2; 5];
        let simplex = min_cost_transport(&w, &w, &cost).unwrap();
        let perm = crate::transport::assignment::solve(5, &cost);
        let best: f64 = (0..5).map(|i| cost(i, perm[i]) * 0.2).sum();
        assert!((simplex - best).abs() < 1e-9, "{simplex} vs {best}");
    }

    #[test]
    fn rejects_zero_weights() {
        let c = |_: usize, _: usize| 1.0;
        assert!(min_cost_transport(&[1.0, 0.0], &[1.0], &c).is_err());
    }
}
