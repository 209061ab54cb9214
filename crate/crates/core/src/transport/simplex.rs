//! Transportation simplex on a dense cost matrix.
//!
//! The basis is a spanning tree over row and column nodes with `n + m - 1`
//! cells (degenerate zero cells included). Dual potentials are recomputed by
//! a tree walk each pivot; the entering cell is the most negative reduced
//! cost, switching permanently to Bland's rule after a long streak of
//! degenerate pivots so the method cannot cycle.

/// Reduced costs above `-PIVOT_TOL * scale` count as nonnegative.
const PIVOT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Cell {
    i: usize,
    j: usize,
}

/// Dense `n x m` cost matrix in row-major order.
pub struct CostMatrix {
    pub n: usize,
    pub m: usize,
    pub data: Vec<f64>,
}

impl CostMatrix {
    pub fn build(n: usize, m: usize, c: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * m);
        for i in 0..n {
            for j in 0..m {
                data.push(c(i, j));
            }
        }
        CostMatrix { n, m, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }
}

/// Northwest-corner basic feasible solution. On sorted one-dimensional
/// supports this is the monotone (quantile) coupling.
pub fn northwest_corner(a: &[f64], b: &[f64]) -> Vec<(usize, usize, f64)> {
    let (n, m) = (a.len(), b.len());
    let mut ra = a.to_vec();
    let mut rb = b.to_vec();
    let mut cells = Vec::with_capacity(n + m - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        let last = i == n - 1 && j == m - 1;
        let q = if last { ra[i].max(rb[j]).max(0.0) } else { ra[i].min(rb[j]).max(0.0) };
        cells.push((i, j, q));
        ra[i] -= q;
        rb[j] -= q;
        if last {
            break;
        }
        if i == n - 1 {
            j += 1;
        } else if j == m - 1 || ra[i] <= rb[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    cells
}

struct Tree {
    // adjacency over nodes: rows 0..n, columns n..n+m; entries are basis slots
    adj: Vec<Vec<usize>>,
}

impl Tree {
    fn build(n: usize, m: usize, basis: &[Cell]) -> Self {
        let mut adj = vec![Vec::with_capacity(4); n + m];
        for (k, c) in basis.iter().enumerate() {
            adj[c.i].push(k);
            adj[n + c.j].push(k);
        }
        Tree { adj }
    }
}

fn other_end(c: Cell, node: usize, n: usize) -> usize {
    if node < n {
        n + c.j
    } else {
        c.i
    }
}

fn potentials(cost: &CostMatrix, basis: &[Cell], tree: &Tree, u: &mut [f64], v: &mut [f64]) {
    let n = cost.n;
    let mut seen = vec![false; n + cost.m];
    let mut stack = vec![0usize];
    seen[0] = true;
    u[0] = 0.0;
    while let Some(node) = stack.pop() {
        for &k in &tree.adj[node] {
            let c = basis[k];
            let next = other_end(c, node, n);
            if seen[next] {
                continue;
            }
            seen[next] = true;
            if next >= n {
                v[c.j] = cost.at(c.i, c.j) - u[c.i];
            } else {
                u[c.i] = cost.at(c.i, c.j) - v[c.j];
            }
            stack.push(next);
        }
    }
}

/// Basis slots along the tree path from row node `i` to column node `j`.
fn tree_path(basis: &[Cell], tree: &Tree, n: usize, total: usize, i: usize, j: usize) -> Vec<usize> {
    let target = n + j;
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; total];
    let mut seen = vec![false; total];
    let mut stack = vec![i];
    seen[i] = true;
    while let Some(node) = stack.pop() {
        if node == target {
            break;
        }
        for &k in &tree.adj[node] {
            let next = other_end(basis[k], node, n);
            if !seen[next] {
                seen[next] = true;
                parent[next] = Some((node, k));
                stack.push(next);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = target;
    while node != i {
        let (prev, k) = parent[node].expect("basis is a spanning tree");
        path.push(k);
        node = prev;
    }
    path.reverse();
    path
}

/// Optimal plan as a list of `(row, col, mass)` basic cells.
pub fn solve(a: &[f64], b: &[f64], cost: &CostMatrix) -> Vec<(usize, usize, f64)> {
    let (n, m) = (a.len(), b.len());
    debug_assert_eq!((n, m), (cost.n, cost.m));
    let init = northwest_corner(a, b);
    if n == 1 || m == 1 {
        return init;
    }
    let mut basis: Vec<Cell> = init.iter().map(|&(i, j, _)| Cell { i, j }).collect();
    let mut x: Vec<f64> = init.iter().map(|&(_, _, q)| q).collect();
    let mut in_basis = vec![false; n * m];
    for c in &basis {
        in_basis[c.i * m + c.j] = true;
    }

    let scale = cost.data.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
    let tol = PIVOT_TOL * scale;
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; m];
    let mut degenerate_streak = 0usize;
    let mut bland = false;
    let streak_limit = 2 * (n + m);

    loop {
        let tree = Tree::build(n, m, &basis);
        potentials(cost, &basis, &tree, &mut u, &mut v);

        let mut entering: Option<(Cell, f64)> = None;
        'scan: for i in 0..n {
            for j in 0..m {
                if in_basis[i * m + j] {
                    continue;
                }
                let d = cost.at(i, j) - u[i] - v[j];
                if d < -tol {
                    if bland {
                        entering = Some((Cell { i, j }, d));
                        break 'scan;
                    }
                    if entering.is_none_or(|(_, best)| d < best) {
                        entering = Some((Cell { i, j }, d));
                    }
                }
            }
        }
        let Some((enter, _)) = entering else {
            break;
        };

        let path = tree_path(&basis, &tree, n, n + m, enter.i, enter.j);
        // odd positions along the path (0-based even indices) lose mass
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 != 0 {
                continue;
            }
            if x[k] < theta || (bland && x[k] == theta && basis[k] < basis[leave]) {
                theta = x[k];
                leave = k;
            }
        }
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                x[k] = (x[k] - theta).max(0.0);
            } else {
                x[k] += theta;
            }
        }
        let old = basis[leave];
        in_basis[old.i * m + old.j] = false;
        in_basis[enter.i * m + enter.j] = true;
        basis[leave] = enter;
        x[leave] = theta;

        if theta == 0.0 {
            degenerate_streak += 1;
            if degenerate_streak > streak_limit {
                bland = true;
            }
        } else {
            degenerate_streak = 0;
        }
    }

    basis.iter().zip(&x).map(|(c, &q)| (c.i, c.j, q)).collect()
}
