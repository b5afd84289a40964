//! Regression trees (CART) with multi-output variance-reduction splits.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

/// Training inputs in feature-major layout plus one stable sort order per feature.
pub(crate) struct Presorted {
    n_rows: usize,
    cols: Vec<Vec<f64>>,
    sorted: Vec<Vec<u32>>,
}

impl Presorted {
    pub(crate) fn new(x: ArrayView2<f64>) -> Self {
        let cols: Vec<Vec<f64>> = x.columns().into_iter().map(|c| c.to_vec()).collect();
        let sorted = cols
            .iter()
            .map(|c| {
                let mut idx: Vec<u32> = (0..c.len() as u32).collect();
                idx.sort_by(|&i, &j| c[i as usize].total_cmp(&c[j as usize]).then(i.cmp(&j)));
                idx
            })
            .collect();
        Presorted {
            n_rows: x.nrows(),
            cols,
            sorted,
        }
    }

    pub(crate) fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub(crate) fn n_features(&self) -> usize {
        self.cols.len()
    }

    pub(crate) fn row_into(&self, i: usize, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.cols) {
            *o = c[i];
        }
    }
}

/// A fitted tree stored as parallel arrays. Leaves have `feature = -1` and
/// `left` pointing at their first value in `values`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    n_outputs: usize,
    feature: Vec<i32>,
    threshold: Vec<f64>,
    left: Vec<u32>,
    right: Vec<u32>,
    /// Total squared-error reduction of each split (0 for leaves).
    gain: Vec<f64>,
    /// Training samples reaching each node, counting bootstrap repeats.
    samples: Vec<u32>,
    values: Vec<f64>,
}

impl Tree {
    pub fn n_nodes(&self) -> usize {
        self.feature.len()
    }

    pub fn n_splits(&self) -> usize {
        self.feature.iter().filter(|&&f| f >= 0).count()
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    /// Leaf values for one input row.
    pub fn predict_row(&self, x: &[f64]) -> &[f64] {
        let mut node = 0;
        loop {
            let f = self.feature[node];
            if f < 0 {
                let start = self.left[node] as usize;
                return &self.values[start..start + self.n_outputs];
            }
            node = if x[f as usize] <= self.threshold[node] {
                self.left[node]
            } else {
                self.right[node]
            } as usize;
        }
    }

    /// Per-feature impurity decrease weighted by node sample fraction. The
    /// impurity of a node is its squared error averaged over samples and outputs.
    pub fn impurity_decrease(&self, n_features: usize) -> Vec<f64> {
        let mut imp = vec![0.0; n_features];
        let norm = self.samples.first().copied().unwrap_or(1).max(1) as f64 * self.n_outputs as f64;
        for (f, g) in self.feature.iter().zip(&self.gain) {
            if *f >= 0 {
                imp[*f as usize] += g / norm;
            }
        }
        imp
    }
}

struct Frame {
    lo: usize,
    hi: usize,
    depth: usize,
    parent: Option<(usize, bool)>,
}

/// Grows one tree on the rows `rows` (repeats allowed) with targets `y`
/// (row-major, `n_outputs` per row). Splits go to the lowest feature, then the
/// lowest threshold, among those with the largest squared-error reduction.
pub(crate) fn grow(
    data: &Presorted,
    y: &[f64],
    n_outputs: usize,
    rows: &[u32],
    max_depth: Option<usize>,
) -> Tree {
    let m = rows.len();
    let p = data.n_features();
    let k = n_outputs;

    // Slots are positions in `rows`; each feature keeps its slots sorted by value.
    let mut first_slot = vec![0u32; data.n_rows + 1];
    for &r in rows {
        first_slot[r as usize + 1] += 1;
    }
    for i in 0..data.n_rows {
        first_slot[i + 1] += first_slot[i];
    }
    let mut slots_by_row = vec![0u32; m];
    let mut fill = first_slot.clone();
    for (s, &r) in rows.iter().enumerate() {
        slots_by_row[fill[r as usize] as usize] = s as u32;
        fill[r as usize] += 1;
    }
    let mut orders: Vec<Vec<u32>> = data
        .sorted
        .iter()
        .map(|sorted| {
            let mut ord = Vec::with_capacity(m);
            for &r in sorted {
                let (a, b) = (first_slot[r as usize] as usize, first_slot[r as usize + 1] as usize);
                ord.extend_from_slice(&slots_by_row[a..b]);
            }
            ord
        })
        .collect();

    let yv = |s: u32| -> &[f64] {
        let r = rows[s as usize] as usize;
        &y[r * k..(r + 1) * k]
    };
    let xv = |f: usize, s: u32| data.cols[f][rows[s as usize] as usize];

    let mut tree = Tree {
        n_outputs: k,
        feature: Vec::new(),
        threshold: Vec::new(),
        left: Vec::new(),
        right: Vec::new(),
        gain: Vec::new(),
        samples: Vec::new(),
        values: Vec::new(),
    };
    let mut sum_t = vec![0.0; k];
    let mut sum_l = vec![0.0; k];
    let mut goes_left = vec![false; m];
    let mut scratch: Vec<u32> = Vec::with_capacity(m);
    let mut stack = vec![Frame {
        lo: 0,
        hi: m,
        depth: 0,
        parent: None,
    }];

    while let Some(frame) = stack.pop() {
        let Frame { lo, hi, depth, parent } = frame;
        let n = hi - lo;
        let node = tree.feature.len();
        if let Some((par, is_left)) = parent {
            if is_left {
                tree.left[par] = node as u32;
            } else {
                tree.right[par] = node as u32;
            }
        }
        let seg = &orders[0][lo..hi];
        sum_t.iter_mut().for_each(|v| *v = 0.0);
        for &s in seg {
            for (t, v) in sum_t.iter_mut().zip(yv(s)) {
                *t += v;
            }
        }
        let first = yv(seg[0]);
        let pure = seg.iter().all(|&s| yv(s) == first);

        let mut best: Option<(usize, f64, f64, usize)> = None; // feature, threshold, proxy, n_left
        if n >= 2 && !pure && max_depth.is_none_or(|d| depth < d) {
            let mut best_proxy = f64::NEG_INFINITY;
            for f in 0..p {
                let ord = &orders[f][lo..hi];
                sum_l.iter_mut().for_each(|v| *v = 0.0);
                for i in 0..n - 1 {
                    let s = ord[i];
                    for (l, v) in sum_l.iter_mut().zip(yv(s)) {
                        *l += v;
                    }
                    let (xc, xn) = (xv(f, s), xv(f, ord[i + 1]));
                    if xn <= xc {
                        continue;
                    }
                    let nl = (i + 1) as f64;
                    let nr = (n - i - 1) as f64;
                    let (mut pl, mut pr) = (0.0, 0.0);
                    for (l, t) in sum_l.iter().zip(&sum_t) {
                        pl += l * l;
                        pr += (t - l) * (t - l);
                    }
                    let proxy = pl / nl + pr / nr;
                    if proxy > best_proxy {
                        best_proxy = proxy;
                        let mid = 0.5 * (xc + xn);
                        let thr = if mid < xn { mid } else { xc };
                        best = Some((f, thr, proxy, i + 1));
                    }
                }
            }
        }

        tree.samples.push(n as u32);
        match best {
            None => {
                tree.feature.push(-1);
                tree.threshold.push(0.0);
                tree.left.push(tree.values.len() as u32);
                tree.right.push(0);
                tree.gain.push(0.0);
                tree.values.extend(sum_t.iter().map(|t| t / n as f64));
            }
            Some((f, thr, proxy, n_left)) => {
                let total: f64 = sum_t.iter().map(|t| t * t).sum::<f64>() / n as f64;
                tree.feature.push(f as i32);
                tree.threshold.push(thr);
                tree.left.push(0);
                tree.right.push(0);
                tree.gain.push((proxy - total).max(0.0));

                for &s in &orders[f][lo..hi] {
                    goes_left[s as usize] = xv(f, s) <= thr;
                }
                for ord in orders.iter_mut() {
                    let seg = &mut ord[lo..hi];
                    scratch.clear();
                    scratch.extend(seg.iter().filter(|&&s| goes_left[s as usize]));
                    scratch.extend(seg.iter().filter(|&&s| !goes_left[s as usize]));
                    seg.copy_from_slice(&scratch);
                }
                let mid = lo + n_left;
                stack.push(Frame {
                    lo: mid,
                    hi,
                    depth: depth + 1,
                    parent: Some((node, false)),
                });
                stack.push(Frame {
                    lo,
                    hi: mid,
                    depth: depth + 1,
                    parent: Some((node, true)),
                });
            }
        }
    }
    tree
}
