//! Slice kernels shared by the distances and their gradients.

use rayon::prelude::*;

use super::EmpiricalMeasure;
use crate::ot1d::{sorted_uniform_pow, weighted_pow_with, Order, Scratch1D};
use crate::sort::{sorted_into, SortScratch};
use crate::sphere::embed_into;

/// How sphere points are carried into the space that gets sliced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Lift {
    /// Capped stereographic projection followed by `h1` (ℝ^d).
    Embed { eps: f64 },
    /// Ambient coordinates (ℝ^{d+1}).
    Identity,
}

/// Points in the sliced space together with their masses.
#[derive(Debug, Clone)]
pub(crate) struct Lifted {
    pub k: usize,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub uniform: bool,
}

impl Lifted {
    pub fn len(&self) -> usize {
        self.weights.len()
    }
}

pub(crate) fn lift_coords(coords: &[f64], m: usize, lift: Lift) -> Vec<f64> {
    match lift {
        Lift::Identity => coords.to_vec(),
        Lift::Embed { eps } => {
            let d = m - 1;
            let n = coords.len() / m;
            let mut out = vec![0.0; n * d];
            for (x, o) in coords.chunks_exact(m).zip(out.chunks_exact_mut(d)) {
                embed_into(x, eps, o);
            }
            out
        }
    }
}

pub(crate) fn lift_measure(m: &EmpiricalMeasure, coords: Option<&[f64]>, lift: Lift) -> Lifted {
    let coords = coords.unwrap_or(m.coords());
    let values = lift_coords(coords, m.ambient_dim(), lift);
    let k = match lift {
        Lift::Embed { .. } => m.dim(),
        Lift::Identity => m.ambient_dim(),
    };
    Lifted { k, values, weights: m.weights().to_vec(), uniform: m.is_uniform() }
}

#[inline]
pub(crate) fn project(values: &[f64], k: usize, theta: &[f64], out: &mut Vec<f64>) {
    out.clear();
    match k {
        2 => out.extend(values.chunks_exact(2).map(|x| x[0] * theta[0] + x[1] * theta[1])),
        3 => out.extend(
            values
                .chunks_exact(3)
                .map(|x| x[0] * theta[0] + x[1] * theta[1] + x[2] * theta[2]),
        ),
        _ => out.extend(
            values
                .chunks_exact(k)
                .map(|x| x.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>()),
        ),
    }
}

#[derive(Debug, Default)]
pub(crate) struct SliceScratch {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub su: Vec<f64>,
    pub sv: Vec<f64>,
    pub perm_u: Vec<u32>,
    pub perm_v: Vec<u32>,
    pub terms: Vec<f64>,
    pub sort: SortScratch,
    pub one_d: Scratch1D,
}

/// Visits the monotone coupling of two sorted uniform samples of sizes `n`
/// and `m` as `(i, j, mass)` segments.
#[inline]
pub(crate) fn for_each_uniform_segment(n: usize, m: usize, mut f: impl FnMut(usize, usize, f64)) {
    if n == m {
        let w = 1.0 / n as f64;
        for i in 0..n {
            f(i, i, w);
        }
        return;
    }
    // Breakpoints in units of 1/(n m): source atom i ends at (i+1) m,
    // target atom j ends at (j+1) n.
    let scale = 1.0 / (n as f64 * m as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut t = 0usize;
    while i < n && j < m {
        let end_i = (i + 1) * m;
        let end_j = (j + 1) * n;
        let next = end_i.min(end_j);
        f(i, j, (next - t) as f64 * scale);
        t = next;
        if end_i == next {
            i += 1;
        }
        if end_j == next {
            j += 1;
        }
    }
}

/// `W_p^p` between the slices of `a` and `b` along `theta`.
pub(crate) fn slice_cost(a: &Lifted, b: &Lifted, theta: &[f64], p: Order, s: &mut SliceScratch) -> f64 {
    project(&a.values, a.k, theta, &mut s.u);
    project(&b.values, b.k, theta, &mut s.v);
    if a.uniform && b.uniform {
        sorted_into(&s.u, &mut s.su, &mut s.perm_u, &mut s.sort);
        sorted_into(&s.v, &mut s.sv, &mut s.perm_v, &mut s.sort);
        if a.len() == b.len() {
            sorted_uniform_pow(&s.su, &s.sv, p)
        } else {
            let (su, sv) = (&s.su, &s.sv);
            let mut acc = 0.0;
            for_each_uniform_segment(su.len(), sv.len(), |i, j, w| acc += w * p.cost(su[i] - sv[j]));
            acc
        }
    } else {
        weighted_pow_with(&s.u, &a.weights, &s.v, &b.weights, p, &mut s.one_d)
    }
}

/// Per-slice `W_p^p` for each `(a, b, directions)` job group, in order.
pub(crate) fn slice_costs_many(groups: &[(&Lifted, &Lifted, &[f64])], p: Order) -> Vec<Vec<f64>> {
    let jobs: Vec<(usize, usize)> = groups
        .iter()
        .enumerate()
        .flat_map(|(g, (a, _, dirs))| (0..dirs.len() / a.k).map(move |l| (g, l)))
        .collect();
    let flat: Vec<f64> = jobs
        .par_iter()
        .map_init(SliceScratch::default, |s, &(g, l)| {
            let (a, b, dirs) = groups[g];
            slice_cost(a, b, &dirs[l * a.k..(l + 1) * a.k], p, s)
        })
        .collect();
    let mut out = Vec::with_capacity(groups.len());
    let mut offset = 0;
    for (a, _, dirs) in groups {
        let l = dirs.len() / a.k;
        out.push(flat[offset..offset + l].to_vec());
        offset += l;
    }
    out
}

pub(crate) fn slice_costs(a: &Lifted, b: &Lifted, dirs: &[f64], p: Order) -> Vec<f64> {
    slice_costs_many(&[(a, b, dirs)], p).pop().unwrap()
}
