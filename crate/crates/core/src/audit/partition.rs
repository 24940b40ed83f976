use serde::Serialize;

use super::tree::{inner_fraction, BourgainTree, NodeKind};

/// Leaves whose first `k1` (L) steps contain exactly `j` inner steps.
#[derive(Clone, Debug, Serialize)]
pub struct InnerCount {
    pub j: usize,
    pub leaves: usize,
    pub volume: f64,
    /// `b(j; k1, p) |C_0|`
    pub binomial_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Partition {
    pub p: f64,
    pub k1: usize,
    pub k2: usize,
    pub k1_real: f64,
    pub k2_real: f64,
    pub less: Vec<usize>,
    pub inner: Vec<usize>,
    pub outer: Vec<usize>,
    pub sum_less: f64,
    pub sum_inner: f64,
    pub sum_outer: f64,
    /// `l^{k1(d-rho)} l^{k* rho}`
    pub less_bound: f64,
    /// `e^{-k1 I} l^{k* d}`
    pub outer_bound: f64,
    /// `I_p(p/2)`
    pub rate: f64,
    /// `(rho + d) / 2`
    pub rho_tilde: f64,
    /// `l^{(k*-1) rho_tilde} / 2`
    pub target: f64,
    /// some leaf changes class when `k1`, `k2` are not rounded down
    pub flooring_changes: bool,
    pub histogram: Vec<InnerCount>,
}

/// `I_p(a) = a log(a/p) + (1-a) log((1-a)/(1-p))`.
pub fn rate_function(p: f64, a: f64) -> f64 {
    let term = |x: f64, y: f64| if x == 0.0 { 0.0 } else { x * (x / y).ln() };
    term(a, p) + term(1.0 - a, 1.0 - p)
}

pub fn binomial_pmf(j: usize, n: usize, p: f64) -> f64 {
    if j > n {
        return 0.0;
    }
    let mut c = 1.0f64;
    for i in 0..j {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Less,
    Inner,
    Outer,
}

/// Inner flags of the children taken below each (L) ancestor of `leaf`.
fn low_steps(tree: &BourgainTree, leaf: usize) -> Vec<bool> {
    let mut path = vec![leaf];
    while let Some(p) = tree.nodes[*path.last().unwrap()].parent {
        path.push(p);
    }
    path.reverse();
    path.windows(2).filter(|w| tree.nodes[w[0]].kind == NodeKind::Low).map(|w| tree.nodes[w[1]].inner).collect()
}

fn classify(steps: &[bool], k1: usize, k2: f64) -> Class {
    if steps.len() < k1 {
        return Class::Less;
    }
    let inner = steps[..k1].iter().filter(|&&b| b).count();
    if inner as f64 >= k2 {
        Class::Inner
    } else {
        Class::Outer
    }
}

/// Splits the leaves by how many of the children taken after the first
/// `k1 = floor(k*/3)` (L) ancestors are inner, with `k2 = floor(p k1 / 2)`.
pub fn partition_leaves(tree: &BourgainTree) -> Partition {
    let d = tree.d;
    let (df, lf) = (d as f64, tree.l as f64);
    let p = inner_fraction(d);
    let k1_real = tree.k_star as f64 / 3.0;
    let k2_real = p / 2.0 * k1_real;
    let k1 = k1_real.floor() as usize;
    let k2 = k2_real.floor() as usize;
    let mut part = Partition {
        p,
        k1,
        k2,
        k1_real,
        k2_real,
        less: Vec::new(),
        inner: Vec::new(),
        outer: Vec::new(),
        sum_less: 0.0,
        sum_inner: 0.0,
        sum_outer: 0.0,
        less_bound: lf.powf(k1 as f64 * (df - tree.rho)) * lf.powf(tree.k_star as f64 * tree.rho),
        outer_bound: 0.0,
        rate: rate_function(p, p / 2.0),
        rho_tilde: (tree.rho + df) / 2.0,
        target: 0.0,
        flooring_changes: false,
        histogram: (0..=k1)
            .map(|j| InnerCount {
                j,
                leaves: 0,
                volume: 0.0,
                binomial_bound: binomial_pmf(j, k1, p) * tree.root().cube.volume(),
            })
            .collect(),
    };
    part.outer_bound = (-(k1 as f64) * part.rate).exp() * lf.powf(tree.k_star as f64 * df);
    part.target = 0.5 * lf.powf((tree.k_star as f64 - 1.0) * part.rho_tilde);
    for leaf in tree.leaves() {
        let steps = low_steps(tree, leaf);
        let vol = tree.nodes[leaf].cube.volume();
        let class = classify(&steps, k1, k2 as f64);
        let real_class = if (steps.len() as f64) < k1_real {
            Class::Less
        } else {
            classify(&steps, k1_real.ceil() as usize, k2_real)
        };
        part.flooring_changes |= class != real_class;
        if steps.len() >= k1 {
            let j = steps[..k1].iter().filter(|&&b| b).count();
            part.histogram[j].leaves += 1;
            part.histogram[j].volume += vol;
        }
        match class {
            Class::Less => {
                part.less.push(leaf);
                part.sum_less += vol;
            }
            Class::Inner => {
                part.inner.push(leaf);
                part.sum_inner += vol;
            }
            Class::Outer => {
                part.outer.push(leaf);
                part.sum_outer += vol;
            }
        }
    }
    part
}
