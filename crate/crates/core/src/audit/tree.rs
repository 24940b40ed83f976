use std::cmp::Reverse;
use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;

use super::{exact_measure, AuditConfig, Condition11};
use crate::dirichlet::HittingDistribution;
use crate::error::{invalid, Error, Result};
use crate::hausdorff::{m_rho, Covering};
use crate::lattice::{LadicCube, LatticeSet, OnionLayers, PeelMode, Point};

/// Outcome of the (H) and (L) tests on one cube of level at least 2.
#[derive(Clone, Debug, Serialize)]
pub struct CubeVerdict {
    pub cube: LadicCube,
    /// `m_rho(A ∩ C) < |C|^{rho/d}`
    pub h_holds: bool,
    /// `omega(C_lbar) <= decay_factor * omega(C)`
    pub l_holds: Option<bool>,
    pub content: f64,
    pub weight: f64,
    pub omega_c: Option<f64>,
    pub omega_lbar: Option<f64>,
    pub decay_factor: f64,
    pub mode: Option<PeelMode>,
    pub cover_size: usize,
}

impl CubeVerdict {
    /// `omega(C_lbar) / omega(C)`, the decay actually observed.
    pub fn observed_decay(&self) -> Option<f64> {
        match (self.omega_lbar, self.omega_c) {
            (Some(a), Some(b)) if b > 0.0 => Some(a / b),
            _ => None,
        }
    }
}

fn mass_in(nu: &HittingDistribution, keep: impl Fn(&Point) -> bool) -> f64 {
    nu.iter().filter(|(p, _)| keep(p)).map(|(_, w)| w).sum()
}

fn verdict_and_cover(
    c: &LadicCube,
    a: &LatticeSet,
    nu: &HittingDistribution,
    config: &AuditConfig,
) -> Result<(CubeVerdict, Vec<LadicCube>)> {
    if c.level < 2 {
        return Err(Error::NoSubcubeStructure(c.level));
    }
    let inside = a.filter(|p| c.contains(p));
    let m = m_rho(&inside, c.branching, config.rho)?;
    let weight = c.content_weight(config.rho);
    let h_holds = m.value < weight;
    let cover = match m.covering {
        Covering::Cubes(v) => v,
        Covering::Balls(_) => unreachable!("l-adic content yields cubes"),
    };
    let onion = OnionLayers::peel(c, &nu.start)?;
    let omega_c = mass_in(nu, |p| c.contains(p));
    let omega_lbar = mass_in(nu, |p| onion.contains_point(p, onion.lbar));
    let decay_factor = config.decay_factor();
    let verdict = CubeVerdict {
        cube: c.clone(),
        h_holds,
        l_holds: Some(omega_lbar <= decay_factor * omega_c),
        content: m.value,
        weight,
        omega_c: Some(omega_c),
        omega_lbar: Some(omega_lbar),
        decay_factor,
        mode: Some(onion.mode),
        cover_size: cover.len(),
    };
    Ok((verdict, cover))
}

/// Evaluates (H) by the exact content program and (L) from the first-entrance
/// law `nu` of `A`, whose start plays the role of `x`.
pub fn classify_cube(c: &LadicCube, a: &LatticeSet, nu: &HittingDistribution, config: &AuditConfig) -> Result<CubeVerdict> {
    Ok(verdict_and_cover(c, a, nu, config)?.0)
}

#[derive(Clone, Debug)]
pub enum Expansion {
    /// (H): children are a cover of `A ∩ C` by smaller cubes
    High(Vec<LadicCube>),
    /// (L): children are all subcubes
    Low,
    /// neither test passed; children are all subcubes
    Neither,
}

/// Decides how a cube of level at least 2 is expanded.
pub trait Classifier: Sync {
    fn classify(&self, cube: &LadicCube) -> Result<(Expansion, Option<CubeVerdict>)>;

    /// `omega(C)`, when the classifier knows it.
    fn mass(&self, _cube: &LadicCube) -> Option<f64> {
        None
    }
}

pub struct MeasureClassifier {
    pub a: LatticeSet,
    pub nu: HittingDistribution,
    pub config: AuditConfig,
}

impl Classifier for MeasureClassifier {
    fn classify(&self, cube: &LadicCube) -> Result<(Expansion, Option<CubeVerdict>)> {
        let (v, cover) = verdict_and_cover(cube, &self.a, &self.nu, &self.config)?;
        let e = if v.h_holds {
            Expansion::High(cover)
        } else if v.l_holds == Some(true) {
            Expansion::Low
        } else {
            Expansion::Neither
        };
        Ok((e, Some(v)))
    }

    fn mass(&self, cube: &LadicCube) -> Option<f64> {
        Some(mass_in(&self.nu, |p| cube.contains(p)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    High,
    Low,
    Neither,
    /// level 0 or 1, not expanded
    Final,
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeNode {
    /// `(0, gamma_2, ..., gamma_k)`, children numbered from 1
    pub label: Vec<u32>,
    pub cube: LadicCube,
    pub kind: NodeKind,
    pub verdict: Option<CubeVerdict>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// marked inner by its (L) parent
    pub inner: bool,
    /// `omega(child) <= decay_factor omega(parent)` for inner children of (L) nodes
    pub decay_ok: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BourgainTree {
    pub l: u64,
    pub d: usize,
    pub k_star: u32,
    pub rho: f64,
    /// added to the input coordinates to place the set in the root cube
    pub shift: Point,
    pub start: Point,
    pub inner_per_low: usize,
    pub nodes: Vec<TreeNode>,
    pub condition_11: Option<Condition11>,
    pub warnings: Vec<String>,
}

/// `p = (2/3)^d - (1/2)^d`.
pub fn inner_fraction(d: usize) -> f64 {
    (2.0f64 / 3.0).powi(d as i32) - 0.5f64.powi(d as i32)
}

impl BourgainTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].kind == NodeKind::Final).collect()
    }

    pub fn counterexamples(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].kind == NodeKind::Neither).collect()
    }

    pub fn decay_violations(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].decay_ok == Some(false)).collect()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.label.len()).max().unwrap_or(0)
    }

    /// Number of leaves containing `p`, found by descending from the root.
    pub fn leaf_multiplicity(&self, p: &Point) -> usize {
        fn walk(t: &BourgainTree, i: usize, p: &Point) -> usize {
            let n = &t.nodes[i];
            if !n.cube.contains(p) {
                return 0;
            }
            if n.kind == NodeKind::Final {
                return 1;
            }
            n.children.iter().map(|&c| walk(t, c, p)).sum()
        }
        walk(self, 0, p)
    }

    /// Structural invariants; each failure is described in one string.
    pub fn check_invariants(&self, a: &LatticeSet) -> Vec<String> {
        let mut bad = Vec::new();
        let shifted = a.translate(&self.shift);
        for p in shifted.iter() {
            let m = self.leaf_multiplicity(p);
            if m != 1 {
                bad.push(format!("point {p} lies in {m} leaves"));
            }
        }
        let ld = (self.l as usize).pow(self.d as u32);
        for (i, n) in self.nodes.iter().enumerate() {
            if n.label.len() > self.k_star as usize + 1 {
                bad.push(format!("node {i} is deeper than k*"));
            }
            let kids: Vec<&TreeNode> = n.children.iter().map(|&c| &self.nodes[c]).collect();
            if kids.iter().any(|k| !n.cube.contains_cube(&k.cube) || k.cube.level >= n.cube.level) {
                bad.push(format!("node {i} has a child outside it"));
            }
            match n.kind {
                NodeKind::High => {
                    let s: f64 = kids.iter().map(|k| k.cube.content_weight(self.rho)).sum();
                    if !(s < n.cube.content_weight(self.rho)) && !kids.is_empty() {
                        bad.push(format!("(H) node {i} children weigh {s}"));
                    }
                }
                NodeKind::Low | NodeKind::Neither => {
                    if kids.len() != ld {
                        bad.push(format!("node {i} has {} children, expected {ld}", kids.len()));
                    }
                    let inner = kids.iter().filter(|k| k.inner).count();
                    if n.kind == NodeKind::Low && inner != self.inner_per_low {
                        bad.push(format!("(L) node {i} marks {inner} inner children"));
                    }
                }
                NodeKind::Final => {
                    if !kids.is_empty() || n.cube.level > 1 {
                        bad.push(format!("final node {i} is expandable"));
                    }
                }
            }
        }
        bad
    }
}

fn ring(idx: &Point, l: i64) -> i64 {
    idx.coords().iter().map(|&i| i.min(l - 1 - i)).min().unwrap_or(0)
}

/// The `count` subcubes of `C_lbar` farthest (in Chebyshev shells) from the
/// faces of `c`, ties in lexicographic index order.
fn choose_inner(c: &LadicCube, children: &[LadicCube], start: &Point, count: usize) -> Result<Vec<bool>> {
    let onion = OnionLayers::peel(c, start)?;
    let l = c.branching as i64;
    let mut cand: Vec<(Reverse<i64>, usize)> = children
        .iter()
        .enumerate()
        .filter(|(_, ch)| onion.contains_point(&ch.corner, onion.lbar))
        .map(|(i, ch)| (Reverse(ring(&c.child_index(&ch.corner), l)), i))
        .collect();
    cand.sort();
    let mut marks = vec![false; children.len()];
    for &(_, i) in cand.iter().take(count) {
        marks[i] = true;
    }
    Ok(marks)
}

/// Builds the tree below `root`, classifying each cube of level at least 2.
pub fn build_tree_with(
    root: LadicCube,
    start: Point,
    rho: f64,
    classifier: &dyn Classifier,
    decay_factor: Option<f64>,
) -> Result<BourgainTree> {
    let d = root.dim();
    let l = root.branching;
    let inner_per_low = (inner_fraction(d) * (l as f64).powi(d as i32) + 1e-9).floor() as usize;
    let mut tree = BourgainTree {
        l,
        d,
        k_star: root.level,
        rho,
        shift: Point::origin(d),
        start: start.clone(),
        inner_per_low,
        nodes: vec![TreeNode {
            label: vec![0],
            cube: root,
            kind: NodeKind::Final,
            verdict: None,
            parent: None,
            children: Vec::new(),
            inner: false,
            decay_ok: None,
        }],
        condition_11: None,
        warnings: Vec::new(),
    };
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let cube = tree.nodes[i].cube.clone();
        if cube.level < 2 {
            continue;
        }
        let (expansion, verdict) = classifier.classify(&cube)?;
        let (kind, children) = match expansion {
            Expansion::High(cover) => (NodeKind::High, cover),
            Expansion::Low => (NodeKind::Low, cube.children()),
            Expansion::Neither => (NodeKind::Neither, cube.children()),
        };
        let inner = if kind == NodeKind::High {
            vec![false; children.len()]
        } else {
            let marks = choose_inner(&cube, &children, &start, inner_per_low)?;
            let got = marks.iter().filter(|&&m| m).count();
            if got < inner_per_low {
                tree.warnings.push(format!("cube {:?} has only {got} inner candidates", cube.corner));
            }
            marks
        };
        let parent_mass = if kind == NodeKind::Low { classifier.mass(&cube) } else { None };
        let child_masses: Vec<Option<f64>> = match (parent_mass, decay_factor) {
            (Some(_), Some(_)) => children
                .par_iter()
                .zip(&inner)
                .map(|(ch, &is_inner)| if is_inner { classifier.mass(ch) } else { None })
                .collect(),
            _ => vec![None; children.len()],
        };
        tree.nodes[i].kind = kind;
        tree.nodes[i].verdict = verdict;
        let label = tree.nodes[i].label.clone();
        for (k, (ch, is_inner)) in children.into_iter().zip(inner).enumerate() {
            let decay_ok = match (parent_mass, decay_factor, child_masses[k]) {
                (Some(pm), Some(f), Some(cm)) => Some(cm <= f * pm),
                _ => None,
            };
            let mut child_label = label.clone();
            child_label.push(k as u32 + 1);
            let idx = tree.nodes.len();
            tree.nodes.push(TreeNode {
                label: child_label,
                cube: ch,
                kind: NodeKind::Final,
                verdict: None,
                parent: Some(i),
                children: Vec::new(),
                inner: is_inner,
                decay_ok,
            });
            tree.nodes[i].children.push(idx);
            queue.push_back(idx);
        }
    }
    Ok(tree)
}

/// Tree for `A` seen from `x`. The set is translated so that its bounding box
/// starts at the origin; the root is the level-`k*` cube at the origin with
/// `l^{k*} >= n > l^{k*-1}` unless the config fixes `k*`.
pub fn build_tree(a: &LatticeSet, x: &Point, config: &AuditConfig) -> Result<BourgainTree> {
    let cond = config.validate()?;
    if a.dim() != config.d || x.dim() != config.d {
        return Err(Error::DimensionMismatch { expected: config.d, got: a.dim() });
    }
    let bb = a.bbox().ok_or(Error::EmptySet)?;
    let shift = Point::origin(config.d).sub(&bb.lo);
    let n = a.extent();
    let mut k_star = 0u32;
    while (config.l as i64).checked_pow(k_star).is_some_and(|s| s < n) {
        k_star += 1;
    }
    if let Some(k) = config.k_star {
        if (config.l as i64).checked_pow(k).is_none_or(|s| s < n) || k < k_star {
            return Err(invalid("k_star", format!("l^{k} does not contain a set of side {n}")));
        }
        k_star = k;
    }
    let shifted = a.translate(&shift);
    let start = x.add(&shift);
    let nu = exact_measure(&shifted, &start, config.solver_tolerance)?;
    let root = LadicCube::new(k_star, Point::origin(config.d), config.l)?;
    let classifier = MeasureClassifier { a: shifted, nu, config: config.clone() };
    let mut tree = build_tree_with(root, start, config.rho, &classifier, Some(config.decay_factor()))?;
    tree.shift = shift;
    if !cond.holds {
        tree.warnings.push(format!("content condition fails: {} >= {}", cond.lhs, cond.rhs));
    }
    tree.condition_11 = Some(cond);
    Ok(tree)
}
