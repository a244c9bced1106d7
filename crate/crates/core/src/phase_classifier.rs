//! Energy-gap tree classification and 0-1 association rules.
//!
//! Rows are ordered by model energy. A phase transition shows up as the
//! largest jump between successive sorted energies; each split divides a leaf
//! at that jump. Splitting proceeds greedily, always on the leaf whose own
//! largest gap is widest, until enough leaves exist or no gap is significant.
//! Each leaf then becomes one rule: feature bits, an energy range and
//! prediction bits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::ebm::{ebm_energy, EbmModel};
use crate::error::{Error, Result};
use crate::series_io::{format_real, parse_real};

/// Largest gap between successive sorted energies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapSplit {
    /// Midpoint of the gap.
    pub threshold: f64,
    pub gap: f64,
    /// Number of sorted energies below the gap.
    pub boundary: usize,
}

/// `Ok(None)` when all energies are equal. Ties between equal gaps go to the
/// lowest boundary.
pub fn max_gap_split(energies: &[f64]) -> Result<Option<GapSplit>> {
    if energies.len() < 2 {
        return Err(Error::TooShort {
            what: "gap split",
            min: 2,
            got: energies.len(),
        });
    }
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite("energies"));
    }
    let mut sorted = energies.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(split_sorted(&sorted))
}

fn split_sorted(sorted: &[f64]) -> Option<GapSplit> {
    let mut best: Option<GapSplit> = None;
    for (i, w) in sorted.windows(2).enumerate() {
        let gap = w[1] - w[0];
        if gap > 0.0 && best.is_none_or(|b| gap > b.gap) {
            best = Some(GapSplit {
                threshold: w[0] + (w[1] - w[0]) / 2.0,
                gap,
                boundary: i + 1,
            });
        }
    }
    best
}

pub const MAX_DEFAULT_CLASSES: usize = 1 << 20;

/// `2^s` capped at `2^20` unless overridden.
pub fn target_class_count(s: usize, override_k: Option<usize>) -> Result<usize> {
    if s == 0 {
        return Err(Error::param("feature count must be at least 1"));
    }
    match override_k {
        Some(0) => Err(Error::param("class count override must be at least 1")),
        Some(k) => Ok(k),
        None => Ok(if s >= 20 { MAX_DEFAULT_CLASSES } else { 1 << s }),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Leaf {
        class_id: usize,
    },
    Split {
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode {
    pub lo: f64,
    pub hi: f64,
    pub members: Vec<usize>,
    pub kind: NodeKind,
}

/// Nodes live in an arena; node 0 is the root.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassTree {
    pub nodes: Vec<TreeNode>,
    /// Energy of every row the tree was built from.
    pub energies: Vec<f64>,
}

impl ClassTree {
    /// Leaf node indices, lowest energies first.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![0];
        while let Some(i) = stack.pop() {
            match self.nodes[i].kind {
                NodeKind::Leaf { .. } => out.push(i),
                NodeKind::Split { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().len()
    }

    /// Class of a training row.
    pub fn class_of(&self, row: usize) -> Option<usize> {
        self.leaves()
            .into_iter()
            .find_map(|i| match self.nodes[i].kind {
                NodeKind::Leaf { class_id } if self.nodes[i].members.contains(&row) => {
                    Some(class_id)
                }
                _ => None,
            })
    }
}

fn node_for(members: Vec<usize>, energies: &[f64]) -> TreeNode {
    let (lo, hi) = members
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(energies[i]), hi.max(energies[i]))
        });
    TreeNode {
        lo,
        hi,
        members,
        kind: NodeKind::Leaf { class_id: 0 },
    }
}

/// Members sorted by energy (row index breaks ties) and their best split.
fn candidate(node: &TreeNode, energies: &[f64]) -> (Vec<usize>, Option<GapSplit>) {
    let mut order = node.members.clone();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)));
    if order.len() < 2 {
        return (order, None);
    }
    let sorted: Vec<f64> = order.iter().map(|&i| energies[i]).collect();
    let split = split_sorted(&sorted);
    (order, split)
}

/// Greedy gap splitting over precomputed energies.
///
/// Stops once there are `k` leaves, or when the widest remaining gap is below
/// `tau` times the global energy range, or when no leaf can be split.
pub fn build_tree_from_energies(energies: &[f64], k: usize, tau: f64) -> Result<ClassTree> {
    if energies.is_empty() {
        return Err(Error::TooShort {
            what: "class tree",
            min: 1,
            got: 0,
        });
    }
    if k == 0 {
        return Err(Error::param("target leaf count must be at least 1"));
    }
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::param(format!("tau must lie in [0, 1), got {tau}")));
    }
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite("energies"));
    }

    let root = node_for((0..energies.len()).collect(), energies);
    let floor = tau * (root.hi - root.lo);
    let mut nodes = vec![root];
    let mut leaves = vec![0usize];

    while leaves.len() < k {
        // Widest gap wins; earlier leaves (lower energies) win ties.
        let mut best: Option<(usize, Vec<usize>, GapSplit)> = None;
        for (pos, &leaf) in leaves.iter().enumerate() {
            let (order, split) = candidate(&nodes[leaf], energies);
            if let Some(s) = split {
                if best.as_ref().is_none_or(|(_, _, b)| s.gap > b.gap) {
                    best = Some((pos, order, s));
                }
            }
        }
        let Some((pos, order, split)) = best else {
            break;
        };
        if split.gap < floor {
            break;
        }
        let parent = leaves[pos];
        let left = nodes.len();
        nodes.push(node_for(order[..split.boundary].to_vec(), energies));
        nodes.push(node_for(order[split.boundary..].to_vec(), energies));
        nodes[parent].kind = NodeKind::Split {
            threshold: split.threshold,
            left,
            right: left + 1,
        };
        leaves.splice(pos..=pos, [left, left + 1]);
    }

    for (class_id, &leaf) in leaves.iter().enumerate() {
        nodes[leaf].kind = NodeKind::Leaf { class_id };
        nodes[leaf].members.sort_unstable();
    }
    Ok(ClassTree {
        nodes,
        energies: energies.to_vec(),
    })
}

pub fn row_energies(rows: &[Vec<f64>], model: &EbmModel) -> Result<Vec<f64>> {
    rows.iter().map(|r| ebm_energy(model, r)).collect()
}

pub fn build_tree(rows: &[Vec<f64>], model: &EbmModel, k: usize, tau: f64) -> Result<ClassTree> {
    build_tree_from_energies(&row_energies(rows, model)?, k, tau)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssociationRule {
    pub class_id: usize,
    pub bits: Vec<bool>,
    pub e_lo: f64,
    pub e_hi: f64,
    pub pred_bits: Vec<bool>,
    pub support: usize,
}

impl AssociationRule {
    pub fn contains(&self, energy: f64) -> bool {
        self.e_lo <= energy && energy <= self.e_hi
    }

    pub fn midpoint(&self) -> f64 {
        self.e_lo + (self.e_hi - self.e_lo) / 2.0
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        values[n / 2 - 1] + (values[n / 2] - values[n / 2 - 1]) / 2.0
    }
}

/// One rule per leaf.
///
/// A feature bit is 1 when the leaf mean exceeds the global median of that
/// feature. A prediction bit is the strict majority of the row-level bits
/// (value above the global median); an even split gives 0.
pub fn extract_rules(tree: &ClassTree, rows: &[Vec<f64>]) -> Result<Vec<AssociationRule>> {
    if rows.len() != tree.energies.len() {
        return Err(Error::Dimension(format!(
            "tree covers {} rows, {} supplied",
            tree.energies.len(),
            rows.len()
        )));
    }
    let s = rows.first().map_or(0, Vec::len);
    if s == 0 || rows.iter().any(|r| r.len() != s) {
        return Err(Error::Dimension("rows must share a non-zero width".into()));
    }
    let medians: Vec<f64> = (0..s)
        .map(|j| median(&mut rows.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .collect();

    let mut rules = Vec::new();
    for leaf in tree.leaves() {
        let node = &tree.nodes[leaf];
        let NodeKind::Leaf { class_id } = node.kind else {
            unreachable!("leaves() yields leaf nodes")
        };
        assert!(!node.members.is_empty(), "empty leaf {class_id}");
        let n = node.members.len();
        let mut bits = Vec::with_capacity(s);
        let mut pred_bits = Vec::with_capacity(s);
        for (j, med) in medians.iter().enumerate() {
            let mean = node.members.iter().map(|&i| rows[i][j]).sum::<f64>() / n as f64;
            bits.push(mean > *med);
            let above = node.members.iter().filter(|&&i| rows[i][j] > *med).count();
            pred_bits.push(2 * above > n);
        }
        rules.push(AssociationRule {
            class_id,
            bits,
            e_lo: node.lo,
            e_hi: node.hi,
            pred_bits,
            support: n,
        });
    }
    Ok(rules)
}

/// Rule whose energy range holds `energy`, else the rule with the nearest
/// range midpoint. Lower class ids win ties.
pub fn classify_energy(rules: &[AssociationRule], energy: f64) -> Result<&AssociationRule> {
    if rules.is_empty() {
        return Err(Error::EmptyRules);
    }
    let by_id = |a: &&AssociationRule, b: &&AssociationRule| a.class_id.cmp(&b.class_id);
    if let Some(r) = rules.iter().filter(|r| r.contains(energy)).min_by(by_id) {
        return Ok(r);
    }
    let nearest = rules
        .iter()
        .min_by(|a, b| {
            let da = (a.midpoint() - energy).abs();
            let db = (b.midpoint() - energy).abs();
            da.total_cmp(&db).then(a.class_id.cmp(&b.class_id))
        })
        .expect("non-empty");
    Ok(nearest)
}

pub fn classify_point<'r>(
    rules: &'r [AssociationRule],
    model: &EbmModel,
    row: &[f64],
) -> Result<&'r AssociationRule> {
    if rules.is_empty() {
        return Err(Error::EmptyRules);
    }
    classify_energy(rules, ebm_energy(model, row)?)
}

fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn parse_bits(s: &str, line: usize) -> Result<Vec<bool>> {
    if s.is_empty() {
        return Err(Error::Parse {
            line,
            message: "empty bit string".into(),
        });
    }
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::Parse {
                line,
                message: format!("bit string `{s}` contains `{c}`"),
            }),
        })
        .collect()
}

/// `RULE,<class_id>,<bits>,<e_lo>,<e_hi>,<pred_bits>,<support>` per line.
pub fn render_rules(rules: &[AssociationRule]) -> String {
    let mut out = String::new();
    for r in rules {
        let _ = writeln!(
            out,
            "RULE,{},{},{},{},{},{}",
            r.class_id,
            bit_string(&r.bits),
            format_real(r.e_lo),
            format_real(r.e_hi),
            bit_string(&r.pred_bits),
            r.support
        );
    }
    out
}

/// Inverse of [`render_rules`]. Blank and `#` lines are skipped.
pub fn parse_rules(text: &str) -> Result<Vec<AssociationRule>> {
    let mut rules = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse { line, message };
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != 7 {
            return Err(err(format!("expected 7 fields, found {}", f.len())));
        }
        if f[0] != "RULE" {
            return Err(err(format!("expected `RULE`, found `{}`", f[0])));
        }
        let int = |s: &str, what: &str| {
            s.parse::<usize>()
                .map_err(|_| err(format!("bad {what} `{s}`")))
        };
        let class_id = int(f[1], "class id")?;
        let bits = parse_bits(f[2], line)?;
        let e_lo = parse_real(f[3], line)?;
        let e_hi = parse_real(f[4], line)?;
        let pred_bits = parse_bits(f[5], line)?;
        let support = int(f[6], "support")?;
        if pred_bits.len() != bits.len() {
            return Err(err("bit strings differ in length".into()));
        }
        if e_lo.is_nan() || e_hi.is_nan() || e_lo > e_hi {
            return Err(err(format!("energy range [{e_lo}, {e_hi}] is not ordered")));
        }
        rules.push(AssociationRule {
            class_id,
            bits,
            e_lo,
            e_hi,
            pred_bits,
            support,
        });
    }
    Ok(rules)
}

pub fn write_rules(rules: &[AssociationRule], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_rules(rules)).map_err(|e| Error::io(path, e))
}

pub fn read_rules(path: impl AsRef<Path>) -> Result<Vec<AssociationRule>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rules(&text)
}
