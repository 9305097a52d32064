//! Separability structure of Pauli classes.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2core::PauliVector;
use crate::mubgen::{self, Complex64, PauliClassSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EntError {
    #[error("{shape:?} is not a partition of {m}")]
    InvalidPartition { shape: Vec<usize>, m: usize },
    #[error("m = {0} is above the materialization limit ({1})")]
    TooLarge(usize, usize),
    #[error("class set has no materialized classes")]
    NotMaterialized,
}

pub const STRUCTURE_MAX_M: usize = 8;

/// Disjoint qubit blocks (0-based indices internally, printed 1-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitPartition {
    pub blocks: Vec<Vec<usize>>,
}

impl QubitPartition {
    /// Block sizes, largest first.
    pub fn shape(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.blocks.iter().map(Vec::len).collect();
        s.sort_unstable_by(|a, b| b.cmp(a));
        s
    }
}

impl fmt::Display for QubitPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|b| format!("{{{}}}", b.iter().map(|q| (q + 1).to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "{}", parts.join(""))
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn blocks_from_union_find(parent: &mut [usize]) -> QubitPartition {
    let m = parent.len();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut root_block = vec![usize::MAX; m];
    for q in 0..m {
        let r = find(parent, q);
        if root_block[r] == usize::MAX {
            root_block[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[root_block[r]].push(q);
    }
    QubitPartition { blocks }
}

/// Finest qubit partition under which the class factorizes: the stabilizer group
/// S equals the product of its subgroups supported inside each block. A cut T | Tᶜ
/// splits S iff dim S_T + dim S_Tᶜ = dim S, where S_T holds the elements supported in T.
pub fn class_partition(class: &[PauliVector], m: usize) -> QubitPartition {
    let masks: Vec<u64> = class.iter().map(|v| v.z | v.x << 32).collect();
    partition_from_masks(&masks, m, 32)
}

fn rank_of(vs: impl Iterator<Item = u64>) -> usize {
    let mut basis: Vec<u64> = Vec::new();
    for mut v in vs {
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

fn partition_from_masks(masks: &[u64], m: usize, shift: usize) -> QubitPartition {
    let low = (1u64 << m) - 1;
    let full = rank_of(masks.iter().copied());
    let support = |t: u64| (t & low) | (t & low) << shift;
    // dim S_T = dim S - rank of S restricted to the complement of T
    let dim_inside = |t: u64| full - rank_of(masks.iter().map(|&v| v & support(!t & low)));
    let splits = |t: u64| dim_inside(t) + dim_inside(!t & low) == full;
    let mut parent: Vec<usize> = (0..m).collect();
    for i in 0..m {
        for j in i + 1..m {
            if find(&mut parent, i) == find(&mut parent, j) {
                continue;
            }
            let separated = (0u64..1 << m).any(|t| t >> i & 1 == 1 && t >> j & 1 == 0 && splits(t));
            if !separated {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    blocks_from_union_find(&mut parent)
}

/// The looser rule: connect all qubits at which two class elements anticommute locally.
/// Agrees with `class_partition` for m ≤ 3 but merges two entangled pairs into one block.
pub fn anticommutation_partition(class: &[PauliVector], m: usize) -> QubitPartition {
    let mut parent: Vec<usize> = (0..m).collect();
    for (i, a) in class.iter().enumerate() {
        for b in &class[i + 1..] {
            let anti = (a.z & b.x) ^ (a.x & b.z);
            if anti == 0 {
                continue;
            }
            let first = anti.trailing_zeros() as usize;
            let mut rest = anti & (anti - 1);
            while rest != 0 {
                let (ra, rb) = (find(&mut parent, first), find(&mut parent, rest.trailing_zeros() as usize));
                parent[ra] = rb;
                rest &= rest - 1;
            }
        }
    }
    blocks_from_union_find(&mut parent)
}

pub fn separability_count(p: &QubitPartition) -> usize {
    p.blocks.len()
}

/// Integer partitions of m in canonical order: more parts first, then ascending
/// largest part, second largest, and so on.
pub fn partitions_of(m: usize) -> Vec<Vec<usize>> {
    fn gen(n: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 0 {
            out.push(prefix.clone());
            return;
        }
        for k in 1..=n.min(max) {
            prefix.push(k);
            gen(n - k, k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    gen(m, m, &mut Vec::new(), &mut out);
    out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    out
}

/// 1-based position of `shape` among `partitions_of(m)`.
pub fn partition_rank(shape: &[usize], m: usize) -> Result<usize, EntError> {
    let mut s = shape.to_vec();
    s.sort_unstable_by(|a, b| b.cmp(a));
    if s.iter().sum::<usize>() != m || s.contains(&0) {
        return Err(EntError::InvalidPartition { shape: shape.to_vec(), m });
    }
    Ok(partitions_of(m).iter().position(|p| *p == s).expect("every partition is listed") + 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StructureVector {
    pub counts: Vec<usize>,
}

impl fmt::Display for StructureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.counts.iter().map(usize::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Partition of every class, in class order.
pub fn class_partitions(set: &PauliClassSet) -> Result<Vec<QubitPartition>, EntError> {
    if set.m > STRUCTURE_MAX_M {
        return Err(EntError::TooLarge(set.m, STRUCTURE_MAX_M));
    }
    (0..set.len())
        .map(|j| {
            let masks = set.class_masks(j).ok_or(EntError::NotMaterialized)?;
            Ok(partition_from_masks(masks, set.m, set.m))
        })
        .collect()
}

pub fn structure_vector(set: &PauliClassSet) -> Result<StructureVector, EntError> {
    let mut counts = vec![0; partitions_of(set.m).len()];
    for p in class_partitions(set)? {
        counts[partition_rank(&p.shape(), set.m)? - 1] += 1;
    }
    Ok(StructureVector { counts })
}

/// Finest product structure shared by all common eigenvectors of a class (m ≤ 5).
/// Qubits i and j share a block unless some bipartition separating them leaves
/// every eigenvector with Schmidt rank 1.
pub fn eigenbasis_partition(g: &crate::gf2core::BitMatrix, tol: f64) -> Result<QubitPartition, mubgen::MubError> {
    let m = g.cols();
    let basis = mubgen::class_eigenbasis(g)?;
    let factorizes = |s: u64| basis.iter().all(|v| schmidt_rank_one(v, s, m, tol));
    let mut parent: Vec<usize> = (0..m).collect();
    for i in 0..m {
        for j in i + 1..m {
            let separated = (0u64..1 << m).any(|s| s >> i & 1 == 1 && s >> j & 1 == 0 && factorizes(s));
            if !separated {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    Ok(blocks_from_union_find(&mut parent))
}

/// Rank-1 test of ψ reshaped across qubits in `s` vs the rest: all 2×2 minors vanish.
fn schmidt_rank_one(v: &[Complex64], s: u64, m: usize, tol: f64) -> bool {
    let inside: Vec<usize> = (0..m).filter(|q| s >> q & 1 == 1).collect();
    let outside: Vec<usize> = (0..m).filter(|q| s >> q & 1 == 0).collect();
    let index = |a: usize, b: usize| {
        let mut idx = 0usize;
        for (t, &q) in inside.iter().enumerate() {
            idx |= (a >> t & 1) << q;
        }
        for (t, &q) in outside.iter().enumerate() {
            idx |= (b >> t & 1) << q;
        }
        idx
    };
    let (ra, rb) = (1usize << inside.len(), 1usize << outside.len());
    for a in 0..ra {
        for a2 in a + 1..ra {
            for b in 0..rb {
                for b2 in b + 1..rb {
                    let minor = v[index(a, b)] * v[index(a2, b2)] - v[index(a, b2)] * v[index(a2, b)];
                    if minor.norm() > tol {
                        return false;
                    }
                }
            }
        }
    }
    true
}
