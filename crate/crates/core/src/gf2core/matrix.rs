//! Dense bit-packed matrices over GF(2).
//!
//! Rows are stored as consecutive runs of `u64` words; column `j` lives at
//! bit `j % 64` of word `j / 64`. Row XOR is the kernel everything else is
//! built on.

use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::Gf2Error;

const W: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    /// All-zero matrix. Panics on a zero dimension.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "BitMatrix dimensions must be >= 1");
        let stride = cols.div_ceil(W);
        BitMatrix { rows, cols, stride, data: vec![0; rows * stride] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Build from 0/1 rows, e.g. `["110", "101"]`.
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self, Gf2Error> {
        if rows.is_empty() {
            return Err(Gf2Error::Parse { line: 0, msg: "no rows".into() });
        }
        let cols = rows[0].as_ref().trim().len();
        if cols == 0 {
            return Err(Gf2Error::Parse { line: 1, msg: "empty row".into() });
        }
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref().trim();
            if r.len() != cols {
                return Err(Gf2Error::Parse {
                    line: i + 1,
                    msg: format!("row has {} entries, expected {cols}", r.len()),
                });
            }
            for (j, ch) in r.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => m.set(i, j, true),
                    _ => {
                        return Err(Gf2Error::Parse {
                            line: i + 1,
                            msg: format!("unexpected character {ch:?}"),
                        })
                    }
                }
            }
        }
        Ok(m)
    }

    /// Build from a column-major list of column bit-masks (`cols[j]` bit `i` is entry (i, j)).
    /// Only valid for `rows <= 64`.
    pub fn from_col_masks(rows: usize, cols: &[u64]) -> Self {
        assert!(rows <= W);
        let mut m = Self::zeros(rows, cols.len());
        for (j, &c) in cols.iter().enumerate() {
            for i in 0..rows {
                if c >> i & 1 == 1 {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    /// Column `j` as a bit-mask over rows. Requires `rows <= 64`.
    pub fn col_mask(&self, j: usize) -> u64 {
        assert!(self.rows <= W);
        let mut v = 0u64;
        for i in 0..self.rows {
            if self.get(i, j) {
                v |= 1 << i;
            }
        }
        v
    }

    /// Row `i` as a bit-mask. Requires `cols <= 64`.
    pub fn row_mask(&self, i: usize) -> u64 {
        assert!(self.cols <= W);
        self.data[i * self.stride]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.stride + j / W] >> (j % W) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        debug_assert!(i < self.rows && j < self.cols);
        let w = &mut self.data[i * self.stride + j / W];
        if v {
            *w |= 1 << (j % W);
        } else {
            *w &= !(1 << (j % W));
        }
    }

    pub fn flip(&mut self, i: usize, j: usize) {
        self.data[i * self.stride + j / W] ^= 1 << (j % W);
    }

    #[inline]
    fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    /// row[dst] ^= row[src]
    #[inline]
    pub fn xor_row(&mut self, dst: usize, src: usize) {
        if dst == src {
            self.data[dst * self.stride..(dst + 1) * self.stride].fill(0);
            return;
        }
        let s = self.stride;
        let (a, b) = if dst < src {
            let (lo, hi) = self.data.split_at_mut(src * s);
            (&mut lo[dst * s..dst * s + s], &hi[..s])
        } else {
            let (lo, hi) = self.data.split_at_mut(dst * s);
            (&mut hi[..s], &lo[src * s..src * s + s])
        };
        for (x, y) in a.iter_mut().zip(b) {
            *x ^= *y;
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.stride {
            self.data.swap(a * self.stride + w, b * self.stride + w);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square() && *self == Self::identity(self.rows)
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) {
                    t.set(j, i, true);
                }
            }
        }
        t
    }

    pub fn add(&self, other: &Self) -> Result<Self, Gf2Error> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Gf2Error::DimensionMismatch {
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&other.data) {
            *x ^= *y;
        }
        Ok(out)
    }

    /// Schoolbook product: for every set bit (i, k) of `self`, XOR row k of `b` into row i.
    pub fn mul(&self, b: &Self) -> Result<Self, Gf2Error> {
        if self.cols != b.rows {
            return Err(Gf2Error::DimensionMismatch {
                left: (self.rows, self.cols),
                right: (b.rows, b.cols),
            });
        }
        let mut out = Self::zeros(self.rows, b.cols);
        let s = out.stride;
        for i in 0..self.rows {
            let acc = &mut out.data[i * s..(i + 1) * s];
            for (wi, &word) in self.row(i).iter().enumerate() {
                let mut w = word;
                while w != 0 {
                    let k = wi * W + w.trailing_zeros() as usize;
                    w &= w - 1;
                    for (x, y) in acc.iter_mut().zip(b.row(k)) {
                        *x ^= *y;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Matrix times column bit-mask (`cols <= 64`, `rows <= 64`).
    pub fn mul_mask(&self, v: u64) -> u64 {
        assert!(self.cols <= W && self.rows <= W);
        let mut out = 0u64;
        for i in 0..self.rows {
            out |= ((self.data[i * self.stride] & v).count_ones() as u64 & 1) << i;
        }
        out
    }

    pub fn pow(&self, e: &BigUint) -> Result<Self, Gf2Error> {
        if !self.is_square() {
            return Err(Gf2Error::NotSquare(self.rows, self.cols));
        }
        let mut result = Self::identity(self.rows);
        let bits = e.bits();
        for i in (0..bits).rev() {
            result = result.mul(&result)?;
            if e.bit(i) {
                result = result.mul(self)?;
            }
        }
        Ok(result)
    }

    pub fn pow_u64(&self, e: u64) -> Result<Self, Gf2Error> {
        self.pow(&BigUint::from(e))
    }

    /// Gauss–Jordan on the augmented matrix with leftmost-pivot selection.
    /// `None` means singular.
    pub fn inverse(&self) -> Result<Option<Self>, Gf2Error> {
        if !self.is_square() {
            return Err(Gf2Error::NotSquare(self.rows, self.cols));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| a.get(r, col)) else {
                return Ok(None);
            };
            a.swap_rows(p, col);
            inv.swap_rows(p, col);
            for r in 0..n {
                if r != col && a.get(r, col) {
                    a.xor_row(r, col);
                    inv.xor_row(r, col);
                }
            }
        }
        Ok(Some(inv))
    }

    pub fn rank(&self) -> usize {
        let mut a = self.clone();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(p) = (rank..a.rows).find(|&r| a.get(r, col)) else {
                continue;
            };
            a.swap_rows(p, rank);
            for r in 0..a.rows {
                if r != rank && a.get(r, col) {
                    a.xor_row(r, rank);
                }
            }
            rank += 1;
            if rank == a.rows {
                break;
            }
        }
        rank
    }

    /// Reduced row echelon form; used as a canonical key for row spaces.
    pub fn rref(&self) -> Self {
        let mut a = self.clone();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(p) = (rank..a.rows).find(|&r| a.get(r, col)) else {
                continue;
            };
            a.swap_rows(p, rank);
            for r in 0..a.rows {
                if r != rank && a.get(r, col) {
                    a.xor_row(r, rank);
                }
            }
            rank += 1;
            if rank == a.rows {
                break;
            }
        }
        a
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && *self == self.transpose()
    }

    /// Block `(r0.., c0..)` of size `h × w`.
    pub fn block(&self, r0: usize, c0: usize, h: usize, w: usize) -> Self {
        let mut b = Self::zeros(h, w);
        for i in 0..h {
            for j in 0..w {
                if self.get(r0 + i, c0 + j) {
                    b.set(i, j, true);
                }
            }
        }
        b
    }

    /// `[[a, b], [c, d]]` from four equally sized square blocks.
    pub fn from_blocks(a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Self, Gf2Error> {
        let (h1, w1) = (a.rows, a.cols);
        if b.rows != h1 || c.cols != w1 || d.rows != c.rows || d.cols != b.cols {
            return Err(Gf2Error::DimensionMismatch { left: (a.rows, a.cols), right: (d.rows, d.cols) });
        }
        let mut m = Self::zeros(h1 + c.rows, w1 + b.cols);
        m.paste(0, 0, a);
        m.paste(0, w1, b);
        m.paste(h1, 0, c);
        m.paste(h1, w1, d);
        Ok(m)
    }

    /// Stack `top` above `bottom`.
    pub fn vstack(top: &Self, bottom: &Self) -> Result<Self, Gf2Error> {
        if top.cols != bottom.cols {
            return Err(Gf2Error::DimensionMismatch { left: (top.rows, top.cols), right: (bottom.rows, bottom.cols) });
        }
        let mut m = Self::zeros(top.rows + bottom.rows, top.cols);
        m.paste(0, 0, top);
        m.paste(top.rows, 0, bottom);
        Ok(m)
    }

    pub fn paste(&mut self, r0: usize, c0: usize, src: &Self) {
        for i in 0..src.rows {
            for j in 0..src.cols {
                self.set(r0 + i, c0 + j, src.get(i, j));
            }
        }
    }

    /// Symplectic test `cᵗ J c = J` with `J = [[0, I], [I, 0]]` (signs vanish mod 2).
    pub fn is_symplectic(&self) -> Result<bool, Gf2Error> {
        if !self.is_square() {
            return Err(Gf2Error::NotSquare(self.rows, self.cols));
        }
        if self.rows % 2 != 0 {
            return Err(Gf2Error::OddDimension(self.rows));
        }
        let m = self.rows / 2;
        let j = symplectic_form(m);
        let lhs = self.transpose().mul(&j)?.mul(self)?;
        Ok(lhs == j)
    }

    /// Packed words; a deterministic sort key.
    pub fn encoding(&self) -> Vec<u64> {
        self.data.clone()
    }

    pub fn to_row_strings(&self) -> Vec<String> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| if self.get(i, j) { '1' } else { '0' }).collect())
            .collect()
    }

    /// Text format: "rows cols" header then one 0/1 line per row.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for r in self.to_row_strings() {
            s.push_str(&r);
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, Gf2Error> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or(Gf2Error::Parse { line: 0, msg: "empty input".into() })?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| Gf2Error::Parse { line: hl, msg: format!("bad header: {e}") })?;
        if dims.len() != 2 || dims[0] == 0 || dims[1] == 0 {
            return Err(Gf2Error::Parse { line: hl, msg: "header must be \"rows cols\"".into() });
        }
        let body: Vec<(usize, &str)> = lines.collect();
        if body.len() != dims[0] {
            return Err(Gf2Error::Parse {
                line: body.last().map_or(hl, |b| b.0),
                msg: format!("expected {} rows, found {}", dims[0], body.len()),
            });
        }
        let mut m = Self::zeros(dims[0], dims[1]);
        for (i, (ln, row)) in body.iter().enumerate() {
            if row.len() != dims[1] {
                return Err(Gf2Error::Parse { line: *ln, msg: format!("expected {} columns", dims[1]) });
            }
            for (j, ch) in row.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => m.set(i, j, true),
                    _ => return Err(Gf2Error::Parse { line: *ln, msg: format!("unexpected character {ch:?}") }),
                }
            }
        }
        Ok(m)
    }
}

/// `J = [[0, I], [I, 0]]` of size 2m.
pub fn symplectic_form(m: usize) -> BitMatrix {
    let mut j = BitMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        j.set(i, m + i, true);
        j.set(m + i, i, true);
    }
    j
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in self.to_row_strings() {
            writeln!(f, "  {r}")?;
        }
        Ok(())
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.to_row_strings().iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

// JSON form: array of row bit-strings.
impl Serialize for BitMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_row_strings().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BitMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<String>::deserialize(d)?;
        BitMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}
