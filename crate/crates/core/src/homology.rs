//! Graded chain complexes over `Z/2`.
//!
//! Generators carry integer degrees and the boundary lowers degree by one.
//! Besides homology, the module answers which homology profiles a multiset of
//! degrees can carry, and what has to be added to a fixed set of generators
//! to reach a prescribed profile.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub label: String,
    pub degree: i64,
}

/// Generators and the nonzero boundary entries: `(i, j)` means `g_i`
/// appears in the boundary of `g_j`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradedZ2Complex {
    pub generators: Vec<Generator>,
    pub boundary: Vec<[usize; 2]>,
}

/// Degree to dimension; zero dimensions are not stored.
pub type HomologyProfile = BTreeMap<i64, usize>;

/// Packed `Z/2` row.
#[derive(Clone, Debug, PartialEq, Eq)]
struct BitRow(Vec<u64>);

impl BitRow {
    fn zeros(n: usize) -> Self {
        BitRow(vec![0; n.div_ceil(64).max(1)])
    }
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    fn flip(&mut self, i: usize) {
        self.0[i / 64] ^= 1 << (i % 64);
    }
    fn xor(&mut self, other: &BitRow) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
    }
    fn is_zero(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }
}

/// Rank over `Z/2` by Gaussian elimination.
fn rank(mut rows: Vec<BitRow>, cols: usize) -> usize {
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| rows[i].get(c)) else { continue };
        rows.swap(r, p);
        let pivot = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row.get(c) {
                row.xor(&pivot);
            }
        }
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    r
}

impl GradedZ2Complex {
    pub fn new(generators: Vec<(String, i64)>, boundary: Vec<[usize; 2]>) -> Result<Self> {
        let cx = Self {
            generators: generators.into_iter().map(|(label, degree)| Generator { label, degree }).collect(),
            boundary,
        };
        cx.validate()?;
        Ok(cx)
    }

    /// Generators only, zero boundary.
    pub fn from_degrees(degrees: &[i64]) -> Self {
        Self {
            generators: degrees
                .iter()
                .enumerate()
                .map(|(i, &degree)| Generator { label: format!("g{i}"), degree })
                .collect(),
            boundary: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn degrees(&self) -> Vec<i64> {
        self.generators.iter().map(|g| g.degree).collect()
    }

    /// Boundary as columns: `columns[j]` holds the generators in `d(g_j)`.
    fn columns(&self) -> Vec<BitRow> {
        let n = self.len();
        let mut cols = vec![BitRow::zeros(n); n];
        let mut seen = BTreeSet::new();
        for &[i, j] in &self.boundary {
            if seen.insert((i, j)) {
                cols[j].flip(i);
            }
        }
        cols
    }

    /// Checks indices, the degree constraint and `d o d = 0`.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        for &[i, j] in &self.boundary {
            if i >= n || j >= n {
                return Err(Error::InvalidComplex(format!("entry ({i}, {j}) out of range")));
            }
            let (di, dj) = (self.generators[i].degree, self.generators[j].degree);
            if di != dj - 1 {
                return Err(Error::InvalidComplex(format!(
                    "entry ({i}, {j}) joins degrees {dj} -> {di}"
                )));
            }
        }
        let cols = self.columns();
        for (j, col) in cols.iter().enumerate() {
            let mut dd = BitRow::zeros(n);
            for (i, c) in cols.iter().enumerate() {
                if col.get(i) {
                    dd.xor(c);
                }
            }
            if !dd.is_zero() {
                return Err(Error::InvalidComplex(format!("boundary of boundary of g{j} is nonzero")));
            }
        }
        Ok(())
    }
}

/// Homology over `Z/2`: `dim ker d_k - rank d_{k+1}` in each degree.
pub fn z2_homology(cx: &GradedZ2Complex) -> Result<HomologyProfile> {
    cx.validate()?;
    let cols = cx.columns();
    let degrees: BTreeSet<i64> = cx.generators.iter().map(|g| g.degree).collect();
    let in_degree = |d: i64| -> Vec<usize> {
        (0..cx.len()).filter(|&i| cx.generators[i].degree == d).collect()
    };
    // rank of d restricted to degree d generators
    let rank_from = |d: i64| -> usize {
        let src = in_degree(d);
        let dst = in_degree(d - 1);
        if src.is_empty() || dst.is_empty() {
            return 0;
        }
        let rows: Vec<BitRow> = src
            .iter()
            .map(|&j| {
                let mut r = BitRow::zeros(dst.len());
                for (k, &i) in dst.iter().enumerate() {
                    if cols[j].get(i) {
                        r.flip(k);
                    }
                }
                r
            })
            .collect();
        rank(rows, dst.len())
    };
    let mut profile = HomologyProfile::new();
    for &d in &degrees {
        let n = in_degree(d).len();
        let h = n - rank_from(d) - rank_from(d + 1);
        if h > 0 {
            profile.insert(d, h);
        }
    }
    Ok(profile)
}

fn counts(degrees: &[i64]) -> BTreeMap<i64, usize> {
    let mut n = BTreeMap::new();
    for &d in degrees {
        *n.entry(d).or_insert(0) += 1;
    }
    n
}

/// Whether some boundary on generators of these degrees has the target
/// homology.
///
/// A `Z/2` complex splits into single generators and pairs joined by the
/// boundary, so this holds iff ranks `r_d >= 0` exist with
/// `n_d = h_d + r_d + r_{d+1}`; they are determined degree by degree.
pub fn realizable(degrees: &[i64], target: &HomologyProfile) -> bool {
    let n = counts(degrees);
    let keys: BTreeSet<i64> = n.keys().chain(target.keys()).copied().collect();
    let (Some(&lo), Some(&hi)) = (keys.first(), keys.last()) else { return true };
    let mut r: i64 = 0;
    for d in lo..=hi {
        let nd = *n.get(&d).unwrap_or(&0) as i64;
        let hd = *target.get(&d).unwrap_or(&0) as i64;
        r = nd - hd - r;
        if r < 0 {
            return false;
        }
    }
    r == 0
}

/// Largest generator count accepted by the exhaustive enumeration.
pub const BRUTE_FORCE_CAP: usize = 8;

/// Every homology profile reachable by some boundary on these degrees,
/// found by enumerating all degree-respecting `Z/2` matrices.
pub fn achievable_profiles(degrees: &[i64]) -> Result<BTreeSet<Vec<(i64, usize)>>> {
    let n = degrees.len();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::SizeCap { size: n, cap: BRUTE_FORCE_CAP });
    }
    let slots: Vec<(usize, usize)> = (0..n)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .filter(|&(i, j)| degrees[i] == degrees[j] - 1)
        .collect();
    let mut out = BTreeSet::new();
    for mask in 0u64..(1u64 << slots.len()) {
        // columns as bitmasks over at most 8 generators
        let mut col = [0u8; BRUTE_FORCE_CAP];
        for (b, &(i, j)) in slots.iter().enumerate() {
            if mask >> b & 1 == 1 {
                col[j] |= 1 << i;
            }
        }
        let squares_to_zero = (0..n).all(|j| {
            let mut dd = 0u8;
            for i in 0..n {
                if col[j] >> i & 1 == 1 {
                    dd ^= col[i];
                }
            }
            dd == 0
        });
        if !squares_to_zero {
            continue;
        }
        let boundary = slots
            .iter()
            .enumerate()
            .filter(|(b, _)| mask >> b & 1 == 1)
            .map(|(_, &(i, j))| [i, j])
            .collect();
        let cx = GradedZ2Complex { boundary, ..GradedZ2Complex::from_degrees(degrees) };
        out.insert(z2_homology(&cx)?.into_iter().collect());
    }
    Ok(out)
}

/// Exhaustive counterpart of [`realizable`] for at most eight generators.
pub fn brute_force_realizable(degrees: &[i64], target: &HomologyProfile) -> Result<bool> {
    let key: Vec<(i64, usize)> = target.iter().filter(|(_, &v)| v > 0).map(|(&k, &v)| (k, v)).collect();
    Ok(achievable_profiles(degrees)?.contains(&key))
}

/// Multisets of size `k` from `lo..=hi`, in lexicographic order.
fn multisets(lo: i64, hi: i64, k: usize) -> Vec<Vec<i64>> {
    fn rec(start: i64, hi: i64, k: usize, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if k == 0 {
            out.push(cur.clone());
            return;
        }
        for d in start..=hi {
            cur.push(d);
            rec(d, hi, k - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if lo <= hi {
        rec(lo, hi, k, &mut Vec::new(), &mut out);
    }
    out
}

/// Largest number of added generators tried by [`minimal_completion`].
pub const COMPLETION_CAP: usize = 16;

/// All smallest multisets `C` of degrees in `window` with
/// `fixed ∪ C` realizing `target`. With `pairing` every degree of `C` has
/// even multiplicity.
pub fn minimal_completion(
    fixed: &[i64],
    target: &HomologyProfile,
    pairing: bool,
    window: (i64, i64),
) -> Result<Vec<Vec<i64>>> {
    let (lo, hi) = window;
    if lo > hi {
        return Err(Error::WindowTooSmall);
    }
    let step = if pairing { 2 } else { 1 };
    for size in (0..=COMPLETION_CAP).step_by(step) {
        let halves = multisets(lo, hi, size / step);
        let found: Vec<Vec<i64>> = halves
            .into_par_iter()
            .filter_map(|half| {
                let added: Vec<i64> = half.iter().flat_map(|&d| std::iter::repeat_n(d, step)).collect();
                let mut all = fixed.to_vec();
                all.extend(&added);
                realizable(&all, target).then_some(added)
            })
            .collect();
        if !found.is_empty() {
            return Ok(found);
        }
    }
    Err(Error::WindowTooSmall)
}

/// The complex drawn for an index jump from `k` to `k + p` with two
/// commuting involutions: the degenerating generator `c` in degree `k + p`
/// and pairs `d_j`, `rho d_j` in degree `k + j` for `j < p`, with
/// `d(c) = rho d_{p-1}` and `d(d_j) = rho d_{j-1}`.
pub fn pairing_complex(k: i64, p: i64) -> Result<GradedZ2Complex> {
    if p < 1 {
        return Err(Error::InvalidArgument(format!("jump {p} must be positive")));
    }
    let mut gens = vec![("c".to_string(), k + p)];
    for j in 0..p {
        gens.push((format!("d{j}"), k + j));
        gens.push((format!("rho_d{j}"), k + j));
    }
    let d = |j: i64| 1 + 2 * j as usize;
    let rho_d = |j: i64| 2 + 2 * j as usize;
    let mut boundary = vec![[rho_d(p - 1), 0]];
    for j in 1..p {
        boundary.push([rho_d(j - 1), d(j)]);
    }
    GradedZ2Complex::new(gens, boundary)
}

/// Parses `"2:1,3:1"` style profiles.
pub fn parse_profile(text: &str) -> Result<HomologyProfile> {
    let mut out = HomologyProfile::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (d, n) = part
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("profile entry `{part}` is not degree:dim")))?;
        let d: i64 = d.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad degree `{d}`")))?;
        let n: usize = n.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad dimension `{n}`")))?;
        if n > 0 {
            *out.entry(d).or_insert(0) += n;
        }
    }
    Ok(out)
}

/// Parses `"1,2,2"` style degree lists.
pub fn parse_degrees(text: &str) -> Result<Vec<i64>> {
    text.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| Error::InvalidArgument(format!("bad degree `{p}`"))))
        .collect()
}
