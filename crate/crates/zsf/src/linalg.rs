//! Exact linear algebra over `F_q`: dependency extraction, maximal
//! independent sets (naive and blocked), and the pivot split used by the
//! recursive solvers.

use crate::error::{Error, Result};
use crate::field::{Modulus, Residue};
use crate::problem::CoeffMap;

/// A vector in `F_q^n`, entries canonical.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldVec {
    entries: Vec<Residue>,
}

impl FieldVec {
    pub fn new(entries: Vec<Residue>) -> Self {
        FieldVec { entries }
    }

    pub fn zeros(modulus: &Modulus, n: usize) -> Self {
        FieldVec { entries: vec![modulus.zero(); n] }
    }

    pub fn from_u64s(modulus: &Modulus, entries: &[u64]) -> Self {
        FieldVec { entries: entries.iter().map(|&e| modulus.residue_u64(e)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize) -> &Residue {
        &self.entries[i]
    }

    pub fn entries(&self) -> &[Residue] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Residue::is_zero)
    }

    /// Index of the lowest nonzero coordinate, if any.
    pub fn lowest_nonzero(&self) -> Option<usize> {
        self.entries.iter().position(|e| !e.is_zero())
    }

    pub fn add(&self, m: &Modulus, other: &FieldVec) -> FieldVec {
        debug_assert_eq!(self.dim(), other.dim());
        FieldVec {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| m.add(a, b))
                .collect(),
        }
    }

    pub fn sub(&self, m: &Modulus, other: &FieldVec) -> FieldVec {
        debug_assert_eq!(self.dim(), other.dim());
        FieldVec {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| m.sub(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, m: &Modulus, c: &Residue) -> FieldVec {
        FieldVec { entries: self.entries.iter().map(|a| m.mul(a, c)).collect() }
    }

    /// self - c * other
    pub fn sub_scaled(&self, m: &Modulus, c: &Residue, other: &FieldVec) -> FieldVec {
        debug_assert_eq!(self.dim(), other.dim());
        FieldVec {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| m.sub(a, &m.mul(c, b)))
                .collect(),
        }
    }

    /// Copy with coordinate `i` removed.
    pub fn drop_coord(&self, i: usize) -> FieldVec {
        let mut entries = Vec::with_capacity(self.entries.len() - 1);
        entries.extend_from_slice(&self.entries[..i]);
        entries.extend_from_slice(&self.entries[i + 1..]);
        FieldVec { entries }
    }

    /// Concatenation of several vectors.
    pub fn concat(parts: &[&FieldVec]) -> FieldVec {
        let mut entries = Vec::new();
        for p in parts {
            entries.extend_from_slice(&p.entries);
        }
        FieldVec { entries }
    }
}

/// An ordered family of vectors sharing a modulus and dimension: the
/// columns of the instance matrix.
#[derive(Debug, Clone)]
pub struct VecFamily {
    modulus: Modulus,
    dim: usize,
    vectors: Vec<FieldVec>,
}

impl VecFamily {
    pub fn new(modulus: Modulus, dim: usize, vectors: Vec<FieldVec>) -> Result<Self> {
        for v in &vectors {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.dim() });
            }
        }
        Ok(VecFamily { modulus, dim, vectors })
    }

    pub fn from_rows(modulus: &Modulus, dim: usize, rows: &[Vec<u64>]) -> Result<Self> {
        let vectors = rows.iter().map(|r| FieldVec::from_u64s(modulus, r)).collect();
        Self::new(modulus.clone(), dim, vectors)
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, i: usize) -> &FieldVec {
        &self.vectors[i]
    }

    pub fn vectors(&self) -> &[FieldVec] {
        &self.vectors
    }

    /// Evaluate a coefficient map against this family: sum of x_i * v_i.
    pub fn combine(&self, x: &CoeffMap) -> FieldVec {
        let m = &self.modulus;
        let mut acc = FieldVec::zeros(m, self.dim);
        for (&i, c) in x.iter() {
            acc = acc.add(m, &self.vectors[i].scale(m, c));
        }
        acc
    }
}

/// Row-echelon accumulator that tracks, for every stored row, its
/// expression as a combination of the original vectors.
struct Echelon<'a> {
    m: &'a Modulus,
    /// (pivot column, normalized row, combination over original indices)
    rows: Vec<(usize, FieldVec, Vec<(usize, Residue)>)>,
}

impl<'a> Echelon<'a> {
    fn new(m: &'a Modulus) -> Self {
        Echelon { m, rows: Vec::new() }
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduce `v` against the rows. Returns the residual and the merged
    /// combination of original vectors that was subtracted.
    fn reduce(&self, v: &FieldVec) -> (FieldVec, Vec<(usize, Residue)>) {
        let m = self.m;
        let mut cur = v.clone();
        let mut used: std::collections::BTreeMap<usize, Residue> = std::collections::BTreeMap::new();
        for (pivot, row, combo) in &self.rows {
            let c = cur.entry(*pivot).clone();
            if c.is_zero() {
                continue;
            }
            cur = cur.sub_scaled(m, &c, row);
            for (idx, coeff) in combo {
                let add = m.mul(&c, coeff);
                match used.entry(*idx) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(add);
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        let next = m.add(e.get(), &add);
                        if next.is_zero() {
                            e.remove();
                        } else {
                            *e.get_mut() = next;
                        }
                    }
                }
            }
        }
        (cur, used.into_iter().collect())
    }

    /// Insert a vector known to be independent of the stored rows.
    /// `residual` and `used` must come from `reduce`.
    fn insert(&mut self, orig_index: usize, residual: FieldVec, used: Vec<(usize, Residue)>) {
        let m = self.m;
        let pivot = residual.lowest_nonzero().expect("residual must be nonzero");
        let inv = m.inverse(residual.entry(pivot)).expect("pivot nonzero");
        let row = residual.scale(m, &inv);
        // combo for the normalized row: inv * (orig - used)
        let mut combo = vec![(orig_index, inv.clone())];
        for (idx, coeff) in used {
            let c = m.neg(&m.mul(&inv, &coeff));
            if !c.is_zero() {
                combo.push((idx, c));
            }
        }
        self.rows.push((pivot, row, combo));
        // Deterministic order: keep rows sorted by pivot column.
        self.rows.sort_by_key(|(p, _, _)| *p);
    }
}

/// Rank of a family, by greedy elimination in index order.
pub fn rank(family: &VecFamily) -> usize {
    let mut ech = Echelon::new(family.modulus());
    for (i, v) in family.vectors().iter().enumerate() {
        let (res, used) = ech.reduce(v);
        if !res.is_zero() {
            ech.insert(i, res, used);
        }
    }
    ech.rank()
}

/// Find a nontrivial linear dependency using only the first rank+1
/// vectors: returns a nonzero sparse map with sum alpha_i v_i = 0.
pub fn find_dependency(family: &VecFamily) -> Result<CoeffMap> {
    let m = family.modulus();
    let mut ech = Echelon::new(m);
    for (i, v) in family.vectors().iter().enumerate() {
        let (res, used) = ech.reduce(v);
        if res.is_zero() {
            // v_i = sum(used) => v_i - sum(used) = 0
            let mut map = CoeffMap::new();
            map.add_assign(m, i, &m.one());
            for (idx, coeff) in used {
                map.add_assign(m, idx, &m.neg(&coeff));
            }
            debug_assert!(!map.is_trivial());
            return Ok(map);
        }
        ech.insert(i, res, used);
    }
    Err(Error::NoDependency)
}

/// Strategy for `max_independent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisStrategy {
    Naive,
    Blocked,
}

/// Indices of a maximal linearly independent subset. Every excluded
/// vector lies in the span of the returned ones.
pub fn max_independent(family: &VecFamily, strategy: BasisStrategy) -> Vec<usize> {
    match strategy {
        BasisStrategy::Naive => max_independent_naive(family),
        BasisStrategy::Blocked => max_independent_blocked(family),
    }
}

fn max_independent_naive(family: &VecFamily) -> Vec<usize> {
    let mut ech = Echelon::new(family.modulus());
    let mut picked = Vec::new();
    for (i, v) in family.vectors().iter().enumerate() {
        let (res, used) = ech.reduce(v);
        if !res.is_zero() {
            ech.insert(i, res, used);
            picked.push(i);
        }
    }
    picked
}

/// Blocked basis search: batches of at most n vectors are merged into the
/// running independent set; each merge splits recursively in halves and
/// eliminates the second half against the first through a projector
/// (with an elimination fallback when the Gram matrix is singular).
fn max_independent_blocked(family: &VecFamily) -> Vec<usize> {
    let m = family.modulus();
    let n = family.dim().max(1);
    let mut selected: Vec<usize> = Vec::new();
    let total = family.len();
    let mut start = 0;
    while start < total {
        let end = (start + n).min(total);
        // Candidate pool: current basis plus the next batch, in index order.
        let mut pool: Vec<usize> = selected.clone();
        pool.extend(start..end);
        let vecs: Vec<FieldVec> = pool.iter().map(|&i| family.vector(i).clone()).collect();
        let kept = basis_recursive(m, &vecs);
        selected = kept.into_iter().map(|local| pool[local]).collect();
        selected.sort_unstable();
        start = end;
    }
    selected
}

/// Recursive split: basis of the first half, project the second half
/// against it, recurse on the residuals.
fn basis_recursive(m: &Modulus, vecs: &[FieldVec]) -> Vec<usize> {
    let l = vecs.len();
    if l == 0 {
        return Vec::new();
    }
    if l == 1 {
        return if vecs[0].is_zero() { Vec::new() } else { vec![0] };
    }
    let l1 = l / 2;
    let first_idx = basis_recursive(m, &vecs[..l1]);
    let v_cols: Vec<&FieldVec> = first_idx.iter().map(|&i| &vecs[i]).collect();
    let second: Vec<FieldVec> = vecs[l1..].to_vec();
    let residuals = match project_out(m, &v_cols, &second) {
        Some(r) => r,
        None => eliminate_against(m, &v_cols, &second),
    };
    let second_idx = basis_recursive(m, &residuals);
    let mut out = first_idx;
    out.extend(second_idx.into_iter().map(|j| l1 + j));
    out
}

/// Residuals U - V (V^T V)^{-1} V^T U; `None` when V^T V is singular
/// (possible over a finite field even for independent columns).
fn project_out(m: &Modulus, v_cols: &[&FieldVec], u_cols: &[FieldVec]) -> Option<Vec<FieldVec>> {
    let t = v_cols.len();
    if t == 0 {
        return Some(u_cols.to_vec());
    }
    // gram[i][j] = <v_i, v_j>
    let mut gram = vec![vec![m.zero(); t]; t];
    for i in 0..t {
        for j in 0..t {
            gram[i][j] = dot(m, v_cols[i], v_cols[j]);
        }
    }
    let gram_inv = invert_matrix(m, &gram)?;
    let mut residuals = Vec::with_capacity(u_cols.len());
    for u in u_cols {
        // b = V^T u, c = (V^T V)^{-1} b, residual = u - V c
        let b: Vec<Residue> = (0..t).map(|i| dot(m, v_cols[i], u)).collect();
        let c: Vec<Residue> = (0..t)
            .map(|i| {
                let mut acc = m.zero();
                for j in 0..t {
                    acc = m.add(&acc, &m.mul(&gram_inv[i][j], &b[j]));
                }
                acc
            })
            .collect();
        let mut res = u.clone();
        for (i, ci) in c.iter().enumerate() {
            res = res.sub_scaled(m, ci, v_cols[i]);
        }
        residuals.push(res);
    }
    Some(residuals)
}

/// Fallback: reduce each u against an echelon form of span(V).
fn eliminate_against(m: &Modulus, v_cols: &[&FieldVec], u_cols: &[FieldVec]) -> Vec<FieldVec> {
    let mut ech = Echelon::new(m);
    for (i, v) in v_cols.iter().enumerate() {
        let (res, used) = ech.reduce(v);
        if !res.is_zero() {
            ech.insert(i, res, used);
        }
    }
    u_cols.iter().map(|u| ech.reduce(u).0).collect()
}

fn dot(m: &Modulus, a: &FieldVec, b: &FieldVec) -> Residue {
    let mut acc = m.zero();
    for (x, y) in a.entries().iter().zip(b.entries()) {
        acc = m.add(&acc, &m.mul(x, y));
    }
    acc
}

/// Gauss-Jordan inverse; `None` if singular.
fn invert_matrix(m: &Modulus, a: &[Vec<Residue>]) -> Option<Vec<Vec<Residue>>> {
    let n = a.len();
    let mut work: Vec<Vec<Residue>> = a.to_vec();
    let mut inv: Vec<Vec<Residue>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { m.one() } else { m.zero() }).collect())
        .collect();
    for col in 0..n {
        let pivot_row = (col..n).find(|&r| !work[r][col].is_zero())?;
        work.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let inv_p = m.inverse(&work[col][col]).ok()?;
        for j in 0..n {
            work[col][j] = m.mul(&work[col][j], &inv_p);
            inv[col][j] = m.mul(&inv[col][j], &inv_p);
        }
        for r in 0..n {
            if r != col && !work[r][col].is_zero() {
                let f = work[r][col].clone();
                for j in 0..n {
                    work[r][j] = m.sub(&work[r][j], &m.mul(&f, &work[col][j]));
                    inv[r][j] = m.sub(&inv[r][j], &m.mul(&f, &inv[col][j]));
                }
            }
        }
    }
    Some(inv)
}

/// Decomposition of a family against a pivot vector u: each v_i equals
/// c_i * u + w_i with w_i zero at the pivot coordinate.
#[derive(Debug, Clone)]
pub struct SpanSplit {
    pub pivot_coord: usize,
    pub pivot_vec: FieldVec,
    pub components: Vec<(Residue, FieldVec)>,
}

/// Split every v_i as c_i u + w_i, pivoting on the lowest nonzero
/// coordinate of u.
pub fn span_split(u: &FieldVec, family: &VecFamily) -> Result<SpanSplit> {
    let m = family.modulus();
    let pivot = u.lowest_nonzero().ok_or(Error::ZeroVector)?;
    let inv_pivot = m.inverse(u.entry(pivot))?;
    let components = family
        .vectors()
        .iter()
        .map(|v| {
            let c = m.mul(v.entry(pivot), &inv_pivot);
            let w = v.sub_scaled(m, &c, u);
            debug_assert!(w.entry(pivot).is_zero());
            (c, w)
        })
        .collect();
    Ok(SpanSplit { pivot_coord: pivot, pivot_vec: u.clone(), components })
}

/// Express each target vector in the coordinates of a given independent
/// basis (columns), or `None` for targets outside the span.
pub fn coordinates_in_basis(
    m: &Modulus,
    basis: &[&FieldVec],
    targets: &[&FieldVec],
) -> Vec<Option<Vec<Residue>>> {
    let mut ech = Echelon::new(m);
    for (i, v) in basis.iter().enumerate() {
        let (res, used) = ech.reduce(v);
        if res.is_zero() {
            // Caller promised independence.
            panic!("coordinates_in_basis: basis vectors are dependent");
        }
        ech.insert(i, res, used);
    }
    targets
        .iter()
        .map(|t| {
            let (res, used) = ech.reduce(t);
            if !res.is_zero() {
                return None;
            }
            let mut coords = vec![m.zero(); basis.len()];
            for (idx, coeff) in used {
                coords[idx] = m.add(&coords[idx], &coeff);
            }
            Some(coords)
        })
        .collect()
}
