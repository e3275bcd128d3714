//! Exact Gaussian elimination over the rationals.
//!
//! Everything here is deterministic: pivots are chosen as the first nonzero
//! entry in declaration order, so certificate coordinates and "echelon order"
//! tie-breaking are reproducible across runs.

use crate::Rational;
use num::{One, Zero};

#[derive(Debug, Clone)]
pub struct QMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Rational>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map(|v| v.len()).unwrap_or(0);
        assert!(rows.iter().all(|v| v.len() == c));
        QMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> QMatrix {
        let mut out = QMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn mul(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = QMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self.get(i, j) * &v[j])
                    .fold(Rational::zero(), |a, b| a + b)
            })
            .collect()
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for col in 0..m.cols {
            let pivot = (rank..m.rows).find(|&r| !m.get(r, col).is_zero());
            let Some(p) = pivot else { continue };
            m.swap_rows(rank, p);
            let inv = m.get(rank, col).clone().recip();
            for j in col..m.cols {
                let v = m.get(rank, j) * &inv;
                m.set(rank, j, v);
            }
            for r in 0..m.rows {
                if r != rank && !m.get(r, col).is_zero() {
                    let factor = m.get(r, col).clone();
                    for j in col..m.cols {
                        let v = m.get(r, j) - &factor * m.get(rank, j);
                        m.set(r, j, v);
                    }
                }
            }
            rank += 1;
            if rank == m.rows {
                break;
            }
        }
        rank
    }

    pub fn det(&self) -> Rational {
        assert_eq!(self.rows, self.cols);
        let mut m = self.clone();
        let mut det = Rational::one();
        for col in 0..m.cols {
            let pivot = (col..m.rows).find(|&r| !m.get(r, col).is_zero());
            let Some(p) = pivot else {
                return Rational::zero();
            };
            if p != col {
                m.swap_rows(col, p);
                det = -det;
            }
            let d = m.get(col, col).clone();
            det *= &d;
            let inv = d.recip();
            for r in col + 1..m.rows {
                if m.get(r, col).is_zero() {
                    continue;
                }
                let factor = m.get(r, col) * &inv;
                for j in col..m.cols {
                    let v = m.get(r, j) - &factor * m.get(col, j);
                    m.set(r, j, v);
                }
            }
        }
        det
    }

    /// One solution of `self * x = rhs` with free variables set to zero, or
    /// None when the system is inconsistent.
    pub fn solve(&self, rhs: &[Rational]) -> Option<Vec<Rational>> {
        assert_eq!(rhs.len(), self.rows);
        let mut m = self.clone();
        let mut b = rhs.to_vec();
        let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
        let mut row = 0;
        for col in 0..m.cols {
            let Some(p) = (row..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
                continue;
            };
            m.swap_rows(row, p);
            b.swap(row, p);
            let inv = m.get(row, col).clone().recip();
            for j in col..m.cols {
                let v = m.get(row, j) * &inv;
                m.set(row, j, v);
            }
            b[row] = &b[row] * &inv;
            for r in 0..m.rows {
                if r != row && !m.get(r, col).is_zero() {
                    let factor = m.get(r, col).clone();
                    for j in col..m.cols {
                        let v = m.get(r, j) - &factor * m.get(row, j);
                        m.set(r, j, v);
                    }
                    b[r] = &b[r] - &factor * &b[row];
                }
            }
            pivots.push((row, col));
            row += 1;
            if row == m.rows {
                break;
            }
        }
        for r in row..m.rows {
            if !b[r].is_zero() {
                return None;
            }
        }
        let mut x = vec![Rational::zero(); self.cols];
        for (r, c) in pivots {
            x[c] = b[r].clone();
        }
        Some(x)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

#[derive(Debug)]
pub enum Insert {
    /// Vector was independent and joined the basis.
    Added,
    /// Vector already lay in the span; coordinates over inserted vectors.
    InSpan(Vec<Rational>),
}

#[derive(Debug, Clone)]
struct EchRow {
    pivot: usize,
    v: Vec<Rational>,
    combo: Vec<Rational>,
}

/// Incrementally built row space in reduced echelon form, remembering how
/// each basis row combines the vectors inserted so far.
#[derive(Debug, Clone)]
pub struct RowSpace {
    ncols: usize,
    inserted: usize,
    rows: Vec<EchRow>,
}

impl RowSpace {
    pub fn new(ncols: usize) -> Self {
        RowSpace {
            ncols,
            inserted: 0,
            rows: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn inserted(&self) -> usize {
        self.inserted
    }

    fn pad(&self, combo: &[Rational]) -> Vec<Rational> {
        let mut c = combo.to_vec();
        c.resize(self.inserted, Rational::zero());
        c
    }

    /// Writes `v` as (combination of inserted vectors) + residual.
    pub fn reduce(&self, v: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
        assert_eq!(v.len(), self.ncols);
        let mut res = v.to_vec();
        let mut combo = vec![Rational::zero(); self.inserted];
        for row in &self.rows {
            let c = res[row.pivot].clone();
            if c.is_zero() {
                continue;
            }
            for j in 0..self.ncols {
                if !row.v[j].is_zero() {
                    res[j] = &res[j] - &c * &row.v[j];
                }
            }
            for (j, rc) in row.combo.iter().enumerate() {
                if !rc.is_zero() {
                    combo[j] = &combo[j] + &c * rc;
                }
            }
        }
        (res, combo)
    }

    pub fn insert(&mut self, v: &[Rational]) -> Insert {
        let (mut res, combo) = self.reduce(v);
        let Some(pivot) = res.iter().position(|c| !c.is_zero()) else {
            return Insert::InSpan(combo);
        };
        // new row = (v - used combination) / res[pivot]
        let scale = res[pivot].clone().recip();
        for c in res.iter_mut() {
            *c = &*c * &scale;
        }
        let mut row_combo = self.pad(&combo);
        for c in row_combo.iter_mut() {
            *c = -(&*c * &scale);
        }
        row_combo.push(scale);
        self.inserted += 1;
        // keep existing rows reduced against the new pivot
        let new_row = EchRow {
            pivot,
            v: res,
            combo: row_combo,
        };
        for row in &mut self.rows {
            let c = row.v[pivot].clone();
            if c.is_zero() {
                continue;
            }
            for j in 0..self.ncols {
                if !new_row.v[j].is_zero() {
                    row.v[j] = &row.v[j] - &c * &new_row.v[j];
                }
            }
            row.combo.resize(self.inserted, Rational::zero());
            for (j, rc) in new_row.combo.iter().enumerate() {
                if !rc.is_zero() {
                    row.combo[j] = &row.combo[j] - &c * rc;
                }
            }
        }
        self.rows.push(new_row);
        Insert::Added
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    fn qs(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&n| q(n)).collect()
    }

    #[test]
    fn rank_and_det_agree_on_small_matrices() {
        let m = QMatrix::from_rows(vec![qs(&[1, 2]), qs(&[2, 4])]);
        assert_eq!(m.rank(), 1);
        assert_eq!(m.det(), q(0));
        let m2 = QMatrix::from_rows(vec![qs(&[2, 1]), qs(&[1, 1])]);
        assert_eq!(m2.rank(), 2);
        assert_eq!(m2.det(), q(1));
    }

    #[test]
    fn solve_finds_echelon_solution() {
        // x + y = 3, 2x + y = 4 -> x = 1, y = 2
        let m = QMatrix::from_rows(vec![qs(&[1, 1]), qs(&[2, 1])]);
        let x = m.solve(&qs(&[3, 4])).unwrap();
        assert_eq!(x, qs(&[1, 2]));
        // inconsistent
        let m2 = QMatrix::from_rows(vec![qs(&[1, 1]), qs(&[2, 2])]);
        assert!(m2.solve(&qs(&[1, 3])).is_none());
        // underdetermined: free variable pinned to zero
        let m3 = QMatrix::from_rows(vec![qs(&[1, 1, 1])]);
        let x3 = m3.solve(&qs(&[5])).unwrap();
        assert_eq!(x3, qs(&[5, 0, 0]));
    }

    #[test]
    fn rowspace_reports_exact_combinations() {
        let mut rs = RowSpace::new(3);
        assert!(matches!(rs.insert(&qs(&[1, 1, 0])), Insert::Added));
        assert!(matches!(rs.insert(&qs(&[0, 1, 1])), Insert::Added));
        match rs.insert(&qs(&[2, 3, 1])) {
            Insert::InSpan(c) => {
                assert_eq!(c, qs(&[2, 1]));
            }
            Insert::Added => panic!("vector should be dependent"),
        }
        let (res, combo) = rs.reduce(&qs(&[1, 0, -1]));
        assert!(res.iter().all(|c| c.is_zero()));
        assert_eq!(combo, qs(&[1, -1]));
    }

    #[test]
    fn rowspace_combination_reconstructs_input() {
        let vecs = [qs(&[3, 1, 4]), qs(&[1, 5, 9]), qs(&[2, 6, 5])];
        let mut rs = RowSpace::new(3);
        for v in &vecs {
            rs.insert(v);
        }
        let target = qs(&[7, 13, 23]);
        let (res, combo) = rs.reduce(&target);
        assert!(res.iter().all(|c| c.is_zero()));
        let mut back = vec![q(0), q(0), q(0)];
        for (c, v) in combo.iter().zip(&vecs) {
            for j in 0..3 {
                back[j] = &back[j] + c * &v[j];
            }
        }
        assert_eq!(back, target);
    }
}
