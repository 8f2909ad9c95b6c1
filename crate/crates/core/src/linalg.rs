//! Dense and banded complex linear algebra for the Nyström and oracle solves.
//!
//! Dense: row-major `CMatrix` with partial-pivot LU and a Hager-style 1-norm
//! condition estimate. Banded: compact-storage LU with partial pivoting
//! (bandwidth grows by `kl` during elimination) plus a capacitance-block
//! Woodbury wrapper for banded-plus-block operators.

use num_complex::Complex;

use crate::error::{Error, Result};

type C = Complex<f64>;

const ZERO: C = Complex::new(0.0, 0.0);

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[C] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[C]) -> Vec<C> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![ZERO; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = ZERO;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.data[i * self.cols + l];
                if a == ZERO {
                    continue;
                }
                let orow = other.row(l);
                let out_row = out.row_mut(i);
                for (o, b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &CMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: C) {
        for a in self.data.iter_mut() {
            *a *= s;
        }
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut best = 0.0f64;
        for j in 0..self.cols {
            let mut s = 0.0;
            for i in 0..self.rows {
                s += self.data[i * self.cols + j].norm();
            }
            best = best.max(s);
        }
        best
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.data
            .chunks(self.cols)
            .map(|r| r.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C;
    fn index(&self, (i, j): (usize, usize)) -> &C {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, P A = L U.
pub struct DenseLu {
    lu: CMatrix,
    pivots: Vec<usize>,
    norm_one_a: f64,
}

impl DenseLu {
    pub fn factor(a: CMatrix) -> Result<Self> {
        let n = a.rows();
        assert_eq!(n, a.cols(), "LU needs a square matrix");
        let norm_one_a = a.norm_one();
        let mut lu = a;
        let mut pivots: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut piv = col;
            let mut best = lu[(col, col)].norm();
            for r in (col + 1)..n {
                let mag = lu[(r, col)].norm();
                if mag > best {
                    best = mag;
                    piv = r;
                }
            }
            if best == 0.0 {
                return Err(Error::NearSingular { cond: f64::INFINITY });
            }
            if piv != col {
                pivots.swap(col, piv);
                for j in 0..n {
                    let tmp = lu[(col, j)];
                    lu[(col, j)] = lu[(piv, j)];
                    lu[(piv, j)] = tmp;
                }
            }
            let d = lu[(col, col)];
            for r in (col + 1)..n {
                let factor = lu[(r, col)] / d;
                lu[(r, col)] = factor;
                if factor != ZERO {
                    for j in (col + 1)..n {
                        let u = lu[(col, j)];
                        lu[(r, j)] -= factor * u;
                    }
                }
            }
        }
        Ok(Self {
            lu,
            pivots,
            norm_one_a,
        })
    }

    pub fn n(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve(&self, b: &[C]) -> Vec<C> {
        let n = self.n();
        assert_eq!(b.len(), n);
        let mut x: Vec<C> = self.pivots.iter().map(|&p| b[p]).collect();
        // forward: L y = P b (unit lower)
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        // back: U x = y
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        x
    }

    /// Solves A* x = b using the same factors (A* = U* L* P).
    pub fn solve_adjoint(&self, b: &[C]) -> Vec<C> {
        let n = self.n();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        // U* y = b (lower triangular with conj entries)
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(j, i)].conj() * x[j];
            }
            x[i] = acc / self.lu[(i, i)].conj();
        }
        // L* z = y (unit upper with conj entries)
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[(j, i)].conj() * x[j];
            }
            x[i] = acc;
        }
        // undo pivoting: x = P^T z
        let mut out = vec![ZERO; n];
        for (i, &p) in self.pivots.iter().enumerate() {
            out[p] = x[i];
        }
        out
    }

    /// 1-norm condition estimate, Hager-style: two inverse-norm probes plus
    /// one refinement through the adjoint solve.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.n();
        let start: Vec<C> = vec![Complex::new(1.0 / n as f64, 0.0); n];
        let y = self.solve(&start);
        let mut est = y.iter().map(|v| v.norm()).sum::<f64>();
        let xi: Vec<C> = y
            .iter()
            .map(|v| {
                if v.norm() == 0.0 {
                    Complex::new(1.0, 0.0)
                } else {
                    v / v.norm()
                }
            })
            .collect();
        let z = self.solve_adjoint(&xi);
        if let Some((j, _)) = z
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        {
            let mut e = vec![ZERO; n];
            e[j] = Complex::new(1.0, 0.0);
            let y2 = self.solve(&e);
            est = est.max(y2.iter().map(|v| v.norm()).sum::<f64>());
        }
        self.norm_one_a * est
    }
}

/// Banded complex matrix in compact storage: `band[i][j]` holds
/// A[i, i - kl + j] for j in 0..(kl + ku + 1).
#[derive(Debug, Clone)]
pub struct Banded {
    n: usize,
    kl: usize,
    ku: usize,
    band: Vec<C>, // n x (kl + ku + 1), row-major
}

impl Banded {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            band: vec![ZERO; n * (kl + ku + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn width(&self) -> usize {
        self.kl + self.ku + 1
    }

    pub fn get(&self, i: usize, j: usize) -> C {
        let (i, j) = (i as isize, j as isize);
        let off = j - i + self.kl as isize;
        if off < 0 || off >= self.width() as isize {
            ZERO
        } else {
            self.band[i as usize * self.width() + off as usize]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: C) {
        let off = j as isize - i as isize + self.kl as isize;
        assert!(
            off >= 0 && off < self.width() as isize,
            "entry ({i},{j}) outside band"
        );
        let w = self.width();
        self.band[i * w + off as usize] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: C) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    pub fn matvec(&self, x: &[C]) -> Vec<C> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![ZERO; self.n];
        let w = self.width();
        for i in 0..self.n {
            let jmin = i.saturating_sub(self.kl);
            let jmax = (i + self.ku).min(self.n - 1);
            let mut acc = ZERO;
            for j in jmin..=jmax {
                acc += self.band[i * w + (j + self.kl - i)] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// Shifted copy A - sigma I.
    pub fn shifted(&self, sigma: C) -> Banded {
        let mut out = self.clone();
        let w = out.width();
        for i in 0..out.n {
            out.band[i * w + out.kl] -= sigma;
        }
        out
    }

    /// LU factorization with partial pivoting. Row swaps widen the upper
    /// bandwidth by at most `kl`.
    pub fn factor(self) -> Result<BandedLu> {
        let n = self.n;
        let kl = self.kl;
        let ku = self.ku;
        let wu = kl + ku + 1; // working upper width after fill-in
        let mut u = vec![ZERO; n * (wu + kl)];
        let mut l = vec![ZERO; n * kl];
        let mut perm = vec![0usize; n];
        // spread compact rows into the working array (row i holds columns
        // i-kl .. i+ku+kl, stored from offset 0 at column i-kl)
        let wsrc = self.width();
        let wdst = wu + kl;
        for i in 0..n {
            for off in 0..wsrc {
                u[i * wdst + off] = self.band[i * wsrc + off];
            }
        }
        for col in 0..n {
            // pivot among rows col..min(col+kl, n-1); in row r the column
            // `col` sits at offset col - (r - kl) = col - r + kl
            let rmax = (col + kl).min(n - 1);
            let mut piv = col;
            let mut best = u[col * wdst + kl].norm();
            for r in (col + 1)..=rmax {
                let mag = u[r * wdst + (col + kl - r)].norm();
                if mag > best {
                    best = mag;
                    piv = r;
                }
            }
            if best == 0.0 {
                return Err(Error::NearSingular { cond: f64::INFINITY });
            }
            perm[col] = piv;
            if piv != col {
                // swap rows col and piv over absolute columns col..col+ku+kl;
                // column c sits at offset c - (row - kl) in its row
                for c in col..=(col + ku + kl).min(n - 1) {
                    let o1 = c + kl - col;
                    let o2 = c + kl - piv;
                    let tmp = u[col * wdst + o1];
                    u[col * wdst + o1] = u[piv * wdst + o2];
                    u[piv * wdst + o2] = tmp;
                }
            }
            let d = u[col * wdst + kl];
            for r in (col + 1)..=rmax {
                let off_c = col + kl - r; // offset of column `col` in row r
                let factor = u[r * wdst + off_c] / d;
                l[col * kl + (r - col - 1)] = factor;
                if factor != ZERO {
                    for c in (col + 1)..=(col + ku + kl).min(n - 1) {
                        let or = c + kl - r;
                        let oc = c + kl - col;
                        let uc = u[col * wdst + oc];
                        u[r * wdst + or] -= factor * uc;
                    }
                }
                u[r * wdst + off_c] = ZERO;
            }
        }
        Ok(BandedLu {
            n,
            kl,
            ku,
            u,
            l,
            perm,
        })
    }
}

/// Factored banded matrix; solves in O(n * (kl + ku)).
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    u: Vec<C>, // n x (kl + ku + 1 + kl), row i starts at column i - kl
    l: Vec<C>, // multipliers: l[col * kl + (r - col - 1)]
    perm: Vec<usize>,
}

impl BandedLu {
    pub fn solve(&self, b: &[C]) -> Vec<C> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let kl = self.kl;
        let ku = self.ku;
        let wdst = kl + ku + 1 + kl;
        let mut x = b.to_vec();
        for col in 0..n {
            let piv = self.perm[col];
            if piv != col {
                x.swap(col, piv);
            }
            let rmax = (col + kl).min(n - 1);
            for r in (col + 1)..=rmax {
                let factor = self.l[col * kl + (r - col - 1)];
                if factor != ZERO {
                    let xc = x[col];
                    x[r] -= factor * xc;
                }
            }
        }
        for i in (0..n).rev() {
            let cmax = (i + ku + kl).min(n - 1);
            let mut acc = x[i];
            for c in (i + 1)..=cmax {
                acc -= self.u[i * wdst + (c + kl - i)] * x[c];
            }
            x[i] = acc / self.u[i * wdst + kl];
        }
        x
    }
}

/// Banded operator plus a dense block supported on a contiguous index range
/// (rows and columns `start .. start + block.rows()`).
pub struct BandedPlusBlock {
    pub banded: Banded,
    pub block: Option<Block>,
}

#[derive(Debug, Clone)]
pub struct Block {
    pub start: usize,
    pub data: CMatrix, // square, len x len
}

impl BandedPlusBlock {
    pub fn n(&self) -> usize {
        self.banded.n()
    }

    pub fn matvec(&self, x: &[C]) -> Vec<C> {
        let mut y = self.banded.matvec(x);
        if let Some(block) = &self.block {
            let len = block.data.rows();
            let seg = &x[block.start..block.start + len];
            let contrib = block.data.matvec(seg);
            for (i, v) in contrib.into_iter().enumerate() {
                y[block.start + i] += v;
            }
        }
        y
    }

    /// Factors (A - sigma I) with the block folded in through a Woodbury
    /// capacitance matrix: block columns are probed through the banded
    /// factorization once per shift.
    pub fn shift_solver(&self, sigma: C) -> Result<ShiftSolver> {
        let lu = self.banded.shifted(sigma).factor()?;
        let cap = match &self.block {
            None => None,
            Some(block) => {
                let len = block.data.rows();
                let n = self.n();
                // M[p][q] = (B^{-1} e_{start+q})[start+p]
                let mut m = CMatrix::zeros(len, len);
                for q in 0..len {
                    let mut e = vec![ZERO; n];
                    e[block.start + q] = Complex::new(1.0, 0.0);
                    let col = lu.solve(&e);
                    for p in 0..len {
                        m[(p, q)] = col[block.start + p];
                    }
                }
                // capacitance I + D M where D is the block
                let mut cmat = block.data.matmul(&m);
                for i in 0..len {
                    cmat[(i, i)] += Complex::new(1.0, 0.0);
                }
                Some((DenseLu::factor(cmat)?, block.clone()))
            }
        };
        Ok(ShiftSolver { lu, cap })
    }
}

/// Applies (A - sigma I)^{-1} for a banded-plus-block A.
pub struct ShiftSolver {
    lu: BandedLu,
    cap: Option<(DenseLu, Block)>,
}

impl ShiftSolver {
    pub fn solve(&self, b: &[C]) -> Vec<C> {
        let t = self.lu.solve(b);
        match &self.cap {
            None => t,
            Some((cap_lu, block)) => {
                let len = block.data.rows();
                let seg = &t[block.start..block.start + len];
                let rhs = block.data.matvec(seg);
                let s = cap_lu.solve(&rhs);
                let mut scat = vec![ZERO; b.len()];
                for (i, v) in s.into_iter().enumerate() {
                    scat[block.start + i] = v;
                }
                let corr = self.lu.solve(&scat);
                t.into_iter().zip(corr).map(|(a, c)| a - c).collect()
            }
        }
    }
}
