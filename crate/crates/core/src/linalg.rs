//! Dense complex matrices sized for truncated Fock windows.
//!
//! This is deliberately small: row-major storage, the handful of products
//! and norms the oracles need, a scaling-and-squaring matrix exponential
//! that first splits the matrix into connected components (conserved-quantity
//! generators fall apart into many small blocks, which is what keeps the
//! large-cutoff oracle runs cheap), Kronecker contraction helpers, and a
//! Jacobi eigensolver for Hermitian checks in tests.

use num_complex::Complex;

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Mat { rows, cols, data }
    }

    /// Matrix with real entries given by `f`, zero imaginary part.
    pub fn from_real_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        Mat::from_fn(rows, cols, |r, c| Complex::new(f(r, c), T::zero()))
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
    pub fn at(&self, r: usize, c: usize) -> Complex<T> {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex<T>) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[Complex<T>] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |r, c| self.at(c, r))
    }

    pub fn adjoint(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |r, c| self.at(c, r).conj())
    }

    pub fn scaled(&self, k: Complex<T>) -> Self {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = *v * k;
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix add shape");
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&rhs.data) {
            *v = *v + *w;
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix sub shape");
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&rhs.data) {
            *v = *v - *w;
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matrix product shape");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a.re.is_zero() && a.im.is_zero() {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o = *o + a * *b;
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape");
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (a, x)| acc + *a * *x)
            })
            .collect()
    }

    pub fn trace(&self) -> Complex<T> {
        assert!(self.is_square(), "trace of non-square matrix");
        (0..self.rows).fold(Complex::new(T::zero(), T::zero()), |acc, i| acc + self.at(i, i))
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> T {
        let mut best = T::zero();
        for c in 0..self.cols {
            let mut s = T::zero();
            for r in 0..self.rows {
                s = s + self.at(r, c).norm();
            }
            if s > best {
                best = s;
            }
        }
        best
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|v| v.norm())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn max_abs_imag(&self) -> T {
        self.data
            .iter()
            .map(|v| v.im.abs())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn kron(a: &Self, b: &Self) -> Self {
        let mut out = Mat::zeros(a.rows * b.rows, a.cols * b.cols);
        for ar in 0..a.rows {
            for ac in 0..a.cols {
                let av = a.at(ar, ac);
                if av.re.is_zero() && av.im.is_zero() {
                    continue;
                }
                for br in 0..b.rows {
                    for bc in 0..b.cols {
                        out.set(ar * b.rows + br, ac * b.cols + bc, av * b.at(br, bc));
                    }
                }
            }
        }
        out
    }

    /// exp(A) by scaling and squaring with a Taylor core.
    ///
    /// The matrix is first partitioned into connected components of its
    /// symmetrized sparsity pattern and each component is exponentiated on
    /// its own; for block-diagonalizable generators this is exact and turns
    /// one large exponential into many small ones.
    pub fn expm(&self) -> Self {
        assert!(self.is_square(), "expm of non-square matrix");
        let n = self.rows;
        let comps = self.sparsity_components();
        let mut out = Mat::zeros(n, n);
        for comp in comps {
            if comp.len() == 1 {
                let i = comp[0];
                out.set(i, i, self.at(i, i).exp());
                continue;
            }
            let sub = Mat::from_fn(comp.len(), comp.len(), |r, c| self.at(comp[r], comp[c]));
            let e = sub.expm_dense();
            for (r, &gr) in comp.iter().enumerate() {
                for (c, &gc) in comp.iter().enumerate() {
                    out.set(gr, gc, e.at(r, c));
                }
            }
        }
        out
    }

    fn sparsity_components(&self) -> Vec<Vec<usize>> {
        let n = self.rows;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    let v = self.at(r, c);
                    if !(v.re.is_zero() && v.im.is_zero()) {
                        let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                        if a != b {
                            parent[a] = b;
                        }
                    }
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..n {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
        groups.into_values().collect()
    }

    fn expm_dense(&self) -> Self {
        let n = self.rows;
        let norm = self.one_norm();
        let mut s: u32 = 0;
        if norm > T::of(0.25) {
            let ratio = (norm / T::of(0.25)).log2().ceil();
            s = num_traits::cast::<T, f64>(ratio).map(|x| x as u32).unwrap_or(0).min(64);
        }
        let scale = T::of(0.5).powi(s as i32);
        let b = self.scaled(Complex::new(scale, T::zero()));
        // Taylor to 12th order; with the 1-norm scaled below 1/4 the
        // remainder is ~1e-18 relative.
        let mut sum = Mat::identity(n);
        let mut term = Mat::identity(n);
        for k in 1..=12 {
            term = term.matmul(&b);
            let inv_k = Complex::new(T::one() / T::of_usize(k), T::zero());
            term = term.scaled(inv_k);
            sum = sum.add(&term);
        }
        for _ in 0..s {
            sum = sum.matmul(&sum);
        }
        sum
    }
}

/// Partial transpose on the second tensor factor of a `da*db` square matrix.
pub fn partial_transpose_second<T: Scalar>(m: &Mat<T>, da: usize, db: usize) -> Mat<T> {
    assert!(m.is_square() && m.rows() == da * db, "partial transpose shape");
    Mat::from_fn(da * db, da * db, |r, c| {
        let (ra, rb) = (r / db, r % db);
        let (ca, cb) = (c / db, c % db);
        m.at(ra * db + cb, ca * db + rb)
    })
}

/// U * (A ⊗ B) without forming the Kronecker product.
pub fn kron_mul_right<T: Scalar>(u: &Mat<T>, a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    let (da, db) = (a.rows(), b.rows());
    assert!(a.is_square() && b.is_square(), "kron factors must be square");
    assert!(u.is_square() && u.rows() == da * db, "kron contraction shape");
    let d = da * db;
    // stage 1: contract the A index. v[r, i*db + l] = sum_k u[r, k*db + l] a[k, i]
    let mut v: Mat<T> = Mat::zeros(d, d);
    for r in 0..d {
        for k in 0..da {
            for i in 0..da {
                let aki = a.at(k, i);
                if aki.re.is_zero() && aki.im.is_zero() {
                    continue;
                }
                for l in 0..db {
                    let x = u.at(r, k * db + l) * aki;
                    let idx = i * db + l;
                    v.set(r, idx, v.at(r, idx) + x);
                }
            }
        }
    }
    // stage 2: contract the B index. w[r, i*db + j] = sum_l v[r, i*db + l] b[l, j]
    let mut w: Mat<T> = Mat::zeros(d, d);
    for r in 0..d {
        for i in 0..da {
            for l in 0..db {
                let vl = v.at(r, i * db + l);
                if vl.re.is_zero() && vl.im.is_zero() {
                    continue;
                }
                for j in 0..db {
                    let idx = i * db + j;
                    w.set(r, idx, w.at(r, idx) + vl * b.at(l, j));
                }
            }
        }
    }
    w
}

/// (A ⊗ B) * U without forming the Kronecker product.
pub fn kron_mul_left<T: Scalar>(a: &Mat<T>, b: &Mat<T>, u: &Mat<T>) -> Mat<T> {
    let (da, db) = (a.rows(), b.rows());
    assert!(a.is_square() && b.is_square(), "kron factors must be square");
    assert!(u.is_square() && u.rows() == da * db, "kron contraction shape");
    let d = da * db;
    // stage 1: v[i*db + l, c] = sum_k a[i, k] u[k*db + l, c]
    let mut v: Mat<T> = Mat::zeros(d, d);
    for i in 0..da {
        for k in 0..da {
            let aik = a.at(i, k);
            if aik.re.is_zero() && aik.im.is_zero() {
                continue;
            }
            for l in 0..db {
                for c in 0..d {
                    let idx = i * db + l;
                    v.set(idx, c, v.at(idx, c) + aik * u.at(k * db + l, c));
                }
            }
        }
    }
    // stage 2: w[i*db + j, c] = sum_l b[j, l] v[i*db + l, c]
    let mut w: Mat<T> = Mat::zeros(d, d);
    for i in 0..da {
        for j in 0..db {
            for l in 0..db {
                let bjl = b.at(j, l);
                if bjl.re.is_zero() && bjl.im.is_zero() {
                    continue;
                }
                for c in 0..d {
                    let idx = i * db + j;
                    w.set(idx, c, w.at(idx, c) + bjl * v.at(i * db + l, c));
                }
            }
        }
    }
    w
}

/// Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations, ascending.
pub fn hermitian_eigenvalues<T: Scalar>(m: &Mat<T>, tol: T) -> Vec<T> {
    assert!(m.is_square(), "eigenvalues of non-square matrix");
    let n = m.rows();
    let mut a = m.clone();
    let scale = a.max_abs().max(T::min_positive_value());
    for _sweep in 0..40 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + a.at(p, q).norm_sqr();
            }
        }
        if off.sqrt() <= tol * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.at(p, q);
                let abs = apq.norm();
                if abs <= tol * scale * T::of(1e-3) {
                    continue;
                }
                let phase = apq / Complex::new(abs, T::zero());
                let app = a.at(p, p).re;
                let aqq = a.at(q, q).re;
                let tau = (aqq - app) / (T::of(2.0) * abs);
                let t = {
                    let root = (tau * tau + T::one()).sqrt();
                    if tau >= T::zero() {
                        -T::one() / (tau + root)
                    } else {
                        T::one() / (-tau + root)
                    }
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // J differs from the identity in the (p,q) plane:
                // J[p,p] = c, J[p,q] = -s*phase, J[q,p] = s*conj(phase), J[q,q] = c
                let jpq = Complex::new(-s, T::zero()) * phase;
                let jqp = Complex::new(s, T::zero()) * phase.conj();
                let cc = Complex::new(c, T::zero());
                // A <- A J (columns p, q)
                for r in 0..n {
                    let arp = a.at(r, p);
                    let arq = a.at(r, q);
                    a.set(r, p, arp * cc + arq * jqp);
                    a.set(r, q, arp * jpq + arq * cc);
                }
                // A <- J^H A (rows p, q)
                for ccol in 0..n {
                    let apc = a.at(p, ccol);
                    let aqc = a.at(q, ccol);
                    a.set(p, ccol, apc * cc + aqc * jqp.conj());
                    a.set(q, ccol, apc * jpq.conj() + aqc * cc);
                }
            }
        }
    }
    let mut eig: Vec<T> = (0..n).map(|i| a.at(i, i).re).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("NaN eigenvalue"));
    eig
}
