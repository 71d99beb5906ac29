//! Dense and sparse complex linear algebra for the Fock oracle: scaling-and-
//! squaring Pade matrix exponential, LU solves, a Hermitian Jacobi
//! eigensolver for state diagnostics, Kronecker products, and a CSR matrix
//! for number-conserving unitaries.

use ndarray::Array2;
use num_complex::Complex64;

type CMat = Array2<Complex64>;

pub fn eye(n: usize) -> CMat {
    Array2::from_diag_elem(n, Complex64::new(1.0, 0.0))
}

pub fn adjoint(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

/// Max column sum of absolute values (the 1-norm used by expm scaling).
fn one_norm(a: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

/// LU decomposition with partial pivoting; solves A X = B in place.
pub fn solve(a: &CMat, b: &CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.nrows());
    let mut lu = a.clone();
    let mut x = b.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut piv = k;
        let mut best = lu[(perm[k], k)].norm();
        for (i, &pi) in perm.iter().enumerate().skip(k + 1) {
            let v = lu[(pi, k)].norm();
            if v > best {
                best = v;
                piv = i;
            }
        }
        perm.swap(k, piv);
        let pk = perm[k];
        let pivot = lu[(pk, k)];
        assert!(pivot.norm() > 0.0, "singular matrix in LU solve");
        for &pi in perm.iter().skip(k + 1) {
            let factor = lu[(pi, k)] / pivot;
            lu[(pi, k)] = factor;
            for j in k + 1..n {
                let sub = factor * lu[(pk, j)];
                lu[(pi, j)] -= sub;
            }
            for j in 0..x.ncols() {
                let sub = factor * x[(pk, j)];
                x[(pi, j)] -= sub;
            }
        }
    }
    // back substitution
    let mut out = Array2::zeros((n, b.ncols()));
    for j in 0..b.ncols() {
        for k in (0..n).rev() {
            let mut acc = x[(perm[k], j)];
            for i in k + 1..n {
                acc -= lu[(perm[k], i)] * out[(i, j)];
            }
            out[(k, j)] = acc / lu[(perm[k], k)];
        }
    }
    out
}

const PADE13_B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// exp(A) by [13/13] Pade with scaling and squaring.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let theta13 = 5.371920351148152;
    let norm = one_norm(a);
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / 2f64.powi(s));
    let a2 = scaled.dot(&scaled);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let b = |i: usize| Complex64::new(PADE13_B[i], 0.0);
    let id = eye(n);

    let u_inner = a6.mapv(|z| z * b(13)) + &a4.mapv(|z| z * b(11)) + &a2.mapv(|z| z * b(9));
    let u_poly = a6.dot(&u_inner)
        + &a6.mapv(|z| z * b(7))
        + &a4.mapv(|z| z * b(5))
        + &a2.mapv(|z| z * b(3))
        + &id.mapv(|z| z * b(1));
    let u = scaled.dot(&u_poly);

    let v_inner = a6.mapv(|z| z * b(12)) + &a4.mapv(|z| z * b(10)) + &a2.mapv(|z| z * b(8));
    let v = a6.dot(&v_inner)
        + &a6.mapv(|z| z * b(6))
        + &a4.mapv(|z| z * b(4))
        + &a2.mapv(|z| z * b(2))
        + &id.mapv(|z| z * b(0));

    let mut result = solve(&(&v - &u), &(&v + &u));
    for _ in 0..s {
        result = result.dot(&result);
    }
    result
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.
pub fn hermitian_eigenvalues(h: &CMat) -> Vec<f64> {
    let n = h.nrows();
    assert_eq!(n, h.ncols());
    let mut a = h.clone();
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() < 1e-12 * (1.0 + one_norm(h)) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.norm() < 1e-300 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // phase so the pivot becomes real, then a real Jacobi angle
                let phase = apq / apq.norm();
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // columns: (cp, cq) -> (c cp - s phase* cq, s phase cp + c cq)
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * c - aiq * phase.conj() * s;
                    a[(i, q)] = aip * phase * s + aiq * c;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * c - aqj * phase * s;
                    a[(q, j)] = apj * phase.conj() * s + aqj * c;
                }
            }
        }
    }
    (0..n).map(|i| a[(i, i)].re).collect()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Trace out the trailing subsystem: input on H_keep (x) H_drop.
pub fn partial_trace_last(rho: &CMat, keep: usize, drop: usize) -> CMat {
    assert_eq!(rho.nrows(), keep * drop);
    let mut out = Array2::zeros((keep, keep));
    for i in 0..keep {
        for j in 0..keep {
            let mut acc = Complex64::new(0.0, 0.0);
            for e in 0..drop {
                acc += rho[(i * drop + e, j * drop + e)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Compressed sparse rows over Complex64; used for number-conserving
/// unitaries whose dense form would dominate the runtime.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<Complex64>,
}

impl Csr {
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(triplets.len());
        let mut val = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            row_ptr[r + 1] += 1;
            col.push(c);
            val.push(v);
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            n,
            row_ptr,
            col,
            val,
        }
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    /// Sparse-dense product self . b.
    pub fn dot_dense(&self, b: &CMat) -> CMat {
        assert_eq!(self.n, b.nrows());
        let cols = b.ncols();
        let mut out = Array2::zeros((self.n, cols));
        for r in 0..self.n {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col[idx];
                let v = self.val[idx];
                for j in 0..cols {
                    out[(r, j)] += v * b[(c, j)];
                }
            }
        }
        out
    }

    /// U rho U^dagger, using only sparse-dense products.
    pub fn sandwich(&self, rho: &CMat) -> CMat {
        let x = self.dot_dense(rho); // U rho
        let y = self.dot_dense(&adjoint(&x)); // U (U rho)^H = U rho^H U^H ... then adjoint
        adjoint(&y)
    }

    pub fn to_dense(&self) -> CMat {
        let mut out = Array2::zeros((self.n, self.n));
        for r in 0..self.n {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                out[(r, self.col[idx])] = self.val[idx];
            }
        }
        out
    }
}
