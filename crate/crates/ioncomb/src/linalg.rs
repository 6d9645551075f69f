//! Dense complex linear algebra for the small operator spaces used here
//! (≤ 18 electronic levels, ≤ ~100 combined basis states): LU solves, the
//! scaling-and-squaring matrix exponential, Newton polar decomposition, and a
//! cyclic Jacobi eigensolver for Hermitian matrices.

use ndarray::Array2;
use num_complex::Complex64 as C64;

pub type CMat = Array2<C64>;

pub fn identity(n: usize) -> CMat {
    Array2::from_diag_elem(n, C64::new(1.0, 0.0))
}

pub fn dagger(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Max column sum of absolute values (induced 1-norm).
fn norm_1(a: &CMat) -> f64 {
    let n = a.ncols();
    (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solve A X = B by LU with partial pivoting; A is consumed as the workspace.
pub fn lu_solve(mut a: CMat, mut b: CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.nrows(), n);
    let m = b.ncols();

    for k in 0..n {
        // pivot
        let mut piv = k;
        let mut best = a[[k, k]].norm();
        for i in k + 1..n {
            let v = a[[i, k]].norm();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if piv != k {
            for j in 0..n {
                let t = a[[k, j]];
                a[[k, j]] = a[[piv, j]];
                a[[piv, j]] = t;
            }
            for j in 0..m {
                let t = b[[k, j]];
                b[[k, j]] = b[[piv, j]];
                b[[piv, j]] = t;
            }
        }
        let akk = a[[k, k]];
        for i in k + 1..n {
            let f = a[[i, k]] / akk;
            a[[i, k]] = f;
            for j in k + 1..n {
                let t = a[[k, j]];
                a[[i, j]] -= f * t;
            }
            for j in 0..m {
                let t = b[[k, j]];
                b[[i, j]] -= f * t;
            }
        }
    }
    // back substitution
    for j in 0..m {
        for i in (0..n).rev() {
            let mut s = b[[i, j]];
            for k in i + 1..n {
                s -= a[[i, k]] * b[[k, j]];
            }
            b[[i, j]] = s / a[[i, i]];
        }
    }
    b
}

pub fn inverse(a: &CMat) -> CMat {
    lu_solve(a.clone(), identity(a.nrows()))
}

// Padé-13 coefficients for the matrix exponential (Higham 2005).
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371_920_351_148_152;

/// Matrix exponential by scaling and squaring with the [13/13] Padé approximant.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let nrm = norm_1(a);
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.mapv(|z| z / 2f64.powi(s));

    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let eye = identity(n);

    let b = &PADE13;
    let u_inner = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u = a.dot(&(a6.dot(&u_inner) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &eye * b[1]));
    let v_inner = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = a6.dot(&v_inner) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &eye * b[0];

    let mut r = lu_solve(&v - &u, &v + &u);
    for _ in 0..s {
        r = r.dot(&r);
    }
    r
}

/// Unitary polar factor of a (near-unitary) matrix via the Newton iteration
/// X ← (X + X^{-†})/2. Returns the unitary together with the Frobenius
/// distance of the input from it, which for a re-unitarized evolution operator
/// measures the discarded non-unitary (absorption) part.
pub fn polar_unitary(m: &CMat) -> (CMat, f64) {
    let mut x = m.clone();
    for _ in 0..40 {
        let xinv_dag = dagger(&inverse(&x));
        let next = (&x + &xinv_dag) * C64::new(0.5, 0.0);
        let delta = frobenius(&(&next - &x));
        x = next;
        if delta < 1e-15 * x.nrows() as f64 {
            break;
        }
    }
    let defect = frobenius(&(m - &x));
    (x, defect)
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
/// Returns (eigenvalues ascending, eigenvectors as columns).
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = identity(n);

    let off = |m: &CMat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[[i, j]].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    let scale = frobenius(&m).max(f64::MIN_POSITIVE);

    for _sweep in 0..60 {
        if off(&m) <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[[p, q]];
                if apq.norm() <= 1e-300 {
                    continue;
                }
                let app = m[[p, p]].re;
                let aqq = m[[q, q]].re;
                let phase = apq / apq.norm();
                let b = apq.norm();
                // diagonalize [[app, b], [b, aqq]] then restore the phase
                let theta = 0.5 * (2.0 * b).atan2(app - aqq);
                let c = theta.cos();
                let s = theta.sin();
                let cp = C64::new(c, 0.0);
                let sp = phase * s;
                // columns p, q of M and V: right-multiply by G
                for i in 0..n {
                    let mip = m[[i, p]];
                    let miq = m[[i, q]];
                    m[[i, p]] = mip * cp + miq * sp.conj();
                    m[[i, q]] = miq * cp - mip * sp;
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = vip * cp + viq * sp.conj();
                    v[[i, q]] = viq * cp - vip * sp;
                }
                // rows p, q of M: left-multiply by G†
                for j in 0..n {
                    let mpj = m[[p, j]];
                    let mqj = m[[q, j]];
                    m[[p, j]] = mpj * cp + mqj * sp;
                    m[[q, j]] = mqj * cp - mpj * sp.conj();
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let eig: Vec<f64> = (0..n).map(|i| m[[i, i]].re).collect();
    order.sort_by(|&i, &j| eig[i].partial_cmp(&eig[j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig[i]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (newcol, &oldcol) in order.iter().enumerate() {
        for i in 0..n {
            vectors[[i, newcol]] = v[[i, oldcol]];
        }
    }
    (eigenvalues, vectors)
}

/// Eigenvalues only.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    hermitian_eigen(a).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    fn random_hermitian(n: usize, seed: u64) -> CMat {
        // tiny xorshift so the test has no RNG dependency in the lib
        let mut state = seed | 1;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state as f64 / u64::MAX as f64) - 0.5
        };
        let mut a: CMat = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                a[[i, j]] = C64::new(next(), next());
            }
        }
        let ad = dagger(&a);
        (&a + &ad) * C64::new(0.5, 0.0)
    }

    #[test]
    fn lu_solves_identity() {
        let a = random_hermitian(7, 42) + identity(7) * C64::new(4.0, 0.0);
        let inv = inverse(&a);
        let res = a.dot(&inv) - identity(7);
        assert!(frobenius(&res) < 1e-12);
    }

    #[test]
    fn expm_matches_diagonal_case() {
        let a = array![
            [C64::new(0.0, 1.3), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(0.0, -0.4)]
        ];
        let e = expm(&a);
        assert_relative_eq!(e[[0, 0]].re, 1.3f64.cos(), epsilon = 1e-14);
        assert_relative_eq!(e[[0, 0]].im, 1.3f64.sin(), epsilon = 1e-14);
        assert_relative_eq!(e[[1, 1]].im, -(0.4f64.sin()), epsilon = 1e-14);
    }

    #[test]
    fn expm_antihermitian_is_unitary() {
        let h = random_hermitian(9, 7) * C64::new(3.0, 0.0);
        let u = expm(&(h.mapv(|z| z * C64::new(0.0, -1.0))));
        let res = dagger(&u).dot(&u) - identity(9);
        assert!(frobenius(&res) < 1e-12, "unitarity defect {}", frobenius(&res));
    }

    #[test]
    fn expm_derivative_check() {
        // d/dt exp(tA) at small t ≈ I + tA + t²A²/2
        let a = random_hermitian(5, 99).mapv(|z| z * C64::new(0.0, -1.0));
        let t = 1e-3;
        let e = expm(&a.mapv(|z| z * t));
        let taylor = identity(5) + &a * C64::new(t, 0.0) + a.dot(&a) * C64::new(t * t / 2.0, 0.0);
        assert!(frobenius(&(&e - &taylor)) < 1e-9);
    }

    #[test]
    fn polar_recovers_unitary() {
        let h = random_hermitian(6, 11);
        let u = expm(&(h.mapv(|z| z * C64::new(0.0, -1.0))));
        // contaminate with a small Hermitian defect
        let m = &u + &(random_hermitian(6, 5) * C64::new(1e-6, 0.0));
        let (w, defect) = polar_unitary(&m);
        let res = dagger(&w).dot(&w) - identity(6);
        assert!(frobenius(&res) < 1e-13);
        assert!(defect > 0.0 && defect < 1e-4);
    }

    #[test]
    fn jacobi_reconstructs() {
        let a = random_hermitian(10, 123);
        let (vals, vecs) = hermitian_eigen(&a);
        let lam = Array2::from_diag(&ndarray::Array1::from_iter(
            vals.iter().map(|&v| C64::new(v, 0.0)),
        ));
        let recon = vecs.dot(&lam).dot(&dagger(&vecs));
        assert!(frobenius(&(&recon - &a)) < 1e-12 * frobenius(&a).max(1.0));
        // ascending order
        for w in vals.windows(2) {
            assert!(w[0] <= w[1] + 1e-14);
        }
    }

    #[test]
    fn jacobi_known_eigenvalues() {
        // Pauli-x has eigenvalues ±1
        let sx = array![
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
        ];
        let vals = hermitian_eigenvalues(&sx);
        assert_relative_eq!(vals[0], -1.0, epsilon = 1e-14);
        assert_relative_eq!(vals[1], 1.0, epsilon = 1e-14);
    }
}
