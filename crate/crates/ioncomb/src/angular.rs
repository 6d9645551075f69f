//! Wigner 3j symbols for the small angular momenta of a low-lying alkali-like
//! level scheme.
//!
//! Arguments are doubled so half-integer momenta stay exact: `two_j = 2j`,
//! `two_m = 2m`. The Racah single-sum form is exact in f64 for the j ≤ 5/2
//! range used here (largest factorial is 7!), and stays accurate to ~1e-12 for
//! considerably larger j.

fn factorial(n: i32) -> f64 {
    debug_assert!(n >= 0);
    (1..=n as u64).map(|k| k as f64).product()
}

fn triangle_ok(two_j1: i32, two_j2: i32, two_j3: i32) -> bool {
    two_j3 <= two_j1 + two_j2
        && two_j1 <= two_j2 + two_j3
        && two_j2 <= two_j3 + two_j1
        && (two_j1 + two_j2 + two_j3) % 2 == 0
}

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3) with all arguments doubled.
///
/// Returns 0 for violated selection rules; panics on malformed input
/// (|m| > j or mismatched integer/half-integer parity).
pub fn wigner_3j(
    two_j1: i32,
    two_j2: i32,
    two_j3: i32,
    two_m1: i32,
    two_m2: i32,
    two_m3: i32,
) -> f64 {
    for (tj, tm) in [(two_j1, two_m1), (two_j2, two_m2), (two_j3, two_m3)] {
        assert!(tj >= 0, "negative angular momentum");
        assert!(tm.abs() <= tj, "projection exceeds momentum: 2m={tm}, 2j={tj}");
        assert!((tj - tm) % 2 == 0, "j/m parity mismatch: 2j={tj}, 2m={tm}");
    }
    if two_m1 + two_m2 + two_m3 != 0 || !triangle_ok(two_j1, two_j2, two_j3) {
        return 0.0;
    }

    // All of these are guaranteed integers by the checks above.
    let i = |x: i32| -> i32 {
        debug_assert!(x % 2 == 0);
        x / 2
    };
    let a1 = i(two_j1 + two_j2 - two_j3);
    let a2 = i(two_j1 - two_j2 + two_j3);
    let a3 = i(-two_j1 + two_j2 + two_j3);
    let jt = i(two_j1 + two_j2 + two_j3);

    let delta = (factorial(a1) * factorial(a2) * factorial(a3) / factorial(jt + 1)).sqrt();

    let b1 = i(two_j1 + two_m1);
    let b2 = i(two_j1 - two_m1);
    let b3 = i(two_j2 + two_m2);
    let b4 = i(two_j2 - two_m2);
    let b5 = i(two_j3 + two_m3);
    let b6 = i(two_j3 - two_m3);
    let norm = (factorial(b1)
        * factorial(b2)
        * factorial(b3)
        * factorial(b4)
        * factorial(b5)
        * factorial(b6))
    .sqrt();

    let k1 = i(two_j3 - two_j2 + two_m1);
    let k2 = i(two_j3 - two_j1 - two_m2);
    let kmin = 0.max(-k1).max(-k2);
    let kmax = a1.min(b2).min(b3);

    let mut sum = 0.0;
    for k in kmin..=kmax {
        let term = factorial(k)
            * factorial(a1 - k)
            * factorial(b2 - k)
            * factorial(b3 - k)
            * factorial(k1 + k)
            * factorial(k2 + k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / term;
    }

    let phase = if (i(two_j1 - two_j2 - two_m3)).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    };
    phase * delta * norm * sum
}

/// Projection factor ⟨J_u m_u|d_q|J_l m_l⟩ / ⟨J_u‖d‖J_l⟩ for a spherical
/// component q of the dipole operator.
pub fn dipole_projection(
    two_j_up: i32,
    two_m_up: i32,
    two_j_lo: i32,
    two_m_lo: i32,
    q: i32,
) -> f64 {
    assert!(q.abs() <= 1);
    let sign = if ((two_j_up - two_m_up) / 2).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    };
    sign * wigner_3j(two_j_up, 2, two_j_lo, -two_m_up, 2 * q, two_m_lo)
}
