//! Adaptive Dormand-Prince 5(4) integration on complex matrix-valued states,
//! used for pulse-window propagators and for direct density-matrix stepping.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type State = Array2<C64>;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_initial: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-13,
            h_initial: 0.0, // 0 = auto
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct OdeStats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// embedded 4th-order weights
const E1: f64 = 5179.0 / 57600.0;
const E3: f64 = 7571.0 / 16695.0;
const E4: f64 = 393.0 / 640.0;
const E5: f64 = -92097.0 / 339200.0;
const E6: f64 = 187.0 / 2100.0;
const E7: f64 = 1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

fn error_norm(err: &State, y0: &State, y1: &State, rtol: f64, atol: f64) -> f64 {
    let mut sum = 0.0;
    let n = err.len() as f64;
    for ((e, a), b) in err.iter().zip(y0.iter()).zip(y1.iter()) {
        let scale = atol + rtol * a.norm().max(b.norm());
        let r = e.norm() / scale;
        sum += r * r;
    }
    (sum / n).sqrt()
}

/// Integrate dy/dt = f(t, y) from `t0` to `t1` (t1 > t0).
pub fn integrate<F>(f: F, t0: f64, t1: f64, y0: State, opts: &OdeOptions) -> Result<(State, OdeStats)>
where
    F: Fn(f64, &State) -> State,
{
    assert!(t1 > t0);
    let span = t1 - t0;
    let mut h = if opts.h_initial > 0.0 {
        opts.h_initial
    } else {
        span / 1024.0
    };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut stats = OdeStats {
        rhs_evals: 1,
        ..Default::default()
    };

    while t < t1 {
        if stats.steps + stats.rejected >= opts.max_steps {
            return Err(Error::Ode(format!(
                "step limit {} exhausted at t = {:.6e} of [{:.6e}, {:.6e}]",
                opts.max_steps, t, t0, t1
            )));
        }
        if h < span * 1e-14 {
            return Err(Error::Ode(format!(
                "step size underflow at t = {:.6e} (h = {:.3e})",
                t, h
            )));
        }
        if t + h > t1 {
            h = t1 - t;
        }

        let hc = C64::new(h, 0.0);
        let y2 = &y + &(&k1 * (hc * A21));
        let k2 = f(t + C2 * h, &y2);
        let y3 = &y + &(&k1 * (hc * A31)) + &(&k2 * (hc * A32));
        let k3 = f(t + C3 * h, &y3);
        let y4 = &y + &(&k1 * (hc * A41)) + &(&k2 * (hc * A42)) + &(&k3 * (hc * A43));
        let k4 = f(t + C4 * h, &y4);
        let y5 = &y
            + &(&k1 * (hc * A51))
            + &(&k2 * (hc * A52))
            + &(&k3 * (hc * A53))
            + &(&k4 * (hc * A54));
        let k5 = f(t + C5 * h, &y5);
        let y6 = &y
            + &(&k1 * (hc * A61))
            + &(&k2 * (hc * A62))
            + &(&k3 * (hc * A63))
            + &(&k4 * (hc * A64))
            + &(&k5 * (hc * A65));
        let k6 = f(t + h, &y6);

        let ynew = &y
            + &(&k1 * (hc * B1))
            + &(&k3 * (hc * B3))
            + &(&k4 * (hc * B4))
            + &(&k5 * (hc * B5))
            + &(&k6 * (hc * B6));
        let k7 = f(t + h, &ynew);
        stats.rhs_evals += 6;

        let y4th = &y
            + &(&k1 * (hc * E1))
            + &(&k3 * (hc * E3))
            + &(&k4 * (hc * E4))
            + &(&k5 * (hc * E5))
            + &(&k6 * (hc * E6))
            + &(&k7 * (hc * E7));
        let err = &ynew - &y4th;
        let enorm = error_norm(&err, &y, &ynew, opts.rtol, opts.atol);

        if enorm <= 1.0 {
            t += h;
            y = ynew;
            k1 = k7; // FSAL
            stats.steps += 1;
        } else {
            stats.rejected += 1;
        }
        let factor = if enorm > 0.0 {
            (0.9 * enorm.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
    }
    Ok((y, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn scalar_exponential() {
        let y0 = array![[C64::new(1.0, 0.0)]];
        let (y, _) = integrate(
            |_, y| y * C64::new(0.0, -2.0),
            0.0,
            3.0,
            y0,
            &OdeOptions::default(),
        )
        .unwrap();
        assert_relative_eq!(y[[0, 0]].re, 6.0f64.cos(), epsilon = 1e-9);
        assert_relative_eq!(y[[0, 0]].im, -(6.0f64.sin()), epsilon = 1e-9);
    }

    #[test]
    fn oscillatory_drive_matches_closed_form() {
        // dy/dt = -i w cos(w t) y  =>  y = exp(-i sin(w t))
        let w = 50.0;
        let y0 = array![[C64::new(1.0, 0.0)]];
        let (y, stats) = integrate(
            |t, y| y * C64::new(0.0, -w * (w * t).cos()),
            0.0,
            1.0,
            y0,
            &OdeOptions::default(),
        )
        .unwrap();
        let phase = (w * 1.0).sin();
        assert_relative_eq!(y[[0, 0]].re, phase.cos(), epsilon = 1e-8);
        assert_relative_eq!(y[[0, 0]].im, -phase.sin(), epsilon = 1e-8);
        assert!(stats.steps > 20);
    }

    #[test]
    fn matrix_propagator_unitary() {
        // dU/dt = -i H U with constant H: U(t) = exp(-iHt)
        let h = array![
            [C64::new(1.0, 0.0), C64::new(0.3, 0.1)],
            [C64::new(0.3, -0.1), C64::new(-0.5, 0.0)]
        ];
        let u0 = crate::linalg::identity(2);
        let (u, _) = integrate(
            |_, y| {
                let m = h.dot(y);
                m.mapv(|z| z * C64::new(0.0, -1.0))
            },
            0.0,
            2.0,
            u0,
            &OdeOptions::default(),
        )
        .unwrap();
        let exact = crate::linalg::expm(&h.mapv(|z| z * C64::new(0.0, -2.0)));
        let diff = &u - &exact;
        assert!(crate::linalg::frobenius(&diff) < 1e-9);
    }

    #[test]
    fn step_limit_error() {
        let y0 = array![[C64::new(1.0, 0.0)]];
        let res = integrate(
            |t, y| y * C64::new(0.0, -1e14 * (1e14 * t).cos()),
            0.0,
            1.0,
            y0,
            &OdeOptions {
                max_steps: 50,
                ..Default::default()
            },
        );
        assert!(matches!(res, Err(Error::Ode(_))));
    }
}
