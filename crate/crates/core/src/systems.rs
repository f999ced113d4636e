//! Small built-in benchmark systems shared by tests, the acceptance suite and
//! the CLI registry.

use crate::dynamics::{ControlSet, ControlledSystem};

/// `ẋ = A x (+ B u)`. With `b = None` the control dimension is zero.
pub fn linear_system(a: Vec<Vec<f64>>, b: Option<Vec<Vec<f64>>>) -> ControlledSystem {
    let n = a.len();
    for row in &a {
        assert_eq!(row.len(), n, "A must be square");
    }
    let m = b.as_ref().map_or(0, |b| b[0].len());
    if let Some(b) = &b {
        assert_eq!(b.len(), n, "B must have one row per state");
    }
    let control_set = if m == 0 {
        ControlSet::Finite(vec![vec![]])
    } else {
        ControlSet::Box { lower: vec![-1.0; m], upper: vec![1.0; m] }
    };
    ControlledSystem::new(n, m, control_set, move |x, u, out| {
        for i in 0..n {
            let mut v = 0.0;
            for j in 0..n {
                v += a[i][j] * x[j];
            }
            if let Some(b) = &b {
                for (k, uv) in u.iter().enumerate() {
                    v += b[i][k] * uv;
                }
            }
            out[i] = v;
        }
    })
}

/// `ẋ = u` componentwise, with `u ∈ [-1, 1]^n`.
pub fn single_integrator(n: usize) -> ControlledSystem {
    ControlledSystem::new(
        n,
        n,
        ControlSet::Box { lower: vec![-1.0; n], upper: vec![1.0; n] },
        |_, u, out| out.copy_from_slice(u),
    )
}

/// Scalar `ẋ = −x + u` with `u ∈ [0, 1]`.
pub fn decay_control() -> ControlledSystem {
    ControlledSystem::new(1, 1, ControlSet::interval(0.0, 1.0), |x, u, out| {
        out[0] = -x[0] + u[0];
    })
}

/// The symmetric Metzler benchmark `A = [[-1, 1], [1, -1]]`, no control.
///
/// Closed form from `x0 = (p, q)`: with `s = p + q` and `d = p − q`,
/// `x(t) = ((s + d e^{−2t})/2, (s − d e^{−2t})/2)`.
pub fn metzler_benchmark() -> ControlledSystem {
    linear_system(vec![vec![-1.0, 1.0], vec![1.0, -1.0]], None).with_unrestricted_domain()
}

/// Analytic flow of [`metzler_benchmark`].
pub fn metzler_solution(x0: &[f64], t: f64) -> [f64; 2] {
    let s = x0[0] + x0[1];
    let d = x0[0] - x0[1];
    let e = (-2.0 * t).exp();
    [(s + d * e) / 2.0, (s - d * e) / 2.0]
}
