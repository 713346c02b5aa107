//! Student-t quantiles for confidence bounds.

use statrs::function::beta::beta_reg;

/// Upper tail `P(T > t)` of Student's t with `dof` degrees of freedom, for
/// `t ≥ 0`, via the regularized incomplete beta function.
pub fn student_t_upper_tail(t: f64, dof: f64) -> f64 {
    debug_assert!(t >= 0.0 && dof > 0.0);
    0.5 * beta_reg(dof / 2.0, 0.5, dof / (dof + t * t))
}

/// Quantile `t` with `P(T ≤ t) = p` for Student's t with `dof` degrees of
/// freedom. Solved by bisection on the tail probability, so the result is
/// as accurate as the incomplete beta evaluation (well below 1e−8).
///
/// # Panics
///
/// If `p` is outside `(0, 1)` or `dof` is not positive.
pub fn student_t_quantile(p: f64, dof: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability {p} outside (0, 1)");
    assert!(dof > 0.0, "degrees of freedom must be positive");
    if p < 0.5 {
        return -student_t_quantile(1.0 - p, dof);
    }
    let tail = 1.0 - p;
    if tail == 0.5 {
        return 0.0;
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while student_t_upper_tail(hi, dof) > tail {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if student_t_upper_tail(mid, dof) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
