//! Virial weight family w_R: the |x|^2 weight truncated at scale R.
//!
//! w_R(x) = R^2 phi(|x|/R) with phi(y) = y^2 for y <= 1 and phi constant for
//! y >= 3. On the bridge [1,3] the second derivative is prescribed as a C^2
//! piecewise-quintic profile, which makes w_R a C^4 function satisfying the
//! pointwise bounds 0 <= w' <= 2r and |second derivatives| <= 2. The bridge
//! is a fixed constant of the implementation; see `phi_profile`.

use std::sync::Arc;

use crate::grid::{RadialGrid, RealField};

/// Knots of the bridge profile in the normalized variable s = (y-1)/2.
const S_DOWN_END: f64 = 0.4;
const S_FLAT_END: f64 = 0.8;

/// Quintic smoothstep and its derivatives / antiderivatives on [0,1].
#[inline]
fn s5(u: f64) -> f64 {
    u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
}
#[inline]
fn s5_d(u: f64) -> f64 {
    30.0 * u * u * (1.0 - u) * (1.0 - u)
}
#[inline]
fn s5_dd(u: f64) -> f64 {
    60.0 * u * (1.0 - u) * (1.0 - 2.0 * u)
}
#[inline]
fn s5_i1(u: f64) -> f64 {
    // int_0^u s5
    u.powi(4) * (2.5 + u * (-3.0 + u))
}
#[inline]
fn s5_i2(u: f64) -> f64 {
    // int_0^u int_0^v s5
    u.powi(5) * (0.5 + u * (-0.5 + u / 7.0))
}

/// psi(s) = phi''(1+2s)/2 on the bridge, together with its first two
/// s-derivatives and first two antiderivatives. psi descends from 1 to -1,
/// holds at -1, then returns to 0, with vanishing first and second
/// derivatives at every joint, and int_0^1 psi = -1/2 so that phi'(3) = 0.
fn psi_all(s: f64) -> (f64, f64, f64, f64, f64) {
    let a = S_DOWN_END;
    let c = S_FLAT_END;
    // cumulative values at the knots
    let i1_a = 0.0; // a - 2a*I1(1) with I1(1)=1/2
    let i2_a = a * a * (0.5 - 2.0 / 7.0);
    let i1_c = -(c - a);
    let i2_c = i2_a - 0.5 * (c - a) * (c - a);
    if s <= a {
        let u = s / a;
        (
            1.0 - 2.0 * s5(u),
            -2.0 * s5_d(u) / a,
            -2.0 * s5_dd(u) / (a * a),
            s - 2.0 * a * s5_i1(u),
            0.5 * s * s - 2.0 * a * a * s5_i2(u),
        )
    } else if s <= c {
        (
            -1.0,
            0.0,
            0.0,
            i1_a - (s - a),
            i2_a - 0.5 * (s - a) * (s - a),
        )
    } else {
        let d = 1.0 - c;
        let u = (s - c) / d;
        (
            -1.0 + s5(u),
            s5_d(u) / d,
            s5_dd(u) / (d * d),
            i1_c - (s - c) + d * s5_i1(u),
            i2_c + i1_c * (s - c) - 0.5 * (s - c) * (s - c) + d * d * s5_i2(u),
        )
    }
}

/// (phi, phi', phi'', phi''', phi'''') at y >= 0.
pub fn phi_profile(y: f64) -> (f64, f64, f64, f64, f64) {
    if y <= 1.0 {
        (y * y, 2.0 * y, 2.0, 0.0, 0.0)
    } else if y >= 3.0 {
        let (_, _, _, i1, i2) = psi_all(1.0);
        let phi3 = 1.0 + 4.0 + 8.0 * i2;
        debug_assert!(i1 + 0.5 < 1e-12);
        (phi3, 0.0, 0.0, 0.0, 0.0)
    } else {
        let s = (y - 1.0) / 2.0;
        let (p, pd, pdd, i1, i2) = psi_all(s);
        let phi = 1.0 + 4.0 * s + 8.0 * i2;
        let phi_p = 2.0 + 4.0 * i1;
        let phi_pp = 2.0 * p;
        let phi_3 = pd;
        let phi_4 = pdd / 2.0;
        (phi, phi_p, phi_pp, phi_3, phi_4)
    }
}

/// Sampled w_R and the derivative profiles entering the virial functionals.
#[derive(Debug, Clone)]
pub struct VirialWeight {
    /// Localization radius; `None` encodes R = infinity (w = r^2 exactly).
    pub r_loc: Option<f64>,
    pub w: RealField,
    /// dw/dr
    pub wp: RealField,
    /// d^2 w/dr^2 (the radial eigenvalue of the Hessian; the tangential one
    /// is w'/r)
    pub wpp: RealField,
    pub lap_w: RealField,
    pub bilap_w: RealField,
}

impl VirialWeight {
    pub fn new(grid: Arc<RadialGrid>, r_loc: Option<f64>) -> Self {
        match r_loc {
            None => VirialWeight {
                r_loc,
                w: RealField::from_fn(grid.clone(), |r| r * r),
                wp: RealField::from_fn(grid.clone(), |r| 2.0 * r),
                wpp: RealField::from_fn(grid.clone(), |_| 2.0),
                lap_w: RealField::from_fn(grid.clone(), |_| 6.0),
                bilap_w: RealField::from_fn(grid, |_| 0.0),
            },
            Some(rr) => {
                assert!(rr > 0.0, "localization radius must be positive");
                let f = |r: f64| phi_profile(r / rr);
                let w = RealField::from_fn(grid.clone(), |r| rr * rr * f(r).0);
                let wp = RealField::from_fn(grid.clone(), |r| rr * f(r).1);
                let wpp = RealField::from_fn(grid.clone(), |r| f(r).2);
                let lap_w = RealField::from_fn(grid.clone(), |r| f(r).2 + 2.0 * rr * f(r).1 / r);
                let bilap_w =
                    RealField::from_fn(grid, |r| f(r).4 / (rr * rr) + 4.0 * f(r).3 / (rr * r));
                VirialWeight {
                    r_loc,
                    w,
                    wp,
                    wpp,
                    lap_w,
                    bilap_w,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn infinite_weight_is_exact() {
        let g = make_grid(64, 8.0, 0.5).unwrap();
        let w = VirialWeight::new(g.clone(), None);
        for j in 0..g.n {
            let r = g.r(j);
            assert_eq!(w.w.values()[j], r * r);
            assert_eq!(w.wp.values()[j], 2.0 * r);
            assert_eq!(w.lap_w.values()[j], 6.0);
            assert_eq!(w.bilap_w.values()[j], 0.0);
        }
    }

    #[test]
    fn finite_weight_pointwise_bounds() {
        let g = make_grid(4096, 40.0, 0.5).unwrap();
        for &rr in &[1.0, 3.0, 7.5] {
            let w = VirialWeight::new(g.clone(), Some(rr));
            let mut saw_const = false;
            for j in 0..g.n {
                let r = g.r(j);
                let wp = w.wp.values()[j];
                assert!(wp >= -1e-14, "w' >= 0 violated at r={r}: {wp}");
                assert!(wp <= 2.0 * r + 1e-12, "w' <= 2r violated at r={r}: {wp}");
                assert!(w.wpp.values()[j].abs() <= 2.0 + 1e-12);
                assert!((wp / r).abs() <= 2.0 + 1e-12);
                if r <= rr {
                    assert!((w.w.values()[j] - r * r).abs() < 1e-12 * (1.0 + r * r));
                }
                if r >= 3.0 * rr {
                    saw_const = true;
                    assert!(wp.abs() < 1e-14);
                    assert!((w.w.values()[j] - rr * rr * phi_profile(3.0).0).abs() < 1e-10);
                }
            }
            assert!(saw_const);
        }
    }

    #[test]
    fn bridge_is_c4_and_consistent_with_differences() {
        // finite differences of phi match the stored derivatives, so the
        // piecewise formulas glue into a C^4 profile
        let d = 1e-5;
        let mut y = 0.9;
        while y < 3.2 {
            let (p0, p1, p2, p3, p4) = phi_profile(y);
            let (pm, m1, m2, m3, _) = phi_profile(y - d);
            let (pp, q1, q2, q3, _) = phi_profile(y + d);
            assert!(((pp - pm) / (2.0 * d) - p1).abs() < 1e-7, "phi' at {y}");
            assert!(
                ((pp - 2.0 * p0 + pm) / (d * d) - p2).abs() < 1e-4,
                "phi'' at {y}"
            );
            assert!(((q1 - m1) / (2.0 * d) - p2).abs() < 1e-7, "phi'' at {y}");
            assert!(((q2 - m2) / (2.0 * d) - p3).abs() < 1e-6, "phi''' at {y}");
            assert!(((q3 - m3) / (2.0 * d) - p4).abs() < 1e-5, "phi'''' at {y}");
            y += 0.013;
        }
    }
}
