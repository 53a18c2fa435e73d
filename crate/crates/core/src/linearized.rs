//! Discrete linearized operators around the standing wave and their
//! spectrum.
//!
//! In phi = r*f coordinates the operators
//!
//!     L+ = 1 - Delta - 3|x|^{-b} Q^2,   L- = 1 - Delta - |x|^{-b} Q^2
//!
//! are symmetric pentadiagonal. The composite action is
//! L(f1, f2) = (L- f2, -L+ f1); the pair (Y1, Y2) of the unstable eigenpair
//! satisfies L+ Y1 = e0 Y2 and L- Y2 = -e0 Y1, so that Y+ = Y1 + i Y2 decays
//! like e^{-e0 t} under the linearized flow dv/dt = L v + i R(v) and
//! Y- = -conj(Y+) grows at the opposite rate. With this pairing convention
//! the bilinear form B has B(Y+, Y-) > 0 and is normalized to 1.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::banded::{Banded, BandedLu, SymBanded};
use crate::error::{Error, Result};
use crate::grid::{self, ComplexField, RealField, FOUR_PI};
use crate::ground_state::GroundState;

/// Guard distance around the point spectrum for resolvent shifts.
pub const RESOLVENT_GUARD: f64 = 1e-6;
const EIG_TOL: f64 = 1e-11;
const EIG_MAX_ITERS: usize = 200;

#[derive(Debug, Clone)]
pub struct DiscreteOperators {
    pub l_plus: SymBanded,
    pub l_minus: SymBanded,
    gs_grid: std::sync::Arc<grid::RadialGrid>,
    /// phi-space image of Q (the discrete kernel direction of L-).
    q_phi: Vec<f64>,
}

impl DiscreteOperators {
    pub fn grid(&self) -> &std::sync::Arc<grid::RadialGrid> {
        &self.gs_grid
    }

    fn to_phi_real(&self, f: &RealField) -> Vec<f64> {
        f.values()
            .iter()
            .zip(self.gs_grid.nodes())
            .map(|(&v, &r)| v * r)
            .collect()
    }

    fn from_phi_real(&self, phi: Vec<f64>) -> RealField {
        let v = phi
            .into_iter()
            .zip(self.gs_grid.nodes())
            .map(|(p, &r)| p / r)
            .collect();
        RealField::new(self.gs_grid.clone(), v)
    }

    pub fn apply_l_plus(&self, f: &RealField) -> RealField {
        self.from_phi_real(self.l_plus.apply_vec(&self.to_phi_real(f)))
    }

    pub fn apply_l_minus(&self, f: &RealField) -> RealField {
        self.from_phi_real(self.l_minus.apply_vec(&self.to_phi_real(f)))
    }

    /// Composite action L(f1, f2) = (L- f2, -L+ f1) on a pair packed as a
    /// complex field.
    pub fn apply_composite(&self, f: &ComplexField) -> ComplexField {
        let re = self.apply_l_minus(&f.im_part());
        let im = self.apply_l_plus(&f.re_part()).scale(-1.0);
        ComplexField::from_parts(&re, &im)
    }

    /// Quadratic form (L+ f, f).
    pub fn l_plus_form(&self, f: &RealField) -> f64 {
        let phi = self.to_phi_real(f);
        FOUR_PI * self.gs_grid.h * self.l_plus.quad_form(&phi)
    }

    pub fn l_minus_form(&self, f: &RealField) -> f64 {
        let phi = self.to_phi_real(f);
        FOUR_PI * self.gs_grid.h * self.l_minus.quad_form(&phi)
    }
}

/// Assemble L+ and L- on the ground-state grid.
pub fn assemble_operators(gs: &GroundState) -> Result<DiscreteOperators> {
    let g = gs.grid();
    let d2 = grid::phi_laplacian_matrix(g)?;
    let n = g.n;
    let mut vplus = vec![0.0; n];
    let mut vminus = vec![0.0; n];
    for j in 0..n {
        let w = gs.rb()[j] * gs.q.values()[j] * gs.q.values()[j];
        vplus[j] = 3.0 * w;
        vminus[j] = w;
    }
    let build = |v: &[f64]| SymBanded {
        d0: d2
            .d0
            .iter()
            .zip(v)
            .map(|(&dd, &vv)| 1.0 - dd - vv)
            .collect(),
        d1: d2.d1.iter().map(|&x| -x).collect(),
        d2: d2.d2.iter().map(|&x| -x).collect(),
    };
    let q_phi = gs
        .q
        .values()
        .iter()
        .zip(g.nodes())
        .map(|(&q, &r)| q * r)
        .collect();
    Ok(DiscreteOperators {
        l_plus: build(&vplus),
        l_minus: build(&vminus),
        gs_grid: g.clone(),
        q_phi,
    })
}

/// The unstable eigenpair and the pairing normalization of B.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub e0: f64,
    pub y1: RealField,
    pub y2: RealField,
    /// B(Y+, Y-) before normalization.
    pub b_norm: f64,
    /// Residual norms of (L+ Y1 - e0 Y2, L- Y2 + e0 Y1), relative to
    /// ||Y1|| + ||Y2||.
    pub eig_residuals: [f64; 2],
    pub normalized: bool,
}

impl SpectralData {
    /// Y+ = Y1 + i Y2, the mode decaying like e^{-e0 t} forward in time.
    pub fn y_plus(&self) -> ComplexField {
        ComplexField::from_parts(&self.y1, &self.y2)
    }

    /// Y- = -conj(Y+), the matching growing mode; the sign makes
    /// B(Y+, Y-) = +1 attainable (the conjugate itself pairs negatively).
    pub fn y_minus(&self) -> ComplexField {
        ComplexField::from_parts(&self.y1.scale(-1.0), &self.y2)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Compute (e0, Y1, Y2) from the product eigenproblem L- L+ Y1 = -e0^2 Y1 by
/// shift-inverted Rayleigh iteration on the banded product, with the kernel
/// of the product deflated obliquely. Seeded with the scaling direction
/// Z = (3-b)/2 Q + r Q', which always overlaps the negative direction.
pub fn compute_unstable_pair(
    ops: &DiscreteOperators,
    gs: &GroundState,
) -> Result<SpectralData> {
    let g = gs.grid();
    let n = g.n;
    let m = SymBanded::product(&ops.l_minus, &ops.l_plus);

    // right kernel of L- L+ is L+^{-1} q_phi, left kernel is q_phi
    let lplus_lu = ops
        .l_plus
        .to_banded()
        .lu()
        .map_err(|e| e.at_stage("L+ factorization"))?;
    let qhat = lplus_lu.solve(&ops.q_phi);
    let qhat_qphi = dot(&ops.q_phi, &qhat);
    let deflate = |v: &mut [f64]| {
        let c = dot(&ops.q_phi, v) / qhat_qphi;
        for j in 0..v.len() {
            v[j] -= c * qhat[j];
        }
    };

    let mut v = ops.to_phi_real(&gs.z_direction());
    deflate(&mut v);
    let s = norm(&v);
    if s == 0.0 {
        return Err(Error::SpectralFailure("degenerate seed".into()));
    }
    for x in v.iter_mut() {
        *x /= s;
    }

    let mut mv = vec![0.0; n];
    let mut mu = {
        // start from the negative part of the seed's Rayleigh quotient
        m.apply(&v, &mut mv);
        let r = dot(&mv, &v);
        if r < 0.0 {
            r
        } else {
            -0.25
        }
    };
    // applying the squared-scale product M floors the attainable residual
    // at ||M|| * machine epsilon
    let m_scale = {
        let ones = vec![1.0; n];
        let mut row = vec![0.0; n];
        m.apply(&ones, &mut row);
        let sup = row.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let mut probe = vec![0.0; n];
        m.apply(&v, &mut probe);
        sup.max(probe.iter().fold(0.0f64, |a, x| a.max(x.abs())))
    };
    let res_floor = 64.0 * f64::EPSILON * m_scale;
    let mut converged = false;
    for _ in 0..EIG_MAX_ITERS {
        let mut shifted = m.clone();
        for j in 0..n {
            shifted.add(j, j, -mu);
        }
        let lu = match shifted.lu() {
            Ok(lu) => lu,
            Err(_) => {
                // shift landed exactly on an eigenvalue; nudge it
                mu *= 1.0 + 1e-10;
                continue;
            }
        };
        let mut w = lu.solve(&v);
        deflate(&mut w);
        let s = norm(&w);
        if !s.is_finite() || s == 0.0 {
            return Err(Error::SpectralFailure("inverse iteration broke down".into()));
        }
        for x in w.iter_mut() {
            *x /= s;
        }
        m.apply(&w, &mut mv);
        let mu_new = dot(&mv, &w);
        let mut res = 0.0;
        for j in 0..n {
            let d = mv[j] - mu_new * w[j];
            res += d * d;
        }
        let res = res.sqrt();
        v = w;
        let done = res < EIG_TOL * mu_new.abs().max(1.0) + res_floor
            || (mu_new - mu).abs() < 1e-13 * mu_new.abs().max(1.0);
        mu = mu_new;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SpectralFailure(
            "inverse iteration did not converge".into(),
        ));
    }
    if mu >= 0.0 {
        return Err(Error::SpectralFailure(format!(
            "no negative direction found (mu = {mu:e}); Q or the operators are broken"
        )));
    }
    let e0 = (-mu).sqrt();

    // fields from the phi iterate; fix the deterministic sign Y1(r0) > 0
    let mut y1 = ops.from_phi_real(v);
    if y1.values()[0] < 0.0 {
        y1 = y1.scale(-1.0);
    }
    let nrm = grid::mass_real(&y1).sqrt();
    y1 = y1.scale(1.0 / nrm);
    let y2 = ops.apply_l_plus(&y1).scale(1.0 / e0);

    // normalize so B(Y+, Y-) = 1; the raw pairing is positive by the sign
    // choice in y_minus()
    let b_raw = 0.5 * (-ops.l_plus_form(&y1) + ops.l_minus_form(&y2));
    if b_raw <= 0.0 {
        return Err(Error::SpectralFailure(format!(
            "pairing normalization not positive: {b_raw:e}"
        )));
    }
    let c = 1.0 / b_raw.sqrt();
    let y1 = y1.scale(c);
    let y2 = y2.scale(c);

    let scale = grid::mass_real(&y1).sqrt() + grid::mass_real(&y2).sqrt();
    let res_plus = {
        let r = ops.apply_l_plus(&y1).axpy(-e0, &y2);
        grid::mass_real(&r).sqrt() / scale
    };
    let res_minus = {
        let r = ops.apply_l_minus(&y2).axpy(e0, &y1);
        grid::mass_real(&r).sqrt() / scale
    };

    Ok(SpectralData {
        e0,
        y1,
        y2,
        b_norm: b_raw,
        eig_residuals: [res_plus, res_minus],
        normalized: true,
    })
}

/// B(f, g) = 1/2 (L+ f1, g1) + 1/2 (L- f2, g2) on pairs packed as complex
/// fields.
pub fn bilinear_b(ops: &DiscreteOperators, f: &ComplexField, g: &ComplexField) -> f64 {
    let f1 = ops.apply_l_plus(&f.re_part());
    let f2 = ops.apply_l_minus(&f.im_part());
    0.5 * (grid::inner(&f1, &g.re_part()).expect("same grid")
        + grid::inner(&f2, &g.im_part()).expect("same grid"))
}

/// Phi(h) = B(h, h).
pub fn phi_form(ops: &DiscreteOperators, h: &ComplexField) -> f64 {
    bilinear_b(ops, h, h)
}

/// Solve (L - lambda) f = rhs for the composite operator, refusing shifts
/// within the guard distance of the supplied point spectrum.
pub fn resolvent_solve(
    ops: &DiscreteOperators,
    lambda: f64,
    rhs: &ComplexField,
    point_spectrum: &[f64],
) -> Result<ComplexField> {
    for &p in point_spectrum {
        if (lambda - p).abs() < RESOLVENT_GUARD {
            return Err(Error::NearSingular(format!(
                "shift {lambda} within {RESOLVENT_GUARD:e} of point spectrum value {p}"
            )));
        }
    }
    let lu = resolvent_factor(ops, lambda)?;
    let out = resolvent_apply(ops, &lu, rhs);
    // round-trip residual check
    let back = ops.apply_composite(&out);
    let mut num = 0.0;
    let mut den = 0.0;
    let g = ops.grid();
    for j in 0..g.n {
        let r2 = g.r(j) * g.r(j);
        let d = back.values()[j] - lambda * out.values()[j] - rhs.values()[j];
        num += d.norm_sqr() * r2;
        den += rhs.values()[j].norm_sqr() * r2;
    }
    if den > 0.0 && num.sqrt() > 1e-8 * den.sqrt() {
        return Err(Error::LinearSolveFailure(format!(
            "resolvent round-trip residual {:e}",
            num.sqrt() / den.sqrt()
        )));
    }
    Ok(out)
}

/// Factor the interleaved 2n x 2n system for (L - lambda).
pub fn resolvent_factor(ops: &DiscreteOperators, lambda: f64) -> Result<BandedLu<f64>> {
    let n = ops.gs_grid.n;
    let mut a = Banded::zeros(2 * n, 5, 5);
    let put_sym = |a: &mut Banded<f64>, row: usize, m: &SymBanded, j: usize, col_of: &dyn Fn(usize) -> usize| {
        a.add(row, col_of(j), m.d0[j]);
        if j >= 1 {
            a.add(row, col_of(j - 1), m.d1[j - 1]);
        }
        if j + 1 < n {
            a.add(row, col_of(j + 1), m.d1[j]);
        }
        if j >= 2 {
            a.add(row, col_of(j - 2), m.d2[j - 2]);
        }
        if j + 2 < n {
            a.add(row, col_of(j + 2), m.d2[j]);
        }
    };
    for j in 0..n {
        // row 2j: (L- f2)_j - lambda f1_j
        put_sym(&mut a, 2 * j, &ops.l_minus, j, &|k| 2 * k + 1);
        a.add(2 * j, 2 * j, -lambda);
        // row 2j+1: -(L+ f1)_j - lambda f2_j
        let neg = SymBanded {
            d0: vec![],
            d1: vec![],
            d2: vec![],
        };
        let _ = neg;
        let row = 2 * j + 1;
        a.add(row, 2 * j, -ops.l_plus.d0[j]);
        if j >= 1 {
            a.add(row, 2 * (j - 1), -ops.l_plus.d1[j - 1]);
        }
        if j + 1 < n {
            a.add(row, 2 * (j + 1), -ops.l_plus.d1[j]);
        }
        if j >= 2 {
            a.add(row, 2 * (j - 2), -ops.l_plus.d2[j - 2]);
        }
        if j + 2 < n {
            a.add(row, 2 * (j + 2), -ops.l_plus.d2[j]);
        }
        a.add(row, row, -lambda);
    }
    a.lu().map_err(|e| e.at_stage("resolvent factorization"))
}

/// Apply a factored resolvent to a pair field (phi-space conversions
/// included).
pub fn resolvent_apply(
    ops: &DiscreteOperators,
    lu: &BandedLu<f64>,
    rhs: &ComplexField,
) -> ComplexField {
    let g = ops.grid();
    let n = g.n;
    let mut x = vec![0.0; 2 * n];
    for j in 0..n {
        let r = g.r(j);
        x[2 * j] = rhs.values()[j].re * r;
        x[2 * j + 1] = rhs.values()[j].im * r;
    }
    lu.solve_in_place(&mut x);
    let v = (0..n)
        .map(|j| Complex64::new(x[2 * j] / g.r(j), x[2 * j + 1] / g.r(j)))
        .collect();
    ComplexField::new(g.clone(), v)
}

/// Dense reference route at moderate n: eigendecompose L-, form
/// P = L-^{1/2} L+ L-^{1/2} with the kernel direction removed, and return
/// its two lowest eigenvalues on {q_phi}^perp.
pub struct DenseReference {
    pub e0: f64,
    /// Second-lowest eigenvalue of P restricted to the complement; the
    /// simplicity of the negative direction means this is nonnegative.
    pub p_second: f64,
}

pub fn dense_reference(ops: &DiscreteOperators) -> Result<DenseReference> {
    let n = ops.gs_grid.n;
    if n > 2048 {
        return Err(Error::InvalidArgument(format!(
            "dense route limited to n <= 2048, got {n}"
        )));
    }
    let dense_of = |m: &SymBanded| {
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = m.d0[i];
            if i + 1 < n {
                a[(i, i + 1)] = m.d1[i];
                a[(i + 1, i)] = m.d1[i];
            }
            if i + 2 < n {
                a[(i, i + 2)] = m.d2[i];
                a[(i + 2, i)] = m.d2[i];
            }
        }
        a
    };
    let lm = dense_of(&ops.l_minus);
    let lp = dense_of(&ops.l_plus);
    let eig = lm.symmetric_eigen();
    // L- is positive semidefinite with kernel q_phi; clamp the tiny bottom
    // eigenvalue to zero when building the square root
    let mut sqrt_vals = DVector::<f64>::zeros(n);
    for i in 0..n {
        sqrt_vals[i] = eig.eigenvalues[i].max(0.0).sqrt();
    }
    let half = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
    let mut p = &half * lp * &half;
    // push the kernel direction far up so the complement spectrum is exposed
    let qn = DVector::from_column_slice(&ops.q_phi).normalize();
    let penalty = 1e3;
    for i in 0..n {
        for j in 0..n {
            p[(i, j)] += penalty * qn[i] * qn[j];
        }
    }
    let p = (&p + p.transpose()) * 0.5;
    let peig = p.symmetric_eigen();
    let mut vals: Vec<f64> = peig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if vals[0] >= 0.0 {
        return Err(Error::SpectralFailure(
            "dense route found no negative direction".into(),
        ));
    }
    Ok(DenseReference {
        e0: (-vals[0]).sqrt(),
        p_second: vals[1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, mass_real, smooth_random_field};
    use crate::ground_state::solve_ground_state;

    fn setup(n: usize, r_max: f64) -> (GroundState, DiscreteOperators) {
        let g = make_grid(n, r_max, 0.5).unwrap();
        let gs = solve_ground_state(0.3, &g, 1e-12).unwrap();
        let ops = assemble_operators(&gs).unwrap();
        (gs, ops)
    }

    #[test]
    fn operators_are_symmetric_and_kill_q() {
        let (gs, ops) = setup(1024, 40.0);
        // symmetry through random quadratic forms
        let f = smooth_random_field(gs.grid(), 5, 1.0);
        let g = smooth_random_field(gs.grid(), 6, 1.0);
        let lhs = grid::inner(&ops.apply_l_plus(&f), &g).unwrap();
        let rhs = grid::inner(&f, &ops.apply_l_plus(&g)).unwrap();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));

        // discrete kernel identities: exact because Q solves the discrete
        // stationary equation after the Newton polish
        let kq = ops.apply_l_minus(&gs.q);
        let rel = mass_real(&kq).sqrt() / mass_real(&gs.q).sqrt();
        assert!(rel < 1e-10, "L- Q relative residual {rel:e}");

        let want = RealField::new(
            gs.grid().clone(),
            gs.q
                .values()
                .iter()
                .zip(gs.rb())
                .map(|(&q, &w)| -2.0 * w * q * q * q)
                .collect(),
        );
        let lpq = ops.apply_l_plus(&gs.q);
        let diff = lpq.sub(&want);
        let rel = mass_real(&diff).sqrt() / mass_real(&gs.q).sqrt();
        assert!(rel < 1e-10, "L+ Q + 2|x|^-b Q^3 relative residual {rel:e}");
    }

    #[test]
    fn z_direction_form_matches_moment_identity() {
        let (gs, ops) = setup(2048, 40.0);
        let z = gs.z_direction();
        let form = ops.l_plus_form(&z);
        // dual route: pairing L+ Z = -2Q - |x|^{-b}Q^3 against Z by moments
        // gives b*mass - (3-b)/4 * pot
        let expect = gs.b * gs.mass - 0.25 * (3.0 - gs.b) * gs.pot;
        let rel = (form - expect).abs() / expect.abs();
        assert!(rel < 1e-3, "quadratic form {form} vs moment value {expect}");
        assert!(form < 0.0);
        // record how the two closed-form constants compare (they differ in
        // the literature); the moment route is the one the discrete values
        // reproduce
        let c_meas = form / gs.mass;
        let c_stated = -(2.0 - (1.0 - gs.b) * (1.0 - gs.b)) / (1.0 - gs.b);
        let c_derived = -(3.0 - 2.0 * gs.b + gs.b * gs.b) / (1.0 - gs.b);
        eprintln!(
            "(L+Z,Z)/||Q||^2 measured {c_meas:.6}, stated {c_stated:.6}, derived {c_derived:.6}"
        );
        assert!((c_meas - c_derived).abs() / c_derived.abs() < 1e-3);
    }

    #[test]
    fn unstable_pair_small_residuals_and_positive_e0() {
        let (gs, ops) = setup(1024, 40.0);
        let spec = compute_unstable_pair(&ops, &gs).unwrap();
        assert!(spec.e0 > 0.0);
        assert!(spec.eig_residuals[0] < 1e-8, "{:?}", spec.eig_residuals);
        assert!(spec.eig_residuals[1] < 1e-6, "{:?}", spec.eig_residuals);
        // (Y1, Q) = 0 by construction inside the complement
        let y1q = grid::inner(&spec.y1, &gs.q).unwrap()
            / (mass_real(&spec.y1).sqrt() * gs.mass.sqrt());
        assert!(y1q.abs() < 1e-8, "(Y1, Q) = {y1q:e}");
        // normalization: B(Y+, Y-) = 1, B(Y+, Y+) = B(Y-, Y-) = 0
        let bp = bilinear_b(&ops, &spec.y_plus(), &spec.y_minus());
        assert!((bp - 1.0).abs() < 1e-10, "B(Y+,Y-) = {bp}");
        let bpp = bilinear_b(&ops, &spec.y_plus(), &spec.y_plus());
        let bmm = bilinear_b(&ops, &spec.y_minus(), &spec.y_minus());
        assert!(bpp.abs() < 1e-8, "B(Y+,Y+) = {bpp:e}");
        assert!(bmm.abs() < 1e-8, "B(Y-,Y-) = {bmm:e}");
        // composite eigen-relations L Y± = ∓ e0 Y±
        let lyp = ops.apply_composite(&spec.y_plus());
        let d = lyp.axpy(Complex64::new(spec.e0, 0.0), &spec.y_plus());
        assert!(grid::mass(&d).sqrt() < 1e-6);
        // sign convention (L- Y2, Y2) > 0 and Y1(r0) > 0
        assert!(ops.l_minus_form(&spec.y2) > 0.0);
        assert!(spec.y1.values()[0] > 0.0);
    }

    #[test]
    fn eigenvalue_matches_dense_route_and_is_simple() {
        let (gs, ops) = setup(512, 30.0);
        let spec = compute_unstable_pair(&ops, &gs).unwrap();
        let dense = dense_reference(&ops).unwrap();
        let rel = (spec.e0 - dense.e0).abs() / dense.e0;
        assert!(rel < 1e-7, "banded {} vs dense {}", spec.e0, dense.e0);
        assert!(
            dense.p_second > -1e-8,
            "second P eigenvalue {:e} must be nonnegative",
            dense.p_second
        );
    }

    #[test]
    fn e0_grid_refinement() {
        let es: Vec<f64> = [(512usize, 40.0), (1024, 40.0), (2048, 40.0)]
            .iter()
            .map(|&(n, rm)| {
                let g = make_grid(n, rm, 0.5).unwrap();
                let gs = solve_ground_state(0.3, &g, 1e-12).unwrap();
                let ops = assemble_operators(&gs).unwrap();
                compute_unstable_pair(&ops, &gs).unwrap().e0
            })
            .collect();
        let d1 = (es[0] - es[1]).abs();
        let d2 = (es[1] - es[2]).abs();
        assert!(d1 / d2 > 3.0, "e0 refinement {d1:e} vs {d2:e}");
    }

    #[test]
    fn resolvent_round_trip_and_guards() {
        let (gs, ops) = setup(512, 30.0);
        let spec = compute_unstable_pair(&ops, &gs).unwrap();
        let pt = [-spec.e0, 0.0, spec.e0];

        let zero = ComplexField::zeros(gs.grid().clone());
        let out = resolvent_solve(&ops, 2.0 * spec.e0, &zero, &pt).unwrap();
        assert!(grid::mass(&out) == 0.0);

        let f = ComplexField::from_parts(
            &smooth_random_field(gs.grid(), 11, 1.0),
            &smooth_random_field(gs.grid(), 12, 0.5),
        );
        let sol = resolvent_solve(&ops, 2.0 * spec.e0, &f, &pt).unwrap();
        let back = ops
            .apply_composite(&sol)
            .axpy(Complex64::new(-2.0 * spec.e0, 0.0), &sol);
        let d = back.sub(&f);
        let rel = grid::mass(&d).sqrt() / grid::mass(&f).sqrt();
        assert!(rel < 1e-8, "round-trip {rel:e}");

        assert!(matches!(
            resolvent_solve(&ops, spec.e0, &f, &pt),
            Err(Error::NearSingular(_))
        ));
    }

    #[test]
    fn b_form_properties() {
        let (gs, ops) = setup(512, 30.0);
        // B(iQ, g) = 0 for arbitrary g since L- Q = 0
        let iq = ComplexField::from_parts(&RealField::zeros(gs.grid().clone()), &gs.q);
        let g = ComplexField::from_parts(
            &smooth_random_field(gs.grid(), 21, 1.0),
            &smooth_random_field(gs.grid(), 22, 1.0),
        );
        let b = bilinear_b(&ops, &iq, &g);
        assert!(b.abs() < 1e-9, "B(iQ, g) = {b:e}");
        // symmetry
        let f = ComplexField::from_parts(
            &smooth_random_field(gs.grid(), 23, 1.0),
            &smooth_random_field(gs.grid(), 24, 1.0),
        );
        let bfg = bilinear_b(&ops, &f, &g);
        let bgf = bilinear_b(&ops, &g, &f);
        assert!((bfg - bgf).abs() < 1e-10 * bfg.abs().max(1.0));
    }

    #[test]
    fn coercivity_on_orthogonal_complements() {
        let (gs, ops) = setup(512, 30.0);
        // (L- v, v) >= c ||v||_{H1}^2 on {Q}^perp
        let mut cmin = f64::INFINITY;
        for seed in 0..100 {
            let v = smooth_random_field(gs.grid(), 1000 + seed, 1.0);
            let proj = {
                let c = grid::inner(&v, &gs.q).unwrap() / gs.mass;
                v.axpy(-c, &gs.q)
            };
            let h1 = grid::h1_norm_sq_real(&proj);
            if h1 < 1e-12 {
                continue;
            }
            cmin = cmin.min(ops.l_minus_form(&proj) / h1);
        }
        assert!(cmin > 0.0, "L- coercivity constant {cmin}");
        eprintln!("L- coercivity constant over 100 samples: {cmin:.4}");

        // (L+ v, v) >= c ||v||_{H1}^2 on {Delta Q}^perp
        let dq = gs.q.laplacian3d();
        let dq_sq = grid::inner(&dq, &dq).unwrap();
        let mut cmin = f64::INFINITY;
        for seed in 0..100 {
            let v = smooth_random_field(gs.grid(), 2000 + seed, 1.0);
            let proj = {
                let c = grid::inner(&v, &dq).unwrap() / dq_sq;
                v.axpy(-c, &dq)
            };
            let h1 = grid::h1_norm_sq_real(&proj);
            if h1 < 1e-12 {
                continue;
            }
            cmin = cmin.min(ops.l_plus_form(&proj) / h1);
        }
        assert!(cmin > 0.0, "L+ coercivity constant {cmin}");
        eprintln!("L+ coercivity constant over 100 samples: {cmin:.4}");
    }

    #[test]
    fn eigenfunction_tails_decay_superpolynomially() {
        let (gs, ops) = setup(1024, 40.0);
        let spec = compute_unstable_pair(&ops, &gs).unwrap();
        let g = gs.grid();
        let total: f64 = grid::mass_real(&spec.y1) + grid::mass_real(&spec.y2);
        let tail = |rr: f64| -> f64 {
            let mut s = 0.0;
            for j in 0..g.n {
                let r = g.r(j);
                if r > rr {
                    let y1 = spec.y1.values()[j];
                    let y2 = spec.y2.values()[j];
                    s += (y1 * y1 + y2 * y2) * r * r;
                }
            }
            FOUR_PI * g.h * s / total
        };
        // log-linear fit of tail mass vs R must fall faster than R^{-4}
        let rs: Vec<f64> = (1..=8).map(|k| 2.0 * k as f64).collect();
        let pts: Vec<(f64, f64)> = rs
            .iter()
            .map(|&rr| (rr.ln(), tail(rr).max(1e-300).ln()))
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!(slope < -4.0, "tail slope {slope}");
    }
}
