//! Discrete radial domain and calculus for functions on R^3 restricted to
//! radial profiles.
//!
//! Nodes sit at r_j = (j + offset) h with offset in (0,1), so the |x|^{-b}
//! weight is never evaluated at the origin. With the default offset 1/2 the
//! grid is a midpoint (cell-center) grid: integrals use the midpoint rule
//! 4*pi*h*sum f r^2, and the substitution phi = r*f turns the radial
//! Laplacian into the plain second difference with an odd mirror at the
//! origin, which keeps every operator in the crate symmetric under the same
//! quadrature.

use std::sync::Arc;

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub n: usize,
    pub r_max: f64,
    pub h: f64,
    pub offset: f64,
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    #[inline]
    pub fn r(&self, j: usize) -> f64 {
        self.nodes[j]
    }

    /// Pointwise |x|^{-b} at the nodes (finite since all nodes are positive).
    pub fn singular_weight(&self, b: f64) -> Vec<f64> {
        self.nodes.iter().map(|&r| r.powf(-b)).collect()
    }

    /// With offset 1/2 every ghost node below the origin mirrors exactly
    /// onto a grid node, which keeps the five-point stencils both fourth
    /// order and symmetric.
    pub fn mirror_aligned(&self) -> bool {
        (self.offset - 0.5).abs() < 1e-12
    }

    /// Interpolation weights for the even extension at the ghost radius
    /// |r_{-m}| = (m - offset) h, expressed through the first three nodes
    /// (Lagrange in the even variable r^2).
    fn even_ghost_weights(&self, m: usize) -> [f64; 3] {
        let x = (m as f64 - self.offset) * self.h;
        let xs = x * x;
        let xi: [f64; 3] = [
            self.nodes[0] * self.nodes[0],
            self.nodes[1] * self.nodes[1],
            self.nodes[2] * self.nodes[2],
        ];
        let mut w = [0.0; 3];
        for k in 0..3 {
            let mut p = 1.0;
            for l in 0..3 {
                if l != k {
                    p *= (xs - xi[l]) / (xi[k] - xi[l]);
                }
            }
            w[k] = p;
        }
        w
    }
}

/// Fourth-order second-difference operator on phi = r*f with the odd mirror
/// across the origin and homogeneous Dirichlet ghosts at the outer edge.
/// Conjugating by r turns it into the 3D radial Laplacian. Requires the
/// mirror-aligned (offset = 1/2) grid, where the matrix is symmetric.
pub fn phi_laplacian_matrix(grid: &RadialGrid) -> crate::error::Result<crate::banded::SymBanded> {
    if !grid.mirror_aligned() {
        return Err(Error::InvalidArgument(
            "operator assembly requires the half-offset grid (offset = 1/2)".into(),
        ));
    }
    let n = grid.n;
    let c = 1.0 / (12.0 * grid.h * grid.h);
    let mut d0 = vec![-30.0 * c; n];
    d0[0] = -46.0 * c;
    let mut d1 = vec![16.0 * c; n - 1];
    d1[0] = 17.0 * c;
    let d2 = vec![-c; n - 2];
    Ok(crate::banded::SymBanded { d0, d1, d2 })
}

/// Build a uniform offset grid. The offset keeps all nodes strictly positive.
pub fn make_grid(n: usize, r_max: f64, offset: f64) -> Result<Arc<RadialGrid>> {
    if n < 8 {
        return Err(Error::InvalidArgument(format!("n = {n}, need n >= 8")));
    }
    if !(r_max > 0.0) {
        return Err(Error::InvalidArgument(format!("r_max = {r_max}")));
    }
    if !(offset > 0.0 && offset < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "offset = {offset}, need offset in (0,1)"
        )));
    }
    let h = r_max / n as f64;
    let nodes = (0..n).map(|j| (j as f64 + offset) * h).collect();
    Ok(Arc::new(RadialGrid {
        n,
        r_max,
        h,
        offset,
        nodes,
    }))
}

pub fn check_same_grid(a: &RadialGrid, b: &RadialGrid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "grid mismatch: (n={}, r_max={}, offset={}) vs (n={}, r_max={}, offset={})",
            a.n, a.r_max, a.offset, b.n, b.r_max, b.offset
        )))
    }
}

#[derive(Debug, Clone)]
pub struct RealField {
    grid: Arc<RadialGrid>,
    v: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ComplexField {
    grid: Arc<RadialGrid>,
    v: Vec<Complex64>,
}

impl RealField {
    pub fn new(grid: Arc<RadialGrid>, v: Vec<f64>) -> Self {
        assert_eq!(grid.n, v.len(), "sample count must equal node count");
        RealField { grid, v }
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.n;
        RealField {
            grid,
            v: vec![0.0; n],
        }
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let v = grid.nodes().iter().map(|&r| f(r)).collect();
        RealField { grid, v }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.v
    }

    pub fn is_finite(&self) -> bool {
        self.v.iter().all(|x| x.is_finite())
    }

    pub fn scale(&self, c: f64) -> RealField {
        RealField {
            grid: self.grid.clone(),
            v: self.v.iter().map(|x| c * x).collect(),
        }
    }

    pub fn add(&self, other: &RealField) -> RealField {
        debug_assert_eq!(self.grid, other.grid);
        RealField {
            grid: self.grid.clone(),
            v: self
                .v
                .iter()
                .zip(&other.v)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &RealField) -> RealField {
        debug_assert_eq!(self.grid, other.grid);
        RealField {
            grid: self.grid.clone(),
            v: self
                .v
                .iter()
                .zip(&other.v)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// self + c * other.
    pub fn axpy(&self, c: f64, other: &RealField) -> RealField {
        debug_assert_eq!(self.grid, other.grid);
        RealField {
            grid: self.grid.clone(),
            v: self
                .v
                .iter()
                .zip(&other.v)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            v: self.v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }
}

impl ComplexField {
    pub fn new(grid: Arc<RadialGrid>, v: Vec<Complex64>) -> Self {
        assert_eq!(grid.n, v.len(), "sample count must equal node count");
        ComplexField { grid, v }
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.n;
        ComplexField {
            grid,
            v: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_parts(re: &RealField, im: &RealField) -> Self {
        debug_assert_eq!(re.grid, im.grid);
        ComplexField {
            grid: re.grid.clone(),
            v: re
                .v
                .iter()
                .zip(&im.v)
                .map(|(&a, &b)| Complex64::new(a, b))
                .collect(),
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.v
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.v
    }

    pub fn re_part(&self) -> RealField {
        RealField {
            grid: self.grid.clone(),
            v: self.v.iter().map(|z| z.re).collect(),
        }
    }

    pub fn im_part(&self) -> RealField {
        RealField {
            grid: self.grid.clone(),
            v: self.v.iter().map(|z| z.im).collect(),
        }
    }

    pub fn conj(&self) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            v: self.v.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            v: self.v.iter().map(|z| c * z).collect(),
        }
    }

    pub fn add(&self, other: &ComplexField) -> ComplexField {
        debug_assert_eq!(self.grid, other.grid);
        ComplexField {
            grid: self.grid.clone(),
            v: self
                .v
                .iter()
                .zip(&other.v)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &ComplexField) -> ComplexField {
        debug_assert_eq!(self.grid, other.grid);
        ComplexField {
            grid: self.grid.clone(),
            v: self
                .v
                .iter()
                .zip(&other.v)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn axpy(&self, c: Complex64, other: &ComplexField) -> ComplexField {
        debug_assert_eq!(self.grid, other.grid);
        ComplexField {
            grid: self.grid.clone(),
            v: self
                .v
                .iter()
                .zip(&other.v)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Midpoint quadrature of 4*pi*f(r)*r^2 over the whole ball. Each node is the
/// center of the cell [j h, (j+1) h], so no boundary correction is needed and
/// the rule is second order.
pub fn integrate(f: &RealField) -> f64 {
    let g = &f.grid;
    let mut s = 0.0;
    for (j, &x) in f.v.iter().enumerate() {
        let r = g.r(j);
        s += x * r * r;
    }
    FOUR_PI * g.h * s
}

/// L^2 pairing of real fields.
pub fn inner(f: &RealField, g: &RealField) -> Result<f64> {
    check_same_grid(&f.grid, &g.grid)?;
    let gr = &f.grid;
    let mut s = 0.0;
    for j in 0..gr.n {
        let r = gr.r(j);
        s += f.v[j] * g.v[j] * r * r;
    }
    Ok(FOUR_PI * gr.h * s)
}

/// Real part of the complex L^2 pairing (u, w) = int u conj(w).
pub fn inner_complex(u: &ComplexField, w: &ComplexField) -> Result<Complex64> {
    check_same_grid(&u.grid, &w.grid)?;
    let gr = &u.grid;
    let mut s = Complex64::new(0.0, 0.0);
    for j in 0..gr.n {
        let r = gr.r(j);
        s += u.v[j] * w.v[j].conj() * (r * r);
    }
    Ok(s * FOUR_PI * gr.h)
}

macro_rules! impl_calculus {
    ($field:ty, $zero:expr) => {
        impl $field {
            /// Fourth-order radial Laplacian f'' + (2/r) f', computed as the
            /// five-point second difference of phi = r*f divided by r. The
            /// inner boundary uses the odd extension of phi (equivalently
            /// f'(0) = 0), the outer boundary homogeneous Dirichlet ghosts.
            pub fn laplacian3d(&self) -> $field {
                let g = &self.grid;
                let n = g.n;
                let c = 1.0 / (12.0 * g.h * g.h);
                let phi: Vec<_> = (0..n).map(|j| self.v[j] * g.r(j)).collect();
                let ghost = |m: usize| {
                    if g.mirror_aligned() {
                        -phi[m - 1]
                    } else {
                        let w = g.even_ghost_weights(m);
                        let x = (m as f64 - g.offset) * g.h;
                        -(phi[0] * (w[0] * x / g.r(0))
                            + phi[1] * (w[1] * x / g.r(1))
                            + phi[2] * (w[2] * x / g.r(2)))
                    }
                };
                let gm1 = ghost(1);
                let gm2 = ghost(2);
                let mut out = Vec::with_capacity(n);
                for j in 0..n {
                    let fm2 = if j >= 2 {
                        phi[j - 2]
                    } else if j == 1 {
                        gm1
                    } else {
                        gm2
                    };
                    let fm1 = if j >= 1 { phi[j - 1] } else { gm1 };
                    let fp1 = if j + 1 < n { phi[j + 1] } else { $zero };
                    let fp2 = if j + 2 < n { phi[j + 2] } else { $zero };
                    let d2 = (fm1 * 16.0 + fp1 * 16.0 - fm2 - fp2 - phi[j] * 30.0) * c;
                    out.push(d2 * (1.0 / g.r(j)));
                }
                Self {
                    grid: self.grid.clone(),
                    v: out,
                }
            }

            /// Fourth-order centered radial derivative with the even
            /// extension across the origin and Dirichlet outer ghosts.
            pub fn radial_derivative(&self) -> $field {
                let g = &self.grid;
                let n = g.n;
                let c = 1.0 / (12.0 * g.h);
                let ghost = |m: usize| {
                    if g.mirror_aligned() {
                        self.v[m - 1]
                    } else {
                        let w = g.even_ghost_weights(m);
                        self.v[0] * w[0] + self.v[1] * w[1] + self.v[2] * w[2]
                    }
                };
                let gm1 = ghost(1);
                let gm2 = ghost(2);
                let mut out = Vec::with_capacity(n);
                for j in 0..n {
                    let fm2 = if j >= 2 {
                        self.v[j - 2]
                    } else if j == 1 {
                        gm1
                    } else {
                        gm2
                    };
                    let fm1 = if j >= 1 { self.v[j - 1] } else { gm1 };
                    let fp1 = if j + 1 < n { self.v[j + 1] } else { $zero };
                    let fp2 = if j + 2 < n { self.v[j + 2] } else { $zero };
                    out.push((fp1 * 8.0 - fm1 * 8.0 + fm2 - fp2) * c);
                }
                Self {
                    grid: self.grid.clone(),
                    v: out,
                }
            }
        }
    };
}

impl_calculus!(RealField, 0.0);
impl_calculus!(ComplexField, Complex64::new(0.0, 0.0));

pub fn mass_real(f: &RealField) -> f64 {
    let g = &f.grid;
    let mut s = 0.0;
    for j in 0..g.n {
        let r = g.r(j);
        s += f.v[j] * f.v[j] * r * r;
    }
    FOUR_PI * g.h * s
}

pub fn mass(u: &ComplexField) -> f64 {
    let g = &u.grid;
    let mut s = 0.0;
    for j in 0..g.n {
        let r = g.r(j);
        s += u.v[j].norm_sqr() * r * r;
    }
    FOUR_PI * g.h * s
}

pub fn grad_norm_sq_real(f: &RealField) -> f64 {
    mass_real(&f.radial_derivative())
}

pub fn grad_norm_sq(u: &ComplexField) -> f64 {
    mass(&u.radial_derivative())
}

/// int |x|^{-b} |u|^4 dx.
pub fn potential_term(u: &ComplexField, b: f64) -> f64 {
    let g = &u.grid;
    let mut s = 0.0;
    for j in 0..g.n {
        let r = g.r(j);
        let a2 = u.v[j].norm_sqr();
        s += r.powf(-b) * a2 * a2 * r * r;
    }
    FOUR_PI * g.h * s
}

pub fn potential_term_real(f: &RealField, b: f64) -> f64 {
    let g = &f.grid;
    let mut s = 0.0;
    for j in 0..g.n {
        let r = g.r(j);
        let a2 = f.v[j] * f.v[j];
        s += r.powf(-b) * a2 * a2 * r * r;
    }
    FOUR_PI * g.h * s
}

/// E(u) = 1/2 int |grad u|^2 - 1/4 int |x|^{-b}|u|^4.
pub fn energy(u: &ComplexField, b: f64) -> f64 {
    0.5 * grad_norm_sq(u) - 0.25 * potential_term(u, b)
}

pub fn h1_norm_sq(u: &ComplexField) -> f64 {
    mass(u) + grad_norm_sq(u)
}

pub fn h1_norm_sq_real(f: &RealField) -> f64 {
    mass_real(f) + grad_norm_sq_real(f)
}

/// Evaluate a field off the nodes by 4-point (cubic) Lagrange interpolation.
/// Below the first node the even extension is used, beyond the last node the
/// field is taken to be zero.
pub fn sample_at(f: &RealField, x: f64) -> f64 {
    let g = &f.grid;
    let n = g.n;
    let x = x.abs();
    if x >= g.r(n - 1) {
        return if x > g.r_max { 0.0 } else { f.v[n - 1] };
    }
    if x <= g.r(0) {
        // even quadratic through the first two nodes
        let r0 = g.r(0);
        let r1 = g.r(1);
        let t = (x * x - r0 * r0) / (r1 * r1 - r0 * r0);
        return f.v[0] + (f.v[1] - f.v[0]) * t;
    }
    let pos = x / g.h - g.offset;
    let j = (pos.floor() as usize).clamp(1, n - 3);
    let t = pos - j as f64; // in [0,1) between nodes j and j+1
    let (a, b, c, d) = (f.v[j - 1], f.v[j], f.v[j + 1], f.v[j + 2]);
    // Lagrange cubic on equally spaced points -1, 0, 1, 2
    let t2 = t * t;
    let t3 = t2 * t;
    a * (-t3 + 3.0 * t2 - 2.0 * t) / 6.0
        + b * (3.0 * t3 - 6.0 * t2 - 3.0 * t + 6.0) / 6.0
        + c * (-3.0 * t3 + 3.0 * t2 + 6.0 * t) / 6.0
        + d * (t3 - t) / 6.0
}

/// Deterministic smooth radial test field: a sum of a few Gaussian bumps with
/// seed-driven centers, widths and signs.
pub fn smooth_random_field(grid: &Arc<RadialGrid>, seed: u64, amplitude: f64) -> RealField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = 0.4 * grid.r_max;
    let bumps: Vec<(f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.gen_range(0.0..span),
                rng.gen_range(0.5..3.0),
                rng.gen_range(-1.0..1.0f64),
            )
        })
        .collect();
    RealField::from_fn(grid.clone(), |r| {
        amplitude
            * bumps
                .iter()
                .map(|&(c, w, a)| {
                    // even in r so the profile is a valid radial section
                    a * ((-((r - c) / w).powi(2)).exp() + (-((r + c) / w).powi(2)).exp())
                })
                .sum::<f64>()
    })
}
