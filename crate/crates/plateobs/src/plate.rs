//! Kirchhoff–Love constitutive quantities and pointwise differential
//! operators: curvature, moment tensor, biharmonic operator, Kirchhoff shear
//! and edge jumps.
//!
//! All operations are pure functions of a point value [`FieldDerivs`];
//! nothing here stores fields, so assembly and error estimation reuse the
//! same formulas.

use crate::PlateError;

/// Material and geometry constants of the plate.
#[derive(Debug, Clone, Copy)]
pub struct PlateModel {
    /// Young's modulus.
    pub e: f64,
    /// Poisson ratio, in `[0, 0.5)`.
    pub nu: f64,
    /// Thickness.
    pub d: f64,
    /// Bending stiffness `E d^3 / (12 (1 - nu^2))`.
    pub bending_stiffness: f64,
}

impl PlateModel {
    pub fn new(e: f64, nu: f64, d: f64) -> Result<Self, PlateError> {
        if !(e > 0.0) {
            return Err(PlateError::InvalidModel(format!("E must be positive, got {e}")));
        }
        if !(0.0..0.5).contains(&nu) {
            return Err(PlateError::InvalidModel(format!(
                "Poisson ratio must lie in [0, 0.5), got {nu}"
            )));
        }
        if !(d > 0.0) {
            return Err(PlateError::InvalidModel(format!(
                "thickness must be positive, got {d}"
            )));
        }
        Ok(PlateModel {
            e,
            nu,
            d,
            bending_stiffness: e * d.powi(3) / (12.0 * (1.0 - nu * nu)),
        })
    }
}

/// Value and derivatives of a scalar field at one point, up to order four.
///
/// Mixed derivatives are stored once per multi-index:
/// `hess = [xx, xy, yy]`, `third = [xxx, xxy, xyy, yyy]`,
/// `fourth = [xxxx, xxxy, xxyy, xyyy, yyyy]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldDerivs {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [f64; 3],
    pub third: [f64; 4],
    pub fourth: [f64; 5],
}

impl FieldDerivs {
    /// `self += c * other`, used to expand DOF vectors in a basis.
    pub fn accumulate(&mut self, c: f64, other: &FieldDerivs) {
        self.value += c * other.value;
        for k in 0..2 {
            self.grad[k] += c * other.grad[k];
        }
        for k in 0..3 {
            self.hess[k] += c * other.hess[k];
        }
        for k in 0..4 {
            self.third[k] += c * other.third[k];
        }
        for k in 0..5 {
            self.fourth[k] += c * other.fourth[k];
        }
    }
}

/// Bending moment from a Hessian: `M = (d^3/12) C(-Hess u)` with
/// `C(A) = E/(1+nu) (A + nu/(1-nu) tr(A) I)`. Returned as `[xx, xy, yy]`.
pub fn moment_tensor(model: &PlateModel, hess: &[f64; 3]) -> [f64; 3] {
    let c1 = model.d.powi(3) / 12.0 * model.e / (1.0 + model.nu);
    let c2 = model.nu / (1.0 - model.nu);
    let tr = hess[0] + hess[2];
    [
        -c1 * (hess[0] + c2 * tr),
        -c1 * hess[1],
        -c1 * (hess[2] + c2 * tr),
    ]
}

/// `A(u) = D (u_xxxx + 2 u_xxyy + u_yyyy)`.
pub fn biharmonic(model: &PlateModel, fourth: &[f64; 5]) -> f64 {
    model.bending_stiffness * (fourth[0] + 2.0 * fourth[2] + fourth[4])
}

/// Shear force `Q = Div M(u)`, which reduces to `-D grad(laplace u)`.
pub fn shear(model: &PlateModel, third: &[f64; 4]) -> [f64; 2] {
    let d = model.bending_stiffness;
    [-d * (third[0] + third[2]), -d * (third[1] + third[3])]
}

/// Normal moment `M_nn = n . M(u) n` and Kirchhoff shear
/// `V_n = Q . n + d(M_ns)/ds` at one point of a straight edge with unit
/// outward normal `n` and unit tangent `s`.
pub fn normal_moment_and_kirchhoff_shear(
    model: &PlateModel,
    point: &FieldDerivs,
    n: [f64; 2],
    s: [f64; 2],
) -> (f64, f64) {
    let m = moment_tensor(model, &point.hess);
    let m_nn = n[0] * (m[0] * n[0] + m[1] * n[1]) + n[1] * (m[1] * n[0] + m[2] * n[1]);
    let q = shear(model, &point.third);
    let q_n = q[0] * n[0] + q[1] * n[1];
    // d/ds of M_ns: differentiate the moment through the Hessian derivatives.
    let mx = moment_tensor(model, &[point.third[0], point.third[1], point.third[2]]);
    let my = moment_tensor(model, &[point.third[1], point.third[2], point.third[3]]);
    let m_ns_of = |m: &[f64; 3]| {
        s[0] * (m[0] * n[0] + m[1] * n[1]) + s[1] * (m[1] * n[0] + m[2] * n[1])
    };
    let dm_ns_ds = s[0] * m_ns_of(&mx) + s[1] * m_ns_of(&my);
    (m_nn, q_n + dm_ns_ds)
}

/// Twisting moment `M_ns = s . M(u) n`.
pub fn twisting_moment(model: &PlateModel, hess: &[f64; 3], n: [f64; 2], s: [f64; 2]) -> f64 {
    let m = moment_tensor(model, hess);
    s[0] * (m[0] * n[0] + m[1] * n[1]) + s[1] * (m[1] * n[0] + m[2] * n[1])
}

/// Pointwise energy density `M(w) : K(v)`; its integral over the domain is
/// the strain energy inner product `a(w, v)`.
pub fn energy_density(model: &PlateModel, hess_w: &[f64; 3], hess_v: &[f64; 3]) -> f64 {
    let m = moment_tensor(model, hess_w);
    -(m[0] * hess_v[0] + 2.0 * m[1] * hess_v[1] + m[2] * hess_v[2])
}

/// Jumps of the normal moment and the Kirchhoff shear across an interior
/// edge: `[[M_nn]] = M_nn - M_{n'n'}` and `[[V_n]] = V_n + V_{n'}` with each
/// side evaluated in its own outward frame `(n, s)` and `(n', s')`.
pub fn edge_jumps(
    model: &PlateModel,
    side_a: &FieldDerivs,
    n_a: [f64; 2],
    s_a: [f64; 2],
    side_b: &FieldDerivs,
    n_b: [f64; 2],
    s_b: [f64; 2],
) -> (f64, f64) {
    let (m_a, v_a) = normal_moment_and_kirchhoff_shear(model, side_a, n_a, s_a);
    let (m_b, v_b) = normal_moment_and_kirchhoff_shear(model, side_b, n_b, s_b);
    (m_a - m_b, v_a + v_b)
}
