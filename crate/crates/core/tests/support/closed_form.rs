// Closed-form Jacobian of the reduced-group split-ballot CTUM model in the
// residual labeling Ψ_1 = diag(ψ1..ψ6), Ψ_2 = diag(ψ1, ψ2, ψ3, ψ7, ψ8, ψ9).
// Rows: group 1 (y11 y12 y21 y22 y31 y32) then group 2 (y11 y13 y21 y23 y31 y33),
// each in column-major lower-triangle order. Columns: θ order of the preset.

use nalgebra::DMatrix;

#[allow(dead_code)]
pub const COLUMNS: [&str; 24] = [
    "l11", "l21", "l31", "l12", "l22", "l32", "l13", "l23", "l33", "psi1", "psi2", "psi3", "psi4", "psi5", "psi6", "psi7", "psi8", "psi9", "rho12", "rho13", "rho23", "phi4", "phi5", "phi6",
];

/// Implied moments, as the row labels of the closed form.
#[allow(dead_code, clippy::too_many_arguments)]
pub fn closed_form_moments(t: &[f64]) -> Vec<f64> {
    let [l11, l21, l31, l12, l22, l32, l13, l23, l33, psi1, psi2, psi3, psi4, psi5, psi6, psi7, psi8, psi9, rho12, rho13, rho23, phi4, phi5, phi6]: [f64; 24] = t.try_into().expect("24 parameters");
    let _ = (l11, l21, l31, l12, l22, l32, l13, l23, l33, psi1, psi2, psi3, psi4, psi5, psi6, psi7, psi8, psi9, rho12, rho13, rho23, phi4, phi5, phi6);
    vec![
        l11 * l11 + psi1 + phi4,
        l11 * l12,
        l11 * l21 * rho12 + phi4,
        l11 * l22 * rho12,
        l11 * l31 * rho13 + phi4,
        l11 * l32 * rho13,
        l12 * l12 + psi2 + phi5,
        l12 * l21 * rho12,
        l12 * l22 * rho12 + phi5,
        l12 * l31 * rho13,
        l12 * l32 * rho13 + phi5,
        l21 * l21 + psi3 + phi4,
        l21 * l22,
        l21 * l31 * rho23 + phi4,
        l21 * l32 * rho23,
        l22 * l22 + psi4 + phi5,
        l22 * l31 * rho23,
        l22 * l32 * rho23 + phi5,
        l31 * l31 + psi5 + phi4,
        l31 * l32,
        l32 * l32 + psi6 + phi5,
        l11 * l11 + psi1 + phi4,
        l11 * l13,
        l11 * l21 * rho12 + phi4,
        l11 * l23 * rho12,
        l11 * l31 * rho13 + phi4,
        l11 * l33 * rho13,
        l13 * l13 + psi2 + phi6,
        l13 * l21 * rho12,
        l13 * l23 * rho12 + phi6,
        l13 * l31 * rho13,
        l13 * l33 * rho13 + phi6,
        l21 * l21 + psi3 + phi4,
        l21 * l23,
        l21 * l31 * rho23 + phi4,
        l21 * l33 * rho23,
        l23 * l23 + psi7 + phi6,
        l23 * l31 * rho23,
        l23 * l33 * rho23 + phi6,
        l31 * l31 + psi8 + phi4,
        l31 * l33,
        l33 * l33 + psi9 + phi6,
    ]
}

#[allow(dead_code)]
pub fn closed_form_jacobian(t: &[f64]) -> DMatrix<f64> {
    let [l11, l21, l31, l12, l22, l32, l13, l23, l33, psi1, psi2, psi3, psi4, psi5, psi6, psi7, psi8, psi9, rho12, rho13, rho23, phi4, phi5, phi6]: [f64; 24] = t.try_into().expect("24 parameters");
    let _ = (l11, l21, l31, l12, l22, l32, l13, l23, l33, psi1, psi2, psi3, psi4, psi5, psi6, psi7, psi8, psi9, rho12, rho13, rho23, phi4, phi5, phi6);
    let rows: Vec<[f64; 24]> = vec![
        [2.0 * l11, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        [l12, 0.0, 0.0, l11, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [l21 * rho12, l11 * rho12, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l11 * l21, 0.0, 0.0, 1.0, 0.0, 0.0],
        [l22 * rho12, 0.0, 0.0, 0.0, l11 * rho12, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l11 * l22, 0.0, 0.0, 0.0, 0.0, 0.0],
        [l31 * rho13, 0.0, l11 * rho13, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l11 * l31, 0.0, 1.0, 0.0, 0.0],
        [l32 * rho13, 0.0, 0.0, 0.0, 0.0, l11 * rho13, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l11 * l32, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 2.0 * l12, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, l12 * rho12, 0.0, l21 * rho12, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l12 * l21, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, l22 * rho12, l12 * rho12, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l12 * l22, 0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, l12 * rho13, l31 * rho13, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l12 * l31, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, l32 * rho13, 0.0, l12 * rho13, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l12 * l32, 0.0, 0.0, 1.0, 0.0],
        [0.0, 2.0 * l21, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, l22, 0.0, 0.0, l21, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, l31 * rho23, l21 * rho23, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l21 * l31, 1.0, 0.0, 0.0],
        [0.0, l32 * rho23, 0.0, 0.0, 0.0, l21 * rho23, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l21 * l32, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 2.0 * l22, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, l22 * rho23, 0.0, l31 * rho23, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l22 * l31, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, l32 * rho23, l22 * rho23, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l22 * l32, 0.0, 1.0, 0.0],
        [0.0, 0.0, 2.0 * l31, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, l32, 0.0, 0.0, l31, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 2.0 * l32, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        [2.0 * l11, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        [l13, 0.0, 0.0, 0.0, 0.0, 0.0, l11, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [l21 * rho12, l11 * rho12, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l11 * l21, 0.0, 0.0, 1.0, 0.0, 0.0],
        [l23 * rho12, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l11 * rho12, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l11 * l23, 0.0, 0.0, 0.0, 0.0, 0.0],
        [l31 * rho13, 0.0, l11 * rho13, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l11 * l31, 0.0, 1.0, 0.0, 0.0],
        [l33 * rho13, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l11 * rho13, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l11 * l33, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0 * l13, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        [0.0, l13 * rho12, 0.0, 0.0, 0.0, 0.0, l21 * rho12, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l13 * l21, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l23 * rho12, l13 * rho12, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l13 * l23, 0.0, 0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, l13 * rho13, 0.0, 0.0, 0.0, l31 * rho13, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l13 * l31, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l33 * rho13, 0.0, l13 * rho13, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l13 * l33, 0.0, 0.0, 0.0, 1.0],
        [0.0, 2.0 * l21, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, l23, 0.0, 0.0, 0.0, 0.0, 0.0, l21, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, l31 * rho23, l21 * rho23, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l21 * l31, 1.0, 0.0, 0.0],
        [0.0, l33 * rho23, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l21 * rho23, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l21 * l33, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0 * l23, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, l23 * rho23, 0.0, 0.0, 0.0, 0.0, l31 * rho23, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l23 * l31, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l33 * rho23, l23 * rho23, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, l23 * l33, 0.0, 0.0, 1.0],
        [0.0, 0.0, 2.0 * l31, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, l33, 0.0, 0.0, 0.0, 0.0, 0.0, l31, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0 * l33, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    ];
    DMatrix::from_fn(42, 24, |i, j| rows[i][j])
}
