//! Dirac-matrix basis and model Hamiltonians.

use crate::error::{Error, Result};
use crate::linalg::{c, cr, Mat4, C64, I, ONE, ZERO};
use serde::{Deserialize, Serialize};

/// The five mutually anticommuting Hermitian 4×4 matrices Γ₁..Γ₅.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracBasis {
    gamma: [Mat4; 5],
}

impl DiracBasis {
    /// Γᵢ with the physics index `i ∈ 1..=5`.
    pub fn gamma(&self, i: usize) -> &Mat4 {
        assert!((1..=5).contains(&i), "Dirac index must be in 1..=5, got {i}");
        &self.gamma[i - 1]
    }

    pub fn all(&self) -> &[Mat4; 5] {
        &self.gamma
    }

    pub fn anticommutator(&self, i: usize, j: usize) -> Mat4 {
        let (a, b) = (self.gamma(i), self.gamma(j));
        a * b + b * a
    }

    /// `Σᵢ qᵢ Γᵢ`.
    pub fn contract(&self, q: &[f64; 5]) -> Mat4 {
        let mut h = Mat4::zeros();
        for (g, &qi) in self.gamma.iter().zip(q) {
            h += g * cr(qi);
        }
        h
    }
}

fn mat4(rows: [[C64; 4]; 4]) -> Mat4 {
    Mat4::from_fn(|r, col| rows[r][col])
}

pub fn dirac_basis() -> DiracBasis {
    let o = ZERO;
    let p = ONE;
    let m = -ONE;
    let pi = I;
    let mi = -I;
    DiracBasis {
        gamma: [
            mat4([[o, o, o, m], [o, o, p, o], [o, p, o, o], [m, o, o, o]]),
            mat4([[o, p, o, o], [p, o, o, o], [o, o, o, p], [o, o, p, o]]),
            mat4([[o, pi, o, o], [mi, o, o, o], [o, o, o, mi], [o, o, pi, o]]),
            mat4([[p, o, o, o], [o, m, o, o], [o, o, p, o], [o, o, o, m]]),
            mat4([[o, o, o, mi], [o, o, pi, o], [o, mi, o, o], [pi, o, o, o]]),
        ],
    }
}

/// Hyperspherical coordinates of a parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spherical {
    pub r: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub phi1: f64,
    pub phi2: f64,
}

pub fn spherical_to_cartesian(r: f64, theta1: f64, theta2: f64, phi1: f64, phi2: f64) -> [f64; 5] {
    let (s1, c1) = theta1.sin_cos();
    let (s2, c2) = theta2.sin_cos();
    let (sp1, cp1) = phi1.sin_cos();
    let (sp2, cp2) = phi2.sin_cos();
    [
        r * s1 * s2 * cp2,
        r * s1 * c2 * cp1,
        r * s1 * c2 * sp1,
        r * c1,
        r * s1 * s2 * sp2,
    ]
}

/// A location in the 5D parameter space plus the gain/loss strength κ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterPoint {
    pub q: [f64; 5],
    pub kappa: f64,
    pub spherical: Option<Spherical>,
}

impl ParameterPoint {
    pub fn cartesian(q: [f64; 5], kappa: f64) -> Result<Self> {
        if q.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("q must be finite".into()));
        }
        check_kappa(kappa)?;
        Ok(Self { q, kappa, spherical: None })
    }

    pub fn spherical(s: Spherical, kappa: f64) -> Result<Self> {
        if !(s.r >= 0.0) || !s.r.is_finite() {
            return Err(Error::InvalidInput(format!("radius must be finite and >= 0, got {}", s.r)));
        }
        check_kappa(kappa)?;
        Ok(Self::from_angles(s.r, s.theta1, s.theta2, s.phi1, s.phi2, kappa))
    }

    /// Unchecked spherical constructor for hot loops.
    pub(crate) fn from_angles(r: f64, t1: f64, t2: f64, p1: f64, p2: f64, kappa: f64) -> Self {
        Self {
            q: spherical_to_cartesian(r, t1, t2, p1, p2),
            kappa,
            spherical: Some(Spherical { r, theta1: t1, theta2: t2, phi1: p1, phi2: p2 }),
        }
    }

    pub fn radius(&self) -> f64 {
        self.q.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `z = E²`, the common square of the two band energies.
    pub fn squared_energy(&self) -> C64 {
        let q2: f64 = self.q.iter().map(|x| x * x).sum();
        c(q2 - self.kappa * self.kappa, 2.0 * self.kappa * self.q[3])
    }

    pub fn with_kappa(&self, kappa: f64) -> Self {
        Self { kappa, ..*self }
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidInput(format!("kappa must be finite and >= 0, got {kappa}")));
    }
    Ok(())
}

/// `q·Γ + iκΓ₄`, written out entry-wise.
pub fn build_hamiltonian(p: &ParameterPoint) -> Mat4 {
    let [q1, q2, q3, q4, q5] = p.q;
    let d = c(q4, p.kappa);
    let a = c(q2, q3);
    let b = c(q1, q5);
    let o = ZERO;
    mat4([
        [d, a, o, -b],
        [a.conj(), -d, b, o],
        [o, b.conj(), d, a.conj()],
        [-b.conj(), o, a, -d],
    ])
}

/// The explicit two-parameter loop Hamiltonian over θ₁ at offset Δ.
pub fn build_moebius_hamiltonian(r: f64, delta: f64, theta1: f64, kappa: f64) -> Mat4 {
    let (s, co) = theta1.sin_cos();
    let a = (r * s + delta) / std::f64::consts::SQRT_2;
    let d = c(r * co, kappa);
    let o = ZERO;
    mat4([
        [d, cr(a), o, cr(-a)],
        [cr(a), -d, cr(a), o],
        [o, cr(a), d, cr(a)],
        [cr(-a), o, cr(a), -d],
    ])
}

/// Parameter point on the Möbius loop family.
pub fn moebius_point(r: f64, delta: f64, theta1: f64, kappa: f64) -> ParameterPoint {
    let a = (r * theta1.sin() + delta) / std::f64::consts::SQRT_2;
    ParameterPoint { q: [a, a, 0.0, r * theta1.cos(), 0.0], kappa, spherical: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    #[test]
    fn gamma4_is_diagonal() {
        let b = dirac_basis();
        let expected = Mat4::from_diagonal(&nalgebra::Vector4::new(ONE, -ONE, ONE, -ONE));
        assert_eq!(*b.gamma(4), expected);
    }

    #[test]
    fn gamma1_squares_to_identity() {
        let b = dirac_basis();
        assert_eq!(b.anticommutator(1, 1), Mat4::identity() * cr(2.0));
    }

    #[test]
    fn gamma2_gamma3_anticommute() {
        assert_eq!(dirac_basis().anticommutator(2, 3), Mat4::zeros());
    }

    #[test]
    fn north_pole() {
        let q = spherical_to_cartesian(1.0, 0.0, 0.7, 1.9, 4.2);
        assert_eq!(q, [0.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn equatorial_symmetry_point() {
        let q = spherical_to_cartesian(1.0, FRAC_PI_2, FRAC_PI_2, 0.0, 0.0);
        let expected = [1.0, 0.0, 0.0, 0.0, 0.0];
        for (a, b) in q.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn generic_point_has_radius() {
        let q = spherical_to_cartesian(2.0, FRAC_PI_3, FRAC_PI_4, FRAC_PI_2, PI);
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - 2.0).abs() < 1e-14);
    }

    #[test]
    fn explicit_entries_match_basis_contraction() {
        let b = dirac_basis();
        let p = ParameterPoint::cartesian([0.3, -1.2, 0.7, 2.1, -0.4], 0.8).unwrap();
        let expected = b.contract(&p.q) + b.gamma(4) * c(0.0, p.kappa);
        assert_eq!(build_hamiltonian(&p), expected);
    }

    #[test]
    fn unit_q4_gives_gamma4() {
        let p = ParameterPoint::cartesian([0.0, 0.0, 0.0, 1.0, 0.0], 0.0).unwrap();
        assert_eq!(build_hamiltonian(&p), *dirac_basis().gamma(4));
    }

    #[test]
    fn pure_gain_loss() {
        let p = ParameterPoint::cartesian([0.0; 5], 1.0).unwrap();
        let h = build_hamiltonian(&p);
        assert_eq!(h, dirac_basis().gamma(4) * I);
    }

    #[test]
    fn moebius_diagonal_at_origin_angle() {
        let h = build_moebius_hamiltonian(1.0, 0.0, 0.0, 1.0);
        let d = [c(1.0, 1.0), c(-1.0, -1.0), c(1.0, 1.0), c(-1.0, -1.0)];
        for (i, di) in d.iter().enumerate() {
            assert_eq!(h[(i, i)], *di);
        }
        assert_eq!(h[(0, 1)], ZERO);
    }

    #[test]
    fn moebius_zero_everything() {
        assert_eq!(build_moebius_hamiltonian(0.0, 0.0, 1.3, 0.0), Mat4::zeros());
    }

    #[test]
    fn rejects_negative_radius() {
        let s = Spherical { r: -1.0, theta1: 0.0, theta2: 0.0, phi1: 0.0, phi2: 0.0 };
        assert!(ParameterPoint::spherical(s, 1.0).is_err());
    }
}
