use std::ops::{Add, Mul, Neg, Sub};

use super::{Compton, LinearPolarization};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        self * (1.0 / self.norm())
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A photon in flight.
///
/// `basis` is the right-handed transverse frame `(e1, e2)` with
/// `e1 × e2 = direction`; the polarization angle is measured from `e1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhotonState {
    pub energy: f64,
    direction: Vec3,
    basis: [Vec3; 2],
    pub polarization: LinearPolarization,
}

impl PhotonState {
    /// Builds a photon from its direction and first basis vector. `e1` is
    /// projected onto the transverse plane and normalized.
    pub fn new(energy: f64, direction: Vec3, e1: Vec3, polarization: LinearPolarization) -> Self {
        let direction = direction.normalized();
        let e1 = (e1 - direction * e1.dot(direction)).normalized();
        let e2 = direction.cross(e1);
        Self { energy, direction, basis: [e1, e2], polarization }
    }

    /// Photon moving along `+z` with basis `(x̂, ŷ)`.
    pub fn along_plus_z(energy: f64, polarization: LinearPolarization) -> Self {
        Self::new(energy, Vec3::Z, Vec3::X, polarization)
    }

    /// Photon moving along `−z` with basis `(x̂, −ŷ)`.
    pub fn along_minus_z(energy: f64, polarization: LinearPolarization) -> Self {
        Self::new(energy, -Vec3::Z, Vec3::X, polarization)
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    pub fn basis(&self) -> [Vec3; 2] {
        self.basis
    }

    /// Unit vector along the polarization plane.
    pub fn polarization_vector(&self) -> Vec3 {
        let (s, c) = self.polarization.angle().sin_cos();
        self.basis[0] * c + self.basis[1] * s
    }

    /// Direction of a photon scattered by polar angle `theta` at azimuth `phi`
    /// measured in this photon's basis.
    pub fn scattered_direction(&self, theta: f64, phi: f64) -> Vec3 {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let u = self.basis[0] * cp + self.basis[1] * sp;
        self.direction * ct + u * st
    }

    /// The photon after a Compton scattering by `(theta, phi)`.
    ///
    /// The new basis is the old one rotated about the scattering-plane normal by
    /// `theta`, so azimuths stay continuous with the incident frame.
    pub fn scattered(&self, compton: &Compton, theta: f64, phi: f64) -> PhotonState {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let [e1, e2] = self.basis;
        let k = self.direction;
        let u = e1 * cp + e2 * sp;
        let n = e2 * cp - e1 * sp;
        let k_out = k * ct + u * st;
        let u_out = u * ct - k * st;
        let e1_out = u_out * cp - n * sp;
        let e2_out = u_out * sp + n * cp;
        PhotonState {
            energy: compton.scattered_energy(self.energy, theta),
            direction: k_out,
            basis: [e1_out, e2_out],
            polarization: compton.scatter_polarization(self.polarization, theta, phi, self.energy),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn assert_frame(p: &PhotonState) {
        let [e1, e2] = p.basis();
        let k = p.direction();
        assert!((k.norm() - 1.0).abs() < 1e-12);
        assert!((e1.norm() - 1.0).abs() < 1e-12 && (e2.norm() - 1.0).abs() < 1e-12);
        assert!(e1.dot(k).abs() < 1e-12 && e2.dot(k).abs() < 1e-12 && e1.dot(e2).abs() < 1e-12);
        assert!((e1.cross(e2) - k).norm() < 1e-12);
        assert!(p.polarization_vector().dot(k).abs() < 1e-12);
    }

    #[test]
    fn standard_frames() {
        let pol = LinearPolarization::fully(0.3);
        let a = PhotonState::along_plus_z(511.0, pol);
        let b = PhotonState::along_minus_z(511.0, pol);
        assert_frame(&a);
        assert_frame(&b);
        assert_eq!(b.basis()[1], -Vec3::Y);
    }

    #[test]
    fn backscatter_keeps_polarization_vector() {
        // at 180° the non-flip amplitude leaves the polarization vector unchanged in space
        let pol = LinearPolarization::fully(0.8);
        let a = PhotonState::along_plus_z(511.0, pol);
        let out = a.scattered(&Compton::STANDARD, std::f64::consts::PI, 0.25);
        assert!((out.direction() + Vec3::Z).norm() < 1e-12);
        assert!((out.polarization_vector().dot(a.polarization_vector()).abs() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn scattering_preserves_frame(theta in 0.0..PI, phi in 0.0..TAU,
                                       theta2 in 0.0..PI, phi2 in 0.0..TAU) {
            let c = Compton::STANDARD;
            let a = PhotonState::along_minus_z(511.0, LinearPolarization::fully(1.0));
            let once = a.scattered(&c, theta, phi);
            assert_frame(&once);
            prop_assert!((once.direction() - a.scattered_direction(theta, phi)).norm() < 1e-12);
            let twice = once.scattered(&c, theta2, phi2);
            assert_frame(&twice);
            prop_assert!(twice.energy <= once.energy && once.energy <= a.energy);
        }
    }
}
