use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::particles::ParticleEnsemble;
use crate::pde::DensityField;

/// Spatial factor of a test function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialMode {
    Const,
    Cos(u32),
    Sin(u32),
}

/// Velocity factor of a test function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocityProfile {
    /// `(1 - u²)⁴` with `u = (v - center) / width`, zero for `|u| ≥ 1`.
    Bump { center: f64, width: f64 },
    /// `1` for every `v`.
    One,
}

/// `ψ(x, v) = X(x) V(v)` with `‖ψ‖_∞ ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub spatial: SpatialMode,
    pub velocity: VelocityProfile,
}

/// `ψ`, `∂_x ψ`, `∂_v ψ`, `∂_vv ψ` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub dx: f64,
    pub dv: f64,
    pub dvv: f64,
}

impl TestFunction {
    pub fn new(spatial: SpatialMode, velocity: VelocityProfile) -> Self {
        Self { spatial, velocity }
    }

    fn spatial_jet(&self, x: f64) -> (f64, f64) {
        match self.spatial {
            SpatialMode::Const => (1.0, 0.0),
            SpatialMode::Cos(k) => {
                let w = 2.0 * PI * k as f64;
                let (s, c) = libm::sincos(w * x);
                (c, -w * s)
            }
            SpatialMode::Sin(k) => {
                let w = 2.0 * PI * k as f64;
                let (s, c) = libm::sincos(w * x);
                (s, w * c)
            }
        }
    }

    fn velocity_jet(&self, v: f64) -> (f64, f64, f64) {
        match self.velocity {
            VelocityProfile::One => (1.0, 0.0, 0.0),
            VelocityProfile::Bump { center, width } => {
                let u = (v - center) / width;
                if u.abs() >= 1.0 {
                    return (0.0, 0.0, 0.0);
                }
                let q = 1.0 - u * u;
                let q2 = q * q;
                let b = q2 * q2;
                let b1 = -8.0 * u * q2 * q;
                let b2 = q2 * (56.0 * u * u - 8.0);
                (b, b1 / width, b2 / (width * width))
            }
        }
    }

    pub fn value(&self, x: f64, v: f64) -> f64 {
        self.spatial_jet(x).0 * self.velocity_jet(v).0
    }

    pub fn jet(&self, x: f64, v: f64) -> Jet {
        let (s, sx) = self.spatial_jet(x);
        let (b, bv, bvv) = self.velocity_jet(v);
        Jet { value: s * b, dx: sx * b, dv: s * bv, dvv: s * bvv }
    }
}

/// A finite list of test functions.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionFamily {
    pub functions: Vec<TestFunction>,
}

impl TestFunctionFamily {
    /// Spatial modes `1, cos 2πkx, sin 2πkx` (`k ≤ 3`) times a bump of the
    /// given width at each center.
    pub fn new(centers: &[f64], width: f64) -> Self {
        let mut spatial = alloc::vec![SpatialMode::Const];
        for k in 1..=3 {
            spatial.push(SpatialMode::Cos(k));
            spatial.push(SpatialMode::Sin(k));
        }
        let mut functions = Vec::with_capacity(spatial.len() * centers.len());
        for &c in centers {
            for &s in &spatial {
                functions.push(TestFunction::new(s, VelocityProfile::Bump { center: c, width }));
            }
        }
        Self { functions }
    }

    /// Bumps of width 1 centered at `-1, -0.5, 0, 0.5, 1`.
    pub fn standard() -> Self {
        Self::new(&[-1.0, -0.5, 0.0, 0.5, 1.0], 1.0)
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }
}

/// Something that can be integrated against a test function.
pub trait Pairing {
    fn pairing(&self, psi: &TestFunction) -> f64;
}

impl Pairing for ParticleEnsemble {
    /// `(1/N) Σ ψ(x_i, v_i)`.
    fn pairing(&self, psi: &TestFunction) -> f64 {
        let s: f64 = self.positions.iter().zip(&self.velocities).map(|(x, v)| psi.value(*x, *v)).sum();
        s / self.len() as f64
    }
}

impl Pairing for DensityField {
    /// `Σ ψ f dx dv` over cell centers.
    fn pairing(&self, psi: &TestFunction) -> f64 {
        let g = self.grid;
        let n_v = g.n_v();
        // separable: evaluate the two factors once each
        let xs: Vec<f64> = (0..g.n_x()).map(|i| psi.spatial_jet(g.x(i)).0).collect();
        let vs: Vec<f64> = (0..n_v).map(|j| psi.velocity_jet(g.v(j)).0).collect();
        let mut total = 0.0;
        for (i, xi) in xs.iter().enumerate() {
            let col = &self.values[i * n_v..(i + 1) * n_v];
            total += xi * col.iter().zip(&vs).map(|(f, b)| f * b).sum::<f64>();
        }
        total * g.dx() * g.dv()
    }
}

/// `⟨measure, ψ⟩`.
pub fn pairing<M: Pairing + ?Sized>(measure: &M, psi: &TestFunction) -> f64 {
    measure.pairing(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogeneous::{VDensity, VGrid};
    use alloc::vec;

    #[test]
    fn derivatives_match_finite_differences() {
        let psi = TestFunction::new(SpatialMode::Sin(2), VelocityProfile::Bump { center: 0.3, width: 0.8 });
        let h = 1e-5;
        for &(x, v) in &[(0.1, 0.2), (0.77, 0.9), (0.4, -0.3)] {
            let j = psi.jet(x, v);
            let fx = (psi.value(x + h, v) - psi.value(x - h, v)) / (2.0 * h);
            let fv = (psi.value(x, v + h) - psi.value(x, v - h)) / (2.0 * h);
            let fvv = (psi.value(x, v + h) - 2.0 * j.value + psi.value(x, v - h)) / (h * h);
            assert!((j.dx - fx).abs() < 1e-6);
            assert!((j.dv - fv).abs() < 1e-6);
            assert!((j.dvv - fvv).abs() < 1e-4);
        }
    }

    #[test]
    fn bounded_by_one_and_compactly_supported() {
        let fam = TestFunctionFamily::standard();
        assert_eq!(fam.len(), 35);
        for psi in &fam.functions {
            for i in 0..50 {
                for j in 0..80 {
                    let v = -4.0 + 0.1 * j as f64;
                    assert!(psi.value(i as f64 / 50.0, v).abs() <= 1.0);
                }
            }
            assert_eq!(psi.value(0.3, 5.0), 0.0);
        }
    }

    #[test]
    fn unit_pairings() {
        let one = TestFunction::new(SpatialMode::Const, VelocityProfile::One);
        let e = ParticleEnsemble::gaussian_uniform(10, 0.0, 1.0, 1).unwrap();
        assert!((pairing(&e, &one) - 1.0).abs() < 1e-15);
        let f = DensityField::homogeneous(16, &VDensity::gaussian(VGrid::truncated(0.0, 1.0, 64).unwrap(), 0.0, 1.0).unwrap())
            .unwrap();
        assert!((pairing(&f, &one) - 1.0).abs() < 1e-12);
        let psi = TestFunction::new(SpatialMode::Cos(1), VelocityProfile::Bump { center: 0.0, width: 1.0 });
        let single = ParticleEnsemble::new(vec![0.25], vec![0.5]).unwrap();
        assert_eq!(pairing(&single, &psi), psi.value(0.25, 0.5));
    }

    #[test]
    fn pairing_is_linear_in_mixtures() {
        let psi = TestFunction::new(SpatialMode::Sin(1), VelocityProfile::Bump { center: 0.5, width: 1.0 });
        let a = ParticleEnsemble::gaussian_uniform(30, 0.0, 1.0, 2).unwrap();
        let b = ParticleEnsemble::gaussian_uniform(70, 1.0, 0.5, 3).unwrap();
        let mut both = a.clone();
        both.positions.extend(&b.positions);
        both.velocities.extend(&b.velocities);
        let want = 0.3 * pairing(&a, &psi) + 0.7 * pairing(&b, &psi);
        assert!((pairing(&both, &psi) - want).abs() < 1e-14);
    }
}
