//! Lifting meridian profiles to 3D fields and evaluating them with the
//! three-dimensional functional.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{AxisymState, CylinderDomain, MeridianGrid};
use crate::energy::{field_energy, FieldEnergy};
use crate::error::{Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::spectral::{gauss_legendre, GridField, GridSpec};

/// Piecewise bilinear profile through the nodal values, with the Dirichlet
/// values at `r = R`, `z = 0`, `z = H` and constant extension below `r_0`.
#[derive(Debug, Clone)]
pub struct ProfileInterpolant {
    domain: CylinderDomain,
    grid: MeridianGrid,
    /// `(nr + 1) x (nz + 1)` nodal values, Dirichlet nodes included.
    values: Vec<f64>,
}

impl ProfileInterpolant {
    pub fn new(state: &AxisymState, domain: &CylinderDomain, grid: &MeridianGrid) -> Result<Self> {
        state.check(grid)?;
        let (nr, nz) = (grid.nr, grid.nz);
        let mut values = vec![0.0; (nr + 1) * (nz + 1)];
        for j in 1..nz {
            for i in 0..nr {
                values[i + (nr + 1) * j] = state.alpha[grid.index(i, j)];
            }
        }
        Ok(ProfileInterpolant {
            domain: *domain,
            grid: *grid,
            values,
        })
    }

    /// Radial node positions including the wall.
    fn r_node(&self, i: usize) -> f64 {
        if i == self.grid.nr {
            self.domain.radius
        } else {
            self.grid.r(&self.domain, i)
        }
    }

    /// `(alpha, d alpha / dr, d alpha / dz)`; zero outside the cylinder.
    pub fn eval(&self, r: f64, z: f64) -> (f64, f64, f64) {
        let (nr, nz) = (self.grid.nr, self.grid.nz);
        if !(r < self.domain.radius && z > 0.0 && z < self.domain.height) {
            return (0.0, 0.0, 0.0);
        }
        let dr = self.grid.dr(&self.domain);
        let dz = self.grid.dz(&self.domain);
        let j = ((z / dz).floor() as usize).min(nz - 1);
        let sz = (z - j as f64 * dz) / dz;
        let node = |i: usize, jj: usize| self.values[i + (nr + 1) * jj];
        let r0 = self.r_node(0);
        if r < r0 {
            let (a, b) = (node(0, j), node(0, j + 1));
            return (a + sz * (b - a), 0.0, (b - a) / dz);
        }
        let i = (((r - r0) / dr).floor() as usize).min(nr - 1);
        let (ra, rb) = (self.r_node(i), self.r_node(i + 1));
        let sr = (r - ra) / (rb - ra);
        let (a00, a10, a01, a11) = (node(i, j), node(i + 1, j), node(i, j + 1), node(i + 1, j + 1));
        let lo = a00 + sr * (a10 - a00);
        let hi = a01 + sr * (a11 - a01);
        let d_r = ((1.0 - sz) * (a10 - a00) + sz * (a11 - a01)) / (rb - ra);
        (lo + sz * (hi - lo), d_r, (hi - lo) / dz)
    }

    /// Lifted field and its curl at a Cartesian point.
    pub fn field_and_curl(&self, x: [f64; 3]) -> ([f64; 3], [f64; 3]) {
        let r = x[0].hypot(x[1]);
        let (a, a_r, a_z) = self.eval(r, x[2]);
        let e = [-a * x[1], a * x[0], 0.0];
        // curl (a (-y, x, 0)) = (-x a_z, -y a_z, 2 a + r a_r)
        let c = [-x[0] * a_z, -x[1] * a_z, 2.0 * a + r * a_r];
        (e, c)
    }
}

/// Product quadrature on the cylinder: Gauss-Legendre in `r` and `z` on
/// every interpolation cell, uniform in the angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CylinderQuadrature {
    pub per_cell: usize,
    pub n_theta: usize,
}

impl Default for CylinderQuadrature {
    fn default() -> Self {
        CylinderQuadrature {
            per_cell: 5,
            n_theta: 8,
        }
    }
}

impl CylinderQuadrature {
    /// Cartesian points and weights `r dr dz dtheta`.
    pub fn points(&self, domain: &CylinderDomain, grid: &MeridianGrid) -> Result<Vec<([f64; 3], f64)>> {
        if self.per_cell == 0 || self.n_theta < 3 {
            return Err(Error::InvalidParameter(
                "cylinder quadrature needs per_cell >= 1 and n_theta >= 3".into(),
            ));
        }
        let mut r_edges = vec![0.0];
        r_edges.extend((0..grid.nr).map(|i| grid.r(domain, i)));
        r_edges.push(domain.radius);
        let z_edges: Vec<f64> = (0..=grid.nz).map(|j| grid.z(domain, j)).collect();
        let mut rq = Vec::new();
        for w in r_edges.windows(2) {
            let (x, wt) = gauss_legendre(self.per_cell, w[0], w[1]);
            rq.extend(x.into_iter().zip(wt));
        }
        let mut zq = Vec::new();
        for w in z_edges.windows(2) {
            let (x, wt) = gauss_legendre(self.per_cell, w[0], w[1]);
            zq.extend(x.into_iter().zip(wt));
        }
        let dtheta = 2.0 * PI / self.n_theta as f64;
        let mut pts = Vec::with_capacity(rq.len() * zq.len() * self.n_theta);
        for &(z, wz) in &zq {
            for &(r, wr) in &rq {
                for k in 0..self.n_theta {
                    let th = (k as f64 + 0.25) * dtheta;
                    pts.push(([r * th.cos(), r * th.sin(), z], r * wr * wz * dtheta));
                }
            }
        }
        Ok(pts)
    }
}

/// The three-dimensional functional of the lifted field.
pub fn lifted_energy(
    state: &AxisymState,
    domain: &CylinderDomain,
    grid: &MeridianGrid,
    lambda: f64,
    nonlinearity: &NonlinearitySpec,
    quad: &CylinderQuadrature,
) -> Result<FieldEnergy> {
    let interp = ProfileInterpolant::new(state, domain, grid)?;
    let pts = quad.points(domain, grid)?;
    Ok(field_energy(&pts, |x| interp.field_and_curl(x), lambda, nonlinearity))
}

/// Sample the lifted field on a box grid covering `[-R, R]^2 x [0, H]`;
/// nodes outside the cylinder are masked and hold zero.
pub fn lift_to_3d(
    state: &AxisymState,
    domain: &CylinderDomain,
    grid: &MeridianGrid,
    target: &GridSpec,
) -> Result<GridField> {
    let interp = ProfileInterpolant::new(state, domain, grid)?;
    let (lo, hi) = (
        target.origin,
        [0, 1, 2].map(|a| target.origin[a] + target.extent[a]),
    );
    let tol = 1e-12 * domain.radius.max(domain.height);
    if lo[0] > -domain.radius + tol
        || lo[1] > -domain.radius + tol
        || hi[0] < domain.radius - tol
        || hi[1] < domain.radius - tol
        || lo[2] > tol
        || hi[2] < domain.height - tol
    {
        return Err(Error::Incompatible("target grid does not cover the cylinder".into()));
    }
    let nodes = target.nodes();
    let mask: Vec<bool> = nodes
        .iter()
        .map(|x| x[0].hypot(x[1]) < domain.radius && x[2] > 0.0 && x[2] < domain.height)
        .collect();
    let values = nodes
        .iter()
        .zip(&mask)
        .map(|(x, &inside)| if inside { interp.field_and_curl(*x).0 } else { [0.0; 3] })
        .collect();
    Ok(GridField {
        grid: target.clone(),
        values,
        mask: Some(mask),
    })
}

/// Largest tangential trace `|nu x E|` on the wall and caps, read from the
/// nearest inside node of a sampled field, relative to the largest field
/// magnitude. `n_samples` points are placed on the wall and on each cap.
pub fn lifted_trace_residual(field: &GridField, domain: &CylinderDomain, n_samples: usize) -> Result<f64> {
    let mask = field
        .mask
        .as_ref()
        .ok_or_else(|| Error::Incompatible("trace residual needs a masked box-embedded field".into()))?;
    let nodes = field.grid.nodes();
    let inside: Vec<usize> = (0..nodes.len()).filter(|&i| mask[i]).collect();
    if inside.is_empty() || n_samples == 0 {
        return Err(Error::InvalidParameter("no inside nodes or no samples".into()));
    }
    let scale = field.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut samples: Vec<([f64; 3], [f64; 3])> = Vec::new();
    for k in 0..n_samples {
        let th = k as f64 * golden;
        let s = (k as f64 + 0.5) / n_samples as f64;
        let (c, sn) = (th.cos(), th.sin());
        samples.push(([domain.radius * c, domain.radius * sn, s * domain.height], [c, sn, 0.0]));
        let rho = domain.radius * s.sqrt();
        samples.push(([rho * c, rho * sn, 0.0], [0.0, 0.0, -1.0]));
        samples.push(([rho * c, rho * sn, domain.height], [0.0, 0.0, 1.0]));
    }
    let mut worst = 0.0_f64;
    for (p, nu) in samples {
        let nearest = inside
            .iter()
            .copied()
            .min_by(|&a, &b| dist2(nodes[a], p).total_cmp(&dist2(nodes[b], p)))
            .expect("nonempty");
        let e = field.values[nearest];
        let t = [
            nu[1] * e[2] - nu[2] * e[1],
            nu[2] * e[0] - nu[0] * e[2],
            nu[0] * e[1] - nu[1] * e[0],
        ];
        worst = worst.max((t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt());
    }
    Ok(worst / scale)
}

fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// Azimuthal test profile `cos((m - 1/2) pi r / R) sin(n pi z / H)` with
/// its derivatives.
fn test_profile(domain: &CylinderDomain, m: usize, n: usize, r: f64, z: f64) -> (f64, f64, f64) {
    let kr = (m as f64 - 0.5) * PI / domain.radius;
    let kz = n as f64 * PI / domain.height;
    (
        (kr * r).cos() * (kz * z).sin(),
        -kr * (kr * r).sin() * (kz * z).sin(),
        kz * (kr * r).cos() * (kz * z).cos(),
    )
}

/// `max |J'(E)[phi]| / (|curl E| |curl phi|)` over azimuthal test fields
/// `phi = beta (-x2, x1, 0)` with `m, n <= modes`.
pub fn lifted_weak_residual(
    state: &AxisymState,
    domain: &CylinderDomain,
    grid: &MeridianGrid,
    lambda: f64,
    nonlinearity: &NonlinearitySpec,
    quad: &CylinderQuadrature,
    modes: usize,
) -> Result<f64> {
    let interp = ProfileInterpolant::new(state, domain, grid)?;
    let pts = quad.points(domain, grid)?;
    let mut curl_e = 0.0;
    let mut pairing = vec![0.0; modes * modes];
    let mut curl_phi = vec![0.0; modes * modes];
    for &(x, w) in &pts {
        let (e, c) = interp.field_and_curl(x);
        curl_e += w * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
        let f = if nonlinearity.is_zero() { [0.0; 3] } else { nonlinearity.eval(x, e).1 };
        let r = x[0].hypot(x[1]);
        for m in 1..=modes {
            for n in 1..=modes {
                let (b, b_r, b_z) = test_profile(domain, m, n, r, x[2]);
                let phi = [-b * x[1], b * x[0], 0.0];
                let cphi = [-x[0] * b_z, -x[1] * b_z, 2.0 * b + r * b_r];
                let k = (m - 1) * modes + (n - 1);
                pairing[k] += w
                    * (c[0] * cphi[0] + c[1] * cphi[1] + c[2] * cphi[2]
                        + (0..3).map(|d| (lambda * e[d] - f[d]) * phi[d]).sum::<f64>());
                curl_phi[k] += w * (cphi[0] * cphi[0] + cphi[1] * cphi[1] + cphi[2] * cphi[2]);
            }
        }
    }
    if curl_e == 0.0 {
        return Ok(0.0);
    }
    Ok(pairing
        .iter()
        .zip(&curl_phi)
        .map(|(p, c)| p.abs() / (curl_e * c).sqrt())
        .fold(0.0, f64::max))
}

/// `max |int E . grad psi| / (|E| |grad psi|)` over a fixed family of
/// non-symmetric potentials vanishing on the boundary.
pub fn lifted_weak_divergence(
    state: &AxisymState,
    domain: &CylinderDomain,
    grid: &MeridianGrid,
    quad: &CylinderQuadrature,
) -> Result<f64> {
    let interp = ProfileInterpolant::new(state, domain, grid)?;
    let pts = quad.points(domain, grid)?;
    let (rr, hh) = (domain.radius, domain.height);
    // psi = (R^2 - r^2) s(z) g(x1, x2): gradient by product rule
    let potentials: [(fn(f64, f64) -> (f64, f64, f64), usize); 3] = [
        (|x, y| (x + 0.3 * y, 1.0, 0.3), 1),
        (|x, y| (x * y, y, x), 2),
        (|x, y| (1.0 + x * x - 0.5 * y, 2.0 * x, -0.5), 1),
    ];
    let mut pair = [0.0; 3];
    let mut grad_sq = [0.0; 3];
    let mut e_sq = 0.0;
    for &(x, w) in &pts {
        let (e, _) = interp.field_and_curl(x);
        e_sq += w * (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]);
        let bump = rr * rr - x[0] * x[0] - x[1] * x[1];
        for (k, (g, n)) in potentials.iter().enumerate() {
            let kz = *n as f64 * PI / hh;
            let (s, s_z) = ((kz * x[2]).sin(), kz * (kz * x[2]).cos());
            let (gv, gx, gy) = g(x[0], x[1]);
            let grad = [
                s * (bump * gx - 2.0 * x[0] * gv),
                s * (bump * gy - 2.0 * x[1] * gv),
                s_z * bump * gv,
            ];
            pair[k] += w * (e[0] * grad[0] + e[1] * grad[1] + e[2] * grad[2]);
            grad_sq[k] += w * (grad[0] * grad[0] + grad[1] * grad[1] + grad[2] * grad[2]);
        }
    }
    if e_sq == 0.0 {
        return Ok(0.0);
    }
    Ok((0..3)
        .map(|k| pair[k].abs() / (e_sq * grad_sq[k]).sqrt())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::super::reduced::ReducedFunctional;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pi_cylinder() -> CylinderDomain {
        CylinderDomain::new(PI, PI).unwrap()
    }

    fn smooth(d: &CylinderDomain) -> impl Fn(f64, f64) -> f64 + '_ {
        move |r, z| {
            let rr = r / d.radius;
            (0.5 * PI * rr).cos() * (PI * z / d.height).sin() * (1.0 + 0.4 * rr * rr) + 0.3 * (1.5 * PI * rr).cos() * (2.0 * PI * z / d.height).sin()
        }
    }

    #[test]
    fn zero_profile_lifts_to_zero() {
        let d = pi_cylinder();
        let g = MeridianGrid::new(5, 5).unwrap();
        let target = GridSpec::uniform_on([-PI, -PI, 0.0], [2.0 * PI, 2.0 * PI, PI], [6, 6, 4]).unwrap();
        let f = lift_to_3d(&AxisymState::zeros(&g), &d, &g, &target).unwrap();
        assert_eq!(f.max_abs(), 0.0);
        assert!(f.mask.as_ref().unwrap().iter().any(|&m| !m));
    }

    #[test]
    fn lift_is_rotation_equivariant() {
        let d = pi_cylinder();
        let g = MeridianGrid::new(7, 9).unwrap();
        let s = AxisymState::sample(&d, &g, smooth(&d));
        let interp = ProfileInterpolant::new(&s, &d, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (r, th, z, phi) = (
                rng.gen_range(0.0..PI),
                rng.gen_range(0.0..2.0 * PI),
                rng.gen_range(0.0..PI),
                rng.gen_range(0.0..2.0 * PI),
            );
            let x = [r * th.cos(), r * th.sin(), z];
            let y = [r * (th + phi).cos(), r * (th + phi).sin(), z];
            let (ex, _) = interp.field_and_curl(x);
            let (ey, _) = interp.field_and_curl(y);
            let rot = [phi.cos() * ex[0] - phi.sin() * ex[1], phi.sin() * ex[0] + phi.cos() * ex[1], ex[2]];
            for k in 0..3 {
                assert!((rot[k] - ey[k]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn curl_identity_against_cartesian_differences() {
        // 30 random smooth profiles: the cylindrical curl formula matches
        // central differences of the Cartesian lift inside cells
        let d = pi_cylinder();
        let g = MeridianGrid::new(6, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = AxisymState::sample(&d, &g, |r, z| {
                let rr = r / d.radius;
                c[0] * (0.5 * PI * rr).cos() * z.sin() + c[1] * (1.5 * PI * rr).cos() * (2.0 * z).sin() + c[2] * rr * rr * (1.0 - rr) * z.sin() + c[3]
                    * (1.0 - rr * rr)
                    * (3.0 * z).sin()
            });
            let interp = ProfileInterpolant::new(&s, &d, &g).unwrap();
            for _ in 0..10 {
                let (r, th, z): (f64, f64, f64) = (rng.gen_range(0.6..2.9), rng.gen_range(0.0..6.28), rng.gen_range(0.1..3.0));
                let x = [r * th.cos(), r * th.sin(), z];
                let (_, curl) = interp.field_and_curl(x);
                let h = 1e-7;
                let de = |a: usize, b: usize| {
                    let mut xp = x;
                    let mut xm = x;
                    xp[b] += h;
                    xm[b] -= h;
                    (interp.field_and_curl(xp).0[a] - interp.field_and_curl(xm).0[a]) / (2.0 * h)
                };
                let fd = [de(2, 1) - de(1, 2), de(0, 2) - de(2, 0), de(1, 0) - de(0, 1)];
                let scale = 1.0 + curl.iter().map(|v| v.abs()).fold(0.0, f64::max);
                let err = (0..3).map(|k| (fd[k] - curl[k]).abs()).fold(0.0, f64::max);
                assert!(err <= 1e-5 * scale, "{curl:?} vs {fd:?}");
            }
        }
    }

    #[test]
    fn constant_profile_curl_is_two_a_along_the_axis() {
        let d = pi_cylinder();
        let g = MeridianGrid::new(4, 4).unwrap();
        let s = AxisymState {
            alpha: vec![0.7; g.n_unknowns()],
        };
        let interp = ProfileInterpolant::new(&s, &d, &g).unwrap();
        let (_, c) = interp.field_and_curl([0.2, -0.1, 0.5 * PI]);
        assert!(c[0].abs() < 1e-15 && c[1].abs() < 1e-15);
        assert!((c[2] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn reduced_and_lifted_energies_agree_at_second_order() {
        let d = pi_cylinder();
        let nl = NonlinearitySpec::power(1.0, 4.0).unwrap();
        let quad = CylinderQuadrature::default();
        let mut errs = Vec::new();
        for n in [8, 16, 32] {
            let g = MeridianGrid::new(n, n).unwrap();
            let s = AxisymState::sample(&d, &g, smooth(&d));
            let f = ReducedFunctional::new(d, g, -0.5, nl.clone()).unwrap();
            let jy = f.energy(&s.alpha);
            let j3 = lifted_energy(&s, &d, &g, -0.5, &nl, &quad).unwrap().total;
            errs.push((jy - j3).abs() / (1.0 + jy.abs()));
        }
        let o1 = (errs[0] / errs[1]).log2();
        let o2 = (errs[1] / errs[2]).log2();
        assert!(o1 >= 1.8 && o2 >= 1.8, "{errs:?}");
    }

    #[test]
    fn lifted_fields_are_weakly_divergence_free() {
        let d = CylinderDomain::new(1.3, 2.0).unwrap();
        let g = MeridianGrid::new(9, 11).unwrap();
        let s = AxisymState::sample(&d, &g, smooth(&d));
        let q = CylinderQuadrature { per_cell: 3, n_theta: 8 };
        assert!(lifted_weak_divergence(&s, &d, &g, &q).unwrap() <= 1e-12);
    }

    #[test]
    fn trace_residual_shrinks_with_the_box_grid() {
        let d = pi_cylinder();
        let g = MeridianGrid::new(16, 16).unwrap();
        let s = AxisymState::sample(&d, &g, smooth(&d));
        let res: Vec<f64> = [12, 24, 48]
            .iter()
            .map(|&n| {
                let target = GridSpec::uniform_on([-PI, -PI, 0.0], [2.0 * PI, 2.0 * PI, PI], [n, n, n / 2]).unwrap();
                let f = lift_to_3d(&s, &d, &g, &target).unwrap();
                lifted_trace_residual(&f, &d, 200).unwrap()
            })
            .collect();
        assert!(res[1] < res[0] && res[2] < res[1], "{res:?}");
        assert!((res[0] / res[2]).log2() / 2.0 >= 0.7, "{res:?}");
    }
}
