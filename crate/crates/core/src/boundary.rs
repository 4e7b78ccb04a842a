//! Boundary conditioning: rewrite the velocity so it carries the body and
//! wall conditions, then recover a consistent vorticity and a solenoidal
//! velocity from it.

use std::sync::Arc;

use crate::dynamics::{Conditioned, Conditioner};
use crate::error::{Error, Result};
use crate::geometry::{identify_numerical_boundary, BoundaryPoint, ImmersedBody, NumericalBoundary, Stencil};
use crate::spectral::{
    curl_spectral, forward_pair, inverse_pair, velocity_from_vorticity, Grid, PhysicalField, SpectralField,
};

/// Tail of each erf ramp at the ends of the rise band.
const WINDOW_TAIL: f64 = 1e-15;

/// Steepness `c` of `0.5 (1 + erf(c (s - s0) / rise))` such that the ramp
/// is within [`WINDOW_TAIL`] of 0 and 1 at the ends of the rise band.
pub fn ramp_steepness() -> f64 {
    // Solve erfc(c / 2) / 2 = tail by bisection; erfc is decreasing.
    let (mut lo, mut hi) = (0.0f64, 20.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 0.5 * libm::erfc(mid / 2.0) > WINDOW_TAIL {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Smooth step from 0 at `s <= start` to 1 at `s >= start + rise`.
#[inline]
pub fn ramp(s: f64, start: f64, rise: f64, c: f64) -> f64 {
    0.5 * (1.0 + libm::erf(c * (s - start - 0.5 * rise) / rise))
}

/// Window that vanishes in a margin along the domain edges and rises
/// smoothly to one in the interior.
#[derive(Clone, Debug)]
pub struct WindowField {
    pub rho: PhysicalField,
    /// Margin width (length).
    pub margin: f64,
    /// Rise distance (length).
    pub rise: f64,
}

/// Builds the window for a margin and rise distance (both lengths).
pub fn build_window(grid: &Grid, margin: f64, rise: f64) -> Result<WindowField> {
    let cells = (rise / grid.dx1()).min(rise / grid.dx2());
    if !(cells >= 2.0) {
        return Err(Error::Window(format!(
            "rise distance {rise} spans {cells:.2} cells; at least 2 are needed"
        )));
    }
    if !(margin >= 0.0) {
        return Err(Error::Window(format!("margin {margin} must be non-negative")));
    }
    for l in [grid.l1(), grid.l2()] {
        if 2.0 * (margin + rise) >= l {
            return Err(Error::Window(format!(
                "margin + rise = {} leaves no interior in a domain of length {l}",
                margin + rise
            )));
        }
    }
    let c = ramp_steepness();
    let axis = |n: usize, dx: f64| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let left = i as f64 * dx;
                let right = (n - i) as f64 * dx;
                ramp(left, margin, rise, c) * ramp(right, margin, rise, c)
            })
            .collect()
    };
    let r1 = axis(grid.n1(), grid.dx1());
    let r2 = axis(grid.n2(), grid.dx2());
    let mut rho = PhysicalField::zeros(grid);
    for j in 0..grid.n2() {
        for i in 0..grid.n1() {
            rho.set(i, j, r1[i] * r2[j]);
        }
    }
    Ok(WindowField { rho, margin, rise })
}

impl WindowField {
    /// A window of ones: no outer walls.
    pub fn unit(grid: &Grid) -> Self {
        WindowField {
            rho: PhysicalField::constant(grid, 1.0),
            margin: 0.0,
            rise: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.rho.grid()
    }

    /// Whether `x` lies at least `clearance` away from the margin.
    pub fn clear_of_margin(&self, lo: [f64; 2], hi: [f64; 2], clearance: f64) -> bool {
        let g = self.grid();
        let o = g.origin();
        let m = self.margin + clearance;
        lo[0] - o[0] >= m && lo[1] - o[1] >= m && o[0] + g.l1() - hi[0] >= m && o[1] + g.l2() - hi[1] >= m
    }
}

/// Lagrange weights of the polynomial through `nodes`, evaluated at `x`.
pub fn lagrange_weights(nodes: &[f64], x: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|a| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(b, _)| b != a)
                .map(|(_, &nb)| (x - nb) / (nodes[a] - nb))
                .product()
        })
        .collect()
}

/// Weights on `(u_pb, u_I, u_II)` for the value at a point `delta[0]` below
/// the surface, from the degree-`order` polynomial along the normal through
/// the surface value and the probes at distances `delta[1]` and
/// `delta[1] + delta[2]` beyond the surface.
pub fn extrapolation_weights(delta: [f64; 3], order: usize) -> [f64; 3] {
    let [d1, d2, d3] = delta;
    let nodes = [d1, d1 + d2, d1 + d2 + d3];
    let mut w = [0.0; 3];
    let k = order.min(2) + 1;
    for (slot, v) in w.iter_mut().zip(lagrange_weights(&nodes[..k], 0.0)) {
        *slot = v;
    }
    w
}

fn probe(s: &Stencil, u1: &PhysicalField, u2: &PhysicalField) -> [f64; 2] {
    [s.apply(u1.values()), s.apply(u2.values())]
}

fn extrapolate_point(p: &BoundaryPoint, u1: &PhysicalField, u2: &PhysicalField, u_pb: [f64; 2], n_p: usize) -> [f64; 2] {
    let order = n_p.min(p.order);
    if order == 0 {
        return u_pb;
    }
    let w = extrapolation_weights(p.delta, order);
    let a = probe(&p.probes[0], u1, u2);
    let b = if order >= 2 { probe(&p.probes[1], u1, u2) } else { [0.0; 2] };
    [
        w[0] * u_pb[0] + w[1] * a[0] + w[2] * b[0],
        w[0] * u_pb[1] + w[1] * a[1] + w[2] * b[1],
    ]
}

/// Values at the numerical boundary points from order-`n_p` extrapolation
/// along the normal.
pub fn extrapolate_boundary_values(
    u1: &PhysicalField,
    u2: &PhysicalField,
    nb: &NumericalBoundary,
    u_pb: [f64; 2],
    n_p: usize,
) -> Vec<[f64; 2]> {
    nb.points.iter().map(|p| extrapolate_point(p, u1, u2, u_pb, n_p)).collect()
}

/// One body's contribution to the extension.
pub struct BodyBoundary<'a> {
    pub body: &'a ImmersedBody,
    pub boundary: &'a NumericalBoundary,
}

/// Extends the velocity through the bodies.
///
/// Every body point takes the surface velocity, except the numerical
/// boundary points and the layer one probe spacing deep, which carry the
/// normal polynomial of degree `n_p` evaluated at their depth. For
/// `n_p = 0` and a positive `body_rise`, the surface value is blended into
/// the fluid over `body_rise` with the window ramp instead of a sharp mask.
/// Later bodies take precedence at shared points.
pub fn extend_into_body(
    u1: &PhysicalField,
    u2: &PhysicalField,
    bodies: &[BodyBoundary<'_>],
    n_p: usize,
    t: f64,
    body_rise: f64,
) -> (PhysicalField, PhysicalField) {
    let mut d1 = u1.clone();
    let mut d2 = u2.clone();
    let grid = u1.grid();
    for bb in bodies {
        let u_pb = bb.body.surface_velocity_at(t);
        if n_p == 0 && body_rise > 0.0 {
            blend_body(&mut d1, &mut d2, u1, u2, bb.body, u_pb, t, body_rise);
            continue;
        }
        for &k in &bb.boundary.interior {
            d1.values_mut()[k] = u_pb[0];
            d2.values_mut()[k] = u_pb[1];
        }
        if n_p == 0 {
            continue;
        }
        for p in bb.boundary.points.iter().chain(&bb.boundary.layer) {
            let v = extrapolate_point(p, u1, u2, u_pb, n_p);
            let k = grid.idx(p.i, p.j);
            d1.values_mut()[k] = v[0];
            d2.values_mut()[k] = v[1];
        }
    }
    (d1, d2)
}

#[allow(clippy::too_many_arguments)]
fn blend_body(
    d1: &mut PhysicalField,
    d2: &mut PhysicalField,
    u1: &PhysicalField,
    u2: &PhysicalField,
    body: &ImmersedBody,
    u_pb: [f64; 2],
    t: f64,
    rise: f64,
) {
    let grid = u1.grid().clone();
    let c = ramp_steepness();
    let (lo, hi) = body.bounding_box(t);
    let span = |a: f64, b: f64, o: f64, dx: f64, n: usize| {
        let i0 = (((a - rise - o) / dx).floor().max(0.0)) as usize;
        let i1 = (((b + rise - o) / dx).ceil() as usize).min(n - 1);
        i0..=i1
    };
    let o = grid.origin();
    for j in span(lo[1], hi[1], o[1], grid.dx2(), grid.n2()) {
        for i in span(lo[0], hi[0], o[0], grid.dx1(), grid.n1()) {
            let phi = body.signed_distance(grid.point(i, j), t);
            if phi >= rise {
                continue;
            }
            let r = if phi <= 0.0 { 0.0 } else { ramp(phi, 0.0, rise, c) };
            let k = grid.idx(i, j);
            d1.values_mut()[k] = u_pb[0] + r * (u1.values()[k] - u_pb[0]);
            d2.values_mut()[k] = u_pb[1] + r * (u2.values()[k] - u_pb[1]);
        }
    }
}

/// Everything the conditioner needs besides the vorticity.
#[derive(Clone, Debug)]
pub struct ConditioningConfig {
    /// Extrapolation order, 0 to 2.
    pub n_p: usize,
    pub window: WindowField,
    pub bodies: Vec<ImmersedBody>,
    /// Smoothing distance of the body mask for `n_p = 0` (0 for a sharp
    /// mask).
    pub body_rise: f64,
}

impl ConditioningConfig {
    pub fn new(n_p: usize, window: WindowField, bodies: Vec<ImmersedBody>) -> Result<Self> {
        let cfg = ConditioningConfig { n_p, window, bodies, body_rise: 0.0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_p > 2 {
            return Err(Error::InvalidParameter(format!("n_p = {} must be 0, 1 or 2", self.n_p)));
        }
        let h = self.window.grid().min_spacing();
        for (k, b) in self.bodies.iter().enumerate() {
            let (lo, hi) = b.swept_box();
            if self.window.margin > 0.0 && !self.window.clear_of_margin(lo, hi, h) {
                return Err(Error::Geometry(format!("body {k} overlaps the wall margin")));
            }
        }
        Ok(())
    }
}

/// The conditioning pipeline as a [`Conditioner`].
pub struct BoundaryConditioner {
    cfg: ConditioningConfig,
    fixed: Option<Arc<Vec<NumericalBoundary>>>,
}

impl BoundaryConditioner {
    pub fn new(cfg: ConditioningConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(BoundaryConditioner { cfg, fixed: None })
    }

    pub fn config(&self) -> &ConditioningConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &Grid {
        self.cfg.window.grid()
    }

    /// Numerical boundaries of all bodies at time `t`. Fixed bodies are
    /// identified once and cached.
    pub fn boundaries(&mut self, t: f64) -> Result<Arc<Vec<NumericalBoundary>>> {
        let moving = self.cfg.bodies.iter().any(ImmersedBody::is_moving);
        if !moving {
            if let Some(nb) = &self.fixed {
                return Ok(Arc::clone(nb));
            }
        }
        let grid = self.grid().clone();
        let nbs = self
            .cfg
            .bodies
            .iter()
            .map(|b| identify_numerical_boundary(b, &grid, t, self.cfg.n_p, &self.cfg.bodies))
            .collect::<Result<Vec<_>>>()?;
        let nbs = Arc::new(nbs);
        if !moving {
            self.fixed = Some(Arc::clone(&nbs));
        }
        Ok(nbs)
    }

    /// The windowed, extended velocity built from `u`.
    pub fn modified_velocity(
        &self,
        u1: &PhysicalField,
        u2: &PhysicalField,
        nbs: &[NumericalBoundary],
        t: f64,
    ) -> (PhysicalField, PhysicalField) {
        let pairs: Vec<BodyBoundary<'_>> = self
            .cfg
            .bodies
            .iter()
            .zip(nbs)
            .map(|(body, boundary)| BodyBoundary { body, boundary })
            .collect();
        let (mut d1, mut d2) = extend_into_body(u1, u2, &pairs, self.cfg.n_p, t, self.cfg.body_rise);
        let rho = self.cfg.window.rho.values();
        for ((a, b), r) in d1.values_mut().iter_mut().zip(d2.values_mut()).zip(rho) {
            *a *= r;
            *b *= r;
        }
        (d1, d2)
    }
}

impl Conditioner for BoundaryConditioner {
    fn condition(&mut self, omega: &SpectralField, t: f64, n_r: usize) -> Result<Conditioned> {
        let nbs = if self.cfg.bodies.is_empty() { Arc::default() } else { self.boundaries(t)? };
        let (mut v1, mut v2) = velocity_from_vorticity(omega);
        let mut w = omega.clone();
        for _ in 0..n_r.max(1) {
            let (u1, u2) = inverse_pair(&v1, &v2)?;
            let (b1, b2) = self.modified_velocity(&u1, &u2, &nbs, t);
            let (f1, f2) = forward_pair(&b1, &b2)?;
            w = curl_spectral(&f1, &f2)?;
            (v1, v2) = velocity_from_vorticity(&w);
        }
        Ok(Conditioned { omega: w, u1: v1, u2: v2 })
    }
}

/// Mismatch between the velocity interpolated at each surface foot point of
/// `body` and the imposed surface velocity, paired with the foot point.
pub fn surface_mismatch(
    u1: &PhysicalField,
    u2: &PhysicalField,
    body: &ImmersedBody,
    nb: &NumericalBoundary,
    t: f64,
) -> Vec<([f64; 2], f64)> {
    let grid = u1.grid();
    let u_pb = body.surface_velocity_at(t);
    nb.points
        .iter()
        .map(|p| {
            let v = probe(&Stencil::bilinear(grid, p.foot), u1, u2);
            (p.foot, (v[0] - u_pb[0]).hypot(v[1] - u_pb[1]))
        })
        .collect()
}

/// Largest [`surface_mismatch`] over all bodies.
pub fn surface_residual(
    u1: &PhysicalField,
    u2: &PhysicalField,
    bodies: &[ImmersedBody],
    nbs: &[NumericalBoundary],
    t: f64,
) -> f64 {
    bodies
        .iter()
        .zip(nbs)
        .flat_map(|(b, nb)| surface_mismatch(u1, u2, b, nb, t))
        .fold(0.0, |m, (_, r)| m.max(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;
    use crate::spectral::{divergence_spectral, forward, inverse};

    #[test]
    fn steepness_meets_tail() {
        let c = ramp_steepness();
        assert!(0.5 * libm::erfc(c / 2.0) <= WINDOW_TAIL);
        assert!((c / 2.0 - 5.6).abs() < 0.1, "{c}");
    }

    #[test]
    fn window_levels() {
        let g = Grid::square(128, 1.0).unwrap();
        let h = g.dx1();
        let w = build_window(&g, 8.0 * h, 6.0 * h).unwrap();
        // Middle of the rise band on the left edge, far from the others.
        assert!((w.rho.get(11, 64) - 0.5).abs() < 1e-15);
        assert!(w.rho.get(5, 64).abs() < 1e-14);
        assert!((w.rho.get(64, 64) - 1.0).abs() < 1e-14);
        assert!((w.rho.get(14, 64) - 1.0).abs() < 1e-14);
        assert!(w.rho.get(8, 64) < 1e-14);
    }

    #[test]
    fn window_needs_two_cells() {
        let g = Grid::square(64, 1.0).unwrap();
        assert!(build_window(&g, 0.1, 1.5 * g.dx1()).is_err());
        assert!(build_window(&g, 0.1, 2.0 * g.dx1()).is_ok());
    }

    #[test]
    fn lagrange_reproduces_polynomials() {
        let nodes = [0.3, 1.1, 2.0];
        let p = |x: f64| 1.5 - 2.0 * x + 0.7 * x * x;
        let w = lagrange_weights(&nodes, -0.4);
        let v: f64 = w.iter().zip(&nodes).map(|(w, &x)| w * p(x)).sum();
        assert!((v - p(-0.4)).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn order_zero_and_one() {
        assert_eq!(extrapolation_weights([0.3, 1.0, 1.0], 0), [1.0, 0.0, 0.0]);
        let w = extrapolation_weights([0.5, 0.5, 0.5], 1);
        assert!((w[0] - 2.0).abs() < 1e-15 && (w[1] + 1.0).abs() < 1e-15 && w[2] == 0.0);
        let (d1, d2) = (0.2, 0.7);
        let w = extrapolation_weights([d1, d2, 0.7], 1);
        assert!((w[0] - (d1 + d2) / d2).abs() < 1e-15);
        assert!((w[1] + d1 / d2).abs() < 1e-15);
    }

    #[test]
    fn order_two_closed_form() {
        let [d1, d2, d3] = [0.3, 0.8, 1.1];
        let s = d1 + d2 + d3;
        let w = extrapolation_weights([d1, d2, d3], 2);
        let e = [
            (d1 + d2) * s / (d2 * (d2 + d3)),
            -d1 * s / (d2 * d3),
            d1 * (d1 + d2) / ((d2 + d3) * d3),
        ];
        for k in 0..3 {
            assert!((w[k] - e[k]).abs() < 1e-14, "{k}: {} vs {}", w[k], e[k]);
        }
    }

    #[test]
    fn printed_formula_is_lagrange_with_point_between_surface_and_probes() {
        // The published second-order weights, with the undefined symbol in
        // the first coefficient read as S = d1 + d2 + d3, are the Lagrange
        // weights for nodes at -d1 (surface), d2 and d2 + d3 (probes).
        let [d1, d2, d3] = [0.25, 0.6, 0.9];
        let s = d1 + d2 + d3;
        let printed = [
            d2 * (d2 + d3) / ((d1 + d2) * s),
            d1 * (d2 + d3) / (d3 * (d1 + d2)),
            -d1 * d2 / (d3 * s),
        ];
        let w = lagrange_weights(&[-d1, d2, d2 + d3], 0.0);
        for k in 0..3 {
            assert!((w[k] - printed[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn no_bodies_unit_window_is_identity() {
        let g = Grid::square(32, 1.0).unwrap();
        let cfg = ConditioningConfig::new(1, WindowField::unit(&g), vec![]).unwrap();
        let mut c = BoundaryConditioner::new(cfg).unwrap();
        let tau = 2.0 * std::f64::consts::PI;
        let mut w = forward(&PhysicalField::from_fn(&g, |x, y| (3.0 * tau * x).sin() * (tau * y).cos()));
        w.set(0, 0, num_complex::Complex64::new(0.0, 0.0));
        let out = c.condition(&w, 0.0, 1).unwrap();
        assert!(out.omega.axpy(-1.0, &w).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn conditioned_fields_are_zero_mean_and_solenoidal() {
        let g = Grid::square(64, 1.0).unwrap();
        let h = g.dx1();
        let win = build_window(&g, 4.0 * h, 4.0 * h).unwrap();
        let body = ImmersedBody::fixed(Shape::circle([0.5, 0.45], 0.12)).with_surface_velocity([0.3, -0.1]);
        let cfg = ConditioningConfig::new(2, win, vec![body]).unwrap();
        let mut c = BoundaryConditioner::new(cfg).unwrap();
        let w = forward(&PhysicalField::from_fn(&g, |x, y| (20.0 * x).sin() + (13.0 * y).cos() * x));
        let out = c.condition(&w, 0.0, 2).unwrap();
        assert_eq!(out.omega.mean_mode().norm(), 0.0);
        let div = inverse(&divergence_spectral(&out.u1, &out.u2).unwrap()).max_abs();
        let (u1, u2) = (inverse(&out.u1), inverse(&out.u2));
        assert!(div <= 1e-12 * u1.max_abs().max(u2.max_abs()));
    }

    #[test]
    fn extension_of_linear_shear_at_flat_wall() {
        let g = Grid::square(64, 1.0).unwrap();
        let h = g.dx1();
        // Wall occupying x1 <= 20h; fluid velocity u2 = x1 - 20h + 3h.
        let body = ImmersedBody::fixed(Shape::rect([8.0 * h, 8.0 * h], [20.0 * h, 56.0 * h]));
        let nb = identify_numerical_boundary(&body, &g, 0.0, 1, std::slice::from_ref(&body)).unwrap();
        let u1 = PhysicalField::zeros(&g);
        let u2 = PhysicalField::from_fn(&g, |x, _| x - 17.0 * h);
        let (_, e2) = extend_into_body(&u1, &u2, &[BodyBoundary { body: &body, boundary: &nb }], 1, 0.0, 0.0);
        let j = 30;
        // On the wall the line through (0, 0) and (h, u2(21h) = 4h) gives 0.
        assert!(e2.get(20, j).abs() < 1e-13);
        // One probe spacing in: the line continues to -4h.
        assert!((e2.get(19, j) + 4.0 * h).abs() < 1e-13);
        // Deeper: clamped to the wall velocity.
        assert_eq!(e2.get(18, j), 0.0);
        assert_eq!(e2.get(10, j), 0.0);
        // Fluid untouched.
        assert_eq!(e2.get(21, j), u2.get(21, j));
    }

    #[test]
    fn body_moving_with_ambient_flow_has_no_jump() {
        let g = Grid::square(64, 1.0).unwrap();
        let v = [0.4, -0.25];
        let body = ImmersedBody::fixed(Shape::circle([0.5, 0.5], 0.13)).with_surface_velocity(v);
        let nb = identify_numerical_boundary(&body, &g, 0.0, 1, std::slice::from_ref(&body)).unwrap();
        let u1 = PhysicalField::constant(&g, v[0]);
        let u2 = PhysicalField::constant(&g, v[1]);
        let (e1, e2) = extend_into_body(&u1, &u2, &[BodyBoundary { body: &body, boundary: &nb }], 1, 0.0, 0.0);
        assert!(e1.values().iter().all(|&a| (a - v[0]).abs() < 1e-14));
        assert!(e2.values().iter().all(|&a| (a - v[1]).abs() < 1e-14));
    }
}
