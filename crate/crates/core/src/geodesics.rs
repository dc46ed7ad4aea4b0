//! Geodesics of the warped product, the Jacobi equation along them, the
//! Ricci line integral, and the time-like diameter bound `π √((n−1)/c)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::curvature::{bilinear, christoffel_from_jets, curvature_from_jets, Signature};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::ode::{integrate, OdeOptions, OdeSolution, Stop};
use crate::spacetime::{classify_with, CausalKind, Spacetime, SpacetimeKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        GeodesicOptions {
            rtol: 1e-9,
            atol: 1e-11,
            h_max: 0.0,
        }
    }
}

impl GeodesicOptions {
    pub(crate) fn ode(&self) -> OdeOptions {
        OdeOptions {
            rtol: self.rtol,
            atol: self.atol,
            h_max: self.h_max,
            ..OdeOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicSample {
    pub r: f64,
    pub event: Vec<f64>,
    pub velocity: Vec<f64>,
    /// `g(γ', γ')`.
    pub norm: f64,
    /// `f² dt/dr` for static space-times.
    pub energy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct GeodesicTrajectory {
    pub samples: Vec<GeodesicSample>,
    pub kind: CausalKind,
    pub r_span: (f64, f64),
    /// Parameter at which the curve left the chart, if it did.
    pub exit: Option<f64>,
    solution: OdeSolution,
}

impl GeodesicTrajectory {
    pub fn dim(&self) -> usize {
        self.samples[0].event.len()
    }

    pub fn r_start(&self) -> f64 {
        self.r_span.0
    }

    /// Last parameter value actually reached.
    pub fn r_end(&self) -> f64 {
        self.solution.t_end
    }

    /// `(event, velocity)` at `r` from the dense output.
    pub fn state_at(&self, r: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.dim();
        self.solution.eval(r).map(|y| (y[..n].to_vec(), y[n..].to_vec()))
    }

    pub fn require_complete(&self) -> Result<()> {
        match self.exit {
            Some(r_exit) => Err(Error::BoundaryExit { r_exit }),
            None => Ok(()),
        }
    }

    /// Largest `|g(γ',γ') − g(γ'_0,γ'_0)|`.
    pub fn norm_drift(&self) -> f64 {
        let g0 = self.samples[0].norm;
        self.samples.iter().map(|s| (s.norm - g0).abs()).fold(0.0, f64::max)
    }

    /// Largest relative drift of the Killing energy, if defined.
    pub fn energy_drift(&self) -> Option<f64> {
        let e0 = self.samples[0].energy?;
        let scale = e0.abs().max(1e-300);
        Some(
            self.samples
                .iter()
                .filter_map(|s| s.energy)
                .map(|e| (e - e0).abs() / scale)
                .fold(0.0, f64::max),
        )
    }

    /// `r, t, x…, t', x'…, g(γ',γ')` rows.
    pub fn to_csv(&self, coords: &[String]) -> String {
        let mut out = String::from("r,t");
        for c in coords {
            out.push(',');
            out.push_str(c);
        }
        out.push_str(",dt");
        for c in coords {
            out.push_str(",d");
            out.push_str(c);
        }
        out.push_str(",norm\n");
        for s in &self.samples {
            let mut row = vec![format!("{:.17e}", s.r)];
            row.extend(s.event.iter().map(|v| format!("{v:.17e}")));
            row.extend(s.velocity.iter().map(|v| format!("{v:.17e}")));
            row.push(format!("{:.17e}", s.norm));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// `x''^k = −Γ^k_ij x'^i x'^j`.
pub(crate) fn geodesic_acceleration(st: &Spacetime, x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
    let n = x.len();
    let jets = st.metric_jets_at(x)?;
    let (_, gamma) = christoffel_from_jets(&jets, n)?;
    for k in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += gamma[(k * n + i) * n + j] * v[i] * v[j];
            }
        }
        out[k] = -acc;
    }
    Ok(())
}

fn killing_energy(st: &Spacetime, g: &DMatrix<f64>, v: &[f64]) -> Option<f64> {
    (st.kind() == SpacetimeKind::Static).then(|| -g[(0, 0)] * v[0])
}

/// Integrate the geodesic with `γ(r0) = event0`, `γ'(r0) = velocity0` over
/// `r_span = (r0, r1)`. Leaving the chart stops the integration and records
/// the exit parameter in [`GeodesicTrajectory::exit`].
pub fn integrate_geodesic(
    st: &Spacetime,
    event0: &[f64],
    velocity0: &[f64],
    r_span: (f64, f64),
    opts: &GeodesicOptions,
) -> Result<GeodesicTrajectory> {
    let n = st.dim();
    if event0.len() != n || velocity0.len() != n {
        return Err(Error::BadParam(format!("initial data must have {n} components")));
    }
    if !st.contains(event0) {
        return Err(Error::Domain(format!("initial event {event0:?} is outside the space-time chart")));
    }
    if !(r_span.0.is_finite() && r_span.1.is_finite()) {
        return Err(Error::BadParam("geodesic span must be finite".into()));
    }
    let g0 = st.metric_at(event0)?;
    let kind = classify_with(&g0, velocity0, 1e-10);
    let mut y0 = event0.to_vec();
    y0.extend_from_slice(velocity0);
    let rhs = |_r: f64, y: &[f64], d: &mut [f64]| {
        d[..n].copy_from_slice(&y[n..]);
        let (x, v) = y.split_at(n);
        geodesic_acceleration(st, x, v, &mut d[n..])
    };
    let sol = integrate(rhs, r_span.0, &y0, r_span.1, &[], |_, y| st.contains(&y[..n]), &opts.ode())?;
    let exit = match sol.stop {
        Stop::Completed => None,
        Stop::Exited { t_exit } => Some(t_exit),
    };
    let mut samples = Vec::with_capacity(sol.nodes.len() + 1);
    let mut push = |r: f64, y: &[f64]| -> Result<()> {
        let g = st.metric_at(&y[..n])?;
        let v = &y[n..];
        samples.push(GeodesicSample {
            r,
            event: y[..n].to_vec(),
            velocity: v.to_vec(),
            norm: bilinear(&g, v, v),
            energy: killing_energy(st, &g, v),
        });
        Ok(())
    };
    for (r, y) in &sol.nodes {
        push(*r, y)?;
    }
    if let Some(r_exit) = exit {
        if let Some(y) = sol.eval(r_exit) {
            if st.contains(&y[..n]) {
                push(r_exit, &y)?;
            }
        }
    }
    Ok(GeodesicTrajectory {
        samples,
        kind,
        r_span,
        exit,
        solution: sol,
    })
}

/// Frame used for the Jacobi scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JacobiBasis {
    /// `n − 1` vectors spanning `γ'^⊥` (timelike or spacelike `γ'`).
    OrthogonalComplement,
    /// `n − 2` spacelike vectors orthogonal to `γ'` and to `∂t` (null `γ'`).
    Screen,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConjugateScanResult {
    pub crossings: Vec<f64>,
    /// `(r, det g(e_a, J_b))` at every sampled parameter.
    pub determinant: Vec<(f64, f64)>,
    pub basis: JacobiBasis,
    pub frame_size: usize,
    /// Largest deviation of `g(e_a, e_b)` from its initial value.
    pub frame_drift: f64,
    pub r_span: (f64, f64),
    /// `true` when the geodesic left the chart before the requested span end.
    pub span_limited: bool,
}

fn gram_schmidt(g: &DMatrix<f64>, candidates: Vec<Vec<f64>>, want: usize, keep_out: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<(Vec<f64>, f64)> = Vec::new();
    for mut u in candidates {
        for w in keep_out {
            let ww = bilinear(g, w, w);
            let c = bilinear(g, &u, w) / ww;
            for (a, b) in u.iter_mut().zip(w) {
                *a -= c * b;
            }
        }
        for (e, sign) in &basis {
            let c = bilinear(g, &u, e) * sign;
            for (a, b) in u.iter_mut().zip(e) {
                *a -= c * b;
            }
        }
        let nn = bilinear(g, &u, &u);
        let scale: f64 = u.iter().map(|x| x * x).sum::<f64>().max(1e-300);
        if nn.abs() <= 1e-8 * scale {
            continue;
        }
        let inv = 1.0 / nn.abs().sqrt();
        let e: Vec<f64> = u.iter().map(|x| x * inv).collect();
        basis.push((e, nn.signum()));
        if basis.len() == want {
            break;
        }
    }
    basis.into_iter().map(|(e, _)| e).collect()
}

/// Initial frame for the Jacobi scan at `event` with velocity `v0`.
pub fn jacobi_frame(g: &DMatrix<f64>, v0: &[f64], kind: CausalKind) -> Result<(JacobiBasis, Vec<Vec<f64>>)> {
    let n = v0.len();
    let unit = |i: usize| {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    };
    match kind {
        CausalKind::Null => {
            if n < 3 {
                return Err(Error::BadParam("null screen needs n ≥ 3".into()));
            }
            let mut spatial = v0.to_vec();
            spatial[0] = 0.0;
            if spatial.iter().all(|x| *x == 0.0) {
                return Err(Error::ZeroSpatialDirection);
            }
            let cands = (1..n).map(unit).collect();
            let frame = gram_schmidt(g, cands, n - 2, &[spatial, unit(0)]);
            if frame.len() != n - 2 {
                return Err(Error::BadParam("could not build a screen frame".into()));
            }
            Ok((JacobiBasis::Screen, frame))
        }
        _ => {
            let cands = (0..n).map(unit).collect();
            let frame = gram_schmidt(g, cands, n - 1, &[v0.to_vec()]);
            if frame.len() != n - 1 {
                return Err(Error::BadParam("could not build an orthogonal frame".into()));
            }
            Ok((JacobiBasis::OrthogonalComplement, frame))
        }
    }
}

fn det(m: DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    m.determinant()
}

/// Integrates `D²J/dr² + R(J, γ')γ' = 0` for `J_b(r0) = 0`, `DJ_b(r0) = e_b`
/// with a parallel-transported frame `e_a`, and records sign changes of
/// `det g(e_a, J_b)`.
pub fn jacobi_scan(st: &Spacetime, traj: &GeodesicTrajectory, opts: &GeodesicOptions) -> Result<ConjugateScanResult> {
    let n = st.dim();
    let r0 = traj.r_start();
    let r1 = traj.r_end();
    let (x0, v0) = (traj.samples[0].event.clone(), traj.samples[0].velocity.clone());
    let g0 = st.metric_at(&x0)?;
    let (basis, frame) = jacobi_frame(&g0, &v0, traj.kind)?;
    let m = frame.len();
    let gram0 = DMatrix::from_fn(m, m, |a, b| bilinear(&g0, &frame[a], &frame[b]));

    // layout: x, v, e_a, J_a, P_a (P = DJ/dr)
    let off_e = 2 * n;
    let off_j = off_e + m * n;
    let off_p = off_j + m * n;
    let mut y0 = vec![0.0; off_p + m * n];
    y0[..n].copy_from_slice(&x0);
    y0[n..2 * n].copy_from_slice(&v0);
    for a in 0..m {
        y0[off_e + a * n..off_e + (a + 1) * n].copy_from_slice(&frame[a]);
        y0[off_p + a * n..off_p + (a + 1) * n].copy_from_slice(&frame[a]);
    }

    let rhs = |_r: f64, y: &[f64], d: &mut [f64]| -> Result<()> {
        let x = &y[..n];
        let v = &y[n..2 * n];
        let jets = st.metric_jets_at(x)?;
        let geo = curvature_from_jets(x, &jets, Signature::Lorentzian)?;
        d[..n].copy_from_slice(v);
        for k in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += geo.gamma(k, i, j) * v[i] * v[j];
                }
            }
            d[n + k] = -acc;
        }
        // Γ^k_ij v^i (·)^j
        let conn = |w: &[f64], k: usize| -> f64 {
            let mut acc = 0.0;
            for i in 0..n {
                if v[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    acc += geo.gamma(k, i, j) * v[i] * w[j];
                }
            }
            acc
        };
        for a in 0..m {
            let e = &y[off_e + a * n..off_e + (a + 1) * n];
            let jv = &y[off_j + a * n..off_j + (a + 1) * n];
            let p = &y[off_p + a * n..off_p + (a + 1) * n];
            let rj = geo.riemann_apply(jv, v, v);
            for k in 0..n {
                d[off_e + a * n + k] = -conn(e, k);
                d[off_j + a * n + k] = p[k] - conn(jv, k);
                d[off_p + a * n + k] = -rj[k] - conn(p, k);
            }
        }
        Ok(())
    };
    let sol = integrate(rhs, r0, &y0, r1, &[], |_, y| st.contains(&y[..n]), &opts.ode())?;
    let span_limited = traj.exit.is_some() || matches!(sol.stop, Stop::Exited { .. });

    let det_at = |y: &[f64]| -> Result<f64> {
        let g = st.metric_at(&y[..n])?;
        let e = |a: usize| &y[off_e + a * n..off_e + (a + 1) * n];
        let jv = |b: usize| &y[off_j + b * n..off_j + (b + 1) * n];
        Ok(det(DMatrix::from_fn(m, m, |a, b| bilinear(&g, e(a), jv(b)))))
    };

    let mut trace: Vec<(f64, f64)> = Vec::new();
    let mut frame_drift: f64 = 0.0;
    let sub = 4;
    let dense = |r: f64| sol.eval(r);
    for step in &sol.steps {
        for q in 1..=sub {
            let r = step.t0 + step.h * q as f64 / sub as f64;
            if (r - sol.t_end) * (r1 - r0).signum() > 0.0 {
                continue;
            }
            let y = step.eval(r);
            if !st.contains(&y[..n]) {
                continue;
            }
            trace.push((r, det_at(&y)?));
            if q == sub {
                let g = st.metric_at(&y[..n])?;
                let e = |a: usize| &y[off_e + a * n..off_e + (a + 1) * n];
                for a in 0..m {
                    for b in 0..m {
                        frame_drift = frame_drift.max((bilinear(&g, e(a), e(b)) - gram0[(a, b)]).abs());
                    }
                }
            }
        }
    }
    let max_abs = trace.iter().map(|(_, d)| d.abs()).fold(0.0, f64::max);
    let mut crossings = Vec::new();
    for w in trace.windows(2) {
        let ((ra, da), (rb, db)) = (w[0], w[1]);
        if da == 0.0 || da.signum() == db.signum() {
            continue;
        }
        let (mut a, mut b, mut fa) = (ra, rb, da);
        while (b - a).abs() > 1e-10 {
            let mid = 0.5 * (a + b);
            let y = dense(mid).expect("inside the integrated range");
            let fm = det_at(&y)?;
            if fm == 0.0 {
                a = mid;
                b = mid;
                break;
            }
            if fm.signum() == fa.signum() {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        let root = 0.5 * (a + b);
        let y = dense(root).expect("inside the integrated range");
        let residual = det_at(&y)?.abs();
        if residual <= 1e-8 * max_abs.max(1e-300) || (b - a).abs() <= 1e-10 {
            crossings.push(root);
        }
    }
    Ok(ConjugateScanResult {
        crossings,
        determinant: trace,
        basis,
        frame_size: m,
        frame_drift,
        r_span: (r0, sol.t_end),
        span_limited,
    })
}

const GL3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// `Ric(γ'(r), γ'(r))` at a parameter value of the trajectory.
pub fn ricci_along(st: &Spacetime, traj: &GeodesicTrajectory, r: f64) -> Result<f64> {
    let (x, v) = traj.state_at(r).ok_or(Error::OutOfInterval(r))?;
    let geo = st.lorentz_geometry_at(&x)?;
    Ok(geo.ricci_form(&v, &v))
}

/// `∫ Ric(γ', γ') dr` with three-point Gauss–Legendre on every step of the
/// dense output (exact for the quintic interpolant's degree).
pub fn ricci_line_integral(st: &Spacetime, traj: &GeodesicTrajectory) -> Result<f64> {
    let mut total = 0.0;
    for step in &traj.solution.steps {
        let (a, b) = (step.t0, step.t0 + step.h);
        let b = if (b - traj.r_end()) * step.h.signum() > 0.0 { traj.r_end() } else { b };
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (node, w) in GL3 {
            total += w * half * ricci_along(st, traj, mid + half * node)?;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiameterBound {
    /// `min Δf / f` over the grid.
    pub c: f64,
    /// `π √((n−1)/c)` when `c > tol`.
    pub bound: Option<f64>,
    pub points: usize,
}

pub fn diameter_bound(st: &Spacetime, grid: &GridSpec, tol: f64) -> Result<DiameterBound> {
    if st.kind() != SpacetimeKind::Static {
        return Err(Error::WrongKind);
    }
    let events = st.sample_events(grid)?;
    let mut c = f64::INFINITY;
    for e in &events {
        let b = st.base_at(e)?;
        c = c.min(b.calculus.laplacian / b.calculus.value);
    }
    let n = st.dim() as f64;
    let bound = (c > tol).then(|| std::f64::consts::PI * ((n - 1.0) / c).sqrt());
    Ok(DiameterBound {
        c,
        bound,
        points: events.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riemann::ChartManifold;

    fn euclid(s: usize, half: f64, params: &[(&str, f64)]) -> ChartManifold {
        let names: Vec<String> = (1..=s).map(|i| format!("x{i}")).collect();
        let coords: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let metric: Vec<Vec<String>> = (0..s)
            .map(|i| (i..s).map(|j| if i == j { "1".into() } else { "0".into() }).collect())
            .collect();
        ChartManifold::from_strings(&coords, vec![(-half, half); s], &metric, &[], params).unwrap()
    }

    fn minkowski() -> Spacetime {
        Spacetime::new_static(euclid(3, 10.0, &[]), "1", (f64::NEG_INFINITY, f64::INFINITY)).unwrap()
    }

    fn sphere_static() -> Spacetime {
        let base = ChartManifold::from_strings(
            &["th", "ph"],
            vec![(0.3, std::f64::consts::PI - 0.3), (-std::f64::consts::PI, std::f64::consts::PI)],
            &[vec!["1".into(), "0".into()], vec!["sin(th)^2".into()]],
            &[],
            &[],
        )
        .unwrap();
        Spacetime::new_static(base, "1", (f64::NEG_INFINITY, f64::INFINITY)).unwrap()
    }

    #[test]
    fn minkowski_geodesic_is_straight() {
        let st = minkowski();
        let traj = integrate_geodesic(&st, &[0.0, 0.0, 0.0, 0.0], &[2.0, 0.3, -0.2, 0.1], (0.0, 5.0), &Default::default()).unwrap();
        let last = traj.samples.last().unwrap();
        assert!((last.event[1] - 1.5).abs() < 1e-12);
        assert!(traj.norm_drift() < 1e-12);
        assert_eq!(traj.kind, CausalKind::Timelike);
        assert_eq!(ricci_line_integral(&st, &traj).unwrap(), 0.0);
    }

    #[test]
    fn boundary_exit_is_recorded() {
        let st = minkowski();
        let traj = integrate_geodesic(&st, &[0.0, 0.0, 0.0, 0.0], &[2.0, 1.0, 0.0, 0.0], (0.0, 50.0), &Default::default()).unwrap();
        let r = traj.exit.unwrap();
        assert!((r - 10.0).abs() < 1e-9);
        assert!(matches!(traj.require_complete(), Err(Error::BoundaryExit { .. })));
    }

    #[test]
    fn sphere_great_circle_conjugate_point() {
        let st = sphere_static();
        let traj = integrate_geodesic(&st, &[0.0, std::f64::consts::FRAC_PI_2, -3.0], &[0.0, 0.0, 1.0], (0.0, 5.5), &Default::default()).unwrap();
        assert!(traj.exit.is_none());
        assert!(traj.state_at(2.0 * std::f64::consts::PI).is_none());
        let scan = jacobi_scan(&st, &traj, &Default::default()).unwrap();
        assert_eq!(scan.frame_size, 2);
        assert_eq!(scan.crossings.len(), 1);
        assert!((scan.crossings[0] - std::f64::consts::PI).abs() < 1e-4);
        // det = −r sin r
        let (r, d) = scan.determinant[scan.determinant.len() / 3];
        assert!((d + r * r.sin()).abs() < 1e-6);
    }

    #[test]
    fn minkowski_has_no_conjugate_points() {
        let st = minkowski();
        let traj = integrate_geodesic(&st, &[0.0, 0.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0], (0.0, 100.0), &Default::default()).unwrap();
        let scan = jacobi_scan(&st, &traj, &Default::default()).unwrap();
        assert!(scan.crossings.is_empty());
        assert!(scan.determinant.iter().all(|(r, d)| (d - r.powi(3)).abs() <= 1e-8 * (1.0 + r.powi(3))));
    }

    #[test]
    fn null_frame_is_a_screen() {
        let st = minkowski();
        let g = st.metric_at(&[0.0, 0.0, 0.0, 0.0]).unwrap();
        let (basis, frame) = jacobi_frame(&g, &[1.0, 1.0, 0.0, 0.0], CausalKind::Null).unwrap();
        assert_eq!(basis, JacobiBasis::Screen);
        assert_eq!(frame.len(), 2);
        for e in &frame {
            assert!(bilinear(&g, e, &[1.0, 1.0, 0.0, 0.0]).abs() < 1e-14);
            assert!((bilinear(&g, e, e) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diameter_bound_trivial_for_constant_warp() {
        let st = minkowski();
        let d = diameter_bound(&st, &GridSpec::closed(3), 1e-9).unwrap();
        assert_eq!(d.c, 0.0);
        assert!(d.bound.is_none());
    }
}
