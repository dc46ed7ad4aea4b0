//! Lorentzian warped products: standard static `I ×_f F` with
//! `g = −f² dt² ⊕ g_F`, and GRW `I ×_b F` with `g = −dt² ⊕ b² g_F`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::curvature::{bilinear, curvature_from_jets, LorentzGeometryAt, Signature};
use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::grid::GridSpec;
use crate::jet::Jet2;
use crate::riemann::{base_field_at, g_trace, BaseFieldAt, ChartManifold};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpacetimeKind {
    Static,
    Grw,
}

#[derive(Debug, Clone)]
pub struct Spacetime {
    kind: SpacetimeKind,
    interval: (f64, f64),
    base: ChartManifold,
    warp: Expr,
    warp_text: String,
    params: Vec<f64>,
    t_window: Option<(f64, f64)>,
}

/// Both sides of the block Ricci formula of a static space-time.
#[derive(Debug, Clone)]
pub struct WarpedRicci {
    /// `Ric_00 = fΔf`, `Ric_ij = Ric_F − H^f / f`.
    pub block: DMatrix<f64>,
    /// `−(1/f) L*f(V,V) − (1/f) Δf g`.
    pub adjoint_form: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct StressEnergyAt {
    pub event: Vec<f64>,
    /// `T = (Ric − ½τ g) / 8π`.
    pub t: DMatrix<f64>,
    pub trace_t: f64,
    /// Static only: `8πT = −(1/f) L*f(V,V) − ½ τ_F g`, divided by `8π`.
    pub warped: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CausalKind {
    Timelike,
    Null,
    Spacelike,
}

impl Spacetime {
    /// `I ×_f F`; `warp` is an expression in the base coordinates and parameters.
    /// It is also registered on the base as the field `"f"`.
    pub fn new_static(mut base: ChartManifold, warp: &str, interval: (f64, f64)) -> Result<Self> {
        check_interval(interval)?;
        base.add_field("f", warp)?;
        let expr = base.field("f")?.clone();
        let params = base.default_params().to_vec();
        Ok(Spacetime {
            kind: SpacetimeKind::Static,
            interval,
            base,
            warp: expr,
            warp_text: warp.to_string(),
            params,
            t_window: None,
        })
    }

    /// `I ×_b F`; `warp` is an expression in `t` and the base parameters.
    /// `t_window` is the finite range of `t` used when sampling events.
    pub fn new_grw(base: ChartManifold, warp: &str, interval: (f64, f64), t_window: (f64, f64)) -> Result<Self> {
        check_interval(interval)?;
        if !(t_window.0 < t_window.1 && t_window.0 >= interval.0 && t_window.1 <= interval.1) {
            return Err(Error::BadParam(format!(
                "time window {t_window:?} must lie inside the interval {interval:?}"
            )));
        }
        if base.coords().iter().any(|c| c == "t") {
            return Err(Error::NameClash("t".into()));
        }
        let params: Vec<&str> = base.param_names().iter().map(|s| s.as_str()).collect();
        let expr = parse(warp, &["t"], &params)?;
        let defaults = base.default_params().to_vec();
        Ok(Spacetime {
            kind: SpacetimeKind::Grw,
            interval,
            base,
            warp: expr,
            warp_text: warp.to_string(),
            params: defaults,
            t_window: Some(t_window),
        })
    }

    /// Override parameter values by name.
    pub fn with_params(mut self, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        self.params = self.base.bind_params(overrides)?;
        Ok(self)
    }

    pub fn kind(&self) -> SpacetimeKind {
        self.kind
    }
    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }
    pub fn base(&self) -> &ChartManifold {
        &self.base
    }
    pub fn params(&self) -> &[f64] {
        &self.params
    }
    pub fn warp(&self) -> &Expr {
        &self.warp
    }
    pub fn warp_text(&self) -> &str {
        &self.warp_text
    }
    pub fn t_window(&self) -> Option<(f64, f64)> {
        self.t_window
    }
    /// `n = 1 + s`.
    pub fn dim(&self) -> usize {
        1 + self.base.dim()
    }

    pub fn param_map(&self) -> BTreeMap<String, f64> {
        self.base.param_names().iter().cloned().zip(self.params.iter().copied()).collect()
    }

    fn require_static(&self) -> Result<()> {
        if self.kind != SpacetimeKind::Static {
            return Err(Error::WrongKind);
        }
        Ok(())
    }

    /// Reference time for events of the t-independent static metric.
    pub fn reference_time(&self) -> f64 {
        let (a, b) = self.interval;
        if a < 0.0 && b > 0.0 {
            0.0
        } else if a.is_finite() && b.is_finite() {
            0.5 * (a + b)
        } else if a.is_finite() {
            a + 1.0
        } else {
            b - 1.0
        }
    }

    /// Open space-time domain check for an event `(t, x)`.
    pub fn contains(&self, event: &[f64]) -> bool {
        event.len() == self.dim()
            && event[0] > self.interval.0
            && event[0] < self.interval.1
            && self.base.domain().contains(&event[1..])
    }

    /// Warping value: `f(x)` (static) or `b(t)` (GRW).
    pub fn warp_value(&self, event: &[f64]) -> Result<f64> {
        match self.kind {
            SpacetimeKind::Static => self.warp.eval(&event[1..], &self.params),
            SpacetimeKind::Grw => self.warp.eval(&event[..1], &self.params),
        }
    }

    fn positive_warp_jet(&self, event: &[f64], nvars: usize) -> Result<Jet2> {
        let jet = match self.kind {
            SpacetimeKind::Static => self.warp.eval_jet2_in(&event[1..], &self.params, 1, nvars)?,
            SpacetimeKind::Grw => self.warp.eval_jet2_in(&event[..1], &self.params, 0, nvars)?,
        };
        if !(jet.value > 0.0) {
            return Err(Error::InvalidWarp(format!("warping function is {} at {:?}", jet.value, event)));
        }
        Ok(jet)
    }

    /// Metric component jets of the full `(1+s)`-dimensional chart.
    fn metric_jets(&self, event: &[f64]) -> Result<Vec<Jet2>> {
        let n = self.dim();
        let s = n - 1;
        if event.len() != n {
            return Err(Error::BadParam(format!("event has {} components, expected {n}", event.len())));
        }
        let w = self.positive_warp_jet(event, n)?;
        let base = self.base.metric_jets_in(&event[1..], &self.params, 1, n)?;
        let mut jets = vec![Jet2::constant(0.0, n); n * n];
        match self.kind {
            SpacetimeKind::Static => {
                jets[0] = -&(&w * &w);
                for i in 0..s {
                    for j in 0..s {
                        jets[(i + 1) * n + (j + 1)] = base[i * s + j].clone();
                    }
                }
            }
            SpacetimeKind::Grw => {
                jets[0] = Jet2::constant(-1.0, n);
                let b2 = &w * &w;
                for i in 0..s {
                    for j in 0..s {
                        jets[(i + 1) * n + (j + 1)] = &b2 * &base[i * s + j];
                    }
                }
            }
        }
        Ok(jets)
    }

    pub fn metric_at(&self, event: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let jets = self.metric_jets(event)?;
        Ok(DMatrix::from_fn(n, n, |i, j| jets[i * n + j].value))
    }

    /// Metric jets in `n` variables for callers that only need Christoffels.
    pub(crate) fn metric_jets_at(&self, event: &[f64]) -> Result<Vec<Jet2>> {
        self.metric_jets(event)
    }

    /// Full curvature from the product chart.
    pub fn lorentz_geometry_at(&self, event: &[f64]) -> Result<LorentzGeometryAt> {
        let jets = self.metric_jets(event)?;
        curvature_from_jets(event, &jets, Signature::Lorentzian)
    }

    /// Base data (`Ric_F`, `H^f`, `Δf`, `Q^f`, `L*f`) at the spatial part of `event`.
    pub fn base_at(&self, event: &[f64]) -> Result<BaseFieldAt> {
        self.require_static()?;
        let b = base_field_at(&self.base, "f", &event[1..], &self.params)?;
        if !(b.calculus.value > 0.0) {
            return Err(Error::InvalidWarp(format!("f = {} at {:?}", b.calculus.value, &event[1..])));
        }
        Ok(b)
    }

    pub fn ricci_warped_at(&self, event: &[f64]) -> Result<WarpedRicci> {
        self.require_static()?;
        let b = self.base_at(event)?;
        Ok(warped_ricci_from_base(&b))
    }

    /// `τ = τ_F − 2Δf/f`.
    pub fn scalar_warped_at(&self, event: &[f64]) -> Result<f64> {
        self.require_static()?;
        let b = self.base_at(event)?;
        Ok(b.geometry.scalar - 2.0 * b.calculus.laplacian / b.calculus.value)
    }

    pub fn stress_energy_at(&self, event: &[f64]) -> Result<StressEnergyAt> {
        let geo = self.lorentz_geometry_at(event)?;
        let warped = match self.kind {
            SpacetimeKind::Static => Some(warped_stress_energy(&self.base_at(event)?)),
            SpacetimeKind::Grw => None,
        };
        Ok(stress_energy_from(&geo, warped))
    }

    /// Classify `w` by the sign of `g(w, w)`, with a null band
    /// `|g(w,w)| ≤ tol·‖w‖²` in the Euclidean component norm.
    pub fn causal_classify(&self, event: &[f64], w: &[f64], tol: f64) -> Result<CausalKind> {
        let g = self.metric_at(event)?;
        Ok(classify_with(&g, w, tol))
    }

    /// `w = ±N⁻¹ √(h(v,v)) ∂t + v` with lapse `N` and spatial metric `h`
    /// (`N = f`, `h = g_F` for static; `N = 1`, `h = b² g_F` for GRW).
    pub fn null_initial(&self, event: &[f64], v: &[f64], future: bool) -> Result<Vec<f64>> {
        self.causal_vector(event, v, if future { 1.0 } else { -1.0 })
    }

    /// `w = r N⁻¹ √(h(v,v)) ∂t + v`; null for `|r| = 1`, timelike for `|r| > 1`.
    pub fn causal_vector(&self, event: &[f64], v: &[f64], r: f64) -> Result<Vec<f64>> {
        let g = self.metric_at(event)?;
        causal_vector_with(&g, v, r)
    }

    /// Events sampled for audits: static uses the reference time over the base
    /// grid; GRW takes the product of `t_window` nodes with the base grid.
    pub fn sample_events(&self, grid: &GridSpec) -> Result<Vec<Vec<f64>>> {
        let spatial = grid.points(self.base.domain())?;
        let times = match self.kind {
            SpacetimeKind::Static => vec![self.reference_time()],
            SpacetimeKind::Grw => {
                let (a, b) = self.t_window.expect("GRW always has a time window");
                let d = crate::grid::Domain::new(vec![(a, b)]);
                grid.points(&d)?.into_iter().map(|p| p[0]).collect()
            }
        };
        let mut out = Vec::with_capacity(times.len() * spatial.len());
        for t in &times {
            for x in &spatial {
                let mut e = Vec::with_capacity(self.dim());
                e.push(*t);
                e.extend_from_slice(x);
                out.push(e);
            }
        }
        Ok(out)
    }

    /// Checks the base metric is SPD and the warp positive on the sampling grid.
    pub fn validate(&self, grid: &GridSpec) -> Result<usize> {
        self.base.validate(grid, &self.params)?;
        let events = self.sample_events(grid)?;
        for e in &events {
            let w = self.warp_value(e)?;
            if !(w > 0.0) {
                return Err(Error::InvalidWarp(format!("warping function is {w} at {e:?}")));
            }
        }
        Ok(events.len())
    }
}

fn check_interval((a, b): (f64, f64)) -> Result<()> {
    if a.is_nan() || b.is_nan() || !(a < b) {
        return Err(Error::BadParam(format!("time interval ({a}, {b}) is empty")));
    }
    Ok(())
}

pub(crate) fn warped_ricci_from_base(b: &BaseFieldAt) -> WarpedRicci {
    let s = b.geometry.dim();
    let n = s + 1;
    let f = b.calculus.value;
    let lap = b.calculus.laplacian;
    let ric_f = (&b.geometry.ricci + b.geometry.ricci.transpose()) * 0.5;
    let mut block = DMatrix::zeros(n, n);
    block[(0, 0)] = f * lap;
    for i in 0..s {
        for j in 0..s {
            block[(i + 1, j + 1)] = ric_f[(i, j)] - b.calculus.hessian[(i, j)] / f;
        }
    }
    let mut adjoint_form = DMatrix::zeros(n, n);
    adjoint_form[(0, 0)] = -(lap / f) * (-f * f);
    for i in 0..s {
        for j in 0..s {
            adjoint_form[(i + 1, j + 1)] = -b.lstar[(i, j)] / f - (lap / f) * b.geometry.g[(i, j)];
        }
    }
    WarpedRicci { block, adjoint_form }
}

pub(crate) fn warped_stress_energy(b: &BaseFieldAt) -> DMatrix<f64> {
    let s = b.geometry.dim();
    let n = s + 1;
    let f = b.calculus.value;
    let tau_f = b.geometry.scalar;
    let mut t = DMatrix::zeros(n, n);
    t[(0, 0)] = -0.5 * tau_f * (-f * f);
    for i in 0..s {
        for j in 0..s {
            t[(i + 1, j + 1)] = -b.lstar[(i, j)] / f - 0.5 * tau_f * b.geometry.g[(i, j)];
        }
    }
    t / (8.0 * PI)
}

pub(crate) fn stress_energy_from(geo: &LorentzGeometryAt, warped: Option<DMatrix<f64>>) -> StressEnergyAt {
    let ric = (&geo.ricci + geo.ricci.transpose()) * 0.5;
    let t = (ric - &geo.g * (0.5 * geo.scalar)) / (8.0 * PI);
    let trace_t = g_trace(&geo.g_inv, &t);
    StressEnergyAt {
        event: geo.point.clone(),
        t,
        trace_t,
        warped,
    }
}

pub(crate) fn classify_with(g: &DMatrix<f64>, w: &[f64], tol: f64) -> CausalKind {
    let q = bilinear(g, w, w);
    let norm2: f64 = w.iter().map(|c| c * c).sum();
    if q.abs() <= tol * norm2 {
        CausalKind::Null
    } else if q < 0.0 {
        CausalKind::Timelike
    } else {
        CausalKind::Spacelike
    }
}

pub(crate) fn causal_vector_with(g: &DMatrix<f64>, v: &[f64], r: f64) -> Result<Vec<f64>> {
    let n = g.nrows();
    if v.len() != n - 1 {
        return Err(Error::BadParam(format!("spatial direction has {} components, expected {}", v.len(), n - 1)));
    }
    let mut hvv = 0.0;
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            hvv += g[(i + 1, j + 1)] * v[i] * v[j];
        }
    }
    if !(hvv > 0.0) {
        return Err(Error::ZeroSpatialDirection);
    }
    let lapse = (-g[(0, 0)]).sqrt();
    let mut w = Vec::with_capacity(n);
    w.push(r * hvv.sqrt() / lapse);
    w.extend_from_slice(v);
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclid(s: usize, bounds: (f64, f64), params: &[(&str, f64)]) -> ChartManifold {
        let names: Vec<String> = (1..=s).map(|i| format!("x{i}")).collect();
        let coords: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let metric: Vec<Vec<String>> = (0..s)
            .map(|i| (i..s).map(|j| if i == j { "1".into() } else { "0".into() }).collect())
            .collect();
        ChartManifold::from_strings(&coords, vec![bounds; s], &metric, &[], params).unwrap()
    }

    fn paraboloid(s: usize) -> Spacetime {
        Spacetime::new_static(
            euclid(s, (-2.0, 2.0), &[("eps", 1.0)]),
            "0.5*(x1^2+x2^2) + eps",
            (f64::NEG_INFINITY, f64::INFINITY),
        )
        .unwrap()
    }

    #[test]
    fn minkowski_is_flat() {
        let st = Spacetime::new_static(euclid(3, (-1.0, 1.0), &[]), "1", (-10.0, 10.0)).unwrap();
        let g = st.lorentz_geometry_at(&[0.0, 0.1, 0.2, 0.3]).unwrap();
        assert!(g.ricci.iter().all(|v| *v == 0.0));
        assert_eq!(g.scalar, 0.0);
        let t = st.stress_energy_at(&[0.0, 0.1, 0.2, 0.3]).unwrap();
        assert!(t.t.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn paraboloid_ricci_tt_is_f_laplacian() {
        let st = paraboloid(2);
        let e = [0.0, 0.6, -0.3];
        let g = st.lorentz_geometry_at(&e).unwrap();
        let f = 0.5 * (0.36 + 0.09) + 1.0;
        assert!((g.ricci[(0, 0)] - 2.0 * f).abs() < 1e-8);
        let w = st.ricci_warped_at(&e).unwrap();
        assert!((&w.block - &w.adjoint_form).amax() < 1e-12);
        assert!((&w.block - &g.ricci).amax() < 1e-7);
    }

    #[test]
    fn paraboloid_scalar_curvature() {
        let st = paraboloid(2);
        // |x|² = 2 ⇒ f = 2, Δf = 2, τ = −2
        let e = [0.0, 1.0, 1.0];
        assert!((st.scalar_warped_at(&e).unwrap() + 2.0).abs() < 1e-12);
        assert!((st.lorentz_geometry_at(&e).unwrap().scalar + 2.0).abs() < 1e-7);
    }

    #[test]
    fn stress_energy_forms_agree_and_trace_identity() {
        let st = paraboloid(2);
        let e = [0.0, 0.4, 0.9];
        let se = st.stress_energy_at(&e).unwrap();
        let warped = se.warped.clone().unwrap();
        assert!((&se.t - &warped).amax() < 1e-9);
        let geo = st.lorentz_geometry_at(&e).unwrap();
        let n = 3.0;
        assert!((8.0 * PI * se.trace_t - (2.0 - n) / 2.0 * geo.scalar).abs() < 1e-9);
        // 8πT(v,v) = (s−1)|v|²/f for spatial v
        let f = 0.5 * (0.16 + 0.81) + 1.0;
        assert!((8.0 * PI * se.t[(1, 1)] - 1.0 / f).abs() < 1e-9);
    }

    #[test]
    fn null_initial_and_classification() {
        let st = paraboloid(2);
        let e = [0.0, 1.0, 1.0];
        let w = st.null_initial(&e, &[0.6, 0.8], true).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-15);
        assert_eq!(st.causal_classify(&e, &w, 1e-12).unwrap(), CausalKind::Null);
        assert_eq!(st.causal_classify(&e, &[1.0, 0.0, 0.0], 1e-12).unwrap(), CausalKind::Timelike);
        assert_eq!(st.causal_classify(&e, &[0.0, 1.0, 0.0], 1e-12).unwrap(), CausalKind::Spacelike);
        assert!(matches!(st.null_initial(&e, &[0.0, 0.0], true), Err(Error::ZeroSpatialDirection)));
    }

    #[test]
    fn grw_requires_kind_for_warped_formulas() {
        let st = Spacetime::new_grw(euclid(3, (-1.0, 1.0), &[]), "t^(2/3)", (0.0, f64::INFINITY), (0.5, 4.0)).unwrap();
        assert!(matches!(st.ricci_warped_at(&[1.0, 0.0, 0.0, 0.0]), Err(Error::WrongKind)));
        let w = st.null_initial(&[8.0, 0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], true).unwrap();
        assert!((w[0] - 4.0).abs() < 1e-12);
        let g = st.metric_at(&[8.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(bilinear(&g, &w, &w).abs() < 1e-12);
    }

    #[test]
    fn einstein_de_sitter_scalar_curvature() {
        // b = t^{2/3}: a''/a = −2/(9t²), (a'/a)² = 4/(9t²), τ = 6(a''/a + (a'/a)²) = 4/(3t²)
        let st = Spacetime::new_grw(euclid(3, (-1.0, 1.0), &[]), "t^(2/3)", (0.0, f64::INFINITY), (0.5, 4.0)).unwrap();
        let g = st.lorentz_geometry_at(&[1.0, 0.1, 0.0, -0.2]).unwrap();
        assert!((g.scalar - 4.0 / 3.0).abs() < 1e-10);
        // dust: T = ρ dt², ρ = 1/(6π t²)
        let se = st.stress_energy_at(&[2.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((se.t[(0, 0)] - 1.0 / (6.0 * PI * 4.0)).abs() < 1e-12);
        assert!(se.t[(1, 1)].abs() < 1e-12);
    }

    #[test]
    fn nonpositive_warp_is_rejected() {
        let st = Spacetime::new_static(euclid(1, (-2.0, 2.0), &[]), "x1", (-1.0, 1.0)).unwrap();
        assert!(matches!(st.lorentz_geometry_at(&[0.0, -1.0]), Err(Error::InvalidWarp(_))));
        assert!(st.validate(&GridSpec::closed(5)).is_err());
    }
}
