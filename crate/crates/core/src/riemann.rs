//! Riemannian geometry of the base `(F, g_F)` in a single coordinate chart:
//! curvature, Hessian and Laplacian of scalar fields, the tensors
//! `Q^f = Δf g − H^f` and `L*f = −f Ric − Δf g + H^f`, definiteness, and a
//! finite-difference divergence of `Q^f`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::curvature::{curvature_from_jets, GeometryAt, Signature};
use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::grid::{Domain, GridSpec};
use crate::jet::Jet2;

/// A coordinate chart with symbolic metric components and named scalar fields.
#[derive(Debug, Clone)]
pub struct ChartManifold {
    coords: Vec<String>,
    domain: Domain,
    /// Upper triangle, row-major: (0,0), (0,1), …, (0,s-1), (1,1), …
    metric: Vec<Expr>,
    fields: BTreeMap<String, Expr>,
    param_names: Vec<String>,
    param_defaults: Vec<f64>,
}

fn row_start(s: usize, i: usize) -> usize {
    (0..i).map(|r| s - r).sum()
}

impl ChartManifold {
    /// Build a chart from expression strings.
    ///
    /// `metric` may be given as the upper triangle (row `i` holds `s − i`
    /// entries) or as a full symmetric matrix.
    pub fn from_strings(
        coords: &[&str],
        bounds: Vec<(f64, f64)>,
        metric: &[Vec<String>],
        fields: &[(&str, &str)],
        params: &[(&str, f64)],
    ) -> Result<Self> {
        let s = coords.len();
        if s == 0 {
            return Err(Error::BadParam("a chart needs at least one coordinate".into()));
        }
        if bounds.len() != s {
            return Err(Error::BadParam(format!("domain has {} intervals for {s} coordinates", bounds.len())));
        }
        for (lo, hi) in &bounds {
            if !(lo < hi) {
                return Err(Error::BadParam(format!("empty coordinate interval ({lo}, {hi})")));
            }
        }
        let names: Vec<&str> = params.iter().map(|(n, _)| *n).collect();
        if metric.len() != s {
            return Err(Error::BadParam(format!("metric has {} rows, expected {s}", metric.len())));
        }
        let full = metric.iter().all(|row| row.len() == s);
        let upper = metric.iter().enumerate().all(|(i, row)| row.len() == s - i);
        if !full && !upper {
            return Err(Error::BadParam("metric rows must form an upper triangle or a full matrix".into()));
        }
        let mut comps = Vec::with_capacity(s * (s + 1) / 2);
        for i in 0..s {
            for j in i..s {
                let text = if full { &metric[i][j] } else { &metric[i][j - i] };
                if full && s > 1 && i != j {
                    let other = parse(&metric[j][i], coords, &names)?;
                    let this = parse(text, coords, &names)?;
                    if other.to_string() != this.to_string() {
                        return Err(Error::NotSymmetric(f64::NAN));
                    }
                }
                comps.push(parse(text, coords, &names)?);
            }
        }
        let mut parsed_fields = BTreeMap::new();
        for (name, text) in fields {
            parsed_fields.insert(name.to_string(), parse(text, coords, &names)?);
        }
        Ok(ChartManifold {
            coords: coords.iter().map(|c| c.to_string()).collect(),
            domain: Domain::new(bounds),
            metric: comps,
            fields: parsed_fields,
            param_names: names.iter().map(|n| n.to_string()).collect(),
            param_defaults: params.iter().map(|(_, v)| *v).collect(),
        })
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn add_field(&mut self, name: &str, text: &str) -> Result<()> {
        let coords: Vec<&str> = self.coords.iter().map(|s| s.as_str()).collect();
        let params: Vec<&str> = self.param_names.iter().map(|s| s.as_str()).collect();
        let e = parse(text, &coords, &params)?;
        self.fields.insert(name.to_string(), e);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    pub fn default_params(&self) -> &[f64] {
        &self.param_defaults
    }

    pub fn field(&self, name: &str) -> Result<&Expr> {
        self.fields.get(name).ok_or_else(|| Error::UnknownField(name.to_string()))
    }

    pub fn field_names(&self) -> impl Iterator<Item = &str> {
        self.fields.keys().map(|s| s.as_str())
    }

    /// Metric component expression `g_ij`.
    pub fn metric_component(&self, i: usize, j: usize) -> &Expr {
        let s = self.dim();
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.metric[row_start(s, i) + (j - i)]
    }

    /// Positional parameter vector: defaults overridden by `overrides`.
    pub fn bind_params(&self, overrides: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
        for k in overrides.keys() {
            if !self.param_names.contains(k) {
                return Err(Error::BadParam(format!("unknown parameter `{k}`")));
            }
        }
        Ok(self
            .param_names
            .iter()
            .zip(&self.param_defaults)
            .map(|(n, d)| overrides.get(n).copied().unwrap_or(*d))
            .collect())
    }

    /// Metric component jets embedded in an `nvars`-variable space at `offset`,
    /// as a full row-major `s × s` list.
    pub(crate) fn metric_jets_in(&self, x: &[f64], params: &[f64], offset: usize, nvars: usize) -> Result<Vec<Jet2>> {
        let s = self.dim();
        let mut upper = Vec::with_capacity(self.metric.len());
        for e in &self.metric {
            upper.push(e.eval_jet2_in(x, params, offset, nvars)?);
        }
        let mut full = Vec::with_capacity(s * s);
        for i in 0..s {
            for j in 0..s {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                full.push(upper[row_start(s, a) + (b - a)].clone());
            }
        }
        Ok(full)
    }

    pub fn metric_at(&self, x: &[f64], params: &[f64]) -> Result<DMatrix<f64>> {
        let s = self.dim();
        let mut g = DMatrix::zeros(s, s);
        for i in 0..s {
            for j in i..s {
                let v = self.metric_component(i, j).eval(x, params)?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }

    /// Checks that the metric is SPD at every node of `grid`.
    pub fn validate(&self, grid: &GridSpec, params: &[f64]) -> Result<usize> {
        let pts = grid.points(&self.domain)?;
        for p in &pts {
            let g = self.metric_at(p, params)?;
            crate::curvature::check_signature(&g, p, Signature::Riemannian)?;
        }
        Ok(pts.len())
    }
}

/// Hessian, gradient and Laplacian of a scalar field at a point.
#[derive(Debug, Clone)]
pub struct ScalarCalculusAt {
    pub point: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub hessian: DMatrix<f64>,
    pub laplacian: f64,
}

/// Curvature of `(F, g_F)` at `point`.
pub fn geometry_at(m: &ChartManifold, point: &[f64], params: &[f64]) -> Result<GeometryAt> {
    let s = m.dim();
    let jets = m.metric_jets_in(point, params, 0, s)?;
    curvature_from_jets(point, &jets, Signature::Riemannian)
}

/// Covariant Hessian `H_ij = ∂_i∂_j f − Γ^k_ij ∂_k f` and `Δf = g^{ij} H_ij`
/// computed against an already evaluated geometry.
pub fn scalar_calculus_with(geo: &GeometryAt, jet: &Jet2) -> ScalarCalculusAt {
    let s = geo.dim();
    let hessian = DMatrix::from_fn(s, s, |i, j| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        let mut h = jet.h(a, b);
        for k in 0..s {
            h -= geo.gamma(k, a, b) * jet.grad[k];
        }
        h
    });
    let mut laplacian = 0.0;
    for i in 0..s {
        for j in 0..s {
            laplacian += geo.g_inv[(i, j)] * hessian[(i, j)];
        }
    }
    ScalarCalculusAt {
        point: geo.point.clone(),
        value: jet.value,
        grad: jet.grad.clone(),
        hessian,
        laplacian,
    }
}

pub fn scalar_calculus_at(m: &ChartManifold, field: &str, point: &[f64], params: &[f64]) -> Result<ScalarCalculusAt> {
    let e = m.field(field)?;
    let geo = geometry_at(m, point, params)?;
    let jet = e.eval_jet2(point, params)?;
    Ok(scalar_calculus_with(&geo, &jet))
}

/// `Q^f = Δf g − H^f`.
pub fn q_tensor_with(geo: &GeometryAt, sc: &ScalarCalculusAt) -> DMatrix<f64> {
    &geo.g * sc.laplacian - &sc.hessian
}

/// `L*f = −f Ric − Δf g + H^f`.
pub fn lstar_with(geo: &GeometryAt, sc: &ScalarCalculusAt) -> DMatrix<f64> {
    -(&geo.ricci * sc.value) - &geo.g * sc.laplacian + &sc.hessian
}

pub fn q_tensor_at(m: &ChartManifold, field: &str, point: &[f64], params: &[f64]) -> Result<DMatrix<f64>> {
    let geo = geometry_at(m, point, params)?;
    let sc = scalar_calculus_with(&geo, &m.field(field)?.eval_jet2(point, params)?);
    Ok(q_tensor_with(&geo, &sc))
}

pub fn lstar_at(m: &ChartManifold, field: &str, point: &[f64], params: &[f64]) -> Result<DMatrix<f64>> {
    let geo = geometry_at(m, point, params)?;
    let sc = scalar_calculus_with(&geo, &m.field(field)?.eval_jet2(point, params)?);
    Ok(lstar_with(&geo, &sc))
}

/// Everything the auditor needs about the base at one point.
#[derive(Debug, Clone)]
pub struct BaseFieldAt {
    pub geometry: GeometryAt,
    pub calculus: ScalarCalculusAt,
    pub q: DMatrix<f64>,
    pub lstar: DMatrix<f64>,
}

pub fn base_field_at(m: &ChartManifold, field: &str, point: &[f64], params: &[f64]) -> Result<BaseFieldAt> {
    let geometry = geometry_at(m, point, params)?;
    let calculus = scalar_calculus_with(&geometry, &m.field(field)?.eval_jet2(point, params)?);
    let q = q_tensor_with(&geometry, &calculus);
    let lstar = lstar_with(&geometry, &calculus);
    Ok(BaseFieldAt {
        geometry,
        calculus,
        q,
        lstar,
    })
}

/// `g`-trace of a covariant 2-tensor.
pub fn g_trace(g_inv: &DMatrix<f64>, t: &DMatrix<f64>) -> f64 {
    g_inv.component_mul(t).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DefinitenessClass {
    PositiveDefinite,
    PositiveSemi,
    NegativeDefinite,
    NegativeSemi,
    Indefinite,
    Zero,
}

impl DefinitenessClass {
    pub fn is_psd(self) -> bool {
        matches!(self, Self::PositiveDefinite | Self::PositiveSemi | Self::Zero)
    }
    pub fn is_nsd(self) -> bool {
        matches!(self, Self::NegativeDefinite | Self::NegativeSemi | Self::Zero)
    }
    pub fn is_pd(self) -> bool {
        self == Self::PositiveDefinite
    }
    pub fn is_nd(self) -> bool {
        self == Self::NegativeDefinite
    }
    pub fn is_zero(self) -> bool {
        self == Self::Zero
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Definiteness {
    pub class: DefinitenessClass,
    pub eigenvalues: Vec<f64>,
    pub tolerance: f64,
}

fn inf_norm(t: &DMatrix<f64>) -> f64 {
    t.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Classify sorted eigenvalues: `|λ| ≤ tol·(1 + scale)` counts as zero.
pub fn classify_eigenvalues(eigenvalues: &[f64], tol: f64, scale: f64) -> DefinitenessClass {
    let zero_band = tol * (1.0 + scale);
    let pos = eigenvalues.iter().filter(|&&l| l > zero_band).count();
    let neg = eigenvalues.iter().filter(|&&l| l < -zero_band).count();
    let n = eigenvalues.len();
    match (pos, neg) {
        (0, 0) => DefinitenessClass::Zero,
        (p, 0) if p == n => DefinitenessClass::PositiveDefinite,
        (_, 0) => DefinitenessClass::PositiveSemi,
        (0, q) if q == n => DefinitenessClass::NegativeDefinite,
        (0, _) => DefinitenessClass::NegativeSemi,
        _ => DefinitenessClass::Indefinite,
    }
}

/// Sign classification of a symmetric matrix by its eigenvalues.
pub fn definiteness(t: &DMatrix<f64>, tol: f64) -> Result<Definiteness> {
    let norm = inf_norm(t);
    let asym = (t - t.transpose()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if asym > 1e-10 * (1.0 + norm) {
        return Err(Error::NotSymmetric(asym));
    }
    let sym = (t + t.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().cloned().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(Definiteness {
        class: classify_eigenvalues(&ev, tol, norm),
        eigenvalues: ev,
        tolerance: tol,
    })
}

/// Definiteness of the quadratic form `t` measured in a `g`-orthonormal frame,
/// so eigenvalues are intrinsic (`Q = λ g` reports `λ` in any chart).
pub fn definiteness_wrt(t: &DMatrix<f64>, g: &DMatrix<f64>, tol: f64) -> Result<Definiteness> {
    let chol = g.clone().cholesky().ok_or_else(|| Error::MetricNotSpd {
        point: Vec::new(),
        smallest: f64::NAN,
    })?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::MetricDegenerate(Vec::new()))?;
    let sym = (t + t.transpose()) * 0.5;
    let asym = (t - t.transpose()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if asym > 1e-10 * (1.0 + inf_norm(t)) {
        return Err(Error::NotSymmetric(asym));
    }
    let m = &l_inv * sym * l_inv.transpose();
    definiteness(&((&m + m.transpose()) * 0.5), tol)
}

fn fd_steps(point: &[f64], step: f64) -> Vec<f64> {
    point.iter().map(|x| step * (1.0 + x.abs())).collect()
}

/// `(div Q^f)_j = g^{ik} ∇_k Q_ij` with `∂_k Q` from central differences of
/// step `step·(1 + |x_k|)` and the Christoffel corrections evaluated exactly.
pub fn divergence_q_fd(m: &ChartManifold, field: &str, point: &[f64], params: &[f64], step: f64) -> Result<Vec<f64>> {
    let s = m.dim();
    let h = fd_steps(point, step);
    for k in 0..s {
        for sign in [-1.0, 1.0] {
            let mut p = point.to_vec();
            p[k] += sign * h[k];
            if !m.domain().contains(&p) {
                return Err(Error::Domain(format!("finite-difference stencil leaves the domain at {p:?}")));
            }
        }
    }
    let centre = base_field_at(m, field, point, params)?;
    let geo = &centre.geometry;
    let q = &centre.q;

    // dq[k] = ∂_k Q
    let mut dq = Vec::with_capacity(s);
    for (k, hk) in h.iter().enumerate() {
        let mut plus = point.to_vec();
        let mut minus = point.to_vec();
        plus[k] += hk;
        minus[k] -= hk;
        let qp = q_tensor_at(m, field, &plus, params)?;
        let qm = q_tensor_at(m, field, &minus, params)?;
        dq.push((qp - qm) / (2.0 * hk));
    }

    let mut out = vec![0.0; s];
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..s {
            for k in 0..s {
                let gik = geo.g_inv[(i, k)];
                if gik == 0.0 {
                    continue;
                }
                let mut cov = dq[k][(i, j)];
                for l in 0..s {
                    cov -= geo.gamma(l, k, i) * q[(l, j)] + geo.gamma(l, k, j) * q[(i, l)];
                }
                acc += gik * cov;
            }
        }
        *o = acc;
    }
    Ok(out)
}

/// The covector `Ric(∇f, ·)_j = Ric_jk g^{kl} ∂_l f`. Commuting covariant
/// derivatives gives `div Q^f = −Ric(∇f, ·)`, which vanishes on Ricci-flat
/// charts and for constant `f`.
pub fn ricci_of_gradient(m: &ChartManifold, field: &str, point: &[f64], params: &[f64]) -> Result<Vec<f64>> {
    let b = base_field_at(m, field, point, params)?;
    let s = m.dim();
    let g = &b.geometry;
    let up: Vec<f64> = (0..s).map(|k| (0..s).map(|l| g.g_inv[(k, l)] * b.calculus.grad[l]).sum()).collect();
    Ok((0..s).map(|j| (0..s).map(|k| g.ricci[(j, k)] * up[k]).sum()).collect())
}

/// Euclidean norm of `div Q^f` at step `step` and at `step / 2`.
pub fn divergence_q_richardson(m: &ChartManifold, field: &str, point: &[f64], params: &[f64], step: f64) -> Result<(f64, f64)> {
    let norm = |v: Vec<f64>| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let a = norm(divergence_q_fd(m, field, point, params, step)?);
    let b = norm(divergence_q_fd(m, field, point, params, 0.5 * step)?);
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclid(s: usize, field: &str) -> ChartManifold {
        let names: Vec<String> = (1..=s).map(|i| format!("x{i}")).collect();
        let coords: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let metric: Vec<Vec<String>> = (0..s)
            .map(|i| (i..s).map(|j| if i == j { "1".into() } else { "0".into() }).collect())
            .collect();
        ChartManifold::from_strings(&coords, vec![(-3.0, 3.0); s], &metric, &[("f", field)], &[("eps", 1.0)]).unwrap()
    }

    fn sphere() -> ChartManifold {
        ChartManifold::from_strings(
            &["th", "ph"],
            vec![(0.2, 2.9), (-3.0, 3.0)],
            &[vec!["1".into(), "0".into()], vec!["sin(th)^2".into()]],
            &[("one", "1")],
            &[],
        )
        .unwrap()
    }

    fn hyperbolic() -> ChartManifold {
        ChartManifold::from_strings(
            &["x", "y"],
            vec![(-2.0, 2.0), (0.5, 3.0)],
            &[vec!["1/y^2".into(), "0".into()], vec!["1/y^2".into()]],
            &[("f", "x^3 + x*y^2 + 2*y + 1")],
            &[],
        )
        .unwrap()
    }

    #[test]
    fn euclidean_is_flat() {
        let m = euclid(3, "1");
        let g = geometry_at(&m, &[0.3, -1.0, 2.0], &[1.0]).unwrap();
        assert!(g.christoffel.iter().all(|v| *v == 0.0));
        assert!(g.ricci.iter().all(|v| *v == 0.0));
        assert_eq!(g.scalar, 0.0);
    }

    #[test]
    fn sphere_has_unit_ricci() {
        let m = sphere();
        let g = geometry_at(&m, &[1.0, 0.4], &[]).unwrap();
        assert!((&g.ricci - &g.g).amax() < 1e-8);
        assert!((g.scalar - 2.0).abs() < 1e-8);
        assert!(g.bianchi_residual() < 1e-9);
        assert_eq!(g.gamma(1, 0, 1), g.gamma(1, 1, 0));
    }

    #[test]
    fn hyperbolic_plane_has_negative_ricci() {
        let m = hyperbolic();
        let g = geometry_at(&m, &[0.1, 2.0], &[]).unwrap();
        assert!((&g.ricci + &g.g).amax() < 1e-8);
        assert!((g.scalar + 2.0).abs() < 1e-8);
    }

    #[test]
    fn paraboloid_hessian_and_tensors() {
        let m = euclid(2, "0.5*(x1^2+x2^2) + eps");
        let p = [0.7, -0.2];
        let sc = scalar_calculus_at(&m, "f", &p, &[1.0]).unwrap();
        assert_eq!(sc.hessian, DMatrix::identity(2, 2));
        assert_eq!(sc.laplacian, 2.0);
        let q = q_tensor_at(&m, "f", &p, &[1.0]).unwrap();
        assert_eq!(q, DMatrix::identity(2, 2));
        let l = lstar_at(&m, "f", &p, &[1.0]).unwrap();
        assert_eq!(l, -DMatrix::identity(2, 2));
    }

    #[test]
    fn constant_field_has_vanishing_calculus() {
        let m = euclid(2, "3.5");
        let sc = scalar_calculus_at(&m, "f", &[0.1, 0.2], &[1.0]).unwrap();
        assert!(sc.hessian.iter().all(|v| *v == 0.0));
        assert_eq!(sc.laplacian, 0.0);
        assert!(q_tensor_at(&m, "f", &[0.1, 0.2], &[1.0]).unwrap().iter().all(|v| *v == 0.0));
        assert_eq!(
            divergence_q_fd(&m, "f", &[0.1, 0.2], &[1.0], 1e-4).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn concircular_quadrant_potential() {
        let m = euclid(2, "x1^2+x2^2+x1+x2+1");
        let sc = scalar_calculus_at(&m, "f", &[0.4, 1.3], &[1.0]).unwrap();
        assert_eq!(sc.hessian, DMatrix::identity(2, 2) * 2.0);
        assert_eq!(sc.laplacian, 4.0);
        let q = q_tensor_at(&m, "f", &[0.4, 1.3], &[1.0]).unwrap();
        assert_eq!(q, DMatrix::identity(2, 2) * 2.0);
    }

    #[test]
    fn lstar_of_unit_on_sphere_is_minus_ricci() {
        let m = sphere();
        let l = lstar_at(&m, "one", &[1.1, 0.0], &[]).unwrap();
        let g = m.metric_at(&[1.1, 0.0], &[]).unwrap();
        assert!((l + g).amax() < 1e-8);
    }

    #[test]
    fn ricci_flat_lstar_is_minus_q() {
        let m = euclid(3, "exp(x1)*cos(x2) + x3^2 + 4");
        let p = [0.2, 0.5, -0.4];
        let q = q_tensor_at(&m, "f", &p, &[1.0]).unwrap();
        let l = lstar_at(&m, "f", &p, &[1.0]).unwrap();
        assert_eq!(l, -q);
    }

    #[test]
    fn trace_identities_on_hyperbolic_plane() {
        let m = hyperbolic();
        let p = [0.3, 1.4];
        let b = base_field_at(&m, "f", &p, &[]).unwrap();
        let s = 2.0;
        let trq = g_trace(&b.geometry.g_inv, &b.q);
        assert!((trq - (s - 1.0) * b.calculus.laplacian).abs() < 1e-10 * (1.0 + trq.abs()));
        let trl = g_trace(&b.geometry.g_inv, &b.lstar);
        let expected = -(s - 1.0) * b.calculus.laplacian - b.geometry.scalar * b.calculus.value;
        assert!((trl - expected).abs() < 1e-10 * (1.0 + expected.abs()));
    }

    #[test]
    fn definiteness_basic_classes() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(definiteness(&id, 1e-8).unwrap().class, DefinitenessClass::PositiveDefinite);
        assert_eq!(definiteness(&DMatrix::zeros(2, 2), 1e-8).unwrap().class, DefinitenessClass::Zero);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0]));
        assert_eq!(definiteness(&d, 1e-8).unwrap().class, DefinitenessClass::Indefinite);
        let psd = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0]));
        assert_eq!(definiteness(&psd, 1e-8).unwrap().class, DefinitenessClass::PositiveSemi);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(definiteness(&bad, 1e-8), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn definiteness_wrt_metric_reports_intrinsic_eigenvalues() {
        let m = hyperbolic();
        let g = m.metric_at(&[0.0, 2.0], &[]).unwrap();
        let d = definiteness_wrt(&(&g * 3.0), &g, 1e-8).unwrap();
        assert!(d.eigenvalues.iter().all(|l| (l - 3.0).abs() < 1e-12));
    }

    #[test]
    fn divergence_of_q_on_flat_paraboloid_is_roundoff() {
        let m = euclid(2, "0.5*(x1^2+x2^2) + eps");
        let d = divergence_q_fd(&m, "f", &[0.3, 0.4], &[1.0], 1e-4).unwrap();
        assert!(d.iter().all(|v| v.abs() <= 1e-9));
    }

    #[test]
    fn divergence_of_q_equals_minus_ricci_gradient_on_hyperbolic_plane() {
        // Q^f is divergence-free only when Ric(∇f) = 0; on H² the FD divergence
        // tracks −Ric(∇f) = +df, and the corrected residual is O(h²).
        let m = hyperbolic();
        let p = [0.3, 1.4];
        let d = divergence_q_fd(&m, "f", &p, &[], 1e-4).unwrap();
        let rg = ricci_of_gradient(&m, "f", &p, &[]).unwrap();
        let resid: f64 = d.iter().zip(&rg).map(|(a, b)| (a + b).powi(2)).sum::<f64>().sqrt();
        assert!(resid <= 1e-6, "residual {resid}");
        let raw: f64 = d.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(raw > 1.0);
    }

    #[test]
    fn divergence_near_boundary_is_a_domain_error() {
        let m = euclid(2, "x1");
        assert!(matches!(
            divergence_q_fd(&m, "f", &[3.0 - 1e-6, 0.0], &[1.0], 1e-4),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn non_spd_metric_is_rejected() {
        let m = ChartManifold::from_strings(&["x"], vec![(-1.0, 1.0)], &[vec!["x".into()]], &[], &[]).unwrap();
        assert!(matches!(geometry_at(&m, &[-0.5], &[]), Err(Error::MetricNotSpd { .. })));
        assert!(m.validate(&GridSpec::closed(3), &[]).is_err());
    }

    #[test]
    fn one_dimensional_chart_is_flat_and_q_vanishes() {
        let m = ChartManifold::from_strings(&["x"], vec![(0.5, 2.0)], &[vec!["x^2".into()]], &[("f", "x^3+1")], &[]).unwrap();
        let b = base_field_at(&m, "f", &[1.2], &[]).unwrap();
        assert_eq!(b.geometry.ricci[(0, 0)], 0.0);
        assert!(b.q[(0, 0)].abs() < 1e-14);
    }
}
