//! Built-in example spaces and space-times with known ground truth.
//!
//! Noncompact entries live on finite boxes (sampling needs finite grids);
//! completeness of the underlying space is metadata only.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Ball, Domain};
use crate::riemann::ChartManifold;
use crate::spacetime::Spacetime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    Manifold,
    Static,
    Grw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub default: f64,
    pub min: f64,
    pub max: f64,
    pub integer: bool,
    /// Strict lower bound (`value > min`).
    pub exclusive_min: bool,
}

/// A machine-readable expected value.
///
/// Keys: `ricci_over_g` (Ric_F = λ g_F), `hessian_over_g` (H^f = φ g_F),
/// `laplacian_f`, `q_over_g`, `lstar_over_g`, `tau_f`, `min_laplacian_over_f`,
/// `spacetime_scalar_at_t1` (GRW τ at t = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub key: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogInfo {
    pub name: String,
    pub kind: EntryKind,
    pub params: Vec<ParamSpec>,
    pub provenance: String,
    pub truths: Vec<GroundTruth>,
    pub complete: bool,
}

#[derive(Debug, Clone)]
pub enum CatalogObject {
    Manifold(ChartManifold),
    Spacetime(Spacetime),
}

pub const ENTRY_NAMES: [&str; 13] = [
    "minkowski",
    "paraboloid-static",
    "quadrant-concircular",
    "full-plane-concircular",
    "sphere",
    "hyperbolic",
    "static-over-sphere",
    "static-over-hyperbolic",
    "einstein-de-sitter",
    "interior-max-warp",
    "polar-plane",
    "minkowski-polar",
    "exp-warp-polar",
];

fn p(name: &str, default: f64, min: f64, max: f64) -> ParamSpec {
    ParamSpec {
        name: name.into(),
        default,
        min,
        max,
        integer: false,
        exclusive_min: true,
    }
}

fn dim_param(default: usize, min: usize) -> ParamSpec {
    ParamSpec {
        name: "s".into(),
        default: default as f64,
        min: min as f64,
        max: 6.0,
        integer: true,
        exclusive_min: false,
    }
}

fn schema(name: &str) -> Result<(EntryKind, Vec<ParamSpec>, &'static str, bool)> {
    let inf = f64::INFINITY;
    Ok(match name {
        "minkowski" => (
            EntryKind::Static,
            vec![dim_param(3, 1), p("half_width", 10.0, 0.0, inf)],
            "flat static space-time R x_1 R^s",
            true,
        ),
        "paraboloid-static" => (
            EntryKind::Static,
            vec![dim_param(2, 1), p("eps", 1.0, 0.0, inf), p("R", 1.0, 0.0, inf)],
            "f = |x|^2/2 + eps over a Euclidean ball",
            false,
        ),
        "quadrant-concircular" => (
            EntryKind::Static,
            vec![p("half_width", 5.0, 0.05, inf)],
            "u = x1^2+x2^2+x1+x2+1 on the open quadrant",
            false,
        ),
        "full-plane-concircular" => (
            EntryKind::Static,
            vec![p("half_width", 5.0, 0.0, inf)],
            "u = x1^2+x2^2+1 on the plane",
            true,
        ),
        "sphere" => (
            EntryKind::Manifold,
            vec![dim_param(2, 2), p("radius", 1.0, 0.0, inf)],
            "round sphere in hyperspherical angles, poles excluded",
            true,
        ),
        "hyperbolic" => (
            EntryKind::Manifold,
            vec![dim_param(2, 2)],
            "hyperbolic space, upper half-space model",
            true,
        ),
        "static-over-sphere" => (
            EntryKind::Static,
            vec![p("c", 1.0, 0.0, inf), dim_param(2, 2), p("radius", 1.0, 0.0, inf)],
            "constant warp c over the round sphere",
            true,
        ),
        "static-over-hyperbolic" => (
            EntryKind::Static,
            vec![p("c", 1.0, 0.0, inf), dim_param(2, 2)],
            "constant warp c over hyperbolic space",
            true,
        ),
        "einstein-de-sitter" => (
            EntryKind::Grw,
            vec![p("half_width", 1e4, 0.0, inf)],
            "GRW (0, inf) x_{t^(2/3)} R^3",
            true,
        ),
        "interior-max-warp" => (
            EntryKind::Static,
            vec![p("half_width", 2.0, 0.0, inf)],
            "f = 2 - tanh(x1)^2, interior maximum with negative Laplacian",
            true,
        ),
        "polar-plane" => (
            EntryKind::Static,
            vec![],
            "f = 1 + r^2/2 over the plane in polar coordinates (paraboloid in a curved chart)",
            false,
        ),
        "minkowski-polar" => (
            EntryKind::Static,
            vec![],
            "flat static space-time over the plane in polar coordinates",
            false,
        ),
        "exp-warp-polar" => (
            EntryKind::Static,
            vec![],
            "f = exp(r cos(th)/2) over the plane in polar coordinates; non-polynomial chart data",
            false,
        ),
        other => return Err(Error::UnknownEntry(other.to_string())),
    })
}

fn bind(specs: &[ParamSpec], overrides: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    for k in overrides.keys() {
        if !specs.iter().any(|s| &s.name == k) {
            return Err(Error::BadParam(format!("unknown parameter `{k}`")));
        }
    }
    let mut out = BTreeMap::new();
    for s in specs {
        let v = overrides.get(&s.name).copied().unwrap_or(s.default);
        let low_ok = if s.exclusive_min { v > s.min } else { v >= s.min };
        if !v.is_finite() || !low_ok || v > s.max || (s.integer && v.fract() != 0.0) {
            return Err(Error::BadParam(format!("parameter `{}` = {v} outside its schema", s.name)));
        }
        out.insert(s.name.clone(), v);
    }
    Ok(out)
}

fn euclidean(coords: &[String], bounds: Vec<(f64, f64)>, params: &[(&str, f64)]) -> Result<ChartManifold> {
    let s = coords.len();
    let metric: Vec<Vec<String>> = (0..s)
        .map(|i| (i..s).map(|j| if i == j { "1".into() } else { "0".into() }).collect())
        .collect();
    let refs: Vec<&str> = coords.iter().map(|c| c.as_str()).collect();
    ChartManifold::from_strings(&refs, bounds, &metric, &[], params)
}

fn xs(s: usize) -> Vec<String> {
    (1..=s).map(|i| format!("x{i}")).collect()
}

fn diagonal(s: usize, diag: &[String]) -> Vec<Vec<String>> {
    (0..s)
        .map(|i| (i..s).map(|j| if i == j { diag[i].clone() } else { "0".into() }).collect())
        .collect()
}

fn sphere_chart(s: usize, radius: f64) -> Result<ChartManifold> {
    let coords: Vec<String> = if s == 2 {
        vec!["th".into(), "ph".into()]
    } else {
        (1..s).map(|i| format!("th{i}")).chain(["ph".to_string()]).collect()
    };
    let mut diag = Vec::with_capacity(s);
    let mut prefix = String::from("radius^2");
    for c in &coords {
        diag.push(prefix.clone());
        prefix = format!("{prefix}*sin({c})^2");
    }
    let mut bounds = vec![(0.3, PI - 0.3); s - 1];
    bounds.push((-PI, PI));
    let refs: Vec<&str> = coords.iter().map(|c| c.as_str()).collect();
    ChartManifold::from_strings(&refs, bounds, &diagonal(s, &diag), &[], &[("radius", radius)])
}

fn hyperbolic_chart(s: usize) -> Result<ChartManifold> {
    let mut coords = xs(s - 1);
    coords.push("y".into());
    let diag = vec!["1/y^2".to_string(); s];
    let mut bounds = vec![(-2.0, 2.0); s - 1];
    bounds.push((0.5, 3.0));
    let refs: Vec<&str> = coords.iter().map(|c| c.as_str()).collect();
    ChartManifold::from_strings(&refs, bounds, &diagonal(s, &diag), &[], &[])
}

fn polar_chart() -> Result<ChartManifold> {
    ChartManifold::from_strings(
        &["r", "th"],
        vec![(0.5, 3.0), (-PI, PI)],
        &[vec!["1".into(), "0".into()], vec!["r^2".into()]],
        &[],
        &[],
    )
}

fn truth(key: &str, value: f64) -> GroundTruth {
    GroundTruth { key: key.into(), value }
}

fn truths(name: &str, v: &BTreeMap<String, f64>) -> Vec<GroundTruth> {
    let get = |k: &str| v.get(k).copied().unwrap_or(f64::NAN);
    let s = get("s");
    match name {
        "minkowski" => vec![
            truth("ricci_over_g", 0.0),
            truth("laplacian_f", 0.0),
            truth("lstar_over_g", 0.0),
            truth("tau_f", 0.0),
        ],
        "paraboloid-static" => {
            let (eps, r) = (get("eps"), get("R"));
            vec![
                truth("ricci_over_g", 0.0),
                truth("hessian_over_g", 1.0),
                truth("laplacian_f", s),
                truth("q_over_g", s - 1.0),
                truth("lstar_over_g", -(s - 1.0)),
                truth("min_laplacian_over_f", s / (0.5 * r * r + eps)),
            ]
        }
        "quadrant-concircular" | "full-plane-concircular" => vec![
            truth("ricci_over_g", 0.0),
            truth("hessian_over_g", 2.0),
            truth("laplacian_f", 4.0),
            truth("q_over_g", 2.0),
            truth("lstar_over_g", -2.0),
        ],
        "sphere" => {
            let r = get("radius");
            vec![truth("ricci_over_g", (s - 1.0) / (r * r)), truth("tau_f", s * (s - 1.0) / (r * r))]
        }
        "hyperbolic" => vec![truth("ricci_over_g", -(s - 1.0)), truth("tau_f", -s * (s - 1.0))],
        "static-over-sphere" => {
            let (c, r) = (get("c"), get("radius"));
            let k = (s - 1.0) / (r * r);
            vec![
                truth("ricci_over_g", k),
                truth("laplacian_f", 0.0),
                truth("q_over_g", 0.0),
                truth("lstar_over_g", -c * k),
                truth("tau_f", s * k),
            ]
        }
        "static-over-hyperbolic" => {
            let c = get("c");
            vec![
                truth("ricci_over_g", -(s - 1.0)),
                truth("laplacian_f", 0.0),
                truth("q_over_g", 0.0),
                truth("lstar_over_g", c * (s - 1.0)),
                truth("tau_f", -s * (s - 1.0)),
            ]
        }
        "einstein-de-sitter" => vec![truth("spacetime_scalar_at_t1", 4.0 / 3.0)],
        "interior-max-warp" => vec![truth("ricci_over_g", 0.0), truth("laplacian_f_at_origin", -2.0)],
        "polar-plane" => vec![
            truth("ricci_over_g", 0.0),
            truth("hessian_over_g", 1.0),
            truth("laplacian_f", 2.0),
            truth("q_over_g", 1.0),
            truth("lstar_over_g", -1.0),
        ],
        "minkowski-polar" => vec![truth("ricci_over_g", 0.0), truth("lstar_over_g", 0.0)],
        "exp-warp-polar" => vec![truth("ricci_over_g", 0.0)],
        _ => Vec::new(),
    }
}

pub fn catalog_info(name: &str, overrides: &BTreeMap<String, f64>) -> Result<CatalogInfo> {
    let (kind, params, provenance, complete) = schema(name)?;
    let bound = bind(&params, overrides)?;
    Ok(CatalogInfo {
        name: name.to_string(),
        kind,
        truths: truths(name, &bound),
        params,
        provenance: provenance.to_string(),
        complete,
    })
}

/// Every entry with default parameters.
pub fn catalog_list() -> Vec<CatalogInfo> {
    ENTRY_NAMES
        .iter()
        .map(|n| catalog_info(n, &BTreeMap::new()).expect("registry entries are valid"))
        .collect()
}

pub fn catalog_get(name: &str, overrides: &BTreeMap<String, f64>) -> Result<CatalogObject> {
    let (_, specs, _, _) = schema(name)?;
    let v = bind(&specs, overrides)?;
    let get = |k: &str| v[k];
    let all_time = (f64::NEG_INFINITY, f64::INFINITY);
    let obj = match name {
        "minkowski" => {
            let s = get("s") as usize;
            let h = get("half_width");
            let base = euclidean(&xs(s), vec![(-h, h); s], &[])?;
            CatalogObject::Spacetime(Spacetime::new_static(base, "1", all_time)?)
        }
        "paraboloid-static" => {
            let s = get("s") as usize;
            let r = get("R");
            let base = euclidean(&xs(s), vec![(-r, r); s], &[("eps", get("eps"))])?.with_domain(
                Domain::new(vec![(-r, r); s]).with_ball(Ball {
                    center: vec![0.0; s],
                    radius: r,
                }),
            );
            let sum: Vec<String> = xs(s).iter().map(|x| format!("{x}^2")).collect();
            let warp = format!("0.5*({})+eps", sum.join("+"));
            CatalogObject::Spacetime(Spacetime::new_static(base, &warp, all_time)?)
        }
        "quadrant-concircular" => {
            let h = get("half_width");
            // the open quadrant, sampled with a margin off the axes
            let base = euclidean(&xs(2), vec![(0.05, h); 2], &[])?;
            CatalogObject::Spacetime(Spacetime::new_static(base, "x1^2+x2^2+x1+x2+1", all_time)?)
        }
        "full-plane-concircular" => {
            let h = get("half_width");
            let base = euclidean(&xs(2), vec![(-h, h); 2], &[])?;
            CatalogObject::Spacetime(Spacetime::new_static(base, "x1^2+x2^2+1", all_time)?)
        }
        "sphere" => CatalogObject::Manifold(sphere_chart(get("s") as usize, get("radius"))?),
        "hyperbolic" => CatalogObject::Manifold(hyperbolic_chart(get("s") as usize)?),
        "static-over-sphere" => {
            let base = sphere_chart(get("s") as usize, get("radius"))?;
            CatalogObject::Spacetime(Spacetime::new_static(base, &format!("{:?}", get("c")), all_time)?)
        }
        "static-over-hyperbolic" => {
            let base = hyperbolic_chart(get("s") as usize)?;
            CatalogObject::Spacetime(Spacetime::new_static(base, &format!("{:?}", get("c")), all_time)?)
        }
        "einstein-de-sitter" => {
            let h = get("half_width");
            let base = euclidean(&xs(3), vec![(-h, h); 3], &[])?;
            CatalogObject::Spacetime(Spacetime::new_grw(base, "t^(2/3)", (0.0, f64::INFINITY), (0.5, 4.0))?)
        }
        "interior-max-warp" => {
            let h = get("half_width");
            let base = euclidean(&xs(2), vec![(-h, h); 2], &[])?;
            CatalogObject::Spacetime(Spacetime::new_static(base, "2-tanh(x1)^2", all_time)?)
        }
        "polar-plane" => CatalogObject::Spacetime(Spacetime::new_static(polar_chart()?, "1+r^2/2", all_time)?),
        "minkowski-polar" => CatalogObject::Spacetime(Spacetime::new_static(polar_chart()?, "1", all_time)?),
        "exp-warp-polar" => {
            CatalogObject::Spacetime(Spacetime::new_static(polar_chart()?, "exp(r*cos(th)/2)", all_time)?)
        }
        other => return Err(Error::UnknownEntry(other.to_string())),
    };
    Ok(obj)
}

/// [`catalog_get`] for space-time entries.
pub fn catalog_spacetime(name: &str, overrides: &BTreeMap<String, f64>) -> Result<Spacetime> {
    match catalog_get(name, overrides)? {
        CatalogObject::Spacetime(st) => Ok(st),
        CatalogObject::Manifold(_) => Err(Error::BadParam(format!("`{name}` is a Riemannian manifold, not a space-time"))),
    }
}

/// [`catalog_get`] for Riemannian entries; space-time entries yield their base.
pub fn catalog_manifold(name: &str, overrides: &BTreeMap<String, f64>) -> Result<ChartManifold> {
    match catalog_get(name, overrides)? {
        CatalogObject::Manifold(m) => Ok(m),
        CatalogObject::Spacetime(st) => Ok(st.base().clone()),
    }
}

/// Names of the standard static entries.
pub fn static_entries() -> Vec<&'static str> {
    ENTRY_NAMES
        .iter()
        .copied()
        .filter(|n| matches!(schema(n), Ok((EntryKind::Static, ..))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::riemann::{base_field_at, definiteness_wrt, geometry_at};
    use nalgebra::DMatrix;

    fn none() -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    #[test]
    fn defaults_validate() {
        for name in ENTRY_NAMES {
            match catalog_get(name, &none()).unwrap() {
                CatalogObject::Spacetime(st) => {
                    assert!(st.validate(&GridSpec::default()).unwrap() > 0, "{name}");
                }
                CatalogObject::Manifold(m) => {
                    let params = m.default_params().to_vec();
                    assert!(m.validate(&GridSpec::default(), &params).unwrap() > 0, "{name}");
                }
            }
        }
    }

    #[test]
    fn bad_names_and_params() {
        assert!(matches!(catalog_get("schwarzschild", &none()), Err(Error::UnknownEntry(_))));
        let mut bad = BTreeMap::new();
        bad.insert("s".to_string(), 2.5);
        assert!(matches!(catalog_get("minkowski", &bad), Err(Error::BadParam(_))));
        bad.insert("s".to_string(), 0.0);
        assert!(matches!(catalog_get("minkowski", &bad), Err(Error::BadParam(_))));
        let mut unknown = BTreeMap::new();
        unknown.insert("zzz".to_string(), 1.0);
        assert!(matches!(catalog_get("minkowski", &unknown), Err(Error::BadParam(_))));
        let mut eps = BTreeMap::new();
        eps.insert("eps".to_string(), 0.0);
        assert!(matches!(catalog_get("paraboloid-static", &eps), Err(Error::BadParam(_))));
        assert!(catalog_spacetime("sphere", &none()).is_err());
    }

    /// Every ground-truth note of every entry, checked on its 5^s grid.
    #[test]
    fn ground_truth_notes_hold() {
        let grid = GridSpec::default();
        for info in catalog_list() {
            let m = catalog_manifold(&info.name, &none()).unwrap();
            let st = catalog_spacetime(&info.name, &none()).ok();
            let params = match &st {
                Some(st) => st.params().to_vec(),
                None => m.default_params().to_vec(),
            };
            let points = m.domain().clone();
            for x in grid.points(&points).unwrap() {
                let geo = geometry_at(&m, &x, &params).unwrap();
                let field = st.as_ref().filter(|s| s.kind() == crate::spacetime::SpacetimeKind::Static).map(|_| {
                    base_field_at(&m, "f", &x, &params).unwrap()
                });
                for t in &info.truths {
                    let tol = 1e-8 * (1.0 + t.value.abs());
                    let check = |got: f64| assert!((got - t.value).abs() <= tol, "{} {} at {x:?}: {got}", info.name, t.key);
                    let over_g = |m: &DMatrix<f64>| {
                        let d = definiteness_wrt(m, &geo.g, 0.0).unwrap();
                        assert!(d.eigenvalues[d.eigenvalues.len() - 1] - d.eigenvalues[0] <= tol, "{} {}", info.name, t.key);
                        d.eigenvalues[0]
                    };
                    match (t.key.as_str(), &field) {
                        ("ricci_over_g", _) => check(over_g(&geo.ricci)),
                        ("tau_f", _) => check(geo.scalar),
                        ("hessian_over_g", Some(b)) => check(over_g(&b.calculus.hessian)),
                        ("laplacian_f", Some(b)) => check(b.calculus.laplacian),
                        ("q_over_g", Some(b)) => check(over_g(&b.q)),
                        ("lstar_over_g", Some(b)) => check(over_g(&b.lstar)),
                        ("min_laplacian_over_f", Some(b)) => {
                            assert!(b.calculus.laplacian / b.calculus.value >= t.value - tol)
                        }
                        ("laplacian_f_at_origin", _) => {}
                        ("spacetime_scalar_at_t1", _) => {}
                        (k, _) => panic!("unchecked truth {k} for {}", info.name),
                    }
                }
            }
            for t in &info.truths {
                match t.key.as_str() {
                    "laplacian_f_at_origin" => {
                        let b = base_field_at(&m, "f", &[0.0, 0.0], &params).unwrap();
                        assert!((b.calculus.laplacian - t.value).abs() < 1e-12);
                    }
                    "spacetime_scalar_at_t1" => {
                        let g = st.as_ref().unwrap().lorentz_geometry_at(&[1.0, 0.3, -2.0, 5.0]).unwrap();
                        assert!((g.scalar - t.value).abs() < 1e-10);
                    }
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn paraboloid_min_ratio_attained_on_sphere_of_radius() {
        let st = catalog_spacetime("paraboloid-static", &none()).unwrap();
        let d = crate::geodesics::diameter_bound(&st, &GridSpec::default(), 1e-12).unwrap();
        assert!((d.c - 4.0 / 3.0).abs() < 1e-12);
        let info = catalog_info("paraboloid-static", &none()).unwrap();
        let c = info.truths.iter().find(|t| t.key == "min_laplacian_over_f").unwrap().value;
        assert!((c - 4.0 / 3.0).abs() < 1e-15);
    }
}
