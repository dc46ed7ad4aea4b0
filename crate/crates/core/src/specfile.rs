//! JSON input format for user space-times.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Ball, Domain};
use crate::riemann::ChartManifold;
use crate::spacetime::{Spacetime, SpacetimeKind};

/// A time endpoint: a number, `"-inf"` or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Endpoint {
    Number(f64),
    Named(InfName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfName {
    #[serde(rename = "-inf")]
    NegInf,
    #[serde(rename = "inf", alias = "+inf")]
    PosInf,
}

impl Endpoint {
    pub fn value(self) -> f64 {
        match self {
            Endpoint::Number(x) => x,
            Endpoint::Named(InfName::NegInf) => f64::NEG_INFINITY,
            Endpoint::Named(InfName::PosInf) => f64::INFINITY,
        }
    }

    fn from_value(x: f64) -> Self {
        if x == f64::NEG_INFINITY {
            Endpoint::Named(InfName::NegInf)
        } else if x == f64::INFINITY {
            Endpoint::Named(InfName::PosInf)
        } else {
            Endpoint::Number(x)
        }
    }
}

/// Either nested upper-triangular rows `[[g11, g12], [g22]]` or the flat
/// row-major upper triangle `[g11, g12, g22]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricText {
    Rows(Vec<Vec<String>>),
    Flat(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacetimeSpecFile {
    pub kind: SpacetimeKind,
    pub interval: [Endpoint; 2],
    pub dim: usize,
    pub coords: Vec<String>,
    pub domain: Vec<[f64; 2]>,
    pub metric: MetricText,
    pub warping: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// GRW only: finite `t` range for sampled events.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball: Option<BallSpec>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::SpecFile(msg.into())
}

impl SpacetimeSpecFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| bad(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec files serialize")
    }

    fn metric_rows(&self) -> Result<Vec<Vec<String>>> {
        let s = self.dim;
        match &self.metric {
            MetricText::Rows(rows) => {
                if rows.len() != s || rows.iter().enumerate().any(|(i, r)| r.len() != s - i) {
                    return Err(bad(format!("metric must have {s} upper-triangular rows of lengths {s}..1")));
                }
                Ok(rows.clone())
            }
            MetricText::Flat(flat) => {
                if flat.len() != s * (s + 1) / 2 {
                    return Err(bad(format!("flat metric needs {} entries, got {}", s * (s + 1) / 2, flat.len())));
                }
                let mut it = flat.iter().cloned();
                Ok((0..s).map(|i| (i..s).map(|_| it.next().unwrap()).collect()).collect())
            }
        }
    }

    /// Structural checks, then construction; expressions are parsed and the
    /// metric is checked at the box centre. Grid-wide checks are left to
    /// [`Spacetime::validate`].
    pub fn build(&self) -> Result<Spacetime> {
        let s = self.dim;
        if s == 0 {
            return Err(bad("dim must be at least 1"));
        }
        if self.coords.len() != s || self.domain.len() != s {
            return Err(bad(format!("dim = {s} but {} coords and {} domain rows", self.coords.len(), self.domain.len())));
        }
        if self.coords.iter().any(|c| c == "t") {
            return Err(bad("`t` is reserved for the time coordinate"));
        }
        for (i, [lo, hi]) in self.domain.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(bad(format!("domain row {i} must be a finite [lo, hi] with lo < hi")));
            }
        }
        let rows = self.metric_rows()?;
        let coords: Vec<&str> = self.coords.iter().map(|c| c.as_str()).collect();
        let bounds: Vec<(f64, f64)> = self.domain.iter().map(|[a, b]| (*a, *b)).collect();
        let params: Vec<(&str, f64)> = self.params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        let mut base = ChartManifold::from_strings(&coords, bounds.clone(), &rows, &[], &params)?;
        if let Some(b) = &self.ball {
            if b.center.len() != s || !(b.radius > 0.0) {
                return Err(bad("ball needs a centre of length dim and a positive radius"));
            }
            base = base.with_domain(Domain::new(bounds).with_ball(Ball {
                center: b.center.clone(),
                radius: b.radius,
            }));
        }
        let interval = (self.interval[0].value(), self.interval[1].value());
        match self.kind {
            SpacetimeKind::Static => {
                if self.t_window.is_some() {
                    return Err(bad("t_window applies to grw space-times only"));
                }
                Spacetime::new_static(base, &self.warping, interval)
            }
            SpacetimeKind::Grw => {
                let w = self.t_window.ok_or_else(|| bad("grw space-times need a t_window"))?;
                Spacetime::new_grw(base, &self.warping, interval, (w[0], w[1]))
            }
        }
    }

    /// The spec-file form of an existing space-time.
    pub fn from_spacetime(st: &Spacetime) -> Self {
        let base = st.base();
        let s = base.dim();
        let metric = (0..s)
            .map(|i| (i..s).map(|j| base.metric_component(i, j).to_string()).collect())
            .collect();
        let d = base.domain();
        SpacetimeSpecFile {
            kind: st.kind(),
            interval: [Endpoint::from_value(st.interval().0), Endpoint::from_value(st.interval().1)],
            dim: s,
            coords: base.coords().to_vec(),
            domain: d.bounds.iter().map(|(a, b)| [*a, *b]).collect(),
            metric: MetricText::Rows(metric),
            warping: st.warp_text().to_string(),
            params: st.param_map(),
            t_window: st.t_window().map(|(a, b)| [a, b]),
            ball: d.ball.as_ref().map(|b| BallSpec {
                center: b.center.clone(),
                radius: b.radius,
            }),
        }
    }
}

pub fn load_spacetime_json(text: &str) -> Result<Spacetime> {
    SpacetimeSpecFile::from_json(text)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog_spacetime, ENTRY_NAMES};
    use crate::grid::GridSpec;

    const PARABOLOID: &str = r#"{
        "kind": "static",
        "interval": ["-inf", "inf"],
        "dim": 2,
        "coords": ["x", "y"],
        "domain": [[-1, 1], [-1, 1]],
        "metric": [["1", "0"], ["1"]],
        "warping": "0.5*(x^2+y^2)+eps",
        "params": {"eps": 1.0}
    }"#;

    #[test]
    fn parses_and_builds() {
        let st = load_spacetime_json(PARABOLOID).unwrap();
        assert_eq!(st.dim(), 3);
        let b = st.base_at(&[0.0, 0.2, 0.3]).unwrap();
        assert!((b.calculus.laplacian - 2.0).abs() < 1e-12);
    }

    #[test]
    fn flat_metric_form() {
        let text = PARABOLOID.replace(r#"[["1", "0"], ["1"]]"#, r#"["1", "0", "1"]"#);
        assert!(load_spacetime_json(&text).is_ok());
    }

    #[test]
    fn rejects_malformed() {
        for (from, to) in [
            (r#""dim": 2"#, r#""dim": 3"#),
            (r#"["1", "0"], ["1"]"#, r#"["1"], ["1"]"#),
            (r#""0.5*(x^2+y^2)+eps""#, r#""0.5*(x^2+"#),
            (r#""kind": "static""#, r#""kind": "weird""#),
            (r#""params""#, r#""extra": 1, "params""#),
            (r#"[-1, 1], [-1, 1]"#, r#"[1, -1], [-1, 1]"#),
        ] {
            let text = PARABOLOID.replace(from, to);
            assert!(load_spacetime_json(&text).is_err(), "{to}");
        }
        let grw = PARABOLOID.replace(r#""kind": "static""#, r#""kind": "grw""#);
        assert!(matches!(load_spacetime_json(&grw), Err(Error::SpecFile(_))));
    }

    #[test]
    fn catalog_round_trip() {
        for name in ENTRY_NAMES {
            let Ok(st) = catalog_spacetime(name, &BTreeMap::new()) else { continue };
            let spec = SpacetimeSpecFile::from_spacetime(&st);
            let back = load_spacetime_json(&spec.to_json()).unwrap();
            let events = st.sample_events(&GridSpec::closed(3)).unwrap();
            for e in &events {
                let a = st.metric_at(e).unwrap();
                let b = back.metric_at(e).unwrap();
                assert!((a - b).amax() < 1e-14, "{name}");
            }
        }
    }
}
