//! Energy and convergence conditions on sampled events and causal vectors,
//! and the sufficient-condition hypotheses of the static energy theorems.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::bilinear;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::riemann::{definiteness_wrt, DefinitenessClass};
use crate::spacetime::{causal_vector_with, CausalKind, Spacetime, SpacetimeKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalSample {
    pub event: Vec<f64>,
    /// Spatial part, unit for the spatial metric `h`.
    pub v: Vec<f64>,
    pub r: f64,
    pub w: Vec<f64>,
    pub kind: CausalKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConditionId {
    #[serde(rename = "SEC/TCC")]
    Sec,
    #[serde(rename = "NCC")]
    Ncc,
    #[serde(rename = "WEC")]
    Wec,
    #[serde(rename = "DEC")]
    Dec,
    #[serde(rename = "HE-SEC")]
    HeSec,
    #[serde(rename = "RSEC/RTCC")]
    Rsec,
    #[serde(rename = "RNCC")]
    Rncc,
    SubharmonicityNecessary,
    ScalarNonnegNecessary,
    SkidResidual,
}

impl ConditionId {
    pub const ALL: [ConditionId; 10] = [
        ConditionId::Sec,
        ConditionId::Ncc,
        ConditionId::Wec,
        ConditionId::Dec,
        ConditionId::HeSec,
        ConditionId::Rsec,
        ConditionId::Rncc,
        ConditionId::SubharmonicityNecessary,
        ConditionId::ScalarNonnegNecessary,
        ConditionId::SkidResidual,
    ];

    /// The energy conditions and necessary premises; the reversed conditions
    /// and the `L*f` residual are opt-in.
    pub const STANDARD: [ConditionId; 7] = [
        ConditionId::Sec,
        ConditionId::Ncc,
        ConditionId::Wec,
        ConditionId::Dec,
        ConditionId::HeSec,
        ConditionId::SubharmonicityNecessary,
        ConditionId::ScalarNonnegNecessary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConditionId::Sec => "SEC/TCC",
            ConditionId::Ncc => "NCC",
            ConditionId::Wec => "WEC",
            ConditionId::Dec => "DEC",
            ConditionId::HeSec => "HE-SEC",
            ConditionId::Rsec => "RSEC/RTCC",
            ConditionId::Rncc => "RNCC",
            ConditionId::SubharmonicityNecessary => "SubharmonicityNecessary",
            ConditionId::ScalarNonnegNecessary => "ScalarNonnegNecessary",
            ConditionId::SkidResidual => "SkidResidual",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        let key = name.trim().to_ascii_uppercase();
        ConditionId::ALL
            .into_iter()
            .find(|c| {
                let n = c.name().to_ascii_uppercase();
                n == key || n.split('/').any(|part| part == key)
            })
            .ok_or_else(|| Error::BadParam(format!("unknown condition `{name}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    HoldsOnSamples,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub event: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub margin: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub id: ConditionId,
    pub verdict: Verdict,
    pub min_margin: Option<f64>,
    pub witnesses: Vec<Witness>,
    pub events: usize,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditOptions {
    pub grid: GridSpec,
    /// Draws per event and causal kind; each draw yields both time orientations.
    pub samples_per_event: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            grid: GridSpec::default(),
            samples_per_event: 16,
            seed: 0,
            tol: 1e-9,
        }
    }
}

fn spatial_cholesky_inv_t(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    let h = g.view((1, 1), (n - 1, n - 1)).into_owned();
    let chol = h.cholesky().ok_or_else(|| Error::MetricNotSpd {
        point: Vec::new(),
        smallest: f64::NAN,
    })?;
    chol.l()
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::MetricDegenerate(Vec::new()))
}

fn draw_samples(
    g: &DMatrix<f64>,
    event: &[f64],
    count: usize,
    kind: CausalKind,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<CausalSample>> {
    let n = g.nrows();
    let s = n - 1;
    let lt_inv = spatial_cholesky_inv_t(g)?;
    let mut out = Vec::with_capacity(2 * count);
    for _ in 0..count {
        let mut z: Vec<f64>;
        loop {
            z = (0..s).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm: f64 = z.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                z.iter_mut().for_each(|x| *x /= norm);
                break;
            }
        }
        let v: Vec<f64> = (&lt_inv * DVector::from_vec(z)).iter().cloned().collect();
        let magnitude = match kind {
            CausalKind::Null => 1.0,
            // |r| in (1, 3]
            _ => 3.0 - 2.0 * rng.random::<f64>(),
        };
        for sign in [1.0, -1.0] {
            let r = sign * magnitude;
            let w = causal_vector_with(g, &v, r)?;
            out.push(CausalSample {
                event: event.to_vec(),
                v: v.clone(),
                r,
                w,
                kind: if kind == CausalKind::Null {
                    CausalKind::Null
                } else {
                    CausalKind::Timelike
                },
            });
        }
    }
    Ok(out)
}

/// `count` seeded draws of `v` on the unit sphere of the spatial metric, each
/// emitted with both time orientations (`r = ±1` for null, `|r| ∈ (1, 3]` for
/// timelike).
pub fn sample_causal(st: &Spacetime, event: &[f64], count: usize, kind: CausalKind, seed: u64) -> Result<Vec<CausalSample>> {
    sample_causal_stream(st, event, count, kind, seed, 0)
}

/// As [`sample_causal`] on an independent RNG stream.
pub fn sample_causal_stream(
    st: &Spacetime,
    event: &[f64],
    count: usize,
    kind: CausalKind,
    seed: u64,
    stream: u64,
) -> Result<Vec<CausalSample>> {
    if count == 0 {
        return Err(Error::BadParam("sample count must be at least 1".into()));
    }
    if kind == CausalKind::Spacelike {
        return Err(Error::BadParam("only null or timelike samples can be drawn".into()));
    }
    let g = st.metric_at(event)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    draw_samples(&g, event, count, kind, &mut rng)
}

struct Measurement {
    margin: f64,
    vectors: Vec<Vec<f64>>,
    label: &'static str,
}

struct EventAudit {
    event: Vec<f64>,
    per_condition: Vec<(ConditionId, Vec<Measurement>)>,
}

fn audit_event(
    st: &Spacetime,
    index: usize,
    event: &[f64],
    conditions: &[ConditionId],
    opts: &AuditOptions,
) -> Result<EventAudit> {
    let geo = st.lorentz_geometry_at(event)?;
    let g = &geo.g;
    let ric = (&geo.ricci + geo.ricci.transpose()) * 0.5;
    let einstein = &ric - g * (0.5 * geo.scalar);
    let n = st.dim() as f64;
    // 8π(T − ½ tr T g) = Ric − ½τg − ((2−n)/4) τ g
    let he = &einstein - g * ((2.0 - n) / 4.0 * geo.scalar);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(index as u64);
    let k = opts.samples_per_event.max(1);
    let nulls = draw_samples(g, event, k, CausalKind::Null, &mut rng)?;
    let timelikes = draw_samples(g, event, k, CausalKind::Timelike, &mut rng)?;
    let mut dt = vec![0.0; st.dim()];
    dt[0] = 1.0;
    let minus_dt: Vec<f64> = dt.iter().map(|x| -x).collect();
    let mut timelike: Vec<(Vec<f64>, &'static str)> = vec![(dt.clone(), "+dt"), (minus_dt.clone(), "-dt")];
    timelike.extend(timelikes.iter().map(|s| (s.w.clone(), "timelike")));
    let null: Vec<(Vec<f64>, &'static str)> = nulls.iter().map(|s| (s.w.clone(), "null")).collect();
    let causal: Vec<(Vec<f64>, &'static str)> = timelike.iter().chain(null.iter()).cloned().collect();

    let quad = |m: &DMatrix<f64>, set: &[(Vec<f64>, &'static str)], sign: f64| -> Vec<Measurement> {
        set.iter()
            .map(|(w, label)| Measurement {
                margin: sign * bilinear(m, w, w),
                vectors: vec![w.clone()],
                label,
            })
            .collect()
    };
    let base = if st.kind() == SpacetimeKind::Static {
        Some(st.base_at(event)?)
    } else {
        None
    };

    let mut per_condition = Vec::with_capacity(conditions.len());
    for &c in conditions {
        let ms = match c {
            ConditionId::Sec => quad(&ric, &causal, 1.0),
            ConditionId::Ncc => quad(&ric, &null, 1.0),
            ConditionId::Rsec => quad(&ric, &causal, -1.0),
            ConditionId::Rncc => quad(&ric, &null, -1.0),
            ConditionId::Wec => quad(&einstein, &timelike, 1.0),
            ConditionId::HeSec => quad(&he, &causal, 1.0),
            ConditionId::Dec => {
                let mut out = Vec::new();
                for (i, (w1, l1)) in causal.iter().enumerate() {
                    out.push(Measurement {
                        margin: bilinear(&einstein, w1, w1),
                        vectors: vec![w1.clone(), w1.clone()],
                        label: l1,
                    });
                    if let Some((w2, _)) = causal.get(i + 2) {
                        // samples alternate orientation, so i and i+2 share a cone
                        if bilinear(g, w1, w2) <= 0.0 {
                            out.push(Measurement {
                                margin: bilinear(&einstein, w1, w2),
                                vectors: vec![w1.clone(), w2.clone()],
                                label: "pair",
                            });
                        }
                    }
                }
                out
            }
            ConditionId::SubharmonicityNecessary => match &base {
                Some(b) => vec![Measurement {
                    margin: b.calculus.laplacian,
                    vectors: Vec::new(),
                    label: "laplacian",
                }],
                None => Vec::new(),
            },
            ConditionId::ScalarNonnegNecessary => match &base {
                Some(b) => vec![Measurement {
                    margin: b.geometry.scalar,
                    vectors: Vec::new(),
                    label: "tau_F",
                }],
                None => Vec::new(),
            },
            ConditionId::SkidResidual => match &base {
                Some(b) => {
                    let d = definiteness_wrt(&b.lstar, &b.geometry.g, 0.0)?;
                    let norm = d.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
                    vec![Measurement {
                        margin: -norm,
                        vectors: Vec::new(),
                        label: "L*f",
                    }]
                }
                None => Vec::new(),
            },
        };
        per_condition.push((c, ms));
    }
    Ok(EventAudit {
        event: event.to_vec(),
        per_condition,
    })
}

const MAX_WITNESSES: usize = 8;

/// Evaluate the requested conditions on every grid event. Events are processed
/// in parallel and reduced in grid order, so the output does not depend on
/// scheduling.
pub fn audit_conditions(st: &Spacetime, conditions: &[ConditionId], opts: &AuditOptions) -> Result<Vec<ConditionReport>> {
    let events = st.sample_events(&opts.grid)?;
    let audits: Vec<EventAudit> = events
        .par_iter()
        .enumerate()
        .map(|(i, e)| audit_event(st, i, e, conditions, opts))
        .collect::<Result<Vec<_>>>()?;

    let mut reports = Vec::with_capacity(conditions.len());
    for (ci, &c) in conditions.iter().enumerate() {
        let mut min_margin: Option<f64> = None;
        let mut worst: Option<Witness> = None;
        let mut witnesses = Vec::new();
        let mut samples = 0usize;
        for a in &audits {
            let (_, ms) = &a.per_condition[ci];
            for m in ms {
                samples += 1;
                let w = || Witness {
                    event: a.event.clone(),
                    vectors: m.vectors.clone(),
                    margin: m.margin,
                    label: m.label.to_string(),
                };
                if min_margin.is_none_or(|x| m.margin < x) {
                    min_margin = Some(m.margin);
                    worst = Some(w());
                }
                if m.margin < -opts.tol && witnesses.len() < MAX_WITNESSES {
                    witnesses.push(w());
                }
            }
        }
        let verdict = match min_margin {
            None => Verdict::Inconclusive,
            Some(x) if x < -opts.tol => Verdict::Violated,
            Some(_) => Verdict::HoldsOnSamples,
        };
        if verdict == Verdict::Violated {
            if let Some(w) = worst {
                if !witnesses.contains(&w) {
                    witnesses.push(w);
                }
            }
        }
        let note = match c {
            ConditionId::SubharmonicityNecessary | ConditionId::ScalarNonnegNecessary | ConditionId::SkidResidual
                if st.kind() != SpacetimeKind::Static =>
            {
                Some("defined for standard static space-times only".to_string())
            }
            ConditionId::SubharmonicityNecessary => {
                Some("premise check only; integrability and decay hypotheses of the Liouville results are user-asserted".into())
            }
            _ => None,
        };
        reports.push(ConditionReport {
            id: c,
            verdict,
            min_margin,
            witnesses,
            events: audits.len(),
            samples,
            seed: opts.seed,
            tol: opts.tol,
            note,
        });
    }
    Ok(reports)
}

pub fn check_condition(st: &Spacetime, id: ConditionId, opts: &AuditOptions) -> Result<ConditionReport> {
    Ok(audit_conditions(st, &[id], opts)?.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TheoremId {
    /// `L*f` nsd ⇒ NCC.
    EcT1Ncc,
    /// `L*f` psd ⇒ RNCC.
    EcT1Rncc,
    /// `Ric_F`, `Q^f` psd ⇒ TCC and NCC.
    EcT2,
    /// `Ric_F`, `Q^f` nsd ⇒ RNCC and RTCC.
    EcT3,
    /// Ricci-flat `F`: `Q^f` psd ⇔ NCC.
    EcT4,
    /// `Δf < 0` somewhere ⇒ SEC impossible.
    TeC1Contrapositive,
    /// `τ_F < 0` somewhere ⇒ WEC (and DEC) impossible.
    Wec1Contrapositive,
    /// `Ric_F`, `Q^f` psd ⇒ `T(w,w) ≥ 0` on causal `w`.
    EcW1,
    /// Ricci-flat `F` and `Q^f` psd ⇒ `T(w,w) ≥ 0` for every `w`.
    EcW1Item2,
    /// `L*f` nsd and `τ_F ≥ 0` ⇒ `T(w,w) ≥ 0` on causal `w`.
    EcW2Item1,
    /// `L*f ≡ 0` ⇒ `8πT = −½ τ_F g`.
    EcW2Item2,
    /// `L*f ≡ 0` ⇒ DEC ⇔ `τ_F ≥ 0`.
    Skid1,
    /// Ricci-flat `F` ⇒ DEC ⇔ `Q^f ≡ 0`.
    Skid2,
    /// `L*f ≡ 0` and `τ_F ≥ 0` ⇒ DEC.
    EcDecSkid,
    /// `L*f` psd (with compact or complete `F` and `inf f > 0`) ⇒ `d_M ≡ 0`.
    Main12,
    /// `L*f` nsd and NGC ⇒ conformally hyperbolic.
    Main3Item1,
    /// `Ric_F` psd and `Q^f` pd ⇒ conformally hyperbolic.
    Main3Item2,
    /// `L*f` nd, `Δf ≥ 0`, NGC ⇒ hyperbolic with conjugate pairs on complete causal geodesics.
    Cor1Item1,
    /// `Ric_F` psd and `Q^f` pd ⇒ hyperbolic with conjugate pairs on complete causal geodesics.
    Cor1Item2,
    /// `Ric_F`, `Q^f` psd and `Δf/f ≥ c > 0` ⇒ conjugate pairs on long timelike geodesics and the diameter bound.
    Cor3,
    /// Concircular `f` with `φ ≤ 0`, `Ric_F` nsd, `inf f > 0` ⇒ `d_M ≡ 0`.
    Concircular1,
    /// Concircular `f` with `φ > 0`, `Ric_F` nsd ⇒ conformally hyperbolic.
    Concircular2,
    /// Flat `F` with `H^f = g_F` ⇒ conformally hyperbolic.
    HessianFiber,
}

impl TheoremId {
    pub fn statement(self) -> &'static str {
        match self {
            TheoremId::EcT1Ncc => "L*f negative semi-definite => NCC",
            TheoremId::EcT1Rncc => "L*f positive semi-definite => RNCC",
            TheoremId::EcT2 => "Ric_F and Q^f positive semi-definite => TCC and NCC",
            TheoremId::EcT3 => "Ric_F and Q^f negative semi-definite => RNCC and RTCC",
            TheoremId::EcT4 => "F Ricci flat: Q^f positive semi-definite <=> NCC",
            TheoremId::TeC1Contrapositive => "Laplacian of f negative somewhere => SEC impossible",
            TheoremId::Wec1Contrapositive => "tau_F negative somewhere => WEC and DEC impossible",
            TheoremId::EcW1 => "Ric_F and Q^f positive semi-definite => T(w,w) >= 0 for causal w",
            TheoremId::EcW1Item2 => "F Ricci flat and Q^f positive semi-definite => T(w,w) >= 0 for all w",
            TheoremId::EcW2Item1 => "L*f negative semi-definite and tau_F >= 0 => T(w,w) >= 0 for causal w",
            TheoremId::EcW2Item2 => "L*f = 0 => 8 pi T = -tau_F g / 2",
            TheoremId::Skid1 => "L*f = 0 => DEC <=> tau_F >= 0",
            TheoremId::Skid2 => "F Ricci flat => DEC <=> Q^f = 0",
            TheoremId::EcDecSkid => "L*f = 0 and tau_F >= 0 => DEC",
            TheoremId::Main12 => "L*f positive semi-definite => trivial Lorentzian pseudo-distance",
            TheoremId::Main3Item1 => "L*f negative semi-definite and NGC => conformally hyperbolic",
            TheoremId::Main3Item2 => "Ric_F positive semi-definite and Q^f positive definite => conformally hyperbolic",
            TheoremId::Cor1Item1 => {
                "L*f negative definite, f subharmonic, NGC => conformally hyperbolic, complete causal geodesics have conjugate pairs"
            }
            TheoremId::Cor1Item2 => {
                "Ric_F psd and Q^f pd => conformally hyperbolic, complete causal geodesics have conjugate pairs"
            }
            TheoremId::Cor3 => "Ric_F, Q^f psd and Laplacian(f)/f >= c > 0 => conjugate pairs on long timelike geodesics, diam_L bound",
            TheoremId::Concircular1 => "concircular f, phi <= 0, Ric_F nsd, inf f > 0 => trivial pseudo-distance",
            TheoremId::Concircular2 => "concircular f, phi > 0, Ric_F nsd => conformally hyperbolic",
            TheoremId::HessianFiber => "globally Hessian flat F with potential f => conformally hyperbolic",
        }
    }

    /// Global hypotheses the chart cannot verify.
    pub fn conditional_on(self) -> &'static [&'static str] {
        match self {
            TheoremId::Main12 => &["F compact, or F complete with inf f > 0", "I = R"],
            TheoremId::Concircular1 => &["F complete"],
            TheoremId::Cor1Item1 | TheoremId::Cor1Item2 => &["geodesic completeness"],
            TheoremId::Cor3 => &["item (3): I = R, F complete, sup f < inf"],
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    /// Strongest class shared by every sampled point (`Indefinite` if mixed).
    pub overall: DefinitenessClass,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointClassification {
    pub point: Vec<f64>,
    pub f: f64,
    pub ricci_f: DefinitenessClass,
    pub q: DefinitenessClass,
    pub lstar: DefinitenessClass,
    pub laplacian: f64,
    pub tau_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiredTheorem {
    pub id: TheoremId,
    pub statement: String,
    pub conditional_on: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisScan {
    pub points: usize,
    pub tol: f64,
    pub ricci_f: ClassSummary,
    pub q: ClassSummary,
    pub lstar: ClassSummary,
    pub laplacian_range: (f64, f64),
    pub tau_f_range: (f64, f64),
    pub f_range: (f64, f64),
    pub min_laplacian_over_f: f64,
    /// `H^f = φ g_F` on every sampled point with non-constant `f`.
    pub concircular: bool,
    pub phi_range: Option<(f64, f64)>,
    /// NGC on samples: `Ric(w,w) ≠ 0` for every null direction at every point,
    /// i.e. `L*f` negative or positive definite everywhere sampled.
    pub ngc_on_samples: bool,
    pub fired: Vec<TheoremId>,
    pub implications: Vec<FiredTheorem>,
    pub notes: Vec<String>,
    pub per_point: Vec<PointClassification>,
}

fn summarize(classes: &[(DefinitenessClass, f64, f64)]) -> ClassSummary {
    let all = |p: fn(DefinitenessClass) -> bool| classes.iter().all(|(c, _, _)| p(*c));
    let overall = if all(DefinitenessClass::is_zero) {
        DefinitenessClass::Zero
    } else if all(DefinitenessClass::is_pd) {
        DefinitenessClass::PositiveDefinite
    } else if all(DefinitenessClass::is_psd) {
        DefinitenessClass::PositiveSemi
    } else if all(DefinitenessClass::is_nd) {
        DefinitenessClass::NegativeDefinite
    } else if all(DefinitenessClass::is_nsd) {
        DefinitenessClass::NegativeSemi
    } else {
        DefinitenessClass::Indefinite
    };
    ClassSummary {
        overall,
        min_eigenvalue: classes.iter().map(|c| c.1).fold(f64::INFINITY, f64::min),
        max_eigenvalue: classes.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Classify `Ric_F`, `Q^f`, `L*f` (in a `g_F`-orthonormal frame), `Δf` and
/// `τ_F` on the grid and list the implications whose hypotheses hold at
/// every sampled point.
pub fn hypothesis_scan(st: &Spacetime, grid: &GridSpec, tol: f64) -> Result<HypothesisScan> {
    if st.kind() != SpacetimeKind::Static {
        return Err(Error::WrongKind);
    }
    let events = st.sample_events(grid)?;
    type Row = (PointClassification, [(DefinitenessClass, f64, f64); 3], Option<f64>, f64);
    let rows: Vec<Row> = events
        .par_iter()
        .map(|e| -> Result<Row> {
            let b = st.base_at(e)?;
            let g = &b.geometry.g;
            let ric = (&b.geometry.ricci + b.geometry.ricci.transpose()) * 0.5;
            let dr = definiteness_wrt(&ric, g, tol)?;
            let dq = definiteness_wrt(&b.q, g, tol)?;
            let dl = definiteness_wrt(&b.lstar, g, tol)?;
            let s = b.geometry.dim() as f64;
            let phi = b.calculus.laplacian / s;
            let resid = definiteness_wrt(&(&b.calculus.hessian - g * phi), g, 0.0)?;
            let off = resid.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
            let grad: f64 = b.calculus.grad.iter().map(|x| x.abs()).fold(0.0, f64::max);
            let ext = |d: &crate::riemann::Definiteness| {
                (d.class, d.eigenvalues[0], *d.eigenvalues.last().unwrap())
            };
            Ok((
                PointClassification {
                    point: e[1..].to_vec(),
                    f: b.calculus.value,
                    ricci_f: dr.class,
                    q: dq.class,
                    lstar: dl.class,
                    laplacian: b.calculus.laplacian,
                    tau_f: b.geometry.scalar,
                },
                [ext(&dr), ext(&dq), ext(&dl)],
                (off <= tol * (1.0 + phi.abs())).then_some(phi),
                grad,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Err(Error::BadParam("the grid has no points inside the domain".into()));
    }
    let pick = |k: usize| rows.iter().map(|r| r.1[k]).collect::<Vec<_>>();
    let ricci_f = summarize(&pick(0));
    let q = summarize(&pick(1));
    let lstar = summarize(&pick(2));
    let range = |f: &dyn Fn(&PointClassification) -> f64| {
        let vals: Vec<f64> = rows.iter().map(|r| f(&r.0)).collect();
        (
            vals.iter().cloned().fold(f64::INFINITY, f64::min),
            vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        )
    };
    let laplacian_range = range(&|p| p.laplacian);
    let tau_f_range = range(&|p| p.tau_f);
    let f_range = range(&|p| p.f);
    let min_laplacian_over_f = rows.iter().map(|r| r.0.laplacian / r.0.f).fold(f64::INFINITY, f64::min);
    let nonconstant = rows.iter().any(|r| r.3 > tol);
    let concircular = nonconstant && rows.iter().all(|r| r.2.is_some());
    let phi_range = concircular.then(|| {
        let v: Vec<f64> = rows.iter().filter_map(|r| r.2).collect();
        (
            v.iter().cloned().fold(f64::INFINITY, f64::min),
            v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        )
    });
    let s = st.dim() - 1;
    let ngc = s >= 1 && matches!(lstar.overall, DefinitenessClass::NegativeDefinite | DefinitenessClass::PositiveDefinite);

    use DefinitenessClass as D;
    let psd = |c: &ClassSummary| c.overall.is_psd();
    let nsd = |c: &ClassSummary| c.overall.is_nsd();
    let ric_flat = ricci_f.overall == D::Zero;
    let mut fired = Vec::new();
    let mut push = |cond: bool, id: TheoremId| {
        if cond {
            fired.push(id);
        }
    };
    let s2 = s >= 2;
    push(s2 && nsd(&lstar), TheoremId::EcT1Ncc);
    push(s2 && psd(&lstar), TheoremId::EcT1Rncc);
    push(s2 && psd(&ricci_f) && psd(&q), TheoremId::EcT2);
    push(s2 && nsd(&ricci_f) && nsd(&q), TheoremId::EcT3);
    push(s2 && ric_flat && psd(&q), TheoremId::EcT4);
    push(laplacian_range.0 < -tol, TheoremId::TeC1Contrapositive);
    push(tau_f_range.0 < -tol, TheoremId::Wec1Contrapositive);
    push(s2 && psd(&ricci_f) && psd(&q), TheoremId::EcW1);
    push(ric_flat && psd(&q), TheoremId::EcW1Item2);
    push(nsd(&lstar) && tau_f_range.0 >= -tol, TheoremId::EcW2Item1);
    push(lstar.overall == D::Zero, TheoremId::EcW2Item2);
    push(lstar.overall == D::Zero, TheoremId::Skid1);
    push(ric_flat, TheoremId::Skid2);
    push(lstar.overall == D::Zero && tau_f_range.0 >= -tol, TheoremId::EcDecSkid);
    push(psd(&lstar) && f_range.0 > 0.0, TheoremId::Main12);
    push(nsd(&lstar) && ngc, TheoremId::Main3Item1);
    push(psd(&ricci_f) && q.overall == D::PositiveDefinite, TheoremId::Main3Item2);
    push(lstar.overall == D::NegativeDefinite && laplacian_range.0 >= -tol && ngc, TheoremId::Cor1Item1);
    push(psd(&ricci_f) && q.overall == D::PositiveDefinite, TheoremId::Cor1Item2);
    push(psd(&ricci_f) && psd(&q) && min_laplacian_over_f > tol, TheoremId::Cor3);
    if let Some((lo, hi)) = phi_range {
        push(nsd(&ricci_f) && hi <= tol && f_range.0 > 0.0, TheoremId::Concircular1);
        push(nsd(&ricci_f) && lo > tol, TheoremId::Concircular2);
        push(ric_flat && (lo - 1.0).abs() <= tol && (hi - 1.0).abs() <= tol, TheoremId::HessianFiber);
    }
    let implications = fired
        .iter()
        .map(|id| FiredTheorem {
            id: *id,
            statement: id.statement().to_string(),
            conditional_on: id.conditional_on().iter().map(|s| s.to_string()).collect(),
        })
        .collect();
    let mut notes = vec![
        "verdicts hold on the sampled grid only; global hypotheses (completeness, compactness) are user-asserted".to_string(),
        "NGC evidence is partial: only finitely many null directions and points are sampled".to_string(),
    ];
    if nsd(&lstar) && !ngc {
        notes.push("L*f is only semi-definite; NGC could not be established on samples".into());
    }
    Ok(HypothesisScan {
        points: rows.len(),
        tol,
        ricci_f,
        q,
        lstar,
        laplacian_range,
        tau_f_range,
        f_range,
        min_laplacian_over_f,
        concircular,
        phi_range,
        ngc_on_samples: ngc,
        fired,
        implications,
        notes,
        per_point: rows.into_iter().map(|r| r.0).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkidResidual {
    /// Largest `g_F`-operator norm of `L*f` over the grid.
    pub max: f64,
    pub per_point: Vec<(Vec<f64>, f64)>,
}

pub fn skid_residual(st: &Spacetime, grid: &GridSpec) -> Result<SkidResidual> {
    if st.kind() != SpacetimeKind::Static {
        return Err(Error::WrongKind);
    }
    let events = st.sample_events(grid)?;
    let per_point = events
        .par_iter()
        .map(|e| -> Result<(Vec<f64>, f64)> {
            let b = st.base_at(e)?;
            let d = definiteness_wrt(&b.lstar, &b.geometry.g, 0.0)?;
            Ok((e[1..].to_vec(), d.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SkidResidual {
        max: per_point.iter().map(|p| p.1).fold(0.0, f64::max),
        per_point,
    })
}

/// `8π T(w1, w2)` from the direct curvature pipeline.
pub fn einstein_form(st: &Spacetime, event: &[f64], w1: &[f64], w2: &[f64]) -> Result<f64> {
    let se = st.stress_energy_at(event)?;
    Ok(8.0 * PI * bilinear(&se.t, w1, w2))
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

    #[test]
    fn null_and_timelike_samples() {
        let st = Spacetime::new_static(euclid(2, 2.0, &[("eps", 1.0)]), "0.5*(x1^2+x2^2)+eps", (-1.0, 1.0)).unwrap();
        let e = [0.0, 0.5, -0.3];
        let g = st.metric_at(&e).unwrap();
        for s in sample_causal(&st, &e, 50, CausalKind::Null, 7).unwrap() {
            assert!(bilinear(&g, &s.w, &s.w).abs() <= 1e-12);
        }
        for s in sample_causal(&st, &e, 50, CausalKind::Timelike, 7).unwrap() {
            assert!(bilinear(&g, &s.w, &s.w) < 0.0);
            assert!(s.r.abs() > 1.0 && s.r.abs() <= 3.0);
        }
        assert_eq!(
            sample_causal(&st, &e, 5, CausalKind::Null, 3).unwrap(),
            sample_causal(&st, &e, 5, CausalKind::Null, 3).unwrap()
        );
    }

    #[test]
    fn minkowski_holds_everything() {
        let st = Spacetime::new_static(euclid(3, 1.0, &[]), "1", (-1.0, 1.0)).unwrap();
        let opts = AuditOptions {
            grid: GridSpec::closed(3),
            samples_per_event: 4,
            ..Default::default()
        };
        let reps = audit_conditions(&st, &ConditionId::ALL, &opts).unwrap();
        for r in reps {
            assert_eq!(r.verdict, Verdict::HoldsOnSamples, "{:?}", r.id);
            assert_eq!(r.min_margin.unwrap(), 0.0);
        }
    }

    #[test]
    fn condition_names_round_trip() {
        for c in ConditionId::ALL {
            assert_eq!(ConditionId::parse(c.name()).unwrap(), c);
        }
        assert_eq!(ConditionId::parse("tcc").unwrap(), ConditionId::Sec);
        assert!(ConditionId::parse("XYZ").is_err());
    }

    #[test]
    fn hypothesis_scan_paraboloid() {
        let st = Spacetime::new_static(euclid(2, 1.0, &[("eps", 1.0)]), "0.5*(x1^2+x2^2)+eps", (-1.0, 1.0)).unwrap();
        let h = hypothesis_scan(&st, &GridSpec::closed(5), 1e-8).unwrap();
        assert_eq!(h.ricci_f.overall, DefinitenessClass::Zero);
        assert_eq!(h.q.overall, DefinitenessClass::PositiveDefinite);
        assert_eq!(h.lstar.overall, DefinitenessClass::NegativeDefinite);
        for t in [TheoremId::EcT2, TheoremId::Main3Item2, TheoremId::Cor1Item2, TheoremId::HessianFiber] {
            assert!(h.fired.contains(&t), "{t:?}");
        }
        assert!(!h.fired.contains(&TheoremId::Main12));
        assert!(h.concircular);
    }

    #[test]
    fn skid_residual_minkowski_is_zero() {
        let st = Spacetime::new_static(euclid(2, 1.0, &[]), "1", (-1.0, 1.0)).unwrap();
        assert_eq!(skid_residual(&st, &GridSpec::closed(3)).unwrap().max, 0.0);
    }
}
