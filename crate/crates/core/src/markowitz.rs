//! Projective parameters along null geodesics and Poincaré-length upper
//! bounds on the Lorentzian pseudo-distance.
//!
//! The projective parameter is `p = y1 / y2` for two solutions of
//! `y'' − Ric(γ', γ') / (n−2) · y = 0`. Rather than tracking `p` itself, which
//! passes through `∞`, the code follows the unwrapped angle
//! `θ = atan2(y1, y2)` on `RP¹`. It is strictly monotone because the Wronskian
//! is constant. A sweep of at least `π` means the image covers the whole
//! projective line, and the segment gets the value 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::auditor::{hypothesis_scan, HypothesisScan, TheoremId};
use crate::error::{Error, Result};
use crate::geodesics::{geodesic_acceleration, GeodesicOptions};
use crate::grid::GridSpec;
use crate::ode::{integrate, OdeOptions, OdeSolution, Stop};
use crate::spacetime::{classify_with, CausalKind, Spacetime, SpacetimeKind};

/// `½ |log((1+u1)/(1−u1) · (1−u0)/(1+u0))|`.
pub fn poincare_distance(u0: f64, u1: f64) -> Result<f64> {
    for u in [u0, u1] {
        if u.is_nan() || u.abs() >= 1.0 {
            return Err(Error::OutOfInterval(u));
        }
    }
    Ok((u1.atanh() - u0.atanh()).abs())
}

/// Sign of the coupling in the linear reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SchwarzianSign {
    /// `y'' − Ric/(n−2) · y = 0`, i.e. `{p; r} = −Ric/(n−2)`.
    #[default]
    MinusRicci,
    /// `y'' + Ric/(n−2) · y = 0`, the opposite coupling.
    PlusRicci,
}

impl SchwarzianSign {
    fn factor(self) -> f64 {
        match self {
            SchwarzianSign::MinusRicci => 1.0,
            SchwarzianSign::PlusRicci => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectiveOptions {
    pub geodesic: GeodesicOptions,
    pub sign: SchwarzianSign,
    /// Initial data `(y1, y1')` and `(y2, y2')` at `r0`.
    pub basis: [(f64, f64); 2],
}

impl Default for ProjectiveOptions {
    fn default() -> Self {
        ProjectiveOptions {
            geodesic: GeodesicOptions::default(),
            sign: SchwarzianSign::MinusRicci,
            basis: [(0.0, 1.0), (1.0, 0.0)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RangeFlags {
    FiniteBoth,
    InfiniteLeft,
    InfiniteRight,
    InfiniteBoth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quality {
    ExactRange,
    SpanLimited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveSample {
    pub r: f64,
    pub event: Vec<f64>,
    pub y1: f64,
    pub y2: f64,
    /// `y1 / y2` (infinite at zeros of `y2`).
    pub p: f64,
    /// Unwrapped `atan2(y1, y2)`, oriented to increase with `r`.
    pub theta: f64,
}

#[derive(Debug, Clone)]
pub struct ProjectiveParam {
    pub r0: f64,
    /// Parameter range actually integrated.
    pub r_range: (f64, f64),
    pub requested: (f64, f64),
    pub samples: Vec<ProjectiveSample>,
    pub theta_range: (f64, f64),
    pub p_range: (f64, f64),
    pub flags: RangeFlags,
    /// Angle converged at the (left, right) end.
    pub converged: (bool, bool),
    /// Chart exits at the (left, right) end.
    pub exits: (Option<f64>, Option<f64>),
    pub sign: SchwarzianSign,
    n: usize,
    orientation: f64,
    forward: OdeSolution,
    backward: Option<OdeSolution>,
}

impl ProjectiveParam {
    pub fn sweep(&self) -> f64 {
        self.theta_range.1 - self.theta_range.0
    }

    fn state_at(&self, r: f64) -> Option<Vec<f64>> {
        if r >= self.r0 {
            self.forward.eval(r)
        } else {
            self.backward.as_ref().and_then(|b| b.eval(r))
        }
    }

    pub fn event_at(&self, r: f64) -> Option<Vec<f64>> {
        self.state_at(r).map(|y| y[..self.n].to_vec())
    }

    /// Oriented angle at `r`, unwrapped against the nearest stored sample.
    pub fn theta_at(&self, r: f64) -> Result<f64> {
        let y = self.state_at(r).ok_or(Error::OutOfInterval(r))?;
        let raw = self.orientation * y[2 * self.n].atan2(y[2 * self.n + 2]);
        let idx = self.samples.partition_point(|s| s.r < r);
        let near = if idx == 0 {
            &self.samples[0]
        } else if idx == self.samples.len() {
            &self.samples[idx - 1]
        } else if (self.samples[idx].r - r).abs() < (r - self.samples[idx - 1].r).abs() {
            &self.samples[idx]
        } else {
            &self.samples[idx - 1]
        };
        Ok(near.theta + wrap(raw - near.theta))
    }

    pub fn p_at(&self, r: f64) -> Result<f64> {
        let y = self.state_at(r).ok_or(Error::OutOfInterval(r))?;
        Ok(y[2 * self.n] / y[2 * self.n + 2])
    }

    /// First `r` (going outward from `r0` in the direction of `toward`) where
    /// `g(event)` changes sign, refined by bisection on the dense output.
    pub fn find_parameter<G: Fn(&[f64]) -> f64>(&self, g: G, forward: bool) -> Option<f64> {
        let sols: Vec<&OdeSolution> = if forward {
            vec![&self.forward]
        } else {
            self.backward.iter().collect()
        };
        let sol = sols.first()?;
        let n = self.n;
        let mut prev = (sol.nodes[0].0, g(&sol.nodes[0].1[..n]));
        for (r, y) in sol.nodes.iter().skip(1) {
            let v = g(&y[..n]);
            if v == 0.0 {
                return Some(*r);
            }
            if prev.1.signum() != v.signum() {
                let (mut a, mut b, fa) = (prev.0, *r, prev.1);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m == a || m == b {
                        break;
                    }
                    let fm = g(&sol.eval(m)?[..n]);
                    if fm.signum() == fa.signum() {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                return Some(0.5 * (a + b));
            }
            prev = (*r, v);
        }
        None
    }
}

fn wrap(d: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut x = d % two_pi;
    if x > std::f64::consts::PI {
        x -= two_pi;
    } else if x <= -std::f64::consts::PI {
        x += two_pi;
    }
    x
}

struct Leg {
    sol: OdeSolution,
    nodes: Vec<(f64, Vec<f64>)>,
    exit: Option<f64>,
}

fn integrate_leg(
    st: &Spacetime,
    y0: &[f64],
    r0: f64,
    r1: f64,
    sign: SchwarzianSign,
    opts: &OdeOptions,
    outputs: &[f64],
) -> Result<Leg> {
    let n = st.dim();
    let coupling = sign.factor() / (n as f64 - 2.0);
    let rhs = |_r: f64, y: &[f64], d: &mut [f64]| -> Result<()> {
        let (x, v) = (&y[..n], &y[n..2 * n]);
        d[..n].copy_from_slice(v);
        geodesic_acceleration(st, x, v, &mut d[n..2 * n])?;
        let geo = st.lorentz_geometry_at(x)?;
        let q = coupling * geo.ricci_form(v, v);
        d[2 * n] = y[2 * n + 1];
        d[2 * n + 1] = q * y[2 * n];
        d[2 * n + 2] = y[2 * n + 3];
        d[2 * n + 3] = q * y[2 * n + 2];
        Ok(())
    };
    let sol = integrate(rhs, r0, y0, r1, outputs, |_, y| st.contains(&y[..n]), opts)?;
    let exit = match sol.stop {
        Stop::Completed => None,
        Stop::Exited { t_exit } => Some(t_exit),
    };
    let mut nodes = sol.nodes.clone();
    if let Some(r) = exit {
        if let Some(y) = sol.eval(r) {
            if nodes.last().map(|(t, _)| *t) != Some(r) {
                nodes.push((r, y));
            }
        }
    }
    Ok(Leg { sol, nodes, exit })
}

/// Projective parameter along the null geodesic through `event` with initial
/// velocity `velocity` at `r0`, integrated over `span = (r_lo, r_hi)`
/// (`r_lo ≤ r0 ≤ r_hi`).
pub fn projective_parameter(
    st: &Spacetime,
    event: &[f64],
    velocity: &[f64],
    r0: f64,
    span: (f64, f64),
    opts: &ProjectiveOptions,
) -> Result<ProjectiveParam> {
    let n = st.dim();
    if n < 3 {
        return Err(Error::BadParam("projective parameters need n ≥ 3".into()));
    }
    if !(span.0 <= r0 && r0 <= span.1) {
        return Err(Error::BadParam(format!("r0 = {r0} is outside the span {span:?}")));
    }
    if !st.contains(event) {
        return Err(Error::Domain(format!("event {event:?} is outside the chart")));
    }
    let g = st.metric_at(event)?;
    let norm = crate::curvature::bilinear(&g, velocity, velocity);
    let scale: f64 = (0..n).map(|i| g[(i, i)].abs() * velocity[i] * velocity[i]).sum();
    if norm.abs() > 1e-10 * scale.max(1e-300) || classify_with(&g, velocity, 1e-10) != CausalKind::Null {
        return Err(Error::NotNull(norm));
    }
    let [(a, da), (b, db)] = opts.basis;
    let wronskian = a * db - da * b;
    if wronskian == 0.0 {
        return Err(Error::BadParam("projective basis is degenerate".into()));
    }
    let mut y0 = event.to_vec();
    y0.extend_from_slice(velocity);
    y0.extend_from_slice(&[a, da, b, db]);
    let ode = opts.geodesic.ode();
    let forward = integrate_leg(st, &y0, r0, span.1, opts.sign, &ode, &[])?;
    let backward = if span.0 < r0 {
        Some(integrate_leg(st, &y0, r0, span.0, opts.sign, &ode, &[])?)
    } else {
        None
    };
    // θ' = −W / (y1² + y2²) for θ = atan2(y1, y2) and W = y1 y2' − y1' y2;
    // orient so θ increases.
    let orientation = if wronskian > 0.0 { -1.0 } else { 1.0 };

    let make = |r: f64, y: &[f64], theta: f64| ProjectiveSample {
        r,
        event: y[..n].to_vec(),
        y1: y[2 * n],
        y2: y[2 * n + 2],
        p: y[2 * n] / y[2 * n + 2],
        theta,
    };
    let unwrap_leg = |nodes: &[(f64, Vec<f64>)]| -> Vec<ProjectiveSample> {
        let mut out = Vec::with_capacity(nodes.len());
        let mut prev: Option<f64> = None;
        for (r, y) in nodes {
            let raw = orientation * y[2 * n].atan2(y[2 * n + 2]);
            let th = match prev {
                None => raw,
                Some(p) => p + wrap(raw - p),
            };
            prev = Some(th);
            out.push(make(*r, y, th));
        }
        out
    };
    let fwd = unwrap_leg(&forward.nodes);
    let mut samples: Vec<ProjectiveSample> = match &backward {
        Some(b) => {
            let mut s = unwrap_leg(&b.nodes);
            s.reverse();
            s.pop();
            s
        }
        None => Vec::new(),
    };
    samples.extend(fwd);

    let first = samples.first().unwrap();
    let last = samples.last().unwrap();
    let theta_range = (first.theta, last.theta);
    let r_range = (first.r, last.r);
    let converged_end = |leg: &Leg, left: bool| -> bool {
        let nodes = &leg.nodes;
        let (r_end, _) = nodes.last().unwrap();
        let r_mark = r0 + 0.9 * (r_end - r0);
        let th: Vec<f64> = if left {
            samples.iter().filter(|s| s.r <= r_mark).map(|s| s.theta).collect()
        } else {
            samples.iter().filter(|s| s.r >= r_mark).map(|s| s.theta).collect()
        };
        if th.len() < 2 || (r_end - r0) == 0.0 {
            return false;
        }
        let lo = th.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = th.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo <= 1e-9
    };
    let converged = (
        backward.as_ref().is_some_and(|b| converged_end(b, true)),
        converged_end(&forward, false),
    );

    // infinite ends: a zero of y2 on that side, or |p| > 1e8
    let half = std::f64::consts::FRAC_PI_2;
    let theta0 = samples.iter().find(|s| s.r == r0).map(|s| s.theta).unwrap_or(0.0);
    let left_inf = samples.iter().filter(|s| s.r <= r0).any(|s| s.p.abs() > 1e8 || !s.p.is_finite())
        || crosses_pole(theta0, theta_range.0, half);
    let right_inf = samples.iter().filter(|s| s.r >= r0).any(|s| s.p.abs() > 1e8 || !s.p.is_finite())
        || crosses_pole(theta0, theta_range.1, half);
    let flags = match (left_inf, right_inf) {
        (false, false) => RangeFlags::FiniteBoth,
        (true, false) => RangeFlags::InfiniteLeft,
        (false, true) => RangeFlags::InfiniteRight,
        (true, true) => RangeFlags::InfiniteBoth,
    };
    let p_lo = samples.iter().map(|s| s.p).filter(|p| p.is_finite()).fold(f64::INFINITY, f64::min);
    let p_hi = samples.iter().map(|s| s.p).filter(|p| p.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let p_range = (
        if left_inf { f64::NEG_INFINITY } else { p_lo },
        if right_inf { f64::INFINITY } else { p_hi },
    );

    Ok(ProjectiveParam {
        r0,
        r_range,
        requested: span,
        samples,
        theta_range,
        p_range,
        flags,
        converged,
        exits: (backward.as_ref().and_then(|b| b.exit), forward.exit),
        sign: opts.sign,
        n,
        orientation,
        forward: forward.sol,
        backward: backward.map(|b| b.sol),
    })
}

/// Whether the unwrapped angle passes an odd multiple of `π/2` (a zero of `y2`)
/// between `from` and `to`.
fn crosses_pole(from: f64, to: f64, half: f64) -> bool {
    let (a, b) = if from <= to { (from, to) } else { (to, from) };
    // poles at θ = half + kπ
    let k = ((a - half) / std::f64::consts::PI).ceil();
    half + k * std::f64::consts::PI <= b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentDistance {
    pub value: f64,
    pub quality: Quality,
    pub flags: RangeFlags,
    pub theta_range: (f64, f64),
    /// Normalized coordinates in `(−1, 1)`; absent when the sweep covers `RP¹`.
    pub u: Option<(f64, f64)>,
    pub span: (f64, f64),
}

/// Poincaré length of `[r_a, r_b]` after mapping the projective image of the
/// integrated span onto `(−1, 1)`.
pub fn segment_distance(pp: &ProjectiveParam, r_a: f64, r_b: f64) -> Result<SegmentDistance> {
    let (lo, hi) = pp.r_range;
    for r in [r_a, r_b] {
        if !(r >= lo && r <= hi) {
            return Err(Error::OutOfInterval(r));
        }
    }
    let quality = if pp.converged.0 && pp.converged.1 {
        Quality::ExactRange
    } else {
        Quality::SpanLimited
    };
    let sweep = pp.sweep();
    if sweep >= std::f64::consts::PI {
        return Ok(SegmentDistance {
            value: 0.0,
            quality: Quality::SpanLimited,
            flags: pp.flags,
            theta_range: pp.theta_range,
            u: None,
            span: pp.r_range,
        });
    }
    let centre = 0.5 * (pp.theta_range.0 + pp.theta_range.1);
    let t_half = (0.5 * sweep).tan();
    let u = |r: f64| -> Result<f64> { Ok((pp.theta_at(r)? - centre).tan() / t_half) };
    let (ua, ub) = (u(r_a)?, u(r_b)?);
    Ok(SegmentDistance {
        value: poincare_distance(ua, ub)?,
        quality,
        flags: pp.flags,
        theta_range: pp.theta_range,
        u: Some((ua, ub)),
        span: pp.r_range,
    })
}

/// One null segment of a chain: the geodesic from `start` with spatial
/// direction `direction`, followed from `r = 0` to `r = r_end`, with its
/// projective range taken over `span`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSegment {
    pub start: Vec<f64>,
    pub direction: Vec<f64>,
    #[serde(default = "default_future")]
    pub future: bool,
    pub r_end: f64,
    pub span: (f64, f64),
}

fn default_future() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub segments: Vec<ChainSegment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    /// Upper bound on `d_M` between the chain's end points.
    pub value: f64,
    pub segments: Vec<SegmentDistance>,
    pub events: Vec<Vec<f64>>,
}

pub fn chain_distance(st: &Spacetime, chain: &ChainSpec, opts: &ProjectiveOptions) -> Result<ChainReport> {
    if chain.segments.is_empty() {
        return Err(Error::InvalidChain("chain has no segments".into()));
    }
    let mut total = 0.0;
    let mut parts = Vec::new();
    let mut events = vec![chain.segments[0].start.clone()];
    let mut prev_end: Option<Vec<f64>> = None;
    for (i, seg) in chain.segments.iter().enumerate() {
        if let Some(p) = &prev_end {
            let gap = p.iter().zip(&seg.start).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if gap > 1e-6 * (1.0 + p.iter().map(|x| x.abs()).fold(0.0, f64::max)) {
                return Err(Error::InvalidChain(format!("segment {i} starts {gap:.3e} away from the previous end")));
            }
        }
        if !(seg.span.0 <= 0.0 && seg.r_end <= seg.span.1 && seg.r_end >= seg.span.0) {
            return Err(Error::InvalidChain(format!("segment {i}: r_end must lie in the span and the span must contain 0")));
        }
        let w = st.null_initial(&seg.start, &seg.direction, seg.future)?;
        let pp = projective_parameter(st, &seg.start, &w, 0.0, seg.span, opts)?;
        let end = pp
            .event_at(seg.r_end)
            .ok_or_else(|| Error::InvalidChain(format!("segment {i} leaves the chart before r_end")))?;
        let d = segment_distance(&pp, 0.0, seg.r_end)?;
        total += d.value;
        parts.push(d);
        events.push(end.clone());
        prev_end = Some(end);
    }
    Ok(ChainReport {
        value: total,
        segments: parts,
        events,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchwarzianCheck {
    pub points: usize,
    pub max_residual: f64,
    /// `(r, lhs, rhs)` at every checked point.
    pub values: Vec<(f64, f64, f64)>,
}

/// Finite-difference check of `½ p'''/p' − ¾ (p''/p')² = ∓Ric/(n−2)` on an
/// evenly spaced grid of step `h` over `[r0, r0 + length]`. States are taken
/// at exactly landed integrator steps. At each stencil centre the quotient
/// is taken in the basis normalized there, a Möbius image of `p` with the
/// same Schwarzian.
pub fn schwarzian_self_check(
    st: &Spacetime,
    event: &[f64],
    velocity: &[f64],
    length: f64,
    h: f64,
    opts: &ProjectiveOptions,
) -> Result<SchwarzianCheck> {
    let n = st.dim();
    let m = (length / h).floor() as usize;
    if m < 7 {
        return Err(Error::BadParam("self-check needs at least 7 stencil points".into()));
    }
    let outputs: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
    let mut y0 = event.to_vec();
    y0.extend_from_slice(velocity);
    let [(a, da), (b, db)] = opts.basis;
    y0.extend_from_slice(&[a, da, b, db]);
    let ode = opts.geodesic.ode();
    let leg = integrate_leg(st, &y0, 0.0, outputs[m], opts.sign, &ode, &outputs)?;
    let states = &leg.sol.outputs;
    let target_factor = -opts.sign.factor() / (n as f64 - 2.0);
    let mut values = Vec::new();
    let mut worst: f64 = 0.0;
    for c in 3..states.len().saturating_sub(3) {
        let window = &states[c - 3..=c + 3];
        // Renormalize the basis at the centre (Y2 = 1, Y2' = 0, Y1 = 0, Y1' = 1):
        // q = Y1/Y2 is a Möbius image of p with the same Schwarzian and no
        // pole near the stencil.
        let yc = &window[3].1;
        let (y1, dy1, y2, dy2) = (yc[2 * n], yc[2 * n + 1], yc[2 * n + 2], yc[2 * n + 3]);
        let det = y1 * dy2 - y2 * dy1;
        // [y1 y2; y1' y2'] (α, β) = target
        let solve = |a: f64, b: f64| ((a * dy2 - b * y2) / det, (y1 * b - dy1 * a) / det);
        let (a1, b1) = solve(0.0, 1.0);
        let (a2, b2) = solve(1.0, 0.0);
        let f: Vec<f64> = window
            .iter()
            .map(|(_, y)| (a1 * y[2 * n] + b1 * y[2 * n + 2]) / (a2 * y[2 * n] + b2 * y[2 * n + 2]))
            .collect();
        let d1 = (-f[0] + 9.0 * f[1] - 45.0 * f[2] + 45.0 * f[4] - 9.0 * f[5] + f[6]) / (60.0 * h);
        let d2 = (2.0 * f[0] - 27.0 * f[1] + 270.0 * f[2] - 490.0 * f[3] + 270.0 * f[4] - 27.0 * f[5] + 2.0 * f[6])
            / (180.0 * h * h);
        let d3 = (f[0] - 8.0 * f[1] + 13.0 * f[2] - 13.0 * f[4] + 8.0 * f[5] - f[6]) / (8.0 * h * h * h);
        let lhs = 0.5 * d3 / d1 - 0.75 * (d2 / d1).powi(2);
        let (r, y) = &window[3];
        let geo = st.lorentz_geometry_at(&y[..n])?;
        let rhs = target_factor * geo.ricci_form(&y[n..2 * n], &y[n..2 * n]);
        let res = (lhs - rhs).abs() / (1.0 + rhs.abs());
        worst = worst.max(res);
        values.push((*r, lhs, rhs));
    }
    Ok(SchwarzianCheck {
        points: values.len(),
        max_residual: worst,
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeGeodesic {
    pub start: Vec<f64>,
    pub velocity: Vec<f64>,
    pub r_range: (f64, f64),
    pub sweep_over_pi: f64,
    pub flags: RangeFlags,
    pub bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub triviality_route: bool,
    pub hyperbolicity_route: bool,
    pub geodesics: Vec<ProbeGeodesic>,
    pub bounded_fraction: f64,
    /// `true` when the sampled ranges point the same way as the fired route.
    pub consistent: Option<bool>,
    pub notes: Vec<String>,
    pub hypotheses: HypothesisScan,
}

/// Hypothesis scan plus projective ranges of `n_geodesics` null geodesics
/// started at seeded grid events in seeded directions.
pub fn hyperbolicity_probe(
    st: &Spacetime,
    grid: &GridSpec,
    n_geodesics: usize,
    span: f64,
    seed: u64,
    tol: f64,
    opts: &ProjectiveOptions,
) -> Result<ProbeReport> {
    if st.kind() != SpacetimeKind::Static {
        return Err(Error::WrongKind);
    }
    let scan = hypothesis_scan(st, grid, tol)?;
    let events: Vec<Vec<f64>> = st.sample_events(grid)?.into_iter().filter(|e| st.contains(e)).collect();
    if events.is_empty() {
        return Err(Error::BadParam("no interior grid events to start geodesics from".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = st.dim() - 1;
    let mut geos = Vec::with_capacity(n_geodesics);
    for _ in 0..n_geodesics {
        let e = events[rng.random_range(0..events.len())].clone();
        let v: Vec<f64> = (0..s).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let w = st.null_initial(&e, &v, true)?;
        let pp = projective_parameter(st, &e, &w, 0.0, (-0.5 * span, 0.5 * span), opts)?;
        let sweep = pp.sweep() / std::f64::consts::PI;
        geos.push(ProbeGeodesic {
            start: e,
            velocity: w,
            r_range: pp.r_range,
            sweep_over_pi: sweep,
            flags: pp.flags,
            bounded: pp.flags == RangeFlags::FiniteBoth,
        });
    }
    let bounded = geos.iter().filter(|g| g.bounded).count() as f64 / geos.len().max(1) as f64;
    let triviality = scan.fired.contains(&TheoremId::Main12);
    let hyperbolic = scan.fired.contains(&TheoremId::Main3Item2) || scan.fired.contains(&TheoremId::Main3Item1);
    let consistent = match (triviality, hyperbolic) {
        (true, false) => Some(geos.iter().all(|g| !g.bounded || g.sweep_over_pi > 0.5)),
        (false, true) => Some(bounded == 1.0),
        _ => None,
    };
    let mut notes = vec![
        "sampled ranges are span-limited; finite spans cannot certify an unbounded range".to_string(),
    ];
    if triviality {
        notes.push("triviality route also assumes completeness of F and inf f > 0 (user-asserted)".into());
    }
    Ok(ProbeReport {
        triviality_route: triviality,
        hyperbolicity_route: hyperbolic,
        geodesics: geos,
        bounded_fraction: bounded,
        consistent,
        notes,
        hypotheses: scan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riemann::ChartManifold;

    fn euclid(s: usize, half: f64) -> ChartManifold {
        let names: Vec<String> = (1..=s).map(|i| format!("x{i}")).collect();
        let coords: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let metric: Vec<Vec<String>> = (0..s)
            .map(|i| (i..s).map(|j| if i == j { "1".into() } else { "0".into() }).collect())
            .collect();
        ChartManifold::from_strings(&coords, vec![(-half, half); s], &metric, &[], &[]).unwrap()
    }

    #[test]
    fn poincare_distance_examples() {
        assert_eq!(poincare_distance(0.0, 0.0).unwrap(), 0.0);
        assert!((poincare_distance(0.0, 0.5).unwrap() - 0.5 * 3f64.ln()).abs() < 1e-15);
        assert!(matches!(poincare_distance(1.0, 0.0), Err(Error::OutOfInterval(_))));
    }

    #[test]
    fn minkowski_parameter_is_affine() {
        let st = Spacetime::new_static(euclid(2, 1e3), "1", (f64::NEG_INFINITY, f64::INFINITY)).unwrap();
        let w = st.null_initial(&[0.0, 0.0, 0.0], &[1.0, 0.0], true).unwrap();
        let pp = projective_parameter(&st, &[0.0, 0.0, 0.0], &w, 0.0, (-5.0, 5.0), &Default::default()).unwrap();
        for s in &pp.samples {
            assert!((s.p - s.r).abs() < 1e-12);
        }
        assert_eq!(pp.flags, RangeFlags::FiniteBoth);
        let d = segment_distance(&pp, 0.0, 1.0).unwrap();
        // range (−5, 5): ρ = atanh(1/5)
        assert!((d.value - (0.2f64).atanh()).abs() < 1e-10);
        assert_eq!(d.quality, Quality::SpanLimited);
    }

    #[test]
    fn sweep_is_positive_for_either_basis_orientation() {
        let st = Spacetime::new_static(euclid(2, 1e3), "1", (f64::NEG_INFINITY, f64::INFINITY)).unwrap();
        let w = st.null_initial(&[0.0, 0.0, 0.0], &[1.0, 0.0], true).unwrap();
        for basis in [[(0.0, 1.0), (1.0, 0.0)], [(1.0, 0.0), (0.0, 1.0)], [(2.0, -1.0), (0.5, 3.0)]] {
            let opts = ProjectiveOptions {
                basis,
                ..Default::default()
            };
            let pp = projective_parameter(&st, &[0.0, 0.0, 0.0], &w, 0.0, (-5.0, 5.0), &opts).unwrap();
            assert!(pp.sweep() > 0.0 && pp.sweep() < std::f64::consts::PI);
            for pair in pp.samples.windows(2) {
                assert!(pair[1].theta > pair[0].theta);
            }
        }
    }

    #[test]
    fn not_null_is_rejected() {
        let st = Spacetime::new_static(euclid(2, 10.0), "1", (f64::NEG_INFINITY, f64::INFINITY)).unwrap();
        assert!(matches!(
            projective_parameter(&st, &[0.0, 0.0, 0.0], &[1.0, 0.5, 0.0], 0.0, (0.0, 1.0), &Default::default()),
            Err(Error::NotNull(_))
        ));
    }

    #[test]
    fn pole_crossing() {
        let h = std::f64::consts::FRAC_PI_2;
        assert!(!crosses_pole(0.0, 1.5, h));
        assert!(crosses_pole(0.0, 1.6, h));
        assert!(crosses_pole(0.0, -1.6, h));
        assert!(!crosses_pole(0.0, -1.5, h));
    }
}
