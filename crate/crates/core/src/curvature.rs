//! Coordinate curvature pipeline shared by the Riemannian base and the
//! Lorentzian product: metric jets in, Christoffel/Riemann/Ricci/scalar out.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::jet::Jet2;

/// Expected signature of a metric handed to [`curvature_from_jets`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signature {
    Riemannian,
    Lorentzian,
}

/// Curvature data of a chart metric at one point.
///
/// Index layout: `christoffel[k][i][j] = Γ^k_ij`,
/// `riemann[l][i][j][k] = R^l_ijk` with `R^l_ijk = ∂_j Γ^l_ki − ∂_k Γ^l_ji + Γ^l_jm Γ^m_ki − Γ^l_km Γ^m_ji`,
/// so that `Ric_ik = R^j_ijk` and the unit sphere has positive Ricci curvature.
#[derive(Debug, Clone)]
pub struct GeometryAt {
    pub point: Vec<f64>,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub christoffel: Vec<f64>,
    pub riemann: Vec<f64>,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
}

/// Same layout as [`GeometryAt`]; the point is an event `(t, x)`.
pub type LorentzGeometryAt = GeometryAt;

impl GeometryAt {
    pub fn dim(&self) -> usize {
        self.point.len()
    }

    #[inline]
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.dim();
        self.christoffel[(k * n + i) * n + j]
    }

    #[inline]
    pub fn riem(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim();
        self.riemann[((l * n + i) * n + j) * n + k]
    }

    /// `g(a, b)`.
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        bilinear(&self.g, a, b)
    }

    /// `Ric(a, b)`.
    pub fn ricci_form(&self, a: &[f64], b: &[f64]) -> f64 {
        bilinear(&self.ricci, a, b)
    }

    /// Components of `R(x, y) z`, i.e. `R^l_ijk z^i x^j y^k`.
    pub fn riemann_apply(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for (l, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..n {
                if z[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    if x[j] == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        acc += self.riem(l, i, j, k) * z[i] * x[j] * y[k];
                    }
                }
            }
            *o = acc;
        }
        out
    }

    /// Largest violation of the first Bianchi identity `R^l_ijk + R^l_jki + R^l_kij = 0`.
    pub fn bianchi_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let s = self.riem(l, i, j, k) + self.riem(l, j, k, i) + self.riem(l, k, i, j);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

pub fn bilinear(m: &DMatrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut acc = 0.0;
    for i in 0..n {
        if a[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            acc += m[(i, j)] * a[i] * b[j];
        }
    }
    acc
}

pub(crate) fn check_signature(g: &DMatrix<f64>, point: &[f64], sig: Signature) -> Result<()> {
    let eig = SymmetricEigen::new(g.clone());
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let smallest = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    match sig {
        Signature::Riemannian => {
            if !(smallest > 1e-14 * scale) {
                return Err(Error::MetricNotSpd {
                    point: point.to_vec(),
                    smallest,
                });
            }
        }
        Signature::Lorentzian => {
            let negatives = eig.eigenvalues.iter().filter(|&&l| l < 0.0).count();
            let tiny = eig.eigenvalues.iter().any(|l| l.abs() <= 1e-14 * scale);
            if negatives != 1 || tiny {
                return Err(Error::MetricDegenerate(point.to_vec()));
            }
        }
    }
    Ok(())
}

/// Christoffel symbols only, from first derivatives of the metric.
pub fn christoffel_from_jets(jets: &[Jet2], n: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let g = DMatrix::from_fn(n, n, |i, j| jets[i * n + j].value);
    let g_inv = g.clone().try_inverse().ok_or_else(|| Error::MetricDegenerate(Vec::new()))?;
    let dg = |m: usize, i: usize, j: usize| jets[i * n + j].grad[m];
    let mut lower = vec![0.0; n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in i..n {
                let v = 0.5 * (dg(i, j, l) + dg(j, i, l) - dg(l, i, j));
                lower[(l * n + i) * n + j] = v;
                lower[(l * n + j) * n + i] = v;
            }
        }
    }
    let mut gamma = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += g_inv[(k, l)] * lower[(l * n + i) * n + j];
                }
                gamma[(k * n + i) * n + j] = acc;
                gamma[(k * n + j) * n + i] = acc;
            }
        }
    }
    Ok((g_inv, gamma))
}

/// Full curvature from the order-2 jets of the metric components.
///
/// `jets` is the full `n × n` row-major matrix of component jets in `n` variables.
pub fn curvature_from_jets(point: &[f64], jets: &[Jet2], sig: Signature) -> Result<GeometryAt> {
    let n = point.len();
    let g = DMatrix::from_fn(n, n, |i, j| jets[i * n + j].value);
    check_signature(&g, point, sig)?;
    let (g_inv, gamma) = christoffel_from_jets(jets, n).map_err(|_| Error::MetricDegenerate(point.to_vec()))?;

    let idx3 = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
    let dg = |m: usize, i: usize, j: usize| jets[i * n + j].grad[m];
    let ddg = |m: usize, p: usize, i: usize, j: usize| jets[i * n + j].h(m, p);

    // ∂_m g^{kl} = -g^{ka} ∂_m g_ab g^{bl}
    let mut dginv = vec![0.0; n * n * n];
    for m in 0..n {
        for k in 0..n {
            for l in 0..n {
                let mut acc = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        acc -= g_inv[(k, a)] * dg(m, a, b) * g_inv[(b, l)];
                    }
                }
                dginv[idx3(m, k, l)] = acc;
            }
        }
    }

    let mut lower = vec![0.0; n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                lower[idx3(l, i, j)] = 0.5 * (dg(i, j, l) + dg(j, i, l) - dg(l, i, j));
            }
        }
    }

    // dgamma[m][k][i][j] = ∂_m Γ^k_ij
    let mut dgamma = vec![0.0; n * n * n * n];
    for m in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        let dlower = 0.5 * (ddg(m, i, j, l) + ddg(m, j, i, l) - ddg(m, l, i, j));
                        acc += dginv[idx3(m, k, l)] * lower[idx3(l, i, j)] + g_inv[(k, l)] * dlower;
                    }
                    dgamma[((m * n + k) * n + i) * n + j] = acc;
                    dgamma[((m * n + k) * n + j) * n + i] = acc;
                }
            }
        }
    }
    let dgam = |m: usize, k: usize, i: usize, j: usize| dgamma[((m * n + k) * n + i) * n + j];
    let gam = |k: usize, i: usize, j: usize| gamma[idx3(k, i, j)];

    let mut riemann = vec![0.0; n * n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut v = dgam(j, l, k, i) - dgam(k, l, j, i);
                    for m in 0..n {
                        v += gam(l, j, m) * gam(m, k, i) - gam(l, k, m) * gam(m, j, i);
                    }
                    riemann[((l * n + i) * n + j) * n + k] = v;
                }
            }
        }
    }

    let ricci = DMatrix::from_fn(n, n, |i, k| (0..n).map(|j| riemann[((j * n + i) * n + j) * n + k]).sum());
    let scalar = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| g_inv[(i, j)] * ricci[(i, j)])
        .sum();

    Ok(GeometryAt {
        point: point.to_vec(),
        g,
        g_inv,
        christoffel: gamma,
        riemann,
        ricci,
        scalar,
    })
}
