//! Frenet apparatus `(T, N, B, κ, τ)` of a discrete non-lightlike curve.
//!
//! The derivative equations are
//!
//! ```text
//! T' = κ N,   N' = ε_B κ T + τ B,   B' = ε_T τ N
//! ```
//!
//! with `ε_X = <X, X>`, `N` along `+T'` and `B = T ×_L N`.

use serde::{Deserialize, Serialize};

use crate::curve::{derivative, DiscreteCurve, FieldKind, Topology};
use crate::error::{Result, VfeError};
use crate::frames::{CausalCase, FrameCoefficientMatrix};
use crate::lorentz::{classify, lorentz_cross, CausalClass, MVector, MetricSign};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrenetApparatus {
    pub t: Vec<MVector>,
    pub n: Vec<MVector>,
    pub b: Vec<MVector>,
    pub kappa: Vec<f64>,
    pub tau: Vec<f64>,
    /// Metric signs `(ε_T, ε_N, ε_B)`. `ε_N` and `ε_B` are meaningless when
    /// no sample is defined.
    pub eps: [MetricSign; 3],
    /// Whether `N`, `B` and `τ` could be computed at each sample.
    pub defined: Vec<bool>,
    pub ds: f64,
    pub topology: Topology,
}

impl FrenetApparatus {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn all_defined(&self) -> bool {
        self.defined.iter().all(|d| *d)
    }

    pub fn any_defined(&self) -> bool {
        self.defined.iter().any(|d| *d)
    }

    /// The parallel-frame case implied by the sign pattern, if the frame is
    /// defined anywhere.
    pub fn case(&self) -> Option<CausalCase> {
        if self.any_defined() {
            CausalCase::from_signs(self.eps)
        } else {
            None
        }
    }

    /// The analytic coefficient matrix built from `(κ, τ, ε_T, ε_B)`.
    pub fn matrix(&self, i: usize) -> FrameCoefficientMatrix {
        frenet_matrix(self.kappa[i], self.tau[i], self.eps)
    }
}

/// Coefficient matrix of the Frenet–Serret equations for the given signs.
pub fn frenet_matrix(kappa: f64, tau: f64, eps: [MetricSign; 3]) -> FrameCoefficientMatrix {
    let (et, eb) = (eps[0].value(), eps[2].value());
    FrameCoefficientMatrix::new(
        [[0.0, kappa, 0.0], [eb * kappa, 0.0, tau], [0.0, et * tau, 0.0]],
        eps,
    )
}

/// Centered derivative of the unit tangent with its component along `T`
/// removed.
pub fn tangent_derivative(c: &DiscreteCurve, t: &[MVector]) -> Vec<MVector> {
    let eps_t = t[0].square().signum();
    derivative(t, c.ds(), c.topology(), FieldKind::Vector)
        .into_iter()
        .zip(t)
        .map(|(d, ti)| d - *ti * (eps_t * d.dot(*ti)))
        .collect()
}

pub fn frenet_apparatus(c: &DiscreteCurve, tol: &Tolerances) -> Result<FrenetApparatus> {
    let t = c.tangent_field(tol)?;
    let len = t.len();
    let eps_t = MetricSign::of_class(c.causal_class()).expect("curve class is never lightlike");
    let ts = tangent_derivative(c, &t);

    let mut kappa = vec![0.0; len];
    let mut n = vec![MVector::ZERO; len];
    let mut has_normal = vec![false; len];
    let mut eps_n: Option<MetricSign> = None;
    for i in 0..len {
        let v = ts[i];
        let k = v.norm();
        kappa[i] = k;
        if v.euclidean_norm() < tol.kappa_eps {
            continue;
        }
        let class = classify(v, tol.tol_causal);
        if class == CausalClass::Lightlike {
            return Err(VfeError::CausalDegeneracy { index: i, what: "principal normal" });
        }
        if k < tol.kappa_eps {
            continue;
        }
        let sign = MetricSign::of_class(class).unwrap();
        match eps_n {
            None => eps_n = Some(sign),
            Some(e) if e != sign => {
                return Err(VfeError::MixedCausality {
                    index: i,
                    expected: e.class(),
                    found: class,
                })
            }
            _ => {}
        }
        n[i] = v * (1.0 / k);
        has_normal[i] = true;
    }

    let eps_n = eps_n.unwrap_or(match eps_t {
        MetricSign::Minus => MetricSign::Plus,
        MetricSign::Plus => MetricSign::Plus,
    });
    let mut b = vec![MVector::ZERO; len];
    let mut eps_b = None;
    for i in (0..len).filter(|&i| has_normal[i]) {
        b[i] = lorentz_cross(t[i], n[i]);
        let class = classify(b[i], tol.tol_causal);
        if class == CausalClass::Lightlike {
            return Err(VfeError::CausalDegeneracy { index: i, what: "binormal" });
        }
        let sign = MetricSign::of_class(class).unwrap();
        if *eps_b.get_or_insert(sign) != sign {
            return Err(VfeError::MixedCausality {
                index: i,
                expected: eps_b.unwrap().class(),
                found: class,
            });
        }
    }
    let eps_b = eps_b.unwrap_or(match (eps_t, eps_n) {
        (MetricSign::Plus, MetricSign::Plus) => MetricSign::Minus,
        _ => MetricSign::Plus,
    });
    let eps = [eps_t, eps_n, eps_b];
    if has_normal.iter().any(|d| *d) && CausalCase::from_signs(eps).is_none() {
        return Err(VfeError::CausalDegeneracy { index: 0, what: "Frenet sign pattern" });
    }

    // τ needs N at the neighbours of each sample.
    let periodic = c.topology().is_periodic();
    let defined: Vec<bool> = (0..len)
        .map(|i| {
            let neighbours: Vec<usize> = if periodic {
                vec![(i + len - 1) % len, (i + 1) % len]
            } else if i == 0 {
                vec![1, 2]
            } else if i == len - 1 {
                vec![len - 2, len - 3]
            } else {
                vec![i - 1, i + 1]
            };
            has_normal[i] && neighbours.iter().all(|&j| has_normal[j])
        })
        .collect();

    let ns = derivative(&n, c.ds(), c.topology(), FieldKind::Vector);
    let tau: Vec<f64> = (0..len)
        .map(|i| {
            if defined[i] {
                eps_b.value() * ns[i].dot(b[i])
            } else {
                f64::NAN
            }
        })
        .collect();

    Ok(FrenetApparatus {
        t,
        n,
        b,
        kappa,
        tau,
        eps,
        defined,
        ds: c.ds(),
        topology: *c.topology(),
    })
}

/// Coefficient matrix extracted from the discrete frames at `i` by midpoint
/// inner products, `a_jk = ε_k <X_j(i+1) − X_j(i−1), X_k(i+1) + X_k(i−1)> / (4 ds)`.
///
/// Its semi-skewness measures how well the neighbouring frames are
/// orthonormal with the recorded signs. Returns `None` at open ends or next
/// to undefined samples.
pub fn extracted_frenet_matrix(fa: &FrenetApparatus, i: usize) -> Option<FrameCoefficientMatrix> {
    let len = fa.len();
    let (prev, next) = neighbours(len, i, fa.topology.is_periodic())?;
    if !(fa.defined[prev] && fa.defined[next]) {
        return None;
    }
    let map = fa.topology.period_map();
    let at = |field: &[MVector], j: isize| match map {
        Some(m) => crate::curve::extended(field, j, &m, FieldKind::Vector),
        None => field[j as usize],
    };
    let fields = [&fa.t, &fa.n, &fa.b];
    let (ip, inx) = (i as isize - 1, i as isize + 1);
    let mut a = [[0.0; 3]; 3];
    for (j, xj) in fields.iter().enumerate() {
        let dx = at(xj, inx) - at(xj, ip);
        for (k, xk) in fields.iter().enumerate() {
            let avg = at(xk, inx) + at(xk, ip);
            a[j][k] = fa.eps[k].value() * dx.dot(avg) / (4.0 * fa.ds);
        }
    }
    Some(FrameCoefficientMatrix::new(a, fa.eps))
}

fn neighbours(len: usize, i: usize, periodic: bool) -> Option<(usize, usize)> {
    if periodic {
        Some(((i + len - 1) % len, (i + 1) % len))
    } else if i == 0 || i + 1 >= len {
        None
    } else {
        Some((i - 1, i + 1))
    }
}

/// Pointwise residual of the Frenet–Serret system: a fourth-order centered
/// derivative of `(T, N, B)` minus the analytic matrix applied to the frame.
/// Entries are `None` where the stencil leaves the curve or the frame is
/// undefined.
pub fn frenet_residual(fa: &FrenetApparatus) -> Vec<Option<f64>> {
    let fields = [fa.t.clone(), fa.n.clone(), fa.b.clone()];
    let len = fa.len();
    (0..len)
        .map(|i| {
            let window = stencil_window(len, i, fa.topology.is_periodic())?;
            if !window.iter().all(|&j| fa.defined[j]) {
                return None;
            }
            let d = fourth_order_derivatives(&fields, &fa.topology, fa.ds, i);
            Some(fa.matrix(i).residual(&d, &[fa.t[i], fa.n[i], fa.b[i]]))
        })
        .collect()
}

pub(crate) fn stencil_window(len: usize, i: usize, periodic: bool) -> Option<[usize; 5]> {
    if periodic {
        Some([
            (i + len - 2) % len,
            (i + len - 1) % len,
            i,
            (i + 1) % len,
            (i + 2) % len,
        ])
    } else if i < 2 || i + 2 >= len {
        None
    } else {
        Some([i - 2, i - 1, i, i + 1, i + 2])
    }
}

/// Five-point derivatives of three vector fields at sample `i`.
pub(crate) fn fourth_order_derivatives(fields: &[Vec<MVector>; 3], topology: &Topology, ds: f64, i: usize) -> [MVector; 3] {
    let map = topology.period_map();
    let at = |field: &[MVector], j: isize| match map {
        Some(m) => crate::curve::extended(field, j, &m, FieldKind::Vector),
        None => field[j as usize],
    };
    let i = i as isize;
    let mut out = [MVector::ZERO; 3];
    for (o, f) in out.iter_mut().zip(fields.iter()) {
        *o = (at(f, i - 2) - at(f, i - 1) * 8.0 + at(f, i + 1) * 8.0 - at(f, i + 2)) * (1.0 / (12.0 * ds));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;
    use std::f64::consts::PI;

    #[test]
    fn circle_frenet_matches_oracle() {
        let c = seeds::circle(1.0, 256, &Tolerances::default()).unwrap();
        let fa = frenet_apparatus(&c, &Tolerances::default()).unwrap();
        assert_eq!(fa.case(), Some(CausalCase::SpacelikeTimelikeBinormal));
        let h = c.ds();
        for i in 0..fa.len() {
            assert!((fa.kappa[i] - 1.0).abs() < h * h, "kappa {}", fa.kappa[i]);
            assert!(fa.tau[i].abs() < 1e-10);
            assert!((fa.b[i] - MVector::new(-1.0, 0.0, 0.0)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn timelike_helix_frenet_matches_oracle() {
        let (a, w) = (1.0, 1.0);
        let b = (1.0 + a * a * w * w as f64).sqrt();
        for n in [128usize, 256] {
            let c = seeds::timelike_helix(a, w, n, &Tolerances::default()).unwrap();
            let fa = frenet_apparatus(&c, &Tolerances::default()).unwrap();
            assert_eq!(fa.case(), Some(CausalCase::TimelikeCurve));
            let h = c.ds();
            for i in 0..fa.len() {
                assert!((fa.kappa[i] - a * w * w).abs() < 2.0 * h * h);
                assert!((fa.tau[i] - b * w).abs() < 2.0 * h * h);
            }
        }
    }

    #[test]
    fn straight_line_frame_undefined() {
        let c = seeds::line(CausalClass::Spacelike, 64, 0.05, &Tolerances::default()).unwrap();
        let fa = frenet_apparatus(&c, &Tolerances::default()).unwrap();
        assert!(fa.defined.iter().all(|d| !d));
        assert!(fa.case().is_none());
    }

    #[test]
    fn frenet_signs_are_admissible() {
        let tol = Tolerances::default();
        let curves = [
            seeds::circle(1.0, 64, &tol).unwrap(),
            seeds::timelike_helix(1.0, 1.0, 64, &tol).unwrap(),
            seeds::spacelike_helix(CausalCase::SpacelikeTimelikeNormal, 0.6, 1.0, 2.0, 64, &tol).unwrap(),
            seeds::spacelike_helix(CausalCase::SpacelikeTimelikeBinormal, 0.6, 1.0, 2.0, 64, &tol).unwrap(),
        ];
        for c in &curves {
            let fa = frenet_apparatus(c, &tol).unwrap();
            assert!(CausalCase::from_signs(fa.eps).is_some());
            let minus = fa.eps.iter().filter(|e| **e == MetricSign::Minus).count();
            assert_eq!(minus, 1);
            for i in 0..fa.len() {
                assert!((fa.t[i].square() - fa.eps[0].value()).abs() < 1e-8);
                assert!((fa.n[i].square() - fa.eps[1].value()).abs() < 1e-8);
                assert!((fa.b[i].square() - fa.eps[2].value()).abs() < 1e-8);
                assert!(fa.t[i].dot(fa.n[i]).abs() < 1e-8);
                assert!(fa.t[i].dot(fa.b[i]).abs() < 1e-8);
                assert!(fa.n[i].dot(fa.b[i]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn extracted_matrix_is_semi_skew() {
        let tol = Tolerances::default();
        let c = seeds::timelike_helix(1.0, 1.0, 256, &tol).unwrap();
        let fa = frenet_apparatus(&c, &tol).unwrap();
        for i in 0..fa.len() {
            let m = extracted_frenet_matrix(&fa, i).unwrap();
            assert!(m.semi_skew_defect() < 1e-8);
        }
    }

    #[test]
    fn frenet_residual_is_second_order() {
        let tol = Tolerances::default();
        let mut res = Vec::new();
        for n in [64usize, 128, 256] {
            let c = seeds::timelike_helix(1.0, 1.0, n, &tol).unwrap();
            let fa = frenet_apparatus(&c, &tol).unwrap();
            let r = frenet_residual(&fa).into_iter().flatten().fold(0.0, f64::max);
            res.push((2.0 * PI / n as f64, r));
        }
        let order = crate::convergence::observed_order(&res).unwrap();
        assert!((order - 2.0).abs() < 0.2, "order {order}, {res:?}");
    }
}
