use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::std_normal_sf;
use crate::linalg::{dot, norm2, singular_values, Matrix};

/// Family tag used in listings and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Linear,
    LpNorm,
    SupNorm,
    Ellipsoidal,
    Tilted,
    GAlpha,
    MonomialOdd,
    Custom,
}

/// Singular-value summary of an ellipsoidal norm's matrix.
#[derive(Debug, Clone, Serialize)]
pub struct MatrixParams {
    #[serde(skip)]
    pub a: Matrix,
    pub singular_values: Vec<f64>,
    pub hs_norm: f64,
    pub schatten4_norm: f64,
    pub op_norm: f64,
    #[serde(skip)]
    diag: Option<Vec<f64>>,
}

impl MatrixParams {
    pub fn new(a: Matrix) -> Result<Self> {
        let sv = singular_values(&a);
        let op = sv.first().copied().unwrap_or(0.0);
        if !(op > 0.0) {
            return Err(Error::invalid("ellipsoidal norm needs a nonzero matrix"));
        }
        let hs = sv.iter().map(|s| s * s).sum::<f64>().sqrt();
        let s4 = sv.iter().map(|s| s.powi(4)).sum::<f64>().powf(0.25);
        Ok(MatrixParams {
            diag: a.as_diagonal(),
            a,
            singular_values: sv,
            hs_norm: hs,
            schatten4_norm: s4,
            op_norm: op,
        })
    }

    /// ‖A‖_{S₄}⁴ / ‖A‖_HS², the scale of Var[‖AZ‖₂].
    pub fn variance_scale(&self) -> f64 {
        self.schatten4_norm.powi(4) / self.hs_norm.powi(2)
    }

    /// Top right singular vector by power iteration on AᵀA.
    fn top_right_singular_vector(&self) -> Vec<f64> {
        let n = self.a.cols();
        if let Some(d) = &self.diag {
            let i = argmax_abs(d);
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            return v;
        }
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64) * 1e-3).collect();
        let nv = norm2(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        for _ in 0..2000 {
            let w = self.a.t_mul_vec(&self.a.mul_vec(&v));
            let nw = norm2(&w);
            if nw == 0.0 {
                break;
            }
            let next: Vec<f64> = w.iter().map(|x| x / nw).collect();
            let diff = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            v = next;
            if diff < 1e-15 {
                break;
            }
        }
        v
    }
}

/// Tilt data: f_t(x) = base(x) + t |⟨x, x₀*⟩| with ‖x₀*‖₂ = b(base).
#[derive(Debug, Clone, Serialize)]
pub struct TiltParams {
    pub t: f64,
    pub x0_star: Vec<f64>,
    pub b: f64,
}

/// One-dimensional helper shapes that are not covered by a named family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CustomKind {
    /// t ↦ max(t, 0)
    PositivePart,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Linear { u: Vec<f64> },
    LpNorm { p: f64 },
    SupNorm,
    Ellipsoidal { params: MatrixParams },
    Tilted { base: Box<FunctionSpec>, tilt: TiltParams },
    GAlpha { alpha: f64, c_alpha: f64 },
    MonomialOdd { k: u32, positive_part_mean: f64 },
    Custom { kind: CustomKind },
}

/// A function on ℝⁿ with evaluation, a.e. gradient and metadata.
#[derive(Debug, Clone, Serialize)]
pub struct FunctionSpec {
    key: String,
    dim: usize,
    convex: bool,
    lipschitz: Option<f64>,
    #[serde(flatten)]
    family: Family,
}

fn argmax_abs(z: &[f64]) -> usize {
    let mut best = 0;
    let mut val = f64::NEG_INFINITY;
    for (i, &x) in z.iter().enumerate() {
        // Strict comparison keeps the lowest index on ties.
        if x.abs() > val {
            val = x.abs();
            best = i;
        }
    }
    best
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}

impl FunctionSpec {
    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn kind(&self) -> FamilyKind {
        match self.family {
            Family::Linear { .. } => FamilyKind::Linear,
            Family::LpNorm { .. } => FamilyKind::LpNorm,
            Family::SupNorm => FamilyKind::SupNorm,
            Family::Ellipsoidal { .. } => FamilyKind::Ellipsoidal,
            Family::Tilted { .. } => FamilyKind::Tilted,
            Family::GAlpha { .. } => FamilyKind::GAlpha,
            Family::MonomialOdd { .. } => FamilyKind::MonomialOdd,
            Family::Custom { .. } => FamilyKind::Custom,
        }
    }

    /// Norm families: 1-homogeneous, even, nonnegative.
    pub fn is_norm(&self) -> bool {
        matches!(
            self.family,
            Family::LpNorm { .. } | Family::SupNorm | Family::Ellipsoidal { .. } | Family::Tilted { .. }
        )
    }

    /// b(X) = max of the norm on the Euclidean unit sphere.
    pub fn b(&self) -> Option<f64> {
        if self.is_norm() {
            self.lipschitz
        } else {
            None
        }
    }

    /// Nondecreasing in every coordinate direction of ℝ (1-D only).
    pub fn is_nondecreasing_1d(&self) -> bool {
        self.dim == 1
            && match &self.family {
                Family::Linear { u } => u[0] >= 0.0,
                Family::GAlpha { .. } | Family::MonomialOdd { .. } | Family::Custom { .. } => true,
                _ => false,
            }
    }

    /// Coordinates permuted among each other leave the law of f(Z) invariant.
    /// Returns (representative index, multiplicity) classes.
    pub fn coordinate_classes(&self) -> Vec<(usize, usize)> {
        let n = self.dim;
        match &self.family {
            Family::LpNorm { .. } | Family::SupNorm => vec![(0, n)],
            Family::Linear { u } if u.iter().all(|x| x.abs() == u[0].abs()) => vec![(0, n)],
            Family::Tilted { base, tilt }
                if matches!(base.family, Family::LpNorm { .. } | Family::SupNorm)
                    && tilt.x0_star.iter().skip(1).all(|&x| x == 0.0) =>
            {
                if n == 1 {
                    vec![(0, 1)]
                } else {
                    vec![(0, 1), (1, n - 1)]
                }
            }
            Family::Ellipsoidal { params } => match &params.diag {
                Some(d) if n > 1 && d[1..].iter().all(|&x| x.abs() == d[1].abs()) => vec![(0, 1), (1, n - 1)],
                _ => (0..n).map(|i| (i, 1)).collect(),
            },
            _ => (0..n).map(|i| (i, 1)).collect(),
        }
    }

    /// Points where a 1-D function is not differentiable.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.family {
            Family::GAlpha { alpha, .. } => vec![*alpha],
            Family::Custom { kind: CustomKind::PositivePart } => vec![0.0],
            Family::LpNorm { .. } | Family::SupNorm | Family::Tilted { .. } if self.dim == 1 => vec![0.0],
            _ => vec![],
        }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.dim);
        match &self.family {
            Family::Linear { u } => dot(u, z),
            Family::LpNorm { p } => lp_norm(z, *p),
            Family::SupNorm => z.iter().fold(0.0, |m, x| m.max(x.abs())),
            Family::Ellipsoidal { params } => ellipsoidal(params, z),
            Family::Tilted { base, tilt } => base.eval(z) + tilt.t * dot(z, &tilt.x0_star).abs(),
            Family::GAlpha { alpha, c_alpha } => c_alpha * (z[0] - alpha).max(0.0),
            Family::MonomialOdd { k, .. } => z[0].powi(2 * *k as i32 + 1),
            Family::Custom { kind: CustomKind::PositivePart } => z[0].max(0.0),
        }
    }

    /// An a.e. gradient with a fixed selection at non-differentiable points:
    /// argmax ties go to the lowest index and |·| at 0 has derivative 0.
    pub fn subgradient(&self, z: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        self.subgradient_into(z, &mut g);
        g
    }

    pub fn subgradient_into(&self, z: &[f64], g: &mut [f64]) {
        match &self.family {
            Family::Linear { u } => g.copy_from_slice(u),
            Family::LpNorm { p } => lp_grad(z, *p, g),
            Family::SupNorm => {
                g.iter_mut().for_each(|x| *x = 0.0);
                let i = argmax_abs(z);
                g[i] = sign(z[i]);
            }
            Family::Ellipsoidal { params } => {
                let az = params.a.mul_vec(z);
                let nrm = norm2(&az);
                if nrm == 0.0 {
                    g.iter_mut().for_each(|x| *x = 0.0);
                } else {
                    let scaled: Vec<f64> = az.iter().map(|x| x / nrm).collect();
                    g.copy_from_slice(&params.a.t_mul_vec(&scaled));
                }
            }
            Family::Tilted { base, tilt } => {
                base.subgradient_into(z, g);
                let s = tilt.t * sign(dot(z, &tilt.x0_star));
                for (gi, xi) in g.iter_mut().zip(&tilt.x0_star) {
                    *gi += s * xi;
                }
            }
            Family::GAlpha { alpha, c_alpha } => g[0] = if z[0] > *alpha { *c_alpha } else { 0.0 },
            Family::MonomialOdd { k, .. } => {
                let k = *k as i32;
                g[0] = (2 * k + 1) as f64 * z[0].powi(2 * k);
            }
            Family::Custom { kind: CustomKind::PositivePart } => g[0] = if z[0] > 0.0 { 1.0 } else { 0.0 },
        }
    }

    /// ‖∇f(z)‖₂², allocation-free for the common families.
    pub fn grad_sq(&self, z: &[f64]) -> f64 {
        match &self.family {
            Family::Linear { u } => dot(u, u),
            Family::SupNorm => {
                let i = argmax_abs(z);
                if z[i] == 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
            Family::LpNorm { p } => {
                let nrm = lp_norm(z, *p);
                if nrm == 0.0 {
                    return 0.0;
                }
                if *p == 1.0 {
                    return z.iter().filter(|x| **x != 0.0).count() as f64;
                }
                let e = 2.0 * (p - 1.0);
                z.iter().map(|x| x.abs().powf(e)).sum::<f64>() / nrm.powf(e)
            }
            _ => {
                let g = self.subgradient(z);
                dot(&g, &g)
            }
        }
    }

    /// |∂ᵢ f(z)|
    pub fn partial_abs(&self, z: &[f64], i: usize) -> f64 {
        match &self.family {
            Family::SupNorm => {
                let j = argmax_abs(z);
                if j == i && z[j] != 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Family::Linear { u } => u[i].abs(),
            _ => self.subgradient(z)[i].abs(),
        }
    }

    /// Right derivative of a 1-D function at x by a forward difference.
    pub fn right_derivative(&self, x: f64) -> f64 {
        let h = 1e-7 * x.abs().max(1.0);
        (self.eval(&[x + h]) - self.eval(&[x])) / h
    }

    /// Derivative of a 1-D function: the closed-form gradient.
    pub fn derivative_1d(&self, x: f64) -> f64 {
        debug_assert_eq!(self.dim, 1);
        let mut g = [0.0];
        self.subgradient_into(&[x], &mut g);
        g[0]
    }

    /// Parameters of the g_α family, if this is one.
    pub fn galpha(&self) -> Option<(f64, f64)> {
        match self.family {
            Family::GAlpha { alpha, c_alpha } => Some((alpha, c_alpha)),
            _ => None,
        }
    }

    /// True for x ↦ ⟨x,u⟩ (the equality case of several bounds).
    pub fn is_affine(&self) -> bool {
        matches!(self.family, Family::Linear { .. })
    }

    pub fn tilt_params(&self) -> Option<&TiltParams> {
        match &self.family {
            Family::Tilted { tilt, .. } => Some(tilt),
            _ => None,
        }
    }

    pub fn tilt_base(&self) -> Option<&FunctionSpec> {
        match &self.family {
            Family::Tilted { base, .. } => Some(base),
            _ => None,
        }
    }

    pub(crate) fn with_key(mut self, key: impl Into<String>) -> Self {
        self.key = key.into();
        self
    }
}

fn lp_norm(z: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        z.iter().map(|x| x.abs()).sum()
    } else if p == 2.0 {
        norm2(z)
    } else if p == 4.0 {
        z.iter().map(|x| (x * x) * (x * x)).sum::<f64>().sqrt().sqrt()
    } else {
        z.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn lp_grad(z: &[f64], p: f64, g: &mut [f64]) {
    if p == 1.0 {
        for (gi, &x) in g.iter_mut().zip(z) {
            *gi = sign(x);
        }
        return;
    }
    let nrm = lp_norm(z, p);
    if nrm == 0.0 {
        g.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let denom = nrm.powf(p - 1.0);
    for (gi, &x) in g.iter_mut().zip(z) {
        *gi = sign(x) * x.abs().powf(p - 1.0) / denom;
    }
}

fn ellipsoidal(params: &MatrixParams, z: &[f64]) -> f64 {
    if let Some(d) = &params.diag {
        return d.iter().zip(z).map(|(a, x)| (a * x) * (a * x)).sum::<f64>().sqrt();
    }
    norm2(&params.a.mul_vec(z))
}

/// ℓ_p norm on ℝⁿ; p = ∞ gives the sup norm.
pub fn make_lp_norm(n: usize, p: f64) -> Result<FunctionSpec> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if p.is_nan() || p < 1.0 {
        return Err(Error::invalid(format!("ℓ_p with p = {p} is not a norm")));
    }
    if p.is_infinite() {
        return Ok(FunctionSpec {
            key: format!("linf:n={n}"),
            dim: n,
            convex: true,
            lipschitz: Some(1.0),
            family: Family::SupNorm,
        });
    }
    let lip = if p >= 2.0 {
        1.0
    } else {
        (n as f64).powf(1.0 / p - 0.5)
    };
    Ok(FunctionSpec {
        key: format!("lp:n={n}:p={p}"),
        dim: n,
        convex: true,
        lipschitz: Some(lip),
        family: Family::LpNorm { p },
    })
}

/// z ↦ ‖Az‖₂
pub fn make_ellipsoidal(a: Matrix) -> Result<FunctionSpec> {
    let key = match a.as_diagonal() {
        Some(d) => format!("ellip:diag={}", fmt_list(&d)),
        None => format!("ellip:matrix:m={}:n={}", a.rows(), a.cols()),
    };
    let params = MatrixParams::new(a)?;
    Ok(FunctionSpec {
        key,
        dim: params.a.cols(),
        convex: true,
        lipschitz: Some(params.op_norm),
        family: Family::Ellipsoidal { params },
    })
}

/// Dual-extremal functional x₀* for the supported base norms.
fn dual_extremal(base: &FunctionSpec) -> Result<Vec<f64>> {
    let n = base.dim;
    match &base.family {
        Family::SupNorm => {
            let mut x = vec![0.0; n];
            x[0] = 1.0;
            Ok(x)
        }
        Family::LpNorm { p } if *p >= 2.0 => {
            let mut x = vec![0.0; n];
            x[0] = 1.0;
            Ok(x)
        }
        Family::LpNorm { p } => {
            // ‖x‖_q = 1 with q the conjugate exponent, and ‖x‖₂ = n^{1/p-1/2}.
            let inv_q = 1.0 - 1.0 / p;
            Ok(vec![(n as f64).powf(-inv_q); n])
        }
        Family::Ellipsoidal { params } => {
            let v = params.top_right_singular_vector();
            Ok(v.iter().map(|x| x * params.op_norm).collect())
        }
        _ => Err(Error::invalid(format!(
            "no closed-form dual-extremal functional for `{}`",
            base.key
        ))),
    }
}

/// f_t(x) = ‖x‖ + t|⟨x, x₀*⟩| with x₀* supplied for the base family.
pub fn make_tilted(base: FunctionSpec, t: f64) -> Result<FunctionSpec> {
    let x0 = dual_extremal(&base)?;
    make_tilted_with(base, t, x0)
}

/// Tilted norm with an explicitly supplied dual-extremal functional.
pub fn make_tilted_with(base: FunctionSpec, t: f64, x0_star: Vec<f64>) -> Result<FunctionSpec> {
    if !base.is_norm() || matches!(base.family, Family::Tilted { .. }) {
        return Err(Error::invalid(format!("`{}` is not an untilted norm", base.key)));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("tilt parameter must be positive, got {t}")));
    }
    if x0_star.len() != base.dim {
        return Err(Error::invalid("x0* has the wrong dimension"));
    }
    let b = base.lipschitz.expect("norm families carry b(X)");
    let nx = norm2(&x0_star);
    if (nx - b).abs() > 1e-10 * b {
        return Err(Error::invalid(format!("‖x0*‖₂ = {nx} differs from b(X) = {b}")));
    }
    Ok(FunctionSpec {
        key: format!("tilted:{}:t={t}", base.key),
        dim: base.dim,
        convex: true,
        lipschitz: Some((1.0 + t) * b),
        family: Family::Tilted {
            base: Box::new(base),
            tilt: TiltParams { t, x0_star, b },
        },
    })
}

/// g_α(t) = c_α (t − α)₊ with c_α = (1 − Φ(α))^{−1/2}.
pub fn make_galpha(alpha: f64) -> Result<FunctionSpec> {
    if !(alpha >= 2.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("g_alpha needs alpha >= 2, got {alpha}")));
    }
    let c_alpha = std_normal_sf(alpha).powf(-0.5);
    Ok(FunctionSpec {
        key: format!("galpha:a={alpha}"),
        dim: 1,
        convex: true,
        lipschitz: Some(c_alpha),
        family: Family::GAlpha { alpha, c_alpha },
    })
}

/// z ↦ ⟨z, u⟩
pub fn make_linear(u: Vec<f64>) -> Result<FunctionSpec> {
    let nrm = norm2(&u);
    if u.is_empty() || !(nrm > 0.0) {
        return Err(Error::invalid("linear functional needs a nonzero vector"));
    }
    Ok(FunctionSpec {
        key: format!("linear:u={}", fmt_list(&u)),
        dim: u.len(),
        convex: true,
        lipschitz: Some(nrm),
        family: Family::Linear { u },
    })
}

/// t ↦ t^{2k+1} on ℝ (not convex).
pub fn make_odd_monomial(k: u32) -> Result<FunctionSpec> {
    if k == 0 {
        return Err(Error::invalid("odd monomial needs k >= 1"));
    }
    // 𝔼(ζ^{2k+1})₊ = 2^k k! / √(2π)
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    let mean_pos = 2f64.powi(k as i32) * fact / (2.0 * std::f64::consts::PI).sqrt();
    Ok(FunctionSpec {
        key: format!("monomial:k={k}"),
        dim: 1,
        convex: false,
        lipschitz: None,
        family: Family::MonomialOdd {
            k,
            positive_part_mean: mean_pos,
        },
    })
}

/// t ↦ max(t, 0) on ℝ.
pub fn make_positive_part() -> FunctionSpec {
    FunctionSpec {
        key: "relu".to_string(),
        dim: 1,
        convex: true,
        lipschitz: Some(1.0),
        family: Family::Custom {
            kind: CustomKind::PositivePart,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_examples() {
        let f = make_lp_norm(3, f64::INFINITY).unwrap();
        assert_eq!(f.eval(&[1.0, -2.0, 0.5]), 2.0);
        assert_eq!(f.kind(), FamilyKind::SupNorm);
        assert_eq!(make_lp_norm(2, 2.0).unwrap().lipschitz(), Some(1.0));
        assert!((make_lp_norm(4, 1.0).unwrap().lipschitz().unwrap() - 2.0).abs() < 1e-15);
        assert!(make_lp_norm(3, 0.5).is_err());
    }

    #[test]
    fn ellipsoidal_examples() {
        let f = make_ellipsoidal(Matrix::identity(2)).unwrap();
        assert!((f.eval(&[3.0, 4.0]) - 5.0).abs() < 1e-15);
        let g = make_ellipsoidal(Matrix::diag(&[2.0, 1.0])).unwrap();
        assert_eq!(g.lipschitz(), Some(2.0));
        let Family::Ellipsoidal { params } = g.family() else { panic!() };
        assert!((params.hs_norm.powi(2) - 5.0).abs() < 1e-12);
        assert!((params.schatten4_norm.powi(4) - 17.0).abs() < 1e-12);
        assert!((params.variance_scale() - 3.4).abs() < 1e-12);
        assert!(params.op_norm <= params.schatten4_norm && params.schatten4_norm <= params.hs_norm);
        assert!(make_ellipsoidal(Matrix::diag(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn tilted_examples() {
        let base = make_lp_norm(8, f64::INFINITY).unwrap();
        let f = make_tilted(base, 4.0).unwrap();
        let mut x = vec![0.0; 8];
        x[0] = 1.0;
        assert_eq!(f.eval(&x), 5.0);
        assert_eq!(f.lipschitz(), Some(5.0));
        assert_eq!(f.key(), "tilted:linf:n=8:t=4");
        assert!(make_tilted(make_galpha(3.0).unwrap(), 4.0).is_err());
        assert!(make_tilted(f, 2.0).is_err());
    }

    #[test]
    fn tilted_lp_small_p_dual_point() {
        let base = make_lp_norm(9, 1.0).unwrap();
        let f = make_tilted(base, 4.0).unwrap();
        let tilt = f.tilt_params().unwrap();
        // ‖x0*‖_∞ = 1 is the dual ℓ1 norm; ‖x0*‖₂ = b = 3.
        assert!((tilt.x0_star.iter().fold(0.0f64, |m, x| m.max(x.abs())) - 1.0).abs() < 1e-14);
        assert!((norm2(&tilt.x0_star) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn tilted_ellipsoidal_dual_point() {
        let a = Matrix::from_row_major(2, 2, vec![2.0, 1.0, 0.0, 1.0]).unwrap();
        let base = make_ellipsoidal(a).unwrap();
        let b = base.lipschitz().unwrap();
        let f = make_tilted(base, 4.0).unwrap();
        assert!((norm2(&f.tilt_params().unwrap().x0_star) - b).abs() < 1e-10 * b);
    }

    #[test]
    fn galpha_examples() {
        let g = make_galpha(3.0).unwrap();
        let (_, c3) = g.galpha().unwrap();
        assert!((c3 - 27.218_4).abs() < 1e-3, "{c3}");
        assert!((g.eval(&[5.0]) - 2.0 * c3).abs() < 1e-12);
        assert_eq!(g.eval(&[2.9]), 0.0);
        assert_eq!(g.eval(&[3.0]), 0.0);
        assert!(make_galpha(1.5).is_err());
    }

    #[test]
    fn linear_examples() {
        let f = make_linear(vec![0.6, 0.8]).unwrap();
        assert!((f.lipschitz().unwrap() - 1.0).abs() < 1e-15);
        assert!((f.eval(&[0.6, 0.8]) - 1.0).abs() < 1e-15);
        assert!(make_linear(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn monomial_examples() {
        let g = make_odd_monomial(1).unwrap();
        let Family::MonomialOdd { positive_part_mean, .. } = g.family() else { panic!() };
        assert!((positive_part_mean - 0.797_884_560_802_865_4).abs() < 1e-12);
        assert_eq!(g.eval(&[-2.0]), -8.0);
        assert_eq!(g.eval(&[0.0]), 0.0);
        assert!(!g.is_convex());
    }

    #[test]
    fn subgradient_examples() {
        let l2 = make_lp_norm(2, 2.0).unwrap();
        let g = l2.subgradient(&[3.0, 4.0]);
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
        let linf = make_lp_norm(3, f64::INFINITY).unwrap();
        assert_eq!(linf.subgradient(&[1.0, -2.0, 0.5]), vec![0.0, -1.0, 0.0]);
        // Tie goes to the lowest index.
        assert_eq!(linf.subgradient(&[-2.0, 2.0, 0.0]), vec![-1.0, 0.0, 0.0]);
        assert_eq!(linf.subgradient(&[0.0, 0.0, 0.0]), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn coordinate_classes_cover_all_coordinates() {
        let t = make_tilted(make_lp_norm(5, f64::INFINITY).unwrap(), 4.0).unwrap();
        assert_eq!(t.coordinate_classes(), vec![(0, 1), (1, 4)]);
        let e = make_ellipsoidal(Matrix::diag(&[2.0, 1.0, 1.0])).unwrap();
        assert_eq!(e.coordinate_classes(), vec![(0, 1), (1, 2)]);
        let l = make_linear(vec![1.0, 2.0]).unwrap();
        assert_eq!(l.coordinate_classes(), vec![(0, 1), (1, 1)]);
    }
}
