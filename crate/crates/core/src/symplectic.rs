//! Symplectic charts on R^(2n) and the bracket calculus on them.
//!
//! Coordinates are ordered momenta first: `(p_1 .. p_n, q_1 .. q_n)`, and
//! the symplectic form is `Omega = sum_l dp_l ^ dq_l`. The Hamiltonian
//! field of `F` is its sharp image,
//!
//! ```text
//! X_F = Omega# dF = (dF/dq) d_p - (dF/dp) d_q ,
//! ```
//!
//! and the Poisson bracket is `{F, G} = dG(X_F) = sum_l dF/dq_l dG/dp_l -
//! dF/dp_l dG/dq_l`, which fixes `{q, p} = +1`. Under this pairing the flow
//! of `X_H` runs time-reversed relative to the `q' = +dH/dp` habit; flows
//! and loop orientations elsewhere in the crate account for that.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::expr::{EvalError, Expression};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChartError {
    #[error("chart needs {expected} coordinate names, got {got}")]
    CoordinateCount { expected: usize, got: usize },
    #[error("duplicate coordinate name `{0}`")]
    Duplicate(String),
    #[error("coordinate name `{0}` is not a valid identifier")]
    BadName(String),
    #[error("coordinate name `{0}` shadows a builtin function")]
    Reserved(String),
}

/// A canonical chart on R^(2n), coordinates `(p_1..p_n, q_1..q_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticChart {
    n: usize,
    coords: Arc<[String]>,
}

impl SymplecticChart {
    pub fn new<S: AsRef<str>>(n: usize, coords: &[S]) -> Result<SymplecticChart, ChartError> {
        if coords.len() != 2 * n {
            return Err(ChartError::CoordinateCount {
                expected: 2 * n,
                got: coords.len(),
            });
        }
        let names: Vec<String> = coords.iter().map(|c| c.as_ref().to_owned()).collect();
        for (i, name) in names.iter().enumerate() {
            let mut chars = name.chars();
            let head_ok = chars
                .next()
                .is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
            if !head_ok || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(ChartError::BadName(name.clone()));
            }
            if crate::expr::reserved_function(name) {
                return Err(ChartError::Reserved(name.clone()));
            }
            if names[..i].contains(name) {
                return Err(ChartError::Duplicate(name.clone()));
            }
        }
        Ok(SymplecticChart {
            n,
            coords: names.into(),
        })
    }

    /// `(p1..pn, q1..qn)`.
    pub fn standard(n: usize) -> SymplecticChart {
        let coords: Vec<String> = (1..=n)
            .map(|i| format!("p{i}"))
            .chain((1..=n).map(|i| format!("q{i}")))
            .collect();
        SymplecticChart::new(n, &coords).expect("generated names are valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    /// Matrix of `Omega` in chart ordering: `[[0, I], [-I, 0]]`.
    pub fn omega_matrix(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for l in 0..n {
            m[(l, n + l)] = 1.0;
            m[(n + l, l)] = -1.0;
        }
        m
    }

    /// `Omega(u, v) = sum_l u_p_l v_q_l - u_q_l v_p_l`.
    pub fn omega(&self, u: &[f64], v: &[f64]) -> f64 {
        assert_eq!(u.len(), self.dim());
        assert_eq!(v.len(), self.dim());
        let n = self.n;
        (0..n).map(|l| u[l] * v[n + l] - u[n + l] * v[l]).sum()
    }

    /// Raise a covector: `Omega#(alpha)` with `Omega(Omega# alpha, .) = alpha`.
    pub fn sharp(&self, alpha: &[f64]) -> DVector<f64> {
        assert_eq!(alpha.len(), self.dim());
        let n = self.n;
        let mut out = DVector::zeros(2 * n);
        for l in 0..n {
            out[l] = alpha[n + l];
            out[n + l] = -alpha[l];
        }
        out
    }

    /// Lower a vector: the inverse of [`SymplecticChart::sharp`].
    pub fn flat(&self, v: &[f64]) -> DVector<f64> {
        assert_eq!(v.len(), self.dim());
        let n = self.n;
        let mut out = DVector::zeros(2 * n);
        for l in 0..n {
            out[l] = -v[n + l];
            out[n + l] = v[l];
        }
        out
    }

    /// Parse an observable over this chart's coordinates.
    pub fn parse(&self, source: &str) -> Result<Expression, crate::expr::ParseError> {
        Expression::parse(source, &self.coords)
    }
}

/// A scalar field with enough structure for coefficient calculus: values
/// and gradients at points.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, z: &[f64]) -> Result<f64, EvalError>;
    fn gradient(&self, z: &[f64]) -> Result<DVector<f64>, EvalError>;
}

impl ScalarField for Expression {
    fn dim(&self) -> usize {
        Expression::dim(self)
    }

    fn value(&self, z: &[f64]) -> Result<f64, EvalError> {
        self.eval(z)
    }

    fn gradient(&self, z: &[f64]) -> Result<DVector<f64>, EvalError> {
        Expression::gradient(self, z)
    }
}

/// A vector field evaluated numerically: components and their first
/// derivatives at a point. Implementors include expression-backed fields,
/// Hamiltonian fields (derivatives from second-order jets), and pointwise
/// linear combinations.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    fn value_into(&self, z: &[f64], out: &mut [f64]) -> Result<(), EvalError>;

    /// Component Jacobian `J[i][j] = d X^i / d z_j`.
    fn jacobian(&self, z: &[f64]) -> Result<DMatrix<f64>, EvalError>;

    fn value(&self, z: &[f64]) -> Result<DVector<f64>, EvalError> {
        let mut out = DVector::zeros(self.dim());
        self.value_into(z, out.as_mut_slice())?;
        Ok(out)
    }
}

impl<T: VectorField + ?Sized> VectorField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value_into(&self, z: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        (**self).value_into(z, out)
    }

    fn jacobian(&self, z: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        (**self).jacobian(z)
    }
}

impl VectorField for Arc<dyn VectorField> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value_into(&self, z: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        (**self).value_into(z, out)
    }

    fn jacobian(&self, z: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        (**self).jacobian(z)
    }
}

/// Vector field with one expression per chart coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldExpr {
    components: Vec<Expression>,
}

impl VectorFieldExpr {
    pub fn new(components: Vec<Expression>) -> VectorFieldExpr {
        assert!(!components.is_empty(), "a vector field needs components");
        let dim = components[0].dim();
        assert_eq!(
            components.len(),
            dim,
            "component count must match the chart dimension"
        );
        assert!(
            components.iter().all(|c| c.coords() == components[0].coords()),
            "components must share one coordinate list"
        );
        VectorFieldExpr { components }
    }

    pub fn parse<S: AsRef<str>>(sources: &[&str], coords: &[S]) -> Result<VectorFieldExpr, crate::expr::ParseError> {
        let components = sources
            .iter()
            .map(|s| Expression::parse(s, coords))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(VectorFieldExpr::new(components))
    }

    /// The coordinate frame field `d/d coords[index]`.
    pub fn coordinate_axis<S: AsRef<str>>(coords: &[S], index: usize) -> VectorFieldExpr {
        let components = (0..coords.len())
            .map(|i| Expression::constant(coords, if i == index { 1.0 } else { 0.0 }))
            .collect();
        VectorFieldExpr::new(components)
    }

    pub fn components(&self) -> &[Expression] {
        &self.components
    }
}

impl VectorField for VectorFieldExpr {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn value_into(&self, z: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(z)?;
        }
        Ok(())
    }

    fn jacobian(&self, z: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        let d = self.dim();
        let mut j = DMatrix::zeros(d, d);
        for (i, c) in self.components.iter().enumerate() {
            let g = c.gradient(z)?;
            j.row_mut(i).copy_from(&g.transpose());
        }
        Ok(j)
    }
}

/// `X_F = Omega# dF`. Values come from one dual pass per coordinate, the
/// Jacobian from the Hessian of `F`: `J[X_F] = Omega_matrix H_F`.
pub struct HamiltonianField {
    f: Expression,
    chart: SymplecticChart,
}

impl HamiltonianField {
    pub fn generator(&self) -> &Expression {
        &self.f
    }

    pub fn chart(&self) -> &SymplecticChart {
        &self.chart
    }
}

impl VectorField for HamiltonianField {
    fn dim(&self) -> usize {
        self.chart.dim()
    }

    fn value_into(&self, z: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        let n = self.chart.n;
        let d = 2 * n;
        let mut seed = vec![0.0; d];
        // grad F, one dual pass per coordinate, written straight through sharp:
        // out_p = dF/dq, out_q = -dF/dp.
        for l in 0..d {
            seed[l] = 1.0;
            let (_, dl) = self.f.eval_dual(z, &seed)?;
            seed[l] = 0.0;
            if l < n {
                out[n + l] = -dl;
            } else {
                out[l - n] = dl;
            }
        }
        Ok(())
    }

    fn jacobian(&self, z: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        let n = self.chart.n;
        let h = self.f.jet(z)?.hessian;
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for col in 0..2 * n {
            for l in 0..n {
                j[(l, col)] = h[(n + l, col)];
                j[(n + l, col)] = -h[(l, col)];
            }
        }
        Ok(j)
    }
}

/// `sum_i c_i(z) X_i(z)` with scalar coefficient fields. The Jacobian picks
/// up both the coefficient gradients and the field Jacobians.
pub struct LinearCombinationField {
    coeffs: Vec<Arc<dyn ScalarField>>,
    fields: Vec<Arc<dyn VectorField>>,
}

impl LinearCombinationField {
    pub fn new(
        coeffs: Vec<Arc<dyn ScalarField>>,
        fields: Vec<Arc<dyn VectorField>>,
    ) -> LinearCombinationField {
        assert_eq!(coeffs.len(), fields.len(), "one coefficient per field");
        assert!(!fields.is_empty(), "empty combination");
        let d = fields[0].dim();
        assert!(fields.iter().all(|f| f.dim() == d));
        LinearCombinationField { coeffs, fields }
    }
}

impl VectorField for LinearCombinationField {
    fn dim(&self) -> usize {
        self.fields[0].dim()
    }

    fn value_into(&self, z: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        out.fill(0.0);
        let mut buf = vec![0.0; self.dim()];
        for (c, x) in self.coeffs.iter().zip(&self.fields) {
            let cv = c.value(z)?;
            x.value_into(z, &mut buf)?;
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += cv * *b;
            }
        }
        Ok(())
    }

    fn jacobian(&self, z: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        let d = self.dim();
        let mut j = DMatrix::zeros(d, d);
        for (c, x) in self.coeffs.iter().zip(&self.fields) {
            let cv = c.value(z)?;
            let cg = c.gradient(z)?;
            let xv = x.value(z)?;
            let xj = x.jacobian(z)?;
            j += cv * xj + xv * cg.transpose();
        }
        Ok(j)
    }
}

/// Build `X_F` on the chart.
pub fn hamiltonian_field(chart: &SymplecticChart, f: Expression) -> HamiltonianField {
    assert_eq!(
        f.coords(),
        chart.coords(),
        "observable must live on the chart"
    );
    HamiltonianField {
        f,
        chart: chart.clone(),
    }
}

/// `{F, G}(z) = dG(X_F)(z)`; equals `+1` on the pair `(q, p)`.
pub fn poisson_bracket(
    chart: &SymplecticChart,
    f: &Expression,
    g: &Expression,
    z: &[f64],
) -> Result<f64, EvalError> {
    let gf = f.gradient(z)?;
    let gg = g.gradient(z)?;
    Poissonate::bracket(chart.n, gf.as_slice(), gg.as_slice())
}

struct Poissonate;

impl Poissonate {
    fn bracket(n: usize, grad_f: &[f64], grad_g: &[f64]) -> Result<f64, EvalError> {
        let mut acc = 0.0;
        for l in 0..n {
            acc += grad_f[n + l] * grad_g[l] - grad_f[l] * grad_g[n + l];
        }
        Ok(acc)
    }
}

/// Bracket from precomputed gradients; used where gradients are reused.
pub fn poisson_bracket_grads(n: usize, grad_f: &DVector<f64>, grad_g: &DVector<f64>) -> f64 {
    let mut acc = 0.0;
    for l in 0..n {
        acc += grad_f[n + l] * grad_g[l] - grad_f[l] * grad_g[n + l];
    }
    acc
}

/// `[X, Y](z) = J_Y X(z) - J_X Y(z)`.
pub fn lie_bracket(
    x: &dyn VectorField,
    y: &dyn VectorField,
    z: &[f64],
) -> Result<DVector<f64>, EvalError> {
    let xv = x.value(z)?;
    let yv = y.value(z)?;
    let jx = x.jacobian(z)?;
    let jy = y.jacobian(z)?;
    Ok(jy * xv - jx * yv)
}

/// Cartan formula from value-level data: `alpha_v` and its Jacobian
/// `j_alpha` at the point, `xv` and `jx` likewise.
/// `(L_X alpha)_i = X^j d_j alpha_i + alpha_j d_i X^j`.
pub fn lie_derivative_oneform_at(
    xv: &DVector<f64>,
    jx: &DMatrix<f64>,
    alpha_v: &DVector<f64>,
    j_alpha: &DMatrix<f64>,
) -> DVector<f64> {
    j_alpha * xv + jx.transpose() * alpha_v
}

/// [`lie_derivative_oneform_at`] for a covector given componentwise.
pub fn lie_derivative_oneform(
    x: &dyn VectorField,
    alpha: &[Expression],
    z: &[f64],
) -> Result<DVector<f64>, EvalError> {
    let d = x.dim();
    assert_eq!(alpha.len(), d, "covector needs one component per coordinate");
    let xv = x.value(z)?;
    let jx = x.jacobian(z)?;
    let mut alpha_v = DVector::zeros(d);
    let mut j_alpha = DMatrix::zeros(d, d);
    for (i, a) in alpha.iter().enumerate() {
        alpha_v[i] = a.eval(z)?;
        j_alpha.row_mut(i).copy_from(&a.gradient(z)?.transpose());
    }
    Ok(lie_derivative_oneform_at(&xv, &jx, &alpha_v, &j_alpha))
}
