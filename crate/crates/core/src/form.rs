//! Differential forms, vector fields and endomorphism fields on a chart.
//!
//! All three are lazy expression graphs evaluated at [`Jet`] points. The
//! exterior derivative, Lie brackets and pullbacks differentiate their
//! inputs by seeding a fresh infinitesimal, so compositions of operators are
//! exact to rounding at any nesting depth.
//!
//! ```
//! use lcslab::chart::Chart;
//! use lcslab::form::{DifferentialForm, VectorField};
//!
//! let plane = Chart::new("plane", &["x", "y"]).shared();
//! let x = plane.var("x");
//! let alpha = DifferentialForm::one_form(&plane, vec![0.0.into(), x.clone()]).unwrap();
//! let area = alpha.d();
//! assert_eq!(area.coefficients(&[0.3, 0.4]).unwrap(), vec![1.0]);
//! let dx = VectorField::coordinate(&plane, 0);
//! let contracted = area.interior(&dx).unwrap();
//! assert_eq!(contracted.coefficients(&[0.3, 0.4]).unwrap(), vec![0.0, 1.0]);
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::chart::{Chart, SmoothMap};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{self, Jet};
use crate::multiindex::{binom, below, masks, parity_sign, rank, sort_indices, wedge_sign};

/// Coefficients of a form computed by user code.
pub trait FormKernel: Send + Sync + fmt::Debug {
    /// Coefficients at `x` in storage order (see [`crate::multiindex`]).
    fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>>;
}

/// Components of a vector field computed by user code.
pub trait FieldKernel: Send + Sync + fmt::Debug {
    fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>>;
}

/// An `n × n` matrix field computed by user code, row-major.
pub trait EndoKernel: Send + Sync + fmt::Debug {
    fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>>;
}

#[derive(Clone, Copy, Debug)]
enum ScalarFn {
    Exp,
    Ln,
    Recip,
    Sqrt,
}

#[derive(Debug)]
enum FormNode {
    Zero,
    Coeffs(Vec<Expr>),
    Sum(DifferentialForm, DifferentialForm),
    Scale(f64, DifferentialForm),
    Mul(DifferentialForm, DifferentialForm),
    Func(ScalarFn, DifferentialForm),
    Wedge(DifferentialForm, DifferentialForm),
    D(DifferentialForm),
    Interior(VectorField, DifferentialForm),
    Pullback(SmoothMap, DifferentialForm),
    Custom(Arc<dyn FormKernel>),
}

/// A `k`-form `Σ_I α_I dx_I` on a chart.
#[derive(Clone)]
pub struct DifferentialForm {
    chart: Arc<Chart>,
    degree: usize,
    node: Arc<FormNode>,
}

/// Functions are 0-forms.
pub type ScalarField = DifferentialForm;

impl fmt::Debug for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-form on {}", self.degree, self.chart.name())
    }
}

fn same_chart(a: &Chart, b: &Chart, op: &str) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(Error::usage(format!("{op}: chart `{}` does not match `{}`", a.name(), b.name())))
    }
}

impl DifferentialForm {
    fn with_node(chart: &Arc<Chart>, degree: usize, node: FormNode) -> Self {
        DifferentialForm { chart: chart.clone(), degree, node: Arc::new(node) }
    }

    /// The zero form; degrees above the chart dimension are allowed and
    /// have no coefficients.
    pub fn zero(chart: &Arc<Chart>, degree: usize) -> Self {
        Self::with_node(chart, degree, FormNode::Zero)
    }

    /// A form from its coefficients in storage order.
    pub fn from_exprs(chart: &Arc<Chart>, degree: usize, coeffs: Vec<Expr>) -> Result<Self> {
        let want = binom(chart.dim(), degree);
        if coeffs.len() != want || degree > chart.dim() {
            return Err(Error::usage(format!(
                "a {degree}-form on `{}` has {want} coefficients, got {}",
                chart.name(),
                coeffs.len()
            )));
        }
        if coeffs.iter().all(Expr::is_zero) {
            return Ok(Self::zero(chart, degree));
        }
        Ok(Self::with_node(chart, degree, FormNode::Coeffs(coeffs)))
    }

    /// A form from `(indices, coefficient)` pairs. Indices may come in any
    /// order; they are sorted with the permutation sign, and repeated pairs
    /// accumulate.
    pub fn from_components(
        chart: &Arc<Chart>,
        degree: usize,
        terms: Vec<(Vec<usize>, Expr)>,
    ) -> Result<Self> {
        let n = chart.dim();
        if degree > n {
            return Err(Error::usage(format!("degree {degree} exceeds chart dimension {n}")));
        }
        let mut coeffs = vec![Expr::constant(0.0); binom(n, degree)];
        for (idx, e) in terms {
            if idx.len() != degree || idx.iter().any(|&i| i >= n) {
                return Err(Error::usage(format!(
                    "index {idx:?} does not name a {degree}-form component on `{}`",
                    chart.name()
                )));
            }
            let Some((mask, sign)) = sort_indices(&idx) else {
                // Repeated index: dx ∧ dx = 0.
                continue;
            };
            let slot = &mut coeffs[rank(mask)];
            *slot = if sign > 0.0 { &*slot + &e } else { &*slot - &e };
        }
        Self::from_exprs(chart, degree, coeffs)
    }

    pub fn scalar(chart: &Arc<Chart>, e: Expr) -> Self {
        Self::from_exprs(chart, 0, vec![e]).expect("one coefficient")
    }

    pub fn constant(chart: &Arc<Chart>, v: f64) -> Self {
        Self::scalar(chart, Expr::constant(v))
    }

    /// `Σ aᵢ dxᵢ`.
    pub fn one_form(chart: &Arc<Chart>, coeffs: Vec<Expr>) -> Result<Self> {
        Self::from_exprs(chart, 1, coeffs)
    }

    /// The coordinate 1-form `dxᵢ`.
    pub fn dx(chart: &Arc<Chart>, i: usize) -> Self {
        let mut c = vec![Expr::constant(0.0); chart.dim()];
        c[i] = Expr::constant(1.0);
        Self::from_exprs(chart, 1, c).expect("valid index")
    }

    /// A form whose coefficients come from a kernel.
    pub fn custom(chart: &Arc<Chart>, degree: usize, kernel: Arc<dyn FormKernel>) -> Self {
        Self::with_node(chart, degree, FormNode::Custom(kernel))
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_structurally_zero(&self) -> bool {
        matches!(*self.node, FormNode::Zero)
    }

    /// Coefficients at a jet point, in storage order.
    pub fn eval_jets(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        let n = self.chart.dim();
        let k = self.degree;
        match &*self.node {
            FormNode::Zero => Ok(vec![Jet::zero(); binom(n, k)]),
            FormNode::Coeffs(es) => Ok(es.iter().map(|e| e.eval(x)).collect()),
            FormNode::Sum(a, b) => {
                let mut u = a.eval_jets(x)?;
                for (p, q) in u.iter_mut().zip(&b.eval_jets(x)?) {
                    *p += q;
                }
                Ok(u)
            }
            FormNode::Scale(c, a) => Ok(a.eval_jets(x)?.iter().map(|v| v.scale(*c)).collect()),
            FormNode::Mul(f, a) => {
                let fv = f.eval_jets(x)?.swap_remove(0);
                if fv.is_zero() {
                    return Ok(vec![Jet::zero(); binom(n, k)]);
                }
                Ok(a.eval_jets(x)?.iter().map(|v| &fv * v).collect())
            }
            FormNode::Func(func, f) => {
                let v = f.eval_jets(x)?.swap_remove(0);
                Ok(vec![match func {
                    ScalarFn::Exp => v.exp(),
                    ScalarFn::Ln => v.ln(),
                    ScalarFn::Recip => v.recip(),
                    ScalarFn::Sqrt => v.sqrt(),
                }])
            }
            FormNode::Wedge(a, b) => {
                let av = a.eval_jets(x)?;
                let bv = b.eval_jets(x)?;
                let mut out = vec![Jet::zero(); binom(n, k)];
                let mb = masks(n, b.degree);
                for (i, m1) in masks(n, a.degree).into_iter().enumerate() {
                    if av[i].is_zero() {
                        continue;
                    }
                    for (j, &m2) in mb.iter().enumerate() {
                        if m1 & m2 != 0 || bv[j].is_zero() {
                            continue;
                        }
                        out[rank(m1 | m2)] += &(&av[i] * &bv[j]).scale(wedge_sign(m1, m2));
                    }
                }
                Ok(out)
            }
            FormNode::D(a) => {
                let order = jet::max_order(x);
                let mut out = vec![Jet::zero(); binom(n, k)];
                let inner = masks(n, a.degree);
                let mut xp = x.to_vec();
                for j in 0..n {
                    xp[j] = x[j].perturbed(order);
                    let c = a.eval_jets(&xp)?;
                    xp[j] = x[j].clone();
                    for (pos, &mask) in inner.iter().enumerate() {
                        if mask & (1 << j) != 0 {
                            continue;
                        }
                        let dj = c[pos].top_derivative(order);
                        if dj.is_zero() {
                            continue;
                        }
                        // dx_j ∧ dx_I = (−1)^{#{i∈I : i<j}} dx_{I∪{j}}
                        out[rank(mask | (1 << j))] += &dj.scale(parity_sign(below(mask, j)));
                    }
                }
                Ok(out)
            }
            FormNode::Interior(field, a) => {
                let xv = field.eval_jets(x)?;
                let av = a.eval_jets(x)?;
                let mut out = vec![Jet::zero(); binom(n, k)];
                for (pos, mask) in masks(n, k).into_iter().enumerate() {
                    for j in 0..n {
                        if mask & (1 << j) != 0 || xv[j].is_zero() {
                            continue;
                        }
                        let c = &av[rank(mask | (1 << j))];
                        if c.is_zero() {
                            continue;
                        }
                        out[pos] += &(&xv[j] * c).scale(parity_sign(below(mask, j)));
                    }
                }
                Ok(out)
            }
            FormNode::Pullback(map, a) => {
                let base: Vec<f64> = x.iter().map(Jet::value).collect();
                if !map.validity().iter().all(|e| e.eval_f64(&base) > 0.0) {
                    return Err(Error::Domain { chart: self.chart.name().to_string(), point: base });
                }
                let y = map.eval_jets(x);
                let yv: Vec<f64> = y.iter().map(Jet::value).collect();
                if !map.target().contains(&yv) {
                    return Err(Error::Domain { chart: map.target().name().to_string(), point: yv });
                }
                let av = a.eval_jets(&y)?;
                if k == 0 {
                    return Ok(av);
                }
                let jac = map.jacobian_jets(x);
                let tgt = masks(map.target().dim(), k);
                let mut out = vec![Jet::zero(); binom(n, k)];
                for (pi, src_mask) in masks(n, k).into_iter().enumerate() {
                    let cols = crate::multiindex::indices(src_mask);
                    for (pj, &tmask) in tgt.iter().enumerate() {
                        if av[pj].is_zero() {
                            continue;
                        }
                        let rows = crate::multiindex::indices(tmask);
                        let m = minor(&jac, &rows, &cols);
                        if !m.is_zero() {
                            out[pi] += &(&av[pj] * &m);
                        }
                    }
                }
                Ok(out)
            }
            FormNode::Custom(kernel) => {
                let v = kernel.eval(x)?;
                if v.len() != binom(n, k) {
                    return Err(Error::usage(format!(
                        "form kernel returned {} coefficients, expected {}",
                        v.len(),
                        binom(n, k)
                    )));
                }
                Ok(v)
            }
        }
    }

    /// Coefficients at a point of the chart, in storage order.
    pub fn coefficients(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.chart.check(p)?;
        let v: Vec<f64> = self.eval_jets(&jet::constants(p))?.iter().map(Jet::value).collect();
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::non_finite(format!("{self:?} at {p:?}")));
        }
        Ok(v)
    }

    /// The coefficient `α_{i₁…i_k}` at `p`; indices may be unsorted.
    pub fn component(&self, p: &[f64], idx: &[usize]) -> Result<f64> {
        if idx.len() != self.degree {
            return Err(Error::usage("index length must equal the degree"));
        }
        let Some((mask, sign)) = sort_indices(idx) else {
            return Ok(0.0);
        };
        Ok(sign * self.coefficients(p)?[rank(mask)])
    }

    /// Value of a 0-form.
    pub fn value(&self, p: &[f64]) -> Result<f64> {
        if self.degree != 0 {
            return Err(Error::usage("value() needs a 0-form"));
        }
        Ok(self.coefficients(p)?[0])
    }

    /// `α_p(v₁, …, v_k)`.
    pub fn eval_on(&self, p: &[f64], vectors: &[Vec<f64>]) -> Result<f64> {
        if vectors.len() != self.degree {
            return Err(Error::usage(format!(
                "a {}-form takes {} vectors, got {}",
                self.degree,
                self.degree,
                vectors.len()
            )));
        }
        let n = self.chart.dim();
        if vectors.iter().any(|v| v.len() != n) {
            return Err(Error::usage("tangent vector dimension does not match the chart"));
        }
        let c = self.coefficients(p)?;
        Ok(apply_coefficients(n, &c, vectors))
    }

    /// The skew matrix `ω_ij = ω(∂ᵢ, ∂ⱼ)` of a 2-form.
    pub fn matrix(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        if self.degree != 2 {
            return Err(Error::usage("matrix() needs a 2-form"));
        }
        let n = self.chart.dim();
        let c = self.coefficients(p)?;
        let mut m = DMatrix::zeros(n, n);
        for (pos, mask) in masks(n, 2).into_iter().enumerate() {
            let ij = crate::multiindex::indices(mask);
            m[(ij[0], ij[1])] = c[pos];
            m[(ij[1], ij[0])] = -c[pos];
        }
        Ok(m)
    }

    pub fn d(&self) -> DifferentialForm {
        if self.is_structurally_zero() || self.degree >= self.chart.dim() {
            return Self::zero(&self.chart, self.degree + 1);
        }
        if let FormNode::Coeffs(es) = &*self.node {
            if es.iter().all(|e| e.as_constant().is_some()) {
                return Self::zero(&self.chart, self.degree + 1);
            }
        }
        Self::with_node(&self.chart, self.degree + 1, FormNode::D(self.clone()))
    }

    pub fn wedge(&self, other: &DifferentialForm) -> Result<DifferentialForm> {
        same_chart(&self.chart, &other.chart, "wedge")?;
        let k = self.degree + other.degree;
        if k > self.chart.dim() || self.is_structurally_zero() || other.is_structurally_zero() {
            return Ok(Self::zero(&self.chart, k));
        }
        if self.degree == 0 {
            return other.times(self);
        }
        if other.degree == 0 {
            return self.times(other);
        }
        Ok(Self::with_node(&self.chart, k, FormNode::Wedge(self.clone(), other.clone())))
    }

    pub fn interior(&self, field: &VectorField) -> Result<DifferentialForm> {
        same_chart(&self.chart, &field.chart, "interior product")?;
        if self.degree == 0 {
            return Err(Error::usage("interior product of a 0-form"));
        }
        if self.is_structurally_zero() || field.is_structurally_zero() {
            return Ok(Self::zero(&self.chart, self.degree - 1));
        }
        Ok(Self::with_node(
            &self.chart,
            self.degree - 1,
            FormNode::Interior(field.clone(), self.clone()),
        ))
    }

    /// `map* self`; `self` must live on the map's target chart.
    pub fn pullback(&self, map: &SmoothMap) -> Result<DifferentialForm> {
        same_chart(&self.chart, map.target(), "pullback")?;
        let src = map.source();
        if self.degree > src.dim() || self.is_structurally_zero() {
            return Ok(Self::zero(src, self.degree));
        }
        Ok(Self::with_node(src, self.degree, FormNode::Pullback(map.clone(), self.clone())))
    }

    pub fn plus(&self, other: &DifferentialForm) -> Result<DifferentialForm> {
        same_chart(&self.chart, &other.chart, "sum")?;
        if self.degree != other.degree {
            return Err(Error::usage(format!(
                "cannot add a {}-form and a {}-form",
                self.degree, other.degree
            )));
        }
        if self.is_structurally_zero() {
            return Ok(other.clone());
        }
        if other.is_structurally_zero() {
            return Ok(self.clone());
        }
        Ok(Self::with_node(&self.chart, self.degree, FormNode::Sum(self.clone(), other.clone())))
    }

    pub fn minus(&self, other: &DifferentialForm) -> Result<DifferentialForm> {
        self.plus(&other.scaled(-1.0))
    }

    pub fn scaled(&self, c: f64) -> DifferentialForm {
        if c == 0.0 || self.is_structurally_zero() {
            return Self::zero(&self.chart, self.degree);
        }
        if c == 1.0 {
            return self.clone();
        }
        Self::with_node(&self.chart, self.degree, FormNode::Scale(c, self.clone()))
    }

    /// `f · self` for a 0-form `f`.
    pub fn times(&self, f: &ScalarField) -> Result<DifferentialForm> {
        same_chart(&self.chart, &f.chart, "product")?;
        if f.degree != 0 {
            return Err(Error::usage("times() multiplies by a 0-form"));
        }
        if self.is_structurally_zero() || f.is_structurally_zero() {
            return Ok(Self::zero(&self.chart, self.degree));
        }
        Ok(Self::with_node(&self.chart, self.degree, FormNode::Mul(f.clone(), self.clone())))
    }

    fn func(&self, func: ScalarFn) -> Result<ScalarField> {
        if self.degree != 0 {
            return Err(Error::usage("scalar functions apply to 0-forms"));
        }
        Ok(Self::with_node(&self.chart, 0, FormNode::Func(func, self.clone())))
    }

    /// `e^f` of a 0-form.
    pub fn exp(&self) -> Result<ScalarField> {
        self.func(ScalarFn::Exp)
    }

    pub fn ln(&self) -> Result<ScalarField> {
        self.func(ScalarFn::Ln)
    }

    pub fn recip(&self) -> Result<ScalarField> {
        self.func(ScalarFn::Recip)
    }

    pub fn sqrt(&self) -> Result<ScalarField> {
        self.func(ScalarFn::Sqrt)
    }
}

impl Add for DifferentialForm {
    type Output = DifferentialForm;
    /// # Panics
    ///
    /// On chart or degree mismatch; use [`DifferentialForm::plus`] to get an error instead.
    fn add(self, rhs: DifferentialForm) -> DifferentialForm {
        self.plus(&rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Add for &DifferentialForm {
    type Output = DifferentialForm;
    fn add(self, rhs: &DifferentialForm) -> DifferentialForm {
        self.plus(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Sub for DifferentialForm {
    type Output = DifferentialForm;
    fn sub(self, rhs: DifferentialForm) -> DifferentialForm {
        self.minus(&rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Sub for &DifferentialForm {
    type Output = DifferentialForm;
    fn sub(self, rhs: &DifferentialForm) -> DifferentialForm {
        self.minus(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Neg for DifferentialForm {
    type Output = DifferentialForm;
    fn neg(self) -> DifferentialForm {
        self.scaled(-1.0)
    }
}

impl Neg for &DifferentialForm {
    type Output = DifferentialForm;
    fn neg(self) -> DifferentialForm {
        self.scaled(-1.0)
    }
}

impl Mul<&DifferentialForm> for f64 {
    type Output = DifferentialForm;
    fn mul(self, rhs: &DifferentialForm) -> DifferentialForm {
        rhs.scaled(self)
    }
}

impl Mul<DifferentialForm> for f64 {
    type Output = DifferentialForm;
    fn mul(self, rhs: DifferentialForm) -> DifferentialForm {
        rhs.scaled(self)
    }
}

/// Determinant of the `rows × cols` submatrix, by Laplace expansion.
pub(crate) fn minor(m: &[Vec<Jet>], rows: &[usize], cols: &[usize]) -> Jet {
    match rows.len() {
        0 => Jet::constant(1.0),
        1 => m[rows[0]][cols[0]].clone(),
        2 => {
            &(&m[rows[0]][cols[0]] * &m[rows[1]][cols[1]])
                - &(&m[rows[0]][cols[1]] * &m[rows[1]][cols[0]])
        }
        _ => {
            let mut acc = Jet::zero();
            let rest_rows = &rows[1..];
            for (i, &c) in cols.iter().enumerate() {
                let a = &m[rows[0]][c];
                if a.is_zero() {
                    continue;
                }
                let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
                let term = a * &minor(m, rest_rows, &rest);
                acc += &term.scale(parity_sign(i as u32));
            }
            acc
        }
    }
}

#[derive(Debug)]
enum FieldNode {
    Zero,
    Components(Vec<ScalarField>),
    Sum(VectorField, VectorField),
    Scale(f64, VectorField),
    Mul(ScalarField, VectorField),
    Bracket(VectorField, VectorField),
    Apply(EndoField, VectorField),
    Custom(Arc<dyn FieldKernel>),
}

/// A vector field `Σ Xⁱ ∂ᵢ` on a chart.
#[derive(Clone)]
pub struct VectorField {
    chart: Arc<Chart>,
    node: Arc<FieldNode>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "vector field on {}", self.chart.name())
    }
}

/// `f(x + εv)` read along `ε`: the derivative of `f` at `x` in direction `v`.
pub(crate) fn directional(
    x: &[Jet],
    v: &[Jet],
    f: impl Fn(&[Jet]) -> Result<Vec<Jet>>,
) -> Result<Vec<Jet>> {
    let k = jet::max_order(x).max(jet::max_order(v));
    let xp: Vec<Jet> = x.iter().zip(v).map(|(a, b)| Jet::with_top(a, b, k)).collect();
    Ok(f(&xp)?.iter().map(|c| c.top_derivative(k)).collect())
}

impl VectorField {
    fn with_node(chart: &Arc<Chart>, node: FieldNode) -> Self {
        VectorField { chart: chart.clone(), node: Arc::new(node) }
    }

    pub fn zero(chart: &Arc<Chart>) -> Self {
        Self::with_node(chart, FieldNode::Zero)
    }

    pub fn from_exprs(chart: &Arc<Chart>, comps: Vec<Expr>) -> Result<Self> {
        if comps.len() != chart.dim() {
            return Err(Error::usage(format!(
                "a vector field on `{}` has {} components, got {}",
                chart.name(),
                chart.dim(),
                comps.len()
            )));
        }
        if comps.iter().all(Expr::is_zero) {
            return Ok(Self::zero(chart));
        }
        let fields = comps.into_iter().map(|e| DifferentialForm::scalar(chart, e)).collect();
        Ok(Self::with_node(chart, FieldNode::Components(fields)))
    }

    pub fn from_fields(chart: &Arc<Chart>, comps: Vec<ScalarField>) -> Result<Self> {
        if comps.len() != chart.dim() {
            return Err(Error::usage("component count must equal the chart dimension"));
        }
        for c in &comps {
            same_chart(chart, c.chart(), "vector field component")?;
            if c.degree() != 0 {
                return Err(Error::usage("vector field components are 0-forms"));
            }
        }
        Ok(Self::with_node(chart, FieldNode::Components(comps)))
    }

    /// Parses one expression per coordinate.
    pub fn parse(chart: &Arc<Chart>, srcs: &[&str], params: &BTreeMap<String, f64>) -> Result<Self> {
        let comps = srcs.iter().map(|s| chart.parse_with(s, params)).collect::<Result<Vec<_>>>()?;
        Self::from_exprs(chart, comps)
    }

    /// The coordinate field `∂ᵢ`.
    pub fn coordinate(chart: &Arc<Chart>, i: usize) -> Self {
        let mut c = vec![Expr::constant(0.0); chart.dim()];
        c[i] = Expr::constant(1.0);
        Self::from_exprs(chart, c).expect("valid index")
    }

    /// A constant field.
    pub fn constant(chart: &Arc<Chart>, v: &[f64]) -> Result<Self> {
        Self::from_exprs(chart, v.iter().map(|&c| Expr::constant(c)).collect())
    }

    pub fn custom(chart: &Arc<Chart>, kernel: Arc<dyn FieldKernel>) -> Self {
        Self::with_node(chart, FieldNode::Custom(kernel))
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn is_structurally_zero(&self) -> bool {
        matches!(*self.node, FieldNode::Zero)
    }

    pub fn eval_jets(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        let n = self.chart.dim();
        match &*self.node {
            FieldNode::Zero => Ok(vec![Jet::zero(); n]),
            FieldNode::Components(cs) => {
                cs.iter().map(|c| Ok(c.eval_jets(x)?.swap_remove(0))).collect()
            }
            FieldNode::Sum(a, b) => {
                let mut u = a.eval_jets(x)?;
                for (p, q) in u.iter_mut().zip(&b.eval_jets(x)?) {
                    *p += q;
                }
                Ok(u)
            }
            FieldNode::Scale(c, a) => Ok(a.eval_jets(x)?.iter().map(|v| v.scale(*c)).collect()),
            FieldNode::Mul(f, a) => {
                let fv = f.eval_jets(x)?.swap_remove(0);
                Ok(a.eval_jets(x)?.iter().map(|v| &fv * v).collect())
            }
            FieldNode::Bracket(a, b) => {
                let av = a.eval_jets(x)?;
                let bv = b.eval_jets(x)?;
                let da_b = directional(x, &av, |y| b.eval_jets(y))?;
                let db_a = directional(x, &bv, |y| a.eval_jets(y))?;
                Ok(da_b.iter().zip(&db_a).map(|(p, q)| p - q).collect())
            }
            FieldNode::Apply(j, a) => {
                let m = j.eval_jets(x)?;
                let v = a.eval_jets(x)?;
                Ok((0..n)
                    .map(|i| {
                        let mut acc = Jet::zero();
                        for (k, vk) in v.iter().enumerate() {
                            let e = &m[i * n + k];
                            if !e.is_zero() && !vk.is_zero() {
                                acc += &(e * vk);
                            }
                        }
                        acc
                    })
                    .collect())
            }
            FieldNode::Custom(kernel) => {
                let v = kernel.eval(x)?;
                if v.len() != n {
                    return Err(Error::usage("field kernel returned the wrong component count"));
                }
                Ok(v)
            }
        }
    }

    /// Components at a point.
    pub fn at(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.chart.check(p)?;
        let v: Vec<f64> = self.eval_jets(&jet::constants(p))?.iter().map(Jet::value).collect();
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::non_finite(format!("{self:?} at {p:?}")));
        }
        Ok(v)
    }

    /// The `i`-th component as a function, `dxᵢ(X)`.
    pub fn component(&self, i: usize) -> ScalarField {
        DifferentialForm::dx(&self.chart, i).interior(self).expect("same chart")
    }

    /// `X(f) = df(X)`.
    pub fn apply_to(&self, f: &ScalarField) -> Result<ScalarField> {
        if f.degree() != 0 {
            return Err(Error::usage("a vector field differentiates 0-forms"));
        }
        f.d().interior(self)
    }

    pub fn bracket(&self, other: &VectorField) -> Result<VectorField> {
        same_chart(&self.chart, &other.chart, "Lie bracket")?;
        if self.is_structurally_zero() || other.is_structurally_zero() {
            return Ok(Self::zero(&self.chart));
        }
        Ok(Self::with_node(&self.chart, FieldNode::Bracket(self.clone(), other.clone())))
    }

    pub fn plus(&self, other: &VectorField) -> Result<VectorField> {
        same_chart(&self.chart, &other.chart, "sum")?;
        if self.is_structurally_zero() {
            return Ok(other.clone());
        }
        if other.is_structurally_zero() {
            return Ok(self.clone());
        }
        Ok(Self::with_node(&self.chart, FieldNode::Sum(self.clone(), other.clone())))
    }

    pub fn minus(&self, other: &VectorField) -> Result<VectorField> {
        self.plus(&other.scaled(-1.0))
    }

    pub fn scaled(&self, c: f64) -> VectorField {
        if c == 0.0 || self.is_structurally_zero() {
            return Self::zero(&self.chart);
        }
        if c == 1.0 {
            return self.clone();
        }
        Self::with_node(&self.chart, FieldNode::Scale(c, self.clone()))
    }

    pub fn times(&self, f: &ScalarField) -> Result<VectorField> {
        same_chart(&self.chart, f.chart(), "product")?;
        if f.degree() != 0 {
            return Err(Error::usage("vector fields are multiplied by 0-forms"));
        }
        if self.is_structurally_zero() || f.is_structurally_zero() {
            return Ok(Self::zero(&self.chart));
        }
        Ok(Self::with_node(&self.chart, FieldNode::Mul(f.clone(), self.clone())))
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    /// # Panics
    ///
    /// On chart mismatch.
    fn add(self, rhs: &VectorField) -> VectorField {
        self.plus(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        self.minus(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

#[derive(Debug)]
enum EndoNode {
    Matrix(Vec<ScalarField>),
    Custom(Arc<dyn EndoKernel>),
}

/// A field of linear maps `J: TU → TU`, such as an almost complex structure.
#[derive(Clone)]
pub struct EndoField {
    chart: Arc<Chart>,
    node: Arc<EndoNode>,
}

impl fmt::Debug for EndoField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "endomorphism field on {}", self.chart.name())
    }
}

impl EndoField {
    /// From a row-major matrix of expressions; column `j` is the image of `∂ⱼ`.
    pub fn from_rows(chart: &Arc<Chart>, rows: Vec<Vec<Expr>>) -> Result<Self> {
        let n = chart.dim();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::usage(format!("an endomorphism field on `{}` is {n}×{n}", chart.name())));
        }
        let entries = rows.into_iter().flatten().map(|e| DifferentialForm::scalar(chart, e)).collect();
        Ok(EndoField { chart: chart.clone(), node: Arc::new(EndoNode::Matrix(entries)) })
    }

    pub fn constant(chart: &Arc<Chart>, m: &DMatrix<f64>) -> Result<Self> {
        let n = chart.dim();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| Expr::constant(m.get((i, j)).copied().unwrap_or(f64::NAN))).collect())
            .collect();
        Self::from_rows(chart, rows)
    }

    pub fn custom(chart: &Arc<Chart>, kernel: Arc<dyn EndoKernel>) -> Self {
        EndoField { chart: chart.clone(), node: Arc::new(EndoNode::Custom(kernel)) }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    /// Row-major entries at a jet point.
    pub fn eval_jets(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        let n = self.chart.dim();
        let v = match &*self.node {
            EndoNode::Matrix(es) => {
                es.iter().map(|e| Ok(e.eval_jets(x)?.swap_remove(0))).collect::<Result<Vec<_>>>()?
            }
            EndoNode::Custom(k) => k.eval(x)?,
        };
        if v.len() != n * n {
            return Err(Error::usage("endomorphism kernel returned the wrong entry count"));
        }
        Ok(v)
    }

    pub fn matrix(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.chart.check(p)?;
        let n = self.chart.dim();
        let v = self.eval_jets(&jet::constants(p))?;
        Ok(DMatrix::from_fn(n, n, |i, j| v[i * n + j].value()))
    }

    /// The field `J X`.
    pub fn apply(&self, field: &VectorField) -> Result<VectorField> {
        same_chart(&self.chart, field.chart(), "endomorphism application")?;
        if field.is_structurally_zero() {
            return Ok(VectorField::zero(&self.chart));
        }
        Ok(VectorField::with_node(&self.chart, FieldNode::Apply(self.clone(), field.clone())))
    }

    /// `max |J² + I|` at `p`.
    pub fn square_defect(&self, p: &[f64]) -> Result<f64> {
        let m = self.matrix(p)?;
        let n = m.nrows();
        let d = &m * &m + DMatrix::<f64>::identity(n, n);
        Ok(d.amax())
    }
}

/// `α(v₁, …, v_k)` from the coefficients of a `k`-form on an `n`-chart,
/// with `k = vectors.len()`.
pub fn apply_coefficients(n: usize, coeffs: &[f64], vectors: &[Vec<f64>]) -> f64 {
    let k = vectors.len();
    let cols: Vec<usize> = (0..k).collect();
    let vj: Vec<Vec<Jet>> = (0..n).map(|i| vectors.iter().map(|v| Jet::constant(v[i])).collect()).collect();
    let mut total = 0.0;
    for (pos, mask) in masks(n, k).into_iter().enumerate() {
        if coeffs[pos] != 0.0 {
            total += coeffs[pos] * minor(&vj, &crate::multiindex::indices(mask), &cols).value();
        }
    }
    total
}

/// `v = M⁻¹ b` over jets, by Gauss–Jordan with partial pivoting on values.
pub(crate) fn solve_jets(m: &[Vec<Jet>], b: &[Vec<Jet>]) -> Result<Vec<Vec<Jet>>> {
    let n = m.len();
    let cols = b.first().map_or(0, Vec::len);
    let mut a: Vec<Vec<Jet>> = m.to_vec();
    let mut rhs: Vec<Vec<Jet>> = b.to_vec();
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| a[i][c].value().abs().total_cmp(&a[j][c].value().abs()))
            .unwrap_or(c);
        if a[piv][c].value().abs() < 1e-300 {
            return Err(Error::Degenerate("singular matrix in jet solve".into()));
        }
        a.swap(c, piv);
        rhs.swap(c, piv);
        let inv = a[c][c].recip();
        for j in 0..n {
            a[c][j] = &a[c][j] * &inv;
        }
        for j in 0..cols {
            rhs[c][j] = &rhs[c][j] * &inv;
        }
        for r in 0..n {
            if r == c || a[r][c].is_zero() {
                continue;
            }
            let f = a[r][c].clone();
            for j in 0..n {
                let t = &f * &a[c][j];
                a[r][j] = &a[r][j] - &t;
            }
            for j in 0..cols {
                let t = &f * &rhs[c][j];
                rhs[r][j] = &rhs[r][j] - &t;
            }
        }
    }
    Ok(rhs)
}

/// `α_p(v₁, …, v_k)` with a domain check.
pub fn eval_form(form: &DifferentialForm, p: &[f64], vectors: &[Vec<f64>]) -> Result<f64> {
    form.eval_on(p, vectors)
}

pub fn wedge(a: &DifferentialForm, b: &DifferentialForm) -> Result<DifferentialForm> {
    a.wedge(b)
}

pub fn exterior_derivative(form: &DifferentialForm) -> DifferentialForm {
    form.d()
}

pub fn interior_product(field: &VectorField, form: &DifferentialForm) -> Result<DifferentialForm> {
    form.interior(field)
}

pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField> {
    x.bracket(y)
}

/// `L_X α = i_X dα + d i_X α`.
pub fn lie_derivative(field: &VectorField, form: &DifferentialForm) -> Result<DifferentialForm> {
    same_chart(field.chart(), form.chart(), "Lie derivative")?;
    let first = form.d().interior(field)?;
    if form.degree() == 0 {
        return Ok(first);
    }
    first.plus(&form.interior(field)?.d())
}

pub fn pullback(map: &SmoothMap, form: &DifferentialForm) -> Result<DifferentialForm> {
    form.pullback(map)
}

/// Parses a scalar field on `chart`.
pub fn parse_field(src: &str, chart: &Arc<Chart>, params: &BTreeMap<String, f64>) -> Result<ScalarField> {
    Ok(DifferentialForm::scalar(chart, chart.parse_with(src, params)?))
}

/// `(max |a − b|, max(|a|, |b|))` over the coefficients at `p`.
pub fn pointwise_residual(a: &DifferentialForm, b: &DifferentialForm, p: &[f64]) -> Result<(f64, f64)> {
    same_chart(a.chart(), b.chart(), "comparison")?;
    if a.degree() != b.degree() {
        return Err(Error::usage("comparison of forms of different degree"));
    }
    let u = a.coefficients(p)?;
    let v = b.coefficients(p)?;
    Ok(residual_and_scale(&u, &v))
}

pub(crate) fn residual_and_scale(u: &[f64], v: &[f64]) -> (f64, f64) {
    let mut r = 0.0_f64;
    let mut s = 0.0_f64;
    for (x, y) in u.iter().zip(v) {
        r = r.max((x - y).abs());
        s = s.max(x.abs()).max(y.abs());
    }
    (r, s)
}

/// `(max |c|, max |c|)` for a form expected to vanish, as residual and scale.
pub fn vanishing_residual(a: &DifferentialForm, p: &[f64]) -> Result<f64> {
    Ok(a.coefficients(p)?.iter().fold(0.0_f64, |m, c| m.max(c.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> Arc<Chart> {
        Chart::new("plane", &["x", "y"]).shared()
    }

    fn r4() -> Arc<Chart> {
        Chart::new("r4", &["x1", "y1", "x2", "y2"]).shared()
    }

    fn eta0(c: &Arc<Chart>) -> DifferentialForm {
        let v = |s: &str| c.var(s);
        DifferentialForm::one_form(c, vec![v("y1"), -v("x1"), v("y2"), -v("x2")]).unwrap()
    }

    #[test]
    fn coordinate_pairing_and_antisymmetry() {
        let c = plane();
        let area = DifferentialForm::dx(&c, 0).wedge(&DifferentialForm::dx(&c, 1)).unwrap();
        let p = [0.2, 0.1];
        assert_eq!(area.eval_on(&p, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(), 1.0);
        assert_eq!(area.eval_on(&p, &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(), -1.0);
        assert!(area.eval_on(&p, &[vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn eta0_values() {
        let c = r4();
        let e = eta0(&c);
        let p = [1.0, 0.0, 0.0, 0.0];
        assert_eq!(e.eval_on(&p, &[vec![1.0, 0.0, 0.0, 0.0]]).unwrap(), 0.0);
        assert_eq!(e.eval_on(&p, &[vec![0.0, 1.0, 0.0, 0.0]]).unwrap(), -1.0);
        let de = e.d();
        assert_eq!(de.component(&[0.3, 0.2, -0.1, 0.5], &[0, 1]).unwrap(), -2.0);
    }

    #[test]
    fn d_squared_of_exponential() {
        let c = plane();
        let f = DifferentialForm::scalar(&c, (c.var("x") * c.var("y")).exp());
        let dd = f.d().d();
        for v in dd.coefficients(&[0.3, -1.2]).unwrap() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn degree_overflow_is_zero() {
        let c = plane();
        let dx = DifferentialForm::dx(&c, 0);
        let w = dx.wedge(&dx).unwrap();
        assert_eq!(w.coefficients(&[0.0, 0.0]).unwrap(), vec![0.0]);
        let area = dx.wedge(&DifferentialForm::dx(&c, 1)).unwrap();
        assert!(area.wedge(&dx).unwrap().is_structurally_zero());
    }

    #[test]
    fn bracket_of_linear_fields() {
        let c = plane();
        let x = VectorField::parse(&c, &["0", "x"], &BTreeMap::new()).unwrap();
        let y = VectorField::parse(&c, &["y", "0"], &BTreeMap::new()).unwrap();
        assert_eq!(x.bracket(&y).unwrap().at(&[1.0, 2.0]).unwrap(), vec![1.0, -2.0]);
    }

    #[test]
    fn lie_derivative_examples() {
        let c = plane();
        let xdy = DifferentialForm::from_components(&c, 1, vec![(vec![1], c.var("x"))]).unwrap();
        let l = lie_derivative(&VectorField::coordinate(&c, 0), &xdy).unwrap();
        assert_eq!(l.coefficients(&[0.7, 0.1]).unwrap(), vec![0.0, 1.0]);
        let f = DifferentialForm::scalar(&c, c.var("x").powi(2) * c.var("y"));
        let lf = lie_derivative(&VectorField::coordinate(&c, 1), &f).unwrap();
        assert_eq!(lf.value(&[2.0, 3.0]).unwrap(), 4.0);
    }

    #[test]
    fn pullback_of_polar_area() {
        let polar = Chart::new("polar", &["r", "phi"]).with_domain_src("r").unwrap().shared();
        let c = plane();
        let map = SmoothMap::parse(&polar, &c, &["r*cos(phi)", "r*sin(phi)"], &BTreeMap::new())
            .unwrap();
        let area = DifferentialForm::dx(&c, 0).wedge(&DifferentialForm::dx(&c, 1)).unwrap();
        let pulled = area.pullback(&map).unwrap();
        let v = pulled.coefficients(&[1.7, 0.4]).unwrap();
        assert!((v[0] - 1.7).abs() < 1e-14);
    }

    #[test]
    fn pullback_outside_target_is_domain_error() {
        let line = Chart::new("line", &["s"]).shared();
        let pos = Chart::new("pos", &["u"]).with_domain_src("u").unwrap().shared();
        let map = SmoothMap::parse(&line, &pos, &["s - 1"], &BTreeMap::new()).unwrap();
        let f = DifferentialForm::scalar(&pos, pos.var("u").ln());
        let g = f.pullback(&map).unwrap();
        assert!(g.value(&[2.0]).is_ok());
        assert!(matches!(g.value(&[0.5]), Err(Error::Domain { .. })));
    }

    #[test]
    fn interior_twice_vanishes() {
        let c = r4();
        let omega = eta0(&c).d();
        let x = VectorField::parse(&c, &["x1*y2", "1", "x2^2", "-y1"], &BTreeMap::new()).unwrap();
        let ii = omega.interior(&x).unwrap().interior(&x).unwrap();
        assert!(ii.value(&[0.3, -0.4, 0.9, 0.2]).unwrap().abs() < 1e-15);
        assert!(DifferentialForm::constant(&c, 1.0).interior(&x).is_err());
    }

    #[test]
    fn endomorphism_application_and_solve() {
        let c = plane();
        let j = EndoField::constant(&c, &DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])).unwrap();
        let jx = j.apply(&VectorField::coordinate(&c, 0)).unwrap();
        assert_eq!(jx.at(&[0.0, 0.0]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(j.square_defect(&[0.0, 0.0]).unwrap(), 0.0);

        let m = vec![
            vec![Jet::constant(2.0), Jet::constant(1.0)],
            vec![Jet::constant(1.0), Jet::constant(3.0)],
        ];
        let b = vec![vec![Jet::constant(3.0)], vec![Jet::constant(5.0)]];
        let s = solve_jets(&m, &b).unwrap();
        assert!((s[0][0].value() - 0.8).abs() < 1e-15);
        assert!((s[1][0].value() - 1.4).abs() < 1e-15);
    }

    #[test]
    fn mismatched_charts_are_usage_errors() {
        let a = plane();
        let b = Chart::new("other", &["u", "v"]).shared();
        let e = DifferentialForm::dx(&a, 0).wedge(&DifferentialForm::dx(&b, 0));
        assert!(matches!(e, Err(Error::Usage(_))));
        let e = VectorField::coordinate(&a, 0).bracket(&VectorField::coordinate(&b, 1));
        assert!(matches!(e, Err(Error::Usage(_))));
    }
}
