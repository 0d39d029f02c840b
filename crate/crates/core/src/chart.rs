//! Coordinate charts and smooth maps between them.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::jet::{self, Jet};

/// How many candidate draws per requested point before sampling gives up.
const REJECTION_BUDGET: usize = 10_000;

/// A coordinate domain `U ⊂ ℝⁿ`.
///
/// A point belongs to the chart when every domain expression is strictly
/// positive there. Samples are drawn uniformly from the sample box and
/// rejected outside the domain.
#[derive(Clone, PartialEq)]
pub struct Chart {
    name: String,
    coords: Vec<String>,
    domain: Vec<Expr>,
    sample_box: Vec<(f64, f64)>,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Chart({}: {})", self.name, self.coords.join(", "))
    }
}

impl Chart {
    /// A chart on all of `ℝⁿ` with sample box `[−1, 1]ⁿ`.
    pub fn new(name: &str, coords: &[&str]) -> Self {
        Chart {
            name: name.to_string(),
            coords: coords.iter().map(|c| c.to_string()).collect(),
            domain: Vec::new(),
            sample_box: vec![(-1.0, 1.0); coords.len()],
        }
    }

    /// `ℝⁿ` with coordinates `x0 … x{n−1}`.
    pub fn euclidean(name: &str, n: usize) -> Self {
        let names: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Chart::new(name, &refs)
    }

    /// Adds a domain condition `expr > 0`.
    pub fn with_domain(mut self, expr: Expr) -> Self {
        self.domain.push(expr);
        self
    }

    /// Adds a parsed domain condition `src > 0`.
    pub fn with_domain_src(self, src: &str) -> Result<Self> {
        let e = self.parse(src)?;
        Ok(self.with_domain(e))
    }

    pub fn with_sample_box(mut self, bounds: &[(f64, f64)]) -> Self {
        assert_eq!(bounds.len(), self.dim(), "sample box dimension");
        self.sample_box = bounds.to_vec();
        self
    }

    pub fn with_sample_range(mut self, coord: usize, lo: f64, hi: f64) -> Self {
        self.sample_box[coord] = (lo, hi);
        self
    }

    pub fn shared(self) -> Arc<Chart> {
        Arc::new(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn domain(&self) -> &[Expr] {
        &self.domain
    }

    pub fn sample_box(&self) -> &[(f64, f64)] {
        &self.sample_box
    }

    pub fn coord_index(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    /// Expression for the coordinate called `name`.
    ///
    /// # Panics
    ///
    /// If the chart has no such coordinate.
    pub fn var(&self, name: &str) -> Expr {
        let i = self
            .coord_index(name)
            .unwrap_or_else(|| panic!("chart `{}` has no coordinate `{name}`", self.name));
        Expr::var(i)
    }

    pub fn parse(&self, src: &str) -> Result<Expr> {
        self.parse_with(src, &BTreeMap::new())
    }

    pub fn parse_with(&self, src: &str, params: &BTreeMap<String, f64>) -> Result<Expr> {
        Ok(expr::parse(src, &self.coords, params)?)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter().all(|v| v.is_finite())
            && self.domain.iter().all(|e| e.eval_f64(p) > 0.0)
    }

    pub(crate) fn check(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::usage(format!(
                "point has {} coordinates, chart `{}` has dimension {}",
                p.len(),
                self.name,
                self.dim()
            )));
        }
        if !self.contains(p) {
            return Err(Error::Domain { chart: self.name.clone(), point: p.to_vec() });
        }
        Ok(())
    }

    /// `n` seeded points of the domain.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        let mut tries = 0;
        while out.len() < n {
            if tries >= REJECTION_BUDGET * n.max(1) {
                return Err(Error::Sampling {
                    chart: self.name.clone(),
                    wanted: n,
                    found: out.len(),
                });
            }
            tries += 1;
            let p: Vec<f64> = self
                .sample_box
                .iter()
                .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..hi) } else { lo })
                .collect();
            if self.contains(&p) {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// The product chart `self × other`; the second factor's coordinates are
    /// renumbered after the first's.
    pub fn product(&self, other: &Chart) -> Result<Chart> {
        for c in &other.coords {
            if self.coords.contains(c) {
                return Err(Error::InvalidInput(format!(
                    "coordinate `{c}` appears in both factors of a product chart"
                )));
            }
        }
        let n = self.dim();
        let mut domain = self.domain.clone();
        domain.extend(other.domain.iter().map(|e| e.shifted(n)));
        let mut coords = self.coords.clone();
        coords.extend(other.coords.iter().cloned());
        let mut sample_box = self.sample_box.clone();
        sample_box.extend(other.sample_box.iter().copied());
        Ok(Chart { name: format!("{}x{}", self.name, other.name), coords, domain, sample_box })
    }

    /// Charts are identified by name and coordinate list.
    pub fn same_as(&self, other: &Chart) -> bool {
        std::ptr::eq(self, other) || (self.name == other.name && self.coords == other.coords)
    }
}

/// A smooth map between charts, given by one expression per target
/// coordinate in the source coordinates.
///
/// Optional validity conditions (each `> 0`) restrict where the map is
/// used, beyond the source domain; the image must also lie in the target
/// domain.
#[derive(Clone, Debug)]
pub struct SmoothMap {
    source: Arc<Chart>,
    target: Arc<Chart>,
    components: Vec<Expr>,
    validity: Vec<Expr>,
}

impl SmoothMap {
    pub fn new(source: &Arc<Chart>, target: &Arc<Chart>, components: Vec<Expr>) -> Result<Self> {
        if components.len() != target.dim() {
            return Err(Error::usage(format!(
                "map into `{}` needs {} components, got {}",
                target.name(),
                target.dim(),
                components.len()
            )));
        }
        if let Some(m) = components.iter().filter_map(Expr::max_var).max() {
            if m >= source.dim() {
                return Err(Error::usage(format!(
                    "map component refers to variable {m} outside chart `{}`",
                    source.name()
                )));
            }
        }
        Ok(SmoothMap {
            source: source.clone(),
            target: target.clone(),
            components,
            validity: Vec::new(),
        })
    }

    /// Parses one expression per target coordinate.
    pub fn parse(
        source: &Arc<Chart>,
        target: &Arc<Chart>,
        srcs: &[&str],
        params: &BTreeMap<String, f64>,
    ) -> Result<Self> {
        let comps = srcs
            .iter()
            .map(|s| source.parse_with(s, params))
            .collect::<Result<Vec<_>>>()?;
        SmoothMap::new(source, target, comps)
    }

    pub fn identity(chart: &Arc<Chart>) -> Self {
        let comps = (0..chart.dim()).map(Expr::var).collect();
        SmoothMap { source: chart.clone(), target: chart.clone(), components: comps, validity: vec![] }
    }

    /// Coordinate projection `x ↦ (x[indices[0]], …)`.
    pub fn projection(source: &Arc<Chart>, target: &Arc<Chart>, indices: &[usize]) -> Result<Self> {
        SmoothMap::new(source, target, indices.iter().map(|&i| Expr::var(i)).collect())
    }

    /// Adds a validity condition `expr > 0` on source points.
    pub fn with_validity(mut self, expr: Expr) -> Self {
        self.validity.push(expr);
        self
    }

    pub fn source(&self) -> &Arc<Chart> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Chart> {
        &self.target
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn validity(&self) -> &[Expr] {
        &self.validity
    }

    pub fn eval_jets(&self, x: &[Jet]) -> Vec<Jet> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval_f64(p)).collect()
    }

    /// Whether `p` is in the source domain, satisfies the validity
    /// conditions and maps into the target domain.
    pub fn valid_at(&self, p: &[f64]) -> bool {
        self.source.contains(p)
            && self.validity.iter().all(|e| e.eval_f64(p) > 0.0)
            && self.target.contains(&self.apply(p))
    }

    /// Maps `p`, checking the source and target domains.
    pub fn try_apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.source.check(p)?;
        if !self.validity.iter().all(|e| e.eval_f64(p) > 0.0) {
            return Err(Error::Domain { chart: self.source.name().to_string(), point: p.to_vec() });
        }
        let q = self.apply(p);
        self.target.check(&q)?;
        Ok(q)
    }

    /// `x ↦ next(self(x))`.
    pub fn then(&self, next: &SmoothMap) -> Result<SmoothMap> {
        if !self.target.same_as(&next.source) {
            return Err(Error::usage(format!(
                "cannot compose: `{}` maps into `{}`, next map starts at `{}`",
                self.source.name(),
                self.target.name(),
                next.source.name()
            )));
        }
        let components = next.components.iter().map(|c| c.substitute(&self.components)).collect();
        let mut validity = self.validity.clone();
        validity.extend(next.validity.iter().map(|c| c.substitute(&self.components)));
        validity.extend(next.source.domain().iter().map(|c| c.substitute(&self.components)));
        Ok(SmoothMap { source: self.source.clone(), target: next.target.clone(), components, validity })
    }

    /// Jacobian at `x` as jets: `out[a][b] = ∂ yₐ / ∂ x_b`.
    pub fn jacobian_jets(&self, x: &[Jet]) -> Vec<Vec<Jet>> {
        let k = jet::max_order(x);
        let m = self.source.dim();
        let mut jac = vec![Vec::with_capacity(m); self.target.dim()];
        let mut xp = x.to_vec();
        for b in 0..m {
            xp[b] = x[b].perturbed(k);
            for (a, c) in self.components.iter().enumerate() {
                jac[a].push(c.eval(&xp).top_derivative(k));
            }
            xp[b] = x[b].clone();
        }
        jac
    }

    pub fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let jac = self.jacobian_jets(&jet::constants(p));
        DMatrix::from_fn(self.target.dim(), self.source.dim(), |a, b| jac[a][b].value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_respects_domain_and_seed() {
        let c = Chart::new("disk", &["x", "y"]).with_domain_src("1 - x^2 - y^2").unwrap();
        let a = c.sample(50, 7).unwrap();
        let b = c.sample(50, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p[0] * p[0] + p[1] * p[1] < 1.0));
        assert_ne!(a, c.sample(50, 8).unwrap());
    }

    #[test]
    fn empty_domain_reports_sampling_failure() {
        let c = Chart::new("none", &["x"]).with_domain_src("-1").unwrap();
        assert!(matches!(c.sample(3, 0), Err(Error::Sampling { .. })));
    }

    #[test]
    fn product_shifts_domains() {
        let a = Chart::new("a", &["x"]).with_domain_src("x").unwrap().with_sample_box(&[(0.0, 1.0)]);
        let b = Chart::new("b", &["y"]).with_domain_src("y - 2").unwrap().with_sample_box(&[(0.0, 3.0)]);
        let p = a.product(&b).unwrap();
        assert_eq!(p.dim(), 2);
        assert!(p.contains(&[0.5, 2.5]));
        assert!(!p.contains(&[0.5, 1.5]));
        assert!(a.product(&a).is_err());
    }

    #[test]
    fn jacobian_and_composition() {
        let c = Chart::new("r2", &["x", "y"]).shared();
        let f = SmoothMap::parse(&c, &c, &["x*y", "x + y^2"], &BTreeMap::new()).unwrap();
        let j = f.jacobian(&[2.0, 3.0]);
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[3.0, 2.0, 1.0, 6.0]));
        let g = f.then(&f).unwrap();
        let p = [0.5, -1.0];
        assert_eq!(g.apply(&p), f.apply(&f.apply(&p)));
    }
}
