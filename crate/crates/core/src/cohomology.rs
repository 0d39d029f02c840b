//! Twisted simplicial cohomology: the finite analog of Morse–Novikov cohomology.
//!
//! A [`TwistedComplex`] is an ordered simplicial complex with a real value
//! `θ(u, v)` on every edge `u < v` satisfying the cocycle condition on
//! triangles. The twisted coboundary transports along the first edge of each
//! simplex:
//!
//! ```text
//! (δ_θ c)[v₀ … v_{k+1}] = e^{θ(v₀,v₁)} c[v₁ … v_{k+1}] + Σ_{i≥1} (−1)^i c[v₀ … v̂ᵢ … v_{k+1}]
//! ```
//!
//! so `δ_θ² = 0` exactly when `θ` is a cocycle. Ranks use singular values
//! with threshold `1e−9 · σ_max`.
//!
//! ```
//! use lcslab::cohomology::TwistedComplex;
//!
//! let untwisted = TwistedComplex::circle(0.0).unwrap();
//! assert_eq!(untwisted.betti(), vec![1, 1]);
//! let twisted = TwistedComplex::circle(2f64.ln()).unwrap();
//! assert_eq!(twisted.betti(), vec![0, 0]);
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::Svd;

/// Relative singular-value threshold for ranks.
pub const RANK_THRESHOLD: f64 = 1e-9;

const REFINE_ROUNDS: usize = 2;

/// Tolerance of the triangle cocycle check, relative to the edge values.
const COCYCLE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct TwistedComplex {
    vertices: usize,
    /// `simplices[k]` lists the `k`-simplices in lexicographic order.
    simplices: Vec<Vec<Vec<usize>>>,
    index: Vec<HashMap<Vec<usize>, usize>>,
    theta: BTreeMap<(usize, usize), f64>,
}

/// A cochain of degree `k`: one value per `k`-simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct Cochain {
    pub degree: usize,
    pub values: DVector<f64>,
}

impl Cochain {
    pub fn new(degree: usize, values: Vec<f64>) -> Self {
        Cochain { degree, values: DVector::from_vec(values) }
    }

    pub fn zeros(k: &TwistedComplex, degree: usize) -> Self {
        Cochain { degree, values: DVector::zeros(k.count(degree)) }
    }

    pub fn norm(&self) -> f64 {
        self.values.norm()
    }
}

impl TwistedComplex {
    /// Builds a complex from simplices (closed downward automatically) and
    /// edge values; edges without a value get 0.
    pub fn new(vertices: usize, simplices: &[Vec<usize>], theta: &BTreeMap<(usize, usize), f64>) -> Result<Self> {
        let mut all: BTreeSet<Vec<usize>> = BTreeSet::new();
        for v in 0..vertices {
            all.insert(vec![v]);
        }
        for s in simplices {
            let mut sorted = s.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != s.len() || s.is_empty() {
                return Err(Error::InvalidComplex(format!("simplex {s:?} has repeated or no vertices")));
            }
            if let Some(&v) = sorted.iter().find(|&&v| v >= vertices) {
                return Err(Error::InvalidComplex(format!("simplex {s:?} uses vertex {v} ≥ {vertices}")));
            }
            add_faces(&sorted, &mut all);
        }
        let top = all.iter().map(Vec::len).max().unwrap_or(0);
        let mut by_dim: Vec<Vec<Vec<usize>>> = vec![Vec::new(); top];
        for s in all {
            by_dim[s.len() - 1].push(s);
        }
        let index = by_dim
            .iter()
            .map(|list| list.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect())
            .collect();
        let mut k = TwistedComplex { vertices, simplices: by_dim, index, theta: BTreeMap::new() };
        for (&(u, v), &val) in theta {
            if !(u < v) || !k.contains(&[u, v]) {
                return Err(Error::InvalidComplex(format!("θ given on ({u},{v}), which is not an edge u < v")));
            }
            if !val.is_finite() {
                return Err(Error::InvalidComplex(format!("θ({u},{v}) is not finite")));
            }
            if val != 0.0 {
                k.theta.insert((u, v), val);
            }
        }
        k.check_cocycle()?;
        Ok(k)
    }

    fn check_cocycle(&self) -> Result<()> {
        for t in self.simplices_of(2) {
            let (a, b, c) = (self.theta(t[0], t[1]), self.theta(t[1], t[2]), self.theta(t[0], t[2]));
            let scale = 1.0 + a.abs().max(b.abs()).max(c.abs());
            if (a + b - c).abs() > COCYCLE_TOL * scale {
                return Err(Error::InvalidComplex(format!(
                    "cocycle condition fails on triangle {t:?}: θ({},{}) + θ({},{}) − θ({},{}) = {:.3e}",
                    t[0],
                    t[1],
                    t[1],
                    t[2],
                    t[0],
                    t[2],
                    a + b - c
                )));
            }
        }
        Ok(())
    }

    /// A single vertex.
    pub fn point() -> Self {
        Self::new(1, &[], &BTreeMap::new()).expect("valid")
    }

    /// The triangle circle on vertices 0, 1, 2 with total holonomy `s`,
    /// carried on the edge (0, 1).
    pub fn circle(holonomy: f64) -> Result<Self> {
        Self::circle_with(holonomy, 0.0, 0.0)
    }

    /// The triangle circle with `θ = (s₁, s₂, s₃)` on (0,1), (1,2), (0,2);
    /// the holonomy is `s₁ + s₂ − s₃`.
    pub fn circle_with(s1: f64, s2: f64, s3: f64) -> Result<Self> {
        let theta = BTreeMap::from([((0, 1), s1), ((1, 2), s2), ((0, 2), s3)]);
        Self::new(3, &[vec![0, 1], vec![1, 2], vec![0, 2]], &theta)
    }

    /// The boundary of the `d`-simplex, a `(d − 1)`-sphere, untwisted.
    pub fn simplex_boundary(d: usize) -> Self {
        let full: Vec<usize> = (0..=d).collect();
        let facets: Vec<Vec<usize>> =
            (0..=d).map(|skip| full.iter().copied().filter(|&v| v != skip).collect()).collect();
        Self::new(d + 1, &facets, &BTreeMap::new()).expect("valid")
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    /// Top dimension.
    pub fn dim(&self) -> usize {
        self.simplices.len().saturating_sub(1)
    }

    pub fn count(&self, k: usize) -> usize {
        self.simplices.get(k).map_or(0, Vec::len)
    }

    pub fn f_vector(&self) -> Vec<usize> {
        self.simplices.iter().map(Vec::len).collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.f_vector().iter().enumerate().map(|(k, &n)| if k % 2 == 0 { n as i64 } else { -(n as i64) }).sum()
    }

    pub fn simplices_of(&self, k: usize) -> &[Vec<usize>] {
        self.simplices.get(k).map_or(&[], Vec::as_slice)
    }

    pub fn contains(&self, s: &[usize]) -> bool {
        !s.is_empty() && self.index.get(s.len() - 1).is_some_and(|m| m.contains_key(s))
    }

    /// `θ(u, v)` for an edge `u < v`; `θ(v, u) = −θ(u, v)`; 0 for `u = v`.
    pub fn theta(&self, u: usize, v: usize) -> f64 {
        if u == v {
            0.0
        } else if u < v {
            self.theta.get(&(u, v)).copied().unwrap_or(0.0)
        } else {
            -self.theta(v, u)
        }
    }

    pub fn theta_values(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.theta
    }

    /// The same complex with new edge values.
    pub fn with_theta(&self, theta: &BTreeMap<(usize, usize), f64>) -> Result<Self> {
        let mut k = self.clone();
        k.theta.clear();
        for (&(u, v), &val) in theta {
            if !(u < v) || !k.contains(&[u, v]) {
                return Err(Error::InvalidComplex(format!("θ given on ({u},{v}), which is not an edge u < v")));
            }
            if val != 0.0 {
                k.theta.insert((u, v), val);
            }
        }
        k.check_cocycle()?;
        Ok(k)
    }

    /// Adds the coboundary of vertex potentials: `θ(u,v) + φ(v) − φ(u)`.
    pub fn gauge_transformed(&self, phi: &[f64]) -> Result<Self> {
        if phi.len() != self.vertices {
            return Err(Error::usage("one potential per vertex"));
        }
        let theta: BTreeMap<(usize, usize), f64> = self
            .simplices_of(1)
            .iter()
            .map(|e| ((e[0], e[1]), self.theta(e[0], e[1]) + phi[e[1]] - phi[e[0]]))
            .collect();
        self.with_theta(&theta)
    }

    /// The twisted coboundary `δ_θ: C^k → C^{k+1}` as a matrix.
    pub fn coboundary(&self, k: usize) -> DMatrix<f64> {
        let rows = self.count(k + 1);
        let cols = self.count(k);
        let mut m = DMatrix::zeros(rows, cols);
        for (r, s) in self.simplices_of(k + 1).iter().enumerate() {
            for i in 0..s.len() {
                let face: Vec<usize> = s.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).collect();
                let c = self.index[k][&face];
                m[(r, c)] += if i == 0 {
                    self.theta(s[0], s[1]).exp()
                } else if i % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
            }
        }
        m
    }

    /// `δ_{k−1}`, which is the zero map into `C⁰` for `k = 0`.
    fn incoming(&self, k: usize) -> DMatrix<f64> {
        if k == 0 {
            DMatrix::zeros(self.count(0), 0)
        } else {
            self.coboundary(k - 1)
        }
    }

    /// `max |δ_{k+1} δ_k|` over all degrees.
    pub fn square_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for k in 0..self.simplices.len().saturating_sub(1) {
            let p = self.coboundary(k + 1) * self.coboundary(k);
            if !p.is_empty() {
                worst = worst.max(p.amax());
            }
        }
        worst
    }

    /// Dimensions of `H^k_θ` for `k = 0 … dim`.
    pub fn betti(&self) -> Vec<usize> {
        let ranks: Vec<usize> = (0..self.simplices.len()).map(|k| rank(&self.coboundary(k))).collect();
        (0..self.simplices.len())
            .map(|k| {
                let prev = if k == 0 { 0 } else { ranks[k - 1] };
                self.count(k) - ranks[k] - prev
            })
            .collect()
    }

    /// `Δ_k = δ_kᵀ δ_k + δ_{k−1} δ_{k−1}ᵀ`.
    pub fn laplacian(&self, k: usize) -> DMatrix<f64> {
        let d = self.coboundary(k);
        let e = self.incoming(k);
        d.transpose() * &d + &e * e.transpose()
    }

    /// Dimension of `ker Δ_k`, computed as the kernel of `[δ_k; δ_{k−1}ᵀ]`.
    /// The two agree, and the stacked matrix has singular values of the
    /// size of the holonomy where `Δ_k` has their squares.
    pub fn harmonic_dim(&self, k: usize) -> usize {
        self.count(k) - rank(&self.harmonic_constraints(k))
    }

    /// `[δ_k; δ_{k−1}ᵀ]`, whose kernel is `ker Δ_k`.
    fn harmonic_constraints(&self, k: usize) -> DMatrix<f64> {
        let d = self.coboundary(k);
        let et = self.incoming(k).transpose();
        let n = self.count(k);
        let mut m = DMatrix::zeros(d.nrows() + et.nrows(), n);
        m.view_mut((0, 0), (d.nrows(), n)).copy_from(&d);
        m.view_mut((d.nrows(), 0), (et.nrows(), n)).copy_from(&et);
        m
    }

    fn check_cochain(&self, c: &Cochain) -> Result<()> {
        if c.values.len() != self.count(c.degree) {
            return Err(Error::usage(format!(
                "a {}-cochain has {} values, got {}",
                c.degree,
                self.count(c.degree),
                c.values.len()
            )));
        }
        Ok(())
    }

    /// `δ_θ c`.
    pub fn apply_coboundary(&self, c: &Cochain) -> Result<Cochain> {
        self.check_cochain(c)?;
        Ok(Cochain { degree: c.degree + 1, values: self.coboundary(c.degree) * &c.values })
    }

    /// Connected components, by breadth-first search over edges.
    pub fn components(&self) -> usize {
        self.spanning_potentials().1
    }

    /// Potentials `φ` with `φ(v) − φ(u) = θ(u,v)` along a spanning forest,
    /// and the number of trees.
    fn spanning_potentials(&self) -> (Vec<f64>, usize) {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.vertices];
        for e in self.simplices_of(1) {
            adj[e[0]].push(e[1]);
            adj[e[1]].push(e[0]);
        }
        let mut phi = vec![f64::NAN; self.vertices];
        let mut trees = 0;
        for root in 0..self.vertices {
            if !phi[root].is_nan() {
                continue;
            }
            trees += 1;
            phi[root] = 0.0;
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if phi[v].is_nan() {
                        phi[v] = phi[u] + self.theta(u, v);
                        queue.push_back(v);
                    }
                }
            }
        }
        (phi, trees)
    }
}

fn add_faces(s: &[usize], out: &mut BTreeSet<Vec<usize>>) {
    if s.is_empty() || out.contains(s) {
        return;
    }
    out.insert(s.to_vec());
    if s.len() == 1 {
        return;
    }
    for i in 0..s.len() {
        let face: Vec<usize> = s.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).collect();
        add_faces(&face, out);
    }
}

/// The SVD of `m` and the rank threshold `1e−9 · σ_max`; `None` for an
/// empty matrix.
fn threshold(m: &DMatrix<f64>) -> Result<Option<(Svd, f64)>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(None);
    }
    let svd = Svd::new(m)?;
    let t = RANK_THRESHOLD * svd.max();
    Ok(Some((svd, t)))
}

/// Numerical rank with threshold `1e−9 · σ_max`.
pub fn rank(m: &DMatrix<f64>) -> usize {
    match threshold(m).expect("SVD of a finite matrix converges") {
        None => 0,
        Some((svd, t)) => svd.rank(t),
    }
}

/// Orthogonal projector onto the column space of `m`, acting on `v`.
fn project_columns(m: &DMatrix<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(match threshold(m)? {
        None => DVector::zeros(v.len()),
        Some((svd, t)) => svd.project_range(v, t),
    })
}

/// Orthogonal projector onto `ker m`, acting on `v`.
fn project_kernel(m: &DMatrix<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(match threshold(m)? {
        None => v.clone(),
        Some((svd, t)) => svd.project_kernel(v, t),
    })
}

/// `c = h + δ_θ a + δ_θᵀ b`.
#[derive(Clone, Debug)]
pub struct Hodge {
    pub harmonic: Cochain,
    pub exact: Cochain,
    pub coexact: Cochain,
    /// `max |c − h − exact − coexact|`.
    pub reconstruction_residual: f64,
    /// Largest pairwise inner product of the three parts, relative to `‖c‖²`.
    pub orthogonality_residual: f64,
    /// `max |Δ h|`.
    pub harmonic_laplacian: f64,
}

/// Splits a cochain into harmonic, exact and coexact parts. The exact and
/// coexact parts are projections onto `im δ_{k−1}` and `im δ_kᵀ`; the
/// harmonic part is projected onto `ker Δ_k` separately, so the
/// reconstruction residual is a real check.
pub fn hodge_decompose(k: &TwistedComplex, c: &Cochain) -> Result<Hodge> {
    k.check_cochain(c)?;
    let deg = c.degree;
    let d = k.coboundary(deg);
    let e = k.incoming(deg);
    let dt = d.transpose();
    let lap = k.laplacian(deg);
    let constraints = k.harmonic_constraints(deg);
    let mut exact = project_columns(&e, &c.values)?;
    let mut coexact = project_columns(&dt, &c.values)?;
    let mut harmonic = project_kernel(&constraints, &c.values)?;
    // The three projectors sum to the identity, so redistributing the
    // leftover shrinks it by the projector error each round.
    for _ in 0..REFINE_ROUNDS {
        let r = &c.values - &harmonic - &exact - &coexact;
        exact += project_columns(&e, &r)?;
        coexact += project_columns(&dt, &r)?;
        harmonic += project_kernel(&constraints, &r)?;
    }
    let recon = &c.values - &harmonic - &exact - &coexact;
    let reconstruction_residual = if recon.is_empty() { 0.0 } else { recon.amax() };
    let n2 = c.values.norm_squared().max(f64::MIN_POSITIVE);
    let orthogonality_residual =
        [harmonic.dot(&exact), harmonic.dot(&coexact), exact.dot(&coexact)].iter().fold(0.0_f64, |m, v| m.max(v.abs()))
            / n2;
    let lh = &lap * &harmonic;
    let harmonic_laplacian = if lh.is_empty() { 0.0 } else { lh.amax() };
    Ok(Hodge {
        harmonic: Cochain { degree: deg, values: harmonic },
        exact: Cochain { degree: deg, values: exact },
        coexact: Cochain { degree: deg, values: coexact },
        reconstruction_residual,
        orthogonality_residual,
        harmonic_laplacian,
    })
}

/// The coexact primitive `ψ = δ_{k−1}ᵀ G c` of an exact cochain, where `G`
/// is the pseudoinverse of `Δ_k`. On exact cochains this is `δ_{k−1}⁺ c`,
/// which is what gets computed: `Δ_k` squares the small singular values.
pub fn green_primitive(k: &TwistedComplex, c: &Cochain) -> Result<Cochain> {
    k.check_cochain(c)?;
    if c.degree == 0 {
        if c.values.iter().any(|v| *v != 0.0) {
            return Err(Error::Precondition { what: "a nonzero 0-cochain is never exact".into(), residual: c.norm() });
        }
        return Err(Error::usage("0-cochains have no primitive"));
    }
    let h = hodge_decompose(k, c)?;
    let off = (&c.values - &h.exact.values).norm();
    if off > 1e-9 * (1.0 + c.norm()) {
        return Err(Error::Precondition {
            what: format!("cochain is not exact (harmonic norm {:.3e})", h.harmonic.norm()),
            residual: off,
        });
    }
    let psi = match threshold(&k.incoming(c.degree))? {
        None => DVector::zeros(k.count(c.degree - 1)),
        Some((svd, t)) => svd.solve(&c.values, t),
    };
    Ok(Cochain { degree: c.degree - 1, values: psi })
}

/// Result of [`h0_vanishing`].
#[derive(Clone, Debug, PartialEq)]
pub struct H0Report {
    /// Largest `|θ(u,v) − φ(v) + φ(u)|` over edges, for spanning-tree
    /// potentials `φ`: zero iff every loop has trivial holonomy.
    pub max_holonomy: f64,
    pub vanishes: bool,
    pub betti0: usize,
    /// Whether `betti0` agrees with the holonomy verdict.
    pub consistent: bool,
}

/// `H⁰_θ = 0` iff some loop has nonzero holonomy, cross-checked against ranks.
pub fn h0_vanishing(k: &TwistedComplex) -> Result<H0Report> {
    let (phi, trees) = k.spanning_potentials();
    if trees != 1 {
        return Err(Error::InvalidComplex(format!("complex has {trees} connected components")));
    }
    let max_holonomy = k
        .simplices_of(1)
        .iter()
        .map(|e| (k.theta(e[0], e[1]) - phi[e[1]] + phi[e[0]]).abs())
        .fold(0.0, f64::max);
    let vanishes = max_holonomy > 1e-12;
    let betti0 = k.betti()[0];
    Ok(H0Report { max_holonomy, vanishes, betti0, consistent: (betti0 == 0) == vanishes })
}

/// The staircase triangulation of `K₁ × K₂`. Vertex `(a, b)` becomes
/// `a · n₂ + b`, and `θ((a,b),(a',b')) = θ₁(a,a') + θ₂(b,b')`.
pub fn product_complex(k1: &TwistedComplex, k2: &TwistedComplex) -> Result<TwistedComplex> {
    let n2 = k2.vertex_count();
    let mut simplices: BTreeSet<Vec<usize>> = BTreeSet::new();
    for s in k1.simplices.iter().flatten() {
        for t in k2.simplices.iter().flatten() {
            staircases(s, t, n2, &mut simplices);
        }
    }
    let list: Vec<Vec<usize>> = simplices.into_iter().collect();
    let shell = TwistedComplex::new(k1.vertex_count() * n2, &list, &BTreeMap::new())?;
    let theta: BTreeMap<(usize, usize), f64> = shell
        .simplices_of(1)
        .iter()
        .map(|e| {
            let (a, b) = (e[0] / n2, e[0] % n2);
            let (c, d) = (e[1] / n2, e[1] % n2);
            ((e[0], e[1]), k1.theta(a, c) + k2.theta(b, d))
        })
        .collect();
    shell.with_theta(&theta)
}

fn staircases(s: &[usize], t: &[usize], n2: usize, out: &mut BTreeSet<Vec<usize>>) {
    fn walk(s: &[usize], t: &[usize], n2: usize, i: usize, j: usize, path: &mut Vec<usize>, out: &mut BTreeSet<Vec<usize>>) {
        path.push(s[i] * n2 + t[j]);
        if i + 1 == s.len() && j + 1 == t.len() {
            out.insert(path.clone());
        }
        if i + 1 < s.len() {
            walk(s, t, n2, i + 1, j, path, out);
        }
        if j + 1 < t.len() {
            walk(s, t, n2, i, j + 1, path, out);
        }
        path.pop();
    }
    walk(s, t, n2, 0, 0, &mut Vec::new(), out);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twisted_circle_rows() {
        let s = 0.7;
        let k = TwistedComplex::circle(s).unwrap();
        let d0 = k.coboundary(0);
        // Edges (0,1), (0,2), (1,2); columns are vertices 0, 1, 2.
        let want = DMatrix::from_row_slice(3, 3, &[-1.0, s.exp(), 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 1.0]);
        assert_eq!(d0, want);
    }

    #[test]
    fn untwisted_is_ordinary() {
        let k = TwistedComplex::simplex_boundary(3);
        let d1 = k.coboundary(1);
        assert!(d1.iter().all(|v| *v == 0.0 || v.abs() == 1.0));
        assert_eq!(k.betti(), vec![1, 0, 1]);
    }

    #[test]
    fn cocycle_violation_names_triangle() {
        let theta = BTreeMap::from([((0, 1), 1.0)]);
        let err = TwistedComplex::new(3, &[vec![0, 1, 2]], &theta).unwrap_err();
        assert!(err.to_string().contains("[0, 1, 2]"));
    }

    #[test]
    fn products() {
        let p = product_complex(&TwistedComplex::point(), &TwistedComplex::simplex_boundary(3)).unwrap();
        assert_eq!(p.f_vector(), TwistedComplex::simplex_boundary(3).f_vector());
        let c = TwistedComplex::circle(0.0).unwrap();
        let torus = product_complex(&c, &c).unwrap();
        assert_eq!(torus.euler_characteristic(), 0);
        assert_eq!(torus.betti(), vec![1, 2, 1]);
    }

    #[test]
    fn green_primitive_of_zero() {
        let k = TwistedComplex::circle(0.5).unwrap();
        let psi = green_primitive(&k, &Cochain::zeros(&k, 1)).unwrap();
        assert_eq!(psi.norm(), 0.0);
    }

    #[test]
    fn disconnected_h0_refuses() {
        let k = TwistedComplex::new(2, &[], &BTreeMap::new()).unwrap();
        assert!(matches!(h0_vanishing(&k), Err(Error::InvalidComplex(_))));
    }
}
