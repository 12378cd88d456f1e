//! Norm, dual-norm, and geometric-modulus oracles for the concrete
//! finite-dimensional spaces used everywhere else: ℓₚⁿ for p ∈ [1,∞] and
//! weighted-ℓ₁ (a discretized L₁[0,1] when the weights are uniform 1/N).
//!
//! p = 1 and p = ∞ use exact combinatorial formulas, never limits of
//! p-powers; the certificates downstream rely on that exactness.  All
//! oracles are pure and stateless.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::rng::{gaussian_vector, stream_rng, streams};
use crate::Result;

/// Dimension cap for greedy sphere nets; net size blows up past this.
pub const NET_DIM_LIMIT: usize = 6;

/// Unit-vector tolerance used by preconditions on norming functionals and
/// family members.
pub const UNIT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum SpaceKind {
    /// ℓₚⁿ with p ∈ [1,∞]; p = f64::INFINITY encodes the sup norm.
    Lp { p: f64, dim: usize },
    /// Weighted ℓ₁: ‖x‖ = Σ|x_c| w_c, all weights > 0.
    WeightedL1 { weights: Vec<f64> },
    /// Weighted ℓ∞: ‖x‖ = max |x_c|/w_c.  Arises as the dual of
    /// `WeightedL1`; it has no string grammar of its own.
    WeightedLinf { weights: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormedSpace {
    kind: SpaceKind,
}

impl NormedSpace {
    pub fn lp(p: f64, dim: usize) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::InvalidParam(format!(
                "lp exponent must lie in [1, inf], got {p}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidParam("space dimension must be positive".into()));
        }
        Ok(NormedSpace {
            kind: SpaceKind::Lp { p, dim },
        })
    }

    pub fn weighted_l1(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParam("weighted-l1 needs at least one weight".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParam("weighted-l1 weights must be positive and finite".into()));
        }
        Ok(NormedSpace {
            kind: SpaceKind::WeightedL1 { weights },
        })
    }

    /// L₁[0,1] discretized on `n_cells` equal cells: uniform weights 1/N.
    pub fn discretized_l1(n_cells: usize) -> Result<Self> {
        Self::weighted_l1(vec![1.0 / n_cells as f64; n_cells])
    }

    pub(crate) fn weighted_linf(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParam("weights must be positive and finite".into()));
        }
        Ok(NormedSpace {
            kind: SpaceKind::WeightedLinf { weights },
        })
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            SpaceKind::Lp { dim, .. } => *dim,
            SpaceKind::WeightedL1 { weights } | SpaceKind::WeightedLinf { weights } => {
                weights.len()
            }
        }
    }

    /// True for spaces whose norm is an (optionally weighted) sum of
    /// absolute coordinates: lp(1,·) and weighted-l1.
    pub fn is_l1_type(&self) -> bool {
        match &self.kind {
            SpaceKind::Lp { p, .. } => *p == 1.0,
            SpaceKind::WeightedL1 { .. } => true,
            SpaceKind::WeightedLinf { .. } => false,
        }
    }

    /// True for sup-norm spaces: lp(∞,·) and weighted-ℓ∞.
    pub fn is_linf_type(&self) -> bool {
        match &self.kind {
            SpaceKind::Lp { p, .. } => p.is_infinite(),
            SpaceKind::WeightedL1 { .. } => false,
            SpaceKind::WeightedLinf { .. } => true,
        }
    }

    /// Coordinate weights seen as an ℓ₁-type space: ‖x‖ = Σ|x_c| w_c.
    /// `None` when the space is not ℓ₁-type.
    pub fn l1_weights(&self) -> Option<Vec<f64>> {
        match &self.kind {
            SpaceKind::Lp { p, dim } if *p == 1.0 => Some(vec![1.0; *dim]),
            SpaceKind::WeightedL1 { weights } => Some(weights.clone()),
            _ => None,
        }
    }

    /// Coordinate weights seen as an ℓ∞-type space: ‖x‖ = max |x_c|/w_c.
    pub fn linf_weights(&self) -> Option<Vec<f64>> {
        match &self.kind {
            SpaceKind::Lp { p, dim } if p.is_infinite() => Some(vec![1.0; *dim]),
            SpaceKind::WeightedLinf { weights } => Some(weights.clone()),
            _ => None,
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.norm_raw(x))
    }

    #[inline]
    pub(crate) fn norm_raw(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        match &self.kind {
            SpaceKind::Lp { p, .. } => lp_norm(x, *p),
            SpaceKind::WeightedL1 { weights } => x
                .iter()
                .zip(weights)
                .map(|(v, w)| v.abs() * w)
                .sum(),
            SpaceKind::WeightedLinf { weights } => x
                .iter()
                .zip(weights)
                .fold(0.0, |m, (v, w)| m.max(v.abs() / w)),
        }
    }

    /// The dual space under the standard coordinate pairing Σ f_c x_c.
    pub fn dual(&self) -> NormedSpace {
        match &self.kind {
            SpaceKind::Lp { p, dim } => NormedSpace {
                kind: SpaceKind::Lp {
                    p: conjugate_exponent(*p),
                    dim: *dim,
                },
            },
            SpaceKind::WeightedL1 { weights } => NormedSpace {
                kind: SpaceKind::WeightedLinf {
                    weights: weights.clone(),
                },
            },
            SpaceKind::WeightedLinf { weights } => NormedSpace {
                kind: SpaceKind::WeightedL1 {
                    weights: weights.clone(),
                },
            },
        }
    }

    /// Norm of `f` in the dual space.
    pub fn dual_norm(&self, f: &[f64]) -> Result<f64> {
        self.check_dim(f)?;
        Ok(self.dual_norm_raw(f))
    }

    #[inline]
    pub(crate) fn dual_norm_raw(&self, f: &[f64]) -> f64 {
        self.dual().norm_raw(f)
    }

    /// A norming functional for a unit vector: f with dual norm 1 and
    /// f(x) = 1.  Tie-breaks are fixed so downstream results are
    /// deterministic: p = 1 sets zero entries of the sign vector to +1,
    /// p = ∞ picks the first coordinate attaining the max.
    pub fn norming_functional(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let n = self.norm_raw(x);
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::NonUnit(n));
        }
        Ok(self.norming_functional_raw(x))
    }

    /// Norming functional without the unit-norm precondition: returns f
    /// with dual norm 1 and f(x) = ‖x‖.  `x` must be nonzero.
    pub(crate) fn norming_functional_raw(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            SpaceKind::Lp { p, .. } => {
                if *p == 1.0 {
                    x.iter()
                        .map(|v| if *v < 0.0 { -1.0 } else { 1.0 })
                        .collect()
                } else if p.is_infinite() {
                    let (j, vj) = first_abs_max(x);
                    let mut f = vec![0.0; x.len()];
                    f[j] = if vj < 0.0 { -1.0 } else { 1.0 };
                    f
                } else {
                    // f_i = sgn(x_i) |x_i|^(p-1), scaled to unit dual norm.
                    let nx = lp_norm(x, *p);
                    let scale = nx.powf(*p - 1.0);
                    x.iter()
                        .map(|v| v.signum() * v.abs().powf(*p - 1.0) / scale)
                        .collect()
                }
            }
            SpaceKind::WeightedL1 { weights } => x
                .iter()
                .zip(weights)
                .map(|(v, w)| if *v < 0.0 { -w } else { *w })
                .collect(),
            SpaceKind::WeightedLinf { weights } => {
                let (j, vj) = x
                    .iter()
                    .zip(weights)
                    .map(|(v, w)| v / w)
                    .enumerate()
                    .fold((0usize, f64::NEG_INFINITY), |(bj, bv), (i, r)| {
                        if r.abs() > bv.abs() + 0.0 && r.abs() > bv.abs() {
                            (i, r)
                        } else {
                            (bj, bv)
                        }
                    });
                let mut f = vec![0.0; x.len()];
                f[j] = vj.signum() / weights[j];
                f
            }
        }
    }

    /// Unit vector attaining a functional: for f ∈ X* returns x ∈ S_X with
    /// f(x) = ‖f‖_{X*}.  In finite dimensions this is the norming
    /// functional of f computed in the dual space.
    pub(crate) fn attaining_vector(&self, f: &[f64]) -> Vec<f64> {
        self.dual().norming_functional_raw(f)
    }

    /// Seeded random unit vector (normalized Gaussian).
    pub fn sample_unit(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        loop {
            let v = gaussian_vector(rng, self.dim());
            let n = self.norm_raw(&v);
            if n > 1e-9 {
                return v.iter().map(|c| c / n).collect();
            }
        }
    }
}

/// Conjugate exponent: 1/p + 1/p* = 1, with 1 ↔ ∞.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// ℓₚ norm with exact combinatorial p = 1 and p = ∞ branches and fast
/// paths for the exponents that dominate the workloads here.
#[inline]
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        x.iter().map(|v| v.abs()).sum()
    } else if p.is_infinite() {
        x.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else if p == 2.0 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else if p == 1.5 {
        let s: f64 = x.iter().map(|v| {
            let a = v.abs();
            a * a.sqrt()
        }).sum();
        s.powf(2.0 / 3.0)
    } else if p == 3.0 {
        let s: f64 = x.iter().map(|v| {
            let a = v.abs();
            a * a * a
        }).sum();
        s.cbrt()
    } else if p == 4.0 {
        let s: f64 = x.iter().map(|v| {
            let a = v * v;
            a * a
        }).sum();
        s.sqrt().sqrt()
    } else {
        // Scale by the max to avoid overflow for large p.
        let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if m == 0.0 {
            return 0.0;
        }
        let s: f64 = x.iter().map(|v| (v.abs() / m).powf(p)).sum();
        m * s.powf(1.0 / p)
    }
}

impl fmt::Display for NormedSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SpaceKind::Lp { p, dim } => {
                if p.is_infinite() {
                    write!(f, "lp:inf:{dim}")
                } else {
                    write!(f, "lp:{p}:{dim}")
                }
            }
            SpaceKind::WeightedL1 { weights } => {
                write!(f, "wl1:")?;
                for (i, w) in weights.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{w}")?;
                }
                Ok(())
            }
            SpaceKind::WeightedLinf { weights } => {
                write!(f, "wlinf:")?;
                for (i, w) in weights.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{w}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for NormedSpace {
    type Err = Error;

    /// Grammar: `lp:<p>:<n>` with `inf` for ∞, and `wl1:<w1,...,wN>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("lp:") {
            let mut parts = rest.splitn(2, ':');
            let p_str = parts
                .next()
                .ok_or_else(|| Error::Parse(format!("malformed space `{s}`")))?;
            let n_str = parts
                .next()
                .ok_or_else(|| Error::Parse(format!("malformed space `{s}`: missing dimension")))?;
            let p = if p_str.eq_ignore_ascii_case("inf") {
                f64::INFINITY
            } else {
                p_str
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad exponent `{p_str}`")))?
            };
            let n = n_str
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad dimension `{n_str}`")))?;
            NormedSpace::lp(p, n)
        } else if let Some(rest) = s.strip_prefix("wl1:") {
            let weights = rest
                .split(',')
                .map(|w| {
                    w.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad weight `{w}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            NormedSpace::weighted_l1(weights)
        } else {
            Err(Error::Parse(format!(
                "unknown space `{s}` (expected lp:<p>:<n> or wl1:<w1,...,wN>)"
            )))
        }
    }
}

fn first_abs_max(x: &[f64]) -> (usize, f64) {
    let mut best = (0usize, x[0]);
    for (i, &v) in x.iter().enumerate().skip(1) {
        if v.abs() > best.1.abs() {
            best = (i, v);
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Modulus of uniform convexity
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModulusMethod {
    ClosedFormHilbert,
    Optimization,
}

/// Upper estimate of the modulus of uniform convexity
/// δ(ε) = inf{1 − ‖(f+g)/2‖ : f,g ∈ B, ‖f−g‖ ≥ ε}.
#[derive(Clone, Debug)]
pub struct ConvexityModulusEstimate {
    pub epsilon: f64,
    pub delta_hat: f64,
    pub method: ModulusMethod,
    pub optimizer_budget: usize,
}

/// Number of separation values on the shared grid used by the estimator.
/// The grid is independent of ε, which makes δ̂ nondecreasing in ε by
/// construction: raising ε only filters candidates out.
const MODULUS_SEP_GRID: usize = 100;

/// Upper estimate of δ(ε), exact for p = 2 via the closed Hilbert form
/// 1 − √(1 − (ε/2)²).
///
/// The optimizer parameterizes candidate pairs by a midpoint direction m̂,
/// a half-difference direction ĥ, and a separation s from a fixed grid
/// with s ≥ ε.  For each triple it grows the midpoint radially as far as
/// the ball constraint allows (bisection on a convex function), which
/// yields a feasible pair f = tm̂ + (s/2)ĥ, g = tm̂ − (s/2)ĥ and the value
/// 1 − t.  The minimum over the pool is therefore always ≥ δ(ε).
pub fn uniform_convexity_modulus(
    space: &NormedSpace,
    epsilon: f64,
    budget: usize,
) -> Result<ConvexityModulusEstimate> {
    if !(epsilon > 0.0 && epsilon <= 2.0) {
        return Err(Error::InvalidParam(format!(
            "epsilon must lie in (0, 2], got {epsilon}"
        )));
    }
    if let SpaceKind::Lp { p, .. } = space.kind() {
        if *p == 2.0 {
            return Ok(ConvexityModulusEstimate {
                epsilon,
                delta_hat: 1.0 - (1.0 - (epsilon / 2.0).powi(2)).sqrt(),
                method: ModulusMethod::ClosedFormHilbert,
                optimizer_budget: 0,
            });
        }
    }

    let d = space.dim();
    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    // Canonical directions: axis pairs and their diagonals.  The diagonal
    // family is what finds the flat faces of l1/linf balls (value 0).
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let mut ei = vec![0.0; d];
            ei[i] = 1.0;
            let mut ej = vec![0.0; d];
            ej[j] = 1.0;
            pairs.push((normalize(space, &ei), normalize(space, &ej)));
            for sigma in [1.0, -1.0] {
                let mut m = vec![0.0; d];
                m[i] = 1.0;
                m[j] = sigma;
                let mut h = vec![0.0; d];
                h[i] = 1.0;
                h[j] = -sigma;
                pairs.push((normalize(space, &m), normalize(space, &h)));
            }
        }
    }
    let n_random = (budget / (MODULUS_SEP_GRID * 2)).clamp(8, 4000);
    let mut rng = stream_rng(0x6d6f64, streams::MODULUS);
    for _ in 0..n_random {
        pairs.push((space.sample_unit(&mut rng), space.sample_unit(&mut rng)));
    }

    let mut delta_hat = 1.0f64;
    for (m_hat, h_hat) in &pairs {
        for gi in 1..=MODULUS_SEP_GRID {
            let s = 2.0 * gi as f64 / MODULUS_SEP_GRID as f64;
            if s + 1e-12 < epsilon {
                continue;
            }
            let half: Vec<f64> = h_hat.iter().map(|v| v * s / 2.0).collect();
            if space.norm_raw(&half) > 1.0 {
                continue;
            }
            let t = max_radial_extent(space, m_hat, &half);
            delta_hat = delta_hat.min((1.0 - t).max(0.0));
        }
    }

    Ok(ConvexityModulusEstimate {
        epsilon,
        delta_hat: delta_hat.clamp(0.0, 1.0),
        method: ModulusMethod::Optimization,
        optimizer_budget: budget,
    })
}

fn normalize(space: &NormedSpace, x: &[f64]) -> Vec<f64> {
    let n = space.norm_raw(x);
    x.iter().map(|v| v / n).collect()
}

/// Largest t ≥ 0 with max(‖t m̂ + h‖, ‖t m̂ − h‖) ≤ 1.  The function is
/// convex in t and ≤ 1 at t = 0, so the feasible set is an interval.
fn max_radial_extent(space: &NormedSpace, m_hat: &[f64], h: &[f64]) -> f64 {
    let g = |t: f64| -> f64 {
        let plus: Vec<f64> = m_hat.iter().zip(h).map(|(m, hh)| t * m + hh).collect();
        let minus: Vec<f64> = m_hat.iter().zip(h).map(|(m, hh)| t * m - hh).collect();
        space.norm_raw(&plus).max(space.norm_raw(&minus))
    };
    let mut hi = 1.0;
    while g(hi) <= 1.0 {
        hi *= 2.0;
        if hi > 8.0 {
            return 1.0; // cannot exceed 1 - delta with delta >= 0 anyway
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

// ---------------------------------------------------------------------------
// Sphere nets
// ---------------------------------------------------------------------------

/// A ν-net of a unit sphere: every sphere point is within ν of some net
/// point (verified by sampling).
#[derive(Clone, Debug)]
pub struct SphereNet {
    pub space: NormedSpace,
    pub nu: f64,
    pub points: Vec<Vec<f64>>,
}

/// Spatial hash over cube cells; nets at small ν hold tens of thousands of
/// points, so proximity queries must not scan the whole net.  Cells have
/// side ν·sup{‖x‖∞ : ‖x‖ ≤ 1}, which makes any point within space-distance
/// ν of a query live in one of the 3^d neighboring cells.
struct NeighborGrid {
    cell: f64,
    dim: usize,
    buckets: std::collections::HashMap<Vec<i64>, Vec<usize>>,
}

impl NeighborGrid {
    fn new(space: &NormedSpace, nu: f64) -> Self {
        let linf_factor = match space.kind() {
            SpaceKind::Lp { .. } => 1.0,
            SpaceKind::WeightedL1 { weights } => {
                weights.iter().cloned().fold(f64::INFINITY, f64::min).recip()
            }
            SpaceKind::WeightedLinf { weights } => {
                weights.iter().cloned().fold(0.0f64, f64::max)
            }
        };
        NeighborGrid {
            cell: nu * linf_factor,
            dim: space.dim(),
            buckets: std::collections::HashMap::new(),
        }
    }

    fn key(&self, x: &[f64]) -> Vec<i64> {
        x.iter().map(|v| (v / self.cell).floor() as i64).collect()
    }

    fn insert(&mut self, x: &[f64], idx: usize) {
        self.buckets.entry(self.key(x)).or_default().push(idx);
    }

    /// Indices of stored points whose cell is adjacent to the query's.
    fn neighbors(&self, x: &[f64], out: &mut Vec<usize>) {
        out.clear();
        let key = self.key(x);
        let mut offset = vec![-1i64; self.dim];
        loop {
            let probe: Vec<i64> = key.iter().zip(&offset).map(|(k, o)| k + o).collect();
            if let Some(bucket) = self.buckets.get(&probe) {
                out.extend_from_slice(bucket);
            }
            let mut carry = 0;
            loop {
                if carry == self.dim {
                    return;
                }
                offset[carry] += 1;
                if offset[carry] > 1 {
                    offset[carry] = -1;
                    carry += 1;
                } else {
                    break;
                }
            }
        }
    }
}

impl SphereNet {
    /// Sampled covering check: each of `samples` random unit vectors must
    /// lie within nu (plus slack) of some net point.
    pub fn covering_check(&self, samples: usize, seed: u64) -> bool {
        let mut grid = NeighborGrid::new(&self.space, self.nu);
        for (i, p) in self.points.iter().enumerate() {
            grid.insert(p, i);
        }
        let mut rng = stream_rng(seed, streams::SPHERE_NET + 1000);
        let mut near = Vec::new();
        for _ in 0..samples {
            let x = self.space.sample_unit(&mut rng);
            grid.neighbors(&x, &mut near);
            let covered = near.iter().any(|&i| {
                let diff: Vec<f64> =
                    x.iter().zip(&self.points[i]).map(|(a, b)| a - b).collect();
                self.space.norm_raw(&diff) <= self.nu + 1e-9
            });
            if !covered {
                return false;
            }
        }
        true
    }
}

/// Greedy ν-net: keep adding sampled unit vectors at distance > ν from all
/// chosen points until `budget` consecutive samples fail.  Candidates start
/// with the signed canonical basis so small nets are deterministic and
/// coordinate-aligned.
pub fn sphere_net(space: &NormedSpace, nu: f64, budget: usize) -> Result<SphereNet> {
    sphere_net_seeded(space, nu, budget, &[], 0x6e6574)
}

/// Same greedy construction, but the given seed points are force-included
/// first (they need not be ν-separated; a net only has to cover).
pub fn sphere_net_seeded(
    space: &NormedSpace,
    nu: f64,
    budget: usize,
    forced: &[Vec<f64>],
    seed: u64,
) -> Result<SphereNet> {
    sphere_net_capped(space, nu, budget, forced, seed, usize::MAX)
}

/// As `sphere_net_seeded` with a hard cap on the net size; exceeding it is
/// an error rather than a silently incomplete net.
pub fn sphere_net_capped(
    space: &NormedSpace,
    nu: f64,
    budget: usize,
    forced: &[Vec<f64>],
    seed: u64,
    max_points: usize,
) -> Result<SphereNet> {
    if !(nu > 0.0) {
        return Err(Error::InvalidParam(format!("nu must be > 0, got {nu}")));
    }
    if space.dim() > NET_DIM_LIMIT {
        return Err(Error::NetDimensionLimit(space.dim()));
    }
    let d = space.dim();
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut grid = NeighborGrid::new(space, nu);
    let mut near = Vec::new();

    let mut push = |points: &mut Vec<Vec<f64>>, grid: &mut NeighborGrid, x: Vec<f64>| {
        grid.insert(&x, points.len());
        points.push(x);
    };
    for f in forced {
        if f.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: f.len(),
            });
        }
        push(&mut points, &mut grid, normalize(space, f));
    }

    let far = |points: &[Vec<f64>], grid: &NeighborGrid, near: &mut Vec<usize>, x: &[f64]| -> bool {
        grid.neighbors(x, near);
        near.iter().all(|&i| {
            let diff: Vec<f64> = x.iter().zip(&points[i]).map(|(a, b)| a - b).collect();
            space.norm_raw(&diff) > nu
        })
    };

    let mut canonical = Vec::new();
    for i in 0..d {
        for sgn in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[i] = sgn;
            canonical.push(normalize(space, &e));
        }
    }
    for c in canonical {
        if points.is_empty() || far(&points, &grid, &mut near, &c) {
            push(&mut points, &mut grid, c);
        }
    }

    let mut rng = stream_rng(seed, streams::SPHERE_NET);
    let mut failures = 0usize;
    while failures < budget {
        if points.len() > max_points {
            return Err(Error::InvalidParam(format!(
                "net at nu={nu} exceeds the cap of {max_points} points"
            )));
        }
        let x = space.sample_unit(&mut rng);
        if far(&points, &grid, &mut near, &x) {
            push(&mut points, &mut grid, x);
            failures = 0;
        } else {
            failures += 1;
        }
    }

    Ok(SphereNet {
        space: space.clone(),
        nu,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(p: f64, n: usize) -> NormedSpace {
        NormedSpace::lp(p, n).unwrap()
    }

    #[test]
    fn norm_closed_forms() {
        assert!((lp(3.0, 2).norm(&[1.0, 1.0]).unwrap() - 2f64.powf(1.0 / 3.0)).abs() < 1e-12);
        assert_eq!(lp(f64::INFINITY, 2).norm(&[2.0, -3.0]).unwrap(), 3.0);
        let w = NormedSpace::weighted_l1(vec![0.25; 4]).unwrap();
        assert!((w.norm(&[1.0, 1.0, 1.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn norm_rejects_dimension_mismatch() {
        assert!(matches!(
            lp(2.0, 3).norm(&[1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bad_exponent_rejected_at_construction() {
        assert!(NormedSpace::lp(0.5, 2).is_err());
        assert!(NormedSpace::lp(f64::NAN, 2).is_err());
    }

    #[test]
    fn norming_functional_examples() {
        let f = lp(2.0, 2).norming_functional(&[0.6, 0.8]).unwrap();
        assert!((f[0] - 0.6).abs() < 1e-12 && (f[1] - 0.8).abs() < 1e-12);

        let f = lp(1.0, 2).norming_functional(&[0.5, -0.5]).unwrap();
        assert_eq!(f, vec![1.0, -1.0]);

        let f = lp(f64::INFINITY, 2).norming_functional(&[1.0, 1.0]).unwrap();
        assert_eq!(f, vec![1.0, 0.0]);
    }

    #[test]
    fn norming_functional_rejects_non_unit() {
        assert!(matches!(
            lp(2.0, 2).norming_functional(&[1.0, 1.0]),
            Err(Error::NonUnit(_))
        ));
    }

    #[test]
    fn duals_roundtrip() {
        let s = lp(1.5, 3);
        let d = s.dual();
        assert_eq!(d, lp(3.0, 3));
        assert_eq!(d.dual(), s);
        let w = NormedSpace::weighted_l1(vec![0.5, 1.5]).unwrap();
        assert_eq!(w.dual().dual(), w);
    }

    #[test]
    fn grammar_roundtrip() {
        for s in ["lp:2:3", "lp:inf:4", "lp:1.5:2", "wl1:0.25,0.25,0.5"] {
            let sp: NormedSpace = s.parse().unwrap();
            let back: NormedSpace = sp.to_string().parse().unwrap();
            assert_eq!(sp, back);
        }
        assert!("lq:2:3".parse::<NormedSpace>().is_err());
        assert!("lp:2".parse::<NormedSpace>().is_err());
    }

    /// Independent oracle for δ(ε) on a 2-dimensional space: dense pairs of
    /// angles on the unit circle, filtered by the separation constraint,
    /// followed by a local golden-section refinement around the best pair.
    fn modulus_grid_oracle_2d(space: &NormedSpace, epsilon: f64) -> f64 {
        let unit = |theta: f64| -> Vec<f64> {
            let v = vec![theta.cos(), theta.sin()];
            normalize(space, &v)
        };
        let objective = |a: f64, b: f64| -> Option<f64> {
            let f = unit(a);
            let g = unit(b);
            let diff: Vec<f64> = f.iter().zip(&g).map(|(x, y)| x - y).collect();
            if space.norm_raw(&diff) + 1e-12 < epsilon {
                return None;
            }
            let mid: Vec<f64> = f.iter().zip(&g).map(|(x, y)| (x + y) / 2.0).collect();
            Some(1.0 - space.norm_raw(&mid))
        };
        let n = 1500usize;
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..n {
            let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            for j in i..n {
                let b = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                if let Some(v) = objective(a, b) {
                    if v < best.0 {
                        best = (v, a, b);
                    }
                }
            }
        }
        // Local refinement on the 2-d angle pair.
        let (mut val, mut a, mut b) = best;
        let mut step = 2.0 * std::f64::consts::PI / n as f64;
        for _ in 0..40 {
            let mut improved = false;
            for (da, db) in [
                (step, 0.0),
                (-step, 0.0),
                (0.0, step),
                (0.0, -step),
                (step, step),
                (-step, -step),
                (step, -step),
                (-step, step),
            ] {
                if let Some(v) = objective(a + da, b + db) {
                    if v < val {
                        val = v;
                        a += da;
                        b += db;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        val
    }

    #[test]
    fn modulus_hilbert_matches_grid_oracle() {
        let space = lp(2.0, 2);
        let est = uniform_convexity_modulus(&space, 1.0, 10_000).unwrap();
        let closed = 1.0 - (1.0 - 0.25f64).sqrt();
        assert_eq!(est.method, ModulusMethod::ClosedFormHilbert);
        assert!((est.delta_hat - closed).abs() < 1e-12);
        let oracle = modulus_grid_oracle_2d(&space, 1.0);
        assert!(
            (oracle - closed).abs() < 1e-4,
            "grid oracle {oracle} vs closed form {closed}"
        );
    }

    #[test]
    fn modulus_l1_is_zero() {
        let est = uniform_convexity_modulus(&lp(1.0, 2), 1.0, 10_000).unwrap();
        assert_eq!(est.delta_hat, 0.0);
        assert_eq!(est.method, ModulusMethod::Optimization);
    }

    /// Regression constant for lp(4,3), ε = 1, budget 1e5; frozen from the
    /// first run of the seeded estimator.
    #[test]
    fn modulus_lp4_regression() {
        let est = uniform_convexity_modulus(&lp(4.0, 3), 1.0, 100_000).unwrap();
        assert!(est.delta_hat > 0.0);
        let frozen = 0.01600516436728472;
        assert!(
            (est.delta_hat - frozen).abs() < 1e-9,
            "lp(4,3) modulus drifted: {} vs frozen {frozen}",
            est.delta_hat
        );
    }

    #[test]
    fn modulus_rejects_bad_epsilon() {
        assert!(uniform_convexity_modulus(&lp(2.0, 2), 0.0, 10).is_err());
        assert!(uniform_convexity_modulus(&lp(2.0, 2), 2.5, 10).is_err());
    }

    #[test]
    fn net_diameter_two_is_single_point() {
        let net = sphere_net(&lp(2.0, 2), 2.0, 2000).unwrap();
        assert_eq!(net.points.len(), 1);
        assert_eq!(net.points[0], vec![1.0, 0.0]);
    }

    #[test]
    fn net_euclidean_nu_one() {
        let net = sphere_net(&lp(2.0, 2), 1.0, 4000).unwrap();
        // Chord of 60 degrees is 1, so 6 points at spacing 60 degrees cover;
        // a greedy >1-separated set has at most 6 points after forcing e1.
        assert!(net.points.len() <= 7, "net too big: {}", net.points.len());
        assert!(net.covering_check(10_000, 3));
    }

    #[test]
    fn net_linf_half() {
        let net = sphere_net(&lp(f64::INFINITY, 2), 0.5, 6000).unwrap();
        assert!(net.points.len() <= 20, "net too big: {}", net.points.len());
        assert!(net.covering_check(10_000, 4));
    }

    #[test]
    fn net_rejects_high_dimension() {
        assert!(matches!(
            sphere_net(&lp(2.0, 7), 0.5, 10),
            Err(Error::NetDimensionLimit(7))
        ));
    }
}
