//! L₁-embeddability certificates for finite point configurations and the
//! quantitative non-octahedrality pipeline built on them.
//!
//! A finite metric embeds isometrically into L₁ exactly when it is a
//! nonnegative combination of cut semimetrics; the membership LP either
//! returns the weights or a separating inequality.  Configurations on a
//! unit sphere whose metric stays outside the cut cone witness a
//! distortion lower bound for embedding the whole space, which the
//! certificate pipeline converts into an upper cap 2 − δ₀ on octahedrality
//! defects in lp(1,m)⊗_ε lp(p,n).

use crate::error::Error;
use crate::lp::{Cmp, Direction, LpBuilder, LpOutcome, NONNEG};
use crate::mat::Mat;
use crate::rng::{stream_rng, streams};
use crate::spaces::{
    conjugate_exponent, sphere_net_capped, uniform_convexity_modulus, NormedSpace, SphereNet,
};
use crate::witnesses::L1Embedding;
use crate::Result;

/// Point cap: 2^{k-1}−1 cut generators stay enumerable and re-checkable.
pub const CUT_POINT_LIMIT: usize = 10;

// ---------------------------------------------------------------------------
// Distance matrices and cuts
// ---------------------------------------------------------------------------

/// A validated finite metric: symmetric, zero diagonal, triangle inequality
/// within 1e-9.
#[derive(Clone, Debug)]
pub struct DistanceMatrix {
    d: Mat,
}

impl DistanceMatrix {
    pub fn new(d: Mat) -> Result<Self> {
        let k = d.rows();
        if d.cols() != k {
            return Err(Error::NonMetric("matrix is not square".into()));
        }
        for i in 0..k {
            if d.get(i, i) != 0.0 {
                return Err(Error::NonMetric(format!("nonzero diagonal at {i}")));
            }
            for j in 0..k {
                let v = d.get(i, j);
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::NonMetric(format!("bad entry at ({i},{j})")));
                }
                if (v - d.get(j, i)).abs() > 1e-12 {
                    return Err(Error::NonMetric(format!("asymmetry at ({i},{j})")));
                }
            }
        }
        for i in 0..k {
            for j in 0..k {
                for l in 0..k {
                    if d.get(i, j) > d.get(i, l) + d.get(l, j) + 1e-9 {
                        return Err(Error::NonMetric(format!(
                            "triangle violation at ({i},{j},{l})"
                        )));
                    }
                }
            }
        }
        Ok(DistanceMatrix { d })
    }

    pub fn from_points(space: &NormedSpace, points: &[Vec<f64>]) -> Result<Self> {
        let k = points.len();
        let mut d = Mat::zeros(k, k);
        for i in 0..k {
            for j in i + 1..k {
                let diff: Vec<f64> = points[i].iter().zip(&points[j]).map(|(a, b)| a - b).collect();
                let v = space.norm(&diff)?;
                d.set(i, j, v);
                d.set(j, i, v);
            }
        }
        DistanceMatrix::new(d)
    }

    pub fn size(&self) -> usize {
        self.d.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d.get(i, j)
    }

    pub fn matrix(&self) -> &Mat {
        &self.d
    }
}

/// Cut semimetric value for a subset mask: 1 iff the mask separates i, j.
#[inline]
pub fn cut_value(mask: u32, i: usize, j: usize) -> f64 {
    if ((mask >> i) & 1) != ((mask >> j) & 1) {
        1.0
    } else {
        0.0
    }
}

/// All nontrivial cut masks up to complement: point 0 stays outside.
pub fn cut_masks(k: usize) -> Vec<u32> {
    (1u32..(1 << (k - 1))).map(|s| s << 1).collect()
}

// ---------------------------------------------------------------------------
// Cut-cone membership
// ---------------------------------------------------------------------------

/// Separating object for an infeasible instance: the LP dual functional on
/// pairs, plus a rounded integer negative-type vector when one exists.
#[derive(Clone, Debug)]
pub struct Separator {
    /// b with Σb = 0 and Q(b) = Σ_{i<j} b_i b_j D_ij > 0; automatically
    /// ≤ 0 on every cut semimetric.
    pub negative_type: Option<Vec<i64>>,
    /// Pair-indexed functional y (upper-triangular order) with ⟨y, δ_S⟩ ≤ 0
    /// for every cut and ⟨y, D⟩ > 0.
    pub lp_dual: Vec<f64>,
    pub lp_dual_value: f64,
}

#[derive(Clone, Debug)]
pub enum CutConeOutcome {
    Feasible { weights: Vec<(u32, f64)> },
    Infeasible { separator: Separator },
}

#[derive(Clone, Debug)]
pub struct CutConeCertificate {
    pub d: DistanceMatrix,
    pub outcome: CutConeOutcome,
}

impl CutConeCertificate {
    pub fn is_feasible(&self) -> bool {
        matches!(self.outcome, CutConeOutcome::Feasible { .. })
    }
}

fn pair_index(k: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            pairs.push((i, j));
        }
    }
    pairs
}

/// LP feasibility of D = Σ w_S δ_S with w ≥ 0; on infeasibility returns the
/// LP dual separator and, when integer rounding of the top negative-type
/// eigendirection succeeds, a human-checkable vector b.
pub fn cut_cone_membership(d: &DistanceMatrix) -> Result<CutConeCertificate> {
    let k = d.size();
    if k > CUT_POINT_LIMIT {
        return Err(Error::InvalidParam(format!(
            "cut-cone membership is capped at {CUT_POINT_LIMIT} points, got {k}"
        )));
    }
    if k < 2 {
        return Err(Error::InvalidParam("need at least 2 points".into()));
    }
    let masks = cut_masks(k);
    let pairs = pair_index(k);

    let mut lp = LpBuilder::new(Direction::Minimize);
    let vars: Vec<usize> = masks.iter().map(|_| lp.add_var(1.0, NONNEG)).collect();
    for &(i, j) in &pairs {
        let terms: Vec<(usize, f64)> = masks
            .iter()
            .enumerate()
            .filter(|(_, &mask)| cut_value(mask, i, j) > 0.0)
            .map(|(c, _)| (vars[c], 1.0))
            .collect();
        lp.add_constraint(terms, Cmp::Eq, d.get(i, j));
    }
    match lp.solve()? {
        LpOutcome::Optimal(s) => {
            let weights: Vec<(u32, f64)> = masks
                .iter()
                .zip(&s.values)
                .filter(|(_, w)| **w > 1e-11)
                .map(|(mask, w)| (*mask, *w))
                .collect();
            Ok(CutConeCertificate {
                d: d.clone(),
                outcome: CutConeOutcome::Feasible { weights },
            })
        }
        LpOutcome::Unbounded => Err(Error::Lp("membership LP cannot be unbounded".into())),
        LpOutcome::Infeasible => {
            let separator = build_separator(d, &masks, &pairs)?;
            Ok(CutConeCertificate {
                d: d.clone(),
                outcome: CutConeOutcome::Infeasible { separator },
            })
        }
    }
}

/// Separation LP: maximize ⟨y, D⟩ over the box −1 ≤ y ≤ 1 with ⟨y, δ_S⟩ ≤ 0
/// for all cuts; the optimum is > 0 exactly when D lies outside the cone.
fn build_separator(
    d: &DistanceMatrix,
    masks: &[u32],
    pairs: &[(usize, usize)],
) -> Result<Separator> {
    let mut lp = LpBuilder::new(Direction::Maximize);
    let vars: Vec<usize> = pairs
        .iter()
        .map(|&(i, j)| lp.add_var(d.get(i, j), (-1.0, 1.0)))
        .collect();
    for &mask in masks {
        let terms: Vec<(usize, f64)> = pairs
            .iter()
            .enumerate()
            .filter(|(_, &(i, j))| cut_value(mask, i, j) > 0.0)
            .map(|(c, _)| (vars[c], 1.0))
            .collect();
        lp.add_constraint(terms, Cmp::Le, 0.0);
    }
    let (value, y) = match lp.solve()? {
        LpOutcome::Optimal(s) => (s.objective, s.values),
        other => return Err(Error::Lp(format!("separation LP not optimal: {other:?}"))),
    };

    let negative_type = negative_type_vector(d, masks, pairs);
    Ok(Separator {
        negative_type,
        lp_dual: y,
        lp_dual_value: value,
    })
}

/// Q(b) = Σ_{i<j} b_i b_j D_ij.
pub fn negative_type_form(d: &DistanceMatrix, b: &[f64]) -> f64 {
    let k = d.size();
    let mut q = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            q += b[i] * b[j] * d.get(i, j);
        }
    }
    q
}

/// Integer-rounded eigendirections of the centered form: maximize Q(b)
/// subject to Σb = 0 via the top eigenvector of P D P, then try
/// denominators up to 12.
fn negative_type_vector(
    d: &DistanceMatrix,
    _masks: &[u32],
    _pairs: &[(usize, usize)],
) -> Option<Vec<i64>> {
    let k = d.size();
    // C = P D P with P = I - J/k, symmetric.
    let mut c = Mat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let mut v = d.get(i, j);
            let ri: f64 = (0..k).map(|l| d.get(i, l)).sum::<f64>() / k as f64;
            let rj: f64 = (0..k).map(|l| d.get(j, l)).sum::<f64>() / k as f64;
            let all: f64 = (0..k)
                .map(|a| (0..k).map(|b| d.get(a, b)).sum::<f64>())
                .sum::<f64>()
                / (k * k) as f64;
            v = v - ri - rj + all;
            c.set(i, j, v);
        }
    }
    let (eigvals, eigvecs) = jacobi_eigen(&c);
    // Try the directions with positive eigenvalue, largest first.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|a, b| eigvals[*b].partial_cmp(&eigvals[*a]).unwrap());
    for &e in &order {
        if eigvals[e] <= 1e-10 {
            break;
        }
        let v: Vec<f64> = (0..k).map(|i| eigvecs.get(i, e)).collect();
        let max_abs = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if max_abs == 0.0 {
            continue;
        }
        // Among the denominators, prefer the scaling with the smallest
        // rounding residual: exact for rational eigendirections, which is
        // what makes the emitted separator human-checkable.
        let mut best_b: Option<(f64, Vec<i64>)> = None;
        for den in 1..=12 {
            let scale = den as f64 / max_abs;
            let mut b: Vec<i64> = v.iter().map(|x| (x * scale).round() as i64).collect();
            // Repair the zero-sum constraint on the entries with the largest
            // rounding slack.
            let mut total: i64 = b.iter().sum();
            while total != 0 {
                let dir = if total > 0 { -1i64 } else { 1i64 };
                let mut best = (0usize, f64::INFINITY);
                for (i, bi) in b.iter().enumerate() {
                    let err = (*bi + dir) as f64 - v[i] * scale;
                    if err.abs() < best.1 {
                        best = (i, err.abs());
                    }
                }
                b[best.0] += dir;
                total += dir;
            }
            if b.iter().all(|x| *x == 0) {
                continue;
            }
            let bf: Vec<f64> = b.iter().map(|x| *x as f64).collect();
            if negative_type_form(d, &bf) > 1e-9 {
                let residual = b
                    .iter()
                    .zip(&v)
                    .map(|(bi, vi)| (*bi as f64 - vi * scale).abs())
                    .fold(0.0f64, f64::max)
                    / den as f64;
                if best_b.as_ref().map(|(r, _)| residual < r - 1e-12).unwrap_or(true) {
                    best_b = Some((residual, b));
                }
            }
        }
        if let Some((_, mut b)) = best_b {
            let gcd = b.iter().fold(0i64, |g, x| gcd_i64(g, x.abs()));
            if gcd > 1 {
                b.iter_mut().for_each(|x| *x /= gcd);
            }
            if b.iter().find(|x| **x != 0).map(|x| *x < 0).unwrap_or(false) {
                b.iter_mut().for_each(|x| *x = -*x);
            }
            return Some(b);
        }
    }
    None
}

fn gcd_i64(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd_i64(b, a % b)
    }
}

/// Jacobi eigenvalue iteration for small symmetric matrices.
fn jacobi_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Mat::identity(n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m.get(i, j).abs();
            }
        }
        if off < 1e-13 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq.abs() < 1e-15 {
                    continue;
                }
                let theta = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cos = 1.0 / (t * t + 1.0).sqrt();
                let sin = t * cos;
                for i in 0..n {
                    let mip = m.get(i, p);
                    let miq = m.get(i, q);
                    m.set(i, p, cos * mip - sin * miq);
                    m.set(i, q, sin * mip + cos * miq);
                }
                for j in 0..n {
                    let mpj = m.get(p, j);
                    let mqj = m.get(q, j);
                    m.set(p, j, cos * mpj - sin * mqj);
                    m.set(q, j, sin * mpj + cos * mqj);
                }
                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, cos * vip - sin * viq);
                    v.set(i, q, sin * vip + cos * viq);
                }
            }
        }
    }
    ((0..n).map(|i| m.get(i, i)).collect(), v)
}

// ---------------------------------------------------------------------------
// Distortion bound
// ---------------------------------------------------------------------------

/// Minimal L₁-embedding distortion of the finite metric: the LP
/// min t subject to D ≤ Σ w_S δ_S ≤ tD entrywise, w ≥ 0.
pub fn l1_distortion_bound(d: &DistanceMatrix) -> Result<f64> {
    let k = d.size();
    if k > CUT_POINT_LIMIT {
        return Err(Error::InvalidParam(format!(
            "distortion bound is capped at {CUT_POINT_LIMIT} points, got {k}"
        )));
    }
    let masks = cut_masks(k);
    let pairs = pair_index(k);
    let mut lp = LpBuilder::new(Direction::Minimize);
    let t = lp.add_var(1.0, (1.0, f64::INFINITY));
    let vars: Vec<usize> = masks.iter().map(|_| lp.add_var(0.0, NONNEG)).collect();
    for &(i, j) in &pairs {
        let dij = d.get(i, j);
        let terms: Vec<(usize, f64)> = masks
            .iter()
            .enumerate()
            .filter(|(_, &mask)| cut_value(mask, i, j) > 0.0)
            .map(|(c, _)| (vars[c], 1.0))
            .collect();
        lp.add_constraint(terms.clone(), Cmp::Ge, dij);
        let mut upper = terms;
        upper.push((t, -dij));
        lp.add_constraint(upper, Cmp::Le, 0.0);
    }
    match lp.solve()? {
        LpOutcome::Optimal(s) => Ok(s.objective),
        other => Err(Error::Lp(format!("distortion LP failed: {other:?}"))),
    }
}

// ---------------------------------------------------------------------------
// Point-configuration search
// ---------------------------------------------------------------------------

/// Search outcome: the best configuration found and its certified
/// distortion lower bound.  A value of 1.0 is inconclusive, never a proof
/// of embeddability.
#[derive(Clone, Debug)]
pub struct ConfigSearch {
    pub points: Vec<Vec<f64>>,
    pub d: DistanceMatrix,
    pub distortion: f64,
    pub lp_evals: usize,
}

/// Seeded random + local-perturbation search maximizing the distortion
/// bound over k-point configurations on the unit sphere.
///
/// Two phases: a hill-climb on the cheap negative-type surrogate (top
/// eigenvalue of the centered form), run both on free configurations and —
/// for even k — on antipodal ones (points paired with their negatives,
/// which is where the violations of the ℓp spheres live), then a direct
/// LP-objective refinement of the best configurations.  The budget counts
/// objective evaluations across both phases.
pub fn point_config_search(
    space: &NormedSpace,
    k: usize,
    budget: usize,
    seed: u64,
) -> Result<ConfigSearch> {
    if budget == 0 {
        return Err(Error::InvalidParam("budget must be positive".into()));
    }
    if k > 8 {
        return Err(Error::InvalidParam(format!("configuration size {k} exceeds 8")));
    }
    if k < 3 {
        return Err(Error::InvalidParam("need at least 3 points".into()));
    }
    if space.dim() > 4 {
        return Err(Error::InvalidParam(format!(
            "configuration search is capped at dimension 4, got {}",
            space.dim()
        )));
    }
    let d_dim = space.dim();

    let surrogate = |points: &[Vec<f64>]| -> f64 {
        let dm = match DistanceMatrix::from_points(space, points) {
            Ok(dm) => dm,
            Err(_) => return f64::NEG_INFINITY,
        };
        let kk = dm.size();
        let mut c = Mat::zeros(kk, kk);
        let row_mean: Vec<f64> = (0..kk)
            .map(|i| (0..kk).map(|l| dm.get(i, l)).sum::<f64>() / kk as f64)
            .collect();
        let all: f64 = row_mean.iter().sum::<f64>() / kk as f64;
        for i in 0..kk {
            for j in 0..kk {
                c.set(i, j, dm.get(i, j) - row_mean[i] - row_mean[j] + all);
            }
        }
        let (vals, _) = jacobi_eigen(&c);
        vals.into_iter().fold(f64::NEG_INFINITY, f64::max)
    };

    let mut rng = stream_rng(seed, streams::CONFIG_SEARCH);
    // Structured seeds: signed basis vectors and normalized diagonals.
    let mut structured: Vec<Vec<f64>> = Vec::new();
    for j in 0..d_dim {
        for sgn in [1.0, -1.0] {
            let mut e = vec![0.0; d_dim];
            e[j] = sgn;
            structured.push(e);
        }
    }
    let corners = 1usize << d_dim;
    for c in 0..corners {
        let v: Vec<f64> = (0..d_dim)
            .map(|j| if (c >> j) & 1 == 1 { -1.0 } else { 1.0 })
            .collect();
        let nm = space.norm_raw(&v);
        structured.push(v.iter().map(|x| x / nm).collect());
    }

    let expand_antipodal = |half: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let mut all = half.to_vec();
        for p in half {
            all.push(p.iter().map(|v| -v).collect());
        }
        all
    };

    // Generic hill-climb over `free` points with an arbitrary expansion to
    // the full configuration.
    let mut climb = |rng: &mut rand_chacha::ChaCha8Rng,
                     start: Vec<Vec<f64>>,
                     steps: usize,
                     objective: &dyn Fn(&[Vec<f64>]) -> f64|
     -> (f64, Vec<Vec<f64>>) {
        let free = start.len();
        let mut config = start;
        let mut val = objective(&config);
        let mut sigma = 0.4f64;
        for step in 0..steps {
            let idx = step % free;
            let mut cand = config.clone();
            let noise = crate::rng::gaussian_vector(rng, d_dim);
            for (c, nz) in cand[idx].iter_mut().zip(&noise) {
                *c += sigma * nz;
            }
            let nm = space.norm_raw(&cand[idx]);
            if nm < 1e-9 {
                continue;
            }
            cand[idx].iter_mut().for_each(|c| *c /= nm);
            let v = objective(&cand);
            if v > val {
                val = v;
                config = cand;
            } else {
                sigma = (sigma * 0.995).max(0.02);
            }
        }
        (val, config)
    };

    let surrogate_budget = (budget * 7) / 10;
    let lp_budget = budget - surrogate_budget;
    let mut top: Vec<(f64, Vec<Vec<f64>>)> = Vec::new();

    // Phase A1: antipodal configurations (k even).  Structured starts mix
    // axis points with two-coordinate diagonals, the shapes the ℓp-sphere
    // violations keep showing up in.
    if k % 2 == 0 && k >= 6 {
        let half = k / 2;
        let diag = |i: usize, j: usize, sgn: f64| -> Vec<f64> {
            let mut v = vec![0.0; d_dim];
            v[i] = 1.0;
            v[j] = sgn;
            let nm = space.norm_raw(&v);
            v.iter_mut().for_each(|c| *c /= nm);
            v
        };
        let mut starts: Vec<Vec<Vec<f64>>> = Vec::new();
        if structured.len() >= half {
            starts.push(structured[..half].to_vec());
        }
        if d_dim >= 3 && half >= 4 {
            let mut s1 = vec![diag(0, 1, 1.0), diag(0, 1, -1.0), diag(0, 2, 1.0), diag(0, 2, -1.0)];
            while s1.len() < half {
                s1.push(space.sample_unit(&mut rng));
            }
            starts.push(s1);
            let mut s2 = vec![diag(1, 2, 1.0), diag(1, 2, -1.0), diag(0, 1, 1.0), diag(0, 1, -1.0)];
            while s2.len() < half {
                s2.push(space.sample_unit(&mut rng));
            }
            starts.push(s2);
            let mut e0 = vec![0.0; d_dim];
            e0[0] = 1.0;
            let mut s3 = vec![e0, diag(1, 2, 1.0), diag(1, 2, -1.0), diag(0, 2, 1.0)];
            while s3.len() < half {
                s3.push(space.sample_unit(&mut rng));
            }
            starts.push(s3);
        }
        let n_restarts = 12usize;
        while starts.len() < n_restarts {
            starts.push((0..half).map(|_| space.sample_unit(&mut rng)).collect());
        }
        let steps = surrogate_budget / (2 * n_restarts);
        for start in starts {
            let obj = |half_pts: &[Vec<f64>]| surrogate(&expand_antipodal(half_pts));
            let (val, half_cfg) = climb(&mut rng, start, steps, &obj);
            top.push((val, expand_antipodal(&half_cfg)));
        }
    }

    // Phase A2: free configurations.
    {
        let n_restarts = 8usize;
        let phase = if k % 2 == 0 && k >= 6 {
            surrogate_budget / 2
        } else {
            surrogate_budget
        };
        let steps = phase / n_restarts;
        for restart in 0..n_restarts {
            let start: Vec<Vec<f64>> = if restart == 0 && structured.len() >= k {
                structured[..k].to_vec()
            } else if restart == 1 && structured.len() >= k {
                structured[structured.len() - k..].to_vec()
            } else {
                (0..k).map(|_| space.sample_unit(&mut rng)).collect()
            };
            let (val, cfg) = climb(&mut rng, start, steps, &surrogate);
            top.push((val, cfg));
        }
    }
    top.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    // Phase B: direct LP refinement of the most promising configurations.
    let lp_objective = |points: &[Vec<f64>]| -> f64 {
        match DistanceMatrix::from_points(space, points) {
            Ok(dm) => l1_distortion_bound(&dm).unwrap_or(1.0),
            Err(_) => 1.0,
        }
    };
    let mut lp_evals = 0usize;
    let refine_count = 4usize.min(top.len());
    let steps = lp_budget / refine_count.max(1) / 2;
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for (_, config) in top.iter().take(refine_count) {
        // Re-climb on the true objective, keeping the antipodal pairing if
        // the configuration has it.
        let antipodal = config.len() == k
            && k % 2 == 0
            && (0..k / 2).all(|i| {
                config[i]
                    .iter()
                    .zip(&config[i + k / 2])
                    .all(|(a, b)| (a + b).abs() < 1e-12)
            });
        let (val, refined) = if antipodal {
            let obj = |half_pts: &[Vec<f64>]| lp_objective(&expand_antipodal(half_pts));
            let (v, half) = climb(&mut rng, config[..k / 2].to_vec(), steps, &obj);
            (v, expand_antipodal(&half))
        } else {
            climb(&mut rng, config.clone(), steps, &lp_objective)
        };
        lp_evals += steps + 1;
        if best.as_ref().map(|(bv, _)| val > *bv).unwrap_or(true) {
            best = Some((val, refined));
        }
    }
    let (_, points) = best.expect("at least one configuration");
    let d = DistanceMatrix::from_points(space, &points)?;
    let distortion = l1_distortion_bound(&d)?;
    Ok(ConfigSearch {
        points,
        d,
        distortion,
        lp_evals,
    })
}

// ---------------------------------------------------------------------------
// The non-octahedrality certificate
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct CertifyConfig {
    pub k: usize,
    pub budget: usize,
    pub seed: u64,
    /// Consecutive-failure budget for the greedy ν-net.
    pub net_budget: usize,
    pub modulus_budget: usize,
    /// Hard cap on the ν-net size; past it the certificate is refused
    /// rather than silently truncated.
    pub max_net_points: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            k: 8,
            budget: 10_000,
            seed: 7,
            net_budget: 2000,
            modulus_budget: 100_000,
            max_net_points: 120_000,
        }
    }
}

/// Grid of ν values tried by the certificate, largest first.
pub const NU_GRID: [f64; 10] = [0.30, 0.25, 0.20, 0.15, 0.10, 0.05, 0.04, 0.03, 0.02, 0.01];

/// Quantitative obstruction: the family {x⊗y_i} over the attaining vectors
/// of a ν-net of S_{lp(p*,n)}, together with δ₀ > 0 such that any witness
/// pushing every ‖x⊗y_i + T‖ above 2 − δ₀ would restrict to an ℓ₁
/// embedding of lp(p*,n) with distortion below the certified lower bound
/// 1 + ε₀ on the forced configuration.
#[derive(Clone, Debug)]
pub struct NonOctaCertificate {
    pub p: f64,
    pub n: usize,
    pub m: usize,
    pub nu: f64,
    pub eta: f64,
    pub delta0: f64,
    pub eps0: f64,
    pub x_space: NormedSpace,
    pub y_space: NormedSpace,
    /// Coefficient matrices of the family members x⊗y_i.
    pub family: Vec<Mat>,
    pub net_size: usize,
    pub config_points: Vec<Vec<f64>>,
    pub cut_certificate: CutConeCertificate,
}

impl NonOctaCertificate {
    /// The certified cap on family defects: 2 − δ₀.
    pub fn defect_cap(&self) -> f64 {
        2.0 - self.delta0
    }
}

const CHAIN_SLACK: f64 = 1e-9;

/// Reverses the obstruction quantitatively: a distortion lower bound 1+ε₀
/// from `point_config_search` fixes the largest grid ν with
/// (1+ν)(1−3ν)⁻¹ < 1+ε₀, η = ν/4, and δ₀ = 0.9·δ̂(η); the emitted family is
/// built over a ν-net forced to contain the violating configuration.
pub fn non_octa_certificate(
    p: f64,
    n: usize,
    m: usize,
    cfg: &CertifyConfig,
) -> Result<NonOctaCertificate> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::InvalidParam(format!(
            "certificate targets 1 < p <= 2, got {p}"
        )));
    }
    if n < 3 {
        return Err(Error::InvalidParam(format!("need n >= 3, got {n}")));
    }
    let p_star = conjugate_exponent(p);
    let dual_space = NormedSpace::lp(p_star, n)?;

    let search = point_config_search(&dual_space, cfg.k, cfg.budget, cfg.seed)?;
    let eps0 = search.distortion - 1.0;
    if eps0 <= CHAIN_SLACK {
        return Err(Error::ObstructionNotEstablished(format!(
            "no distortion bound > 1 found for {dual_space} with k={} within budget {}",
            cfg.k, cfg.budget
        )));
    }

    let nu = NU_GRID
        .iter()
        .cloned()
        .find(|&nu| (1.0 + nu) / (1.0 - 3.0 * nu) < 1.0 + eps0 - CHAIN_SLACK)
        .ok_or_else(|| {
            let required = (1.0 + NU_GRID[NU_GRID.len() - 1])
                / (1.0 - 3.0 * NU_GRID[NU_GRID.len() - 1])
                - 1.0;
            Error::ParameterChain(format!(
                "eps0 {eps0:.6} too small; the nu-grid needs eps0 > {required:.6}"
            ))
        })?;
    let eta = nu / 4.0;
    let modulus = uniform_convexity_modulus(&dual_space, eta, cfg.modulus_budget)?;
    let delta0 = 0.9 * modulus.delta_hat;
    if delta0 <= 0.0 {
        return Err(Error::ParameterChain(
            "modulus estimate vanished; the space is not usefully uniformly convex".into(),
        ));
    }
    if !(delta0 < nu / 2.0 - CHAIN_SLACK) {
        return Err(Error::ParameterChain(format!(
            "delta(eta) = {delta0} is not below nu/2 = {}",
            nu / 2.0
        )));
    }

    let net: SphereNet = sphere_net_capped(
        &dual_space,
        nu,
        cfg.net_budget,
        &search.points,
        cfg.seed,
        cfg.max_net_points,
    )
    .map_err(|e| Error::ParameterChain(format!("nu-net construction failed: {e}")))?;
    let x_space = NormedSpace::lp(1.0, m)?;
    let y_space = NormedSpace::lp(p, n)?;
    let mut x = vec![0.0; m];
    x[0] = 1.0;
    let family: Vec<Mat> = net
        .points
        .iter()
        .map(|f| {
            let y = dual_space.attaining_vector(f);
            Mat::outer(&x, &y)
        })
        .collect();

    let cut_certificate = cut_cone_membership(&search.d)?;

    Ok(NonOctaCertificate {
        p,
        n,
        m,
        nu,
        eta,
        delta0,
        eps0,
        x_space,
        y_space,
        net_size: net.points.len(),
        family,
        config_points: search.points,
        cut_certificate,
    })
}

// ---------------------------------------------------------------------------
// 2-D Levy-style embedding
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct LevyEmbedding {
    pub angles: Vec<f64>,
    pub weights: Vec<f64>,
    pub fit_error: f64,
    /// The induced map into plain ℓ₁ on the positive-weight cells.
    pub embedding: L1Embedding,
}

/// LP fit of a 2-dimensional norm as a nonnegative combination of angle
/// functionals: ‖(a,b)‖ ≈ Σ_j w_j |a cosθ_j + b sinθ_j|, minimizing the
/// max absolute error over a 360-direction test net.
pub fn levy_embedding_2d(space: &NormedSpace, grid: usize, tol: f64) -> Result<LevyEmbedding> {
    if space.dim() != 2 {
        return Err(Error::InvalidParam("levy embedding needs a 2-dimensional space".into()));
    }
    if grid < 64 {
        return Err(Error::InvalidParam(format!("grid {grid} below the minimum 64")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParam("tol must be > 0".into()));
    }
    let angles: Vec<f64> = (0..grid)
        .map(|j| std::f64::consts::PI * j as f64 / grid as f64)
        .collect();
    let tests = 360usize;

    let mut lp = LpBuilder::new(Direction::Minimize);
    let err = lp.add_var(1.0, NONNEG);
    let w: Vec<usize> = angles.iter().map(|_| lp.add_var(0.0, NONNEG)).collect();
    for t in 0..tests {
        let phi = std::f64::consts::PI * t as f64 / tests as f64;
        let x = [phi.cos(), phi.sin()];
        let target = space.norm_raw(&x);
        let mut terms: Vec<(usize, f64)> = angles
            .iter()
            .enumerate()
            .map(|(j, th)| (w[j], (x[0] * th.cos() + x[1] * th.sin()).abs()))
            .collect();
        terms.push((err, -1.0));
        lp.add_constraint(terms.clone(), Cmp::Le, target);
        let mut lower = terms;
        lower.last_mut().map(|l| l.1 = 1.0);
        lp.add_constraint(lower, Cmp::Ge, target);
    }
    let solution = match lp.solve()? {
        LpOutcome::Optimal(s) => s,
        other => return Err(Error::Lp(format!("levy fit LP failed: {other:?}"))),
    };
    let fit_error = solution.values[0];
    if fit_error > tol {
        return Err(Error::IncreaseGrid {
            err: fit_error,
            tol,
        });
    }
    let weights: Vec<f64> = w.iter().map(|v| solution.values[*v]).collect();

    // The induced map into plain l1 keeps the positive-weight cells.
    let rows: Vec<Vec<f64>> = angles
        .iter()
        .zip(&weights)
        .filter(|(_, w)| **w > 1e-12)
        .map(|(th, w)| vec![w * th.cos(), w * th.sin()])
        .collect();
    let embedding = L1Embedding::from_matrix(
        Mat::from_rows(rows)?,
        space.clone(),
        10_000,
    )?;

    Ok(LevyEmbedding {
        angles,
        weights,
        fit_error,
        embedding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp_space(p: f64, n: usize) -> NormedSpace {
        NormedSpace::lp(p, n).unwrap()
    }

    fn k23() -> DistanceMatrix {
        // Shortest-path metric of K_{2,3}: parts {0,1} and {2,3,4}.
        let mut d = Mat::zeros(5, 5);
        for i in 0..5 {
            for j in 0..5 {
                if i == j {
                    continue;
                }
                let same_part = (i < 2) == (j < 2);
                d.set(i, j, if same_part { 2.0 } else { 1.0 });
            }
        }
        DistanceMatrix::new(d).unwrap()
    }

    #[test]
    fn three_point_l1_configuration_is_feasible() {
        let d = DistanceMatrix::new(
            Mat::from_rows(vec![
                vec![0.0, 1.0, 1.0],
                vec![1.0, 0.0, 2.0],
                vec![1.0, 2.0, 0.0],
            ])
            .unwrap(),
        )
        .unwrap();
        let cert = cut_cone_membership(&d).unwrap();
        match &cert.outcome {
            CutConeOutcome::Feasible { weights } => {
                // Reconstruction within 1e-6.
                for i in 0..3 {
                    for j in i + 1..3 {
                        let got: f64 = weights
                            .iter()
                            .map(|(mask, w)| w * cut_value(*mask, i, j))
                            .sum();
                        assert!((got - d.get(i, j)).abs() < 1e-6);
                    }
                }
                assert!(weights.len() <= 3);
            }
            other => panic!("expected feasible: {other:?}"),
        }
    }

    #[test]
    fn four_point_metrics_are_always_feasible() {
        // Classical fact used as an oracle: entries in [1,2] always satisfy
        // the triangle inequality.
        let mut rng = stream_rng(17, streams::CONFIG_SEARCH);
        for _ in 0..200 {
            let mut d = Mat::zeros(4, 4);
            for i in 0..4 {
                for j in i + 1..4 {
                    let g: f64 = crate::rng::gaussian_vector(&mut rng, 1)[0];
                    let v = 1.0 + (g.abs() % 1.0);
                    d.set(i, j, v);
                    d.set(j, i, v);
                }
            }
            let dm = DistanceMatrix::new(d).unwrap();
            let cert = cut_cone_membership(&dm).unwrap();
            assert!(cert.is_feasible());
            let t = l1_distortion_bound(&dm).unwrap();
            assert!((t - 1.0).abs() < 1e-7, "distortion {t}");
        }
    }

    #[test]
    fn k23_is_infeasible_with_integer_separator() {
        let d = k23();
        let cert = cut_cone_membership(&d).unwrap();
        let separator = match &cert.outcome {
            CutConeOutcome::Infeasible { separator } => separator,
            other => panic!("expected infeasible: {other:?}"),
        };
        assert!(separator.lp_dual_value > 1e-9);
        let b = separator.negative_type.as_ref().expect("integer separator");
        let bf: Vec<f64> = b.iter().map(|x| *x as f64).collect();
        assert_eq!(b.iter().sum::<i64>(), 0);
        // Q(b) = 6 for b = ±(3,3,-2,-2,-2).
        let q = negative_type_form(&d, &bf);
        assert!((q - 6.0).abs() < 1e-9, "Q(b) = {q}, b = {b:?}");
        let mut sorted = b.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![-2, -2, -2, 3, 3]);
    }

    #[test]
    fn k23_distortion_regression() {
        let t = l1_distortion_bound(&k23()).unwrap();
        assert!(t > 1.0 + 1e-9);
        let frozen = 4.0 / 3.0;
        assert!(
            (t - frozen).abs() < 1e-7,
            "K23 distortion drifted: {t} vs frozen {frozen}"
        );
    }

    #[test]
    fn non_metric_inputs_rejected() {
        let mut d = Mat::zeros(3, 3);
        d.set(0, 1, 5.0);
        d.set(1, 0, 5.0);
        d.set(0, 2, 1.0);
        d.set(2, 0, 1.0);
        d.set(1, 2, 1.0);
        d.set(2, 1, 1.0);
        assert!(matches!(DistanceMatrix::new(d), Err(Error::NonMetric(_))));
    }

    #[test]
    fn point_cap_enforced() {
        let d = DistanceMatrix::new(Mat::zeros(11, 11)).unwrap();
        assert!(cut_cone_membership(&d).is_err());
    }

    #[test]
    fn sphere_points_in_l1_have_no_distortion() {
        let space = lp_space(1.0, 3);
        let mut rng = stream_rng(3, streams::CONFIG_SEARCH);
        let points: Vec<Vec<f64>> = (0..6).map(|_| space.sample_unit(&mut rng)).collect();
        let d = DistanceMatrix::from_points(&space, &points).unwrap();
        assert!((l1_distortion_bound(&d).unwrap() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn euclidean_configurations_embed() {
        let space = lp_space(2.0, 3);
        for seed in 0..20 {
            let search = point_config_search(&space, 6, 400, seed).unwrap();
            assert!(
                (search.distortion - 1.0).abs() < 1e-6,
                "seed {seed}: distortion {}",
                search.distortion
            );
        }
    }

    #[test]
    fn lp43_search_finds_distortion() {
        let space = lp_space(4.0, 3);
        let search = point_config_search(&space, 6, 10_000, 7).unwrap();
        assert!(
            search.distortion > 1.0 + 1e-6,
            "no violation found: {}",
            search.distortion
        );
        let frozen = 1.0;
        assert!(
            (search.distortion - frozen).abs() < 1e-9,
            "lp(4,3) distortion drifted: {} vs frozen {frozen}",
            search.distortion
        );
    }

    #[test]
    fn certificate_errors_for_hilbert_case() {
        let err = non_octa_certificate(2.0, 3, 4, &CertifyConfig::default()).unwrap_err();
        assert!(matches!(err, Error::ObstructionNotEstablished(_)));
    }

    #[test]
    fn levy_embedding_l1() {
        let emb = levy_embedding_2d(&lp_space(1.0, 2), 64, 1e-6).unwrap();
        // Atoms at theta = 0 and theta = pi/2.
        let total: f64 = emb.weights.iter().sum();
        let at_axes: f64 = emb
            .angles
            .iter()
            .zip(&emb.weights)
            .filter(|(th, _)| {
                th.abs() < 1e-9 || (**th - std::f64::consts::FRAC_PI_2).abs() < 1e-9
            })
            .map(|(_, w)| w)
            .sum();
        assert!((at_axes - total).abs() < 1e-6, "mass off axes: {}", total - at_axes);
        assert!((at_axes - 2.0).abs() < 1e-6);
        assert!(emb.fit_error <= 1e-6);
    }

    #[test]
    fn levy_embedding_linf() {
        let emb = levy_embedding_2d(&lp_space(f64::INFINITY, 2), 64, 1e-6).unwrap();
        let diag: f64 = emb
            .angles
            .iter()
            .zip(&emb.weights)
            .filter(|(th, _)| {
                (**th - std::f64::consts::FRAC_PI_4).abs() < 1e-9
                    || (**th - 3.0 * std::f64::consts::FRAC_PI_4).abs() < 1e-9
            })
            .map(|(_, w)| w)
            .sum();
        let total: f64 = emb.weights.iter().sum();
        assert!((diag - total).abs() < 1e-6);
        assert!(emb.embedding.distortion_epsilon() <= 2e-6);
    }

    #[test]
    fn levy_embedding_euclidean() {
        let emb = levy_embedding_2d(&lp_space(2.0, 2), 128, 1e-4).unwrap();
        assert!(emb.fit_error <= 1e-4);
        assert!(emb.embedding.distortion_epsilon() <= 2e-4);
        assert!(emb.weights.iter().all(|w| *w >= 0.0));
    }

    #[test]
    fn levy_rejects_small_grid() {
        assert!(levy_embedding_2d(&lp_space(2.0, 2), 32, 1e-4).is_err());
    }
}
