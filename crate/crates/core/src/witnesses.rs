//! Constructive witness generators: operators or tensors S that push
//! ‖T_i + S‖ towards 2 for a whole finite family at once, each paired with
//! a verifier that recomputes the claimed bound with exact norms.
//!
//! Four constructions: a shift into fresh ℓ₁ coordinates (bound 2−5ε), an
//! interval compression inside a discretized L₁ (bound 2−2ε), a rank-one
//! witness w⊗z built from an alternative-octahedrality step, and the
//! ⊕₁-extension by a fresh coordinate that makes projective norms exactly
//! additive.

use crate::error::Error;
use crate::mat::Mat;
use crate::rng::{stream_rng, streams};
use crate::spaces::NormedSpace;
use crate::tensor_norms::{
    injective_norm, operator_norm_exact, pairing, projective_norm, witness_cmp, DualWitness,
    Exactness, PrimalWitness, Tensor,
};
use crate::Result;

// ---------------------------------------------------------------------------
// Embeddings into l1
// ---------------------------------------------------------------------------

/// A linear map dom → lp(1, d) with a measured distortion record:
/// lower·‖x‖ ≤ ‖ψx‖₁ ≤ upper·‖x‖ on a sampled sphere.
#[derive(Clone, Debug)]
pub struct L1Embedding {
    pub matrix: Mat,
    pub dom: NormedSpace,
    pub lower: f64,
    pub upper: f64,
}

impl L1Embedding {
    /// Measures the ratio ‖ψx‖₁/‖x‖ over canonical and sampled unit vectors
    /// and records the range.
    pub fn from_matrix(matrix: Mat, dom: NormedSpace, samples: usize) -> Result<Self> {
        if matrix.cols() != dom.dim() {
            return Err(Error::ShapeMismatch(format!(
                "embedding {}x{} does not act on dim {}",
                matrix.rows(),
                matrix.cols(),
                dom.dim()
            )));
        }
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        let mut probe = |x: &[f64]| {
            let img = matrix.matvec(x);
            let r = img.iter().map(|v| v.abs()).sum::<f64>();
            lo = lo.min(r);
            hi = hi.max(r);
        };
        for j in 0..dom.dim() {
            for sgn in [1.0, -1.0] {
                let mut e = vec![0.0; dom.dim()];
                e[j] = sgn;
                let nm = dom.norm_raw(&e);
                let unit: Vec<f64> = e.iter().map(|v| v / nm).collect();
                probe(&unit);
            }
        }
        let mut rng = stream_rng(0x656d62, streams::EMBED_CHECK);
        for _ in 0..samples {
            let x = dom.sample_unit(&mut rng);
            probe(&x);
        }
        Ok(L1Embedding {
            matrix,
            dom,
            lower: lo,
            upper: hi,
        })
    }

    /// Identity-style embedding for ℓ₁-type domains: x ↦ (w_c x_c), an
    /// exact isometry onto plain ℓ₁.
    pub fn identity_for_l1(dom: &NormedSpace) -> Result<Self> {
        let weights = dom.l1_weights().ok_or_else(|| {
            Error::InvalidParam(format!("identity embedding needs an l1-type domain, got {dom}"))
        })?;
        let d = weights.len();
        let mut m = Mat::zeros(d, d);
        for (c, w) in weights.iter().enumerate() {
            m.set(c, c, *w);
        }
        Ok(L1Embedding {
            matrix: m,
            dom: dom.clone(),
            lower: 1.0,
            upper: 1.0,
        })
    }

    /// Exact isometry lp(∞,2) → lp(1,2): (a,b) ↦ ((a+b)/2, (a−b)/2), so that
    /// ‖ψx‖₁ = (|a+b| + |a−b|)/2 = max(|a|,|b|).
    pub fn linf2_half_sum() -> Self {
        L1Embedding {
            matrix: Mat::from_rows(vec![vec![0.5, 0.5], vec![0.5, -0.5]]).unwrap(),
            dom: NormedSpace::lp(f64::INFINITY, 2).unwrap(),
            lower: 1.0,
            upper: 1.0,
        }
    }

    /// Distortion as the ε of a (1+ε) isometry: max(1 − lower, upper − 1).
    pub fn distortion_epsilon(&self) -> f64 {
        (1.0 - self.lower).max(self.upper - 1.0).max(0.0)
    }

    pub fn out_dim(&self) -> usize {
        self.matrix.rows()
    }
}

// ---------------------------------------------------------------------------
// Shift witness
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ShiftWitnessSpec {
    pub k: usize,
    pub output_dim: usize,
    pub psi_distortion: f64,
}

#[derive(Clone, Debug)]
pub struct ShiftWitness {
    /// The shift operator S = φ_k ∘ P_k ∘ ψ into lp(1, output_dim).
    pub matrix: Mat,
    pub dom: NormedSpace,
    pub spec: ShiftWitnessSpec,
    /// The inputs zero-padded to the common codomain lp(1, output_dim).
    pub padded_ops: Vec<Mat>,
}

#[derive(Clone, Debug)]
pub struct ShiftReport {
    pub epsilon: f64,
    pub bound: f64,
    pub values: Vec<f64>,
    pub min_value: f64,
    pub pass: bool,
}

const OP_UNIT_TOL: f64 = 1e-6;

fn pad_rows(a: &Mat, rows: usize) -> Mat {
    let mut out = Mat::zeros(rows, a.cols());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            out.set(i, j, a.get(i, j));
        }
    }
    out
}

/// Shift construction: truncate everything to the first k ℓ₁ coordinates
/// and re-embed the domain on fresh coordinates above k, so the images of
/// the attaining vectors get disjoint support.  The verifier recomputes
/// every ‖T_i + S‖ with exact sign enumeration against the bound 2 − 5ε.
///
/// The inputs are norm-one operators dom → lp(1, m) given as m×dim
/// matrices; `psi` embeds dom into lp(1, d) with distortion ≤ 1+ε.
pub fn shift_witness(
    t_list: &[Mat],
    dom: &NormedSpace,
    psi: &L1Embedding,
    epsilon: f64,
) -> Result<(ShiftWitness, ShiftReport)> {
    if t_list.is_empty() {
        return Err(Error::InvalidParam("empty operator family".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParam("epsilon must be > 0".into()));
    }
    if psi.dom != *dom {
        return Err(Error::ShapeMismatch("psi domain differs from operator domain".into()));
    }
    if psi.distortion_epsilon() > epsilon + 1e-9 {
        return Err(Error::InvalidParam(format!(
            "psi distortion {} exceeds 1+epsilon",
            1.0 + psi.distortion_epsilon()
        )));
    }
    let m = t_list[0].rows();
    let cod = NormedSpace::lp(1.0, m)?;

    // Attaining unit vectors x_i with ‖T_i x_i‖ = ‖T_i‖ = 1.
    let mut attainers = Vec::with_capacity(t_list.len());
    for t in t_list {
        if t.rows() != m || t.cols() != dom.dim() {
            return Err(Error::ShapeMismatch("operators must share shape".into()));
        }
        let cert = operator_norm_exact(t, dom, &cod)?;
        if (cert.value - 1.0).abs() > OP_UNIT_TOL {
            return Err(Error::NonUnit(cert.value));
        }
        match cert.witness_primal {
            Some(PrimalWitness::Vector(x)) => attainers.push(x),
            _ => unreachable!("exact certificates carry witnesses"),
        }
    }

    // Smallest k whose tails are < epsilon for the images of every probe
    // input: the attaining vectors plus the normalized basis, under both the
    // T_i and psi.
    let d = psi.out_dim();
    let tail_l1 = |v: &[f64], k: usize| -> f64 {
        v.iter().skip(k).map(|c| c.abs()).sum()
    };
    let mut probes: Vec<Vec<f64>> = attainers.clone();
    for c in 0..dom.dim() {
        let mut e = vec![0.0; dom.dim()];
        e[c] = 1.0;
        let nm = dom.norm_raw(&e);
        probes.push(e.iter().map(|v| v / nm).collect());
    }
    let mut images: Vec<Vec<f64>> = Vec::new();
    for x in &probes {
        for t in t_list {
            images.push(t.matvec(x));
        }
        images.push(psi.matrix.matvec(x));
    }
    let mut k = None;
    for cand in 1..=m.max(d) {
        if images.iter().all(|v| tail_l1(v, cand) < epsilon) {
            k = Some(cand);
            break;
        }
    }
    let k = k.ok_or_else(|| Error::CodomainBudget("no truncation index has small tails".into()))?;

    let d_kept = d.min(k);
    let output_dim = (k + d_kept).max(m);
    if output_dim > crate::tensor_norms::ENUM_DIM_LIMIT {
        return Err(Error::CodomainBudget(format!(
            "output dimension {output_dim} exceeds the exact-norm cap"
        )));
    }

    // S: rows 1..k zero, row k+j = row j of psi (j ≤ d_kept).
    let mut s = Mat::zeros(output_dim, dom.dim());
    for j in 0..d_kept {
        for c in 0..dom.dim() {
            s.set(k + j, c, psi.matrix.get(j, c));
        }
    }

    let padded: Vec<Mat> = t_list.iter().map(|t| pad_rows(t, output_dim)).collect();
    let big_cod = NormedSpace::lp(1.0, output_dim)?;
    let mut values = Vec::with_capacity(padded.len());
    for t in &padded {
        let sum = t.add_scaled(&s, 1.0)?;
        values.push(operator_norm_exact(&sum, dom, &big_cod)?.value);
    }
    let min_value = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let bound = 2.0 - 5.0 * epsilon;
    let report = ShiftReport {
        epsilon,
        bound,
        values,
        min_value,
        pass: min_value >= bound - 1e-9,
    };
    Ok((
        ShiftWitness {
            matrix: s,
            dom: dom.clone(),
            spec: ShiftWitnessSpec {
                k,
                output_dim,
                psi_distortion: psi.distortion_epsilon(),
            },
            padded_ops: padded,
        },
        report,
    ))
}

// ---------------------------------------------------------------------------
// Interval witness
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct IntervalWitnessSpec {
    pub grid_n: usize,
    /// First cell (0-based) of the dyadic suffix I.
    pub interval_start: usize,
    pub interval_len: usize,
    /// φ' = N/|I| in cells.
    pub phi_slope: f64,
}

#[derive(Clone, Debug)]
pub struct IntervalWitness {
    /// G = S_I ∘ T₀ as an N×dim matrix into wl1(N).
    pub matrix: Mat,
    pub dom: NormedSpace,
    pub spec: IntervalWitnessSpec,
}

#[derive(Clone, Debug)]
pub struct IntervalReport {
    pub epsilon: f64,
    pub bound: f64,
    pub values: Vec<f64>,
    pub min_value: f64,
    pub pass: bool,
}

/// The compression S_I on the uniform N-cell grid: output cell j of the
/// suffix I collects the averaged mass of its preimage block scaled by
/// φ' = N/|I|, which reduces to summing the block.
fn compression_matrix(n_cells: usize, interval_len: usize) -> Mat {
    let start = n_cells - interval_len;
    let block = n_cells / interval_len;
    let mut s = Mat::zeros(n_cells, n_cells);
    for j in 0..interval_len {
        for c in j * block..(j + 1) * block {
            s.set(start + j, c, 1.0);
        }
    }
    s
}

/// Interval construction on wl1(N), N a power of two: pick the largest
/// dyadic suffix I whose tail mass under every T_i(x_i) is < ε/2 and on
/// which the compression of T₀'s range stays isometric, then compress the
/// supplied isometry T₀ into I.  The verifier recomputes every ‖T_i + G‖
/// exactly against the bound 2 − 2ε.
pub fn interval_witness(
    t_list: &[Mat],
    dom: &NormedSpace,
    n_cells: usize,
    epsilon: f64,
    t0: &Mat,
) -> Result<(IntervalWitness, IntervalReport)> {
    if t_list.is_empty() {
        return Err(Error::InvalidParam("empty operator family".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParam("epsilon must be > 0".into()));
    }
    if !n_cells.is_power_of_two() {
        return Err(Error::InvalidParam(format!("grid size {n_cells} must be a power of 2")));
    }
    if n_cells > crate::tensor_norms::ENUM_DIM_LIMIT {
        return Err(Error::CodomainBudget(format!(
            "grid size {n_cells} exceeds the exact-norm cap"
        )));
    }
    let cod = NormedSpace::discretized_l1(n_cells)?;
    if t0.rows() != n_cells || t0.cols() != dom.dim() {
        return Err(Error::ShapeMismatch("T0 must map dom into wl1(N)".into()));
    }

    let mut attainers = Vec::with_capacity(t_list.len());
    for t in t_list {
        if t.rows() != n_cells || t.cols() != dom.dim() {
            return Err(Error::ShapeMismatch("operators must map dom into wl1(N)".into()));
        }
        let cert = operator_norm_exact(t, dom, &cod)?;
        if (cert.value - 1.0).abs() > OP_UNIT_TOL {
            return Err(Error::NonUnit(cert.value));
        }
        match cert.witness_primal {
            Some(PrimalWitness::Vector(x)) => attainers.push(x),
            _ => unreachable!(),
        }
    }
    let images: Vec<Vec<f64>> = t_list
        .iter()
        .zip(&attainers)
        .map(|(t, x)| t.matvec(x))
        .collect();

    // Largest dyadic suffix passing the tail rule and keeping the
    // compression isometric on the range of T0 (checked on basis images).
    let w = 1.0 / n_cells as f64;
    let mut chosen = None;
    let mut len = n_cells / 2;
    while len >= 1 {
        let start = n_cells - len;
        let tail_ok = images.iter().all(|img| {
            img.iter().skip(start).map(|c| c.abs() * w).sum::<f64>() < epsilon / 2.0
        });
        if tail_ok {
            let s_i = compression_matrix(n_cells, len);
            let iso_ok = (0..dom.dim()).all(|j| {
                let mut e = vec![0.0; dom.dim()];
                e[j] = 1.0;
                let img = t0.matvec(&e);
                let compressed = s_i.matvec(&img);
                (cod.norm_raw(&compressed) - cod.norm_raw(&img)).abs() <= 1e-9
            });
            if iso_ok {
                chosen = Some((len, s_i));
                break;
            }
        }
        len /= 2;
    }
    let (interval_len, s_i) = chosen.ok_or_else(|| {
        Error::NoDyadicSuffix(format!(
            "no suffix of wl1({n_cells}) passes the tail rule at epsilon {epsilon}"
        ))
    })?;

    // G = S_I ∘ T0.
    let mut g = Mat::zeros(n_cells, dom.dim());
    for j in 0..dom.dim() {
        let mut e = vec![0.0; dom.dim()];
        e[j] = 1.0;
        let col = s_i.matvec(&t0.matvec(&e));
        for (r, v) in col.iter().enumerate() {
            g.set(r, j, *v);
        }
    }

    let mut values = Vec::with_capacity(t_list.len());
    for t in t_list {
        let sum = t.add_scaled(&g, 1.0)?;
        values.push(operator_norm_exact(&sum, dom, &cod)?.value);
    }
    let min_value = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let bound = 2.0 - 2.0 * epsilon;
    let report = IntervalReport {
        epsilon,
        bound,
        values,
        min_value,
        pass: min_value >= bound - 1e-9,
    };
    Ok((
        IntervalWitness {
            matrix: g,
            dom: dom.clone(),
            spec: IntervalWitnessSpec {
                grid_n: n_cells,
                interval_start: n_cells - interval_len,
                interval_len,
                phi_slope: n_cells as f64 / interval_len as f64,
            },
        },
        report,
    ))
}

// ---------------------------------------------------------------------------
// Alternative-octahedrality witness for sup-norm spaces
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct AltWitnessReport {
    pub attained: Vec<f64>,
    pub alt_values: Vec<f64>,
    pub min_alt_value: f64,
    pub pass: bool,
}

/// The c₀/ℓ∞-style construction: y = Σ σ_j e_{i_j} over the (coordinate,
/// sign) pairs where each family member attains its sup norm, first-max
/// tie-break, first-seen sign per coordinate.
pub fn sup_alt_witness(family: &[Vec<f64>]) -> Result<(Vec<f64>, AltWitnessReport)> {
    if family.is_empty() {
        return Err(Error::InvalidParam("empty family".into()));
    }
    let d = family[0].len();
    let space = NormedSpace::lp(f64::INFINITY, d)?;
    for x in family {
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        let n = space.norm_raw(x);
        if (n - 1.0).abs() > 1e-8 {
            return Err(Error::NonUnit(n));
        }
    }

    let mut y = vec![0.0; d];
    let mut attained = Vec::with_capacity(family.len());
    for x in family {
        let mut j = 0usize;
        for (c, v) in x.iter().enumerate() {
            if v.abs() > x[j].abs() {
                j = c;
            }
        }
        attained.push(x[j].abs());
        if y[j] == 0.0 {
            y[j] = if x[j] < 0.0 { -1.0 } else { 1.0 };
        }
    }

    let mut alt_values = Vec::with_capacity(family.len());
    let mut pass = true;
    for (x, a) in family.iter().zip(&attained) {
        let plus: Vec<f64> = x.iter().zip(&y).map(|(u, v)| u + v).collect();
        let minus: Vec<f64> = x.iter().zip(&y).map(|(u, v)| u - v).collect();
        let alt = space.norm_raw(&plus).max(space.norm_raw(&minus));
        if alt < 1.0 + a - 1e-12 {
            pass = false;
        }
        alt_values.push(alt);
    }
    let min_alt_value = alt_values.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((
        y,
        AltWitnessReport {
            attained,
            alt_values,
            min_alt_value,
            pass,
        },
    ))
}

/// Coordinate-pick witness for ℓ₁-type spaces: the normalized basis vector
/// of the coordinate least loaded by the family.  Each ‖x_i ± e_j‖ is then
/// at least 2 − 2·load, the ℓ₁ analogue of the sup-norm construction.
pub fn l1_coordinate_witness(space: &NormedSpace, family: &[Vec<f64>]) -> Result<Vec<f64>> {
    let weights = space.l1_weights().ok_or_else(|| {
        Error::InvalidParam(format!("coordinate witness needs an l1-type space, got {space}"))
    })?;
    if family.is_empty() {
        return Err(Error::InvalidParam("empty family".into()));
    }
    let d = space.dim();
    let mut best = (0usize, f64::INFINITY);
    for j in 0..d {
        let load: f64 = family.iter().map(|x| x[j].abs() * weights[j]).sum();
        if load < best.1 {
            best = (j, load);
        }
    }
    let mut y = vec![0.0; d];
    y[best.0] = 1.0 / weights[best.0];
    Ok(y)
}

// ---------------------------------------------------------------------------
// Rank-one witness search
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct RankOneConfig {
    pub starts: usize,
    pub seed: u64,
    /// Budget handed to inexact norm evaluations.
    pub budget: usize,
}

impl Default for RankOneConfig {
    fn default() -> Self {
        RankOneConfig {
            starts: 32,
            seed: 7,
            budget: 16,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RankOneWitness {
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    pub tensor: Tensor,
}

#[derive(Clone, Debug)]
pub struct RankOneReport {
    /// ‖T_i* y_i*‖ for each family member (stage-1 quantities).
    pub stage1: Vec<f64>,
    /// |x_i*(w)| for each member: the alternative-octahedrality quality.
    pub alt_quality: Vec<f64>,
    pub values: Vec<f64>,
    pub min_value: f64,
    /// ε* = max(1 − stage1, 1 − alt_quality) over the family.
    pub epsilon_star: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Two-stage rank-one witness S = w⊗z for a family of unit tensors in
/// X⊗_ε Y: first w from the alternative-octahedrality step applied to the
/// pulled-back vectors T_i* y_i*, then z maximizing min_i ‖T_i + w⊗z‖ over
/// sphere candidates.
pub fn rank_one_witness_search(
    t_list: &[Tensor],
    cfg: &RankOneConfig,
) -> Result<(RankOneWitness, RankOneReport)> {
    if t_list.is_empty() {
        return Err(Error::InvalidParam("empty tensor family".into()));
    }
    let xs = &t_list[0].x_space;
    let ys = &t_list[0].y_space;
    for t in t_list {
        if t.x_space != *xs || t.y_space != *ys {
            return Err(Error::ShapeMismatch("family members live in different spaces".into()));
        }
        let nm = injective_norm(t, cfg.budget)?.value;
        if (nm - 1.0).abs() > 1e-8 {
            return Err(Error::NonUnit(nm));
        }
    }

    // Stage 1: pull back the norming functionals of the images.
    let mut pulled: Vec<Vec<f64>> = Vec::with_capacity(t_list.len());
    let mut unit_images: Vec<Vec<f64>> = Vec::with_capacity(t_list.len());
    for t in t_list {
        let cert = injective_norm(t, cfg.budget)?;
        let (f, _g) = match &cert.witness_dual {
            Some(DualWitness::FunctionalPair { f, g }) => (f.clone(), g.clone()),
            _ => {
                return Err(Error::InvalidParam(
                    "injective certificate carries no attaining pair".into(),
                ))
            }
        };
        // Image T(f) in Y, its norming functional y*, then T* y* in X.
        let image = t.coeffs.tmatvec(&f);
        let image_norm = ys.norm_raw(&image);
        let unit_img: Vec<f64> = image.iter().map(|v| v / image_norm).collect();
        let y_star = ys.norming_functional_raw(&unit_img);
        let back = t.coeffs.matvec(&y_star);
        pulled.push(back);
        unit_images.push(unit_img);
    }

    // w maximizes the alternative-octahedrality objective for the pulled
    // vectors.
    let normalized: Vec<Vec<f64>> = pulled
        .iter()
        .map(|v| {
            let n = xs.norm_raw(v);
            v.iter().map(|c| c / n).collect()
        })
        .collect();
    let mut w_candidates: Vec<Vec<f64>> = Vec::new();
    if xs.is_linf_type() {
        if let Ok((y, _)) = sup_alt_witness(&normalized) {
            w_candidates.push(y);
        }
    }
    if let Ok(y) = l1_coordinate_witness(xs, &normalized) {
        w_candidates.push(y);
    }
    w_candidates.extend(normalized.iter().cloned());
    for j in 0..xs.dim() {
        for sgn in [1.0, -1.0] {
            let mut e = vec![0.0; xs.dim()];
            e[j] = sgn;
            let nm = xs.norm_raw(&e);
            w_candidates.push(e.iter().map(|v| v / nm).collect());
        }
    }
    let mut rng = stream_rng(cfg.seed, streams::WITNESS_SUITE);
    for _ in 0..cfg.starts {
        w_candidates.push(xs.sample_unit(&mut rng));
    }
    let alt_objective = |w: &[f64]| -> f64 {
        normalized
            .iter()
            .map(|v| {
                let plus: Vec<f64> = v.iter().zip(w).map(|(a, b)| a + b).collect();
                let minus: Vec<f64> = v.iter().zip(w).map(|(a, b)| a - b).collect();
                xs.norm_raw(&plus).max(xs.norm_raw(&minus))
            })
            .fold(f64::INFINITY, f64::min)
    };
    let mut w = w_candidates[0].clone();
    let mut w_val = alt_objective(&w);
    for cand in &w_candidates[1..] {
        let v = alt_objective(cand);
        if v > w_val || (v == w_val && witness_cmp(cand, &w) == std::cmp::Ordering::Less) {
            w_val = v;
            w = cand.clone();
        }
    }

    // Stage 2: z over sphere candidates, maximizing the min over the family.
    let mut z_candidates: Vec<Vec<f64>> = Vec::new();
    z_candidates.extend(unit_images.iter().cloned());
    for j in 0..ys.dim() {
        for sgn in [1.0, -1.0] {
            let mut e = vec![0.0; ys.dim()];
            e[j] = sgn;
            let nm = ys.norm_raw(&e);
            z_candidates.push(e.iter().map(|v| v / nm).collect());
        }
    }
    for _ in 0..cfg.starts {
        z_candidates.push(ys.sample_unit(&mut rng));
    }
    let family_objective = |z: &[f64]| -> Result<f64> {
        let mut min = f64::INFINITY;
        for t in t_list {
            let sum = Tensor::new(
                xs.clone(),
                ys.clone(),
                t.coeffs.add_scaled(&Mat::outer(&w, z), 1.0)?,
            )?;
            min = min.min(injective_norm(&sum, cfg.budget)?.value);
        }
        Ok(min)
    };
    let mut z = z_candidates[0].clone();
    let mut z_val = family_objective(&z)?;
    for cand in &z_candidates[1..] {
        let v = family_objective(cand)?;
        if v > z_val || (v == z_val && witness_cmp(cand, &z) == std::cmp::Ordering::Less) {
            z_val = v;
            z = cand.clone();
        }
    }
    // Joint refinement: coordinate ascent on (w, z) from the staged point
    // and from a few seeded pairs.  The staged construction mirrors the
    // proof; the refinement only improves on it.
    let pair_objective = |w: &[f64], z: &[f64]| -> Result<f64> {
        let mut min = f64::INFINITY;
        for t in t_list {
            let sum = Tensor::new(
                xs.clone(),
                ys.clone(),
                t.coeffs.add_scaled(&Mat::outer(w, z), 1.0)?,
            )?;
            min = min.min(injective_norm(&sum, cfg.budget)?.value);
        }
        Ok(min)
    };
    let refine = |w0: &[f64], z0: &[f64]| -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let mut w = w0.to_vec();
        let mut z = z0.to_vec();
        let mut val = pair_objective(&w, &z)?;
        let mut step = 0.5f64;
        while step > 1e-3 {
            let mut improved = false;
            for side in 0..2 {
                let dim = if side == 0 { xs.dim() } else { ys.dim() };
                for j in 0..dim {
                    for sgn in [1.0, -1.0] {
                        let mut cw = w.clone();
                        let mut cz = z.clone();
                        if side == 0 {
                            cw[j] += sgn * step;
                            let nm = xs.norm_raw(&cw);
                            if nm < 1e-12 {
                                continue;
                            }
                            cw.iter_mut().for_each(|v| *v /= nm);
                        } else {
                            cz[j] += sgn * step;
                            let nm = ys.norm_raw(&cz);
                            if nm < 1e-12 {
                                continue;
                            }
                            cz.iter_mut().for_each(|v| *v /= nm);
                        }
                        let v = pair_objective(&cw, &cz)?;
                        if v > val + 1e-12 {
                            val = v;
                            w = cw;
                            z = cz;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        Ok((val, w, z))
    };
    let (mut best_val, mut best_w, mut best_z) = refine(&w, &z)?;
    if best_val < z_val {
        best_val = z_val;
        best_w = w.clone();
        best_z = z.clone();
    }
    for _ in 0..cfg.starts.min(8) {
        let w0 = xs.sample_unit(&mut rng);
        let z0 = ys.sample_unit(&mut rng);
        let (v, rw, rz) = refine(&w0, &z0)?;
        if v > best_val {
            best_val = v;
            best_w = rw;
            best_z = rz;
        }
    }
    let w = best_w;
    let z = best_z;

    // Report quantities mirroring the proof chain.
    let stage1: Vec<f64> = pulled.iter().map(|v| xs.norm_raw(v)).collect();
    let alt_quality: Vec<f64> = normalized
        .iter()
        .map(|v| {
            let x_star = xs.norming_functional_raw(v);
            x_star.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>().abs()
        })
        .collect();
    let mut values = Vec::with_capacity(t_list.len());
    for t in t_list {
        let sum = Tensor::new(
            xs.clone(),
            ys.clone(),
            t.coeffs.add_scaled(&Mat::outer(&w, &z), 1.0)?,
        )?;
        values.push(injective_norm(&sum, cfg.budget)?.value);
    }
    let min_value = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let eps_star = stage1
        .iter()
        .zip(&alt_quality)
        .map(|(a, b)| (1.0 - a).max(1.0 - b))
        .fold(0.0f64, f64::max)
        .max(0.0);
    let bound = 2.0 - 5.0 * eps_star;
    let report = RankOneReport {
        stage1,
        alt_quality,
        values,
        min_value,
        epsilon_star: eps_star,
        bound,
        pass: min_value >= bound - 1e-9,
    };
    let tensor = Tensor::rank_one(xs.clone(), ys.clone(), &w, &z)?;
    Ok((RankOneWitness { w, z, tensor }, report))
}

// ---------------------------------------------------------------------------
// ⊕₁ extension
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct Oplus1Extension {
    /// z zero-padded into lp(1, m+1)⊗Y.
    pub padded: Tensor,
    /// v = e_{m+1}⊗y.
    pub v: Tensor,
    /// The extended dual witness T̄ with last row y*.
    pub t_bar: Mat,
    pub t_bar_norm: f64,
}

#[derive(Clone, Debug)]
pub struct AdditivityReport {
    pub norm_z: f64,
    pub norm_zv: f64,
    /// ⟨T̄, z+v⟩ = ‖z‖_π + 1, the certified lower bound.
    pub pairing_lower: f64,
    pub additivity_error: f64,
    /// False when a cutting plane failed to converge; the report then only
    /// carries bounds.
    pub exact: bool,
    pub pass: bool,
}

/// Extends z ∈ lp(1,m)⊗Y by a fresh ℓ₁ coordinate carrying y: the
/// projective norm becomes exactly additive, ‖z + e_{m+1}⊗y‖_π = ‖z‖_π + 1,
/// certified from below by the extended operator T̄ = [T; y*] and from
/// above by the triangle inequality.
pub fn oplus1_extension(
    z: &Tensor,
    y: &[f64],
    tol: f64,
    max_cuts: usize,
) -> Result<(Oplus1Extension, AdditivityReport)> {
    let xs = &z.x_space;
    let ys = &z.y_space;
    let weights = xs.l1_weights().ok_or_else(|| {
        Error::InvalidParam(format!("oplus1 extension needs an l1-type left factor, got {xs}"))
    })?;
    let y_norm = ys.norm(y)?;
    if (y_norm - 1.0).abs() > 1e-9 {
        return Err(Error::NonUnit(y_norm));
    }
    let m = xs.dim();
    let n = ys.dim();

    let mut ext_weights = weights.clone();
    ext_weights.push(1.0);
    let uniform = weights.iter().all(|w| (*w - 1.0).abs() < 1e-15);
    let xs_ext = if uniform {
        NormedSpace::lp(1.0, m + 1)?
    } else {
        NormedSpace::weighted_l1(ext_weights.clone())?
    };

    let mut padded_coeffs = Mat::zeros(m + 1, n);
    for i in 0..m {
        for j in 0..n {
            padded_coeffs.set(i, j, z.coeffs.get(i, j));
        }
    }
    let padded = Tensor::new(xs_ext.clone(), ys.clone(), padded_coeffs.clone())?;
    let mut v_coeffs = Mat::zeros(m + 1, n);
    for (j, vy) in y.iter().enumerate() {
        v_coeffs.set(m, j, *vy);
    }
    let v = Tensor::new(xs_ext.clone(), ys.clone(), v_coeffs.clone())?;

    let z_cert = projective_norm(z, tol, max_cuts)?;
    let zv = Tensor::new(
        xs_ext.clone(),
        ys.clone(),
        padded_coeffs.add_scaled(&v_coeffs, 1.0)?,
    )?;
    let zv_cert = projective_norm(&zv, tol, max_cuts)?;

    // T̄: the optimal dual operator for z, rescaled to certified norm ≤ 1 and
    // extended by y* on the fresh row.  For an ℓ₁-type domain the operator
    // norm is the largest dual-weighted row norm, so both the rescaling and
    // the ⊕₁ estimate ‖T̄‖ ≤ max(‖T‖, 1) are exact.
    let t = match &z_cert.witness_dual {
        Some(DualWitness::Operator(t)) => t.clone(),
        _ => Mat::zeros(m, n),
    };
    let y_dual = ys.dual();
    let mut t_norm = 0.0f64;
    for i in 0..m {
        t_norm = t_norm.max(y_dual.norm_raw(t.row(i)) / weights[i]);
    }
    let t = if t_norm > 1.0 { t.scale(1.0 / t_norm) } else { t };
    let y_star = ys.norming_functional_raw(y);
    let mut t_bar = Mat::zeros(m + 1, n);
    for i in 0..m {
        for j in 0..n {
            t_bar.set(i, j, t.get(i, j));
        }
    }
    for (j, v) in y_star.iter().enumerate() {
        t_bar.set(m, j, *v);
    }
    let mut t_bar_norm = 0.0f64;
    for i in 0..=m {
        t_bar_norm = t_bar_norm.max(y_dual.norm_raw(t_bar.row(i)) / ext_weights[i]);
    }

    let pairing_lower = pairing(&t_bar, &zv)?;
    let additivity_error = (zv_cert.value - (z_cert.value + 1.0)).abs();
    let exact = matches!(z_cert.exactness, Exactness::Exact)
        && matches!(zv_cert.exactness, Exactness::Exact);
    let pass = exact && additivity_error <= 10.0 * tol && t_bar_norm <= 1.0 + 1e-12;
    let report = AdditivityReport {
        norm_z: z_cert.value,
        norm_zv: zv_cert.value,
        pairing_lower,
        additivity_error,
        exact,
        pass,
    };
    Ok((
        Oplus1Extension {
            padded,
            v,
            t_bar,
            t_bar_norm,
        },
        report,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(p: f64, n: usize) -> NormedSpace {
        NormedSpace::lp(p, n).unwrap()
    }

    #[test]
    fn shift_identity_example() {
        // T = id on lp(1,2), psi = id, small epsilon: S(x) = (0,0,x1,x2) and
        // ‖T + S‖ = 2 from disjoint supports.
        let dom = lp(1.0, 2);
        let t = Mat::identity(2);
        let psi = L1Embedding::identity_for_l1(&dom).unwrap();
        let (w, report) = shift_witness(&[t], &dom, &psi, 1e-6).unwrap();
        assert_eq!(w.spec.k, 2);
        assert_eq!(w.spec.output_dim, 4);
        let img = w.matrix.matvec(&[1.0, 0.0]);
        assert_eq!(img, vec![0.0, 0.0, 1.0, 0.0]);
        assert!((report.min_value - 2.0).abs() < 1e-9);
        assert!(report.pass);
    }

    #[test]
    fn shift_random_family_meets_bound() {
        let dom = lp(1.0, 3);
        let psi = L1Embedding::identity_for_l1(&dom).unwrap();
        let cod = lp(1.0, 4);
        let mut rng = stream_rng(11, streams::WITNESS_SUITE);
        let mut ops = Vec::new();
        for _ in 0..2 {
            let mut a = Mat::zeros(4, 3);
            for i in 0..4 {
                for j in 0..3 {
                    a.set(i, j, crate::rng::gaussian_vector(&mut rng, 1)[0]);
                }
            }
            let nm = operator_norm_exact(&a, &dom, &cod).unwrap().value;
            ops.push(a.scale(1.0 / nm));
        }
        let (_, report) = shift_witness(&ops, &dom, &psi, 0.05).unwrap();
        assert!(report.pass, "min {} below bound {}", report.min_value, report.bound);
        assert!(report.min_value >= 1.75);
    }

    #[test]
    fn shift_tail_mass_instance() {
        // T keeps mass eps/2 above the truncation index; the verifier still
        // certifies 2 - 5 eps.
        let eps = 0.1;
        let dom = lp(1.0, 1);
        let psi = L1Embedding::identity_for_l1(&dom).unwrap();
        let mut t = Mat::zeros(4, 1);
        t.set(0, 0, 1.0 - eps / 2.0);
        t.set(3, 0, eps / 2.0);
        let (w, report) = shift_witness(&[t], &dom, &psi, eps).unwrap();
        assert!(w.spec.k < 4, "tail rule should allow truncation before the last coordinate");
        assert!(report.pass, "min {} bound {}", report.min_value, report.bound);
    }

    #[test]
    fn interval_exact_arithmetic_example() {
        let dom = lp(1.0, 1);
        let mut t = Mat::zeros(4, 1);
        t.set(0, 0, 4.0);
        let t0 = Mat::from_rows(vec![vec![1.0], vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let (w, report) = interval_witness(&[t], &dom, 4, 0.1, &t0).unwrap();
        assert_eq!(w.spec.interval_len, 2);
        assert_eq!(w.spec.phi_slope, 2.0);
        assert_eq!(w.matrix.col(0), vec![0.0, 0.0, 2.0, 2.0]);
        assert!((report.min_value - 2.0).abs() < 1e-12);
        assert!(report.pass);
    }

    #[test]
    fn interval_with_spread_head() {
        let dom = lp(1.0, 1);
        let mut t = Mat::zeros(4, 1);
        t.set(0, 0, 3.8);
        t.set(1, 0, 0.2);
        let t0 = Mat::from_rows(vec![vec![1.0], vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let (_, report) = interval_witness(&[t], &dom, 4, 0.1, &t0).unwrap();
        assert!(report.min_value >= 1.8);
        assert!(report.pass);
    }

    #[test]
    fn interval_disjoint_heads() {
        let dom = lp(1.0, 2);
        let mut t1 = Mat::zeros(8, 2);
        t1.set(0, 0, 8.0);
        t1.set(0, 1, 8.0);
        let mut t2 = Mat::zeros(8, 2);
        t2.set(1, 0, 8.0);
        t2.set(1, 1, -8.0);
        // Block embedding of lp(1,2) into wl1(8): each coordinate spreads
        // over 4 cells with value 2.
        let mut t0 = Mat::zeros(8, 2);
        for c in 0..4 {
            t0.set(c, 0, 2.0);
            t0.set(4 + c, 1, 2.0);
        }
        let (_, report) = interval_witness(&[t1, t2], &dom, 8, 0.1, &t0).unwrap();
        assert!(report.pass, "values {:?}", report.values);
        assert!(report.min_value >= 1.8);
    }

    #[test]
    fn interval_rejects_when_no_suffix_works() {
        let dom = lp(1.0, 1);
        // All mass on the last cell: every suffix holds mass 1.
        let mut t = Mat::zeros(4, 1);
        t.set(3, 0, 4.0);
        let t0 = Mat::from_rows(vec![vec![1.0], vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        assert!(matches!(
            interval_witness(&[t], &dom, 4, 0.1, &t0),
            Err(Error::NoDyadicSuffix(_))
        ));
    }

    #[test]
    fn alt_witness_examples() {
        let (y, report) = sup_alt_witness(&[vec![1.0, 0.0, 0.0], vec![-1.0, 0.5, 0.0]]).unwrap();
        assert_eq!(y, vec![1.0, 0.0, 0.0]);
        assert!(report.alt_values.iter().all(|v| (*v - 2.0).abs() < 1e-12));

        let (y, report) = sup_alt_witness(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ])
        .unwrap();
        assert_eq!(y, vec![1.0, 1.0, 0.0]);
        assert!(report.pass);
    }

    #[test]
    fn alt_witness_random_family() {
        let space = lp(f64::INFINITY, 8);
        let mut rng = stream_rng(5, streams::WITNESS_SUITE);
        let family: Vec<Vec<f64>> = (0..5).map(|_| space.sample_unit(&mut rng)).collect();
        let (_, report) = sup_alt_witness(&family).unwrap();
        assert!(report.min_alt_value >= 2.0 - 1e-9);
    }

    #[test]
    fn rank_one_basis_example() {
        let xs = lp(1.0, 2);
        let ys = lp(1.0, 2);
        let t = Tensor::rank_one(xs, ys, &[1.0, 0.0], &[1.0, 0.0]).unwrap();
        let (w, report) = rank_one_witness_search(&[t], &RankOneConfig::default()).unwrap();
        assert_eq!(w.w, vec![0.0, 1.0]);
        assert_eq!(w.z, vec![0.0, 1.0]);
        assert!((report.min_value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn rank_one_generic_rank_one_reaches_two() {
        let xs = lp(2.0, 3);
        let ys = lp(3.0, 2);
        let x = vec![0.6, -0.8, 0.0];
        let ynorm = lp(3.0, 2).norm(&[1.0, 1.0]).unwrap();
        let y: Vec<f64> = vec![1.0 / ynorm, 1.0 / ynorm];
        let t = Tensor::rank_one(xs, ys, &x, &y).unwrap();
        let (_, report) = rank_one_witness_search(&[t], &RankOneConfig::default()).unwrap();
        assert!(report.min_value >= 2.0 - 1e-6, "got {}", report.min_value);
    }

    /// Three seeded tensors in lp(∞,4)⊗lp(1,4); the min value is frozen as a
    /// regression constant after the first run.
    #[test]
    fn rank_one_seeded_regression() {
        let xs = lp(f64::INFINITY, 4);
        let ys = lp(1.0, 4);
        let mut rng = stream_rng(23, streams::WITNESS_SUITE);
        let mut family = Vec::new();
        for _ in 0..3 {
            let mut coeffs = Mat::zeros(4, 4);
            for i in 0..4 {
                for j in 0..4 {
                    coeffs.set(i, j, crate::rng::gaussian_vector(&mut rng, 1)[0]);
                }
            }
            let t = Tensor::new(xs.clone(), ys.clone(), coeffs).unwrap();
            let nm = injective_norm(&t, 8).unwrap().value;
            let t = Tensor::new(xs.clone(), ys.clone(), t.coeffs.scale(1.0 / nm)).unwrap();
            family.push(t);
        }
        let (_, report) = rank_one_witness_search(&family, &RankOneConfig::default()).unwrap();
        assert!(report.min_value >= 2.0 - 0.1, "min {}", report.min_value);
        let frozen = 1.9995190053894742;
        assert!(
            (report.min_value - frozen).abs() < 1e-9,
            "rank-one regression drifted: {} vs {frozen}",
            report.min_value
        );
    }

    #[test]
    fn oplus1_basis_example() {
        let z = Tensor::rank_one(lp(1.0, 2), lp(2.0, 2), &[1.0, 0.0], &[1.0, 0.0]).unwrap();
        let (ext, report) = oplus1_extension(&z, &[1.0, 0.0], 1e-7, 200).unwrap();
        assert!((report.norm_zv - 2.0).abs() < 1e-5);
        assert!(report.pass, "additivity error {}", report.additivity_error);
        assert!(ext.t_bar_norm <= 1.0 + 1e-9);
    }

    #[test]
    fn oplus1_zero_tensor() {
        let z = Tensor::new(lp(1.0, 2), lp(2.0, 2), Mat::zeros(2, 2)).unwrap();
        let (_, report) = oplus1_extension(&z, &[0.0, 1.0], 1e-7, 100).unwrap();
        assert!((report.norm_zv - 1.0).abs() < 1e-6);
        assert!(report.pass);
    }

    #[test]
    fn oplus1_random_additivity() {
        let xs = lp(1.0, 3);
        let ys = lp(2.0, 2);
        let mut rng = stream_rng(31, streams::WITNESS_SUITE);
        let mut coeffs = Mat::zeros(3, 2);
        for i in 0..3 {
            for j in 0..2 {
                coeffs.set(i, j, crate::rng::gaussian_vector(&mut rng, 1)[0]);
            }
        }
        let t = Tensor::new(xs.clone(), ys.clone(), coeffs).unwrap();
        let nm = projective_norm(&t, 1e-7, 200).unwrap().value;
        let z = Tensor::new(xs, ys, t.coeffs.scale(1.0 / nm)).unwrap();
        let y = vec![3f64.sqrt() / 2.0, 0.5];
        let (_, report) = oplus1_extension(&z, &y, 1e-7, 300).unwrap();
        assert!(
            report.additivity_error < 1e-5,
            "additivity error {}",
            report.additivity_error
        );
    }
}
