//! Octahedrality-defect estimation for finite families of unit vectors or
//! unit tensors: the quantity sup_y min_i ‖x_i + y‖ (and its alternative
//! variant with max{‖x_i±y‖}) over unit witnesses y.
//!
//! The sup is never claimed exact.  Reports are lower-bound estimates from
//! a layered candidate pool — witnesses from the constructive generators,
//! coordinate and extreme-point candidates, a boundary grid in dimension
//! two, and seeded multi-start coordinate ascent — with deterministic
//! tie-breaking, so every report re-evaluates bit for bit.

use rayon::prelude::*;

use crate::error::Error;
use crate::mat::Mat;
use crate::rng::{stream_rng, streams};
use crate::spaces::NormedSpace;
use crate::tensor_norms::{injective_norm, projective_norm, witness_cmp, Tensor};
use crate::witnesses::{l1_coordinate_witness, rank_one_witness_search, shift_witness,
    sup_alt_witness, L1Embedding, RankOneConfig};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TensorNormKind {
    Injective,
    Projective,
}

/// The ambient space a defect is measured in.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Vectors {
        space: NormedSpace,
        members: Vec<Vec<f64>>,
    },
    Tensors {
        x_space: NormedSpace,
        y_space: NormedSpace,
        norm: TensorNormKind,
        members: Vec<Mat>,
    },
}

#[derive(Clone, Debug)]
pub enum Witness {
    Vector(Vec<f64>),
    Tensor(Mat),
}

impl Witness {
    pub fn flat(&self) -> &[f64] {
        match self {
            Witness::Vector(v) => v,
            Witness::Tensor(m) => m.data(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DefectMode {
    Octa,
    Alt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessSource {
    Shift,
    RankOne,
    Generic,
}

impl std::fmt::Display for WitnessSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WitnessSource::Shift => write!(f, "shift"),
            WitnessSource::RankOne => write!(f, "rank-one"),
            WitnessSource::Generic => write!(f, "generic"),
        }
    }
}

/// A pool entry: the candidate witness, where it came from, and its
/// tie-break class (module witnesses < extreme points < grid < random).
#[derive(Clone, Debug)]
pub struct Candidate {
    pub witness: Witness,
    pub source: WitnessSource,
    pub class: u8,
}

impl Candidate {
    fn new(witness: Witness, source: WitnessSource, class: u8) -> Self {
        Candidate {
            witness,
            source,
            class,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DefectConfig {
    /// Seeded random starts added to the candidate pool.
    pub starts: usize,
    /// Boundary grid resolution for 2-dimensional vector ambients.
    pub grid: usize,
    pub seed: u64,
    /// Run coordinate-ascent refinement on the best pool candidate.
    pub refine: bool,
    /// Budget for inexact norm evaluations.
    pub norm_budget: usize,
    /// Cutting-plane tolerance for projective ambients.
    pub tol: f64,
    pub max_cuts: usize,
}

impl Default for DefectConfig {
    fn default() -> Self {
        DefectConfig {
            starts: 64,
            grid: 256,
            seed: 7,
            refine: true,
            norm_budget: 8,
            tol: 1e-6,
            max_cuts: 200,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Provenance {
    pub seed: u64,
    pub starts: usize,
    pub grid: usize,
}

/// A lower-bound estimate of the family defect with the witness attaining
/// it and optimizer provenance.
#[derive(Clone, Debug)]
pub struct DefectReport {
    pub defect: f64,
    pub witness: Witness,
    pub mode: DefectMode,
    pub witness_source: WitnessSource,
    pub provenance: Provenance,
}

const MEMBER_UNIT_TOL: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Objective evaluation
// ---------------------------------------------------------------------------

impl Family {
    pub fn len(&self) -> usize {
        match self {
            Family::Vectors { members, .. } => members.len(),
            Family::Tensors { members, .. } => members.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate(&self, cfg: &DefectConfig) -> Result<()> {
        if self.is_empty() {
            return Err(Error::InvalidParam("empty family".into()));
        }
        match self {
            Family::Vectors { space, members } => {
                for m in members {
                    let n = space.norm(m)?;
                    if (n - 1.0).abs() > MEMBER_UNIT_TOL {
                        return Err(Error::NonUnit(n));
                    }
                }
            }
            Family::Tensors {
                x_space,
                y_space,
                norm,
                members,
            } => {
                for m in members {
                    let t = Tensor::new(x_space.clone(), y_space.clone(), m.clone())?;
                    let (n, slack) = match norm {
                        TensorNormKind::Injective => {
                            (injective_norm(&t, cfg.norm_budget)?.value, MEMBER_UNIT_TOL)
                        }
                        TensorNormKind::Projective => {
                            let c = projective_norm(&t, cfg.tol, cfg.max_cuts)?;
                            (c.value, MEMBER_UNIT_TOL + c.gap)
                        }
                    };
                    if (n - 1.0).abs() > slack {
                        return Err(Error::NonUnit(n));
                    }
                }
            }
        }
        Ok(())
    }

    fn ambient_dim(&self) -> usize {
        match self {
            Family::Vectors { space, .. } => space.dim(),
            Family::Tensors {
                x_space, y_space, ..
            } => x_space.dim() * y_space.dim(),
        }
    }

    fn witness_norm(&self, w: &Witness, cfg: &DefectConfig) -> Result<f64> {
        match (self, w) {
            (Family::Vectors { space, .. }, Witness::Vector(v)) => space.norm(v),
            (
                Family::Tensors {
                    x_space,
                    y_space,
                    norm,
                    ..
                },
                Witness::Tensor(m),
            ) => {
                let t = Tensor::new(x_space.clone(), y_space.clone(), m.clone())?;
                Ok(match norm {
                    TensorNormKind::Injective => injective_norm(&t, cfg.norm_budget)?.value,
                    TensorNormKind::Projective => projective_norm(&t, cfg.tol, cfg.max_cuts)?.value,
                })
            }
            _ => Err(Error::ShapeMismatch("witness kind does not match family".into())),
        }
    }

    fn normalize_witness(&self, w: &Witness, cfg: &DefectConfig) -> Result<Option<Witness>> {
        let n = self.witness_norm(w, cfg)?;
        if n < 1e-9 {
            return Ok(None);
        }
        Ok(Some(match w {
            Witness::Vector(v) => Witness::Vector(v.iter().map(|c| c / n).collect()),
            Witness::Tensor(m) => Witness::Tensor(m.scale(1.0 / n)),
        }))
    }

    /// min over the family of the mode objective at a unit witness y;
    /// stops early once the running min falls strictly below `floor`.
    fn objective(&self, y: &Witness, mode: DefectMode, cfg: &DefectConfig, floor: f64) -> Result<f64> {
        let mut min = f64::INFINITY;
        match (self, y) {
            (Family::Vectors { space, members }, Witness::Vector(yv)) => {
                for m in members {
                    let plus: Vec<f64> = m.iter().zip(yv).map(|(a, b)| a + b).collect();
                    let val = match mode {
                        DefectMode::Octa => space.norm_raw(&plus),
                        DefectMode::Alt => {
                            let minus: Vec<f64> = m.iter().zip(yv).map(|(a, b)| a - b).collect();
                            space.norm_raw(&plus).max(space.norm_raw(&minus))
                        }
                    };
                    min = min.min(val);
                    if min < floor {
                        break;
                    }
                }
            }
            (
                Family::Tensors {
                    x_space,
                    y_space,
                    norm,
                    members,
                },
                Witness::Tensor(ym),
            ) => {
                let eval = |coeffs: Mat| -> Result<f64> {
                    let t = Tensor::new(x_space.clone(), y_space.clone(), coeffs)?;
                    Ok(match norm {
                        TensorNormKind::Injective => injective_norm(&t, cfg.norm_budget)?.value,
                        TensorNormKind::Projective => {
                            projective_norm(&t, cfg.tol, cfg.max_cuts)?.value
                        }
                    })
                };
                for m in members {
                    let val = match mode {
                        DefectMode::Octa => eval(m.add_scaled(ym, 1.0)?)?,
                        DefectMode::Alt => {
                            eval(m.add_scaled(ym, 1.0)?)?.max(eval(m.add_scaled(ym, -1.0)?)?)
                        }
                    };
                    min = min.min(val);
                    if min < floor {
                        break;
                    }
                }
            }
            _ => return Err(Error::ShapeMismatch("witness kind does not match family".into())),
        }
        Ok(min)
    }
}

// ---------------------------------------------------------------------------
// Candidate pools
// ---------------------------------------------------------------------------

fn vector_candidates(
    space: &NormedSpace,
    members: &[Vec<f64>],
    cfg: &DefectConfig,
) -> Vec<Candidate> {
    let d = space.dim();
    let mut pool: Vec<Candidate> = Vec::new();
    if space.is_linf_type() {
        if let Ok((y, _)) = sup_alt_witness(members) {
            pool.push(Candidate::new(Witness::Vector(y), WitnessSource::Generic, 0));
        }
    }
    if let Ok(y) = l1_coordinate_witness(space, members) {
        pool.push(Candidate::new(Witness::Vector(y), WitnessSource::Generic, 0));
    }
    for j in 0..d {
        for sgn in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[j] = sgn;
            let nm = space.norm_raw(&e);
            pool.push(Candidate::new(
                Witness::Vector(e.iter().map(|v| v / nm).collect()),
                WitnessSource::Generic,
                1,
            ));
        }
    }
    if d == 2 && cfg.grid > 0 {
        for g in 0..cfg.grid {
            let theta = 2.0 * std::f64::consts::PI * g as f64 / cfg.grid as f64;
            let v = vec![theta.cos(), theta.sin()];
            let nm = space.norm_raw(&v);
            pool.push(Candidate::new(
                Witness::Vector(v.iter().map(|c| c / nm).collect()),
                WitnessSource::Generic,
                2,
            ));
        }
    }
    let mut rng = stream_rng(cfg.seed, streams::DEFECT_STARTS);
    for _ in 0..cfg.starts {
        pool.push(Candidate::new(
            Witness::Vector(space.sample_unit(&mut rng)),
            WitnessSource::Generic,
            3,
        ));
    }
    pool
}

/// Factor a rank-one coefficient matrix into x vᵀ with v unit in y_space;
/// `None` when the matrix is not rank-one within 1e-10.
fn rank_one_factors(m: &Mat, y_space: &NormedSpace) -> Option<(Vec<f64>, Vec<f64>)> {
    let mut pivot = (0usize, 0usize, 0.0f64);
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if m.get(i, j).abs() > pivot.2 {
                pivot = (i, j, m.get(i, j).abs());
            }
        }
    }
    if pivot.2 == 0.0 {
        return None;
    }
    let (pi, pj, _) = pivot;
    let v: Vec<f64> = (0..m.cols()).map(|j| m.get(pi, j)).collect();
    let x: Vec<f64> = (0..m.rows()).map(|i| m.get(i, pj) / m.get(pi, pj)).collect();
    let recon = Mat::outer(&x, &v);
    let err = recon.add_scaled(m, -1.0).ok()?.max_abs();
    if err > 1e-10 * pivot.2.max(1.0) {
        return None;
    }
    let vn = y_space.norm_raw(&v);
    let x_scaled: Vec<f64> = x.iter().map(|c| c * vn).collect();
    let v_unit: Vec<f64> = v.iter().map(|c| c / vn).collect();
    Some((x_scaled, v_unit))
}

/// Shift-based tensor candidate: applies when the left factor is ℓ₁-type,
/// the members leave enough trailing zero rows for fresh coordinates, and
/// the dual of the right factor embeds into ℓ₁ (identity for ℓ₁-type duals,
/// the half-sum map for lp(∞,2)).
fn shift_tensor_candidate(
    x_space: &NormedSpace,
    y_space: &NormedSpace,
    members: &[Mat],
) -> Option<Mat> {
    if !x_space.is_l1_type() {
        return None;
    }
    let y_dual = y_space.dual();
    let psi = if y_dual.is_l1_type() {
        L1Embedding::identity_for_l1(&y_dual).ok()?
    } else if y_dual.is_linf_type() && y_dual.dim() == 2 {
        L1Embedding::linf2_half_sum()
    } else {
        return None;
    };
    let m = x_space.dim();
    let mut zero_tail = m;
    for mat in members {
        let mut tail = 0usize;
        for i in (0..m).rev() {
            if mat.row(i).iter().all(|v| *v == 0.0) {
                tail += 1;
            } else {
                break;
            }
        }
        zero_tail = zero_tail.min(tail);
    }
    if zero_tail < psi.out_dim() {
        return None;
    }
    // Uniform ℓ₁ weights are required: the shift construction works in
    // plain coordinates.
    let weights = x_space.l1_weights()?;
    if weights.iter().any(|w| (*w - 1.0).abs() > 1e-15) {
        return None;
    }
    let head = m - zero_tail;
    let truncated: Vec<Mat> = members
        .iter()
        .map(|mat| {
            let rows: Vec<Vec<f64>> = (0..head).map(|i| mat.row(i).to_vec()).collect();
            Mat::from_rows(rows)
        })
        .collect::<Result<Vec<Mat>>>()
        .ok()?;
    let (witness, _report) = shift_witness(&truncated, &y_dual, &psi, 0.05).ok()?;
    if witness.matrix.rows() > m {
        return None;
    }
    let mut padded = Mat::zeros(m, y_space.dim());
    for i in 0..witness.matrix.rows() {
        for j in 0..y_space.dim() {
            padded.set(i, j, witness.matrix.get(i, j));
        }
    }
    Some(padded)
}

fn tensor_candidates(
    x_space: &NormedSpace,
    y_space: &NormedSpace,
    norm: TensorNormKind,
    members: &[Mat],
    cfg: &DefectConfig,
) -> Result<Vec<Candidate>> {
    let m = x_space.dim();
    let n = y_space.dim();
    let mut pool: Vec<Candidate> = Vec::new();

    if norm == TensorNormKind::Injective {
        let tensors: Result<Vec<Tensor>> = members
            .iter()
            .map(|c| Tensor::new(x_space.clone(), y_space.clone(), c.clone()))
            .collect();
        if let Ok(tensors) = tensors {
            let r1_cfg = RankOneConfig {
                starts: cfg.starts.min(16),
                seed: cfg.seed,
                budget: cfg.norm_budget,
            };
            if let Ok((w, _)) = rank_one_witness_search(&tensors, &r1_cfg) {
                pool.push(Candidate::new(
                    Witness::Tensor(w.tensor.coeffs.clone()),
                    WitnessSource::RankOne,
                    0,
                ));
            }
        }
        if let Some(s) = shift_tensor_candidate(x_space, y_space, members) {
            pool.push(Candidate::new(Witness::Tensor(s), WitnessSource::Shift, 0));
        }
    }

    // Common-right-factor lifting: for families {x_i⊗v} every witness u of
    // the base family lifts to u⊗v with the same defect.
    let factored: Vec<Option<(Vec<f64>, Vec<f64>)>> = members
        .iter()
        .map(|c| rank_one_factors(c, y_space))
        .collect();
    if factored.iter().all(|f| f.is_some()) {
        let factors: Vec<(Vec<f64>, Vec<f64>)> = factored.into_iter().flatten().collect();
        let v0 = &factors[0].1;
        let aligned = factors.iter().all(|(_, v)| {
            let diff: Vec<f64> = v.iter().zip(v0).map(|(a, b)| a - b).collect();
            let sum: Vec<f64> = v.iter().zip(v0).map(|(a, b)| a + b).collect();
            y_space.norm_raw(&diff) < 1e-9 || y_space.norm_raw(&sum) < 1e-9
        });
        if aligned {
            let base_members: Vec<Vec<f64>> = factors
                .iter()
                .map(|(x, v)| {
                    let sign = if y_space.norm_raw(
                        &v.iter().zip(v0).map(|(a, b)| a - b).collect::<Vec<f64>>(),
                    ) < 1e-9
                    {
                        1.0
                    } else {
                        -1.0
                    };
                    x.iter().map(|c| c * sign).collect()
                })
                .collect();
            let base = Family::Vectors {
                space: x_space.clone(),
                members: base_members,
            };
            if base.validate(cfg).is_ok() {
                if let Ok(report) = family_defect_mode(&base, DefectMode::Octa, cfg) {
                    if let Witness::Vector(u) = report.witness {
                        pool.push(Candidate::new(
                            Witness::Tensor(Mat::outer(&u, v0)),
                            WitnessSource::Generic,
                            0,
                        ));
                    }
                }
            }
        }
    }

    for i in 0..m {
        for j in 0..n {
            for sgn in [1.0, -1.0] {
                let mut e = Mat::zeros(m, n);
                e.set(i, j, sgn);
                let scale = {
                    let mut ex = vec![0.0; m];
                    ex[i] = 1.0;
                    let mut ey = vec![0.0; n];
                    ey[j] = 1.0;
                    x_space.norm_raw(&ex) * y_space.norm_raw(&ey)
                };
                pool.push(Candidate::new(
                    Witness::Tensor(e.scale(1.0 / scale)),
                    WitnessSource::Generic,
                    1,
                ));
            }
        }
    }

    let mut rng = stream_rng(cfg.seed, streams::DEFECT_STARTS);
    let fam = Family::Tensors {
        x_space: x_space.clone(),
        y_space: y_space.clone(),
        norm,
        members: members.to_vec(),
    };
    for _ in 0..cfg.starts {
        let x = x_space.sample_unit(&mut rng);
        let y = y_space.sample_unit(&mut rng);
        if let Ok(Some(w)) = fam.normalize_witness(&Witness::Tensor(Mat::outer(&x, &y)), cfg) {
            pool.push(Candidate::new(w, WitnessSource::Generic, 3));
        }
    }
    Ok(pool)
}

// ---------------------------------------------------------------------------
// Defect search
// ---------------------------------------------------------------------------

/// Best candidate over an explicit pool: max by objective value, ties by
/// candidate class and then the canonical witness order.  Chunked for
/// deterministic parallel reduction.
pub fn defect_over_candidates(
    family: &Family,
    mode: DefectMode,
    candidates: &[Candidate],
    cfg: &DefectConfig,
) -> Result<Option<(f64, Witness, WitnessSource)>> {
    if candidates.is_empty() {
        return Ok(None);
    }
    let prefer = |idx: usize, best: usize| -> bool {
        let (a, b) = (&candidates[idx], &candidates[best]);
        match a.class.cmp(&b.class) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => {
                witness_cmp(a.witness.flat(), b.witness.flat()) == std::cmp::Ordering::Less
            }
        }
    };
    let chunks: Vec<&[Candidate]> = candidates.chunks(16).collect();
    let per_chunk: Vec<Result<Option<(f64, usize)>>> = chunks
        .par_iter()
        .enumerate()
        .map(|(ci, chunk)| {
            let mut best: Option<(f64, usize)> = None;
            for (local, cand) in chunk.iter().enumerate() {
                let idx = ci * 16 + local;
                let floor = best.map(|(v, _)| v).unwrap_or(f64::NEG_INFINITY);
                let val = family.objective(&cand.witness, mode, cfg, floor)?;
                match best {
                    None => best = Some((val, idx)),
                    Some((bv, bi)) => {
                        if val > bv || (val == bv && prefer(idx, bi)) {
                            best = Some((val, idx));
                        }
                    }
                }
            }
            Ok(best)
        })
        .collect();
    let mut best: Option<(f64, usize)> = None;
    for r in per_chunk {
        if let Some((val, idx)) = r? {
            match best {
                None => best = Some((val, idx)),
                Some((bv, bi)) => {
                    if val > bv || (val == bv && prefer(idx, bi)) {
                        best = Some((val, idx));
                    }
                }
            }
        }
    }
    Ok(best.map(|(val, idx)| {
        let c = &candidates[idx];
        (val, c.witness.clone(), c.source)
    }))
}

/// Projected coordinate ascent on the witness, renormalizing after each
/// probe.  Returns the refined witness and its exact objective value.
fn refine_witness(
    family: &Family,
    mode: DefectMode,
    start: &Witness,
    start_val: f64,
    cfg: &DefectConfig,
) -> Result<(f64, Witness)> {
    let mut best = start.clone();
    let mut best_val = start_val;
    let dim = family.ambient_dim();
    let mut step = 0.25f64;
    while step > 1e-5 {
        let mut improved = false;
        for c in 0..dim {
            for sgn in [1.0, -1.0] {
                let cand = match &best {
                    Witness::Vector(v) => {
                        let mut v = v.clone();
                        v[c] += sgn * step;
                        Witness::Vector(v)
                    }
                    Witness::Tensor(m) => {
                        let mut m = m.clone();
                        let cols = m.cols();
                        let val = m.get(c / cols, c % cols) + sgn * step;
                        m.set(c / cols, c % cols, val);
                        Witness::Tensor(m)
                    }
                };
                let Some(unit) = family.normalize_witness(&cand, cfg)? else {
                    continue;
                };
                let val = family.objective(&unit, mode, cfg, best_val)?;
                if val > best_val + 1e-12 {
                    best_val = val;
                    best = unit;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((best_val, best))
}

fn family_defect_mode(family: &Family, mode: DefectMode, cfg: &DefectConfig) -> Result<DefectReport> {
    family.validate(cfg)?;
    let mut pool = match family {
        Family::Vectors { space, members } => vector_candidates(space, members, cfg),
        Family::Tensors {
            x_space,
            y_space,
            norm,
            members,
        } => tensor_candidates(x_space, y_space, *norm, members, cfg)?,
    };
    // The alt objective dominates the octa objective pointwise, so the octa
    // winner is always worth a try in alt mode.
    if mode == DefectMode::Alt {
        if let Ok(octa) = family_defect_mode(family, DefectMode::Octa, cfg) {
            pool.push(Candidate::new(octa.witness, octa.witness_source, 0));
        }
    }
    let (mut best_val, mut best_w, mut best_src) =
        defect_over_candidates(family, mode, &pool, cfg)?
            .ok_or_else(|| Error::InvalidParam("empty candidate pool".into()))?;
    if cfg.refine {
        let (val, w) = refine_witness(family, mode, &best_w, best_val, cfg)?;
        if val > best_val {
            best_val = val;
            best_w = w;
        }
    }
    // Exact re-evaluation of the winner, so the report re-checks.
    let defect = family.objective(&best_w, mode, cfg, f64::NEG_INFINITY)?;
    best_src = if defect > best_val { WitnessSource::Generic } else { best_src };
    Ok(DefectReport {
        defect,
        witness: best_w,
        mode,
        witness_source: best_src,
        provenance: Provenance {
            seed: cfg.seed,
            starts: cfg.starts,
            grid: cfg.grid,
        },
    })
}

/// Lower-bound estimate of sup_y min_i ‖x_i + y‖ over unit y.
pub fn family_defect(family: &Family, cfg: &DefectConfig) -> Result<DefectReport> {
    family_defect_mode(family, DefectMode::Octa, cfg)
}

/// Lower-bound estimate of sup_y min_i max{‖x_i+y‖, ‖x_i−y‖} over unit y.
pub fn alt_family_defect(family: &Family, cfg: &DefectConfig) -> Result<DefectReport> {
    family_defect_mode(family, DefectMode::Alt, cfg)
}

// ---------------------------------------------------------------------------
// Dichotomy scan
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct DichotomyRow {
    pub p: f64,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub mean_defect: f64,
    pub max_defect: f64,
    pub witness_source: WitnessSource,
}

/// Seeded random rank-one k-families in lp(1,m)⊗_ε lp(p,n), one row per m.
///
/// Rank-one members keep the total coordinate mass equal to the injective
/// norm, which is what makes the coordinate-pick bound 2 − 2k/m reachable;
/// when an ℓ₁ embedding of lp(p*,n) is available the members are supported
/// on a head block so the shift construction has fresh coordinates to land
/// on.
pub fn dichotomy_scan(
    p: f64,
    n: usize,
    m_list: &[usize],
    k: usize,
    trials: usize,
    cfg: &DefectConfig,
) -> Result<Vec<DichotomyRow>> {
    if n < 2 {
        return Err(Error::InvalidParam("n must be at least 2".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParam("k must be at least 1".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidParam("trials must be at least 1".into()));
    }
    let y_space = NormedSpace::lp(p, n)?;
    let y_dual = y_space.dual();
    let reserve = if y_dual.is_l1_type() {
        n
    } else if y_dual.is_linf_type() && n == 2 {
        2
    } else {
        0
    };

    let mut rows = Vec::with_capacity(m_list.len());
    for (mi, &m) in m_list.iter().enumerate() {
        if m > crate::tensor_norms::ENUM_DIM_LIMIT {
            return Err(Error::EnumerationLimit {
                dim: m,
                limit: crate::tensor_norms::ENUM_DIM_LIMIT,
            });
        }
        let x_space = NormedSpace::lp(1.0, m)?;
        let head = if reserve > 0 && m > reserve + 1 { m - reserve } else { m };
        let mut defects = Vec::with_capacity(trials);
        let mut best: Option<(f64, WitnessSource)> = None;
        for trial in 0..trials {
            let mut rng = stream_rng(
                cfg.seed ^ (0x64696368u64),
                streams::DEFECT_FAMILY + (mi as u64) * 1000 + trial as u64,
            );
            let mut members = Vec::with_capacity(k);
            for _ in 0..k {
                let mut x = vec![0.0; m];
                let head_space = NormedSpace::lp(1.0, head)?;
                let xh = head_space.sample_unit(&mut rng);
                x[..head].copy_from_slice(&xh);
                let y = y_space.sample_unit(&mut rng);
                members.push(Mat::outer(&x, &y));
            }
            let family = Family::Tensors {
                x_space: x_space.clone(),
                y_space: y_space.clone(),
                norm: TensorNormKind::Injective,
                members,
            };
            let mut trial_cfg = *cfg;
            trial_cfg.seed = cfg.seed ^ ((trial as u64) << 32);
            let report = family_defect(&family, &trial_cfg)?;
            if best.map(|(v, _)| report.defect > v).unwrap_or(true) {
                best = Some((report.defect, report.witness_source));
            }
            defects.push(report.defect);
        }
        let mean = defects.iter().sum::<f64>() / defects.len() as f64;
        let (max, source) = best.expect("at least one trial");
        rows.push(DichotomyRow {
            p,
            n,
            m,
            k,
            mean_defect: mean,
            max_defect: max,
            witness_source: source,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(p: f64, n: usize) -> NormedSpace {
        NormedSpace::lp(p, n).unwrap()
    }

    fn vec_family(p: f64, members: Vec<Vec<f64>>) -> Family {
        let d = members[0].len();
        Family::Vectors {
            space: lp(p, d),
            members,
        }
    }

    fn cfg() -> DefectConfig {
        DefectConfig::default()
    }

    #[test]
    fn l1_opposite_pair_reaches_two() {
        let fam = vec_family(1.0, vec![vec![1.0, 0.0], vec![-1.0, 0.0]]);
        let report = family_defect(&fam, &cfg()).unwrap();
        assert!((report.defect - 2.0).abs() < 1e-12);
        match report.witness {
            Witness::Vector(y) => assert_eq!(y, vec![0.0, 1.0]),
            _ => panic!("vector witness expected"),
        }
    }

    #[test]
    fn linf_opposite_pair_capped_at_one() {
        // Grid oracle: sup over the square boundary of
        // min(‖e1+y‖∞, ‖−e1+y‖∞) is 1.
        let space = lp(f64::INFINITY, 2);
        let mut oracle: f64 = 0.0;
        let n = 4000;
        for g in 0..n {
            let theta = 2.0 * std::f64::consts::PI * g as f64 / n as f64;
            let v = [theta.cos(), theta.sin()];
            let nm = space.norm(&v).unwrap();
            let y = [v[0] / nm, v[1] / nm];
            let a = space.norm(&[1.0 + y[0], y[1]]).unwrap();
            let b = space.norm(&[-1.0 + y[0], y[1]]).unwrap();
            oracle = oracle.max(a.min(b));
        }
        assert!(oracle <= 1.0 + 1e-9, "grid oracle exceeded 1: {oracle}");

        let fam = vec_family(f64::INFINITY, vec![vec![1.0, 0.0], vec![-1.0, 0.0]]);
        let report = family_defect(&fam, &cfg()).unwrap();
        assert!((report.defect - 1.0).abs() < 1e-2, "defect {}", report.defect);
    }

    #[test]
    fn euclidean_pair_diagonal_witness() {
        // Grid oracle: the optimum for {e1, e2} on the circle is at the
        // diagonal with value 2cos(pi/8).
        let expected = 2.0 * (std::f64::consts::PI / 8.0).cos();
        let fam = vec_family(2.0, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let report = family_defect(&fam, &cfg()).unwrap();
        assert!(
            (report.defect - expected).abs() < 1e-4,
            "defect {} vs 2cos(pi/8) {expected}",
            report.defect
        );
        match &report.witness {
            Witness::Vector(y) => {
                let diag = std::f64::consts::FRAC_1_SQRT_2;
                assert!((y[0] - diag).abs() < 1e-2 && (y[1] - diag).abs() < 1e-2);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn alt_examples() {
        let fam = vec_family(f64::INFINITY, vec![vec![1.0, 0.0], vec![-1.0, 0.0]]);
        let report = alt_family_defect(&fam, &cfg()).unwrap();
        assert!((report.defect - 2.0).abs() < 1e-12);
        match &report.witness {
            Witness::Vector(y) => assert_eq!(*y, vec![1.0, 0.0]),
            _ => panic!(),
        }

        let fam = vec_family(2.0, vec![vec![1.0, 0.0]]);
        let report = alt_family_defect(&fam, &cfg()).unwrap();
        assert!((report.defect - 2.0).abs() < 1e-12);

        let fam = vec_family(
            f64::INFINITY,
            vec![
                vec![1.0, 0.0, 0.0],
                vec![-1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
            ],
        );
        let report = alt_family_defect(&fam, &cfg()).unwrap();
        assert!((report.defect - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_empty_and_non_unit() {
        let fam = Family::Vectors {
            space: lp(2.0, 2),
            members: vec![],
        };
        assert!(family_defect(&fam, &cfg()).is_err());
        let fam = vec_family(2.0, vec![vec![1.0, 1.0]]);
        assert!(matches!(family_defect(&fam, &cfg()), Err(Error::NonUnit(_))));
    }

    #[test]
    fn monotone_under_supersets_with_fixed_pool() {
        let space = lp(2.0, 3);
        let mut rng = stream_rng(3, streams::DEFECT_FAMILY);
        let members: Vec<Vec<f64>> = (0..4).map(|_| space.sample_unit(&mut rng)).collect();
        let small = Family::Vectors {
            space: space.clone(),
            members: members[..2].to_vec(),
        };
        let big = Family::Vectors {
            space: space.clone(),
            members: members.clone(),
        };
        let pool = vector_candidates(&space, &members, &cfg());
        let c = cfg();
        let small_best = defect_over_candidates(&small, DefectMode::Octa, &pool, &c)
            .unwrap()
            .unwrap()
            .0;
        let big_best = defect_over_candidates(&big, DefectMode::Octa, &pool, &c)
            .unwrap()
            .unwrap()
            .0;
        assert!(big_best <= small_best + 1e-8);
    }

    #[test]
    fn alt_dominates_octa() {
        let space = lp(1.5, 3);
        let mut rng = stream_rng(5, streams::DEFECT_FAMILY);
        let members: Vec<Vec<f64>> = (0..3).map(|_| space.sample_unit(&mut rng)).collect();
        let fam = Family::Vectors { space, members };
        let octa = family_defect(&fam, &cfg()).unwrap();
        let alt = alt_family_defect(&fam, &cfg()).unwrap();
        assert!(alt.defect >= octa.defect - 1e-9);
        assert!(alt.defect <= 2.0 + 1e-9);
        assert!(octa.defect <= 2.0 + 1e-9);
    }

    #[test]
    fn l1_coordinate_bound_holds() {
        let space = lp(1.0, 8);
        let mut rng = stream_rng(9, streams::DEFECT_FAMILY);
        let members: Vec<Vec<f64>> = (0..3).map(|_| space.sample_unit(&mut rng)).collect();
        let k = members.len() as f64;
        let fam = Family::Vectors { space, members };
        let report = family_defect(&fam, &cfg()).unwrap();
        assert!(report.defect >= 2.0 - 2.0 * k / 8.0 - 1e-9);
    }

    #[test]
    fn tensor_defect_identity_pair() {
        // {e1⊗e1, -e1⊗e1} in lp(1,2)⊗lp(1,2): e2⊗e2 gives value 2.
        let fam = Family::Tensors {
            x_space: lp(1.0, 2),
            y_space: lp(1.0, 2),
            norm: TensorNormKind::Injective,
            members: vec![
                Mat::outer(&[1.0, 0.0], &[1.0, 0.0]),
                Mat::outer(&[-1.0, 0.0], &[1.0, 0.0]),
            ],
        };
        let report = family_defect(&fam, &cfg()).unwrap();
        assert!((report.defect - 2.0).abs() < 1e-9, "defect {}", report.defect);
    }

    #[test]
    fn inheritance_from_base_family() {
        // {x_i⊗v} in the projective tensor product inherits the base defect.
        let x_space = lp(2.0, 2);
        let y_space = lp(2.0, 2);
        let base = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let v = vec![1.0, 0.0];
        let members: Vec<Mat> = base.iter().map(|x| Mat::outer(x, &v)).collect();
        let fam = Family::Tensors {
            x_space: x_space.clone(),
            y_space,
            norm: TensorNormKind::Projective,
            members,
        };
        let mut c = cfg();
        c.starts = 8;
        c.refine = false;
        let base_fam = Family::Vectors {
            space: x_space,
            members: base,
        };
        let base_report = family_defect(&base_fam, &c).unwrap();
        let tensor_report = family_defect(&fam, &c).unwrap();
        assert!(
            tensor_report.defect >= base_report.defect - 1e-6,
            "tensor {} vs base {}",
            tensor_report.defect,
            base_report.defect
        );
    }

    #[test]
    fn dichotomy_l1_coordinate_floor() {
        let mut c = cfg();
        c.starts = 16;
        let rows = dichotomy_scan(1.0, 2, &[8], 2, 2, &c).unwrap();
        assert_eq!(rows.len(), 1);
        let floor = 2.0 - 2.0 * 2.0 / 8.0;
        assert!(
            rows[0].mean_defect >= floor - 1e-9,
            "mean {} below floor {floor}",
            rows[0].mean_defect
        );
    }

    #[test]
    fn dichotomy_shift_source_for_sup_factor() {
        let mut c = cfg();
        c.starts = 8;
        let rows = dichotomy_scan(f64::INFINITY, 3, &[8], 2, 1, &c).unwrap();
        assert!(rows[0].max_defect > 1.9, "defect {}", rows[0].max_defect);
    }
}
