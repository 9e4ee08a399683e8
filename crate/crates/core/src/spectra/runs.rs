//! Batch computations over a Følner schedule of box windows.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::eigen::{eigenvalues_sym, operator_norm};
use super::staircase::{sup_distance, AnalyticCdf, Cdf, SpectralStaircase};
use crate::error::{Error, Result};
use crate::exactla::{self, DeterminantReport, DEFAULT_EXACT_LIMIT};
use crate::graph::Window;
use crate::operator::{finite_section_with_limit, Evaluator, FiniteSection, PatternOperator, DEFAULT_DENSE_LIMIT};
use crate::rational::{self, Rational};

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    /// Largest section handled by exact elimination.
    pub exact_limit: usize,
    /// Largest section handled by the float eigensolver.
    pub dense_limit: usize,
    /// Clusters closer than `merge_tol_factor · K` form one jump.
    pub merge_tol_factor: f64,
    /// Least jump mass treated as an atom candidate.
    pub min_atom_mass: f64,
    /// Allowed jump drift between consecutive levels, in units of `1/|Q|`.
    pub jump_slack: f64,
    /// Largest section whose float moments are cross-checked.
    pub float_check_limit: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            exact_limit: DEFAULT_EXACT_LIMIT,
            dense_limit: DEFAULT_DENSE_LIMIT,
            merge_tol_factor: 1e-8,
            min_atom_mass: 0.01,
            jump_slack: 4.0,
            float_check_limit: 1024,
        }
    }
}

#[cfg(feature = "parallel")]
fn map_levels<T: Send>(levels: &[u32], f: impl Fn(u32) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    use rayon::prelude::*;
    levels.par_iter().map(|&n| f(n)).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_levels<T>(levels: &[u32], f: impl Fn(u32) -> Result<T>) -> Result<Vec<T>> {
    levels.iter().map(|&n| f(n)).collect()
}

fn check_levels(levels: &[u32]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("empty level schedule".into()));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("levels must be strictly increasing".into()));
    }
    Ok(())
}

fn exact_section(op: &PatternOperator, q: &Window, opts: &RunOptions) -> Result<FiniteSection> {
    finite_section_with_limit(op, q, opts.exact_limit)
}

fn float_spectrum(section: &FiniteSection) -> Result<Vec<f64>> {
    eigenvalues_sym(&section.to_float_matrix())
}

fn frac(num: usize, den: usize) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

fn norm_bound_f64(op: &PatternOperator) -> f64 {
    rational::to_f64(&op.norm_bound())
}

/// Closest `p/q` with `q ≤ max_den`, by continued fractions.
pub fn nearest_rational(x: f64, max_den: u64) -> Rational {
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den as i128 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let f = r - a;
        if f.abs() < 1e-15 {
            break;
        }
        r = 1.0 / f;
    }
    Rational::new(BigInt::from(h1), BigInt::from(k1))
}

// ---------------------------------------------------------------- moments

#[derive(Clone, Debug, Serialize)]
pub struct MomentLevel {
    pub level: u32,
    pub size: usize,
    /// `|∂_{k·r} Q|`.
    pub boundary: usize,
    /// `Tr(B_nᵏ)/|Q|`.
    #[serde(with = "rational")]
    pub section_moment: Rational,
    /// `(1/|Q|) Σ_{x∈Q} (Aᵏ)(x,x)` on the infinite graph.
    #[serde(with = "rational")]
    pub walk_moment: Rational,
    #[serde(with = "rational")]
    pub error_bound: Rational,
    pub within_bound: bool,
    pub float_moment: Option<f64>,
    pub float_consistent: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub k: u32,
    pub levels: Vec<MomentLevel>,
    /// Polynomial extrapolation in `1/(2n+1)` through the last levels.
    #[serde(with = "rational")]
    pub extrapolated: Rational,
    pub all_within_bound: bool,
    /// `|m_i − m_{i−1}| ≤ e_i + e_{i−1} + |w_i − w_{i−1}|` for consecutive levels.
    pub consecutive_consistent: bool,
}

/// Exact diagonal `(Aᵏ)(x,x)` by propagating `e_x` through infinite rows.
fn closed_walk_weight(eval: &Evaluator<'_>, op: &PatternOperator, x: crate::VertexId, k: u32) -> Result<Rational> {
    let mut v: BTreeMap<crate::VertexId, Rational> = BTreeMap::from([(x, Rational::one())]);
    for _ in 0..k {
        let mut next: BTreeMap<crate::VertexId, Rational> = BTreeMap::new();
        for (z, a) in &v {
            for (y, b) in eval.row(op, *z)?.iter() {
                *next.entry(*y).or_insert_with(Rational::zero) += a * b;
            }
        }
        next.retain(|_, c| !c.is_zero());
        v = next;
    }
    Ok(v.remove(&x).unwrap_or_else(Rational::zero))
}

/// Lagrange interpolation through `(h_i, y_i)` evaluated at `h = 0`.
pub fn extrapolate_to_zero(points: &[(Rational, Rational)]) -> Rational {
    let mut total = Rational::zero();
    for (i, (hi, yi)) in points.iter().enumerate() {
        let mut w = Rational::one();
        for (j, (hj, _)) in points.iter().enumerate() {
            if i != j {
                w *= hj / (hj - hi);
            }
        }
        total += w * yi;
    }
    total
}

pub fn moment_run(op: &PatternOperator, levels: &[u32], k: u32, opts: &RunOptions) -> Result<MomentReport> {
    check_levels(levels)?;
    if k == 0 {
        return Err(Error::InvalidArgument("moment order must be >= 1".into()));
    }
    let g = op.graph();
    let r = op.radius();
    let m = op.sup_bound().clone();
    let q_r = Rational::from_integer(BigInt::from(g.max_ball_size(r)));
    let kk = norm_bound_f64(op).powi(k as i32);
    let rows = map_levels(levels, |n| {
        let q = g.folner_window(n);
        let section = finite_section_with_limit(op, &q, opts.dense_limit)?;
        let size = q.len();
        let section_moment = section.trace_power(k) / frac(size, 1);
        let eval = Evaluator::new();
        let mut walk = Rational::zero();
        for &x in q.vertices() {
            walk += closed_walk_weight(&eval, op, x, k)?;
        }
        let walk_moment = walk / frac(size, 1);
        let boundary = g.inner_boundary(&q, k * r).len();
        let mut error_bound = frac(boundary, size);
        for _ in 0..k {
            error_bound *= &m;
        }
        for _ in 1..k {
            error_bound *= &q_r;
        }
        let within_bound = (&section_moment - &walk_moment).abs() <= error_bound;
        let float_moment = if size <= opts.float_check_limit && section.is_symmetric() {
            let eigs = float_spectrum(&section)?;
            Some(eigs.iter().map(|l| l.powi(k as i32)).sum::<f64>() / size as f64)
        } else {
            None
        };
        let float_consistent =
            float_moment.map(|f| (f - rational::to_f64(&section_moment)).abs() <= 1e-6 * kk.max(1.0));
        Ok(MomentLevel {
            level: n,
            size,
            boundary,
            section_moment,
            walk_moment,
            error_bound,
            within_bound,
            float_moment,
            float_consistent,
        })
    })?;
    let order = g.dim().min(rows.len() - 1);
    let pts: Vec<(Rational, Rational)> = rows[rows.len() - order - 1..]
        .iter()
        .map(|l| (frac(1, 2 * l.level as usize + 1), l.section_moment.clone()))
        .collect();
    let consecutive_consistent = rows.windows(2).all(|w| {
        let lhs = (&w[1].section_moment - &w[0].section_moment).abs();
        let rhs = &w[1].error_bound + &w[0].error_bound + (&w[1].walk_moment - &w[0].walk_moment).abs();
        lhs <= rhs
    });
    Ok(MomentReport {
        k,
        all_within_bound: rows.iter().all(|l| l.within_bound),
        extrapolated: extrapolate_to_zero(&pts),
        consecutive_consistent,
        levels: rows,
    })
}

// -------------------------------------------------------------------- IDS

#[derive(Clone, Debug, Serialize)]
pub struct IdsLevel {
    pub level: u32,
    pub size: usize,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// `N(K) = 1`: every eigenvalue is at most the norm bound.
    pub within_norm_bound: bool,
    pub staircase: SpectralStaircase,
}

#[derive(Clone, Debug, Serialize)]
pub struct Atom {
    pub lambda: String,
    pub float_masses: Vec<f64>,
    /// Exact `dim Ker(B_n − λ)/|Q|` where the section fits the exact path.
    pub exact_densities: Vec<Option<String>>,
    pub certified: bool,
    /// exact density ≤ float cluster mass at every exact level
    pub consistent: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdsEstimate {
    pub norm_bound: f64,
    pub merge_tol: f64,
    pub levels: Vec<IdsLevel>,
    pub skipped_levels: Vec<u32>,
    pub partial: bool,
    pub positive: bool,
    /// Sup distances between consecutive levels.
    pub cauchy: Vec<f64>,
    pub reference: Option<String>,
    pub reference_distances: Vec<f64>,
    pub atoms: Vec<Atom>,
    /// Largest `|N_top − N_prev|` on a grid of continuity points.
    pub shubin_gap: Option<f64>,
}

pub fn ids_run(
    op: &PatternOperator,
    levels: &[u32],
    reference: Option<&AnalyticCdf>,
    opts: &RunOptions,
) -> Result<IdsEstimate> {
    check_levels(levels)?;
    let g = op.graph();
    let k = norm_bound_f64(op);
    let tol = opts.merge_tol_factor * k;
    let (fits, skipped): (Vec<u32>, Vec<u32>) =
        levels.iter().partition(|&&n| g.folner_window(n).len() <= opts.dense_limit);
    let computed = map_levels(&fits, |n| {
        let q = g.folner_window(n);
        let section = finite_section_with_limit(op, &q, opts.dense_limit)?;
        let eigs = float_spectrum(&section)?;
        let (lo, hi) = (eigs[0], eigs[eigs.len() - 1]);
        Ok((
            IdsLevel {
                level: n,
                size: q.len(),
                min_eigenvalue: lo,
                max_eigenvalue: hi,
                within_norm_bound: hi <= k && lo >= -k,
                staircase: SpectralStaircase::new(eigs, q.len(), tol),
            },
            section,
        ))
    })?;
    let (levels_out, sections): (Vec<IdsLevel>, Vec<FiniteSection>) = computed.into_iter().unzip();
    let cauchy: Vec<f64> =
        levels_out.windows(2).map(|w| sup_distance(&w[0].staircase, &w[1].staircase, -k, k)).collect();
    let reference_distances = reference
        .map(|f| levels_out.iter().map(|l| sup_distance(&l.staircase, f, -k, k)).collect())
        .unwrap_or_default();
    let positive = levels_out.iter().all(|l| l.min_eigenvalue >= -tol);

    let mut atoms = Vec::new();
    if let Some(top) = levels_out.last() {
        for jump in top.staircase.atoms(opts.min_atom_mass) {
            let lambda = nearest_rational(jump.at, 64);
            if (rational::to_f64(&lambda) - jump.at).abs() > 1e-6 * k.max(1.0) {
                continue;
            }
            let float_masses: Vec<f64> = levels_out
                .iter()
                .map(|l| l.staircase.jump_near(jump.at, 1e-6 * k.max(1.0)).map_or(0.0, |j| j.mass))
                .collect();
            let mut exact_densities = Vec::new();
            let mut certified = false;
            let mut consistent = true;
            for (l, s) in levels_out.iter().zip(&sections) {
                if l.size > opts.exact_limit {
                    exact_densities.push(None);
                    continue;
                }
                let kd = exactla::kernel_dim(&s.to_rational_matrix(), &lambda);
                certified |= kd > 0;
                let cluster = l.staircase.jump_near(jump.at, 1e-6 * k.max(1.0)).map_or(0, |j| j.multiplicity);
                consistent &= kd <= cluster;
                exact_densities.push(Some(rational::to_string(&frac(kd, l.size))));
            }
            atoms.push(Atom {
                lambda: rational::to_string(&lambda),
                float_masses,
                exact_densities,
                certified,
                consistent,
            });
        }
    }

    let shubin_gap = if levels_out.len() >= 2 {
        let top = &levels_out[levels_out.len() - 1].staircase;
        let prev = &levels_out[levels_out.len() - 2].staircase;
        let lo = levels_out.iter().map(|l| l.min_eigenvalue).fold(f64::INFINITY, f64::min);
        let grid = continuity_grid(lo, k, 64, top, opts.min_atom_mass);
        Some(grid.iter().fold(0.0, |m: f64, &x| m.max((top.value(x) - prev.value(x)).abs())))
    } else {
        None
    };

    Ok(IdsEstimate {
        norm_bound: k,
        merge_tol: tol,
        partial: !skipped.is_empty(),
        skipped_levels: skipped,
        positive,
        cauchy,
        reference: reference.map(|r| r.name().to_string()),
        reference_distances,
        atoms,
        shubin_gap,
        levels: levels_out,
    })
}

/// Evenly spaced points of `[lo, hi]` away from the atoms of `s`.
fn continuity_grid(lo: f64, hi: f64, count: usize, s: &SpectralStaircase, min_mass: f64) -> Vec<f64> {
    let width = (hi - lo).max(f64::MIN_POSITIVE);
    let atoms: Vec<f64> = s.atoms(min_mass).iter().map(|j| j.at).collect();
    (0..=count)
        .map(|i| lo + width * (i as f64 + 0.5) / (count as f64 + 1.0))
        .filter(|x| atoms.iter().all(|a| (a - x).abs() > 1e-3 * width))
        .collect()
}

// --------------------------------------------------------- ground state

#[derive(Clone, Debug, Serialize)]
pub struct KernelLevel {
    pub level: u32,
    pub size: usize,
    pub kernel_dim: usize,
    #[serde(with = "rational")]
    pub density: Rational,
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundStateReport {
    pub levels: Vec<KernelLevel>,
    /// `|d_i − d_{i−1}|` for consecutive levels.
    #[serde(with = "rational::vec")]
    pub stabilization: Vec<Rational>,
    #[serde(with = "rational")]
    pub limit_estimate: Rational,
}

fn kernel_levels(
    op: &PatternOperator,
    levels: &[u32],
    lambda: &Rational,
    opts: &RunOptions,
) -> Result<Vec<KernelLevel>> {
    map_levels(levels, |n| {
        let q = op.graph().folner_window(n);
        let s = exact_section(op, &q, opts)?;
        let kd = exactla::kernel_dim(&s.to_rational_matrix(), lambda);
        Ok(KernelLevel { level: n, size: q.len(), kernel_dim: kd, density: frac(kd, q.len()) })
    })
}

pub fn ground_state_run(op: &PatternOperator, levels: &[u32], opts: &RunOptions) -> Result<GroundStateReport> {
    check_levels(levels)?;
    let rows = kernel_levels(op, levels, &Rational::zero(), opts)?;
    Ok(GroundStateReport {
        stabilization: rows.windows(2).map(|w| (&w[1].density - &w[0].density).abs()).collect(),
        limit_estimate: rows.last().expect("nonempty").density.clone(),
        levels: rows,
    })
}

// -------------------------------------------------------------- eigenspace

#[derive(Clone, Debug, Serialize)]
pub struct EigenspaceLevel {
    pub level: u32,
    pub size: usize,
    /// `dim Ker(B_n − λ)`.
    pub kernel_dim: usize,
    /// `dim Ker(p (A − λ)² i)`.
    pub squared_kernel_dim: usize,
    /// `|∂_{2r} Q|`.
    pub boundary: usize,
    pub difference: usize,
    pub within_bound: bool,
    #[serde(with = "rational")]
    pub density: Rational,
    #[serde(with = "rational")]
    pub squared_density: Rational,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenspaceReport {
    #[serde(with = "rational")]
    pub lambda: Rational,
    pub levels: Vec<EigenspaceLevel>,
    pub all_within_bound: bool,
}

pub fn eigenspace_run(
    op: &PatternOperator,
    lambda: &Rational,
    levels: &[u32],
    opts: &RunOptions,
) -> Result<EigenspaceReport> {
    check_levels(levels)?;
    let g = op.graph();
    let squared = op.shift(lambda).pow(2);
    let rows = map_levels(levels, |n| {
        let q = g.folner_window(n);
        let size = q.len();
        let b = exact_section(op, &q, opts)?.to_rational_matrix();
        let kernel_dim = exactla::kernel_dim(&b, lambda);
        let c = exact_section(&squared, &q, opts)?.to_rational_matrix();
        let squared_kernel_dim = exactla::kernel_dim(&c, &Rational::zero());
        let boundary = g.inner_boundary(&q, 2 * op.radius()).len();
        let difference = kernel_dim.abs_diff(squared_kernel_dim);
        Ok(EigenspaceLevel {
            level: n,
            size,
            kernel_dim,
            squared_kernel_dim,
            boundary,
            difference,
            within_bound: difference <= boundary,
            density: frac(kernel_dim, size),
            squared_density: frac(squared_kernel_dim, size),
        })
    })?;
    Ok(EigenspaceReport { lambda: lambda.clone(), all_within_bound: rows.iter().all(|l| l.within_bound), levels: rows })
}

// ---------------------------------------------------------------- logdet

#[derive(Clone, Debug, Serialize)]
pub struct LogDetLevel {
    pub level: u32,
    pub size: usize,
    pub determinant: DeterminantReport,
    /// `(1/|Q|) Σ_{λ_i > tol} ln λ_i` from the float spectrum.
    pub fk_estimate: f64,
    /// `N(0)` of the float staircase, zero cut at the merge tolerance.
    pub zero_fraction: f64,
    /// `ln K (1 − N(0)) − ∫ (N(λ) − N(0))/λ dλ` summed over staircase steps.
    pub staircase_identity: f64,
    /// `|logdet − staircase_identity|`.
    pub identity_gap: f64,
    /// `scaled_det1` is a positive integer and its log-determinant ≥ 0.
    pub nonnegative: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LogDetRunReport {
    pub norm_bound: f64,
    pub levels: Vec<LogDetLevel>,
    pub all_nonnegative: bool,
    pub max_identity_gap: f64,
}

/// `ln K·(1 − N(0)) − ∫_0^K (N(λ) − N(0))/λ dλ` for a staircase, with the
/// integral cut below the smallest eigenvalue above `zero_tol`.
pub fn staircase_logdet(s: &SpectralStaircase, k: f64, zero_tol: f64) -> f64 {
    let q = s.size as f64;
    let n0 = s.count_le(zero_tol) as f64 / q;
    // (N − N(0)) is a step function rising by 1/|Q| at each positive
    // eigenvalue λ_i, so its integral against dλ/λ up to K is
    // Σ (1/|Q|) ln(K/λ_i)
    let integral: f64 = s.eigenvalues.iter().filter(|&&l| l > zero_tol).map(|&l| (k / l).ln() / q).sum();
    k.ln() * (1.0 - n0) - integral
}

pub fn logdet_run(op: &PatternOperator, levels: &[u32], opts: &RunOptions) -> Result<LogDetRunReport> {
    check_levels(levels)?;
    let k = norm_bound_f64(op);
    let tol = opts.merge_tol_factor * k;
    let rows = map_levels(levels, |n| {
        let q = op.graph().folner_window(n);
        let size = q.len();
        let section = exact_section(op, &q, opts)?;
        let determinant = exactla::determinant_report(&section.to_rational_matrix(), size, opts.exact_limit, false)?;
        let eigs = float_spectrum(&section)?;
        let stair = SpectralStaircase::new(eigs, size, tol);
        let fk_estimate = stair.eigenvalues.iter().filter(|&&l| l > tol).map(|l| l.ln()).sum::<f64>() / size as f64;
        let staircase_identity = staircase_logdet(&stair, k, tol);
        let nonnegative = rational::is_positive_integer(&determinant.scaled_det1) && determinant.scaled_logdet >= 0.0;
        Ok(LogDetLevel {
            level: n,
            size,
            fk_estimate,
            zero_fraction: stair.count_le(tol) as f64 / size as f64,
            identity_gap: (determinant.logdet - staircase_identity).abs(),
            staircase_identity,
            nonnegative,
            determinant,
        })
    })?;
    Ok(LogDetRunReport {
        norm_bound: k,
        all_nonnegative: rows.iter().all(|l| l.nonnegative),
        max_identity_gap: rows.iter().map(|l| l.identity_gap).fold(0.0, f64::max),
        levels: rows,
    })
}

// ------------------------------------------------------ norm / radius

#[derive(Clone, Debug, Serialize)]
pub struct NormCheck {
    pub level: u32,
    pub size: usize,
    /// `‖B_n‖` from the dense spectrum, or the largest absolute row sum
    /// (an upper bound for symmetric sections) above `float_check_limit`.
    pub operator_norm: f64,
    pub exact_norm: bool,
    pub norm_bound: f64,
    pub ok: bool,
}

/// `‖B_n‖ ≤ norm_bound(A)` per level; the norm bounds the spectral radius.
pub fn norm_check(op: &PatternOperator, levels: &[u32], opts: &RunOptions) -> Result<Vec<NormCheck>> {
    check_levels(levels)?;
    let k = norm_bound_f64(op);
    map_levels(levels, |n| {
        let q = op.graph().folner_window(n);
        let s = finite_section_with_limit(op, &q, opts.dense_limit)?;
        let exact_norm = q.len() <= opts.float_check_limit || !s.is_symmetric();
        let norm = if exact_norm {
            operator_norm(&s.to_float_matrix())?
        } else {
            s.rows()
                .iter()
                .map(|row| row.iter().map(|(_, v)| rational::to_f64(v).abs()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        Ok(NormCheck {
            level: n,
            size: q.len(),
            operator_norm: norm,
            exact_norm,
            norm_bound: k,
            ok: norm <= k * (1.0 + 1e-12),
        })
    })
}

// ------------------------------------------------- uniform convergence

#[derive(Clone, Debug, Serialize)]
pub struct JumpTrack {
    pub at: f64,
    pub masses: Vec<f64>,
    pub converging: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniformReport {
    pub sup_distances: Vec<f64>,
    pub decreasing: bool,
    /// Largest consecutive difference on the continuity grid, per pair.
    pub pointwise: Vec<f64>,
    pub pointwise_cauchy: bool,
    pub jumps: Vec<JumpTrack>,
    pub jumps_converge: bool,
    pub certificate: f64,
    pub passed: bool,
}

/// Checks the hypotheses of uniform convergence on data and then its
/// conclusion: pointwise differences shrink on a continuity grid, atom
/// masses drift by at most `jump_slack/|Q_prev|`, and consecutive sup
/// distances decrease.
pub fn uniform_convergence_diag(
    stairs: &[SpectralStaircase],
    lo: f64,
    hi: f64,
    opts: &RunOptions,
) -> Result<UniformReport> {
    if stairs.len() < 3 {
        return Err(Error::InvalidArgument("need at least three levels".into()));
    }
    let top = stairs.last().expect("nonempty");
    let sup_distances: Vec<f64> = stairs.windows(2).map(|w| sup_distance(&w[0], &w[1], lo, hi)).collect();
    let decreasing = sup_distances.windows(2).all(|w| w[1] < w[0] || w[1] == 0.0);
    let grid = continuity_grid(lo, hi, 128, top, opts.min_atom_mass);
    let pointwise: Vec<f64> = stairs
        .windows(2)
        .map(|w| grid.iter().fold(0.0, |m: f64, &x| m.max((w[1].value(x) - w[0].value(x)).abs())))
        .collect();
    let pointwise_cauchy = pointwise.last() <= pointwise.first();
    let jumps: Vec<JumpTrack> = top
        .atoms(opts.min_atom_mass)
        .iter()
        .map(|j| {
            let near = top.merge_tol.max(1e-12) * 100.0;
            let masses: Vec<f64> = stairs.iter().map(|s| s.jump_near(j.at, near).map_or(0.0, |x| x.mass)).collect();
            let converging =
                masses.windows(2).zip(stairs).all(|(m, s)| (m[1] - m[0]).abs() <= opts.jump_slack / s.size as f64);
            JumpTrack { at: j.at, masses, converging }
        })
        .collect();
    let jumps_converge = jumps.iter().all(|j| j.converging);
    let certificate = *sup_distances.last().expect("nonempty");
    Ok(UniformReport {
        passed: decreasing && pointwise_cauchy && jumps_converge,
        sup_distances,
        decreasing,
        pointwise,
        pointwise_cauchy,
        jumps,
        jumps_converge,
        certificate,
    })
}
