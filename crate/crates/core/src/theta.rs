//! Marton's theta, its projector variant, and the logarithmic Lovász theta.
//!
//! For a confusability graph G (adjacent = confusable) an orthonormal
//! representation assigns a unit vector u_x to every vertex with
//! u_x ⊥ u_x' for every NON-adjacent pair, plus a unit handle f. Then
//!
//! ```text
//! theta(G, P)  = min Σ_x P(x) log 1/|⟨u_x|f⟩|²
//! theta_sp(G, P) = inf Σ_x P(x) log 1/Tr(U_x F)
//! theta(G)     = min max_x log 1/|⟨u_x|f⟩|²
//! ```
//!
//! where the projector variant ranges over projector tuples {U_x} with the
//! same orthogonality pattern and density operators F. The two agree, and a
//! purification turns any projector witness into an orthonormal one with the
//! same value.
//!
//! The search is nonconvex in the vectors. Vectors are parametrized freely,
//! orthogonality is enforced by an augmented-Lagrangian penalty with
//! multiplier updates, a final exact projection restores feasibility, and
//! the inner minimization over F is convex and delegated to the
//! mirror-descent solver. Every reported value is recomputed from a witness
//! that passes its own invariants, so restarts can only fail quietly, never
//! report an infeasible value.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{Composition, ConfusabilityGraph};
use crate::error::CqError;
use crate::herm::{
    cvec, purify, DensityOperator, HermitianOperator, Projector,
};
use crate::renyi::{
    log_sum_exp_scaled, minimize_from, LogTraceObjective, SmoothedMaxLogTrace,
    SolverConfig,
};
use crate::sphere::TEMPERATURES;

/// Orthogonality tolerance for representation witnesses.
pub const WITNESS_ORTHO_TOL: f64 = 1e-8;
/// Unit-norm tolerance for representation witnesses.
pub const WITNESS_NORM_TOL: f64 = 1e-10;

/// Search knobs for the theta computations.
#[derive(Debug, Clone)]
pub struct ThetaConfig {
    pub solver: SolverConfig,
    /// Independent random restarts of the nonconvex vector search.
    pub restarts: usize,
    /// Projector ranks 1..=rank_cap tried by the projector search.
    pub rank_cap: usize,
    /// Augmented-Lagrangian rounds per restart.
    pub outer_rounds: usize,
    /// Gradient-descent iterations per round.
    pub descent_iters: usize,
}

impl Default for ThetaConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            restarts: 32,
            rank_cap: 2,
            outer_rounds: 14,
            descent_iters: 120,
        }
    }
}

impl ThetaConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.solver.seed = seed;
        self
    }
}

/// Value found by a theta search, with the solve diagnostics that matter to
/// callers: whether every inner convex solve converged.
#[derive(Debug, Clone, Copy)]
pub struct ThetaValue {
    pub value: f64,
    pub converged: bool,
}

/// Unit vectors u_x plus a unit handle, orthogonal on non-adjacent pairs.
#[derive(Debug, Clone)]
pub struct OrthonormalRepresentation {
    pub vectors: Vec<Vec<Complex64>>,
    pub handle: Vec<Complex64>,
    pub graph: ConfusabilityGraph,
}

impl OrthonormalRepresentation {
    pub fn validate(&self) -> Result<(), CqError> {
        let n = self.graph.num_vertices();
        if self.vectors.len() != n {
            return Err(CqError::DimensionMismatch(format!(
                "{} vectors for {} vertices",
                self.vectors.len(),
                n
            )));
        }
        for (x, u) in self.vectors.iter().enumerate() {
            let norm = cvec::norm(u);
            if (norm - 1.0).abs() > WITNESS_NORM_TOL {
                return Err(CqError::InvalidInput(format!(
                    "vector {x} has norm {norm}"
                )));
            }
        }
        let hn = cvec::norm(&self.handle);
        if (hn - 1.0).abs() > WITNESS_NORM_TOL {
            return Err(CqError::InvalidInput(format!("handle has norm {hn}")));
        }
        for (x, y) in self.graph.non_adjacent_pairs() {
            let ov = cvec::inner(&self.vectors[x], &self.vectors[y]).norm();
            if ov > WITNESS_ORTHO_TOL {
                return Err(CqError::InvalidInput(format!(
                    "non-adjacent pair ({x},{y}) has overlap {ov:.3e}"
                )));
            }
        }
        Ok(())
    }

    /// Realized values f(x) = |⟨u_x|f⟩|².
    pub fn overlaps(&self) -> Vec<f64> {
        self.vectors
            .iter()
            .map(|u| cvec::inner(u, &self.handle).norm_sqr())
            .collect()
    }

    pub fn theta_body_point(&self) -> Result<ThetaBodyPoint, CqError> {
        ThetaBodyPoint::new(self.overlaps())
    }

    /// Σ_x P(x) log 1/f(x) for this witness.
    pub fn value(&self, p: &Composition) -> f64 {
        weighted_log_inverse(&self.overlaps(), p.probs())
    }

    /// Witness dump: `{"u": [...], "f": [...], "value_nats": v}`.
    pub fn to_json(&self, value_nats: f64) -> serde_json::Value {
        let vec_json = |v: &Vec<Complex64>| {
            serde_json::json!({
                "re": v.iter().map(|z| z.re).collect::<Vec<_>>(),
                "im": v.iter().map(|z| z.im).collect::<Vec<_>>(),
            })
        };
        serde_json::json!({
            "u": self.vectors.iter().map(vec_json).collect::<Vec<_>>(),
            "f": vec_json(&self.handle),
            "value_nats": value_nats,
        })
    }
}

/// Projectors U_x plus a density operator F, trace-orthogonal on
/// non-adjacent pairs.
#[derive(Debug, Clone)]
pub struct ProjectorRepresentation {
    pub projectors: Vec<Projector>,
    pub state: DensityOperator,
    pub graph: ConfusabilityGraph,
}

impl ProjectorRepresentation {
    pub fn validate(&self) -> Result<(), CqError> {
        let n = self.graph.num_vertices();
        if self.projectors.len() != n {
            return Err(CqError::DimensionMismatch(format!(
                "{} projectors for {} vertices",
                self.projectors.len(),
                n
            )));
        }
        let dim = self.state.dim();
        if self.projectors.iter().any(|u| u.dim() != dim) {
            return Err(CqError::DimensionMismatch(
                "projectors and state must share a dimension".into(),
            ));
        }
        for (x, y) in self.graph.non_adjacent_pairs() {
            let t = self.projectors[x].trace_product(&self.projectors[y]);
            if t.abs() > WITNESS_ORTHO_TOL {
                return Err(CqError::InvalidInput(format!(
                    "non-adjacent pair ({x},{y}) has Tr(U_x U_y) = {t:.3e}"
                )));
            }
        }
        Ok(())
    }

    /// Realized values f(x) = Tr(U_x F).
    pub fn realized(&self) -> Vec<f64> {
        self.projectors
            .iter()
            .map(|u| u.trace_product(self.state.as_herm()).max(0.0))
            .collect()
    }

    pub fn theta_body_point(&self) -> Result<ThetaBodyPoint, CqError> {
        ThetaBodyPoint::new(self.realized())
    }

    pub fn value(&self, p: &Composition) -> f64 {
        weighted_log_inverse(&self.realized(), p.probs())
    }
}

/// A point of the theta body: values f(x) ∈ (0, 1] realized by some
/// representation witness. Constructed only from witnesses, so realizability
/// holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaBodyPoint {
    values: Vec<f64>,
}

impl ThetaBodyPoint {
    pub fn new(values: Vec<f64>) -> Result<Self, CqError> {
        for (x, &v) in values.iter().enumerate() {
            if !(v > 0.0) || v > 1.0 + 1e-9 {
                return Err(CqError::InvalidInput(format!(
                    "theta-body value f({x}) = {v} outside (0, 1]"
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn weighted_log_inverse(values: &[f64], weights: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&v, &w) in values.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        if v <= 0.0 {
            return f64::INFINITY;
        }
        acc -= w * v.ln();
    }
    acc
}

/// J(f, P) = Σ_x P(x) log 1/f(x); +inf when P puts weight on a zero of f.
pub fn j_functional(f: &ThetaBodyPoint, p: &Composition) -> Result<f64, CqError> {
    if f.values().len() != p.len() {
        return Err(CqError::DimensionMismatch(format!(
            "theta-body point over {} vertices, composition over {}",
            f.values().len(),
            p.len()
        )));
    }
    Ok(weighted_log_inverse(f.values(), p.probs()))
}

// ---------------------------------------------------------------------------
// Search engine
// ---------------------------------------------------------------------------

/// How per-vertex terms -log Tr(U_x F) are aggregated.
#[derive(Debug, Clone)]
enum Aggregator {
    /// Σ_x P(x) · term_x.
    Weighted(Vec<f64>),
    /// Smoothed max over x (log-sum-exp); the schedule sharpens it.
    SmoothedMax,
}

/// One candidate representation: orthonormal column sets Q_x (the projector
/// is U_x = Q_x Q_x†) and the auxiliary state F.
#[derive(Clone)]
struct RepCandidate {
    /// Per vertex: `rank` orthonormal columns of length `ambient`.
    bases: Vec<Vec<Vec<Complex64>>>,
    f: DensityOperator,
}

struct SearchOutcome {
    value: f64,
    candidate: RepCandidate,
    converged: bool,
}

/// Rank-r search for one aggregator. Returns the best feasible candidate
/// (exactly orthogonalized) with its value recomputed from the witness.
fn search_representation(
    graph: &ConfusabilityGraph,
    aggregator: &Aggregator,
    rank: usize,
    cfg: &ThetaConfig,
    warm: Option<&RepCandidate>,
) -> Result<SearchOutcome, CqError> {
    let n = graph.num_vertices();
    let ambient = n * rank;
    let pairs = graph.non_adjacent_pairs();

    // No orthogonality constraints: every vertex can share the same
    // subspace containing the handle, so the optimum is exactly 0.
    if pairs.is_empty() {
        let bases: Vec<Vec<Vec<Complex64>>> = (0..n)
            .map(|_| {
                (0..rank)
                    .map(|k| {
                        (0..ambient)
                            .map(|i| Complex64::new(if i == k { 1.0 } else { 0.0 }, 0.0))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let e0: Vec<Complex64> = (0..ambient)
            .map(|i| Complex64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0))
            .collect();
        let f = DensityOperator::pure_state(&e0)?;
        return Ok(SearchOutcome {
            value: 0.0,
            candidate: RepCandidate { bases, f },
            converged: true,
        });
    }

    let seeds: Vec<u64> = (0..cfg.restarts.max(1) as u64).collect();
    let outcomes: Vec<Option<SearchOutcome>> = seeds
        .par_iter()
        .map(|&restart| {
            run_restart(graph, aggregator, rank, ambient, cfg, restart, warm)
        })
        .collect();

    outcomes
        .into_iter()
        .flatten()
        .min_by(|a, b| a.value.partial_cmp(&b.value).unwrap())
        .ok_or_else(|| CqError::EmptySearchSpace("no feasible representation found".into()))
}

fn run_restart(
    graph: &ConfusabilityGraph,
    aggregator: &Aggregator,
    rank: usize,
    ambient: usize,
    cfg: &ThetaConfig,
    restart: u64,
    warm: Option<&RepCandidate>,
) -> Option<SearchOutcome> {
    use rand::Rng;
    use rand::SeedableRng;
    let n = graph.num_vertices();
    let pairs = graph.non_adjacent_pairs();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(
        cfg.solver
            .seed
            .wrapping_add(restart.wrapping_mul(0x9e3779b97f4a7c15))
            .wrapping_add(rank as u64),
    );

    let mut bases: Vec<Vec<Vec<Complex64>>> = if restart == 0 && warm.is_some() {
        warm.unwrap().bases.clone()
    } else {
        (0..n)
            .map(|_| {
                let cols: Vec<Vec<Complex64>> = (0..rank)
                    .map(|_| {
                        (0..ambient)
                            .map(|_| {
                                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                            })
                            .collect()
                    })
                    .collect();
                orthonormalize(cols, ambient, &mut rng)
            })
            .collect()
    };
    let mut f = if restart == 0 && warm.is_some() {
        warm.unwrap().f.clone()
    } else {
        DensityOperator::maximally_mixed(ambient)
    };

    // Augmented-Lagrangian state: one r×r multiplier block per pair.
    let mut multipliers: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); rank * rank]; pairs.len()];
    let mut mu = 10.0;
    let mut prev_violation = f64::INFINITY;

    let inner_cfg = SolverConfig {
        max_iters: 300,
        grad_tol: (cfg.solver.grad_tol * 10.0).max(1e-7),
        restarts: 1,
        ..cfg.solver.clone()
    };

    let mut step = 0.1;
    for round in 0..cfg.outer_rounds {
        let temperature = schedule_temperature(round, cfg.outer_rounds);
        // Convex F-update at fixed bases.
        f = solve_f(&bases, aggregator, temperature, &f, &inner_cfg)?;

        // Gradient descent on the bases at fixed F.
        for _ in 0..cfg.descent_iters {
            let (value, grads) =
                penalized_value_grad(&bases, &f, aggregator, temperature, &pairs, &multipliers, mu);
            if !value.is_finite() {
                break;
            }
            let mut accepted = false;
            let mut trial = step;
            for _ in 0..30 {
                let stepped = step_bases(&bases, &grads, trial, ambient, &mut rng);
                let (cand_value, _) = penalized_value(
                    &stepped,
                    &f,
                    aggregator,
                    temperature,
                    &pairs,
                    &multipliers,
                    mu,
                );
                if cand_value < value - 1e-14 {
                    bases = stepped;
                    step = (trial * 1.3).min(1.0);
                    accepted = true;
                    break;
                }
                trial *= 0.5;
            }
            if !accepted {
                break;
            }
        }

        // Multiplier and penalty updates.
        let mut violation: f64 = 0.0;
        for (k, &(x, y)) in pairs.iter().enumerate() {
            let c = cross_gram(&bases[x], &bases[y]);
            for (m, &cv) in multipliers[k].iter_mut().zip(&c) {
                *m += mu * cv;
            }
            violation = violation.max(c.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        if violation > 0.25 * prev_violation && round + 1 < cfg.outer_rounds {
            mu = (mu * 4.0).min(1e8);
        }
        prev_violation = violation;
        if violation < 1e-12 && round >= 2 {
            break;
        }
    }

    // Exact feasibility, then a clean convex F-solve against the projected
    // bases, then the value straight from the witness.
    hard_project(&mut bases, graph, ambient);
    let final_cfg = SolverConfig {
        restarts: 1,
        ..cfg.solver.clone()
    };
    let mut converged = true;
    f = match aggregator {
        Aggregator::Weighted(weights) => {
            let objective = LogTraceObjective {
                operators: bases.iter().map(|b| projector_of(b, ambient)).collect(),
                weights: weights.clone(),
            };
            let report = minimize_from(&objective, f, &final_cfg);
            converged &= report.converged;
            report.argmin
        }
        Aggregator::SmoothedMax => {
            let operators: Vec<HermitianOperator> =
                bases.iter().map(|b| projector_of(b, ambient)).collect();
            let mut cur = f;
            for &temperature in TEMPERATURES.iter() {
                let objective = SmoothedMaxLogTrace {
                    operators: operators.clone(),
                    temperature,
                };
                let report = minimize_from(&objective, cur, &final_cfg);
                converged &= report.converged;
                cur = report.argmin;
            }
            cur
        }
    };

    // Keep every realized value strictly positive so downstream witnesses
    // (theta-body points, purification) stay well defined.
    let realized: Vec<f64> = bases
        .iter()
        .map(|b| b.iter().map(|col| f.expectation(col)).sum::<f64>())
        .collect();
    if realized.iter().any(|&t| t < 1e-12) {
        let blended = f
            .as_herm()
            .scale(1.0 - 1e-9)
            .add(&HermitianOperator::identity(ambient).scale(1e-9 / ambient as f64));
        f = DensityOperator::from_herm_unchecked(blended);
    }

    let realized: Vec<f64> = bases
        .iter()
        .map(|b| b.iter().map(|col| f.expectation(col)).sum::<f64>())
        .collect();
    let value = match aggregator {
        Aggregator::Weighted(weights) => weighted_log_inverse(&realized, weights),
        Aggregator::SmoothedMax => realized
            .iter()
            .map(|&t| if t > 0.0 { -t.ln() } else { f64::INFINITY })
            .fold(f64::NEG_INFINITY, f64::max),
    };
    if !value.is_finite() {
        return None;
    }
    Some(SearchOutcome {
        value,
        candidate: RepCandidate { bases, f },
        converged,
    })
}

fn schedule_temperature(round: usize, total: usize) -> f64 {
    let idx = (round * TEMPERATURES.len()) / total.max(1);
    TEMPERATURES[idx.min(TEMPERATURES.len() - 1)]
}

fn solve_f(
    bases: &[Vec<Vec<Complex64>>],
    aggregator: &Aggregator,
    temperature: f64,
    warm: &DensityOperator,
    cfg: &SolverConfig,
) -> Option<DensityOperator> {
    let ambient = warm.dim();
    let operators: Vec<HermitianOperator> =
        bases.iter().map(|b| projector_of(b, ambient)).collect();
    let report = match aggregator {
        Aggregator::Weighted(weights) => {
            let objective = LogTraceObjective {
                operators,
                weights: weights.clone(),
            };
            minimize_from(&objective, warm.clone(), cfg)
        }
        Aggregator::SmoothedMax => {
            let objective = SmoothedMaxLogTrace {
                operators,
                temperature,
            };
            minimize_from(&objective, warm.clone(), cfg)
        }
    };
    Some(report.argmin)
}

fn projector_of(basis: &[Vec<Complex64>], ambient: usize) -> HermitianOperator {
    let mut acc = HermitianOperator::zeros(ambient);
    for col in basis {
        acc = acc.add(&HermitianOperator::outer(col));
    }
    acc
}

/// Penalized objective: aggregated terms plus the augmented-Lagrangian
/// penalty Re⟨Λ, C⟩ + (μ/2)‖C‖² per non-adjacent pair.
fn penalized_value(
    bases: &[Vec<Vec<Complex64>>],
    f: &DensityOperator,
    aggregator: &Aggregator,
    temperature: f64,
    pairs: &[(usize, usize)],
    multipliers: &[Vec<Complex64>],
    mu: f64,
) -> (f64, Vec<f64>) {
    let traces: Vec<f64> = bases
        .iter()
        .map(|b| b.iter().map(|col| f.expectation(col)).sum::<f64>())
        .collect();
    let terms: Vec<f64> = traces
        .iter()
        .map(|&t| if t > 1e-300 { -t.ln() } else { f64::INFINITY })
        .collect();
    let mut value = match aggregator {
        Aggregator::Weighted(w) => terms
            .iter()
            .zip(w)
            .map(|(&t, &wx)| if wx == 0.0 { 0.0 } else { wx * t })
            .sum(),
        Aggregator::SmoothedMax => log_sum_exp_scaled(&terms, temperature),
    };
    for (k, &(x, y)) in pairs.iter().enumerate() {
        let c = cross_gram(&bases[x], &bases[y]);
        let lam = &multipliers[k];
        let mut re_pair = 0.0;
        let mut sq = 0.0;
        for (cv, lv) in c.iter().zip(lam) {
            re_pair += (lv.conj() * cv).re;
            sq += cv.norm_sqr();
        }
        value += re_pair + 0.5 * mu * sq;
    }
    (value, traces)
}

/// Value together with the gradient 2·∂L/∂Q̄_x per basis column.
#[allow(clippy::too_many_arguments)]
fn penalized_value_grad(
    bases: &[Vec<Vec<Complex64>>],
    f: &DensityOperator,
    aggregator: &Aggregator,
    temperature: f64,
    pairs: &[(usize, usize)],
    multipliers: &[Vec<Complex64>],
    mu: f64,
) -> (f64, Vec<Vec<Vec<Complex64>>>) {
    let n = bases.len();
    let rank = bases[0].len();
    let ambient = bases[0][0].len();
    let (value, traces) =
        penalized_value(bases, f, aggregator, temperature, pairs, multipliers, mu);
    let mut grads: Vec<Vec<Vec<Complex64>>> =
        vec![vec![vec![Complex64::new(0.0, 0.0); ambient]; rank]; n];
    if !value.is_finite() {
        return (value, grads);
    }

    // Aggregator weights per vertex.
    let weights: Vec<f64> = match aggregator {
        Aggregator::Weighted(w) => w.clone(),
        Aggregator::SmoothedMax => {
            let terms: Vec<f64> = traces.iter().map(|&t| -t.ln()).collect();
            let tmax = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let raw: Vec<f64> = terms
                .iter()
                .map(|&t| (temperature * (t - tmax)).exp())
                .collect();
            let z: f64 = raw.iter().sum();
            raw.into_iter().map(|r| r / z).collect()
        }
    };

    // Objective part: -2 w_x / t_x · (F q).
    for x in 0..n {
        if weights[x] == 0.0 {
            continue;
        }
        let coeff = -2.0 * weights[x] / traces[x];
        for (i, col) in bases[x].iter().enumerate() {
            let fq = f.apply(col);
            for (g, v) in grads[x][i].iter_mut().zip(&fq) {
                *g += coeff * v;
            }
        }
    }

    // Penalty part per pair (x, y): with C = Q_x†Q_y,
    //   ∂/∂Q̄_x: Q_y·(Λ + μC)†, ∂/∂Q̄_y: Q_x·(Λ + μC).
    for (k, &(x, y)) in pairs.iter().enumerate() {
        let c = cross_gram(&bases[x], &bases[y]);
        let lam = &multipliers[k];
        let shifted: Vec<Complex64> = lam
            .iter()
            .zip(&c)
            .map(|(l, cv)| l + mu * cv)
            .collect();
        for a in 0..rank {
            for b in 0..rank {
                let s = shifted[a * rank + b];
                // grad_x column a += conj(s) · q_y[b]
                let sc = s.conj();
                for (g, v) in grads[x][a].iter_mut().zip(&bases[y][b]) {
                    *g += sc * v;
                }
                // grad_y column b += s · q_x[a]
                for (g, v) in grads[y][b].iter_mut().zip(&bases[x][a]) {
                    *g += s * v;
                }
            }
        }
    }

    // Project onto the Stiefel tangent space so retraction stays local:
    // G ← G - Q·herm(Q†G).
    for x in 0..n {
        let qg = cross_gram(&bases[x], &grads[x]);
        // herm part
        let mut h = vec![Complex64::new(0.0, 0.0); rank * rank];
        for a in 0..rank {
            for b in 0..rank {
                h[a * rank + b] = 0.5 * (qg[a * rank + b] + qg[b * rank + a].conj());
            }
        }
        for b in 0..rank {
            let correction: Vec<Complex64> = (0..ambient)
                .map(|i| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for a in 0..rank {
                        acc += bases[x][a][i] * h[a * rank + b];
                    }
                    acc
                })
                .collect();
            for (g, cval) in grads[x][b].iter_mut().zip(&correction) {
                *g -= cval;
            }
        }
    }

    (value, grads)
}

/// C = Q_x†Q_y as an r×r row-major block: C[a][b] = ⟨q_x[a], q_y[b]⟩.
fn cross_gram(qx: &[Vec<Complex64>], qy: &[Vec<Complex64>]) -> Vec<Complex64> {
    let r1 = qx.len();
    let r2 = qy.len();
    let mut c = vec![Complex64::new(0.0, 0.0); r1 * r2];
    for a in 0..r1 {
        for b in 0..r2 {
            c[a * r2 + b] = cvec::inner(&qx[a], &qy[b]);
        }
    }
    c
}

fn step_bases(
    bases: &[Vec<Vec<Complex64>>],
    grads: &[Vec<Vec<Complex64>>],
    step: f64,
    ambient: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Vec<Vec<Vec<Complex64>>> {
    bases
        .iter()
        .zip(grads)
        .map(|(cols, gcols)| {
            let stepped: Vec<Vec<Complex64>> = cols
                .iter()
                .zip(gcols)
                .map(|(c, g)| {
                    c.iter()
                        .zip(g)
                        .map(|(cv, gv)| cv - step * gv)
                        .collect()
                })
                .collect();
            orthonormalize(stepped, ambient, rng)
        })
        .collect()
}

/// Modified Gram–Schmidt with random refill of collapsed columns.
fn orthonormalize(
    mut cols: Vec<Vec<Complex64>>,
    ambient: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Vec<Vec<Complex64>> {
    use rand::Rng;
    for i in 0..cols.len() {
        for _ in 0..4 {
            for j in 0..i {
                let proj = cvec::inner(&cols[j], &cols[i]);
                let prev = cols[j].clone();
                cvec::axpy(&mut cols[i], -proj, &prev);
            }
            let norm = cvec::norm(&cols[i]);
            if norm > 1e-8 {
                for z in cols[i].iter_mut() {
                    *z /= norm;
                }
                break;
            }
            // Collapsed: refill randomly and retry.
            for z in cols[i].iter_mut() {
                *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let _ = ambient;
        }
    }
    cols
}

/// Exact orthogonalization across non-adjacent pairs: process vertices in
/// order, projecting each basis out of the span of all earlier non-adjacent
/// bases. Each pair is enforced when its later vertex is processed and
/// earlier vectors never move again, so feasibility is exact on every pair.
fn hard_project(bases: &mut [Vec<Vec<Complex64>>], graph: &ConfusabilityGraph, ambient: usize) {
    let n = graph.num_vertices();
    for x in 0..n {
        // Orthonormal basis of the span of earlier non-adjacent columns.
        let mut span: Vec<Vec<Complex64>> = Vec::new();
        for y in 0..x {
            if graph.adjacent(x, y) {
                continue;
            }
            for col in &bases[y] {
                let mut v = col.clone();
                for w in &span {
                    let proj = cvec::inner(w, &v);
                    let wc = w.clone();
                    cvec::axpy(&mut v, -proj, &wc);
                }
                let norm = cvec::norm(&v);
                if norm > 1e-10 {
                    for z in v.iter_mut() {
                        *z /= norm;
                    }
                    span.push(v);
                }
            }
        }
        if span.is_empty() {
            continue;
        }
        let rank = bases[x].len();
        let mut fixed: Vec<Vec<Complex64>> = Vec::with_capacity(rank);
        for col in bases[x].iter() {
            let mut v = col.clone();
            // Twice through for numerical sharpness.
            for _ in 0..2 {
                for w in &span {
                    let proj = cvec::inner(w, &v);
                    let wc = w.clone();
                    cvec::axpy(&mut v, -proj, &wc);
                }
                for w in &fixed {
                    let proj = cvec::inner(w, &v);
                    let wc = w.clone();
                    cvec::axpy(&mut v, -proj, &wc);
                }
            }
            let norm = cvec::norm(&v);
            if norm > 1e-8 {
                for z in v.iter_mut() {
                    *z /= norm;
                }
                fixed.push(v);
            } else {
                // Degenerate column: take the first basis direction that
                // survives projection out of span ∪ fixed.
                let mut replacement = None;
                for k in 0..ambient {
                    let mut e: Vec<Complex64> = (0..ambient)
                        .map(|i| Complex64::new(if i == k { 1.0 } else { 0.0 }, 0.0))
                        .collect();
                    for _ in 0..2 {
                        for w in span.iter().chain(fixed.iter()) {
                            let proj = cvec::inner(w, &e);
                            let wc = w.clone();
                            cvec::axpy(&mut e, -proj, &wc);
                        }
                    }
                    let en = cvec::norm(&e);
                    if en > 1e-3 {
                        for z in e.iter_mut() {
                            *z /= en;
                        }
                        replacement = Some(e);
                        break;
                    }
                }
                fixed.push(replacement.expect("ambient dimension admits a feasible column"));
            }
        }
        bases[x] = fixed;
    }
}

// ---------------------------------------------------------------------------
// Public theta operations
// ---------------------------------------------------------------------------

/// Marton's theta: multi-start minimization of Σ_x P(x) log 1/|⟨u_x|f⟩|².
/// The witness is the purified rank-one representation of the best projector
/// candidate, so its overlaps reproduce the reported value exactly.
pub fn theta_marton(
    graph: &ConfusabilityGraph,
    p: &Composition,
    cfg: &ThetaConfig,
) -> Result<(ThetaValue, OrthonormalRepresentation), CqError> {
    check_graph_composition(graph, p)?;
    let aggregator = Aggregator::Weighted(p.probs().to_vec());
    let outcome = search_representation(graph, &aggregator, 1, cfg, None)?;
    let projector_rep = candidate_to_projector_rep(&outcome.candidate, graph);
    let orep = purify_to_rank_one(&projector_rep)?;
    orep.validate()?;
    let value = orep.value(p);
    Ok((
        ThetaValue {
            value,
            converged: outcome.converged,
        },
        orep,
    ))
}

/// Projector variant over ranks 1..=rank_cap; the inner F-minimization is
/// convex, the outer projector search is the only nonconvex part.
pub fn theta_sp(
    graph: &ConfusabilityGraph,
    p: &Composition,
    cfg: &ThetaConfig,
) -> Result<(ThetaValue, ProjectorRepresentation), CqError> {
    check_graph_composition(graph, p)?;
    if cfg.rank_cap == 0 {
        return Err(CqError::EmptySearchSpace("rank_cap must be ≥ 1".into()));
    }
    let aggregator = Aggregator::Weighted(p.probs().to_vec());
    let mut best: Option<(SearchOutcome, usize)> = None;
    for rank in 1..=cfg.rank_cap {
        let outcome = search_representation(graph, &aggregator, rank, cfg, None)?;
        let better = match &best {
            None => true,
            Some((b, _)) => outcome.value < b.value,
        };
        if better {
            best = Some((outcome, rank));
        }
    }
    let (outcome, _) = best.expect("rank_cap ≥ 1");
    let rep = candidate_to_projector_rep(&outcome.candidate, graph);
    rep.validate()?;
    let value = rep.value(p);
    Ok((
        ThetaValue {
            value,
            converged: outcome.converged,
        },
        rep,
    ))
}

/// Logarithmic Lovász theta: same search with a smoothed max-over-vertices
/// aggregator; reported value is the true max at the final witness.
pub fn theta_lovasz(graph: &ConfusabilityGraph, cfg: &ThetaConfig) -> Result<ThetaValue, CqError> {
    let outcome = search_representation(graph, &Aggregator::SmoothedMax, 1, cfg, None)?;
    let rep = candidate_to_projector_rep(&outcome.candidate, graph);
    rep.validate()?;
    let value = rep
        .realized()
        .into_iter()
        .map(|t| if t > 0.0 { -t.ln() } else { f64::INFINITY })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ThetaValue {
        value,
        converged: outcome.converged,
    })
}

/// Result of the outer composition ascent.
#[derive(Debug, Clone)]
pub struct MaxPTheta {
    pub value: f64,
    pub argmax: Composition,
    /// |value - theta_lovasz(G)|; small by the minimax theorem.
    pub gap_to_lovasz: f64,
    pub converged: bool,
}

/// max_P theta(G, P) by exponentiated-gradient ascent on the simplex with
/// warm-started inner searches. Equals the Lovász theta by minimax; the gap
/// to an independent theta_lovasz run is reported.
pub fn max_p_theta(graph: &ConfusabilityGraph, cfg: &ThetaConfig) -> Result<MaxPTheta, CqError> {
    let n = graph.num_vertices();
    let inner_cfg = ThetaConfig {
        restarts: cfg.restarts.min(8).max(1),
        ..cfg.clone()
    };
    let mut p = vec![1.0 / n as f64; n];
    let mut best_value = f64::NEG_INFINITY;
    let mut best_p = p.clone();
    let mut warm: Option<RepCandidate> = None;
    let mut converged = true;

    for iter in 0..30 {
        let comp = Composition::new(p.clone())?;
        let aggregator = Aggregator::Weighted(p.clone());
        let outcome = search_representation(graph, &aggregator, 1, &inner_cfg, warm.as_ref())?;
        converged &= outcome.converged;
        let rep = candidate_to_projector_rep(&outcome.candidate, graph);
        let realized = rep.realized();
        let value = rep.value(&comp);
        if value > best_value {
            best_value = value;
            best_p = p.clone();
        }
        warm = Some(outcome.candidate);

        // Supergradient of the concave map P ↦ theta(G, P) at the witness:
        // the per-vertex terms log 1/f(x).
        let grad: Vec<f64> = realized
            .iter()
            .map(|&t| if t > 0.0 { -t.ln() } else { 50.0 })
            .collect();
        let gmax = grad.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let eta = 0.8 / (1.0 + iter as f64 / 6.0);
        let mut z = 0.0;
        for (px, &g) in p.iter_mut().zip(&grad) {
            *px = (*px).max(1e-12) * ((g - gmax) * eta).exp();
            z += *px;
        }
        for px in p.iter_mut() {
            *px /= z;
        }
    }

    let lovasz = theta_lovasz(graph, cfg)?;
    Ok(MaxPTheta {
        value: best_value,
        argmax: Composition::new(best_p)?,
        gap_to_lovasz: (best_value - lovasz.value).abs(),
        converged: converged && lovasz.converged,
    })
}

/// Purify a projector representation into a rank-one one on the doubled
/// space: w_x = (U_x ⊗ 1)|ψ⟩ / ‖·‖ for a purification ψ of F. Overlaps are
/// preserved: |⟨w_x|ψ⟩|² = Tr(U_x F).
pub fn purify_to_rank_one(
    rep: &ProjectorRepresentation,
) -> Result<OrthonormalRepresentation, CqError> {
    rep.validate()?;
    let d = rep.state.dim();
    let realized = rep.realized();
    for (x, &t) in realized.iter().enumerate() {
        if t <= 1e-300 {
            return Err(CqError::InvalidInput(format!(
                "Tr(U_{x} F) = 0: purified vector undefined"
            )));
        }
    }
    let psi = purify(&rep.state)?;
    let vectors = rep
        .projectors
        .iter()
        .zip(&realized)
        .map(|(u, &t)| {
            // (U ⊗ 1)ψ: apply U to the first tensor factor.
            let mut w = vec![Complex64::new(0.0, 0.0); d * d];
            for i in 0..d {
                for k in 0..d {
                    let uik = u.get(i, k);
                    if uik.norm_sqr() == 0.0 {
                        continue;
                    }
                    for j in 0..d {
                        w[i * d + j] += uik * psi[k * d + j];
                    }
                }
            }
            let scale = 1.0 / t.sqrt();
            for z in w.iter_mut() {
                *z *= scale;
            }
            w
        })
        .collect();
    let orep = OrthonormalRepresentation {
        vectors,
        handle: psi,
        graph: rep.graph.clone(),
    };
    // Overlap preservation within 1e-9 is part of the contract.
    for (x, (&t, ov)) in realized.iter().zip(orep.overlaps()).enumerate() {
        if (t - ov).abs() > 1e-9 {
            return Err(CqError::InvalidInput(format!(
                "purification distorted overlap {x}: {t} vs {ov}"
            )));
        }
    }
    Ok(orep)
}

/// Convex combination of two rank-one witnesses by block direct sum:
/// U_x = U_x^(1) ⊕ U_x^(2), F = p·F^(1) ⊕ (1-p)·F^(2); the realized values
/// mix exactly: f(x) = p·f1(x) + (1-p)·f2(x).
pub fn direct_sum_mix(
    r1: &OrthonormalRepresentation,
    r2: &OrthonormalRepresentation,
    p: f64,
) -> Result<ProjectorRepresentation, CqError> {
    if r1.graph != r2.graph {
        return Err(CqError::InvalidInput(
            "direct sum needs identical confusability graphs".into(),
        ));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(CqError::InvalidInput(format!("mixing weight {p} outside [0, 1]")));
    }
    let d1 = r1.handle.len();
    let d2 = r2.handle.len();
    let d = d1 + d2;
    let embed = |block1: &HermitianOperator, block2: &HermitianOperator,
                 w1: f64, w2: f64| {
        let mut out = HermitianOperator::zeros(d);
        for i in 0..d1 {
            for j in 0..d1 {
                out.set(i, j, block1.get(i, j) * w1);
            }
        }
        for i in 0..d2 {
            for j in 0..d2 {
                out.set(d1 + i, d1 + j, block2.get(i, j) * w2);
            }
        }
        out
    };
    let projectors = r1
        .vectors
        .iter()
        .zip(&r2.vectors)
        .map(|(u1, u2)| {
            let b1 = HermitianOperator::outer(u1);
            let b2 = HermitianOperator::outer(u2);
            Projector::new(embed(&b1, &b2, 1.0, 1.0))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let f1 = HermitianOperator::outer(&r1.handle);
    let f2 = HermitianOperator::outer(&r2.handle);
    let state = DensityOperator::new(embed(&f1, &f2, p, 1.0 - p))?;
    Ok(ProjectorRepresentation {
        projectors,
        state,
        graph: r1.graph.clone(),
    })
}

fn check_graph_composition(graph: &ConfusabilityGraph, p: &Composition) -> Result<(), CqError> {
    if graph.num_vertices() != p.len() {
        return Err(CqError::DimensionMismatch(format!(
            "graph on {} vertices, composition over {}",
            graph.num_vertices(),
            p.len()
        )));
    }
    Ok(())
}

fn candidate_to_projector_rep(
    candidate: &RepCandidate,
    graph: &ConfusabilityGraph,
) -> ProjectorRepresentation {
    let ambient = candidate.f.dim();
    let projectors = candidate
        .bases
        .iter()
        .map(|b| Projector::from_herm_unchecked(projector_of(b, ambient)))
        .collect();
    ProjectorRepresentation {
        projectors,
        state: candidate.f.clone(),
        graph: graph.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn small_cfg() -> ThetaConfig {
        ThetaConfig {
            restarts: 12,
            outer_rounds: 10,
            descent_iters: 80,
            ..Default::default()
        }
    }

    /// Basis representation on the empty graph with handle √P realizes
    /// f = P exactly.
    fn basis_rep(p: &[f64]) -> OrthonormalRepresentation {
        let n = p.len();
        let vectors: Vec<Vec<Complex64>> = (0..n)
            .map(|x| {
                (0..n)
                    .map(|i| Complex64::new(if i == x { 1.0 } else { 0.0 }, 0.0))
                    .collect()
            })
            .collect();
        let handle: Vec<Complex64> = p.iter().map(|&v| Complex64::new(v.sqrt(), 0.0)).collect();
        OrthonormalRepresentation {
            vectors,
            handle,
            graph: ConfusabilityGraph::empty(n),
        }
    }

    #[test]
    fn j_functional_cases() {
        // f ≡ 1: complete-graph witness u_x = f.
        let f = ThetaBodyPoint::new(vec![1.0, 1.0, 1.0]).unwrap();
        let p = Composition::uniform(3);
        assert!(j_functional(&f, &p).unwrap().abs() < 1e-15);

        // f = P on the empty graph gives the entropy.
        let probs = vec![0.5, 0.25, 0.25];
        let rep = basis_rep(&probs);
        rep.validate().unwrap();
        let point = rep.theta_body_point().unwrap();
        let p = Composition::new(probs.clone()).unwrap();
        let j = j_functional(&point, &p).unwrap();
        assert!((j - p.entropy()).abs() < 1e-12);

        // Concentrated composition reads off a single term.
        let f = ThetaBodyPoint::new(vec![0.3, 0.9]).unwrap();
        let p = Composition::new(vec![1.0, 0.0]).unwrap();
        assert!((j_functional(&f, &p).unwrap() - (1.0f64 / 0.3).ln()).abs() < 1e-12);
    }

    #[test]
    fn theta_marton_complete_graph_is_zero() {
        let g = ConfusabilityGraph::complete(4);
        let (v, rep) = theta_marton(&g, &Composition::uniform(4), &small_cfg()).unwrap();
        assert!(v.value.abs() < 1e-9);
        rep.validate().unwrap();
    }

    #[test]
    fn theta_marton_empty_graph_is_entropy() {
        let g = ConfusabilityGraph::empty(4);
        let p = Composition::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let (v, rep) = theta_marton(&g, &p, &small_cfg()).unwrap();
        rep.validate().unwrap();
        assert!(
            (v.value - p.entropy()).abs() < 1e-3,
            "theta {} vs H(P) {}",
            v.value,
            p.entropy()
        );
    }

    #[test]
    fn theta_marton_c5_uniform() {
        let g = ConfusabilityGraph::cycle(5);
        let (v, rep) = theta_marton(&g, &Composition::uniform(5), &small_cfg()).unwrap();
        rep.validate().unwrap();
        let target = 0.5 * 5.0f64.ln();
        assert!(
            (v.value - target).abs() < 3e-3,
            "theta(C5) {} vs {}",
            v.value,
            target
        );
    }

    #[test]
    fn theta_sp_sandwich() {
        let g = ConfusabilityGraph::cycle(5);
        let p = Composition::uniform(5);
        let cfg = small_cfg();
        let (sp, rep) = theta_sp(&g, &p, &cfg).unwrap();
        rep.validate().unwrap();
        let (marton, _) = theta_marton(&g, &p, &cfg).unwrap();
        assert!(sp.value <= marton.value + 1e-6);
        assert!((sp.value - marton.value).abs() < 5e-3);
    }

    #[test]
    fn theta_lovasz_values() {
        let cfg = small_cfg();
        let v = theta_lovasz(&ConfusabilityGraph::complete(4), &cfg).unwrap();
        assert!(v.value.abs() < 1e-9);

        let v = theta_lovasz(&ConfusabilityGraph::empty(4), &cfg).unwrap();
        assert!((v.value - 4.0f64.ln()).abs() < 2e-3, "empty-4: {}", v.value);

        let v = theta_lovasz(&ConfusabilityGraph::cycle(5), &cfg).unwrap();
        assert!(
            (v.value - 0.5 * 5.0f64.ln()).abs() < 2e-3,
            "C5: {}",
            v.value
        );
    }

    #[test]
    fn purify_preserves_overlaps() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        // Random-ish projector representation on C4: ranks ≤ 2, dim 4.
        let g = ConfusabilityGraph::cycle(4);
        let p = Composition::uniform(4);
        let cfg = ThetaConfig {
            restarts: 6,
            rank_cap: 2,
            ..small_cfg()
        };
        let (_, rep) = theta_sp(&g, &p, &cfg).unwrap();
        let orep = purify_to_rank_one(&rep).unwrap();
        orep.validate().unwrap();
        for (t, ov) in rep.realized().iter().zip(orep.overlaps()) {
            assert!((t - ov).abs() < 1e-9);
        }
        let _ = &mut rng;
    }

    #[test]
    fn purify_identity_on_rank_one_pure() {
        // Rank-one projectors with a pure F reduce to the vectors themselves
        // up to phase: overlaps match exactly.
        let rep0 = basis_rep(&[0.5, 0.3, 0.2]);
        let projectors = rep0
            .vectors
            .iter()
            .map(|u| Projector::new(HermitianOperator::outer(u)).unwrap())
            .collect();
        let state = DensityOperator::pure_state(&rep0.handle).unwrap();
        let prep = ProjectorRepresentation {
            projectors,
            state,
            graph: rep0.graph.clone(),
        };
        let orep = purify_to_rank_one(&prep).unwrap();
        for (t, ov) in prep.realized().iter().zip(orep.overlaps()) {
            assert!((t - ov).abs() < 1e-12);
        }
    }

    #[test]
    fn purify_uniform_f_orthogonal_projectors() {
        // F = I/d with orthogonal rank-one projectors: overlaps 1/d each.
        let n = 3;
        let rep0 = basis_rep(&[1.0 / 3.0; 3]);
        let projectors: Vec<Projector> = rep0
            .vectors
            .iter()
            .map(|u| Projector::new(HermitianOperator::outer(u)).unwrap())
            .collect();
        let prep = ProjectorRepresentation {
            projectors,
            state: DensityOperator::maximally_mixed(n),
            graph: rep0.graph.clone(),
        };
        let orep = purify_to_rank_one(&prep).unwrap();
        for ov in orep.overlaps() {
            assert!((ov - 1.0 / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn purify_rejects_zero_trace() {
        let rep0 = basis_rep(&[1.0, 0.0]);
        // F concentrated on the first direction: Tr(U_1 F) = 0.
        let projectors: Vec<Projector> = rep0
            .vectors
            .iter()
            .map(|u| Projector::new(HermitianOperator::outer(u)).unwrap())
            .collect();
        let state = DensityOperator::pure_state(&rep0.vectors[0]).unwrap();
        let prep = ProjectorRepresentation {
            projectors,
            state,
            graph: rep0.graph.clone(),
        };
        assert!(purify_to_rank_one(&prep).is_err());
    }

    #[test]
    fn direct_sum_mixes_exactly() {
        let g = ConfusabilityGraph::cycle(5);
        let cfg = ThetaConfig {
            restarts: 4,
            ..small_cfg()
        };
        let (_, rep1) = theta_marton(&g, &Composition::uniform(5), &cfg).unwrap();
        let p2 = Composition::new(vec![0.4, 0.2, 0.2, 0.1, 0.1]).unwrap();
        let (_, rep2) = theta_marton(&g, &p2, &cfg).unwrap();
        for p in [1.0, 0.5, 0.3] {
            let mixed = direct_sum_mix(&rep1, &rep2, p).unwrap();
            mixed.validate().unwrap();
            let f1 = rep1.overlaps();
            let f2 = rep2.overlaps();
            for (x, t) in mixed.realized().iter().enumerate() {
                let expected = p * f1[x] + (1.0 - p) * f2[x];
                assert!((t - expected).abs() < 1e-12, "x={x}: {t} vs {expected}");
            }
        }
    }

    #[test]
    fn direct_sum_rejects_graph_mismatch() {
        let r1 = basis_rep(&[0.5, 0.5]);
        let mut r2 = basis_rep(&[0.5, 0.5]);
        r2.graph = ConfusabilityGraph::complete(2);
        assert!(direct_sum_mix(&r1, &r2, 0.5).is_err());
    }

    #[test]
    fn max_p_theta_cases() {
        let cfg = small_cfg();
        let r = max_p_theta(&ConfusabilityGraph::complete(3), &cfg).unwrap();
        assert!(r.value.abs() < 1e-8);

        let r = max_p_theta(&ConfusabilityGraph::empty(3), &cfg).unwrap();
        assert!((r.value - 3.0f64.ln()).abs() < 3e-3, "empty-3 {}", r.value);
        for &p in r.argmax.probs() {
            assert!((p - 1.0 / 3.0).abs() < 0.02);
        }
    }

    #[test]
    fn max_p_theta_c5_uniform() {
        let r = max_p_theta(&ConfusabilityGraph::cycle(5), &small_cfg()).unwrap();
        assert!(
            (r.value - 0.5 * 5.0f64.ln()).abs() < 3e-3,
            "value {}",
            r.value
        );
        assert!(r.gap_to_lovasz < 3e-3);
        let tv: f64 = r
            .argmax
            .probs()
            .iter()
            .map(|&p| (p - 0.2).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.02, "argmax {:?}", r.argmax.probs());
    }

    #[test]
    fn edge_monotonicity() {
        // Adding edges (more confusability) only grows the search space, so
        // the value cannot increase beyond solver noise.
        let cfg = small_cfg();
        let p = Composition::uniform(4);
        let sparse = ConfusabilityGraph::path(4);
        let denser = ConfusabilityGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 2)]).unwrap();
        let (v1, _) = theta_marton(&sparse, &p, &cfg).unwrap();
        let (v2, _) = theta_marton(&denser, &p, &cfg).unwrap();
        assert!(v2.value <= v1.value + 1e-4, "{} vs {}", v2.value, v1.value);
    }
}
