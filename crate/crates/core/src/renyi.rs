//! Rényi-type objectives over density operators and a deterministic
//! entropic mirror-descent minimizer.
//!
//! The central objective is
//!
//! ```text
//! φ(F) = -(1+ρ) Σ_x P(x) · log Tr(S_x^{1/(1+ρ)} F^{ρ/(1+ρ)})
//! ```
//!
//! minimized over density operators F. With s = ρ/(1+ρ) each term is
//! -(1/(1-s)) · μ_{S_x,F}(s) for μ_{S,F}(s) = log Tr(S^{1-s} F^s), which is
//! concave in F by Lieb's theorem, so φ is convex and the minimizer below is
//! global. The same machinery also minimizes the log-trace objectives used by
//! the zero-error-rate and theta computations; anything implementing
//! [`DensityObjective`] plugs in.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{CQChannel, Composition};
use crate::error::CqError;
use crate::herm::{
    eig_hermitian, frac_power, DensityOperator, EigenSystem, HermitianOperator,
};

/// Traces at or below this threshold are treated as zero overlap and map to
/// the -inf / +inf sentinels.
pub const TRACE_UNDERFLOW: f64 = 1e-300;

/// Rényi order: ρ ≥ 0 together with s = ρ/(1+ρ) in [0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenyiOrder {
    rho: f64,
    s: f64,
}

impl RenyiOrder {
    pub fn from_rho(rho: f64) -> Result<Self, CqError> {
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(CqError::InvalidInput(format!("ρ = {rho} must be finite and ≥ 0")));
        }
        Ok(Self {
            rho,
            s: rho / (1.0 + rho),
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn s(&self) -> f64 {
        self.s
    }
}

/// Knobs for [`minimize_over_density`]. Defaults match the documented
/// behaviour of the bound evaluators.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step_init: f64,
    pub seed: u64,
    pub restarts: usize,
    pub rank_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            grad_tol: 1e-8,
            step_init: 1.0,
            seed: 0,
            restarts: 3,
            rank_tol: 1e-10,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Single-start variant used inside outer searches that already restart.
    pub fn single_start(&self) -> Self {
        Self {
            restarts: 1,
            ..self.clone()
        }
    }
}

/// Outcome of a density-simplex minimization.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Best objective value found (nats).
    pub value: f64,
    /// Argmin iterate; strictly positive definite by construction.
    pub argmin: DensityOperator,
    pub iterations: usize,
    pub converged: bool,
    /// Projected KKT residual at the final iterate: on-face deviation of the
    /// gradient from a multiple of the identity plus the off-face
    /// complementarity defect.
    pub first_order_residual: f64,
}

/// Convex objective on the density-operator simplex: a value and a Fréchet
/// gradient at interior points.
pub trait DensityObjective: Sync {
    fn value(&self, f: &HermitianOperator) -> f64;
    /// Value together with the Hermitian gradient G satisfying
    /// φ(F + tΔ) = φ(F) + t·Tr(GΔ) + o(t) for Hermitian Δ.
    fn value_grad(&self, f: &HermitianOperator) -> (f64, HermitianOperator);
}

/// μ_{S,F}(s) = log Tr(S^{1-s} F^s). Returns -inf when the trace underflows
/// (orthogonal supports).
pub fn mu(s_op: &DensityOperator, f_op: &DensityOperator, s: f64) -> Result<f64, CqError> {
    if s_op.dim() != f_op.dim() {
        return Err(CqError::DimensionMismatch(format!(
            "μ: state dim {} vs reference dim {}",
            s_op.dim(),
            f_op.dim()
        )));
    }
    if !(0.0..1.0).contains(&s) {
        return Err(CqError::InvalidInput(format!("s = {s} outside [0, 1)")));
    }
    let a = frac_power(s_op.as_herm(), 1.0 - s)?;
    let b = frac_power(f_op.as_herm(), s)?;
    let t = a.trace_product(&b);
    if t <= TRACE_UNDERFLOW {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(t.ln())
}

/// The sphere-packing coefficient objective at fixed channel, composition,
/// and order. Precomputes S_x^{1-s} once.
pub struct E0Objective {
    fractional_states: Vec<HermitianOperator>,
    weights: Vec<f64>,
    order: RenyiOrder,
}

impl E0Objective {
    pub(crate) fn from_parts(
        fractional_states: Vec<HermitianOperator>,
        weights: Vec<f64>,
        order: RenyiOrder,
    ) -> Self {
        Self {
            fractional_states,
            weights,
            order,
        }
    }

    pub fn new(ch: &CQChannel, p: &Composition, rho: f64) -> Result<Self, CqError> {
        if p.len() != ch.alphabet_size() {
            return Err(CqError::DimensionMismatch(format!(
                "composition over {} symbols but channel has {}",
                p.len(),
                ch.alphabet_size()
            )));
        }
        let order = RenyiOrder::from_rho(rho)?;
        let fractional_states = ch
            .states()
            .iter()
            .map(|s| frac_power(s.as_herm(), 1.0 - order.s()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            fractional_states,
            weights: p.probs().to_vec(),
            order,
        })
    }

    pub fn dim(&self) -> usize {
        self.fractional_states[0].dim()
    }

    fn scale(&self) -> f64 {
        1.0 + self.order.rho()
    }

    /// Per-symbol traces t_x = Tr(S_x^{1-s} F^s) given the eigensystem of F.
    fn traces(&self, f_eig: &EigenSystem) -> Vec<f64> {
        let s = self.order.s();
        let powered: Vec<f64> = f_eig
            .eigenvalues
            .iter()
            .map(|&l| if l > 0.0 { l.powf(s) } else { 0.0 })
            .collect();
        self.fractional_states
            .iter()
            .map(|a| {
                let b = f_eig.eigenvectors.rotate_into_basis(a);
                (0..b.dim()).map(|i| b.get(i, i).re * powered[i]).sum()
            })
            .collect()
    }
}

impl DensityObjective for E0Objective {
    fn value(&self, f: &HermitianOperator) -> f64 {
        let eig = match eig_hermitian(f) {
            Ok(e) => e,
            Err(_) => return f64::INFINITY,
        };
        let traces = self.traces(&eig);
        let mut acc = 0.0;
        for (x, &t) in traces.iter().enumerate() {
            let w = self.weights[x];
            if w == 0.0 {
                continue;
            }
            if t <= TRACE_UNDERFLOW {
                return f64::INFINITY;
            }
            acc -= w * t.ln();
        }
        self.scale() * acc
    }

    fn value_grad(&self, f: &HermitianOperator) -> (f64, HermitianOperator) {
        let d = f.dim();
        let s = self.order.s();
        let eig = match eig_hermitian(f) {
            Ok(e) => e,
            Err(_) => return (f64::INFINITY, HermitianOperator::zeros(d)),
        };
        let lambda = &eig.eigenvalues;
        // Divided differences of λ → λ^s (Daleckii–Krein), with the limit
        // s·λ^{s-1} on (near-)coincident pairs.
        let mut dd = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let li = lambda[i].max(0.0);
                let lj = lambda[j].max(0.0);
                dd[i * d + j] = if (li - lj).abs() < 1e-12 {
                    let l = 0.5 * (li + lj);
                    if l <= 0.0 {
                        0.0
                    } else {
                        s * l.powf(s - 1.0)
                    }
                } else {
                    (li.powf(s) - lj.powf(s)) / (li - lj)
                };
            }
        }
        let powered: Vec<f64> = lambda
            .iter()
            .map(|&l| if l > 0.0 { l.powf(s) } else { 0.0 })
            .collect();

        let mut value_acc = 0.0;
        let mut grad_basis = vec![Complex64::new(0.0, 0.0); d * d];
        let mut infinite = false;
        for (x, a) in self.fractional_states.iter().enumerate() {
            let w = self.weights[x];
            if w == 0.0 {
                continue;
            }
            let b = eig.eigenvectors.rotate_into_basis(a);
            let t: f64 = (0..d).map(|i| b.get(i, i).re * powered[i]).sum();
            if t <= TRACE_UNDERFLOW {
                infinite = true;
                continue;
            }
            value_acc -= w * t.ln();
            let coeff = self.scale() * w / t;
            for i in 0..d {
                for j in 0..d {
                    grad_basis[i * d + j] -= coeff * b.get(i, j) * dd[i * d + j];
                }
            }
        }
        if infinite {
            return (f64::INFINITY, HermitianOperator::zeros(d));
        }
        let grad = eig
            .eigenvectors
            .rotate_from_basis(&HermitianOperator::from_parts(d, grad_basis));
        (self.scale() * value_acc, grad)
    }
}

/// Weighted log-trace objective Σ_x w_x · log 1/Tr(A_x F) for fixed PSD A_x.
/// Linear inside the log, hence convex; covers the zero-error-rate objective
/// (A_x = range projectors) and the theta inner problem (A_x = |u_x⟩⟨u_x|).
pub struct LogTraceObjective {
    pub operators: Vec<HermitianOperator>,
    pub weights: Vec<f64>,
}

impl DensityObjective for LogTraceObjective {
    fn value(&self, f: &HermitianOperator) -> f64 {
        let mut acc = 0.0;
        for (a, &w) in self.operators.iter().zip(&self.weights) {
            if w == 0.0 {
                continue;
            }
            let t = a.trace_product(f);
            if t <= TRACE_UNDERFLOW {
                return f64::INFINITY;
            }
            acc -= w * t.ln();
        }
        acc
    }

    fn value_grad(&self, f: &HermitianOperator) -> (f64, HermitianOperator) {
        let d = f.dim();
        let mut acc = 0.0;
        let mut grad = HermitianOperator::zeros(d);
        for (a, &w) in self.operators.iter().zip(&self.weights) {
            if w == 0.0 {
                continue;
            }
            let t = a.trace_product(f);
            if t <= TRACE_UNDERFLOW {
                return (f64::INFINITY, HermitianOperator::zeros(d));
            }
            acc -= w * t.ln();
            grad = grad.add(&a.scale(-w / t));
        }
        (acc, grad)
    }
}

/// Smoothed max over log-trace terms: (1/T)·log Σ_x exp(-T·log Tr(A_x F)),
/// a convex upper proxy for max_x log 1/Tr(A_x F) within log(n)/T.
pub struct SmoothedMaxLogTrace {
    pub operators: Vec<HermitianOperator>,
    pub temperature: f64,
}

impl SmoothedMaxLogTrace {
    /// The terms g_x = -log Tr(A_x F) and their true max.
    pub fn terms(&self, f: &HermitianOperator) -> Vec<f64> {
        self.operators
            .iter()
            .map(|a| {
                let t = a.trace_product(f);
                if t <= TRACE_UNDERFLOW {
                    f64::INFINITY
                } else {
                    -t.ln()
                }
            })
            .collect()
    }
}

impl DensityObjective for SmoothedMaxLogTrace {
    fn value(&self, f: &HermitianOperator) -> f64 {
        let g = self.terms(f);
        log_sum_exp_scaled(&g, self.temperature)
    }

    fn value_grad(&self, f: &HermitianOperator) -> (f64, HermitianOperator) {
        let d = f.dim();
        let g = self.terms(f);
        if g.iter().any(|v| v.is_infinite()) {
            return (f64::INFINITY, HermitianOperator::zeros(d));
        }
        let value = log_sum_exp_scaled(&g, self.temperature);
        let gmax = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = g.iter().map(|&v| (self.temperature * (v - gmax)).exp()).collect();
        let wsum: f64 = weights.iter().sum();
        let mut grad = HermitianOperator::zeros(d);
        for (x, a) in self.operators.iter().enumerate() {
            let w = weights[x] / wsum;
            if w == 0.0 {
                continue;
            }
            let t = a.trace_product(f);
            grad = grad.add(&a.scale(-w / t));
        }
        (value, grad)
    }
}

/// (1/T) log Σ exp(T·g_x), stable against overflow.
pub fn log_sum_exp_scaled(g: &[f64], temperature: f64) -> f64 {
    let gmax = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if gmax.is_infinite() {
        return gmax;
    }
    let sum: f64 = g.iter().map(|&v| (temperature * (v - gmax)).exp()).sum();
    gmax + sum.ln() / temperature
}

/// Smoothed max over e0-type terms g_x(F) = -(1+ρ)·log Tr(S_x^{1-s} F^s);
/// used by the optimal-composition route (b) search.
pub struct SmoothedMaxE0 {
    inner: E0Objective,
    pub temperature: f64,
}

impl SmoothedMaxE0 {
    pub fn new(ch: &CQChannel, rho: f64, temperature: f64) -> Result<Self, CqError> {
        let n = ch.alphabet_size();
        let inner = E0Objective::new(ch, &Composition::uniform(n), rho)?;
        Ok(Self { inner, temperature })
    }

    /// Per-symbol terms g_x(F).
    pub fn terms(&self, f: &HermitianOperator) -> Vec<f64> {
        let eig = match eig_hermitian(f) {
            Ok(e) => e,
            Err(_) => return vec![f64::INFINITY; self.inner.fractional_states.len()],
        };
        self.inner
            .traces(&eig)
            .into_iter()
            .map(|t| {
                if t <= TRACE_UNDERFLOW {
                    f64::INFINITY
                } else {
                    -self.inner.scale() * t.ln()
                }
            })
            .collect()
    }
}

impl DensityObjective for SmoothedMaxE0 {
    fn value(&self, f: &HermitianOperator) -> f64 {
        log_sum_exp_scaled(&self.terms(f), self.temperature)
    }

    fn value_grad(&self, f: &HermitianOperator) -> (f64, HermitianOperator) {
        let d = f.dim();
        let g = self.terms(f);
        if g.iter().any(|v| v.is_infinite()) {
            return (f64::INFINITY, HermitianOperator::zeros(d));
        }
        let gmax = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = g.iter().map(|&v| (self.temperature * (v - gmax)).exp()).collect();
        let wsum: f64 = raw.iter().sum();
        // Gradient = Σ_x softmax_x · ∇g_x; reuse the weighted E0 gradient by
        // temporarily installing softmax weights.
        let weighted = E0Objective {
            fractional_states: self.inner.fractional_states.clone(),
            weights: raw.iter().map(|&w| w / wsum).collect(),
            order: self.inner.order,
        };
        let (_, grad) = weighted.value_grad(f);
        (log_sum_exp_scaled(&g, self.temperature), grad)
    }
}

/// Orthonormal basis of the joint range of a set of PSD operators; used to
/// restrict minimizations to the subspace the objective can see. Restriction
/// never hurts: for s in [0, 1], P F^s P ⪯ (P F P)^s, so projecting mass
/// into the span only increases every trace term. On the reduced space the
/// Rényi objective has an interior optimum (any direction orthogonal to the
/// support of F inside the span has positive overlap with some active
/// operator, and t^s has infinite slope at 0), which is where mirror
/// descent behaves best.
pub(crate) struct JointSpan {
    /// Orthonormal columns spanning the joint range, length = full dim each.
    basis: Vec<Vec<Complex64>>,
    full_dim: usize,
}

impl JointSpan {
    /// None when the joint range is the whole space (no reduction).
    pub(crate) fn of(ops: &[&HermitianOperator]) -> Option<JointSpan> {
        let full_dim = ops.first()?.dim();
        let mut sum = HermitianOperator::zeros(full_dim);
        for op in ops {
            sum = sum.add(op);
        }
        let eig = eig_hermitian(&sum).ok()?;
        let lmax = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
        if lmax <= 0.0 {
            return None;
        }
        let tau = crate::herm::RANK_TOL_DEFAULT * lmax;
        let basis: Vec<Vec<Complex64>> = (0..full_dim)
            .filter(|&k| eig.eigenvalues[k] > tau)
            .map(|k| eig.eigenvectors.column(k))
            .collect();
        if basis.len() == full_dim {
            return None;
        }
        Some(JointSpan { basis, full_dim })
    }

    pub(crate) fn dim(&self) -> usize {
        self.basis.len()
    }

    /// W† A W: the operator seen from inside the span.
    pub(crate) fn reduce(&self, a: &HermitianOperator) -> HermitianOperator {
        let d = self.dim();
        let applied: Vec<Vec<Complex64>> = self.basis.iter().map(|u| a.apply(u)).collect();
        let mut data = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                data[i * d + j] = crate::herm::cvec::inner(&self.basis[i], &applied[j]);
            }
        }
        HermitianOperator::from_parts(d, data)
    }

    /// W A W†: embed a reduced operator back into the full space.
    pub(crate) fn embed(&self, a: &HermitianOperator) -> HermitianOperator {
        let d = self.dim();
        debug_assert_eq!(a.dim(), d);
        let mut data = vec![Complex64::new(0.0, 0.0); self.full_dim * self.full_dim];
        for i in 0..self.full_dim {
            for j in 0..self.full_dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for p in 0..d {
                    for q in 0..d {
                        acc += self.basis[p][i] * a.get(p, q) * self.basis[q][j].conj();
                    }
                }
                data[i * self.full_dim + j] = acc;
            }
        }
        HermitianOperator::from_parts(self.full_dim, data)
    }
}

/// E0 objective value at a given F (nats); +inf when an active term has zero
/// overlap with F.
pub fn e0_objective(
    f: &DensityOperator,
    ch: &CQChannel,
    p: &Composition,
    rho: f64,
) -> Result<f64, CqError> {
    if f.dim() != ch.dim() {
        return Err(CqError::DimensionMismatch(format!(
            "F dim {} vs channel dim {}",
            f.dim(),
            ch.dim()
        )));
    }
    Ok(E0Objective::new(ch, p, rho)?.value(f.as_herm()))
}

/// Fréchet gradient of the E0 objective at a strictly positive F.
pub fn e0_gradient(
    f: &DensityOperator,
    ch: &CQChannel,
    p: &Composition,
    rho: f64,
) -> Result<HermitianOperator, CqError> {
    if f.dim() != ch.dim() {
        return Err(CqError::DimensionMismatch(format!(
            "F dim {} vs channel dim {}",
            f.dim(),
            ch.dim()
        )));
    }
    let eig = eig_hermitian(f.as_herm())?;
    let lmin = eig.eigenvalues.last().copied().unwrap_or(0.0);
    if lmin < 1e-14 {
        return Err(CqError::InvalidInput(format!(
            "gradient needs strictly positive F, smallest eigenvalue {lmin:.3e}"
        )));
    }
    let (_, grad) = E0Objective::new(ch, p, rho)?.value_grad(f.as_herm());
    Ok(grad)
}

/// Minimize a convex [`DensityObjective`] over density operators by entropic
/// mirror descent: F ← exp(log F - η·G)/Tr(…) with a backtracking line
/// search. Iterates stay strictly positive; the optimum may still sit on the
/// boundary, which the iterates approach from the interior. Deterministic
/// given `cfg.seed`.
pub fn minimize_over_density<O: DensityObjective>(
    objective: &O,
    dim: usize,
    cfg: &SolverConfig,
) -> SolveReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<SolveReport> = None;
    let restarts = cfg.restarts.max(1);
    for restart in 0..restarts {
        let start = if restart == 0 {
            DensityOperator::maximally_mixed(dim)
        } else {
            random_interior_density(&mut rng, dim)
        };
        let report = mirror_descent(objective, start, cfg);
        let better = match &best {
            None => true,
            // Prefer certified runs when the values tie within float noise.
            Some(b) => {
                let tie = 1e-12 * b.value.abs().max(1.0);
                report.value < b.value - tie
                    || (report.value < b.value + tie && report.converged && !b.converged)
            }
        };
        if better {
            best = Some(report);
        }
    }
    best.expect("at least one restart")
}

/// Single mirror-descent run from an explicit starting point; used for
/// warm starts across temperature schedules.
pub fn minimize_from<O: DensityObjective>(
    objective: &O,
    start: DensityOperator,
    cfg: &SolverConfig,
) -> SolveReport {
    let dim = start.dim();
    let interior = enforce_floor(start.into_herm(), dim);
    mirror_descent(objective, DensityOperator::from_herm_unchecked(interior), cfg)
}

fn random_interior_density(rng: &mut ChaCha8Rng, dim: usize) -> DensityOperator {
    let mut x = vec![Complex64::new(0.0, 0.0); dim * dim];
    for v in x.iter_mut() {
        *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..dim {
                acc += x[i * dim + k] * x[j * dim + k].conj();
            }
            data[i * dim + j] = acc;
        }
    }
    let h = HermitianOperator::from_parts(dim, data);
    let tr = h.trace();
    // Blend toward the center so every start is safely interior.
    let mixed = h
        .scale(0.9 / tr)
        .add(&HermitianOperator::identity(dim).scale(0.1 / dim as f64));
    DensityOperator::from_herm_unchecked(mixed)
}

fn mirror_descent<O: DensityObjective>(
    objective: &O,
    start: DensityOperator,
    cfg: &SolverConfig,
) -> SolveReport {
    let dim = start.dim();
    let mut f = start.into_herm();
    let mut eta = cfg.step_init;
    let mut iterations = 0;
    let mut converged = false;
    let (mut value, mut grad) = objective.value_grad(&f);
    let mut residual = f64::INFINITY;
    let mut stall_jump_used = false;
    let mut stall_polish_used = false;
    let mut window_residual = f64::INFINITY;
    // Probe exhaustion: once a probe fails at the current iterate it cannot
    // succeed until the iterate moves, so its defect component is certified
    // value-irrelevant until then.
    let mut rotation_exhausted = false;
    let mut mass_exhausted = false;

    while iterations < cfg.max_iters {
        iterations += 1;
        if !value.is_finite() {
            // Interior restart: the start point had zero overlap somewhere.
            f = HermitianOperator::identity(dim).scale(1.0 / dim as f64);
            let vg = objective.value_grad(&f);
            value = vg.0;
            grad = vg.1;
            if !value.is_finite() {
                break;
            }
            continue;
        }

        let scale_tol = 1e-14 * value.abs().max(1.0);
        match kkt_breakdown(&f, &grad) {
            None => residual = f64::INFINITY,
            Some(k) => {
                // Support rotation defect: probe the worst plane with an
                // exact angle search. Mirror steps rotate across large
                // log-eigenvalue gaps too slowly to be useful. Probing is
                // worthwhile only when this defect is the bottleneck;
                // during bulk convergence the mirror steps are cheaper.
                let rotation_blocks = k.rotation_residual > cfg.grad_tol
                    && (k.face_residual <= cfg.grad_tol
                        || k.rotation_residual > 4.0 * k.face_residual);
                if rotation_blocks && !rotation_exhausted {
                    if let Some((i, j, phase)) = k.worst_rotation {
                        if let Ok(feig) = eig_hermitian(&f) {
                            let (pv, rotated) =
                                rotation_probe(objective, &feig, i, j, phase);
                            if pv < value - scale_tol {
                                let floored = enforce_floor(rotated, dim);
                                let vg = objective.value_grad(&floored);
                                f = floored;
                                value = vg.0;
                                grad = vg.1;
                                rotation_exhausted = false;
                                mass_exhausted = false;
                                continue;
                            }
                        }
                        rotation_exhausted = true;
                    }
                }
                // New-mass defect: probe the named outside direction with an
                // exact 1-D blend, the move that tunes an eigenvalue across
                // many decades at once.
                let mass_blocks = k.complementarity > cfg.grad_tol
                    && (k.face_residual <= cfg.grad_tol
                        || k.complementarity > 4.0 * k.face_residual);
                if mass_blocks && !mass_exhausted {
                    if let Some(v) = &k.worst_direction {
                        let (t, probe_value) = rank_one_probe(objective, &f, v);
                        if probe_value < value - scale_tol {
                            let blended = f
                                .scale(1.0 - t)
                                .add(&HermitianOperator::outer(v).scale(t));
                            let floored = enforce_floor(blended, dim);
                            let vg = objective.value_grad(&floored);
                            f = floored;
                            value = vg.0;
                            grad = vg.1;
                            rotation_exhausted = false;
                            mass_exhausted = false;
                            continue;
                        }
                        mass_exhausted = true;
                    }
                }
                let rot_part = if rotation_exhausted { 0.0 } else { k.rotation_residual };
                let mass_part = if mass_exhausted { 0.0 } else { k.complementarity };
                residual = k.face_residual.max(rot_part).max(mass_part);
                if residual <= cfg.grad_tol {
                    converged = true;
                    break;
                }
            }
        }
        #[cfg(debug_assertions)]
        if iterations % 250 == 0 && std::env::var_os("CQ_TRACE_SOLVER").is_some() {
            let spec = eig_hermitian(&f).map(|e| e.eigenvalues).unwrap_or_default();
            eprintln!("iter {iterations}: value={value:.15} res={residual:.3e} eta={eta:.3e} spec={spec:?}");
        }

        let log_f = match log_of(&f) {
            Some(l) => l,
            None => break,
        };

        // Backtracking: halve η until the step stops increasing the
        // objective. Equal-value steps are accepted on purpose: near a
        // boundary optimum they keep draining stray mass from the iterate,
        // which is what tightens the optimality certificate. The comparison
        // uses the raw candidate; the floor is applied only to the stored
        // iterate, so its tiny value bump cannot veto progress.
        let mut accepted = false;
        let mut trial_eta = eta;
        for _ in 0..70 {
            let candidate = exp_normalized(&log_f.sub(&grad.scale(trial_eta)));
            let cand_value = objective.value(&candidate);
            if cand_value.is_finite() && cand_value <= value + 1e-15 * value.abs().max(1.0) {
                let floored = enforce_floor(candidate, dim);
                let vg = objective.value_grad(&floored);
                f = floored;
                value = vg.0;
                grad = vg.1;
                eta = (trial_eta * 2.0).min(1e6);
                accepted = true;
                break;
            }
            trial_eta *= 0.5;
            if trial_eta < 1e-16 {
                break;
            }
        }
        if accepted {
            stall_jump_used = false;
            stall_polish_used = false;
            rotation_exhausted = false;
            mass_exhausted = false;
            if iterations % 25 == 0 && residual > cfg.grad_tol {
                // Periodic face jump: boundary optima are approached slowly
                // by mirror steps, but once the gradient has settled,
                // projecting the iterate onto the span of its minimal
                // eigendirections removes the stray mass in one move.
                if let Some((jf, jv, jg)) = face_jump(objective, &f, value, dim) {
                    f = jf;
                    value = jv;
                    grad = jg;
                }
            }
            if iterations % 50 == 0 {
                // First-order steps crawl on ill-conditioned faces; when a
                // 50-iteration window fails to halve the residual, close the
                // gap with the face-restricted Newton polish.
                if residual > cfg.grad_tol && residual > 0.5 * window_residual {
                    if let Some((jf, jv, jg)) = newton_polish(objective, &f, value, dim) {
                        f = jf;
                        value = jv;
                        grad = jg;
                    }
                }
                window_residual = residual;
            }
        } else {
            // Every step size increases the objective: numerically at the
            // minimum, possibly on a face. Try the face jump and the Newton
            // polish once per stall, then report what we have.
            if !stall_jump_used {
                if let Some((jf, jv, jg)) = face_jump(objective, &f, value, dim) {
                    stall_jump_used = true;
                    rotation_exhausted = false;
                    mass_exhausted = false;
                    f = jf;
                    value = jv;
                    grad = jg;
                    continue;
                }
                stall_jump_used = true;
            }
            if !stall_polish_used {
                if let Some((jf, jv, jg)) = newton_polish(objective, &f, value, dim) {
                    stall_polish_used = true;
                    rotation_exhausted = false;
                    mass_exhausted = false;
                    f = jf;
                    value = jv;
                    grad = jg;
                    continue;
                }
            }
            residual = first_order_residual(&f, &grad);
            converged = residual <= cfg.grad_tol;
            break;
        }
    }

    if !converged {
        residual = residual.min(first_order_residual(&f, &grad));
        converged = residual <= cfg.grad_tol;
    }
    SolveReport {
        value,
        argmin: DensityOperator::from_herm_unchecked(f),
        iterations,
        converged,
        first_order_residual: residual,
    }
}

/// Damped finite-difference Newton polish restricted to the face spanned by
/// the iterate's numerically nonzero eigendirections. Mirror descent is
/// first-order and crawls on ill-conditioned faces; the face is small at
/// desk scale, so a dense Newton step closes the last few digits of the
/// KKT residual in a handful of rounds. Every candidate is value-checked,
/// so a bad quadratic model can only waste time, never corrupt the run.
fn newton_polish<O: DensityObjective>(
    objective: &O,
    f: &HermitianOperator,
    value: f64,
    dim: usize,
) -> Option<(HermitianOperator, f64, HermitianOperator)> {
    const MAX_FACE: usize = 7;
    if !value.is_finite() {
        return None;
    }
    let feig = eig_hermitian(f).ok()?;
    let lmax = feig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    if lmax <= 0.0 {
        return None;
    }
    let tau = 1e-9 * lmax;
    let face: Vec<usize> = (0..dim)
        .filter(|&i| feig.eigenvalues[i] > tau)
        .collect();
    let df = face.len();
    if df == 0 || df > MAX_FACE {
        return None;
    }
    let k = df * df - 1;

    // Orthonormal traceless Hermitian basis of the face block, stored as
    // df×df matrices in face coordinates.
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(k);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for a in 0..df {
        for b in (a + 1)..df {
            let mut re = vec![Complex64::new(0.0, 0.0); df * df];
            re[a * df + b] = Complex64::new(inv_sqrt2, 0.0);
            re[b * df + a] = Complex64::new(inv_sqrt2, 0.0);
            basis.push(re);
            let mut im = vec![Complex64::new(0.0, 0.0); df * df];
            im[a * df + b] = Complex64::new(0.0, -inv_sqrt2);
            im[b * df + a] = Complex64::new(0.0, inv_sqrt2);
            basis.push(im);
        }
    }
    for a in 0..(df - 1) {
        // diag(1, .., 1, -(a+1), 0, ..)/norm over the first a+2 slots
        let mut d = vec![Complex64::new(0.0, 0.0); df * df];
        let norm = ((a + 1) as f64 * (a + 2) as f64).sqrt();
        for j in 0..=a {
            d[j * df + j] = Complex64::new(1.0 / norm, 0.0);
        }
        d[(a + 1) * df + (a + 1)] = Complex64::new(-((a + 1) as f64) / norm, 0.0);
        basis.push(d);
    }
    debug_assert_eq!(basis.len(), k);

    // Face block of F in face coordinates, renormalized and logged.
    let mut m0 = vec![Complex64::new(0.0, 0.0); df * df];
    let trace_face: f64 = face.iter().map(|&i| feig.eigenvalues[i]).sum();
    for (a, &i) in face.iter().enumerate() {
        m0[a * df + a] = Complex64::new(feig.eigenvalues[i] / trace_face, 0.0);
    }

    // Embedding of a face-coordinate Hermitian into the full space.
    let embed = |m: &HermitianOperator| -> HermitianOperator {
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for (a, &fa) in face.iter().enumerate() {
                    for (b, &fb) in face.iter().enumerate() {
                        acc += feig.eigenvectors.get(i, fa)
                            * m.get(a, b)
                            * feig.eigenvectors.get(j, fb).conj();
                    }
                }
                data[i * dim + j] = acc;
            }
        }
        HermitianOperator::from_parts(dim, data)
    };

    let log0 = {
        let m = HermitianOperator::from_parts(df, m0);
        let e = eig_hermitian(&m).ok()?;
        if e.eigenvalues.iter().any(|&l| l <= 0.0) {
            return None;
        }
        e.map_eigenvalues(f64::ln)
    };

    let value_at = |theta: &[f64]| -> f64 {
        let mut l = log0.clone();
        for (t, e) in theta.iter().zip(&basis) {
            if *t != 0.0 {
                let step = HermitianOperator::from_parts(df, e.clone()).scale(*t);
                l = l.add(&step);
            }
        }
        let m = exp_normalized(&l);
        objective.value(&embed(&m))
    };

    let mut best = f.clone();
    let mut best_value = value;
    let mut improved = false;
    let mut center = vec![0.0; k];
    let scale_tol = 1e-15 * value.abs().max(1.0);

    for _round in 0..4 {
        let v0 = value_at(&center);
        let h = 1e-4;
        let mut grad_fd = vec![0.0; k];
        let mut hess = vec![0.0; k * k];
        let mut probe = center.clone();
        let mut plus = vec![0.0; k];
        let mut minus = vec![0.0; k];
        for i in 0..k {
            probe[i] = center[i] + h;
            plus[i] = value_at(&probe);
            probe[i] = center[i] - h;
            minus[i] = value_at(&probe);
            probe[i] = center[i];
            grad_fd[i] = (plus[i] - minus[i]) / (2.0 * h);
            hess[i * k + i] = (plus[i] - 2.0 * v0 + minus[i]) / (h * h);
        }
        for i in 0..k {
            for j in (i + 1)..k {
                probe[i] += h;
                probe[j] += h;
                let vpp = value_at(&probe);
                probe[j] -= 2.0 * h;
                let vpm = value_at(&probe);
                probe[i] -= 2.0 * h;
                let vmm = value_at(&probe);
                probe[j] += 2.0 * h;
                let vmp = value_at(&probe);
                probe[i] += h;
                probe[j] -= h;
                let hij = (vpp - vpm - vmp + vmm) / (4.0 * h * h);
                hess[i * k + j] = hij;
                hess[j * k + i] = hij;
            }
        }

        let gnorm = grad_fd.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-13 {
            break;
        }
        let hnorm = hess
            .iter()
            .map(|x| x.abs())
            .fold(0.0, f64::max)
            .max(1e-12);
        let mut accepted_round = false;
        let mut damping = 1e-8 * hnorm;
        for _ in 0..12 {
            let mut a = hess.clone();
            for i in 0..k {
                a[i * k + i] += damping;
            }
            if let Some(delta) = solve_dense(&a, &grad_fd, k) {
                let candidate: Vec<f64> = center
                    .iter()
                    .zip(&delta)
                    .map(|(c, d)| c - d)
                    .collect();
                let vc = value_at(&candidate);
                if vc.is_finite() && vc <= v0 + scale_tol {
                    center = candidate;
                    if vc < best_value + scale_tol {
                        accepted_round = true;
                        improved = true;
                    }
                    break;
                }
            }
            damping *= 10.0;
        }
        if !accepted_round {
            break;
        }
    }

    if improved {
        let mut l = log0;
        for (t, e) in center.iter().zip(&basis) {
            if *t != 0.0 {
                let step = HermitianOperator::from_parts(df, e.clone()).scale(*t);
                l = l.add(&step);
            }
        }
        let m = exp_normalized(&l);
        let candidate = embed(&m);
        let cand_value = objective.value(&candidate);
        if cand_value.is_finite() && cand_value <= value + scale_tol {
            let floored = enforce_floor(candidate, dim);
            let (v, g) = objective.value_grad(&floored);
            best = floored;
            best_value = v;
            let _ = best_value;
            return Some((best, v, g));
        }
    }
    None
}

/// Dense Gaussian elimination with partial pivoting for the small Newton
/// systems; returns None on singularity.
fn solve_dense(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if m[row * n + col].abs() > m[pivot * n + col].abs() {
                pivot = row;
            }
        }
        if m[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                m.swap(col * n + j, pivot * n + j);
            }
            rhs.swap(col, pivot);
        }
        let diag = m[col * n + col];
        for row in (col + 1)..n {
            let factor = m[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                m[row * n + j] -= factor * m[col * n + j];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for j in (row + 1)..n {
            acc -= m[row * n + j] * x[j];
        }
        x[row] = acc / m[row * n + row];
    }
    Some(x)
}

/// Project the iterate onto the span of the gradient's near-minimal
/// eigendirections, at increasing cut thresholds, and return the first
/// non-increasing candidate. At a boundary optimum the minimizer lives
/// exactly on that face, so the jump removes stray mass the multiplicative
/// updates would take thousands of iterations to drain.
fn face_jump<O: DensityObjective>(
    objective: &O,
    f: &HermitianOperator,
    value: f64,
    dim: usize,
) -> Option<(HermitianOperator, f64, HermitianOperator)> {
    if !value.is_finite() {
        return None;
    }
    let (_, grad) = objective.value_grad(f);
    let geig = eig_hermitian(&grad).ok()?;
    let gmin = *geig.eigenvalues.last()?;
    let spread = geig.eigenvalues.first()? - gmin;
    if spread <= 0.0 {
        return None;
    }
    for delta in [1e-10, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2] {
        let threshold = gmin + f64::max(delta, 1e-12 * spread);
        let keep: Vec<f64> = geig
            .eigenvalues
            .iter()
            .map(|&g| if g <= threshold { 1.0 } else { 0.0 })
            .collect();
        if keep.iter().all(|&k| k == 1.0) {
            continue;
        }
        // P·F·P computed in the gradient eigenbasis, where P is diagonal.
        let f_basis = geig.eigenvectors.rotate_into_basis(f);
        let mut cut = f_basis.clone();
        for i in 0..dim {
            for j in 0..dim {
                let w = keep[i] * keep[j];
                cut.set(i, j, f_basis.get(i, j) * w);
            }
        }
        let pfp = geig.eigenvectors.rotate_from_basis(&cut);
        let trace = pfp.trace();
        if trace <= 1e-14 {
            continue;
        }
        let candidate = pfp.scale(1.0 / trace);
        let cand_value = objective.value(&candidate);
        if cand_value.is_finite() && cand_value <= value + 1e-15 * value.abs().max(1.0) {
            let floored = enforce_floor(candidate, dim);
            let (v, g) = objective.value_grad(&floored);
            return Some((floored, v, g));
        }
    }
    None
}

/// Split KKT diagnostics on the density simplex. Optimality fails in three
/// distinguishable ways, each with its own defect measure and its own
/// decisive corrective move:
/// mass imbalance on the support (mirror steps), support misalignment
/// (plane rotations), and missing mass outside the support (rank-one
/// blends).
struct KktBreakdown {
    /// Mass-weighted stationarity ‖F^{1/2}(G - c·Id)F^{1/2}‖_F with
    /// c = Tr(G·F): the first-order decrease rate available to a
    /// multiplicative step. Weighting by the mass keeps directions whose
    /// value impact sits below float resolution from blocking convergence.
    face_residual: f64,
    /// Commutator norm ‖[F, G]‖_F: the first-order decrease rate available
    /// to a rotation of the support, which mirror steps crawl across large
    /// log-eigenvalue gaps.
    rotation_residual: f64,
    /// The plane (i, j, phase) with the largest rotational defect
    /// |λ_i - λ_j|·|G_ij|, in F's eigenbasis.
    worst_rotation: Option<(usize, usize, Complex64)>,
    /// Off-face complementarity defect max(0, c - λ_min(G_off)) over the
    /// numerically massless directions.
    complementarity: f64,
    /// Eigenvector (full coordinates) attaining the off-face minimum.
    worst_direction: Option<Vec<Complex64>>,
}

/// Projected first-order (KKT) analysis. With c = Tr(G·F), optimality needs
/// G = c·Id on the support of F and G ⪰ c·Id elsewhere. The first part is
/// measured in the mass-weighted norm, the second on the numerically
/// massless block, which also names the most promising outside direction so
/// the caller can probe it with an exact line search.
fn kkt_breakdown(f: &HermitianOperator, grad: &HermitianOperator) -> Option<KktBreakdown> {
    let dim = f.dim();
    let feig = eig_hermitian(f).ok()?;
    let lmax = feig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    if lmax <= 0.0 {
        return None;
    }
    let tau = 1e-9 * lmax;
    let gb = feig.eigenvectors.rotate_into_basis(grad);
    let lam: Vec<f64> = feig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let c: f64 = (0..dim).map(|i| lam[i] * gb.get(i, i).re).sum();

    let mut weighted_sq = 0.0;
    let mut rotation_sq = 0.0;
    let mut worst_rotation = None;
    let mut worst_rotation_weight = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let target = if i == j { c } else { 0.0 };
            weighted_sq += lam[i] * lam[j] * (gb.get(i, j) - target).norm_sqr();
            if i < j {
                let gap = (lam[i] - lam[j]).abs();
                let g_ij = gb.get(i, j);
                rotation_sq += 2.0 * gap * gap * g_ij.norm_sqr();
                let weight = gap * g_ij.norm();
                if weight > worst_rotation_weight {
                    worst_rotation_weight = weight;
                    let mag = g_ij.norm();
                    let phase = if mag > 0.0 {
                        g_ij / mag
                    } else {
                        Complex64::new(1.0, 0.0)
                    };
                    worst_rotation = Some((i, j, phase));
                }
            }
        }
    }
    let face_residual = weighted_sq.sqrt();
    let rotation_residual = rotation_sq.sqrt();

    let off: Vec<usize> = (0..dim).filter(|&i| feig.eigenvalues[i] <= tau).collect();
    let mut complementarity = 0.0;
    let mut worst_direction = None;
    if !off.is_empty() {
        let m = off.len();
        let mut block = vec![Complex64::new(0.0, 0.0); m * m];
        for (a, &i) in off.iter().enumerate() {
            for (b, &j) in off.iter().enumerate() {
                block[a * m + b] = gb.get(i, j);
            }
        }
        let block = HermitianOperator::from_parts(m, block);
        let beig = eig_hermitian(&block).ok()?;
        let lmin = beig.eigenvalues.last().copied().unwrap_or(0.0);
        complementarity = (c - lmin).max(0.0);
        if complementarity > 0.0 {
            // Lift the minimizing block eigenvector to full coordinates.
            let sub = beig.eigenvectors.column(m - 1);
            let mut v = vec![Complex64::new(0.0, 0.0); dim];
            for (a, &i) in off.iter().enumerate() {
                let col = feig.eigenvectors.column(i);
                for (vk, ck) in v.iter_mut().zip(&col) {
                    *vk += sub[a] * ck;
                }
            }
            crate::herm::cvec::normalize(&mut v);
            worst_direction = Some(v);
        }
    }
    Some(KktBreakdown {
        face_residual,
        rotation_residual,
        worst_rotation,
        complementarity,
        worst_direction,
    })
}

/// Exact 1-D minimization of the objective along a rotation of F in the
/// (i, j) eigenplane, with the phase taken from the gradient entry. The
/// spectrum is preserved; only the support turns. Returns the best value
/// found together with the rotated operator.
fn rotation_probe<O: DensityObjective>(
    objective: &O,
    feig: &EigenSystem,
    i: usize,
    j: usize,
    phase: Complex64,
) -> (f64, HermitianOperator) {
    let dim = feig.eigenvalues.len();
    let li = feig.eigenvalues[i].max(0.0);
    let lj = feig.eigenvalues[j].max(0.0);
    let rotated = |theta: f64| -> HermitianOperator {
        let (s, c) = theta.sin_cos();
        let mut d = HermitianOperator::zeros(dim);
        for k in 0..dim {
            if k != i && k != j {
                d.set(k, k, Complex64::new(feig.eigenvalues[k].max(0.0), 0.0));
            }
        }
        d.set(i, i, Complex64::new(li * c * c + lj * s * s, 0.0));
        d.set(j, j, Complex64::new(li * s * s + lj * c * c, 0.0));
        let off = (li - lj) * c * s * phase;
        d.set(i, j, off);
        d.set(j, i, off.conj());
        feig.eigenvectors.rotate_from_basis(&d)
    };
    let eval = |theta: f64| objective.value(&rotated(theta));
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut best = (eval(0.0), 0.0f64);
    for (mut a, mut b) in [(-0.9f64, 0.0f64), (0.0f64, 0.9f64)] {
        let mut x1 = b - inv_phi * (b - a);
        let mut x2 = a + inv_phi * (b - a);
        let mut f1 = eval(x1);
        let mut f2 = eval(x2);
        for _ in 0..50 {
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = eval(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = eval(x2);
            }
            if b - a < 1e-14 {
                break;
            }
        }
        let (fv, xv) = if f1 <= f2 { (f1, x1) } else { (f2, x2) };
        if fv < best.0 {
            best = (fv, xv);
        }
    }
    (best.0, rotated(best.1))
}

fn first_order_residual(f: &HermitianOperator, grad: &HermitianOperator) -> f64 {
    match kkt_breakdown(f, grad) {
        Some(k) => k.face_residual.max(k.complementarity),
        None => f64::INFINITY,
    }
}

/// Exact 1-D minimization of φ((1-t)F + t·vv†) by golden section; returns
/// the best (t, value) for t in (0, 1). The path is linear in F, so the
/// section search is valid for convex objectives. This is the move that can
/// tune an eigenvalue to any scale in one shot, where multiplicative
/// updates would need thousands of iterations.
fn rank_one_probe<O: DensityObjective>(
    objective: &O,
    f: &HermitianOperator,
    v: &[Complex64],
) -> (f64, f64) {
    let vvt = HermitianOperator::outer(v);
    let eval = |t: f64| -> f64 { objective.value(&f.scale(1.0 - t).add(&vvt.scale(t))) };
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut a = 0.0f64;
    let mut b = 0.999f64;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    for _ in 0..70 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = eval(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = eval(x2);
        }
        if b - a < 1e-18 {
            break;
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn log_of(f: &HermitianOperator) -> Option<HermitianOperator> {
    let eig = eig_hermitian(f).ok()?;
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return None;
    }
    Some(eig.map_eigenvalues(f64::ln))
}

/// exp(H) normalized to unit trace, computed with a spectral shift so the
/// exponentials stay in range.
fn exp_normalized(h: &HermitianOperator) -> HermitianOperator {
    let eig = eig_hermitian(h).expect("exp of Hermitian");
    let shift = eig.eigenvalues.first().copied().unwrap_or(0.0);
    let exps: Vec<f64> = eig.eigenvalues.iter().map(|&l| (l - shift).exp()).collect();
    let total: f64 = exps.iter().sum();
    let normalized: Vec<f64> = exps.iter().map(|&e| e / total).collect();
    eig.eigenvectors.conjugate_diag(&normalized)
}

/// Re-center iterates whose smallest eigenvalue collapses below 1e-14, so
/// the next log/gradient stays well defined.
fn enforce_floor(f: HermitianOperator, dim: usize) -> HermitianOperator {
    let min_eig = eig_hermitian(&f)
        .map(|e| e.eigenvalues.last().copied().unwrap_or(0.0))
        .unwrap_or(0.0);
    if min_eig < 1e-14 {
        f.scale(1.0 - 1e-12)
            .add(&HermitianOperator::identity(dim).scale(1e-12 / dim as f64))
    } else {
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::classical_embed;
    use crate::herm::cvec;

    fn bsc(eps: f64) -> CQChannel {
        classical_embed(&[vec![1.0 - eps, eps], vec![eps, 1.0 - eps]]).unwrap()
    }

    fn random_pure_channel(rng: &mut ChaCha8Rng, dim: usize, inputs: usize) -> CQChannel {
        let states = (0..inputs)
            .map(|_| {
                let mut v: Vec<Complex64> = (0..dim)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                cvec::normalize(&mut v);
                DensityOperator::pure_state(&v).unwrap()
            })
            .collect();
        CQChannel::new(states).unwrap()
    }

    #[test]
    fn mu_self_is_zero() {
        let f = DensityOperator::new(HermitianOperator::from_diag(&[0.3, 0.7])).unwrap();
        for s in [0.0, 0.25, 0.5, 0.9] {
            let v = mu(&f, &f, s).unwrap();
            assert!(v.abs() < 1e-12, "s={s}: μ(S,S)={v}");
        }
    }

    #[test]
    fn mu_orthogonal_is_neg_infinity() {
        let s = DensityOperator::new(HermitianOperator::from_diag(&[1.0, 0.0])).unwrap();
        let f = DensityOperator::new(HermitianOperator::from_diag(&[0.0, 1.0])).unwrap();
        assert_eq!(mu(&s, &f, 0.5).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn mu_diagonal_formula() {
        // S = I/2, F = diag(1,0): Tr(S^{1-s} F^s) = 0.5^{1-s}, μ = (s-1)·log 2.
        let s_op = DensityOperator::new(HermitianOperator::from_diag(&[0.5, 0.5])).unwrap();
        let f_op = DensityOperator::new(HermitianOperator::from_diag(&[1.0, 0.0])).unwrap();
        for s in [0.1, 0.5, 0.8] {
            let v = mu(&s_op, &f_op, s).unwrap();
            assert!((v - (s - 1.0) * 2.0f64.ln()).abs() < 1e-10, "s={s}");
        }
    }

    #[test]
    fn mu_nonpositive_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..30 {
            let dim = rng.gen_range(2..5);
            let a = crate::herm::tests::random_density(&mut rng, dim);
            let b = crate::herm::tests::random_density(&mut rng, dim);
            let s = rng.gen_range(0.05..0.95);
            let v = mu(&a, &b, s).unwrap();
            assert!(v <= 1e-10, "μ={v} must be ≤ 0");
        }
    }

    #[test]
    fn e0_objective_trivial_cases() {
        let ch = bsc(0.1);
        let f = DensityOperator::new(HermitianOperator::from_diag(&[0.5, 0.5])).unwrap();
        let p = Composition::uniform(2);
        // ρ = 0 with full-rank F: F^0 = I so every trace is 1.
        let v = e0_objective(&f, &ch, &p, 0.0).unwrap();
        assert!(v.abs() < 1e-10);

        // all S_x equal F.
        let ch_eq = classical_embed(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let v = e0_objective(&f, &ch_eq, &p, 1.7).unwrap();
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn e0_objective_bsc_diagonal_formula() {
        // Commuting case: φ(F) = -2 Σ_x 0.5·log Σ_y W(y|x)^{1/2} (1/2)^{1/2}.
        let ch = bsc(0.1);
        let f = DensityOperator::new(HermitianOperator::from_diag(&[0.5, 0.5])).unwrap();
        let p = Composition::uniform(2);
        let got = e0_objective(&f, &ch, &p, 1.0).unwrap();
        let per_x = (0.5f64.sqrt() * (0.9f64.sqrt() + 0.1f64.sqrt())).ln();
        let expected = -2.0 * per_x;
        assert!((got - expected).abs() < 1e-10, "got {got}, expected {expected}");
    }

    #[test]
    fn gradient_symmetric_point() {
        // All states equal F = I/d: gradient has equal trace components, so
        // the projected gradient on the trace-1 slice vanishes.
        let ch = classical_embed(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let f = DensityOperator::maximally_mixed(2);
        let p = Composition::uniform(2);
        let g = e0_gradient(&f, &ch, &p, 1.0).unwrap();
        let projected = g.sub(&HermitianOperator::identity(2).scale(g.trace() / 2.0));
        assert!(projected.frobenius_norm() < 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..20 {
            let dim = 2;
            let ch = random_pure_channel(&mut rng, dim, 2);
            let p = Composition::uniform(2);
            let rho = rng.gen_range(0.2..3.0);
            let f = crate::herm::tests::random_density(&mut rng, dim);
            // Blend interior to keep F strictly positive.
            let f = DensityOperator::from_herm_unchecked(
                f.as_herm()
                    .scale(0.8)
                    .add(&HermitianOperator::identity(dim).scale(0.2 / dim as f64)),
            );
            let grad = e0_gradient(&f, &ch, &p, rho).unwrap();
            // Random traceless Hermitian direction.
            let mut delta = crate::herm::tests::random_hermitian(&mut rng, dim);
            delta = delta.sub(&HermitianOperator::identity(dim).scale(delta.trace() / dim as f64));
            let t = 1e-5;
            let fp = DensityOperator::from_herm_unchecked(f.as_herm().add(&delta.scale(t)));
            let fm = DensityOperator::from_herm_unchecked(f.as_herm().sub(&delta.scale(t)));
            let vp = e0_objective(&fp, &ch, &p, rho).unwrap();
            let vm = e0_objective(&fm, &ch, &p, rho).unwrap();
            let fd = (vp - vm) / (2.0 * t);
            let analytic = grad.trace_product(&delta);
            let denom = analytic.abs().max(1e-6);
            assert!(
                (fd - analytic).abs() / denom < 1e-5,
                "trial {trial}: fd={fd}, analytic={analytic}"
            );
        }
    }

    #[test]
    fn gradient_requires_positive_f() {
        let ch = bsc(0.1);
        let f = DensityOperator::new(HermitianOperator::from_diag(&[1.0, 0.0])).unwrap();
        assert!(e0_gradient(&f, &ch, &Composition::uniform(2), 1.0).is_err());
    }

    #[test]
    fn gradient_diagonal_channel_stays_diagonal() {
        let ch = bsc(0.2);
        let f = DensityOperator::new(HermitianOperator::from_diag(&[0.6, 0.4])).unwrap();
        let g = e0_gradient(&f, &ch, &Composition::uniform(2), 1.3).unwrap();
        assert!(g.get(0, 1).norm() < 1e-12);
    }

    #[test]
    fn minimize_linear_log_objective() {
        // φ(F) = -log Tr(S F) for pure S has argmin F = S with value 0.
        let v = [Complex64::new(0.6, 0.0), Complex64::new(0.8, 0.0)];
        let s = HermitianOperator::outer(&v);
        let obj = LogTraceObjective {
            operators: vec![s.clone()],
            weights: vec![1.0],
        };
        let report = minimize_over_density(&obj, 2, &SolverConfig::default());
        assert!(report.value.abs() < 1e-7, "value {}", report.value);
        assert!(report.converged);
        assert!(report.argmin.as_herm().max_abs_diff(&s) < 1e-3);
    }

    #[test]
    fn minimize_degenerate_channel() {
        let ch = classical_embed(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let obj = E0Objective::new(&ch, &Composition::uniform(2), 1.0).unwrap();
        let report = minimize_over_density(&obj, 2, &SolverConfig::default());
        assert!(report.value.abs() < 1e-8);
    }

    #[test]
    fn minimize_is_start_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ch = random_pure_channel(&mut rng, 2, 3);
        let obj = E0Objective::new(&ch, &Composition::uniform(3), 1.0).unwrap();
        let mut values = Vec::new();
        for seed in 0..5 {
            let cfg = SolverConfig {
                restarts: 1,
                seed,
                ..Default::default()
            };
            // Different seeds start from different random points except for
            // restart 0; force randomness by using restarts = 2 and keeping
            // the best.
            let cfg2 = SolverConfig { restarts: 2, ..cfg };
            let report = minimize_over_density(&obj, 2, &cfg2);
            values.push(report.value);
        }
        let vmin = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let vmax = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(vmax - vmin < 1e-6, "values spread too far: {values:?}");
    }

    #[test]
    fn minimize_monotone_accepted_steps() {
        // The line search only accepts decreasing steps, so the final value
        // can never exceed the value at the initial iterate.
        let ch = bsc(0.1);
        let obj = E0Objective::new(&ch, &Composition::uniform(2), 2.0).unwrap();
        let start = DensityOperator::maximally_mixed(2);
        let v0 = obj.value(start.as_herm());
        let report = minimize_over_density(&obj, 2, &SolverConfig::default());
        assert!(report.value <= v0 + 1e-12);
    }

    #[test]
    fn convexity_probe_e0_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let dim = rng.gen_range(2..5);
            let inputs = rng.gen_range(2..4);
            let ch = random_pure_channel(&mut rng, dim, inputs);
            let p = Composition::uniform(inputs);
            let rho = rng.gen_range(0.3..2.5);
            let obj = E0Objective::new(&ch, &p, rho).unwrap();
            let f1 = crate::herm::tests::random_density(&mut rng, dim);
            let f2 = crate::herm::tests::random_density(&mut rng, dim);
            for t in [0.25, 0.5, 0.75] {
                let blend = DensityOperator::from_herm_unchecked(
                    f1.as_herm().scale(t).add(&f2.as_herm().scale(1.0 - t)),
                );
                let lhs = obj.value(blend.as_herm());
                let rhs = t * obj.value(f1.as_herm()) + (1.0 - t) * obj.value(f2.as_herm());
                if lhs.is_finite() && rhs.is_finite() {
                    assert!(lhs <= rhs + 1e-9, "convexity violated: {lhs} > {rhs}");
                }
            }
        }
    }

    #[test]
    fn renyi_order_bijection() {
        let o = RenyiOrder::from_rho(3.0).unwrap();
        assert!((o.s() - 0.75).abs() < 1e-15);
        assert!((o.s() / (1.0 - o.s()) - o.rho()).abs() < 1e-12);
        assert!(RenyiOrder::from_rho(-0.5).is_err());
    }
}
