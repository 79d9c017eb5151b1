//! Sphere-packing bound evaluators.
//!
//! `E_0^cc(ρ, P)` is the minimum of the Rényi objective over auxiliary
//! states, `E_sp^cc(R, P) = sup_{ρ≥0} [E_0^cc(ρ, P) - ρR]` bounds the error
//! exponent of constant-composition codes, and `R_inf(P)` is the smallest
//! rate at which that bound is finite. The conditional variants handle a
//! family of channels indexed by a state symbol with a conditional
//! composition constraint.

use serde::Serialize;

use crate::channel::{CQChannel, Composition, ConditionalComposition, PureStateChannel};
use crate::error::CqError;
use crate::herm::{DensityOperator, HermitianOperator, RANK_TOL_DEFAULT};
use crate::renyi::{
    minimize_from, minimize_over_density, E0Objective, JointSpan, LogTraceObjective, RenyiOrder,
    SmoothedMaxE0, SmoothedMaxLogTrace, SolverConfig,
};

/// Default upper end of the ρ search range.
pub const RHO_MAX_DEFAULT: f64 = 64.0;
/// Rates this far below R_inf(P) with a still-growing supremum are declared
/// infinite.
pub const INFINITE_SLACK: f64 = 1e-6;
/// Temperature schedule for smoothed min-max solves.
pub const TEMPERATURES: [f64; 4] = [10.0, 1e2, 1e3, 1e4];

const SCAN_POINTS: usize = 25;
const GOLDEN_ITERS: usize = 60;

/// Result of an E0-type minimization.
#[derive(Debug, Clone)]
pub struct E0Result {
    /// Value in nats, ≥ 0.
    pub value: f64,
    /// Minimizing auxiliary state.
    pub argmin: DensityOperator,
    pub converged: bool,
}

/// Result of a sphere-packing exponent evaluation at one rate.
#[derive(Debug, Clone)]
pub struct EspResult {
    /// Exponent in nats; `f64::INFINITY` when the rate is below the
    /// finiteness threshold.
    pub value: f64,
    pub finite: bool,
    /// Every inner minimization reached its gradient tolerance.
    pub converged: bool,
    /// ρ attaining the supremum, when finite.
    pub sup_rho: Option<f64>,
}

/// Result of a smoothed min-max computation.
#[derive(Debug, Clone)]
pub struct MinimaxResult {
    /// min over F of the true max over x, evaluated at the final iterate.
    pub value: f64,
    /// First-order residual of the final inner solve.
    pub inner_residual: f64,
    /// Gap between the smoothed and the true max at the final iterate.
    pub outer_gap: f64,
    pub converged: bool,
}

/// Both routes to the composition-optimized coefficient E0(ρ).
#[derive(Debug, Clone)]
pub struct OptCompResult {
    /// Reported value (route b: min over F of max over x).
    pub value: f64,
    /// Route a: max over P of min over F, by alternating mirror ascent.
    pub route_a: f64,
    pub route_b: f64,
    pub gap: f64,
    /// Set when the routes disagree by more than 1e-3.
    pub gap_warning: bool,
    /// Best composition found by route a.
    pub argmax_p: Composition,
    pub converged: bool,
}

/// Outcome of the inequality check E_sp^cc(R_inf(P), P) ≤ R_inf(P).
#[derive(Debug, Clone, Serialize)]
pub struct Theorem4Check {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// One (rate, exponent) sample of a bound curve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundPoint {
    pub rate: f64,
    pub exponent: f64,
    pub finite: bool,
}

/// Reproducibility metadata attached to emitted curves.
#[derive(Debug, Clone, Serialize)]
pub struct CurveMetadata {
    pub channel_hash: String,
    pub composition: Vec<f64>,
    pub solver: SolverConfig,
}

/// Bound curve: rates strictly increasing, exponents non-increasing.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCurve {
    pub points: Vec<BoundPoint>,
    pub metadata: CurveMetadata,
}

impl BoundCurve {
    /// Validate monotonicity: rates strictly increasing and exponents
    /// non-increasing within `tol`.
    pub fn new(points: Vec<BoundPoint>, metadata: CurveMetadata) -> Result<Self, CqError> {
        for w in points.windows(2) {
            if w[1].rate <= w[0].rate {
                return Err(CqError::InvalidInput(format!(
                    "curve rates must increase: {} then {}",
                    w[0].rate, w[1].rate
                )));
            }
            if w[1].exponent > w[0].exponent + 1e-6 {
                return Err(CqError::InvalidInput(format!(
                    "curve exponents must not increase: {} then {}",
                    w[0].exponent, w[1].exponent
                )));
            }
        }
        Ok(Self { points, metadata })
    }

    /// Assemble without the monotonicity validation; used by curve producers
    /// whose shape is not a sphere-packing exponent.
    pub fn unchecked(points: Vec<BoundPoint>, metadata: CurveMetadata) -> Self {
        Self { points, metadata }
    }

    /// CSV with the fixed header `R_nats,E_nats,finite`; infinite exponents
    /// print as `inf` with finite = 0. `scale` rescales emitted values
    /// (1/ln 2 for bits).
    pub fn to_csv(&self, scale: f64) -> String {
        let mut out = String::from("R_nats,E_nats,finite\n");
        for p in &self.points {
            let e = p.exponent * scale;
            out.push_str(&format!(
                "{},{},{}\n",
                p.rate * scale,
                e,
                if p.finite { 1 } else { 0 }
            ));
        }
        out
    }
}

/// FNV-1a fingerprint of the channel states; stable across runs.
pub fn channel_fingerprint(ch: &CQChannel) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    };
    eat(&(ch.alphabet_size() as u64).to_le_bytes());
    eat(&(ch.dim() as u64).to_le_bytes());
    for s in ch.states() {
        for z in s.entries() {
            eat(&z.re.to_le_bytes());
            eat(&z.im.to_le_bytes());
        }
    }
    format!("{hash:016x}")
}

/// E_0^cc(ρ, P): minimum over density operators F of the Rényi objective.
///
/// The minimization runs on the joint range of the weighted channel states,
/// where the optimum is interior; restriction is lossless since projecting F
/// into that span never decreases any trace term.
pub fn e0cc(
    ch: &CQChannel,
    rho: f64,
    p: &Composition,
    cfg: &SolverConfig,
) -> Result<E0Result, CqError> {
    if p.len() != ch.alphabet_size() {
        return Err(CqError::DimensionMismatch(format!(
            "composition over {} symbols but channel has {}",
            p.len(),
            ch.alphabet_size()
        )));
    }
    let active: Vec<&crate::herm::HermitianOperator> = ch
        .states()
        .iter()
        .zip(p.probs())
        .filter(|(_, &w)| w > 0.0)
        .map(|(s, _)| s.as_herm())
        .collect();
    if let Some(span) = JointSpan::of(&active) {
        let order = RenyiOrder::from_rho(rho)?;
        let a_ops = ch
            .states()
            .iter()
            .zip(p.probs())
            .map(|(s, &w)| {
                if w > 0.0 {
                    crate::herm::frac_power(&span.reduce(s.as_herm()), 1.0 - order.s())
                } else {
                    Ok(crate::herm::HermitianOperator::zeros(span.dim()))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let objective = E0Objective::from_parts(a_ops, p.probs().to_vec(), order);
        let report = minimize_over_density(&objective, span.dim(), cfg);
        return Ok(E0Result {
            value: report.value.max(0.0),
            argmin: DensityOperator::from_herm_unchecked(span.embed(report.argmin.as_herm())),
            converged: report.converged,
        });
    }
    let objective = E0Objective::new(ch, p, rho)?;
    let report = minimize_over_density(&objective, ch.dim(), cfg);
    Ok(E0Result {
        value: report.value.max(0.0),
        argmin: report.argmin,
        converged: report.converged,
    })
}

/// E_sp^cc(R, P) = sup_{ρ in [0, rho_max]} [E_0^cc(ρ, P) - ρR].
///
/// A log-spaced bracket scan guards against non-concavity in ρ; the best
/// bracket is then refined by golden section. When the scan is still growing
/// at `rho_max` and R sits below R_inf(P) by more than [`INFINITE_SLACK`],
/// the exponent is reported as infinite.
pub fn espcc(
    ch: &CQChannel,
    rate: f64,
    p: &Composition,
    cfg: &SolverConfig,
    rho_max: f64,
) -> Result<EspResult, CqError> {
    if !(rate > 0.0) {
        return Err(CqError::InvalidInput(format!("rate {rate} must be > 0")));
    }
    let r_inf = r_infinity(ch, p, cfg)?;
    let mut all_converged = r_inf.converged;
    let mut e0_at = |rho: f64| -> Result<f64, CqError> {
        if rho == 0.0 {
            return Ok(0.0);
        }
        let r = e0cc(ch, rho, p, cfg)?;
        all_converged &= r.converged;
        Ok(r.value)
    };
    let sup = sup_over_rho(&mut e0_at, rate, rho_max, r_inf.value)?;
    Ok(EspResult {
        converged: all_converged && sup.converged,
        ..sup
    })
}

/// Shared ρ-search used by the plain and the conditional exponent.
fn sup_over_rho(
    e0_at: &mut dyn FnMut(f64) -> Result<f64, CqError>,
    rate: f64,
    rho_max: f64,
    r_inf_value: f64,
) -> Result<EspResult, CqError> {
    let mut grid = vec![0.0f64];
    let lo = 1e-3f64;
    for k in 0..SCAN_POINTS {
        let t = k as f64 / (SCAN_POINTS - 1) as f64;
        grid.push(lo * (rho_max / lo).powf(t));
    }
    let mut vals = Vec::with_capacity(grid.len());
    for &rho in &grid {
        vals.push(e0_at(rho)? - rho * rate);
    }
    let best = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();

    let still_growing = best == grid.len() - 1 && vals[best] > vals[best - 1] + 1e-12;
    if still_growing && rate < r_inf_value - INFINITE_SLACK {
        return Ok(EspResult {
            value: f64::INFINITY,
            finite: false,
            converged: true,
            sup_rho: None,
        });
    }

    let mut a = if best == 0 { 0.0 } else { grid[best - 1] };
    let mut b = if best + 1 < grid.len() {
        grid[best + 1]
    } else {
        rho_max
    };
    // Golden-section refinement (maximization) on [a, b].
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = e0_at(x1)? - x1 * rate;
    let mut f2 = e0_at(x2)? - x2 * rate;
    for _ in 0..GOLDEN_ITERS {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = e0_at(x1)? - x1 * rate;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = e0_at(x2)? - x2 * rate;
        }
        if b - a < 1e-10 {
            break;
        }
    }
    let (sup_rho, refined) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    let (sup_rho, value) = if vals[best] > refined {
        (grid[best], vals[best])
    } else {
        (sup_rho, refined)
    };
    Ok(EspResult {
        value: value.max(0.0),
        finite: true,
        converged: true,
        sup_rho: Some(sup_rho),
    })
}

/// R_inf(P) = min_F [-Σ_x P(x) log Tr(S_x^0 F)], the smallest rate at which
/// the sphere-packing exponent is finite.
pub fn r_infinity(
    ch: &CQChannel,
    p: &Composition,
    cfg: &SolverConfig,
) -> Result<E0Result, CqError> {
    if p.len() != ch.alphabet_size() {
        return Err(CqError::DimensionMismatch(format!(
            "composition over {} symbols but channel has {}",
            p.len(),
            ch.alphabet_size()
        )));
    }
    let projectors = ch.range_projectors(RANK_TOL_DEFAULT)?;
    let active: Vec<&HermitianOperator> = projectors
        .iter()
        .zip(p.probs())
        .filter(|(_, &w)| w > 0.0)
        .map(|(pr, _)| pr.as_herm())
        .collect();
    if let Some(span) = JointSpan::of(&active) {
        let operators = projectors
            .iter()
            .zip(p.probs())
            .map(|(pr, &w)| {
                if w > 0.0 {
                    span.reduce(pr.as_herm())
                } else {
                    HermitianOperator::zeros(span.dim())
                }
            })
            .collect();
        let objective = LogTraceObjective {
            operators,
            weights: p.probs().to_vec(),
        };
        let report = minimize_over_density(&objective, span.dim(), cfg);
        return Ok(E0Result {
            value: report.value.max(0.0),
            argmin: DensityOperator::from_herm_unchecked(span.embed(report.argmin.as_herm())),
            converged: report.converged,
        });
    }
    let objective = LogTraceObjective {
        operators: projectors.into_iter().map(|pr| pr.as_herm().clone()).collect(),
        weights: p.probs().to_vec(),
    };
    let report = minimize_over_density(&objective, ch.dim(), cfg);
    Ok(E0Result {
        value: report.value.max(0.0),
        argmin: report.argmin,
        converged: report.converged,
    })
}

/// Composition-free threshold R_inf = min_F max_x log 1/Tr(S_x^0 F), via a
/// smoothed max with a decreasing-temperature schedule.
pub fn r_infinity_global(ch: &CQChannel, cfg: &SolverConfig) -> Result<MinimaxResult, CqError> {
    let mut projectors: Vec<HermitianOperator> = ch
        .range_projectors(RANK_TOL_DEFAULT)?
        .into_iter()
        .map(|p| p.as_herm().clone())
        .collect();
    let mut dim = ch.dim();
    if let Some(span) = JointSpan::of(&projectors.iter().collect::<Vec<_>>()) {
        projectors = projectors.iter().map(|pr| span.reduce(pr)).collect();
        dim = span.dim();
    }
    let mut f = DensityOperator::maximally_mixed(dim);
    let mut inner_residual = f64::INFINITY;
    let mut converged = true;
    let mut smoothed = f64::INFINITY;
    for &temperature in TEMPERATURES.iter() {
        let objective = SmoothedMaxLogTrace {
            operators: projectors.clone(),
            temperature,
        };
        let report = minimize_from(&objective, f, cfg);
        f = report.argmin;
        inner_residual = report.first_order_residual;
        converged &= report.converged;
        smoothed = report.value;
    }
    let final_obj = SmoothedMaxLogTrace {
        operators: projectors,
        temperature: *TEMPERATURES.last().unwrap(),
    };
    let true_max = final_obj
        .terms(f.as_herm())
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(MinimaxResult {
        value: true_max.max(0.0),
        inner_residual,
        outer_gap: (smoothed - true_max).abs(),
        converged,
    })
}

/// Composition-optimized coefficient E0(ρ) = max_P E_0^cc(ρ, P), computed by
/// two routes: (a) alternating mirror ascent on P with full inner solves,
/// (b) min over F of the smoothed max over x. Route (b) is returned; the gap
/// between the routes is reported and flagged above 1e-3.
pub fn e0_optimal_composition(
    ch: &CQChannel,
    rho: f64,
    cfg: &SolverConfig,
) -> Result<OptCompResult, CqError> {
    let n = ch.alphabet_size();
    let reduced;
    let ch = match JointSpan::of(&ch.states().iter().map(|s| s.as_herm()).collect::<Vec<_>>()) {
        Some(span) => {
            let states = ch
                .states()
                .iter()
                .map(|s| DensityOperator::from_herm_unchecked(span.reduce(s.as_herm())))
                .collect();
            reduced = CQChannel::new(states)?;
            &reduced
        }
        None => ch,
    };
    let dim = ch.dim();
    let mut converged = true;

    // Route (b): temperature schedule on the smoothed max, warm-started.
    let mut f = DensityOperator::maximally_mixed(dim);
    for &temperature in TEMPERATURES.iter() {
        let objective = SmoothedMaxE0::new(ch, rho, temperature)?;
        let report = minimize_from(&objective, f, cfg);
        f = report.argmin;
        converged &= report.converged;
    }
    let term_source = SmoothedMaxE0::new(ch, rho, *TEMPERATURES.last().unwrap())?;
    let route_b = term_source
        .terms(f.as_herm())
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);

    // Route (a): mirror ascent over the composition simplex. Each inner
    // solve gives h(P) = min_F φ(F, P), a valid lower bound for max-min.
    let mut p = vec![1.0 / n as f64; n];
    let mut route_a = 0.0f64;
    let mut best_p = p.clone();
    let inner_cfg = cfg.single_start();
    let mut warm = DensityOperator::maximally_mixed(dim);
    for iter in 0..40 {
        let comp = Composition::new(p.clone())?;
        let objective = E0Objective::new(ch, &comp, rho)?;
        let report = minimize_from(&objective, warm.clone(), &inner_cfg);
        warm = report.argmin.clone();
        converged &= report.converged;
        if report.value > route_a {
            route_a = report.value;
            best_p = p.clone();
        }
        let terms = term_source.terms(warm.as_herm());
        // Exponentiated-gradient ascent step on P.
        let eta = 1.0 / (1.0 + iter as f64 / 8.0);
        let tmax = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !tmax.is_finite() {
            break;
        }
        let mut z = 0.0;
        for (px, &t) in p.iter_mut().zip(&terms) {
            *px *= (eta * (t - tmax)).exp();
            z += *px;
        }
        for px in p.iter_mut() {
            *px /= z;
        }
    }
    let route_a = route_a.max(0.0);

    let gap = (route_a - route_b).abs();
    Ok(OptCompResult {
        value: route_b,
        route_a,
        route_b,
        gap,
        gap_warning: gap > 1e-3,
        argmax_p: Composition::new(best_p)?,
        converged,
    })
}

/// Check E_sp^cc(R_inf(P), P) ≤ R_inf(P) for a pure-state channel. The left
/// side is evaluated at R_inf(P) + 1e-9 to stay inside the finite region.
pub fn check_theorem4(
    ch: &PureStateChannel,
    p: &Composition,
    cfg: &SolverConfig,
) -> Result<Theorem4Check, CqError> {
    let cq = ch.to_cq();
    let r_inf = r_infinity(&cq, p, cfg)?;
    let rate = r_inf.value + 1e-9;
    let esp = espcc(&cq, rate, p, cfg, RHO_MAX_DEFAULT)?;
    Ok(Theorem4Check {
        lhs: esp.value,
        rhs: r_inf.value,
        holds: esp.value <= r_inf.value + 1e-6,
    })
}

/// Family of channels indexed by a state symbol `a`, with a composition over
/// states and a conditional composition V(x|a).
#[derive(Debug, Clone)]
pub struct CondChannelFamily {
    channels: Vec<CQChannel>,
    p_states: Composition,
    v: ConditionalComposition,
}

impl CondChannelFamily {
    pub fn new(
        channels: Vec<CQChannel>,
        p_states: Composition,
        v: ConditionalComposition,
    ) -> Result<Self, CqError> {
        if channels.is_empty() {
            return Err(CqError::InvalidInput("family needs at least one channel".into()));
        }
        let alphabet = channels[0].alphabet_size();
        if channels.iter().any(|c| c.alphabet_size() != alphabet) {
            return Err(CqError::DimensionMismatch(
                "family members must share the input alphabet".into(),
            ));
        }
        if p_states.len() != channels.len() || v.num_rows() != channels.len() {
            return Err(CqError::DimensionMismatch(
                "state composition and V rows must match the number of channels".into(),
            ));
        }
        if v.num_cols() != alphabet {
            return Err(CqError::DimensionMismatch(
                "V columns must match the channel input alphabet".into(),
            ));
        }
        Ok(Self {
            channels,
            p_states,
            v,
        })
    }

    pub fn num_states(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, a: usize) -> &CQChannel {
        &self.channels[a]
    }

    pub fn channels(&self) -> &[CQChannel] {
        &self.channels
    }

    pub fn p_states(&self) -> &Composition {
        &self.p_states
    }

    pub fn conditional(&self) -> &ConditionalComposition {
        &self.v
    }

    /// Active rows: (a, weight, row composition) for every a with positive
    /// weight. Errors when such a row is undefined.
    fn active_rows(&self) -> Result<Vec<(usize, f64, &Composition)>, CqError> {
        let mut out = Vec::new();
        for a in 0..self.num_states() {
            let w = self.p_states.prob(a);
            if w == 0.0 {
                continue;
            }
            match self.v.row(a).as_defined() {
                Some(c) => out.push((a, w, c)),
                None => {
                    return Err(CqError::InvalidInput(format!(
                        "conditional composition row {a} is undefined but P({a}) = {w}"
                    )))
                }
            }
        }
        Ok(out)
    }
}

/// E_0^cc({C_a}, ρ, P, V) = Σ_a P(a) · E_0^cc(C_a, ρ, V(·|a)).
pub fn e0cc_cond(fam: &CondChannelFamily, rho: f64, cfg: &SolverConfig) -> Result<(f64, bool), CqError> {
    let mut value = 0.0;
    let mut converged = true;
    for (a, w, row) in fam.active_rows()? {
        let r = e0cc(fam.channel(a), rho, row, cfg)?;
        value += w * r.value;
        converged &= r.converged;
    }
    Ok((value, converged))
}

/// E_sp^cc({C_a}, R, P, V) = sup_{ρ≥0} [E_0^cc({C_a}, ρ, P, V) - ρR].
pub fn espcc_cond(
    fam: &CondChannelFamily,
    rate: f64,
    cfg: &SolverConfig,
    rho_max: f64,
) -> Result<EspResult, CqError> {
    if !(rate > 0.0) {
        return Err(CqError::InvalidInput(format!("rate {rate} must be > 0")));
    }
    let r_inf = r_infinity_cond(fam, cfg)?;
    let mut all_converged = true;
    let mut e0_at = |rho: f64| -> Result<f64, CqError> {
        if rho == 0.0 {
            return Ok(0.0);
        }
        let (v, conv) = e0cc_cond(fam, rho, cfg)?;
        all_converged &= conv;
        Ok(v)
    };
    let sup = sup_over_rho(&mut e0_at, rate, rho_max, r_inf)?;
    Ok(EspResult {
        converged: all_converged && sup.converged,
        ..sup
    })
}

/// R_inf({C_a}, P, V) = Σ_a P(a) · R_inf(C_a, V(·|a)).
pub fn r_infinity_cond(fam: &CondChannelFamily, cfg: &SolverConfig) -> Result<f64, CqError> {
    let mut value = 0.0;
    for (a, w, row) in fam.active_rows()? {
        let r = r_infinity(fam.channel(a), row, cfg)?;
        value += w * r.value;
    }
    Ok(value)
}

/// Conditional analog of [`check_theorem4`] for families of pure-state
/// channels.
pub fn check_cond_theorem4(
    fam: &CondChannelFamily,
    cfg: &SolverConfig,
) -> Result<Theorem4Check, CqError> {
    for (a, ch) in fam.channels().iter().enumerate() {
        for (x, s) in ch.states().iter().enumerate() {
            let purity = s.trace_product(s.as_herm());
            if (purity - 1.0).abs() > 1e-9 {
                return Err(CqError::InvalidInput(format!(
                    "channel {a}, state {x} is not pure (Tr S² = {purity})"
                )));
            }
        }
    }
    let r_inf = r_infinity_cond(fam, cfg)?;
    let esp = espcc_cond(fam, r_inf + 1e-9, cfg, RHO_MAX_DEFAULT)?;
    Ok(Theorem4Check {
        lhs: esp.value,
        rhs: r_inf,
        holds: esp.value <= r_inf + 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::classical_embed;
    use crate::herm::cvec;

    fn bsc(eps: f64) -> CQChannel {
        classical_embed(&[vec![1.0 - eps, eps], vec![eps, 1.0 - eps]]).unwrap()
    }

    fn degenerate() -> CQChannel {
        classical_embed(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap()
    }

    /// Binary pure-state channel with real overlap `c`.
    pub(crate) fn binary_pure(c: f64) -> PureStateChannel {
        let a = ((1.0 + c) / 2.0).sqrt();
        let b = ((1.0 - c) / 2.0).sqrt();
        PureStateChannel::new(vec![
            cvec::from_reals(&[a, b]),
            cvec::from_reals(&[a, -b]),
        ])
        .unwrap()
    }

    fn fast_cfg() -> SolverConfig {
        SolverConfig {
            restarts: 1,
            ..Default::default()
        }
    }

    #[test]
    fn e0cc_zero_order_is_zero() {
        let r = e0cc(&bsc(0.1), 0.0, &Composition::uniform(2), &fast_cfg()).unwrap();
        assert!(r.value < 1e-9);
    }

    #[test]
    fn e0cc_degenerate_channel_is_zero() {
        for rho in [0.5, 1.0, 4.0] {
            let r = e0cc(&degenerate(), rho, &Composition::uniform(2), &fast_cfg()).unwrap();
            assert!(r.value < 1e-9, "rho={rho}: {}", r.value);
        }
    }

    #[test]
    fn e0cc_bsc_matches_scalar_grid() {
        // Commuting case: minimize over diagonal output distributions
        // -2 Σ_x 0.5 log Σ_y W(y|x)^{1/2} f(y)^{1/2} on a 1-D grid.
        let ch = bsc(0.1);
        let got = e0cc(&ch, 1.0, &Composition::uniform(2), &SolverConfig::default())
            .unwrap()
            .value;
        let w: [[f64; 2]; 2] = [[0.9, 0.1], [0.1, 0.9]];
        let mut best = f64::INFINITY;
        let steps = 100_000;
        for k in 1..steps {
            let f0 = k as f64 / steps as f64;
            let f1 = 1.0 - f0;
            let mut acc = 0.0;
            for row in &w {
                acc -= (row[0].sqrt() * f0.sqrt() + row[1].sqrt() * f1.sqrt()).ln();
            }
            best = best.min(acc);
        }
        assert!(
            (got - best).abs() < 1e-4,
            "solver {got} vs grid oracle {best}"
        );
    }

    #[test]
    fn e0cc_monotone_in_rho() {
        let ch = bsc(0.1);
        let p = Composition::uniform(2);
        let cfg = fast_cfg();
        let mut prev = 0.0;
        for rho in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let v = e0cc(&ch, rho, &p, &cfg).unwrap().value;
            assert!(v >= prev - 1e-7, "rho={rho}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn espcc_zero_for_degenerate_channel() {
        let r = espcc(
            &degenerate(),
            0.3,
            &Composition::uniform(2),
            &fast_cfg(),
            RHO_MAX_DEFAULT,
        )
        .unwrap();
        assert!(r.finite);
        assert!(r.value < 1e-9);
    }

    #[test]
    fn espcc_infinite_below_r_inf_for_orthogonal_pure_pair() {
        let ch = binary_pure(0.0).to_cq();
        let p = Composition::uniform(2);
        let r = espcc(&ch, 0.3, &p, &fast_cfg(), RHO_MAX_DEFAULT).unwrap();
        assert!(!r.finite, "R=0.3 < log 2 must be infinite: {}", r.value);
        assert_eq!(r.value, f64::INFINITY);
    }

    #[test]
    fn espcc_finite_above_r_inf() {
        let ch = binary_pure(0.0).to_cq();
        let p = Composition::uniform(2);
        let r = espcc(&ch, 2.0f64.ln() + 0.01, &p, &fast_cfg(), RHO_MAX_DEFAULT).unwrap();
        assert!(r.finite);
    }

    #[test]
    fn r_infinity_identical_pure_states() {
        let v = cvec::from_reals(&[1.0, 0.0]);
        let ch = CQChannel::new(vec![
            DensityOperator::pure_state(&v).unwrap(),
            DensityOperator::pure_state(&v).unwrap(),
        ])
        .unwrap();
        let r = r_infinity(&ch, &Composition::uniform(2), &fast_cfg()).unwrap();
        assert!(r.value < 1e-8);
    }

    #[test]
    fn r_infinity_orthogonal_pair_is_log2() {
        let ch = binary_pure(0.0).to_cq();
        let r = r_infinity(&ch, &Composition::uniform(2), &SolverConfig::default()).unwrap();
        assert!(
            (r.value - 2.0f64.ln()).abs() < 1e-4,
            "value {} vs log 2",
            r.value
        );
    }

    #[test]
    fn r_infinity_orthogonal_states_entropy() {
        // d orthogonal pure states: R_inf(P) = H(P) by the KKT argument
        // (maximize Σ P(x) log f_x subject to Σ f_x ≤ 1 gives f = P).
        let ch = classical_embed(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let p = Composition::new(vec![0.5, 0.3, 0.2]).unwrap();
        let r = r_infinity(&ch, &p, &SolverConfig::default()).unwrap();
        assert!(
            (r.value - p.entropy()).abs() < 1e-3,
            "value {} vs H(P) {}",
            r.value,
            p.entropy()
        );
    }

    #[test]
    fn r_infinity_global_cases() {
        // Single input: 0.
        let v = cvec::from_reals(&[1.0, 0.0]);
        let single = CQChannel::new(vec![DensityOperator::pure_state(&v).unwrap()]).unwrap();
        let r = r_infinity_global(&single, &fast_cfg()).unwrap();
        assert!(r.value < 1e-8);

        // d orthogonal pure states: log d.
        let ch = classical_embed(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let r = r_infinity_global(&ch, &SolverConfig::default()).unwrap();
        assert!((r.value - 2.0f64.ln()).abs() < 1e-3, "value {}", r.value);
    }

    #[test]
    fn r_infinity_dominates_composition_variant() {
        let ch = binary_pure(0.5).to_cq();
        let global = r_infinity_global(&ch, &SolverConfig::default()).unwrap();
        for p in [
            Composition::uniform(2),
            Composition::new(vec![0.3, 0.7]).unwrap(),
            Composition::new(vec![0.9, 0.1]).unwrap(),
        ] {
            let r = r_infinity(&ch, &p, &SolverConfig::default()).unwrap();
            assert!(r.value <= global.value + 1e-6);
        }
    }

    #[test]
    fn opt_comp_degenerate_is_zero() {
        let r = e0_optimal_composition(&degenerate(), 1.0, &fast_cfg()).unwrap();
        assert!(r.value < 1e-8);
        assert!(r.route_a < 1e-8);
    }

    #[test]
    fn opt_comp_symmetric_binary_pure() {
        // Symmetry forces the uniform composition; routes agree.
        let ch = binary_pure(0.5).to_cq();
        let r = e0_optimal_composition(&ch, 1.0, &SolverConfig::default()).unwrap();
        assert!(r.gap < 1e-4, "route gap {}", r.gap);
        let direct = e0cc(&ch, 1.0, &Composition::uniform(2), &SolverConfig::default())
            .unwrap()
            .value;
        assert!((r.value - direct).abs() < 1e-4, "{} vs {}", r.value, direct);
    }

    #[test]
    fn opt_comp_matches_gallager_for_bsc() {
        // Symmetric classical channel: E0(ρ) at the uniform input equals
        // -log Σ_y [Σ_x Q(x) W(y|x)^{1/(1+ρ)}]^{1+ρ}.
        let eps: f64 = 0.1;
        let rho = 1.0;
        let ch = bsc(eps);
        let r = e0_optimal_composition(&ch, rho, &SolverConfig::default()).unwrap();
        let term = |w0: f64, w1: f64| {
            (0.5 * w0.powf(1.0 / (1.0 + rho)) + 0.5 * w1.powf(1.0 / (1.0 + rho))).powf(1.0 + rho)
        };
        let gallager = -(term(1.0 - eps, eps) + term(eps, 1.0 - eps)).ln();
        assert!(
            (r.value - gallager).abs() < 1e-4,
            "value {} vs Gallager {gallager}",
            r.value
        );
    }

    #[test]
    fn theorem4_trivial_and_orthogonal() {
        let cfg = fast_cfg();
        // Identical states: everything is 0.
        let v = cvec::from_reals(&[1.0, 0.0]);
        let ch = PureStateChannel::new(vec![v.clone(), v.clone()]).unwrap();
        let t = check_theorem4(&ch, &Composition::uniform(2), &cfg).unwrap();
        assert!(t.lhs.abs() < 1e-6 && t.rhs.abs() < 1e-6 && t.holds);

        // Orthogonal binary pure channel: lhs ≤ log 2.
        let ch = binary_pure(0.0);
        let t = check_theorem4(&ch, &Composition::uniform(2), &cfg).unwrap();
        assert!(t.holds, "lhs {} rhs {}", t.lhs, t.rhs);
        assert!(t.lhs <= 2.0f64.ln() + 1e-6);
    }

    #[test]
    fn conditional_single_state_reduces() {
        let ch = bsc(0.1);
        let p = Composition::uniform(2);
        let fam = CondChannelFamily::new(
            vec![ch.clone()],
            Composition::new(vec![1.0]).unwrap(),
            ConditionalComposition::new(vec![p.probs().to_vec()]).unwrap(),
        )
        .unwrap();
        let cfg = fast_cfg();
        let (cond, _) = e0cc_cond(&fam, 1.0, &cfg).unwrap();
        let plain = e0cc(&ch, 1.0, &p, &cfg).unwrap().value;
        assert_eq!(cond, plain);

        let r_cond = r_infinity_cond(&fam, &cfg).unwrap();
        let r_plain = r_infinity(&ch, &p, &cfg).unwrap().value;
        assert_eq!(r_cond, r_plain);

        let esp_cond = espcc_cond(&fam, 0.2, &cfg, RHO_MAX_DEFAULT).unwrap();
        let esp_plain = espcc(&ch, 0.2, &p, &cfg, RHO_MAX_DEFAULT).unwrap();
        assert!((esp_cond.value - esp_plain.value).abs() < 1e-9);
    }

    #[test]
    fn conditional_two_channel_mean() {
        let ch1 = bsc(0.1);
        let ch2 = bsc(0.2);
        let p_a = Composition::uniform(2);
        let row = vec![0.5, 0.5];
        let v = ConditionalComposition::new(vec![row.clone(), row.clone()]).unwrap();
        let fam = CondChannelFamily::new(vec![ch1.clone(), ch2.clone()], p_a, v).unwrap();
        let cfg = fast_cfg();
        let (cond, _) = e0cc_cond(&fam, 1.5, &cfg).unwrap();
        let u = Composition::uniform(2);
        let v1 = e0cc(&ch1, 1.5, &u, &cfg).unwrap().value;
        let v2 = e0cc(&ch2, 1.5, &u, &cfg).unwrap().value;
        assert!((cond - 0.5 * (v1 + v2)).abs() < 1e-12);
    }

    #[test]
    fn conditional_undefined_row_with_weight_errors() {
        use crate::channel::CondRow;
        let ch = bsc(0.1);
        let v = ConditionalComposition::from_rows(
            vec![
                CondRow::Defined(Composition::uniform(2)),
                CondRow::Undefined,
            ],
            2,
        )
        .unwrap();
        let fam = CondChannelFamily::new(
            vec![ch.clone(), ch],
            Composition::uniform(2),
            v,
        )
        .unwrap();
        assert!(e0cc_cond(&fam, 1.0, &fast_cfg()).is_err());
    }

    #[test]
    fn conditional_orthogonal_pairs_log2() {
        // Two orthogonal-pair channels, uniform everything: each summand is
        // log 2, so the weighted sum is log 2.
        let ch = binary_pure(0.0).to_cq();
        let fam = CondChannelFamily::new(
            vec![ch.clone(), ch],
            Composition::uniform(2),
            ConditionalComposition::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap(),
        )
        .unwrap();
        let r = r_infinity_cond(&fam, &SolverConfig::default()).unwrap();
        assert!((r - 2.0f64.ln()).abs() < 2e-4, "value {r}");
    }

    #[test]
    fn conditional_degenerate_family_halves() {
        let orth = binary_pure(0.0).to_cq();
        let v = cvec::from_reals(&[1.0, 0.0]);
        let degen = CQChannel::new(vec![
            DensityOperator::pure_state(&v).unwrap(),
            DensityOperator::pure_state(&v).unwrap(),
        ])
        .unwrap();
        let fam = CondChannelFamily::new(
            vec![orth, degen],
            Composition::uniform(2),
            ConditionalComposition::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap(),
        )
        .unwrap();
        let r = r_infinity_cond(&fam, &SolverConfig::default()).unwrap();
        assert!((r - 0.5 * 2.0f64.ln()).abs() < 2e-4, "value {r}");
    }

    #[test]
    fn cond_theorem4_two_state_family() {
        let fam = CondChannelFamily::new(
            vec![binary_pure(0.3).to_cq(), binary_pure(0.6).to_cq()],
            Composition::uniform(2),
            ConditionalComposition::new(vec![vec![0.5, 0.5], vec![0.4, 0.6]]).unwrap(),
        )
        .unwrap();
        let t = check_cond_theorem4(&fam, &fast_cfg()).unwrap();
        assert!(t.holds, "lhs {} rhs {}", t.lhs, t.rhs);
    }

    #[test]
    fn cond_theorem4_rejects_mixed_states() {
        let fam = CondChannelFamily::new(
            vec![bsc(0.1)],
            Composition::new(vec![1.0]).unwrap(),
            ConditionalComposition::new(vec![vec![0.5, 0.5]]).unwrap(),
        )
        .unwrap();
        assert!(check_cond_theorem4(&fam, &fast_cfg()).is_err());
    }

    #[test]
    fn curve_validation() {
        let meta = CurveMetadata {
            channel_hash: "test".into(),
            composition: vec![0.5, 0.5],
            solver: SolverConfig::default(),
        };
        let good = vec![
            BoundPoint { rate: 0.1, exponent: f64::INFINITY, finite: false },
            BoundPoint { rate: 0.2, exponent: 0.5, finite: true },
            BoundPoint { rate: 0.3, exponent: 0.2, finite: true },
        ];
        assert!(BoundCurve::new(good, meta.clone()).is_ok());
        let bad = vec![
            BoundPoint { rate: 0.2, exponent: 0.1, finite: true },
            BoundPoint { rate: 0.3, exponent: 0.5, finite: true },
        ];
        assert!(BoundCurve::new(bad, meta).is_err());
    }

    #[test]
    fn curve_csv_format() {
        let meta = CurveMetadata {
            channel_hash: "test".into(),
            composition: vec![1.0],
            solver: SolverConfig::default(),
        };
        let curve = BoundCurve::new(
            vec![
                BoundPoint { rate: 0.25, exponent: f64::INFINITY, finite: false },
                BoundPoint { rate: 0.5, exponent: 0.125, finite: true },
            ],
            meta,
        )
        .unwrap();
        let csv = curve.to_csv(1.0);
        assert_eq!(csv, "R_nats,E_nats,finite\n0.25,inf,0\n0.5,0.125,1\n");
    }

    #[test]
    fn fingerprint_is_stable_and_distinguishes() {
        let a = bsc(0.1);
        let b = bsc(0.2);
        assert_eq!(channel_fingerprint(&a), channel_fingerprint(&a));
        assert_ne!(channel_fingerprint(&a), channel_fingerprint(&b));
    }

    #[test]
    fn espcc_consistency_with_threshold() {
        // Finite above R_inf + margin, infinite below R_inf - margin.
        let ch = binary_pure(0.5).to_cq();
        let p = Composition::uniform(2);
        let cfg = SolverConfig::default();
        let r_inf = r_infinity(&ch, &p, &cfg).unwrap().value;
        let above = espcc(&ch, r_inf + 1e-3, &p, &cfg, RHO_MAX_DEFAULT).unwrap();
        assert!(above.finite);
        let below = espcc(&ch, (r_inf - 1e-3).max(1e-4), &p, &cfg, RHO_MAX_DEFAULT).unwrap();
        assert!(!below.finite);
    }

    #[test]
    fn espcc_convex_non_increasing_in_rate() {
        let ch = bsc(0.1);
        let p = Composition::uniform(2);
        let cfg = fast_cfg();
        let rates = [0.1, 0.2, 0.3, 0.4, 0.5];
        let vals: Vec<f64> = rates
            .iter()
            .map(|&r| espcc(&ch, r, &p, &cfg, RHO_MAX_DEFAULT).unwrap().value)
            .collect();
        for w in vals.windows(2) {
            assert!(w[1] <= w[0] + 1e-6, "not non-increasing: {vals:?}");
        }
        // Three-point convexity probe.
        for i in 1..rates.len() - 1 {
            let mid = vals[i];
            let chord = 0.5 * (vals[i - 1] + vals[i + 1]);
            assert!(mid <= chord + 1e-6, "not convex at {i}: {vals:?}");
        }
    }
}
