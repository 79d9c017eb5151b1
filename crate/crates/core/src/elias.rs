//! Elias-type bounds for pure-state channels via admissible auxiliary
//! channels.
//!
//! For ρ ≥ 1 an auxiliary pure-state channel is admissible when its pairwise
//! overlaps are dominated by the original overlaps raised to 1/ρ. Feeding
//! admissible auxiliaries into the conditional sphere-packing bound, with a
//! conditional composition V fixing PV = P and a Blahut-style subcode
//! extraction, yields an upper bound on the reliability function and a bound
//! on the pairwise overlap exponent of codes.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{
    conditional_composition_of, CodeBlock, Composition, CondRow,
    ConditionalComposition, PureStateChannel, StateSequence,
};
use crate::error::CqError;
use crate::herm::{eig_hermitian, HermitianOperator};
use crate::renyi::SolverConfig;
use crate::sphere::{
    channel_fingerprint, espcc_cond, r_infinity_cond, BoundCurve, BoundPoint, CondChannelFamily,
    CurveMetadata, EspResult, RHO_MAX_DEFAULT,
};

/// Admissibility threshold on the overlap-domination violation.
pub const GAMMA_TOL: f64 = 1e-10;
/// Default slack ε subtracted from the rate argument.
pub const EPSILON_DEFAULT: f64 = 1e-4;

/// Admissibility certificate for an auxiliary gram against an original one:
/// |G̃_{xx'}| ≤ |G_{xx'}|^{1/ρ} for all pairs, within [`GAMMA_TOL`].
#[derive(Debug, Clone)]
pub struct GammaCertificate {
    pub rho: f64,
    pub original_gram: HermitianOperator,
    pub auxiliary_gram: HermitianOperator,
    /// max over pairs of |G̃_{xx'}| - |G_{xx'}|^{1/ρ}; admissible iff this is
    /// at most [`GAMMA_TOL`]. Zero when there are no off-diagonal pairs.
    pub max_violation: f64,
}

impl GammaCertificate {
    pub fn admissible(&self) -> bool {
        self.max_violation <= GAMMA_TOL
    }
}

/// Check overlap domination between two grams.
pub fn gamma_check(
    gram: &HermitianOperator,
    gram_tilde: &HermitianOperator,
    rho: f64,
) -> Result<GammaCertificate, CqError> {
    if rho < 1.0 || !rho.is_finite() {
        return Err(CqError::InvalidInput(format!(
            "admissibility is defined for ρ ≥ 1, got {rho}"
        )));
    }
    if gram.dim() != gram_tilde.dim() {
        return Err(CqError::DimensionMismatch(format!(
            "gram dims {} vs {}",
            gram.dim(),
            gram_tilde.dim()
        )));
    }
    for (label, g) in [("original", gram), ("auxiliary", gram_tilde)] {
        for x in 0..g.dim() {
            if (g.get(x, x).re - 1.0).abs() > 1e-9 {
                return Err(CqError::InvalidInput(format!(
                    "{label} gram diagonal entry {x} is {}",
                    g.get(x, x).re
                )));
            }
        }
        let eig = eig_hermitian(g)?;
        if eig.eigenvalues.last().copied().unwrap_or(0.0) < -1e-8 {
            return Err(CqError::InvalidInput(format!("{label} gram is not PSD")));
        }
    }
    let n = gram.dim();
    let mut max_violation: f64 = if n > 1 { f64::NEG_INFINITY } else { 0.0 };
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let target = gram.get(x, y).norm().powf(1.0 / rho);
            let actual = gram_tilde.get(x, y).norm();
            max_violation = max_violation.max(actual - target);
        }
    }
    Ok(GammaCertificate {
        rho,
        original_gram: gram.clone(),
        auxiliary_gram: gram_tilde.clone(),
        max_violation,
    })
}

/// Auxiliary channel built by [`construct_aux_channel`].
#[derive(Debug, Clone)]
pub struct AuxChannel {
    pub channel: PureStateChannel,
    pub certificate: GammaCertificate,
    /// Set when the repair bisection was exhausted and the identity gram was
    /// used instead.
    pub degraded: bool,
    /// Off-diagonal shrink factor that made the target gram feasible.
    pub gamma: f64,
}

/// Build an admissible auxiliary channel for order ρ from a gram matrix.
///
/// The target has entries |G_{xx'}|^{1/ρ} with the original phases. If that
/// matrix is not PSD, negative eigenvalues are clipped, the diagonal is
/// renormalized to 1, and the off-diagonals are scaled by the largest
/// γ ∈ (0, 1] (by bisection) that keeps the result PSD and admissible. The
/// final gram is factored into unit vectors by eigendecomposition.
pub fn construct_aux_channel(
    gram: &HermitianOperator,
    rho: f64,
    bisection_steps: usize,
) -> Result<AuxChannel, CqError> {
    if rho < 1.0 || !rho.is_finite() {
        return Err(CqError::InvalidInput(format!(
            "auxiliary channels are defined for ρ ≥ 1, got {rho}"
        )));
    }
    let n = gram.dim();
    // Validates unit diagonal and PSD-ness of the input gram.
    gamma_check(gram, gram, 1.0)?;

    // Entrywise target: original phases, powered magnitudes.
    let mut target = HermitianOperator::identity(n);
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let g = gram.get(x, y);
            let mag = g.norm();
            let entry = if mag == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                (g / mag) * mag.powf(1.0 / rho)
            };
            target.set(x, y, entry);
        }
    }
    let target = HermitianOperator::from_parts(n, target.entries().to_vec());

    let eig = eig_hermitian(&target)?;
    let lmax = eig.eigenvalues.first().copied().unwrap_or(0.0);
    let lmin = eig.eigenvalues.last().copied().unwrap_or(0.0);
    let (candidate, mut gamma) = if lmin >= -1e-12 * lmax.max(1.0) {
        (target, 1.0)
    } else {
        // Clip the spectrum, renormalize the diagonal back to 1.
        let clipped = eig.map_eigenvalues(|l| l.max(0.0));
        let mut diag_ok = true;
        let mut scales = vec![0.0; n];
        for x in 0..n {
            let dxx = clipped.get(x, x).re;
            if dxx <= 1e-12 {
                diag_ok = false;
                break;
            }
            scales[x] = 1.0 / dxx.sqrt();
        }
        if !diag_ok {
            return Ok(identity_fallback(gram, rho, n)?);
        }
        let mut renorm = vec![Complex64::new(0.0, 0.0); n * n];
        for x in 0..n {
            for y in 0..n {
                renorm[x * n + y] = clipped.get(x, y) * scales[x] * scales[y];
            }
        }
        let renorm = HermitianOperator::from_parts(n, renorm);

        // Largest γ with γ·C + (1-γ)·I both PSD and admissible. γ = 0 is the
        // identity gram, always feasible.
        let feasible = |g: f64| -> bool {
            let m = shrink_off_diagonal(&renorm, g);
            let eig = match eig_hermitian(&m) {
                Ok(e) => e,
                Err(_) => return false,
            };
            if eig.eigenvalues.last().copied().unwrap_or(0.0) < -1e-12 {
                return false;
            }
            match gamma_check(gram, &m, rho) {
                Ok(cert) => cert.max_violation <= GAMMA_TOL * 0.1,
                Err(_) => false,
            }
        };
        if feasible(1.0) {
            (renorm, 1.0)
        } else {
            let mut lo = 0.0;
            let mut hi = 1.0;
            for _ in 0..bisection_steps.max(1) {
                let mid = 0.5 * (lo + hi);
                if feasible(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if lo == 0.0 {
                return Ok(identity_fallback(gram, rho, n)?);
            }
            (shrink_off_diagonal(&renorm, lo), lo)
        }
    };
    if gamma > 1.0 {
        gamma = 1.0;
    }

    let channel = factor_gram(&candidate)?;
    let certificate = gamma_check(gram, &channel.gram(), rho)?;
    if !certificate.admissible() {
        return Ok(identity_fallback(gram, rho, n)?);
    }
    Ok(AuxChannel {
        channel,
        certificate,
        degraded: false,
        gamma,
    })
}

fn identity_fallback(gram: &HermitianOperator, rho: f64, n: usize) -> Result<AuxChannel, CqError> {
    let channel = factor_gram(&HermitianOperator::identity(n))?;
    let certificate = gamma_check(gram, &channel.gram(), rho)?;
    Ok(AuxChannel {
        channel,
        certificate,
        degraded: true,
        gamma: 0.0,
    })
}

fn shrink_off_diagonal(g: &HermitianOperator, gamma: f64) -> HermitianOperator {
    let n = g.dim();
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    for x in 0..n {
        for y in 0..n {
            data[x * n + y] = if x == y {
                Complex64::new(1.0, 0.0)
            } else {
                g.get(x, y) * gamma
            };
        }
    }
    HermitianOperator::from_parts(n, data)
}

/// Factor a PSD unit-diagonal gram into unit vectors: with G = VΛV†, take
/// ψ_x[k] = √λ_k · conj(V_{xk}), so ⟨ψ_x|ψ_y⟩ = G_{xy}.
fn factor_gram(gram: &HermitianOperator) -> Result<PureStateChannel, CqError> {
    let n = gram.dim();
    let eig = eig_hermitian(gram)?;
    let vectors: Vec<Vec<Complex64>> = (0..n)
        .map(|x| {
            let mut v: Vec<Complex64> = (0..n)
                .map(|k| {
                    let l = eig.eigenvalues[k].max(0.0);
                    eig.eigenvectors.get(x, k).conj() * l.sqrt()
                })
                .collect();
            // The diagonal is 1 up to clipping noise; normalize defensively.
            let norm = crate::herm::cvec::norm(&v);
            if norm > 0.0 {
                for z in v.iter_mut() {
                    *z /= norm;
                }
            }
            v
        })
        .collect();
    PureStateChannel::new(vectors)
}

/// Mutual information I(P, V) = Σ_{x,x'} P(x)V(x'|x) log[V(x'|x)/(PV)(x')]
/// in nats, with 0·log(0/q) = 0.
pub fn mutual_information(p: &Composition, v: &ConditionalComposition) -> Result<f64, CqError> {
    if p.len() != v.num_rows() {
        return Err(CqError::DimensionMismatch(format!(
            "composition over {} symbols, V has {} rows",
            p.len(),
            v.num_rows()
        )));
    }
    let cols = v.num_cols();
    let mut marginal = vec![0.0; cols];
    for x in 0..p.len() {
        let w = p.prob(x);
        if w == 0.0 {
            continue;
        }
        let row = v.row(x).as_defined().ok_or_else(|| {
            CqError::InvalidInput(format!("V row {x} undefined but P({x}) = {w}"))
        })?;
        for xp in 0..cols {
            marginal[xp] += w * row.prob(xp);
        }
    }
    let mut info = 0.0;
    for x in 0..p.len() {
        let w = p.prob(x);
        if w == 0.0 {
            continue;
        }
        let row = v.row(x).as_defined().unwrap();
        for xp in 0..cols {
            let vxx = row.prob(xp);
            if vxx > 0.0 && marginal[xp] > 0.0 {
                info += w * vxx * (vxx / marginal[xp]).ln();
            }
        }
    }
    Ok(info.max(0.0))
}

/// -(1/n) log max_{m≠m'} |Π_i ⟨ψ_{x_{m,i}}|ψ_{x_{m',i}}⟩|², accumulated in
/// the log domain; +inf when every codeword pair is orthogonal in at least
/// one position.
pub fn code_overlap_exponent(code: &CodeBlock, ch: &PureStateChannel) -> Result<f64, CqError> {
    if code.num_codewords() < 2 {
        return Err(CqError::InvalidInput(
            "overlap exponent needs at least two codewords".into(),
        ));
    }
    if code.alphabet_size() > ch.alphabet_size() {
        return Err(CqError::DimensionMismatch(format!(
            "code alphabet {} exceeds channel alphabet {}",
            code.alphabet_size(),
            ch.alphabet_size()
        )));
    }
    let n = code.block_length() as f64;
    let m = code.num_codewords();
    let mut best_log = f64::NEG_INFINITY;
    for a in 0..m {
        for b in (a + 1)..m {
            let mut log_overlap = 0.0f64;
            let mut orthogonal = false;
            for (&xa, &xb) in code.codeword(a).iter().zip(code.codeword(b)) {
                let g = ch.overlap(xa, xb).norm();
                if g <= 0.0 {
                    orthogonal = true;
                    break;
                }
                log_overlap += g.ln();
            }
            if !orthogonal {
                best_log = best_log.max(log_overlap);
            }
        }
    }
    if best_log == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    Ok((-2.0 / n) * best_log)
}

/// Subcode found by [`extract_subcode`]: an anchor sequence and the indices
/// of all codewords with exact conditional composition V from it.
#[derive(Debug, Clone)]
pub struct SubcodeWitness {
    pub anchor: StateSequence,
    pub v: ConditionalComposition,
    pub indices: Vec<usize>,
}

impl SubcodeWitness {
    /// `{"anchor": [...], "V": [[...]], "T": [...]}`; undefined V rows are
    /// null.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = (0..self.v.num_rows())
            .map(|a| match self.v.row(a) {
                CondRow::Defined(c) => serde_json::json!(c.probs()),
                CondRow::Undefined => serde_json::Value::Null,
            })
            .collect();
        serde_json::json!({
            "anchor": self.anchor.symbols(),
            "V": rows,
            "T": self.indices,
        })
    }
}

/// Search outcome: the best subcode size found (possibly 0 or 1 with no
/// witness) and the counting bound e^{n(R - I(P,V))} it is compared against.
#[derive(Debug, Clone)]
pub struct SubcodeSearch {
    /// Present only when a non-singleton subcode exists.
    pub witness: Option<SubcodeWitness>,
    pub best_size: usize,
    pub blahut_bound: f64,
}

const SUBCODE_MAX_N: usize = 16;
const SUBCODE_MAX_M: usize = 4096;
const SUBCODE_MAX_ALPHABET: usize = 4;
const SUBCODE_MAX_PAIRS: u128 = 5_000_000;

/// Exhaustive subcode extraction: over all anchor sequences whose integer
/// composition is closest to P (plus every codeword as a fast path), find
/// the largest set of codewords with exact conditional composition V from
/// the anchor.
pub fn extract_subcode(
    code: &CodeBlock,
    p: &Composition,
    v: &ConditionalComposition,
) -> Result<SubcodeSearch, CqError> {
    let n = code.block_length();
    let m = code.num_codewords();
    let k = code.alphabet_size();
    if n > SUBCODE_MAX_N || m > SUBCODE_MAX_M || k > SUBCODE_MAX_ALPHABET {
        return Err(CqError::InvalidInput(format!(
            "subcode search is desk-scale only: n ≤ {SUBCODE_MAX_N}, M ≤ {SUBCODE_MAX_M}, |X| ≤ {SUBCODE_MAX_ALPHABET}"
        )));
    }
    if p.len() != k || v.num_rows() != k || v.num_cols() != k {
        return Err(CqError::DimensionMismatch(
            "P and V must live on the code alphabet".into(),
        ));
    }

    // Integer counts closest to n·P (largest remainder).
    let counts = closest_counts(p.probs(), n);
    let class_size = multinomial(n, &counts);
    let pair_budget = class_size.saturating_mul(m as u128);
    if pair_budget > SUBCODE_MAX_PAIRS {
        return Err(CqError::InvalidInput(format!(
            "anchor class of size {class_size} × {m} codewords exceeds the exhaustive-search budget"
        )));
    }

    let mut best_size = 0usize;
    let mut best_anchor: Option<Vec<usize>> = None;
    let mut best_indices: Vec<usize> = Vec::new();

    let consider = |anchor: &[usize],
                        best_size: &mut usize,
                        best_anchor: &mut Option<Vec<usize>>,
                        best_indices: &mut Vec<usize>| {
        let indices = matching_codewords(code, anchor, k, v);
        if indices.len() > *best_size {
            *best_size = indices.len();
            *best_anchor = Some(anchor.to_vec());
            *best_indices = indices;
        }
    };

    // Fast path: codewords as anchors.
    for w in code.codewords() {
        consider(w, &mut best_size, &mut best_anchor, &mut best_indices);
    }
    // Exhaustive pass over the closest composition class.
    let mut anchor = Vec::with_capacity(n);
    let mut remaining = counts.clone();
    enumerate_class(&mut anchor, &mut remaining, n, &mut |a| {
        consider(a, &mut best_size, &mut best_anchor, &mut best_indices)
    });

    let info = mutual_information(p, v)?;
    let blahut_bound = ((n as f64) * (code.rate() - info)).exp();
    let witness = if best_size >= 2 {
        let anchor = StateSequence::new(best_anchor.unwrap(), k)?;
        // Re-verify membership independently, one codeword at a time.
        for &idx in &best_indices {
            let empirical = conditional_composition_of(code.codeword(idx), k, &anchor)?;
            if !cond_matches(&empirical, v, anchor.symbols(), k) {
                return Err(CqError::InvalidInput(
                    "subcode witness failed re-verification".into(),
                ));
            }
        }
        Some(SubcodeWitness {
            anchor,
            v: v.clone(),
            indices: best_indices,
        })
    } else {
        None
    };
    Ok(SubcodeSearch {
        witness,
        best_size,
        blahut_bound,
    })
}

fn closest_counts(probs: &[f64], n: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = probs.iter().map(|&p| (p * n as f64).floor() as usize).collect();
    let mut remainders: Vec<(usize, f64)> = probs
        .iter()
        .enumerate()
        .map(|(i, &p)| (i, p * n as f64 - counts[i] as f64))
        .collect();
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut short = n - counts.iter().sum::<usize>();
    for (i, _) in remainders {
        if short == 0 {
            break;
        }
        counts[i] += 1;
        short -= 1;
    }
    counts
}

fn multinomial(n: usize, counts: &[usize]) -> u128 {
    let mut acc: u128 = 1;
    let mut used = 0usize;
    for &c in counts {
        for j in 1..=c {
            acc = acc.saturating_mul((used + j) as u128) / j as u128;
        }
        used += c;
    }
    let _ = n;
    acc
}

fn enumerate_class(
    anchor: &mut Vec<usize>,
    remaining: &mut [usize],
    n: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if anchor.len() == n {
        visit(anchor);
        return;
    }
    for a in 0..remaining.len() {
        if remaining[a] == 0 {
            continue;
        }
        remaining[a] -= 1;
        anchor.push(a);
        enumerate_class(anchor, remaining, n, visit);
        anchor.pop();
        remaining[a] += 1;
    }
}

fn matching_codewords(
    code: &CodeBlock,
    anchor: &[usize],
    alphabet: usize,
    v: &ConditionalComposition,
) -> Vec<usize> {
    let seq = match StateSequence::new(anchor.to_vec(), alphabet) {
        Ok(s) => s,
        Err(_) => return Vec::new(),
    };
    (0..code.num_codewords())
        .filter(|&idx| {
            conditional_composition_of(code.codeword(idx), alphabet, &seq)
                .map(|emp| cond_matches(&emp, v, anchor, alphabet))
                .unwrap_or(false)
        })
        .collect()
}

/// Exact row match wherever the anchor uses a symbol; unused rows are
/// unconstrained.
fn cond_matches(
    empirical: &ConditionalComposition,
    target: &ConditionalComposition,
    anchor: &[usize],
    alphabet: usize,
) -> bool {
    for a in 0..alphabet {
        if !anchor.contains(&a) {
            continue;
        }
        let e = match empirical.row(a).as_defined() {
            Some(r) => r,
            None => return false,
        };
        let t = match target.row(a).as_defined() {
            Some(r) => r,
            None => return false,
        };
        for x in 0..alphabet {
            if (e.prob(x) - t.prob(x)).abs() > 1e-9 {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// The Theorem-5 search space and evaluators
// ---------------------------------------------------------------------------

/// One auxiliary assignment: a channel per state symbol, all certified.
#[derive(Debug, Clone)]
pub struct AuxFamily {
    pub channels: Vec<PureStateChannel>,
    pub certificates: Vec<GammaCertificate>,
    pub degraded: bool,
    pub label: String,
}

/// Finite certified search space for the Theorem-5 infimum: a ρ grid,
/// stationary conditional compositions, and admissible auxiliary families
/// per ρ. Every reported value is a valid upper bound for its configuration;
/// no claim of a global infimum is made.
#[derive(Debug, Clone)]
pub struct SpuSearchSpace {
    pub rho_grid: Vec<f64>,
    pub v_candidates: Vec<ConditionalComposition>,
    /// aux_families[rho_index] lists the auxiliary assignments tried at that
    /// ρ (one when shared, three when per-symbol assignments are enabled).
    pub aux_families: Vec<Vec<AuxFamily>>,
    pub epsilon: f64,
}

impl SpuSearchSpace {
    /// Default space: 17 log-spaced ρ in [1, 16]; V candidates = P-product,
    /// identity, and 8 seeded random stationary matrices; one shared
    /// auxiliary per ρ from [`construct_aux_channel`] (three assignment
    /// patterns per ρ when `per_a` is set).
    pub fn build(
        ch: &PureStateChannel,
        p: &Composition,
        epsilon: f64,
        per_a: bool,
        seed: u64,
    ) -> Result<Self, CqError> {
        let n = ch.alphabet_size();
        if p.len() != n {
            return Err(CqError::DimensionMismatch(format!(
                "composition over {} symbols but channel has {n}",
                p.len()
            )));
        }
        let mut rho_grid = Vec::with_capacity(17);
        for k in 0..17 {
            let t = k as f64 / 16.0;
            rho_grid.push(16.0f64.powf(t));
        }

        let mut v_candidates = vec![
            ConditionalComposition::product(p, n),
            ConditionalComposition::identity(n),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut found = 0;
        let mut attempts = 0;
        while found < 8 && attempts < 200 {
            attempts += 1;
            if let Some(v) = sample_stationary(&mut rng, p) {
                v_candidates.push(v);
                found += 1;
            }
        }

        let gram = ch.gram();
        let aux_families = rho_grid
            .iter()
            .map(|&rho| -> Result<Vec<AuxFamily>, CqError> {
                let built = construct_aux_channel(&gram, rho, 60)?;
                let shared = AuxFamily {
                    channels: vec![built.channel.clone(); n],
                    certificates: vec![built.certificate.clone(); n],
                    degraded: built.degraded,
                    label: "shared".into(),
                };
                if !per_a {
                    return Ok(vec![shared]);
                }
                let ident = identity_fallback(&gram, rho, n)?;
                let identity_family = AuxFamily {
                    channels: vec![ident.channel.clone(); n],
                    certificates: vec![ident.certificate.clone(); n],
                    degraded: false,
                    label: "identity".into(),
                };
                let mut mixed_channels = Vec::with_capacity(n);
                let mut mixed_certs = Vec::with_capacity(n);
                for a in 0..n {
                    if a % 2 == 0 {
                        mixed_channels.push(built.channel.clone());
                        mixed_certs.push(built.certificate.clone());
                    } else {
                        mixed_channels.push(ident.channel.clone());
                        mixed_certs.push(ident.certificate.clone());
                    }
                }
                let mixed = AuxFamily {
                    channels: mixed_channels,
                    certificates: mixed_certs,
                    degraded: built.degraded,
                    label: "alternating".into(),
                };
                Ok(vec![shared, identity_family, mixed])
            })
            .collect::<Result<Vec<_>, _>>()?;

        Ok(Self {
            rho_grid,
            v_candidates,
            aux_families,
            epsilon,
        })
    }

    /// Single-point space used for reduction checks: one ρ, one V, one
    /// shared auxiliary family.
    pub fn single(
        rho: f64,
        v: ConditionalComposition,
        aux: PureStateChannel,
        original: &PureStateChannel,
        epsilon: f64,
    ) -> Result<Self, CqError> {
        let n = original.alphabet_size();
        let cert = gamma_check(&original.gram(), &aux.gram(), rho)?;
        Ok(Self {
            rho_grid: vec![rho],
            v_candidates: vec![v],
            aux_families: vec![vec![AuxFamily {
                channels: vec![aux; n],
                certificates: vec![cert; n],
                degraded: false,
                label: "explicit".into(),
            }]],
            epsilon,
        })
    }

    /// Validate stationarity of every V candidate against P and the
    /// admissibility of every certificate.
    pub fn certify(&self, p: &Composition) -> Result<(), CqError> {
        for (i, v) in self.v_candidates.iter().enumerate() {
            let (ok, residual) = crate::channel::check_stationary(p, v);
            if !ok {
                return Err(CqError::InvalidInput(format!(
                    "V candidate {i} is not stationary: residual {residual:.3e}"
                )));
            }
        }
        for fams in &self.aux_families {
            for fam in fams {
                for cert in &fam.certificates {
                    if !cert.admissible() {
                        return Err(CqError::InvalidInput(format!(
                            "auxiliary family '{}' has violation {:.3e}",
                            fam.label, cert.max_violation
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Random stationary conditional composition: alternate Euclidean projection
/// onto the affine set {PV = P} (columnwise) with row clipping and
/// renormalization; reject after 100 rounds without 1e-10 feasibility.
fn sample_stationary(rng: &mut ChaCha8Rng, p: &Composition) -> Option<ConditionalComposition> {
    let n = p.len();
    let pn: f64 = p.probs().iter().map(|x| x * x).sum();
    if pn == 0.0 {
        return None;
    }
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut row: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = row.iter().sum();
            for x in row.iter_mut() {
                *x /= s;
            }
            row
        })
        .collect();
    for _ in 0..100 {
        // Columnwise affine correction.
        for xp in 0..n {
            let dot: f64 = (0..n).map(|x| p.prob(x) * v[x][xp]).sum();
            let corr = (p.prob(xp) - dot) / pn;
            for (x, row) in v.iter_mut().enumerate() {
                row[xp] += corr * p.prob(x);
            }
        }
        // Row repair.
        for row in v.iter_mut() {
            let mut s = 0.0;
            for x in row.iter_mut() {
                *x = x.max(0.0);
                s += *x;
            }
            if s <= 0.0 {
                return None;
            }
            for x in row.iter_mut() {
                *x /= s;
            }
        }
        // Feasibility check at 1e-10.
        let mut residual: f64 = 0.0;
        for xp in 0..n {
            let dot: f64 = (0..n).map(|x| p.prob(x) * v[x][xp]).sum();
            residual = residual.max((dot - p.prob(xp)).abs());
        }
        if residual <= 1e-10 {
            return ConditionalComposition::new(v).ok();
        }
    }
    None
}

/// Value of the Theorem-5 style infimum over a finite space, with the
/// achieving configuration.
#[derive(Debug, Clone)]
pub struct SpuValue {
    pub value: f64,
    pub rho: f64,
    pub v_index: usize,
    pub aux_label: String,
    pub epsilon: f64,
    /// Space points skipped because the inner bound was infinite (rate below
    /// the conditional threshold) or the rate argument was non-positive.
    pub skipped: usize,
    pub converged: bool,
}

impl SpuValue {
    pub fn to_json(&self, v: &ConditionalComposition) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = (0..v.num_rows())
            .map(|a| match v.row(a) {
                CondRow::Defined(c) => serde_json::json!(c.probs()),
                CondRow::Undefined => serde_json::Value::Null,
            })
            .collect();
        serde_json::json!({
            "value_nats": self.value,
            "rho": self.rho,
            "V": rows,
            "aux": self.aux_label,
            "epsilon": self.epsilon,
            "skipped": self.skipped,
            "converged": self.converged,
        })
    }
}

/// E_spu^cc(R, P): minimize ρ·[E_sp^cc({C̃_a}, R - I(P,V) - ε, P, V) + R -
/// I(P,V)] over the certified space. Ties break lexicographically on
/// (ρ index, V index, auxiliary index).
pub fn espu_cc(
    ch: &PureStateChannel,
    rate: f64,
    p: &Composition,
    space: &SpuSearchSpace,
    cfg: &SolverConfig,
) -> Result<SpuValue, CqError> {
    space.certify(p)?;
    let original_gram = ch.gram();
    let mut best: Option<SpuValue> = None;
    let mut skipped = 0usize;
    let mut converged = true;

    for (ri, &rho) in space.rho_grid.iter().enumerate() {
        for (vi, v) in space.v_candidates.iter().enumerate() {
            let info = mutual_information(p, v)?;
            let inner_rate = rate - info - space.epsilon;
            for fam in &space.aux_families[ri] {
                // Use-site admissibility check against the original gram.
                for aux in &fam.channels {
                    let cert = gamma_check(&original_gram, &aux.gram(), rho)?;
                    if !cert.admissible() {
                        return Err(CqError::InvalidInput(format!(
                            "auxiliary family '{}' inadmissible at use site (violation {:.3e})",
                            fam.label, cert.max_violation
                        )));
                    }
                }
                if inner_rate <= 0.0 {
                    skipped += 1;
                    continue;
                }
                let fam_channels = fam.channels.iter().map(|c| c.to_cq()).collect();
                let family = CondChannelFamily::new(fam_channels, p.clone(), v.clone())?;
                let esp: EspResult = espcc_cond(&family, inner_rate, cfg, RHO_MAX_DEFAULT)?;
                if !esp.finite {
                    skipped += 1;
                    continue;
                }
                converged &= esp.converged;
                let value = rho * (esp.value + rate - info);
                let better = match &best {
                    None => true,
                    Some(b) => value < b.value,
                };
                if better {
                    best = Some(SpuValue {
                        value,
                        rho,
                        v_index: vi,
                        aux_label: fam.label.clone(),
                        epsilon: space.epsilon,
                        skipped: 0,
                        converged: true,
                    });
                }
            }
        }
    }
    match best {
        Some(mut b) => {
            b.skipped = skipped;
            b.converged = converged;
            Ok(b)
        }
        None => Err(CqError::EmptySearchSpace(
            "every space point was skipped (rate below all conditional thresholds)".into(),
        )),
    }
}

/// Weakened bound with a single shared auxiliary and the product V:
/// inf over ρ of ρ·[E_sp^cc(C̃_ρ, R - ε, P) + R].
pub fn weakened_bound(
    ch: &PureStateChannel,
    rate: f64,
    p: &Composition,
    rho_grid: &[f64],
    epsilon: f64,
    cfg: &SolverConfig,
) -> Result<SpuValue, CqError> {
    if rho_grid.is_empty() {
        return Err(CqError::EmptySearchSpace("empty ρ grid".into()));
    }
    let gram = ch.gram();
    let mut best: Option<SpuValue> = None;
    let mut skipped = 0usize;
    let mut converged = true;
    for &rho in rho_grid {
        let aux = construct_aux_channel(&gram, rho, 60)?;
        if !aux.certificate.admissible() {
            return Err(CqError::InvalidInput(format!(
                "constructed auxiliary inadmissible at ρ = {rho}"
            )));
        }
        let inner_rate = rate - epsilon;
        if inner_rate <= 0.0 {
            skipped += 1;
            continue;
        }
        let esp = crate::sphere::espcc(&aux.channel.to_cq(), inner_rate, p, cfg, RHO_MAX_DEFAULT)?;
        if !esp.finite {
            skipped += 1;
            continue;
        }
        converged &= esp.converged;
        let value = rho * (esp.value + rate);
        let better = match &best {
            None => true,
            Some(b) => value < b.value,
        };
        if better {
            best = Some(SpuValue {
                value,
                rho,
                v_index: 0,
                aux_label: if aux.degraded { "identity-fallback" } else { "shared" }.into(),
                epsilon,
                skipped: 0,
                converged: true,
            });
        }
    }
    match best {
        Some(mut b) => {
            b.skipped = skipped;
            b.converged = converged;
            Ok(b)
        }
        None => Err(CqError::EmptySearchSpace(
            "every ρ was skipped (rate below threshold)".into(),
        )),
    }
}

/// Overlap-exponent thresholds over the space: one point per configuration,
/// (R_inf({C̃_a}, P, V), ρ·R_inf({C̃_a}, P, V)), max-reduced per rate: each
/// emitted rate carries the best bound available at or above it, so the
/// assembled curve is non-increasing in the threshold rate.
pub fn overlap_rate_bound(
    ch: &PureStateChannel,
    p: &Composition,
    space: &SpuSearchSpace,
    cfg: &SolverConfig,
) -> Result<BoundCurve, CqError> {
    space.certify(p)?;
    let mut raw: Vec<(f64, f64)> = Vec::new();
    for (ri, &rho) in space.rho_grid.iter().enumerate() {
        for v in &space.v_candidates {
            for fam in &space.aux_families[ri] {
                let fam_channels = fam.channels.iter().map(|c| c.to_cq()).collect();
                let family = CondChannelFamily::new(fam_channels, p.clone(), v.clone())?;
                let threshold = r_infinity_cond(&family, cfg)?;
                raw.push((threshold, rho * threshold));
            }
        }
    }
    raw.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut points: Vec<BoundPoint> = Vec::new();
    for (rate, value) in raw {
        match points.last_mut() {
            Some(last) if (rate - last.rate).abs() <= 1e-9 => {
                last.exponent = last.exponent.max(value);
            }
            _ => points.push(BoundPoint {
                rate,
                exponent: value,
                finite: true,
            }),
        }
    }
    // Suffix max: the bound at each rate is the strongest one whose
    // threshold is at least that rate.
    let mut best = f64::NEG_INFINITY;
    for p in points.iter_mut().rev() {
        best = best.max(p.exponent);
        p.exponent = best;
    }
    let metadata = CurveMetadata {
        channel_hash: channel_fingerprint(&ch.to_cq()),
        composition: p.probs().to_vec(),
        solver: cfg.clone(),
    };
    Ok(BoundCurve::unchecked(points, metadata))
}
