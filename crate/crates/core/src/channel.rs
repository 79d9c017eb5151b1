//! Channels, compositions, confusability graphs, and block codes.
//!
//! Data model plus validation and the classical embedding. File schemas for
//! the CLI live here too, next to the types they deserialize into.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CqError;
use crate::herm::{cvec, range_projector, DensityOperator, HermitianOperator, Projector};

/// Tolerance on Tr(S_x^0 S_x'^0) below which two state ranges count as
/// orthogonal. The trace is nonnegative and exactly zero only for orthogonal
/// ranges.
pub const CONFUSABILITY_TOL: f64 = 1e-9;
/// Probability vectors must sum to 1 within this tolerance.
pub const COMPOSITION_SUM_TOL: f64 = 1e-12;
/// Tolerance for the stationarity check PV = P.
pub const STATIONARY_TOL: f64 = 1e-9;

/// Classical-quantum channel: one density operator per input symbol, all on a
/// common space.
#[derive(Debug, Clone)]
pub struct CQChannel {
    states: Vec<DensityOperator>,
}

impl CQChannel {
    pub fn new(states: Vec<DensityOperator>) -> Result<Self, CqError> {
        if states.is_empty() {
            return Err(CqError::InvalidInput("channel needs at least one state".into()));
        }
        let dim = states[0].dim();
        if states.iter().any(|s| s.dim() != dim) {
            return Err(CqError::DimensionMismatch(
                "channel states must share a dimension".into(),
            ));
        }
        Ok(Self { states })
    }

    pub fn alphabet_size(&self) -> usize {
        self.states.len()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn state(&self, x: usize) -> &DensityOperator {
        &self.states[x]
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    /// Range projectors S_x^0 of all states.
    pub fn range_projectors(&self, rank_tol: f64) -> Result<Vec<Projector>, CqError> {
        self.states
            .iter()
            .map(|s| range_projector(s.as_herm(), rank_tol))
            .collect()
    }
}

/// Pure-state channel: unit vectors ψ_x with their Gram matrix
/// G_{xx'} = ⟨ψ_x|ψ_x'⟩.
#[derive(Debug, Clone)]
pub struct PureStateChannel {
    vectors: Vec<Vec<Complex64>>,
    gram: Vec<Complex64>,
}

impl PureStateChannel {
    pub fn new(vectors: Vec<Vec<Complex64>>) -> Result<Self, CqError> {
        if vectors.is_empty() {
            return Err(CqError::InvalidInput("channel needs at least one state".into()));
        }
        let dim = vectors[0].len();
        if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
            return Err(CqError::DimensionMismatch(
                "state vectors must share a nonzero dimension".into(),
            ));
        }
        for (x, v) in vectors.iter().enumerate() {
            let n = cvec::norm(v);
            if (n - 1.0).abs() > 1e-10 {
                return Err(CqError::InvalidInput(format!(
                    "state vector {x} has norm {n}"
                )));
            }
        }
        let n = vectors.len();
        let mut gram = vec![Complex64::new(0.0, 0.0); n * n];
        for x in 0..n {
            for y in 0..n {
                gram[x * n + y] = cvec::inner(&vectors[x], &vectors[y]);
            }
        }
        Ok(Self { vectors, gram })
    }

    pub fn alphabet_size(&self) -> usize {
        self.vectors.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vector(&self, x: usize) -> &[Complex64] {
        &self.vectors[x]
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    /// Gram matrix as a Hermitian operator on C^{|X|}.
    pub fn gram(&self) -> HermitianOperator {
        HermitianOperator::from_parts(self.vectors.len(), self.gram.clone())
    }

    pub fn overlap(&self, x: usize, y: usize) -> Complex64 {
        self.gram[x * self.vectors.len() + y]
    }

    /// View as a CQ channel of rank-one states.
    pub fn to_cq(&self) -> CQChannel {
        let states = self
            .vectors
            .iter()
            .map(|v| DensityOperator::from_herm_unchecked(HermitianOperator::outer(v)))
            .collect();
        CQChannel { states }
    }
}

/// Probability vector over an alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    probs: Vec<f64>,
}

impl Composition {
    pub fn new(probs: Vec<f64>) -> Result<Self, CqError> {
        if probs.is_empty() {
            return Err(CqError::InvalidInput("empty composition".into()));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(CqError::InvalidInput(
                "composition entries must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > COMPOSITION_SUM_TOL {
            return Err(CqError::InvalidInput(format!(
                "composition sums to {sum}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, x: usize) -> f64 {
        self.probs[x]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum()
    }
}

/// Row of a conditional composition: either a composition over X or
/// undefined when the conditioning symbol never occurs. Undefined rows are
/// carried explicitly so downstream sums can weight them by P(a) = 0 instead
/// of silently zero-filling.
#[derive(Debug, Clone, PartialEq)]
pub enum CondRow {
    Defined(Composition),
    Undefined,
}

impl CondRow {
    pub fn as_defined(&self) -> Option<&Composition> {
        match self {
            CondRow::Defined(c) => Some(c),
            CondRow::Undefined => None,
        }
    }
}

/// Stochastic matrix V(x'|x): one composition row per conditioning symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalComposition {
    rows: Vec<CondRow>,
    cols: usize,
}

impl ConditionalComposition {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, CqError> {
        if rows.is_empty() {
            return Err(CqError::InvalidInput("empty conditional composition".into()));
        }
        let cols = rows[0].len();
        let rows = rows
            .into_iter()
            .map(|r| {
                if r.len() != cols {
                    return Err(CqError::DimensionMismatch(
                        "conditional composition rows must share a length".into(),
                    ));
                }
                Ok(CondRow::Defined(Composition::new(r)?))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { rows, cols })
    }

    pub fn from_rows(rows: Vec<CondRow>, cols: usize) -> Result<Self, CqError> {
        for r in &rows {
            if let CondRow::Defined(c) = r {
                if c.len() != cols {
                    return Err(CqError::DimensionMismatch(
                        "conditional composition rows must share a length".into(),
                    ));
                }
            }
        }
        Ok(Self { rows, cols })
    }

    /// Identity matrix V(x'|x) = δ_{x'x}.
    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![0.0; n];
                r[i] = 1.0;
                CondRow::Defined(Composition { probs: r })
            })
            .collect();
        Self { rows, cols: n }
    }

    /// Product matrix with every defined row equal to P.
    pub fn product(p: &Composition, rows: usize) -> Self {
        Self {
            rows: vec![CondRow::Defined(p.clone()); rows],
            cols: p.len(),
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, a: usize) -> &CondRow {
        &self.rows[a]
    }

    pub fn entry(&self, a: usize, x: usize) -> Option<f64> {
        self.rows[a].as_defined().map(|c| c.prob(x))
    }
}

/// Symmetric confusability relation with a reflexive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusabilityGraph {
    n: usize,
    adjacency: Vec<bool>,
}

impl ConfusabilityGraph {
    /// Build from the list of confusable pairs (the diagonal is implied).
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, CqError> {
        if n == 0 {
            return Err(CqError::InvalidInput("graph needs at least one vertex".into()));
        }
        let mut adjacency = vec![false; n * n];
        for i in 0..n {
            adjacency[i * n + i] = true;
        }
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(CqError::InvalidInput(format!(
                    "edge ({i},{j}) out of range for {n} vertices"
                )));
            }
            adjacency[i * n + j] = true;
            adjacency[j * n + i] = true;
        }
        Ok(Self { n, adjacency })
    }

    pub fn complete(n: usize) -> Self {
        Self {
            n,
            adjacency: vec![true; n * n],
        }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_edges(n, &[]).expect("n > 0")
    }

    /// Cycle graph 0-1-…-(n-1)-0.
    pub fn cycle(n: usize) -> Self {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::from_edges(n, &edges).expect("n > 0")
    }

    /// Path graph 0-1-…-(n-1).
    pub fn path(n: usize) -> Self {
        let edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges).expect("n > 0")
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n + j]
    }

    /// Off-diagonal confusable pairs (i < j).
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.adjacent(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Non-adjacent pairs (i < j): the pairs whose representations must be
    /// orthogonal.
    pub fn non_adjacent_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if !self.adjacent(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Block code: M codewords of length n over the input alphabet.
#[derive(Debug, Clone)]
pub struct CodeBlock {
    block_length: usize,
    codewords: Vec<Vec<usize>>,
    alphabet_size: usize,
}

impl CodeBlock {
    pub fn new(
        block_length: usize,
        alphabet_size: usize,
        codewords: Vec<Vec<usize>>,
    ) -> Result<Self, CqError> {
        if block_length == 0 || codewords.is_empty() {
            return Err(CqError::InvalidInput("code needs n ≥ 1 and M ≥ 1".into()));
        }
        for (m, w) in codewords.iter().enumerate() {
            if w.len() != block_length {
                return Err(CqError::DimensionMismatch(format!(
                    "codeword {m} has length {}, expected {block_length}",
                    w.len()
                )));
            }
            if w.iter().any(|&x| x >= alphabet_size) {
                return Err(CqError::InvalidInput(format!(
                    "codeword {m} uses a symbol outside the alphabet"
                )));
            }
        }
        Ok(Self {
            block_length,
            codewords,
            alphabet_size,
        })
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn num_codewords(&self) -> usize {
        self.codewords.len()
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn codeword(&self, m: usize) -> &[usize] {
        &self.codewords[m]
    }

    pub fn codewords(&self) -> &[Vec<usize>] {
        &self.codewords
    }

    /// Rate log(M)/n in nats.
    pub fn rate(&self) -> f64 {
        (self.codewords.len() as f64).ln() / self.block_length as f64
    }
}

/// Sequence over the state alphabet that anchors conditional compositions.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSequence {
    seq: Vec<usize>,
    alphabet_size: usize,
}

impl StateSequence {
    pub fn new(seq: Vec<usize>, alphabet_size: usize) -> Result<Self, CqError> {
        if seq.is_empty() {
            return Err(CqError::InvalidInput("empty state sequence".into()));
        }
        if seq.iter().any(|&a| a >= alphabet_size) {
            return Err(CqError::InvalidInput("state sequence symbol out of range".into()));
        }
        Ok(Self { seq, alphabet_size })
    }

    pub fn symbols(&self) -> &[usize] {
        &self.seq
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }
}

/// Embed a classical channel (row-stochastic matrix W(y|x)) as commuting
/// diagonal density operators diag(W(·|x)).
pub fn classical_embed(w: &[Vec<f64>]) -> Result<CQChannel, CqError> {
    if w.is_empty() || w[0].is_empty() {
        return Err(CqError::InvalidInput("empty stochastic matrix".into()));
    }
    let ny = w[0].len();
    let states = w
        .iter()
        .enumerate()
        .map(|(x, row)| {
            if row.len() != ny {
                return Err(CqError::DimensionMismatch(
                    "stochastic matrix rows must share a length".into(),
                ));
            }
            if row.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                return Err(CqError::InvalidInput(format!(
                    "row {x} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(CqError::InvalidInput(format!(
                    "row {x} sums to {sum}, expected 1"
                )));
            }
            DensityOperator::new(HermitianOperator::from_diag(row))
        })
        .collect::<Result<Vec<_>, _>>()?;
    CQChannel::new(states)
}

/// Confusability graph of a channel: x and x' are adjacent iff
/// Tr(S_x^0 S_x'^0) > tol, i.e. the state ranges are not orthogonal.
pub fn confusability_graph(ch: &CQChannel, tol: f64) -> Result<ConfusabilityGraph, CqError> {
    let n = ch.alphabet_size();
    let projectors = ch.range_projectors(crate::herm::RANK_TOL_DEFAULT)?;
    let mut edges = Vec::new();
    for x in 0..n {
        for y in (x + 1)..n {
            if projectors[x].trace_product(&projectors[y]) > tol {
                edges.push((x, y));
            }
        }
    }
    ConfusabilityGraph::from_edges(n, &edges)
}

/// Empirical composition of a word.
pub fn composition_of(word: &[usize], alphabet_size: usize) -> Result<Composition, CqError> {
    if word.is_empty() {
        return Err(CqError::InvalidInput("empty word".into()));
    }
    let mut counts = vec![0usize; alphabet_size];
    for &x in word {
        if x >= alphabet_size {
            return Err(CqError::InvalidInput("word symbol out of range".into()));
        }
        counts[x] += 1;
    }
    let n = word.len() as f64;
    Composition::new(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// Conditional composition of `word` anchored at `anchor`:
/// V(x|a) = #{i : a_i = a, word_i = x} / #{i : a_i = a}. Rows for anchor
/// symbols that never occur are flagged undefined.
pub fn conditional_composition_of(
    word: &[usize],
    alphabet_size: usize,
    anchor: &StateSequence,
) -> Result<ConditionalComposition, CqError> {
    if word.len() != anchor.len() {
        return Err(CqError::DimensionMismatch(format!(
            "word length {} vs anchor length {}",
            word.len(),
            anchor.len()
        )));
    }
    let na = anchor.alphabet_size();
    let mut counts = vec![vec![0usize; alphabet_size]; na];
    let mut totals = vec![0usize; na];
    for (&x, &a) in word.iter().zip(anchor.symbols()) {
        if x >= alphabet_size {
            return Err(CqError::InvalidInput("word symbol out of range".into()));
        }
        counts[a][x] += 1;
        totals[a] += 1;
    }
    let rows = (0..na)
        .map(|a| {
            if totals[a] == 0 {
                Ok(CondRow::Undefined)
            } else {
                let t = totals[a] as f64;
                Composition::new(counts[a].iter().map(|&c| c as f64 / t).collect())
                    .map(CondRow::Defined)
            }
        })
        .collect::<Result<Vec<_>, CqError>>()?;
    ConditionalComposition::from_rows(rows, alphabet_size)
}

/// Check the stationarity condition Σ_x P(x) V(x'|x) = P(x'). Returns the
/// verdict at tolerance [`STATIONARY_TOL`] together with the max deviation.
/// Undefined rows only enter with their weight P(x), so they must have
/// P(x) = 0 to pass.
pub fn check_stationary(p: &Composition, v: &ConditionalComposition) -> (bool, f64) {
    if p.len() != v.num_rows() || p.len() != v.num_cols() {
        return (false, f64::INFINITY);
    }
    let n = p.len();
    let mut residual: f64 = 0.0;
    for xp in 0..n {
        let mut acc = 0.0;
        for x in 0..n {
            match v.row(x) {
                CondRow::Defined(c) => acc += p.prob(x) * c.prob(xp),
                CondRow::Undefined => {
                    if p.prob(x) > 0.0 {
                        return (false, f64::INFINITY);
                    }
                }
            }
        }
        residual = residual.max((acc - p.prob(xp)).abs());
    }
    (residual <= STATIONARY_TOL, residual)
}

// ---------------------------------------------------------------------------
// File schemas
// ---------------------------------------------------------------------------

/// Dense complex matrix as parallel real/imaginary grids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

/// Complex vector as parallel real/imaginary rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VectorJson {
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Vec<f64>,
}

/// Channel file: `{"dim": d, "states": [...]}` for general states or
/// `{"vectors": [...]}` for a pure-state channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelJson {
    Mixed {
        dim: usize,
        states: Vec<MatrixJson>,
    },
    Pure {
        vectors: Vec<VectorJson>,
    },
}

/// Composition file: `{"P": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompositionJson {
    #[serde(rename = "P")]
    pub p: Vec<f64>,
}

/// Conditional composition file: `{"V": [[...]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionalJson {
    #[serde(rename = "V")]
    pub v: Vec<Vec<f64>>,
}

/// Graph file: `{"n": n, "edges": [[i, j], ...]}` listing confusable pairs,
/// 0-based.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

/// Code file: `{"n": n, "alphabet": k, "codewords": [[...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeJson {
    pub n: usize,
    pub alphabet: usize,
    pub codewords: Vec<Vec<usize>>,
}

impl MatrixJson {
    pub fn to_herm(&self) -> Result<HermitianOperator, CqError> {
        let d = self.re.len();
        let im_provided = !self.im.is_empty();
        if im_provided && self.im.len() != d {
            return Err(CqError::DimensionMismatch("re/im grid sizes differ".into()));
        }
        let mut data = Vec::with_capacity(d * d);
        for i in 0..d {
            if self.re[i].len() != d || (im_provided && self.im[i].len() != d) {
                return Err(CqError::DimensionMismatch("matrix is not square".into()));
            }
            for j in 0..d {
                let im = if im_provided { self.im[i][j] } else { 0.0 };
                data.push(Complex64::new(self.re[i][j], im));
            }
        }
        HermitianOperator::new(d, data)
    }

    pub fn from_herm(h: &HermitianOperator) -> Self {
        let d = h.dim();
        let mut re = vec![vec![0.0; d]; d];
        let mut im = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..d {
                re[i][j] = h.get(i, j).re;
                im[i][j] = h.get(i, j).im;
            }
        }
        Self { re, im }
    }
}

impl VectorJson {
    pub fn to_cvec(&self) -> Result<Vec<Complex64>, CqError> {
        if !self.im.is_empty() && self.im.len() != self.re.len() {
            return Err(CqError::DimensionMismatch("re/im vector lengths differ".into()));
        }
        Ok(self
            .re
            .iter()
            .enumerate()
            .map(|(i, &re)| Complex64::new(re, self.im.get(i).copied().unwrap_or(0.0)))
            .collect())
    }
}

impl ChannelJson {
    pub fn to_cq(&self) -> Result<CQChannel, CqError> {
        match self {
            ChannelJson::Mixed { dim, states } => {
                let parsed = states
                    .iter()
                    .map(|m| {
                        let h = m.to_herm()?;
                        if h.dim() != *dim {
                            return Err(CqError::DimensionMismatch(format!(
                                "state dim {} but header says {}",
                                h.dim(),
                                dim
                            )));
                        }
                        DensityOperator::new(h)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                CQChannel::new(parsed)
            }
            ChannelJson::Pure { .. } => Ok(self.to_pure()?.to_cq()),
        }
    }

    pub fn to_pure(&self) -> Result<PureStateChannel, CqError> {
        match self {
            ChannelJson::Pure { vectors } => {
                let parsed = vectors
                    .iter()
                    .map(|v| v.to_cvec())
                    .collect::<Result<Vec<_>, _>>()?;
                PureStateChannel::new(parsed)
            }
            ChannelJson::Mixed { .. } => Err(CqError::InvalidInput(
                "this operation needs a pure-state channel file (\"vectors\": [...])".into(),
            )),
        }
    }
}

impl GraphJson {
    pub fn to_graph(&self) -> Result<ConfusabilityGraph, CqError> {
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        ConfusabilityGraph::from_edges(self.n, &edges)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::herm::eig_hermitian;

    #[test]
    fn classical_embed_identity() {
        let ch = classical_embed(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(ch.alphabet_size(), 2);
        assert!((ch.state(0).get(0, 0).re - 1.0).abs() < 1e-15);
        assert!((ch.state(1).get(1, 1).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn classical_embed_bsc() {
        let ch = classical_embed(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        assert!((ch.state(0).get(0, 0).re - 0.9).abs() < 1e-15);
        assert!((ch.state(0).get(1, 1).re - 0.1).abs() < 1e-15);
        assert!((ch.state(1).get(0, 0).re - 0.1).abs() < 1e-15);
    }

    #[test]
    fn classical_embed_degenerate() {
        let ch = classical_embed(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(ch.state(0).max_abs_diff(ch.state(1)) < 1e-15);
    }

    #[test]
    fn classical_embed_rejects_non_stochastic() {
        assert!(classical_embed(&[vec![0.9, 0.2]]).is_err());
        assert!(classical_embed(&[vec![1.1, -0.1]]).is_err());
    }

    #[test]
    fn confusability_orthogonal_and_identical() {
        let orth = classical_embed(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let g = confusability_graph(&orth, CONFUSABILITY_TOL).unwrap();
        assert!(!g.adjacent(0, 1));
        assert!(g.adjacent(0, 0) && g.adjacent(1, 1));

        let same = classical_embed(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let g = confusability_graph(&same, CONFUSABILITY_TOL).unwrap();
        assert!(g.adjacent(0, 1));
    }

    /// Five unit vectors with the umbrella geometry: ribs at azimuth 2πk/5
    /// and polar height cos²θ = 1/√5, so u_k·u_{k±2} = 0 while cyclic
    /// neighbours keep a positive overlap. The confusability graph is C5.
    pub(crate) fn pentagon_channel() -> PureStateChannel {
        let c2 = 1.0 / 5.0f64.sqrt();
        let c = c2.sqrt();
        let s = (1.0 - c2).sqrt();
        let vectors = (0..5)
            .map(|k| {
                let az = 2.0 * std::f64::consts::PI * k as f64 / 5.0;
                cvec::from_reals(&[s * az.cos(), s * az.sin(), c])
            })
            .collect();
        PureStateChannel::new(vectors).unwrap()
    }

    #[test]
    fn confusability_pentagon() {
        let ch = pentagon_channel();
        let g = confusability_graph(&ch.to_cq(), CONFUSABILITY_TOL).unwrap();
        let expected = ConfusabilityGraph::cycle(5);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(g.adjacent(i, j), expected.adjacent(i, j), "pair ({i},{j})");
            }
        }
    }

    #[test]
    fn confusability_unitary_invariance() {
        // Rotate all states by a common unitary; adjacency must not change.
        let ch = pentagon_channel().to_cq();
        let theta: f64 = 0.8;
        // A simple unitary: rotation in the (0,1) plane plus a phase on axis 2.
        let u = [
            [
                Complex64::new(theta.cos(), 0.0),
                Complex64::new(-theta.sin(), 0.0),
                Complex64::new(0.0, 0.0),
            ],
            [
                Complex64::new(theta.sin(), 0.0),
                Complex64::new(theta.cos(), 0.0),
                Complex64::new(0.0, 0.0),
            ],
            [
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 1.0),
            ],
        ];
        let rotated: Vec<DensityOperator> = ch
            .states()
            .iter()
            .map(|s| {
                let mut data = vec![Complex64::new(0.0, 0.0); 9];
                for i in 0..3 {
                    for j in 0..3 {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for k in 0..3 {
                            for l in 0..3 {
                                acc += u[i][k] * s.get(k, l) * u[j][l].conj();
                            }
                        }
                        data[i * 3 + j] = acc;
                    }
                }
                DensityOperator::from_herm_unchecked(HermitianOperator::from_parts(3, data))
            })
            .collect();
        let rotated_ch = CQChannel::new(rotated).unwrap();
        let g1 = confusability_graph(&ch, CONFUSABILITY_TOL).unwrap();
        let g2 = confusability_graph(&rotated_ch, CONFUSABILITY_TOL).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn composition_of_words() {
        let c = composition_of(&[0, 0, 1, 1], 2).unwrap();
        assert_eq!(c.probs(), &[0.5, 0.5]);
        let c = composition_of(&[0, 0, 0, 0], 2).unwrap();
        assert_eq!(c.probs(), &[1.0, 0.0]);
        let c = composition_of(&[0, 1, 2, 0], 3).unwrap();
        assert_eq!(c.probs(), &[0.5, 0.25, 0.25]);
    }

    #[test]
    fn conditional_composition_basic() {
        let anchor = StateSequence::new(vec![0, 0, 1, 1], 2).unwrap();
        let v = conditional_composition_of(&[0, 1, 0, 1], 2, &anchor).unwrap();
        assert_eq!(v.row(0).as_defined().unwrap().probs(), &[0.5, 0.5]);
        assert_eq!(v.row(1).as_defined().unwrap().probs(), &[0.5, 0.5]);

        // word = anchor yields the identity matrix
        let v = conditional_composition_of(&[0, 0, 1, 1], 2, &anchor).unwrap();
        assert_eq!(v.entry(0, 0), Some(1.0));
        assert_eq!(v.entry(1, 1), Some(1.0));

        let anchor = StateSequence::new(vec![0, 1, 0, 1], 2).unwrap();
        let v = conditional_composition_of(&[1, 1, 1, 1], 2, &anchor).unwrap();
        assert_eq!(v.row(0).as_defined().unwrap().probs(), &[0.0, 1.0]);
        assert_eq!(v.row(1).as_defined().unwrap().probs(), &[0.0, 1.0]);
    }

    #[test]
    fn conditional_composition_undefined_row() {
        let anchor = StateSequence::new(vec![0, 0, 0], 2).unwrap();
        let v = conditional_composition_of(&[0, 1, 0], 2, &anchor).unwrap();
        assert!(matches!(v.row(1), CondRow::Undefined));
        // the used row reduces to the plain composition
        let c = composition_of(&[0, 1, 0], 2).unwrap();
        assert_eq!(v.row(0).as_defined().unwrap(), &c);
    }

    #[test]
    fn conditional_composition_length_mismatch() {
        let anchor = StateSequence::new(vec![0, 0], 2).unwrap();
        assert!(conditional_composition_of(&[0, 1, 0], 2, &anchor).is_err());
    }

    #[test]
    fn stationarity_checks() {
        let p = Composition::new(vec![0.5, 0.5]).unwrap();
        let (ok, r) = check_stationary(&p, &ConditionalComposition::identity(2));
        assert!(ok && r < 1e-15);

        let (ok, _) = check_stationary(&p, &ConditionalComposition::product(&p, 2));
        assert!(ok);

        let v = ConditionalComposition::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let (ok, r) = check_stationary(&p, &v);
        assert!(!ok);
        assert!((r - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pure_channel_gram_is_psd_unit_diagonal() {
        let ch = pentagon_channel();
        let g = ch.gram();
        for x in 0..5 {
            assert!((g.get(x, x).re - 1.0).abs() < 1e-12);
        }
        let eig = eig_hermitian(&g).unwrap();
        assert!(eig.eigenvalues.iter().all(|&l| l > -1e-10));
    }

    #[test]
    fn channel_json_round_trip() {
        let json = r#"{"dim": 2, "states": [{"re": [[0.9,0],[0,0.1]], "im": [[0,0],[0,0]]}, {"re": [[0.1,0],[0,0.9]], "im": [[0,0],[0,0]]}]}"#;
        let parsed: ChannelJson = serde_json::from_str(json).unwrap();
        let ch = parsed.to_cq().unwrap();
        assert_eq!(ch.alphabet_size(), 2);

        let json = r#"{"vectors": [{"re": [1,0], "im": [0,0]}, {"re": [0,1], "im": [0,0]}]}"#;
        let parsed: ChannelJson = serde_json::from_str(json).unwrap();
        let ch = parsed.to_pure().unwrap();
        assert_eq!(ch.alphabet_size(), 2);
        assert!(ch.overlap(0, 1).norm() < 1e-15);
    }
}
