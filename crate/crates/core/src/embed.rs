//! CBOW word embeddings trained with a hierarchical softmax over a Huffman tree.
//!
//! Polarity-tagged contronyms (`w__POS`, `w__NEG`) are ordinary vocabulary
//! items here, so each sense gets its own input vector.
//!
//! Path model: at every inner node `j` on a token's path with code bit `b`,
//! `P(b = 1 | h) = sigmoid(h . v_j)`, where `h` is the mean of the context
//! input vectors. The gradient of the negative log-likelihood with respect to
//! `v_j` is therefore `(sigmoid(h . v_j) - b) h`.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::{dot, sigmoid, Scalar};

pub const MODEL_MAGIC: &[u8; 8] = b"SMTEMB\x00\x01";
/// Floor of the linearly decayed learning rate, as a fraction of the initial rate.
pub const MIN_LEARNING_RATE_FRACTION: f64 = 1e-4;
pub const FINITE_DIFFERENCE_STEP: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no token reaches min_count {0}")]
    AllFiltered(usize),
    #[error("unknown token {0:?}")]
    UnknownToken(String),
    #[error("zero vector for {0:?}")]
    ZeroVector(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dimension: usize,
    pub window: usize,
    pub min_count: usize,
    pub epochs: usize,
    pub initial_learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { dimension: 100, window: 5, min_count: 2, epochs: 5, initial_learning_rate: 0.025, seed: 1 }
    }
}

impl TrainConfig {
    /// Epochs may be zero (initialization only); everything else must be positive.
    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dimension == 0 || self.window == 0 || self.min_count == 0 {
            return Err(EmbedError::InvalidConfig("dimension, window and min_count must be positive".into()));
        }
        if !(self.initial_learning_rate > 0.0 && self.initial_learning_rate.is_finite()) {
            return Err(EmbedError::InvalidConfig("initial_learning_rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    pub token: String,
    pub count: u64,
    /// Branch bits from the root down to the leaf.
    pub code: Vec<u8>,
    /// Inner node indices from the root down, aligned with `code`.
    pub points: Vec<usize>,
}

/// Tokens ordered by descending count, ties broken by token; plus their Huffman codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    index: HashMap<String, usize>,
}

#[derive(PartialEq, Eq)]
struct HeapNode {
    weight: u64,
    /// Leaves (0) before inner nodes (1) at equal weight.
    rank: u8,
    /// Leaf: vocabulary index (token order among equal counts); inner: creation order.
    order: usize,
    id: usize,
}

impl Ord for HeapNode {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.weight, self.rank, self.order).cmp(&(other.weight, other.rank, other.order))
    }
}

impl PartialOrd for HeapNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Vocabulary {
    /// Builds codes for `(token, count)` pairs already in vocabulary order.
    pub fn from_ordered_counts(counts: Vec<(String, u64)>) -> Result<Self, EmbedError> {
        let v = counts.len();
        if v == 0 {
            return Err(EmbedError::EmptyCorpus);
        }
        let mut heap = BinaryHeap::with_capacity(v);
        for (i, (_, c)) in counts.iter().enumerate() {
            heap.push(Reverse(HeapNode { weight: *c, rank: 0, order: i, id: i }));
        }
        // parent[id] = (inner node index, bit) for every node but the root
        let mut parent: Vec<Option<(usize, u8)>> = vec![None; 2 * v - 1];
        let mut created = 0;
        while heap.len() > 1 {
            let Reverse(first) = heap.pop().unwrap();
            let Reverse(second) = heap.pop().unwrap();
            let inner = created;
            created += 1;
            parent[first.id] = Some((inner, 0));
            parent[second.id] = Some((inner, 1));
            heap.push(Reverse(HeapNode { weight: first.weight + second.weight, rank: 1, order: inner, id: v + inner }));
        }
        let mut entries = Vec::with_capacity(v);
        for (i, (token, count)) in counts.into_iter().enumerate() {
            let (mut code, mut points) = (Vec::new(), Vec::new());
            let mut node = i;
            while let Some((inner, bit)) = parent[node] {
                code.push(bit);
                points.push(inner);
                node = v + inner;
            }
            code.reverse();
            points.reverse();
            entries.push(VocabEntry { token, count, code, points });
        }
        let index = entries.iter().enumerate().map(|(i, e)| (e.token.clone(), i)).collect();
        Ok(Self { entries, index })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn inner_nodes(&self) -> usize {
        self.entries.len().saturating_sub(1)
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn entry(&self, index: usize) -> &VocabEntry {
        &self.entries[index]
    }
}

/// Counts tokens, drops those under `min_count` and builds the Huffman tree.
pub fn build_vocab<S: AsRef<[String]>>(sentences: &[S], min_count: usize) -> Result<Vocabulary, EmbedError> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for s in sentences {
        for t in s.as_ref() {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    if counts.is_empty() {
        return Err(EmbedError::EmptyCorpus);
    }
    let mut kept: Vec<(String, u64)> = counts.into_iter().filter(|&(_, c)| c >= min_count as u64).map(|(t, c)| (t.to_string(), c)).collect();
    if kept.is_empty() {
        return Err(EmbedError::AllFiltered(min_count));
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_ordered_counts(kept)
}

/// Analytic gradient of the log-likelihood of one (context, target) sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    /// Per distinct context token.
    pub inputs: Vec<(usize, Vec<T>)>,
    /// Per inner node on the target's path.
    pub nodes: Vec<(usize, Vec<T>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings<T> {
    vocab: Vocabulary,
    dimension: usize,
    input: Vec<T>,
    nodes: Vec<T>,
}

impl<T: Scalar> Embeddings<T> {
    /// Input vectors uniform in `[-0.5/d, 0.5/d)` from the seed; inner node vectors zero.
    pub fn initialize(vocab: Vocabulary, dimension: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / dimension as f64;
        let input = (0..vocab.len() * dimension).map(|_| T::of((rng.gen::<f64>() - 0.5) * scale)).collect();
        let nodes = vec![T::zero(); vocab.inner_nodes() * dimension];
        Self { vocab, dimension, input, nodes }
    }

    pub fn from_parts(vocab: Vocabulary, dimension: usize, input: Vec<T>, nodes: Vec<T>) -> Result<Self, EmbedError> {
        if input.len() != vocab.len() * dimension || nodes.len() != vocab.inner_nodes() * dimension {
            return Err(EmbedError::Format("matrix sizes do not match vocabulary and dimension".into()));
        }
        Ok(Self { vocab, dimension, input, nodes })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn input_vector(&self, index: usize) -> &[T] {
        &self.input[index * self.dimension..(index + 1) * self.dimension]
    }

    pub fn input_vector_mut(&mut self, index: usize) -> &mut [T] {
        let d = self.dimension;
        &mut self.input[index * d..(index + 1) * d]
    }

    pub fn node_vector(&self, index: usize) -> &[T] {
        &self.nodes[index * self.dimension..(index + 1) * self.dimension]
    }

    pub fn node_vector_mut(&mut self, index: usize) -> &mut [T] {
        let d = self.dimension;
        &mut self.nodes[index * d..(index + 1) * d]
    }

    pub fn vector(&self, token: &str) -> Option<&[T]> {
        self.vocab.get(token).map(|i| self.input_vector(i))
    }

    pub fn input_matrix(&self) -> &[T] {
        &self.input
    }

    pub fn node_matrix(&self) -> &[T] {
        &self.nodes
    }

    /// Mean of the context input vectors.
    pub fn context_vector(&self, context: &[usize]) -> Vec<T> {
        let mut h = vec![T::zero(); self.dimension];
        if context.is_empty() {
            return h;
        }
        for &c in context {
            for (acc, &x) in h.iter_mut().zip(self.input_vector(c)) {
                *acc += x;
            }
        }
        let n = T::of(context.len() as f64);
        h.iter_mut().for_each(|x| *x /= n);
        h
    }

    /// Probability of reaching `target`'s leaf from hidden vector `h`.
    pub fn leaf_probability(&self, h: &[T], target: usize) -> T {
        let e = self.vocab.entry(target);
        e.points.iter().zip(&e.code).fold(T::one(), |p, (&node, &bit)| {
            let s = sigmoid(dot(h, self.node_vector(node)));
            p * if bit == 1 { s } else { T::one() - s }
        })
    }

    pub fn log_likelihood(&self, context: &[usize], target: usize) -> T {
        let h = self.context_vector(context);
        let e = self.vocab.entry(target);
        e.points.iter().zip(&e.code).fold(T::zero(), |acc, (&node, &bit)| {
            let x = dot(&h, self.node_vector(node));
            // log sigmoid(x) = -ln(1 + e^-x); log(1 - sigmoid(x)) = -ln(1 + e^x)
            let signed = if bit == 1 { x } else { -x };
            acc - (-signed).exp().ln_1p()
        })
    }

    pub fn gradients(&self, context: &[usize], target: usize) -> Gradients<T> {
        let d = self.dimension;
        let h = self.context_vector(context);
        let e = self.vocab.entry(target);
        let mut dh = vec![T::zero(); d];
        let mut nodes = Vec::with_capacity(e.points.len());
        for (&node, &bit) in e.points.iter().zip(&e.code) {
            let v = self.node_vector(node);
            let g = T::of(bit as f64) - sigmoid(dot(&h, v));
            for k in 0..d {
                dh[k] += g * v[k];
            }
            nodes.push((node, h.iter().map(|&x| g * x).collect()));
        }
        let mut multiplicity: Vec<(usize, usize)> = Vec::new();
        for &c in context {
            match multiplicity.iter_mut().find(|(id, _)| *id == c) {
                Some((_, m)) => *m += 1,
                None => multiplicity.push((c, 1)),
            }
        }
        let n = T::of(context.len().max(1) as f64);
        let inputs = multiplicity
            .into_iter()
            .map(|(c, m)| {
                let scale = T::of(m as f64) / n;
                (c, dh.iter().map(|&x| x * scale).collect())
            })
            .collect();
        Gradients { inputs, nodes }
    }

    /// One stochastic gradient ascent step on a single sample.
    pub fn sgd_step(&mut self, context: &[usize], target: usize, learning_rate: T) {
        if context.is_empty() {
            return;
        }
        let d = self.dimension;
        let h = self.context_vector(context);
        let mut err = vec![T::zero(); d];
        let (points, code) = {
            let e = self.vocab.entry(target);
            (e.points.clone(), e.code.clone())
        };
        for (node, bit) in points.into_iter().zip(code) {
            let v = self.node_vector_mut(node);
            let g = learning_rate * (T::of(bit as f64) - sigmoid(dot(&h, v)));
            for k in 0..d {
                err[k] += g * v[k];
                v[k] += g * h[k];
            }
        }
        let n = T::of(context.len() as f64);
        for &c in context {
            let x = self.input_vector_mut(c);
            for k in 0..d {
                x[k] += err[k] / n;
            }
        }
    }

    pub fn cosine(&self, a: &str, b: &str) -> Result<T, EmbedError> {
        let va = self.vector(a).ok_or_else(|| EmbedError::UnknownToken(a.to_string()))?;
        let vb = self.vector(b).ok_or_else(|| EmbedError::UnknownToken(b.to_string()))?;
        let na = dot(va, va).sqrt();
        let nb = dot(vb, vb).sqrt();
        if na == T::zero() {
            return Err(EmbedError::ZeroVector(a.to_string()));
        }
        if nb == T::zero() {
            return Err(EmbedError::ZeroVector(b.to_string()));
        }
        let c = dot(va, vb) / (na * nb);
        Ok(c.max(-T::one()).min(T::one()))
    }

    /// Writes the binary layout: magic, dimension, vocabulary, then both
    /// matrices as little-endian f32.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&(self.dimension as u32).to_le_bytes());
        out.extend_from_slice(&(self.vocab.len() as u32).to_le_bytes());
        for e in self.vocab.entries() {
            out.extend_from_slice(&(e.token.len() as u32).to_le_bytes());
            out.extend_from_slice(e.token.as_bytes());
            out.extend_from_slice(&e.count.to_le_bytes());
        }
        for x in self.input.iter().chain(&self.nodes) {
            out.extend_from_slice(&(x.as_f64() as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EmbedError> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(8)? != MODEL_MAGIC {
            return Err(EmbedError::Format("bad magic".into()));
        }
        let dimension = r.u32()? as usize;
        let v = r.u32()? as usize;
        if dimension == 0 {
            return Err(EmbedError::Format("zero dimension".into()));
        }
        let mut counts = Vec::with_capacity(v);
        for _ in 0..v {
            let len = r.u32()? as usize;
            let token = std::str::from_utf8(r.take(len)?).map_err(|e| EmbedError::Format(e.to_string()))?.to_string();
            let count = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
            counts.push((token, count));
        }
        let vocab = Vocabulary::from_ordered_counts(counts)?;
        let mut read_matrix = |n: usize| -> Result<Vec<T>, EmbedError> {
            (0..n).map(|_| Ok(T::of(f32::from_le_bytes(r.take(4)?.try_into().unwrap()) as f64))).collect()
        };
        let input = read_matrix(v * dimension)?;
        let nodes = read_matrix(vocab.inner_nodes() * dimension)?;
        if r.pos != bytes.len() {
            return Err(EmbedError::Format("trailing bytes".into()));
        }
        Self::from_parts(vocab, dimension, input, nodes)
    }

    pub fn save(&self, path: &Path) -> Result<(), EmbedError> {
        fs::write(path, self.to_bytes()).map_err(|source| EmbedError::Io { path: path.to_path_buf(), source })
    }

    pub fn load(path: &Path) -> Result<Self, EmbedError> {
        let bytes = fs::read(path).map_err(|source| EmbedError::Io { path: path.to_path_buf(), source })?;
        Self::from_bytes(&bytes)
    }

    /// One `token v1 ... vd` line per vocabulary entry.
    pub fn write_text(&self, path: &Path) -> Result<(), EmbedError> {
        let io = |source| EmbedError::Io { path: path.to_path_buf(), source };
        let mut w = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
        for (i, e) in self.vocab.entries().iter().enumerate() {
            let mut line = e.token.clone();
            for x in self.input_vector(i) {
                line.push(' ');
                line.push_str(&(x.as_f64() as f32).to_string());
            }
            line.push('\n');
            w.write_all(line.as_bytes()).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], EmbedError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| EmbedError::Format("unexpected end of file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, EmbedError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Trains CBOW embeddings. Single-threaded and deterministic for a given seed:
/// sentences, positions and context windows are visited in a fixed order.
pub fn train<T: Scalar, S: AsRef<[String]>>(sentences: &[S], config: &TrainConfig) -> Result<Embeddings<T>, EmbedError> {
    config.validate()?;
    let vocab = build_vocab(sentences, config.min_count)?;
    let mut model = Embeddings::<T>::initialize(vocab, config.dimension, config.seed);
    if config.epochs == 0 {
        return Ok(model);
    }
    let encoded: Vec<Vec<usize>> = sentences
        .iter()
        .map(|s| s.as_ref().iter().filter_map(|t| model.vocab.get(t)).collect())
        .collect();
    let per_epoch: usize = encoded.iter().map(Vec::len).sum();
    let total = (per_epoch * config.epochs).max(1) as f64;
    let init = config.initial_learning_rate;
    let mut processed = 0usize;
    let mut context = Vec::with_capacity(2 * config.window);
    for _ in 0..config.epochs {
        for sentence in &encoded {
            for pos in 0..sentence.len() {
                let lr = init * (1.0 - processed as f64 / total).max(MIN_LEARNING_RATE_FRACTION);
                processed += 1;
                let lo = pos.saturating_sub(config.window);
                let hi = (pos + config.window + 1).min(sentence.len());
                context.clear();
                context.extend((lo..hi).filter(|&j| j != pos).map(|j| sentence[j]));
                model.sgd_step(&context, sentence[pos], T::of(lr));
            }
        }
    }
    Ok(model)
}

/// Largest relative error between the analytic gradient and central finite
/// differences over every parameter the sample touches.
pub fn gradient_check(model: &Embeddings<f64>, context: &[usize], target: usize) -> f64 {
    let grads = model.gradients(context, target);
    let h = FINITE_DIFFERENCE_STEP;
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
    let mut worst: f64 = 0.0;
    let mut probe = model.clone();
    for (idx, g) in &grads.inputs {
        for k in 0..model.dimension {
            let orig = probe.input_vector(*idx)[k];
            probe.input_vector_mut(*idx)[k] = orig + h;
            let up = probe.log_likelihood(context, target);
            probe.input_vector_mut(*idx)[k] = orig - h;
            let down = probe.log_likelihood(context, target);
            probe.input_vector_mut(*idx)[k] = orig;
            worst = worst.max(rel(g[k], (up - down) / (2.0 * h)));
        }
    }
    for (idx, g) in &grads.nodes {
        for k in 0..model.dimension {
            let orig = probe.node_vector(*idx)[k];
            probe.node_vector_mut(*idx)[k] = orig + h;
            let up = probe.log_likelihood(context, target);
            probe.node_vector_mut(*idx)[k] = orig - h;
            let down = probe.log_likelihood(context, target);
            probe.node_vector_mut(*idx)[k] = orig;
            worst = worst.max(rel(g[k], (up - down) / (2.0 * h)));
        }
    }
    worst
}

/// A model with every parameter drawn from `U(-1, 1)`, for gradient checks.
pub fn random_model(vocab: Vocabulary, dimension: usize, seed: u64) -> Embeddings<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input = (0..vocab.len() * dimension).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nodes = (0..vocab.inner_nodes() * dimension).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Embeddings::from_parts(vocab, dimension, input, nodes).expect("sizes match by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sentences(lines: &[&str]) -> Vec<Vec<String>> {
        lines.iter().map(|l| l.split_whitespace().map(String::from).collect()).collect()
    }

    fn code_len(v: &Vocabulary, t: &str) -> usize {
        v.entry(v.get(t).unwrap()).code.len()
    }

    #[test]
    fn huffman_code_lengths() {
        let v = build_vocab(&sentences(&["a a a a b b c"]), 1).unwrap();
        assert_eq!((code_len(&v, "a"), code_len(&v, "b"), code_len(&v, "c")), (1, 2, 2));
        assert_eq!(v.entries().iter().map(|e| e.token.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
    }

    #[test]
    fn min_count_filters() {
        let v = build_vocab(&sentences(&["a a b"]), 2).unwrap();
        assert_eq!(v.len(), 1);
        assert!(v.get("b").is_none());
        assert!(matches!(build_vocab(&sentences(&["a b"]), 2), Err(EmbedError::AllFiltered(2))));
        assert!(matches!(build_vocab::<Vec<String>>(&[], 1), Err(EmbedError::EmptyCorpus)));
    }

    #[test]
    fn single_token_has_empty_code() {
        let v = build_vocab(&sentences(&["a a a"]), 1).unwrap();
        assert!(v.entry(0).code.is_empty());
        assert_eq!(v.inner_nodes(), 0);
        let m = Embeddings::<f64>::initialize(v, 4, 1);
        assert_eq!(m.leaf_probability(&[0.3, 0.1, 0.0, 0.2], 0), 1.0);
    }

    #[test]
    fn ties_broken_lexicographically() {
        let v = build_vocab(&sentences(&["d c b a"]), 1).unwrap();
        assert_eq!(v.entries().iter().map(|e| e.token.as_str()).collect::<Vec<_>>(), ["a", "b", "c", "d"]);
        let again = build_vocab(&sentences(&["a b c d"]), 1).unwrap();
        assert_eq!(v, again);
    }

    #[test]
    fn zero_node_vectors_give_half_sigmoid_gradient() {
        let v = build_vocab(&sentences(&["a b c d"]), 1).unwrap();
        let mut m = Embeddings::<f64>::initialize(v, 3, 7);
        m.input_vector_mut(1).copy_from_slice(&[0.2, -0.4, 0.6]);
        let g = m.gradients(&[1], 0);
        let e = m.vocabulary().entry(0).clone();
        let (root, bit) = (e.points[0], e.code[0]);
        let root_grad = &g.nodes.iter().find(|(n, _)| *n == root).unwrap().1;
        // loss gradient (sigmoid(0) - bit) * h is the negative of the log-likelihood gradient
        let expected: Vec<f64> = [0.2, -0.4, 0.6].iter().map(|x| (0.5 - bit as f64) * x).collect();
        for (a, b) in root_grad.iter().zip(&expected) {
            assert!((-a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_epochs_keeps_initialization() {
        let s = sentences(&["a b c a b c"]);
        let cfg = TrainConfig { dimension: 8, epochs: 0, min_count: 1, ..Default::default() };
        let m: Embeddings<f64> = train(&s, &cfg).unwrap();
        let init = Embeddings::<f64>::initialize(build_vocab(&s, 1).unwrap(), 8, cfg.seed);
        assert_eq!(m, init);
    }

    #[test]
    fn cosine_basics() {
        let v = build_vocab(&sentences(&["a b c"]), 1).unwrap();
        let mut m = Embeddings::<f64>::initialize(v, 2, 1);
        m.input_vector_mut(0).copy_from_slice(&[1.0, 0.0]);
        m.input_vector_mut(1).copy_from_slice(&[0.0, 2.0]);
        m.input_vector_mut(2).copy_from_slice(&[0.0, 0.0]);
        assert!((m.cosine("a", "a").unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(m.cosine("a", "b").unwrap(), 0.0);
        assert_eq!(m.cosine("a", "b").unwrap(), m.cosine("b", "a").unwrap());
        assert!(matches!(m.cosine("a", "zz"), Err(EmbedError::UnknownToken(_))));
        assert!(matches!(m.cosine("a", "c"), Err(EmbedError::ZeroVector(_))));
    }

    #[test]
    fn gradient_check_dimension_one() {
        let v = build_vocab(&sentences(&["a a a b b c d"]), 1).unwrap();
        let m = random_model(v, 1, 3);
        assert!(gradient_check(&m, &[1, 2], 0) <= 1e-6);
        assert!(gradient_check(&m, &[0, 0, 3], 2) <= 1e-6);
    }

    #[test]
    fn binary_round_trip() {
        let s = sentences(&["a b c a b", "c d a"]);
        let m: Embeddings<f32> = train(&s, &TrainConfig { dimension: 5, min_count: 1, epochs: 2, ..Default::default() }).unwrap();
        let back = Embeddings::<f32>::from_bytes(&m.to_bytes()).unwrap();
        assert_eq!(back, m);
        assert!(Embeddings::<f32>::from_bytes(b"nope").is_err());
        let mut truncated = m.to_bytes();
        truncated.pop();
        assert!(Embeddings::<f32>::from_bytes(&truncated).is_err());
    }

    #[test]
    fn text_format() {
        let s = sentences(&["a b a"]);
        let m: Embeddings<f32> = train(&s, &TrainConfig { dimension: 3, min_count: 1, epochs: 1, ..Default::default() }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.txt");
        m.write_text(&p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("a "));
        assert_eq!(lines[0].split(' ').count(), 4);
    }

    #[test]
    fn invalid_config() {
        let s = sentences(&["a b"]);
        assert!(train::<f32, _>(&s, &TrainConfig { dimension: 0, ..Default::default() }).is_err());
        assert!(train::<f32, _>(&s, &TrainConfig { initial_learning_rate: 0.0, ..Default::default() }).is_err());
    }
}
