//! Paragraph-vector embeddings of interaction sequences.
//!
//! Every node's time-ordered partner sequence is a "sentence" and the node
//! itself is the document: PV-DBOW trains the document vector to predict
//! the sentence's words with negative sampling. Because interactions keep
//! arriving, the model supports incremental refreshes that only touch the
//! sentences extended since the last refresh. Read-side vectors are
//! L2-normalized, so the dot product of two reads is their cosine.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::ingest::{Interaction, NodeRef};
use crate::relation::HistoryIndex;

/// Training knobs of the sequence model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeqTrainConfig {
    /// Sliding-window length (carried with the model; plain PV-DBOW pairs
    /// the document with every sentence word, so the window does not alter
    /// the objective).
    pub window: usize,
    /// Negative samples per target word.
    pub negatives: usize,
    /// Passes over the whole corpus in [`SequenceEmbeddingModel::fit_initial`].
    pub initial_passes: usize,
    /// Passes over touched sentences per incremental refresh.
    pub incremental_passes: usize,
    /// Starting learning rate, decayed linearly to [`Self::MIN_LEARNING_RATE`]
    /// within each fit or refresh call.
    pub learning_rate: f64,
}

impl SeqTrainConfig {
    pub const MIN_LEARNING_RATE: f64 = 1e-4;
}

impl Default for SeqTrainConfig {
    fn default() -> Self {
        Self {
            window: 5,
            negatives: 5,
            initial_passes: 20,
            incremental_passes: 5,
            learning_rate: 0.025,
        }
    }
}

impl From<&crate::config::HyperParams> for SeqTrainConfig {
    fn from(h: &crate::config::HyperParams) -> Self {
        Self {
            window: h.seq_window,
            negatives: h.seq_negatives,
            initial_passes: h.seq_initial_passes,
            incremental_passes: h.seq_incremental_passes,
            learning_rate: h.seq_learning_rate,
        }
    }
}

/// Per-node interaction sentences, in a fixed order.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    sentences: Vec<(NodeRef, Vec<NodeRef>)>,
}

impl Corpus {
    pub fn from_sentences(sentences: Vec<(NodeRef, Vec<NodeRef>)>) -> Self {
        Self { sentences }
    }

    /// Builds the corpus of a prefix slice: one sentence per active node,
    /// partners ordered by interaction time.
    pub fn from_interactions(slice: &[Interaction], user_count: usize, item_count: usize) -> Self {
        let mut users: Vec<Vec<NodeRef>> = vec![Vec::new(); user_count];
        let mut items: Vec<Vec<NodeRef>> = vec![Vec::new(); item_count];
        for s in slice {
            users[s.user as usize].push(NodeRef::item(s.item));
            items[s.item as usize].push(NodeRef::user(s.user));
        }
        let mut sentences = Vec::new();
        for (i, sent) in users.into_iter().enumerate() {
            if !sent.is_empty() {
                sentences.push((NodeRef::user(i as u32), sent));
            }
        }
        for (i, sent) in items.into_iter().enumerate() {
            if !sent.is_empty() {
                sentences.push((NodeRef::item(i as u32), sent));
            }
        }
        Self { sentences }
    }

    pub fn from_index(index: &HistoryIndex) -> Self {
        let mut sentences = Vec::new();
        for i in 0..index.user_count() {
            let node = NodeRef::user(i as u32);
            let sent: Vec<NodeRef> = index.partner_sequence(node).map(|(p, _)| p).collect();
            if !sent.is_empty() {
                sentences.push((node, sent));
            }
        }
        for i in 0..index.item_count() {
            let node = NodeRef::item(i as u32);
            let sent: Vec<NodeRef> = index.partner_sequence(node).map(|(p, _)| p).collect();
            if !sent.is_empty() {
                sentences.push((node, sent));
            }
        }
        Self { sentences }
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn sentences(&self) -> &[(NodeRef, Vec<NodeRef>)] {
        &self.sentences
    }
}

#[derive(Debug, Clone, PartialEq)]
struct NodeData {
    /// Document vector (input side).
    doc: Vec<f64>,
    /// Output vector used by the negative-sampling objective.
    word: Vec<f64>,
    /// The node's sentence: partners in interaction-time order.
    sentence: Vec<NodeRef>,
    /// Occurrences of this node as a word in other sentences.
    freq: u64,
}

/// PV-DBOW model over node interaction sequences.
#[derive(Debug, Clone)]
pub struct SequenceEmbeddingModel {
    dim: usize,
    cfg: SeqTrainConfig,
    nodes: HashMap<NodeRef, NodeData>,
    /// Activation order; all order-sensitive iteration goes through this.
    order: Vec<NodeRef>,
    total_words: u64,
    update_counter: u64,
    rng: ChaCha20Rng,
}

impl SequenceEmbeddingModel {
    /// An empty model that grows via [`Self::incremental_update`].
    pub fn new(dim: usize, cfg: SeqTrainConfig, seed: u64) -> Self {
        Self {
            dim,
            cfg,
            nodes: HashMap::new(),
            order: Vec::new(),
            total_words: 0,
            update_counter: 0,
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    /// Fits a fresh model on a corpus: random document vectors, zero output
    /// vectors, then `initial_passes` training passes. Deterministic given
    /// the seed.
    pub fn fit_initial(corpus: &Corpus, dim: usize, cfg: SeqTrainConfig, seed: u64) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::Empty("corpus"));
        }
        let mut model = Self::new(dim, cfg, seed);
        for (node, sentence) in corpus.sentences() {
            model.activate(*node);
            for w in sentence {
                model.activate(*w);
            }
        }
        for (node, sentence) in corpus.sentences() {
            let data = model.nodes.get_mut(node).expect("activated");
            data.sentence = sentence.clone();
            model.total_words += sentence.len() as u64;
            for w in sentence {
                model.nodes.get_mut(w).expect("activated").freq += 1;
            }
        }
        let all: Vec<NodeRef> = model.order.clone();
        model.train_sentences(&all, cfg.initial_passes);
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn config(&self) -> &SeqTrainConfig {
        &self.cfg
    }

    pub fn update_counter(&self) -> u64 {
        self.update_counter
    }

    pub fn known_nodes(&self) -> usize {
        self.order.len()
    }

    pub fn contains(&self, node: NodeRef) -> bool {
        self.nodes.contains_key(&node)
    }

    fn activate(&mut self, node: NodeRef) {
        if self.nodes.contains_key(&node) {
            return;
        }
        let dim = self.dim;
        let mut doc = vec![0.0; dim];
        for x in doc.iter_mut() {
            *x = (self.rng.gen::<f64>() - 0.5) / dim as f64;
        }
        self.nodes.insert(
            node,
            NodeData { doc, word: vec![0.0; dim], sentence: Vec::new(), freq: 0 },
        );
        self.order.push(node);
    }

    /// Extends sentences with newly arrived interactions and retrains the
    /// touched sentences only. An empty slice leaves the model bitwise
    /// unchanged.
    pub fn incremental_update(&mut self, appended: &[Interaction]) {
        if appended.is_empty() {
            return;
        }
        let mut touched: Vec<NodeRef> = Vec::new();
        for s in appended {
            let u = NodeRef::user(s.user);
            let v = NodeRef::item(s.item);
            self.activate(u);
            self.activate(v);
            self.nodes.get_mut(&u).expect("active").sentence.push(v);
            self.nodes.get_mut(&v).expect("active").sentence.push(u);
            self.nodes.get_mut(&u).expect("active").freq += 1;
            self.nodes.get_mut(&v).expect("active").freq += 1;
            self.total_words += 2;
            touched.push(u);
            touched.push(v);
        }
        touched.sort_unstable();
        touched.dedup();
        self.train_sentences(&touched, self.cfg.incremental_passes);
        self.update_counter += 1;
    }

    /// Unit-normalized document vector: `Ok(None)` for unknown nodes, an
    /// error for a degenerate zero-norm vector.
    pub fn embedding_of(&self, node: NodeRef) -> Result<Option<Vec<f64>>> {
        match self.nodes.get(&node) {
            None => Ok(None),
            Some(data) => {
                let norm = data.doc.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm < 1e-12 {
                    return Err(Error::DegenerateVector(node.to_string()));
                }
                Ok(Some(data.doc.iter().map(|x| x / norm).collect()))
            }
        }
    }

    /// Raw (unnormalized) document vector, for tests and serialization.
    pub fn raw_doc(&self, node: NodeRef) -> Option<&[f64]> {
        self.nodes.get(&node).map(|d| d.doc.as_slice())
    }

    fn train_sentences(&mut self, docs: &[NodeRef], passes: usize) {
        if passes == 0 || docs.is_empty() {
            return;
        }
        let table = self.noise_table();
        if table.is_empty() {
            return;
        }
        let total_targets: u64 = passes as u64
            * docs
                .iter()
                .map(|n| self.nodes[n].sentence.len() as u64)
                .sum::<u64>();
        if total_targets == 0 {
            return;
        }
        let lr0 = self.cfg.learning_rate;
        let lr1 = SeqTrainConfig::MIN_LEARNING_RATE.min(lr0);
        let mut done = 0u64;
        for _ in 0..passes {
            for node in docs {
                let sentence = self.nodes[node].sentence.clone();
                for &target in &sentence {
                    let alpha = lr0 - (lr0 - lr1) * (done as f64 / total_targets as f64);
                    self.train_target(*node, target, alpha, &table);
                    done += 1;
                }
            }
        }
    }

    /// One positive + `negatives` sampled updates for (doc, target word).
    fn train_target(&mut self, doc_node: NodeRef, target: NodeRef, alpha: f64, table: &NoiseTable) {
        let mut doc = self.nodes[&doc_node].doc.clone();
        let mut doc_grad = vec![0.0; self.dim];
        for round in 0..=self.cfg.negatives {
            let (word_node, label) = if round == 0 {
                (target, 1.0)
            } else {
                match self.sample_negative(target, table) {
                    Some(n) => (n, 0.0),
                    None => continue,
                }
            };
            let word = &mut self.nodes.get_mut(&word_node).expect("sampled from vocab").word;
            let f: f64 = doc.iter().zip(word.iter()).map(|(a, b)| a * b).sum();
            let g = (label - sigmoid(f)) * alpha;
            for ((dg, w), d) in doc_grad.iter_mut().zip(word.iter_mut()).zip(doc.iter()) {
                *dg += g * *w;
                *w += g * *d;
            }
        }
        for (d, dg) in doc.iter_mut().zip(doc_grad.iter()) {
            *d += dg;
        }
        self.nodes.get_mut(&doc_node).expect("active").doc = doc;
    }

    fn noise_table(&self) -> NoiseTable {
        let mut cumulative = Vec::with_capacity(self.order.len());
        let mut total = 0.0;
        for node in &self.order {
            total += (self.nodes[node].freq.max(1) as f64).powf(0.75);
            cumulative.push(total);
        }
        NoiseTable { cumulative, total }
    }

    fn sample_negative(&mut self, target: NodeRef, table: &NoiseTable) -> Option<NodeRef> {
        for _ in 0..8 {
            let u = self.rng.gen::<f64>() * table.total;
            let idx = table.cumulative.partition_point(|&c| c <= u).min(self.order.len() - 1);
            let node = self.order[idx];
            if node != target {
                return Some(node);
            }
        }
        None
    }
}

struct NoiseTable {
    cumulative: Vec<f64>,
    total: f64,
}

impl NoiseTable {
    fn is_empty(&self) -> bool {
        self.cumulative.is_empty() || self.total <= 0.0
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Cosine similarity of two unit vectors: their dot product, clamped to
/// [-1, 1].
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    let dot: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
    Ok(dot.clamp(-1.0, 1.0))
}

// Serialization lives here so the field layout stays private.
impl SequenceEmbeddingModel {
    pub(crate) fn write_to<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        use byteorder::{LittleEndian, WriteBytesExt};
        w.write_u64::<LittleEndian>(self.dim as u64)?;
        w.write_u64::<LittleEndian>(self.cfg.window as u64)?;
        w.write_u64::<LittleEndian>(self.cfg.negatives as u64)?;
        w.write_u64::<LittleEndian>(self.cfg.initial_passes as u64)?;
        w.write_u64::<LittleEndian>(self.cfg.incremental_passes as u64)?;
        w.write_f64::<LittleEndian>(self.cfg.learning_rate)?;
        w.write_u64::<LittleEndian>(self.total_words)?;
        w.write_u64::<LittleEndian>(self.update_counter)?;
        w.write_all(&self.rng.get_seed())?;
        w.write_u128::<LittleEndian>(self.rng.get_word_pos())?;
        w.write_u64::<LittleEndian>(self.order.len() as u64)?;
        for node in &self.order {
            write_node_ref(w, *node)?;
            let data = &self.nodes[node];
            for x in &data.doc {
                w.write_f64::<LittleEndian>(*x)?;
            }
            for x in &data.word {
                w.write_f64::<LittleEndian>(*x)?;
            }
            w.write_u64::<LittleEndian>(data.freq)?;
            w.write_u64::<LittleEndian>(data.sentence.len() as u64)?;
            for s in &data.sentence {
                write_node_ref(w, *s)?;
            }
        }
        Ok(())
    }

    pub(crate) fn read_from<R: std::io::Read>(r: &mut R) -> Result<Self> {
        use byteorder::{LittleEndian, ReadBytesExt};
        let dim = r.read_u64::<LittleEndian>()? as usize;
        let cfg = SeqTrainConfig {
            window: r.read_u64::<LittleEndian>()? as usize,
            negatives: r.read_u64::<LittleEndian>()? as usize,
            initial_passes: r.read_u64::<LittleEndian>()? as usize,
            incremental_passes: r.read_u64::<LittleEndian>()? as usize,
            learning_rate: r.read_f64::<LittleEndian>()?,
        };
        let total_words = r.read_u64::<LittleEndian>()?;
        let update_counter = r.read_u64::<LittleEndian>()?;
        let mut seed = [0u8; 32];
        r.read_exact(&mut seed)?;
        let word_pos = r.read_u128::<LittleEndian>()?;
        let mut rng = ChaCha20Rng::from_seed(seed);
        rng.set_word_pos(word_pos);
        let n = r.read_u64::<LittleEndian>()? as usize;
        let mut order = Vec::with_capacity(n);
        let mut nodes = HashMap::with_capacity(n);
        for _ in 0..n {
            let node = read_node_ref(r)?;
            let mut doc = vec![0.0; dim];
            for x in doc.iter_mut() {
                *x = r.read_f64::<LittleEndian>()?;
            }
            let mut word = vec![0.0; dim];
            for x in word.iter_mut() {
                *x = r.read_f64::<LittleEndian>()?;
            }
            let freq = r.read_u64::<LittleEndian>()?;
            let slen = r.read_u64::<LittleEndian>()? as usize;
            let mut sentence = Vec::with_capacity(slen);
            for _ in 0..slen {
                sentence.push(read_node_ref(r)?);
            }
            order.push(node);
            nodes.insert(node, NodeData { doc, word, sentence, freq });
        }
        Ok(Self { dim, cfg, nodes, order, total_words, update_counter, rng })
    }
}

fn write_node_ref<W: std::io::Write>(w: &mut W, node: NodeRef) -> Result<()> {
    use byteorder::{LittleEndian, WriteBytesExt};
    w.write_u8(match node.kind {
        crate::ingest::NodeKind::User => 0,
        crate::ingest::NodeKind::Item => 1,
    })?;
    w.write_u32::<LittleEndian>(node.index)?;
    Ok(())
}

fn read_node_ref<R: std::io::Read>(r: &mut R) -> Result<NodeRef> {
    use byteorder::{LittleEndian, ReadBytesExt};
    let kind = match r.read_u8()? {
        0 => crate::ingest::NodeKind::User,
        1 => crate::ingest::NodeKind::Item,
        k => return Err(Error::Checkpoint(format!("bad node kind tag {k}"))),
    };
    Ok(NodeRef { kind, index: r.read_u32::<LittleEndian>()? })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interaction(user: u32, item: u32, t: f64, i: u32) -> Interaction {
        Interaction { user, item, timestamp: t, seq_index: i }
    }

    fn unit(v: &[f64]) -> Vec<f64> {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect()
    }

    #[test]
    fn cosine_identity_and_orthogonality() {
        let a = unit(&[0.3, -0.4, 0.5]);
        assert!((cosine_similarity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let x = vec![1.0, 0.0];
        let y = vec![0.0, 1.0];
        assert_eq!(cosine_similarity(&x, &y).unwrap(), 0.0);
    }

    #[test]
    fn cosine_of_concrete_pair() {
        let a = vec![0.6, 0.8];
        let b = vec![0.8, 0.6];
        assert!((cosine_similarity(&a, &b).unwrap() - 0.96).abs() < 1e-12);
    }

    #[test]
    fn cosine_dimension_mismatch() {
        assert!(cosine_similarity(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let err =
            SequenceEmbeddingModel::fit_initial(&Corpus::default(), 8, SeqTrainConfig::default(), 1)
                .unwrap_err();
        assert!(matches!(err, Error::Empty("corpus")));
    }

    #[test]
    fn single_sentence_corpus_trains_and_normalizes() {
        let corpus = Corpus::from_sentences(vec![(
            NodeRef::user(0),
            vec![NodeRef::item(0), NodeRef::item(1)],
        )]);
        let model =
            SequenceEmbeddingModel::fit_initial(&corpus, 16, SeqTrainConfig::default(), 3).unwrap();
        let e = model.embedding_of(NodeRef::user(0)).unwrap().unwrap();
        let norm: f64 = e.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_passes_keep_random_init() {
        let corpus = Corpus::from_sentences(vec![(
            NodeRef::user(0),
            vec![NodeRef::item(0), NodeRef::item(1)],
        )]);
        let cfg = SeqTrainConfig { initial_passes: 0, ..SeqTrainConfig::default() };
        let trained = SequenceEmbeddingModel::fit_initial(&corpus, 16, cfg, 3).unwrap();
        let mut blank = SequenceEmbeddingModel::new(16, cfg, 3);
        blank.activate(NodeRef::user(0));
        assert_eq!(trained.raw_doc(NodeRef::user(0)), blank.raw_doc(NodeRef::user(0)));
        let norm: f64 = trained
            .embedding_of(NodeRef::user(0))
            .unwrap()
            .unwrap()
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unknown_node_is_absent() {
        let model = SequenceEmbeddingModel::new(8, SeqTrainConfig::default(), 1);
        assert!(model.embedding_of(NodeRef::user(9)).unwrap().is_none());
    }

    #[test]
    fn identical_sequences_rank_above_disjoint_ones() {
        // Users A and B share a sentence; C's sentence is disjoint. Across
        // 20 seeds the trained cosine must rank (A,B) above (A,C) at least
        // 19 times. Sentences cycle through their partners the way repeat
        // consumption does, giving each pass enough tokens to train on.
        let shared: Vec<NodeRef> = (0..40).map(|i| NodeRef::item(i % 8)).collect();
        let disjoint: Vec<NodeRef> = (0..40).map(|i| NodeRef::item(8 + i % 8)).collect();
        let corpus = Corpus::from_sentences(vec![
            (NodeRef::user(0), shared.clone()),
            (NodeRef::user(1), shared),
            (NodeRef::user(2), disjoint),
        ]);
        let mut wins = 0;
        for seed in 0..20 {
            let model =
                SequenceEmbeddingModel::fit_initial(&corpus, 32, SeqTrainConfig::default(), seed)
                    .unwrap();
            let a = model.embedding_of(NodeRef::user(0)).unwrap().unwrap();
            let b = model.embedding_of(NodeRef::user(1)).unwrap().unwrap();
            let c = model.embedding_of(NodeRef::user(2)).unwrap().unwrap();
            let ab = cosine_similarity(&a, &b).unwrap();
            let ac = cosine_similarity(&a, &c).unwrap();
            if ab > ac {
                wins += 1;
            }
        }
        assert!(wins >= 19, "identical sequences won only {wins}/20 seeds");
    }

    #[test]
    fn determinism_same_seed_same_model() {
        let corpus = Corpus::from_interactions(
            &[
                interaction(0, 0, 1.0, 1),
                interaction(1, 0, 2.0, 2),
                interaction(0, 1, 3.0, 3),
            ],
            2,
            2,
        );
        let a = SequenceEmbeddingModel::fit_initial(&corpus, 12, SeqTrainConfig::default(), 42)
            .unwrap();
        let b = SequenceEmbeddingModel::fit_initial(&corpus, 12, SeqTrainConfig::default(), 42)
            .unwrap();
        for node in [NodeRef::user(0), NodeRef::user(1), NodeRef::item(0), NodeRef::item(1)] {
            assert_eq!(a.raw_doc(node), b.raw_doc(node));
        }
    }

    #[test]
    fn noop_incremental_update_is_bitwise_identity() {
        let corpus = Corpus::from_interactions(&[interaction(0, 0, 1.0, 1)], 1, 1);
        let mut model =
            SequenceEmbeddingModel::fit_initial(&corpus, 8, SeqTrainConfig::default(), 5).unwrap();
        let before = model.clone();
        model.incremental_update(&[]);
        assert_eq!(model.raw_doc(NodeRef::user(0)), before.raw_doc(NodeRef::user(0)));
        assert_eq!(model.update_counter(), before.update_counter());
        assert_eq!(model.rng.get_word_pos(), before.rng.get_word_pos());
    }

    #[test]
    fn new_node_gets_exactly_one_new_doc_vector() {
        let corpus = Corpus::from_interactions(&[interaction(0, 0, 1.0, 1)], 2, 2);
        let mut model =
            SequenceEmbeddingModel::fit_initial(&corpus, 8, SeqTrainConfig::default(), 5).unwrap();
        let before = model.known_nodes();
        model.incremental_update(&[interaction(1, 0, 2.0, 2)]);
        assert_eq!(model.known_nodes(), before + 1);
        assert!(model.contains(NodeRef::user(1)));
    }

    #[test]
    fn untouched_docs_are_unchanged_by_incremental_update() {
        let corpus = Corpus::from_interactions(
            &[
                interaction(0, 0, 1.0, 1),
                interaction(1, 1, 2.0, 2),
                interaction(2, 2, 3.0, 3),
            ],
            3,
            3,
        );
        let mut model =
            SequenceEmbeddingModel::fit_initial(&corpus, 8, SeqTrainConfig::default(), 9).unwrap();
        let b_doc = model.raw_doc(NodeRef::user(1)).unwrap().to_vec();
        let c_doc = model.raw_doc(NodeRef::user(2)).unwrap().to_vec();
        // Touches the sentences of user 0 and item 0 only.
        model.incremental_update(&[interaction(0, 0, 4.0, 4)]);
        assert_eq!(model.raw_doc(NodeRef::user(1)).unwrap(), b_doc.as_slice());
        assert_eq!(model.raw_doc(NodeRef::user(2)).unwrap(), c_doc.as_slice());
    }

    #[test]
    fn serialization_round_trips() {
        let corpus = Corpus::from_interactions(
            &[interaction(0, 0, 1.0, 1), interaction(1, 0, 2.0, 2)],
            2,
            1,
        );
        let model =
            SequenceEmbeddingModel::fit_initial(&corpus, 8, SeqTrainConfig::default(), 11).unwrap();
        let mut buf = Vec::new();
        model.write_to(&mut buf).unwrap();
        let loaded = SequenceEmbeddingModel::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(loaded.dim(), model.dim());
        assert_eq!(loaded.order, model.order);
        assert_eq!(loaded.nodes, model.nodes);
        assert_eq!(loaded.rng.get_word_pos(), model.rng.get_word_pos());
    }
}
