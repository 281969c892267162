//! Versioned binary checkpoints of a full session.
//!
//! A checkpoint captures everything needed to resume or evaluate: model
//! parameters, optimizer state, node states, the history index, the
//! sequence model, dataset statistics, and the RNG state. Layout is a
//! fixed little-endian encoding behind a magic/version header; identical
//! sessions produce byte-identical files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::dynamics::{NodeState, StateStore};
use crate::error::{Error, Result};
use crate::ingest::{DatasetStats, NodeRef};
use crate::optim::Adam;
use crate::params::{ModelParameters, ParamLayout};
use crate::relation::HistoryIndex;
use crate::seq_embed::SequenceEmbeddingModel;
use crate::trainer::ModelState;

const MAGIC: &[u8; 8] = b"TINECKPT";
const VERSION: u32 = 1;

pub fn save<P: AsRef<Path>>(path: P, state: &ModelState) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_state(&mut w, state)?;
    w.flush()?;
    Ok(())
}

pub fn load<P: AsRef<Path>>(path: P) -> Result<ModelState> {
    let mut r = BufReader::new(File::open(path)?);
    read_state(&mut r)
}

fn write_state<W: Write>(w: &mut W, state: &ModelState) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    let layout = &state.params.layout;
    w.write_u64::<LittleEndian>(layout.dim as u64)?;
    w.write_u64::<LittleEndian>(layout.heads as u64)?;
    w.write_u64::<LittleEndian>(layout.attn_dim as u64)?;

    write_f64s(w, &state.params.values)?;

    w.write_f64::<LittleEndian>(state.optimizer.beta1)?;
    w.write_f64::<LittleEndian>(state.optimizer.beta2)?;
    w.write_f64::<LittleEndian>(state.optimizer.epsilon)?;
    w.write_u64::<LittleEndian>(state.optimizer.step)?;
    write_f64s(w, &state.optimizer.m)?;
    write_f64s(w, &state.optimizer.v)?;

    write_states(w, &state.states)?;
    state.index.write_to(w)?;
    state.seq_model.write_to(w)?;

    w.write_f64::<LittleEndian>(state.stats.mean_inter_event_gap)?;
    w.write_u64::<LittleEndian>(state.stats.user_count as u64)?;
    w.write_u64::<LittleEndian>(state.stats.item_count as u64)?;
    w.write_u64::<LittleEndian>(state.stats.interaction_count as u64)?;

    w.write_all(&state.rng.get_seed())?;
    w.write_u128::<LittleEndian>(state.rng.get_word_pos())?;
    Ok(())
}

fn read_state<R: Read>(r: &mut R) -> Result<ModelState> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic; not a checkpoint file".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let dim = r.read_u64::<LittleEndian>()? as usize;
    let heads = r.read_u64::<LittleEndian>()? as usize;
    let attn_dim = r.read_u64::<LittleEndian>()? as usize;
    let layout = ParamLayout::new(dim, heads, attn_dim);

    let values = read_f64s(r)?;
    if values.len() != layout.total {
        return Err(Error::Checkpoint(format!(
            "parameter count {} does not match layout {}",
            values.len(),
            layout.total
        )));
    }
    let params = ModelParameters { layout, values };

    let beta1 = r.read_f64::<LittleEndian>()?;
    let beta2 = r.read_f64::<LittleEndian>()?;
    let epsilon = r.read_f64::<LittleEndian>()?;
    let step = r.read_u64::<LittleEndian>()?;
    let m = read_f64s(r)?;
    let v = read_f64s(r)?;
    if m.len() != params.values.len() || v.len() != params.values.len() {
        return Err(Error::Checkpoint("optimizer state size mismatch".into()));
    }
    let optimizer = Adam { beta1, beta2, epsilon, m, v, step };

    let states = read_states(r, dim)?;
    let index = HistoryIndex::read_from(r)?;
    let seq_model = SequenceEmbeddingModel::read_from(r)?;

    let stats = DatasetStats {
        mean_inter_event_gap: r.read_f64::<LittleEndian>()?,
        user_count: r.read_u64::<LittleEndian>()? as usize,
        item_count: r.read_u64::<LittleEndian>()? as usize,
        interaction_count: r.read_u64::<LittleEndian>()? as usize,
    };

    let mut seed = [0u8; 32];
    r.read_exact(&mut seed)?;
    let word_pos = r.read_u128::<LittleEndian>()?;
    let mut rng = ChaCha20Rng::from_seed(seed);
    rng.set_word_pos(word_pos);

    Ok(ModelState { params, optimizer, states, index, seq_model, stats, rng })
}

fn write_f64s<W: Write>(w: &mut W, xs: &[f64]) -> Result<()> {
    w.write_u64::<LittleEndian>(xs.len() as u64)?;
    for x in xs {
        w.write_f64::<LittleEndian>(*x)?;
    }
    Ok(())
}

fn read_f64s<R: Read>(r: &mut R) -> Result<Vec<f64>> {
    let n = r.read_u64::<LittleEndian>()? as usize;
    let mut out = vec![0.0; n];
    for x in out.iter_mut() {
        *x = r.read_f64::<LittleEndian>()?;
    }
    Ok(out)
}

fn write_states<W: Write>(w: &mut W, states: &StateStore) -> Result<()> {
    w.write_u64::<LittleEndian>(states.user_count() as u64)?;
    w.write_u64::<LittleEndian>(states.item_count() as u64)?;
    let write_side = |w: &mut W, nodes: Vec<Option<&NodeState>>| -> Result<()> {
        for s in nodes {
            match s {
                Some(st) => {
                    w.write_u8(1)?;
                    for x in &st.embedding {
                        w.write_f64::<LittleEndian>(*x)?;
                    }
                    w.write_f64::<LittleEndian>(st.last_time)?;
                }
                None => w.write_u8(0)?,
            }
        }
        Ok(())
    };
    write_side(w, (0..states.user_count()).map(|i| states.get(NodeRef::user(i as u32))).collect())?;
    write_side(w, (0..states.item_count()).map(|i| states.get(NodeRef::item(i as u32))).collect())?;
    Ok(())
}

fn read_states<R: Read>(r: &mut R, dim: usize) -> Result<StateStore> {
    let user_count = r.read_u64::<LittleEndian>()? as usize;
    let item_count = r.read_u64::<LittleEndian>()? as usize;
    let mut states = StateStore::new(dim, user_count, item_count);
    let read_side = |r: &mut R, make: &dyn Fn(u32) -> NodeRef, count: usize, states: &mut StateStore| -> Result<()> {
        for i in 0..count {
            if r.read_u8()? == 1 {
                let mut emb = vec![0.0; dim];
                for x in emb.iter_mut() {
                    *x = r.read_f64::<LittleEndian>()?;
                }
                let t = r.read_f64::<LittleEndian>()?;
                states.set(make(i as u32), emb, t);
            }
        }
        Ok(())
    };
    read_side(r, &NodeRef::user, user_count, &mut states)?;
    read_side(r, &NodeRef::item, item_count, &mut states)?;
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::HyperParams;
    use crate::ingest::TemporalInteractionNetwork;
    use crate::trainer::train;

    #[test]
    fn round_trips_a_trained_session() {
        let rows: String =
            (0..20).map(|i| format!("u{},i{},{}\n", i % 3, (i * 2) % 4, i)).collect();
        let net = TemporalInteractionNetwork::parse_csv(&rows).unwrap();
        let hyper = HyperParams {
            embedding_dim: 4,
            attention_heads: 2,
            attention_dim: Some(2),
            seq_dim: 6,
            seq_initial_passes: 2,
            seq_incremental_passes: 1,
            epochs: 2,
            workers: 1,
            ..Default::default()
        };
        let (state, _) = train(&net, net.interactions(), &hyper).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.bin");
        save(&path, &state).unwrap();
        let loaded = load(&path).unwrap();
        assert_eq!(loaded.params.values, state.params.values);
        assert_eq!(loaded.optimizer, state.optimizer);
        assert_eq!(loaded.states, state.states);
        assert_eq!(loaded.index, state.index);
        assert_eq!(loaded.stats, state.stats);
        assert_eq!(loaded.rng.get_word_pos(), state.rng.get_word_pos());
        // Saving again produces byte-identical files.
        let path2 = dir.path().join("ckpt2.bin");
        save(&path2, &loaded).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn rejects_garbage_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.bin");
        std::fs::write(&path, b"definitely not a checkpoint").unwrap();
        assert!(matches!(load(&path), Err(Error::Checkpoint(_))));
    }
}
