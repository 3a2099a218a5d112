use super::*;
use crate::textenc::{build_vocab, encode_pair, EncodedPair, Vocab};
use alloc::vec::Vec;

fn tiny(vocab: &Vocab, max_len: usize) -> ModelConfig {
    ModelConfig {
        vocab_size: vocab.len(),
        hidden_size: 8,
        num_layers: 2,
        num_heads: 2,
        ffn_size: 16,
        max_len,
        dropout_rate: 0.1,
        seed: 7,
    }
}

fn setup(max_len: usize) -> (Vocab, ModelParams, Vec<EncodedPair>) {
    let vocab = build_vocab(["who wrote hamlet shakespeare paris is in france the capital"], 1);
    let params = ModelParams::init(&tiny(&vocab, max_len)).unwrap();
    let pairs = [
        ("who wrote hamlet", "shakespeare wrote hamlet"),
        ("who wrote hamlet", "paris is in france"),
        ("the capital of france", "paris"),
    ]
    .iter()
    .map(|(q, a)| encode_pair(&vocab, q, a, max_len).unwrap())
    .collect();
    (vocab, params, pairs)
}

#[test]
fn init_is_deterministic_per_seed() {
    let (vocab, a, _) = setup(16);
    let b = ModelParams::init(&tiny(&vocab, 16)).unwrap();
    assert_eq!(a.as_slice(), b.as_slice());
    let mut other = tiny(&vocab, 16);
    other.seed = 8;
    let c = ModelParams::init(&other).unwrap();
    assert_ne!(a.tensor("embeddings.token"), c.tensor("embeddings.token"));
    assert!(a.tensor("layer0.ln1.gain").unwrap().iter().all(|&g| g == 1.0));
    assert!(a.tensor("layer1.ln2.bias").unwrap().iter().all(|&g| g == 0.0));
    assert_eq!(a.tensor("head.b").unwrap(), &[0.0]);
    assert!(a.as_slice().iter().all(|&x| (x.abs() <= 0.04 || x == 1.0) && x as f32 as f64 == x));
}

#[test]
fn layout_covers_every_index_once() {
    let (_, p, _) = setup(16);
    let lay = p.layout();
    let mut at = 0;
    for t in &lay.tensors {
        assert_eq!(t.offset, at);
        at += t.len;
    }
    assert_eq!(at, p.len());
    assert_eq!(lay.tensor_of(0).unwrap().name, "embeddings.token");
    assert_eq!(lay.tensor_of(p.len() - 1).unwrap().name, "head.b");
    assert!(lay.tensor_of(p.len()).is_none());
}

#[test]
fn config_validation() {
    let mut c = ModelConfig { vocab_size: 10, ..ModelConfig::default() };
    assert!(c.validate().is_ok());
    c.num_heads = 3;
    assert!(c.validate().is_err());
    c.num_heads = 4;
    c.ffn_size = 32;
    assert!(c.validate().is_err());
    c.ffn_size = 256;
    c.dropout_rate = 1.0;
    assert!(c.validate().is_err());
    assert!(ModelConfig::default().validate().is_err());
}

#[test]
fn scores_in_open_unit_interval_and_ordered() {
    let (_, p, pairs) = setup(16);
    let (scores, cache) = forward(&p, &pairs, false, 0).unwrap();
    assert_eq!(scores.len(), 3);
    for (i, s) in scores.iter().enumerate() {
        assert!(*s > 0.0 && *s < 1.0);
        let (single, _) = forward(&p, &pairs[i..i + 1], false, 0).unwrap();
        assert_eq!(single[0], *s);
    }
    for seq in &cache.seqs {
        for layer in &seq.layers {
            for row in layer.probs.chunks(seq.n) {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn padding_does_not_change_scores() {
    let (vocab, p, _) = setup(16);
    let mut cfg = p.config().clone();
    cfg.max_len = 24;
    // same weights, longer position table: copy the shared prefix
    let mut wide = ModelParams::init(&cfg).unwrap();
    let h = cfg.hidden_size;
    let (lo, hi) = (p.layout(), wide.layout().clone());
    let src = p.as_slice();
    let dst = wide.as_mut_slice();
    dst[..lo.pos_emb].copy_from_slice(&src[..lo.pos_emb]);
    dst[hi.pos_emb..hi.pos_emb + 16 * h].copy_from_slice(&src[lo.pos_emb..lo.pos_emb + 16 * h]);
    dst[hi.seg_emb..].copy_from_slice(&src[lo.seg_emb..]);
    let a = score_pair(&p, &vocab, "who wrote hamlet", "shakespeare").unwrap();
    let b = score_pair(&wide, &vocab, "who wrote hamlet", "shakespeare").unwrap();
    assert!((a - b).abs() < 1e-9);
}

#[test]
fn pad_region_content_is_ignored() {
    let (_, p, pairs) = setup(16);
    let mut dirty = pairs[0].clone();
    let n = dirty.active_len();
    for t in n..16 {
        dirty.token_ids[t] = 5;
        dirty.segment_ids[t] = 0;
    }
    let (a, _) = forward(&p, &pairs[..1], false, 0).unwrap();
    let (b, _) = forward(&p, &[dirty], false, 0).unwrap();
    assert_eq!(a, b);
}

#[test]
fn dropout_is_seeded() {
    let (_, p, pairs) = setup(16);
    let (a, _) = forward(&p, &pairs, true, 3).unwrap();
    let (b, _) = forward(&p, &pairs, true, 3).unwrap();
    let (c, _) = forward(&p, &pairs, true, 4).unwrap();
    let (e, _) = forward(&p, &pairs, false, 3).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_ne!(a, e);
}

#[test]
fn forward_rejects_bad_input() {
    let (_, p, pairs) = setup(16);
    assert_eq!(forward(&p, &[], false, 0).unwrap_err(), ModelError::EmptyBatch);
    let mut short = pairs[0].clone();
    short.token_ids.pop();
    assert!(matches!(forward(&p, &[short], false, 0), Err(ModelError::LengthMismatch { .. })));
    let mut oov = pairs[0].clone();
    oov.token_ids[1] = 10_000;
    assert!(matches!(forward(&p, &[oov], false, 0), Err(ModelError::TokenOutOfRange { .. })));
    let mut holes = pairs[0].clone();
    holes.attention_mask[12] = 1;
    assert!(matches!(forward(&p, &[holes], false, 0), Err(ModelError::MalformedPair { .. })));
}

#[test]
fn backward_zero_and_linearity() {
    let (_, p, pairs) = setup(16);
    let (_, cache) = forward(&p, &pairs, true, 9).unwrap();
    let zero = backward(&p, &cache, &[0.0; 3]).unwrap();
    assert!(zero.as_slice().iter().all(|&g| g == 0.0));
    let g1 = [0.3, -1.2, 0.7];
    let g2 = [-0.5, 0.4, 2.0];
    let sum: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a + b).collect();
    let a = backward(&p, &cache, &g1).unwrap();
    let b = backward(&p, &cache, &g2).unwrap();
    let c = backward(&p, &cache, &sum).unwrap();
    for i in 0..p.len() {
        assert!((a.as_slice()[i] + b.as_slice()[i] - c.as_slice()[i]).abs() < 1e-10);
    }
}

#[test]
fn backward_checks_cache() {
    let (_, mut p, pairs) = setup(16);
    let (_, cache) = forward(&p, &pairs, false, 0).unwrap();
    assert!(matches!(backward(&p, &cache, &[1.0]), Err(ModelError::GradientCount { .. })));
    p.as_mut_slice()[0] += 1.0;
    assert_eq!(backward(&p, &cache, &[1.0; 3]).unwrap_err(), ModelError::StaleCache);
}

/// Central differences on every parameter of a tiny model, with dropout on
/// (the masks are fixed by the seed, so the function is smooth).
#[test]
fn tiny_gradient_check_all_parameters() {
    let (_, p, pairs) = setup(12);
    let weights = [0.7, -1.3, 0.4];
    let objective = |q: &ModelParams| {
        let (s, _) = forward(q, &pairs, true, 21).unwrap();
        s.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>()
    };
    let (_, cache) = forward(&p, &pairs, true, 21).unwrap();
    let grads = backward(&p, &cache, &weights).unwrap();
    let eps = 1e-5;
    let mut q = p.clone();
    for i in 0..p.len() {
        let orig = q.as_slice()[i];
        q.as_mut_slice()[i] = orig + eps;
        let up = objective(&q);
        q.as_mut_slice()[i] = orig - eps;
        let down = objective(&q);
        q.as_mut_slice()[i] = orig;
        let fd = (up - down) / (2.0 * eps);
        let an = grads.as_slice()[i];
        let err = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
        assert!(err < 1e-4, "{} [{i}]: fd {fd} vs analytic {an}", p.layout().tensor_of(i).unwrap().name);
    }
}

#[test]
fn score_pair_matches_forward() {
    let (vocab, p, _) = setup(16);
    let s = score_pair(&p, &vocab, "who wrote hamlet", "paris is in france").unwrap();
    let e = encode_pair(&vocab, "who wrote hamlet", "paris is in france", 16).unwrap();
    let (f, _) = forward(&p, &[e], false, 0).unwrap();
    assert_eq!(s, f[0]);
    assert_eq!(s, score_pair(&p, &vocab, "who wrote hamlet", "paris is in france").unwrap());
    let other = build_vocab(["a"], 1);
    assert!(matches!(score_pair(&p, &other, "a", "a"), Err(ModelError::VocabMismatch { .. })));
}
