use super::{SgnsConfig, VectorSpace};
use crate::corpus::Corpus;
use crate::{seed, Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{weighted::WeightedAliasIndex, Distribution};
use std::cell::Cell;
use std::sync::atomic::{AtomicU32, AtomicUsize, Ordering};

/// Flat parameter storage readable and writable through a shared reference.
///
/// The single-worker path uses `Cell`; the multi-worker path uses relaxed
/// atomics, so concurrent updates may interleave but never tear a value.
trait Store {
    fn get(&self, i: usize) -> f32;
    fn set(&self, i: usize, v: f32);
}

impl Store for [Cell<f32>] {
    #[inline]
    fn get(&self, i: usize) -> f32 {
        self[i].get()
    }
    #[inline]
    fn set(&self, i: usize, v: f32) {
        self[i].set(v)
    }
}

impl Store for [AtomicU32] {
    #[inline]
    fn get(&self, i: usize) -> f32 {
        f32::from_bits(self[i].load(Ordering::Relaxed))
    }
    #[inline]
    fn set(&self, i: usize, v: f32) {
        self[i].store(v.to_bits(), Ordering::Relaxed)
    }
}

struct Model<'a, S: ?Sized> {
    input: &'a S,
    output: &'a S,
    dim: usize,
}

struct Vocab {
    words: Vec<String>,
    counts: Vec<usize>,
    /// Probability of keeping one occurrence under subsampling.
    keep: Vec<f32>,
    noise: WeightedAliasIndex<f64>,
}

fn build_vocab(corpus: &Corpus, config: &SgnsConfig) -> Result<(Vocab, Vec<Vec<u32>>)> {
    let mut counted: Vec<(String, usize)> = corpus
        .lemma_counts()
        .into_iter()
        .filter(|(_, c)| *c >= config.min_count)
        .collect();
    if counted.is_empty() {
        return Err(Error::EmptyVocabulary {
            min_count: config.min_count,
        });
    }
    counted.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let index: std::collections::HashMap<&str, u32> = counted
        .iter()
        .enumerate()
        .map(|(i, (w, _))| (w.as_str(), i as u32))
        .collect();
    let sentences: Vec<Vec<u32>> = corpus
        .sentences
        .iter()
        .map(|s| (0..s.len()).filter_map(|i| index.get(s.lemma(i).as_ref()).copied()).collect())
        .collect();
    let total: usize = counted.iter().map(|(_, c)| c).sum();
    let keep = counted
        .iter()
        .map(|(_, c)| match config.subsample {
            // drop probability 1 - sqrt(s / f), floored at zero
            Some(s) => ((s / (*c as f64 / total as f64)).sqrt()).min(1.0) as f32,
            None => 1.0,
        })
        .collect();
    let noise = WeightedAliasIndex::new(counted.iter().map(|(_, c)| (*c as f64).powf(0.75)).collect())
        .map_err(|e| Error::InvalidInput(format!("noise distribution: {e}")))?;
    let (words, counts) = counted.into_iter().unzip();
    Ok((
        Vocab {
            words,
            counts,
            keep,
            noise,
        },
        sentences,
    ))
}

#[inline]
fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

impl<S: Store + ?Sized> Model<'_, S> {
    fn train_pair(&self, center: u32, context: u32, vocab: &Vocab, negatives: usize, lr: f32, rng: &mut ChaCha8Rng, neu: &mut [f32]) {
        let dim = self.dim;
        let ib = center as usize * dim;
        neu.iter_mut().for_each(|x| *x = 0.0);
        for j in 0..=negatives {
            let (target, label) = if j == 0 {
                (context as usize, 1.0)
            } else {
                let t = vocab.noise.sample(rng);
                if t == context as usize {
                    continue;
                }
                (t, 0.0)
            };
            let ob = target * dim;
            let mut f = 0.0f32;
            for d in 0..dim {
                f += self.input.get(ib + d) * self.output.get(ob + d);
            }
            let g = (label - sigmoid(f)) * lr;
            for d in 0..dim {
                let o = self.output.get(ob + d);
                neu[d] += g * o;
                self.output.set(ob + d, o + g * self.input.get(ib + d));
            }
        }
        for (d, delta) in neu.iter().enumerate() {
            self.input.set(ib + d, self.input.get(ib + d) + delta);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn train_shard(
        &self,
        sentences: &[Vec<u32>],
        vocab: &Vocab,
        config: &SgnsConfig,
        rng: &mut ChaCha8Rng,
        progress: &AtomicUsize,
        total_work: usize,
    ) {
        let lr0 = config.learning_rate as f32;
        let floor = lr0 * 1e-4;
        let mut neu = vec![0.0f32; self.dim];
        let mut kept = Vec::new();
        for sentence in sentences {
            let done = progress.fetch_add(sentence.len(), Ordering::Relaxed);
            let lr = (lr0 * (1.0 - done as f32 / total_work as f32)).max(floor);
            kept.clear();
            kept.extend(sentence.iter().copied().filter(|&w| {
                let p = vocab.keep[w as usize];
                p >= 1.0 || rng.random::<f32>() < p
            }));
            for pos in 0..kept.len() {
                let span = rng.random_range(1..=config.window);
                let lo = pos.saturating_sub(span);
                let hi = (pos + span).min(kept.len() - 1);
                for c in lo..=hi {
                    if c != pos {
                        self.train_pair(kept[pos], kept[c], vocab, config.negatives, lr, rng, &mut neu);
                    }
                }
            }
        }
    }
}

fn init_input(n: usize, dim: usize, seed_value: u64) -> Vec<f32> {
    let mut rng = seed::rng(seed_value, &["sgns-init"]);
    let scale = 0.5 / dim as f32;
    (0..n * dim).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Train an SGNS space over the corpus lemma layer.
///
/// Every word with frequency at least `min_count` receives a vector. Negatives
/// come from the unigram distribution raised to 3/4; the learning rate decays
/// linearly to `learning_rate / 10_000` over the schedule. With one worker the
/// result is a pure function of corpus and config.
pub fn train_sgns(corpus: &Corpus, config: &SgnsConfig) -> Result<VectorSpace> {
    config.validate()?;
    let (vocab, sentences) = build_vocab(corpus, config)?;
    let n = vocab.words.len();
    let dim = config.dim;
    let total_work = (sentences.iter().map(Vec::len).sum::<usize>() * config.epochs).max(1);
    let progress = AtomicUsize::new(0);
    let init = init_input(n, dim, config.seed);

    let trained: Vec<f32> = if config.workers == 1 {
        let input: Vec<Cell<f32>> = init.into_iter().map(Cell::new).collect();
        let output: Vec<Cell<f32>> = (0..n * dim).map(|_| Cell::new(0.0)).collect();
        let model = Model {
            input: input.as_slice(),
            output: output.as_slice(),
            dim,
        };
        for epoch in 0..config.epochs {
            let mut rng = seed::rng(config.seed, &["sgns", "0", &epoch.to_string()]);
            model.train_shard(&sentences, &vocab, config, &mut rng, &progress, total_work);
        }
        input.into_iter().map(Cell::into_inner).collect()
    } else {
        let input: Vec<AtomicU32> = init.into_iter().map(|v| AtomicU32::new(v.to_bits())).collect();
        let output: Vec<AtomicU32> = (0..n * dim).map(|_| AtomicU32::new(0)).collect();
        let model = Model {
            input: input.as_slice(),
            output: output.as_slice(),
            dim,
        };
        let chunk = sentences.len().div_ceil(config.workers).max(1);
        for epoch in 0..config.epochs {
            std::thread::scope(|scope| {
                for (worker, shard) in sentences.chunks(chunk).enumerate() {
                    let model = &model;
                    let vocab = &vocab;
                    let progress = &progress;
                    scope.spawn(move || {
                        let mut rng = seed::rng(config.seed, &["sgns", &worker.to_string(), &epoch.to_string()]);
                        model.train_shard(shard, vocab, config, &mut rng, progress, total_work);
                    });
                }
            });
        }
        input.into_iter().map(|a| f32::from_bits(a.into_inner())).collect()
    };

    if let Some(i) = trained.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "training diverged for `{}`",
            vocab.words[i / dim]
        )));
    }
    debug_assert!(vocab.counts.iter().all(|&c| c >= config.min_count));
    let space = VectorSpace::new(vocab.words, dim, trained.into_iter().map(f64::from).collect())?;
    Ok(space.with_meta(Some(config.clone()), Some(corpus.period)))
}
