use std::ops::Range;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::arch_echo;
use super::{encode_text, ArchKind, ArchitectureConfig, FeatureVector, ModelError, ReplicateInit};
use crate::corpus::{Entry, GroupName, TagTaxonomy};
use crate::seed::{fingerprint, stage_rng, STAGE_INIT};

/// Offsets of every parameter block inside the flat parameter vector.
/// Dense weights are stored row-major as `out x in`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub feature_dim: usize,
    pub hidden: usize,
    pub n_tags: usize,
    pub embedding: usize,
    /// `(weight, bias)` offsets of the shared dense layers.
    pub shared: Vec<(usize, usize)>,
    /// `(weight, bias)` offsets of the final layer(s).
    pub finals: Vec<(usize, usize)>,
    pub head_w: usize,
    pub head_b: usize,
    pub total: usize,
}

impl Layout {
    pub fn new(arch: &ArchitectureConfig, n_tags: usize) -> Layout {
        let h = arch.hidden_dim;
        let mut at = arch.feature_dim * h;
        let dense = |at: &mut usize| {
            let w = *at;
            *at += h * h;
            let b = *at;
            *at += h;
            (w, b)
        };
        let shared = (0..arch.shared_layers()).map(|_| dense(&mut at)).collect();
        let finals = (0..arch.kind.final_layers()).map(|_| dense(&mut at)).collect();
        let head_w = at;
        let head_b = head_w + n_tags * h;
        Layout {
            feature_dim: arch.feature_dim,
            hidden: h,
            n_tags,
            embedding: 0,
            shared,
            finals,
            head_w,
            head_b,
            total: head_b + n_tags,
        }
    }

    pub fn dense_range(&self, (w, _): (usize, usize)) -> Range<usize> {
        w..w + self.hidden * self.hidden + self.hidden
    }
}

/// Inverted-dropout multipliers (0 or `1/(1-p)`) for one example.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks {
    pub shared: Vec<Vec<f64>>,
    pub finals: Vec<Vec<f64>>,
}

/// One training example: encoded input and 0/1 targets in tag order.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: FeatureVector,
    pub targets: Vec<f64>,
}

/// Per-tag loss weights. A zero weight removes the tag from the loss and
/// from backpropagation entirely.
#[derive(Debug, Clone, PartialEq)]
pub struct LossOptions {
    pub tag_weights: Vec<f64>,
}

impl LossOptions {
    pub fn uniform(n_tags: usize) -> LossOptions {
        LossOptions { tag_weights: vec![1.0; n_tags] }
    }

    pub fn from_group_weights(taxonomy: &TagTaxonomy, weights: &[f64; 5]) -> LossOptions {
        let tag_weights = (0..taxonomy.len())
            .map(|t| {
                let g = taxonomy.group_of(t);
                weights[GroupName::ALL.iter().position(|x| *x == g).expect("known group")]
            })
            .collect();
        LossOptions { tag_weights }
    }
}

struct Trace {
    h0: Vec<f64>,
    /// tanh outputs before dropout, per shared layer.
    shared_t: Vec<Vec<f64>>,
    /// Outputs after dropout, per shared layer.
    shared_out: Vec<Vec<f64>>,
    final_t: Vec<Vec<f64>>,
    final_out: Vec<Vec<f64>>,
    logits: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    arch: ArchitectureConfig,
    taxonomy: Arc<TagTaxonomy>,
    layout: Layout,
    /// Final layer read by each tag head.
    owner: Vec<usize>,
    values: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy on a logit, stable for large |z|.
fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

fn dense_forward(values: &[f64], (w, b): (usize, usize), h: usize, x: &[f64]) -> Vec<f64> {
    (0..h)
        .map(|i| {
            let row = &values[w + i * h..w + (i + 1) * h];
            let z: f64 = values[b + i] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            z.tanh()
        })
        .collect()
}

fn apply_mask(t: &[f64], mask: Option<&Vec<f64>>) -> Vec<f64> {
    match mask {
        Some(m) => t.iter().zip(m).map(|(a, b)| a * b).collect(),
        None => t.to_vec(),
    }
}

/// Backprop through one tanh dense layer given the gradient at its
/// post-dropout output. Accumulates parameter gradients when `grad` is
/// given and returns the gradient at the layer input.
#[allow(clippy::too_many_arguments)]
fn dense_backward(
    values: &[f64],
    (w, b): (usize, usize),
    h: usize,
    input: &[f64],
    t: &[f64],
    mask: Option<&Vec<f64>>,
    d_out: &[f64],
    grad: Option<&mut [f64]>,
) -> Vec<f64> {
    let dz: Vec<f64> = (0..h)
        .map(|i| {
            let d = mask.map_or(d_out[i], |m| d_out[i] * m[i]);
            d * (1.0 - t[i] * t[i])
        })
        .collect();
    if let Some(g) = grad {
        for i in 0..h {
            if dz[i] == 0.0 {
                continue;
            }
            g[b + i] += dz[i];
            for j in 0..h {
                g[w + i * h + j] += dz[i] * input[j];
            }
        }
    }
    let mut d_in = vec![0.0; h];
    for i in 0..h {
        if dz[i] == 0.0 {
            continue;
        }
        for j in 0..h {
            d_in[j] += values[w + i * h + j] * dz[i];
        }
    }
    d_in
}

impl ModelParameters {
    /// Seeded initialization from `arch.seed`. Dense layers use Xavier
    /// uniform bounds, biases start at zero.
    pub fn init(arch: &ArchitectureConfig, taxonomy: Arc<TagTaxonomy>) -> Result<ModelParameters, ModelError> {
        let mut model = ModelParameters::zeros(arch, taxonomy)?;
        let mut rng = stage_rng(arch.seed, STAGE_INIT);
        let l = model.layout.clone();
        let h = l.hidden;
        let v = &mut model.values;
        let mut fill = |range: Range<usize>, bound: f64, rng: &mut ChaCha8Rng| {
            for x in &mut v[range] {
                *x = if bound > 0.0 { rng.gen_range(-bound..=bound) } else { 0.0 };
            }
        };
        fill(l.embedding..l.embedding + l.feature_dim * h, arch.embedding_init, &mut rng);
        let dense_bound = (3.0 / h as f64).sqrt();
        for &(w, _) in &l.shared {
            fill(w..w + h * h, dense_bound, &mut rng);
        }
        let (w0, _) = l.finals[0];
        fill(w0..w0 + h * h, dense_bound, &mut rng);
        for &(w, _) in &l.finals[1..] {
            match arch.replicate_init {
                ReplicateInit::Copy => {
                    let (head, tail) = model.values.split_at_mut(w);
                    tail[..h * h].copy_from_slice(&head[w0..w0 + h * h]);
                }
                ReplicateInit::Independent => {
                    for x in &mut model.values[w..w + h * h] {
                        *x = rng.gen_range(-dense_bound..=dense_bound);
                    }
                }
            }
        }
        let head_bound = (6.0 / (h + 1) as f64).sqrt();
        for x in &mut model.values[l.head_w..l.head_w + l.n_tags * h] {
            *x = rng.gen_range(-head_bound..=head_bound);
        }
        Ok(model)
    }

    pub fn zeros(arch: &ArchitectureConfig, taxonomy: Arc<TagTaxonomy>) -> Result<ModelParameters, ModelError> {
        arch.validate()?;
        let layout = Layout::new(arch, taxonomy.len());
        let values = vec![0.0; layout.total];
        Self::from_parts(arch.clone(), taxonomy, values)
    }

    pub fn from_parts(
        arch: ArchitectureConfig,
        taxonomy: Arc<TagTaxonomy>,
        values: Vec<f64>,
    ) -> Result<ModelParameters, ModelError> {
        arch.validate()?;
        let layout = Layout::new(&arch, taxonomy.len());
        if values.len() != layout.total {
            return Err(ModelError::Checkpoint(format!(
                "expected {} parameters, found {}",
                layout.total,
                values.len()
            )));
        }
        let owner = (0..taxonomy.len())
            .map(|t| match arch.kind {
                ArchKind::Base => 0,
                ArchKind::Combinatorial => taxonomy.group_of(t).sublayer(),
            })
            .collect();
        Ok(ModelParameters { arch, taxonomy, layout, owner, values })
    }

    pub fn arch(&self) -> &ArchitectureConfig {
        &self.arch
    }

    pub fn taxonomy(&self) -> &TagTaxonomy {
        &self.taxonomy
    }

    pub fn shared_taxonomy(&self) -> Arc<TagTaxonomy> {
        Arc::clone(&self.taxonomy)
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Index of the final layer whose output feeds `tag`'s head.
    pub fn head_owner(&self, tag: usize) -> usize {
        self.owner[tag]
    }

    /// Parameter ranges updated by training.
    pub fn trainable_ranges(&self) -> Vec<Range<usize>> {
        let l = &self.layout;
        let h = l.hidden;
        let mut out = Vec::new();
        let mut dense: Vec<(usize, usize)> = l.shared.iter().chain(&l.finals).copied().collect();
        if self.arch.freeze_embedding {
            // the first encoder layer is the first shared layer, or the
            // single final layer of a one-layer base model
            if l.shared.is_empty() {
                dense.clear();
            } else {
                dense.remove(0);
            }
        } else {
            out.push(l.embedding..l.embedding + l.feature_dim * h);
        }
        out.extend(dense.into_iter().map(|d| l.dense_range(d)));
        out.push(l.head_w..l.total);
        out
    }

    /// SHA-256 over the architecture echo, the taxonomy, and the parameters.
    pub fn fingerprint(&self) -> String {
        let mut bytes = arch_echo(&self.arch).into_bytes();
        bytes.extend(self.taxonomy.to_json().as_bytes());
        for v in &self.values {
            bytes.extend(v.to_le_bytes());
        }
        fingerprint(&bytes)
    }

    pub fn encode(&self, text: &str) -> FeatureVector {
        encode_text(text, self.arch.feature_dim, self.arch.max_tokens_per_entry, &self.arch.masked_tokens)
    }

    pub fn example(&self, entry: &Entry) -> Example {
        let targets = entry.gold_vector(&self.taxonomy).into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect();
        Example { features: self.encode(&entry.text), targets }
    }

    pub fn sample_masks(&self, rng: &mut ChaCha8Rng) -> DropoutMasks {
        let p = self.arch.dropout_rate;
        let keep = 1.0 / (1.0 - p);
        let h = self.layout.hidden;
        let mut draw = || (0..h).map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep }).collect::<Vec<f64>>();
        let shared = (0..self.layout.shared.len()).map(|_| draw()).collect();
        let finals = (0..self.layout.finals.len()).map(|_| draw()).collect();
        DropoutMasks { shared, finals }
    }

    fn forward(&self, x: &FeatureVector, masks: Option<&DropoutMasks>) -> Trace {
        let l = &self.layout;
        let h = l.hidden;
        let v = &self.values;
        let mut h0 = vec![0.0; h];
        for &(b, w) in &x.buckets {
            let row = &v[l.embedding + b as usize * h..l.embedding + (b as usize + 1) * h];
            for (acc, e) in h0.iter_mut().zip(row) {
                *acc += w * e;
            }
        }
        let mut shared_t = Vec::with_capacity(l.shared.len());
        let mut shared_out = Vec::with_capacity(l.shared.len());
        for (k, &d) in l.shared.iter().enumerate() {
            let input = shared_out.last().unwrap_or(&h0);
            let t = dense_forward(v, d, h, input);
            shared_out.push(apply_mask(&t, masks.map(|m| &m.shared[k])));
            shared_t.push(t);
        }
        let top = shared_out.last().unwrap_or(&h0);
        let mut final_t = Vec::with_capacity(l.finals.len());
        let mut final_out = Vec::with_capacity(l.finals.len());
        for (k, &d) in l.finals.iter().enumerate() {
            let t = dense_forward(v, d, h, top);
            final_out.push(apply_mask(&t, masks.map(|m| &m.finals[k])));
            final_t.push(t);
        }
        let logits = (0..l.n_tags)
            .map(|t| {
                let a = &final_out[self.owner[t]];
                let w = &v[l.head_w + t * h..l.head_w + (t + 1) * h];
                v[l.head_b + t] + w.iter().zip(a).map(|(x, y)| x * y).sum::<f64>()
            })
            .collect();
        Trace { h0, shared_t, shared_out, final_t, final_out, logits }
    }

    pub fn logits(&self, x: &FeatureVector, masks: Option<&DropoutMasks>) -> Vec<f64> {
        self.forward(x, masks).logits
    }

    /// Inference-mode tag probabilities, kept strictly inside (0, 1).
    pub fn probabilities(&self, x: &FeatureVector) -> Vec<f64> {
        self.forward(x, None)
            .logits
            .into_iter()
            .map(|z| sigmoid(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
            .collect()
    }

    fn check_batch(&self, batch: &[Example], opts: &LossOptions, masks: Option<&[DropoutMasks]>) {
        assert!(!batch.is_empty(), "empty batch");
        assert_eq!(opts.tag_weights.len(), self.layout.n_tags, "tag weight count");
        assert!(batch.iter().all(|e| e.targets.len() == self.layout.n_tags), "target width");
        if let Some(m) = masks {
            assert_eq!(m.len(), batch.len(), "one mask set per example");
        }
    }

    /// Weighted mean BCE over `batch.len() * n_tags` cells.
    pub fn loss(&self, batch: &[Example], opts: &LossOptions, masks: Option<&[DropoutMasks]>) -> f64 {
        self.check_batch(batch, opts, masks);
        let denom = (batch.len() * self.layout.n_tags) as f64;
        batch
            .iter()
            .enumerate()
            .map(|(i, ex)| {
                let logits = self.logits(&ex.features, masks.map(|m| &m[i]));
                logits
                    .iter()
                    .zip(&ex.targets)
                    .zip(&opts.tag_weights)
                    .filter(|(_, w)| **w != 0.0)
                    .map(|((z, y), w)| w * bce_with_logit(*z, *y))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / denom
    }

    /// Loss and its gradient in the flat parameter layout. Frozen blocks get
    /// zero gradient.
    pub fn loss_and_gradients(
        &self,
        batch: &[Example],
        opts: &LossOptions,
        masks: Option<&[DropoutMasks]>,
    ) -> (f64, Vec<f64>) {
        self.check_batch(batch, opts, masks);
        let l = &self.layout;
        let h = l.hidden;
        let v = &self.values;
        let denom = (batch.len() * l.n_tags) as f64;
        let frozen = self.arch.freeze_embedding;
        let mut grad = vec![0.0; l.total];
        let mut loss = 0.0;
        for (i, ex) in batch.iter().enumerate() {
            let m = masks.map(|m| &m[i]);
            let tr = self.forward(&ex.features, m);
            let mut d_final = vec![vec![0.0; h]; l.finals.len()];
            let mut used = vec![false; l.finals.len()];
            for t in 0..l.n_tags {
                let w = opts.tag_weights[t];
                if w == 0.0 {
                    continue;
                }
                let z = tr.logits[t];
                let y = ex.targets[t];
                loss += w * bce_with_logit(z, y);
                let dz = w * (sigmoid(z) - y) / denom;
                let k = self.owner[t];
                used[k] = true;
                let a = &tr.final_out[k];
                grad[l.head_b + t] += dz;
                for j in 0..h {
                    grad[l.head_w + t * h + j] += dz * a[j];
                    d_final[k][j] += dz * v[l.head_w + t * h + j];
                }
            }
            let top = tr.shared_out.last().unwrap_or(&tr.h0);
            let mut d_top = vec![0.0; h];
            let mut any = false;
            for k in 0..l.finals.len() {
                if !used[k] {
                    continue;
                }
                any = true;
                let first_and_frozen = frozen && l.shared.is_empty();
                let g = if first_and_frozen { None } else { Some(grad.as_mut_slice()) };
                let d = dense_backward(v, l.finals[k], h, top, &tr.final_t[k], m.map(|m| &m.finals[k]), &d_final[k], g);
                for (acc, x) in d_top.iter_mut().zip(d) {
                    *acc += x;
                }
            }
            if !any {
                continue;
            }
            let mut d_cur = d_top;
            for k in (0..l.shared.len()).rev() {
                let input = if k == 0 { &tr.h0 } else { &tr.shared_out[k - 1] };
                let g = if frozen && k == 0 { None } else { Some(grad.as_mut_slice()) };
                d_cur = dense_backward(v, l.shared[k], h, input, &tr.shared_t[k], m.map(|m| &m.shared[k]), &d_cur, g);
            }
            if !frozen {
                for &(b, w) in &ex.features.buckets {
                    let off = l.embedding + b as usize * h;
                    for j in 0..h {
                        grad[off + j] += w * d_cur[j];
                    }
                }
            }
        }
        (loss / denom, grad)
    }
}
