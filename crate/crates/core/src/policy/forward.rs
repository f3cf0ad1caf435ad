//! Batched forward pass with a tape, and its exact backward pass.
//!
//! A batch holds observations with the same token count. Linear maps run
//! on the stacked `(batch * tokens) x width` matrix; attention and graph
//! convolution run per sample.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use super::{Block, PolicyModel};
use crate::error::{CopError, Result};
use crate::problems::Observation;

struct LayerTape {
    h_in: Array2<f64>,
    /// `A · h_in` per sample, stacked.
    ah: Option<Array2<f64>>,
    h_g: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    /// Attention weights, indexed `sample * heads + head`.
    p: Vec<Array2<f64>>,
    o: Array2<f64>,
    att: Array2<f64>,
    h_mid: Array2<f64>,
    f1: Array2<f64>,
    r: Array2<f64>,
    f: Array2<f64>,
}

/// Activations of one forward call.
pub struct Tape {
    batch: usize,
    tokens: usize,
    x: Array2<f64>,
    edges: Option<Vec<Array2<f64>>>,
    endpoints: bool,
    layers: Vec<LayerTape>,
    h_final: Array2<f64>,
    masks: Vec<Vec<bool>>,
    /// Per sample, `tokens * out` log-probabilities, `-inf` where masked.
    pub log_probs: Vec<Vec<f64>>,
}

impl Tape {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn tokens(&self) -> usize {
        self.tokens
    }

    /// Signs of every ReLU input, used to detect kinks.
    pub fn relu_pattern(&self) -> Vec<bool> {
        self.layers.iter().flat_map(|l| l.f1.iter().map(|&v| v > 0.0)).collect()
    }

    /// Smallest distance of a ReLU input to zero.
    pub fn relu_margin(&self) -> f64 {
        self.layers.iter().flat_map(|l| l.f1.iter().map(|v| v.abs())).fold(f64::INFINITY, f64::min)
    }
}

/// Log-softmax over the allowed entries; masked entries get `-inf`.
pub fn log_softmax_masked(logits: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
    let max = logits.iter().zip(mask).filter(|(_, &m)| m).map(|(&z, _)| z).fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(CopError::AllMasked);
    }
    let mut sum = 0.0;
    for (&z, &m) in logits.iter().zip(mask) {
        if m {
            sum += (z - max).exp();
        }
    }
    let log_z = max + sum.ln();
    Ok(logits.iter().zip(mask).map(|(&z, &m)| if m { z - log_z } else { f64::NEG_INFINITY }).collect())
}

/// `-Σ target · log p`, skipping zero-weight entries.
pub fn cross_entropy(log_probs: &[f64], target: &[f64]) -> f64 {
    -log_probs.iter().zip(target).filter(|(_, &t)| t > 0.0).map(|(&lp, &t)| t * lp).sum::<f64>()
}

fn row_vector(params: &[f64], b: Block) -> ArrayView2<'_, f64> {
    b.view(params)
}

fn add_bias(m: &mut Array2<f64>, bias: ArrayView2<f64>) {
    *m += &bias.row(0);
}

fn softmax_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum: f64 = row.iter().sum();
        row.mapv_inplace(|v| v / sum);
    }
}

pub fn forward(model: &PolicyModel, batch: &[&Observation]) -> Result<Tape> {
    let cfg = &model.config;
    let lay = &model.layout;
    let p = &model.params[..];
    let first = batch.first().ok_or_else(|| CopError::Config("empty batch".into()))?;
    let n = first.tokens();
    let bsz = batch.len();
    for obs in batch {
        if obs.tokens() != n {
            return Err(CopError::Config("batch mixes token counts".into()));
        }
        if obs.features.ncols() != cfg.d_in {
            return Err(CopError::Config(format!("model expects {} features, got {}", cfg.d_in, obs.features.ncols())));
        }
        if obs.heads != cfg.out || obs.mask.len() != n * cfg.out {
            return Err(CopError::Config("mask does not match the output head".into()));
        }
        if obs.edge_weights.is_some() != cfg.graph_conv {
            return Err(CopError::Config("edge weights must be given exactly when graph convolution is on".into()));
        }
        if obs.endpoints != first.endpoints {
            return Err(CopError::Config("batch mixes problems with and without endpoints".into()));
        }
        if !obs.mask.iter().any(|&m| m) {
            return Err(CopError::AllMasked);
        }
    }
    let endpoints = first.endpoints && n >= 2;

    let mut x = Array2::zeros((bsz * n, cfg.d_in));
    for (b, obs) in batch.iter().enumerate() {
        x.slice_mut(s![b * n..(b + 1) * n, ..]).assign(&obs.features);
    }
    let edges: Option<Vec<Array2<f64>>> =
        cfg.graph_conv.then(|| batch.iter().map(|o| o.edge_weights.clone().expect("checked")).collect());

    let mut h = x.dot(&lay.embed_w.view(p));
    add_bias(&mut h, row_vector(p, lay.embed_b));
    if endpoints {
        let to = lay.origin_token.view(p);
        let td = lay.destination_token.view(p);
        for b in 0..bsz {
            let mut r0 = h.row_mut(b * n);
            r0 += &to.row(0);
            let mut r1 = h.row_mut(b * n + 1);
            r1 += &td.row(0);
        }
    }

    let d = cfg.d_model;
    let dk = d / cfg.heads;
    let scale = 1.0 / (dk as f64).sqrt();
    let mut layers = Vec::with_capacity(lay.layers.len());
    for lb in &lay.layers {
        let h_in = h;
        let (ah, h_g) = match (lb.graph, &edges) {
            (Some(g), Some(edges)) => {
                let mut ah = Array2::zeros(h_in.raw_dim());
                for (b, a) in edges.iter().enumerate() {
                    let rows = s![b * n..(b + 1) * n, ..];
                    ah.slice_mut(rows).assign(&a.dot(&h_in.slice(rows)));
                }
                let h_g = &h_in + &ah.dot(&g.view(p));
                (Some(ah), h_g)
            }
            _ => (None, h_in.clone()),
        };
        let q = h_g.dot(&lb.wq.view(p));
        let k = h_g.dot(&lb.wk.view(p));
        let v = h_g.dot(&lb.wv.view(p));
        let mut o = Array2::zeros((bsz * n, d));
        let mut probs = Vec::with_capacity(bsz * cfg.heads);
        for b in 0..bsz {
            for hd in 0..cfg.heads {
                let blk = s![b * n..(b + 1) * n, hd * dk..(hd + 1) * dk];
                let mut sc = q.slice(blk).dot(&k.slice(blk).t());
                sc.mapv_inplace(|v| v * scale);
                softmax_rows(&mut sc);
                o.slice_mut(blk).assign(&sc.dot(&v.slice(blk)));
                probs.push(sc);
            }
        }
        let mut att = o.dot(&lb.wo.view(p));
        add_bias(&mut att, row_vector(p, lb.bo));
        let a1 = p[lb.alpha_att.offset];
        let h_mid = &h_g + &(&att * a1);

        let mut f1 = h_mid.dot(&lb.w1.view(p));
        add_bias(&mut f1, row_vector(p, lb.b1));
        let r = f1.mapv(|v| v.max(0.0));
        let mut f = r.dot(&lb.w2.view(p));
        add_bias(&mut f, row_vector(p, lb.b2));
        let a2 = p[lb.alpha_ff.offset];
        h = &h_mid + &(&f * a2);
        layers.push(LayerTape { h_in, ah, h_g, q, k, v, p: probs, o, att, h_mid, f1, r, f });
    }

    let mut logits = h.dot(&lay.head_w.view(p));
    add_bias(&mut logits, row_vector(p, lay.head_b));
    let mut log_probs = Vec::with_capacity(bsz);
    for (b, obs) in batch.iter().enumerate() {
        let z: Vec<f64> = logits.slice(s![b * n..(b + 1) * n, ..]).iter().copied().collect();
        log_probs.push(log_softmax_masked(&z, &obs.mask)?);
    }
    Ok(Tape {
        batch: bsz,
        tokens: n,
        x,
        edges,
        endpoints,
        layers,
        h_final: h,
        masks: batch.iter().map(|o| o.mask.clone()).collect(),
        log_probs,
    })
}

fn accumulate(grads: &mut [f64], b: Block, g: &Array2<f64>) {
    let mut view = b.view_mut(grads);
    view += g;
}

fn col_sum(m: &Array2<f64>) -> Array2<f64> {
    m.sum_axis(Axis(0)).insert_axis(Axis(0))
}

/// Mean cross-entropy of the batch against `targets` (one distribution over
/// `tokens * out` entries per sample) and its gradient.
pub fn backward(model: &PolicyModel, tape: &Tape, targets: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    if targets.len() != tape.batch {
        return Err(CopError::Config("one target per sample".into()));
    }
    let cfg = &model.config;
    let lay = &model.layout;
    let p = &model.params[..];
    let n = tape.tokens;
    let bsz = tape.batch;
    let out = cfg.out;
    let inv_b = 1.0 / bsz as f64;

    let mut grads = vec![0.0; lay.total];
    let mut loss = 0.0;
    let mut dz = Array2::zeros((bsz * n, out));
    for b in 0..bsz {
        let lp = &tape.log_probs[b];
        let t = &targets[b];
        if t.len() != lp.len() {
            return Err(CopError::Config("target length does not match the action space".into()));
        }
        if t.iter().zip(&tape.masks[b]).any(|(&w, &m)| w > 0.0 && !m) {
            return Err(CopError::Config("target puts weight on a masked action".into()));
        }
        loss += cross_entropy(lp, t) * inv_b;
        for (i, (&l, &w)) in lp.iter().zip(t).enumerate() {
            if tape.masks[b][i] {
                dz[[b * n + i / out, i % out]] = (l.exp() - w) * inv_b;
            }
        }
    }

    accumulate(&mut grads, lay.head_w, &tape.h_final.t().dot(&dz));
    accumulate(&mut grads, lay.head_b, &col_sum(&dz));
    let mut dh = dz.dot(&lay.head_w.view(p).t());

    let d = cfg.d_model;
    let dk = d / cfg.heads;
    let scale = 1.0 / (dk as f64).sqrt();
    for (lb, lt) in lay.layers.iter().zip(&tape.layers).rev() {
        // feed-forward block
        let a2 = p[lb.alpha_ff.offset];
        grads[lb.alpha_ff.offset] += (&dh * &lt.f).sum();
        let df = &dh * a2;
        accumulate(&mut grads, lb.w2, &lt.r.t().dot(&df));
        accumulate(&mut grads, lb.b2, &col_sum(&df));
        let mut df1 = df.dot(&lb.w2.view(p).t());
        df1.zip_mut_with(&lt.f1, |g, &pre| {
            if pre <= 0.0 {
                *g = 0.0
            }
        });
        accumulate(&mut grads, lb.w1, &lt.h_mid.t().dot(&df1));
        accumulate(&mut grads, lb.b1, &col_sum(&df1));
        let dh_mid = &dh + &df1.dot(&lb.w1.view(p).t());

        // attention block
        let a1 = p[lb.alpha_att.offset];
        grads[lb.alpha_att.offset] += (&dh_mid * &lt.att).sum();
        let datt = &dh_mid * a1;
        accumulate(&mut grads, lb.wo, &lt.o.t().dot(&datt));
        accumulate(&mut grads, lb.bo, &col_sum(&datt));
        let d_o = datt.dot(&lb.wo.view(p).t());
        let mut dq = Array2::zeros(lt.q.raw_dim());
        let mut dk_m = Array2::zeros(lt.k.raw_dim());
        let mut dv = Array2::zeros(lt.v.raw_dim());
        for b in 0..bsz {
            for hd in 0..cfg.heads {
                let blk = s![b * n..(b + 1) * n, hd * dk..(hd + 1) * dk];
                let pm = &lt.p[b * cfg.heads + hd];
                let doh = d_o.slice(blk);
                let dp = doh.dot(&lt.v.slice(blk).t());
                dv.slice_mut(blk).assign(&pm.t().dot(&doh));
                let mut ds = pm * &dp;
                let row_dot: Array1<f64> = ds.sum_axis(Axis(1));
                for (i, mut row) in ds.rows_mut().into_iter().enumerate() {
                    for (j, v) in row.iter_mut().enumerate() {
                        *v -= pm[[i, j]] * row_dot[i];
                    }
                }
                ds.mapv_inplace(|v| v * scale);
                dq.slice_mut(blk).assign(&ds.dot(&lt.k.slice(blk)));
                dk_m.slice_mut(blk).assign(&ds.t().dot(&lt.q.slice(blk)));
            }
        }
        accumulate(&mut grads, lb.wq, &lt.h_g.t().dot(&dq));
        accumulate(&mut grads, lb.wk, &lt.h_g.t().dot(&dk_m));
        accumulate(&mut grads, lb.wv, &lt.h_g.t().dot(&dv));
        let dh_g = dh_mid + dq.dot(&lb.wq.view(p).t()) + dk_m.dot(&lb.wk.view(p).t()) + dv.dot(&lb.wv.view(p).t());

        // graph convolution
        dh = match (lb.graph, &lt.ah, &tape.edges) {
            (Some(g), Some(ah), Some(edges)) => {
                accumulate(&mut grads, g, &ah.t().dot(&dh_g));
                let dah = dh_g.dot(&g.view(p).t());
                let mut dh_in = dh_g;
                for (b, a) in edges.iter().enumerate() {
                    let rows = s![b * n..(b + 1) * n, ..];
                    let add = a.t().dot(&dah.slice(rows));
                    let mut target = dh_in.slice_mut(rows);
                    target += &add;
                }
                dh_in
            }
            _ => dh_g,
        };
        debug_assert_eq!(dh.dim(), lt.h_in.dim());
    }

    if tape.endpoints {
        let mut go = Array2::zeros((1, d));
        let mut gd = Array2::zeros((1, d));
        for b in 0..bsz {
            let mut r0 = go.row_mut(0);
            r0 += &dh.row(b * n);
            let mut r1 = gd.row_mut(0);
            r1 += &dh.row(b * n + 1);
        }
        accumulate(&mut grads, lay.origin_token, &go);
        accumulate(&mut grads, lay.destination_token, &gd);
    }
    accumulate(&mut grads, lay.embed_w, &tape.x.t().dot(&dh));
    accumulate(&mut grads, lay.embed_b, &col_sum(&dh));
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::PolicyConfig;

    fn obs(features: Array2<f64>, mask: Vec<bool>, endpoints: bool) -> Observation {
        let n = features.nrows();
        Observation {
            features,
            edge_weights: None,
            nodes: (0..n).collect(),
            endpoints,
            heads: 1,
            actions: vec![None; n],
            mask,
        }
    }

    fn small() -> PolicyModel {
        let cfg = PolicyConfig { d_in: 2, d_model: 8, heads: 2, d_ff: 8, layers: 2, out: 1, graph_conv: false };
        PolicyModel::new(cfg, 5).unwrap()
    }

    #[test]
    fn masked_softmax_normalizes() {
        let lp = log_softmax_masked(&[1.0, 5.0, -2.0, 0.5], &[true, false, true, true]).unwrap();
        assert_eq!(lp[1], f64::NEG_INFINITY);
        let total: f64 = lp.iter().map(|v| v.exp()).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!(matches!(log_softmax_masked(&[1.0], &[false]), Err(CopError::AllMasked)));
    }

    #[test]
    fn single_allowed_action_is_certain_and_gradient_free() {
        let m = small();
        let o = obs(
            Array2::from_shape_fn((4, 2), |(i, j)| (i * 2 + j) as f64 / 7.0),
            vec![false, false, true, false],
            true,
        );
        let tape = forward(&m, &[&o]).unwrap();
        assert_eq!(tape.log_probs[0][2], 0.0);
        let (loss, grads) = backward(&m, &tape, &[vec![0.0, 0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn untrained_output_ignores_attention_weights() {
        let m = small();
        let o = obs(Array2::from_shape_fn((5, 2), |(i, j)| ((i + 3 * j) % 5) as f64 / 5.0), vec![true; 5], false);
        let base = forward(&m, &[&o]).unwrap().log_probs;
        let mut scrambled = m.clone();
        for l in &m.layout.layers {
            for b in [l.wq, l.wk, l.wv, l.wo, l.w1, l.w2] {
                for v in &mut scrambled.params[b.range()] {
                    *v = -*v * 3.0 + 0.1;
                }
            }
        }
        assert_eq!(forward(&scrambled, &[&o]).unwrap().log_probs, base);
    }

    #[test]
    fn batching_matches_single_samples() {
        let m = small();
        let a = obs(Array2::from_shape_fn((4, 2), |(i, j)| (i + j) as f64 / 4.0), vec![true; 4], true);
        let b = obs(Array2::from_shape_fn((4, 2), |(i, j)| (i * j) as f64 / 9.0), vec![true, true, false, true], true);
        let both = forward(&m, &[&a, &b]).unwrap();
        let one = forward(&m, &[&b]).unwrap();
        for (x, y) in both.log_probs[1].iter().zip(&one.log_probs[0]) {
            assert!((x - y).abs() < 1e-12 || (x.is_infinite() && y.is_infinite()));
        }
    }
}
