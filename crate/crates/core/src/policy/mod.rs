//! Attention policy over reduced states.
//!
//! Tokens are embedded linearly, origin and destination tokens receive a
//! learned offset, then `layers` blocks of (optional graph convolution,
//! multi-head attention, feed-forward) with ReZero residuals are applied and
//! a linear head scores every token. There is no positional encoding, so
//! the network is equivariant to token order.
//!
//! Parameters live in one flat vector; [`Layout`] maps names to ranges.

use std::path::Path;

use ndarray::{ArrayView2, ArrayViewMut2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CopError, Result};
use crate::problems::ProblemKind;

mod adam;
mod forward;
pub mod gradcheck;

pub use adam::{learning_rate, Adam, AdamConfig};
pub use forward::{backward, cross_entropy, forward, log_softmax_masked, Tape};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub d_in: usize,
    pub d_model: usize,
    pub heads: usize,
    pub d_ff: usize,
    pub layers: usize,
    /// Scores per token.
    pub out: usize,
    pub graph_conv: bool,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig { d_in: 2, d_model: 64, heads: 4, d_ff: 128, layers: 3, out: 1, graph_conv: false }
    }
}

impl PolicyConfig {
    /// Default sizes wired to a problem's inputs and outputs.
    pub fn for_problem(kind: ProblemKind, atsp_id_dim: usize, id_channel: bool) -> Self {
        PolicyConfig {
            d_in: kind.feature_dim(atsp_id_dim) + id_channel as usize,
            out: kind.heads(),
            graph_conv: kind == ProblemKind::Atsp,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_in == 0 || self.d_model == 0 || self.d_ff == 0 || self.out == 0 {
            return Err(CopError::Config("layer sizes must be positive".into()));
        }
        if self.heads == 0 || !self.d_model.is_multiple_of(self.heads) {
            return Err(CopError::Config(format!(
                "d_model {} must be a positive multiple of heads {}",
                self.d_model, self.heads
            )));
        }
        Ok(())
    }
}

/// A `rows x cols` matrix stored row-major at `offset`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }

    pub fn view<'a>(&self, params: &'a [f64]) -> ArrayView2<'a, f64> {
        ArrayView2::from_shape((self.rows, self.cols), &params[self.range()]).expect("block fits")
    }

    pub fn view_mut<'a>(&self, params: &'a mut [f64]) -> ArrayViewMut2<'a, f64> {
        ArrayViewMut2::from_shape((self.rows, self.cols), &mut params[self.range()]).expect("block fits")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerBlocks {
    pub graph: Option<Block>,
    pub wq: Block,
    pub wk: Block,
    pub wv: Block,
    pub wo: Block,
    pub bo: Block,
    pub alpha_att: Block,
    pub w1: Block,
    pub b1: Block,
    pub w2: Block,
    pub b2: Block,
    pub alpha_ff: Block,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub embed_w: Block,
    pub embed_b: Block,
    pub origin_token: Block,
    pub destination_token: Block,
    pub layers: Vec<LayerBlocks>,
    pub head_w: Block,
    pub head_b: Block,
    pub total: usize,
    names: Vec<(String, Block)>,
}

impl Layout {
    pub fn new(cfg: &PolicyConfig) -> Self {
        let mut names = Vec::new();
        let mut offset = 0;
        let mut block = |name: String, rows: usize, cols: usize| {
            let b = Block { offset, rows, cols };
            offset += rows * cols;
            names.push((name, b));
            b
        };
        let d = cfg.d_model;
        let embed_w = block("embed.w".into(), cfg.d_in, d);
        let embed_b = block("embed.b".into(), 1, d);
        let origin_token = block("token.origin".into(), 1, d);
        let destination_token = block("token.destination".into(), 1, d);
        let layers = (0..cfg.layers)
            .map(|l| LayerBlocks {
                graph: cfg.graph_conv.then(|| block(format!("layer{l}.graph"), d, d)),
                wq: block(format!("layer{l}.wq"), d, d),
                wk: block(format!("layer{l}.wk"), d, d),
                wv: block(format!("layer{l}.wv"), d, d),
                wo: block(format!("layer{l}.wo"), d, d),
                bo: block(format!("layer{l}.bo"), 1, d),
                alpha_att: block(format!("layer{l}.alpha_att"), 1, 1),
                w1: block(format!("layer{l}.w1"), d, cfg.d_ff),
                b1: block(format!("layer{l}.b1"), 1, cfg.d_ff),
                w2: block(format!("layer{l}.w2"), cfg.d_ff, d),
                b2: block(format!("layer{l}.b2"), 1, d),
                alpha_ff: block(format!("layer{l}.alpha_ff"), 1, 1),
            })
            .collect();
        let head_w = block("head.w".into(), d, cfg.out);
        let head_b = block("head.b".into(), 1, cfg.out);
        Layout { embed_w, embed_b, origin_token, destination_token, layers, head_w, head_b, total: offset, names }
    }

    /// Named blocks in storage order.
    pub fn blocks(&self) -> &[(String, Block)] {
        &self.names
    }

    pub fn shapes(&self) -> Vec<(String, [usize; 2])> {
        self.names.iter().map(|(n, b)| (n.clone(), [b.rows, b.cols])).collect()
    }
}

#[derive(Clone, Debug)]
pub struct PolicyModel {
    pub config: PolicyConfig,
    pub layout: Layout,
    pub params: Vec<f64>,
}

impl PolicyModel {
    /// Weights uniform in `±1/sqrt(fan_in)`; biases, ReZero scalars and
    /// graph-convolution weights start at zero.
    pub fn new(config: PolicyConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        let mut params = vec![0.0; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |b: Block, params: &mut [f64]| {
            let bound = 1.0 / (b.rows as f64).sqrt();
            for v in &mut params[b.range()] {
                *v = rng.random_range(-bound..bound);
            }
        };
        fill(layout.embed_w, &mut params);
        fill(layout.origin_token, &mut params);
        fill(layout.destination_token, &mut params);
        for l in &layout.layers {
            for b in [l.wq, l.wk, l.wv, l.wo, l.w1, l.w2] {
                fill(b, &mut params);
            }
        }
        fill(layout.head_w, &mut params);
        Ok(PolicyModel { config, layout, params })
    }

    pub fn param_count(&self) -> usize {
        self.layout.total
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let ckpt = Checkpoint {
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            shapes: self.layout.shapes(),
            params: self.params.clone(),
        };
        std::fs::write(path, serde_json::to_string(&ckpt)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|e| CopError::Checkpoint(e.to_string()))?;
        Self::from_checkpoint(ckpt)
    }

    pub fn from_checkpoint(ckpt: Checkpoint) -> Result<Self> {
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(CopError::Checkpoint(format!("unsupported version {}", ckpt.version)));
        }
        ckpt.config.validate().map_err(|e| CopError::Checkpoint(e.to_string()))?;
        let layout = Layout::new(&ckpt.config);
        if ckpt.shapes != layout.shapes() {
            return Err(CopError::Checkpoint("tensor shapes do not match the configuration".into()));
        }
        if ckpt.params.len() != layout.total {
            return Err(CopError::Checkpoint(format!(
                "expected {} parameters, found {}",
                layout.total,
                ckpt.params.len()
            )));
        }
        Ok(PolicyModel { config: ckpt.config, layout, params: ckpt.params })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: PolicyConfig,
    pub shapes: Vec<(String, [usize; 2])>,
    pub params: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_count_formula() {
        let cfg = PolicyConfig { d_in: 3, d_model: 8, heads: 2, d_ff: 12, layers: 2, out: 1, graph_conv: false };
        let (d, f) = (8, 12);
        let per_layer = 4 * d * d + d + 1 + d * f + f + f * d + d + 1;
        let expected = 3 * d + d + 2 * d + 2 * per_layer + d + 1;
        assert_eq!(Layout::new(&cfg).total, expected);
        let gc = PolicyConfig { graph_conv: true, ..cfg };
        assert_eq!(Layout::new(&gc).total, expected + 2 * d * d);
    }

    #[test]
    fn rezero_and_graph_weights_start_at_zero() {
        let cfg = PolicyConfig { graph_conv: true, ..Default::default() };
        let m = PolicyModel::new(cfg, 3).unwrap();
        for l in &m.layout.layers {
            assert_eq!(m.params[l.alpha_att.offset], 0.0);
            assert_eq!(m.params[l.alpha_ff.offset], 0.0);
            assert!(m.params[l.graph.unwrap().range()].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn checkpoint_round_trip_and_shape_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let m = PolicyModel::new(PolicyConfig { d_model: 8, d_ff: 8, heads: 2, layers: 1, ..Default::default() }, 1)
            .unwrap();
        m.save(&path).unwrap();
        let back = PolicyModel::load(&path).unwrap();
        assert_eq!(back.params, m.params);

        let mut ckpt: Checkpoint = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        ckpt.params.pop();
        assert!(matches!(PolicyModel::from_checkpoint(ckpt), Err(CopError::Checkpoint(_))));
    }

    #[test]
    fn heads_must_divide_width() {
        let cfg = PolicyConfig { d_model: 10, heads: 4, ..Default::default() };
        assert!(PolicyModel::new(cfg, 0).is_err());
    }
}
