//! Parameter containers for the recurrent classifiers, plus a uniform
//! name-addressed tensor view used by the optimizer, the gradient checker,
//! and checkpoint serialization.

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};
use serde::{Deserialize, Serialize};

/// Which classifier architecture a parameter set belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Bidirectional layer; all per-step outputs concatenated into the head.
    #[serde(rename = "full-bilstm")]
    FullBiLstm,
    /// Unidirectional layer; all hidden states concatenated into the head.
    #[serde(rename = "full-lstm")]
    FullLstm,
    /// Bidirectional layer; only the final step's output feeds the head.
    #[serde(rename = "bilstm-last")]
    BiLstmLast,
    /// Two bidirectional layers; second layer's outputs concatenated.
    #[serde(rename = "stacked-full-bilstm")]
    StackedFullBiLstm,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::FullBiLstm,
        Variant::FullLstm,
        Variant::BiLstmLast,
        Variant::StackedFullBiLstm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::FullBiLstm => "full-bilstm",
            Variant::FullLstm => "full-lstm",
            Variant::BiLstmLast => "bilstm-last",
            Variant::StackedFullBiLstm => "stacked-full-bilstm",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .iter()
            .copied()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model variant '{s}'")))
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Architecture geometry: enough to build, check, and reload parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: Variant,
    /// D: per-step feature width (link count of the dFC rows).
    pub input_dim: usize,
    /// H: hidden width; per-step outputs share this width.
    pub hidden_dim: usize,
    /// T: fixed crop length every sample must have.
    pub seq_len: usize,
    pub num_classes: usize,
}

impl ModelConfig {
    pub fn new(variant: Variant, input_dim: usize, hidden_dim: usize, seq_len: usize) -> Self {
        ModelConfig {
            variant,
            input_dim,
            hidden_dim,
            seq_len,
            num_classes: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 || self.seq_len == 0 {
            return Err(Error::Config(format!(
                "model dims must be positive: input {}, hidden {}, seq {}",
                self.input_dim, self.hidden_dim, self.seq_len
            )));
        }
        if self.num_classes != 2 {
            return Err(Error::Config(format!(
                "binary head only: num_classes {} != 2",
                self.num_classes
            )));
        }
        Ok(())
    }

    /// Width of the vector handed to the dense head.
    pub fn feature_dim(&self) -> usize {
        match self.variant {
            Variant::FullBiLstm | Variant::FullLstm | Variant::StackedFullBiLstm => {
                self.seq_len * self.hidden_dim
            }
            Variant::BiLstmLast => self.hidden_dim,
        }
    }
}

/// One recurrent cell's parameters. Input gate i, forget gate f, output gate
/// o, and candidate c each have an input projection (H x D), a recurrent
/// projection (H x H), and a bias (H).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w_xi: Matrix,
    pub w_hi: Matrix,
    pub w_xf: Matrix,
    pub w_hf: Matrix,
    pub w_xo: Matrix,
    pub w_ho: Matrix,
    pub w_xc: Matrix,
    pub w_hc: Matrix,
    pub b_i: Vec<f64>,
    pub b_f: Vec<f64>,
    pub b_o: Vec<f64>,
    pub b_c: Vec<f64>,
}

impl LstmParams {
    pub fn zeroed(input_dim: usize, hidden_dim: usize) -> Self {
        let (d, h) = (input_dim, hidden_dim);
        LstmParams {
            input_dim: d,
            hidden_dim: h,
            w_xi: Matrix::zeros(h, d),
            w_hi: Matrix::zeros(h, h),
            w_xf: Matrix::zeros(h, d),
            w_hf: Matrix::zeros(h, h),
            w_xo: Matrix::zeros(h, d),
            w_ho: Matrix::zeros(h, h),
            w_xc: Matrix::zeros(h, d),
            w_hc: Matrix::zeros(h, h),
            b_i: vec![0.0; h],
            b_f: vec![0.0; h],
            b_o: vec![0.0; h],
            b_c: vec![0.0; h],
        }
    }

    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<TensorView<'a>>) {
        let mats: [(&str, &Matrix); 8] = [
            ("w_xi", &self.w_xi),
            ("w_hi", &self.w_hi),
            ("w_xf", &self.w_xf),
            ("w_hf", &self.w_hf),
            ("w_xo", &self.w_xo),
            ("w_ho", &self.w_ho),
            ("w_xc", &self.w_xc),
            ("w_hc", &self.w_hc),
        ];
        for (name, m) in mats {
            out.push(TensorView {
                name: format!("{prefix}{name}"),
                kind: TensorKind::Weight,
                rows: m.rows(),
                cols: m.cols(),
                values: m.values(),
            });
        }
        let vecs: [(&str, &Vec<f64>); 4] = [
            ("b_i", &self.b_i),
            ("b_f", &self.b_f),
            ("b_o", &self.b_o),
            ("b_c", &self.b_c),
        ];
        for (name, v) in vecs {
            out.push(TensorView {
                name: format!("{prefix}{name}"),
                kind: TensorKind::Bias,
                rows: v.len(),
                cols: 1,
                values: v,
            });
        }
    }

    fn collect_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<TensorViewMut<'a>>) {
        let mats: [(&str, &mut Matrix); 8] = [
            ("w_xi", &mut self.w_xi),
            ("w_hi", &mut self.w_hi),
            ("w_xf", &mut self.w_xf),
            ("w_hf", &mut self.w_hf),
            ("w_xo", &mut self.w_xo),
            ("w_ho", &mut self.w_ho),
            ("w_xc", &mut self.w_xc),
            ("w_hc", &mut self.w_hc),
        ];
        for (name, m) in mats {
            let (rows, cols) = (m.rows(), m.cols());
            out.push(TensorViewMut {
                name: format!("{prefix}{name}"),
                kind: TensorKind::Weight,
                rows,
                cols,
                values: m.values_mut(),
            });
        }
        let vecs: [(&str, &mut Vec<f64>); 4] = [
            ("b_i", &mut self.b_i),
            ("b_f", &mut self.b_f),
            ("b_o", &mut self.b_o),
            ("b_c", &mut self.b_c),
        ];
        for (name, v) in vecs {
            let rows = v.len();
            out.push(TensorViewMut {
                name: format!("{prefix}{name}"),
                kind: TensorKind::Bias,
                rows,
                cols: 1,
                values: v,
            });
        }
    }
}

/// Two opposite-direction cells plus per-step output projections:
/// y_t = w_fy * h_forward_t + w_by * h_backward_t + b_y.
#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmParams {
    pub forward: LstmParams,
    pub backward: LstmParams,
    /// O x H; output width O equals the hidden width here.
    pub w_fy: Matrix,
    pub w_by: Matrix,
    pub b_y: Vec<f64>,
}

impl BiLstmParams {
    pub fn zeroed(input_dim: usize, hidden_dim: usize) -> Self {
        let h = hidden_dim;
        BiLstmParams {
            forward: LstmParams::zeroed(input_dim, h),
            backward: LstmParams::zeroed(input_dim, h),
            w_fy: Matrix::zeros(h, h),
            w_by: Matrix::zeros(h, h),
            b_y: vec![0.0; h],
        }
    }

    pub fn output_dim(&self) -> usize {
        self.w_fy.rows()
    }

    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<TensorView<'a>>) {
        self.forward.collect(&format!("{prefix}forward."), out);
        self.backward.collect(&format!("{prefix}backward."), out);
        for (name, m) in [("w_fy", &self.w_fy), ("w_by", &self.w_by)] {
            out.push(TensorView {
                name: format!("{prefix}{name}"),
                kind: TensorKind::Weight,
                rows: m.rows(),
                cols: m.cols(),
                values: m.values(),
            });
        }
        out.push(TensorView {
            name: format!("{prefix}b_y"),
            kind: TensorKind::Bias,
            rows: self.b_y.len(),
            cols: 1,
            values: &self.b_y,
        });
    }

    fn collect_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<TensorViewMut<'a>>) {
        self.forward.collect_mut(&format!("{prefix}forward."), out);
        self.backward.collect_mut(&format!("{prefix}backward."), out);
        for (name, m) in [("w_fy", &mut self.w_fy), ("w_by", &mut self.w_by)] {
            let (rows, cols) = (m.rows(), m.cols());
            out.push(TensorViewMut {
                name: format!("{prefix}{name}"),
                kind: TensorKind::Weight,
                rows,
                cols,
                values: m.values_mut(),
            });
        }
        let rows = self.b_y.len();
        out.push(TensorViewMut {
            name: format!("{prefix}b_y"),
            kind: TensorKind::Bias,
            rows,
            cols: 1,
            values: &mut self.b_y,
        });
    }
}

/// Dense classification head over the flattened feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    /// num_classes x feature_dim.
    pub w_dense: Matrix,
    pub b_dense: Vec<f64>,
}

impl HeadParams {
    pub fn zeroed(num_classes: usize, feature_dim: usize) -> Self {
        HeadParams {
            w_dense: Matrix::zeros(num_classes, feature_dim),
            b_dense: vec![0.0; num_classes],
        }
    }

    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<TensorView<'a>>) {
        out.push(TensorView {
            name: format!("{prefix}w_dense"),
            kind: TensorKind::Weight,
            rows: self.w_dense.rows(),
            cols: self.w_dense.cols(),
            values: self.w_dense.values(),
        });
        out.push(TensorView {
            name: format!("{prefix}b_dense"),
            kind: TensorKind::Bias,
            rows: self.b_dense.len(),
            cols: 1,
            values: &self.b_dense,
        });
    }

    fn collect_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<TensorViewMut<'a>>) {
        let (rows, cols) = (self.w_dense.rows(), self.w_dense.cols());
        out.push(TensorViewMut {
            name: format!("{prefix}w_dense"),
            kind: TensorKind::Weight,
            rows,
            cols,
            values: self.w_dense.values_mut(),
        });
        let rows = self.b_dense.len();
        out.push(TensorViewMut {
            name: format!("{prefix}b_dense"),
            kind: TensorKind::Bias,
            rows,
            cols: 1,
            values: &mut self.b_dense,
        });
    }
}

/// Weight tensors and bias tensors are treated differently by
/// initialization and by L1 regularization (weights only).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorKind {
    Weight,
    Bias,
}

/// Read view of one named parameter tensor, row-major.
pub struct TensorView<'a> {
    pub name: String,
    pub kind: TensorKind,
    pub rows: usize,
    pub cols: usize,
    pub values: &'a [f64],
}

/// Write view of one named parameter tensor, row-major.
pub struct TensorViewMut<'a> {
    pub name: String,
    pub kind: TensorKind,
    pub rows: usize,
    pub cols: usize,
    pub values: &'a mut [f64],
}

/// Complete parameter set for one model variant.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    FullBiLstm { layer: BiLstmParams, head: HeadParams },
    FullLstm { layer: LstmParams, head: HeadParams },
    BiLstmLast { layer: BiLstmParams, head: HeadParams },
    StackedFullBiLstm { layer1: BiLstmParams, layer2: BiLstmParams, head: HeadParams },
}

impl ModelParams {
    /// All-zero parameters shaped for `config`; also the gradient accumulator
    /// shape for that config.
    pub fn zeroed(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let (d, h, c, f) = (
            config.input_dim,
            config.hidden_dim,
            config.num_classes,
            config.feature_dim(),
        );
        Ok(match config.variant {
            Variant::FullBiLstm => ModelParams::FullBiLstm {
                layer: BiLstmParams::zeroed(d, h),
                head: HeadParams::zeroed(c, f),
            },
            Variant::FullLstm => ModelParams::FullLstm {
                layer: LstmParams::zeroed(d, h),
                head: HeadParams::zeroed(c, f),
            },
            Variant::BiLstmLast => ModelParams::BiLstmLast {
                layer: BiLstmParams::zeroed(d, h),
                head: HeadParams::zeroed(c, f),
            },
            Variant::StackedFullBiLstm => ModelParams::StackedFullBiLstm {
                layer1: BiLstmParams::zeroed(d, h),
                // Second layer consumes the first layer's per-step outputs.
                layer2: BiLstmParams::zeroed(h, h),
                head: HeadParams::zeroed(c, f),
            },
        })
    }

    pub fn variant(&self) -> Variant {
        match self {
            ModelParams::FullBiLstm { .. } => Variant::FullBiLstm,
            ModelParams::FullLstm { .. } => Variant::FullLstm,
            ModelParams::BiLstmLast { .. } => Variant::BiLstmLast,
            ModelParams::StackedFullBiLstm { .. } => Variant::StackedFullBiLstm,
        }
    }

    /// Every tensor in a fixed documented order: layers bottom-up (forward
    /// cell, backward cell, output projections), then the head. This order
    /// defines rng consumption in `init_params` and checkpoint layout.
    pub fn tensors(&self) -> Vec<TensorView<'_>> {
        let mut out = Vec::new();
        match self {
            ModelParams::FullBiLstm { layer, head } | ModelParams::BiLstmLast { layer, head } => {
                layer.collect("layer.", &mut out);
                head.collect("head.", &mut out);
            }
            ModelParams::FullLstm { layer, head } => {
                layer.collect("layer.", &mut out);
                head.collect("head.", &mut out);
            }
            ModelParams::StackedFullBiLstm { layer1, layer2, head } => {
                layer1.collect("layer1.", &mut out);
                layer2.collect("layer2.", &mut out);
                head.collect("head.", &mut out);
            }
        }
        out
    }

    /// Mutable counterpart of `tensors`, same order.
    pub fn tensors_mut(&mut self) -> Vec<TensorViewMut<'_>> {
        let mut out = Vec::new();
        match self {
            ModelParams::FullBiLstm { layer, head } | ModelParams::BiLstmLast { layer, head } => {
                layer.collect_mut("layer.", &mut out);
                head.collect_mut("head.", &mut out);
            }
            ModelParams::FullLstm { layer, head } => {
                layer.collect_mut("layer.", &mut out);
                head.collect_mut("head.", &mut out);
            }
            ModelParams::StackedFullBiLstm { layer1, layer2, head } => {
                layer1.collect_mut("layer1.", &mut out);
                layer2.collect_mut("layer2.", &mut out);
                head.collect_mut("head.", &mut out);
            }
        }
        out
    }

    /// Sets every tensor to zero (gradient accumulator reset).
    pub fn zero_all(&mut self) {
        for t in self.tensors_mut() {
            t.values.fill(0.0);
        }
    }
}

/// Random initialization: each weight matrix (rows x cols, mapping a
/// cols-wide vector to a rows-wide one) is uniform on (-a, a) with
/// a = sqrt(6 / (rows + cols)); biases are zero except the forget-gate bias,
/// which starts at 1 so early training does not erase the cell state.
/// Deterministic given the rng state; tensors are filled in `tensors` order.
pub fn init_params(config: &ModelConfig, rng: &mut Rng) -> Result<ModelParams> {
    let mut params = ModelParams::zeroed(config)?;
    for t in params.tensors_mut() {
        match t.kind {
            TensorKind::Weight => {
                let a = (6.0 / (t.rows + t.cols) as f64).sqrt();
                for v in t.values.iter_mut() {
                    *v = rng.uniform(-a, a);
                }
            }
            TensorKind::Bias => {
                let fill = if t.name.ends_with("b_f") { 1.0 } else { 0.0 };
                t.values.fill(fill);
            }
        }
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(variant: Variant) -> ModelConfig {
        ModelConfig::new(variant, 7, 4, 3)
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("full_bilstm".parse::<Variant>().is_err());
    }

    #[test]
    fn feature_dims_per_variant() {
        assert_eq!(cfg(Variant::FullBiLstm).feature_dim(), 12);
        assert_eq!(cfg(Variant::FullLstm).feature_dim(), 12);
        assert_eq!(cfg(Variant::BiLstmLast).feature_dim(), 4);
        assert_eq!(cfg(Variant::StackedFullBiLstm).feature_dim(), 12);
    }

    #[test]
    fn tensor_names_unique_and_stable() {
        for v in Variant::ALL {
            let params = ModelParams::zeroed(&cfg(v)).unwrap();
            let names: Vec<String> = params.tensors().into_iter().map(|t| t.name).collect();
            let mut sorted = names.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), names.len(), "duplicate tensor name in {v}");
        }
        let params = ModelParams::zeroed(&cfg(Variant::FullBiLstm)).unwrap();
        let names: Vec<String> = params.tensors().into_iter().map(|t| t.name).collect();
        assert!(names.contains(&"layer.forward.w_xi".to_string()));
        assert!(names.contains(&"layer.backward.b_c".to_string()));
        assert!(names.contains(&"head.w_dense".to_string()));
        // 12 tensors per direction + w_fy + w_by + b_y + 2 head tensors.
        assert_eq!(names.len(), 29);
    }

    #[test]
    fn stacked_second_layer_consumes_hidden_width() {
        let params = ModelParams::zeroed(&cfg(Variant::StackedFullBiLstm)).unwrap();
        match params {
            ModelParams::StackedFullBiLstm { layer1, layer2, .. } => {
                assert_eq!(layer1.forward.input_dim, 7);
                assert_eq!(layer2.forward.input_dim, 4);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn init_same_seed_is_bit_identical() {
        let config = cfg(Variant::StackedFullBiLstm);
        let a = init_params(&config, &mut Rng::new(9, 0)).unwrap();
        let b = init_params(&config, &mut Rng::new(9, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn init_biases_follow_forget_gate_rule() {
        let params = init_params(&cfg(Variant::FullBiLstm), &mut Rng::new(1, 0)).unwrap();
        for t in params.tensors() {
            if t.kind == TensorKind::Bias {
                let want = if t.name.ends_with("b_f") { 1.0 } else { 0.0 };
                assert!(t.values.iter().all(|&v| v == want), "{}", t.name);
            }
        }
    }

    #[test]
    fn init_weights_within_glorot_bound_and_centered() {
        // Large input projection: 100 x 1000 entries = 1e5 draws.
        let config = ModelConfig::new(Variant::FullLstm, 1000, 100, 1);
        let params = init_params(&config, &mut Rng::new(3, 0)).unwrap();
        let t = params
            .tensors()
            .into_iter()
            .find(|t| t.name == "layer.w_xi")
            .unwrap();
        let a = (6.0 / (1000 + 100) as f64).sqrt();
        assert!(t.values.iter().all(|v| v.abs() < a));
        let n = t.values.len() as f64;
        let mean = t.values.iter().sum::<f64>() / n;
        // Uniform(-a, a): sd of the sample mean is a / sqrt(3 n).
        let stderr = a / (3.0 * n).sqrt();
        assert!(mean.abs() < 3.0 * stderr, "mean {mean} vs stderr {stderr}");
    }

    #[test]
    fn zero_all_resets_every_tensor() {
        let mut params = init_params(&cfg(Variant::FullBiLstm), &mut Rng::new(5, 0)).unwrap();
        params.zero_all();
        for t in params.tensors() {
            assert!(t.values.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let mut config = cfg(Variant::FullLstm);
        config.num_classes = 3;
        assert!(ModelParams::zeroed(&config).is_err());
        let mut config = cfg(Variant::FullLstm);
        config.hidden_dim = 0;
        assert!(ModelParams::zeroed(&config).is_err());
    }
}
