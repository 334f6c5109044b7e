//! Single-layer LSTM grade predictor in three input topologies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{GradeScheme, Vocabulary};
use crate::encode::{above_categories, GradeVector, StepInput, Threshold};
use crate::error::{Error, Result};
use crate::linalg::{nonzero_indices, sigmoid, Matrix};

pub use crate::encode::ModelKind;

/// Default hidden width.
pub const DEFAULT_HIDDEN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    /// Courses.
    pub n: usize,
    /// Letter-grade categories.
    pub m: usize,
    /// Majors.
    pub k: usize,
    /// Hidden width.
    pub hidden: usize,
    /// Model 3 side-branch width.
    pub side: usize,
}

impl ModelDims {
    pub fn for_vocab(vocab: &Vocabulary, hidden: usize) -> Self {
        ModelDims {
            n: vocab.n(),
            m: vocab.m(),
            k: vocab.k(),
            hidden,
            side: hidden,
        }
    }

    pub fn output_dim(&self) -> usize {
        (self.m + 2) * self.n
    }

    pub fn input_dim(&self, kind: ModelKind) -> usize {
        kind.recurrent_input_dim(self.n, self.m, self.k)
    }

    fn output_in_dim(&self, kind: ModelKind) -> usize {
        match kind {
            ModelKind::Model3 => self.hidden + self.side,
            _ => self.hidden,
        }
    }
}

/// Input and recurrent weights plus bias for one LSTM gate.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub w_input: Matrix,
    pub w_hidden: Matrix,
    pub bias: Vec<f64>,
}

impl Gate {
    fn zeros(hidden: usize, input: usize) -> Self {
        Gate {
            w_input: Matrix::zeros(hidden, input),
            w_hidden: Matrix::zeros(hidden, hidden),
            bias: vec![0.0; hidden],
        }
    }

    /// Pre-activation `W_g x + W_h h + b`.
    fn preactivation(&self, x: &[f64], x_nz: &[usize], h_prev: &[f64]) -> Vec<f64> {
        let mut z = self.bias.clone();
        self.w_input.mul_sparse_acc(x, x_nz, &mut z);
        self.w_hidden.mul_acc(h_prev, &mut z);
        z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub forget: Gate,
    pub input: Gate,
    pub candidate: Gate,
    pub output: Gate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SideBranch {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputParams {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub side: Option<SideBranch>,
}

/// Every trainable tensor. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub lstm: LstmParams,
    pub output: OutputParams,
}

/// A named, flat view of one parameter tensor.
pub struct ParamBlock<'a> {
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub data: &'a [f64],
}

impl ModelParams {
    pub fn zeros(kind: ModelKind, dims: &ModelDims) -> Self {
        let d = dims.hidden;
        let input = dims.input_dim(kind);
        let gate = || Gate::zeros(d, input);
        ModelParams {
            lstm: LstmParams {
                forget: gate(),
                input: gate(),
                candidate: gate(),
                output: gate(),
            },
            output: OutputParams {
                weight: Matrix::zeros(dims.output_dim(), dims.output_in_dim(kind)),
                bias: vec![0.0; dims.output_dim()],
                side: (kind == ModelKind::Model3).then(|| SideBranch {
                    weight: Matrix::zeros(dims.side, dims.n),
                    bias: vec![0.0; dims.side],
                }),
            },
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.for_each_mut(|_, v| v.fill(0.0));
        z
    }

    /// Blocks in their fixed serialization order.
    pub fn blocks(&self) -> Vec<ParamBlock<'_>> {
        let l = &self.lstm;
        fn gate_blocks<'a>(g: &'a Gate, names: [&'static str; 3]) -> [(&'static str, usize, usize, &'a [f64]); 3] {
            let d = g.bias.len();
            [
                (names[0], d, g.w_input.cols(), g.w_input.data()),
                (names[1], d, d, g.w_hidden.data()),
                (names[2], d, 1, g.bias.as_slice()),
            ]
        }
        let mut raw: Vec<(&'static str, usize, usize, &[f64])> = Vec::new();
        raw.extend(gate_blocks(&l.forget, ["w_fg", "w_fh", "b_f"]));
        raw.extend(gate_blocks(&l.input, ["w_ig", "w_ih", "b_i"]));
        raw.extend(gate_blocks(&l.candidate, ["w_cg", "w_ch", "b_c"]));
        raw.extend(gate_blocks(&l.output, ["w_og", "w_oh", "b_o"]));
        let o = &self.output;
        raw.push(("w_out", o.weight.rows(), o.weight.cols(), o.weight.data()));
        raw.push(("b_out", o.bias.len(), 1, &o.bias));
        if let Some(s) = &o.side {
            raw.push(("w_side", s.weight.rows(), s.weight.cols(), s.weight.data()));
            raw.push(("b_side", s.bias.len(), 1, &s.bias));
        }
        raw.into_iter()
            .map(|(name, rows, cols, data)| ParamBlock { name, rows, cols, data })
            .collect()
    }

    /// Visits every block mutably in serialization order.
    pub fn for_each_mut(&mut self, mut f: impl FnMut(&'static str, &mut [f64])) {
        let l = &mut self.lstm;
        for (g, names) in [
            (&mut l.forget, ["w_fg", "w_fh", "b_f"]),
            (&mut l.input, ["w_ig", "w_ih", "b_i"]),
            (&mut l.candidate, ["w_cg", "w_ch", "b_c"]),
            (&mut l.output, ["w_og", "w_oh", "b_o"]),
        ] {
            f(names[0], g.w_input.data_mut());
            f(names[1], g.w_hidden.data_mut());
            f(names[2], &mut g.bias);
        }
        let o = &mut self.output;
        f("w_out", o.weight.data_mut());
        f("b_out", &mut o.bias);
        if let Some(s) = &mut o.side {
            f("w_side", s.weight.data_mut());
            f("b_side", &mut s.bias);
        }
    }

    /// Pairs every block of `self` with the same block of `other`.
    pub fn zip_mut(&mut self, other: &ModelParams, mut f: impl FnMut(&'static str, &mut [f64], &[f64])) {
        let theirs = other.blocks();
        let mut idx = 0;
        self.for_each_mut(|name, mine| {
            let b = &theirs[idx];
            assert_eq!(b.name, name, "parameter trees are not congruent");
            f(name, mine, b.data);
            idx += 1;
        });
    }

    pub fn num_values(&self) -> usize {
        self.blocks().iter().map(|b| b.data.len()).sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.blocks()
            .iter()
            .flat_map(|b| b.data.iter())
            .map(|v| v * v)
            .sum()
    }

    pub fn scale(&mut self, factor: f64) {
        self.for_each_mut(|_, v| v.iter_mut().for_each(|x| *x *= factor));
    }

    /// `self += other`.
    pub fn add_assign(&mut self, other: &ModelParams) {
        self.zip_mut(other, |_, a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        });
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl HiddenState {
    pub fn zeros(hidden: usize) -> Self {
        HiddenState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub kind: ModelKind,
    pub dims: ModelDims,
    pub threshold: Threshold,
    pub scheme: GradeScheme,
    pub params: ModelParams,
}

impl Model {
    /// Weights uniform in `±1/√fan_in` (fan-in = matrix columns), biases zero.
    pub fn init(
        kind: ModelKind,
        dims: ModelDims,
        threshold: Threshold,
        scheme: GradeScheme,
        seed: u64,
    ) -> Result<Self> {
        if dims.n == 0 || dims.m == 0 || dims.k == 0 || dims.hidden == 0 {
            return Err(Error::InvalidConfig(format!("zero dimension in {dims:?}")));
        }
        if kind == ModelKind::Model3 && dims.side == 0 {
            return Err(Error::InvalidConfig("zero side-branch width".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ModelParams::zeros(kind, &dims);
        let shapes: Vec<(usize, usize)> = params.blocks().iter().map(|b| (b.rows, b.cols)).collect();
        let mut idx = 0;
        params.for_each_mut(|name, values| {
            let (_, cols) = shapes[idx];
            idx += 1;
            if name.starts_with('b') {
                return;
            }
            let bound = 1.0 / (cols as f64).sqrt();
            for v in values.iter_mut() {
                *v = rng.gen_range(-bound..=bound);
            }
        });
        Ok(Model {
            kind,
            dims,
            threshold,
            scheme,
            params,
        })
    }

    pub fn for_vocab(kind: ModelKind, vocab: &Vocabulary, threshold: Threshold, hidden: usize, seed: u64) -> Result<Self> {
        Model::init(kind, ModelDims::for_vocab(vocab, hidden), threshold, vocab.scheme(), seed)
    }

    /// A model with every parameter zero.
    pub fn zeroed(kind: ModelKind, dims: ModelDims, threshold: Threshold, scheme: GradeScheme) -> Self {
        Model {
            kind,
            params: ModelParams::zeros(kind, &dims),
            dims,
            threshold,
            scheme,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.dims.input_dim(self.kind)
    }

    /// Letter-group indices counting as reaching this model's threshold.
    pub fn above_categories(&self) -> Vec<usize> {
        above_categories(self.scheme, self.threshold)
    }

    fn check_input(&self, input: &StepInput) -> Result<()> {
        if input.recurrent.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "recurrent input",
                expected: self.input_dim(),
                actual: input.recurrent.len(),
            });
        }
        match (self.kind, &input.side) {
            (ModelKind::Model3, Some(s)) if s.len() != self.dims.n => Err(Error::DimensionMismatch {
                what: "side input",
                expected: self.dims.n,
                actual: s.len(),
            }),
            (ModelKind::Model3, None) => Err(Error::InvalidConfig(
                "Model 3 requires next-semester co-enrollment".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Intermediate values of one LSTM step, kept for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct CellCache {
    pub x_nz: Vec<usize>,
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub c_tilde: Vec<f64>,
    pub o: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

pub(crate) fn cell_forward(params: &LstmParams, x: &[f64], prev: &HiddenState) -> (HiddenState, CellCache) {
    let x_nz = nonzero_indices(x);
    let f: Vec<f64> = params.forget.preactivation(x, &x_nz, &prev.h).into_iter().map(sigmoid).collect();
    let i: Vec<f64> = params.input.preactivation(x, &x_nz, &prev.h).into_iter().map(sigmoid).collect();
    let c_tilde: Vec<f64> = params
        .candidate
        .preactivation(x, &x_nz, &prev.h)
        .into_iter()
        .map(f64::tanh)
        .collect();
    let o: Vec<f64> = params.output.preactivation(x, &x_nz, &prev.h).into_iter().map(sigmoid).collect();
    let c: Vec<f64> = (0..f.len()).map(|j| f[j] * prev.c[j] + i[j] * c_tilde[j]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h: Vec<f64> = o.iter().zip(&tanh_c).map(|(a, b)| a * b).collect();
    (
        HiddenState { h, c },
        CellCache {
            x_nz,
            f,
            i,
            c_tilde,
            o,
            tanh_c,
        },
    )
}

/// One LSTM step: forget, input, candidate and output gates, then
/// `C = f·C_prev + i·C̃` and `h = o·tanh(C)`.
pub fn lstm_step(params: &LstmParams, x: &[f64], prev: &HiddenState) -> Result<HiddenState> {
    let d = params.forget.bias.len();
    let input_dim = params.forget.w_input.cols();
    if x.len() != input_dim {
        return Err(Error::DimensionMismatch {
            what: "lstm input",
            expected: input_dim,
            actual: x.len(),
        });
    }
    if prev.h.len() != d || prev.c.len() != d {
        return Err(Error::DimensionMismatch {
            what: "hidden state",
            expected: d,
            actual: prev.h.len().max(prev.c.len()),
        });
    }
    Ok(cell_forward(params, x, prev).0)
}

/// Side-branch activation `W_side·c + b_side`.
pub(crate) fn side_activation(branch: &SideBranch, side: &[f64]) -> Vec<f64> {
    let mut s = branch.bias.clone();
    branch.weight.mul_sparse_acc(side, &nonzero_indices(side), &mut s);
    s
}

/// The output layer's input vector: `h`, or `[h, W_side·c + b_side]` for Model 3.
pub(crate) fn output_layer_input(model: &Model, h: &[f64], side: Option<&[f64]>) -> Result<Vec<f64>> {
    match (&model.params.output.side, side) {
        (None, _) => Ok(h.to_vec()),
        (Some(branch), Some(c)) => {
            if c.len() != model.dims.n {
                return Err(Error::DimensionMismatch {
                    what: "side input",
                    expected: model.dims.n,
                    actual: c.len(),
                });
            }
            let mut u = h.to_vec();
            u.extend(side_activation(branch, c));
            Ok(u)
        }
        (Some(_), None) => Err(Error::InvalidConfig(
            "Model 3 requires next-semester co-enrollment".into(),
        )),
    }
}

pub(crate) fn logits_from(model: &Model, u: &[f64]) -> Vec<f64> {
    let out = &model.params.output;
    let mut logits = out.bias.clone();
    out.weight.mul_acc(u, &mut logits);
    logits
}

pub fn output_logits(model: &Model, h: &[f64], next_courses: Option<&[f64]>) -> Result<Vec<f64>> {
    if h.len() != model.dims.hidden {
        return Err(Error::DimensionMismatch {
            what: "hidden state",
            expected: model.dims.hidden,
            actual: h.len(),
        });
    }
    let u = output_layer_input(model, h, next_courses)?;
    Ok(logits_from(model, &u))
}

fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// Independent softmaxes over one course's letter group and its Pass/NoPass group.
pub fn group_softmax(logits: &[f64], m: usize, course: usize) -> (Vec<f64>, Vec<f64>) {
    let slot = &logits[course * (m + 2)..(course + 1) * (m + 2)];
    let mut letters = vec![0.0; m];
    let mut pnp = vec![0.0; 2];
    softmax_into(&slot[..m], &mut letters);
    softmax_into(&slot[m..], &mut pnp);
    (letters, pnp)
}

/// Group softmax over every course slot.
pub fn softmax_groups(logits: &[f64], n: usize, m: usize) -> GradeVector {
    let w = m + 2;
    let mut probs = vec![0.0; logits.len()];
    for i in 0..n {
        let (l, p) = (&logits[i * w..i * w + m], &logits[i * w + m..(i + 1) * w]);
        softmax_into(l, &mut probs[i * w..i * w + m]);
        softmax_into(p, &mut probs[i * w + m..(i + 1) * w]);
    }
    GradeVector::from_values(probs, n, m).expect("slot layout")
}

/// Per-step state and prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    pub state: HiddenState,
    pub logits: Vec<f64>,
    pub probs: GradeVector,
}

/// Runs a sequence from the zero state and keeps each step's state and output.
pub fn trace_sequence(model: &Model, inputs: &[StepInput]) -> Result<Vec<StepTrace>> {
    if inputs.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut state = HiddenState::zeros(model.dims.hidden);
    let mut out = Vec::with_capacity(inputs.len());
    for input in inputs {
        model.check_input(input)?;
        state = cell_forward(&model.params.lstm, &input.recurrent, &state).0;
        let logits = output_logits(model, &state.h, input.side.as_deref())?;
        let probs = softmax_groups(&logits, model.dims.n, model.dims.m);
        out.push(StepTrace {
            state: state.clone(),
            logits,
            probs,
        });
    }
    Ok(out)
}

/// Step `t`'s output is the predicted grade distribution for semester `t + 1`.
pub fn forward_sequence(model: &Model, inputs: &[StepInput]) -> Result<Vec<GradeVector>> {
    Ok(trace_sequence(model, inputs)?.into_iter().map(|t| t.probs).collect())
}

/// Final hidden state after replaying `inputs` from zero.
pub fn final_state(model: &Model, inputs: &[StepInput]) -> Result<HiddenState> {
    let mut state = HiddenState::zeros(model.dims.hidden);
    for input in inputs {
        model.check_input(input)?;
        state = cell_forward(&model.params.lstm, &input.recurrent, &state).0;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn dims(n: usize, m: usize, k: usize, hidden: usize) -> ModelDims {
        ModelDims { n, m, k, hidden, side: hidden }
    }

    fn model(kind: ModelKind, d: ModelDims, seed: u64) -> Model {
        Model::init(kind, d, Threshold::B, GradeScheme::Binary, seed).unwrap()
    }

    fn sigma(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let d = dims(10, 2, 3, 50);
        let a = model(ModelKind::Model2, d, 7);
        let b = model(ModelKind::Model2, d, 7);
        assert_eq!(a.params, b.params);
        assert_ne!(a.params, model(ModelKind::Model2, d, 8).params);
        assert_eq!(a.params.lstm.forget.w_hidden.shape(), (50, 50));
        assert_eq!(a.params.lstm.output.w_hidden.shape(), (50, 50));
        for block in a.params.blocks() {
            let bound = 1.0 / (block.cols as f64).sqrt();
            if block.name.starts_with('b') {
                assert!(block.data.iter().all(|v| *v == 0.0));
            } else {
                assert!(block.data.iter().all(|v| v.abs() <= bound), "{}", block.name);
            }
        }
        // fan-in 100: W_out of a 100-wide hidden layer
        let wide = model(ModelKind::Model1, dims(3, 2, 1, 100), 1);
        assert!(wide.params.output.weight.data().iter().all(|v| v.abs() <= 0.1));
        assert!(Model::init(ModelKind::Model1, dims(3, 2, 1, 0), Threshold::B, GradeScheme::Binary, 0).is_err());
    }

    #[test]
    fn zero_weights_step() {
        let m = Model::zeroed(ModelKind::Model1, dims(3, 2, 1, 4), Threshold::B, GradeScheme::Binary);
        let x = vec![1.0; 12];
        let s = lstm_step(&m.params.lstm, &x, &HiddenState::zeros(4)).unwrap();
        assert_eq!(s.c, vec![0.0; 4]);
        assert_eq!(s.h, vec![0.0; 4]);

        let prev = HiddenState { h: vec![0.0; 4], c: vec![2.0; 4] };
        let s = lstm_step(&m.params.lstm, &x, &prev).unwrap();
        assert_eq!(s.c, vec![1.0; 4]);
        for h in &s.h {
            assert_eq!(*h, 0.5 * (1.0f64).tanh());
        }
        assert!(lstm_step(&m.params.lstm, &[1.0; 5], &prev).is_err());
    }

    #[test]
    fn step_matches_straight_line_formulas() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = model(ModelKind::Model1, dims(1, 1, 1, 3), 11);
        let mut m = m;
        m.params.for_each_mut(|_, v| v.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0)));
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let prev = HiddenState {
            h: (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            c: (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        };
        let got = lstm_step(&m.params.lstm, &x, &prev).unwrap();

        let l = &m.params.lstm;
        for j in 0..3 {
            let pre = |g: &Gate| {
                let mut s = g.bias[j];
                for a in 0..3 {
                    s += g.w_input.get(j, a) * x[a];
                }
                for a in 0..3 {
                    s += g.w_hidden.get(j, a) * prev.h[a];
                }
                s
            };
            let f = sigma(pre(&l.forget));
            let i = sigma(pre(&l.input));
            let ct = pre(&l.candidate).tanh();
            let o = sigma(pre(&l.output));
            let c = f * prev.c[j] + i * ct;
            let h = o * c.tanh();
            assert!((got.c[j] - c).abs() < 1e-12);
            assert!((got.h[j] - h).abs() < 1e-12);
        }
    }

    #[test]
    fn model3_logits_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = ModelDims { n: 3, m: 2, k: 2, hidden: 4, side: 3 };
        let mut m = model(ModelKind::Model3, d, 2);
        m.params.for_each_mut(|_, v| v.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0)));
        let h: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c = vec![1.0, 0.0, 1.0];
        let got = output_logits(&m, &h, Some(&c)).unwrap();

        let side = m.params.output.side.as_ref().unwrap();
        let s: Vec<f64> = (0..3)
            .map(|r| side.bias[r] + (0..3).map(|j| side.weight.get(r, j) * c[j]).sum::<f64>())
            .collect();
        let u: Vec<f64> = h.iter().chain(&s).copied().collect();
        for r in 0..12 {
            let expect = m.params.output.bias[r]
                + (0..7).map(|j| m.params.output.weight.get(r, j) * u[j]).sum::<f64>();
            assert!((got[r] - expect).abs() < 1e-12);
        }
        assert!(output_logits(&m, &h, None).is_err());
    }

    #[test]
    fn model3_zero_side_drops_branch_columns() {
        let d = ModelDims { n: 3, m: 2, k: 2, hidden: 4, side: 4 };
        let m = model(ModelKind::Model3, d, 9);
        let h = vec![0.3, -0.2, 0.1, 0.5];
        let got = output_logits(&m, &h, Some(&[0.0; 3])).unwrap();
        for (r, g) in got.iter().enumerate() {
            let expect: f64 = (0..4).map(|j| m.params.output.weight.get(r, j) * h[j]).sum();
            assert_eq!(*g, expect);
        }
    }

    #[test]
    fn zero_output_weights_give_zero_logits() {
        let m = Model::zeroed(ModelKind::Model1, dims(3, 2, 1, 4), Threshold::B, GradeScheme::Binary);
        assert_eq!(output_logits(&m, &[0.4; 4], None).unwrap(), vec![0.0; 12]);
    }

    #[test]
    fn group_softmax_cases() {
        let logits = [(3.0f64).ln(), 0.0, 1.0, 1.0];
        let (l, p) = group_softmax(&logits, 2, 0);
        assert!((l[0] - 0.75).abs() < 1e-15);
        assert!((l[1] - 0.25).abs() < 1e-15);
        assert_eq!(p, vec![0.5, 0.5]);

        let shifted: Vec<f64> = logits.iter().map(|v| v + 7.0).collect();
        let (l2, p2) = group_softmax(&shifted, 2, 0);
        for (a, b) in l.iter().zip(&l2).chain(p.iter().zip(&p2)) {
            assert!((a - b).abs() < 1e-15);
        }
        let (big, _) = group_softmax(&[1000.0, 0.0, 0.0, 0.0], 2, 0);
        assert!(big[0].is_finite() && big[0] > 0.999);
    }

    #[test]
    fn forward_shapes_and_uniform_zero_model() {
        let d = dims(3, 2, 1, 4);
        let m = Model::zeroed(ModelKind::Model1, d, Threshold::B, GradeScheme::Binary);
        let step = StepInput { recurrent: vec![0.0; 12], side: None };
        let out = forward_sequence(&m, std::slice::from_ref(&step)).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].values.iter().all(|v| *v == 0.5));
        assert!(matches!(forward_sequence(&m, &[]), Err(Error::EmptySequence)));
    }
}
