//! Building blocks shared by the encoder and the heads: run mode with
//! dropout, LSTM cells, bidirectional recurrence and logistic scorers.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::params::{ParamId, ParamStore};
use crate::tape::{Tape, Var};

/// Training mode carries the RNG that draws dropout masks; evaluation mode
/// disables dropout entirely.
pub enum Mode<'r> {
    Eval,
    Train(&'r mut ChaCha8Rng),
}

impl Mode<'_> {
    pub fn is_training(&self) -> bool {
        matches!(self, Mode::Train(_))
    }
}

/// Inverted dropout: kept units are scaled by `1 / (1 - rate)`.
pub fn dropout(tape: &mut Tape<'_>, x: Var, rate: f64, mode: &mut Mode<'_>) -> Var {
    let Mode::Train(rng) = mode else { return x };
    if rate <= 0.0 {
        return x;
    }
    let keep = 1.0 / (1.0 - rate);
    let mask = (0..tape.value(x).len())
        .map(|_| if rng.gen_bool(rate) { 0.0 } else { keep })
        .collect();
    tape.mul_const(x, mask)
}

/// One LSTM direction: gates stacked as input, forget, cell, output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LstmParams {
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub bias: ParamId,
    pub hidden: usize,
}

impl LstmParams {
    pub fn init<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        input: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let w_ih = store.add_uniform(&format!("{prefix}.w_ih"), 4 * hidden, input, input, rng);
        let w_hh = store.add_uniform(&format!("{prefix}.w_hh"), 4 * hidden, hidden, hidden, rng);
        let bias = store.add(&format!("{prefix}.bias"), crate::params::Tensor::zeros(4 * hidden, 1));
        LstmParams { w_ih, w_hh, bias, hidden }
    }

    /// One recurrence step. `state = None` is the zero initial state.
    pub fn step(&self, tape: &mut Tape<'_>, x: Var, state: Option<(Var, Var)>) -> (Var, Var) {
        let h = self.hidden;
        let mut gates = tape.affine(self.w_ih, self.bias, x);
        if let Some((h_prev, _)) = state {
            let rec = tape.matvec(self.w_hh, h_prev);
            gates = tape.add(gates, rec);
        }
        let i_pre = tape.slice(gates, 0, h);
        let f_pre = tape.slice(gates, h, h);
        let g_pre = tape.slice(gates, 2 * h, h);
        let o_pre = tape.slice(gates, 3 * h, h);
        let i = tape.sigmoid(i_pre);
        let g = tape.tanh(g_pre);
        let o = tape.sigmoid(o_pre);
        let mut c = tape.mul(i, g);
        if let Some((_, c_prev)) = state {
            let f = tape.sigmoid(f_pre);
            let keep = tape.mul(f, c_prev);
            c = tape.add(keep, c);
        }
        let tc = tape.tanh(c);
        let h_new = tape.mul(o, tc);
        (h_new, c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BiLstm {
    pub forward: LstmParams,
    pub backward: LstmParams,
}

impl BiLstm {
    pub fn init<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        input: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        BiLstm {
            forward: LstmParams::init(store, &format!("{prefix}.fw"), input, hidden, rng),
            backward: LstmParams::init(store, &format!("{prefix}.bw"), input, hidden, rng),
        }
    }

    pub fn output_dim(&self) -> usize {
        self.forward.hidden + self.backward.hidden
    }

    /// Runs both directions over the real prefix `inputs[..len]` and returns
    /// `[forward_t ; backward_t]` per position; positions `len..` get `zero`.
    pub fn run(&self, tape: &mut Tape<'_>, inputs: &[Var], len: usize, zero: Var) -> Vec<Var> {
        let mut fw = Vec::with_capacity(len);
        let mut state = None;
        for &x in &inputs[..len] {
            let s = self.forward.step(tape, x, state);
            fw.push(s.0);
            state = Some(s);
        }
        let mut bw = alloc::vec![zero; len];
        let mut state = None;
        for t in (0..len).rev() {
            let s = self.backward.step(tape, inputs[t], state);
            bw[t] = s.0;
            state = Some(s);
        }
        let mut out: Vec<Var> = fw.iter().zip(&bw).map(|(&f, &b)| tape.concat(&[f, b])).collect();
        out.resize(inputs.len(), zero);
        out
    }
}

/// `σ(w·x + b)` with a `1 × n` weight row and a scalar bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LogisticScorer {
    pub w: ParamId,
    pub b: ParamId,
}

impl LogisticScorer {
    pub fn init<R: Rng + ?Sized>(store: &mut ParamStore, prefix: &str, input: usize, rng: &mut R) -> Self {
        LogisticScorer {
            w: store.add_uniform(&format!("{prefix}.w"), 1, input, input, rng),
            b: store.add(&format!("{prefix}.b"), crate::params::Tensor::zeros(1, 1)),
        }
    }

    pub fn score(&self, tape: &mut Tape<'_>, x: Var) -> Var {
        let logit = tape.affine(self.w, self.b, x);
        tape.sigmoid(logit)
    }
}

/// Affine map `W x + b` with no nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
}

impl Linear {
    pub fn init<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        input: usize,
        output: usize,
        rng: &mut R,
    ) -> Self {
        Linear {
            w: store.add_uniform(&format!("{prefix}.w"), output, input, input, rng),
            b: store.add(&format!("{prefix}.b"), crate::params::Tensor::zeros(output, 1)),
        }
    }

    pub fn apply(&self, tape: &mut Tape<'_>, x: Var) -> Var {
        tape.affine(self.w, self.b, x)
    }
}
