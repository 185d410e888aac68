use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::vector::{SparseVector, TokenId};

/// Parameters of the toy document encoder.
///
/// `expansion[t * vocab + j]` is the contribution of input token `t` to
/// output token `j`; `bias[j]` is added to every output token.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    vocab_size: usize,
    expansion: Vec<f64>,
    bias: Vec<f64>,
}

/// Gradient with the same layout as [`EncoderParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrad {
    pub expansion: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ParamGrad {
    pub fn zeros(vocab_size: usize) -> Self {
        Self {
            expansion: vec![0.0; vocab_size * vocab_size],
            bias: vec![0.0; vocab_size],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.expansion.iter().chain(&self.bias).all(|x| x.is_finite())
    }

    /// Flat view: expansion entries first, then bias.
    pub fn get_flat(&self, i: usize) -> f64 {
        if i < self.expansion.len() {
            self.expansion[i]
        } else {
            self.bias[i - self.expansion.len()]
        }
    }
}

impl EncoderParams {
    /// All-zero parameters: every document encodes to the empty vector.
    pub fn zeros(vocab_size: usize) -> Self {
        Self {
            vocab_size,
            expansion: vec![0.0; vocab_size * vocab_size],
            bias: vec![0.0; vocab_size],
        }
    }

    /// Default initialisation: `0.5 · I` expansion, zero bias, so each
    /// document starts by copying its own tokens.
    pub fn identity_init(vocab_size: usize) -> Self {
        let mut p = Self::zeros(vocab_size);
        for t in 0..vocab_size {
            p.expansion[t * vocab_size + t] = 0.5;
        }
        p
    }

    pub fn from_parts(vocab_size: usize, expansion: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if expansion.len() != vocab_size * vocab_size {
            return Err(Error::LengthMismatch {
                expected: vocab_size * vocab_size,
                found: expansion.len(),
            });
        }
        if bias.len() != vocab_size {
            return Err(Error::LengthMismatch {
                expected: vocab_size,
                found: bias.len(),
            });
        }
        let p = Self {
            vocab_size,
            expansion,
            bias,
        };
        if !p.is_finite() {
            return Err(Error::NonFinite("encoder parameters"));
        }
        Ok(p)
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn expansion(&self) -> &[f64] {
        &self.expansion
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    #[inline]
    pub fn weight(&self, input: usize, output: usize) -> f64 {
        self.expansion[input * self.vocab_size + output]
    }

    pub fn set_weight(&mut self, input: usize, output: usize, value: f64) {
        self.expansion[input * self.vocab_size + output] = value;
    }

    pub fn set_bias(&mut self, output: usize, value: f64) {
        self.bias[output] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.expansion.iter().chain(&self.bias).all(|x| x.is_finite())
    }

    /// Number of scalar parameters (expansion then bias in flat order).
    pub fn len_flat(&self) -> usize {
        self.expansion.len() + self.bias.len()
    }

    pub fn get_flat(&self, i: usize) -> f64 {
        if i < self.expansion.len() {
            self.expansion[i]
        } else {
            self.bias[i - self.expansion.len()]
        }
    }

    pub fn set_flat(&mut self, i: usize, value: f64) {
        let n = self.expansion.len();
        if i < n {
            self.expansion[i] = value;
        } else {
            self.bias[i - n] = value;
        }
    }

    /// Plain gradient-descent step. On a non-finite result the parameters
    /// are left untouched.
    pub fn apply_gradient(&mut self, grad: &ParamGrad, learning_rate: f64) -> Result<()> {
        if grad.expansion.len() != self.expansion.len() || grad.bias.len() != self.bias.len() {
            return Err(Error::LengthMismatch {
                expected: self.len_flat(),
                found: grad.expansion.len() + grad.bias.len(),
            });
        }
        let step = |p: &f64, g: &f64| p - learning_rate * g;
        let finite = self
            .expansion
            .iter()
            .zip(&grad.expansion)
            .chain(self.bias.iter().zip(&grad.bias))
            .all(|(p, g)| step(p, g).is_finite());
        if !finite {
            return Err(Error::NonFinite("parameter update"));
        }
        for (p, g) in self.expansion.iter_mut().zip(&grad.expansion) {
            *p -= learning_rate * g;
        }
        for (p, g) in self.bias.iter_mut().zip(&grad.bias) {
            *p -= learning_rate * g;
        }
        Ok(())
    }
}

/// Dense pre-activations `z_j = bias_j + Σ_t count(t) · θ_{t,j}`.
/// Input tokens outside the encoder vocabulary are ignored.
pub fn pre_activations(params: &EncoderParams, doc_tokens: &SparseVector) -> Vec<f64> {
    let v = params.vocab_size;
    let mut z = params.bias.clone();
    for (t, count) in doc_tokens.iter() {
        if t.index() >= v {
            continue;
        }
        let row = &params.expansion[t.index() * v..(t.index() + 1) * v];
        for (zj, &w) in z.iter_mut().zip(row) {
            *zj += count * w;
        }
    }
    z
}

#[inline]
pub(crate) fn activation(z: f64) -> f64 {
    if z > 0.0 {
        math::ln_1p(z)
    } else {
        0.0
    }
}

/// `d activation / dz`, taking the right derivative (1) at `z == 0`.
#[inline]
pub(crate) fn activation_grad(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + z)
    } else {
        0.0
    }
}

/// Encodes a token-count vector: `w_j = ln(1 + max(0, z_j))`, zeros omitted.
pub fn encode_document(params: &EncoderParams, doc_tokens: &SparseVector) -> SparseVector {
    let z = pre_activations(params, doc_tokens);
    let pairs = z
        .iter()
        .enumerate()
        .map(|(j, &zj)| (TokenId(j as u32), activation(zj)))
        .filter(|&(_, w)| w > 0.0);
    SparseVector::from_pairs(pairs).expect("activations are finite and non-negative")
}
