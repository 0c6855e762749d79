//! Small autoregressive move-token policy.
//!
//! Input at each position is `features ++ onehot(prev token) ++ onehot(position)`,
//! followed by one tanh hidden layer and a linear map to six logits: the four
//! moves, end-of-answer, and a think-filler token. Filler tokens become one
//! `<think>…</think>` block when the rollout is turned into text.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use rand::Rng as _;
use thiserror::Error;

use crate::rng;
use crate::trace::{Move, THINK_CLOSE, THINK_OPEN};

pub const NUM_TOKENS: usize = 6;
pub const MAX_LEN: usize = 16;
pub const DEFAULT_HIDDEN: usize = 64;
pub const INIT_SCALE: f64 = 0.05;
/// Temperatures at or below this decode greedily.
pub const GREEDY_TEMPERATURE: f64 = 1e-6;

pub const CHECKPOINT_MAGIC: &str = "ARIADNE-POLICY v1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyToken {
    Move(Move),
    End,
    Think,
}

impl PolicyToken {
    pub const ALL: [PolicyToken; NUM_TOKENS] = [
        PolicyToken::Move(Move::Up),
        PolicyToken::Move(Move::Down),
        PolicyToken::Move(Move::Left),
        PolicyToken::Move(Move::Right),
        PolicyToken::End,
        PolicyToken::Think,
    ];

    pub fn index(self) -> usize {
        match self {
            PolicyToken::Move(Move::Up) => 0,
            PolicyToken::Move(Move::Down) => 1,
            PolicyToken::Move(Move::Left) => 2,
            PolicyToken::Move(Move::Right) => 3,
            PolicyToken::End => 4,
            PolicyToken::Think => 5,
        }
    }

    pub fn from_index(i: usize) -> PolicyToken {
        Self::ALL[i]
    }
}

impl fmt::Display for PolicyToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyToken::Move(m) => f.write_str(m.token()),
            PolicyToken::End => f.write_str("<end>"),
            PolicyToken::Think => f.write_str("<filler>"),
        }
    }
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("position {0} outside 0..{MAX_LEN}")]
    InvalidPosition(usize),
    #[error("invalid token sequence: {0}")]
    InvalidTokens(String),
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("checkpoint header {0:?} is not {CHECKPOINT_MAGIC:?}")]
    VersionMismatch(String),
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
}

/// Flat parameter vector: `W1 (hidden x input)`, `b1`, `W2 (6 x hidden)`, `b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub version: u32,
    pub theta: Vec<f64>,
}

/// Input width for a given feature-vector length.
pub fn input_dim_for(feature_len: usize) -> usize {
    feature_len + NUM_TOKENS + MAX_LEN
}

pub fn param_count(input_dim: usize, hidden_dim: usize) -> usize {
    hidden_dim * input_dim + hidden_dim + NUM_TOKENS * hidden_dim + NUM_TOKENS
}

impl PolicyParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            version: FORMAT_VERSION,
            theta: vec![0.0; param_count(input_dim, hidden_dim)],
        }
    }

    /// Weights uniform in `[-0.05, 0.05]`, biases zero.
    pub fn init(input_dim: usize, hidden_dim: usize, seed: u64) -> Self {
        let mut p = Self::zeros(input_dim, hidden_dim);
        let mut rng = rng::from_seed(seed);
        let (w1, w2) = (p.w1_range(), p.w2_range());
        for i in w1.chain(w2) {
            p.theta[i] = rng.random_range(-INIT_SCALE..=INIT_SCALE);
        }
        p
    }

    pub fn for_features(feature_len: usize, hidden_dim: usize, seed: u64) -> Self {
        Self::init(input_dim_for(feature_len), hidden_dim, seed)
    }

    pub fn feature_len(&self) -> usize {
        self.input_dim - NUM_TOKENS - MAX_LEN
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    fn w1_range(&self) -> std::ops::Range<usize> {
        0..self.hidden_dim * self.input_dim
    }

    fn b1_offset(&self) -> usize {
        self.hidden_dim * self.input_dim
    }

    fn w2_range(&self) -> std::ops::Range<usize> {
        let start = self.b1_offset() + self.hidden_dim;
        start..start + NUM_TOKENS * self.hidden_dim
    }

    fn b2_offset(&self) -> usize {
        self.w2_range().end
    }

    fn w1(&self, h: usize, j: usize) -> f64 {
        self.theta[h * self.input_dim + j]
    }

    fn w2(&self, k: usize, h: usize) -> f64 {
        self.theta[self.w2_range().start + k * self.hidden_dim + h]
    }

    fn check(&self, features: &[f64]) -> Result<(), PolicyError> {
        if self.input_dim < NUM_TOKENS + MAX_LEN
            || self.theta.len() != param_count(self.input_dim, self.hidden_dim)
        {
            return Err(PolicyError::DimensionMismatch {
                expected: param_count(self.input_dim, self.hidden_dim),
                actual: self.theta.len(),
            });
        }
        if features.len() != self.feature_len() {
            return Err(PolicyError::DimensionMismatch {
                expected: self.feature_len(),
                actual: features.len(),
            });
        }
        Ok(())
    }

    /// `W1[:, features] · features + b1`, shared by every position.
    fn project_features(&self, features: &[f64]) -> Vec<f64> {
        let b1 = self.b1_offset();
        (0..self.hidden_dim)
            .map(|h| {
                let row = &self.theta[h * self.input_dim..h * self.input_dim + features.len()];
                self.theta[b1 + h] + row.iter().zip(features).map(|(w, x)| w * x).sum::<f64>()
            })
            .collect()
    }

    /// Hidden activations and logits at one position.
    fn step(
        &self,
        projected: &[f64],
        prev: Option<PolicyToken>,
        position: usize,
    ) -> (Vec<f64>, [f64; NUM_TOKENS]) {
        let f = self.feature_len();
        let pos_col = f + NUM_TOKENS + position;
        let prev_col = prev.map(|t| f + t.index());
        let hidden: Vec<f64> = (0..self.hidden_dim)
            .map(|h| {
                let mut a = projected[h] + self.w1(h, pos_col);
                if let Some(c) = prev_col {
                    a += self.w1(h, c);
                }
                a.tanh()
            })
            .collect();
        let b2 = self.b2_offset();
        let mut logits = [0.0; NUM_TOKENS];
        for (k, logit) in logits.iter_mut().enumerate() {
            *logit = self.theta[b2 + k]
                + (0..self.hidden_dim)
                    .map(|h| self.w2(k, h) * hidden[h])
                    .sum::<f64>();
        }
        (hidden, logits)
    }
}

pub fn token_logits(
    params: &PolicyParams,
    features: &[f64],
    prev: Option<PolicyToken>,
    position: usize,
) -> Result<[f64; NUM_TOKENS], PolicyError> {
    params.check(features)?;
    if position >= MAX_LEN {
        return Err(PolicyError::InvalidPosition(position));
    }
    Ok(params
        .step(&params.project_features(features), prev, position)
        .1)
}

pub fn log_softmax(logits: &[f64; NUM_TOKENS]) -> [f64; NUM_TOKENS] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.map(|l| l - log_z)
}

pub fn softmax(logits: &[f64; NUM_TOKENS]) -> [f64; NUM_TOKENS] {
    log_softmax(logits).map(f64::exp)
}

fn validate_tokens(tokens: &[PolicyToken]) -> Result<(), PolicyError> {
    if tokens.len() > MAX_LEN {
        return Err(PolicyError::InvalidTokens(format!(
            "{} tokens exceed the cap of {MAX_LEN}",
            tokens.len()
        )));
    }
    if let Some(i) = tokens.iter().position(|&t| t == PolicyToken::End) {
        if i + 1 != tokens.len() {
            return Err(PolicyError::InvalidTokens(format!(
                "end token at {i} is not last"
            )));
        }
    }
    Ok(())
}

pub fn sequence_logprob(
    params: &PolicyParams,
    tokens: &[PolicyToken],
    features: &[f64],
) -> Result<f64, PolicyError> {
    params.check(features)?;
    validate_tokens(tokens)?;
    let projected = params.project_features(features);
    let mut prev = None;
    let mut total = 0.0;
    for (t, &tok) in tokens.iter().enumerate() {
        let (_, logits) = params.step(&projected, prev, t);
        total += log_softmax(&logits)[tok.index()];
        prev = Some(tok);
    }
    Ok(total)
}

/// `Σ_t log softmax(logits_t)[token_t]` and its gradient with respect to
/// every entry of `params.theta`.
pub fn sequence_logprob_and_grad(
    params: &PolicyParams,
    tokens: &[PolicyToken],
    features: &[f64],
) -> Result<(f64, Vec<f64>), PolicyError> {
    params.check(features)?;
    validate_tokens(tokens)?;
    let mut grad = vec![0.0; params.len()];
    let projected = params.project_features(features);
    let (hd, input, f) = (params.hidden_dim, params.input_dim, params.feature_len());
    let (b1, w2, b2) = (
        params.b1_offset(),
        params.w2_range().start,
        params.b2_offset(),
    );
    // Σ_t dL/da_t, reused for the feature columns of W1 and for b1.
    let mut pre_act_sum = vec![0.0; hd];
    let mut total = 0.0;
    let mut prev = None;
    for (t, &tok) in tokens.iter().enumerate() {
        let (hidden, logits) = params.step(&projected, prev, t);
        let logp = log_softmax(&logits);
        total += logp[tok.index()];
        let mut g_logits = logp.map(|l| -l.exp());
        g_logits[tok.index()] += 1.0;

        for k in 0..NUM_TOKENS {
            grad[b2 + k] += g_logits[k];
            for h in 0..hd {
                grad[w2 + k * hd + h] += g_logits[k] * hidden[h];
            }
        }
        let pos_col = f + NUM_TOKENS + t;
        let prev_col = prev.map(|p: PolicyToken| f + p.index());
        for h in 0..hd {
            let g_hidden: f64 = (0..NUM_TOKENS).map(|k| g_logits[k] * params.w2(k, h)).sum();
            let g_pre = g_hidden * (1.0 - hidden[h] * hidden[h]);
            pre_act_sum[h] += g_pre;
            grad[h * input + pos_col] += g_pre;
            if let Some(c) = prev_col {
                grad[h * input + c] += g_pre;
            }
        }
        prev = Some(tok);
    }
    for h in 0..hd {
        grad[b1 + h] += pre_act_sum[h];
        for (j, x) in features.iter().enumerate() {
            if *x != 0.0 {
                grad[h * input + j] += pre_act_sum[h] * x;
            }
        }
    }
    Ok((total, grad))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub tokens: Vec<PolicyToken>,
    pub logprob_current: f64,
    pub logprob_old: f64,
    pub completion_text: String,
}

/// Completion text for a token list: fillers go into a single think block,
/// moves follow in order, the end token is dropped.
pub fn serialize_tokens(tokens: &[PolicyToken]) -> String {
    let fillers = tokens.iter().filter(|&&t| t == PolicyToken::Think).count();
    let mut out = String::new();
    if fillers > 0 {
        out.push_str(THINK_OPEN);
        out.push_str(&vec!["step"; fillers].join(" "));
        out.push_str(THINK_CLOSE);
    }
    for t in tokens {
        if let PolicyToken::Move(m) = t {
            out.push_str(m.token());
        }
    }
    out
}

fn draw(probs: &[f64; NUM_TOKENS], rng: &mut rng::Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(NUM_TOKENS - 1)
}

fn argmax(values: &[f64; NUM_TOKENS]) -> usize {
    let mut best = 0;
    for i in 1..NUM_TOKENS {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

/// Samples one completion from the snapshot policy `old` and scores it under
/// both `old` and `current`. Log-probabilities are those of the untempered
/// policy; temperature only shapes the draw.
pub fn sample_rollout(
    current: &PolicyParams,
    old: &PolicyParams,
    features: &[f64],
    temperature: f64,
    rng: &mut rng::Rng,
) -> Result<Rollout, PolicyError> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(PolicyError::InvalidTemperature(temperature));
    }
    old.check(features)?;
    let projected = old.project_features(features);
    let mut tokens = Vec::with_capacity(MAX_LEN);
    let mut logprob_old = 0.0;
    let mut prev = None;
    for t in 0..MAX_LEN {
        let (_, logits) = old.step(&projected, prev, t);
        let choice = if temperature <= GREEDY_TEMPERATURE {
            argmax(&logits)
        } else {
            draw(&softmax(&logits.map(|l| l / temperature)), rng)
        };
        logprob_old += log_softmax(&logits)[choice];
        let tok = PolicyToken::from_index(choice);
        tokens.push(tok);
        if tok == PolicyToken::End {
            break;
        }
        prev = Some(tok);
    }
    let logprob_current = if std::ptr::eq(current, old) || current == old {
        logprob_old
    } else {
        sequence_logprob(current, &tokens, features)?
    };
    Ok(Rollout {
        completion_text: serialize_tokens(&tokens),
        tokens,
        logprob_current,
        logprob_old,
    })
}

pub fn checkpoint_to_string(params: &PolicyParams) -> String {
    let mut out = format!(
        "{CHECKPOINT_MAGIC}\n{} {}\n",
        params.input_dim, params.hidden_dim
    );
    for x in &params.theta {
        out.push_str(&format!("{x:.16e}\n"));
    }
    out
}

pub fn parse_checkpoint(text: &str) -> Result<PolicyParams, PolicyError> {
    let corrupt = |m: String| PolicyError::CorruptCheckpoint(m);
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| corrupt("empty file".into()))?;
    if header != CHECKPOINT_MAGIC {
        return Err(PolicyError::VersionMismatch(header.to_string()));
    }
    let dims = lines
        .next()
        .ok_or_else(|| corrupt("missing dimension line".into()))?;
    let dims: Vec<usize> = dims
        .split_whitespace()
        .map(|d| {
            d.parse()
                .map_err(|_| corrupt(format!("bad dimension {d:?}")))
        })
        .collect::<Result<_, _>>()?;
    let [input_dim, hidden_dim] = dims[..] else {
        return Err(corrupt(
            "dimension line must hold input_dim and hidden_dim".into(),
        ));
    };
    if input_dim < NUM_TOKENS + MAX_LEN || hidden_dim == 0 {
        return Err(corrupt(format!(
            "implausible dimensions {input_dim} {hidden_dim}"
        )));
    }
    let expected = param_count(input_dim, hidden_dim);
    let mut theta = Vec::with_capacity(expected);
    for (i, line) in lines.enumerate() {
        let x: f64 = line
            .trim()
            .parse()
            .map_err(|_| corrupt(format!("line {}: bad number {line:?}", i + 3)))?;
        if !x.is_finite() {
            return Err(corrupt(format!("line {}: non-finite parameter", i + 3)));
        }
        theta.push(x);
    }
    if theta.len() != expected {
        return Err(corrupt(format!(
            "expected {expected} parameters, found {}",
            theta.len()
        )));
    }
    Ok(PolicyParams {
        input_dim,
        hidden_dim,
        version: FORMAT_VERSION,
        theta,
    })
}

pub fn save_checkpoint(params: &PolicyParams, path: impl AsRef<Path>) -> Result<(), PolicyError> {
    fs::write(path, checkpoint_to_string(params))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<PolicyParams, PolicyError> {
    parse_checkpoint(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use PolicyToken::*;

    const FEATURES: usize = 12;

    fn features() -> Vec<f64> {
        (0..FEATURES).map(|i| (i % 3 == 0) as u8 as f64).collect()
    }

    #[test]
    fn zero_weights_give_uniform_logits() {
        let p = PolicyParams::zeros(input_dim_for(FEATURES), 8);
        let l = token_logits(&p, &features(), None, 0).unwrap();
        assert!(l.iter().all(|&x| x == l[0]));
        let (lp, g) =
            sequence_logprob_and_grad(&p, &[Move(crate::trace::Move::Up)], &features()).unwrap();
        assert!((lp - (1.0f64 / 6.0).ln()).abs() < 1e-15);
        assert_eq!(g.len(), p.len());
    }

    #[test]
    fn logits_are_pure_and_sensitive() {
        let mut p = PolicyParams::init(input_dim_for(FEATURES), 8, 1);
        let a = token_logits(&p, &features(), Some(Think), 3).unwrap();
        assert_eq!(a, token_logits(&p, &features(), Some(Think), 3).unwrap());
        let i = p.w2_range().start;
        p.theta[i] += 1e-3;
        assert_ne!(a, token_logits(&p, &features(), Some(Think), 3).unwrap());
    }

    #[test]
    fn dimension_and_position_errors() {
        let p = PolicyParams::zeros(input_dim_for(FEATURES), 4);
        assert!(matches!(
            token_logits(&p, &[0.0; 3], None, 0),
            Err(PolicyError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            token_logits(&p, &features(), None, MAX_LEN),
            Err(PolicyError::InvalidPosition(_))
        ));
        assert!(matches!(
            sequence_logprob(&p, &[End, Think], &features()),
            Err(PolicyError::InvalidTokens(_))
        ));
    }

    #[test]
    fn empty_sequence_has_zero_logprob_and_gradient() {
        let p = PolicyParams::init(input_dim_for(FEATURES), 4, 2);
        let (lp, g) = sequence_logprob_and_grad(&p, &[], &features()).unwrap();
        assert_eq!(lp, 0.0);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn softmax_is_a_distribution() {
        let s = softmax(&[1000.0, -1000.0, 0.0, 3.0, 3.0, -2.0]);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(s.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn serializer_wraps_fillers() {
        use crate::trace::Move::*;
        let toks = [
            Think,
            PolicyToken::Move(Up),
            Think,
            PolicyToken::Move(Right),
            End,
        ];
        assert_eq!(
            serialize_tokens(&toks),
            "<think>step step</think><|up|><|right|>"
        );
        assert_eq!(serialize_tokens(&[PolicyToken::Move(Left)]), "<|left|>");
        assert_eq!(serialize_tokens(&[End]), "");
    }

    #[test]
    fn identical_params_share_logprobs() {
        let p = PolicyParams::init(input_dim_for(FEATURES), 8, 3);
        let q = p.clone();
        let r = sample_rollout(&q, &p, &features(), 1.0, &mut rng::from_seed(9)).unwrap();
        assert_eq!(r.logprob_current, r.logprob_old);
        assert!(r.tokens.len() <= MAX_LEN);
        let direct = sequence_logprob(&p, &r.tokens, &features()).unwrap();
        assert!((direct - r.logprob_old).abs() < 1e-12);
    }

    #[test]
    fn greedy_decoding_follows_argmax() {
        let mut p = PolicyParams::zeros(input_dim_for(FEATURES), 4);
        let b2 = p.b2_offset();
        p.theta[b2 + End.index()] = 0.5;
        let r = sample_rollout(&p, &p, &features(), 1e-9, &mut rng::from_seed(0)).unwrap();
        assert_eq!(r.tokens, vec![End]);
        assert!(matches!(
            sample_rollout(&p, &p, &features(), 0.0, &mut rng::from_seed(0)),
            Err(PolicyError::InvalidTemperature(_))
        ));
    }

    #[test]
    fn checkpoint_errors() {
        let p = PolicyParams::init(input_dim_for(FEATURES), 3, 4);
        let text = checkpoint_to_string(&p);
        assert_eq!(parse_checkpoint(&text).unwrap(), p);
        let truncated: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            parse_checkpoint(&truncated),
            Err(PolicyError::CorruptCheckpoint(_))
        ));
        let wrong = text.replacen(CHECKPOINT_MAGIC, "ARIADNE-POLICY v2", 1);
        assert!(matches!(
            parse_checkpoint(&wrong),
            Err(PolicyError::VersionMismatch(_))
        ));
        assert!(matches!(
            parse_checkpoint(""),
            Err(PolicyError::CorruptCheckpoint(_))
        ));
    }
}
