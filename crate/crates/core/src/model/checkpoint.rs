//! Text checkpoint format.
//!
//! ```text
//! fairshift-checkpoint 1
//! numeric_dim 6
//! embeddings 9x64 17x64
//! hidden 256
//! activation relu
//! heads 1
//! values.embedding.0 576 3fb9...
//! ...
//! accumulators.heads.bias 1 3fb9...
//! end
//! ```
//!
//! Every scalar is written as the 16-hex-digit image of its IEEE-754 bits, so a
//! round trip is bit-exact.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numcore::{
    Activation, EmbeddingShape, ModelParams, ParamSet, Topology, INITIAL_ACCUMULATOR,
};

const MAGIC: &str = "fairshift-checkpoint 1";
/// Upper bound on the scalars a checkpoint may declare.
const MAX_SCALARS: usize = 1 << 26;

pub fn encode_checkpoint(params: &ModelParams) -> String {
    let t = &params.topology;
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "numeric_dim {}", t.numeric_dim).unwrap();
    let emb: Vec<String> = t
        .embeddings
        .iter()
        .map(|e| format!("{}x{}", e.vocab, e.dim))
        .collect();
    writeln!(out, "embeddings {}", emb.join(" ")).unwrap();
    match t.hidden {
        Some(h) => writeln!(out, "hidden {h}").unwrap(),
        None => writeln!(out, "hidden none").unwrap(),
    }
    let act = match t.activation {
        Activation::Relu => "relu",
        Activation::Identity => "identity",
    };
    writeln!(out, "activation {act}").unwrap();
    writeln!(out, "heads {}", t.heads).unwrap();
    for (set, values) in [
        ("values", &params.values),
        ("accumulators", &params.accumulators),
    ] {
        for (name, tensor) in values.tensor_names().iter().zip(values.tensors()) {
            write!(out, "{set}.{name} {}", tensor.len()).unwrap();
            for v in tensor {
                write!(out, " {:016x}", v.to_bits()).unwrap();
            }
            out.push('\n');
        }
    }
    out.push_str("end\n");
    out
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn field<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str> {
    let line = line.ok_or_else(|| bad(format!("missing {key} line")))?;
    let rest = line
        .strip_prefix(key)
        .ok_or_else(|| bad(format!("expected {key}, found {line:?}")))?;
    if rest.is_empty() {
        return Ok(rest);
    }
    rest.strip_prefix(' ')
        .ok_or_else(|| bad(format!("expected {key}, found {line:?}")))
}

fn count(s: &str, what: &str) -> Result<usize> {
    s.parse::<usize>()
        .map_err(|_| bad(format!("{what}: {s:?} is not a count")))
}

fn topology_scalars(t: &Topology) -> Option<usize> {
    let mut total: usize = 0;
    let mut input = t.numeric_dim;
    for e in &t.embeddings {
        total = total.checked_add(e.vocab.checked_mul(e.dim)?)?;
        input = input.checked_add(e.dim)?;
    }
    let rep = match t.hidden {
        Some(h) => {
            total = total.checked_add(input.checked_mul(h)?)?.checked_add(h)?;
            h
        }
        None => input,
    };
    total
        .checked_add(t.heads.checked_mul(rep)?)?
        .checked_add(t.heads)
}

/// Parses a checkpoint written by [`encode_checkpoint`]. Any malformed input is
/// reported as [`Error::Checkpoint`]; decoding never panics.
pub fn decode_checkpoint(text: &str) -> Result<ModelParams> {
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(bad("missing header"));
    }
    let numeric_dim = count(field(lines.next(), "numeric_dim")?, "numeric_dim")?;
    let mut embeddings = Vec::new();
    for tok in field(lines.next(), "embeddings")?.split_whitespace() {
        let (v, d) = tok
            .split_once('x')
            .ok_or_else(|| bad(format!("embedding shape {tok:?}")))?;
        let shape = EmbeddingShape {
            vocab: count(v, "embedding vocab")?,
            dim: count(d, "embedding dim")?,
        };
        if shape.vocab == 0 || shape.dim == 0 {
            return Err(bad("embedding shapes must be positive"));
        }
        embeddings.push(shape);
    }
    let hidden = match field(lines.next(), "hidden")? {
        "none" => None,
        h => Some(count(h, "hidden")?)
            .filter(|&h| h > 0)
            .map(Some)
            .ok_or_else(|| bad("hidden width must be positive"))?,
    };
    let activation = match field(lines.next(), "activation")? {
        "relu" => Activation::Relu,
        "identity" => Activation::Identity,
        other => return Err(bad(format!("unknown activation {other:?}"))),
    };
    let heads = count(field(lines.next(), "heads")?, "heads")?;
    if heads == 0 {
        return Err(bad("a model needs at least one head"));
    }
    let topology = Topology {
        numeric_dim,
        embeddings,
        hidden,
        activation,
        heads,
    };
    let scalars = topology_scalars(&topology).ok_or_else(|| bad("shape overflow"))?;
    // each scalar takes 17 bytes of text per set
    if scalars > MAX_SCALARS || scalars.saturating_mul(34) > text.len() {
        return Err(bad(format!(
            "declared {scalars} scalars do not fit the input"
        )));
    }

    let mut params = ModelParams::zeros(topology);
    for set in ["values", "accumulators"] {
        let target: &mut ParamSet = if set == "values" {
            &mut params.values
        } else {
            &mut params.accumulators
        };
        let names = target.tensor_names();
        for (name, tensor) in names.iter().zip(target.tensors_mut()) {
            let key = format!("{set}.{name}");
            let body = field(lines.next(), &key)?;
            let mut toks = body.split(' ');
            let n = count(toks.next().unwrap_or(""), &key)?;
            if n != tensor.len() {
                return Err(bad(format!("{key}: {n} values, expected {}", tensor.len())));
            }
            for slot in tensor.iter_mut() {
                let tok = toks
                    .next()
                    .ok_or_else(|| bad(format!("{key}: too few values")))?;
                if tok.len() != 16 {
                    return Err(bad(format!("{key}: malformed value {tok:?}")));
                }
                let bits = u64::from_str_radix(tok, 16)
                    .map_err(|_| bad(format!("{key}: malformed value {tok:?}")))?;
                *slot = f64::from_bits(bits);
            }
            if toks.next().is_some() {
                return Err(bad(format!("{key}: too many values")));
            }
        }
    }
    if lines.next() != Some("end") {
        return Err(bad("missing end marker"));
    }
    if !params.values.is_finite() {
        return Err(bad("non-finite parameter"));
    }
    let acc_ok = params
        .accumulators
        .tensors()
        .iter()
        .all(|t| t.iter().all(|&a| a.is_finite() && a >= INITIAL_ACCUMULATOR));
    if !acc_ok {
        return Err(bad(
            "accumulators must be finite and at least the initial value",
        ));
    }
    Ok(params)
}
