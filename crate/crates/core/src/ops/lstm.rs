//! LSTM with forget gates, no peepholes and no projection.
//!
//! ```text
//! i  = σ(W_i x + U_i h + b_i)
//! f  = σ(W_f x + U_f h + b_f)
//! g  = tanh(W_g x + U_g h + b_g)
//! o  = σ(W_o x + U_o h + b_o)
//! c' = f ⊙ c + i ⊙ g
//! h' = o ⊙ tanh(c')
//! ```

use crate::error::{Error, Result};
use crate::tensor::Series1D;

/// Gate order used everywhere, including the serialized blob.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Cell = 2,
    Output = 3,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Input, Gate::Forget, Gate::Cell, Gate::Output];
}

/// Weights of one gate: `w` is `[hidden][input]`, `u` is `[hidden][hidden]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    pub w: Vec<f32>,
    pub u: Vec<f32>,
    pub b: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub input_size: usize,
    pub hidden_size: usize,
    /// Indexed by [`Gate`].
    pub gates: [GateParams; 4],
}

impl LstmParams {
    pub fn new(input_size: usize, hidden_size: usize, gates: [GateParams; 4]) -> Result<Self> {
        if input_size == 0 || hidden_size == 0 {
            return Err(Error::InvalidParameter(format!(
                "lstm sizes must be positive ({input_size} -> {hidden_size})"
            )));
        }
        for g in &gates {
            for (what, len, expected) in [
                ("lstm W", g.w.len(), hidden_size * input_size),
                ("lstm U", g.u.len(), hidden_size * hidden_size),
                ("lstm b", g.b.len(), hidden_size),
            ] {
                if len != expected {
                    return Err(Error::DimensionMismatch {
                        what,
                        expected,
                        found: len,
                    });
                }
            }
        }
        Ok(LstmParams {
            input_size,
            hidden_size,
            gates,
        })
    }

    pub fn zeros(input_size: usize, hidden_size: usize) -> Result<Self> {
        let g = GateParams {
            w: vec![0.0; hidden_size * input_size],
            u: vec![0.0; hidden_size * hidden_size],
            b: vec![0.0; hidden_size],
        };
        Self::new(input_size, hidden_size, [g.clone(), g.clone(), g.clone(), g])
    }

    pub fn gate(&self, g: Gate) -> &GateParams {
        &self.gates[g as usize]
    }

    pub fn gate_mut(&mut self, g: Gate) -> &mut GateParams {
        &mut self.gates[g as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f32>,
    pub c: Vec<f32>,
}

impl LstmState {
    pub fn zeros(hidden_size: usize) -> Self {
        LstmState {
            h: vec![0.0; hidden_size],
            c: vec![0.0; hidden_size],
        }
    }
}

/// Post-activation gate values for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct GateActivations {
    pub input: Vec<f32>,
    pub forget: Vec<f32>,
    pub cell: Vec<f32>,
    pub output: Vec<f32>,
}

fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

fn check(x: &[f32], s: &LstmState, p: &LstmParams) -> Result<()> {
    if x.len() != p.input_size {
        return Err(Error::DimensionMismatch {
            what: "lstm input",
            expected: p.input_size,
            found: x.len(),
        });
    }
    for (what, len) in [("lstm h", s.h.len()), ("lstm c", s.c.len())] {
        if len != p.hidden_size {
            return Err(Error::DimensionMismatch {
                what,
                expected: p.hidden_size,
                found: len,
            });
        }
    }
    Ok(())
}

fn pre_activation(gp: &GateParams, x: &[f32], h: &[f32], input: usize, hidden: usize) -> Vec<f32> {
    (0..hidden)
        .map(|j| {
            let wx: f32 = gp.w[j * input..(j + 1) * input].iter().zip(x).map(|(w, v)| w * v).sum();
            let uh: f32 = gp.u[j * hidden..(j + 1) * hidden]
                .iter()
                .zip(h)
                .map(|(u, v)| u * v)
                .sum();
            wx + uh + gp.b[j]
        })
        .collect()
}

pub fn lstm_gates(x: &[f32], s: &LstmState, p: &LstmParams) -> Result<GateActivations> {
    check(x, s, p)?;
    let (n, m) = (p.input_size, p.hidden_size);
    let act = |g: Gate, f: fn(f32) -> f32| -> Vec<f32> {
        pre_activation(p.gate(g), x, &s.h, n, m).into_iter().map(f).collect()
    };
    Ok(GateActivations {
        input: act(Gate::Input, sigmoid),
        forget: act(Gate::Forget, sigmoid),
        cell: act(Gate::Cell, f32::tanh),
        output: act(Gate::Output, sigmoid),
    })
}

pub fn lstm_step(x: &[f32], s: &LstmState, p: &LstmParams) -> Result<LstmState> {
    let g = lstm_gates(x, s, p)?;
    let c: Vec<f32> = (0..p.hidden_size)
        .map(|j| g.forget[j] * s.c[j] + g.input[j] * g.cell[j])
        .collect();
    let h = c.iter().zip(&g.output).map(|(c, o)| o * c.tanh()).collect();
    Ok(LstmState { h, c })
}

/// Run the cell over every time step; returns the hidden state sequence
/// (`length x hidden_size`) and the final state.
pub fn lstm_run(xs: &Series1D, p: &LstmParams, s0: &LstmState) -> Result<(Series1D, LstmState)> {
    if xs.channels() != p.input_size {
        return Err(Error::ChannelMismatch {
            expected: p.input_size,
            found: xs.channels(),
        });
    }
    let mut out = Series1D::zeros(xs.length(), p.hidden_size)?;
    let mut s = s0.clone();
    for t in 0..xs.length() {
        s = lstm_step(xs.row(t), &s, p)?;
        out.row_mut(t).copy_from_slice(&s.h);
    }
    Ok((out, s))
}

pub fn lstm_sequence(xs: &Series1D, p: &LstmParams, s0: &LstmState) -> Result<Series1D> {
    lstm_run(xs, p, s0).map(|(seq, _)| seq)
}
