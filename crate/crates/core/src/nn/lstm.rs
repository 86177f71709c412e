//! Long short-term memory cell.
//!
//! Gate pre-activations are packed as `[i | f | g | o]` blocks of width H:
//!
//! ```text
//! z  = x_t·W + h·U + b
//! i = σ(z_i)   f = σ(z_f)   g = tanh(z_g)   o = σ(z_o)
//! c' = f ⊙ c + i ⊙ g
//! h' = o ⊙ tanh(c')
//! ```
//!
//! The sequence layer returns the final hidden state.

use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LstmParams {
    /// `[F, 4H]`
    pub w_input: Tensor,
    /// `[H, 4H]`
    pub w_hidden: Tensor,
    /// `[4H]`
    pub bias: Tensor,
}

impl LstmParams {
    pub fn zeros(features: usize, hidden: usize) -> Self {
        Self {
            w_input: Tensor::zeros(&[features, 4 * hidden]),
            w_hidden: Tensor::zeros(&[hidden, 4 * hidden]),
            bias: Tensor::zeros(&[4 * hidden]),
        }
    }

    pub fn hidden(&self) -> usize {
        self.bias.len() / 4
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

struct Step {
    gates: Vec<f64>,
    c: Vec<f64>,
    h: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn step(x: &[f64], h: &[f64], c: &[f64], w: &[f64], u: &[f64], b: &[f64], n: usize, f: usize, hd: usize) -> Step {
    let g4 = 4 * hd;
    let mut gates = vec![0.0; n * g4];
    for s in 0..n {
        let z = &mut gates[s * g4..(s + 1) * g4];
        z.copy_from_slice(b);
        for (k, &xv) in x[s * f..(s + 1) * f].iter().enumerate() {
            for (a, wv) in z.iter_mut().zip(&w[k * g4..(k + 1) * g4]) {
                *a += xv * wv;
            }
        }
        for (k, &hv) in h[s * hd..(s + 1) * hd].iter().enumerate() {
            for (a, uv) in z.iter_mut().zip(&u[k * g4..(k + 1) * g4]) {
                *a += hv * uv;
            }
        }
        for (j, a) in z.iter_mut().enumerate() {
            *a = if (2 * hd..3 * hd).contains(&j) { a.tanh() } else { sigmoid(*a) };
        }
    }
    let mut c_new = vec![0.0; n * hd];
    let mut h_new = vec![0.0; n * hd];
    for s in 0..n {
        let z = &gates[s * g4..(s + 1) * g4];
        for j in 0..hd {
            let (ig, fg, gg, og) = (z[j], z[hd + j], z[2 * hd + j], z[3 * hd + j]);
            let cn = fg * c[s * hd + j] + ig * gg;
            c_new[s * hd + j] = cn;
            h_new[s * hd + j] = og * cn.tanh();
        }
    }
    Step { gates, c: c_new, h: h_new }
}

/// One cell update for a batch: `x_t` is `[N, F]`, `h` and `c` are `[N, H]`.
pub fn lstm_step(x_t: &Tensor, h: &Tensor, c: &Tensor, params: &LstmParams) -> Result<(Tensor, Tensor)> {
    let hd = params.hidden();
    let n = x_t.batch();
    let f = x_t.row_len();
    if x_t.shape().len() != 2
        || h.shape() != [n, hd]
        || c.shape() != [n, hd]
        || params.w_input.shape() != [f, 4 * hd]
        || params.w_hidden.shape() != [hd, 4 * hd]
    {
        return Err(Error::shape(format!(
            "lstm_step: x {:?}, h {:?}, c {:?} inconsistent with hidden size {hd}",
            x_t.shape(),
            h.shape(),
            c.shape()
        )));
    }
    let st = step(
        x_t.data(),
        h.data(),
        c.data(),
        params.w_input.data(),
        params.w_hidden.data(),
        params.bias.data(),
        n,
        f,
        hd,
    );
    Ok((Tensor::new(vec![n, hd], st.h)?, Tensor::new(vec![n, hd], st.c)?))
}

#[derive(Debug, Clone)]
pub struct LstmCache {
    x: Tensor,
    hs: Vec<Vec<f64>>,
    cs: Vec<Vec<f64>>,
    gates: Vec<Vec<f64>>,
}

fn time_slice(x: &Tensor, t: usize) -> Vec<f64> {
    let (n, steps, f) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let mut out = Vec::with_capacity(n * f);
    for s in 0..n {
        let base = (s * steps + t) * f;
        out.extend_from_slice(&x.data()[base..base + f]);
    }
    out
}

pub(crate) fn sequence_forward(x: &Tensor, params: &[Tensor], hd: usize) -> Result<(Tensor, LstmCache)> {
    let (n, steps, f) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let mut hs = vec![vec![0.0; n * hd]];
    let mut cs = vec![vec![0.0; n * hd]];
    let mut gates = Vec::with_capacity(steps);
    for t in 0..steps {
        let xt = time_slice(x, t);
        let st = step(
            &xt,
            &hs[t],
            &cs[t],
            params[0].data(),
            params[1].data(),
            params[2].data(),
            n,
            f,
            hd,
        );
        gates.push(st.gates);
        hs.push(st.h);
        cs.push(st.c);
    }
    let out = Tensor::new(vec![n, hd], hs[steps].clone())?;
    Ok((
        out,
        LstmCache {
            x: x.clone(),
            hs,
            cs,
            gates,
        },
    ))
}

/// Backpropagation through time. Returns `(dx, [dW, dU, db])`.
pub(crate) fn sequence_backward(
    cache: &LstmCache,
    params: &[Tensor],
    grad_out: &Tensor,
    hd: usize,
) -> Result<(Tensor, Vec<Tensor>)> {
    let x = &cache.x;
    let (n, steps, f) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let g4 = 4 * hd;
    let (w, u) = (params[0].data(), params[1].data());
    let mut dw = vec![0.0; f * g4];
    let mut du = vec![0.0; hd * g4];
    let mut db = vec![0.0; g4];
    let mut dx = vec![0.0; x.len()];
    let mut dh = grad_out.data().to_vec();
    let mut dc = vec![0.0; n * hd];
    let mut dz = vec![0.0; n * g4];
    for t in (0..steps).rev() {
        let gates = &cache.gates[t];
        let (c_prev, c_cur, h_prev) = (&cache.cs[t], &cache.cs[t + 1], &cache.hs[t]);
        for s in 0..n {
            let z = &gates[s * g4..(s + 1) * g4];
            for j in 0..hd {
                let k = s * hd + j;
                let (ig, fg, gg, og) = (z[j], z[hd + j], z[2 * hd + j], z[3 * hd + j]);
                let tc = c_cur[k].tanh();
                let d_o = dh[k] * tc;
                let dcell = dc[k] + dh[k] * og * (1.0 - tc * tc);
                let dzr = &mut dz[s * g4..(s + 1) * g4];
                dzr[j] = dcell * gg * ig * (1.0 - ig);
                dzr[hd + j] = dcell * c_prev[k] * fg * (1.0 - fg);
                dzr[2 * hd + j] = dcell * ig * (1.0 - gg * gg);
                dzr[3 * hd + j] = d_o * og * (1.0 - og);
                dc[k] = dcell * fg;
            }
        }
        let xt = time_slice(x, t);
        for s in 0..n {
            let dzr = &dz[s * g4..(s + 1) * g4];
            for (a, g) in db.iter_mut().zip(dzr) {
                *a += g;
            }
            for k in 0..f {
                let xv = xt[s * f + k];
                for (a, g) in dw[k * g4..(k + 1) * g4].iter_mut().zip(dzr) {
                    *a += xv * g;
                }
                let base = (s * steps + t) * f + k;
                dx[base] = w[k * g4..(k + 1) * g4].iter().zip(dzr).map(|(a, b)| a * b).sum();
            }
            for k in 0..hd {
                let hv = h_prev[s * hd + k];
                for (a, g) in du[k * g4..(k + 1) * g4].iter_mut().zip(dzr) {
                    *a += hv * g;
                }
                dh[s * hd + k] = u[k * g4..(k + 1) * g4].iter().zip(dzr).map(|(a, b)| a * b).sum();
            }
        }
    }
    Ok((
        Tensor::new(x.shape().to_vec(), dx)?,
        vec![
            Tensor::new(vec![f, g4], dw)?,
            Tensor::new(vec![hd, g4], du)?,
            Tensor::new(vec![g4], db)?,
        ],
    ))
}
