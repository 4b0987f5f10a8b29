//! Convolution and dense kernels over flat `f64` buffers.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub in_c: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_c: usize,
    pub kh: usize,
    pub kw: usize,
    /// `[out_c][in_c][kh][kw]`
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn out_h(&self) -> usize {
        self.in_h - self.kh + 1
    }

    pub fn out_w(&self) -> usize {
        self.in_w - self.kw + 1
    }

    pub fn out_len(&self) -> usize {
        self.out_c * self.out_h() * self.out_w()
    }

    pub fn fan_in(&self) -> usize {
        self.in_c * self.kh * self.kw
    }

    fn w_index(&self, oc: usize, ic: usize, ki: usize, kj: usize) -> usize {
        ((oc * self.in_c + ic) * self.kh + ki) * self.kw + kj
    }

    /// Valid cross-correlation plus bias.
    pub fn forward(&self, x: &[f64], out: &mut [f64]) {
        let (oh, ow) = (self.out_h(), self.out_w());
        let plane_in = self.in_h * self.in_w;
        for oc in 0..self.out_c {
            let o_plane = &mut out[oc * oh * ow..(oc + 1) * oh * ow];
            o_plane.fill(self.bias[oc]);
            for ic in 0..self.in_c {
                let x_plane = &x[ic * plane_in..(ic + 1) * plane_in];
                for ki in 0..self.kh {
                    for kj in 0..self.kw {
                        let w = self.weights[self.w_index(oc, ic, ki, kj)];
                        for i in 0..oh {
                            let src = &x_plane[(i + ki) * self.in_w + kj..][..ow];
                            let dst = &mut o_plane[i * ow..(i + 1) * ow];
                            for (d, s) in dst.iter_mut().zip(src) {
                                *d += w * s;
                            }
                        }
                    }
                }
            }
        }
    }

    /// Accumulate weight and bias gradients for output gradient `dz`;
    /// if `dx` is given, also accumulate the input gradient.
    pub fn backward(&self, x: &[f64], dz: &[f64], gw: &mut [f64], gb: &mut [f64], mut dx: Option<&mut [f64]>) {
        let (oh, ow) = (self.out_h(), self.out_w());
        let plane_in = self.in_h * self.in_w;
        for oc in 0..self.out_c {
            let d_plane = &dz[oc * oh * ow..(oc + 1) * oh * ow];
            gb[oc] += d_plane.iter().sum::<f64>();
            for ic in 0..self.in_c {
                let x_plane = &x[ic * plane_in..(ic + 1) * plane_in];
                for ki in 0..self.kh {
                    for kj in 0..self.kw {
                        let idx = self.w_index(oc, ic, ki, kj);
                        let mut acc = 0.0;
                        for i in 0..oh {
                            let src = &x_plane[(i + ki) * self.in_w + kj..][..ow];
                            let d = &d_plane[i * ow..(i + 1) * ow];
                            acc += src.iter().zip(d).map(|(a, b)| a * b).sum::<f64>();
                        }
                        gw[idx] += acc;
                        if let Some(dx) = dx.as_deref_mut() {
                            let w = self.weights[idx];
                            let dx_plane = &mut dx[ic * plane_in..(ic + 1) * plane_in];
                            for i in 0..oh {
                                let dst = &mut dx_plane[(i + ki) * self.in_w + kj..][..ow];
                                let d = &d_plane[i * ow..(i + 1) * ow];
                                for (t, g) in dst.iter_mut().zip(d) {
                                    *t += w * g;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    /// `[outputs][inputs]`
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn forward(&self, x: &[f64], out: &mut [f64]) {
        for (o, slot) in out.iter_mut().enumerate() {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            *slot = self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    pub fn backward(&self, x: &[f64], dz: &[f64], gw: &mut [f64], gb: &mut [f64], dx: &mut [f64]) {
        for (o, &d) in dz.iter().enumerate() {
            gb[o] += d;
            if d == 0.0 {
                continue;
            }
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let grow = &mut gw[o * self.inputs..(o + 1) * self.inputs];
            for ((g, xv), (t, w)) in grow.iter_mut().zip(x).zip(dx.iter_mut().zip(row)) {
                *g += d * xv;
                *t += d * w;
            }
        }
    }
}

pub fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Zero gradient entries whose activation was clipped by ReLU.
pub fn relu_mask(activation: &[f64], grad: &mut [f64]) {
    for (g, a) in grad.iter_mut().zip(activation) {
        if *a <= 0.0 {
            *g = 0.0;
        }
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = exps.iter().sum();
    exps.iter().map(|e| e / s).collect()
}

/// `−log softmax(logits)[target]`, computed stably.
pub fn cross_entropy(logits: &[f64], target: usize) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    lse - logits[target]
}
