//! Adaptive Gaussian-mixture background model, one mixture per pixel.
//!
//! Per frame and pixel: rank the active components by `w / sigma`, take the
//! first within `match_distance` sigmas as the match, decay all weights by
//! `1 - alpha` and add `alpha` to the match, then pull the matched mean and
//! variance towards the sample at rate `rho = min(1, alpha / w)`. With no
//! match a fresh component replaces the lightest one (or fills a free slot).
//! Weights are renormalized, and a matched pixel is background when its
//! component falls in the shortest ranked prefix whose weight reaches the
//! background ratio.

use crate::config::GmmParams;
use crate::error::Result;
use crate::frame::Frame;

const MAX_COMPONENTS: usize = 8;

/// Mixture state of a single pixel, borrowed from the model's flat arrays.
pub struct PixelMixture<'a> {
    pub weight: &'a mut [f64],
    pub mean: &'a mut [f64],
    pub var: &'a mut [f64],
    pub active: &'a mut u8,
}

fn ranked(weight: &[f64], var: &[f64], n: usize) -> ([usize; MAX_COMPONENTS], usize) {
    let mut order = [0usize; MAX_COMPONENTS];
    for (i, o) in order.iter_mut().enumerate().take(n) {
        *o = i;
    }
    // Insertion sort, stable, descending by w / sigma.
    for i in 1..n {
        let cur = order[i];
        let key = weight[cur] / var[cur].sqrt();
        let mut j = i;
        while j > 0 {
            let prev = order[j - 1];
            if weight[prev] / var[prev].sqrt() < key {
                order[j] = prev;
                j -= 1;
            } else {
                break;
            }
        }
        order[j] = cur;
    }
    (order, n)
}

impl PixelMixture<'_> {
    pub fn seed(&mut self, x: f64, p: &GmmParams) {
        self.weight.iter_mut().for_each(|w| *w = 0.0);
        self.weight[0] = 1.0;
        self.mean[0] = x;
        self.var[0] = p.initial_variance;
        *self.active = 1;
    }

    /// Updates the mixture with sample `x`; returns true for foreground.
    pub fn update(&mut self, x: f64, p: &GmmParams) -> bool {
        let n = *self.active as usize;
        let alpha = p.learning_rate;
        let (order, _) = ranked(self.weight, self.var, n);
        let matched = order[..n]
            .iter()
            .copied()
            .find(|&i| (x - self.mean[i]).abs() <= p.match_distance * self.var[i].sqrt());

        for w in self.weight[..n].iter_mut() {
            *w *= 1.0 - alpha;
        }
        let n = match matched {
            Some(m) => {
                self.weight[m] += alpha;
                let rho = (alpha / self.weight[m]).min(1.0);
                let d = x - self.mean[m];
                self.mean[m] += rho * d;
                self.var[m] = ((1.0 - rho) * self.var[m] + rho * d * d).max(p.variance_floor);
                n
            }
            None => {
                let (slot, n) = if n < p.components {
                    (n, n + 1)
                } else {
                    let mut lightest = 0;
                    for i in 1..n {
                        if self.weight[i] < self.weight[lightest] {
                            lightest = i;
                        }
                    }
                    (lightest, n)
                };
                self.weight[slot] = p.initial_weight;
                self.mean[slot] = x;
                self.var[slot] = p.initial_variance;
                *self.active = n as u8;
                n
            }
        };

        let total: f64 = self.weight[..n].iter().sum();
        for w in self.weight[..n].iter_mut() {
            *w /= total;
        }

        let Some(m) = matched else {
            return true;
        };
        let (order, _) = ranked(self.weight, self.var, n);
        let mut cumulative = 0.0;
        for &i in &order[..n] {
            if i == m {
                return false;
            }
            cumulative += self.weight[i];
            if cumulative >= p.background_ratio {
                break;
            }
        }
        true
    }
}

/// Frame-sized grid of per-pixel mixtures.
#[derive(Debug, Clone)]
pub struct GmmModel {
    params: GmmParams,
    width: usize,
    height: usize,
    k: usize,
    weight: Vec<f64>,
    mean: Vec<f64>,
    var: Vec<f64>,
    active: Vec<u8>,
    initialized: bool,
}

impl GmmModel {
    pub fn new(params: GmmParams, width: usize, height: usize) -> Self {
        let k = params.components.clamp(1, MAX_COMPONENTS);
        let n = width * height;
        Self {
            params: GmmParams {
                components: k,
                ..params
            },
            width,
            height,
            k,
            weight: vec![0.0; n * k],
            mean: vec![0.0; n * k],
            var: vec![params.initial_variance; n * k],
            active: vec![0; n],
            initialized: false,
        }
    }

    pub fn params(&self) -> &GmmParams {
        &self.params
    }

    pub fn pixel(&mut self, i: usize) -> PixelMixture<'_> {
        let r = i * self.k..(i + 1) * self.k;
        PixelMixture {
            weight: &mut self.weight[r.clone()],
            mean: &mut self.mean[r.clone()],
            var: &mut self.var[r],
            active: &mut self.active[i],
        }
    }

    /// Weights of pixel `i`'s active components.
    pub fn weights(&self, i: usize) -> &[f64] {
        &self.weight[i * self.k..i * self.k + self.active[i] as usize]
    }

    pub fn variances(&self, i: usize) -> &[f64] {
        &self.var[i * self.k..i * self.k + self.active[i] as usize]
    }

    /// Feeds one frame. The first frame seeds the model and is all background.
    pub fn update_and_classify(&mut self, frame: &Frame) -> Result<Vec<bool>> {
        frame.check_size(self.width, self.height, "mixture model")?;
        let params = self.params;
        let mut fg = vec![false; self.width * self.height];
        if !self.initialized {
            for (i, &v) in frame.pixels().iter().enumerate() {
                self.pixel(i).seed(f64::from(v), &params);
            }
            self.initialized = true;
            return Ok(fg);
        }
        for (i, &v) in frame.pixels().iter().enumerate() {
            fg[i] = self.pixel(i).update(f64::from(v), &params);
        }
        Ok(fg)
    }
}
