//! Independent reference implementations used by the integration tests.
//!
//! Everything here is written for clarity over speed and shares no code
//! with the library beyond the public data types.

#![allow(dead_code)]

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use slackwatch_core::{Frame, RoiPolygon, ScoreRecord, SlackEvent};

pub fn random_frame<R: Rng>(rng: &mut R, w: usize, h: usize) -> Frame {
    let px: Vec<u8> = (0..w * h).map(|_| rng.random()).collect();
    Frame::new(0, 0, w, h, px).unwrap()
}

fn replicate(i: isize, len: usize) -> usize {
    i.max(0).min(len as isize - 1) as usize
}

/// Separable Gaussian blur carried out entirely in f64, rounded once.
pub fn float_gaussian(frame: &Frame, radius: usize, sigma: f64) -> Vec<u8> {
    let (w, h) = (frame.width(), frame.height());
    let r = radius as isize;
    let raw: Vec<f64> = (-r..=r)
        .map(|t| (-(t * t) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    let k: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = (-r..=r)
                .map(|t| {
                    k[(t + r) as usize] * f64::from(frame.get(replicate(x as isize + t, w), y))
                })
                .sum();
        }
    }
    let mut out = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let v: f64 = (-r..=r)
                .map(|t| k[(t + r) as usize] * tmp[replicate(y as isize + t, h) * w + x])
                .sum();
            out[y * w + x] = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}

/// Brute-force bilateral filter straight from its definition.
pub fn float_bilateral(frame: &Frame, radius: usize, sigma_s: f64, sigma_r: f64) -> Vec<u8> {
    let (w, h) = (frame.width(), frame.height());
    let r = radius as isize;
    let mut out = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let c = f64::from(frame.get(x, y));
            let (mut num, mut den) = (0.0, 0.0);
            for dy in -r..=r {
                for dx in -r..=r {
                    let q = f64::from(
                        frame.get(replicate(x as isize + dx, w), replicate(y as isize + dy, h)),
                    );
                    let ws = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma_s * sigma_s)).exp();
                    let wr = (-(c - q) * (c - q) / (2.0 * sigma_r * sigma_r)).exp();
                    num += ws * wr * q;
                    den += ws * wr;
                }
            }
            out[y * w + x] = (num / den).round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}

pub fn max_abs_diff(a: &[u8], b: &[u8]) -> u8 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.abs_diff(*y))
        .max()
        .unwrap_or(0)
}

/// Exact least-squares coefficients via normal equations in rational
/// arithmetic, monomial basis.
pub fn rational_polyfit(points: &[(f64, f64)], degree: usize) -> Vec<f64> {
    let n = degree + 1;
    let xs: Vec<BigRational> = points
        .iter()
        .map(|p| BigRational::from_float(p.0).unwrap())
        .collect();
    let ys: Vec<BigRational> = points
        .iter()
        .map(|p| BigRational::from_float(p.1).unwrap())
        .collect();
    let powers: Vec<Vec<BigRational>> = xs
        .iter()
        .map(|x| {
            let mut v = vec![BigRational::one()];
            for k in 1..2 * n {
                let next = &v[k - 1] * x;
                v.push(next);
            }
            v
        })
        .collect();
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    powers
                        .iter()
                        .fold(BigRational::zero(), |acc, p| acc + &p[i + j])
                })
                .collect()
        })
        .collect();
    let mut b: Vec<BigRational> = (0..n)
        .map(|i| {
            powers
                .iter()
                .zip(&ys)
                .fold(BigRational::zero(), |acc, (p, y)| acc + &p[i] * y)
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero()).expect("full rank");
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..n {
            if row == col || a[row][col].is_zero() {
                continue;
            }
            let f = &a[row][col] / &a[col][col];
            for k in col..n {
                let d = &f * &a[col][k];
                a[row][k] -= d;
            }
            let d = &f * &b[col];
            b[row] -= d;
        }
    }
    (0..n)
        .map(|i| (&b[i] / &a[i][i]).to_f64().unwrap())
        .collect()
}

/// Luminance with exact integer arithmetic, rounded half up.
pub fn exact_luma(r: u8, g: u8, b: u8) -> u8 {
    let num = BigInt::from(299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b));
    let q = BigRational::new(num, BigInt::from(1000));
    let rounded = (q + BigRational::new(BigInt::from(1), BigInt::from(2))).floor();
    rounded.to_integer().abs().to_u8().unwrap()
}

/// Crossing-number test written independently of the library.
pub fn pip_oracle(px: f64, py: f64, vertices: &[[f64; 2]]) -> bool {
    let n = vertices.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let [xi, yi] = vertices[i];
        let [xj, yj] = vertices[j];
        if (yi > py) != (yj > py) {
            let x_cross = (xj - xi) * (py - yi) / (yj - yi) + xi;
            if px < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Winding number about a point; nonzero means inside for simple polygons.
pub fn winding_number(px: f64, py: f64, vertices: &[[f64; 2]]) -> i32 {
    let n = vertices.len();
    let mut wn = 0;
    for i in 0..n {
        let [x0, y0] = vertices[i];
        let [x1, y1] = vertices[(i + 1) % n];
        let cross = (x1 - x0) * (py - y0) - (px - x0) * (y1 - y0);
        if y0 <= py {
            if y1 > py && cross > 0.0 {
                wn += 1;
            }
        } else if y1 <= py && cross < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Random polygon with 3..=max_vertices vertices inside `[0,w]x[0,h]`,
/// possibly self-intersecting.
pub fn random_polygon<R: Rng>(rng: &mut R, w: f64, h: f64, max_vertices: usize) -> RoiPolygon {
    loop {
        let n = rng.random_range(3..=max_vertices);
        let verts: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.random_range(0.0..=w), rng.random_range(0.0..=h)])
            .collect();
        if let Ok(p) = RoiPolygon::new("random", verts) {
            return p;
        }
    }
}

/// Hysteresis event automaton with explicit idle, open and closing states.
pub fn reference_events(
    scores: &[(u64, f64)],
    on: f64,
    off: f64,
    min_frames: usize,
) -> Vec<(u64, u64, u64, f64)> {
    enum State {
        Idle,
        Open {
            start: usize,
            peak: usize,
        },
        Closing {
            start: usize,
            end: usize,
            peak: usize,
        },
    }
    let mut out = Vec::new();
    let mut state = State::Idle;
    let emit = |out: &mut Vec<(u64, u64, u64, f64)>, start: usize, end: usize, peak: usize| {
        if end - start + 1 >= min_frames {
            out.push((
                scores[start].0,
                scores[end].0,
                scores[peak].0,
                scores[peak].1,
            ));
        }
    };
    for i in 0..scores.len() {
        let s = scores[i].1;
        state = match state {
            State::Idle if s >= on => State::Open { start: i, peak: i },
            State::Idle => State::Idle,
            State::Open { start, peak } if s < off => State::Closing {
                start,
                end: i - 1,
                peak,
            },
            State::Open { start, peak } => State::Open {
                start,
                peak: if s > scores[peak].1 { i } else { peak },
            },
            State::Closing { .. } => unreachable!(),
        };
        if let State::Closing { start, end, peak } = state {
            emit(&mut out, start, end, peak);
            state = State::Idle;
        }
    }
    if let State::Open { start, peak } = state {
        emit(&mut out, start, scores.len() - 1, peak);
    }
    out
}

pub fn event_tuple(e: &SlackEvent) -> (u64, u64, u64, f64) {
    (e.start_frame, e.end_frame, e.peak_frame, e.peak_score)
}

pub fn records_from_scores(scores: &[f64]) -> Vec<ScoreRecord> {
    scores
        .iter()
        .enumerate()
        .map(|(i, &s)| ScoreRecord {
            frame: i as u64 + 1,
            timestamp_ms: i as u64 * 33,
            count: s,
            score: s,
        })
        .collect()
}

/// Scalar mixture model for one pixel, kept in slot order like the library.
#[derive(Debug, Clone)]
pub struct RefMixture {
    comps: Vec<(f64, f64, f64)>,
}

pub struct RefParams {
    pub k: usize,
    pub alpha: f64,
    pub t: f64,
    pub md: f64,
    pub floor: f64,
    pub init_var: f64,
    pub init_w: f64,
}

impl RefMixture {
    pub fn seed(x: f64, p: &RefParams) -> Self {
        Self {
            comps: vec![(1.0, x, p.init_var)],
        }
    }

    fn rank(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.comps.len()).collect();
        let key = |i: usize| self.comps[i].0 / self.comps[i].2.sqrt();
        idx.sort_by(|&a, &b| key(b).partial_cmp(&key(a)).unwrap());
        idx
    }

    /// Returns true for foreground.
    pub fn step(&mut self, x: f64, p: &RefParams) -> bool {
        let matched = self
            .rank()
            .into_iter()
            .find(|&i| (x - self.comps[i].1).abs() <= p.md * self.comps[i].2.sqrt());
        for c in &mut self.comps {
            c.0 *= 1.0 - p.alpha;
        }
        match matched {
            Some(m) => {
                let c = &mut self.comps[m];
                c.0 += p.alpha;
                let rho = (p.alpha / c.0).min(1.0);
                let d = x - c.1;
                c.1 += rho * d;
                c.2 = ((1.0 - rho) * c.2 + rho * d * d).max(p.floor);
            }
            None if self.comps.len() < p.k => self.comps.push((p.init_w, x, p.init_var)),
            None => {
                let mut lightest = 0;
                for i in 1..self.comps.len() {
                    if self.comps[i].0 < self.comps[lightest].0 {
                        lightest = i;
                    }
                }
                self.comps[lightest] = (p.init_w, x, p.init_var);
            }
        }
        let total: f64 = self.comps.iter().map(|c| c.0).sum();
        for c in &mut self.comps {
            c.0 /= total;
        }
        let Some(m) = matched else { return true };
        let mut acc = 0.0;
        for i in self.rank() {
            if i == m {
                return false;
            }
            acc += self.comps[i].0;
            if acc >= p.t {
                break;
            }
        }
        true
    }
}

/// Pixels reachable from strong seeds through pixels at or above `low`.
pub fn connected_edges(mag: &[f64], w: usize, h: usize, low: f64, high: f64) -> Vec<bool> {
    let mut keep: Vec<bool> = mag.iter().map(|&m| m > 0.0 && m >= high).collect();
    loop {
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if keep[i] || !(mag[i] > 0.0 && mag[i] >= low) {
                    continue;
                }
                let near = (-1i64..=1).any(|dy| {
                    (-1i64..=1).any(|dx| {
                        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                        nx >= 0
                            && ny >= 0
                            && nx < w as i64
                            && ny < h as i64
                            && keep[ny as usize * w + nx as usize]
                    })
                });
                if near {
                    keep[i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            return keep;
        }
    }
}
