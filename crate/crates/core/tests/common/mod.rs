//! Straight-line reference implementations shared by the integration tests.
#![allow(dead_code)]

use ledgerlink::consensus::{GossipGraph, Method};
use ledgerlink::kernel::RngStream;

pub const HEADER: u64 = 508;
pub const STATE: u64 = 48;
pub const STATE_PROOF: u64 = 375;
pub const TX: u64 = 110 + 4;
pub const TX_PROOF: u64 = 108;

/// Per period: device values after the period, UL bytes and DL bytes per device.
pub struct Reference {
    pub values: Vec<Vec<f32>>,
    pub ul: Vec<Vec<u64>>,
    pub dl: Vec<Vec<u64>>,
}

fn avg(own: f32, others: &[f32]) -> f32 {
    let mut s = own as f64;
    for &o in others {
        s += o as f64;
    }
    (s / (others.len() as f64 + 1.0)) as f32
}

/// One block per period (T_B = T), devices sending at the start of each period.
pub fn reference_run(
    method: Method,
    graph: &GossipGraph,
    initial: &[f32],
    p: f64,
    periods: u32,
    seed: u64,
) -> Reference {
    let n = initial.len();
    let k = graph.out_degree();
    let mut rng = RngStream::new(seed, format!("case2.{}.loss", method.key()));
    let mut x = initial.to_vec();
    let mut sum = 0.0f64;
    let mut count = 0u64;
    let mut out = Reference {
        values: vec![],
        ul: vec![],
        dl: vec![],
    };
    for _ in 0..periods {
        let mut ul = vec![0u64; n];
        let mut dl = vec![0u64; n];
        match method {
            Method::A => {
                let mut got: Vec<Vec<f32>> = vec![vec![]; n];
                for i in 0..n {
                    let to = graph.out_neighbors(i as u32)[rng.index(k)] as usize;
                    let lost_up = rng.unit() < p;
                    let lost_down = rng.unit() < p;
                    ul[i] += 76;
                    if !lost_up && !lost_down {
                        got[to].push(x[i]);
                        dl[to] += 4;
                    }
                }
                let old = x.clone();
                for j in 0..n {
                    if !got[j].is_empty() {
                        x[j] = avg(old[j], &got[j]);
                    }
                }
            }
            Method::B => {
                let mut block = vec![];
                for i in 0..n {
                    ul[i] += TX;
                    if rng.unit() >= p {
                        block.push(x[i]);
                    }
                }
                for &v in &block {
                    sum += v as f64;
                    count += 1;
                }
                for i in 0..n {
                    if rng.unit() < p {
                        continue;
                    }
                    if block.is_empty() {
                        dl[i] += HEADER;
                    } else {
                        dl[i] += HEADER + STATE + STATE_PROOF;
                        x[i] = (sum / count as f64) as f32;
                    }
                }
            }
            Method::C => {
                let mut sent: Vec<Option<f32>> = vec![None; n];
                for i in 0..n {
                    ul[i] += TX;
                    if rng.unit() >= p {
                        sent[i] = Some(x[i]);
                    }
                }
                for i in 0..n {
                    if rng.unit() < p {
                        continue;
                    }
                    let mut seen = vec![];
                    dl[i] += HEADER;
                    for &j in graph.out_neighbors(i as u32) {
                        if let Some(v) = sent[j as usize] {
                            seen.push(v);
                            dl[i] += TX + TX_PROOF;
                        }
                    }
                    if !seen.is_empty() {
                        x[i] = avg(x[i], &seen);
                    }
                }
            }
        }
        out.values.push(x.clone());
        out.ul.push(ul);
        out.dl.push(dl);
    }
    out
}

pub fn mean_u64(v: &[u64]) -> f64 {
    v.iter().sum::<u64>() as f64 / v.len() as f64
}
