//! Removing the first message of a protocol for `f^[k]`.
//!
//! Public coins pick a coordinate `i` and a shared stream. Alice, holding
//! `x` for coordinate `i`, targets the law of `(M, W^{-i})` given `X_i = x`;
//! Bob, holding `y`, targets the law given `Y_i = y`. Both run correlated
//! sampling on the shared stream, then privately complete the remaining
//! coordinates consistently with `D` and their sample, and continue the
//! original protocol from its second message. Errors are computed exactly:
//! the expectation over the public coins in closed form, and the error of
//! each candidate coin string by enumeration of `(x, y)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::Arc;

use super::protocol::{base_error, decode, FPowerK, MessageFn, ToyProtocol, STATE_CAP};
use super::{kahan_sum, InfoError};
use crate::Party;

#[derive(Debug, Clone, PartialEq)]
pub struct EliminationOptions {
    /// Number of candidate public-coin strings to evaluate.
    pub candidates: usize,
    pub seed: u64,
    /// Target probability that a party accepts nothing in the truncated stream.
    pub residual: f64,
}

impl Default for EliminationOptions {
    fn default() -> Self {
        EliminationOptions { candidates: 256, seed: 0, residual: 1e-6 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Elimination {
    #[serde(skip)]
    pub protocol: ToyProtocol,
    pub bits: Vec<u32>,
    pub m1: u32,
    pub epsilon: f64,
    pub delta: f64,
    /// `delta^2 k / (8 ln 2)`.
    pub m1_budget: f64,
    pub precondition: bool,
    /// Error averaged over the public coins.
    pub expected_error: f64,
    pub expected_error_per_i: Vec<f64>,
    /// Error of the returned protocol, evaluated on `f` under `D`.
    pub fixed_error: f64,
    pub chosen_coordinate: usize,
    pub stream_length: usize,
    pub candidates: usize,
}

/// Per-coordinate tables.
struct Coordinate {
    i: usize,
    msgs: usize,
    /// `P_A^x(u)` with `u = m + msgs * code(w^{-i})`.
    pa: Vec<Vec<f64>>,
    /// Alice's completions `(full x code, weight)`; weights sum to `pa[x][u]`.
    comp_a: Vec<Vec<Vec<(u32, f64)>>>,
    pb: Vec<Vec<f64>>,
    /// Bob's completions per `code(w^{-i})`: `(y code with slot i zero, prob)`.
    comp_b: Vec<Vec<(u32, f64)>>,
    /// Proposal law of `(M, W^{-i})`.
    q: Vec<f64>,
    q_cdf: Vec<f64>,
    /// Error indicator indexed by `((m_a * msgs + m_b) * |X|^k + x) * |Y|^k + y`.
    err: Vec<u8>,
}

fn product_options<T: Copy>(lists: &[Vec<(T, f64)>], combine: impl Fn(&[T]) -> u32) -> Vec<(u32, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for l in lists {
        let mut next = Vec::with_capacity(out.len() * l.len());
        for (prefix, p) in &out {
            for &(v, w) in l {
                let mut q: Vec<T> = prefix.clone();
                q.push(v);
                next.push((q, p * w));
            }
        }
        out = next;
    }
    out.into_iter().map(|(v, p)| (combine(&v), p)).collect()
}

impl Coordinate {
    fn build(proto: &ToyProtocol, pb_: &FPowerK, first: &[u64], i: usize) -> Result<Self, InfoError> {
        let (nx, ny, k) = (pb_.nx(), pb_.ny(), pb_.k);
        let nw = nx + ny;
        let msgs = 1usize << proto.bits()[0];
        let rest = k - 1;
        let u_size = msgs * nw.pow(rest as u32);
        let err_size = msgs * msgs * pb_.alice_inputs() * pb_.y_codes();
        if u_size > STATE_CAP || err_size > STATE_CAP {
            return Err(InfoError::CapExceeded(format!("{u_size} samples, {err_size} error entries")));
        }
        let dx = pb_.d.x_marginal();
        let dy = pb_.d.y_marginal();
        let others: Vec<usize> = (0..k).filter(|&j| j != i).collect();
        let px: Vec<u32> = (0..k).map(|j| nx.pow(j as u32) as u32).collect();
        let py: Vec<u32> = (0..k).map(|j| ny.pow(j as u32) as u32).collect();

        // W_j options given x_j: reveal x_j, or reveal y_j ~ D(. | x_j).
        let w_given_x: Vec<Vec<(usize, f64)>> = (0..nx)
            .map(|a| {
                let mut o = vec![(a, 0.5)];
                if dx[a] > 0.0 {
                    o.extend((0..ny).filter(|&y| pb_.d.d[a][y] > 0.0).map(|y| (nx + y, 0.5 * pb_.d.d[a][y] / dx[a])));
                }
                o
            })
            .collect();
        let w_code = |ws: &[usize]| ws.iter().rev().fold(0usize, |acc, &w| acc * nw + w) as u32;

        let mut pa = vec![vec![0.0; u_size]; nx];
        let mut comp_a = vec![vec![Vec::new(); u_size]; nx];
        for x in 0..nx {
            for rest_code in 0..nx.pow(rest as u32) {
                let xr = decode(rest_code, nx, rest);
                let p_rest: f64 = xr.iter().map(|&a| dx[a]).product();
                if p_rest == 0.0 {
                    continue;
                }
                let full: u32 = others.iter().zip(&xr).map(|(&j, &a)| a as u32 * px[j]).sum::<u32>() + x as u32 * px[i];
                let m = first[full as usize] as usize;
                let lists: Vec<Vec<(usize, f64)>> = xr.iter().map(|&a| w_given_x[a].clone()).collect();
                for (wc, pw) in product_options(&lists, w_code) {
                    let u = m + msgs * wc as usize;
                    pa[x][u] += p_rest * pw;
                    comp_a[x][u].push((full, p_rest * pw));
                }
            }
        }

        let mut comp_b = Vec::with_capacity(nw.pow(rest as u32));
        for wc in 0..nw.pow(rest as u32) {
            let ws = decode(wc, nw, rest);
            let lists: Vec<Vec<(usize, f64)>> = ws
                .iter()
                .map(|&w| {
                    if w < nx {
                        if dx[w] == 0.0 {
                            Vec::new()
                        } else {
                            (0..ny).filter(|&y| pb_.d.d[w][y] > 0.0).map(|y| (y, pb_.d.d[w][y] / dx[w])).collect()
                        }
                    } else {
                        vec![(w - nx, 1.0)]
                    }
                })
                .collect();
            comp_b.push(product_options(&lists, |ys| others.iter().zip(ys).map(|(&j, &y)| y as u32 * py[j]).sum()));
        }

        let pb: Vec<Vec<f64>> = (0..ny)
            .map(|y| {
                (0..u_size)
                    .map(|u| {
                        if dy[y] == 0.0 {
                            return 0.0;
                        }
                        (0..nx).map(|x| pb_.d.d[x][y] / dy[y] * pa[x][u]).sum()
                    })
                    .collect()
            })
            .collect();
        let q: Vec<f64> = (0..u_size).map(|u| (0..nx).map(|x| dx[x] * pa[x][u]).sum()).collect();
        let mut acc = 0.0;
        let q_cdf = q
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();

        let xs = pb_.alice_inputs();
        let ys = pb_.y_codes();
        let mut err = vec![0u8; err_size];
        let rounds = proto.rounds();
        for xa in 0..xs {
            let xd = decode(xa, nx, k);
            for yb in 0..ys {
                let target = pb_.f.f[xd[i]][decode(yb, ny, k)[i]];
                let bob = pb_.bob_code(yb, i);
                for ma in 0..msgs {
                    for mb in 0..msgs {
                        let mut ta = vec![ma as u64];
                        let mut tb = vec![mb as u64];
                        let mut last = 0;
                        for r in 1..rounds {
                            let m = if proto.speaker(r) == Party::Alice {
                                proto.send(r, xa, &ta)?
                            } else {
                                proto.send(r, bob, &tb)?
                            };
                            ta.push(m);
                            tb.push(m);
                            last = m;
                        }
                        err[((ma * msgs + mb) * xs + xa) * ys + yb] = u8::from((last & 1) as u8 != target);
                    }
                }
            }
        }
        Ok(Coordinate { i, msgs, pa, comp_a, pb, comp_b, q, q_cdf, err })
    }

    fn err_at(&self, ma: usize, mb: usize, xa: usize, yb: usize, xs: usize, ys: usize) -> f64 {
        self.err[((ma * self.msgs + mb) * xs + xa) * ys + yb] as f64
    }

    /// Exact error averaged over the shared stream and private completions.
    fn expected_error(&self, problem: &FPowerK) -> f64 {
        let (nx, ny) = (problem.nx(), problem.ny());
        let xs = problem.alice_inputs();
        let ys = problem.y_codes();
        let yshift = ny.pow(self.i as u32);
        let msgs = self.msgs;
        let mut terms = Vec::new();
        for x in 0..nx {
            for y in 0..ny {
                let dxy = problem.d.d[x][y];
                if dxy == 0.0 {
                    continue;
                }
                let p = &self.pa[x];
                let q = &self.pb[y];
                let c: Vec<f64> = p.iter().zip(q).map(|(a, b)| a.min(*b)).collect();
                let d = kahan_sum(p.iter().zip(&c).map(|(a, b)| a - b));
                let norm = 1.0 + d;
                let mut total = 0.0;
                // Both accept the same pair.
                for u in 0..p.len() {
                    if c[u] == 0.0 {
                        continue;
                    }
                    let m = u % msgs;
                    let wc = u / msgs;
                    let mut inner = 0.0;
                    for &(xa, wa) in &self.comp_a[x][u] {
                        for &(yp, wb) in &self.comp_b[wc] {
                            inner += wa * wb * self.err_at(m, m, xa as usize, yp as usize + y * yshift, xs, ys);
                        }
                    }
                    total += c[u] / norm * inner / p[u];
                }
                // One side accepts first; the other then samples independently.
                let mut alpha = vec![0.0; msgs * xs];
                let mut alpha2 = vec![0.0; msgs * xs];
                let mut beta = vec![0.0; msgs * ys];
                let mut beta2 = vec![0.0; msgs * ys];
                for u in 0..p.len() {
                    let m = u % msgs;
                    if p[u] > 0.0 {
                        for &(xa, wa) in &self.comp_a[x][u] {
                            alpha[m * xs + xa as usize] += (p[u] - c[u]) / norm * wa / p[u];
                            alpha2[m * xs + xa as usize] += wa;
                        }
                    }
                    if q[u] > 0.0 {
                        for &(yp, wb) in &self.comp_b[u / msgs] {
                            let yb = yp as usize + y * yshift;
                            beta[m * ys + yb] += q[u] * wb;
                            beta2[m * ys + yb] += (q[u] - c[u]) / norm * wb;
                        }
                    }
                }
                for ma in 0..msgs {
                    for xa in 0..xs {
                        let (a1, a2) = (alpha[ma * xs + xa], alpha2[ma * xs + xa]);
                        if a1 == 0.0 && a2 == 0.0 {
                            continue;
                        }
                        for mb in 0..msgs {
                            for yb in 0..ys {
                                let w = a1 * beta[mb * ys + yb] + a2 * beta2[mb * ys + yb];
                                if w != 0.0 {
                                    total += w * self.err_at(ma, mb, xa, yb, xs, ys);
                                }
                            }
                        }
                    }
                }
                terms.push(dxy * total);
            }
        }
        kahan_sum(terms)
    }

    fn scale(&self, nx: usize, ny: usize) -> f64 {
        let mut c: f64 = 1.0;
        for u in 0..self.q.len() {
            if self.q[u] > 0.0 {
                for x in 0..nx {
                    c = c.max(self.pa[x][u] / self.q[u]);
                }
                for y in 0..ny {
                    c = c.max(self.pb[y][u] / self.q[u]);
                }
            }
        }
        c
    }

    fn draw_u(&self, t: f64) -> usize {
        let total = *self.q_cdf.last().expect("non-empty");
        self.q_cdf.partition_point(|&c| c <= t * total).min(self.q.len() - 1)
    }
}

/// One public-coin string with the players' resulting (message, full input) choices.
struct Fixed {
    error: f64,
    alice: Vec<(u64, usize)>,
    bob: Vec<(u64, usize)>,
}

fn first_accepted(stream: &[(usize, f64)], density: &[f64], q: &[f64], scale: f64) -> usize {
    stream
        .iter()
        .find(|&&(u, tau)| tau * scale * q[u] < density[u])
        .map(|&(u, _)| u)
        .unwrap_or_else(|| {
            (0..density.len()).max_by(|&a, &b| density[a].total_cmp(&density[b]).then(b.cmp(&a))).expect("non-empty")
        })
}

fn pick<T: Copy>(items: &[(T, f64)], target: f64) -> T {
    let mut acc = 0.0;
    for &(v, w) in items {
        acc += w;
        if target < acc {
            return v;
        }
    }
    items.last().expect("non-empty completion list").0
}

fn evaluate_fixed(
    coord: &Coordinate,
    problem: &FPowerK,
    stream: &[(usize, f64)],
    scale: f64,
    rho: (f64, f64),
) -> Fixed {
    let (nx, ny) = (problem.nx(), problem.ny());
    let xs = problem.alice_inputs();
    let ys = problem.y_codes();
    let msgs = coord.msgs;
    let yshift = ny.pow(coord.i as u32);
    let alice: Vec<(u64, usize)> = (0..nx)
        .map(|x| {
            let u = first_accepted(stream, &coord.pa[x], &coord.q, scale);
            let xa = if coord.comp_a[x][u].is_empty() { 0 } else { pick(&coord.comp_a[x][u], rho.0 * coord.pa[x][u]) };
            ((u % msgs) as u64, xa as usize)
        })
        .collect();
    let bob: Vec<(u64, usize)> = (0..ny)
        .map(|y| {
            let u = first_accepted(stream, &coord.pb[y], &coord.q, scale);
            let list = &coord.comp_b[u / msgs];
            let yp = if list.is_empty() { 0 } else { pick(list, rho.1) };
            ((u % msgs) as u64, yp as usize + y * yshift)
        })
        .collect();
    let error = kahan_sum((0..nx).flat_map(|x| (0..ny).map(move |y| (x, y))).map(|(x, y)| {
        let (ma, xa) = alice[x];
        let (mb, yb) = bob[y];
        problem.d.d[x][y] * coord.err_at(ma as usize, mb as usize, xa, yb, xs, ys)
    }));
    Fixed { error, alice, bob }
}

pub fn eliminate_first_message(
    protocol: &ToyProtocol,
    problem: &FPowerK,
    delta: f64,
    opts: &EliminationOptions,
) -> Result<Elimination, InfoError> {
    if protocol.first() != Party::Alice || protocol.rounds() < 2 {
        return Err(InfoError::InvalidParams("need an Alice-first protocol with at least two messages".into()));
    }
    if opts.candidates == 0 || !(opts.residual > 0.0 && opts.residual < 1.0) {
        return Err(InfoError::InvalidParams("candidates must be positive and residual in (0, 1)".into()));
    }
    let k = problem.k;
    let m1 = protocol.bits()[0];
    let epsilon = problem.error_of(protocol)?;
    let first: Vec<u64> =
        (0..problem.alice_inputs()).map(|a| protocol.send(0, a, &[])).collect::<Result<_, _>>()?;

    let mut coin_rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let coords_of: Vec<usize> = (0..opts.candidates).map(|_| coin_rng.gen_range(0..k)).collect();

    let mut per_i = Vec::with_capacity(k);
    let mut best: Option<(f64, usize, usize, Fixed)> = None;
    let mut stream_length = 0;
    for i in 0..k {
        let coord = Coordinate::build(protocol, problem, &first, i)?;
        per_i.push(coord.expected_error(problem));
        let scale = coord.scale(problem.nx(), problem.ny());
        let len = (scale * (1.0 / opts.residual).ln()).ceil() as usize;
        stream_length = stream_length.max(len);
        for (cand, _) in coords_of.iter().enumerate().filter(|(_, &ci)| ci == i) {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1 + cand as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let stream: Vec<(usize, f64)> = (0..len).map(|_| (coord.draw_u(rng.gen()), rng.gen())).collect();
            let rho = (rng.gen(), rng.gen());
            let fixed = evaluate_fixed(&coord, problem, &stream, scale, rho);
            if best.as_ref().is_none_or(|b| fixed.error < b.0 || (fixed.error == b.0 && cand < b.1)) {
                best = Some((fixed.error, cand, i, fixed));
            }
        }
    }
    let (_, _, chosen, fixed) = best.ok_or_else(|| InfoError::InvalidParams("no candidate evaluated".into()))?;

    let new = reduced_protocol(protocol, problem, chosen, &fixed)?;
    let fixed_error = base_error(&new, &problem.f, &problem.d)?;
    let m1_budget = delta * delta * k as f64 / (8.0 * std::f64::consts::LN_2);
    Ok(Elimination {
        bits: new.bits().to_vec(),
        protocol: new,
        m1,
        epsilon,
        delta,
        m1_budget,
        precondition: m1 as f64 <= m1_budget + 1e-9,
        expected_error: per_i.iter().sum::<f64>() / k as f64,
        expected_error_per_i: per_i,
        fixed_error,
        chosen_coordinate: chosen,
        stream_length,
        candidates: opts.candidates,
    })
}

/// The original protocol from message 2 on, with each player's first-message
/// belief and completed input fixed by the chosen coins.
fn reduced_protocol(
    protocol: &ToyProtocol,
    problem: &FPowerK,
    i: usize,
    fixed: &Fixed,
) -> Result<ToyProtocol, InfoError> {
    let alice = Arc::new(fixed.alice.clone());
    let bob: Arc<Vec<(u64, usize)>> =
        Arc::new(fixed.bob.iter().map(|&(m, yb)| (m, problem.bob_code(yb, i))).collect());
    let mut messages: Vec<MessageFn> = Vec::new();
    for r in 1..protocol.rounds() {
        let orig = protocol.message(r).clone();
        let table = if protocol.speaker(r) == Party::Alice { alice.clone() } else { bob.clone() };
        messages.push(Arc::new(move |own, t| {
            let (m, full) = table[own];
            let mut view = Vec::with_capacity(t.len() + 1);
            view.push(m);
            view.extend_from_slice(t);
            orig(full, &view)
        }));
    }
    ToyProtocol::new(protocol.speaker(1), protocol.bits()[1..].to_vec(), messages)
}

/// `sqrt(8 ln 2 * m1 / k)`.
pub fn delta_for(m1: u32, k: usize) -> f64 {
    (8.0 * std::f64::consts::LN_2 * m1 as f64 / k as f64).sqrt()
}
