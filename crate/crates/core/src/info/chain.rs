//! Exact evaluation of the information chain that bounds the first message.
//!
//! The joint table has variables `X_1..X_k, Y_1..Y_k, W_1..W_k, M`. Each
//! `W_i` reveals `X_i` or `Y_i` with probability one half and records which;
//! its code is `x` or `|X| + y`. `M` is the first message.

use serde::Serialize;

use super::dist::JointTable;
use super::protocol::{FPowerK, ToyProtocol, STATE_CAP};
use super::InfoError;
use crate::Party;

pub const CHAIN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainTerms {
    /// `I(M; X_i Y_i | W)`.
    pub given_w: f64,
    /// `I(M; X_i Y_i | W_i W^{-i})`.
    pub given_wi: f64,
    /// `[I(M; X_i Y_i | X_i W^{-i}) + I(M; X_i Y_i | Y_i W^{-i})] / 2`.
    pub split: f64,
    /// `[I(M; Y_i | X_i W^{-i}) + I(M; X_i | Y_i W^{-i})] / 2`.
    pub reduced: f64,
    /// Chain-rule rewrite keeping the `I(W^{-i}; .)` corrections.
    pub chain_rule: f64,
    /// `[I(M W^{-i}; Y_i | X_i) + I(M W^{-i}; X_i | Y_i)] / 2`.
    pub last: f64,
    /// `I(W^{-i}; Y_i | X_i) + I(W^{-i}; X_i | Y_i)`, zero by independence.
    pub independence_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainStep {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `true` for `lhs >= rhs`, `false` for `lhs == rhs`.
    pub inequality: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub m1: u32,
    pub h_m: f64,
    pub info_given_w: f64,
    pub per_i: Vec<ChainTerms>,
    pub steps: Vec<ChainStep>,
    pub holds: bool,
}

/// Builds the joint table of `(X, Y, W, M)` for the first message of `protocol`.
pub fn chain_table(protocol: &ToyProtocol, problem: &FPowerK) -> Result<JointTable, InfoError> {
    if protocol.first() != Party::Alice {
        return Err(InfoError::InvalidParams("the first message must be Alice's".into()));
    }
    let (nx, ny, k) = (problem.nx(), problem.ny(), problem.k);
    let m1 = protocol.bits()[0];
    let nw = nx + ny;
    let mut cards = vec![nx; k];
    cards.extend(vec![ny; k]);
    cards.extend(vec![nw; k]);
    cards.push(1 << m1);
    let size: f64 = cards.iter().map(|&c| c as f64).product();
    if size > STATE_CAP as f64 {
        return Err(InfoError::CapExceeded(format!("{size} joint states")));
    }
    let messages: Vec<u64> =
        (0..problem.alice_inputs()).map(|a| protocol.send(0, a, &[])).collect::<Result<_, _>>()?;
    let mut probs = vec![0.0; size as usize];
    let strides: Vec<usize> = cards
        .iter()
        .scan(1usize, |s, &c| {
            let here = *s;
            *s *= c;
            Some(here)
        })
        .collect();
    let half_k = 0.5f64.powi(k as i32);
    for a in 0..problem.alice_inputs() {
        let x = problem.decode_x(a);
        let m = messages[a] as usize;
        for yc in 0..problem.y_codes() {
            let y = problem.decode_y(yc);
            let p: f64 = x.iter().zip(&y).map(|(&xi, &yi)| problem.d.d[xi][yi]).product::<f64>() * half_k;
            if p == 0.0 {
                continue;
            }
            let base: usize = (0..k).map(|i| x[i] * strides[i] + y[i] * strides[k + i]).sum::<usize>()
                + m * strides[3 * k];
            for sel in 0..1usize << k {
                let mut idx = base;
                for i in 0..k {
                    let w = if sel >> i & 1 == 0 { x[i] } else { nx + y[i] };
                    idx += w * strides[2 * k + i];
                }
                probs[idx] += p;
            }
        }
    }
    JointTable::new(cards, probs)
}

pub fn information_chain_check(protocol: &ToyProtocol, problem: &FPowerK) -> Result<ChainReport, InfoError> {
    let table = chain_table(protocol, problem)?;
    let k = problem.k;
    let m1 = protocol.bits()[0];
    let xv = |i: usize| i;
    let yv = |i: usize| k + i;
    let wv = |i: usize| 2 * k + i;
    let mv = 3 * k;
    let all_x: Vec<usize> = (0..k).map(xv).collect();
    let all_y: Vec<usize> = (0..k).map(yv).collect();
    let all_w: Vec<usize> = (0..k).map(wv).collect();
    let xy: Vec<usize> = all_x.iter().chain(&all_y).copied().collect();

    let h_m = table.entropy(&[mv]);
    let info_given_w = table.mutual_information(&[mv], &xy, &all_w);
    let mut per_i = Vec::with_capacity(k);
    for i in 0..k {
        let w_rest: Vec<usize> = (0..k).filter(|&j| j != i).map(wv).collect();
        let with = |extra: usize| -> Vec<usize> { std::iter::once(extra).chain(w_rest.iter().copied()).collect() };
        let mut m_w_rest = vec![mv];
        m_w_rest.extend(&w_rest);
        let xi_yi = [xv(i), yv(i)];
        let mi = |a: &[usize], b: &[usize], c: &[usize]| table.mutual_information(a, b, c);
        let wi_wrest: Vec<usize> = with(wv(i));
        let lhs_y = mi(&m_w_rest, &[yv(i)], &[xv(i)]);
        let lhs_x = mi(&m_w_rest, &[xv(i)], &[yv(i)]);
        let gap_y = mi(&w_rest, &[yv(i)], &[xv(i)]);
        let gap_x = mi(&w_rest, &[xv(i)], &[yv(i)]);
        per_i.push(ChainTerms {
            given_w: mi(&[mv], &xi_yi, &all_w),
            given_wi: mi(&[mv], &xi_yi, &wi_wrest),
            split: (mi(&[mv], &xi_yi, &with(xv(i))) + mi(&[mv], &xi_yi, &with(yv(i)))) / 2.0,
            reduced: (mi(&[mv], &[yv(i)], &with(xv(i))) + mi(&[mv], &[xv(i)], &with(yv(i)))) / 2.0,
            chain_rule: (lhs_y - gap_y + lhs_x - gap_x) / 2.0,
            last: (lhs_y + lhs_x) / 2.0,
            independence_gap: gap_y + gap_x,
        });
    }
    let sum = |f: fn(&ChainTerms) -> f64| per_i.iter().map(f).sum::<f64>();
    let ge = |name, lhs: f64, rhs: f64| ChainStep { name, lhs, rhs, inequality: true, holds: lhs >= rhs - CHAIN_TOLERANCE };
    let eq = |name, lhs: f64, rhs: f64| ChainStep {
        name,
        lhs,
        rhs,
        inequality: false,
        holds: (lhs - rhs).abs() <= CHAIN_TOLERANCE,
    };
    let steps = vec![
        ge("m1 >= H(M)", m1 as f64, h_m),
        ge("H(M) >= I(M;XY|W)", h_m, info_given_w),
        ge("I(M;XY|W) >= sum I(M;XiYi|W)", info_given_w, sum(|t| t.given_w)),
        eq("W = (Wi, W-i)", sum(|t| t.given_w), sum(|t| t.given_wi)),
        eq("Wi reveals Xi or Yi", sum(|t| t.given_wi), sum(|t| t.split)),
        eq("drop the revealed coordinate", sum(|t| t.split), sum(|t| t.reduced)),
        eq("chain rule", sum(|t| t.reduced), sum(|t| t.chain_rule)),
        eq("W-i independent of XiYi", sum(|t| t.chain_rule), sum(|t| t.last)),
    ];
    let holds = steps.iter().all(|s| s.holds) && per_i.iter().all(|t| t.independence_gap.abs() <= CHAIN_TOLERANCE);
    Ok(ChainReport { m1, h_m, info_given_w, per_i, steps, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::protocol::{build_f_power_k, FTable, MessageFn, PairDistribution};
    use std::sync::Arc;

    fn one_message(m1: u32, f: MessageFn) -> ToyProtocol {
        let out: MessageFn = Arc::new(|_, _| 0);
        ToyProtocol::new(Party::Alice, vec![m1, 1], vec![f, out]).unwrap()
    }

    #[test]
    fn constant_first_message() {
        let p = build_f_power_k(FTable::xor(), PairDistribution::uniform(2, 2), 2).unwrap();
        let r = information_chain_check(&one_message(1, Arc::new(|_, _| 0)), &p).unwrap();
        assert!(r.holds);
        assert_eq!(r.h_m, 0.0);
        assert!(r.per_i.iter().all(|t| t.last.abs() < 1e-12));
    }

    #[test]
    fn first_coordinate_as_message() {
        let p = build_f_power_k(FTable::xor(), PairDistribution::uniform(2, 2), 2).unwrap();
        let r = information_chain_check(&one_message(1, Arc::new(|x, _| (x % 2) as u64)), &p).unwrap();
        assert!(r.holds);
        assert!((r.h_m - 1.0).abs() < 1e-12);
        let total: f64 = r.per_i.iter().map(|t| t.last).sum();
        assert!((total - 0.5).abs() < 1e-12);
    }
}
