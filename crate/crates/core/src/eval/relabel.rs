//! Post-hoc relabeling of mixture draws by Kullback–Leibler matching of the
//! class-assignment probabilities.

use crate::error::{Error, Result};
use crate::gibbs::{Draw, PosteriorDraws};

pub const MAX_RELABEL_CLASSES: usize = 8;

#[derive(Clone, Debug)]
pub struct Relabeled {
    pub draws: PosteriorDraws,
    /// `permutations[chain][draw][k]`: new class k carries old class perm[k].
    pub permutations: Vec<Vec<Vec<usize>>>,
    /// Share of draws whose permutation is not the identity.
    pub swap_fraction: f64,
    pub sweeps: usize,
}

/// Every permutation of 0..k in lexicographic order.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..k).rev().find(|&i| cur[i - 1] < cur[i]) else { break };
        let j = (i..k).rev().find(|&j| cur[j] > cur[i - 1]).expect("a larger element exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

fn permute_probs(p: &[f64], perm: &[usize], kk: usize) -> Vec<f64> {
    let n = p.len() / kk;
    let mut out = vec![0.0; p.len()];
    for i in 0..n {
        for k in 0..kk {
            out[i * kk + k] = p[i * kk + perm[k]];
        }
    }
    out
}

/// Applies `perm` to every class-indexed quantity of one draw.
pub fn permute_draw(draws: &PosteriorDraws, d: &Draw, perm: &[usize]) -> Result<Draw> {
    let kk = perm.len();
    let mut inverse = vec![0usize; kk];
    for (new, &old) in perm.iter().enumerate() {
        inverse[old] = new;
    }
    let params = draws.params_of(d)?.permuted(perm);
    Ok(Draw {
        iteration: d.iteration,
        params: draws.meta.layout.flatten(&params),
        classes: d.classes.iter().map(|&c| inverse[c as usize] as u16).collect(),
        class_probs: permute_probs(&d.class_probs, perm, kk),
        latents: d.latents.clone(),
    })
}

/// Iterates between the reference probabilities Q̂ (mean of the relabeled
/// p_ik) and, per draw, the permutation minimizing Σᵢ KL(Q̂ᵢ ‖ permuted pᵢ).
pub fn relabel(draws: &PosteriorDraws) -> Result<Relabeled> {
    let kk = draws.meta.classes();
    if kk > MAX_RELABEL_CLASSES {
        return Err(Error::TooManyClasses { classes: kk });
    }
    let n = draws.meta.n();
    let pooled: Vec<&Draw> = draws.all().collect();
    let perms = permutations(kk);
    let identity: Vec<usize> = (0..kk).collect();
    let mut chosen = vec![identity.clone(); pooled.len()];
    let logs: Vec<Vec<f64>> = pooled.iter().map(|d| d.class_probs.iter().map(|p| p.max(1e-300).ln()).collect()).collect();
    let mut sweeps = 0;
    for _ in 0..100 {
        sweeps += 1;
        let mut q = vec![0.0; n * kk];
        for (d, perm) in pooled.iter().zip(&chosen) {
            for i in 0..n {
                for k in 0..kk {
                    q[i * kk + k] += d.class_probs[i * kk + perm[k]];
                }
            }
        }
        let g = pooled.len().max(1) as f64;
        q.iter_mut().for_each(|v| *v /= g);
        let mut changed = false;
        for (idx, lp) in logs.iter().enumerate() {
            // cost[k][l] = Σᵢ Q̂_ik log p_il
            let mut cost = vec![0.0; kk * kk];
            for i in 0..n {
                for k in 0..kk {
                    let qik = q[i * kk + k];
                    if qik > 0.0 {
                        for l in 0..kk {
                            cost[k * kk + l] += qik * lp[i * kk + l];
                        }
                    }
                }
            }
            let mut best = &chosen[idx];
            let mut best_score = f64::NEG_INFINITY;
            for p in &perms {
                let score: f64 = (0..kk).map(|k| cost[k * kk + p[k]]).sum();
                if score > best_score + 1e-12 {
                    best_score = score;
                    best = p;
                }
            }
            if *best != chosen[idx] {
                chosen[idx] = best.clone();
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let swaps = chosen.iter().filter(|p| **p != identity).count();
    let mut it = chosen.into_iter();
    let mut chains = Vec::with_capacity(draws.chains.len());
    let mut permutations = Vec::with_capacity(draws.chains.len());
    for chain in &draws.chains {
        let mut out = Vec::with_capacity(chain.len());
        let mut ps = Vec::with_capacity(chain.len());
        for d in chain {
            let p = it.next().expect("one permutation per draw");
            out.push(permute_draw(draws, d, &p)?);
            ps.push(p);
        }
        chains.push(out);
        permutations.push(ps);
    }
    Ok(Relabeled {
        draws: PosteriorDraws { meta: draws.meta.clone(), chains },
        permutations,
        swap_fraction: if pooled.is_empty() { 0.0 } else { swaps as f64 / pooled.len() as f64 },
        sweeps,
    })
}
