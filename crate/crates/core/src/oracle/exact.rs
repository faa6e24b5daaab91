use super::{GroundTruth, OracleError, SyntheticSpec};
use crate::Exec;

/// All count vectors of `len` tokens over `vocab` symbols.
pub(crate) fn compositions(vocab: usize, len: usize) -> Vec<Vec<u8>> {
    fn rec(vocab: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() + 1 == vocab {
            cur.push(left as u8);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c as u8);
            rec(vocab, left - c, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(vocab, len, &mut Vec::with_capacity(vocab), &mut out);
    out
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// Log of the number of sequences with the given counts.
pub(crate) fn ln_multinomial(counts: &[u8]) -> f64 {
    let n: usize = counts.iter().map(|&c| c as usize).sum();
    ln_factorial(n)
        - counts
            .iter()
            .map(|&c| ln_factorial(c as usize))
            .sum::<f64>()
}

/// Per-outcome probability of one token under signal strength `s`.
pub(crate) fn token_prob(spec: &SyntheticSpec, s: f64, token: usize, code: usize) -> f64 {
    let base = (1.0 - s) / spec.vocab_size as f64;
    if token == code {
        s + base
    } else {
        base
    }
}

fn outcome_bits(code: usize, k: usize) -> Vec<bool> {
    (0..k).map(|i| code >> i & 1 == 1).collect()
}

/// Prior over joint outcome codes given fact counts.
pub(crate) fn outcome_prior(spec: &SyntheticSpec, counts: &[u8]) -> Vec<f64> {
    let k = spec.n_articles;
    let p: Vec<f64> = (0..k).map(|i| spec.outcome.prob(i, counts)).collect();
    (0..1usize << k)
        .map(|code| {
            (0..k)
                .map(|i| if code >> i & 1 == 1 { p[i] } else { 1.0 - p[i] })
                .product()
        })
        .collect()
}

/// Likelihood of every observable single-precedent summary (text counts, outcome)
/// under every true outcome code.
fn observation_table(spec: &SyntheticSpec, s: f64, types: &[Vec<u8>]) -> Vec<Vec<f64>> {
    let n_codes = 1usize << spec.n_articles;
    let mut table = Vec::with_capacity(types.len() * n_codes);
    for counts in types {
        let coef = ln_multinomial(counts);
        for prec in 0..n_codes {
            let prec_bits = outcome_bits(prec, spec.n_articles);
            let row = (0..n_codes)
                .map(|code| {
                    let bits = outcome_bits(code, spec.n_articles);
                    let mut ln = coef;
                    for (t, &c) in counts.iter().enumerate() {
                        if c > 0 {
                            ln += c as f64 * token_prob(spec, s, t, code).ln();
                        }
                    }
                    let agree: f64 = bits
                        .iter()
                        .zip(&prec_bits)
                        .map(|(a, b)| {
                            if a == b {
                                spec.outcome_agreement
                            } else {
                                1.0 - spec.outcome_agreement
                            }
                        })
                        .product();
                    ln.exp() * agree
                })
                .collect();
            table.push(row);
        }
    }
    table
}

fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

/// `I(O; Y | F = f)` for one fact-count vector, summed over all precedent tuples.
fn conditional_mi(prior: &[f64], table: &[Vec<f64>], m: usize) -> f64 {
    fn rec(prior: &[f64], table: &[Vec<f64>], left: usize, joint: &mut Vec<f64>, acc: &mut f64) {
        if left == 0 {
            let z: f64 = joint.iter().sum();
            if z <= 0.0 {
                return;
            }
            for (j, &p) in joint.iter().zip(prior) {
                if *j > 0.0 {
                    *acc += j * (j / (z * p)).ln();
                }
            }
            return;
        }
        let saved = joint.clone();
        for row in table {
            for ((j, s), l) in joint.iter_mut().zip(&saved).zip(row) {
                *j = s * l;
            }
            rec(prior, table, left - 1, joint, acc);
        }
        joint.copy_from_slice(&saved);
    }
    let mut joint = prior.to_vec();
    let mut acc = 0.0;
    rec(prior, table, m, &mut joint, &mut acc);
    acc
}

/// Exact `H(O|F)`, `H(O|F,G)` and `H(O|F,H)` in nats, with
/// `0 <= MI <= H(O|F)` enforced against rounding.
pub fn exact_entropies(spec: &SyntheticSpec, exec: Exec) -> Result<GroundTruth, OracleError> {
    spec.validate()?;
    let types = compositions(spec.vocab_size, spec.doc_length);
    let ln_uniform = -(spec.doc_length as f64) * (spec.vocab_size as f64).ln();
    let weights: Vec<f64> = types
        .iter()
        .map(|c| (ln_multinomial(c) + ln_uniform).exp())
        .collect();
    let priors: Vec<Vec<f64>> = types.iter().map(|c| outcome_prior(spec, c)).collect();

    let h_facts: f64 = weights
        .iter()
        .zip(&priors)
        .map(|(w, p)| w * entropy(p))
        .sum();
    let mi_for = |s: f64| -> f64 {
        let table = observation_table(spec, s, &types);
        let per_type = exec.map_range(types.len(), |i| {
            weights[i] * conditional_mi(&priors[i], &table, spec.precedents_per_case)
        });
        per_type.iter().sum::<f64>().clamp(0.0, h_facts)
    };
    let mi_goodhart = mi_for(spec.facts_signal());
    let mi_halsbury = mi_for(spec.args_signal());
    Ok(GroundTruth {
        h_facts,
        h_goodhart: h_facts - mi_goodhart,
        h_halsbury: h_facts - mi_halsbury,
        mi_goodhart,
        mi_halsbury,
    })
}
