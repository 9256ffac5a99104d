//! Monte-Carlo estimation of axiom-violation rates, a small-`n` exact
//! impartial-culture oracle, and log-log power-law fitting.
//!
//! Estimation uses common random numbers across a `B` sweep: trial `t` draws
//! its profile from stream `t` of the master seed regardless of `B`, and a
//! violation found at some `B` is carried forward to every larger `B`. With
//! exact checkers this makes the violation counts non-decreasing in `B` by
//! construction, not just statistically. Trials run in parallel; the counts
//! are order-independent sums, so results do not depend on the worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::axioms::{
    check_cc_prepared, check_group_prepared, AxiomError, CheckMode, CheckOptions, Combo,
};
use crate::models::{sample_histogram_with_rng, DistributionVector, ModelError, ModelSpec};
use crate::profile::Histogram;
use crate::ranking::RankingTable;
use crate::rules::RuleId;
use crate::wmg::Wmg;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Axiom(#[from] AxiomError),
    #[error("exact enumeration needs {histograms:.3e} histograms, over the cap {cap:.3e}")]
    SimplexTooLarge { histograms: f64, cap: f64 },
    #[error("power-law fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("power-law fit requires strictly positive rates")]
    ZeroRate,
    #[error("coalition sizes must be nonempty, ascending and within 1..=n")]
    BadBList,
    #[error("trials must be >= 1")]
    NoTrials,
    #[error("cannot parse rate csv: {0}")]
    Csv(String),
}

/// One estimated violation rate with its 95% Wilson score interval.
#[derive(Clone, Debug, PartialEq)]
pub struct RatePoint {
    pub n: u64,
    pub b: u32,
    pub rule: RuleId,
    pub combo: Combo,
    pub model: String,
    pub trials: u64,
    pub violations: u64,
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seed: u64,
}

/// 95% Wilson score interval for `violations` successes in `trials`.
pub fn wilson_interval(violations: u64, trials: u64) -> (f64, f64) {
    let z = 1.959963984540054_f64;
    let nf = trials as f64;
    let p = violations as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    // At the boundaries the exact endpoints are 0 and 1; rounding in the
    // formula would otherwise leave the point estimate just outside.
    let lo = if violations == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if violations == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Clone, Debug)]
pub struct EstimateRequest {
    pub rule: RuleId,
    pub combo: Combo,
    pub m: usize,
    pub n: u64,
    /// Ascending coalition sizes sharing common random numbers.
    pub b_list: Vec<u32>,
    pub model: ModelSpec,
    pub trials: u64,
    pub seed: u64,
    pub check: CheckOptions,
}

/// Estimates violation rates for every `B` in the request with common random
/// numbers: one profile per trial evaluated at each `B` in ascending order,
/// carrying a found violation forward.
pub fn estimate_rates(req: &EstimateRequest) -> Result<Vec<RatePoint>, LabError> {
    if req.trials == 0 {
        return Err(LabError::NoTrials);
    }
    if req.b_list.is_empty()
        || req.b_list.windows(2).any(|w| w[0] >= w[1])
        || req.b_list.iter().any(|&b| b == 0 || b as u64 > req.n)
    {
        return Err(LabError::BadBList);
    }
    let vector = DistributionVector::from_spec(&req.model, req.m, req.n)?;
    let nb = req.b_list.len();

    // First B index at which each trial's profile shows a violation.
    let firsts: Result<Vec<Option<usize>>, LabError> = (0..req.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
            rng.set_stream(trial);
            let h = sample_histogram_with_rng(&vector, &mut rng);
            let g = Wmg::from_histogram(&h);
            if req.combo.cc {
                let cc = check_cc_prepared(req.rule, &h, &g)?;
                if !cc.sat {
                    return Ok(Some(0));
                }
            }
            if let Some(axiom) = req.combo.group {
                let opts = per_trial_opts(&req.check, trial);
                for (i, &b) in req.b_list.iter().enumerate() {
                    let out = check_group_prepared(axiom, req.rule, &h, &g, b, &opts)?;
                    if !out.sat {
                        return Ok(Some(i));
                    }
                }
            }
            Ok(None)
        })
        .collect();
    let firsts = firsts?;

    let mut violations = vec![0u64; nb];
    for first in firsts.into_iter().flatten() {
        for v in violations.iter_mut().skip(first) {
            *v += 1;
        }
    }
    Ok(req
        .b_list
        .iter()
        .zip(violations)
        .map(|(&b, viol)| {
            let rate = viol as f64 / req.trials as f64;
            let (ci_lo, ci_hi) = wilson_interval(viol, req.trials);
            RatePoint {
                n: req.n,
                b,
                rule: req.rule,
                combo: req.combo,
                model: req.model.to_string(),
                trials: req.trials,
                violations: viol,
                rate,
                ci_lo,
                ci_hi,
                seed: req.seed,
            }
        })
        .collect())
}

/// Derives per-trial sampled-mode seeds so repeated sampled checks across
/// trials explore independent actions; exact mode is unchanged.
fn per_trial_opts(opts: &CheckOptions, trial: u64) -> CheckOptions {
    match opts.mode {
        CheckMode::Exact => *opts,
        CheckMode::Sampled { samples, seed } => CheckOptions {
            mode: CheckMode::Sampled {
                samples,
                seed: seed ^ trial.wrapping_mul(0x9e3779b97f4a7c15),
            },
            max_candidates: opts.max_candidates,
        },
    }
}

/// Exact violation probability under impartial culture by enumerating the
/// full histogram simplex with multinomial weights.
pub fn exact_ic_rate(
    rule: RuleId,
    combo: Combo,
    m: usize,
    n: u64,
    b: u32,
    check: &CheckOptions,
    max_histograms: f64,
) -> Result<f64, LabError> {
    let table = RankingTable::get(m);
    let k = table.count();
    let simplex = binomial_f64(n + k as u64 - 1, k as u64 - 1);
    if simplex > max_histograms {
        return Err(LabError::SimplexTooLarge { histograms: simplex, cap: max_histograms });
    }
    // ln(c!) table for the multinomial weights.
    let mut lnfact = vec![0.0f64; n as usize + 1];
    for i in 1..=n as usize {
        lnfact[i] = lnfact[i - 1] + (i as f64).ln();
    }
    let ln_norm = lnfact[n as usize] - n as f64 * (k as f64).ln();

    let mut counts = vec![0u32; k];
    let mut total = 0.0f64;
    let mut err: Option<LabError> = None;
    enumerate_simplex(&mut counts, 0, n as u32, &mut |counts| {
        if err.is_some() {
            return;
        }
        let h = Histogram::new(m, counts.to_vec());
        let g = Wmg::from_histogram(&h);
        let violated = (|| -> Result<bool, LabError> {
            if combo.cc {
                let cc = check_cc_prepared(rule, &h, &g)?;
                if !cc.sat {
                    return Ok(true);
                }
            }
            if let Some(axiom) = combo.group {
                let out = check_group_prepared(axiom, rule, &h, &g, b.min(n as u32), check)?;
                if !out.sat {
                    return Ok(true);
                }
            }
            Ok(false)
        })();
        match violated {
            Err(e) => err = Some(e),
            Ok(true) => {
                let mut ln_w = ln_norm;
                for &c in counts {
                    ln_w -= lnfact[c as usize];
                }
                total += ln_w.exp();
            }
            Ok(false) => {}
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// Probability that a Condorcet winner exists under impartial culture
/// (same enumeration; used as a cross-check oracle).
pub fn exact_ic_cw_probability(m: usize, n: u64) -> Result<f64, LabError> {
    let table = RankingTable::get(m);
    let k = table.count();
    let mut lnfact = vec![0.0f64; n as usize + 1];
    for i in 1..=n as usize {
        lnfact[i] = lnfact[i - 1] + (i as f64).ln();
    }
    let ln_norm = lnfact[n as usize] - n as f64 * (k as f64).ln();
    let mut counts = vec![0u32; k];
    let mut total = 0.0f64;
    enumerate_simplex(&mut counts, 0, n as u32, &mut |counts| {
        let h = Histogram::new(m, counts.to_vec());
        if Wmg::from_histogram(&h).condorcet_winner().is_some() {
            let mut ln_w = ln_norm;
            for &c in counts {
                ln_w -= lnfact[c as usize];
            }
            total += ln_w.exp();
        }
    });
    Ok(total)
}

fn enumerate_simplex(counts: &mut Vec<u32>, idx: usize, left: u32, f: &mut dyn FnMut(&[u32])) {
    if idx + 1 == counts.len() {
        counts[idx] = left;
        f(counts);
        counts[idx] = 0;
        return;
    }
    for c in 0..=left {
        counts[idx] = c;
        enumerate_simplex(counts, idx + 1, left - c, f);
    }
    counts[idx] = 0;
}

fn binomial_f64(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc *= (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Ordinary least squares of `ln(rate)` on `ln(x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub residual_norm: f64,
}

pub fn fit_powerlaw(xs: &[f64], rates: &[f64]) -> Result<FitResult, LabError> {
    if xs.len() != rates.len() || xs.len() < 3 {
        return Err(LabError::TooFewPoints(xs.len().min(rates.len())));
    }
    if rates.iter().any(|&r| r <= 0.0) || xs.iter().any(|&x| x <= 0.0) {
        return Err(LabError::ZeroRate);
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = rates.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual_norm = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum::<f64>()
        .sqrt();
    Ok(FitResult { slope, intercept, residual_norm })
}

pub const RATE_CSV_HEADER: &str = "n,B,rule,combo,model,trials,violations,rate,ci_lo,ci_hi,seed";

pub fn rates_to_csv(points: &[RatePoint]) -> String {
    let mut s = String::from(RATE_CSV_HEADER);
    s.push('\n');
    for p in points {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            p.n, p.b, p.rule, p.combo, p.model, p.trials, p.violations, p.rate, p.ci_lo, p.ci_hi,
            p.seed
        ));
    }
    s
}

pub fn rates_from_csv(text: &str) -> Result<Vec<RatePoint>, LabError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line == RATE_CSV_HEADER) {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 11 {
            return Err(LabError::Csv(format!("line {}: expected 11 columns", i + 1)));
        }
        let bad = |what: &str| LabError::Csv(format!("line {}: bad {what}", i + 1));
        out.push(RatePoint {
            n: cols[0].parse().map_err(|_| bad("n"))?,
            b: cols[1].parse().map_err(|_| bad("B"))?,
            rule: cols[2].parse().map_err(|_| bad("rule"))?,
            combo: cols[3].parse().map_err(|_| bad("combo"))?,
            model: cols[4].to_string(),
            trials: cols[5].parse().map_err(|_| bad("trials"))?,
            violations: cols[6].parse().map_err(|_| bad("violations"))?,
            rate: cols[7].parse().map_err(|_| bad("rate"))?,
            ci_lo: cols[8].parse().map_err(|_| bad("ci_lo"))?,
            ci_hi: cols[9].parse().map_err(|_| bad("ci_hi"))?,
            seed: cols[10].parse().map_err(|_| bad("seed"))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::Combo;

    fn req(rule: RuleId, combo: Combo, m: usize, n: u64, bs: &[u32], trials: u64) -> EstimateRequest {
        EstimateRequest {
            rule,
            combo,
            m,
            n,
            b_list: bs.to_vec(),
            model: "ic".parse().unwrap(),
            trials,
            seed: 42,
            check: CheckOptions::default(),
        }
    }

    #[test]
    fn wilson_basics() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && hi > 0.5);
        assert!(hi - lo < 0.25);
    }

    #[test]
    fn constant_rule_never_violates_participation() {
        let points = estimate_rates(&req(
            RuleId::Constant(1),
            "par".parse().unwrap(),
            3,
            9,
            &[1, 2],
            2_000,
        ))
        .unwrap();
        for p in &points {
            assert_eq!(p.violations, 0);
            assert_eq!(p.rate, 0.0);
            assert!(p.ci_lo == 0.0 && p.ci_hi > 0.0);
        }
    }

    #[test]
    fn maximin_never_violates_cc() {
        let points = estimate_rates(&req(
            RuleId::Maximin,
            "cc".parse().unwrap(),
            4,
            15,
            &[1],
            2_000,
        ))
        .unwrap();
        assert_eq!(points[0].violations, 0);
    }

    #[test]
    fn crn_counts_monotone_in_b() {
        let points = estimate_rates(&req(
            RuleId::Borda,
            Combo::CM,
            3,
            10,
            &[1, 2, 3],
            3_000,
        ))
        .unwrap();
        assert!(points[0].violations <= points[1].violations);
        assert!(points[1].violations <= points[2].violations);
        assert!(points[0].violations > 0, "borda C&M violations should appear");
    }

    #[test]
    fn estimate_is_thread_count_invariant() {
        let r = req(RuleId::Borda, Combo::CM, 3, 8, &[1], 2_000);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| estimate_rates(&r).unwrap());
        let two = rayon::ThreadPoolBuilder::new()
            .num_threads(2)
            .build()
            .unwrap()
            .install(|| estimate_rates(&r).unwrap());
        assert_eq!(one, two);
    }

    #[test]
    fn estimate_matches_exact_ic() {
        // borda, C&M, m=3, n=10, B=1 under IC. 10^5 trials here; the
        // acceptance suite runs the full 10^6-trial version over 100 seeds.
        let exact = exact_ic_rate(
            RuleId::Borda,
            Combo::CM,
            3,
            10,
            1,
            &CheckOptions::default(),
            1e7,
        )
        .unwrap();
        let points =
            estimate_rates(&req(RuleId::Borda, Combo::CM, 3, 10, &[1], 100_000)).unwrap();
        let p = &points[0];
        let sigma = (exact * (1.0 - exact) / p.trials as f64).sqrt();
        assert!(
            (p.rate - exact).abs() < 4.0 * sigma,
            "estimate {} vs exact {exact} (sigma {sigma})",
            p.rate
        );
    }

    #[test]
    fn exact_ic_single_vote_cases() {
        // With one voter the top choice is the Condorcet winner, so any
        // Condorcet-consistent rule never violates C&P.
        for rule in [RuleId::Maximin, RuleId::Copeland] {
            let rate =
                exact_ic_rate(rule, Combo::CP, 3, 1, 1, &CheckOptions::default(), 1e6).unwrap();
            assert!(rate.abs() < 1e-15);
        }
        // constant_1 violates the Condorcet criterion whenever the single
        // vote does not rank 1 first: 4 of 6 votes.
        let rate = exact_ic_rate(
            RuleId::Constant(1),
            "cc".parse().unwrap(),
            3,
            1,
            1,
            &CheckOptions::default(),
            1e6,
        )
        .unwrap();
        assert!((rate - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cw_probability_m3_n3() {
        // Of the 216 ordered 3-voter profiles, the strict 3-cycles are the
        // 12 orderings of {[123],[231],[312]} and {[132],[213],[321]}; the
        // Condorcet winner exists with probability 17/18.
        let p = exact_ic_cw_probability(3, 3).unwrap();
        assert!((p - 17.0 / 18.0).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_exact_power_laws() {
        let xs = [64.0f64, 256.0, 1024.0, 4096.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(-0.5)).collect();
        let fit = fit_powerlaw(&xs, &ys).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-9, "slope {}", fit.slope);
        assert!(fit.residual_norm < 1e-9);

        let bs = [1.0, 2.0, 4.0, 8.0, 16.0];
        let ys: Vec<f64> = bs.iter().map(|b| 0.01 * b).collect();
        let fit = fit_powerlaw(&bs, &ys).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(matches!(
            fit_powerlaw(&[1.0, 2.0], &[0.1, 0.2]),
            Err(LabError::TooFewPoints(2))
        ));
        assert!(matches!(
            fit_powerlaw(&[1.0, 2.0, 3.0], &[0.1, 0.0, 0.2]),
            Err(LabError::ZeroRate)
        ));
    }

    #[test]
    fn csv_roundtrip() {
        let points = estimate_rates(&req(RuleId::Borda, Combo::CM, 3, 6, &[1, 2], 500)).unwrap();
        let csv = rates_to_csv(&points);
        let back = rates_from_csv(&csv).unwrap();
        assert_eq!(points, back);
    }

    #[test]
    fn bad_requests_rejected() {
        assert!(matches!(
            estimate_rates(&req(RuleId::Borda, Combo::CM, 3, 6, &[2, 1], 10)),
            Err(LabError::BadBList)
        ));
        assert!(matches!(
            estimate_rates(&req(RuleId::Borda, Combo::CM, 3, 6, &[1], 0)),
            Err(LabError::NoTrials)
        ));
        assert!(matches!(
            estimate_rates(&req(RuleId::Borda, Combo::CM, 3, 6, &[7], 10)),
            Err(LabError::BadBList)
        ));
    }
}
