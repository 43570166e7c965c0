//! Evaluation metrics and rank statistics.
//!
//! Everything here is a pure function: confusion matrices, macro-averaged F1,
//! normal-approximation confidence intervals, an exact one-sided sign test,
//! and a Kruskal-Wallis H-test whose chi-square tail probability is computed
//! from scratch via the regularized upper incomplete gamma function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::ClassLabel;

/// Row = truth, column = prediction, over a fixed class list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: Vec<ClassLabel>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: &[ClassLabel]) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::Input("confusion matrix needs at least one class".into()));
        }
        let mut sorted = classes.to_vec();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != classes.len() {
            return Err(Error::Input("duplicate class in confusion matrix".into()));
        }
        let n = sorted.len();
        Ok(ConfusionMatrix {
            classes: sorted,
            counts: vec![vec![0; n]; n],
        })
    }

    pub fn from_pairs(classes: &[ClassLabel], pairs: &[(ClassLabel, ClassLabel)]) -> Result<Self> {
        let mut cm = Self::new(classes)?;
        for &(truth, pred) in pairs {
            cm.record(truth, pred)?;
        }
        Ok(cm)
    }

    pub fn record(&mut self, truth: ClassLabel, pred: ClassLabel) -> Result<()> {
        let t = self.class_index(truth)?;
        let p = self.class_index(pred)?;
        self.counts[t][p] += 1;
        Ok(())
    }

    fn class_index(&self, c: ClassLabel) -> Result<usize> {
        self.classes
            .iter()
            .position(|&x| x == c)
            .ok_or_else(|| Error::Input(format!("class `{c}` not in confusion matrix")))
    }

    pub fn classes(&self) -> &[ClassLabel] {
        &self.classes
    }

    pub fn count(&self, truth: ClassLabel, pred: ClassLabel) -> u64 {
        match (self.class_index(truth), self.class_index(pred)) {
            (Ok(t), Ok(p)) => self.counts[t][p],
            _ => 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Precision, recall and F1 for one class (zero denominators yield 0).
    pub fn class_prf(&self, c: ClassLabel) -> Option<(f64, f64, f64)> {
        let i = self.class_index(c).ok()?;
        let tp = self.counts[i][i] as f64;
        let fp: f64 = (0..self.classes.len())
            .filter(|&t| t != i)
            .map(|t| self.counts[t][i] as f64)
            .sum();
        let fn_: f64 = (0..self.classes.len())
            .filter(|&p| p != i)
            .map(|p| self.counts[i][p] as f64)
            .sum();
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Some((precision, recall, f1))
    }

    fn class_is_present(&self, i: usize) -> bool {
        let truth: u64 = self.counts[i].iter().sum();
        let predicted: u64 = self.counts.iter().map(|row| row[i]).sum();
        truth > 0 || predicted > 0
    }
}

/// Unweighted mean of per-class F1 scores.
///
/// Classes with neither truth rows nor predictions are excluded; a present
/// class with zero precision and recall contributes 0.
pub fn macro_f1(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.total() == 0 {
        return Err(Error::Input("confusion matrix is empty".into()));
    }
    let mut sum = 0.0;
    let mut included = 0usize;
    for (i, &c) in cm.classes.iter().enumerate() {
        if !cm.class_is_present(i) {
            continue;
        }
        let (_, _, f1) = cm.class_prf(c).expect("class is in the matrix");
        sum += f1;
        included += 1;
    }
    Ok(sum / included as f64)
}

/// Mean and 95% half-width (`1.96 * s / sqrt(n)`, sample standard deviation).
pub fn mean_ci95(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::Input(format!(
            "confidence interval needs at least 2 values, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, 1.96 * var.sqrt() / n.sqrt()))
}

/// Result of a Kruskal-Wallis H-test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KwResult {
    pub h: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub tie_corrected: bool,
}

/// Kruskal-Wallis H-test with mid-ranks and the standard tie correction.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<KwResult> {
    if groups.len() < 2 {
        return Err(Error::Input(format!(
            "Kruskal-Wallis needs at least 2 groups, got {}",
            groups.len()
        )));
    }
    for (i, g) in groups.iter().enumerate() {
        if g.is_empty() {
            return Err(Error::Input(format!("group {i} is empty")));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input(format!("group {i} contains a non-finite value")));
        }
    }

    let mut pooled: Vec<(f64, usize)> = groups
        .iter()
        .enumerate()
        .flat_map(|(gi, g)| g.iter().map(move |&v| (v, gi)))
        .collect();
    let n = pooled.len();
    pooled.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));
    if pooled[0].0 == pooled[n - 1].0 {
        return Err(Error::DegenerateData);
    }

    // Mid-ranks over runs of equal values, collecting tie-group sizes.
    let mut rank_sums = vec![0.0f64; groups.len()];
    let mut tie_term = 0.0f64;
    let mut any_tie = false;
    let mut i = 0usize;
    while i < n {
        let mut j = i + 1;
        while j < n && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let run = (j - i) as f64;
        let mid_rank = (i + 1 + j) as f64 / 2.0; // mean of ranks i+1 ..= j
        for k in i..j {
            rank_sums[pooled[k].1] += mid_rank;
        }
        if run > 1.0 {
            any_tie = true;
            tie_term += run * run * run - run;
        }
        i = j;
    }

    let nf = n as f64;
    let mut h = 0.0;
    for (gi, g) in groups.iter().enumerate() {
        let ni = g.len() as f64;
        let mean_rank = rank_sums[gi] / ni;
        let dev = mean_rank - (nf + 1.0) / 2.0;
        h += ni * dev * dev;
    }
    h *= 12.0 / (nf * (nf + 1.0));
    if any_tie {
        h /= 1.0 - tie_term / (nf * nf * nf - nf);
    }
    let df = groups.len() - 1;
    let p_value = chi_square_sf(h, df)?;
    Ok(KwResult {
        h,
        degrees_of_freedom: df,
        p_value,
        tie_corrected: any_tie,
    })
}

/// Chi-square survival function `P(X >= x)` with `df` degrees of freedom,
/// evaluated as the regularized upper incomplete gamma `Q(df/2, x/2)`.
pub fn chi_square_sf(x: f64, df: usize) -> Result<f64> {
    if df == 0 {
        return Err(Error::Input("degrees of freedom must be positive".into()));
    }
    if !(x >= 0.0) {
        return Err(Error::Input(format!("chi-square statistic must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let a = df as f64 / 2.0;
    let xh = x / 2.0;
    let q = if xh < a + 1.0 {
        1.0 - gamma_p_series(a, xh)
    } else {
        gamma_q_continued_fraction(a, xh)
    };
    Ok(q.clamp(0.0, 1.0))
}

/// Lower regularized incomplete gamma P(a, x) by series expansion (x < a+1).
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..500 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Upper regularized incomplete gamma Q(a, x) by Lentz continued fraction (x >= a+1).
fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Lanczos approximation of `ln Γ(x)` for x > 0.
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for (j, &c) in COEFFS.iter().enumerate() {
        ser += c / (x + 1.0 + j as f64);
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

/// Outcome of an exact one-sided sign test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignTestResult {
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    /// `P(Binomial(wins + losses, 1/2) >= wins)`; 1.0 when every pair ties.
    pub p_value: f64,
}

/// One-sided paired sign test for `x > y`: ties are dropped, the p-value is
/// the exact binomial tail probability of seeing at least this many wins.
pub fn sign_test_greater(xs: &[f64], ys: &[f64]) -> Result<SignTestResult> {
    if xs.len() != ys.len() {
        return Err(Error::Input(format!(
            "sign test needs paired samples, got {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.is_empty() {
        return Err(Error::Input("sign test needs at least one pair".into()));
    }
    let mut wins = 0usize;
    let mut losses = 0usize;
    let mut ties = 0usize;
    for (&x, &y) in xs.iter().zip(ys) {
        if x > y {
            wins += 1;
        } else if x < y {
            losses += 1;
        } else {
            ties += 1;
        }
    }
    let n = wins + losses;
    let p_value = if n == 0 {
        1.0
    } else {
        binomial_tail_at_least(n, wins)
    };
    Ok(SignTestResult {
        wins,
        losses,
        ties,
        p_value,
    })
}

/// `P(Binomial(n, 1/2) >= k)` computed exactly in f64.
fn binomial_tail_at_least(n: usize, k: usize) -> f64 {
    // C(n, i) / 2^n accumulated from i = k upward.
    let mut term = (0..k).fold(0.5f64.powi(n as i32), |acc, i| {
        acc * (n - i) as f64 / (i + 1) as f64
    });
    let mut sum = 0.0;
    for i in k..=n {
        sum += term;
        if i < n {
            term *= (n - i) as f64 / (i + 1) as f64;
        }
    }
    sum.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const L: [ClassLabel; 6] = ClassLabel::ALL;

    #[test]
    fn macro_f1_perfect_diagonal() {
        let pairs: Vec<_> = L.iter().map(|&c| (c, c)).collect();
        let cm = ConfusionMatrix::from_pairs(&L, &pairs).unwrap();
        assert_eq!(macro_f1(&cm).unwrap(), 1.0);
    }

    #[test]
    fn macro_f1_two_class_hand_example() {
        // counts [[1,1],[1,1]]: P = R = 0.5 for both classes, macro = 0.5.
        let classes = [ClassLabel::Neutral, ClassLabel::Happy];
        let pairs = [
            (ClassLabel::Neutral, ClassLabel::Neutral),
            (ClassLabel::Neutral, ClassLabel::Happy),
            (ClassLabel::Happy, ClassLabel::Neutral),
            (ClassLabel::Happy, ClassLabel::Happy),
        ];
        let cm = ConfusionMatrix::from_pairs(&classes, &pairs).unwrap();
        assert!((macro_f1(&cm).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn macro_f1_excludes_absent_classes() {
        // Only two of six classes ever appear.
        let pairs = [
            (ClassLabel::Neutral, ClassLabel::Neutral),
            (ClassLabel::Happy, ClassLabel::Happy),
        ];
        let cm = ConfusionMatrix::from_pairs(&L, &pairs).unwrap();
        assert_eq!(macro_f1(&cm).unwrap(), 1.0);
    }

    #[test]
    fn macro_f1_rejects_empty_matrix() {
        let cm = ConfusionMatrix::new(&L).unwrap();
        assert!(macro_f1(&cm).is_err());
    }

    /// Independent recount of per-class tp/fp/fn straight from the pairs.
    fn brute_force_macro_f1(classes: &[ClassLabel], pairs: &[(ClassLabel, ClassLabel)]) -> f64 {
        let mut sum = 0.0;
        let mut included = 0usize;
        for &c in classes {
            let tp = pairs.iter().filter(|&&(t, p)| t == c && p == c).count() as f64;
            let fp = pairs.iter().filter(|&&(t, p)| t != c && p == c).count() as f64;
            let fn_ = pairs.iter().filter(|&&(t, p)| t == c && p != c).count() as f64;
            if tp + fp + fn_ == 0.0 {
                continue;
            }
            let prec = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
            let rec = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
            sum += if prec + rec > 0.0 {
                2.0 * prec * rec / (prec + rec)
            } else {
                0.0
            };
            included += 1;
        }
        sum / included as f64
    }

    proptest! {
        #[test]
        fn macro_f1_matches_brute_force(raw in proptest::collection::vec((0usize..6, 0usize..6), 1..200)) {
            let pairs: Vec<_> = raw
                .into_iter()
                .map(|(t, p)| (L[t], L[p]))
                .collect();
            let cm = ConfusionMatrix::from_pairs(&L, &pairs).unwrap();
            let expected = brute_force_macro_f1(&L, &pairs);
            prop_assert!((macro_f1(&cm).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn ci95_hand_examples() {
        let (m, hw) = mean_ci95(&[3.0, 3.0, 3.0]).unwrap();
        assert_eq!(m, 3.0);
        assert_eq!(hw, 0.0);

        // {0,1}: s = sqrt(0.5), half width = 1.96 * sqrt(0.5) / sqrt(2) = 0.98.
        let (m, hw) = mean_ci95(&[0.0, 1.0]).unwrap();
        assert!((m - 0.5).abs() < 1e-15);
        assert!((hw - 0.98).abs() < 1e-12);

        assert!(mean_ci95(&[1.0]).is_err());
    }

    #[test]
    fn kruskal_wallis_hand_example() {
        let groups = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]];
        let r = kruskal_wallis(&groups).unwrap();
        assert!((r.h - 7.2).abs() < 1e-9);
        assert_eq!(r.degrees_of_freedom, 2);
        assert!((r.p_value - (-3.6f64).exp()).abs() < 1e-9);
        assert!(!r.tie_corrected);
    }

    #[test]
    fn kruskal_wallis_symmetric_split_gives_zero() {
        // [1,4] and [2,3]: mean rank 2.5 in both groups.
        let r = kruskal_wallis(&[vec![1.0, 4.0], vec![2.0, 3.0]]).unwrap();
        assert!(r.h.abs() < 1e-12);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn kruskal_wallis_degenerate_and_empty_inputs() {
        assert!(matches!(
            kruskal_wallis(&[vec![5.0], vec![5.0], vec![5.0]]),
            Err(Error::DegenerateData)
        ));
        assert!(matches!(
            kruskal_wallis(&[vec![1.0], vec![]]),
            Err(Error::Input(_))
        ));
        assert!(matches!(kruskal_wallis(&[vec![1.0]]), Err(Error::Input(_))));
    }

    #[test]
    fn chi_square_closed_forms() {
        // df = 2: SF(x) = exp(-x/2); df = 4: SF(x) = (1 + x/2) exp(-x/2).
        let mut x = 0.0;
        while x <= 50.0 {
            let sf2 = chi_square_sf(x, 2).unwrap();
            assert!(
                (sf2 - (-x / 2.0).exp()).abs() <= 1e-10,
                "df=2, x={x}: {sf2}"
            );
            let sf4 = chi_square_sf(x, 4).unwrap();
            assert!(
                (sf4 - (1.0 + x / 2.0) * (-x / 2.0).exp()).abs() <= 1e-10,
                "df=4, x={x}: {sf4}"
            );
            x += 0.01;
        }
    }

    #[test]
    fn chi_square_examples_and_contracts() {
        assert_eq!(chi_square_sf(0.0, 7).unwrap(), 1.0);
        assert!((chi_square_sf(3.6, 2).unwrap() - (-1.8f64).exp()).abs() < 1e-12);
        assert!((chi_square_sf(2.0, 4).unwrap() - 2.0 * (-1.0f64).exp()).abs() < 1e-12);
        assert!(chi_square_sf(-1.0, 2).is_err());
        assert!(chi_square_sf(1.0, 0).is_err());

        let mut prev = 1.0;
        let mut x = 0.0;
        while x <= 30.0 {
            let sf = chi_square_sf(x, 5).unwrap();
            assert!(sf <= prev + 1e-15, "not monotone at {x}");
            prev = sf;
            x += 0.25;
        }
    }

    proptest! {
        #[test]
        fn kw_invariant_under_monotone_transform_and_permutation(
            seedvals in proptest::collection::vec(proptest::collection::vec(-50i32..50, 3..10), 2..6),
        ) {
            let groups: Vec<Vec<f64>> = seedvals
                .iter()
                .map(|g| g.iter().map(|&v| v as f64 * 0.5).collect())
                .collect();
            let all_same = {
                let first = groups[0][0];
                groups.iter().flatten().all(|&v| v == first)
            };
            prop_assume!(!all_same);
            let base = kruskal_wallis(&groups).unwrap();

            // Strictly increasing transform: ranks unchanged.
            let transformed: Vec<Vec<f64>> = groups
                .iter()
                .map(|g| g.iter().map(|&v| (0.1 * v).exp() + 3.0 * v).collect())
                .collect();
            let t = kruskal_wallis(&transformed).unwrap();
            prop_assert!((t.h - base.h).abs() < 1e-12);

            // Reversing group order and values within groups changes nothing.
            let permuted: Vec<Vec<f64>> = groups
                .iter()
                .rev()
                .map(|g| g.iter().rev().copied().collect())
                .collect();
            let p = kruskal_wallis(&permuted).unwrap();
            prop_assert!((p.h - base.h).abs() < 1e-12);

            // Positive scaling leaves (H, p) unchanged even with ties.
            let scaled: Vec<Vec<f64>> = groups
                .iter()
                .map(|g| g.iter().map(|&v| v * 17.25).collect())
                .collect();
            let s = kruskal_wallis(&scaled).unwrap();
            prop_assert!((s.h - base.h).abs() < 1e-12);
            prop_assert!((s.p_value - base.p_value).abs() < 1e-12);
            prop_assert!(base.h >= 0.0);
        }
    }

    #[test]
    fn sign_test_exact_values() {
        // 9 wins out of 10: P = (C(10,9) + C(10,10)) / 1024 = 11/1024.
        let xs = [1.0; 10];
        let mut ys = [0.0; 10];
        ys[0] = 2.0;
        let r = sign_test_greater(&xs, &ys).unwrap();
        assert_eq!((r.wins, r.losses, r.ties), (9, 1, 0));
        assert!((r.p_value - 11.0 / 1024.0).abs() < 1e-12);

        // 8 wins, 2 ties: ties dropped, P = 1/256.
        let mut ys = [0.0; 10];
        ys[3] = 1.0;
        ys[7] = 1.0;
        let r = sign_test_greater(&xs, &ys).unwrap();
        assert_eq!((r.wins, r.losses, r.ties), (8, 0, 2));
        assert!((r.p_value - 1.0 / 256.0).abs() < 1e-12);

        // All ties: no evidence.
        let r = sign_test_greater(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(r.p_value, 1.0);
    }
}
