//! Small statistics helpers for the distribution tests and benchmarks.

use std::collections::BTreeMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

fn p_value(statistic: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    1.0 - dist.cdf(statistic)
}

/// Histogram of integer samples.
pub fn histogram(samples: &[i64]) -> BTreeMap<i64, u64> {
    let mut h = BTreeMap::new();
    for &s in samples {
        *h.entry(s).or_insert(0) += 1;
    }
    h
}

/// Groups adjacent cells, in key order, until each group has at least `min`
/// weight; a light final group is merged into its predecessor.
fn pool<T: Copy>(cells: &[(f64, T)], min: f64) -> Vec<Vec<T>> {
    let mut groups: Vec<(f64, Vec<T>)> = Vec::new();
    let mut cur = (0.0, Vec::new());
    for &(w, item) in cells {
        cur.0 += w;
        cur.1.push(item);
        if cur.0 >= min {
            groups.push(std::mem::take(&mut cur));
        }
    }
    if !cur.1.is_empty() {
        match groups.last_mut() {
            Some(last) => last.1.extend(cur.1),
            None => groups.push(cur),
        }
    }
    groups.into_iter().map(|g| g.1).collect()
}

/// Two-sample χ² homogeneity test on integer-valued samples. Adjacent
/// values are pooled so each cell holds at least 10 combined observations.
pub fn chi_square_two_sample(a: &[i64], b: &[i64]) -> ChiSquare {
    let ha = histogram(a);
    let hb = histogram(b);
    let mut keys: Vec<i64> = ha.keys().chain(hb.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let cells: Vec<(f64, i64)> = keys
        .iter()
        .map(|k| ((ha.get(k).unwrap_or(&0) + hb.get(k).unwrap_or(&0)) as f64, *k))
        .collect();
    let groups = pool(&cells, 10.0);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ra, rb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let statistic = groups
        .iter()
        .map(|g| {
            let ca: f64 = g.iter().map(|k| *ha.get(k).unwrap_or(&0) as f64).sum();
            let cb: f64 = g.iter().map(|k| *hb.get(k).unwrap_or(&0) as f64).sum();
            (ca * ra - cb * rb).powi(2) / (ca + cb)
        })
        .sum();
    let df = groups.len().saturating_sub(1);
    ChiSquare {
        statistic,
        df,
        p_value: p_value(statistic, df),
    }
}

/// χ² goodness of fit of `observed[i]` against probabilities `expected[i]`.
/// Cells are pooled so each has expected count at least 5.
pub fn chi_square_fit(observed: &[u64], expected: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), expected.len());
    let n: u64 = observed.iter().sum();
    let cells: Vec<(f64, usize)> = expected.iter().enumerate().map(|(i, p)| (p * n as f64, i)).collect();
    let groups = pool(&cells, 5.0);
    let statistic = groups
        .iter()
        .map(|g| {
            let o: f64 = g.iter().map(|&i| observed[i] as f64).sum();
            let e: f64 = g.iter().map(|&i| expected[i] * n as f64).sum();
            (o - e).powi(2) / e
        })
        .sum();
    let df = groups.len().saturating_sub(1);
    ChiSquare {
        statistic,
        df,
        p_value: p_value(statistic, df),
    }
}

/// Sample mean and (n-1) standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Least-squares line `y = a + b x`; returns `(a, b, r²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (a, b, r2)
}
