use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bandwidth {
    /// Median of the pooled pairwise distances of the current sets (1 if zero).
    Median,
    Fixed(f64),
}

/// Gaussian RBF kernel `k(a,b) = exp(−(a−b)²/(2σ²))` over scalars.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    pub bandwidth: Bandwidth,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            bandwidth: Bandwidth::Median,
        }
    }
}

impl KernelSpec {
    pub fn fixed(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Argument(format!(
                "bandwidth {sigma} must be positive"
            )));
        }
        Ok(KernelSpec {
            bandwidth: Bandwidth::Fixed(sigma),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mmd {
    pub value: f64,
    pub grad_x: Vec<f64>,
    pub grad_y: Vec<f64>,
    pub bandwidth: f64,
}

/// Pairs `i < j` of sorted `s` with `s[j] − s[i] ≤ t`.
fn pairs_within(s: &[f64], t: f64) -> usize {
    let mut count = 0;
    let mut lo = 0;
    for j in 0..s.len() {
        while s[j] - s[lo] > t {
            lo += 1;
        }
        count += j - lo;
    }
    count
}

/// `k`-th smallest (0-based) pairwise difference of sorted `s`. Non-negative
/// doubles order like their bit patterns, so the search runs over those.
fn kth_pairwise(s: &[f64], k: usize) -> f64 {
    let (mut lo, mut hi) = (0u64, (s[s.len() - 1] - s[0]).to_bits());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pairs_within(s, f64::from_bits(mid)) > k {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    f64::from_bits(lo)
}

/// Median of `|a − b|` over all unordered pairs of the pooled values.
pub fn median_pairwise_distance(x: &[f64], y: &[f64]) -> f64 {
    let mut s: Vec<f64> = x.iter().chain(y).copied().collect();
    let n = s.len();
    let pairs = n * n.saturating_sub(1) / 2;
    if pairs == 0 {
        return 0.0;
    }
    s.sort_unstable_by(f64::total_cmp);
    let mid = pairs / 2;
    let upper = kth_pairwise(&s, mid);
    if pairs % 2 == 1 {
        upper
    } else {
        0.5 * (kth_pairwise(&s, mid - 1) + upper)
    }
}

/// Biased squared MMD between two scalar sets,
/// `mean k(x,x′) + mean k(y,y′) − 2·mean k(x,y)`, clamped at zero, with its
/// gradient with respect to every element. The bandwidth is treated as a
/// constant. When the clamp is active the gradient is zero.
pub fn mmd2(x: &[f64], y: &[f64], kernel: &KernelSpec) -> Result<Mmd> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Argument("MMD needs two non-empty sets".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("MMD input".into()));
    }
    let sigma = match kernel.bandwidth {
        Bandwidth::Fixed(s) => s,
        Bandwidth::Median => {
            let m = median_pairwise_distance(x, y);
            if m > 0.0 {
                m
            } else {
                1.0
            }
        }
    };
    let inv2s2 = 1.0 / (2.0 * sigma * sigma);
    let inv_s2 = 1.0 / (sigma * sigma);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let mut grad_x = vec![0.0; x.len()];
    let mut grad_y = vec![0.0; y.len()];

    // within-set sums: k(a,a) = 1 on the diagonal, off-diagonal pairs counted twice
    let within = |s: &[f64], g: &mut [f64], scale: f64| -> f64 {
        let mut sum = s.len() as f64;
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                let diff = s[i] - s[j];
                let k = (-diff * diff * inv2s2).exp();
                sum += 2.0 * k;
                // d/ds_i of 2k(s_i,s_j) = −2k·diff/σ²
                let dk = 2.0 * scale * k * diff * inv_s2;
                g[i] -= dk;
                g[j] += dk;
            }
        }
        sum * scale
    };
    let xx = within(x, &mut grad_x, 1.0 / (n * n));
    let yy = within(y, &mut grad_y, 1.0 / (m * m));

    let cross_scale = 2.0 / (n * m);
    let mut xy = 0.0;
    for (i, &a) in x.iter().enumerate() {
        for (j, &b) in y.iter().enumerate() {
            let diff = a - b;
            let k = (-diff * diff * inv2s2).exp();
            xy += k;
            // −2/(nm) · ∂k/∂a with ∂k/∂a = −k·diff/σ²
            let dk = cross_scale * k * diff * inv_s2;
            grad_x[i] += dk;
            grad_y[j] -= dk;
        }
    }
    let raw = xx + yy - cross_scale * xy;
    if raw <= 0.0 {
        grad_x.iter_mut().for_each(|g| *g = 0.0);
        grad_y.iter_mut().for_each(|g| *g = 0.0);
    }
    Ok(Mmd {
        value: raw.max(0.0),
        grad_x,
        grad_y,
        bandwidth: sigma,
    })
}
