//! Distributions over non-empty coalitions and the probabilistic bounds
//! learners and verifiers rely on.
//!
//! Every variant samples non-empty coalitions only. λ-bounded distributions
//! are realized as size-tilted ones: the mass of a coalition depends only on
//! its size, so the point-mass ratio is exactly `max g / min g` and sampling
//! costs O(n).

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coalition::Coalition;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub enum CoalitionDistribution {
    Uniform { n: usize },
    SizeTilted(SizeTilted),
    Family(FamilyUniform),
    Adversarial(Adversarial),
}

#[derive(Clone, Debug)]
pub struct SizeTilted {
    n: usize,
    /// Weight per size, `g[s - 1]` for `s ∈ [1, n]`.
    g: Vec<f64>,
    /// `P(|C| = s)`, index `s` (index 0 unused).
    size_pmf: Vec<f64>,
    bucket: BucketSampler,
}

#[derive(Clone, Debug)]
pub struct FamilyUniform {
    n: usize,
    support: Vec<Coalition>,
    index: HashSet<Coalition>,
}

#[derive(Clone, Debug)]
pub struct Adversarial {
    n: usize,
    family: Vec<Coalition>,
    index: HashSet<Coalition>,
    lambda: f64,
    /// Point mass on family members; off-family members get `p / λ`.
    p: f64,
}

/// Exact integer bucket selection when weights are integral and the total fits
/// in 128 bits; compensated floating cumulative weights otherwise.
#[derive(Clone, Debug)]
enum BucketSampler {
    Exact { cumulative: Vec<u128> },
    Float { cumulative: Vec<f64> },
}

impl BucketSampler {
    /// `weights[k]` is the weight of bucket `k`.
    fn exact(weights: &[u128]) -> Option<Self> {
        let mut acc: u128 = 0;
        let mut cumulative = Vec::with_capacity(weights.len());
        for &w in weights {
            acc = acc.checked_add(w)?;
            cumulative.push(acc);
        }
        (acc > 0).then_some(BucketSampler::Exact { cumulative })
    }

    fn float(weights: &[f64]) -> Self {
        // Kahan-compensated running sum
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        let mut cumulative = Vec::with_capacity(weights.len());
        for &w in weights {
            let y = w - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            cumulative.push(sum);
        }
        BucketSampler::Float { cumulative }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            BucketSampler::Exact { cumulative } => {
                let total = *cumulative.last().unwrap();
                let u = rng.gen_range(0..total);
                cumulative.partition_point(|&c| c <= u)
            }
            BucketSampler::Float { cumulative } => {
                let total = *cumulative.last().unwrap();
                let u = rng.gen::<f64>() * total;
                cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
            }
        }
    }
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// `C(n, k)` in 128 bits, if it fits.
pub fn binomial_u128(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Number of non-empty coalitions, `2^n - 1`, as a float.
pub fn coalition_count(n: usize) -> f64 {
    2f64.powi(n as i32) - 1.0
}

fn uniform_nonempty<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Coalition {
    assert!(n > 0, "no non-empty coalition over zero agents");
    let words = n.div_ceil(64);
    let mut buf = vec![0u64; words];
    loop {
        for (w, slot) in buf.iter_mut().enumerate() {
            let bits = (n - 64 * w).min(64);
            let r: u64 = rng.gen();
            *slot = if bits == 64 { r } else { r & ((1u64 << bits) - 1) };
        }
        if buf.iter().any(|&w| w != 0) {
            return Coalition::from_words(&buf);
        }
    }
}

fn uniform_of_size<R: Rng + ?Sized>(n: usize, size: usize, rng: &mut R) -> Coalition {
    index::sample(rng, n, size).into_iter().collect()
}

fn validate_support(n: usize, support: &[Coalition]) -> Result<HashSet<Coalition>> {
    let mut index = HashSet::with_capacity(support.len());
    for c in support {
        if c.is_empty() {
            return Err(Error::InvalidDistribution("support contains the empty coalition".into()));
        }
        if c.span() > n {
            return Err(Error::InvalidDistribution(format!("support coalition {c:?} exceeds n = {n}")));
        }
        if !index.insert(c.clone()) {
            return Err(Error::InvalidDistribution(format!("duplicate support coalition {c:?}")));
        }
    }
    Ok(index)
}

impl CoalitionDistribution {
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDistribution("n must be positive".into()));
        }
        Ok(Self::Uniform { n })
    }

    /// Mass of `S` proportional to `g(|S|)`.
    pub fn size_tilted(g: Vec<f64>) -> Result<Self> {
        let n = g.len();
        if n == 0 {
            return Err(Error::InvalidDistribution("size weights must cover [1, n] with n > 0".into()));
        }
        if g.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
            return Err(Error::InvalidDistribution("size weights must be finite and strictly positive".into()));
        }
        // P(|C| = s) ∝ g(s) C(n, s), normalized in log space
        let logw: Vec<f64> = (1..=n).map(|s| g[s - 1].ln() + ln_binomial(n, s)).collect();
        let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let rel: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = rel.iter().sum();
        let mut size_pmf = vec![0.0];
        size_pmf.extend(rel.iter().map(|r| r / total));

        let integral = g.iter().all(|w| w.fract() == 0.0 && *w <= u64::MAX as f64);
        let exact = integral
            .then(|| (1..=n).map(|s| binomial_u128(n, s)?.checked_mul(g[s - 1] as u128)).collect::<Option<Vec<u128>>>())
            .flatten()
            .and_then(|w| BucketSampler::exact(&w));
        let bucket = exact.unwrap_or_else(|| BucketSampler::float(&rel));
        Ok(Self::SizeTilted(SizeTilted { n, g, size_pmf, bucket }))
    }

    /// Uniform over an explicit support. Not λ-bounded.
    pub fn family_uniform(n: usize, support: Vec<Coalition>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let index = validate_support(n, &support)?;
        Ok(Self::Family(FamilyUniform { n, support, index }))
    }

    /// Two-level λ-bounded distribution: mass `p` on family members, `p / λ` elsewhere.
    pub fn adversarial_bounded(family: Vec<Coalition>, n: usize, lambda: f64) -> Result<Self> {
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(Error::InvalidDistribution(format!("lambda must be >= 1, got {lambda}")));
        }
        if n == 0 {
            return Err(Error::InvalidDistribution("n must be positive".into()));
        }
        let index = validate_support(n, &family)?;
        let p = adversarial_point_mass(family.len(), n, lambda);
        Ok(Self::Adversarial(Adversarial { n, family, index, lambda, p }))
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Uniform { n } => *n,
            Self::SizeTilted(d) => d.n,
            Self::Family(d) => d.n,
            Self::Adversarial(d) => d.n,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Coalition {
        match self {
            Self::Uniform { n } => uniform_nonempty(*n, rng),
            Self::SizeTilted(d) => {
                let size = d.bucket.sample(rng) + 1;
                uniform_of_size(d.n, size, rng)
            }
            Self::Family(d) => d.support[rng.gen_range(0..d.support.len())].clone(),
            Self::Adversarial(d) => {
                let family_mass = d.p * d.family.len() as f64;
                if !d.family.is_empty() && rng.gen::<f64>() < family_mass {
                    d.family[rng.gen_range(0..d.family.len())].clone()
                } else {
                    loop {
                        let c = uniform_nonempty(d.n, rng);
                        if !d.index.contains(&c) {
                            return c;
                        }
                    }
                }
            }
        }
    }

    /// `P(C = S)`.
    pub fn point_mass(&self, coalition: &Coalition) -> f64 {
        if coalition.is_empty() || coalition.span() > self.n() {
            return 0.0;
        }
        match self {
            Self::Uniform { n } => 1.0 / coalition_count(*n),
            Self::SizeTilted(d) => {
                let s = coalition.size();
                (d.size_pmf[s].ln() - ln_binomial(d.n, s)).exp()
            }
            Self::Family(d) => {
                if d.index.contains(coalition) {
                    1.0 / d.support.len() as f64
                } else {
                    0.0
                }
            }
            Self::Adversarial(d) => {
                if d.index.contains(coalition) {
                    d.p
                } else {
                    d.p / d.lambda
                }
            }
        }
    }

    /// Point mass of an arbitrary coalition of the given size, for variants
    /// whose masses depend on size only.
    pub fn size_point_mass(&self, size: usize) -> Option<f64> {
        match self {
            Self::Uniform { n } => (1..=*n).contains(&size).then(|| 1.0 / coalition_count(*n)),
            Self::SizeTilted(d) => {
                (1..=d.n).contains(&size).then(|| (d.size_pmf[size].ln() - ln_binomial(d.n, size)).exp())
            }
            _ => None,
        }
    }

    /// `P(|C| = s)` for `s ∈ [0, n]`.
    pub fn size_pmf(&self) -> Vec<f64> {
        let n = self.n();
        match self {
            Self::Uniform { .. } => {
                let total = coalition_count(n);
                let mut v = vec![0.0];
                v.extend((1..=n).map(|s| (ln_binomial(n, s) - total.ln()).exp()));
                v
            }
            Self::SizeTilted(d) => d.size_pmf.clone(),
            Self::Family(d) => {
                let mut v = vec![0.0; n + 1];
                let w = 1.0 / d.support.len() as f64;
                for c in &d.support {
                    v[c.size()] += w;
                }
                v
            }
            Self::Adversarial(d) => {
                let mut in_family = vec![0usize; n + 1];
                for c in &d.family {
                    in_family[c.size()] += 1;
                }
                let mut v = vec![0.0];
                for (s, &inside) in in_family.iter().enumerate().skip(1) {
                    let others = ln_binomial(n, s).exp() - inside as f64;
                    v.push(d.p * inside as f64 + d.p / d.lambda * others);
                }
                v
            }
        }
    }

    /// `μ = E|C|`.
    pub fn mean_size(&self) -> f64 {
        self.size_pmf().iter().enumerate().map(|(s, p)| s as f64 * p).sum()
    }

    /// Exact λ: the largest ratio between two point masses.
    pub fn lambda(&self) -> Result<f64> {
        match self {
            Self::Uniform { .. } => Ok(1.0),
            Self::SizeTilted(d) => {
                let max = d.g.iter().cloned().fold(f64::MIN, f64::max);
                let min = d.g.iter().cloned().fold(f64::MAX, f64::min);
                Ok(max / min)
            }
            Self::Family(_) => Err(Error::UnboundedLambda),
            Self::Adversarial(d) => {
                let off_family = coalition_count(d.n) - d.family.len() as f64;
                Ok(if d.family.is_empty() || off_family <= 0.0 { 1.0 } else { d.lambda })
            }
        }
    }

    /// The coalitions with positive mass, when given explicitly.
    pub fn explicit_support(&self) -> Option<&[Coalition]> {
        match self {
            Self::Family(d) => Some(&d.support),
            _ => None,
        }
    }

    /// The boosted family of an adversarial distribution, with its `(p, λ)`.
    pub fn adversarial_parts(&self) -> Option<(&[Coalition], f64, f64)> {
        match self {
            Self::Adversarial(d) => Some((&d.family, d.p, d.lambda)),
            _ => None,
        }
    }

    pub fn size_weights(&self) -> Option<&[f64]> {
        match self {
            Self::SizeTilted(d) => Some(&d.g),
            _ => None,
        }
    }
}

/// `λ`. Fails for explicit-support distributions.
pub fn lambda_of(dist: &CoalitionDistribution) -> Result<f64> {
    dist.lambda()
}

/// On-family point mass `λ / (|F|(λ - 1) + 2^n - 1)` of the two-level distribution.
pub fn adversarial_point_mass(family_size: usize, n: usize, lambda: f64) -> f64 {
    lambda / (family_size as f64 * (lambda - 1.0) + coalition_count(n))
}

/// Lower and upper bounds on the mass of a family covering an `a`-fraction of
/// `2^N` under a λ-bounded distribution.
pub fn bartlett_bounds(a: f64, lambda: f64) -> (f64, f64) {
    assert!((0.0..=1.0).contains(&a), "a must lie in [0, 1]");
    assert!(lambda >= 1.0, "lambda must be >= 1");
    let lo = a / (a + lambda * (1.0 - a));
    let hi = lambda * a / (lambda * a + 1.0 - a);
    (lo, hi)
}

/// `n / (λ + 1) <= μ <= λ n / (λ + 1)`.
pub fn mean_size_bounds(n: usize, lambda: f64) -> (f64, f64) {
    let n = n as f64;
    (n / (lambda + 1.0), lambda * n / (lambda + 1.0))
}

/// Relative half-width `Δ = sqrt(3 (λ + 1) ln(4 / ε) / n)`, natural log.
pub fn size_deviation(n: usize, lambda: f64, eps: f64) -> f64 {
    (3.0 * (lambda + 1.0) * (4.0 / eps).ln() / n as f64).sqrt()
}

const ENDPOINT_TOLERANCE: f64 = 1e-9;

/// Integer coalition sizes inside an open real interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeInterval {
    pub lo: f64,
    pub hi: f64,
    pub sizes: Vec<usize>,
}

impl SizeInterval {
    /// `{ s ∈ [1, n] : lo < s < hi }`. A size within relative `1e-9` of an
    /// endpoint counts as on it, so rounding in `(1 ± Δ)μ` cannot admit it.
    pub fn open(lo: f64, hi: f64, n: usize) -> Self {
        let inside = |s: f64| {
            let tol = ENDPOINT_TOLERANCE * s;
            lo < s - tol && s + tol < hi
        };
        let sizes = (1..=n).filter(|&s| inside(s as f64)).collect();
        Self { lo, hi, sizes }
    }

    /// `((1 - Δ) μ, (1 + Δ) μ)`.
    pub fn around(mu: f64, delta: f64, n: usize) -> Self {
        Self::open((1.0 - delta) * mu, (1.0 + delta) * mu, n)
    }

    /// An interval given directly by its size set (endpoints hug it).
    pub fn from_sizes(mut sizes: Vec<usize>) -> Self {
        sizes.sort_unstable();
        sizes.dedup();
        let lo = sizes.first().map_or(0.0, |&s| s as f64 - 0.5);
        let hi = sizes.last().map_or(0.0, |&s| s as f64 + 0.5);
        Self { lo, hi, sizes }
    }

    pub fn contains(&self, size: usize) -> bool {
        self.sizes.binary_search(&size).is_ok()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    /// Keeps only sizes accepted by `keep`.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Self {
        Self { lo: self.lo, hi: self.hi, sizes: self.sizes.iter().copied().filter(|&s| keep(s)).collect() }
    }
}

/// `I_D(ε)` for a known mean size.
pub fn size_interval(mu: f64, lambda: f64, eps: f64, n: usize) -> SizeInterval {
    assert!(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
    SizeInterval::around(mu, size_deviation(n, lambda, eps), n)
}

/// Serializable distribution description; coalitions are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistSpec {
    Uniform,
    SizeTilted { g: Vec<f64> },
    Family { support: Vec<Vec<usize>> },
    Adversarial { family: Vec<Vec<usize>>, lambda: f64 },
}

fn from_one_based(n: usize, lists: &[Vec<usize>]) -> Result<Vec<Coalition>> {
    lists
        .iter()
        .map(|l| {
            l.iter()
                .map(|&a| {
                    if a == 0 || a > n {
                        Err(Error::InvalidDistribution(format!("agent {a} out of range [1, {n}]")))
                    } else {
                        Ok(a - 1)
                    }
                })
                .collect::<Result<Coalition>>()
        })
        .collect()
}

impl DistSpec {
    pub fn build(&self, n: usize) -> Result<CoalitionDistribution> {
        match self {
            DistSpec::Uniform => CoalitionDistribution::uniform(n),
            DistSpec::SizeTilted { g } => {
                if g.len() != n {
                    return Err(Error::InvalidDistribution(format!("size_tilted needs {n} weights, got {}", g.len())));
                }
                CoalitionDistribution::size_tilted(g.clone())
            }
            DistSpec::Family { support } => CoalitionDistribution::family_uniform(n, from_one_based(n, support)?),
            DistSpec::Adversarial { family, lambda } => {
                CoalitionDistribution::adversarial_bounded(from_one_based(n, family)?, n, *lambda)
            }
        }
    }

    /// Size weights rising linearly from 1 to `λ`.
    pub fn linear_tilt(n: usize, lambda: f64) -> Self {
        let g = (1..=n)
            .map(|s| if n == 1 { 1.0 } else { 1.0 + (lambda - 1.0) * (s - 1) as f64 / (n - 1) as f64 })
            .collect();
        DistSpec::SizeTilted { g }
    }
}
