//! Log-space combinatorial and distributional primitives.
//!
//! Binomial coefficients and binomial/hypergeometric masses are evaluated
//! through the Stirling-difference decomposition of `ln n!` (the saddle-point
//! form popularised by Loader's `dbinom`), which keeps the relative error of
//! every mass near machine precision even where the coefficients themselves
//! overflow an `f64` by thousands of orders of magnitude.

use crate::error::{domain, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A probability stored as its natural logarithm.
///
/// `LogProb::ZERO` is `-inf`; every finite value is `<= 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogProb(f64);

impl LogProb {
    pub const ZERO: LogProb = LogProb(f64::NEG_INFINITY);
    pub const ONE: LogProb = LogProb(0.0);

    /// Wraps a log value, rejecting NaN and positive values.
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value > 0.0 {
            return Err(domain(format!("log-probability must be <= 0, got {value}")));
        }
        Ok(LogProb(value))
    }

    pub fn from_prob(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(domain(format!("probability must lie in [0, 1], got {p}")));
        }
        Ok(LogProb(p.ln()))
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn prob(self) -> f64 {
        self.0.exp().clamp(0.0, 1.0)
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
}

/// Stirling remainder at n = 1..=15, to 22 significant digits.
const STIRLERR_SMALL: [f64; 16] = [
    f64::INFINITY,
    0.081_061_466_795_327_258_219_67,
    0.041_340_695_955_409_294_093_82,
    0.027_677_925_684_998_339_148_79,
    0.020_790_672_103_765_093_111_52,
    0.016_644_691_189_821_192_163_19,
    0.013_876_128_823_070_747_998_75,
    0.011_896_709_945_891_770_095_06,
    0.010_411_265_261_972_096_497_48,
    0.009_255_462_182_712_732_917_729,
    0.008_330_563_433_362_871_256_469,
    0.007_573_675_487_951_840_794_972,
    0.006_942_840_107_209_529_865_664,
    0.006_408_994_188_004_207_068_44,
    0.005_951_370_112_758_847_735_624,
    0.005_554_733_551_962_801_371_039,
];

/// `ln(n!) - [(n + 1/2) ln n - n + ln(2 pi) / 2]`, the Stirling remainder.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;

    if n <= 15.0 {
        return STIRLERR_SMALL[n as usize];
    }
    let nn = n * n;
    if n > 500.0 {
        return (S0 - S1 / nn) / n;
    }
    if n > 80.0 {
        return (S0 - (S1 - S2 / nn) / nn) / n;
    }
    if n > 35.0 {
        return (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n;
    }
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
}

/// Deviance term `x ln(x / np) + np - x`, accurate when `x` is close to `np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        return s;
    }
    x * (x / np).ln() + np - x
}

/// `ln C(n, k)`; `-inf` when `k < 0` or `k > n`.
pub fn log_choose(n: u64, k: i64) -> f64 {
    if k < 0 || k as u64 > n {
        return f64::NEG_INFINITY;
    }
    let r = (k as u64).min(n - k as u64);
    if r == 0 {
        return 0.0;
    }
    let (nf, rf) = (n as f64, r as f64);
    let sf = (n - r) as f64;
    let frac = rf / nf;
    rf * (nf / rf).ln() - sf * (-frac).ln_1p() - 0.5 * (LN_2PI + rf.ln() + (-frac).ln_1p())
        + stirlerr(nf)
        - stirlerr(rf)
        - stirlerr(sf)
}

/// `ln` of the Binomial(m, p) mass at `x`, with `q = 1 - p` supplied by the
/// caller so that it can be formed without cancellation.
pub(crate) fn ln_binom_pmf_pq(x: u64, m: u64, p: f64, q: f64) -> f64 {
    if x > m {
        return f64::NEG_INFINITY;
    }
    if p == 0.0 {
        return if x == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if x == m { 0.0 } else { f64::NEG_INFINITY };
    }
    let mf = m as f64;
    if x == 0 {
        if m == 0 {
            return 0.0;
        }
        return if p < q {
            mf * (-p).ln_1p()
        } else {
            mf * q.ln()
        };
    }
    if x == m {
        return if q < p {
            mf * (-q).ln_1p()
        } else {
            mf * p.ln()
        };
    }
    let xf = x as f64;
    let yf = (m - x) as f64;
    let lc = stirlerr(mf) - stirlerr(xf) - stirlerr(yf) - bd0(xf, mf * p) - bd0(yf, mf * q);
    let lf = LN_2PI + xf.ln() + (-xf / mf).ln_1p();
    lc - 0.5 * lf
}

fn check_prob(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("probability must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// `ln` of the Binomial(m, p) mass at `j`, `-inf` off the support.
pub fn ln_binom_pmf(m: u64, p: f64, j: u64) -> Result<f64> {
    check_prob(p)?;
    Ok(ln_binom_pmf_pq(j, m, p, 1.0 - p))
}

/// `C(m, j) p^j (1 - p)^(m - j)`.
pub fn binom_pmf(m: u64, p: f64, j: u64) -> Result<f64> {
    check_prob(p)?;
    if j > m {
        return Err(domain(format!("binomial count {j} exceeds trials {m}")));
    }
    Ok(ln_binom_pmf_pq(j, m, p, 1.0 - p).exp())
}

/// `P(X <= j)` for `X ~ Binomial(m, p)`, summing the masses smallest first.
pub fn binom_cdf(m: u64, p: f64, j: u64) -> Result<f64> {
    check_prob(p)?;
    if j > m {
        return Err(domain(format!("binomial count {j} exceeds trials {m}")));
    }
    let q = 1.0 - p;
    let mut terms: Vec<f64> = (0..=j).map(|x| ln_binom_pmf_pq(x, m, p, q).exp()).collect();
    terms.sort_by(f64::total_cmp);
    Ok(terms.iter().sum::<f64>().clamp(0.0, 1.0))
}

fn check_frame(population: u64, marked: u64, sample: u64) -> Result<()> {
    if sample > population {
        return Err(domain(format!(
            "sample size {sample} exceeds population {population}"
        )));
    }
    if marked > population {
        return Err(domain(format!(
            "attribute count {marked} exceeds population {population}"
        )));
    }
    Ok(())
}

/// `ln P(a | A)` under simple random sampling without replacement, or `-inf`
/// off the support. Callers must have validated `n <= N` and `A <= N`.
pub(crate) fn ln_hypergeom_pmf(population: u64, marked: u64, sample: u64, observed: u64) -> f64 {
    if observed > marked || observed > sample || sample - observed > population - marked {
        return f64::NEG_INFINITY;
    }
    if sample == 0 {
        return 0.0;
    }
    if sample == population {
        return if observed == marked {
            0.0
        } else {
            f64::NEG_INFINITY
        };
    }
    let p = sample as f64 / population as f64;
    let q = (population - sample) as f64 / population as f64;
    ln_binom_pmf_pq(observed, marked, p, q)
        + ln_binom_pmf_pq(sample - observed, population - marked, p, q)
        - ln_binom_pmf_pq(sample, population, p, q)
}

/// `C(A, a) C(N - A, n - a) / C(N, n)`; zero when the counts are incompatible.
pub fn hypergeom_pmf(population: u64, marked: u64, sample: u64, observed: u64) -> Result<f64> {
    check_frame(population, marked, sample)?;
    Ok(ln_hypergeom_pmf(population, marked, sample, observed).exp())
}

/// Probability that a sample of `n` contains none of the `A` marked items.
pub fn hypergeom_sf_zero(population: u64, marked: u64, sample: u64) -> Result<f64> {
    hypergeom_pmf(population, marked, sample, 0)
}

/// `ln(sum(exp(t)))` with the max-shift; `-inf` for an empty slice.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let mut scaled: Vec<f64> = terms.iter().map(|t| (t - max).exp()).collect();
    scaled.sort_by(f64::total_cmp);
    max + scaled.iter().sum::<f64>().ln()
}

/// `ln(1 - exp(x))` for `x <= 0`.
pub(crate) fn ln_1m_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// Half the L1 distance between two mass functions of equal length.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
