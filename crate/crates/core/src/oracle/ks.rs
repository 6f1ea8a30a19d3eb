//! One-sample Kolmogorov–Smirnov distance against a selected-gain law.

use crate::error::{Error, Result};
use crate::oracle::pdf::{cdf, PdfSpec};

pub const MIN_SAMPLES: usize = 10_000;

/// `sup_x |F_n(x) - F(x)|` between the empirical CDF of `samples` and the
/// law described by `spec`.
pub fn ks_distance(samples: &[f64], spec: &PdfSpec) -> Result<f64> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            got: samples.len(),
            min: MIN_SAMPLES,
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(spec, x)?;
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::pdf::Link;
    use crate::policy::SelectionPolicy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::Exp1;

    #[test]
    fn matching_law_is_close() {
        let spec = PdfSpec::new(SelectionPolicy::Bsl, Link::Own, 2).unwrap();
        let d = ks_distance(&spec.draw(1_000_000, 1), &spec).unwrap();
        assert!(d < 0.005, "{d}");
    }

    #[test]
    fn raw_exponentials_match_bsl_interference() {
        let spec = PdfSpec::new(SelectionPolicy::Bsl, Link::Interference, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let xs: Vec<f64> = (0..1_000_000).map(|_| rng.sample(Exp1)).collect();
        assert!(ks_distance(&xs, &spec).unwrap() < 0.005);
    }

    #[test]
    fn mismatched_law_is_far() {
        let bsl = PdfSpec::new(SelectionPolicy::Bsl, Link::Relay, 2).unwrap();
        let bpl = PdfSpec::new(SelectionPolicy::Bpl, Link::Relay, 2).unwrap();
        let d = ks_distance(&bsl.draw(200_000, 3), &bpl).unwrap();
        assert!(d > 0.05, "{d}");
    }

    #[test]
    fn needs_enough_samples() {
        let spec = PdfSpec::new(SelectionPolicy::Bsl, Link::Own, 2).unwrap();
        assert!(matches!(
            ks_distance(&[1.0; 10], &spec),
            Err(Error::TooFewSamples { got: 10, .. })
        ));
    }
}
