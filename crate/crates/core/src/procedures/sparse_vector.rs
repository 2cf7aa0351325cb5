use crate::error::{Error, Result};
use crate::noise::{sample_laplace, LaplaceScale, UniformSource};

/// Outcome of one SparseVector query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvAnswer {
    Above,
    Below,
}

/// AboveThreshold with `c` reports.
///
/// The threshold is noised with `Lap(2 sensitivity c / eps)` up front and
/// again after every `Above`; each query gets fresh `Lap(4 sensitivity c / eps)`.
/// A query is `Above` when its noisy value strictly exceeds the noisy
/// threshold. Answering stops after the `c`-th `Above`, so the output can be
/// shorter than `queries`.
pub fn sparse_vector<U: UniformSource + ?Sized>(
    queries: &[f64],
    sensitivity: f64,
    threshold: f64,
    c: u32,
    epsilon: f64,
    noise: &mut U,
) -> Result<Vec<SvAnswer>> {
    if c == 0 {
        return Err(Error::InvalidParameter("c must be at least 1".into()));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let base = sensitivity * f64::from(c) / epsilon;
    let threshold_scale = LaplaceScale::new(2.0 * base)?;
    let query_scale = LaplaceScale::new(4.0 * base)?;

    let mut noisy_threshold = threshold + sample_laplace(threshold_scale, noise);
    let mut count = 0;
    let mut out = Vec::with_capacity(queries.len());
    for &q in queries {
        let nu = sample_laplace(query_scale, noise);
        if q + nu > noisy_threshold {
            out.push(SvAnswer::Above);
            count += 1;
            if count >= c {
                break;
            }
            noisy_threshold = threshold + sample_laplace(threshold_scale, noise);
        } else {
            out.push(SvAnswer::Below);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::ScriptedUniform;
    use SvAnswer::*;

    #[test]
    fn zero_noise_is_a_threshold_scan() {
        let q = [0.1, 2.0, 1.0, 3.0, 0.0, 5.0];
        let out = sparse_vector(&q, 1.0, 1.0, 10, 1.0, &mut ScriptedUniform::zero_noise()).unwrap();
        assert_eq!(out, vec![Below, Above, Below, Above, Below, Above]);
    }

    #[test]
    fn halts_after_c_reports() {
        let q = [5.0, 5.0, 5.0, 5.0];
        let out = sparse_vector(&q, 1.0, 0.0, 2, 1.0, &mut ScriptedUniform::zero_noise()).unwrap();
        assert_eq!(out, vec![Above, Above]);
    }

    #[test]
    fn renoises_threshold_after_report() {
        // threshold noise: u=0.5 (0), query 1: u=0.5 (0) -> above,
        // new threshold from u=0.99 (large positive), query 2 u=0.5 -> below.
        let mut noise = ScriptedUniform::new(vec![0.5, 0.5, 0.99, 0.5]);
        let out = sparse_vector(&[1.0, 1.0], 1.0, 0.0, 5, 1.0, &mut noise).unwrap();
        assert_eq!(out, vec![Above, Below]);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut noise = ScriptedUniform::zero_noise();
        assert!(sparse_vector(&[1.0], 1.0, 0.0, 0, 1.0, &mut noise).is_err());
        assert!(sparse_vector(&[1.0], 1.0, 0.0, 1, 0.0, &mut noise).is_err());
    }
}
