use crate::dynamics::angular;
use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// T(t) = 2·(2πκ)·n(t) in photons/ns, from channel `n`.
pub fn transmission(n_series: &TimeSeries, kappa: f64) -> Result<TimeSeries> {
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(Error::invalid("kappa", "must be finite and non-negative"));
    }
    let n = n_series.channel("n")?;
    let scale = 2.0 * angular(kappa);
    let mut out = TimeSeries::new(n_series.t().to_vec())?
        .with_channel("T", n.iter().map(|v| scale * v).collect())?;
    for (k, v) in n_series.metadata() {
        out.set_metadata(k.clone(), v.clone());
    }
    Ok(out)
}

/// ΔT = T(s+c) − T(s) − T(c), channel `T` of each input.
pub fn differential_transmission(
    t_s: &TimeSeries,
    t_c: &TimeSeries,
    t_sc: &TimeSeries,
) -> Result<TimeSeries> {
    t_s.ensure_same_grid(t_c)?;
    t_s.ensure_same_grid(t_sc)?;
    let (s, c, sc) = (t_s.channel("T")?, t_c.channel("T")?, t_sc.channel("T")?);
    let diff = (0..s.len()).map(|k| sc[k] - s[k] - c[k]).collect();
    TimeSeries::new(t_s.t().to_vec())?.with_channel("dT", diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(n: Vec<f64>) -> TimeSeries {
        let t = (0..n.len()).map(|k| k as f64 * 0.01).collect();
        TimeSeries::new(t).unwrap().with_channel("n", n).unwrap()
    }

    #[test]
    fn transmission_examples() {
        let zero = transmission(&series(vec![0.0; 4]), 27.0).unwrap();
        assert!(zero.channel("T").unwrap().iter().all(|&v| v == 0.0));
        let t = transmission(&series(vec![0.01; 4]), 27.0).unwrap();
        for v in t.channel("T").unwrap() {
            assert!((v - 3.3929200658769765).abs() < 1e-12);
        }
        let missing = TimeSeries::new(vec![0.0])
            .unwrap()
            .with_channel("T", vec![1.0])
            .unwrap();
        assert!(matches!(
            transmission(&missing, 27.0),
            Err(Error::MissingChannel(_))
        ));
    }

    #[test]
    fn differential_rejects_grid_mismatch() {
        let a = transmission(&series(vec![1.0; 3]), 1.0).unwrap();
        let b = transmission(&series(vec![1.0; 4]), 1.0).unwrap();
        assert!(matches!(
            differential_transmission(&a, &a, &b),
            Err(Error::GridMismatch(_))
        ));
        let d = differential_transmission(&a, &a, &a).unwrap();
        for v in d.channel("dT").unwrap() {
            assert!((v + a.channel("T").unwrap()[0]).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn transmission_is_linear(n in proptest::collection::vec(0.0f64..2.0, 1..20), kappa in 0.0f64..40.0) {
            let once = transmission(&series(n.clone()), kappa).unwrap();
            let twice = transmission(&series(n.iter().map(|v| 2.0 * v).collect()), kappa).unwrap();
            for (a, b) in once.channel("T").unwrap().iter().zip(twice.channel("T").unwrap()) {
                prop_assert!((2.0 * a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }
}
