use crate::{Error, Result};

/// `ln e ≈ intercept + slope · ln t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Ordinary least squares in log-log coordinates.
pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::Precondition(format!("rate fit needs at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|(t, e)| !(*t > 0.0 && *e > 0.0)) {
        return Err(Error::Precondition("rate fit needs positive times and errors".into()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, e)| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Precondition("rate fit needs at least two distinct times".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok(RateFit { slope, intercept: my - slope * mx })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [10.0, 100.0, 1000.0, 1e4].iter().map(|&t: &f64| (t, t.powf(-0.5))).collect();
        let f = rate_fit(&pts).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!(f.intercept.abs() < 1e-12);
    }

    #[test]
    fn constant_series() {
        let f = rate_fit(&[(1.0, 2.0), (5.0, 2.0), (9.0, 2.0)]).unwrap();
        assert!(f.slope.abs() < 1e-15);
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = Stream::new(2024);
        let pts: Vec<(f64, f64)> = (1..=20)
            .map(|i| {
                let t = 50.0 * i as f64 * i as f64;
                (t, t.powf(-0.5) * (1.0 + 0.05 * (2.0 * rng.uniform() - 1.0)))
            })
            .collect();
        let f = rate_fit(&pts).unwrap();
        assert!((-0.55..=-0.45).contains(&f.slope), "{}", f.slope);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(rate_fit(&[(1.0, 1.0), (2.0, 1.0)]).is_err());
        assert!(rate_fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
    }
}
