use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Indexed access to a set of double-precision parameter tensors.
pub trait ParamStore {
    fn param_count(&self) -> usize;
    fn param(&self, i: usize) -> &Tensor<f64>;
    fn param_mut(&mut self, i: usize) -> &mut Tensor<f64>;
}

impl ParamStore for Vec<Tensor<f64>> {
    fn param_count(&self) -> usize {
        self.len()
    }

    fn param(&self, i: usize) -> &Tensor<f64> {
        &self[i]
    }

    fn param_mut(&mut self, i: usize) -> &mut Tensor<f64> {
        &mut self[i]
    }
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(tensor, element)` of the worst coordinate.
    pub worst: (usize, usize),
    pub analytic: f64,
    pub numeric: f64,
    pub coordinates: usize,
}

/// Compares `analytic` gradients against central differences of `f` on
/// `samples` coordinates (all of them when there are fewer). Coordinates
/// are drawn round-robin over tensors so every tensor is visited.
///
/// Relative error per coordinate is
/// `|a - n| / max(|a|, |n|, 1e-8)` with `n = (f(θ+εe) - f(θ-εe)) / 2ε`.
pub fn grad_check<P, F>(
    params: &mut P,
    analytic: &[Vec<f64>],
    mut f: F,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<GradCheckReport>
where
    P: ParamStore + ?Sized,
    F: FnMut(&P) -> Result<f64>,
{
    let n_tensors = params.param_count();
    if analytic.len() != n_tensors {
        return Err(Error::InvalidShape(format!(
            "{} analytic gradients for {n_tensors} tensors",
            analytic.len()
        )));
    }
    for (i, g) in analytic.iter().enumerate() {
        if g.len() != params.param(i).numel() {
            return Err(Error::InvalidShape(format!(
                "analytic gradient {i} has {} entries, tensor has {}",
                g.len(),
                params.param(i).numel()
            )));
        }
    }
    let total: usize = (0..n_tensors).map(|i| params.param(i).numel()).sum();
    let coords: Vec<(usize, usize)> = if total <= samples {
        (0..n_tensors)
            .flat_map(|i| (0..params.param(i).numel()).map(move |j| (i, j)))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..samples)
            .map(|s| {
                let i = s % n_tensors;
                (i, rng.gen_range(0..params.param(i).numel()))
            })
            .collect()
    };

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: (0, 0),
        analytic: 0.0,
        numeric: 0.0,
        coordinates: coords.len(),
    };
    for (i, j) in coords {
        let orig = params.param(i).data()[j];
        params.param_mut(i).data_mut()[j] = orig + eps;
        let plus = f(params)?;
        params.param_mut(i).data_mut()[j] = orig - eps;
        let minus = f(params)?;
        params.param_mut(i).data_mut()[j] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic[i][j];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        if rel > report.max_rel_error || !rel.is_finite() {
            report.max_rel_error = rel;
            report.worst = (i, j);
            report.analytic = a;
            report.numeric = numeric;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        // f(x) = Σ c_i x_i², ∇f = 2 c_i x_i
        let c = [0.5, 2.0, -1.5, 3.0];
        let mut params = vec![Tensor::<f64>::from_f64(&[4], &[1.0, -2.0, 0.3, 0.7]).unwrap()];
        let analytic = vec![params[0]
            .data()
            .iter()
            .zip(&c)
            .map(|(x, c)| 2.0 * c * x)
            .collect::<Vec<_>>()];
        let report = grad_check(
            &mut params,
            &analytic,
            |p| Ok(p[0].data().iter().zip(&c).map(|(x, c)| c * x * x).sum()),
            1e-5,
            100,
            0,
        )
        .unwrap();
        assert!(report.max_rel_error < 1e-8, "{report:?}");
        assert_eq!(report.coordinates, 4);
    }

    #[test]
    fn detects_wrong_gradient() {
        let mut params = vec![Tensor::<f64>::from_f64(&[2], &[1.0, 1.0]).unwrap()];
        let wrong = vec![vec![1.0, 2.0]];
        let report = grad_check(
            &mut params,
            &wrong,
            |p| Ok(p[0].data().iter().map(|x| x * x).sum()),
            1e-5,
            10,
            0,
        )
        .unwrap();
        assert!(report.max_rel_error > 0.4);
        assert_eq!(report.worst, (0, 0));
    }
}
