use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Grads, ParamStore, Scalar};

/// Worst element of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamCheck {
    pub name: String,
    pub checked: usize,
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub eps: f64,
    pub params: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.params.iter().map(|p| p.max_rel_error).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&ParamCheck> {
        self.params
            .iter()
            .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
    }

    pub fn elements_checked(&self) -> usize {
        self.params.iter().map(|p| p.checked).sum()
    }
}

/// `|a - n| / max(|a|, |n|, 1e-8)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares `analytic` against central differences of `loss` with step
/// `eps`. Every element is checked unless `sample` gives `(per_param,
/// seed)`, in which case at most `per_param` random elements of each
/// parameter are. Parameter values are restored exactly afterwards.
///
/// `loss` may evaluate in a wider type than `f64`; the difference
/// quotient is then formed before rounding back.
pub fn gradient_check<F, L>(
    params: &mut ParamStore<f64>,
    analytic: &Grads<f64>,
    eps: f64,
    sample_elements: Option<(usize, u64)>,
    mut loss: F,
) -> GradCheckReport
where
    F: FnMut(&ParamStore<f64>) -> L,
    L: Scalar,
{
    let mut rng = sample_elements.map(|(_, seed)| ChaCha8Rng::seed_from_u64(seed));
    let ids: Vec<_> = params.ids().collect();
    let mut report = Vec::with_capacity(ids.len());
    for id in ids {
        let len = params.get(id).value.len();
        let indices: Vec<usize> = match (sample_elements, rng.as_mut()) {
            (Some((n, _)), Some(rng)) if n < len => {
                let mut v = sample(rng, len, n).into_vec();
                v.sort_unstable();
                v
            }
            _ => (0..len).collect(),
        };
        let grad = analytic.get(id);
        let mut check = ParamCheck {
            name: params.get(id).name.clone(),
            checked: indices.len(),
            max_rel_error: 0.0,
            worst_index: 0,
            analytic: 0.0,
            numeric: 0.0,
        };
        let mut first = true;
        for k in indices {
            let original = params.get(id).value.data()[k];
            let (up, down) = (original + eps, original - eps);
            params.get_mut(id).value.data_mut()[k] = up;
            let plus = loss(params);
            params.get_mut(id).value.data_mut()[k] = down;
            let minus = loss(params);
            params.get_mut(id).value.data_mut()[k] = original;

            let step = L::of(up) - L::of(down);
            let numeric = ((plus - minus) / step).f64();
            let a = grad.map_or(0.0, |g| g[k]);
            let err = relative_error(a, numeric);
            if first || err > check.max_rel_error {
                first = false;
                check.max_rel_error = err;
                check.worst_index = k;
                check.analytic = a;
                check.numeric = numeric;
            }
        }
        report.push(check);
    }
    GradCheckReport { eps, params: report }
}
