//! Small local minimisers used by the likelihood fits.
//!
//! * [`nelder_mead`] – box-constrained simplex search; trial points are
//!   projected onto the box.
//! * [`bfgs`] – quasi-Newton with central-difference gradients and Armijo
//!   backtracking, for smooth objectives on unconstrained (transformed)
//!   coordinates.
//!
//! Non-finite objective values are treated as `+∞`.

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evaluations: usize,
    /// Stop when the spread of simplex values falls below this.
    pub value_tolerance: f64,
    /// ... and the simplex diameter below this.
    pub step_tolerance: f64,
    /// Edge length of the initial simplex, per coordinate.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evaluations: 2000,
            value_tolerance: 1e-10,
            step_tolerance: 1e-7,
            initial_step: 0.25,
        }
    }
}

fn sanitize(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((xi, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *xi = xi.clamp(*lo, *hi);
    }
}

pub fn nelder_mead<F>(
    mut objective: F,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    options: &NelderMeadOptions,
) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = start.len();
    assert!(dim > 0 && lower.len() == dim && upper.len() == dim);
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        sanitize(objective(x))
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    let mut x0 = start.to_vec();
    project(&mut x0, lower, upper);
    simplex.push(x0.clone());
    for i in 0..dim {
        let mut v = x0.clone();
        let step = options.initial_step;
        // step away from an active bound
        v[i] = if v[i] + step <= upper[i] { v[i] + step } else { v[i] - step };
        project(&mut v, lower, upper);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    while evals < options.max_evaluations {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[dim] - values[0];
        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread.is_finite() && spread <= options.value_tolerance && diameter <= options.step_tolerance
        {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|v| v[j]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[dim])
                .map(|(c, w)| c + t * (c - w))
                .collect();
            project(&mut p, lower, upper);
            p
        };

        let reflected = along(alpha);
        let f_r = eval(&reflected, &mut evals);
        if f_r < values[0] {
            let expanded = along(gamma);
            let f_e = eval(&expanded, &mut evals);
            if f_e < f_r {
                simplex[dim] = expanded;
                values[dim] = f_e;
            } else {
                simplex[dim] = reflected;
                values[dim] = f_r;
            }
            continue;
        }
        if f_r < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = f_r;
            continue;
        }
        let contracted = if f_r < values[dim] { along(rho) } else { along(-rho) };
        let f_c = eval(&contracted, &mut evals);
        if f_c < values[dim].min(f_r) {
            simplex[dim] = contracted;
            values[dim] = f_c;
            continue;
        }
        // shrink towards the best vertex
        for i in 1..=dim {
            let shrunk: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, v)| b + sigma * (v - b))
                .collect();
            values[i] = eval(&shrunk, &mut evals);
            simplex[i] = shrunk;
        }
    }

    let best = (0..=dim)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        evaluations: evals,
        converged,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iterations: usize,
    /// Stop when the largest gradient component falls below this.
    pub gradient_tolerance: f64,
    /// ... or when an iteration improves the value by less than this
    /// (relative).
    pub value_tolerance: f64,
    /// Relative step for central differences.
    pub difference_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iterations: 400,
            gradient_tolerance: 1e-7,
            value_tolerance: 1e-13,
            difference_step: 1e-6,
        }
    }
}

pub fn bfgs<F>(mut objective: F, start: &[f64], options: &BfgsOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = start.len();
    let mut evals = 0usize;
    let mut f = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        sanitize(objective(x))
    };
    let gradient = |x: &[f64], evals: &mut usize, f: &mut dyn FnMut(&[f64], &mut usize) -> f64| {
        let mut g = vec![0.0; dim];
        let mut probe = x.to_vec();
        for i in 0..dim {
            let h = options.difference_step * x[i].abs().max(1.0);
            probe[i] = x[i] + h;
            let up = f(&probe, evals);
            probe[i] = x[i] - h;
            let down = f(&probe, evals);
            probe[i] = x[i];
            g[i] = (up - down) / (2.0 * h);
        }
        g
    };

    let mut x = start.to_vec();
    let mut fx = f(&x, &mut evals);
    if !fx.is_finite() {
        return Minimum {
            x,
            value: fx,
            evaluations: evals,
            converged: false,
        };
    }
    let mut g = gradient(&x, &mut evals, &mut f);
    let mut inv_h = identity(dim);
    let mut converged = false;

    for _ in 0..options.max_iterations {
        if g.iter().any(|v| !v.is_finite()) {
            break;
        }
        if g.iter().fold(0.0_f64, |m, v| m.max(v.abs())) < options.gradient_tolerance {
            converged = true;
            break;
        }
        let mut dir: Vec<f64> = mat_vec(&inv_h, &g).iter().map(|v| -v).collect();
        let mut slope = dot(&dir, &g);
        if slope >= 0.0 {
            // lost descent; restart from steepest descent
            inv_h = identity(dim);
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&dir, &g);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let ft = f(&trial, &mut evals);
            if ft <= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            converged = true;
            break;
        };
        let g_new = gradient(&x_new, &mut evals, &mut f);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            update_inverse_hessian(&mut inv_h, &s, &y, sy);
        }
        let improvement = fx - f_new;
        x = x_new;
        g = g_new;
        fx = f_new;
        if improvement.abs() <= options.value_tolerance * fx.abs().max(1.0) {
            converged = true;
            break;
        }
    }

    Minimum {
        x,
        value: fx,
        evaluations: evals,
        converged,
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

/// `H ← (I − ρsyᵀ) H (I − ρysᵀ) + ρssᵀ`, `ρ = 1/(yᵀs)`.
fn update_inverse_hessian(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y);
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}
