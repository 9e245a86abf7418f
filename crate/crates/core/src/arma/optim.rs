//! Derivative-free simplex search with a quasi-Newton polish, used to
//! minimize the conditional-sum-of-squares objective.

pub(crate) struct OptimOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub converged: bool,
    /// Best objective value after each accepted improvement.
    #[cfg_attr(not(test), allow(dead_code))]
    pub trace: Vec<f64>,
}

const F_TOL: f64 = 1e-10;

/// Nelder-Mead with standard reflection/expansion/contraction coefficients.
pub(crate) fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    max_evals: usize,
) -> OptimOutcome {
    let d = x0.len();
    if d == 0 {
        let v = f(x0);
        return OptimOutcome {
            x: vec![],
            f: v,
            converged: true,
            trace: vec![v],
        };
    }
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    // initial simplex: x0 plus a perturbation along each axis
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let fx0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), fx0));
    for i in 0..d {
        let mut x = x0.to_vec();
        let step = (0.1 * x[i].abs()).max(0.025);
        x[i] += step;
        let fx = eval(&x, &mut evals);
        simplex.push((x, fx));
    }
    let mut trace = vec![simplex.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min)];

    let mut converged = false;
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[d].1;
        if (worst - best).abs() <= F_TOL * (best.abs() + F_TOL) && best.is_finite() {
            converged = true;
            break;
        }
        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; d];
        for (x, _) in &simplex[..d] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / d as f64;
            }
        }
        let second_worst = simplex[d - 1].1;
        let against = |from: &[f64], coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(from)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let reflected = against(&simplex[d].0, 1.0);
        let fr = eval(&reflected, &mut evals);
        if fr < best {
            let expanded = against(&simplex[d].0, 2.0);
            let fe = eval(&expanded, &mut evals);
            simplex[d] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < second_worst {
            simplex[d] = (reflected, fr);
        } else {
            let contracted = if fr < worst {
                against(&simplex[d].0, 0.5) // outside
            } else {
                against(&simplex[d].0, -0.5) // inside
            };
            let fc = eval(&contracted, &mut evals);
            if fc < worst.min(fr) {
                simplex[d] = (contracted, fc);
            } else {
                // shrink toward the best vertex
                let best_x = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    for (v, b) in vertex.0.iter_mut().zip(&best_x) {
                        *v = b + 0.5 * (*v - b);
                    }
                    vertex.1 = eval(&vertex.0.clone(), &mut evals);
                }
            }
        }
        let current_best = simplex.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
        if current_best < *trace.last().expect("trace non-empty") {
            trace.push(current_best);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    OptimOutcome {
        x: simplex[0].0.clone(),
        f: simplex[0].1,
        converged,
        trace,
    }
}

fn gradient(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], fx: f64) -> Vec<f64> {
    let d = x.len();
    let mut g = vec![0.0; d];
    let mut xp = x.to_vec();
    for i in 0..d {
        let h = 1e-6 * x[i].abs().max(1.0);
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = if fp.is_finite() && fm.is_finite() {
            (fp - fm) / (2.0 * h)
        } else if fp.is_finite() {
            (fp - fx) / h
        } else if fm.is_finite() {
            (fx - fm) / h
        } else {
            0.0
        };
    }
    g
}

/// BFGS with finite-difference gradients and Armijo backtracking, started
/// from a simplex-search solution. Stops when an iteration improves the
/// objective by less than 1e-10.
pub(crate) fn bfgs_polish(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    max_iters: usize,
) -> OptimOutcome {
    let d = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut trace = vec![fx];
    if d == 0 || !fx.is_finite() {
        return OptimOutcome {
            x,
            f: fx,
            converged: fx.is_finite(),
            trace,
        };
    }
    let mut h_inv: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut g = gradient(f, &x, fx);
    let mut converged = false;

    for _ in 0..max_iters {
        let mut dir: Vec<f64> = (0..d)
            .map(|i| -(0..d).map(|j| h_inv[i][j] * g[j]).sum::<f64>())
            .collect();
        let slope: f64 = dir.iter().zip(&g).map(|(p, q)| p * q).sum();
        if slope >= 0.0 {
            // not a descent direction; restart from steepest descent
            for (i, row) in h_inv.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = if i == j { 1.0 } else { 0.0 };
                }
                dir[i] = -g[i];
            }
        }
        let slope: f64 = dir.iter().zip(&g).map(|(p, q)| p * q).sum();
        if slope.abs() < 1e-16 {
            converged = true;
            break;
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand: Vec<f64> = x.iter().zip(&dir).map(|(a, p)| a + t * p).collect();
            let fc = f(&cand);
            if fc.is_finite() && fc <= fx + 1e-4 * t * slope {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            converged = true; // no improving step along a descent direction
            break;
        };
        let improvement = fx - f_new;
        let g_new = gradient(f, &x_new, f_new);

        // BFGS inverse-Hessian update
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        let s_norm: f64 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y_norm: f64 = yv.iter().map(|v| v * v).sum::<f64>().sqrt();
        if sy > 1e-12 * s_norm * y_norm {
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..d)
                .map(|i| (0..d).map(|j| h_inv[i][j] * yv[j]).sum::<f64>())
                .collect();
            let yhy: f64 = yv.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..d {
                for j in 0..d {
                    h_inv[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j]
                        - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }

        x = x_new;
        fx = f_new;
        g = g_new;
        if fx < *trace.last().expect("trace non-empty") {
            trace.push(fx);
        }
        if improvement < F_TOL {
            converged = true;
            break;
        }
    }
    OptimOutcome {
        x,
        f: fx,
        converged,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn nelder_mead_solves_quadratic() {
        let mut f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2);
        let out = nelder_mead(&mut f, &[0.0, 0.0], 4000);
        assert!(out.converged);
        assert!((out.x[0] - 3.0).abs() < 1e-4);
        assert!((out.x[1] + 1.0).abs() < 1e-4);
    }

    #[test]
    fn polish_reaches_rosenbrock_minimum() {
        let mut f = |x: &[f64]| rosenbrock(x);
        let nm = nelder_mead(&mut f, &[-1.2, 1.0], 4000);
        let out = bfgs_polish(&mut f, &nm.x, 300);
        assert!(out.f < 1e-8, "f = {}", out.f);
        assert!((out.x[0] - 1.0).abs() < 1e-3);
        assert!((out.x[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn accepted_objective_sequence_is_monotone() {
        let mut f = |x: &[f64]| rosenbrock(x);
        let nm = nelder_mead(&mut f, &[-1.2, 1.0], 4000);
        for w in nm.trace.windows(2) {
            assert!(w[1] <= w[0], "simplex trace increased: {:?}", w);
        }
        let polish = bfgs_polish(&mut f, &nm.x, 300);
        for w in polish.trace.windows(2) {
            assert!(w[1] <= w[0], "polish trace increased: {:?}", w);
        }
    }

    #[test]
    fn handles_infinite_regions() {
        // objective undefined left of the origin
        let mut f = |x: &[f64]| {
            if x[0] <= 0.0 {
                f64::INFINITY
            } else {
                (x[0].ln()).powi(2) + x[1] * x[1]
            }
        };
        let nm = nelder_mead(&mut f, &[3.0, 1.0], 4000);
        let out = bfgs_polish(&mut f, &nm.x, 200);
        assert!((out.x[0] - 1.0).abs() < 1e-3, "x = {:?}", out.x);
        assert!(out.x[1].abs() < 1e-3);
    }
}
