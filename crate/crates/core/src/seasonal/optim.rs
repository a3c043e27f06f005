//! Derivative-free local minimisation (Nelder–Mead on a box).

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NelderMead {
    pub initial_step: f64,
    pub f_tol: f64,
    pub x_tol: f64,
    pub max_evaluations: usize,
    pub lower: f64,
    pub upper: f64,
}

impl NelderMead {
    /// Minimises `f` starting from `x0`. Points outside `[lower, upper]^d`
    /// are projected onto the box before evaluation.
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, x0: &[f64]) -> Minimum {
        let d = x0.len();
        let clamp = |x: &mut Vec<f64>| {
            for v in x.iter_mut() {
                *v = v.clamp(self.lower, self.upper);
            }
        };
        let mut evals = 0usize;
        let mut eval = |x: &[f64], evals: &mut usize| {
            *evals += 1;
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
        let mut start = x0.to_vec();
        clamp(&mut start);
        let f0 = eval(&start, &mut evals);
        simplex.push((start.clone(), f0));
        for i in 0..d {
            let mut p = start.clone();
            // step inward when the start sits on the upper face
            p[i] = if p[i] + self.initial_step <= self.upper {
                p[i] + self.initial_step
            } else {
                p[i] - self.initial_step
            };
            clamp(&mut p);
            let fp = eval(&p, &mut evals);
            simplex.push((p, fp));
        }

        let mut converged = false;
        while evals < self.max_evaluations {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = simplex[0].1;
            let worst = simplex[d].1;
            let spread = simplex
                .iter()
                .flat_map(|(p, _)| p.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0_f64, f64::max);
            if (worst - best).abs() <= self.f_tol * (1.0 + best.abs()) && spread <= self.x_tol {
                converged = true;
                break;
            }

            let mut centroid = vec![0.0; d];
            for (p, _) in &simplex[..d] {
                for (c, v) in centroid.iter_mut().zip(p) {
                    *c += v / d as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                let mut x: Vec<f64> = centroid
                    .iter()
                    .zip(&simplex[d].0)
                    .map(|(c, w)| c + t * (w - c))
                    .collect();
                clamp(&mut x);
                x
            };

            let xr = along(-1.0);
            let fr = eval(&xr, &mut evals);
            if fr < simplex[0].1 {
                let xe = along(-2.0);
                let fe = eval(&xe, &mut evals);
                simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[d - 1].1 {
                simplex[d] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < simplex[d].1 {
                let x = along(-0.5);
                let v = eval(&x, &mut evals);
                (x, v)
            } else {
                let x = along(0.5);
                let v = eval(&x, &mut evals);
                (x, v)
            };
            if fc < simplex[d].1.min(fr) {
                simplex[d] = (xc, fc);
                continue;
            }
            // shrink toward the best vertex
            let best_x = simplex[0].0.clone();
            for (p, fp) in simplex.iter_mut().skip(1) {
                for (v, b) in p.iter_mut().zip(&best_x) {
                    *v = b + 0.5 * (*v - b);
                }
                *fp = eval(p, &mut evals);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, value) = simplex.swap_remove(0);
        Minimum {
            x,
            value,
            evaluations: evals,
            converged,
        }
    }
}
