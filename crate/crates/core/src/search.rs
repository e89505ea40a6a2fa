//! Search primitives shared by the solvers and class checkers: a
//! Nelder-Mead polytope descent, lattice grids on the unit simplex, and a few
//! small vector helpers.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

pub(crate) fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc: f64, (x, y)| acc.max((x - y).abs()))
}

pub(crate) fn min_component(a: &[f64]) -> f64 {
    a.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Outcome of a [`nelder_mead`] run.
#[derive(Debug, Clone)]
pub(crate) struct Descent {
    pub x: Vec<f64>,
    pub iterations: usize,
}

/// Minimizes `f` from `x0` with the standard Nelder-Mead polytope method
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). Stops when the
/// best value drops to `target`, the polytope collapses, or after
/// `max_iters` iterations.
pub(crate) fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: f64,
    max_iters: usize,
    target: f64,
) -> Descent {
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += if p[i].abs() > 1.0 { step * p[i].abs() } else { step };
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut iterations = 0;
    while iterations < max_iters {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        if vals[0] <= target {
            break;
        }
        let spread = pts[1..]
            .iter()
            .map(|p| dist_inf(p, &pts[0]))
            .fold(0.0, f64::max);
        let scale = 1.0 + pts[0].iter().fold(0.0, |a: f64, x| a.max(x.abs()));
        if spread <= 1e-15 * scale {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64, worst: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(worst)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let reflected = along(1.0, &pts[n]);
        let fr = f(&reflected);
        if fr < vals[0] {
            let expanded = along(2.0, &pts[n]);
            let fe = f(&expanded);
            if fe < fr {
                pts[n] = expanded;
                vals[n] = fe;
            } else {
                pts[n] = reflected;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = reflected;
            vals[n] = fr;
        } else {
            let (contracted, fc) = if fr < vals[n] {
                let c = along(0.5, &pts[n]);
                let v = f(&c);
                (c, v)
            } else {
                let c = along(-0.5, &pts[n]);
                let v = f(&c);
                (c, v)
            };
            if fc < vals[n].min(fr) {
                pts[n] = contracted;
                vals[n] = fc;
            } else {
                let best = pts[0].clone();
                for i in 1..=n {
                    let shrunk: Vec<f64> = best
                        .iter()
                        .zip(&pts[i])
                        .map(|(b, p)| b + 0.5 * (p - b))
                        .collect();
                    vals[i] = f(&shrunk);
                    pts[i] = shrunk;
                }
            }
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .unwrap_or(0);
    Descent {
        x: pts[best].clone(),
        iterations,
    }
}

/// Number of lattice points `{x >= 0 : sum x = resolution}` in `dim`
/// coordinates, saturating at `usize::MAX`.
pub(crate) fn simplex_grid_size(dim: usize, resolution: usize) -> usize {
    // C(resolution + dim - 1, dim - 1)
    let k = dim.saturating_sub(1);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (resolution + k - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// Visits every point of the unit simplex whose coordinates are multiples
/// of `1 / resolution`, in reverse-lexicographic order of the integer
/// coordinates (the first vertex `(1, 0, .., 0)` comes first).
pub(crate) fn for_each_simplex_point<F: FnMut(&[f64])>(dim: usize, resolution: usize, mut f: F) {
    let mut counts = vec![0usize; dim];
    let mut point = vec![0.0; dim];
    fn rec<F: FnMut(&[f64])>(
        pos: usize,
        left: usize,
        res: usize,
        counts: &mut [usize],
        point: &mut [f64],
        f: &mut F,
    ) {
        let dim = counts.len();
        if pos + 1 == dim {
            counts[pos] = left;
            for (p, &c) in point.iter_mut().zip(counts.iter()) {
                *p = c as f64 / res as f64;
            }
            f(point);
            return;
        }
        for c in (0..=left).rev() {
            counts[pos] = c;
            rec(pos + 1, left - c, res, counts, point, f);
        }
    }
    rec(0, resolution, resolution, &mut counts, &mut point, &mut f);
}

/// Grid resolutions tried at each refinement level, `4, 8, 16, ...`.
pub(crate) fn level_resolution(level: u32) -> usize {
    1usize << (level + 1).min(40)
}

/// Euclidean covering radius of the simplex grid with the given resolution:
/// any simplex point is within this distance of a grid point whose support
/// lies inside its own.
pub(crate) fn simplex_mesh(dim: usize, resolution: usize) -> f64 {
    (dim as f64).sqrt() / resolution as f64
}

/// Maps unconstrained coordinates to the relative interior of the face of
/// the simplex spanned by `support` (softmax), writing a full-length point.
pub(crate) fn face_point(z: &[f64], support: &[usize], dim: usize, out: &mut Vec<f64>) {
    out.clear();
    out.resize(dim, 0.0);
    let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = z.iter().map(|x| (x - zmax).exp()).collect();
    let total: f64 = weights.iter().sum();
    for (&i, w) in support.iter().zip(&weights) {
        out[i] = w / total;
    }
}

/// Inverse of [`face_point`] for a point with positive entries on `support`.
pub(crate) fn face_coords(point: &[f64], support: &[usize]) -> Vec<f64> {
    support
        .iter()
        .map(|&i| point[i].max(1e-300).ln())
        .collect()
}

pub(crate) fn support_of(v: &[f64]) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, &x)| x != 0.0)
        .map(|(i, _)| i)
        .collect()
}
