//! One-dimensional quadrature rules and graded panel layouts.

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_on(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|t| half * t).collect(),
    )
}

/// Panel breakpoints on `[a, b]`, graded geometrically towards the ends that
/// are flagged, down to panels of width `min_width`, and with no panel wider
/// than `max_width`.
pub fn graded_breakpoints(
    a: f64,
    b: f64,
    grade_left: bool,
    grade_right: bool,
    ratio: f64,
    min_width: f64,
    max_width: f64,
) -> Vec<f64> {
    assert!(b > a && ratio > 0.0 && ratio < 1.0 && min_width > 0.0);
    let len = b - a;
    let mut pts = vec![a, b];
    if grade_left {
        let mut w = 0.5 * len * ratio;
        while w > min_width {
            pts.push(a + w);
            w *= ratio;
        }
        pts.push(a + w.max(min_width));
    }
    if grade_right {
        let mut w = 0.5 * len * ratio;
        while w > min_width {
            pts.push(b - w);
            w *= ratio;
        }
        pts.push(b - w.max(min_width));
    }
    if grade_left || grade_right {
        pts.push(0.5 * (a + b));
    }
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup_by(|x, y| (*x - *y).abs() <= f64::EPSILON * x.abs().max(y.abs()));
    let mut out = Vec::with_capacity(pts.len());
    for win in pts.windows(2) {
        let (lo, hi) = (win[0], win[1]);
        let pieces = ((hi - lo) / max_width).ceil().max(1.0) as usize;
        for k in 0..pieces {
            out.push(lo + (hi - lo) * k as f64 / pieces as f64);
        }
    }
    out.push(b);
    out
}

/// Composite Gauss rule over consecutive breakpoints.
pub fn composite_gauss(breaks: &[f64], per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for win in breaks.windows(2) {
        let (x, w) = gauss_on(win[0], win[1], per_panel);
        nodes.extend(x);
        weights.extend(w);
    }
    (nodes, weights)
}
