//! Adaptive Gauss–Kronrod (7/15) quadrature in one and two dimensions.

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integrates `f` over `[a, b]` by recursive bisection until the
/// Gauss–Kronrod error estimate of every piece is below its share of
/// `max(abs_tol, rel_tol · |total|)`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    let (whole, err) = gk15(&mut f, a, b);
    let mut pieces = vec![(a, b, whole, err)];
    for _ in 0..2000 {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let error: f64 = pieces.iter().map(|p| p.3).sum();
        if error <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        // Split the piece with the largest error.
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (l, le) = gk15(&mut f, lo, mid);
        let (r, re) = gk15(&mut f, mid, hi);
        pieces.push((lo, mid, l, le));
        pieces.push((mid, hi, r, re));
    }
    pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
    pieces.iter().map(|p| p.2).sum()
}

/// Iterated 2D integral `∫_{a0}^{a1} ∫_{b0}^{b1} f(u, v) dv du`.
pub fn integrate_2d<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    (a0, a1): (f64, f64),
    (b0, b1): (f64, f64),
    rel_tol: f64,
) -> f64 {
    integrate(
        |u| integrate(|v| f(u, v), b0, b1, rel_tol * 1e-2, 1e-300),
        a0,
        a1,
        rel_tol,
        1e-300,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_smooth() {
        let v = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-12, 0.0);
        assert!((v - (64.0 / 6.0 - 4.0)).abs() < 1e-12);
        let v = integrate(f64::sin, 0.0, std::f64::consts::PI, 1e-12, 0.0);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        let v = integrate(f64::sqrt, 0.0, 1.0, 1e-10, 0.0);
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn unit_sphere_area() {
        let a = integrate_2d(
            |theta, _phi| theta.sin(),
            (0.0, std::f64::consts::PI),
            (0.0, 2.0 * std::f64::consts::PI),
            1e-10,
        );
        assert!((a - 4.0 * std::f64::consts::PI).abs() < 1e-9);
    }
}
