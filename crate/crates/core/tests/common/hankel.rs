//! Bessel J0/Y0 polynomial approximations (Abramowitz & Stegun 9.4.1-9.4.3,
//! absolute error below 1e-7), used as an analytic oracle for the 2D
//! free-space Green's function.

use num_complex::Complex64;

pub fn bessel_j0_y0(x: f64) -> (f64, f64) {
    assert!(x > 0.0);
    if x <= 3.0 {
        let t = (x / 3.0).powi(2);
        let j0 = 1.0
            + t * (-2.2499997
                + t * (1.2656208 + t * (-0.3163866 + t * (0.0444479 + t * (-0.0039444 + t * 0.0002100)))));
        let y0 = 2.0 / std::f64::consts::PI * (x / 2.0).ln() * j0
            + 0.36746691
            + t * (0.60559366
                + t * (-0.74350384 + t * (0.25300117 + t * (-0.04261214 + t * (0.00427916 - t * 0.00024846)))));
        (j0, y0)
    } else {
        let u = 3.0 / x;
        let f0 = 0.79788456
            + u * (-0.00000077
                + u * (-0.00552740 + u * (-0.00009512 + u * (0.00137237 + u * (-0.00072805 + u * 0.00014476)))));
        let theta = x - std::f64::consts::FRAC_PI_4
            + u * (-0.04166397
                + u * (-0.00003954 + u * (0.00262573 + u * (-0.00054125 + u * (-0.00029333 + u * 0.00013558)))));
        let amp = f0 / x.sqrt();
        (amp * theta.cos(), amp * theta.sin())
    }
}

/// H0^(1)(x) = J0(x) + i Y0(x).
pub fn hankel0(x: f64) -> Complex64 {
    let (j, y) = bessel_j0_y0(x);
    Complex64::new(j, y)
}

/// Green's function of `∇²u + k²u = δ` with outgoing radiation: `-(i/4) H0^(1)(k r)`.
pub fn green_2d(k: f64, r: f64) -> Complex64 {
    -Complex64::new(0.0, 0.25) * hankel0(k * r)
}

#[cfg(test)]
#[test]
fn reference_values() {
    // scipy.special.j0 / y0
    let cases = [
        (0.5, 0.938469807240813, -0.444518733506707),
        (2.0, 0.223890779141236, 0.510375672649745),
        (3.0, -0.260051954901934, 0.376850010012790),
        (7.5, 0.266339657880378, 0.117313286148216),
    ];
    for (x, j, y) in cases {
        let (jj, yy) = bessel_j0_y0(x);
        assert!((jj - j).abs() < 2e-7 && (yy - y).abs() < 2e-7, "x={x}: {jj} {yy}");
    }
}
