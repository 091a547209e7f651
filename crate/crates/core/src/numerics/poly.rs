use num_complex::Complex64;

/// Characteristic polynomial `det(x I - M)` of a square real matrix by the
/// Faddeev-LeVerrier recursion. Coefficients are returned highest degree
/// first, leading coefficient 1.
pub fn characteristic_polynomial(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut coeffs = vec![1.0];
    let mut mk = vec![vec![0.0; n]; n];
    let mut c_prev = 1.0;
    for k in 1..=n {
        // M_k = M (M_{k-1} + c_{k-1} I)
        let mut inner = mk.clone();
        for (i, row) in inner.iter_mut().enumerate() {
            row[i] += c_prev;
        }
        mk = matmul(m, &inner);
        let trace: f64 = (0..n).map(|i| mk[i][i]).sum();
        let c = -trace / k as f64;
        coeffs.push(c);
        c_prev = c;
    }
    coeffs
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// All complex roots of a polynomial (highest degree first) by the
/// Durand-Kerner iteration, polished with Newton steps.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let first = coeffs.iter().position(|&c| c != 0.0);
    let Some(first) = first else {
        return Vec::new();
    };
    let lead = coeffs[first];
    let monic: Vec<Complex64> = coeffs[first..].iter().map(|&c| Complex64::new(c / lead, 0.0)).collect();
    let deg = monic.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let radius = 1.0 + monic[1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..deg).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..500 {
        let mut delta = 0.0f64;
        for i in 0..deg {
            let zi = roots[i];
            let mut denom = Complex64::new(1.0, 0.0);
            for (j, zj) in roots.iter().enumerate() {
                if j != i {
                    denom *= zi - zj;
                }
            }
            if denom.norm() == 0.0 {
                denom = Complex64::new(1e-12, 0.0);
            }
            let step = horner(&monic, zi) / denom;
            roots[i] = zi - step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * radius {
            break;
        }
    }
    let deriv: Vec<Complex64> = monic[..deg]
        .iter()
        .enumerate()
        .map(|(k, c)| c * (deg - k) as f64)
        .collect();
    for z in &mut roots {
        for _ in 0..3 {
            let d = horner(&deriv, *z);
            if d.norm() == 0.0 {
                break;
            }
            *z -= horner(&monic, *z) / d;
        }
    }
    roots
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fibonacci_matrix() {
        let p = characteristic_polynomial(&[vec![1.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(p, vec![1.0, -1.0, -1.0]);
        let mut roots: Vec<f64> = polynomial_roots(&p).iter().map(|z| z.re).collect();
        roots.sort_by(f64::total_cmp);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((roots[1] - phi).abs() < 1e-12);
        assert!((roots[0] + 1.0 / phi).abs() < 1e-12);
    }

    #[test]
    fn cubic_with_complex_pair() {
        // (x - 2)(x^2 + 1)
        let roots = polynomial_roots(&[1.0, -2.0, 1.0, -2.0]);
        let mut mods: Vec<f64> = roots.iter().map(|z| z.norm()).collect();
        mods.sort_by(f64::total_cmp);
        assert!((mods[0] - 1.0).abs() < 1e-10 && (mods[2] - 2.0).abs() < 1e-10);
    }
}
