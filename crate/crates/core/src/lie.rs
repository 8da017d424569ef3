//! Small dense matrices, stored row-major in `Vec<f64>`, and the exponential
//! of skew-symmetric matrices.

pub(crate) fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

pub(crate) fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

/// `[a, b] = ab − ba`.
pub(crate) fn commutator(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let ab = matmul(a, b, n);
    let ba = matmul(b, a, n);
    ab.iter().zip(&ba).map(|(x, y)| x - y).collect()
}

/// `Σ c_k m_k`.
pub(crate) fn lincomb(terms: &[(f64, &[f64])]) -> Vec<f64> {
    let len = terms[0].1.len();
    let mut out = vec![0.0; len];
    for (c, m) in terms {
        for (o, v) in out.iter_mut().zip(m.iter()) {
            *o += c * v;
        }
    }
    out
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `exp(a)` for skew-symmetric `a`: closed forms for `n ≤ 3`, scaling and
/// squaring with a Taylor core otherwise. The result is orthogonal to
/// round-off.
pub fn expm_skew(a: &[f64], n: usize) -> Vec<f64> {
    match n {
        1 => vec![1.0],
        2 => {
            let (s, c) = a[1].sin_cos();
            vec![c, s, -s, c]
        }
        3 => rodrigues(a),
        _ => scaling_squaring(a, n),
    }
}

fn rodrigues(a: &[f64]) -> Vec<f64> {
    let (w1, w2, w3) = (a[7], a[2], a[3]);
    let t2 = w1 * w1 + w2 * w2 + w3 * w3;
    let t = t2.sqrt();
    // sin t / t and (1 − cos t) / t², with series near zero
    let (c1, c2) = if t < 1e-4 {
        (
            1.0 - t2 / 6.0 + t2 * t2 / 120.0,
            0.5 - t2 / 24.0 + t2 * t2 / 720.0,
        )
    } else {
        (t.sin() / t, (1.0 - t.cos()) / t2)
    };
    let a2 = matmul(a, a, 3);
    let mut out = identity(3);
    for k in 0..9 {
        out[k] += c1 * a[k] + c2 * a2[k];
    }
    out
}

fn scaling_squaring(a: &[f64], n: usize) -> Vec<f64> {
    let norm = max_abs(a) * n as f64;
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let b: Vec<f64> = a.iter().map(|x| x * scale).collect();
    let mut out = identity(n);
    let mut term = identity(n);
    for k in 1..=16 {
        term = matmul(&term, &b, n);
        let inv = 1.0 / k as f64;
        term.iter_mut().for_each(|x| *x *= inv);
        for (o, t) in out.iter_mut().zip(&term) {
            *o += t;
        }
    }
    for _ in 0..squarings {
        out = matmul(&out, &out, n);
    }
    out
}

/// Truncated `dexp⁻¹_u(a) = a − ½[u, a] + (1/12)[u, [u, a]]`, sufficient for
/// fourth-order Munthe-Kaas stepping.
pub(crate) fn dexpinv(u: &[f64], a: &[f64], n: usize) -> Vec<f64> {
    let ua = commutator(u, a, n);
    let uua = commutator(u, &ua, n);
    lincomb(&[(1.0, a), (-0.5, &ua), (1.0 / 12.0, &uua)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn skew(n: usize, v: &[f64]) -> Vec<f64> {
        let mut a = vec![0.0; n * n];
        let mut it = v.iter();
        for i in 0..n {
            for j in i + 1..n {
                let x = *it.next().unwrap();
                a[i * n + j] = x;
                a[j * n + i] = -x;
            }
        }
        a
    }

    fn orth_err(m: &[f64], n: usize) -> f64 {
        let mut t = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                t[i * n + j] = m[j * n + i];
            }
        }
        let p = matmul(m, &t, n);
        max_abs(&lincomb(&[(1.0, &p), (-1.0, &identity(n))]))
    }

    proptest! {
        #[test]
        fn exp_of_skew_is_orthogonal(n in 2usize..6, v in proptest::collection::vec(-3.0f64..3.0, 10)) {
            let a = skew(n, &v);
            prop_assert!(orth_err(&expm_skew(&a, n), n) < 1e-13);
        }

        #[test]
        fn closed_forms_match_series(v in proptest::collection::vec(-2.0f64..2.0, 3)) {
            for n in [2usize, 3] {
                let a = skew(n, &v);
                let closed = expm_skew(&a, n);
                let series = scaling_squaring(&a, n);
                for (x, y) in closed.iter().zip(&series) {
                    prop_assert!((x - y).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn exp_of_opposite_is_inverse() {
        let n = 4;
        let a = skew(n, &[0.3, -1.2, 0.8, 2.0, -0.4, 0.9]);
        let m = matmul(
            &expm_skew(&a, n),
            &expm_skew(&a.iter().map(|x| -x).collect::<Vec<_>>(), n),
            n,
        );
        assert!(max_abs(&lincomb(&[(1.0, &m), (-1.0, &identity(n))])) < 1e-13);
    }

    #[test]
    fn rodrigues_small_angle() {
        let a = skew(3, &[1e-9, -2e-9, 3e-10]);
        let e = expm_skew(&a, 3);
        for k in 0..9 {
            let want = identity(3)[k] + a[k];
            assert!((e[k] - want).abs() < 1e-17);
        }
    }
}
