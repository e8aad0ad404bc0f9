#![allow(dead_code)]

use nalgebra::DMatrix;

/// Eigenvalues of `-y'' + Σ_j (c_j e^{2πijx/a} + conj) y` on periodic (`shift = 0`) or
/// antiperiodic (`shift = 1`) functions, from a truncated Hill matrix in the
/// basis `e^{iπ(2n+shift)x/a}`. `coupling[j-1]` is the coefficient of `e^{2πijx/a}`.
pub fn hill_eigenvalues(a: f64, q0: f64, coupling: &[f64], shift: i64, size: i64) -> Vec<f64> {
    let dim = (2 * size + 1) as usize;
    let base = std::f64::consts::PI / a;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        let n = i as i64 - size;
        let kk = base * (2 * n + shift) as f64;
        m[(i, i)] = kk * kk + q0;
        for (j, &c) in coupling.iter().enumerate() {
            let off = j + 1;
            if i + off < dim {
                m[(i, i + off)] = c;
                m[(i + off, i)] = c;
            }
        }
    }
    let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Band edges `λ₀, μ₀, μ₁, λ₁, λ₂, …` of `q = 2cos(2x)`, `a = π` (Mathieu, q-parameter 1).
pub fn mathieu_edges(count: usize) -> Vec<f64> {
    let per = hill_eigenvalues(std::f64::consts::PI, 0.0, &[1.0], 0, 60);
    let anti = hill_eigenvalues(std::f64::consts::PI, 0.0, &[1.0], 1, 60);
    let mut edges = vec![per[0]];
    let (mut ip, mut ia) = (1, 0);
    let mut use_anti = true;
    while edges.len() < count {
        if use_anti {
            edges.push(anti[ia]);
            edges.push(anti[ia + 1]);
            ia += 2;
        } else {
            edges.push(per[ip]);
            edges.push(per[ip + 1]);
            ip += 2;
        }
        use_anti = !use_anti;
    }
    edges.truncate(count);
    edges
}

/// Airy `Ai(x)` and `Ai'(x)` from the Maclaurin series (fine for |x| ≤ 3).
pub fn airy_ai(x: f64) -> (f64, f64) {
    let c1 = 0.355_028_053_887_817_239_260_063_186_004_183_6;
    let c2 = 0.258_819_403_792_806_798_405_183_560_189_203_0;
    // f = Σ a_k x^{3k}, g = Σ b_k x^{3k+1}, a_{k+1} = a_k/((3k+2)(3k+3)), b_{k+1} = b_k/((3k+3)(3k+4))
    let (mut f, mut g, mut df, mut dg) = (0.0, 0.0, 0.0, 0.0);
    let (mut a, mut b) = (1.0, 1.0);
    let x3 = x * x * x;
    let (mut p, mut prev) = (1.0, 0.0);
    for k in 0..60 {
        let kf = k as f64;
        f += a * p;
        g += b * p * x;
        if k > 0 {
            df += a * 3.0 * kf * prev * x * x;
        }
        dg += b * (3.0 * kf + 1.0) * p;
        a /= (3.0 * kf + 2.0) * (3.0 * kf + 3.0);
        b /= (3.0 * kf + 3.0) * (3.0 * kf + 4.0);
        prev = p;
        p *= x3;
    }
    (c1 * f - c2 * g, c1 * df - c2 * dg)
}
