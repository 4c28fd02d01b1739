//! Periodic unit eigensequences of `x[n+2] = A_n x[n+1] + B_n x[n] + C_n` and
//! the triangular factor pair they induce.

use serde::Serialize;

use crate::expr::Num;

/// Threshold below which an eigensequence term counts as zero.
pub const UNIT_TOL: f64 = 1e-12;
/// Allowed drift of `r_{p+1}` from `r_1`.
pub const PERIOD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicLinearEq {
    pub a: Vec<Num>,
    pub b: Vec<Num>,
    pub c: Vec<Num>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EigenError {
    #[error("coefficient lists must share a period between 1 and 64 (got {0:?})")]
    Shape(Vec<usize>),
    #[error("quadratic has complex roots (discriminant {0})")]
    ComplexRoots(f64),
    #[error("quadratic degenerates: leading coefficient is zero")]
    DegenerateQuadratic,
    #[error("root index must be 0 or 1")]
    RootIndex,
    #[error("eigensequence term r_{0} vanishes")]
    ZeroEigenvalue(usize),
    #[error("eigensequence is not periodic: r_(p+1) differs from r_1 by {0}")]
    NotPeriodic(f64),
}

impl PeriodicLinearEq {
    pub fn new(a: Vec<Num>, b: Vec<Num>, c: Vec<Num>) -> Result<PeriodicLinearEq, EigenError> {
        let p = a.len();
        if p == 0 || p > 64 || b.len() != p || c.len() != p {
            return Err(EigenError::Shape(vec![a.len(), b.len(), c.len()]));
        }
        Ok(PeriodicLinearEq { a, b, c })
    }

    /// Homogeneous equation with `C ≡ 0`.
    pub fn homogeneous(a: Vec<Num>, b: Vec<Num>) -> Result<PeriodicLinearEq, EigenError> {
        let c = vec![Num::int(0); a.len()];
        PeriodicLinearEq::new(a, b, c)
    }

    pub fn period(&self) -> usize {
        self.a.len()
    }

    fn at(v: &[Num], n: usize) -> &Num {
        &v[n % v.len()]
    }

    /// Direct iteration from `x0, x1`, returning `x_0..=x_steps`.
    pub fn iterate(&self, x0: f64, x1: f64, steps: usize) -> Vec<f64> {
        let mut xs = vec![x0, x1];
        for n in 0..steps.saturating_sub(1) {
            let next = Self::at(&self.a, n).to_f64() * xs[n + 1]
                + Self::at(&self.b, n).to_f64() * xs[n]
                + Self::at(&self.c, n).to_f64();
            xs.push(next);
        }
        xs.truncate(steps + 1);
        xs
    }
}

/// `α_j, β_j` for `j = 0..=p+1`, from `v[j+2] = A_j v[j+1] + B_j v[j]` seeded
/// with `(0, 1)` and `(1, 0)`. Exact when the coefficients are.
pub fn eigenseq_tables(eq: &PeriodicLinearEq) -> (Vec<Num>, Vec<Num>) {
    let run = |v0: i64, v1: i64| {
        let mut v = vec![Num::int(v0), Num::int(v1)];
        for j in 0..eq.period() {
            let next = &(PeriodicLinearEq::at(&eq.a, j) * &v[j + 1]) + &(PeriodicLinearEq::at(&eq.b, j) * &v[j]);
            v.push(next);
        }
        v
    };
    (run(0, 1), run(1, 0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenFactorization {
    #[serde(skip)]
    pub eq: PeriodicLinearEq,
    #[serde(serialize_with = "nums")]
    pub alpha: Vec<Num>,
    #[serde(serialize_with = "nums")]
    pub beta: Vec<Num>,
    /// `(q2, q1, q0)` of `q2 r^2 + q1 r + q0`.
    #[serde(serialize_with = "nums")]
    pub quad: Vec<Num>,
    /// Both roots, ascending.
    pub roots: [f64; 2],
    pub root_index: usize,
    /// `r_1..r_p`.
    pub r_seq: Vec<f64>,
    /// Per-period growth of the factor `t`.
    pub growth_factor: f64,
}

fn nums<S: serde::Serializer>(v: &[Num], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

impl EigenFactorization {
    /// `r_n` for `n ≥ 1`, extended periodically.
    pub fn r(&self, n: usize) -> f64 {
        assert!(n >= 1, "eigensequence starts at r_1");
        self.r_seq[(n - 1) % self.r_seq.len()]
    }

    /// `q2 r^2 + q1 r + q0` in conventional notation.
    pub fn quadratic_text(&self) -> String {
        let mut out = String::new();
        for (coef, power) in self.quad.iter().zip(["r^2", "r", ""]) {
            if coef.is_zero_within(0.0) {
                continue;
            }
            let negative = coef.to_f64() < 0.0;
            let magnitude = coef.abs();
            let digits = if magnitude == Num::int(1) && !power.is_empty() {
                String::new()
            } else {
                magnitude.to_string()
            };
            if out.is_empty() {
                out.push_str(if negative { "-" } else { "" });
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            out.push_str(&digits);
            out.push_str(power);
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }

    /// Whether `x1 = r_1 x0`, which makes the factor `t` vanish.
    pub fn is_special(&self, x0: f64, x1: f64) -> bool {
        (x1 - self.r(1) * x0).abs() <= 1e-12 * (1.0 + x0.abs().max(x1.abs()))
    }
}

/// Builds the unit eigensequence from root `root_index` (0 = smaller) of
/// `α_p r² + (β_p − α_{p+1}) r − β_{p+1}` and checks that it is periodic.
pub fn eigensequence(eq: &PeriodicLinearEq, root_index: usize) -> Result<EigenFactorization, EigenError> {
    if root_index > 1 {
        return Err(EigenError::RootIndex);
    }
    let p = eq.period();
    let (alpha, beta) = eigenseq_tables(eq);
    let quad = vec![
        alpha[p].clone(),
        &beta[p] - &alpha[p + 1],
        -beta[p + 1].clone(),
    ];
    let [q2, q1, q0] = [quad[0].to_f64(), quad[1].to_f64(), quad[2].to_f64()];
    if q2.abs() <= UNIT_TOL {
        return Err(EigenError::DegenerateQuadratic);
    }
    let disc = q1 * q1 - 4.0 * q2 * q0;
    if disc < 0.0 {
        return Err(EigenError::ComplexRoots(disc));
    }
    // Cancellation-free pair of roots.
    let sq = disc.sqrt();
    let big = -0.5 * (q1 + q1.signum() * sq);
    let (r_a, r_b) = if big == 0.0 { (0.0, 0.0) } else { (big / q2, q0 / big) };
    let roots = if r_a <= r_b { [r_a, r_b] } else { [r_b, r_a] };

    let mut r_seq = vec![roots[root_index]];
    for j in 1..=p {
        let prev = r_seq[j - 1];
        if prev.abs() <= UNIT_TOL {
            return Err(EigenError::ZeroEigenvalue(j));
        }
        let next = PeriodicLinearEq::at(&eq.a, j - 1).to_f64() + PeriodicLinearEq::at(&eq.b, j - 1).to_f64() / prev;
        r_seq.push(next);
    }
    let wrap = r_seq.pop().unwrap();
    let drift = (wrap - r_seq[0]).abs();
    if drift > PERIOD_TOL * (1.0 + r_seq[0].abs()) {
        return Err(EigenError::NotPeriodic(drift));
    }
    let product_r: f64 = r_seq.iter().product();
    let product_b: f64 = eq.b.iter().map(Num::to_f64).product();
    let sign = if p.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(EigenFactorization {
        eq: eq.clone(),
        alpha,
        beta,
        quad,
        roots,
        root_index,
        r_seq,
        growth_factor: sign * product_b / product_r,
    })
}

/// `x_0..=x_steps` from the triangular pair
/// `t[n+1] = C_{n-1} - B_{n-1} t[n] / r_n`, `x[n+1] = r_{n+1} x[n] + t[n+1]`,
/// starting from `t_1 = x_1 - r_1 x_0`.
pub fn iterate_factor_pair(fac: &EigenFactorization, x0: f64, x1: f64, steps: usize) -> Vec<f64> {
    let mut xs = vec![x0];
    if steps == 0 {
        return xs;
    }
    xs.push(x1);
    let mut t = x1 - fac.r(1) * x0;
    for n in 1..steps {
        let b = PeriodicLinearEq::at(&fac.eq.b, n - 1).to_f64();
        let c = PeriodicLinearEq::at(&fac.eq.c, n - 1).to_f64();
        t = c - b * t / fac.r(n);
        xs.push(fac.r(n + 1) * xs[n] + t);
    }
    xs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<Num> {
        v.iter().map(|&x| Num::int(x)).collect()
    }

    #[test]
    fn constant_coefficients_reduce_to_characteristic_polynomial() {
        let eq = PeriodicLinearEq::homogeneous(ints(&[1]), ints(&[1])).unwrap();
        let fac = eigensequence(&eq, 1).unwrap();
        assert_eq!(fac.quadratic_text(), "r^2 - r - 1");
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((fac.roots[1] - golden).abs() < 1e-12);
        assert!((fac.r(1) - golden).abs() < 1e-12);
    }

    #[test]
    fn complex_roots_are_rejected() {
        let eq = PeriodicLinearEq::homogeneous(ints(&[0]), ints(&[-1])).unwrap();
        assert!(matches!(eigensequence(&eq, 0), Err(EigenError::ComplexRoots(_))));
    }

    #[test]
    fn zero_root_is_not_a_unit() {
        let eq = PeriodicLinearEq::homogeneous(ints(&[1]), ints(&[0])).unwrap();
        assert!(matches!(eigensequence(&eq, 0), Err(EigenError::ZeroEigenvalue(1))));
    }

    #[test]
    fn factor_pair_matches_inhomogeneous_iteration() {
        let eq = PeriodicLinearEq::new(ints(&[3, 1]), ints(&[1, 2]), ints(&[1, -1])).unwrap();
        let fac = eigensequence(&eq, 1).unwrap();
        let direct = eq.iterate(0.5, -0.25, 20);
        let paired = iterate_factor_pair(&fac, 0.5, -0.25, 20);
        for (a, b) in direct.iter().zip(&paired) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }
}
