//! Dense univariate polynomials: exact rational and complex floating.

use nalgebra::{DMatrix, Schur};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::action::C64;
use crate::error::{Error, Result};

/// Polynomial with `BigRational` coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RPoly(pub Vec<BigRational>);

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact rational value of a finite double.
pub fn rat_f64(v: f64) -> Result<BigRational> {
    BigRational::from_float(v).ok_or_else(|| Error::InvalidInput(format!("non-finite value {v}")))
}

impl RPoly {
    pub fn zero() -> Self {
        RPoly(Vec::new())
    }

    pub fn constant(c: BigRational) -> Self {
        RPoly(vec![c]).trimmed()
    }

    pub fn trimmed(mut self) -> Self {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.iter().rposition(|c| !c.is_zero())
    }

    pub fn coeff(&self, p: usize) -> BigRational {
        self.0.get(p).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, o: &RPoly) -> RPoly {
        let n = self.0.len().max(o.0.len());
        RPoly((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect()).trimmed()
    }

    pub fn scale(&self, s: &BigRational) -> RPoly {
        RPoly(self.0.iter().map(|c| c * s).collect()).trimmed()
    }

    pub fn mul(&self, o: &RPoly) -> RPoly {
        if self.0.is_empty() || o.0.is_empty() {
            return RPoly::zero();
        }
        let mut out = vec![BigRational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RPoly(out).trimmed()
    }

    pub fn deriv(&self) -> RPoly {
        RPoly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
        .trimmed()
    }

    /// `p(w + s)` as a polynomial in `w`.
    pub fn shift(&self, s: &BigRational) -> RPoly {
        let mut out = RPoly::zero();
        let base = RPoly(vec![s.clone(), BigRational::one()]);
        for c in self.0.iter().rev() {
            out = out.mul(&base).add(&RPoly::constant(c.clone()));
        }
        out
    }

    pub fn eval_f64(&self, w: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * w + c.to_f64().unwrap_or(f64::NAN))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

/// Polynomial with complex coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CPoly(pub Vec<C64>);

impl CPoly {
    pub fn from_real(c: &[f64]) -> Self {
        CPoly(c.iter().map(|v| C64::new(*v, 0.0)).collect())
    }

    /// `Π (Λ − r)`
    pub fn from_roots(roots: &[C64]) -> Self {
        roots.iter().fold(CPoly(vec![C64::new(1.0, 0.0)]), |p, r| {
            p.mul(&CPoly(vec![-r, C64::new(1.0, 0.0)]))
        })
    }

    pub fn degree(&self) -> usize {
        self.0.iter().rposition(|c| c.norm() > 0.0).unwrap_or(0)
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.0.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * x + c)
    }

    pub fn deriv(&self) -> CPoly {
        CPoly(self.0.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect())
    }

    pub fn add(&self, o: &CPoly) -> CPoly {
        let n = self.0.len().max(o.0.len());
        let z = C64::new(0.0, 0.0);
        CPoly((0..n).map(|i| *self.0.get(i).unwrap_or(&z) + *o.0.get(i).unwrap_or(&z)).collect())
    }

    pub fn scale(&self, s: C64) -> CPoly {
        CPoly(self.0.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, o: &CPoly) -> CPoly {
        if self.0.is_empty() || o.0.is_empty() {
            return CPoly(Vec::new());
        }
        let mut out = vec![C64::new(0.0, 0.0); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        CPoly(out)
    }

    /// Simultaneous Aberth–Ehrlich iteration; fallback when QR stalls.
    fn aberth(&self) -> Result<Vec<C64>> {
        let n = self.degree();
        let lead = self.0[n];
        let radius = (0..n).map(|k| (self.0[k] / lead).norm().powf(1.0 / (n - k) as f64)).fold(0.0, f64::max).max(1e-3);
        let d = self.deriv();
        let mut z: Vec<C64> = (0..n)
            .map(|k| C64::from_polar(radius, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64))
            .collect();
        for _ in 0..500 {
            let mut moved = 0.0f64;
            for i in 0..n {
                let ratio = self.eval(z[i]) / d.eval(z[i]);
                let rep: C64 = (0..n).filter(|j| *j != i).map(|j| (z[i] - z[j]).inv()).sum();
                let w = ratio / (1.0 - ratio * rep);
                if w.re.is_finite() && w.im.is_finite() {
                    z[i] -= w;
                    moved = moved.max(w.norm() / z[i].norm().max(1e-300));
                }
            }
            if moved < 1e-15 {
                break;
            }
        }
        // clustered roots converge linearly; the iterate is still the best estimate
        if z.iter().all(|r| r.re.is_finite() && r.im.is_finite()) {
            Ok(z)
        } else {
            Err(Error::NonConvergence("polynomial roots".into()))
        }
    }

    /// All roots: companion-matrix eigenvalues, then Newton polishing.
    pub fn roots(&self) -> Result<Vec<C64>> {
        let scale = self.0.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let n = self
            .0
            .iter()
            .rposition(|c| c.norm() > 1e-14 * scale)
            .ok_or(Error::InvalidInput("zero polynomial".into()))?;
        if n == 0 {
            return Ok(Vec::new());
        }
        let lead = self.0[n];
        let mut m = DMatrix::<C64>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = C64::new(1.0, 0.0);
        }
        for i in 0..n {
            m[(i, n - 1)] = -self.0[i] / lead;
        }
        let trimmed = CPoly(self.0[..=n].to_vec());
        let eig: Vec<C64> = match Schur::try_new(m, 4.0 * f64::EPSILON, 5000).and_then(|s| s.eigenvalues()) {
            Some(e) => e.iter().copied().collect(),
            None => trimmed.aberth()?,
        };
        let d = trimmed.deriv();
        Ok(eig
            .into_iter()
            .map(|r0| {
                let mut r = r0;
                for _ in 0..8 {
                    let dv = d.eval(r);
                    if dv.norm() == 0.0 {
                        break;
                    }
                    let step = trimmed.eval(r) / dv;
                    let nr = r - step;
                    if trimmed.eval(nr).norm() > trimmed.eval(r).norm() {
                        break;
                    }
                    r = nr;
                    if step.norm() < 1e-16 * r.norm().max(1.0) {
                        break;
                    }
                }
                r
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn shift_and_derivative() {
        let p = RPoly(vec![rat(1, 1), rat(0, 1), rat(3, 1)]);
        let q = p.shift(&rat(1, 2));
        assert_eq!(q, RPoly(vec![rat(7, 4), rat(3, 1), rat(3, 1)]));
        assert_eq!(p.deriv(), RPoly(vec![rat(0, 1), rat(6, 1)]));
    }

    #[test]
    fn roots_of_known_quartic() {
        let want = [C64::new(0.5, 0.0), C64::new(-0.5, 0.0), C64::new(1.0, 2.0), C64::new(-3.0, 0.1)];
        let p = CPoly::from_roots(&want);
        let mut got = p.roots().unwrap();
        for w in want {
            let (i, best) = got
                .iter()
                .enumerate()
                .map(|(i, r)| (i, (r - w).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!(best < 1e-12, "{w}");
            got.remove(i);
        }
    }

    proptest! {
        #[test]
        fn roots_reconstruct_polynomial(re in proptest::collection::vec(-3.0f64..3.0, 1..7), im in proptest::collection::vec(-3.0f64..3.0, 7)) {
            let roots: Vec<C64> = re.iter().zip(&im).map(|(a, b)| C64::new(*a, *b)).collect();
            let p = CPoly::from_roots(&roots);
            let got = p.roots().unwrap();
            prop_assert_eq!(got.len(), roots.len());
            let q = CPoly::from_roots(&got);
            for (a, b) in p.0.iter().zip(&q.0) {
                prop_assert!((a - b).norm() < 1e-7 * (1.0 + a.norm()));
            }
        }

        #[test]
        fn rational_product_evaluates_exactly(a in proptest::collection::vec(-20i64..20, 1..5), b in proptest::collection::vec(-20i64..20, 1..5), w in -4i64..4) {
            let pa = RPoly(a.iter().map(|v| rat(*v, 3)).collect());
            let pb = RPoly(b.iter().map(|v| rat(*v, 5)).collect());
            let ev = |p: &RPoly| p.shift(&rat(w, 1)).coeff(0);
            prop_assert_eq!(ev(&pa.mul(&pb)), ev(&pa) * ev(&pb));
        }
    }
}
