//! Second-order forward-mode differentiation.
//!
//! A [`Jet`] carries a value together with its gradient and Hessian with
//! respect to a fixed set of `n` seed variables. Parametrizations written once
//! against `Jet` yield exact first and second parameter derivatives, which is
//! what the patch geometry needs.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Row-major `n x n`.
    pub hess: Vec<f64>,
}

impl Jet {
    pub fn constant(value: f64, n: usize) -> Self {
        Self {
            value,
            grad: vec![0.0; n],
            hess: vec![0.0; n * n],
        }
    }

    /// The `index`-th seed variable evaluated at `value`.
    pub fn variable(value: f64, index: usize, n: usize) -> Self {
        let mut jet = Self::constant(value, n);
        jet.grad[index] = 1.0;
        jet
    }

    /// Seeds all `point.len()` variables at once.
    pub fn seed(point: &[f64]) -> Vec<Jet> {
        let n = point.len();
        point
            .iter()
            .enumerate()
            .map(|(i, &v)| Self::variable(v, i, n))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn second(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.value`.
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet {
        let n = self.dim();
        let grad: Vec<f64> = self.grad.iter().map(|g| f1 * g).collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hess[i * n + j] = f1 * self.hess[i * n + j] + f2 * self.grad[i] * self.grad[j];
            }
        }
        Jet {
            value: f0,
            grad,
            hess,
        }
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn sqrt(&self) -> Jet {
        let r = self.value.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.value))
    }

    pub fn powi(&self, k: i32) -> Jet {
        let v = self.value;
        let kf = k as f64;
        self.chain(
            v.powi(k),
            kf * v.powi(k - 1),
            kf * (kf - 1.0) * v.powi(k - 2),
        )
    }

    pub fn recip(&self) -> Jet {
        let v = self.value;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            value: self.value * s,
            grad: self.grad.iter().map(|g| g * s).collect(),
            hess: self.hess.iter().map(|h| h * s).collect(),
        }
    }

    pub fn offset(&self, c: f64) -> Jet {
        let mut out = self.clone();
        out.value += c;
        out
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        Jet {
            value: self.value + rhs.value,
            grad: self.grad.iter().zip(&rhs.grad).map(|(a, b)| a + b).collect(),
            hess: self.hess.iter().zip(&rhs.hess).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        Jet {
            value: self.value - rhs.value,
            grad: self.grad.iter().zip(&rhs.grad).map(|(a, b)| a - b).collect(),
            hess: self.hess.iter().zip(&rhs.hess).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let n = self.dim();
        let (a, b) = (self.value, rhs.value);
        let grad = self
            .grad
            .iter()
            .zip(&rhs.grad)
            .map(|(ga, gb)| a * gb + b * ga)
            .collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                hess[k] = a * rhs.hess[k]
                    + b * self.hess[k]
                    + self.grad[i] * rhs.grad[j]
                    + rhs.grad[i] * self.grad[j];
            }
        }
        Jet {
            value: a * b,
            grad,
            hess,
        }
    }
}

impl Div for &Jet {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        self * &rhs.recip()
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($($tr:ident :: $m:ident),*) => {$(
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet { (&self).$m(&rhs) }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet { (&self).$m(rhs) }
        }
    )*};
}
forward_owned!(Add::add, Sub::sub, Mul::mul, Div::div);

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // f(u, v) = sin(u) * exp(v) / (1 + u^2)
    fn sample(p: &[Jet]) -> Jet {
        let n = p[0].dim();
        let denom = Jet::constant(1.0, n) + p[0].powi(2);
        &(&p[0].sin() * &p[1].exp()) / &denom
    }

    #[test]
    fn derivatives_match_central_differences() {
        let x = [0.7, -0.3];
        let jet = sample(&Jet::seed(&x));
        let f = |u: f64, v: f64| sample(&Jet::seed(&[u, v])).value;
        let h = 1e-4;
        let fu = (f(x[0] + h, x[1]) - f(x[0] - h, x[1])) / (2.0 * h);
        let fv = (f(x[0], x[1] + h) - f(x[0], x[1] - h)) / (2.0 * h);
        let fuv = (f(x[0] + h, x[1] + h) - f(x[0] + h, x[1] - h) - f(x[0] - h, x[1] + h)
            + f(x[0] - h, x[1] - h))
            / (4.0 * h * h);
        let fuu = (f(x[0] + h, x[1]) - 2.0 * f(x[0], x[1]) + f(x[0] - h, x[1])) / (h * h);
        assert!((jet.grad[0] - fu).abs() < 1e-7);
        assert!((jet.grad[1] - fv).abs() < 1e-7);
        assert!((jet.second(0, 1) - fuv).abs() < 1e-6);
        assert!((jet.second(1, 0) - fuv).abs() < 1e-6);
        assert!((jet.second(0, 0) - fuu).abs() < 1e-5);
    }

    #[test]
    fn sqrt_and_cos_chain() {
        let p = Jet::seed(&[2.0]);
        let r = p[0].sqrt();
        assert!((r.grad[0] - 0.5 / 2f64.sqrt()).abs() < 1e-15);
        assert!((r.second(0, 0) + 0.25 * 2f64.powf(-1.5)).abs() < 1e-15);
        let c = p[0].cos();
        assert!((c.second(0, 0) + 2f64.cos()).abs() < 1e-15);
    }
}
