/// Real polynomial with coefficients in ascending degree order.
#[derive(Debug, Clone, PartialEq)]
pub struct DensePolynomial {
    pub coeffs: Vec<f64>,
}

impl DensePolynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// Structural degree, counting trailing zeros; 0 for an empty polynomial.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// `P(x) / Q(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFunction {
    pub p: DensePolynomial,
    pub q: DensePolynomial,
}

impl RationalFunction {
    pub fn eval(&self, x: f64) -> f64 {
        self.p.eval(x) / self.q.eval(x)
    }
}
