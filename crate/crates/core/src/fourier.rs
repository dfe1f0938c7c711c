/// Finite real Fourier series on a circle of given circumference. All
/// derivatives are exact (mode-by-mode differentiation), which keeps
/// differentiation noise out of every downstream tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    /// (mode number k, cosine coefficient, sine coefficient), k >= 0.
    pub terms: Vec<(u32, f64, f64)>,
    /// Base angular frequency 2*pi / circumference.
    pub omega0: f64,
}

impl FourierSeries {
    pub fn new(terms: Vec<(u32, f64, f64)>, circumference: f64) -> Self {
        assert!(circumference > 0.0, "circumference must be positive");
        FourierSeries {
            terms,
            omega0: std::f64::consts::TAU / circumference,
        }
    }

    pub fn zero(circumference: f64) -> Self {
        FourierSeries::new(Vec::new(), circumference)
    }

    pub fn max_mode(&self) -> u32 {
        self.terms.iter().map(|t| t.0).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.1 == 0.0 && t.2 == 0.0)
    }

    /// n-th derivative at y. Differentiation rotates (cos, sin) by n*pi/2 and
    /// scales by (k*omega0)^n; cos(k theta) / sin(k theta) come from the
    /// Chebyshev-style trigonometric recurrence.
    pub fn derivative(&self, y: f64, n: u32) -> f64 {
        let kmax = self.max_mode() as usize;
        // cos(k w y), sin(k w y) for k = 0..=kmax by recurrence
        let theta = self.omega0 * y;
        let (s1, c1) = theta.sin_cos();
        let mut cos_k = Vec::with_capacity(kmax + 1);
        let mut sin_k = Vec::with_capacity(kmax + 1);
        cos_k.push(1.0);
        sin_k.push(0.0);
        if kmax >= 1 {
            cos_k.push(c1);
            sin_k.push(s1);
            for k in 2..=kmax {
                cos_k.push(2.0 * c1 * cos_k[k - 1] - cos_k[k - 2]);
                sin_k.push(2.0 * c1 * sin_k[k - 1] - sin_k[k - 2]);
            }
        }
        let mut acc = 0.0;
        for &(k, c, s) in &self.terms {
            let (ck, sk) = (cos_k[k as usize], sin_k[k as usize]);
            let scale = (k as f64 * self.omega0).powi(n as i32);
            // d^n cos = scale * cos(. + n pi/2), d^n sin = scale * sin(. + n pi/2)
            let (dc, ds) = match n % 4 {
                0 => (ck, sk),
                1 => (-sk, ck),
                2 => (-ck, -sk),
                _ => (sk, -ck),
            };
            if k == 0 {
                if n == 0 {
                    acc += c; // constant term; sine part of k=0 vanishes identically
                }
            } else {
                acc += scale * (c * dc + s * ds);
            }
        }
        acc
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.derivative(y, 0)
    }

    /// Taylor coefficients f^(j)(y0)/j! for j = 0..=order.
    pub fn taylor(&self, y0: f64, order: usize) -> Vec<f64> {
        let mut fact = 1.0;
        (0..=order)
            .map(|j| {
                if j > 0 {
                    fact *= j as f64;
                }
                self.derivative(y0, j as u32) / fact
            })
            .collect()
    }
}
