/// g(x) = √(x² + ν²) − ν, a smooth stand-in for |x|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothClamp {
    pub nu: f64,
}

impl SmoothClamp {
    pub fn new(nu: f64) -> Self {
        assert!(nu > 0.0, "clamp width must be positive");
        Self { nu }
    }

    /// Written as x²/(√(x²+ν²)+ν) to avoid cancellation for |x| ≪ ν.
    #[inline]
    pub fn g(&self, x: f64) -> f64 {
        let r = x.hypot(self.nu);
        x * x / (r + self.nu)
    }

    #[inline]
    pub fn dg(&self, x: f64) -> f64 {
        x / x.hypot(self.nu)
    }

    #[inline]
    pub fn d2g(&self, x: f64) -> f64 {
        let r = x.hypot(self.nu);
        self.nu * self.nu / (r * r * r)
    }

    /// The y ≥ 0 with g(y) = v (v ≥ 0).
    #[inline]
    pub fn inverse(&self, v: f64) -> f64 {
        (v * v + 2.0 * v * self.nu).sqrt()
    }
}

/// (g, g′, g″) at x.
pub fn smooth_clamp(nu: f64, x: f64) -> (f64, f64, f64) {
    let c = SmoothClamp::new(nu);
    (c.g(x), c.dg(x), c.d2g(x))
}
