
/// Which power of `(|ξ|²+1)` a [`FracSymbol`] takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolRole {
    /// `(|ξ|²+1)^{s/2}`, the symbol of `(-Δ+1)^{s/2}`.
    Full,
    /// `(|ξ|²+1)^{s/4}`, its square root.
    Half,
}

/// Symbol of the fractional Klein-Gordon operator of order `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracSymbol {
    pub s: f64,
    pub role: SymbolRole,
}

impl FracSymbol {
    pub fn full(s: f64) -> Self {
        Self { s, role: SymbolRole::Full }
    }

    pub fn half(s: f64) -> Self {
        Self { s, role: SymbolRole::Half }
    }

    fn exponent(&self) -> f64 {
        match self.role {
            SymbolRole::Full => self.s / 2.0,
            SymbolRole::Half => self.s / 4.0,
        }
    }

    /// Value at `|ξ|² = r2`.
    #[inline]
    pub fn at_sq(&self, r2: f64) -> f64 {
        (r2 + 1.0).powf(self.exponent())
    }

    /// Value at a frequency vector of any length.
    pub fn value(&self, xi: &[f64]) -> f64 {
        self.at_sq(xi.iter().map(|x| x * x).sum())
    }
}

/// `(|ξ|²+1)^{s/2}` or `(|ξ|²+1)^{s/4}` at the frequency `xi`.
pub fn frac_symbol_value(xi: &[f64], s: f64, role: SymbolRole) -> f64 {
    FracSymbol { s, role }.value(xi)
}

/// The frequency shell `{ξ : |(|ξ|²+1)^{1/2} − λ^{1/s}| ≤ 1}`.
///
/// Membership is closed (`≤`). Every member satisfies `|ξ| ≤ λ + 2` for `s ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusSpec {
    pub lam: f64,
    pub s: f64,
}

impl AnnulusSpec {
    pub fn new(lam: f64, s: f64) -> Self {
        Self { lam, s }
    }

    /// Center of the shell in the `(|ξ|²+1)^{1/2}` variable.
    pub fn center(&self) -> f64 {
        self.lam.powf(1.0 / self.s)
    }

    #[inline]
    pub fn contains_sq(&self, r2: f64) -> bool {
        ((r2 + 1.0).sqrt() - self.center()).abs() <= 1.0
    }

    pub fn contains(&self, xi: &[f64]) -> bool {
        self.contains_sq(xi.iter().map(|x| x * x).sum())
    }
}
