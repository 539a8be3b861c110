use num_complex::Complex64;
use serde::Serialize;

use crate::diagram::{membership_margin, DiagramQuery, MEMBERSHIP_TOL};

/// Margins smaller than this are reported as tangencies.
pub const INCONCLUSIVE_MARGIN: f64 = 1e-6;

/// Which stability statement a verdict certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Condition {
    /// Per-mode membership with known eigenvalue pairing.
    #[serde(rename = "Prop4.1")]
    PairedModes,
    /// All generalized eigenvalues inside the diagram of the stiffest mode.
    #[serde(rename = "Thm4.4")]
    StiffestMode,
    /// All generalized eigenvalues inside the infinite diagram (commuting case).
    #[serde(rename = "Thm4.5")]
    Unconditional,
    /// Weighted field of values inside the mirrored diagram of the stiffest mode.
    #[serde(rename = "Thm5.3")]
    FovStiffestMode,
    /// Weighted field of values inside the mirrored infinite diagram.
    #[serde(rename = "Thm5.5-suff")]
    FovUnconditional,
    /// Generalized eigenvalues inside the infinite diagram (necessary).
    #[serde(rename = "Thm5.5-nec")]
    SpectrumUnconditional,
    /// Brute-force spectral radius of the amplification matrix.
    #[serde(rename = "SpectralRadius")]
    SpectralRadius,
    /// Real-interval bounds for the semi-discrete Fisher-Kolmogorov problem.
    #[serde(rename = "FKBounds")]
    IntervalBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct VerdictParams {
    pub p: usize,
    pub k: Option<f64>,
    pub q: Option<f64>,
    pub kappa: Option<f64>,
}

/// Outcome of one stability check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub condition: Condition,
    pub holds: bool,
    /// Smallest slack over the tested points; negative when violated.
    pub margin: f64,
    /// Worst point, present whenever the condition fails.
    pub witness: Option<[f64; 2]>,
    pub params: VerdictParams,
    pub inconclusive: bool,
    pub samples: usize,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub experimental: bool,
}

impl StabilityVerdict {
    /// Verdict from a finite set of slacks, each tagged with its point.
    pub fn from_margins(
        condition: Condition,
        params: VerdictParams,
        margins: impl IntoIterator<Item = (Complex64, f64)>,
    ) -> Self {
        let mut worst: Option<(Complex64, f64)> = None;
        let mut samples = 0;
        for (z, m) in margins {
            samples += 1;
            let m = if m.is_nan() { f64::NEG_INFINITY } else { m };
            if worst.is_none_or(|(_, w)| m < w) {
                worst = Some((z, m));
            }
        }
        let (point, margin) = worst.unwrap_or((Complex64::new(0.0, 0.0), f64::INFINITY));
        let holds = margin >= -MEMBERSHIP_TOL;
        Self {
            condition,
            holds,
            margin,
            witness: (!holds).then_some([point.re, point.im]),
            params,
            inconclusive: margin.abs() < INCONCLUSIVE_MARGIN,
            samples,
            experimental: false,
        }
    }

    /// Membership of every `mu` in the diagram `q`.
    pub fn membership(
        condition: Condition,
        params: VerdictParams,
        q: &DiagramQuery,
        mus: impl IntoIterator<Item = Complex64>,
    ) -> Self {
        Self::from_margins(
            condition,
            params,
            mus.into_iter().map(|mu| (mu, membership_margin(q, mu))),
        )
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.params.kappa = Some(kappa);
        self
    }

    pub fn mark_experimental(mut self) -> Self {
        self.experimental = true;
        self
    }

    pub fn witness_point(&self) -> Option<Complex64> {
        self.witness.map(|[re, im]| Complex64::new(re, im))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("verdict serialization cannot fail")
    }
}
