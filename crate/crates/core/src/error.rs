use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {grid} is below the anti-aliasing floor {floor} for truncation N={n}")]
    GridTooSmall { grid: usize, floor: usize, n: usize },

    #[error("spinor vectors live on different truncation boxes")]
    BoxMismatch,

    #[error("metric is not positive definite at epsilon={epsilon:?} (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { epsilon: Option<f64>, min_eigenvalue: f64 },

    #[error("tensor field violates the reality condition at mode {mode:?} (defect {defect:.3e})")]
    RealityViolation { mode: [i32; 3], defect: f64 },

    #[error("family is not axisymmetric: mode {mode:?} depends on x2 or x3")]
    NotAxisymmetric { mode: [i32; 3] },

    #[error("truncation box N={n} does not contain the support of h (needs N >= {needed})")]
    BoxTooSmall { n: usize, needed: usize },

    #[error("matrix is not special unitary (unitarity defect {unitarity:.3e}, det defect {det:.3e})")]
    NotSpecialUnitary { unitarity: f64, det: f64 },

    #[error("eigensolver failed on a {dim}x{dim} matrix: {reason}")]
    Eigensolver { dim: usize, reason: String },

    #[error("eigenpair residual {residual:.3e} exceeds bound {bound:.3e}")]
    EigenResidual { residual: f64, bound: f64 },

    #[error("spectrum has odd length {len}; cannot pair eigenvalues")]
    OddSpectrum { len: usize },

    #[error("pairing gap {gap:.3e} at index {index} exceeds tolerance {tol:.3e}")]
    PairingGap { index: usize, gap: f64, tol: f64 },

    #[error("charge-conjugation orthogonality broken at order {order}: residual {residual:.3e}")]
    SymmetryBreaking { order: usize, residual: f64 },

    #[error("unperturbed vector is not an eigenvector (residual {residual:.3e})")]
    NotAnEigenvector { residual: f64 },

    #[error("eigenvalue {lambda0} of the unperturbed operator has multiplicity {multiplicity}, expected 2")]
    Multiplicity { lambda0: f64, multiplicity: usize },

    #[error("assembly failed at epsilon={epsilon}: {source}")]
    SweepFailed {
        epsilon: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("metric spec: {0}")]
    Spec(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
