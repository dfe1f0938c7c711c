/// Numerical knobs shared across the pipeline. Every tolerance that appears in
/// a contract or an error message lives here with its default, so the CLI can
/// surface all of them uniformly.
#[derive(Debug, Clone)]
pub struct Config {
    // boundary model
    /// Morse threshold: |V0''| at a critical point must exceed this.
    pub morse_tol: f64,
    /// Critical points are polished to this absolute accuracy in y.
    pub root_tol: f64,

    // classical flow
    /// Allowed |nu^2 + mu^2 + V0 - lambda| on integrated curves.
    pub energy_tol: f64,
    /// Refuse classification when lambda is this close to a critical value.
    pub cv_tol: f64,
    /// Trajectory terminates when within this distance of a radial point.
    pub capture_radius: f64,
    /// Offset of unstable-manifold seeds from the radial point.
    pub seed_eps: f64,
    /// Number of ring seeds used for source flow-outs.
    pub n_seed: usize,
    /// Integration horizon for bicharacteristics.
    pub max_time: f64,
    /// Relative tolerance for detecting r2/r1 in the positive integers.
    pub resonance_tol: f64,
    /// Near-resonances closer than this (relative) are flagged with a warning.
    pub resonance_warn: f64,

    // Legendre phases
    /// |y - y_c| below which the phase is evaluated from its jet instead of the ODE.
    pub jet_handoff: f64,
    /// Taylor order of the phase jet at the radial point.
    pub n_jet: usize,
    /// Allowed eikonal residual Phi^2 + Phi'^2 + V0 - lambda after continuation.
    pub eik_tol: f64,
    /// |dy/dt| below this along the Legendre curve counts as a fold.
    pub fold_tol: f64,

    // eigenfunction models
    /// Relative tail bound for truncated profile series.
    pub series_tol: f64,
    /// Largest mode index kept in center/oscillator expansions.
    pub j_max: usize,
    /// Manufactured-solution tolerance for the saddle transport solver.
    pub transport_tol: f64,
    /// Minimum resolved points per oscillation of exp(i nu/x) on any grid a
    /// field is evaluated or differentiated on.
    pub min_ppw: f64,

    // pairing
    /// Relative spread allowed between flux-pairing scales after extrapolation.
    pub flux_tol: f64,
    /// Smallest acceptable |diagonal| in the biorthogonalization.
    pub biorth_tol: f64,
    /// Relative misfit allowed when a field is checked against the modal
    /// form during trace extraction.
    pub fit_tol: f64,
    /// Default number of modes per channel in the S-matrix.
    pub j_s: usize,

    // oracle
    /// Relative residual at which the iterative solver stops.
    pub solver_tol: f64,
    /// Cap on total Krylov iterations.
    pub max_iter: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            morse_tol: 1e-8,
            root_tol: 1e-14,
            energy_tol: 1e-9,
            cv_tol: 1e-6,
            capture_radius: 1e-4,
            seed_eps: 1e-5,
            n_seed: 64,
            max_time: 1e3,
            resonance_tol: 1e-9,
            resonance_warn: 1e-3,
            jet_handoff: 1e-2,
            n_jet: 8,
            eik_tol: 1e-9,
            fold_tol: 1e-8,
            series_tol: 1e-10,
            j_max: 32,
            transport_tol: 1e-7,
            min_ppw: 8.0,
            flux_tol: 1e-3,
            biorth_tol: 1e-8,
            fit_tol: 2e-2,
            j_s: 4,
            solver_tol: 1e-8,
            max_iter: 4000,
        }
    }
}
