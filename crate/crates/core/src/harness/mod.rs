//! Monte Carlo experiments: BER sweeps, curve readout, input ablation, α
//! sweep, detector timing and training-loss logs, plus their CSV output.

mod experiments;
pub mod report;
mod sweep;

pub use experiments::{
    run_alpha_sweep, run_input_ablation, run_mse_log, run_timing_benchmark, AblationReport, AlphaCell, MseLog,
    TimingReport, READOUT_BER,
};
pub use sweep::{
    draw_block, interpolate_snr_at_ber, run_ber_sweep, sweep_chunk, BerCurve, BerPoint, SweepConfig, MIN_VECTORS,
};
