//! Empirical grid over constant step sizes and accuracies.

use std::io::Write;

use bpdyn_core::dynamics::{run, State, StepConfig, StoppingRule};
use bpdyn_core::model::Instance;
use bpdyn_core::trace::TerminalStatus;
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub h: f64,
    pub eps: f64,
    /// First `k` with `‖w^(k)‖₁ ≤ (1+ε)·OPT`, or `None` on timeout.
    pub iterations: Option<u64>,
}

/// Runs Physarum from `y0` for every `(h, ε)` pair. Cells run in parallel;
/// the result is in row-major grid order (`h` outer, `ε` inner).
pub fn run_sweep(
    inst: &Instance,
    y0: &[f64],
    optimum: f64,
    hs: &[f64],
    epss: &[f64],
    max_iter: u64,
) -> bpdyn_core::Result<Vec<SweepCell>> {
    let grid: Vec<(f64, f64)> = hs
        .iter()
        .flat_map(|&h| epss.iter().map(move |&e| (h, e)))
        .collect();
    for &(h, eps) in &grid {
        StepConfig::physarum(h).validate()?;
        if !(eps > 0.0) {
            return Err(bpdyn_core::Error::BadEpsilon(eps));
        }
    }
    Ok(grid
        .par_iter()
        .map(|&(h, eps)| {
            let cfg = StepConfig::physarum(h);
            let stop = StoppingRule::gap(max_iter, eps, optimum);
            let trace = run(inst, State::physarum(y0.to_vec()), &cfg, &stop);
            let iterations = match trace.terminal_status {
                TerminalStatus::TargetReached => trace.last().map(|r| r.k),
                _ => None,
            };
            SweepCell { h, eps, iterations }
        })
        .collect())
}

/// `h,eps,iterations` with `timeout` for cells that never reached the target.
pub fn write_summary<W: Write>(cells: &[SweepCell], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["h", "eps", "iterations"])?;
    for c in cells {
        let it = c.iterations.map_or_else(|| "timeout".to_string(), |k| k.to_string());
        w.write_record([c.h.to_string(), c.eps.to_string(), it])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use bpdyn_core::model::appendix_a_state;

    #[test]
    fn grid_order_and_timeouts() {
        let (inst, y0) = appendix_a_state();
        let cells = run_sweep(&inst, &y0, 3.0, &[0.2, 0.05], &[0.5, 0.1], 2000).unwrap();
        let order: Vec<(f64, f64)> = cells.iter().map(|c| (c.h, c.eps)).collect();
        assert_eq!(order, vec![(0.2, 0.5), (0.2, 0.1), (0.05, 0.5), (0.05, 0.1)]);
        assert!(cells.iter().all(|c| c.iterations.is_some()));
        let short = run_sweep(&inst, &y0, 3.0, &[0.01], &[0.01], 3).unwrap();
        assert_eq!(short[0].iterations, None);
        let mut buf = Vec::new();
        write_summary(&short, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "h,eps,iterations\n0.01,0.01,timeout\n");
    }

    #[test]
    fn rejects_bad_grid() {
        let (inst, y0) = appendix_a_state();
        assert!(run_sweep(&inst, &y0, 3.0, &[1.5], &[0.1], 10).is_err());
        assert!(run_sweep(&inst, &y0, 3.0, &[0.1], &[0.0], 10).is_err());
    }
}
