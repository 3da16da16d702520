use anyhow::Result;
use clap::error::ErrorKind;
use clap::CommandFactory;
use hsr_core::gradcheck::{check_mcg_gradients, McgCheckConfig};
use hsr_core::metrics::format_sig9;

use crate::args::{AttnArgs, Cli, Format};
use crate::paths;

/// Returns whether every check passed.
pub fn run(a: &AttnArgs) -> Result<bool> {
    let o_shape = (a.o_n.unwrap_or(a.n), a.o_d.unwrap_or(a.d));
    if o_shape != (a.n, a.d) {
        let mut cmd = Cli::command();
        cmd.build();
        cmd.find_subcommand_mut("attn-check")
            .expect("attn-check is registered")
            .clone()
            .error(
                ErrorKind::ArgumentConflict,
                format!(
                    "O must match P: P is {}x{} but O is {}x{}",
                    a.n, a.d, o_shape.0, o_shape.1
                ),
            )
            .exit();
    }
    let report = check_mcg_gradients(&McgCheckConfig {
        trials: a.trials,
        max_n: a.n,
        max_d: a.d,
        gamma: a.gamma,
        step: a.step,
        seed: a.seed,
    })?;
    let pass = report.passes(a.tolerance);
    let text = match a.format {
        Format::Csv => format!(
            "trials,max_rel_err_p,max_rel_err_o,max_rel_err_gamma,max_row_sum_err,identity_at_zero,pass\n{},{},{},{},{},{},{}\n",
            report.trials,
            format_sig9(report.max_rel_err_p),
            format_sig9(report.max_rel_err_o),
            format_sig9(report.max_rel_err_gamma),
            format_sig9(report.max_row_sum_err),
            report.identity_at_zero,
            pass
        ),
        Format::Json => {
            let mut v = serde_json::to_value(&report)?;
            v["pass"] = pass.into();
            paths::to_json(&v)?
        }
    };
    paths::write_output(None, &text)?;
    Ok(pass)
}
