//! Fixtures shared by the benchmarks.

use kerrcav::{figure_preset, ClosedForm, CoherentWeights, FockTruncation, ModelParams, SweepSpec};

/// The time-sweep panel with Kerr terms and linear coupling.
pub fn reference_spec() -> SweepSpec {
    figure_preset("fig3b".parse().expect("known preset"))
}

pub fn reference_case() -> (ModelParams, FockTruncation) {
    let spec = reference_spec();
    let trunc = spec.truncation().expect("preset truncation");
    (spec.params, trunc)
}

pub fn reference_solution() -> (ClosedForm, CoherentWeights) {
    let (params, trunc) = reference_case();
    let cf = ClosedForm::new(&params, &trunc).expect("preset solves");
    (cf, CoherentWeights::new(&params, &trunc))
}
