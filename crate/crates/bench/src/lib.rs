//! Fixtures shared by the benchmarks.

use dispatch_core::model::{compute_shift_factors, parse_case, PowerSystem, ShiftFactorMatrix};
use dispatch_core::sampling::{select_samples, SampleSet, ValidationRecord};
use dispatch_core::synthetic::{generate, SyntheticConfig, SyntheticData};

pub const SIX_BUS: &str = include_str!("../../../cases/six_bus.json");

pub struct Fixture {
    pub system: PowerSystem,
    pub sf: ShiftFactorMatrix,
    pub data: SyntheticData,
}

impl Fixture {
    pub fn six_bus() -> Self {
        let system = parse_case(SIX_BUS).expect("bundled case parses");
        let sf = compute_shift_factors(&system).expect("bundled case is connected");
        let data = generate(&SyntheticConfig::default(), &system.vrg_capacities())
            .expect("default generator");
        Self { system, sf, data }
    }

    pub fn period(&self, t: usize) -> &ValidationRecord {
        &self.data.validation[t]
    }

    pub fn samples(&self, t: usize, n: usize) -> SampleSet {
        select_samples(&self.data.history, &self.period(t).forecast, n)
            .expect("history is nonempty")
            .clipped(&self.system.vrg_capacities())
    }
}
