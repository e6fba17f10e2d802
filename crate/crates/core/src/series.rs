// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

/// Which pipeline stage produced a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Exact,
    FcNoisy,
    PcNoisy,
    Mitigated,
    /// Unmitigated noisy run at a given noise level (ZNE demo).
    Noisy,
    ZneCorrected,
}

impl Variant {
    pub fn tag(&self) -> &'static str {
        match self {
            Variant::Exact => "exact",
            Variant::FcNoisy => "fc_noisy",
            Variant::PcNoisy => "pc_noisy",
            Variant::Mitigated => "mitigated",
            Variant::Noisy => "noisy",
            Variant::ZneCorrected => "zne_corrected",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub shots: Option<u64>,
    pub lambda: Option<f64>,
    pub seed: Option<u64>,
    pub noise_p2: Option<f64>,
}

/// Staggered magnetization against time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub n_spins: usize,
    pub variant: Variant,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl TimeSeries {
    pub fn new(n_spins: usize, variant: Variant, times: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(times.len(), values.len(), "times/values length mismatch");
        Self {
            n_spins,
            variant,
            times,
            values,
            provenance: Provenance::default(),
        }
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    pub fn times_strictly_increasing(&self) -> bool {
        self.times.windows(2).all(|w| w[0] < w[1])
    }

    pub fn same_grid(&self, other: &TimeSeries) -> bool {
        self.times == other.times
    }
}

/// Root-mean-square difference over the selected indices.
pub fn rmse(a: &[f64], b: &[f64], indices: &[usize]) -> f64 {
    if indices.is_empty() {
        return f64::NAN;
    }
    let ss: f64 = indices.iter().map(|&i| (a[i] - b[i]).powi(2)).sum();
    (ss / indices.len() as f64).sqrt()
}
