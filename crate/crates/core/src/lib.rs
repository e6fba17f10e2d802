// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

pub mod compress;
pub mod lattice;
pub mod lsq;
pub mod mitigator;
pub mod runner;
pub mod series;
pub mod sim;
pub mod zne;
