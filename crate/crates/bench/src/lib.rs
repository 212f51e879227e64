// Copyright 2026 The qlyap Authors
// SPDX-License-Identifier: Apache-2.0

//! Benchmarks for `qlyap`; see `benches/`.
