// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace morphlab {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid argument values, shape mismatches, out-of-range knobs.
class ParameterError : public Error {
public:
    using Error::Error;
};

// Non-finite intermediates or other numeric breakdowns.
class NumericError : public Error {
public:
    using Error::Error;
};

// Degenerate interpolation geometry (antipodal latents etc.).
class GeometryError : public Error {
public:
    using Error::Error;
};

// A model produced output violating its contract.
class ModelError : public Error {
public:
    using Error::Error;
};

// Training diverged or could not proceed.
class TrainingError : public Error {
public:
    using Error::Error;
};

// Missing or inconsistent experiment data (datasets, checkpoints, morph sets).
class DataError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace morphlab
