// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace avtp {

// Scene/config files that fail to parse or validate.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem-level failures (missing file, unwritable output dir).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid arguments are reported with std::invalid_argument; data-dependent
// failures (insufficient matches, all-miss candidate sets) with
// std::runtime_error.

}  // namespace avtp
