// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// The `audapt` command line. Returns the process exit code: 0 ok, 2 config,
// 3 data, 4 numerical, 5 I/O, 1 anything unexpected.

#pragma once

#include <string>
#include <vector>

namespace audapt::cli {

int run(int argc, const char* const* argv);
// `args` excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace audapt::cli
