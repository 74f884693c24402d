// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

int main(int argc, char** argv) { return audapt::cli::run(argc, argv); }
