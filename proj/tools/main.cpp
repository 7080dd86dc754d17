// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return svcgraph::cli::run(argc, argv, std::cout, std::cerr); }
