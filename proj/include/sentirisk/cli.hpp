// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sentirisk {

/// Exit codes: 0 success, 1 usage error, 2 data validation error,
/// 3 runtime or numeric failure. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sentirisk
