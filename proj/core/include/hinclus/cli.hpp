#pragma once

#include <string>
#include <vector>

namespace hinclus {

/// Entry point of the hinclus command-line tool; args excludes argv[0].
/// Returns the process exit status: 0 on success, 2 for input/data errors,
/// 1 for anything else.
int run_cli(const std::vector<std::string>& args);

}  // namespace hinclus
