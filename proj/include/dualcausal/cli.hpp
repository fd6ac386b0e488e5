#pragma once

#include <optional>
#include <ostream>
#include <string>

#include "dualcausal/config.hpp"

namespace dcl {

struct CliOptions {
    std::string command; // generate | train | eval | ablate | sweep | scm-verify
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir_override;
    std::string variant_override;
    std::string fixtures_dir = "data"; // scm-verify inputs
    std::size_t random_models = 200;   // scm-verify battery size
};

// Runs one command. Returns 0 on success; on any module error prints the
// message to `err`, removes artifacts written during the failed run, and
// returns 1.
int dispatch(const CliOptions& opts, std::ostream& out, std::ostream& err);

} // namespace dcl
