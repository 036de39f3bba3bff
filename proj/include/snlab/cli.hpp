#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "snlab/lattice.hpp"

namespace snlab {

// Exit codes of the command-line front end.
enum ExitCode : int { kExitPass = 0, kExitIo = 1, kExitCheckFailed = 2, kExitCap = 3 };

struct RunConfig {
    std::string category = "builtin:vec_z2";  // "builtin:NAME", a bare builtin name, or a file path
    int lx = 2;
    int ly = 2;
    std::string topology = "torus";  // torus | open
    double tol_alg = 1e-9;
    double tol_ent = 1e-7;
    std::uint64_t seed = 0;
    std::string out;  // report path; stdout when empty
    std::string format = "json";  // json | csv
    int threads = 1;
    double basis_cap = kDefaultBasisCap;

    // Throws ValidationError on non-positive tolerances or unknown choices.
    void validate() const;
    nlohmann::json to_json() const;
};

// Runs one invocation; args excludes the program name. Reports go to
// RunConfig::out or `out`, diagnostics to `err`. Returns an ExitCode.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace snlab
